//! End-to-end fit / evaluate run over one binary series.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimation::{fit, fit_trajectory, FitOptions, ParamTrajectory, SlotScheme};
use crate::evaluation::{spline, EvalReport, PredictionRun, DEFAULT_KNOT_COUNTS};
use crate::model::{ModelKind, ModelParams};
use crate::series::BinarySeries;

#[derive(Debug, Clone)]
pub struct FitEvalConfig {
    pub slots: usize,
    pub models: Vec<ModelKind>,
    pub knot_counts: Vec<usize>,
    pub fit: FitOptions,
    /// Score every slot with parameters fitted on all evaluated data instead
    /// of the out-of-sample protocol.
    pub in_sample: bool,
}

impl FitEvalConfig {
    pub fn new(slots: usize) -> Self {
        Self {
            slots,
            models: ModelKind::ALL.to_vec(),
            knot_counts: DEFAULT_KNOT_COUNTS.to_vec(),
            fit: FitOptions::default(),
            in_sample: false,
        }
    }

    fn validate(&self, series_len: usize) -> Result<SlotScheme> {
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if let Some(k) = self.knot_counts.iter().find(|&&k| k < 3) {
            return Err(Error::Config(format!("knot counts must be >= 3, got {k}")));
        }
        if self.slots < 2 {
            return Err(Error::Config(format!("need at least 2 slots, got {}", self.slots)));
        }
        let needed = 2 * self.slots;
        if series_len < needed {
            return Err(Error::InsufficientData {
                needed,
                got: series_len,
            });
        }
        let scheme = SlotScheme::new(self.slots, series_len)?;
        let evaluated = scheme.evaluation_range().len();
        if let Some(&k) = self.knot_counts.iter().max() {
            if evaluated < spline::min_length(k) {
                // Smallest N whose evaluation range can hold the largest knot count.
                let per_slot = spline::min_length(k).div_ceil(self.slots - 1);
                return Err(Error::InsufficientData {
                    needed: per_slot * self.slots,
                    got: series_len,
                });
            }
        }
        Ok(scheme)
    }
}

#[derive(Debug)]
pub struct ModelOutcome {
    pub kind: ModelKind,
    pub trajectory: ParamTrajectory,
    /// Predictions over the evaluation range.
    pub predictions: Vec<f64>,
}

#[derive(Debug)]
pub struct FitEvalOutput {
    pub scheme: SlotScheme,
    pub report: EvalReport,
    pub models: Vec<ModelOutcome>,
}

pub fn run_fit_evaluate(series: &BinarySeries, config: &FitEvalConfig) -> Result<FitEvalOutput> {
    let scheme = config.validate(series.len())?;
    let mut runs = Vec::with_capacity(config.models.len());
    let mut trajectories = Vec::with_capacity(config.models.len());
    for &kind in &config.models {
        log::info!("fitting {kind} over {} slots", scheme.slots());
        let trajectory = fit_trajectory(kind, series, &scheme, &config.fit)?;
        let run = if config.in_sample {
            let all = fit(kind, series, scheme.evaluation_range().end, &config.fit)?;
            PredictionRun::in_sample(series, scheme, &all.theta_hat)?
        } else {
            PredictionRun::out_of_sample(series, scheme, &trajectory, config.fit.execution)?
        };
        runs.push((kind, run));
        trajectories.push(trajectory);
    }
    let report = EvalReport::build(series, &scheme, &runs, &config.knot_counts, config.fit.execution)?;
    let models = runs
        .into_iter()
        .zip(trajectories)
        .map(|((kind, run), trajectory)| ModelOutcome {
            kind,
            trajectory,
            predictions: run.evaluated().to_vec(),
        })
        .collect();
    Ok(FitEvalOutput {
        scheme,
        report,
        models,
    })
}

/// Per-slot parameter table, one row per (model, slot).
pub fn write_trajectories_csv<'a, W: Write>(
    trajectories: impl IntoIterator<Item = &'a ParamTrajectory>,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "model,slot,training_end,p0,gamma_star,beta,a1,a,log_likelihood,iterations,converged,degenerate,error"
    )?;
    for t in trajectories {
        for sf in &t.per_slot {
            let end = t.scheme.training_end(sf.slot);
            match &sf.result {
                Ok(r) => {
                    let params = match r.theta_hat {
                        ModelParams::Approx(p) => {
                            format!("{},{},{},,", p.p0(), p.gamma_star(), p.beta())
                        }
                        ModelParams::Polya(p) => format!(",,,{},{}", p.a1(), p.a()),
                    };
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},",
                        t.kind, sf.slot, end, params, r.log_likelihood, r.iterations, r.converged, r.degenerate
                    )?;
                }
                Err(e) => {
                    let msg = e.to_string().replace([',', '\n'], ";");
                    writeln!(out, "{},{},{},,,,,,,,,,{}", t.kind, sf.slot, end, msg)?;
                }
            }
        }
    }
    Ok(())
}

/// `n, xi_{n+1}` and one prediction column per model over the evaluation range.
pub fn write_predictions_csv<W: Write>(series: &BinarySeries, output: &FitEvalOutput, mut out: W) -> Result<()> {
    let mut header = vec!["n".to_string(), "xi_next".to_string()];
    header.extend(output.models.iter().map(|m| m.kind.name().to_string()));
    writeln!(out, "{}", header.join(","))?;
    let eval = output.scheme.evaluation_range();
    let mut line = String::new();
    for (i, n) in eval.enumerate() {
        line.clear();
        line.push_str(&format!("{n},{}", series.bits()[n]));
        for m in &output.models {
            line.push_str(&format!(",{}", m.predictions[i]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_series, ApproxParams};

    #[test]
    fn sizing_errors_name_the_minimum() {
        let s = BinarySeries::from_bits(vec![1, 0, 1]).unwrap();
        let cfg = FitEvalConfig::new(2);
        match run_fit_evaluate(&s, &cfg) {
            Err(Error::InsufficientData { needed, .. }) => assert_eq!(needed, 4),
            other => panic!("{other:?}"),
        }
        let s = BinarySeries::from_bits(vec![1, 0, 1, 0, 1, 1, 0, 0]).unwrap();
        match run_fit_evaluate(&s, &cfg) {
            Err(Error::InsufficientData { needed, got }) => {
                assert_eq!(got, 8);
                assert_eq!(needed, 108);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let s = simulate_series(&ApproxParams::no_fashion(0.5).unwrap().into(), 400, 1);
        let mut cfg = FitEvalConfig::new(4);
        cfg.models.clear();
        assert!(matches!(run_fit_evaluate(&s, &cfg), Err(Error::Config(_))));
        let mut cfg = FitEvalConfig::new(4);
        cfg.knot_counts = vec![2];
        assert!(matches!(run_fit_evaluate(&s, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn report_shape() {
        let s = simulate_series(&ApproxParams::complete(0.4, 0.7, 0.95).unwrap().into(), 3000, 8);
        let mut cfg = FitEvalConfig::new(5);
        cfg.fit.grid_points = 5;
        let out = run_fit_evaluate(&s, &cfg).unwrap();
        assert_eq!(out.report.ss_rel.len(), 4);
        assert_eq!(out.report.mse_table.len(), 7);
        assert!(out.report.mse_table.iter().all(|r| r.values.len() == 4));
        assert!(out.report.ss_rel.iter().all(|&v| v > 0.0));
        assert_eq!(out.models[0].predictions.len(), 4 * 600);

        let mut buf = Vec::new();
        write_trajectories_csv(out.models.iter().map(|m| &m.trajectory), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 4);
        assert!(text.lines().all(|l| l.split(',').count() == 13));
    }
}
