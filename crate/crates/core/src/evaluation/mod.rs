//! Prediction-quality metrics.
//!
//! Everything here looks only at prediction indices `n` in
//! `[L, S*L)` with `L = floor(N/S)`: slot 0 is training-only and observations
//! past `S*L` are ignored.

pub mod report;
pub mod spline;

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimation::{FitResult, ParamTrajectory, SlotScheme};
use crate::exec::{self, Execution};
use crate::model::{predict_range, ModelParams};
use crate::series::BinarySeries;

pub use report::{EvalReport, MseRow};
pub use spline::{smooth, SmoothedCurve};

/// Default knot counts of the smoothed-curve comparison.
pub const DEFAULT_KNOT_COUNTS: [usize; 6] = [3, 5, 10, 20, 30, 50];

/// Predictions `psi_hat_n` aligned with a series: `psi(n)` predicts `xi_{n+1}`.
#[derive(Debug, Clone)]
pub struct PredictionRun<'a> {
    series: &'a BinarySeries,
    scheme: SlotScheme,
    start: usize,
    psi_hat: Vec<f64>,
}

impl<'a> PredictionRun<'a> {
    /// `psi_hat[i]` is the prediction for index `start + i`; it must cover the
    /// whole evaluation range.
    pub fn new(series: &'a BinarySeries, scheme: SlotScheme, start: usize, psi_hat: Vec<f64>) -> Result<Self> {
        let eval = scheme.evaluation_range();
        if scheme.len() != series.len() {
            return Err(Error::Config("slot scheme does not match the series length".into()));
        }
        if start > eval.start || start + psi_hat.len() < eval.end {
            return Err(Error::Domain(format!(
                "predictions cover {}..{} but evaluation needs {}..{}",
                start,
                start + psi_hat.len(),
                eval.start,
                eval.end
            )));
        }
        if let Some(bad) = psi_hat.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Numeric(format!("prediction {bad} is not a probability")));
        }
        Ok(Self {
            series,
            scheme,
            start,
            psi_hat,
        })
    }

    /// Slot `s` predicted with the parameters fitted on slots `0..s`.
    pub fn out_of_sample(
        series: &'a BinarySeries,
        scheme: SlotScheme,
        trajectory: &ParamTrajectory,
        execution: Execution,
    ) -> Result<Self> {
        let mut params = Vec::with_capacity(scheme.slots() - 1);
        for s in 1..scheme.slots() {
            let fit: &FitResult = trajectory
                .get(s)
                .ok_or_else(|| Error::Config(format!("trajectory has no fit for slot {s}")))?
                .as_ref()
                .map_err(|e| Error::Numeric(format!("slot {s} could not be fitted: {e}")))?;
            params.push(fit.theta_hat);
        }
        let chunks = exec::map_range(execution, params.len(), |i| {
            let r = scheme.slot_predictions(i + 1);
            predict_range(&params[i], series.bits(), r.start, r.end)
        });
        let eval = scheme.evaluation_range();
        Self::new(series, scheme, eval.start, chunks.concat())
    }

    /// One parameter set over the whole evaluation range.
    pub fn in_sample(series: &'a BinarySeries, scheme: SlotScheme, params: &ModelParams) -> Result<Self> {
        let eval = scheme.evaluation_range();
        let psi = predict_range(params, series.bits(), eval.start, eval.end);
        Self::new(series, scheme, eval.start, psi)
    }

    pub fn scheme(&self) -> &SlotScheme {
        &self.scheme
    }

    pub fn series(&self) -> &BinarySeries {
        self.series
    }

    pub fn psi(&self, n: usize) -> f64 {
        self.psi_hat[n - self.start]
    }

    /// Predictions over the evaluation range.
    pub fn evaluated(&self) -> &[f64] {
        let eval = self.scheme.evaluation_range();
        &self.psi_hat[eval.start - self.start..eval.end - self.start]
    }
}

/// Most frequent bit among `xi_1..xi_{s*L}`; ties give 1.
pub fn majority_value(series: &BinarySeries, scheme: &SlotScheme, s: usize) -> u8 {
    let end = scheme.training_end(s);
    let ones = series.bits()[..end].iter().filter(|&&b| b == 1).count();
    u8::from(2 * ones >= end)
}

/// Baseline error of the past-majority predictor over slots `1..S`.
fn majority_error(series: &BinarySeries, scheme: &SlotScheme) -> f64 {
    let bits = series.bits();
    let mut ones_before = bits[..scheme.slot_len()].iter().filter(|&&b| b == 1).count();
    let mut total = 0.0;
    for s in 1..scheme.slots() {
        let end = scheme.training_end(s);
        let m = u8::from(2 * ones_before >= end);
        let slot = &bits[scheme.slot_predictions(s)];
        total += slot.iter().filter(|&&b| b != m).count() as f64;
        ones_before += slot.iter().filter(|&&b| b == 1).count();
    }
    total
}

fn ratio_pct(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        f64::INFINITY
    } else {
        100.0 * numerator / denominator
    }
}

/// Relative squared error against the past-majority baseline, in percent.
/// A perfect predictor gives `+inf`.
pub fn ss_rel(run: &PredictionRun<'_>) -> f64 {
    let scheme = run.scheme();
    let bits = run.series().bits();
    let eval = scheme.evaluation_range();
    let model: f64 = eval
        .clone()
        .zip(run.evaluated())
        .map(|(n, &p)| (f64::from(bits[n]) - p).powi(2))
        .sum();
    ratio_pct(majority_error(run.series(), scheme), model)
}

/// The a-posteriori best constant `mean(xi_{L+1}..xi_N)`.
pub fn posterior_constant(series: &BinarySeries, scheme: &SlotScheme) -> f64 {
    let tail = &series.bits()[scheme.slot_len()..];
    tail.iter().filter(|&&b| b == 1).count() as f64 / tail.len() as f64
}

/// SS_rel of the a-posteriori best constant.
pub fn theoretical_value(series: &BinarySeries, scheme: &SlotScheme) -> f64 {
    let psi_bar = posterior_constant(series, scheme);
    let bits = series.bits();
    let model: f64 = bits[scheme.evaluation_range()]
        .iter()
        .map(|&b| (f64::from(b) - psi_bar).powi(2))
        .sum();
    ratio_pct(majority_error(series, scheme), model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Smoothing {
    Raw,
    Knots(usize),
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::Raw => f.write_str("no smooth"),
            Smoothing::Knots(k) => write!(f, "k = {k}"),
        }
    }
}

impl Serialize for Smoothing {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Observed curve `x_{n+1}` over the evaluation range, raw or smoothed.
pub fn observed_curve(series: &BinarySeries, scheme: &SlotScheme, smoothing: Smoothing) -> Result<Vec<f64>> {
    let raw: Vec<f64> = series.bits()[scheme.evaluation_range()]
        .iter()
        .map(|&b| f64::from(b))
        .collect();
    apply(raw, smoothing)
}

fn apply(raw: Vec<f64>, smoothing: Smoothing) -> Result<Vec<f64>> {
    match smoothing {
        Smoothing::Raw => Ok(raw),
        Smoothing::Knots(k) => smooth(&raw, k).map(|c| c.values),
    }
}

fn mean_squared_gap(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64
}

/// MSE between the (possibly smoothed) observed and predicted curves.
pub fn mse_smoothed(run: &PredictionRun<'_>, smoothing: Smoothing) -> Result<f64> {
    let x = observed_curve(run.series(), run.scheme(), smoothing)?;
    let y = apply(run.evaluated().to_vec(), smoothing)?;
    Ok(mean_squared_gap(&x, &y))
}

/// MSE against an already prepared observed curve.
pub(crate) fn mse_against(observed: &[f64], run: &PredictionRun<'_>, smoothing: Smoothing) -> Result<f64> {
    let y = apply(run.evaluated().to_vec(), smoothing)?;
    Ok(mean_squared_gap(observed, &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fixture() -> (BinarySeries, SlotScheme) {
        let s = BinarySeries::from_bits(vec![1, 1, 1, 0]).unwrap();
        let scheme = SlotScheme::new(2, 4).unwrap();
        (s, scheme)
    }

    #[test]
    fn majority_examples() {
        let s = BinarySeries::from_bits(vec![1; 8]).unwrap();
        let sc = SlotScheme::new(2, 8).unwrap();
        assert_eq!(majority_value(&s, &sc, 1), 1);

        let s = BinarySeries::from_bits(vec![1, 0, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        let sc = SlotScheme::new(2, 16).unwrap();
        assert_eq!(majority_value(&s, &sc, 1), 0);

        let s = BinarySeries::from_bits(vec![1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(majority_value(&s, &sc, 1), 1);
    }

    #[test]
    fn ss_rel_hand_example() {
        let (s, sc) = fixture();
        let run = PredictionRun::new(&s, sc, 2, vec![0.75, 0.8]).unwrap();
        // numerator 1, denominator 0.0625 + 0.64
        assert_abs_diff_eq!(ss_rel(&run), 100.0 / 0.7025, epsilon = 1e-12);
        assert_abs_diff_eq!(ss_rel(&run), 142.35, epsilon = 0.01);
    }

    #[test]
    fn theoretical_hand_example() {
        let (s, sc) = fixture();
        assert_eq!(posterior_constant(&s, &sc), 0.5);
        assert_abs_diff_eq!(theoretical_value(&s, &sc), 200.0, epsilon = 1e-12);

        let ones = BinarySeries::from_bits(vec![1; 10]).unwrap();
        let sc = SlotScheme::new(2, 10).unwrap();
        assert_eq!(theoretical_value(&ones, &sc), f64::INFINITY);
    }

    #[test]
    fn majority_predictor_scores_exactly_100() {
        let bits = vec![0, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 1];
        let s = BinarySeries::from_bits(bits).unwrap();
        let sc = SlotScheme::new(3, 12).unwrap();
        let psi: Vec<f64> = (1..3)
            .flat_map(|slot| std::iter::repeat_n(f64::from(majority_value(&s, &sc, slot)), 4))
            .collect();
        let run = PredictionRun::new(&s, sc, 4, psi).unwrap();
        assert_eq!(ss_rel(&run), 100.0);
    }

    #[test]
    fn perfect_prediction_is_infinite() {
        let s = BinarySeries::from_bits(vec![1, 0, 1, 0, 1, 1]).unwrap();
        let sc = SlotScheme::new(3, 6).unwrap();
        let psi: Vec<f64> = s.bits()[2..6].iter().map(|&b| f64::from(b)).collect();
        let run = PredictionRun::new(&s, sc, 2, psi).unwrap();
        assert_eq!(ss_rel(&run), f64::INFINITY);
        assert_eq!(mse_smoothed(&run, Smoothing::Raw).unwrap(), 0.0);
    }

    #[test]
    fn coverage_is_checked() {
        let (s, sc) = fixture();
        assert!(PredictionRun::new(&s, sc, 3, vec![0.5]).is_err());
        assert!(PredictionRun::new(&s, sc, 2, vec![0.5]).is_err());
        assert!(PredictionRun::new(&s, sc, 2, vec![0.5, 1.5]).is_err());
        assert!(PredictionRun::new(&s, sc, 0, vec![0.5; 4]).is_ok());
    }

    #[test]
    fn tail_beyond_s_times_l_is_ignored() {
        // N = 7, S = 3, L = 2: the last observation never enters SS_rel or MSE.
        let a = BinarySeries::from_bits(vec![1, 0, 1, 1, 0, 1, 0]).unwrap();
        let b = BinarySeries::from_bits(vec![1, 0, 1, 1, 0, 1, 1]).unwrap();
        let sc = SlotScheme::new(3, 7).unwrap();
        let psi = vec![0.3, 0.6, 0.2, 0.9];
        let ra = PredictionRun::new(&a, sc, 2, psi.clone()).unwrap();
        let rb = PredictionRun::new(&b, sc, 2, psi).unwrap();
        assert_eq!(ss_rel(&ra), ss_rel(&rb));
        assert_eq!(
            mse_smoothed(&ra, Smoothing::Raw).unwrap(),
            mse_smoothed(&rb, Smoothing::Raw).unwrap()
        );
    }

    #[test]
    fn raw_mse_against_a_coin_flip() {
        let bits: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let s = BinarySeries::from_bits(bits).unwrap();
        let sc = SlotScheme::new(4, 40).unwrap();
        let run = PredictionRun::new(&s, sc, 10, vec![0.5; 30]).unwrap();
        assert_eq!(mse_smoothed(&run, Smoothing::Raw).unwrap(), 0.25);
    }

    #[test]
    fn smoothing_labels() {
        assert_eq!(Smoothing::Raw.to_string(), "no smooth");
        assert_eq!(Smoothing::Knots(20).to_string(), "k = 20");
    }
}
