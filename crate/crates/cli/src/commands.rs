use std::fs;
use std::io::BufReader;

use anyhow::{Context, Result};
use rp_urn::estimation::fit_trajectory;
use rp_urn::evaluation::spline;
use rp_urn::ingest::{self, InputFormat};
use rp_urn::model::{simulate_series, simulate_urn_series};
use rp_urn::pipeline::{self, FitEvalConfig};
use rp_urn::{
    ApproxParams, BinarySeries, CountVector, Error, Execution, FitOptions, ModelParams, PolyaPredictorParams, RpUrn,
    SlotScheme,
};
use serde_json::json;

use crate::io::{output_path, read_series, write_atomic};
use crate::{FitEvalArgs, Generator, IngestArgs, ModelArgs, ParamsArgs, SimulateArgs, SmoothArgs};

const SERIES_FILE: &str = "series.txt";
const SERIES_MAGIC: &str = "# rpurn-series v1";

/// 2 usage/config, 3 data/format, 4 numeric.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) | Error::InvalidParameter { .. } => 2,
                Error::Numeric(_) => 4,
                Error::InvalidState(_)
                | Error::Domain(_)
                | Error::InsufficientData { .. }
                | Error::EmptyInput
                | Error::Format { .. }
                | Error::Io(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    2
}

fn config(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    let format = match &a.format {
        Some(f) => f.parse::<InputFormat>()?,
        None => InputFormat::from_path(&a.input),
    };
    let file = fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let outcome = ingest::read_records(BufReader::new(file), format)?;
    if a.strict {
        if let Some(m) = outcome.malformed.first() {
            return Err(Error::Format {
                line: m.line,
                message: m.message.clone(),
            }
            .into());
        }
    }
    if outcome.records.is_empty() {
        return Err(Error::EmptyInput).with_context(|| format!("no usable records in {}", a.input.display()));
    }
    let malformed = outcome.malformed.len();
    let series = ingest::binarize(outcome.records, a.threshold, a.subset)?;
    let desc = ingest::descriptives(&series).context("every record was discarded by the threshold")?;

    let series_path = output_path(&a.out.output_dir, SERIES_FILE)?;
    write_atomic(&series_path, |w| Ok(series.write_to(w)?))?;
    let summary = json!({
        "posts": desc.posts,
        "pct_positive": desc.pct_positive,
        "source_count": series.source_count(),
        "discarded_count": series.discarded_count(),
        "removed_by_subset": series.removed_by_subset(),
        "malformed_lines": malformed,
        "subset": series.subset().to_string(),
        "threshold": a.threshold,
    });
    let summary_path = output_path(&a.out.output_dir, "descriptives.json")?;
    write_atomic(&summary_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        Ok(())
    })?;
    println!(
        "{} posts, {:.2}% positive, {} discarded, {} outside subset, {} malformed",
        desc.posts,
        desc.pct_positive,
        series.discarded_count(),
        series.removed_by_subset(),
        malformed
    );
    Ok(())
}

fn need(v: Option<f64>, flag: &str, generator: &str) -> Result<f64> {
    v.ok_or_else(|| config(format!("generator {generator} needs --{flag}")))
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let with_init = |p: ApproxParams| -> Result<ApproxParams> {
        Ok(match a.b_tilde0 {
            Some(b) => p.with_b_tilde_init(b)?,
            None => p,
        })
    };
    let series = match a.generator {
        Generator::Rp => {
            if a.b0.is_empty() {
                return Err(config("generator rp needs --b0"));
            }
            let b0 = CountVector::new(a.b0.clone())?;
            let big_b0 = if a.big_b0.is_empty() {
                CountVector::zeros(b0.colors())?
            } else {
                CountVector::new(a.big_b0.clone())?
            };
            let urn = RpUrn::new(b0, big_b0, need(a.alpha, "alpha", "rp")?, need(a.beta, "beta", "rp")?)?;
            simulate_urn_series(&urn, a.length, a.seed)?
        }
        Generator::Complete => {
            let p = ApproxParams::complete(
                need(a.p0, "p0", "complete")?,
                need(a.gamma_star, "gamma-star", "complete")?,
                need(a.beta, "beta", "complete")?,
            )?;
            simulate_series(&with_init(p)?.into(), a.length, a.seed)
        }
        Generator::OnlyFashion => {
            let p = ApproxParams::only_fashion(need(a.beta, "beta", "only-fashion")?)?;
            simulate_series(&with_init(p)?.into(), a.length, a.seed)
        }
        Generator::NoFashion => {
            let p = ApproxParams::no_fashion(need(a.p0, "p0", "no-fashion")?)?;
            simulate_series(&p.into(), a.length, a.seed)
        }
        Generator::Polya => {
            let p = PolyaPredictorParams::new(need(a.a1, "a1", "polya")?, need(a.a, "a", "polya")?)?;
            simulate_series(&ModelParams::Polya(p), a.length, a.seed)
        }
    };
    let path = output_path(&a.out.output_dir, SERIES_FILE)?;
    write_atomic(&path, |w| Ok(series.write_to(w)?))?;
    println!("{} observations, {} ones -> {}", series.len(), series.count_ones(), path.display());
    Ok(())
}

fn fit_options(m: &ModelArgs) -> Result<FitOptions> {
    if m.grid_points < 2 {
        return Err(config(format!("--grid-points must be at least 2, got {}", m.grid_points)));
    }
    Ok(FitOptions {
        grid_points: m.grid_points,
        execution: if m.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..FitOptions::default()
    })
}

fn check_models(m: &ModelArgs) -> Result<()> {
    if m.models.is_empty() {
        return Err(config("--models must name at least one model"));
    }
    for (i, k) in m.models.iter().enumerate() {
        if m.models[..i].contains(k) {
            return Err(config(format!("model {k} listed twice")));
        }
    }
    Ok(())
}

fn check_knots(knots: &[usize]) -> Result<()> {
    if knots.is_empty() {
        return Err(config("--knots must not be empty"));
    }
    if let Some(k) = knots.iter().find(|&&k| k < 3) {
        return Err(config(format!("knot counts must be >= 3, got {k}")));
    }
    Ok(())
}

pub fn fit_eval(a: FitEvalArgs) -> Result<()> {
    check_models(&a.model)?;
    check_knots(&a.knots)?;
    let series = read_series(&a.model.input)?;
    let cfg = FitEvalConfig {
        slots: a.model.slots,
        models: a.model.models.clone(),
        knot_counts: a.knots.clone(),
        fit: fit_options(&a.model)?,
        in_sample: a.in_sample,
    };
    let out = pipeline::run_fit_evaluate(&series, &cfg)?;
    let dir = &a.model.out.output_dir;
    write_atomic(&output_path(dir, "report.csv")?, |w| Ok(out.report.write_csv(w)?))?;
    write_atomic(&output_path(dir, "report.json")?, |w| Ok(out.report.write_json(w)?))?;
    write_atomic(&output_path(dir, "params.csv")?, |w| {
        Ok(pipeline::write_trajectories_csv(out.models.iter().map(|m| &m.trajectory), w)?)
    })?;
    if a.predictions {
        write_atomic(&output_path(dir, "predictions.csv")?, |w| {
            Ok(pipeline::write_predictions_csv(&series, &out, w)?)
        })?;
    }
    let mut human = Vec::new();
    out.report.write_csv(&mut human)?;
    print!("{}", String::from_utf8_lossy(&human));
    Ok(())
}

pub fn params_evolution(a: ParamsArgs) -> Result<()> {
    check_models(&a.model)?;
    let series = read_series(&a.model.input)?;
    let opts = fit_options(&a.model)?;
    if a.model.slots < 2 {
        return Err(config(format!("need at least 2 slots, got {}", a.model.slots)));
    }
    let scheme = SlotScheme::new(a.model.slots, series.len())?;
    let trajectories = a
        .model
        .models
        .iter()
        .map(|&k| fit_trajectory(k, &series, &scheme, &opts))
        .collect::<rp_urn::Result<Vec<_>>>()?;
    let path = output_path(&a.model.out.output_dir, "params.csv")?;
    write_atomic(&path, |w| Ok(pipeline::write_trajectories_csv(&trajectories, w)?))?;
    println!("{} models x {} slots -> {}", trajectories.len(), scheme.slots(), path.display());
    Ok(())
}

/// Numbers to smooth: a series file, or one column of a plain / CSV file.
fn read_values(text: &str, column: Option<&str>) -> Result<Vec<f64>> {
    if text.lines().next().map(str::trim_end) == Some(SERIES_MAGIC) {
        let s = BinarySeries::parse(text)?;
        return Ok(s.bits().iter().map(|&b| f64::from(b)).collect());
    }
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let col = match column {
        Some(name) => {
            let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
            header
                .split(',')
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Format {
                    line: 1,
                    message: format!("no column `{name}` in header"),
                })?
        }
        None => {
            if let Some((_, first)) = lines.peek() {
                if first.contains(',') {
                    return Err(config("input has several columns; pick one with --column"));
                }
                if first.trim().parse::<f64>().is_err() {
                    lines.next();
                }
            }
            0
        }
    };
    let mut values = Vec::new();
    for (idx, line) in lines {
        let cell = line.split(',').nth(col).unwrap_or("").trim();
        let v = cell.parse::<f64>().map_err(|_| Error::Format {
            line: idx + 1,
            message: format!("`{cell}` is not a number"),
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    Ok(values)
}

pub fn smooth(a: SmoothArgs) -> Result<()> {
    check_knots(&a.knots)?;
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let values = read_values(&text, a.column.as_deref())?;
    let curves = a
        .knots
        .iter()
        .map(|&k| spline::smooth(&values, k).with_context(|| format!("smoothing with {k} knots")))
        .collect::<Result<Vec<_>>>()?;
    let path = output_path(&a.out.output_dir, "smoothed.csv")?;
    write_atomic(&path, |w| {
        let header: Vec<String> = a.knots.iter().map(|k| format!("k{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut row = String::new();
        for i in 0..values.len() {
            row.clear();
            for (j, c) in curves.iter().enumerate() {
                if j > 0 {
                    row.push(',');
                }
                row.push_str(&c.values[i].to_string());
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    })?;
    println!("{} points x {} knot counts -> {}", values.len(), curves.len(), path.display());
    Ok(())
}
