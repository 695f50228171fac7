use std::io::Write;

use serde_json::{json, Map, Value};

use super::{mse_against, observed_curve, ss_rel, theoretical_value, PredictionRun, Smoothing};
use crate::error::{Error, Result};
use crate::estimation::SlotScheme;
use crate::exec::{self, Execution};
use crate::model::ModelKind;
use crate::series::BinarySeries;

#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub smoothing: Smoothing,
    /// One entry per model, in report model order.
    pub values: Vec<f64>,
}

/// SS_rel per model, the theoretical value and the smoothed-curve MSE table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub observations: usize,
    pub slots: usize,
    pub slot_len: usize,
    pub models: Vec<ModelKind>,
    /// Percentages, aligned with `models`.
    pub ss_rel: Vec<f64>,
    pub theoretical_value: f64,
    pub mse_table: Vec<MseRow>,
}

fn pct_text(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "inf".to_string()
    }
}

fn pct_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

impl EvalReport {
    /// Build the report. The MSE table has a raw row followed by one row per
    /// knot count.
    pub fn build(
        series: &BinarySeries,
        scheme: &SlotScheme,
        runs: &[(ModelKind, PredictionRun<'_>)],
        knot_counts: &[usize],
        execution: Execution,
    ) -> Result<Self> {
        let mut seen = Vec::new();
        for (k, _) in runs {
            if seen.contains(k) {
                return Err(Error::Config(format!("model {k} listed twice")));
            }
            seen.push(*k);
        }
        let mut rows: Vec<Smoothing> = vec![Smoothing::Raw];
        for &k in knot_counts {
            if rows.contains(&Smoothing::Knots(k)) {
                return Err(Error::Config(format!("knot count {k} listed twice")));
            }
            rows.push(Smoothing::Knots(k));
        }

        let ss = runs.iter().map(|(_, r)| ss_rel(r)).collect();
        let mse_table = exec::map_slice(execution, &rows, |&smoothing| -> Result<MseRow> {
            let observed = observed_curve(series, scheme, smoothing)?;
            let values = runs
                .iter()
                .map(|(_, r)| mse_against(&observed, r, smoothing))
                .collect::<Result<Vec<_>>>()?;
            Ok(MseRow { smoothing, values })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            observations: series.len(),
            slots: scheme.slots(),
            slot_len: scheme.slot_len(),
            models: seen,
            ss_rel: ss,
            theoretical_value: theoretical_value(series, scheme),
            mse_table,
        })
    }

    pub fn ss_rel_of(&self, kind: ModelKind) -> Option<f64> {
        self.models.iter().position(|&k| k == kind).map(|i| self.ss_rel[i])
    }

    pub fn mse_of(&self, smoothing: Smoothing, kind: ModelKind) -> Option<f64> {
        let col = self.models.iter().position(|&k| k == kind)?;
        self.mse_table
            .iter()
            .find(|r| r.smoothing == smoothing)
            .map(|r| r.values[col])
    }

    /// Comma-delimited table: models as columns, SS_rel and the MSE rows as rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["row".to_string()];
        header.extend(self.models.iter().map(|m| m.name().to_string()));
        header.push("theoretical".into());
        writeln!(out, "{}", header.join(","))?;

        let mut line = vec!["ss_rel_pct".to_string()];
        line.extend(self.ss_rel.iter().map(|&v| pct_text(v)));
        line.push(pct_text(self.theoretical_value));
        writeln!(out, "{}", line.join(","))?;

        for row in &self.mse_table {
            let mut line = vec![format!("mse {}", row.smoothing)];
            line.extend(row.values.iter().map(|v| format!("{v:.2e}")));
            line.push(String::new());
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut ss = Map::new();
        for (m, &v) in self.models.iter().zip(&self.ss_rel) {
            ss.insert(m.name().into(), pct_json(v));
        }
        let rows: Vec<Value> = self
            .mse_table
            .iter()
            .map(|r| {
                let mut values = Map::new();
                for (m, &v) in self.models.iter().zip(&r.values) {
                    values.insert(m.name().into(), json!(v));
                }
                json!({
                    "smoothing": r.smoothing.to_string(),
                    "knot_count": match r.smoothing { Smoothing::Raw => Value::Null, Smoothing::Knots(k) => json!(k) },
                    "mse": values,
                })
            })
            .collect();
        json!({
            "observations": self.observations,
            "slots": self.slots,
            "slot_len": self.slot_len,
            "models": self.models.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "ss_rel_pct": ss,
            "theoretical_value_pct": pct_json(self.theoretical_value),
            "mse_table": rows,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json()).map_err(std::io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }
}
