//! Slot-based maximum-likelihood fitting.
//!
//! Every model is fitted by a coarse grid over its parameter box followed by a
//! bounded Nelder–Mead refinement from the best grid point. The trajectory
//! routine fits the model on slots `0..s` for every `s = 1..S-1`; it shares a
//! single forward pass per grid point across all slots and produces exactly
//! the same results as calling [`fit`] slot by slot.

pub mod likelihood;
pub mod simplex;

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{ApproxParams, ModelKind, ModelParams, PolyaPredictorParams, DEFAULT_B_TILDE_INIT};
use crate::series::BinarySeries;

pub use likelihood::{log_likelihood, PSI_FLOOR};
pub use simplex::SimplexSettings;

use likelihood::{constant_log_likelihood, prefix_log_likelihoods};

/// Upper end of the forgetting-factor box.
pub const BETA_MAX: f64 = 1.0 - 1e-6;
/// Box for the Pólya scale `a`, searched on a log10 axis.
pub const POLYA_A_RANGE: (f64, f64) = (1e-3, 1e6);
/// Minimum distance of `a1` from `0` and from `a`.
pub const POLYA_A1_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Grid points per free dimension.
    pub grid_points: usize,
    pub simplex: SimplexSettings,
    /// Initial fashion value used while fitting the approximated models.
    pub b_tilde_init: f64,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_points: 21,
            simplex: SimplexSettings::default(),
            b_tilde_init: DEFAULT_B_TILDE_INIT,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub theta_hat: ModelParams,
    pub log_likelihood: f64,
    /// Simplex iterations, summed over restarts.
    pub iterations: usize,
    pub converged: bool,
    /// Training data were all zeros or all ones; the estimate sits on the box boundary.
    pub degenerate: bool,
}

/// `S` equal slots of `floor(N / S)` observations; the tail is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotScheme {
    slots: usize,
    len: usize,
    slot_len: usize,
}

impl SlotScheme {
    pub fn new(slots: usize, len: usize) -> Result<Self> {
        if slots < 2 {
            return Err(Error::Config(format!("need at least 2 slots, got {slots}")));
        }
        let slot_len = len / slots;
        if slot_len < 1 {
            return Err(Error::InsufficientData {
                needed: slots,
                got: len,
            });
        }
        Ok(Self { slots, len, slot_len })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Series length `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slot_len(&self) -> usize {
        self.slot_len
    }

    /// Number of observations used for training when predicting slot `s`.
    pub fn training_end(&self, s: usize) -> usize {
        s * self.slot_len
    }

    /// Prediction indices `n` (scoring `xi_{n+1}`) that belong to slot `s`.
    pub fn slot_predictions(&self, s: usize) -> Range<usize> {
        s * self.slot_len..(s + 1) * self.slot_len
    }

    /// Prediction indices covered by the evaluation: slots `1..S`.
    pub fn evaluation_range(&self) -> Range<usize> {
        self.slot_len..self.slots * self.slot_len
    }
}

#[derive(Debug)]
pub struct SlotFit {
    pub slot: usize,
    pub result: Result<FitResult>,
}

/// Per-slot estimates `theta_hat(s)` for `s = 1..S-1`.
#[derive(Debug)]
pub struct ParamTrajectory {
    pub kind: ModelKind,
    pub scheme: SlotScheme,
    pub per_slot: Vec<SlotFit>,
}

impl ParamTrajectory {
    pub fn get(&self, slot: usize) -> Option<&Result<FitResult>> {
        self.per_slot.iter().find(|f| f.slot == slot).map(|f| &f.result)
    }
}

/// Free coordinates and box of one model family.
#[derive(Debug, Clone)]
struct Space {
    kind: ModelKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
    b_tilde_init: f64,
}

impl Space {
    fn new(kind: ModelKind, b_tilde_init: f64) -> Self {
        let (lower, upper) = match kind {
            ModelKind::Complete => (vec![0.0, 0.0, 0.0], vec![1.0, 1.0, BETA_MAX]),
            ModelKind::OnlyFashion => (vec![0.0], vec![BETA_MAX]),
            ModelKind::NoFashion => (vec![0.0], vec![1.0]),
            // (log10 a, a1 / a)
            ModelKind::Polya => (
                vec![POLYA_A_RANGE.0.log10(), 0.0],
                vec![POLYA_A_RANGE.1.log10(), 1.0],
            ),
        };
        Self {
            kind,
            lower,
            upper,
            b_tilde_init,
        }
    }

    fn params(&self, x: &[f64]) -> ModelParams {
        let approx = |p: Result<ApproxParams>| {
            ModelParams::Approx(
                p.and_then(|p| p.with_b_tilde_init(self.b_tilde_init))
                    .expect("coordinates are projected onto the box"),
            )
        };
        match self.kind {
            ModelKind::Complete => approx(ApproxParams::complete(x[0], x[1], x[2])),
            ModelKind::OnlyFashion => approx(ApproxParams::only_fashion(x[0])),
            ModelKind::NoFashion => approx(ApproxParams::no_fashion(x[0])),
            ModelKind::Polya => {
                let a = 10f64.powf(x[0]);
                let a1 = (x[1] * a).clamp(POLYA_A1_MARGIN, a - POLYA_A1_MARGIN);
                ModelParams::Polya(PolyaPredictorParams::new(a1, a).expect("a1 kept inside (0, a)"))
            }
        }
    }

    fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (points - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn step(&self, points: usize) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) / (points - 1) as f64)
            .collect()
    }
}

/// Objective evaluator bound to a series prefix.
struct Objective<'a> {
    space: &'a Space,
    bits: &'a [u8],
    ones_prefix: usize,
}

impl<'a> Objective<'a> {
    fn new(space: &'a Space, bits: &'a [u8]) -> Self {
        Self {
            space,
            bits,
            ones_prefix: bits.iter().map(|&b| b as usize).sum(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.space.kind {
            ModelKind::NoFashion => constant_log_likelihood(x[0], self.ones_prefix, self.bits.len()),
            _ => prefix_log_likelihoods(&self.space.params(x), self.bits, &[self.bits.len()])[0],
        }
    }
}

/// Grid log-likelihoods, `scores[g][c]` for grid point `g` and checkpoint `c`.
fn grid_scores(space: &Space, grid: &[Vec<f64>], bits: &[u8], checkpoints: &[usize], exec: Execution) -> Vec<Vec<f64>> {
    if space.kind == ModelKind::NoFashion {
        let mut ones = Vec::with_capacity(checkpoints.len());
        let (mut acc, mut at) = (0usize, 0usize);
        for &cp in checkpoints {
            acc += bits[at..cp].iter().map(|&b| b as usize).sum::<usize>();
            at = cp;
            ones.push(acc);
        }
        return exec::map_slice(exec, grid, |x| {
            checkpoints
                .iter()
                .zip(&ones)
                .map(|(&t, &k)| constant_log_likelihood(x[0], k, t))
                .collect()
        });
    }
    exec::map_slice(exec, grid, |x| prefix_log_likelihoods(&space.params(x), bits, checkpoints))
}

/// Highest score; ties go to the lowest grid index, NaN never wins.
fn best_index(scores: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in scores.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn validate_training_end(series_len: usize, training_end: usize) -> Result<()> {
    if training_end < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: training_end,
        });
    }
    if training_end > series_len {
        return Err(Error::Domain(format!(
            "training end {training_end} exceeds series length {series_len}"
        )));
    }
    Ok(())
}

/// Refine from the grid incumbent, then from any extra starting points that
/// beat the refined value.
fn refine(
    space: &Space,
    bits: &[u8],
    grid_best: &[f64],
    extra_starts: &[Vec<f64>],
    opts: &FitOptions,
) -> FitResult {
    let objective = Objective::new(space, bits);
    let step = space.step(opts.grid_points);
    let run = |x0: &[f64]| {
        simplex::minimize(
            |x| -objective.value(x),
            x0,
            &step,
            &space.lower,
            &space.upper,
            &opts.simplex,
        )
    };
    let mut best = run(grid_best);
    let mut iterations = best.iterations;
    for start in extra_starts {
        if -objective.value(start) < best.fx {
            let alt = run(start);
            iterations += alt.iterations;
            if alt.fx < best.fx {
                best = alt;
            }
        }
    }
    let degenerate = bits.windows(2).all(|w| w[0] == w[1]);
    FitResult {
        theta_hat: space.params(&best.x),
        log_likelihood: -best.fx,
        iterations,
        converged: best.converged || degenerate,
        degenerate,
    }
}

/// Embeds restricted fits as starting points in Complete coordinates.
fn nested_starts(only_fashion: Option<&FitResult>, no_fashion: Option<&FitResult>) -> Vec<Vec<f64>> {
    let mut starts = Vec::new();
    if let Some(ModelParams::Approx(p)) = only_fashion.map(|r| r.theta_hat) {
        starts.push(vec![0.5, 1.0, p.beta()]);
    }
    if let Some(ModelParams::Approx(p)) = no_fashion.map(|r| r.theta_hat) {
        starts.push(vec![p.p0(), 0.0, 0.0]);
    }
    starts
}

/// Maximum-likelihood fit on `xi_1..xi_{training_end}`.
pub fn fit(kind: ModelKind, series: &BinarySeries, training_end: usize, opts: &FitOptions) -> Result<FitResult> {
    validate_training_end(series.len(), training_end)?;
    let bits = &series.bits()[..training_end];
    let space = Space::new(kind, opts.b_tilde_init);
    let grid = space.grid(opts.grid_points);
    let scores = grid_scores(&space, &grid, bits, &[training_end], opts.execution);
    let (idx, _) = best_index(scores.iter().map(|s| s[0]));

    let starts = if kind == ModelKind::Complete {
        let of = fit(ModelKind::OnlyFashion, series, training_end, opts)?;
        let nf = fit(ModelKind::NoFashion, series, training_end, opts)?;
        nested_starts(Some(&of), Some(&nf))
    } else {
        Vec::new()
    };
    Ok(refine(&space, bits, &grid[idx], &starts, opts))
}

/// `fit(kind, series, s * slot_len)` for every `s = 1..S-1`.
pub fn fit_trajectory(
    kind: ModelKind,
    series: &BinarySeries,
    scheme: &SlotScheme,
    opts: &FitOptions,
) -> Result<ParamTrajectory> {
    if scheme.len() != series.len() {
        return Err(Error::Config(format!(
            "slot scheme built for {} observations but the series has {}",
            scheme.len(),
            series.len()
        )));
    }
    let (of, nf) = if kind == ModelKind::Complete {
        (
            Some(fit_trajectory(ModelKind::OnlyFashion, series, scheme, opts)?),
            Some(fit_trajectory(ModelKind::NoFashion, series, scheme, opts)?),
        )
    } else {
        (None, None)
    };

    let slots: Vec<usize> = (1..scheme.slots()).collect();
    let valid: Vec<usize> = slots
        .iter()
        .copied()
        .filter(|&s| scheme.training_end(s) >= 2)
        .collect();
    let checkpoints: Vec<usize> = valid.iter().map(|&s| scheme.training_end(s)).collect();

    let space = Space::new(kind, opts.b_tilde_init);
    let grid = space.grid(opts.grid_points);
    let scores = grid_scores(&space, &grid, series.bits(), &checkpoints, opts.execution);

    let restricted = |t: &Option<ParamTrajectory>, s: usize| {
        t.as_ref()
            .and_then(|t| t.get(s))
            .and_then(|r| r.as_ref().ok())
            .cloned()
    };
    let fitted = exec::map_range(opts.execution, valid.len(), |c| {
        let s = valid[c];
        let (idx, _) = best_index(scores.iter().map(|g| g[c]));
        let starts = nested_starts(restricted(&of, s).as_ref(), restricted(&nf, s).as_ref());
        refine(&space, &series.bits()[..checkpoints[c]], &grid[idx], &starts, opts)
    });

    let mut fitted = fitted.into_iter();
    let per_slot = slots
        .into_iter()
        .map(|s| SlotFit {
            slot: s,
            result: if scheme.training_end(s) >= 2 {
                Ok(fitted.next().expect("one fit per valid slot"))
            } else {
                validate_training_end(series.len(), scheme.training_end(s)).map(|_| unreachable!())
            },
        })
        .collect();
    Ok(ParamTrajectory {
        kind,
        scheme: *scheme,
        per_slot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate_series;

    fn p0_of(r: &FitResult) -> f64 {
        match r.theta_hat {
            ModelParams::Approx(p) => p.p0(),
            _ => panic!("not an approx model"),
        }
    }

    #[test]
    fn slot_scheme_arithmetic() {
        let s = SlotScheme::new(3, 10).unwrap();
        assert_eq!(s.slot_len(), 3);
        assert_eq!(s.training_end(2), 6);
        assert_eq!(s.slot_predictions(1), 3..6);
        assert_eq!(s.evaluation_range(), 3..9);
        assert!(SlotScheme::new(1, 10).is_err());
        assert!(SlotScheme::new(5, 4).is_err());
    }

    #[test]
    fn grid_is_lexicographic_and_hits_the_bounds() {
        let space = Space::new(ModelKind::Complete, 0.5);
        let g = space.grid(3);
        assert_eq!(g.len(), 27);
        assert_eq!(g[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 0.0, BETA_MAX / 2.0]);
        assert_eq!(g[26], vec![1.0, 1.0, BETA_MAX]);
    }

    #[test]
    fn best_index_prefers_lowest_on_ties() {
        assert_eq!(best_index([1.0, 3.0, 3.0, f64::NAN].into_iter()).0, 1);
        assert_eq!(best_index([f64::NAN, -2.0].into_iter()).0, 1);
    }

    #[test]
    fn no_fashion_closed_form() {
        let s = BinarySeries::from_bits(vec![1, 0, 1, 1, 0, 1, 0, 1, 1, 0]).unwrap();
        let r = fit(ModelKind::NoFashion, &s, 10, &FitOptions::default()).unwrap();
        assert!(r.converged);
        assert!((p0_of(&r) - 0.6).abs() < 1e-6, "{}", p0_of(&r));
        assert!(!r.degenerate);
    }

    #[test]
    fn degenerate_training_data() {
        let s = BinarySeries::from_bits(vec![1; 40]).unwrap();
        for kind in ModelKind::ALL {
            let r = fit(kind, &s, 40, &FitOptions::default()).unwrap();
            assert!(r.degenerate && r.converged, "{kind}");
            assert!(r.log_likelihood.is_finite());
        }
        let r = fit(ModelKind::NoFashion, &s, 40, &FitOptions::default()).unwrap();
        assert_eq!(p0_of(&r), 1.0);
    }

    #[test]
    fn training_end_validation() {
        let s = BinarySeries::from_bits(vec![1, 0, 1]).unwrap();
        assert!(fit(ModelKind::NoFashion, &s, 1, &FitOptions::default()).is_err());
        assert!(fit(ModelKind::NoFashion, &s, 4, &FitOptions::default()).is_err());
    }

    #[test]
    fn trajectory_reports_per_slot_errors() {
        // slot_len = 1: slot 1 trains on a single observation.
        let s = BinarySeries::from_bits(vec![1, 0, 1, 1]).unwrap();
        let scheme = SlotScheme::new(4, 4).unwrap();
        let t = fit_trajectory(ModelKind::NoFashion, &s, &scheme, &FitOptions::default()).unwrap();
        assert_eq!(t.per_slot.len(), 3);
        assert!(t.per_slot[0].result.is_err());
        assert!(t.per_slot[1].result.is_ok() && t.per_slot[2].result.is_ok());
    }

    #[test]
    fn trajectory_matches_individual_fits() {
        let params = ModelParams::Approx(ApproxParams::complete(0.4, 0.6, 0.9).unwrap());
        let series = simulate_series(&params, 1200, 5);
        let scheme = SlotScheme::new(4, series.len()).unwrap();
        let opts = FitOptions {
            grid_points: 7,
            ..FitOptions::default()
        };
        for kind in ModelKind::ALL {
            let t = fit_trajectory(kind, &series, &scheme, &opts).unwrap();
            assert_eq!(t.per_slot.len(), 3);
            for sf in &t.per_slot {
                let direct = fit(kind, &series, scheme.training_end(sf.slot), &opts).unwrap();
                assert_eq!(sf.result.as_ref().unwrap(), &direct, "{kind} slot {}", sf.slot);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let params = ModelParams::Approx(ApproxParams::only_fashion(0.9).unwrap());
        let series = simulate_series(&params, 600, 2);
        let mut opts = FitOptions {
            grid_points: 5,
            ..FitOptions::default()
        };
        let par = fit(ModelKind::Complete, &series, 600, &opts).unwrap();
        opts.execution = Execution::Sequential;
        let seq = fit(ModelKind::Complete, &series, 600, &opts).unwrap();
        assert_eq!(par, seq);
    }
}
