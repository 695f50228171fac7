//! Two-color one-step-ahead predictors.
//!
//! * the large-n approximation of the RP urn, where the predictive mean is
//!   `(1 - gamma*) p0 + gamma* B~_n` and the fashion process follows
//!   `B~_{n+1} = beta B~_n + (1 - beta) xi_{n+1}`; three constraint patterns
//!   are supported (Complete, Only Fashion, No Fashion);
//! * the standard Pólya urn, `psi_n = (a1 + sum xi) / (a + n)` where
//!   `a1 = N_{0,1} / alpha` and `a = |N_0| / alpha`.
//!
//! Observation `xi = 1` corresponds to urn color 0.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::BinarySeries;
use crate::urn::{CountVector, Urn};

/// Default initial value of the fashion process.
pub const DEFAULT_B_TILDE_INIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Polya,
    Complete,
    OnlyFashion,
    NoFashion,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Polya,
        ModelKind::Complete,
        ModelKind::OnlyFashion,
        ModelKind::NoFashion,
    ];

    /// Machine name, used in files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Polya => "polya",
            ModelKind::Complete => "complete",
            ModelKind::OnlyFashion => "only_fashion",
            ModelKind::NoFashion => "no_fashion",
        }
    }

    /// Human-readable column label.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Polya => "Standard Polya",
            ModelKind::Complete => "Complete RP",
            ModelKind::OnlyFashion => "Only Fashion RP",
            ModelKind::NoFashion => "No Fashion RP",
        }
    }

    pub fn approx_variant(self) -> Option<ApproxVariant> {
        match self {
            ModelKind::Polya => None,
            ModelKind::Complete => Some(ApproxVariant::Complete),
            ModelKind::OnlyFashion => Some(ApproxVariant::OnlyFashion),
            ModelKind::NoFashion => Some(ApproxVariant::NoFashion),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "polya" | "standard_polya" => Ok(ModelKind::Polya),
            "complete" | "complete_rp" => Ok(ModelKind::Complete),
            "only_fashion" | "only_fashion_rp" => Ok(ModelKind::OnlyFashion),
            "no_fashion" | "no_fashion_rp" => Ok(ModelKind::NoFashion),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxVariant {
    Complete,
    OnlyFashion,
    NoFashion,
}

impl ApproxVariant {
    pub fn kind(self) -> ModelKind {
        match self {
            ApproxVariant::Complete => ModelKind::Complete,
            ApproxVariant::OnlyFashion => ModelKind::OnlyFashion,
            ApproxVariant::NoFashion => ModelKind::NoFashion,
        }
    }
}

/// Parameters `(p0, gamma*, beta)` of the approximated RP dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    p0: f64,
    gamma_star: f64,
    beta: f64,
    variant: ApproxVariant,
    b_tilde_init: f64,
}

fn unit(name: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::param(name, v, "must lie in [0, 1]"))
    }
}

fn forgetting(beta: f64) -> Result<f64> {
    if (0.0..1.0).contains(&beta) {
        Ok(beta)
    } else {
        Err(Error::param("beta", beta, "must lie in [0, 1) for the approximated dynamics"))
    }
}

impl ApproxParams {
    pub fn complete(p0: f64, gamma_star: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            p0: unit("p0", p0)?,
            gamma_star: unit("gamma_star", gamma_star)?,
            beta: forgetting(beta)?,
            variant: ApproxVariant::Complete,
            b_tilde_init: DEFAULT_B_TILDE_INIT,
        })
    }

    /// `gamma* = 1`; `p0` is irrelevant and fixed to 0.
    pub fn only_fashion(beta: f64) -> Result<Self> {
        Ok(Self {
            p0: 0.0,
            gamma_star: 1.0,
            beta: forgetting(beta)?,
            variant: ApproxVariant::OnlyFashion,
            b_tilde_init: DEFAULT_B_TILDE_INIT,
        })
    }

    /// `gamma* = 0`; `beta` is irrelevant and fixed to 0.
    pub fn no_fashion(p0: f64) -> Result<Self> {
        Ok(Self {
            p0: unit("p0", p0)?,
            gamma_star: 0.0,
            beta: 0.0,
            variant: ApproxVariant::NoFashion,
            b_tilde_init: DEFAULT_B_TILDE_INIT,
        })
    }

    /// Large-n parameters of an exact two-color RP urn:
    /// `p0 = b0_1/|b0|`, `1 - gamma* = |b0| / r*`, `B~_0 = B_{0,1}/|B_0|`.
    pub fn from_rp_urn(b0: &CountVector, big_b0: &CountVector, alpha: f64, beta: f64) -> Result<Self> {
        if b0.colors() != 2 || big_b0.colors() != 2 {
            return Err(Error::Config("the approximation is defined for two colors only".into()));
        }
        let b0_total = b0.total();
        if !(b0_total > 0.0) || !(alpha > 0.0) {
            return Err(Error::Config("need |b0| > 0 and alpha > 0".into()));
        }
        let beta = forgetting(beta)?;
        let r_star = b0_total + alpha / (1.0 - beta);
        let b_tilde = if big_b0.total() > 0.0 {
            big_b0.entries()[0] / big_b0.total()
        } else {
            DEFAULT_B_TILDE_INIT
        };
        Self::complete(b0.entries()[0] / b0_total, 1.0 - b0_total / r_star, beta)?
            .with_b_tilde_init(b_tilde)
    }

    pub fn with_b_tilde_init(mut self, b_tilde_init: f64) -> Result<Self> {
        self.b_tilde_init = unit("b_tilde_init", b_tilde_init)?;
        Ok(self)
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn gamma_star(&self) -> f64 {
        self.gamma_star
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variant(&self) -> ApproxVariant {
        self.variant
    }

    pub fn b_tilde_init(&self) -> f64 {
        self.b_tilde_init
    }
}

/// Standard Pólya predictor in the identifiable quotient `(a1, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyaPredictorParams {
    a1: f64,
    a: f64,
}

impl PolyaPredictorParams {
    pub fn new(a1: f64, a: f64) -> Result<Self> {
        if !(a1 > 0.0) || !a1.is_finite() {
            return Err(Error::param("a1", a1, "must be positive"));
        }
        if !(a > a1) || !a.is_finite() {
            return Err(Error::param("a", a, "must exceed a1"));
        }
        Ok(Self { a1, a })
    }

    /// From raw urn quantities `N_{0,1}`, `|N_0|` and `alpha`.
    pub fn from_urn(n01: f64, n0_total: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::param("alpha", alpha, "must be positive"));
        }
        Self::new(n01 / alpha, n0_total / alpha)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Approx(ApproxParams),
    Polya(PolyaPredictorParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Approx(p) => p.variant().kind(),
            ModelParams::Polya(_) => ModelKind::Polya,
        }
    }
}

impl From<ApproxParams> for ModelParams {
    fn from(p: ApproxParams) -> Self {
        ModelParams::Approx(p)
    }
}

impl From<PolyaPredictorParams> for ModelParams {
    fn from(p: PolyaPredictorParams) -> Self {
        ModelParams::Polya(p)
    }
}

/// Streaming one-step-ahead predictor.
pub trait Predictor {
    /// Probability that the next observation is 1.
    fn predict(&self) -> f64;
    fn advance(&mut self, observation: u8);
}

/// Approximated RP dynamics.
#[derive(Debug, Clone, Copy)]
pub struct FashionPredictor {
    base: f64,
    weight: f64,
    beta: f64,
    b_tilde: f64,
}

impl FashionPredictor {
    pub fn new(params: &ApproxParams) -> Self {
        Self {
            base: (1.0 - params.gamma_star) * params.p0,
            weight: params.gamma_star,
            beta: params.beta,
            b_tilde: params.b_tilde_init,
        }
    }

    pub fn b_tilde(&self) -> f64 {
        self.b_tilde
    }
}

impl Predictor for FashionPredictor {
    #[inline]
    fn predict(&self) -> f64 {
        self.base + self.weight * self.b_tilde
    }

    #[inline]
    fn advance(&mut self, observation: u8) {
        self.b_tilde = self.beta * self.b_tilde + (1.0 - self.beta) * f64::from(observation);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PolyaPredictor {
    a1: f64,
    a: f64,
    ones: u64,
    n: u64,
}

impl PolyaPredictor {
    pub fn new(params: &PolyaPredictorParams) -> Self {
        Self {
            a1: params.a1,
            a: params.a,
            ones: 0,
            n: 0,
        }
    }
}

impl Predictor for PolyaPredictor {
    #[inline]
    fn predict(&self) -> f64 {
        (self.a1 + self.ones as f64) / (self.a + self.n as f64)
    }

    #[inline]
    fn advance(&mut self, observation: u8) {
        self.ones += u64::from(observation);
        self.n += 1;
    }
}

/// Predictor state for any model family, plus running counts.
#[derive(Debug, Clone, Copy)]
pub struct PredictorState {
    params: ModelParams,
    inner: PredictorImpl,
    count_ones: u64,
    n: u64,
}

#[derive(Debug, Clone, Copy)]
enum PredictorImpl {
    Fashion(FashionPredictor),
    Polya(PolyaPredictor),
}

impl PredictorState {
    pub fn new(params: ModelParams) -> Self {
        let inner = match &params {
            ModelParams::Approx(p) => PredictorImpl::Fashion(FashionPredictor::new(p)),
            ModelParams::Polya(p) => PredictorImpl::Polya(PolyaPredictor::new(p)),
        };
        Self {
            params,
            inner,
            count_ones: 0,
            n: 0,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Current fashion value `B~_n`; `None` for the Pólya predictor.
    pub fn b_tilde(&self) -> Option<f64> {
        match &self.inner {
            PredictorImpl::Fashion(f) => Some(f.b_tilde()),
            PredictorImpl::Polya(_) => None,
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.count_ones
    }

    pub fn observations(&self) -> u64 {
        self.n
    }
}

impl Predictor for PredictorState {
    fn predict(&self) -> f64 {
        let p = match &self.inner {
            PredictorImpl::Fashion(f) => f.predict(),
            PredictorImpl::Polya(p) => p.predict(),
        };
        p.clamp(0.0, 1.0)
    }

    fn advance(&mut self, observation: u8) {
        debug_assert!(observation <= 1);
        match &mut self.inner {
            PredictorImpl::Fashion(f) => f.advance(observation),
            PredictorImpl::Polya(p) => p.advance(observation),
        }
        self.count_ones += u64::from(observation);
        self.n += 1;
    }
}

/// `psi_hat_n` for `n` in `start..end`, each computed after absorbing
/// `xi_1..xi_n`. Requires `end <= bits.len()`.
pub fn predict_range(params: &ModelParams, bits: &[u8], start: usize, end: usize) -> Vec<f64> {
    assert!(end <= bits.len(), "prediction range past the end of the series");
    if start >= end {
        return Vec::new();
    }
    fn run<P: Predictor>(mut p: P, bits: &[u8], start: usize, end: usize) -> Vec<f64> {
        for &b in &bits[..start] {
            p.advance(b);
        }
        let mut out = Vec::with_capacity(end - start);
        for &b in &bits[start..end] {
            out.push(p.predict().clamp(0.0, 1.0));
            p.advance(b);
        }
        out
    }
    match params {
        ModelParams::Approx(a) => run(FashionPredictor::new(a), bits, start, end),
        ModelParams::Polya(p) => run(PolyaPredictor::new(p), bits, start, end),
    }
}

/// `psi_hat_n` for `n = start_index .. N-1`. Empty when `start_index >= N`.
pub fn run_series(params: &ModelParams, series: &BinarySeries, start_index: usize) -> Vec<f64> {
    predict_range(params, series.bits(), start_index.min(series.len()), series.len())
}

/// Draw a synthetic series of length `n` from a predictor.
pub fn simulate_series(params: &ModelParams, n: usize, seed: u64) -> BinarySeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = PredictorState::new(*params);
    let mut bits = Vec::with_capacity(n);
    for _ in 0..n {
        let bit = u8::from(rng.gen::<f64>() < state.predict());
        state.advance(bit);
        bits.push(bit);
    }
    BinarySeries::from_bits(bits).expect("bits")
}

/// Draw a synthetic series from any exact two-color urn (color 0 is `xi = 1`).
pub fn simulate_urn_series<U: Urn + Clone>(urn: &U, n: usize, seed: u64) -> Result<BinarySeries> {
    if urn.colors() != 2 {
        return Err(Error::Config("binary series need a two-color urn".into()));
    }
    let draws = crate::urn::simulate(urn, n, seed)?;
    Ok(BinarySeries::from_bools(draws.into_iter().map(|d| d.color() == 0)))
}
