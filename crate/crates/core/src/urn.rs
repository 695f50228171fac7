//! Exact k-color urn engines: the standard Pólya urn and the Rescaled Pólya
//! (RP) urn.
//!
//! The RP urn keeps a fixed part `b0` and a reinforced part `B_n`. After a draw
//! of color `i` the reinforced part becomes `beta * B_n + alpha * e_i`, so the
//! urn composition is `N_n = b0 + B_n`. With `beta = 1` this is the standard
//! Pólya urn started from `b0 + B_0`.
//!
//! Ball masses are real-valued. Totals are always recomputed from the
//! components instead of being carried along incrementally.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Non-negative ball masses, one per color (`k >= 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector(Vec<f64>);

impl CountVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidState(format!(
                "an urn needs at least two colors, got {}",
                entries.len()
            )));
        }
        if let Some(&bad) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param("count", bad, "ball masses must be finite and >= 0"));
        }
        Ok(Self(entries))
    }

    /// `k` zero entries.
    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(vec![0.0; k])
    }

    pub fn colors(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    /// `|x|`, the sum of the entries.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Color of one extracted ball, in `0..k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DrawOutcome(pub usize);

impl DrawOutcome {
    pub fn color(self) -> usize {
        self.0
    }
}

/// Common surface of the two exact engines.
pub trait Urn {
    fn colors(&self) -> usize;

    /// Number of draws applied so far.
    fn steps(&self) -> u64;

    /// Current composition `N_n`.
    fn composition(&self) -> Vec<f64>;

    /// Probability of each color at the next draw, `N_{n,i} / |N_n|`.
    fn predictive_means(&self) -> Result<Vec<f64>> {
        let n = self.composition();
        let total: f64 = n.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidState(format!(
                "urn holds total mass {total}; predictive means undefined"
            )));
        }
        Ok(n.into_iter().map(|v| v / total).collect())
    }

    /// Reinforce the urn with the outcome of a draw.
    fn update(&mut self, outcome: DrawOutcome);
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpUrn {
    b0: CountVector,
    reinforced: CountVector,
    alpha: f64,
    beta: f64,
    n: u64,
}

impl RpUrn {
    pub fn new(b0: CountVector, big_b0: CountVector, alpha: f64, beta: f64) -> Result<Self> {
        if b0.colors() != big_b0.colors() {
            return Err(Error::InvalidState(format!(
                "b0 has {} colors but B0 has {}",
                b0.colors(),
                big_b0.colors()
            )));
        }
        if !(b0.total() > 0.0) {
            return Err(Error::InvalidState("|b0| must be positive".into()));
        }
        validate_alpha(alpha)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::param("beta", beta, "must lie in [0, 1]"));
        }
        Ok(Self {
            b0,
            reinforced: big_b0,
            alpha,
            beta,
            n: 0,
        })
    }

    pub fn b0(&self) -> &CountVector {
        &self.b0
    }

    /// The reinforced component `B_n`.
    pub fn reinforced(&self) -> &CountVector {
        &self.reinforced
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `r*_n = |N_n| = |b0| + |B_n|`.
    pub fn total_balls(&self) -> f64 {
        self.b0.total() + self.reinforced.total()
    }

    /// Limit `|b0| + alpha / (1 - beta)` of the total mass; `None` when `beta = 1`.
    pub fn limit_total(&self) -> Option<f64> {
        (self.beta < 1.0).then(|| self.b0.total() + self.alpha / (1.0 - self.beta))
    }

    /// Value-returning form of [`Urn::update`].
    pub fn updated(&self, outcome: DrawOutcome) -> Self {
        let mut next = self.clone();
        next.update(outcome);
        next
    }
}

impl Urn for RpUrn {
    fn colors(&self) -> usize {
        self.b0.colors()
    }

    fn steps(&self) -> u64 {
        self.n
    }

    fn composition(&self) -> Vec<f64> {
        self.b0
            .entries()
            .iter()
            .zip(self.reinforced.entries())
            .map(|(b, big)| b + big)
            .collect()
    }

    fn update(&mut self, outcome: DrawOutcome) {
        let color = outcome.color();
        assert!(color < self.colors(), "color {color} out of range");
        for (i, v) in self.reinforced.0.iter_mut().enumerate() {
            *v *= self.beta;
            if i == color {
                *v += self.alpha;
            }
        }
        self.n += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyaUrn {
    counts: CountVector,
    alpha: f64,
    n: u64,
}

impl PolyaUrn {
    pub fn new(initial: CountVector, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Self {
            counts: initial,
            alpha,
            n: 0,
        })
    }

    pub fn counts(&self) -> &CountVector {
        &self.counts
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn total_balls(&self) -> f64 {
        self.counts.total()
    }

    pub fn updated(&self, outcome: DrawOutcome) -> Self {
        let mut next = self.clone();
        next.update(outcome);
        next
    }
}

impl Urn for PolyaUrn {
    fn colors(&self) -> usize {
        self.counts.colors()
    }

    fn steps(&self) -> u64 {
        self.n
    }

    fn composition(&self) -> Vec<f64> {
        self.counts.0.clone()
    }

    fn update(&mut self, outcome: DrawOutcome) {
        let color = outcome.color();
        assert!(color < self.colors(), "color {color} out of range");
        self.counts.0[color] += self.alpha;
        self.n += 1;
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", alpha, "must be positive and finite"));
    }
    Ok(())
}

/// Closed form of the RP total mass after `n` draws:
/// `|b0| + a/(1-beta) + beta^n (|B0| - a/(1-beta))`.
pub fn total_balls_closed_form(
    b0_total: f64,
    big_b0_total: f64,
    alpha: f64,
    beta: f64,
    n: u64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!(
            "closed-form total requires beta in [0, 1), got {beta}"
        )));
    }
    if !(b0_total > 0.0) {
        return Err(Error::param("b0_total", b0_total, "must be positive"));
    }
    if !(big_b0_total >= 0.0) {
        return Err(Error::param("big_b0_total", big_b0_total, "must be >= 0"));
    }
    validate_alpha(alpha)?;
    let stationary = alpha / (1.0 - beta);
    let decay = beta.powi(n.min(i32::MAX as u64) as i32);
    Ok(b0_total + stationary + decay * (big_b0_total - stationary))
}

/// Inverse-CDF draw of a color from a probability vector given `u` in `[0, 1)`.
pub fn draw_color(probabilities: &[f64], u: f64) -> DrawOutcome {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return DrawOutcome(i);
        }
    }
    // Only reachable when rounding leaves the cumulative sum just under u.
    DrawOutcome(last_positive)
}

/// Forward simulation from `initial`, using a ChaCha8 stream seeded with `seed`.
pub fn simulate<U: Urn + Clone>(initial: &U, steps: usize, seed: u64) -> Result<Vec<DrawOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(initial, steps, &mut rng).map(|(draws, _)| draws)
}

/// Like [`simulate`], also returning the final state.
pub fn simulate_with_rng<U: Urn + Clone, R: Rng>(
    initial: &U,
    steps: usize,
    rng: &mut R,
) -> Result<(Vec<DrawOutcome>, U)> {
    let mut state = initial.clone();
    let mut draws = Vec::with_capacity(steps);
    for _ in 0..steps {
        let psi = state.predictive_means()?;
        let outcome = draw_color(&psi, rng.gen::<f64>());
        state.update(outcome);
        draws.push(outcome);
    }
    Ok((draws, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cv(v: &[f64]) -> CountVector {
        CountVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn predictive_means_examples() {
        let rp = RpUrn::new(cv(&[1.0, 1.0]), cv(&[0.0, 0.0]), 1.0, 0.5).unwrap();
        assert_eq!(rp.predictive_means().unwrap(), vec![0.5, 0.5]);

        let rp = RpUrn::new(cv(&[1.0, 1.0]), cv(&[1.0, 0.0]), 1.0, 0.5).unwrap();
        let psi = rp.predictive_means().unwrap();
        assert_relative_eq!(psi[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(psi[1], 1.0 / 3.0, epsilon = 1e-15);

        for alpha in [0.1, 1.0, 7.0] {
            let p = PolyaUrn::new(cv(&[3.0, 1.0]), alpha).unwrap();
            assert_eq!(p.predictive_means().unwrap(), vec![0.75, 0.25]);
        }
    }

    #[test]
    fn empty_polya_urn_is_degenerate() {
        let p = PolyaUrn::new(cv(&[0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(p.predictive_means(), Err(Error::InvalidState(_))));
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(CountVector::new(vec![1.0]).is_err());
        assert!(CountVector::new(vec![1.0, -0.1]).is_err());
        assert!(PolyaUrn::new(cv(&[1.0, 1.0]), 0.0).is_err());
        assert!(RpUrn::new(cv(&[0.0, 0.0]), cv(&[1.0, 1.0]), 1.0, 0.5).is_err());
        assert!(RpUrn::new(cv(&[1.0, 1.0]), cv(&[0.0, 0.0]), 1.0, 1.5).is_err());
        assert!(RpUrn::new(cv(&[1.0, 1.0]), cv(&[0.0, 0.0, 0.0]), 1.0, 0.5).is_err());
    }

    #[test]
    fn rp_update_example() {
        let rp = RpUrn::new(cv(&[1.0, 1.0]), cv(&[0.0, 0.0]), 1.0, 0.5).unwrap();
        let next = rp.updated(DrawOutcome(0));
        assert_eq!(next.reinforced().entries(), &[1.0, 0.0]);
        assert_eq!(next.composition(), vec![2.0, 1.0]);
        assert_eq!(next.total_balls(), 3.0);
        assert_eq!(next.steps(), 1);
        // r*_{n+1} = r*_n + (beta - 1)|B_n| + alpha
        let again = next.updated(DrawOutcome(1));
        assert_relative_eq!(
            again.total_balls(),
            next.total_balls() + (0.5 - 1.0) * next.reinforced().total() + 1.0
        );
    }

    #[test]
    fn beta_zero_erases_memory() {
        let rp = RpUrn::new(cv(&[1.0, 2.0, 3.0]), cv(&[5.0, 4.0, 9.0]), 2.5, 0.0).unwrap();
        let next = rp.updated(DrawOutcome(2));
        assert_eq!(next.reinforced().entries(), &[0.0, 0.0, 2.5]);
    }

    #[test]
    fn polya_update_examples() {
        let p = PolyaUrn::new(cv(&[1.0, 1.0]), 1.0).unwrap();
        assert_eq!(p.updated(DrawOutcome(0)).counts().entries(), &[2.0, 1.0]);
        let p = PolyaUrn::new(cv(&[2.0, 1.0]), 2.0).unwrap();
        assert_eq!(p.updated(DrawOutcome(1)).counts().entries(), &[2.0, 3.0]);
    }

    #[test]
    fn closed_form_examples() {
        // n -> infinity
        let v = total_balls_closed_form(2.0, 0.0, 1.0, 0.5, 10_000).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-12);
        assert_eq!(total_balls_closed_form(2.0, 3.5, 1.0, 0.5, 0).unwrap(), 5.5);
        let v = total_balls_closed_form(2.0, 2.0, 1.0, 0.5, 1).unwrap();
        assert_eq!(v, 4.0);
        let rp = RpUrn::new(cv(&[1.0, 1.0]), cv(&[1.0, 1.0]), 1.0, 0.5).unwrap();
        assert_eq!(rp.updated(DrawOutcome(0)).total_balls(), v);
        assert!(matches!(
            total_balls_closed_form(2.0, 0.0, 1.0, 1.0, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simulate_edge_cases() {
        let rp = RpUrn::new(cv(&[1.0, 0.0]), cv(&[0.0, 0.0]), 1.0, 0.7).unwrap();
        assert!(simulate(&rp, 0, 1).unwrap().is_empty());
        let draws = simulate(&rp, 500, 9).unwrap();
        assert!(draws.iter().all(|d| d.color() == 0));
    }

    #[test]
    fn draw_color_inverse_cdf() {
        let p = [0.2, 0.0, 0.8];
        assert_eq!(draw_color(&p, 0.0), DrawOutcome(0));
        assert_eq!(draw_color(&p, 0.19), DrawOutcome(0));
        assert_eq!(draw_color(&p, 0.2), DrawOutcome(2));
        assert_eq!(draw_color(&p, 0.999_999), DrawOutcome(2));
    }
}
