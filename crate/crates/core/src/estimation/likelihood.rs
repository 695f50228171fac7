//! Bernoulli one-step-ahead log-likelihood.
//!
//! The term for prediction index `n` is
//! `xi_{n+1} ln psi_n + (1 - xi_{n+1}) ln (1 - psi_n)` with `psi_n` clamped to
//! `[1e-9, 1 - 1e-9]`, so every sum is finite.
//!
//! Terms are accumulated as products of `BLOCK` consecutive probabilities with
//! one logarithm per block (32 factors of at least 1e-9 cannot underflow), and
//! block logarithms are summed with compensation. Prefix snapshots and direct
//! evaluations use the same block boundaries, so they agree exactly.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{FashionPredictor, ModelParams, PolyaPredictor, Predictor};
use crate::series::BinarySeries;

pub const PSI_FLOOR: f64 = 1e-9;

#[inline]
pub fn clamp_psi(p: f64) -> f64 {
    p.clamp(PSI_FLOOR, 1.0 - PSI_FLOOR)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

const BLOCK: u32 = 32;

/// Blocked log of a product of probabilities.
#[derive(Debug, Clone, Copy)]
struct LogAccumulator {
    sum: CompensatedSum,
    product: f64,
    count: u32,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            sum: CompensatedSum::default(),
            product: 1.0,
            count: 0,
        }
    }
}

impl LogAccumulator {
    #[inline(always)]
    fn factor(psi: f64, bit: u8) -> f64 {
        let p = clamp_psi(psi);
        // indexed rather than branched: the bits are close to random
        [1.0 - p, p][usize::from(bit & 1)]
    }

    #[inline(always)]
    fn close_block(&mut self) {
        self.sum.add(self.product.ln());
        self.product = 1.0;
        self.count = 0;
    }

    /// Score `bits` in order, advancing `pred` past each one.
    #[inline(always)]
    fn extend<P: Predictor>(&mut self, pred: &mut P, mut bits: &[u8]) {
        while self.count != 0 && !bits.is_empty() {
            self.product *= Self::factor(pred.predict(), bits[0]);
            pred.advance(bits[0]);
            self.count += 1;
            bits = &bits[1..];
            if self.count == BLOCK {
                self.close_block();
            }
        }
        let mut chunks = bits.chunks_exact(BLOCK as usize);
        for chunk in &mut chunks {
            let mut product = 1.0;
            for &b in chunk {
                product *= Self::factor(pred.predict(), b);
                pred.advance(b);
            }
            self.sum.add(product.ln());
        }
        for &b in chunks.remainder() {
            self.product *= Self::factor(pred.predict(), b);
            pred.advance(b);
            self.count += 1;
        }
    }

    fn value(&self) -> f64 {
        let mut sum = self.sum;
        if self.count > 0 {
            sum.add(self.product.ln());
        }
        sum.value()
    }
}

/// Log-likelihood over prediction indices `range` (0-based `n`, scoring
/// `xi_{n+1}`). An empty range gives 0.
pub fn log_likelihood(params: &ModelParams, series: &BinarySeries, range: Range<usize>) -> Result<f64> {
    if range.end > series.len() {
        return Err(Error::Domain(format!(
            "likelihood range ends at {} but the series has {} observations",
            range.end,
            series.len()
        )));
    }
    if range.start >= range.end {
        return Ok(0.0);
    }
    let bits = series.bits();
    Ok(match params {
        ModelParams::Approx(p) => ranged(FashionPredictor::new(p), bits, range),
        ModelParams::Polya(p) => ranged(PolyaPredictor::new(p), bits, range),
    })
}

fn ranged<P: Predictor>(mut pred: P, bits: &[u8], range: Range<usize>) -> f64 {
    for &b in &bits[..range.start] {
        pred.advance(b);
    }
    let mut acc = LogAccumulator::default();
    acc.extend(&mut pred, &bits[range]);
    acc.value()
}

/// Log-likelihood over `0..T` for every `T` in `checkpoints` (non-decreasing),
/// from a single forward pass.
pub fn prefix_log_likelihoods(params: &ModelParams, bits: &[u8], checkpoints: &[usize]) -> Vec<f64> {
    match params {
        ModelParams::Approx(p) => prefix(FashionPredictor::new(p), bits, checkpoints),
        ModelParams::Polya(p) => prefix(PolyaPredictor::new(p), bits, checkpoints),
    }
}

fn prefix<P: Predictor>(mut pred: P, bits: &[u8], checkpoints: &[usize]) -> Vec<f64> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = LogAccumulator::default();
    let mut n = 0;
    for &end in checkpoints {
        assert!(end <= bits.len(), "checkpoint past the end of the series");
        acc.extend(&mut pred, &bits[n..end]);
        n = end;
        out.push(acc.value());
    }
    out
}

/// Constant-predictor log-likelihood from counts: `k ln p + (T - k) ln(1 - p)`.
pub fn constant_log_likelihood(p: f64, ones: usize, total: usize) -> f64 {
    let p = clamp_psi(p);
    let zeros = total - ones;
    let mut v = 0.0;
    if ones > 0 {
        v += ones as f64 * p.ln();
    }
    if zeros > 0 {
        v += zeros as f64 * (1.0 - p).ln();
    }
    v
}
