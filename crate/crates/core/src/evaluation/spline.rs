//! Least-squares natural cubic regression splines on an index grid.
//!
//! The spline is parameterized by its values at `K + 2` equally spaced knots
//! (both ends plus `K` interior knots). Second derivatives at the knots are a
//! fixed linear map of those values (natural end conditions), so each sample
//! depends on four quantities of its interval and the normal equations can be
//! accumulated per interval in `O(n)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCurve {
    pub knot_count: usize,
    pub values: Vec<f64>,
}

/// Smallest input length accepted for `knot_count` interior knots.
pub fn min_length(knot_count: usize) -> usize {
    knot_count + 4
}

/// Maps knot values to knot second derivatives for a natural spline on unit
/// spacing. Row `i` holds the weights of `M_i`.
fn second_derivative_map(m: usize) -> Vec<Vec<f64>> {
    let interior = m - 2;
    let mut q = vec![vec![0.0; m]; m];
    // (1/6) M_{i-1} + (2/3) M_i + (1/6) M_{i+1} = y_{i+1} - 2 y_i + y_{i-1}
    for j in 0..m {
        let mut rhs: Vec<f64> = (1..=interior)
            .map(|i| {
                let y = |k: usize| if k == j { 1.0 } else { 0.0 };
                y(i + 1) - 2.0 * y(i) + y(i - 1)
            })
            .collect();
        // Thomas algorithm on the constant tridiagonal system.
        let (a, b, c) = (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0);
        let mut cp = vec![0.0; interior];
        for i in 0..interior {
            let denom = if i == 0 { b } else { b - a * cp[i - 1] };
            cp[i] = c / denom;
            rhs[i] = if i == 0 { rhs[i] / denom } else { (rhs[i] - a * rhs[i - 1]) / denom };
        }
        for i in (0..interior.saturating_sub(1)).rev() {
            rhs[i] -= cp[i] * rhs[i + 1];
        }
        for (i, v) in rhs.into_iter().enumerate() {
            q[i + 1][j] = v;
        }
    }
    q
}

#[inline]
fn locate(x: f64, intervals: usize) -> (usize, f64) {
    let j = (x.floor() as usize).min(intervals - 1);
    (j, x - j as f64)
}

#[inline]
fn local_basis(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s, t, (s * s * s - s) / 6.0, (t * t * t - t) / 6.0]
}

/// Least-squares natural cubic spline with `knot_count` equally spaced
/// interior knots, evaluated at every index of `values`.
pub fn smooth(values: &[f64], knot_count: usize) -> Result<SmoothedCurve> {
    if knot_count < 3 {
        return Err(Error::Config(format!("knot count must be >= 3, got {knot_count}")));
    }
    if values.len() < min_length(knot_count) {
        return Err(Error::InsufficientData {
            needed: min_length(knot_count),
            got: values.len(),
        });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("cannot smooth non-finite value {bad}")));
    }

    let m = knot_count + 2;
    let intervals = m - 1;
    let scale = intervals as f64 / (values.len() - 1) as f64;
    let q = second_derivative_map(m);

    let mut gram = vec![[[0.0f64; 4]; 4]; intervals];
    let mut moment = vec![[0.0f64; 4]; intervals];
    for (i, &v) in values.iter().enumerate() {
        let (j, t) = locate(i as f64 * scale, intervals);
        let z = local_basis(t);
        for a in 0..4 {
            moment[j][a] += z[a] * v;
            for b in a..4 {
                gram[j][a][b] += z[a] * z[b];
            }
        }
    }

    // Rows of the 4 x m map from knot values to (y_j, y_{j+1}, M_j, M_{j+1}).
    let local_map = |j: usize| -> [Vec<f64>; 4] {
        let mut e0 = vec![0.0; m];
        let mut e1 = vec![0.0; m];
        e0[j] = 1.0;
        e1[j + 1] = 1.0;
        [e0, e1, q[j].clone(), q[j + 1].clone()]
    };

    let mut xtx = DMatrix::<f64>::zeros(m, m);
    let mut xtv = DVector::<f64>::zeros(m);
    for j in 0..intervals {
        let p = local_map(j);
        let g = &gram[j];
        let sym = |a: usize, b: usize| if a <= b { g[a][b] } else { g[b][a] };
        for a in 0..4 {
            for (r, pr) in p[a].iter().enumerate() {
                if *pr == 0.0 {
                    continue;
                }
                xtv[r] += pr * moment[j][a];
                for b in 0..4 {
                    let w = pr * sym(a, b);
                    for (c, pc) in p[b].iter().enumerate() {
                        xtx[(r, c)] += w * pc;
                    }
                }
            }
        }
    }

    let knots_values = match xtx.clone().cholesky() {
        Some(ch) => ch.solve(&xtv),
        None => xtx
            .lu()
            .solve(&xtv)
            .ok_or_else(|| Error::Numeric("singular spline normal equations".into()))?,
    };
    let y: Vec<f64> = knots_values.iter().copied().collect();
    let second: Vec<f64> = q.iter().map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();

    let fitted = (0..values.len())
        .map(|i| {
            let (j, t) = locate(i as f64 * scale, intervals);
            let z = local_basis(t);
            z[0] * y[j] + z[1] * y[j + 1] + z[2] * second[j] + z[3] * second[j + 1]
        })
        .collect();
    Ok(SmoothedCurve {
        knot_count,
        values: fitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: dense least squares on the truncated-power natural
    /// spline basis.
    fn oracle(values: &[f64], knot_count: usize) -> Vec<f64> {
        let n = values.len();
        let k = knot_count + 2;
        let knots: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let cube = |v: f64| if v > 0.0 { v * v * v } else { 0.0 };
        let d = |j: usize, x: f64| (cube(x - knots[j]) - cube(x - knots[k - 1])) / (knots[k - 1] - knots[j]);
        let mut design = DMatrix::<f64>::zeros(n, k);
        for (i, &x) in xs.iter().enumerate() {
            design[(i, 0)] = 1.0;
            design[(i, 1)] = x;
            for j in 0..k - 2 {
                design[(i, j + 2)] = d(j, x) - d(k - 2, x);
            }
        }
        let rhs = DVector::from_column_slice(values);
        let svd = design.clone().svd(true, true);
        let coef = svd.solve(&rhs, 1e-14).unwrap();
        (design * coef).iter().copied().collect()
    }

    fn rss(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    #[test]
    fn agrees_with_truncated_power_oracle() {
        let values: Vec<f64> = (0..300)
            .map(|i| ((i as f64) * 0.05).sin() + ((i * 37 % 11) as f64) * 0.03)
            .collect();
        for k in [3, 5, 10] {
            let fast = smooth(&values, k).unwrap();
            let slow = oracle(&values, k);
            let max = fast.values.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(max < 1e-8, "k={k}: {max}");
        }
    }

    #[test]
    fn constants_and_lines_are_reproduced() {
        let c = vec![0.37; 500];
        for v in smooth(&c, 10).unwrap().values {
            assert!((v - 0.37).abs() < 1e-9);
        }
        let line: Vec<f64> = (0..777).map(|i| 2.0 - 0.003 * i as f64).collect();
        let s = smooth(&line, 20).unwrap();
        for (a, b) in s.values.iter().zip(&line) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn idempotent_on_its_own_output() {
        let values: Vec<f64> = (0..400).map(|i| ((i * i) % 17) as f64).collect();
        let once = smooth(&values, 5).unwrap();
        let twice = smooth(&once.values, 5).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn more_knots_fit_a_sine_better() {
        let values: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.002).sin()).collect();
        let coarse = smooth(&values, 3).unwrap();
        let fine = smooth(&values, 50).unwrap();
        assert!(rss(&fine.values, &values) < rss(&coarse.values, &values));
    }

    #[test]
    fn size_checks() {
        assert!(matches!(smooth(&[0.0; 6], 3), Err(Error::InsufficientData { needed: 7, .. })));
        assert!(smooth(&[0.0; 7], 3).is_ok());
        assert!(matches!(smooth(&[0.0; 100], 2), Err(Error::Config(_))));
        assert!(matches!(smooth(&[0.0, f64::NAN, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 3), Err(Error::Numeric(_))));
    }
}
