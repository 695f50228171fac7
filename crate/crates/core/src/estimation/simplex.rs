//! Box-constrained Nelder–Mead minimizer.
//!
//! Trial points are projected onto the box. The incumbent vertex is never
//! replaced by a worse point, so the returned value is never worse than the
//! starting point.

#[derive(Debug, Clone, Copy)]
pub struct SimplexSettings {
    /// Stop once the spread of function values over the simplex is below this.
    pub ftol: f64,
    /// ...and every vertex lies within this box-relative distance of the best.
    pub xtol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self {
            ftol: 1e-6,
            xtol: 1e-8,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimize `f` starting from `x0`, with initial edge lengths `step`.
/// A step that would leave the box is taken in the opposite direction.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &SimplexSettings,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert!(dim > 0 && step.len() == dim && lower.len() == dim && upper.len() == dim);
    let width: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(lo, hi)| (hi - lo).max(f64::MIN_POSITIVE))
        .collect();

    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, lower, upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(&start);
    simplex.push((start.clone(), f0));
    for i in 0..dim {
        let mut x = start.clone();
        let up = x[i] + step[i];
        x[i] = if up <= upper[i] { up } else { x[i] - step[i] };
        project(&mut x, lower, upper);
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Stable sort keeps earlier vertices first on ties, so the incumbent stays put.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = worst - best;
        let extent = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .zip(&width)
                    .map(|((a, b), w)| (a - b).abs() / w)
            })
            .fold(0.0, f64::max);
        if (spread <= settings.ftol || best == worst) && extent <= settings.xtol {
            converged = true;
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut x, lower, upper);
            x
        };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(EXPAND);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(CONTRACT * REFLECT);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-CONTRACT);
            let v = eval(&x);
            (x, v)
        };
        if fc < fr.min(worst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (v, a) in x.iter_mut().zip(&anchor) {
                *v = a + SHRINK * (*v - a);
            }
            project(x, lower, upper);
            *fx = eval(x);
        }
    }

    let (x, fx) = simplex.swap_remove(0);
    SimplexResult {
        x,
        fx,
        iterations,
        evaluations,
        converged,
    }
}
