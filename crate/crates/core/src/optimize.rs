//! Box-constrained trust-region minimization with finite-difference
//! derivatives.
//!
//! Each iteration builds a central-difference gradient and Hessian, solves
//! the trust-region subproblem on the free (non-binding) variables through
//! an eigendecomposition, projects the step onto the box and accepts it
//! only when the objective actually decreases. The returned point is
//! therefore never worse than the starting point.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

const HESSIAN_STEP: f64 = 1e-4;
const INITIAL_RADIUS: f64 = 0.5;
const MAX_RADIUS: f64 = 1e3;
const MIN_RADIUS: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrustRegionOptions {
    /// Relative finite-difference step for the gradient.
    pub grad_step: f64,
    /// Tolerance on the projected gradient norm and on the step length.
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` over the box `[lower, upper]` starting from `x0`.
///
/// Infinite bounds are allowed. `f` may return `+∞` (or NaN) to mark
/// infeasible points; such trial steps are simply rejected.
pub fn minimize_box<F>(f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: &TrustRegionOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n, "bound dimensions must match x0");

    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };

    let mut x = x0.to_vec();
    project(&mut x);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Minimum {
            x,
            value: fx,
            iterations: 0,
            converged: false,
        };
    }

    let mut radius = INITIAL_RADIUS;
    for iter in 0..opts.max_iters {
        let g = gradient(&f, &x, fx, lower, upper, opts.grad_step);
        let free: Vec<usize> = (0..n)
            .filter(|&i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg_norm = free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        if pg_norm <= opts.tol {
            return Minimum {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            };
        }

        let h = hessian(&f, &x, fx, lower, upper);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
        let hf = DMatrix::from_fn(free.len(), free.len(), |r, c| h[(free[r], free[c])]);

        // inner loop: shrink the radius until a step is accepted
        loop {
            let p = subproblem(&hf, &gf, radius);
            let mut trial = x.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += p[k];
            }
            project(&mut trial);
            let step = DVector::from_iterator(free.len(), free.iter().map(|&i| trial[i] - x[i]));
            let step_norm = step.norm();
            let predicted = -(gf.dot(&step) + 0.5 * step.dot(&(&hf * &step)));
            let f_trial = f(&trial);
            let actual = fx - f_trial;

            if f_trial.is_finite() && actual > 0.0 && predicted > 0.0 && actual / predicted > 1e-4 {
                let ratio = actual / predicted;
                let interior = step_norm < 0.99 * radius;
                x = trial;
                fx = f_trial;
                if ratio < 0.25 {
                    radius = 0.25 * step_norm;
                } else if ratio > 0.75 && step_norm >= 0.99 * radius {
                    radius = (2.0 * radius).min(MAX_RADIUS);
                }
                let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if interior && step_norm <= opts.tol * scale {
                    return Minimum {
                        x,
                        value: fx,
                        iterations: iter + 1,
                        converged: true,
                    };
                }
                break;
            }
            // a decrease the model did not predict is still a decrease
            if f_trial.is_finite() && actual > 0.0 && predicted <= 0.0 {
                x = trial;
                fx = f_trial;
                radius = 0.5 * step_norm.max(MIN_RADIUS);
                break;
            }

            radius = 0.25 * step_norm.min(radius);
            let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if radius < opts.tol * scale || radius < MIN_RADIUS || step_norm == 0.0 {
                // no decreasing step longer than the step tolerance exists
                return Minimum {
                    x,
                    value: fx,
                    iterations: iter + 1,
                    converged: radius < opts.tol * scale,
                };
            }
        }
    }

    Minimum {
        x,
        value: fx,
        iterations: opts.max_iters,
        converged: false,
    }
}

fn step_for(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64, lower: &[f64], upper: &[f64], rel: f64) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut probe = x.to_vec();
    for i in 0..n {
        let h = step_for(x[i], rel);
        let up_ok = x[i] + h <= upper[i];
        let down_ok = x[i] - h >= lower[i];
        let mut eval = |v: f64| {
            probe[i] = v;
            let r = f(&probe);
            probe[i] = x[i];
            r
        };
        let fp = if up_ok { eval(x[i] + h) } else { f64::NAN };
        let fm = if down_ok { eval(x[i] - h) } else { f64::NAN };
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], fx: f64, lower: &[f64], upper: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    // keep every probe inside the box by centring the stencil away from a bound
    let mut centre = x.to_vec();
    let steps: Vec<f64> = (0..n).map(|i| step_for(x[i], HESSIAN_STEP)).collect();
    for i in 0..n {
        let h = steps[i];
        if centre[i] - h < lower[i] {
            centre[i] = lower[i] + h;
        }
        if centre[i] + h > upper[i] {
            centre[i] = upper[i] - h;
        }
    }
    let f0 = if centre == x { fx } else { f(&centre) };
    let mut probe = centre.clone();
    let mut at = |d: &[(usize, f64)]| {
        for &(i, s) in d {
            probe[i] = centre[i] + s;
        }
        let r = f(&probe);
        for &(i, _) in d {
            probe[i] = centre[i];
        }
        r
    };

    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = steps[i];
        h[(i, i)] = (at(&[(i, hi)]) - 2.0 * f0 + at(&[(i, -hi)])) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (at(&[(i, hi), (j, hj)]) - at(&[(i, hi), (j, -hj)]) - at(&[(i, -hi), (j, hj)])
                + at(&[(i, -hi), (j, -hj)]))
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        // fall back to a scaled identity: a steepest-descent model
        return DMatrix::identity(n, n);
    }
    h
}

/// Minimize `gᵀp + ½pᵀHp` subject to `‖p‖ ≤ radius`.
fn subproblem(h: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = g.len();
    if n == 0 {
        return DVector::zeros(0);
    }
    let eig = SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let lambdas = &eig.eigenvalues;
    let gt = q.transpose() * g;
    let min_eig = lambdas.min();

    let step_norm = |shift: f64| -> f64 {
        (0..n)
            .map(|k| {
                let d = lambdas[k] + shift;
                (gt[k] / d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let step = |shift: f64| -> DVector<f64> {
        let coeffs = DVector::from_fn(n, |k, _| -gt[k] / (lambdas[k] + shift));
        q * coeffs
    };

    if min_eig > 0.0 && step_norm(0.0) <= radius {
        return step(0.0);
    }

    // find shift > max(0, -min_eig) with ‖p(shift)‖ = radius by bisection
    let floor = (-min_eig).max(0.0);
    let mut lo = floor + 1e-12 * (1.0 + floor);
    if step_norm(lo) <= radius {
        // hard case or tiny gradient: take the shifted step as is
        return step(lo);
    }
    let mut hi = floor + g.norm() / radius + lambdas.amax() + 1.0;
    while step_norm(hi) > radius {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if step_norm(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    step(hi)
}
