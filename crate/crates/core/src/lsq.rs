//! Small dense Levenberg–Marquardt solver used by the fitting routines.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    fn n_residuals(&self) -> usize;

    fn residuals(&self, p: &[f64], out: &mut [f64]);

    /// Jacobian of the residuals; central differences unless overridden.
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let m = self.n_residuals();
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        let mut q = p.to_vec();
        for j in 0..p.len() {
            let h = 1e-7 * p[j].abs().max(1e-7);
            q[j] = p[j] + h;
            self.residuals(&q, &mut plus);
            q[j] = p[j] - h;
            self.residuals(&q, &mut minus);
            q[j] = p[j];
            for i in 0..m {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost reduction below which the fit is converged.
    pub ftol: f64,
    /// Relative parameter step below which the fit is converged.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn levenberg_marquardt<P: LeastSquares>(problem: &P, p0: &[f64], opts: LmOptions) -> LmReport {
    let m = problem.n_residuals();
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&p, &mut r);
    let mut cost = sum_sq(&r);
    let mut jac = DMatrix::zeros(m, n);
    let mut lambda = opts.initial_lambda;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];

    for it in 0..opts.max_iterations {
        if cost == 0.0 {
            return LmReport {
                params: p,
                cost,
                iterations: it,
                converged: true,
            };
        }
        problem.jacobian(&p, &mut jac);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);

        let mut stepped = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            for k in 0..n {
                trial[k] = p[k] + delta[k];
            }
            problem.residuals(&trial, &mut r_trial);
            let new_cost = sum_sq(&r_trial);
            if new_cost.is_finite() && new_cost <= cost {
                let rel_cost = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                let rel_step = delta
                    .iter()
                    .zip(&p)
                    .map(|(d, x)| d.abs() / (x.abs() + 1e-30))
                    .fold(0.0, f64::max);
                p.copy_from_slice(&trial);
                r.copy_from_slice(&r_trial);
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                stepped = true;
                if rel_cost < opts.ftol || rel_step < opts.xtol {
                    return LmReport {
                        params: p,
                        cost,
                        iterations: it + 1,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // No downhill step at any damping: the current point is a
            // minimum to working precision.
            return LmReport {
                params: p,
                cost,
                iterations: it + 1,
                converged: true,
            };
        }
    }
    LmReport {
        params: p,
        cost,
        iterations: opts.max_iterations,
        converged: false,
    }
}

/// `(JᵀJ)⁻¹` at `p`, or `None` when singular.
pub fn covariance<P: LeastSquares>(problem: &P, p: &[f64]) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(problem.n_residuals(), p.len());
    problem.jacobian(p, &mut jac);
    (jac.transpose() * &jac).try_inverse()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}
