use nalgebra::DMatrix;

use super::{log_spaced, thermal_factor, DiffusionModel};
use crate::error::{Error, InvalidParameter, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};

/// One hole-width measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthPoint {
    /// s
    pub t_delay: f64,
    /// Hz
    pub fwhm: f64,
    /// Hz; `None` for unweighted fits.
    pub sigma: Option<f64>,
}

/// One diffusion-amplitude measurement at a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    /// T
    pub b: f64,
    /// Hz
    pub gamma_sd: f64,
    /// Hz
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionFit {
    pub gamma_0: f64,
    pub gamma_sd: f64,
    pub rate_rs: f64,
    /// 1σ uncertainties in the order (Γ_0, Γ_SD, R_s).
    pub sigma: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// Weighted sum of squared residuals.
    pub chi2: f64,
    pub converged: bool,
}

impl DiffusionFit {
    pub fn model(&self) -> DiffusionModel {
        DiffusionModel {
            gamma_0: self.gamma_0,
            gamma_sd: self.gamma_sd,
            rate_rs: self.rate_rs,
            gamma_max0: 0.0,
            b_noise: 0.0,
            g_env: 0.0,
            temperature: 0.0,
        }
    }
}

/// R_s·t_max below this means no point has left the linear regime.
const LINEAR_REGIME: f64 = 0.1;
/// R_s·t_min above this means every point sits on the plateau.
const SATURATED_REGIME: f64 = 5.0;
const MIN_WIDTH_POINTS: usize = 5;

struct WidthProblem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    w: &'a [f64],
}

impl WidthProblem<'_> {
    /// Analytic Jacobian in natural parameters (Γ_0, Γ_SD, R_s).
    fn natural_jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.t.len(), 3);
        for (i, &t) in self.t.iter().enumerate() {
            let e = (-p[2] * t).exp();
            j[(i, 0)] = self.w[i];
            j[(i, 1)] = self.w[i] * 0.5 * (1.0 - e);
            j[(i, 2)] = self.w[i] * 0.5 * p[1] * t * e;
        }
        j
    }
}

// Parameters for the optimizer are (Γ_0, Γ_SD, ln R_s).
impl LeastSquares for WidthProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let rs = p[2].exp();
        for i in 0..self.t.len() {
            let model = p[0] - 0.5 * p[1] * (-rs * self.t[i]).exp_m1();
            out[i] = self.w[i] * (model - self.y[i]);
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let rs = p[2].exp();
        let nat = self.natural_jacobian(&[p[0], p[1], rs]);
        jac.copy_from(&nat);
        jac.column_mut(2).scale_mut(rs);
    }
}

/// Weights 1/σ when every point has a positive σ, otherwise all 1.
fn weights(sigmas: impl Iterator<Item = Option<f64>>) -> Result<(Vec<f64>, bool)> {
    let s: Vec<Option<f64>> = sigmas.collect();
    if s.iter().all(Option::is_some) {
        let mut w = Vec::with_capacity(s.len());
        for v in s.into_iter().flatten() {
            if !(v.is_finite() && v > 0.0) {
                return Err(InvalidParameter::new("sigma", "must be > 0").into());
            }
            w.push(1.0 / v);
        }
        Ok((w, true))
    } else {
        Ok((vec![1.0; s.len()], false))
    }
}

/// Weighted fit of `Γ_0 + ½Γ_SD(1 − exp(−R_s·t))` to a width series.
///
/// Starts are seeded on a logarithmic R_s grid spanning the sampled delays;
/// for each start, Γ_0 and Γ_SD come from the linear sub-problem. Fits
/// whose R_s leaves the delays entirely in the linear or saturated regime
/// are reported as [`Error::DegenerateFit`].
pub fn fit_diffusion_timeseries(points: &[WidthPoint]) -> Result<DiffusionFit> {
    if points.len() < MIN_WIDTH_POINTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_WIDTH_POINTS} width points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.t_delay.is_finite() && p.t_delay >= 0.0 && p.fwhm.is_finite()))
    {
        return Err(InvalidParameter::new("t_delay", "must be finite and >= 0").into());
    }
    let t_max = points.iter().map(|p| p.t_delay).fold(0.0, f64::max);
    let t_min = points
        .iter()
        .map(|p| p.t_delay)
        .filter(|&t| t > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(t_min.is_finite() && t_max >= 10.0 * t_min) {
        return Err(Error::InsufficientData(
            "delays must span at least one decade".into(),
        ));
    }

    let t: Vec<f64> = points.iter().map(|p| p.t_delay).collect();
    let (w, weighted) = weights(points.iter().map(|p| p.sigma))?;
    // Rescale widths so the optimizer works near unity.
    let scale = points.iter().map(|p| p.fwhm.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let y: Vec<f64> = points.iter().map(|p| p.fwhm / scale).collect();
    let ws: Vec<f64> = w.iter().map(|v| v * scale).collect();
    let problem = WidthProblem { t: &t, y: &y, w: &ws };

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for rs in log_spaced(0.1 / t_max, 10.0 / t_min, 13) {
        let Some((g0, gsd)) = linear_subproblem(&t, &y, &ws, rs) else {
            continue;
        };
        let rep = levenberg_marquardt(&problem, &[g0, gsd, rs.ln()], LmOptions::default());
        if rep.cost.is_finite() && best.as_ref().map_or(true, |b| rep.cost < b.0) {
            best = Some((rep.cost, rep.params, rep.converged));
        }
    }
    let (cost, p, converged) =
        best.ok_or_else(|| Error::DegenerateFit("no start produced a finite fit".into()))?;
    let rate_rs = p[2].exp();

    if rate_rs * t_max < LINEAR_REGIME {
        return Err(Error::DegenerateFit(format!(
            "R_s = {rate_rs:.3e}/s leaves all delays in the linear regime (R_s·t_max = {:.3e})",
            rate_rs * t_max
        )));
    }
    if rate_rs * t_min > SATURATED_REGIME {
        return Err(Error::DegenerateFit(format!(
            "R_s = {rate_rs:.3e}/s puts all delays on the plateau (R_s·t_min = {:.3e})",
            rate_rs * t_min
        )));
    }

    let nat = [p[0], p[1], rate_rs];
    let j = problem.natural_jacobian(&nat);
    let cov = (j.transpose() * &j).try_inverse().ok_or_else(|| {
        Error::DegenerateFit("normal matrix is singular; R_s is unconstrained".into())
    })?;
    // Residuals are already in weighted physical units; only the Γ columns
    // of the Jacobian carry the width scaling.
    let dof = (points.len() - 3) as f64;
    let s2 = if weighted { 1.0 } else { cost / dof };
    let unit = [scale, scale, 1.0];
    let mut covariance = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            covariance[a][b] = cov[(a, b)] * s2 * unit[a] * unit[b];
        }
    }
    let sigma = [0, 1, 2].map(|k| covariance[k][k].max(0.0).sqrt());
    if sigma[2] > rate_rs {
        return Err(Error::DegenerateFit(format!(
            "R_s = {rate_rs:.3e} ± {:.3e}/s is unconstrained",
            sigma[2]
        )));
    }

    Ok(DiffusionFit {
        gamma_0: p[0] * scale,
        gamma_sd: p[1] * scale,
        rate_rs,
        sigma,
        covariance,
        chi2: cost,
        converged,
    })
}

/// Weighted linear least squares for (Γ_0, Γ_SD) at fixed R_s.
fn linear_subproblem(t: &[f64], y: &[f64], w: &[f64], rs: f64) -> Option<(f64, f64)> {
    let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..t.len() {
        let w2 = w[i] * w[i];
        let phi = -0.5 * (-rs * t[i]).exp_m1();
        s00 += w2;
        s01 += w2 * phi;
        s11 += w2 * phi * phi;
        b0 += w2 * y[i];
        b1 += w2 * phi * y[i];
    }
    let det = s00 * s11 - s01 * s01;
    if det.abs() <= 1e-14 * s00 * s11 {
        return None;
    }
    Some(((s11 * b0 - s01 * b1) / det, (s00 * b1 - s01 * b0) / det))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BNoiseFit {
    /// T; `None` when the slope is negative.
    pub b_noise: Option<f64>,
    pub b_noise_sigma: Option<f64>,
    /// Hz
    pub gamma_max0: f64,
    pub gamma_max0_sigma: f64,
    /// Hz/T
    pub slope: f64,
    pub slope_sigma: f64,
    pub warning: Option<String>,
}

/// Weighted line fit of Γ_SD/sech² against field; `b_noise = slope/K`.
///
/// `thermal` supplies `(g_env, temperature)` for the sech² correction;
/// `None` treats the factor as 1.
pub fn fit_bnoise(points: &[FieldPoint], k: f64, thermal: Option<(f64, f64)>) -> Result<BNoiseFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 field points, got {}",
            points.len()
        )));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(InvalidParameter::new("K", "must be > 0").into());
    }
    let factor = |b: f64| thermal.map_or(1.0, |(g, temp)| thermal_factor(b, temp, g));
    let x: Vec<f64> = points.iter().map(|p| p.b).collect();
    let y: Vec<f64> = points.iter().map(|p| p.gamma_sd / factor(p.b)).collect();
    let (w, weighted) = weights(points.iter().map(|p| p.sigma.map(|s| s / factor(p.b))))?;
    let w2: Vec<f64> = w.iter().map(|v| v * v).collect();

    let s: f64 = w2.iter().sum();
    let xm = x.iter().zip(&w2).map(|(a, b)| a * b).sum::<f64>() / s;
    let ym = y.iter().zip(&w2).map(|(a, b)| a * b).sum::<f64>() / s;
    let sxx: f64 = x.iter().zip(&w2).map(|(a, wi)| wi * (a - xm) * (a - xm)).sum();
    let sxy: f64 = x
        .iter()
        .zip(&y)
        .zip(&w2)
        .map(|((a, b), wi)| wi * (a - xm) * (b - ym))
        .sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("field points must not all coincide".into()));
    }
    let mut slope = sxy / sxx;
    let x_range = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - x.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // Slopes below numerical resolution of the data are exactly flat.
    if (slope * x_range).abs() <= 1e-12 * y_scale {
        slope = 0.0;
    }
    let intercept = ym - slope * xm;

    let s2 = if weighted {
        1.0
    } else {
        let rss: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        rss / (points.len() - 2) as f64
    };
    let slope_sigma = (s2 / sxx).sqrt();
    let gamma_max0_sigma = (s2 * (1.0 / s + xm * xm / sxx)).sqrt();

    let (b_noise, b_noise_sigma, warning) = if slope < 0.0 {
        (
            None,
            None,
            Some(format!("negative slope {slope:.4e} Hz/T; b_noise left unset")),
        )
    } else {
        (Some(slope / k), Some(slope_sigma / k), None)
    };
    Ok(BNoiseFit {
        b_noise,
        b_noise_sigma,
        gamma_max0: intercept,
        gamma_max0_sigma,
        slope,
        slope_sigma,
        warning,
    })
}

/// Series whose widths stay within this fraction of each other are
/// reported as comparable.
pub const COMPARABLE_DEVIATION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingComparison {
    /// (t_delay, width_b / width_a)
    pub ratios: Vec<(f64, f64)>,
    pub max_deviation: f64,
    pub comparable: bool,
}

/// Compares two width series sampled at the same delays.
pub fn equivalent_splitting_check(a: &[WidthPoint], b: &[WidthPoint]) -> Result<SplittingComparison> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::MismatchedSampling(format!(
            "series lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut ratios = Vec::with_capacity(a.len());
    for (pa, pb) in a.iter().zip(b) {
        let tol = 1e-9 * pa.t_delay.abs().max(1.0);
        if (pa.t_delay - pb.t_delay).abs() > tol {
            return Err(Error::MismatchedSampling(format!(
                "delays {} s and {} s differ",
                pa.t_delay, pb.t_delay
            )));
        }
        ratios.push((pa.t_delay, pb.fwhm / pa.fwhm));
    }
    let max_deviation = ratios.iter().map(|(_, r)| (r - 1.0).abs()).fold(0.0, f64::max);
    Ok(SplittingComparison {
        ratios,
        max_deviation,
        comparable: max_deviation < COMPARABLE_DEVIATION,
    })
}
