//! Least-squares Lorentzian fit of a single spectral hole.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::model::SpectralArray;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    /// Hz
    pub center: f64,
    /// Hz
    pub fwhm: f64,
    pub depth: f64,
    pub baseline: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

impl LorentzianFit {
    pub fn eval(&self, x: f64) -> f64 {
        let hw = 0.5 * self.fwhm;
        let d = x - self.center;
        self.baseline - self.depth * hw * hw / (d * d + hw * hw)
    }
}

/// Features shallower than this multiple of the noise estimate are rejected.
pub const FEATURE_SNR: f64 = 5.0;

struct HoleProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl LeastSquares for HoleProblem<'_> {
    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let (c, hw, depth, base) = (p[0], 0.5 * p[1], p[2], p[3]);
        for ((o, &x), &y) in out.iter_mut().zip(self.x).zip(self.y) {
            let d = x - c;
            *o = base - depth * hw * hw / (d * d + hw * hw) - y;
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let (c, hw, depth) = (p[0], 0.5 * p[1], p[2]);
        for (i, &x) in self.x.iter().enumerate() {
            let d = x - c;
            let den = d * d + hw * hw;
            let l = hw * hw / den;
            jac[(i, 0)] = -depth * hw * hw * 2.0 * d / (den * den);
            jac[(i, 1)] = -depth * hw * d * d / (den * den);
            jac[(i, 2)] = -l;
            jac[(i, 3)] = 1.0;
        }
    }
}

/// Robust noise estimate: scaled MAD of second differences.
pub fn noise_estimate(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let mut d2: Vec<f64> = y
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
        .collect();
    d2.sort_by(|a, b| a.total_cmp(b));
    let mad = d2[d2.len() / 2];
    1.4826 * mad / 6.0_f64.sqrt()
}

/// Fits `baseline − depth·(w/2)²/((Δ − c)² + (w/2)²)` to a spectrum with
/// one dominant hole.
pub fn fit_lorentzian(spectrum: &SpectralArray) -> Result<LorentzianFit> {
    let grid = spectrum.grid();
    let y = spectrum.values();
    let n = y.len();
    let h = grid.spacing();
    let x0 = grid.center_detuning();
    // Work in units of bins around the grid centre.
    let xs: Vec<f64> = (0..n).map(|i| (grid.detuning(i) - x0) / h).collect();

    let edge = (n / 10).max(1);
    let baseline0 = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>())
        / (2 * edge) as f64;
    let (imin, &ymin) = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has at least three bins");
    let depth0 = baseline0 - ymin;
    let noise = noise_estimate(y);
    let scale = baseline0.abs().max(depth0.abs()).max(f64::MIN_POSITIVE);
    if !(depth0 > FEATURE_SNR * noise && depth0 > 1e-12 * scale) {
        return Err(Error::NoFeatureFound {
            depth: depth0,
            noise,
        });
    }

    let half = baseline0 - 0.5 * depth0;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imin;
        for i in range {
            if y[i] >= half {
                let (ya, yb) = (y[prev], y[i]);
                let frac = if yb != ya { (half - ya) / (yb - ya) } else { 0.0 };
                return Some(xs[prev] + frac * (xs[i] - xs[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..imin).rev()).unwrap_or(xs[0]);
    let right = crossing(&mut (imin + 1..n)).unwrap_or(xs[n - 1]);
    let width0 = (right - left).max(2.0);

    let ys: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let problem = HoleProblem { x: &xs, y: &ys };
    let p0 = [xs[imin], width0, depth0 / scale, baseline0 / scale];
    let rep = levenberg_marquardt(
        &problem,
        &p0,
        LmOptions {
            max_iterations: 200,
            ..LmOptions::default()
        },
    );
    let p = rep.params;
    Ok(LorentzianFit {
        center: x0 + p[0] * h,
        fwhm: p[1].abs() * h,
        depth: p[2] * scale,
        baseline: p[3] * scale,
        residual_rms: (rep.cost / n as f64).sqrt() * scale,
        converged: rep.converged,
    })
}
