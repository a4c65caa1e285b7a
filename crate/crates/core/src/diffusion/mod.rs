//! Sudden-jump spectral diffusion: hole width versus delay, its field and
//! temperature dependence, and fits that recover the model parameters.
//!
//! The width model is fixed to the equality form
//! `Γ_hole(t) = Γ_0 + ½·Γ_SD·(1 − exp(−R_s·t))`.
//! The diffusion amplitude follows `Γ_SD = Γ_max·sech²(g_env·μ_B·B/(k·T))`
//! and grows with field as `Γ_max(B) = K·B·B_noise + Γ_max(0)`, where `K`
//! (Hz/T²) lumps the electronic g-factor, Bohr magneton and the norm of the
//! excited/ground quadratic Zeeman tensor difference.

mod hole_fit;
mod series;

pub use hole_fit::{fit_lorentzian, noise_estimate, LorentzianFit, FEATURE_SNR};
pub use series::{
    equivalent_splitting_check, fit_bnoise, fit_diffusion_timeseries, BNoiseFit, DiffusionFit,
    FieldPoint, SplittingComparison, WidthPoint, COMPARABLE_DEVIATION,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::constants::{BOHR_MAGNETON, BOLTZMANN};

/// Hole readout cadence used for simulated long-timescale series, s.
pub const DEFAULT_READOUT_INTERVAL: f64 = 11.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionModel {
    /// Initial hole width Γ_0, Hz.
    pub gamma_0: f64,
    /// Diffusion amplitude Γ_SD, Hz.
    pub gamma_sd: f64,
    /// Diffusion rate R_s, 1/s.
    pub rate_rs: f64,
    /// Field-independent part of Γ_max, Hz.
    pub gamma_max0: f64,
    /// Field noise amplitude, T.
    pub b_noise: f64,
    pub g_env: f64,
    /// K
    pub temperature: f64,
}

impl DiffusionModel {
    pub fn violations(&self) -> Vec<crate::error::InvalidParameter> {
        let fields = [
            ("gamma_0", self.gamma_0),
            ("gamma_sd", self.gamma_sd),
            ("rate_rs", self.rate_rs),
            ("gamma_max0", self.gamma_max0),
            ("b_noise", self.b_noise),
            ("g_env", self.g_env),
            ("temperature", self.temperature),
        ];
        fields
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v >= 0.0))
            .map(|(name, _)| {
                crate::error::InvalidParameter::new(format!("diffusion.{name}"), "must be >= 0")
            })
            .collect()
    }
}

/// Hole FWHM after `t_delay` seconds, Hz.
pub fn hole_width_model(t_delay: f64, m: &DiffusionModel) -> f64 {
    m.gamma_0 - 0.5 * m.gamma_sd * (-m.rate_rs * t_delay).exp_m1()
}

/// `sech²(g_env·μ_B·B/(k·T))`.
pub fn thermal_factor(b: f64, temperature: f64, g_env: f64) -> f64 {
    let x = g_env * BOHR_MAGNETON * b / (BOLTZMANN * temperature);
    let s = 1.0 / x.cosh();
    s * s
}

/// Diffusion amplitude at field `b` and `temperature`, Hz.
pub fn gamma_sd_of_bt(b: f64, temperature: f64, g_env: f64, gamma_max: f64) -> f64 {
    gamma_max * thermal_factor(b, temperature, g_env)
}

/// `Γ_max(B) = K·B·B_noise + Γ_max(0)` with `k` in Hz/T².
pub fn gamma_max_of_b(b: f64, m: &DiffusionModel, k: f64) -> f64 {
    k * b * m.b_noise + m.gamma_max0
}

/// Width series sampled from the model with relative Gaussian noise.
///
/// Each point carries `sigma = noise_fraction·width` (or `None` when
/// noise-free).
pub fn synthetic_width_series<R: Rng>(
    m: &DiffusionModel,
    times: &[f64],
    noise_fraction: f64,
    rng: &mut R,
) -> Vec<WidthPoint> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    times
        .iter()
        .map(|&t| {
            let w = hole_width_model(t, m);
            let sigma = noise_fraction * w;
            let fwhm = if noise_fraction > 0.0 {
                w + sigma * unit.sample(rng)
            } else {
                w
            };
            WidthPoint {
                t_delay: t,
                fwhm,
                sigma: (noise_fraction > 0.0).then_some(sigma),
            }
        })
        .collect()
}

/// Γ_SD samples across `fields` with relative Gaussian noise.
pub fn synthetic_field_series<R: Rng>(
    m: &DiffusionModel,
    k: f64,
    fields: &[f64],
    noise_fraction: f64,
    rng: &mut R,
) -> Vec<FieldPoint> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    fields
        .iter()
        .map(|&b| {
            let g = gamma_sd_of_bt(b, m.temperature, m.g_env, gamma_max_of_b(b, m, k));
            let sigma = noise_fraction * g;
            let value = if noise_fraction > 0.0 {
                g + sigma * unit.sample(rng)
            } else {
                g
            };
            FieldPoint {
                b,
                gamma_sd: value,
                sigma: (noise_fraction > 0.0).then_some(sigma),
            }
        })
        .collect()
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
