//! Lorentzian line shapes and FFT convolution with them.
//!
//! Convolution with a unit-area Lorentzian of half-width `w` is applied as a
//! multiplication by its characteristic function `exp(-2π·w·|τ|)` in the
//! conjugate (time) domain, so widths of successive convolutions add exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Lorentzian with unit peak and half-width `hwhm`, centred at `center`.
pub fn lorentzian_peak_normalized(x: f64, center: f64, hwhm: f64) -> f64 {
    let d = x - center;
    hwhm * hwhm / (hwhm * hwhm + d * d)
}

/// Lorentzian with unit area and half-width `hwhm`.
pub fn lorentzian_unit_area(x: f64, center: f64, hwhm: f64) -> f64 {
    let d = x - center;
    hwhm / (PI * (hwhm * hwhm + d * d))
}

/// How the finite grid is extended for the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero-pad to at least `factor` times the input length.
    ZeroPadded { factor: usize },
    /// Treat the input as one period; the total sum is preserved exactly.
    Periodic,
}

/// Convolves samples spaced `spacing` apart with unit-area Lorentzians of
/// the given half-widths (all applied in a single transform).
pub fn convolve_lorentzians(
    values: &[f64],
    spacing: f64,
    hwhms: &[f64],
    boundary: Boundary,
) -> Vec<f64> {
    let total: f64 = hwhms.iter().sum();
    if total == 0.0 || values.is_empty() {
        return values.to_vec();
    }
    let n = values.len();
    let len = match boundary {
        Boundary::ZeroPadded { factor } => (n * factor.max(1)).next_power_of_two(),
        Boundary::Periodic => n,
    };
    let mut buf: Vec<Complex64> = values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);

    let dtau = 1.0 / (len as f64 * spacing);
    for (k, z) in buf.iter_mut().enumerate() {
        let m = if k <= len / 2 { k } else { len - k };
        let tau = m as f64 * dtau;
        *z *= (-2.0 * PI * total * tau).exp();
    }

    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.iter().take(n).map(|z| z.re * scale).collect()
}
