//! Burn-pulse envelopes, their power spectra, and the frequency-dependent
//! excitation rate they produce.
//!
//! A pulse is described by an amplitude envelope `A(t)` and an instantaneous
//! frequency offset `f(t)` from the laser carrier. The complex envelope is
//! `A(t)·exp(i·2π∫f dt)`. The adiabatic hyperbolic-secant pulse uses
//! `A = sech(β(t − t_mid))` and `f = (B/2)·tanh(β(t − t_mid))`, which for
//! `πB/β ≫ 1` yields a nearly rectangular spectrum of width `B`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lineshape::{convolve_lorentzians, lorentzian_peak_normalized, Boundary};
use crate::model::{FrequencyGrid, LaserParams, MaterialParams, SpectralArray, SpectralUnit};

pub const DEFAULT_TRUNCATION: f64 = 0.01;
pub const ZERO_PAD_FACTOR: usize = 4;
/// Sample rate must exceed this multiple of `bandwidth + 1/duration`.
pub const NYQUIST_MARGIN: f64 = 16.0;
/// Below this time-bandwidth product a chirp is flagged as non-adiabatic.
pub const ADIABATIC_TB_PRODUCT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseKind {
    /// Gated CW: constant amplitude, no chirp.
    Rectangular,
    HyperbolicSecant {
        chirp_bandwidth: f64,
        steepness_beta: f64,
        truncation: f64,
    },
    /// Constant amplitude with a linear frequency ramp (serrodyne sweep).
    LinearChirp { chirp_bandwidth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub kind: PulseKind,
    /// s
    pub duration: f64,
    /// Peak excitation rate `a` produced by this pulse, Hz.
    pub peak_rate_amplitude: f64,
}

impl PulseShape {
    pub fn rectangular(duration: f64, peak_rate_amplitude: f64) -> Self {
        Self {
            kind: PulseKind::Rectangular,
            duration,
            peak_rate_amplitude,
        }
    }

    pub fn hyperbolic_secant(
        duration: f64,
        peak_rate_amplitude: f64,
        chirp_bandwidth: f64,
        steepness_beta: f64,
    ) -> Self {
        Self {
            kind: PulseKind::HyperbolicSecant {
                chirp_bandwidth,
                steepness_beta,
                truncation: DEFAULT_TRUNCATION,
            },
            duration,
            peak_rate_amplitude,
        }
    }

    pub fn linear_chirp(duration: f64, peak_rate_amplitude: f64, chirp_bandwidth: f64) -> Self {
        Self {
            kind: PulseKind::LinearChirp { chirp_bandwidth },
            duration,
            peak_rate_amplitude,
        }
    }

    pub fn chirp_bandwidth(&self) -> f64 {
        match self.kind {
            PulseKind::Rectangular => 0.0,
            PulseKind::HyperbolicSecant { chirp_bandwidth, .. }
            | PulseKind::LinearChirp { chirp_bandwidth } => chirp_bandwidth,
        }
    }

    /// Lowest sample rate accepted by [`synthesize`].
    pub fn min_sample_rate(&self) -> f64 {
        NYQUIST_MARGIN * (self.chirp_bandwidth() + 1.0 / self.duration)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.peak_rate_amplitude.is_finite() && self.peak_rate_amplitude >= 0.0) {
            return bad("peak_rate_amplitude must be >= 0".into());
        }
        let bw = self.chirp_bandwidth();
        if !(bw.is_finite() && bw >= 0.0) {
            return bad("chirp_bandwidth must be >= 0".into());
        }
        if let PulseKind::HyperbolicSecant {
            steepness_beta,
            truncation,
            ..
        } = self.kind
        {
            if !(steepness_beta.is_finite() && steepness_beta > 0.0) {
                return bad("steepness_beta must be > 0".into());
            }
            if !(truncation > 0.0 && truncation < 1.0) {
                return bad("truncation must lie in (0, 1)".into());
            }
            // The window has to contain the cut points, otherwise the pulse
            // is clipped by the window instead of by the truncation level.
            let half = 0.5 * self.duration * steepness_beta;
            if half < (1.0 / truncation).acosh() {
                return bad(format!(
                    "sech envelope is still {:.3e} at the window edge, above truncation {truncation}",
                    1.0 / half.cosh()
                ));
            }
        }
        Ok(())
    }

    /// Advisory message when a chirped pulse is too short to be adiabatic.
    pub fn adiabaticity_warning(&self) -> Option<String> {
        let tb = self.chirp_bandwidth() * self.duration;
        match self.kind {
            PulseKind::Rectangular => None,
            _ if tb < ADIABATIC_TB_PRODUCT => Some(format!(
                "time-bandwidth product {tb:.2} < {ADIABATIC_TB_PRODUCT}: chirp is not adiabatic"
            )),
            _ => None,
        }
    }
}

/// Sampled amplitude and instantaneous-frequency channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub sample_rate: f64,
    /// Normalized to [0, 1].
    pub amplitude: Vec<f64>,
    /// Hz offset from the carrier.
    pub instantaneous_frequency: Vec<f64>,
    /// Delay of the amplitude channel relative to the frequency channel, s.
    pub amplitude_delay: f64,
}

impl SampledWaveform {
    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt()).collect()
    }

    pub fn with_amplitude_delay(mut self, delay: f64) -> Self {
        self.amplitude_delay = delay;
        self
    }

    /// `A(t − delay)·exp(i·φ(t))` with φ the trapezoid-integrated phase.
    pub fn complex_envelope(&self) -> Vec<Complex64> {
        let dt = self.dt();
        let n = self.len();
        let mut phase = 0.0;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                phase += PI
                    * dt
                    * (self.instantaneous_frequency[k - 1] + self.instantaneous_frequency[k]);
            }
            let a = self.delayed_amplitude(k);
            out.push(Complex64::from_polar(a, phase));
        }
        out
    }

    fn delayed_amplitude(&self, k: usize) -> f64 {
        if self.amplitude_delay == 0.0 {
            return self.amplitude[k];
        }
        let x = k as f64 - self.amplitude_delay * self.sample_rate;
        if x < 0.0 || x > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        if i + 1 >= self.len() {
            return self.amplitude[i];
        }
        self.amplitude[i] * (1.0 - frac) + self.amplitude[i + 1] * frac
    }
}

/// Samples the amplitude and frequency channels of `shape`.
///
/// The window spans `[0, duration]` inclusive with an odd-symmetric sampling
/// about the midpoint. The effective sample rate is adjusted so an integer
/// number of intervals fits the duration.
pub fn synthesize(shape: &PulseShape, sample_rate: f64) -> Result<SampledWaveform> {
    shape.validate()?;
    let required = shape.min_sample_rate();
    if !(sample_rate >= required) {
        return Err(Error::NyquistViolation {
            sample_rate,
            required,
        });
    }
    let intervals = (shape.duration * sample_rate).ceil().max(1.0) as usize;
    let n = intervals + 1;
    let dt = shape.duration / intervals as f64;
    let t_mid = 0.5 * shape.duration;
    let t = |k: usize| k as f64 * dt;

    let (amplitude, freq): (Vec<f64>, Vec<f64>) = match shape.kind {
        PulseKind::Rectangular => (vec![1.0; n], vec![0.0; n]),
        PulseKind::LinearChirp { chirp_bandwidth } => (
            vec![1.0; n],
            (0..n)
                .map(|k| chirp_bandwidth * (t(k) / shape.duration - 0.5))
                .collect(),
        ),
        PulseKind::HyperbolicSecant {
            chirp_bandwidth,
            steepness_beta,
            truncation,
        } => (0..n)
            .map(|k| {
                let x = steepness_beta * (t(k) - t_mid);
                let a = 1.0 / x.cosh();
                let a = if a <= truncation { 0.0 } else { a };
                (a, 0.5 * chirp_bandwidth * x.tanh())
            })
            .unzip(),
    };

    Ok(SampledWaveform {
        sample_rate: 1.0 / dt,
        amplitude,
        instantaneous_frequency: freq,
        amplitude_delay: 0.0,
    })
}

/// `|F(Δ)|²` of the waveform at arbitrary carrier offsets, peak-normalized
/// over the requested offsets.
pub fn power_spectrum_at(w: &SampledWaveform, offsets: &[f64]) -> Result<Vec<f64>> {
    let extent = 2.0 * offsets.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if extent > 0.5 * w.sample_rate {
        return Err(Error::GridUnresolvable(format!(
            "spectral extent {extent:.4e} Hz exceeds half the sample rate {:.4e} Hz",
            0.5 * w.sample_rate
        )));
    }
    let env = w.complex_envelope();
    let dt = w.dt();
    let mut power: Vec<f64> = offsets
        .par_iter()
        .map(|&f| {
            let step = Complex64::from_polar(1.0, -2.0 * PI * f * dt);
            let mut rot = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for z in &env {
                acc += z * rot;
                rot *= step;
            }
            (acc * dt).norm_sqr()
        })
        .collect();
    let peak = power.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        power.iter_mut().for_each(|p| *p /= peak);
    }
    Ok(power)
}

/// Power spectrum on `grid`, with the grid centre taken as the carrier.
pub fn power_spectrum(w: &SampledWaveform, grid: &FrequencyGrid) -> Result<SpectralArray> {
    if grid.span() > 0.5 * w.sample_rate {
        return Err(Error::GridUnresolvable(format!(
            "grid span {:.4e} Hz exceeds half the sample rate {:.4e} Hz",
            grid.span(),
            0.5 * w.sample_rate
        )));
    }
    let offsets = grid.offsets_from(grid.center_detuning());
    let values = power_spectrum_at(w, &offsets)?;
    SpectralArray::new(*grid, values, SpectralUnit::Rate)
}

/// Pulse spectrum positioned on `grid` around the laser detuning `Δ_o`.
pub fn pulse_spectrum_on_grid(
    shape: &PulseShape,
    laser: &LaserParams,
    grid: &FrequencyGrid,
) -> Result<SpectralArray> {
    let offsets = grid.offsets_from(laser.center_detuning);
    let max_offset = offsets.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sample_rate = shape.min_sample_rate().max(4.0 * max_offset);
    let w = synthesize(shape, sample_rate)?;
    let values = power_spectrum_at(&w, &offsets)?;
    SpectralArray::new(*grid, values, SpectralUnit::Rate)
}

/// Frequency-dependent optical pumping rate.
///
/// Without a pulse spectrum this is the closed-form laser Lorentzian
/// `a·ν²/(ν² + (Δ − Δ_o)²)`. With one, the pulse spectrum stands in for the
/// laser line: it is convolved with the homogeneous line (half-width γ_h/2)
/// only, then scaled so its peak equals `a`.
pub fn excitation_rate(
    laser: &LaserParams,
    material: &MaterialParams,
    pulse_spec: Option<&SpectralArray>,
    grid: &FrequencyGrid,
) -> Result<SpectralArray> {
    let a = laser.rate_amplitude_a;
    let values = match pulse_spec {
        None => grid
            .detunings()
            .into_iter()
            .map(|d| a * lorentzian_peak_normalized(d, laser.center_detuning, laser.linewidth_nu))
            .collect(),
        Some(spec) => {
            spec.ensure_grid(grid)?;
            let conv = convolve_lorentzians(
                spec.values(),
                grid.spacing(),
                &[0.5 * material.gamma_h],
                Boundary::ZeroPadded {
                    factor: ZERO_PAD_FACTOR,
                },
            );
            scale_to_peak(conv, a)
        }
    };
    SpectralArray::new(*grid, values, SpectralUnit::Rate)
}

/// Rescales so the maximum equals `peak`; FFT round-off below zero is
/// removed.
pub(crate) fn scale_to_peak(mut v: Vec<f64>, peak: f64) -> Vec<f64> {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 || peak == 0.0 {
        return vec![0.0; v.len()];
    }
    let s = peak / max;
    v.iter_mut().for_each(|x| *x = (*x * s).max(0.0));
    v
}

/// Relative out-of-band power at `offset` (normalized to the in-band peak),
/// in dB.
pub fn out_of_band_db(shape: &PulseShape, offset: f64, sample_rate: f64) -> Result<f64> {
    let w = synthesize(shape, sample_rate)?;
    // Probe the in-band region densely enough to find the true peak.
    let bw = shape.chirp_bandwidth().max(1.0 / shape.duration);
    let mut offsets: Vec<f64> = (0..=400).map(|i| bw * (i as f64 / 400.0 - 0.5)).collect();
    offsets.push(offset);
    let p = power_spectrum_at(&w, &offsets)?;
    Ok(10.0 * p[p.len() - 1].max(f64::MIN_POSITIVE).log10())
}
