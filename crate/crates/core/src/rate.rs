//! Three-level (ground, excited, bottleneck) rate equations, integrated
//! exactly per frequency bin across a burn/wait sequence.
//!
//! Within a segment the excitation rate `R` is constant, so each bin obeys
//! a linear time-invariant system `dn/dt = M·n` with
//!
//! ```text
//!       | −R     R + (1−ζ)/T_e    1/T_b |
//!   M = |  R    −R − 1/T_e         0    |
//!       |  0     ζ/T_e           −1/T_b |
//! ```
//!
//! The columns of `M` sum to zero, so `n_g + n_e + n_b` is conserved. The
//! propagator `exp(M·dt)` is evaluated in closed form on the two-dimensional
//! (n_e, n_b) subspace with `n_g = 1 − n_e − n_b`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lineshape::{convolve_lorentzians, Boundary};
use crate::model::{
    Background, FrequencyGrid, LaserParams, MaterialParams, PopulationState, SpectralArray,
    SpectralUnit,
};
use crate::pulse::{excitation_rate, pulse_spectrum_on_grid, PulseKind, PulseShape};

/// The rate matrix `M` for one bin, rows/columns ordered (g, e, b).
pub fn rate_matrix(r: f64, material: &MaterialParams) -> nalgebra::Matrix3<f64> {
    let ge = 1.0 / material.excited_lifetime;
    let gb = 1.0 / material.bottleneck_lifetime;
    let z = material.zeta;
    nalgebra::Matrix3::new(
        -r,
        r + (1.0 - z) * ge,
        gb,
        r,
        -r - ge,
        0.0,
        0.0,
        z * ge,
        -gb,
    )
}

/// Exact propagation of one bin's `(n_g, n_e, n_b)` over `dt` at constant
/// rate `r`.
pub fn propagate_bin(n: [f64; 3], r: f64, material: &MaterialParams, dt: f64) -> [f64; 3] {
    let ge = 1.0 / material.excited_lifetime;
    let gb = 1.0 / material.bottleneck_lifetime;
    let z = material.zeta;
    let [_, e0, b0] = n;

    if r == 0.0 {
        // Decay cascade e → b → g.
        let decay_e = (-ge * dt).exp();
        let decay_b = (-gb * dt).exp();
        // (e^{-gb·t} − e^{-ge·t})/(ge − gb), factored so nothing overflows.
        let k = ge - gb;
        let feed = if (k * dt).abs() < 1e-12 {
            dt * decay_e
        } else if k > 0.0 {
            decay_b * -(-k * dt).exp_m1() / k
        } else {
            decay_e * (k * dt).exp_m1() / k
        };
        let e = e0 * decay_e;
        let b = b0 * decay_b + z * ge * e0 * feed;
        return [1.0 - e - b, e, b];
    }

    // x = (e, b), x' = A·x + c with c = (R, 0).
    let a11 = -(2.0 * r + ge);
    let a12 = -r;
    let a21 = z * ge;
    let a22 = -gb;
    let det = a11 * a22 - a12 * a21;
    // Fixed point x* = −A⁻¹c.
    let es = r * a22 / -det;
    let bs = -r * a21 / -det;
    let (u, v) = (e0 - es, b0 - bs);

    let (p, q) = exp2x2(a11, a12, a21, a22, dt);
    // exp(A·dt) = p·I + q·(A − s·I)
    let s = 0.5 * (a11 + a22);
    let eu = p * u + q * ((a11 - s) * u + a12 * v);
    let ev = p * v + q * (a21 * u + (a22 - s) * v);
    let e = es + eu;
    let b = bs + ev;
    [1.0 - e - b, e, b]
}

/// Coefficients `(p, q)` with `exp(A·t) = p·I + q·(A − s·I)`, `s = tr(A)/2`.
fn exp2x2(a11: f64, a12: f64, a21: f64, a22: f64, t: f64) -> (f64, f64) {
    let s = 0.5 * (a11 + a22);
    let d = 0.5 * (a11 - a22);
    let q2 = d * d + a12 * a21;
    if q2 > 0.0 {
        let q = q2.sqrt();
        let lo = ((s - q) * t).exp();
        if q * t > 1.0 {
            let hi = ((s + q) * t).exp();
            return (0.5 * (hi + lo), (hi - lo) / (2.0 * q));
        }
        // e^{st}·cosh(qt) and e^{st}·sinh(qt)/q without cancellation.
        let em = (2.0 * q * t).exp_m1();
        let p = lo + 0.5 * lo * em;
        let qq = lo * em / (2.0 * q);
        (p, qq)
    } else {
        let w = (-q2).sqrt();
        let es = (s * t).exp();
        let sinc = if w * t < 1e-8 {
            t * (1.0 - (w * t) * (w * t) / 6.0)
        } else {
            (w * t).sin() / w
        };
        (es * (w * t).cos(), es * sinc)
    }
}

/// Advances every bin of `state` by `dt`. `rate` of `None` means no light.
pub fn propagate_segment(
    state: &PopulationState,
    rate: Option<&SpectralArray>,
    material: &MaterialParams,
    dt: f64,
) -> Result<PopulationState> {
    let grid = *state.grid();
    if let Some(r) = rate {
        r.ensure_grid(&grid)?;
    }
    let g = state.n_g.values();
    let e = state.n_e.values();
    let b = state.n_b.values();
    let out: Vec<[f64; 3]> = (0..grid.bin_count())
        .into_par_iter()
        .map(|i| {
            let r = rate.map_or(0.0, |r| r.values()[i]);
            propagate_bin([g[i], e[i], b[i]], r, material, dt)
        })
        .collect();
    if let Some(bin) = out.iter().position(|n| n.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteState { bin });
    }
    let (mut ng, mut ne, mut nb) = (
        Vec::with_capacity(out.len()),
        Vec::with_capacity(out.len()),
        Vec::with_capacity(out.len()),
    );
    for [x, y, z] in out {
        ng.push(x);
        ne.push(y);
        nb.push(z);
    }
    Ok(PopulationState::from_unchecked(
        grid,
        ng,
        ne,
        nb,
        state.timestamp + dt,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseSegment {
    Burn { shape: PulseShape, laser: LaserParams },
    Wait { duration: f64 },
}

impl PulseSegment {
    pub fn burn(shape: PulseShape, laser: LaserParams) -> Self {
        PulseSegment::Burn { shape, laser }
    }

    pub fn wait(duration: f64) -> Self {
        PulseSegment::Wait { duration }
    }

    pub fn duration(&self) -> f64 {
        match self {
            PulseSegment::Burn { shape, .. } => shape.duration,
            PulseSegment::Wait { duration } => *duration,
        }
    }

    pub fn is_burn(&self) -> bool {
        matches!(self, PulseSegment::Burn { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    AfterEachSegment,
    /// A cycle ends right before each burn that follows the first one, and at
    /// the end of the sequence.
    AfterEachCycle,
    FinalOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurnSequence {
    pub segments: Vec<PulseSegment>,
    pub snapshot_policy: SnapshotPolicy,
}

impl BurnSequence {
    /// `cycle` repeated `count` times.
    pub fn repeated(cycle: &[PulseSegment], count: usize, snapshot_policy: SnapshotPolicy) -> Self {
        let segments = (0..count).flat_map(|_| cycle.iter().cloned()).collect();
        Self {
            segments,
            snapshot_policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidShape("burn sequence is empty".into()));
        }
        if !self.segments.iter().any(PulseSegment::is_burn) {
            return Err(Error::InvalidShape("burn sequence has no burn segment".into()));
        }
        for seg in &self.segments {
            let d = seg.duration();
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidShape(format!("segment duration must be > 0, got {d}")));
            }
            if let PulseSegment::Burn { shape, laser } = seg {
                shape.validate()?;
                if let Some(bad) = laser.violations().into_iter().next() {
                    return Err(bad.into());
                }
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(PulseSegment::duration).sum()
    }
}

/// Snapshots of the populations and optical depth through a sequence. The
/// first entry is always the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleEvolution {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    pub od_spectra: Vec<SpectralArray>,
}

impl HoleEvolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &PopulationState {
        self.states.last().expect("evolution always holds the initial state")
    }

    pub fn final_od(&self) -> &SpectralArray {
        self.od_spectra.last().expect("evolution always holds the initial state")
    }

    /// Largest per-bin closure error over all snapshots.
    pub fn max_conservation_error(&self) -> f64 {
        self.states
            .iter()
            .map(PopulationState::max_conservation_error)
            .fold(0.0, f64::max)
    }
}

/// Hole depth `d0 − OD` at `bin`.
pub fn hole_depth(od: &SpectralArray, d0: &Background, bin: usize) -> f64 {
    d0.at(bin) - od.values()[bin]
}

/// Excitation rate produced by one burn segment on `grid`.
///
/// Gated-CW (rectangular) burns use the closed-form laser Lorentzian; chirped
/// pulses go through their Fourier spectrum. The pulse's
/// `peak_rate_amplitude` sets `a`.
pub fn burn_rate(
    shape: &PulseShape,
    laser: &LaserParams,
    material: &MaterialParams,
    grid: &FrequencyGrid,
) -> Result<SpectralArray> {
    let laser = laser.with_amplitude(shape.peak_rate_amplitude);
    match shape.kind {
        PulseKind::Rectangular => excitation_rate(&laser, material, None, grid),
        _ => {
            let spec = pulse_spectrum_on_grid(shape, &laser, grid)?;
            excitation_rate(&laser, material, Some(&spec), grid)
        }
    }
}

/// Runs a full burn/wait sequence starting from `initial` (default: all
/// population in the ground level).
pub fn run_sequence(
    seq: &BurnSequence,
    material: &MaterialParams,
    grid: &FrequencyGrid,
    initial: Option<PopulationState>,
) -> Result<HoleEvolution> {
    seq.validate()?;
    let mut state = match initial {
        Some(s) => {
            if s.grid() != grid {
                return Err(Error::GridMismatch);
            }
            s
        }
        None => PopulationState::ground(*grid),
    };

    let mut cache: Vec<((PulseShape, LaserParams), SpectralArray)> = Vec::new();
    let mut evo = HoleEvolution {
        times: Vec::new(),
        states: Vec::new(),
        od_spectra: Vec::new(),
    };
    let record = |evo: &mut HoleEvolution, s: &PopulationState| -> Result<()> {
        evo.od_spectra.push(to_optical_depth(s, material)?);
        evo.times.push(s.timestamp);
        evo.states.push(s.clone());
        Ok(())
    };
    record(&mut evo, &state)?;

    let last = seq.segments.len() - 1;
    for (idx, seg) in seq.segments.iter().enumerate() {
        state = match seg {
            PulseSegment::Wait { duration } => propagate_segment(&state, None, material, *duration)?,
            PulseSegment::Burn { shape, laser } => {
                let key = (*shape, *laser);
                let pos = match cache.iter().position(|(k, _)| *k == key) {
                    Some(p) => p,
                    None => {
                        cache.push((key, burn_rate(shape, laser, material, grid)?));
                        cache.len() - 1
                    }
                };
                propagate_segment(&state, Some(&cache[pos].1), material, shape.duration)?
            }
        };
        let snap = match seq.snapshot_policy {
            SnapshotPolicy::AfterEachSegment => true,
            SnapshotPolicy::FinalOnly => idx == last,
            SnapshotPolicy::AfterEachCycle => {
                idx == last || (seq.segments[idx + 1].is_burn() && !seg.is_burn())
            }
        };
        if snap {
            record(&mut evo, &state)?;
        }
    }
    Ok(evo)
}

/// Optical depth `d0·n_g`.
pub fn to_optical_depth(state: &PopulationState, material: &MaterialParams) -> Result<SpectralArray> {
    let grid = *state.grid();
    let values = state
        .n_g
        .values()
        .iter()
        .enumerate()
        .map(|(i, g)| material.d0.at(i) * g)
        .collect();
    SpectralArray::new(grid, values, SpectralUnit::OpticalDepth)
}

/// Broadens the hole feature `d0 − OD` by a unit-area Lorentzian of FWHM
/// `added_fwhm` and returns the resulting optical depth.
///
/// The grid is treated as one period of the feature, which keeps the hole
/// area exact; keep the grid wide compared to the broadened hole.
pub fn apply_diffusion_broadening(
    spectrum: &SpectralArray,
    d0: &Background,
    added_fwhm: f64,
) -> Result<SpectralArray> {
    let grid = *spectrum.grid();
    if added_fwhm == 0.0 {
        return Ok(spectrum.clone());
    }
    if !(added_fwhm >= 2.0 * grid.spacing()) {
        return Err(Error::GridUnresolvable(format!(
            "added FWHM {added_fwhm:.4e} Hz is below two grid spacings ({:.4e} Hz)",
            2.0 * grid.spacing()
        )));
    }
    let feature: Vec<f64> = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(i, od)| d0.at(i) - od)
        .collect();
    let broadened = convolve_lorentzians(&feature, grid.spacing(), &[0.5 * added_fwhm], Boundary::Periodic);
    let values = broadened
        .iter()
        .enumerate()
        .map(|(i, f)| d0.at(i) - f)
        .collect();
    SpectralArray::new(grid, values, spectrum.unit())
}
