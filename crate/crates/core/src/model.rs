//! Shared domain records: the detuning grid, arrays defined on it, and the
//! material and laser parameters every simulation stage consumes.
//!
//! Units are SI throughout (Hz, s, T, K). Conversions to other units only
//! happen when reading configuration or writing CSV.

use crate::error::{Error, InvalidParameter, Result};

/// Uniform detuning axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center_detuning: f64,
    span: f64,
    bin_count: usize,
}

impl FrequencyGrid {
    pub fn new(center_detuning: f64, span: f64, bin_count: usize) -> Result<Self> {
        let mut bad = Vec::new();
        if !center_detuning.is_finite() {
            bad.push(InvalidParameter::new("grid.center_detuning", "must be finite"));
        }
        if !(span.is_finite() && span > 0.0) {
            bad.push(InvalidParameter::new("grid.span", "must be > 0"));
        }
        if bin_count < 3 {
            bad.push(InvalidParameter::new("grid.bin_count", "must be >= 3"));
        }
        match bad.len() {
            0 => Ok(Self {
                center_detuning,
                span,
                bin_count,
            }),
            1 => Err(Error::InvalidParameter(bad.remove(0))),
            _ => Err(Error::Invalid(bad)),
        }
    }

    /// Grid with the given spacing, centred on `center_detuning`.
    pub fn with_spacing(center_detuning: f64, spacing: f64, bin_count: usize) -> Result<Self> {
        Self::new(center_detuning, spacing * (bin_count.max(1) - 1) as f64, bin_count)
    }

    pub fn center_detuning(&self) -> f64 {
        self.center_detuning
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn len(&self) -> usize {
        self.bin_count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.span / (self.bin_count - 1) as f64
    }

    pub fn start(&self) -> f64 {
        self.center_detuning - 0.5 * self.span
    }

    pub fn detuning(&self, i: usize) -> f64 {
        self.start() + i as f64 * self.spacing()
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.bin_count).map(|i| self.detuning(i)).collect()
    }

    /// Offsets of every bin from an arbitrary reference frequency.
    pub fn offsets_from(&self, reference: f64) -> Vec<f64> {
        (0..self.bin_count).map(|i| self.detuning(i) - reference).collect()
    }

    /// Index of the bin closest to `detuning`, clamped to the grid.
    pub fn nearest_bin(&self, detuning: f64) -> usize {
        let x = ((detuning - self.start()) / self.spacing()).round();
        x.clamp(0.0, (self.bin_count - 1) as f64) as usize
    }
}

/// What the values of a [`SpectralArray`] represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralUnit {
    Population,
    Rate,
    OpticalDepth,
}

/// Values sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralArray {
    grid: FrequencyGrid,
    values: Vec<f64>,
    unit: SpectralUnit,
}

/// Slack allowed on the population bounds for rounding in the propagator.
const POPULATION_SLACK: f64 = 1e-12;

impl SpectralArray {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>, unit: SpectralUnit) -> Result<Self> {
        if values.len() != grid.bin_count() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(InvalidParameter::new(
                "spectral_array.values",
                format!("non-finite value at bin {i}"),
            )
            .into());
        }
        let ok = match unit {
            SpectralUnit::Population => values
                .iter()
                .all(|&v| (-POPULATION_SLACK..=1.0 + POPULATION_SLACK).contains(&v)),
            SpectralUnit::Rate => values.iter().all(|&v| v >= 0.0),
            SpectralUnit::OpticalDepth => true,
        };
        if !ok {
            return Err(InvalidParameter::new(
                "spectral_array.values",
                format!("out of range for {unit:?}"),
            )
            .into());
        }
        Ok(Self { grid, values, unit })
    }

    pub fn constant(grid: FrequencyGrid, value: f64, unit: SpectralUnit) -> Result<Self> {
        Self::new(grid, vec![value; grid.bin_count()], unit)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> SpectralUnit {
        self.unit
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rectangle-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }

    pub(crate) fn ensure_grid(&self, grid: &FrequencyGrid) -> Result<()> {
        if same_grid(&self.grid, grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub(crate) fn same_grid(a: &FrequencyGrid, b: &FrequencyGrid) -> bool {
    a.bin_count == b.bin_count
        && (a.center_detuning - b.center_detuning).abs()
            <= 1e-12 * a.center_detuning.abs().max(a.span)
        && (a.span - b.span).abs() <= 1e-12 * a.span
}

/// Background (unburned) optical depth.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Constant(f64),
    Profile(SpectralArray),
}

impl Background {
    pub fn at(&self, bin: usize) -> f64 {
        match self {
            Background::Constant(v) => *v,
            Background::Profile(a) => a.values[bin],
        }
    }

    pub fn on(&self, grid: &FrequencyGrid) -> Result<SpectralArray> {
        match self {
            Background::Constant(v) => SpectralArray::constant(*grid, *v, SpectralUnit::OpticalDepth),
            Background::Profile(a) => {
                a.ensure_grid(grid)?;
                Ok(a.clone())
            }
        }
    }
}

/// Order-of-magnitude excited-state lifetime used when none is configured.
pub const DEFAULT_EXCITED_LIFETIME: f64 = 1e-3;
/// Order-of-magnitude bottleneck lifetime used when none is configured.
pub const DEFAULT_BOTTLENECK_LIFETIME: f64 = 50e-3;
/// Upper bound on the homogeneous linewidth, used as the default.
pub const DEFAULT_HOMOGENEOUS_LINEWIDTH: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Excited-state lifetime, s.
    pub excited_lifetime: f64,
    /// Bottleneck lifetime, s.
    pub bottleneck_lifetime: f64,
    /// Fraction of excited-state decay routed through the bottleneck.
    pub zeta: f64,
    /// Homogeneous linewidth (FWHM), Hz.
    pub gamma_h: f64,
    pub d0: Background,
}

impl MaterialParams {
    /// Material with the documented default lifetimes and linewidth. The
    /// branching ratio has no default.
    pub fn with_zeta(zeta: f64) -> Self {
        Self {
            excited_lifetime: DEFAULT_EXCITED_LIFETIME,
            bottleneck_lifetime: DEFAULT_BOTTLENECK_LIFETIME,
            zeta,
            gamma_h: DEFAULT_HOMOGENEOUS_LINEWIDTH,
            d0: Background::Constant(1.0),
        }
    }

    pub fn violations(&self) -> Vec<InvalidParameter> {
        let mut bad = Vec::new();
        if !(self.excited_lifetime.is_finite() && self.excited_lifetime > 0.0) {
            bad.push(InvalidParameter::new("material.excited_lifetime", "must be > 0"));
        }
        if !(self.bottleneck_lifetime.is_finite() && self.bottleneck_lifetime > 0.0) {
            bad.push(InvalidParameter::new("material.bottleneck_lifetime", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            bad.push(InvalidParameter::new("zeta", "must lie in [0, 1]"));
        }
        if !(self.gamma_h.is_finite() && self.gamma_h > 0.0) {
            bad.push(InvalidParameter::new("material.gamma_h", "must be > 0"));
        }
        match &self.d0 {
            Background::Constant(v) if !(v.is_finite() && *v >= 0.0) => {
                bad.push(InvalidParameter::new("material.d0", "must be >= 0"))
            }
            Background::Profile(a) if a.values.iter().any(|&v| v < 0.0) => {
                bad.push(InvalidParameter::new("material.d0", "must be >= 0 everywhere"))
            }
            _ => {}
        }
        bad
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    /// Lorentzian half-width ν, Hz (FWHM is 2ν).
    pub linewidth_nu: f64,
    /// Peak excitation rate a, Hz.
    pub rate_amplitude_a: f64,
    /// Laser detuning from the absorption line centre, Hz.
    pub center_detuning: f64,
}

impl LaserParams {
    pub fn violations(&self) -> Vec<InvalidParameter> {
        let mut bad = Vec::new();
        if !(self.linewidth_nu.is_finite() && self.linewidth_nu > 0.0) {
            bad.push(InvalidParameter::new("laser.linewidth_nu", "must be > 0"));
        }
        if !(self.rate_amplitude_a.is_finite() && self.rate_amplitude_a >= 0.0) {
            bad.push(InvalidParameter::new("laser.rate_amplitude_a", "must be >= 0"));
        }
        if !self.center_detuning.is_finite() {
            bad.push(InvalidParameter::new("laser.center_detuning", "must be finite"));
        }
        bad
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.rate_amplitude_a = a;
        self
    }
}

/// Ground, excited and bottleneck occupations on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub n_g: SpectralArray,
    pub n_e: SpectralArray,
    pub n_b: SpectralArray,
    /// Time of this state, s.
    pub timestamp: f64,
}

/// Tolerance on per-bin population closure.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

impl PopulationState {
    /// All population in the ground level.
    pub fn ground(grid: FrequencyGrid) -> Self {
        let ones = SpectralArray {
            grid,
            values: vec![1.0; grid.bin_count()],
            unit: SpectralUnit::Population,
        };
        let zeros = SpectralArray {
            grid,
            values: vec![0.0; grid.bin_count()],
            unit: SpectralUnit::Population,
        };
        Self {
            n_g: ones,
            n_e: zeros.clone(),
            n_b: zeros,
            timestamp: 0.0,
        }
    }

    pub fn from_values(
        grid: FrequencyGrid,
        n_g: Vec<f64>,
        n_e: Vec<f64>,
        n_b: Vec<f64>,
        timestamp: f64,
    ) -> Result<Self> {
        let state = Self {
            n_g: SpectralArray::new(grid, n_g, SpectralUnit::Population)?,
            n_e: SpectralArray::new(grid, n_e, SpectralUnit::Population)?,
            n_b: SpectralArray::new(grid, n_b, SpectralUnit::Population)?,
            timestamp,
        };
        let err = state.max_conservation_error();
        if err > CONSERVATION_TOLERANCE {
            return Err(InvalidParameter::new(
                "population_state",
                format!("n_g + n_e + n_b deviates from 1 by {err:.3e}"),
            )
            .into());
        }
        Ok(state)
    }

    pub(crate) fn from_unchecked(
        grid: FrequencyGrid,
        n_g: Vec<f64>,
        n_e: Vec<f64>,
        n_b: Vec<f64>,
        timestamp: f64,
    ) -> Self {
        let wrap = |values| SpectralArray {
            grid,
            values,
            unit: SpectralUnit::Population,
        };
        Self {
            n_g: wrap(n_g),
            n_e: wrap(n_e),
            n_b: wrap(n_b),
            timestamp,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.n_g.grid()
    }

    /// Largest per-bin |n_g + n_e + n_b − 1|.
    pub fn max_conservation_error(&self) -> f64 {
        self.n_g
            .values
            .iter()
            .zip(&self.n_e.values)
            .zip(&self.n_b.values)
            .map(|((g, e), b)| (g + e + b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Inputs that passed [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub material: MaterialParams,
    pub laser: LaserParams,
    pub grid: FrequencyGrid,
}

/// Checks every parameter invariant and reports all violations at once.
pub fn validate(
    material: MaterialParams,
    laser: LaserParams,
    grid: FrequencyGrid,
) -> Result<ValidatedConfig> {
    let mut bad = material.violations();
    bad.extend(laser.violations());
    if let Background::Profile(d0) = &material.d0 {
        if !same_grid(d0.grid(), &grid) {
            bad.push(InvalidParameter::new("material.d0", "profile grid differs from simulation grid"));
        }
    }
    if laser.linewidth_nu > 0.0 && grid.spacing() > laser.linewidth_nu / 4.0 {
        bad.push(InvalidParameter::new(
            "grid resolution",
            format!(
                "spacing {:.4e} Hz exceeds linewidth/4 = {:.4e} Hz",
                grid.spacing(),
                laser.linewidth_nu / 4.0
            ),
        ));
    }
    if bad.is_empty() {
        Ok(ValidatedConfig {
            material,
            laser,
            grid,
        })
    } else {
        Err(Error::Invalid(bad))
    }
}
