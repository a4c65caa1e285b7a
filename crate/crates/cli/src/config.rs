//! TOML experiment configuration. Each command reads only the sections it
//! needs; unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use holeburn::dipolar::SpinSpecies;
use holeburn::pulse::{PulseKind, PulseShape};
use holeburn::rate::{BurnSequence, PulseSegment, SnapshotPolicy};
use holeburn::zeeman::{ClassLabel, LevelSpin, SiteClass, SpinModel};
use holeburn::{Background, FrequencyGrid, LaserParams, MaterialParams};
use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::failure::Invalid;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
    pub material: Option<MaterialConfig>,
    pub laser: Option<LaserConfig>,
    pub sequence: Option<SequenceConfig>,
    pub pulse: Option<PulseStudyConfig>,
    pub spin_model: Option<SpinModelConfig>,
    pub site_classes: Option<Vec<SiteClassConfig>>,
    pub zeeman: Option<ZeemanConfig>,
    pub diffusion: Option<DiffusionConfig>,
    pub species: Option<Vec<SpeciesConfig>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| Invalid(format!("config: {}", e.message())).into())
    }
}

/// The named section, or a validation failure naming it.
pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, Invalid> {
    section
        .as_ref()
        .ok_or_else(|| Invalid(format!("missing section [{name}]")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub center_detuning_hz: f64,
    pub span_hz: f64,
    pub bins: usize,
}

impl GridConfig {
    pub fn build(&self) -> holeburn::Result<FrequencyGrid> {
        FrequencyGrid::new(self.center_detuning_hz, self.span_hz, self.bins)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub zeta: f64,
    pub excited_lifetime_s: Option<f64>,
    pub bottleneck_lifetime_s: Option<f64>,
    /// FWHM
    pub gamma_h_hz: Option<f64>,
    pub d0: Option<f64>,
}

impl MaterialConfig {
    pub fn build(&self) -> MaterialParams {
        let mut m = MaterialParams::with_zeta(self.zeta);
        if let Some(v) = self.excited_lifetime_s {
            m.excited_lifetime = v;
        }
        if let Some(v) = self.bottleneck_lifetime_s {
            m.bottleneck_lifetime = v;
        }
        if let Some(v) = self.gamma_h_hz {
            m.gamma_h = v;
        }
        if let Some(v) = self.d0 {
            m.d0 = Background::Constant(v);
        }
        m
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    /// Lorentzian half-width.
    pub linewidth_nu_hz: f64,
    pub rate_amplitude_hz: f64,
    pub center_detuning_hz: f64,
}

impl LaserConfig {
    pub fn build(&self) -> LaserParams {
        LaserParams {
            linewidth_nu: self.linewidth_nu_hz,
            rate_amplitude_a: self.rate_amplitude_hz,
            center_detuning: self.center_detuning_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Rectangular,
    Sech,
    Chirp,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// Label used in pulse study output file names.
    pub name: Option<String>,
    pub shape: ShapeName,
    pub duration_s: f64,
    /// Defaults to the laser's rate amplitude.
    pub rate_amplitude_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub beta_per_s: Option<f64>,
    pub truncation: Option<f64>,
}

impl PulseConfig {
    pub fn build(&self, default_amplitude: f64) -> Result<PulseShape, Invalid> {
        let a = self.rate_amplitude_hz.unwrap_or(default_amplitude);
        let bandwidth = || {
            self.bandwidth_hz
                .ok_or_else(|| Invalid(format!("{:?} pulse needs bandwidth_hz", self.shape)))
        };
        Ok(match self.shape {
            ShapeName::Rectangular => PulseShape::rectangular(self.duration_s, a),
            ShapeName::Chirp => PulseShape::linear_chirp(self.duration_s, a, bandwidth()?),
            ShapeName::Sech => {
                let beta = self
                    .beta_per_s
                    .ok_or_else(|| Invalid("sech pulse needs beta_per_s".into()))?;
                let mut shape = PulseShape::hyperbolic_secant(self.duration_s, a, bandwidth()?, beta);
                if let (Some(t), PulseKind::HyperbolicSecant { truncation, .. }) =
                    (self.truncation, &mut shape.kind)
                {
                    *truncation = t;
                }
                shape
            }
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentConfig {
    Burn { pulse: PulseConfig },
    Wait { duration_s: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotConfig {
    Segment,
    Cycle,
    Final,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default = "cycle")]
    pub snapshots: SnapshotConfig,
    pub segments: Vec<SegmentConfig>,
}

fn one() -> usize {
    1
}

fn cycle() -> SnapshotConfig {
    SnapshotConfig::Cycle
}

impl SequenceConfig {
    pub fn build(&self, laser: &LaserParams) -> Result<BurnSequence, Invalid> {
        let cycle = self
            .segments
            .iter()
            .map(|s| match s {
                SegmentConfig::Burn { pulse } => {
                    Ok(PulseSegment::burn(pulse.build(laser.rate_amplitude_a)?, *laser))
                }
                SegmentConfig::Wait { duration_s } => Ok(PulseSegment::wait(*duration_s)),
            })
            .collect::<Result<Vec<_>, Invalid>>()?;
        let policy = match self.snapshots {
            SnapshotConfig::Segment => SnapshotPolicy::AfterEachSegment,
            SnapshotConfig::Cycle => SnapshotPolicy::AfterEachCycle,
            SnapshotConfig::Final => SnapshotPolicy::FinalOnly,
        };
        Ok(BurnSequence::repeated(&cycle, self.repeat, policy))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseStudyConfig {
    pub sample_rate_hz: f64,
    /// Spectrum window width; defaults to four times the widest band.
    pub spectrum_span_hz: Option<f64>,
    #[serde(default = "spectrum_bins")]
    pub spectrum_bins: usize,
    /// Out-of-band probe as a multiple of the half-bandwidth.
    #[serde(default = "suppression_factor")]
    pub suppression_factor: f64,
    pub pulses: Vec<PulseConfig>,
}

fn spectrum_bins() -> usize {
    801
}

fn suppression_factor() -> f64 {
    1.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpinConfig {
    pub g_j: f64,
    pub a_j_hz: f64,
    pub gamma_hz_per_t: [f64; 3],
}

impl LevelSpinConfig {
    fn build(&self) -> LevelSpin {
        LevelSpin {
            g_j: self.g_j,
            a_j: self.a_j_hz,
            gamma: Vector3::from(self.gamma_hz_per_t),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinModelConfig {
    pub ground: LevelSpinConfig,
    pub excited: LevelSpinConfig,
    pub gamma_n_hz_per_t: f64,
    pub lambda_g_hz_per_t2: [[f64; 3]; 3],
    pub lambda_e_hz_per_t2: [[f64; 3]; 3],
}

fn matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

impl SpinModelConfig {
    pub fn build(&self) -> SpinModel {
        SpinModel {
            ground: self.ground.build(),
            excited: self.excited.build(),
            gamma_n: self.gamma_n_hz_per_t,
            lambda_g: matrix(&self.lambda_g_hz_per_t2),
            lambda_e: matrix(&self.lambda_e_hz_per_t2),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum LabelConfig {
    XZ,
    YZ,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteClassConfig {
    pub label: LabelConfig,
    /// Rows are the local X, Y, Z axes in crystal coordinates.
    pub rotation: [[f64; 3]; 3],
    pub population_weight: f64,
}

impl SiteClassConfig {
    pub fn build(&self) -> SiteClass {
        SiteClass {
            label: match self.label {
                LabelConfig::XZ => ClassLabel::ClassXZ,
                LabelConfig::YZ => ClassLabel::ClassYZ,
            },
            rotation: matrix(&self.rotation),
            population_weight: self.population_weight,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeemanConfig {
    /// Field direction in crystal coordinates; defaults to [111].
    pub direction: Option<[f64; 3]>,
    pub b_min_t: f64,
    pub b_max_t: f64,
    pub b_steps: usize,
    pub delta_b_t: f64,
    pub pattern_field_t: f64,
    #[serde(default = "equal_branches")]
    pub branch_weights: [f64; 2],
}

fn equal_branches() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    SelfTest,
    Csv,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub mode: DiffusionMode,
    /// Hz/T²
    pub k_hz_per_t2: f64,
    pub g_env: Option<f64>,
    pub temperature_k: Option<f64>,
    pub synthetic: Option<SyntheticConfig>,
    /// Columns b_t, t_s, fwhm_hz, sigma_hz (sigma may be empty).
    pub width_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub gamma_0_hz: f64,
    pub rate_rs_per_s: f64,
    pub gamma_max0_hz: f64,
    pub b_noise_t: f64,
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub points: usize,
    pub width_noise: f64,
    pub fields_t: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub name: String,
    pub concentration: f64,
    pub g_eff: f64,
    pub r_angstrom: f64,
}

impl SpeciesConfig {
    pub fn build(&self) -> SpinSpecies {
        SpinSpecies::new(
            &self.name,
            self.concentration,
            self.g_eff,
            self.r_angstrom * holeburn::constants::ANGSTROM,
        )
    }
}
