//! Field projections onto site classes, linear Zeeman splittings,
//! quadratic Zeeman level shifts, and the hole/anti-hole pattern.
//!
//! Unit convention: gyromagnetic ratios are stored in Hz/T and hyperfine
//! constants in Hz, so the quadratic level shift
//!
//! ```text
//! D_J = g_J·μ_B / (2·A_J·h) · Σ_k (γ_J,k − γ_n)·B_k²
//! ```
//!
//! comes out in Hz (g_J·μ_B/(A_J·h) is in 1/T). The quadratic tensors Λ_g,
//! Λ_e are stored in Hz/T² with the g_J²·μ_B² prefactor already folded in.

use nalgebra::{Matrix3, Vector3};

use crate::constants::{BOHR_MAGNETON, PLANCK};
use crate::error::{Error, InvalidParameter, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::Ground => "ground",
            Level::Excited => "excited",
        }
    }
}

/// Spin-Hamiltonian parameters of one electronic level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpin {
    pub g_j: f64,
    /// Hyperfine interaction constant, Hz.
    pub a_j: f64,
    /// Enhanced gyromagnetic ratios along the local axes, Hz/T.
    pub gamma: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinModel {
    pub ground: LevelSpin,
    pub excited: LevelSpin,
    /// Bare nuclear gyromagnetic ratio, Hz/T.
    pub gamma_n: f64,
    /// Hz/T²
    pub lambda_g: Matrix3<f64>,
    /// Hz/T²
    pub lambda_e: Matrix3<f64>,
}

impl SpinModel {
    pub fn level(&self, level: Level) -> &LevelSpin {
        match level {
            Level::Ground => &self.ground,
            Level::Excited => &self.excited,
        }
    }

    pub fn violations(&self) -> Vec<InvalidParameter> {
        let mut bad = Vec::new();
        for (name, t) in [("lambda_g", &self.lambda_g), ("lambda_e", &self.lambda_e)] {
            let scale = t.amax().max(f64::MIN_POSITIVE);
            if (t - t.transpose()).amax() > 1e-12 * scale {
                bad.push(InvalidParameter::new(format!("spin.{name}"), "must be symmetric"));
            }
            if t.iter().any(|v| !v.is_finite()) {
                bad.push(InvalidParameter::new(format!("spin.{name}"), "must be finite"));
            }
        }
        for (name, l) in [("ground", &self.ground), ("excited", &self.excited)] {
            if l.gamma.iter().any(|v| !v.is_finite()) || !l.g_j.is_finite() || !l.a_j.is_finite() {
                bad.push(InvalidParameter::new(format!("spin.{name}"), "must be finite"));
            }
        }
        if !self.gamma_n.is_finite() {
            bad.push(InvalidParameter::new("spin.gamma_n", "must be finite"));
        }
        bad
    }

    /// Spectral norm of Λ_e − Λ_g, Hz/T²; the `K` of the diffusion model.
    pub fn quadratic_tensor_norm(&self) -> f64 {
        let diff = self.lambda_e - self.lambda_g;
        diff.symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    /// Field lies in the local XZ plane.
    ClassXZ,
    /// Field lies in the local YZ plane.
    ClassYZ,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::ClassXZ => "XZ",
            ClassLabel::ClassYZ => "YZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteClass {
    pub label: ClassLabel,
    /// Rows are the local X, Y, Z axes in crystal coordinates.
    pub rotation: Matrix3<f64>,
    pub population_weight: f64,
}

impl SiteClass {
    pub fn validate(&self) -> Result<()> {
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        if err > 1e-10 {
            return Err(InvalidParameter::new(
                format!("site_class.{}.rotation", self.label.as_str()),
                format!("not orthonormal (deviation {err:.2e})"),
            )
            .into());
        }
        if !(self.population_weight.is_finite() && self.population_weight >= 0.0) {
            return Err(InvalidParameter::new(
                format!("site_class.{}.population_weight", self.label.as_str()),
                "must be >= 0",
            )
            .into());
        }
        Ok(())
    }
}

pub fn validate_classes(classes: &[SiteClass]) -> Result<()> {
    for c in classes {
        c.validate()?;
    }
    let total: f64 = classes.iter().map(|c| c.population_weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(InvalidParameter::new(
            "site_classes",
            format!("population weights sum to {total}, not 1"),
        )
        .into());
    }
    Ok(())
}

/// The two magnetic classes seen by a field along ⟨111⟩. Both share local
/// Z ∥ [100]; local X/Y are the [011]/[01̄1] diagonals in opposite roles.
pub fn default_111_classes() -> [SiteClass; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        SiteClass {
            label: ClassLabel::ClassXZ,
            rotation: Matrix3::new(0.0, r, r, 0.0, -r, r, 1.0, 0.0, 0.0),
            population_weight: 0.5,
        },
        SiteClass {
            label: ClassLabel::ClassYZ,
            rotation: Matrix3::new(0.0, r, -r, 0.0, r, r, 1.0, 0.0, 0.0),
            population_weight: 0.5,
        },
    ]
}

/// Unit vector along ⟨111⟩.
pub fn dir_111() -> Vector3<f64> {
    Vector3::new(1.0, 1.0, 1.0).normalize()
}

/// Field in the site's local frame.
pub fn project_field(b_crystal: &Vector3<f64>, site: &SiteClass) -> Vector3<f64> {
    site.rotation * b_crystal
}

/// Quadratic Zeeman shift of one level for a local field, Hz.
pub fn level_shift(b_local: &Vector3<f64>, level: Level, model: &SpinModel) -> Result<f64> {
    let l = model.level(level);
    if l.a_j == 0.0 {
        return Err(Error::ZeroHyperfineConstant(level.name()));
    }
    let prefactor = l.g_j * BOHR_MAGNETON / (2.0 * l.a_j * PLANCK);
    let form: f64 = (0..3)
        .map(|k| (l.gamma[k] - model.gamma_n) * b_local[k] * b_local[k])
        .sum();
    Ok(prefactor * form)
}

/// Optical transition shift (excited minus ground) for a crystal-frame
/// field, Hz.
pub fn transition_shift(b_crystal: &Vector3<f64>, site: &SiteClass, model: &SpinModel) -> Result<f64> {
    let local = project_field(b_crystal, site);
    Ok(level_shift(&local, Level::Excited, model)? - level_shift(&local, Level::Ground, model)?)
}

/// Linear Zeeman splittings `(D_g, D_e)` of the two levels, Hz.
pub fn splittings(b_crystal: &Vector3<f64>, site: &SiteClass, model: &SpinModel) -> (f64, f64) {
    let local = project_field(b_crystal, site);
    let split = |l: &LevelSpin| l.gamma.component_mul(&local).norm();
    (split(&model.ground), split(&model.excited))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSplit {
    pub label: ClassLabel,
    /// Hz
    pub center_shift: f64,
    /// Separation of the two spin-branch holes, Hz.
    pub splitting: f64,
}

/// Hole centre shift and branch splitting after the field steps from
/// `b_initial` to `b_initial + delta_b`, per class.
///
/// Spin-preserving branches move by `center_shift ± (ΔD_e − ΔD_g)/2`, so the
/// two holes end up `|ΔD_e − ΔD_g|` apart.
pub fn predict_shift_split(
    b_initial: &Vector3<f64>,
    delta_b: &Vector3<f64>,
    model: &SpinModel,
    classes: &[SiteClass],
) -> Result<Vec<ShiftSplit>> {
    let b_final = b_initial + delta_b;
    classes
        .iter()
        .map(|site| {
            let center_shift =
                transition_shift(&b_final, site, model)? - transition_shift(b_initial, site, model)?;
            let (g0, e0) = splittings(b_initial, site, model);
            let (g1, e1) = splittings(&b_final, site, model);
            Ok(ShiftSplit {
                label: site.label,
                center_shift,
                splitting: ((e1 - e0) - (g1 - g0)).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Hole,
    Antihole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternLine {
    /// Hz from the burn frequency.
    pub offset: f64,
    pub kind: FeatureKind,
    pub relative_strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolePattern {
    /// Sorted by offset, holes before antiholes at equal offsets.
    pub lines: Vec<PatternLine>,
}

impl HolePattern {
    pub fn total(&self, kind: FeatureKind) -> f64 {
        self.lines
            .iter()
            .filter(|l| l.kind == kind)
            .map(|l| l.relative_strength)
            .sum()
    }

    pub fn offsets(&self, kind: FeatureKind) -> Vec<f64> {
        self.lines
            .iter()
            .filter(|l| l.kind == kind)
            .map(|l| l.offset)
            .collect()
    }
}

/// Hole and anti-hole positions for ground/excited splittings `d_g`, `d_e`.
///
/// `branch_weights = (α, β)` are the relative strengths of spin-preserving
/// and spin-flipping optical transitions (normalized internally). Pumped
/// ions leave a central hole (α² + β²) and side holes at ±D_e (αβ each).
/// Population moved to the other ground spin state absorbs at ±D_g (αβ
/// each) and at ±(D_g ± D_e) ((α² + β²)/4 each). Coincident lines of the
/// same kind are merged. With `d_g = 0` there is no spin state to store
/// population in, so no anti-holes are emitted.
pub fn hole_pattern(d_g: f64, d_e: f64, branch_weights: (f64, f64)) -> Result<HolePattern> {
    if !(d_g >= 0.0 && d_e >= 0.0) {
        return Err(InvalidParameter::new("splittings", "D_g and D_e must be >= 0").into());
    }
    let (a, b) = branch_weights;
    let norm = a + b;
    if !(a >= 0.0 && b >= 0.0 && norm > 0.0) {
        return Err(InvalidParameter::new(
            "branch_weights",
            "must be non-negative and not both zero",
        )
        .into());
    }
    let (a, b) = (a / norm, b / norm);
    let same = a * a + b * b;
    let cross = a * b;

    let mut raw = vec![
        (0.0, FeatureKind::Hole, same),
        (d_e, FeatureKind::Hole, cross),
        (-d_e, FeatureKind::Hole, cross),
    ];
    if d_g > 0.0 {
        for s in [1.0, -1.0] {
            raw.push((s * d_g, FeatureKind::Antihole, cross));
            raw.push((s * (d_g + d_e), FeatureKind::Antihole, 0.25 * same));
            raw.push((s * (d_g - d_e), FeatureKind::Antihole, 0.25 * same));
        }
    }

    let tol = 1e-9 * d_g.max(d_e).max(1.0);
    let mut lines: Vec<PatternLine> = Vec::new();
    for (offset, kind, strength) in raw {
        match lines
            .iter_mut()
            .find(|l| l.kind == kind && (l.offset - offset).abs() <= tol)
        {
            Some(l) => l.relative_strength += strength,
            None => lines.push(PatternLine {
                offset,
                kind,
                relative_strength: strength,
            }),
        }
    }
    // Zero-strength lines carry no information.
    lines.retain(|l| l.relative_strength > 0.0);
    lines.sort_by(|x, y| {
        x.offset
            .total_cmp(&y.offset)
            .then((x.kind == FeatureKind::Antihole).cmp(&(y.kind == FeatureKind::Antihole)))
    });
    Ok(HolePattern { lines })
}
