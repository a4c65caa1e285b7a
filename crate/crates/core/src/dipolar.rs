//! Order-of-magnitude dipolar fields from neighbouring spin species.

use crate::constants::{ANGSTROM, BOHR_MAGNETON, MU0_OVER_4PI};
use crate::error::{Error, InvalidParameter, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSpecies {
    pub name: String,
    /// Fraction of lattice sites occupied, 0..=1.
    pub concentration: f64,
    /// Effective g-factor in Bohr magnetons.
    pub g_eff: f64,
    /// Typical distance to the nearest such spin, m.
    pub typical_distance: f64,
}

impl SpinSpecies {
    pub fn new(name: &str, concentration: f64, g_eff: f64, typical_distance: f64) -> Self {
        Self {
            name: name.to_string(),
            concentration,
            g_eff,
            typical_distance,
        }
    }

    pub fn violations(&self) -> Vec<InvalidParameter> {
        let mut bad = Vec::new();
        let field = |f: &str| format!("species.{}.{f}", self.name);
        if !(self.concentration.is_finite() && (0.0..=1.0).contains(&self.concentration)) {
            bad.push(InvalidParameter::new(field("concentration"), "must lie in [0, 1]"));
        }
        if !(self.g_eff.is_finite() && self.g_eff >= 0.0) {
            bad.push(InvalidParameter::new(field("g_eff"), "must be >= 0"));
        }
        if !(self.typical_distance.is_finite() && self.typical_distance > 0.0) {
            bad.push(InvalidParameter::new(field("typical_distance"), "must be > 0"));
        }
        bad
    }
}

/// Field magnitude `(μ0/4π)·g·μ_B/r³`, T.
pub fn dipolar_field(species: &SpinSpecies) -> Result<f64> {
    dipolar_field_with_geometry(species, 1.0)
}

/// As [`dipolar_field`], times an angular factor (e.g. `|3cos²θ − 1|`).
pub fn dipolar_field_with_geometry(species: &SpinSpecies, geometric_factor: f64) -> Result<f64> {
    let bad = species.violations();
    if !bad.is_empty() {
        return Err(Error::Invalid(bad));
    }
    if !(geometric_factor.is_finite() && geometric_factor >= 0.0) {
        return Err(InvalidParameter::new("geometric_factor", "must be >= 0").into());
    }
    let r = species.typical_distance;
    Ok(MU0_OVER_4PI * species.g_eff * BOHR_MAGNETON / (r * r * r) * geometric_factor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRow {
    pub species: SpinSpecies,
    /// T
    pub field: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTable {
    /// Sorted by descending field; ties keep input order.
    pub rows: Vec<SpeciesRow>,
}

impl SpeciesTable {
    pub fn dominant(&self) -> &SpeciesRow {
        &self.rows[0]
    }
}

pub fn species_table(species: &[SpinSpecies]) -> Result<SpeciesTable> {
    if species.is_empty() {
        return Err(Error::InsufficientData("species list is empty".into()));
    }
    let mut rows = species
        .iter()
        .map(|s| {
            Ok(SpeciesRow {
                species: s.clone(),
                field: dipolar_field(s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.field.total_cmp(&a.field));
    Ok(SpeciesTable { rows })
}

/// Spin species of a thulium-doped yttrium gallium garnet host.
pub fn ygg_host_species() -> Vec<SpinSpecies> {
    vec![
        SpinSpecies::new("Tm", 0.01, 0.0077, 17.0 * ANGSTROM),
        SpinSpecies::new("Ga71", 0.40, 0.00071, 2.6 * ANGSTROM),
        SpinSpecies::new("Ga69", 0.60, 0.00092, 2.6 * ANGSTROM),
        SpinSpecies::new("Y", 0.99, 0.00014, 4.0 * ANGSTROM),
    ]
}
