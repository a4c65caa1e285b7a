//! Physical constants (CODATA 2018, SI).

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// μ₀/4π, T·m/A.
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;
/// One ångström, m.
pub const ANGSTROM: f64 = 1e-10;
