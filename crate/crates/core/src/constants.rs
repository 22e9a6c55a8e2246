//! Physical constants (CODATA 2018, SI).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

pub const ANGSTROM: f64 = 1e-10;
pub const MICRON: f64 = 1e-6;
