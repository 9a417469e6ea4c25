//! CODATA 2018 constants (SI).

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// μ₀/4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1.000_000_000_55e-7;
pub const NUCLEAR_MAGNETON: f64 = 5.050_783_746_1e-27;
