//! CODATA 2018 values, SI units.

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of dysprosium-164.
pub const DY164_MASS: f64 = 163.929_181_9 * ATOMIC_MASS_UNIT;
