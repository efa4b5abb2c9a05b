//! Physical constants and unit conversions (SI, CODATA 2018 / IAU 2015).

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Newtonian constant of gravitation, m³/(kg·s²).
pub const G: f64 = 6.674_30e-11;

/// Reduced Planck constant as measured today, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Nominal solar mass, kg.
pub const M_SUN: f64 = 1.988_47e30;

/// Kiloparsec, m.
pub const KPC: f64 = 3.085_677_581_491_367e19;

/// Julian year, s.
pub const YEAR: f64 = 365.25 * 86_400.0;

/// Hour, s.
pub const HOUR: f64 = 3_600.0;

/// One arcsecond, rad.
pub const ARCSEC: f64 = std::f64::consts::PI / (180.0 * 3_600.0);

/// Default Hubble time (13.8 Gyr), s.
pub const HUBBLE_TIME: f64 = 4.35e17;

/// Schwarzschild radius `2GM/c²` of a mass, m.
pub fn schwarzschild_radius(mass: f64) -> f64 {
    2.0 * G * mass / (C * C)
}
