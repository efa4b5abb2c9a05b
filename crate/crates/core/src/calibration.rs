//! Observational calibration of the zero-momentum profile coefficients.
//!
//! Four independent solvers turn measured quantities into coefficient
//! combinations:
//!
//! 1. the assumed present fractional drift of ħ fixes the temporal scale
//!    `b₁/b₂`;
//! 2. today's ħ then fixes the amplitude `β²b₂b₃`;
//! 3. equating the asymptotic field energy density to the vacuum energy fixes
//!    `b₂b₃`, `β` and `b₁b₃`;
//! 4. a fractional ħ difference across a known radial baseline fixes the
//!    radial scale `b₄/b₃`.
//!
//! [`calibrate`] chains them and assembles an [`HbarProfile`].

use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, HUBBLE_TIME, YEAR};
use crate::error::{Error, Result};
use crate::profiles::HbarProfile;

/// Published values of the calibration table, used for deviation reports.
pub mod published {
    pub const B1_OVER_B2: f64 = 1.0e33;
    pub const BETA2_B2B3: f64 = 1.11e-101;
    pub const B2B3: f64 = 3.86e92;
    pub const BETA: f64 = 1.70e-97;
    pub const B1B3: f64 = 3.86e125;
    pub const B4_OVER_B3: f64 = 1.62e8;
    pub const RADIAL_LOG_GRADIENT: f64 = -3.5e-15;
    pub const TEMPORAL_RATE_PER_YEAR: f64 = 4.73e-18;
    pub const VACUUM_ENERGY: f64 = 5.63e-10;
}

/// Observational inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInputs {
    /// ħ measured today, J·s.
    pub hbar_m: f64,
    /// Hubble time, s.
    pub t_h: f64,
    /// Present fractional drift `∂_t ħ / ħ`, 1/yr. Its sign is a free choice
    /// and is never defaulted.
    pub alpha_rate: f64,
    /// Vacuum energy density, J/m³.
    pub lambda_energy: f64,
    /// Fractional ħ difference across the radial baseline.
    pub frac_delta_hbar: f64,
    /// Radius at which the radial gradient is measured, m.
    pub r_orbit: f64,
    /// Radial baseline over which `frac_delta_hbar` is observed, m.
    pub delta_r_orbit: f64,
}

impl CalibrationInputs {
    /// The demonstration inputs: ħ today, a 13.8 Gyr Hubble time, a
    /// fine-structure-sized drift of 4.73e-18 /yr attributed to ħ, the vacuum
    /// energy 5.63e-10 J/m³, and a 21 ppm ħ difference across the Earth's
    /// orbital eccentricity (6e9 m at 1.52e11 m).
    pub fn demonstration() -> Self {
        Self {
            hbar_m: HBAR,
            t_h: HUBBLE_TIME,
            alpha_rate: published::TEMPORAL_RATE_PER_YEAR,
            lambda_energy: published::VACUUM_ENERGY,
            frac_delta_hbar: 21e-6,
            r_orbit: 1.52e11,
            delta_r_orbit: 6e9,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("hbar_m", self.hbar_m),
            ("t_h", self.t_h),
            ("lambda_energy", self.lambda_energy),
            ("r_orbit", self.r_orbit),
            ("delta_r_orbit", self.delta_r_orbit),
        ];
        for (name, v) in positive {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be non-negative and finite, got {v:e}"
                )));
            }
        }
        if !(self.hbar_m > 0.0 && self.t_h > 0.0 && self.r_orbit > 0.0 && self.delta_r_orbit > 0.0)
        {
            return Err(Error::invalid(
                "hbar_m, t_h, r_orbit and delta_r_orbit must be strictly positive",
            ));
        }
        if !self.alpha_rate.is_finite() || !(self.frac_delta_hbar >= 0.0) {
            return Err(Error::invalid(
                "alpha_rate must be finite and frac_delta_hbar non-negative",
            ));
        }
        Ok(())
    }
}

/// Solves `(c/2) / (b₁/b₂ + c t_H) = rate` for `b₁/b₂` (m), with `rate`
/// given per year.
///
/// A zero rate returns `f64::INFINITY` (static field). A negative rate gives
/// a negative `b₁/b₂`, i.e. ħ decreasing in time. Rates large enough to force
/// `b₁/b₂ <= 0` for growing ħ have no solution.
pub fn solve_temporal(alpha_rate_per_year: f64, t_h: f64) -> Result<f64> {
    if alpha_rate_per_year == 0.0 {
        return Ok(f64::INFINITY);
    }
    let rate = alpha_rate_per_year / YEAR;
    let b1_over_b2 = 0.5 * C / rate - C * t_h;
    if rate > 0.0 && b1_over_b2 <= 0.0 {
        return Err(Error::NoSolution(format!(
            "drift rate {alpha_rate_per_year:e}/yr exceeds 1/(2 t_H); b1/b2 would be {b1_over_b2:e} m"
        )));
    }
    Ok(b1_over_b2)
}

/// `β²b₂b₃ = ħ_m² / (b₁/b₂ + c t_H)`.
pub fn solve_amplitude(hbar_m: f64, b1_over_b2: f64, t_h: f64) -> Result<f64> {
    let denom = b1_over_b2 + C * t_h;
    if denom == 0.0 {
        return Err(Error::DivisionByZero("b1/b2 + c t_H"));
    }
    Ok(hbar_m * hbar_m / denom)
}

/// Vacuum-matched coefficient combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumCoefficients {
    /// `b₂b₃`, 1/(J·m²·s²).
    pub b2b3: f64,
    /// `β`, kg^{3/2}·m^{7/2}/s.
    pub beta: f64,
    /// `b₁b₃`, 1/(J·m·s²).
    pub b1b3: f64,
}

/// Solves `β²(b₂b₃)²/8 = Λ` jointly with the known `β²b₂b₃`.
pub fn solve_vacuum(
    lambda_energy: f64,
    beta2_b2b3: f64,
    b1_over_b2: f64,
) -> Result<VacuumCoefficients> {
    if lambda_energy == 0.0 {
        return Err(Error::DegenerateVacuum);
    }
    if beta2_b2b3 == 0.0 {
        return Err(Error::DivisionByZero("beta^2 b2 b3"));
    }
    let b2b3 = 8.0 * lambda_energy / beta2_b2b3;
    let radicand = beta2_b2b3 / b2b3;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(VacuumCoefficients {
        b2b3,
        beta: radicand.sqrt(),
        b1b3: b1_over_b2 * b2b3,
    })
}

/// Radial scale from a measured log-gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialScale {
    /// Exact solution of `(ℓ/2)/(R(R + ℓ)) = δ/ΔR`.
    pub exact: f64,
    /// Small-ℓ approximation `ℓ ≈ 2R² δ/ΔR`.
    pub small_ell: f64,
}

/// Solves `−(ℓ/2)/(R²(1 + ℓ/R)) = −δ/ΔR` for `ℓ = b₄/b₃`.
///
/// Clearing denominators leaves `ℓ(1 − 2gR) = 2gR²` with `g = δ/ΔR`, so a
/// positive root exists only while `2gR < 1`.
pub fn solve_radial(frac_delta_hbar: f64, r_orbit: f64, delta_r_orbit: f64) -> Result<RadialScale> {
    if !(r_orbit > 0.0 && delta_r_orbit > 0.0) {
        return Err(Error::invalid("orbit radius and baseline must be positive"));
    }
    if frac_delta_hbar < 0.0 {
        return Err(Error::invalid("fractional ħ change must be non-negative"));
    }
    let g = frac_delta_hbar / delta_r_orbit;
    let small_ell = 2.0 * g * r_orbit * r_orbit;
    let lead = 1.0 - 2.0 * g * r_orbit;
    if lead <= 0.0 {
        return Err(Error::NoPositiveRoot(format!(
            "gradient {g:e} 1/m is too steep for any positive scale at R = {r_orbit:e} m"
        )));
    }
    Ok(RadialScale {
        exact: small_ell / lead,
        small_ell,
    })
}

/// One calibrated quantity with its published counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedValue {
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// Published value, when the demonstration inputs are used.
    pub published: Option<f64>,
    /// `(value − published)/published`.
    pub rel_deviation: Option<f64>,
    /// Which inputs determine the value.
    pub derived_from: String,
}

/// Full coefficient table plus the assembled profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub inputs: CalibrationInputs,
    /// m (infinite for a static field).
    pub b1_over_b2: f64,
    /// J²·s²/m.
    pub beta2_b2b3: f64,
    /// 1/(J·m²·s²).
    pub b2b3: f64,
    /// kg^{3/2}·m^{7/2}/s.
    pub beta: f64,
    /// 1/(J·m·s²).
    pub b1b3: f64,
    /// Exact radial scale, m.
    pub b4_over_b3: f64,
    /// Small-ℓ approximation of the radial scale, m.
    pub b4_over_b3_small_ell: f64,
    pub profile: HbarProfile,
    pub table: Vec<CalibratedValue>,
}

impl CalibrationResult {
    /// `|β²·b₂b₃ − β²b₂b₃| / |β²b₂b₃|`.
    pub fn beta_consistency(&self) -> f64 {
        ((self.beta * self.beta * self.b2b3 - self.beta2_b2b3) / self.beta2_b2b3).abs()
    }

    /// `|b₁/b₂ · b₂b₃ − b₁b₃| / |b₁b₃|`.
    pub fn product_consistency(&self) -> f64 {
        ((self.b1_over_b2 * self.b2b3 - self.b1b3) / self.b1b3).abs()
    }

    pub fn entry(&self, name: &str) -> Option<&CalibratedValue> {
        self.table.iter().find(|v| v.name == name)
    }
}

/// Runs the full pipeline. Stage failures carry the stage name.
pub fn calibrate(inputs: &CalibrationInputs) -> Result<CalibrationResult> {
    inputs.validate()?;
    let static_field = inputs.alpha_rate == 0.0 && inputs.frac_delta_hbar == 0.0;

    let b1_over_b2 =
        solve_temporal(inputs.alpha_rate, inputs.t_h).map_err(|e| e.in_stage("temporal"))?;
    let radial = solve_radial(inputs.frac_delta_hbar, inputs.r_orbit, inputs.delta_r_orbit)
        .map_err(|e| e.in_stage("radial"))?;

    // With no temporal drift the amplitude combinations degenerate
    // (b₂ = 0); the profile is then fixed by ħ_m alone.
    let (beta2_b2b3, vac, e0, a0) = if b1_over_b2.is_infinite() {
        (0.0, None, 0.0, inputs.hbar_m * inputs.hbar_m)
    } else {
        let beta2_b2b3 = solve_amplitude(inputs.hbar_m, b1_over_b2, inputs.t_h)
            .map_err(|e| e.in_stage("amplitude"))?;
        let vac = solve_vacuum(inputs.lambda_energy, beta2_b2b3, b1_over_b2)
            .map_err(|e| e.in_stage("vacuum"))?;
        let e0 = vac.beta * vac.beta * vac.b2b3 * vac.b2b3 / 8.0;
        (beta2_b2b3, Some(vac), e0, vac.beta * vac.beta * vac.b1b3)
    };

    let profile =
        HbarProfile::new(a0, b1_over_b2, radial.exact, e0).map_err(|e| e.in_stage("profile"))?;
    let vac = vac.unwrap_or(VacuumCoefficients {
        b2b3: 0.0,
        beta: f64::NAN,
        b1b3: f64::NAN,
    });

    let demo = is_demonstration(inputs);
    let row = |name: &str, unit: &str, value: f64, published: f64, from: &str| {
        let published = demo.then_some(published);
        CalibratedValue {
            name: name.to_string(),
            unit: unit.to_string(),
            value,
            published,
            rel_deviation: published.map(|p| (value - p) / p),
            derived_from: from.to_string(),
        }
    };
    let radial_gradient = if radial.exact == 0.0 {
        0.0
    } else {
        profile
            .log_gradient(inputs.r_orbit)
            .map_err(|e| e.in_stage("radial"))?
    };
    let mut table = vec![
        row(
            "b1/b2",
            "m",
            b1_over_b2,
            published::B1_OVER_B2,
            "alpha_rate, t_h",
        ),
        row(
            "beta^2 b2 b3",
            "J^2 s^2/m",
            beta2_b2b3,
            published::BETA2_B2B3,
            "hbar_m, b1/b2, t_h",
        ),
        row(
            "b2 b3",
            "1/(J m^2 s^2)",
            vac.b2b3,
            published::B2B3,
            "lambda_energy, beta^2 b2 b3",
        ),
        row(
            "beta",
            "kg^(3/2) m^(7/2)/s",
            vac.beta,
            published::BETA,
            "beta^2 b2 b3, b2 b3",
        ),
        row(
            "b1 b3",
            "1/(J m s^2)",
            vac.b1b3,
            published::B1B3,
            "b1/b2, b2 b3",
        ),
        row(
            "b4/b3",
            "m",
            radial.exact,
            published::B4_OVER_B3,
            "frac_delta_hbar, r_orbit, delta_r_orbit",
        ),
        row(
            "b4/b3 (small-ell)",
            "m",
            radial.small_ell,
            published::B4_OVER_B3,
            "frac_delta_hbar, r_orbit, delta_r_orbit",
        ),
        row(
            "d ln hbar/dr at r_orbit",
            "1/m",
            radial_gradient,
            published::RADIAL_LOG_GRADIENT,
            "b4/b3, r_orbit",
        ),
    ];
    if static_field {
        table.retain(|v| v.name == "b1/b2" || v.name.starts_with("b4/b3"));
    }

    Ok(CalibrationResult {
        inputs: *inputs,
        b1_over_b2,
        beta2_b2b3,
        b2b3: vac.b2b3,
        beta: vac.beta,
        b1b3: vac.b1b3,
        b4_over_b3: radial.exact,
        b4_over_b3_small_ell: radial.small_ell,
        profile,
        table,
    })
}

fn is_demonstration(inputs: &CalibrationInputs) -> bool {
    let d = CalibrationInputs::demonstration();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    close(inputs.hbar_m, d.hbar_m)
        && close(inputs.alpha_rate, d.alpha_rate)
        && close(inputs.lambda_energy, d.lambda_energy)
        && close(inputs.frac_delta_hbar, d.frac_delta_hbar)
        && close(inputs.r_orbit, d.r_orbit)
        && close(inputs.delta_r_orbit, d.delta_r_orbit)
}
