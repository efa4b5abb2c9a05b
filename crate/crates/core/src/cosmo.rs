//! Newtonian Friedmann equation with a conserved total frequency.
//!
//! A shell at `r = a x` in a homogeneous ball conserves `W = H_c/ħ(ax)`, so
//!
//! ```text
//! (ȧ/a)² = (8πG/3) ρ − kc²/a² − (kc²/ħ_o) f(ax)/a²,   kc² = −2Wħ_o/(m x²)
//! ```
//!
//! For `ħ = ħ_o + b(ax)²` the last term is `−(kc²/ħ_o) b x²`, constant in
//! `a`. Averaging `x²` over a closed comoving volume gives
//! `⟨x²⟩ = (π² − 4)/(2k)` and the term becomes a cosmological constant
//! `Λ/3 = −(π² − 4)/2 · b c²/ħ_o`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{C, G};
use crate::error::{Error, Result};
use crate::ode::{uniform_prefix, uniform_times, Dopri5, Flow, OdeConfig, Output};

/// `(π² − 4)/2`, the mean of `χ²` over a closed hypersphere of angular
/// radius π.
pub const GEOMETRIC_FACTOR: f64 = (PI * PI - 4.0) / 2.0;

/// `Λ = −3 (π² − 4)/2 · b c²/ħ_o`, 1/s².
pub fn lambda_from_b(b: f64, hbar_o: f64) -> Result<f64> {
    if !(hbar_o > 0.0) {
        return Err(Error::invalid("ħ_o must be positive"));
    }
    Ok(-3.0 * GEOMETRIC_FACTOR * b * C * C / hbar_o)
}

/// Inverse of [`lambda_from_b`], J·s/m².
pub fn b_from_lambda(lambda: f64, hbar_o: f64) -> Result<f64> {
    if !(hbar_o > 0.0) {
        return Err(Error::invalid("ħ_o must be positive"));
    }
    Ok(-lambda * hbar_o / (3.0 * GEOMETRIC_FACTOR * C * C))
}

/// Unaveraged quadratic profile `ħ_o (1 − 2Λr²/(3(π² − 4)c²))`. Values past
/// the zero crossing are negative and returned as such.
pub fn hbar_cosmo_profile(lambda: f64, hbar_o: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be non-negative, got {r:e}"
        )));
    }
    Ok(hbar_o * (1.0 - lambda * r * r / (3.0 * GEOMETRIC_FACTOR * C * C)))
}

/// Radius where the quadratic profile crosses zero, m.
pub fn profile_zero_radius(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NoSolution(
            "the profile only reaches zero for Λ > 0".into(),
        ));
    }
    Ok((3.0 * GEOMETRIC_FACTOR * C * C / lambda).sqrt())
}

/// `⟨x²⟩ = (π² − 4)/(2k)` for a closed comoving volume, m².
pub fn mean_square_comoving(k_curv: f64) -> Result<f64> {
    if k_curv == 0.0 {
        return Err(Error::FlatCurvature);
    }
    if k_curv < 0.0 {
        return Err(Error::domain(
            "the comoving average needs closed curvature (k > 0)",
        ));
    }
    Ok(GEOMETRIC_FACTOR / k_curv)
}

/// Averaged background value `ħ_o (1 − Λa²/(3kc²))`, J·s.
pub fn hbar_average_t(lambda: f64, hbar_o: f64, a: f64, k_curv: f64) -> Result<f64> {
    if k_curv == 0.0 {
        return Err(Error::FlatCurvature);
    }
    if k_curv < 0.0 {
        return Err(Error::domain(
            "the comoving average needs closed curvature (k > 0)",
        ));
    }
    Ok(hbar_o * (1.0 - lambda * a * a / (3.0 * k_curv * C * C)))
}

/// Vacuum energy density to the cosmological constant, `Λ = 8πG u/c²`.
pub fn lambda_unit_convert(lambda_energy: f64) -> Result<f64> {
    if !(lambda_energy >= 0.0) {
        return Err(Error::invalid("energy density must be non-negative"));
    }
    Ok(8.0 * PI * G * lambda_energy / (C * C))
}

/// Inverse of [`lambda_unit_convert`], J/m³.
pub fn lambda_energy_from_s2(lambda: f64) -> f64 {
    lambda * C * C / (8.0 * PI * G)
}

/// Curvature from a shell's conserved frequency, `k = −2Wħ_o/(m x² c²)`,
/// 1/m².
pub fn curvature_from_frequency(w_freq: f64, hbar_o: f64, m_test: f64, x: f64) -> Result<f64> {
    if !(m_test > 0.0) || x == 0.0 {
        return Err(Error::invalid("test mass must be positive and x non-zero"));
    }
    Ok(-2.0 * w_freq * hbar_o / (m_test * x * x * C * C))
}

/// `(ȧ/a)²` for a shell at comoving `x` in `ħ = ħ_o + b(ax)²`, 1/s².
pub fn friedmann_rhs(a: f64, rho: f64, k_curv: f64, x: f64, b: f64, hbar_o: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveScaleFactor(a));
    }
    if !(hbar_o > 0.0) {
        return Err(Error::invalid("ħ_o must be positive"));
    }
    let kc2 = k_curv * C * C;
    let f_hbar = b * (a * x) * (a * x);
    Ok(8.0 * PI * G / 3.0 * rho - kc2 / (a * a) - kc2 / hbar_o * f_hbar / (a * a))
}

/// Where the quadratic ħ term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Comoving {
    /// A single shell at comoving radius `x`, m.
    Shell { x: f64 },
    /// `x²` replaced by its closed-volume average.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosmoParams {
    /// J·s.
    pub hbar_o: f64,
    /// J·s/m².
    pub b: f64,
    /// 1/m², signed.
    pub k_curv: f64,
    /// Matter density at `a = 1`, kg/m³; scales as `a⁻³`.
    pub rho0: f64,
    pub comoving: Comoving,
}

impl CosmoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar_o > 0.0) {
            return Err(Error::invalid("ħ_o must be positive"));
        }
        if !(self.rho0 >= 0.0) {
            return Err(Error::invalid("matter density must be non-negative"));
        }
        if let Comoving::Averaged = self.comoving {
            mean_square_comoving(self.k_curv)?;
        }
        Ok(())
    }

    /// `x²` entering the ħ term, m².
    fn x_sq(&self) -> Result<f64> {
        match self.comoving {
            Comoving::Shell { x } => Ok(x * x),
            Comoving::Averaged => mean_square_comoving(self.k_curv),
        }
    }

    /// The constant `−(kc²/ħ_o) b x²`, i.e. `Λ/3` for the averaged form,
    /// 1/s².
    pub fn cosmological_term(&self) -> Result<f64> {
        if self.b == 0.0 {
            return Ok(0.0);
        }
        Ok(-self.k_curv * C * C / self.hbar_o * self.b * self.x_sq()?)
    }

    /// `(ȧ/a)²` at scale factor `a`, 1/s².
    pub fn rhs(&self, a: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::NonPositiveScaleFactor(a));
        }
        let rho = self.rho0 / (a * a * a);
        match self.comoving {
            Comoving::Shell { x } => friedmann_rhs(a, rho, self.k_curv, x, self.b, self.hbar_o),
            Comoving::Averaged => Ok(8.0 * PI * G / 3.0 * rho - self.k_curv * C * C / (a * a)
                + self.cosmological_term()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionHistory {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    /// `(ȧ/a)²` at each sample, 1/s².
    pub rhs: Vec<f64>,
}

impl ExpansionHistory {
    /// Writes `t_s,a,rhs_per_s2` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,a,rhs_per_s2\n");
        for i in 0..self.t.len() {
            out.push_str(&format!(
                "{:e},{:e},{:e}\n",
                self.t[i], self.a[i], self.rhs[i]
            ));
        }
        out
    }

    /// Largest `|(ȧ/a)² − rhs| / rhs` over interior samples, with `ȧ` from
    /// fourth-order central differences of the sampled `a(t)`. A shorter
    /// final interval is left out.
    pub fn constraint_residual(&self) -> Result<f64> {
        let n = uniform_prefix(&self.t);
        if n < 5 {
            return Err(Error::GridTooSmall {
                axis: "t",
                found: n,
                required: 5,
            });
        }
        let dt = self.t[1] - self.t[0];
        let mut worst = 0.0_f64;
        for i in 2..n - 2 {
            let a = &self.a;
            let adot = (-a[i + 2] + 8.0 * a[i + 1] - 8.0 * a[i - 1] + a[i - 2]) / (12.0 * dt);
            let h2 = (adot / a[i]).powi(2);
            worst = worst.max((h2 - self.rhs[i]).abs() / self.rhs[i].abs());
        }
        Ok(worst)
    }
}

/// Integrates `ȧ = a √rhs(a)` from `a(t0) = a0`, sampling every `dt`.
pub fn integrate_scale_factor(
    params: &CosmoParams,
    a0: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
    ode: &OdeConfig,
) -> Result<ExpansionHistory> {
    params.validate()?;
    if !(a0 > 0.0) {
        return Err(Error::NonPositiveScaleFactor(a0));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("sampling interval must be positive"));
    }
    let start = params.rhs(a0)?;
    if start < 0.0 {
        return Err(Error::NegativeRhs { t: t0, a: a0 });
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let h2 = params.rhs(y[0])?;
        if h2 < 0.0 {
            return Err(Error::NegativeRhs { t, a: y[0] });
        }
        dy[0] = y[0] * h2.sqrt();
        Ok(())
    };
    let times = uniform_times(t0, t_end, dt);
    let mut hist = ExpansionHistory {
        t: Vec::with_capacity(times.len()),
        a: Vec::with_capacity(times.len()),
        rhs: Vec::with_capacity(times.len()),
    };
    let mut sample_err = None;
    Dopri5::new(ode.clone()).solve(rhs, t0, &[a0], t_end, Output::Times(&times), |t, y| {
        match params.rhs(y[0]) {
            Ok(h2) => {
                hist.t.push(t);
                hist.a.push(y[0]);
                hist.rhs.push(h2);
                Flow::Continue
            }
            Err(e) => {
                sample_err = Some(e);
                Flow::Stop
            }
        }
    })?;
    match sample_err {
        Some(e) => Err(e),
        None => Ok(hist),
    }
}
