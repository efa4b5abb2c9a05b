//! Rotation-curve inversion: the ħ(r) profile that keeps circular orbits at
//! a prescribed speed under dominant-path gravity.
//!
//! For a tangential velocity the force law is purely radial, and balancing it
//! against the centripetal acceleration gives
//!
//! ```text
//! v² = (−∂_r φ + φ ∂_r ln ħ) / (−1/r + ½ ∂_r ln ħ)
//! ∂_r ln ħ = (v²/r − ∂_r φ) / (½v² − φ)
//! ```
//!
//! With constant `v` and a point mass, the second form integrates to
//! `ln ħ = 3 ln(½v²r + GM) − ln r + const`.

use serde::{Deserialize, Serialize};

use crate::constants::{G, KPC};
use crate::error::{Error, Result};

/// Required `∂_r ln ħ` for a circular orbit at speed `v`, 1/m.
pub fn hbar_log_gradient_required(v: f64, phi_c: f64, dphi_dr: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r:e}")));
    }
    let denom = 0.5 * v * v - phi_c;
    if denom == 0.0 {
        return Err(Error::SingularDenominator { r });
    }
    Ok((v * v / r - dphi_dr) / denom)
}

/// Circular speed in a field with log-gradient `g`, potential energy `v_c`
/// and its derivative `dv_dr` for a body of mass `m`, m/s.
pub fn circular_velocity(g: f64, v_c: f64, dv_dr: f64, r: f64, m: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r:e}")));
    }
    let denom = -m / r + 0.5 * m * g;
    if denom == 0.0 {
        return Err(Error::SingularDenominator { r });
    }
    let v_sq = (-dv_dr + v_c * g) / denom;
    if v_sq < 0.0 {
        return Err(Error::NegativeVSquared { r, v_sq });
    }
    Ok(v_sq.sqrt())
}

/// A flat rotation curve around a visible point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationProblem {
    /// m/s.
    pub v_flat: f64,
    /// kg.
    pub m_visible: f64,
    /// m.
    pub r_in: f64,
    /// m.
    pub r_out: f64,
    pub n_grid: usize,
}

impl RotationProblem {
    fn validate(&self) -> Result<()> {
        if !(self.r_in > 0.0 && self.r_out > self.r_in) {
            return Err(Error::invalid("need 0 < r_in < r_out"));
        }
        if !(self.v_flat > 0.0) {
            return Err(Error::invalid("v_flat must be positive"));
        }
        if !(self.m_visible >= 0.0) {
            return Err(Error::invalid("visible mass must be non-negative"));
        }
        if self.n_grid < 2 {
            return Err(Error::GridTooSmall {
                axis: "r",
                found: self.n_grid,
                required: 2,
            });
        }
        Ok(())
    }

    /// `GM/v²`, where the required gradient changes sign, m.
    pub fn balance_radius(&self) -> f64 {
        G * self.m_visible / (self.v_flat * self.v_flat)
    }

    /// `ln(ħ(r)/ħ(r_in))` from the antiderivative.
    pub fn closed_form_ln_hbar(&self, r: f64) -> f64 {
        let gm = G * self.m_visible;
        let half_v2 = 0.5 * self.v_flat * self.v_flat;
        let f = |r: f64| 3.0 * (half_v2 * r + gm).ln() - r.ln();
        f(r) - f(self.r_in)
    }

    pub fn log_gradient(&self, r: f64) -> Result<f64> {
        let gm = G * self.m_visible;
        hbar_log_gradient_required(self.v_flat, -gm / r, gm / (r * r), r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationCurveSolution {
    /// m.
    pub r: Vec<f64>,
    /// `ln(ħ(r)/ħ(r_in))`.
    pub ln_hbar_rel: Vec<f64>,
    /// `exp(min ln_hbar_rel)`.
    pub min_factor: f64,
    /// Grid radius of the minimum, m.
    pub r_min: f64,
}

impl RotationCurveSolution {
    /// Writes `r_kpc,ln_hbar_rel,factor` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r_kpc,ln_hbar_rel,factor\n");
        for (r, l) in self.r.iter().zip(&self.ln_hbar_rel) {
            out.push_str(&format!("{:e},{:e},{:e}\n", r / KPC, l, l.exp()));
        }
        out
    }
}

/// Integrates a log-gradient over a radial grid with per-cell Simpson
/// quadrature, starting from zero at the first node.
pub fn integrate_log_gradient(r: &[f64], g: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    if r.len() < 2 {
        return Err(Error::GridTooSmall {
            axis: "r",
            found: r.len(),
            required: 2,
        });
    }
    let mut out = Vec::with_capacity(r.len());
    out.push(0.0);
    let mut acc = 0.0;
    let mut g_left = g(r[0])?;
    for w in r.windows(2) {
        let (a, b) = (w[0], w[1]);
        let g_right = g(b)?;
        acc += (b - a) / 6.0 * (g_left + 4.0 * g(0.5 * (a + b))? + g_right);
        out.push(acc);
        g_left = g_right;
    }
    Ok(out)
}

/// The ħ profile that holds `v_flat` across `[r_in, r_out]` around the
/// visible mass alone.
pub fn invert_rotation_curve(p: &RotationProblem) -> Result<RotationCurveSolution> {
    p.validate()?;
    let dr = (p.r_out - p.r_in) / (p.n_grid - 1) as f64;
    let r: Vec<f64> = (0..p.n_grid)
        .map(|i| {
            if i == p.n_grid - 1 {
                p.r_out
            } else {
                p.r_in + dr * i as f64
            }
        })
        .collect();
    let ln_hbar_rel = integrate_log_gradient(&r, |x| p.log_gradient(x))?;
    let (i_min, ln_min) = ln_hbar_rel
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    Ok(RotationCurveSolution {
        r_min: r[i_min],
        min_factor: ln_min.exp(),
        r,
        ln_hbar_rel,
    })
}

/// Potential per unit mass from a tabulated net circular speed,
/// `φ(r) = φ(r_out) − ∫_r^{r_out} v_n²/r' dr'` by the trapezoid rule.
/// `phi_outer` anchors the outermost node; a bound potential must stay
/// non-positive.
pub fn potential_from_velocity(r: &[f64], v_n: &[f64], phi_outer: f64) -> Result<Vec<f64>> {
    if r.len() != v_n.len() {
        return Err(Error::invalid("radius and speed tables differ in length"));
    }
    if r.len() < 2 {
        return Err(Error::GridTooSmall {
            axis: "r",
            found: r.len(),
            required: 2,
        });
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
        return Err(Error::invalid(
            "radii must be positive and strictly increasing",
        ));
    }
    let n = r.len();
    let mut phi = vec![0.0; n];
    phi[n - 1] = phi_outer;
    for i in (0..n - 1).rev() {
        let f = |j: usize| v_n[j] * v_n[j] / r[j];
        phi[i] = phi[i + 1] - 0.5 * (r[i + 1] - r[i]) * (f(i) + f(i + 1));
    }
    if let Some((i, p)) = phi.iter().enumerate().find(|(_, p)| **p > 0.0) {
        return Err(Error::domain(format!(
            "potential {p:e} J/kg is positive at r = {:e} m",
            r[i]
        )));
    }
    Ok(phi)
}
