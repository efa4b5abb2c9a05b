//! Classical Planck's-constant field profiles.
//!
//! The zero-momentum solution is stored through the coefficient combinations
//! that observations actually fix:
//!
//! ```text
//! ħ²(r, t) = A0 · (1 + ct/L_t) · (1 + ℓ/r)
//! ```
//!
//! with `A0 = β²b₁b₃`, `L_t = b₁/b₂`, `ℓ = b₄/b₃` and the asymptotic vacuum
//! energy density `E0 = β²(b₂b₃)²/8`. The squared field `χ = ħ²/β²` is a
//! product of a Laplace solution in space and a linear function of `x₀ = ct`,
//! so it solves the massless wave equation exactly.
//!
//! The standing-wave profile `ψ²_p` is a spherical standing wave with a `1/r`
//! envelope; it also solves the massless wave equation.

use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::error::{Error, Result};

/// Zero-momentum ħ(r, t) field in determined-parameter form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbarProfile {
    /// `β²b₁b₃`, the squared asymptotic ħ at `t = 0`, J²·s².
    pub a0: f64,
    /// Temporal scale `b₁/b₂` in light-travel distance, m. Infinite for a
    /// static field; negative when ħ decreases with time.
    pub l_t: f64,
    /// Radial scale `b₄/b₃`, m.
    pub ell: f64,
    /// Asymptotic vacuum energy density `β²(b₂b₃)²/8`, J/m³.
    pub e0: f64,
}

impl HbarProfile {
    pub fn new(a0: f64, l_t: f64, ell: f64, e0: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::invalid(format!(
                "A0 must be positive and finite, got {a0:e}"
            )));
        }
        if !(e0 >= 0.0) {
            return Err(Error::invalid(format!(
                "E0 must be non-negative, got {e0:e}"
            )));
        }
        if l_t == 0.0 || l_t.is_nan() {
            return Err(Error::invalid("temporal scale must be non-zero"));
        }
        if !ell.is_finite() {
            return Err(Error::invalid("radial scale must be finite"));
        }
        Ok(Self { a0, l_t, ell, e0 })
    }

    /// A spatially and temporally constant field of value `hbar`.
    pub fn constant(hbar: f64) -> Result<Self> {
        Self::new(hbar * hbar, f64::INFINITY, 0.0, 0.0)
    }

    /// Static companion-type profile `ħ(r) = ħ∞ (1 + ℓ/r)^½`.
    pub fn static_radial(hbar_inf: f64, ell: f64) -> Result<Self> {
        Self::new(hbar_inf * hbar_inf, f64::INFINITY, ell, 0.0)
    }

    /// Negative radial scales are admitted mathematically but have no
    /// observational support; callers surface this flag in reports.
    pub fn has_negative_radial_scale(&self) -> bool {
        self.ell < 0.0
    }

    /// `1 + ct/L_t`.
    pub fn temporal_factor(&self, t: f64) -> f64 {
        if self.l_t.is_infinite() {
            1.0
        } else {
            1.0 + C * t / self.l_t
        }
    }

    /// `1 + ℓ/r`.
    pub fn spatial_factor(&self, r: f64) -> f64 {
        if self.ell == 0.0 {
            1.0
        } else {
            1.0 + self.ell / r
        }
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if !(r > 0.0) || r.is_nan() {
            return Err(Error::domain(format!("radius must be positive, got {r:e}")));
        }
        if self.spatial_factor(r) <= 0.0 {
            return Err(Error::domain(format!(
                "1 + ell/r <= 0 at r = {r:e} m (ell = {:e} m)",
                self.ell
            )));
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(self.temporal_factor(t) > 0.0) {
            return Err(Error::domain(format!(
                "1 + ct/L_t <= 0 at t = {t:e} s (L_t = {:e} m)",
                self.l_t
            )));
        }
        Ok(())
    }

    /// ħ²(r, t), J²·s².
    pub fn hbar_sq_at(&self, r: f64, t: f64) -> Result<f64> {
        self.check_r(r)?;
        self.check_t(t)?;
        Ok(self.a0 * self.temporal_factor(t) * self.spatial_factor(r))
    }

    /// ħ(r, t), J·s. `r = f64::INFINITY` gives the asymptotic value.
    pub fn hbar_at(&self, r: f64, t: f64) -> Result<f64> {
        Ok(self.hbar_sq_at(r, t)?.sqrt())
    }

    /// The unsquared field built as the product of its separated spatial and
    /// temporal factors, `√A0 · √(1 + ct/L_t) · √(1 + ℓ/r)`.
    pub fn hbar_separated(&self, r: f64, t: f64) -> Result<f64> {
        self.check_r(r)?;
        self.check_t(t)?;
        Ok(self.a0.sqrt() * self.temporal_factor(t).sqrt() * self.spatial_factor(r).sqrt())
    }

    /// Radial logarithmic derivative `∂_r ħ / ħ = −(ℓ/2) / (r(r + ℓ))`, 1/m.
    pub fn log_gradient(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        if self.ell == 0.0 || r.is_infinite() {
            return Ok(0.0);
        }
        Ok(-0.5 * self.ell / (r * (r + self.ell)))
    }

    /// Temporal logarithmic derivative `∂_t ħ / ħ = (c/2) / (L_t + ct)`, 1/s.
    pub fn temporal_rate(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        if self.l_t.is_infinite() {
            return Ok(0.0);
        }
        Ok(0.5 * C / (self.l_t + C * t))
    }

    /// Hamiltonian density of the zero-momentum field, J/m³:
    /// `E0 · [(1 + ℓ/r)² + ℓ²(L_t + ct)²/r⁴]`.
    pub fn hamiltonian_density(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {r:e}")));
        }
        self.check_t(t)?;
        let s = self.spatial_factor(r);
        let gradient = if self.ell == 0.0 || r.is_infinite() {
            0.0
        } else if self.l_t.is_infinite() {
            return Err(Error::domain(
                "gradient energy of a static profile with ell != 0 is not expressible through E0",
            ));
        } else {
            let q = self.ell * (self.l_t + C * t) / (r * r);
            q * q
        };
        Ok(self.e0 * (s * s + gradient))
    }

    /// Spherical volume average of ħ² over a ball of radius `big_r` centred
    /// on the field origin: `A0 (1 + ct/L_t)(1 + 3ℓ/(2R))`.
    pub fn volume_average_hbar_sq(&self, big_r: f64, t: f64) -> Result<f64> {
        if !(big_r > 0.0) {
            return Err(Error::domain(format!(
                "averaging radius must be positive, got {big_r:e}"
            )));
        }
        self.check_t(t)?;
        let spatial = if big_r.is_infinite() {
            1.0
        } else {
            1.0 + 1.5 * self.ell / big_r
        };
        Ok(self.a0 * self.temporal_factor(t) * spatial)
    }
}

/// Local-position-invariance parameter obtained by matching
/// `(1 − β_h R_S/r)^½` against `(1 + ℓ/r)^½`: `β_h = −ℓ/R_S`.
pub fn lpi_beta_h(ell: f64, schwarzschild_radius: f64) -> Result<f64> {
    if schwarzschild_radius == 0.0 {
        return Err(Error::DivisionByZero("Schwarzschild radius is zero"));
    }
    if !(schwarzschild_radius > 0.0) {
        return Err(Error::domain("Schwarzschild radius must be positive"));
    }
    Ok(-ell / schwarzschild_radius)
}

/// Spherical standing-wave profile
/// `ψ²_p = (d₂d₄)² · cos(√2 p r + d₁)/(√2 p r) · cos(√2 p (d₃ + x₀))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandingWaveProfile {
    /// Radial wavenumber, 1/m.
    pub p: f64,
    pub d1: f64,
    pub d3: f64,
    /// Amplitude `(d₂d₄)²`.
    pub d2d4_sq: f64,
}

impl StandingWaveProfile {
    pub fn psi_sq(&self, r: f64, x0: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {r:e}")));
        }
        let k = std::f64::consts::SQRT_2 * self.p;
        Ok(self.d2d4_sq * (k * r + self.d1).cos() / (k * r) * (k * (self.d3 + x0)).cos())
    }

    /// Magnitude bound `(d₂d₄)²/(√2 p r)`.
    pub fn envelope(&self, r: f64) -> f64 {
        self.d2d4_sq.abs() / (std::f64::consts::SQRT_2 * self.p * r)
    }
}

/// Samples of a field on a uniform `(r, x₀)` grid, stored row-major with `r`
/// varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub r0: f64,
    pub dr: f64,
    pub x0_start: f64,
    pub dx0: f64,
    pub n_r: usize,
    pub n_x0: usize,
    pub values: Vec<f64>,
}

impl FieldGrid {
    /// Samples `f(r, x₀)` on `n_r × n_x0` nodes starting at `(r0, x0_start)`.
    pub fn sample(
        r0: f64,
        dr: f64,
        n_r: usize,
        x0_start: f64,
        dx0: f64,
        n_x0: usize,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n_r * n_x0);
        for j in 0..n_x0 {
            let x0 = x0_start + j as f64 * dx0;
            for i in 0..n_r {
                values.push(f(r0 + i as f64 * dr, x0)?);
            }
        }
        Ok(Self {
            r0,
            dr,
            x0_start,
            dx0,
            n_r,
            n_x0,
            values,
        })
    }

    pub fn at(&self, i_r: usize, j_x0: usize) -> f64 {
        self.values[j_x0 * self.n_r + i_r]
    }

    pub fn r(&self, i_r: usize) -> f64 {
        self.r0 + i_r as f64 * self.dr
    }

    pub fn x0(&self, j: usize) -> f64 {
        self.x0_start + j as f64 * self.dx0
    }
}

/// Max-norm of the second-order central-difference residual of the massless
/// radial wave equation `∂²χ/∂x₀² − (∂²χ/∂r² + (2/r) ∂χ/∂r)` on the interior
/// of `grid`.
pub fn eom_residual(grid: &FieldGrid) -> Result<f64> {
    const MIN_NODES: usize = 5;
    if grid.n_r < MIN_NODES {
        return Err(Error::GridTooSmall {
            axis: "r",
            found: grid.n_r,
            required: MIN_NODES,
        });
    }
    if grid.n_x0 < MIN_NODES {
        return Err(Error::GridTooSmall {
            axis: "x0",
            found: grid.n_x0,
            required: MIN_NODES,
        });
    }
    if grid.values.len() != grid.n_r * grid.n_x0 {
        return Err(Error::invalid("grid value count does not match its shape"));
    }
    if !(grid.dr > 0.0 && grid.dx0 > 0.0) || !(grid.r0 > 0.0) {
        return Err(Error::invalid("grid spacings and r0 must be positive"));
    }
    let (hr, ht) = (grid.dr, grid.dx0);
    let mut worst = 0.0_f64;
    for j in 1..grid.n_x0 - 1 {
        for i in 1..grid.n_r - 1 {
            let c = grid.at(i, j);
            let tt = (grid.at(i, j + 1) - 2.0 * c + grid.at(i, j - 1)) / (ht * ht);
            let rr = (grid.at(i + 1, j) - 2.0 * c + grid.at(i - 1, j)) / (hr * hr);
            let r1 = (grid.at(i + 1, j) - grid.at(i - 1, j)) / (2.0 * hr);
            let res = tt - (rr + 2.0 / grid.r(i) * r1);
            worst = worst.max(res.abs());
        }
    }
    Ok(worst)
}
