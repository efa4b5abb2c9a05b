//! A field φ carried by the acton background χ = ħ²/β².
//!
//! The kinetic term of φ is weighted by χ, so with χ prescribed its equation
//! of motion is
//!
//! ```text
//! (χ̇ φ̇ + χ φ̈) − (∇χ·∇φ + χ ∇²φ) = 0.
//! ```
//!
//! Far from the origin `∇χ → 0` and `χ̇/χ → ω_h/c = 1/L_t`, which turns the
//! time factor of a separated solution into a damped oscillator
//! `T̈ + ω_h Ṫ + ω_p² T = 0`. Close in, the radial problem is solved
//! numerically by the method of lines.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Flow, OdeConfig, Output};
use crate::profiles::HbarProfile;

/// `ω_h = c/L_t`, 1/s. Zero for a static profile.
pub fn omega_h_from_profile(profile: &HbarProfile) -> f64 {
    if profile.l_t.is_infinite() {
        0.0
    } else {
        C / profile.l_t
    }
}

/// The far-field time factor
/// `T(t) = C e^{−t(s + ω_h)/2} + D e^{t(s − ω_h)/2}`, `s = √(ω_h² − 4ω_p²)`,
/// fixed by `T(0)` and `Ṫ(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportedFieldParams {
    /// 1/s.
    pub omega_h: f64,
    /// 1/s.
    pub omega_p: f64,
    /// `T(0)`.
    pub t0_value: f64,
    /// `Ṫ(0)`, 1/s.
    pub t0_rate: f64,
}

impl SupportedFieldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_h >= 0.0 && self.omega_h.is_finite()) {
            return Err(Error::invalid(format!(
                "ω_h must be finite and non-negative, got {}",
                self.omega_h
            )));
        }
        if !(self.omega_p >= 0.0 && self.omega_p.is_finite()) {
            return Err(Error::invalid("ω_p must be finite and non-negative"));
        }
        Ok(())
    }

    /// `s = √(ω_h² − 4ω_p²)`, imaginary in the oscillatory regime.
    pub fn discriminant_root(&self) -> Complex64 {
        Complex64::new(
            self.omega_h * self.omega_h - 4.0 * self.omega_p * self.omega_p,
            0.0,
        )
        .sqrt()
    }

    /// The coefficients `(C, D)`. Undefined (`None`) at critical damping,
    /// where the two exponentials merge into `(C + Dt) e^{−ω_h t/2}`.
    pub fn coefficients(&self) -> Option<(Complex64, Complex64)> {
        let s = self.discriminant_root();
        if s == Complex64::new(0.0, 0.0) {
            return None;
        }
        let l1 = -(s + self.omega_h) / 2.0;
        let d = (self.t0_rate - l1 * self.t0_value) / s;
        Some((self.t0_value - d, d))
    }

    /// `(T, Ṫ)` at time `t`.
    ///
    /// Written as `e^{−ω_h t/2}[T₀ cosh(st/2) + (Ṫ₀ + ω_h T₀/2) sinh(st/2)/(s/2)]`,
    /// which equals the two-exponential form and stays finite through the
    /// critical case.
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        let s = self.discriminant_root();
        let half = s * (t / 2.0);
        let cosh = half.cosh();
        // sinh(st/2)/(s/2) and its time derivative cosh(st/2).
        let sinhc = if half.norm() < 1e-4 {
            Complex64::new(t, 0.0) * (Complex64::new(1.0, 0.0) + half * half / 6.0)
        } else {
            half.sinh() / (s / 2.0)
        };
        let (t0, v0, wh) = (self.t0_value, self.t0_rate, self.omega_h);
        let k = v0 + wh * t0 / 2.0;
        let env = (-wh * t / 2.0).exp();
        let inner = cosh * t0 + sinhc * k;
        // d/dt[cosh(st/2)] = (s²/4)·sinh(st/2)/(s/2)
        let inner_rate = sinhc * (s * s / 4.0) * t0 + cosh * k;
        let value = env * inner.re;
        let rate = env * (inner_rate.re - wh / 2.0 * inner.re);
        (value, rate)
    }
}

/// `T(t)` of the far-field solution.
pub fn far_field_time_solution(p: &SupportedFieldParams, t: f64) -> f64 {
    p.evaluate(t).0
}

/// Integrates `T̈ + ω_h Ṫ + ω_p² T = 0` numerically and returns `T` at
/// `times`.
pub fn solve_time_ode(
    p: &SupportedFieldParams,
    times: &[f64],
    ode: &OdeConfig,
) -> Result<Vec<f64>> {
    p.validate()?;
    let Some(&t_end) = times.last() else {
        return Ok(Vec::new());
    };
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] >= 0.0) {
        return Err(Error::invalid(
            "sample times must be non-negative and increasing",
        ));
    }
    if t_end == 0.0 {
        return Ok(vec![p.t0_value]);
    }
    let (wh, wp2) = (p.omega_h, p.omega_p * p.omega_p);
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1];
        dy[1] = -wh * y[1] - wp2 * y[0];
        Ok(())
    };
    let mut out = Vec::with_capacity(times.len());
    Dopri5::new(ode.clone()).solve(
        rhs,
        0.0,
        &[p.t0_value, p.t0_rate],
        t_end,
        Output::Times(times),
        |_, y| {
            out.push(y[0]);
            Flow::Continue
        },
    )?;
    Ok(out)
}

/// Condition at the inner edge of the radial grid, in terms of `u = rφ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerBoundary {
    /// Grid starts at `r = 0`; φ finite there, so `u = 0`.
    Regular,
    /// `φ = 0`.
    Dirichlet,
    /// `∂_r φ = 0`.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// Outgoing radiation, `∂_t u + c ∂_r u = 0`.
    Absorbing,
    /// `φ = 0`.
    Dirichlet,
}

/// Uniform radial grid and time stepping, lengths in metres and time as
/// `x₀ = ct`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSolverConfig {
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub x0_start: f64,
    pub x0_end: f64,
    /// `Δx₀/Δr`.
    pub courant: f64,
    /// Store every this many steps (the first and last are always stored).
    pub snapshot_every: usize,
    pub inner: InnerBoundary,
    pub outer: OuterBoundary,
}

/// Largest accepted Courant number. Classical RK4 with central differences
/// is stable up to √2; the margin covers the boundary closures.
pub const COURANT_LIMIT: f64 = 1.0;

const MIN_NODES: usize = 16;

impl RadialSolverConfig {
    pub fn dr(&self) -> f64 {
        (self.r_out - self.r_in) / (self.n_r - 1) as f64
    }

    fn steps(&self) -> usize {
        let dx0 = self.courant * self.dr();
        ((self.x0_end - self.x0_start) / dx0).ceil() as usize
    }

    fn validate(&self, profile: &HbarProfile) -> Result<()> {
        if self.n_r < MIN_NODES {
            return Err(Error::GridTooSmall {
                axis: "r",
                found: self.n_r,
                required: MIN_NODES,
            });
        }
        if !(self.r_in >= 0.0 && self.r_out > self.r_in) {
            return Err(Error::invalid("need 0 <= r_in < r_out"));
        }
        if !(self.x0_end > self.x0_start) {
            return Err(Error::invalid("x0_end must exceed x0_start"));
        }
        if !(self.courant > 0.0) {
            return Err(Error::invalid("Courant number must be positive"));
        }
        if self.courant > COURANT_LIMIT {
            return Err(Error::CflViolation {
                courant: self.courant,
                limit: COURANT_LIMIT,
            });
        }
        let steps = self.steps();
        if steps < MIN_NODES {
            return Err(Error::GridTooSmall {
                axis: "x0",
                found: steps + 1,
                required: MIN_NODES,
            });
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every must be at least 1"));
        }
        match self.inner {
            InnerBoundary::Regular => {
                if self.r_in != 0.0 {
                    return Err(Error::invalid("a regular inner boundary needs r_in = 0"));
                }
                if profile.ell != 0.0 {
                    return Err(Error::invalid(
                        "the profile is singular at r = 0 unless ell = 0; start the grid at r_in > 0",
                    ));
                }
            }
            InnerBoundary::Dirichlet | InnerBoundary::Neumann => {
                if !(self.r_in > 0.0) {
                    return Err(Error::invalid("this inner boundary needs r_in > 0"));
                }
            }
        }
        if profile.spatial_factor(self.r_in.max(f64::MIN_POSITIVE)) <= 0.0 && self.r_in > 0.0 {
            return Err(Error::domain("grid reaches where 1 + ell/r <= 0"));
        }
        if !(profile.temporal_factor(self.x0_start / C) > 0.0
            && profile.temporal_factor(self.x0_end / C) > 0.0)
        {
            return Err(Error::domain("time span reaches where 1 + ct/L_t <= 0"));
        }
        Ok(())
    }
}

/// Snapshots of `u = rφ` and `∂_{x₀} u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub x0: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub u_t: Vec<Vec<f64>>,
}

impl RadialSolution {
    pub fn dr(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    /// φ at snapshot `k`, node `i`. At `r = 0` the regular limit `∂_r u` is
    /// used.
    pub fn phi(&self, k: usize, i: usize) -> f64 {
        if self.r[i] == 0.0 {
            let u = &self.u[k];
            return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * self.dr());
        }
        self.u[k][i] / self.r[i]
    }

    /// `(∂_{x₀}φ, ∂_rφ)` at an interior node.
    pub fn phi_derivatives(&self, k: usize, i: usize) -> (f64, f64) {
        let (u, r) = (&self.u[k], self.r[i]);
        let u_r = (u[i + 1] - u[i - 1]) / (2.0 * self.dr());
        (self.u_t[k][i] / r, (u_r - u[i] / r) / r)
    }

    /// `Σ|φ̇² − (∂_rφ)²| / Σ(φ̇² + (∂_rφ)²)` over nodes with `r >= r_from`.
    ///
    /// This compares the source that φ would feed back into χ with its own
    /// kinetic scale. It vanishes for a plane wave, and small values mean
    /// φ does not disturb the background.
    pub fn decoupling_ratio(&self, k: usize, r_from: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..self.r.len() - 1 {
            if self.r[i] < r_from || self.r[i] == 0.0 {
                continue;
            }
            let (pt, pr) = self.phi_derivatives(k, i);
            num += (pt * pt - pr * pr).abs();
            den += pt * pt + pr * pr;
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Writes `x0_m,r_m,phi` rows, one block per snapshot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0_m,r_m,phi\n");
        for k in 0..self.x0.len() {
            for i in 0..self.r.len() {
                out.push_str(&format!(
                    "{:e},{:e},{:e}\n",
                    self.x0[k],
                    self.r[i],
                    self.phi(k, i)
                ));
            }
        }
        out
    }
}

/// Method-of-lines solution of the radial supported-field equation with χ
/// from the zero-momentum profile, written for `u = rφ` as
///
/// ```text
/// ∂²u/∂x₀² = ∂²u/∂r² + (χ_r/χ)(∂_r u − u/r) − (χ_x₀/χ) ∂u/∂x₀
/// ```
///
/// Second-order central differences in `r`, classical RK4 in `x₀`.
/// `initial(r)` returns `(φ, ∂φ/∂x₀)` at `x0_start`.
pub fn solve_supported_field_radial(
    profile: &HbarProfile,
    cfg: &RadialSolverConfig,
    initial: impl Fn(f64) -> (f64, f64),
) -> Result<RadialSolution> {
    cfg.validate(profile)?;
    let n = cfg.n_r;
    let dr = cfg.dr();
    let r: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                cfg.r_out
            } else {
                cfg.r_in + dr * i as f64
            }
        })
        .collect();
    // χ_r/χ is time independent.
    let chi_r: Vec<f64> = r
        .iter()
        .map(|&ri| {
            if profile.ell == 0.0 || ri == 0.0 {
                0.0
            } else {
                -profile.ell / (ri * (ri + profile.ell))
            }
        })
        .collect();
    let chi_t = |x0: f64| {
        if profile.l_t.is_infinite() {
            0.0
        } else {
            1.0 / (profile.l_t + x0)
        }
    };

    let mut u: Vec<f64> = r.iter().map(|&ri| ri * initial(ri).0).collect();
    let mut w: Vec<f64> = r.iter().map(|&ri| ri * initial(ri).1).collect();
    let fixed_inner = matches!(cfg.inner, InnerBoundary::Regular | InnerBoundary::Dirichlet);
    if fixed_inner {
        u[0] = 0.0;
        w[0] = 0.0;
    }
    if cfg.outer == OuterBoundary::Dirichlet {
        u[n - 1] = 0.0;
        w[n - 1] = 0.0;
    }

    let inv_dr2 = 1.0 / (dr * dr);
    let inv_2dr = 0.5 / dr;
    let rhs = |x0: f64, u: &[f64], w: &[f64], du: &mut [f64], dw: &mut [f64]| {
        let damping = chi_t(x0);
        let interior = |i: usize, um: f64, u0: f64, up: f64, w0: f64| {
            let u_rr = (up - 2.0 * u0 + um) * inv_dr2;
            let u_r = (up - um) * inv_2dr;
            let drift = if chi_r[i] == 0.0 {
                0.0
            } else {
                chi_r[i] * (u_r - u0 / r[i])
            };
            u_rr + drift - damping * w0
        };
        for i in 1..n - 1 {
            du[i] = w[i];
            dw[i] = interior(i, u[i - 1], u[i], u[i + 1], w[i]);
        }
        match cfg.inner {
            InnerBoundary::Regular | InnerBoundary::Dirichlet => {
                du[0] = 0.0;
                dw[0] = 0.0;
            }
            InnerBoundary::Neumann => {
                // φ_r = 0 ⇔ u_r = u/r; mirror node from the centred difference.
                let ghost = u[1] - 2.0 * dr * u[0] / r[0];
                du[0] = w[0];
                dw[0] = interior(0, ghost, u[0], u[1], w[0]);
            }
        }
        match cfg.outer {
            OuterBoundary::Dirichlet => {
                du[n - 1] = 0.0;
                dw[n - 1] = 0.0;
            }
            OuterBoundary::Absorbing => {
                let u_r = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv_2dr;
                du[n - 1] = -u_r;
                dw[n - 1] = 0.0;
            }
        }
    };

    let steps = cfg.steps();
    let h = (cfg.x0_end - cfg.x0_start) / steps as f64;
    let mut sol = RadialSolution {
        r: r.clone(),
        x0: vec![cfg.x0_start],
        u: vec![u.clone()],
        u_t: vec![w.clone()],
    };
    let z = || vec![0.0; n];
    let (mut k1u, mut k1w, mut k2u, mut k2w) = (z(), z(), z(), z());
    let (mut k3u, mut k3w, mut k4u, mut k4w) = (z(), z(), z(), z());
    let (mut tu, mut tw) = (z(), z());
    for step in 0..steps {
        let x0 = cfg.x0_start + step as f64 * h;
        rhs(x0, &u, &w, &mut k1u, &mut k1w);
        for i in 0..n {
            tu[i] = u[i] + 0.5 * h * k1u[i];
            tw[i] = w[i] + 0.5 * h * k1w[i];
        }
        rhs(x0 + 0.5 * h, &tu, &tw, &mut k2u, &mut k2w);
        for i in 0..n {
            tu[i] = u[i] + 0.5 * h * k2u[i];
            tw[i] = w[i] + 0.5 * h * k2w[i];
        }
        rhs(x0 + 0.5 * h, &tu, &tw, &mut k3u, &mut k3w);
        for i in 0..n {
            tu[i] = u[i] + h * k3u[i];
            tw[i] = w[i] + h * k3w[i];
        }
        rhs(x0 + h, &tu, &tw, &mut k4u, &mut k4w);
        for i in 0..n {
            u[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            w[i] += h / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
        }
        if cfg.outer == OuterBoundary::Absorbing {
            // The boundary node carries no independent rate.
            let u_r = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv_2dr;
            w[n - 1] = -u_r;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "field diverged at x0 = {:e} m",
                x0 + h
            )));
        }
        let done = step + 1;
        if done % cfg.snapshot_every == 0 || done == steps {
            sol.x0.push(cfg.x0_start + done as f64 * h);
            sol.u.push(u.clone());
            sol.u_t.push(w.clone());
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_h_of_calibrated_profile() {
        let p = HbarProfile::new(1.0, 1e33, 1.62e8, 0.0).unwrap();
        let w = omega_h_from_profile(&p);
        assert!((w - 3.0e-25).abs() / 3.0e-25 < 0.01, "{w:e}");
        assert!((w - 2.0 * p.temporal_rate(0.0).unwrap()).abs() < 1e-15 * w);
        assert_eq!(
            omega_h_from_profile(&HbarProfile::constant(1.0).unwrap()),
            0.0
        );
    }

    #[test]
    fn undamped_is_pure_oscillation() {
        let p = SupportedFieldParams {
            omega_h: 0.0,
            omega_p: 2.0,
            t0_value: 1.0,
            t0_rate: 0.0,
        };
        for &t in &[0.0, 0.3, 1.7, 10.0] {
            assert!((far_field_time_solution(&p, t) - (2.0 * t).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_form_matches_stable_form() {
        for &(wh, wp) in &[(0.1, 1.0), (3.0, 0.5), (0.0, 0.7)] {
            let p = SupportedFieldParams {
                omega_h: wh,
                omega_p: wp,
                t0_value: 0.4,
                t0_rate: -1.1,
            };
            let (c, d) = p.coefficients().unwrap();
            let s = p.discriminant_root();
            for &t in &[0.0, 0.5, 2.0, 7.0] {
                let direct = c * (-(s + wh) * t / 2.0).exp() + d * ((s - wh) * t / 2.0).exp();
                let (v, _) = p.evaluate(t);
                assert!(
                    (direct.re - v).abs() < 1e-12 * (1.0 + v.abs()),
                    "{wh} {wp} {t}"
                );
                assert!(direct.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_damping_is_finite() {
        let p = SupportedFieldParams {
            omega_h: 2.0,
            omega_p: 1.0,
            t0_value: 1.0,
            t0_rate: 0.5,
        };
        assert!(p.coefficients().is_none());
        for &t in &[0.0_f64, 1.0, 5.0] {
            // (T₀ + (Ṫ₀ + T₀)t) e^{−t}
            let expect = (1.0 + 1.5 * t) * (-t).exp();
            let (v, _) = p.evaluate(t);
            assert!(v.is_finite());
            assert!((v - expect).abs() < 1e-14);
        }
    }

    fn pulse_config() -> RadialSolverConfig {
        RadialSolverConfig {
            r_in: 0.0,
            r_out: 20.0,
            n_r: 201,
            x0_start: 0.0,
            x0_end: 2.0,
            courant: 0.5,
            snapshot_every: 10,
            inner: InnerBoundary::Regular,
            outer: OuterBoundary::Absorbing,
        }
    }

    #[test]
    fn solver_rejects_bad_grids() {
        let p = HbarProfile::constant(1.0).unwrap();
        let mut cfg = pulse_config();
        cfg.n_r = 10;
        assert!(matches!(
            solve_supported_field_radial(&p, &cfg, |_| (0.0, 0.0)),
            Err(Error::GridTooSmall { axis: "r", .. })
        ));
        let mut cfg = pulse_config();
        cfg.courant = 1.2;
        assert!(matches!(
            solve_supported_field_radial(&p, &cfg, |_| (0.0, 0.0)),
            Err(Error::CflViolation { .. })
        ));
        let mut cfg = pulse_config();
        cfg.x0_end = 0.05;
        assert!(matches!(
            solve_supported_field_radial(&p, &cfg, |_| (0.0, 0.0)),
            Err(Error::GridTooSmall { axis: "x0", .. })
        ));
        let curved = HbarProfile::static_radial(1.0, 2.0).unwrap();
        assert!(matches!(
            solve_supported_field_radial(&curved, &pulse_config(), |_| (0.0, 0.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = HbarProfile::new(1.0, 50.0, 3.0, 0.0).unwrap();
        let cfg = RadialSolverConfig {
            r_in: 1.0,
            inner: InnerBoundary::Neumann,
            ..pulse_config()
        };
        let sol = solve_supported_field_radial(&p, &cfg, |_| (0.0, 0.0)).unwrap();
        assert!(sol.u.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(*sol.x0.last().unwrap(), 2.0);
    }
}
