//! Dominant-path mechanics in a position-dependent ħ.
//!
//! Making `∫ L_c/ħ dt` stationary gives the modified Euler–Lagrange equation
//!
//! ```text
//! d/dt ∂L_c/∂ẋ − ∂L_c/∂x = (∇ln ħ · ẋ) ∂L_c/∂ẋ − L_c ∇ln ħ
//! ```
//!
//! which for `L_c = ½m|v|² − mφ` is the per-unit-mass force law
//!
//! ```text
//! a = −∇φ + (g·v) v − g (½|v|² − φ),   g = ∇ln ħ.
//! ```
//!
//! The total frequency `W = m(½|v|² + φ)/ħ` is conserved exactly along its
//! solutions, while the classical energy is not.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::error::{Error, Result};
use crate::ode::{uniform_prefix, uniform_times, Dopri5, Flow, OdeConfig, OdeStats, Output};
use crate::profiles::HbarProfile;
use crate::vector::Vec3;

/// A positive scalar ħ(x) with its logarithmic gradient.
pub trait HbarField {
    fn value(&self, x: &Vec3) -> Result<f64>;
    fn grad_ln(&self, x: &Vec3) -> Result<Vec3>;
}

/// A spherically symmetric ħ(r) centred on the origin.
pub trait RadialHbar {
    fn value_at(&self, r: f64) -> Result<f64>;
    /// `∂_r ln ħ`, 1/m.
    fn dln_dr(&self, r: f64) -> Result<f64>;
}

impl<R: RadialHbar> HbarField for R {
    fn value(&self, x: &Vec3) -> Result<f64> {
        self.value_at(x.norm())
    }

    fn grad_ln(&self, x: &Vec3) -> Result<Vec3> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::domain(
                "radial field gradient is undefined at the origin",
            ));
        }
        Ok(*x * (self.dln_dr(r)? / r))
    }
}

/// Spatially uniform ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformHbar(pub f64);

impl HbarField for UniformHbar {
    fn value(&self, _: &Vec3) -> Result<f64> {
        Ok(self.0)
    }

    fn grad_ln(&self, _: &Vec3) -> Result<Vec3> {
        Ok(Vec3::ZERO)
    }
}

/// `ħ = ħ₀ exp(k·x)`: a constant logarithmic gradient `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialField {
    pub hbar0: f64,
    pub k: Vec3,
}

impl HbarField for ExponentialField {
    fn value(&self, x: &Vec3) -> Result<f64> {
        let v = self.hbar0 * self.k.dot(x).exp();
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!(
                "exponential field not representable at {x:?}"
            )));
        }
        Ok(v)
    }

    fn grad_ln(&self, _: &Vec3) -> Result<Vec3> {
        Ok(self.k)
    }
}

/// `ħ = ħ₀ exp(k r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialExponential {
    pub hbar0: f64,
    pub k: f64,
}

impl RadialHbar for RadialExponential {
    fn value_at(&self, r: f64) -> Result<f64> {
        Ok(self.hbar0 * (self.k * r).exp())
    }

    fn dln_dr(&self, _: f64) -> Result<f64> {
        Ok(self.k)
    }
}

/// A zero-momentum profile frozen at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSnapshot {
    pub profile: HbarProfile,
    pub t: f64,
}

impl RadialHbar for ProfileSnapshot {
    fn value_at(&self, r: f64) -> Result<f64> {
        self.profile.hbar_at(r, self.t)
    }

    fn dln_dr(&self, r: f64) -> Result<f64> {
        self.profile.log_gradient(r)
    }
}

impl RadialHbar for HbarProfile {
    fn value_at(&self, r: f64) -> Result<f64> {
        self.hbar_at(r, 0.0)
    }

    fn dln_dr(&self, r: f64) -> Result<f64> {
        self.log_gradient(r)
    }
}

/// Radial ħ given at nodes, interpolated by a C¹ cubic Hermite spline in
/// `ln ħ`. The slope at each node is the second-order finite difference of
/// its neighbours, so the gradient is the exact derivative of the
/// interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedRadial {
    r: Vec<f64>,
    ln_h: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedRadial {
    pub fn new(r: Vec<f64>, hbar: Vec<f64>) -> Result<Self> {
        if r.len() != hbar.len() {
            return Err(Error::invalid("radius and ħ tables differ in length"));
        }
        if r.len() < 3 {
            return Err(Error::GridTooSmall {
                axis: "r",
                found: r.len(),
                required: 3,
            });
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] >= 0.0) {
            return Err(Error::invalid(
                "radii must be non-negative and strictly increasing",
            ));
        }
        if hbar.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::invalid("tabulated ħ must be positive and finite"));
        }
        let ln_h: Vec<f64> = hbar.iter().map(|h| h.ln()).collect();
        Ok(Self {
            slope: three_point_slopes(&r, &ln_h),
            r,
            ln_h,
        })
    }

    /// Builds the table from `ln ħ` values directly.
    pub fn from_ln(r: Vec<f64>, ln_hbar: Vec<f64>) -> Result<Self> {
        let hbar = ln_hbar.iter().map(|l| l.exp()).collect();
        let mut t = Self::new(r, hbar)?;
        t.ln_h = ln_hbar;
        t.slope = three_point_slopes(&t.r, &t.ln_h);
        Ok(t)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r[0], self.r[self.r.len() - 1])
    }

    fn segment(&self, r: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return Err(Error::domain(format!(
                "r = {r:e} m outside tabulated range [{lo:e}, {hi:e}]"
            )));
        }
        let i = self.r.partition_point(|&x| x <= r).saturating_sub(1);
        Ok(i.min(self.r.len() - 2))
    }

    fn hermite(&self, r: f64) -> Result<(f64, f64)> {
        let i = self.segment(r)?;
        let h = self.r[i + 1] - self.r[i];
        let s = (r - self.r[i]) / h;
        let (y0, y1) = (self.ln_h[i], self.ln_h[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let dy = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        Ok((y, dy))
    }
}

fn three_point_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let slope3 = |i0: usize, i1: usize, i2: usize, at: f64| {
        // Derivative at `at` of the parabola through three nodes.
        let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
        y[i0] * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y[i1] * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y[i2] * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            slope3(c - 1, c, c + 1, x[i])
        })
        .collect()
}

impl RadialHbar for TabulatedRadial {
    fn value_at(&self, r: f64) -> Result<f64> {
        Ok(self.hermite(r)?.0.exp())
    }

    fn dln_dr(&self, r: f64) -> Result<f64> {
        Ok(self.hermite(r)?.1)
    }
}

/// Classical potential per unit mass φ(x), J/kg.
pub trait Potential {
    fn phi(&self, x: &Vec3) -> Result<f64>;
    fn grad_phi(&self, x: &Vec3) -> Result<Vec3>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FreeSpace;

impl Potential for FreeSpace {
    fn phi(&self, _: &Vec3) -> Result<f64> {
        Ok(0.0)
    }

    fn grad_phi(&self, _: &Vec3) -> Result<Vec3> {
        Ok(Vec3::ZERO)
    }
}

/// Point mass at the origin, `φ = −GM/r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMass {
    /// GM, m³/s².
    pub gm: f64,
}

impl Potential for PointMass {
    fn phi(&self, x: &Vec3) -> Result<f64> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::domain(
                "point-mass potential is singular at the origin",
            ));
        }
        Ok(-self.gm / r)
    }

    fn grad_phi(&self, x: &Vec3) -> Result<Vec3> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::domain(
                "point-mass potential is singular at the origin",
            ));
        }
        Ok(*x * (self.gm / (r * r * r)))
    }
}

/// Isotropic oscillator, `φ = ½ω²|x|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub omega: f64,
}

impl Potential for Harmonic {
    fn phi(&self, x: &Vec3) -> Result<f64> {
        Ok(0.5 * self.omega * self.omega * x.norm_sq())
    }

    fn grad_phi(&self, x: &Vec3) -> Result<Vec3> {
        Ok(*x * (self.omega * self.omega))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

impl State {
    pub fn new(t: f64, x: Vec3, v: Vec3) -> Self {
        Self { t, x, v }
    }

    fn to_vec(self) -> [f64; 6] {
        let (x, v) = (self.x.0, self.v.0);
        [x[0], x[1], x[2], v[0], v[1], v[2]]
    }

    fn from_slice(t: f64, y: &[f64]) -> Self {
        Self {
            t,
            x: Vec3::new(y[0], y[1], y[2]),
            v: Vec3::new(y[3], y[4], y[5]),
        }
    }
}

/// Dominant-path acceleration per unit mass, m/s².
pub fn acceleration<F, P>(s: &State, field: &F, potential: &P) -> Result<Vec3>
where
    F: HbarField + ?Sized,
    P: Potential + ?Sized,
{
    let g = field.grad_ln(&s.x)?;
    let grad_phi = potential.grad_phi(&s.x)?;
    if g == Vec3::ZERO {
        return Ok(-grad_phi);
    }
    let phi = potential.phi(&s.x)?;
    Ok(-grad_phi + s.v * g.dot(&s.v) - g * (0.5 * s.v.norm_sq() - phi))
}

/// Total frequency `W = m(½|v|² + φ)/ħ`, 1/s.
pub fn frequency_w<F, P>(s: &State, mass: f64, field: &F, potential: &P) -> Result<f64>
where
    F: HbarField + ?Sized,
    P: Potential + ?Sized,
{
    let hbar = field.value(&s.x)?;
    if !(hbar > 0.0) {
        return Err(Error::domain(format!("ħ must be positive, got {hbar:e}")));
    }
    Ok(mass * (0.5 * s.v.norm_sq() + potential.phi(&s.x)?) / hbar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub ode: OdeConfig,
    /// Uniform sampling interval; every accepted step is recorded when absent.
    #[serde(default)]
    pub sample_dt: Option<f64>,
    /// Speeds above this end the integration with a domain error.
    #[serde(default = "default_speed_limit")]
    pub speed_limit: Option<f64>,
}

fn default_speed_limit() -> Option<f64> {
    Some(C)
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            ode: OdeConfig::default(),
            sample_dt: None,
            speed_limit: default_speed_limit(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub w: f64,
}

impl Sample {
    pub fn state(&self) -> State {
        State::new(self.t, self.x, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mass: f64,
    pub samples: Vec<Sample>,
    pub stats: OdeStats,
    /// Largest `|W − W₀|` over the samples, relative to `|W₀|` (absolute when
    /// `W₀ = 0`).
    pub max_w_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }

    /// Writes `t,x,y,vx,vy,W` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,x_m,y_m,vx_m_per_s,vy_m_per_s,W_per_s\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                s.t,
                s.x.x(),
                s.x.y(),
                s.v.x(),
                s.v.y(),
                s.w
            ));
        }
        out
    }
}

/// Integrates the dominant-path equations of motion for `duration` seconds.
pub fn integrate<F, P>(
    s0: &State,
    mass: f64,
    field: &F,
    potential: &P,
    duration: f64,
    cfg: &IntegrationConfig,
) -> Result<Trajectory>
where
    F: HbarField + ?Sized,
    P: Potential + ?Sized,
{
    if !(duration > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if !(mass > 0.0) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    if !(s0.x.is_finite() && s0.v.is_finite() && s0.t.is_finite()) {
        return Err(Error::invalid("initial state must be finite"));
    }
    let t_end = s0.t + duration;
    let w_of = |t: f64, y: &[f64]| frequency_w(&State::from_slice(t, y), mass, field, potential);
    let w0 = w_of(s0.t, &s0.to_vec())?;
    let w_scale = if w0 != 0.0 { w0.abs() } else { 1.0 };

    let runaway = Cell::new(None::<f64>);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let s = State::from_slice(t, y);
        if let Some(limit) = cfg.speed_limit {
            let speed = s.v.norm();
            if speed > limit {
                runaway.set(Some(t));
                return Err(Error::domain(format!(
                    "speed {speed:e} exceeds {limit:e} near t = {t:e}: the trajectory runs away"
                )));
            }
        }
        let a = acceleration(&s, field, potential)?;
        dy[..3].copy_from_slice(&s.v.0);
        dy[3..].copy_from_slice(&a.0);
        Ok(())
    };

    let times;
    let output = match cfg.sample_dt {
        Some(dt) => {
            if !(dt > 0.0) {
                return Err(Error::invalid("sample_dt must be positive"));
            }
            times = uniform_times(s0.t, t_end, dt);
            Output::Times(&times)
        }
        None => Output::Steps,
    };

    let mut samples = Vec::new();
    let mut sample_err = None;
    let mut max_w_drift = 0.0_f64;
    let solver = Dopri5::new(cfg.ode.clone()).with_invariant(w_of);
    let result = solver.solve(rhs, s0.t, &s0.to_vec(), t_end, output, |t, y| {
        let s = State::from_slice(t, y);
        match w_of(t, y) {
            Ok(w) => {
                max_w_drift = max_w_drift.max((w - w0).abs() / w_scale);
                samples.push(Sample {
                    t,
                    x: s.x,
                    v: s.v,
                    w,
                });
                Flow::Continue
            }
            Err(e) => {
                sample_err = Some(e);
                Flow::Stop
            }
        }
    });
    if let Some(e) = sample_err {
        return Err(e);
    }
    let stats = match result {
        Ok(stats) => stats,
        Err(Error::StepUnderflow { t, .. }) if runaway.get().is_some() => {
            return Err(Error::domain(format!(
                "trajectory runs away near t = {t:e}"
            )));
        }
        Err(e) => return Err(e),
    };
    Ok(Trajectory {
        mass,
        samples,
        stats,
        max_w_drift,
    })
}

/// The same integrator with ħ held fixed at its initial value, i.e. ordinary
/// Newtonian mechanics.
pub fn integrate_classical<F, P>(
    s0: &State,
    mass: f64,
    field: &F,
    potential: &P,
    duration: f64,
    cfg: &IntegrationConfig,
) -> Result<Trajectory>
where
    F: HbarField + ?Sized,
    P: Potential + ?Sized,
{
    let frozen = UniformHbar(field.value(&s0.x)?);
    integrate(s0, mass, &frozen, potential, duration, cfg)
}

/// Closed-form free motion in `ħ = ħ₀e^{kx}`:
/// `x = −(2/k) ln((c₁ + kt)/c₂)`, `v = −2/(c₁ + kt)`, `a = 2k/(c₁ + kt)²`.
pub fn free_exponential_analytic(k: f64, c1: f64, c2: f64, t: f64) -> Result<(f64, f64, f64)> {
    if k == 0.0 {
        return Err(Error::invalid("k must be non-zero"));
    }
    if !(c2 > 0.0) {
        return Err(Error::invalid("c2 must be positive"));
    }
    let u = c1 + k * t;
    if !(u > 0.0) {
        return Err(Error::domain(format!(
            "c1 + kt = {u:e} <= 0: the position is undefined past the runaway"
        )));
    }
    Ok((-2.0 / k * (u / c2).ln(), -2.0 / u, 2.0 * k / (u * u)))
}

/// Smallest radius in `[r_min, r_max]` at which a body at rest feels no net
/// force, the root of `r ∂_r ln ħ(r) + 1 = 0`. `None` when there is none.
///
/// Roots are bracketed on a logarithmic scan of `n_scan` points and polished
/// by bisection.
pub fn rest_radius<R: RadialHbar + ?Sized>(
    field: &R,
    r_min: f64,
    r_max: f64,
    n_scan: usize,
) -> Result<Option<f64>> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::invalid("need 0 < r_min < r_max"));
    }
    if n_scan < 2 {
        return Err(Error::GridTooSmall {
            axis: "r",
            found: n_scan,
            required: 2,
        });
    }
    let f = |r: f64| -> Result<f64> { Ok(r * field.dln_dr(r)? + 1.0) };
    let ratio = (r_max / r_min).ln() / (n_scan - 1) as f64;
    let mut a = r_min;
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    for i in 1..n_scan {
        let b = if i == n_scan - 1 {
            r_max
        } else {
            r_min * (ratio * i as f64).exp()
        };
        let fb = f(b)?;
        if fb == 0.0 {
            return Ok(Some(b));
        }
        if fa.signum() != fb.signum() {
            return bisect(f, a, b, fa).map(Some);
        }
        a = b;
        fa = fb;
    }
    Ok(None)
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Tangential speed at which the radial force on a body at radius `r`
/// vanishes: `v² = 2(−GM/(r² ∂_r ln ħ) − GM/r)`.
pub fn null_force_speed<R: RadialHbar + ?Sized>(field: &R, gm: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r:e}")));
    }
    let g = field.dln_dr(r)?;
    if !(g < 0.0) {
        return Err(Error::NoSolution(format!(
            "∂_r ln ħ = {g:e} is not negative; gravity and the ħ force cannot balance"
        )));
    }
    let radicand = 2.0 * (-gm / (r * r * g) - gm / r);
    if radicand < 0.0 {
        return Err(Error::NoSolution(format!(
            "v² = {radicand:e} < 0 at r = {r:e} m"
        )));
    }
    Ok(radicand.sqrt())
}

/// Max-norm over interior samples of
/// `|d/dt(mv) + m∇φ − m(g·v)v + m g(½|v|² − φ)| / m`,
/// with velocity and acceleration from second-order central differences of
/// the sampled positions. Only the leading uniformly spaced samples are used.
pub fn euler_lagrange_residual<F, P>(traj: &Trajectory, field: &F, potential: &P) -> Result<f64>
where
    F: HbarField + ?Sized,
    P: Potential + ?Sized,
{
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let n = uniform_prefix(&times);
    if n < 5 {
        return Err(Error::GridTooSmall {
            axis: "t",
            found: n,
            required: 5,
        });
    }
    let s = &traj.samples;
    let dt = s[1].t - s[0].t;
    let mut worst = 0.0_f64;
    for i in 1..n - 1 {
        let v = (s[i + 1].x - s[i - 1].x) / (2.0 * dt);
        let a = (s[i + 1].x - s[i].x * 2.0 + s[i - 1].x) / (dt * dt);
        let state = State::new(s[i].t, s[i].x, v);
        let g = field.grad_ln(&state.x)?;
        let phi = potential.phi(&state.x)?;
        let lhs = a + potential.grad_phi(&state.x)?;
        let rhs = v * g.dot(&v) - g * (0.5 * v.norm_sq() - phi);
        worst = worst.max((lhs - rhs).max_abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> IntegrationConfig {
        IntegrationConfig {
            ode: OdeConfig::with_tolerances(1e-12, 1e-14),
            sample_dt: None,
            speed_limit: None,
        }
    }

    #[test]
    fn newtonian_when_gradient_vanishes() {
        let s = State::new(0.0, Vec3::planar(3.0, 4.0), Vec3::planar(0.5, -1.0));
        let pm = PointMass { gm: 2.0 };
        let a = acceleration(&s, &UniformHbar(1.0), &pm).unwrap();
        assert_eq!(a, -pm.grad_phi(&s.x).unwrap());
    }

    #[test]
    fn rest_stays_at_rest() {
        let field = ExponentialField {
            hbar0: 1.0,
            k: Vec3::new(0.3, -2.0, 1.0),
        };
        let s = State::new(0.0, Vec3::new(1.0, 2.0, 3.0), Vec3::ZERO);
        assert_eq!(acceleration(&s, &field, &FreeSpace).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn one_dimensional_form() {
        // a = F/m + g·H/m with H/m = ½v² + φ.
        let field = ExponentialField {
            hbar0: 1.0,
            k: Vec3::new(0.7, 0.0, 0.0),
        };
        let pot = Harmonic { omega: 1.3 };
        let s = State::new(0.0, Vec3::new(0.4, 0.0, 0.0), Vec3::new(-2.1, 0.0, 0.0));
        let a = acceleration(&s, &field, &pot).unwrap();
        let phi = 0.5 * 1.3 * 1.3 * 0.4 * 0.4;
        let expect = -1.3 * 1.3 * 0.4 + 0.7 * (0.5 * 2.1 * 2.1 + phi);
        assert!((a.x() - expect).abs() < 1e-14);
        assert_eq!(a.y(), 0.0);
    }

    #[test]
    fn analytic_exponential_examples() {
        assert_eq!(
            free_exponential_analytic(1.0, 1.0, 1.0, 0.0).unwrap(),
            (0.0, -2.0, 2.0)
        );
        let (_, v, _) = free_exponential_analytic(-1.0, 1.0, 1.0, 0.999).unwrap();
        assert!(v.abs() > 1e3);
        assert!(matches!(
            free_exponential_analytic(-1.0, 1.0, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
        for &t in &[0.0, 0.5, 3.0, 10.0] {
            for &k in &[1.0, -0.05, 2.5] {
                let (_, v, a) = free_exponential_analytic(k, 1.0, 1.0, t).unwrap();
                assert!((a - k * 0.5 * v * v).abs() <= 1e-14 * a.abs());
            }
        }
    }

    #[test]
    fn integrate_matches_exponential_solution() {
        for &k in &[1.0, -0.05] {
            let (x0, v0, _) = free_exponential_analytic(k, 1.0, 1.0, 0.0).unwrap();
            let field = ExponentialField {
                hbar0: 1.0,
                k: Vec3::new(k, 0.0, 0.0),
            };
            let s0 = State::new(0.0, Vec3::new(x0, 0.0, 0.0), Vec3::new(v0, 0.0, 0.0));
            let traj = integrate(&s0, 1.0, &field, &FreeSpace, 10.0, &tight()).unwrap();
            for s in &traj.samples {
                let (x, v, _) = free_exponential_analytic(k, 1.0, 1.0, s.t).unwrap();
                assert!(
                    (s.x.x() - x).abs() <= 1e-6 * x.abs().max(1.0),
                    "k={k} t={}",
                    s.t
                );
                assert!((s.v.x() - v).abs() <= 1e-6 * v.abs());
            }
            // W = 2m/(ħ₀ c₂²) with c₂ = 1.
            assert!((traj.samples[0].w - 2.0).abs() < 1e-14);
            assert!(traj.max_w_drift < 1e-8);
        }
    }

    #[test]
    fn runaway_is_a_domain_error() {
        let field = ExponentialField {
            hbar0: 1.0,
            k: Vec3::new(-1.0, 0.0, 0.0),
        };
        let s0 = State::new(0.0, Vec3::ZERO, Vec3::new(-2.0, 0.0, 0.0));
        let cfg = IntegrationConfig {
            speed_limit: Some(1e8),
            ..tight()
        };
        let err = integrate(&s0, 1.0, &field, &FreeSpace, 2.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err:?}");
    }

    #[test]
    fn rest_radius_of_exponential_profile() {
        let f = RadialExponential {
            hbar0: 1.0,
            k: -1.0 / 5.0,
        };
        let r = rest_radius(&f, 1e-3, 1e3, 500).unwrap().unwrap();
        assert!((r - 5.0).abs() < 1e-10);
    }

    #[test]
    fn rest_radius_absent_for_zero_momentum_profile() {
        let p = HbarProfile::static_radial(1.0, 1.62e8).unwrap();
        assert_eq!(rest_radius(&p, 1.0, 1e15, 2000).unwrap(), None);
    }

    #[test]
    fn null_force_speed_examples() {
        let l = 7.0;
        let gm = 3.0;
        let f = RadialExponential {
            hbar0: 1.0,
            k: -1.0 / l,
        };
        let v = null_force_speed(&f, gm, l / 2.0).unwrap();
        assert!((v - (4.0 * gm / l).sqrt()).abs() < 1e-14);
        assert!(null_force_speed(&f, gm, l).unwrap().abs() < 1e-7);
        assert!(matches!(
            null_force_speed(&f, gm, 1.5 * l),
            Err(Error::NoSolution(_))
        ));
        let up = RadialExponential { hbar0: 1.0, k: 0.1 };
        assert!(matches!(
            null_force_speed(&up, gm, 1.0),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn tabulated_gradient_matches_values() {
        let r: Vec<f64> = (0..200).map(|i| 1.0 + 0.05 * i as f64).collect();
        let h: Vec<f64> = r.iter().map(|r| (1.0 + 2.0 / r).sqrt()).collect();
        let t = TabulatedRadial::new(r, h).unwrap();
        for &x in &[1.3, 2.0, 5.55, 10.0] {
            let d = 1e-6;
            let fd =
                (t.value_at(x + d).unwrap().ln() - t.value_at(x - d).unwrap().ln()) / (2.0 * d);
            let g = t.dln_dr(x).unwrap();
            assert!((fd - g).abs() <= 1e-5 * g.abs(), "{x}: {fd} vs {g}");
            let exact = -1.0 / (x * (x + 2.0));
            assert!((g - exact).abs() < 2e-3 * exact.abs());
        }
        assert!(matches!(t.value_at(0.5), Err(Error::Domain(_))));
        assert!(matches!(
            TabulatedRadial::new(vec![1.0, 2.0], vec![1.0, 1.0]),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn residual_needs_five_samples() {
        let traj = Trajectory {
            mass: 1.0,
            samples: vec![
                Sample {
                    t: 0.0,
                    x: Vec3::ZERO,
                    v: Vec3::ZERO,
                    w: 0.0
                };
                4
            ],
            stats: OdeStats::default(),
            max_w_drift: 0.0,
        };
        assert!(matches!(
            euler_lagrange_residual(&traj, &UniformHbar(1.0), &FreeSpace),
            Err(Error::GridTooSmall { .. })
        ));
    }
}
