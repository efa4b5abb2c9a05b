//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! The stepper controls the local error of the embedded 4th order solution in
//! a mixed absolute/relative norm. Output may be requested at arbitrary times;
//! those states come from the 4th order continuous extension, so the accepted
//! step sequence does not depend on the sampling grid.
//!
//! An optional scalar invariant can be attached to the solver. When present,
//! a step whose invariant changes by more than `invariant_tol` (relative to
//! the value at the start of the integration) is rejected and retried with a
//! smaller step. The invariant is monitored, never projected.

#![allow(clippy::needless_range_loop)] // stage loops read clearer indexed

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// y5 - y4
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Hairer & Wanner, dopri5 `contd5`)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-control settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when absent.
    #[serde(default)]
    pub h_init: Option<f64>,
    /// Upper bound on the step size.
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Largest tolerated relative drift of the attached invariant.
    #[serde(default)]
    pub invariant_tol: Option<f64>,
}

fn default_max_steps() -> usize {
    5_000_000
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: None,
            max_steps: default_max_steps(),
            invariant_tol: None,
        }
    }
}

impl OdeConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol >= 0.0) {
            return Err(Error::invalid("rtol must be > 0 and atol >= 0"));
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0) {
                return Err(Error::invalid("h_max must be positive"));
            }
        }
        Ok(())
    }
}

/// Where the observer is called.
#[derive(Debug, Clone, Copy)]
pub enum Output<'a> {
    /// The initial state and every accepted step.
    Steps,
    /// Interpolated states at these (ascending) times.
    Times(&'a [f64]),
}

/// Observer verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Time reached when the integration ended.
    pub t_final: f64,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
    /// Largest relative drift of the invariant over accepted steps.
    pub max_invariant_drift: f64,
}

type Invariant<'a> = Box<dyn Fn(f64, &[f64]) -> Result<f64> + 'a>;

/// Dormand–Prince 5(4) driver.
pub struct Dopri5<'a> {
    cfg: OdeConfig,
    invariant: Option<Invariant<'a>>,
}

struct Work {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Work {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; n];
        Self {
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
            err: z(),
            cont: [z(), z(), z(), z(), z()],
        }
    }
}

impl<'a> Dopri5<'a> {
    pub fn new(cfg: OdeConfig) -> Self {
        Self {
            cfg,
            invariant: None,
        }
    }

    /// Attaches a conserved quantity checked after each step.
    pub fn with_invariant(mut self, f: impl Fn(f64, &[f64]) -> Result<f64> + 'a) -> Self {
        self.invariant = Some(Box::new(f));
        self
    }

    pub fn config(&self) -> &OdeConfig {
        &self.cfg
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end`.
    ///
    /// A failing `rhs` inside a trial stage shrinks the step; the error is
    /// returned only if no admissible step can be found.
    pub fn solve<F, O>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        output: Output<'_>,
        mut observer: O,
    ) -> Result<OdeStats>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        O: FnMut(f64, &[f64]) -> Flow,
    {
        self.cfg.validate()?;
        if !(t_end > t0) {
            return Err(Error::invalid(format!(
                "integration interval must be forward (t0 = {t0}, t_end = {t_end})"
            )));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial state is not finite"));
        }

        let n = y0.len();
        let mut w = Work::new(n);
        let mut stats = OdeStats {
            t_final: t0,
            ..OdeStats::default()
        };
        let mut t = t0;
        let mut y = y0.to_vec();

        rhs(t, &y, &mut w.k[0])?;
        stats.evaluations += 1;

        let inv0 = match &self.invariant {
            Some(f) => Some(f(t, &y)?),
            None => None,
        };

        // Output bookkeeping.
        let mut next_out = 0usize;
        match output {
            Output::Steps => {
                if observer(t, &y) == Flow::Stop {
                    stats.stopped = true;
                    return Ok(stats);
                }
            }
            Output::Times(times) => {
                while next_out < times.len() && times[next_out] <= t0 {
                    if times[next_out] == t0 && observer(t0, &y) == Flow::Stop {
                        stats.stopped = true;
                        return Ok(stats);
                    }
                    next_out += 1;
                }
            }
        }

        let span = t_end - t0;
        let h_max = self.cfg.h_max.unwrap_or(span).min(span);
        let mut h = match self.cfg.h_init {
            Some(h) => h.min(h_max),
            None => self.initial_step(&mut rhs, t, &y, &mut w, h_max, &mut stats)?,
        };
        let mut last_rhs_error: Option<Error> = None;
        let mut interp = vec![0.0; n];

        while t < t_end {
            if stats.steps + stats.rejected >= self.cfg.max_steps {
                return Err(Error::MaxSteps(self.cfg.max_steps));
            }
            let h_floor = 1e-14 * t.abs().max(span);
            if h < h_floor {
                return Err(last_rhs_error.unwrap_or(Error::StepUnderflow { t, h }));
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }

            if let Err(e) = self.trial_step(&mut rhs, t, &y, h, &mut w, &mut stats) {
                last_rhs_error = Some(e);
                stats.rejected += 1;
                h *= 0.25;
                continue;
            }

            let err = self.error_norm(&y, &w);
            if !err.is_finite() || err > 1.0 {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h *= fac;
                continue;
            }

            if w.y_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!(
                    "solution left the finite domain at t = {t:e}"
                )));
            }

            if let (Some(f), Some(i0)) = (&self.invariant, inv0) {
                let i1 = f(t + h, &w.y_new)?;
                let scale = if i0 != 0.0 { i0.abs() } else { 1.0 };
                let drift = (i1 - i0).abs() / scale;
                if let Some(tol) = self.cfg.invariant_tol {
                    if drift > tol && h > 1e3 * h_floor {
                        stats.rejected += 1;
                        h *= 0.5;
                        continue;
                    }
                }
                stats.max_invariant_drift = stats.max_invariant_drift.max(drift);
            }

            // Accepted: build the dense-output polynomial before rolling state.
            for i in 0..n {
                let dy = w.y_new[i] - y[i];
                let bspl = h * w.k[0][i] - dy;
                w.cont[0][i] = y[i];
                w.cont[1][i] = dy;
                w.cont[2][i] = bspl;
                w.cont[3][i] = dy - h * w.k[6][i] - bspl;
                w.cont[4][i] = h
                    * (D1 * w.k[0][i]
                        + D3 * w.k[2][i]
                        + D4 * w.k[3][i]
                        + D5 * w.k[4][i]
                        + D6 * w.k[5][i]
                        + D7 * w.k[6][i]);
            }
            let t_old = t;
            t = if last { t_end } else { t + h };
            stats.steps += 1;
            stats.t_final = t;
            y.copy_from_slice(&w.y_new);
            let (k_first, k_rest) = w.k.split_at_mut(1);
            k_first[0].copy_from_slice(&k_rest[5]);

            match output {
                Output::Steps => {
                    if observer(t, &y) == Flow::Stop {
                        stats.stopped = true;
                        return Ok(stats);
                    }
                }
                Output::Times(times) => {
                    while next_out < times.len() && times[next_out] <= t {
                        let to = times[next_out];
                        if to == t {
                            interp.copy_from_slice(&y);
                        } else {
                            let theta = (to - t_old) / (t - t_old);
                            let theta1 = 1.0 - theta;
                            for i in 0..n {
                                interp[i] = w.cont[0][i]
                                    + theta
                                        * (w.cont[1][i]
                                            + theta1
                                                * (w.cont[2][i]
                                                    + theta
                                                        * (w.cont[3][i] + theta1 * w.cont[4][i])));
                            }
                        }
                        next_out += 1;
                        if observer(to, &interp) == Flow::Stop {
                            stats.stopped = true;
                            return Ok(stats);
                        }
                    }
                }
            }

            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(h_max);
            last_rhs_error = None;
        }
        Ok(stats)
    }

    fn trial_step<F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        h: f64,
        w: &mut Work,
        stats: &mut OdeStats,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $tc:expr, |$i:ident| $incr:expr) => {{
                for $i in 0..n {
                    w.y_stage[$i] = y[$i] + h * ($incr);
                }
                stats.evaluations += 1;
                rhs(t + $tc * h, &w.y_stage, &mut w.k[$dst])?;
            }};
        }
        stage!(1, C2, |i| A21 * w.k[0][i]);
        stage!(2, C3, |i| A31 * w.k[0][i] + A32 * w.k[1][i]);
        stage!(3, C4, |i| A41 * w.k[0][i]
            + A42 * w.k[1][i]
            + A43 * w.k[2][i]);
        stage!(4, C5, |i| A51 * w.k[0][i]
            + A52 * w.k[1][i]
            + A53 * w.k[2][i]
            + A54 * w.k[3][i]);
        stage!(5, 1.0, |i| A61 * w.k[0][i]
            + A62 * w.k[1][i]
            + A63 * w.k[2][i]
            + A64 * w.k[3][i]
            + A65 * w.k[4][i]);
        for i in 0..n {
            w.y_new[i] = y[i]
                + h * (A71 * w.k[0][i]
                    + A73 * w.k[2][i]
                    + A74 * w.k[3][i]
                    + A75 * w.k[4][i]
                    + A76 * w.k[5][i]);
        }
        stats.evaluations += 1;
        rhs(t + h, &w.y_new, &mut w.k[6])?;
        for i in 0..n {
            w.err[i] = h
                * (E1 * w.k[0][i]
                    + E3 * w.k[2][i]
                    + E4 * w.k[3][i]
                    + E5 * w.k[4][i]
                    + E6 * w.k[5][i]
                    + E7 * w.k[6][i]);
        }
        Ok(())
    }

    fn error_norm(&self, y: &[f64], w: &Work) -> f64 {
        let n = y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let sc = self.cfg.atol + self.cfg.rtol * y[i].abs().max(w.y_new[i].abs());
            let r = if sc > 0.0 { w.err[i] / sc } else { 0.0 };
            acc += r * r;
        }
        (acc / n.max(1) as f64).sqrt()
    }

    fn initial_step<F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64],
        w: &mut Work,
        h_max: f64,
        stats: &mut OdeStats,
    ) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let sc = |v: f64| self.cfg.atol + self.cfg.rtol * v.abs();
        let rms = |f: &dyn Fn(usize) -> f64| {
            ((0..n).map(|i| f(i).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
        };
        let d0 = rms(&|i| y[i] / sc(y[i]));
        let d1 = rms(&|i| w.k[0][i] / sc(y[i]));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * h_max
        } else {
            (0.01 * d0 / d1).min(h_max)
        };
        for i in 0..n {
            w.y_stage[i] = y[i] + h0 * w.k[0][i];
        }
        stats.evaluations += 1;
        if rhs(t + h0, &w.y_stage, &mut w.k[1]).is_err() {
            return Ok(h0 * 1e-3);
        }
        // d2 estimates |y''| in tolerance units (1/time²); the Euler error
        // h²·d2 is kept near 0.01. Unlike the usual (0.01/max(d1, d2))^(1/5)
        // this does not assume an O(1) time scale.
        let d2 = rms(&|i| (w.k[1][i] - w.k[0][i]) / sc(y[i])) / h0;
        let h1 = if d2 > 0.0 {
            (0.01 / d2).sqrt()
        } else {
            100.0 * h0
        };
        Ok((100.0 * h0).min(h1).min(h_max))
    }
}

/// Evenly spaced times `t0, t0 + dt, …` up to and including `t_end` (the
/// last point is appended when `dt` does not divide the span).
/// Length of the leading run of `times` spaced like its first interval.
pub fn uniform_prefix(times: &[f64]) -> usize {
    if times.len() < 2 {
        return times.len();
    }
    let dt = times[1] - times[0];
    1 + times
        .windows(2)
        .take_while(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-12 * w[1].abs()))
        .count()
}

pub fn uniform_times(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let n = ((t_end - t0) / dt).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
    if let Some(&last) = out.last() {
        if t_end - last > 1e-9 * dt {
            out.push(t_end);
        }
    }
    out
}
