//! JSON run configurations. Every physics parameter must be spelled out;
//! only numerical settings (ODE tolerances) have defaults. When no file is
//! given, a named preset is used and announced.

use std::path::Path;

use acton_core::calibration::CalibrationInputs;
use acton_core::constants::{HBAR, KPC, M_SUN};
use acton_core::cosmo::{b_from_lambda, Comoving, CosmoParams};
use acton_core::coupled::{InnerBoundary, OuterBoundary, RadialSolverConfig};
use acton_core::galaxy::RotationProblem;
use acton_core::ode::OdeConfig;
use acton_core::orbits::{BinaryConfig, CouplingMode};
use acton_core::HbarProfile;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Profile parameters, validated through [`HbarProfile::new`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub a0: f64,
    pub l_t: f64,
    pub ell: f64,
    pub e0: f64,
}

impl ProfileSpec {
    pub fn build(&self) -> acton_core::Result<HbarProfile> {
        HbarProfile::new(self.a0, self.l_t, self.ell, self.e0)
    }
}

impl From<HbarProfile> for ProfileSpec {
    fn from(p: HbarProfile) -> Self {
        Self {
            a0: p.a0,
            l_t: p.l_t,
            ell: p.ell,
            e0: p.e0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRun {
    pub profile: ProfileSpec,
    /// m.
    pub r_min: f64,
    /// m.
    pub r_max: f64,
    pub n_r: usize,
    /// s.
    pub t: f64,
}

impl ProfileRun {
    pub fn preset() -> Self {
        let profile = acton_core::calibration::calibrate(&CalibrationInputs::demonstration())
            .expect("demonstration inputs calibrate")
            .profile;
        Self {
            profile: profile.into(),
            r_min: 1e6,
            r_max: 1e13,
            n_r: 200,
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Uniform {
        hbar: f64,
    },
    /// `ħ₀ e^{k·x}`.
    Exponential {
        hbar0: f64,
        k: [f64; 3],
    },
    /// `ħ∞ (1 + ℓ/r)^½` centred on the origin.
    StaticRadial {
        hbar_inf: f64,
        ell: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    /// m³/s².
    PointMass {
        gm: f64,
    },
    /// 1/s.
    Harmonic {
        omega: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRun {
    pub field: FieldSpec,
    pub potential: PotentialSpec,
    /// kg.
    pub mass: f64,
    /// m.
    pub position: [f64; 3],
    /// m/s.
    pub velocity: [f64; 3],
    /// s.
    pub duration: f64,
    /// s.
    pub sample_dt: f64,
    #[serde(default = "tight_ode")]
    pub ode: OdeConfig,
}

fn tight_ode() -> OdeConfig {
    OdeConfig::with_tolerances(1e-12, 1e-14)
}

impl TrajectoryRun {
    /// Free fall down an exponential ħ, with the closed-form solution for
    /// `k = 1`, `c₁ = c₂ = 1`.
    pub fn preset() -> Self {
        Self {
            field: FieldSpec::Exponential {
                hbar0: 1.0,
                k: [1.0, 0.0, 0.0],
            },
            potential: PotentialSpec::Free,
            mass: 1.0,
            position: [0.0, 0.0, 0.0],
            velocity: [-2.0, 0.0, 0.0],
            duration: 10.0,
            sample_dt: 0.05,
            ode: tight_ode(),
        }
    }
}

pub fn binary_preset(ell: f64) -> BinaryConfig {
    BinaryConfig::hulse_taylor_like(ell, CouplingMode::PerBody)
}

pub fn rotation_preset() -> RotationProblem {
    RotationProblem {
        v_flat: 1.5e5,
        m_visible: 1.3e11 * M_SUN,
        r_in: 10.0 * KPC,
        r_out: 60.0 * KPC,
        n_grid: 501,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FriedmannRun {
    pub params: CosmoParams,
    pub a0: f64,
    /// s.
    pub t0: f64,
    /// s.
    pub t_end: f64,
    /// s.
    pub dt: f64,
    #[serde(default = "cosmo_ode")]
    pub ode: OdeConfig,
}

fn cosmo_ode() -> OdeConfig {
    OdeConfig::with_tolerances(1e-11, 1e-14)
}

impl FriedmannRun {
    /// Matter plus the averaged ħ term tuned to `Λ = 9.95e-36 /s²`, with a
    /// negligible closed curvature.
    pub fn preset() -> Self {
        Self {
            params: CosmoParams {
                hbar_o: HBAR,
                b: b_from_lambda(9.95e-36, HBAR).expect("positive hbar"),
                k_curv: 1e-60,
                rho0: 2.7e-27,
                comoving: Comoving::Averaged,
            },
            a0: 1.0,
            t0: 0.0,
            t_end: 1.0e18,
            dt: 1.0e16,
            ode: cosmo_ode(),
        }
    }
}

/// Initial `φ` on the radial grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    /// `r φ = A exp(−(r − r_c)²/2σ²)`, at rest or moving outward at c.
    Gaussian {
        amplitude: f64,
        centre: f64,
        width: f64,
        outgoing: bool,
    },
    /// `r φ = A sin(p r)` at rest.
    Standing { amplitude: f64, p: f64 },
}

impl InitialField {
    /// `(φ, ∂φ/∂x₀)` at `r`.
    pub fn at(&self, r: f64) -> (f64, f64) {
        let (u, u_t, u_r0) = match *self {
            InitialField::Gaussian {
                amplitude,
                centre,
                width,
                outgoing,
            } => {
                let f = amplitude * (-(r - centre).powi(2) / (2.0 * width * width)).exp();
                let rate = if outgoing {
                    (r - centre) / (width * width) * f
                } else {
                    0.0
                };
                let slope0 = amplitude * (-centre * centre / (2.0 * width * width)).exp() * centre
                    / (width * width);
                (f, rate, slope0)
            }
            InitialField::Standing { amplitude, p } => {
                (amplitude * (p * r).sin(), 0.0, amplitude * p)
            }
        };
        if r == 0.0 {
            (u_r0, 0.0)
        } else {
            (u / r, u_t / r)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledRun {
    pub profile: ProfileSpec,
    pub solver: RadialSolverConfig,
    pub initial: InitialField,
    /// Radius beyond which the decoupling ratio is reported, m.
    pub far_field_from: f64,
}

impl CoupledRun {
    /// An outgoing pulse through a profile with radial structure, in metres.
    pub fn preset() -> Self {
        Self {
            profile: ProfileSpec {
                a0: HBAR * HBAR,
                l_t: 1.0e3,
                ell: 0.5,
                e0: 0.0,
            },
            solver: RadialSolverConfig {
                r_in: 1.0,
                r_out: 60.0,
                n_r: 2951,
                x0_start: 0.0,
                x0_end: 40.0,
                courant: 0.5,
                snapshot_every: 400,
                inner: InnerBoundary::Dirichlet,
                outer: OuterBoundary::Absorbing,
            },
            initial: InitialField::Gaussian {
                amplitude: 1.0,
                centre: 6.0,
                width: 0.5,
                outgoing: true,
            },
            far_field_from: 25.0,
        }
    }
}
