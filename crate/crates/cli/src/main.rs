use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use acton_core::calibration::{calibrate, CalibrationInputs};
use acton_core::constants::{HOUR, KPC};
use acton_core::cosmo::integrate_scale_factor;
use acton_core::coupled::{omega_h_from_profile, solve_supported_field_radial};
use acton_core::dynamics::{
    integrate, ExponentialField, FreeSpace, Harmonic, HbarField, IntegrationConfig, PointMass,
    Potential, Trajectory, UniformHbar,
};
use acton_core::galaxy::{invert_rotation_curve, RotationProblem};
use acton_core::golden::{self, GoldenOptions};
use acton_core::ode::OdeConfig;
use acton_core::orbits::{simulate_binary, BinaryConfig};
use acton_core::{HbarProfile, Vec3};
use clap::{Args, Parser, Subcommand};

mod config;
mod svg;

use config::*;

#[derive(Parser)]
#[command(
    name = "acton",
    version,
    about = "Variable Planck's constant simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; a built-in preset is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "acton-out")]
    out: PathBuf,
    /// Seed for randomised sweeps.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Tolerance override, `name=value`. Integrators accept `rtol` and
    /// `atol`; `reproduce` accepts any check name.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the profile coefficients from observational inputs.
    Calibrate,
    /// Tabulate ħ(r) and its log-gradient.
    Profile,
    /// Integrate a single dominant-path trajectory.
    Trajectory,
    /// Two-body orbit with a companion-centred ħ profile.
    Binary {
        /// Radial scale of the profile, m. Overrides the config.
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Invert a flat rotation curve for ħ(r).
    Rotation,
    /// Integrate the averaged Friedmann equation.
    Friedmann,
    /// Radial field carried by the acton background.
    Coupled,
    /// Run every benchmark case and print a pass/fail table.
    #[command(alias = "reproduce-paper")]
    Reproduce,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Physics(acton_core::Error),
    /// Benchmark cases that ran but missed their targets.
    Mismatch(String),
}

impl From<acton_core::Error> for CliError {
    fn from(e: acton_core::Error) -> Self {
        CliError::Physics(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Physics(_) | CliError::Mismatch(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Physics(e) => write!(f, "{e}"),
            CliError::Mismatch(m) => f.write_str(m),
        }
    }
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{k}: {e}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("{k}: tolerance must be positive"));
    }
    Ok((k.to_string(), v))
}

struct Ctx {
    common: Common,
}

impl Ctx {
    fn config<T: serde::de::DeserializeOwned>(
        &self,
        preset_name: &str,
        preset: impl FnOnce() -> T,
    ) -> Result<T, CliError> {
        match &self.common.config {
            Some(p) => load(p),
            None => {
                eprintln!("no --config given; using built-in preset '{preset_name}'");
                Ok(preset())
            }
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.common.out).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", self.common.out.display()))
        })?;
        let path = self.common.out.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    /// Applies `rtol`/`atol` overrides; any other name is rejected.
    fn ode(&self, mut ode: OdeConfig) -> Result<OdeConfig, CliError> {
        for (k, v) in &self.common.tol {
            match k.as_str() {
                "rtol" => ode.rtol = *v,
                "atol" => ode.atol = *v,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown tolerance {other:?}; expected rtol or atol"
                    )))
                }
            }
        }
        Ok(ode)
    }

    fn no_tolerances(&self) -> Result<(), CliError> {
        match self.common.tol.first() {
            Some((k, _)) => Err(CliError::Config(format!(
                "this command takes no tolerance overrides (got {k:?})"
            ))),
            None => Ok(()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx { common: cli.common };
    match cli.command {
        Command::Calibrate => cmd_calibrate(&ctx),
        Command::Profile => cmd_profile(&ctx),
        Command::Trajectory => cmd_trajectory(&ctx),
        Command::Binary { ell } => cmd_binary(&ctx, ell),
        Command::Rotation => cmd_rotation(&ctx),
        Command::Friedmann => cmd_friedmann(&ctx),
        Command::Coupled => cmd_coupled(&ctx),
        Command::Reproduce => cmd_reproduce(&ctx),
    }
}

fn cmd_calibrate(ctx: &Ctx) -> Result<(), CliError> {
    ctx.no_tolerances()?;
    let inputs: CalibrationInputs =
        ctx.config("demonstration", CalibrationInputs::demonstration)?;
    let r = calibrate(&inputs)?;
    let mut csv = String::from("name,unit,value,published,rel_deviation,derived_from\n");
    let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
    for v in &r.table {
        println!(
            "{:<26} {:>14.6e} {:<22} {}",
            v.name,
            v.value,
            v.unit,
            v.rel_deviation
                .map(|d| format!("({:+.2}% vs published)", 100.0 * d))
                .unwrap_or_default()
        );
        csv.push_str(&format!(
            "{},{},{:e},{},{},\"{}\"\n",
            v.name,
            v.unit,
            v.value,
            opt(v.published),
            opt(v.rel_deviation),
            v.derived_from
        ));
    }
    ctx.write("calibration.csv", &csv)?;
    ctx.write("calibration.json", &to_json(&r))?;
    let profile = ProfileSpec::from(r.profile);
    ctx.write("profile.json", &to_json(&profile))?;
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serialises") + "\n"
}

fn cmd_profile(ctx: &Ctx) -> Result<(), CliError> {
    ctx.no_tolerances()?;
    let run: ProfileRun = ctx.config("calibrated demonstration profile", ProfileRun::preset)?;
    let p = run.profile.build()?;
    if !(run.r_min > 0.0 && run.r_max > run.r_min) || run.n_r < 2 {
        return Err(CliError::Config(
            "need 0 < r_min < r_max and n_r >= 2".into(),
        ));
    }
    let mut csv = String::from("r_m,hbar_Js,dlnhbar_dr_per_m\n");
    let ratio = (run.r_max / run.r_min).ln() / (run.n_r - 1) as f64;
    for i in 0..run.n_r {
        let r = run.r_min * (ratio * i as f64).exp();
        csv.push_str(&format!(
            "{:e},{:e},{:e}\n",
            r,
            p.hbar_at(r, run.t)?,
            p.log_gradient(r)?
        ));
    }
    ctx.write("profile.csv", &csv)?;
    Ok(())
}

fn build_field(f: FieldSpec) -> Result<Box<dyn HbarField>, CliError> {
    Ok(match f {
        FieldSpec::Uniform { hbar } => Box::new(UniformHbar(hbar)),
        FieldSpec::Exponential { hbar0, k } => Box::new(ExponentialField { hbar0, k: Vec3(k) }),
        FieldSpec::StaticRadial { hbar_inf, ell } => {
            Box::new(HbarProfile::static_radial(hbar_inf, ell)?)
        }
    })
}

fn build_potential(p: PotentialSpec) -> Box<dyn Potential> {
    match p {
        PotentialSpec::Free => Box::new(FreeSpace),
        PotentialSpec::PointMass { gm } => Box::new(PointMass { gm }),
        PotentialSpec::Harmonic { omega } => Box::new(Harmonic { omega }),
    }
}

fn cmd_trajectory(ctx: &Ctx) -> Result<(), CliError> {
    let run: TrajectoryRun = ctx.config(
        "free motion in an exponential profile",
        TrajectoryRun::preset,
    )?;
    let field = build_field(run.field)?;
    let potential = build_potential(run.potential);
    let cfg = IntegrationConfig {
        ode: ctx.ode(run.ode.clone())?,
        sample_dt: Some(run.sample_dt),
        ..IntegrationConfig::default()
    };
    let s0 = acton_core::dynamics::State::new(0.0, Vec3(run.position), Vec3(run.velocity));
    let traj: Trajectory = integrate(
        &s0,
        run.mass,
        field.as_ref(),
        potential.as_ref(),
        run.duration,
        &cfg,
    )?;
    println!(
        "{} samples, {} steps, max relative W drift {:.3e}",
        traj.samples.len(),
        traj.stats.steps,
        traj.max_w_drift
    );
    ctx.write("trajectory.csv", &traj.to_csv())?;
    Ok(())
}

const MAX_PLOT_POINTS: usize = 3000;

fn cmd_binary(ctx: &Ctx, ell: Option<f64>) -> Result<(), CliError> {
    let mut cfg: BinaryConfig = ctx.config("Hulse-Taylor-like pair, per-body coupling", || {
        binary_preset(ell.unwrap_or(0.0))
    })?;
    if let Some(ell) = ell {
        cfg.ell = ell;
    }
    cfg.ode = ctx.ode(cfg.ode.clone())?;
    let run = simulate_binary(&cfg)?;
    let d = &run.diagnostics;
    println!(
        "period {:.4} h, eccentricity {:.4}, apsidal precession {:.1} arcsec/orbit, W drift {:.2e}",
        d.period / HOUR,
        d.eccentricity,
        d.apsidal_precession,
        d.w_drift
    );
    ctx.write("binary.csv", &run.to_csv())?;
    ctx.write("binary_diagnostics.json", &to_json(d))?;
    let scale = 1e9;
    let body = |first: bool| -> Vec<(f64, f64)> {
        let stride = run.samples.len().div_ceil(MAX_PLOT_POINTS).max(1);
        run.samples
            .iter()
            .step_by(stride)
            .map(|s| {
                let x = if first { s.x1 } else { s.x2 };
                (x.x() / scale, x.y() / scale)
            })
            .collect()
    };
    let plot = svg::Plot {
        title: format!("Binary orbit, ell = {:.3e} m", cfg.ell),
        x_label: "x [1e9 m]".into(),
        y_label: "y [1e9 m]".into(),
        equal_aspect: true,
        series: vec![
            svg::Series {
                label: "body 1".into(),
                colour: "#1f77b4",
                points: body(true),
            },
            svg::Series {
                label: "body 2".into(),
                colour: "#d62728",
                points: body(false),
            },
        ],
        notes: vec![
            format!("P = {:.2} h", d.period / HOUR),
            format!("e = {:.3}", d.eccentricity),
            format!("precession {:.0}\"/orbit", d.apsidal_precession),
        ],
    };
    ctx.write("binary.svg", &plot.render())?;
    Ok(())
}

fn cmd_rotation(ctx: &Ctx) -> Result<(), CliError> {
    ctx.no_tolerances()?;
    let p: RotationProblem = ctx.config(
        "flat 150 km/s curve around 1.3e11 solar masses",
        rotation_preset,
    )?;
    let sol = invert_rotation_curve(&p)?;
    println!(
        "minimum hbar factor {:.4} at {:.2} kpc (GM/v^2 = {:.2} kpc)",
        sol.min_factor,
        sol.r_min / KPC,
        p.balance_radius() / KPC
    );
    ctx.write("rotation.csv", &sol.to_csv())?;
    let plot = svg::Plot {
        title: "Required hbar(r)/hbar(r_in)".into(),
        x_label: "r [kpc]".into(),
        y_label: "hbar factor".into(),
        equal_aspect: false,
        series: vec![svg::Series {
            label: format!("v = {:.0} km/s", p.v_flat / 1e3),
            colour: "#1f77b4",
            points: sol
                .r
                .iter()
                .zip(&sol.ln_hbar_rel)
                .map(|(r, l)| (r / KPC, l.exp()))
                .collect(),
        }],
        notes: vec![format!("min {:.3}", sol.min_factor)],
    };
    ctx.write("rotation.svg", &plot.render())?;
    Ok(())
}

fn cmd_friedmann(ctx: &Ctx) -> Result<(), CliError> {
    let run: FriedmannRun = ctx.config("matter plus averaged hbar term", FriedmannRun::preset)?;
    let ode = ctx.ode(run.ode.clone())?;
    let hist = integrate_scale_factor(&run.params, run.a0, run.t0, run.t_end, run.dt, &ode)?;
    println!(
        "a grows from {:.4} to {:.4}; cosmological term {:.4e} 1/s^2",
        hist.a[0],
        hist.a[hist.a.len() - 1],
        run.params.cosmological_term()?
    );
    ctx.write("friedmann.csv", &hist.to_csv())?;
    Ok(())
}

fn cmd_coupled(ctx: &Ctx) -> Result<(), CliError> {
    ctx.no_tolerances()?;
    let run: CoupledRun = ctx.config(
        "outgoing pulse through a radial profile",
        CoupledRun::preset,
    )?;
    let profile = run.profile.build()?;
    let init = run.initial;
    let sol = solve_supported_field_radial(&profile, &run.solver, |r| init.at(r))?;
    let last = sol.x0.len() - 1;
    println!(
        "omega_h {:.4e} 1/s; {} snapshots; decoupling ratio beyond {:.3e} m: {:.3e}",
        omega_h_from_profile(&profile),
        sol.x0.len(),
        run.far_field_from,
        sol.decoupling_ratio(last, run.far_field_from)
    );
    ctx.write("coupled.csv", &sol.to_csv())?;
    Ok(())
}

fn cmd_reproduce(ctx: &Ctx) -> Result<(), CliError> {
    if ctx.common.config.is_some() {
        return Err(CliError::Config(
            "reproduce runs fixed cases and takes no --config".into(),
        ));
    }
    let known = golden::default_tolerances();
    let mut tolerances = BTreeMap::new();
    for (k, v) in &ctx.common.tol {
        if !known.contains_key(k) {
            return Err(CliError::Config(format!("unknown check {k:?}")));
        }
        tolerances.insert(k.clone(), *v);
    }
    let opts = GoldenOptions {
        seed: ctx.common.seed,
        tolerances,
        ..GoldenOptions::default()
    };
    let results = golden::run_all_with(&opts);
    print!("{}", golden::format_table(&results));
    let mut csv =
        String::from("criterion,check,reference,measured,target,comparison,tolerance,pass\n");
    for c in &results {
        for k in &c.checks {
            csv.push_str(&format!(
                "{},{},\"{}\",{:e},{:e},{:?},{:e},{}\n",
                c.id, k.name, k.reference, k.measured, k.target, k.comparison, k.tolerance, k.pass
            ));
        }
    }
    ctx.write("reproduce.csv", &csv)?;
    let failed: Vec<u8> = results.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("all {} criteria pass", results.len());
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "criteria {failed:?} miss their reference values"
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
