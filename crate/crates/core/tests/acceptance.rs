//! One line per benchmark criterion. Targets and tolerances are pinned here
//! and applied to the measured values independently of the runner's own
//! defaults.

use std::sync::OnceLock;

use acton_core::golden::{criterion_passes, run_all, Check, Comparison, Criterion};

use Comparison::{Absolute, Below, Relative};

const PINNED: &[(&str, f64, Comparison, f64)] = &[
    ("c1.b1_over_b2", 1.0e33, Relative, 0.02),
    ("c1.beta2_b2b3", 1.11e-101, Relative, 0.02),
    ("c1.b4_over_b3", 1.62e8, Relative, 0.03),
    ("c1.radial_log_gradient", -3.5e-15, Relative, 0.02),
    ("c1.b2b3", 3.86e92, Relative, 0.10),
    ("c1.beta", 1.70e-97, Relative, 0.10),
    ("c1.b1b3", 3.86e125, Relative, 0.10),
    ("c2.omega_h", 3.0e-25, Relative, 0.02),
    ("c2.omega_h_decade", -25.0, Absolute, 1.0),
    ("c3.period_h", 8.1, Relative, 0.02),
    ("c3.eccentricity", 0.62, Absolute, 0.01),
    ("c3.precession_arcsec", 0.0, Below, 10.0),
    ("c4.relative.period_h", 11.78, Relative, 0.05),
    ("c4.relative.precession_arcsec", -104_000.0, Relative, 0.10),
    ("c4.per_body.period_h", 11.78, Relative, 0.05),
    ("c4.per_body.precession_arcsec", -104_000.0, Relative, 0.10),
    ("c5.decay_8_1h", -2.25e-12, Relative, 0.02),
    ("c5.decay_11_78h", -1.20e-12, Relative, 0.02),
    ("c5.period_power", 1.0, Absolute, 1e-12),
    ("c6.min_factor_9e10", 0.9, Absolute, 0.02),
    ("c6.min_factor_1_3e11", 0.755, Absolute, 0.05),
    ("c6.min_location_cells", 0.0, Absolute, 2.0),
    ("c6.closed_form", 0.0, Below, 1e-6),
    ("c7.abs_b", 1.324e-87, Relative, 0.01),
    ("c7.r_o", 2.822e26, Relative, 0.01),
    ("c7.lambda_from_energy", 9.95e-36, Relative, 0.10),
    ("c7.energy_from_lambda", 5.63e-10, Relative, 0.10),
    ("c8.beta_h", -5.43e4, Relative, 0.02),
    ("c9.w_drift_per_period", 0.0, Below, 1e-8),
    ("c9.exponential_free_motion", 0.0, Below, 1e-6),
    ("c9.zero_momentum_residual", 0.0, Below, 1e-8),
    ("c9.standing_wave_order", 2.0, Absolute, 0.1),
    ("c9.volume_average", 0.0, Below, 1e-9),
    ("c9.oscillator_sweep", 0.0, Below, 1e-8),
    ("c9.classical_limits", 0.0, Below, 1e-6),
];

fn results() -> &'static [Criterion] {
    static RESULTS: OnceLock<Vec<Criterion>> = OnceLock::new();
    RESULTS.get_or_init(run_all)
}

fn pinned(name: &str) -> (f64, Comparison, f64) {
    let (_, target, cmp, tol) = PINNED
        .iter()
        .find(|p| p.0 == name)
        .unwrap_or_else(|| panic!("no pinned tolerance for {name}"));
    (*target, *cmp, *tol)
}

fn judged(c: &Check) -> bool {
    let (target, cmp, tol) = pinned(&c.name);
    c.measured.is_finite() && cmp.passes(c.measured, target, tol)
}

fn line(c: &Criterion) -> String {
    let ok = c.error.is_none() && criterion_passes(&c.checks, judged);
    let detail: Vec<String> = c
        .checks
        .iter()
        .map(|k| {
            format!(
                "{}={:.4e}{}",
                k.name,
                k.measured,
                if judged(k) { "" } else { "(x)" }
            )
        })
        .collect();
    format!(
        "criterion {} [{}] {}: {}{}",
        c.id,
        if ok { "PASS" } else { "FAIL" },
        c.title,
        detail.join(" "),
        c.error
            .as_deref()
            .map(|e| format!(" error: {e}"))
            .unwrap_or_default()
    )
}

fn assert_criterion(id: u8) {
    let c = results()
        .iter()
        .find(|c| c.id == id)
        .expect("criterion present");
    for k in &c.checks {
        let (target, _, _) = pinned(&k.name);
        assert_eq!(
            k.target, target,
            "runner target for {} differs from the pinned value",
            k.name
        );
    }
    let text = line(c);
    println!("{text}");
    assert!(
        c.error.is_none() && criterion_passes(&c.checks, judged),
        "{text}"
    );
}

#[test]
fn summary() {
    let all = results();
    assert_eq!(all.len(), 9);
    let seen: usize = all.iter().map(|c| c.checks.len()).sum();
    assert_eq!(
        seen,
        PINNED.len(),
        "every pinned check is produced exactly once"
    );
    for c in all {
        println!("{}", line(c));
    }
}

#[test]
fn criterion_1_calibration_table() {
    assert_criterion(1);
}

#[test]
fn criterion_2_present_decay_rate() {
    assert_criterion(2);
}

#[test]
fn criterion_3_newtonian_binary() {
    assert_criterion(3);
}

#[test]
fn criterion_4_dominant_path_binary() {
    assert_criterion(4);
}

#[test]
fn criterion_5_gravitational_wave_decay() {
    assert_criterion(5);
}

#[test]
fn criterion_6_rotation_curves() {
    assert_criterion(6);
}

#[test]
fn criterion_7_cosmology() {
    assert_criterion(7);
}

#[test]
fn criterion_8_local_position_invariance() {
    assert_criterion(8);
}

#[test]
fn criterion_9_property_suite() {
    assert_criterion(9);
}
