use std::hint::black_box;

use acton_core::constants::{HBAR, KPC, M_SUN};
use acton_core::coupled::{
    solve_supported_field_radial, InnerBoundary, OuterBoundary, RadialSolverConfig,
};
use acton_core::galaxy::{invert_rotation_curve, RotationProblem};
use acton_core::orbits::{simulate_binary, BinaryConfig, CouplingMode};
use acton_core::HbarProfile;
use criterion::{criterion_group, criterion_main, Criterion};

fn binary(c: &mut Criterion) {
    let mut g = c.benchmark_group("binary");
    g.sample_size(20);
    for (name, ell, mode) in [
        ("newtonian", 0.0, CouplingMode::Relative),
        ("relative", 2.65e8, CouplingMode::Relative),
        ("per_body", 2.65e8, CouplingMode::PerBody),
    ] {
        let cfg = BinaryConfig::hulse_taylor_like(ell, mode);
        g.bench_function(name, |b| {
            b.iter(|| simulate_binary(black_box(&cfg)).unwrap())
        });
    }
    g.finish();
}

fn rotation(c: &mut Criterion) {
    let p = RotationProblem {
        v_flat: 1.5e5,
        m_visible: 1.3e11 * M_SUN,
        r_in: 10.0 * KPC,
        r_out: 60.0 * KPC,
        n_grid: 2001,
    };
    c.bench_function("rotation_inversion_2001", |b| {
        b.iter(|| invert_rotation_curve(black_box(&p)).unwrap())
    });
}

fn radial_field(c: &mut Criterion) {
    let profile = HbarProfile::new(HBAR * HBAR, 1.0e3, 0.5, 0.0).unwrap();
    let cfg = RadialSolverConfig {
        r_in: 1.0,
        r_out: 40.0,
        n_r: 781,
        x0_start: 0.0,
        x0_end: 10.0,
        courant: 0.5,
        snapshot_every: 1000,
        inner: InnerBoundary::Dirichlet,
        outer: OuterBoundary::Absorbing,
    };
    let pulse = |r: f64| {
        let u = (-(r - 6.0f64).powi(2) / 0.5).exp();
        (u / r, (r - 6.0) / 0.25 * u / r)
    };
    let mut g = c.benchmark_group("radial_field");
    g.sample_size(20);
    g.bench_function("pulse_781_nodes", |b| {
        b.iter(|| solve_supported_field_radial(&profile, black_box(&cfg), pulse).unwrap())
    });
    g.finish();
}

criterion_group!(benches, binary, rotation, radial_field);
criterion_main!(benches);
