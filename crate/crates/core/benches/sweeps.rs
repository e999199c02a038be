//! Sweep kernels through the library's fan-out helper against hand-rolled
//! sequential loops over the same work. Built with the default `parallel`
//! feature the left column of each group runs on rayon; rebuilt with
//! `--no-default-features` both columns degrade to plain iteration and
//! should coincide, which is the point of comparing them.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lattice_spectra::guided::averaged_resolvent_k2;
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::par;
use lattice_spectra::propagative::{branches, dispersion_table, projection_k1, ProjectionOptions};

/// 2x2 supercell with distinct masses so the four branches stay separated.
fn mixed_cell() -> LatticeSpec {
    let base = LatticeSpec::square(2, 2);
    LatticeSpec::new(
        2,
        2,
        vec![1.0, 1.3, 0.8, 1.1],
        vec![0.0; 4],
        vec![0.0; 4],
        base.links().to_vec(),
    )
    .unwrap()
}

fn dispersion_grid(c: &mut Criterion) {
    let spec = mixed_cell();
    let n = 33usize;
    let mut g = c.benchmark_group("dispersion_33x33");
    g.sample_size(10);
    g.bench_function("fan_out", |b| {
        b.iter(|| dispersion_table(black_box(&spec), n, n).unwrap());
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let mut rows = Vec::with_capacity(n * n);
            for j2 in 0..n {
                let q2 = -PI + 2.0 * PI * j2 as f64 / (n - 1) as f64;
                for j1 in 0..n {
                    let q1 = -PI + 2.0 * PI * j1 as f64 / (n - 1) as f64;
                    rows.push(branches(black_box(&spec), [q1, q2]).unwrap());
                }
            }
            rows
        });
    });
    g.finish();
}

fn band_projection_lines(c: &mut Criterion) {
    let spec = mixed_cell();
    let opts = ProjectionOptions::default();
    let lines: Vec<f64> = (0..33).map(|j| PI * j as f64 / 32.0).collect();
    let mut g = c.benchmark_group("projection_33_lines");
    g.sample_size(10);
    g.bench_function("fan_out", |b| {
        b.iter(|| par::try_map(&lines, |&k1| projection_k1(black_box(&spec), k1, &opts)).unwrap());
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            lines
                .iter()
                .map(|&k1| projection_k1(black_box(&spec), k1, &opts))
                .collect::<Result<Vec<_>, _>>()
                .unwrap()
        });
    });
    g.finish();
}

fn resolvent_row(c: &mut Criterion) {
    let spec = LatticeSpec::square(1, 1);
    let k1 = 1.0f64;
    // All above the local band top sqrt(6 - 2 cos 1) ~ 2.22.
    let omegas: Vec<f64> = (0..64).map(|j| 3.0 + 1.5 * j as f64 / 63.0).collect();
    let mut g = c.benchmark_group("resolvent_64_frequencies");
    g.sample_size(10);
    g.bench_function("fan_out", |b| {
        b.iter(|| {
            par::try_map(&omegas, |&w| averaged_resolvent_k2(black_box(&spec), w, k1, 1e-10))
                .unwrap()
        });
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            omegas
                .iter()
                .map(|&w| averaged_resolvent_k2(black_box(&spec), w, k1, 1e-10))
                .collect::<Result<Vec<_>, _>>()
                .unwrap()
        });
    });
    g.finish();
}

criterion_group!(sweeps, dispersion_grid, band_projection_lines, resolvent_row);
criterion_main!(sweeps);
