//! Mode reconstruction checked against routes that share none of its
//! machinery: a clamped transverse column eigensolve for guided shapes, the
//! characteristic root of the transverse recurrence for decay rates, and
//! the finite-block eigenvector for localized shapes.

use lattice_spectra::banded::{GenEig, SymBanded};
use lattice_spectra::error::Error;
use lattice_spectra::finite::finite_oracle;
use lattice_spectra::guided::guided_closed_form;
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::localized::LocalizedProblem;
use lattice_spectra::modes::{
    cosine_similarity, reconstruct_guided_mode, reconstruct_localized_mode,
};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Away from the strip the transverse recurrence
/// `u_{d+1} + u_{d-1} = (4 - 2 cos k1 - omega^2) u_d` has characteristic
/// roots `lambda + 1/lambda = -(omega^2 - 4 + 2 cos k1)`; the decaying one
/// gives rate `arccosh(|omega^2 - 4 + 2 cos k1| / 2)` per node step.
fn transfer_decay_rate(omega: f64, k1: f64) -> f64 {
    let a = omega * omega - 4.0 + 2.0 * k1.cos();
    (a.abs() / 2.0).acosh()
}

#[test]
fn guided_profile_matches_column_eigensolve() {
    let m1 = 2.0;
    let k1 = PI;
    let spec = LatticeSpec::uniform_with_defects(m1, 0.0).unwrap();
    let omega = guided_closed_form(m1, k1).unwrap();
    let mode = reconstruct_guided_mode(&spec, k1, omega, (2, 16)).unwrap();
    assert_eq!((mode.width, mode.height), (5, 33));
    let (cx, cy) = mode.center;

    // Transverse profile: symmetric about the strip row, strictly
    // monotone away from it.
    for d in 1..=16usize {
        let up = mode.value(cx, cy + d).norm();
        let dn = mode.value(cx, cy - d).norm();
        assert!((up - dn).abs() <= 1e-9 * up.max(1e-30), "d={d}: {up} vs {dn}");
        let closer = mode.value(cx, cy + d - 1).norm();
        assert!(up < closer, "not monotone at d={d}");
    }

    // Decay rate against the recurrence root, fitted versus exact.
    let want_rate = transfer_decay_rate(omega, k1);
    assert!(
        (mode.decay_rate_y - want_rate).abs() <= 1e-5,
        "fit {} vs recurrence {want_rate}",
        mode.decay_rate_y
    );
    assert!(mode.decay_r2_y >= 0.999);
    assert_eq!(mode.decay_rate_x, 0.0);

    // Independent route: clamped 201-node transverse column at fixed k1.
    // Same frequency and same transverse profile, no resolvent involved.
    let n = 201;
    let mut k = SymBanded::zeros(n, 1);
    let diag = 4.0 - 2.0 * k1.cos();
    for i in 0..n {
        k.add(i, i, diag);
        if i + 1 < n {
            k.add(i + 1, i, -1.0);
        }
    }
    let mut mass = vec![1.0; n];
    mass[n / 2] += m1;
    let pencil = GenEig::new(&k, &mass).unwrap();
    // Below-band window at k1 = pi: the transverse band is omega in [2, 2
    // sqrt(2)], so mu < 4 isolates the bound state.
    let mus = pencil.eigenvalues_in(1e-3, 3.999, 1e-12).unwrap();
    assert_eq!(mus.len(), 1, "expected one below-band column eigenvalue");
    let omega_col = mus[0].sqrt();
    assert!((omega_col - omega).abs() <= 1e-8, "column {omega_col} vs closed form {omega}");
    let (v, _) = pencil.eigenvector(mus[0]).unwrap();
    let col_window: Vec<Complex64> = (-(16i64)..=16)
        .map(|d| Complex64::new(v[(n as i64 / 2 + d) as usize].abs(), 0.0))
        .collect();
    let mode_column: Vec<Complex64> = (-(16i64)..=16)
        .map(|d| Complex64::new(mode.value(cx, (cy as i64 + d) as usize).norm(), 0.0))
        .collect();
    let cs = cosine_similarity(&col_window, &mode_column);
    assert!(cs >= 1.0 - 1e-9, "profile similarity {cs}");
}

#[test]
fn guided_window_is_quasiperiodic_along_strip() {
    let m1 = -0.9;
    let k1 = 2.0;
    let spec = LatticeSpec::uniform_with_defects(m1, 0.0).unwrap();
    let omega = guided_closed_form(m1, k1).unwrap();
    let mode = reconstruct_guided_mode(&spec, k1, omega, (3, 6)).unwrap();

    // Translating one period along the strip multiplies by exp(i k1).
    let bloch = Complex64::from_polar(1.0, k1);
    let mut worst: f64 = 0.0;
    for y in 0..mode.height {
        for x in 0..mode.width - 1 {
            let expect = mode.value(x, y) * bloch;
            let got = mode.value(x + 1, y);
            worst = worst.max((got - expect).norm());
        }
    }
    assert!(worst <= 1e-8, "quasiperiodicity deviation {worst}");

    let want_rate = transfer_decay_rate(omega, k1);
    assert!(
        (mode.decay_rate_y - want_rate).abs() <= 1e-4,
        "fit {} vs recurrence {want_rate}",
        mode.decay_rate_y
    );
    assert!(mode.decay_r2_y >= 0.999);
    assert!(mode.participation > 0.0 && mode.participation <= 1.0);
}

#[test]
fn guided_decay_follows_strip_strength_to_zero() {
    // Reconstruction refuses a lattice with no strip layer at all.
    let bare = LatticeSpec::square(1, 1);
    assert!(matches!(reconstruct_guided_mode(&bare, PI, 1.0, (1, 4)), Err(Error::Domain(_))));

    // As the strip weakens, the guided root hugs the band and the decay
    // rate falls toward zero, tracking the recurrence root throughout.
    let k1 = PI;
    let mut rates = Vec::new();
    for m1 in [-0.3, -0.1, -0.05] {
        let spec = LatticeSpec::uniform_with_defects(m1, 0.0).unwrap();
        let omega = guided_closed_form(m1, k1).unwrap();
        let mode = reconstruct_guided_mode(&spec, k1, omega, (1, 20)).unwrap();
        let want = transfer_decay_rate(omega, k1);
        assert!(
            (mode.decay_rate_y - want).abs() <= 1e-3,
            "m1={m1}: fit {} vs recurrence {want}",
            mode.decay_rate_y
        );
        rates.push(mode.decay_rate_y);
    }
    assert!(rates[0] > rates[1] && rates[1] > rates[2]);
    assert!(rates[2] < 0.25);
}

#[test]
fn localized_shape_matches_finite_eigenvector() {
    let spec = LatticeSpec::uniform_with_defects(-0.9, 0.1).unwrap();
    let problem = LocalizedProblem::new(spec.clone()).unwrap();
    let modes = problem.modes().unwrap();
    assert_eq!(modes.roots.len(), 1);
    let omega = modes.roots[0].omega;

    let mode = reconstruct_localized_mode(&problem, omega, (10, 10)).unwrap();
    assert_eq!((mode.width, mode.height), (21, 21));

    // Peak sits on the defect node and the field decays off it both ways.
    assert!((mode.value(mode.center.0, mode.center.1).norm() - 1.0).abs() <= 1e-12);
    assert!(mode.decay_rate_x > 0.0 && mode.decay_rate_y > 0.0);
    assert!(mode.decay_r2_x >= 0.99, "x fit {}", mode.decay_r2_x);
    assert!(mode.decay_r2_y >= 0.99, "y fit {}", mode.decay_r2_y);
    assert!(mode.conjugate_reflection_defect() <= 1e-8);

    // Finite-block eigenvector on the same 21 x 21 window.
    let report = finite_oracle(&spec, 61, 61).unwrap();
    assert_eq!(report.candidates.len(), 1);
    let window = report.candidates[0].shape.clone();
    let block = lattice_spectra::finite::FiniteLattice::from_spec(&spec, 61, 61).unwrap();
    let finite_window: Vec<Complex64> = block
        .center_window(&window, 10, 10)
        .unwrap()
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let cs = cosine_similarity(&finite_window, &mode.shape);
    assert!(cs >= 0.99, "shape similarity {cs}");
}

#[test]
fn localized_reconstruction_rejects_bad_inputs() {
    let spec = LatticeSpec::uniform_with_defects(-0.5, -0.2).unwrap();
    let problem = LocalizedProblem::new(spec).unwrap();

    // Not a root: a gap frequency where the determinant is far from zero.
    assert!(matches!(
        reconstruct_localized_mode(&problem, 5.0, (4, 4)),
        Err(Error::NotARoot { .. })
    ));

    // No point layer: nothing to localize against.
    let degenerate = problem.with_point(vec![0.0]).unwrap();
    assert!(matches!(reconstruct_localized_mode(&degenerate, 5.0, (4, 4)), Err(Error::Domain(_))));
}
