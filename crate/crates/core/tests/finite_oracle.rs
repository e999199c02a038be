//! Cross-checks of the finite clamped-block eigensolver against the
//! resolvent route. The two pipelines share no numerics: one is banded
//! Sturm bisection on a 61 x 61 block, the other quadrature plus
//! determinant root isolation on the infinite lattice. Expected frequencies
//! below were frozen from an independent sparse shift-invert eigensolver
//! run on the same blocks and agree with the infinite-lattice roots to
//! about 1e-13, so the 1e-7 tolerances used here are dominated by this
//! crate's eigenvalue bisection width.

use lattice_spectra::finite::{finite_oracle, PR_LOCALIZED};
use lattice_spectra::lattice::LatticeSpec;

#[test]
fn light_strip_attractive_point_hosts_one_mode_between_spectra() {
    let spec = LatticeSpec::uniform_with_defects(-0.9, 0.1).unwrap();
    let report = finite_oracle(&spec, 61, 61).unwrap();
    assert_eq!(report.candidates.len(), 1, "expected exactly one gap mode");
    let c = &report.candidates[0];
    // Frozen: infinite-lattice root 3.9910291962255647, finite 61 x 61
    // eigenvalue 3.9910291962256 from the independent eigensolver.
    assert!((c.omega - 3.9910291962255647).abs() <= 1e-7, "omega = {}", c.omega);
    assert!(c.participation < PR_LOCALIZED);
    // Frozen participation 0.00064335 from the independent eigensolver.
    assert!((c.participation - 0.00064335).abs() <= 1e-6, "pr = {}", c.participation);
    assert!(!c.boundary_warning(), "boundary ratio {}", c.boundary_ratio);
    assert!(!c.in_tail);
}

#[test]
fn light_strip_light_point_hosts_one_tail_mode() {
    let spec = LatticeSpec::uniform_with_defects(-0.9, -0.03).unwrap();
    let report = finite_oracle(&spec, 61, 61).unwrap();
    assert_eq!(report.candidates.len(), 1);
    let c = &report.candidates[0];
    // Frozen: 8.3141001528733 (finite) vs 8.3141001528732697 (infinite).
    assert!((c.omega - 8.3141001528732697).abs() <= 1e-7, "omega = {}", c.omega);
    assert!(c.in_tail);
    assert!(!c.boundary_warning());
}

#[test]
fn heavy_strip_heavy_point_below_threshold_hosts_none() {
    let spec = LatticeSpec::uniform_with_defects(2.0, -2.0).unwrap();
    let report = finite_oracle(&spec, 61, 61).unwrap();
    assert!(
        report.candidates.is_empty(),
        "unexpected modes: {:?}",
        report.candidates.iter().map(|c| c.omega).collect::<Vec<_>>()
    );
}

#[test]
fn point_defect_without_strip_hosts_one_mode() {
    let spec = LatticeSpec::uniform_with_defects(0.0, -0.5).unwrap();
    let report = finite_oracle(&spec, 61, 61).unwrap();
    assert_eq!(report.candidates.len(), 1);
    let c = &report.candidates[0];
    // Frozen: 3.115436734156 (finite) vs 3.1154367341559561 (infinite).
    assert!((c.omega - 3.1154367341559561).abs() <= 1e-7, "omega = {}", c.omega);
    assert!(c.participation < PR_LOCALIZED);
}
