//! Structural agreement between the two independent round-trip routes.
//!
//! The assembled route composes element relations symbolically; the
//! closed-form route evaluates hand-derived expressions. Nothing in the
//! library feeds one into the other, so entrywise agreement here is a
//! genuine cross-check of both derivations.

use nalgebra::Matrix2;
use num_complex::Complex64;

use opa_cavity::bogoliubov::commutator;
use opa_cavity::cavity::{
    build_round_trip, build_round_trip_faulted, closed_form_round_trip, noise_commutators,
    CavityParams, InjectedFault, RoundTripRelation,
};

fn params(g: f64, r: f64, t: f64, phi: f64, theta: f64) -> CavityParams {
    CavityParams::new(g, r, t, phi, theta).unwrap()
}

fn relation_dev(x: &RoundTripRelation, y: &RoundTripRelation) -> f64 {
    let mut dev = (x.a() - y.a()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (fx, fy) in x.noise().iter().zip(y.noise()) {
        dev = (fx.u() - fy.u())
            .iter()
            .chain((fx.v() - fy.v()).iter())
            .map(|z| z.norm())
            .fold(dev, f64::max);
    }
    dev
}

#[test]
fn assembly_matches_closed_form_on_a_dense_grid() {
    let mut worst = 0.0_f64;
    let mut count = 0usize;
    for g in [1.0, 1.01, 1.2, 1.5] {
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for phi in [0.0, 0.3, std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4, 1.2, 2.8] {
                for theta in [0.0, 0.4, std::f64::consts::FRAC_PI_2, 2.9, -1.3] {
                    let p = params(g, 0.2, t, phi, theta);
                    let assembled = build_round_trip(&p).unwrap();
                    let closed = closed_form_round_trip(&p).unwrap();
                    let dev = relation_dev(&assembled, &closed);
                    assert!(dev < 1e-12, "deviation {dev} at {p:?}");
                    worst = worst.max(dev);
                    count += 1;
                }
            }
        }
    }
    assert_eq!(count, 600);
    assert!(worst < 1e-12, "worst deviation {worst}");
}

#[test]
fn lossless_unrotated_blocks() {
    // t = 1, φ = 0, θ = 0: the annihilation block is the mirror sign on
    // both modes scaled by the gain, and the creation block couples each
    // mode to the conjugate of the other with a symmetric off-diagonal
    // minus sign.
    for g in [1.01, 1.2, 1.7] {
        let rel = build_round_trip(&params(g, 0.2, 1.0, 0.0, 0.0)).unwrap();
        let s = (g * g - 1.0).sqrt();
        let uu = rel.annihilation_block();
        let uv = rel.creation_block();
        let zero = Complex64::new(0.0, 0.0);
        let dev_uu = (uu - Matrix2::new(Complex64::new(-g, 0.0), zero, zero, Complex64::new(-g, 0.0)))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let dev_uv = (uv - Matrix2::new(zero, Complex64::new(-s, 0.0), Complex64::new(-s, 0.0), zero))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev_uu < 1e-15, "G = {g}: annihilation block off by {dev_uu}");
        assert!(dev_uv < 1e-15, "G = {g}: creation block off by {dev_uv}");
    }
}

#[test]
fn cold_lossless_round_trip_is_a_signed_rotation() {
    let phi = 0.3;
    let rel = build_round_trip(&params(1.0, 0.2, 1.0, phi, 0.0)).unwrap();
    let (s, c) = (2.0 * phi).sin_cos();
    let expected = Matrix2::new(
        Complex64::new(-c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-c, 0.0),
    );
    let dev = (rel.annihilation_block() - expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(dev < 1e-15, "deviation {dev}");
    assert!(rel.creation_block().iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn noise_operators_have_no_creation_content() {
    // The absorber reservoirs enter through passive beam splitters, so
    // the assembled noise of the annihilation rows must be a pure
    // annihilation combination, exactly.
    for (t, phi, theta) in [(0.3, 0.7, 0.2), (0.0, 1.3, -0.8), (0.9, 0.1, 2.0)] {
        let rel = build_round_trip(&params(1.2, 0.2, t, phi, theta)).unwrap();
        for f in &rel.noise()[..2] {
            assert!(f.v().iter().all(|z| z.norm() == 0.0), "creation content in noise at t = {t}");
        }
    }
}

#[test]
fn round_trip_preserves_commutators_including_noise() {
    // The returning fields A·X + F must be canonical whenever X is: the
    // contraction of A is exactly compensated by the noise commutators.
    for (g, t, phi, theta) in [(1.2, 0.5, 0.4, 0.3), (1.01, 0.0, 1.1, 0.0), (1.5, 0.8, 2.2, -0.6)] {
        let p = params(g, 0.2, t, phi, theta);
        let rel = build_round_trip(&p).unwrap();
        let a = rel.a();
        let nc = noise_commutators(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                // [row_i + f_i, (row_j + f_j)†] over canonical X plus the
                // reservoir part.
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += a[(i, k)] * a[(j, k)].conj() - a[(i, k + 2)] * a[(j, k + 2)].conj();
                }
                acc += nc[(i, j)];
                let expected = if i == j { 1.0 } else { 0.0 };
                let dev = (acc - Complex64::new(expected, 0.0)).norm();
                assert!(dev < 1e-12, "({i},{j}) deviates by {dev} at {p:?}");
            }
        }
    }
}

#[test]
fn noise_commutator_closed_form() {
    for (t, phi) in [(0.5, std::f64::consts::FRAC_PI_6), (0.2, 1.1), (0.8, -0.4)] {
        let p = params(1.3, 0.4, t, phi, 0.9);
        let m = noise_commutators(&p).unwrap();
        let w = 1.0 - t.powi(4);
        let (s, c) = phi.sin_cos();
        assert!((m[(0, 0)] - Complex64::new(w * c * c, 0.0)).norm() < 1e-13);
        assert!((m[(1, 1)] - Complex64::new(w * s * s, 0.0)).norm() < 1e-13);
        assert!((m[(0, 1)] - Complex64::new(-w * s * c, 0.0)).norm() < 1e-13);
        assert!((m[(1, 0)] - Complex64::new(-w * s * c, 0.0)).norm() < 1e-13);
    }
    // Reference value: (1 − 0.5⁴)·cos²(π/6) = 15/16 · 3/4.
    let m = noise_commutators(&params(1.3, 0.4, 0.5, std::f64::consts::FRAC_PI_6, 0.9)).unwrap();
    assert!((m[(0, 0)].re - 0.703125).abs() < 1e-13);
}

#[test]
fn injected_fault_breaks_the_structural_match_only() {
    let p = params(1.2, 0.3, 0.7, 0.4, 0.25);
    let clean = build_round_trip(&p).unwrap();
    let closed = closed_form_round_trip(&p).unwrap();
    assert!(relation_dev(&clean, &closed) < 1e-12);

    let faulted = build_round_trip_faulted(&p, InjectedFault::LeftMirrorSignFlip).unwrap();
    assert!(relation_dev(&faulted, &closed) > 0.1, "fault must be visible");

    // The faulted assembly still preserves commutators: each element
    // remains canonical, so the defect is only detectable structurally.
    let f = faulted.noise();
    let caa = commutator(&f[0], &f[0]).unwrap();
    assert!(caa.im.abs() < 1e-13);
}
