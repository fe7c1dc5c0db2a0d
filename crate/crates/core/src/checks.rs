//! Runtime self-check suite.
//!
//! The same cross-validations the test suite performs, packaged so a
//! deployed binary can rerun them on demand: element canonicality,
//! operator algebra identities, the assembled round trip against its
//! hand-derived closed form, commutator preservation through the full
//! input-output solve, and the numeric observables against their
//! closed-form oracles. All random sampling is seeded, so a report is
//! reproducible from its seed alone.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    critical_transmission, cross_moment, k_factor, locked_k_closed_form,
    orthogonal_mode_closed_form, photon_numbers, threshold_gain, unlocked_k_closed_form, Regime,
    CRITICAL_BAND,
};
use crate::bogoliubov::{commutator, BogoliubovMap, ModeBasis, OperatorExpansion};
use crate::cavity::{
    build_round_trip_faulted, closed_form_round_trip, noise_commutators, solve_input_output,
    CavityParams, InjectedFault, RoundTripRelation,
};
use crate::elements::{
    absorber_relations, crystal_relations, delay_relations, left_mirror_relations,
    right_mirror_relations, rotator_relations, Direction,
};
use crate::Error;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    /// What was checked.
    pub name: &'static str,
    /// Largest deviation allowed to pass.
    pub tolerance: f64,
    /// Largest deviation observed.
    pub max_deviation: f64,
    /// Whether `max_deviation <= tolerance`.
    pub passed: bool,
}

fn outcome(name: &'static str, tolerance: f64, max_deviation: f64) -> CheckOutcome {
    // A NaN deviation must fail, so compare through the negation.
    let passed = max_deviation <= tolerance;
    CheckOutcome { name, tolerance, max_deviation, passed }
}

/// Outcomes of a full suite run.
#[derive(Debug, Clone)]
pub struct CheckReport {
    /// Seed the sampling was derived from.
    pub seed: u64,
    /// One entry per check, in execution order.
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

fn draw_params(rng: &mut ChaCha8Rng) -> CavityParams {
    CavityParams {
        g: rng.random_range(1.0..1.6),
        r: rng.random_range(0.0..0.95),
        t: rng.random_range(0.0..=1.0),
        phi: rng.random_range(-3.2..3.2),
        theta: rng.random_range(-3.2..3.2),
    }
}

/// Draws parameters with the gain capped safely below the oscillation
/// threshold of the resonant configuration, which bounds it for every
/// detuning and loss setting.
fn draw_subthreshold(rng: &mut ChaCha8Rng) -> CavityParams {
    let r = rng.random_range(0.05..0.9);
    let g_thr = threshold_gain(r).expect("r in range");
    CavityParams {
        g: 1.0 + 0.85 * rng.random_range(0.0..1.0) * (g_thr - 1.0),
        r,
        t: rng.random_range(0.0..=1.0),
        phi: rng.random_range(-3.2..3.2),
        theta: rng.random_range(-3.2..3.2),
    }
}

fn map_dev(x: &BogoliubovMap, y: &BogoliubovMap) -> f64 {
    (x.u() - y.u())
        .iter()
        .chain((x.v() - y.v()).iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max)
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

fn rel_dev(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

fn element_canonicality(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    for _ in 0..60 {
        let p = draw_params(rng);
        let maps = [
            right_mirror_relations(p.r).expect("valid draw"),
            rotator_relations(p.phi, Direction::Left),
            rotator_relations(p.phi, Direction::Right),
            crystal_relations(p.g, Direction::Left).expect("valid draw"),
            crystal_relations(p.g, Direction::Right).expect("valid draw"),
            absorber_relations(p.t, Direction::Left).expect("valid draw"),
            absorber_relations(p.t, Direction::Right).expect("valid draw"),
            delay_relations(p.theta),
            left_mirror_relations(),
        ];
        for m in &maps {
            dev = dev.max(m.canonicality_deviation());
        }
    }
    outcome("element canonicality", 1e-12, dev)
}

fn expansion_algebra(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let basis = ModeBasis::fundamental();
    let mut dev: f64 = 0.0;
    let random_coeffs = |rng: &mut ChaCha8Rng| {
        DVector::from_iterator(
            4,
            (0..4).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        )
    };
    for _ in 0..50 {
        // Conjugation must be an exact involution on raw coefficients.
        let o = OperatorExpansion::new(basis.clone(), random_coeffs(rng), random_coeffs(rng))
            .expect("finite draws");
        let back = o.dagger().dagger();
        dev = (o.u() - back.u())
            .iter()
            .chain((o.v() - back.v()).iter())
            .map(|z| z.norm())
            .fold(dev, f64::max);

        // Composition of element maps must associate.
        let p = draw_params(rng);
        let m1 = rotator_relations(p.phi, Direction::Left);
        let m2 = crystal_relations(p.g, Direction::Left).expect("valid draw");
        let m3 = absorber_relations(p.t, Direction::Left).expect("valid draw");
        let lhs = BogoliubovMap::compose(&BogoliubovMap::compose(&m3, &m2).expect("4 ports"), &m1)
            .expect("4 ports");
        let rhs = BogoliubovMap::compose(&m3, &BogoliubovMap::compose(&m2, &m1).expect("4 ports"))
            .expect("4 ports");
        dev = dev.max(map_dev(&lhs, &rhs));

        // A canonical map applied to canonical modes preserves the
        // commutator table.
        let chain = BogoliubovMap::compose(
            &delay_relations(p.theta),
            &BogoliubovMap::compose(&lhs, &right_mirror_relations(p.r).expect("valid draw"))
                .expect("4 ports"),
        )
        .expect("4 ports");
        let modes: Vec<_> =
            (0..4).map(|k| OperatorExpansion::annihilator(basis.clone(), k)).collect();
        let out = chain.apply(&modes).expect("shared basis");
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                let c = commutator(&out[i], &out[j]).expect("shared basis");
                dev = dev.max((c - Complex64::new(expect, 0.0)).norm());
            }
        }
    }
    outcome("expansion algebra", 1e-12, dev)
}

fn assembly_vs_closed_form(rng: &mut ChaCha8Rng, fault: InjectedFault) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    for _ in 0..150 {
        let p = draw_params(rng);
        let assembled = build_round_trip_faulted(&p, fault).expect("valid draw");
        let closed = closed_form_round_trip(&p).expect("valid draw");
        dev = dev.max(relation_dev(&assembled, &closed));
    }
    outcome("assembly vs closed form", 1e-12, dev)
}

fn noise_commutator_table(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let p = draw_params(rng);
        let m = noise_commutators(&p).expect("valid draw");
        let w = 1.0 - p.t.powi(4);
        let (s, c) = p.phi.sin_cos();
        let expected = [[w * c * c, -w * s * c], [-w * s * c, w * s * s]];
        for i in 0..2 {
            for j in 0..2 {
                dev = dev.max((m[(i, j)] - Complex64::new(expected[i][j], 0.0)).norm());
            }
        }
    }
    outcome("noise commutators", 1e-12, dev)
}

fn emitted_field_commutators(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 1000 && attempts < 5000 {
        attempts += 1;
        let p = draw_subthreshold(rng);
        let sol = match solve_input_output(&p) {
            Ok(sol) => sol,
            Err(Error::SingularAtThreshold(_)) => continue,
            Err(e) => panic!("unexpected solver error: {e}"),
        };
        accepted += 1;
        let one = Complex64::new(1.0, 0.0);
        let caa = commutator(sol.out_a(), sol.out_a()).expect("shared basis");
        let cbb = commutator(sol.out_b(), sol.out_b()).expect("shared basis");
        let cab = commutator(sol.out_a(), sol.out_b()).expect("shared basis");
        dev = dev.max((caa - one).norm()).max((cbb - one).norm()).max(cab.norm());
    }
    assert!(accepted == 1000, "sub-threshold sampler starved: {accepted} of 1000");
    outcome("emitted-field commutators", 1e-10, dev)
}

fn orthogonal_mode_photon_number(_rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    for r in [0.1, 0.2, 0.5, 0.8] {
        let g_thr = threshold_gain(r).expect("r in range");
        for k in 0..20 {
            let frac = 0.05 + 0.80 * k as f64 / 19.0;
            let g = 1.0 + frac * (g_thr - 1.0);
            for j in 0..8 {
                let theta = PI * j as f64 / 8.0;
                let p = CavityParams { g, r, t: 1.0, phi: 0.0, theta };
                let (n_a, n_b, _) = photon_numbers(&p).expect("sub-threshold grid");
                let reference = orthogonal_mode_closed_form(g, r, theta).expect("off resonance");
                dev = dev.max(rel_dev(n_a, reference)).max(rel_dev(n_b, reference));
            }
        }
    }
    outcome("orthogonal-mode photon number", 1e-10, dev)
}

fn excess_noise_closed_form(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut dev: f64 = 0.0;
    for _ in 0..10_000 {
        let (t, phi, t_c) = loop {
            let t = rng.random_range(0.0..=1.0);
            let phi = rng.random_range(0.0..FRAC_PI_2);
            let t_c = critical_transmission(phi);
            if (t - t_c).abs() > 2.0 * CRITICAL_BAND {
                break (t, phi, t_c);
            }
        };
        let p = CavityParams {
            g: rng.random_range(1.0..1.6),
            r: rng.random_range(0.0..0.95),
            t,
            phi,
            theta: rng.random_range(-3.2..3.2),
        };
        let res = k_factor(&p).expect("away from coalescence");
        let k = res.k.as_f64().expect("finite away from coalescence");
        let reference = if t < t_c {
            assert_eq!(res.regime, Regime::Locked);
            locked_k_closed_form(t, phi)
        } else {
            assert_eq!(res.regime, Regime::Unlocked);
            unlocked_k_closed_form(t, phi)
        };
        dev = dev.max(rel_dev(k, reference));
    }

    // Loci where the eigenmodes stay orthogonal: no rotation, or no loss.
    for k in 0..10 {
        let t = 0.095 * k as f64;
        let p = CavityParams { g: 1.2, r: 0.3, t, phi: 0.0, theta: 0.4 };
        let res = k_factor(&p).expect("valid");
        dev = dev.max(rel_dev(res.k.as_f64().expect("finite on the locus"), 1.0));
    }
    for k in 0..10 {
        let phi = 0.1 + (1.47 - 0.1) * k as f64 / 9.0;
        let p = CavityParams { g: 1.2, r: 0.3, t: 1.0, phi, theta: 0.4 };
        let res = k_factor(&p).expect("valid");
        dev = dev.max(rel_dev(res.k.as_f64().expect("finite on the locus"), 1.0));
    }
    outcome("excess-noise factor closed form", 1e-8, dev)
}

fn delay_periodicity(rng: &mut ChaCha8Rng) -> CheckOutcome {
    // Both half trips add the same phase, so observables depend on the
    // delay only through e^{2iθ} and are π-periodic in θ.
    let mut dev: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 100 && attempts < 1000 {
        attempts += 1;
        let p = draw_subthreshold(rng);
        let shifted = CavityParams { theta: p.theta + PI, ..p };
        let pair = (photon_numbers(&p), photon_numbers(&shifted));
        let (Ok((na, nb, _)), Ok((na2, nb2, _))) = pair else { continue };
        accepted += 1;
        dev = dev.max((na - na2).abs()).max((nb - nb2).abs());
        let c1 = cross_moment(&p).expect("solved above");
        let c2 = cross_moment(&shifted).expect("solved above");
        dev = dev.max((c1 - c2).norm());
    }
    assert!(accepted == 100, "sub-threshold sampler starved: {accepted} of 100");
    outcome("delay periodicity", 1e-12, dev)
}

fn lossless_mode_symmetry(_rng: &mut ChaCha8Rng) -> CheckOutcome {
    // With no absorber and no rotation the two polarizations see
    // identical optics, so their emitted photon numbers must coincide.
    let mut dev: f64 = 0.0;
    for r in [0.1, 0.3, 0.6] {
        let g_thr = threshold_gain(r).expect("r in range");
        let g = 1.0 + 0.5 * (g_thr - 1.0);
        for theta in [0.0, 0.7, 2.5] {
            let p = CavityParams { g, r, t: 1.0, phi: 0.0, theta };
            let (n_a, n_b, _) = photon_numbers(&p).expect("sub-threshold");
            dev = dev.max((n_a - n_b).abs() / n_a.max(1.0));
        }
    }
    outcome("lossless mode symmetry", 1e-12, dev)
}

/// Runs the full suite with sampling derived from `seed`. The optional
/// fault is injected into the assembled round trip only, which the
/// assembly-vs-closed-form comparison must then catch.
pub fn run_all(seed: u64, fault: InjectedFault) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes = vec![
        element_canonicality(&mut rng),
        expansion_algebra(&mut rng),
        assembly_vs_closed_form(&mut rng, fault),
        noise_commutator_table(&mut rng),
        emitted_field_commutators(&mut rng),
        orthogonal_mode_photon_number(&mut rng),
        excess_noise_closed_form(&mut rng),
        delay_periodicity(&mut rng),
        lossless_mode_symmetry(&mut rng),
    ];
    CheckReport { seed, outcomes }
}
