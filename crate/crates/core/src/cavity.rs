//! Round-trip assembly and the self-consistent input-output solution.
//!
//! A field leaving the output coupler towards the back mirror traverses
//! rotator, crystal, absorber and delay, reflects, and returns through
//! delay, absorber, transparent crystal and rotator. Since every element
//! is a Bogoliubov map, the full round trip acts linearly on the doubled
//! intracavity vector (â_1L, b̂_1L, â_1L†, b̂_1L†):
//!
//! (round trip) = A · (â_1L, b̂_1L, â_1L†, b̂_1L†) + (f̂_a, f̂_b, f̂_a†, f̂_b†)
//!
//! where the noise operators collect the reservoir content injected by
//! the two absorber passes. Closing the loop with the output-coupler
//! boundary relation gives one ordinary 4x4 complex linear system, whose
//! solution yields the emitted fields as expansions over the four
//! fundamental input modes.
//!
//! Both the matrix A and the noise vector also have closed forms
//! ([`closed_form_round_trip`]), derived by hand from the element
//! relations. The assembled and closed-form routes are kept independent
//! and compared entrywise in the test suite; they must agree to 1e-12.

use std::sync::{Arc, OnceLock};

use nalgebra::{DVector, Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;

use crate::bogoliubov::{commutator, BogoliubovMap, ModeBasis, OperatorExpansion};
use crate::elements::{
    absorber_relations, crystal_relations, delay_relations, left_mirror_relations,
    right_mirror_relations, rotator_relations, Direction, ElementSpec, MODE_FL, MODE_FR,
};
use crate::{Error, Result};

/// The five scalar parameters of the cavity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Crystal single-pass gain, G >= 1.
    pub g: f64,
    /// Output-coupler intensity reflectivity, 0 <= R < 1.
    pub r: f64,
    /// Absorber amplitude transmission, 0 <= t <= 1.
    pub t: f64,
    /// Rotator angle in radians.
    pub phi: f64,
    /// Propagation phase per half trip in radians.
    pub theta: f64,
}

impl CavityParams {
    /// Builds and validates a parameter set.
    pub fn new(g: f64, r: f64, t: f64, phi: f64, theta: f64) -> Result<Self> {
        let p = CavityParams { g, r, t, phi, theta };
        p.validate()?;
        Ok(p)
    }

    /// Checks every field against its physical range.
    pub fn validate(&self) -> Result<()> {
        ElementSpec::Crystal { g: self.g }.validate()?;
        ElementSpec::RightMirror { r: self.r }.validate()?;
        ElementSpec::Absorber { t: self.t }.validate()?;
        ElementSpec::Rotator { phi: self.phi }.validate()?;
        ElementSpec::Delay { theta: self.theta }.validate()?;
        Ok(())
    }
}

/// Deliberate defect for exercising the self-check suite: flipping the
/// back-mirror sign makes the assembled round trip disagree with the
/// closed form while every element stays canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InjectedFault {
    /// Faithful assembly.
    #[default]
    None,
    /// Replace the back mirror's sign flip with a plain reflection.
    LeftMirrorSignFlip,
}

/// The linear round-trip relation: matrix A on the doubled intracavity
/// vector plus the four noise expansions (f̂_a, f̂_b and their daggers)
/// over the fundamental input basis.
#[derive(Debug, Clone)]
pub struct RoundTripRelation {
    a: Matrix4<Complex64>,
    noise: [OperatorExpansion; 4],
}

impl RoundTripRelation {
    /// The 4x4 doubled round-trip matrix.
    pub fn a(&self) -> &Matrix4<Complex64> {
        &self.a
    }

    /// Noise expansions in row order (f̂_a, f̂_b, f̂_a†, f̂_b†).
    pub fn noise(&self) -> &[OperatorExpansion; 4] {
        &self.noise
    }

    /// Upper-left annihilation-to-annihilation 2x2 block.
    pub fn annihilation_block(&self) -> Matrix2<Complex64> {
        self.a.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Upper-right creation-to-annihilation 2x2 block.
    pub fn creation_block(&self) -> Matrix2<Complex64> {
        self.a.fixed_view::<2, 2>(0, 2).into_owned()
    }
}

fn assembly_basis() -> Arc<ModeBasis> {
    // Unknowns the round trip is resolved against: the two intracavity
    // fields just after the output coupler plus the reservoir inputs.
    static BASIS: OnceLock<Arc<ModeBasis>> = OnceLock::new();
    BASIS
        .get_or_init(|| ModeBasis::new(&["a_1L", "b_1L", "f_L_in", "f_R_in"]).expect("static labels"))
        .clone()
}

/// Assembles the round trip by pushing symbolic unknowns through the
/// element sequence left pass, back mirror, right pass.
pub fn build_round_trip(p: &CavityParams) -> Result<RoundTripRelation> {
    build_round_trip_faulted(p, InjectedFault::None)
}

/// [`build_round_trip`] with an optional injected defect; see
/// [`InjectedFault`].
pub fn build_round_trip_faulted(p: &CavityParams, fault: InjectedFault) -> Result<RoundTripRelation> {
    p.validate()?;
    let mirror = match fault {
        InjectedFault::None => left_mirror_relations(),
        InjectedFault::LeftMirrorSignFlip => BogoliubovMap::identity(4),
    };
    let sequence = [
        rotator_relations(p.phi, Direction::Left),
        crystal_relations(p.g, Direction::Left)?,
        absorber_relations(p.t, Direction::Left)?,
        delay_relations(p.theta),
        mirror,
        delay_relations(p.theta),
        absorber_relations(p.t, Direction::Right)?,
        crystal_relations(p.g, Direction::Right)?,
        rotator_relations(p.phi, Direction::Right),
    ];

    let basis = assembly_basis();
    let mut ops: Vec<OperatorExpansion> =
        (0..4).map(|k| OperatorExpansion::annihilator(basis.clone(), k)).collect();
    for m in &sequence {
        ops = m.apply(&ops).expect("fixed four-port working space");
    }

    // ops[0], ops[1] are the returning fields â_1R, b̂_1R resolved into
    // (â_1L, b̂_1L, f̂_L_in, f̂_R_in) and daggers. Slots 0-1 feed the
    // matrix A; the reservoir slots form the noise operators.
    let mut a = Matrix4::<Complex64>::zeros();
    for (row, op) in ops[..2].iter().enumerate() {
        a[(row, 0)] = op.u()[0];
        a[(row, 1)] = op.u()[1];
        a[(row, 2)] = op.v()[0];
        a[(row, 3)] = op.v()[1];
        // Daggered rows: conjugate with u/v blocks swapped.
        a[(row + 2, 0)] = op.v()[0].conj();
        a[(row + 2, 1)] = op.v()[1].conj();
        a[(row + 2, 2)] = op.u()[0].conj();
        a[(row + 2, 3)] = op.u()[1].conj();
    }

    let fundamental = ModeBasis::fundamental();
    let reservoir_part = |op: &OperatorExpansion| {
        let mut u = DVector::<Complex64>::zeros(4);
        let mut v = DVector::<Complex64>::zeros(4);
        for k in [MODE_FL, MODE_FR] {
            u[k] = op.u()[k];
            v[k] = op.v()[k];
        }
        OperatorExpansion::new(fundamental.clone(), u, v).expect("finite coefficients")
    };
    let f_a = reservoir_part(&ops[0]);
    let f_b = reservoir_part(&ops[1]);
    let noise = [f_a.clone(), f_b.clone(), f_a.dagger(), f_b.dagger()];

    Ok(RoundTripRelation { a, noise })
}

/// The independently derived closed form of the round trip.
///
/// With E = e^{2iθ}, γ₁ = E(t²+1)/2, γ₂ = E(t²−1)/2, S_j = γ_j sin 2φ and
/// C_ij± = γ_i cos 2φ ± γ_j, the annihilation block is
/// −G·[[C₁₂⁺, S₁], [−S₁, C₁₂⁻]] and the creation block is
/// √(G²−1)·[[S₂, −C₂₁⁺], [C₂₁⁻, S₂]]. The noise operators are
///
/// f̂_a = i√(1−t²) cos φ · (f̂_R_in − E t f̂_L_in)
/// f̂_b = −i√(1−t²) sin φ · (f̂_R_in − E t f̂_L_in)
///
/// Note the relative phase −E t on the left-pass reservoir term: the
/// left-pass noise still has to cross the delay twice and reflect, while
/// the right-pass noise is injected on the way out. Any fixed rephasing
/// of the reservoir inputs would be equally canonical and leaves every
/// commutator and vacuum moment unchanged; this form is the one the
/// element sequence produces.
pub fn closed_form_round_trip(p: &CavityParams) -> Result<RoundTripRelation> {
    p.validate()?;
    let e = Complex64::from_polar(1.0, 2.0 * p.theta);
    let g1 = e * Complex64::new((p.t * p.t + 1.0) / 2.0, 0.0);
    let g2 = e * Complex64::new((p.t * p.t - 1.0) / 2.0, 0.0);
    let (s2p, c2p) = (2.0 * p.phi).sin_cos();
    let s_1 = g1 * Complex64::new(s2p, 0.0);
    let s_2 = g2 * Complex64::new(s2p, 0.0);
    let c12p = g1 * Complex64::new(c2p, 0.0) + g2;
    let c12m = g1 * Complex64::new(c2p, 0.0) - g2;
    let c21p = g2 * Complex64::new(c2p, 0.0) + g1;
    let c21m = g2 * Complex64::new(c2p, 0.0) - g1;

    let mg = Complex64::new(-p.g, 0.0);
    let gg = Complex64::new((p.g * p.g - 1.0).sqrt(), 0.0);
    let uu = Matrix2::new(mg * c12p, mg * s_1, -mg * s_1, mg * c12m);
    let uv = Matrix2::new(gg * s_2, -gg * c21p, gg * c21m, gg * s_2);

    let mut a = Matrix4::<Complex64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = uu[(i, j)];
            a[(i, j + 2)] = uv[(i, j)];
            a[(i + 2, j)] = uv[(i, j)].conj();
            a[(i + 2, j + 2)] = uu[(i, j)].conj();
        }
    }

    let fundamental = ModeBasis::fundamental();
    let refl = Complex64::new(0.0, (1.0 - p.t * p.t).sqrt());
    let (sin_phi, cos_phi) = p.phi.sin_cos();
    let noise_row = |scale: Complex64| {
        let mut u = DVector::<Complex64>::zeros(4);
        u[MODE_FL] = -scale * e * Complex64::new(p.t, 0.0);
        u[MODE_FR] = scale;
        OperatorExpansion::new(fundamental.clone(), u, DVector::zeros(4)).expect("finite coefficients")
    };
    let f_a = noise_row(refl * Complex64::new(cos_phi, 0.0));
    let f_b = noise_row(-refl * Complex64::new(sin_phi, 0.0));
    let noise = [f_a.clone(), f_b.clone(), f_a.dagger(), f_b.dagger()];

    Ok(RoundTripRelation { a, noise })
}

/// Commutator table of the round-trip noise operators, computed from the
/// assembled expansions (not from a formula):
/// [[ [f̂_a, f̂_a†], [f̂_a, f̂_b†] ], [ [f̂_b, f̂_a†], [f̂_b, f̂_b†] ]].
///
/// The expected values are (1−t⁴)cos²φ, (1−t⁴)sin²φ on the diagonal and
/// −(1−t⁴) sin φ cos φ across: the noise operators of the two
/// polarization modes do not commute because both draw on the same
/// reservoirs through the rotator.
pub fn noise_commutators(p: &CavityParams) -> Result<Matrix2<Complex64>> {
    let rel = build_round_trip(p)?;
    let f = &rel.noise;
    Ok(Matrix2::new(
        commutator(&f[0], &f[0])?,
        commutator(&f[0], &f[1])?,
        commutator(&f[1], &f[0])?,
        commutator(&f[1], &f[1])?,
    ))
}

/// The emitted fields and solved intracavity fields, all as expansions
/// over the fundamental input basis (â_in, b̂_in, f̂_L_in, f̂_R_in).
#[derive(Debug, Clone)]
pub struct InputOutputSolution {
    out_a: OperatorExpansion,
    out_b: OperatorExpansion,
    intracavity: [OperatorExpansion; 4],
}

impl InputOutputSolution {
    /// Emitted mode â_out.
    pub fn out_a(&self) -> &OperatorExpansion {
        &self.out_a
    }

    /// Emitted mode b̂_out.
    pub fn out_b(&self) -> &OperatorExpansion {
        &self.out_b
    }

    /// Solved intracavity vector (â_1L, b̂_1L, â_1L†, b̂_1L†).
    pub fn intracavity(&self) -> &[OperatorExpansion; 4] {
        &self.intracavity
    }

    /// Coefficient table of the emitted fields: rows (â_out, b̂_out),
    /// columns the four annihilation then four creation coefficients.
    pub fn coefficient_table(&self) -> [[Complex64; 8]; 2] {
        let mut table = [[Complex64::new(0.0, 0.0); 8]; 2];
        for (row, op) in [&self.out_a, &self.out_b].into_iter().enumerate() {
            for k in 0..4 {
                table[row][k] = op.u()[k];
                table[row][k + 4] = op.v()[k];
            }
        }
        table
    }
}

/// Entrywise 1-norm (max column sum), used for the condition estimate.
fn norm1(m: &Matrix4<Complex64>) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral radius of a 4x4 complex matrix.
///
/// Primary route: complex Schur decomposition, backward stable in matrix
/// space. That matters here: with no loss and no rotation the round trip
/// decouples into two identical blocks, every eigenvalue has multiplicity
/// two, and any method that goes through characteristic-polynomial
/// coefficients loses half the significant digits exactly where the
/// threshold guard needs them. Should the QR iteration ever fail to
/// converge, the polynomial route ([`char_poly_radius`]) is still good to
/// about 1e-8 and serves as the fallback.
fn spectral_radius(m: &Matrix4<Complex64>) -> f64 {
    if let Some(schur) = nalgebra::linalg::Schur::try_new(*m, f64::EPSILON, 10_000) {
        let t = schur.unpack().1;
        return (0..4).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
    }
    char_poly_radius(m)
}

/// Largest root magnitude of the characteristic polynomial, obtained via
/// Faddeev-LeVerrier coefficients and a Durand-Kerner solve. Deterministic
/// and dependency-free, but limited to ~√ε accuracy at multiple
/// eigenvalues; used only as a fallback.
fn char_poly_radius(m: &Matrix4<Complex64>) -> f64 {
    let id = Matrix4::<Complex64>::identity();
    let mut coeffs = [Complex64::new(0.0, 0.0); 4]; // c1..c4
    let mut mk = *m;
    for k in 0..4 {
        let ck = -mk.trace() / Complex64::new((k + 1) as f64, 0.0);
        coeffs[k] = ck;
        if k < 3 {
            mk = m * (mk + id * ck);
        }
    }

    // Fujiwara bound on root magnitudes for λ⁴ + c1λ³ + c2λ² + c3λ + c4.
    let bound = 2.0
        * coeffs
            .iter()
            .enumerate()
            .map(|(k, ck)| ck.norm().powf(1.0 / (k + 1) as f64))
            .fold(0.0, f64::max);
    if bound == 0.0 {
        return 0.0;
    }

    let horner = |z: Complex64| {
        let mut acc = Complex64::new(1.0, 0.0);
        for ck in coeffs {
            acc = acc * z + ck;
        }
        acc
    };

    let mut roots: Vec<Complex64> = (0..4)
        .map(|k| Complex64::from_polar(bound, 0.7 + 2.0 * std::f64::consts::PI * k as f64 / 4.0))
        .collect();
    for _ in 0..200 {
        let mut shift = 0.0_f64;
        for i in 0..4 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    let d = roots[i] - roots[j];
                    den *= if d.norm() == 0.0 { Complex64::new(1e-12 * (1.0 + bound), 0.0) } else { d };
                }
            }
            let step = horner(roots[i]) / den;
            roots[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift <= 1e-14 * (1.0 + bound) {
            break;
        }
    }
    roots.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Closes the loop through the output coupler and solves for the
/// emitted fields.
///
/// The intracavity unknowns X = (â_1L, b̂_1L, â_1L†, b̂_1L†) satisfy
/// X = −√R (A X + F) + i√(1−R) B_in, one 4x4 complex solve over the
/// doubled coefficient columns. Two guards reject parameters at or above
/// the oscillation threshold, where no stationary sub-threshold state
/// exists:
///
/// * loop-gain spectral radius √R·ρ(A) >= 1 − 1e-10;
/// * condition number of (1 + √R A) above 1e12 (catches the exactly
///   singular resonant case).
///
/// The radius guard is required: slightly above threshold the closed-loop
/// matrix is well conditioned again, so a condition guard alone would
/// silently return the unstable formal solution.
pub fn solve_input_output(p: &CavityParams) -> Result<InputOutputSolution> {
    let rel = build_round_trip(p)?;
    let mirror = right_mirror_relations(p.r)?;
    let trans = mirror.u()[(1, 1)]; // i√(1−R), into the cavity
    let refl = mirror.u()[(1, 0)]; // −√R, back into the cavity
    let out_trans = mirror.u()[(0, 0)]; // i√(1−R), out of the cavity
    let out_refl = mirror.u()[(0, 1)]; // −√R, input reflected off

    let rho = refl.norm() * spectral_radius(rel.a());
    if rho >= 1.0 - 1e-10 {
        return Err(Error::SingularAtThreshold(format!(
            "round-trip loop gain has spectral radius {rho:.12} at G = {}, R = {}, t = {}, phi = {}, theta = {}",
            p.g, p.r, p.t, p.phi, p.theta
        )));
    }

    let lhs = Matrix4::<Complex64>::identity() - rel.a() * refl;
    let inv = lhs.try_inverse().ok_or_else(|| {
        Error::SingularAtThreshold(format!(
            "closed-loop matrix exactly singular at G = {}, R = {}, theta = {}",
            p.g, p.r, p.theta
        ))
    })?;
    let cond = norm1(&lhs) * norm1(&inv);
    if cond > 1e12 {
        return Err(Error::SingularAtThreshold(format!(
            "closed-loop matrix condition number {cond:.3e} at G = {}, R = {}, theta = {}",
            p.g, p.r, p.theta
        )));
    }

    // Right-hand side over doubled fundamental coordinates [u | v].
    let mut rhs = SMatrix::<Complex64, 4, 8>::zeros();
    for (row, op) in rel.noise().iter().enumerate() {
        for k in 0..4 {
            rhs[(row, k)] = refl * op.u()[k];
            rhs[(row, k + 4)] = refl * op.v()[k];
        }
    }
    rhs[(0, 0)] += trans;
    rhs[(1, 1)] += trans;
    rhs[(2, 4)] += trans.conj();
    rhs[(3, 5)] += trans.conj();

    let x = inv * rhs;

    // Conjugate consistency is built into the doubled system; verify it
    // instead of trusting it.
    debug_assert!({
        let mut dev = 0.0_f64;
        for k in 0..4 {
            dev = dev.max((x[(2, k)] - x[(0, k + 4)].conj()).norm());
            dev = dev.max((x[(2, k + 4)] - x[(0, k)].conj()).norm());
            dev = dev.max((x[(3, k)] - x[(1, k + 4)].conj()).norm());
            dev = dev.max((x[(3, k + 4)] - x[(1, k)].conj()).norm());
        }
        dev < 1e-9
    });

    let y = rel.a() * x; // returning fields before the coupler, minus noise
    let fundamental = ModeBasis::fundamental();
    let row_op = |row: usize, extra: &OperatorExpansion, input_slot: Option<usize>| {
        let mut u = DVector::<Complex64>::zeros(4);
        let mut v = DVector::<Complex64>::zeros(4);
        for k in 0..4 {
            u[k] = out_trans * (y[(row, k)] + extra.u()[k]);
            v[k] = out_trans * (y[(row, k + 4)] + extra.v()[k]);
        }
        if let Some(slot) = input_slot {
            u[slot] += out_refl;
        }
        OperatorExpansion::new(fundamental.clone(), u, v).expect("finite coefficients")
    };
    let out_a = row_op(0, &rel.noise()[0], Some(0));
    let out_b = row_op(1, &rel.noise()[1], Some(1));

    let x_op = |row: usize| {
        let mut u = DVector::<Complex64>::zeros(4);
        let mut v = DVector::<Complex64>::zeros(4);
        for k in 0..4 {
            u[k] = x[(row, k)];
            v[k] = x[(row, k + 4)];
        }
        OperatorExpansion::new(fundamental.clone(), u, v).expect("finite coefficients")
    };
    let intracavity = [x_op(0), x_op(1), x_op(2), x_op(3)];

    Ok(InputOutputSolution { out_a, out_b, intracavity })
}
