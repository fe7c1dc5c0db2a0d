//! Observables and closed-form oracles.
//!
//! Two independent routes run through this module. The primary route
//! diagonalizes the assembled cold-cavity round trip, computes the
//! Petermann excess-noise factor from biorthogonal eigenvector overlaps,
//! and solves the full network for photon numbers. The oracle route
//! evaluates hand-derived closed forms for the same quantities. Tests
//! compare the two; the library never substitutes one for the other.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::bogoliubov::vacuum_photon_number;
use crate::cavity::{build_round_trip, solve_input_output, CavityParams};
use crate::{Error, Result};

/// Cold-cavity classical round trip: the annihilation block of the
/// round-trip relation at G = 1 with the noise discarded, together with
/// its eigensystem.
///
/// The matrix is non-normal whenever both the rotator (φ ≠ 0) and the
/// absorber (t < 1) act: loss distinguishes the polarizations while the
/// rotation mixes them, so the two eigenmodes are not orthogonal.
#[derive(Debug, Clone)]
pub struct RoundTripMatrix {
    m: Matrix2<Complex64>,
    eigenvalues: [Complex64; 2],
    right: [Vector2<Complex64>; 2],
    left: [Vector2<Complex64>; 2],
}

impl RoundTripMatrix {
    /// Builds the cold-cavity matrix for the given parameters (the gain
    /// is forced to 1) and diagonalizes it.
    pub fn cold_cavity(p: &CavityParams) -> Result<Self> {
        let cold = CavityParams { g: 1.0, ..*p };
        cold.validate()?;
        let rel = build_round_trip(&cold)?;
        Ok(Self::from_matrix(rel.annihilation_block()))
    }

    /// Eigensystem of an arbitrary 2x2 complex matrix.
    ///
    /// Right eigenvectors solve M e = λ e; left eigenvectors ē solve
    /// ē† M = λ ē†, equivalently Mᵀ w = λ w with w = conj(ē). Both are
    /// normalized to unit length. For a scalar multiple of the identity
    /// the basis vectors are returned.
    pub fn from_matrix(m: Matrix2<Complex64>) -> Self {
        let mean = (m[(0, 0)] + m[(1, 1)]) * Complex64::new(0.5, 0.0);
        let d = (m[(0, 0)] - m[(1, 1)]) * Complex64::new(0.5, 0.0);
        let disc = (d * d + m[(0, 1)] * m[(1, 0)]).sqrt();
        let eigenvalues = [mean + disc, mean - disc];

        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scalar_like = scale == 0.0
            || (m[(0, 1)].norm() <= 1e-14 * scale
                && m[(1, 0)].norm() <= 1e-14 * scale
                && d.norm() <= 1e-14 * scale);

        let unit = |v: Vector2<Complex64>| {
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            v / Complex64::new(n, 0.0)
        };
        // Candidate rows of (M − λ): the eigenvector is orthogonal to
        // both; the larger candidate is the numerically safe one.
        let eigvec = |mm: &Matrix2<Complex64>, lam: Complex64| -> Vector2<Complex64> {
            let c1 = Vector2::new(mm[(0, 1)], lam - mm[(0, 0)]);
            let c2 = Vector2::new(lam - mm[(1, 1)], mm[(1, 0)]);
            let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
            let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
            unit(if n1 >= n2 { c1 } else { c2 })
        };

        let (right, left) = if scalar_like {
            let e1 = Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
            let e2 = Vector2::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
            ([e1, e2], [e1, e2])
        } else {
            let mt = m.transpose();
            let right = [eigvec(&m, eigenvalues[0]), eigvec(&m, eigenvalues[1])];
            let left = [
                eigvec(&mt, eigenvalues[0]).map(|z| z.conj()),
                eigvec(&mt, eigenvalues[1]).map(|z| z.conj()),
            ];
            (right, left)
        };

        RoundTripMatrix { m, eigenvalues, right, left }
    }

    /// The matrix itself.
    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.m
    }

    /// Both eigenvalues, in the fixed branch order of the solver.
    pub fn eigenvalues(&self) -> &[Complex64; 2] {
        &self.eigenvalues
    }

    /// Unit right eigenvectors.
    pub fn right_eigenvectors(&self) -> &[Vector2<Complex64>; 2] {
        &self.right
    }

    /// Unit left (adjoint) eigenvectors ē_n with ē_n† M = λ_n ē_n†.
    pub fn left_eigenvectors(&self) -> &[Vector2<Complex64>; 2] {
        &self.left
    }

    fn overlap(&self, n: usize) -> f64 {
        let e = &self.right[n];
        let l = &self.left[n];
        (l[0].conj() * e[0] + l[1].conj() * e[1]).norm_sqr()
    }
}

/// Excess-noise factor: a finite value or a divergence at the
/// eigenmode-coalescence point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KFactor {
    /// Finite factor, always >= 1.
    Finite(f64),
    /// Eigenmodes numerically parallel; the overlap underflows the
    /// divergence guard.
    Divergent,
}

impl KFactor {
    /// The finite value, if any.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            KFactor::Finite(k) => Some(k),
            KFactor::Divergent => None,
        }
    }

    /// Whether the factor exceeded the divergence guard.
    pub fn is_divergent(&self) -> bool {
        matches!(self, KFactor::Divergent)
    }
}

/// Position of the working point relative to the critical transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// t < t_c: the rotation dominates the loss anisotropy and the
    /// eigenmode pair locks onto circular polarizations.
    Locked,
    /// t > t_c: the loss anisotropy dominates.
    Unlocked,
    /// |t − t_c| <= 1e-3: inside the numerical band around the
    /// coalescence point.
    Critical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Locked => "Locked",
            Regime::Unlocked => "Unlocked",
            Regime::Critical => "Critical",
        })
    }
}

/// Result of a K-factor evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFactorResult {
    /// The excess-noise factor shared by both eigenmodes.
    pub k: KFactor,
    /// Regime classification at the working point.
    pub regime: Regime,
    /// Critical transmission t_c(φ) used for classification.
    pub t_c: f64,
}

/// Half-width of the regime band flagged [`Regime::Critical`].
pub const CRITICAL_BAND: f64 = 1e-3;

/// Relative overlap below which the eigenmodes count as parallel and the
/// factor as divergent.
pub const DIVERGENCE_GUARD: f64 = 1e-12;

/// Petermann excess-noise factor of the cold cavity,
/// K_n = (e_n† e_n)(ē_n† ē_n) / |ē_n† e_n|², from the biorthogonal
/// eigensystem of [`RoundTripMatrix`].
///
/// Both eigenmodes of a 2x2 matrix carry the same factor; the two values
/// are computed independently and must agree to 1e-9 relative, otherwise
/// [`Error::KFactorMismatch`] is raised. The gain plays no role here:
/// only t and φ enter, and the propagation phase drops out as an overall
/// scalar.
pub fn k_factor(p: &CavityParams) -> Result<KFactorResult> {
    let t_c = critical_transmission(p.phi);
    let regime = if (p.t - t_c).abs() <= CRITICAL_BAND {
        Regime::Critical
    } else if p.t < t_c {
        Regime::Locked
    } else {
        Regime::Unlocked
    };

    let rtm = RoundTripMatrix::cold_cavity(p)?;
    // Unit-normalized eigenvectors turn the overlap formula into
    // K_n = 1 / |ē_n† e_n|².
    let overlaps = [rtm.overlap(0), rtm.overlap(1)];
    if overlaps.iter().any(|&o| o < DIVERGENCE_GUARD) {
        return Ok(KFactorResult { k: KFactor::Divergent, regime, t_c });
    }
    let k1 = 1.0 / overlaps[0];
    let k2 = 1.0 / overlaps[1];
    if (k1 - k2).abs() > 1e-9 * k1.max(k2) {
        return Err(Error::KFactorMismatch { k1, k2 });
    }
    let k = (0.5 * (k1 + k2)).max(1.0);
    Ok(KFactorResult { k: KFactor::Finite(k), regime, t_c })
}

/// Closed form of K in the locked regime (t < t_c),
/// K = (1−t²)² / [(1−t²)² − (1+t²)² sin²2φ].
pub fn locked_k_closed_form(t: f64, phi: f64) -> f64 {
    let q = (1.0 - t * t).powi(2);
    let w = ((1.0 + t * t) * (2.0 * phi).sin()).powi(2);
    q / (q - w)
}

/// Closed form of K in the unlocked regime (t > t_c),
/// K = (1+t²)² sin²2φ / [(1+t²)² sin²2φ − (1−t²)²].
pub fn unlocked_k_closed_form(t: f64, phi: f64) -> f64 {
    let q = (1.0 - t * t).powi(2);
    let w = ((1.0 + t * t) * (2.0 * phi).sin()).powi(2);
    w / (w - q)
}

/// Critical absorber transmission t_c(φ) = √((1−|sin 2φ|)/(1+|sin 2φ|)),
/// the eigenmode-coalescence point of the cold cavity.
pub fn critical_transmission(phi: f64) -> f64 {
    let s = (2.0 * phi).sin().abs();
    ((1.0 - s) / (1.0 + s)).sqrt()
}

/// Oscillation threshold gain G_thr = (1+R)/(2√R) for 0 < R < 1.
pub fn threshold_gain(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::ParamOutOfRange(format!(
            "threshold gain needs 0 < R < 1, got R = {r}"
        )));
    }
    Ok((1.0 + r) / (2.0 * r.sqrt()))
}

/// Closed-form photon number per emitted mode for orthogonal eigenmodes
/// (t = 1, φ = 0):
///
/// n̄ = (G²−1) · [(1−R) / (1−2G√R cos 2θ + R)]²
///
/// Errors with [`Error::DivergentAtThreshold`] when the resonant
/// denominator vanishes (|den| <= 1e-12).
pub fn orthogonal_mode_closed_form(g: f64, r: f64, theta: f64) -> Result<f64> {
    if !(g.is_finite() && g >= 1.0) {
        return Err(Error::ParamOutOfRange(format!("gain G = {g}, need G >= 1")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::ParamOutOfRange(format!("reflectivity R = {r}, need 0 <= R < 1")));
    }
    let den = 1.0 - 2.0 * g * r.sqrt() * (2.0 * theta).cos() + r;
    if den.abs() <= 1e-12 {
        return Err(Error::DivergentAtThreshold(format!(
            "resonant denominator {den:.3e} at G = {g}, R = {r}, theta = {theta}"
        )));
    }
    Ok((g * g - 1.0) * ((1.0 - r) / den).powi(2))
}

/// The G → 1 bracket of [`orthogonal_mode_closed_form`]: the cavity
/// enhancement factor (1−R)/(1−2√R cos 2θ + R) of a dipole between the
/// mirrors. Exposed as a diagnostic only.
pub fn spontaneous_emission_factor(r: f64, theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::ParamOutOfRange(format!("reflectivity R = {r}, need 0 <= R < 1")));
    }
    Ok((1.0 - r) / (1.0 - 2.0 * r.sqrt() * (2.0 * theta).cos() + r))
}

/// Emitted photon numbers (n̄_a, n̄_b, N̄ = n̄_a + n̄_b) from the full
/// input-output solution with all inputs in vacuum.
pub fn photon_numbers(p: &CavityParams) -> Result<(f64, f64, f64)> {
    let sol = solve_input_output(p)?;
    let n_a = vacuum_photon_number(sol.out_a());
    let n_b = vacuum_photon_number(sol.out_b());
    Ok((n_a, n_b, n_a + n_b))
}

/// Twin-beam cross moment ⟨â_out† b̂_out⟩ of the emitted fields.
pub fn cross_moment(p: &CavityParams) -> Result<Complex64> {
    let sol = solve_input_output(p)?;
    crate::bogoliubov::vacuum_cross_moment(sol.out_a(), sol.out_b())
}
