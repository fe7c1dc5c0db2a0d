//! Exact linear algebra of bosonic operator expansions.
//!
//! Every operator handled by this crate is a linear combination
//!
//! ô = Σ_k u_k m̂_k + Σ_k v_k m̂_k†
//!
//! over a fixed, ordered basis of fundamental input modes m̂_k. Keeping
//! the expansion coefficients explicit turns commutators and vacuum
//! moments into plain coefficient arithmetic, and optical elements into
//! matrix pairs (U, V) acting on expansions.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Labels of the four fundamental input modes of the cavity model, in
/// basis order: the two polarization inputs at the output mirror and the
/// two absorber reservoir inputs (one per pass direction).
pub const INPUT_MODES: [&str; 4] = ["a_in", "b_in", "f_L_in", "f_R_in"];

/// An ordered, immutable set of fundamental mode labels.
///
/// Expansions and maps over the same basis may be combined; everything
/// else is a [`Error::BasisMismatch`]. Bases are shared behind [`Arc`] so
/// the comparison is usually a pointer check.
#[derive(Debug, PartialEq, Eq)]
pub struct ModeBasis {
    labels: Vec<String>,
}

impl ModeBasis {
    /// Builds a basis from unique, non-empty labels.
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Arc<Self>> {
        if labels.is_empty() {
            return Err(Error::DimensionMismatch("basis needs at least one mode".into()));
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_owned()).collect();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::ParamOutOfRange("empty mode label".into()));
            }
            if labels[..i].contains(l) {
                return Err(Error::ParamOutOfRange(format!("duplicate mode label {l:?}")));
            }
        }
        Ok(Arc::new(ModeBasis { labels }))
    }

    /// The shared four-mode input basis [`INPUT_MODES`].
    pub fn fundamental() -> Arc<Self> {
        static FUNDAMENTAL: OnceLock<Arc<ModeBasis>> = OnceLock::new();
        FUNDAMENTAL
            .get_or_init(|| ModeBasis::new(&INPUT_MODES).expect("static labels are valid"))
            .clone()
    }

    /// Number of modes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// True only for a zero-mode basis, which cannot be constructed.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Position of a label, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Label at a position.
    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }
}

fn same_basis(x: &Arc<ModeBasis>, y: &Arc<ModeBasis>) -> bool {
    Arc::ptr_eq(x, y) || x.labels == y.labels
}

fn all_finite(v: &DVector<Complex64>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A bosonic operator resolved into the basis modes:
/// ô = Σ_k u_k m̂_k + Σ_k v_k m̂_k†.
#[derive(Debug, Clone)]
pub struct OperatorExpansion {
    basis: Arc<ModeBasis>,
    u: DVector<Complex64>,
    v: DVector<Complex64>,
}

impl OperatorExpansion {
    /// Builds an expansion; coefficient vectors must match the basis size
    /// and contain only finite entries.
    pub fn new(basis: Arc<ModeBasis>, u: DVector<Complex64>, v: DVector<Complex64>) -> Result<Self> {
        if u.len() != basis.len() || v.len() != basis.len() {
            return Err(Error::DimensionMismatch(format!(
                "expansion needs {} coefficients per block, got u: {}, v: {}",
                basis.len(),
                u.len(),
                v.len()
            )));
        }
        if !all_finite(&u) || !all_finite(&v) {
            return Err(Error::ParamOutOfRange("non-finite expansion coefficient".into()));
        }
        Ok(OperatorExpansion { basis, u, v })
    }

    /// The pure annihilation operator m̂_k.
    pub fn annihilator(basis: Arc<ModeBasis>, k: usize) -> Self {
        let n = basis.len();
        assert!(k < n, "mode index {k} out of range for basis of size {n}");
        let mut u = DVector::zeros(n);
        u[k] = Complex64::new(1.0, 0.0);
        OperatorExpansion { basis, u, v: DVector::zeros(n) }
    }

    /// The zero operator.
    pub fn zero(basis: Arc<ModeBasis>) -> Self {
        let n = basis.len();
        OperatorExpansion { basis, u: DVector::zeros(n), v: DVector::zeros(n) }
    }

    /// Hermitian conjugate: swaps and conjugates the coefficient blocks,
    /// since (Σ u_k m̂_k + Σ v_k m̂_k†)† = Σ v̄_k m̂_k + Σ ū_k m̂_k†.
    /// An exact involution.
    pub fn dagger(&self) -> Self {
        OperatorExpansion {
            basis: self.basis.clone(),
            u: self.v.map(|z| z.conj()),
            v: self.u.map(|z| z.conj()),
        }
    }

    /// Underlying basis.
    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    /// Annihilation coefficients.
    pub fn u(&self) -> &DVector<Complex64> {
        &self.u
    }

    /// Creation coefficients.
    pub fn v(&self) -> &DVector<Complex64> {
        &self.v
    }
}

/// Commutator with the conjugate, [ô1, ô2†] = Σ_k (u1_k ū2_k − v1_k v̄2_k).
///
/// Canonical modes give 1 on the diagonal and 0 across; operators with
/// creation content can return anything, which is exactly how the
/// absorber noise acquires its nontrivial correlations.
pub fn commutator(o1: &OperatorExpansion, o2: &OperatorExpansion) -> Result<Complex64> {
    if !same_basis(&o1.basis, &o2.basis) {
        return Err(Error::BasisMismatch("commutator of expansions over different bases".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..o1.u.len() {
        acc += o1.u[k] * o2.u[k].conj() - o1.v[k] * o2.v[k].conj();
    }
    Ok(acc)
}

/// Vacuum photon number ⟨ô† ô⟩ = Σ_k |v_k|². Annihilation content is
/// invisible on the vacuum; only creation coefficients count.
pub fn vacuum_photon_number(o: &OperatorExpansion) -> f64 {
    o.v.iter().map(|z| z.norm_sqr()).sum()
}

/// Vacuum cross moment ⟨ô1† ô2⟩ = Σ_k v̄1_k v2_k, the correlation behind
/// twin-photon coincidence rates. Diagonal case equals
/// [`vacuum_photon_number`].
pub fn vacuum_cross_moment(o1: &OperatorExpansion, o2: &OperatorExpansion) -> Result<Complex64> {
    if !same_basis(&o1.basis, &o2.basis) {
        return Err(Error::BasisMismatch("cross moment of expansions over different bases".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..o1.v.len() {
        acc += o1.v[k].conj() * o2.v[k];
    }
    Ok(acc)
}

/// A linear mode transformation out_i = Σ_j U_ij in_j + V_ij in_j†.
///
/// Lossless passive elements have V = 0 and unitary U; the parametric
/// crystal has V ≠ 0. A map is canonical (commutator preserving) iff
/// U U† − V V† = 1 and U Vᵀ = V Uᵀ.
#[derive(Debug, Clone)]
pub struct BogoliubovMap {
    u: DMatrix<Complex64>,
    v: DMatrix<Complex64>,
}

impl BogoliubovMap {
    /// Builds a map from square coefficient matrices of equal size.
    pub fn new(u: DMatrix<Complex64>, v: DMatrix<Complex64>) -> Result<Self> {
        if u.nrows() != u.ncols() || u.shape() != v.shape() {
            return Err(Error::DimensionMismatch(format!(
                "map blocks must be square and equal, got U: {:?}, V: {:?}",
                u.shape(),
                v.shape()
            )));
        }
        let finite = |m: &DMatrix<Complex64>| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&u) || !finite(&v) {
            return Err(Error::ParamOutOfRange("non-finite map coefficient".into()));
        }
        Ok(BogoliubovMap { u, v })
    }

    /// The identity on n ports.
    pub fn identity(n: usize) -> Self {
        BogoliubovMap { u: DMatrix::identity(n, n), v: DMatrix::zeros(n, n) }
    }

    /// Number of ports (modes) the map acts on.
    pub fn port_count(&self) -> usize {
        self.u.nrows()
    }

    /// Annihilation-to-annihilation block U.
    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    /// Creation-to-annihilation block V.
    pub fn v(&self) -> &DMatrix<Complex64> {
        &self.v
    }

    /// Largest entrywise violation of the two canonicality conditions
    /// U U† − V V† = 1 and U Vᵀ − V Uᵀ = 0.
    pub fn canonicality_deviation(&self) -> f64 {
        let n = self.port_count();
        let uh = self.u.adjoint();
        let vh = self.v.adjoint();
        let d1 = &self.u * uh - &self.v * vh - DMatrix::<Complex64>::identity(n, n);
        let d2 = &self.u * self.v.transpose() - &self.v * self.u.transpose();
        let m1 = d1.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let m2 = d2.iter().map(|z| z.norm()).fold(0.0, f64::max);
        m1.max(m2)
    }

    /// Whether the map preserves bosonic commutators within an entrywise
    /// tolerance.
    pub fn is_canonical(&self, tol: f64) -> bool {
        self.canonicality_deviation() <= tol
    }

    /// Applies the map to one expansion per port. Expansions must share a
    /// basis; dagger terms contribute through V.
    pub fn apply(&self, ops: &[OperatorExpansion]) -> Result<Vec<OperatorExpansion>> {
        let n = self.port_count();
        if ops.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "map has {n} ports but {} operands were given",
                ops.len()
            )));
        }
        let basis = ops[0].basis.clone();
        if !ops.iter().all(|o| same_basis(&o.basis, &basis)) {
            return Err(Error::BasisMismatch("apply over mixed bases".into()));
        }
        let nb = basis.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut u = DVector::<Complex64>::zeros(nb);
            let mut v = DVector::<Complex64>::zeros(nb);
            for j in 0..n {
                let (cu, cv) = (self.u[(i, j)], self.v[(i, j)]);
                // U_ij · ô_j contributes (u_j, v_j); V_ij · ô_j† contributes (v̄_j, ū_j).
                for k in 0..nb {
                    u[k] += cu * ops[j].u[k] + cv * ops[j].v[k].conj();
                    v[k] += cu * ops[j].v[k] + cv * ops[j].u[k].conj();
                }
            }
            out.push(OperatorExpansion { basis: basis.clone(), u, v });
        }
        Ok(out)
    }

    /// Composition applying `m1` first, then `m2`:
    /// U = U2 U1 + V2 V̄1 and V = U2 V1 + V2 Ū1.
    pub fn compose(m2: &BogoliubovMap, m1: &BogoliubovMap) -> Result<BogoliubovMap> {
        if m2.port_count() != m1.port_count() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose maps on {} and {} ports",
                m2.port_count(),
                m1.port_count()
            )));
        }
        let u = &m2.u * &m1.u + &m2.v * m1.v.map(|z| z.conj());
        let v = &m2.u * &m1.v + &m2.v * m1.u.map(|z| z.conj());
        Ok(BogoliubovMap { u, v })
    }

    /// Inverse map, obtained by inverting the doubled-space matrix
    /// [[U, V], [V̄, Ū]]. `None` if the map is singular.
    pub fn inverse(&self) -> Option<BogoliubovMap> {
        let n = self.port_count();
        let mut d = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        d.view_mut((0, 0), (n, n)).copy_from(&self.u);
        d.view_mut((0, n), (n, n)).copy_from(&self.v);
        d.view_mut((n, 0), (n, n)).copy_from(&self.v.map(|z| z.conj()));
        d.view_mut((n, n), (n, n)).copy_from(&self.u.map(|z| z.conj()));
        let inv = d.try_inverse()?;
        Some(BogoliubovMap {
            u: inv.view((0, 0), (n, n)).into_owned(),
            v: inv.view((0, n), (n, n)).into_owned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expansion(u: [Complex64; 4], v: [Complex64; 4]) -> OperatorExpansion {
        OperatorExpansion::new(
            ModeBasis::fundamental(),
            DVector::from_row_slice(&u),
            DVector::from_row_slice(&v),
        )
        .unwrap()
    }

    #[test]
    fn commutator_of_canonical_modes() {
        let basis = ModeBasis::fundamental();
        let a = OperatorExpansion::annihilator(basis.clone(), 0);
        let b = OperatorExpansion::annihilator(basis, 1);
        assert_eq!(commutator(&a, &a).unwrap(), c(1.0, 0.0));
        assert_eq!(commutator(&a, &b).unwrap(), c(0.0, 0.0));
        let adag = a.dagger();
        assert_eq!(commutator(&adag, &adag).unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn vacuum_photon_number_counts_creation_content() {
        let basis = ModeBasis::fundamental();
        let a = OperatorExpansion::annihilator(basis, 0);
        assert_eq!(vacuum_photon_number(&a), 0.0);
        let z = Complex64::new(0.0, 0.0);
        let o = expansion([z; 4], [c(1.0, 0.0), c(0.0, 1.0), z, z]);
        assert_eq!(vacuum_photon_number(&o), 2.0);
    }

    #[test]
    fn cross_moment_examples() {
        let z = Complex64::new(0.0, 0.0);
        let o1 = expansion([z; 4], [c(1.0, 0.0), z, z, z]);
        let o2 = expansion([z; 4], [z, c(1.0, 0.0), z, z]);
        assert_eq!(vacuum_cross_moment(&o1, &o2).unwrap(), z);
        let o3 = expansion([z; 4], [c(0.0, 1.0), z, z, z]);
        assert_eq!(vacuum_cross_moment(&o1, &o3).unwrap(), c(0.0, 1.0));
        let d = vacuum_cross_moment(&o3, &o3).unwrap();
        assert_eq!(d, c(vacuum_photon_number(&o3), 0.0));
    }

    #[test]
    fn dagger_is_an_exact_involution() {
        let o = expansion(
            [c(0.3, -0.2), c(1.5, 0.0), c(0.0, 0.7), c(-2.0, 0.1)],
            [c(0.0, -1.0), c(0.25, 0.5), c(3.0, 0.0), c(0.0, 0.0)],
        );
        let back = o.dagger().dagger();
        assert_eq!(o.u(), back.u());
        assert_eq!(o.v(), back.v());
    }

    #[test]
    fn identity_map_leaves_operands_unchanged() {
        let basis = ModeBasis::fundamental();
        let ops: Vec<_> = (0..4).map(|k| OperatorExpansion::annihilator(basis.clone(), k)).collect();
        let out = BogoliubovMap::identity(4).apply(&ops).unwrap();
        for (a, b) in ops.iter().zip(&out) {
            assert_eq!(a.u(), b.u());
            assert_eq!(a.v(), b.v());
        }
    }

    fn gain_map(g: f64) -> BogoliubovMap {
        // Two-mode squeezer embedded on the first two of four ports.
        let mut u = DMatrix::<Complex64>::identity(4, 4);
        u[(0, 0)] = c(g, 0.0);
        u[(1, 1)] = c(g, 0.0);
        let mut v = DMatrix::<Complex64>::zeros(4, 4);
        let gg = c((g * g - 1.0).sqrt(), 0.0);
        v[(0, 1)] = gg;
        v[(1, 0)] = gg;
        BogoliubovMap::new(u, v).unwrap()
    }

    #[test]
    fn gain_map_mixes_in_conjugate_partner() {
        let basis = ModeBasis::fundamental();
        let ops: Vec<_> = (0..4).map(|k| OperatorExpansion::annihilator(basis.clone(), k)).collect();
        let g = 1.01;
        let out = gain_map(g).apply(&ops).unwrap();
        let gg = (g * g - 1.0_f64).sqrt();
        assert!((out[0].u()[0] - c(g, 0.0)).norm() < 1e-15);
        assert!((out[0].v()[1] - c(gg, 0.0)).norm() < 1e-15);
        assert!((gg - 0.141774468787578).abs() < 1e-12);
        assert!(gain_map(g).is_canonical(1e-12));
    }

    #[test]
    fn compose_with_identity_and_gain_addition() {
        let m = gain_map(1.2);
        let id = BogoliubovMap::identity(4);
        let same = BogoliubovMap::compose(&id, &m).unwrap();
        assert_eq!(same.u(), m.u());
        assert_eq!(same.v(), m.v());

        // Two collinear squeezers add their rapidities:
        // effective gain cosh(acosh G1 + acosh G2).
        let m2 = BogoliubovMap::compose(&gain_map(1.05), &gain_map(1.2)).unwrap();
        let expected = (1.2_f64.acosh() + 1.05_f64.acosh()).cosh();
        assert!((expected - 1.472367605815953).abs() < 1e-12);
        assert!((m2.u()[(0, 0)] - c(expected, 0.0)).norm() < 1e-12);
        assert!(m2.is_canonical(1e-12));
    }

    #[test]
    fn map_inverse_composes_to_identity() {
        let m = gain_map(1.3);
        let inv = m.inverse().unwrap();
        let id = BogoliubovMap::compose(&inv, &m).unwrap();
        let dev = (id.u() - DMatrix::<Complex64>::identity(4, 4))
            .iter()
            .chain(id.v().iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "inverse deviation {dev}");
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let other = ModeBasis::new(&["x", "y", "z", "w"]).unwrap();
        let o1 = OperatorExpansion::annihilator(ModeBasis::fundamental(), 0);
        let o2 = OperatorExpansion::annihilator(other, 0);
        assert!(matches!(commutator(&o1, &o2), Err(Error::BasisMismatch(_))));
        assert!(matches!(vacuum_cross_moment(&o1, &o2), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        assert!(ModeBasis::new(&["m", "m"]).is_err());
        assert!(ModeBasis::new::<&str>(&[]).is_err());
    }
}
