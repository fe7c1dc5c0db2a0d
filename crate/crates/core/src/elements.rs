//! Scattering relations of the intracavity elements.
//!
//! All intracavity elements act on a shared four-slot working space in
//! the order [a, b, f_L, f_R]: the two polarization modes travelling
//! through the cavity and the two absorber reservoir inputs (one fresh
//! reservoir per pass direction). The output coupler is the exception:
//! it is a four-port junction between the intracavity fields and the
//! external input/output fields, so it carries its own port ordering.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * mirror transmission amplitude i√(1−R), reflection −√R seen from
//!   inside, +i√(1−R)/−√R structure symmetric between the ports;
//! * rotator [[cos φ, sin φ], [−sin φ, cos φ]] on (a, b), with the same
//!   rotation sense for both travel directions (Faraday behaviour), so a
//!   round trip accumulates the angle 2φ;
//! * crystal a ↦ G a + √(G²−1) b† on the left pass only; the return
//!   pass sees a transparent medium (G = 1);
//! * absorber a ↦ t a + i√(1−t²) f, coupling a fresh reservoir mode
//!   f_L on the left pass and f_R on the right pass; b is untouched;
//! * delay multiplies both polarization modes by e^{iθ} per pass;
//! * back mirror reflects with a plain sign flip on both modes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bogoliubov::BogoliubovMap;
use crate::{Error, Result};

/// Index of mode a in the working space.
pub const MODE_A: usize = 0;
/// Index of mode b in the working space.
pub const MODE_B: usize = 1;
/// Index of the left-pass reservoir input in the working space.
pub const MODE_FL: usize = 2;
/// Index of the right-pass reservoir input in the working space.
pub const MODE_FR: usize = 3;

/// Travel direction of a pass through an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From the output coupler towards the back mirror.
    Left,
    /// From the back mirror towards the output coupler.
    Right,
}

/// One intracavity element plus its scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementSpec {
    /// Output coupler with intensity reflectivity R.
    RightMirror { r: f64 },
    /// Polarization rotator with angle φ.
    Rotator { phi: f64 },
    /// Parametric crystal with single-pass gain G.
    Crystal { g: f64 },
    /// Polarization-selective absorber with amplitude transmission t.
    Absorber { t: f64 },
    /// Propagation phase θ per half trip.
    Delay { theta: f64 },
    /// Perfectly reflecting back mirror.
    LeftMirror,
}

impl ElementSpec {
    /// Checks the parameter against its physical range.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ElementSpec::RightMirror { r } => {
                if !(0.0..1.0).contains(&r) {
                    return Err(Error::ParamOutOfRange(format!("mirror reflectivity R = {r}, need 0 <= R < 1")));
                }
            }
            ElementSpec::Rotator { phi } => {
                if !phi.is_finite() {
                    return Err(Error::ParamOutOfRange(format!("rotator angle phi = {phi} not finite")));
                }
            }
            ElementSpec::Crystal { g } => {
                if !g.is_finite() || g < 1.0 {
                    return Err(Error::ParamOutOfRange(format!("crystal gain G = {g}, need G >= 1")));
                }
            }
            ElementSpec::Absorber { t } => {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::ParamOutOfRange(format!("absorber transmission t = {t}, need 0 <= t <= 1")));
                }
            }
            ElementSpec::Delay { theta } => {
                if !theta.is_finite() {
                    return Err(Error::ParamOutOfRange(format!("delay phase theta = {theta} not finite")));
                }
            }
            ElementSpec::LeftMirror => {}
        }
        Ok(())
    }

    /// The element's scattering map for the given pass direction.
    /// Intracavity elements act on the working space; the output coupler
    /// returns its four-port junction map (see [`right_mirror_relations`]).
    pub fn relations(&self, dir: Direction) -> Result<BogoliubovMap> {
        self.validate()?;
        Ok(match *self {
            ElementSpec::RightMirror { r } => right_mirror_relations(r)?,
            ElementSpec::Rotator { phi } => rotator_relations(phi, dir),
            ElementSpec::Crystal { g } => crystal_relations(g, dir)?,
            ElementSpec::Absorber { t } => absorber_relations(t, dir)?,
            ElementSpec::Delay { theta } => delay_relations(theta),
            ElementSpec::LeftMirror => left_mirror_relations(),
        })
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Output coupler relating (â_1R, â_in) to (â_out, â_1L), and the same
/// for mode b. Port order: inputs (a_1R, a_in, b_1R, b_in), outputs
/// (a_out, a_1L, b_out, b_1L):
///
/// â_out = i√(1−R) â_1R − √R â_in
/// â_1L  = −√R â_1R + i√(1−R) â_in
pub fn right_mirror_relations(r: f64) -> Result<BogoliubovMap> {
    ElementSpec::RightMirror { r }.validate()?;
    let trans = c(0.0, (1.0 - r).sqrt());
    let refl = c(-r.sqrt(), 0.0);
    let mut u = DMatrix::<Complex64>::zeros(4, 4);
    for block in 0..2 {
        let o = 2 * block;
        u[(o, o)] = trans;
        u[(o, o + 1)] = refl;
        u[(o + 1, o)] = refl;
        u[(o + 1, o + 1)] = trans;
    }
    Ok(BogoliubovMap::new(u, DMatrix::zeros(4, 4)).expect("finite square blocks"))
}

/// Polarization rotation on (a, b) by angle φ. The rotation sense is the
/// same for both pass directions, so left pass followed by right pass
/// rotates by 2φ in total.
pub fn rotator_relations(phi: f64, _dir: Direction) -> BogoliubovMap {
    let mut u = DMatrix::<Complex64>::identity(4, 4);
    let (s, co) = phi.sin_cos();
    u[(MODE_A, MODE_A)] = c(co, 0.0);
    u[(MODE_A, MODE_B)] = c(s, 0.0);
    u[(MODE_B, MODE_A)] = c(-s, 0.0);
    u[(MODE_B, MODE_B)] = c(co, 0.0);
    BogoliubovMap::new(u, DMatrix::zeros(4, 4)).expect("finite square blocks")
}

/// Parametric crystal. On the left pass it is a two-mode squeezer,
///
/// â ↦ G â + √(G²−1) b̂†,   b̂ ↦ √(G²−1) â† + G b̂,
///
/// which preserves commutators since G² − (G²−1) = 1. The right pass
/// sees a transparent medium and is the identity.
pub fn crystal_relations(g: f64, dir: Direction) -> Result<BogoliubovMap> {
    ElementSpec::Crystal { g }.validate()?;
    if dir == Direction::Right {
        return Ok(BogoliubovMap::identity(4));
    }
    let mut u = DMatrix::<Complex64>::identity(4, 4);
    u[(MODE_A, MODE_A)] = c(g, 0.0);
    u[(MODE_B, MODE_B)] = c(g, 0.0);
    let mut v = DMatrix::<Complex64>::zeros(4, 4);
    let gg = c((g * g - 1.0).sqrt(), 0.0);
    v[(MODE_A, MODE_B)] = gg;
    v[(MODE_B, MODE_A)] = gg;
    BogoliubovMap::new(u, v)
}

/// Polarization-selective absorber: a lossy channel for mode a only,
/// modeled as a beam splitter onto a fresh reservoir mode,
///
/// â ↦ t â + i√(1−t²) f̂,   f̂ ↦ i√(1−t²) â + t f̂,
///
/// with f̂ = f̂_L on the left pass and f̂ = f̂_R on the right pass.
/// Mode b passes unchanged.
pub fn absorber_relations(t: f64, dir: Direction) -> Result<BogoliubovMap> {
    ElementSpec::Absorber { t }.validate()?;
    let f = match dir {
        Direction::Left => MODE_FL,
        Direction::Right => MODE_FR,
    };
    let mut u = DMatrix::<Complex64>::identity(4, 4);
    let refl = c(0.0, (1.0 - t * t).sqrt());
    u[(MODE_A, MODE_A)] = c(t, 0.0);
    u[(MODE_A, f)] = refl;
    u[(f, MODE_A)] = refl;
    u[(f, f)] = c(t, 0.0);
    Ok(BogoliubovMap::new(u, DMatrix::zeros(4, 4)).expect("finite square blocks"))
}

/// Propagation phase: multiplies both polarization modes by e^{iθ},
/// identically for either direction.
pub fn delay_relations(theta: f64) -> BogoliubovMap {
    let mut u = DMatrix::<Complex64>::identity(4, 4);
    let ph = Complex64::from_polar(1.0, theta);
    u[(MODE_A, MODE_A)] = ph;
    u[(MODE_B, MODE_B)] = ph;
    BogoliubovMap::new(u, DMatrix::zeros(4, 4)).expect("finite square blocks")
}

/// Perfectly reflecting back mirror: a sign flip on both polarization
/// modes, no output port.
pub fn left_mirror_relations() -> BogoliubovMap {
    let mut u = DMatrix::<Complex64>::identity(4, 4);
    u[(MODE_A, MODE_A)] = c(-1.0, 0.0);
    u[(MODE_B, MODE_B)] = c(-1.0, 0.0);
    BogoliubovMap::new(u, DMatrix::zeros(4, 4)).expect("finite square blocks")
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Complex64 = Complex64::new(0.0, 1.0);

    fn max_dev(m: &BogoliubovMap, other: &BogoliubovMap) -> f64 {
        (m.u() - other.u())
            .iter()
            .chain((m.v() - other.v()).iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn transparent_mirror_transmits_with_phase() {
        let m = right_mirror_relations(0.0).unwrap();
        assert_eq!(m.u()[(0, 0)], I);
        assert_eq!(m.u()[(0, 1)], Complex64::new(0.0, 0.0));
        let near_one = right_mirror_relations(1.0 - 1e-12).unwrap();
        assert!((near_one.u()[(0, 1)].norm() - 1.0).abs() < 1e-9);
        assert!(right_mirror_relations(1.0).is_err());
        assert!(right_mirror_relations(-0.1).is_err());
    }

    #[test]
    fn mirror_block_is_unitary() {
        let m = right_mirror_relations(0.2).unwrap();
        assert!(m.canonicality_deviation() < 1e-12);
    }

    #[test]
    fn rotator_group_law() {
        let id = rotator_relations(0.0, Direction::Left);
        assert_eq!(max_dev(&id, &BogoliubovMap::identity(4)), 0.0);

        // Left pass then right pass accumulates 2φ.
        let phi = 0.37;
        let round = BogoliubovMap::compose(
            &rotator_relations(phi, Direction::Right),
            &rotator_relations(phi, Direction::Left),
        )
        .unwrap();
        let double = rotator_relations(2.0 * phi, Direction::Left);
        assert!(max_dev(&round, &double) < 1e-15);

        let quarter = rotator_relations(std::f64::consts::FRAC_PI_2, Direction::Left);
        assert!((quarter.u()[(0, 1)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((quarter.u()[(1, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn crystal_limits_and_canonicality() {
        let id = crystal_relations(1.0, Direction::Left).unwrap();
        assert_eq!(max_dev(&id, &BogoliubovMap::identity(4)), 0.0);
        let back = crystal_relations(1.7, Direction::Right).unwrap();
        assert_eq!(max_dev(&back, &BogoliubovMap::identity(4)), 0.0);

        let m = crystal_relations(1.01, Direction::Left).unwrap();
        assert!((m.v()[(0, 1)].re - 0.141774468787578).abs() < 1e-12);
        for g in [1.0, 1.01, 1.5, 3.0, 10.0] {
            let dev = crystal_relations(g, Direction::Left).unwrap().canonicality_deviation();
            assert!(dev < 1e-12, "G = {g}: deviation {dev}");
        }
        assert!(crystal_relations(0.99, Direction::Left).is_err());
    }

    #[test]
    fn absorber_limits_and_ports() {
        let id = absorber_relations(1.0, Direction::Left).unwrap();
        assert_eq!(max_dev(&id, &BogoliubovMap::identity(4)), 0.0);

        let dead = absorber_relations(0.0, Direction::Left).unwrap();
        assert_eq!(dead.u()[(MODE_A, MODE_FL)], I);
        assert_eq!(dead.u()[(MODE_A, MODE_A)], Complex64::new(0.0, 0.0));

        let right = absorber_relations(0.5, Direction::Right).unwrap();
        assert_eq!(right.u()[(MODE_A, MODE_FL)], Complex64::new(0.0, 0.0));
        assert!(right.u()[(MODE_A, MODE_FR)].norm() > 0.0);
        assert!(right.canonicality_deviation() < 1e-12);
        assert!(absorber_relations(1.1, Direction::Left).is_err());
    }

    #[test]
    fn delay_phases() {
        let id = delay_relations(0.0);
        assert_eq!(max_dev(&id, &BogoliubovMap::identity(4)), 0.0);
        let pi = delay_relations(std::f64::consts::PI);
        assert!((pi.u()[(0, 0)] + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let quarter = delay_relations(std::f64::consts::FRAC_PI_2);
        assert!((quarter.u()[(1, 1)] - I).norm() < 1e-15);
    }

    #[test]
    fn back_mirror_is_an_involution() {
        let m = left_mirror_relations();
        assert_eq!(m.u()[(MODE_A, MODE_A)], Complex64::new(-1.0, 0.0));
        assert_eq!(m.u()[(MODE_B, MODE_B)], Complex64::new(-1.0, 0.0));
        let twice = BogoliubovMap::compose(&m, &m).unwrap();
        assert_eq!(max_dev(&twice, &BogoliubovMap::identity(4)), 0.0);
    }

    #[test]
    fn only_crystal_creates_and_only_absorber_touches_reservoirs() {
        let all = [
            crystal_relations(1.4, Direction::Left).unwrap(),
            rotator_relations(0.5, Direction::Left),
            absorber_relations(0.3, Direction::Left).unwrap(),
            delay_relations(0.8),
            left_mirror_relations(),
        ];
        for (k, m) in all.iter().enumerate() {
            let has_v = m.v().iter().any(|z| z.norm() > 0.0);
            assert_eq!(has_v, k == 0, "only the crystal may have creation coupling");
            let mixes = m.u()[(MODE_A, MODE_FL)].norm()
                + m.u()[(MODE_A, MODE_FR)].norm()
                + m.u()[(MODE_B, MODE_FL)].norm()
                + m.u()[(MODE_B, MODE_FR)].norm();
            assert_eq!(mixes > 0.0, k == 2, "only the absorber may couple reservoirs");
        }
    }

    #[test]
    fn neutral_round_trip_is_the_mirror_sign() {
        // G = 1, t = 1, φ = 0, θ = 0: composing the full pass sequence
        // leaves only the back-mirror sign flip.
        let seq: Vec<BogoliubovMap> = vec![
            rotator_relations(0.0, Direction::Left),
            crystal_relations(1.0, Direction::Left).unwrap(),
            absorber_relations(1.0, Direction::Left).unwrap(),
            delay_relations(0.0),
            left_mirror_relations(),
            delay_relations(0.0),
            absorber_relations(1.0, Direction::Right).unwrap(),
            crystal_relations(1.0, Direction::Right).unwrap(),
            rotator_relations(0.0, Direction::Right),
        ];
        let total = seq
            .into_iter()
            .reduce(|acc, m| BogoliubovMap::compose(&m, &acc).unwrap())
            .unwrap();
        assert_eq!(max_dev(&total, &left_mirror_relations()), 0.0);
    }
}
