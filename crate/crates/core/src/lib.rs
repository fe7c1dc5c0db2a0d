//! Quantum input-output model of a degenerate type-II parametric amplifier
//! inside a two-mirror cavity whose polarization eigenmodes are not
//! orthogonal.
//!
//! The cavity holds five idealized elements between a partially
//! transmitting output mirror and a perfect back mirror: a polarization
//! rotator (angle φ), the parametric crystal (gain G on the forward pass,
//! transparent on the return), a polarization-selective absorber
//! (amplitude transmission t for one linear polarization), and a free
//! propagation phase θ per half trip. Every element acts linearly on the
//! bosonic mode operators, so the whole network is a Bogoliubov
//! transformation: output annihilation operators are linear combinations
//! of input annihilation and creation operators.
//!
//! The crate is organized bottom-up:
//!
//! * [`bogoliubov`]: operator expansions over a fixed input-mode basis,
//!   their commutators and vacuum moments, and composable linear maps.
//! * [`elements`]: the scattering relations of each intracavity element
//!   for the left- and right-travelling passes.
//! * [`cavity`]: assembly of the round-trip relation, its closed form,
//!   and the self-consistent input-output solution below threshold.
//! * [`analysis`]: observables built on the solver. Emitted photon
//!   numbers, the Petermann excess-noise factor K of the cold cavity
//!   with its locked/unlocked classification, the critical absorber
//!   transmission t_c(φ) where the two cavity eigenmodes coalesce, and
//!   the oscillation threshold gain.
//! * [`sweep`]: deterministic parameter-grid evaluation with presets for
//!   the two figure datasets exported by the CLI.
//! * [`checks`]: a seeded self-check suite wiring the independent
//!   closed forms against the assembled network.
//!
//! The headline physics: at the critical transmission the cold-cavity
//! eigenmodes become parallel and K diverges, yet the emitted twin-photon
//! rate stays smooth and bounded there, and over the whole (t, φ) plane
//! the rate is maximal on the orthogonal-mode line φ = 0. Excess-noise
//! divergence does not buy photon-rate enhancement.

pub mod analysis;
pub mod bogoliubov;
pub mod cavity;
pub mod checks;
pub mod elements;
pub mod sweep;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two operator expansions or a map and its operands disagree on the
    /// underlying mode basis.
    #[error("mode basis mismatch: {0}")]
    BasisMismatch(String),

    /// Matrix or operand dimensions are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A physical parameter lies outside its admissible range.
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    /// The closed-loop system has no stable sub-threshold solution: the
    /// cavity is at or beyond its oscillation threshold.
    #[error("cavity at or above oscillation threshold: {0}")]
    SingularAtThreshold(String),

    /// A closed-form expression is evaluated at its divergence point.
    #[error("closed form divergent at threshold: {0}")]
    DivergentAtThreshold(String),

    /// The two eigenmodes of the cold cavity produced inconsistent
    /// excess-noise factors; indicates a numerical or assembly defect.
    #[error("eigenmode excess-noise factors disagree: K1 = {k1}, K2 = {k2}")]
    KFactorMismatch { k1: f64, k2: f64 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
