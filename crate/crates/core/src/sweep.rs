//! Deterministic parameter-grid evaluation.
//!
//! A sweep fixes the cavity parameters, varies one or two of them along
//! strictly monotone grids, and records photon numbers plus the
//! excess-noise factor at every point. Points at or above the
//! oscillation threshold are kept in the output with their photon
//! numbers marked divergent rather than dropped. Evaluation order is
//! parallel but the record order is always row-major in the grid, so
//! identical inputs produce identical outputs.

use rayon::prelude::*;

use crate::analysis::{k_factor, photon_numbers, KFactor, Regime};
use crate::cavity::CavityParams;
use crate::{Error, Result};

/// Which scalar parameter an axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    T,
    Phi,
    Theta,
    G,
    R,
}

impl SweepAxis {
    /// Canonical axis name as used in output metadata and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::T => "t",
            SweepAxis::Phi => "phi",
            SweepAxis::Theta => "theta",
            SweepAxis::G => "G",
            SweepAxis::R => "R",
        }
    }

    /// Parses a canonical axis name.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "t" => SweepAxis::T,
            "phi" => SweepAxis::Phi,
            "theta" => SweepAxis::Theta,
            "G" => SweepAxis::G,
            "R" => SweepAxis::R,
            other => {
                return Err(Error::ParamOutOfRange(format!(
                    "unknown sweep axis {other:?}, expected one of t, phi, theta, G, R"
                )))
            }
        })
    }

    fn apply(&self, p: &CavityParams, value: f64) -> CavityParams {
        let mut q = *p;
        match self {
            SweepAxis::T => q.t = value,
            SweepAxis::Phi => q.phi = value,
            SweepAxis::Theta => q.theta = value,
            SweepAxis::G => q.g = value,
            SweepAxis::R => q.r = value,
        }
        q
    }
}

/// One grid axis: a parameter plus its strictly monotone sample values.
#[derive(Debug, Clone)]
pub struct GridAxis {
    param: SweepAxis,
    values: Vec<f64>,
}

impl GridAxis {
    /// Evenly spaced samples from `start` to `stop` inclusive. The final
    /// sample is set to `stop` exactly, so range endpoints like t = 1
    /// stay within their closed parameter ranges.
    pub fn linspace(param: SweepAxis, start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::ParamOutOfRange(format!(
                "axis {} bounds must be finite, got {start}..{stop}",
                param.name()
            )));
        }
        if count == 0 {
            return Err(Error::ParamOutOfRange(format!("axis {} has an empty grid", param.name())));
        }
        let values = if count == 1 {
            vec![start]
        } else {
            if start == stop {
                return Err(Error::ParamOutOfRange(format!(
                    "axis {} needs distinct bounds for {count} samples",
                    param.name()
                )));
            }
            let step = (stop - start) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
            v[count - 1] = stop;
            v
        };
        Self::from_values(param, values)
    }

    /// Wraps explicit sample values; they must be finite and strictly
    /// monotone.
    pub fn from_values(param: SweepAxis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ParamOutOfRange(format!("axis {} has an empty grid", param.name())));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::ParamOutOfRange(format!("axis {} has non-finite samples", param.name())));
        }
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = values.windows(2).all(|w| w[0] > w[1]);
        if values.len() > 1 && !increasing && !decreasing {
            return Err(Error::ParamOutOfRange(format!(
                "axis {} samples must be strictly monotone",
                param.name()
            )));
        }
        Ok(GridAxis { param, values })
    }

    /// The varied parameter.
    pub fn param(&self) -> SweepAxis {
        self.param
    }

    /// Sample values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One or two grid axes over distinct parameters.
#[derive(Debug, Clone)]
pub struct GridSpec {
    axes: Vec<GridAxis>,
}

impl GridSpec {
    /// Validates the axis set: one or two axes, no repeated parameter.
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::ParamOutOfRange(format!(
                "a sweep takes one or two axes, got {}",
                axes.len()
            )));
        }
        if axes.len() == 2 && axes[0].param == axes[1].param {
            return Err(Error::ParamOutOfRange(format!(
                "both axes vary {}; parameters must be distinct",
                axes[0].param.name()
            )));
        }
        Ok(GridSpec { axes })
    }

    /// The axes, outer first.
    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    /// Total number of grid points.
    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Resolves every grid point against the fixed parameters, row-major
    /// with the first axis outermost.
    pub fn resolve(&self, fixed: &CavityParams) -> Vec<CavityParams> {
        match self.axes.len() {
            1 => {
                let ax = &self.axes[0];
                ax.values.iter().map(|&v| ax.param.apply(fixed, v)).collect()
            }
            _ => {
                let (outer, inner) = (&self.axes[0], &self.axes[1]);
                let mut points = Vec::with_capacity(self.point_count());
                for &vo in &outer.values {
                    let base = outer.param.apply(fixed, vo);
                    for &vi in &inner.values {
                        points.push(inner.param.apply(&base, vi));
                    }
                }
                points
            }
        }
    }
}

/// Observables at a single grid point. `photons` is `None` when the
/// point sits at or above the oscillation threshold, where the
/// stationary photon number diverges; the excess-noise factor of the
/// cold cavity remains defined there.
#[derive(Debug, Clone, Copy)]
pub struct SweepRecord {
    /// Fully resolved parameters of this point.
    pub params: CavityParams,
    /// (n̄_a, n̄_b, N̄), or `None` at/above threshold.
    pub photons: Option<(f64, f64, f64)>,
    /// Excess-noise factor of the cold cavity at this (t, φ).
    pub k: KFactor,
    /// Regime classification at this (t, φ).
    pub regime: Regime,
}

/// A completed sweep: inputs echoed plus one record per grid point in
/// row-major grid order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    fixed: CavityParams,
    grid: GridSpec,
    records: Vec<SweepRecord>,
    code_version: &'static str,
}

impl SweepResult {
    /// The fixed parameters the axes were resolved against.
    pub fn fixed(&self) -> &CavityParams {
        &self.fixed
    }

    /// The grid definition.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Records in row-major grid order.
    pub fn records(&self) -> &[SweepRecord] {
        &self.records
    }

    /// Version of this library that produced the records.
    pub fn code_version(&self) -> &'static str {
        self.code_version
    }
}

fn evaluate(p: CavityParams) -> Result<SweepRecord> {
    let photons = match photon_numbers(&p) {
        Ok(v) => Some(v),
        Err(Error::SingularAtThreshold(_)) => None,
        Err(e) => return Err(e),
    };
    let kres = k_factor(&p)?;
    Ok(SweepRecord { params: p, photons, k: kres.k, regime: kres.regime })
}

/// Evaluates photon numbers and excess-noise factor over the grid.
/// Points are computed in parallel; record order is row-major in the
/// grid regardless of scheduling. Threshold singularities are recorded
/// in-band; any other error aborts the sweep.
pub fn sweep(fixed: &CavityParams, grid: &GridSpec) -> Result<SweepResult> {
    let points = grid.resolve(fixed);
    for p in &points {
        p.validate()?;
    }
    let records: Vec<SweepRecord> =
        points.into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        fixed: *fixed,
        grid: grid.clone(),
        records,
        code_version: env!("CARGO_PKG_VERSION"),
    })
}

/// Preset for the gain-map figure: N̄ over t ∈ [0,1] × φ ∈ [0, π/2] on a
/// 101x101 grid at G = 1.01, R = 0.2, θ = 0.
pub fn fig2_preset() -> (CavityParams, GridSpec) {
    let fixed = CavityParams { g: 1.01, r: 0.2, t: 1.0, phi: 0.0, theta: 0.0 };
    let grid = GridSpec::new(vec![
        GridAxis::linspace(SweepAxis::T, 0.0, 1.0, 101).expect("static grid"),
        GridAxis::linspace(SweepAxis::Phi, 0.0, std::f64::consts::FRAC_PI_2, 101).expect("static grid"),
    ])
    .expect("static grid");
    (fixed, grid)
}

/// Preset for the critical-slice figure: the φ = π/8 cut with 1001
/// samples of t ∈ [0,1] at G = 1.01, R = 0.2, θ = 0.
pub fn fig3_preset() -> (CavityParams, GridSpec) {
    let fixed =
        CavityParams { g: 1.01, r: 0.2, t: 1.0, phi: std::f64::consts::FRAC_PI_8, theta: 0.0 };
    let grid = GridSpec::new(vec![
        GridAxis::linspace(SweepAxis::T, 0.0, 1.0, 1001).expect("static grid"),
    ])
    .expect("static grid");
    (fixed, grid)
}
