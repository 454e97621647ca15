//! Box counting for graphs of vertex functions and the closed-form bounds
//! they are compared against.
//!
//! Two counts are available. The column count covers the graph over each
//! level-k cell by one vertical stack of `2^-k` cubes tall enough for the
//! cell's oscillation. The grid count is the textbook occupancy count on the
//! axis-aligned grid of pitch `2^-k`, using the piecewise linear interpolant
//! of the samples along cell edges.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{GasketError, Result};
use crate::format::{fmt_real, JsonObject};
use crate::function::VertexFunction;

/// `ln 3 / ln 2` as evaluated in double precision.
pub const LOG2_3: f64 = 1.584_962_500_721_156_3;

/// Default oversampling depth `r`.
pub const DEFAULT_OVERSAMPLE: u32 = 4;

/// Per-cell sampled extrema at level `k`, using samples from level `k + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationTable {
    pub k: u32,
    pub r: u32,
    /// `(min, max)` per level-k cell, in word order.
    pub per_cell: Vec<(f64, f64)>,
}

impl OscillationTable {
    pub fn oscillation(&self, cell: usize) -> f64 {
        let (lo, hi) = self.per_cell[cell];
        hi - lo
    }

    pub fn max_oscillation(&self) -> f64 {
        (0..self.per_cell.len())
            .map(|c| self.oscillation(c))
            .fold(0.0, f64::max)
    }
}

/// Extrema of `u` over each level-k cell, sampled at `u`'s own level.
pub fn cell_oscillations(u: &VertexFunction, k: u32) -> Result<OscillationTable> {
    if u.level() < k {
        return Err(GasketError::LevelMismatch(format!(
            "cannot take level-{k} cells of a level-{} function",
            u.level()
        )));
    }
    let r = u.level() - k;
    let topology = u.topology();
    let cells = topology.cell_corners();
    let values = u.values();
    let span = 3usize.pow(r);
    let per_cell = (0..3usize.pow(k))
        .into_par_iter()
        .map(|c| {
            cells[c * span..(c + 1) * span].iter().flatten().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &i| {
                    let v = values[i as usize];
                    (lo.min(v), hi.max(v))
                },
            )
        })
        .collect();
    Ok(OscillationTable { k, r, per_cell })
}

fn restricted(u: &VertexFunction, k: u32, r: u32) -> Result<VertexFunction> {
    let level = k + r;
    if u.level() < level {
        return Err(GasketError::LevelMismatch(format!(
            "box count at k = {k} with oversampling {r} needs level {level}, input has {}",
            u.level()
        )));
    }
    u.restrict(level)
}

/// `Σ_ω (⌈osc_ω 2^k⌉ + 1)` over the level-k cells.
pub fn column_box_count(u: &VertexFunction, k: u32, r: u32) -> Result<u64> {
    let table = cell_oscillations(&restricted(u, k, r)?, k)?;
    let side = (k as f64).exp2();
    Ok((0..table.per_cell.len())
        .map(|c| (table.oscillation(c) * side).ceil() as u64 + 1)
        .sum())
}

/// Number of occupied cubes of the `2^-k` grid over `[0,1]² × [min u, ∞)`.
pub fn grid_box_count(u: &VertexFunction, k: u32, r: u32) -> Result<u64> {
    let u = restricted(u, k, r)?;
    let topology = u.topology();
    let cells = topology.cell_corners();
    let values = u.values();
    let coords = topology.coords();
    let scale = ((k + r) as f64).exp2();
    let side = (k as f64).exp2();
    let zmin = u.min();
    let span = 3usize.pow(r);
    let cols = 1u64 << k;

    // (column, first layer, last layer)
    let point = |i: u32| {
        let [a, b] = coords[i as usize];
        let (a, b) = (a as f64 / scale, b as f64 / scale);
        [
            (a + 0.5 * b) * side,
            b * 0.75f64.sqrt() * side,
            (values[i as usize] - zmin) * side,
        ]
    };
    let mut intervals: Vec<(u64, i64, i64)> = (0..3usize.pow(k))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut local = Vec::new();
            for &[p, q, s] in &cells[c * span..(c + 1) * span] {
                for (x, y) in [(p, q), (p, s), (q, s)] {
                    segment_layers(point(x), point(y), cols, &mut local);
                }
            }
            merge_intervals(&mut local);
            local
        })
        .collect();
    merge_intervals(&mut intervals);
    Ok(intervals
        .iter()
        .map(|&(_, lo, hi)| (hi - lo + 1) as u64)
        .sum())
}

/// Splits a segment (in grid units) at the vertical grid planes and records
/// the layers each piece passes through.
fn segment_layers(p: [f64; 3], q: [f64; 3], cols: u64, out: &mut Vec<(u64, i64, i64)>) {
    let mut ts = vec![0.0, 1.0];
    for axis in 0..2 {
        let (lo, hi) = (p[axis].min(q[axis]), p[axis].max(q[axis]));
        let mut line = lo.floor() + 1.0;
        while line < hi {
            ts.push((line - p[axis]) / (q[axis] - p[axis]));
            line += 1.0;
        }
    }
    ts.sort_by(f64::total_cmp);
    let at = |t: f64| [0, 1, 2].map(|i| p[i] + t * (q[i] - p[i]));
    for w in ts.windows(2) {
        let mid = at(0.5 * (w[0] + w[1]));
        let column = |x: f64| (x.floor().max(0.0) as u64).min(cols - 1);
        let id = column(mid[0]) * cols + column(mid[1]);
        let (z0, z1) = (at(w[0])[2], at(w[1])[2]);
        out.push((id, z0.min(z1).floor() as i64, z0.max(z1).floor() as i64));
    }
}

fn merge_intervals(xs: &mut Vec<(u64, i64, i64)>) {
    xs.sort_unstable();
    let mut merged: Vec<(u64, i64, i64)> = Vec::with_capacity(xs.len());
    for &(id, lo, hi) in xs.iter() {
        match merged.last_mut() {
            Some(last) if last.0 == id && lo <= last.2 + 1 => last.2 = last.2.max(hi),
            _ => merged.push((id, lo, hi)),
        }
    }
    *xs = merged;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMethod {
    Column,
    Grid,
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMethod::Column => "column",
            CountMethod::Grid => "grid",
        })
    }
}

impl FromStr for CountMethod {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column" => Ok(CountMethod::Column),
            "grid" => Ok(CountMethod::Grid),
            other => Err(GasketError::InvalidInput(format!(
                "unknown counting method {other:?}, expected column or grid"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxCountSeries {
    pub entries: Vec<(u32, u64)>,
    pub method: CountMethod,
}

impl BoxCountSeries {
    /// Plot coordinates `(k ln 2, ln N(k))`.
    pub fn log_points(&self) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .map(|&(k, n)| (k as f64 * std::f64::consts::LN_2, (n as f64).ln()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,count,log2_count\n");
        for &(k, n) in &self.entries {
            out.push_str(&format!("{k},{n},{}\n", fmt_real((n as f64).log2())));
        }
        out
    }

    pub fn to_plot_csv(&self) -> String {
        let mut out = String::from("k_log2,log_count\n");
        for (x, y) in self.log_points() {
            out.push_str(&format!("{},{}\n", fmt_real(x), fmt_real(y)));
        }
        out
    }
}

/// Counts for `k_min..=k_max` from samples at level `k + r`.
pub fn box_count_series(
    u: &VertexFunction,
    k_min: u32,
    k_max: u32,
    r: u32,
    method: CountMethod,
) -> Result<BoxCountSeries> {
    if k_min > k_max {
        return Err(GasketError::InvalidInput(format!(
            "empty range {k_min}..{k_max}"
        )));
    }
    let entries = (k_min..=k_max)
        .map(|k| {
            let n = match method {
                CountMethod::Column => column_box_count(u, k, r)?,
                CountMethod::Grid => grid_box_count(u, k, r)?,
            };
            Ok((k, n))
        })
        .collect::<Result<_>>()?;
    Ok(BoxCountSeries { entries, method })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub k_range: (u32, u32),
}

impl DimensionEstimate {
    pub fn to_json(&self) -> JsonObject {
        JsonObject::new()
            .real("slope", self.slope)
            .real("intercept", self.intercept)
            .real("r_squared", self.r_squared)
            .int("k_min", self.k_range.0 as i64)
            .int("k_max", self.k_range.1 as i64)
    }
}

/// Least-squares slope of `ln N(k)` against `k ln 2` over `k_min..=k_max`.
pub fn estimate_dimension(
    series: &BoxCountSeries,
    k_min: u32,
    k_max: u32,
) -> Result<DimensionEstimate> {
    let points: Vec<(f64, f64)> = series
        .entries
        .iter()
        .zip(series.log_points())
        .filter(|((k, _), _)| (k_min..=k_max).contains(k))
        .map(|(_, p)| p)
        .collect();
    if points.len() < 3 {
        return Err(GasketError::TooFewPoints(points.len()));
    }
    let fit = least_squares(&points);
    Ok(DimensionEstimate {
        slope: fit.0,
        intercept: fit.1,
        r_squared: fit.2,
        k_range: (k_min, k_max),
    })
}

/// `(slope, intercept, r²)`.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r_squared)
}

/// Bounds for graphs of harmonic functions.
pub fn harmonic_bounds() -> (f64, f64) {
    (LOG2_3, (18.0f64 / 5.0).ln() / std::f64::consts::LN_2)
}

/// Bounds for graphs of finite-energy functions.
pub fn finite_energy_bounds() -> (f64, f64) {
    (
        LOG2_3,
        (108.0f64 / 5.0).ln() / (2.0 * std::f64::consts::LN_2),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FifCase {
    /// `ψ 2^η / 3 <= 1`.
    I,
    II,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FifBounds {
    pub lower: f64,
    pub upper: f64,
    pub case: FifCase,
    /// The upper value falls below the lower one.
    pub vacuous: bool,
}

/// Bounds for graphs of fractal interpolation functions with `ψ = Σ|α_ω|` and
/// Hölder exponent `η`.
pub fn fif_bounds(psi: f64, eta: f64) -> Result<FifBounds> {
    if psi.is_nan() || psi < 0.0 || psi.is_infinite() {
        return Err(GasketError::Domain(format!(
            "ψ = {psi} must be non-negative"
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(GasketError::Domain(format!("η = {eta} must lie in (0, 1]")));
    }
    let (case, upper) = if psi * eta.exp2() / 3.0 <= 1.0 {
        (FifCase::I, 1.0 - eta + LOG2_3)
    } else {
        (FifCase::II, 1.0 + psi.log2())
    };
    Ok(FifBounds {
        lower: LOG2_3,
        upper,
        case,
        vacuous: upper < LOG2_3,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub eta: f64,
    /// No oscillation at any level; `eta` is then reported as 1.
    pub degenerate: bool,
}

impl HolderEstimate {
    /// `eta` clipped into `(0, 1]` for use in [`fif_bounds`].
    pub fn for_bounds(&self) -> f64 {
        self.eta.clamp(1e-6, 1.0)
    }
}

/// Slope of `ln max_ω osc_ω(m)` against `-m ln 2` for `m` in `2..=level(u)`.
pub fn holder_estimate(u: &VertexFunction) -> Result<HolderEstimate> {
    if u.level() < 4 {
        return Err(GasketError::InvalidInput(format!(
            "Hölder estimate needs level 4 or more, got {}",
            u.level()
        )));
    }
    let mut points = Vec::new();
    for m in 2..=u.level() {
        let osc = cell_oscillations(u, m)?.max_oscillation();
        if osc > 0.0 {
            points.push((-(m as f64) * std::f64::consts::LN_2, osc.ln()));
        }
    }
    if points.len() < 2 {
        return Ok(HolderEstimate {
            eta: 1.0,
            degenerate: true,
        });
    }
    Ok(HolderEstimate {
        eta: least_squares(&points).0,
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Harmonic,
    FiniteEnergy,
    Fif,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Harmonic => "harmonic",
            BoundKind::FiniteEnergy => "energy",
            BoundKind::Fif => "fif",
        })
    }
}

impl FromStr for BoundKind {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(BoundKind::Harmonic),
            "energy" | "finite_energy" => Ok(BoundKind::FiniteEnergy),
            "fif" => Ok(BoundKind::Fif),
            other => Err(GasketError::InvalidInput(format!(
                "unknown bound kind {other:?}, expected harmonic, energy or fif"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub lower: f64,
    pub upper: f64,
    pub estimate: DimensionEstimate,
    pub tolerance: f64,
    pub within_bounds: bool,
}

impl BoundReport {
    pub fn new(
        kind: BoundKind,
        (lower, upper): (f64, f64),
        estimate: DimensionEstimate,
        tolerance: f64,
    ) -> Self {
        let within_bounds =
            estimate.slope >= lower - tolerance && estimate.slope <= upper + tolerance;
        BoundReport {
            kind,
            lower,
            upper,
            estimate,
            tolerance,
            within_bounds,
        }
    }

    pub fn to_json(&self) -> JsonObject {
        JsonObject::new()
            .string("kind", &self.kind.to_string())
            .real("lower", self.lower)
            .real("upper", self.upper)
            .object("estimate", self.estimate.to_json())
            .real("tolerance", self.tolerance)
            .boolean("within_bounds", self.within_bounds)
    }
}
