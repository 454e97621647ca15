//! Slow, independent reference computations for cross-checking the rest of
//! the crate.
//!
//! Nothing here goes through the recursive vertex ordering: vertices are found
//! from the odd entries of Pascal's triangle, edges from the cells, and the
//! harmonic problem is solved as a linear system.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GasketError, Result};
use crate::function::VertexFunction;
use crate::gasket::{apply_map, LatticeVertex, Symbol, Word};
use crate::harmonic::{harmonic_extend, BoundaryValues, HarmonicSpec};

/// Largest level accepted by the linear solver.
pub const ORACLE_LEVEL_CAP: u32 = 8;

/// Upward unit triangles of the level-m lattice that belong to the gasket,
/// keyed by their lower-left corner.
fn is_cell(m: u32, a: u32, b: u32) -> bool {
    a & b == 0 && (a as u64 + b as u64) < (1u64 << m)
}

fn is_vertex(m: u32, a: u32, b: u32) -> bool {
    is_cell(m, a, b) || (a > 0 && is_cell(m, a - 1, b)) || (b > 0 && is_cell(m, a, b - 1))
}

/// Level-m graph built from the lattice description alone.
struct LatticeGraph {
    vertices: Vec<(u32, u32)>,
    edges: Vec<(usize, usize)>,
}

impl LatticeGraph {
    fn new(m: u32) -> Self {
        let side = 1u32 << m;
        let mut vertices = Vec::new();
        for b in 0..=side {
            for a in 0..=side - b {
                if is_vertex(m, a, b) {
                    vertices.push((a, b));
                }
            }
        }
        let index: HashMap<_, _> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = Vec::new();
        for &(a, b) in &vertices {
            if is_cell(m, a, b) {
                let p = index[&(a, b)];
                let q = index[&(a + 1, b)];
                let r = index[&(a, b + 1)];
                edges.extend([(p, q), (p, r), (q, r)]);
            }
        }
        LatticeGraph { vertices, edges }
    }

    fn corners(m: u32) -> [(u32, u32); 3] {
        let side = 1u32 << m;
        [(0, 0), (side, 0), (0, side)]
    }

    fn energy(&self, values: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(p, q)| (values[p] - values[q]).powi(2))
            .sum()
    }
}

/// Lower band of a symmetric positive definite matrix, row-major with
/// `width + 1` entries per row; entry `(i, j)`, `i - width <= j <= i`, sits at
/// `i * (width + 1) + (j + width - i)`.
struct BandedCholesky {
    n: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.width + 1) + (j + self.width - i)
    }

    fn factor(n: usize, width: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = BandedCholesky {
            n,
            width,
            data: vec![0.0; n * (width + 1)],
        };
        for &(i, j, v) in entries {
            let (i, j) = if i >= j { (i, j) } else { (j, i) };
            let k = m.at(i, j);
            m.data[k] += v;
        }
        for i in 0..n {
            let lo = i.saturating_sub(width);
            for j in lo..=i {
                let mut sum = m.data[m.at(i, j)];
                let start = lo.max(j.saturating_sub(width));
                for k in start..j {
                    sum -= m.data[m.at(i, k)] * m.data[m.at(j, k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(GasketError::Domain(
                            "harmonic system is not positive definite".into(),
                        ));
                    }
                    let k = m.at(i, i);
                    m.data[k] = sum.sqrt();
                } else {
                    let k = m.at(i, j);
                    m.data[k] = sum / m.data[m.at(j, j)];
                }
            }
        }
        Ok(m)
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &mut [f64]) {
        for i in 0..self.n {
            let mut sum = rhs[i];
            for k in i.saturating_sub(self.width)..i {
                sum -= self.data[self.at(i, k)] * rhs[k];
            }
            rhs[i] = sum / self.data[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut sum = rhs[i];
            for k in i + 1..(i + self.width + 1).min(self.n) {
                sum -= self.data[self.at(k, i)] * rhs[k];
            }
            rhs[i] = sum / self.data[self.at(i, i)];
        }
    }
}

/// Factored Dirichlet problem for one level; reusable across boundary data.
pub struct HarmonicSolver {
    level: u32,
    graph: LatticeGraph,
    /// Position of each vertex among the unknowns, `None` for corners.
    unknown: Vec<Option<usize>>,
    /// Edges joining an unknown to a corner: (unknown, corner number).
    corner_links: Vec<(usize, usize)>,
    factor: BandedCholesky,
}

impl HarmonicSolver {
    pub fn new(level: u32) -> Result<Self> {
        if level > ORACLE_LEVEL_CAP {
            return Err(GasketError::LevelTooLarge {
                level,
                cap: ORACLE_LEVEL_CAP,
            });
        }
        let graph = LatticeGraph::new(level);
        let corners = LatticeGraph::corners(level);
        let corner_of = |v: (u32, u32)| corners.iter().position(|&c| c == v);
        let mut unknown = Vec::with_capacity(graph.vertices.len());
        let mut count = 0usize;
        for &v in &graph.vertices {
            if corner_of(v).is_some() {
                unknown.push(None);
            } else {
                unknown.push(Some(count));
                count += 1;
            }
        }

        // Σ_{y ~ x} (u(x) - u(y)) = 0 at every non-corner x
        let mut entries = Vec::new();
        let mut corner_links = Vec::new();
        let mut width = 0;
        for &(p, q) in &graph.edges {
            match (unknown[p], unknown[q]) {
                (Some(i), Some(j)) => {
                    entries.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0)]);
                    width = width.max(i.abs_diff(j));
                }
                (Some(i), None) => {
                    entries.push((i, i, 1.0));
                    corner_links.push((i, corner_of(graph.vertices[q]).expect("corner")));
                }
                (None, Some(j)) => {
                    entries.push((j, j, 1.0));
                    corner_links.push((j, corner_of(graph.vertices[p]).expect("corner")));
                }
                (None, None) => {}
            }
        }
        let factor = BandedCholesky::factor(count, width, &entries)?;
        Ok(HarmonicSolver {
            level,
            graph,
            unknown,
            corner_links,
            factor,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn solve(&self, boundary: &BoundaryValues) -> Result<VertexFunction> {
        let pinned = boundary.as_array();
        let mut rhs = vec![0.0; self.factor.n];
        for &(i, c) in &self.corner_links {
            rhs[i] += pinned[c];
        }
        self.factor.solve(&mut rhs);
        let corners = LatticeGraph::corners(self.level);
        let values: HashMap<(u32, u32), f64> = self
            .graph
            .vertices
            .iter()
            .zip(&self.unknown)
            .map(|(&v, slot)| {
                let value = match slot {
                    Some(i) => rhs[*i],
                    None => pinned[corners.iter().position(|&c| c == v).expect("corner")],
                };
                (v, value)
            })
            .collect();
        VertexFunction::from_fn(self.level, |v| values[&(v.a(), v.b())])
    }
}

/// Minimizer of the crude level-m energy with the corners pinned.
pub fn solve_harmonic_linear(boundary: &BoundaryValues, m: u32) -> Result<VertexFunction> {
    HarmonicSolver::new(m)?.solve(boundary)
}

/// Whether `trials` random interior perturbations of the harmonic extension
/// all have crude energy at least as large as the extension itself.
pub fn brute_min_energy_check(
    boundary: &BoundaryValues,
    m: u32,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    let h = harmonic_extend(&HarmonicSpec::new(*boundary), m)?;
    brute_min_energy_check_of(&h, trials, seed)
}

/// As [`brute_min_energy_check`] for an arbitrary candidate minimizer.
pub fn brute_min_energy_check_of(u: &VertexFunction, trials: usize, seed: u64) -> Result<bool> {
    let m = u.level();
    if m > 6 {
        return Err(GasketError::LevelTooLarge { level: m, cap: 6 });
    }
    let graph = LatticeGraph::new(m);
    let corners = LatticeGraph::corners(m);
    let base: Vec<f64> = graph
        .vertices
        .iter()
        .map(|&(a, b)| {
            u.value_at(&LatticeVertex::new(m, a, b)?)
                .ok_or(GasketError::InvalidVertex { level: m, a, b })
        })
        .collect::<Result<_>>()?;
    let energy = graph.energy(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let scale = 10f64.powf(rng.gen_range(-3.0..0.0));
        let trial: Vec<f64> = graph
            .vertices
            .iter()
            .zip(&base)
            .map(|(v, &x)| {
                if corners.contains(v) {
                    x
                } else {
                    x + scale * rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        if graph.energy(&trial) < energy {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCheckReport {
    pub worst_ratio: f64,
    /// Level and pair at which the worst ratio occurs.
    pub worst: Option<(u32, LatticeVertex, LatticeVertex)>,
    pub all_within: bool,
}

/// Ratios `|u(x) - u(y)| / bound(m')` over every pair of corners of every
/// level-m' cell, `m' <= level(u)`. Cells are generated from their words.
pub fn exhaustive_pair_check(
    u: &VertexFunction,
    bound: impl Fn(u32) -> f64,
) -> Result<PairCheckReport> {
    let corners = Symbol::ALL.map(|s| LatticeVertex::corner(0, s));
    let mut report = PairCheckReport {
        worst_ratio: 0.0,
        worst: None,
        all_within: true,
    };
    for m in 0..=u.level() {
        let limit = bound(m);
        for word in Word::all(m as usize) {
            let mut cell = [corners[0]; 3];
            let mut values = [0.0; 3];
            for j in 0..3 {
                cell[j] = apply_map(&word, &corners[j])?;
                values[j] = u.value_at(&cell[j]).ok_or(GasketError::InvalidVertex {
                    level: m,
                    a: cell[j].a(),
                    b: cell[j].b(),
                })?;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let diff = (values[p] - values[q]).abs();
                let ratio = if diff == 0.0 { 0.0 } else { diff / limit };
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.worst = Some((m, cell[p], cell[q]));
                }
            }
        }
    }
    report.all_within = report.worst_ratio <= 1.0;
    Ok(report)
}
