//! Harmonic and piecewise-harmonic functions via the 1/5–2/5 midpoint rule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GasketError, Result};
use crate::function::VertexFunction;
use crate::gasket::{check_level, GasketLevel, LatticeVertex, Symbol, Word};

/// Relative tolerance when comparing prescribed values at a shared vertex.
pub const CONFORMITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValues {
    pub at_q1: f64,
    pub at_q2: f64,
    pub at_q3: f64,
}

impl BoundaryValues {
    pub fn new(at_q1: f64, at_q2: f64, at_q3: f64) -> Result<Self> {
        if !(at_q1.is_finite() && at_q2.is_finite() && at_q3.is_finite()) {
            return Err(GasketError::InvalidInput(
                "boundary values must be finite".into(),
            ));
        }
        Ok(BoundaryValues {
            at_q1,
            at_q2,
            at_q3,
        })
    }

    pub fn from_array([a, b, c]: [f64; 3]) -> Result<Self> {
        BoundaryValues::new(a, b, c)
    }

    pub fn constant(c: f64) -> Result<Self> {
        BoundaryValues::new(c, c, c)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.at_q1, self.at_q2, self.at_q3]
    }

    pub fn min(&self) -> f64 {
        self.at_q1.min(self.at_q2).min(self.at_q3)
    }

    pub fn max(&self) -> f64 {
        self.at_q1.max(self.at_q2).max(self.at_q3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicSpec {
    pub boundary: BoundaryValues,
}

impl HarmonicSpec {
    pub fn new(boundary: BoundaryValues) -> Self {
        HarmonicSpec { boundary }
    }
}

/// Boundary triples for every cell of a fixed partition level.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseHarmonicSpec {
    partition_level: u32,
    per_cell: Vec<BoundaryValues>,
}

#[derive(Serialize, Deserialize)]
struct PiecewiseFile {
    partition_level: u32,
    cells: BTreeMap<String, [f64; 3]>,
}

impl PiecewiseHarmonicSpec {
    /// `per_cell` lists the cells of level `partition_level` in lexicographic order.
    pub fn new(partition_level: u32, per_cell: Vec<BoundaryValues>) -> Result<Self> {
        check_level(partition_level)?;
        let expected = 3usize.pow(partition_level);
        if per_cell.len() != expected {
            return Err(GasketError::InvalidInput(format!(
                "partition level {partition_level} needs {expected} cell triples, got {}",
                per_cell.len()
            )));
        }
        Ok(PiecewiseHarmonicSpec {
            partition_level,
            per_cell,
        })
    }

    pub fn from_map(partition_level: u32, cells: &BTreeMap<Word, BoundaryValues>) -> Result<Self> {
        let per_cell = Word::all(partition_level as usize)
            .map(|w| {
                cells.get(&w).copied().ok_or_else(|| {
                    GasketError::InvalidInput(format!("missing boundary values for cell {w}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if cells.len() != per_cell.len() {
            return Err(GasketError::InvalidInput(format!(
                "cells of the wrong length in a level-{partition_level} partition"
            )));
        }
        PiecewiseHarmonicSpec::new(partition_level, per_cell)
    }

    /// Parses `{"partition_level": p, "cells": {"12": [a, b, c], ...}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: PiecewiseFile = serde_json::from_str(text)
            .map_err(|e| GasketError::InvalidInput(format!("piecewise spec: {e}")))?;
        let mut cells = BTreeMap::new();
        for (word, triple) in file.cells {
            cells.insert(word.parse::<Word>()?, BoundaryValues::from_array(triple)?);
        }
        PiecewiseHarmonicSpec::from_map(file.partition_level, &cells)
    }

    pub fn partition_level(&self) -> u32 {
        self.partition_level
    }

    pub fn per_cell(&self) -> &[BoundaryValues] {
        &self.per_cell
    }

    /// Assembles the level-p vertex values, failing at the first shared vertex
    /// whose prescribed values disagree.
    pub fn level_values(&self) -> Result<VertexFunction> {
        let topology = GasketLevel::shared(self.partition_level)?;
        let mut values = vec![f64::NAN; topology.vertex_count()];
        for (corners, boundary) in topology.cell_corners().iter().zip(&self.per_cell) {
            for (&v, value) in corners.iter().zip(boundary.as_array()) {
                let slot = &mut values[v as usize];
                if slot.is_nan() {
                    *slot = value;
                } else if !agrees(*slot, value, CONFORMITY_TOL) {
                    let vertex = topology.vertex(v as usize);
                    return Err(GasketError::ConformityViolation {
                        level: self.partition_level,
                        a: vertex.a(),
                        b: vertex.b(),
                        first: *slot,
                        second: value,
                    });
                }
            }
        }
        VertexFunction::new(self.partition_level, values)
    }
}

pub(crate) fn agrees(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

/// Midpoint values `[m12, m13, m23]` of a cell with corner values `[x, y, z]`.
pub fn midpoints([x, y, z]: [f64; 3]) -> [f64; 3] {
    [
        0.4 * x + 0.4 * y + 0.2 * z,
        0.4 * x + 0.2 * y + 0.4 * z,
        0.2 * x + 0.4 * y + 0.4 * z,
    ]
}

/// Boundary triples of the three children of a cell with corner values `p`.
pub fn child_boundaries(p: [f64; 3]) -> [[f64; 3]; 3] {
    let [m12, m13, m23] = midpoints(p);
    [[p[0], m12, m13], [m12, p[1], m23], [m13, m23, p[2]]]
}

/// Extends `u` one level down by applying the midpoint rule in every cell.
pub fn refine_harmonically(u: &VertexFunction) -> Result<VertexFunction> {
    let coarse = u.topology();
    let fine = GasketLevel::shared(u.level() + 1)?;
    let mut values = vec![0.0; fine.vertex_count()];
    let fine_cells = fine.cell_corners();
    let src = u.values();
    for (c, corners) in coarse.cell_corners().iter().enumerate() {
        let p = corners.map(|j| src[j as usize]);
        for (k, triple) in child_boundaries(p).iter().enumerate() {
            for (&v, &value) in fine_cells[3 * c + k].iter().zip(triple) {
                values[v as usize] = value;
            }
        }
    }
    Ok(VertexFunction::from_raw(u.level() + 1, values))
}

/// Piecewise-harmonic extension of a level-p function to level `m >= p`.
pub fn extend_to(u: &VertexFunction, m: u32) -> Result<VertexFunction> {
    check_level(m)?;
    if m < u.level() {
        return Err(GasketError::LevelMismatch(format!(
            "cannot extend a level-{} function to level {m}",
            u.level()
        )));
    }
    let mut current = u.clone();
    while current.level() < m {
        current = refine_harmonically(&current)?;
    }
    Ok(current)
}

/// The harmonic function with the given boundary values, sampled on `V_m`.
pub fn harmonic_extend(spec: &HarmonicSpec, m: u32) -> Result<VertexFunction> {
    check_level(m)?;
    let base = VertexFunction::new(0, spec.boundary.as_array().to_vec())?;
    extend_to(&base, m)
}

pub fn piecewise_harmonic_extend(spec: &PiecewiseHarmonicSpec, m: u32) -> Result<VertexFunction> {
    if m < spec.partition_level {
        return Err(GasketError::LevelMismatch(format!(
            "level {m} is coarser than the partition level {}",
            spec.partition_level
        )));
    }
    extend_to(&spec.level_values()?, m)
}

/// Value of the harmonic function at one vertex, computed along its address.
pub fn harmonic_value_at(boundary: &BoundaryValues, v: &LatticeVertex) -> f64 {
    let v = v.canonical();
    let mut triple = boundary.as_array();
    let (mut a, mut b) = (v.a(), v.b());
    for m in (1..=v.level()).rev() {
        let half = 1u32 << (m - 1);
        let symbol = if a + b <= half {
            Symbol::ONE
        } else if a >= half {
            a -= half;
            Symbol::TWO
        } else {
            b -= half;
            Symbol::THREE
        };
        triple = child_boundaries(triple)[symbol.position()];
    }
    match (a, b) {
        (0, 0) => triple[0],
        (1, 0) => triple[1],
        _ => triple[2],
    }
}
