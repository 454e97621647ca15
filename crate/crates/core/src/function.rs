//! Real values on the canonical vertices of one gasket level.

use std::sync::Arc;

use crate::error::{GasketError, Result};
use crate::gasket::{GasketLevel, LatticeVertex};

/// A function sampled on `V_m`, stored in the level's canonical vertex order.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction {
    level: u32,
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(level: u32, values: Vec<f64>) -> Result<Self> {
        let topology = GasketLevel::shared(level)?;
        if values.len() != topology.vertex_count() {
            return Err(GasketError::InvalidInput(format!(
                "level {level} has {} vertices, got {} values",
                topology.vertex_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let v = topology.vertex(i);
            return Err(GasketError::InvalidInput(format!(
                "non-finite value at level-{level} vertex ({}, {})",
                v.a(),
                v.b()
            )));
        }
        Ok(VertexFunction { level, values })
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_raw(level: u32, values: Vec<f64>) -> Self {
        VertexFunction { level, values }
    }

    pub fn from_fn(level: u32, f: impl Fn(&LatticeVertex) -> f64) -> Result<Self> {
        let topology = GasketLevel::shared(level)?;
        VertexFunction::new(level, topology.vertices().map(|v| f(&v)).collect())
    }

    pub fn constant(level: u32, c: f64) -> Result<Self> {
        let topology = GasketLevel::shared(level)?;
        VertexFunction::new(level, vec![c; topology.vertex_count()])
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn topology(&self) -> Arc<GasketLevel> {
        GasketLevel::shared(self.level).expect("level validated at construction")
    }

    /// Value at a vertex of this level or of any coarser level.
    pub fn value_at(&self, v: &LatticeVertex) -> Option<f64> {
        let v = v.at_level(self.level).ok()?;
        self.topology().index_of(&v).map(|i| self.values[i])
    }

    /// Restriction to the coarser vertex set `V_level`.
    pub fn restrict(&self, level: u32) -> Result<VertexFunction> {
        if level == self.level {
            return Ok(self.clone());
        }
        let map = self.topology().inclusion_from(level)?;
        Ok(VertexFunction {
            level,
            values: map.iter().map(|&i| self.values[i]).collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Supremum over sampled vertices.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> VertexFunction {
        VertexFunction {
            level: self.level,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> VertexFunction {
        VertexFunction {
            level: self.level,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `self + c·other` on the same level.
    pub fn add_scaled(&self, c: f64, other: &VertexFunction) -> Result<VertexFunction> {
        if other.level != self.level {
            return Err(GasketError::LevelMismatch(format!(
                "cannot combine level {} with level {}",
                self.level, other.level
            )));
        }
        Ok(VertexFunction {
            level: self.level,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// Largest absolute difference to another function on the same level.
    pub fn sup_distance(&self, other: &VertexFunction) -> Result<f64> {
        Ok(other.add_scaled(-1.0, self)?.sup_norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(VertexFunction::new(1, vec![0.0; 5]).is_err());
        let mut values = vec![0.0; 6];
        values[2] = f64::NAN;
        assert!(VertexFunction::new(1, values).is_err());
    }

    #[test]
    fn restriction_keeps_coarse_values() {
        let u = VertexFunction::from_fn(5, |v| v.a() as f64 * 0.25 - v.b() as f64).unwrap();
        let coarse = u.restrict(2).unwrap();
        let topology = coarse.topology();
        for (i, v) in topology.vertices().enumerate() {
            let fine = v.at_level(5).unwrap();
            let expected = fine.a() as f64 * 0.25 - fine.b() as f64;
            assert_eq!(coarse.values()[i], expected);
            assert_eq!(u.value_at(&v), Some(expected));
        }
        assert!(coarse.restrict(3).is_err());
    }
}
