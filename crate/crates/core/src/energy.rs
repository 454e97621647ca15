//! Crude and renormalized graph energies.
//!
//! `E^(m)(u)` sums `|u(x) - u(y)|²` over all pairs of vertices sharing a
//! level-m cell, and `ℰ^(m)(u) = (5/3)^m E^(m)(u)`. For restrictions of one
//! function the renormalized values never decrease with `m`; the energy of
//! the function is their limit, which is only ever reported through finite
//! levels here.

use crate::error::{GasketError, Result};
use crate::function::VertexFunction;
use crate::gasket::LatticeVertex;
use crate::harmonic::agrees;

/// Relative slack allowed when checking that a series does not decrease.
pub const MONOTONE_RTOL: f64 = 1e-9;

/// Relative tolerance for level-to-level consistency of a sampler.
pub const SAMPLER_TOL: f64 = 1e-12;

pub fn renormalization(level: u32) -> f64 {
    (5.0f64 / 3.0).powi(level as i32)
}

pub fn crude_energy(u: &VertexFunction) -> f64 {
    let values = u.values();
    let mut total = 0.0;
    for &[x, y, z] in u.topology().cell_corners() {
        let (ux, uy, uz) = (values[x as usize], values[y as usize], values[z as usize]);
        total += (ux - uy).powi(2) + (ux - uz).powi(2) + (uy - uz).powi(2);
    }
    total
}

pub fn renormalized_energy(u: &VertexFunction) -> f64 {
    renormalization(u.level()) * crude_energy(u)
}

/// `√ℰ^(m)(u)` at the function's own level.
pub fn energy_norm(u: &VertexFunction) -> f64 {
    renormalized_energy(u).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyEntry {
    pub m: u32,
    pub crude: f64,
    pub renormalized: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergySeries {
    pub entries: Vec<EnergyEntry>,
}

impl EnergySeries {
    pub fn push(&mut self, u: &VertexFunction) {
        let crude = crude_energy(u);
        self.entries.push(EnergyEntry {
            m: u.level(),
            crude,
            renormalized: renormalization(u.level()) * crude,
        });
    }

    /// Whether the renormalized column is non-decreasing up to [`MONOTONE_RTOL`].
    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| {
            let (prev, next) = (w[0].renormalized, w[1].renormalized);
            next >= prev - MONOTONE_RTOL * prev.abs()
        })
    }

    /// The finest computed level's value: a lower estimate of the energy.
    pub fn lower_estimate(&self) -> Option<f64> {
        self.entries.last().map(|e| e.renormalized)
    }

    /// Finite-level membership test for the finite-energy domain.
    pub fn bounded_by(&self, cap: f64) -> bool {
        self.entries.iter().all(|e| e.renormalized <= cap)
    }
}

/// Anything that yields restrictions of one function to every level.
pub trait LevelSampler {
    fn sample(&self, level: u32) -> Result<VertexFunction>;
}

impl LevelSampler for VertexFunction {
    fn sample(&self, level: u32) -> Result<VertexFunction> {
        self.restrict(level)
    }
}

/// Adapts a closure into a [`LevelSampler`].
pub struct FnSampler<F>(pub F);

impl<F: Fn(u32) -> Result<VertexFunction>> LevelSampler for FnSampler<F> {
    fn sample(&self, level: u32) -> Result<VertexFunction> {
        (self.0)(level)
    }
}

/// Samples levels `0..=m_max` and records their energies, rejecting samplers
/// whose value at a vertex changes between consecutive levels.
pub fn energy_series(sampler: &dyn LevelSampler, m_max: u32) -> Result<EnergySeries> {
    let mut series = EnergySeries::default();
    let mut previous: Option<VertexFunction> = None;
    for m in 0..=m_max {
        let u = sampler.sample(m)?;
        if u.level() != m {
            return Err(GasketError::LevelMismatch(format!(
                "sampler returned level {} when asked for {m}",
                u.level()
            )));
        }
        if let Some(coarse) = &previous {
            check_consistent(coarse, &u.restrict(m - 1)?)?;
        }
        series.push(&u);
        previous = Some(u);
    }
    Ok(series)
}

fn check_consistent(coarse: &VertexFunction, restricted: &VertexFunction) -> Result<()> {
    let topology = coarse.topology();
    for (i, (&c, &f)) in coarse.values().iter().zip(restricted.values()).enumerate() {
        if !agrees(c, f, SAMPLER_TOL) {
            let v = topology.vertex(i);
            return Err(GasketError::InconsistentSampler {
                level: coarse.level(),
                a: v.a(),
                b: v.b(),
                coarse: c,
                fine: f,
            });
        }
    }
    Ok(())
}

/// Energies of the restrictions of `u` to the given levels.
pub fn energy_series_of(
    u: &VertexFunction,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<EnergySeries> {
    let mut series = EnergySeries::default();
    for m in levels {
        series.push(&u.restrict(m)?);
    }
    Ok(series)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairViolation {
    pub level: u32,
    pub x: LatticeVertex,
    pub y: LatticeVertex,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    /// Energy value used in the bound.
    pub energy: f64,
    pub max_ratio: f64,
    /// Level and pair where the largest ratio occurs.
    pub worst: Option<PairViolation>,
    pub violations: Vec<PairViolation>,
}

impl HolderReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|u(x) - u(y)| <= (3/5)^(m'/2) √ℰ(u)` for every same-cell pair at
/// every level `m' <= level(u)`, with `ℰ(u)` the energy at u's own level.
pub fn holder_bound_check(u: &VertexFunction) -> Result<HolderReport> {
    holder_bound_check_with_energy(u, renormalized_energy(u))
}

/// As [`holder_bound_check`] with an externally supplied energy value.
pub fn holder_bound_check_with_energy(u: &VertexFunction, energy: f64) -> Result<HolderReport> {
    let root = energy.max(0.0).sqrt();
    let mut report = HolderReport {
        energy,
        max_ratio: 0.0,
        worst: None,
        violations: Vec::new(),
    };
    for m in 0..=u.level() {
        let restricted = u.restrict(m)?;
        let topology = restricted.topology();
        let values = restricted.values();
        let bound = 0.6f64.powf(m as f64 / 2.0) * root;
        for (p, q) in topology.edges() {
            let diff = (values[p] - values[q]).abs();
            let ratio = if diff == 0.0 {
                0.0
            } else if bound == 0.0 {
                f64::INFINITY
            } else {
                diff / bound
            };
            let pair = || PairViolation {
                level: m,
                x: topology.vertex(p),
                y: topology.vertex(q),
                ratio,
            };
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.worst = Some(pair());
            }
            if ratio > 1.0 + 1e-12 {
                report.violations.push(pair());
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{harmonic_extend, BoundaryValues, HarmonicSpec};

    fn h100(m: u32) -> VertexFunction {
        harmonic_extend(
            &HarmonicSpec::new(BoundaryValues::new(1.0, 0.0, 0.0).unwrap()),
            m,
        )
        .unwrap()
    }

    #[test]
    fn crude_energy_examples() {
        assert_eq!(
            crude_energy(&VertexFunction::constant(4, 3.0).unwrap()),
            0.0
        );
        assert_eq!(crude_energy(&h100(0)), 2.0);
        assert!((crude_energy(&h100(1)) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn renormalized_energy_examples() {
        assert_eq!(
            renormalized_energy(&VertexFunction::constant(3, -1.0).unwrap()),
            0.0
        );
        assert!((renormalized_energy(&h100(1)) - 2.0).abs() < 1e-14);
        assert!((renormalized_energy(&h100(5)) - 2.0).abs() < 2e-9);
    }

    #[test]
    fn energy_norm_examples() {
        assert_eq!(energy_norm(&VertexFunction::constant(2, 7.0).unwrap()), 0.0);
        for m in [0, 3, 7] {
            assert!((energy_norm(&h100(m)) - 2f64.sqrt()).abs() < 1e-9);
        }
        let u = h100(4);
        let scaled = u.scaled(-3.0);
        assert!((energy_norm(&scaled) - 3.0 * energy_norm(&u)).abs() < 1e-12);
    }

    #[test]
    fn series_of_harmonic_and_constant() {
        let h = h100(8);
        let series = energy_series(&h, 8).unwrap();
        assert!(series.is_monotone());
        for e in &series.entries {
            assert!((e.renormalized - 2.0).abs() <= 2.0 * 1e-9);
        }
        let c = VertexFunction::constant(5, 1.5).unwrap();
        let series = energy_series(&c, 5).unwrap();
        assert!(series
            .entries
            .iter()
            .all(|e| e.crude == 0.0 && e.renormalized == 0.0));
        assert_eq!(series.lower_estimate(), Some(0.0));
    }

    #[test]
    fn inconsistent_sampler_rejected() {
        let sampler = FnSampler(|m: u32| VertexFunction::constant(m, m as f64));
        assert!(matches!(
            energy_series(&sampler, 3),
            Err(GasketError::InconsistentSampler { level: 0, .. })
        ));
    }

    #[test]
    fn holder_check_examples() {
        let c = VertexFunction::constant(6, 2.0).unwrap();
        assert_eq!(holder_bound_check(&c).unwrap().max_ratio, 0.0);

        let report = holder_bound_check(&h100(8)).unwrap();
        assert!(report.holds());
        assert!(report.max_ratio <= 1.0);

        // +10 at one interior vertex, bound still uses the unperturbed energy 2
        let h = h100(6);
        let mut values = h.values().to_vec();
        let index = 400;
        let target = h.topology().vertex(index);
        values[index] += 10.0;
        let perturbed = VertexFunction::new(6, values).unwrap();
        let report = holder_bound_check_with_energy(&perturbed, 2.0).unwrap();
        assert!(!report.holds());
        assert!(report
            .violations
            .iter()
            .any(|v| v.level == 6 && (v.x == target || v.y == target)));
        // with its own energy the perturbed function satisfies the bound
        assert!(holder_bound_check(&perturbed).unwrap().holds());
    }
}
