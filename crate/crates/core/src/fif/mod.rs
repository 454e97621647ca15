//! α-fractal interpolation functions on the gasket.
//!
//! For a seed `f`, a base `b` with `b(q_i) = f(q_i)` and scalings
//! `α_ω` (one per word of length `n`), the fractal function is the unique
//! continuous solution of
//!
//! ```text
//! f^α(L_ω x) = f(L_ω x) + α_ω (f^α(x) - b(x))
//! ```
//!
//! The construction here materializes `f^α` on `V_M` by applying this
//! equation to the values already known on `V_{M-n}`, starting from the
//! three corners where `f^α = f`.

mod provider;

pub use provider::{check_compatible, sample_pointwise, FunctionProvider};

use crate::energy::{energy_norm, LevelSampler};
use crate::error::{GasketError, Result};
use crate::function::VertexFunction;
use crate::gasket::{check_level, level_metas, GasketLevel, Word};
use crate::harmonic::agrees;

/// Relative tolerance for values meeting at a shared image vertex.
pub const SHARED_IMAGE_TOL: f64 = 1e-12;

/// Scaling factors `α_ω`, listed in lexicographic word order.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSpec {
    n: u32,
    alphas: Vec<f64>,
    sup_norm: f64,
}

impl AlphaSpec {
    pub fn new(n: u32, alphas: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(GasketError::InvalidInput(
                "interpolation depth n must be positive".into(),
            ));
        }
        check_level(n)?;
        let expected = 3usize.pow(n);
        if alphas.len() != expected {
            return Err(GasketError::InvalidInput(format!(
                "n = {n} needs {expected} scaling factors, got {}",
                alphas.len()
            )));
        }
        if let Some(bad) = alphas.iter().find(|a| a.is_nan() || a.abs() >= 1.0) {
            return Err(GasketError::InvalidInput(format!(
                "scaling factor {bad} is outside (-1, 1)"
            )));
        }
        let sup_norm = alphas.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
        Ok(AlphaSpec {
            n,
            alphas,
            sup_norm,
        })
    }

    pub fn uniform(n: u32, alpha: f64) -> Result<Self> {
        AlphaSpec::new(n, vec![alpha; 3usize.pow(n)])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn get(&self, word: &Word) -> f64 {
        self.alphas[word.index()]
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `Σ |α_ω|`.
    pub fn psi(&self) -> f64 {
        self.alphas.iter().map(|a| a.abs()).sum()
    }

    /// `Σ α_ω`; differs from [`AlphaSpec::psi`] when some factor is negative.
    pub fn psi_signed(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn has_negative(&self) -> bool {
        self.alphas.iter().any(|&a| a < 0.0)
    }

    /// `3·5^n·‖α‖²_∞`, the contraction constant of the energy estimate.
    pub fn energy_factor(&self) -> f64 {
        3.0 * 5f64.powi(self.n as i32) * self.sup_norm * self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }
}

/// How the base function is derived from the seed.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    /// `b` is the harmonic function through `f`'s corner values.
    HarmonicInterpolant,
    /// `b = f + c·(g − f)` where `g` agrees with `f` at the corners.
    ScaledBlend { c: f64, g: FunctionProvider },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// Caller-supplied `‖T‖`, used only when evaluating closed-form bounds.
    pub operator_norm_bound: f64,
}

impl OperatorSpec {
    pub fn harmonic_interpolant(operator_norm_bound: f64) -> Self {
        OperatorSpec {
            kind: OperatorKind::HarmonicInterpolant,
            operator_norm_bound,
        }
    }

    pub fn scaled_blend(c: f64, g: FunctionProvider, operator_norm_bound: f64) -> Self {
        OperatorSpec {
            kind: OperatorKind::ScaledBlend { c, g },
            operator_norm_bound,
        }
    }

    /// `T(f)`.
    pub fn apply(&self, f: &FunctionProvider) -> Result<FunctionProvider> {
        match &self.kind {
            OperatorKind::HarmonicInterpolant => f.harmonic_interpolant(),
            OperatorKind::ScaledBlend { c, g } => {
                check_compatible(f, g, SHARED_IMAGE_TOL)?;
                Ok(FunctionProvider::affine(
                    vec![(1.0 - c, f.clone()), (*c, g.clone())],
                    0.0,
                ))
            }
        }
    }
}

/// One application of the functional equation: values on `V_k` to `V_{k+n}`.
pub fn rb_refine(
    current: &VertexFunction,
    f: &FunctionProvider,
    b: &FunctionProvider,
    alpha: &AlphaSpec,
) -> Result<VertexFunction> {
    check_compatible(f, b, SHARED_IMAGE_TOL)?;
    let k = current.level();
    let target = k + alpha.n();
    check_level(target)?;

    let corners = f.corner_values()?;
    let coarse = current.topology();
    for (i, &c) in coarse.meta().corners.iter().enumerate() {
        let have = current.values()[c];
        if !agrees(have, corners[i], SHARED_IMAGE_TOL) {
            return Err(GasketError::IncompatibleBase {
                corner: i + 1,
                f: corners[i],
                b: have,
            });
        }
    }

    let f_fine = f.sample(target)?;
    let b_coarse = b.sample(k)?;
    let fine = GasketLevel::shared(target)?;
    let metas = level_metas(target);
    let mut out = vec![f64::NAN; fine.vertex_count()];
    let source = current.values();
    let base = b_coarse.values();
    let f_values = f_fine.values();

    for (w, &a) in alpha.alphas().iter().enumerate() {
        let word = Word::from_index(alpha.n() as usize, w);
        for j in 0..source.len() {
            let mut index = j;
            for (step, s) in word.symbols().iter().rev().enumerate() {
                index = metas[k as usize + step].image(*s, index);
            }
            let value = f_values[index] + a * (source[j] - base[j]);
            let slot = &mut out[index];
            if slot.is_nan() {
                *slot = value;
            } else if !agrees(*slot, value, SHARED_IMAGE_TOL) {
                let v = fine.vertex(index);
                return Err(GasketError::SharedImageMismatch {
                    level: target,
                    a: v.a(),
                    b: v.b(),
                    first: *slot,
                    second: value,
                });
            }
        }
    }
    VertexFunction::new(target, out)
}

/// `f^α` sampled on `V_level`, together with the data that defines it.
#[derive(Clone, Debug)]
pub struct FifInstance {
    pub f: FunctionProvider,
    pub b: FunctionProvider,
    pub alpha: AlphaSpec,
    pub operator: Option<OperatorSpec>,
    pub values: VertexFunction,
}

/// Iterates [`rb_refine`] from the corners until level `level`.
pub fn build_fif(
    f: &FunctionProvider,
    b: &FunctionProvider,
    alpha: &AlphaSpec,
    level: u32,
) -> Result<FifInstance> {
    check_level(level)?;
    if !level.is_multiple_of(alpha.n()) {
        return Err(GasketError::LevelMismatch(format!(
            "level {level} is not a multiple of n = {}",
            alpha.n()
        )));
    }
    check_compatible(f, b, SHARED_IMAGE_TOL)?;
    let mut values = f.sample(0)?;
    while values.level() < level {
        values = rb_refine(&values, f, b, alpha)?;
    }
    Ok(FifInstance {
        f: f.clone(),
        b: b.clone(),
        alpha: alpha.clone(),
        operator: None,
        values,
    })
}

/// [`build_fif`] with `b = T(f)`.
pub fn build_fif_with_operator(
    f: &FunctionProvider,
    operator: &OperatorSpec,
    alpha: &AlphaSpec,
    level: u32,
) -> Result<FifInstance> {
    let b = operator.apply(f)?;
    let mut instance = build_fif(f, &b, alpha, level)?;
    instance.operator = Some(operator.clone());
    Ok(instance)
}

impl FifInstance {
    pub fn level(&self) -> u32 {
        self.values.level()
    }

    /// Whether the interpolation points `(q_ω, f(q_ω))`, `|ω| = n`, lie on one
    /// plane. Lattice coordinates are barycentric, so the plane through the
    /// three corner points is evaluated directly.
    pub fn interpolation_coplanar(&self) -> Result<bool> {
        let n = self.alpha.n();
        let [z1, z2, z3] = self.f.corner_values()?;
        let side = (n as f64).exp2();
        let level = GasketLevel::shared(n)?;
        let values = self.f.sample(n)?;
        let scale = values.sup_norm().max(1.0);
        let coplanar = level.vertices().zip(values.values()).all(|(v, &z)| {
            let plane = z1 + (z2 - z1) * v.a() as f64 / side + (z3 - z1) * v.b() as f64 / side;
            (z - plane).abs() <= 1e-12 * scale
        });
        Ok(coplanar)
    }
}

impl LevelSampler for FifInstance {
    fn sample(&self, level: u32) -> Result<VertexFunction> {
        self.values.restrict(level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCondition {
    pub holds: bool,
    pub threshold: f64,
}

/// `‖α‖_∞ <= 1/√(3·5^n)`, the sufficient condition for finite energy.
pub fn check_energy_condition(alpha: &AlphaSpec) -> EnergyCondition {
    let threshold = (3.0 * 5f64.powi(alpha.n() as i32)).sqrt().recip();
    EnergyCondition {
        holds: alpha.sup_norm() <= threshold,
        threshold,
    }
}

/// `√((3 + 3·5^n‖α‖²‖T‖) / (1 − 3·5^n‖α‖²))`.
pub fn operator_norm_bound(alpha: &AlphaSpec, t_norm: f64) -> Result<f64> {
    let factor = alpha.energy_factor();
    let denominator = 1.0 - factor;
    if denominator <= 0.0 {
        return Err(GasketError::Domain(format!(
            "1 - 3·5^n·‖α‖² = {denominator} is not positive"
        )));
    }
    Ok(((3.0 + factor * t_norm) / denominator).sqrt())
}

/// Finite-level energy cap `(3ℰ(f) + 3·5^n‖α‖²‖T‖ℰ(f)) / (1 − 3·5^n‖α‖²)`.
pub fn energy_cap(alpha: &AlphaSpec, seed_energy: f64, t_norm: f64) -> Result<f64> {
    let factor = alpha.energy_factor();
    let denominator = 1.0 - factor;
    if denominator <= 0.0 {
        return Err(GasketError::Domain(format!(
            "1 - 3·5^n·‖α‖² = {denominator} is not positive"
        )));
    }
    Ok((3.0 * seed_energy + factor * t_norm * seed_energy) / denominator)
}

/// Both sides of `‖f^α − f‖ <= ‖α‖²_∞ 3^n ‖f^α − b‖` at the instance level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationReport {
    pub level: u32,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, absent when `rhs` is zero.
    pub ratio: Option<f64>,
}

pub fn perturbation_report(instance: &FifInstance) -> Result<PerturbationReport> {
    let level = instance.level();
    let f = instance.f.sample(level)?;
    let b = instance.b.sample(level)?;
    let lhs = energy_norm(&instance.values.add_scaled(-1.0, &f)?);
    let s = instance.alpha.sup_norm();
    let rhs = s
        * s
        * 3f64.powi(instance.alpha.n() as i32)
        * energy_norm(&instance.values.add_scaled(-1.0, &b)?);
    Ok(PerturbationReport {
        level,
        lhs,
        rhs,
        ratio: (rhs != 0.0).then(|| lhs / rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::LatticeVertex;

    fn coord_x_example(level: u32) -> FifInstance {
        let f = FunctionProvider::CoordinateX;
        let b = FunctionProvider::harmonic(0.0, 1.0, 0.5).unwrap();
        build_fif(&f, &b, &AlphaSpec::uniform(1, 0.2).unwrap(), level).unwrap()
    }

    #[test]
    fn alpha_validation() {
        assert!(AlphaSpec::new(1, vec![0.1, 0.2]).is_err());
        assert!(AlphaSpec::new(1, vec![0.1, 1.0, 0.2]).is_err());
        assert!(AlphaSpec::new(0, vec![0.1]).is_err());
        let a = AlphaSpec::new(1, vec![0.1, -0.5, 0.2]).unwrap();
        assert_eq!(a.sup_norm(), 0.5);
        assert!((a.psi() - 0.8).abs() < 1e-15);
        assert!((a.psi_signed() + 0.2).abs() < 1e-15);
        assert!(a.has_negative());
    }

    #[test]
    fn zero_alpha_reproduces_seed() {
        let f: FunctionProvider = "coordinate_x + 0.5*coordinate_y".parse().unwrap();
        let b = f.harmonic_interpolant().unwrap();
        let inst = build_fif(&f, &b, &AlphaSpec::uniform(1, 0.0).unwrap(), 4).unwrap();
        assert_eq!(inst.values, f.sample(4).unwrap());
    }

    #[test]
    fn seed_equal_base_is_fixed_point() {
        let f = FunctionProvider::harmonic(1.0, 0.0, 0.0).unwrap();
        let b = f.harmonic_interpolant().unwrap();
        let inst = build_fif(&f, &b, &AlphaSpec::uniform(1, 0.7).unwrap(), 6).unwrap();
        assert!(inst.values.sup_distance(&f.sample(6).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn hand_computed_value() {
        for level in [2, 4] {
            let inst = coord_x_example(level);
            let q113 = LatticeVertex::new(2, 0, 1).unwrap();
            assert!((inst.values.value_at(&q113).unwrap() - 0.095).abs() < 1e-15);
        }
        let one_step = rb_refine(
            &FunctionProvider::CoordinateX.sample(1).unwrap(),
            &FunctionProvider::CoordinateX,
            &FunctionProvider::harmonic(0.0, 1.0, 0.5).unwrap(),
            &AlphaSpec::uniform(1, 0.2).unwrap(),
        )
        .unwrap();
        let q113 = LatticeVertex::new(2, 0, 1).unwrap();
        assert!((one_step.value_at(&q113).unwrap() - 0.095).abs() < 1e-15);
    }

    #[test]
    fn incompatible_base_rejected() {
        let f = FunctionProvider::CoordinateX;
        let b = FunctionProvider::harmonic(0.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            build_fif(&f, &b, &AlphaSpec::uniform(1, 0.2).unwrap(), 2),
            Err(GasketError::IncompatibleBase { corner: 3, .. })
        ));
    }

    #[test]
    fn level_must_be_multiple_of_n() {
        let f = FunctionProvider::CoordinateY;
        let b = f.harmonic_interpolant().unwrap();
        assert!(build_fif(&f, &b, &AlphaSpec::uniform(2, 0.1).unwrap(), 3).is_err());
        assert!(build_fif(&f, &b, &AlphaSpec::uniform(2, 0.1).unwrap(), 4).is_ok());
    }

    #[test]
    fn corners_must_match_seed() {
        let f = FunctionProvider::CoordinateX;
        let b = f.harmonic_interpolant().unwrap();
        let wrong = VertexFunction::constant(0, 0.3).unwrap();
        assert!(rb_refine(&wrong, &f, &b, &AlphaSpec::uniform(1, 0.1).unwrap()).is_err());
    }

    #[test]
    fn energy_condition_examples() {
        let c = check_energy_condition(&AlphaSpec::uniform(1, 0.25).unwrap());
        assert!(c.holds);
        assert!((c.threshold - 0.258_198_889_747_161_1).abs() < 1e-12);
        assert!(!check_energy_condition(&AlphaSpec::uniform(1, 0.3).unwrap()).holds);
        let c = check_energy_condition(&AlphaSpec::uniform(2, 0.12).unwrap());
        assert!(!c.holds);
        assert!((c.threshold - 0.115_470_053_837_925_15).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        let zero = AlphaSpec::uniform(1, 0.0).unwrap();
        assert!((operator_norm_bound(&zero, 5.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let quarter = AlphaSpec::uniform(1, 0.25).unwrap();
        assert!((operator_norm_bound(&quarter, 1.0).unwrap() - 63f64.sqrt()).abs() < 1e-12);
        let edge = AlphaSpec::uniform(1, 0.2582).unwrap();
        assert!(matches!(
            operator_norm_bound(&edge, 1.0),
            Err(GasketError::Domain(_))
        ));
    }

    #[test]
    fn perturbation_examples() {
        let f = FunctionProvider::CoordinateX;
        let op = OperatorSpec::harmonic_interpolant(1.0);
        let zero =
            build_fif_with_operator(&f, &op, &AlphaSpec::uniform(1, 0.0).unwrap(), 4).unwrap();
        let r = perturbation_report(&zero).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, None));

        let h = FunctionProvider::harmonic(0.2, -0.4, 1.0).unwrap();
        let fixed =
            build_fif_with_operator(&h, &op, &AlphaSpec::uniform(1, 0.3).unwrap(), 5).unwrap();
        let r = perturbation_report(&fixed).unwrap();
        assert!(r.lhs < 1e-12 && r.rhs < 1e-12);
    }

    #[test]
    fn scaled_blend_requires_corner_agreement() {
        let f = FunctionProvider::CoordinateX;
        let g: FunctionProvider = "coordinate_x + coordinate_y - harmonic(0,0,0.8660254037844386)"
            .parse()
            .unwrap();
        let op = OperatorSpec::scaled_blend(0.5, g, 1.0);
        let b = op.apply(&f).unwrap();
        assert!(check_compatible(&f, &b, 1e-12).is_ok());
        let bad = OperatorSpec::scaled_blend(0.5, FunctionProvider::CoordinateY, 1.0);
        assert!(bad.apply(&f).is_err());
    }

    #[test]
    fn coplanarity() {
        assert!(coord_x_example(2).interpolation_coplanar().unwrap());
        let h = FunctionProvider::harmonic(1.0, 0.0, 0.0).unwrap();
        let inst = build_fif(&h, &h, &AlphaSpec::uniform(1, 0.2).unwrap(), 2).unwrap();
        assert!(!inst.interpolation_coplanar().unwrap());
    }
}
