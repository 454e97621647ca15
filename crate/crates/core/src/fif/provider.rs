//! Level-consistent seed and base functions.
//!
//! Providers are written and parsed with a small grammar:
//!
//! ```text
//! spec  := term (('+' | '-') term)*
//! term  := number '*' atom | number | atom
//! atom  := coordinate_x | coordinate_y | harmonic(A,B,C) | table(PATH)
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::energy::LevelSampler;
use crate::error::{GasketError, Result};
use crate::format::read_vertex_csv;
use crate::function::VertexFunction;
use crate::gasket::{embed, GasketLevel, LatticeVertex, Symbol};
use crate::harmonic::{harmonic_extend, harmonic_value_at, BoundaryValues, HarmonicSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionProvider {
    Harmonic(BoundaryValues),
    CoordinateX,
    CoordinateY,
    /// Tabulated values; evaluable on every level up to the table's own.
    VertexTable {
        source: String,
        table: Arc<VertexFunction>,
    },
    Affine {
        terms: Vec<(f64, FunctionProvider)>,
        constant: f64,
    },
}

impl FunctionProvider {
    pub fn harmonic(a: f64, b: f64, c: f64) -> Result<Self> {
        Ok(FunctionProvider::Harmonic(BoundaryValues::new(a, b, c)?))
    }

    pub fn table(source: impl Into<String>, table: VertexFunction) -> Self {
        FunctionProvider::VertexTable {
            source: source.into(),
            table: Arc::new(table),
        }
    }

    pub fn affine(terms: Vec<(f64, FunctionProvider)>, constant: f64) -> Self {
        FunctionProvider::Affine { terms, constant }
    }

    pub fn constant(c: f64) -> Self {
        FunctionProvider::affine(Vec::new(), c)
    }

    pub fn evaluate(&self, v: &LatticeVertex) -> Result<f64> {
        match self {
            FunctionProvider::Harmonic(boundary) => Ok(harmonic_value_at(boundary, v)),
            FunctionProvider::CoordinateX => Ok(embed(v)[0]),
            FunctionProvider::CoordinateY => Ok(embed(v)[1]),
            FunctionProvider::VertexTable { source, table } => {
                let v = v.canonical();
                if v.level() > table.level() {
                    return Err(GasketError::LevelMismatch(format!(
                        "table {source} stops at level {}, vertex needs level {}",
                        table.level(),
                        v.level()
                    )));
                }
                table.value_at(&v).ok_or(GasketError::InvalidVertex {
                    level: v.level(),
                    a: v.a(),
                    b: v.b(),
                })
            }
            FunctionProvider::Affine { terms, constant } => terms
                .iter()
                .try_fold(*constant, |acc, (c, p)| Ok(acc + c * p.evaluate(v)?)),
        }
    }

    /// Values on `V_level`.
    pub fn sample(&self, level: u32) -> Result<VertexFunction> {
        match self {
            FunctionProvider::Harmonic(boundary) => {
                harmonic_extend(&HarmonicSpec::new(*boundary), level)
            }
            FunctionProvider::CoordinateX | FunctionProvider::CoordinateY => {
                let axis = usize::from(*self == FunctionProvider::CoordinateY);
                VertexFunction::from_fn(level, |v| embed(v)[axis])
            }
            FunctionProvider::VertexTable { source, table } => {
                if level > table.level() {
                    return Err(GasketError::LevelMismatch(format!(
                        "table {source} stops at level {}, asked for level {level}",
                        table.level()
                    )));
                }
                table.restrict(level)
            }
            FunctionProvider::Affine { terms, constant } => {
                let mut out = VertexFunction::constant(level, *constant)?;
                for (c, p) in terms {
                    out = out.add_scaled(*c, &p.sample(level)?)?;
                }
                Ok(out)
            }
        }
    }

    pub fn corner_values(&self) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (slot, s) in out.iter_mut().zip(Symbol::ALL) {
            *slot = self.evaluate(&LatticeVertex::corner(0, s))?;
        }
        Ok(out)
    }

    /// The harmonic function through this provider's corner values.
    pub fn harmonic_interpolant(&self) -> Result<FunctionProvider> {
        Ok(FunctionProvider::Harmonic(BoundaryValues::from_array(
            self.corner_values()?,
        )?))
    }

    /// Parses a provider spec, reading `table(PATH)` files relative to `base_dir`.
    pub fn parse_with_base(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut parser = Parser {
            chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
            base_dir,
        };
        let out = parser.expr()?;
        if parser.pos != parser.chars.len() {
            return Err(parser.error("trailing characters"));
        }
        Ok(out)
    }
}

impl LevelSampler for FunctionProvider {
    fn sample(&self, level: u32) -> Result<VertexFunction> {
        FunctionProvider::sample(self, level)
    }
}

impl FromStr for FunctionProvider {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        FunctionProvider::parse_with_base(s, None)
    }
}

impl fmt::Display for FunctionProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionProvider::Harmonic(b) => {
                write!(f, "harmonic({},{},{})", b.at_q1, b.at_q2, b.at_q3)
            }
            FunctionProvider::CoordinateX => write!(f, "coordinate_x"),
            FunctionProvider::CoordinateY => write!(f, "coordinate_y"),
            FunctionProvider::VertexTable { source, .. } => write!(f, "table({source})"),
            FunctionProvider::Affine { terms, constant } => {
                let mut first = true;
                for (c, p) in terms {
                    write_signed(f, *c, first)?;
                    write!(f, "*{p}")?;
                    first = false;
                }
                if first || *constant != 0.0 {
                    write_signed(f, *constant, first)?;
                }
                Ok(())
            }
        }
    }
}

fn write_signed(f: &mut fmt::Formatter<'_>, c: f64, first: bool) -> fmt::Result {
    if c < 0.0 {
        write!(f, "-{}", -c)
    } else if first {
        write!(f, "{c}")
    } else {
        write!(f, "+{c}")
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    base_dir: Option<&'a Path>,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> GasketError {
        let text: String = self.chars.iter().collect();
        GasketError::InvalidInput(format!(
            "function spec {text:?}: {what} at position {}",
            self.pos
        ))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<FunctionProvider> {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        let mut sign = 1.0;
        if self.eat('-') {
            sign = -1.0;
        }
        loop {
            match self.term()? {
                Term::Constant(c) => constant += sign * c,
                Term::Scaled(c, p) => terms.push((sign * c, p)),
            }
            if self.eat('+') {
                sign = 1.0;
            } else if self.eat('-') {
                sign = -1.0;
            } else {
                break;
            }
            while self.eat('-') {
                sign = -sign;
            }
        }
        if constant == 0.0 && terms.len() == 1 && terms[0].0 == 1.0 {
            return Ok(terms.pop().expect("one term").1);
        }
        Ok(FunctionProvider::Affine { terms, constant })
    }

    fn term(&mut self) -> Result<Term> {
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            let c = self.number()?;
            if self.eat('*') {
                return Ok(Term::Scaled(c, self.atom()?));
            }
            return Ok(Term::Constant(c));
        }
        Ok(Term::Scaled(1.0, self.atom()?))
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        if matches!(self.peek(), Some('-' | '+')) {
            self.pos += 1;
        }
        digits(self);
        if self.eat('.') {
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('-' | '+')) {
                self.pos += 1;
            }
            digits(self);
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error("bad number"))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn atom(&mut self) -> Result<FunctionProvider> {
        if self.eat('(') {
            let inner = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(inner);
        }
        match self.ident().as_str() {
            "coordinate_x" | "x" => Ok(FunctionProvider::CoordinateX),
            "coordinate_y" | "y" => Ok(FunctionProvider::CoordinateY),
            "harmonic" => {
                if !self.eat('(') {
                    return Err(self.error("harmonic needs three boundary values"));
                }
                let mut values = [0.0; 3];
                for (i, slot) in values.iter_mut().enumerate() {
                    if i > 0 && !self.eat(',') {
                        return Err(self.error("expected ','"));
                    }
                    *slot = self.number()?;
                }
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(FunctionProvider::Harmonic(BoundaryValues::from_array(
                    values,
                )?))
            }
            "table" => {
                if !self.eat('(') {
                    return Err(self.error("table needs a path"));
                }
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c != ')') {
                    self.pos += 1;
                }
                let source: String = self.chars[start..self.pos].iter().collect();
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                let path = match self.base_dir {
                    Some(dir) => dir.join(&source),
                    None => source.clone().into(),
                };
                let table = read_vertex_csv(std::fs::File::open(&path)?)?;
                Ok(FunctionProvider::table(source, table))
            }
            "" => Err(self.error("expected a function")),
            other => Err(self.error(&format!("unknown function {other:?}"))),
        }
    }
}

enum Term {
    Constant(f64),
    Scaled(f64, FunctionProvider),
}

/// Checks `b(q_i) = f(q_i)` at the three corners.
pub fn check_compatible(f: &FunctionProvider, b: &FunctionProvider, tol: f64) -> Result<()> {
    let fc = f.corner_values()?;
    let bc = b.corner_values()?;
    for (i, (&fv, &bv)) in fc.iter().zip(&bc).enumerate() {
        if !crate::harmonic::agrees(fv, bv, tol) {
            return Err(GasketError::IncompatibleBase {
                corner: i + 1,
                f: fv,
                b: bv,
            });
        }
    }
    Ok(())
}

/// Sanity helper for callers that want every vertex of a level evaluated
/// pointwise rather than through [`FunctionProvider::sample`].
pub fn sample_pointwise(p: &FunctionProvider, level: u32) -> Result<VertexFunction> {
    let topology = GasketLevel::shared(level)?;
    let values = topology
        .vertices()
        .map(|v| p.evaluate(&v))
        .collect::<Result<Vec<_>>>()?;
    VertexFunction::new(level, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: FunctionProvider = "0.5*coordinate_x - 2*harmonic(1,0,0.5) + 1e-1"
            .parse()
            .unwrap();
        match &p {
            FunctionProvider::Affine { terms, constant } => {
                assert_eq!(terms.len(), 2);
                assert_eq!(terms[1].0, -2.0);
                assert_eq!(*constant, 0.1);
            }
            other => panic!("{other:?}"),
        }
        let again: FunctionProvider = p.to_string().parse().unwrap();
        assert_eq!(again, p);
        assert_eq!(
            "y".parse::<FunctionProvider>().unwrap(),
            FunctionProvider::CoordinateY
        );
        assert!("harmonic(1,2)".parse::<FunctionProvider>().is_err());
        assert!("wave".parse::<FunctionProvider>().is_err());
        assert!("coordinate_x)".parse::<FunctionProvider>().is_err());
    }

    #[test]
    fn sample_matches_pointwise() {
        let p: FunctionProvider = "coordinate_x + 0.3*coordinate_y - harmonic(0.2,1,-1) + 2"
            .parse()
            .unwrap();
        for level in [0, 3, 6] {
            let a = p.sample(level).unwrap();
            let b = sample_pointwise(&p, level).unwrap();
            assert!(a.sup_distance(&b).unwrap() < 1e-13);
        }
    }

    #[test]
    fn table_levels() {
        let t = FunctionProvider::table("t", FunctionProvider::CoordinateX.sample(4).unwrap());
        assert!(t.sample(3).is_ok());
        assert!(t.sample(5).is_err());
        let v = LatticeVertex::new(2, 1, 1).unwrap();
        assert_eq!(t.evaluate(&v).unwrap(), 0.375);
        assert!(t.evaluate(&LatticeVertex::new(5, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn compatibility() {
        let f = FunctionProvider::CoordinateX;
        let b = FunctionProvider::harmonic(0.0, 1.0, 0.5).unwrap();
        assert!(check_compatible(&f, &b, 1e-12).is_ok());
        let bad = FunctionProvider::harmonic(0.0, 1.0, 0.4).unwrap();
        assert!(matches!(
            check_compatible(&f, &bad, 1e-12),
            Err(GasketError::IncompatibleBase { corner: 3, .. })
        ));
    }
}
