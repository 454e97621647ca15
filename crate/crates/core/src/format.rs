//! Text formats: CSV tables and small JSON documents with fixed field order.
//!
//! Reals are written like C's `%.17g`, so equal inputs give byte-equal files
//! and every value reads back to the same double.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use crate::energy::EnergySeries;
use crate::error::{GasketError, Result};
use crate::function::VertexFunction;
use crate::gasket::{GasketLevel, LatticeVertex};

/// `%.17g`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Builds a JSON object whose keys appear in insertion order.
#[derive(Clone, Debug, Default)]
pub struct JsonObject {
    body: String,
}

impl JsonObject {
    pub fn new() -> Self {
        JsonObject::default()
    }

    fn key(&mut self, key: &str) -> &mut String {
        if !self.body.is_empty() {
            self.body.push(',');
        }
        self.body.push_str(&json_string(key));
        self.body.push(':');
        &mut self.body
    }

    pub fn real(mut self, key: &str, x: f64) -> Self {
        let text = json_real(x);
        self.key(key).push_str(&text);
        self
    }

    pub fn opt_real(self, key: &str, x: Option<f64>) -> Self {
        match x {
            Some(x) => self.real(key, x),
            None => self.raw(key, "null"),
        }
    }

    pub fn int(mut self, key: &str, x: i64) -> Self {
        let _ = write!(self.key(key), "{x}");
        self
    }

    pub fn boolean(mut self, key: &str, x: bool) -> Self {
        let _ = write!(self.key(key), "{x}");
        self
    }

    pub fn string(mut self, key: &str, x: &str) -> Self {
        let text = json_string(x);
        self.key(key).push_str(&text);
        self
    }

    pub fn reals(mut self, key: &str, xs: &[f64]) -> Self {
        let items: Vec<String> = xs.iter().map(|&x| json_real(x)).collect();
        let _ = write!(self.key(key), "[{}]", items.join(","));
        self
    }

    /// Inserts already-serialized JSON.
    pub fn raw(mut self, key: &str, json: &str) -> Self {
        self.key(key).push_str(json);
        self
    }

    pub fn object(self, key: &str, inner: JsonObject) -> Self {
        let text = inner.finish();
        self.raw(key, &text)
    }

    pub fn finish(self) -> String {
        format!("{{{}}}", self.body)
    }
}

fn json_real(x: f64) -> String {
    if x.is_finite() {
        fmt_real(x)
    } else {
        "null".into()
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn write_vertex_csv(mut w: impl Write, u: &VertexFunction) -> Result<()> {
    writeln!(w, "level,a,b,value")?;
    let topology = u.topology();
    for (v, &value) in topology.vertices().zip(u.values()) {
        writeln!(w, "{},{},{},{}", v.level(), v.a(), v.b(), fmt_real(value))?;
    }
    Ok(())
}

/// Reads `level,a,b,value` rows. Lines starting with `#` and the header are
/// skipped; every vertex of the level must appear exactly once.
pub fn read_vertex_csv(r: impl Read) -> Result<VertexFunction> {
    let mut rows: Vec<(LatticeVertex, f64)> = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("level") {
            continue;
        }
        let bad = || GasketError::InvalidInput(format!("line {}: expected level,a,b,value", n + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let level: u32 = fields[0].parse().map_err(|_| bad())?;
        let a: u32 = fields[1].parse().map_err(|_| bad())?;
        let b: u32 = fields[2].parse().map_err(|_| bad())?;
        let value: f64 = fields[3].parse().map_err(|_| bad())?;
        rows.push((LatticeVertex::new(level, a, b)?, value));
    }
    let level = rows
        .first()
        .map(|(v, _)| v.level())
        .ok_or_else(|| GasketError::InvalidInput("vertex table is empty".into()))?;
    let topology = GasketLevel::shared(level)?;
    let mut values = vec![f64::NAN; topology.vertex_count()];
    let mut seen = HashSet::new();
    for (v, value) in rows {
        if v.level() != level {
            return Err(GasketError::LevelMismatch(format!(
                "vertex table mixes levels {level} and {}",
                v.level()
            )));
        }
        let i = topology.index_of(&v).expect("validated vertex");
        if !seen.insert(i) {
            return Err(GasketError::InvalidInput(format!(
                "vertex ({}, {}) listed twice",
                v.a(),
                v.b()
            )));
        }
        values[i] = value;
    }
    if seen.len() != values.len() {
        return Err(GasketError::InvalidInput(format!(
            "level {level} has {} vertices, table lists {}",
            values.len(),
            seen.len()
        )));
    }
    VertexFunction::new(level, values)
}

pub fn write_gasket_vertices(mut w: impl Write, level: &GasketLevel) -> Result<()> {
    writeln!(w, "level,a,b,x,y")?;
    for v in level.vertices() {
        let [x, y] = v.embed();
        writeln!(
            w,
            "{},{},{},{},{}",
            v.level(),
            v.a(),
            v.b(),
            fmt_real(x),
            fmt_real(y)
        )?;
    }
    Ok(())
}

pub fn write_gasket_edges(mut w: impl Write, level: &GasketLevel) -> Result<()> {
    writeln!(w, "level,a1,b1,a2,b2")?;
    for (p, q) in level.edges() {
        let (p, q) = (level.vertex(p), level.vertex(q));
        writeln!(
            w,
            "{},{},{},{},{}",
            level.level(),
            p.a(),
            p.b(),
            q.a(),
            q.b()
        )?;
    }
    Ok(())
}

pub fn write_energy_csv(mut w: impl Write, series: &EnergySeries) -> Result<()> {
    writeln!(w, "m,crude,renormalized")?;
    for e in &series.entries {
        writeln!(
            w,
            "{},{},{}",
            e.m,
            fmt_real(e.crude),
            fmt_real(e.renormalized)
        )?;
    }
    Ok(())
}
