//! Exact combinatorial model of the level-m Sierpinski gasket.
//!
//! A vertex at level `m` is a pair of non-negative integers `(a, b)` with
//! `a + b <= 2^m`; its planar position is `(a·e1 + b·e2) / 2^m` with
//! `e1 = (1, 0)` and `e2 = (1/2, √3/2)`. The corners are `q1 = (0, 0)`,
//! `q2 = (2^m, 0)` and `q3 = (0, 2^m)`. Vertices shared by neighbouring
//! cells have a single representation, so equality is plain integer
//! comparison.
//!
//! Every level carries a canonical vertex order defined recursively:
//! `V_{m+1}` lists `L1(V_m)`, then `L2(V_m)` without `L2(q1) = L1(q2)`,
//! then `L3(V_m)` without `L3(q1)` and `L3(q2)`. Indices under the three
//! maps are therefore pure arithmetic ([`LevelMeta::image`]), and cells are
//! listed in lexicographic word order so that the children of cell `c` are
//! the cells `3c`, `3c + 1` and `3c + 2` one level down.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{GasketError, Result};

/// Largest level accepted anywhere in the toolkit.
pub const LEVEL_CAP: u32 = 30;

const SQRT3_OVER_2: f64 = 0.866_025_403_784_438_6;

pub(crate) fn check_level(level: u32) -> Result<()> {
    if level > LEVEL_CAP {
        return Err(GasketError::LevelTooLarge {
            level,
            cap: LEVEL_CAP,
        });
    }
    Ok(())
}

/// Index `i` of the contraction `L_i` and of the corner `q_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u8);

impl Symbol {
    pub const ONE: Symbol = Symbol(1);
    pub const TWO: Symbol = Symbol(2);
    pub const THREE: Symbol = Symbol(3);
    pub const ALL: [Symbol; 3] = [Symbol::ONE, Symbol::TWO, Symbol::THREE];

    pub fn new(value: u32) -> Result<Self> {
        match value {
            1..=3 => Ok(Symbol(value as u8)),
            _ => Err(GasketError::InvalidSymbol(value)),
        }
    }

    pub fn value(self) -> u32 {
        self.0 as u32
    }

    /// Zero-based position, 0 for symbol 1.
    pub fn position(self) -> usize {
        (self.0 - 1) as usize
    }

    /// Lattice offset of the corner `q_i` at level 0.
    fn offset(self) -> (u32, u32) {
        match self.0 {
            1 => (0, 0),
            2 => (1, 0),
            _ => (0, 1),
        }
    }
}

/// A finite word over `{1, 2, 3}`; the empty word is the identity map.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_digits(digits: &[u32]) -> Result<Self> {
        digits
            .iter()
            .map(|&d| Symbol::new(d))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    /// The word `self` followed by `other`, i.e. the map `L_self ∘ L_other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    /// Position of the word in lexicographic order among words of its length.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, s| acc * 3 + s.position())
    }

    pub fn from_index(len: usize, mut index: usize) -> Self {
        let mut symbols = vec![Symbol::ONE; len];
        for slot in symbols.iter_mut().rev() {
            *slot = Symbol((index % 3) as u8 + 1);
            index /= 3;
        }
        Word(symbols)
    }

    /// All words of length `len` in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = Word> {
        (0..3usize.pow(len as u32)).map(move |i| Word::from_index(len, i))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.0)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = GasketError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| GasketError::InvalidInput(format!("bad word {s:?}")))
                    .and_then(Symbol::new)
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// A vertex of the level-`level` gasket graph in integer lattice coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVertex {
    level: u32,
    a: u32,
    b: u32,
}

impl LatticeVertex {
    pub fn new(level: u32, a: u32, b: u32) -> Result<Self> {
        check_level(level)?;
        if locate(level, a, b).is_none() {
            return Err(GasketError::InvalidVertex { level, a, b });
        }
        Ok(LatticeVertex { level, a, b })
    }

    pub(crate) fn new_unchecked(level: u32, a: u32, b: u32) -> Self {
        LatticeVertex { level, a, b }
    }

    /// Corner `q_i` at the given level.
    pub fn corner(level: u32, symbol: Symbol) -> Self {
        let side = 1u32 << level;
        let (da, db) = symbol.offset();
        LatticeVertex {
            level,
            a: da * side,
            b: db * side,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    /// Same point expressed at a finer level.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(GasketError::LevelMismatch(format!(
                "cannot move a level-{} vertex to coarser level {level}",
                self.level
            )));
        }
        check_level(level)?;
        let d = level - self.level;
        Ok(LatticeVertex {
            level,
            a: self.a << d,
            b: self.b << d,
        })
    }

    /// The coarsest level at which this point is already a vertex.
    pub fn canonical(&self) -> Self {
        let mut v = *self;
        while v.level > 0 && v.a.is_multiple_of(2) && v.b.is_multiple_of(2) {
            v = LatticeVertex {
                level: v.level - 1,
                a: v.a / 2,
                b: v.b / 2,
            };
        }
        v
    }

    pub fn embed(&self) -> [f64; 2] {
        embed(self)
    }
}

/// Planar position of a lattice vertex.
pub fn embed(v: &LatticeVertex) -> [f64; 2] {
    let scale = (v.level as f64).exp2().recip();
    let a = v.a as f64;
    let b = v.b as f64;
    [(a + 0.5 * b) * scale, b * SQRT3_OVER_2 * scale]
}

/// `L_ω(v)`: applies `L_{w_n}` first and `L_{w_1}` last.
pub fn apply_map(word: &Word, v: &LatticeVertex) -> Result<LatticeVertex> {
    let level = v.level as usize + word.len();
    if level > LEVEL_CAP as usize {
        return Err(GasketError::LevelTooLarge {
            level: level.min(u32::MAX as usize) as u32,
            cap: LEVEL_CAP,
        });
    }
    let mut out = *v;
    for s in word.symbols().iter().rev() {
        let (da, db) = s.offset();
        let side = 1u32 << out.level;
        out = LatticeVertex {
            level: out.level + 1,
            a: out.a + da * side,
            b: out.b + db * side,
        };
    }
    Ok(out)
}

/// Vertex count and corner positions of one level's canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelMeta {
    pub count: usize,
    pub corners: [usize; 3],
}

impl LevelMeta {
    pub const BASE: LevelMeta = LevelMeta {
        count: 3,
        corners: [0, 1, 2],
    };

    /// Index at the next level of `L_symbol(vertex j)`.
    pub fn image(&self, symbol: Symbol, j: usize) -> usize {
        let [c1, c2, c3] = self.corners;
        let n = self.count;
        match symbol.0 {
            1 => j,
            2 => {
                if j == c1 {
                    // L2(q1) = L1(q2)
                    c2
                } else {
                    n + j - usize::from(c1 < j)
                }
            }
            _ => {
                if j == c1 {
                    // L3(q1) = L1(q3)
                    c3
                } else if j == c2 {
                    // L3(q2) = L2(q3)
                    self.image(Symbol::TWO, c3)
                } else {
                    2 * n - 1 + j - usize::from(c1 < j) - usize::from(c2 < j)
                }
            }
        }
    }

    pub fn next(&self) -> LevelMeta {
        LevelMeta {
            count: 3 * self.count - 3,
            corners: [
                self.image(Symbol::ONE, self.corners[0]),
                self.image(Symbol::TWO, self.corners[1]),
                self.image(Symbol::THREE, self.corners[2]),
            ],
        }
    }
}

/// Metadata for levels `0..=level`.
pub fn level_metas(level: u32) -> Vec<LevelMeta> {
    let mut metas = Vec::with_capacity(level as usize + 1);
    let mut meta = LevelMeta::BASE;
    metas.push(meta);
    for _ in 0..level {
        meta = meta.next();
        metas.push(meta);
    }
    metas
}

/// `(3^(m+1) + 3) / 2`.
pub fn vertex_count(level: u32) -> usize {
    (3usize.pow(level + 1) + 3) / 2
}

/// Canonical index of `(a, b)` at `level`, or `None` when the point is not
/// a gasket vertex.
fn locate(level: u32, a: u32, b: u32) -> Option<usize> {
    if level > LEVEL_CAP {
        return None;
    }
    let metas = level_metas(level);
    locate_with(&metas, level, a, b)
}

fn locate_with(metas: &[LevelMeta], level: u32, a: u32, b: u32) -> Option<usize> {
    if (a as u64) + (b as u64) > 1u64 << level {
        return None;
    }
    // Descend through the pieces, recording which map was taken.
    let mut path = [Symbol::ONE; LEVEL_CAP as usize];
    let (mut a, mut b) = (a, b);
    for m in (1..=level).rev() {
        let half = 1u32 << (m - 1);
        let symbol = if a + b <= half {
            Symbol::ONE
        } else if a >= half {
            a -= half;
            Symbol::TWO
        } else if b >= half {
            b -= half;
            Symbol::THREE
        } else {
            return None;
        };
        path[m as usize - 1] = symbol;
    }
    let mut index = match (a, b) {
        (0, 0) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        _ => return None,
    };
    for m in 0..level as usize {
        index = metas[m].image(path[m], index);
    }
    Some(index)
}

/// A level-m cell `L_ω(S_0)` with its three corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub word: Word,
    pub corners: [LatticeVertex; 3],
}

/// Materialized vertex and cell tables of one level.
#[derive(Debug)]
pub struct GasketLevel {
    level: u32,
    coords: Vec<[u32; 2]>,
    cells: Vec<[u32; 3]>,
    metas: Vec<LevelMeta>,
}

static LEVEL_CACHE: OnceLock<Mutex<Vec<Arc<GasketLevel>>>> = OnceLock::new();

impl GasketLevel {
    fn base() -> Self {
        GasketLevel {
            level: 0,
            coords: vec![[0, 0], [1, 0], [0, 1]],
            cells: vec![[0, 1, 2]],
            metas: vec![LevelMeta::BASE],
        }
    }

    fn refine(&self) -> Self {
        let meta = self.meta();
        let side = 1u32 << self.level;
        let [c1, c2, _] = meta.corners;
        let next = meta.next();

        let mut coords = Vec::with_capacity(next.count);
        for symbol in Symbol::ALL {
            let (da, db) = symbol.offset();
            for (j, &[a, b]) in self.coords.iter().enumerate() {
                let skip = match symbol.0 {
                    1 => false,
                    2 => j == c1,
                    _ => j == c1 || j == c2,
                };
                if !skip {
                    coords.push([a + da * side, b + db * side]);
                }
            }
        }
        debug_assert_eq!(coords.len(), next.count);

        let mut cells = Vec::with_capacity(3 * self.cells.len());
        for symbol in Symbol::ALL {
            cells.extend(
                self.cells
                    .iter()
                    .map(|cell| cell.map(|j| meta.image(symbol, j as usize) as u32)),
            );
        }

        let mut metas = self.metas.clone();
        metas.push(next);
        GasketLevel {
            level: self.level + 1,
            coords,
            cells,
            metas,
        }
    }

    /// Shared, lazily built tables for `level`.
    pub fn shared(level: u32) -> Result<Arc<GasketLevel>> {
        check_level(level)?;
        let cache = LEVEL_CACHE.get_or_init(|| Mutex::new(vec![Arc::new(GasketLevel::base())]));
        let mut levels = cache.lock().unwrap_or_else(|e| e.into_inner());
        while levels.len() <= level as usize {
            let next = levels.last().expect("base level present").refine();
            levels.push(Arc::new(next));
        }
        Ok(Arc::clone(&levels[level as usize]))
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn meta(&self) -> LevelMeta {
        self.metas[self.level as usize]
    }

    pub fn metas(&self) -> &[LevelMeta] {
        &self.metas
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        3 * self.cells.len()
    }

    pub fn vertex(&self, index: usize) -> LatticeVertex {
        let [a, b] = self.coords[index];
        LatticeVertex::new_unchecked(self.level, a, b)
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = LatticeVertex> + '_ {
        self.coords
            .iter()
            .map(|&[a, b]| LatticeVertex::new_unchecked(self.level, a, b))
    }

    pub fn coords(&self) -> &[[u32; 2]] {
        &self.coords
    }

    /// Corner indices of every cell, in lexicographic word order.
    pub fn cell_corners(&self) -> &[[u32; 3]] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell {
            word: Word::from_index(self.level as usize, index),
            corners: self.cells[index].map(|j| self.vertex(j as usize)),
        }
    }

    /// Within-cell vertex pairs: cells in lexicographic order, then
    /// corner pairs (1,2), (1,3), (2,3).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .flat_map(|&[x, y, z]| [(x, y), (x, z), (y, z)].map(|(p, q)| (p as usize, q as usize)))
    }

    pub fn index_of(&self, v: &LatticeVertex) -> Option<usize> {
        if v.level != self.level {
            return None;
        }
        locate_with(&self.metas, self.level, v.a, v.b)
    }

    /// For each vertex of level `coarse`, its index at this (finer) level.
    pub fn inclusion_from(&self, coarse: u32) -> Result<Vec<usize>> {
        if coarse > self.level {
            return Err(GasketError::LevelMismatch(format!(
                "level {coarse} is finer than level {}",
                self.level
            )));
        }
        let coarse_level = GasketLevel::shared(coarse)?;
        let d = self.level - coarse;
        let block = 3usize.pow(d);
        let mut map = vec![usize::MAX; coarse_level.vertex_count()];
        for (c, corners) in coarse_level.cells.iter().enumerate() {
            let first = c * block;
            let descendants = [first, first + (block - 1) / 2, first + block - 1];
            for (k, &corner) in corners.iter().enumerate() {
                map[corner as usize] = self.cells[descendants[k]][k] as usize;
            }
        }
        Ok(map)
    }

    /// Index at level `self.level + word.len()` of `L_word(vertex j)`.
    pub fn image_index(&self, word: &Word, j: usize) -> Result<usize> {
        let target = self.level as usize + word.len();
        if target > LEVEL_CAP as usize {
            return Err(GasketError::LevelTooLarge {
                level: target as u32,
                cap: LEVEL_CAP,
            });
        }
        let metas = level_metas(target as u32);
        let start = self.level as usize;
        Ok(word
            .symbols()
            .iter()
            .rev()
            .enumerate()
            .fold(j, |index, (step, s)| metas[start + step].image(*s, index)))
    }
}

/// All cells, vertices and edges of the level-`m` gasket graph.
pub fn enumerate_level(m: u32) -> Result<Arc<GasketLevel>> {
    GasketLevel::shared(m)
}
