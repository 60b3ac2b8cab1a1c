//! Banded-plus-finite-rank matrices: the representable part of the algebra of
//! row-and-column-finite matrices indexed by positive integers.
//!
//! A [`BpfMatrix`] is a finite set of diagonal bands, each carrying a
//! [`CoeffSeq`] indexed by column, plus a sparse finite-rank part. Canonical
//! form:
//!
//! * at most one band per offset, none with a zero sequence;
//! * every band starts at its *earliest admissible column*,
//!   `max(1, 1 - offset, 1 + largest pole)`, and whatever the matrix holds
//!   on that prefix lives in the finite part.
//!
//! Two matrices are equal exactly when their canonical forms are equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::seqalg::{CoeffSeq, GrowthKey, Poly, RatFunc, SeqAtom, SeqError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BpfError {
    #[error("band offset {offset}: start {start} is below the first admissible column {min}")]
    BadStart { offset: i64, start: u64, min: u64 },
    #[error("band offset {offset}: coefficient sequence has a pole at column {pole}")]
    PoleOnDomain { offset: i64, pole: u64 },
    #[error("matrix indices are 1-based, got ({0}, {1})")]
    BadIndex(u64, u64),
    #[error("duplicate finite-part entry ({0}, {1})")]
    DuplicateEntry(u64, u64),
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// First column a band with this offset can occupy.
pub fn min_start(offset: i64) -> u64 {
    if offset >= 0 {
        1
    } else {
        (1 - offset) as u64
    }
}

/// Entries `(j + offset, j) = seq(j)` for every column `j ≥ start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Band {
    offset: i64,
    seq: CoeffSeq,
    start: u64,
}

impl Band {
    pub fn new(offset: i64, seq: CoeffSeq, start: u64) -> Result<Self, BpfError> {
        let min = min_start(offset);
        if start < min {
            return Err(BpfError::BadStart { offset, start, min });
        }
        if let Some(pole) = seq.max_pole()? {
            if pole >= start {
                return Err(BpfError::PoleOnDomain { offset, pole });
            }
        }
        Ok(Band { offset, seq, start })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn seq(&self) -> &CoeffSeq {
        &self.seq
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Value in column `j`, if the band occupies it.
    pub fn at_column(&self, j: u64) -> Option<Rational> {
        (j >= self.start).then(|| {
            self.seq
                .eval(j)
                .expect("band sequence is pole-free from its start")
        })
    }

    /// Value in row `i`, if the band occupies it.
    pub fn at_row(&self, i: u64) -> Option<(u64, Rational)> {
        let j = i as i64 - self.offset;
        if j < 1 {
            return None;
        }
        let j = j as u64;
        self.at_column(j).map(|v| (j, v))
    }

    fn row_of(&self, j: u64) -> u64 {
        (j as i64 + self.offset) as u64
    }
}

/// Finitely many nonzero entries; the ideal of finite matrices.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct FiniteRankPart {
    entries: BTreeMap<(u64, u64), Rational>,
}

impl FiniteRankPart {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(i: u64, j: u64) -> Self {
        let mut f = Self::new();
        f.add_entry(i, j, Rational::one());
        f
    }

    pub fn from_triplets(
        triplets: impl IntoIterator<Item = (u64, u64, Rational)>,
    ) -> Result<Self, BpfError> {
        let mut f = Self::new();
        for (i, j, v) in triplets {
            if i == 0 || j == 0 {
                return Err(BpfError::BadIndex(i, j));
            }
            f.add_entry(i, j, v);
        }
        Ok(f)
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `i` or `j` is zero.
    pub fn add_entry(&mut self, i: u64, j: u64, v: Rational) {
        assert!(i >= 1 && j >= 1, "matrix indices are 1-based");
        if v.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry((i, j)) {
            Entry::Vacant(e) => {
                e.insert(v);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += v;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn get(&self, i: u64, j: u64) -> Rational {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, &Rational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_row(&self) -> u64 {
        self.entries.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_col(&self) -> u64 {
        self.entries.keys().map(|k| k.1).max().unwrap_or(0)
    }

    pub fn row_support(&self) -> BTreeSet<u64> {
        self.entries.keys().map(|k| k.0).collect()
    }

    pub fn col_support(&self) -> BTreeSet<u64> {
        self.entries.keys().map(|k| k.1).collect()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::new();
        }
        FiniteRankPart {
            entries: self.entries.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, j, v) in other.iter() {
            out.add_entry(i, j, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut by_row: BTreeMap<u64, Vec<(u64, &Rational)>> = BTreeMap::new();
        for (k, j, v) in other.iter() {
            by_row.entry(k).or_default().push((j, v));
        }
        let mut out = Self::new();
        for (i, k, a) in self.iter() {
            if let Some(row) = by_row.get(&k) {
                for (j, b) in row {
                    out.add_entry(i, *j, a * *b);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        FiniteRankPart {
            entries: self.entries.iter().map(|(&(i, j), v)| ((j, i), v.clone())).collect(),
        }
    }
}

/// Banded-plus-finite-rank matrix in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BpfMatrix {
    bands: Vec<Band>,
    finite: FiniteRankPart,
}

impl BpfMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(Rational::one())
    }

    pub fn scalar(c: Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::assemble(
            vec![Band {
                offset: 0,
                seq: CoeffSeq::constant(c),
                start: 1,
            }],
            FiniteRankPart::new(),
        )
    }

    /// `S_i = Σ_j e_{i+j, j}`: ones on offset `i`.
    pub fn shift(i: i64) -> Self {
        Self::assemble(
            vec![Band {
                offset: i,
                seq: CoeffSeq::one(),
                start: min_start(i),
            }],
            FiniteRankPart::new(),
        )
    }

    pub fn band(offset: i64, seq: CoeffSeq, start: u64) -> Result<Self, BpfError> {
        let band = Band::new(offset, seq, start)?;
        Ok(Self::assemble(vec![band], FiniteRankPart::new()))
    }

    /// Matrix unit `e_{ij}`.
    pub fn unit(i: u64, j: u64) -> Self {
        Self::from_finite(FiniteRankPart::unit(i, j))
    }

    pub fn from_finite(finite: FiniteRankPart) -> Self {
        BpfMatrix {
            bands: Vec::new(),
            finite,
        }
    }

    pub fn from_parts(bands: Vec<Band>, finite: FiniteRankPart) -> Self {
        Self::assemble(bands, finite)
    }

    /// Diagonal `q(i)·rⁱ·(i!)ˢ` starting at row 1.
    pub fn diagonal(seq: CoeffSeq) -> Result<Self, BpfError> {
        Self::band(0, seq, 1)
    }

    /// `T_1 = Σ (j+1) e_{j+1, j}`.
    pub fn weighted_up() -> Self {
        Self::band(1, CoeffSeq::poly(Poly::from_i64s(&[1, 1])), 1).unwrap()
    }

    /// `T_{-1} = Σ 1/(i+1) e_{i, i+1}`, i.e. entry `1/j` in column `j ≥ 2`.
    pub fn weighted_down() -> Self {
        let inv_j = RatFunc::poly(Poly::var()).recip().unwrap();
        Self::band(-1, CoeffSeq::atom(inv_j, Rational::one(), 0).unwrap(), 2).unwrap()
    }

    /// `Diag(1, r, r², …)`, the geometric diagonal `rⁱ⁻¹`.
    pub fn geometric_diagonal(r: Rational) -> Result<Self, BpfError> {
        if r.is_zero() {
            return Err(SeqError::ZeroRatio.into());
        }
        let q = RatFunc::constant(r.recip());
        Self::diagonal(CoeffSeq::atom(q, r, 0)?)
    }

    /// `Diag((i!)ˢ)`.
    pub fn factorial_diagonal(s: i64) -> Self {
        Self::diagonal(CoeffSeq::atom(RatFunc::one(), Rational::one(), s).unwrap()).unwrap()
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band_at(&self, offset: i64) -> Option<&Band> {
        self.bands.iter().find(|b| b.offset == offset)
    }

    pub fn finite(&self) -> &FiniteRankPart {
        &self.finite
    }

    pub fn is_zero(&self) -> bool {
        self.bands.is_empty() && self.finite.is_empty()
    }

    /// True when the matrix lies in the finite ideal.
    pub fn is_finite_rank(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn max_offset(&self) -> Option<i64> {
        self.bands.last().map(|b| b.offset)
    }

    pub fn min_offset(&self) -> Option<i64> {
        self.bands.first().map(|b| b.offset)
    }

    pub fn entry(&self, i: u64, j: u64) -> Rational {
        let mut v = self.finite.get(i, j);
        let d = i as i64 - j as i64;
        if let Some(b) = self.band_at(d) {
            if let Some(x) = b.at_column(j) {
                v += x;
            }
        }
        v
    }

    /// Nonzero entries of column `j`, ascending by row.
    pub fn column(&self, j: u64) -> Vec<(u64, Rational)> {
        let mut col: BTreeMap<u64, Rational> = BTreeMap::new();
        for b in &self.bands {
            if let Some(v) = b.at_column(j) {
                *col.entry(b.row_of(j)).or_insert_with(Rational::zero) += v;
            }
        }
        for (i, jj, v) in self.finite.iter() {
            if jj == j {
                *col.entry(i).or_insert_with(Rational::zero) += v;
            }
        }
        col.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// Top-left `rows × cols` block.
    pub fn truncate(&self, rows: u64, cols: u64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows as usize, cols as usize);
        for b in &self.bands {
            for j in b.start..=cols {
                let i = b.row_of(j);
                if i > rows {
                    break;
                }
                let v = b.at_column(j).unwrap();
                m.set((i - 1) as usize, (j - 1) as usize, v);
            }
        }
        for (i, j, v) in self.finite.iter() {
            if i <= rows && j <= cols {
                let (r, c) = ((i - 1) as usize, (j - 1) as usize);
                let cur = m.get(r, c) + v;
                m.set(r, c, cur);
            }
        }
        m
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        BpfMatrix {
            bands: self
                .bands
                .iter()
                .map(|b| Band {
                    offset: b.offset,
                    seq: b.seq.scale(c),
                    start: b.start,
                })
                .collect(),
            finite: self.finite.scale(c),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let bands = self.bands.iter().chain(&other.bands).cloned().collect();
        Self::assemble(bands, self.finite.add(&other.finite))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn add_finite(&self, f: &FiniteRankPart) -> Self {
        BpfMatrix {
            bands: self.bands.clone(),
            finite: self.finite.add(f),
        }
    }

    /// Exact product.
    ///
    /// Band `(d₁, c₁, t₁)` times band `(d₂, c₂, t₂)` is the band with offset
    /// `d₁ + d₂`, sequence `c₁(j + d₂)·c₂(j)` and start
    /// `max(t₂, t₁ − d₂, 1, 1 − d₁ − d₂)`. Products touching the finite part
    /// are finite and computed entrywise.
    pub fn mul(&self, other: &Self) -> Self {
        let mut bands = Vec::new();
        for a in &self.bands {
            for b in &other.bands {
                let offset = a.offset + b.offset;
                let start = (b.start as i64)
                    .max(a.start as i64 - b.offset)
                    .max(min_start(offset) as i64) as u64;
                let seq = a.seq.shift(b.offset).mul(&b.seq);
                bands.push(Band { offset, seq, start });
            }
        }

        let mut finite = self.finite.mul(&other.finite);
        // band · finite
        for (k, j, v) in other.finite.iter() {
            for a in &self.bands {
                if let Some(x) = a.at_column(k) {
                    finite.add_entry(a.row_of(k), j, x * v);
                }
            }
        }
        // finite · band
        for (i, k, v) in self.finite.iter() {
            for b in &other.bands {
                if let Some((j, x)) = b.at_row(k) {
                    finite.add_entry(i, j, v * x);
                }
            }
        }
        Self::assemble(bands, finite)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Band `(d, c, t)` becomes `(−d, c(· − d), t + d)`; the finite part is flipped.
    pub fn transpose(&self) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|b| Band {
                offset: -b.offset,
                seq: b.seq.shift(-b.offset),
                start: (b.start as i64 + b.offset) as u64,
            })
            .collect();
        Self::assemble(bands, self.finite.transpose())
    }

    /// Equality in the quotient by finite matrices.
    pub fn coset_eq(&self, other: &Self) -> bool {
        self.bands.len() == other.bands.len()
            && self
                .bands
                .iter()
                .zip(&other.bands)
                .all(|(a, b)| a.offset == b.offset && a.seq == b.seq)
    }

    /// Coefficients `c`, not all zero, with `Σ cₖ·msₖ` finite rank, or `None`
    /// when the cosets are independent.
    ///
    /// A combination is finite rank exactly when, on every offset and every
    /// growth class `rⁱ·(i!)ˢ`, the rational-function coefficients cancel.
    /// Over a common denominator each such cancellation is a polynomial
    /// identity, one linear equation per power of `i`.
    pub fn coset_dependency(ms: &[BpfMatrix]) -> Option<Vec<Rational>> {
        let mut components: BTreeMap<(i64, GrowthKey), BTreeMap<usize, RatFunc>> = BTreeMap::new();
        for (k, m) in ms.iter().enumerate() {
            for b in &m.bands {
                for (key, q) in b.seq.entries() {
                    components
                        .entry((b.offset, key.clone()))
                        .or_default()
                        .insert(k, q.clone());
                }
            }
        }
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for terms in components.values() {
            let polys: Vec<(usize, Poly)> = terms
                .iter()
                .map(|(&k, q)| {
                    let others = terms
                        .iter()
                        .filter(|(&l, _)| l != k)
                        .fold(Poly::one(), |acc, (_, r)| &acc * r.den());
                    (k, q.num() * &others)
                })
                .collect();
            let deg = polys.iter().filter_map(|(_, p)| p.degree()).max().unwrap_or(0);
            for power in 0..=deg {
                let mut row = vec![Rational::zero(); ms.len()];
                for (k, p) in &polys {
                    if let Some(c) = p.coeffs().get(power) {
                        row[*k] = c.clone();
                    }
                }
                rows.push(row);
            }
        }
        if ms.is_empty() {
            return None;
        }
        if rows.is_empty() {
            // every matrix is already finite rank
            let mut c = vec![Rational::zero(); ms.len()];
            c[0] = Rational::one();
            return Some(c);
        }
        DenseMatrix::from_rows(rows).nullspace().into_iter().next()
    }

    /// Merges bands by offset and moves every band to its earliest admissible start.
    fn assemble(raw: Vec<Band>, mut finite: FiniteRankPart) -> Self {
        let mut by_offset: BTreeMap<i64, Vec<Band>> = BTreeMap::new();
        for b in raw {
            if !b.seq.is_zero() {
                by_offset.entry(b.offset).or_default().push(b);
            }
        }
        let mut bands = Vec::new();
        for (offset, group) in by_offset {
            let common = group.iter().map(|b| b.start).max().unwrap();
            let mut seq = CoeffSeq::zero();
            for b in &group {
                for j in b.start..common {
                    finite.add_entry(b.row_of(j), j, b.at_column(j).unwrap());
                }
                seq = seq.add(&b.seq);
            }
            if seq.is_zero() {
                continue;
            }
            let pole = seq
                .max_pole()
                .expect("pole search for band sequence exceeded the scan limit");
            let start = min_start(offset).max(pole.map_or(0, |p| p + 1));
            debug_assert!(start <= common, "merged sequence has a pole inside the band");
            let band = Band { offset, seq, start };
            for j in start..common {
                finite.add_entry(band.row_of(j), j, -band.at_column(j).unwrap());
            }
            bands.push(band);
        }
        BpfMatrix { bands, finite }
    }
}

impl Add for &BpfMatrix {
    type Output = BpfMatrix;
    fn add(self, rhs: &BpfMatrix) -> BpfMatrix {
        BpfMatrix::add(self, rhs)
    }
}

impl Sub for &BpfMatrix {
    type Output = BpfMatrix;
    fn sub(self, rhs: &BpfMatrix) -> BpfMatrix {
        BpfMatrix::sub(self, rhs)
    }
}

impl Mul for &BpfMatrix {
    type Output = BpfMatrix;
    fn mul(self, rhs: &BpfMatrix) -> BpfMatrix {
        BpfMatrix::mul(self, rhs)
    }
}

impl Neg for &BpfMatrix {
    type Output = BpfMatrix;
    fn neg(self) -> BpfMatrix {
        BpfMatrix::neg(self)
    }
}

/// A matrix read modulo the finite ideal.
#[derive(Clone, Debug)]
pub struct CosetRep(pub BpfMatrix);

impl PartialEq for CosetRep {
    fn eq(&self, other: &Self) -> bool {
        self.0.coset_eq(&other.0)
    }
}

impl Eq for CosetRep {}

impl Mul for &CosetRep {
    type Output = CosetRep;
    fn mul(self, rhs: &CosetRep) -> CosetRep {
        CosetRep(&self.0 * &rhs.0)
    }
}

impl Add for &CosetRep {
    type Output = CosetRep;
    fn add(self, rhs: &CosetRep) -> CosetRep {
        CosetRep(&self.0 + &rhs.0)
    }
}

impl fmt::Display for BpfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for b in &self.bands {
            parts.push(format!("band[{}]@{}: {}", b.offset, b.start, b.seq));
        }
        if !self.finite.is_empty() {
            let entries: Vec<String> = self
                .finite
                .iter()
                .map(|(i, j, v)| format!("({i},{j})={v}"))
                .collect();
            parts.push(format!("finite: {}", entries.join(" ")));
        }
        write!(f, "{}", parts.join("; "))
    }
}

// Canonical JSON form.

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub q_num: Vec<String>,
    pub q_den: Vec<String>,
    pub r: String,
    pub s: i64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct BandJson {
    pub offset: i64,
    pub start: u64,
    pub atoms: Vec<AtomJson>,
}

/// Wire form: bands with ascending-degree polynomial coefficients as rational
/// strings, plus `[row, col, value]` triplets for the finite part.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct BpfJson {
    pub bands: Vec<BandJson>,
    pub finite: Vec<(u64, u64, String)>,
}

fn parse_rational(s: &str) -> Result<Rational, BpfError> {
    let r: Rational = s.trim().parse().map_err(|_| BpfError::BadRational(s.to_string()))?;
    Ok(r)
}

fn poly_from_json(coeffs: &[String]) -> Result<Poly, BpfError> {
    Ok(Poly::from_coeffs(
        coeffs.iter().map(|c| parse_rational(c)).collect::<Result<_, _>>()?,
    ))
}

impl From<&BpfMatrix> for BpfJson {
    fn from(m: &BpfMatrix) -> Self {
        let strs = |p: &Poly| p.coeffs().iter().map(|c| c.to_string()).collect();
        BpfJson {
            bands: m
                .bands
                .iter()
                .map(|b| BandJson {
                    offset: b.offset,
                    start: b.start,
                    atoms: b
                        .seq
                        .atoms()
                        .map(|a| AtomJson {
                            q_num: strs(a.q.num()),
                            q_den: strs(a.q.den()),
                            r: a.r.to_string(),
                            s: a.s,
                        })
                        .collect(),
                })
                .collect(),
            finite: m.finite.iter().map(|(i, j, v)| (i, j, v.to_string())).collect(),
        }
    }
}

impl From<BpfMatrix> for BpfJson {
    fn from(m: BpfMatrix) -> Self {
        BpfJson::from(&m)
    }
}

impl TryFrom<BpfJson> for BpfMatrix {
    type Error = BpfError;

    fn try_from(j: BpfJson) -> Result<Self, BpfError> {
        let mut bands = Vec::new();
        for b in &j.bands {
            let mut atoms = Vec::new();
            for a in &b.atoms {
                let q = RatFunc::new(poly_from_json(&a.q_num)?, poly_from_json(&a.q_den)?)
                    .ok_or_else(|| BpfError::BadRational("zero denominator polynomial".into()))?;
                atoms.push(SeqAtom::new(q, parse_rational(&a.r)?, a.s)?);
            }
            bands.push(Band::new(b.offset, CoeffSeq::from_atoms(atoms)?, b.start)?);
        }
        let mut seen = BTreeSet::new();
        let mut triplets = Vec::new();
        for (i, jj, v) in &j.finite {
            if !seen.insert((*i, *jj)) {
                return Err(BpfError::DuplicateEntry(*i, *jj));
            }
            triplets.push((*i, *jj, parse_rational(v)?));
        }
        Ok(BpfMatrix::assemble(bands, FiniteRankPart::from_triplets(triplets)?))
    }
}

impl Serialize for BpfMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BpfJson::from(self).serialize(serializer)
    }
}

/// Same `[row, col, value]` triplets as the matrix wire form.
impl Serialize for FiniteRankPart {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let triplets: Vec<(u64, u64, String)> =
            self.iter().map(|(i, j, v)| (i, j, v.to_string())).collect();
        triplets.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BpfMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = BpfJson::deserialize(deserializer)?;
        BpfMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn d2() -> BpfMatrix {
        BpfMatrix::geometric_diagonal(q(2, 1)).unwrap()
    }

    fn i_minus_e11() -> BpfMatrix {
        &BpfMatrix::identity() - &BpfMatrix::unit(1, 1)
    }

    #[test]
    fn shift_constructor() {
        let s1 = BpfMatrix::shift(1);
        assert_eq!(s1.entry(2, 1), q(1, 1));
        assert_eq!(s1.entry(1, 1), q(0, 1));
        assert_eq!(BpfMatrix::shift(0), BpfMatrix::identity());
        let sm2 = BpfMatrix::shift(-2);
        assert_eq!(sm2.entry(1, 3), q(1, 1));
        for i in 1..10 {
            assert!(sm2.entry(i, 1).is_zero());
            assert!(sm2.entry(i, 2).is_zero());
        }
    }

    #[test]
    fn band_constructor_examples() {
        let t1 = BpfMatrix::weighted_up();
        assert_eq!(t1.entry(5, 4), q(5, 1));
        let tm1 = BpfMatrix::weighted_down();
        assert_eq!(tm1.entry(1, 2), q(1, 2));
        assert_eq!(BpfMatrix::factorial_diagonal(-1).entry(3, 3), q(1, 6));
    }

    #[test]
    fn band_constructor_errors() {
        assert!(matches!(
            BpfMatrix::band(-2, CoeffSeq::one(), 2),
            Err(BpfError::BadStart { min: 3, .. })
        ));
        let inv = RatFunc::poly(Poly::from_i64s(&[-3, 1])).recip().unwrap();
        let seq = CoeffSeq::atom(inv, q(1, 1), 0).unwrap();
        assert!(matches!(
            BpfMatrix::band(0, seq.clone(), 1),
            Err(BpfError::PoleOnDomain { pole: 3, .. })
        ));
        assert!(BpfMatrix::band(0, seq, 4).is_ok());
    }

    #[test]
    fn units_multiply_by_delta_rule() {
        let e11 = BpfMatrix::unit(1, 1);
        assert_eq!(&e11 * &e11, e11);
        assert!((&BpfMatrix::unit(1, 2) * &BpfMatrix::unit(3, 4)).is_zero());
        let e23 = BpfMatrix::unit(2, 3);
        assert_eq!(e23.entry(2, 3), q(1, 1));
        assert!(e23.entry(3, 2).is_zero());
    }

    #[test]
    fn addition_examples() {
        let s1 = BpfMatrix::shift(1);
        assert!((&s1 + &s1.neg()).is_zero());
        let m = i_minus_e11();
        assert!(m.entry(1, 1).is_zero());
        for k in 2..10 {
            assert_eq!(m.entry(k, k), q(1, 1));
        }
        let late = BpfMatrix::band(0, CoeffSeq::one(), 3).unwrap();
        let head = BpfMatrix::from_finite(
            FiniteRankPart::from_triplets([(1, 1, q(1, 1)), (2, 2, q(1, 1))]).unwrap(),
        );
        assert_eq!(&late + &head, BpfMatrix::identity());
    }

    #[test]
    fn toeplitz_relations() {
        let (x, y) = (BpfMatrix::shift(-1), BpfMatrix::shift(1));
        assert_eq!(&x * &y, BpfMatrix::identity());
        assert_eq!(&y * &x, i_minus_e11());
        let (tx, ty) = (BpfMatrix::weighted_down(), BpfMatrix::weighted_up());
        assert_eq!(&tx * &ty, BpfMatrix::identity());
        assert_eq!(&ty * &tx, i_minus_e11());
    }

    #[test]
    fn entries_and_truncation() {
        assert_eq!(BpfMatrix::identity().entry(7, 7), q(1, 1));
        assert_eq!(d2().entry(4, 4), q(8, 1));
        let t = BpfMatrix::shift(1).truncate(3, 3).to_rows();
        let z = q(0, 1);
        let o = q(1, 1);
        assert_eq!(
            t,
            vec![
                vec![z.clone(), z.clone(), z.clone()],
                vec![o.clone(), z.clone(), z.clone()],
                vec![z.clone(), o.clone(), z.clone()]
            ]
        );
        assert_eq!(BpfMatrix::zero().truncate(2, 2), DenseMatrix::zeros(2, 2));
        let d = d2().truncate(3, 3);
        assert_eq!((d.get(0, 0), d.get(1, 1), d.get(2, 2)), (&o, &q(2, 1), &q(4, 1)));
    }

    #[test]
    fn transpose_examples() {
        assert_eq!(BpfMatrix::shift(1).transpose(), BpfMatrix::shift(-1));
        assert_eq!(d2().transpose(), d2());
        assert_eq!(BpfMatrix::unit(2, 3).transpose(), BpfMatrix::unit(3, 2));
        let t = BpfMatrix::weighted_down();
        assert_eq!(t.transpose().transpose(), t);
        for i in 1..8 {
            for j in 1..8 {
                assert_eq!(t.transpose().entry(i, j), t.entry(j, i));
            }
        }
    }

    #[test]
    fn coset_equality_examples() {
        let id = BpfMatrix::identity();
        assert!(id.coset_eq(&i_minus_e11()));
        assert_ne!(id, i_minus_e11());
        assert!(!BpfMatrix::shift(1).coset_eq(&BpfMatrix::weighted_up()));
        assert_eq!(CosetRep(id.clone()), CosetRep(i_minus_e11()));
    }

    #[test]
    fn finite_ideal_absorbs() {
        let f = BpfMatrix::from_finite(
            FiniteRankPart::from_triplets([(1, 3, q(2, 1)), (4, 1, q(-1, 1))]).unwrap(),
        );
        for m in [BpfMatrix::shift(-2), d2(), BpfMatrix::weighted_up()] {
            assert!((&m * &f).is_finite_rank());
            assert!((&f * &m).is_finite_rank());
        }
    }

    #[test]
    fn coset_dependency_detects_finite_combinations() {
        let id = BpfMatrix::identity();
        let ms = [id.clone(), i_minus_e11(), BpfMatrix::shift(1)];
        let c = BpfMatrix::coset_dependency(&ms).unwrap();
        assert!(c[2].is_zero());
        assert_eq!(c[0], -c[1].clone());
        let powers: Vec<BpfMatrix> = (0..4).map(|n| d2().pow(n)).collect();
        assert!(BpfMatrix::coset_dependency(&powers).is_none());
        // (i+1)/i and 1 + 1/i agree as sequences
        let a = BpfMatrix::diagonal(
            CoeffSeq::atom(
                RatFunc::new(Poly::from_i64s(&[1, 1]), Poly::var()).unwrap(),
                q(1, 1),
                0,
            )
            .unwrap(),
        )
        .unwrap();
        let inv_i = RatFunc::poly(Poly::var()).recip().unwrap();
        let b = BpfMatrix::diagonal(CoeffSeq::atom(inv_i, q(1, 1), 0).unwrap()).unwrap();
        let c = BpfMatrix::coset_dependency(&[a, b, id]).unwrap();
        assert_eq!(c[0], -c[1].clone());
        assert_eq!(c[0], -c[2].clone());
    }

    #[test]
    fn json_round_trip() {
        let m = &BpfMatrix::weighted_down() + &BpfMatrix::unit(3, 1).scale(&q(-5, 7));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"bands":[{"offset":-1,"start":2,"atoms":[{"q_num":["1"],"q_den":["0","1"],"r":"1","s":0}]}],"finite":[[3,1,"-5/7"]]}"#
        );
        let back: BpfMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_invalid_bands() {
        let bad = r#"{"bands":[{"offset":-1,"start":1,"atoms":[{"q_num":["1"],"q_den":["1"],"r":"1","s":0}]}],"finite":[]}"#;
        assert!(serde_json::from_str::<BpfMatrix>(bad).is_err());
        let dup = r#"{"bands":[],"finite":[[1,1,"1"],[1,1,"2"]]}"#;
        assert!(serde_json::from_str::<BpfMatrix>(dup).is_err());
    }
}
