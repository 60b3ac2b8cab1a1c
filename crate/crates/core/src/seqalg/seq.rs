use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::poly::{Poly, RootBoundExceeded};
use super::ratfunc::RatFunc;
use crate::Rational;

/// Iteration cap for the crossover scans in [`CoeffSeq::nonvanishing_threshold`].
const CROSSOVER_SCAN_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("sequence has a pole at index {0}")]
    PoleAtIndex(u64),
    #[error("atom ratio r must be nonzero")]
    ZeroRatio,
    #[error("sequence is identically zero")]
    ZeroSequence,
    #[error(transparent)]
    RootBound(#[from] RootBoundExceeded),
}

/// Growth class `rⁱ·(i!)ˢ` of an atom. Atoms of a canonical sequence have distinct keys.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GrowthKey {
    pub r: Rational,
    pub s: i64,
}

/// The sequence `i ↦ q(i)·rⁱ·(i!)ˢ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeqAtom {
    pub q: RatFunc,
    pub r: Rational,
    pub s: i64,
}

impl SeqAtom {
    pub fn new(q: RatFunc, r: Rational, s: i64) -> Result<Self, SeqError> {
        if r.is_zero() {
            return Err(SeqError::ZeroRatio);
        }
        Ok(SeqAtom { q, r, s })
    }

    pub fn eval(&self, i: u64) -> Result<Rational, SeqError> {
        let q = self.q.eval(i as i64).ok_or(SeqError::PoleAtIndex(i))?;
        Ok(q * growth(&self.r, self.s, i))
    }
}

/// `rⁱ·(i!)ˢ`
fn growth(r: &Rational, s: i64, i: u64) -> Rational {
    let mut v = rational_pow(r, i as i64);
    if s != 0 {
        let f = Rational::from_integer(factorial(i));
        v *= rational_pow(&f, s);
    }
    v
}

pub(crate) fn rational_pow(base: &Rational, e: i64) -> Rational {
    let mut acc = Rational::one();
    let b = if e < 0 { base.recip() } else { base.clone() };
    let mut n = e.unsigned_abs();
    let mut sq = b;
    while n > 0 {
        if n & 1 == 1 {
            acc *= &sq;
        }
        n >>= 1;
        if n > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Outcome of the eventual-nonvanishing search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Threshold {
    /// `seq(i) ≠ 0` for every `i ≥ N₀`.
    Certified(u64),
    Uncertifiable(String),
}

/// Finite sum of atoms, keyed by growth class.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CoeffSeq {
    atoms: BTreeMap<GrowthKey, RatFunc>,
}

impl CoeffSeq {
    pub fn zero() -> Self {
        CoeffSeq::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_atom(SeqAtom {
            q: RatFunc::constant(c),
            r: Rational::one(),
            s: 0,
        })
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn from_atom(atom: SeqAtom) -> Self {
        let mut seq = CoeffSeq::zero();
        seq.insert(GrowthKey { r: atom.r, s: atom.s }, atom.q);
        seq
    }

    /// Builds `q·rⁱ·(i!)ˢ`.
    pub fn atom(q: RatFunc, r: Rational, s: i64) -> Result<Self, SeqError> {
        Ok(Self::from_atom(SeqAtom::new(q, r, s)?))
    }

    /// Polynomial `q`, unit growth.
    pub fn poly(p: Poly) -> Self {
        Self::from_atom(SeqAtom {
            q: RatFunc::poly(p),
            r: Rational::one(),
            s: 0,
        })
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = SeqAtom>) -> Result<Self, SeqError> {
        let mut seq = CoeffSeq::zero();
        for a in atoms {
            if a.r.is_zero() {
                return Err(SeqError::ZeroRatio);
            }
            seq.insert(GrowthKey { r: a.r, s: a.s }, a.q);
        }
        Ok(seq)
    }

    fn insert(&mut self, key: GrowthKey, q: RatFunc) {
        use std::collections::btree_map::Entry;
        match self.atoms.entry(key) {
            Entry::Vacant(v) => {
                if !q.is_zero() {
                    v.insert(q);
                }
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &q;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = SeqAtom> + '_ {
        self.atoms.iter().map(|(k, q)| SeqAtom {
            q: q.clone(),
            r: k.r.clone(),
            s: k.s,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (&GrowthKey, &RatFunc)> {
        self.atoms.iter()
    }

    /// The single atom, when there is exactly one.
    pub fn single_atom(&self) -> Option<SeqAtom> {
        (self.atoms.len() == 1).then(|| self.atoms().next().unwrap())
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn eval(&self, i: u64) -> Result<Rational, SeqError> {
        let mut acc = Rational::zero();
        for (k, q) in &self.atoms {
            let qv = q.eval(i as i64).ok_or(SeqError::PoleAtIndex(i))?;
            acc += qv * growth(&k.r, k.s, i);
        }
        Ok(acc)
    }

    pub fn add(&self, other: &CoeffSeq) -> CoeffSeq {
        let mut out = self.clone();
        for (k, q) in &other.atoms {
            out.insert(k.clone(), q.clone());
        }
        out
    }

    pub fn neg(&self) -> CoeffSeq {
        CoeffSeq {
            atoms: self.atoms.iter().map(|(k, q)| (k.clone(), -q)).collect(),
        }
    }

    pub fn sub(&self, other: &CoeffSeq) -> CoeffSeq {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> CoeffSeq {
        if c.is_zero() {
            return CoeffSeq::zero();
        }
        CoeffSeq {
            atoms: self.atoms.iter().map(|(k, q)| (k.clone(), q.scale(c))).collect(),
        }
    }

    pub fn mul(&self, other: &CoeffSeq) -> CoeffSeq {
        let mut out = CoeffSeq::zero();
        for (ka, qa) in &self.atoms {
            for (kb, qb) in &other.atoms {
                let key = GrowthKey {
                    r: &ka.r * &kb.r,
                    s: ka.s + kb.s,
                };
                out.insert(key, qa * qb);
            }
        }
        out
    }

    /// The sequence `i ↦ seq(i + k)`, kept inside the atom algebra via
    /// `(i+k)! = i!·(i+1)⋯(i+k)` and the reciprocal product for `k < 0`.
    pub fn shift(&self, k: i64) -> CoeffSeq {
        if k == 0 {
            return self.clone();
        }
        let rising = falling_factorial_ratio(k);
        let mut out = CoeffSeq::zero();
        for (key, q) in &self.atoms {
            let mut nq = q.shift(k).scale(&rational_pow(&key.r, k));
            if key.s != 0 {
                nq = &nq * &rising.pow(key.s);
            }
            out.insert(key.clone(), nq);
        }
        out
    }

    /// Largest positive integer pole over all atoms.
    pub fn max_pole(&self) -> Result<Option<u64>, SeqError> {
        let mut best = None;
        for q in self.atoms.values() {
            if let Some(p) = q.den().largest_positive_integer_root()? {
                best = best.max(Some(p));
            }
        }
        Ok(best)
    }

    /// Finds `N₀` with `seq(i) ≠ 0` for all `i ≥ N₀`.
    ///
    /// A single atom is certified from the integer roots and poles of its
    /// rational part. Several atoms are certified when one atom strictly
    /// dominates in growth order `(s, |r|)`: past an explicit crossover bound
    /// the sum of the others is smaller in absolute value than the dominant term.
    pub fn nonvanishing_threshold(&self) -> Result<Threshold, SeqError> {
        if self.is_zero() {
            return Err(SeqError::ZeroSequence);
        }
        if let Some(atom) = self.single_atom() {
            return Ok(Threshold::Certified(single_atom_threshold(&atom.q)?));
        }

        let order = |k: &GrowthKey| (k.s, k.r.abs());
        let (dom_key, dom_q) = self
            .atoms
            .iter()
            .max_by(|a, b| order(a.0).cmp(&order(b.0)))
            .unwrap();
        let ties = self
            .atoms
            .keys()
            .filter(|k| order(k) == order(dom_key))
            .count();
        if ties > 1 {
            return Ok(Threshold::Uncertifiable(format!(
                "no strictly dominant atom: {ties} atoms share growth order (s={}, |r|={})",
                dom_key.s,
                dom_key.r.abs()
            )));
        }

        let mut start = single_atom_threshold(dom_q)?;
        if let Some(p) = self.max_pole()? {
            start = start.max(p + 1);
        }

        let mut tails = Vec::new();
        for (key, q) in self.atoms.iter().filter(|(k, _)| *k != dom_key) {
            let ratio = q * &dom_q.recip().expect("dominant atom is nonzero");
            let tail = TailBound::new(&ratio, key, dom_key);
            let Some(i1) = tail.decreasing_from() else {
                return Ok(Threshold::Uncertifiable(
                    "crossover scan limit reached".to_string(),
                ));
            };
            start = start.max(tail.i0).max(i1);
            tails.push(tail);
        }

        let mut values: Vec<Rational> = tails.iter().map(|t| t.value_at(start)).collect();
        let mut i = start;
        loop {
            let total = values.iter().fold(Rational::zero(), |a, b| a + b);
            if total < Rational::one() {
                return Ok(Threshold::Certified(i));
            }
            if i - start >= CROSSOVER_SCAN_LIMIT {
                return Ok(Threshold::Uncertifiable(
                    "crossover scan limit reached".to_string(),
                ));
            }
            for (v, t) in values.iter_mut().zip(&tails) {
                *v *= t.step_ratio(i);
            }
            i += 1;
        }
    }
}

/// `(i+k)!/i!` as a rational function of `i`.
fn falling_factorial_ratio(k: i64) -> RatFunc {
    let mut p = Poly::one();
    if k >= 0 {
        for m in 1..=k {
            p = &p * &Poly::linear(Rational::from_integer(m.into()));
        }
        RatFunc::poly(p)
    } else {
        for m in 0..(-k) {
            p = &p * &Poly::linear(Rational::from_integer((-m).into()));
        }
        RatFunc::poly(p).recip().unwrap()
    }
}

fn single_atom_threshold(q: &RatFunc) -> Result<u64, SeqError> {
    let worst = q
        .zeros()?
        .into_iter()
        .chain(q.poles()?)
        .max()
        .unwrap_or(0);
    Ok(worst + 1)
}

/// Upper bound `g(i) = C·i^D·ρⁱ/(i!)^Δ` on `|other(i)/dominant(i)|`, valid for `i ≥ i0`.
struct TailBound {
    c: Rational,
    d: u32,
    rho: Rational,
    delta: i64,
    i0: u64,
}

impl TailBound {
    fn new(ratio: &RatFunc, key: &GrowthKey, dom: &GrowthKey) -> Self {
        let num = ratio.num();
        let den = ratio.den();
        let lc = den.leading().unwrap().abs();
        let deg_den = den.degree().unwrap();
        let deg_num = num.degree().unwrap_or(0);
        let lower: Rational = den.coeffs()[..deg_den]
            .iter()
            .map(|c| c.abs())
            .fold(Rational::zero(), |a, b| a + b);
        // |den(i)| ≥ lc/2 · i^deg once i ≥ 2·lower/lc
        let i0 = (Rational::from_integer(2.into()) * lower / &lc).ceil().to_integer();
        let i0 = u64::try_from(i0).unwrap_or(u64::MAX).max(1);
        TailBound {
            c: Rational::from_integer(2.into()) * num.abs_coeff_sum() / lc,
            d: deg_num.saturating_sub(deg_den) as u32,
            rho: (&key.r / &dom.r).abs(),
            delta: dom.s - key.s,
            i0,
        }
    }

    /// `g(i+1)/g(i)`
    fn step_ratio(&self, i: u64) -> Rational {
        let ii = Rational::from_integer(i.into());
        let next = Rational::from_integer((i + 1).into());
        rational_pow(&(&next / &ii), self.d as i64) * &self.rho / rational_pow(&next, self.delta)
    }

    /// First `i` from which `g` is strictly decreasing. The step ratio is
    /// itself nonincreasing in `i`, so the first hit suffices.
    fn decreasing_from(&self) -> Option<u64> {
        (1..=CROSSOVER_SCAN_LIMIT).find(|&i| self.step_ratio(i) < Rational::one())
    }

    fn value_at(&self, i: u64) -> Rational {
        let ii = Rational::from_integer(i.into());
        &self.c * rational_pow(&ii, self.d as i64) * rational_pow(&self.rho, i as i64)
            / rational_pow(&Rational::from_integer(factorial(i)), self.delta)
    }
}

impl fmt::Display for CoeffSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (k, q)) in self.atoms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{q}")?;
            if !k.r.is_one() {
                if k.r.is_integer() && k.r.is_positive() {
                    write!(f, "*{}^i", k.r)?;
                } else {
                    write!(f, "*({})^i", k.r)?;
                }
            }
            match k.s {
                0 => {}
                1 => write!(f, "*i!")?,
                s => write!(f, "*(i!)^{s}")?,
            }
        }
        Ok(())
    }
}
