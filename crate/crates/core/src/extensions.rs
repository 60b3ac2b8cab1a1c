//! Extensions of the Laurent polynomials `ℚ[x, x⁻¹]` by the finite matrices.
//!
//! An extension is recorded by the images `(X, Y)` of `x` and `x⁻¹` in the
//! row-and-column-finite matrices; they must be mutually inverse modulo the
//! finite ideal, and the powers of `X` and `Y` must stay independent there.
//! Elements of the pullback are Laurent polynomials carried together with the
//! finite matrix that corrects their monomial realization.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::bpf::{BpfMatrix, FiniteRankPart};
use crate::fredholm::{self, FredholmError, TruncationConfig, Vector};
use crate::linalg::DenseMatrix;
use crate::seqalg::{rational_pow, Threshold};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtensionError {
    #[error("x·y is not the identity")]
    NotRightInverse,
    #[error("y·x is the identity, so the pair is not directly infinite")]
    NotDirectlyInfinite,
    #[error("matrix unit relation fails for E({i},{j})·E({k},{l})")]
    UnitRelationFailed { i: u64, j: u64, k: u64, l: u64 },
    #[error("matrix units cached up to {cached}, {requested} requested")]
    InsufficientUnits { cached: u64, requested: u64 },
    #[error("E({0},{0})·a·E({1},{1}) is not a multiple of E({0},{1})")]
    InconsistentScalar(u64, u64),
    #[error("generator images are not inverse modulo finite matrices")]
    NotCosetInverse,
    #[error("monomials are dependent modulo finite matrices: {0}")]
    DependentMonomials(String),
    #[error("elements belong to different extensions")]
    ParentMismatch,
    #[error("product residual is not finite rank")]
    CanonicalizationFailure,
    #[error("index of the x image is not certified")]
    UncertifiedIndex,
    #[error("witness is not an exact two-sided inverse pair")]
    NotInvertibleWitness,
    #[error("exponent {0} appears twice")]
    DuplicateExponents(i64),
    #[error("symbolic and numeric independence checks disagree")]
    CrossCheckDisagreement,
    #[error(transparent)]
    Fredholm(#[from] FredholmError),
}

/// `E_ij = y^{i−1}(I − yx)x^{j−1}` for `1 ≤ i, j ≤ n`, verified on construction.
#[derive(Debug, Clone)]
pub struct MatrixUnitSystem {
    x: BpfMatrix,
    y: BpfMatrix,
    units: BTreeMap<(u64, u64), BpfMatrix>,
    n: u64,
}

impl MatrixUnitSystem {
    pub fn x(&self) -> &BpfMatrix {
        &self.x
    }

    pub fn y(&self) -> &BpfMatrix {
        &self.y
    }

    pub fn size(&self) -> u64 {
        self.n
    }

    pub fn unit(&self, i: u64, j: u64) -> Option<&BpfMatrix> {
        self.units.get(&(i, j))
    }
}

pub fn matrix_units(x: &BpfMatrix, y: &BpfMatrix, n: u64) -> Result<MatrixUnitSystem, ExtensionError> {
    let id = BpfMatrix::identity();
    if x * y != id {
        return Err(ExtensionError::NotRightInverse);
    }
    let yx = y * x;
    if yx == id {
        return Err(ExtensionError::NotDirectlyInfinite);
    }
    let p = &id - &yx;
    let mut y_pows = vec![id.clone()];
    let mut x_pows = vec![id];
    for k in 1..n as usize {
        y_pows.push(&y_pows[k - 1] * y);
        x_pows.push(&x_pows[k - 1] * x);
    }
    let mut units = BTreeMap::new();
    for i in 1..=n {
        let left = &y_pows[i as usize - 1] * &p;
        for j in 1..=n {
            units.insert((i, j), &left * &x_pows[j as usize - 1]);
        }
    }
    for ((i, j), eij) in &units {
        for ((k, l), ekl) in &units {
            let prod = eij * ekl;
            let ok = if j == k {
                prod == units[&(*i, *l)]
            } else {
                prod.is_zero()
            };
            if !ok {
                return Err(ExtensionError::UnitRelationFailed {
                    i: *i,
                    j: *j,
                    k: *k,
                    l: *l,
                });
            }
        }
    }
    Ok(MatrixUnitSystem {
        x: x.clone(),
        y: y.clone(),
        units,
        n,
    })
}

/// Some position holding a nonzero entry.
fn nonzero_position(m: &BpfMatrix) -> Option<(u64, u64)> {
    for (i, j, _) in m.finite().iter() {
        if !m.entry(i, j).is_zero() {
            return Some((i, j));
        }
    }
    for b in m.bands() {
        if let Ok(Threshold::Certified(n0)) = b.seq().nonvanishing_threshold() {
            let j = n0.max(b.start());
            return Some(((j as i64 + b.offset()) as u64, j));
        }
    }
    None
}

/// Top-left `n × n` block of the image of `a` under `a ↦ (E_ii·a·E_jj)`.
pub fn embed(a: &BpfMatrix, units: &MatrixUnitSystem, n: u64) -> Result<DenseMatrix, ExtensionError> {
    if n > units.n {
        return Err(ExtensionError::InsufficientUnits {
            cached: units.n,
            requested: n,
        });
    }
    let mut out = DenseMatrix::zeros(n as usize, n as usize);
    for i in 1..=n {
        let left = units.units[&(i, i)].mul(a);
        for j in 1..=n {
            let block = &left * &units.units[&(j, j)];
            let eij = &units.units[&(i, j)];
            let (p, q) = nonzero_position(eij).ok_or(ExtensionError::InconsistentScalar(i, j))?;
            let c = block.entry(p, q) / eij.entry(p, q);
            if block != eij.scale(&c) {
                return Err(ExtensionError::InconsistentScalar(i, j));
            }
            out.set((i - 1) as usize, (j - 1) as usize, c);
        }
    }
    Ok(out)
}

/// Finitely supported map from exponents to coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly(BTreeMap<i64, Rational>);

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, Rational::one())
    }

    /// `c·xⁿ`
    pub fn monomial(n: i64, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(n, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Rational)>) -> Self {
        let mut p = Self::zero();
        for (n, c) in terms {
            p.add_term(n, c);
        }
        p
    }

    fn add_term(&mut self, n: i64, c: Rational) {
        let slot = self.0.entry(n).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.0.remove(&n);
        }
    }

    pub fn coeff(&self, n: i64) -> Rational {
        self.0.get(&n).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.0.iter().map(|(&n, c)| (n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (n, c) in other.terms() {
            p.add_term(n, c.clone());
        }
        p
    }

    pub fn neg(&self) -> Self {
        LaurentPoly(self.0.iter().map(|(&n, c)| (n, -c)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (a, x) in self.terms() {
            for (b, y) in other.terms() {
                p.add_term(a + b, x * y);
            }
        }
        p
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (&n, c)) in self.0.iter().rev().enumerate() {
            let mag = c.abs();
            match (k, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            match n {
                0 => write!(f, "{mag}")?,
                _ if mag.is_one() => {}
                _ => write!(f, "{mag}*")?,
            }
            match n {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{n}")?,
            }
        }
        Ok(())
    }
}

/// Serialized as `[[exponent, "p/q"], …]`.
impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.0.len()))?;
        for (n, c) in self.terms() {
            seq.serialize_element(&(n, c.to_string()))?;
        }
        seq.end()
    }
}

/// Validated generator images of an extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtensionAlgebra {
    label: String,
    x_image: BpfMatrix,
    y_image: BpfMatrix,
    /// Largest exponent covered by the independence check.
    depth: u32,
}

impl ExtensionAlgebra {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn x_image(&self) -> &BpfMatrix {
        &self.x_image
    }

    pub fn y_image(&self) -> &BpfMatrix {
        &self.y_image
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `Σ_{n>0} aₙXⁿ + a₀I + Σ_{n<0} aₙY⁻ⁿ`
    pub fn realize(&self, p: &LaurentPoly) -> BpfMatrix {
        let mut acc = BpfMatrix::zero();
        for (n, c) in p.terms() {
            let m = match n.cmp(&0) {
                std::cmp::Ordering::Greater => self.x_image.pow(n as u32),
                std::cmp::Ordering::Equal => BpfMatrix::identity(),
                std::cmp::Ordering::Less => self.y_image.pow(n.unsigned_abs() as u32),
            };
            acc = &acc + &m.scale(c);
        }
        acc
    }
}

pub fn make_extension(
    x: &BpfMatrix,
    y: &BpfMatrix,
    label: &str,
    depth: u32,
) -> Result<ExtensionAlgebra, ExtensionError> {
    let id = BpfMatrix::identity();
    if !(x * y).coset_eq(&id) || !(y * x).coset_eq(&id) {
        return Err(ExtensionError::NotCosetInverse);
    }
    let mut names = vec!["1".to_string()];
    let mut monomials = vec![id];
    for n in 1..=depth {
        names.push(format!("x^{n}"));
        monomials.push(x.pow(n));
        names.push(format!("x^-{n}"));
        monomials.push(y.pow(n));
    }
    if let Some(c) = BpfMatrix::coset_dependency(&monomials) {
        let witness: Vec<String> = c
            .iter()
            .zip(&names)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, name)| format!("({c})*{name}"))
            .collect();
        return Err(ExtensionError::DependentMonomials(format!(
            "{} is finite rank",
            witness.join(" + ")
        )));
    }
    Ok(ExtensionAlgebra {
        label: label.to_string(),
        x_image: x.clone(),
        y_image: y.clone(),
        depth,
    })
}

/// `x ↦ S(−n)` for `n ≥ 1`; the diagonal model `x ↦ Diag(2^{i−1})` for `n = 0`.
pub fn family_tn(n: u64, depth: u32) -> ExtensionAlgebra {
    let (x, y) = if n == 0 {
        let two = Rational::from_integer(2.into());
        (
            BpfMatrix::geometric_diagonal(two.clone()).unwrap(),
            BpfMatrix::geometric_diagonal(two.recip()).unwrap(),
        )
    } else {
        (BpfMatrix::shift(-(n as i64)), BpfMatrix::shift(n as i64))
    };
    make_extension(&x, &y, &format!("T_{n}"), depth).expect("family members are valid extensions")
}

/// An element of the pullback: its matrix is `parent.realize(poly) + correction`.
#[derive(Debug, Clone)]
pub struct PullbackElem {
    poly: LaurentPoly,
    correction: FiniteRankPart,
    parent: Arc<ExtensionAlgebra>,
}

impl PartialEq for PullbackElem {
    fn eq(&self, other: &Self) -> bool {
        self.poly == other.poly && self.correction == other.correction && self.parent == other.parent
    }
}

impl PullbackElem {
    pub fn new(parent: &Arc<ExtensionAlgebra>, poly: LaurentPoly, correction: FiniteRankPart) -> Self {
        PullbackElem {
            poly,
            correction,
            parent: Arc::clone(parent),
        }
    }

    pub fn poly(&self) -> &LaurentPoly {
        &self.poly
    }

    pub fn correction(&self) -> &FiniteRankPart {
        &self.correction
    }

    pub fn parent(&self) -> &ExtensionAlgebra {
        &self.parent
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero() && self.correction.is_empty()
    }

    pub fn matrix(&self) -> BpfMatrix {
        self.parent.realize(&self.poly).add_finite(&self.correction)
    }

    fn same_parent(&self, other: &Self) -> Result<(), ExtensionError> {
        if Arc::ptr_eq(&self.parent, &other.parent) || self.parent == other.parent {
            Ok(())
        } else {
            Err(ExtensionError::ParentMismatch)
        }
    }

    /// Splits a matrix known to realize `poly` modulo finite rank.
    fn canonical(&self, poly: LaurentPoly, m: BpfMatrix) -> Result<Self, ExtensionError> {
        let residual = &m - &self.parent.realize(&poly);
        if !residual.is_finite_rank() {
            return Err(ExtensionError::CanonicalizationFailure);
        }
        Ok(PullbackElem::new(&self.parent, poly, residual.finite().clone()))
    }
}

pub fn ext_mul(a: &PullbackElem, b: &PullbackElem) -> Result<PullbackElem, ExtensionError> {
    a.same_parent(b)?;
    a.canonical(a.poly.mul(&b.poly), &a.matrix() * &b.matrix())
}

pub fn ext_add(a: &PullbackElem, b: &PullbackElem) -> Result<PullbackElem, ExtensionError> {
    a.same_parent(b)?;
    a.canonical(a.poly.add(&b.poly), &a.matrix() + &b.matrix())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Splitting {
    pub sigma_x: BpfMatrix,
    pub sigma_x_inv: BpfMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrivialityVerdict {
    pub trivial: bool,
    pub index: i64,
    pub splitting: Option<Splitting>,
    /// Why the splitting is absent from a trivial verdict.
    pub diagnostic: Option<String>,
}

/// Trivial exactly when the index of the `x` image is zero. In that case the
/// image is split as `U + m` with `U` bijective, and `U⁻¹ = Y + F` where
/// `U·F = I − U·Y` is solved column by column.
pub fn classify_trivial(ext: &ExtensionAlgebra, cfg: &TruncationConfig) -> Result<TrivialityVerdict, ExtensionError> {
    let idx = fredholm::index(&ext.x_image, cfg)?;
    if !idx.certified {
        return Err(ExtensionError::UncertifiedIndex);
    }
    if idx.index != 0 {
        return Ok(TrivialityVerdict {
            trivial: false,
            index: idx.index,
            splitting: None,
            diagnostic: None,
        });
    }
    let (splitting, diagnostic) = match splitting(ext, cfg) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(TrivialityVerdict {
        trivial: true,
        index: 0,
        splitting,
        diagnostic,
    })
}

fn splitting(ext: &ExtensionAlgebra, cfg: &TruncationConfig) -> Result<Splitting, ExtensionError> {
    let u = fredholm::index_zero_split(&ext.x_image, cfg)?.u;
    let id = BpfMatrix::identity();
    let s = &id - &(&u * &ext.y_image);
    if !s.is_finite_rank() {
        return Err(ExtensionError::CanonicalizationFailure);
    }
    let mut f = FiniteRankPart::new();
    for col in s.finite().col_support() {
        let mut b = Vector::new();
        for (i, j, v) in s.finite().iter() {
            if j == col {
                b.set(i, v.clone());
            }
        }
        for (i, v) in fredholm::preimage(&u, &b, cfg)?.iter() {
            f.add_entry(i, col, v.clone());
        }
    }
    let inv = ext.y_image.add_finite(&f);
    if &u * &inv != id || &inv * &u != id {
        return Err(FredholmError::VerificationFailed("splitting inverse is not two-sided".into()).into());
    }
    Ok(Splitting {
        sigma_x: u,
        sigma_x_inv: inv,
    })
}

/// Whether conjugation by the witness carries one pair of generator images to
/// the other modulo finite matrices.
pub fn equivalence_check(
    e1: &ExtensionAlgebra,
    e2: &ExtensionAlgebra,
    u: &BpfMatrix,
    u_inv: &BpfMatrix,
) -> Result<bool, ExtensionError> {
    let id = BpfMatrix::identity();
    if u * u_inv != id || u_inv * u != id {
        return Err(ExtensionError::NotInvertibleWitness);
    }
    let conj = |m: &BpfMatrix| &(u_inv * m) * u;
    Ok(conj(&e1.x_image).coset_eq(&e2.x_image) && conj(&e1.y_image).coset_eq(&e2.y_image))
}

/// Independence of `{Diag(2ⁿ)^{i−1}}` modulo finite matrices, decided on the
/// coefficient sequences and cross-checked on the Vandermonde block of rows
/// `cutoff .. cutoff + len − 1`.
pub fn diag_independence(exponents: &[i64], cutoff: u64) -> Result<bool, ExtensionError> {
    let mut seen = std::collections::BTreeSet::new();
    for &n in exponents {
        if !seen.insert(n) {
            return Err(ExtensionError::DuplicateExponents(n));
        }
    }
    let two = Rational::from_integer(2.into());
    let nodes: Vec<Rational> = exponents.iter().map(|&n| rational_pow(&two, n)).collect();
    let ms: Vec<BpfMatrix> = nodes
        .iter()
        .map(|r| BpfMatrix::geometric_diagonal(r.clone()).unwrap())
        .collect();
    let symbolic = BpfMatrix::coset_dependency(&ms).is_none();
    let rows = (0..exponents.len() as u64)
        .map(|k| {
            let i = cutoff.max(1) + k;
            nodes.iter().map(|r| rational_pow(r, i as i64 - 1)).collect()
        })
        .collect();
    let numeric = DenseMatrix::from_rows(rows).rank() == exponents.len();
    if symbolic != numeric {
        return Err(ExtensionError::CrossCheckDisagreement);
    }
    Ok(symbolic)
}
