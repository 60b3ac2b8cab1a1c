//! Kernels, cokernels and the algebraic Fredholm index, with certified
//! truncation bounds, Fredholm inverses for composite expressions, and the
//! splitting of an index-zero matrix into bijective plus finite rank.
//!
//! The kernel bound: let `d` be the top band offset and `N₀` a point past
//! which its coefficients never vanish. If `v` is finitely supported with top
//! index `m` beyond every band start, every finite-part column, every
//! finite-part row minus `d` and `N₀`, then row `m + d` of `A·v` is exactly
//! `c_d(m)·v_m ≠ 0`. So every kernel vector lives in `[1, N*]`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::bpf::{min_start, BpfMatrix, FiniteRankPart};
use crate::expr::{EvalError, MatrixExpr};
use crate::linalg::DenseMatrix;
use crate::seqalg::{CoeffSeq, SeqAtom, Threshold};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncationConfig {
    /// Largest truncation size either mode may build.
    pub max_trunc: u64,
    /// Consecutive equal nullities required by the uncertified fallback.
    pub window: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            max_trunc: 256,
            window: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FredholmError {
    #[error("not Fredholm: {0}")]
    NotFredholm(String),
    #[error("certified support bound {needed} exceeds the truncation limit {limit}")]
    TruncationLimit { needed: u64, limit: u64 },
    #[error("index is {0}, not zero")]
    NotIndexZero(i64),
    #[error("index is not certified")]
    UncertifiedInput,
    #[error("no Fredholm inverse rule applies to `{0}`")]
    UnsupportedExpression(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Finitely supported vector in `⊕ ℚ bᵢ`, indices from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vector(BTreeMap<u64, Rational>);

impl Vector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Basis vector `bᵢ`.
    pub fn basis(i: u64) -> Self {
        let mut v = Self::new();
        v.set(i, Rational::one());
        v
    }

    /// Entry `k` of the slice becomes coordinate `k + 1`.
    pub fn from_dense(xs: &[Rational]) -> Self {
        let mut v = Self::new();
        for (k, x) in xs.iter().enumerate() {
            v.set(k as u64 + 1, x.clone());
        }
        v
    }

    pub fn set(&mut self, i: u64, x: Rational) {
        assert!(i >= 1, "vector indices are 1-based");
        if x.is_zero() {
            self.0.remove(&i);
        } else {
            self.0.insert(i, x);
        }
    }

    pub fn get(&self, i: u64) -> Rational {
        self.0.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.0.iter().map(|(&i, x)| (i, x))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest index in the support, 0 for the zero vector.
    pub fn max_index(&self) -> u64 {
        self.0.keys().next_back().copied().unwrap_or(0)
    }

    pub fn to_dense(&self, n: u64) -> Vec<Rational> {
        (1..=n).map(|i| self.get(i)).collect()
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (i, x)) in self.iter().enumerate() {
            let sep = if k == 0 { "" } else { " + " };
            if x.is_one() {
                write!(f, "{sep}b{i}")?;
            } else {
                write!(f, "{sep}({x})*b{i}")?;
            }
        }
        Ok(())
    }
}

/// Serialized as `[[index, "p/q"], …]`.
impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.0.len()))?;
        for (i, x) in self.iter() {
            seq.serialize_element(&(i, x.to_string()))?;
        }
        seq.end()
    }
}

/// `A·v`, exact.
pub fn apply(a: &BpfMatrix, v: &Vector) -> Vector {
    let mut acc: BTreeMap<u64, Rational> = BTreeMap::new();
    for (j, x) in v.iter() {
        for (i, aij) in a.column(j) {
            *acc.entry(i).or_insert_with(Rational::zero) += aij * x;
        }
    }
    let mut out = Vector::new();
    for (i, x) in acc {
        out.set(i, x);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelBasis {
    pub vectors: Vec<Vector>,
    pub certified: bool,
    /// Column count of the truncation that produced the basis.
    pub truncation_used: u64,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexResult {
    pub kernel_dim: u64,
    pub coker_dim: u64,
    pub index: i64,
    pub certified: bool,
    /// Larger of the two truncation sizes used.
    pub truncation_used: u64,
}

/// Smallest `N*` that provably contains every kernel vector, if the top band
/// certifies eventual nonvanishing.
pub fn support_bound(a: &BpfMatrix) -> Option<u64> {
    let top = a.bands().last()?;
    let d = top.offset();
    let n0 = match top.seq().nonvanishing_threshold() {
        Ok(Threshold::Certified(n0)) => n0,
        _ => return None,
    };
    let starts = a.bands().iter().map(|b| b.start()).max().unwrap_or(1);
    let fin = a.finite();
    let row_term = (fin.max_row() as i64 - d).max(0) as u64;
    Some(n0.max(starts).max(fin.max_col()).max(row_term).max(1))
}

/// Rows that hold every nonzero entry of columns `1..=n`.
fn kernel_rows(a: &BpfMatrix, n: u64) -> u64 {
    let d = a.max_offset().unwrap_or(0).max(0) as u64;
    (n + d).max(a.finite().max_row())
}

fn nullspace_vectors(a: &BpfMatrix, n: u64) -> Vec<Vector> {
    a.truncate(kernel_rows(a, n), n)
        .nullspace()
        .iter()
        .map(|v| Vector::from_dense(v))
        .collect()
}

pub fn kernel_basis(a: &BpfMatrix, cfg: &TruncationConfig) -> Result<KernelBasis, FredholmError> {
    if a.bands().is_empty() {
        return Err(FredholmError::NotFredholm(
            "no bands, so the kernel is infinite dimensional".into(),
        ));
    }
    let (vectors, certified, n) = match support_bound(a) {
        Some(n) if n > cfg.max_trunc => {
            return Err(FredholmError::TruncationLimit {
                needed: n,
                limit: cfg.max_trunc,
            })
        }
        Some(n) => (nullspace_vectors(a, n), true, n),
        None => {
            let n = stable_size(a, cfg)?;
            (nullspace_vectors(a, n), false, n)
        }
    };
    for v in &vectors {
        if !apply(a, v).is_zero() {
            return Err(FredholmError::VerificationFailed(format!(
                "kernel candidate {v} is not annihilated"
            )));
        }
    }
    Ok(KernelBasis {
        vectors,
        certified,
        truncation_used: n,
    })
}

/// First size at which the nullity has held still for `window` consecutive sizes.
fn stable_size(a: &BpfMatrix, cfg: &TruncationConfig) -> Result<u64, FredholmError> {
    let start = a
        .bands()
        .iter()
        .map(|b| b.start())
        .chain([a.finite().max_col(), 1])
        .max()
        .unwrap();
    let mut last = None;
    let mut run = 0;
    for n in start..=cfg.max_trunc {
        let rows = kernel_rows(a, n);
        let nullity = n as usize - a.truncate(rows, n).rank();
        if Some(nullity) == last {
            run += 1;
        } else {
            last = Some(nullity);
            run = 1;
        }
        if run >= cfg.window {
            return Ok(n);
        }
    }
    Err(FredholmError::NotFredholm(format!(
        "top band has no certified nonvanishing threshold and truncated nullities did not settle over {} sizes up to {}",
        cfg.window, cfg.max_trunc
    )))
}

/// Basis of the finitely supported functionals vanishing on the image, i.e. the kernel of the transpose.
pub fn cokernel_basis(a: &BpfMatrix, cfg: &TruncationConfig) -> Result<KernelBasis, FredholmError> {
    kernel_basis(&a.transpose(), cfg)
}

pub fn index(a: &BpfMatrix, cfg: &TruncationConfig) -> Result<IndexResult, FredholmError> {
    let k = kernel_basis(a, cfg)?;
    let c = cokernel_basis(a, cfg)?;
    Ok(IndexResult {
        kernel_dim: k.dim() as u64,
        coker_dim: c.dim() as u64,
        index: k.dim() as i64 - c.dim() as i64,
        certified: k.certified && c.certified,
        truncation_used: k.truncation_used.max(c.truncation_used),
    })
}

/// The unique `x` with `U·x = b`, for `U` with trivial kernel and certified
/// support bound. The bound argument also confines `x`: beyond
/// `max(N*, top(b) − d)` its top entry would leave an uncancelled row.
pub fn preimage(u: &BpfMatrix, b: &Vector, cfg: &TruncationConfig) -> Result<Vector, FredholmError> {
    let n_star = support_bound(u).ok_or(FredholmError::UncertifiedInput)?;
    let d = u.max_offset().unwrap_or(0);
    let n = n_star.max((b.max_index() as i64 - d).max(0) as u64);
    if n > cfg.max_trunc {
        return Err(FredholmError::TruncationLimit {
            needed: n,
            limit: cfg.max_trunc,
        });
    }
    let rows = kernel_rows(u, n).max(b.max_index());
    let x = u
        .truncate(rows, n)
        .solve(&b.to_dense(rows))
        .map(|x| Vector::from_dense(&x))
        .ok_or_else(|| FredholmError::VerificationFailed(format!("{b} is not in the image")))?;
    if apply(u, &x) != *b {
        return Err(FredholmError::VerificationFailed(format!(
            "preimage of {b} does not map back"
        )));
    }
    Ok(x)
}

/// `a0·A = I − r` and `A·a0 = I − s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FredholmInverseCertificate {
    pub a0: BpfMatrix,
    pub r: FiniteRankPart,
    pub s: FiniteRankPart,
}

/// Builds a Fredholm inverse following the shape of the expression, then
/// computes both residuals by exact products and checks they are finite rank.
pub fn fredholm_inverse(e: &MatrixExpr) -> Result<FredholmInverseCertificate, FredholmError> {
    let a = e.eval()?;
    let a0 = candidate(e, &a)?;
    let i = BpfMatrix::identity();
    let r = &i - &(&a0 * &a);
    let s = &i - &(&a * &a0);
    if !r.is_finite_rank() || !s.is_finite_rank() {
        return Err(FredholmError::VerificationFailed(format!(
            "candidate inverse of `{e}` leaves an infinite-rank residual"
        )));
    }
    Ok(FredholmInverseCertificate {
        a0,
        r: r.finite().clone(),
        s: s.finite().clone(),
    })
}

fn candidate(e: &MatrixExpr, a: &BpfMatrix) -> Result<BpfMatrix, FredholmError> {
    use MatrixExpr::*;
    if let Some(inv) = e.exact_inverse() {
        return Ok(inv.eval()?);
    }
    if let Some(a0) = single_band_inverse(a) {
        return Ok(a0);
    }
    let unsupported = || FredholmError::UnsupportedExpression(e.to_string());
    match e {
        Neg(x) => Ok(candidate(x, &x.eval()?)?.neg()),
        Mul(x, y) => {
            let x0 = candidate(x, &x.eval()?)?;
            let y0 = candidate(y, &y.eval()?)?;
            Ok(&y0 * &x0)
        }
        Pow(x, n) if *n >= 0 => Ok(candidate(x, &x.eval()?)?.pow(*n as u32)),
        Add(x, y) | Sub(x, y) => {
            let (xv, yv) = (x.eval()?, y.eval()?);
            if yv.is_finite_rank() {
                candidate(x, &xv)
            } else if xv.is_finite_rank() {
                let y0 = candidate(y, &yv)?;
                Ok(if matches!(e, Sub(..)) { y0.neg() } else { y0 })
            } else {
                Err(unsupported())
            }
        }
        Conj(u, x) => {
            let u_inv = u.exact_inverse().ok_or_else(unsupported)?.eval()?;
            let x0 = candidate(x, &x.eval()?)?;
            Ok(&(&u_inv * &x0) * &u.eval()?)
        }
        _ => Err(unsupported()),
    }
}

/// One band carrying one atom: transpose the band of reciprocals, starting
/// past every zero of the original coefficients.
fn single_band_inverse(a: &BpfMatrix) -> Option<BpfMatrix> {
    let [band] = a.bands() else { return None };
    let atom = band.seq().single_atom()?;
    let Ok(Threshold::Certified(n0)) = band.seq().nonvanishing_threshold() else {
        return None;
    };
    let recip = SeqAtom::new(atom.q.recip()?, atom.r.recip(), -atom.s).ok()?;
    let d = band.offset();
    let start = band.start().max(n0).max(min_start(d));
    let b = BpfMatrix::band(d, CoeffSeq::from_atom(recip), start).ok()?;
    Some(b.transpose())
}

/// `A = u + t` with `u` bijective and `t` finite rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitCertificate {
    pub u: BpfMatrix,
    pub t: FiniteRankPart,
}

/// Coordinates on which a family of vectors restricts to an invertible square block.
fn pivot_coords(vs: &[Vector]) -> (Vec<u64>, DenseMatrix) {
    let n = vs.iter().map(Vector::max_index).max().unwrap_or(0);
    let rows: Vec<Vec<Rational>> = vs.iter().map(|v| v.to_dense(n)).collect();
    let coords: Vec<u64> = DenseMatrix::from_rows(rows)
        .pivot_columns()
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    // g[j][i] = v_i at coordinate J_j
    let g = DenseMatrix::from_rows(
        coords
            .iter()
            .map(|&c| vs.iter().map(|v| v.get(c)).collect())
            .collect(),
    );
    (coords, g)
}

/// Adds `Φ∘P`, where `P` projects onto the kernel along `{x : x_J = 0}` and
/// `Φ` sends the kernel basis to basis vectors complementing the image.
pub fn index_zero_split(
    a: &BpfMatrix,
    cfg: &TruncationConfig,
) -> Result<SplitCertificate, FredholmError> {
    let idx = index(a, cfg)?;
    if !idx.certified {
        return Err(FredholmError::UncertifiedInput);
    }
    if idx.index != 0 {
        return Err(FredholmError::NotIndexZero(idx.index));
    }
    if idx.kernel_dim == 0 {
        return Ok(SplitCertificate {
            u: a.clone(),
            t: FiniteRankPart::new(),
        });
    }
    let ker = kernel_basis(a, cfg)?.vectors;
    let coker = cokernel_basis(a, cfg)?.vectors;
    let (j_coords, g) = pivot_coords(&ker);
    // any functional basis restricted to pivot rows is invertible, so those
    // basis vectors span a complement of the image
    let (w_coords, _) = pivot_coords(&coker);
    let g_inv = g
        .inverse()
        .ok_or_else(|| FredholmError::VerificationFailed("kernel pivot block is singular".into()))?;

    let mut phi_p = FiniteRankPart::new();
    for (i, &w) in w_coords.iter().enumerate() {
        for (j, &c) in j_coords.iter().enumerate() {
            let x = g_inv.get(i, j);
            if !x.is_zero() {
                phi_p.add_entry(w, c, x.clone());
            }
        }
    }
    let u = a.add_finite(&phi_p);
    let check = index(&u, cfg)?;
    if !(check.certified && check.kernel_dim == 0 && check.coker_dim == 0) {
        return Err(FredholmError::VerificationFailed(format!(
            "split part has kernel {} and cokernel {}",
            check.kernel_dim, check.coker_dim
        )));
    }
    Ok(SplitCertificate {
        u,
        t: phi_p.scale(&-Rational::one()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    fn cfg() -> TruncationConfig {
        TruncationConfig::default()
    }

    fn m(src: &str) -> BpfMatrix {
        parse(src).unwrap().eval().unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k = kernel_basis(&BpfMatrix::shift(-1), &cfg()).unwrap();
        assert!(k.certified);
        assert_eq!(k.vectors, vec![Vector::basis(1)]);
        assert_eq!(kernel_basis(&BpfMatrix::shift(1), &cfg()).unwrap().dim(), 0);
        let k = kernel_basis(&BpfMatrix::shift(-2), &cfg()).unwrap();
        assert_eq!(k.vectors, vec![Vector::basis(1), Vector::basis(2)]);
    }

    #[test]
    fn cokernel_examples() {
        let c = cokernel_basis(&BpfMatrix::shift(1), &cfg()).unwrap();
        assert_eq!(c.vectors, vec![Vector::basis(1)]);
        assert_eq!(cokernel_basis(&BpfMatrix::shift(-1), &cfg()).unwrap().dim(), 0);
        let c = cokernel_basis(&m("I - E(1,1)"), &cfg()).unwrap();
        assert_eq!(c.vectors, vec![Vector::basis(1)]);
    }

    #[test]
    fn shift_and_weighted_indices() {
        for i in -3..=3 {
            let r = index(&BpfMatrix::shift(i), &cfg()).unwrap();
            assert!(r.certified);
            assert_eq!(r.index, -i);
        }
        assert_eq!(index(&BpfMatrix::weighted_down(), &cfg()).unwrap().index, 1);
        assert_eq!(index(&BpfMatrix::weighted_up(), &cfg()).unwrap().index, -1);
        let id = index(&BpfMatrix::identity(), &cfg()).unwrap();
        assert_eq!((id.kernel_dim, id.coker_dim, id.index), (0, 0, 0));
    }

    #[test]
    fn finite_rank_is_not_fredholm() {
        assert!(matches!(
            index(&BpfMatrix::unit(1, 1), &cfg()),
            Err(FredholmError::NotFredholm(_))
        ));
        assert!(index(&BpfMatrix::zero(), &cfg()).is_err());
    }

    fn tied_diagonal(extra: i64) -> BpfMatrix {
        // 2^i + (-2)^i + extra: two dominant atoms of equal size, so no threshold
        let atom = |r: i64| SeqAtom::new(crate::RatFunc::one(), Rational::from_integer(r.into()), 0).unwrap();
        let mut atoms = vec![atom(2), atom(-2)];
        if extra != 0 {
            atoms.push(SeqAtom::new(crate::RatFunc::constant(Rational::from_integer(extra.into())), Rational::one(), 0).unwrap());
        }
        BpfMatrix::diagonal(CoeffSeq::from_atoms(atoms).unwrap()).unwrap()
    }

    #[test]
    fn uncertified_fallback_stabilizes() {
        let a = tied_diagonal(1);
        assert!(support_bound(&a).is_none());
        let r = index(&a, &cfg()).unwrap();
        assert!(!r.certified);
        assert_eq!((r.kernel_dim, r.coker_dim), (0, 0));
    }

    #[test]
    fn uncertified_fallback_detects_growth() {
        // vanishes at every odd index, so the kernel keeps growing
        let a = tied_diagonal(0);
        let small = TruncationConfig {
            max_trunc: 40,
            window: 16,
        };
        assert!(matches!(
            kernel_basis(&a, &small),
            Err(FredholmError::NotFredholm(_))
        ));
    }

    #[test]
    fn support_bound_respects_limit() {
        let small = TruncationConfig {
            max_trunc: 3,
            window: 16,
        };
        let a = m("S(1) + E(9,9)");
        assert!(matches!(
            kernel_basis(&a, &small),
            Err(FredholmError::TruncationLimit { needed: 9, limit: 3 })
        ));
    }

    #[test]
    fn perturbed_kernel_is_verified() {
        // the finite part cancels the only entry of column 2
        let a = m("S(-1) - E(1,2)");
        let k = kernel_basis(&a, &cfg()).unwrap();
        assert_eq!(k.dim(), 2);
        for v in &k.vectors {
            assert!(apply(&a, v).is_zero());
        }
    }

    #[test]
    fn inverse_of_shift() {
        let c = fredholm_inverse(&parse("S(1)").unwrap()).unwrap();
        assert_eq!(c.a0, BpfMatrix::shift(-1));
        assert!(c.r.is_empty());
        assert_eq!(c.s, FiniteRankPart::unit(1, 1));
    }

    #[test]
    fn inverse_of_geometric_diagonal() {
        let c = fredholm_inverse(&parse("Dgeo(2)").unwrap()).unwrap();
        assert_eq!(c.a0, m("Dgeo(1/2)"));
        assert!(c.r.is_empty() && c.s.is_empty());
    }

    #[test]
    fn inverse_of_perturbed_shift() {
        let c = fredholm_inverse(&parse("S(1) + E(1,3)").unwrap()).unwrap();
        assert_eq!(c.a0, BpfMatrix::shift(-1));
        // S(-1)·e13 vanishes; e13·S(-1) = e14
        assert!(c.r.is_empty());
        let expected = FiniteRankPart::unit(1, 1).sub(&FiniteRankPart::unit(1, 4));
        assert_eq!(c.s, expected);
    }

    #[test]
    fn inverse_of_composites() {
        for src in [
            "T(-1)",
            "T(1)*S(2)",
            "conj(Dfact(-1), S(1))",
            "-S(1)^3 + 2*E(2,2)",
            "E(1,1) - Dgeo(3)*T(1)",
        ] {
            let e = parse(src).unwrap();
            let a = e.eval().unwrap();
            let c = fredholm_inverse(&e).unwrap();
            let ia = index(&a, &cfg()).unwrap().index;
            let ia0 = index(&c.a0, &cfg()).unwrap().index;
            assert_eq!(ia0, -ia, "{src}");
        }
    }

    #[test]
    fn sum_of_bands_is_unsupported() {
        let e = parse("S(1) + S(-1)").unwrap();
        assert!(matches!(
            fredholm_inverse(&e),
            Err(FredholmError::UnsupportedExpression(_))
        ));
    }

    #[test]
    fn split_examples() {
        let a = m("I - E(1,1)");
        let sc = index_zero_split(&a, &cfg()).unwrap();
        assert_eq!(sc.u, BpfMatrix::identity());
        assert_eq!(sc.t, FiniteRankPart::unit(1, 1).scale(&-Rational::one()));
        assert_eq!(index_zero_split(&m("S(1)*S(-1)"), &cfg()).unwrap(), sc);

        let d2 = m("Dgeo(2)");
        let sc = index_zero_split(&d2, &cfg()).unwrap();
        assert_eq!(sc.u, d2);
        assert!(sc.t.is_empty());
    }

    #[test]
    fn preimage_under_bijection() {
        let u = m("I + E(1,2)");
        let b = Vector::basis(2);
        let x = preimage(&u, &b, &cfg()).unwrap();
        assert_eq!(apply(&u, &x), b);
        assert_eq!(x.get(1), -Rational::one());
        let t = m("T(1)");
        assert!(preimage(&t, &Vector::basis(1), &cfg()).is_err());
    }

    #[test]
    fn split_rejects_nonzero_index() {
        assert!(matches!(
            index_zero_split(&BpfMatrix::shift(1), &cfg()),
            Err(FredholmError::NotIndexZero(-1))
        ));
    }

    #[test]
    fn split_of_mixed_example() {
        let a = m("S(2)*T(-1)*S(-1) + 3*E(2,5)");
        let sc = index_zero_split(&a, &cfg()).unwrap();
        assert_eq!(sc.u.add_finite(&sc.t), a);
        let r = index(&sc.u, &cfg()).unwrap();
        assert_eq!((r.kernel_dim, r.coker_dim), (0, 0));
    }
}
