//! Matrix expression trees and their exact evaluation.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::bpf::{BpfError, BpfMatrix};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixExpr {
    /// `S(i)`
    Shift(i64),
    /// `T(±1)`, the weighted shifts.
    Weighted(i64),
    /// `Dgeo(r) = Diag(rⁱ⁻¹)`
    Dgeo(Rational),
    /// `Dfact(s) = Diag((i!)ˢ)`
    Dfact(i64),
    /// `E(i, j)`
    Unit(u64, u64),
    Identity,
    /// Scalar multiple of the identity.
    Lit(Rational),
    Add(Box<MatrixExpr>, Box<MatrixExpr>),
    Sub(Box<MatrixExpr>, Box<MatrixExpr>),
    Mul(Box<MatrixExpr>, Box<MatrixExpr>),
    Neg(Box<MatrixExpr>),
    Pow(Box<MatrixExpr>, i64),
    /// `conj(U, X) = U⁻¹·X·U`
    Conj(Box<MatrixExpr>, Box<MatrixExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("negative power of `{0}`, which has no exact two-sided inverse")]
    NonInvertiblePower(String),
    #[error("conjugator `{0}` has no exact two-sided inverse")]
    NonInvertibleConjugator(String),
    #[error("invalid atom `{0}`")]
    InvalidAtom(String),
    #[error(transparent)]
    Bpf(#[from] BpfError),
}

// constructors mirror the grammar, so they keep the operator names
#[allow(clippy::should_implement_trait)]
impl MatrixExpr {
    pub fn add(a: MatrixExpr, b: MatrixExpr) -> Self {
        MatrixExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: MatrixExpr, b: MatrixExpr) -> Self {
        MatrixExpr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: MatrixExpr, b: MatrixExpr) -> Self {
        MatrixExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: MatrixExpr) -> Self {
        MatrixExpr::Neg(Box::new(a))
    }

    pub fn pow(a: MatrixExpr, n: i64) -> Self {
        MatrixExpr::Pow(Box::new(a), n)
    }

    pub fn conj(u: MatrixExpr, x: MatrixExpr) -> Self {
        MatrixExpr::Conj(Box::new(u), Box::new(x))
    }

    pub fn eval(&self) -> Result<BpfMatrix, EvalError> {
        use MatrixExpr::*;
        Ok(match self {
            Shift(i) => BpfMatrix::shift(*i),
            Weighted(1) => BpfMatrix::weighted_up(),
            Weighted(-1) => BpfMatrix::weighted_down(),
            Weighted(_) => return Err(EvalError::InvalidAtom(self.to_string())),
            Dgeo(r) => {
                if r.is_zero() {
                    return Err(EvalError::InvalidAtom(self.to_string()));
                }
                BpfMatrix::geometric_diagonal(r.clone())?
            }
            Dfact(s) if s.abs() == 1 => BpfMatrix::factorial_diagonal(*s),
            Dfact(_) => return Err(EvalError::InvalidAtom(self.to_string())),
            Unit(i, j) => {
                if *i == 0 || *j == 0 {
                    return Err(EvalError::InvalidAtom(self.to_string()));
                }
                BpfMatrix::unit(*i, *j)
            }
            Identity => BpfMatrix::identity(),
            Lit(c) => BpfMatrix::scalar(c.clone()),
            Add(a, b) => &a.eval()? + &b.eval()?,
            Sub(a, b) => &a.eval()? - &b.eval()?,
            Mul(a, b) => &a.eval()? * &b.eval()?,
            Neg(a) => a.eval()?.neg(),
            Pow(a, n) if *n >= 0 => a.eval()?.pow(*n as u32),
            Pow(a, n) => {
                let inv = a
                    .exact_inverse()
                    .ok_or_else(|| EvalError::NonInvertiblePower(a.to_string()))?;
                inv.eval()?.pow(n.unsigned_abs() as u32)
            }
            Conj(u, x) => {
                let inv = u
                    .exact_inverse()
                    .ok_or_else(|| EvalError::NonInvertibleConjugator(u.to_string()))?;
                &(&inv.eval()? * &x.eval()?) * &u.eval()?
            }
        })
    }

    /// An expression for the exact two-sided inverse, when one is known
    /// structurally (diagonal atoms, nonzero scalars, transvections `I ± N`
    /// with `N = c·E(i,j)`, `i ≠ j`, and their products).
    pub fn exact_inverse(&self) -> Option<MatrixExpr> {
        use MatrixExpr::*;
        match self {
            Identity => Some(Identity),
            Lit(c) if !c.is_zero() => Some(Lit(c.recip())),
            Dgeo(r) if !r.is_zero() => Some(Dgeo(r.recip())),
            Dfact(s) => Some(Dfact(-s)),
            Neg(a) => Some(MatrixExpr::neg(a.exact_inverse()?)),
            Mul(a, b) => Some(MatrixExpr::mul(b.exact_inverse()?, a.exact_inverse()?)),
            Pow(a, n) => Some(MatrixExpr::pow(a.exact_inverse()?, *n)),
            Conj(u, x) => {
                u.exact_inverse()?;
                Some(MatrixExpr::conj((**u).clone(), x.exact_inverse()?))
            }
            // N² = 0, so (I + N)⁻¹ = I − N
            Add(a, n) if **a == Identity && n.is_square_zero() => Some(MatrixExpr::sub(Identity, (**n).clone())),
            Add(n, a) if **a == Identity && n.is_square_zero() => Some(MatrixExpr::sub(Identity, (**n).clone())),
            Sub(a, n) if **a == Identity && n.is_square_zero() => Some(MatrixExpr::add(Identity, (**n).clone())),
            _ => None,
        }
    }

    /// A scaled off-diagonal matrix unit.
    fn is_square_zero(&self) -> bool {
        use MatrixExpr::*;
        match self {
            Unit(i, j) => i != j,
            Mul(c, u) => matches!(**c, Lit(_)) && u.is_square_zero(),
            Neg(u) => u.is_square_zero(),
            _ => false,
        }
    }

    fn precedence(&self) -> u8 {
        use MatrixExpr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) => 2,
            Neg(..) => 3,
            Pow(..) => 4,
            Lit(c) if c.is_negative() => 3,
            _ => 5,
        }
    }
}

struct Paren<'a>(&'a MatrixExpr, bool);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints with the fewest parentheses that parse back to the same tree.
impl fmt::Display for MatrixExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MatrixExpr::*;
        match self {
            Shift(i) => write!(f, "S({i})"),
            Weighted(i) => write!(f, "T({i})"),
            Dgeo(r) => write!(f, "Dgeo({r})"),
            Dfact(s) => write!(f, "Dfact({s})"),
            Unit(i, j) => write!(f, "E({i},{j})"),
            Identity => write!(f, "I"),
            Lit(c) if c.is_negative() => write!(f, "(-{})", c.abs()),
            Lit(c) => write!(f, "{c}"),
            Add(a, b) => write!(f, "{} + {}", Paren(a, a.precedence() < 1), Paren(b, b.precedence() <= 1)),
            Sub(a, b) => write!(f, "{} - {}", Paren(a, a.precedence() < 1), Paren(b, b.precedence() <= 1)),
            Mul(a, b) => write!(f, "{}*{}", Paren(a, a.precedence() < 2), Paren(b, b.precedence() <= 2)),
            Neg(a) => write!(f, "-{}", Paren(a, a.precedence() < 3)),
            Pow(a, n) => write!(f, "{}^{n}", Paren(a, a.precedence() < 5)),
            Conj(u, x) => write!(f, "conj({u}, {x})"),
        }
    }
}
