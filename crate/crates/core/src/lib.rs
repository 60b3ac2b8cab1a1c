//! Exact arithmetic for row-and-column-finite infinite matrices over ℚ.

pub mod bpf;
pub mod cli;
pub mod expr;
pub mod extensions;
pub mod fredholm;
pub mod linalg;
pub mod oracle;
pub mod parse;
pub mod seqalg;
pub mod verify;

/// Exact rationals with unbounded numerator and denominator.
pub type Rational = num_rational::BigRational;

pub use bpf::{Band, BpfError, BpfMatrix, CosetRep, FiniteRankPart};
pub use seqalg::{CoeffSeq, Poly, RatFunc, SeqAtom, SeqError, Threshold};
pub use expr::{EvalError, MatrixExpr};
pub use parse::{parse, ParseError};
pub use fredholm::{FredholmError, IndexResult, KernelBasis, TruncationConfig, Vector};
pub use extensions::{ExtensionAlgebra, ExtensionError, LaurentPoly, PullbackElem};
