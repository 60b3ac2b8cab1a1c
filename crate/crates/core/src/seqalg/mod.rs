//! Exact coefficient sequences `i ↦ Σ q_k(i)·r_kⁱ·(i!)^{s_k}` used as band entries.

mod poly;
mod ratfunc;
mod seq;

pub use poly::{Poly, RootBoundExceeded, ROOT_SCAN_LIMIT};
pub use ratfunc::RatFunc;
pub use seq::{CoeffSeq, GrowthKey, SeqAtom, SeqError, Threshold};

pub(crate) use seq::rational_pow;
