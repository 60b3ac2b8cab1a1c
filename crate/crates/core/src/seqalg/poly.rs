//! Dense univariate polynomials over the rationals, in the indeterminate `i`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// Candidates above this bound are not scanned when searching for integer roots.
pub const ROOT_SCAN_LIMIT: u64 = 1_000_000;

/// Error raised when the root modulus bound exceeds [`ROOT_SCAN_LIMIT`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("integer root bound {bound} exceeds scan limit {ROOT_SCAN_LIMIT}")]
pub struct RootBoundExceeded {
    pub bound: BigInt,
}

/// Coefficients in ascending degree order with no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The indeterminate `i`.
    pub fn var() -> Self {
        Self::from_coeffs(vec![Rational::zero(), Rational::one()])
    }

    /// `i + c`
    pub fn linear(c: Rational) -> Self {
        Self::from_coeffs(vec![c, Rational::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Rational::from_integer(c.into())).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_int(&self, x: i64) -> Rational {
        self.eval(&Rational::from_integer(x.into()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Divides by the leading coefficient. The zero polynomial is returned unchanged.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(lc) => self.scale(&lc.recip()),
            None => Poly::zero(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lc = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lc;
            if !c.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * d;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// The polynomial `i ↦ p(i + k)`.
    pub fn shift(&self, k: i64) -> Poly {
        if k == 0 {
            return self.clone();
        }
        let step = Poly::linear(Rational::from_integer(k.into()));
        let mut acc = Poly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &step) + &Poly::constant(c.clone());
        }
        acc
    }

    /// Sum of absolute values of the coefficients.
    pub fn abs_coeff_sum(&self) -> Rational {
        self.coeffs.iter().map(|c| c.abs()).fold(Rational::zero(), |a, b| a + b)
    }

    /// All roots that are positive integers, ascending.
    pub fn positive_integer_roots(&self) -> Result<Vec<u64>, RootBoundExceeded> {
        let Some(deg) = self.degree() else {
            return Ok(Vec::new());
        };
        if deg == 0 {
            return Ok(Vec::new());
        }
        // Strip the factor i^k; zero is not a positive root.
        let low = self.coeffs.iter().position(|c| !c.is_zero()).unwrap();
        let ints = primitive_integer_coeffs(&self.coeffs[low..]);
        if ints.len() == 1 {
            return Ok(Vec::new());
        }
        // Fujiwara: every root has modulus at most 2·max_k |a_{n-k}/a_n|^{1/k}
        let n = ints.len() - 1;
        let lc = ints[n].abs();
        let mut bound = BigInt::zero();
        for k in 1..=n {
            let a = ints[n - k].abs();
            if a.is_zero() {
                continue;
            }
            let ratio = Rational::new(a, lc.clone()).ceil().to_integer();
            let mut root: BigInt = Roots::nth_root(&ratio, k as u32);
            if num_traits::pow(root.clone(), k) < ratio {
                root += 1;
            }
            bound = bound.max(root);
        }
        let bound: BigInt = bound * 2u32;
        let Some(limit) = bound.to_u64().filter(|&b| b <= ROOT_SCAN_LIMIT) else {
            return Err(RootBoundExceeded { bound });
        };
        let mut roots = Vec::new();
        for x in 1..=limit {
            let x = BigInt::from(x);
            if !(&ints[0] % &x).is_zero() {
                continue;
            }
            let mut acc = BigInt::zero();
            for c in ints.iter().rev() {
                acc = acc * &x + c;
            }
            if acc.is_zero() {
                roots.push(x.to_u64().unwrap());
            }
        }
        Ok(roots)
    }

    pub fn largest_positive_integer_root(&self) -> Result<Option<u64>, RootBoundExceeded> {
        Ok(self.positive_integer_roots()?.last().copied())
    }
}

/// Scales rational coefficients to coprime integers with the same roots.
fn primitive_integer_coeffs(coeffs: &[Rational]) -> Vec<BigInt> {
    let lcm = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() || g.is_one() {
        ints
    } else {
        ints.into_iter().map(|c| c / &g).collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Rational::zero();
        Poly::from_coeffs(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&zero) + rhs.coeffs.get(k).unwrap_or(&zero))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (a_deg, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (b_deg, b) in rhs.coeffs.iter().enumerate() {
                out[a_deg + b_deg] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (deg, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_coeff = deg == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match deg {
                0 => {}
                1 => write!(f, "{}i", if show_coeff { "*" } else { "" })?,
                _ => write!(f, "{}i^{deg}", if show_coeff { "*" } else { "" })?,
            }
        }
        Ok(())
    }
}
