//! Fraction-free elimination over the integers for exact rank, nullspace and solves.
//!
//! Each row is first scaled to coprime integers (row scaling preserves the
//! row space), then reduced by integer cross-multiplication with the row
//! content divided out after every update.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

/// Dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, Rational::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn rank(&self) -> usize {
        Echelon::new(self).pivots.len()
    }

    /// Basis of `{x : M x = 0}`, one vector per free column with that coordinate set to 1.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        Echelon::new(self).nullspace()
    }

    /// Pivot columns of a row echelon form, ascending.
    pub fn pivot_columns(&self) -> Vec<usize> {
        Echelon::new(self).pivots
    }

    /// Two-sided inverse of a square matrix.
    pub fn inverse(&self) -> Option<DenseMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut inv = DenseMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![Rational::zero(); n];
            e[c] = Rational::one();
            let x = self.solve(&e)?;
            for (r, v) in x.into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        (self.rank() == n).then_some(inv)
    }

    /// Some `x` with `M x = b`, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = DenseMatrix::zeros(self.rows, self.cols + 1);
        for (r, rhs) in b.iter().enumerate() {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, -rhs.clone());
        }
        let ech = Echelon::new(&aug);
        if ech.pivots.contains(&self.cols) {
            return None;
        }
        let mut x = ech.back_substitute(self.cols);
        x.truncate(self.cols);
        Some(x)
    }
}

/// Integer row echelon form.
struct Echelon {
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
    cols: usize,
}

impl Echelon {
    fn new(m: &DenseMatrix) -> Self {
        let mut rows: Vec<Vec<BigInt>> = (0..m.rows)
            .map(|r| integer_row(m.row(r)))
            .filter(|row| row.iter().any(|x| !x.is_zero()))
            .collect();
        let mut pivots = Vec::new();
        let mut top = 0;
        for col in 0..m.cols {
            if top == rows.len() {
                break;
            }
            // smallest nonzero entry keeps the cross-multiplied values small
            let Some(p) = (top..rows.len())
                .filter(|&r| !rows[r][col].is_zero())
                .min_by_key(|&r| rows[r][col].abs())
            else {
                continue;
            };
            rows.swap(top, p);
            let (head, tail) = rows.split_at_mut(top + 1);
            let pivot_row = &head[top];
            let pv = &pivot_row[col];
            let support: Vec<usize> = (col..m.cols).filter(|&c| !pivot_row[c].is_zero()).collect();
            for row in tail.iter_mut() {
                if row[col].is_zero() {
                    continue;
                }
                let g = row[col].gcd(pv);
                let mul_row = pv / &g;
                let mul_piv = &row[col] / &g;
                if !mul_row.is_one() {
                    for x in row[col..].iter_mut() {
                        if !x.is_zero() {
                            *x *= &mul_row;
                        }
                    }
                }
                for &c in &support {
                    row[c] -= &mul_piv * &pivot_row[c];
                }
                normalize_content(row);
            }
            pivots.push(col);
            top += 1;
        }
        rows.truncate(top);
        Echelon {
            rows,
            pivots,
            cols: m.cols,
        }
    }

    /// Solution with coordinate `free` set to 1 and every other free coordinate 0.
    fn back_substitute(&self, free: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.cols];
        x[free] = Rational::one();
        for (k, &pc) in self.pivots.iter().enumerate().rev() {
            let row = &self.rows[k];
            let mut acc = Rational::zero();
            for c in pc + 1..self.cols {
                if !row[c].is_zero() && !x[c].is_zero() {
                    acc += Rational::from_integer(row[c].clone()) * &x[c];
                }
            }
            x[pc] = -acc / Rational::from_integer(row[pc].clone());
        }
        x
    }

    fn nullspace(&self) -> Vec<Vec<Rational>> {
        (0..self.cols)
            .filter(|c| !self.pivots.contains(c))
            .map(|f| self.back_substitute(f))
            .collect()
    }
}

fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut out: Vec<BigInt> = row
        .iter()
        .map(|x| {
            if x.is_zero() {
                BigInt::zero()
            } else {
                x.numer() * (&lcm / x.denom())
            }
        })
        .collect();
    normalize_content(&mut out);
    out
}

fn normalize_content(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            if !x.is_zero() {
                *x /= &g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> DenseMatrix {
        DenseMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    fn mat_vec(a: &DenseMatrix, x: &[Rational]) -> Vec<Rational> {
        (0..a.rows())
            .map(|r| a.row(r).iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(mat_vec(&a, &ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn zero_matrix_nullspace_is_standard_basis() {
        let a = DenseMatrix::zeros(2, 3);
        assert_eq!(a.rank(), 0);
        assert_eq!(a.nullspace().len(), 3);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = m(&[&[2, 1], &[0, 3]]);
        let b = vec![Rational::from_integer(5.into()), Rational::from_integer(3.into())];
        let x = a.solve(&b).unwrap();
        assert_eq!(mat_vec(&a, &x), b);
        let a = m(&[&[1, 1], &[1, 1]]);
        let b = vec![Rational::one(), Rational::zero()];
        assert!(a.solve(&b).is_none());
    }

    #[test]
    fn inverse_and_pivots() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
        assert_eq!(m(&[&[0, 1, 1], &[0, 0, 3]]).pivot_columns(), vec![1, 2]);
    }

    #[test]
    fn rational_entries() {
        let a = DenseMatrix::from_rows(vec![
            vec![Rational::new(1.into(), 2.into()), Rational::new(1.into(), 3.into())],
            vec![Rational::new(3.into(), 2.into()), Rational::one()],
        ]);
        assert_eq!(a.rank(), 1);
    }
}
