//! Exact integer linear algebra over the facet-normal lattice: Smith
//! normal form with unimodular transforms, saturated kernel bases in
//! Hermite column form, primitivity tests and cokernel orders.
//!
//! Everything here runs on arbitrary-precision integers. The inputs are
//! desk-scale (a handful of facets in rank at most eight), so exactness
//! wins over speed everywhere.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    /// The zero vector is not a facet normal and has no primitivity.
    #[error("zero vector is not a valid facet normal")]
    ZeroVector,
    /// An operation needed full row rank and did not get it.
    #[error("matrix must have full row rank {expected}, found rank {actual}")]
    RankDeficient { expected: usize, actual: usize },
    /// A cokernel or lattice-index count did not fit in `u64`.
    #[error("lattice index does not fit in u64")]
    IndexOverflow,
}

/// Dense integer matrix, row-major, arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::from(1));
        }
        m
    }

    /// Build from rows of machine integers.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(x));
            }
        }
        m
    }

    /// Build from columns of machine integers.
    pub fn from_cols(cols: &[Vec<i64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |col| col.len());
        assert!(cols.iter().all(|col| col.len() == r), "ragged columns");
        let mut m = IntMatrix::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                m.set(i, j, BigInt::from(x));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BigInt::ZERO;
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Column `j` as machine integers; `None` if an entry overflows.
    pub fn col_i64(&self, j: usize) -> Option<Vec<i64>> {
        (0..self.rows).map(|i| self.get(i, j).to_i64()).collect()
    }

    /// Entries converted to `f64` (exact for desk-scale inputs).
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    /// Panics if the matrix is not square.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::from(1);
        }
        let mut m = self.clone();
        let mut sign = 1i64;
        let mut prev = BigInt::from(1);
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !m.get(i, k).is_zero()) {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::ZERO,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(i, j) * m.get(k, k) - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, v);
                }
                m.set(i, k, BigInt::ZERO);
            }
            prev = m.get(k, k).clone();
        }
        m.get(n - 1, n - 1) * BigInt::from(sign)
    }

    /// Exact rank over the rationals (via Smith normal form).
    pub fn rank(&self) -> usize {
        smith_normal_form(self).rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i += q * row_k
    fn add_row_multiple(&mut self, i: usize, k: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(i, j) + q * self.get(k, j);
            self.set(i, j, v);
        }
    }

    /// col_j += q * col_k
    fn add_col_multiple(&mut self, j: usize, k: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, j) + q * self.get(i, k);
            self.set(i, j, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        self.get(i, j)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Result of `smith_normal_form`: `u * a * v = d` with `u`, `v`
/// unimodular and `d` diagonal with a divisibility chain.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub d: IntMatrix,
    pub rank: usize,
}

impl SmithDecomposition {
    /// The nonzero diagonal entries d₁ | d₂ | …, all positive.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.d.get(i, i).clone()).collect()
    }
}

/// Smith normal form over the integers.
///
/// Total function: any integer matrix, including empty and rank-deficient
/// ones, decomposes as `u * a * v = d` with the invariant factors of `d`
/// positive and each dividing the next.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let m = a.rows();
    let n = a.cols();
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);

    let mut t = 0;
    while t < m.min(n) {
        // Move a minimal-magnitude nonzero entry of the trailing block
        // to the pivot slot; stop if the block is zero.
        let pivot = (t..m)
            .flat_map(|i| (t..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !d.get(i, j).is_zero())
            .min_by_key(|&(i, j)| d.get(i, j).abs());
        let (pi, pj) = match pivot {
            Some(p) => p,
            None => break,
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        'reduce: loop {
            // Clear the pivot column.
            for i in t + 1..m {
                if d.get(i, t).is_zero() {
                    continue;
                }
                let q = -(d.get(i, t) / d.get(t, t));
                d.add_row_multiple(i, t, &q);
                u.add_row_multiple(i, t, &q);
                if !d.get(i, t).is_zero() {
                    // Remainder is smaller than the pivot: promote it.
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                    continue 'reduce;
                }
            }
            // Clear the pivot row.
            for j in t + 1..n {
                if d.get(t, j).is_zero() {
                    continue;
                }
                let q = -(d.get(t, j) / d.get(t, t));
                d.add_col_multiple(j, t, &q);
                v.add_col_multiple(j, t, &q);
                if !d.get(t, j).is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                    continue 'reduce;
                }
            }
            // Enforce the divisibility chain: fold any non-divisible
            // trailing entry into the pivot row and keep reducing.
            for i in t + 1..m {
                for j in t + 1..n {
                    if !(d.get(i, j) % d.get(t, t)).is_zero() {
                        let one = BigInt::from(1);
                        d.add_row_multiple(t, i, &one);
                        u.add_row_multiple(t, i, &one);
                        continue 'reduce;
                    }
                }
            }
            break;
        }

        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }

    let rank = (0..m.min(n))
        .take_while(|&i| !d.get(i, i).is_zero())
        .count();
    SmithDecomposition { u, v, d, rank }
}

/// Saturated integer basis of `ker(a) ∩ Z^cols` as matrix columns, in
/// Hermite column form so the choice is deterministic.
///
/// Every integer vector annihilated by `a` is an integer combination of
/// the returned columns.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(a);
    let k = a.cols() - snf.rank;
    let mut b = IntMatrix::zeros(a.cols(), k);
    for (out, col) in (snf.rank..a.cols()).enumerate() {
        for i in 0..a.cols() {
            b.set(i, out, snf.v.get(i, col).clone());
        }
    }
    column_hermite_form(&mut b);
    b
}

/// In-place column-style Hermite normal form: column echelon with
/// positive pivots and entries left of each pivot reduced modulo it.
fn column_hermite_form(m: &mut IntMatrix) {
    let rows = m.rows();
    let cols = m.cols();
    let mut pivot_col = 0;
    for row in 0..rows {
        if pivot_col >= cols {
            break;
        }
        let found = (pivot_col..cols).find(|&j| !m.get(row, j).is_zero());
        let j0 = match found {
            Some(j) => j,
            None => continue,
        };
        m.swap_cols(pivot_col, j0);
        // gcd out the rest of this row to the right of the pivot.
        for j in pivot_col + 1..cols {
            while !m.get(row, j).is_zero() {
                let q = -(m.get(row, j) / m.get(row, pivot_col));
                m.add_col_multiple(j, pivot_col, &q);
                if !m.get(row, j).is_zero() {
                    m.swap_cols(pivot_col, j);
                }
            }
        }
        if m.get(row, pivot_col).is_negative() {
            m.negate_col(pivot_col);
        }
        // Reduce earlier columns so 0 <= entry < pivot in this row.
        for j in 0..pivot_col {
            let q = -m.get(row, j).div_floor(m.get(row, pivot_col));
            if !q.is_zero() {
                m.add_col_multiple(j, pivot_col, &q);
            }
        }
        pivot_col += 1;
    }
}

/// Whether the entries of a nonzero integer vector are coprime.
pub fn is_primitive(u: &[i64]) -> Result<bool, LatticeError> {
    if u.iter().all(|&x| x == 0) {
        return Err(LatticeError::ZeroVector);
    }
    let g = u.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    Ok(g == 1)
}

/// Order of `coker(a : Z^cols -> Z^rows)`, i.e. the product of the
/// invariant factors. Requires full row rank (finite cokernel); this is
/// the component count of the subgroup K cut out by the normal data.
pub fn cokernel_order(a: &IntMatrix) -> Result<u64, LatticeError> {
    let snf = smith_normal_form(a);
    if snf.rank < a.rows() {
        return Err(LatticeError::RankDeficient {
            expected: a.rows(),
            actual: snf.rank,
        });
    }
    factor_product(&snf.invariant_factors())
}

/// Product of invariant factors as a machine integer.
pub fn factor_product(factors: &[BigInt]) -> Result<u64, LatticeError> {
    let mut acc = BigInt::from(1u64);
    for f in factors {
        acc *= f;
    }
    acc.to_u64().ok_or(LatticeError::IndexOverflow)
}
