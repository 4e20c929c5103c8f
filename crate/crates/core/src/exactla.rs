//! Dense linear algebra over a prime field GF(p).
//!
//! Every matrix carries its modulus. Matrices act on column vectors, so a
//! linear map `V -> W` is stored as a `dim W x dim V` matrix. All reductions
//! produce canonical output (the unique reduced row echelon form, kernel bases
//! read off the free columns), which is what keeps every downstream report
//! deterministic.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};

/// Largest modulus accepted (exclusive).
pub const MAX_PRIME: u32 = 1 << 15;

/// Checks that `p` is a prime below [`MAX_PRIME`].
pub fn check_prime(p: u32) -> Result<u32> {
    if !(2..MAX_PRIME).contains(&p) {
        return Err(Error::InvalidInput(format!("prime {p} outside the supported range [2, {MAX_PRIME})")));
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        d += 1;
    }
    Ok(p)
}

/// Reduces an arbitrary integer into `[0, p)`.
#[inline]
pub fn reduce(value: i64, p: u32) -> u32 {
    value.rem_euclid(p as i64) as u32
}

#[inline]
fn mul_mod(a: u32, b: u32, p: u32) -> u32 {
    (a * b) % p
}

#[inline]
fn neg_mod(a: u32, p: u32) -> u32 {
    if a == 0 {
        0
    } else {
        p - a
    }
}

/// Multiplicative inverse by Fermat's little theorem. `a` must be nonzero.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p), "inverse of zero");
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u32;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// Result of [`Matrix::rref`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    /// The reduced row echelon form.
    pub reduced: Matrix,
    /// Pivot columns, strictly increasing.
    pub pivots: Vec<usize>,
    /// Invertible transform with `transform * input == reduced`.
    pub transform: Matrix,
}

/// Outcome of [`Matrix::solve`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solve {
    Solved(Matrix),
    /// A row vector `y` with `y A = 0` and `y B != 0`.
    Inconsistent {
        certificate: Matrix,
    },
}

impl Solve {
    pub fn ok(self) -> Option<Matrix> {
        match self {
            Solve::Solved(x) => Some(x),
            Solve::Inconsistent { .. } => None,
        }
    }
}

impl Matrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Matrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Matrix::zeros(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    /// Builds a matrix from row-major integer data, reducing every entry mod `p`.
    pub fn from_vec(p: u32, rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { p, rows, cols, data: data.into_iter().map(|v| reduce(v, p)).collect() }
    }

    /// Builds a matrix from nested rows. All rows must have `cols` entries.
    pub fn from_rows<R: AsRef<[i64]>>(p: u32, rows: &[R], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged matrix rows");
            data.extend(row.iter().map(|&v| reduce(v, p)));
        }
        Matrix { p, rows: rows.len(), cols, data }
    }

    /// Builds a matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(p: u32, rows: usize, columns: &[Vec<u32>]) -> Self {
        let mut m = Matrix::zeros(p, rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, &v) in col.iter().enumerate() {
                m.data[i * m.cols + j] = v % p;
            }
        }
        m
    }

    /// 1x1 matrix holding `value`.
    pub fn scalar(p: u32, value: i64) -> Self {
        Matrix::from_vec(p, 1, 1, vec![value])
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: i64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = reduce(value, self.p);
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Nested row-major entries, the JSON encoding.
    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.p, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale(&self, c: i64) -> Matrix {
        let c = reduce(c, self.p);
        Matrix {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| mul_mod(v, c, self.p)).collect(),
        }
    }

    /// Horizontal concatenation `[a | b | ...]`. All blocks need the same row count.
    pub fn hstack(p: u32, rows: usize, blocks: &[&Matrix]) -> Matrix {
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Matrix::zeros(p, rows, cols);
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            m.set_block(0, offset, b);
            offset += b.cols;
        }
        m
    }

    /// Vertical concatenation. All blocks need the same column count.
    pub fn vstack(p: u32, cols: usize, blocks: &[&Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut m = Matrix::zeros(p, rows, cols);
        let mut offset = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            m.set_block(offset, 0, b);
            offset += b.rows;
        }
        m
    }

    pub fn block_diag(p: u32, blocks: &[&Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Matrix::zeros(p, rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            m.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        m
    }

    /// Overwrites the block starting at `(row, col)` with `block`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Matrix) {
        assert!(row + block.rows <= self.rows && col + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = (row + i) * self.cols + col;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }

    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Matrix {
        assert!(row + rows <= self.rows && col + cols <= self.cols);
        let mut m = Matrix::zeros(self.p, rows, cols);
        for i in 0..rows {
            let src = (row + i) * self.cols + col;
            m.data[i * cols..(i + 1) * cols].copy_from_slice(&self.data[src..src + cols]);
        }
        m
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.p, self.rows, idx.len());
        for i in 0..self.rows {
            for (jj, &j) in idx.iter().enumerate() {
                m.data[i * idx.len() + jj] = self.get(i, j);
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.p, idx.len(), self.cols);
        for (ii, &i) in idx.iter().enumerate() {
            m.data[ii * self.cols..(ii + 1) * self.cols].copy_from_slice(self.row(i));
        }
        m
    }

    fn assert_compatible(&self, other: &Matrix) {
        assert_eq!(self.p, other.p, "matrices over different fields");
    }

    /// In-place reduction to RREF. Returns the pivot columns.
    fn reduce_in_place(&mut self, col_limit: usize) -> Vec<usize> {
        let p = self.p;
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..col_limit {
            if r == self.rows {
                break;
            }
            let Some(src) = (r..self.rows).find(|&i| self.data[i * cols + c] != 0) else {
                continue;
            };
            if src != r {
                for j in c..cols {
                    self.data.swap(src * cols + j, r * cols + j);
                }
            }
            let inv = inv_mod(self.data[r * cols + c], p);
            if inv != 1 {
                for j in c..cols {
                    let v = &mut self.data[r * cols + j];
                    *v = mul_mod(*v, inv, p);
                }
            }
            let (head, tail) = self.data.split_at_mut(r * cols);
            let (pivot_row, rest) = tail.split_at_mut(cols);
            let eliminate = |row: &mut [u32]| {
                let f = row[c];
                if f != 0 {
                    let nf = p - f;
                    for j in c..cols {
                        if pivot_row[j] != 0 {
                            row[j] = (row[j] + nf * pivot_row[j]) % p;
                        }
                    }
                }
            };
            head.chunks_exact_mut(cols).for_each(eliminate);
            rest.chunks_exact_mut(cols).for_each(eliminate);
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Reduced row echelon form with pivots and the transform `T` (`T M = R`).
    pub fn rref(&self) -> Rref {
        let aug = Matrix::hstack(self.p, self.rows, &[self, &Matrix::identity(self.p, self.rows)]);
        let mut aug = aug;
        let pivots = aug.reduce_in_place(self.cols);
        Rref {
            reduced: aug.block(0, 0, self.rows, self.cols),
            transform: aug.block(0, self.cols, self.rows, self.rows),
            pivots,
        }
    }

    /// RREF and pivots without tracking the transform.
    pub fn rref_pivots(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.reduce_in_place(self.cols);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        self.rref_pivots().1.len()
    }

    /// Columns form the canonical basis of `{v : M v = 0}`: one vector per
    /// free column, with a 1 in that column and zeros in the other free columns.
    pub fn kernel_basis(&self) -> Matrix {
        let (r, pivots) = self.rref_pivots();
        let mut is_pivot = vec![false; self.cols];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut k = Matrix::zeros(self.p, self.cols, free.len());
        for (j, &f) in free.iter().enumerate() {
            k.data[f * free.len() + j] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                k.data[pc * free.len() + j] = neg_mod(r.get(i, f), self.p);
            }
        }
        k
    }

    /// Canonical cokernel projection `Q` (full row rank, `Q M = 0`) and its rank `d`.
    pub fn cokernel(&self) -> (Matrix, usize) {
        let q = self.transpose().kernel_basis().transpose();
        let d = q.rows;
        (q, d)
    }

    /// Solves `self * X = rhs`, setting free variables to zero.
    pub fn solve(&self, rhs: &Matrix) -> Solve {
        self.assert_compatible(rhs);
        assert_eq!(self.rows, rhs.rows, "solve: row mismatch");
        let mut aug = Matrix::hstack(self.p, self.rows, &[self, rhs]);
        let pivots = aug.reduce_in_place(aug.cols);
        if pivots.last().is_some_and(|&c| c >= self.cols) {
            // Recompute with the transform to extract the offending row combination.
            let full = Matrix::hstack(self.p, self.rows, &[self, rhs]).rref();
            let row = full.pivots.iter().position(|&c| c >= self.cols).unwrap();
            return Solve::Inconsistent { certificate: full.transform.select_rows(&[row]) };
        }
        let mut x = Matrix::zeros(self.p, self.cols, rhs.cols);
        for (i, &pc) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.data[pc * rhs.cols + j] = aug.get(i, self.cols + j);
            }
        }
        Solve::Solved(x)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        self.solve(&Matrix::identity(self.p, self.rows)).ok()
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn is_injective(&self) -> bool {
        self.rank() == self.cols
    }

    pub fn is_surjective(&self) -> bool {
        self.rank() == self.rows
    }

    /// The unique `h` with `h * epi = f`, where `epi` is surjective and `f`
    /// vanishes on `ker epi`. Returns `None` if no such factorization exists.
    pub fn factor_through_epi(epi: &Matrix, f: &Matrix) -> Option<Matrix> {
        epi.transpose().solve(&f.transpose()).ok().map(|h| h.transpose())
    }

    /// The unique `g` with `mono * g = f`, where `mono` is injective and the
    /// image of `f` lies in the image of `mono`.
    pub fn factor_through_mono(mono: &Matrix, f: &Matrix) -> Option<Matrix> {
        mono.solve(f).ok()
    }

    /// Uniformly random matrix.
    pub fn random<R: Rng + ?Sized>(p: u32, rows: usize, cols: usize, rng: &mut R) -> Matrix {
        Matrix { p, rows, cols, data: (0..rows * cols).map(|_| rng.gen_range(0..p)).collect() }
    }

    /// Uniformly random invertible `n x n` matrix (rejection sampling).
    pub fn random_invertible<R: Rng + ?Sized>(p: u32, n: usize, rng: &mut R) -> Matrix {
        loop {
            let m = Matrix::random(p, n, n, rng);
            if m.is_invertible() {
                return m;
            }
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix<GF({})>{}x{}{:?}", self.p, self.rows, self.cols, self.to_rows())
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.assert_compatible(rhs);
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let p = self.p;
        let mut out = Matrix::zeros(p, self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o = (*o + a * b) % p;
                }
            }
        }
        out
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        &self * &rhs
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.assert_compatible(rhs);
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        let p = self.p;
        Matrix {
            p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| (a + b) % p).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self + &(-rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| neg_mod(v, self.p)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(p: u32, rows: &[&[i64]]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(p, rows, cols)
    }

    #[test]
    fn rref_examples() {
        let r = m(2, &[&[1, 1], &[1, 0]]).rref();
        assert_eq!(r.reduced, Matrix::identity(2, 2));
        assert_eq!(r.pivots, vec![0, 1]);

        let r = Matrix::zeros(2, 2, 3).rref();
        assert!(r.reduced.is_zero());
        assert!(r.pivots.is_empty());

        let r = m(2, &[&[1, 1]]).rref();
        assert_eq!(r.reduced, m(2, &[&[1, 1]]));
        assert_eq!(r.pivots, vec![0]);
    }

    #[test]
    fn rref_transform_reproduces_reduced_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [2, 3, 5, 7] {
            for _ in 0..50 {
                let a = Matrix::random(p, rng.gen_range(0..6), rng.gen_range(0..6), &mut rng);
                let r = a.rref();
                assert_eq!(&r.transform * &a, r.reduced);
                assert!(r.transform.is_invertible());
                assert!(r.pivots.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(r.reduced.rref().reduced, r.reduced);
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let k = m(2, &[&[1, 1]]).kernel_basis();
        assert_eq!(k, m(2, &[&[1], &[1]]));
        assert_eq!(Matrix::identity(2, 3).kernel_basis().cols(), 0);
        assert_eq!(Matrix::zeros(2, 1, 2).kernel_basis(), Matrix::identity(2, 2));
    }

    #[test]
    fn cokernel_examples() {
        let (q, d) = m(2, &[&[1], &[0]]).cokernel();
        assert_eq!((q, d), (m(2, &[&[0, 1]]), 1));
        assert_eq!(m(3, &[&[1, 2], &[0, 1]]).cokernel().1, 0);
        let (q, d) = Matrix::zeros(2, 2, 1).cokernel();
        assert_eq!((q, d), (Matrix::identity(2, 2), 2));
    }

    #[test]
    fn solve_examples() {
        let x = m(2, &[&[1, 1]]).solve(&m(2, &[&[1]])).ok().unwrap();
        assert_eq!(x, m(2, &[&[1], &[0]]));

        let a = m(2, &[&[0], &[0]]);
        let b = m(2, &[&[1], &[0]]);
        match a.solve(&b) {
            Solve::Inconsistent { certificate } => {
                assert!((&certificate * &a).is_zero());
                assert!(!(&certificate * &b).is_zero());
            }
            Solve::Solved(_) => panic!("expected inconsistency"),
        }

        let b = m(5, &[&[1, 4, 2], &[3, 0, 1]]);
        assert_eq!(Matrix::identity(5, 2).solve(&b).ok().unwrap(), b);
    }

    #[test]
    fn inverse_and_factorizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::random_invertible(5, 4, &mut rng);
        assert_eq!(&a * &a.inverse().unwrap(), Matrix::identity(5, 4));
        assert_eq!(inv_mod(3, 7) * 3 % 7, 1);

        let epi = m(5, &[&[1, 0, 2], &[0, 1, 1]]);
        let h = m(5, &[&[4, 1]]);
        let f = &h * &epi;
        assert_eq!(Matrix::factor_through_epi(&epi, &f), Some(h));
    }

    #[test]
    fn check_prime_rejects_composites() {
        assert!(check_prime(2).is_ok());
        assert!(check_prime(32749).is_ok());
        assert!(check_prime(1).is_err());
        assert!(check_prime(9).is_err());
        assert!(check_prime(1 << 15).is_err());
    }
}
