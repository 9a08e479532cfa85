//! Dense real/complex matrices and the complex-to-real bridging operators.
//!
//! Everything downstream works in one of two coordinate systems: complex
//! `n_r × T` matrices as they appear on the air, or the real vectors obtained
//! by column-stacking (`vec`) and interleaving real/imaginary parts (`tilde`).
//! [`check_expand`] maps a complex matrix to the real matrix that acts on
//! those interleaved coordinates, so `tilde(X·y) = check_expand(X)·tilde(y)`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub type RealVector = Vec<f64>;
pub type ComplexVector = Vec<Complex64>;

/// Pivot magnitude (relative to `‖A‖_F`) below which QR reports rank deficiency.
pub const QR_PIVOT_TOL: f64 = 1e-12;
/// Relative tolerance used by [`real_rank`].
pub const RANK_TOL: f64 = 1e-9;

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        RealMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[RealVector]) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, |col| col.len());
        let mut m = Self::zeros(r, c);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> RealVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Self {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> RealVector {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> RealVector {
        assert_eq!(x.len(), self.rows, "dimension mismatch in tr_mul_vec");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Contiguous sub-block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> RealMatrix {
        let mut b = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = RealMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &RealMatrix {
    type Output = RealMatrix;
    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &RealMatrix {
    type Output = RealMatrix;
    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        ComplexMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                out[(i, j)] = (0..self.cols).map(|k| self[(i, k)] * rhs[(k, j)]).sum();
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Replaces every entry `x` by the 2×2 block `[[x_I, −x_Q], [x_Q, x_I]]`.
pub fn check_expand(x: &ComplexMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(2 * x.rows(), 2 * x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let v = x[(i, j)];
            out[(2 * i, 2 * j)] = v.re;
            out[(2 * i, 2 * j + 1)] = -v.im;
            out[(2 * i + 1, 2 * j)] = v.im;
            out[(2 * i + 1, 2 * j + 1)] = v.re;
        }
    }
    out
}

/// Column-major stacking.
pub fn vec(x: &ComplexMatrix) -> ComplexVector {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vec`] for a known row count.
pub fn unvec(v: &[Complex64], rows: usize) -> ComplexMatrix {
    assert!(
        rows > 0 && v.len().is_multiple_of(rows),
        "length not a multiple of rows"
    );
    let cols = v.len() / rows;
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = v[j * rows + i];
        }
    }
    m
}

/// Interleaves real and imaginary parts: `[x1_I, x1_Q, …, xn_I, xn_Q]`.
pub fn tilde(x: &[Complex64]) -> RealVector {
    x.iter().flat_map(|v| [v.re, v.im]).collect()
}

/// Inverse of [`tilde`]. Panics on odd length.
pub fn untilde(x: &[f64]) -> ComplexVector {
    assert!(x.len().is_multiple_of(2), "odd-length real vector");
    x.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

pub fn kron(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for p in 0..b.rows() {
                for q in 0..b.cols() {
                    out[(i * b.rows() + p, j * b.cols() + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Result of a thin QR factorization `A = Q·R`.
#[derive(Debug, Clone)]
pub struct QrDecomposition {
    pub q: RealMatrix,
    pub r: RealMatrix,
    /// Smallest `|r_ii|`.
    pub min_pivot: f64,
    /// Set when `min_pivot < QR_PIVOT_TOL · ‖A‖_F`.
    pub rank_deficient: bool,
}

/// Householder thin QR of a `p × q` matrix with `p ≥ q`.
///
/// The diagonal of `R` is made nonnegative by flipping the sign of matching
/// rows of `R` and columns of `Q`. Rank deficiency is reported through the
/// returned flag rather than as an error; the caller decides what to do.
pub fn qr_thin(a: &RealMatrix) -> QrDecomposition {
    let (p, q) = (a.rows(), a.cols());
    assert!(p >= q, "qr_thin needs rows >= cols (got {p}x{q})");
    let scale = a.frobenius_norm();
    let mut work = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(q);

    for k in 0..q {
        let mut v: Vec<f64> = (k..p).map(|i| work[(i, k)]).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in k..q {
            let dot: f64 = (k..p).map(|i| v[i - k] * work[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..p {
                work[(i, j)] -= f * v[i - k];
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 … H_{q-1} applied to the first q columns of I_p.
    let mut qm = RealMatrix::zeros(p, q);
    for j in 0..q {
        qm[(j, j)] = 1.0;
    }
    for k in (0..q).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in 0..q {
            let dot: f64 = (k..p).map(|i| v[i - k] * qm[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..p {
                qm[(i, j)] -= f * v[i - k];
            }
        }
    }

    let mut r = RealMatrix::zeros(q, q);
    for i in 0..q {
        for j in i..q {
            r[(i, j)] = work[(i, j)];
        }
    }
    for i in 0..q {
        if r[(i, i)] < 0.0 {
            for j in i..q {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..p {
                qm[(row, i)] = -qm[(row, i)];
            }
        }
    }

    let min_pivot = (0..q).fold(f64::INFINITY, |m, i| m.min(r[(i, i)].abs()));
    let rank_deficient = q > 0 && min_pivot < QR_PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
    QrDecomposition {
        q: qm,
        r,
        min_pivot,
        rank_deficient,
    }
}

/// Determinant of a 4×4 complex matrix by Laplace expansion along the first two rows.
pub fn det4(x: &ComplexMatrix) -> Complex64 {
    assert!(x.rows() == 4 && x.cols() == 4, "det4 needs a 4x4 matrix");
    det4_entries(x.as_slice().try_into().expect("4x4"))
}

/// [`det4`] on a raw row-major array; used by the min-det search inner loop.
#[inline]
pub fn det4_entries(m: &[Complex64; 16]) -> Complex64 {
    let a = |r: usize, c: usize| m[r * 4 + c];
    let top = |c0: usize, c1: usize| a(0, c0) * a(1, c1) - a(0, c1) * a(1, c0);
    let bot = |c0: usize, c1: usize| a(2, c0) * a(3, c1) - a(2, c1) * a(3, c0);
    top(0, 1) * bot(2, 3) - top(0, 2) * bot(1, 3) + top(0, 3) * bot(1, 2) + top(1, 2) * bot(0, 3)
        - top(1, 3) * bot(0, 2)
        + top(2, 3) * bot(0, 1)
}

/// Rank over ℝ of a list of equal-length vectors (complete-pivot elimination).
pub fn real_rank(vectors: &[RealVector]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let n = vectors[0].len();
    assert!(
        vectors.iter().all(|v| v.len() == n),
        "vectors differ in length"
    );
    let mut m: Vec<Vec<f64>> = vectors.to_vec();
    let rows = m.len();
    let mut tol = None;
    let mut rank = 0;
    while rank < rows.min(n) {
        let mut best = (0.0, rank, rank);
        for (i, row) in m.iter().enumerate().skip(rank) {
            for (j, v) in row.iter().enumerate().skip(rank) {
                if v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        let (piv, pi, pj) = best;
        let tol = *tol.get_or_insert(piv * RANK_TOL);
        if piv <= tol || piv == 0.0 {
            break;
        }
        m.swap(rank, pi);
        for row in m.iter_mut() {
            row.swap(rank, pj);
        }
        let pivot_row = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[rank] / pivot_row[rank];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(rank) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}
