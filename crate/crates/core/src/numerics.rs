//! Small dense linear-algebra and root-finding kernels.
//!
//! Everything operates on value types and is pure; dimensions stay small
//! (the cross-section size of the panel), so the implementations favour
//! determinism and accuracy over asymptotic cleverness. The one O(N)
//! kernel is [`solve_pentadiagonal`], which backs the smoother's normal
//! equations.

use num_complex::Complex;

use crate::{Error, Float, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(Error::DimensionMismatch {
                expected: nc,
                got: rows.iter().map(Vec::len).find(|&l| l != nc).unwrap_or(0),
            });
        }
        Ok(Matrix {
            rows: nr,
            cols: nc,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix<F> {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(F::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    /// Scales column `j` in place.
    pub fn scale_col(&mut self, j: usize, s: F) {
        for i in 0..self.rows {
            self[(i, j)] = self[(i, j)] * s;
        }
    }

    pub fn add(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - b;
        }
        out
    }

    pub fn scale(&self, s: F) -> Matrix<F> {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = *a * s;
        }
        out
    }

    pub fn frobenius_norm(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Inverse of an upper-triangular matrix by back substitution.
    pub fn invert_upper_triangular(&self) -> Result<Matrix<F>> {
        assert_eq!(self.rows, self.cols, "inverse needs a square matrix");
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            // solve R x = e_j, exploiting x_i = 0 for i > j
            for i in (0..=j).rev() {
                let mut s = if i == j { F::one() } else { F::zero() };
                for k in (i + 1)..=j {
                    s = s - self[(i, k)] * inv[(k, j)];
                }
                let diag = self[(i, i)];
                if diag == F::zero() {
                    return Err(Error::NotPositiveDefinite {
                        context: "triangular inverse hit a zero diagonal",
                    });
                }
                inv[(i, j)] = s / diag;
            }
        }
        Ok(inv)
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl<F: Float> std::ops::Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F: Float> std::ops::IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix with exactly mirrored storage: `set` writes both
/// triangles, so `get(i, j) == get(j, i)` holds bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<F> {
    d: usize,
    data: Vec<F>,
}

impl<F: Float> SymMatrix<F> {
    pub fn zeros(d: usize) -> Self {
        SymMatrix {
            d,
            data: vec![F::zero(); d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.set(i, i, F::one());
        }
        m
    }

    /// Builds from full rows, requiring exact symmetry.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidConfig(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix {
            d: m.rows(),
            data: m.data,
        })
    }

    /// Builds from the lower triangle given row by row (`rows[i]` has
    /// `i + 1` entries), mirroring into the upper triangle.
    pub fn from_lower(rows: &[Vec<F>]) -> Result<Self> {
        let d = rows.len();
        let mut m = Self::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != i + 1 {
                return Err(Error::DimensionMismatch {
                    expected: i + 1,
                    got: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn diag(entries: &[F]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.d + j] = v;
        self.data[j * self.d + i] = v;
    }

    pub fn to_matrix(&self) -> Matrix<F> {
        Matrix {
            rows: self.d,
            cols: self.d,
            data: self.data.clone(),
        }
    }

    /// Symmetrizes an almost-symmetric product by averaging the mirrored
    /// entries.
    pub fn from_matrix_symmetrized(m: &Matrix<F>) -> Self {
        assert_eq!(m.rows(), m.cols());
        let half = F::cast(0.5);
        let mut s = Self::zeros(m.rows());
        for i in 0..m.rows() {
            s.set(i, i, m[(i, i)]);
            for j in (i + 1)..m.cols() {
                s.set(i, j, half * (m[(i, j)] + m[(j, i)]));
            }
        }
        s
    }

    pub fn add_scaled_identity(&self, alpha: F) -> SymMatrix<F> {
        let mut out = self.clone();
        for i in 0..self.d {
            out.set(i, i, out.get(i, i) + alpha);
        }
        out
    }

    pub fn trace(&self) -> F {
        (0..self.d).fold(F::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn scale(&self, s: F) -> SymMatrix<F> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * s;
        }
        out
    }

    pub fn add(&self, other: &SymMatrix<F>) -> SymMatrix<F> {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        out
    }

    pub fn sub(&self, other: &SymMatrix<F>) -> SymMatrix<F> {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - b;
        }
        out
    }
}

/// Eigenvalues (descending) with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenPair<F> {
    pub values: Vec<F>,
    pub vectors: Matrix<F>,
}

/// Cholesky factorization `a = M'M` with `M` upper triangular.
///
/// The pivot threshold is `d * eps * max|a_ij|`; a pivot at or below it
/// reports [`Error::NotPositiveDefinite`] so the caller can regularize.
pub fn cholesky<F: Float>(a: &SymMatrix<F>) -> Result<Matrix<F>> {
    let d = a.order();
    let threshold = F::cast(d) * F::epsilon() * a.max_abs();
    let mut m = Matrix::zeros(d, d);
    for j in 0..d {
        // column j of the lower factor, stored transposed in row j of M
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot = pivot - m[(k, j)] * m[(k, j)];
        }
        if pivot <= threshold {
            return Err(Error::NotPositiveDefinite {
                context: "cholesky pivot at or below tolerance",
            });
        }
        let diag = pivot.sqrt();
        m[(j, j)] = diag;
        for i in (j + 1)..d {
            let mut s = a.get(j, i);
            for k in 0..j {
                s = s - m[(k, i)] * m[(k, j)];
            }
            m[(j, i)] = s / diag;
        }
    }
    Ok(m)
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// Eigenvalues come back sorted descending; each eigenvector is sign-fixed
/// so its largest-magnitude entry is positive. Ties in eigenvalue order are
/// broken by the first differing eigenvector entry.
pub fn sym_eig<F: Float>(a: &SymMatrix<F>) -> Result<EigenPair<F>> {
    let n = a.order();
    let mut m = a.to_matrix();
    let mut v = Matrix::identity(n);
    if n > 1 {
        let scale = a.frobenius_norm();
        let stop = F::epsilon() * scale;
        let max_sweeps = 100 * n;
        let mut sweeps = 0;
        loop {
            let mut off = F::zero();
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    off = off + m[(p, q)] * m[(p, q)];
                }
            }
            let two = F::cast(2.0);
            if (two * off).sqrt() <= stop {
                break;
            }
            if sweeps >= max_sweeps {
                return Err(Error::NoConvergence {
                    what: "jacobi eigensolver",
                    iterations: max_sweeps,
                });
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == F::zero() {
                        continue;
                    }
                    let tau = (m[(q, q)] - m[(p, p)]) / (two * apq);
                    let t = if tau >= F::zero() {
                        F::one() / (tau + (F::one() + tau * tau).sqrt())
                    } else {
                        -F::one() / (-tau + (F::one() + tau * tau).sqrt())
                    };
                    let c = F::one() / (F::one() + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        match m[(j, j)].partial_cmp(&m[(i, i)]) {
            Some(std::cmp::Ordering::Equal) | None => {}
            Some(o) => return o,
        }
        for k in 0..n {
            match v[(k, j)].partial_cmp(&v[(k, i)]) {
                Some(std::cmp::Ordering::Equal) | None => {}
                Some(o) => return o,
            }
        }
        std::cmp::Ordering::Equal
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(m[(idx, idx)]);
        let mut best = 0usize;
        for k in 1..n {
            if v[(k, idx)].abs() > v[(best, idx)].abs() {
                best = k;
            }
        }
        let flip = v[(best, idx)] < F::zero();
        for k in 0..n {
            let val = v[(k, idx)];
            vectors[(k, col)] = if flip { -val } else { val };
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Bands of a symmetric-profile pentadiagonal matrix, offsets -2..=2.
///
/// `diag` has length `n`, `sub1`/`super1` length `n - 1`, `sub2`/`super2`
/// length `n - 2` (empty for tiny systems).
#[derive(Clone, Debug)]
pub struct PentaBands<F> {
    pub sub2: Vec<F>,
    pub sub1: Vec<F>,
    pub diag: Vec<F>,
    pub super1: Vec<F>,
    pub super2: Vec<F>,
}

impl<F: Float> PentaBands<F> {
    pub fn identity(n: usize) -> Self {
        PentaBands {
            sub2: vec![F::zero(); n.saturating_sub(2)],
            sub1: vec![F::zero(); n.saturating_sub(1)],
            diag: vec![F::one(); n],
            super1: vec![F::zero(); n.saturating_sub(1)],
            super2: vec![F::zero(); n.saturating_sub(2)],
        }
    }

    fn validate(&self) -> Result<usize> {
        let n = self.diag.len();
        let want = [
            (self.sub2.len(), n.saturating_sub(2)),
            (self.sub1.len(), n.saturating_sub(1)),
            (self.super1.len(), n.saturating_sub(1)),
            (self.super2.len(), n.saturating_sub(2)),
        ];
        for (got, expected) in want {
            if got != expected {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(n)
    }
}

/// Solves a pentadiagonal system in O(N) by banded LU without pivoting.
///
/// Intended for symmetric positive definite bands (the smoother's normal
/// equations); a nonpositive pivot is reported as
/// [`Error::NotPositiveDefinite`].
pub fn solve_pentadiagonal<F: Float>(bands: &PentaBands<F>, rhs: &[F]) -> Result<Vec<F>> {
    let n = bands.validate()?;
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // U bands: u0 diagonal, u1 first super, u2 second super (= input).
    // The L multipliers are only needed at the row that computes them,
    // so factorization and forward substitution run fused in one pass.
    let mut u0 = vec![F::zero(); n];
    let mut u1 = vec![F::zero(); n.saturating_sub(1)];
    let mut x = rhs.to_vec();

    for i in 0..n {
        let l2 = if i >= 2 {
            bands.sub2[i - 2] / u0[i - 2]
        } else {
            F::zero()
        };
        let l1 = if i >= 1 {
            let mut b = bands.sub1[i - 1];
            if i >= 2 {
                b = b - l2 * u1[i - 2];
            }
            b / u0[i - 1]
        } else {
            F::zero()
        };
        let mut d = bands.diag[i];
        if i >= 1 {
            d = d - l1 * u1[i - 1];
        }
        if i >= 2 {
            d = d - l2 * bands.super2[i - 2];
        }
        if d <= F::zero() {
            return Err(Error::NotPositiveDefinite {
                context: "pentadiagonal pivot is nonpositive",
            });
        }
        u0[i] = d;
        if i + 1 < n {
            let mut c = bands.super1[i];
            if i >= 1 {
                c = c - l1 * bands.super2[i - 1];
            }
            u1[i] = c;
        }
        let mut s = x[i];
        if i >= 1 {
            s = s - l1 * x[i - 1];
        }
        if i >= 2 {
            s = s - l2 * x[i - 2];
        }
        x[i] = s;
    }

    // back substitution U x = y
    x[n - 1] = x[n - 1] / u0[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - u1[i] * x[i + 1] - bands.super2[i] * x[i + 2]) / u0[i];
    }
    Ok(x)
}

/// Roots of `c4 z^4 + c3 z^3 + c2 z^2 + c1 z + c0` as the eigenvalues of
/// the companion matrix, computed by shifted complex QR.
pub fn quartic_roots<F: Float>(c0: F, c1: F, c2: F, c3: F, c4: F) -> Result<[Complex<F>; 4]> {
    let tiny = F::cast(1e-300).max(F::min_positive_value());
    if c4.abs() < tiny {
        return Err(Error::DegenerateLeadingCoefficient {
            magnitude: c4.abs().to_f64().unwrap_or(0.0),
        });
    }
    let a = [c0 / c4, c1 / c4, c2 / c4, c3 / c4];
    let zero = Complex::new(F::zero(), F::zero());
    let one = Complex::new(F::one(), F::zero());
    let mut h = vec![vec![zero; 4]; 4];
    h[0][0] = Complex::new(-a[3], F::zero());
    h[0][1] = Complex::new(-a[2], F::zero());
    h[0][2] = Complex::new(-a[1], F::zero());
    h[0][3] = Complex::new(-a[0], F::zero());
    h[1][0] = one;
    h[2][1] = one;
    h[3][2] = one;

    let eigs = hessenberg_eigenvalues(&mut h)?;
    Ok([eigs[0], eigs[1], eigs[2], eigs[3]])
}

fn eig_2x2<F: Float>(
    a: Complex<F>,
    b: Complex<F>,
    c: Complex<F>,
    d: Complex<F>,
) -> (Complex<F>, Complex<F>) {
    let half = F::cast(0.5);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det.scale(F::cast(4.0))).sqrt();
    // pick the sign that avoids cancellation in tr +/- disc
    let sum = if (tr + disc).norm_sqr() >= (tr - disc).norm_sqr() {
        tr + disc
    } else {
        tr - disc
    };
    let l1 = sum.scale(half);
    let l2 = if l1.norm_sqr() > F::zero() {
        det / l1
    } else {
        (tr - disc).scale(half)
    };
    (l1, l2)
}

/// Eigenvalues of a small complex upper Hessenberg matrix by explicit
/// single-shift QR with deflation. Destroys `h`.
fn hessenberg_eigenvalues<F: Float>(h: &mut [Vec<Complex<F>>]) -> Result<Vec<Complex<F>>> {
    let n = h.len();
    let mut eigs = vec![Complex::new(F::zero(), F::zero()); n];
    let mut m = n;
    let mut iters = 0usize;
    let cap = 100 * n;
    while m > 0 {
        // locate the start of the trailing irreducible block
        let mut l = m - 1;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            let s = if s == F::zero() { F::one() } else { s };
            if h[l][l - 1].norm() <= F::epsilon() * s {
                h[l][l - 1] = Complex::new(F::zero(), F::zero());
                break;
            }
            l -= 1;
        }
        if l == m - 1 {
            eigs[m - 1] = h[m - 1][m - 1];
            m -= 1;
            iters = 0;
            continue;
        }
        if l == m - 2 {
            let (e1, e2) = eig_2x2(
                h[m - 2][m - 2],
                h[m - 2][m - 1],
                h[m - 1][m - 2],
                h[m - 1][m - 1],
            );
            eigs[m - 2] = e1;
            eigs[m - 1] = e2;
            m -= 2;
            iters = 0;
            continue;
        }
        iters += 1;
        if iters > cap {
            return Err(Error::NoConvergence {
                what: "hessenberg qr",
                iterations: cap,
            });
        }

        // Wilkinson shift: trailing 2x2 eigenvalue nearest h[m-1][m-1]
        let (e1, e2) = eig_2x2(
            h[m - 2][m - 2],
            h[m - 2][m - 1],
            h[m - 1][m - 2],
            h[m - 1][m - 1],
        );
        let target = h[m - 1][m - 1];
        let mut mu = if (e1 - target).norm_sqr() <= (e2 - target).norm_sqr() {
            e1
        } else {
            e2
        };
        if iters.is_multiple_of(12) {
            // exceptional shift to break rare cycling
            mu = mu + h[m - 1][m - 2].scale(F::cast(0.75));
        }

        for i in l..m {
            h[i][i] = h[i][i] - mu;
        }
        // QR by Givens rotations; rotation k acts on rows/cols (k, k+1)
        let mut rots: Vec<(Complex<F>, Complex<F>)> = Vec::with_capacity(m - l);
        for k in l..m - 1 {
            let a = h[k][k];
            let b = h[k + 1][k];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (u, v) = if r == F::zero() {
                (
                    Complex::new(F::one(), F::zero()),
                    Complex::new(F::zero(), F::zero()),
                )
            } else {
                (a.conj().unscale(r), b.conj().unscale(r))
            };
            for j in k..m {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = u * x + v * y;
                h[k + 1][j] = -v.conj() * x + u.conj() * y;
            }
            rots.push((u, v));
        }
        for (idx, &(u, v)) in rots.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(m);
            for row in h.iter_mut().take(top).skip(l) {
                let x = row[k];
                let y = row[k + 1];
                row[k] = x * u.conj() + y * v.conj();
                row[k + 1] = -x * v + y * u;
            }
        }
        for i in l..m {
            h[i][i] = h[i][i] + mu;
        }
    }
    Ok(eigs)
}
