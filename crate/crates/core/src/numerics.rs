//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is sized for block lengths of a few dozen samples, so the
//! algorithms are the plain O(N²) / O(n³) ones.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Squared Euclidean norm.
pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Gram matrix `selfᴴ · self`.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for r in 0..self.rows {
                    acc += self[(r, i)].conj() * self[(r, j)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix> {
        if self.rows != self.cols {
            return Err(invalid("only square matrices can be inverted"));
        }
        let n = self.rows;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() <= 1e-14 * scale {
                return Err(Error::Singular(format!("zero pivot in column {col}")));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = ONE / a[(col, col)];
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Right-circulant matrix represented by its first column.
///
/// Entry `(i, j)` is `generator[(i - j) mod N]`, so `cir(a) · b` is the
/// circular convolution of `a` and `b` and `cir(a) · b == cir(b) · a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circulant {
    generator: Vec<C64>,
}

/// Builds `cir(generator)`.
pub fn cir(generator: &[C64]) -> Result<Circulant> {
    if generator.is_empty() {
        return Err(invalid("circulant generator must be non-empty"));
    }
    if generator.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("circulant generator has non-finite entries"));
    }
    Ok(Circulant {
        generator: generator.to_vec(),
    })
}

impl Circulant {
    pub fn len(&self) -> usize {
        self.generator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generator.is_empty()
    }

    pub fn generator(&self) -> &[C64] {
        &self.generator
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let n = self.len();
        self.generator[(i + n - j % n) % n]
    }

    /// Column `j`, i.e. the generator cyclically delayed by `j`.
    pub fn column(&self, j: usize) -> Vec<C64> {
        let n = self.len();
        (0..n).map(|i| self.generator[(i + n - j % n) % n]).collect()
    }

    /// `cir(g) · v`, skipping zero generator taps.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.len();
        assert_eq!(v.len(), n, "dimension mismatch");
        let mut out = vec![ZERO; n];
        for (k, &g) in self.generator.iter().enumerate() {
            if g == ZERO {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += g * v[(i + n - k) % n];
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.len();
        CMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Eigenvalues `λ(k)`, the non-unitary DFT of the generator.
    pub fn eigenvalues(&self) -> Vec<C64> {
        dft(&self.generator, false)
    }
}

/// Forward DFT, `X(k) = Σ v(n) e^{-j2πnk/N}`, optionally scaled by `1/√N`.
pub fn dft(v: &[C64], unitary: bool) -> Vec<C64> {
    transform(v, -1.0, if unitary { 1.0 / (v.len() as f64).sqrt() } else { 1.0 })
}

/// Inverse of [`dft`] for the same `unitary` flag.
pub fn idft(v: &[C64], unitary: bool) -> Vec<C64> {
    let n = v.len() as f64;
    transform(v, 1.0, if unitary { 1.0 / n.sqrt() } else { 1.0 / n })
}

fn transform(v: &[C64], sign: f64, scale: f64) -> Vec<C64> {
    let n = v.len();
    let twiddle: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();
    (0..n)
        .map(|k| {
            let acc: C64 = v
                .iter()
                .enumerate()
                .map(|(i, x)| x * twiddle[(i * k) % n])
                .sum();
            acc * scale
        })
        .collect()
}

/// Cyclic delay: `out[n] = v[(n - delay) mod N]`.
pub fn cyclic_shift(v: &[C64], delay: usize) -> Result<Vec<C64>> {
    let n = v.len();
    if delay >= n {
        return Err(invalid(format!(
            "cyclic delay {delay} out of range for length {n}"
        )));
    }
    Ok((0..n).map(|i| v[(i + n - delay) % n]).collect())
}

/// Eigendecomposition `A = Uᴴ D U` of a Hermitian matrix.
///
/// Row `l` of `u` is the vector `u_l` that forms the rotated tap
/// `g̃(l) = u_lᵀ g`; eigenvalues are sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub u: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `Uᴴ D U`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|l| self.u[(l, i)].conj() * self.values[l] * self.u[(l, j)])
                .sum()
        })
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.rows();
    if n != a.cols() {
        return Err(invalid("eigendecomposition needs a square matrix"));
    }
    let scale = a.max_abs().max(1.0);
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > 1e-8 * scale {
                return Err(invalid(format!(
                    "matrix is not Hermitian at ({i}, {j})"
                )));
            }
        }
    }

    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|ij| a[ij].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let tol = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|ij| m[ij].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = m[(p, q)];
                let babs = b.norm();
                if babs <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = b / babs;
                let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
                let tau = (aqq - app) / (2.0 * babs);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, s], [-s·e^{-iα}, c·e^{-iα}]] on coordinates (p, q).
                let ph = phase.conj();
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = mkp * c - mkq * s * ph;
                    m[(k, q)] = mkp * s + mkq * c * ph;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * s * ph;
                    v[(k, q)] = vkp * s + vkq * c * ph;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = mpk * c - mqk * s * phase;
                    m[(q, k)] = mpk * s + mqk * c * phase;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(y, y)].re.total_cmp(&m[(x, x)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    // Columns of V are eigenvectors; U = Vᴴ.
    let u = CMatrix::from_fn(n, n, |l, j| v[(j, order[l])].conj());
    Ok(HermitianEigen { values, u })
}
