//! Dense linear algebra for the shape factor: Cholesky factorization,
//! O(d²) rank-one update/downdate, cyclic Jacobi eigenvalues and a few
//! triangular helpers.
//!
//! Everything is stored row-major in a flat `Vec<f64>`. Dimensions in this
//! crate stay well below a hundred, so no blocking or packing is attempted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot threshold for [`cholesky_factorize`].
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Square matrix with no structure assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| dot(&self.data[i * d..(i + 1) * d], v))
            .collect()
    }

    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, &vi) in v.iter().enumerate() {
            for j in 0..d {
                out[j] += self.get(i, j) * vi;
            }
        }
        out
    }

    /// `self · m · selfᵀ`, symmetrized.
    pub fn congruence(&self, m: &SymmetricMatrix) -> SymmetricMatrix {
        let full = self.mul(&m.to_matrix()).mul(&self.transpose());
        SymmetricMatrix::from_fn(self.dim, |i, j| 0.5 * (full.get(i, j) + full.get(j, i)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

/// Symmetric matrix; both triangles are stored and kept identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    /// Builds from the lower triangle of `f`; the upper triangle is mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Rejects input that is not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let full = Matrix::from_rows(rows)?;
        let dim = full.dim();
        for i in 0..dim {
            for j in 0..i {
                if full.get(i, j) != full.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            data: full.data,
        })
    }

    /// Outer product `c · v vᵀ`.
    pub fn outer(v: &[f64], c: f64) -> Self {
        Self::from_fn(v.len(), |i, j| c * v[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &SymmetricMatrix) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Adds `c` to every diagonal entry.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| dot(&self.data[i * d..(i + 1) * d], v))
            .collect()
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// Frobenius inner product `trace(selfᵀ · other)`.
    pub fn inner(&self, other: &SymmetricMatrix) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

/// Lower triangular matrix with a strictly positive diagonal.
///
/// The upper triangle of the backing storage is always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerTriangularFactor {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangularFactor {
    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim]).expect("unit diagonal is positive")
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        Self::from_diagonal(&vec![c; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &v) in diag.iter().enumerate() {
            data[i * dim + i] = v;
        }
        Self::from_raw(dim, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let full = Matrix::from_rows(rows)?;
        Self::from_raw(full.dim, full.data)
    }

    fn from_raw(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("empty factor".into()));
        }
        for i in 0..dim {
            let dii = data[i * dim + i];
            if !(dii > 0.0 && dii.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "factor diagonal entry {i} is {dii}, must be positive"
                )));
            }
            for j in i + 1..dim {
                if data[i * dim + j] != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "factor has a nonzero entry above the diagonal at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_raw(self.dim, self.data.iter().map(|x| c * x).collect())
    }

    /// `L · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| dot(&self.data[i * d..i * d + i + 1], &v[..=i]))
            .collect()
    }

    /// `Lᵀ · v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, &vi) in v.iter().enumerate() {
            let row = &self.data[i * d..i * d + i + 1];
            for (o, &lij) in out.iter_mut().zip(row) {
                *o += lij * vi;
            }
        }
        out
    }

    /// Solves `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut x = b.to_vec();
        for i in 0..d {
            let row = &self.data[i * d..i * d + i];
            let s = dot(row, &x[..i]);
            x[i] = (x[i] - s) / self.data[i * d + i];
        }
        x
    }

    /// Solves `Lᵀ x = b` by back substitution.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut x = b.to_vec();
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in i + 1..d {
                s -= self.data[k * d + i] * x[k];
            }
            x[i] = s / self.data[i * d + i];
        }
        x
    }

    /// `L Lᵀ`.
    pub fn product(&self) -> SymmetricMatrix {
        let d = self.dim;
        SymmetricMatrix::from_fn(d, |i, j| {
            let k = j.min(i) + 1;
            dot(&self.data[i * d..i * d + k], &self.data[j * d..j * d + k])
        })
    }

    /// `(L Lᵀ)⁻¹`.
    pub fn product_inverse(&self) -> SymmetricMatrix {
        let d = self.dim;
        let mut cols = Vec::with_capacity(d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            cols.push(self.solve_upper(&self.solve_lower(&e)));
        }
        SymmetricMatrix::from_fn(d, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }

    /// `log det(L Lᵀ)`.
    pub fn log_det_product(&self) -> f64 {
        2.0 * self.diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

/// Cholesky factorization `M = L Lᵀ`.
///
/// Fails when a pivot drops to `PIVOT_TOLERANCE × max diagonal` or below.
pub fn cholesky_factorize(m: &SymmetricMatrix) -> Result<LowerTriangularFactor> {
    let d = m.dim();
    if d == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let max_diag = m.diagonal().into_iter().fold(0.0_f64, f64::max);
    let floor = PIVOT_TOLERANCE * max_diag;
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let s = dot(&l[j * d..j * d + j], &l[j * d..j * d + j]);
        let pivot = m.get(j, j) - s;
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let s = dot(&l[i * d..i * d + j], &l[j * d..j * d + j]);
            l[i * d + j] = (m.get(i, j) - s) / ljj;
        }
    }
    Ok(LowerTriangularFactor { dim: d, data: l })
}

/// Factor of `L Lᵀ + a · v vᵀ` in O(d²).
///
/// `a > 0` is an update, `a < 0` a hyperbolic-rotation downdate. The downdate
/// reports [`Error::DowndateFailure`] when a pivot stops being positive; use
/// [`rank_one_update_or_refactor`] to fall back to a full factorization.
pub fn rank_one_update(
    l: &LowerTriangularFactor,
    v: &[f64],
    a: f64,
) -> Result<LowerTriangularFactor> {
    let d = l.dim();
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    if a == 0.0 {
        return Ok(l.clone());
    }
    let sign = a.signum();
    let scale = a.abs().sqrt();
    let mut w: Vec<f64> = v.iter().map(|x| scale * x).collect();
    let mut out = l.data.clone();
    for j in 0..d {
        let ljj = out[j * d + j];
        let wj = w[j];
        let arg = ljj * ljj + sign * wj * wj;
        if !(arg > f64::EPSILON * ljj * ljj) || !arg.is_finite() {
            return Err(Error::DowndateFailure { column: j });
        }
        let r = arg.sqrt();
        let c = r / ljj;
        let s = wj / ljj;
        out[j * d + j] = r;
        for i in j + 1..d {
            let lij = (out[i * d + j] + sign * s * w[i]) / c;
            out[i * d + j] = lij;
            w[i] = c * w[i] - s * lij;
        }
    }
    Ok(LowerTriangularFactor { dim: d, data: out })
}

/// [`rank_one_update`] with a full refactorization of the explicitly formed
/// right-hand side when the downdate breaks down.
pub fn rank_one_update_or_refactor(
    l: &LowerTriangularFactor,
    v: &[f64],
    a: f64,
) -> Result<LowerTriangularFactor> {
    match rank_one_update(l, v, a) {
        Err(Error::DowndateFailure { .. }) => {
            let target = l.product().add(&SymmetricMatrix::outer(v, a));
            cholesky_factorize(&target)
        }
        other => other,
    }
}

/// Eigenvalues and (column) eigenvectors of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let d = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        SymmetricMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| self.vectors.get(i, k) * mapped[k] * self.vectors.get(j, k))
                .sum()
        })
    }
}

/// Ascending eigenvalues by cyclic Jacobi sweeps.
pub fn symmetric_eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    jacobi(m, false).map(|e| e.values)
}

/// Eigen-decomposition by cyclic Jacobi sweeps.
pub fn symmetric_eigen(m: &SymmetricMatrix) -> Result<SymmetricEigen> {
    jacobi(m, true)
}

fn jacobi(m: &SymmetricMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    let d = m.dim();
    let mut a = m.to_matrix();
    let mut v = Matrix::identity(d);
    let max_sweeps = 100 * d.max(1);
    let scale = m.frobenius_norm();
    let mut converged = scale == 0.0 || d == 1;
    let mut sweeps = 0;
    while !converged {
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if !off.is_finite() {
            return Err(Error::NoConvergence { sweeps });
        }
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
            continue;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..d {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                if want_vectors {
                    for k in 0..d {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = Matrix::from_fn(d, |i, k| v.get(i, order[k]));
    Ok(SymmetricEigen { values, vectors })
}

/// Radius `‖Lᵀ v‖` of the contour ellipsoid of `L Lᵀ` in the unit direction `v`.
pub fn directional_radius(l: &LowerTriangularFactor, v: &[f64]) -> Result<f64> {
    if v.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: v.len(),
        });
    }
    let n = norm(v);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, has norm {n}"
        )));
    }
    Ok(norm(&l.transpose_mul_vec(v)))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
