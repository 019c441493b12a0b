//! Unnormalized target densities, exact samplers where available, and the
//! elliptical metadata used by the HPD diagnostics.
//!
//! All densities are evaluated in log space with normalizing constants dropped.
//! For Gaussian and Student targets the constant is chosen so that the mode
//! has log-density zero.

use std::fmt;
use std::sync::Arc;

use statrs::distribution::{ChiSquared as ChiSquaredDist, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_factorize, LowerTriangularFactor, Matrix, SymmetricMatrix};
use crate::proposals::RngStream;

pub type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ExactSamplerFn = Arc<dyn Fn(&mut RngStream) -> Vec<f64> + Send + Sync>;
pub type UnivariateLogDensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One-dimensional factor of a product target.
#[derive(Clone)]
pub enum Univariate {
    StandardNormal,
    StandardCauchy,
    Custom(UnivariateLogDensityFn),
}

impl Univariate {
    #[inline]
    fn log_density(&self, x: f64) -> f64 {
        match self {
            Univariate::StandardNormal => -0.5 * x * x,
            Univariate::StandardCauchy => -(x * x).ln_1p(),
            Univariate::Custom(f) => f(x),
        }
    }
}

#[derive(Clone)]
pub enum TargetKind {
    Gaussian {
        mean: Vec<f64>,
        covariance: SymmetricMatrix,
    },
    EllipticalStudent {
        location: Vec<f64>,
        pseudo_covariance: SymmetricMatrix,
        dof: f64,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        shared_covariance: SymmetricMatrix,
    },
    Product1D {
        marginal: Univariate,
    },
    Custom {
        log_density: LogDensityFn,
        sampler: Option<ExactSamplerFn>,
    },
}

/// Location and shape `(μ, Σ)` of an elliptical target, with the Cholesky
/// factor of `Σ` cached for quadratic forms.
#[derive(Debug, Clone)]
pub struct ShapeMetadata {
    pub location: Vec<f64>,
    pub shape: SymmetricMatrix,
    factor: LowerTriangularFactor,
}

impl ShapeMetadata {
    pub fn new(location: Vec<f64>, shape: SymmetricMatrix) -> Result<Self> {
        check_dim(shape.dim(), location.len())?;
        let factor = cholesky_factorize(&shape)?;
        Ok(Self {
            location,
            shape,
            factor,
        })
    }

    pub fn factor(&self) -> &LowerTriangularFactor {
        &self.factor
    }

    /// `(x − μ)ᵀ Σ⁻¹ (x − μ)`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.location).map(|(a, b)| a - b).collect();
        let w = self.factor.solve_lower(&diff);
        crate::linalg::dot(&w, &w)
    }
}

/// How the whitened quadratic form `(x−μ)ᵀΣ⁻¹(x−μ)` is distributed under the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraticLaw {
    /// χ²(d).
    ChiSquared { dim: usize },
    /// `d · F(d, ν)`.
    ScaledF { dim: usize, dof: f64 },
}

impl QuadraticLaw {
    /// `q` with `P(Q ≤ q) = level`, the boundary of the `level` HPD region.
    pub fn quantile(&self, level: f64) -> f64 {
        match *self {
            QuadraticLaw::ChiSquared { dim } => ChiSquaredDist::new(dim as f64)
                .expect("positive dimension")
                .inverse_cdf(level),
            QuadraticLaw::ScaledF { dim, dof } => {
                // Closed form for F(2, ν): P(F > f) = (1 + 2f/ν)^{−ν/2}.
                if dim == 2 {
                    let tail = 1.0 - level;
                    dof * (tail.powf(-2.0 / dof) - 1.0)
                } else {
                    dim as f64
                        * FisherSnedecor::new(dim as f64, dof)
                            .expect("positive parameters")
                            .inverse_cdf(level)
                }
            }
        }
    }

    pub fn cdf(&self, q: f64) -> f64 {
        match *self {
            QuadraticLaw::ChiSquared { dim } => ChiSquaredDist::new(dim as f64)
                .expect("positive dimension")
                .cdf(q),
            QuadraticLaw::ScaledF { dim, dof } => FisherSnedecor::new(dim as f64, dof)
                .expect("positive parameters")
                .cdf(q / dim as f64),
        }
    }
}

#[derive(Clone)]
pub struct TargetModel {
    dim: usize,
    kind: TargetKind,
    metadata: Option<ShapeMetadata>,
    /// Cholesky factor of the covariance-like matrix of the kind, if any.
    factor: Option<LowerTriangularFactor>,
    log_weights: Vec<f64>,
}

impl fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            TargetKind::Gaussian { .. } => "Gaussian",
            TargetKind::EllipticalStudent { .. } => "EllipticalStudent",
            TargetKind::GaussianMixture { .. } => "GaussianMixture",
            TargetKind::Product1D { .. } => "Product1D",
            TargetKind::Custom { .. } => "Custom",
        };
        f.debug_struct("TargetModel")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .field("metadata", &self.metadata)
            .finish()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

impl TargetModel {
    pub fn gaussian(mean: Vec<f64>, covariance: SymmetricMatrix) -> Result<Self> {
        let metadata = ShapeMetadata::new(mean.clone(), covariance.clone())?;
        Ok(Self {
            dim: mean.len(),
            factor: Some(metadata.factor.clone()),
            metadata: Some(metadata),
            kind: TargetKind::Gaussian { mean, covariance },
            log_weights: Vec::new(),
        })
    }

    pub fn student(location: Vec<f64>, pseudo_covariance: SymmetricMatrix, dof: f64) -> Result<Self> {
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "degrees of freedom must be positive, got {dof}"
            )));
        }
        let metadata = ShapeMetadata::new(location.clone(), pseudo_covariance.clone())?;
        Ok(Self {
            dim: location.len(),
            factor: Some(metadata.factor.clone()),
            metadata: Some(metadata),
            kind: TargetKind::EllipticalStudent {
                location,
                pseudo_covariance,
                dof,
            },
            log_weights: Vec::new(),
        })
    }

    pub fn mixture(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        shared_covariance: SymmetricMatrix,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::InvalidArgument(
                "mixture needs one positive weight per component".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let dim = shared_covariance.dim();
        for m in &means {
            check_dim(dim, m.len())?;
        }
        let factor = cholesky_factorize(&shared_covariance)?;
        Ok(Self {
            dim,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            kind: TargetKind::GaussianMixture {
                weights,
                means,
                shared_covariance,
            },
            metadata: None,
            factor: Some(factor),
        })
    }

    pub fn product(marginal: Univariate, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let metadata = match marginal {
            Univariate::StandardNormal => Some(ShapeMetadata::new(
                vec![0.0; dim],
                SymmetricMatrix::identity(dim),
            )?),
            _ => None,
        };
        Ok(Self {
            dim,
            kind: TargetKind::Product1D { marginal },
            metadata,
            factor: None,
            log_weights: Vec::new(),
        })
    }

    pub fn custom(dim: usize, log_density: LogDensityFn, sampler: Option<ExactSamplerFn>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            kind: TargetKind::Custom {
                log_density,
                sampler,
            },
            metadata: None,
            factor: None,
            log_weights: Vec::new(),
        })
    }

    /// Attaches (or replaces) the `(μ, Σ)` used by the HPD diagnostics.
    pub fn with_metadata(mut self, location: Vec<f64>, shape: SymmetricMatrix) -> Result<Self> {
        check_dim(self.dim, location.len())?;
        self.metadata = Some(ShapeMetadata::new(location, shape)?);
        Ok(self)
    }

    /// Density of `A X + b` for `X ∼ self`: `x ↦ π(A⁻¹(x − b))` (the `|det A|⁻¹`
    /// constant is dropped). Exact sampling carries over when `self` has it.
    pub fn affine_image(self: &Arc<Self>, a: &Matrix, b: &[f64]) -> Result<Self> {
        check_dim(self.dim, a.dim())?;
        check_dim(self.dim, b.len())?;
        let a_inv = invert(a)?;
        let base = Arc::clone(self);
        let shift = b.to_vec();
        let log_density: LogDensityFn = Arc::new(move |x: &[f64]| {
            let centered: Vec<f64> = x.iter().zip(&shift).map(|(xi, bi)| xi - bi).collect();
            base.log_density_unchecked(&a_inv.mul_vec(&centered))
        });
        let sampler: Option<ExactSamplerFn> = if self.has_exact_sampler() {
            let base = Arc::clone(self);
            let a = a.clone();
            let shift = b.to_vec();
            Some(Arc::new(move |rng: &mut RngStream| {
                let x = base.sample_exact(rng).expect("base sampler checked");
                a.mul_vec(&x).iter().zip(&shift).map(|(v, s)| v + s).collect()
            }))
        } else {
            None
        };
        let mut out = Self::custom(self.dim, log_density, sampler)?;
        if let Some(meta) = &self.metadata {
            let location: Vec<f64> = a
                .mul_vec(&meta.location)
                .iter()
                .zip(b)
                .map(|(v, s)| v + s)
                .collect();
            out = out.with_metadata(location, a.congruence(&meta.shape))?;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn metadata(&self) -> Option<&ShapeMetadata> {
        self.metadata.as_ref()
    }

    /// Expectation of `X` when it exists and is known in closed form.
    pub fn true_mean(&self) -> Option<Vec<f64>> {
        match &self.kind {
            TargetKind::Gaussian { mean, .. } => Some(mean.clone()),
            TargetKind::EllipticalStudent { location, dof, .. } if *dof > 1.0 => {
                Some(location.clone())
            }
            TargetKind::EllipticalStudent { .. } => None,
            TargetKind::GaussianMixture { weights, means, .. } => {
                let mut m = vec![0.0; self.dim];
                for (w, mu) in weights.iter().zip(means) {
                    for (mi, x) in m.iter_mut().zip(mu) {
                        *mi += w * x;
                    }
                }
                Some(m)
            }
            TargetKind::Product1D {
                marginal: Univariate::StandardNormal,
            } => Some(vec![0.0; self.dim]),
            _ => None,
        }
    }

    /// Distribution of the HPD quadratic form under the target, when known.
    pub fn quadratic_law(&self) -> Option<QuadraticLaw> {
        match &self.kind {
            TargetKind::Gaussian { .. }
            | TargetKind::Product1D {
                marginal: Univariate::StandardNormal,
            } => Some(QuadraticLaw::ChiSquared { dim: self.dim }),
            TargetKind::EllipticalStudent { dof, .. } => Some(QuadraticLaw::ScaledF {
                dim: self.dim,
                dof: *dof,
            }),
            _ => None,
        }
    }

    #[inline]
    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::Gaussian { mean, .. } => {
                -0.5 * self.whitened_norm_sq(x, mean)
            }
            TargetKind::EllipticalStudent { location, dof, .. } => {
                let q = self.whitened_norm_sq(x, location);
                -0.5 * (dof + self.dim as f64) * (q / dof).ln_1p()
            }
            TargetKind::GaussianMixture { means, .. } => {
                let terms: Vec<f64> = means
                    .iter()
                    .zip(&self.log_weights)
                    .map(|(m, lw)| lw - 0.5 * self.whitened_norm_sq(x, m))
                    .collect();
                log_sum_exp(&terms)
            }
            TargetKind::Product1D { marginal } => x.iter().map(|&xi| marginal.log_density(xi)).sum(),
            TargetKind::Custom { log_density, .. } => log_density(x),
        }
    }

    #[inline]
    fn whitened_norm_sq(&self, x: &[f64], center: &[f64]) -> f64 {
        let l = self.factor.as_ref().expect("kind carries a factor");
        let d = self.dim;
        let data = l.as_slice();
        // Forward substitution on x − center without allocating twice.
        let mut w = [0.0_f64; 64];
        let mut heap;
        let w: &mut [f64] = if d <= 64 {
            &mut w[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..d {
            let mut s = x[i] - center[i];
            for k in 0..i {
                s -= data[i * d + k] * w[k];
            }
            let wi = s / data[i * d + i];
            w[i] = wi;
            acc += wi * wi;
        }
        acc
    }

    /// `log π(x)` up to an additive constant; `−∞` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.log_density_unchecked(x))
    }

    pub fn has_exact_sampler(&self) -> bool {
        match &self.kind {
            TargetKind::Product1D {
                marginal: Univariate::Custom(_),
            } => false,
            TargetKind::Custom { sampler, .. } => sampler.is_some(),
            _ => true,
        }
    }

    /// One exact draw from `π`.
    pub fn sample_exact(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        let d = self.dim;
        match &self.kind {
            TargetKind::Gaussian { mean, .. } => {
                let z = rng.standard_normal_vec(d);
                let lz = self.factor.as_ref().unwrap().mul_vec(&z);
                Ok(mean.iter().zip(&lz).map(|(m, v)| m + v).collect())
            }
            TargetKind::EllipticalStudent { location, dof, .. } => {
                let z = rng.standard_normal_vec(d);
                let g: f64 = rng.sample(&rand_distr::ChiSquared::new(*dof).expect("dof > 0"));
                let scale = (dof / g).sqrt();
                let lz = self.factor.as_ref().unwrap().mul_vec(&z);
                Ok(location.iter().zip(&lz).map(|(m, v)| m + scale * v).collect())
            }
            TargetKind::GaussianMixture { weights, means, .. } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                let z = rng.standard_normal_vec(d);
                let lz = self.factor.as_ref().unwrap().mul_vec(&z);
                Ok(means[k].iter().zip(&lz).map(|(m, v)| m + v).collect())
            }
            TargetKind::Product1D { marginal } => match marginal {
                Univariate::StandardNormal => Ok(rng.standard_normal_vec(d)),
                Univariate::StandardCauchy => Ok((0..d)
                    .map(|_| (std::f64::consts::PI * (rng.uniform() - 0.5)).tan())
                    .collect()),
                Univariate::Custom(_) => Err(Error::NoExactSampler),
            },
            TargetKind::Custom { sampler, .. } => match sampler {
                Some(s) => Ok(s(rng)),
                None => Err(Error::NoExactSampler),
            },
        }
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(a: &Matrix) -> Result<Matrix> {
    let d = a.dim();
    let mut m = a.clone();
    let mut inv = Matrix::identity(d);
    for col in 0..d {
        let pivot_row = (col..d)
            .max_by(|&i, &j| m.get(i, col).abs().total_cmp(&m.get(j, col).abs()))
            .unwrap();
        let p = m.get(pivot_row, col);
        if p.abs() < 1e-300 {
            return Err(Error::InvalidArgument("affine map is singular".into()));
        }
        for j in 0..d {
            let (x, y) = (m.get(col, j), m.get(pivot_row, j));
            m.set(col, j, y);
            m.set(pivot_row, j, x);
            let (x, y) = (inv.get(col, j), inv.get(pivot_row, j));
            inv.set(col, j, y);
            inv.set(pivot_row, j, x);
        }
        for j in 0..d {
            m.set(col, j, m.get(col, j) / p);
            inv.set(col, j, inv.get(col, j) / p);
        }
        for i in 0..d {
            if i == col {
                continue;
            }
            let f = m.get(i, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..d {
                m.set(i, j, m.get(i, j) - f * m.get(col, j));
                inv.set(i, j, inv.get(i, j) - f * inv.get(col, j));
            }
        }
    }
    Ok(inv)
}

/// `min{1, exp(log_y − log_x)}`.
#[inline]
pub fn acceptance_from_logs(log_y: f64, log_x: f64) -> f64 {
    if log_y >= log_x {
        1.0
    } else {
        (log_y - log_x).exp()
    }
}

/// Metropolis acceptance probability `min{1, π(y)/π(x)}`.
pub fn acceptance_ratio(target: &TargetModel, y: &[f64], x: &[f64]) -> Result<f64> {
    let log_x = target.log_density(x)?;
    if log_x == f64::NEG_INFINITY || log_x.is_nan() {
        return Err(Error::InvalidState(
            "current point has zero target density".into(),
        ));
    }
    let log_y = target.log_density(y)?;
    if log_y.is_nan() {
        return Ok(0.0);
    }
    Ok(acceptance_from_logs(log_y, log_x))
}

/// `M Mᵀ` for `M` with i.i.d. standard normal entries.
pub fn random_covariance(dim: usize, rng: &mut RngStream) -> SymmetricMatrix {
    let m: Vec<f64> = rng.standard_normal_vec(dim * dim);
    SymmetricMatrix::from_fn(dim, |i, j| {
        crate::linalg::dot(&m[i * dim..(i + 1) * dim], &m[j * dim..(j + 1) * dim])
    })
}

/// `(x − μ)ᵀ Σ⁻¹ (x − μ)` with the target's metadata.
pub fn hpd_quadratic(target: &TargetModel, x: &[f64]) -> Result<f64> {
    check_dim(target.dim, x.len())?;
    let meta = target.metadata.as_ref().ok_or(Error::MissingMetadata)?;
    Ok(meta.quadratic(x))
}

/// Bivariate Student with one degree of freedom, location `[1, 2]` and
/// pseudo-covariance `[[0.2, 0.1], [0.1, 0.8]]`.
pub fn student2d_paper() -> TargetModel {
    let shape = SymmetricMatrix::from_rows(&[vec![0.2, 0.1], vec![0.1, 0.8]]).unwrap();
    TargetModel::student(vec![1.0, 2.0], shape, 1.0).unwrap()
}

/// Centered Student (ν = 1) with a random pseudo-covariance `M Mᵀ`.
pub fn random_student(dim: usize, rng: &mut RngStream) -> Result<TargetModel> {
    TargetModel::student(vec![0.0; dim], random_covariance(dim, rng), 1.0)
}

/// Centered Gaussian with a random covariance `M Mᵀ`.
pub fn random_gaussian(dim: usize, rng: &mut RngStream) -> Result<TargetModel> {
    TargetModel::gaussian(vec![0.0; dim], random_covariance(dim, rng))
}

/// Equal mixture of `N(±m₁, Σ)` with `m₁ = [4, 0, …, 0]` and
/// `Σ = diag(1, 100, …, 100)`.
pub fn separated_mixture(dim: usize) -> Result<TargetModel> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut m1 = vec![0.0; dim];
    m1[0] = 4.0;
    let m2: Vec<f64> = m1.iter().map(|x| -x).collect();
    let mut diag = vec![100.0; dim];
    diag[0] = 1.0;
    TargetModel::mixture(vec![0.5, 0.5], vec![m1, m2], SymmetricMatrix::from_diagonal(&diag))
}
