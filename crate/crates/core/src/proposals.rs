//! Spherically symmetric proposal increments and the seeded random stream
//! that drives every chain and estimator.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counter-based random stream: ChaCha12 keyed by `seed`, with `stream` selecting
/// an independent nonce. Identical `(seed, stream)` pairs give identical output
/// on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Rewinds to the beginning of the stream.
    pub fn reset(&mut self) {
        *self = Self::new(self.seed, self.stream);
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn standard_normal_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.standard_normal()).collect()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub(crate) fn sample<T, D: Distribution<T>>(&mut self, dist: &D) -> T {
        dist.sample(&mut self.rng)
    }
}

/// Proposal family `q`: standard Gaussian or spherical Student with exponent `p`,
/// `q(z) ∝ (1 + ‖z‖²)^{−(d+p)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProposalSpec {
    Gaussian,
    Student { p: f64 },
}

impl Default for ProposalSpec {
    fn default() -> Self {
        ProposalSpec::Student { p: 1.0 }
    }
}

impl ProposalSpec {
    pub fn student(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Student proposal exponent must be positive, got {p}"
            )));
        }
        Ok(ProposalSpec::Student { p })
    }

    /// Sampler with any distribution constants precomputed.
    pub fn sampler(&self, dim: usize) -> IncrementSampler {
        let mixing = match *self {
            ProposalSpec::Gaussian => None,
            ProposalSpec::Student { p } => {
                Some((ChiSquared::new(p).expect("exponent validated positive"), p))
            }
        };
        IncrementSampler { dim, mixing }
    }
}

impl fmt::Display for ProposalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProposalSpec::Gaussian => write!(f, "gaussian"),
            ProposalSpec::Student { p } => write!(f, "student:{p}"),
        }
    }
}

impl FromStr for ProposalSpec {
    type Err = Error;

    /// `gaussian`, `student` (p = 1) or `student:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "gaussian" => Ok(ProposalSpec::Gaussian),
            "student" => Ok(ProposalSpec::Student { p: 1.0 }),
            _ => match s.strip_prefix("student:") {
                Some(p) => {
                    let p: f64 = p.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad Student exponent in '{s}'"))
                    })?;
                    ProposalSpec::student(p)
                }
                None => Err(Error::InvalidArgument(format!(
                    "unknown proposal '{s}', expected gaussian or student:<p>"
                ))),
            },
        }
    }
}

/// Draws proposal increments `U ∼ q` in a fixed dimension.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    dim: usize,
    mixing: Option<(ChiSquared<f64>, f64)>,
}

impl IncrementSampler {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes a fresh increment into `out`.
    ///
    /// Student draws use the compound `z = g / √(G/p)` with `g` standard normal
    /// and `G ∼ χ²(p)`.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = rng.standard_normal();
        }
        if let Some((chi, p)) = &self.mixing {
            let g: f64 = rng.sample(chi);
            let scale = (p / g).sqrt();
            for o in out.iter_mut() {
                *o *= scale;
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }
}

pub fn sample_increment(spec: &ProposalSpec, dim: usize, rng: &mut RngStream) -> Vec<f64> {
    spec.sampler(dim).sample(rng)
}

/// Norm of a proposal increment.
pub fn sample_radius(spec: &ProposalSpec, dim: usize, rng: &mut RngStream) -> f64 {
    crate::linalg::norm(&sample_increment(spec, dim, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Uniform};

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn reset_streams_repeat() {
        let spec = ProposalSpec::default();
        let mut rng = RngStream::new(42, 3);
        let a = sample_increment(&spec, 5, &mut rng);
        rng.reset();
        let b = sample_increment(&spec, 5, &mut rng);
        assert_eq!(a, b);
        let mut other = RngStream::new(42, 3);
        assert_eq!(a, sample_increment(&spec, 5, &mut other));
    }

    #[test]
    fn parse_proposal() {
        assert_eq!("gaussian".parse::<ProposalSpec>().unwrap(), ProposalSpec::Gaussian);
        assert_eq!(
            "student:2.5".parse::<ProposalSpec>().unwrap(),
            ProposalSpec::Student { p: 2.5 }
        );
        assert_eq!(
            "student".parse::<ProposalSpec>().unwrap(),
            ProposalSpec::Student { p: 1.0 }
        );
        assert!("student:0".parse::<ProposalSpec>().is_err());
        assert!("cauchy".parse::<ProposalSpec>().is_err());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RngStream::new(1, 0);
        let n = 100_000;
        let d = 4;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let sampler = ProposalSpec::Gaussian.sampler(d);
        for _ in 0..n {
            let u = sampler.sample(&mut rng);
            for i in 0..d {
                sum[i] += u[i];
                sq[i] += u[i] * u[i];
            }
        }
        for i in 0..d {
            let m = sum[i] / n as f64;
            let v = sq[i] / n as f64 - m * m;
            assert!(m.abs() < 0.02, "mean {m}");
            assert!((v - 1.0).abs() < 0.03, "var {v}");
        }
    }

    #[test]
    fn student_direction_uniform_and_tail_heavy() {
        let mut rng = RngStream::new(2, 0);
        let sampler = ProposalSpec::Student { p: 1.0 }.sampler(2);
        let n = 100_000;
        let mut angles = Vec::with_capacity(n);
        let mut far = 0usize;
        for _ in 0..n {
            let u = sampler.sample(&mut rng);
            angles.push(u[1].atan2(u[0]));
            if crate::linalg::norm(&u) > 10.0 {
                far += 1;
            }
        }
        let unif = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let ks = ks_distance(angles, |x| unif.cdf(x));
        assert!(ks < 0.01, "KS {ks}");
        assert!(far as f64 / n as f64 > 0.01);
    }

    #[test]
    fn gaussian_radius_squared_mean() {
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_radius(&ProposalSpec::Gaussian, 2, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn cauchy_radius_median() {
        let mut rng = RngStream::new(4, 0);
        let mut r: Vec<f64> = (0..100_000)
            .map(|_| sample_radius(&ProposalSpec::Student { p: 1.0 }, 1, &mut rng))
            .collect();
        r.sort_by(f64::total_cmp);
        let median = 0.5 * (r[49_999] + r[50_000]);
        assert!((median - 1.0).abs() < 0.02, "median {median}");
    }

    #[test]
    fn disjoint_streams_uncorrelated() {
        let mut a = RngStream::new(9, 0);
        let mut b = RngStream::new(9, 1);
        let n = 100_000;
        let (mut sab, mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.standard_normal();
            let y = b.standard_normal();
            sab += x * y;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }
}
