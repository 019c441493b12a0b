//! `verify` and `diag` subcommands: Monte Carlo checks of the mean field and
//! diagnostics on stored chains.

use std::path::Path;
use std::sync::Arc;

use ramcmc::analysis::{
    descent_inner_product, estimate_g, estimate_mean_field, find_scale_fixed_point, hpd_outside_fraction,
    lyapunov_value, suboptimality_b, Estimate,
};
use ramcmc::linalg::{LowerTriangularFactor, Matrix, SymmetricMatrix};
use ramcmc::proposals::{ProposalSpec, RngStream};
use ramcmc::targets::TargetModel;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct MeanFieldReport {
    pub factor: Vec<Vec<f64>>,
    pub samples: usize,
    pub mean_field: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub trace: Estimate,
    /// Eigenvalues of the estimate, ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn verify_mean_field(
    target: &TargetModel,
    s: &LowerTriangularFactor,
    spec: &ProposalSpec,
    alpha_star: f64,
    samples: usize,
    seed: u64,
) -> Result<MeanFieldReport, CliError> {
    let est = estimate_mean_field(s, target, spec, alpha_star, samples, &mut RngStream::new(seed, 0))?;
    Ok(MeanFieldReport {
        factor: s.to_rows(),
        samples,
        eigenvalues: ramcmc::linalg::symmetric_eigenvalues(&est.matrix)?,
        mean_field: est.matrix.to_rows(),
        standard_errors: est.standard_errors.to_rows(),
        trace: est.trace,
    })
}

#[derive(Debug, Serialize)]
pub struct LyapunovReport {
    /// Scale of the stable point in whitened coordinates.
    pub theta_star: f64,
    pub r_star: Vec<Vec<f64>>,
    pub lyapunov_value: f64,
    pub descent: Estimate,
}

/// Whitening map `x ↦ L⁻¹(x − μ)` of the target's shape metadata.
fn whitened(target: &Arc<TargetModel>) -> Result<(TargetModel, SymmetricMatrix), CliError> {
    let meta = target.metadata().ok_or(ramcmc::Error::MissingMetadata)?;
    let l = meta.factor();
    let d = target.dim();
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            l.solve_lower(&e)
        })
        .collect();
    let l_inv = Matrix::from_fn(d, |i, j| cols[j][i]);
    let shift: Vec<f64> = l_inv.mul_vec(&meta.location).iter().map(|v| -v).collect();
    Ok((target.affine_image(&l_inv, &shift)?, meta.shape.clone()))
}

/// Finds the stable point `R* = θ*²Σ` and evaluates `w` and `⟨∇w, h⟩` at `S`.
pub fn verify_lyapunov(
    target: &Arc<TargetModel>,
    s: &LowerTriangularFactor,
    spec: &ProposalSpec,
    alpha_star: f64,
    samples: usize,
    seed: u64,
) -> Result<LyapunovReport, CliError> {
    let (white, shape) = whitened(target)?;
    let fp = find_scale_fixed_point(&white, spec, alpha_star, 1e-3, samples, &mut RngStream::new(seed, 0))?;
    let r_star = shape.scaled(fp.theta * fp.theta);
    let descent = descent_inner_product(s, &r_star, target, spec, alpha_star, samples, &mut RngStream::new(seed, 1))?;
    Ok(LyapunovReport {
        theta_star: fp.theta,
        lyapunov_value: lyapunov_value(&s.product(), &r_star)?,
        r_star: r_star.to_rows(),
        descent,
    })
}

#[derive(Debug, Serialize)]
pub struct GPoint {
    pub theta: f64,
    pub g: Estimate,
}

#[derive(Debug, Serialize)]
pub struct GReport {
    pub direction: Vec<f64>,
    pub points: Vec<GPoint>,
    /// No increase between consecutive grid points beyond 3 standard errors.
    pub nonincreasing: bool,
}

/// `count` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn verify_g(
    target: &TargetModel,
    spec: &ProposalSpec,
    thetas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<GReport, CliError> {
    let mut direction = vec![0.0; target.dim()];
    direction[0] = 1.0;
    let mut points = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let g = estimate_g(theta, target, spec, &direction, samples, &mut RngStream::new(seed, k as u64))?;
        points.push(GPoint { theta, g });
    }
    let nonincreasing = points.windows(2).all(|w| {
        let (a, b) = (&w[0].g, &w[1].g);
        b.value - a.value <= 3.0 * (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt()
    });
    Ok(GReport {
        direction,
        points,
        nonincreasing,
    })
}

#[derive(Debug, Serialize)]
pub struct BReport {
    pub b: f64,
    pub factor_diagonal: Vec<f64>,
}

pub fn diag_b(target: &TargetModel, s: &LowerTriangularFactor) -> Result<BReport, CliError> {
    let meta = target.metadata().ok_or(ramcmc::Error::MissingMetadata)?;
    Ok(BReport {
        b: suboptimality_b(&s.product(), &meta.shape)?,
        factor_diagonal: s.diagonal(),
    })
}

#[derive(Debug, Serialize)]
pub struct HpdReport {
    pub samples: usize,
    pub threshold: f64,
    pub outside_fraction: f64,
}

/// Reads the `x_i` columns of a chain CSV, skipping rows with `n ≤ skip`.
pub fn read_chain_csv(path: &Path, dim: usize, skip: u64) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, m: &str| CliError::Parse {
        line,
        column: 0,
        message: format!("{}: {m}", path.display()),
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let x_start = cols
        .iter()
        .position(|c| *c == "x_1")
        .ok_or_else(|| bad(1, "missing x_1 column"))?;
    if cols.len() < x_start + dim || cols[x_start + dim - 1] != format!("x_{dim}") {
        return Err(bad(1, &format!("expected columns x_1..x_{dim}")));
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let n: u64 = fields[0].parse().map_err(|_| bad(i + 1, "bad iteration index"))?;
        if n <= skip {
            continue;
        }
        let x = fields
            .get(x_start..x_start + dim)
            .ok_or_else(|| bad(i + 1, "short row"))?
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(i + 1, "bad number")))
            .collect::<Result<Vec<f64>, _>>()?;
        samples.push(x);
    }
    Ok(samples)
}

pub fn diag_hpd(target: &TargetModel, samples: &[Vec<f64>], threshold: f64) -> Result<HpdReport, CliError> {
    Ok(HpdReport {
        samples: samples.len(),
        threshold,
        outside_fraction: hpd_outside_fraction(samples, target, threshold)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-3, 1e3, 10);
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[9] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(
            &path,
            "n,accepted,alpha,x_1,x_2,sdiag_1,sdiag_2\n10,1,0.5,1,2,1,1\n20,0,0.1,3,4,1,1\n",
        )
        .unwrap();
        assert_eq!(
            read_chain_csv(&path, 2, 0).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        assert_eq!(read_chain_csv(&path, 2, 10).unwrap(), vec![vec![3.0, 4.0]]);
        assert!(read_chain_csv(&path, 3, 0).is_err());
    }

    #[test]
    fn b_at_shape_is_one() {
        let t = ramcmc::targets::student2d_paper();
        let l = t.metadata().unwrap().factor().scaled(2.0).unwrap();
        assert!((diag_b(&t, &l).unwrap().b - 1.0).abs() < 1e-12);
    }
}
