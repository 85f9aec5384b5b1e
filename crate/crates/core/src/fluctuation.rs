//! Monte Carlo ensembles for the Gaussian fluctuation law: the limit
//! random variable Ŵ is proxied by the same-path terminal martingale
//! value M_N, so the statistic (Ŝ_n − n·mean − a_n·M_N)/√n has an exact
//! per-coordinate variance σ²·(a_n²/n)(m̃_N − m̃_n) and tests carry no
//! finite-horizon bias.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{simulate_reinforced_path, WalkPath};
use crate::error::{Error, Result};
use crate::numerics;
use crate::step_model::{derive_stream, StepDistribution};

/// Environment variable capping total simulated steps (paths × horizon).
pub const BUDGET_ENV: &str = "REINFORCE_WALK_BUDGET";

/// Configuration of a fluctuation ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub distribution: StepDistribution,
    pub p: f64,
    pub checkpoints: Vec<usize>,
    pub horizon: usize,
    pub paths: usize,
    pub master_seed: u64,
    /// Unit vectors for scalar projections (may be empty for d = 1).
    pub projection_directions: Vec<Vec<f64>>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.5 && self.p < 1.0) {
            return Err(Error::domain(format!(
                "ensemble requires p in (1/2, 1), got {}",
                self.p
            )));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::domain("ensemble needs at least one checkpoint"));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("checkpoints must be strictly increasing"));
        }
        if self.checkpoints[0] < 16 {
            return Err(Error::domain("all checkpoints must be >= 16"));
        }
        let last = *self.checkpoints.last().unwrap();
        if self.horizon < 64 * last {
            return Err(Error::domain(format!(
                "horizon {} must be >= 64 x last checkpoint {last}",
                self.horizon
            )));
        }
        if self.paths == 0 {
            return Err(Error::domain("ensemble needs at least one path"));
        }
        let dim = self.distribution.dim();
        for a in &self.projection_directions {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            check_unit(a)?;
        }
        Ok(())
    }
}

fn check_unit(a: &[f64]) -> Result<()> {
    let norm2: f64 = a.iter().map(|x| x * x).sum();
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "projection direction must be a unit vector, |a| = {}",
            norm2.sqrt()
        )));
    }
    Ok(())
}

/// A generated ensemble of fluctuation statistics.
#[derive(Clone, Debug)]
pub struct FluctuationEnsemble {
    pub spec: EnsembleSpec,
    /// `f[path][checkpoint][coord]`.
    pub f: Vec<Vec<Vec<f64>>>,
    /// `w_estimates[path][coord]`: terminal martingale values.
    pub w_estimates: Vec<Vec<f64>>,
    /// Exact unit-variance factor per checkpoint.
    pub v_exact: Vec<f64>,
    /// 1/(2p−1).
    pub limit_variance: f64,
}

/// Per-checkpoint moment summary for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct CheckpointSummary {
    pub checkpoint: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub v_exact: f64,
    pub limit_variance: f64,
    pub paths: usize,
}

/// Finite-horizon estimate of Ŵ: M_N = (Ŝ_N − N·mean)/a_N.
pub fn estimate_w(path: &WalkPath, mean: &[f64]) -> Result<Vec<f64>> {
    if mean.len() != path.dim {
        return Err(Error::DimensionMismatch {
            expected: path.dim,
            got: mean.len(),
        });
    }
    Ok(path
        .terminal_sum
        .iter()
        .zip(mean)
        .map(|(&s, &m)| (s - path.horizon as f64 * m) / path.a_terminal)
        .collect())
}

/// Estimate of the power-scaling limit L = Ŵ/Γ(p+1).
pub fn estimate_l(path: &WalkPath, mean: &[f64], p: f64) -> Result<Vec<f64>> {
    let g = numerics::gamma(1.0 + p)?;
    Ok(estimate_w(path, mean)?.into_iter().map(|w| w / g).collect())
}

/// The statistic (Ŝ_n − n·mean − a_n·W_proxy)/√n at a recorded checkpoint.
pub fn fluctuation_statistic(
    path: &WalkPath,
    n: usize,
    w_proxy: &[f64],
    mean: &[f64],
) -> Result<Vec<f64>> {
    let idx = path
        .checkpoints
        .iter()
        .position(|&c| c == n)
        .ok_or_else(|| Error::domain(format!("n = {n} is not a recorded checkpoint")))?;
    if w_proxy.len() != path.dim || mean.len() != path.dim {
        return Err(Error::DimensionMismatch {
            expected: path.dim,
            got: w_proxy.len().max(mean.len()),
        });
    }
    let a_n = path.a_at_checkpoints[idx];
    let sqrt_n = (n as f64).sqrt();
    Ok((0..path.dim)
        .map(|c| (path.sums[idx][c] - n as f64 * mean[c] - a_n * w_proxy[c]) / sqrt_n)
        .collect())
}

fn effective_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(u128::MAX)
}

/// Generates the ensemble. Path i uses the stream derived from
/// (master_seed, i); aggregation preserves path order, so the result is
/// identical for any worker count.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<FluctuationEnsemble> {
    run_ensemble_with_budget(spec, effective_budget())
}

pub fn run_ensemble_with_budget(spec: &EnsembleSpec, budget: u128) -> Result<FluctuationEnsemble> {
    spec.validate()?;
    let requested = spec.paths as u128 * spec.horizon as u128;
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let mean = spec.distribution.mean().to_vec();
    // (fluctuation statistics per checkpoint, terminal martingale) per path
    type PathRow = (Vec<Vec<f64>>, Vec<f64>);
    let rows: Result<Vec<PathRow>> = (0..spec.paths)
        .into_par_iter()
        .map(|id| {
            let mut stream = derive_stream(spec.master_seed, id as u64);
            let path = simulate_reinforced_path(
                &spec.distribution,
                spec.p,
                spec.horizon,
                &spec.checkpoints,
                &mut stream,
            )?;
            let w = estimate_w(&path, &mean)?;
            let f_row: Result<Vec<Vec<f64>>> = spec
                .checkpoints
                .iter()
                .map(|&n| fluctuation_statistic(&path, n, &w, &mean))
                .collect();
            Ok((f_row?, w))
        })
        .collect();
    let rows = rows?;
    let v_exact: Result<Vec<f64>> = spec
        .checkpoints
        .iter()
        .map(|&n| numerics::v_exact(spec.p, n, spec.horizon))
        .collect();
    let (f, w_estimates) = rows.into_iter().unzip();
    Ok(FluctuationEnsemble {
        spec: spec.clone(),
        f,
        w_estimates,
        v_exact: v_exact?,
        limit_variance: numerics::limit_fluctuation_variance(spec.p)?,
    })
}

impl FluctuationEnsemble {
    /// Samples of one coordinate at one checkpoint.
    pub fn coordinate_samples(&self, checkpoint_idx: usize, coord: usize) -> Vec<f64> {
        self.f.iter().map(|row| row[checkpoint_idx][coord]).collect()
    }

    pub fn summaries(&self) -> Vec<CheckpointSummary> {
        let dim = self.spec.distribution.dim();
        let r = self.f.len() as f64;
        self.spec
            .checkpoints
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mut mean = vec![0.0; dim];
                let mut m2 = vec![0.0; dim];
                for row in &self.f {
                    for c in 0..dim {
                        mean[c] += row[k][c];
                        m2[c] += row[k][c] * row[k][c];
                    }
                }
                for c in 0..dim {
                    mean[c] /= r;
                    m2[c] = m2[c] / r - mean[c] * mean[c];
                }
                CheckpointSummary {
                    checkpoint: n,
                    dim,
                    mean,
                    variance: m2,
                    v_exact: self.v_exact[k],
                    limit_variance: self.limit_variance,
                    paths: self.f.len(),
                }
            })
            .collect()
    }

    /// CSV rows `path_id,checkpoint_n,coord,F_value,W_est`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path_id,checkpoint_n,coord,F_value,W_est\n");
        for (id, (row, w)) in self.f.iter().zip(&self.w_estimates).enumerate() {
            for (k, &n) in self.spec.checkpoints.iter().enumerate() {
                for c in 0..row[k].len() {
                    out.push_str(&format!(
                        "{id},{n},{c},{:.16e},{:.16e}\n",
                        row[k][c], w[c]
                    ));
                }
            }
        }
        out
    }
}

/// Scalar projection of the ensemble along a unit direction.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `samples[checkpoint][path]` = ⟨a, F⟩.
    pub samples: Vec<Vec<f64>>,
    /// aᵀΣa·v_exact per checkpoint.
    pub target_variances: Vec<f64>,
}

pub fn cramer_wold_project(ens: &FluctuationEnsemble, a: &[f64]) -> Result<Projection> {
    let dim = ens.spec.distribution.dim();
    if a.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.len(),
        });
    }
    check_unit(a)?;
    let mut sigma_a = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            sigma_a += a[i] * a[j] * ens.spec.distribution.covariance_entry(i, j);
        }
    }
    let samples = (0..ens.spec.checkpoints.len())
        .map(|k| {
            ens.f
                .iter()
                .map(|row| row[k].iter().zip(a).map(|(f, ai)| f * ai).sum())
                .collect()
        })
        .collect();
    let target_variances = ens.v_exact.iter().map(|v| sigma_a * v).collect();
    Ok(Projection {
        samples,
        target_variances,
    })
}

/// Exact E((Ŝ_n/n)²)/σ² = a_n²·m̃_n/n²; decreases to 0 for p < 1.
pub fn lln_diagnostic(p: f64, n: usize) -> Result<f64> {
    let a = numerics::a_seq(p, n)?;
    let m = numerics::exact_second_moment(p, n)?;
    Ok(a * a * m / (n as f64 * n as f64))
}

/// Result of the truncation-residual variance check.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualCheck {
    pub bound: f64,
    pub zeta_squared: f64,
    pub sample_variance: f64,
    pub target_variance: f64,
    pub standard_error: f64,
    pub pass: bool,
}

/// Simulates the residual walk (step law X − X^(b)) and compares the
/// sample variance of its fluctuation statistic to ζ_b²·v_exact(p, n, N).
pub fn residual_fluctuation_check(
    base: &StepDistribution,
    p: f64,
    b: f64,
    n: usize,
    horizon: usize,
    paths: usize,
    master_seed: u64,
) -> Result<ResidualCheck> {
    let (_, _, zeta) = crate::step_model::truncate_distribution(base, b)?;
    let zeta_squared = zeta * zeta;
    let target = zeta_squared * numerics::v_exact(p, n, horizon)?;
    if zeta_squared == 0.0 {
        // truncation removes nothing; the residual walk is identically 0
        return Ok(ResidualCheck {
            bound: b,
            zeta_squared,
            sample_variance: 0.0,
            target_variance: 0.0,
            standard_error: 0.0,
            pass: true,
        });
    }
    let residual = crate::step_model::residual_distribution(base, b)?;
    let spec = EnsembleSpec {
        distribution: residual,
        p,
        checkpoints: vec![n],
        horizon,
        paths,
        master_seed,
        projection_directions: Vec::new(),
    };
    let ens = run_ensemble(&spec)?;
    let sample_variance = ens.summaries()[0].variance[0];
    // SE of the sample variance from the empirical fourth moment; the
    // residual step law is heavy-tailed, so the Gaussian 2σ⁴/R formula
    // would be far too optimistic
    let m4 = ens
        .f
        .iter()
        .map(|row| row[0][0].powi(4))
        .sum::<f64>()
        / paths as f64;
    let standard_error = ((m4 - sample_variance * sample_variance).max(0.0) / paths as f64).sqrt();
    Ok(ResidualCheck {
        bound: b,
        zeta_squared,
        sample_variance,
        target_variance: target,
        standard_error,
        pass: (sample_variance - target).abs() <= 4.0 * standard_error,
    })
}
