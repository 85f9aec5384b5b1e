//! Reinforced uniform sequences and their empirical process
//! Ĝ_n(x) = n^{−1/2} Σ_i (1_{Û_i ≤ x} − x). The fluctuations of Ĝ_n
//! around the exchangeable-increment bridge are Gaussian with
//! covariance x_i(1−x_j)/(2p−1); the bridge value at a grid point is
//! identified with the terminal martingale of the indicator walk, so
//! the finite-dimensional tests reduce exactly to the fluctuation lab.

use crate::engine::{simulate_reinforced_path, WalkPath};
use crate::error::{Error, Result};
use crate::fluctuation::{run_ensemble, EnsembleSpec, FluctuationEnsemble};
use crate::step_model::{RandomStream, StepDistribution};

/// A strictly increasing evaluation grid in the open interval (0, 1).
#[derive(Clone, Debug)]
pub struct GridSpec {
    points: Vec<f64>,
}

impl GridSpec {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("grid must be non-empty"));
        }
        if points.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::domain("grid points must lie strictly inside (0, 1)"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("grid points must be strictly increasing"));
        }
        Ok(GridSpec { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A reinforced sequence of uniforms with its occurrence counts.
#[derive(Clone, Debug)]
pub struct ReinforcedUniformSample {
    pub p: f64,
    /// Û_1..Û_n in order.
    pub values: Vec<f64>,
    /// The distinct fresh draws U_1..U_m in order of first appearance.
    pub distinct_values: Vec<f64>,
    /// N_j(n) = #{i ≤ n : Û_i = U_j}; sums to n.
    pub counts: Vec<usize>,
    pub stream_id: u64,
}

/// Applies the reinforcement recursion to uniform(0,1) steps. Stream
/// consumption per step (coin, then index or fresh draw) is identical to
/// the walk engine's, so the same stream drives the indicator walk to the
/// same uniforms.
pub fn simulate_reinforced_uniforms(
    p: f64,
    n: usize,
    stream: &mut RandomStream,
) -> Result<ReinforcedUniformSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    if n < 1 {
        return Err(Error::domain("need n >= 1"));
    }
    let stream_id = stream.stream_id();
    let mut values = Vec::with_capacity(n);
    let mut ids: Vec<usize> = Vec::with_capacity(n);
    let mut distinct_values = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for i in 1..=n {
        let id = if i == 1 || stream.uniform() >= p {
            distinct_values.push(stream.uniform());
            counts.push(0);
            distinct_values.len() - 1
        } else {
            ids[stream.index(i - 1)]
        };
        values.push(distinct_values[id]);
        ids.push(id);
        counts[id] += 1;
    }
    Ok(ReinforcedUniformSample {
        p,
        values,
        distinct_values,
        counts,
        stream_id,
    })
}

/// Ĝ_n at one point, from occurrence counts. Uses the strict comparison
/// u < x, matching the indicator step law.
pub fn empirical_process_point(sample: &ReinforcedUniformSample, x: f64) -> f64 {
    let n = sample.values.len();
    let below: usize = sample
        .distinct_values
        .iter()
        .zip(&sample.counts)
        .filter(|(&u, _)| u < x)
        .map(|(_, &c)| c)
        .sum();
    (below as f64 - n as f64 * x) / (n as f64).sqrt()
}

/// Ĝ_n over a grid, O(m·k) in the distinct count m.
pub fn empirical_process_at(sample: &ReinforcedUniformSample, grid: &GridSpec) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|&x| empirical_process_point(sample, x))
        .collect()
}

/// √n · sup_x |Ĝ_n(x)|-style statistic: the exact supremum over all x of
/// |Ĝ_n|, computed from the sorted values (classical KS form).
pub fn empirical_process_sup(sample: &ReinforcedUniformSample) -> f64 {
    let mut sorted = sample.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d * n.sqrt()
}

/// The k-dimensional reinforced walk with steps (1_{Û_i<x_1}−x_1, …),
/// all coordinates driven by the same Û_i.
pub fn indicator_walk(
    grid: &GridSpec,
    p: f64,
    horizon: usize,
    checkpoints: &[usize],
    stream: &mut RandomStream,
) -> Result<WalkPath> {
    let d = StepDistribution::indicator_grid(grid.points())?;
    simulate_reinforced_path(&d, p, horizon, checkpoints, stream)
}

/// Limit covariance matrix, entries x_i(1−x_j)/(2p−1) for i ≤ j
/// (row-major, k×k, symmetric).
pub fn bridge_fdd_covariance(grid: &GridSpec, p: f64) -> Result<Vec<f64>> {
    let scale = crate::numerics::limit_fluctuation_variance(p)?;
    let k = grid.len();
    let pts = grid.points();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let lo = pts[i.min(j)];
            let hi = pts[i.max(j)];
            out[i * k + j] = lo * (1.0 - hi) * scale;
        }
    }
    Ok(out)
}

/// The bridge covariance with the exact finite-horizon factor
/// v_exact(p, n, N) in place of 1/(2p−1).
pub fn bridge_exact_covariance(
    grid: &GridSpec,
    p: f64,
    n: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    let v = crate::numerics::v_exact(p, n, horizon)?;
    let k = grid.len();
    let pts = grid.points();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let lo = pts[i.min(j)];
            let hi = pts[i.max(j)];
            out[i * k + j] = lo * (1.0 - hi) * v;
        }
    }
    Ok(out)
}

/// Ensemble of bridge fluctuation vectors: exactly the fluctuation
/// statistic of the indicator walk, with the terminal martingale as the
/// bridge proxy.
pub fn bridge_fluctuation_ensemble(
    grid: &GridSpec,
    p: f64,
    n: usize,
    horizon: usize,
    paths: usize,
    master_seed: u64,
) -> Result<FluctuationEnsemble> {
    let spec = EnsembleSpec {
        distribution: StepDistribution::indicator_grid(grid.points())?,
        p,
        checkpoints: vec![n],
        horizon,
        paths,
        master_seed,
        projection_directions: Vec::new(),
    };
    run_ensemble(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step_model::derive_stream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.5]).is_err());
        assert!(GridSpec::new(vec![0.5, 0.5]).is_err());
        assert!(GridSpec::new(vec![0.5, 0.25]).is_err());
        assert!(GridSpec::new(vec![0.25, 0.5, 0.75]).is_ok());
    }

    #[test]
    fn count_conservation_and_membership() {
        for &p in &[0.0, 0.3, 0.8, 1.0] {
            let mut stream = derive_stream(1, 7);
            let s = simulate_reinforced_uniforms(p, 500, &mut stream).unwrap();
            assert_eq!(s.counts.iter().sum::<usize>(), 500);
            assert_eq!(s.values.len(), 500);
            for v in &s.values {
                assert!(s.distinct_values.contains(v));
            }
            assert!(s.counts.iter().all(|&c| c > 0));
        }
    }

    #[test]
    fn full_memory_collapses_to_one_value() {
        let mut stream = derive_stream(2, 0);
        let s = simulate_reinforced_uniforms(1.0, 100, &mut stream).unwrap();
        assert_eq!(s.distinct_values.len(), 1);
        assert_eq!(s.counts, vec![100]);
        assert!(s.values.iter().all(|&v| v == s.distinct_values[0]));
    }

    #[test]
    fn expected_distinct_count() {
        // E(m) = 1 + (1−p)(n−1); Var(m) = (n−1)p(1−p)
        let p = 0.6;
        let n = 10_000;
        let paths = 200;
        let mut total = 0.0;
        for id in 0..paths {
            let mut stream = derive_stream(55, id);
            let s = simulate_reinforced_uniforms(p, n, &mut stream).unwrap();
            total += s.distinct_values.len() as f64;
        }
        let mean = total / paths as f64;
        let target = 1.0 + (1.0 - p) * (n - 1) as f64;
        let se = ((n - 1) as f64 * p * (1.0 - p) / paths as f64).sqrt();
        assert!(
            (mean - target).abs() <= 4.0 * se,
            "mean = {mean}, target = {target}, se = {se}"
        );
    }

    #[test]
    fn single_point_example() {
        let sample = ReinforcedUniformSample {
            p: 0.5,
            values: vec![0.3],
            distinct_values: vec![0.3],
            counts: vec![1],
            stream_id: 0,
        };
        assert_eq!(empirical_process_point(&sample, 0.5), 0.5);
        // pinning at the endpoints
        assert_eq!(empirical_process_point(&sample, 1.0), 0.0);
        let mut stream = derive_stream(3, 0);
        let s = simulate_reinforced_uniforms(0.7, 1000, &mut stream).unwrap();
        assert_eq!(empirical_process_point(&s, 1.0), 0.0);
        assert!(empirical_process_point(&s, 1e-12).abs() < 1e-6);
    }

    #[test]
    fn consistency_with_indicator_walk() {
        // same stream, dyadic grid: exact agreement (dyadic increments sum
        // without rounding)
        let grid = GridSpec::new(vec![0.25, 0.5, 0.75]).unwrap();
        for &(p, n) in &[(0.6, 64usize), (0.75, 257), (0.9, 1000)] {
            let mut s1 = derive_stream(10, 1);
            let sample = simulate_reinforced_uniforms(p, n, &mut s1).unwrap();
            let g = empirical_process_at(&sample, &grid);
            let mut s2 = derive_stream(10, 1);
            let path = indicator_walk(&grid, p, n, &[n], &mut s2).unwrap();
            for (c, &gc) in g.iter().enumerate() {
                assert_eq!(gc, path.sums[0][c] / (n as f64).sqrt(), "p={p}, n={n}, c={c}");
            }
        }
    }

    #[test]
    fn monotone_coupling() {
        let grid = GridSpec::new(vec![0.2, 0.5, 0.9]).unwrap();
        let mut stream = derive_stream(21, 4);
        let path = indicator_walk(&grid, 0.7, 512, &[64, 256, 512], &mut stream).unwrap();
        for (idx, &n) in path.checkpoints.iter().enumerate() {
            let pts = grid.points();
            for c in 0..pts.len() - 1 {
                let lhs = path.sums[idx][c] + n as f64 * pts[c];
                let rhs = path.sums[idx][c + 1] + n as f64 * pts[c + 1];
                assert!(lhs <= rhs + 1e-9);
            }
        }
    }

    #[test]
    fn one_step_covariance() {
        let d = StepDistribution::indicator_grid(&[0.25, 0.5]).unwrap();
        assert_abs_diff_eq!(d.covariance_entry(0, 0), 0.1875, epsilon = 1e-15);
        assert_abs_diff_eq!(d.covariance_entry(0, 1), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(d.covariance_entry(1, 1), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn indicator_second_moment_n2() {
        // E(Ŝ_2²) = 2(1+p)σ² = 0.8 at p = 0.6, grid {0.5}
        let d = StepDistribution::indicator_grid(&[0.5]).unwrap();
        let pmf = crate::engine::enumerate_exact_pmf(&d, 0.6, 2).unwrap();
        assert_abs_diff_eq!(pmf.second_moment()[0], 0.8, epsilon = 1e-13);
    }

    #[test]
    fn fdd_covariance_examples() {
        let g1 = GridSpec::new(vec![0.5]).unwrap();
        assert_eq!(bridge_fdd_covariance(&g1, 0.75).unwrap(), vec![0.5]);
        let g2 = GridSpec::new(vec![0.25, 0.5]).unwrap();
        let m = bridge_fdd_covariance(&g2, 0.75).unwrap();
        assert_eq!(m, vec![0.375, 0.25, 0.25, 0.5]);
        // divergence as p tends to 1/2
        let near = bridge_fdd_covariance(&g1, 0.5001).unwrap()[0];
        assert!(near > 1000.0);
        assert!(bridge_fdd_covariance(&g1, 0.5).is_err());
    }

    #[test]
    fn classical_covariance_at_p_zero() {
        // p = 0 indicator walk is the classical empirical process
        let grid = GridSpec::new(vec![0.25, 0.5, 0.75]).unwrap();
        let n = 256;
        let paths = 4000;
        let mut samples = Vec::with_capacity(paths);
        for id in 0..paths {
            let mut stream = derive_stream(77, id as u64);
            let path = indicator_walk(&grid, 0.0, n, &[n], &mut stream).unwrap();
            samples.push(path.sums[0].iter().map(|s| s / (n as f64).sqrt()).collect());
        }
        let mut target = bridge_fdd_covariance(&grid, 0.75).unwrap();
        for t in &mut target {
            *t *= 0.5; // undo the 1/(2p−1) factor: classical covariance
        }
        let rep = crate::stats::covariance_compare(&samples, &target, 3, "classical", Some(77))
            .unwrap();
        assert!(rep.pass, "max |z| = {}", rep.statistic);
    }

    #[test]
    fn donsker_sup_baseline() {
        // p = 0: median of sup|Ĝ_n| approximates the Kolmogorov median 0.8276
        let paths = 400;
        let mut sups: Vec<f64> = (0..paths)
            .map(|id| {
                let mut stream = derive_stream(404, id);
                let s = simulate_reinforced_uniforms(0.0, 10_000, &mut stream).unwrap();
                empirical_process_sup(&s)
            })
            .collect();
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (sups[199] + sups[200]) / 2.0;
        assert!(
            (median - 0.8276).abs() < 0.06,
            "median sup = {median}"
        );
    }

    #[test]
    fn bridge_ensemble_covariance() {
        let grid = GridSpec::new(vec![0.25, 0.5, 0.75]).unwrap();
        let p = 0.75;
        let n = 64;
        let horizon = 4096;
        let paths = 2000;
        let ens = bridge_fluctuation_ensemble(&grid, p, n, horizon, paths, 909).unwrap();
        let target = bridge_exact_covariance(&grid, p, n, horizon).unwrap();
        let samples: Vec<Vec<f64>> = ens.f.iter().map(|row| row[0].clone()).collect();
        let rep =
            crate::stats::covariance_compare(&samples, &target, 3, "bridge-cov", Some(909))
                .unwrap();
        assert!(rep.pass, "max |z| = {}", rep.statistic);
        // per-coordinate KS against N(0, v_exact·x(1−x))
        for (c, &x) in grid.points().iter().enumerate() {
            let sd = (ens.v_exact[0] * x * (1.0 - x)).sqrt();
            let mut sample: Vec<f64> =
                ens.f.iter().map(|row| row[0][c] / sd).collect();
            sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rep = crate::stats::ks_test(
                &sample,
                crate::stats::normal_cdf,
                format!("bridge-ks-{c}"),
                0.005,
                Some(909),
            )
            .unwrap();
            assert!(rep.pass, "coord {c}: p = {:?}", rep.p_value);
        }
    }
}
