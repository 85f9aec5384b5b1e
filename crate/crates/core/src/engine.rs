//! The core reinforcement algorithm: at each time i ≥ 2 a Bernoulli(p)
//! coin decides whether the walk repeats a uniformly chosen past step
//! (the entire vector step — one coin and one index per time, shared
//! across coordinates) or takes a fresh i.i.d. step.
//!
//! Also here: independent reference implementations of the elephant
//! random walk and its d-dimensional version, and an exact enumeration
//! oracle over all reinforcement histories for small n.
//!
//! All increments are stored per path (8·dim·N bytes), so uniform recall
//! over past indices is exact and O(1).

use crate::error::{Error, Result};
use crate::numerics;
use crate::step_model::{RandomStream, StepDistribution};

/// History cap for the enumeration oracle; the tree has roughly (n+1)!/2
/// leaves for a two-point step law.
pub const ENUMERATION_CAP: usize = 10;

/// One simulated reinforced trajectory, recorded at checkpoints.
#[derive(Clone, Debug)]
pub struct WalkPath {
    pub dim: usize,
    pub horizon: usize,
    /// Reinforcement parameter of the equivalent step-reinforced walk
    /// (for the ERW/MERW this is the Kürsten-mapped p).
    pub p: f64,
    pub checkpoints: Vec<usize>,
    /// Ŝ_n at each checkpoint, dim values per checkpoint.
    pub sums: Vec<Vec<f64>>,
    /// Per-coordinate sums of squared increments (the walk V̂_n).
    pub squared_sums: Vec<Vec<f64>>,
    /// a_n at each checkpoint (carried along the recurrence).
    pub a_at_checkpoints: Vec<f64>,
    pub terminal_sum: Vec<f64>,
    pub a_terminal: f64,
    /// M_N = (Ŝ_N − N·mean)/a_N.
    pub terminal_martingale: Vec<f64>,
    pub stream_id: u64,
}

fn validate_checkpoints(checkpoints: &[usize], horizon: usize) -> Result<()> {
    if horizon < 1 {
        return Err(Error::domain("horizon must be >= 1"));
    }
    if checkpoints.is_empty() {
        return Err(Error::domain("checkpoints must be non-empty"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("checkpoints must be strictly increasing"));
    }
    if checkpoints[0] < 1 || *checkpoints.last().unwrap() > horizon {
        return Err(Error::domain("checkpoints must lie in [1, horizon]"));
    }
    Ok(())
}

/// Shared accumulation of sums, squared sums and the a_n recurrence.
struct Accumulator {
    dim: usize,
    p: f64,
    checkpoints: Vec<usize>,
    next: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
    a: f64,
    sums: Vec<Vec<f64>>,
    squared_sums: Vec<Vec<f64>>,
    a_at_checkpoints: Vec<f64>,
}

impl Accumulator {
    fn new(dim: usize, p: f64, checkpoints: &[usize]) -> Self {
        Accumulator {
            dim,
            p,
            checkpoints: checkpoints.to_vec(),
            next: 0,
            sum: vec![0.0; dim],
            sq: vec![0.0; dim],
            a: 1.0,
            sums: Vec::with_capacity(checkpoints.len()),
            squared_sums: Vec::with_capacity(checkpoints.len()),
            a_at_checkpoints: Vec::with_capacity(checkpoints.len()),
        }
    }

    /// Record step i (1-indexed) whose increment is `inc`.
    fn record(&mut self, i: usize, inc: &[f64]) {
        if i > 1 {
            // a_i = a_{i-1}·(i-1+p)/(i-1)
            let k = (i - 1) as f64;
            self.a *= (k + self.p) / k;
        }
        for ((s, q), &x) in self.sum.iter_mut().zip(self.sq.iter_mut()).zip(inc) {
            *s += x;
            *q += x * x;
        }
        if self.next < self.checkpoints.len() && self.checkpoints[self.next] == i {
            self.sums.push(self.sum.clone());
            self.squared_sums.push(self.sq.clone());
            self.a_at_checkpoints.push(self.a);
            self.next += 1;
        }
    }

    fn finish(self, horizon: usize, mean: &[f64], stream_id: u64) -> WalkPath {
        let martingale: Vec<f64> = self
            .sum
            .iter()
            .zip(mean)
            .map(|(&s, &m)| (s - horizon as f64 * m) / self.a)
            .collect();
        WalkPath {
            dim: self.dim,
            horizon,
            p: self.p,
            checkpoints: self.checkpoints,
            sums: self.sums,
            squared_sums: self.squared_sums,
            a_at_checkpoints: self.a_at_checkpoints,
            terminal_sum: self.sum,
            a_terminal: self.a,
            terminal_martingale: martingale,
            stream_id,
        }
    }
}

/// Simulates one step-reinforced path.
///
/// Stream consumption order per time step i ≥ 2: one uniform for the
/// reinforcement coin, then either one uniform index draw (repeat) or one
/// fresh step draw. This ordering is part of the reproducibility contract.
pub fn simulate_reinforced_path(
    d: &StepDistribution,
    p: f64,
    horizon: usize,
    checkpoints: &[usize],
    stream: &mut RandomStream,
) -> Result<WalkPath> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    validate_checkpoints(checkpoints, horizon)?;
    let dim = d.dim();
    let mut increments = vec![0.0f64; horizon * dim];
    let mut acc = Accumulator::new(dim, p, checkpoints);
    let stream_id = stream.stream_id();
    let mut fresh = vec![0.0f64; dim];
    for i in 1..=horizon {
        let (head, tail) = increments.split_at_mut((i - 1) * dim);
        let slot = &mut tail[..dim];
        if i == 1 || stream.uniform() >= p {
            d.sample_into(stream, &mut fresh);
            slot.copy_from_slice(&fresh);
        } else {
            let j = stream.index(i - 1);
            slot.copy_from_slice(&head[j * dim..(j + 1) * dim]);
        }
        acc.record(i, slot);
    }
    Ok(acc.finish(horizon, d.mean(), stream_id))
}

/// Elephant random walk: repeats a uniformly remembered past step with
/// probability q, otherwise steps in the opposite direction.
pub fn simulate_erw(
    q: f64,
    horizon: usize,
    checkpoints: &[usize],
    stream: &mut RandomStream,
) -> Result<WalkPath> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("q must lie in [0, 1], got {q}")));
    }
    validate_checkpoints(checkpoints, horizon)?;
    let p_equiv = (2.0 * q - 1.0).clamp(0.0, 1.0);
    let mut increments = vec![0.0f64; horizon];
    let mut acc = Accumulator::new(1, p_equiv, checkpoints);
    let stream_id = stream.stream_id();
    for i in 1..=horizon {
        let step = if i == 1 {
            if stream.uniform() < 0.5 {
                -1.0
            } else {
                1.0
            }
        } else {
            let remembered = increments[stream.index(i - 1)];
            if stream.uniform() < q {
                remembered
            } else {
                -remembered
            }
        };
        increments[i - 1] = step;
        acc.record(i, &[step]);
    }
    Ok(acc.finish(horizon, &[0.0], stream_id))
}

/// Canonical ordering of the 2d unit steps: +e_1, −e_1, +e_2, −e_2, ...
fn unit_step(d: usize, index: usize, out: &mut [f64]) {
    out.fill(0.0);
    out[index / 2] = if index.is_multiple_of(2) { 1.0 } else { -1.0 };
    let _ = d;
}

fn unit_step_index(v: &[f64]) -> usize {
    let axis = v.iter().position(|&x| x != 0.0).expect("zero step");
    2 * axis + usize::from(v[axis] < 0.0)
}

/// Multidimensional ERW on Z^d: keeps the remembered unit step with
/// probability q, else moves to one of the other 2d−1 neighbours.
pub fn simulate_merw(
    q: f64,
    d: usize,
    horizon: usize,
    checkpoints: &[usize],
    stream: &mut RandomStream,
) -> Result<WalkPath> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("q must lie in [0, 1], got {q}")));
    }
    if d < 1 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    validate_checkpoints(checkpoints, horizon)?;
    let twod = 2 * d;
    let p_equiv = ((twod as f64 * q - 1.0) / (twod as f64 - 1.0)).clamp(0.0, 1.0);
    let mut increments = vec![0.0f64; horizon * d];
    let mut acc = Accumulator::new(d, p_equiv, checkpoints);
    let stream_id = stream.stream_id();
    let mut step = vec![0.0f64; d];
    for i in 1..=horizon {
        if i == 1 {
            unit_step(d, stream.index(twod), &mut step);
        } else {
            let j = stream.index(i - 1);
            let remembered = &increments[j * d..(j + 1) * d];
            if stream.uniform() < q {
                step.copy_from_slice(remembered);
            } else {
                let c = unit_step_index(remembered);
                let mut r = stream.index(twod - 1);
                if r >= c {
                    r += 1;
                }
                unit_step(d, r, &mut step);
            }
        }
        increments[(i - 1) * d..i * d].copy_from_slice(&step);
        acc.record(i, &step);
    }
    Ok(acc.finish(horizon, &vec![0.0; d], stream_id))
}

/// Kürsten map: reinforced Rademacher(p) is a version of the ERW with
/// memory parameter q = (p+1)/2.
pub fn erw_param_map(p: f64) -> f64 {
    (p + 1.0) / 2.0
}

/// d-dimensional analogue: conditioned on the recalled step, the
/// reinforced isotropic walk repeats it with probability p + (1−p)/(2d).
pub fn merw_param_map(p: f64, d: usize) -> f64 {
    p + (1.0 - p) / (2 * d) as f64
}

/// Exact pmf of Ŝ_n, keyed by the (quantized) sum vector.
#[derive(Clone, Debug)]
pub struct ExactPmf {
    pub dim: usize,
    /// (sum vector, probability), sorted by quantized key.
    pub entries: Vec<(Vec<f64>, f64)>,
}

const QUANT: f64 = 1e9;

fn quantize(v: &[f64]) -> Vec<i64> {
    v.iter().map(|&x| (x * QUANT).round() as i64).collect()
}

impl ExactPmf {
    fn from_map(dim: usize, map: std::collections::BTreeMap<Vec<i64>, (Vec<f64>, f64)>) -> Self {
        ExactPmf {
            dim,
            entries: map.into_values().collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (v, p) in &self.entries {
            for (mc, &x) in m.iter_mut().zip(v) {
                *mc += x * p;
            }
        }
        m
    }

    /// Per-coordinate raw second moment E(S_c²).
    pub fn second_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (v, p) in &self.entries {
            for (mc, &x) in m.iter_mut().zip(v) {
                *mc += x * x * p;
            }
        }
        m
    }

    /// Per-coordinate variance.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        self.second_moment()
            .iter()
            .zip(&mean)
            .map(|(&m2, &m)| m2 - m * m)
            .collect()
    }

    /// Probability of an exact sum value (within quantization).
    pub fn prob_of(&self, value: &[f64]) -> f64 {
        let key = quantize(value);
        self.entries
            .iter()
            .find(|(v, _)| quantize(v) == key)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Largest absolute pmf difference over the union of supports.
    pub fn max_abs_diff(&self, other: &ExactPmf) -> f64 {
        let mut keys: Vec<Vec<i64>> = self
            .entries
            .iter()
            .chain(&other.entries)
            .map(|(v, _)| quantize(v))
            .collect();
        keys.sort();
        keys.dedup();
        let lookup = |pmf: &ExactPmf, key: &[i64]| {
            pmf.entries
                .iter()
                .find(|(v, _)| quantize(v) == key)
                .map_or(0.0, |(_, p)| *p)
        };
        keys.iter()
            .map(|k| (lookup(self, k) - lookup(other, k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Walks every reinforcement history of length n, calling `visit` with the
/// realized step sequence and its probability. Probabilities over all
/// leaves sum to one.
pub fn enumerate_reinforced_leaves(
    d: &StepDistribution,
    p: f64,
    n: usize,
    mut visit: impl FnMut(&[Vec<f64>], f64),
) -> Result<()> {
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge { n, cap: ENUMERATION_CAP });
    }
    if n < 1 {
        return Err(Error::domain("enumeration requires n >= 1"));
    }
    let support = d.support().ok_or(Error::UnboundedSupport)?;
    let mut steps: Vec<Vec<f64>> = Vec::with_capacity(n);
    fn rec(
        support: &[(Vec<f64>, f64)],
        p: f64,
        n: usize,
        steps: &mut Vec<Vec<f64>>,
        prob: f64,
        visit: &mut impl FnMut(&[Vec<f64>], f64),
    ) {
        let i = steps.len() + 1;
        if i > n {
            visit(steps, prob);
            return;
        }
        let fresh_weight = if i == 1 { 1.0 } else { 1.0 - p };
        if fresh_weight > 0.0 {
            for (v, w) in support {
                steps.push(v.clone());
                rec(support, p, n, steps, prob * fresh_weight * w, visit);
                steps.pop();
            }
        }
        if i > 1 && p > 0.0 {
            let copy_weight = p / (i - 1) as f64;
            for j in 0..i - 1 {
                let v = steps[j].clone();
                steps.push(v);
                rec(support, p, n, steps, prob * copy_weight, visit);
                steps.pop();
            }
        }
    }
    rec(&support, p, n, &mut steps, 1.0, &mut visit);
    Ok(())
}

/// Exact distribution of Ŝ_n by brute force over all reinforcement
/// histories and step realizations.
pub fn enumerate_exact_pmf(d: &StepDistribution, p: f64, n: usize) -> Result<ExactPmf> {
    let dim = d.dim();
    let mut map = std::collections::BTreeMap::new();
    enumerate_reinforced_leaves(d, p, n, |steps, prob| {
        let mut sum = vec![0.0; dim];
        for s in steps {
            for (acc, &x) in sum.iter_mut().zip(s) {
                *acc += x;
            }
        }
        let key = quantize(&sum);
        map.entry(key).or_insert((sum, 0.0)).1 += prob;
    })?;
    Ok(ExactPmf::from_map(dim, map))
}

/// Exact marginal law of the single step X̂_n.
pub fn enumerate_last_step_marginal(d: &StepDistribution, p: f64, n: usize) -> Result<ExactPmf> {
    let dim = d.dim();
    let mut map = std::collections::BTreeMap::new();
    enumerate_reinforced_leaves(d, p, n, |steps, prob| {
        let last = steps.last().unwrap().clone();
        let key = quantize(&last);
        map.entry(key).or_insert((last, 0.0)).1 += prob;
    })?;
    Ok(ExactPmf::from_map(dim, map))
}

/// Exact pmf of the memory walk (ERW for d = 1): first step uniform over
/// the 2d unit steps; each later time recalls a uniform past step, keeps
/// it with probability q, else takes each other direction with probability
/// (1−q)/(2d−1).
pub fn enumerate_memory_walk_pmf(q: f64, d: usize, n: usize) -> Result<ExactPmf> {
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge { n, cap: ENUMERATION_CAP });
    }
    if n < 1 || d < 1 {
        return Err(Error::domain("memory walk enumeration requires n >= 1, d >= 1"));
    }
    let twod = 2 * d;
    let directions: Vec<Vec<f64>> = (0..twod)
        .map(|r| {
            let mut v = vec![0.0; d];
            unit_step(d, r, &mut v);
            v
        })
        .collect();
    let mut map = std::collections::BTreeMap::new();
    // steps stored as direction indices
    fn rec(
        q: f64,
        directions: &[Vec<f64>],
        n: usize,
        steps: &mut Vec<usize>,
        prob: f64,
        map: &mut std::collections::BTreeMap<Vec<i64>, (Vec<f64>, f64)>,
    ) {
        let twod = directions.len();
        let i = steps.len() + 1;
        if i > n {
            let d = directions[0].len();
            let mut sum = vec![0.0; d];
            for &s in steps.iter() {
                for (acc, &x) in sum.iter_mut().zip(&directions[s]) {
                    *acc += x;
                }
            }
            let key = quantize(&sum);
            map.entry(key).or_insert((sum, 0.0)).1 += prob;
            return;
        }
        if i == 1 {
            for r in 0..twod {
                steps.push(r);
                rec(q, directions, n, steps, prob / twod as f64, map);
                steps.pop();
            }
            return;
        }
        let recall_weight = 1.0 / (i - 1) as f64;
        for j in 0..i - 1 {
            let remembered = steps[j];
            for r in 0..twod {
                let w = if r == remembered {
                    q
                } else {
                    (1.0 - q) / (twod - 1) as f64
                };
                if w > 0.0 {
                    steps.push(r);
                    rec(q, directions, n, steps, prob * recall_weight * w, map);
                    steps.pop();
                }
            }
        }
    }
    rec(q, &directions, n, &mut Vec::new(), 1.0, &mut map);
    Ok(ExactPmf::from_map(d, map))
}

/// ERW pmf; the d = 1 case of the memory walk.
pub fn enumerate_erw_pmf(q: f64, n: usize) -> Result<ExactPmf> {
    enumerate_memory_walk_pmf(q, 1, n)
}

/// Serializes a walk path as CSV: `n,a_n,S_1..S_d,V_1..V_d,M_terminal_flag`,
/// one row per checkpoint, 17 significant digits.
pub fn walk_path_to_csv(path: &WalkPath) -> String {
    let mut out = String::new();
    out.push_str("n,a_n");
    for c in 1..=path.dim {
        out.push_str(&format!(",S_{c}"));
    }
    for c in 1..=path.dim {
        out.push_str(&format!(",V_{c}"));
    }
    out.push_str(",M_terminal_flag\n");
    for (idx, &n) in path.checkpoints.iter().enumerate() {
        out.push_str(&n.to_string());
        out.push_str(&format!(",{:.16e}", path.a_at_checkpoints[idx]));
        for c in 0..path.dim {
            out.push_str(&format!(",{:.16e}", path.sums[idx][c]));
        }
        for c in 0..path.dim {
            out.push_str(&format!(",{:.16e}", path.squared_sums[idx][c]));
        }
        let is_terminal = n == path.horizon;
        out.push_str(if is_terminal { ",1\n" } else { ",0\n" });
    }
    out
}

/// Checks E(Ŝ_n) = n·mean and reconciles the enumeration variance with
/// the exact recursion a_n²·m̃_n·σ² (unit check used by the CLI).
pub fn pmf_variance_cross_check(
    d: &StepDistribution,
    p: f64,
    n: usize,
    pmf: &ExactPmf,
) -> Result<f64> {
    let a_n = numerics::a_seq(p, n)?;
    let m_n = numerics::exact_second_moment(p, n)?;
    let mut max_err = 0.0f64;
    let mean = pmf.mean();
    for (c, &m) in mean.iter().enumerate() {
        max_err = max_err.max((m - n as f64 * d.mean()[c]).abs());
    }
    let var = pmf.variance();
    for (c, &v) in var.iter().enumerate() {
        let target = a_n * a_n * m_n * d.covariance_entry(c, c);
        max_err = max_err.max((v - target).abs());
    }
    Ok(max_err)
}
