//! Typical-step distributions with exact analytic moments, the truncation
//! operator, and the deterministic seeded stream contract used by every
//! simulation.
//!
//! Streams are counter-based (ChaCha with a 64-bit stream id), so path i's
//! stream is reachable in O(1) without jumping — this is what makes
//! deterministic parallel ensembles possible.

use crate::error::{Error, Result};
use crate::stats::normal_cdf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A deterministic substream of variates, a pure function of
/// `(master_seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the substream for `stream_id` under `master_seed`.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RandomStream {
    let mut state = master_seed;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream_id);
    RandomStream { master_seed, stream_id, rng }
}

impl RandomStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One uniform variate on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform index in {0, .., bound − 1}.
    pub fn index(&mut self, bound: usize) -> usize {
        self.rng.gen_range(0..bound)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// The supported typical-step laws.
#[derive(Clone, Debug)]
pub enum StepKind {
    Rademacher,
    Gaussian { mean: f64, sd: f64 },
    /// Uniform on the 2d unit steps ±e_1, .., ±e_d.
    LatticeIsotropic { d: usize },
    /// (1_{U≤x_1} − x_1, .., 1_{U≤x_k} − x_k) for one uniform U.
    IndicatorGrid { points: Vec<f64> },
    Discrete { values: Vec<f64>, probabilities: Vec<f64> },
    /// X·1_{|X|≤b} − E(X·1_{|X|≤b}) for a one-dimensional base law.
    Truncated { base: Box<StepDistribution>, bound: f64, shift: f64 },
    /// X − X^(b), i.e. X·1_{|X|>b} − E(X·1_{|X|>b}).
    Residual { base: Box<StepDistribution>, bound: f64, shift: f64 },
}

/// A typical-step law μ with exact mean vector and covariance matrix.
#[derive(Clone, Debug)]
pub struct StepDistribution {
    kind: StepKind,
    dim: usize,
    mean: Vec<f64>,
    /// Row-major dim × dim, symmetric PSD.
    covariance: Vec<f64>,
    /// Sup-norm bound on the step when finite.
    bound: Option<f64>,
}

impl StepDistribution {
    pub fn rademacher() -> Self {
        StepDistribution {
            kind: StepKind::Rademacher,
            dim: 1,
            mean: vec![0.0],
            covariance: vec![1.0],
            bound: Some(1.0),
        }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if sd.is_nan() || sd < 0.0 || !mean.is_finite() || !sd.is_finite() {
            return Err(Error::domain(format!("bad gaussian parameters ({mean}, {sd})")));
        }
        Ok(StepDistribution {
            kind: StepKind::Gaussian { mean, sd },
            dim: 1,
            mean: vec![mean],
            covariance: vec![sd * sd],
            bound: None,
        })
    }

    pub fn lattice_isotropic(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::domain("lattice dimension must be >= 1"));
        }
        let mut covariance = vec![0.0; d * d];
        for i in 0..d {
            covariance[i * d + i] = 1.0 / d as f64;
        }
        Ok(StepDistribution {
            kind: StepKind::LatticeIsotropic { d },
            dim: d,
            mean: vec![0.0; d],
            covariance,
            bound: Some(1.0),
        })
    }

    pub fn indicator_grid(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("indicator grid must be non-empty"));
        }
        for w in points.windows(2) {
            if w[0].is_nan() || w[1].is_nan() || w[0] >= w[1] {
                return Err(Error::domain("indicator grid must be strictly increasing"));
            }
        }
        if !(points[0] > 0.0 && *points.last().unwrap() < 1.0) {
            return Err(Error::domain("indicator grid values must lie strictly inside (0, 1)"));
        }
        let k = points.len();
        let mut covariance = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                covariance[i * k + j] = points[lo] * (1.0 - points[hi]);
            }
        }
        Ok(StepDistribution {
            kind: StepKind::IndicatorGrid { points: points.to_vec() },
            dim: k,
            mean: vec![0.0; k],
            covariance,
            bound: Some(1.0),
        })
    }

    pub fn discrete(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probabilities.len() {
            return Err(Error::domain("discrete law needs matching non-empty values/probabilities"));
        }
        if probabilities.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::domain("discrete probabilities must be non-negative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "discrete probabilities sum to {total}, expected 1 within 1e-12"
            )));
        }
        let mean: f64 = values.iter().zip(&probabilities).map(|(v, p)| v * p).sum();
        let var: f64 = values
            .iter()
            .zip(&probabilities)
            .map(|(v, p)| (v - mean) * (v - mean) * p)
            .sum();
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(StepDistribution {
            kind: StepKind::Discrete { values, probabilities },
            dim: 1,
            mean: vec![mean],
            covariance: vec![var],
            bound: Some(bound),
        })
    }

    pub fn kind(&self) -> &StepKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major dim × dim covariance matrix.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn covariance_entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim + j]
    }

    /// Total variance Σ trace for d = 1 laws this is just the variance.
    pub fn variance_scalar(&self) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.covariance[0]
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(|&m| m == 0.0)
    }

    /// Draws one step into `out` (length dim), advancing the stream.
    pub fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.kind {
            StepKind::Rademacher => {
                out[0] = if stream.uniform() < 0.5 { -1.0 } else { 1.0 };
            }
            StepKind::Gaussian { mean, sd } => {
                out[0] = mean + sd * stream.standard_normal();
            }
            StepKind::LatticeIsotropic { d } => {
                out.fill(0.0);
                let r = stream.index(2 * d);
                out[r / 2] = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
            }
            StepKind::IndicatorGrid { points } => {
                let u = stream.uniform();
                for (o, &x) in out.iter_mut().zip(points) {
                    *o = f64::from(u < x) - x;
                }
            }
            StepKind::Discrete { values, probabilities } => {
                let u = stream.uniform();
                let mut acc = 0.0;
                let mut chosen = values[values.len() - 1];
                for (&v, &p) in values.iter().zip(probabilities) {
                    acc += p;
                    if u < acc {
                        chosen = v;
                        break;
                    }
                }
                out[0] = chosen;
            }
            StepKind::Truncated { base, bound, shift } => {
                let mut x = [0.0];
                base.sample_into(stream, &mut x);
                out[0] = if x[0].abs() <= *bound { x[0] - shift } else { -shift };
            }
            StepKind::Residual { base, bound, shift } => {
                let mut x = [0.0];
                base.sample_into(stream, &mut x);
                out[0] = if x[0].abs() > *bound { x[0] - shift } else { -shift };
            }
        }
    }

    /// One variate with law μ.
    pub fn sample_step(&self, stream: &mut RandomStream) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(stream, &mut out);
        out
    }

    /// Finite support as (value, probability) pairs, or None for laws with
    /// infinite support. Used by the exact enumeration oracle.
    pub fn support(&self) -> Option<Vec<(Vec<f64>, f64)>> {
        match &self.kind {
            StepKind::Rademacher => {
                Some(vec![(vec![-1.0], 0.5), (vec![1.0], 0.5)])
            }
            StepKind::Gaussian { .. } => None,
            StepKind::LatticeIsotropic { d } => {
                let p = 1.0 / (2 * d) as f64;
                let mut support = Vec::with_capacity(2 * d);
                for axis in 0..*d {
                    for sign in [1.0, -1.0] {
                        let mut v = vec![0.0; *d];
                        v[axis] = sign;
                        support.push((v, p));
                    }
                }
                Some(support)
            }
            StepKind::IndicatorGrid { points } => {
                let k = points.len();
                let mut support = Vec::with_capacity(k + 1);
                for region in 0..=k {
                    let lo = if region == 0 { 0.0 } else { points[region - 1] };
                    let hi = if region == k { 1.0 } else { points[region] };
                    let value: Vec<f64> = (0..k)
                        .map(|j| f64::from(j >= region) - points[j])
                        .collect();
                    support.push((value, hi - lo));
                }
                Some(support)
            }
            StepKind::Discrete { values, probabilities } => Some(
                values
                    .iter()
                    .zip(probabilities)
                    .map(|(&v, &p)| (vec![v], p))
                    .collect(),
            ),
            StepKind::Truncated { base, bound, shift } => {
                let base_support = base.support()?;
                Some(merge_scalar_support(base_support.into_iter().map(|(v, p)| {
                    let x = v[0];
                    let y = if x.abs() <= *bound { x - shift } else { -shift };
                    (y, p)
                })))
            }
            StepKind::Residual { base, bound, shift } => {
                let base_support = base.support()?;
                Some(merge_scalar_support(base_support.into_iter().map(|(v, p)| {
                    let x = v[0];
                    let y = if x.abs() > *bound { x - shift } else { -shift };
                    (y, p)
                })))
            }
        }
    }
}

fn merge_scalar_support(items: impl Iterator<Item = (f64, f64)>) -> Vec<(Vec<f64>, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (v, p) in items {
        match merged.iter_mut().find(|(w, _)| (*w - v).abs() <= 1e-12) {
            Some(entry) => entry.1 += p,
            None => merged.push((v, p)),
        }
    }
    merged.into_iter().map(|(v, p)| (vec![v], p)).collect()
}

/// E(X·1_{|X|≤b}) and E(X²·1_{|X|≤b}) for a one-dimensional law.
/// Closed-form for gaussian, exact summation for finite support.
fn truncated_raw_moments(d: &StepDistribution, b: f64) -> Result<(f64, f64)> {
    match d.kind() {
        StepKind::Gaussian { mean, sd } => {
            if *sd == 0.0 {
                return Ok(if mean.abs() <= b { (*mean, mean * mean) } else { (0.0, 0.0) });
            }
            let alpha = (-b - mean) / sd;
            let beta = (b - mean) / sd;
            let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mass = normal_cdf(beta) - normal_cdf(alpha);
            let e_z = phi(alpha) - phi(beta);
            let e_z2 = mass + alpha * phi(alpha) - beta * phi(beta);
            let e1 = mean * mass + sd * e_z;
            let e2 = mean * mean * mass + 2.0 * mean * sd * e_z + sd * sd * e_z2;
            Ok((e1, e2))
        }
        _ => {
            let support = d.support().ok_or(Error::UnboundedSupport)?;
            let mut e1 = 0.0;
            let mut e2 = 0.0;
            for (v, p) in support {
                let x = v[0];
                if x.abs() <= b {
                    e1 += x * p;
                    e2 += x * x * p;
                }
            }
            Ok((e1, e2))
        }
    }
}

/// Builds the law of X^(b) = X·1_{|X|≤b} − E(X·1_{|X|≤b}) and returns it
/// together with sigma_b = std(X^(b)) and zeta_b = std(X − X^(b)).
pub fn truncate_distribution(d: &StepDistribution, b: f64) -> Result<(StepDistribution, f64, f64)> {
    if d.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: d.dim() });
    }
    if b.is_nan() || b <= 0.0 {
        return Err(Error::domain("truncation level b must be positive"));
    }
    let (e1, e2) = truncated_raw_moments(d, b)?;
    let sigma_b2 = (e2 - e1 * e1).max(0.0);
    let mean = d.mean()[0];
    let e_x2 = d.variance_scalar() + mean * mean;
    let shift_res = mean - e1;
    let zeta_b2 = ((e_x2 - e2) - shift_res * shift_res).max(0.0);
    let dist = StepDistribution {
        kind: StepKind::Truncated { base: Box::new(d.clone()), bound: b, shift: e1 },
        dim: 1,
        mean: vec![0.0],
        covariance: vec![sigma_b2],
        bound: Some(b + e1.abs()),
    };
    Ok((dist, sigma_b2.sqrt(), zeta_b2.sqrt()))
}

/// The law of X − X^(b), centered; its std equals the zeta_b reported by
/// `truncate_distribution`.
pub fn residual_distribution(d: &StepDistribution, b: f64) -> Result<StepDistribution> {
    if d.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: d.dim() });
    }
    if b.is_nan() || b <= 0.0 {
        return Err(Error::domain("truncation level b must be positive"));
    }
    let (e1, e2) = truncated_raw_moments(d, b)?;
    let mean = d.mean()[0];
    let e_x2 = d.variance_scalar() + mean * mean;
    let shift = mean - e1;
    let zeta_b2 = ((e_x2 - e2) - shift * shift).max(0.0);
    let bound = d.bound().map(|m| m + shift.abs());
    Ok(StepDistribution {
        kind: StepKind::Residual { base: Box::new(d.clone()), bound: b, shift },
        dim: 1,
        mean: vec![0.0],
        covariance: vec![zeta_b2],
        bound,
    })
}

/// Parses a textual distribution descriptor:
/// `rademacher`, `gaussian:MEAN,SD`, `lattice:D`, `indicator:x1,x2,...`,
/// `discrete:PATH` with PATH a two-column CSV `value,probability`.
pub fn make_distribution(descriptor: &str) -> Result<StepDistribution> {
    let descriptor = descriptor.trim();
    if descriptor == "rademacher" {
        return Ok(StepDistribution::rademacher());
    }
    let (head, rest) = descriptor
        .split_once(':')
        .ok_or_else(|| Error::Descriptor(format!("unknown descriptor `{descriptor}`")))?;
    match head {
        "gaussian" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Descriptor("gaussian needs MEAN,SD".into()));
            }
            let mean = parse_f64(parts[0])?;
            let sd = parse_f64(parts[1])?;
            StepDistribution::gaussian(mean, sd)
        }
        "lattice" => {
            let d: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::Descriptor(format!("bad lattice dimension `{rest}`")))?;
            StepDistribution::lattice_isotropic(d)
        }
        "indicator" => {
            let points = rest
                .split(',')
                .map(parse_f64)
                .collect::<Result<Vec<f64>>>()?;
            StepDistribution::indicator_grid(&points)
        }
        "discrete" => {
            let text = std::fs::read_to_string(rest.trim())
                .map_err(|e| Error::Descriptor(format!("cannot read `{rest}`: {e}")))?;
            let mut values = Vec::new();
            let mut probabilities = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                // tolerate a header row
                if i == 0 && line.chars().any(|c| c.is_alphabetic()) {
                    continue;
                }
                let (v, p) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Descriptor(format!("bad CSV line `{line}`")))?;
                values.push(parse_f64(v)?);
                probabilities.push(parse_f64(p)?);
            }
            StepDistribution::discrete(values, probabilities)
        }
        other => Err(Error::Descriptor(format!("unknown distribution kind `{other}`"))),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Descriptor(format!("bad number `{s}`")))
}
