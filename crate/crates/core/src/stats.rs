//! Self-contained statistical verification kit: normal distribution
//! functions, Kolmogorov–Smirnov machinery, and moment/covariance
//! comparison tests.
//!
//! The KS p-value uses the asymptotic null distribution
//! 2 Σ (−1)^{k−1} exp(−2k²λ²); all acceptance sample sizes are large
//! enough (≥ 2000) for that approximation.

// rational-approximation tables are kept at their full published precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use serde::Serialize;

/// Outcome of one statistical check, with everything needed to reproduce it.
#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub name: String,
    pub sample_size: usize,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
}

// Cody-style rational approximations for erf/erfc, full double precision.

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

const SQRT_PI_INV: f64 = 5.641_895_835_477_562_9e-1;

/// erfc(x) for x > 0.46875 via the two upper-range rational approximations.
fn erfc_upper(x: f64) -> f64 {
    let result = if x <= 4.0 {
        let mut num = ERF_C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + ERF_C[i]) * x;
            den = (den + ERF_D[i]) * x;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else if x < 26.6 {
        let ysq = 1.0 / (x * x);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let frac = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (SQRT_PI_INV - frac) / x
    } else {
        return 0.0;
    };
    // split exp(−x²) to recover accuracy lost in forming x²
    let ysq = (x * 16.0).trunc() / 16.0;
    let del = (x - ysq) * (x + ysq);
    (-ysq * ysq).exp() * (-del).exp() * result
}

/// The error function.
pub fn erf(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        let z = x * x;
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else {
        let tail = erfc_upper(ax);
        if x > 0.0 {
            1.0 - tail
        } else {
            tail - 1.0
        }
    }
}

/// The complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.abs() <= 0.46875 {
        1.0 - erf(x)
    } else if x > 0.0 {
        erfc_upper(x)
    } else {
        2.0 - erfc_upper(-x)
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density φ(z).
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ^{-1}(u): Acklam's rational initialization plus one Newton step
/// against `normal_cdf`.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("quantile requires u in (0, 1), got {u}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239e0,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838e0,
        -2.549_732_539_343_734e0,
        4.374_664_141_464_968e0,
        2.938_163_982_698_783e0,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996e0,
        3.754_408_661_907_416e0,
    ];
    const U_LOW: f64 = 0.02425;

    let x = if u < U_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - U_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let pdf = normal_pdf(x);
    if pdf > 0.0 {
        Ok(x - (normal_cdf(x) - u) / pdf)
    } else {
        Ok(x)
    }
}

/// Survival function of the Kolmogorov distribution:
/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²), clamped to [0, 1].
pub fn kolmogorov_sf(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain("kolmogorov_sf requires lambda >= 0"));
    }
    if lambda < 0.05 {
        // the cdf is below 1e-300 here
        return Ok(1.0);
    }
    if lambda < 1.0 {
        // dual theta series, rapidly convergent for small lambda
        let mut sum = 0.0;
        for k in 1..=200u32 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return Ok((1.0 - cdf).clamp(0.0, 1.0));
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    Ok((2.0 * sum).clamp(0.0, 1.0))
}

/// One-sample KS test of a sorted sample against a continuous CDF.
pub fn ks_test(
    sample: &[f64],
    cdf: impl Fn(f64) -> f64,
    name: impl Into<String>,
    level: f64,
    seed: Option<u64>,
) -> Result<TestReport> {
    if sample.len() < 8 {
        return Err(Error::domain("ks_test requires at least 8 observations"));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::NanInSample);
    }
    if sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedSample);
    }
    let n = sample.len();
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let p_value = kolmogorov_sf(nf.sqrt() * d)?;
    Ok(TestReport {
        name: name.into(),
        sample_size: n,
        statistic: d,
        p_value: Some(p_value),
        target: None,
        tolerance: level,
        pass: p_value > level,
        seed,
    })
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Z-tests of sample mean and variance against exact targets; passes iff
/// both |z| ≤ 4 (variance SE under Gaussianity).
pub fn moment_z_test(
    sample: &[f64],
    target_mean: f64,
    target_variance: f64,
    name: impl Into<String>,
    seed: Option<u64>,
) -> Result<TestReport> {
    if sample.len() < 30 {
        return Err(Error::domain("moment_z_test requires at least 30 observations"));
    }
    let (mean, var) = mean_and_var(sample);
    if target_variance <= 0.0 {
        let constant = sample.iter().all(|&x| x == target_mean);
        if !target_variance.is_finite() || target_variance < 0.0 || !constant {
            return Err(Error::domain(
                "degenerate target variance with non-constant sample",
            ));
        }
        return Ok(TestReport {
            name: name.into(),
            sample_size: sample.len(),
            statistic: 0.0,
            p_value: None,
            target: Some(target_mean),
            tolerance: 4.0,
            pass: true,
            seed,
        });
    }
    let nf = sample.len() as f64;
    let z_mean = (mean - target_mean) / (target_variance / nf).sqrt();
    let z_var = (var - target_variance) / (target_variance * (2.0 / nf).sqrt());
    let statistic = z_mean.abs().max(z_var.abs());
    Ok(TestReport {
        name: name.into(),
        sample_size: sample.len(),
        statistic,
        p_value: None,
        target: Some(target_variance),
        tolerance: 4.0,
        pass: statistic <= 4.0,
        seed,
    })
}

/// Entrywise z-comparison of an empirical covariance matrix against a
/// target, with asymptotic SE √((t_ii t_jj + t_ij²)/R).
pub fn covariance_compare(
    samples: &[Vec<f64>],
    target: &[f64],
    dim: usize,
    name: impl Into<String>,
    seed: Option<u64>,
) -> Result<TestReport> {
    if samples.len() < 100 {
        return Err(Error::domain("covariance_compare requires at least 100 samples"));
    }
    if target.len() != dim * dim || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: target.len() / dim.max(1) });
    }
    let r = samples.len() as f64;
    let mut means = vec![0.0; dim];
    for s in samples {
        for (m, &x) in means.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= r;
    }
    let mut max_z = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            let mut cov = 0.0;
            for s in samples {
                cov += (s[i] - means[i]) * (s[j] - means[j]);
            }
            cov /= r - 1.0;
            let t_ij = target[i * dim + j];
            let se = ((target[i * dim + i] * target[j * dim + j] + t_ij * t_ij) / r).sqrt();
            if se > 0.0 {
                max_z = max_z.max(((cov - t_ij) / se).abs());
            } else if cov != 0.0 {
                max_z = f64::INFINITY;
            }
        }
    }
    Ok(TestReport {
        name: name.into(),
        sample_size: samples.len(),
        statistic: max_z,
        p_value: None,
        target: None,
        tolerance: 4.0,
        pass: max_z <= 4.0,
        seed,
    })
}
