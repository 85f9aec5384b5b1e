//! Exact, deterministic numerical machinery for the reinforced walk.
//!
//! Everything here is closed-form or a certified recursion: the normalizing
//! sequence `a_n = Γ(n+p)/(Γ(n)Γ(p+1))`, the unit-variance second-moment
//! factor `m̃_n` of the martingale `M_n = Ŝ_n/a_n`, and the finite-horizon
//! fluctuation variance `v_exact(p, n, N) = (a_n²/n)(m̃_N − m̃_n)`. These
//! provide the targets that stochastic output is tested against.
//!
//! The second-moment recursion uses the conditional-variance coefficient
//! `p²/(n+p)²` (not `p²/n²`): expanding the martingale increment
//! `d_{n+1} = (X̂_{n+1} − pŜ_n/n)/a_{n+1}` picks up the factor
//! `(a_n/a_{n+1})² = (n/(n+p))²`, and the n = 2 enumeration oracle
//! `E(Ŝ_2²) = 2σ²(1+p)` confirms it.

use crate::error::{Error, Result};

/// ln(2π)/2
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// Stirling series is used at or above this argument.
const STIRLING_CUTOFF: f64 = 16.0;

fn stirling_correction(x: f64) -> f64 {
    // Asymptotic series Σ B_{2k}/(2k(2k−1)x^{2k−1}); five terms give
    // full double precision for x >= 16.
    let r = 1.0 / (x * x);
    (((((-1.0 / 1188.0) * r + 1.0 / 1680.0) * r - 1.0 / 1260.0) * r + 1.0 / 360.0) * r
        - 1.0 / 12.0)
        * (-1.0 / x)
}

fn log_gamma_stirling(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + stirling_correction(x)
}

/// Natural log of the Euler gamma function, for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x >= STIRLING_CUTOFF {
        return Ok(log_gamma_stirling(x));
    }
    // Shift up: ln Γ(x) = ln Γ(x + m) − ln Π (x + k)
    let mut shift_log = 0.0;
    let mut y = x;
    let mut product = 1.0;
    while y < STIRLING_CUTOFF {
        product *= y;
        if product > 1e280 {
            shift_log += product.ln();
            product = 1.0;
        }
        y += 1.0;
    }
    shift_log += product.ln();
    Ok(log_gamma_stirling(y) - shift_log)
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    Ok(log_gamma(x)?.exp())
}

/// ln Γ(n + p) − ln Γ(n) for n ≥ 1, p ∈ [0, 1], without the catastrophic
/// cancellation a naive difference would incur at large n.
pub fn log_gamma_ratio(n: f64, p: f64) -> f64 {
    if n >= STIRLING_CUTOFF {
        // (n+p−1/2)ln(n+p) − (n−1/2)ln n − p + S(n+p) − S(n)
        // with the log difference routed through ln_1p.
        let base = (n - 0.5) * (p / n).ln_1p() + p * (n + p).ln() - p;
        base + stirling_correction(n + p) - stirling_correction(n)
    } else {
        // Γ(n+1+p)/Γ(n+1) = (n+p)/n · Γ(n+p)/Γ(n)
        log_gamma_ratio(n + 1.0, p) - ((n + p).ln() - n.ln())
    }
}

fn check_p_unit(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_n_positive(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::domain("index n must be >= 1"));
    }
    Ok(())
}

/// a_n by the product recurrence a_{n+1} = a_n (n+p)/n, a_1 = 1.
pub fn a_seq_recurrence(p: f64, n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    let mut a = 1.0;
    for k in 1..n {
        let k = k as f64;
        a *= (k + p) / k;
    }
    Ok(a)
}

/// a_n via log-gamma, O(1); agrees with the recurrence to better than
/// 1e-10 relative over the tested range.
pub fn a_seq_log_gamma(p: f64, n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    Ok((log_gamma_ratio(n as f64, p) - log_gamma(1.0 + p)?).exp())
}

/// The normalizing sequence a_n = Γ(n+p)/(Γ(n)Γ(p+1)).
pub fn a_seq(p: f64, n: usize) -> Result<f64> {
    if n <= 65_536 {
        a_seq_recurrence(p, n)
    } else {
        a_seq_log_gamma(p, n)
    }
}

/// γ_n = n/(n+p).
pub fn gamma_step(p: f64, n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    let n = n as f64;
    Ok(n / (n + p))
}

/// Limiting fluctuation variance scale 1/(2p−1) for p in (1/2, 1).
pub fn limit_fluctuation_variance(p: f64) -> Result<f64> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::domain(format!(
            "limit variance requires p in (1/2, 1), got {p}"
        )));
    }
    Ok(1.0 / (2.0 * p - 1.0))
}

/// One step of the second-moment recursion with compensated accumulation.
/// State is (a_n, m̃_n) at index n; advances to n+1.
#[derive(Clone, Copy, Debug)]
struct MomentState {
    n: usize,
    a: f64,
    m: f64,
    comp: f64,
}

impl MomentState {
    fn new() -> Self {
        MomentState { n: 1, a: 1.0, m: 1.0, comp: 0.0 }
    }

    fn advance_with(&mut self, p: f64) {
        let nf = self.n as f64;
        self.a *= (nf + p) / nf;
        let decay = 1.0 - (p / (nf + p)) * (p / (nf + p));
        // m̃_{n+1} = m̃_n · decay + 1/a_{n+1}²  (Kahan on the additive term)
        self.m *= decay;
        self.comp *= decay;
        let term = 1.0 / (self.a * self.a) - self.comp;
        let sum = self.m + term;
        self.comp = (sum - self.m) - term;
        self.m = sum;
        self.n += 1;
    }
}

/// Unit-variance second-moment factor m̃_n with E(M_n²) = σ²·m̃_n.
///
/// m̃_1 = 1 and m̃_{n+1} = m̃_n (1 − p²/(n+p)²) + 1/a_{n+1}².
pub fn exact_second_moment(p: f64, n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    let mut st = MomentState::new();
    while st.n < n {
        st.advance_with(p);
    }
    Ok(st.m)
}

/// Exact unit variance of the finite-horizon fluctuation statistic
/// (Ŝ_n − a_n M_N)/√n, namely (a_n²/n)(m̃_N − m̃_n).
pub fn v_exact(p: f64, n: usize, big_n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    if big_n < n {
        return Err(Error::domain(format!(
            "v_exact requires N >= n, got n = {n}, N = {big_n}"
        )));
    }
    let mut st = MomentState::new();
    while st.n < n {
        st.advance_with(p);
    }
    let a_n = st.a;
    let m_n = st.m;
    while st.n < big_n {
        st.advance_with(p);
    }
    Ok(a_n * a_n / (n as f64) * (st.m - m_n))
}

/// Two-sided enclosure of Var(Ŵ)/σ² = m̃_∞.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct VarianceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Index the recursion was run to.
    pub index: usize,
    /// Whether the requested width was reached before `max_index`.
    pub converged: bool,
}

impl VarianceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Encloses m̃_∞ = Var(Ŵ)/σ² by running the recursion to some n and
/// adding the certified tail bound Σ_{k>n} E(d_k²)/σ² ≤ n/(a_n²(2p−1)).
///
/// The bound follows from a_k/a_n ≥ (k/n)^p (Bernoulli inequality on the
/// product representation) together with the integral comparison
/// Σ_{k>n} k^{−2p} ≤ n^{1−2p}/(2p−1). For p near 1/2 the tail decays like
/// n^{1−2p}, so a tight tolerance may be unreachable within `max_index`;
/// the interval is valid either way and `converged` reports the outcome.
pub fn limit_variance_w(p: f64, tol: f64, max_index: usize) -> Result<VarianceInterval> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::Divergent { p });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain("tol must be positive"));
    }
    let mut st = MomentState::new();
    let two_p_minus_1 = 2.0 * p - 1.0;
    loop {
        // check every doubling to keep the loop tight
        let tail = st.n as f64 / (st.a * st.a * two_p_minus_1);
        if tail <= tol || st.n >= max_index {
            return Ok(VarianceInterval {
                lower: st.m,
                upper: st.m + tail,
                index: st.n,
                converged: tail <= tol,
            });
        }
        let target = (st.n * 2).min(max_index);
        while st.n < target {
            st.advance_with(p);
        }
    }
}

/// (n^p − a_n)/√n: the discrepancy incurred by centering with n^p instead
/// of a_n. Diverges like n^{p−1/2}(1 − 1/Γ(p+1)) for p in (1/2, 1), which
/// is why a_n cannot be replaced by n^p in the fluctuation statement.
pub fn centering_discrepancy(p: f64, n: usize) -> Result<f64> {
    check_p_unit(p)?;
    check_n_positive(n)?;
    let nf = n as f64;
    let a_n = a_seq(p, n)?;
    Ok((nf.powf(p) - a_n) / nf.sqrt())
}

/// Precomputed tables of a_n, γ_n and m̃_n up to a fixed horizon.
///
/// Immutable after construction; safe to share across readers.
#[derive(Clone, Debug)]
pub struct ExactMoments {
    p: f64,
    horizon: usize,
    a: Vec<f64>,
    gamma: Vec<f64>,
    m: Vec<f64>,
}

impl ExactMoments {
    pub fn build(p: f64, horizon: usize) -> Result<Self> {
        check_p_unit(p)?;
        check_n_positive(horizon)?;
        let mut a = Vec::with_capacity(horizon);
        let mut gamma = Vec::with_capacity(horizon);
        let mut m = Vec::with_capacity(horizon);
        let mut st = MomentState::new();
        a.push(st.a);
        m.push(st.m);
        gamma.push(1.0 / (1.0 + p));
        while st.n < horizon {
            st.advance_with(p);
            a.push(st.a);
            m.push(st.m);
            gamma.push(st.n as f64 / (st.n as f64 + p));
        }
        Ok(ExactMoments { p, horizon, a, gamma, m })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// a_n, 1-indexed.
    pub fn a(&self, n: usize) -> f64 {
        self.a[n - 1]
    }

    /// γ_n = n/(n+p), 1-indexed.
    pub fn gamma(&self, n: usize) -> f64 {
        self.gamma[n - 1]
    }

    /// m̃_n, 1-indexed.
    pub fn m(&self, n: usize) -> f64 {
        self.m[n - 1]
    }

    /// (a_n²/n)(m̃_N − m̃_n) from the stored tables.
    pub fn v_exact(&self, n: usize, big_n: usize) -> Result<f64> {
        if n < 1 || big_n < n || big_n > self.horizon {
            return Err(Error::domain(format!(
                "v_exact indices out of range: n = {n}, N = {big_n}, horizon = {}",
                self.horizon
            )));
        }
        Ok(self.a(n) * self.a(n) / (n as f64) * (self.m(big_n) - self.m(n)))
    }

    /// Exact E((Ŝ_n/n)²)/σ² = a_n² m̃_n / n².
    pub fn lln_factor(&self, n: usize) -> f64 {
        let a = self.a(n);
        a * a * self.m(n) / ((n * n) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn log_gamma_known_values() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(log_gamma(2.0).unwrap(), 0.0, epsilon = 1e-12);
        // ln √π
        assert_abs_diff_eq!(
            log_gamma(0.5).unwrap(),
            0.572_364_942_924_700_1,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            log_gamma(5.0).unwrap(),
            24.0_f64.ln(),
            epsilon = 1e-12
        );
        // large arguments: relative accuracy
        assert_relative_eq!(
            log_gamma(1e7).unwrap(),
            151_180_949.369_473_9,
            max_relative = 1e-14
        );
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_of_one_plus_p() {
        // Γ(1.75) appears in the centering asymptote
        assert_abs_diff_eq!(gamma(1.75).unwrap(), 0.919_062_526_848_894_2, epsilon = 1e-12);
    }

    #[test]
    fn a_seq_examples() {
        for p in [0.1, 0.5, 0.75, 0.99] {
            assert_eq!(a_seq(p, 1).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(a_seq(0.75, 2).unwrap(), 1.75, epsilon = 1e-15);
        assert_abs_diff_eq!(a_seq(0.75, 3).unwrap(), 2.40625, epsilon = 1e-13);
    }

    #[test]
    fn a_seq_routes_agree() {
        for &p in &[0.51, 0.6, 0.75, 0.9, 0.99] {
            for &n in &[1usize, 2, 7, 64, 1000, 10_000, 1_000_000] {
                let rec = a_seq_recurrence(p, n).unwrap();
                let log = a_seq_log_gamma(p, n).unwrap();
                assert!(
                    ((rec - log) / rec).abs() <= 1e-10,
                    "p = {p}, n = {n}: recurrence {rec} vs log-gamma {log}"
                );
            }
        }
    }

    #[test]
    fn a_seq_stirling_limit() {
        // a_n Γ(p+1)/n^p -> 1, within 1e-3 at n = 10^6
        for &p in &[0.6, 0.75] {
            let n = 1_000_000usize;
            let ratio = a_seq(p, n).unwrap() * gamma(p + 1.0).unwrap() / (n as f64).powf(p);
            assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn gamma_step_examples() {
        assert_abs_diff_eq!(gamma_step(0.5, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_step(0.75, 3).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(gamma_step(0.0, 17).unwrap(), 1.0);
    }

    #[test]
    fn second_moment_examples() {
        for p in [0.2, 0.6, 0.75] {
            assert_eq!(exact_second_moment(p, 1).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(
            exact_second_moment(0.75, 2).unwrap(),
            8.0 / 7.0,
            epsilon = 1e-14
        );
        // brute-force oracle: E(Ŝ_2²) = 2σ²(1+p), divided by a_2²
        assert_abs_diff_eq!(
            exact_second_moment(0.6, 2).unwrap(),
            2.0 * 1.6 / (1.6 * 1.6),
            epsilon = 1e-14
        );
    }

    #[test]
    fn second_moment_monotone() {
        for &p in &[0.55, 0.75, 0.95] {
            let table = ExactMoments::build(p, 2000).unwrap();
            for n in 1..2000 {
                assert!(table.m(n + 1) >= table.m(n), "m̃ not monotone at n = {n}");
            }
        }
    }

    #[test]
    fn second_moment_tail_envelope() {
        // m̃_{2n} − m̃_n ≤ Γ(p+1)² Σ_{k=n+1}^{2n} k^{−2p} · (1 + 1e−2)
        for &p in &[0.6, 0.75] {
            let g2 = gamma(p + 1.0).unwrap().powi(2);
            let table = ExactMoments::build(p, 4000).unwrap();
            for &n in &[100usize, 500, 2000] {
                let increment = table.m(2 * n) - table.m(n);
                let envelope: f64 =
                    (n + 1..=2 * n).map(|k| (k as f64).powf(-2.0 * p)).sum();
                assert!(
                    increment <= g2 * envelope * 1.01,
                    "p = {p}, n = {n}: {increment} > {}",
                    g2 * envelope * 1.01
                );
            }
        }
    }

    #[test]
    fn v_exact_examples() {
        assert_eq!(v_exact(0.75, 5, 5).unwrap(), 0.0);
        assert_abs_diff_eq!(v_exact(0.75, 1, 2).unwrap(), 1.0 / 7.0, epsilon = 1e-14);
        assert!(v_exact(0.75, 5, 4).is_err());
        let v = v_exact(0.75, 1024, 131_072).unwrap();
        // within the finite-horizon correction 1 − (n/N)^{2p−1} of the limit
        let predicted = 2.0 * (1.0 - (1024.0 / 131_072.0_f64).powf(0.5));
        assert_relative_eq!(v, predicted, max_relative = 0.03);
    }

    #[test]
    fn v_exact_approaches_limit() {
        // v_exact(p, n, 128 n)·(2p−1) -> 1 − (n/N)^{2p−1}
        for &p in &[0.6, 0.75] {
            let n = 100_000usize;
            let v = v_exact(p, n, 128 * n).unwrap();
            let predicted = 1.0 - (1.0 / 128.0_f64).powf(2.0 * p - 1.0);
            assert_relative_eq!(v * (2.0 * p - 1.0), predicted, max_relative = 0.01);
        }
    }

    #[test]
    fn limit_variance_encloses() {
        let iv = limit_variance_w(0.75, 1e-3, 1 << 23).unwrap();
        assert!(iv.converged);
        // monotonicity: every m̃_n sits below the upper bound
        for &n in &[10usize, 1000, 100_000] {
            let m = exact_second_moment(0.75, n).unwrap();
            assert!(m >= 1.0 && m <= iv.upper);
        }
        // p close to 1/2: the tail decays slowly, the interval is still valid
        let iv = limit_variance_w(0.6, 1e-3, 1 << 21).unwrap();
        assert!(!iv.converged);
        let m = exact_second_moment(0.6, 1 << 21).unwrap();
        assert!(m <= iv.upper && m >= iv.lower);
        assert!(limit_variance_w(0.5, 1e-3, 1000).is_err());
    }

    #[test]
    fn centering_discrepancy_examples() {
        assert_eq!(centering_discrepancy(0.75, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(
            centering_discrepancy(0.75, 2).unwrap(),
            (2.0_f64.powf(0.75) - 1.75) / 2.0_f64.sqrt(),
            epsilon = 1e-14
        );
        // asymptote n^{p−1/2}(1 − 1/Γ(p+1)), within 1% at n = 10^6
        let p = 0.75;
        let n = 1_000_000usize;
        let asym = (n as f64).powf(p - 0.5) * (1.0 - 1.0 / gamma(p + 1.0).unwrap());
        let disc = centering_discrepancy(p, n).unwrap();
        assert_relative_eq!(disc / asym, 1.0, max_relative = 0.01);
    }

    #[test]
    fn centering_discrepancy_diverges() {
        for &p in &[0.6, 0.75] {
            let mut n = 64usize;
            while n <= 1 << 19 {
                let d1 = centering_discrepancy(p, n).unwrap().abs();
                let d2 = centering_discrepancy(p, 2 * n).unwrap().abs();
                assert!(d2 > d1, "p = {p}, n = {n}: |disc| not increasing");
                n *= 2;
            }
        }
    }

    #[test]
    fn tables_match_scalar_ops() {
        let table = ExactMoments::build(0.6, 512).unwrap();
        for &n in &[1usize, 2, 17, 512] {
            assert_eq!(table.a(n), a_seq_recurrence(0.6, n).unwrap());
            assert_abs_diff_eq!(
                table.m(n),
                exact_second_moment(0.6, n).unwrap(),
                epsilon = 1e-15
            );
            assert_eq!(table.gamma(n), gamma_step(0.6, n).unwrap());
        }
        assert_abs_diff_eq!(
            table.v_exact(16, 512).unwrap(),
            v_exact(0.6, 16, 512).unwrap(),
            epsilon = 1e-14
        );
        // lln example: a_2² m̃_2 / 4 = 0.875 at p = 0.75
        let t75 = ExactMoments::build(0.75, 4).unwrap();
        assert_abs_diff_eq!(t75.lln_factor(2), 0.875, epsilon = 1e-14);
        assert_eq!(t75.lln_factor(1), 1.0);
    }
}
