//! Closed-form reliability of RAID(4+ℓ) nodes and HRAID k/ℓ arrays.
//!
//! Disks fail independently with probability ε (reliability `r = 1 - ε`). A
//! node survives while at most ℓ of its `M` disks have failed; the array
//! survives while at most `k` nodes have failed. Only disk failures are
//! counted here.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::cmp::Ordering;

use crate::combinatorics::{binomial, binomial_f64, compensated_sum};
use crate::config::HraidConfig;
use crate::error::{Error, Result};

/// Below this disk unreliability the array unreliability is summed directly
/// instead of being taken as `1 - R`.
pub const COMPLEMENT_THRESHOLD: f64 = 1e-4;

/// Single-disk unreliability ε with `0 < ε < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DiskReliability {
    epsilon: f64,
}

impl DiskReliability {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("0 < eps < 1", format!("eps={epsilon}")));
        }
        Ok(DiskReliability { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `r = 1 - ε`.
    pub fn r(&self) -> f64 {
        1.0 - self.epsilon
    }
}

fn binomial_term(m: usize, i: usize, eps: f64) -> f64 {
    binomial_f64(m, i) * eps.powi(i as i32) * (1.0 - eps).powi((m - i) as i32)
}

/// Reliability of an `m`-disk MDS array tolerating `t` failures:
/// `Σ_{i=0..t} C(m,i) ε^i (1-ε)^(m-i)`.
pub fn exact_mds_reliability(m: usize, t: usize, eps: DiskReliability) -> Result<f64> {
    if t > m {
        return Err(Error::invalid("t <= m", format!("t={t}, m={m}")));
    }
    if t == m {
        return Ok(1.0);
    }
    let e = eps.epsilon();
    Ok(compensated_sum((0..=t).map(|i| binomial_term(m, i, e))).min(1.0))
}

/// `1 - exact_mds_reliability`, summed over the fatal failure counts.
pub fn exact_mds_unreliability(m: usize, t: usize, eps: DiskReliability) -> Result<f64> {
    if t > m {
        return Err(Error::invalid("t <= m", format!("t={t}, m={m}")));
    }
    let e = eps.epsilon();
    Ok(compensated_sum((t + 1..=m).map(|i| binomial_term(m, i, e))))
}

/// Two-term series for the unreliability of an `m`-disk array tolerating `t`
/// failures: `C(m,t+1) ε^(t+1) - (t+1) C(m,t+2) ε^(t+2)`.
///
/// The truncation error is of order `ε^(t+3)`; it is only meaningful for
/// `m ε ≪ 1`.
pub fn raid_series_approx(m: usize, t: usize, eps: DiskReliability) -> f64 {
    let e = eps.epsilon();
    binomial_f64(m, t + 1) * e.powi(t as i32 + 1)
        - (t + 1) as f64 * binomial_f64(m, t + 2) * e.powi(t as i32 + 2)
}

/// Node unreliability `u` and reliability `R_ℓ`.
fn node_terms(config: &HraidConfig, eps: DiskReliability) -> (f64, f64) {
    let u = exact_mds_unreliability(config.m(), config.l(), eps).expect("l < M");
    let r = exact_mds_reliability(config.m(), config.l(), eps).expect("l < M");
    (u, r)
}

/// Probability that more than `k` nodes fail: `Σ_{j>k} C(N,j) u^j R_ℓ^(N-j)`.
pub fn hraid_unreliability(config: &HraidConfig, eps: DiskReliability) -> f64 {
    let (u, r) = node_terms(config, eps);
    let n = config.n();
    compensated_sum(
        (config.k() + 1..=n)
            .map(|j| binomial_f64(n, j) * u.powi(j as i32) * r.powi((n - j) as i32)),
    )
}

/// Array reliability `Σ_{j=0..k} C(N,j) (1-R_ℓ)^j R_ℓ^(N-j)`.
///
/// For ε below [`COMPLEMENT_THRESHOLD`] this is `1 - hraid_unreliability`.
pub fn hraid_reliability(config: &HraidConfig, eps: DiskReliability) -> f64 {
    if eps.epsilon() < COMPLEMENT_THRESHOLD {
        return 1.0 - hraid_unreliability(config, eps);
    }
    let (u, r) = node_terms(config, eps);
    let n = config.n();
    compensated_sum(
        (0..=config.k()).map(|j| binomial_f64(n, j) * u.powi(j as i32) * r.powi((n - j) as i32)),
    )
    .min(1.0)
}

/// Lowest-order term of the array unreliability, `coefficient · ε^power`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeadingTerm {
    pub power: u32,
    #[serde(serialize_with = "serialize_display")]
    pub coefficient: BigUint,
}

fn serialize_display<S: serde::Serializer, T: std::fmt::Display>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Minimal fatal sets: `k+1` nodes with `ℓ+1` failed disks each, giving power
/// `(k+1)(ℓ+1)` and coefficient `C(N,k+1) C(M,ℓ+1)^(k+1)`.
pub fn leading_term(config: &HraidConfig) -> LeadingTerm {
    leading_term_for(config.n(), config.m(), config.k(), config.l())
}

fn leading_term_for(n: usize, m: usize, k: usize, l: usize) -> LeadingTerm {
    let per_node = binomial(m, l + 1);
    let mut coefficient = binomial(n, k + 1);
    for _ in 0..=k {
        coefficient *= &per_node;
    }
    LeadingTerm {
        power: ((k + 1) * (l + 1)) as u32,
        coefficient,
    }
}

fn big(v: usize) -> BigRational {
    BigRational::from_integer(v.into())
}

/// The published leading coefficients for HRAID0/1, 1/0, 1/2 and 2/1, as
/// written. `None` for other apportionments.
///
/// The HRAID2/1 expression, `N(N-1)(N-2)M³(M-1)³/24`, is twice the minimal
/// fatal set count `C(N,3) C(M,2)³ = N(N-1)(N-2)M³(M-1)³/48`; the other three
/// agree with [`leading_term`].
pub fn published_leading_coefficient(n: usize, m: usize, k: usize, l: usize) -> Option<BigRational> {
    let (nn, mm) = (big(n), big(m));
    let one = BigRational::one();
    let n1 = &nn - &one;
    let m1 = &mm - &one;
    let two = big(2);
    match (k, l) {
        (0, 1) => Some(&nn * &mm * &m1 / &two),
        (1, 0) => Some(&nn * &n1 * &mm * &mm / &two),
        (1, 2) => {
            let m2 = &mm - &two;
            Some(&nn * &n1 * &mm * &mm * &m1 * &m1 * &m2 * &m2 / big(72))
        }
        (2, 1) => {
            let n2 = &nn - &two;
            let m3 = &mm * &mm * &mm;
            let m13 = &m1 * &m1 * &m1;
            Some(&nn * &n1 * &n2 * m3 * m13 / big(24))
        }
        _ => None,
    }
}

/// Which of HRAID1/2 and HRAID2/1 has the smaller unreliability for small ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Apportionment {
    OneTwoBetter,
    TwoOneBetter,
    Equal,
}

impl std::fmt::Display for Apportionment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Apportionment::OneTwoBetter => "ONE_TWO_BETTER",
            Apportionment::TwoOneBetter => "TWO_ONE_BETTER",
            Apportionment::Equal => "EQUAL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApportionmentComparison {
    pub ordering: Apportionment,
    /// Leading coefficient of HRAID1/2 (power 6).
    #[serde(serialize_with = "serialize_display")]
    pub coefficient_12: BigUint,
    /// Leading coefficient of HRAID2/1 (power 6).
    #[serde(serialize_with = "serialize_display")]
    pub coefficient_21: BigUint,
    /// Published threshold `2 + (M-2)² / (3M(M-1))` that `N` must exceed.
    #[serde(serialize_with = "serialize_display")]
    pub threshold_n: BigRational,
    /// Threshold implied by the counted coefficients, `2 + 2(M-2)² / (3M(M-1))`.
    #[serde(serialize_with = "serialize_display")]
    pub counted_threshold_n: BigRational,
}

/// Compare HRAID1/2 against HRAID2/1 through their leading terms.
pub fn compare_apportionments(n: usize, m: usize) -> Result<ApportionmentComparison> {
    if n < 3 {
        return Err(Error::invalid("N >= 3", format!("N={n}")));
    }
    if m < 3 {
        return Err(Error::invalid("M >= 3", format!("M={m}")));
    }
    let a = leading_term_for(n, m, 1, 2);
    let b = leading_term_for(n, m, 2, 1);
    debug_assert_eq!(a.power, b.power);
    let ordering = match a.coefficient.cmp(&b.coefficient) {
        Ordering::Less => Apportionment::OneTwoBetter,
        Ordering::Greater => Apportionment::TwoOneBetter,
        Ordering::Equal => Apportionment::Equal,
    };
    let m2 = big(m) - big(2);
    let denom = big(3) * big(m) * (big(m) - big(1));
    let frac = &m2 * &m2 / denom;
    Ok(ApportionmentComparison {
        ordering,
        coefficient_12: a.coefficient,
        coefficient_21: b.coefficient,
        threshold_n: big(2) + &frac,
        counted_threshold_n: big(2) + big(2) * frac,
    })
}

/// Probability that the next disk failure is fatal, from the worst
/// five-failure states of HRAID1/2 and HRAID2/1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SixthFailure {
    #[serde(serialize_with = "serialize_display")]
    pub p_12: BigRational,
    #[serde(serialize_with = "serialize_display")]
    pub p_21: BigRational,
    /// Surviving disks `D_S = (N-2)M + M - 2`.
    pub d_s: usize,
}

pub fn conditional_sixth_failure(n: usize, m: usize) -> Result<SixthFailure> {
    if n < 3 {
        return Err(Error::invalid("N >= 3", format!("N={n}")));
    }
    if m < 3 {
        return Err(Error::invalid("M >= 3", format!("M={m}")));
    }
    let d_s = (n - 2) * m + m - 2;
    Ok(SixthFailure {
        p_12: BigRational::new((m - 2).into(), d_s.into()),
        p_21: BigRational::new((m - 1).into(), d_s.into()),
        d_s,
    })
}

/// Best-case tolerated disk failures, `k·M + (N-k)·ℓ`.
pub fn d_max(config: &HraidConfig) -> usize {
    config.k() * config.m() + (config.n() - config.k()) * config.l()
}

/// Fewest disk failures that can lose data, `(k+1)(ℓ+1)`.
pub fn d_min(config: &HraidConfig) -> usize {
    (config.k() + 1) * (config.l() + 1)
}

/// Everything above for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub config: HraidConfig,
    pub d_max: usize,
    pub d_min: usize,
    pub leading_term: LeadingTerm,
    pub sixth_failure: Option<SixthFailure>,
    pub comparison: Option<ApportionmentComparison>,
}

pub fn analytic_report(config: &HraidConfig) -> AnalyticReport {
    AnalyticReport {
        config: *config,
        d_max: d_max(config),
        d_min: d_min(config),
        leading_term: leading_term(config),
        sixth_failure: conditional_sixth_failure(config.n(), config.m()).ok(),
        comparison: compare_apportionments(config.n(), config.m()).ok(),
    }
}

/// Exact value of a rational as `f64` (for reporting).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(f64::NAN)
}
