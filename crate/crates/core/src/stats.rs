//! Wilson score interval, Wilson sample-size formula, and the iterative
//! sample-size determination loop.
//!
//! The interval for an estimated proportion `p` from `n` Bernoulli trials at
//! confidence `1 - alpha` is
//!
//! ```text
//! [L, U] = (p + z^2/2n -+ z sqrt(p(1-p)/n + z^2/4n^2)) / (1 + z^2/n)
//! ```
//!
//! with `z` the `1 - alpha/2` standard-normal percentile. Inverting the
//! half-width for `n` gives the sample size needed for a semi-width
//! `epsilon`:
//!
//! ```text
//! N >= z^2 [ p(1-p) - 2e^2 + sqrt(p^2(1-p)^2 + 4e^2(p - 1/2)^2) ] / (2e^2)
//! ```
//!
//! The iterative procedure starts from the size for `p = 1`, runs that many
//! trials, re-estimates, nudges the estimate toward 1/2 by `epsilon` as an
//! undersizing guard, re-solves for `N`, and tops the sample up until the
//! cumulative count suffices. Far from `p = 1/2` this needs a small fraction
//! of the conservative worst-case size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("quantile argument must lie in (0,1), got {0}")]
    QuantileDomain(f64),
    #[error("estimated proportion must lie in [0,1], got {0}")]
    ProportionRange(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaRange(f64),
    #[error("epsilon must lie strictly inside (0,0.5), got {0}")]
    EpsilonRange(f64),
    #[error("batch returned {trials} trials for a request of {requested}")]
    BatchOverrun { requested: u64, trials: u64 },
    #[error("batch made no progress (zero trials)")]
    BatchEmpty,
}

// ---------------------------------------------------------------------------
// Standard normal distribution.
// ---------------------------------------------------------------------------

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// erf via the confluent series, accurate for |x| <= 2.5.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        let next = sum + term;
        if next == sum || n > 200 {
            break;
        }
        sum = next;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// erfc via a continued fraction (modified Lentz), for x >= 2.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..200 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = x + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 2e-16 {
            break;
        }
    }
    // f now approximates x + K(a_n / x); erfc = e^{-x^2}/sqrt(pi) / f.
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// Standard normal CDF.
fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// Rational approximation coefficients for the inverse normal CDF
// (Acklam's algorithm; relative error ~1.15e-9 before refinement).
const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn inverse_normal_approx(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        -inverse_normal_approx(1.0 - p)
    }
}

/// Inverse standard-normal CDF: the value `z` with `Phi(z) = q`.
///
/// Rational approximation refined by one Halley step of the CDF; absolute
/// error is far below the 1e-8 contract across (0, 1).
pub fn normal_quantile(q: f64) -> Result<f64, StatsError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(StatsError::QuantileDomain(q));
    }
    let x = inverse_normal_approx(q);
    let density = std_normal_pdf(x);
    if density == 0.0 {
        // Far tail: the density underflowed; the approximation alone is the
        // best double-precision answer available.
        return Ok(x);
    }
    let u = (std_normal_cdf(x) - q) / density;
    Ok(x - u / (1.0 + x * u / 2.0))
}

fn check_proportion(p: f64) -> Result<(), StatsError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(StatsError::ProportionRange(p));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::AlphaRange(alpha));
    }
    Ok(())
}

/// Wilson score confidence interval for `p_hat` successes-per-trial over `n`
/// trials at confidence `1 - alpha`. Bounds are clamped to [0, 1].
pub fn wilson_interval(p_hat: f64, n: u64, alpha: f64) -> Result<(f64, f64), StatsError> {
    check_proportion(p_hat)?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let nf = n as f64;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = p_hat + z2 / (2.0 * nf);
    let half = z * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let mut lower = ((center - half) / denom).clamp(0.0, 1.0);
    let mut upper = ((center + half) / denom).clamp(0.0, 1.0);
    // Algebraic zeros at the extremes: the numerator cancels exactly there,
    // so pin them rather than leave last-ulp residue.
    if p_hat == 0.0 {
        lower = 0.0;
    }
    if p_hat == 1.0 {
        upper = 1.0;
    }
    Ok((lower, upper))
}

/// Wald (normal-approximation) interval, kept for comparison output only.
pub fn wald_interval(p_hat: f64, n: u64, alpha: f64) -> Result<(f64, f64), StatsError> {
    check_proportion(p_hat)?;
    check_alpha(alpha)?;
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let half = z * (p_hat * (1.0 - p_hat) / n as f64).sqrt();
    Ok((
        (p_hat - half).clamp(0.0, 1.0),
        (p_hat + half).clamp(0.0, 1.0),
    ))
}

/// Smallest sample size whose Wilson interval at `p_hat` has semi-width at
/// most `epsilon` at confidence `1 - alpha`. At least 1.
pub fn wilson_sample_size(p_hat: f64, epsilon: f64, alpha: f64) -> Result<u64, StatsError> {
    check_proportion(p_hat)?;
    check_alpha(alpha)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(StatsError::EpsilonRange(epsilon));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let z2 = z * z;
    let e2 = epsilon * epsilon;
    let pq = p_hat * (1.0 - p_hat);
    let bracket = pq - 2.0 * e2 + (pq * pq + 4.0 * e2 * (p_hat - 0.5) * (p_hat - 0.5)).sqrt();
    let n = (z2 * bracket / (2.0 * e2)).ceil();
    Ok((n as u64).max(1))
}

/// Confidence requirements: confidence level `1 - alpha`, interval
/// semi-width `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    alpha: f64,
    epsilon: f64,
}

impl ConfidenceSpec {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self, StatsError> {
        check_alpha(alpha)?;
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(StatsError::EpsilonRange(epsilon));
        }
        Ok(Self { alpha, epsilon })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Worst-case sample size (maximum-variance estimate `p = 0.5`).
    pub fn conservative_sample_size(&self) -> u64 {
        wilson_sample_size(0.5, self.epsilon, self.alpha).expect("validated spec")
    }
}

/// One batch outcome reported by the sampling callback. `trials` may fall
/// short of the request when replicas errored and were excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchCounts {
    pub trials: u64,
    pub successes: u64,
}

/// One iteration of the sizing loop, for the report log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub requested: u64,
    pub trials: u64,
    pub successes: u64,
}

/// Final estimate with its Wilson interval and the per-iteration log.
///
/// `lower <= upper` always holds; `lower <= p_hat <= upper` is not
/// algebraically guaranteed at extreme estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub n_total: u64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: Vec<IterationRecord>,
}

/// Iterative sample-size determination.
///
/// Starts from the size required for the extreme estimate `p = 1`, then
/// alternates batches with re-sized requests. After each batch the running
/// estimate is moved toward 1/2 by `epsilon` (without crossing it) before
/// re-solving the sample size — the guard that keeps erratic early estimates
/// from undersizing the experiment. Stops once the accumulated trials cover
/// the requirement and returns the Wilson interval of the unadjusted
/// estimate over all trials.
///
/// The callback must run genuinely independent Bernoulli replicas. A
/// callback error aborts the loop and surfaces the partial state.
pub fn iterative_estimate<E>(
    mut run_batch: impl FnMut(u64) -> Result<BatchCounts, E>,
    spec: &ConfidenceSpec,
) -> Result<Estimate, IterativeAbort<E>> {
    let mut n_total: u64 = 0;
    let mut successes: u64 = 0;
    let mut iterations = Vec::new();

    let abort = |error, iterations: &Vec<IterationRecord>, n_total, successes| IterativeAbort {
        error,
        iterations: iterations.clone(),
        n_total,
        successes,
    };

    let mut requested = wilson_sample_size(1.0, spec.epsilon, spec.alpha).expect("validated spec");
    loop {
        let counts = match run_batch(requested) {
            Ok(c) => c,
            Err(e) => return Err(abort(Abort::Callback(e), &iterations, n_total, successes)),
        };
        if counts.trials == 0 {
            return Err(abort(
                Abort::Stats(StatsError::BatchEmpty),
                &iterations,
                n_total,
                successes,
            ));
        }
        if counts.trials > requested || counts.successes > counts.trials {
            return Err(abort(
                Abort::Stats(StatsError::BatchOverrun {
                    requested,
                    trials: counts.trials,
                }),
                &iterations,
                n_total,
                successes,
            ));
        }
        n_total += counts.trials;
        successes += counts.successes;
        iterations.push(IterationRecord {
            requested,
            trials: counts.trials,
            successes: counts.successes,
        });

        let p_hat = successes as f64 / n_total as f64;
        // Round toward 1/2 by epsilon, never past it: moving beyond the
        // median would shrink the requirement below the worst case the
        // guard is meant to preserve.
        let p_round = if p_hat <= 0.5 {
            (p_hat + spec.epsilon).min(0.5)
        } else {
            (p_hat - spec.epsilon).max(0.5)
        };
        let required =
            wilson_sample_size(p_round, spec.epsilon, spec.alpha).expect("validated inputs");
        if n_total >= required {
            let (lower, upper) =
                wilson_interval(p_hat, n_total, spec.alpha).expect("validated inputs");
            return Ok(Estimate {
                p_hat,
                n_total,
                lower,
                upper,
                iterations,
            });
        }
        requested = required - n_total;
    }
}

/// Why [`iterative_estimate`] gave up, plus everything gathered so far.
#[derive(Debug)]
pub struct IterativeAbort<E> {
    pub error: Abort<E>,
    pub iterations: Vec<IterationRecord>,
    pub n_total: u64,
    pub successes: u64,
}

#[derive(Debug)]
pub enum Abort<E> {
    Callback(E),
    Stats(StatsError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssa::RngStream;

    #[test]
    fn quantile_at_the_median_is_zero() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_matches_high_precision_values() {
        // Reference values from an independent high-precision CDF inversion.
        let cases = [
            (0.975, 1.9599639845400542),
            (0.995, 2.575829303548901),
            (0.9, 1.2815515655446004),
            (0.99995, 3.890591886413094),
            (0.025, -1.9599639845400542),
            (0.0001, -3.7190164854556804),
        ];
        for (q, z) in cases {
            let got = normal_quantile(q).unwrap();
            assert!(
                (got - z).abs() <= 1e-9,
                "quantile({q}) = {got}, expected {z}"
            );
        }
    }

    #[test]
    fn quantile_domain_errors() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(-0.5).is_err());
    }

    #[test]
    fn wilson_interval_reference_point() {
        // Independent arbitrary-precision evaluation of the score bounds.
        let (l, u) = wilson_interval(0.5, 100, 0.05).unwrap();
        assert!((l - 0.4038315303659956).abs() <= 1e-5);
        assert!((u - 0.5961684696340044).abs() <= 1e-5);
    }

    #[test]
    fn wilson_lower_bound_is_exactly_zero_at_zero_estimate() {
        for n in [1u64, 10, 100, 2648] {
            let (l, _) = wilson_interval(0.0, n, 0.01).unwrap();
            assert_eq!(l, 0.0);
            let (_, u) = wilson_interval(1.0, n, 0.01).unwrap();
            assert_eq!(u, 1.0);
        }
    }

    #[test]
    fn wilson_width_approaches_wald_for_large_n() {
        let n = 1_000_000u64;
        let p = 0.3;
        let (l, u) = wilson_interval(p, n, 0.05).unwrap();
        let z = normal_quantile(0.975).unwrap();
        let wald = 2.0 * z * (p * (1.0 - p) / n as f64).sqrt();
        let width = u - l;
        assert!(
            ((width - wald) / wald).abs() < 0.01,
            "width {width} vs wald {wald}"
        );
    }

    #[test]
    fn conservative_sample_size_is_2648() {
        assert_eq!(wilson_sample_size(0.5, 0.025, 0.01).unwrap(), 2648);
    }

    #[test]
    fn extreme_estimate_sample_size_is_127() {
        // Closed form at p=1: bracket collapses to epsilon - 2 epsilon^2.
        assert_eq!(wilson_sample_size(1.0, 0.025, 0.01).unwrap(), 127);
        assert_eq!(wilson_sample_size(0.0, 0.025, 0.01).unwrap(), 127);
    }

    #[test]
    fn sample_size_peaks_at_half() {
        let at_half = wilson_sample_size(0.5, 0.025, 0.01).unwrap();
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            assert!(wilson_sample_size(p, 0.025, 0.01).unwrap() <= at_half);
        }
    }

    #[test]
    fn sample_size_is_symmetric() {
        for i in 0..=50 {
            let p = i as f64 / 50.0;
            assert_eq!(
                wilson_sample_size(p, 0.025, 0.01).unwrap(),
                wilson_sample_size(1.0 - p, 0.025, 0.01).unwrap(),
            );
        }
    }

    fn spec_default() -> ConfidenceSpec {
        ConfidenceSpec::new(0.01, 0.025).unwrap()
    }

    #[test]
    fn all_failures_terminate_at_304() {
        // Hand-traced loop: 127 then 177 more, estimate pinned at 0.
        let est = iterative_estimate::<()>(
            |n| {
                Ok(BatchCounts {
                    trials: n,
                    successes: 0,
                })
            },
            &spec_default(),
        )
        .unwrap();
        assert_eq!(est.n_total, 304);
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(
            est.iterations
                .iter()
                .map(|it| it.requested)
                .collect::<Vec<_>>(),
            vec![127, 177]
        );
        assert!(est.lower <= est.upper);
        assert_eq!(est.lower, 0.0);
    }

    #[test]
    fn all_successes_mirror_the_all_failure_trace() {
        let est = iterative_estimate::<()>(
            |n| {
                Ok(BatchCounts {
                    trials: n,
                    successes: n,
                })
            },
            &spec_default(),
        )
        .unwrap();
        assert_eq!(est.n_total, 304);
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.upper, 1.0);
    }

    #[test]
    fn fair_coin_lands_on_the_conservative_size() {
        let mut rng = RngStream::seed_from(20240915);
        let est = iterative_estimate::<()>(
            |n| {
                let successes = (0..n).filter(|_| rng.uniform() < 0.5).count() as u64;
                Ok(BatchCounts {
                    trials: n,
                    successes,
                })
            },
            &spec_default(),
        )
        .unwrap();
        assert_eq!(est.n_total, 2648);
    }

    #[test]
    fn batches_are_positive_and_totals_increase() {
        for seed in 0..20u64 {
            let p = 0.05 + 0.045 * seed as f64;
            let mut rng = RngStream::seed_from(seed * 7 + 1);
            let est = iterative_estimate::<()>(
                |n| {
                    let successes = (0..n).filter(|_| rng.uniform() < p).count() as u64;
                    Ok(BatchCounts {
                        trials: n,
                        successes,
                    })
                },
                &spec_default(),
            )
            .unwrap();
            let mut running = 0u64;
            for it in &est.iterations {
                assert!(it.requested > 0);
                running += it.trials;
            }
            assert_eq!(running, est.n_total);
            assert!(est.n_total <= spec_default().conservative_sample_size());
        }
    }

    #[test]
    fn callback_failure_preserves_partial_state() {
        let mut calls = 0;
        let res = iterative_estimate(
            |n| {
                calls += 1;
                if calls == 1 {
                    Ok(BatchCounts {
                        trials: n,
                        successes: 0,
                    })
                } else {
                    Err("worker pool collapsed")
                }
            },
            &spec_default(),
        );
        let abort = res.unwrap_err();
        assert_eq!(abort.n_total, 127);
        assert_eq!(abort.iterations.len(), 1);
        assert!(matches!(
            abort.error,
            Abort::Callback("worker pool collapsed")
        ));
    }

    #[test]
    fn reduction_at_extreme_probabilities() {
        // Mean total far below a quarter of the conservative size when the
        // true probability sits near the boundary.
        let conservative = spec_default().conservative_sample_size();
        for p in [0.01, 0.99] {
            let mut total = 0u64;
            let reps = 100;
            for r in 0..reps {
                let mut rng = RngStream::seed_from(0xACE0 + r as u64 + (p * 1000.0) as u64);
                let est = iterative_estimate::<()>(
                    |n| {
                        let successes = (0..n).filter(|_| rng.uniform() < p).count() as u64;
                        Ok(BatchCounts {
                            trials: n,
                            successes,
                        })
                    },
                    &spec_default(),
                )
                .unwrap();
                total += est.n_total;
            }
            let mean = total as f64 / reps as f64;
            assert!(
                mean <= 0.25 * conservative as f64,
                "mean sample size {mean} for p={p} exceeds a quarter of {conservative}"
            );
        }
    }
}
