//! Sample-complexity estimation and inversion: Hellinger-based predictors
//! and an exact small-instance oracle over product measures.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::dist::{hellinger_sq, tv_distance, Dist, DistError, Model};
use crate::exec::{self, kahan_sum};
use crate::lfd::{build_lfds, LfdError};

/// Enumeration guard: number of count vectors at the largest `n`.
pub const MAX_STATES: f64 = 1e7;

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("p and q coincide; sample complexity is undefined")]
    DegeneratePair,
    #[error("count-vector state space {states:.3e} exceeds the {limit:.0e} guard")]
    StateSpaceExceeded { states: f64, limit: f64 },
    #[error("eps={eps} exceeds tv/4={quarter_tv} (outside the regime the estimates assume)")]
    EpsTooLarge { eps: f64, quarter_tv: f64 },
    #[error(transparent)]
    Lfd(#[from] LfdError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Hellinger-based sample-complexity estimate, optionally backed by the
/// exact oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub model: Model,
    pub eps: f64,
    pub hel_sq: f64,
    /// `1 / hel_sq` exactly.
    pub predicted_n: f64,
    pub exact_n: Option<u32>,
}

/// Exact total variation between the `n`-fold products `p^(x)n` and
/// `q^(x)n`, by summing over all count vectors with log-multinomial
/// accumulation and max-subtraction.
pub fn product_tv(p: &Dist, q: &Dist, n: u32) -> Result<f64, ComplexityError> {
    let k = p.alphabet_size();
    if q.alphabet_size() != k {
        return Err(ComplexityError::Dist(DistError::AlphabetMismatch(
            k,
            q.alphabet_size(),
        )));
    }
    let states = count_vectors(n, k);
    if states > MAX_STATES {
        return Err(ComplexityError::StateSpaceExceeded {
            states,
            limit: MAX_STATES,
        });
    }
    let ln_fact: Vec<f64> = (0..=n as usize).map(|i| ln_gamma(i as f64 + 1.0)).collect();
    let ln_p: Vec<f64> = p.probs().iter().map(|&x| x.ln()).collect();
    let ln_q: Vec<f64> = q.probs().iter().map(|&x| x.ln()).collect();

    // Parallelise over the leading count; each worker enumerates the
    // remaining coordinates sequentially. Partial sums are reduced in
    // leading-count order, so the result does not depend on the worker
    // count.
    let partial = exec::map_collect(n as usize + 1, |c0| {
        let mut counts = vec![0u32; k];
        counts[0] = c0 as u32;
        let mut acc = 0.0f64;
        enumerate_rest(&mut counts, 1, n - c0 as u32, &mut |cv| {
            let base = ln_fact[n as usize]
                - cv.iter().map(|&c| ln_fact[c as usize]).sum::<f64>();
            let lp = log_prob(cv, &ln_p, base);
            let lq = log_prob(cv, &ln_q, base);
            acc += abs_diff_exp(lp, lq);
        });
        acc
    });
    Ok(0.5 * kahan_sum(partial.into_iter()))
}

fn log_prob(counts: &[u32], ln_mass: &[f64], base: f64) -> f64 {
    let mut s = base;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            if ln_mass[i] == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            s += c as f64 * ln_mass[i];
        }
    }
    s
}

/// `|e^a - e^b|` with max-subtraction so large negative logs stay accurate.
fn abs_diff_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    m.exp() * (1.0 - (-(a - b).abs()).exp())
}

fn enumerate_rest(counts: &mut Vec<u32>, pos: usize, left: u32, visit: &mut impl FnMut(&[u32])) {
    if pos == counts.len() - 1 {
        counts[pos] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[pos] = c;
        enumerate_rest(counts, pos + 1, left - c, visit);
    }
}

/// `C(n + k - 1, k - 1)` in floating point, for the state-space guard.
fn count_vectors(n: u32, k: usize) -> f64 {
    (ln_gamma(n as f64 + k as f64) - ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64)).exp()
}

/// Smallest `n <= n_max` with `tv(p^(x)n, q^(x)n) >= 1 - target_error`,
/// computed exactly; `None` if no such `n` exists below the cap.
///
/// Total variation between products is checked to be nondecreasing in `n`
/// along the way.
pub fn exact_sample_complexity(
    p: &Dist,
    q: &Dist,
    target_error: f64,
    n_max: u32,
) -> Result<Option<u32>, ComplexityError> {
    let states = count_vectors(n_max, p.alphabet_size());
    if states > MAX_STATES {
        return Err(ComplexityError::StateSpaceExceeded {
            states,
            limit: MAX_STATES,
        });
    }
    let threshold = 1.0 - target_error;
    let mut prev = 0.0f64;
    for n in 1..=n_max {
        let t = product_tv(p, q, n)?;
        assert!(
            t >= prev - 1e-12,
            "product tv must be nondecreasing in n (got {t} after {prev})"
        );
        prev = t;
        if t >= threshold {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// `1 / hel^2(p, q)`, the Hellinger predictor for simple testing.
pub fn predicted_sample_complexity(p: &Dist, q: &Dist) -> Result<f64, ComplexityError> {
    let h2 = hellinger_sq(p, q)?;
    if h2 <= 0.0 {
        return Err(ComplexityError::DegeneratePair);
    }
    Ok(1.0 / h2)
}

/// Options for attaching the exact oracle to a robust estimate.
#[derive(Debug, Clone, Copy)]
pub struct ExactOpts {
    pub target_error: f64,
    pub n_max: u32,
}

impl Default for ExactOpts {
    fn default() -> Self {
        ExactOpts {
            target_error: 0.1,
            n_max: 1000,
        }
    }
}

/// Robust sample-complexity estimate at contamination `eps`: builds the
/// LFD pair and returns the Hellinger predictor between them, optionally
/// with the exact oracle run on the pair.
///
/// Requires `eps <= tv(p, q) / 4`, the regime the comparison results
/// assume.
pub fn robust_complexity(
    p: &Dist,
    q: &Dist,
    eps: f64,
    model: Model,
    exact: Option<ExactOpts>,
) -> Result<ComplexityEstimate, ComplexityError> {
    let tv = tv_distance(p, q)?;
    if eps > tv / 4.0 {
        return Err(ComplexityError::EpsTooLarge {
            eps,
            quarter_tv: tv / 4.0,
        });
    }
    let lfd = build_lfds(p, q, eps, model)?;
    let hel_sq = lfd.hellinger_sq();
    if hel_sq <= 0.0 {
        return Err(ComplexityError::DegeneratePair);
    }
    let exact_n = match exact {
        Some(opts) => exact_sample_complexity(&lfd.p_star, &lfd.q_star, opts.target_error, opts.n_max)?,
        None => None,
    };
    Ok(ComplexityEstimate {
        model,
        eps,
        hel_sq,
        predicted_n: 1.0 / hel_sq,
        exact_n,
    })
}
