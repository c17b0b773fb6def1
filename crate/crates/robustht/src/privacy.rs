//! Private testing sample-complexity curves: the clipped divergence
//! `D_gamma`, the curve `n_priv(gamma) = 1/hel^2 + 1/D_gamma`, its grid
//! inverse `gamma*(n)`, and the transformation count
//! `N(eta) = min { n : n gamma*(n) <= 1/eta }`.
//!
//! The tight-constant form of the private sample complexity is unknown, so
//! `n_priv` uses the representative with constant 1; downstream claims are
//! shape and ordering statements, never absolute values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::ComplexityError;
use crate::dist::{hellinger_sq, Dist, DistError};

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("gamma must be positive, got {0}")]
    BadGamma(f64),
    #[error("grid must be sorted ascending and positive")]
    BadGrid,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
}

/// `D_gamma(p, q) = sum_i q(i) f_gamma(p(i)/q(i))` with
/// `f_gamma(t) = (t - 1) clamp(log t, -gamma, gamma)`.
///
/// Conventions at the boundary: a `p = q = 0` symbol contributes nothing;
/// `q = 0 < p` contributes `gamma * p`; `p = 0 < q` contributes
/// `gamma * q`.
pub fn d_gamma(p: &Dist, q: &Dist, gamma: f64) -> Result<f64, PrivacyError> {
    if gamma <= 0.0 {
        return Err(PrivacyError::BadGamma(gamma));
    }
    d_gamma_inner(p, q, Some(gamma))
}

/// The unclipped limit `gamma -> inf`: `sum q(i) (t - 1) log t`, which is
/// `+inf` as soon as `p` charges a `q`-null symbol.
pub fn d_gamma_unclipped(p: &Dist, q: &Dist) -> Result<f64, PrivacyError> {
    d_gamma_inner(p, q, None)
}

fn d_gamma_inner(p: &Dist, q: &Dist, gamma: Option<f64>) -> Result<f64, PrivacyError> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(PrivacyError::Dist(DistError::AlphabetMismatch(
            p.alphabet_size(),
            q.alphabet_size(),
        )));
    }
    let mut acc = 0.0f64;
    for i in 0..p.alphabet_size() {
        let (pi, qi) = (p.mass(i), q.mass(i));
        if pi == 0.0 && qi == 0.0 {
            continue;
        }
        acc += match (qi > 0.0, pi > 0.0, gamma) {
            (false, true, Some(g)) => g * pi,
            (false, true, None) => return Ok(f64::INFINITY),
            (true, false, Some(g)) => g * qi,
            (true, false, None) => return Ok(f64::INFINITY),
            (true, true, g) => {
                let t = pi / qi;
                let l = match g {
                    Some(g) => t.ln().clamp(-g, g),
                    None => t.ln(),
                };
                qi * (t - 1.0) * l
            }
            (false, false, _) => unreachable!(),
        };
    }
    Ok(acc)
}

/// Sample-complexity curves for private testing and the privacy-to-
/// robustness transformation, evaluated on user grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyCurve {
    pub hel_sq: f64,
    pub gamma_grid: Vec<f64>,
    /// `n_priv(gamma) = 1/hel^2 + 1/D_gamma`, nonincreasing in gamma.
    pub n_priv: Vec<f64>,
    pub n_grid: Vec<f64>,
    /// `gamma*(n)`: smallest grid gamma with `n_priv(gamma) <= n`;
    /// infinite when unattained. Nonincreasing in `n`.
    pub gamma_star: Vec<f64>,
    pub eta_grid: Vec<f64>,
    /// `N(eta)`: smallest grid n with `n gamma*(n) <= 1/eta`; infinite when
    /// unattained. Nondecreasing in `eta`.
    pub n_transformation: Vec<f64>,
}

fn check_grid(grid: &[f64]) -> Result<(), PrivacyError> {
    if grid.is_empty() || grid[0] <= 0.0 {
        return Err(PrivacyError::BadGrid);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PrivacyError::BadGrid);
    }
    Ok(())
}

/// Evaluate the privacy curves on sorted positive grids. The curves are
/// computed by grid scan, not root-finding: they may be discontinuous, and
/// the discontinuities are the object of interest.
pub fn privacy_curves(
    p: &Dist,
    q: &Dist,
    gamma_grid: &[f64],
    n_grid: &[f64],
    eta_grid: &[f64],
) -> Result<PrivacyCurve, PrivacyError> {
    check_grid(gamma_grid)?;
    check_grid(n_grid)?;
    check_grid(eta_grid)?;
    let hel_sq = hellinger_sq(p, q)?;
    if hel_sq <= 0.0 {
        return Err(PrivacyError::Complexity(ComplexityError::DegeneratePair));
    }
    let n_priv: Vec<f64> = gamma_grid
        .iter()
        .map(|&g| {
            let d = d_gamma(p, q, g)?;
            Ok(1.0 / hel_sq + if d > 0.0 { 1.0 / d } else { f64::INFINITY })
        })
        .collect::<Result<_, PrivacyError>>()?;
    assert!(
        n_priv.windows(2).all(|w| w[0] >= w[1] - 1e-9),
        "n_priv must be nonincreasing in gamma"
    );

    // n_priv is nonincreasing, so the feasible gammas form a suffix of the
    // grid and the first hit is the minimum.
    let gamma_star: Vec<f64> = n_grid
        .iter()
        .map(|&n| {
            gamma_grid
                .iter()
                .zip(&n_priv)
                .find(|(_, &np)| np <= n)
                .map(|(&g, _)| g)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    assert!(
        gamma_star.windows(2).all(|w| w[0] >= w[1]),
        "gamma* must be nonincreasing in n"
    );

    let n_transformation: Vec<f64> = eta_grid
        .iter()
        .map(|&eta| {
            n_grid
                .iter()
                .zip(&gamma_star)
                .find(|(&n, &gs)| gs.is_finite() && n * gs <= 1.0 / eta)
                .map(|(&n, _)| n)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    assert!(
        n_transformation.windows(2).all(|w| w[0] <= w[1]),
        "N(eta) must be nondecreasing in eta"
    );

    Ok(PrivacyCurve {
        hel_sq,
        gamma_grid: gamma_grid.to_vec(),
        n_priv,
        n_grid: n_grid.to_vec(),
        gamma_star,
        eta_grid: eta_grid.to_vec(),
        n_transformation,
    })
}

/// Log-spaced grid helper, endpoints included.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}
