//! Finite discrete distributions and the divergences, likelihood-ratio
//! partitions, and membership predicates the rest of the crate consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::kahan_sum;

/// Strict validity tolerance on the total mass of a [`Dist`].
pub const MASS_TOL: f64 = 1e-12;
/// Looser tolerance accepted by [`Dist::normalized`], which rescales.
pub const NORMALIZE_TOL: f64 = 1e-9;
/// Tolerance used by membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("distribution must have at least one symbol")]
    Empty,
    #[error("negative mass {mass} at index {index}")]
    NegativeMass { index: usize, mass: f64 },
    #[error("masses sum to {sum}, which is outside tolerance {tol}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("alphabet size mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("mass is not finite at index {0}")]
    NotFinite(usize),
}

/// A probability distribution over the alphabet `0..k`.
///
/// Masses are binary64 reals; immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist {
    probs: Vec<f64>,
}

impl Dist {
    /// Strict constructor: nonnegative masses summing to 1 within `1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self, DistError> {
        Self::with_tolerance(probs, MASS_TOL)
    }

    /// Constructor with an explicit sum tolerance. Masses are stored as
    /// given, never rescaled.
    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self, DistError> {
        validate(&probs)?;
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > tol {
            return Err(DistError::NotNormalized { sum, tol });
        }
        Ok(Dist { probs })
    }

    /// Rescales inputs whose sum deviates from 1 by at most `1e-9` and
    /// rejects larger deviations, so text-parsed inputs are tolerated
    /// without silently hiding bugs.
    pub fn normalized(probs: Vec<f64>) -> Result<Self, DistError> {
        validate(&probs)?;
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZE_TOL {
            return Err(DistError::NotNormalized {
                sum,
                tol: NORMALIZE_TOL,
            });
        }
        let probs = probs.into_iter().map(|x| x / sum).collect();
        Ok(Dist { probs })
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Total mass on an index set.
    pub fn mass_on(&self, indices: &[usize]) -> f64 {
        kahan_sum(indices.iter().map(|&i| self.probs[i]))
    }

    pub fn uniform(k: usize) -> Self {
        Dist {
            probs: vec![1.0 / k as f64; k],
        }
    }

    fn check_pair(&self, other: &Dist) -> Result<(), DistError> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(DistError::AlphabetMismatch(
                self.alphabet_size(),
                other.alphabet_size(),
            ));
        }
        Ok(())
    }
}

fn validate(probs: &[f64]) -> Result<(), DistError> {
    if probs.is_empty() {
        return Err(DistError::Empty);
    }
    for (i, &x) in probs.iter().enumerate() {
        if !x.is_finite() {
            return Err(DistError::NotFinite(i));
        }
        if x < 0.0 {
            return Err(DistError::NegativeMass { index: i, mass: x });
        }
    }
    Ok(())
}

/// Contamination model for an uncertainty set around a centre distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Additive mixtures: `p' >= (1-eps) p` coordinate-wise.
    Hub,
    /// Total-variation ball of radius `eps`.
    Tv,
    /// Conditional deletion: `p' <= (1+eps) p` coordinate-wise.
    Sub,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Hub, Model::Tv, Model::Sub];

    pub fn name(self) -> &'static str {
        match self {
            Model::Hub => "hub",
            Model::Tv => "tv",
            Model::Sub => "sub",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hub" | "huber" => Ok(Model::Hub),
            "tv" => Ok(Model::Tv),
            "sub" | "subtractive" => Ok(Model::Sub),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// Total variation distance `(1/2) sum_i |p(i) - q(i)|`.
pub fn tv_distance(p: &Dist, q: &Dist) -> Result<f64, DistError> {
    p.check_pair(q)?;
    Ok(0.5 * kahan_sum(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs())))
}

/// Squared Hellinger divergence `sum_i (sqrt p(i) - sqrt q(i))^2`.
///
/// Accepts probability distributions; see [`hellinger_sq_measures`] for the
/// variant that accepts unnormalized nonnegative measures.
pub fn hellinger_sq(p: &Dist, q: &Dist) -> Result<f64, DistError> {
    p.check_pair(q)?;
    hellinger_sq_measures(&p.probs, &q.probs)
}

/// Squared Hellinger divergence between nonnegative measures that need not
/// integrate to 1 (the uncalibrated-LFD lemma checks evaluate it on such
/// measures).
pub fn hellinger_sq_measures(p: &[f64], q: &[f64]) -> Result<f64, DistError> {
    if p.len() != q.len() {
        return Err(DistError::AlphabetMismatch(p.len(), q.len()));
    }
    for (i, &x) in p.iter().chain(q.iter()).enumerate() {
        if x < 0.0 {
            return Err(DistError::NegativeMass {
                index: i % p.len(),
                mass: x,
            });
        }
    }
    Ok(kahan_sum(p.iter().zip(q).map(|(a, b)| {
        let d = a.sqrt() - b.sqrt();
        d * d
    })))
}

/// Likelihood-ratio partition of the support of a pair `(p, q)`.
///
/// Indices with `p(i) = q(i) = 0` belong to no set: they affect nothing.
/// `bar_high` collects infinite-ratio points (`p > 0, q = 0`) and `bar_low`
/// the zero-ratio points (`p = 0, q > 0`); these always land in `high` and
/// `low` respectively. Finite ratios exactly equal to a clip go to `mid`
/// (the LFD formulas are continuous at the clips, so the tie side is free).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LrPartition {
    pub low: Vec<usize>,
    pub mid: Vec<usize>,
    pub high: Vec<usize>,
    pub bar_low: Vec<usize>,
    pub bar_high: Vec<usize>,
}

impl LrPartition {
    /// All support indices, in order.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .low
            .iter()
            .chain(&self.mid)
            .chain(&self.high)
            .copied()
            .collect();
        s.sort_unstable();
        s
    }
}

/// Classify each support index of `(p, q)` by `p(i)/q(i)` against the clips.
///
/// `lower` may be 0 and `upper` may be infinite; `lower < 1 < upper` is
/// required.
pub fn lr_partition(p: &Dist, q: &Dist, lower: f64, upper: f64) -> Result<LrPartition, DistError> {
    p.check_pair(q)?;
    assert!(
        lower < 1.0 && 1.0 < upper,
        "clips must satisfy lower < 1 < upper"
    );
    let mut part = LrPartition {
        low: vec![],
        mid: vec![],
        high: vec![],
        bar_low: vec![],
        bar_high: vec![],
    };
    for i in 0..p.alphabet_size() {
        let (pi, qi) = (p.mass(i), q.mass(i));
        if pi == 0.0 && qi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            part.bar_high.push(i);
            part.high.push(i);
        } else if pi == 0.0 {
            part.bar_low.push(i);
            part.low.push(i);
        } else {
            let r = pi / qi;
            if r < lower {
                part.low.push(i);
            } else if r > upper {
                part.high.push(i);
            } else {
                part.mid.push(i);
            }
        }
    }
    Ok(part)
}

/// Whether `candidate` lies in the `model` uncertainty set of radius `eps`
/// around `center`, with tolerance `1e-12`.
pub fn set_membership(candidate: &Dist, center: &Dist, eps: f64, model: Model) -> bool {
    assert!((0.0..1.0).contains(&eps), "eps must satisfy 0 <= eps < 1");
    if candidate.alphabet_size() != center.alphabet_size() {
        return false;
    }
    match model {
        Model::Hub => candidate
            .probs
            .iter()
            .zip(&center.probs)
            .all(|(c, p)| *c >= (1.0 - eps) * p - MEMBERSHIP_TOL),
        Model::Tv => tv_distance(candidate, center).unwrap() <= eps + MEMBERSHIP_TOL,
        Model::Sub => candidate
            .probs
            .iter()
            .zip(&center.probs)
            .all(|(c, p)| *c <= (1.0 + eps) * p + MEMBERSHIP_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn jump_family(eps: f64) -> (Dist, Dist) {
        let p = Dist::new(vec![0.5 - 10.0 * eps, 0.5 + 8.0 * eps, 2.0 * eps]).unwrap();
        let q = Dist::new(vec![0.5, 0.5, 0.0]).unwrap();
        (p, q)
    }

    fn random_pair(rng: &mut impl Rng, k: usize) -> (Dist, Dist) {
        let draw = |rng: &mut dyn RngCore| {
            let mut v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().ln())).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            Dist::normalized(v).unwrap()
        };
        (draw(rng), draw(rng))
    }

    #[test]
    fn tv_identity_is_zero() {
        let p = Dist::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn tv_on_jump_family() {
        let (p, q) = jump_family(0.01);
        assert!((tv_distance(&p, &q).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tv_by_hand() {
        let p = Dist::new(vec![0.2, 0.8]).unwrap();
        let q = Dist::new(vec![0.5, 0.5]).unwrap();
        assert!((tv_distance(&p, &q).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn hellinger_extremes() {
        let p = Dist::new(vec![1.0, 0.0]).unwrap();
        let q = Dist::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(hellinger_sq(&p, &p).unwrap(), 0.0);
        assert_eq!(hellinger_sq(&p, &q).unwrap(), 2.0);
    }

    #[test]
    fn hellinger_on_displayed_tv_pair() {
        // The displayed TV pair for the jump family at level eps has its
        // symbol-3 masses equal, so only symbols 1 and 2 contribute.
        let eps = 0.01f64;
        let p_star = vec![0.5 - 9.0 * eps, 0.5 + 8.0 * eps, eps];
        let q_star = vec![0.5 - eps, 0.5, eps];
        let got = hellinger_sq_measures(&p_star, &q_star).unwrap();
        let want = ((0.5 - 9.0 * eps).sqrt() - (0.5 - eps).sqrt()).powi(2)
            + ((0.5 + 8.0 * eps).sqrt() - 0.5f64.sqrt()).powi(2);
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn hellinger_accepts_subprobability_measures() {
        let a = vec![0.3, 0.2];
        let b = vec![0.5, 0.4];
        assert!(hellinger_sq_measures(&a, &b).unwrap() > 0.0);
        assert_eq!(
            hellinger_sq_measures(&[0.3, -0.1], &[0.1, 0.1]).unwrap_err(),
            DistError::NegativeMass {
                index: 1,
                mass: -0.1
            }
        );
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let p = Dist::new(vec![1.0]).unwrap();
        let q = Dist::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            tv_distance(&p, &q),
            Err(DistError::AlphabetMismatch(1, 2))
        ));
    }

    #[test]
    fn normalized_rescales_small_deviation() {
        let d = Dist::normalized(vec![0.5 + 3e-10, 0.5]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Dist::normalized(vec![0.5 + 1e-6, 0.5]).is_err());
        assert!(Dist::new(vec![0.5 + 1e-10, 0.5]).is_err());
    }

    #[test]
    fn partition_all_mid_when_clips_wide() {
        let p = Dist::new(vec![0.4, 0.6]).unwrap();
        let q = Dist::new(vec![0.5, 0.5]).unwrap();
        let part = lr_partition(&p, &q, 0.1, 10.0).unwrap();
        assert!(part.low.is_empty() && part.high.is_empty());
        assert_eq!(part.mid, vec![0, 1]);
    }

    #[test]
    fn partition_jump_family() {
        let (p, q) = jump_family(0.01);
        let part = lr_partition(&p, &q, 0.5, 2.0).unwrap();
        assert_eq!(part.high, vec![2]);
        assert_eq!(part.bar_high, vec![2]);
        assert_eq!(part.mid, vec![0, 1]);
        assert!(part.bar_low.is_empty());
    }

    #[test]
    fn partition_matches_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (p, q) = random_pair(&mut rng, 5);
        let (lo, hi) = (0.7, 1.4);
        let part = lr_partition(&p, &q, lo, hi).unwrap();
        for i in 0..5 {
            let r = p.mass(i) / q.mass(i);
            let in_low = part.low.contains(&i);
            let in_mid = part.mid.contains(&i);
            let in_high = part.high.contains(&i);
            assert_eq!(in_low, r < lo);
            assert_eq!(in_high, r > hi);
            assert_eq!(in_mid, (lo..=hi).contains(&r));
            assert_eq!(in_low as u8 + in_mid as u8 + in_high as u8, 1);
        }
    }

    #[test]
    fn wider_clips_shrink_low_and_high() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (p, q) = random_pair(&mut rng, 6);
            let narrow = lr_partition(&p, &q, 0.8, 1.3).unwrap();
            let wide = lr_partition(&p, &q, 0.5, 2.5).unwrap();
            assert!(wide.low.iter().all(|i| narrow.low.contains(i)));
            assert!(wide.high.iter().all(|i| narrow.high.contains(i)));
            assert_eq!(narrow.support(), wide.support());
        }
    }

    #[test]
    fn membership_trivial_and_witnesses() {
        let eps = 0.01;
        let center = Dist::new(vec![eps, 1.0 - eps]).unwrap();
        for model in Model::ALL {
            assert!(set_membership(&center, &center, 0.3, model));
        }
        // r is eps-far in TV but outside every Huber set of radius C*eps < 1.
        let r = Dist::new(vec![0.0, 1.0]).unwrap();
        assert!(set_membership(&r, &center, eps, Model::Tv));
        for c in [2.0, 10.0, 50.0] {
            assert!(!set_membership(&r, &center, c * eps, Model::Hub));
        }
        // A subtractive adversary cannot assign mass to a null symbol.
        let zero_center = Dist::new(vec![0.0, 1.0]).unwrap();
        let cand = Dist::new(vec![eps, 1.0 - eps]).unwrap();
        for e in [0.1, 0.5, 0.9] {
            assert!(!set_membership(&cand, &zero_center, e, Model::Sub));
        }
    }

    #[test]
    fn hub_and_sub_members_are_tv_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let (p, h) = random_pair(&mut rng, 4);
            let eps = rng.gen_range(0.0..0.5);
            let hub: Vec<f64> = p
                .probs()
                .iter()
                .zip(h.probs())
                .map(|(a, b)| (1.0 - eps) * a + eps * b)
                .collect();
            let hub = Dist::normalized(hub).unwrap();
            assert!(set_membership(&hub, &p, eps, Model::Hub));
            assert!(set_membership(&hub, &p, eps, Model::Tv));

            // Random subtractive member: delete eps/(1+eps) of the mass.
            let budget = eps / (1.0 + eps);
            let mut deleted = vec![0.0; 4];
            let mut left = budget;
            for i in 0..4 {
                let cap = p.mass(i).min(left);
                let d = rng.gen::<f64>() * cap;
                deleted[i] = d;
                left -= d;
            }
            // Dump any unspent budget on the largest coordinate that fits.
            if left > 0.0 {
                for i in 0..4 {
                    let cap = p.mass(i) - deleted[i];
                    let d = cap.min(left);
                    deleted[i] += d;
                    left -= d;
                }
            }
            let sub: Vec<f64> = (0..4)
                .map(|i| (1.0 + eps) * (p.mass(i) - deleted[i]))
                .collect();
            if let Ok(sub) = Dist::normalized(sub) {
                assert!(set_membership(&sub, &p, eps, Model::Sub));
                assert!(set_membership(&sub, &p, eps, Model::Tv));
            }
        }
    }

    #[test]
    fn hellinger_tv_bracket_on_random_pairs() {
        // hel^2 in [tv^2, 2 tv] on 10^4 random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..10_000 {
            let k = 2 + (i % 7);
            let (p, q) = random_pair(&mut rng, k);
            let t = tv_distance(&p, &q).unwrap();
            let h2 = hellinger_sq(&p, &q).unwrap();
            assert!(h2 >= t * t - 1e-12, "hel2={h2} tv={t}");
            assert!(h2 <= 2.0 * t + 1e-12, "hel2={h2} tv={t}");
            // Symmetry.
            let h2r = hellinger_sq(&q, &p).unwrap();
            assert!((h2 - h2r).abs() < 1e-14);
            let tr = tv_distance(&q, &p).unwrap();
            assert!((t - tr).abs() < 1e-14);
        }
    }
}
