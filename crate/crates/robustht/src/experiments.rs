//! Scripted reproductions of the named phenomena: the three-point jump
//! family, breakdown under underestimated contamination, sandwich
//! certification across models, the no-simulation witnesses, and the
//! random instance corpus they all share.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Dirichlet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{run_oblivious_trial, SimError, TestSpec, TrialReport};
use crate::dist::{set_membership, tv_distance, Dist, DistError, Model};
use crate::exec;
use crate::lfd::{build_lfds, LfdError, LfdPair};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("eps={eps} too large for the jump family (need eps1 > 0 and eps2 <= tv/4)")]
    EpsOutOfRange { eps: f64 },
    #[error("breakdown sign condition not met at eps={eps}, t={t} for {model}: expected {expected} expectation, got {value}")]
    SignConditionNotMet {
        model: Model,
        eps: f64,
        t: f64,
        expected: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Lfd(#[from] LfdError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The three-point family `p = (1/2 - 10e, 1/2 + 8e, 2e)`, `q = (1/2, 1/2, 0)`
/// with `tv(p, q) = 10e`, whose sample complexity jumps polynomially under
/// `o(eps)` perturbations of the contamination level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpFamilyInstance {
    pub eps: f64,
    pub t: f64,
    pub model: Model,
    pub p: Dist,
    pub q: Dist,
    /// Perturbed (smaller) contamination level.
    pub eps1: f64,
    /// Neutralizing contamination level.
    pub eps2: f64,
}

impl JumpFamilyInstance {
    pub fn base(eps: f64) -> Result<(Dist, Dist), ExperimentError> {
        if !(0.0..0.05).contains(&eps) {
            return Err(ExperimentError::EpsOutOfRange { eps });
        }
        let p = Dist::new(vec![0.5 - 10.0 * eps, 0.5 + 8.0 * eps, 2.0 * eps])?;
        let q = Dist::new(vec![0.5, 0.5, 0.0])?;
        Ok((p, q))
    }

    /// Model-specific levels: TV uses `eps2 = eps`; Huber `2e/(1+2e)`;
    /// subtractive `2e/(1-2e)`; in each case `eps1 = eps2 - eps^(1+t)`.
    pub fn new(eps: f64, t: f64, model: Model) -> Result<Self, ExperimentError> {
        let (p, q) = Self::base(eps)?;
        let eps2 = match model {
            Model::Tv => eps,
            Model::Hub => 2.0 * eps / (1.0 + 2.0 * eps),
            Model::Sub => 2.0 * eps / (1.0 - 2.0 * eps),
        };
        let eps1 = eps2 - eps.powf(1.0 + t);
        let quarter_tv = 10.0 * eps / 4.0;
        if !(eps1 > 0.0 && eps1 < eps2 && eps2 <= quarter_tv) {
            return Err(ExperimentError::EpsOutOfRange { eps });
        }
        Ok(JumpFamilyInstance {
            eps,
            t,
            model,
            p,
            q,
            eps1,
            eps2,
        })
    }
}

/// One grid row of the jump experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpRow {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub hel_sq_eps1: f64,
    pub hel_sq_eps2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpTable {
    pub model: Model,
    pub t: f64,
    pub rows: Vec<JumpRow>,
    /// Least-squares slope and R^2 of `log hel^2(eps1)` against `log eps`.
    pub slope_eps1: f64,
    pub r2_eps1: f64,
    /// Same for `hel^2(eps2)`.
    pub slope_eps2: f64,
    pub r2_eps2: f64,
}

/// Default grid from the slope-fit design: five points spanning two
/// decades.
pub fn default_jump_grid() -> Vec<f64> {
    vec![1e-2, 10f64.powf(-2.5), 1e-3, 10f64.powf(-3.5), 1e-4]
}

/// Build LFDs at `eps1` and `eps2` across the grid and fit log-log slopes
/// of the Hellinger divergences against `eps`.
pub fn jump_experiment(
    eps_grid: &[f64],
    t: f64,
    model: Model,
) -> Result<JumpTable, ExperimentError> {
    let rows = exec::map_collect(eps_grid.len(), |i| -> Result<JumpRow, ExperimentError> {
        let inst = JumpFamilyInstance::new(eps_grid[i], t, model)?;
        let l1 = build_lfds(&inst.p, &inst.q, inst.eps1, model)?;
        let l2 = build_lfds(&inst.p, &inst.q, inst.eps2, model)?;
        Ok(JumpRow {
            eps: inst.eps,
            eps1: inst.eps1,
            eps2: inst.eps2,
            hel_sq_eps1: l1.hellinger_sq(),
            hel_sq_eps2: l2.hellinger_sq(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let y1: Vec<f64> = rows.iter().map(|r| r.hel_sq_eps1.ln()).collect();
    let y2: Vec<f64> = rows.iter().map(|r| r.hel_sq_eps2.ln()).collect();
    let (slope_eps1, r2_eps1) = fit_line(&xs, &y1);
    let (slope_eps2, r2_eps2) = fit_line(&xs, &y2);
    Ok(JumpTable {
        model,
        t,
        rows,
        slope_eps1,
        r2_eps1,
        slope_eps2,
        r2_eps2,
    })
}

/// Least-squares line fit returning `(slope, R^2)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// The explicit in-set contaminated pair at level `eps2` from the
/// breakdown construction (the display closed forms; members of the
/// respective uncertainty sets by direct check).
pub fn breakdown_opposing_pair(
    eps: f64,
    model: Model,
) -> Result<(Dist, Dist, f64), ExperimentError> {
    let (p, q) = JumpFamilyInstance::base(eps)?;
    let (p2, q2, eps2) = match model {
        Model::Tv => {
            let e2 = eps;
            (
                vec![0.5 - 9.0 * eps, 0.5 + 8.0 * eps, eps],
                vec![0.5 - eps, 0.5, eps],
                e2,
            )
        }
        Model::Hub => {
            let e2 = 2.0 * eps / (1.0 + 2.0 * eps);
            (
                vec![
                    (1.0 - e2) * p.mass(0) + e2,
                    (1.0 - e2) * p.mass(1),
                    (1.0 - e2) * p.mass(2),
                ],
                vec![(1.0 - e2) / 2.0, (1.0 - e2) / 2.0, e2],
                e2,
            )
        }
        Model::Sub => {
            let e2 = 2.0 * eps / (1.0 - 2.0 * eps);
            (
                vec![
                    (1.0 + e2) * p.mass(0),
                    (1.0 + e2) * p.mass(1),
                    2.0 * eps * (1.0 + e2) - e2,
                ],
                vec![(1.0 - e2) / 2.0, (1.0 + e2) / 2.0, 0.0],
                e2,
            )
        }
    };
    let p2 = Dist::with_tolerance(p2, 1e-9)?;
    let q2 = Dist::with_tolerance(q2, 1e-9)?;
    debug_assert!(set_membership(&p2, &p, eps2, model));
    debug_assert!(set_membership(&q2, &q, eps2, model));
    Ok((p2, q2, eps2))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub model: Model,
    pub eps: f64,
    pub t: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Exact expectation of the `eps1`-calibrated statistic under the
    /// opposing `eps2`-contaminated distribution.
    pub expected_z: f64,
    /// Which error diverges: type-II for TV/Huber (data from `Q2`), type-I
    /// for subtractive (data from `P2`).
    pub diverging_error: &'static str,
    /// Monte Carlo curve of the diverging error over the `n` grid.
    pub error_curve: Vec<(u32, f64)>,
}

/// Exact expectation of the clipped log LR of `lfd` under `w`.
pub fn expected_statistic(lfd: &LfdPair, w: &Dist) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.alphabet_size() {
        let wi = w.mass(i);
        if wi == 0.0 {
            continue;
        }
        acc += wi * lfd.log_lr(i).expect("support mismatch");
    }
    acc
}

/// Breakdown experiment: calibrate the clipped LR test to `eps1`, face it
/// with the `eps2`-contaminated opposing distribution, check the sign of
/// the expected statistic, and trace the diverging error over `n`.
///
/// The sign condition is checked, not assumed: outside the theorem's
/// asymptotic regime it fails with [`ExperimentError::SignConditionNotMet`].
pub fn breakdown_experiment(
    eps: f64,
    t: f64,
    model: Model,
    n_grid: &[u32],
    trials: u32,
    seed: u64,
) -> Result<BreakdownReport, ExperimentError> {
    let inst = JumpFamilyInstance::new(eps, t, model)?;
    let lfd1 = build_lfds(&inst.p, &inst.q, inst.eps1, model)?;
    let (p2, q2, eps2) = breakdown_opposing_pair(eps, model)?;

    // TV/Huber break on the q side (test says p under Q2, expectation
    // positive); subtractive breaks on the p side (expectation negative).
    let (witness, expected_sign, diverging_error) = match model {
        Model::Tv | Model::Hub => (&q2, 1.0, "type2"),
        Model::Sub => (&p2, -1.0, "type1"),
    };
    let expected_z = expected_statistic(&lfd1, witness);
    if expected_z * expected_sign <= 0.0 {
        return Err(ExperimentError::SignConditionNotMet {
            model,
            eps,
            t,
            expected: if expected_sign > 0.0 { "positive" } else { "negative" },
            value: expected_z,
        });
    }

    let test = TestSpec::clipped_lr(lfd1);
    let error_curve = n_grid
        .iter()
        .map(|&n| -> Result<(u32, f64), ExperimentError> {
            let r: TrialReport = run_oblivious_trial(&p2, &q2, &test, n, trials, seed)?;
            let e = match model {
                Model::Tv | Model::Hub => r.type2,
                Model::Sub => r.type1,
            };
            Ok((n, e))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(BreakdownReport {
        model,
        eps,
        t,
        eps1: inst.eps1,
        eps2,
        expected_z,
        diverging_error,
        error_curve,
    })
}

/// Region sums of the Hellinger decomposition at thresholds `1 + delta0`
/// and `1/(1 + delta0)`, together with their surrogate forms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HellingerDecomposition {
    pub h_a_sq: f64,
    pub h_b_sq: f64,
    pub tilde_a_sq: f64,
    pub tilde_b_sq: f64,
}

/// Exact region sums `h_A^2 = sum_{p >= q} (sqrt p - sqrt q)^2` (and the B
/// analogue) plus the surrogates `p(A2) + sum_{A1} (p-q)^2/p` and
/// `q(B2) + sum_{B1} (p-q)^2/q`, with region thresholds parameterised by
/// `delta0` (the classical statement is `delta0 = 1`).
pub fn approx_hellinger_decomposition(p: &Dist, q: &Dist, delta0: f64) -> HellingerDecomposition {
    assert!(delta0 > 0.0);
    let hi = 1.0 + delta0;
    let lo = 1.0 / (1.0 + delta0);
    let mut d = HellingerDecomposition {
        h_a_sq: 0.0,
        h_b_sq: 0.0,
        tilde_a_sq: 0.0,
        tilde_b_sq: 0.0,
    };
    for i in 0..p.alphabet_size() {
        let (pi, qi) = (p.mass(i), q.mass(i));
        if pi == 0.0 && qi == 0.0 {
            continue;
        }
        let hel = (pi.sqrt() - qi.sqrt()).powi(2);
        let r = if qi > 0.0 { pi / qi } else { f64::INFINITY };
        if r >= 1.0 {
            d.h_a_sq += hel;
            if r >= hi {
                d.tilde_a_sq += pi;
            } else {
                d.tilde_a_sq += (pi - qi) * (pi - qi) / pi;
            }
        } else {
            d.h_b_sq += hel;
            if r < lo {
                d.tilde_b_sq += qi;
            } else {
                d.tilde_b_sq += (pi - qi) * (pi - qi) / qi;
            }
        }
    }
    d
}

/// Check that the subtractive LFD contributions to the Hellinger
/// divergence from `A = {p >= q}` and `B = {p < q}` at the smaller level
/// dominate the larger-level contributions up to the universal constant 2.
pub fn monotone_contribution_check(
    p: &Dist,
    q: &Dist,
    eps1: f64,
    eps2: f64,
) -> Result<bool, ExperimentError> {
    assert!(eps1 <= eps2);
    let region_sums = |lfd: &LfdPair| {
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..p.alphabet_size() {
            let (pi, qi) = (p.mass(i), q.mass(i));
            if pi == 0.0 && qi == 0.0 {
                continue;
            }
            let hel = (lfd.p_star.mass(i).sqrt() - lfd.q_star.mass(i).sqrt()).powi(2);
            if qi == 0.0 || pi / qi >= 1.0 {
                a += hel;
            } else {
                b += hel;
            }
        }
        (a, b)
    };
    let l1 = build_lfds(p, q, eps1, Model::Sub)?;
    let l2 = build_lfds(p, q, eps2, Model::Sub)?;
    let (a1, b1) = region_sums(&l1);
    let (a2, b2) = region_sums(&l2);
    Ok(a1 >= a2 / 2.0 - 1e-12 && b1 >= b2 / 2.0 - 1e-12)
}

/// A corpus instance: a Dirichlet-random pair with a contamination level
/// in `(0, tv/4]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusInstance {
    pub p: Dist,
    pub q: Dist,
    pub eps: f64,
}

/// Seeded Dirichlet(1,...,1) corpus over alphabets `2..=8`, rejection
/// filtered so the pair is mutually absolutely continuous (Dirichlet draws
/// are almost surely positive) and `eps <= tv/4`.
pub fn random_corpus(count: usize, seed: u64) -> Vec<CorpusInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = 2 + rng.gen_range(0..7usize);
        let dir = Dirichlet::new(&vec![1.0; k]).unwrap();
        let p = Dist::normalized(dir.sample(&mut rng)).unwrap();
        let q = Dist::normalized(dir.sample(&mut rng)).unwrap();
        let tv = tv_distance(&p, &q).unwrap();
        let eps = rng.gen::<f64>() * tv / 4.0;
        if eps <= 1e-8 {
            continue;
        }
        out.push(CorpusInstance { p, q, eps });
    }
    out
}

/// Per-instance sandwich certification outcome; the ratio fields record the
/// realized slack of the `(2+delta0)` and `(1+delta0)` rescaled bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichReport {
    pub instance: usize,
    pub eps: f64,
    /// `hel^2(TV(eps)) <= hel^2(Hub(eps))`.
    pub tv_below_hub: bool,
    /// `hel^2(Hub(eps))/2 <= hel^2(TV(eps/2))`.
    pub hub_half_below_tv_half: bool,
    /// `cl_TV(eps/2) <= cl_Hub(eps)` and `cu_Hub(eps) <= cu_TV(eps/2)`.
    pub clip_ordering: bool,
    /// `hel^2(Sub(eps)) >= hel^2(TV(eps))` and `>= hel^2(Hub(eps))`.
    pub sub_hardest: bool,
    /// Monotone contribution check at `(eps/2, eps)` with constant 2.
    pub monotone_contribution: bool,
    /// `~h^2(Sub((2+delta0) eps)) / ~h^2(TV(eps))`, recorded (the paper's
    /// constants are delta0-dependent and unspecified).
    pub sub_tv_ratio: f64,
    /// `~h^2(Sub((1+delta0) eps)) / ~h^2(Hub(eps))`, recorded.
    pub sub_hub_ratio: f64,
}

impl SandwichReport {
    pub fn all_hold(&self) -> bool {
        self.tv_below_hub
            && self.hub_half_below_tv_half
            && self.clip_ordering
            && self.sub_hardest
            && self.monotone_contribution
    }
}

/// Run the sandwich certification over a corpus.
pub fn sandwich_certify(
    corpus: &[CorpusInstance],
    delta0: f64,
) -> Result<Vec<SandwichReport>, ExperimentError> {
    exec::map_collect(corpus.len(), |idx| -> Result<SandwichReport, ExperimentError> {
        let CorpusInstance { p, q, eps } = &corpus[idx];
        let eps = *eps;
        let tv_lfd = build_lfds(p, q, eps, Model::Tv)?;
        let hub_lfd = build_lfds(p, q, eps, Model::Hub)?;
        let sub_lfd = build_lfds(p, q, eps, Model::Sub)?;
        let tv_half = build_lfds(p, q, eps / 2.0, Model::Tv)?;
        let (h_tv, h_hub, h_sub, h_tv_half) = (
            tv_lfd.hellinger_sq(),
            hub_lfd.hellinger_sq(),
            sub_lfd.hellinger_sq(),
            tv_half.hellinger_sq(),
        );
        let clips_hub = hub_lfd.clips;
        let clips_tv_half = tv_half.clips;

        let tilde = |l: &LfdPair| {
            let d = approx_hellinger_decomposition(&l.p_star, &l.q_star, delta0);
            d.tilde_a_sq + d.tilde_b_sq
        };
        // The rescaled subtractive levels may exceed tv/4; the LFDs still
        // exist as long as the sets stay separated.
        let sub_tv_ratio = match build_lfds(p, q, (2.0 + delta0) * eps, Model::Sub) {
            Ok(l) => tilde(&l) / tilde(&tv_lfd),
            Err(_) => f64::NAN,
        };
        let sub_hub_ratio = match build_lfds(p, q, (1.0 + delta0) * eps, Model::Sub) {
            Ok(l) => tilde(&l) / tilde(&hub_lfd),
            Err(_) => f64::NAN,
        };

        Ok(SandwichReport {
            instance: idx,
            eps,
            tv_below_hub: h_tv <= h_hub + 1e-12,
            hub_half_below_tv_half: 0.5 * h_hub <= h_tv_half + 1e-12,
            clip_ordering: clips_tv_half.lower <= clips_hub.lower + 1e-12
                && clips_hub.upper <= clips_tv_half.upper + 1e-12,
            sub_hardest: h_sub >= h_tv - 1e-12 && h_sub >= h_hub - 1e-12,
            monotone_contribution: monotone_contribution_check(p, q, eps / 2.0, eps)?,
            sub_tv_ratio,
            sub_hub_ratio,
        })
    })
    .into_iter()
    .collect()
}

/// The necessity of the delta0 slack in the subtractive/TV comparison: on
/// the jump family with `eps1 = e - e^{1+t}` and `eps2 = 2e/(1-2e) - e^{1+t}`,
/// the ratio `hel^2(Sub(2 eps1)) / hel^2(TV(eps1))` diverges as `e -> 0`,
/// so no constant-2 rescaling can work. Returns `(eps, ratio)` rows.
pub fn delta0_necessity(eps_grid: &[f64], t: f64) -> Result<Vec<(f64, f64)>, ExperimentError> {
    eps_grid
        .iter()
        .map(|&eps| {
            let (p, q) = JumpFamilyInstance::base(eps)?;
            let eps1 = eps - eps.powf(1.0 + t);
            let tv_lfd = build_lfds(&p, &q, eps1, Model::Tv)?;
            let sub_lfd = build_lfds(&p, &q, 2.0 * eps1, Model::Sub)?;
            Ok((eps, sub_lfd.hellinger_sq() / tv_lfd.hellinger_sq()))
        })
        .collect()
}

/// One no-simulation witness: a membership pattern that must reproduce
/// exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoSimWitness {
    pub part: &'static str,
    pub c: f64,
    pub description: String,
    pub expected_member: bool,
    pub member: bool,
}

impl NoSimWitness {
    pub fn holds(&self) -> bool {
        self.member == self.expected_member
    }
}

/// The explicit two-point witnesses behind the no-simulation lemma, checked
/// with `set_membership` and engine-built LFDs, for each scaling constant
/// in `cs`. `eps` must satisfy `(max c) * eps < 1` and
/// `(max c + 1) * eps < 0.1` so every strict inequality in the patterns is
/// actually strict.
pub fn no_simulation_witnesses(eps: f64, cs: &[f64]) -> Result<Vec<NoSimWitness>, ExperimentError> {
    let mut out = Vec::new();
    let mut push = |part: &'static str, c: f64, desc: String, expected: bool, member: bool| {
        out.push(NoSimWitness {
            part,
            c,
            description: desc,
            expected_member: expected,
            member,
        });
    };

    for &c in cs {
        assert!(c * eps < 1.0, "need C*eps < 1");
        // (i) TV(eps) not within Hub(C eps): r = (0,1) around p = (eps, 1-eps).
        let p = Dist::new(vec![eps, 1.0 - eps])?;
        let r = Dist::new(vec![0.0, 1.0])?;
        push(
            "i-tv",
            1.0,
            "r in TV(eps) around (eps, 1-eps)".into(),
            true,
            set_membership(&r, &p, eps, Model::Tv),
        );
        push(
            "i-hub",
            c,
            "r not in Hub(C eps)".into(),
            false,
            set_membership(&r, &p, c * eps, Model::Hub),
        );
        // (i) subtractive side: r = (eps, 1-eps) around p = (0, 1).
        let p0 = Dist::new(vec![0.0, 1.0])?;
        let r1 = Dist::new(vec![eps, 1.0 - eps])?;
        push(
            "i-sub-tv",
            1.0,
            "r in TV(eps) around (0, 1)".into(),
            true,
            set_membership(&r1, &p0, eps, Model::Tv),
        );
        push(
            "i-sub",
            c,
            "r not in Sub(C eps): cannot charge a null symbol".into(),
            false,
            set_membership(&r1, &p0, c * eps, Model::Sub),
        );
        // (ii) Hub(c eps) not within Sub(eps): r = (1 - ce, ce) around (1, 0).
        let point = Dist::new(vec![1.0, 0.0])?;
        let hub_member = Dist::new(vec![1.0 - c * eps, c * eps])?;
        push(
            "ii-hub",
            c,
            "mixture in Hub(c eps) around (1, 0)".into(),
            true,
            set_membership(&hub_member, &point, c * eps, Model::Hub),
        );
        push(
            "ii-sub",
            c,
            "mixture not in Sub(eps)".into(),
            false,
            set_membership(&hub_member, &point, eps, Model::Sub),
        );
        // (ii) Sub(eps) not within Hub(C eps): r = (0,1) around (a, 1-a),
        // a = eps/(1+eps).
        let a = eps / (1.0 + eps);
        let pa = Dist::new(vec![a, 1.0 - a])?;
        let r0 = Dist::new(vec![0.0, 1.0])?;
        push(
            "ii-sub-member",
            1.0,
            "r in Sub(eps) around (a, 1-a)".into(),
            true,
            set_membership(&r0, &pa, eps, Model::Sub),
        );
        push(
            "ii-hub-non",
            c,
            "r not in Hub(C eps)".into(),
            false,
            set_membership(&r0, &pa, c * eps, Model::Hub),
        );

        // (iv)/(v) LFD simulation failures on p = (0,1), q = (10e, 1-10e).
        let p = Dist::new(vec![0.0, 1.0])?;
        let q = Dist::new(vec![10.0 * eps, 1.0 - 10.0 * eps])?;

        let tv_lfd = build_lfds(&p, &q, eps, Model::Tv)?;
        // Engine output matches the closed forms (eps,1-eps), (9e,1-9e).
        debug_assert!((tv_lfd.p_star.mass(0) - eps).abs() < 1e-12);
        debug_assert!((tv_lfd.q_star.mass(0) - 9.0 * eps).abs() < 1e-12);
        push(
            "iv-hub",
            c,
            "TV-LFD q* not in Hub(C eps) around q".into(),
            false,
            set_membership(&tv_lfd.q_star, &q, c * eps, Model::Hub),
        );
        push(
            "iv-sub",
            c,
            "TV-LFD p* not in Sub(C eps) around p".into(),
            false,
            set_membership(&tv_lfd.p_star, &p, c * eps, Model::Sub),
        );

        let hub_lfd = build_lfds(&p, &q, eps, Model::Hub)?;
        debug_assert!((hub_lfd.p_star.mass(0) - eps).abs() < 1e-12);
        debug_assert!((hub_lfd.q_star.mass(0) - 10.0 * eps * (1.0 - eps)).abs() < 1e-12);
        push(
            "v-hub-sub",
            c,
            "Hub-LFD p* not in Sub(C eps) around p".into(),
            false,
            set_membership(&hub_lfd.p_star, &p, c * eps, Model::Sub),
        );

        let sub_lfd = build_lfds(&p, &q, eps, Model::Sub)?;
        debug_assert!((sub_lfd.q_star.mass(0) - (9.0 * eps + 10.0 * eps * eps)).abs() < 1e-12);
        push(
            "v-sub-hub",
            c,
            "Sub-LFD q* not in Hub(C eps) around q".into(),
            false,
            set_membership(&sub_lfd.q_star, &q, c * eps, Model::Hub),
        );
    }
    Ok(out)
}

/// Part (iii) of the containment lemma on random members: Huber and
/// subtractive members are TV members at the same level. Returns the number
/// of instances checked.
pub fn containment_check(count: usize, seed: u64) -> usize {
    let corpus = random_corpus(count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut checked = 0;
    for inst in &corpus {
        let k = inst.p.alphabet_size();
        let dir = Dirichlet::new(&vec![1.0; k]).unwrap();
        let h = Dist::normalized(dir.sample(&mut rng)).unwrap();
        let eps = inst.eps;
        let hub: Vec<f64> = inst
            .p
            .probs()
            .iter()
            .zip(h.probs())
            .map(|(a, b)| (1.0 - eps) * a + eps * b)
            .collect();
        let hub = Dist::normalized(hub).unwrap();
        assert!(set_membership(&hub, &inst.p, eps, Model::Hub));
        assert!(set_membership(&hub, &inst.p, eps, Model::Tv));
        checked += 1;
    }
    checked
}

/// All three models' LFD Hellinger divergences coincide as the
/// contamination vanishes; returns the max relative spread over the models
/// at level `eps`.
pub fn vanishing_eps_spread(p: &Dist, q: &Dist, eps: f64) -> Result<f64, ExperimentError> {
    let h: Vec<f64> = Model::ALL
        .iter()
        .map(|&m| Ok(build_lfds(p, q, eps, m)?.hellinger_sq()))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let lo = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = h.iter().cloned().fold(0.0f64, f64::max);
    Ok(hi / lo - 1.0)
}
