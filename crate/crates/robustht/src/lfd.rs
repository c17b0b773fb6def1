//! Clip calibration and least favourable distribution construction for the
//! Huber, TV, and subtractive contamination models.
//!
//! The one-sided calibration residuals are piecewise closed forms in the
//! clip: between consecutive likelihood-ratio breakpoints the high/low sets
//! are constant and each equation solves in closed form, so the solver sorts
//! the distinct finite ratios, solves segment-wise, and keeps the root that
//! lands inside its own segment. This is exact to rounding and needs no
//! iteration tuning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{
    hellinger_sq, lr_partition, set_membership, tv_distance, Dist, DistError, LrPartition, Model,
};
use crate::exec::kahan_sum;

/// Maximum allowed one-sided calibration residual on a solved clip.
pub const CALIBRATION_TOL: f64 = 1e-10;
/// Tolerance on the total mass of a constructed LFD.
pub const LFD_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LfdError {
    #[error("contamination level {eps} out of range (need 0 < eps < 1)")]
    BadEps { eps: f64 },
    #[error("uncertainty sets overlap for model {model} at eps={eps} (tv={tv}); the robust problem is degenerate")]
    SetsOverlap { model: Model, eps: f64, tv: f64 },
    #[error("no finite {side} clip solves the {model} calibration equation")]
    NoFiniteClip { model: Model, side: &'static str },
    #[error("asymmetric contamination levels are only supported for the subtractive model, not {0}")]
    AsymmetricUnsupported(Model),
    #[error("calibration residual {residual} exceeds tolerance on the {side} clip")]
    CalibrationFailed { side: &'static str, residual: f64 },
    #[error("distribution does not lie in the stated uncertainty set")]
    MembershipViolated,
    #[error("inner radius {eps0} exceeds outer radius {eps}")]
    EpsOrder { eps0: f64, eps: f64 },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Lower/upper likelihood-ratio clips with extended endpoints.
///
/// `lower = 0` only in the subtractive degenerate-low regime and
/// `upper = inf` only in the degenerate-high regime, where the
/// corresponding fixed-point equation has no finite solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipPair {
    #[serde(with = "extended_real")]
    pub lower: f64,
    #[serde(with = "extended_real")]
    pub upper: f64,
    #[serde(default)]
    pub degenerate_low: bool,
    #[serde(default)]
    pub degenerate_high: bool,
}

impl ClipPair {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower < 1.0 && upper > 1.0, "clips must satisfy lower < 1 < upper");
        ClipPair {
            lower,
            upper,
            degenerate_low: lower == 0.0,
            degenerate_high: upper.is_infinite(),
        }
    }
}

/// Serialize infinite endpoints as the string `"inf"` so the JSON output
/// round-trips.
mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(de::Error::custom(format!("bad extended real '{s}'"))),
        }
    }
}

/// A calibrated least-favourable pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfdPair {
    pub model: Model,
    pub eps: f64,
    /// Contamination level around `q` when it differs from `eps`
    /// (asymmetric subtractive contamination only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_q: Option<f64>,
    pub clips: ClipPair,
    pub p_star: Dist,
    pub q_star: Dist,
    pub degenerate_high: bool,
    pub degenerate_low: bool,
}

impl LfdPair {
    /// Per-symbol log likelihood ratio `log(p*(i)/q*(i))`; `+inf`/`-inf` on
    /// the degenerate bar sets, and an error only if both masses vanish.
    pub fn log_lr(&self, i: usize) -> Option<f64> {
        let (a, b) = (self.p_star.mass(i), self.q_star.mass(i));
        if a == 0.0 && b == 0.0 {
            return None;
        }
        Some((a / b).ln())
    }

    pub fn hellinger_sq(&self) -> f64 {
        hellinger_sq(&self.p_star, &self.q_star).expect("matched alphabets")
    }
}

#[derive(Clone, Copy)]
enum Side {
    Upper,
    Lower,
}

/// One-sided calibration target for a given model and level.
fn target(model: Model, eps: f64) -> f64 {
    match model {
        Model::Hub => eps / (1.0 - eps),
        Model::Tv => eps,
        Model::Sub => eps / (1.0 + eps),
    }
}

/// Residual of the upper calibration equation at clip `c`, evaluated on the
/// partition induced by `c` (ties to mid).
pub fn upper_residual(p: &Dist, q: &Dist, c: f64, model: Model) -> f64 {
    let k = p.alphabet_size();
    let (mut ph, mut qh) = (vec![], vec![]);
    for i in 0..k {
        let (pi, qi) = (p.mass(i), q.mass(i));
        let high = (qi == 0.0 && pi > 0.0) || (qi > 0.0 && pi / qi > c);
        if high {
            ph.push(pi);
            qh.push(qi);
        }
    }
    let ph = kahan_sum(ph.into_iter());
    let qh = kahan_sum(qh.into_iter());
    match model {
        Model::Hub => ph / c - qh,
        Model::Tv => (ph - c * qh) / (1.0 + c),
        Model::Sub => ph - c * qh,
    }
}

/// Residual of the lower calibration equation at clip `c`.
pub fn lower_residual(p: &Dist, q: &Dist, c: f64, model: Model) -> f64 {
    let k = p.alphabet_size();
    let (mut pl, mut ql) = (vec![], vec![]);
    for i in 0..k {
        let (pi, qi) = (p.mass(i), q.mass(i));
        let low = (pi == 0.0 && qi > 0.0) || (qi > 0.0 && pi > 0.0 && pi / qi < c);
        if low {
            pl.push(pi);
            ql.push(qi);
        }
    }
    let pl = kahan_sum(pl.into_iter());
    let ql = kahan_sum(ql.into_iter());
    match model {
        Model::Hub => c * ql - pl,
        Model::Tv => (c * ql - pl) / (1.0 + c),
        Model::Sub => ql - pl / c,
    }
}

fn solve_side(p: &Dist, q: &Dist, model: Model, eps: f64, side: Side) -> Option<f64> {
    let t = target(model, eps);
    let k = p.alphabet_size();
    let finite_ratio = |i: usize| -> Option<f64> {
        let (pi, qi) = (p.mass(i), q.mass(i));
        (qi > 0.0 && pi > 0.0).then(|| pi / qi)
    };

    match side {
        Side::Upper => {
            let mut vals: Vec<f64> = (0..k).filter_map(finite_ratio).filter(|r| *r > 1.0).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            let mut lo = 1.0f64;
            for seg_hi in vals.into_iter().chain([f64::INFINITY]) {
                // On (lo, seg_hi) the high set is {finite LR >= seg_hi} + bar_high.
                let (mut ph, mut qh) = (0.0, 0.0);
                for i in 0..k {
                    let (pi, qi) = (p.mass(i), q.mass(i));
                    let high = (qi == 0.0 && pi > 0.0)
                        || (qi > 0.0 && pi > 0.0 && pi / qi >= seg_hi);
                    if high {
                        ph += pi;
                        qh += qi;
                    }
                }
                let cand = match model {
                    Model::Hub => ph / (qh + t),
                    Model::Tv => (ph - t) / (qh + t),
                    Model::Sub => {
                        if qh <= 0.0 {
                            f64::NAN
                        } else {
                            (ph - t) / qh
                        }
                    }
                };
                if cand.is_finite() && cand > lo && cand <= seg_hi && cand > 1.0 {
                    return Some(cand);
                }
                lo = seg_hi;
            }
            None
        }
        Side::Lower => {
            let mut vals: Vec<f64> = (0..k).filter_map(finite_ratio).filter(|r| *r < 1.0).collect();
            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            vals.dedup();
            let mut hi = 1.0f64;
            for seg_lo in vals.into_iter().chain([0.0]) {
                // On (seg_lo, hi) the low set is {finite LR <= seg_lo} + bar_low.
                let (mut pl, mut ql) = (0.0, 0.0);
                for i in 0..k {
                    let (pi, qi) = (p.mass(i), q.mass(i));
                    let low = (pi == 0.0 && qi > 0.0)
                        || (qi > 0.0 && pi > 0.0 && pi / qi <= seg_lo);
                    if low {
                        pl += pi;
                        ql += qi;
                    }
                }
                let cand = match model {
                    Model::Hub => {
                        if ql <= 0.0 {
                            f64::NAN
                        } else {
                            (pl + t) / ql
                        }
                    }
                    Model::Tv => {
                        if ql <= t {
                            f64::NAN
                        } else {
                            (pl + t) / (ql - t)
                        }
                    }
                    Model::Sub => {
                        if ql <= t || pl <= 0.0 {
                            f64::NAN
                        } else {
                            pl / (ql - t)
                        }
                    }
                };
                if cand.is_finite() && cand >= seg_lo && cand < hi && cand < 1.0 && cand > 0.0 {
                    return Some(cand);
                }
                hi = seg_lo;
            }
            None
        }
    }
}

fn check_separation(p: &Dist, q: &Dist, model: Model, eps: f64) -> Result<f64, LfdError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(LfdError::BadEps { eps });
    }
    let tv = tv_distance(p, q)?;
    // The one-sided residuals decrease from tv (TV residuals from tv/2) as
    // the clips move out from 1, so a root exists on the open side iff the
    // target is strictly below that value; otherwise the sets intersect.
    let separated = match model {
        Model::Hub => eps / (1.0 - eps) < tv,
        Model::Tv => eps < tv / 2.0,
        Model::Sub => eps / (1.0 + eps) < tv,
    };
    if !separated {
        return Err(LfdError::SetsOverlap { model, eps, tv });
    }
    Ok(tv)
}

/// Solve the model's clip fixed-point equations at level `eps`.
///
/// For the subtractive model a missing finite solution is not an error:
/// the corresponding endpoint is returned as `0`/`inf` with the degenerate
/// flag set. For Huber/TV a missing solution cannot occur once the sets are
/// separated, and is reported as [`LfdError::NoFiniteClip`].
pub fn solve_clips(p: &Dist, q: &Dist, eps: f64, model: Model) -> Result<ClipPair, LfdError> {
    match model {
        Model::Sub => solve_clips_sub(p, q, eps, eps),
        _ => {
            check_separation(p, q, model, eps)?;
            let upper = solve_side(p, q, model, eps, Side::Upper).ok_or(LfdError::NoFiniteClip {
                model,
                side: "upper",
            })?;
            let lower = solve_side(p, q, model, eps, Side::Lower).ok_or(LfdError::NoFiniteClip {
                model,
                side: "lower",
            })?;
            let t = target(model, eps);
            verify_residual(p, q, model, upper, t, Side::Upper)?;
            verify_residual(p, q, model, lower, t, Side::Lower)?;
            Ok(ClipPair {
                lower,
                upper,
                degenerate_low: false,
                degenerate_high: false,
            })
        }
    }
}

/// Subtractive clips with possibly different levels around `p` (upper
/// equation) and `q` (lower equation).
pub fn solve_clips_sub(p: &Dist, q: &Dist, eps_p: f64, eps_q: f64) -> Result<ClipPair, LfdError> {
    check_separation(p, q, Model::Sub, eps_p)?;
    if eps_q != eps_p {
        check_separation(p, q, Model::Sub, eps_q)?;
    }
    let part = lr_partition(p, q, 0.5, 2.0)?;
    let (upper, degenerate_high) = match solve_side(p, q, Model::Sub, eps_p, Side::Upper) {
        Some(c) => {
            verify_residual(p, q, Model::Sub, c, target(Model::Sub, eps_p), Side::Upper)?;
            (c, false)
        }
        None => {
            // No finite root only when p puts more than eps/(1+eps) mass on
            // infinite-ratio points.
            debug_assert!(
                p.mass_on(&part.bar_high) >= target(Model::Sub, eps_p) - CALIBRATION_TOL
            );
            (f64::INFINITY, true)
        }
    };
    let (lower, degenerate_low) = match solve_side(p, q, Model::Sub, eps_q, Side::Lower) {
        Some(c) => {
            verify_residual(p, q, Model::Sub, c, target(Model::Sub, eps_q), Side::Lower)?;
            (c, false)
        }
        None => {
            debug_assert!(q.mass_on(&part.bar_low) >= target(Model::Sub, eps_q) - CALIBRATION_TOL);
            (0.0, true)
        }
    };
    Ok(ClipPair {
        lower,
        upper,
        degenerate_low,
        degenerate_high,
    })
}

fn verify_residual(
    p: &Dist,
    q: &Dist,
    model: Model,
    c: f64,
    t: f64,
    side: Side,
) -> Result<(), LfdError> {
    let (res, name) = match side {
        Side::Upper => (upper_residual(p, q, c, model), "upper"),
        Side::Lower => (lower_residual(p, q, c, model), "lower"),
    };
    if (res - t).abs() > CALIBRATION_TOL {
        return Err(LfdError::CalibrationFailed {
            side: name,
            residual: res - t,
        });
    }
    Ok(())
}

/// Construct the calibrated LFD pair for `model` at level `eps`.
pub fn build_lfds(p: &Dist, q: &Dist, eps: f64, model: Model) -> Result<LfdPair, LfdError> {
    let clips = solve_clips(p, q, eps, model)?;
    assemble(p, q, eps, eps, model, clips)
}

/// Subtractive LFDs with level `eps_p` around `p` and `eps_q` around `q`.
/// Asymmetric levels are rejected for Huber/TV, which have no closed forms.
pub fn build_lfds_asym(
    p: &Dist,
    q: &Dist,
    eps_p: f64,
    eps_q: f64,
    model: Model,
) -> Result<LfdPair, LfdError> {
    if eps_p == eps_q {
        return build_lfds(p, q, eps_p, model);
    }
    if model != Model::Sub {
        return Err(LfdError::AsymmetricUnsupported(model));
    }
    let clips = solve_clips_sub(p, q, eps_p, eps_q)?;
    assemble(p, q, eps_p, eps_q, model, clips)
}

fn assemble(
    p: &Dist,
    q: &Dist,
    eps_p: f64,
    eps_q: f64,
    model: Model,
    clips: ClipPair,
) -> Result<LfdPair, LfdError> {
    let part = lr_partition(p, q, clips.lower, clips.upper)?;
    let (ps, qs) = lfd_masses(p, q, eps_p, eps_q, model, &clips, &part);
    let p_star = Dist::with_tolerance(ps, LFD_MASS_TOL)?;
    let q_star = Dist::with_tolerance(qs, LFD_MASS_TOL)?;
    let pair = LfdPair {
        model,
        eps: eps_p,
        eps_q: (eps_q != eps_p).then_some(eps_q),
        clips,
        p_star,
        q_star,
        degenerate_high: clips.degenerate_high,
        degenerate_low: clips.degenerate_low,
    };
    debug_assert!(set_membership(&pair.p_star, p, eps_p, model));
    debug_assert!(set_membership(&pair.q_star, q, eps_q, model));
    Ok(pair)
}

/// Per-region LFD mass formulas, shared by the calibrated and uncalibrated
/// constructors.
fn lfd_masses(
    p: &Dist,
    q: &Dist,
    eps_p: f64,
    eps_q: f64,
    model: Model,
    clips: &ClipPair,
    part: &LrPartition,
) -> (Vec<f64>, Vec<f64>) {
    let k = p.alphabet_size();
    let (cl, cu) = (clips.lower, clips.upper);
    let mut ps = vec![0.0; k];
    let mut qs = vec![0.0; k];

    #[derive(Clone, Copy, PartialEq)]
    enum Reg {
        Low,
        Mid,
        High,
        Null,
    }
    let mut reg = vec![Reg::Null; k];
    for &i in &part.low {
        reg[i] = Reg::Low;
    }
    for &i in &part.mid {
        reg[i] = Reg::Mid;
    }
    for &i in &part.high {
        reg[i] = Reg::High;
    }

    match model {
        Model::Hub => {
            let e = eps_p;
            for i in 0..k {
                let (pi, qi) = (p.mass(i), q.mass(i));
                match reg[i] {
                    Reg::Low => {
                        ps[i] = (1.0 - e) * cl * qi;
                        qs[i] = (1.0 - e) * qi;
                    }
                    Reg::Mid => {
                        ps[i] = (1.0 - e) * pi;
                        qs[i] = (1.0 - e) * qi;
                    }
                    Reg::High => {
                        ps[i] = (1.0 - e) * pi;
                        qs[i] = (1.0 - e) * pi / cu;
                    }
                    Reg::Null => {}
                }
            }
        }
        Model::Tv => {
            for i in 0..k {
                let (pi, qi) = (p.mass(i), q.mass(i));
                let s = pi + qi;
                match reg[i] {
                    Reg::Low => {
                        ps[i] = cl * s / (1.0 + cl);
                        qs[i] = s / (1.0 + cl);
                    }
                    Reg::Mid => {
                        ps[i] = pi;
                        qs[i] = qi;
                    }
                    Reg::High => {
                        ps[i] = cu * s / (1.0 + cu);
                        qs[i] = s / (1.0 + cu);
                    }
                    Reg::Null => {}
                }
            }
        }
        Model::Sub => {
            let bar_high_mass = p.mass_on(&part.bar_high);
            let bar_low_mass = q.mass_on(&part.bar_low);
            for i in 0..k {
                let (pi, qi) = (p.mass(i), q.mass(i));
                // p*: scale up everywhere, clip the high region down.
                ps[i] = match reg[i] {
                    Reg::High if clips.degenerate_high => {
                        // Mass reduction spread proportionally over the
                        // infinite-ratio points.
                        (1.0 + eps_p) * pi * (1.0 - eps_p / ((1.0 + eps_p) * bar_high_mass))
                    }
                    Reg::High => cu * (1.0 + eps_p) * qi,
                    Reg::Null => 0.0,
                    _ => (1.0 + eps_p) * pi,
                };
                // q*: scale up everywhere, clip the low region down.
                qs[i] = match reg[i] {
                    Reg::Low if clips.degenerate_low => {
                        (1.0 + eps_q) * qi * (1.0 - eps_q / ((1.0 + eps_q) * bar_low_mass))
                    }
                    Reg::Low => (1.0 + eps_q) * pi / cl,
                    Reg::Null => 0.0,
                    _ => (1.0 + eps_q) * qi,
                };
            }
        }
    }
    (ps, qs)
}

/// Apply the LFD formulas at the given clips without calibration. The
/// returned measures need not integrate to 1.
pub fn build_lfds_uncalibrated(
    p: &Dist,
    q: &Dist,
    clips: &ClipPair,
    model: Model,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>), LfdError> {
    let part = lr_partition(p, q, clips.lower, clips.upper)?;
    Ok(lfd_masses(p, q, eps, eps, model, clips, &part))
}

/// Project a member of the outer `eps`-set to a nearby member of the inner
/// `eps0`-set: a convex mixture with the centre for TV/subtractive, a
/// contaminant swap for Huber. The result satisfies
/// `tv(result, p_eps) <= eps - eps0`.
pub fn nearest_inner_point(
    p_eps: &Dist,
    center: &Dist,
    eps: f64,
    eps0: f64,
    model: Model,
) -> Result<Dist, LfdError> {
    if eps0 > eps {
        return Err(LfdError::EpsOrder { eps0, eps });
    }
    if !set_membership(p_eps, center, eps, model) {
        return Err(LfdError::MembershipViolated);
    }
    if eps == 0.0 || eps0 == eps {
        return Ok(p_eps.clone());
    }
    let k = center.alphabet_size();
    let t = eps0 / eps;
    let masses: Vec<f64> = match model {
        Model::Tv | Model::Sub => (0..k)
            .map(|i| (1.0 - t) * center.mass(i) + t * p_eps.mass(i))
            .collect(),
        Model::Hub => {
            // p_eps = (1-eps) center + eps h; reuse the same contaminant h
            // at the smaller level.
            (0..k)
                .map(|i| {
                    let h = ((p_eps.mass(i) - (1.0 - eps) * center.mass(i)) / eps).max(0.0);
                    (1.0 - eps0) * center.mass(i) + eps0 * h
                })
                .collect()
        }
    };
    let out = Dist::with_tolerance(masses, 1e-9)?;
    debug_assert!(set_membership(&out, center, eps0, model));
    Ok(out)
}
