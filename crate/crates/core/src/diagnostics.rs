//! Post-hoc measurements on solutions and traces: strict complementarity,
//! the face-robustness radius, linear-rate fits, face identification, and
//! drop-step accounting.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::objective::SmoothObjective;
use crate::polytope::{FaceDescription, Polytope, VertexId, DEFAULT_MEMBERSHIP_TOL};
use crate::solver::Trace;

/// Face-classification threshold used when none is given: `1e-7·(1 + |f(x*)|)`.
pub fn default_face_tol(f_star: f64) -> f64 {
    1e-7 * (1.0 + f_star.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictComplementarityReport {
    /// Smallest score `(v − x*)ᵀ∇f(x*)` over vertices outside the face;
    /// 0 when every vertex is in the face.
    pub delta: f64,
    pub face: FaceDescription,
    pub grad_at_opt: Vec<f64>,
    pub face_tol: f64,
}

/// Scores every vertex by `s(v) = (v − x*)ᵀ∇f(x*)`. Vertices with
/// `s(v) ≤ face_tol` span the estimated optimal face; `δ` is the smallest
/// score outside it.
///
/// Only the supplied `x_star` is examined. When the optimal set is not a
/// single point the result certifies nothing about the other optima.
pub fn estimate_strict_complementarity<O: SmoothObjective + ?Sized>(
    polytope: &Polytope,
    obj: &O,
    x_star: &[f64],
    face_tol: f64,
) -> Result<StrictComplementarityReport> {
    if !polytope.is_simplex_family() {
        return Err(Error::Unsupported(
            "strict complementarity is estimated on the simplex family only".into(),
        ));
    }
    if !(face_tol >= 0.0) {
        return invalid(format!("face_tol must be >= 0, got {face_tol}"));
    }
    if !polytope.contains(x_star, DEFAULT_MEMBERSHIP_TOL)? {
        return invalid("x_star is not feasible");
    }
    let grad = obj.gradient(x_star);
    let base = dot(x_star, &grad);
    let mut members = Vec::new();
    let mut delta = f64::INFINITY;
    for (id, value) in polytope.vertex_values(&grad)? {
        let score = value - base;
        if score <= face_tol {
            members.push(id);
        } else {
            delta = delta.min(score);
        }
    }
    if members.is_empty() {
        return invalid("no vertex scores within face_tol; x_star is far from optimal");
    }
    let face = polytope.face_of_support(&members)?;
    Ok(StrictComplementarityReport {
        delta: if delta.is_finite() { delta } else { 0.0 },
        face,
        grad_at_opt: grad,
        face_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBound {
    /// Gradient perturbations strictly below this keep the optimal face.
    pub nu_max: f64,
    pub delta: f64,
    pub diameter: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// `ν_max = δ / (D(1 + 2β/α))`.
pub fn robustness_bound(delta: f64, diameter: f64, beta: f64, alpha: f64) -> Result<RobustnessBound> {
    for (name, v) in [
        ("delta", delta),
        ("diameter", diameter),
        ("beta", beta),
        ("alpha", alpha),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} must be positive and finite, got {v}"));
        }
    }
    Ok(RobustnessBound {
        nu_max: delta / (diameter * (1.0 + 2.0 * beta / alpha)),
        delta,
        diameter,
        beta,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// First and last iteration actually used.
    pub window: (usize, usize),
    /// Least-squares slope of `ln h_t` against `t`.
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `ln h` against `t`. `r² = 0` when `ln h` is constant.
pub fn fit_log_linear(samples: &[(usize, f64)]) -> Result<RateFit> {
    if samples.len() < 3 {
        return invalid(format!(
            "rate fit needs at least 3 positive samples, got {}",
            samples.len()
        ));
    }
    if let Some((t, h)) = samples.iter().find(|(_, h)| !(*h > 0.0)) {
        return invalid(format!("h_t must be positive, got {h} at t={t}"));
    }
    let n = samples.len() as f64;
    let ts: Vec<f64> = samples.iter().map(|(t, _)| *t as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, h)| h.ln()).collect();
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(&ys) {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let r_squared = if syy > 0.0 && stt > 0.0 {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(RateFit {
        window: (samples[0].0, samples[samples.len() - 1].0),
        slope,
        r_squared,
        points: samples.len(),
    })
}

/// Fits `ln(f(x_t) − f*)` on records with `t_start ≤ t ≤ t_end`. The window
/// ends early at the last record before `h_t` first reaches 0.
pub fn fit_linear_rate(trace: &Trace, f_star: f64, t_start: usize, t_end: usize) -> Result<RateFit> {
    if t_start < 1 || t_end <= t_start {
        return invalid(format!("bad window [{t_start}, {t_end}]"));
    }
    let samples: Vec<(usize, f64)> = trace
        .records
        .iter()
        .filter(|r| r.t >= t_start && r.t <= t_end)
        .map(|r| (r.t, r.f_value - f_star))
        .take_while(|(_, h)| *h > 0.0)
        .collect();
    fit_log_linear(&samples)
}

/// Smallest `t` from which every later active support lies inside `face`;
/// `None` if the final support leaves the face.
pub fn check_face_identification(trace: &Trace, face: &FaceDescription) -> Option<usize> {
    let inside = |ids: &[VertexId]| ids.iter().all(|id| face.vertex_ids.contains(id));
    let mut first = None;
    for r in trace.records.iter().rev() {
        if !inside(&r.active_support_ids) {
            break;
        }
        first = Some(r.t);
    }
    first
}

/// Checks that every prefix of `T` steps has at most `(k_init + T)/2` drop steps.
pub fn verify_observation1(trace: &Trace, k_init: usize) -> bool {
    let mut drops = 0usize;
    let mut steps = 0usize;
    for r in trace.records.iter().filter(|r| r.step_kind.is_some()) {
        steps += 1;
        drops += usize::from(r.is_drop);
        if 2 * drops > k_init + steps {
            return false;
        }
    }
    true
}

/// Worst-case value after one FW line-search step from an iterate with value
/// `f` and gap `gap`: `min_{η∈[0,1]} f − η·gap + η²βD²/2`.
pub fn fw_progress_bound(f: f64, gap: f64, beta: f64, diameter: f64) -> f64 {
    let curv = beta * diameter * diameter;
    let eta = if curv > 0.0 { (gap / curv).clamp(0.0, 1.0) } else { 1.0 };
    f - eta * gap + 0.5 * eta * eta * curv
}

/// Iterations whose non-drop step decreased `f` by less than plain FW's
/// worst-case guarantee, beyond a relative `slack`. Empty on a correct run.
pub fn nondrop_progress_violations(trace: &Trace, beta: f64, diameter: f64, slack: f64) -> Vec<usize> {
    let mut bad = Vec::new();
    for (i, r) in trace.records.iter().enumerate() {
        if r.step_kind.is_none() || r.is_drop {
            continue;
        }
        let next = trace.records.get(i + 1).map_or(trace.final_value, |n| n.f_value);
        let bound = fw_progress_bound(r.f_value, r.fw_gap, beta, diameter);
        if next > bound + slack * (1.0 + r.f_value.abs()) {
            bad.push(r.t);
        }
    }
    bad
}

/// Union of the supports a trace visited, useful for reporting.
pub fn visited_support(trace: &Trace) -> BTreeSet<VertexId> {
    trace
        .records
        .iter()
        .flat_map(|r| r.active_support_ids.iter().copied())
        .collect()
}
