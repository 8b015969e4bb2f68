//! Frank-Wolfe with line search, and its away-step variant.
//!
//! Both solvers start from a vertex, keep an explicit convex decomposition
//! of the iterate, and emit one [`IterationRecord`] per iterate. A run stops
//! when the FW gap `(x_t − u_t)ᵀ∇f(x_t)`, an upper bound on `f(x_t) − f*`,
//! drops to `gap_tol`, when the iterate coincides with the oracle vertex, or
//! when `max_iters` oracle calls have been made.

mod active_set;
mod trace;

pub use active_set::{ActiveSet, Atom, PRUNE_WEIGHT};
pub use trace::{IterationRecord, StepKind, Termination, Trace};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::objective::{line_search_with_slope, LineSearchSpec, SmoothObjective};
use crate::polytope::{Polytope, PolytopeKind, TieBreakPolicy, Vertex, VertexId, DEFAULT_MEMBERSHIP_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub tie_break: TieBreakPolicy,
    pub line_search: LineSearchSpec,
    /// Recompute the cached iterate from its atoms every this many iterations.
    pub weight_refresh_period: usize,
    /// Re-derive an adversarial tie-break every iteration that forbids the
    /// currently active vertices and the origin (when it is a vertex), so
    /// the oracle keeps answering with fresh vertices while any are optimal.
    pub adversarial_mode: bool,
    /// Keep `x_t` in every record.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            gap_tol: 1e-10,
            tie_break: TieBreakPolicy::FirstIndex,
            line_search: LineSearchSpec::ExactQuadratic,
            weight_refresh_period: 100,
            adversarial_mode: false,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.gap_tol >= 0.0) {
            return invalid(format!("gap_tol must be >= 0, got {}", self.gap_tol));
        }
        if self.weight_refresh_period == 0 {
            return invalid("weight_refresh_period must be at least 1");
        }
        Ok(())
    }
}

/// The active-set vertex with the largest inner product with the gradient.
#[derive(Debug, Clone)]
pub struct AwayVertex {
    pub position: usize,
    pub vertex: Vertex,
    pub weight: f64,
}

/// Ties go to the earliest position in the active set.
pub fn away_vertex(active: &ActiveSet, grad: &[f64]) -> Result<AwayVertex> {
    let mut best: Option<(usize, f64)> = None;
    for (i, atom) in active.atoms().iter().enumerate() {
        let v = dot(atom.vertex.coords(), grad);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (position, _) = best.ok_or_else(|| Error::InvalidArgument("empty active set".into()))?;
    let atom = &active.atoms()[position];
    Ok(AwayVertex {
        position,
        vertex: atom.vertex.clone(),
        weight: atom.weight,
    })
}

#[derive(Debug, Clone)]
pub enum StepChoice {
    Fw { u: Vertex },
    Away { z: Vertex, position: usize },
}

impl StepChoice {
    pub fn kind(&self) -> StepKind {
        match self {
            Self::Fw { .. } => StepKind::Fw,
            Self::Away { .. } => StepKind::Away,
        }
    }
}

/// A chosen direction `w` with its step bound and slope `wᵀ∇f(x)`.
#[derive(Debug, Clone)]
pub struct StepDecision {
    pub choice: StepChoice,
    pub direction: Vec<f64>,
    pub eta_max: f64,
    pub slope: f64,
}

/// Chooses between the FW direction `u − x` and the away direction `x − z`.
///
/// FW is taken only when its slope is strictly smaller; ties go to the away
/// step, except for a single-atom set where the away direction is zero.
pub fn select_step(active: &ActiveSet, grad: &[f64], u: &Vertex) -> Result<StepDecision> {
    let away = away_vertex(active, grad)?;
    let x = active.point();
    let xg = dot(x, grad);
    let fw_slope = dot(u.coords(), grad) - xg;
    let away_slope = xg - dot(away.vertex.coords(), grad);
    if active.len() == 1 || fw_slope < away_slope {
        return Ok(fw_decision(x, u, fw_slope));
    }
    let direction = x.iter().zip(away.vertex.coords()).map(|(xi, zi)| xi - zi).collect();
    Ok(StepDecision {
        eta_max: away.weight / (1.0 - away.weight),
        slope: away_slope,
        direction,
        choice: StepChoice::Away {
            z: away.vertex,
            position: away.position,
        },
    })
}

fn fw_decision(x: &[f64], u: &Vertex, slope: f64) -> StepDecision {
    StepDecision {
        direction: u.coords().iter().zip(x).map(|(ui, xi)| ui - xi).collect(),
        eta_max: 1.0,
        slope,
        choice: StepChoice::Fw { u: u.clone() },
    }
}

/// The oracle's answer for the gradient at the polytope's lowest-id vertex,
/// a cheap deterministic starting vertex.
pub fn greedy_start<O: SmoothObjective + ?Sized>(obj: &O, polytope: &Polytope) -> Result<Vertex> {
    let first = match polytope.kind() {
        PolytopeKind::UnitSimplex { .. } => VertexId(1),
        _ => VertexId(0),
    };
    let v = polytope.vertex(first)?;
    polytope.lmo(&obj.gradient(v.coords()), &TieBreakPolicy::FirstIndex)
}

/// Plain Frank-Wolfe with line search over `[0, 1]`.
pub fn run_fw<O: SmoothObjective + ?Sized>(
    obj: &O,
    polytope: &Polytope,
    start: &Vertex,
    cfg: &SolverConfig,
) -> Result<Trace> {
    solve(obj, polytope, start, cfg, false)
}

/// Frank-Wolfe with away steps and line search.
pub fn run_away_fw<O: SmoothObjective + ?Sized>(
    obj: &O,
    polytope: &Polytope,
    start: &Vertex,
    cfg: &SolverConfig,
) -> Result<Trace> {
    solve(obj, polytope, start, cfg, true)
}

fn solve<O: SmoothObjective + ?Sized>(
    obj: &O,
    polytope: &Polytope,
    start: &Vertex,
    cfg: &SolverConfig,
    away_steps: bool,
) -> Result<Trace> {
    cfg.validate()?;
    if obj.dim() != polytope.dim() {
        return invalid(format!(
            "objective dimension {} does not match polytope dimension {}",
            obj.dim(),
            polytope.dim()
        ));
    }
    let canonical = polytope.vertex(start.id())?;
    if canonical.coords() != start.coords() || !polytope.contains(start.coords(), DEFAULT_MEMBERSHIP_TOL)? {
        return invalid(format!("start vertex {} is not a vertex of the polytope", start.id()));
    }

    let mut active = ActiveSet::from_vertex(canonical);
    let mut records = Vec::new();
    let mut drop_count = 0;
    let mut pruned_atoms = 0;
    let mut termination = Termination::MaxIters;

    for t in 1..=cfg.max_iters {
        let x = active.point();
        let f = obj.value(x);
        let grad = obj.gradient(x);
        let adversarial;
        let policy = if cfg.adversarial_mode {
            adversarial = TieBreakPolicy::adversarial(active.support_ids().into_iter().chain(polytope.origin_id()));
            &adversarial
        } else {
            &cfg.tie_break
        };
        let u = polytope.lmo(&grad, policy)?;
        let gap = dot(x, &grad) - dot(u.coords(), &grad);
        let mut record = IterationRecord {
            t,
            f_value: f,
            fw_gap: gap,
            step_kind: None,
            is_drop: false,
            eta: 0.0,
            active_size: active.len(),
            active_support_ids: active.support_ids(),
            point: cfg.record_iterates.then(|| x.to_vec()),
        };

        if x == u.coords() || (gap == 0.0 && active.len() == 1) {
            records.push(record);
            termination = Termination::ExactOptimum;
            break;
        }
        if gap <= cfg.gap_tol {
            records.push(record);
            termination = Termination::GapReached;
            break;
        }

        let decision = if away_steps {
            select_step(&active, &grad, &u)?
        } else {
            fw_decision(x, &u, -gap)
        };
        let step = line_search_with_slope(
            obj,
            x,
            f,
            decision.slope,
            &decision.direction,
            decision.eta_max,
            cfg.line_search,
        )?;
        if step.eta == 0.0 {
            records.push(record);
            termination = Termination::Stalled;
            break;
        }

        record.step_kind = Some(decision.choice.kind());
        record.eta = step.eta;
        match &decision.choice {
            StepChoice::Fw { u } => pruned_atoms += active.apply_fw(u, step.eta),
            StepChoice::Away { position, .. } => {
                let drop = step.eta == decision.eta_max;
                record.is_drop = drop;
                drop_count += usize::from(drop);
                pruned_atoms += active.apply_away(*position, step.eta, drop);
            }
        }
        records.push(record);

        if t % cfg.weight_refresh_period == 0 {
            active.refresh_point();
        }
        if cfg!(debug_assertions) || t % cfg.weight_refresh_period == 0 {
            active.check_invariants()?;
        }
    }

    let final_point = active.point().to_vec();
    let final_value = match (termination, records.last()) {
        (Termination::MaxIters, _) | (_, None) => obj.value(&final_point),
        (_, Some(r)) => r.f_value,
    };
    Ok(Trace {
        records,
        termination,
        drop_count,
        pruned_atoms,
        final_point,
        final_value,
        final_active: active.weights(),
    })
}
