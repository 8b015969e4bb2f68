//! Experiment runners behind the `awayfw` command-line tool.

mod instances;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use instances::{
    gen_planted_face_instance, gen_recovery_instance, run_rng, PlantedFaceConfig, PlantedFaceInstance, RecoveryConfig,
    RecoveryInstance,
};

use crate::diagnostics::{default_face_tol, estimate_strict_complementarity, robustness_bound, RobustnessBound};
use crate::error::{invalid, Result};
use crate::linalg::{dist, norm_sq};
use crate::objective::{LeastSquaresObjective, SmoothObjective, SquaredNormObjective, TiltedObjective};
use crate::polytope::{FaceDescription, Polytope, VertexId};
use crate::solver::{greedy_start, run_away_fw, run_fw, SolverConfig, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fw,
    AwayFw,
}

impl Method {
    pub fn run<O: SmoothObjective + ?Sized>(
        self,
        obj: &O,
        polytope: &Polytope,
        start: &crate::polytope::Vertex,
        cfg: &SolverConfig,
    ) -> Result<Trace> {
        match self {
            Self::Fw => run_fw(obj, polytope, start, cfg),
            Self::AwayFw => run_away_fw(obj, polytope, start, cfg),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub d: usize,
    pub method: Method,
    pub adversarial: bool,
    pub trace: Trace,
    /// First `t` with `f(x_t) < 1/d`, up to a relative rounding margin of 1e-12.
    pub iterations_to_below_1_over_d: Option<usize>,
}

/// `½‖x‖²` over the down-closed simplex, started from `e₁`.
pub fn run_lower_bound(d: usize, method: Method, adversarial: bool) -> Result<LowerBoundReport> {
    if d < 2 {
        return invalid(format!("d must be at least 2, got {d}"));
    }
    let p = Polytope::down_closed_simplex(d)?;
    let obj = SquaredNormObjective::new(d);
    let cfg = SolverConfig {
        max_iters: 2 * d + 10,
        gap_tol: 0.0,
        adversarial_mode: adversarial,
        ..SolverConfig::default()
    };
    let trace = method.run(&obj, &p, &p.vertex(VertexId(1))?, &cfg)?;
    let threshold = (1.0 - 1e-12) / d as f64;
    let below = trace.records.iter().find(|r| r.f_value < threshold).map(|r| r.t);
    Ok(LowerBoundReport {
        d,
        method,
        adversarial,
        trace,
        iterations_to_below_1_over_d: below,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRun {
    pub run_index: u64,
    pub recovery_error: f64,
    pub delta: f64,
    pub iterations: usize,
    pub final_gap: f64,
    /// False when the iteration budget ran out above the gap tolerance.
    pub converged: bool,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub config: RecoveryConfig,
    pub avg_recovery_error: f64,
    pub avg_delta: f64,
    pub per_run: Vec<RecoveryRun>,
}

pub const RECOVERY_GAP_TOL: f64 = 1e-8;

/// One sparse-recovery run: away-step FW over `τ·Δ_d` until the gap is
/// below 1e-8 or `50·d` iterations pass.
pub fn recovery_run(cfg: &RecoveryConfig, run_index: u64) -> Result<RecoveryRun> {
    let inst = gen_recovery_instance(cfg, run_index)?;
    let obj = LeastSquaresObjective::new(inst.a, inst.b)?;
    let p = Polytope::unit_simplex(cfg.d, cfg.simplex_scale)?;
    let solver = SolverConfig {
        max_iters: 50 * cfg.d,
        gap_tol: RECOVERY_GAP_TOL,
        ..SolverConfig::default()
    };
    let trace = run_away_fw(&obj, &p, &greedy_start(&obj, &p)?, &solver)?;
    let x = &trace.final_point;
    let rescaled: Vec<f64> = x.iter().map(|xi| xi / cfg.simplex_scale).collect();
    let report = estimate_strict_complementarity(&p, &obj, x, default_face_tol(obj.value(x)))?;
    Ok(RecoveryRun {
        run_index,
        recovery_error: dist(&rescaled, &inst.x0).powi(2),
        delta: report.delta,
        iterations: trace.len(),
        final_gap: trace.final_gap(),
        converged: trace.final_gap() <= RECOVERY_GAP_TOL,
        support_size: trace.final_active.len(),
    })
}

/// Runs every index in parallel and averages over all of them, converged
/// or not.
pub fn run_recovery(cfg: &RecoveryConfig) -> Result<RecoveryReport> {
    cfg.validate()?;
    let per_run = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| recovery_run(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let n = per_run.len() as f64;
    Ok(RecoveryReport {
        config: cfg.clone(),
        avg_recovery_error: per_run.iter().map(|r| r.recovery_error).sum::<f64>() / n,
        avg_delta: per_run.iter().map(|r| r.delta).sum::<f64>() / n,
        per_run,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub instance: PlantedFaceConfig,
    pub seed: u64,
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            instance: PlantedFaceConfig {
                d: 30,
                m: 60,
                face_size: 3,
                gap_range: (0.1, 1.0),
            },
            seed: 1,
            gap_tol: 1e-12,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltOutcome {
    pub nu: f64,
    pub below_bound: bool,
    /// Final active support of the tilted problem lies inside the base face.
    pub contained: bool,
    pub support: Vec<VertexId>,
    pub final_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub seed: u64,
    pub delta: f64,
    pub face: FaceDescription,
    pub bound: RobustnessBound,
    pub outcomes: Vec<TiltOutcome>,
    /// Tilt of size `100·δ` along the indicator of the base face.
    pub adversarial: TiltOutcome,
}

/// Solves a planted-face problem, estimates its face and `δ`, then re-solves
/// under linear tilts `gᵀx` with `‖g‖ = ν` along one random direction.
pub fn run_robustness(cfg: &RobustnessConfig, nu_grid: &[f64]) -> Result<RobustnessReport> {
    if let Some(nu) = nu_grid.iter().find(|nu| !(**nu >= 0.0 && nu.is_finite())) {
        return invalid(format!("perturbation sizes must be finite and >= 0, got {nu}"));
    }
    let mut rng = run_rng(cfg.seed, 0);
    let inst = gen_planted_face_instance(&cfg.instance, &mut rng)?;
    let direction = instances::unit_vector(&mut rng, cfg.instance.d);
    let p = Polytope::unit_simplex(cfg.instance.d, 1.0)?;
    let solver = SolverConfig {
        max_iters: cfg.max_iters,
        gap_tol: cfg.gap_tol,
        ..SolverConfig::default()
    };

    let base = run_away_fw(&inst.objective, &p, &greedy_start(&inst.objective, &p)?, &solver)?;
    let x = &base.final_point;
    let sc = estimate_strict_complementarity(&p, &inst.objective, x, default_face_tol(inst.objective.value(x)))?;
    if !(sc.delta > 0.0) {
        return invalid("base instance has no strict complementarity (delta = 0)");
    }
    let bound = robustness_bound(sc.delta, p.diameter(), inst.beta, inst.alpha)?;

    let solve_tilted = |tilt: Vec<f64>, nu: f64| -> Result<TiltOutcome> {
        let obj = TiltedObjective::new(&inst.objective, tilt)?;
        let trace = run_away_fw(&obj, &p, &greedy_start(&obj, &p)?, &solver)?;
        let support = trace.final_support();
        Ok(TiltOutcome {
            nu,
            below_bound: nu < bound.nu_max,
            contained: support.iter().all(|id| sc.face.contains(*id)),
            support,
            final_gap: trace.final_gap(),
        })
    };

    let outcomes = nu_grid
        .par_iter()
        .map(|&nu| solve_tilted(direction.iter().map(|g| nu * g).collect(), nu))
        .collect::<Result<Vec<_>>>()?;

    let nu_adv = 100.0 * sc.delta;
    let k = sc.face.vertex_ids.len() as f64;
    let mut tilt = vec![0.0; cfg.instance.d];
    for id in &sc.face.vertex_ids {
        tilt[id.0 as usize - 1] = nu_adv / k.sqrt();
    }
    debug_assert!((norm_sq(&tilt).sqrt() - nu_adv).abs() <= 1e-9 * nu_adv);
    let adversarial = solve_tilted(tilt, nu_adv)?;

    Ok(RobustnessReport {
        seed: cfg.seed,
        delta: sc.delta,
        face: sc.face,
        bound,
        outcomes,
        adversarial,
    })
}
