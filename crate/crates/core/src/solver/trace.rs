use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::polytope::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Fw,
    Away,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fw => "fw",
            Self::Away => "away",
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// FW gap fell to the configured tolerance.
    GapReached,
    /// The iteration budget ran out.
    MaxIters,
    /// The iterate is a vertex with gap exactly zero.
    ExactOptimum,
    /// Line search returned a zero step while the gap was still above
    /// tolerance: progress is below floating-point resolution.
    Stalled,
}

/// State at iterate `x_t` and the step taken from it.
///
/// The final record of a run that stopped on its own has `step_kind = None`
/// and `eta = 0`: it reports the last iterate without a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub f_value: f64,
    pub fw_gap: f64,
    pub step_kind: Option<StepKind>,
    pub is_drop: bool,
    pub eta: f64,
    pub active_size: usize,
    pub active_support_ids: Vec<VertexId>,
    /// `x_t`, kept only when the solver is asked to record iterates.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub drop_count: usize,
    /// Atoms removed for falling below the pruning threshold.
    pub pruned_atoms: usize,
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub final_active: Vec<(VertexId, f64)>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Gap at the last evaluated iterate.
    pub fn final_gap(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.fw_gap)
    }

    pub fn final_support(&self) -> Vec<VertexId> {
        let mut ids: Vec<VertexId> = self.final_active.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids
    }

    /// Writes `t,f,gap,step,eta,drop,active_size` rows with 17 significant
    /// digits. The closing record of a self-terminated run has step `none`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,f,gap,step,eta,drop,active_size")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{},{}",
                r.t,
                r.f_value,
                r.fw_gap,
                r.step_kind.map_or("none", StepKind::as_str),
                r.eta,
                u8::from(r.is_drop),
                r.active_size
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}
