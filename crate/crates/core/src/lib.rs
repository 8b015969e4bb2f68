//! Frank-Wolfe with away steps over polytopes, with the diagnostics needed to
//! watch it converge: strict complementarity, optimal-face identification,
//! linear-rate fits and drop-step accounting.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod polytope;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use objective::{
    LeastSquaresObjective, LineSearchSpec, LinearObjective, ShiftedSquaredNormObjective, SmoothObjective,
    SquaredNormObjective, TiltedObjective,
};
pub use polytope::{FaceDescription, Polytope, TieBreakPolicy, Vertex, VertexId};
pub use solver::{run_away_fw, run_fw, SolverConfig, StepKind, Termination, Trace};
