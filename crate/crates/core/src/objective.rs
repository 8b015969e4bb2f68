//! Smooth convex objectives and the line searches the solvers use.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm_sq, parse_rows, DenseMatrix};

/// Default bisection tolerance on the step size.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;

/// A convex, β-smooth function on `ℝ^d`.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Lipschitz constant of the gradient (or an upper bound on it).
    fn smoothness(&self) -> f64;

    /// `wᵀ∇²f w` when `f` is quadratic, so that `f(x + ηw)` is an exact
    /// degree-2 polynomial in `η`. `None` for non-quadratic objectives.
    fn curvature(&self, _w: &[f64]) -> Option<f64> {
        None
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn curvature(&self, w: &[f64]) -> Option<f64> {
        (**self).curvature(w)
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn curvature(&self, w: &[f64]) -> Option<f64> {
        (**self).curvature(w)
    }
}

/// Which upper bound on `‖A‖²` a least-squares objective reports as β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessBound {
    /// 50 power iterations on `AᵀA`, inflated by 1% and capped by the
    /// squared Frobenius norm.
    PowerIteration,
    /// `‖A‖_F²`.
    Frobenius,
}

/// Upper bound on the largest squared singular value of `a`.
pub fn smoothness_upper_bound(a: &DenseMatrix, method: SmoothnessBound) -> f64 {
    let frob = a.frobenius_sq();
    match method {
        SmoothnessBound::Frobenius => frob,
        SmoothnessBound::PowerIteration => {
            if frob == 0.0 || a.cols() == 0 {
                return 0.0;
            }
            // Deterministic start vector with no special alignment.
            let mut v: Vec<f64> = (0..a.cols())
                .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
                .collect();
            let mut estimate = 0.0;
            for _ in 0..50 {
                let n = norm_sq(&v).sqrt();
                if n == 0.0 {
                    break;
                }
                v.iter_mut().for_each(|c| *c /= n);
                let av = a.mul_vec(&v);
                estimate = norm_sq(&av);
                v = a.tr_mul_vec(&av);
            }
            (1.01 * estimate).min(frob)
        }
    }
}

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresObjective {
    a: DenseMatrix,
    b: Vec<f64>,
    beta: f64,
    bound: SmoothnessBound,
}

impl LeastSquaresObjective {
    /// β from power iteration.
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        Self::with_bound(a, b, SmoothnessBound::PowerIteration)
    }

    pub fn with_bound(a: DenseMatrix, b: Vec<f64>, bound: SmoothnessBound) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return invalid("least-squares matrix must be nonempty");
        }
        if b.len() != a.rows() {
            return invalid(format!("b has length {}, A has {} rows", b.len(), a.rows()));
        }
        let beta = smoothness_upper_bound(&a, bound);
        Ok(Self { a, b, beta, bound })
    }

    /// Loads `A` (one row per line) and `b` (one value per line).
    pub fn from_files(a_path: impl AsRef<Path>, b_path: impl AsRef<Path>) -> Result<Self> {
        let (a_path, b_path) = (a_path.as_ref(), b_path.as_ref());
        let rows = parse_rows(&std::fs::read_to_string(a_path)?, &a_path.display().to_string())?;
        let a = DenseMatrix::from_rows(&rows)?;
        let b: Vec<f64> = parse_rows(&std::fs::read_to_string(b_path)?, &b_path.display().to_string())?
            .into_iter()
            .flatten()
            .collect();
        Self::new(a, b)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn bound(&self) -> SmoothnessBound {
        self.bound
    }

    /// Overrides β, e.g. with an exact `‖A‖²`.
    pub fn with_smoothness(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        axpy(-1.0, &self.b, &mut r);
        r
    }
}

impl SmoothObjective for LeastSquaresObjective {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm_sq(&self.residual(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.tr_mul_vec(&self.residual(x))
    }

    fn smoothness(&self) -> f64 {
        self.beta
    }

    fn curvature(&self, w: &[f64]) -> Option<f64> {
        Some(norm_sq(&self.a.mul_vec(w)))
    }
}

/// `f(x) = ½‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquaredNormObjective {
    dim: usize,
}

impl SquaredNormObjective {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothObjective for SquaredNormObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * norm_sq(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
    fn curvature(&self, w: &[f64]) -> Option<f64> {
        Some(norm_sq(w))
    }
}

/// `f(x) = ½‖x − x°‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSquaredNormObjective {
    center: Vec<f64>,
}

impl ShiftedSquaredNormObjective {
    pub fn new(center: Vec<f64>) -> Self {
        Self { center }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl SmoothObjective for ShiftedSquaredNormObjective {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, c)| a - c).collect()
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
    fn curvature(&self, w: &[f64]) -> Option<f64> {
        Some(norm_sq(w))
    }
}

/// `f(x) = cᵀx`. Its gradient is constant, so β is reported as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    c: Vec<f64>,
}

impl LinearObjective {
    pub fn new(c: Vec<f64>) -> Self {
        Self { c }
    }
}

impl SmoothObjective for LinearObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.c.clone()
    }
    fn smoothness(&self) -> f64 {
        0.0
    }
    fn curvature(&self, _w: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// `f̃(x) = f(x) + gᵀx`: shifts every gradient by the same vector `g`, so
/// `‖∇f − ∇f̃‖ = ‖g‖` everywhere while β and the curvature are unchanged.
#[derive(Debug, Clone)]
pub struct TiltedObjective<O> {
    base: O,
    tilt: Vec<f64>,
}

impl<O: SmoothObjective> TiltedObjective<O> {
    pub fn new(base: O, tilt: Vec<f64>) -> Result<Self> {
        if tilt.len() != base.dim() {
            return invalid(format!(
                "tilt has length {}, objective dimension is {}",
                tilt.len(),
                base.dim()
            ));
        }
        Ok(Self { base, tilt })
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn tilt(&self) -> &[f64] {
        &self.tilt
    }
}

impl<O: SmoothObjective> SmoothObjective for TiltedObjective<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + dot(&self.tilt, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        axpy(1.0, &self.tilt, &mut g);
        g
    }
    fn smoothness(&self) -> f64 {
        self.base.smoothness()
    }
    fn curvature(&self, w: &[f64]) -> Option<f64> {
        self.base.curvature(w)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchSpec {
    /// Closed-form minimizer of the quadratic `η ↦ f(x + ηw)`.
    #[default]
    ExactQuadratic,
    /// Bisection on the nondecreasing derivative `η ↦ wᵀ∇f(x + ηw)`.
    DerivativeBisection { tol_eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub eta: f64,
    pub f_new: f64,
}

/// Minimizes `f(x + ηw)` over `η ∈ [0, eta_max]`.
///
/// A minimizer beyond `eta_max` is clamped to exactly `eta_max`, which the
/// away-step solver relies on to detect drop steps.
pub fn line_search<O: SmoothObjective + ?Sized>(
    obj: &O,
    x: &[f64],
    w: &[f64],
    eta_max: f64,
    spec: LineSearchSpec,
) -> Result<LineSearchOutcome> {
    if x.len() != obj.dim() || w.len() != obj.dim() {
        return invalid("line search vectors do not match the objective dimension");
    }
    let slope = dot(w, &obj.gradient(x));
    if slope > 0.0 {
        return invalid(format!("ascent direction: wᵀ∇f(x) = {slope:e} > 0"));
    }
    line_search_with_slope(obj, x, obj.value(x), slope, w, eta_max, spec)
}

/// [`line_search`] with `f(x)` and `wᵀ∇f(x)` supplied by the caller.
pub(crate) fn line_search_with_slope<O: SmoothObjective + ?Sized>(
    obj: &O,
    x: &[f64],
    f0: f64,
    slope: f64,
    w: &[f64],
    eta_max: f64,
    spec: LineSearchSpec,
) -> Result<LineSearchOutcome> {
    if !(eta_max > 0.0 && eta_max.is_finite()) {
        return invalid(format!("eta_max must be positive and finite, got {eta_max}"));
    }
    let eta = match spec {
        LineSearchSpec::ExactQuadratic => {
            let q = obj
                .curvature(w)
                .ok_or_else(|| Error::Unsupported("exact line search needs a quadratic objective".into()))?;
            if q > 0.0 {
                let unconstrained = -slope / q;
                if unconstrained >= eta_max {
                    eta_max
                } else if unconstrained > 0.0 {
                    unconstrained
                } else {
                    0.0
                }
            } else if slope < 0.0 {
                eta_max
            } else {
                0.0
            }
        }
        LineSearchSpec::DerivativeBisection { tol_eta } => {
            if !(tol_eta > 0.0) {
                return invalid(format!("bisection tolerance must be positive, got {tol_eta}"));
            }
            let deriv = |eta: f64| {
                let mut y = x.to_vec();
                axpy(eta, w, &mut y);
                dot(w, &obj.gradient(&y))
            };
            if slope >= 0.0 {
                0.0
            } else if deriv(eta_max) <= 0.0 {
                eta_max
            } else {
                let (mut lo, mut hi) = (0.0, eta_max);
                while hi - lo > tol_eta {
                    let mid = 0.5 * (lo + hi);
                    if deriv(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    };
    if eta == 0.0 {
        return Ok(LineSearchOutcome { eta, f_new: f0 });
    }
    let mut y = x.to_vec();
    axpy(eta, w, &mut y);
    let f_new = obj.value(&y);
    // On a quadratic the decrease is exact in closed form even when it is
    // below the rounding error of f, so only bisection steps are vetoed.
    if f_new > f0 && !matches!(spec, LineSearchSpec::ExactQuadratic) {
        return Ok(LineSearchOutcome { eta: 0.0, f_new: f0 });
    }
    Ok(LineSearchOutcome { eta, f_new })
}

/// Largest per-coordinate error between central differences with step `h`
/// and the analytic gradient, relative to `max(1, |∂ᵢf|)`.
pub fn check_gradient<O: SmoothObjective + ?Sized>(obj: &O, x: &[f64], h: f64) -> f64 {
    let g = obj.gradient(x);
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let fp = obj.value(&probe);
        probe[i] = orig - h;
        let fm = obj.value(&probe);
        probe[i] = orig;
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
    }
    worst
}
