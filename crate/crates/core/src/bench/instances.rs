//! Seeded problem generators.
//!
//! Every run draws from `ChaCha8Rng::seed_from_u64(seed)` with the stream set
//! to the run index, so runs are independent and can execute in any order.
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat).

use nalgebra::{Cholesky, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, DenseMatrix};
use crate::objective::{LeastSquaresObjective, SmoothObjective};
use crate::polytope::VertexId;

pub fn run_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

pub(crate) fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
        .collect::<Vec<f64>>();
    DenseMatrix::from_row_major(rows, cols, data).expect("sizes match by construction")
}

pub(crate) fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&v);
        if len > 0.0 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Uniform point of the `k`-dimensional probability simplex (normalized
/// exponentials), every entry strictly positive.
pub(crate) fn simplex_weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = w.iter().sum();
        if w.iter().all(|&x| x > 0.0) && total.is_finite() {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Sorted random subset of `0..n` of size `k`.
pub(crate) fn random_support<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut s = sample(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub d: usize,
    pub m: usize,
    pub nnz: usize,
    /// Noise level `c` in `b = Ax₀ + c‖Ax₀‖v`.
    pub noise_scale: f64,
    /// Scale `τ` of the feasible simplex.
    pub simplex_scale: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            d: 400,
            m: 125,
            nnz: 5,
            noise_scale: 0.2,
            simplex_scale: 0.7,
            runs: 50,
            seed: 1,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return invalid(format!("d must be at least 2, got {}", self.d));
        }
        if self.nnz == 0 || self.nnz > self.d {
            return invalid(format!("nnz must be in 1..={}, got {}", self.d, self.nnz));
        }
        if self.m == 0 {
            return invalid("m must be at least 1");
        }
        if self.runs == 0 {
            return invalid("runs must be at least 1");
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return invalid(format!("noise scale must be >= 0, got {}", self.noise_scale));
        }
        if !(self.simplex_scale > 0.0 && self.simplex_scale.is_finite()) {
            return invalid(format!("simplex scale must be > 0, got {}", self.simplex_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
}

/// Sparse-recovery instance for one run. Draw order: support, support
/// weights, `A` row by row, then `v`.
pub fn gen_recovery_instance(cfg: &RecoveryConfig, run_index: u64) -> Result<RecoveryInstance> {
    cfg.validate()?;
    let mut rng = run_rng(cfg.seed, run_index);
    let support = random_support(&mut rng, cfg.d, cfg.nnz);
    let weights = simplex_weights(&mut rng, cfg.nnz);
    let mut x0 = vec![0.0; cfg.d];
    for (&i, w) in support.iter().zip(weights) {
        x0[i] = w;
    }
    let a = gaussian_matrix(&mut rng, cfg.m, cfg.d, 1.0);
    let v = unit_vector(&mut rng, cfg.m);
    let ax0 = a.mul_vec(&x0);
    let noise = cfg.noise_scale * norm(&ax0);
    let b = ax0.iter().zip(&v).map(|(s, vi)| s + noise * vi).collect();
    Ok(RecoveryInstance { a, b, x0 })
}

/// Least-squares problem over the probability simplex whose minimizer is
/// planted in the relative interior of a chosen face, with a prescribed
/// score gap for every vertex off that face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFaceConfig {
    pub d: usize,
    /// Rows of `A`; must be at least `d` so the objective is strongly convex.
    pub m: usize,
    pub face_size: usize,
    /// Range of the planted score gaps off the face.
    pub gap_range: (f64, f64),
}

impl Default for PlantedFaceConfig {
    fn default() -> Self {
        Self {
            d: 50,
            m: 100,
            face_size: 5,
            gap_range: (0.1, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedFaceInstance {
    pub objective: LeastSquaresObjective,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Vertex ids (1-based coordinates) spanning the optimal face.
    pub face: Vec<VertexId>,
    /// Extreme eigenvalues of `AᵀA`.
    pub alpha: f64,
    pub beta: f64,
    /// Smallest planted score gap off the face.
    pub delta: f64,
}

/// Draws `A` with `N(0, 1/m)` entries and a face of `face_size` coordinates,
/// places `x*` at random positive weights on it, and solves for `b` so that
/// `∇f(x*) = λ` on the face and `λ + gap_j` off it.
pub fn gen_planted_face_instance<R: Rng>(cfg: &PlantedFaceConfig, rng: &mut R) -> Result<PlantedFaceInstance> {
    let (lo, hi) = cfg.gap_range;
    if cfg.face_size == 0 || cfg.face_size >= cfg.d {
        return invalid(format!("face_size must be in 1..{}, got {}", cfg.d, cfg.face_size));
    }
    if cfg.m < cfg.d {
        return invalid(format!(
            "m must be >= d for strong convexity, got m={} d={}",
            cfg.m, cfg.d
        ));
    }
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return invalid(format!("bad gap range ({lo}, {hi})"));
    }
    let a = gaussian_matrix(rng, cfg.m, cfg.d, 1.0 / (cfg.m as f64).sqrt());
    let support = random_support(rng, cfg.d, cfg.face_size);
    let weights = simplex_weights(rng, cfg.face_size);
    let level: f64 = rng.random_range(-1.0..0.0);
    let gaps = Uniform::new_inclusive(lo, hi).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut x_star = vec![0.0; cfg.d];
    for (&i, w) in support.iter().zip(&weights) {
        x_star[i] = *w;
    }
    let mut target = vec![level; cfg.d];
    let mut delta = f64::INFINITY;
    for (j, t) in target.iter_mut().enumerate() {
        if support.binary_search(&j).is_err() {
            let gap = gaps.sample(rng);
            delta = delta.min(gap);
            *t += gap;
        }
    }

    let am = a.to_nalgebra();
    let gram = am.transpose() * &am;
    let eig = SymmetricEigen::new(gram.clone());
    let alpha = eig.eigenvalues.min();
    let beta = eig.eigenvalues.max();
    let chol = Cholesky::new(gram).ok_or_else(|| Error::Inconsistent("AᵀA is not positive definite".into()))?;
    let y: DVector<f64> = chol.solve(&DVector::from_vec(target));
    let residual = &am * y;
    let fitted: DVector<f64> = &am * DVector::from_column_slice(&x_star);
    let b: Vec<f64> = fitted.iter().zip(residual.iter()).map(|(f, r)| f - r).collect();

    let objective = LeastSquaresObjective::new(a, b)?.with_smoothness(beta);
    let f_star = objective.value(&x_star);
    Ok(PlantedFaceInstance {
        objective,
        x_star,
        f_star,
        face: support.iter().map(|&i| VertexId(i as u64 + 1)).collect(),
        alpha,
        beta,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, sub};
    use crate::polytope::Polytope;

    fn cfg(d: usize, m: usize, nnz: usize, c: f64) -> RecoveryConfig {
        RecoveryConfig {
            d,
            m,
            nnz,
            noise_scale: c,
            runs: 1,
            ..RecoveryConfig::default()
        }
    }

    #[test]
    fn noiseless_instance_is_exact() {
        let inst = gen_recovery_instance(&cfg(50, 20, 3, 0.0), 0).unwrap();
        assert_eq!(inst.a.mul_vec(&inst.x0), inst.b);
    }

    #[test]
    fn dense_planted_vector_sums_to_one() {
        let inst = gen_recovery_instance(&cfg(40, 10, 40, 0.2), 3).unwrap();
        assert!((inst.x0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(inst.x0.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn noise_has_requested_norm() {
        let inst = gen_recovery_instance(&cfg(400, 125, 5, 0.2), 0).unwrap();
        let ax0 = inst.a.mul_vec(&inst.x0);
        let noise = norm(&sub(&inst.b, &ax0));
        assert!((noise - 0.2 * norm(&ax0)).abs() < 1e-9);
        assert_eq!(inst.x0.iter().filter(|&&x| x > 0.0).count(), 5);
        let p = Polytope::unit_simplex(400, 1.0).unwrap();
        assert!(p.contains(&inst.x0, 1e-12).unwrap());
    }

    #[test]
    fn runs_are_reproducible_and_distinct() {
        let c = cfg(30, 10, 4, 0.1);
        let a = gen_recovery_instance(&c, 2).unwrap();
        let b = gen_recovery_instance(&c, 2).unwrap();
        let other = gen_recovery_instance(&c, 3).unwrap();
        assert_eq!(a.b, b.b);
        assert_ne!(a.b, other.b);
    }

    #[test]
    fn bad_recovery_config() {
        assert!(gen_recovery_instance(&cfg(10, 5, 11, 0.1), 0).is_err());
        assert!(gen_recovery_instance(&cfg(10, 0, 2, 0.1), 0).is_err());
    }

    #[test]
    fn planted_gradient_matches_target() {
        let c = PlantedFaceConfig {
            d: 12,
            m: 24,
            face_size: 3,
            gap_range: (0.2, 0.4),
        };
        let inst = gen_planted_face_instance(&c, &mut run_rng(7, 0)).unwrap();
        let g = inst.objective.gradient(&inst.x_star);
        let on: Vec<f64> = inst.face.iter().map(|id| g[id.0 as usize - 1]).collect();
        for v in &on {
            assert!((v - on[0]).abs() < 1e-10);
        }
        let min_off = (0..12)
            .filter(|j| !inst.face.contains(&VertexId(*j as u64 + 1)))
            .map(|j| g[j] - on[0])
            .fold(f64::INFINITY, f64::min);
        assert!((min_off - inst.delta).abs() < 1e-10);
        assert!(inst.alpha > 0.0 && inst.alpha <= inst.beta);
        assert!(dist(&[inst.x_star.iter().sum::<f64>()], &[1.0]) < 1e-12);
    }
}
