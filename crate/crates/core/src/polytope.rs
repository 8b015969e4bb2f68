//! Polytopes with linear minimization oracles.
//!
//! Four kinds are supported: the scaled unit simplex `τ·S_d`, the
//! down-closed simplex `{x ≥ 0, Σx ≤ 1}`, the hypercube `[0,1]^d`, and an
//! explicit vertex list. The structured kinds have closed-form oracles; the
//! explicit kind scans its vertices.
//!
//! Vertex ids:
//! - simplex kinds: `e_i` has id `i` (1-based); the origin of the down-closed
//!   simplex has id `0`.
//! - hypercube: bit `i` of the id is coordinate `i` (so `d ≤ 64`).
//! - explicit: 0-based position in the vertex list.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dist, dot, parse_rows};

/// Default per-constraint membership tolerance.
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest hypercube dimension whose vertices fit in a 64-bit id.
pub const MAX_HYPERCUBE_DIM: usize = 64;

/// Hypercube vertex enumeration is refused above this dimension.
const MAX_ENUMERABLE_HYPERCUBE_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u64);

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An extreme point of a polytope. Equality compares ids only.
#[derive(Debug, Clone)]
pub struct Vertex {
    id: VertexId,
    coords: Vec<f64>,
}

impl Vertex {
    pub fn id(&self) -> VertexId {
        self.id
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl PartialEq for Vertex {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Vertex {}

/// How the oracle picks among exactly-tied optimal vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakPolicy {
    /// Smallest id.
    #[default]
    FirstIndex,
    /// Smallest id outside `forbidden`, falling back to [`TieBreakPolicy::FirstIndex`]
    /// when every optimal vertex is forbidden.
    Adversarial { forbidden: BTreeSet<VertexId> },
}

impl TieBreakPolicy {
    pub fn adversarial(forbidden: impl IntoIterator<Item = VertexId>) -> Self {
        Self::Adversarial {
            forbidden: forbidden.into_iter().collect(),
        }
    }

    fn forbids(&self, id: VertexId) -> bool {
        match self {
            Self::FirstIndex => false,
            Self::Adversarial { forbidden } => forbidden.contains(&id),
        }
    }
}

/// A face of a simplex-family polytope, given by its spanning vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceDescription {
    pub vertex_ids: BTreeSet<VertexId>,
    pub dim: usize,
}

impl FaceDescription {
    pub fn contains(&self, id: VertexId) -> bool {
        self.vertex_ids.contains(&id)
    }
}

/// Geometric constants of the optimal face used by the linear-rate analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaDiagnostics {
    pub psi_star: f64,
    pub xi_star: f64,
    pub kappa_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolytopeKind {
    UnitSimplex { dim: usize, scale: f64 },
    DownClosedSimplex { dim: usize },
    Hypercube { dim: usize },
    ExplicitVertices { vertices: Vec<Vec<f64>>, diameter: f64 },
}

/// An immutable polytope. Construct through the validating constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    kind: PolytopeKind,
}

impl Polytope {
    /// `τ·S_d = {x ≥ 0, Σx = τ}`.
    pub fn unit_simplex(dim: usize, scale: f64) -> Result<Self> {
        if dim < 2 {
            return invalid(format!("unit simplex needs dimension >= 2, got {dim}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return invalid(format!("simplex scale must be positive and finite, got {scale}"));
        }
        Ok(Self {
            kind: PolytopeKind::UnitSimplex { dim, scale },
        })
    }

    /// `{x ≥ 0, Σx ≤ 1}`, with the origin as vertex 0.
    pub fn down_closed_simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("down-closed simplex needs dimension >= 1");
        }
        Ok(Self {
            kind: PolytopeKind::DownClosedSimplex { dim },
        })
    }

    pub fn hypercube(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_HYPERCUBE_DIM {
            return invalid(format!(
                "hypercube dimension must be in 1..={MAX_HYPERCUBE_DIM}, got {dim}"
            ));
        }
        Ok(Self {
            kind: PolytopeKind::Hypercube { dim },
        })
    }

    /// Convex hull of the given points. The points are taken to be its
    /// vertices; redundant interior points are not detected.
    pub fn explicit(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return invalid("explicit polytope needs at least one vertex");
        };
        let dim = first.len();
        if dim == 0 {
            return invalid("explicit vertices must have at least one coordinate");
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return invalid("explicit vertices have unequal lengths");
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return invalid("explicit vertices contain non-finite coordinates");
        }
        let mut diameter = 0.0_f64;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diameter = diameter.max(dist(a, b));
            }
        }
        if diameter <= 0.0 {
            return invalid("explicit polytope has zero diameter");
        }
        Ok(Self {
            kind: PolytopeKind::ExplicitVertices { vertices, diameter },
        })
    }

    /// Loads an explicit polytope: one vertex per line, whitespace-separated.
    pub fn explicit_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::explicit(parse_rows(&text, &path.display().to_string())?)
    }

    pub fn kind(&self) -> &PolytopeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PolytopeKind::UnitSimplex { dim, .. }
            | PolytopeKind::DownClosedSimplex { dim }
            | PolytopeKind::Hypercube { dim } => *dim,
            PolytopeKind::ExplicitVertices { vertices, .. } => vertices[0].len(),
        }
    }

    pub fn is_simplex_family(&self) -> bool {
        matches!(
            self.kind,
            PolytopeKind::UnitSimplex { .. } | PolytopeKind::DownClosedSimplex { .. }
        )
    }

    pub fn vertex_count(&self) -> u128 {
        match &self.kind {
            PolytopeKind::UnitSimplex { dim, .. } => *dim as u128,
            PolytopeKind::DownClosedSimplex { dim } => *dim as u128 + 1,
            PolytopeKind::Hypercube { dim } => 1u128 << *dim,
            PolytopeKind::ExplicitVertices { vertices, .. } => vertices.len() as u128,
        }
    }

    /// Id of the origin when it is a vertex (down-closed simplex, hypercube).
    pub fn origin_id(&self) -> Option<VertexId> {
        match &self.kind {
            PolytopeKind::DownClosedSimplex { .. } | PolytopeKind::Hypercube { .. } => Some(VertexId(0)),
            _ => None,
        }
    }

    /// Reconstructs the vertex with the given id.
    pub fn vertex(&self, id: VertexId) -> Result<Vertex> {
        let d = self.dim();
        let coords = match &self.kind {
            PolytopeKind::UnitSimplex { scale, .. } => {
                let i = id.0 as usize;
                if i == 0 || i > d {
                    return invalid(format!("unit simplex has no vertex {id}"));
                }
                let mut c = vec![0.0; d];
                c[i - 1] = *scale;
                c
            }
            PolytopeKind::DownClosedSimplex { .. } => {
                let i = id.0 as usize;
                if i > d {
                    return invalid(format!("down-closed simplex has no vertex {id}"));
                }
                let mut c = vec![0.0; d];
                if i > 0 {
                    c[i - 1] = 1.0;
                }
                c
            }
            PolytopeKind::Hypercube { .. } => {
                if d < 64 && id.0 >> d != 0 {
                    return invalid(format!("hypercube has no vertex {id}"));
                }
                (0..d).map(|i| ((id.0 >> i) & 1) as f64).collect()
            }
            PolytopeKind::ExplicitVertices { vertices, .. } => vertices
                .get(id.0 as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("no explicit vertex {id}")))?
                .clone(),
        };
        Ok(Vertex { id, coords })
    }

    /// All vertices in increasing id order.
    pub fn vertices(&self) -> Result<Vec<Vertex>> {
        let ids: Vec<u64> = match &self.kind {
            PolytopeKind::UnitSimplex { dim, .. } => (1..=*dim as u64).collect(),
            PolytopeKind::DownClosedSimplex { dim } => (0..=*dim as u64).collect(),
            PolytopeKind::Hypercube { dim } => {
                if *dim > MAX_ENUMERABLE_HYPERCUBE_DIM {
                    return Err(Error::Unsupported(format!(
                        "refusing to enumerate 2^{dim} hypercube vertices"
                    )));
                }
                (0..1u64 << *dim).collect()
            }
            PolytopeKind::ExplicitVertices { vertices, .. } => (0..vertices.len() as u64).collect(),
        };
        ids.into_iter().map(|i| self.vertex(VertexId(i))).collect()
    }

    /// `(id, vᵀg)` for every vertex, in increasing id order.
    pub fn vertex_values(&self, g: &[f64]) -> Result<Vec<(VertexId, f64)>> {
        self.check_len(g, "direction")?;
        Ok(match &self.kind {
            PolytopeKind::UnitSimplex { scale, .. } => {
                (1u64..).zip(g).map(|(i, gi)| (VertexId(i), scale * gi)).collect()
            }
            PolytopeKind::DownClosedSimplex { .. } => std::iter::once((VertexId(0), 0.0))
                .chain((1u64..).zip(g).map(|(i, &gi)| (VertexId(i), gi)))
                .collect(),
            _ => self
                .vertices()?
                .into_iter()
                .map(|v| (v.id(), dot(v.coords(), g)))
                .collect(),
        })
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            PolytopeKind::UnitSimplex { scale, .. } => scale * std::f64::consts::SQRT_2,
            PolytopeKind::DownClosedSimplex { dim } => {
                if *dim == 1 {
                    1.0
                } else {
                    std::f64::consts::SQRT_2
                }
            }
            PolytopeKind::Hypercube { dim } => (*dim as f64).sqrt(),
            PolytopeKind::ExplicitVertices { diameter, .. } => *diameter,
        }
    }

    fn check_len(&self, x: &[f64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!(
                "{what} has length {}, polytope dimension is {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// Linear minimization oracle: a vertex minimizing `vᵀgrad`, ties broken by `policy`.
    ///
    /// Ties are exact floating-point equality of the inner products.
    pub fn lmo(&self, grad: &[f64], policy: &TieBreakPolicy) -> Result<Vertex> {
        self.check_len(grad, "gradient")?;
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return invalid(format!("gradient entry {i} is not finite: {}", grad[i]));
        }
        let id = match &self.kind {
            PolytopeKind::UnitSimplex { scale, .. } => {
                let values = grad.iter().map(|g| scale * g);
                pick_among((1u64..).zip(values), policy)
            }
            PolytopeKind::DownClosedSimplex { .. } => {
                let values = std::iter::once((0u64, 0.0)).chain((1u64..).zip(grad.iter().copied()));
                pick_among(values, policy)
            }
            PolytopeKind::Hypercube { .. } => hypercube_lmo(grad, policy),
            PolytopeKind::ExplicitVertices { vertices, .. } => {
                let values = (0u64..).zip(vertices.iter().map(|v| dot(v, grad)));
                pick_among(values, policy)
            }
        };
        self.vertex(VertexId(id))
    }

    /// Whether `x` satisfies the defining constraints within `tol` per constraint.
    ///
    /// Explicit polytopes have no constraint description; for them `tol` bounds
    /// the Euclidean distance from `x` to the convex hull, which is computed
    /// with the away-step solver over the hull weights.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        self.check_len(x, "point")?;
        if !(tol >= 0.0) {
            return invalid(format!("membership tolerance must be >= 0, got {tol}"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        let nonneg = || x.iter().all(|&v| v >= -tol);
        Ok(match &self.kind {
            PolytopeKind::UnitSimplex { scale, .. } => nonneg() && (x.iter().sum::<f64>() - scale).abs() <= tol,
            PolytopeKind::DownClosedSimplex { .. } => nonneg() && x.iter().sum::<f64>() <= 1.0 + tol,
            PolytopeKind::Hypercube { .. } => x.iter().all(|&v| v >= -tol && v <= 1.0 + tol),
            PolytopeKind::ExplicitVertices { vertices, .. } => hull_distance(vertices, x) <= tol,
        })
    }

    fn simplex_ids(&self, ids: &[VertexId]) -> Result<BTreeSet<VertexId>> {
        if !self.is_simplex_family() {
            return Err(Error::Unsupported(
                "face machinery is implemented for the simplex family only".into(),
            ));
        }
        if ids.is_empty() {
            return invalid("face support must be nonempty");
        }
        for &id in ids {
            self.vertex(id)?;
        }
        Ok(ids.iter().copied().collect())
    }

    /// Smallest face spanned by the given vertices.
    ///
    /// Simplex-family vertices are affinely independent, so the count of
    /// linearly independent tight constraints is `d - (k - 1)` for `k`
    /// spanning vertices and the face dimension is `k - 1`.
    pub fn face_of_support(&self, support_ids: &[VertexId]) -> Result<FaceDescription> {
        let vertex_ids = self.simplex_ids(support_ids)?;
        let dim = vertex_ids.len() - 1;
        Ok(FaceDescription { vertex_ids, dim })
    }

    /// `ψ*`, `ξ*` and `κ̃ = 2·dim·ψ*²/(ξ*²·α)` for a face of the scaled unit simplex.
    pub fn kappa_diagnostics(&self, face: &FaceDescription, alpha: f64) -> Result<KappaDiagnostics> {
        let PolytopeKind::UnitSimplex { dim: d, scale } = self.kind else {
            return Err(Error::Unsupported(
                "kappa diagnostics are implemented for the unit simplex only".into(),
            ));
        };
        if !(alpha > 0.0) {
            return invalid(format!("alpha must be positive, got {alpha}"));
        }
        if face.dim == 0 {
            return invalid("kappa is undefined for a zero-dimensional face");
        }
        let ids: Vec<VertexId> = face.vertex_ids.iter().copied().collect();
        self.simplex_ids(&ids)?;
        if face.dim + 1 != ids.len() {
            return invalid(format!(
                "face lists {} vertices but claims dimension {}",
                ids.len(),
                face.dim
            ));
        }

        // Inequalities -x_i <= 0 that are tight on part of the face but not all
        // of it: exactly the coordinates in the face's support.
        let rows: Vec<Vec<f64>> = ids
            .iter()
            .map(|id| {
                let mut r = vec![0.0; d];
                r[id.0 as usize - 1] = -1.0;
                r
            })
            .collect();

        let mut psi_star = 0.0_f64;
        for subset in subsets_of_size(rows.len(), face.dim) {
            let selected: Vec<&Vec<f64>> = subset.iter().map(|&i| &rows[i]).collect();
            let gram = nalgebra::DMatrix::from_fn(selected.len(), selected.len(), |i, j| dot(selected[i], selected[j]));
            let eig = nalgebra::SymmetricEigen::new(gram);
            if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
                continue; // rows not linearly independent
            }
            let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
            psi_star = psi_star.max(top.sqrt());
        }

        let mut xi_star = f64::INFINITY;
        for &id in &ids {
            let v = self.vertex(id)?;
            for r in &rows {
                let slack = -dot(r, v.coords());
                if slack > 0.0 {
                    xi_star = xi_star.min(slack);
                }
            }
        }
        debug_assert!((xi_star - scale).abs() <= 1e-12 * scale);

        let kappa_tilde = 2.0 * face.dim as f64 * psi_star * psi_star / (xi_star * xi_star * alpha);
        Ok(KappaDiagnostics {
            psi_star,
            xi_star,
            kappa_tilde,
        })
    }
}

/// Exact-minimum selection over `(id, value)` pairs listed in increasing id order.
fn pick_among(values: impl Iterator<Item = (u64, f64)>, policy: &TieBreakPolicy) -> u64 {
    let mut best = f64::INFINITY;
    let mut first: Option<u64> = None;
    let mut allowed: Option<u64> = None;
    for (id, v) in values {
        if v < best {
            best = v;
            first = Some(id);
            allowed = (!policy.forbids(VertexId(id))).then_some(id);
        } else if v == best && allowed.is_none() && !policy.forbids(VertexId(id)) {
            allowed = Some(id);
        }
    }
    allowed.or(first).expect("oracle over an empty vertex set")
}

fn hypercube_lmo(grad: &[f64], policy: &TieBreakPolicy) -> u64 {
    let mut base = 0u64;
    let mut free = Vec::new();
    for (i, &g) in grad.iter().enumerate() {
        if g < 0.0 {
            base |= 1 << i;
        } else if g == 0.0 {
            free.push(i);
        }
    }
    if let TieBreakPolicy::Adversarial { forbidden } = policy {
        // Enumerate tied vertices in increasing id order; at most
        // |forbidden| + 1 candidates are needed.
        let total: u128 = 1u128 << free.len();
        let mut k: u128 = 0;
        while k < total && k <= forbidden.len() as u128 {
            let mut id = base;
            for (bit, &pos) in free.iter().enumerate() {
                if (k >> bit) & 1 == 1 {
                    id |= 1 << pos;
                }
            }
            if !forbidden.contains(&VertexId(id)) {
                return id;
            }
            k += 1;
        }
    }
    base
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Euclidean distance from `x` to `conv(vertices)` by Wolfe's min-norm-point
/// algorithm on the translated points `v − x`. Terminates finitely; the
/// returned value is the norm of a hull point, so it never understates
/// membership.
fn hull_distance(vertices: &[Vec<f64>], x: &[f64]) -> f64 {
    let pts: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    let scale = pts.iter().map(|p| dot(p, p)).fold(0.0f64, f64::max);
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let combine = |set: &[usize], w: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (&i, &wi) in set.iter().zip(w) {
            for (yk, pk) in y.iter_mut().zip(&pts[i]) {
                *yk += wi * pk;
            }
        }
        y
    };

    let first = (0..pts.len())
        .min_by(|&a, &b| dot(&pts[a], &pts[a]).total_cmp(&dot(&pts[b], &pts[b])))
        .expect("nonempty vertex list");
    let mut set = vec![first];
    let mut w = vec![1.0];
    let mut y = pts[first].clone();
    // Each major cycle strictly decreases ‖y‖; the cap only guards rounding.
    for _ in 0..(10 * pts.len() + 100) {
        let yy = dot(&y, &y);
        if yy == 0.0 {
            return 0.0;
        }
        let (j, yj) = (0..pts.len())
            .map(|j| (j, dot(&y, &pts[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty vertex list");
        if yy - yj <= eps || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let Some(alpha) = affine_min_norm(&pts, &set) else {
                return yy.sqrt();
            };
            if alpha.iter().all(|&a| a > 0.0) {
                w = alpha;
                y = combine(&set, &w);
                break;
            }
            // Move toward the affine minimizer until a weight hits zero.
            let theta = w
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= 0.0)
                .map(|(&wi, &a)| wi / (wi - a))
                .fold(1.0f64, f64::min);
            for (wi, a) in w.iter_mut().zip(&alpha) {
                *wi += theta * (a - *wi);
            }
            (set, w) = set
                .iter()
                .zip(&w)
                .filter(|(_, &wi)| wi > 0.0)
                .map(|(&i, &wi)| (i, wi))
                .unzip();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
    }
    dot(&y, &y).sqrt()
}

/// Weights of the minimum-norm point of the affine hull of `pts[set]`.
fn affine_min_norm(pts: &[Vec<f64>], set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    let mut m = nalgebra::DMatrix::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::zeros(k + 1);
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate() {
            m[(a, b)] = dot(&pts[i], &pts[j]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let alpha: Vec<f64> = sol.iter().take(k).copied().collect();
    alpha.iter().all(|a| a.is_finite()).then_some(alpha)
}
