use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dist, norm};
use crate::polytope::{Vertex, VertexId};

/// Atoms whose weight falls below this are removed and their mass folded
/// back into the remaining atoms.
pub const PRUNE_WEIGHT: f64 = 1e-14;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const DECOMPOSITION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Atom {
    pub vertex: Vertex,
    pub weight: f64,
}

/// An explicit convex decomposition `x = Σ λᵢ vᵢ` with all `λᵢ > 0`.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    atoms: Vec<Atom>,
    x: Vec<f64>,
}

impl ActiveSet {
    pub fn from_vertex(v: Vertex) -> Self {
        let x = v.coords().to_vec();
        Self {
            atoms: vec![Atom { vertex: v, weight: 1.0 }],
            x,
        }
    }

    /// Builds a decomposition from explicit weights, which must be positive
    /// and sum to one.
    pub fn from_atoms(atoms: Vec<(Vertex, f64)>) -> Result<Self> {
        let Some((first, _)) = atoms.first() else {
            return invalid("active set needs at least one atom");
        };
        let mut x = vec![0.0; first.coords().len()];
        for (v, w) in &atoms {
            if v.coords().len() != x.len() {
                return invalid("atoms have unequal dimensions");
            }
            axpy(*w, v.coords(), &mut x);
        }
        let set = Self {
            atoms: atoms
                .into_iter()
                .map(|(vertex, weight)| Atom { vertex, weight })
                .collect(),
            x,
        };
        set.check_invariants()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// The cached point.
    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn support_ids(&self) -> Vec<VertexId> {
        let mut ids: Vec<VertexId> = self.atoms.iter().map(|a| a.vertex.id()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn position_of(&self, id: VertexId) -> Option<usize> {
        self.atoms.iter().position(|a| a.vertex.id() == id)
    }

    pub fn weights(&self) -> Vec<(VertexId, f64)> {
        self.atoms.iter().map(|a| (a.vertex.id(), a.weight)).collect()
    }

    fn combination(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.x.len()];
        for a in &self.atoms {
            axpy(a.weight, a.vertex.coords(), &mut y);
        }
        y
    }

    /// Recomputes the cached point from the atoms.
    pub fn refresh_point(&mut self) {
        self.x = self.combination();
    }

    /// `x ← (1−η)x + ηu`. A full step collapses the set to `{u}`.
    pub(crate) fn apply_fw(&mut self, u: &Vertex, eta: f64) -> usize {
        if eta >= 1.0 {
            *self = Self::from_vertex(u.clone());
            return 0;
        }
        for a in &mut self.atoms {
            a.weight *= 1.0 - eta;
        }
        match self.position_of(u.id()) {
            Some(i) => self.atoms[i].weight += eta,
            None => self.atoms.push(Atom {
                vertex: u.clone(),
                weight: eta,
            }),
        }
        for (xi, ui) in self.x.iter_mut().zip(u.coords()) {
            *xi = (1.0 - eta) * *xi + eta * ui;
        }
        self.tidy(None)
    }

    /// `x ← x + η(x − z)` for the atom at `position`. A drop step removes it.
    pub(crate) fn apply_away(&mut self, position: usize, eta: f64, drop: bool) -> usize {
        let z = self.atoms[position].vertex.clone();
        for a in &mut self.atoms {
            a.weight *= 1.0 + eta;
        }
        self.atoms[position].weight -= eta;
        for (xi, zi) in self.x.iter_mut().zip(z.coords()) {
            *xi = (1.0 + eta) * *xi - eta * zi;
        }
        let pruned = self.tidy(drop.then_some(position));
        if eta > 1.0 || drop {
            // (1+η) amplifies drift in the cached point.
            self.refresh_point();
        }
        pruned
    }

    /// Removes the dropped atom and any below [`PRUNE_WEIGHT`], then
    /// renormalizes. Returns the number of atoms pruned (not counting the drop).
    fn tidy(&mut self, dropped: Option<usize>) -> usize {
        if let Some(i) = dropped {
            self.atoms.remove(i);
        }
        let before = self.atoms.len();
        if self.atoms.iter().any(|a| a.weight < PRUNE_WEIGHT) {
            let heaviest = self
                .atoms
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.weight.total_cmp(&b.1.weight))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let mut i = 0;
            self.atoms.retain(|a| {
                let keep = a.weight >= PRUNE_WEIGHT || i == heaviest;
                i += 1;
                keep
            });
        }
        let pruned = before - self.atoms.len();
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        for a in &mut self.atoms {
            a.weight /= total;
        }
        if pruned > 0 {
            self.refresh_point();
        }
        pruned
    }

    /// Positive weights summing to one, no duplicate ids, and the cached
    /// point agreeing with the weighted atoms.
    pub fn check_invariants(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Inconsistent("active set is empty".into()));
        }
        if let Some(a) = self.atoms.iter().find(|a| !(a.weight > 0.0)) {
            return Err(Error::Inconsistent(format!(
                "atom {} has non-positive weight {:e}",
                a.vertex.id(),
                a.weight
            )));
        }
        let sum: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Inconsistent(format!("weights sum to {sum:.17} instead of 1")));
        }
        let mut ids = self.support_ids();
        ids.dedup();
        if ids.len() != self.atoms.len() {
            return Err(Error::Inconsistent("duplicate vertex in active set".into()));
        }
        let drift = dist(&self.combination(), &self.x);
        if drift > DECOMPOSITION_TOL * (1.0 + norm(&self.x)) {
            return Err(Error::Inconsistent(format!(
                "cached point drifted {drift:e} from its decomposition"
            )));
        }
        Ok(())
    }
}
