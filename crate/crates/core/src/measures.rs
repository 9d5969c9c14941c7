//! Finite discrete probability measures and sparse transport plans.

use crate::error::{Error, Result};

/// Tolerance on the total weight accepted by [`DiscreteMeasure::new`].
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Marginal tolerance used by [`validate_coupling`].
pub const COUPLING_TOL: f64 = 1e-9;

/// A weighted finite point set `sum_i w_i delta_{x_i}` in `R^d`.
///
/// Weights are strictly positive and sum to one. Atoms are stored row-major
/// in a single buffer; duplicate coordinates are allowed and stay distinct by
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates and normalizes a measure. Zero-weight atoms are dropped and
    /// the surviving weights are rescaled to sum to one; atom order is kept.
    pub fn new(atoms: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                atoms: atoms.len(),
                weights: weights.len(),
            });
        }
        let dim = atoms.first().map(Vec::len).unwrap_or(0);
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        for atom in atoms {
            if atom.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: atom.len(),
                });
            }
            coords.extend_from_slice(atom);
        }
        Self::from_flat(dim, coords, weights.to_vec())
    }

    /// Same as [`DiscreteMeasure::new`] but with coordinates given row-major.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 && !weights.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if dim > 0 && coords.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                found: coords.len(),
            });
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidWeight { index, value: w });
            }
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index: pos / dim });
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::NonPositiveTotalMass);
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumOutOfTolerance { sum });
        }

        let mut kept_coords = Vec::with_capacity(coords.len());
        let mut kept_weights = Vec::with_capacity(weights.len());
        for (atom, &w) in coords.chunks_exact(dim).zip(&weights) {
            if w > 0.0 {
                kept_coords.extend_from_slice(atom);
                kept_weights.push(w);
            }
        }
        // Sums already within rounding error of one are left alone, which keeps
        // the constructor idempotent.
        let kept_sum: f64 = kept_weights.iter().sum();
        if (kept_sum - 1.0).abs() > 2.0 * kept_weights.len() as f64 * f64::EPSILON {
            for w in &mut kept_weights {
                *w /= kept_sum;
            }
        }
        Ok(Self {
            dim,
            coords: kept_coords,
            weights: kept_weights,
        })
    }

    /// Uniform measure `1/N sum_i delta_{x_i}`.
    pub fn uniform(atoms: &[Vec<f64>]) -> Result<Self> {
        let n = atoms.len();
        let weights = vec![1.0 / n as f64; n];
        Self::new(atoms, &weights)
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::from_flat(x.len(), x.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Returns a copy with every atom shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|a| a.iter().zip(v).map(|(x, s)| x + s))
            .collect();
        Ok(Self {
            dim: self.dim,
            coords,
            weights: self.weights.clone(),
        })
    }

    /// Returns a copy with atoms reordered so that new atom `k` is old atom `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut weights = Vec::with_capacity(self.weights.len());
        for &k in perm {
            coords.extend_from_slice(self.atom(k));
            weights.push(self.weights[k]);
        }
        Self {
            dim: self.dim,
            coords,
            weights,
        }
    }

    pub(crate) fn check_same_dim(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// `||x - y||^p`, evaluated without a square root when `p == 2`.
#[inline]
pub fn cost_pow(x: &[f64], y: &[f64], p: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if p == 2.0 {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

/// One cell `(i, j, mass)` of a sparse coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

impl PlanEntry {
    pub fn new(source: usize, target: usize, mass: f64) -> Self {
        Self {
            source,
            target,
            mass,
        }
    }
}

/// Sparse coupling between the atoms of an `n`-atom source and an `m`-atom
/// target. Entries are kept sorted by `(source, target)` and are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    source_size: usize,
    target_size: usize,
    entries: Vec<PlanEntry>,
}

impl TransportPlan {
    pub fn new(source_size: usize, target_size: usize, mut entries: Vec<PlanEntry>) -> Result<Self> {
        for e in &entries {
            if e.source >= source_size || e.target >= target_size {
                return Err(Error::IndexOutOfRange {
                    i: e.source,
                    j: e.target,
                    n: source_size,
                    m: target_size,
                });
            }
            if !(e.mass.is_finite() && e.mass > 0.0) {
                return Err(Error::NonPositiveMass {
                    i: e.source,
                    j: e.target,
                    mass: e.mass,
                });
            }
        }
        entries.sort_by_key(|e| (e.source, e.target));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target))
        {
            return Err(Error::DuplicateEntry {
                i: w[0].source,
                j: w[0].target,
            });
        }
        Ok(Self {
            source_size,
            target_size,
            entries,
        })
    }

    /// Builds a plan from entries already known to be valid, sorted and unique.
    pub(crate) fn from_sorted(source_size: usize, target_size: usize, entries: Vec<PlanEntry>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| (w[0].source, w[0].target) < (w[1].source, w[1].target)));
        debug_assert!(entries.iter().all(|e| e.mass > 0.0));
        Self {
            source_size,
            target_size,
            entries,
        }
    }

    /// Product coupling `mu (x) nu`.
    pub fn product(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Self {
        let entries = source
            .weights()
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| {
                target
                    .weights()
                    .iter()
                    .enumerate()
                    .map(move |(j, &b)| PlanEntry::new(i, j, a * b))
            })
            .filter(|e| e.mass > 0.0)
            .collect();
        Self::from_sorted(source.len(), target.len(), entries)
    }

    /// Diagonal coupling of a measure with itself.
    pub fn identity(measure: &DiscreteMeasure) -> Self {
        let entries = measure
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| PlanEntry::new(i, i, w))
            .collect();
        Self::from_sorted(measure.len(), measure.len(), entries)
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut rows = vec![0.0; self.source_size];
        for e in &self.entries {
            rows[e.source] += e.mass;
        }
        rows
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut cols = vec![0.0; self.target_size];
        for e in &self.entries {
            cols[e.target] += e.mass;
        }
        cols
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|e| PlanEntry::new(e.target, e.source, e.mass))
            .collect();
        entries.sort_by_key(|e| (e.source, e.target));
        Self::from_sorted(self.target_size, self.source_size, entries)
    }

    /// Dense row-major `n x m` matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.source_size * self.target_size];
        for e in &self.entries {
            dense[e.source * self.target_size + e.target] = e.mass;
        }
        dense
    }

    pub(crate) fn check_sizes(&self, source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<()> {
        if self.source_size != source.len() || self.target_size != target.len() {
            return Err(Error::IndexOutOfRange {
                i: self.source_size,
                j: self.target_size,
                n: source.len(),
                m: target.len(),
            });
        }
        Ok(())
    }
}

/// Sum of `mass * ||x_i - y_j||^p` over the plan, without the final root.
pub fn plan_cost_pow(
    plan: &TransportPlan,
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    p: f64,
) -> Result<f64> {
    plan.check_sizes(source, target)?;
    source.check_same_dim(target)?;
    Ok(plan
        .entries()
        .iter()
        .map(|e| e.mass * cost_pow(source.atom(e.source), target.atom(e.target), p))
        .sum())
}

/// `(sum mass * ||x_i - y_j||^p)^(1/p)`.
pub fn plan_cost(plan: &TransportPlan, source: &DiscreteMeasure, target: &DiscreteMeasure, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("cost exponent p = {p}")));
    }
    Ok(plan_cost_pow(plan, source, target, p)?.powf(1.0 / p))
}

/// Outcome of a marginal check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingReport {
    pub valid: bool,
    /// Largest absolute row-sum or column-sum deviation.
    pub max_deviation: f64,
}

/// Checks that the row sums of `plan` match the source weights and the
/// column sums match the target weights, each within [`COUPLING_TOL`].
pub fn validate_coupling(plan: &TransportPlan, source: &DiscreteMeasure, target: &DiscreteMeasure) -> CouplingReport {
    if plan.check_sizes(source, target).is_err() {
        return CouplingReport {
            valid: false,
            max_deviation: f64::INFINITY,
        };
    }
    let row_dev = plan
        .row_sums()
        .iter()
        .zip(source.weights())
        .map(|(r, w)| (r - w).abs())
        .fold(0.0, f64::max);
    let col_dev = plan
        .column_sums()
        .iter()
        .zip(target.weights())
        .map(|(c, w)| (c - w).abs())
        .fold(0.0, f64::max);
    let max_deviation = row_dev.max(col_dev);
    CouplingReport {
        valid: max_deviation <= COUPLING_TOL,
        max_deviation,
    }
}
