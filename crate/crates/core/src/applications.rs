//! Applications of transport plans: displacement interpolation, geodesics and
//! linear-OT embeddings.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::est::EstConfig;
use crate::measures::{DiscreteMeasure, TransportPlan, WEIGHT_SUM_TOL};
use crate::oracles::{sinkhorn, wasserstein_exact};
use crate::slicing::sample_sphere;

fn check_plan(plan: &TransportPlan, source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<()> {
    source.check_same_dim(target)?;
    if plan.source_size() != source.len() || plan.target_size() != target.len() {
        return Err(Error::InvalidCoupling {
            reason: format!(
                "plan is {}x{} but measures have {} and {} atoms",
                plan.source_size(),
                plan.target_size(),
                source.len(),
                target.len()
            ),
        });
    }
    Ok(())
}

/// Pushforward of `plan` under `(x, y) -> (1 - t) x + t y`.
///
/// The result has one atom per plan entry; coincident atoms are not merged.
/// The plan only needs matching sizes and unit total mass, so approximate
/// couplings (entropic plans) can be interpolated as well.
pub fn interpolate(plan: &TransportPlan, source: &DiscreteMeasure, target: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidT { t });
    }
    check_plan(plan, source, target)?;
    let total = plan.total_mass();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidCoupling {
            reason: format!("total mass {total}"),
        });
    }
    let dim = source.dim();
    let mut coords = Vec::with_capacity(plan.len() * dim);
    let mut weights = Vec::with_capacity(plan.len());
    for e in plan.entries() {
        let (x, y) = (source.atom(e.source), target.atom(e.target));
        coords.extend(x.iter().zip(y).map(|(a, b)| (1.0 - t) * a + t * b));
        weights.push(e.mass);
    }
    DiscreteMeasure::from_flat(dim, coords, weights)
}

/// Point at time `t` on the `W_2` geodesic from `source` to `target`.
pub fn geodesic(source: &DiscreteMeasure, target: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidT { t });
    }
    let (plan, _) = wasserstein_exact(source, target, 2.0)?;
    interpolate(&plan, source, target, t)
}

/// Barycentric projection `b_i = (1 / alpha_i) sum_j gamma_ij y_j` of a plan
/// from `reference` (weights `alpha`) to `target`.
pub fn barycentric_projection(plan: &TransportPlan, reference: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<Vec<Vec<f64>>> {
    check_plan(plan, reference, target)?;
    let dim = reference.dim();
    let mut out = vec![vec![0.0; dim]; reference.len()];
    let mut has_mass = vec![false; reference.len()];
    for e in plan.entries() {
        let y = target.atom(e.target);
        for (o, c) in out[e.source].iter_mut().zip(y) {
            *o += e.mass * c;
        }
        has_mass[e.source] = true;
    }
    if let Some(i) = has_mass.iter().position(|h| !h) {
        return Err(Error::InvalidCoupling {
            reason: format!("reference atom {i} sends no mass"),
        });
    }
    for (row, &alpha) in out.iter_mut().zip(reference.weights()) {
        for c in row.iter_mut() {
            *c /= alpha;
        }
    }
    Ok(out)
}

/// How the plan from the reference to a measure is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EmbedMethod {
    Est { slices: usize, tau: f64, seed: u64 },
    Exact,
    Sinkhorn { lambda: f64 },
}

/// Iteration budget for Sinkhorn-based embeddings.
const EMBED_SINKHORN_ITERS: usize = 10_000;
const EMBED_SINKHORN_TOL: f64 = 1e-9;

/// Rows `phi_i = b_i - x_i`, one per reference atom.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("embedding has non-finite entries".into()));
        }
        Ok(Self { dim, rows })
    }

    pub fn reference_size(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row-major feature vector of length `N * d`.
    pub fn to_features(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// Linear-OT embedding of `measure` relative to `reference`.
pub fn lot_embed(reference: &DiscreteMeasure, measure: &DiscreteMeasure, method: EmbedMethod, p: f64) -> Result<EmbeddingMatrix> {
    reference.check_same_dim(measure)?;
    let plan = match method {
        EmbedMethod::Est { slices, tau, seed } => {
            if slices == 0 {
                return Err(Error::InvalidParameter("at least one slice is required".into()));
            }
            let dirs = sample_sphere(slices, reference.dim(), seed);
            EstConfig::new(p).tempered(reference, measure, &dirs, tau)?.plan
        }
        EmbedMethod::Exact => wasserstein_exact(reference, measure, p)?.0,
        EmbedMethod::Sinkhorn { lambda } => {
            sinkhorn(reference, measure, p, lambda, EMBED_SINKHORN_ITERS, EMBED_SINKHORN_TOL)?.plan
        }
    };
    let bary = barycentric_projection(&plan, reference, measure)?;
    let rows = bary
        .into_iter()
        .zip(reference.atoms())
        .map(|(b, x)| b.iter().zip(x).map(|(bi, xi)| bi - xi).collect())
        .collect();
    EmbeddingMatrix::new(reference.dim(), rows)
}

/// Linear classifier fitted by minimum-norm least squares on `+1 / -1` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresClassifier {
    weights: Vec<f64>,
    bias: f64,
}

impl LeastSquaresClassifier {
    /// Fits `sign(w . x + b)` to binary labels.
    pub fn fit(features: &[Vec<f64>], labels: &[bool]) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::InvalidParameter("need one label per sample".into()));
        }
        let k = features[0].len();
        if features.iter().any(|f| f.len() != k) {
            return Err(Error::InvalidParameter("ragged feature matrix".into()));
        }
        let design = DMatrix::from_fn(features.len(), k + 1, |r, c| if c == k { 1.0 } else { features[r][c] });
        let rhs = DVector::from_iterator(labels.len(), labels.iter().map(|&l| if l { 1.0 } else { -1.0 }));
        let svd = design.svd(true, true);
        let solution = svd
            .solve(&rhs, 1e-10)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            weights: solution.iter().take(k).copied().collect(),
            bias: solution[k],
        })
    }

    pub fn predict(&self, features: &[f64]) -> bool {
        let score: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        score > 0.0
    }

    /// Fraction of samples classified correctly.
    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| self.predict(f) == l)
            .count();
        hits as f64 / labels.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{plan_cost, PlanEntry};
    use approx::assert_abs_diff_eq;

    fn pair() -> (DiscreteMeasure, DiscreteMeasure) {
        let mu = DiscreteMeasure::new(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![-1.0, 2.0]], &[0.2, 0.5, 0.3]).unwrap();
        let nu = DiscreteMeasure::new(&[vec![3.0, 1.0], vec![2.0, -1.0]], &[0.6, 0.4]).unwrap();
        (mu, nu)
    }

    #[test]
    fn interpolation_endpoints() {
        let (mu, nu) = pair();
        let plan = TransportPlan::product(&mu, &nu);
        let start = interpolate(&plan, &mu, &nu, 0.0).unwrap();
        let end = interpolate(&plan, &mu, &nu, 1.0).unwrap();
        // Atom k sits on x_i (resp. y_j) of plan entry k.
        for (k, e) in plan.entries().iter().enumerate() {
            assert_eq!(start.atom(k), mu.atom(e.source));
            assert_eq!(end.atom(k), nu.atom(e.target));
        }
        // Merging split atoms recovers the marginals.
        let mut rows = vec![0.0; mu.len()];
        for (k, e) in plan.entries().iter().enumerate() {
            rows[e.source] += start.weight(k);
        }
        for (r, w) in rows.iter().zip(mu.weights()) {
            assert_abs_diff_eq!(r, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolation_midpoint_of_diracs() {
        let x = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let y = DiscreteMeasure::dirac(&[2.0, 4.0]).unwrap();
        let plan = TransportPlan::product(&x, &y);
        let mid = interpolate(&plan, &x, &y, 0.5).unwrap();
        assert_eq!(mid.len(), 1);
        assert_eq!(mid.atom(0), &[1.0, 2.0]);
    }

    #[test]
    fn interpolation_rejects_bad_inputs() {
        let (mu, nu) = pair();
        let plan = TransportPlan::product(&mu, &nu);
        assert!(matches!(interpolate(&plan, &mu, &nu, 1.5), Err(Error::InvalidT { .. })));
        assert!(matches!(interpolate(&plan, &nu, &mu, 0.5), Err(Error::InvalidCoupling { .. })));
        let partial = TransportPlan::new(3, 2, vec![PlanEntry::new(0, 0, 0.5)]).unwrap();
        assert!(matches!(interpolate(&partial, &mu, &nu, 0.5), Err(Error::InvalidCoupling { .. })));
    }

    #[test]
    fn interpolation_cost_is_linear_in_time() {
        let (mu, nu) = pair();
        let plan = TransportPlan::product(&mu, &nu);
        let full = plan_cost(&plan, &mu, &nu, 2.0).unwrap();
        let end = interpolate(&plan, &mu, &nu, 1.0).unwrap();
        for t in [0.0, 0.25, 0.6, 0.9] {
            let mid = interpolate(&plan, &mu, &nu, t).unwrap();
            let diag = TransportPlan::identity(&mid);
            let c = plan_cost(&diag, &mid, &end, 2.0).unwrap();
            assert_abs_diff_eq!(c, (1.0 - t) * full, epsilon = 1e-12);
            assert_abs_diff_eq!(mid.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn geodesic_between_diracs() {
        let x = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let y = DiscreteMeasure::dirac(&[2.0, 0.0]).unwrap();
        let mid = geodesic(&x, &y, 0.5).unwrap();
        assert_eq!(mid.atom(0), &[1.0, 0.0]);
        let (_, w) = wasserstein_exact(&mid, &y, 2.0).unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12);
        let end = geodesic(&x, &y, 1.0).unwrap();
        assert_eq!(end, y);
    }

    #[test]
    fn barycentric_identity() {
        let (mu, _) = pair();
        let b = barycentric_projection(&TransportPlan::identity(&mu), &mu, &mu).unwrap();
        for (bi, xi) in b.iter().zip(mu.atoms()) {
            for (u, v) in bi.iter().zip(xi) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn barycentric_onto_dirac() {
        let (mu, _) = pair();
        let y = DiscreteMeasure::dirac(&[4.0, -2.0]).unwrap();
        let b = barycentric_projection(&TransportPlan::product(&mu, &y), &mu, &y).unwrap();
        for bi in b {
            assert_abs_diff_eq!(bi[0], 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(bi[1], -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn barycentric_weighted_average() {
        let reference = DiscreteMeasure::uniform(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let target = DiscreteMeasure::new(&[vec![0.0, 0.0], vec![2.0, 0.0]], &[0.25, 0.75]).unwrap();
        let plan = TransportPlan::new(
            2,
            2,
            vec![PlanEntry::new(0, 0, 0.25), PlanEntry::new(0, 1, 0.25), PlanEntry::new(1, 1, 0.5)],
        )
        .unwrap();
        let b = barycentric_projection(&plan, &reference, &target).unwrap();
        assert_eq!(b, vec![vec![1.0, 0.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn embedding_of_reference_is_zero() {
        let (mu, _) = pair();
        for method in [EmbedMethod::Exact, EmbedMethod::Est { slices: 16, tau: 0.0, seed: 1 }] {
            let emb = lot_embed(&mu, &mu, method, 2.0).unwrap();
            assert!(emb.to_features().iter().all(|v| v.abs() < 1e-12), "{method:?}");
        }
        let emb = lot_embed(&mu, &mu, EmbedMethod::Sinkhorn { lambda: 1e-2 }, 2.0).unwrap();
        assert!(emb.to_features().iter().all(|v| v.abs() <= 1e-3));
    }

    #[test]
    fn embedding_of_translate_is_shift() {
        let (mu, _) = pair();
        let v = [0.7, -1.3];
        let shifted = mu.translated(&v).unwrap();
        let emb = lot_embed(&mu, &shifted, EmbedMethod::Exact, 2.0).unwrap();
        for row in emb.rows() {
            assert_abs_diff_eq!(row[0], v[0], epsilon = 1e-9);
            assert_abs_diff_eq!(row[1], v[1], epsilon = 1e-9);
        }
    }

    #[test]
    fn least_squares_separates_lines() {
        let features: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64, 1.0 - k as f64 * 0.1]).collect();
        let labels: Vec<bool> = (0..10).map(|k| k >= 5).collect();
        let clf = LeastSquaresClassifier::fit(&features, &labels).unwrap();
        assert_eq!(clf.accuracy(&features, &labels), 1.0);
    }
}
