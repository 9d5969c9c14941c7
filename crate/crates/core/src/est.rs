//! Expected sliced transport plans and distances.
//!
//! For a finite set of directions `theta_1..theta_L` with probability weights
//! `w_l`, the expected plan is `sum_l w_l * gamma_l`, where `gamma_l` is the
//! lifted plan of slice `l`, and the distance is
//! `(sum_l w_l * D_p(mu, nu; theta_l)^p)^(1/p)`.
//!
//! Per-slice work runs on the rayon pool. Results are collected in slice
//! order and folded sequentially, so the output does not depend on the
//! number of threads.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lifting::{slice_plan, SlicePlan};
use crate::measures::{DiscreteMeasure, PlanEntry, TransportPlan};
use crate::slicing::{check_unit, sample_sphere, DEFAULT_GROUPING_TOL};

/// Directions together with their probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    directions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SliceSet {
    pub fn new(directions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidParameter("slice set must not be empty".into()));
        }
        if directions.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} directions but {} weights",
                directions.len(),
                weights.len()
            )));
        }
        let dim = directions[0].len();
        for d in &directions {
            if d.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d.len(),
                });
            }
            check_unit(d)?;
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("slice weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("slice weights sum to {sum}")));
        }
        Ok(Self { directions, weights })
    }

    /// Equal weight `1/L` on every direction.
    pub fn uniform(directions: Vec<Vec<f64>>) -> Result<Self> {
        let l = directions.len();
        Self::new(directions, vec![1.0 / l as f64; l])
    }

    /// `count` uniformly weighted directions drawn from the sphere.
    pub fn sample(count: usize, dim: usize, seed: u64) -> Result<Self> {
        Self::uniform(sample_sphere(count, dim, seed))
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }
}

/// Expected plan, distance and the per-slice breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EstResult {
    pub plan: TransportPlan,
    /// `D_p(mu, nu)`.
    pub distance: f64,
    /// `D_p(mu, nu; theta_l)` per slice. These are costs, not p-th powers.
    pub per_slice_costs: Vec<f64>,
    pub slice_weights: Vec<f64>,
}

/// Best single slice.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSwgg {
    pub index: usize,
    pub plan: TransportPlan,
    pub cost: f64,
}

/// Cost exponent and grouping tolerance shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstConfig {
    pub p: f64,
    pub grouping_tol: f64,
}

impl Default for EstConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            grouping_tol: DEFAULT_GROUPING_TOL,
        }
    }
}

impl EstConfig {
    pub fn new(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn with_grouping_tol(mut self, grouping_tol: f64) -> Self {
        self.grouping_tol = grouping_tol;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::InvalidParameter(format!("cost exponent p = {}", self.p)));
        }
        Ok(())
    }

    /// Lifted plan and cost for every direction, in direction order.
    pub fn slice_plans(
        &self,
        source: &DiscreteMeasure,
        target: &DiscreteMeasure,
        directions: &[Vec<f64>],
    ) -> Result<Vec<SlicePlan>> {
        self.check()?;
        source.check_same_dim(target)?;
        if directions.is_empty() {
            return Err(Error::InvalidParameter("no directions".into()));
        }
        directions
            .par_iter()
            .map(|theta| slice_plan(source, target, theta, self.p, self.grouping_tol))
            .collect()
    }

    pub fn plan(&self, source: &DiscreteMeasure, target: &DiscreteMeasure, slices: &SliceSet) -> Result<EstResult> {
        let plans = self.slice_plans(source, target, slices.directions())?;
        Ok(aggregate(source, target, &plans, slices.weights().to_vec(), self.p))
    }

    pub fn tempered(
        &self,
        source: &DiscreteMeasure,
        target: &DiscreteMeasure,
        directions: &[Vec<f64>],
        tau: f64,
    ) -> Result<EstResult> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::InvalidParameter(format!("temperature tau = {tau}")));
        }
        let plans = self.slice_plans(source, target, directions)?;
        let costs: Vec<f64> = plans.iter().map(|s| s.cost_pow).collect();
        let weights = sigma_tau_weights(&costs, tau);
        Ok(aggregate(source, target, &plans, weights, self.p))
    }

    pub fn min_swgg(&self, source: &DiscreteMeasure, target: &DiscreteMeasure, directions: &[Vec<f64>]) -> Result<MinSwgg> {
        let plans = self.slice_plans(source, target, directions)?;
        let mut best = 0;
        for (l, s) in plans.iter().enumerate() {
            if s.cost_pow < plans[best].cost_pow {
                best = l;
            }
        }
        let cost = plans[best].cost(self.p);
        let plan = plans.into_iter().nth(best).unwrap().plan;
        Ok(MinSwgg { index: best, plan, cost })
    }
}

/// Weighted sum of slice plans, folded in slice order and then `(i, j)` order.
fn aggregate(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    plans: &[SlicePlan],
    weights: Vec<f64>,
    p: f64,
) -> EstResult {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut total_pow = 0.0;
    for (s, &w) in plans.iter().zip(&weights) {
        total_pow += w * s.cost_pow;
        if w == 0.0 {
            continue;
        }
        for e in s.plan.entries() {
            *acc.entry((e.source, e.target)).or_insert(0.0) += w * e.mass;
        }
    }
    let entries = acc
        .into_iter()
        .filter(|&(_, m)| m > 0.0)
        .map(|((i, j), m)| PlanEntry::new(i, j, m))
        .collect();
    EstResult {
        plan: TransportPlan::from_sorted(source.len(), target.len(), entries),
        distance: total_pow.powf(1.0 / p),
        per_slice_costs: plans.iter().map(|s| s.cost(p)).collect(),
        slice_weights: weights,
    }
}

/// Softmax of `-tau * cost` over the slices.
///
/// The minimum cost is subtracted before exponentiating, so a large `tau`
/// gives a one-hot vector at the cheapest slice instead of overflowing.
pub fn sigma_tau_weights(per_slice_costs_pow: &[f64], tau: f64) -> Vec<f64> {
    let min = per_slice_costs_pow.iter().copied().fold(f64::INFINITY, f64::min);
    let unnorm: Vec<f64> = per_slice_costs_pow
        .iter()
        .map(|&c| if tau == 0.0 { 1.0 } else { (-tau * (c - min)).exp() })
        .collect();
    let z: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / z).collect()
}

/// Expected sliced transport over a weighted slice set.
pub fn est_plan(source: &DiscreteMeasure, target: &DiscreteMeasure, slices: &SliceSet, p: f64) -> Result<EstResult> {
    EstConfig::new(p).plan(source, target, slices)
}

/// Expected sliced transport with slice weights `sigma_tau`.
pub fn est_plan_tempered(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    directions: &[Vec<f64>],
    p: f64,
    tau: f64,
) -> Result<EstResult> {
    EstConfig::new(p).tempered(source, target, directions, tau)
}

/// The slice with the smallest cost (lowest index on ties) and its plan.
pub fn min_swgg(source: &DiscreteMeasure, target: &DiscreteMeasure, directions: &[Vec<f64>], p: f64) -> Result<MinSwgg> {
    EstConfig::new(p).min_swgg(source, target, directions)
}
