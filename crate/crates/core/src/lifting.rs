//! Lifting a coupling of slice classes back to a coupling of atoms.
//!
//! A one-dimensional entry `(a, b, m)` is split over the members of the two
//! classes in proportion to their weights: atom `i` of class `a` and atom `j`
//! of class `b` receive `m * (p_i / P_a) * (q_j / Q_b)`.

use crate::error::{Error, Result};
use crate::measures::{cost_pow, DiscreteMeasure, PlanEntry, TransportPlan};
use crate::slicing::{project, solve_1d, OneDPlan, ProjectedMeasure};

/// Lifted masses below this are dropped.
const MIN_LIFTED_MASS: f64 = 1e-15;

/// Lifts `plan1d` between the slices of `source` and `target` to a plan
/// between the atoms themselves.
pub fn lift(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    proj_source: &ProjectedMeasure,
    proj_target: &ProjectedMeasure,
    plan1d: &OneDPlan,
) -> Result<TransportPlan> {
    let (ns, nt) = (proj_source.num_classes(), proj_target.num_classes());
    let mut entries = Vec::with_capacity(source.len() + target.len());
    let mut block = Vec::new();
    for e in plan1d.entries() {
        let (a, b) = (e.source_class, e.target_class);
        if a >= ns || b >= nt {
            return Err(Error::ClassMismatch {
                a,
                b,
                source_classes: ns,
                target_classes: nt,
            });
        }
        let class_p = proj_source.class_masses()[a];
        let class_q = proj_target.class_masses()[b];

        block.clear();
        let mut dropped = 0.0;
        for (&i, &p_i) in proj_source.members(a).iter().zip(proj_source.member_weights(a)) {
            let share_i = e.mass * (p_i / class_p);
            for (&j, &q_j) in proj_target.members(b).iter().zip(proj_target.member_weights(b)) {
                let mass = share_i * (q_j / class_q);
                if mass >= MIN_LIFTED_MASS {
                    block.push(PlanEntry::new(i, j, mass));
                } else {
                    dropped += mass;
                }
            }
        }
        if dropped > 0.0 && !block.is_empty() {
            let kept: f64 = block.iter().map(|x| x.mass).sum();
            let scale = 1.0 + dropped / kept;
            for x in &mut block {
                x.mass *= scale;
            }
        }
        entries.extend_from_slice(&block);
    }
    // Atoms belong to exactly one class and class pairs are unique, so the
    // (i, j) keys are already unique.
    entries.sort_unstable_by_key(|x| (x.source, x.target));
    Ok(TransportPlan::from_sorted(source.len(), target.len(), entries))
}

/// Plan and cost obtained from a single direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePlan {
    pub plan: TransportPlan,
    /// `sum mass * ||x_i - y_j||^p` over the lifted plan (the p-th power of
    /// the slice cost).
    pub cost_pow: f64,
}

impl SlicePlan {
    /// Slice cost `D_p(mu, nu; theta)`.
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_pow.powf(1.0 / p)
    }
}

pub(crate) fn slice_plan(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    direction: &[f64],
    p: f64,
    grouping_tol: f64,
) -> Result<SlicePlan> {
    source.check_same_dim(target)?;
    let ps = project(source, direction, grouping_tol)?;
    let pt = project(target, direction, grouping_tol)?;
    let plan1d = solve_1d(&ps, &pt)?;
    let plan = lift(source, target, &ps, &pt, &plan1d)?;
    let cost_pow = plan
        .entries()
        .iter()
        .map(|e| e.mass * cost_pow(source.atom(e.source), target.atom(e.target), p))
        .sum();
    Ok(SlicePlan { plan, cost_pow })
}

/// Projects, solves the one-dimensional problem and lifts, for one direction.
/// Returns the lifted plan and its cost `D_p(mu, nu; theta)`.
pub fn lift_for_direction(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    direction: &[f64],
    p: f64,
    grouping_tol: f64,
) -> Result<(TransportPlan, f64)> {
    let sp = slice_plan(source, target, direction, p, grouping_tol)?;
    let cost = sp.cost(p);
    Ok((sp.plan, cost))
}
