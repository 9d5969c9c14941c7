//! One-dimensional slices of discrete measures and their optimal couplings.
//!
//! Projecting a measure onto a direction `theta` groups atoms whose projections
//! coincide into equivalence classes; the slice is the measure on the sorted
//! class values with the summed class masses. Between two slices the optimal
//! coupling is the monotone one, filled left to right.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Default relative grouping tolerance for [`project`].
pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;

/// Allowed deviation of a direction's norm from one.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Residual mass below which the sweep treats a bin as exhausted.
const RESIDUAL_CLAMP: f64 = 1e-15;

/// Quotient of a measure along a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMeasure {
    class_values: Vec<f64>,
    class_masses: Vec<f64>,
    class_starts: Vec<usize>,
    members: Vec<usize>,
    member_weights: Vec<f64>,
}

impl ProjectedMeasure {
    /// Number of equivalence classes.
    pub fn num_classes(&self) -> usize {
        self.class_values.len()
    }

    pub fn class_values(&self) -> &[f64] {
        &self.class_values
    }

    pub fn class_masses(&self) -> &[f64] {
        &self.class_masses
    }

    /// Original atom indices in class `k`, in sorted order.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[self.class_starts[k]..self.class_starts[k + 1]]
    }

    /// Weights `p(x)` of the atoms in class `k`, aligned with [`Self::members`].
    pub fn member_weights(&self, k: usize) -> &[f64] {
        &self.member_weights[self.class_starts[k]..self.class_starts[k + 1]]
    }

    /// All atom indices sorted by projected value.
    pub fn sorted_atoms(&self) -> &[usize] {
        &self.members
    }

    fn total_mass(&self) -> f64 {
        self.class_masses.iter().sum()
    }
}

/// Entry `(a, b, mass)` of a coupling between slice classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassEntry {
    pub source_class: usize,
    pub target_class: usize,
    pub mass: f64,
}

/// Monotone coupling between two projected measures.
#[derive(Debug, Clone, PartialEq)]
pub struct OneDPlan {
    entries: Vec<ClassEntry>,
}

impl OneDPlan {
    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sum mass * |u_a - v_b|^p` over the class values of the two slices.
    pub fn cost_pow(&self, source: &ProjectedMeasure, target: &ProjectedMeasure, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let gap = (source.class_values[e.source_class] - target.class_values[e.target_class]).abs();
                e.mass * gap.powf(p)
            })
            .sum()
    }
}

pub(crate) fn check_unit(direction: &[f64]) -> Result<()> {
    let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NonUnitDirection { norm });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects `measure` onto `direction` and groups coincident projections.
///
/// `grouping_tol` is relative: two sorted projections fall in one class when
/// they lie within `grouping_tol * max(max_i |theta . x_i|, 1)` of the class
/// representative (its smallest value). Exact ties are always merged.
pub fn project(measure: &DiscreteMeasure, direction: &[f64], grouping_tol: f64) -> Result<ProjectedMeasure> {
    if direction.len() != measure.dim() {
        return Err(Error::DimensionMismatch {
            expected: measure.dim(),
            found: direction.len(),
        });
    }
    check_unit(direction)?;
    if !(grouping_tol >= 0.0 && grouping_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("grouping tolerance {grouping_tol}")));
    }

    let values: Vec<f64> = measure.atoms().map(|x| dot(x, direction)).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable, so equal projections keep index order.
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = grouping_tol * scale;

    let mut class_values = Vec::new();
    let mut class_masses = Vec::new();
    let mut class_starts = Vec::new();
    let mut member_weights = Vec::with_capacity(order.len());
    for (pos, &i) in order.iter().enumerate() {
        let v = values[i];
        let w = measure.weight(i);
        match class_values.last() {
            Some(&rep) if v - rep <= tol => {
                *class_masses.last_mut().unwrap() += w;
            }
            _ => {
                class_values.push(v);
                class_masses.push(w);
                class_starts.push(pos);
            }
        }
        member_weights.push(w);
    }
    class_starts.push(order.len());

    Ok(ProjectedMeasure {
        class_values,
        class_masses,
        class_starts,
        members: order,
        member_weights,
    })
}

/// Monotone (north-west corner) coupling of two slices.
///
/// Two cursors walk the sorted classes; each step ships the smaller of the
/// two residual masses and advances whichever side is exhausted. This is the
/// unique optimal plan for any convex cost of `|u - v|`.
pub fn solve_1d(source: &ProjectedMeasure, target: &ProjectedMeasure) -> Result<OneDPlan> {
    let difference = (source.total_mass() - target.total_mass()).abs();
    if difference > crate::measures::WEIGHT_SUM_TOL {
        return Err(Error::MassImbalance { difference });
    }
    let (src, tgt) = (&source.class_masses, &target.class_masses);
    let mut entries = Vec::with_capacity(src.len() + tgt.len());
    let (mut a, mut b) = (0, 0);
    let (mut ra, mut rb) = (src.first().copied().unwrap_or(0.0), tgt.first().copied().unwrap_or(0.0));
    while a < src.len() && b < tgt.len() {
        let m = ra.min(rb);
        if m > 0.0 {
            entries.push(ClassEntry {
                source_class: a,
                target_class: b,
                mass: m,
            });
        }
        ra -= m;
        rb -= m;
        if ra <= RESIDUAL_CLAMP {
            a += 1;
            ra = src.get(a).copied().unwrap_or(0.0);
        }
        if rb <= RESIDUAL_CLAMP {
            b += 1;
            rb = tgt.get(b).copied().unwrap_or(0.0);
        }
    }
    Ok(OneDPlan { entries })
}

/// Draws `count` directions uniformly on the unit sphere `S^{dim-1}`.
///
/// Normalized standard-normal vectors from a ChaCha8 stream seeded with
/// `seed`. In one dimension the sphere is `{+1, -1}` and the directions
/// alternate, starting at `+1`.
pub fn sample_sphere(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        return (0..count)
            .map(|l| vec![if l % 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        out.push(v.into_iter().map(|c| c / norm).collect());
    }
    out
}
