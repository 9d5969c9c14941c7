//! Reference solvers: exact discrete OT, one-dimensional OT by quantile
//! matching, and entropic OT.

use crate::error::{Error, Result};
use crate::measures::{cost_pow, DiscreteMeasure, PlanEntry, TransportPlan};

/// Largest `n * m` accepted by [`wasserstein_exact`].
pub const EXACT_MAX_CELLS: usize = 250_000;

/// Supplies, demands and flows below this are treated as zero.
const FLOW_EPS: f64 = 1e-14;

/// Exact optimal coupling and `W_p`.
///
/// Successive shortest paths on the bipartite transport network with
/// Dijkstra on reduced costs. Each round routes flow from the set of sources
/// with remaining supply to the nearest sink with remaining demand, then
/// updates the node potentials so reduced costs stay non-negative.
pub fn wasserstein_exact(source: &DiscreteMeasure, target: &DiscreteMeasure, p: f64) -> Result<(TransportPlan, f64)> {
    source.check_same_dim(target)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("cost exponent p = {p}")));
    }
    let (n, m) = (source.len(), target.len());
    if n * m > EXACT_MAX_CELLS {
        return Err(Error::InstanceTooLarge {
            n,
            m,
            limit: EXACT_MAX_CELLS,
        });
    }

    let cost: Vec<f64> = source
        .atoms()
        .flat_map(|x| target.atoms().map(move |y| cost_pow(x, y, p)))
        .collect();
    let flow = min_cost_flow(n, m, &cost, source.weights(), target.weights());

    let entries: Vec<PlanEntry> = flow
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0)
        .map(|(k, &f)| PlanEntry::new(k / m, k % m, f))
        .collect();
    let total: f64 = entries.iter().map(|e| e.mass * cost[e.source * m + e.target]).sum();
    Ok((TransportPlan::from_sorted(n, m, entries), total.powf(1.0 / p)))
}

/// Dense row-major flow matrix of a min-cost transport between `supply` and `demand`.
fn min_cost_flow(n: usize, m: usize, cost: &[f64], supply: &[f64], demand: &[f64]) -> Vec<f64> {
    let nodes = n + m;
    let mut flow = vec![0.0; n * m];
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut potential = vec![0.0; nodes];

    let mut dist = vec![f64::INFINITY; nodes];
    let mut pred = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    loop {
        if supply.iter().all(|&s| s <= FLOW_EPS) {
            break;
        }
        dist.fill(f64::INFINITY);
        pred.fill(usize::MAX);
        done.fill(false);
        for i in 0..n {
            if supply[i] > FLOW_EPS {
                dist[i] = 0.0;
            }
        }

        // Dense Dijkstra: nodes 0..n are sources, n..n+m are sinks.
        let mut sink = None;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n {
                let j = u - n;
                if demand[j] > FLOW_EPS {
                    sink = Some(u);
                    break;
                }
                // Residual backward arcs j -> i where flow is positive.
                for i in 0..n {
                    if !done[i] && flow[i * m + j] > 0.0 {
                        let rc = (-cost[i * m + j] + potential[u] - potential[i]).max(0.0);
                        if best + rc < dist[i] {
                            dist[i] = best + rc;
                            pred[i] = u;
                        }
                    }
                }
            } else {
                let row = &cost[u * m..(u + 1) * m];
                for (j, &c) in row.iter().enumerate() {
                    let v = n + j;
                    if !done[v] {
                        let rc = (c + potential[u] - potential[v]).max(0.0);
                        if best + rc < dist[v] {
                            dist[v] = best + rc;
                            pred[v] = u;
                        }
                    }
                }
            }
        }

        let Some(t) = sink else { break };
        let dt = dist[t];
        for v in 0..nodes {
            potential[v] += dist[v].min(dt);
        }

        // Bottleneck along the path.
        let mut delta = demand[t - n];
        let mut v = t;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u >= n {
                // backward arc (sink u) -> (source v)
                delta = delta.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        let s = v;
        delta = delta.min(supply[s]);

        let mut v = t;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u < n {
                flow[u * m + (v - n)] += delta;
            } else {
                let cell = &mut flow[v * m + (u - n)];
                *cell -= delta;
                if *cell <= FLOW_EPS {
                    *cell = 0.0;
                }
            }
            v = u;
        }
        supply[s] -= delta;
        if supply[s] <= FLOW_EPS {
            supply[s] = 0.0;
        }
        demand[t - n] -= delta;
        if demand[t - n] <= FLOW_EPS {
            demand[t - n] = 0.0;
        }
    }
    flow
}

/// `W_p` between two one-dimensional measures by inverting their CDFs.
///
/// Both quantile functions are step functions; between consecutive merged
/// breakpoints of the two cumulative weight sequences they are constant, so
/// the cost integral is a finite sum.
pub fn wasserstein_1d(source: &DiscreteMeasure, target: &DiscreteMeasure, p: f64) -> Result<f64> {
    for m in [source, target] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    let sorted = |m: &DiscreteMeasure| {
        let mut pts: Vec<(f64, f64)> = m.coords().iter().copied().zip(m.weights().iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    };
    let (xs, ys) = (sorted(source), sorted(target));
    let (sx, sy): (f64, f64) = (
        xs.iter().map(|p| p.1).sum(),
        ys.iter().map(|p| p.1).sum(),
    );
    if (sx - sy).abs() > crate::measures::WEIGHT_SUM_TOL {
        return Err(Error::MassImbalance {
            difference: (sx - sy).abs(),
        });
    }

    let (mut a, mut b) = (0, 0);
    let (mut cdf_x, mut cdf_y) = (xs[0].1, ys[0].1);
    let mut level = 0.0;
    let mut total = 0.0;
    loop {
        let next = cdf_x.min(cdf_y);
        total += (next - level).max(0.0) * (xs[a].0 - ys[b].0).abs().powf(p);
        level = next;
        let advance_x = cdf_x <= next && a + 1 < xs.len();
        let advance_y = cdf_y <= next && b + 1 < ys.len();
        if !advance_x && !advance_y {
            break;
        }
        if advance_x {
            a += 1;
            cdf_x += xs[a].1;
        }
        if advance_y {
            b += 1;
            cdf_y += ys[b].1;
        }
    }
    Ok(total.powf(1.0 / p))
}

/// Result of an entropic OT solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// Every cell with non-zero mass; in general all `n * m` of them.
    pub plan: TransportPlan,
    /// `||P 1 - a||_1 + ||P^T 1 - b||_1` after the last iteration, or
    /// `+inf` when the iteration broke down.
    pub marginal_error: f64,
    pub iterations: usize,
    /// Marginal error after each iteration.
    pub trace: Vec<f64>,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Entropic OT with kernel `exp(-||x - y||^p / lambda)`, iterated in the log
/// domain on the dual potentials.
///
/// `lambda` is in the units of the raw costs `||x - y||^p`. Stops once the
/// marginal error drops below `stop_tol` or after `max_iters` iterations.
pub fn sinkhorn(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    p: f64,
    lambda: f64,
    max_iters: usize,
    stop_tol: f64,
) -> Result<SinkhornResult> {
    source.check_same_dim(target)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("regularization lambda = {lambda}")));
    }
    let (n, m) = (source.len(), target.len());
    let cost: Vec<f64> = source
        .atoms()
        .flat_map(|x| target.atoms().map(move |y| cost_pow(x, y, p)))
        .collect();
    let log_a: Vec<f64> = source.weights().iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = target.weights().iter().map(|w| w.ln()).collect();

    // Scaled potentials: f = F / lambda, g = G / lambda.
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let scaled: Vec<f64> = cost.iter().map(|c| c / lambda).collect();
    let mut trace = Vec::new();
    let mut marginal_error = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        for i in 0..n {
            let row = &scaled[i * m..(i + 1) * m];
            f[i] = log_a[i] - log_sum_exp(row.iter().zip(&g).map(|(c, gj)| gj - c));
        }
        for j in 0..m {
            g[j] = log_b[j] - log_sum_exp((0..n).map(|i| f[i] - scaled[i * m + j]));
        }
        marginal_error = marginal_errors(&f, &g, &scaled, source.weights(), target.weights());
        if !marginal_error.is_finite() || f.iter().chain(&g).any(|v| !v.is_finite()) {
            marginal_error = f64::INFINITY;
            trace.push(marginal_error);
            break;
        }
        trace.push(marginal_error);
        if marginal_error < stop_tol {
            break;
        }
    }

    let mut entries = Vec::with_capacity(n * m);
    if marginal_error.is_finite() {
        for i in 0..n {
            for j in 0..m {
                let mass = (f[i] + g[j] - scaled[i * m + j]).exp();
                if mass > 0.0 && mass.is_finite() {
                    entries.push(PlanEntry::new(i, j, mass));
                }
            }
        }
    }
    Ok(SinkhornResult {
        plan: TransportPlan::from_sorted(n, m, entries),
        marginal_error,
        iterations,
        trace,
    })
}

fn marginal_errors(f: &[f64], g: &[f64], scaled: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let m = g.len();
    let mut cols = vec![0.0; m];
    let mut row_err = 0.0;
    for (i, fi) in f.iter().enumerate() {
        let mut row = 0.0;
        for j in 0..m {
            let v = (fi + g[j] - scaled[i * m + j]).exp();
            row += v;
            cols[j] += v;
        }
        row_err += (row - a[i]).abs();
    }
    let col_err: f64 = cols.iter().zip(b).map(|(c, w)| (c - w).abs()).sum();
    row_err + col_err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{plan_cost, validate_coupling};
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_between_diracs() {
        let x = DiscreteMeasure::dirac(&[1.0, 1.0]).unwrap();
        let y = DiscreteMeasure::dirac(&[4.0, 5.0]).unwrap();
        let (plan, w) = wasserstein_exact(&x, &y, 2.0).unwrap();
        assert_eq!(plan.len(), 1);
        assert_abs_diff_eq!(w, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_on_identical_measures() {
        let mu = DiscreteMeasure::uniform(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (plan, w) = wasserstein_exact(&mu, &mu, 2.0).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(plan, TransportPlan::identity(&mu));
    }

    #[test]
    fn exact_on_line() {
        let mu = DiscreteMeasure::new(&[vec![1.0], vec![2.0]], &[0.1, 0.9]).unwrap();
        let nu = DiscreteMeasure::new(&[vec![1.0], vec![2.0]], &[0.5, 0.5]).unwrap();
        let (plan, w) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let got: Vec<_> = plan.entries().iter().map(|e| (e.source, e.target)).collect();
        assert_eq!(got, vec![(0, 0), (1, 0), (1, 1)]);
        let masses: Vec<_> = plan.entries().iter().map(|e| e.mass).collect();
        for (m, want) in masses.iter().zip([0.1, 0.4, 0.5]) {
            assert_abs_diff_eq!(*m, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w, 0.4_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn exact_rejects_large_instances() {
        let atoms: Vec<Vec<f64>> = (0..501).map(|k| vec![k as f64]).collect();
        let mu = DiscreteMeasure::uniform(&atoms).unwrap();
        assert!(matches!(
            wasserstein_exact(&mu, &mu, 2.0),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn exact_beats_every_permutation() {
        // Brute force over all 4! assignments of a uniform 4-point problem.
        let xs = vec![vec![0.0, 0.3], vec![1.2, -0.4], vec![2.5, 1.1], vec![-0.7, 2.0]];
        let ys = vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.5, -1.5], vec![3.0, 0.2]];
        let mu = DiscreteMeasure::uniform(&xs).unwrap();
        let nu = DiscreteMeasure::uniform(&ys).unwrap();
        let mut best = f64::INFINITY;
        let mut perm = [0usize, 1, 2, 3];
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = (0..4).map(|i| cost_pow(&xs[i], &ys[p[i]], 2.0)).sum::<f64>() / 4.0;
            best = best.min(c);
        });
        let (plan, w) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        assert_abs_diff_eq!(w * w, best, epsilon = 1e-12);
        assert!(validate_coupling(&plan, &mu, &nu).valid);
    }

    fn permute(v: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
        if k == v.len() {
            visit(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, visit);
            v.swap(k, i);
        }
    }

    #[test]
    fn one_d_identical_is_zero() {
        let mu = DiscreteMeasure::new(&[vec![3.0], vec![-1.0]], &[0.3, 0.7]).unwrap();
        assert_eq!(wasserstein_1d(&mu, &mu, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn one_d_split_bins() {
        let mu = DiscreteMeasure::new(&[vec![0.0], vec![1.0]], &[0.1, 0.9]).unwrap();
        let nu = DiscreteMeasure::new(&[vec![0.0], vec![1.0]], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(wasserstein_1d(&mu, &nu, 2.0).unwrap(), 0.4_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn one_d_uniform_is_sorted_matching() {
        let xs = [4.0, -1.0, 2.5, 0.0, 7.0];
        let ys = [1.0, 1.5, -3.0, 9.0, 2.0];
        let mu = DiscreteMeasure::uniform(&xs.map(|x| vec![x])).unwrap();
        let nu = DiscreteMeasure::uniform(&ys.map(|y| vec![y])).unwrap();
        let (mut sx, mut sy) = (xs.to_vec(), ys.to_vec());
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);
        for p in [1.5, 2.0, 3.0] {
            let direct = (sx.iter().zip(&sy).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>() / 5.0).powf(1.0 / p);
            assert_abs_diff_eq!(wasserstein_1d(&mu, &nu, p).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn one_d_rejects_higher_dims() {
        let mu = DiscreteMeasure::dirac(&[0.0, 1.0]).unwrap();
        assert!(wasserstein_1d(&mu, &mu, 2.0).is_err());
    }

    fn small_pair() -> (DiscreteMeasure, DiscreteMeasure) {
        let mu = DiscreteMeasure::new(
            &[vec![0.0, 0.0], vec![1.0, 0.5], vec![2.0, -0.3], vec![0.4, 1.7], vec![-1.0, 0.9]],
            &[0.1, 0.3, 0.2, 0.25, 0.15],
        )
        .unwrap();
        let nu = DiscreteMeasure::new(
            &[vec![0.5, 0.5], vec![2.5, 1.0], vec![-0.5, -1.0], vec![1.5, 2.0], vec![0.0, 3.0]],
            &[0.2, 0.2, 0.2, 0.3, 0.1],
        )
        .unwrap();
        (mu, nu)
    }

    #[test]
    fn sinkhorn_large_lambda_is_near_product() {
        let (mu, _) = small_pair();
        let r = sinkhorn(&mu, &mu, 2.0, 1e6, 1000, 1e-12).unwrap();
        let product = TransportPlan::product(&mu, &mu);
        for (a, b) in r.plan.entries().iter().zip(product.entries()) {
            assert_abs_diff_eq!(a.mass, b.mass, epsilon = 1e-5);
        }
    }

    #[test]
    fn sinkhorn_small_lambda_approaches_exact() {
        let (mu, nu) = small_pair();
        let (_, w) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let mut costs: Vec<f64> = mu.atoms().flat_map(|x| nu.atoms().map(move |y| cost_pow(x, y, 2.0))).collect();
        costs.sort_by(f64::total_cmp);
        let lambda = 1e-3 * costs[costs.len() / 2];
        let r = sinkhorn(&mu, &nu, 2.0, lambda, 200_000, 1e-10).unwrap();
        assert!(r.marginal_error < 1e-9, "marginal error {}", r.marginal_error);
        let c = plan_cost(&r.plan, &mu, &nu, 2.0).unwrap();
        assert!((c - w).abs() <= 0.01 * w, "sinkhorn {c} exact {w}");
    }

    #[test]
    fn sinkhorn_error_trace_is_monotone() {
        let (mu, nu) = small_pair();
        let r = sinkhorn(&mu, &nu, 2.0, 0.05, 500, 1e-13).unwrap();
        // Below ~1e-14 the error is rounding noise in the marginal sums.
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn sinkhorn_splitting_grows_with_lambda() {
        let (mu, nu) = small_pair();
        let entropy = |lambda: f64| {
            let r = sinkhorn(&mu, &nu, 2.0, lambda, 10_000, 1e-12).unwrap();
            -r.plan.entries().iter().map(|e| e.mass * e.mass.ln()).sum::<f64>()
        };
        let (e1, e2, e3) = (entropy(0.05), entropy(0.5), entropy(5.0));
        assert!(e1 < e2 && e2 < e3, "{e1} {e2} {e3}");
    }

    #[test]
    fn sinkhorn_rejects_bad_lambda() {
        let (mu, nu) = small_pair();
        assert!(sinkhorn(&mu, &nu, 2.0, 0.0, 10, 1e-9).is_err());
    }
}
