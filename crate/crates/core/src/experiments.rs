//! Desk-scale experiment harnesses producing plot-ready rows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::applications::{geodesic, lot_embed, EmbedMethod, LeastSquaresClassifier};
use crate::error::Result;
use crate::est::EstConfig;
use crate::measures::{plan_cost, DiscreteMeasure, TransportPlan};
use crate::oracles::{sinkhorn, wasserstein_exact};
use crate::slicing::sample_sphere;

/// Uniform measure on `n` samples from `N(mean, std^2 I)`.
pub fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, mean: &[f64], std: f64) -> Result<DiscreteMeasure> {
    let atoms: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            mean.iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + std * z
                })
                .collect()
        })
        .collect();
    DiscreteMeasure::uniform(&atoms)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SINKHORN_ITERS: usize = 20_000;
const SINKHORN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakConvergenceConfig {
    pub atoms: usize,
    pub source_mean: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub std: f64,
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub slices: usize,
    pub seed: u64,
}

impl Default for WeakConvergenceConfig {
    fn default() -> Self {
        Self {
            atoms: 50,
            source_mean: vec![0.0, 0.0],
            target_mean: vec![2.0, 0.0],
            std: 0.5,
            times: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
            taus: vec![0.0, 1.0, 10.0, 100.0],
            lambdas: vec![1.0, 10.0],
            slices: 512,
            seed: 0,
        }
    }
}

/// Transport costs between `mu_t` and `nu` along the `W_2` geodesic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakConvergenceRow {
    pub t: f64,
    /// EST `D_2`, one per temperature.
    pub est: Vec<f64>,
    pub w2_exact: f64,
    /// Cost of the entropic plan, one per regularization.
    pub sinkhorn: Vec<f64>,
    /// Cost of the product coupling `mu_t (x) nu`.
    pub product: f64,
}

pub fn weak_convergence(cfg: &WeakConvergenceConfig) -> Result<Vec<WeakConvergenceRow>> {
    let mut rng = rng(cfg.seed);
    let mu = gaussian_cloud(&mut rng, cfg.atoms, &cfg.source_mean, cfg.std)?;
    let nu = gaussian_cloud(&mut rng, cfg.atoms, &cfg.target_mean, cfg.std)?;
    let dirs = sample_sphere(cfg.slices, mu.dim(), cfg.seed.wrapping_add(1));
    let est = EstConfig::new(2.0);

    cfg.times
        .iter()
        .map(|&t| {
            let mu_t = geodesic(&mu, &nu, t)?;
            let est_costs = cfg
                .taus
                .iter()
                .map(|&tau| Ok(est.tempered(&mu_t, &nu, &dirs, tau)?.distance))
                .collect::<Result<Vec<_>>>()?;
            let (_, w2_exact) = wasserstein_exact(&mu_t, &nu, 2.0)?;
            let sinkhorn_costs = cfg
                .lambdas
                .iter()
                .map(|&lambda| {
                    let r = sinkhorn(&mu_t, &nu, 2.0, lambda, SINKHORN_ITERS, SINKHORN_TOL)?;
                    plan_cost(&r.plan, &mu_t, &nu, 2.0)
                })
                .collect::<Result<Vec<_>>>()?;
            let product = plan_cost(&TransportPlan::product(&mu_t, &nu), &mu_t, &nu, 2.0)?;
            Ok(WeakConvergenceRow {
                t,
                est: est_costs,
                w2_exact,
                sinkhorn: sinkhorn_costs,
                product,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureSweepConfig {
    pub source_atoms: usize,
    pub target_atoms: usize,
    pub taus: Vec<f64>,
    pub slices: usize,
    pub seed: u64,
}

impl Default for TemperatureSweepConfig {
    fn default() -> Self {
        Self {
            source_atoms: 10,
            target_atoms: 20,
            taus: vec![0.0, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e12],
            slices: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureSweepRow {
    pub tau: f64,
    /// Number of cells carrying mass in the EST plan.
    pub entries: usize,
    pub distance: f64,
    pub max_slice_weight: f64,
}

/// EST plans between two uniform clouds (`n` and `2n` atoms) for increasing `tau`.
pub fn temperature_sweep(cfg: &TemperatureSweepConfig) -> Result<Vec<TemperatureSweepRow>> {
    let mut rng = rng(cfg.seed);
    let mu = gaussian_cloud(&mut rng, cfg.source_atoms, &[0.0, 0.0], 1.0)?;
    let nu = gaussian_cloud(&mut rng, cfg.target_atoms, &[3.0, 1.0], 1.0)?;
    let dirs = sample_sphere(cfg.slices, 2, cfg.seed.wrapping_add(1));
    let est = EstConfig::new(2.0);
    cfg.taus
        .iter()
        .map(|&tau| {
            let r = est.tempered(&mu, &nu, &dirs, tau)?;
            Ok(TemperatureSweepRow {
                tau,
                entries: r.plan.len(),
                distance: r.distance,
                max_slice_weight: r.slice_weights.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedTaskConfig {
    pub clouds_per_class: usize,
    pub atoms: usize,
    pub std: f64,
    /// Distance between the two class means, in units of `std`.
    pub separation: f64,
    pub reference_size: usize,
    pub seed: u64,
}

impl Default for EmbedTaskConfig {
    fn default() -> Self {
        Self {
            clouds_per_class: 20,
            atoms: 30,
            std: 1.0,
            separation: 4.0,
            reference_size: 50,
            seed: 0,
        }
    }
}

/// Synthetic two-class point-cloud task in the plane.
#[derive(Debug, Clone)]
pub struct EmbedTask {
    pub reference: DiscreteMeasure,
    pub clouds: Vec<DiscreteMeasure>,
    pub labels: Vec<bool>,
}

impl EmbedTask {
    pub fn generate(cfg: &EmbedTaskConfig) -> Result<Self> {
        let mut rng = rng(cfg.seed);
        let reference = gaussian_cloud(&mut rng, cfg.reference_size, &[0.0, 0.0], 1.0)?;
        let half = 0.5 * cfg.separation * cfg.std;
        let mut clouds = Vec::with_capacity(2 * cfg.clouds_per_class);
        let mut labels = Vec::with_capacity(2 * cfg.clouds_per_class);
        for k in 0..2 * cfg.clouds_per_class {
            let label = k % 2 == 1;
            let mean = if label { [half, 0.0] } else { [-half, 0.0] };
            clouds.push(gaussian_cloud(&mut rng, cfg.atoms, &mean, cfg.std)?);
            labels.push(label);
        }
        Ok(Self {
            reference,
            clouds,
            labels,
        })
    }

    pub fn embed(&self, method: EmbedMethod) -> Result<Vec<Vec<f64>>> {
        self.clouds
            .iter()
            .map(|c| Ok(lot_embed(&self.reference, c, method, 2.0)?.to_features()))
            .collect()
    }

    /// Training accuracy of a least-squares classifier on the embeddings.
    pub fn accuracy(&self, method: EmbedMethod) -> Result<f64> {
        let features = self.embed(method)?;
        let clf = LeastSquaresClassifier::fit(&features, &self.labels)?;
        Ok(clf.accuracy(&features, &self.labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedBenchRow {
    pub method: EmbedMethod,
    pub accuracy: f64,
}

pub fn embed_bench(cfg: &EmbedTaskConfig, methods: &[EmbedMethod]) -> Result<Vec<EmbedBenchRow>> {
    let task = EmbedTask::generate(cfg)?;
    methods
        .iter()
        .map(|&method| {
            Ok(EmbedBenchRow {
                method,
                accuracy: task.accuracy(method)?,
            })
        })
        .collect()
}

/// Methods compared by default in [`embed_bench`].
pub fn default_embed_methods(slices: usize, seed: u64) -> Vec<EmbedMethod> {
    vec![
        EmbedMethod::Exact,
        EmbedMethod::Sinkhorn { lambda: 10.0 },
        EmbedMethod::Est { slices, tau: 0.0, seed },
        EmbedMethod::Est { slices, tau: 1e6, seed },
    ]
}
