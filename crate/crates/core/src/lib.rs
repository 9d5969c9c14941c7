//! Expected sliced transport (EST) between finite discrete probability measures.
//!
//! Each random direction gives a one-dimensional optimal coupling of the
//! projected measures; lifting it back to the atoms yields a coupling of the
//! original measures. Averaging the lifted couplings over directions gives the
//! EST plan, and its transport cost gives the EST distance, an upper bound on
//! `W_p` that is a metric on finite discrete measures.
//!
//! Exact and entropic solvers are included as oracles, together with plan
//! based applications: displacement interpolation, Wasserstein geodesics and
//! linear-OT embeddings.

pub mod applications;
pub mod error;
pub mod est;
pub mod experiments;
pub mod io;
pub mod lifting;
pub mod measures;
pub mod oracles;
pub mod slicing;

pub use applications::{barycentric_projection, geodesic, interpolate, lot_embed, EmbedMethod, EmbeddingMatrix};
pub use error::{Error, Result};
pub use est::{est_plan, est_plan_tempered, min_swgg, sigma_tau_weights, EstConfig, EstResult, MinSwgg, SliceSet};
pub use lifting::{lift, lift_for_direction, SlicePlan};
pub use measures::{plan_cost, validate_coupling, CouplingReport, DiscreteMeasure, PlanEntry, TransportPlan};
pub use oracles::{sinkhorn, wasserstein_1d, wasserstein_exact, SinkhornResult};
pub use slicing::{project, sample_sphere, solve_1d, ClassEntry, OneDPlan, ProjectedMeasure};
