use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use est_core::experiments::{
    default_embed_methods, embed_bench, temperature_sweep, weak_convergence, EmbedTaskConfig, TemperatureSweepConfig,
    WeakConvergenceConfig,
};
use est_core::io::{fmt_f64, read_measure_file, write_embedding_csv, write_measure, write_plan, Format};
use est_core::{
    interpolate, lot_embed, plan_cost, sample_sphere, sinkhorn, wasserstein_exact, DiscreteMeasure, EmbedMethod,
    EstConfig, TransportPlan,
};
use serde_json::{json, Value};

use crate::{Command, Method, MethodArgs, OutputFormat, RunArgs};

const SINKHORN_ITERS: usize = 10_000;
const SINKHORN_TOL: f64 = 1e-9;
const DEFAULT_SLICES: usize = 128;

/// Error message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn output(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            code: 4,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<est_core::Error> for Failure {
    fn from(e: est_core::Error) -> Self {
        let code = if matches!(e, est_core::Error::DimensionMismatch { .. }) { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

impl OutputFormat {
    fn core(self) -> Format {
        match self {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Est => "est",
            Method::MinSwgg => "min-swgg",
            Method::Exact => "exact",
            Method::Sinkhorn => "sinkhorn",
        }
    }
}

impl RunArgs {
    fn validate(&self) -> Outcome {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Failure::usage(format!("--p must be greater than 1, got {}", self.p)));
        }
        if self.slices == Some(0) {
            return Err(Failure::usage("--slices must be at least 1"));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Failure::usage(format!("--tau must be non-negative, got {}", self.tau)));
        }
        if !(self.grouping_tol.is_finite() && self.grouping_tol >= 0.0) {
            return Err(Failure::usage(format!("--grouping-tol must be non-negative, got {}", self.grouping_tol)));
        }
        Ok(())
    }

    fn slices(&self) -> usize {
        self.slices.unwrap_or(DEFAULT_SLICES)
    }

    fn est(&self) -> EstConfig {
        EstConfig::new(self.p).with_grouping_tol(self.grouping_tol)
    }

    fn directions(&self, dim: usize) -> Vec<Vec<f64>> {
        sample_sphere(self.slices(), dim, self.seed)
    }

    fn metadata(&self, command: &str) -> serde_json::Map<String, Value> {
        let mut meta = serde_json::Map::new();
        meta.insert("command".into(), json!(command));
        meta.insert("p".into(), json!(self.p));
        meta.insert("slices".into(), json!(self.slices()));
        meta.insert("tau".into(), json!(self.tau));
        meta.insert("seed".into(), json!(self.seed));
        meta.insert("grouping_tol".into(), json!(self.grouping_tol));
        meta
    }
}

fn load(path: &Path) -> Outcome<DiscreteMeasure> {
    read_measure_file(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_pair(source: &Path, target: &Path) -> Outcome<(DiscreteMeasure, DiscreteMeasure)> {
    let (mu, nu) = (load(source)?, load(target)?);
    if mu.dim() != nu.dim() {
        return Err(Failure {
            code: 3,
            message: format!(
                "{}: dimension {} does not match {} (dimension {})",
                target.display(),
                nu.dim(),
                source.display(),
                mu.dim()
            ),
        });
    }
    Ok((mu, nu))
}

fn write_file(path: &Path, contents: &[u8]) -> Outcome {
    std::fs::write(path, contents).map_err(|e| Failure::output(path, e))
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::output(dir, e))
}

fn write_metadata(path: &Path, meta: serde_json::Map<String, Value>) -> Outcome {
    let mut text = serde_json::to_string_pretty(&Value::Object(meta)).expect("metadata serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Twelve significant digits, printed in the shortest form that reads back.
fn fmt_distance(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded:?}")
}

struct ComputedPlan {
    plan: TransportPlan,
    cost: f64,
    marginal_error: Option<f64>,
}

fn compute_plan(method: &MethodArgs, run: &RunArgs, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Outcome<ComputedPlan> {
    let computed = match method.method {
        Method::Est => {
            let r = run.est().tempered(mu, nu, &run.directions(mu.dim()), run.tau)?;
            ComputedPlan {
                plan: r.plan,
                cost: r.distance,
                marginal_error: None,
            }
        }
        Method::MinSwgg => {
            let r = run.est().min_swgg(mu, nu, &run.directions(mu.dim()))?;
            ComputedPlan {
                plan: r.plan,
                cost: r.cost,
                marginal_error: None,
            }
        }
        Method::Exact => {
            let (plan, cost) = wasserstein_exact(mu, nu, run.p)?;
            ComputedPlan {
                plan,
                cost,
                marginal_error: None,
            }
        }
        Method::Sinkhorn => {
            let r = sinkhorn(mu, nu, run.p, method.lambda, SINKHORN_ITERS, SINKHORN_TOL)?;
            let cost = plan_cost(&r.plan, mu, nu, run.p)?;
            ComputedPlan {
                plan: r.plan,
                cost,
                marginal_error: Some(r.marginal_error),
            }
        }
    };
    Ok(computed)
}

fn method_metadata(meta: &mut serde_json::Map<String, Value>, method: &MethodArgs) {
    meta.insert("method".into(), json!(method.method.name()));
    if method.method == Method::Sinkhorn {
        meta.insert("lambda".into(), json!(method.lambda));
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Distance {
            source,
            target,
            per_slice,
            run,
        } => distance(&source, &target, per_slice, &run),
        Command::Plan {
            source,
            target,
            out,
            method,
            run,
        } => plan(&source, &target, &out, &method, &run),
        Command::Exact { source, target, run } => exact(&source, &target, &run),
        Command::Interpolate {
            source,
            target,
            steps,
            out_dir,
            method,
            run,
        } => interpolation(&source, &target, steps, &out_dir, &method, &run),
        Command::Embed {
            reference,
            measure,
            out,
            method,
            run,
        } => embed(&reference, &measure, &out, &method, &run),
        Command::Experiment { name, out_dir, run } => experiment(&name, &out_dir, &run),
    }
}

fn distance(source: &Path, target: &Path, per_slice: bool, run: &RunArgs) -> Outcome {
    run.validate()?;
    let (mu, nu) = load_pair(source, target)?;
    let r = run.est().tempered(&mu, &nu, &run.directions(mu.dim()), run.tau)?;
    let mut out = String::new();
    match run.format {
        OutputFormat::Csv => {
            writeln!(out, "{}", fmt_distance(r.distance)).unwrap();
            if per_slice {
                out.push_str("slice,cost,weight\n");
                for (l, (c, w)) in r.per_slice_costs.iter().zip(&r.slice_weights).enumerate() {
                    writeln!(out, "{l},{},{}", fmt_f64(*c), fmt_f64(*w)).unwrap();
                }
            }
        }
        OutputFormat::Json => {
            let distance: f64 = fmt_distance(r.distance).parse().unwrap();
            let mut value = json!({ "distance": distance });
            if per_slice {
                value["slices"] = r
                    .per_slice_costs
                    .iter()
                    .zip(&r.slice_weights)
                    .enumerate()
                    .map(|(l, (c, w))| json!({ "slice": l, "cost": c, "weight": w }))
                    .collect();
            }
            writeln!(out, "{value}").unwrap();
        }
    }
    print!("{out}");
    Ok(())
}

fn exact(source: &Path, target: &Path, run: &RunArgs) -> Outcome {
    run.validate()?;
    let (mu, nu) = load_pair(source, target)?;
    let (_, w) = wasserstein_exact(&mu, &nu, run.p)?;
    match run.format {
        OutputFormat::Csv => println!("{}", fmt_distance(w)),
        OutputFormat::Json => println!("{}", json!({ "distance": fmt_distance(w).parse::<f64>().unwrap() })),
    }
    Ok(())
}

fn plan(source: &Path, target: &Path, out: &Path, method: &MethodArgs, run: &RunArgs) -> Outcome {
    run.validate()?;
    let (mu, nu) = load_pair(source, target)?;
    let computed = compute_plan(method, run, &mu, &nu)?;
    let mut buf = Vec::new();
    write_plan(&mut buf, &computed.plan, run.format.core())?;
    write_file(out, &buf)?;

    let mut meta = run.metadata("plan");
    method_metadata(&mut meta, method);
    meta.insert("source".into(), json!(source.display().to_string()));
    meta.insert("target".into(), json!(target.display().to_string()));
    write_metadata(&sidecar(out), meta)?;

    println!("entries {}", computed.plan.len());
    println!("cost {}", fmt_distance(computed.cost));
    if let Some(err) = computed.marginal_error {
        println!("marginal_error {}", fmt_f64(err));
    }
    Ok(())
}

fn interpolation(source: &Path, target: &Path, steps: usize, out_dir: &Path, method: &MethodArgs, run: &RunArgs) -> Outcome {
    run.validate()?;
    if steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    let (mu, nu) = load_pair(source, target)?;
    let computed = compute_plan(method, run, &mu, &nu)?;
    create_dir(out_dir)?;
    let format = run.format.core();
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let frame = interpolate(&computed.plan, &mu, &nu, t)?;
        let mut buf = Vec::new();
        write_measure(&mut buf, &frame, format)?;
        write_file(&out_dir.join(format!("t_{k:03}.{}", format.extension())), &buf)?;
    }
    let mut meta = run.metadata("interpolate");
    method_metadata(&mut meta, method);
    meta.insert("steps".into(), json!(steps));
    meta.insert("source".into(), json!(source.display().to_string()));
    meta.insert("target".into(), json!(target.display().to_string()));
    write_metadata(&out_dir.join("meta.json"), meta)
}

fn embed(reference: &Path, measure: &Path, out: &Path, method: &MethodArgs, run: &RunArgs) -> Outcome {
    run.validate()?;
    let (mu0, mu) = load_pair(reference, measure)?;
    let embed_method = match method.method {
        Method::Est => EmbedMethod::Est {
            slices: run.slices(),
            tau: run.tau,
            seed: run.seed,
        },
        Method::Exact => EmbedMethod::Exact,
        Method::Sinkhorn => EmbedMethod::Sinkhorn { lambda: method.lambda },
        Method::MinSwgg => return Err(Failure::usage("embed supports --method est, exact or sinkhorn")),
    };
    let embedding = lot_embed(&mu0, &mu, embed_method, run.p)?;
    let mut buf = Vec::new();
    match run.format {
        OutputFormat::Csv => write_embedding_csv(&mut buf, &embedding)?,
        OutputFormat::Json => {
            let rows: Vec<Value> = embedding.rows().iter().map(|r| json!(r)).collect();
            buf = format!("{}\n", json!({ "dim": embedding.dim(), "rows": rows })).into_bytes();
        }
    }
    write_file(out, &buf)?;
    let mut meta = run.metadata("embed");
    method_metadata(&mut meta, method);
    meta.insert("reference".into(), json!(reference.display().to_string()));
    meta.insert("measure".into(), json!(measure.display().to_string()));
    write_metadata(&sidecar(out), meta)
}

fn label(x: f64) -> String {
    format!("{x}")
}

fn experiment(name: &str, out_dir: &Path, run: &RunArgs) -> Outcome {
    run.validate()?;
    let json_out = run.format == OutputFormat::Json;
    let (file, contents, slices) = match name {
        "weak-convergence" => {
            let cfg = WeakConvergenceConfig {
                slices: run.slices.unwrap_or(WeakConvergenceConfig::default().slices),
                seed: run.seed,
                ..Default::default()
            };
            let rows = weak_convergence(&cfg)?;
            let contents = if json_out {
                serde_json::to_string_pretty(&rows).unwrap()
            } else {
                let mut s = String::from("t");
                cfg.taus.iter().for_each(|t| write!(s, ",est_tau_{}", label(*t)).unwrap());
                s.push_str(",w2_exact");
                cfg.lambdas.iter().for_each(|l| write!(s, ",sinkhorn_lambda_{}", label(*l)).unwrap());
                s.push_str(",product\n");
                for row in &rows {
                    let values: Vec<f64> = std::iter::once(row.t)
                        .chain(row.est.iter().copied())
                        .chain([row.w2_exact])
                        .chain(row.sinkhorn.iter().copied())
                        .chain([row.product])
                        .collect();
                    s.push_str(&values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
                s
            };
            ("weak_convergence", contents, cfg.slices)
        }
        "temperature-sweep" => {
            let cfg = TemperatureSweepConfig {
                slices: run.slices(),
                seed: run.seed,
                ..Default::default()
            };
            let rows = temperature_sweep(&cfg)?;
            let contents = if json_out {
                serde_json::to_string_pretty(&rows).unwrap()
            } else {
                let mut s = String::from("tau,entries,distance,max_slice_weight\n");
                for row in &rows {
                    writeln!(
                        s,
                        "{},{},{},{}",
                        fmt_f64(row.tau),
                        row.entries,
                        fmt_f64(row.distance),
                        fmt_f64(row.max_slice_weight)
                    )
                    .unwrap();
                }
                s
            };
            ("temperature_sweep", contents, cfg.slices)
        }
        "embed-bench" => {
            let cfg = EmbedTaskConfig {
                seed: run.seed,
                ..Default::default()
            };
            let rows = embed_bench(&cfg, &default_embed_methods(run.slices(), run.seed))?;
            let contents = if json_out {
                serde_json::to_string_pretty(&rows).unwrap()
            } else {
                let mut s = String::from("method,parameter,accuracy\n");
                for row in &rows {
                    let (method, param) = match row.method {
                        EmbedMethod::Exact => ("exact", String::new()),
                        EmbedMethod::Sinkhorn { lambda } => ("sinkhorn", format!("lambda={}", label(lambda))),
                        EmbedMethod::Est { tau, .. } => ("est", format!("tau={}", label(tau))),
                    };
                    writeln!(s, "{method},{param},{}", fmt_f64(row.accuracy)).unwrap();
                }
                s
            };
            ("embed_bench", contents, run.slices())
        }
        other => {
            return Err(Failure {
                code: 5,
                message: format!(
                    "unknown experiment {other:?}; expected weak-convergence, temperature-sweep or embed-bench"
                ),
            })
        }
    };
    create_dir(out_dir)?;
    let path = out_dir.join(format!("{file}.{}", run.format.core().extension()));
    let mut contents = contents;
    if !contents.ends_with('\n') {
        contents.push('\n');
    }
    write_file(&path, contents.as_bytes())?;
    let mut meta = run.metadata("experiment");
    meta.insert("experiment".into(), json!(name));
    meta.insert("slices".into(), json!(slices));
    write_metadata(&out_dir.join("meta.json"), meta)?;
    println!("{}", path.display());
    Ok(())
}
