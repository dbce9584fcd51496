//! Seeded parameter sweeps over `(sigma, epsilon, delta, replicate)`.
//!
//! Each `(sigma, epsilon, replicate)` triple is one task: it simulates a
//! path on its own random stream and evaluates every requested estimator on
//! every width. Tasks run on a rayon pool and the rows are gathered in grid
//! order, so the output does not depend on the thread count.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{Method, SweepConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    filtered_drift_traced, hat_sigma_filtered_traced, mle_drift_traced, qv_sigma_traced,
    subsampled_diffusion_traced, subsampled_drift_traced, tilde_sigma_from_parts,
    DiffusionEstimate, DriftEstimate, TracePoint,
};
use crate::filtering::{filter_exponential, filter_moving_average};
use crate::homogenization::homogenize;
use crate::sde::{mix64, simulate_multiscale, RandomStream, Trajectory};

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "sigma",
    "epsilon",
    "delta",
    "method",
    "replicate",
    "seed",
    "component",
    "time",
    "estimate",
    "reference",
    "rel_error",
    "wall_time",
    "status",
];

/// One estimated coefficient component at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub sigma: f64,
    pub epsilon: f64,
    /// `None` for the width-free estimators.
    pub delta: Option<f64>,
    pub method: Method,
    pub replicate: usize,
    /// Stream id of the replicate's random stream.
    pub seed: u64,
    /// `A<i>` / `Sigma` in one dimension, `A<i>[r,c]` / `Sigma[r,c]` (1-based) otherwise.
    pub component: String,
    /// Amount of data the estimate used; the horizon for final values.
    pub time: f64,
    pub estimate: Option<f64>,
    pub reference: Option<f64>,
    pub rel_error: Option<f64>,
    /// Seconds spent on the whole task, when recorded.
    pub wall_time: Option<f64>,
    /// `ok` or the error that prevented the estimate.
    pub status: String,
}

/// Stream id for a replicate of the grid cell with index `cell`.
pub fn replicate_stream(base_seed: u64, cell: usize, replicate: usize) -> RandomStream {
    RandomStream::new(base_seed, mix64(((cell as u64) << 32) ^ replicate as u64))
}

struct Task {
    cell: usize,
    sigma: f64,
    epsilon: f64,
    replicate: usize,
}

fn tasks(cfg: &SweepConfig) -> Vec<Task> {
    let mut out = Vec::new();
    let mut cell = 0;
    for &sigma in &cfg.sigmas {
        for &epsilon in &cfg.epsilons {
            for replicate in 0..cfg.replicates {
                out.push(Task {
                    cell,
                    sigma,
                    epsilon,
                    replicate,
                });
            }
            cell += 1;
        }
    }
    out
}

/// Runs the sweep on `threads` worker threads (0 picks rayon's default).
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    let list = tasks(cfg);
    let rows: Vec<Vec<ResultRow>> =
        pool.install(|| list.par_iter().map(|t| run_task(cfg, t)).collect());
    Ok(rows.into_iter().flatten().collect())
}

/// Per-task context shared by the row builders.
struct Cell<'a> {
    cfg: &'a SweepConfig,
    task: &'a Task,
    seed: u64,
    reference_a: Vec<DMatrix<f64>>,
    reference_sigma: DMatrix<f64>,
    horizon: f64,
    rows: Vec<ResultRow>,
}

enum Estimate {
    Drift(DriftEstimate),
    Diffusion(DiffusionEstimate),
}

impl Cell<'_> {
    fn row(&self, method: Method, delta: Option<f64>, component: String, time: f64) -> ResultRow {
        ResultRow {
            experiment: self.cfg.experiment.clone(),
            sigma: self.task.sigma,
            epsilon: self.task.epsilon,
            delta,
            method,
            replicate: self.task.replicate,
            seed: self.seed,
            component,
            time,
            estimate: None,
            reference: None,
            rel_error: None,
            wall_time: None,
            status: "ok".into(),
        }
    }

    fn fail(&mut self, method: Method, delta: Option<f64>, err: &Error) {
        let mut row = self.row(method, delta, String::new(), self.horizon);
        row.status = err.to_string();
        self.rows.push(row);
    }

    /// `(component, estimate, reference)` triples of a drift or diffusion value.
    fn components(&self, drift: bool, value: &DMatrix<f64>) -> Vec<(String, f64, f64)> {
        let d = self.reference_sigma.nrows();
        let mut out = Vec::new();
        if drift {
            for (i, a_ref) in self.reference_a.iter().enumerate() {
                // stacked block i holds A_i^T
                for r in 0..d {
                    for c in 0..d {
                        let name = if d == 1 {
                            format!("A{}", i + 1)
                        } else {
                            format!("A{}[{},{}]", i + 1, r + 1, c + 1)
                        };
                        out.push((name, value[(i * d + c, r)], a_ref[(r, c)]));
                    }
                }
            }
        } else {
            for r in 0..d {
                for c in r..d {
                    let name = if d == 1 {
                        "Sigma".to_string()
                    } else {
                        format!("Sigma[{},{}]", r + 1, c + 1)
                    };
                    out.push((name, value[(r, c)], self.reference_sigma[(r, c)]));
                }
            }
        }
        out
    }

    fn record(&mut self, method: Method, delta: Option<f64>, result: Result<&Estimate>) {
        let estimate = match result {
            Ok(e) => e,
            Err(err) => return self.fail(method, delta, &err),
        };
        let (drift, final_value, trace): (bool, &DMatrix<f64>, Option<&[TracePoint]>) = match estimate {
            Estimate::Drift(e) => (true, e.stacked(), e.trace()),
            Estimate::Diffusion(e) => (false, e.matrix(), e.trace()),
        };
        let mut points: Vec<(f64, &DMatrix<f64>)> = trace
            .unwrap_or_default()
            .iter()
            .map(|p| (p.time, &p.value))
            .collect();
        // the final value always appears, stamped with the full horizon
        points.retain(|(t, _)| *t < self.horizon * (1.0 - 1e-12));
        points.push((self.horizon, final_value));
        for (time, value) in points {
            for (component, est, reference) in self.components(drift, value) {
                let mut row = self.row(method, delta, component, time);
                row.estimate = Some(est);
                row.reference = Some(reference);
                row.rel_error = (reference != 0.0).then(|| (est - reference).abs() / reference.abs());
                self.rows.push(row);
            }
        }
    }
}

fn run_task(cfg: &SweepConfig, task: &Task) -> Vec<ResultRow> {
    let start = Instant::now();
    let stream = replicate_stream(cfg.base_seed, task.cell, task.replicate);
    let mut cell = Cell {
        cfg,
        task,
        seed: stream.stream_id,
        reference_a: Vec::new(),
        reference_sigma: DMatrix::zeros(cfg.model.dim(), cfg.model.dim()),
        horizon: cfg.horizon,
        rows: Vec::new(),
    };
    let prepared = cfg
        .model
        .multiscale(task.sigma, task.epsilon)
        .and_then(|model| {
            let (_, effective) = homogenize(&model)?;
            let x0 = vec![0.0; model.dim()];
            let traj = simulate_multiscale(&model, cfg.horizon, cfg.dt(), stream, &x0)?;
            let traj = if cfg.burn_in > 0.0 {
                traj.burn_in(cfg.burn_in)?
            } else {
                traj
            };
            Ok((effective, traj))
        });
    match prepared {
        Ok((effective, traj)) => {
            cell.reference_a = effective.a().to_vec();
            cell.reference_sigma = effective.sigma().clone();
            cell.horizon = traj.horizon();
            evaluate(&mut cell, &traj);
        }
        Err(err) => {
            log::warn!(
                "sigma={} epsilon={} replicate={}: {err}",
                task.sigma,
                task.epsilon,
                task.replicate
            );
            for &method in &cfg.methods {
                if method.uses_delta() {
                    for delta in cfg.deltas.widths(task.epsilon) {
                        cell.fail(method, Some(delta), &err);
                    }
                } else {
                    cell.fail(method, None, &err);
                }
            }
        }
    }
    if cfg.record_wall_time {
        let elapsed = start.elapsed().as_secs_f64();
        for row in &mut cell.rows {
            row.wall_time = Some(elapsed);
        }
    }
    cell.rows
}

fn evaluate(cell: &mut Cell<'_>, traj: &Trajectory) {
    let cfg = cell.cfg;
    let basis = cfg.model.basis();
    let checkpoints = cfg.trace_checkpoints;
    let wants = |m: Method| cfg.methods.contains(&m);
    let any_tilde = [Method::TildeSub, Method::TildeMa, Method::TildeExp]
        .into_iter()
        .any(wants);

    let mle = (wants(Method::Mle) || any_tilde)
        .then(|| mle_drift_traced(traj, &basis, checkpoints));
    let qv = (wants(Method::Qv) || any_tilde).then(|| qv_sigma_traced(traj, checkpoints));

    // rows in the configured method order: width-free methods first
    for &method in &cfg.methods {
        match method {
            Method::Mle => {
                let r = mle
                    .as_ref()
                    .unwrap()
                    .as_ref()
                    .map(|e| Estimate::Drift(e.clone()))
                    .map_err(clone_err);
                cell.record(method, None, r.as_ref().map_err(clone_err));
            }
            Method::Qv => {
                let e = Estimate::Diffusion(qv.clone().unwrap());
                cell.record(method, None, Ok(&e));
            }
            _ => {}
        }
    }

    for delta in cfg.deltas.widths(cell.task.epsilon) {
        let d = Some(delta);
        let tilde = |drift: &DriftEstimate| -> Result<Estimate> {
            let mle = mle.as_ref().unwrap().as_ref().map_err(clone_err)?;
            tilde_sigma_from_parts(mle, qv.as_ref().unwrap(), drift).map(Estimate::Diffusion)
        };

        // subsampling
        let sub_drift = (wants(Method::DriftSub) || wants(Method::TildeSub))
            .then(|| subsampled_drift_traced(traj, &basis, delta, checkpoints));
        // moving average and exponential filters share one code path
        let filtered = [
            (Method::DriftMa, Method::HatMa, Method::TildeMa),
            (Method::DriftExp, Method::HatExp, Method::TildeExp),
        ];

        for &method in &cfg.methods {
            let result: Option<Result<Estimate>> = match method {
                Method::DriftSub => sub_drift
                    .as_ref()
                    .map(|r| r.as_ref().map(|e| Estimate::Drift(e.clone())).map_err(clone_err)),
                Method::HatSub => Some(
                    subsampled_diffusion_traced(traj, delta, checkpoints).map(Estimate::Diffusion),
                ),
                Method::TildeSub => sub_drift
                    .as_ref()
                    .map(|r| r.as_ref().map_err(clone_err).and_then(&tilde)),
                _ => None,
            };
            if let Some(r) = result {
                cell.record(method, d, r.as_ref().map_err(clone_err));
            }
        }
        drop(sub_drift);

        for (drift_m, hat_m, tilde_m) in filtered {
            if !(wants(drift_m) || wants(hat_m) || wants(tilde_m)) {
                continue;
            }
            let z = if drift_m == Method::DriftMa {
                filter_moving_average(traj, delta)
            } else {
                filter_exponential(traj, delta, cfg.beta)
            };
            let z = match z {
                Ok(z) => z,
                Err(err) => {
                    for m in [drift_m, hat_m, tilde_m].into_iter().filter(|m| wants(*m)) {
                        cell.fail(m, d, &err);
                    }
                    continue;
                }
            };
            let drift = (wants(drift_m) || wants(tilde_m))
                .then(|| filtered_drift_traced(traj, &z, &basis, checkpoints));
            for &method in &cfg.methods {
                let result: Result<Estimate> = if method == drift_m {
                    drift.as_ref().unwrap().as_ref().map(|e| Estimate::Drift(e.clone())).map_err(clone_err)
                } else if method == hat_m {
                    hat_sigma_filtered_traced(traj, &z, delta, checkpoints).map(Estimate::Diffusion)
                } else if method == tilde_m {
                    drift.as_ref().unwrap().as_ref().map_err(clone_err).and_then(&tilde)
                } else {
                    continue;
                };
                cell.record(method, d, result.as_ref().map_err(clone_err));
            }
        }
    }
    sort_rows(cell);
}

/// Orders the rows of one task by width, then configured method order.
fn sort_rows(cell: &mut Cell<'_>) {
    let order = |m: Method| cell.cfg.methods.iter().position(|x| *x == m).unwrap_or(usize::MAX);
    let widths = cell.cfg.deltas.widths(cell.task.epsilon);
    let width_rank = |d: Option<f64>| match d {
        None => 0,
        Some(d) => 1 + widths.iter().position(|w| *w == d).unwrap_or(usize::MAX - 1),
    };
    // stable: keeps component and time order inside each (width, method) group
    let mut rows = std::mem::take(&mut cell.rows);
    rows.sort_by_key(|r| (width_rank(r.delta), order(r.method)));
    cell.rows = rows;
}

/// Errors are not `Clone`; estimates shared between methods re-raise a
/// message-preserving copy.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::SingularSystem { condition } => Error::SingularSystem {
            condition: *condition,
        },
        Error::TooNarrow { delta, dt } => Error::TooNarrow {
            delta: *delta,
            dt: *dt,
        },
        Error::DegenerateAlpha => Error::DegenerateAlpha,
        Error::TrajectoryTooShort { points, required } => Error::TrajectoryTooShort {
            points: *points,
            required: *required,
        },
        other => Error::Format(other.to_string()),
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes the rows as CSV with a header; floats carry 17 significant digits.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            float(r.sigma),
            float(r.epsilon),
            opt(r.delta),
            r.method.name().to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            r.component.clone(),
            float(r.time),
            opt(r.estimate),
            opt(r.reference),
            opt(r.rel_error),
            opt(r.wall_time),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// [`run_sweep`] followed by [`write_results`] into `path`.
pub fn run_sweep_to_file(cfg: &SweepConfig, threads: usize, path: &Path) -> Result<usize> {
    let rows = run_sweep(cfg, threads)?;
    write_results(&rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    Ok(rows.len())
}
