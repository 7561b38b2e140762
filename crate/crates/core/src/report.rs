//! Experiment dispatch and report emission.
//!
//! A report echoes its config and effective seed plus a provenance hash, so
//! any report can be regenerated bitwise. The results payload excludes
//! wall-clock time; determinism checks compare payload bytes.

use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::dyadic::{fit_blowup, ScalingFit, SweepRow};
use crate::error::{Error, Result};
use crate::experiment::{convergence_sweep, tail_probability, ConvergenceSweep, TailEstimate};
use crate::fit::{linear_fit, LineFit};
use crate::grid::{gaussian_free_evolution_periodic, AnalyticSignal};
use crate::norms::{
    fourier_lebesgue_norm, maximal_function, mixed_norm_sup, MixedNormSpec, NormSpec, TimeGrid,
};
use crate::wiener::{
    build_partition, coefficient_l2, khintchine_moment, project, square_function, PlanSummary,
    RandomizationPlan,
};

/// One time step of a propagation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagateRow {
    pub t: f64,
    pub l2_norm: f64,
    pub sup_abs: f64,
    /// `|l2(t) - l2(0)| / l2(0)`.
    pub unitarity_defect: f64,
    /// Relative L^2 error against the closed-form evolution, defined for the
    /// 1D unit Gaussian datum.
    pub oracle_error: Option<f64>,
}

/// One Khintchine moment measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhintchineRow {
    pub p: f64,
    pub moment: f64,
    /// `moment / (sqrt(p) ||c||_2)`.
    pub ratio: f64,
}

/// Module-specific results. Serialized bytes of this value are the
/// determinism contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Propagate { rows: Vec<PropagateRow> },
    Norms { s: f64, r: f64, fourier_lebesgue: f64, l2: f64 },
    MaximalRatio { mixed_norm: f64, datum_norm: f64, ratio: f64 },
    Counterexample { rows: Vec<SweepRow>, fit: ScalingFit },
    Randomize { plan: PlanSummary, square_sup: f64, khintchine: Vec<KhintchineRow> },
    Tails { estimate: TailEstimate },
    Convergence { sweep: ConvergenceSweep, slope: Option<LineFit> },
}

/// A complete experiment record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    /// SHA-256 over the canonical config JSON and the seed.
    pub provenance: String,
    pub wall_ms: u64,
    pub payload: Payload,
}

fn provenance_hash(config: &ExperimentConfig) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(config).map_err(|e| Error::Validation(e.to_string()))?);
    hasher.update(config.seed().unwrap_or(0).to_le_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

fn is_unit_gaussian(datum: &AnalyticSignal, dim: usize) -> bool {
    matches!(datum, AnalyticSignal::Gaussian { center, width, modulation }
        if dim == 1
            && center.iter().all(|&c| c == 0.0)
            && *width == 1.0
            && modulation.iter().all(|&m| m == 0.0))
}

fn run_payload(config: &ExperimentConfig) -> Result<Payload> {
    match config {
        ExperimentConfig::Propagate(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            if c.times.is_empty() {
                return Err(Error::Validation("propagate needs at least one time".into()));
            }
            let l2_0 = f.l2_norm();
            let oracle = is_unit_gaussian(&c.datum, grid.dim());
            let rows = c
                .times
                .iter()
                .map(|&t| {
                    let u = f.propagate(t)?.to_physical()?;
                    let l2 = u.l2_norm();
                    let sup = u.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
                    let oracle_error = if oracle {
                        let exact = u.map(|i, _| {
                            gaussian_free_evolution_periodic(
                                u.grid().position(i)[0],
                                t,
                                u.grid().extent(),
                            )
                        });
                        Some(u.relative_l2_error(&exact))
                    } else {
                        None
                    };
                    Ok(PropagateRow {
                        t,
                        l2_norm: l2,
                        sup_abs: sup,
                        unitarity_defect: (l2 - l2_0).abs() / l2_0,
                        oracle_error,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Payload::Propagate { rows })
        }
        ExperimentConfig::Norms(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            let spec = NormSpec::new(c.s, c.r)?;
            Ok(Payload::Norms {
                s: c.s,
                r: c.r,
                fourier_lebesgue: fourier_lebesgue_norm(&f, &spec)?,
                l2: f.l2_norm(),
            })
        }
        ExperimentConfig::MaximalRatio(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            let spec = NormSpec::new(c.s, c.r)?;
            let mixed = MixedNormSpec::new(c.q_space, f64::INFINITY, c.region.clone())?;
            let tg = TimeGrid::default_sup(c.t_max)?;
            let umax = maximal_function(&f, &tg, &mixed.region)?;
            let mixed_norm = mixed_norm_sup(&umax, &mixed)?;
            let datum_norm = fourier_lebesgue_norm(&f, &spec)?;
            if datum_norm <= f64::EPSILON {
                return Err(Error::Degenerate("datum norm vanishes; ratio undefined".into()));
            }
            Ok(Payload::MaximalRatio { mixed_norm, datum_norm, ratio: mixed_norm / datum_norm })
        }
        ExperimentConfig::Counterexample(c) => {
            let rows = crate::dyadic::sweep(&c.ks, c.s, c.p, c.delta)?;
            let values: Vec<f64> = rows.iter().map(|r| r.growth_value).collect();
            let fit = fit_blowup(&c.ks, &values)?;
            Ok(Payload::Counterexample { rows, fit })
        }
        ExperimentConfig::Randomize(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            let part = build_partition(grid.dim(), c.profile)?;
            let plan = RandomizationPlan::covering(&f, &part, c.law, c.seed)?;
            let sq = square_function(&f, &part)?;
            let square_sup = sq.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let hat = f.to_frequency()?;
            let coefficients: Vec<(Vec<i64>, Complex64)> = plan
                .active_set
                .iter()
                .map(|k| {
                    let mass = project(&hat, k, &part)?.l2_norm();
                    Ok((k.clone(), Complex64::new(mass, 0.0)))
                })
                .collect::<Result<_>>()?;
            let c_l2 = coefficient_l2(&coefficients);
            let khintchine = c
                .moment_orders
                .iter()
                .map(|&p| {
                    let moment =
                        khintchine_moment(&coefficients, c.law, p, c.num_draws, c.seed)?;
                    Ok(KhintchineRow { p, moment, ratio: moment / (p.sqrt() * c_l2) })
                })
                .collect::<Result<_>>()?;
            Ok(Payload::Randomize { plan: plan.summary(), square_sup, khintchine })
        }
        ExperimentConfig::Tails(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            let part = build_partition(grid.dim(), c.profile)?;
            let plan = RandomizationPlan::covering(&f, &part, c.law, c.seed)?;
            let estimate = tail_probability(
                &f,
                &plan,
                c.t,
                c.alpha_grid.as_deref(),
                &c.probe,
                c.num_draws,
            )?;
            Ok(Payload::Tails { estimate })
        }
        ExperimentConfig::Convergence(c) => {
            let grid = c.grid.build()?;
            let f = c.datum.materialize(&grid)?;
            let tg = TimeGrid::new(c.times.clone())?;
            let sweep = convergence_sweep(&f, &tg, &c.region, c.alpha_ladder.as_deref())?;
            let (xs, ys): (Vec<f64>, Vec<f64>) = sweep
                .times
                .iter()
                .zip(&sweep.sup_errors)
                .filter(|(&t, &e)| t > 0.0 && e > 0.0)
                .map(|(&t, &e)| (t.ln(), e.ln()))
                .unzip();
            let slope = if xs.len() >= 2 { linear_fit(&xs, &ys).ok() } else { None };
            Ok(Payload::Convergence { sweep, slope })
        }
    }
}

/// Run one experiment to a complete report.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let payload = run_payload(config)?;
    Ok(ExperimentReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seed: config.seed(),
        provenance: provenance_hash(config)?,
        wall_ms: started.elapsed().as_millis() as u64,
        payload,
    })
}

/// Canonical JSON bytes of the results payload (the determinism contract).
pub fn payload_bytes(report: &ExperimentReport) -> Result<Vec<u8>> {
    serde_json::to_vec(&report.payload).map_err(|e| Error::Validation(e.to_string()))
}

/// Output format of [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

fn fmt_f64(v: f64) -> String {
    // round-trippable decimal text, stable across runs
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Flatten the payload to CSV rows with stable per-kind columns:
///
/// - propagate: `t,l2_norm,sup_abs,unitarity_defect,oracle_error`
/// - norms: `s,r,fourier_lebesgue,l2`
/// - maximal_ratio: `mixed_norm,datum_norm,ratio`
/// - counterexample: `k,s,p,delta,norm,growth_value,oracle_value,log2_growth`
/// - randomize: `p,moment,ratio`
/// - tails: `alpha,p_hat,stderr`
/// - convergence: `t,sup_error,alpha,level_measure` (one row per threshold)
pub fn payload_csv(payload: &Payload) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write =
        |w: &mut csv::Writer<Vec<u8>>, rec: &[String]| w.write_record(rec).map_err(csv_err);
    match payload {
        Payload::Propagate { rows } => {
            write(&mut w, &cols(&["t", "l2_norm", "sup_abs", "unitarity_defect", "oracle_error"]))?;
            for r in rows {
                write(
                    &mut w,
                    &[
                        fmt_f64(r.t),
                        fmt_f64(r.l2_norm),
                        fmt_f64(r.sup_abs),
                        fmt_f64(r.unitarity_defect),
                        fmt_opt(r.oracle_error),
                    ],
                )?;
            }
        }
        Payload::Norms { s, r, fourier_lebesgue, l2 } => {
            write(&mut w, &cols(&["s", "r", "fourier_lebesgue", "l2"]))?;
            write(
                &mut w,
                &[fmt_f64(*s), fmt_f64(*r), fmt_f64(*fourier_lebesgue), fmt_f64(*l2)],
            )?;
        }
        Payload::MaximalRatio { mixed_norm, datum_norm, ratio } => {
            write(&mut w, &cols(&["mixed_norm", "datum_norm", "ratio"]))?;
            write(&mut w, &[fmt_f64(*mixed_norm), fmt_f64(*datum_norm), fmt_f64(*ratio)])?;
        }
        Payload::Counterexample { rows, .. } => {
            write(
                &mut w,
                &cols(&["k", "s", "p", "delta", "norm", "growth_value", "oracle_value", "log2_growth"]),
            )?;
            for r in rows {
                write(
                    &mut w,
                    &[
                        r.k.to_string(),
                        fmt_f64(r.s),
                        fmt_f64(r.p),
                        fmt_f64(r.delta),
                        fmt_f64(r.norm),
                        fmt_f64(r.growth_value),
                        fmt_f64(r.oracle_value),
                        fmt_f64(r.growth_value.log2()),
                    ],
                )?;
            }
        }
        Payload::Randomize { khintchine, .. } => {
            write(&mut w, &cols(&["p", "moment", "ratio"]))?;
            for r in khintchine {
                write(&mut w, &[fmt_f64(r.p), fmt_f64(r.moment), fmt_f64(r.ratio)])?;
            }
        }
        Payload::Tails { estimate } => {
            write(&mut w, &cols(&["alpha", "p_hat", "stderr"]))?;
            for ((&alpha, &p_hat), &stderr) in estimate
                .alpha_grid
                .iter()
                .zip(&estimate.probabilities)
                .zip(&estimate.stderrs)
            {
                write(&mut w, &[fmt_f64(alpha), fmt_f64(p_hat), fmt_f64(stderr)])?;
            }
        }
        Payload::Convergence { sweep, .. } => {
            write(&mut w, &cols(&["t", "sup_error", "alpha", "level_measure"]))?;
            for (i, (&t, &e)) in sweep.times.iter().zip(&sweep.sup_errors).enumerate() {
                if sweep.alpha_ladder.is_empty() {
                    write(&mut w, &[fmt_f64(t), fmt_f64(e), String::new(), String::new()])?;
                } else {
                    for ls in &sweep.level_measures[i] {
                        write(
                            &mut w,
                            &[
                                fmt_f64(t),
                                fmt_f64(e),
                                fmt_f64(ls.threshold),
                                fmt_f64(ls.measure),
                            ],
                        )?;
                    }
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv serialization failed: {e}"))
}

/// Write the report to `out_dir` in the requested format: `report.json`
/// (full record) or `payload.csv` (flattened results).
pub fn emit(report: &ExperimentReport, format: Format, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(report)
                .map_err(|e| Error::Validation(e.to_string()))?;
            fs::write(out_dir.join("report.json"), text + "\n")?;
        }
        Format::Csv => {
            fs::write(out_dir.join("payload.csv"), payload_csv(&report.payload)?)?;
        }
    }
    Ok(())
}
