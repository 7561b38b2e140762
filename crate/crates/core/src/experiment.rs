//! End-to-end experiments: pointwise-convergence sweeps, smooth/small density
//! splitting, and Monte Carlo tail-probability estimation for randomized data.
//!
//! The tail machinery exploits linearity: for a fixed draw, the defect
//! `U(t)f^omega - f^omega` is the coefficient-weighted sum of the
//! per-cube basis functions `(U(t) - I) psi(D - k) f`, so the basis is
//! evaluated once at the probe points and each draw costs only a short
//! weighted sum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::{GridFunction, Space, SpectralGrid};
use crate::norms::{
    fourier_lebesgue_norm, level_set_measure, region_cells, LevelSet, NormSpec, Region, TimeGrid,
};
use crate::wiener::{default_active_set, project, RandomLaw, RandomizationPlan};

const TWO_PI: f64 = std::f64::consts::TAU;

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

/// Records of `sup_region |U(t)f - f|` and level-set measures along a time
/// grid refining toward 0. Times are stored in decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSweep {
    pub times: Vec<f64>,
    pub region: Region,
    pub alpha_ladder: Vec<f64>,
    /// `sup_region |U(t)f - f|`, aligned with `times`.
    pub sup_errors: Vec<f64>,
    /// Per time, per ladder threshold: measure of `{ |U(t)f - f| > alpha }`.
    pub level_measures: Vec<Vec<LevelSet>>,
}

/// Sweep the convergence defect of `f` over `tg`, recording sup errors on
/// `region` and level-set measures for a fixed threshold ladder.
///
/// The ladder defaults to 8 geometric thresholds spanning three decades
/// below the largest sup error.
pub fn convergence_sweep(
    f: &GridFunction,
    tg: &TimeGrid,
    region: &Region,
    alpha_ladder: Option<&[f64]>,
) -> Result<ConvergenceSweep> {
    let cells = region_cells(f.grid(), region);
    if cells.is_empty() {
        return Err(Error::Resolution("region contains no grid cells".into()));
    }
    let f_hat = f.to_frequency()?;
    // reference through the same frequency-side path, so t = 0 cancels bitwise
    let f_phys = f_hat.inverse_transform()?;
    let diffs: Vec<(f64, GridFunction)> = tg
        .times()
        .par_iter()
        .map(|&t| {
            let u = f_hat.propagate(t)?;
            let diff = u.axpy(Complex64::new(-1.0, 0.0), &f_phys)?;
            let sup = cells.iter().map(|&i| diff.values()[i].norm()).fold(0.0, f64::max);
            Ok((sup, diff))
        })
        .collect::<Result<_>>()?;
    let ladder: Vec<f64> = match alpha_ladder {
        Some(a) => {
            if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidInput("threshold ladder must be positive".into()));
            }
            a.to_vec()
        }
        None => {
            let max_sup = diffs.iter().map(|(s, _)| *s).fold(0.0, f64::max);
            if max_sup == 0.0 {
                Vec::new()
            } else {
                (0..8).map(|i| max_sup * 10f64.powf(-3.0 + 3.0 * i as f64 / 7.0)).collect()
            }
        }
    };
    let mut times = Vec::with_capacity(diffs.len());
    let mut sup_errors = Vec::with_capacity(diffs.len());
    let mut level_measures = Vec::with_capacity(diffs.len());
    for (&t, (sup, diff)) in tg.times().iter().zip(&diffs).rev() {
        times.push(t);
        sup_errors.push(*sup);
        level_measures.push(
            ladder
                .iter()
                .map(|&alpha| level_set_measure(diff, alpha))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(ConvergenceSweep {
        times,
        region: region.clone(),
        alpha_ladder: ladder,
        sup_errors,
        level_measures,
    })
}

/// A-priori defect bound for band-limited data:
/// `sup |U(t)f - f| <= t M^2 ||f_hat||_{L^1} (2 pi)^{-n/2}` where `M` is the
/// largest frequency in the numerical support.
pub fn convergence_rate_bound(f: &GridFunction, t: f64) -> Result<f64> {
    let hat = f.to_frequency()?;
    let peak = hat.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut m_sq = 0.0f64;
    let mut l1 = 0.0f64;
    for (i, v) in hat.values().iter().enumerate() {
        let a = v.norm();
        if a > 1e-14 * peak {
            m_sq = m_sq.max(hat.grid().freq_norm_sq(i));
        }
        l1 += a;
    }
    l1 *= hat.grid().freq_cell_volume();
    let n = hat.grid().dim() as f64;
    Ok(t.abs() * m_sq * l1 / TWO_PI.powf(n / 2.0))
}

// ---------------------------------------------------------------------------
// Density splitting
// ---------------------------------------------------------------------------

/// Smooth/small decomposition `f = g + h`: `g` band-limited by a smooth
/// frequency cutoff, `h` the tail with Fourier-Lebesgue norm below `epsilon`.
#[derive(Debug, Clone)]
pub struct SplitResult {
    pub g: GridFunction,
    pub h: GridFunction,
    pub epsilon: f64,
    pub achieved_norm: f64,
    /// Inner radius of the raised-cosine roll-off `[R, R+1]`.
    pub cutoff_radius: f64,
}

fn rolloff(d: f64) -> f64 {
    if d <= 0.0 {
        1.0
    } else if d >= 1.0 {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * d).cos();
        c * c
    }
}

fn tail_part(hat: &GridFunction, radius: f64) -> GridFunction {
    hat.map(|i, v| {
        let m = rolloff(hat.grid().freq_norm_sq(i).sqrt() - radius);
        v * (1.0 - m)
    })
}

/// Split `f` into a band-limited part and a tail with
/// `|| h ||_{H-hat^{s,r}} < epsilon`, choosing the smallest viable cutoff
/// radius by bisection.
pub fn density_split(f: &GridFunction, epsilon: f64, spec: &NormSpec) -> Result<SplitResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let hat = f.to_frequency()?;
    let norm_at = |radius: f64| -> Result<f64> {
        fourier_lebesgue_norm(&tail_part(&hat, radius), spec)
    };
    let r_max = (hat.grid().xi_max() - 1.0).max(0.0);
    if norm_at(r_max)? >= epsilon {
        return Err(Error::Resolution(format!(
            "tail norm {:.3e} at the largest representable cutoff still exceeds epsilon = \
             {epsilon:.3e}; the grid cannot resolve a smaller tail",
            norm_at(r_max)?
        )));
    }
    let mut radius = if norm_at(0.0)? < epsilon {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, r_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid)? < epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    // when the numerical band limit is at most one unit beyond the bisected
    // radius, widen to it: the tail then vanishes identically
    let peak = hat.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let band = hat
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 1e-14 * peak)
        .map(|(i, _)| hat.grid().freq_norm_sq(i).sqrt())
        .fold(0.0, f64::max);
    if band <= radius + 1.0 && band <= r_max {
        radius = band;
    }
    let h_hat = tail_part(&hat, radius);
    let g_hat = hat.map(|i, v| {
        let m = rolloff(hat.grid().freq_norm_sq(i).sqrt() - radius);
        v * m
    });
    let achieved_norm = fourier_lebesgue_norm(&h_hat, spec)?;
    let (g, h) = match f.space() {
        Space::Frequency => (g_hat, h_hat),
        Space::Physical => (g_hat.inverse_transform()?, h_hat.inverse_transform()?),
    };
    Ok(SplitResult { g, h, epsilon, achieved_norm, cutoff_radius: radius })
}

// ---------------------------------------------------------------------------
// Probes and per-draw statistics
// ---------------------------------------------------------------------------

/// Where a pointwise statistic is evaluated: one grid point, or the sup over
/// a deterministic sample of region cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    FixedPoint { x: Vec<f64> },
    RegionSample { region: Region, count: usize },
}

impl Probe {
    /// Default probe: sup over 16 cells sampled evenly from the region.
    pub fn region_sample(region: Region) -> Probe {
        Probe::RegionSample { region, count: 16 }
    }

    /// Flat cell indices the probe evaluates at.
    pub fn cells(&self, grid: &SpectralGrid) -> Result<Vec<usize>> {
        match self {
            Probe::FixedPoint { x } => {
                if x.len() != grid.dim() {
                    return Err(Error::InvalidInput(
                        "probe point dim does not match grid".into(),
                    ));
                }
                let nearest = (0..grid.node_count())
                    .min_by(|&a, &b| {
                        let da = dist_sq(&grid.position(a), x);
                        let db = dist_sq(&grid.position(b), x);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                Ok(vec![nearest])
            }
            Probe::RegionSample { region, count } => {
                if *count == 0 {
                    return Err(Error::InvalidInput("probe sample count must be positive".into()));
                }
                let cells = region_cells(grid, region);
                if cells.is_empty() {
                    return Err(Error::Resolution("probe region contains no grid cells".into()));
                }
                if cells.len() <= *count {
                    return Ok(cells);
                }
                Ok((0..*count).map(|i| cells[i * cells.len() / count]).collect())
            }
        }
    }
}

fn dist_sq(p: &[f64; 3], x: &[f64]) -> f64 {
    x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Which linear statistic of one draw is being sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrawStatistic {
    /// `U(t) f^omega - f^omega`.
    Defect { t: f64 },
    /// `U(t) f^omega`.
    Evolved { t: f64 },
    /// `f^omega` itself.
    Plain,
}

fn stat_time(stat: DrawStatistic) -> f64 {
    match stat {
        DrawStatistic::Defect { t } | DrawStatistic::Evolved { t } => t,
        DrawStatistic::Plain => 0.0,
    }
}

fn require_coverage(f: &GridFunction, plan: &RandomizationPlan) -> Result<()> {
    let required = default_active_set(f, &plan.partition)?;
    if !required.is_subset(&plan.active_set) {
        return Err(Error::Coverage(
            "randomization plan's active set does not cover the data's frequency support".into(),
        ));
    }
    Ok(())
}

/// Per-cube basis rows `b_k = S psi(D - k) f` sampled at `cells`, where `S`
/// is the chosen linear statistic. A draw's value at a cell is then
/// `sum_k g_k(omega) b_k(cell)`.
pub fn statistic_basis(
    f: &GridFunction,
    plan: &RandomizationPlan,
    stat: DrawStatistic,
    cells: &[usize],
) -> Result<Vec<Vec<Complex64>>> {
    let hat = f.to_frequency()?;
    plan.active_set
        .iter()
        .map(|k| {
            let piece = project(&hat, k, &plan.partition)?;
            let transformed = piece.map(|i, v| {
                let phase = Complex64::from_polar(1.0, -stat_time(stat) * piece.grid().freq_norm_sq(i));
                match stat {
                    DrawStatistic::Defect { .. } => v * (phase - 1.0),
                    DrawStatistic::Evolved { .. } => v * phase,
                    DrawStatistic::Plain => v,
                }
            });
            let phys = transformed.inverse_transform()?;
            Ok(cells.iter().map(|&i| phys.values()[i]).collect())
        })
        .collect()
}

fn draw_coefficients(plan: &RandomizationPlan, ks: &[Vec<i64>], draw: u64) -> Vec<f64> {
    ks.iter().map(|k| plan.law.coefficient(plan.seed, draw, k)).collect()
}

fn sup_over_cells(basis: &[Vec<Complex64>], coeffs: &[f64]) -> f64 {
    let cells = basis.first().map_or(0, Vec::len);
    (0..cells)
        .map(|j| {
            let z: Complex64 = basis.iter().zip(coeffs).map(|(row, &g)| row[j] * g).sum();
            z.norm()
        })
        .fold(0.0, f64::max)
}

/// Sup-over-probe statistic of every draw, in draw order. Bitwise
/// reproducible at any thread count.
pub fn draw_statistics(
    f: &GridFunction,
    plan: &RandomizationPlan,
    stat: DrawStatistic,
    cells: &[usize],
    num_draws: u64,
) -> Result<Vec<f64>> {
    require_coverage(f, plan)?;
    let basis = statistic_basis(f, plan, stat, cells)?;
    let ks: Vec<Vec<i64>> = plan.active_set.iter().cloned().collect();
    Ok((0..num_draws)
        .into_par_iter()
        .map(|draw| sup_over_cells(&basis, &draw_coefficients(plan, &ks, draw)))
        .collect())
}

// ---------------------------------------------------------------------------
// Tail probabilities
// ---------------------------------------------------------------------------

/// Empirical tail probabilities of `|U(t)f^omega - f^omega|` at a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub probe: Probe,
    pub num_draws: u64,
    pub alpha_grid: Vec<f64>,
    /// `P-hat(statistic > alpha)`, aligned with `alpha_grid`; nonincreasing.
    pub probabilities: Vec<f64>,
    /// Binomial standard errors `sqrt(p(1-p)/n)`.
    pub stderrs: Vec<f64>,
    /// Slope of `log P-hat` against `alpha^2` over thresholds with
    /// `0 < P-hat < 1`; `None` when fewer than two such points exist.
    pub fitted_slope: Option<f64>,
    pub median_statistic: f64,
}

fn empirical_tail(stats: &[f64], alpha_grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = stats.len() as f64;
    let mut probabilities = Vec::with_capacity(alpha_grid.len());
    let mut stderrs = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let count = stats.iter().filter(|&&s| s > alpha).count() as f64;
        let p = count / n;
        probabilities.push(p);
        stderrs.push((p * (1.0 - p) / n).sqrt());
    }
    (probabilities, stderrs)
}

fn quadratic_decay_slope(alpha_grid: &[f64], probabilities: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = alpha_grid
        .iter()
        .zip(probabilities)
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .map(|(&a, &p)| (a * a, p.ln()))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    linear_fit(&xs, &ys).ok().map(|fit| fit.slope)
}

fn validate_alpha_grid(alpha_grid: &[f64]) -> Result<()> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidInput("threshold grid must be nonempty".into()));
    }
    if alpha_grid.iter().any(|a| !(a.is_finite() && *a > 0.0))
        || alpha_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidInput(
            "threshold grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Monte Carlo tail probabilities of the convergence defect of randomized
/// data. With `alpha_grid = None`, 24 geometric thresholds spanning
/// `[0.1, 10]` times the empirical median of the statistic are used.
pub fn tail_probability(
    f: &GridFunction,
    plan: &RandomizationPlan,
    t: f64,
    alpha_grid: Option<&[f64]>,
    probe: &Probe,
    num_draws: u64,
) -> Result<TailEstimate> {
    if num_draws < 1000 {
        return Err(Error::InvalidInput(format!(
            "at least 1000 draws required, got {num_draws}"
        )));
    }
    if let Some(a) = alpha_grid {
        validate_alpha_grid(a)?;
    }
    let cells = probe.cells(f.grid())?;
    let stats = draw_statistics(f, plan, DrawStatistic::Defect { t }, &cells, num_draws)?;
    let mut sorted = stats.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = median(&sorted);
    let grid: Vec<f64> = match alpha_grid {
        Some(a) => a.to_vec(),
        None => {
            if med <= 0.0 {
                return Err(Error::Degenerate(
                    "statistic median is zero; supply an explicit threshold grid".into(),
                ));
            }
            (0..24).map(|i| med * 10f64.powf(-1.0 + 2.0 * i as f64 / 23.0)).collect()
        }
    };
    let (probabilities, stderrs) = empirical_tail(&stats, &grid);
    let fitted_slope = quadratic_decay_slope(&grid, &probabilities);
    Ok(TailEstimate {
        t,
        probe: probe.clone(),
        num_draws,
        alpha_grid: grid,
        probabilities,
        stderrs,
        fitted_slope,
        median_statistic: med,
    })
}

/// Exact tail probabilities for a Rademacher plan with at most 12 active
/// coefficients, by enumerating all sign patterns.
pub fn rademacher_tail_enumeration(
    f: &GridFunction,
    plan: &RandomizationPlan,
    t: f64,
    alpha_grid: &[f64],
    probe: &Probe,
) -> Result<Vec<f64>> {
    if plan.law != RandomLaw::Rademacher {
        return Err(Error::InvalidInput("enumeration requires the Rademacher law".into()));
    }
    let k = plan.active_set.len();
    if k == 0 || k > 12 {
        return Err(Error::InvalidInput(format!(
            "enumeration supports 1..=12 active coefficients, got {k}"
        )));
    }
    validate_alpha_grid(alpha_grid)?;
    require_coverage(f, plan)?;
    let cells = probe.cells(f.grid())?;
    let basis = statistic_basis(f, plan, DrawStatistic::Defect { t }, &cells)?;
    let patterns = 1u64 << k;
    let stats: Vec<f64> = (0..patterns)
        .into_par_iter()
        .map(|mask| {
            let coeffs: Vec<f64> = (0..k)
                .map(|b| if mask >> b & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            sup_over_cells(&basis, &coeffs)
        })
        .collect();
    Ok(alpha_grid
        .iter()
        .map(|&alpha| stats.iter().filter(|&&s| s > alpha).count() as f64 / patterns as f64)
        .collect())
}

// ---------------------------------------------------------------------------
// Stochastic continuity
// ---------------------------------------------------------------------------

/// Per-time exceedance record of the continuity experiment. The tail events
/// use threshold `alpha / 3` so that the triangle inequality
/// `|U f^w - f^w| <= |U g^w - g^w| + |U h^w| + |h^w|` makes the union bound
/// hold draw by draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub t: f64,
    /// `P-hat(|U(t)f^w - f^w| > alpha)`.
    pub p_full: f64,
    /// `P-hat(|U(t)g^w - g^w| > alpha/3)`.
    pub p_smooth: f64,
    /// `P-hat(|U(t)h^w| > alpha/3)`.
    pub p_tail_evolved: f64,
    /// `P-hat(|h^w| > alpha/3)`.
    pub p_tail_static: f64,
    /// Draws where the full-event indicator exceeded the sum of the three
    /// part indicators; always 0.
    pub union_defect_draws: u64,
}

/// Output of [`stochastic_continuity_report`]: rows in decreasing `t`, plus
/// an x-uniformity probe at the largest time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub alpha: f64,
    pub num_draws: u64,
    pub probe: Probe,
    pub split_epsilon: f64,
    pub achieved_split_norm: f64,
    pub cutoff_radius: f64,
    pub rows: Vec<ContinuityRow>,
    /// Whether `p_full` is nonincreasing as `t` decreases.
    pub trend_nonincreasing: bool,
    /// `p_full` at the smallest time.
    pub final_probability: f64,
    /// Per-probe-cell exceedance probabilities at the largest time.
    pub per_probe_probabilities: Vec<f64>,
    pub uniformity_spread: f64,
    /// Three pooled binomial standard errors; on shared draws the spread of
    /// identically distributed probes stays well inside this.
    pub uniformity_bound: f64,
}

/// Track `P(|U(t)f^omega - f^omega| > alpha)` as `t` decreases, decomposed
/// through `f = g + h` with `|| h || < split_epsilon` in `split_spec`.
/// All four events share draws, so the union bound is exact per draw.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_continuity_report(
    f: &GridFunction,
    plan: &RandomizationPlan,
    t_grid: &TimeGrid,
    alpha: f64,
    probe: &Probe,
    num_draws: u64,
    split_spec: &NormSpec,
    split_epsilon: f64,
) -> Result<ContinuityReport> {
    if num_draws < 1000 {
        return Err(Error::InvalidInput(format!(
            "at least 1000 draws required, got {num_draws}"
        )));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    require_coverage(f, plan)?;
    let split = density_split(f, split_epsilon, split_spec)?;
    let cells = probe.cells(f.grid())?;
    let ks: Vec<Vec<i64>> = plan.active_set.iter().cloned().collect();
    let third = alpha / 3.0;

    let mut rows = Vec::with_capacity(t_grid.times().len());
    let mut per_probe_probabilities = Vec::new();
    for (pos, &t) in t_grid.times().iter().enumerate().rev() {
        let b_full = statistic_basis(f, plan, DrawStatistic::Defect { t }, &cells)?;
        let b_smooth = statistic_basis(&split.g, plan, DrawStatistic::Defect { t }, &cells)?;
        let b_evolved = statistic_basis(&split.h, plan, DrawStatistic::Evolved { t }, &cells)?;
        let b_static = statistic_basis(&split.h, plan, DrawStatistic::Plain, &cells)?;
        let largest_t = pos == t_grid.times().len() - 1;
        let counts = (0..num_draws)
            .into_par_iter()
            .map(|draw| {
                let coeffs = draw_coefficients(plan, &ks, draw);
                let full = sup_over_cells(&b_full, &coeffs) > alpha;
                let smooth = sup_over_cells(&b_smooth, &coeffs) > third;
                let evolved = sup_over_cells(&b_evolved, &coeffs) > third;
                let stat = sup_over_cells(&b_static, &coeffs) > third;
                let defect =
                    full && !(smooth || evolved || stat);
                let mut per_cell = Vec::new();
                if largest_t {
                    per_cell = (0..cells.len())
                        .map(|j| {
                            let z: Complex64 =
                                b_full.iter().zip(&coeffs).map(|(row, &g)| row[j] * g).sum();
                            u64::from(z.norm() > alpha)
                        })
                        .collect();
                }
                (
                    u64::from(full),
                    u64::from(smooth),
                    u64::from(evolved),
                    u64::from(stat),
                    u64::from(defect),
                    per_cell,
                )
            })
            .reduce(
                || (0, 0, 0, 0, 0, vec![0; if largest_t { cells.len() } else { 0 }]),
                |mut a, b| {
                    a.0 += b.0;
                    a.1 += b.1;
                    a.2 += b.2;
                    a.3 += b.3;
                    a.4 += b.4;
                    for (x, y) in a.5.iter_mut().zip(&b.5) {
                        *x += y;
                    }
                    a
                },
            );
        let n = num_draws as f64;
        if largest_t {
            per_probe_probabilities = counts.5.iter().map(|&c| c as f64 / n).collect();
        }
        rows.push(ContinuityRow {
            t,
            p_full: counts.0 as f64 / n,
            p_smooth: counts.1 as f64 / n,
            p_tail_evolved: counts.2 as f64 / n,
            p_tail_static: counts.3 as f64 / n,
            union_defect_draws: counts.4,
        });
    }

    let trend_nonincreasing = rows.windows(2).all(|w| w[1].p_full <= w[0].p_full);
    let final_probability = rows.last().map_or(0.0, |r| r.p_full);
    let spread = per_probe_probabilities.iter().cloned().fold(0.0, f64::max)
        - per_probe_probabilities.iter().cloned().fold(f64::INFINITY, f64::min);
    let uniformity_spread = if per_probe_probabilities.is_empty() { 0.0 } else { spread };
    let pooled =
        per_probe_probabilities.iter().sum::<f64>() / per_probe_probabilities.len().max(1) as f64;
    let uniformity_bound = 3.0 * (pooled * (1.0 - pooled) / num_draws as f64).sqrt();
    Ok(ContinuityReport {
        alpha,
        num_draws,
        probe: probe.clone(),
        split_epsilon,
        achieved_split_norm: split.achieved_norm,
        cutoff_radius: split.cutoff_radius,
        rows,
        trend_nonincreasing,
        final_probability,
        per_probe_probabilities,
        uniformity_spread,
        uniformity_bound,
    })
}
