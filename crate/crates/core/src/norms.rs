//! Fourier-Lebesgue norms, region-restricted Lebesgue and mixed space-time
//! norms, maximal functions over finite time grids, and level-set measures.
//!
//! All quadrature is the trapezoid rule on the grid lattice; a cell belongs to
//! a region iff its center does.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Space, SpectralGrid};

/// Fourier-Lebesgue space parameters: regularity `s` and exponent `r >= 2`.
///
/// The norm is `|| <xi>^s f_hat ||_{L^{r'}}` with `r'` the Holder conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub r: f64,
}

impl NormSpec {
    pub fn new(s: f64, r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 2.0) {
            return Err(Error::Validation(format!(
                "Fourier-Lebesgue exponent must satisfy r >= 2, got {r}"
            )));
        }
        if !s.is_finite() {
            return Err(Error::Validation(format!("regularity s must be finite, got {s}")));
        }
        Ok(Self { s, r })
    }

    /// Holder conjugate `r' = r / (r - 1)`, in (1, 2].
    pub fn conjugate(&self) -> f64 {
        self.r / (self.r - 1.0)
    }
}

/// Physical-space region descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Full,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    /// Origin-centered ball.
    pub fn ball(dim: usize, radius: f64) -> Region {
        Region::Ball { center: vec![0.0; dim], radius }
    }

    pub fn contains(&self, x: &[f64; 3], dim: usize) -> bool {
        match self {
            Region::Full => true,
            Region::Ball { center, radius } => {
                let r2: f64 = (0..dim)
                    .map(|a| {
                        let d = x[a] - center.get(a).copied().unwrap_or(0.0);
                        d * d
                    })
                    .sum();
                r2 <= radius * radius
            }
            Region::Box { lo, hi } => (0..dim).all(|a| {
                x[a] >= lo.get(a).copied().unwrap_or(f64::NEG_INFINITY)
                    && x[a] <= hi.get(a).copied().unwrap_or(f64::INFINITY)
            }),
        }
    }
}

/// Flat indices of the cells whose centers lie in `region`.
pub fn region_cells(grid: &SpectralGrid, region: &Region) -> Vec<usize> {
    (0..grid.node_count())
        .filter(|&i| region.contains(&grid.position(i), grid.dim()))
        .collect()
}

/// Mixed norm parameters `L_x^q L_t^p` restricted to a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub q_space: f64,
    pub p_time: f64,
    pub region: Region,
}

impl MixedNormSpec {
    pub fn new(q_space: f64, p_time: f64, region: Region) -> Result<Self> {
        for (name, e) in [("q_space", q_space), ("p_time", p_time)] {
            if e.is_nan() || e < 1.0 {
                return Err(Error::Validation(format!("{name} must lie in [1, inf], got {e}")));
            }
        }
        Ok(Self { q_space, p_time, region })
    }

    /// Spatial sup norm composed with a time sup.
    pub fn sup_sup(region: Region) -> MixedNormSpec {
        MixedNormSpec { q_space: f64::INFINITY, p_time: f64::INFINITY, region }
    }
}

/// Finite surrogate for `sup_t`, typically geometric in `(0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Validation("time grid must be nonempty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("time grid entries must be finite".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("time grid must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// Geometric grid over `decades` decades up to `t_max`, with
    /// `points_per_decade` points per decade. The default surrogate for
    /// `sup_{t in (0, t_max]}` is 64 points per decade over 4 decades.
    pub fn geometric(t_max: f64, decades: f64, points_per_decade: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Validation(format!("t_max must be positive, got {t_max}")));
        }
        if points_per_decade == 0 || decades <= 0.0 {
            return Err(Error::Validation("empty geometric time grid".into()));
        }
        let total = (decades * points_per_decade as f64).round() as usize;
        let times = (0..=total)
            .map(|i| t_max * 10f64.powf(-decades * (1.0 - i as f64 / total as f64)))
            .collect();
        Self::new(times)
    }

    /// Default surrogate for `sup_{t in (0, t_max]}`.
    pub fn default_sup(t_max: f64) -> Result<Self> {
        Self::geometric(t_max, 4.0, 64)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Interleave midpoints, doubling the density (for refinement checks).
    pub fn refined(&self) -> TimeGrid {
        let mut times = Vec::with_capacity(self.times.len() * 2);
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push((w[0] * w[1]).sqrt());
        }
        times.push(*self.times.last().unwrap());
        TimeGrid { times }
    }
}

/// A threshold together with the grid-cell-weighted measure of its level set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub threshold: f64,
    pub measure: f64,
}

/// `|| <xi>^s f_hat ||_{L^{r'}}` by trapezoid quadrature on the lattice.
pub fn fourier_lebesgue_norm(f: &GridFunction, spec: &NormSpec) -> Result<f64> {
    let hat = f.to_frequency()?;
    let weighted = hat.bracket_weight(spec.s)?;
    let rp = spec.conjugate();
    let vol = f.grid().freq_cell_volume();
    let sum: f64 = weighted.values().iter().map(|v| v.norm().powf(rp)).sum();
    Ok((sum * vol).powf(1.0 / rp))
}

/// Region-restricted `L^p` norm of physical-space samples; `p = inf` is the
/// max over the region.
pub fn lebesgue_norm(f: &GridFunction, p: f64, region: &Region) -> Result<f64> {
    if f.space() != Space::Physical {
        return Err(Error::SpaceTag { expected: "physical", found: f.space().as_str() });
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::Validation(format!("Lebesgue exponent must lie in [1, inf], got {p}")));
    }
    let cells = region_cells(f.grid(), region);
    if cells.is_empty() {
        return Err(Error::InvalidInput("region contains no grid cells".into()));
    }
    if p.is_infinite() {
        return Ok(cells.iter().map(|&i| f.values()[i].norm()).fold(0.0, f64::max));
    }
    let vol = f.grid().cell_volume();
    let sum: f64 = cells.iter().map(|&i| f.values()[i].norm().powf(p)).sum();
    Ok((sum * vol).powf(1.0 / p))
}

/// Pointwise max of `|U(t)f|` over the time grid, restricted to `region`
/// (zero outside). Monotone nondecreasing under time-grid refinement.
pub fn maximal_function(f: &GridFunction, tg: &TimeGrid, region: &Region) -> Result<GridFunction> {
    let hat = f.to_frequency()?;
    let magnitudes = tg
        .times()
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let u = hat.propagate(t)?;
            Ok(u.values().iter().map(|v| v.norm()).collect())
        })
        .reduce_with(|a, b| {
            let a = a?;
            let b = b?;
            Ok(a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect())
        })
        .expect("nonempty time grid")?;
    let grid = *f.grid();
    let dim = grid.dim();
    let values = magnitudes
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            if region.contains(&grid.position(i), dim) {
                Complex64::new(m, 0.0)
            } else {
                Complex64::default()
            }
        })
        .collect();
    GridFunction::new(grid, values, Space::Physical)
}

/// Mixed norm with `p_time = inf`, taking an already-computed maximal
/// function as input.
pub fn mixed_norm_sup(umax: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    if !spec.p_time.is_infinite() {
        return Err(Error::InvalidInput(
            "mixed_norm_sup requires p_time = inf; use mixed_norm_family for finite p".into(),
        ));
    }
    lebesgue_norm(umax, spec.q_space, &spec.region)
}

/// Mixed norm over a time-indexed family of physical-space snapshots.
///
/// The inner time integral is trapezoid quadrature over `times`; the outer
/// spatial norm is cell-weighted over the region.
pub fn mixed_norm_family(
    times: &[f64],
    frames: &[GridFunction],
    spec: &MixedNormSpec,
) -> Result<f64> {
    if times.len() != frames.len() || frames.is_empty() {
        return Err(Error::InvalidInput("times and frames must match and be nonempty".into()));
    }
    let grid = frames[0].grid();
    for f in frames {
        if f.grid() != grid || f.space() != Space::Physical {
            return Err(Error::InvalidInput(
                "frames must share one grid and be physical-space".into(),
            ));
        }
    }
    let cells = region_cells(grid, &spec.region);
    if cells.is_empty() {
        return Err(Error::InvalidInput("region contains no grid cells".into()));
    }
    // trapezoid weights in time
    let n = times.len();
    let wt: Vec<f64> = (0..n)
        .map(|i| {
            let lo = if i == 0 { times[0] } else { times[i - 1] };
            let hi = if i == n - 1 { times[n - 1] } else { times[i + 1] };
            (hi - lo) / 2.0
        })
        .collect();
    let p = spec.p_time;
    let q = spec.q_space;
    let inner = |cell: usize| -> f64 {
        if p.is_infinite() {
            frames.iter().map(|f| f.values()[cell].norm()).fold(0.0, f64::max)
        } else {
            let s: f64 = frames
                .iter()
                .zip(&wt)
                .map(|(f, &w)| f.values()[cell].norm().powf(p) * w)
                .sum();
            s.powf(1.0 / p)
        }
    };
    if q.is_infinite() {
        Ok(cells.iter().map(|&c| inner(c)).fold(0.0, f64::max))
    } else {
        let vol = grid.cell_volume();
        let s: f64 = cells.iter().map(|&c| inner(c).powf(q)).sum();
        Ok((s * vol).powf(1.0 / q))
    }
}

/// Grid-cell-weighted measure of `{ x : |g(x)| > alpha }`.
pub fn level_set_measure(g: &GridFunction, alpha: f64) -> Result<LevelSet> {
    if g.space() != Space::Physical {
        return Err(Error::SpaceTag { expected: "physical", found: g.space().as_str() });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidInput(format!("level threshold must be positive, got {alpha}")));
    }
    let vol = g.grid().cell_volume();
    let count = g.values().iter().filter(|v| v.norm() > alpha).count();
    Ok(LevelSet { threshold: alpha, measure: count as f64 * vol })
}

/// Ratio of the mixed maximal norm to the Fourier-Lebesgue norm, measuring
/// one instance of an `||U(t)f|| <= C ||f||` inequality.
pub fn inequality_ratio(
    f: &GridFunction,
    lhs: &MixedNormSpec,
    tg: &TimeGrid,
    rhs: &NormSpec,
) -> Result<f64> {
    let denom = fourier_lebesgue_norm(f, rhs)?;
    if denom <= f64::EPSILON {
        return Err(Error::Degenerate(
            "Fourier-Lebesgue norm of the data vanishes; inequality ratio undefined".into(),
        ));
    }
    let umax = maximal_function(f, tg, &lhs.region)?;
    let numer = mixed_norm_sup(&umax, lhs)?;
    Ok(numer / denom)
}
