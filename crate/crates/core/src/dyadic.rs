//! The dyadic-annulus family that breaks the 1D maximal-function estimate
//! below the critical regularity, its growth measurement, and the blow-up
//! exponent fit.
//!
//! The datum at scale `k` has frequency profile `2^{-k sigma}` on the shell
//! `2^k <= |xi| <= 2^{k+1}` with `sigma = s + 1 - 2/p`, so its Fourier-
//! Lebesgue norm with parameters `(s, p/2)` is of order one while the mixed
//! maximal norm over the short time window `t <= (delta/100) 2^{-2k}` and the
//! small ball `|x| <= 2^{-k}` grows like `2^{k(1/p - s)}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LineFit};
use crate::grid::{AnalyticSignal, GridFunction, SpectralGrid};
use crate::norms::{
    fourier_lebesgue_norm, lebesgue_norm, maximal_function, region_cells, NormSpec, Region,
    TimeGrid,
};

const SQRT_2PI: f64 = 2.5066282746310002;

/// Parameters of one member of the counterexample family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicDatum {
    /// Dyadic scale; frequency support is `2^k <= |xi| <= 2^{k+1}`.
    pub k: u32,
    /// Regularity parameter of the target norm.
    pub s: f64,
    /// Spatial exponent of the maximal norm; the family needs `p >= 4`.
    pub p: f64,
    /// Phase-control parameter in (0, 1); the time window is
    /// `(delta/100) 2^{-2k}`. Defaults to 0.5.
    pub delta: f64,
}

impl DyadicDatum {
    pub fn new(k: u32, s: f64, p: f64, delta: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::Validation("dyadic scale k must be >= 1".into()));
        }
        if !(p.is_finite() && p >= 4.0) {
            return Err(Error::Validation(format!("exponent p must be >= 4, got {p}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Validation(format!("delta must lie in (0,1), got {delta}")));
        }
        if !s.is_finite() {
            return Err(Error::Validation(format!("s must be finite, got {s}")));
        }
        Ok(Self { k, s, p, delta })
    }

    /// Amplitude exponent `sigma = s + 1/((p/2)') = s + 1 - 2/p`.
    pub fn sigma(&self) -> f64 {
        self.s + 1.0 - 2.0 / self.p
    }

    /// Upper end of the phase-controlled time window, `(delta/100) 2^{-2k}`.
    pub fn time_window(&self) -> f64 {
        self.delta / 100.0 * (2.0f64).powi(-2 * self.k as i32)
    }

    /// Measurement region `|x| <= 2^{-k}`.
    pub fn region(&self) -> Region {
        Region::ball(1, (2.0f64).powi(-(self.k as i32)))
    }

    /// A grid resolving both the annulus and the measurement region:
    /// fixed box L = 128 with N = 2^{k+10}, giving 16 cells across the region,
    /// xi_max = pi 2^{k+3} well above the annulus, and a frequency spacing
    /// fine enough that annulus-edge quadrature error stays below a percent.
    pub fn recommended_grid(&self) -> Result<SpectralGrid> {
        let n = 1usize
            .checked_shl(self.k + 10)
            .ok_or_else(|| Error::Resolution(format!("scale k = {} too large", self.k)))?;
        if n > 1 << 22 {
            return Err(Error::Resolution(format!(
                "scale k = {} exceeds desk-scale memory",
                self.k
            )));
        }
        SpectralGrid::new(1, 128.0, n)
    }

    /// Geometric time grid over the phase-controlled window, starting at 0.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let mut times = vec![0.0];
        times.extend_from_slice(TimeGrid::default_sup(self.time_window())?.times());
        TimeGrid::new(times)
    }

    /// Frequency-side indicator profile on the hosting grid.
    pub fn build_datum(&self, grid: &SpectralGrid) -> Result<GridFunction> {
        if grid.dim() != 1 {
            return Err(Error::InvalidInput("counterexample family is one-dimensional".into()));
        }
        AnalyticSignal::DyadicAnnulus { k: self.k, amplitude_exponent: self.sigma() }
            .materialize(grid)
    }

    fn check_region_resolution(&self, grid: &SpectralGrid) -> Result<Vec<usize>> {
        let cells = region_cells(grid, &self.region());
        if cells.len() < 8 {
            return Err(Error::Resolution(format!(
                "region |x| <= 2^-{} spans only {} cells; need at least 8",
                self.k,
                cells.len()
            )));
        }
        Ok(cells)
    }

    /// `|| U(t) f ||_{L^p(|x| <= 2^{-k}) L^inf_t}` with the time grid confined
    /// to the phase-controlled window.
    pub fn measure_growth(&self, grid: &SpectralGrid, tg: &TimeGrid) -> Result<f64> {
        self.check_region_resolution(grid)?;
        if tg.times().iter().any(|&t| t > self.time_window() * (1.0 + 1e-12)) {
            return Err(Error::InvalidInput(
                "time grid extends beyond the phase-controlled window".into(),
            ));
        }
        let f = self.build_datum(grid)?;
        let region = self.region();
        let umax = maximal_function(&f, tg, &region)?;
        lebesgue_norm(&umax, self.p, &region)
    }

    /// Independent oracle: brute-force trapezoid quadrature of the annulus
    /// oscillatory integral at 10x the grid's frequency resolution, evaluated
    /// at the same region cells and times and aggregated with the same
    /// cell weights.
    pub fn oracle_growth(&self, grid: &SpectralGrid, tg: &TimeGrid) -> Result<f64> {
        let cells = self.check_region_resolution(grid)?;
        let amp = (2.0f64).powf(-(self.k as f64) * self.sigma());
        let inner = (2.0f64).powi(self.k as i32);
        let outer = 2.0 * inner;
        let dxi = grid.freq_spacing() / 10.0;
        let m = ((outer - inner) / dxi).ceil() as usize;
        let xs: Vec<f64> = cells.iter().map(|&i| grid.position(i)[0]).collect();
        let sup: Vec<f64> = xs
            .par_iter()
            .map(|&x| {
                tg.times()
                    .iter()
                    .map(|&t| {
                        // midpoint rule over both signed halves of the annulus
                        let mut acc = Complex64::default();
                        for j in 0..m {
                            let xi = inner + (j as f64 + 0.5) * (outer - inner) / m as f64;
                            acc += Complex64::from_polar(1.0, x * xi - t * xi * xi);
                            acc += Complex64::from_polar(1.0, -x * xi - t * xi * xi);
                        }
                        (acc * amp * (outer - inner) / m as f64 / SQRT_2PI).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let sum: f64 = sup.iter().map(|v| v.powf(self.p)).sum();
        Ok((sum * grid.cell_volume()).powf(1.0 / self.p))
    }

    /// Fourier-Lebesgue norm of the datum with its own `(s, p/2)` parameters.
    pub fn datum_norm(&self, grid: &SpectralGrid) -> Result<f64> {
        let f = self.build_datum(grid)?;
        fourier_lebesgue_norm(&f, &NormSpec::new(self.s, self.p / 2.0)?)
    }

    /// Maximum phase magnitudes over the window, region and annulus:
    /// `(max |t xi^2|, max |x xi|)`. Controls cancellation in the integral.
    pub fn phase_extents(&self) -> (f64, f64) {
        let outer = (2.0f64).powi(self.k as i32 + 1);
        (self.time_window() * outer * outer, (2.0f64).powi(-(self.k as i32)) * outer)
    }
}

/// Fitted scaling of measured values against the dyadic scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub scales: Vec<u32>,
    pub values: Vec<f64>,
    /// Base-2 log-linear regression slope.
    pub fitted_slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Least-squares slope of `log2(value)` against `k`. Needs at least 4 scales.
pub fn fit_blowup(scales: &[u32], values: &[f64]) -> Result<ScalingFit> {
    if scales.len() < 4 {
        return Err(Error::Fit(format!(
            "blow-up fit needs at least 4 scales, got {}",
            scales.len()
        )));
    }
    if values.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::Fit("blow-up fit needs positive values".into()));
    }
    let xs: Vec<f64> = scales.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let LineFit { slope, intercept, residual } = linear_fit(&xs, &ys)?;
    Ok(ScalingFit {
        scales: scales.to_vec(),
        values: values.to_vec(),
        fitted_slope: slope,
        intercept,
        residual,
    })
}

/// One row of a counterexample sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub s: f64,
    pub p: f64,
    pub delta: f64,
    pub norm: f64,
    pub growth_value: f64,
    pub oracle_value: f64,
}

/// Run the family across scales, recording norms, measured growth, and the
/// independent quadrature oracle.
pub fn sweep(ks: &[u32], s: f64, p: f64, delta: f64) -> Result<Vec<SweepRow>> {
    ks.iter()
        .map(|&k| {
            let datum = DyadicDatum::new(k, s, p, delta)?;
            let grid = datum.recommended_grid()?;
            let tg = datum.time_grid()?;
            Ok(SweepRow {
                k,
                s,
                p,
                delta,
                norm: datum.datum_norm(&grid)?,
                growth_value: datum.measure_growth(&grid, &tg)?,
                oracle_value: datum.oracle_growth(&grid, &tg)?,
            })
        })
        .collect()
}
