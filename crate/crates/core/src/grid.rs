//! Periodic-box spectral discretization: grids, grid functions, the discrete
//! Fourier transform pair in the symmetric `(2pi)^{-n/2}` convention, the free
//! Schrodinger propagator, and Fourier multiplier weights.
//!
//! The real line (or plane, or 3-space) is truncated to the box
//! `[-L/2, L/2)^n` with `N` nodes per dimension. The frequency lattice is
//! `{2 pi m / L : m in [-N/2, N/2)}^n` in symmetric ordering; the Nyquist mode
//! sits on the negative side so that `|xi|^2` multipliers are unambiguous.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Mutex;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.5066282746310002;

/// Which representation a [`GridFunction`] currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Frequency,
}

impl Space {
    pub fn as_str(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Frequency => "frequency",
        }
    }
}

/// Truncated periodic discretization of R^n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    dim: usize,
    extent: f64,
    points_per_dim: usize,
}

impl SpectralGrid {
    pub fn new(dim: usize, extent: f64, points_per_dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Validation(format!("extent must be positive, got {extent}")));
        }
        if points_per_dim < 8 || !points_per_dim.is_power_of_two() {
            return Err(Error::Validation(format!(
                "points_per_dim must be a power of two >= 8, got {points_per_dim}"
            )));
        }
        Ok(Self { dim, extent, points_per_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn node_count(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    /// Physical-space node spacing `L / N`.
    pub fn dx(&self) -> f64 {
        self.extent / self.points_per_dim as f64
    }

    /// Frequency lattice spacing `2 pi / L`.
    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / self.extent
    }

    /// Largest representable frequency magnitude `pi N / L`.
    pub fn xi_max(&self) -> f64 {
        PI * self.points_per_dim as f64 / self.extent
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn freq_cell_volume(&self) -> f64 {
        self.freq_spacing().powi(self.dim as i32)
    }

    /// Decompose a flat index into per-axis indices (row-major, unused axes 0).
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let n = self.points_per_dim;
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = flat % n;
            flat /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let n = self.points_per_dim;
        multi.iter().take(self.dim).fold(0, |acc, &m| acc * n + m)
    }

    /// Signed mode number for an axis index, Nyquist on the negative side.
    fn signed_mode(&self, m: usize) -> i64 {
        let n = self.points_per_dim as i64;
        let m = m as i64;
        if m < n / 2 { m } else { m - n }
    }

    /// Physical coordinates of a node (unused axes 0).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let multi = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = -self.extent / 2.0 + multi[axis] as f64 * self.dx();
        }
        x
    }

    /// Frequency coordinates of a node (unused axes 0).
    pub fn frequency(&self, flat: usize) -> [f64; 3] {
        let multi = self.multi_index(flat);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = self.signed_mode(multi[axis]) as f64 * self.freq_spacing();
        }
        xi
    }

    /// `|xi|^2` at a node.
    pub fn freq_norm_sq(&self, flat: usize) -> f64 {
        let xi = self.frequency(flat);
        xi.iter().map(|v| v * v).sum()
    }

    /// Parity of the multi-index, used for the centered-box phase alternation.
    fn parity(&self, flat: usize) -> bool {
        let multi = self.multi_index(flat);
        multi.iter().take(self.dim).sum::<usize>() % 2 == 1
    }
}

/// Complex samples on a [`SpectralGrid`], tagged with their representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpectralGrid,
    values: Vec<Complex64>,
    space: Space,
}

static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);

fn plan(len: usize, forward: bool) -> std::sync::Arc<dyn Fft<f64>> {
    let mut guard = PLANNER.lock().unwrap();
    let planner = guard.get_or_insert_with(FftPlanner::new);
    if forward {
        planner.plan_fft_forward(len)
    } else {
        planner.plan_fft_inverse(len)
    }
}

/// Unnormalized DFT along every axis of a row-major `N^dim` array.
fn fft_nd(grid: &SpectralGrid, values: &mut [Complex64], forward: bool) {
    let n = grid.points_per_dim;
    let fft = plan(n, forward);
    let dim = grid.dim;
    let total = values.len();
    let mut scratch = vec![Complex64::default(); n];
    for axis in 0..dim {
        // stride between consecutive elements along `axis`
        let stride = n.pow((dim - 1 - axis) as u32);
        let lanes = total / n;
        for lane in 0..lanes {
            // base offset of this lane
            let block = lane / stride;
            let offset = lane % stride;
            let base = block * stride * n + offset;
            if stride == 1 {
                fft.process(&mut values[base..base + n]);
            } else {
                for i in 0..n {
                    scratch[i] = values[base + i * stride];
                }
                fft.process(&mut scratch);
                for i in 0..n {
                    values[base + i * stride] = scratch[i];
                }
            }
        }
    }
}

impl GridFunction {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>, space: Space) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Validation(format!(
                "value length {} does not match grid node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values, space })
    }

    pub fn zeros(grid: SpectralGrid, space: Space) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![Complex64::default(); n], space }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn space(&self) -> Space {
        self.space
    }

    fn require_space(&self, expected: Space) -> Result<()> {
        if self.space != expected {
            return Err(Error::SpaceTag {
                expected: expected.as_str(),
                found: self.space.as_str(),
            });
        }
        Ok(())
    }

    /// Discrete realization of `f_hat(xi) = (2pi)^{-n/2} int e^{-ix.xi} f(x) dx`
    /// by trapezoid quadrature on the box.
    pub fn forward_transform(&self) -> Result<GridFunction> {
        self.require_space(Space::Physical)?;
        let mut values = self.values.clone();
        fft_nd(&self.grid, &mut values, true);
        let scale = (self.grid.dx() / SQRT_2PI).powi(self.grid.dim as i32);
        for (flat, v) in values.iter_mut().enumerate() {
            let sign = if self.grid.parity(flat) { -scale } else { scale };
            *v *= sign;
        }
        Ok(GridFunction { grid: self.grid, values, space: Space::Frequency })
    }

    /// Discrete realization of the inverse transform
    /// `(2pi)^{-n/2} int e^{ix.xi} f_hat(xi) dxi`.
    pub fn inverse_transform(&self) -> Result<GridFunction> {
        self.require_space(Space::Frequency)?;
        let mut values = self.values.clone();
        for (flat, v) in values.iter_mut().enumerate() {
            if self.grid.parity(flat) {
                *v = -*v;
            }
        }
        fft_nd(&self.grid, &mut values, false);
        let scale = (self.grid.freq_spacing() / SQRT_2PI).powi(self.grid.dim as i32);
        for v in values.iter_mut() {
            *v *= scale;
        }
        Ok(GridFunction { grid: self.grid, values, space: Space::Physical })
    }

    /// Frequency-space view of the data, transforming if needed.
    pub fn to_frequency(&self) -> Result<GridFunction> {
        match self.space {
            Space::Frequency => Ok(self.clone()),
            Space::Physical => self.forward_transform(),
        }
    }

    /// Physical-space view of the data, transforming if needed.
    pub fn to_physical(&self) -> Result<GridFunction> {
        match self.space {
            Space::Physical => Ok(self.clone()),
            Space::Frequency => self.inverse_transform(),
        }
    }

    /// Free Schrodinger flow: multiply frequency samples by `e^{-it|xi|^2}`
    /// and return physical-space samples.
    pub fn propagate(&self, t: f64) -> Result<GridFunction> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("propagation time must be finite, got {t}")));
        }
        let mut hat = self.to_frequency()?;
        for (flat, v) in hat.values.iter_mut().enumerate() {
            let phase = -t * hat.grid.freq_norm_sq(flat);
            *v *= Complex64::from_polar(1.0, phase);
        }
        hat.inverse_transform()
    }

    /// Fourier multiplier `|xi|^alpha`, returned in the input's representation.
    pub fn fractional_derivative(&self, alpha: f64) -> Result<GridFunction> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "fractional derivative order must be >= 0, got {alpha}"
            )));
        }
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        let mut hat = self.to_frequency()?;
        for (flat, v) in hat.values.iter_mut().enumerate() {
            let m = hat.grid.freq_norm_sq(flat).sqrt();
            *v *= m.powf(alpha);
        }
        match self.space {
            Space::Frequency => Ok(hat),
            Space::Physical => hat.inverse_transform(),
        }
    }

    /// Japanese-bracket weight `(1+|xi|^2)^{s/2}` on frequency samples.
    pub fn bracket_weight(&self, s: f64) -> Result<GridFunction> {
        self.require_space(Space::Frequency)?;
        let mut out = self.clone();
        for (flat, v) in out.values.iter_mut().enumerate() {
            *v *= (1.0 + out.grid.freq_norm_sq(flat)).powf(s / 2.0);
        }
        Ok(out)
    }

    /// Cell-weighted discrete L^2 norm in the current representation.
    pub fn l2_norm(&self) -> f64 {
        let vol = match self.space {
            Space::Physical => self.grid.cell_volume(),
            Space::Frequency => self.grid.freq_cell_volume(),
        };
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * vol).sqrt()
    }

    /// Relative L^2 distance to `other` (same grid and space required).
    pub fn relative_l2_error(&self, other: &GridFunction) -> f64 {
        let diff: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let norm: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        if norm == 0.0 {
            diff.sqrt()
        } else {
            (diff / norm).sqrt()
        }
    }

    /// Pointwise linear combination `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid || self.space != other.space {
            return Err(Error::InvalidInput(
                "grid functions must share grid and representation".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(GridFunction { grid: self.grid, values, space: self.space })
    }

    /// Map values pointwise, keeping grid and tag.
    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> GridFunction {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        GridFunction { grid: self.grid, values, space: self.space }
    }
}

/// Closed-form data samplable onto a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticSignal {
    /// `exp(-|x-center|^2 / (2 width^2)) e^{i x.modulation}`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        modulation: Vec<f64>,
    },
    /// `e^{i x.mode}` for a mode on the frequency lattice.
    PlaneWave { mode: Vec<f64> },
    /// Frequency indicator `2^{-k sigma}` on the shell `2^k <= |xi| <= 2^{k+1}`.
    DyadicAnnulus { k: u32, amplitude_exponent: f64 },
}

impl AnalyticSignal {
    /// Sample the signal onto `grid` in its natural representation:
    /// the annulus in frequency space, the others in physical space.
    pub fn materialize(&self, grid: &SpectralGrid) -> Result<GridFunction> {
        match self {
            AnalyticSignal::Gaussian { center, width, modulation } => {
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
                if center.len() != grid.dim() || modulation.len() != grid.dim() {
                    return Err(Error::InvalidInput(format!(
                        "gaussian center/modulation must have dim {}",
                        grid.dim()
                    )));
                }
                let values = (0..grid.node_count())
                    .map(|flat| {
                        let x = grid.position(flat);
                        let mut r2 = 0.0;
                        let mut phase = 0.0;
                        for axis in 0..grid.dim() {
                            let d = x[axis] - center[axis];
                            r2 += d * d;
                            phase += x[axis] * modulation[axis];
                        }
                        Complex64::from_polar((-r2 / (2.0 * width * width)).exp(), phase)
                    })
                    .collect();
                GridFunction::new(*grid, values, Space::Physical)
            }
            AnalyticSignal::PlaneWave { mode } => {
                if mode.len() != grid.dim() {
                    return Err(Error::InvalidInput(format!(
                        "plane wave mode must have dim {}",
                        grid.dim()
                    )));
                }
                let dxi = grid.freq_spacing();
                let half = grid.points_per_dim() as i64 / 2;
                for &m in mode {
                    let ratio = m / dxi;
                    if (ratio - ratio.round()).abs() > 1e-9 {
                        return Err(Error::Resolution(format!(
                            "plane wave mode {m} is not on the frequency lattice (spacing {dxi})"
                        )));
                    }
                    let idx = ratio.round() as i64;
                    if idx < -half || idx >= half {
                        return Err(Error::Resolution(format!(
                            "plane wave mode {m} exceeds the representable range"
                        )));
                    }
                }
                let values = (0..grid.node_count())
                    .map(|flat| {
                        let x = grid.position(flat);
                        let phase: f64 =
                            (0..grid.dim()).map(|axis| x[axis] * mode[axis]).sum();
                        Complex64::from_polar(1.0, phase)
                    })
                    .collect();
                GridFunction::new(*grid, values, Space::Physical)
            }
            AnalyticSignal::DyadicAnnulus { k, amplitude_exponent } => {
                let inner = (2.0f64).powi(*k as i32);
                let outer = 2.0 * inner;
                if outer >= grid.xi_max() {
                    return Err(Error::Resolution(format!(
                        "annulus outer radius {outer} exceeds xi_max {}",
                        grid.xi_max()
                    )));
                }
                let amp = (2.0f64).powf(-(*k as f64) * amplitude_exponent);
                let values = (0..grid.node_count())
                    .map(|flat| {
                        let m = grid.freq_norm_sq(flat).sqrt();
                        if m >= inner && m <= outer {
                            Complex64::new(amp, 0.0)
                        } else {
                            Complex64::default()
                        }
                    })
                    .collect();
                GridFunction::new(*grid, values, Space::Frequency)
            }
        }
    }
}

/// Closed-form free evolution of the 1D standard Gaussian `e^{-x^2/2}`:
/// `u(x,t) = (1+2it)^{-1/2} exp(-x^2 / (2(1+2it)))`.
///
/// Independent of the FFT path; used as the propagation oracle.
pub fn gaussian_free_evolution(x: f64, t: f64) -> Complex64 {
    let a = Complex64::new(1.0, 2.0 * t);
    a.sqrt().inv() * (-Complex64::new(x * x, 0.0) / (2.0 * a)).exp()
}

/// Periodic-box counterpart of [`gaussian_free_evolution`] by the method of
/// images: the box solution is the lattice sum of whole-line solutions, and
/// two image boxes per side already reach machine precision for moderate `t`.
pub fn gaussian_free_evolution_periodic(x: f64, t: f64, extent: f64) -> Complex64 {
    (-2..=2).map(|m| gaussian_free_evolution(x + m as f64 * extent, t)).sum()
}

#[derive(Serialize, Deserialize)]
struct GridFunctionHeader {
    dim: usize,
    #[serde(rename = "L")]
    extent: f64,
    #[serde(rename = "N")]
    points_per_dim: usize,
    space_tag: Space,
}

/// Write `<base>.header.json` plus `<base>.csv` with (index, re, im) records.
pub fn save_grid_function(f: &GridFunction, dir: &Path, base: &str) -> Result<()> {
    let header = GridFunctionHeader {
        dim: f.grid().dim(),
        extent: f.grid().extent(),
        points_per_dim: f.grid().points_per_dim(),
        space_tag: f.space(),
    };
    let header_json = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(dir.join(format!("{base}.header.json")), header_json)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{base}.csv")))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    w.write_record(["index", "re", "im"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (i, v) in f.values().iter().enumerate() {
        w.write_record([i.to_string(), format!("{:?}", v.re), format!("{:?}", v.im)])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a grid function written by [`save_grid_function`].
pub fn load_grid_function(dir: &Path, base: &str) -> Result<GridFunction> {
    let header_text = std::fs::read_to_string(dir.join(format!("{base}.header.json")))?;
    let header: GridFunctionHeader = serde_json::from_str(&header_text)
        .map_err(|e| Error::Validation(format!("bad grid function header: {e}")))?;
    let grid = SpectralGrid::new(header.dim, header.extent, header.points_per_dim)?;
    let mut values = vec![Complex64::default(); grid.node_count()];
    let mut r = csv::Reader::from_path(dir.join(format!("{base}.csv")))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for record in r.records() {
        let record = record.map_err(|e| Error::Validation(format!("bad csv record: {e}")))?;
        let idx: usize = record[0]
            .parse()
            .map_err(|e| Error::Validation(format!("bad index: {e}")))?;
        if idx >= values.len() {
            return Err(Error::Validation(format!("index {idx} out of range")));
        }
        let re: f64 = record[1]
            .parse()
            .map_err(|e| Error::Validation(format!("bad value: {e}")))?;
        let im: f64 = record[2]
            .parse()
            .map_err(|e| Error::Validation(format!("bad value: {e}")))?;
        values[idx] = Complex64::new(re, im);
    }
    GridFunction::new(grid, values, header.space_tag)
}
