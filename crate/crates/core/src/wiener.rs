//! Wiener decomposition of frequency space: the lattice partition of unity,
//! unit-cube frequency projections, randomized data, square functions, and
//! Khintchine-type moment estimators.
//!
//! The bump `psi` is a tensor product of a 1D profile supported in `[-1, 1]`
//! whose integer translates sum to one, so the translates `psi(. - k)`,
//! `k` in `Z^n`, tile frequency space by unit cubes.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Space};
use crate::rng;

/// 1D profile underlying the tensor-product bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `cos^2(pi x / 2)` on `[-1, 1]`; translates sum to 1 by the
    /// Pythagorean identity, exactly.
    RaisedCosine,
    /// Order-2 (linear hat) B-spline `max(0, 1 - |x|)`.
    Bspline2,
}

impl Profile {
    fn eta(self, x: f64) -> f64 {
        let a = x.abs();
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::RaisedCosine => {
                let c = (std::f64::consts::FRAC_PI_2 * x).cos();
                c * c
            }
            Profile::Bspline2 => 1.0 - a,
        }
    }
}

/// Tensor-product lattice partition of unity on frequency space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpPartition {
    dim: usize,
    profile: Profile,
}

/// Build the partition for dimension `dim` (1..=3).
pub fn build_partition(dim: usize, profile: Profile) -> Result<BumpPartition> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("partition dim must be 1, 2 or 3, got {dim}")));
    }
    Ok(BumpPartition { dim, profile })
}

impl BumpPartition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// `psi(xi) = prod_i eta(xi_i)`; supported in the unit cube `[-1,1]^n`.
    pub fn psi(&self, xi: &[f64]) -> f64 {
        xi.iter().take(self.dim).map(|&x| self.profile.eta(x)).product()
    }

    /// `psi(xi - k)` for a lattice point `k`.
    pub fn psi_shifted(&self, xi: &[f64], k: &[i64]) -> f64 {
        (0..self.dim).map(|a| self.profile.eta(xi[a] - k[a] as f64)).product()
    }
}

/// Coefficient law for the randomization; both satisfy the sub-Gaussian
/// moment-generating bound `E e^{gamma X} <= e^{gamma^2 / 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomLaw {
    Gaussian,
    Rademacher,
}

impl RandomLaw {
    /// The coefficient `g_k` for draw `draw_index` under `seed`; a pure
    /// function of its arguments (counter-based stream).
    pub fn coefficient(self, seed: u64, draw_index: u64, k: &[i64]) -> f64 {
        match self {
            RandomLaw::Gaussian => rng::gaussian(seed, draw_index, k),
            RandomLaw::Rademacher => rng::rademacher(seed, draw_index, k),
        }
    }
}

/// Which lattice coefficients exist, under which law and seed, relative to
/// which partition of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationPlan {
    pub law: RandomLaw,
    pub seed: u64,
    pub partition: BumpPartition,
    pub active_set: BTreeSet<Vec<i64>>,
}

/// Serializable summary of a plan (samples are reproduced from `(seed,
/// draw_index)`, so only the bounds of the active set are recorded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub law: RandomLaw,
    pub seed: u64,
    pub active_set_bounds: Vec<(i64, i64)>,
    pub active_set_len: usize,
}

impl RandomizationPlan {
    /// Plan whose active set covers the numerical frequency support of `f`.
    pub fn covering(
        f: &GridFunction,
        part: &BumpPartition,
        law: RandomLaw,
        seed: u64,
    ) -> Result<Self> {
        let active_set = default_active_set(f, part)?;
        Ok(Self { law, seed, partition: *part, active_set })
    }

    pub fn summary(&self) -> PlanSummary {
        let dim = self.active_set.iter().next().map_or(0, |k| k.len());
        let mut bounds = vec![(i64::MAX, i64::MIN); dim];
        for k in &self.active_set {
            for (a, &c) in k.iter().enumerate() {
                bounds[a].0 = bounds[a].0.min(c);
                bounds[a].1 = bounds[a].1.max(c);
            }
        }
        PlanSummary {
            law: self.law,
            seed: self.seed,
            active_set_bounds: bounds,
            active_set_len: self.active_set.len(),
        }
    }

    /// Coefficient map for one draw, in deterministic lattice order.
    pub fn coefficients(&self, draw_index: u64) -> Vec<(Vec<i64>, f64)> {
        self.active_set
            .iter()
            .map(|k| (k.clone(), self.law.coefficient(self.seed, draw_index, k)))
            .collect()
    }
}

/// Relative mass threshold below which a frequency node does not count as
/// support when building default active sets.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Lattice points whose unit cube touches the numerical frequency support
/// of `f` (mass threshold 1e-14 relative to the peak).
pub fn default_active_set(
    f: &GridFunction,
    part: &BumpPartition,
) -> Result<BTreeSet<Vec<i64>>> {
    if part.dim() != f.grid().dim() {
        return Err(Error::InvalidInput("partition dim does not match grid dim".into()));
    }
    let hat = f.to_frequency()?;
    let peak = hat.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut set = BTreeSet::new();
    if peak == 0.0 {
        return Ok(set);
    }
    let dim = part.dim();
    for (i, v) in hat.values().iter().enumerate() {
        if v.norm() <= SUPPORT_THRESHOLD * peak {
            continue;
        }
        let xi = hat.grid().frequency(i);
        let mut k = vec![0i64; dim];
        cube_neighbors(&xi, dim, &mut k, 0, &mut set);
    }
    Ok(set)
}

fn cube_neighbors(xi: &[f64; 3], dim: usize, k: &mut Vec<i64>, axis: usize, out: &mut BTreeSet<Vec<i64>>) {
    if axis == dim {
        out.insert(k.clone());
        return;
    }
    let lo = (xi[axis] - 1.0).ceil() as i64;
    let hi = (xi[axis] + 1.0).floor() as i64;
    for c in lo..=hi {
        k[axis] = c;
        cube_neighbors(xi, dim, k, axis + 1, out);
    }
}

/// Unit-cube frequency projection `psi(D - k) f`, returned in the input's
/// representation.
pub fn project(f: &GridFunction, k: &[i64], part: &BumpPartition) -> Result<GridFunction> {
    if k.len() != f.grid().dim() || part.dim() != f.grid().dim() {
        return Err(Error::InvalidInput("lattice point dim does not match grid".into()));
    }
    let xi_max = f.grid().xi_max();
    if k.iter().any(|&c| (c.abs() as f64) - 1.0 >= xi_max) {
        return Err(Error::InvalidInput(format!(
            "lattice point {k:?} lies outside the representable frequency range"
        )));
    }
    let hat = f.to_frequency()?;
    let projected = hat.map(|i, v| {
        let xi = hat.grid().frequency(i);
        v * part.psi_shifted(&xi, k)
    });
    match f.space() {
        Space::Frequency => Ok(projected),
        Space::Physical => projected.inverse_transform(),
    }
}

/// The randomized data `f^omega` for one draw: frequency samples
/// `sum_k g_k(omega) psi(xi - k) f_hat(xi)`, returned in frequency space.
pub fn randomize(
    f: &GridFunction,
    plan: &RandomizationPlan,
    draw_index: u64,
) -> Result<GridFunction> {
    let part = plan.partition;
    if part.dim() != f.grid().dim() {
        return Err(Error::InvalidInput("plan partition dim does not match grid".into()));
    }
    let required = default_active_set(f, &part)?;
    if !required.is_subset(&plan.active_set) {
        return Err(Error::Coverage(
            "randomization plan's active set does not cover the data's frequency support".into(),
        ));
    }
    let coeffs: HashMap<&[i64], f64> = plan
        .active_set
        .iter()
        .map(|k| (k.as_slice(), plan.law.coefficient(plan.seed, draw_index, k)))
        .collect();
    randomize_with(f, &part, |k| coeffs.get(k).copied().unwrap_or(0.0))
}

/// Randomization with explicit coefficients (the deterministic core of
/// [`randomize`]; also used to force all-ones or all-zeros coefficients).
pub fn randomize_with(
    f: &GridFunction,
    part: &BumpPartition,
    coefficient: impl Fn(&[i64]) -> f64,
) -> Result<GridFunction> {
    let hat = f.to_frequency()?;
    let dim = hat.grid().dim();
    let out = hat.map(|i, v| {
        if v.norm() == 0.0 {
            return v;
        }
        let xi = hat.grid().frequency(i);
        let mut ks = BTreeSet::new();
        let mut k = vec![0i64; dim];
        cube_neighbors(&xi, dim, &mut k, 0, &mut ks);
        let factor: f64 = ks
            .iter()
            .map(|k| part.psi_shifted(&xi, k) * coefficient(k))
            .sum();
        v * factor
    });
    Ok(out)
}

/// Pointwise square function `[ sum_k |psi(D-k) f|^2 ]^{1/2}` in physical
/// space, the lattice aggregate controlled by the `L-hat^r` norm.
pub fn square_function(f: &GridFunction, part: &BumpPartition) -> Result<GridFunction> {
    let hat = f.to_frequency()?;
    let ks = default_active_set(&hat, part)?;
    let mut acc = vec![0.0f64; hat.grid().node_count()];
    for k in &ks {
        let piece = project(&hat, k, part)?.inverse_transform()?;
        for (a, v) in acc.iter_mut().zip(piece.values()) {
            *a += v.norm_sqr();
        }
    }
    GridFunction::new(
        *hat.grid(),
        acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect(),
        Space::Physical,
    )
}

/// Monte Carlo estimate of `|| sum_k g_k c_k ||_{L^p_omega}`.
///
/// Draws are counter-based, so the estimate is bitwise reproducible at any
/// thread count.
pub fn khintchine_moment(
    coefficients: &[(Vec<i64>, Complex64)],
    law: RandomLaw,
    p: f64,
    num_draws: u64,
    seed: u64,
) -> Result<f64> {
    if coefficients.is_empty() {
        return Err(Error::InvalidInput("coefficient set must be nonempty".into()));
    }
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::InvalidInput(format!("moment order must satisfy p >= 2, got {p}")));
    }
    if num_draws < 1000 {
        return Err(Error::InvalidInput(format!(
            "at least 1000 draws required, got {num_draws}"
        )));
    }
    let samples: Vec<f64> = (0..num_draws)
        .into_par_iter()
        .map(|draw| {
            let s: Complex64 = coefficients
                .iter()
                .map(|(k, c)| c * law.coefficient(seed, draw, k))
                .sum();
            s.norm().powf(p)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / num_draws as f64;
    Ok(mean.powf(1.0 / p))
}

/// `ell^2` norm of a coefficient set.
pub fn coefficient_l2(coefficients: &[(Vec<i64>, Complex64)]) -> f64 {
    coefficients.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use approx::assert_relative_eq;

    fn grid1d(extent: f64, n: usize) -> SpectralGrid {
        SpectralGrid::new(1, extent, n).unwrap()
    }

    fn band_limited(grid: &SpectralGrid, band: f64, seed: u64) -> GridFunction {
        let values = (0..grid.node_count())
            .map(|i| {
                if grid.freq_norm_sq(i).sqrt() <= band {
                    Complex64::new(
                        rng::gaussian(seed, i as u64, &[0]),
                        rng::gaussian(seed, i as u64, &[1]),
                    )
                } else {
                    Complex64::default()
                }
            })
            .collect();
        GridFunction::new(*grid, values, Space::Frequency).unwrap()
    }

    #[test]
    fn partition_translates_sum_to_one() {
        for profile in [Profile::RaisedCosine, Profile::Bspline2] {
            let part = build_partition(1, profile).unwrap();
            for i in 0..4096 {
                let xi = -10.0 + 20.0 * i as f64 / 4096.0;
                let sum: f64 = (-12..=12).map(|k| part.psi_shifted(&[xi], &[k])).sum();
                assert!((sum - 1.0).abs() < 1e-12, "{profile:?} at {xi}: {sum}");
            }
        }
        assert!(build_partition(4, Profile::RaisedCosine).is_err());
    }

    #[test]
    fn partition_sums_to_one_on_2d_lattice() {
        let part = build_partition(2, Profile::RaisedCosine).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let xi = [-4.0 + 8.0 * i as f64 / 64.0, -4.0 + 8.0 * j as f64 / 64.0];
                let mut sum = 0.0;
                for ka in -6..=6i64 {
                    for kb in -6..=6i64 {
                        sum += part.psi_shifted(&xi, &[ka, kb]);
                    }
                }
                assert!((sum - 1.0).abs() < 1e-12, "({xi:?}): {sum}");
            }
        }
    }

    #[test]
    fn projection_support_locality() {
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 6.0, 2);
        let pk = project(&f, &[3], &part).unwrap();
        for (i, v) in pk.values().iter().enumerate() {
            let xi = grid.frequency(i)[0];
            if !(2.0..=4.0).contains(&xi) {
                assert!(v.norm() < 1e-12, "mass at xi={xi}");
            }
        }
    }

    #[test]
    fn projection_reconstruction() {
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 6.0, 3);
        let ks = default_active_set(&f, &part).unwrap();
        let mut sum = GridFunction::zeros(grid, Space::Frequency);
        for k in &ks {
            sum = sum.axpy(Complex64::new(1.0, 0.0), &project(&f, k, &part).unwrap()).unwrap();
        }
        assert!(sum.relative_l2_error(&f) < 1e-10);
    }

    #[test]
    fn projection_identity_inside_flat_cube() {
        // raised cosine is identically 1 only at the cube center, so use data
        // concentrated at an exact lattice frequency
        let grid = grid1d(2.0 * std::f64::consts::PI, 64); // dxi = 1
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let mut hat = GridFunction::zeros(grid, Space::Frequency);
        let idx = (0..64).find(|&i| (grid.frequency(i)[0] - 3.0).abs() < 1e-12).unwrap();
        hat = hat.map(|i, v| if i == idx { Complex64::new(1.0, 0.0) } else { v });
        let pk = project(&hat, &[3], &part).unwrap();
        assert!(pk.relative_l2_error(&hat) < 1e-12);
        let other = project(&hat, &[4], &part).unwrap();
        assert!(other.values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn projection_out_of_range() {
        let grid = grid1d(8.0, 32); // xi_max ~ 12.5
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 3.0, 5);
        assert!(project(&f, &[40], &part).is_err());
    }

    #[test]
    fn unit_scale_bernstein_constant_is_k_independent() {
        let grid = grid1d(32.0, 1024);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 8.5, 8).inverse_transform().unwrap();
        // || P_k f ||_inf <= pi^{-1/2} || P_k f ||_2 for cube-supported spectrum,
        // and interpolation gives || P_k f ||_4 / || P_k f ||_2 <= sqrt of that
        let bound_inf = std::f64::consts::PI.powf(-0.5) + 0.05;
        let bound_4 = bound_inf.sqrt();
        for k in -8..=8i64 {
            let pk = project(&f, &[k], &part).unwrap();
            let l2 = crate::norms::lebesgue_norm(&pk, 2.0, &crate::norms::Region::Full).unwrap();
            if l2 < 1e-10 {
                continue;
            }
            let l4 = crate::norms::lebesgue_norm(&pk, 4.0, &crate::norms::Region::Full).unwrap();
            let linf =
                crate::norms::lebesgue_norm(&pk, f64::INFINITY, &crate::norms::Region::Full)
                    .unwrap();
            assert!(linf / l2 <= bound_inf, "k={k}: {}", linf / l2);
            assert!(l4 / l2 <= bound_4, "k={k}: {}", l4 / l2);
        }
    }

    #[test]
    fn randomize_with_unit_coefficients_is_identity() {
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 6.0, 11);
        let same = randomize_with(&f, &part, |_| 1.0).unwrap();
        assert!(same.relative_l2_error(&f) < 1e-10);
        let zero = randomize_with(&f, &part, |_| 0.0).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn randomize_is_deterministic_and_checks_coverage() {
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 6.0, 13);
        let plan = RandomizationPlan::covering(&f, &part, RandomLaw::Gaussian, 99).unwrap();
        let a = randomize(&f, &plan, 5).unwrap();
        let b = randomize(&f, &plan, 5).unwrap();
        assert_eq!(a.values(), b.values());
        let c = randomize(&f, &plan, 6).unwrap();
        assert!(a.relative_l2_error(&c) > 1e-3);

        let small_plan = RandomizationPlan {
            law: RandomLaw::Gaussian,
            seed: 99,
            partition: part,
            active_set: [vec![0i64]].into_iter().collect(),
        };
        assert!(matches!(randomize(&f, &small_plan, 0), Err(Error::Coverage(_))));
    }

    #[test]
    fn randomized_second_moment_matches_expectation() {
        let grid = grid1d(32.0, 256);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 4.0, 17);
        let plan = RandomizationPlan::covering(&f, &part, RandomLaw::Gaussian, 7).unwrap();
        let draws = 10_000u64;
        let probes: Vec<usize> = (0..10)
            .map(|i| {
                (0..grid.node_count())
                    .filter(|&j| f.values()[j].norm() > 0.1)
                    .nth(i * 3)
                    .unwrap()
            })
            .collect();
        let mut mean_sq = vec![0.0f64; probes.len()];
        let mut mean = vec![Complex64::default(); probes.len()];
        for d in 0..draws {
            let fw = randomize(&f, &plan, d).unwrap();
            for (slot, &j) in probes.iter().enumerate() {
                mean_sq[slot] += fw.values()[j].norm_sqr();
                mean[slot] += fw.values()[j];
            }
        }
        let peak = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (slot, &j) in probes.iter().enumerate() {
            let xi = grid.frequency(j);
            let psi_sq: f64 = (-8..=8)
                .map(|k| part.psi_shifted(&xi, &[k]).powi(2))
                .sum();
            let expected = f.values()[j].norm_sqr() * psi_sq;
            let got = mean_sq[slot] / draws as f64;
            assert!(
                (got - expected).abs() <= 0.05 * expected,
                "probe {j}: expected {expected}, got {got}"
            );
            // zero-mean law: empirical mean vanishes at Monte Carlo scale
            let m = (mean[slot] / draws as f64).norm();
            assert!(m <= 3.0 / (draws as f64).sqrt() * peak, "mean {m} at probe {j}");
        }
    }

    #[test]
    fn square_function_flat_cube_case() {
        let grid = grid1d(2.0 * std::f64::consts::PI, 128);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let mut hat = GridFunction::zeros(grid, Space::Frequency);
        let idx = (0..128).find(|&i| (grid.frequency(i)[0] - 5.0).abs() < 1e-12).unwrap();
        hat = hat.map(|i, v| if i == idx { Complex64::new(2.0, 0.0) } else { v });
        let sq = square_function(&hat, &part).unwrap();
        let f = hat.inverse_transform().unwrap();
        for (a, b) in sq.values().iter().zip(f.values()) {
            assert!((a.re - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn square_function_bounded_by_fourier_lebesgue_norm() {
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        for r in [2.0, 4.0] {
            let spec = crate::norms::NormSpec::new(0.0, r).unwrap();
            let mut ratios = Vec::new();
            for seed in 0..8u64 {
                let f = band_limited(&grid, 6.0, 600 + seed);
                let sq = square_function(&f, &part).unwrap();
                let sup = sq.values().iter().map(|v| v.re).fold(0.0, f64::max);
                let norm = crate::norms::fourier_lebesgue_norm(&f, &spec).unwrap();
                ratios.push(sup / norm);
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max.is_finite());
            assert!(max <= 2.0 * min, "r={r}: unstable ratios {ratios:?}");
        }
    }

    #[test]
    fn square_function_commutes_with_propagator_in_mass() {
        // the propagated variant has identical frequency-side mass because
        // |e^{-it|xi|^2}| = 1
        let grid = grid1d(32.0, 512);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 6.0, 21);
        let ut = f.propagate(0.3).unwrap();
        let a = square_function(&f, &part).unwrap();
        let b = square_function(&ut, &part).unwrap();
        assert_relative_eq!(a.l2_norm(), b.l2_norm(), max_relative = 1e-10);
    }

    #[test]
    fn khintchine_p2_recovers_l2_norm() {
        let c: Vec<(Vec<i64>, Complex64)> = (0..16)
            .map(|k| {
                (vec![k], Complex64::new(rng::gaussian(5, k as u64, &[2]), 0.3 * k as f64))
            })
            .collect();
        let l2 = coefficient_l2(&c);
        let draws = 40_000;
        let m = khintchine_moment(&c, RandomLaw::Gaussian, 2.0, draws, 1).unwrap();
        // sampling error of the second moment is ~ sqrt(2/n) relative
        let tol = 3.0 * (2.0 / draws as f64).sqrt();
        assert!((m - l2).abs() <= tol * l2, "{m} vs {l2}");
    }

    #[test]
    fn khintchine_single_gaussian_fourth_moment() {
        let c = vec![(vec![0i64], Complex64::new(1.0, 0.0))];
        let m = khintchine_moment(&c, RandomLaw::Gaussian, 4.0, 200_000, 3).unwrap();
        // (E g^4)^{1/4} = 3^{1/4}
        assert!((m - 3f64.powf(0.25)).abs() < 0.02, "{m}");
    }

    #[test]
    fn khintchine_rademacher_matches_enumeration() {
        let c: Vec<(Vec<i64>, Complex64)> = (0..10)
            .map(|k| (vec![k], Complex64::new(1.0 / (k as f64 + 1.0), 0.1 * k as f64)))
            .collect();
        for p in [2.0, 4.0, 8.0, 16.0] {
            // exact moment by exhaustive enumeration of all sign patterns
            let n = c.len();
            let mut acc = 0.0;
            for mask in 0u32..(1 << n) {
                let s: Complex64 = c
                    .iter()
                    .enumerate()
                    .map(|(i, (_, v))| if mask >> i & 1 == 0 { *v } else { -*v })
                    .sum();
                acc += s.norm().powf(p);
            }
            let exact = (acc / (1 << n) as f64).powf(1.0 / p);
            let mc = khintchine_moment(&c, RandomLaw::Rademacher, p, 100_000, 4).unwrap();
            assert!((mc - exact).abs() < 0.05 * exact, "p={p}: {mc} vs {exact}");
            let ratio = exact / (p.sqrt() * coefficient_l2(&c));
            assert!(ratio < 1.2, "p={p}: ratio {ratio}");
        }
    }

    #[test]
    fn khintchine_moment_growth_bounded() {
        let c: Vec<(Vec<i64>, Complex64)> =
            (0..12).map(|k| (vec![k], Complex64::new(1.0, -0.5))).collect();
        let l2 = coefficient_l2(&c);
        for p in [2.0, 4.0, 8.0, 16.0, 32.0] {
            let m = khintchine_moment(&c, RandomLaw::Gaussian, p, 20_000, 9).unwrap();
            assert!(m / (p.sqrt() * l2) <= 1.2, "p={p}: {}", m / (p.sqrt() * l2));
        }
    }

    #[test]
    fn khintchine_input_validation() {
        let c = vec![(vec![0i64], Complex64::new(1.0, 0.0))];
        assert!(khintchine_moment(&[], RandomLaw::Gaussian, 2.0, 1000, 0).is_err());
        assert!(khintchine_moment(&c, RandomLaw::Gaussian, 1.0, 1000, 0).is_err());
        assert!(khintchine_moment(&c, RandomLaw::Gaussian, 2.0, 10, 0).is_err());
    }

    #[test]
    fn plan_summary_reports_bounds() {
        let grid = grid1d(32.0, 256);
        let part = build_partition(1, Profile::RaisedCosine).unwrap();
        let f = band_limited(&grid, 4.0, 1);
        let plan = RandomizationPlan::covering(&f, &part, RandomLaw::Rademacher, 3).unwrap();
        let s = plan.summary();
        assert_eq!(s.active_set_bounds.len(), 1);
        assert!(s.active_set_bounds[0].0 <= -4 && s.active_set_bounds[0].1 >= 4);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("rademacher"));
    }
}
