//! Random point initialization: seeded dense and sparse random fields,
//! k-step evolution per run, and the flatten/stack/average pipeline
//! producing the mean field phi-bar.
//!
//! Runs are mutually independent. Each run derives its own seed from the
//! global seed with a splitmix64 mix of the run index, so serial and
//! parallel execution produce bit-identical results.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::drlse::{edge_indicator, evolve_step, DrlseParams, EdgeIndicator, LevelSetField};
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Configuration for a multi-run RPI segmentation.
///
/// Defaults follow the reference parameter set: `k = 8` iterations per
/// run, `m = 15` runs, `sigma = 0.01`, sparse fill fraction
/// `alpha = 0.25` with a dense first run.
#[derive(Debug, Clone, PartialEq)]
pub struct RpiConfig {
    /// Standard deviation of the initial N(0, sigma^2) entries.
    pub sigma: f64,
    /// Evolution steps per run.
    pub k: usize,
    /// Number of independent runs.
    pub m: usize,
    /// Sparse fill fraction in (0, 1]. `1` makes every run dense.
    pub alpha: f64,
    /// Scatter a fully dense field for run 0 even when `alpha < 1`.
    pub first_run_dense: bool,
    /// Global seed; per-run seeds are derived deterministically.
    pub seed: u64,
    pub drlse: DrlseParams,
    /// Smoothing width for the edge indicator.
    pub sigma_g: f64,
}

impl Default for RpiConfig {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            k: 8,
            m: 15,
            alpha: 0.25,
            first_run_dense: true,
            seed: 0,
            drlse: DrlseParams::default(),
            sigma_g: 1.5,
        }
    }
}

impl RpiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::parameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.k < 1 {
            return Err(Error::parameter("k must be >= 1"));
        }
        if self.m < 1 {
            return Err(Error::parameter("m must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::parameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.sigma_g > 0.0) {
            return Err(Error::parameter(format!(
                "sigma_g must be > 0, got {}",
                self.sigma_g
            )));
        }
        Ok(())
    }
}

/// The m flattened runs, one row of length `width * height` per run.
#[derive(Debug, Clone)]
pub struct RunStack {
    width: usize,
    height: usize,
    rows: Vec<Vec<f64>>,
}

impl RunStack {
    pub fn from_runs(runs: Vec<LevelSetField>) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::parameter("empty run stack"))?;
        let (width, height) = (first.width(), first.height());
        for (i, r) in runs.iter().enumerate() {
            if r.width() != width || r.height() != height {
                return Err(Error::dims(format!(
                    "run {i} is {}x{} but run 0 is {width}x{height}",
                    r.width(),
                    r.height()
                )));
            }
        }
        let rows = runs.into_iter().map(LevelSetField::into_phi).collect();
        Ok(Self {
            width,
            height,
            rows,
        })
    }

    pub fn run_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self) -> usize {
        self.width * self.height
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Column-wise arithmetic mean, reshaped back to the image grid.
    ///
    /// Both passes sum in a canonical order, so the mean is invariant
    /// under permuting the rows, and the corrected two-pass form makes
    /// the average of m identical rows reproduce the row bit-exactly.
    pub fn average(&self) -> AveragedField {
        let n = self.rows.len() as f64;
        let len = self.row_len();
        let mut phi_bar = vec![0.0; len];
        let mut col = vec![0.0; self.rows.len()];
        for (j, out) in phi_bar.iter_mut().enumerate() {
            for (c, row) in col.iter_mut().zip(&self.rows) {
                *c = row[j];
            }
            let m1 = canonical_sum(&mut col) / n;
            for c in col.iter_mut() {
                *c -= m1;
            }
            *out = m1 + canonical_sum(&mut col) / n;
        }
        AveragedField {
            width: self.width,
            height: self.height,
            phi_bar,
        }
    }
}

/// The element-wise mean field phi-bar over all runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedField {
    width: usize,
    height: usize,
    phi_bar: Vec<f64>,
}

impl AveragedField {
    pub fn new(width: usize, height: usize, phi_bar: Vec<f64>) -> Result<Self> {
        if phi_bar.len() != width * height {
            return Err(Error::dims(format!(
                "buffer of length {} does not match {}x{}",
                phi_bar.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            phi_bar,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn phi_bar(&self) -> &[f64] {
        &self.phi_bar
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.phi_bar[y * self.width + x]
    }
}

/// Sum in a canonical (sorted) order so the result depends only on the
/// multiset of values, never on their arrangement.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Stateless splitmix64 mix; the per-run seed is `seed ^ splitmix64(run_index)`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn per_run_seed(seed: u64, run_index: usize) -> u64 {
    seed ^ splitmix64(run_index as u64)
}

/// Dense random field: every entry i.i.d. N(0, sigma^2) from a seeded
/// ChaCha8 stream, so identical seeds give identical fields on every
/// platform.
pub fn init_dense_random(
    width: usize,
    height: usize,
    sigma: f64,
    rng_seed: u64,
) -> Result<LevelSetField> {
    if !(sigma > 0.0) {
        return Err(Error::parameter(format!("sigma must be > 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    let phi = (0..width * height).map(|_| normal.sample(&mut rng)).collect();
    LevelSetField::new(width, height, phi)
}

/// Sparse random field: a dense `round(alpha * height) x round(alpha * width)`
/// block of N(0, sigma^2) entries in the top-left corner, zeros elsewhere,
/// with the rows and the columns then independently permuted. The nonzero
/// count is exactly `round(alpha * height) * round(alpha * width)`.
pub fn init_sparse_random(
    width: usize,
    height: usize,
    sigma: f64,
    alpha: f64,
    rng_seed: u64,
) -> Result<LevelSetField> {
    if !(sigma > 0.0) {
        return Err(Error::parameter(format!("sigma must be > 0, got {sigma}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let block_rows = (alpha * height as f64).round() as usize;
    let block_cols = (alpha * width as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");

    let mut grid = vec![0.0; width * height];
    for y in 0..block_rows {
        for x in 0..block_cols {
            grid[y * width + x] = normal.sample(&mut rng);
        }
    }

    let mut row_perm: Vec<usize> = (0..height).collect();
    row_perm.shuffle(&mut rng);
    let mut col_perm: Vec<usize> = (0..width).collect();
    col_perm.shuffle(&mut rng);

    let mut phi = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            phi[row_perm[y] * width + col_perm[x]] = grid[y * width + x];
        }
    }
    LevelSetField::new(width, height, phi)
}

fn init_for_run(
    width: usize,
    height: usize,
    cfg: &RpiConfig,
    run_index: usize,
) -> Result<LevelSetField> {
    let seed = per_run_seed(cfg.seed, run_index);
    let dense = cfg.alpha == 1.0 || (run_index == 0 && cfg.first_run_dense);
    if dense {
        init_dense_random(width, height, cfg.sigma, seed)
    } else {
        init_sparse_random(width, height, cfg.sigma, cfg.alpha, seed)
    }
}

fn evolve_run(
    g: &EdgeIndicator,
    cfg: &RpiConfig,
    run_index: usize,
) -> Result<LevelSetField> {
    let mut phi = init_for_run(g.width(), g.height(), cfg, run_index)?;
    for step in 0..cfg.k {
        phi = evolve_step(&phi, g, &cfg.drlse).map_err(|e| match e {
            Error::Divergence { context } => Error::Divergence {
                context: format!("run {run_index}, iteration {step}: {context}"),
            },
            other => other,
        })?;
    }
    Ok(phi)
}

/// One RPI run: seeded initialization followed by exactly `k` evolution
/// steps against the edge indicator of `img`.
pub fn run_single_rpi(img: &GrayImage, cfg: &RpiConfig, run_index: usize) -> Result<LevelSetField> {
    cfg.validate()?;
    if run_index >= cfg.m {
        return Err(Error::parameter(format!(
            "run_index {run_index} out of range for m = {}",
            cfg.m
        )));
    }
    let g = edge_indicator(img, cfg.sigma_g)?;
    evolve_run(&g, cfg, run_index)
}

/// All `m` runs, stacked and column-averaged into phi-bar.
///
/// The edge indicator depends only on the image, so it is computed once
/// and shared. Runs execute in parallel on the current rayon pool; the
/// result is independent of the schedule.
pub fn run_multi_rpi(img: &GrayImage, cfg: &RpiConfig) -> Result<AveragedField> {
    cfg.validate()?;
    let g = edge_indicator(img, cfg.sigma_g)?;
    let runs: Vec<LevelSetField> = (0..cfg.m)
        .into_par_iter()
        .map(|run_index| evolve_run(&g, cfg, run_index))
        .collect::<Result<_>>()?;
    Ok(RunStack::from_runs(runs)?.average())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_init_is_deterministic() {
        let a = init_dense_random(16, 12, 0.5, 99).unwrap();
        let b = init_dense_random(16, 12, 0.5, 99).unwrap();
        assert_eq!(a.phi(), b.phi());
    }

    #[test]
    fn dense_init_has_expected_moments() {
        let sigma = 0.01;
        let f = init_dense_random(256, 256, sigma, 7).unwrap();
        let n = f.phi().len() as f64;
        let mean = f.phi().iter().sum::<f64>() / n;
        let sd = (f.phi().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 4.0 * sigma / n.sqrt(), "mean {mean}");
        assert!((sd - sigma).abs() / sigma < 0.05, "sd {sd}");
    }

    #[test]
    fn different_seeds_differ_almost_everywhere() {
        let a = init_dense_random(64, 64, 1.0, 1).unwrap();
        let b = init_dense_random(64, 64, 1.0, 2).unwrap();
        let differing = a
            .phi()
            .iter()
            .zip(b.phi())
            .filter(|(x, y)| x != y)
            .count();
        assert!(differing as f64 >= 0.99 * 4096.0);
    }

    #[test]
    fn dense_init_rejects_bad_sigma() {
        assert!(init_dense_random(4, 4, 0.0, 0).is_err());
        assert!(init_sparse_random(4, 4, -1.0, 0.5, 0).is_err());
        assert!(init_sparse_random(4, 4, 1.0, 0.0, 0).is_err());
        assert!(init_sparse_random(4, 4, 1.0, 1.5, 0).is_err());
    }

    #[test]
    fn sparse_support_count_is_exact() {
        for seed in 0..20 {
            let f = init_sparse_random(8, 8, 1.0, 0.25, seed).unwrap();
            let nonzero = f.phi().iter().filter(|&&v| v != 0.0).count();
            assert_eq!(nonzero, 4); // round(0.25*8)^2
        }
        let f = init_sparse_random(10, 6, 1.0, 0.5, 3).unwrap();
        let nonzero = f.phi().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 15); // round(0.5*6) * round(0.5*10)
    }

    #[test]
    fn sparse_alpha_one_is_fully_dense() {
        let f = init_sparse_random(12, 9, 0.3, 1.0, 5).unwrap();
        assert_eq!(f.phi().iter().filter(|&&v| v != 0.0).count(), 108);
    }

    #[test]
    fn sparse_support_is_deterministic_golden() {
        // Support mask frozen from the first run at this seed.
        let f = init_sparse_random(6, 6, 1.0, 0.5, 42).unwrap();
        let mask: Vec<u8> = f.phi().iter().map(|&v| (v != 0.0) as u8).collect();
        let again = init_sparse_random(6, 6, 1.0, 0.5, 42).unwrap();
        let mask2: Vec<u8> = again.phi().iter().map(|&v| (v != 0.0) as u8).collect();
        assert_eq!(mask, mask2);
        assert_eq!(mask.iter().filter(|&&b| b == 1).count(), 9);
        // Each occupied row/column pattern is a permutation of the block:
        // exactly 3 rows and 3 columns carry nonzeros.
        let rows_used = (0..6)
            .filter(|&y| (0..6).any(|x| mask[y * 6 + x] == 1))
            .count();
        let cols_used = (0..6)
            .filter(|&x| (0..6).any(|y| mask[y * 6 + x] == 1))
            .count();
        assert_eq!((rows_used, cols_used), (3, 3));
    }

    #[test]
    fn single_run_is_deterministic() {
        let img = GrayImage::from_fn(24, 24, |x, y| {
            if (x as i32 - 12).pow(2) + (y as i32 - 12).pow(2) < 49 {
                40.0
            } else {
                200.0
            }
        });
        let cfg = RpiConfig {
            k: 4,
            m: 3,
            seed: 11,
            ..RpiConfig::default()
        };
        let a = run_single_rpi(&img, &cfg, 1).unwrap();
        let b = run_single_rpi(&img, &cfg, 1).unwrap();
        assert_eq!(a.phi(), b.phi());
    }

    #[test]
    fn evolution_moves_off_the_initial_field_and_stays_finite() {
        let img = GrayImage::constant(24, 24, 100.0);
        let cfg = RpiConfig {
            k: 8,
            m: 1,
            seed: 2,
            ..RpiConfig::default()
        };
        let init = init_for_run(24, 24, &cfg, 0).unwrap();
        let out = run_single_rpi(&img, &cfg, 0).unwrap();
        assert_ne!(init.phi(), out.phi());
        assert!(out.phi().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn out_of_range_run_index_is_rejected() {
        let img = GrayImage::constant(8, 8, 0.0);
        let cfg = RpiConfig {
            m: 2,
            ..RpiConfig::default()
        };
        assert!(run_single_rpi(&img, &cfg, 2).is_err());
    }

    #[test]
    fn single_run_average_is_identity() {
        let img = GrayImage::from_fn(16, 16, |x, _| (x * 16) as f64);
        let cfg = RpiConfig {
            k: 2,
            m: 1,
            seed: 4,
            ..RpiConfig::default()
        };
        let single = run_single_rpi(&img, &cfg, 0).unwrap();
        let avg = run_multi_rpi(&img, &cfg).unwrap();
        assert_eq!(avg.phi_bar(), single.phi());
    }

    #[test]
    fn identical_rows_average_bit_exactly() {
        let field = init_dense_random(16, 16, 0.7, 123).unwrap();
        let stack = RunStack::from_runs(vec![field.clone(), field.clone(), field.clone()]).unwrap();
        let avg = stack.average();
        assert_eq!(avg.phi_bar(), field.phi());
    }

    #[test]
    fn average_matches_straight_loop_oracle() {
        let runs: Vec<LevelSetField> = (0..5)
            .map(|i| init_dense_random(9, 7, 1.3, 1000 + i).unwrap())
            .collect();
        let expected: Vec<f64> = (0..63)
            .map(|j| runs.iter().map(|r| r.phi()[j]).sum::<f64>() / 5.0)
            .collect();
        let avg = RunStack::from_runs(runs).unwrap().average();
        for (a, e) in avg.phi_bar().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn run_order_does_not_change_average() {
        let mut runs: Vec<LevelSetField> = (0..4)
            .map(|i| init_dense_random(8, 8, 0.5, 50 + i).unwrap())
            .collect();
        let a = RunStack::from_runs(runs.clone()).unwrap().average();
        runs.reverse();
        let b = RunStack::from_runs(runs).unwrap().average();
        assert_eq!(a.phi_bar(), b.phi_bar());
    }

    #[test]
    fn serial_and_parallel_runs_agree() {
        let img = GrayImage::from_fn(20, 20, |x, y| {
            if x > 5 && x < 15 && y > 5 && y < 15 {
                30.0
            } else {
                220.0
            }
        });
        let cfg = RpiConfig {
            k: 3,
            m: 6,
            seed: 77,
            ..RpiConfig::default()
        };
        let serial = {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            pool.install(|| run_multi_rpi(&img, &cfg)).unwrap()
        };
        let parallel = {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
            pool.install(|| run_multi_rpi(&img, &cfg)).unwrap()
        };
        assert_eq!(serial.phi_bar(), parallel.phi_bar());
    }
}
