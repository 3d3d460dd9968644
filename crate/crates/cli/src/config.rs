//! Flag and config-file resolution. Every tunable has a documented
//! default equal to the reference parameter set; the optional config
//! file holds `key=value` lines whose keys mirror the long flag names,
//! and explicit flags win over the file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use mrpi_core::{CannyParams, DrlseParams, RpiConfig};
use serde::{Deserialize, Serialize};

#[derive(Args, Debug)]
pub struct SegmentOpts {
    /// Number of RPI runs (m).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Evolution iterations per run (k).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Standard deviation of the random initial fields.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Sparse fill fraction for re-initialized runs, in (0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use dense initialization for every run (same as --alpha 1).
    #[arg(long)]
    pub dense_only: bool,
    /// Use a dense field for the first run even when alpha < 1.
    #[arg(long)]
    pub first_dense: Option<bool>,
    /// Lower band threshold (<= 0).
    #[arg(long, allow_hyphen_values = true)]
    pub p_low: Option<f64>,
    /// Upper band threshold (>= 0).
    #[arg(long, allow_hyphen_values = true)]
    pub p_high: Option<f64>,
    /// Distance-regularization weight.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Edge-length weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Balloon/area weight; positive shrinks.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_area: Option<f64>,
    /// Time step of the explicit scheme.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Dirac smoothing width in pixels.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Gaussian width for the edge indicator.
    #[arg(long)]
    pub sigma_g: Option<f64>,
    /// Maximum thinning passes.
    #[arg(long)]
    pub thin_iters: Option<usize>,
    /// Global RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the run-level parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Optional key=value config file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CannyOpts {
    /// Lower hysteresis threshold as a fraction of the max gradient.
    #[arg(long, default_value_t = 0.1)]
    pub t_low: f64,
    /// Upper hysteresis threshold as a fraction of the max gradient.
    #[arg(long, default_value_t = 0.2)]
    pub t_high: f64,
    /// Pre-smoothing width for the baseline.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub sigma_c: f64,
}

impl CannyOpts {
    pub fn params(&self) -> anyhow::Result<CannyParams> {
        Ok(CannyParams::new(self.t_low, self.t_high, self.sigma_c)?)
    }
}

/// The fully resolved configuration recorded in the run manifest; a run
/// is reproducible from this block alone.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResolvedConfig {
    pub runs: usize,
    pub iters: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub first_dense: bool,
    pub p_low: f64,
    pub p_high: f64,
    pub mu: f64,
    pub lambda: f64,
    pub alpha_area: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub sigma_g: f64,
    pub thin_iters: usize,
    pub seed: u64,
    pub threads: usize,
}

fn parse_config_file(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("failed to read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            );
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(
    file: &HashMap<String, String>,
    key: &str,
) -> anyhow::Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match file.get(key) {
        None => Ok(None),
        Some(raw) => match raw.parse() {
            Ok(v) => Ok(Some(v)),
            Err(e) => bail!("config key {key}={raw}: {e}"),
        },
    }
}

impl ResolvedConfig {
    pub fn resolve(opts: &SegmentOpts) -> anyhow::Result<Self> {
        let file = match &opts.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        macro_rules! pick {
            ($flag:expr, $key:literal, $default:expr) => {
                match $flag {
                    Some(v) => v,
                    None => from_file(&file, $key)?.unwrap_or($default),
                }
            };
        }
        let dense_only = opts.dense_only || from_file(&file, "dense-only")?.unwrap_or(false);
        let alpha = if dense_only {
            1.0
        } else {
            pick!(opts.alpha, "alpha", 0.25)
        };
        let threads = pick!(
            opts.threads,
            "threads",
            std::thread::available_parallelism().map_or(1, |n| n.get())
        );
        Ok(Self {
            runs: pick!(opts.runs, "runs", 15),
            iters: pick!(opts.iters, "iters", 8),
            sigma: pick!(opts.sigma, "sigma", 0.01),
            alpha,
            first_dense: pick!(opts.first_dense, "first-dense", true),
            p_low: pick!(opts.p_low, "p-low", -0.175),
            p_high: pick!(opts.p_high, "p-high", 0.075),
            mu: pick!(opts.mu, "mu", 0.2),
            lambda: pick!(opts.lambda, "lambda", 5.0),
            alpha_area: pick!(opts.alpha_area, "alpha-area", 1.5),
            dt: pick!(opts.dt, "dt", 1.0),
            epsilon: pick!(opts.epsilon, "epsilon", 1.5),
            sigma_g: pick!(opts.sigma_g, "sigma-g", 1.5),
            thin_iters: pick!(opts.thin_iters, "thin-iters", 3),
            seed: pick!(opts.seed, "seed", 0),
            threads,
        })
    }

    pub fn rpi_config(&self) -> anyhow::Result<RpiConfig> {
        let drlse = DrlseParams::new(self.mu, self.lambda, self.alpha_area, self.epsilon, self.dt)?;
        let cfg = RpiConfig {
            sigma: self.sigma,
            k: self.iters,
            m: self.runs,
            alpha: self.alpha,
            first_run_dense: self.first_dense,
            seed: self.seed,
            drlse,
            sigma_g: self.sigma_g,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
