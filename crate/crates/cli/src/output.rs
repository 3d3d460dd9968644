//! Artifact writing: edge maps and debug stages as 8-bit PNG, manifests
//! and metrics as versioned JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use image::{GrayImage as PngGray, Luma};
use mrpi_core::rpi::AveragedField;
use mrpi_core::{BinaryEdgeMap, CannyParams, GrayImage, PostprocStages};
use serde::Serialize;

use crate::config::ResolvedConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    version: &'static str,
    command: &'a str,
    input: String,
    out_dir: String,
    seed: Option<u64>,
    config: serde_json::Value,
    artifacts: &'a BTreeMap<String, String>,
}

pub struct OutputWriter {
    out_dir: PathBuf,
}

impl OutputWriter {
    pub fn new(out_dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("failed to create {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Write a binary map as 8-bit PNG: bit 1 (edge) maps to 255.
    pub fn write_edges(
        &self,
        name: &str,
        map: &BinaryEdgeMap,
    ) -> anyhow::Result<BTreeMap<String, String>> {
        let img = PngGray::from_fn(map.width() as u32, map.height() as u32, |x, y| {
            Luma([map.get(x as usize, y as usize) * 255])
        });
        let path = self.path(name);
        img.save(&path)
            .with_context(|| format!("failed to write {}", path.display()))?;
        Ok(artifact(name, &path))
    }

    /// Write a real field as PNG, linearly rescaled to [0, 255].
    fn write_field(&self, name: &str, field: &AveragedField) -> anyhow::Result<BTreeMap<String, String>> {
        let min = field.phi_bar().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = field
            .phi_bar()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let span = if max > min { max - min } else { 1.0 };
        let img = PngGray::from_fn(field.width() as u32, field.height() as u32, |x, y| {
            let v = field.get(x as usize, y as usize);
            Luma([((v - min) / span * 255.0).round() as u8])
        });
        let path = self.path(name);
        img.save(&path)
            .with_context(|| format!("failed to write {}", path.display()))?;
        Ok(artifact(name, &path))
    }

    pub fn write_debug_stages(
        &self,
        phi_bar: &AveragedField,
        stages: &PostprocStages,
    ) -> anyhow::Result<BTreeMap<String, String>> {
        let mut artifacts = BTreeMap::new();
        artifacts.extend(self.write_field("phi_bar.png", phi_bar)?);
        artifacts.extend(self.write_field("normalized.png", &stages.normalized)?);
        artifacts.extend(self.write_edges("thresholded.png", &stages.thresholded)?);
        artifacts.extend(self.write_edges("smoothed.png", &stages.smoothed)?);
        artifacts.extend(self.write_edges("thinned.png", &stages.thinned)?);
        Ok(artifacts)
    }

    /// Side-by-side montage: input | rpi edges | canny edges.
    pub fn write_montage(
        &self,
        name: &str,
        input: &GrayImage,
        rpi: &BinaryEdgeMap,
        canny: &BinaryEdgeMap,
    ) -> anyhow::Result<BTreeMap<String, String>> {
        let (w, h) = (input.width(), input.height());
        let sep = 2usize;
        let total_w = 3 * w + 2 * sep;
        let min = input.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = input.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if max > min { max - min } else { 1.0 };
        let img = PngGray::from_fn(total_w as u32, h as u32, |x, y| {
            let (x, y) = (x as usize, y as usize);
            let v = if x < w {
                ((input.get(x, y) - min) / span * 255.0).round() as u8
            } else if x < w + sep {
                128
            } else if x < 2 * w + sep {
                rpi.get(x - w - sep, y) * 255
            } else if x < 2 * w + 2 * sep {
                128
            } else {
                canny.get(x - 2 * w - 2 * sep, y) * 255
            };
            Luma([v])
        });
        let path = self.path(name);
        img.save(&path)
            .with_context(|| format!("failed to write {}", path.display()))?;
        Ok(artifact(name, &path))
    }

    pub fn write_json<T: Serialize>(
        &self,
        name: &str,
        value: &T,
    ) -> anyhow::Result<BTreeMap<String, String>> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text)
            .with_context(|| format!("failed to write {}", path.display()))?;
        Ok(artifact(name, &path))
    }

    pub fn write_manifest(
        &self,
        command: &str,
        input: &Path,
        config: ResolvedConfig,
        artifacts: BTreeMap<String, String>,
    ) -> anyhow::Result<()> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command,
            input: input.display().to_string(),
            out_dir: self.out_dir.display().to_string(),
            seed: Some(config.seed),
            config: serde_json::to_value(&config)?,
            artifacts: &artifacts,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }

    pub fn write_canny_manifest(
        &self,
        input: &Path,
        params: CannyParams,
        artifacts: BTreeMap<String, String>,
    ) -> anyhow::Result<()> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command: "canny",
            input: input.display().to_string(),
            out_dir: self.out_dir.display().to_string(),
            seed: None,
            config: serde_json::json!({
                "t_low": params.t_low,
                "t_high": params.t_high,
                "sigma_c": params.sigma_c,
            }),
            artifacts: &artifacts,
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}

fn artifact(name: &str, path: &Path) -> BTreeMap<String, String> {
    let key = name.trim_end_matches(".png").trim_end_matches(".json");
    BTreeMap::from([(key.to_string(), path.display().to_string())])
}

/// Load a ground-truth edge map: pixels at or above half intensity are
/// edges.
pub fn load_truth(path: &Path) -> anyhow::Result<BinaryEdgeMap> {
    let img = mrpi_core::load_image(path)?;
    let bits = img.data().iter().map(|&v| (v >= 128.0) as u8).collect();
    Ok(BinaryEdgeMap::new(img.width(), img.height(), bits)?)
}
