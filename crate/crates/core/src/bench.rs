//! Monte-Carlo RMSE study on synthetic scenes.
//!
//! Each replicate draws fresh noise, denoises, and records the root-mean
//! squared error against the noiseless scene; a row reports the mean and
//! sample SD of those values. Root-mean (not root-sum) keeps the numbers on
//! the intensity scale; multiply by the side length `n` to get the root-sum
//! over all `n²` pixels.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{
    add_noise, default_params, denoise, mix_seed, rmse, synth, Error, Mode, NoiseSpec, Result,
    SceneKind, SceneSpec,
};

pub const CSV_HEADER: [&str; 8] = [
    "scene",
    "n",
    "sd",
    "method",
    "L",
    "mean_rmse",
    "sd_rmse",
    "seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scene: String,
    pub n: usize,
    pub sd: f64,
    pub method: String,
    #[serde(rename = "L")]
    pub replicates: usize,
    pub mean_rmse: f64,
    /// Sample SD of the per-replicate RMSE values; 0 for a single replicate.
    pub sd_rmse: f64,
    /// Wall-clock time spent denoising, all replicates.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenes: Vec<SceneKind>,
    pub sizes: Vec<usize>,
    pub sds: Vec<f64>,
    pub replicates: usize,
    pub methods: Vec<Mode>,
    pub base_seed: u64,
    /// Reuse one noise draw for every replicate.
    pub fixed_seed: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenes: vec![SceneKind::SquareCircle],
            sizes: vec![64, 128],
            sds: vec![5.0, 10.0, 20.0],
            replicates: 10,
            methods: vec![Mode::Integrated],
            base_seed: 1,
            fixed_seed: false,
        }
    }
}

/// Noise seed of replicate `l` (1-based). Independent of the method, so all
/// methods see the same noisy images.
pub fn replicate_seed(base: u64, n: usize, sd: f64, l: usize) -> u64 {
    mix_seed(base, &[n as u64, sd.to_bits(), l as u64])
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter(
            "at least one replicate is required".into(),
        ));
    }
    let mut rows = Vec::new();
    for &scene in &config.scenes {
        for &n in &config.sizes {
            let truth = synth(&SceneSpec { kind: scene, n })?;
            for &sd in &config.sds {
                if !(sd >= 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidParameter(format!("noise sd {sd}")));
                }
                for &method in &config.methods {
                    let params = crate::DenoiseParams {
                        mode: method,
                        ..default_params(n)
                    };
                    let mut errors = Vec::with_capacity(config.replicates);
                    let mut seconds = 0.0;
                    for l in 1..=config.replicates {
                        let l = if config.fixed_seed { 1 } else { l };
                        let seed = replicate_seed(config.base_seed, n, sd, l);
                        let noisy = add_noise(&truth, NoiseSpec { sd, seed });
                        let start = Instant::now();
                        let restored = denoise(&noisy, &params)?;
                        seconds += start.elapsed().as_secs_f64();
                        errors.push(rmse(&restored, &truth)?);
                    }
                    let (mean_rmse, sd_rmse) = mean_and_sd(&errors);
                    rows.push(BenchRow {
                        scene: scene.to_string(),
                        n,
                        sd,
                        method: method.to_string(),
                        replicates: config.replicates,
                        mean_rmse,
                        sd_rmse,
                        seconds,
                    });
                }
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0);
    (mean, var.sqrt())
}

pub fn sort_rows(rows: &mut [BenchRow]) {
    rows.sort_by(|a, b| {
        a.scene
            .cmp(&b.scene)
            .then(a.n.cmp(&b.n))
            .then(a.sd.total_cmp(&b.sd))
            .then(a.method.cmp(&b.method))
    });
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for r in &sorted {
        writer.write_record([
            r.scene.clone(),
            r.n.to_string(),
            format!("{:.4}", r.sd),
            r.method.clone(),
            r.replicates.to_string(),
            format!("{:.4}", r.mean_rmse),
            format!("{:.4}", r.sd_rmse),
            format!("{:.4}", r.seconds),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

pub fn write_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(rows)?).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::InvalidParameter(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    Ok(reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}
