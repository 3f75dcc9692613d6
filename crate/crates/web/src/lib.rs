//! WebAssembly bindings for the demo page in `www/`.
//!
//! Images cross the boundary as row-major `Float64Array`s plus a width; the
//! page owns all drawing.

use adaptive_denoise::edges::{detect_edges, EdgeDetectParams};
use adaptive_denoise::{
    add_noise, default_params, denoise, rmse, synth, ImageGrid, Mode, NoiseSpec, SceneKind,
    SceneSpec,
};
use wasm_bindgen::prelude::*;

fn grid(data: &[f64], width: usize) -> adaptive_denoise::Result<ImageGrid> {
    let height = data.len().checked_div(width).unwrap_or(0);
    ImageGrid::new(width, height, data.to_vec())
}

fn noisy_scene(
    scene: &str,
    n: usize,
    sd: f64,
    seed: u32,
) -> adaptive_denoise::Result<(Vec<f64>, Vec<f64>)> {
    let kind: SceneKind = scene.parse()?;
    let truth = synth(&SceneSpec { kind, n })?;
    let noisy = add_noise(
        &truth,
        NoiseSpec {
            sd,
            seed: seed.into(),
        },
    );
    Ok((truth.into_data(), noisy.into_data()))
}

fn edge_mask(
    data: &[f64],
    width: usize,
    k: usize,
    alpha: f64,
) -> adaptive_denoise::Result<Vec<u8>> {
    let img = grid(data, width)?;
    let params = EdgeDetectParams {
        half_width: k,
        alpha,
        sigma_override: None,
    };
    let edges = detect_edges(&img, &params)?;
    Ok(edges.flags().iter().map(|&f| u8::from(f)).collect())
}

fn restore(
    data: &[f64],
    width: usize,
    mode: &str,
    gamma: f64,
    max_axis: f64,
) -> adaptive_denoise::Result<Vec<f64>> {
    let img = grid(data, width)?;
    let mut params = default_params(img.side());
    params.mode = mode.parse::<Mode>()?;
    params.gamma = gamma;
    params.max_axis = max_axis;
    params.cluster.h_n = gamma;
    Ok(denoise(&img, &params)?.into_data())
}

fn js_error(e: adaptive_denoise::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Noiseless scene followed by its noisy copy, concatenated; each half has
/// `n * n` values.
#[wasm_bindgen(js_name = noisyScene)]
pub fn noisy_scene_js(scene: &str, n: usize, sd: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    let (mut truth, noisy) = noisy_scene(scene, n, sd, seed).map_err(js_error)?;
    truth.extend(noisy);
    Ok(truth)
}

/// One byte per pixel: 1 on detected edges.
#[wasm_bindgen(js_name = edgeMask)]
pub fn edge_mask_js(data: &[f64], width: usize, k: usize, alpha: f64) -> Result<Vec<u8>, JsError> {
    edge_mask(data, width, k, alpha).map_err(js_error)
}

#[wasm_bindgen(js_name = denoise)]
pub fn denoise_js(
    data: &[f64],
    width: usize,
    mode: &str,
    gamma: f64,
    max_axis: f64,
) -> Result<Vec<f64>, JsError> {
    restore(data, width, mode, gamma, max_axis).map_err(js_error)
}

#[wasm_bindgen(js_name = rmse)]
pub fn rmse_js(a: &[f64], b: &[f64], width: usize) -> Result<f64, JsError> {
    let (a, b) = (
        grid(a, width).map_err(js_error)?,
        grid(b, width).map_err(js_error)?,
    );
    rmse(&a, &b).map_err(js_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_halves_have_the_requested_size() {
        let (truth, noisy) = noisy_scene("square-circle", 32, 10.0, 1).unwrap();
        assert_eq!((truth.len(), noisy.len()), (1024, 1024));
        assert_ne!(truth, noisy);
        assert!(noisy_scene("triangle", 32, 10.0, 1).is_err());
    }

    #[test]
    fn mask_flags_a_step() {
        let (truth, _) = noisy_scene("step:16:50:200", 32, 0.0, 1).unwrap();
        let mask = edge_mask(&truth, 32, 2, 0.05).unwrap();
        assert_eq!(mask.len(), 1024);
        assert!(mask.contains(&1));
    }

    #[test]
    fn denoise_reduces_error() {
        let (truth, noisy) = noisy_scene("square-circle", 48, 15.0, 2).unwrap();
        let out = restore(&noisy, 48, "integrated", 3.0, 6.0).unwrap();
        let err = |v: &[f64]| rmse(&grid(v, 48).unwrap(), &grid(&truth, 48).unwrap()).unwrap();
        assert!(err(&out) < err(&noisy));
        assert!(restore(&noisy, 48, "median", 3.0, 6.0).is_err());
        assert!(restore(&noisy[..100], 48, "box3", 3.0, 6.0).is_err());
    }
}
