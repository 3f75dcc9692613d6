use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ImageGrid;

/// Additive zero-mean Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sd: f64,
    pub seed: u64,
}

/// Adds i.i.d. `N(0, sd²)` noise to every pixel, in row-major order. The
/// result is not clipped. The same `(img, spec)` always gives the same output.
pub fn add_noise(img: &ImageGrid, spec: NoiseSpec) -> ImageGrid {
    assert!(
        spec.sd >= 0.0 && spec.sd.is_finite(),
        "noise sd must be finite and >= 0"
    );
    if spec.sd == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            v + spec.sd * e
        })
        .collect();
    ImageGrid::new(img.width(), img.height(), data).expect("finite noise on a valid grid")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a list of keys.
pub fn mix_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(base), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}
