use crate::{ImageGrid, Result};

/// Root mean squared difference over all pixels.
pub fn rmse(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    a.same_shape(b)?;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sse / a.data().len() as f64).sqrt())
}
