//! Grayscale image files.
//!
//! Binary PGM (`P5`, 8-bit) is always available. PNG is supported with the
//! `png` feature; color PNGs are reduced to gray by Rec. 601 luma. Writers
//! clamp to `[0, 255]` and round to the nearest integer.

use std::fs;
use std::path::Path;

use crate::{Error, ImageGrid, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Reads a PGM or PNG file, detected by its magic bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Writes `img` as PNG when the extension is `.png`, as binary PGM otherwise.
pub fn write_image(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_pgm(img)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn decode(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(Error::UnsupportedFormat(format!(
            "netpbm variant P{} (only binary P5 is supported)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("unknown magic bytes".into()))
    }
}

/// Quantizes to a byte: clamp to `[0, 255]`, then round half away from zero.
pub fn to_byte(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

pub fn encode_pgm(img: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| to_byte(v)));
    out
}

fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Malformed("PGM header truncated".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed("PGM header field out of range".into()))?;
    }
    let [width, height, maxval] = header;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Malformed(
            "missing whitespace after PGM header".into(),
        ));
    }
    pos += 1;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} (only 8-bit is supported)"
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("PGM dimensions overflow".into()))?;
    let raster = bytes
        .get(pos..pos + count)
        .ok_or_else(|| Error::Malformed(format!("expected {count} raster bytes")))?;
    let scale = 255.0 / maxval as f64;
    let data = raster
        .iter()
        .map(|&b| {
            if maxval == 255 {
                b as f64
            } else {
                b as f64 * scale
            }
        })
        .collect();
    ImageGrid::new(width, height, data)
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<ImageGrid> {
    use png::{ColorType, Transformations};

    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Malformed(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    let buf = &buf[..info.buffer_size()];
    let luma = |r: u8, g: u8, b: u8| 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    let data: Vec<f64> = match info.color_type {
        ColorType::Grayscale => buf.iter().map(|&v| v as f64).collect(),
        ColorType::GrayscaleAlpha => buf.chunks_exact(2).map(|c| c[0] as f64).collect(),
        ColorType::Rgb => buf
            .chunks_exact(3)
            .map(|c| luma(c[0], c[1], c[2]))
            .collect(),
        ColorType::Rgba => buf
            .chunks_exact(4)
            .map(|c| luma(c[0], c[1], c[2]))
            .collect(),
        ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("unexpanded indexed PNG".into()))
        }
    };
    ImageGrid::new(info.width as usize, info.height as usize, data)
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> Result<ImageGrid> {
    Err(Error::UnsupportedFormat(
        "PNG support not compiled in".into(),
    ))
}

#[cfg(feature = "png")]
pub fn encode_png(img: &ImageGrid) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Malformed(e.to_string()))?;
        let raster: Vec<u8> = img.data().iter().map(|&v| to_byte(v)).collect();
        writer
            .write_image_data(&raster)
            .map_err(|e| Error::Malformed(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(not(feature = "png"))]
pub fn encode_png(_: &ImageGrid) -> Result<Vec<u8>> {
    Err(Error::UnsupportedFormat(
        "PNG support not compiled in".into(),
    ))
}
