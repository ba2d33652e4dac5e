//! Deterministic image features and binary PGM payloads.

use std::io::{BufRead, Write};

use super::SimulationError;
use crate::types::GrayImage;

/// Side of the block grid used for block-mean features.
pub const FEATURE_GRID: usize = 8;
/// Length of [`image_features`] output.
pub const IMAGE_FEATURE_DIM: usize = FEATURE_GRID * FEATURE_GRID + 4;

/// Human-readable name of each image feature, in column order.
pub fn image_feature_names() -> Vec<String> {
    let mut names: Vec<String> = (0..FEATURE_GRID * FEATURE_GRID)
        .map(|i| format!("block_r{}_c{}", i / FEATURE_GRID, i % FEATURE_GRID))
        .collect();
    names.extend(
        [
            "global_mean",
            "global_std",
            "ink_fraction",
            "gradient_energy",
        ]
        .map(String::from),
    );
    names
}

/// 8x8 block means followed by global mean, standard deviation, fraction of
/// inked pixels (> 0.5) and mean squared finite-difference gradient.
pub fn image_features(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut sums = vec![0.0; FEATURE_GRID * FEATURE_GRID];
    let mut counts = vec![0usize; FEATURE_GRID * FEATURE_GRID];
    for y in 0..h {
        let by = y * FEATURE_GRID / h;
        for x in 0..w {
            let b = by * FEATURE_GRID + x * FEATURE_GRID / w;
            sums[b] += px[y * w + x];
            counts[b] += 1;
        }
    }
    let mut out: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let n = px.len() as f64;
    let mean = px.iter().sum::<f64>() / n;
    let std = (px.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
    let ink = px.iter().filter(|&&p| p > 0.5).count() as f64 / n;
    let mut grad = 0.0;
    for y in 0..h {
        for x in 0..w {
            let v = px[y * w + x];
            if x + 1 < w {
                grad += (px[y * w + x + 1] - v).powi(2);
            }
            if y + 1 < h {
                grad += (px[(y + 1) * w + x] - v).powi(2);
            }
        }
    }
    out.extend([mean, std, ink, grad / n]);
    out
}

/// Writes a binary (P5) graymap with maxval 255.
pub fn write_pgm<W: Write>(mut out: W, img: &GrayImage) -> std::io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .map(|p| (p * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)
}

fn header_token<R: BufRead>(r: &mut R) -> Result<String, SimulationError> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)
            .map_err(|e| SimulationError::Io(e.to_string()))?
            == 0
        {
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = String::new();
                r.read_line(&mut skip)
                    .map_err(|e| SimulationError::Io(e.to_string()))?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            c => token.push(c as char),
        }
    }
    if token.is_empty() {
        return Err(SimulationError::Io("truncated PGM header".into()));
    }
    Ok(token)
}

pub fn read_pgm<R: BufRead>(mut r: R) -> Result<GrayImage, SimulationError> {
    if header_token(&mut r)? != "P5" {
        return Err(SimulationError::Io("not a binary PGM (P5)".into()));
    }
    let mut num = || -> Result<usize, SimulationError> {
        header_token(&mut r)?
            .parse()
            .map_err(|e| SimulationError::Io(format!("bad PGM header: {e}")))
    };
    let (w, h, maxval) = (num()?, num()?, num()?);
    if maxval == 0 || maxval > 255 {
        return Err(SimulationError::Io(format!("unsupported maxval {maxval}")));
    }
    let mut data = vec![0u8; w * h];
    r.read_exact(&mut data)
        .map_err(|e| SimulationError::Io(e.to_string()))?;
    let pixels = data.iter().map(|&b| b as f64 / maxval as f64).collect();
    GrayImage::from_pixels(w, h, pixels).map_err(|e| SimulationError::Io(e.to_string()))
}
