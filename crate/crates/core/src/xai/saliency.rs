//! Black-box occlusion saliency.

use super::{Explanation, ExplanationPayload, XaiError};
use crate::exec::Exec;
use crate::forecasting::{ForecastError, ProbaModel};
use crate::types::{argmax, GrayImage};

/// Intensity used to cover a patch.
pub const OCCLUSION_GRAY: f64 = 0.5;

/// A classifier that looks at whole images.
pub trait ImageModel: Sync {
    fn predict_image(&self, img: &GrayImage) -> Result<Vec<f64>, ForecastError>;
}

/// Adapts a feature-space model by featurizing the image first.
pub struct FeaturizedImageModel<'a> {
    pub model: &'a dyn ProbaModel,
    pub featurize: fn(&GrayImage) -> Vec<f64>,
}

impl ImageModel for FeaturizedImageModel<'_> {
    fn predict_image(&self, img: &GrayImage) -> Result<Vec<f64>, ForecastError> {
        self.model.predict_proba(&(self.featurize)(img))
    }
}

impl<F> ImageModel for F
where
    F: Fn(&GrayImage) -> Vec<f64> + Sync,
{
    fn predict_image(&self, img: &GrayImage) -> Result<Vec<f64>, ForecastError> {
        Ok(self(img))
    }
}

fn positions(extent: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=extent - patch).step_by(stride).collect();
    if *out.last().unwrap_or(&0) != extent - patch {
        out.push(extent - patch);
    }
    out
}

/// Samples `grid` (indexed by patch centers) at an arbitrary coordinate.
fn bilinear(grid: &[f64], centers_x: &[f64], centers_y: &[f64], x: f64, y: f64) -> f64 {
    let locate = |centers: &[f64], v: f64| -> (usize, usize, f64) {
        if centers.len() == 1 || v <= centers[0] {
            return (0, 0, 0.0);
        }
        let last = centers.len() - 1;
        if v >= centers[last] {
            return (last, last, 0.0);
        }
        let i = centers.partition_point(|&c| c <= v) - 1;
        (i, i + 1, (v - centers[i]) / (centers[i + 1] - centers[i]))
    };
    let gw = centers_x.len();
    let (x0, x1, tx) = locate(centers_x, x);
    let (y0, y1, ty) = locate(centers_y, y);
    let at = |gx: usize, gy: usize| grid[gy * gw + gx];
    let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
    let bottom = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Covers each `patch x patch` window (moved by `stride`) with mid-gray and
/// records how much the predicted-class probability drops. The drop grid is
/// bilinearly upsampled to the image size and min-max normalized.
pub fn saliency_occlusion(
    model: &dyn ImageModel,
    img: &GrayImage,
    patch: usize,
    stride: usize,
    prediction_ref: &str,
    exec: Exec,
) -> Result<Explanation, XaiError> {
    let (w, h) = (img.width(), img.height());
    if patch == 0 || stride == 0 {
        return Err(XaiError::InvalidInput(
            "patch and stride must be at least 1".into(),
        ));
    }
    if patch > w || patch > h {
        return Err(XaiError::InvalidInput(format!(
            "patch {patch} larger than image {w}x{h}"
        )));
    }
    let base = model.predict_image(img)?;
    let class = argmax(&base);
    let xs = positions(w, patch, stride);
    let ys = positions(h, patch, stride);
    let cells: Vec<(usize, usize)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    let drops: Vec<Result<f64, ForecastError>> = exec.map(&cells, |&(x0, y0)| {
        let mut occluded = img.clone();
        for y in y0..y0 + patch {
            for x in x0..x0 + patch {
                occluded.set(x, y, OCCLUSION_GRAY);
            }
        }
        let p = model.predict_image(&occluded)?;
        Ok((base[class] - p[class]).max(0.0))
    });
    let grid: Vec<f64> = drops.into_iter().collect::<Result<_, _>>()?;
    let half = patch as f64 / 2.0;
    let cx: Vec<f64> = xs.iter().map(|&x| x as f64 + half).collect();
    let cy: Vec<f64> = ys.iter().map(|&y| y as f64 + half).collect();
    let mut map: Vec<f64> = (0..w * h)
        .map(|i| bilinear(&grid, &cx, &cy, (i % w) as f64 + 0.5, (i / w) as f64 + 0.5))
        .collect();
    let (lo, hi) = map
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi - lo > 1e-15 {
        map.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
    } else {
        let fill = if hi > 0.0 { 1.0 } else { 0.0 };
        map.iter_mut().for_each(|v| *v = fill);
    }
    let map =
        GrayImage::from_clamped(w, h, map).map_err(|e| XaiError::InvalidInput(e.to_string()))?;
    Ok(Explanation::new(
        format!("xsal-{prediction_ref}"),
        prediction_ref,
        ExplanationPayload::SaliencyMap { map },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_of(e: &Explanation) -> &GrayImage {
        match &e.payload {
            ExplanationPayload::SaliencyMap { map } => map,
            _ => unreachable!(),
        }
    }

    #[test]
    fn constant_model_gives_zero_map() {
        let img = GrayImage::filled(16, 16, 0.2);
        let m = |_: &GrayImage| vec![0.4, 0.6];
        let e = saliency_occlusion(&m, &img, 4, 2, "p", Exec::Sequential).unwrap();
        assert!(map_of(&e).pixels().iter().all(|&v| v == 0.0));
        assert_eq!((map_of(&e).width(), map_of(&e).height()), (16, 16));
    }

    #[test]
    fn quadrant_model_concentrates_saliency() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (w, h) = (32, 32);
        let pixels: Vec<f64> = (0..w * h)
            .map(|i| {
                if i % w < 16 && i / w < 16 {
                    1.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let img = GrayImage::from_pixels(w, h, pixels).unwrap();
        let quadrant_mean = |img: &GrayImage| {
            let mut s = 0.0;
            for y in 0..16 {
                for x in 0..16 {
                    s += img.get(x, y);
                }
            }
            let p = s / 256.0;
            vec![1.0 - p, p]
        };
        for exec in [Exec::Sequential, Exec::Parallel] {
            let e = saliency_occlusion(&quadrant_mean, &img, 4, 2, "p", exec).unwrap();
            let map = map_of(&e);
            let mut inside = 0.0;
            for y in 0..16 {
                for x in 0..16 {
                    inside += map.get(x, y);
                }
            }
            assert!(inside / map.sum() >= 0.7, "share {}", inside / map.sum());
        }
    }

    #[test]
    fn oversized_patch_rejected() {
        let img = GrayImage::filled(8, 8, 0.0);
        let m = |_: &GrayImage| vec![1.0];
        assert!(saliency_occlusion(&m, &img, 9, 1, "p", Exec::Sequential).is_err());
    }
}
