//! Structural similarity and nearest-labeled-image hints.

use serde::{Deserialize, Serialize};

use super::{Explanation, ExplanationPayload, XaiError};
use crate::exec::Exec;
use crate::types::GrayImage;

/// Window side and stabilizing constants for intensities in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 8,
            c1: 1e-4,
            c2: 9e-4,
        }
    }
}

fn check(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<usize, XaiError> {
    if !a.same_dims(b) {
        return Err(XaiError::SizeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let win = p.window.min(a.width()).min(a.height());
    if win == 0 {
        return Err(XaiError::InvalidInput("empty image or window".into()));
    }
    Ok(win)
}

fn ssim_term(mx: f64, my: f64, vx: f64, vy: f64, cov: f64, p: &SsimParams) -> f64 {
    ((2.0 * mx * my + p.c1) * (2.0 * cov + p.c2)) / ((mx * mx + my * my + p.c1) * (vx + vy + p.c2))
}

struct Integral {
    w: usize,
    data: Vec<f64>,
}

impl Integral {
    fn build(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { w, data }
    }

    fn rect(&self, x: usize, y: usize, side: usize) -> f64 {
        let s = self.w + 1;
        let (x1, y1) = (x + side, y + side);
        self.data[y1 * s + x1] - self.data[y * s + x1] - self.data[y1 * s + x]
            + self.data[y * s + x]
    }
}

/// Mean SSIM over every fully contained sliding window (stride 1), computed
/// from summed-area tables. Windows shrink to the image when it is smaller.
pub fn ssim(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64, XaiError> {
    let win = check(a, b, params)?;
    let (w, h) = (a.width(), a.height());
    let (pa, pb) = (a.pixels(), b.pixels());
    let sa = Integral::build(w, h, |i| pa[i]);
    let sb = Integral::build(w, h, |i| pb[i]);
    let saa = Integral::build(w, h, |i| pa[i] * pa[i]);
    let sbb = Integral::build(w, h, |i| pb[i] * pb[i]);
    let sab = Integral::build(w, h, |i| pa[i] * pb[i]);
    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - win {
        for x in 0..=w - win {
            let mx = sa.rect(x, y, win) / n;
            let my = sb.rect(x, y, win) / n;
            let vx = (saa.rect(x, y, win) / n - mx * mx).max(0.0);
            let vy = (sbb.rect(x, y, win) / n - my * my).max(0.0);
            let cov = sab.rect(x, y, win) / n - mx * my;
            total += ssim_term(mx, my, vx, vy, cov, params);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Direct per-window evaluation of the same quantity as [`ssim`].
pub fn ssim_direct(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<f64, XaiError> {
    let win = check(a, b, params)?;
    let (w, h) = (a.width(), a.height());
    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - win {
        for x0 in 0..=w - win {
            let cells: Vec<(f64, f64)> = (y0..y0 + win)
                .flat_map(|y| (x0..x0 + win).map(move |x| (x, y)))
                .map(|(x, y)| (a.get(x, y), b.get(x, y)))
                .collect();
            let mx = cells.iter().map(|c| c.0).sum::<f64>() / n;
            let my = cells.iter().map(|c| c.1).sum::<f64>() / n;
            let vx = cells.iter().map(|c| (c.0 - mx).powi(2)).sum::<f64>() / n;
            let vy = cells.iter().map(|c| (c.1 - my).powi(2)).sum::<f64>() / n;
            let cov = cells.iter().map(|c| (c.0 - mx) * (c.1 - my)).sum::<f64>() / n;
            total += ssim_term(mx, my, vx, vy, cov, params);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub sample_id: String,
    pub label: String,
    pub image: GrayImage,
}

/// Finds the most similar labeled image. The earliest entry wins ties.
pub fn nearest_hint(
    image: &GrayImage,
    gallery: &[GalleryEntry],
    prediction_ref: &str,
    exec: Exec,
) -> Result<Explanation, XaiError> {
    if gallery.is_empty() {
        return Err(XaiError::EmptyGallery);
    }
    let params = SsimParams::default();
    let scores: Vec<Result<f64, XaiError>> = exec.map(gallery, |g| ssim(image, &g.image, &params));
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        let s = s?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (i, similarity) = best.expect("gallery is non-empty");
    Ok(Explanation::new(
        format!("xnn-{prediction_ref}"),
        prediction_ref,
        ExplanationPayload::NearestNeighbor {
            sample_ref: gallery[i].sample_id.clone(),
            label: gallery[i].label.clone(),
            similarity,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_pixels(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        let a = random(16, 16, 1);
        assert!((ssim(&a, &a, &SsimParams::default()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integral_matches_direct() {
        for seed in 0..5 {
            let (a, b) = (random(16, 12, seed), random(16, 12, seed + 100));
            let p = SsimParams::default();
            let fast = ssim(&a, &b, &p).unwrap();
            let slow = ssim_direct(&a, &b, &p).unwrap();
            assert!((fast - slow).abs() < 1e-9, "{fast} {slow}");
        }
    }

    #[test]
    fn symmetric_and_bounded() {
        let (a, b) = (random(10, 10, 3), random(10, 10, 4));
        let p = SsimParams::default();
        let ab = ssim(&a, &b, &p).unwrap();
        assert!((ab - ssim(&b, &a, &p).unwrap()).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn nearest_prefers_closest_and_earliest() {
        let q = random(16, 16, 7);
        let mut near = q.clone();
        near.set(0, 0, 1.0 - q.get(0, 0));
        let gallery = vec![
            GalleryEntry {
                sample_id: "far".into(),
                label: "good".into(),
                image: random(16, 16, 9),
            },
            GalleryEntry {
                sample_id: "a".into(),
                label: "double_print".into(),
                image: near.clone(),
            },
            GalleryEntry {
                sample_id: "b".into(),
                label: "good".into(),
                image: near,
            },
        ];
        let e = nearest_hint(&q, &gallery, "p", Exec::Parallel).unwrap();
        match e.payload {
            ExplanationPayload::NearestNeighbor {
                sample_ref, label, ..
            } => {
                assert_eq!(sample_ref, "a");
                assert_eq!(label, "double_print");
            }
            _ => unreachable!(),
        }
        assert!(matches!(
            nearest_hint(&q, &[], "p", Exec::Sequential),
            Err(XaiError::EmptyGallery)
        ));
    }

    #[test]
    fn mismatched_sizes_rejected() {
        assert!(ssim(&random(8, 8, 0), &random(9, 8, 0), &SsimParams::default()).is_err());
    }
}
