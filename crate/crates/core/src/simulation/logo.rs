//! Parametric rendering of a fixed logo glyph with print defects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::types::{GrayImage, Provenance, Sample, SampleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defect {
    Good,
    DoublePrint,
    InterruptedPrint,
}

impl Defect {
    pub const ALL: [Defect; 3] = [Defect::Good, Defect::DoublePrint, Defect::InterruptedPrint];

    pub fn as_str(self) -> &'static str {
        match self {
            Defect::Good => "good",
            Defect::DoublePrint => "double_print",
            Defect::InterruptedPrint => "interrupted_print",
        }
    }

    pub fn is_defect(self) -> bool {
        self != Defect::Good
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogoSceneParams {
    pub width: usize,
    pub height: usize,
    /// Stroke width in pixels.
    pub thickness: f64,
    /// Standard deviation of additive pixel noise, in `[0, 0.2]`.
    pub noise: f64,
    pub defect: Defect,
    /// Shift of the second stroke for double prints, in pixels along x and y.
    pub offset_px: f64,
    /// Intensity of the second stroke for double prints.
    pub ghost_intensity: f64,
    /// Fraction of the path arc length removed for interrupted prints.
    pub gap_fraction: f64,
    /// Maximum random placement shift of the whole glyph, in pixels.
    pub jitter_px: f64,
    pub seed: u64,
}

impl Default for LogoSceneParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            thickness: 2.0,
            noise: 0.0,
            defect: Defect::Good,
            offset_px: 3.0,
            ghost_intensity: 0.8,
            gap_fraction: 0.3,
            jitter_px: 0.0,
            seed: 0,
        }
    }
}

impl LogoSceneParams {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::InvalidParams(m.to_string()));
        if self.width < 8 || self.height < 8 {
            return bad("image must be at least 8x8");
        }
        if !(self.thickness > 0.0) {
            return bad("thickness must be positive");
        }
        if !(0.0..=0.2).contains(&self.noise) {
            return bad("noise stddev must be in [0, 0.2]");
        }
        if self.defect == Defect::DoublePrint && !(self.offset_px >= 1.0) {
            return bad("double print offset must be at least 1 px");
        }
        if self.defect == Defect::InterruptedPrint
            && !(self.gap_fraction > 0.0 && self.gap_fraction < 1.0)
        {
            return bad("gap fraction must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.ghost_intensity) || !(self.jitter_px >= 0.0) {
            return bad("ghost intensity must be in [0,1] and jitter nonnegative");
        }
        Ok(())
    }
}

type Point = (f64, f64);

/// The glyph as strokes in unit coordinates: an outer ring and three waves.
pub fn glyph_strokes() -> Vec<Vec<Point>> {
    let ring: Vec<Point> = (0..=32)
        .map(|i| {
            let a = i as f64 / 32.0 * std::f64::consts::TAU;
            (0.5 + 0.38 * a.cos(), 0.5 + 0.38 * a.sin())
        })
        .collect();
    let wave = |y0: f64| -> Vec<Point> {
        (0..=12)
            .map(|i| {
                let t = i as f64 / 12.0;
                (
                    0.27 + 0.46 * t,
                    y0 + 0.04 * (t * std::f64::consts::TAU * 1.5).sin(),
                )
            })
            .collect()
    };
    vec![ring, wave(0.36), wave(0.5), wave(0.64)]
}

fn path_length(strokes: &[Vec<Point>]) -> f64 {
    strokes
        .iter()
        .flat_map(|s| s.windows(2))
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum()
}

/// Removes the arc-length interval `[start, start + len)` measured along the
/// concatenated strokes, splitting strokes where needed.
fn cut_gap(strokes: &[Vec<Point>], start: f64, len: f64) -> Vec<Vec<Point>> {
    let end = start + len;
    let mut out = Vec::new();
    let mut pos = 0.0;
    for stroke in strokes {
        let mut current: Vec<Point> = Vec::new();
        for w in stroke.windows(2) {
            let (a, b) = (w[0], w[1]);
            let seg = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            let (s0, s1) = (pos, pos + seg);
            let lerp = |s: f64| {
                let t = if seg > 0.0 { (s - s0) / seg } else { 0.0 };
                (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
            };
            // Visible parts of this segment: [s0, min(s1,start)] and [max(s0,end), s1].
            if s0 < start {
                if current.is_empty() {
                    current.push(a);
                }
                current.push(lerp(s1.min(start)));
                if s1 > start {
                    out.push(std::mem::take(&mut current));
                }
            }
            if s1 > end {
                let from = s0.max(end);
                if current.is_empty() {
                    current.push(lerp(from));
                }
                current.push(b);
            }
            pos = s1;
        }
        if current.len() >= 2 {
            out.push(current);
        }
    }
    out
}

fn stamp(
    canvas: &mut [f64],
    width: usize,
    height: usize,
    strokes: &[Vec<Point>],
    thickness: f64,
    intensity: f64,
) {
    let half = thickness / 2.0;
    for stroke in strokes {
        for w in stroke.windows(2) {
            let (a, b) = (w[0], w[1]);
            let x0 = (a.0.min(b.0) - half - 1.0).floor().max(0.0) as usize;
            let x1 = ((a.0.max(b.0) + half + 1.0).ceil().max(0.0) as usize).min(width - 1);
            let y0 = (a.1.min(b.1) - half - 1.0).floor().max(0.0) as usize;
            let y1 = ((a.1.max(b.1) + half + 1.0).ceil().max(0.0) as usize).min(height - 1);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let t = if len2 > 0.0 {
                        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let d = ((px - a.0 - t * dx).powi(2) + (py - a.1 - t * dy).powi(2)).sqrt();
                    let cover = (half + 0.5 - d).clamp(0.0, 1.0) * intensity;
                    let cell = &mut canvas[y * width + x];
                    if cover > *cell {
                        *cell = cover;
                    }
                }
            }
        }
    }
}

/// Renders the glyph. Identical parameters give identical pixels.
pub fn render_logo(params: &LogoSceneParams) -> Result<GrayImage, SimulationError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (w, h) = (params.width, params.height);
    let (jx, jy) = if params.jitter_px > 0.0 {
        (
            rng.random_range(-params.jitter_px..=params.jitter_px),
            rng.random_range(-params.jitter_px..=params.jitter_px),
        )
    } else {
        (0.0, 0.0)
    };
    let mut strokes: Vec<Vec<Point>> = glyph_strokes()
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|(x, y)| (x * w as f64 + jx, y * h as f64 + jy))
                .collect()
        })
        .collect();
    // Drawn before any defect branch so every defect consumes the same stream.
    let gap_position: f64 = rng.random();
    if params.defect == Defect::InterruptedPrint {
        let total = path_length(&strokes);
        let gap = params.gap_fraction * total;
        strokes = cut_gap(&strokes, gap_position * (total - gap), gap);
    }
    let mut canvas = vec![0.0; w * h];
    stamp(&mut canvas, w, h, &strokes, params.thickness, 1.0);
    if params.defect == Defect::DoublePrint {
        let ghost: Vec<Vec<Point>> = strokes
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&(x, y)| (x + params.offset_px, y + params.offset_px))
                    .collect()
            })
            .collect();
        stamp(
            &mut canvas,
            w,
            h,
            &ghost,
            params.thickness,
            params.ghost_intensity,
        );
    }
    if params.noise > 0.0 {
        let normal = Normal::new(0.0, params.noise)
            .map_err(|e| SimulationError::InvalidParams(e.to_string()))?;
        canvas
            .iter_mut()
            .for_each(|p| *p += normal.sample(&mut rng));
    }
    GrayImage::from_clamped(w, h, canvas).map_err(|e| SimulationError::InvalidParams(e.to_string()))
}

/// Renders a logo and wraps it as a synthetic image sample whose features
/// come from [`super::image_features`].
pub fn generate_logo_sample(
    id: &str,
    params: &LogoSceneParams,
) -> Result<(Sample, GrayImage), SimulationError> {
    let img = render_logo(params)?;
    let sample = Sample::new(
        id,
        SampleKind::Image,
        super::image_features(&img),
        Provenance::Synthetic,
    )
    .and_then(|s| s.with_label(params.defect.as_str()))
    .map_err(|e| SimulationError::InvalidParams(e.to_string()))?;
    Ok((sample, img))
}
