//! Speed commands for a mobile robot from predicted worker displacement.

use serde::{Deserialize, Serialize};

use super::IntentionError;

pub type Point = (f64, f64);

/// Default buffer around the robot corridor, in meters.
pub const DEFAULT_BUFFER_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    ProceedFast,
    Slow,
    Stop,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::ProceedFast => "proceed_fast",
            Command::Slow => "slow",
            Command::Stop => "stop",
        }
    }

    /// Larger is more cautious.
    pub fn caution(self) -> u8 {
        match self {
            Command::ProceedFast => 0,
            Command::Slow => 1,
            Command::Stop => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeZoneState {
    pub position: Point,
    pub displacement: Point,
    /// Corridor polygon vertices in order (either orientation).
    pub corridor: Vec<Point>,
    pub buffer: f64,
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
}

fn validate(state: &SafeZoneState) -> Result<(), IntentionError> {
    let finite = |p: &Point| p.0.is_finite() && p.1.is_finite();
    if state.corridor.len() < 3 {
        return Err(IntentionError::DegenerateCorridor(format!(
            "{} vertices",
            state.corridor.len()
        )));
    }
    if !state.corridor.iter().all(finite) {
        return Err(IntentionError::DegenerateCorridor(
            "non-finite vertex".into(),
        ));
    }
    if polygon_area(&state.corridor).abs() < 1e-12 {
        return Err(IntentionError::DegenerateCorridor("zero area".into()));
    }
    if !finite(&state.position) || !finite(&state.displacement) {
        return Err(IntentionError::InvalidInput(
            "position and displacement must be finite".into(),
        ));
    }
    if !(state.buffer >= 0.0 && state.buffer.is_finite()) {
        return Err(IntentionError::InvalidInput(format!(
            "buffer {} must be a finite nonnegative number",
            state.buffer
        )));
    }
    Ok(())
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection, touching included.
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Even-odd point-in-polygon test for the interior.
fn inside(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut c = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            c = !c;
        }
    }
    c
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// Shortest distance between the predicted path and the corridor, zero when
/// they touch or overlap.
pub fn path_corridor_distance(state: &SafeZoneState) -> Result<f64, IntentionError> {
    validate(state)?;
    let start = state.position;
    let end = (
        start.0 + state.displacement.0,
        start.1 + state.displacement.1,
    );
    let poly = &state.corridor;
    if inside(start, poly) || inside(end, poly) {
        return Ok(0.0);
    }
    let n = poly.len();
    Ok((0..n)
        .map(|i| segment_distance(start, end, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min))
}

/// Stop when the path from the worker's position to the predicted end point
/// reaches the corridor, slow when it comes within the buffer (boundary
/// included), otherwise proceed fast.
pub fn safe_zone_command(state: &SafeZoneState) -> Result<Command, IntentionError> {
    let d = path_corridor_distance(state)?;
    Ok(if d <= 0.0 {
        Command::Stop
    } else if d <= state.buffer {
        Command::Slow
    } else {
        Command::ProceedFast
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor() -> Vec<Point> {
        vec![(0.0, 0.0), (10.0, 0.0), (10.0, 2.0), (0.0, 2.0)]
    }

    fn state(position: Point, displacement: Point, buffer: f64) -> SafeZoneState {
        SafeZoneState {
            position,
            displacement,
            corridor: corridor(),
            buffer,
        }
    }

    #[test]
    fn crossing_path_stops() {
        assert_eq!(
            safe_zone_command(&state((5.0, 5.0), (0.0, -10.0), 1.0)).unwrap(),
            Command::Stop
        );
        assert_eq!(
            safe_zone_command(&state((5.0, 1.0), (0.0, 0.0), 1.0)).unwrap(),
            Command::Stop
        );
    }

    #[test]
    fn far_and_still_proceeds() {
        assert_eq!(
            safe_zone_command(&state((5.0, 12.0), (0.0, 0.0), 1.0)).unwrap(),
            Command::ProceedFast
        );
    }

    #[test]
    fn buffer_boundary_is_slow() {
        // Endpoint lands exactly 1 m above the corridor top edge.
        assert_eq!(
            safe_zone_command(&state((5.0, 5.0), (0.0, -2.0), 1.0)).unwrap(),
            Command::Slow
        );
        assert_eq!(
            safe_zone_command(&state((5.0, 5.0), (0.0, -1.5), 1.0)).unwrap(),
            Command::ProceedFast
        );
    }

    #[test]
    fn touching_edge_stops() {
        assert_eq!(
            safe_zone_command(&state((5.0, 4.0), (0.0, -2.0), 1.0)).unwrap(),
            Command::Stop
        );
    }

    #[test]
    fn degenerate_corridors_rejected() {
        let mut s = state((0.0, 5.0), (0.0, 0.0), 1.0);
        s.corridor = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)];
        assert!(matches!(
            safe_zone_command(&s),
            Err(IntentionError::DegenerateCorridor(_))
        ));
        s.corridor = vec![(0.0, 0.0), (1.0, 1.0)];
        assert!(safe_zone_command(&s).is_err());
    }
}
