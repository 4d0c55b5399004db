//! Circular arithmetic on movement directions.
//!
//! Directions are degrees in the half-open range (-180, 180], measured from
//! the positive x-axis. Averages are taken on the unit-vector embedding so the
//! +-180 seam has no effect on the result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted vector sums shorter than this are treated as undefined.
pub const ZERO_RESULTANT: f64 = 1e-12;

/// Displacements shorter than this do not define a heading.
pub const STATIONARY: f64 = 1e-12;

/// Map any finite angle in degrees into (-180, 180].
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectionDeg(f64);

impl DirectionDeg {
    pub fn new(deg: f64) -> Self {
        DirectionDeg(normalize_deg(deg))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn to_unit(self) -> UnitVec2 {
        let (s, c) = self.radians().sin_cos();
        UnitVec2 { x: c, y: s }
    }

    pub fn rotated(self, by_deg: f64) -> Self {
        DirectionDeg::new(self.0 + by_deg)
    }

    /// Heading of the vector `(x, y)`, or `None` when it is (numerically) zero.
    pub fn from_vector(x: f64, y: f64) -> Option<Self> {
        if x.hypot(y) < STATIONARY {
            None
        } else {
            Some(DirectionDeg::new(y.atan2(x).to_degrees()))
        }
    }
}

impl std::fmt::Display for DirectionDeg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec2 {
    pub x: f64,
    pub y: f64,
}

impl UnitVec2 {
    /// Normalizes `(x, y)`; `None` for zero-length input.
    pub fn try_new(x: f64, y: f64) -> Option<Self> {
        let n = x.hypot(y);
        if n < ZERO_RESULTANT || !n.is_finite() {
            None
        } else {
            Some(UnitVec2 { x: x / n, y: y / n })
        }
    }

    pub fn angle(self) -> DirectionDeg {
        DirectionDeg::new(self.y.atan2(self.x).to_degrees())
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn step(self, dir: DirectionDeg, distance: f64) -> Point {
        let u = dir.to_unit();
        Point::new(self.x + distance * u.x, self.y + distance * u.y)
    }
}

/// Shortest angular distance in degrees, in [0, 180].
pub fn dist_dir(a: DirectionDeg, b: DirectionDeg) -> f64 {
    let d = (a.0 - b.0).abs();
    if d <= 180.0 {
        d
    } else {
        360.0 - d
    }
}

/// Weighted mean direction via the unit-vector embedding.
///
/// When every positively weighted input is the same direction that direction
/// is returned unchanged, so pure combinations reproduce their input exactly.
/// Weights must be nonnegative; the slices are zipped.
pub fn circular_mean(dirs: &[DirectionDeg], weights: &[f64]) -> Result<DirectionDeg> {
    weighted_mean(dirs.iter().copied().zip(weights.iter().copied()))
}

/// Iterator form of [`circular_mean`].
pub fn weighted_mean<I>(items: I) -> Result<DirectionDeg>
where
    I: IntoIterator<Item = (DirectionDeg, f64)>,
{
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut first: Option<DirectionDeg> = None;
    let mut uniform = true;
    let mut total = 0.0;
    for (d, w) in items {
        if w <= 0.0 {
            continue;
        }
        match first {
            None => first = Some(d),
            Some(f) if f != d => uniform = false,
            _ => {}
        }
        let u = d.to_unit();
        sx += w * u.x;
        sy += w * u.y;
        total += w;
    }
    let first = first.ok_or(Error::ZeroResultant)?;
    if uniform {
        return Ok(first);
    }
    // Relative test so the threshold does not depend on weight scale.
    if sx.hypot(sy) < ZERO_RESULTANT * total.max(1.0) {
        return Err(Error::ZeroResultant);
    }
    Ok(DirectionDeg::new(sy.atan2(sx).to_degrees()))
}

/// Per-agent headings from per-agent position series.
///
/// Entry `t` of the output is the heading of `P[t+1] - P[t]`, so each series
/// is one shorter than its positions. A stationary step keeps the previous
/// heading; a stationary first step is 0.
pub fn directions_from_positions(positions: &[Vec<Point>]) -> Result<Vec<Vec<DirectionDeg>>> {
    positions
        .iter()
        .enumerate()
        .map(|(agent, series)| {
            if series.len() < 2 {
                return Err(Error::TooShort(format!(
                    "agent index {agent} has {} position(s), need at least 2",
                    series.len()
                )));
            }
            let mut out = Vec::with_capacity(series.len() - 1);
            let mut prev = DirectionDeg::new(0.0);
            for w in series.windows(2) {
                let d = DirectionDeg::from_vector(w[1].x - w[0].x, w[1].y - w[0].y).unwrap_or(prev);
                out.push(d);
                prev = d;
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(x: f64) -> DirectionDeg {
        DirectionDeg::new(x)
    }

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(180.0), 180.0);
        assert_eq!(normalize_deg(540.0), 180.0);
        assert_eq!(normalize_deg(-190.0), 170.0);
        assert_eq!(normalize_deg(0.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let v = normalize_deg(rng.gen_range(-5000.0..5000.0));
            assert!(v > -180.0 && v <= 180.0);
        }
    }

    #[test]
    fn dist_dir_examples() {
        assert_abs_diff_eq!(dist_dir(d(-179.0), d(180.0)), 1.0, epsilon = 1e-12);
        assert_eq!(dist_dir(d(10.0), d(10.0)), 0.0);
        assert_eq!(dist_dir(d(90.0), d(-90.0)), 180.0);
    }

    #[test]
    fn dist_dir_is_a_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = d(rng.gen_range(-180.0..180.0));
            let b = d(rng.gen_range(-180.0..180.0));
            let c = d(rng.gen_range(-180.0..180.0));
            let ab = dist_dir(a, b);
            assert!((0.0..=180.0).contains(&ab));
            assert_eq!(ab, dist_dir(b, a));
            assert_eq!(dist_dir(a, a), 0.0);
            if a != b {
                assert!(ab > 0.0);
            }
            assert!(dist_dir(a, c) <= ab + dist_dir(b, c) + 1e-9);
        }
    }

    #[test]
    fn circular_mean_examples() {
        assert_abs_diff_eq!(
            circular_mean(&[d(0.0), d(90.0)], &[1.0, 1.0]).unwrap().degrees(),
            45.0,
            epsilon = 1e-12
        );
        let seam = circular_mean(&[d(170.0), d(-170.0)], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(dist_dir(seam, d(180.0)), 0.0, epsilon = 1e-9);

        // Hand oracle: atan2 of the explicitly summed unit vectors.
        let (sx, sy) = [(30.0f64, 1.0), (60.0, 2.0), (90.0, 1.0)]
            .iter()
            .fold((0.0, 0.0), |(x, y), (a, w)| {
                (x + w * a.to_radians().cos(), y + w * a.to_radians().sin())
            });
        let expected = sy.atan2(sx).to_degrees();
        let got = circular_mean(&[d(30.0), d(60.0), d(90.0)], &[1.0, 2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(got.degrees(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(got.degrees(), 60.0, epsilon = 1e-9);
    }

    #[test]
    fn circular_mean_errors() {
        assert!(matches!(
            circular_mean(&[d(0.0), d(180.0)], &[1.0, 1.0]),
            Err(Error::ZeroResultant)
        ));
        assert!(matches!(circular_mean(&[d(10.0)], &[0.0]), Err(Error::ZeroResultant)));
    }

    #[test]
    fn singleton_mean_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = d(rng.gen_range(-180.0..180.0));
            assert_eq!(circular_mean(&[a], &[rng.gen_range(0.1..5.0)]).unwrap(), a);
            assert_eq!(circular_mean(&[a, d(3.0)], &[1.0, 0.0]).unwrap(), a);
        }
    }

    #[test]
    fn circular_mean_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let n = rng.gen_range(2..6);
            let dirs: Vec<_> = (0..n).map(|_| d(rng.gen_range(-90.0..90.0))).collect();
            let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
            let theta = rng.gen_range(-720.0..720.0);
            let base = circular_mean(&dirs, &ws).unwrap();
            let rot: Vec<_> = dirs.iter().map(|x| x.rotated(theta)).collect();
            let got = circular_mean(&rot, &ws).unwrap();
            assert!(dist_dir(got, base.rotated(theta)) < 1e-9);
        }
    }

    #[test]
    fn directions_examples() {
        let p = |x, y| Point::new(x, y);
        let dirs = directions_from_positions(&[
            vec![p(0.0, 0.0), p(1.0, 0.0)],
            vec![p(0.0, 0.0), p(0.0, 1.0)],
            vec![p(0.0, 0.0), p(-1.0, -1.0)],
        ])
        .unwrap();
        assert_eq!(dirs[0][0].degrees(), 0.0);
        assert_eq!(dirs[1][0].degrees(), 90.0);
        assert_abs_diff_eq!(dirs[2][0].degrees(), (-1.0f64).atan2(-1.0).to_degrees());
        assert_abs_diff_eq!(dirs[2][0].degrees(), -135.0, epsilon = 1e-12);
    }

    #[test]
    fn directions_stationary_and_short() {
        let p = |x, y| Point::new(x, y);
        let dirs = directions_from_positions(&[vec![p(0.0, 0.0), p(0.0, 0.0), p(0.0, 2.0), p(0.0, 2.0)]]).unwrap();
        assert_eq!(
            dirs[0].iter().map(|x| x.degrees()).collect::<Vec<_>>(),
            vec![0.0, 90.0, 90.0]
        );
        assert!(matches!(
            directions_from_positions(&[vec![p(0.0, 0.0)]]),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn reintegration_reproduces_headings() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pos = vec![Point::new(0.0, 0.0)];
        for _ in 0..200 {
            let last = *pos.last().unwrap();
            pos.push(Point::new(
                last.x + rng.gen_range(-3.0..3.0),
                last.y + rng.gen_range(-3.0..3.0),
            ));
        }
        let dirs = directions_from_positions(&[pos.clone()]).unwrap();
        let mut unit = vec![Point::new(0.0, 0.0)];
        for h in &dirs[0] {
            let last = *unit.last().unwrap();
            unit.push(last.step(*h, 1.0));
        }
        let again = directions_from_positions(&[unit]).unwrap();
        for (a, b) in dirs[0].iter().zip(&again[0]) {
            assert!(dist_dir(*a, *b) < 1e-9);
        }
    }
}
