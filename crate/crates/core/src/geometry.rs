//! Geometric and colorimetric primitives shared by the generators and the
//! judging engine.
//!
//! Hit tests are boundary-inclusive. Color distances use the "redmean"
//! weighted Euclidean form
//!
//! ```text
//! r̄ = (r1 + r2) / 2
//! d = sqrt((2 + r̄/256)·ΔR² + 4·ΔG² + (2 + (255 − r̄)/256)·ΔB²)
//! ```
//!
//! which is frozen here so that contrast thresholds are reproducible.

use rand::Rng;
use serde::ser::SerializeTuple;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Lower bound of the HSV saturation/value range used by [`sample_color_hsv`].
pub const HSV_SV_MIN: f64 = 0.25;
/// Upper bound of the HSV saturation/value range used by [`sample_color_hsv`].
pub const HSV_SV_MAX: f64 = 1.0;
/// Rejection-sampling budget before falling back to the best candidate.
pub const COLOR_TRIALS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(from = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn midpoint(&self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

/// Writes integral values as JSON integers so pixel coordinates read `672`
/// rather than `672.0`.
pub fn serialize_number<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(v as i64)
    } else {
        s.serialize_f64(v)
    }
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_number(self.0, s)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&Num(self.x))?;
        t.serialize_element(&Num(self.y))?;
        t.end()
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(4)?;
        for v in [self.x1, self.y1, self.x2, self.y2] {
            t.serialize_element(&Num(v))?;
        }
        t.end()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}


impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Axis-aligned rectangle in pixel space, `x1 <= x2` and `y1 <= y2`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "[f64; 4]")]
pub struct Rect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Rect {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let finite = [x1, y1, x2, y2].iter().all(|v| v.is_finite());
        if !finite || x1 > x2 || y1 > y2 {
            return Err(Error::InvalidGeometry(format!(
                "rect ({x1}, {y1}, {x2}, {y2}) is not ordered or not finite"
            )));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Builds a rect from two arbitrary corners.
    pub fn spanning(a: Point, b: Point) -> Self {
        Self {
            x1: a.x.min(b.x),
            y1: a.y.min(b.y),
            x2: a.x.max(b.x),
            y2: a.y.max(b.y),
        }
    }

    /// Square of half-size `r` centered on `p`.
    pub fn around(p: Point, r: f64) -> Self {
        Self {
            x1: p.x - r,
            y1: p.y - r,
            x2: p.x + r,
            y2: p.y + r,
        }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_rect(p, self)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x1 <= other.x1 && self.y1 <= other.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection with `bounds`; `None` when they do not overlap.
    pub fn clip_to(&self, bounds: &Rect) -> Option<Rect> {
        let r = Rect {
            x1: self.x1.max(bounds.x1),
            y1: self.y1.max(bounds.y1),
            x2: self.x2.min(bounds.x2),
            y2: self.y2.min(bounds.y2),
        };
        (r.x1 <= r.x2 && r.y1 <= r.y2).then_some(r)
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x1, self.y1),
            Point::new(self.x2, self.y1),
            Point::new(self.x2, self.y2),
            Point::new(self.x1, self.y2),
        ]
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon {
            vertices: self.corners().to_vec(),
        }
    }
}

impl TryFrom<[f64; 4]> for Rect {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}


/// Simple polygon with at least three vertices and no consecutive duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let mut vertices: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !p.is_finite() {
                return Err(Error::InvalidGeometry("polygon vertex is not finite".into()));
            }
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Absolute shoelace area.
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).abs()
    }

    pub fn bounds(&self) -> Rect {
        let mut r = Rect {
            x1: f64::INFINITY,
            y1: f64::INFINITY,
            x2: f64::NEG_INFINITY,
            y2: f64::NEG_INFINITY,
        };
        for p in &self.vertices {
            r.x1 = r.x1.min(p.x);
            r.y1 = r.y1.min(p.y);
            r.x2 = r.x2.max(p.x);
            r.y2 = r.y2.max(p.y);
        }
        r
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, self)
    }
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

/// Signed shoelace area (positive for counter-clockwise in y-up coordinates).
pub fn shoelace(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const BLACK: Rgb = Rgb::new(0, 0, 0);
    pub const WHITE: Rgb = Rgb::new(255, 255, 255);

    /// HSV to RGB, `h` in degrees, `s` and `v` in [0, 1].
    pub fn from_hsv(h: f64, s: f64, v: f64) -> Self {
        let h = h.rem_euclid(360.0);
        let c = v * s;
        let sector = h / 60.0;
        let x = c * (1.0 - ((sector % 2.0) - 1.0).abs());
        let (r, g, b) = match sector as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        let to_u8 = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb::new(to_u8(r), to_u8(g), to_u8(b))
    }

    pub fn to_array(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

impl From<[u8; 3]> for Rgb {
    fn from(v: [u8; 3]) -> Self {
        Rgb::new(v[0], v[1], v[2])
    }
}

impl From<Rgb> for [u8; 3] {
    fn from(c: Rgb) -> Self {
        c.to_array()
    }
}

pub fn point_in_rect(p: Point, r: &Rect) -> bool {
    r.x1 <= p.x && p.x <= r.x2 && r.y1 <= p.y && p.y <= r.y2
}

/// Even-odd containment; points on an edge or vertex count as inside.
pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    let v = poly.vertices();
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let scale = (b.x - a.x).abs().max((b.y - a.y).abs()).max(1.0);
    if cross.abs() > 1e-9 * scale {
        return false;
    }
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Intersection area over the smaller of the two areas.
pub fn overlap_ratio(a: &Rect, b: &Rect) -> Result<f64> {
    let smaller = a.area().min(b.area());
    if smaller <= 0.0 {
        return Err(Error::InvalidGeometry(
            "overlap_ratio needs rects with positive area".into(),
        ));
    }
    Ok((a.intersection_area(b) / smaller).clamp(0.0, 1.0))
}

pub fn redmean_distance(c1: Rgb, c2: Rgb) -> f64 {
    let r_mean = (c1.r as f64 + c2.r as f64) / 2.0;
    let dr = c1.r as f64 - c2.r as f64;
    let dg = c1.g as f64 - c2.g as f64;
    let db = c1.b as f64 - c2.b as f64;
    ((2.0 + r_mean / 256.0) * dr * dr
        + 4.0 * dg * dg
        + (2.0 + (255.0 - r_mean) / 256.0) * db * db)
        .sqrt()
}

/// Outcome of [`sample_color_hsv`]. `fallback` is set when no candidate met
/// every constraint within [`COLOR_TRIALS`] draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledColor {
    pub color: Rgb,
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvRange {
    pub s: (f64, f64),
    pub v: (f64, f64),
}

impl Default for HsvRange {
    fn default() -> Self {
        Self {
            s: (HSV_SV_MIN, HSV_SV_MAX),
            v: (HSV_SV_MIN, HSV_SV_MAX),
        }
    }
}

pub fn sample_color_hsv<R: Rng + ?Sized>(rng: &mut R, constraints: &[(Rgb, f64)]) -> SampledColor {
    sample_color_hsv_in(rng, constraints, HsvRange::default())
}

/// Rejection sampler over HSV. The best fallback candidate is the one with the
/// largest worst-case slack against the constraints.
pub fn sample_color_hsv_in<R: Rng + ?Sized>(
    rng: &mut R,
    constraints: &[(Rgb, f64)],
    range: HsvRange,
) -> SampledColor {
    let mut best = None::<(Rgb, f64)>;
    for _ in 0..COLOR_TRIALS {
        let h = rng.gen_range(0.0..360.0);
        let s = uniform(rng, range.s);
        let v = uniform(rng, range.v);
        let color = Rgb::from_hsv(h, s, v);
        let slack = constraints
            .iter()
            .map(|&(other, min)| redmean_distance(color, other) - min)
            .fold(f64::INFINITY, f64::min);
        if slack >= 0.0 {
            return SampledColor {
                color,
                fallback: false,
            };
        }
        if best.is_none_or(|(_, s)| slack > s) {
            best = Some((color, slack));
        }
    }
    SampledColor {
        color: best.map(|(c, _)| c).unwrap_or(Rgb::BLACK),
        fallback: true,
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rect(x1: f64, y1: f64, x2: f64, y2: f64) -> Rect {
        Rect::new(x1, y1, x2, y2).unwrap()
    }

    fn poly(pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    #[test]
    fn integral_coordinates_serialize_as_integers() {
        let p = Point::new(672.0, 608.5);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[672,608.5]");
        let r = rect(548.0, 484.0, 796.0, 732.0);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[548,484,796,732]");
        let back: Rect = serde_json::from_str("[548,484,796,732]").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rect_hits() {
        let r = rect(0.0, 0.0, 10.0, 10.0);
        assert!(point_in_rect(Point::new(5.0, 5.0), &r));
        assert!(point_in_rect(Point::new(10.0, 10.0), &r));
        assert!(!point_in_rect(Point::new(11.0, 5.0), &r));
    }

    #[test]
    fn rect_rejects_inverted_corners() {
        assert!(Rect::new(5.0, 0.0, 1.0, 1.0).is_err());
        assert!(Rect::new(0.0, 0.0, f64::NAN, 1.0).is_err());
    }

    // Four axis-aligned ray casts; all must agree for a point strictly off
    // every edge.
    fn ray_cast_oracle(p: Point, poly: &Polygon) -> bool {
        let v = poly.vertices();
        let n = v.len();
        let mut votes = [0usize; 4];
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x > p.x {
                    votes[0] += 1;
                } else {
                    votes[1] += 1;
                }
            }
            if (a.x > p.x) != (b.x > p.x) {
                let y = a.y + (p.x - a.x) * (b.y - a.y) / (b.x - a.x);
                if y > p.y {
                    votes[2] += 1;
                } else {
                    votes[3] += 1;
                }
            }
        }
        let parities: Vec<bool> = votes.iter().map(|c| c % 2 == 1).collect();
        assert!(parities.iter().all(|&q| q == parities[0]), "ray casts disagree");
        parities[0]
    }

    #[test]
    fn polygon_hits() {
        let square = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        assert!(point_in_polygon(Point::new(1.0, 1.0), &square));
        assert!(!point_in_polygon(Point::new(3.0, 1.0), &square));
        assert!(point_in_polygon(Point::new(2.0, 1.0), &square));

        // L-shape: the notch is the upper-right quadrant of the 3x3 box.
        let l_shape = poly(&[
            (0.0, 0.0),
            (0.7, 0.0),
            (0.7, 2.3),
            (3.0, 2.3),
            (3.0, 3.0),
            (0.0, 3.0),
        ]);
        let p = Point::new(1.0, 1.0);
        assert!(!ray_cast_oracle(p, &l_shape));
        assert!(!point_in_polygon(p, &l_shape));
        assert!(point_in_polygon(Point::new(0.3, 1.0), &l_shape));
    }

    #[test]
    fn polygon_drops_duplicates_and_rejects_degenerate() {
        let p = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 3);
        assert!(Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn overlap_examples() {
        let a = rect(0.0, 0.0, 10.0, 10.0);
        assert_eq!(overlap_ratio(&a, &rect(20.0, 20.0, 30.0, 30.0)).unwrap(), 0.0);
        assert_eq!(overlap_ratio(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_ratio(&a, &rect(5.0, 5.0, 15.0, 15.0)).unwrap(), 0.25);
        assert!(overlap_ratio(&a, &rect(1.0, 1.0, 1.0, 5.0)).is_err());
    }

    #[test]
    fn redmean_examples() {
        assert_eq!(redmean_distance(Rgb::BLACK, Rgb::BLACK), 0.0);
        // r̄ = 127.5: (2 + 127.5/256 + 4 + 2 + 127.5/256) · 255² = 8.99609375 · 65025
        let expected = (8.996_093_75_f64 * 65_025.0).sqrt();
        let d = redmean_distance(Rgb::BLACK, Rgb::WHITE);
        assert!((d - expected).abs() < 1e-9);
        assert!((d - 764.83).abs() < 0.01);
    }

    #[test]
    fn hsv_sampling_honours_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bg = Rgb::new(240, 240, 240);
        for _ in 0..10_000 {
            let s = sample_color_hsv(&mut rng, &[(bg, 100.0)]);
            assert!(!s.fallback);
            assert!(redmean_distance(s.color, bg) >= 100.0);
            let o = sample_color_hsv(&mut rng, &[(s.color, 60.0)]);
            assert!(!o.fallback);
            assert!(redmean_distance(o.color, s.color) >= 60.0);
        }
    }

    #[test]
    fn hsv_sampling_flags_unsatisfiable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_color_hsv(&mut rng, &[(Rgb::BLACK, 2_000.0)]);
        assert!(s.fallback);
    }

    #[test]
    fn hsv_conversion_primaries() {
        assert_eq!(Rgb::from_hsv(0.0, 1.0, 1.0), Rgb::new(255, 0, 0));
        assert_eq!(Rgb::from_hsv(120.0, 1.0, 1.0), Rgb::new(0, 255, 0));
        assert_eq!(Rgb::from_hsv(240.0, 1.0, 1.0), Rgb::new(0, 0, 255));
        assert_eq!(Rgb::from_hsv(0.0, 0.0, 0.5), Rgb::new(128, 128, 128));
    }

    fn arb_rect() -> impl Strategy<Value = Rect> {
        (0.0..100.0f64, 0.0..100.0f64, 0.5..60.0f64, 0.5..60.0f64)
            .prop_map(|(x, y, w, h)| rect(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn rect_and_polygon_hit_tests_agree(r in arb_rect(), px in -10.0..170.0f64, py in -10.0..170.0f64) {
            let p = Point::new(px, py);
            prop_assert_eq!(point_in_rect(p, &r), point_in_polygon(p, &r.to_polygon()));
        }

        #[test]
        fn rect_boundary_points_agree(r in arb_rect(), t in 0.0..1.0f64, side in 0usize..4) {
            let c = r.corners();
            let (a, b) = (c[side], c[(side + 1) % 4]);
            let p = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            prop_assert!(point_in_rect(p, &r));
            prop_assert!(point_in_polygon(p, &r.to_polygon()));
        }

        #[test]
        fn overlap_symmetric_and_containment(a in arb_rect(), b in arb_rect()) {
            let ab = overlap_ratio(&a, &b).unwrap();
            let ba = overlap_ratio(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            let (small, big) = if a.area() <= b.area() { (a, b) } else { (b, a) };
            prop_assert_eq!(ab == 1.0, big.contains_rect(&small));
        }

        #[test]
        fn redmean_symmetric_and_discerning(a in any::<[u8; 3]>(), b in any::<[u8; 3]>()) {
            let (a, b) = (Rgb::from(a), Rgb::from(b));
            prop_assert_eq!(redmean_distance(a, b), redmean_distance(b, a));
            prop_assert_eq!(redmean_distance(a, b) == 0.0, a == b);
        }
    }
}
