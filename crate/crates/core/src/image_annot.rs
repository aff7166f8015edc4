//! Region masks to grounding targets: outer contours by border following,
//! fixed-size boundary polygons, centers, and zig-zag trails for painting a
//! region over.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canvas::scene_rng;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Rgb};
use crate::raster::Canvas;
use crate::refexpr::Palette;

pub const DEFAULT_BOUNDARY_POINTS: usize = 20;

/// Binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Treats out-of-range coordinates as background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight pixel-edge bounds of the foreground.
    pub fn bounds(&self) -> Option<Rect> {
        let mut r: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    let b = r.get_or_insert((x, y, x, y));
                    b.0 = b.0.min(x);
                    b.1 = b.1.min(y);
                    b.2 = b.2.max(x);
                    b.3 = b.3.max(y);
                }
            }
        }
        r.map(|(x1, y1, x2, y2)| Rect {
            x1: x1 as f64,
            y1: y1 as f64,
            x2: (x2 + 1) as f64,
            y2: (y2 + 1) as f64,
        })
    }

    /// Single-channel or RGB PNG; any channel above 127 is foreground.
    pub fn from_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
            .to_luma8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|v| v > 127).collect();
        Ok(Self {
            width: w as usize,
            height: h as usize,
            data,
        })
    }

    /// COCO-style uncompressed RLE: `size` is `[height, width]` and `counts`
    /// alternate background/foreground runs in column-major order.
    pub fn from_rle(rle: &Rle) -> Result<Self> {
        let [h, w] = rle.size;
        let total: usize = rle.counts.iter().sum();
        if total != w * h {
            return Err(Error::schema("counts", format!("runs cover {total} pixels, mask has {}", w * h)));
        }
        let mut m = Self::new(w, h);
        let mut pos = 0;
        for (i, &run) in rle.counts.iter().enumerate() {
            if i % 2 == 1 {
                for p in pos..pos + run {
                    m.set(p / h, p % h, true);
                }
            }
            pos += run;
        }
        Ok(m)
    }

    pub fn to_rle(&self) -> Rle {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0;
        for x in 0..self.width {
            for y in 0..self.height {
                if self.get(x, y) != current {
                    counts.push(run);
                    run = 0;
                    current = !current;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle {
            size: [self.height, self.width],
            counts,
        }
    }

    /// Loads a `.png` mask or a `.json` RLE mask.
    pub fn load(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "png" => Self::from_png(path),
            "json" => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Self::from_rle(&serde_json::from_str(&text)?)
            }
            _ => Err(Error::InvalidArgument(format!("unsupported mask file {}", path.display()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub size: [usize; 2],
    pub counts: Vec<usize>,
}

/// Neighbor offsets `(dx, dy)` in counterclockwise order on screen,
/// starting east.
const DIRS: [(i64, i64); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

/// Pixel loop of one contour.
type Contour = Vec<(i64, i64)>;

fn dir_of(dx: i64, dy: i64) -> usize {
    DIRS.iter().position(|&d| d == (dx, dy)).expect("neighbor offset")
}

/// Outer border loops of all 8-connected foreground components, in pixel
/// coordinates, largest component first. Holes are traced but not returned.
pub fn extract_outer_contour(mask: &Mask) -> Result<Vec<Vec<(i64, i64)>>> {
    if mask.count() == 0 {
        return Err(Error::InvalidArgument("mask has no foreground".into()));
    }
    let (w, h) = (mask.width as i64, mask.height as i64);
    // Padded label image: 0 background, 1 unvisited foreground, ±NBD borders.
    let pw = w + 2;
    let mut f = vec![0i64; ((w + 2) * (h + 2)) as usize];
    let idx = |x: i64, y: i64| ((y + 1) * pw + (x + 1)) as usize;
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as usize, y as usize) {
                f[idx(x, y)] = 1;
            }
        }
    }
    let mut nbd = 1i64;
    let mut outer: Vec<Vec<(i64, i64)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = f[idx(x, y)];
            let start = if v == 1 && f[idx(x - 1, y)] == 0 {
                Some((x - 1, y, true))
            } else if v >= 1 && f[idx(x + 1, y)] == 0 {
                Some((x + 1, y, false))
            } else {
                None
            };
            let Some((x2, y2, is_outer)) = start else {
                continue;
            };
            nbd += 1;
            let lp = follow_border(&mut f, &idx, (x, y), (x2, y2), nbd);
            if is_outer {
                outer.push(lp);
            }
        }
    }
    let sizes = component_sizes(mask);
    let mut keyed: Vec<(usize, usize, Contour)> = outer
        .into_iter()
        .enumerate()
        .map(|(i, lp)| {
            let (sx, sy) = lp[0];
            (sizes[sy as usize * mask.width + sx as usize], i, lp)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, _, lp)| lp).collect())
}

/// One border-following pass from pixel `p0` whose 0-neighbor is `from`.
fn follow_border(
    f: &mut [i64],
    idx: &impl Fn(i64, i64) -> usize,
    p0: (i64, i64),
    from: (i64, i64),
    nbd: i64,
) -> Vec<(i64, i64)> {
    let at = |f: &[i64], (x, y): (i64, i64)| f[idx(x, y)];
    // Clockwise search around p0 starting at `from`.
    let d0 = dir_of(from.0 - p0.0, from.1 - p0.1);
    let first = (0..8).map(|k| (d0 + 8 - k) % 8).find_map(|d| {
        let q = (p0.0 + DIRS[d].0, p0.1 + DIRS[d].1);
        (at(f, q) != 0).then_some(q)
    });
    let Some(p1) = first else {
        f[idx(p0.0, p0.1)] = -nbd;
        return vec![p0];
    };
    let mut lp = Vec::new();
    let (mut p2, mut p3) = (p1, p0);
    loop {
        lp.push(p3);
        // Counterclockwise search around p3 starting after p2.
        let d2 = dir_of(p2.0 - p3.0, p2.1 - p3.1);
        let mut east_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + k) % 8;
            let q = (p3.0 + DIRS[d].0, p3.1 + DIRS[d].1);
            if at(f, q) != 0 {
                p4 = q;
                break;
            }
            if d == 0 {
                east_zero = true;
            }
        }
        let cell = idx(p3.0, p3.1);
        if east_zero {
            f[cell] = -nbd;
        } else if f[cell] == 1 {
            f[cell] = nbd;
        }
        if p4 == p0 && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    lp
}

/// Pixel count of the 8-connected component each pixel belongs to.
fn component_sizes(mask: &Mask) -> Vec<usize> {
    let (w, h) = (mask.width, mask.height);
    let mut label = vec![usize::MAX; w * h];
    let mut sizes = Vec::new();
    for start in 0..w * h {
        if !mask.data[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![start];
        label[start] = id;
        let mut n = 0;
        while let Some(p) = stack.pop() {
            n += 1;
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for (dx, dy) in DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if mask.get_signed(nx, ny) {
                    let q = ny as usize * w + nx as usize;
                    if label[q] == usize::MAX {
                        label[q] = id;
                        stack.push(q);
                    }
                }
            }
        }
        sizes.push(n);
    }
    label.into_iter().map(|l| if l == usize::MAX { 0 } else { sizes[l] }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    /// Pixel coordinates in contour order.
    pub points: Vec<(i64, i64)>,
    /// Set when the loop had fewer than K points and was returned whole.
    pub full_loop: bool,
}

/// Picks `k` contour points at roughly equal arc-length spacing, starting at
/// the topmost-then-leftmost point.
pub fn sample_boundary(lp: &[(i64, i64)], k: usize) -> Result<BoundarySample> {
    if lp.is_empty() {
        return Err(Error::InvalidArgument("contour loop is empty".into()));
    }
    if k < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 boundary points, got {k}")));
    }
    let start = (0..lp.len()).min_by_key(|&i| (lp[i].1, lp[i].0)).expect("non-empty");
    let rotated: Vec<(i64, i64)> = lp[start..].iter().chain(&lp[..start]).copied().collect();
    let n = rotated.len();
    if k >= n {
        return Ok(BoundarySample {
            points: rotated,
            full_loop: k > n,
        });
    }
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let (a, b) = (rotated[i], rotated[(i + 1) % n]);
        let d = (((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64).sqrt();
        cum.push(cum[i] + d);
    }
    let total = cum[n];
    let mut picks = Vec::with_capacity(k);
    let mut prev: Option<usize> = None;
    for j in 0..k {
        let target = total * j as f64 / k as f64;
        let nearest = match cum[..n].binary_search_by(|c| c.total_cmp(&target)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= n => n - 1,
            Err(i) => {
                if target - cum[i - 1] <= cum[i] - target {
                    i - 1
                } else {
                    i
                }
            }
        };
        let lo = prev.map_or(0, |p| p + 1);
        let hi = n - (k - j);
        let i = nearest.clamp(lo, hi);
        picks.push(rotated[i]);
        prev = Some(i);
    }
    Ok(BoundarySample {
        points: picks,
        full_loop: false,
    })
}

/// Visiting order for painting a polygon: first point, then alternately
/// the next point from the front and the next from the back.
pub fn zigzag_trail<T: Clone>(poly: &[T]) -> Vec<T> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(poly[0].clone());
    let (mut head, mut tail) = (1usize, n - 1);
    let mut front = true;
    while head <= tail && head < n {
        if front {
            out.push(poly[head].clone());
            head += 1;
        } else {
            out.push(poly[tail].clone());
            tail -= 1;
        }
        front = !front;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAnnotation {
    pub id: String,
    pub caption: String,
    pub bbox: Rect,
    pub center: Point,
    /// Pixel centers along the outer contour.
    pub boundary: Vec<Point>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full_loop: bool,
}

impl RegionAnnotation {
    pub fn trail(&self) -> Vec<Point> {
        zigzag_trail(&self.boundary)
    }
}

pub fn build_region(mask: &Mask, caption: &str, id: &str) -> Result<RegionAnnotation> {
    build_region_k(mask, caption, id, DEFAULT_BOUNDARY_POINTS)
}

pub fn build_region_k(mask: &Mask, caption: &str, id: &str, k: usize) -> Result<RegionAnnotation> {
    let loops = extract_outer_contour(mask)?;
    let bbox = mask.bounds().expect("non-empty mask has bounds");
    let sample = sample_boundary(&loops[0], k)?;
    Ok(RegionAnnotation {
        id: id.to_string(),
        caption: caption.to_string(),
        bbox,
        center: bbox.center(),
        boundary: sample
            .points
            .iter()
            .map(|&(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
            .collect(),
        full_loop: sample.full_loop,
    })
}

/// Image annotation file: the source image and its regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image: String,
    pub size: [u32; 2],
    pub regions: Vec<RegionAnnotation>,
}

/// Caption sidecar: a JSON object from region id to caption.
pub fn load_captions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Fraction of `mask` covered by the trail drawn as a polyline.
pub fn trail_coverage(mask: &Mask, trail: &[Point], stroke: f64) -> f64 {
    let mut c = Canvas::new(mask.width as u32, mask.height as u32, Rgb::WHITE);
    c.stroke_polyline(trail, false, stroke, Rgb::BLACK, None);
    let total = mask.count();
    if total == 0 {
        return 0.0;
    }
    let hit = (0..mask.height)
        .flat_map(|y| (0..mask.width).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y) && c.get(x as u32, y as u32) == Rgb::BLACK)
        .count();
    hit as f64 / total as f64
}

/// A generated photo-like image with its region masks, for self-contained
/// runs without external segmentations.
pub struct SyntheticRegions {
    pub image: Canvas,
    pub regions: Vec<(Mask, String)>,
}

/// Draws up to `n` non-overlapping blobs (ellipses and convex polygons) over
/// a gradient backdrop, each with a plain caption.
pub fn synthetic_regions(global_seed: u64, index: u64, n: usize) -> SyntheticRegions {
    let mut rng = scene_rng(global_seed, index);
    let (w, h) = (rng.gen_range(480..=960usize), rng.gen_range(360..=720usize));
    let top = Rgb::from_hsv(rng.gen_range(0.0..360.0), 0.25, 0.95);
    let bottom = Rgb::from_hsv(rng.gen_range(0.0..360.0), 0.35, 0.55);
    let mut image = Canvas::new(w as u32, h as u32, top);
    for y in 0..h {
        let t = y as f64 / h as f64;
        let mix = |a: u8, b: u8| (a as f64 * (1.0 - t) + b as f64 * t).round() as u8;
        let c = Rgb::new(mix(top.r, bottom.r), mix(top.g, bottom.g), mix(top.b, bottom.b));
        image.fill_rect(0.0, y as f64, w as f64, y as f64 + 1.0, c);
    }
    let palette = Palette::builtin();
    let mut taken = Mask::new(w, h);
    let mut regions = Vec::new();
    for _ in 0..n * 10 {
        if regions.len() == n {
            break;
        }
        let rx = rng.gen_range(30.0..(w as f64 / 5.0));
        let ry = rng.gen_range(30.0..(h as f64 / 5.0));
        let cx = rng.gen_range(rx + 2.0..w as f64 - rx - 2.0);
        let cy = rng.gen_range(ry + 2.0..h as f64 - ry - 2.0);
        let (mask, name) = if rng.gen_bool(0.5) {
            let m = Mask::from_fn(w, h, |x, y| {
                let (dx, dy) = ((x as f64 + 0.5 - cx) / rx, (y as f64 + 0.5 - cy) / ry);
                dx * dx + dy * dy <= 1.0
            });
            (m, "oval")
        } else {
            let sides = rng.gen_range(3..=6usize);
            let rot = rng.gen_range(0.0..std::f64::consts::TAU);
            let pts: Vec<Point> = (0..sides)
                .map(|i| {
                    let a = rot + std::f64::consts::TAU * i as f64 / sides as f64;
                    Point::new(cx + rx * libm::cos(a), cy + ry * libm::sin(a))
                })
                .collect();
            let mut c = Canvas::new(w as u32, h as u32, Rgb::WHITE);
            c.fill_polygon(&pts, Rgb::BLACK);
            let m = Mask::from_fn(w, h, |x, y| c.get(x as u32, y as u32) == Rgb::BLACK);
            (m, ["triangle", "block", "pentagon", "hexagon"][sides - 3])
        };
        let overlaps = (0..h).any(|y| (0..w).any(|x| mask.get(x, y) && taken.get(x, y)));
        if mask.count() == 0 || overlaps {
            continue;
        }
        let entry = palette.entries().choose(&mut rng).expect("palette is non-empty");
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    taken.set(x, y, true);
                    image.put(x as i64, y as i64, entry.rgb);
                }
            }
        }
        regions.push((mask, format!("the {} {}", entry.name, name)));
    }
    SyntheticRegions { image, regions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(n: usize, lo: usize, hi: usize) -> Mask {
        Mask::from_fn(n, n, |x, y| (lo..hi).contains(&x) && (lo..hi).contains(&y))
    }

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> Mask {
        Mask::from_fn(w, h, |x, y| (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r)
    }

    #[test]
    fn square_border_has_eight_pixels() {
        let loops = extract_outer_contour(&square(5, 1, 4)).unwrap();
        assert_eq!(loops.len(), 1);
        let lp = &loops[0];
        assert_eq!(lp.len(), 8);
        let mut expect: Vec<(i64, i64)> = (1..4)
            .flat_map(|y| (1..4).map(move |x| (x, y)))
            .filter(|&p| p != (2, 2))
            .collect();
        let mut got = lp.clone();
        expect.sort();
        got.sort();
        assert_eq!(got, expect);
        assert_eq!(lp[0], (1, 1));
    }

    #[test]
    fn single_pixel_loop() {
        let m = Mask::from_fn(3, 3, |x, y| x == 1 && y == 1);
        assert_eq!(extract_outer_contour(&m).unwrap(), vec![vec![(1, 1)]]);
    }

    #[test]
    fn empty_mask_is_an_error() {
        assert!(extract_outer_contour(&Mask::new(4, 4)).is_err());
        assert!(build_region(&Mask::new(4, 4), "x", "r").is_err());
    }

    #[test]
    fn two_blobs_largest_first() {
        let m = Mask::from_fn(20, 10, |x, y| (x < 3 && y < 3) || ((8..16).contains(&x) && (2..9).contains(&y)));
        let loops = extract_outer_contour(&m).unwrap();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops[0][0], (8, 2));
        assert_eq!(loops[1][0], (0, 0));
    }

    #[test]
    fn holes_are_not_outer_loops() {
        let ring = Mask::from_fn(9, 9, |x, y| (1..8).contains(&x) && (1..8).contains(&y) && !(x == 4 && y == 4));
        assert_eq!(extract_outer_contour(&ring).unwrap().len(), 1);
        // An island inside a hole is its own component.
        let nested = Mask::from_fn(11, 11, |x, y| {
            let ring = (1..10).contains(&x) && (1..10).contains(&y) && !((3..8).contains(&x) && (3..8).contains(&y));
            ring || (x == 5 && y == 5)
        });
        assert_eq!(extract_outer_contour(&nested).unwrap().len(), 2);
    }

    #[test]
    fn diagonal_pixels_connect() {
        let m = Mask::from_fn(4, 4, |x, y| x == y);
        let loops = extract_outer_contour(&m).unwrap();
        assert_eq!(loops.len(), 1);
        // Border of a one-pixel diagonal walks out and back.
        assert_eq!(loops[0].len(), 6);
    }

    #[test]
    fn contour_walks_counterclockwise_on_screen() {
        let lp = &extract_outer_contour(&square(6, 1, 5)).unwrap()[0];
        assert_eq!(&lp[..3], &[(1, 1), (1, 2), (1, 3)]);
        assert_eq!(lp[lp.len() - 1], (2, 1));
    }

    #[test]
    fn boundary_sampling() {
        let ring: Vec<(i64, i64)> = (0..20).map(|i| (i, 0)).collect();
        assert_eq!(sample_boundary(&ring, 20).unwrap().points, ring);
        // 11×11 square outline has 40 border pixels.
        let lp = &extract_outer_contour(&square(13, 1, 12)).unwrap()[0];
        assert_eq!(lp.len(), 40);
        let s = sample_boundary(lp, 4).unwrap();
        let pos: Vec<usize> = s.points.iter().map(|p| lp.iter().position(|q| q == p).unwrap()).collect();
        assert_eq!(pos, vec![0, 10, 20, 30]);
        let tri = sample_boundary(lp, 3).unwrap();
        assert_eq!(tri.points.len(), 3);
        assert!(crate::geometry::Polygon::new(tri.points.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect()).is_ok());
        let short = sample_boundary(&[(0, 0), (1, 0), (1, 1)], 20).unwrap();
        assert!(short.full_loop && short.points.len() == 3);
        assert!(sample_boundary(lp, 2).is_err());
    }

    #[test]
    fn zigzag_orders() {
        let six: Vec<u32> = (1..=6).collect();
        assert_eq!(zigzag_trail(&six), vec![1, 2, 6, 3, 5, 4]);
        assert_eq!(zigzag_trail(&[1, 2, 3]), vec![1, 2, 3]);
        let twenty: Vec<u32> = (1..=20).collect();
        assert_eq!(&zigzag_trail(&twenty)[..7], &[1, 2, 20, 3, 19, 4, 18]);
    }

    #[test]
    fn full_frame_region() {
        let m = Mask::from_fn(40, 30, |_, _| true);
        let r = build_region(&m, "everything", "r0").unwrap();
        assert_eq!(r.bbox, Rect::new(0.0, 0.0, 40.0, 30.0).unwrap());
        assert_eq!(r.center, Point::new(20.0, 15.0));
        assert_eq!(r.boundary.len(), 20);
    }

    #[test]
    fn disk_region_center_and_boundary() {
        let m = disk(100, 80, 47.0, 38.0, 20.0);
        let r = build_region(&m, "a disk", "d").unwrap();
        assert!(r.center.distance(Point::new(47.0, 38.0)) <= 1.0);
        for p in &r.boundary {
            let (x, y) = (p.x.floor() as i64, p.y.floor() as i64);
            let near = |want: bool| {
                (-1..=1).any(|dy| (-1..=1).any(|dx| m.get_signed(x + dx, y + dy) == want))
            };
            assert!(near(true) && near(false), "{p:?}");
        }
        // Ordered along the contour: consecutive samples are close.
        for w in r.boundary.windows(2) {
            assert!(w[0].distance(w[1]) < 10.0);
        }
    }

    #[test]
    fn rle_round_trip() {
        let m = disk(17, 11, 8.0, 5.0, 4.0);
        let rle = m.to_rle();
        assert_eq!(rle.size, [11, 17]);
        assert_eq!(Mask::from_rle(&rle).unwrap(), m);
        let bad = Rle { size: [2, 2], counts: vec![1, 1] };
        assert!(Mask::from_rle(&bad).is_err());
    }

    #[test]
    fn synthetic_regions_are_disjoint() {
        let s = synthetic_regions(3, 0, 5);
        assert!(!s.regions.is_empty());
        for (m, cap) in &s.regions {
            build_region(m, cap, "x").unwrap();
        }
    }

    fn coverage_of(m: &Mask) -> f64 {
        let r = build_region(m, "", "c").unwrap();
        let stroke = r.bbox.height() / (DEFAULT_BOUNDARY_POINTS as f64 / 2.0);
        trail_coverage(m, &r.trail(), stroke)
    }

    #[test]
    fn zigzag_covers_convex_masks() {
        assert!(coverage_of(&disk(200, 200, 100.0, 100.0, 60.0)) >= 0.8);
        assert!(coverage_of(&square(120, 20, 100)) >= 0.8);
        let ellipse = Mask::from_fn(300, 200, |x, y| {
            let (dx, dy) = ((x as f64 - 150.0) / 110.0, (y as f64 - 100.0) / 50.0);
            dx * dx + dy * dy <= 1.0
        });
        assert!(coverage_of(&ellipse) >= 0.8);
    }

    proptest! {
        #[test]
        fn zigzag_is_permutation(n in 3usize..200) {
            let v: Vec<usize> = (0..n).collect();
            let z = zigzag_trail(&v);
            prop_assert_eq!(&z[..2], &[0, 1]);
            let mut s = z.clone();
            s.sort_unstable();
            prop_assert_eq!(s, v);
        }

        #[test]
        fn boundary_points_on_border(cx in 20.0f64..60.0, cy in 20.0f64..60.0, r in 3.0f64..18.0) {
            let m = disk(80, 80, cx, cy, r);
            prop_assume!(m.count() > 0);
            let reg = build_region(&m, "", "p").unwrap();
            for p in &reg.boundary {
                let (x, y) = (p.x.floor() as i64, p.y.floor() as i64);
                prop_assert!(m.get_signed(x, y));
                let bg = (-1..=1).any(|dy| (-1..=1).any(|dx| !m.get_signed(x + dx, y + dy)));
                prop_assert!(bg);
            }
        }

        #[test]
        fn convex_coverage(cx in 60.0f64..140.0, cy in 60.0f64..140.0, r in 25.0f64..55.0) {
            prop_assert!(coverage_of(&disk(200, 200, cx, cy, r)) >= 0.8);
        }
    }
}
