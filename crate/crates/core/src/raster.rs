//! Aliased RGB rasterizer.
//!
//! Pixels are sampled at their centers, so pixel `(x, y)` is covered when
//! `(x + 0.5, y + 0.5)` lies inside the shape. No anti-aliasing is applied;
//! output bytes depend only on the input geometry.

use std::io::Cursor;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};

use crate::error::Result;
use crate::geometry::{Point, Rgb};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DashPattern {
    pub on: f64,
    pub off: f64,
}

impl DashPattern {
    /// Dash pattern scaled to the stroke width.
    pub fn for_width(width: f64) -> Self {
        Self {
            on: (3.0 * width).max(6.0),
            off: (2.0 * width).max(4.0),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Canvas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Canvas")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: Rgb) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&background.to_array());
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize * 3);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        Rgb::new(self.data[i], self.data[i + 1], self.data[i + 2])
    }

    pub fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i] = c.r;
        self.data[i + 1] = c.g;
        self.data[i + 2] = c.b;
    }

    fn span(&mut self, y: i64, x0: i64, x1: i64, c: Rgb) {
        if y < 0 || y >= self.height as i64 {
            return;
        }
        let x0 = x0.max(0);
        let x1 = x1.min(self.width as i64 - 1);
        if x0 > x1 {
            return;
        }
        let row = y as usize * self.width as usize * 3;
        let px = c.to_array();
        for chunk in self.data[row + x0 as usize * 3..row + (x1 as usize + 1) * 3].chunks_exact_mut(3) {
            chunk.copy_from_slice(&px);
        }
    }

    /// Fills pixels whose centers fall in `[x1, x2) × [y1, y2)`.
    pub fn fill_rect(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, c: Rgb) {
        let (px0, px1) = (first_center_at_or_after(x1), first_center_at_or_after(x2) - 1);
        for y in first_center_at_or_after(y1)..first_center_at_or_after(y2) {
            self.span(y, px0, px1, c);
        }
    }

    /// One-pixel outline along the rect's edges.
    pub fn outline_rect(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, c: Rgb) {
        let (l, t, r, b) = (x1.round() as i64, y1.round() as i64, x2.round() as i64, y2.round() as i64);
        for x in l..=r {
            self.put(x, t, c);
            self.put(x, b, c);
        }
        for y in t..=b {
            self.put(l, y, c);
            self.put(r, y, c);
        }
    }

    /// Nonzero-winding fill over any number of closed contours. Holes are
    /// contours wound opposite to their enclosing contour.
    pub fn fill_path(&mut self, contours: &[Vec<Point>], c: Rgb) {
        let mut edges: Vec<(f64, f64, f64, f64, i32)> = Vec::new();
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for contour in contours {
            let n = contour.len();
            if n < 3 {
                continue;
            }
            for i in 0..n {
                let a = contour[i];
                let b = contour[(i + 1) % n];
                if a.y == b.y {
                    continue;
                }
                let dir = if b.y > a.y { 1 } else { -1 };
                let (top, bot) = if a.y < b.y { (a, b) } else { (b, a) };
                edges.push((top.x, top.y, bot.x, bot.y, dir));
                ymin = ymin.min(top.y);
                ymax = ymax.max(bot.y);
            }
        }
        if edges.is_empty() {
            return;
        }
        let row0 = first_center_at_or_after(ymin).max(0);
        let row1 = (first_center_at_or_after(ymax) - 1).min(self.height as i64 - 1);
        let mut crossings: Vec<(f64, i32)> = Vec::new();
        for y in row0..=row1 {
            let yc = y as f64 + 0.5;
            crossings.clear();
            for &(x0, y0, x1, y1, dir) in &edges {
                if yc >= y0 && yc < y1 {
                    let x = x0 + (yc - y0) * (x1 - x0) / (y1 - y0);
                    crossings.push((x, dir));
                }
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut winding = 0;
            for w in crossings.windows(2) {
                winding += w[0].1;
                if winding != 0 {
                    let x0 = first_center_at_or_after(w[0].0);
                    let x1 = first_center_at_or_after(w[1].0) - 1;
                    self.span(y, x0, x1, c);
                }
            }
        }
    }

    pub fn fill_polygon(&mut self, points: &[Point], c: Rgb) {
        self.fill_path(std::slice::from_ref(&points.to_vec()), c);
    }

    pub fn fill_circle(&mut self, center: Point, radius: f64, c: Rgb) {
        let r2 = radius * radius;
        let y0 = first_center_at_or_after(center.y - radius);
        let y1 = first_center_at_or_after(center.y + radius);
        for y in y0..y1 {
            let dy = y as f64 + 0.5 - center.y;
            let rem = r2 - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let half = rem.sqrt();
            self.span(
                y,
                first_center_at_or_after(center.x - half),
                first_center_at_or_after(center.x + half) - 1,
                c,
            );
        }
    }

    /// Strokes a polyline with round joins. `dash` splits the path into
    /// alternating on/off runs measured along its arc length.
    pub fn stroke_polyline(
        &mut self,
        points: &[Point],
        closed: bool,
        width: f64,
        c: Rgb,
        dash: Option<DashPattern>,
    ) {
        let mut path: Vec<Point> = points.to_vec();
        if closed && path.len() > 2 {
            path.push(path[0]);
        }
        match dash {
            None => self.stroke_run(&path, width, c),
            Some(d) => {
                for run in dash_runs(&path, d) {
                    self.stroke_run(&run, width, c);
                }
            }
        }
    }

    fn stroke_run(&mut self, path: &[Point], width: f64, c: Rgb) {
        let half = (width / 2.0).max(0.5);
        for seg in path.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                continue;
            }
            let (nx, ny) = (-dy / len * half, dx / len * half);
            self.fill_polygon(
                &[
                    Point::new(a.x + nx, a.y + ny),
                    Point::new(b.x + nx, b.y + ny),
                    Point::new(b.x - nx, b.y - ny),
                    Point::new(a.x - nx, a.y - ny),
                ],
                c,
            );
        }
        if width > 1.5 {
            for p in path {
                self.fill_circle(*p, half, c);
            }
        }
    }

    pub fn line(&mut self, a: Point, b: Point, width: f64, c: Rgb) {
        self.stroke_run(&[a, b], width, c);
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        let enc = PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Sub);
        enc.write_image(&self.data, self.width, self.height, ExtendedColorType::Rgb8)?;
        Ok(out.into_inner())
    }
}

/// Smallest integer `i` with `i + 0.5 >= v`.
fn first_center_at_or_after(v: f64) -> i64 {
    (v - 0.5).ceil() as i64
}

fn dash_runs(path: &[Point], dash: DashPattern) -> Vec<Vec<Point>> {
    let mut runs = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut on = true;
    let mut remaining = dash.on;
    if let Some(&first) = path.first() {
        current.push(first);
    }
    for seg in path.windows(2) {
        let (mut a, b) = (seg[0], seg[1]);
        loop {
            let seg_len = a.distance(b);
            if seg_len <= remaining {
                remaining -= seg_len;
                if on {
                    current.push(b);
                }
                break;
            }
            let t = remaining / seg_len;
            let cut = Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            if on {
                current.push(cut);
                runs.push(std::mem::take(&mut current));
                remaining = dash.off;
            } else {
                current = vec![cut];
                remaining = dash.on;
            }
            on = !on;
            a = cut;
        }
    }
    if on && current.len() > 1 {
        runs.push(current);
    }
    runs
}
