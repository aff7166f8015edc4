//! Selection chrome drawn over a shape: bounding box, control points,
//! vertex markers and a rotation handle.

use std::f64::consts::PI;

use indexmap::IndexMap;
use libm::{cos, sin};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ShapeKind, ShapeResult};
use crate::geometry::{Point, Rect, Rgb};
use crate::raster::Canvas;

/// Length of the connector between the bbox edge and the handle arc.
pub const HANDLE_CONNECTOR: f64 = 20.0;
pub const HANDLE_ARC_RADIUS: f64 = 9.0;
pub const HANDLE_ARROWHEAD: f64 = 4.0;
const CONTROL_RADIUS: f64 = 4.0;
const MARKER_RADIUS: f64 = 4.0;
const BOX_COLOR: Rgb = Rgb::new(128, 128, 128);
const CONTROL_COLOR: Rgb = Rgb::new(230, 30, 30);
const MARKER_COLOR: Rgb = Rgb::new(20, 90, 230);
const HANDLE_COLOR: Rgb = Rgb::new(70, 70, 70);

pub const BOX_POINT_NAMES: [&str; 8] = [
    "top_left",
    "top_center",
    "top_right",
    "right_center",
    "bottom_right",
    "bottom_center",
    "bottom_left",
    "left_center",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    TopCenter,
    RightCenter,
    BottomCenter,
    LeftCenter,
}

impl Anchor {
    pub const ALL: [Anchor; 4] = [Anchor::TopCenter, Anchor::RightCenter, Anchor::BottomCenter, Anchor::LeftCenter];

    pub fn midpoint(self, r: &Rect) -> Point {
        let c = r.center();
        match self {
            Anchor::TopCenter => Point::new(c.x, r.y1),
            Anchor::RightCenter => Point::new(r.x2, c.y),
            Anchor::BottomCenter => Point::new(c.x, r.y2),
            Anchor::LeftCenter => Point::new(r.x1, c.y),
        }
    }

    fn outward(self) -> (f64, f64) {
        match self {
            Anchor::TopCenter => (0.0, -1.0),
            Anchor::RightCenter => (1.0, 0.0),
            Anchor::BottomCenter => (0.0, 1.0),
            Anchor::LeftCenter => (-1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChromeAnnotation {
    pub box_points: IndexMap<String, Point>,
    pub vertex_markers: Vec<Point>,
    pub rotation_handle_center: Point,
    pub rotation_anchor: Anchor,
}

pub fn box_points(r: &Rect) -> IndexMap<String, Point> {
    let c = r.center();
    let pts = [
        Point::new(r.x1, r.y1),
        Point::new(c.x, r.y1),
        Point::new(r.x2, r.y1),
        Point::new(r.x2, c.y),
        Point::new(r.x2, r.y2),
        Point::new(c.x, r.y2),
        Point::new(r.x1, r.y2),
        Point::new(r.x1, c.y),
    ];
    BOX_POINT_NAMES.iter().map(|n| n.to_string()).zip(pts).collect()
}

fn diamond(p: Point, r: f64) -> Vec<Point> {
    vec![
        Point::new(p.x, p.y - r),
        Point::new(p.x + r, p.y),
        Point::new(p.x, p.y + r),
        Point::new(p.x - r, p.y),
    ]
}

/// Draws selection chrome for one shape. The anchor edge of the rotation
/// handle is drawn from `rng`.
pub fn draw_chrome<R: Rng + ?Sized>(canvas: &mut Canvas, shape: &ShapeResult, kind: ShapeKind, rng: &mut R) -> ChromeAnnotation {
    let r = shape.bbox;
    canvas.outline_rect(r.x1, r.y1, r.x2, r.y2, BOX_COLOR);

    let points = if kind.is_line_like() {
        shape.endpoints.clone()
    } else {
        box_points(&r)
    };

    let vertex_markers: Vec<Point> = if kind.skips_vertex_markers() {
        Vec::new()
    } else {
        shape.vertices.values().copied().collect()
    };
    for &v in &vertex_markers {
        canvas.fill_polygon(&diamond(v, MARKER_RADIUS), MARKER_COLOR);
    }

    let anchor = Anchor::ALL[rng.gen_range(0..4)];
    let m = anchor.midpoint(&r);
    let (dx, dy) = anchor.outward();
    let joint = Point::new(m.x + dx * HANDLE_CONNECTOR, m.y + dy * HANDLE_CONNECTOR);
    canvas.line(m, joint, 1.0, HANDLE_COLOR);
    let center = Point::new(
        m.x + dx * (HANDLE_CONNECTOR + HANDLE_ARC_RADIUS),
        m.y + dy * (HANDLE_CONNECTOR + HANDLE_ARC_RADIUS),
    );
    // 300° arc with the gap facing the connector.
    let gap_dir = libm::atan2(-dy, -dx);
    let (a0, a1) = (gap_dir + PI / 6.0, gap_dir + 2.0 * PI - PI / 6.0);
    let arc: Vec<Point> = (0..=40)
        .map(|i| {
            let t = a0 + (a1 - a0) * i as f64 / 40.0;
            Point::new(center.x + HANDLE_ARC_RADIUS * cos(t), center.y + HANDLE_ARC_RADIUS * sin(t))
        })
        .collect();
    canvas.stroke_polyline(&arc, false, 1.5, HANDLE_COLOR, None);
    let end = arc[arc.len() - 1];
    let (tx, ty) = (-sin(a1), cos(a1));
    let (rx, ry) = (cos(a1), sin(a1));
    let head = vec![
        Point::new(end.x + tx * HANDLE_ARROWHEAD, end.y + ty * HANDLE_ARROWHEAD),
        Point::new(end.x + rx * HANDLE_ARROWHEAD * 0.8, end.y + ry * HANDLE_ARROWHEAD * 0.8),
        Point::new(end.x - rx * HANDLE_ARROWHEAD * 0.8, end.y - ry * HANDLE_ARROWHEAD * 0.8),
    ];
    canvas.fill_polygon(&head, HANDLE_COLOR);

    for p in points.values() {
        canvas.fill_circle(*p, CONTROL_RADIUS, CONTROL_COLOR);
    }

    ChromeAnnotation {
        box_points: points,
        vertex_markers,
        rotation_handle_center: center,
        rotation_anchor: anchor,
    }
}
