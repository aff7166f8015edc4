//! Shape library: registry of primitive kinds and their parametric geometry.
//!
//! Every kind is drawn inside an axis-aligned frame. Geometry is produced in
//! normalized frame coordinates `(u, v) ∈ [0,1]²` where convenient and mapped
//! to pixels afterwards, so each shape exactly spans (or sits inside) its box.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use libm::{cos, sin};

use crate::error::Error;
use crate::geometry::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Rectangles,
    Ellipses,
    Triangles,
    Quadrilaterals,
    Polygons,
    Stars,
    Arrows,
    Lines,
    Callouts,
    Special,
    TextBoxes,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Rectangles => "rectangles",
            Category::Ellipses => "ellipses",
            Category::Triangles => "triangles",
            Category::Quadrilaterals => "quadrilaterals",
            Category::Polygons => "polygons",
            Category::Stars => "stars",
            Category::Arrows => "arrows",
            Category::Lines => "lines",
            Category::Callouts => "callouts",
            Category::Special => "special",
            Category::TextBoxes => "text-boxes",
        }
    }
}

macro_rules! shape_kinds {
    ($($variant:ident => $name:literal, $cat:ident;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ShapeKind {
            $($variant,)*
        }

        impl ShapeKind {
            /// Every registered kind, in registry order.
            pub const ALL: &'static [ShapeKind] = &[$(ShapeKind::$variant,)*];

            /// Identifier used in annotations (`shape_type`).
            pub fn name(self) -> &'static str {
                match self {
                    $(ShapeKind::$variant => $name,)*
                }
            }

            pub fn category(self) -> Category {
                match self {
                    $(ShapeKind::$variant => Category::$cat,)*
                }
            }
        }
    };
}

shape_kinds! {
    Rectangle => "rectangle", Rectangles;
    RoundedRectangle => "rounded_rectangle", Rectangles;
    Square => "square", Rectangles;
    RoundedSquare => "rounded_square", Rectangles;
    Cross => "cross", Rectangles;
    Plus => "plus", Rectangles;
    Ellipse => "ellipse", Ellipses;
    Circle => "circle", Ellipses;
    ScaleneTriangle => "scalene_triangle", Triangles;
    RightTriangle => "right_triangle", Triangles;
    IsoscelesTriangle => "isosceles_triangle", Triangles;
    EquilateralTriangle => "equilateral_triangle", Triangles;
    ObtuseTriangle => "obtuse_triangle", Triangles;
    Diamond => "diamond", Quadrilaterals;
    Parallelogram => "parallelogram", Quadrilaterals;
    Trapezoid => "trapezoid", Quadrilaterals;
    RightTrapezoid => "right_trapezoid", Quadrilaterals;
    Kite => "kite", Quadrilaterals;
    Pentagon => "pentagon", Polygons;
    Hexagon => "hexagon", Polygons;
    Heptagon => "heptagon", Polygons;
    Octagon => "octagon", Polygons;
    Nonagon => "nonagon", Polygons;
    Decagon => "decagon", Polygons;
    Star4 => "star4", Stars;
    Star5 => "star5", Stars;
    Star6 => "star6", Stars;
    Star8 => "star8", Stars;
    Star10 => "star10", Stars;
    Star12 => "star12", Stars;
    RightArrow => "right_arrow", Arrows;
    LeftArrow => "left_arrow", Arrows;
    UpArrow => "up_arrow", Arrows;
    DownArrow => "down_arrow", Arrows;
    DoubleArrow => "double_arrow", Arrows;
    Chevron => "chevron", Arrows;
    NotchedArrow => "notched_arrow", Arrows;
    BentArrow => "bent_arrow", Arrows;
    UTurnArrow => "u_turn_arrow", Arrows;
    CircularArrow => "circular_arrow", Arrows;
    StraightLine => "straight_line", Lines;
    ArrowLine => "arrow_line", Lines;
    DoubleArrowLine => "double_arrow_line", Lines;
    CurvedLine => "curved_line", Lines;
    ElbowConnector => "elbow_connector", Lines;
    RectangularCallout => "rectangular_callout", Callouts;
    RoundedCallout => "rounded_callout", Callouts;
    CloudCallout => "cloud_callout", Callouts;
    Ribbon => "ribbon", Callouts;
    Banner => "banner", Callouts;
    Heart => "heart", Special;
    Cloud => "cloud", Special;
    CrescentMoon => "crescent_moon", Special;
    Sun => "sun", Special;
    Frame => "frame", Special;
    Donut => "donut", Special;
    Ring => "ring", Special;
    LightningBolt => "lightning_bolt", Special;
    Wave => "wave", Special;
    Arc => "arc", Special;
    Pie => "pie", Special;
    Sector => "sector", Special;
    Drop => "drop", Special;
    Explosion => "explosion", Special;
    Semicircle => "semicircle", Special;
    QuarterCircle => "quarter_circle", Special;
    Teardrop => "teardrop", Special;
    Shield => "shield", Special;
    LShape => "l_shape", Special;
    TShape => "t_shape", Special;
    TextBoxBordered => "text_box_bordered", TextBoxes;
    TextBoxRounded => "text_box_rounded", TextBoxes;
    TextBoxBorderless => "text_box_borderless", TextBoxes;
}

/// Number of primitive kinds in the registry.
pub const SHAPE_KIND_COUNT: usize = 73;

impl ShapeKind {
    /// Human-readable name used in referring expressions.
    pub fn display_name(self) -> String {
        match self {
            ShapeKind::Star4 => "four-pointed star".into(),
            ShapeKind::Star5 => "five-pointed star".into(),
            ShapeKind::Star6 => "six-pointed star".into(),
            ShapeKind::Star8 => "eight-pointed star".into(),
            ShapeKind::Star10 => "ten-pointed star".into(),
            ShapeKind::Star12 => "twelve-pointed star".into(),
            ShapeKind::UTurnArrow => "U-turn arrow".into(),
            ShapeKind::LShape => "L-shape".into(),
            ShapeKind::TShape => "T-shape".into(),
            ShapeKind::TextBoxBordered => "bordered text box".into(),
            ShapeKind::TextBoxRounded => "rounded text box".into(),
            ShapeKind::TextBoxBorderless => "borderless text box".into(),
            other => other.name().replace('_', " "),
        }
    }

    /// Kinds constrained to equal width and height.
    pub fn is_square_aspect(self) -> bool {
        matches!(
            self,
            ShapeKind::Circle
                | ShapeKind::Square
                | ShapeKind::Donut
                | ShapeKind::Ring
                | ShapeKind::RoundedSquare
        )
    }

    /// Stroked-only kinds annotated with endpoints instead of box points.
    pub fn is_line_like(self) -> bool {
        self.category() == Category::Lines
    }

    /// Whether an outline stroke is drawn at all.
    pub fn has_outline(self) -> bool {
        self != ShapeKind::TextBoxBorderless
    }

    /// Kinds whose vertices are dense curve samples; no markers are drawn.
    pub fn skips_vertex_markers(self) -> bool {
        matches!(
            self,
            ShapeKind::Heart | ShapeKind::Cloud | ShapeKind::CrescentMoon | ShapeKind::Wave
        )
    }

    /// Sampling weight; common primitives are mildly favored.
    pub fn weight(self) -> f64 {
        let common = matches!(
            self,
            ShapeKind::Rectangle
                | ShapeKind::Circle
                | ShapeKind::ScaleneTriangle
                | ShapeKind::RightTriangle
                | ShapeKind::IsoscelesTriangle
                | ShapeKind::EquilateralTriangle
                | ShapeKind::ObtuseTriangle
                | ShapeKind::Star5
                | ShapeKind::Diamond
                | ShapeKind::RightArrow
                | ShapeKind::LeftArrow
                | ShapeKind::UpArrow
                | ShapeKind::DownArrow
        );
        if common {
            2.0
        } else {
            1.0
        }
    }

    /// Preferred width/height ratio when the frame is sampled. `None` means
    /// the aspect is free.
    pub fn fixed_aspect(self) -> Option<f64> {
        match self {
            k if k.is_square_aspect() => Some(1.0),
            // Height of an equilateral triangle is sqrt(3)/2 of its side.
            ShapeKind::EquilateralTriangle => Some(2.0 / 3f64.sqrt()),
            _ => None,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ShapeKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownShape(s.to_string()))
    }
}

/// Drawable description of one shape instance.
#[derive(Debug, Clone, Default)]
pub struct ShapeGeometry {
    /// Contours filled with the fill color (nonzero winding).
    pub fill: Vec<Vec<Point>>,
    /// Paths stroked with the outline color; `true` marks a closed path.
    pub outlines: Vec<(Vec<Point>, bool)>,
    /// Solid polygons painted with the outline color (arrowheads).
    pub heads: Vec<Vec<Point>>,
    pub vertices: IndexMap<String, Point>,
    pub endpoints: IndexMap<String, Point>,
}

struct UnitFrame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl UnitFrame {
    fn new(r: &Rect) -> Self {
        Self {
            x: r.x1,
            y: r.y1,
            w: r.width(),
            h: r.height(),
        }
    }

    fn at(&self, u: f64, v: f64) -> Point {
        Point::new(self.x + u * self.w, self.y + v * self.h)
    }

    fn map(&self, uv: &[(f64, f64)]) -> Vec<Point> {
        uv.iter().map(|&(u, v)| self.at(u, v)).collect()
    }

    /// Maps arbitrary sample points so their bounds exactly fill the frame.
    fn fit(&self, pts: &[(f64, f64)]) -> Vec<Point> {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in pts {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let sx = if x1 > x0 { 1.0 / (x1 - x0) } else { 0.0 };
        let sy = if y1 > y0 { 1.0 / (y1 - y0) } else { 0.0 };
        pts.iter()
            .map(|&(x, y)| self.at((x - x0) * sx, (y - y0) * sy))
            .collect()
    }
}

/// Samples an elliptical arc in normalized coordinates; angles in degrees,
/// y axis pointing down, inclusive of both ends.
fn arc_uv(cu: f64, cv: f64, ru: f64, rv: f64, a0: f64, a1: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let t = (a0 + (a1 - a0) * i as f64 / n as f64).to_radians();
            (cu + ru * cos(t), cv + rv * sin(t))
        })
        .collect()
}

/// Full ellipse without the duplicated closing sample.
fn ellipse_uv(cu: f64, cv: f64, ru: f64, rv: f64, n: usize, reverse: bool) -> Vec<(f64, f64)> {
    let mut pts = arc_uv(cu, cv, ru, rv, -90.0, 270.0, n);
    pts.pop();
    if reverse {
        pts.reverse();
    }
    pts
}

fn rounded_rect_path(r: &Rect, radius: f64, bottom_insert: &[Point]) -> Vec<Point> {
    let rad = radius.min(r.width() / 2.0).min(r.height() / 2.0);
    let corner = |cx: f64, cy: f64, a0: f64| -> Vec<Point> {
        (0..=8)
            .map(|i| {
                let t = (a0 + 90.0 * i as f64 / 8.0).to_radians();
                Point::new(cx + rad * cos(t), cy + rad * sin(t))
            })
            .collect()
    };
    let mut pts = Vec::new();
    pts.extend(corner(r.x2 - rad, r.y1 + rad, -90.0));
    pts.extend(corner(r.x2 - rad, r.y2 - rad, 0.0));
    pts.extend_from_slice(bottom_insert);
    pts.extend(corner(r.x1 + rad, r.y2 - rad, 90.0));
    pts.extend(corner(r.x1 + rad, r.y1 + rad, 180.0));
    pts
}

fn numbered(prefix: &str, pts: &[Point]) -> IndexMap<String, Point> {
    pts.iter()
        .enumerate()
        .map(|(i, p)| (format!("{prefix}{}", i + 1), *p))
        .collect()
}

fn named(names: &[&str], pts: &[Point]) -> IndexMap<String, Point> {
    names.iter().map(|n| n.to_string()).zip(pts.iter().copied()).collect()
}

/// Every `step`-th sample of a dense curve, used as its vertex list.
fn subsample(pts: &[Point], count: usize) -> IndexMap<String, Point> {
    let step = (pts.len() / count).max(1);
    let picked: Vec<Point> = pts.iter().step_by(step).take(count).copied().collect();
    numbered("p", &picked)
}

fn polygon_shape(contour: Vec<Point>, vertices: IndexMap<String, Point>) -> ShapeGeometry {
    ShapeGeometry {
        fill: vec![contour.clone()],
        outlines: vec![(contour, true)],
        heads: Vec::new(),
        vertices,
        endpoints: IndexMap::new(),
    }
}

fn multi_shape(contours: Vec<Vec<Point>>, vertices: IndexMap<String, Point>) -> ShapeGeometry {
    ShapeGeometry {
        outlines: contours.iter().map(|c| (c.clone(), true)).collect(),
        fill: contours,
        heads: Vec::new(),
        vertices,
        endpoints: IndexMap::new(),
    }
}

fn regular_polygon(f: &UnitFrame, n: usize) -> ShapeGeometry {
    let pts: Vec<Point> = (0..n)
        .map(|i| {
            let t = (-90.0 + 360.0 * i as f64 / n as f64).to_radians();
            f.at(0.5 + 0.5 * cos(t), 0.5 + 0.5 * sin(t))
        })
        .collect();
    let v = numbered("v", &pts);
    polygon_shape(pts, v)
}

fn star(f: &UnitFrame, n: usize) -> ShapeGeometry {
    let inner = match n {
        4 => 0.38,
        5 => 0.4,
        6 => 0.5,
        8 => 0.55,
        10 => 0.6,
        _ => 0.65,
    };
    let pts: Vec<Point> = (0..2 * n)
        .map(|i| {
            let r = if i % 2 == 0 { 0.5 } else { 0.5 * inner };
            let t = (-90.0 + 180.0 * i as f64 / n as f64).to_radians();
            f.at(0.5 + r * cos(t), 0.5 + r * sin(t))
        })
        .collect();
    let v = numbered("v", &pts);
    polygon_shape(pts, v)
}

const ARROW_R: [(f64, f64); 7] = [
    (0.0, 0.25),
    (0.6, 0.25),
    (0.6, 0.0),
    (1.0, 0.5),
    (0.6, 1.0),
    (0.6, 0.75),
    (0.0, 0.75),
];
const ARROW_NAMES: [&str; 7] = [
    "tail_top",
    "shaft_top",
    "head_top",
    "tip",
    "head_bottom",
    "shaft_bottom",
    "tail_bottom",
];

fn block_arrow(f: &UnitFrame, transform: impl Fn(f64, f64) -> (f64, f64)) -> ShapeGeometry {
    let uv: Vec<(f64, f64)> = ARROW_R.iter().map(|&(u, v)| transform(u, v)).collect();
    let pts = f.map(&uv);
    let v = named(&ARROW_NAMES, &pts);
    polygon_shape(pts, v)
}

/// Arrowhead polygon with its tip at `tip`, pointing away from `from`.
fn arrowhead(tip: Point, from: Point, stroke: f64) -> (Vec<Point>, Point) {
    let len = 3.0 * stroke + 8.0;
    let half = 1.5 * stroke + 4.0;
    let (dx, dy) = (tip.x - from.x, tip.y - from.y);
    let d = (dx * dx + dy * dy).sqrt().max(1e-9);
    let (ux, uy) = (dx / d, dy / d);
    let len = len.min(d * 0.45);
    let base = Point::new(tip.x - ux * len, tip.y - uy * len);
    let head = vec![
        tip,
        Point::new(base.x - uy * half, base.y + ux * half),
        Point::new(base.x + uy * half, base.y - ux * half),
    ];
    (head, base)
}

fn bezier3(p0: Point, p1: Point, p2: Point, p3: Point, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = 1.0 - t;
            let a = s * s * s;
            let b = 3.0 * s * s * t;
            let c = 3.0 * s * t * t;
            let d = t * t * t;
            Point::new(
                a * p0.x + b * p1.x + c * p2.x + d * p3.x,
                a * p0.y + b * p1.y + c * p2.y + d * p3.y,
            )
        })
        .collect()
}

fn bezier2_uv(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let s = 1.0 - t;
            (
                s * s * p0.0 + 2.0 * s * t * p1.0 + t * t * p2.0,
                s * s * p0.1 + 2.0 * s * t * p1.1 + t * t * p2.1,
            )
        })
        .collect()
}

fn line_shape(kind: ShapeKind, r: &Rect, mirrored: bool, stroke: f64) -> ShapeGeometry {
    let (start, end) = if mirrored {
        (Point::new(r.x1, r.y2), Point::new(r.x2, r.y1))
    } else {
        (Point::new(r.x1, r.y1), Point::new(r.x2, r.y2))
    };
    let mut g = ShapeGeometry::default();
    g.endpoints.insert("start".into(), start);
    g.endpoints.insert("end".into(), end);
    match kind {
        ShapeKind::StraightLine => g.outlines.push((vec![start, end], false)),
        ShapeKind::ArrowLine => {
            let (head, base) = arrowhead(end, start, stroke);
            g.outlines.push((vec![start, base], false));
            g.heads.push(head);
        }
        ShapeKind::DoubleArrowLine => {
            let (h1, b1) = arrowhead(end, start, stroke);
            let (h0, b0) = arrowhead(start, end, stroke);
            g.outlines.push((vec![b0, b1], false));
            g.heads.push(h0);
            g.heads.push(h1);
        }
        ShapeKind::CurvedLine => {
            let c1 = Point::new(end.x, start.y);
            let c2 = Point::new(start.x, end.y);
            g.outlines.push((bezier3(start, c1, c2, end, 48), false));
        }
        ShapeKind::ElbowConnector => {
            let mx = (start.x + end.x) / 2.0;
            let e1 = Point::new(mx, start.y);
            let e2 = Point::new(mx, end.y);
            g.outlines.push((vec![start, e1, e2, end], false));
            g.vertices.insert("elbow_1".into(), e1);
            g.vertices.insert("elbow_2".into(), e2);
        }
        _ => unreachable!("not a line kind"),
    }
    g
}

/// Builds the geometry of `kind` inside `frame`. `mirrored` selects the
/// anti-diagonal for line-like kinds; `stroke` sizes arrowheads.
pub fn shape_geometry(kind: ShapeKind, frame: &Rect, mirrored: bool, stroke: f64) -> ShapeGeometry {
    use ShapeKind::*;
    let f = UnitFrame::new(frame);
    let r = *frame;
    let corners = r.corners().to_vec();
    let corner_names = ["top_left", "top_right", "bottom_right", "bottom_left"];
    let min_side = f.w.min(f.h);
    match kind {
        Rectangle | Square | TextBoxBordered => polygon_shape(corners.clone(), named(&corner_names, &corners)),
        TextBoxBorderless => {
            let mut g = polygon_shape(corners.clone(), named(&corner_names, &corners));
            g.outlines.clear();
            g
        }
        RoundedRectangle | RoundedSquare | TextBoxRounded => {
            polygon_shape(rounded_rect_path(&r, 0.18 * min_side, &[]), IndexMap::new())
        }
        Cross => {
            let t = 0.2;
            let uv = [
                (0.0, t),
                (t, 0.0),
                (0.5, 0.5 - t),
                (1.0 - t, 0.0),
                (1.0, t),
                (0.5 + t, 0.5),
                (1.0, 1.0 - t),
                (1.0 - t, 1.0),
                (0.5, 0.5 + t),
                (t, 1.0),
                (0.0, 1.0 - t),
                (0.5 - t, 0.5),
            ];
            let pts = f.map(&uv);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        Plus => {
            let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
            let uv = [
                (a, 0.0),
                (b, 0.0),
                (b, a),
                (1.0, a),
                (1.0, b),
                (b, b),
                (b, 1.0),
                (a, 1.0),
                (a, b),
                (0.0, b),
                (0.0, a),
                (a, a),
            ];
            let pts = f.map(&uv);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        Ellipse | Circle => polygon_shape(f.map(&ellipse_uv(0.5, 0.5, 0.5, 0.5, 96, false)), IndexMap::new()),
        ScaleneTriangle => tri(&f, [(0.0, 1.0), (0.3, 0.0), (1.0, 1.0)]),
        RightTriangle => tri(&f, [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        IsoscelesTriangle | EquilateralTriangle => tri(&f, [(0.5, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        ObtuseTriangle => tri(&f, [(0.0, 1.0), (0.75, 0.0), (0.5, 1.0)]),
        Diamond => {
            let pts = f.map(&[(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)]);
            let v = named(&["top", "right", "bottom", "left"], &pts);
            polygon_shape(pts, v)
        }
        Parallelogram => quad(&f, [(0.25, 0.0), (1.0, 0.0), (0.75, 1.0), (0.0, 1.0)]),
        Trapezoid => quad(&f, [(0.25, 0.0), (0.75, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        RightTrapezoid => quad(&f, [(0.0, 0.0), (0.65, 0.0), (1.0, 1.0), (0.0, 1.0)]),
        Kite => quad(&f, [(0.5, 0.0), (1.0, 0.35), (0.5, 1.0), (0.0, 0.35)]),
        Pentagon => regular_polygon(&f, 5),
        Hexagon => regular_polygon(&f, 6),
        Heptagon => regular_polygon(&f, 7),
        Octagon => regular_polygon(&f, 8),
        Nonagon => regular_polygon(&f, 9),
        Decagon => regular_polygon(&f, 10),
        Star4 => star(&f, 4),
        Star5 => star(&f, 5),
        Star6 => star(&f, 6),
        Star8 => star(&f, 8),
        Star10 => star(&f, 10),
        Star12 => star(&f, 12),
        RightArrow => block_arrow(&f, |u, v| (u, v)),
        LeftArrow => block_arrow(&f, |u, v| (1.0 - u, v)),
        UpArrow => block_arrow(&f, |u, v| (v, 1.0 - u)),
        DownArrow => block_arrow(&f, |u, v| (v, u)),
        DoubleArrow => {
            let pts = f.map(&[
                (0.0, 0.5),
                (0.3, 0.0),
                (0.3, 0.25),
                (0.7, 0.25),
                (0.7, 0.0),
                (1.0, 0.5),
                (0.7, 1.0),
                (0.7, 0.75),
                (0.3, 0.75),
                (0.3, 1.0),
            ]);
            let mut v = IndexMap::new();
            v.insert("tip_left".to_string(), pts[0]);
            v.insert("tip_right".to_string(), pts[5]);
            polygon_shape(pts, v)
        }
        Chevron => {
            let pts = f.map(&[(0.0, 0.0), (0.7, 0.0), (1.0, 0.5), (0.7, 1.0), (0.0, 1.0), (0.3, 0.5)]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        NotchedArrow => {
            let pts = f.map(&[
                (0.0, 0.25),
                (0.6, 0.25),
                (0.6, 0.0),
                (1.0, 0.5),
                (0.6, 1.0),
                (0.6, 0.75),
                (0.0, 0.75),
                (0.15, 0.5),
            ]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        BentArrow => {
            let pts = f.map(&[
                (0.0, 1.0),
                (0.0, 0.125),
                (0.7, 0.125),
                (0.7, 0.0),
                (1.0, 0.25),
                (0.7, 0.5),
                (0.7, 0.375),
                (0.25, 0.375),
                (0.25, 1.0),
            ]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        UTurnArrow => {
            let mut uv = vec![(0.0, 1.0)];
            uv.extend(arc_uv(0.4, 0.35, 0.4, 0.35, 180.0, 360.0, 24));
            uv.extend([(0.8, 0.7), (0.9, 0.7), (0.7, 1.0), (0.5, 0.7), (0.6, 0.7)]);
            uv.extend(arc_uv(0.4, 0.35, 0.2, 0.175, 360.0, 180.0, 16));
            uv.push((0.2, 1.0));
            let pts = f.map(&uv);
            let mut v = IndexMap::new();
            v.insert("tail_left".to_string(), f.at(0.0, 1.0));
            v.insert("tail_right".to_string(), f.at(0.2, 1.0));
            v.insert("tip".to_string(), f.at(0.7, 1.0));
            polygon_shape(pts, v)
        }
        CircularArrow => {
            let (rm, band, hw, hl) = (0.345, 0.075, 0.15, 0.2);
            let (a0, a1) = (180.0, 450.0);
            let mut uv = arc_uv(0.5, 0.5, rm + band, rm + band, a0, a1, 48);
            let t = a1.to_radians();
            let (rx, ry) = (cos(t), sin(t));
            let (tx, ty) = (-sin(t), cos(t));
            uv.push((0.5 + (rm + hw) * rx, 0.5 + (rm + hw) * ry));
            let tip = (0.5 + rm * rx + hl * tx, 0.5 + rm * ry + hl * ty);
            uv.push(tip);
            uv.push((0.5 + (rm - hw) * rx, 0.5 + (rm - hw) * ry));
            uv.extend(arc_uv(0.5, 0.5, rm - band, rm - band, a1, a0, 36));
            let pts = f.map(&uv);
            let mut v = IndexMap::new();
            v.insert("tip".to_string(), f.at(tip.0, tip.1));
            polygon_shape(pts, v)
        }
        StraightLine | ArrowLine | DoubleArrowLine | CurvedLine | ElbowConnector => line_shape(kind, &r, mirrored, stroke),
        RectangularCallout => {
            let pts = f.map(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.75), (0.35, 0.75), (0.15, 1.0), (0.2, 0.75), (0.0, 0.75)]);
            let v = named(
                &["top_left", "top_right", "body_bottom_right", "pointer_right", "pointer_tip", "pointer_left", "body_bottom_left"],
                &pts,
            );
            polygon_shape(pts, v)
        }
        RoundedCallout => {
            let body = Rect { x1: r.x1, y1: r.y1, x2: r.x2, y2: r.y1 + 0.75 * f.h };
            let insert = f.map(&[(0.35, 0.75), (0.15, 1.0), (0.2, 0.75)]);
            let pts = rounded_rect_path(&body, 0.15 * body.width().min(body.height()), &insert);
            let mut v = IndexMap::new();
            v.insert("pointer_tip".to_string(), insert[1]);
            polygon_shape(pts, v)
        }
        CloudCallout => {
            let body = cloud_uv(0.5, 0.36, 0.5, 0.36);
            let mut contours = vec![f.map(&body)];
            for (cu, cv, rr) in [(0.22, 0.8, 0.06), (0.15, 0.89, 0.04), (0.1, 0.96, 0.03)] {
                contours.push(f.map(&ellipse_uv(cu, cv, rr, rr, 24, false)));
            }
            let mut v = IndexMap::new();
            v.insert("pointer_tip".to_string(), f.at(0.1, 0.96));
            multi_shape(contours, v)
        }
        Ribbon => {
            let band = f.map(&[(0.15, 0.0), (0.85, 0.0), (0.85, 0.7), (0.15, 0.7)]);
            let left = f.map(&[(0.0, 0.3), (0.15, 0.3), (0.15, 1.0), (0.0, 1.0), (0.07, 0.65)]);
            let right = f.map(&[(1.0, 0.3), (0.85, 0.3), (0.85, 1.0), (1.0, 1.0), (0.93, 0.65)]);
            let mut v = named(&corner_names, &band);
            v.insert("left_notch".into(), left[4]);
            v.insert("right_notch".into(), right[4]);
            multi_shape(vec![left, right, band], v)
        }
        Banner => {
            let pts = f.map(&[(0.0, 0.0), (1.0, 0.0), (0.88, 0.5), (1.0, 1.0), (0.0, 1.0), (0.12, 0.5)]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        Heart => {
            let raw: Vec<(f64, f64)> = (0..96)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / 96.0;
                    let x = 16.0 * sin(t).powi(3);
                    let y = 13.0 * cos(t) - 5.0 * cos(2.0 * t) - 2.0 * cos(3.0 * t) - cos(4.0 * t);
                    (x, -y)
                })
                .collect();
            let pts = f.fit(&raw);
            let v = subsample(&pts, 12);
            polygon_shape(pts, v)
        }
        Cloud => {
            let pts = f.fit(&cloud_uv(0.5, 0.5, 0.5, 0.5));
            let v = subsample(&pts, 12);
            polygon_shape(pts, v)
        }
        CrescentMoon => {
            let rr = 0.5;
            let d = 0.3 * rr;
            let (ca, sa) = (cos(40f64.to_radians()), sin(40f64.to_radians()));
            let beta = libm::atan2(rr * sa, rr * ca - d).to_degrees();
            let ri = ((rr * ca - d).powi(2) + (rr * sa).powi(2)).sqrt();
            let mut uv = arc_uv(0.5, 0.5, rr, rr, 40.0, 320.0, 64);
            uv.extend(arc_uv(0.5 + d, 0.5, ri, ri, -beta, beta - 360.0, 48).into_iter().skip(1));
            uv.pop();
            let pts = f.map(&uv);
            let v = subsample(&pts, 12);
            polygon_shape(pts, v)
        }
        Sun => {
            let mut contours = vec![f.map(&ellipse_uv(0.5, 0.5, 0.3, 0.3, 64, false))];
            let mut v = IndexMap::new();
            for k in 0..8 {
                let a = 45.0 * k as f64 - 90.0;
                let p = |ang: f64, rad: f64| {
                    let t = ang.to_radians();
                    (0.5 + rad * cos(t), 0.5 + rad * sin(t))
                };
                let ray = f.map(&[p(a - 9.0, 0.38), p(a, 0.5), p(a + 9.0, 0.38)]);
                v.insert(format!("ray_{}", k + 1), ray[1]);
                contours.push(ray);
            }
            multi_shape(contours, v)
        }
        Frame => {
            let t = 0.15 * min_side;
            let inner = Rect { x1: r.x1 + t, y1: r.y1 + t, x2: r.x2 - t, y2: r.y2 - t };
            let mut hole = inner.corners().to_vec();
            hole.reverse();
            let mut v = named(&corner_names, &corners);
            for (n, p) in corner_names.iter().zip(inner.corners()) {
                v.insert(format!("inner_{n}"), p);
            }
            multi_shape(vec![corners, hole], v)
        }
        Donut | Ring => {
            let k = if kind == Donut { 0.25 } else { 0.4 };
            let outer = f.map(&ellipse_uv(0.5, 0.5, 0.5, 0.5, 96, false));
            let inner = f.map(&ellipse_uv(0.5, 0.5, k, k, 96, true));
            multi_shape(vec![outer, inner], IndexMap::new())
        }
        LightningBolt => {
            let pts = f.map(&[(0.38, 0.0), (0.78, 0.0), (0.55, 0.38), (0.85, 0.38), (0.22, 1.0), (0.42, 0.55), (0.15, 0.55)]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        Wave => {
            let n = 48;
            let mut uv: Vec<(f64, f64)> = (0..=n)
                .map(|i| {
                    let u = i as f64 / n as f64;
                    (u, 0.15 + 0.12 * sin(2.0 * PI * u))
                })
                .collect();
            uv.extend((0..=n).rev().map(|i| {
                let u = i as f64 / n as f64;
                (u, 0.85 + 0.12 * sin(2.0 * PI * u))
            }));
            let pts = f.map(&uv);
            let v = subsample(&pts, 12);
            polygon_shape(pts, v)
        }
        Arc => {
            let mut uv = arc_uv(0.5, 1.0, 0.5, 1.0, 180.0, 360.0, 48);
            uv.extend(arc_uv(0.5, 1.0, 0.3, 0.6, 360.0, 180.0, 36));
            let pts = f.map(&uv);
            let v = named(
                &["end_left_outer", "end_right_outer", "end_right_inner", "end_left_inner"],
                &f.map(&[(0.0, 1.0), (1.0, 1.0), (0.8, 1.0), (0.2, 1.0)]),
            );
            polygon_shape(pts, v)
        }
        Pie => {
            let mut uv = vec![(0.5, 0.5)];
            uv.extend(arc_uv(0.5, 0.5, 0.5, 0.5, 0.0, 270.0, 54));
            let pts = f.map(&uv);
            let v = named(&["center", "arc_start", "arc_end"], &[pts[0], pts[1], pts[pts.len() - 1]]);
            polygon_shape(pts, v)
        }
        Sector => {
            let mut uv = vec![(0.5, 1.0)];
            uv.extend(arc_uv(0.5, 1.0, 1.0, 1.0, -120.0, -60.0, 24));
            let pts = f.map(&uv);
            let v = named(&["apex", "arc_left", "arc_right"], &[pts[0], pts[1], pts[pts.len() - 1]]);
            polygon_shape(pts, v)
        }
        Drop => {
            let (cv, rr): (f64, f64) = (0.62, 0.38);
            let alpha = (rr / cv).asin().to_degrees();
            let a0 = -90.0 + (90.0 - alpha);
            let a1 = 270.0 - (90.0 - alpha);
            let mut uv = vec![(0.5, 0.0)];
            uv.extend(arc_uv(0.5, cv, rr, rr, a0, a1, 64));
            let pts = f.map(&uv);
            let mut v = IndexMap::new();
            v.insert("tip".to_string(), pts[0]);
            polygon_shape(pts, v)
        }
        Explosion => {
            let outer = [1.0, 0.82, 0.95, 0.78, 1.0, 0.88, 0.92, 0.8, 1.0, 0.85, 0.9, 0.8];
            let raw: Vec<(f64, f64)> = (0..24)
                .map(|i| {
                    let rad = if i % 2 == 0 { outer[i / 2] } else { 0.55 };
                    let jitter = if i % 4 == 1 { 4.0 } else { 0.0 };
                    let t = (-90.0 + 15.0 * i as f64 + jitter).to_radians();
                    (rad * cos(t), rad * sin(t))
                })
                .collect();
            let pts = f.fit(&raw);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        Semicircle => {
            let pts = f.map(&arc_uv(0.5, 1.0, 0.5, 1.0, 180.0, 360.0, 48));
            let v = named(&["left", "right"], &[pts[0], pts[pts.len() - 1]]);
            polygon_shape(pts, v)
        }
        QuarterCircle => {
            let mut uv = vec![(0.0, 1.0)];
            uv.extend(arc_uv(0.0, 1.0, 1.0, 1.0, -90.0, 0.0, 32));
            let pts = f.map(&uv);
            let v = named(&["corner", "top", "right"], &[pts[0], pts[1], pts[pts.len() - 1]]);
            polygon_shape(pts, v)
        }
        Teardrop => {
            let mut uv = arc_uv(0.5, 0.5, 0.5, 0.5, 0.0, 270.0, 54);
            uv.push((1.0, 0.0));
            let pts = f.map(&uv);
            let mut v = IndexMap::new();
            v.insert("tip".to_string(), f.at(1.0, 0.0));
            polygon_shape(pts, v)
        }
        Shield => {
            let mut uv = vec![(0.0, 0.0), (1.0, 0.0)];
            uv.extend(bezier2_uv((1.0, 0.45), (1.0, 0.8), (0.5, 1.0), 20));
            uv.extend(bezier2_uv((0.5, 1.0), (0.0, 0.8), (0.0, 0.45), 20).into_iter().skip(1));
            let pts = f.map(&uv);
            let v = named(&["top_left", "top_right", "tip"], &f.map(&[(0.0, 0.0), (1.0, 0.0), (0.5, 1.0)]));
            polygon_shape(pts, v)
        }
        LShape => {
            let pts = f.map(&[(0.0, 0.0), (0.4, 0.0), (0.4, 0.6), (1.0, 0.6), (1.0, 1.0), (0.0, 1.0)]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
        TShape => {
            let pts = f.map(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.35), (0.65, 0.35), (0.65, 1.0), (0.35, 1.0), (0.35, 0.35), (0.0, 0.35)]);
            let v = numbered("v", &pts);
            polygon_shape(pts, v)
        }
    }
}

fn tri(f: &UnitFrame, uv: [(f64, f64); 3]) -> ShapeGeometry {
    let pts = f.map(&uv);
    let v = numbered("v", &pts);
    polygon_shape(pts, v)
}

fn quad(f: &UnitFrame, uv: [(f64, f64); 4]) -> ShapeGeometry {
    let pts = f.map(&uv);
    let v = numbered("v", &pts);
    polygon_shape(pts, v)
}

/// Scalloped ellipse with nine bumps.
fn cloud_uv(cu: f64, cv: f64, ru: f64, rv: f64) -> Vec<(f64, f64)> {
    let n = 144;
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64 - PI / 2.0;
            let r = 0.88 + 0.12 * sin(4.5 * (t + PI / 2.0)).abs();
            (cu + ru * r * cos(t), cv + rv * r * sin(t))
        })
        .collect()
}
