//! Procedural slide-canvas scenes: sampled shapes with selection chrome,
//! rendered to PNG alongside a structured annotation.

mod chrome;
mod shapes;

pub use chrome::{draw_chrome, Anchor, ChromeAnnotation, HANDLE_ARC_RADIUS, HANDLE_CONNECTOR};
pub use shapes::{shape_geometry, Category, ShapeGeometry, ShapeKind, SHAPE_KIND_COUNT};

use indexmap::IndexMap;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{overlap_ratio, sample_color_hsv, Point, Rect, Rgb};
use crate::raster::{Canvas, DashPattern};
use crate::refexpr::{disambiguate, Palette, RefSubject};

pub const WIDTH_RANGE: (u32, u32) = (800, 2560);
pub const HEIGHT_RANGE: (u32, u32) = (600, 1440);
pub const ELEMENT_RANGE: (usize, usize) = (3, 8);
pub const PLACEMENT_TRIALS: usize = 50;
pub const OVERLAP_LIMIT: f64 = 0.25;
/// Distance kept between shapes and the canvas edge so chrome stays visible.
pub const EDGE_MARGIN: f64 = 40.0;
pub const MIN_FILL_CONTRAST: f64 = 100.0;
pub const MIN_OUTLINE_CONTRAST: f64 = 60.0;
pub const DASH_PROBABILITY: f64 = 0.2;
pub const STROKE_RANGE: (u32, u32) = (1, 5);

/// Per-scene RNG derived from the global seed and the scene index.
pub fn scene_rng(global_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub width: u32,
    pub height: u32,
    pub background: Rgb,
    pub element_count: usize,
}

impl SceneParams {
    pub fn size(&self) -> (f64, f64) {
        (self.width as f64, self.height as f64)
    }
}

pub fn sample_scene<R: Rng + ?Sized>(rng: &mut R) -> SceneParams {
    let width = rng.gen_range(WIDTH_RANGE.0..=WIDTH_RANGE.1);
    let height = rng.gen_range(HEIGHT_RANGE.0..=HEIGHT_RANGE.1);
    let background = sample_color_hsv(rng, &[]).color;
    let element_count = rng.gen_range(ELEMENT_RANGE.0..=ELEMENT_RANGE.1);
    SceneParams {
        width,
        height,
        background,
        element_count,
    }
}

/// Weighted draw of `n` kinds from the registry.
pub fn sample_kinds<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<ShapeKind> {
    let dist = WeightedIndex::new(ShapeKind::ALL.iter().map(|k| k.weight())).expect("positive weights");
    (0..n).map(|_| ShapeKind::ALL[dist.sample(rng)]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub kind: ShapeKind,
    pub frame: Rect,
    /// Anti-diagonal orientation for line-like kinds.
    pub mirrored: bool,
    /// Seed of the RNG that produced the trial candidates.
    pub sub_seed: u64,
    /// Largest overlap ratio against previously placed frames.
    pub overlap: f64,
    /// Set when no trial met the overlap limit.
    pub fallback: bool,
}

fn size_bounds(kind: ShapeKind, min_side: f64) -> (u32, u32) {
    let max_frac = if kind.is_line_like() { 0.6 } else { 0.4 };
    let lo = (0.08 * min_side / 2.0).ceil() as u32;
    let hi = ((max_frac * min_side / 2.0).floor() as u32).max(lo);
    (lo, hi)
}

/// One placement trial. Frames have even integer sides so that centers
/// and edge midpoints are integral.
pub fn candidate_frame<R: Rng + ?Sized>(rng: &mut R, kind: ShapeKind, width: u32, height: u32) -> Rect {
    let min_side = width.min(height) as f64;
    let (lo, hi) = size_bounds(kind, min_side);
    let half_w = rng.gen_range(lo..=hi);
    let half_h = match kind.fixed_aspect() {
        Some(aspect) => ((half_w as f64 / aspect).round() as u32).clamp(lo, hi),
        None => rng.gen_range(lo..=hi),
    };
    let (w, h) = (2 * half_w, 2 * half_h);
    let margin = EDGE_MARGIN as u32;
    let x_max = width.saturating_sub(margin + w).max(margin);
    let y_max = height.saturating_sub(margin + h).max(margin);
    let x = rng.gen_range(margin..=x_max) as f64;
    let y = rng.gen_range(margin..=y_max) as f64;
    Rect {
        x1: x,
        y1: y,
        x2: x + w as f64,
        y2: y + h as f64,
    }
}

fn max_overlap(candidate: &Rect, placed: &[Placement]) -> f64 {
    placed
        .iter()
        .map(|p| overlap_ratio(candidate, &p.frame).unwrap_or(1.0))
        .fold(0.0, f64::max)
}

/// Sequential rejection placement: each element gets up to
/// [`PLACEMENT_TRIALS`] candidates from its own sub-seeded RNG.
pub fn place_elements<R: Rng + ?Sized>(params: &SceneParams, kinds: &[ShapeKind], rng: &mut R) -> Vec<Placement> {
    let mut placed: Vec<Placement> = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let sub_seed: u64 = rng.gen();
        let mirrored = rng.gen_bool(0.5);
        let mut sub = ChaCha8Rng::seed_from_u64(sub_seed);
        let mut best: Option<(Rect, f64)> = None;
        let mut accepted = false;
        for _ in 0..PLACEMENT_TRIALS {
            let cand = candidate_frame(&mut sub, kind, params.width, params.height);
            let ov = max_overlap(&cand, &placed);
            if best.is_none_or(|(_, b)| ov < b) {
                best = Some((cand, ov));
            }
            if ov < OVERLAP_LIMIT {
                best = Some((cand, ov));
                accepted = true;
                break;
            }
        }
        let (frame, overlap) = best.expect("at least one trial");
        if !accepted {
            log::debug!("{kind}: no candidate below overlap limit, kept {overlap:.3}");
        }
        placed.push(Placement {
            kind,
            frame,
            mirrored,
            sub_seed,
            overlap,
            fallback: !accepted,
        });
    }
    placed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub fill: Rgb,
    pub outline: Rgb,
    pub stroke_width: u32,
    pub line_style: LineStyle,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementFlags {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub placement_fallback: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub color_fallback: bool,
}

impl ElementFlags {
    pub fn any(&self) -> bool {
        self.placement_fallback || self.color_fallback
    }
}

/// Samples a style; the returned flag is set when a contrast constraint could
/// not be met and the best candidate was used.
pub fn sample_style<R: Rng + ?Sized>(rng: &mut R, kind: ShapeKind, background: Rgb) -> (Style, bool) {
    let fill = sample_color_hsv(rng, &[(background, MIN_FILL_CONTRAST)]);
    let outline_constraints: Vec<(Rgb, f64)> = if kind.is_line_like() {
        // Lines have no fill area; the stroke must also stand out.
        vec![(fill.color, MIN_OUTLINE_CONTRAST), (background, MIN_FILL_CONTRAST)]
    } else {
        vec![(fill.color, MIN_OUTLINE_CONTRAST)]
    };
    let outline = sample_color_hsv(rng, &outline_constraints);
    let stroke_width = rng.gen_range(STROKE_RANGE.0..=STROKE_RANGE.1);
    let line_style = if rng.gen_bool(DASH_PROBABILITY) {
        LineStyle::Dashed
    } else {
        LineStyle::Solid
    };
    (
        Style {
            fill: fill.color,
            outline: outline.color,
            stroke_width,
            line_style,
        },
        fill.fallback || outline.fallback,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeResult {
    pub bbox: Rect,
    pub center: Point,
    pub vertices: IndexMap<String, Point>,
    pub endpoints: IndexMap<String, Point>,
}

/// Draws `kind` into `frame` and returns its geometric record.
pub fn rasterize_shape(canvas: &mut Canvas, kind: ShapeKind, frame: &Rect, style: &Style, mirrored: bool) -> Result<ShapeResult> {
    let bounds = Rect {
        x1: 0.0,
        y1: 0.0,
        x2: canvas.width() as f64,
        y2: canvas.height() as f64,
    };
    if !bounds.contains_rect(frame) {
        return Err(Error::InvalidGeometry(format!("{kind} frame {frame:?} leaves the canvas")));
    }
    let width = style.stroke_width as f64;
    let g = shape_geometry(kind, frame, mirrored, width);
    if !g.fill.is_empty() {
        canvas.fill_path(&g.fill, style.fill);
    }
    let dash = (style.line_style == LineStyle::Dashed).then(|| DashPattern::for_width(width));
    for (path, closed) in &g.outlines {
        canvas.stroke_polyline(path, *closed, width, style.outline, dash);
    }
    for head in &g.heads {
        canvas.fill_polygon(head, style.outline);
    }
    Ok(ShapeResult {
        bbox: *frame,
        center: frame.center(),
        vertices: g.vertices,
        endpoints: g.endpoints,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanvasElement {
    pub id: String,
    pub kind: ShapeKind,
    pub style: Style,
    pub shape: ShapeResult,
    pub chrome: ChromeAnnotation,
    pub reference: Option<String>,
    pub flags: ElementFlags,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub params: SceneParams,
    pub elements: Vec<CanvasElement>,
}

/// A rendered scene ready for serialization.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub scene: Scene,
    pub image: Canvas,
}

impl RenderedScene {
    pub fn png(&self) -> Result<Vec<u8>> {
        self.image.to_png()
    }

    pub fn annotation(&self) -> Result<CanvasAnnotation> {
        emit_annotation(&self.scene)
    }
}

/// Full pipeline for one scene using the given RNG.
pub fn generate_scene_with<R: Rng + ?Sized>(rng: &mut R) -> Result<RenderedScene> {
    generate_scene_sized_with(rng, None)
}

/// Like [`generate_scene_with`], with the canvas size pinned when given.
/// The size draw still happens so the rest of the stream is unchanged.
pub fn generate_scene_sized_with<R: Rng + ?Sized>(rng: &mut R, size: Option<(u32, u32)>) -> Result<RenderedScene> {
    let mut params = sample_scene(rng);
    if let Some((w, h)) = size {
        if w < 64 || h < 64 {
            return Err(Error::InvalidArgument(format!("canvas size {w}x{h} is below 64x64")));
        }
        params.width = w;
        params.height = h;
    }
    let kinds = sample_kinds(rng, params.element_count);
    let placements = place_elements(&params, &kinds, rng);
    let mut canvas = Canvas::new(params.width, params.height, params.background);

    let mut drawn = Vec::with_capacity(placements.len());
    for p in &placements {
        let (style, color_fallback) = sample_style(rng, p.kind, params.background);
        let shape = rasterize_shape(&mut canvas, p.kind, &p.frame, &style, p.mirrored)?;
        drawn.push((p, style, color_fallback, shape));
    }

    let mut elements = Vec::with_capacity(drawn.len());
    for (i, (p, style, color_fallback, shape)) in drawn.into_iter().enumerate() {
        let chrome = draw_chrome(&mut canvas, &shape, p.kind, rng);
        elements.push(CanvasElement {
            id: format!("shape_{:04}", i + 1),
            kind: p.kind,
            style,
            shape,
            chrome,
            reference: None,
            flags: ElementFlags {
                placement_fallback: p.fallback,
                color_fallback,
            },
            overlap: p.overlap,
        });
    }
    let mut scene = Scene { params, elements };
    assign_references(&mut scene, Palette::builtin());
    Ok(RenderedScene { scene, image: canvas })
}

/// Scene `index` of a run seeded with `global_seed`.
pub fn generate_scene(global_seed: u64, index: u64) -> Result<RenderedScene> {
    generate_scene_with(&mut scene_rng(global_seed, index))
}

pub fn generate_scene_sized(global_seed: u64, index: u64, size: Option<(u32, u32)>) -> Result<RenderedScene> {
    generate_scene_sized_with(&mut scene_rng(global_seed, index), size)
}

pub fn ref_subject(e: &CanvasElement) -> RefSubject {
    RefSubject {
        id: e.id.clone(),
        shape_name: e.kind.display_name(),
        fill: e.style.fill,
        outline: e.style.outline,
        dashed: e.style.line_style == LineStyle::Dashed,
        line_like: e.kind.is_line_like(),
        has_outline: e.kind.has_outline(),
        area: e.shape.bbox.area(),
        center: e.shape.center,
    }
}

pub fn assign_references(scene: &mut Scene, palette: &Palette) {
    let subjects: Vec<RefSubject> = scene.elements.iter().map(ref_subject).collect();
    let refs = disambiguate(&subjects, scene.params.size(), palette);
    for (e, r) in scene.elements.iter_mut().zip(refs) {
        e.reference = Some(r);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasInfo {
    pub width: u32,
    pub height: u32,
    pub background: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementAnnotation {
    pub id: String,
    pub shape_type: String,
    pub reference: String,
    pub bbox: Rect,
    pub center_point: Point,
    pub box_points: IndexMap<String, Point>,
    pub rotation_handle_center: Point,
    pub rotation_anchor: Anchor,
    pub styling: Style,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub vertices: IndexMap<String, Point>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub endpoints: IndexMap<String, Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertex_markers: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<ElementFlags>,
}

impl ElementAnnotation {
    pub fn kind(&self) -> Result<ShapeKind> {
        self.shape_type.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasAnnotation {
    pub canvas: CanvasInfo,
    pub elements: Vec<ElementAnnotation>,
}

impl CanvasAnnotation {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn element(&self, id: &str) -> Option<&ElementAnnotation> {
        self.elements.iter().find(|e| e.id == id)
    }
}

pub fn emit_annotation(scene: &Scene) -> Result<CanvasAnnotation> {
    let elements = scene
        .elements
        .iter()
        .map(|e| {
            let reference = e
                .reference
                .clone()
                .ok_or_else(|| Error::InvalidArgument(format!("element {} has no reference", e.id)))?;
            Ok(ElementAnnotation {
                id: e.id.clone(),
                shape_type: e.kind.name().to_string(),
                reference,
                bbox: e.shape.bbox,
                center_point: e.shape.center,
                box_points: e.chrome.box_points.clone(),
                rotation_handle_center: e.chrome.rotation_handle_center,
                rotation_anchor: e.chrome.rotation_anchor,
                styling: e.style,
                vertices: e.shape.vertices.clone(),
                endpoints: e.shape.endpoints.clone(),
                vertex_markers: e.chrome.vertex_markers.clone(),
                flags: e.flags.any().then_some(e.flags),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CanvasAnnotation {
        canvas: CanvasInfo {
            width: scene.params.width,
            height: scene.params.height,
            background: scene.params.background,
        },
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::redmean_distance;

    #[test]
    fn scene_params_deterministic_and_in_range() {
        assert_eq!(sample_scene(&mut scene_rng(7, 0)), sample_scene(&mut scene_rng(7, 0)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 9];
        let (mut wmin, mut wmax) = (u32::MAX, 0);
        for _ in 0..10_000 {
            let p = sample_scene(&mut rng);
            wmin = wmin.min(p.width);
            wmax = wmax.max(p.width);
            assert!((600..=1440).contains(&p.height));
            counts[p.element_count] += 1;
        }
        assert!(wmin >= 800 && wmax <= 2560);
        // Chi-square against uniform over 3..=8, 5 dof, p > 0.01 ⇔ χ² < 15.086.
        let expected = 10_000.0 / 6.0;
        let chi2: f64 = counts[3..=8].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 15.086, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn single_element_always_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = SceneParams {
            width: 800,
            height: 600,
            background: Rgb::WHITE,
            element_count: 1,
        };
        let p = place_elements(&params, &[ShapeKind::Rectangle], &mut rng);
        assert_eq!(p.len(), 1);
        assert!(!p[0].fallback);
        assert_eq!(p[0].overlap, 0.0);
    }

    #[test]
    fn crowded_fallback_records_minimum() {
        let params = SceneParams {
            width: 800,
            height: 600,
            background: Rgb::WHITE,
            element_count: 8,
        };
        let mut any_fallback = false;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kinds = vec![ShapeKind::StraightLine; 8];
            let placed = place_elements(&params, &kinds, &mut rng);
            for (i, p) in placed.iter().enumerate() {
                if !p.fallback {
                    assert!(p.overlap < OVERLAP_LIMIT);
                    continue;
                }
                any_fallback = true;
                // Re-run the trials from the recorded sub-seed.
                let mut sub = ChaCha8Rng::seed_from_u64(p.sub_seed);
                let min = (0..PLACEMENT_TRIALS)
                    .map(|_| {
                        let c = candidate_frame(&mut sub, p.kind, params.width, params.height);
                        max_overlap(&c, &placed[..i])
                    })
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(p.overlap, min);
                assert!(min >= OVERLAP_LIMIT);
            }
        }
        assert!(any_fallback, "crowded layouts should trigger at least one fallback");
    }

    #[test]
    fn square_aspect_and_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2_000 {
            for &k in ShapeKind::ALL {
                let r = candidate_frame(&mut rng, k, 1000, 700);
                if k.is_square_aspect() {
                    assert_eq!(r.width(), r.height());
                }
                let max = if k.is_line_like() { 0.6 } else { 0.4 } * 700.0;
                assert!(r.width() >= 0.08 * 700.0 && r.width() <= max, "{k} {r:?}");
                assert!(r.height() >= 0.08 * 700.0 && r.height() <= max, "{k} {r:?}");
                assert!(r.x1 >= EDGE_MARGIN && r.x2 <= 1000.0 - EDGE_MARGIN);
                assert!(r.y1 >= EDGE_MARGIN && r.y2 <= 700.0 - EDGE_MARGIN);
            }
        }
    }

    #[test]
    fn style_constraints_and_dash_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut dashed = 0usize;
        let n = 10_000;
        for i in 0..n {
            let bg = sample_color_hsv(&mut rng, &[]).color;
            let kind = ShapeKind::ALL[i % ShapeKind::ALL.len()];
            let (s, flagged) = sample_style(&mut rng, kind, bg);
            assert!((1..=5).contains(&s.stroke_width));
            if !flagged {
                assert!(redmean_distance(s.fill, bg) >= 100.0);
                assert!(redmean_distance(s.outline, s.fill) >= 60.0);
            }
            dashed += (s.line_style == LineStyle::Dashed) as usize;
        }
        let rate = dashed as f64 / n as f64;
        assert!((rate - 0.2).abs() <= 0.02, "dash rate {rate}");
    }

    #[test]
    fn rasterize_rectangle() {
        let mut c = Canvas::new(200, 100, Rgb::WHITE);
        let style = Style {
            fill: Rgb::new(255, 0, 0),
            outline: Rgb::BLACK,
            stroke_width: 1,
            line_style: LineStyle::Solid,
        };
        let r = rasterize_shape(&mut c, ShapeKind::Rectangle, &Rect::new(10.0, 10.0, 110.0, 60.0).unwrap(), &style, false).unwrap();
        assert_eq!(r.center, Point::new(60.0, 35.0));
        assert_eq!(r.vertices.len(), 4);
        assert_eq!(c.get(60, 35), Rgb::new(255, 0, 0));
        let out = Rect::new(150.0, 50.0, 250.0, 90.0).unwrap();
        assert!(rasterize_shape(&mut c, ShapeKind::Rectangle, &out, &style, false).is_err());
    }

    #[test]
    fn annotation_round_trips_and_is_complete() {
        let scene = generate_scene(42, 0).unwrap();
        let ann = scene.annotation().unwrap();
        let text = ann.to_json().unwrap();
        assert_eq!(CanvasAnnotation::from_json(&text).unwrap(), ann);
        let (w, h) = scene.scene.params.size();
        for e in &ann.elements {
            assert!(e.bbox.contains(e.center_point));
            assert_eq!(e.center_point, e.bbox.center());
            let mut pts: Vec<Point> = e.box_points.values().copied().collect();
            pts.extend(e.vertices.values());
            pts.extend(e.endpoints.values());
            pts.push(e.rotation_handle_center);
            for p in pts {
                assert!(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= h);
            }
        }
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["id", "shape_type", "reference", "bbox", "center_point", "box_points", "rotation_handle_center", "styling"] {
            assert!(v["elements"][0].get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn unassigned_reference_is_an_error() {
        let mut scene = generate_scene(1, 1).unwrap().scene;
        scene.elements[0].reference = None;
        assert!(emit_annotation(&scene).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scene(9, 3).unwrap();
        let b = generate_scene(9, 3).unwrap();
        assert_eq!(a.png().unwrap(), b.png().unwrap());
        assert_eq!(a.annotation().unwrap().to_json().unwrap(), b.annotation().unwrap().to_json().unwrap());
    }

    #[test]
    fn anchors_all_occur() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..200 {
            let s = generate_scene(77, i).unwrap();
            for e in &s.scene.elements {
                seen.insert(e.chrome.rotation_anchor);
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn worked_example_center_arithmetic() {
        // A rounded square from (548,484) to (796,732) centers at (672,608).
        let r = Rect::new(548.0, 484.0, 796.0, 732.0).unwrap();
        assert_eq!(r.center(), Point::new(672.0, 608.0));
        let tl = Point::new(r.x1, r.y1);
        let br = Point::new(r.x2, r.y2);
        assert_eq!(tl.midpoint(br), Point::new(672.0, 608.0));
    }
}
