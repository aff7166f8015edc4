//! Task generation. A registry of detailed task types, a deterministic
//! template path that turns scene geometry into (prompt, trace) records with
//! the regions those records must hit, and an optional external-model path
//! driven by per-modality system prompts.

use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canvas::{CanvasAnnotation, Category, ElementAnnotation};
use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};
use crate::eval::{judge_points, BenchmarkSample, CorrectRegion, RegionShape, Verdict};
use crate::geometry::{Point, Polygon, Rect};
use crate::image_annot::RegionAnnotation;
use crate::modality::Modality;
use crate::refexpr::{region_phrase, Grid};
use crate::table::{corner_fill_target, edge_handle, excel_name, CellAnnotation, TableAnnotation};
use crate::text::{cursor_target, sample_span, span_drag_target, SpanKind, SpanTarget, TextPage};
use crate::trace::{
    action_type_tag, derived_translation, find_coordinate_leak, parse_trace, point_to_trace, validate_trace,
    ActionClass, ActionTrace, CoordinateSpace, ElementRef, Template,
};

/// Half-size of the square accepted around a grabbed handle or corner.
pub const HANDLE_TOLERANCE: f64 = 6.0;
/// Half-size of the square accepted around a computed drop point.
pub const DROP_TOLERANCE: f64 = 10.0;
/// Half-size of the square around each traced boundary point.
pub const TRAIL_TOLERANCE: f64 = 3.0;
/// Half-width of the band around a column edge.
pub const EDGE_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyPoints {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "N")]
    N,
}

impl fmt::Display for KeyPoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyPoints::One => "1",
            KeyPoints::Two => "2",
            KeyPoints::N => "N",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DetailedTask {
    pub id: &'static str,
    pub modality: Modality,
    pub key_points: KeyPoints,
    pub target_type: &'static str,
    /// Whether the key points must be hit in sequence.
    pub ordered: bool,
    /// Whether the template path can produce it from synthesized scenes.
    pub synthesizable: bool,
}

const fn row(
    id: &'static str,
    modality: Modality,
    key_points: KeyPoints,
    target_type: &'static str,
    ordered: bool,
    synthesizable: bool,
) -> DetailedTask {
    DetailedTask {
        id,
        modality,
        key_points,
        target_type,
        ordered,
        synthesizable,
    }
}

use KeyPoints::{One, Two, N};
use Modality::{Canvas as Cv, Gui as G, Image as Im, Table as Tb, Text as Tx};

pub static REGISTRY: [DetailedTask; 33] = [
    row("gui.1.icon", G, One, "icon", false, false),
    row("gui.1.text", G, One, "text", false, false),
    row("gui.2.icon", G, Two, "icon", true, false),
    row("gui.2.slide_bar", G, Two, "slide bar", true, false),
    row("gui.2.empty_region", G, Two, "empty region", true, false),
    row("gui.2.text", G, Two, "text", true, false),
    row("text.1.between_text", Tx, One, "between text", false, true),
    row("text.1.empty_region", Tx, One, "empty region", false, false),
    row("text.2.select_span", Tx, Two, "select text span", false, true),
    row("text.2.one_word", Tx, Two, "one word", false, true),
    row("text.2.drag_span", Tx, Two, "drag text span", true, true),
    row("table.1.empty_cell", Tb, One, "empty cell", false, true),
    row("table.1.content_cell", Tb, One, "content cell", false, true),
    row("table.2.drag_cell", Tb, Two, "drag cell", true, true),
    row("table.2.select_cells", Tb, Two, "select cells", false, true),
    row("table.2.edge", Tb, Two, "edge", true, true),
    row("table.2.corner", Tb, Two, "corner", true, true),
    row("canvas.1.shape", Cv, One, "shape", false, true),
    row("canvas.2.empty_region", Cv, Two, "empty region", false, false),
    row("canvas.2.point", Cv, Two, "point", true, true),
    row("canvas.2.text", Cv, Two, "text", true, true),
    row("canvas.2.shape", Cv, Two, "shape", true, true),
    row("canvas.2.line_arrow", Cv, Two, "line/arrow", true, true),
    row("canvas.n.point", Cv, N, "point", true, false),
    row("canvas.n.empty_region", Cv, N, "empty region", true, false),
    row("image.1.object", Im, One, "object", false, true),
    row("image.1.region", Im, One, "region", false, false),
    row("image.2.image", Im, Two, "image", true, false),
    row("image.2.object", Im, Two, "object", true, true),
    row("image.2.point", Im, Two, "point", false, true),
    row("image.2.region", Im, Two, "region", true, false),
    row("image.n.zigzag_mask", Im, N, "zig-zag mask", false, true),
    row("image.n.boundary", Im, N, "boundary", true, true),
];

pub fn task(id: &str) -> Option<&'static DetailedTask> {
    REGISTRY.iter().find(|t| t.id == id)
}

/// Synthesizable tasks of one modality, in registry order.
pub fn synthesizable(modality: Modality) -> Vec<&'static DetailedTask> {
    REGISTRY
        .iter()
        .filter(|t| t.synthesizable && t.modality == modality)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuiElement {
    pub element_id: u64,
    pub description: String,
    /// Normalized `[x, y]`.
    pub click_point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneContent {
    Gui(Vec<GuiElement>),
    Canvas(CanvasAnnotation),
    Table(TableAnnotation),
    Text(TextPage),
    Image(Vec<RegionAnnotation>),
}

/// Everything a generator needs about one screenshot.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskScene {
    pub image: String,
    pub size: (u32, u32),
    pub content: SceneContent,
}

impl TaskScene {
    pub fn modality(&self) -> Modality {
        match self.content {
            SceneContent::Gui(_) => Modality::Gui,
            SceneContent::Canvas(_) => Modality::Canvas,
            SceneContent::Table(_) => Modality::Table,
            SceneContent::Text(_) => Modality::Text,
            SceneContent::Image(_) => Modality::Image,
        }
    }

    /// Ids a record may list in `used_elements`.
    pub fn element_refs(&self) -> Vec<ElementRef> {
        match &self.content {
            SceneContent::Gui(els) => els.iter().map(|e| ElementRef::Index(e.element_id)).collect(),
            SceneContent::Canvas(a) => a.elements.iter().map(|e| ElementRef::Name(e.id.clone())).collect(),
            SceneContent::Table(t) => t.cells.iter().map(|c| ElementRef::Name(c.excel_name.clone())).collect(),
            SceneContent::Text(_) => Vec::new(),
            SceneContent::Image(rs) => rs.iter().map(|r| ElementRef::Name(r.id.clone())).collect(),
        }
    }

    pub fn coordinate_space(&self) -> CoordinateSpace {
        match self.content {
            SceneContent::Gui(_) => CoordinateSpace::Normalized,
            _ => CoordinateSpace::Pixels,
        }
    }

    fn size_f(&self) -> (f64, f64) {
        (self.size.0 as f64, self.size.1 as f64)
    }

    fn bounds(&self) -> Rect {
        Rect {
            x1: 0.0,
            y1: 0.0,
            x2: self.size.0 as f64,
            y2: self.size.1 as f64,
        }
    }
}

/// A template record together with the regions its key points must hit,
/// computed from the source geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedRecord {
    pub record: DatasetRecord,
    pub regions: Vec<CorrectRegion>,
}

impl GroundedRecord {
    pub fn sample(&self, id: &str) -> BenchmarkSample {
        let [w, h] = self.record.image_size.unwrap_or([0, 0]);
        BenchmarkSample {
            id: id.to_string(),
            modality: self.record.modality,
            instruction: self.record.prompt.clone(),
            image_ref: self.record.image.clone(),
            image_size: [w as f64, h as f64],
            correct_regions: self.regions.clone(),
            banned_regions: Vec::new(),
        }
    }

    /// Re-parses the record and judges its resolved points against the
    /// regions.
    pub fn self_ground(&self) -> Result<Verdict> {
        let trace = self.record.to_trace()?;
        let points: Vec<Point> = trace.resolved_points().into_iter().flatten().collect();
        let sample = self.sample("self");
        sample.validate("self")?;
        Ok(judge_points(&sample, &points))
    }
}

fn inflate(r: &Rect, d: f64) -> Rect {
    Rect {
        x1: r.x1 - d,
        y1: r.y1 - d,
        x2: r.x2 + d,
        y2: r.y2 + d,
    }
}

fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Instruction phrasings per task variant.
fn phrases(key: &str) -> &'static [&'static str] {
    match key {
        "canvas.1.shape" => &[
            "Select the {ref}.",
            "Click on the {ref} to select it.",
            "I only want the {ref} selected, nothing else. Click it once.",
            "Please pick the {ref} on this slide.",
        ],
        "canvas.1.shape+double" => &[
            "Double-click the {ref}.",
            "I want to edit the {ref}; double-click it for me.",
            "Open the {ref} for editing with a double click.",
        ],
        "canvas.1.shape+right" => &[
            "Right-click the {ref} to bring up its context menu.",
            "I need the context menu for the {ref}. Right-click it.",
            "Open the right-click menu of the {ref}.",
        ],
        "canvas.1.shape+type" => &[
            "Click into the {ref} and type \"{text}\".",
            "Put the word \"{text}\" into the {ref}.",
            "I want the {ref} to say \"{text}\". Click it and enter that.",
        ],
        "canvas.2.point" => &[
            "Drag the {handle} handle of the selected {ref} {verb} by about {d} pixels.",
            "The {ref} is selected. Use its {handle} control point to {action} it by roughly {d} px.",
            "I'd like the {ref} a bit {adj}. Pull its {handle} sizing handle about {d} pixels {direction}.",
        ],
        "canvas.2.point+line" => &[
            "Drag the {which} of the {ref} {direction} by about {d} pixels.",
            "Move only the {which} of the {ref}, roughly {d} px {direction}.",
            "Grab the {which} handle of the {ref} and pull it about {d} pixels {direction}.",
        ],
        "canvas.2.text" => &[
            "I have selected the {ref}; drag it to the exact center of the slide.",
            "Move the {ref} so that it sits right in the middle of the canvas.",
            "Center the {ref} on the page by dragging it.",
            "Please drag the {ref} to the center of the slide.",
        ],
        "canvas.2.shape" => &[
            "Drag the {a} to the exact midpoint between the {b} and the {c}.",
            "Move the {a} so it sits halfway between the {b} and the {c}.",
            "I want the {a} centered between the {b} and the {c}. Drag it there.",
        ],
        "canvas.2.line_arrow" => &[
            "Move the {ref} so that its {tip} touches the {side} of the {target}.",
            "Drag the whole {ref} until its {tip} connects to the {side} of the {target}.",
            "Connect the {ref} to the {target}: drag it so its {tip} lands on the {side} of that shape.",
        ],
        "table.1.empty_cell" => &[
            "Please select cell {cell} in the table.",
            "Click on the empty cell {cell}.",
            "I want to type into {cell}. Select that cell.",
            "Select the blank cell at {cell}.",
        ],
        "table.1.content_cell" => &[
            "Please select the cell that contains \"{content}\"{hint} in the table.",
            "Click the cell with \"{content}\"{hint}.",
            "Where is \"{content}\"{hint}? Select that cell for me.",
        ],
        "table.2.drag_cell" => &[
            "Drag the selected cell {cell} to the next row.",
            "Move cell {cell} down one row by dragging it.",
            "I selected {cell}. Drag it into the row just below.",
        ],
        "table.2.select_cells" => &[
            "Drag the mouse to select the two cells containing {ca} and {cb}.",
            "Select cells {a} and {b} together with one drag.",
            "Highlight the range from {a} to {b}.",
        ],
        "table.2.edge" => &[
            "Drag the right boundary of the {header} column header to make the column {factor} its current width.",
            "Resize the {header} column to {factor} its width by dragging its right edge.",
            "The {header} column needs to be {factor} as wide as it is now. Drag its right border.",
        ],
        "table.2.corner" => &[
            "Drag the lower-right corner of cell {a} down to the lower-right corner of cell {b} to fill the formula.",
            "Fill {a} down through {b} using the fill handle.",
            "Copy the content of {a} into the {n} cells below it, ending at {b}, by dragging its corner.",
        ],
        "text.1.between_text" => &[
            "Click once at the position {side} \"{word}\"{hint} to set the cursor.",
            "Place the text cursor {side} \"{word}\"{hint}.",
            "I want to insert something {side} the word \"{word}\"{hint}. Put the caret there.",
        ],
        "text.2.select_span" => &[
            "Drag the mouse to highlight \"{span}\"{hint}.",
            "Select the text \"{span}\"{hint}.",
            "Please highlight \"{span}\"{hint} by dragging across it.",
        ],
        "text.2.select_span+long" => &[
            "Drag to select the passage starting with \"{head}\" and ending with \"{tail}\".",
            "Highlight everything from \"{head}\" through \"{tail}\".",
            "Select the text that begins at \"{head}\" and stops after \"{tail}\".",
        ],
        "text.2.one_word" => &[
            "Drag the mouse to select the word \"{word}\"{hint}.",
            "Select only the word \"{word}\"{hint}.",
            "Highlight \"{word}\"{hint} and nothing else.",
        ],
        "text.2.drag_span" => &[
            "The text \"{span}\" is selected. Drag it to just before \"{word}\"{hint}.",
            "Move the highlighted \"{span}\" so it lands right before \"{word}\"{hint}.",
            "Drag the selection \"{span}\" to the position in front of \"{word}\"{hint}.",
        ],
        "image.1.object" => &[
            "Click once inside the {ref}.",
            "I'm using the quick selection tool. Click on the {ref}.",
            "Select the {ref} with a single click.",
        ],
        "image.2.object" => &[
            "Drag the {a} so it sits directly {relation} the {b}.",
            "Move the {a} {relation} the {b}.",
            "I want the {a} placed {relation} the {b}. Drag it there.",
        ],
        "image.2.point" => &[
            "Crop the image to the {ref} without leaving any extra space.",
            "I'm using the crop tool. Drag a box that exactly covers the {ref}.",
            "Draw a tight crop rectangle around the {ref}.",
        ],
        "image.n.zigzag_mask" => &[
            "I have selected the eraser tool. Drag it over the entire {ref}.",
            "Paint over the whole {ref} with the brush to mask it.",
            "Scribble across the {ref} so that all of it gets covered.",
        ],
        "image.n.boundary" => &[
            "I have activated the free selection tool. Draw a boundary around the {ref}.",
            "Trace the outline of the {ref} with the lasso.",
            "Select the {ref} by drawing along its edge.",
        ],
        _ => &[],
    }
}

/// Chain-of-thought phrasings. They must never contain coordinates.
fn reasoning(key: &str) -> &'static [&'static str] {
    match key.split('+').next().unwrap_or(key) {
        "canvas.1.shape" => &[
            "The request is about the {ref}. Its center lies on the shape, so acting there targets it and nothing else.",
            "I can see the {ref} on the slide. Hitting the middle of its bounding box is the safest way to act on it.",
        ],
        "canvas.2.point" => &[
            "The {ref} shows small handles when selected. I grab the requested handle and move it the stated distance in the right direction.",
            "Resizing happens through the control point, not the body. I press on that handle and release after moving it the requested amount.",
        ],
        "canvas.2.text" => &[
            "Moving the box by its middle keeps the offset trivial: the grab point must end at the middle of the slide, which is half the width and half the height.",
            "The {ref} is already selected. I drag it from its center and drop it at the center of the canvas.",
        ],
        "canvas.2.shape" => &[
            "The midpoint between the {b} and the {c} is the average of their centers. Dragging the {a} by its center to that spot places it there.",
            "I pick up the {a} at its center and release it halfway between the other two shapes.",
        ],
        "canvas.2.line_arrow" => &[
            "Dragging moves the whole {ref}, so the grab point must travel by the same offset that brings its {tip} onto the {side} of the {target}.",
            "I hold the {ref} by its middle. Its {tip} has to end on the {side} of the {target}, so I shift the grab point by that offset.",
        ],
        "table.1.empty_cell" => &[
            "Cell {cell} is named by its column letter and row number. I find that column and row and click inside the cell.",
            "The target is {cell}, which is currently empty. Clicking anywhere inside it selects it.",
        ],
        "table.1.content_cell" => &[
            "I scan the table for the requested value and click the cell that holds it.",
            "Only one cell matches the description, so I click in its middle.",
        ],
        "table.2.drag_cell" => &[
            "To move {cell} one row down I press inside it and release in the cell directly below, which has the same width and height.",
            "The row below starts where this cell ends. I drag from {cell} into the cell right under it.",
        ],
        "table.2.select_cells" => &[
            "The two cells are adjacent, so a single drag from one to the other selects both.",
            "I press in the first cell and release in the second one to select the range.",
        ],
        "table.2.edge" => &[
            "Column width is changed by dragging the right edge of its header. The new edge sits at the left edge plus the requested multiple of the current width.",
            "I grab the border on the right side of the {header} header and drag it horizontally until the column has the requested width.",
        ],
        "table.2.corner" => &[
            "The fill handle is the lower-right corner of {a}. Rows have equal height, so the corner of {b} lies that many row heights further down.",
            "I press the corner handle of {a} and drag straight down until I reach the corner of {b}.",
        ],
        "text.1.between_text" => &[
            "The cursor goes into the gap between characters. I click in that gap so the caret lands at the requested place.",
            "Clicking between two glyphs places the caret there, so I aim at the thin gap next to the word.",
        ],
        "text.2.select_span" => &[
            "A selection runs from the gap before the first character to the gap after the last. I drag between those two places.",
            "I press just before the first character of the passage and release just after its last character.",
        ],
        "text.2.one_word" => &[
            "To select exactly one word I start in the gap before its first letter and end in the gap after its last letter.",
            "Dragging from one boundary of the word to the other highlights it without touching neighbors.",
        ],
        "text.2.drag_span" => &[
            "Selected text moves when I press inside it and drag. I drop it in the gap before the target word.",
            "I grab the highlighted text in its middle and release at the insertion point in front of the target word.",
        ],
        "image.1.object" => &[
            "The {ref} covers a solid area. Clicking in its middle is well inside its outline.",
            "A click inside the object is enough for the selection tool, so I aim at its center.",
        ],
        "image.2.object" => &[
            "I drag the {a} by its center. To end up {relation} the {b}, that center must move to a spot just past the edge of the {b}.",
            "The distance is measured so the two objects do not overlap after the move.",
        ],
        "image.2.point" => &[
            "A tight crop runs from the top-left corner of the object to its bottom-right corner.",
            "The crop rectangle should touch the object on every side, so I drag between its extreme corners.",
        ],
        "image.n.zigzag_mask" => &[
            "Covering an area with a brush works best as a zig-zag that alternates between the two sides of the outline.",
            "I sweep back and forth across the {ref}, hopping between opposite edges, so the stroke covers all of it.",
        ],
        "image.n.boundary" => &[
            "A lasso selection follows the outline and closes where it started, so I walk along the edge point by point.",
            "I trace the contour of the {ref} in order and return to the first point.",
        ],
        _ => &["I locate the target described in the request and act on it."],
    }
}

struct Draft {
    variant: &'static str,
    points: Vec<Point>,
    template: Template,
    vars: Vec<(&'static str, String)>,
    used: Vec<ElementRef>,
    shapes: Vec<RegionShape>,
}

impl Draft {
    fn new(variant: &'static str, points: Vec<Point>, template: Template) -> Self {
        Self {
            variant,
            points,
            template,
            vars: Vec::new(),
            used: Vec::new(),
            shapes: Vec::new(),
        }
    }

    fn var(mut self, k: &'static str, v: impl Into<String>) -> Self {
        self.vars.push((k, v.into()));
        self
    }

    fn region(mut self, shape: impl Into<RegionShape>) -> Self {
        self.shapes.push(shape.into());
        self
    }

    fn uses(mut self, e: impl Into<String>) -> Self {
        self.used.push(ElementRef::Name(e.into()));
        self
    }
}

const DRAG: Template = Template::Drag { button: None };

fn finish<R: Rng + ?Sized>(scene: &TaskScene, task: &DetailedTask, d: Draft, rng: &mut R) -> Result<GroundedRecord> {
    let (w, h) = scene.size_f();
    let points: Vec<Point> = d
        .points
        .iter()
        .map(|p| Point::new(p.x.round().clamp(0.0, w), p.y.round().clamp(0.0, h)))
        .collect();
    let mut trace = point_to_trace(&points, &d.template, CoordinateSpace::Pixels)?;
    let bank = phrases(d.variant);
    let prompt = fill(bank.choose(rng).expect("every synthesizable task has phrasings"), &d.vars);
    let mut cot = fill(reasoning(d.variant).choose(rng).expect("non-empty"), &d.vars);
    if find_coordinate_leak(&cot).is_some() {
        cot = reasoning("").join(" ");
    }
    trace.chain_of_thought = cot;
    trace.used_elements = d.used;
    let report = validate_trace(&trace, &scene.element_refs(), (w, h), CoordinateSpace::Pixels);
    if !report.is_valid() {
        return Err(Error::InvalidArgument(format!(
            "template for {} produced an invalid trace: {:?}",
            task.id, report.violations
        )));
    }
    // Tolerance squares near the edge are clipped to the image; every key
    // point is already clamped inside it.
    let bounds = scene.bounds();
    let regions = d
        .shapes
        .into_iter()
        .map(|s| match s {
            RegionShape::Rect(r) => RegionShape::Rect(r.clip_to(&bounds).unwrap_or(r)),
            other => other,
        })
        .enumerate()
        .map(|(i, s)| {
            if task.ordered {
                CorrectRegion::ranked(s, i as u32)
            } else {
                CorrectRegion::unranked(s)
            }
        })
        .collect();
    let mut record = DatasetRecord::from_trace(&trace, &prompt, &scene.image, scene.modality(), scene.size);
    record.task = Some(task.id.to_string());
    Ok(GroundedRecord { record, regions })
}

/// Generates a record for `task` on `scene`. An empty result means the scene
/// has no element the task can use.
pub fn template_generate<R: Rng + ?Sized>(
    scene: &TaskScene,
    task: &DetailedTask,
    rng: &mut R,
) -> Result<Vec<GroundedRecord>> {
    if task.modality != scene.modality() {
        return Err(Error::InvalidArgument(format!(
            "task {} is for {}, scene is {}",
            task.id,
            task.modality,
            scene.modality()
        )));
    }
    if !task.synthesizable {
        return Err(Error::InvalidArgument(format!("task {} has no template", task.id)));
    }
    let draft = match &scene.content {
        SceneContent::Canvas(a) => canvas_draft(scene, a, task, rng),
        SceneContent::Table(t) => table_draft(scene, t, task, rng),
        SceneContent::Text(p) => text_draft(p, task, rng)?,
        SceneContent::Image(rs) => image_draft(scene, rs, task, rng),
        SceneContent::Gui(_) => None,
    };
    match draft {
        Some(d) => Ok(vec![finish(scene, task, d, rng)?]),
        None => Ok(Vec::new()),
    }
}

/// Every synthesizable task of the scene's modality, each with its own
/// sub-seeded generator so adding a task never shifts the others.
pub fn generate_all(scene: &TaskScene, seed: u64) -> Result<Vec<GroundedRecord>> {
    let mut out = Vec::new();
    for (i, t) in synthesizable(scene.modality()).into_iter().enumerate() {
        let mut rng = crate::canvas::scene_rng(seed, i as u64);
        out.extend(template_generate(scene, t, &mut rng)?);
    }
    Ok(out)
}

// Canvas

fn is_text_box(e: &ElementAnnotation) -> bool {
    e.kind().is_ok_and(|k| k.category() == Category::TextBoxes)
}

fn is_line(e: &ElementAnnotation) -> bool {
    e.kind().is_ok_and(|k| k.is_line_like()) && e.endpoints.contains_key("end")
}

fn in_bounds(p: Point, b: &Rect) -> bool {
    p.is_finite() && b.contains(p)
}

const FILL_WORDS: [&str; 8] = ["Agenda", "Summary", "Next steps", "Q3 plan", "Notes", "Hello", "Draft", "Results"];

fn direction_words(dx: f64, dy: f64) -> String {
    let v = if dy < -0.5 {
        "up"
    } else if dy > 0.5 {
        "down"
    } else {
        ""
    };
    let hz = if dx < -0.5 {
        "left"
    } else if dx > 0.5 {
        "right"
    } else {
        ""
    };
    match (v, hz) {
        ("", h) => format!("to the {h}"),
        (v, "") => v.to_string(),
        (v, h) => format!("{v} and to the {h}"),
    }
}

fn canvas_draft<R: Rng + ?Sized>(
    scene: &TaskScene,
    a: &CanvasAnnotation,
    task: &DetailedTask,
    rng: &mut R,
) -> Option<Draft> {
    let bounds = scene.bounds();
    let els = &a.elements;
    match task.id {
        "canvas.1.shape" => {
            let e = els.choose(rng)?;
            let (variant, template) = match rng.gen_range(0..4) {
                0 => ("canvas.1.shape+double", Template::Click { clicks: Some(2), button: None }),
                1 => ("canvas.1.shape+right", Template::Click { clicks: None, button: Some("right".into()) }),
                2 if is_text_box(e) => {
                    let text = FILL_WORDS.choose(rng)?.to_string();
                    ("canvas.1.shape+type", Template::ClickType { text, clicks: None })
                }
                _ => ("canvas.1.shape", Template::Click { clicks: None, button: None }),
            };
            let text = match &template {
                Template::ClickType { text, .. } => text.clone(),
                _ => String::new(),
            };
            Some(
                Draft::new(variant, vec![e.center_point], template)
                    .var("ref", &e.reference)
                    .var("text", text)
                    .uses(&e.id)
                    .region(inflate(&e.bbox, 1.0)),
            )
        }
        "canvas.2.point" => {
            let e = els.choose(rng)?;
            for _ in 0..16 {
                let d = rng.gen_range(20..=100) as f64;
                if is_line(e) {
                    let which = if rng.gen_bool(0.5) { "start" } else { "end" };
                    let handle = e.endpoints[which];
                    let angle = rng.gen_range(0..8) as f64 * std::f64::consts::FRAC_PI_4;
                    let (dx, dy) = (libm::cos(angle).round(), libm::sin(angle).round());
                    let norm = (dx * dx + dy * dy).sqrt();
                    let target = Point::new(handle.x + dx * d / norm, handle.y + dy * d / norm);
                    if !in_bounds(target, &bounds) {
                        continue;
                    }
                    let label = if which == "start" { "starting point" } else { "end point" };
                    return Some(
                        Draft::new("canvas.2.point+line", vec![handle, target], DRAG)
                            .var("ref", &e.reference)
                            .var("which", label)
                            .var("direction", direction_words(dx, dy))
                            .var("d", format!("{d}"))
                            .uses(&e.id)
                            .region(Rect::around(handle, HANDLE_TOLERANCE))
                            .region(Rect::around(target, DROP_TOLERANCE)),
                    );
                }
                let (name, handle) = e.box_points.iter().collect::<Vec<_>>().choose(rng).map(|(n, p)| (n.to_string(), **p))?;
                let c = e.bbox.center();
                let out = (
                    (handle.x - c.x).signum() * ((handle.x - c.x).abs() > 0.5) as i32 as f64,
                    (handle.y - c.y).signum() * ((handle.y - c.y).abs() > 0.5) as i32 as f64,
                );
                let grow = rng.gen_bool(0.6);
                let limit = 0.4 * e.bbox.width().min(e.bbox.height());
                if !grow && d > limit {
                    continue;
                }
                let s = if grow { 1.0 } else { -1.0 };
                let target = Point::new(handle.x + s * out.0 * d, handle.y + s * out.1 * d);
                if !in_bounds(target, &bounds) {
                    continue;
                }
                let label = name.replace("_center", "").replace('_', "-");
                return Some(
                    Draft::new("canvas.2.point", vec![handle, target], DRAG)
                        .var("ref", &e.reference)
                        .var("handle", label)
                        .var("verb", if grow { "outward" } else { "inward" })
                        .var("action", if grow { "enlarge" } else { "shrink" })
                        .var("adj", if grow { "larger" } else { "smaller" })
                        .var("direction", direction_words(s * out.0, s * out.1))
                        .var("d", format!("{d}"))
                        .uses(&e.id)
                        .region(Rect::around(handle, HANDLE_TOLERANCE))
                        .region(Rect::around(target, DROP_TOLERANCE)),
                );
            }
            None
        }
        "canvas.2.text" => {
            let center = bounds.center();
            let boxes: Vec<_> = els
                .iter()
                .filter(|e| is_text_box(e) && e.center_point.distance(center) > 2.0 * DROP_TOLERANCE)
                .collect();
            let e = boxes.choose(rng)?;
            Some(
                Draft::new("canvas.2.text", vec![e.center_point, center], DRAG)
                    .var("ref", &e.reference)
                    .uses(&e.id)
                    .region(inflate(&e.bbox, 1.0))
                    .region(Rect::around(center, DROP_TOLERANCE)),
            )
        }
        "canvas.2.shape" => {
            if els.len() < 3 {
                return None;
            }
            for _ in 0..8 {
                let pick: Vec<&ElementAnnotation> = els.choose_multiple(rng, 3).collect();
                let (ea, eb, ec) = (pick[0], pick[1], pick[2]);
                let target = eb.center_point.midpoint(ec.center_point);
                if ea.center_point.distance(target) <= 2.0 * DROP_TOLERANCE {
                    continue;
                }
                return Some(
                    Draft::new("canvas.2.shape", vec![ea.center_point, target], DRAG)
                        .var("a", &ea.reference)
                        .var("b", &eb.reference)
                        .var("c", &ec.reference)
                        .uses(&ea.id)
                        .uses(&eb.id)
                        .uses(&ec.id)
                        .region(inflate(&ea.bbox, 1.0))
                        .region(Rect::around(target, DROP_TOLERANCE)),
                );
            }
            None
        }
        "canvas.2.line_arrow" => {
            let lines: Vec<_> = els.iter().filter(|e| is_line(e)).collect();
            let targets: Vec<_> = els.iter().filter(|e| !is_line(e)).collect();
            let l = lines.choose(rng)?;
            for _ in 0..8 {
                let t = targets.choose(rng)?;
                let tip_name = if rng.gen_bool(0.5) { "end" } else { "start" };
                let (side_key, side) = *[
                    ("left_center", "left side"),
                    ("top_center", "top"),
                    ("right_center", "right side"),
                    ("bottom_center", "bottom"),
                ]
                .choose(rng)?;
                let feature = l.endpoints[tip_name];
                let goal = derived_translation(feature, l.center_point, t.box_points[side_key]);
                if !in_bounds(goal, &bounds) || goal.distance(l.center_point) <= 2.0 * DROP_TOLERANCE {
                    continue;
                }
                let tip = if tip_name == "end" { "end point" } else { "starting point" };
                return Some(
                    Draft::new("canvas.2.line_arrow", vec![l.center_point, goal], DRAG)
                        .var("ref", &l.reference)
                        .var("tip", tip)
                        .var("side", side)
                        .var("target", &t.reference)
                        .uses(&l.id)
                        .uses(&t.id)
                        .region(inflate(&l.bbox, HANDLE_TOLERANCE))
                        .region(Rect::around(goal, DROP_TOLERANCE)),
                );
            }
            None
        }
        _ => None,
    }
}

// Table

fn usable(c: &CellAnnotation, bounds: &Rect) -> bool {
    c.bbox.width() >= 6.0 && c.bbox.height() >= 6.0 && bounds.contains_rect(&c.bbox)
}

fn single(c: &CellAnnotation) -> bool {
    c.row_span == 1 && c.col_span == 1
}

fn table_draft<R: Rng + ?Sized>(
    scene: &TaskScene,
    t: &TableAnnotation,
    task: &DetailedTask,
    rng: &mut R,
) -> Option<Draft> {
    let bounds = scene.bounds();
    let slot: HashMap<(usize, usize), &CellAnnotation> = t.cells.iter().map(|c| ((c.row, c.col), c)).collect();
    let body: Vec<&CellAnnotation> = t
        .cells
        .iter()
        .filter(|c| !c.header && usable(c, &bounds))
        .collect();
    let below = |c: &CellAnnotation, k: usize| {
        slot.get(&(c.row + k, c.col))
            .copied()
            .filter(|b| single(b) && !b.header && usable(b, &bounds))
    };
    match task.id {
        "table.1.empty_cell" => {
            let c = body.iter().filter(|c| c.content.is_empty()).collect::<Vec<_>>().choose(rng).copied()?;
            Some(
                Draft::new("table.1.empty_cell", vec![c.center()], Template::Click { clicks: None, button: None })
                    .var("cell", &c.excel_name)
                    .region(c.bbox),
            )
        }
        "table.1.content_cell" => {
            let count = |f: &dyn Fn(&CellAnnotation) -> bool| t.cells.iter().filter(|c| f(c)).count();
            let mut cands: Vec<(&CellAnnotation, String)> = body
                .iter()
                .filter(|c| !c.content.is_empty())
                .filter_map(|c| {
                    if count(&|o| o.content == c.content) == 1 {
                        Some((*c, String::new()))
                    } else if !c.col_header.is_empty()
                        && count(&|o| o.content == c.content && o.col_header == c.col_header) == 1
                    {
                        Some((*c, format!(" in the {} column", c.col_header)))
                    } else {
                        None
                    }
                })
                .collect();
            cands.shuffle(rng);
            let (c, hint) = cands.into_iter().next()?;
            Some(
                Draft::new("table.1.content_cell", vec![c.center()], Template::Click { clicks: None, button: None })
                    .var("content", &c.content)
                    .var("hint", hint)
                    .uses(&c.excel_name)
                    .region(c.bbox),
            )
        }
        "table.2.drag_cell" => {
            let mut cands: Vec<(&CellAnnotation, Rect)> = body
                .iter()
                .filter(|c| single(c) && below(c, 1).is_some())
                .filter_map(|c| {
                    let (r, clipped) = corner_fill_target(&c.bbox, Some(&bounds));
                    (!clipped).then_some((*c, r))
                })
                .collect();
            cands.shuffle(rng);
            let (c, target) = cands.into_iter().next()?;
            Some(
                Draft::new("table.2.drag_cell", vec![c.center(), target.center()], DRAG)
                    .var("cell", &c.excel_name)
                    .uses(&c.excel_name)
                    .region(c.bbox)
                    .region(target),
            )
        }
        "table.2.select_cells" => {
            let mut pairs: Vec<(&CellAnnotation, &CellAnnotation)> = Vec::new();
            for c in body.iter().filter(|c| !c.content.is_empty()) {
                for key in [(c.row + c.row_span, c.col), (c.row, c.col + c.col_span)] {
                    if let Some(n) = slot.get(&key).filter(|n| !n.header && !n.content.is_empty() && usable(n, &bounds)) {
                        pairs.push((c, n));
                    }
                }
            }
            let (a, b) = *pairs.choose(rng)?;
            Some(
                Draft::new("table.2.select_cells", vec![a.center(), b.center()], DRAG)
                    .var("a", &a.excel_name)
                    .var("b", &b.excel_name)
                    .var("ca", &a.content)
                    .var("cb", &b.content)
                    .uses(&a.excel_name)
                    .uses(&b.excel_name)
                    .region(a.bbox)
                    .region(b.bbox),
            )
        }
        "table.2.edge" => {
            let heads: Vec<&CellAnnotation> = t
                .cells
                .iter()
                .filter(|c| c.header && c.row == 0 && c.col_span == 1 && usable(c, &bounds))
                .collect();
            let c = heads.choose(rng)?;
            let mut factors = [(2.0, "twice"), (3.0, "three times"), (4.0, "four times"), (0.5, "half")];
            factors.shuffle(rng);
            let handle = edge_handle(&c.bbox);
            for (k, word) in factors {
                let x = c.bbox.x1 + k * c.bbox.width();
                if x >= bounds.x2 - 1.0 || (x - handle.x).abs() < 2.0 * EDGE_TOLERANCE {
                    continue;
                }
                let target = Point::new(x, handle.y);
                let band = |x: f64, r: f64| Rect {
                    x1: x - r,
                    y1: c.bbox.y1,
                    x2: x + r,
                    y2: c.bbox.y2,
                };
                let header = if c.content.is_empty() {
                    format!("column {}", excel_name(0, c.col).trim_end_matches(char::is_numeric))
                } else {
                    format!("\"{}\"", c.content)
                };
                return Some(
                    Draft::new("table.2.edge", vec![handle, target], DRAG)
                        .var("header", header)
                        .var("factor", word)
                        .uses(&c.excel_name)
                        .region(band(handle.x, EDGE_TOLERANCE))
                        .region(band(x, 2.0 * EDGE_TOLERANCE)),
                );
            }
            None
        }
        "table.2.corner" => {
            let mut cands: Vec<(&CellAnnotation, &CellAnnotation, usize, Point)> = Vec::new();
            for c in body.iter().filter(|c| single(c)) {
                let mut cur = c.bbox;
                for k in 1..=6 {
                    let (next, clipped) = corner_fill_target(&cur, Some(&bounds));
                    if clipped {
                        break;
                    }
                    cur = next;
                    let Some(b) = below(c, k) else { break };
                    let corner = Point::new(cur.x2, cur.y2);
                    if corner.distance(Point::new(b.bbox.x2, b.bbox.y2)) > 1.0 {
                        break;
                    }
                    if k >= 2 {
                        cands.push((c, b, k, corner));
                    }
                }
            }
            let (a, b, k, corner) = *cands.choose(rng)?;
            let start = Point::new(a.bbox.x2, a.bbox.y2);
            Some(
                Draft::new("table.2.corner", vec![start, corner], DRAG)
                    .var("a", &a.excel_name)
                    .var("b", &b.excel_name)
                    .var("n", k.to_string())
                    .uses(&a.excel_name)
                    .uses(&b.excel_name)
                    .region(Rect::around(start, HANDLE_TOLERANCE))
                    .region(Rect::around(corner, HANDLE_TOLERANCE)),
            )
        }
        _ => None,
    }
}

// Text

fn hint_suffix(s: &SpanTarget) -> String {
    if s.context_hint.is_empty() {
        String::new()
    } else {
        format!(" ({})", s.context_hint)
    }
}

fn region_center(r: &CorrectRegion) -> Point {
    r.shape.bounds().center()
}

fn head_tail(text: &str) -> (String, String) {
    let words: Vec<&str> = text.split_whitespace().collect();
    let n = words.len().min(3);
    (words[..n].join(" "), words[words.len() - n..].join(" "))
}

fn text_draft<R: Rng + ?Sized>(page: &TextPage, task: &DetailedTask, rng: &mut R) -> Result<Option<Draft>> {
    if page.glyphs.is_empty() {
        return Ok(None);
    }
    Ok(match task.id {
        "text.1.between_text" => {
            let Some(s) = sample_span(page, SpanKind::Word, rng) else { return Ok(None) };
            let before = rng.gen_bool(0.5);
            let idx = if before { s.start_index } else { s.end_index };
            let r = cursor_target(page, idx)?;
            Some(
                Draft::new("text.1.between_text", vec![region_center(&r)], Template::Click { clicks: None, button: None })
                    .var("side", if before { "before" } else { "after" })
                    .var("word", s.text(page))
                    .var("hint", hint_suffix(&s))
                    .region(r.shape),
            )
        }
        "text.2.select_span" => {
            let long = rng.gen_bool(0.5);
            let kinds = if long {
                [SpanKind::LongSpan, SpanKind::ShortSpan]
            } else {
                [SpanKind::ShortSpan, SpanKind::LongSpan]
            };
            let Some(s) = kinds.iter().find_map(|&k| sample_span(page, k, rng)) else { return Ok(None) };
            let [a, b] = span_drag_target(page, &s)?;
            let text = s.text(page);
            let variant = if s.kind == SpanKind::LongSpan {
                "text.2.select_span+long"
            } else {
                "text.2.select_span"
            };
            let (head, tail) = head_tail(&text);
            Some(
                Draft::new(variant, vec![region_center(&a), region_center(&b)], DRAG)
                    .var("span", text)
                    .var("hint", hint_suffix(&s))
                    .var("head", head)
                    .var("tail", tail)
                    .region(a.shape)
                    .region(b.shape),
            )
        }
        "text.2.one_word" => {
            let Some(s) = sample_span(page, SpanKind::Word, rng) else { return Ok(None) };
            let [a, b] = span_drag_target(page, &s)?;
            Some(
                Draft::new("text.2.one_word", vec![region_center(&a), region_center(&b)], DRAG)
                    .var("word", s.text(page))
                    .var("hint", hint_suffix(&s))
                    .region(a.shape)
                    .region(b.shape),
            )
        }
        "text.2.drag_span" => {
            let Some(s) = sample_span(page, SpanKind::ShortSpan, rng) else { return Ok(None) };
            let Some(dest) = (0..16).find_map(|_| {
                sample_span(page, SpanKind::Word, rng)
                    .filter(|w| w.end_index + 1 < s.start_index || w.start_index > s.end_index + 1)
            }) else {
                return Ok(None);
            };
            let line = page.glyphs[s.start_index].line;
            let on_line: Vec<&Rect> = page.glyphs[s.start_index..s.end_index]
                .iter()
                .filter(|g| g.line == line)
                .map(|g| &g.bbox)
                .collect();
            let span_box = on_line.iter().skip(1).fold(*on_line[0], |acc, r| Rect {
                x1: acc.x1.min(r.x1),
                y1: acc.y1.min(r.y1),
                x2: acc.x2.max(r.x2),
                y2: acc.y2.max(r.y2),
            });
            let grab = page.glyphs[s.start_index..s.end_index]
                .iter()
                .filter(|g| g.line == line && !g.ch.is_whitespace())
                .nth(on_line.len() / 2)
                .or_else(|| page.glyphs[s.start_index..s.end_index].first())
                .map(|g| g.bbox.center())
                .expect("span is non-empty");
            let drop = cursor_target(page, dest.start_index)?;
            Some(
                Draft::new("text.2.drag_span", vec![grab, region_center(&drop)], DRAG)
                    .var("span", s.text(page))
                    .var("word", dest.text(page))
                    .var("hint", hint_suffix(&dest))
                    .region(inflate(&span_box, 1.0))
                    .region(drop.shape),
            )
        }
        _ => None,
    })
}

// Image

/// Unique label per region: the caption alone when it is unique, otherwise
/// caption plus location. `None` when even that collides.
fn region_labels(regions: &[RegionAnnotation], size: (f64, f64)) -> Vec<Option<String>> {
    let located: Vec<String> = regions
        .iter()
        .map(|r| {
            let place = region_phrase(r.center, size, Grid::Coarse).replace("canvas", "image");
            format!("{} in the {place}", r.caption)
        })
        .collect();
    regions
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if regions.iter().filter(|o| o.caption == r.caption).count() == 1 {
                Some(r.caption.clone())
            } else if located.iter().filter(|l| **l == located[i]).count() == 1 {
                Some(located[i].clone())
            } else {
                None
            }
        })
        .collect()
}

fn outline(r: &RegionAnnotation) -> Option<Polygon> {
    Polygon::new(r.boundary.clone()).ok()
}

/// The rounded center when it falls inside the region outline.
fn inner_point(r: &RegionAnnotation) -> Option<(Point, Polygon)> {
    let poly = outline(r)?;
    let p = Point::new(r.center.x.round(), r.center.y.round());
    poly.contains(p).then_some((p, poly))
}

fn image_draft<R: Rng + ?Sized>(
    scene: &TaskScene,
    regions: &[RegionAnnotation],
    task: &DetailedTask,
    rng: &mut R,
) -> Option<Draft> {
    let bounds = scene.bounds();
    let labels = region_labels(regions, scene.size_f());
    let labeled: Vec<(usize, &RegionAnnotation, &str)> = regions
        .iter()
        .enumerate()
        .filter_map(|(i, r)| labels[i].as_deref().map(|l| (i, r, l)))
        .collect();
    match task.id {
        "image.1.object" => {
            let cands: Vec<_> = labeled.iter().filter_map(|&(_, r, l)| inner_point(r).map(|(p, poly)| (r, l, p, poly))).collect();
            let (r, l, p, poly) = cands.choose(rng)?.clone();
            Some(
                Draft::new("image.1.object", vec![p], Template::Click { clicks: None, button: None })
                    .var("ref", l)
                    .uses(&r.id)
                    .region(poly),
            )
        }
        "image.2.object" => {
            for _ in 0..8 {
                let pair: Vec<_> = labeled.choose_multiple(rng, 2).collect();
                let [&(_, a, la), &(_, b, lb)] = pair.as_slice() else { return None };
                let Some((start, poly)) = inner_point(a) else { continue };
                let (hw, hh) = (a.bbox.width() / 2.0, a.bbox.height() / 2.0);
                let gap = 10.0;
                let mut rels = [
                    ("above", Point::new(b.center.x, b.bbox.y1 - gap - hh)),
                    ("below", Point::new(b.center.x, b.bbox.y2 + gap + hh)),
                    ("to the left of", Point::new(b.bbox.x1 - gap - hw, b.center.y)),
                    ("to the right of", Point::new(b.bbox.x2 + gap + hw, b.center.y)),
                ];
                rels.shuffle(rng);
                let fits = |c: Point| {
                    let moved = Rect {
                        x1: c.x - hw,
                        y1: c.y - hh,
                        x2: c.x + hw,
                        y2: c.y + hh,
                    };
                    bounds.contains_rect(&moved)
                };
                if let Some((rel, target)) = rels.into_iter().find(|&(_, c)| fits(c)) {
                    let center_delta = Point::new(start.x - a.center.x, start.y - a.center.y);
                    let drop = Point::new(target.x + center_delta.x, target.y + center_delta.y);
                    return Some(
                        Draft::new("image.2.object", vec![start, drop], DRAG)
                            .var("a", la)
                            .var("b", lb)
                            .var("relation", rel)
                            .uses(&a.id)
                            .uses(&b.id)
                            .region(poly)
                            .region(Rect::around(drop, DROP_TOLERANCE)),
                    );
                }
            }
            None
        }
        "image.2.point" => {
            let &(_, r, l) = labeled.choose(rng)?;
            let tl = Point::new(r.bbox.x1, r.bbox.y1);
            let br = Point::new(r.bbox.x2, r.bbox.y2);
            Some(
                Draft::new("image.2.point", vec![tl, br], DRAG)
                    .var("ref", l)
                    .uses(&r.id)
                    .region(Rect::around(tl, HANDLE_TOLERANCE))
                    .region(Rect::around(br, HANDLE_TOLERANCE)),
            )
        }
        "image.n.zigzag_mask" | "image.n.boundary" => {
            let &(_, r, l) = labeled.iter().filter(|(_, r, _)| r.boundary.len() >= 3).collect::<Vec<_>>().choose(rng)?;
            let mut pts = if task.id == "image.n.boundary" {
                r.boundary.clone()
            } else {
                r.trail()
            };
            if task.id == "image.n.boundary" {
                pts.push(r.boundary[0]);
            }
            let mut d = Draft::new(task.id, pts.clone(), Template::Stroke).var("ref", *l).uses(&r.id);
            for p in pts {
                d = d.region(Rect::around(p, TRAIL_TOLERANCE));
            }
            Some(d)
        }
        _ => None,
    }
}

// External-model path

const PROMPT_GUI: &str = include_str!("../data/prompts/gui.txt");
const PROMPT_TABLE: &str = include_str!("../data/prompts/table.txt");
const PROMPT_CANVAS: &str = include_str!("../data/prompts/canvas.txt");
const PROMPT_IMAGE: &str = include_str!("../data/prompts/image.txt");

/// System prompt for `modality`. Text pages have none.
pub fn system_prompt(modality: Modality) -> Result<&'static str> {
    match modality {
        Modality::Gui => Ok(PROMPT_GUI),
        Modality::Table => Ok(PROMPT_TABLE),
        Modality::Canvas => Ok(PROMPT_CANVAS),
        Modality::Image => Ok(PROMPT_IMAGE),
        Modality::Text => Err(Error::UnregisteredModality(modality.to_string())),
    }
}

/// Per-modality limits stated in the system prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRules {
    pub max_total: Option<usize>,
    pub min_one_set: usize,
    pub max_center: Option<usize>,
    pub max_control: Option<usize>,
}

pub fn count_rules(modality: Modality) -> CountRules {
    let none = CountRules {
        max_total: None,
        min_one_set: 0,
        max_center: None,
        max_control: None,
    };
    match modality {
        Modality::Gui => CountRules {
            max_total: Some(10),
            min_one_set: 5,
            ..none
        },
        Modality::Table => CountRules {
            max_total: Some(4),
            min_one_set: 1,
            ..none
        },
        Modality::Canvas => CountRules {
            max_total: Some(10),
            max_center: Some(3),
            max_control: Some(4),
            ..none
        },
        _ => none,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub system_prompt_id: String,
    pub system_prompt: String,
    /// Screenshot reference, passed through as-is.
    pub image: String,
    pub elements: serde_json::Value,
}

impl LlmRequest {
    pub fn user_message(&self) -> String {
        let payload = serde_json::to_string_pretty(&self.elements).expect("json values serialize");
        format!("Screenshot: {}\n\nElements:\n{payload}", self.image)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub request_index: usize,
    pub text: String,
}

fn table_cell_payload(c: &CellAnnotation) -> serde_json::Value {
    let mut description = format!("cell {}", c.excel_name);
    if !c.content.is_empty() {
        description.push_str(&format!(" containing \"{}\"", c.content));
    } else {
        description.push_str(", empty");
    }
    if !c.col_header.is_empty() {
        description.push_str(&format!(", column header \"{}\"", c.col_header));
    }
    if !c.row_header.is_empty() {
        description.push_str(&format!(", row header \"{}\"", c.row_header));
    }
    serde_json::json!({ "description": description, "bbox": c.bbox })
}

/// Request focused on one table cell.
pub fn build_table_cell_request(scene: &TaskScene, cell: &str) -> Result<LlmRequest> {
    let SceneContent::Table(t) = &scene.content else {
        return Err(Error::InvalidArgument("not a table scene".into()));
    };
    let c = t
        .cell_by_name(cell)
        .ok_or_else(|| Error::InvalidArgument(format!("no cell {cell}")))?;
    Ok(LlmRequest {
        system_prompt_id: "table".into(),
        system_prompt: PROMPT_TABLE.to_string(),
        image: scene.image.clone(),
        elements: table_cell_payload(c),
    })
}

/// Request carrying the modality's system prompt and the scene elements.
/// Table scenes are focused on their first non-empty body cell.
pub fn build_llm_request(modality: Modality, scene: &TaskScene) -> Result<LlmRequest> {
    let prompt = system_prompt(modality)?;
    if modality != scene.modality() {
        return Err(Error::InvalidArgument(format!(
            "{modality} request for a {} scene",
            scene.modality()
        )));
    }
    let elements = match &scene.content {
        SceneContent::Gui(els) => serde_json::to_value(els)?,
        SceneContent::Canvas(a) => serde_json::to_value(&a.elements)?,
        SceneContent::Image(rs) => serde_json::to_value(rs)?,
        SceneContent::Table(t) => {
            let c = t
                .cells
                .iter()
                .find(|c| !c.header && !c.content.is_empty())
                .or_else(|| t.cells.first())
                .ok_or_else(|| Error::InvalidArgument("table has no cells".into()))?;
            return build_table_cell_request(scene, &c.excel_name.clone());
        }
        SceneContent::Text(_) => unreachable!("text has no system prompt"),
    };
    Ok(LlmRequest {
        system_prompt_id: modality.as_str().to_ascii_lowercase(),
        system_prompt: prompt.to_string(),
        image: scene.image.clone(),
        elements,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub violations: Vec<String>,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LlmParse {
    pub accepted: Vec<DatasetRecord>,
    pub rejected: Vec<Rejection>,
    /// Whole-response issues, such as too few OneSet entries.
    pub notes: Vec<String>,
}

#[derive(Deserialize)]
struct LlmEntry {
    prompt: String,
    response: String,
    #[serde(default)]
    coordinate_map: IndexMap<String, f64>,
    #[serde(default)]
    used_elements: Vec<ElementRef>,
    #[serde(default, rename = "action-type", alias = "action-types")]
    action_type: Option<String>,
}

/// First JSON array in `text`, fenced or bare.
fn extract_array(text: &str) -> std::result::Result<Vec<serde_json::Value>, String> {
    let start = text.find("```json").map(|i| i + 7).unwrap_or(0);
    let mut last_err = "no JSON array found".to_string();
    for (i, _) in text[start..].match_indices('[') {
        let mut it = serde_json::Deserializer::from_str(&text[start + i..]).into_iter::<serde_json::Value>();
        match it.next() {
            Some(Ok(serde_json::Value::Array(items))) => return Ok(items),
            Some(Err(e)) => last_err = e.to_string(),
            _ => {}
        }
    }
    Err(last_err)
}

fn near_any(p: Point, targets: &[Point]) -> bool {
    targets.iter().any(|t| p.distance(*t) <= 1.0)
}

/// Splits a model response into accepted records and rejected entries.
/// Nothing is repaired; an absent action-type is derived from the script
/// because some prompts do not ask for it.
pub fn parse_llm_response(text: &str, scene: &TaskScene) -> LlmParse {
    let mut out = LlmParse::default();
    let items = match extract_array(text) {
        Ok(items) => items,
        Err(detail) => {
            out.rejected.push(Rejection {
                index: 0,
                violations: vec!["ParseError".into()],
                detail,
            });
            return out;
        }
    };
    let rules = count_rules(scene.modality());
    let space = scene.coordinate_space();
    let elements = scene.element_refs();
    let (centers, controls): (Vec<Point>, Vec<Point>) = match &scene.content {
        SceneContent::Canvas(a) => {
            let centers = a.elements.iter().map(|e| e.center_point).collect();
            let controls = a
                .elements
                .iter()
                .flat_map(|e| {
                    e.box_points
                        .values()
                        .chain(e.vertices.values())
                        .chain(e.endpoints.values())
                        .copied()
                        .chain(std::iter::once(e.rotation_handle_center))
                })
                .collect();
            (centers, controls)
        }
        _ => (Vec::new(), Vec::new()),
    };
    let (mut n_center, mut n_control, mut n_one) = (0, 0, 0);
    for (index, item) in items.into_iter().enumerate() {
        let reject = |violations: Vec<String>, detail: String| Rejection {
            index,
            violations,
            detail,
        };
        let entry: LlmEntry = match serde_json::from_value(item) {
            Ok(e) => e,
            Err(e) => {
                out.rejected.push(reject(vec!["ParseError".into()], e.to_string()));
                continue;
            }
        };
        let (chain_of_thought, script) = match parse_trace(&entry.response) {
            Ok(x) => x,
            Err(e) => {
                out.rejected.push(reject(vec!["TraceParse".into()], e.to_string()));
                continue;
            }
        };
        let trace = ActionTrace {
            chain_of_thought,
            action_type: entry.action_type.clone().unwrap_or_else(|| action_type_tag(&script)),
            script,
            coordinate_map: entry.coordinate_map,
            used_elements: entry.used_elements,
            coordinate_space: space,
        };
        let report = validate_trace(&trace, &elements, scene.size_f(), space);
        if !report.is_valid() {
            let names = report.violations.iter().map(|v| v.name().to_string()).collect();
            out.rejected.push(reject(names, serde_json::to_string(&report.violations).unwrap_or_default()));
            continue;
        }
        if rules.max_total.is_some_and(|m| out.accepted.len() >= m) {
            out.rejected.push(reject(vec!["CountExceeded".into()], String::new()));
            continue;
        }
        let pts: Vec<Point> = trace.resolved_points().into_iter().flatten().collect();
        let uses_center = pts.iter().any(|&p| near_any(p, &centers));
        let uses_control = !uses_center && pts.iter().any(|&p| near_any(p, &controls));
        if uses_center && rules.max_center.is_some_and(|m| n_center >= m) {
            out.rejected.push(reject(vec!["CenterQuota".into()], String::new()));
            continue;
        }
        if uses_control && rules.max_control.is_some_and(|m| n_control >= m) {
            out.rejected.push(reject(vec!["ControlPointQuota".into()], String::new()));
            continue;
        }
        n_center += uses_center as usize;
        n_control += uses_control as usize;
        n_one += matches!(trace.class(), Ok(ActionClass::OneSet)) as usize;
        let mut rec = DatasetRecord::from_trace(&trace, &entry.prompt, &scene.image, scene.modality(), scene.size);
        rec.response = entry.response;
        out.accepted.push(rec);
    }
    if n_one < rules.min_one_set {
        out.notes.push(format!(
            "OneSetMinimum: {} accepted OneSet entries, prompt asks for at least {}",
            n_one, rules.min_one_set
        ));
    }
    for r in &out.rejected {
        log::info!("rejected entry {}: {}", r.index, r.violations.join(", "));
    }
    out
}

/// Anything that can answer a request with raw model text.
pub trait LlmTransport: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String>;
}

/// Appends request/response pairs as JSONL when a log path is set.
pub struct ExchangeLog {
    file: Option<Mutex<std::fs::File>>,
}

impl ExchangeLog {
    pub const ENV: &'static str = "GROUNDSYNTH_LLM_LOG";

    pub fn disabled() -> Self {
        Self { file: None }
    }

    pub fn to_path(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            file: Some(Mutex::new(f)),
        })
    }

    pub fn from_env() -> Result<Self> {
        match std::env::var_os(Self::ENV) {
            Some(p) => Self::to_path(&PathBuf::from(p)),
            None => Ok(Self::disabled()),
        }
    }

    fn record(&self, index: usize, req: &LlmRequest, res: &Result<String>) {
        let Some(f) = &self.file else { return };
        let line = serde_json::json!({
            "index": index,
            "request": req,
            "response": res.as_ref().ok(),
            "error": res.as_ref().err().map(|e| e.to_string()),
        });
        let mut f = f.lock().expect("log mutex");
        let _ = writeln!(f, "{line}");
    }
}

/// Sends `requests` with at most `max_in_flight` outstanding. Results come
/// back in request order regardless of completion order.
pub fn run_requests(
    transport: &dyn LlmTransport,
    requests: &[LlmRequest],
    max_in_flight: usize,
    log: &ExchangeLog,
) -> Vec<Result<String>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<String>>>> = requests.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..max_in_flight.max(1).min(requests.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(req) = requests.get(i) else { break };
                let res = transport.complete(req);
                log.record(i, req, &res);
                *slots[i].lock().expect("slot mutex") = Some(res);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot mutex").expect("every request ran"))
        .collect()
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::path::PathBuf;
    use std::time::Duration;

    use base64::Engine as _;

    use super::{LlmRequest, LlmTransport};
    use crate::error::{Error, Result};

    /// Chat-completions transport configured from the environment:
    /// `GROUNDSYNTH_LLM_URL`, `GROUNDSYNTH_LLM_API_KEY`, `GROUNDSYNTH_LLM_MODEL`
    /// and optionally `GROUNDSYNTH_LLM_TIMEOUT_SECS` (default 120).
    pub struct HttpTransport {
        pub url: String,
        pub api_key: Option<String>,
        pub model: String,
        /// Extra body fields such as temperature, passed through untouched.
        pub params: serde_json::Map<String, serde_json::Value>,
        /// Directory relative image references resolve against. Local images
        /// are sent inline as data URLs; http(s) and data URLs pass through.
        pub image_root: Option<PathBuf>,
        agent: ureq::Agent,
    }

    impl HttpTransport {
        pub fn new(url: String, api_key: Option<String>, model: String, timeout: Duration) -> Self {
            let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
            Self {
                url,
                api_key,
                model,
                params: serde_json::Map::new(),
                image_root: None,
                agent,
            }
        }

        pub fn from_env() -> Result<Self> {
            let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
            let url = var("GROUNDSYNTH_LLM_URL")
                .ok_or_else(|| Error::InvalidArgument("GROUNDSYNTH_LLM_URL is not set".into()))?;
            let model = var("GROUNDSYNTH_LLM_MODEL").unwrap_or_else(|| "default".into());
            let secs = var("GROUNDSYNTH_LLM_TIMEOUT_SECS")
                .map(|s| s.parse::<u64>())
                .transpose()
                .map_err(|e| Error::InvalidArgument(format!("GROUNDSYNTH_LLM_TIMEOUT_SECS: {e}")))?
                .unwrap_or(120);
            Ok(Self::new(url, var("GROUNDSYNTH_LLM_API_KEY"), model, Duration::from_secs(secs)))
        }
    }

    impl HttpTransport {
        fn image_url(&self, image: &str) -> Result<String> {
            if ["http://", "https://", "data:"].iter().any(|p| image.starts_with(p)) {
                return Ok(image.to_string());
            }
            let path = match &self.image_root {
                Some(root) => root.join(image),
                None => PathBuf::from(image),
            };
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            Ok(format!(
                "data:image/png;base64,{}",
                base64::engine::general_purpose::STANDARD.encode(bytes)
            ))
        }
    }

    impl LlmTransport for HttpTransport {
        fn complete(&self, req: &LlmRequest) -> Result<String> {
            let mut body = serde_json::json!({
                "model": self.model,
                "messages": [
                    {"role": "system", "content": req.system_prompt},
                    {"role": "user", "content": [
                        {"type": "image_url", "image_url": {"url": self.image_url(&req.image)?}},
                        {"type": "text", "text": req.user_message()},
                    ]},
                ],
            });
            let obj = body.as_object_mut().expect("object literal");
            for (k, v) in &self.params {
                obj.insert(k.clone(), v.clone());
            }
            let mut call = self.agent.post(&self.url);
            if let Some(key) = &self.api_key {
                call = call.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = call.send_json(&body).map_err(|e| Error::Transport(e.to_string()))?;
            let v: serde_json::Value = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Transport(e.to_string()))?;
            v.pointer("/choices/0/message/content")
                .and_then(|c| c.as_str())
                .map(str::to_string)
                .ok_or_else(|| Error::Transport("response has no choices[0].message.content".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canvas::generate_scene;
    use crate::image_annot::{build_region, synthetic_regions};
    use crate::table::{generate_table, TableGenConfig};
    use crate::text::{generate_page, TextGenConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn canvas_scene(seed: u64, i: u64) -> TaskScene {
        let s = generate_scene(seed, i).unwrap();
        let a = s.annotation().unwrap();
        TaskScene {
            image: "images/c.png".into(),
            size: (a.canvas.width, a.canvas.height),
            content: SceneContent::Canvas(a),
        }
    }

    fn table_scene(seed: u64, i: u64) -> TaskScene {
        let t = generate_table(seed, i, &TableGenConfig::default()).unwrap();
        let a = t.annotation("images/t.png");
        TaskScene {
            image: a.image.clone(),
            size: (a.size[0], a.size[1]),
            content: SceneContent::Table(a),
        }
    }

    fn text_scene(seed: u64, i: u64) -> TaskScene {
        let p = generate_page(seed, i, &TextGenConfig::default()).unwrap();
        TaskScene {
            image: "images/p.png".into(),
            size: (p.image.width(), p.image.height()),
            content: SceneContent::Text(p.page),
        }
    }

    fn image_scene(seed: u64, i: u64) -> TaskScene {
        let s = synthetic_regions(seed, i, 4);
        let regions = s
            .regions
            .iter()
            .enumerate()
            .map(|(k, (m, c))| build_region(m, c, &format!("region_{k}")).unwrap())
            .collect();
        TaskScene {
            image: "images/i.png".into(),
            size: (s.image.width(), s.image.height()),
            content: SceneContent::Image(regions),
        }
    }

    #[test]
    fn registry_shape() {
        assert_eq!(REGISTRY.len(), 33);
        assert_eq!(REGISTRY.iter().filter(|t| t.synthesizable).count(), 20);
        let per = |m| REGISTRY.iter().filter(|t| t.modality == m).count();
        assert_eq!([per(G), per(Tx), per(Tb), per(Cv), per(Im)], [6, 5, 6, 8, 8]);
        let mut ids: Vec<_> = REGISTRY.iter().map(|t| t.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 33);
        for t in REGISTRY.iter().filter(|t| t.synthesizable) {
            let n = phrases(t.id).len().max(phrases(&format!("{}+long", t.id)).len());
            assert!((3..=6).contains(&n), "{} has {n} phrasings", t.id);
        }
    }

    fn scene_for(m: Modality, seed: u64, i: u64) -> TaskScene {
        match m {
            Modality::Canvas => canvas_scene(seed, i),
            Modality::Table => table_scene(seed, i),
            Modality::Text => text_scene(seed, i),
            Modality::Image => image_scene(seed, i),
            Modality::Gui => unreachable!(),
        }
    }

    #[test]
    fn every_synthesizable_task_produces_grounded_records() {
        for t in REGISTRY.iter().filter(|t| t.synthesizable) {
            let mut produced = 0;
            for i in 0..40 {
                let scene = scene_for(t.modality, 3, i);
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                for g in template_generate(&scene, t, &mut rng).unwrap() {
                    assert!(g.record.validate(Some(&scene.element_refs())).unwrap().is_empty());
                    let v = g.self_ground().unwrap();
                    assert!(v.success, "{} scene {i}: {v:?}\n{:#?}", t.id, g);
                    assert_eq!(g.record.task.as_deref(), Some(t.id));
                    produced += 1;
                }
                if produced >= 3 {
                    break;
                }
            }
            assert!(produced >= 1, "{} produced nothing", t.id);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let scene = canvas_scene(5, 1);
        assert_eq!(generate_all(&scene, 9).unwrap(), generate_all(&scene, 9).unwrap());
        let scene = table_scene(5, 1);
        assert_eq!(generate_all(&scene, 9).unwrap(), generate_all(&scene, 9).unwrap());
    }

    #[test]
    fn canvas_click_mentions_reference() {
        let scene = canvas_scene(7, 0);
        let SceneContent::Canvas(a) = &scene.content else { unreachable!() };
        let t = task("canvas.1.shape").unwrap();
        let g = template_generate(&scene, t, &mut ChaCha8Rng::seed_from_u64(1)).unwrap().remove(0);
        let id = match &g.record.used_elements[0] {
            ElementRef::Name(n) => n.clone(),
            other => panic!("{other:?}"),
        };
        let e = a.element(&id).unwrap();
        assert!(g.record.prompt.contains(&e.reference), "{}", g.record.prompt);
        let tr = g.record.to_trace().unwrap();
        assert_eq!(tr.class().unwrap(), ActionClass::OneSet);
        let p = tr.resolved_points()[0].unwrap();
        assert!((p.x - e.center_point.x).abs() <= 0.5 && (p.y - e.center_point.y).abs() <= 0.5);
    }

    #[test]
    fn table_corner_follows_fill_target() {
        let t = task("table.2.corner").unwrap();
        let g = (0..20)
            .find_map(|i| template_generate(&table_scene(1, i), t, &mut ChaCha8Rng::seed_from_u64(i)).unwrap().pop())
            .unwrap();
        let tr = g.record.to_trace().unwrap();
        assert_eq!(tr.action_type, "combined:moveTo and dragTo");
        let pts: Vec<Point> = tr.resolved_points().into_iter().flatten().collect();
        assert!(g.record.prompt.contains("corner") || g.record.prompt.contains("Fill") || g.record.prompt.contains("dragging"));
        assert_eq!(pts[0].x, pts[1].x);
        assert!(pts[1].y > pts[0].y);
    }

    #[test]
    fn image_boundary_is_nset_over_outline() {
        let t = task("image.n.boundary").unwrap();
        let scene = image_scene(2, 0);
        let g = template_generate(&scene, t, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().remove(0);
        let tr = g.record.to_trace().unwrap();
        assert_eq!(tr.class().unwrap(), ActionClass::NSet);
        assert_eq!(tr.symbols().len(), 2 * 21);
        assert_eq!(tr.script.len(), 21);
    }

    #[test]
    fn mismatched_or_unsynthesizable_tasks_error() {
        let scene = canvas_scene(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(template_generate(&scene, task("table.2.edge").unwrap(), &mut rng).is_err());
        assert!(template_generate(&scene, task("canvas.n.point").unwrap(), &mut rng).is_err());
    }

    #[test]
    fn requests_carry_prompt_requirements() {
        let req = build_llm_request(Modality::Canvas, &canvas_scene(1, 0)).unwrap();
        assert!(req.system_prompt.contains("**10**"));
        assert!(req.system_prompt.contains("At \nmost 3 use the center") || req.system_prompt.contains("most 3 use the center"));
        assert!(req.elements.as_array().unwrap()[0].get("center_point").is_some());
        let req = build_llm_request(Modality::Table, &table_scene(1, 0)).unwrap();
        assert!(req.system_prompt.contains("**4**"));
        assert!(req.elements.get("bbox").is_some() && req.elements.get("description").is_some());
        let req = build_llm_request(Modality::Image, &image_scene(1, 0)).unwrap();
        assert!(req.system_prompt.contains("NSet"));
        assert!(req.system_prompt.contains("left right left right trail"));
        assert!(matches!(
            build_llm_request(Modality::Text, &text_scene(1, 0)),
            Err(Error::UnregisteredModality(_))
        ));
    }

    fn entry(prompt: &str, script: &str, map: serde_json::Value, used: &[&str]) -> serde_json::Value {
        serde_json::json!({
            "prompt": prompt,
            "response": format!("I find the shape and act on it.\n\n```python\n{script}\n```"),
            "coordinate_map": map,
            "used_elements": used,
        })
    }

    fn click_at(p: Point, id: &str) -> serde_json::Value {
        entry(
            "Click it.",
            "pyautogui.click(x=x1, y=y1)",
            serde_json::json!({"x1": p.x, "y1": p.y}),
            &[id],
        )
    }

    fn off_center(a: &CanvasAnnotation, k: usize) -> Point {
        let w = a.canvas.width as f64;
        Point::new(5.0 + k as f64 * 7.0 % (w - 10.0), 3.0)
    }

    #[test]
    fn parse_accepts_wellformed_batch() {
        let scene = canvas_scene(4, 2);
        let SceneContent::Canvas(a) = &scene.content else { unreachable!() };
        let id = a.elements[0].id.clone();
        let items: Vec<_> = (0..10).map(|k| click_at(off_center(a, k), &id)).collect();
        let text = format!("Here you go:\n```json\n{}\n```", serde_json::to_string_pretty(&items).unwrap());
        let p = parse_llm_response(&text, &scene);
        assert_eq!(p.accepted.len(), 10, "{:?}", p.rejected);
        assert!(p.rejected.is_empty());
        // Bare arrays work too, and an eleventh entry exceeds the count.
        let mut items = items;
        items.push(click_at(off_center(a, 11), &id));
        let p = parse_llm_response(&serde_json::to_string(&items).unwrap(), &scene);
        assert_eq!(p.accepted.len(), 10);
        assert_eq!(p.rejected[0].violations, ["CountExceeded"]);
    }

    #[test]
    fn parse_rejects_missing_symbol_and_garbage() {
        let scene = canvas_scene(4, 2);
        let e = entry(
            "Drag it.",
            "pyautogui.moveTo(x=x1, y=y1)\npyautogui.dragTo(x=x2, y=y2)",
            serde_json::json!({"x1": 5, "y1": 5, "x2": 9}),
            &[],
        );
        let p = parse_llm_response(&serde_json::to_string(&[e]).unwrap(), &scene);
        assert!(p.accepted.is_empty());
        assert!(p.rejected[0].violations.contains(&"SymbolMismatch".to_string()));
        let p = parse_llm_response("sorry, no data today", &scene);
        assert_eq!(p.rejected[0].violations, ["ParseError"]);
        let p = parse_llm_response("[{\"prompt\": 1}]", &scene);
        assert_eq!(p.rejected[0].violations, ["ParseError"]);
    }

    #[test]
    fn center_quota_caps_at_three() {
        let scene = canvas_scene(4, 2);
        let SceneContent::Canvas(a) = &scene.content else { unreachable!() };
        let items: Vec<_> = (0..5)
            .map(|k| {
                let e = &a.elements[k % a.elements.len()];
                click_at(e.center_point, &e.id)
            })
            .collect();
        let p = parse_llm_response(&serde_json::to_string(&items).unwrap(), &scene);
        assert_eq!(p.accepted.len(), 3);
        assert_eq!(p.rejected.len(), 2);
        assert!(p.rejected.iter().all(|r| r.violations == ["CenterQuota"]));
    }

    #[test]
    fn table_entries_without_action_type_validate() {
        let scene = table_scene(2, 3);
        let SceneContent::Table(t) = &scene.content else { unreachable!() };
        let c = t.cells.iter().find(|c| !c.header).unwrap().center();
        let e = serde_json::json!({
            "prompt": "Select the cell.",
            "response": "The cell is in the body. I click it.\n\n```python\npyautogui.click(x=x1, y=y1)\n```",
            "coordinate_map": {"x1": c.x.round(), "y1": c.y.round()},
        });
        let p = parse_llm_response(&serde_json::to_string(&[e]).unwrap(), &scene);
        assert_eq!(p.accepted.len(), 1, "{:?}", p.rejected);
        assert_eq!(p.accepted[0].action_type, "click");
        assert!(p.notes.is_empty());
    }

    struct Echo;

    impl LlmTransport for Echo {
        fn complete(&self, req: &LlmRequest) -> Result<String> {
            // Finish out of order to exercise result ordering.
            let n = req.image.len() as u64;
            std::thread::sleep(std::time::Duration::from_millis(20 - n.min(20)));
            Ok(req.image.clone())
        }
    }

    #[test]
    fn pool_keeps_request_order() {
        let reqs: Vec<LlmRequest> = (0..12)
            .map(|i| LlmRequest {
                system_prompt_id: "gui".into(),
                system_prompt: String::new(),
                image: "x".repeat(i),
                elements: serde_json::Value::Null,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let log = ExchangeLog::to_path(&dir.path().join("log.jsonl")).unwrap();
        let out = run_requests(&Echo, &reqs, 4, &log);
        let got: Vec<String> = out.into_iter().map(|r| r.unwrap()).collect();
        let want: Vec<String> = (0..12).map(|i| "x".repeat(i)).collect();
        assert_eq!(got, want);
        let logged = std::fs::read_to_string(dir.path().join("log.jsonl")).unwrap();
        assert_eq!(logged.lines().count(), 12);
    }
}
