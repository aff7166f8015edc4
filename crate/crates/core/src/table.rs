//! Table images with merged and masked cells.
//!
//! A [`TableModel`] is a list of anchor cells on a rows × cols grid; each
//! anchor owns a rectangular span. Layout is a plain grid: column widths come
//! from content advances, rows share one height, and merged cells cover the
//! union of their slots.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canvas::scene_rng;
use crate::error::{Error, Result};
use crate::font::{BitmapFace, Face};
use crate::geometry::{Point, Rect, Rgb};
use crate::raster::Canvas;

pub const DEFAULT_MASK_FRACTION: f64 = 0.6;
/// Share of generated tables that receive masking.
pub const MASKED_TABLE_SHARE: f64 = 0.5;
pub const DEFAULT_MARGIN: u32 = 24;
const MUTATION_RETRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpec {
    pub row: usize,
    pub col: usize,
    pub row_span: usize,
    pub col_span: usize,
    #[serde(default)]
    pub content: String,
}

impl CellSpec {
    fn unit(row: usize, col: usize, content: impl Into<String>) -> Self {
        Self {
            row,
            col,
            row_span: 1,
            col_span: 1,
            content: content.into(),
        }
    }

    fn covers(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.row_span && c >= self.col && c < self.col + self.col_span
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableModel {
    pub rows: usize,
    pub cols: usize,
    pub header_rows: usize,
    pub header_cols: usize,
    /// Anchor cells sorted by (row, col).
    pub cells: Vec<CellSpec>,
}

impl TableModel {
    /// Builds an unmerged table from row-major content.
    pub fn from_grid<S: AsRef<str>>(grid: &[Vec<S>], header_rows: usize, header_cols: usize) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || grid.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("table grid must be a non-empty rectangle".into()));
        }
        let cells = grid
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, s)| CellSpec::unit(r, c, s.as_ref())))
            .collect();
        let m = Self {
            rows,
            cols,
            header_rows,
            header_cols,
            cells,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks that anchors tile the grid exactly.
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("table has no rows or columns".into()));
        }
        if self.header_rows > self.rows || self.header_cols > self.cols {
            return Err(Error::InvalidArgument("header count exceeds table size".into()));
        }
        let mut owner = vec![usize::MAX; self.rows * self.cols];
        for (i, a) in self.cells.iter().enumerate() {
            if a.row_span == 0 || a.col_span == 0 || a.row + a.row_span > self.rows || a.col + a.col_span > self.cols {
                return Err(Error::InvalidArgument(format!("cell ({}, {}) span leaves the grid", a.row, a.col)));
            }
            for r in a.row..a.row + a.row_span {
                for c in a.col..a.col + a.col_span {
                    let slot = &mut owner[r * self.cols + c];
                    if *slot != usize::MAX {
                        return Err(Error::InvalidArgument(format!("slot ({r}, {c}) owned twice")));
                    }
                    *slot = i;
                }
            }
        }
        if let Some(pos) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidArgument(format!(
                "slot ({}, {}) is not covered",
                pos / self.cols,
                pos % self.cols
            )));
        }
        Ok(())
    }

    pub fn is_header(&self, row: usize, col: usize) -> bool {
        row < self.header_rows || col < self.header_cols
    }

    /// Anchor cell covering slot `(row, col)`.
    pub fn cell_at(&self, row: usize, col: usize) -> Option<&CellSpec> {
        self.cells.iter().find(|a| a.covers(row, col))
    }

    fn normalize(&mut self) {
        self.cells.sort_by_key(|a| (a.row, a.col));
    }

    /// Merges the `row_span × col_span` block at `(row, col)` into one cell.
    /// Every slot in the block must currently be an unmerged cell and the
    /// block must not straddle the header boundary.
    pub fn merge(&mut self, row: usize, col: usize, row_span: usize, col_span: usize) -> Result<()> {
        if row_span == 0 || col_span == 0 || row + row_span > self.rows || col + col_span > self.cols {
            return Err(Error::InvalidArgument("merge block leaves the grid".into()));
        }
        if row_span * col_span == 1 {
            return Err(Error::InvalidArgument("merge block is a single slot".into()));
        }
        let straddles = |start: usize, len: usize, boundary: usize| start < boundary && start + len > boundary;
        if straddles(row, row_span, self.header_rows) || straddles(col, col_span, self.header_cols) {
            return Err(Error::InvalidArgument("merge block straddles the header".into()));
        }
        let block = |a: &CellSpec| a.row >= row && a.row < row + row_span && a.col >= col && a.col < col + col_span;
        let touched: Vec<&CellSpec> = self.cells.iter().filter(|a| block(a)).collect();
        if touched.len() != row_span * col_span || touched.iter().any(|a| a.row_span != 1 || a.col_span != 1) {
            return Err(Error::InvalidArgument("merge block overlaps an existing merged cell".into()));
        }
        self.cells.retain(|a| !block(a) || (a.row == row && a.col == col));
        let anchor = self
            .cells
            .iter_mut()
            .find(|a| a.row == row && a.col == col)
            .expect("anchor present");
        anchor.row_span = row_span;
        anchor.col_span = col_span;
        Ok(())
    }

    /// Splits a merged cell back into unit cells; new cells are empty.
    pub fn split(&mut self, row: usize, col: usize) -> Result<()> {
        let idx = self
            .cells
            .iter()
            .position(|a| a.row == row && a.col == col && (a.row_span > 1 || a.col_span > 1))
            .ok_or_else(|| Error::InvalidArgument(format!("no merged cell anchored at ({row}, {col})")))?;
        let a = self.cells[idx].clone();
        self.cells[idx].row_span = 1;
        self.cells[idx].col_span = 1;
        for r in a.row..a.row + a.row_span {
            for c in a.col..a.col + a.col_span {
                if (r, c) != (a.row, a.col) {
                    self.cells.push(CellSpec::unit(r, c, ""));
                }
            }
        }
        self.normalize();
        Ok(())
    }

    /// Inserts a body row before `at`. Spans crossing the insertion line
    /// grow; other columns get new cells from `contents`.
    pub fn insert_row(&mut self, at: usize, contents: &[String]) -> Result<()> {
        if at < self.header_rows || at > self.rows {
            return Err(Error::InvalidArgument(format!("row insertion point {at} out of range")));
        }
        for a in &mut self.cells {
            if a.row >= at {
                a.row += 1;
            } else if a.row + a.row_span > at {
                a.row_span += 1;
            }
        }
        self.rows += 1;
        for c in 0..self.cols {
            if !self.cells.iter().any(|a| a.covers(at, c)) {
                let text = contents.get(c).cloned().unwrap_or_default();
                self.cells.push(CellSpec::unit(at, c, text));
            }
        }
        self.normalize();
        Ok(())
    }

    /// Inserts a body column before `at`, analogous to [`insert_row`](Self::insert_row).
    pub fn insert_col(&mut self, at: usize, contents: &[String]) -> Result<()> {
        if at < self.header_cols || at > self.cols {
            return Err(Error::InvalidArgument(format!("column insertion point {at} out of range")));
        }
        for a in &mut self.cells {
            if a.col >= at {
                a.col += 1;
            } else if a.col + a.col_span > at {
                a.col_span += 1;
            }
        }
        self.cols += 1;
        for r in 0..self.rows {
            if !self.cells.iter().any(|a| a.covers(r, at)) {
                let text = contents.get(r).cloned().unwrap_or_default();
                self.cells.push(CellSpec::unit(r, at, text));
            }
        }
        self.normalize();
        Ok(())
    }

    /// Reorders body columns; `perm[i]` is the old index of new column
    /// `header_cols + i`. Rejected when any cell spans several columns.
    pub fn permute_body_cols(&mut self, perm: &[usize]) -> Result<()> {
        let body = self.cols - self.header_cols;
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..body).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("not a permutation of the body columns".into()));
        }
        if self.cells.iter().any(|a| a.col_span > 1) {
            return Err(Error::InvalidArgument("cannot reorder columns with column spans".into()));
        }
        let mut new_of_old = vec![0; body];
        for (new, &old) in perm.iter().enumerate() {
            new_of_old[old] = new;
        }
        for a in &mut self.cells {
            if a.col >= self.header_cols {
                a.col = self.header_cols + new_of_old[a.col - self.header_cols];
            }
        }
        self.normalize();
        Ok(())
    }

    pub fn body_cell_count(&self) -> usize {
        self.cells.iter().filter(|a| !self.is_header(a.row, a.col)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mutation {
    Merge,
    AddRow,
    AddCol,
    Split,
    Shuffle,
}

const MUTATIONS: [Mutation; 5] = [Mutation::Merge, Mutation::AddRow, Mutation::AddCol, Mutation::Split, Mutation::Shuffle];

const FILLER_WORDS: [&str; 16] = [
    "Total", "Notes", "Rating", "Status", "Owner", "Region", "Budget", "Score", "Level", "Count", "Target", "Actual",
    "Change", "Grade", "Phase", "Share",
];

fn body_values(model: &TableModel, col: usize) -> Vec<String> {
    model
        .cells
        .iter()
        .filter(|a| a.col == col && a.row >= model.header_rows && !a.content.is_empty())
        .map(|a| a.content.clone())
        .collect()
}

fn random_value<R: Rng + ?Sized>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        rng.gen_range(1..1000).to_string()
    } else {
        format!("{}.{}", rng.gen_range(0..100), rng.gen_range(0..10))
    }
}

fn try_mutation<R: Rng + ?Sized>(model: &mut TableModel, m: Mutation, rng: &mut R) -> Result<()> {
    match m {
        Mutation::Merge => {
            let vertical = rng.gen_bool(0.5);
            let (rs, cs) = if vertical { (2, 1) } else { (1, rng.gen_range(2..=3)) };
            if model.rows < rs || model.cols < cs {
                return Err(Error::InvalidArgument("table too small to merge".into()));
            }
            let r = rng.gen_range(0..=model.rows - rs);
            let c = rng.gen_range(0..=model.cols - cs);
            model.merge(r, c, rs, cs)
        }
        Mutation::AddRow => {
            let at = rng.gen_range(model.header_rows..=model.rows);
            let contents: Vec<String> = (0..model.cols)
                .map(|c| {
                    let pool = body_values(model, c);
                    if c < model.header_cols {
                        FILLER_WORDS.choose(rng).copied().unwrap_or("Row").to_string()
                    } else if pool.is_empty() || rng.gen_bool(0.3) {
                        random_value(rng)
                    } else {
                        pool.choose(rng).cloned().unwrap_or_default()
                    }
                })
                .collect();
            model.insert_row(at, &contents)
        }
        Mutation::AddCol => {
            let at = rng.gen_range(model.header_cols..=model.cols);
            let header = FILLER_WORDS.choose(rng).copied().unwrap_or("Extra").to_string();
            let contents: Vec<String> = (0..model.rows)
                .map(|r| if r < model.header_rows { header.clone() } else { random_value(rng) })
                .collect();
            model.insert_col(at, &contents)
        }
        Mutation::Split => {
            let merged: Vec<(usize, usize)> = model
                .cells
                .iter()
                .filter(|a| a.row_span > 1 || a.col_span > 1)
                .map(|a| (a.row, a.col))
                .collect();
            let &(r, c) = merged
                .choose(rng)
                .ok_or_else(|| Error::InvalidArgument("no merged cell to split".into()))?;
            model.split(r, c)
        }
        Mutation::Shuffle => {
            let body = model.cols - model.header_cols;
            if body < 2 {
                return Err(Error::InvalidArgument("too few body columns to shuffle".into()));
            }
            let mut perm: Vec<usize> = (0..body).collect();
            perm.shuffle(rng);
            model.permute_body_cols(&perm)
        }
    }
}

/// Derives `n_variants` tables from `seed`, each with 1–3 topology
/// mutations. A mutation that fails is re-drawn a bounded number of times
/// and then skipped.
pub fn evolve_table<R: Rng + ?Sized>(seed: &TableModel, rng: &mut R, n_variants: usize) -> Result<Vec<TableModel>> {
    seed.validate()?;
    let mut out = Vec::with_capacity(n_variants);
    for _ in 0..n_variants {
        let mut model = seed.clone();
        let count = rng.gen_range(1..=3);
        for _ in 0..count {
            for _ in 0..MUTATION_RETRIES {
                let m = *MUTATIONS.choose(rng).expect("non-empty");
                let mut trial = model.clone();
                if try_mutation(&mut trial, m, rng).is_ok() && trial.validate().is_ok() {
                    model = trial;
                    break;
                }
            }
        }
        out.push(model);
    }
    Ok(out)
}

/// Empties each non-header cell with probability `fraction`.
pub fn mask_cells<R: Rng + ?Sized>(model: &TableModel, rng: &mut R, fraction: f64) -> Result<TableModel> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("mask fraction {fraction} outside [0, 1]")));
    }
    let mut out = model.clone();
    let (hr, hc) = (model.header_rows, model.header_cols);
    for a in &mut out.cells {
        if a.row >= hr && a.col >= hc && rng.gen_bool(fraction) {
            a.content.clear();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Border {
    None,
    All,
    Outer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableStyle {
    pub template_id: u32,
    pub font_size: f64,
    pub padding: f64,
    pub border: Border,
    pub page: Rgb,
    pub header_bg: Rgb,
    pub header_fg: Rgb,
    pub body_bg: Rgb,
    pub body_fg: Rgb,
    pub stripe_bg: Rgb,
    pub grid: Rgb,
    pub stripe: bool,
}

struct Palette6 {
    header_bg: [u8; 3],
    header_fg: [u8; 3],
    body_bg: [u8; 3],
    body_fg: [u8; 3],
    stripe_bg: [u8; 3],
    grid: [u8; 3],
}

const PALETTES: [Palette6; 10] = [
    Palette6 { header_bg: [33, 66, 120], header_fg: [255, 255, 255], body_bg: [255, 255, 255], body_fg: [20, 20, 20], stripe_bg: [232, 238, 248], grid: [150, 160, 180] },
    Palette6 { header_bg: [240, 240, 240], header_fg: [0, 0, 0], body_bg: [255, 255, 255], body_fg: [30, 30, 30], stripe_bg: [247, 247, 247], grid: [190, 190, 190] },
    Palette6 { header_bg: [46, 125, 50], header_fg: [255, 255, 255], body_bg: [250, 255, 250], body_fg: [20, 40, 20], stripe_bg: [226, 242, 226], grid: [120, 170, 120] },
    Palette6 { header_bg: [90, 30, 30], header_fg: [255, 235, 220], body_bg: [255, 250, 245], body_fg: [60, 20, 20], stripe_bg: [246, 230, 222], grid: [170, 120, 110] },
    Palette6 { header_bg: [40, 40, 40], header_fg: [240, 240, 240], body_bg: [60, 60, 60], body_fg: [230, 230, 230], stripe_bg: [75, 75, 75], grid: [110, 110, 110] },
    Palette6 { header_bg: [255, 193, 7], header_fg: [30, 30, 30], body_bg: [255, 253, 240], body_fg: [40, 40, 40], stripe_bg: [255, 244, 204], grid: [200, 170, 90] },
    Palette6 { header_bg: [103, 58, 183], header_fg: [255, 255, 255], body_bg: [250, 248, 255], body_fg: [40, 20, 70], stripe_bg: [236, 230, 250], grid: [160, 140, 200] },
    Palette6 { header_bg: [0, 121, 140], header_fg: [255, 255, 255], body_bg: [245, 252, 253], body_fg: [10, 50, 60], stripe_bg: [220, 240, 243], grid: [110, 170, 180] },
    Palette6 { header_bg: [210, 210, 230], header_fg: [20, 20, 60], body_bg: [255, 255, 255], body_fg: [20, 20, 40], stripe_bg: [240, 240, 250], grid: [100, 100, 140] },
    Palette6 { header_bg: [230, 126, 34], header_fg: [255, 255, 255], body_bg: [255, 255, 255], body_fg: [50, 30, 10], stripe_bg: [253, 237, 222], grid: [200, 150, 100] },
];

const STRUCTURES: [(Border, f64); 5] = [(Border::All, 6.0), (Border::All, 10.0), (Border::Outer, 8.0), (Border::None, 8.0), (Border::All, 4.0)];

/// Number of style templates.
pub const STYLE_TEMPLATES: u32 = (PALETTES.len() * STRUCTURES.len()) as u32;

fn rgb(a: [u8; 3]) -> Rgb {
    Rgb::new(a[0], a[1], a[2])
}

impl TableStyle {
    /// The unrandomized style of template `id`.
    pub fn template(id: u32) -> Self {
        let id = id % STYLE_TEMPLATES;
        let p = &PALETTES[id as usize % PALETTES.len()];
        let (border, padding) = STRUCTURES[id as usize / PALETTES.len()];
        Self {
            template_id: id,
            font_size: 16.0,
            padding,
            border,
            page: Rgb::WHITE,
            header_bg: rgb(p.header_bg),
            header_fg: rgb(p.header_fg),
            body_bg: rgb(p.body_bg),
            body_fg: rgb(p.body_fg),
            stripe_bg: rgb(p.stripe_bg),
            grid: rgb(p.grid),
            stripe: false,
        }
    }

    /// A random template with randomized font size, padding and striping.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut s = Self::template(rng.gen_range(0..STYLE_TEMPLATES));
        s.font_size = *[16.0, 16.0, 24.0].choose(rng).expect("non-empty");
        s.padding = (s.padding + rng.gen_range(-2i32..=2) as f64).max(2.0);
        s.stripe = rng.gen_bool(0.5);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAnnotation {
    pub bbox: Rect,
    pub row: usize,
    pub col: usize,
    pub row_span: usize,
    pub col_span: usize,
    pub row_header: String,
    pub col_header: String,
    pub content: String,
    pub excel_name: String,
    #[serde(default)]
    pub header: bool,
}

impl CellAnnotation {
    pub fn center(&self) -> Point {
        self.bbox.center()
    }
}

/// A1-style name for a zero-based slot.
pub fn excel_name(row: usize, col: usize) -> String {
    let mut letters = Vec::new();
    let mut c = col + 1;
    while c > 0 {
        let rem = (c - 1) % 26;
        letters.push(b'A' + rem as u8);
        c = (c - 1) / 26;
    }
    letters.reverse();
    format!("{}{}", String::from_utf8(letters).expect("ascii"), row + 1)
}

/// Inverse of [`excel_name`]; returns zero-based `(row, col)`.
pub fn parse_excel_name(name: &str) -> Result<(usize, usize)> {
    let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
    let (letters, digits) = name.split_at(split);
    let bad = || Error::InvalidArgument(format!("bad cell name `{name}`"));
    if letters.is_empty() || digits.is_empty() || !letters.chars().all(|c| c.is_ascii_uppercase()) {
        return Err(bad());
    }
    let col = letters.bytes().fold(0usize, |acc, b| acc * 26 + (b - b'A') as usize + 1) - 1;
    let row: usize = digits.parse().map_err(|_| bad())?;
    if row == 0 {
        return Err(bad());
    }
    Ok((row - 1, col))
}

/// Midpoint of the cell's right edge, the handle used to resize a column.
pub fn edge_handle(bbox: &Rect) -> Point {
    Point::new(bbox.x2, (bbox.y1 + bbox.y2) / 2.0)
}

/// Box of the cell directly below, assuming equal row heights. The flag is
/// set when the result had to be clipped to `bounds`.
pub fn corner_fill_target(bbox: &Rect, bounds: Option<&Rect>) -> (Rect, bool) {
    let r = Rect {
        x1: bbox.x1,
        y1: bbox.y2,
        x2: bbox.x2,
        y2: 2.0 * bbox.y2 - bbox.y1,
    };
    match bounds {
        Some(b) if !b.contains_rect(&r) => match r.clip_to(b) {
            Some(c) => (c, true),
            None => (Rect { y2: r.y1, ..r }, true),
        },
        _ => (r, false),
    }
}

#[derive(Debug, Clone)]
pub struct RenderedTable {
    pub image: Canvas,
    pub cells: Vec<CellAnnotation>,
    /// Union of all cell boxes before clipping.
    pub content_box: Rect,
    pub font_scale: u32,
    pub font_reduced: bool,
    pub clipped: bool,
}

impl RenderedTable {
    pub fn cell(&self, row: usize, col: usize) -> Option<&CellAnnotation> {
        self.cells.iter().find(|c| {
            row >= c.row && row < c.row + c.row_span && col >= c.col && col < c.col + c.col_span
        })
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            x1: 0.0,
            y1: 0.0,
            x2: self.image.width() as f64,
            y2: self.image.height() as f64,
        }
    }
}

struct Grid {
    col_x: Vec<f64>,
    row_y: Vec<f64>,
}

fn measure(model: &TableModel, style: &TableStyle, face: &BitmapFace) -> Grid {
    let pad = style.padding;
    let min_w = 2.0 * pad + 3.0 * face.advance('0');
    let mut widths = vec![min_w; model.cols];
    // Bold header glyphs overhang their advance by about half a scale step.
    let need = |a: &CellSpec| {
        let bold = if model.is_header(a.row, a.col) { face.scale.div_ceil(2) as f64 } else { 0.0 };
        face.text_width(&a.content) + bold + 2.0 * pad
    };
    for a in model.cells.iter().filter(|a| a.col_span == 1) {
        widths[a.col] = widths[a.col].max(need(a));
    }
    for a in model.cells.iter().filter(|a| a.col_span > 1) {
        let need = need(a);
        let have: f64 = widths[a.col..a.col + a.col_span].iter().sum();
        if need > have {
            widths[a.col + a.col_span - 1] += need - have;
        }
    }
    let row_h = face.metrics().glyph_height() + 2.0 * pad;
    let mut col_x = vec![0.0];
    for w in widths {
        col_x.push(col_x.last().unwrap() + w);
    }
    let row_y = (0..=model.rows).map(|r| r as f64 * row_h).collect();
    Grid { col_x, row_y }
}

/// Lays out and draws `model`. The image is the table plus a margin, capped
/// at `target`. An oversized table first gets one smaller font scale; if it
/// still does not fit it is clipped and flagged.
pub fn layout_render(model: &TableModel, style: &TableStyle, target: (u32, u32)) -> Result<RenderedTable> {
    model.validate()?;
    let margin = DEFAULT_MARGIN as f64;
    let mut scale = BitmapFace::for_pixel_size(style.font_size, false).scale;
    let fits = |g: &Grid| {
        g.col_x[model.cols] + 2.0 * margin <= target.0 as f64 && g.row_y[model.rows] + 2.0 * margin <= target.1 as f64
    };
    let mut grid = measure(model, style, &BitmapFace::new(scale, false));
    let mut font_reduced = false;
    if !fits(&grid) && scale > 1 {
        scale -= 1;
        font_reduced = true;
        grid = measure(model, style, &BitmapFace::new(scale, false));
    }
    let clipped = !fits(&grid);
    let table_w = grid.col_x[model.cols];
    let table_h = grid.row_y[model.rows];
    let width = ((table_w + 2.0 * margin) as u32).min(target.0).max(1);
    let height = ((table_h + 2.0 * margin) as u32).min(target.1).max(1);
    let bounds = Rect {
        x1: 0.0,
        y1: 0.0,
        x2: width as f64,
        y2: height as f64,
    };

    let regular = BitmapFace::new(scale, false);
    let bold = BitmapFace::new(scale, true);
    let metrics = regular.metrics();
    let mut image = Canvas::new(width, height, style.page);
    let mut cells = Vec::with_capacity(model.cells.len());
    for a in &model.cells {
        let full = Rect {
            x1: margin + grid.col_x[a.col],
            y1: margin + grid.row_y[a.row],
            x2: margin + grid.col_x[a.col + a.col_span],
            y2: margin + grid.row_y[a.row + a.row_span],
        };
        let Some(bbox) = full.clip_to(&bounds).filter(|b| b.width() > 0.0 && b.height() > 0.0) else {
            continue;
        };
        let header = model.is_header(a.row, a.col);
        let bg = if header {
            style.header_bg
        } else if style.stripe && (a.row - model.header_rows) % 2 == 1 {
            style.stripe_bg
        } else {
            style.body_bg
        };
        image.fill_rect(bbox.x1, bbox.y1, bbox.x2, bbox.y2, bg);
        let (face, fg): (&BitmapFace, Rgb) = if header { (&bold, style.header_fg) } else { (&regular, style.body_fg) };
        let baseline = full.y1 + (full.height() - metrics.glyph_height()) / 2.0 + metrics.ascent;
        let mut pen = full.x1 + style.padding;
        for ch in a.content.chars() {
            let adv = face.advance(ch);
            if pen + adv > bbox.x2 {
                break;
            }
            face.draw(&mut image, ch, pen, baseline, fg);
            pen += adv;
        }
        if style.border == Border::All {
            image.fill_rect(full.x1, full.y1, full.x2, full.y1 + 1.0, style.grid);
            image.fill_rect(full.x1, full.y1, full.x1 + 1.0, full.y2, style.grid);
        }

        let col_header = if model.header_rows > 0 && a.row >= model.header_rows {
            model.cell_at(model.header_rows - 1, a.col).map(|h| h.content.clone()).unwrap_or_default()
        } else {
            String::new()
        };
        let row_header = if model.header_cols > 0 && a.col >= model.header_cols {
            model.cell_at(a.row, model.header_cols - 1).map(|h| h.content.clone()).unwrap_or_default()
        } else {
            String::new()
        };
        cells.push(CellAnnotation {
            bbox,
            row: a.row,
            col: a.col,
            row_span: a.row_span,
            col_span: a.col_span,
            row_header,
            col_header,
            content: a.content.clone(),
            excel_name: excel_name(a.row, a.col),
            header,
        });
    }
    let content_box = Rect {
        x1: margin,
        y1: margin,
        x2: margin + table_w,
        y2: margin + table_h,
    };
    if matches!(style.border, Border::All | Border::Outer) {
        let c = content_box;
        if style.border == Border::Outer {
            image.fill_rect(c.x1, c.y1, c.x2, c.y1 + 1.0, style.grid);
            image.fill_rect(c.x1, c.y1, c.x1 + 1.0, c.y2, style.grid);
        }
        image.fill_rect(c.x1, c.y2 - 1.0, c.x2, c.y2, style.grid);
        image.fill_rect(c.x2 - 1.0, c.y1, c.x2, c.y2, style.grid);
    }
    Ok(RenderedTable {
        image,
        cells,
        content_box,
        font_scale: scale,
        font_reduced,
        clipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableAnnotation {
    pub image: String,
    pub size: [u32; 2],
    pub cells: Vec<CellAnnotation>,
    pub style: TableStyle,
    #[serde(default)]
    pub masked: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clipped: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub font_reduced: bool,
}

impl TableAnnotation {
    pub fn cell_by_name(&self, name: &str) -> Option<&CellAnnotation> {
        self.cells.iter().find(|c| c.excel_name == name)
    }
}

fn seed(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

/// Small hand-written seed tables.
pub fn seed_tables() -> Vec<(&'static str, TableModel)> {
    let specs: Vec<(&str, Vec<Vec<String>>)> = vec![
        (
            "fruit_prices",
            seed(&[
                &["Fruit", "Price", "Stock", "Origin"],
                &["Apple", "1.20", "340", "Chile"],
                &["Banana", "0.45", "1200", "Ecuador"],
                &["Cherry", "6.80", "85", "Turkey"],
                &["Mango", "2.10", "410", "India"],
                &["Pear", "1.35", "260", "Chile"],
            ]),
        ),
        (
            "math_scores",
            seed(&[
                &["Student", "Algebra", "Geometry", "Calculus"],
                &["Ana", "88", "92", "79"],
                &["Ben", "75", "81", "90"],
                &["Chloe", "93", "87", "85"],
                &["Deniz", "68", "74", "71"],
            ]),
        ),
        (
            "work_hours",
            seed(&[
                &["Employee", "Mon", "Tue", "Wed", "Thu", "Fri"],
                &["Kim", "8", "7", "8", "9", "6"],
                &["Lee", "6", "8", "8", "7", "8"],
                &["Omar", "9", "9", "7", "8", "5"],
                &["Rosa", "7", "6", "8", "8", "8"],
            ]),
        ),
        (
            "city_weather",
            seed(&[
                &["City", "High", "Low", "Rain mm", "Sky"],
                &["Oslo", "14", "6", "32", "Cloudy"],
                &["Lima", "22", "17", "1", "Clear"],
                &["Perth", "25", "13", "8", "Sunny"],
                &["Quito", "19", "9", "48", "Showers"],
                &["Seoul", "23", "15", "12", "Haze"],
            ]),
        ),
        (
            "inventory",
            seed(&[
                &["SKU", "Item", "Qty", "Unit cost", "Shelf"],
                &["A-101", "Bolts", "500", "0.05", "B2"],
                &["A-102", "Nuts", "750", "0.03", "B2"],
                &["C-210", "Hinges", "60", "1.75", "D1"],
                &["C-305", "Brackets", "120", "0.90", "D4"],
            ]),
        ),
        (
            "quarterly_sales",
            seed(&[
                &["Region", "Q1", "Q2", "Q3", "Q4"],
                &["North", "120", "135", "128", "160"],
                &["South", "98", "102", "110", "115"],
                &["East", "143", "150", "149", "171"],
                &["West", "87", "91", "95", "104"],
            ]),
        ),
    ];
    specs
        .into_iter()
        .map(|(name, grid)| (name, TableModel::from_grid(&grid, 1, 1).expect("seed tables are valid")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableGenConfig {
    pub target: (u32, u32),
    pub mask_fraction: f64,
    pub masked_share: f64,
}

impl Default for TableGenConfig {
    fn default() -> Self {
        Self {
            target: (1280, 720),
            mask_fraction: DEFAULT_MASK_FRACTION,
            masked_share: MASKED_TABLE_SHARE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedTable {
    pub seed_name: &'static str,
    pub model: TableModel,
    pub style: TableStyle,
    pub masked: bool,
    pub rendered: RenderedTable,
}

impl GeneratedTable {
    pub fn annotation(&self, image_ref: &str) -> TableAnnotation {
        TableAnnotation {
            image: image_ref.to_string(),
            size: [self.rendered.image.width(), self.rendered.image.height()],
            cells: self.rendered.cells.clone(),
            style: self.style.clone(),
            masked: self.masked,
            clipped: self.rendered.clipped,
            font_reduced: self.rendered.font_reduced,
        }
    }
}

/// Table `index` of a run seeded with `global_seed`.
pub fn generate_table(global_seed: u64, index: u64, config: &TableGenConfig) -> Result<GeneratedTable> {
    let mut rng = scene_rng(global_seed, index);
    let seeds = seed_tables();
    let (seed_name, seed_model) = seeds.choose(&mut rng).expect("seed tables exist").clone();
    let mut model = evolve_table(&seed_model, &mut rng, 1)?.remove(0);
    let masked = rng.gen_bool(config.masked_share);
    if masked {
        model = mask_cells(&model, &mut rng, config.mask_fraction)?;
    }
    let style = TableStyle::sample(&mut rng);
    let rendered = layout_render(&model, &style, config.target)?;
    Ok(GeneratedTable {
        seed_name,
        model,
        style,
        masked,
        rendered,
    })
}
