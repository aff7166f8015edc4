//! Text pages with per-character boxes, rendered over a background's blank
//! region, plus cursor and drag-selection targets.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canvas::scene_rng;
use crate::error::{Error, Result};
use crate::eval::CorrectRegion;
use crate::font::{discover_ttf, BitmapFace, Face, TtfFace};
use crate::geometry::{redmean_distance, Rect, Rgb};
use crate::raster::Canvas;

/// Horizontal slack added on both sides of a cursor gap.
pub const CURSOR_TOLERANCE: f64 = 2.0;
pub const TAB_WIDTH: usize = 4;
const MIN_TEXT_CONTRAST: f64 = 300.0;

const PROSE: &str = include_str!("../data/text/prose.txt");
const CODE: &str = include_str!("../data/text/code.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Code,
    NaturalLanguage,
}

/// Bundled snippets of one kind.
pub fn corpus(kind: ContentKind) -> Vec<&'static str> {
    match kind {
        ContentKind::Code => CODE.split("\n----\n").map(str::trim_end).collect(),
        ContentKind::NaturalLanguage => PROSE.lines().filter(|l| !l.trim().is_empty()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontParams {
    pub face_id: String,
    pub size_px: f64,
    pub bold: bool,
    pub color: Rgb,
    /// Extra space after every glyph.
    #[serde(default)]
    pub tracking: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub ch: char,
    pub bbox: Rect,
    pub line: usize,
    /// Char index in the source content.
    #[serde(skip)]
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPage {
    pub content_kind: ContentKind,
    pub glyphs: Vec<Glyph>,
    pub lines: Vec<Rect>,
    pub font: FontParams,
    pub blank_region: Rect,
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Background {
    pub image: Canvas,
    pub blank_region: Rect,
    pub name: String,
}

impl Background {
    pub fn new(image: Canvas, blank_region: Rect, name: impl Into<String>) -> Result<Self> {
        let bounds = Rect {
            x1: 0.0,
            y1: 0.0,
            x2: image.width() as f64,
            y2: image.height() as f64,
        };
        if !bounds.contains_rect(&blank_region) {
            return Err(Error::InvalidArgument("blank region lies outside the background".into()));
        }
        Ok(Self {
            image,
            blank_region,
            name: name.into(),
        })
    }

    pub fn load(path: &Path, blank_region: Rect) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("background").to_string();
        Self::new(Canvas::from_raw(w, h, img.into_raw()), blank_region, name)
    }

    /// Dominant color of the blank region, taken from its center pixel.
    pub fn paper(&self) -> Rgb {
        let c = self.blank_region.center();
        self.image.get(
            (c.x as u32).min(self.image.width() - 1),
            (c.y as u32).min(self.image.height() - 1),
        )
    }
}

/// A synthetic application window whose document pane is the blank region.
pub fn procedural_background<R: Rng + ?Sized>(rng: &mut R, width: u32, height: u32) -> Background {
    let dark = rng.gen_bool(0.3);
    let (chrome, panel, paper) = if dark {
        (Rgb::new(45, 45, 48), Rgb::new(37, 37, 38), Rgb::new(30, 30, 30))
    } else {
        let tint = rng.gen_range(215..=240);
        (Rgb::new(tint, tint, tint + 10), Rgb::new(243, 243, 243), Rgb::WHITE)
    };
    let (w, h) = (width as f64, height as f64);
    let mut image = Canvas::new(width, height, chrome);
    let title = rng.gen_range(28..=40) as f64;
    let toolbar = rng.gen_range(0..=48) as f64;
    let sidebar = if rng.gen_bool(0.6) { rng.gen_range(140..=260) as f64 } else { 0.0 };
    let status = rng.gen_range(20..=28) as f64;
    for (i, c) in [Rgb::new(236, 95, 90), Rgb::new(245, 190, 79), Rgb::new(98, 197, 84)].into_iter().enumerate() {
        image.fill_circle(crate::geometry::Point::new(18.0 + 20.0 * i as f64, title / 2.0), 6.0, c);
    }
    let accent = Rgb::from_hsv(rng.gen_range(0.0..360.0), 0.6, 0.8);
    image.fill_rect(0.0, h - status, w, h, accent);
    if sidebar > 0.0 {
        image.fill_rect(0.0, title + toolbar, sidebar, h - status, panel);
        let mut y = title + toolbar + 16.0;
        while y + 10.0 < h - status {
            let len = rng.gen_range(40.0..sidebar - 24.0);
            image.fill_rect(16.0, y, 16.0 + len, y + 6.0, chrome);
            y += 26.0;
        }
    }
    for i in 0..(toolbar / 24.0) as usize * 12 {
        let x = 12.0 + i as f64 * 30.0;
        if x + 20.0 < w {
            image.fill_rect(x, title + 8.0, x + 20.0, title + toolbar - 8.0, panel);
        }
    }
    let doc = Rect {
        x1: sidebar + 8.0,
        y1: title + toolbar + 8.0,
        x2: w - 8.0,
        y2: h - status - 8.0,
    };
    image.fill_rect(doc.x1, doc.y1, doc.x2, doc.y2, paper);
    let inset = rng.gen_range(8..=32) as f64;
    let blank = Rect {
        x1: doc.x1 + inset,
        y1: doc.y1 + inset,
        x2: doc.x2 - inset,
        y2: doc.y2 - inset,
    };
    Background {
        image,
        blank_region: blank,
        name: format!("procedural-{}", if dark { "dark" } else { "light" }),
    }
}

fn expand_tabs(content: &str) -> Vec<(char, usize)> {
    let mut out = Vec::with_capacity(content.len());
    let mut col = 0;
    for (i, ch) in content.chars().enumerate() {
        match ch {
            '\t' => {
                let n = TAB_WIDTH - col % TAB_WIDTH;
                out.extend(std::iter::repeat_n((' ', i), n));
                col += n;
            }
            '\n' => {
                out.push(('\n', i));
                col = 0;
            }
            '\r' => {}
            c => {
                out.push((c, i));
                col += 1;
            }
        }
    }
    out
}

/// Layout state for greedy wrapping.
struct Layout<'a> {
    face: &'a dyn Face,
    region: Rect,
    tracking: f64,
    glyph_h: f64,
    line_step: f64,
    pen: f64,
    top: f64,
    line: usize,
    glyphs: Vec<Glyph>,
    line_tops: Vec<f64>,
    truncated: bool,
}

impl Layout<'_> {
    fn advance(&self, ch: char) -> f64 {
        self.face.advance(ch) + self.tracking
    }

    fn line_empty(&self) -> bool {
        self.pen == self.region.x1
    }

    /// Moves to the next line; false when it would leave the region.
    fn newline(&mut self) -> bool {
        let next = self.top + self.line_step;
        if next + self.glyph_h > self.region.y2 {
            self.truncated = true;
            return false;
        }
        self.top = next;
        self.line += 1;
        self.line_tops.push(next);
        self.pen = self.region.x1;
        true
    }

    fn place(&mut self, ch: char, source: usize) {
        let adv = self.face.advance(ch);
        self.glyphs.push(Glyph {
            ch,
            bbox: Rect {
                x1: self.pen,
                y1: self.top,
                x2: self.pen + adv,
                y2: self.top + self.glyph_h,
            },
            line: self.line,
            source,
        });
        self.pen += adv + self.tracking;
    }

    fn fits(&self, width: f64) -> bool {
        // Tracking after the last glyph may overhang.
        self.pen + width - self.tracking <= self.region.x2 + 1e-9
    }

    /// Places one token, wrapping as needed. False once the region is full.
    fn token(&mut self, token: &[(char, usize)]) -> bool {
        let width: f64 = token.iter().map(|&(c, _)| self.advance(c)).sum();
        let space = token[0].0 == ' ';
        if self.fits(width) {
            for &(c, s) in token {
                self.place(c, s);
            }
            return true;
        }
        if space {
            // A space run at a wrap point is consumed without boxes.
            return self.line_empty() || self.newline();
        }
        if !self.line_empty() && !self.newline() {
            return false;
        }
        for &(c, s) in token {
            if !self.fits(self.advance(c)) && !(self.line_empty() || self.newline()) {
                return false;
            }
            if !self.fits(self.advance(c)) {
                self.truncated = true;
                return false;
            }
            self.place(c, s);
        }
        true
    }
}

/// Lays out `content` inside `blank_region` with greedy wrapping. Spaces get
/// boxes except where a line wraps; tabs expand to spaces.
pub fn compose_page(
    blank_region: Rect,
    content: &str,
    content_kind: ContentKind,
    face: &dyn Face,
    font: FontParams,
) -> Result<TextPage> {
    let m = face.metrics();
    let glyph_h = m.glyph_height();
    let probe = content.chars().find(|c| !c.is_whitespace()).unwrap_or('M');
    if blank_region.height() < glyph_h || blank_region.width() < face.advance(probe) {
        return Err(Error::InvalidArgument(format!(
            "blank region {}x{} cannot hold a single glyph",
            blank_region.width(),
            blank_region.height()
        )));
    }
    let mut lay = Layout {
        face,
        region: blank_region,
        tracking: font.tracking,
        glyph_h,
        line_step: m.line_height(),
        pen: blank_region.x1,
        top: blank_region.y1,
        line: 0,
        glyphs: Vec::new(),
        line_tops: vec![blank_region.y1],
        truncated: false,
    };
    'outer: for (i, para) in expand_tabs(content).split(|&(c, _)| c == '\n').enumerate() {
        if i > 0 && !lay.newline() {
            break;
        }
        let mut rest = para;
        while !rest.is_empty() {
            let space = rest[0].0 == ' ';
            let n = rest.iter().take_while(|&&(c, _)| (c == ' ') == space).count();
            let (tok, tail) = rest.split_at(n);
            if !lay.token(tok) {
                break 'outer;
            }
            rest = tail;
        }
    }
    let lines = lay
        .line_tops
        .iter()
        .enumerate()
        .map(|(li, &top)| {
            let mut on = lay.glyphs.iter().filter(|g| g.line == li);
            let first = on.next();
            let x1 = first.map_or(blank_region.x1, |g| g.bbox.x1);
            let x2 = lay.glyphs.iter().rfind(|g| g.line == li).map_or(x1, |g| g.bbox.x2);
            Rect {
                x1,
                y1: top,
                x2,
                y2: top + glyph_h,
            }
        })
        .collect();
    Ok(TextPage {
        content_kind,
        glyphs: lay.glyphs,
        lines,
        font,
        blank_region,
        truncated: lay.truncated,
    })
}

/// Paints the page's glyphs onto a copy of `background`.
pub fn render_page(page: &TextPage, background: &Canvas, face: &dyn Face) -> Canvas {
    let mut out = background.clone();
    let ascent = face.metrics().ascent;
    for g in &page.glyphs {
        face.draw(&mut out, g.ch, g.bbox.x1, g.bbox.y1 + ascent, page.font.color);
    }
    out
}

impl TextPage {
    pub fn text(&self) -> String {
        self.glyphs.iter().map(|g| g.ch).collect()
    }

    fn line_box(&self, line: usize) -> Rect {
        self.lines[line]
    }

    /// Gap rect before glyph `i` (to the previous glyph on its line, or the
    /// glyph's own left edge at a line start).
    fn leading_gap(&self, i: usize) -> Rect {
        let g = &self.glyphs[i];
        let line = self.line_box(g.line);
        let x1 = match i.checked_sub(1).map(|p| &self.glyphs[p]) {
            Some(prev) if prev.line == g.line => prev.bbox.x2,
            _ => g.bbox.x1,
        };
        Rect {
            x1,
            y1: line.y1,
            x2: g.bbox.x1,
            y2: line.y2,
        }
    }

    fn trailing_gap(&self, i: usize) -> Rect {
        let g = &self.glyphs[i];
        let line = self.line_box(g.line);
        let x2 = match self.glyphs.get(i + 1) {
            Some(next) if next.line == g.line => next.bbox.x1,
            _ => g.bbox.x2,
        };
        Rect {
            x1: g.bbox.x2,
            y1: line.y1,
            x2,
            y2: line.y2,
        }
    }

    /// Char-index occurrences of `needle` in the rendered text. With
    /// `whole_word`, matches must not touch alphanumerics on either side.
    pub fn occurrences(&self, needle: &str, whole_word: bool) -> Vec<usize> {
        let hay: Vec<char> = self.glyphs.iter().map(|g| g.ch).collect();
        let pat: Vec<char> = needle.chars().collect();
        if pat.is_empty() || pat.len() > hay.len() {
            return Vec::new();
        }
        let word = |c: char| c.is_alphanumeric() || c == '_';
        (0..=hay.len() - pat.len())
            .filter(|&i| hay[i..i + pat.len()] == pat[..])
            .filter(|&i| {
                let j = i + pat.len();
                let apart = |a: usize, b: usize| self.glyphs[a].line != self.glyphs[b].line;
                !whole_word
                    || ((i == 0 || !word(hay[i - 1]) || apart(i - 1, i))
                        && (j == hay.len() || !word(hay[j]) || apart(j - 1, j)))
            })
            .collect()
    }

    /// Tokens of word characters as `(start, end)` glyph ranges.
    pub fn words(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, g) in self.glyphs.iter().enumerate() {
            let w = g.ch.is_alphanumeric() || g.ch == '_';
            let same_line = start.is_none_or(|s: usize| self.glyphs[s].line == g.line);
            match (start, w && same_line) {
                (None, true) => start = Some(i),
                (Some(s), false) => {
                    out.push((s, i));
                    start = w.then_some(i);
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.glyphs.len()));
        }
        out
    }
}

fn widen(r: Rect) -> Rect {
    Rect {
        x1: r.x1 - CURSOR_TOLERANCE,
        x2: r.x2 + CURSOR_TOLERANCE,
        ..r
    }
}

/// Region where clicking puts the cursor before glyph `index`; `index` equal
/// to the glyph count means after the last glyph.
pub fn cursor_target(page: &TextPage, index: usize) -> Result<CorrectRegion> {
    let n = page.glyphs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("page has no glyphs".into()));
    }
    let gap = match index {
        i if i < n => page.leading_gap(i),
        i if i == n => page.trailing_gap(n - 1),
        _ => return Err(Error::InvalidArgument(format!("cursor index {index} beyond {n} glyphs"))),
    };
    Ok(CorrectRegion::unranked(widen(gap)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    ShortSpan,
    LongSpan,
    Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanTarget {
    pub start_index: usize,
    pub end_index: usize,
    pub kind: SpanKind,
    #[serde(default)]
    pub context_hint: String,
}

impl SpanTarget {
    /// Builds a span, attaching a locating hint when its text occurs more
    /// than once. Fails if no hint can single it out.
    pub fn new(page: &TextPage, start: usize, end: usize, kind: SpanKind) -> Result<Self> {
        if start >= end || end > page.glyphs.len() {
            return Err(Error::InvalidArgument(format!("span {start}..{end} is invalid")));
        }
        let text: String = page.glyphs[start..end].iter().map(|g| g.ch).collect();
        if text.trim() != text {
            return Err(Error::InvalidArgument("span has leading or trailing whitespace".into()));
        }
        let whole = kind == SpanKind::Word;
        let occ = page.occurrences(&text, whole);
        let context_hint = if occ.len() <= 1 {
            String::new()
        } else {
            let line = page.glyphs[start].line;
            let on_line = occ.iter().filter(|&&i| page.glyphs[i].line == line).count();
            if on_line == 1 {
                format!("on line {}", line + 1)
            } else {
                let prev = page
                    .words()
                    .into_iter().rfind(|&(_, e)| e <= start)
                    .map(|(s, e)| page.glyphs[s..e].iter().map(|g| g.ch).collect::<String>());
                let unique = prev.as_ref().filter(|p| {
                    let joined_starts: Vec<usize> = occ
                        .iter()
                        .filter(|&&i| {
                            let before: String = page.glyphs[..i].iter().map(|g| g.ch).collect();
                            before.trim_end().ends_with(p.as_str())
                        })
                        .copied()
                        .collect();
                    joined_starts == [start]
                });
                match unique {
                    Some(p) => format!("right after \"{p}\""),
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "`{text}` occurs {} times with no distinguishing context",
                            occ.len()
                        )))
                    }
                }
            }
        };
        Ok(Self {
            start_index: start,
            end_index: end,
            kind,
            context_hint,
        })
    }

    pub fn text(&self, page: &TextPage) -> String {
        page.glyphs[self.start_index..self.end_index].iter().map(|g| g.ch).collect()
    }
}

/// Two unranked regions: the gap before the first glyph and the gap after
/// the last. A drag in either direction between them selects the span.
pub fn span_drag_target(page: &TextPage, span: &SpanTarget) -> Result<[CorrectRegion; 2]> {
    if span.start_index >= span.end_index || span.end_index > page.glyphs.len() {
        return Err(Error::InvalidArgument(format!(
            "span {}..{} is invalid",
            span.start_index, span.end_index
        )));
    }
    Ok([
        CorrectRegion::unranked(widen(page.leading_gap(span.start_index))),
        CorrectRegion::unranked(widen(page.trailing_gap(span.end_index - 1))),
    ])
}

/// Samples a span of `kind`; `None` when the page has no usable candidate.
pub fn sample_span<R: Rng + ?Sized>(page: &TextPage, kind: SpanKind, rng: &mut R) -> Option<SpanTarget> {
    let words = page.words();
    let mut candidates: Vec<(usize, usize)> = match kind {
        SpanKind::Word => words.iter().copied().filter(|&(s, e)| e - s >= 3).collect(),
        SpanKind::ShortSpan => words
            .windows(2)
            .map(|w| (w[0].0, w[1].1))
            .filter(|&(s, e)| page.glyphs[s].line == page.glyphs[e - 1].line)
            .collect(),
        SpanKind::LongSpan => {
            let n = words.len();
            (0..n)
                .flat_map(|i| (i + 4..n.min(i + 16)).map(move |j| (i, j)))
                .map(|(i, j)| (words[i].0, words[j].1))
                .filter(|&(s, e)| e - s >= 20)
                .collect()
        }
    };
    candidates.shuffle(rng);
    candidates
        .into_iter()
        .take(32)
        .find_map(|(s, e)| SpanTarget::new(page, s, e, kind).ok())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlyphAnnotation {
    pub ch: char,
    pub bbox: Rect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PageAnnotation {
    pub image: String,
    pub size: [u32; 2],
    pub content_kind: ContentKind,
    pub glyphs: Vec<GlyphAnnotation>,
    pub lines: Vec<Rect>,
    pub font: FontParams,
    pub blank_region: Rect,
    pub background: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

/// Faces available to the generator: the bitmap face plus any TrueType
/// files from a font directory.
#[derive(Clone, Default)]
pub struct FontLibrary {
    ttf: Vec<(PathBuf, TtfFace)>,
}

impl FontLibrary {
    pub fn with_dir(dir: &Path) -> Result<Self> {
        let mut ttf = Vec::new();
        for path in discover_ttf(dir)? {
            match TtfFace::load(&path, 16.0) {
                Ok(face) => ttf.push((path, face)),
                Err(e) => log::warn!("skipping font {}: {e}", path.display()),
            }
        }
        Ok(Self { ttf })
    }

    pub fn len(&self) -> usize {
        1 + self.ttf.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Face `i` at `size_px`; index 0 is the bitmap face.
    pub fn face(&self, i: usize, size_px: f64, bold: bool) -> (String, Box<dyn Face>) {
        match i.checked_sub(1).and_then(|j| self.ttf.get(j)) {
            Some((path, f)) => {
                let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("ttf").to_string();
                (id, Box::new(f.with_size(size_px)))
            }
            None => ("bitmap8x8".to_string(), Box::new(BitmapFace::for_pixel_size(size_px, bold))),
        }
    }
}

#[derive(Clone, Default)]
pub struct TextGenConfig {
    pub fonts: FontLibrary,
    /// User-supplied backgrounds; procedural ones are used when empty.
    pub backgrounds: Vec<Background>,
    pub size: Option<(u32, u32)>,
}

pub struct GeneratedPage {
    pub page: TextPage,
    pub image: Canvas,
    pub background: String,
}

impl GeneratedPage {
    pub fn annotation(&self, image_ref: &str) -> PageAnnotation {
        PageAnnotation {
            image: image_ref.to_string(),
            size: [self.image.width(), self.image.height()],
            content_kind: self.page.content_kind,
            glyphs: self.page.glyphs.iter().map(|g| GlyphAnnotation { ch: g.ch, bbox: g.bbox }).collect(),
            lines: self.page.lines.clone(),
            font: self.page.font.clone(),
            blank_region: self.page.blank_region,
            background: self.background.clone(),
            truncated: self.page.truncated,
        }
    }
}

fn text_color<R: Rng + ?Sized>(rng: &mut R, paper: Rgb) -> Rgb {
    for _ in 0..20 {
        let c = Rgb::from_hsv(rng.gen_range(0.0..360.0), rng.gen_range(0.0..0.7), rng.gen_range(0.0..1.0));
        if redmean_distance(c, paper) >= MIN_TEXT_CONTRAST {
            return c;
        }
    }
    if redmean_distance(Rgb::BLACK, paper) > redmean_distance(Rgb::WHITE, paper) {
        Rgb::BLACK
    } else {
        Rgb::WHITE
    }
}

/// Page `index` of a run seeded with `global_seed`.
pub fn generate_page(global_seed: u64, index: u64, config: &TextGenConfig) -> Result<GeneratedPage> {
    let mut rng = scene_rng(global_seed, index);
    let kind = if rng.gen_bool(0.5) { ContentKind::Code } else { ContentKind::NaturalLanguage };
    let background = match config.backgrounds.choose(&mut rng) {
        Some(b) => b.clone(),
        None => {
            let (w, h) = config.size.unwrap_or((1280, 720));
            procedural_background(&mut rng, w, h)
        }
    };
    let snippets = corpus(kind);
    let pieces = rng.gen_range(1..=3);
    let content = (0..pieces)
        .map(|_| *snippets.choose(&mut rng).expect("corpus is non-empty"))
        .collect::<Vec<_>>()
        .join(if kind == ContentKind::Code { "\n\n" } else { " " });
    let size_px = *[16.0, 16.0, 24.0, 32.0].choose(&mut rng).expect("non-empty");
    let bold = rng.gen_bool(0.2);
    let (face_id, face) = config.fonts.face(rng.gen_range(0..config.fonts.len()), size_px, bold);
    let font = FontParams {
        face_id,
        size_px,
        bold,
        color: text_color(&mut rng, background.paper()),
        tracking: rng.gen_range(0..=2) as f64,
    };
    let page = compose_page(background.blank_region, &content, kind, face.as_ref(), font)?;
    let image = render_page(&page, &background.image, face.as_ref());
    Ok(GeneratedPage {
        page,
        image,
        background: background.name,
    })
}
