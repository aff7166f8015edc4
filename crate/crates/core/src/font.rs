//! Glyph faces used by the table and text renderers.
//!
//! The built-in face is an 8×8 bitmap font scaled by an integer factor; it
//! needs no files and renders identically everywhere. TrueType faces can be
//! loaded from disk when more realistic typography is wanted.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use ab_glyph::{Font as _, FontArc, PxScale, ScaleFont as _};
use font8x8::{UnicodeFonts, BASIC_FONTS, LATIN_FONTS};

use crate::error::{Error, Result};
use crate::geometry::Rgb;
use crate::raster::Canvas;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMetrics {
    /// Distance from the line top to the baseline.
    pub ascent: f64,
    /// Distance from the baseline to the bottom of the glyph box.
    pub descent: f64,
    /// Extra space between consecutive lines.
    pub line_gap: f64,
}

impl LineMetrics {
    pub fn glyph_height(&self) -> f64 {
        self.ascent + self.descent
    }

    pub fn line_height(&self) -> f64 {
        self.ascent + self.descent + self.line_gap
    }
}

/// A face at a fixed pixel size.
pub trait Face: Send + Sync {
    fn name(&self) -> String;
    fn metrics(&self) -> LineMetrics;
    fn advance(&self, ch: char) -> f64;
    /// Paints `ch` with its pen position at `x` and baseline at `baseline`.
    fn draw(&self, canvas: &mut Canvas, ch: char, x: f64, baseline: f64, color: Rgb);

    fn text_width(&self, text: &str) -> f64 {
        text.chars().map(|c| self.advance(c)).sum()
    }
}

impl fmt::Debug for dyn Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Face({})", self.name())
    }
}

/// Built-in bitmap face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitmapFace {
    pub scale: u32,
    pub bold: bool,
}

impl BitmapFace {
    pub const CELL: u32 = 8;

    pub fn new(scale: u32, bold: bool) -> Self {
        Self {
            scale: scale.max(1),
            bold,
        }
    }

    /// Largest scale whose cell height does not exceed `px`.
    pub fn for_pixel_size(px: f64, bold: bool) -> Self {
        Self::new((px / Self::CELL as f64).floor().max(1.0) as u32, bold)
    }

    fn bitmap(ch: char) -> [u8; 8] {
        BASIC_FONTS
            .get(ch)
            .or_else(|| LATIN_FONTS.get(ch))
            .unwrap_or_else(|| BASIC_FONTS.get('?').expect("ascii"))
    }
}

impl Face for BitmapFace {
    fn name(&self) -> String {
        format!("bitmap8x8{}@{}", if self.bold { "-bold" } else { "" }, self.scale)
    }

    fn metrics(&self) -> LineMetrics {
        let s = self.scale as f64;
        LineMetrics {
            ascent: 7.0 * s,
            descent: s,
            line_gap: 2.0 * s,
        }
    }

    fn advance(&self, _ch: char) -> f64 {
        (Self::CELL * self.scale) as f64
    }

    fn draw(&self, canvas: &mut Canvas, ch: char, x: f64, baseline: f64, color: Rgb) {
        if ch.is_whitespace() {
            return;
        }
        let s = self.scale as f64;
        let top = baseline - 7.0 * s;
        let rows = Self::bitmap(ch);
        let extra = if self.bold { self.scale.div_ceil(2).max(1) as f64 } else { 0.0 };
        for (r, bits) in rows.iter().enumerate() {
            for c in 0..8 {
                if bits >> c & 1 == 1 {
                    let px = x + c as f64 * s;
                    let py = top + r as f64 * s;
                    canvas.fill_rect(px, py, px + s + extra, py + s, color);
                }
            }
        }
    }
}

/// TrueType face rendered without anti-aliasing.
#[derive(Clone)]
pub struct TtfFace {
    font: FontArc,
    px: f32,
    name: Arc<str>,
}

impl TtfFace {
    pub fn load(path: &Path, px: f64) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let font = FontArc::try_from_vec(data)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("ttf");
        Ok(Self {
            font,
            px: px as f32,
            name: Arc::from(format!("{stem}@{px}")),
        })
    }

    pub fn with_size(&self, px: f64) -> Self {
        let stem = self.name.split('@').next().unwrap_or("ttf");
        Self {
            font: self.font.clone(),
            px: px as f32,
            name: Arc::from(format!("{stem}@{px}")),
        }
    }
}

impl Face for TtfFace {
    fn name(&self) -> String {
        self.name.to_string()
    }

    fn metrics(&self) -> LineMetrics {
        let f = self.font.as_scaled(PxScale::from(self.px));
        LineMetrics {
            ascent: f.ascent().ceil() as f64,
            descent: (-f.descent()).ceil() as f64,
            line_gap: f.line_gap().max(0.0).ceil() as f64,
        }
    }

    fn advance(&self, ch: char) -> f64 {
        let f = self.font.as_scaled(PxScale::from(self.px));
        f.h_advance(f.glyph_id(ch)) as f64
    }

    fn draw(&self, canvas: &mut Canvas, ch: char, x: f64, baseline: f64, color: Rgb) {
        let glyph = self
            .font
            .glyph_id(ch)
            .with_scale_and_position(PxScale::from(self.px), ab_glyph::point(x as f32, baseline as f32));
        if let Some(outlined) = self.font.outline_glyph(glyph) {
            let b = outlined.px_bounds();
            let (ox, oy) = (b.min.x as i64, b.min.y as i64);
            outlined.draw(|gx, gy, coverage| {
                if coverage >= 0.5 {
                    canvas.put(ox + gx as i64, oy + gy as i64, color);
                }
            });
        }
    }
}

/// TrueType files found in a directory, sorted by file name.
pub fn discover_ttf(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_ttf = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ttf"));
        if is_ttf {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
