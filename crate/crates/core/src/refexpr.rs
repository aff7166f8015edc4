//! Referring expressions for canvas elements.
//!
//! A base description is built from fill color, shape, outline color and a
//! coarse region. Colliding descriptions go through a fixed cascade: relative
//! size, outline style, a finer region grid, then a reading-order ordinal.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{redmean_distance, Point, Rgb};

const PALETTE_JSON: &str = include_str!("../data/palette.json");

/// SHA-256 of the shipped palette file.
pub const PALETTE_SHA256: &str = "a2810512ccf3cd72b60a2c9bc0945678fcc05abd5a8eac806da3a3eb4228b6e2";

/// Relative area gap required before size words are used.
pub const SIZE_GAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub name: String,
    pub rgb: Rgb,
}

#[derive(Debug, Clone)]
pub struct Palette {
    entries: Vec<PaletteEntry>,
}

impl Palette {
    pub const SIZE: usize = 44;

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<PaletteEntry> = serde_json::from_str(text)?;
        if entries.len() != Self::SIZE {
            return Err(Error::schema(
                "palette",
                format!("expected {} entries, found {}", Self::SIZE, entries.len()),
            ));
        }
        let mut names: Vec<&str> = entries.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::schema("palette", "duplicate color name"));
        }
        Ok(Self { entries })
    }

    /// The palette bundled with the crate.
    pub fn builtin() -> &'static Palette {
        static P: OnceLock<Palette> = OnceLock::new();
        P.get_or_init(|| Palette::from_json(PALETTE_JSON).expect("bundled palette is valid"))
    }

    pub fn entries(&self) -> &[PaletteEntry] {
        &self.entries
    }

    /// Closest entry by redmean distance; ties go to the earlier entry.
    pub fn nearest(&self, c: Rgb) -> &str {
        let mut best = &self.entries[0];
        let mut best_d = redmean_distance(c, best.rgb);
        for e in &self.entries[1..] {
            let d = redmean_distance(c, e.rgb);
            if d < best_d {
                best = e;
                best_d = d;
            }
        }
        &best.name
    }
}

pub fn palette_checksum() -> String {
    hex::encode(Sha256::digest(PALETTE_JSON.as_bytes()))
}

pub fn nearest_color_name(c: Rgb, palette: &Palette) -> &str {
    palette.nearest(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Coarse,
    Fine,
}

impl Grid {
    pub fn granularity(self) -> usize {
        match self {
            Grid::Coarse => 3,
            Grid::Fine => 5,
        }
    }

    /// All phrases in row-major cell order.
    pub fn phrases(self) -> Vec<String> {
        let g = self.granularity();
        (0..g * g).map(|i| self.phrase(i / g, i % g)).collect()
    }

    fn phrase(self, row: usize, col: usize) -> String {
        match self {
            Grid::Coarse => {
                let rows = ["upper", "center", "lower"];
                let cols = ["left", "center", "right"];
                let cell = match (row, col) {
                    (1, 1) => "center".to_string(),
                    _ => format!("{}-{}", rows[row], cols[col]),
                };
                format!("{cell} area of the canvas")
            }
            Grid::Fine => {
                let rows = ["top", "upper", "middle", "lower", "bottom"];
                let cols = ["far-left", "left", "middle", "right", "far-right"];
                let cell = match (row, col) {
                    (2, 2) => "central".to_string(),
                    _ => format!("{} {}", rows[row], cols[col]),
                };
                format!("{cell} area of the canvas")
            }
        }
    }
}

/// Cell index along one axis: `floor(v / extent * g)`, clamped.
fn cell_index(v: f64, extent: f64, g: usize) -> usize {
    let i = (v * g as f64 / extent).floor();
    if i.is_nan() || i < 0.0 {
        0
    } else {
        (i as usize).min(g - 1)
    }
}

pub fn region_phrase(center: Point, canvas_size: (f64, f64), grid: Grid) -> String {
    let g = grid.granularity();
    let col = cell_index(center.x, canvas_size.0, g);
    let row = cell_index(center.y, canvas_size.1, g);
    grid.phrase(row, col)
}

/// What the reference generator needs to know about one element.
#[derive(Debug, Clone, PartialEq)]
pub struct RefSubject {
    pub id: String,
    pub shape_name: String,
    pub fill: Rgb,
    pub outline: Rgb,
    pub dashed: bool,
    pub line_like: bool,
    pub has_outline: bool,
    pub area: f64,
    pub center: Point,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Qualifiers {
    size: Option<&'static str>,
    line_style: bool,
    fine: bool,
    ordinal: Option<String>,
}

fn render(s: &RefSubject, q: &Qualifiers, canvas: (f64, f64), palette: &Palette) -> String {
    let body = body(s, q, canvas, palette);
    let prefix = match (&q.ordinal, q.size) {
        (Some(o), Some(sz)) => Some(format!("{o} {}", sz.trim_start_matches("the "))),
        (Some(o), None) => Some(o.clone()),
        (None, Some(sz)) => Some(sz.to_string()),
        (None, None) => None,
    };
    match prefix {
        Some(p) => format!("{p} {body}"),
        None => body,
    }
}

fn body(s: &RefSubject, q: &Qualifiers, canvas: (f64, f64), palette: &Palette) -> String {
    let grid = if q.fine { Grid::Fine } else { Grid::Coarse };
    let region = region_phrase(s.center, canvas, grid);
    let style = if s.dashed { "dashed" } else { "solid" };
    let outline = palette.nearest(s.outline);
    if s.line_like {
        if q.line_style {
            format!("{outline} {style} {} in the {region}", s.shape_name)
        } else {
            format!("{outline} {} in the {region}", s.shape_name)
        }
    } else {
        let fill = palette.nearest(s.fill);
        if !s.has_outline {
            format!("{fill}-filled {} in the {region}", s.shape_name)
        } else if q.line_style {
            format!("{fill}-filled {} with {outline} {style} outline in the {region}", s.shape_name)
        } else {
            format!("{fill}-filled {} with {outline} outline in the {region}", s.shape_name)
        }
    }
}

pub fn base_reference(s: &RefSubject, canvas_size: (f64, f64), palette: &Palette) -> String {
    render(s, &Qualifiers::default(), canvas_size, palette)
}

fn ordinal_word(i: usize, n: usize) -> String {
    const WORDS: [&str; 10] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    ];
    if i == 0 {
        "the upper".into()
    } else if i + 1 == n {
        "the lower".into()
    } else if i < WORDS.len() {
        format!("the {}", WORDS[i])
    } else {
        format!("the {}th", i + 1)
    }
}

fn reading_order(subjects: &[RefSubject], members: &mut [usize]) {
    members.sort_by(|&a, &b| {
        let (pa, pb) = (subjects[a].center, subjects[b].center);
        pa.y.total_cmp(&pb.y)
            .then(pa.x.total_cmp(&pb.x))
            .then_with(|| subjects[a].id.cmp(&subjects[b].id))
    });
}

fn size_words(subjects: &[RefSubject], members: &[usize]) -> Vec<(usize, &'static str)> {
    let mut by_area: Vec<usize> = members.to_vec();
    by_area.sort_by(|&a, &b| subjects[a].area.total_cmp(&subjects[b].area));
    let area = |i: usize| subjects[by_area[i]].area;
    let gap = |small: f64, large: f64| large >= small * (1.0 + SIZE_GAP) && large > small;
    let n = by_area.len();
    let mut out = Vec::new();
    if n == 2 {
        if gap(area(0), area(1)) {
            out.push((by_area[1], "the larger"));
            out.push((by_area[0], "the smaller"));
        }
    } else if n >= 3 {
        if gap(area(n - 2), area(n - 1)) {
            out.push((by_area[n - 1], "the largest"));
        }
        if gap(area(0), area(1)) {
            out.push((by_area[0], "the smallest"));
        }
    }
    out
}

/// Produces one reference per subject, aligned with the input, all distinct.
///
/// The result does not depend on input order: work is done over subjects
/// sorted by id, and groups are visited in lexicographic order.
pub fn disambiguate(subjects: &[RefSubject], canvas_size: (f64, f64), palette: &Palette) -> Vec<String> {
    let n = subjects.len();
    let mut quals = vec![Qualifiers::default(); n];
    let render_all = |quals: &[Qualifiers]| -> Vec<String> {
        subjects
            .iter()
            .zip(quals)
            .map(|(s, q)| render(s, q, canvas_size, palette))
            .collect()
    };
    let groups_of = |refs: &[String]| -> Vec<Vec<usize>> {
        let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in refs.iter().enumerate() {
            map.entry(r.as_str()).or_default().push(i);
        }
        map.into_values()
            .filter(|g| g.len() > 1)
            .map(|mut g| {
                g.sort_by(|&a, &b| subjects[a].id.cmp(&subjects[b].id));
                g
            })
            .collect()
    };

    for _ in 0..4 * n.max(1) {
        let refs = render_all(&quals);
        let groups = groups_of(&refs);
        if groups.is_empty() {
            return refs;
        }
        for group in groups {
            apply_next_stage(subjects, &mut quals, &group, canvas_size, palette);
        }
    }

    // Fallback: ordinals over elements that share the same body text.
    for q in quals.iter_mut() {
        q.size = None;
        q.ordinal = None;
    }
    let mut by_body: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        by_body.entry(body(s, &quals[i], canvas_size, palette)).or_default().push(i);
    }
    for mut members in by_body.into_values().filter(|m| m.len() > 1) {
        reading_order(subjects, &mut members);
        let k = members.len();
        for (rank, &i) in members.iter().enumerate() {
            quals[i].ordinal = Some(ordinal_word(rank, k));
        }
    }
    render_all(&quals)
}

fn splits(
    subjects: &[RefSubject],
    group: &[usize],
    trial: &[Qualifiers],
    canvas: (f64, f64),
    palette: &Palette,
) -> bool {
    let first = render(&subjects[group[0]], &trial[0], canvas, palette);
    group
        .iter()
        .zip(trial)
        .skip(1)
        .any(|(&i, q)| render(&subjects[i], q, canvas, palette) != first)
}

fn apply_next_stage(
    subjects: &[RefSubject],
    quals: &mut [Qualifiers],
    group: &[usize],
    canvas: (f64, f64),
    palette: &Palette,
) {
    let current: Vec<Qualifiers> = group.iter().map(|&i| quals[i].clone()).collect();

    if current.iter().all(|q| q.size.is_none()) {
        let words = size_words(subjects, group);
        if !words.is_empty() {
            let mut trial = current.clone();
            for (i, w) in words {
                let pos = group.iter().position(|&g| g == i).expect("member");
                trial[pos].size = Some(w);
            }
            if splits(subjects, group, &trial, canvas, palette) {
                commit(quals, group, trial);
                return;
            }
        }
    }
    if current.iter().any(|q| !q.line_style) {
        let mut trial = current.clone();
        trial.iter_mut().for_each(|q| q.line_style = true);
        if splits(subjects, group, &trial, canvas, palette) {
            commit(quals, group, trial);
            return;
        }
    }
    if current.iter().any(|q| !q.fine) {
        let mut trial = current.clone();
        trial.iter_mut().for_each(|q| q.fine = true);
        if splits(subjects, group, &trial, canvas, palette) {
            commit(quals, group, trial);
            return;
        }
    }
    let mut ordered = group.to_vec();
    reading_order(subjects, &mut ordered);
    let k = ordered.len();
    for (rank, &i) in ordered.iter().enumerate() {
        quals[i].ordinal = Some(ordinal_word(rank, k));
    }
}

fn commit(quals: &mut [Qualifiers], group: &[usize], trial: Vec<Qualifiers>) {
    for (&i, q) in group.iter().zip(trial) {
        quals[i] = q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn subject(id: &str, area: f64, center: (f64, f64), dashed: bool) -> RefSubject {
        RefSubject {
            id: id.into(),
            shape_name: "circle".into(),
            fill: Rgb::new(255, 0, 0),
            outline: Rgb::new(0, 0, 0),
            dashed,
            line_like: false,
            has_outline: true,
            area,
            center: Point::new(center.0, center.1),
        }
    }

    const CANVAS: (f64, f64) = (1000.0, 1000.0);

    #[test]
    fn palette_is_pinned() {
        assert_eq!(palette_checksum(), PALETTE_SHA256);
        let p = Palette::builtin();
        assert_eq!(p.entries().len(), 44);
        let red = p.entries().iter().find(|e| e.name == "red").unwrap();
        assert_eq!(red.rgb, Rgb::new(255, 0, 0));
    }

    #[test]
    fn nearest_exact_and_near() {
        let p = Palette::builtin();
        assert_eq!(p.nearest(Rgb::new(255, 0, 0)), "red");
        assert_eq!(p.nearest(Rgb::new(254, 1, 0)), "red");
    }

    #[test]
    fn ties_go_to_earlier_entry() {
        let json = (0..44)
            .map(|i| {
                let rgb = match i {
                    0 => [10, 0, 0],
                    1 => [30, 0, 0],
                    _ => [255, 255, (i * 5) as u8],
                };
                format!(r#"{{"name":"c{i}","rgb":[{},{},{}]}}"#, rgb[0], rgb[1], rgb[2])
            })
            .collect::<Vec<_>>()
            .join(",");
        // Exact duplicates always tie.
        let dup = json.replace(r#""rgb":[30,0,0]"#, r#""rgb":[10,0,0]"#);
        let p = Palette::from_json(&format!("[{dup}]")).unwrap();
        assert_eq!(p.nearest(Rgb::new(10, 0, 0)), "c0");
    }

    #[test]
    fn rejects_bad_palettes() {
        assert!(Palette::from_json("[]").is_err());
        let twice = (0..44)
            .map(|_| r#"{"name":"same","rgb":[0,0,0]}"#)
            .collect::<Vec<_>>()
            .join(",");
        assert!(Palette::from_json(&format!("[{twice}]")).is_err());
    }

    #[test]
    fn region_phrases() {
        let size = (1200.0, 900.0);
        assert_eq!(
            region_phrase(Point::new(120.0, 90.0), size, Grid::Coarse),
            "upper-left area of the canvas"
        );
        assert_eq!(
            region_phrase(Point::new(600.0, 450.0), size, Grid::Coarse),
            "center area of the canvas"
        );
        assert_eq!(
            region_phrase(Point::new(1000.0, 450.0), size, Grid::Coarse),
            "center-right area of the canvas"
        );
        // On the first boundary, floor picks cell 1.
        assert_eq!(
            region_phrase(Point::new(400.0, 300.0), size, Grid::Coarse),
            "center area of the canvas"
        );
        assert_eq!(
            region_phrase(Point::new(1200.0, 900.0), size, Grid::Coarse),
            "lower-right area of the canvas"
        );
        let coarse = Grid::Coarse.phrases();
        let fine = Grid::Fine.phrases();
        assert_eq!(coarse.len(), 9);
        assert_eq!(fine.len(), 25);
        let mut all: Vec<&String> = coarse.iter().chain(&fine).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 34);
    }

    #[test]
    fn base_reference_matches_template() {
        let p = Palette::builtin();
        let s = RefSubject {
            id: "shape_0001".into(),
            shape_name: "rounded square".into(),
            fill: Rgb::new(64, 64, 64),
            outline: Rgb::new(210, 180, 140),
            dashed: false,
            line_like: false,
            has_outline: true,
            area: 100.0,
            center: Point::new(672.0, 608.0),
        };
        assert_eq!(
            base_reference(&s, (1000.0, 1000.0), p),
            "dark gray-filled rounded square with tan outline in the center-right area of the canvas"
        );
        let line = RefSubject {
            line_like: true,
            shape_name: "straight line".into(),
            ..s.clone()
        };
        assert_eq!(
            base_reference(&line, (1000.0, 1000.0), p),
            "tan straight line in the center-right area of the canvas"
        );
        assert_eq!(base_reference(&s, CANVAS, p), base_reference(&s.clone(), CANVAS, p));
    }

    #[test]
    fn singleton_unchanged() {
        let p = Palette::builtin();
        let s = subject("a", 100.0, (100.0, 100.0), false);
        assert_eq!(disambiguate(std::slice::from_ref(&s), CANVAS, p), vec![base_reference(&s, CANVAS, p)]);
    }

    #[test]
    fn pair_gets_comparatives() {
        let p = Palette::builtin();
        let subs = [subject("a", 4000.0, (100.0, 100.0), false), subject("b", 1000.0, (120.0, 120.0), false)];
        let refs = disambiguate(&subs, CANVAS, p);
        assert!(refs[0].starts_with("the larger "), "{}", refs[0]);
        assert!(refs[1].starts_with("the smaller "), "{}", refs[1]);
    }

    #[test]
    fn cascade_resolves_dashed_then_ordinal() {
        // Three identical circles in one fine cell, one dashed.
        let p = Palette::builtin();
        let subs = [
            subject("a", 1000.0, (100.0, 100.0), false),
            subject("b", 1000.0, (110.0, 105.0), true),
            subject("c", 1000.0, (120.0, 110.0), false),
        ];
        let refs = disambiguate(&subs, CANVAS, p);
        // Oracle: stage 2 separates the dashed element; the two solid ones
        // share a fine cell and fall through to reading-order ordinals.
        assert_eq!(refs[1], "red-filled circle with black dashed outline in the upper-left area of the canvas");
        assert_eq!(refs[0], "the upper red-filled circle with black solid outline in the upper-left area of the canvas");
        assert_eq!(refs[2], "the lower red-filled circle with black solid outline in the upper-left area of the canvas");
    }

    #[test]
    fn groups_of_three_use_superlatives() {
        let p = Palette::builtin();
        let subs = [
            subject("a", 9000.0, (100.0, 100.0), false),
            subject("b", 3000.0, (150.0, 100.0), false),
            subject("c", 1000.0, (200.0, 100.0), false),
        ];
        let refs = disambiguate(&subs, CANVAS, p);
        assert!(refs[0].starts_with("the largest "));
        assert!(refs[2].starts_with("the smallest "));
        assert!(!refs[1].starts_with("the "));
    }

    fn arb_subject() -> impl Strategy<Value = (u8, u8, bool, u32, (u16, u16))> {
        (0u8..3, 0u8..2, any::<bool>(), 1u32..4, (0u16..1000, 0u16..1000))
    }

    proptest! {
        #[test]
        fn always_unique_and_order_independent(specs in prop::collection::vec(arb_subject(), 1..10)) {
            let p = Palette::builtin();
            let shapes = ["circle", "square", "star"];
            let subs: Vec<RefSubject> = specs.iter().enumerate().map(|(i, (s, c, dashed, a, (x, y)))| RefSubject {
                id: format!("shape_{:04}", i + 1),
                shape_name: shapes[*s as usize].into(),
                fill: if *c == 0 { Rgb::new(255, 0, 0) } else { Rgb::new(0, 0, 255) },
                outline: Rgb::BLACK,
                dashed: *dashed,
                line_like: false,
                has_outline: true,
                area: *a as f64 * 1000.0,
                center: Point::new(*x as f64 / 10.0, *y as f64 / 10.0),
            }).collect();
            let refs = disambiguate(&subs, (100.0, 100.0), p);
            let mut sorted = refs.clone();
            sorted.sort();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), refs.len());

            let mut rev: Vec<RefSubject> = subs.clone();
            rev.reverse();
            let mut refs_rev = disambiguate(&rev, (100.0, 100.0), p);
            refs_rev.reverse();
            prop_assert_eq!(refs, refs_rev);
        }

        #[test]
        fn nearest_matches_brute_force(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
            let p = Palette::builtin();
            let c = Rgb::new(r, g, b);
            let got = p.entries().iter().find(|e| e.name == p.nearest(c)).unwrap();
            let d = redmean_distance(c, got.rgb);
            for e in p.entries() {
                prop_assert!(d <= redmean_distance(c, e.rgb));
            }
        }
    }
}
