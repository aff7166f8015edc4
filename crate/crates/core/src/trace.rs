//! Symbolic action traces: a chain of thought followed by one fenced block
//! of `pyautogui` calls whose coordinates are symbols resolved through a
//! separate coordinate map.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{serialize_number, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verb {
    Scroll,
    Typewrite,
    Hotkey,
    MoveTo,
    Click,
    MouseDown,
    MouseUp,
    DragTo,
    Type,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Scroll,
        Verb::Typewrite,
        Verb::Hotkey,
        Verb::MoveTo,
        Verb::Click,
        Verb::MouseDown,
        Verb::MouseUp,
        Verb::DragTo,
        Verb::Type,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Scroll => "scroll",
            Verb::Typewrite => "typewrite",
            Verb::Hotkey => "hotkey",
            Verb::MoveTo => "moveTo",
            Verb::Click => "click",
            Verb::MouseDown => "mouseDown",
            Verb::MouseUp => "mouseUp",
            Verb::DragTo => "dragTo",
            Verb::Type => "type",
        }
    }

    fn takes_point(self) -> bool {
        matches!(self, Verb::MoveTo | Verb::Click | Verb::MouseDown | Verb::MouseUp | Verb::DragTo)
    }

    fn point_required(self) -> bool {
        matches!(self, Verb::MoveTo | Verb::Click | Verb::DragTo)
    }

    fn allowed_named(self) -> &'static [&'static str] {
        match self {
            Verb::Scroll => &["clicks"],
            Verb::Typewrite | Verb::Type | Verb::Hotkey => &["interval"],
            Verb::MoveTo => &["x", "y", "duration"],
            Verb::DragTo => &["x", "y", "duration", "button"],
            Verb::Click => &["x", "y", "clicks", "interval", "button", "duration"],
            Verb::MouseDown | Verb::MouseUp => &["x", "y", "button"],
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::TraceParse(format!("unknown action `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Symbol(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
}

impl Value {
    fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Symbol(s) => Some(s),
            _ => None,
        }
    }

    fn is_number(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Float(_))
    }

    fn is_text(&self) -> bool {
        match self {
            Value::Str(_) => true,
            Value::List(items) => items.iter().all(|v| matches!(v, Value::Str(_))),
            _ => false,
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Symbol(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => f.write_str(&quote(s)),
            Value::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            Value::List(items) => {
                f.write_char('[')?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_char(']')
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionStatement {
    pub verb: Verb,
    pub args: Vec<Arg>,
}

impl ActionStatement {
    pub fn new(verb: Verb, args: Vec<Arg>) -> Result<Self> {
        let s = Self { verb, args };
        s.check_arity()?;
        Ok(s)
    }

    fn named(&self, name: &str) -> Option<&Value> {
        self.args.iter().find(|a| a.name.as_deref() == Some(name)).map(|a| &a.value)
    }

    fn positional(&self) -> impl Iterator<Item = &Value> {
        self.args.iter().filter(|a| a.name.is_none()).map(|a| &a.value)
    }

    /// The `(x, y)` argument pair, positional or named.
    pub fn point(&self) -> Option<(&Value, &Value)> {
        if !self.verb.takes_point() {
            return None;
        }
        let pos: Vec<&Value> = self.positional().collect();
        let x = self.named("x").or(pos.first().copied())?;
        let y = self.named("y").or(pos.get(1).copied())?;
        Some((x, y))
    }

    fn check_arity(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::TraceParse(format!("{}(): {msg}", self.verb)));
        let mut seen = HashSet::new();
        for a in &self.args {
            if let Some(n) = &a.name {
                if !self.verb.allowed_named().contains(&n.as_str()) {
                    return bad(format!("unexpected argument `{n}`"));
                }
                if !seen.insert(n.as_str()) {
                    return bad(format!("argument `{n}` given twice"));
                }
            }
        }
        if self.args.iter().skip_while(|a| a.name.is_none()).any(|a| a.name.is_none()) {
            return bad("positional argument after keyword argument".into());
        }
        let pos: Vec<&Value> = self.positional().collect();
        match self.verb {
            Verb::Scroll => {
                let amount = self.named("clicks").or(pos.first().copied());
                if !matches!(amount, Some(Value::Int(_))) || pos.len() + seen.len() != 1 {
                    return bad("expects one integer amount".into());
                }
            }
            Verb::Typewrite | Verb::Type => {
                if pos.len() != 1 || !pos[0].is_text() {
                    return bad("expects one string or list of strings".into());
                }
            }
            Verb::Hotkey => {
                if pos.is_empty() || !pos.iter().all(|v| matches!(v, Value::Str(_))) {
                    return bad("expects one or more key names".into());
                }
            }
            _ => {
                let has_x = !pos.is_empty() || seen.contains("x");
                let has_y = pos.len() >= 2 || seen.contains("y");
                if pos.len() > 2 || (!pos.is_empty() && seen.contains("x")) || (pos.len() == 2 && seen.contains("y")) {
                    return bad("coordinates given twice".into());
                }
                if has_x != has_y {
                    return bad("needs both x and y".into());
                }
                if self.verb.point_required() && !has_x {
                    return bad("needs x and y".into());
                }
            }
        }
        for (name, ok) in [
            ("clicks", self.named("clicks").is_none_or(|v| matches!(v, Value::Int(n) if *n >= 0) || self.verb == Verb::Scroll)),
            ("interval", self.named("interval").is_none_or(Value::is_number)),
            ("duration", self.named("duration").is_none_or(Value::is_number)),
            (
                "button",
                self.named("button")
                    .is_none_or(|v| matches!(v, Value::Str(s) if matches!(s.as_str(), "left" | "right" | "middle"))),
            ),
        ] {
            if !ok {
                return bad(format!("invalid `{name}`"));
            }
        }
        Ok(())
    }

    /// Coordinate symbols in argument order.
    pub fn symbols(&self) -> Vec<&str> {
        match self.point() {
            Some((x, y)) => [x, y].into_iter().filter_map(Value::as_symbol).collect(),
            None => Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match &a.name {
                Some(n) => format!("{n}={}", a.value),
                None => a.value.to_string(),
            })
            .collect();
        format!("pyautogui.{}({})", self.verb, args.join(", "))
    }
}

impl fmt::Display for ActionStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionClass {
    ZeroSet,
    OneSet,
    TwoSetCombined,
    NSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSpace {
    #[default]
    Pixels,
    Normalized,
}

/// Element reference: integer index for GUI elements, string id elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementRef {
    Index(u64),
    Name(String),
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::Index(i) => write!(f, "{i}"),
            ElementRef::Name(s) => f.write_str(s),
        }
    }
}

impl From<&str> for ElementRef {
    fn from(s: &str) -> Self {
        ElementRef::Name(s.to_string())
    }
}

impl From<u64> for ElementRef {
    fn from(i: u64) -> Self {
        ElementRef::Index(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionTrace {
    pub chain_of_thought: String,
    pub script: Vec<ActionStatement>,
    pub coordinate_map: IndexMap<String, f64>,
    pub used_elements: Vec<ElementRef>,
    pub action_type: String,
    pub coordinate_space: CoordinateSpace,
}

impl ActionTrace {
    /// Distinct coordinate symbols in first-use order.
    pub fn symbols(&self) -> Vec<String> {
        script_symbols(&self.script)
    }

    /// `<chain of thought>`, a blank line, then the fenced script.
    pub fn response(&self) -> String {
        let code: Vec<String> = self.script.iter().map(ActionStatement::render).collect();
        format!("{}\n\n```python\n{}\n```", self.chain_of_thought, code.join("\n"))
    }

    pub fn class(&self) -> Result<ActionClass> {
        classify_action(&self.script)
    }

    /// Resolved point of each statement that carries one.
    pub fn resolved_points(&self) -> Vec<Option<Point>> {
        self.script
            .iter()
            .map(|s| {
                let (x, y) = s.point()?;
                let get = |v: &Value| match v {
                    Value::Symbol(n) => self.coordinate_map.get(n).copied(),
                    Value::Int(i) => Some(*i as f64),
                    Value::Float(f) => Some(*f),
                    _ => None,
                };
                Some(Point::new(get(x)?, get(y)?))
            })
            .collect()
    }

    pub fn to_record(&self, prompt: &str) -> TraceRecord {
        TraceRecord {
            prompt: prompt.to_string(),
            response: self.response(),
            coordinate_map: self.coordinate_map.clone(),
            used_elements: self.used_elements.clone(),
            action_type: self.action_type.clone(),
            coordinate_space: self.coordinate_space,
        }
    }

    pub fn from_record(rec: &TraceRecord) -> Result<Self> {
        let (chain_of_thought, script) = parse_trace(&rec.response)?;
        Ok(Self {
            chain_of_thought,
            script,
            coordinate_map: rec.coordinate_map.clone(),
            used_elements: rec.used_elements.clone(),
            action_type: rec.action_type.clone(),
            coordinate_space: rec.coordinate_space,
        })
    }
}

fn script_symbols(script: &[ActionStatement]) -> Vec<String> {
    let mut seen = HashSet::new();
    script
        .iter()
        .flat_map(|s| s.symbols())
        .filter(|s| seen.insert(s.to_string()))
        .map(str::to_string)
        .collect()
}

pub fn serialize_coordinate_map<S: Serializer>(map: &IndexMap<String, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    struct Num(f64);
    impl Serialize for Num {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_number(self.0, s)
        }
    }
    let mut m = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        m.serialize_entry(k, &Num(*v))?;
    }
    m.end()
}

/// Serialized trace, one training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub prompt: String,
    pub response: String,
    #[serde(serialize_with = "serialize_coordinate_map")]
    pub coordinate_map: IndexMap<String, f64>,
    #[serde(default)]
    pub used_elements: Vec<ElementRef>,
    #[serde(rename = "action-type", alias = "action-types")]
    pub action_type: String,
    #[serde(default)]
    pub coordinate_space: CoordinateSpace,
}

struct ArgParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: &'a str,
}

impl ArgParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::TraceParse(format!("{msg} in `{}`", self.line))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        if !self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return None;
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            Some(q @ ('\'' | '"')) => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.peek() {
                        None => return Err(self.err("unterminated string")),
                        Some(c) if c == q => {
                            self.pos += 1;
                            break;
                        }
                        Some('\\') => {
                            self.pos += 1;
                            let c = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                            s.push(match c {
                                'n' => '\n',
                                't' => '\t',
                                c => c,
                            });
                            self.pos += 1;
                        }
                        Some(c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Ok(Value::Str(s))
            }
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.peek() == Some(']') {
                        self.pos += 1;
                        break;
                    }
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some(']') => {}
                        _ => return Err(self.err("malformed list")),
                    }
                }
                Ok(Value::List(items))
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = self.pos;
                self.pos += 1;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || c == '_')
                    || (self.peek().is_some_and(|c| c == '-' || c == '+')
                        && matches!(self.chars[self.pos - 1], 'e' | 'E'))
                {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().filter(|&&c| c != '_').collect();
                if let Ok(i) = text.parse::<i64>() {
                    Ok(Value::Int(i))
                } else {
                    text.parse::<f64>()
                        .ok()
                        .filter(|f| f.is_finite())
                        .map(Value::Float)
                        .ok_or_else(|| self.err("malformed number"))
                }
            }
            _ => match self.ident() {
                Some(id) if id == "True" => Ok(Value::Bool(true)),
                Some(id) if id == "False" => Ok(Value::Bool(false)),
                Some(id) if id == "None" => Err(self.err("`None` is not a supported value")),
                Some(id) => Ok(Value::Symbol(id)),
                None => Err(self.err("expected a value")),
            },
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(')') {
                return Ok(out);
            }
            let save = self.pos;
            let name = match self.ident() {
                Some(id) => {
                    self.skip_ws();
                    if self.peek() == Some('=') {
                        self.pos += 1;
                        Some(id)
                    } else {
                        self.pos = save;
                        None
                    }
                }
                None => None,
            };
            let value = self.value()?;
            out.push(Arg { name, value });
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {}
                _ => return Err(self.err("expected `,` or `)`")),
            }
        }
    }
}

/// Parses one line of the script.
pub fn parse_statement(line: &str) -> Result<ActionStatement> {
    let line = line.trim();
    if line.starts_with('#') {
        return Err(Error::TraceParse(format!("comments are not allowed: `{line}`")));
    }
    if line.starts_with("import ") || line.starts_with("from ") {
        return Err(Error::TraceParse(format!("only actions are allowed: `{line}`")));
    }
    let call = line
        .strip_prefix("pyautogui.")
        .ok_or_else(|| Error::TraceParse(format!("not a pyautogui action: `{line}`")))?;
    let open = call.find('(').ok_or_else(|| Error::TraceParse(format!("missing `(` in `{line}`")))?;
    let verb: Verb = call[..open].trim().parse()?;
    let mut p = ArgParser {
        chars: call[open + 1..].chars().collect(),
        pos: 0,
        line,
    };
    let args = p.args()?;
    p.pos += 1;
    p.skip_ws();
    match p.peek() {
        None => {}
        Some('#') => return Err(Error::TraceParse(format!("comments are not allowed: `{line}`"))),
        Some(_) => return Err(p.err("trailing text after call")),
    }
    ActionStatement::new(verb, args)
}

/// Splits a response into chain of thought and script. The text must hold
/// exactly one fenced block with nothing but whitespace after it.
pub fn parse_trace(text: &str) -> Result<(String, Vec<ActionStatement>)> {
    let fences: Vec<usize> = text.match_indices("```").map(|(i, _)| i).collect();
    if fences.len() != 2 {
        return Err(Error::TraceParse(format!(
            "expected exactly one fenced code block, found {} fence markers",
            fences.len()
        )));
    }
    let (open, close) = (fences[0], fences[1]);
    if !text[close + 3..].trim().is_empty() {
        return Err(Error::TraceParse("text after the code block".into()));
    }
    let chain = text[..open].trim().to_string();
    let body = &text[open + 3..close];
    let body = match body.find('\n') {
        Some(nl) if body[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &body[nl + 1..],
        _ => body,
    };
    let script: Vec<ActionStatement> = body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(parse_statement)
        .collect::<Result<_>>()?;
    if script.is_empty() {
        return Err(Error::TraceParse("code block has no actions".into()));
    }
    Ok((chain, script))
}

/// Class by the number of distinct coordinate symbols.
pub fn classify_action(script: &[ActionStatement]) -> Result<ActionClass> {
    match script_symbols(script).len() {
        0 => Ok(ActionClass::ZeroSet),
        2 => Ok(ActionClass::OneSet),
        4 => Ok(ActionClass::TwoSetCombined),
        n if n % 2 == 1 => Err(Error::TraceParse(format!("odd number of coordinate symbols ({n})"))),
        _ => Ok(ActionClass::NSet),
    }
}

/// Action-type tag naming the script's verbs: the verb itself for a single
/// statement, otherwise `combined:` with repeated runs written `Nx<verb>`.
pub fn action_type_tag(script: &[ActionStatement]) -> String {
    let mut runs: Vec<(Verb, usize)> = Vec::new();
    for s in script {
        match runs.last_mut() {
            Some((v, n)) if *v == s.verb => *n += 1,
            _ => runs.push((s.verb, 1)),
        }
    }
    let words: Vec<String> = runs
        .iter()
        .map(|&(v, n)| if n > 1 { format!("Nx{v}") } else { v.to_string() })
        .collect();
    match words.as_slice() {
        [one] if script.len() == 1 => one.clone(),
        [one] => format!("combined:{one}"),
        [init @ .., last] => format!("combined:{} and {last}", init.join(" ")),
        [] => String::new(),
    }
}

fn tags_agree(tag: &str, script: &[ActionStatement]) -> bool {
    if tag == action_type_tag(script) {
        return true;
    }
    // Also accept the expanded form without run folding.
    let verbs: Vec<&str> = script.iter().map(|s| s.verb.as_str()).collect();
    let expanded = match verbs.as_slice() {
        [one] => one.to_string(),
        [init @ .., last] => format!("combined:{} and {last}", init.join(" ")),
        [] => String::new(),
    };
    tag == expanded
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    SymbolMismatch { missing: Vec<String>, extra: Vec<String> },
    LiteralCoordinate { statement: String },
    UnknownElement { element: String },
    OutOfRange { symbol: String, value: f64 },
    CoordinateLeak { excerpt: String },
    ActionTypeMismatch { expected: String, found: String },
    OddSymbolCount { count: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::SymbolMismatch { .. } => "SymbolMismatch",
            Violation::LiteralCoordinate { .. } => "LiteralCoordinate",
            Violation::UnknownElement { .. } => "UnknownElement",
            Violation::OutOfRange { .. } => "OutOfRange",
            Violation::CoordinateLeak { .. } => "CoordinateLeak",
            Violation::ActionTypeMismatch { .. } => "ActionTypeMismatch",
            Violation::OddSymbolCount { .. } => "OddSymbolCount",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn leak_patterns() -> &'static [Regex] {
    static RE: OnceLock<Vec<Regex>> = OnceLock::new();
    RE.get_or_init(|| {
        let num = r"-?\d+(?:\.\d+)?";
        [
            format!(r"\(\s*{num}\s*,\s*{num}\s*\)"),
            format!(r"\[\s*{num}\s*,\s*{num}\s*\]"),
            format!(r"\b{num}\s*,\s*{num}\s*(?:px|pixels)\b"),
            format!(r"(?i)\b[xy]\d*\s*(?:=|:|is|at)\s*{num}"),
            format!(r"(?i)\b(?:x|y)[- ]?(?:coordinate|position)\s*(?:of\s*)?{num}"),
        ]
        .iter()
        .map(|p| Regex::new(p).expect("static regex"))
        .collect()
    })
}

/// First coordinate-like excerpt in `text`, if any.
pub fn find_coordinate_leak(text: &str) -> Option<String> {
    leak_patterns().iter().find_map(|re| re.find(text).map(|m| m.as_str().to_string()))
}

/// Checks the trace contracts and reports every violation found.
pub fn validate_trace(
    trace: &ActionTrace,
    elements: &[ElementRef],
    canvas_size: (f64, f64),
    space: CoordinateSpace,
) -> ValidationReport {
    let mut v = Vec::new();
    for s in &trace.script {
        if let Some((x, y)) = s.point() {
            if x.as_symbol().is_none() || y.as_symbol().is_none() {
                v.push(Violation::LiteralCoordinate { statement: s.render() });
            }
        }
    }
    let used: BTreeSet<String> = trace.symbols().into_iter().collect();
    let mapped: BTreeSet<String> = trace.coordinate_map.keys().cloned().collect();
    if used != mapped {
        v.push(Violation::SymbolMismatch {
            missing: used.difference(&mapped).cloned().collect(),
            extra: mapped.difference(&used).cloned().collect(),
        });
    }
    let known: HashSet<String> = elements.iter().map(ToString::to_string).collect();
    for e in &trace.used_elements {
        if !known.contains(&e.to_string()) {
            v.push(Violation::UnknownElement { element: e.to_string() });
        }
    }
    let (xmax, ymax) = match space {
        CoordinateSpace::Pixels => canvas_size,
        CoordinateSpace::Normalized => (1.0, 1.0),
    };
    let mut checked = HashSet::new();
    for s in &trace.script {
        let Some((x, y)) = s.point() else { continue };
        for (val, max) in [(x, xmax), (y, ymax)] {
            let Some(sym) = val.as_symbol() else { continue };
            if !checked.insert(sym.to_string()) {
                continue;
            }
            if let Some(&value) = trace.coordinate_map.get(sym) {
                if !value.is_finite() || value < 0.0 || value > max {
                    v.push(Violation::OutOfRange {
                        symbol: sym.to_string(),
                        value,
                    });
                }
            }
        }
    }
    if let Some(excerpt) = find_coordinate_leak(&trace.chain_of_thought) {
        v.push(Violation::CoordinateLeak { excerpt });
    }
    if used.len() % 2 == 1 {
        v.push(Violation::OddSymbolCount { count: used.len() });
    }
    if !tags_agree(&trace.action_type, &trace.script) {
        v.push(Violation::ActionTypeMismatch {
            expected: action_type_tag(&trace.script),
            found: trace.action_type.clone(),
        });
    }
    ValidationReport { violations: v }
}

/// Where the moving shape's anchor must go so that its feature point lands
/// on the target feature.
pub fn derived_translation(moving_feature: Point, moving_anchor: Point, target_feature: Point) -> Point {
    Point::new(
        target_feature.x + moving_anchor.x - moving_feature.x,
        target_feature.y + moving_anchor.y - moving_feature.y,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Click { clicks: Option<i64>, button: Option<String> },
    MoveTo,
    /// `moveTo` then `dragTo`.
    Drag { button: Option<String> },
    /// `mouseDown`, `moveTo` for each inner point, `mouseUp`.
    Stroke,
    ClickType { text: String, clicks: Option<i64> },
    Scroll(i64),
    Hotkey(Vec<String>),
    Typewrite(String),
}

fn sym(s: String) -> Value {
    Value::Symbol(s)
}

fn xy(i: usize) -> Vec<Arg> {
    vec![
        Arg {
            name: Some("x".into()),
            value: sym(format!("x{i}")),
        },
        Arg {
            name: Some("y".into()),
            value: sym(format!("y{i}")),
        },
    ]
}

fn named(name: &str, value: Value) -> Arg {
    Arg {
        name: Some(name.into()),
        value,
    }
}

/// Builds a trace whose coordinates are `points`, with fresh symbols
/// `x1, y1, x2, y2, …` in point order.
pub fn point_to_trace(points: &[Point], template: &Template, space: CoordinateSpace) -> Result<ActionTrace> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{what}, got {} points", points.len())))
        }
    };
    let st = |verb, args| ActionStatement::new(verb, args);
    let script = match template {
        Template::Click { clicks, button } => {
            need(points.len() == 1, "click needs one point")?;
            let mut args = xy(1);
            if let Some(c) = clicks {
                args.push(named("clicks", Value::Int(*c)));
            }
            if let Some(b) = button {
                args.push(named("button", Value::Str(b.clone())));
            }
            vec![st(Verb::Click, args)?]
        }
        Template::MoveTo => {
            need(points.len() == 1, "moveTo needs one point")?;
            vec![st(Verb::MoveTo, xy(1))?]
        }
        Template::Drag { button } => {
            need(points.len() == 2, "drag needs two points")?;
            let mut to = xy(2);
            if let Some(b) = button {
                to.push(named("button", Value::Str(b.clone())));
            }
            vec![st(Verb::MoveTo, xy(1))?, st(Verb::DragTo, to)?]
        }
        Template::Stroke => {
            need(points.len() >= 2, "stroke needs at least two points")?;
            let n = points.len();
            let mut s = vec![st(Verb::MouseDown, xy(1))?];
            for i in 2..n {
                s.push(st(Verb::MoveTo, xy(i))?);
            }
            s.push(st(Verb::MouseUp, xy(n))?);
            s
        }
        Template::ClickType { text, clicks } => {
            need(points.len() == 1, "click and type needs one point")?;
            let mut args = xy(1);
            if let Some(c) = clicks {
                args.push(named("clicks", Value::Int(*c)));
            }
            let t = Arg {
                name: None,
                value: Value::Str(text.clone()),
            };
            vec![st(Verb::Click, args)?, st(Verb::Type, vec![t])?]
        }
        Template::Scroll(amount) => {
            need(points.is_empty(), "scroll takes no points")?;
            vec![st(Verb::Scroll, vec![Arg { name: None, value: Value::Int(*amount) }])?]
        }
        Template::Hotkey(keys) => {
            need(points.is_empty(), "hotkey takes no points")?;
            let args = keys.iter().map(|k| Arg { name: None, value: Value::Str(k.clone()) }).collect();
            vec![st(Verb::Hotkey, args)?]
        }
        Template::Typewrite(text) => {
            need(points.is_empty(), "typewrite takes no points")?;
            vec![st(Verb::Typewrite, vec![Arg { name: None, value: Value::Str(text.clone()) }])?]
        }
    };
    let mut coordinate_map = IndexMap::new();
    for (i, p) in points.iter().enumerate() {
        coordinate_map.insert(format!("x{}", i + 1), p.x);
        coordinate_map.insert(format!("y{}", i + 1), p.y);
    }
    Ok(ActionTrace {
        chain_of_thought: String::new(),
        action_type: action_type_tag(&script),
        script,
        coordinate_map,
        used_elements: Vec::new(),
        coordinate_space: space,
    })
}
