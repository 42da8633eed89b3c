//! Construction rules: which frames go into which output files, and which
//! fills apply for which feature values.
//!
//! ```text
//! output menu.rc root MainMenu markers "//"
//! fill menus with Popup(title="&File")
//! when View = 1 : fill menus with ViewMenu()
//! when Zoom = 1 : fill menus/entries with Item(label="Zoom", command="ID_ZOOM")
//! when StatusBar = 0 : fill menus/entries with text "  // no status bar\n"
//! ```
//!
//! A fill target is a slash path whose last step names the slot to fill.
//! Earlier steps select an instance: `slot` is the last instance placed in
//! that slot so far, `slot[i]` the i-th.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::config::DecisionValue;
use crate::frame::{FrameError, FrameLibrary, MarkerConfig};
use crate::model::FeatureDiagram;

/// Top-level names the generator writes itself.
pub const RESERVED_OUTPUTS: [&str; 4] = [
    "MANIFEST",
    "specification.xml",
    "FILLS.json",
    "OVERLAY.json",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rules line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rules line {line}: output path `{path}` is used twice")]
    DuplicateOutput { line: usize, path: String },
    #[error("rules line {line}: {message}")]
    Binding { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard {
    pub feature: String,
    pub value: DecisionValue,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub slot: String,
    /// `None` selects the last instance in the slot.
    pub index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotPath {
    pub steps: Vec<Step>,
    pub slot: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Effect {
    Text(String),
    Frame {
        name: String,
        params: Vec<(String, String)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub guard: Option<Guard>,
    pub target: SlotPath,
    pub effect: Effect,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputRule {
    pub path: String,
    pub root: String,
    pub markers: MarkerConfig,
    pub actions: Vec<Action>,
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub outputs: Vec<OutputRule>,
}

struct Cursor<'a> {
    s: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> RuleError {
        RuleError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.s = self.s.trim_start();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        match self.s.strip_prefix(tok) {
            Some(rest) => {
                self.s = rest;
                true
            }
            None => false,
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), RuleError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}` at `{}`", self.s.trim())))
        }
    }

    fn word(&mut self) -> Result<&'a str, RuleError> {
        self.skip_ws();
        let end = self
            .s
            .find(|c: char| c.is_whitespace())
            .unwrap_or(self.s.len());
        if end == 0 {
            return Err(self.err("unexpected end of line"));
        }
        let (w, rest) = self.s.split_at(end);
        self.s = rest;
        Ok(w)
    }

    fn ident(&mut self) -> Result<&'a str, RuleError> {
        self.skip_ws();
        let end = self
            .s
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.s.len());
        let id = &self.s[..end];
        if !id.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            return Err(self.err(format!("expected a name at `{}`", self.s.trim())));
        }
        self.s = &self.s[end..];
        Ok(id)
    }

    fn string(&mut self) -> Result<String, RuleError> {
        self.skip_ws();
        let mut chars = self.s.char_indices();
        if !matches!(chars.next(), Some((_, '"'))) {
            return Err(self.err(format!("expected a quoted string at `{}`", self.s.trim())));
        }
        let mut out = String::new();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.s = &self.s[i + 1..];
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    other => {
                        return Err(
                            self.err(format!("bad escape `\\{}`", other.map_or(' ', |o| o.1)))
                        )
                    }
                },
                c => out.push(c),
            }
        }
        Err(self.err("unterminated string"))
    }

    fn done(&mut self) -> Result<(), RuleError> {
        self.skip_ws();
        if self.s.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected `{}`", self.s)))
        }
    }
}

pub(super) fn check_output_path(path: &str) -> Result<(), String> {
    if path.is_empty() || path.starts_with('/') || path.contains('\\') || path.contains(':') {
        return Err(format!("output path `{path}` must be relative"));
    }
    for part in path.split('/') {
        if part.is_empty() || part == "." || part == ".." {
            return Err(format!(
                "output path `{path}` has an empty, `.` or `..` component"
            ));
        }
    }
    if RESERVED_OUTPUTS.contains(&path) {
        return Err(format!("output path `{path}` is reserved"));
    }
    Ok(())
}

fn slot_path(c: &mut Cursor<'_>) -> Result<SlotPath, RuleError> {
    let raw = c.word()?;
    let err = |m: String| RuleError::Syntax {
        line: c.line,
        message: m,
    };
    let mut steps = Vec::new();
    let parts: Vec<&str> = raw.split('/').collect();
    for (i, part) in parts.iter().enumerate() {
        let (name, index) = match part.split_once('[') {
            Some((name, idx)) => {
                let idx = idx
                    .strip_suffix(']')
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("bad index in `{part}`")))?;
                (name, Some(idx))
            }
            None => (*part, None),
        };
        let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(err(format!("bad slot name `{name}` in `{raw}`")));
        }
        if i + 1 == parts.len() {
            if index.is_some() {
                return Err(err(format!("the slot to fill takes no index: `{raw}`")));
            }
            return Ok(SlotPath {
                steps,
                slot: name.to_string(),
            });
        }
        steps.push(Step {
            slot: name.to_string(),
            index,
        });
    }
    unreachable!("split yields at least one part")
}

fn action(c: &mut Cursor<'_>) -> Result<Action, RuleError> {
    let guard = if c.eat("when ") {
        let feature = c.ident()?.to_string();
        c.expect("=")?;
        let value = match c.word()? {
            "1" => DecisionValue::Selected,
            "0" => DecisionValue::Deselected,
            other => return Err(c.err(format!("guard value must be 0 or 1, found `{other}`"))),
        };
        c.expect(":")?;
        Some(Guard { feature, value })
    } else {
        None
    };
    c.expect("fill")?;
    let target = slot_path(c)?;
    c.expect("with")?;
    let effect = if c.eat("text ") {
        Effect::Text(c.string()?)
    } else {
        let name = c.ident()?.to_string();
        c.expect("(")?;
        let mut params = Vec::new();
        if !c.eat(")") {
            loop {
                let p = c.ident()?.to_string();
                c.expect("=")?;
                let v = c.string()?;
                if params.iter().any(|(q, _)| *q == p) {
                    return Err(c.err(format!("parameter `{p}` given twice")));
                }
                params.push((p, v));
                if c.eat(")") {
                    break;
                }
                c.expect(",")?;
            }
        }
        Effect::Frame { name, params }
    };
    c.done()?;
    Ok(Action {
        guard,
        target,
        effect,
        line: c.line,
    })
}

/// Parses a `.rules` file. Names are resolved later by [`RuleSet::bind`].
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rules = RuleSet::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut c = Cursor {
            s: line,
            line: i + 1,
        };
        if c.eat("output ") {
            let path = c.word()?.to_string();
            check_output_path(&path).map_err(|m| c.err(m))?;
            if !seen.insert(path.clone()) {
                return Err(RuleError::DuplicateOutput { line: i + 1, path });
            }
            c.expect("root")?;
            let root = c.ident()?.to_string();
            c.expect("markers")?;
            let prefix = c.string()?;
            c.skip_ws();
            let suffix = if c.s.starts_with('"') {
                c.string()?
            } else {
                String::new()
            };
            c.done()?;
            let markers = MarkerConfig::new(prefix, suffix).map_err(|e| c.err(e.to_string()))?;
            rules.outputs.push(OutputRule {
                path,
                root,
                markers,
                actions: Vec::new(),
                line: i + 1,
            });
        } else {
            let a = action(&mut c)?;
            match rules.outputs.last_mut() {
                Some(out) => out.actions.push(a),
                None => return Err(c.err("fill before the first `output` line")),
            }
        }
    }
    Ok(rules)
}

impl RuleSet {
    /// Resolves every feature, frame and slot name against `d` and `lib`.
    ///
    /// Instance-selecting steps are checked against the frames that earlier
    /// fills of the same output can place there, whatever their guards.
    pub fn bind(&self, d: &FeatureDiagram, lib: &FrameLibrary) -> Result<(), RuleError> {
        for out in &self.outputs {
            let fail = |line: usize, message: String| RuleError::Binding { line, message };
            if lib.get(&out.root).is_none() {
                return Err(fail(out.line, format!("unknown root frame `{}`", out.root)));
            }
            // frames that may sit at each slot-name chain
            let mut placed: BTreeMap<Vec<String>, BTreeSet<String>> = BTreeMap::new();
            placed.insert(Vec::new(), BTreeSet::from([out.root.clone()]));
            for a in &out.actions {
                if let Some(g) = &a.guard {
                    if d.id(&g.feature).is_none() {
                        return Err(fail(a.line, format!("unknown feature `{}`", g.feature)));
                    }
                }
                let mut chain: Vec<String> = Vec::new();
                for step in &a.target.steps {
                    let here = &placed[&chain];
                    if !here
                        .iter()
                        .any(|f| lib.get(f).is_some_and(|f| f.has_slot(&step.slot)))
                    {
                        return Err(fail(
                            a.line,
                            format!("no frame at this point has a slot `{}`", step.slot),
                        ));
                    }
                    chain.push(step.slot.clone());
                    if !placed.contains_key(&chain) {
                        return Err(fail(
                            a.line,
                            format!(
                                "no earlier fill places an instance in `{}`",
                                chain.join("/")
                            ),
                        ));
                    }
                }
                let here = &placed[&chain];
                if !here
                    .iter()
                    .any(|f| lib.get(f).is_some_and(|f| f.has_slot(&a.target.slot)))
                {
                    return Err(fail(
                        a.line,
                        format!("no frame at this point has a slot `{}`", a.target.slot),
                    ));
                }
                if let Effect::Frame { name, params } = &a.effect {
                    let frame = lib
                        .get(name)
                        .ok_or_else(|| fail(a.line, format!("unknown frame `{name}`")))?;
                    if let Some((p, _)) = params.iter().find(|(p, _)| !frame.has_slot(p)) {
                        return Err(fail(a.line, format!("frame `{name}` has no slot `{p}`")));
                    }
                    chain.push(a.target.slot.clone());
                    placed.entry(chain).or_default().insert(name.clone());
                }
            }
        }
        Ok(())
    }

    pub fn output(&self, path: &str) -> Option<&OutputRule> {
        self.outputs.iter().find(|o| o.path == path)
    }
}

impl From<FrameError> for RuleError {
    fn from(e: FrameError) -> Self {
        RuleError::Binding {
            line: 0,
            message: e.to_string(),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for SlotPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            match s.index {
                Some(i) => write!(f, "{}[{i}]/", s.slot)?,
                None => write!(f, "{}/", s.slot)?,
            }
        }
        write!(f, "{}", self.slot)
    }
}

/// Canonical rule text; parses back to an equal rule set.
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for out in &self.outputs {
            write!(
                f,
                "output {} root {} markers {}",
                out.path,
                out.root,
                quote(out.markers.prefix())
            )?;
            if !out.markers.suffix().is_empty() {
                write!(f, " {}", quote(out.markers.suffix()))?;
            }
            writeln!(f)?;
            for a in &out.actions {
                if let Some(g) = &a.guard {
                    write!(f, "when {} = {} : ", g.feature, u8::from(g.value.as_bool()))?;
                }
                write!(f, "fill {} with ", a.target)?;
                match &a.effect {
                    Effect::Text(t) => writeln!(f, "text {}", quote(t))?,
                    Effect::Frame { name, params } => {
                        let ps: Vec<String> = params
                            .iter()
                            .map(|(p, v)| format!("{p}={}", quote(v)))
                            .collect();
                        writeln!(f, "{name}({})", ps.join(", "))?;
                    }
                }
            }
        }
        Ok(())
    }
}
