//! Frames: text templates with named slots, filled by literal text or by
//! nested frame instances.
//!
//! Expanded output carries a begin/end marker line around every instance so
//! the instance tree, including hand edits to literal slot content, can be
//! read back with [`extract`].

mod markers;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use markers::{expand, extract, MarkerConfig};
pub use parse::parse_frames;

/// Words reserved for marker lines; they may not occur in frame bodies or
/// literal fills.
pub const RESERVED: [&str; 2] = ["BEGIN-FRAME", "END-FRAME"];

/// Placeholders for nested instances while a frame's content is matched.
const SENTINEL_BASE: u32 = 0xF0000;
const SENTINEL_END: u32 = 0xFFFFD;

fn is_sentinel(c: char) -> bool {
    (SENTINEL_BASE..=SENTINEL_END).contains(&(c as u32))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame source line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("frame `{0}` defined twice")]
    DuplicateFrame(String),
    #[error("frame `{frame}`: slot `{slot}` is not declared")]
    UndeclaredSlot { frame: String, slot: String },
    #[error("frame `{frame}`: slot `{slot}` declared twice")]
    DuplicateSlot { frame: String, slot: String },
    #[error("frame `{frame}`: slot `{slot}` is declared but never used")]
    UnusedSlot { frame: String, slot: String },
    #[error("frame `{frame}`: slot `{slot}` is referenced more than once")]
    RepeatedSlot { frame: String, slot: String },
    #[error("{context} contains the reserved marker word `{word}`")]
    ReservedWord { context: String, word: &'static str },
    #[error("{0} contains a character from the reserved private-use range")]
    ReservedChar(String),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("frame `{frame}` has no slot `{slot}`")]
    UnknownSlot { frame: String, slot: String },
    #[error("filling `{slot}` would make instance {instance} contain itself")]
    Cycle { instance: usize, slot: String },
    #[error("instance {0} is already placed in a slot")]
    AlreadyPlaced(usize),
    #[error("fills of slot `{slot}` at {path} cannot be told apart from neighbouring frame text")]
    Ambiguous { path: String, slot: String },
    #[error("invalid marker configuration: {0}")]
    MarkerConfig(String),
    #[error("line {line}: {message}")]
    Marker { line: usize, message: String },
    #[error("text at {path} does not match frame `{frame}`")]
    ContentMismatch { path: String, frame: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Part {
    Text(String),
    Slot(String),
}

#[derive(Clone, Debug)]
pub struct Frame {
    name: String,
    slots: Vec<String>,
    parts: Vec<Part>,
    /// Compiled body pattern used when reading expanded text back.
    matcher: OnceLock<Regex>,
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.slots == other.slots && self.parts == other.parts
    }
}

impl Eq for Frame {}

impl Frame {
    /// Checks the frame invariants: every referenced slot declared, every
    /// declared slot referenced exactly once, no reserved text.
    pub fn new(
        name: impl Into<String>,
        slots: Vec<String>,
        parts: Vec<Part>,
    ) -> Result<Self, FrameError> {
        let name = name.into();
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(FrameError::DuplicateSlot {
                    frame: name,
                    slot: s.clone(),
                });
            }
        }
        let mut seen: Vec<&str> = Vec::new();
        let mut merged: Vec<Part> = Vec::new();
        for p in &parts {
            match p {
                Part::Slot(s) => {
                    if !slots.contains(s) {
                        return Err(FrameError::UndeclaredSlot {
                            frame: name,
                            slot: s.clone(),
                        });
                    }
                    if seen.contains(&s.as_str()) {
                        return Err(FrameError::RepeatedSlot {
                            frame: name,
                            slot: s.clone(),
                        });
                    }
                    seen.push(s);
                    merged.push(p.clone());
                }
                Part::Text(t) => {
                    check_text(t, || format!("body of frame `{name}`"))?;
                    match merged.last_mut() {
                        Some(Part::Text(prev)) => prev.push_str(t),
                        _ if t.is_empty() => {}
                        _ => merged.push(p.clone()),
                    }
                }
            }
        }
        if let Some(s) = slots.iter().find(|s| !seen.contains(&s.as_str())) {
            return Err(FrameError::UnusedSlot {
                frame: name,
                slot: s.clone(),
            });
        }
        Ok(Frame {
            name,
            slots,
            parts: merged,
            matcher: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Declared slots in declaration order.
    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn has_slot(&self, slot: &str) -> bool {
        self.slots.iter().any(|s| s == slot)
    }

    fn slot_index(&self, slot: &str) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }
}

fn check_text(t: &str, context: impl Fn() -> String) -> Result<(), FrameError> {
    if let Some(word) = RESERVED.iter().find(|w| t.contains(*w)) {
        return Err(FrameError::ReservedWord {
            context: context(),
            word,
        });
    }
    if t.chars().any(is_sentinel) {
        return Err(FrameError::ReservedChar(context()));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameLibrary {
    frames: Vec<Frame>,
}

impl FrameLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, frame: Frame) -> Result<(), FrameError> {
        if self.get(&frame.name).is_some() {
            return Err(FrameError::DuplicateFrame(frame.name));
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.name == name)
    }

    fn frame(&self, name: &str) -> Result<&Frame, FrameError> {
        self.get(name)
            .ok_or_else(|| FrameError::UnknownFrame(name.to_string()))
    }

    /// Frames in definition order.
    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    Text(String),
    Instance(FrameInstance),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInstance {
    pub frame: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fills: BTreeMap<String, Vec<Fill>>,
}

impl FrameInstance {
    pub fn new(frame: impl Into<String>) -> Self {
        FrameInstance {
            frame: frame.into(),
            fills: BTreeMap::new(),
        }
    }

    pub fn with_text(mut self, slot: &str, text: impl Into<String>) -> Self {
        self.push(slot, Fill::Text(text.into()));
        self
    }

    pub fn with_instance(mut self, slot: &str, inst: FrameInstance) -> Self {
        self.push(slot, Fill::Instance(inst));
        self
    }

    pub fn push(&mut self, slot: &str, fill: Fill) {
        self.fills.entry(slot.to_string()).or_default().push(fill);
    }

    /// Same content with adjacent texts merged and empty texts and slots dropped.
    pub fn normalized(&self) -> FrameInstance {
        let mut fills = BTreeMap::new();
        for (slot, items) in &self.fills {
            let mut out: Vec<Fill> = Vec::new();
            for item in items {
                match item {
                    Fill::Text(t) if t.is_empty() => {}
                    Fill::Text(t) => match out.last_mut() {
                        Some(Fill::Text(prev)) => prev.push_str(t),
                        _ => out.push(Fill::Text(t.clone())),
                    },
                    Fill::Instance(i) => out.push(Fill::Instance(i.normalized())),
                }
            }
            if !out.is_empty() {
                fills.insert(slot.clone(), out);
            }
        }
        FrameInstance {
            frame: self.frame.clone(),
            fills,
        }
    }

    /// Instances nested in `slot`, in order.
    pub fn children(&self, slot: &str) -> impl Iterator<Item = &FrameInstance> {
        self.fills
            .get(slot)
            .into_iter()
            .flatten()
            .filter_map(|f| match f {
                Fill::Instance(i) => Some(i),
                Fill::Text(_) => None,
            })
    }

    /// The instance at a marker path such as `/items[1]/label[0]`.
    pub fn at(&self, path: &str) -> Option<&FrameInstance> {
        let mut cur = self;
        for (slot, k) in parse_path(path)? {
            cur = cur.children(&slot).nth(k)?;
        }
        Some(cur)
    }

    pub fn at_mut(&mut self, path: &str) -> Option<&mut FrameInstance> {
        let mut cur = self;
        for (slot, k) in parse_path(path)? {
            cur = cur
                .fills
                .get_mut(&slot)?
                .iter_mut()
                .filter_map(|f| match f {
                    Fill::Instance(i) => Some(i),
                    Fill::Text(_) => None,
                })
                .nth(k)?;
        }
        Some(cur)
    }

    /// Every instance with its marker path, depth first.
    pub fn walk(&self) -> Vec<(String, &FrameInstance)> {
        fn go<'a>(i: &'a FrameInstance, path: String, out: &mut Vec<(String, &'a FrameInstance)>) {
            out.push((path.clone(), i));
            for slot in i.fills.keys() {
                for (k, c) in i.children(slot).enumerate() {
                    go(c, child_path(&path, slot, k), out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, "/".to_string(), &mut out);
        out
    }

    /// Concatenated literal text per slot, keyed by `path` and slot name.
    pub fn literal_fills(&self) -> BTreeMap<(String, String), String> {
        let mut out = BTreeMap::new();
        for (path, i) in self.walk() {
            for (slot, items) in &i.fills {
                let text: String = items
                    .iter()
                    .filter_map(|f| match f {
                        Fill::Text(t) => Some(t.as_str()),
                        Fill::Instance(_) => None,
                    })
                    .collect();
                if !text.is_empty() {
                    out.insert((path.clone(), slot.clone()), text);
                }
            }
        }
        out
    }
}

pub fn child_path(parent: &str, slot: &str, k: usize) -> String {
    if parent == "/" {
        format!("/{slot}[{k}]")
    } else {
        format!("{parent}/{slot}[{k}]")
    }
}

/// Splits `/a[0]/b[2]` into `[("a", 0), ("b", 2)]`; `/` is the root.
pub fn parse_path(path: &str) -> Option<Vec<(String, usize)>> {
    let rest = path.strip_prefix('/')?;
    if rest.is_empty() {
        return Some(Vec::new());
    }
    rest.split('/')
        .map(|step| {
            let (slot, idx) = step.strip_suffix(']')?.split_once('[')?;
            let ok = slot.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && slot.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            let k: usize = idx.parse().ok()?;
            (ok && k.to_string() == idx).then(|| (slot.to_string(), k))
        })
        .collect()
}

/// Validates `fills` against frame `frame` and returns the normalized instance.
pub fn instantiate(
    lib: &FrameLibrary,
    frame: &str,
    fills: BTreeMap<String, Vec<Fill>>,
) -> Result<FrameInstance, FrameError> {
    let inst = FrameInstance {
        frame: frame.to_string(),
        fills,
    }
    .normalized();
    validate_instance(lib, &inst)?;
    Ok(inst)
}

/// Checks a whole instance tree: frames and slots exist, literal text is
/// free of reserved words, and every frame's fills can be read back
/// unambiguously from its expansion.
pub fn validate_instance(lib: &FrameLibrary, inst: &FrameInstance) -> Result<(), FrameError> {
    for (path, i) in inst.walk() {
        let frame = lib.frame(&i.frame)?;
        for (slot, items) in &i.fills {
            if !frame.has_slot(slot) {
                return Err(FrameError::UnknownSlot {
                    frame: frame.name.clone(),
                    slot: slot.clone(),
                });
            }
            for item in items {
                if let Fill::Text(t) = item {
                    check_text(t, || format!("text in slot `{slot}` at {path}"))?;
                }
            }
        }
        markers::check_unambiguous(frame, i, &path)?;
    }
    Ok(())
}

/// Instances referenced by handle, for building hierarchies step by step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceId(usize);

#[derive(Debug, Clone)]
pub enum Item {
    Text(String),
    Instance(InstanceId),
}

/// Builder in which fills point at other instances by handle; rejects fills
/// that would make an instance its own descendant or place one twice.
#[derive(Debug)]
pub struct InstanceGraph<'l> {
    lib: &'l FrameLibrary,
    nodes: Vec<(String, Vec<(String, Item)>)>,
    parent: Vec<Option<InstanceId>>,
}

impl<'l> InstanceGraph<'l> {
    pub fn new(lib: &'l FrameLibrary) -> Self {
        InstanceGraph {
            lib,
            nodes: Vec::new(),
            parent: Vec::new(),
        }
    }

    pub fn create(&mut self, frame: &str) -> Result<InstanceId, FrameError> {
        self.lib.frame(frame)?;
        self.nodes.push((frame.to_string(), Vec::new()));
        self.parent.push(None);
        Ok(InstanceId(self.nodes.len() - 1))
    }

    pub fn fill(&mut self, target: InstanceId, slot: &str, item: Item) -> Result<(), FrameError> {
        let frame = self.lib.frame(&self.nodes[target.0].0)?;
        if !frame.has_slot(slot) {
            return Err(FrameError::UnknownSlot {
                frame: frame.name.clone(),
                slot: slot.to_string(),
            });
        }
        if let Item::Instance(child) = item {
            let mut cur = Some(target);
            while let Some(c) = cur {
                if c == child {
                    return Err(FrameError::Cycle {
                        instance: child.0,
                        slot: slot.to_string(),
                    });
                }
                cur = self.parent[c.0];
            }
            if self.parent[child.0].is_some() {
                return Err(FrameError::AlreadyPlaced(child.0));
            }
            self.parent[child.0] = Some(target);
        }
        self.nodes[target.0].1.push((slot.to_string(), item));
        Ok(())
    }

    /// The validated tree rooted at `root`.
    pub fn build(&self, root: InstanceId) -> Result<FrameInstance, FrameError> {
        let inst = self.tree(root).normalized();
        validate_instance(self.lib, &inst)?;
        Ok(inst)
    }

    fn tree(&self, id: InstanceId) -> FrameInstance {
        let (frame, fills) = &self.nodes[id.0];
        let mut inst = FrameInstance::new(frame.clone());
        for (slot, item) in fills {
            inst.push(
                slot,
                match item {
                    Item::Text(t) => Fill::Text(t.clone()),
                    Item::Instance(c) => Fill::Instance(self.tree(*c)),
                },
            );
        }
        inst
    }
}

impl fmt::Display for FrameLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frame) in self.frames.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let mut body = String::new();
            for p in &frame.parts {
                match p {
                    Part::Text(t) => body.push_str(&t.replace("<<", "<<<<")),
                    Part::Slot(s) => {
                        body.push_str("<<");
                        body.push_str(s);
                        body.push_str(">>");
                    }
                }
            }
            // pick a terminator that no body line equals
            let mut tag = "EOF".to_string();
            let mut n = 0;
            while body.lines().any(|l| l == tag) {
                n += 1;
                tag = format!("EOF{n}");
            }
            // `<<<-TAG` drops the newline before the terminator
            let chomp = if !body.is_empty() && !body.ends_with('\n') {
                "-"
            } else {
                ""
            };
            writeln!(
                f,
                "frame {} ({}) <<<{chomp}{tag}",
                frame.name,
                frame.slots.join(", ")
            )?;
            write!(f, "{body}")?;
            if !chomp.is_empty() {
                writeln!(f)?;
            }
            writeln!(f, "{tag}")?;
        }
        Ok(())
    }
}
