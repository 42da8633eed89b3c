use std::collections::BTreeMap;

use regex::Regex;

use super::{
    check_text, child_path, is_sentinel, Fill, Frame, FrameError, FrameInstance, FrameLibrary,
    Part, RESERVED, SENTINEL_BASE,
};

/// Shape of the border lines around each expanded instance:
/// `<prefix> BEGIN-FRAME <path> <Frame><suffix>` and
/// `<prefix> END-FRAME <path><suffix>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerConfig {
    prefix: String,
    suffix: String,
}

impl MarkerConfig {
    pub fn new(prefix: impl Into<String>, suffix: impl Into<String>) -> Result<Self, FrameError> {
        let (prefix, suffix) = (prefix.into(), suffix.into());
        if prefix.trim().is_empty() {
            return Err(FrameError::MarkerConfig("comment prefix is empty".into()));
        }
        for part in [&prefix, &suffix] {
            if part.contains(['\n', '\r']) {
                return Err(FrameError::MarkerConfig(
                    "line breaks are not allowed".into(),
                ));
            }
            if let Some(w) = RESERVED.iter().find(|w| part.contains(*w)) {
                return Err(FrameError::MarkerConfig(format!("`{w}` is reserved")));
            }
        }
        Ok(MarkerConfig { prefix, suffix })
    }

    /// Line-comment markers with no suffix.
    pub fn line(prefix: impl Into<String>) -> Result<Self, FrameError> {
        Self::new(prefix, "")
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn suffix(&self) -> &str {
        &self.suffix
    }

    pub fn begin(&self, path: &str, frame: &str) -> String {
        format!(
            "{} BEGIN-FRAME {path} {frame}{}\n",
            self.prefix, self.suffix
        )
    }

    pub fn end(&self, path: &str) -> String {
        format!("{} END-FRAME {path}{}\n", self.prefix, self.suffix)
    }

    fn pattern(&self) -> Regex {
        let (p, s) = (regex::escape(&self.prefix), regex::escape(&self.suffix));
        Regex::new(&format!(
            r"{p} BEGIN-FRAME (\S+) ([A-Za-z][A-Za-z0-9_]*){s}\n|{p} END-FRAME (\S+){s}\n"
        ))
        .expect("marker pattern compiles")
    }
}

/// Depth-first text of `inst` with a marker pair around every instance.
/// Instances must already be valid against `lib`.
pub fn expand(lib: &FrameLibrary, inst: &FrameInstance, m: &MarkerConfig) -> String {
    let mut out = String::new();
    expand_into(lib, inst, "/", m, &mut out);
    out
}

fn expand_into(
    lib: &FrameLibrary,
    inst: &FrameInstance,
    path: &str,
    m: &MarkerConfig,
    out: &mut String,
) {
    let frame = lib
        .get(&inst.frame)
        .expect("instance validated against library");
    out.push_str(&m.begin(path, &inst.frame));
    for part in frame.parts() {
        match part {
            Part::Text(t) => out.push_str(t),
            Part::Slot(s) => {
                let mut k = 0;
                for item in inst.fills.get(s).into_iter().flatten() {
                    match item {
                        Fill::Text(t) => out.push_str(t),
                        Fill::Instance(c) => {
                            expand_into(lib, c, &child_path(path, s, k), m, out);
                            k += 1;
                        }
                    }
                }
            }
        }
    }
    out.push_str(&m.end(path));
}

/// A frame's own content with nested instances replaced by sentinels.
struct Region {
    path: String,
    frame: String,
    content: String,
    /// Slot of each nested instance, in order.
    child_slots: Vec<String>,
    children: Vec<Region>,
    line: usize,
}

/// Stand-in for an instance nested in the frame's `j`-th declared slot.
fn sentinel(j: usize) -> char {
    char::from_u32(SENTINEL_BASE + j as u32).expect("sentinel in range")
}

/// Rebuilds the instance tree from expanded (and possibly edited) text.
pub fn extract(
    text: &str,
    lib: &FrameLibrary,
    m: &MarkerConfig,
) -> Result<FrameInstance, FrameError> {
    let line_of = |pos: usize| text[..pos].matches('\n').count() + 1;
    if let Some(pos) = text.find(is_sentinel) {
        return Err(FrameError::Marker {
            line: line_of(pos),
            message: "reserved private-use character in text".into(),
        });
    }
    let re = m.pattern();
    let mut stack: Vec<Region> = Vec::new();
    let mut root: Option<Region> = None;
    let mut last = 0;
    for cap in re.captures_iter(text) {
        let whole = cap.get(0).expect("match");
        let between = &text[last..whole.start()];
        let line = line_of(whole.start());
        let fail = |message: String| FrameError::Marker { line, message };
        match stack.last_mut() {
            Some(top) => top.content.push_str(between),
            None if !between.is_empty() || root.is_some() => {
                return Err(fail("text outside the outermost frame region".into()));
            }
            None => {}
        }
        last = whole.end();
        if let (Some(path), Some(frame)) = (cap.get(1), cap.get(2)) {
            let (path, frame) = (path.as_str(), frame.as_str());
            let expected = match stack.last() {
                None => Some("/".to_string()),
                Some(parent) => next_child_path(lib, parent, path),
            };
            if expected.as_deref() != Some(path) {
                return Err(fail(format!("unexpected BEGIN-FRAME {path}")));
            }
            if lib.get(frame).is_none() {
                return Err(fail(format!(
                    "BEGIN-FRAME {path} names unknown frame `{frame}`"
                )));
            }
            stack.push(Region {
                path: path.to_string(),
                frame: frame.to_string(),
                content: String::new(),
                child_slots: Vec::new(),
                children: Vec::new(),
                line,
            });
        } else {
            let path = cap.get(3).expect("end marker path").as_str();
            let Some(done) = stack.pop() else {
                return Err(fail(format!(
                    "END-FRAME {path} without a matching BEGIN-FRAME"
                )));
            };
            if done.path != path {
                return Err(fail(format!(
                    "END-FRAME {path} closes region {}",
                    done.path
                )));
            }
            match stack.last_mut() {
                Some(parent) => {
                    let slot = child_slot(&done.path);
                    let j = lib
                        .get(&parent.frame)
                        .and_then(|f| f.slot_index(&slot))
                        .expect("slot checked at BEGIN-FRAME");
                    parent.content.push(sentinel(j));
                    parent.child_slots.push(slot);
                    parent.children.push(done);
                }
                None => root = Some(done),
            }
        }
    }
    if let Some(open) = stack.last() {
        return Err(FrameError::Marker {
            line: open.line,
            message: format!("BEGIN-FRAME {} is never closed", open.path),
        });
    }
    let tail = &text[last..];
    let Some(root) = root else {
        return Err(FrameError::Marker {
            line: 1,
            message: "no frame markers found".into(),
        });
    };
    if !tail.is_empty() {
        return Err(FrameError::Marker {
            line: line_of(last),
            message: "text outside the outermost frame region".into(),
        });
    }
    // a reserved word left outside any recognized marker means a damaged marker line
    for (i, l) in text.lines().enumerate() {
        if RESERVED.iter().any(|w| l.contains(w)) && !re.is_match(&format!("{l}\n")) {
            return Err(FrameError::Marker {
                line: i + 1,
                message: "damaged marker line".into(),
            });
        }
    }
    build(lib, root)
}

fn child_slot(path: &str) -> String {
    let last = path.rsplit('/').next().unwrap_or_default();
    last.split('[').next().unwrap_or_default().to_string()
}

/// The path a new child of `parent` must carry if it sits in the slot named by `path`.
fn next_child_path(lib: &FrameLibrary, parent: &Region, path: &str) -> Option<String> {
    let slot = child_slot(path);
    let frame = lib.get(&parent.frame)?;
    if !frame.has_slot(&slot) {
        return None;
    }
    let k = parent.child_slots.iter().filter(|s| **s == slot).count();
    Some(child_path(&parent.path, &slot, k))
}

fn build(lib: &FrameLibrary, region: Region) -> Result<FrameInstance, FrameError> {
    let frame = lib.get(&region.frame).expect("checked at marker");
    let split = split(frame, &region.content).ok_or_else(|| FrameError::ContentMismatch {
        path: region.path.clone(),
        frame: region.frame.clone(),
    })?;
    for t in split.values().flatten() {
        if let Piece::Text(t) = t {
            check_text(t, || format!("text at {}", region.path))?;
        }
    }
    let mut children: Vec<Option<FrameInstance>> = Vec::with_capacity(region.children.len());
    for c in region.children {
        children.push(Some(build(lib, c)?));
    }
    let mut inst = FrameInstance::new(region.frame);
    for (slot, pieces) in split {
        for p in pieces {
            inst.push(
                &slot,
                match p {
                    Piece::Text(t) => Fill::Text(t),
                    Piece::Child(k) => {
                        Fill::Instance(children[k].take().expect("each child used once"))
                    }
                },
            );
        }
    }
    Ok(inst.normalized())
}

#[derive(Debug, PartialEq, Eq)]
enum Piece {
    Text(String),
    Child(usize),
}

/// Matches `content` against the frame body and returns each slot's pieces.
/// Every slot takes the shortest text that lets the rest of the body match.
fn split(frame: &Frame, content: &str) -> Option<BTreeMap<String, Vec<Piece>>> {
    let re = frame.matcher.get_or_init(|| {
        let mut pattern = String::from(r"(?s)\A");
        for part in frame.parts() {
            match part {
                Part::Text(t) => pattern.push_str(&regex::escape(t)),
                Part::Slot(s) => {
                    let j = frame.slot_index(s).expect("declared slot");
                    pattern.push_str(&format!(
                        r"((?:[^\x{{F0000}}-\x{{FFFFD}}]|\x{{{:X}}})*?)",
                        SENTINEL_BASE + j as u32
                    ));
                }
            }
        }
        pattern.push_str(r"\z");
        Regex::new(&pattern).expect("frame pattern compiles")
    });
    let cap = re.captures(content)?;
    let mut out = BTreeMap::new();
    let mut next_child = 0;
    let slots = frame.parts().iter().filter_map(|p| match p {
        Part::Slot(s) => Some(s),
        Part::Text(_) => None,
    });
    for (i, slot) in slots.enumerate() {
        let text = cap.get(i + 1).map_or("", |m| m.as_str());
        let mut pieces = Vec::new();
        let mut buf = String::new();
        for c in text.chars() {
            if is_sentinel(c) {
                if !buf.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut buf)));
                }
                pieces.push(Piece::Child(next_child));
                next_child += 1;
            } else {
                buf.push(c);
            }
        }
        if !buf.is_empty() {
            pieces.push(Piece::Text(buf));
        }
        if !pieces.is_empty() {
            out.insert(slot.clone(), pieces);
        }
    }
    Some(out)
}

/// Rejects fills that reading back would assign differently.
pub(super) fn check_unambiguous(
    frame: &Frame,
    inst: &FrameInstance,
    path: &str,
) -> Result<(), FrameError> {
    let mut content = String::new();
    let mut children = 0;
    let mut expected: BTreeMap<String, Vec<Piece>> = BTreeMap::new();
    for part in frame.parts() {
        match part {
            Part::Text(t) => content.push_str(t),
            Part::Slot(s) => {
                let mut pieces = Vec::new();
                for item in inst.fills.get(s).into_iter().flatten() {
                    match item {
                        Fill::Text(t) if t.is_empty() => {}
                        Fill::Text(t) => {
                            content.push_str(t);
                            match pieces.last_mut() {
                                Some(Piece::Text(prev)) => prev.push_str(t),
                                _ => pieces.push(Piece::Text(t.clone())),
                            }
                        }
                        Fill::Instance(_) => {
                            content.push(sentinel(frame.slot_index(s).expect("declared slot")));
                            pieces.push(Piece::Child(children));
                            children += 1;
                        }
                    }
                }
                if !pieces.is_empty() {
                    expected.insert(s.clone(), pieces);
                }
            }
        }
    }
    let got = split(frame, &content).expect("content built from the frame matches it");
    if got == expected {
        return Ok(());
    }
    let slot = expected
        .keys()
        .chain(got.keys())
        .find(|s| expected.get(*s) != got.get(*s))
        .cloned()
        .unwrap_or_default();
    Err(FrameError::Ambiguous {
        path: path.to_string(),
        slot,
    })
}
