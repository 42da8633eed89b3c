//! From a complete configuration to a file tree.
//!
//! [`generate`] writes, under an output root:
//!
//! - one file per `output` rule, expanded with frame markers,
//! - `specification.xml`, the 0/1 specification,
//! - `FILLS.json`, the instance tree behind each generated file,
//! - `MANIFEST`, an `inputs` digest line followed by a sorted
//!   `path<TAB>bytes<TAB>sha256` line per file above.
//!
//! [`roundtrip_update`] reads a generated tree back, compares the literal
//! text in every slot against `FILLS.json` and reports what was edited.
//! [`export_overlay`] stores those edits as `OVERLAY.json`, which later
//! `generate` runs into the same root apply on top of the rules.

mod rules;
mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::FeatureState;
use crate::frame::{
    child_path, expand, extract, validate_instance, Fill, FrameError, FrameInstance, FrameLibrary,
};
use crate::Configuration;

pub use rules::{
    parse_rules, Action, Effect, Guard, OutputRule, RuleError, RuleSet, SlotPath, Step,
    RESERVED_OUTPUTS,
};
pub use spec::{emit_preview, emit_spec, parse_spec, SpecError};

pub const MANIFEST: &str = "MANIFEST";
pub const SPEC_FILE: &str = "specification.xml";
pub const FILLS_FILE: &str = "FILLS.json";
pub const OVERLAY_FILE: &str = "OVERLAY.json";

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{file}: {source}")]
    Frame { file: String, source: FrameError },
    #[error("{file}, rules line {line}: no instance at `{target}`")]
    MissingTarget {
        file: String,
        line: usize,
        target: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} is not empty and holds no MANIFEST; refusing to write there", .0.display())]
    NotGeneratorOutput(PathBuf),
    #[error("bad MANIFEST: {0}")]
    Manifest(String),
    #[error("{file}: markers damaged: {source}")]
    Corrupt { file: String, source: FrameError },
    #[error("{file}: frame structure changed at {path}; edit the rules instead")]
    StructureChanged { file: String, path: String },
    #[error("{file}: {message}")]
    Json { file: String, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> GenError + '_ {
    move |source| GenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub inputs: String,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    fn of(inputs: String, files: &BTreeMap<String, String>) -> Self {
        let entries = files
            .iter()
            .map(|(path, text)| ManifestEntry {
                path: path.clone(),
                bytes: text.len() as u64,
                digest: sha256_hex(text.as_bytes()),
            })
            .collect();
        Manifest { inputs, entries }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("inputs\t{}\n", self.inputs);
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\n", e.path, e.bytes, e.digest));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, GenError> {
        let bad = |m: String| GenError::Manifest(m);
        let mut lines = text.lines();
        let inputs = lines
            .next()
            .and_then(|l| l.strip_prefix("inputs\t"))
            .ok_or_else(|| bad("missing `inputs` header".into()))?
            .to_string();
        let mut entries: Vec<ManifestEntry> = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split('\t').collect();
            let [path, bytes, digest] = f[..] else {
                return Err(bad(format!(
                    "line {}: expected three tab-separated fields",
                    i + 2
                )));
            };
            let bytes = bytes
                .parse()
                .map_err(|_| bad(format!("line {}: bad size `{bytes}`", i + 2)))?;
            rules::check_output_path(path)
                .or_else(|e| {
                    if RESERVED_OUTPUTS.contains(&path) {
                        Ok(())
                    } else {
                        Err(e)
                    }
                })
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
            if entries.last().is_some_and(|p| p.path.as_str() >= path) {
                return Err(bad(format!("line {}: entries not sorted", i + 2)));
            }
            entries.push(ManifestEntry {
                path: path.to_string(),
                bytes,
                digest: digest.to_string(),
            });
        }
        Ok(Manifest { inputs, entries })
    }

    /// Listed files whose size or digest differs from what is on disk.
    pub fn mismatches(&self, root: &Path) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| match fs::read(root.join(&e.path)) {
                Ok(bytes) => bytes.len() as u64 != e.bytes || sha256_hex(&bytes) != e.digest,
                Err(_) => true,
            })
            .map(|e| e.path.clone())
            .collect()
    }
}

/// One edited slot: the literal text runs between nested instances, as
/// generated (`base`) and as found in the file (`edited`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayEntry {
    pub file: String,
    pub path: String,
    pub frame: String,
    pub slot: String,
    pub base: Vec<String>,
    pub edited: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlay {
    pub entries: Vec<OverlayEntry>,
}

impl Overlay {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("overlay serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        serde_json::from_str(text).map_err(|e| GenError::Json {
            file: OVERLAY_FILE.into(),
            message: e.to_string(),
        })
    }

    /// Adds `newer` edits, made on a tree that already had `self` applied.
    /// An entry for the same slot keeps its original base; entries edited
    /// back to their base disappear.
    pub fn merge(&mut self, newer: &Overlay) {
        for n in &newer.entries {
            let same =
                |e: &&mut OverlayEntry| e.file == n.file && e.path == n.path && e.slot == n.slot;
            match self.entries.iter_mut().find(same) {
                Some(e) => e.edited = n.edited.clone(),
                None => self.entries.push(n.clone()),
            }
        }
        self.entries.retain(|e| e.base != e.edited);
    }
}

/// Literal text between the nested instances of a slot; always one more
/// run than there are instances.
pub fn text_runs(items: &[Fill]) -> Vec<String> {
    let mut runs = vec![String::new()];
    for item in items {
        match item {
            Fill::Text(t) => runs.last_mut().expect("non-empty").push_str(t),
            Fill::Instance(_) => runs.push(String::new()),
        }
    }
    runs
}

fn set_runs(items: &mut Vec<Fill>, runs: &[String]) {
    let instances: Vec<Fill> = items
        .drain(..)
        .filter(|f| matches!(f, Fill::Instance(_)))
        .collect();
    let mut runs = runs.iter();
    if let Some(r) = runs.next() {
        items.push(Fill::Text(r.clone()));
    }
    for (inst, r) in instances.into_iter().zip(runs) {
        items.push(inst);
        items.push(Fill::Text(r.clone()));
    }
}

fn slot_runs(inst: &FrameInstance, slot: &str) -> Vec<String> {
    text_runs(inst.fills.get(slot).map_or(&[][..], |v| v.as_slice()))
}

/// Everything one generation run produces, before it touches the disk.
#[derive(Clone, Debug)]
pub struct Rendering {
    /// Every file listed in the manifest, by relative path.
    pub files: BTreeMap<String, String>,
    /// Instance tree behind each rule output.
    pub fills: BTreeMap<String, FrameInstance>,
    pub manifest: Manifest,
    /// Overlay entries whose base no longer matches the generated text.
    pub skipped: Vec<OverlayEntry>,
}

fn guard_holds(c: &Configuration, g: &Guard) -> bool {
    let f = c.resolve(&g.feature).expect("guards bound");
    match c.state(f) {
        FeatureState::Selected => g.value.as_bool(),
        FeatureState::Deselected => !g.value.as_bool(),
        FeatureState::Undecided => unreachable!("configuration is complete"),
    }
}

/// Applies the actions of `out` whose guards hold in `c`.
pub fn build_output(
    c: &Configuration,
    lib: &FrameLibrary,
    out: &OutputRule,
) -> Result<FrameInstance, GenError> {
    let mut root = FrameInstance::new(out.root.clone());
    for a in &out.actions {
        if a.guard.as_ref().is_some_and(|g| !guard_holds(c, g)) {
            continue;
        }
        let missing = || GenError::MissingTarget {
            file: out.path.clone(),
            line: a.line,
            target: a.target.to_string(),
        };
        let mut path = "/".to_string();
        for step in &a.target.steps {
            let here = root.at(&path).expect("path built from existing instances");
            let count = here.children(&step.slot).count();
            let k = match step.index {
                Some(i) if i < count => i,
                None if count > 0 => count - 1,
                _ => return Err(missing()),
            };
            path = child_path(&path, &step.slot, k);
        }
        let target = root.at_mut(&path).expect("resolved above");
        if !lib
            .get(&target.frame)
            .is_some_and(|f| f.has_slot(&a.target.slot))
        {
            return Err(missing());
        }
        let fill = match &a.effect {
            Effect::Text(t) => Fill::Text(t.clone()),
            Effect::Frame { name, params } => {
                let mut inst = FrameInstance::new(name.clone());
                for (p, v) in params {
                    inst.push(p, Fill::Text(v.clone()));
                }
                Fill::Instance(inst)
            }
        };
        target.push(&a.target.slot, fill);
    }
    Ok(root.normalized())
}

fn apply_overlay(
    file: &str,
    inst: &mut FrameInstance,
    overlay: &Overlay,
    skipped: &mut Vec<OverlayEntry>,
) {
    for e in overlay.entries.iter().filter(|e| e.file == file) {
        match inst.at_mut(&e.path) {
            Some(target) if target.frame == e.frame && slot_runs(target, &e.slot) == e.base => {
                let items = target.fills.entry(e.slot.clone()).or_default();
                set_runs(items, &e.edited);
            }
            _ => skipped.push(e.clone()),
        }
    }
    *inst = inst.normalized();
}

/// Digest over the canonical forms of all generator inputs.
fn inputs_digest(
    c: &Configuration,
    spec_xml: &str,
    lib: &FrameLibrary,
    rules: &RuleSet,
    overlay: Option<&Overlay>,
) -> String {
    let mut h = Sha256::new();
    for part in [
        c.diagram().to_string(),
        spec_xml.to_string(),
        lib.to_string(),
        rules.to_string(),
    ] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    if let Some(o) = overlay.filter(|o| !o.is_empty()) {
        h.update(o.to_json().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Builds every output in memory. Outputs are expanded concurrently.
pub fn render(
    c: &Configuration,
    lib: &FrameLibrary,
    rules: &RuleSet,
    overlay: Option<&Overlay>,
) -> Result<Rendering, GenError> {
    let spec_xml = emit_spec(c)?;
    rules.bind(c.diagram(), lib)?;
    type Built = Result<(FrameInstance, String, Vec<OverlayEntry>), GenError>;
    let built: Vec<Built> = std::thread::scope(|s| {
        let handles: Vec<_> = rules
            .outputs
            .iter()
            .map(|out| {
                s.spawn(move || {
                    let mut inst = build_output(c, lib, out)?;
                    let mut skipped = Vec::new();
                    if let Some(o) = overlay {
                        apply_overlay(&out.path, &mut inst, o, &mut skipped);
                    }
                    validate_instance(lib, &inst).map_err(|source| GenError::Frame {
                        file: out.path.clone(),
                        source,
                    })?;
                    let text = expand(lib, &inst, &out.markers);
                    Ok((inst, text, skipped))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("render task panicked"))
            .collect()
    });
    let mut files = BTreeMap::new();
    let mut fills = BTreeMap::new();
    let mut skipped = Vec::new();
    for (out, result) in rules.outputs.iter().zip(built) {
        let (inst, text, sk) = result?;
        files.insert(out.path.clone(), text);
        fills.insert(out.path.clone(), inst);
        skipped.extend(sk);
    }
    let mut fills_json = serde_json::to_string_pretty(&fills).expect("fills serialize");
    fills_json.push('\n');
    files.insert(FILLS_FILE.to_string(), fills_json);
    files.insert(SPEC_FILE.to_string(), spec_xml.clone());
    let manifest = Manifest::of(inputs_digest(c, &spec_xml, lib, rules, overlay), &files);
    Ok(Rendering {
        files,
        fills,
        manifest,
        skipped,
    })
}

fn read_overlay(root: &Path) -> Result<Option<Overlay>, GenError> {
    let path = root.join(OVERLAY_FILE);
    match fs::read_to_string(&path) {
        Ok(text) => Overlay::from_json(&text).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io(&path)(e)),
    }
}

/// Removes the files a previous run listed, and directories they leave empty.
fn clear_previous(root: &Path) -> Result<(), GenError> {
    let listing = root.join(MANIFEST);
    let text = match fs::read_to_string(&listing) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let mut dir = fs::read_dir(root).map_err(io(root))?;
            return match dir.next() {
                None => Ok(()),
                Some(_) => Err(GenError::NotGeneratorOutput(root.to_path_buf())),
            };
        }
        Err(e) => return Err(io(&listing)(e)),
    };
    let old = Manifest::parse(&text)?;
    for e in &old.entries {
        let path = root.join(&e.path);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {}
            Err(err) => return Err(io(&path)(err)),
        }
        let mut dir = path.parent();
        while let Some(d) = dir.filter(|d| *d != root) {
            if fs::remove_dir(d).is_err() {
                break;
            }
            dir = d.parent();
        }
    }
    fs::remove_file(&listing).map_err(io(&listing))
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub manifest: Manifest,
    pub skipped: Vec<OverlayEntry>,
}

/// Renders and writes the file tree under `root`, applying `root/OVERLAY.json`
/// when present. A non-empty `root` must hold an earlier run's `MANIFEST`;
/// only the files it lists are replaced.
pub fn generate(
    c: &Configuration,
    lib: &FrameLibrary,
    rules: &RuleSet,
    root: &Path,
) -> Result<Generated, GenError> {
    fs::create_dir_all(root).map_err(io(root))?;
    let overlay = read_overlay(root)?;
    let r = render(c, lib, rules, overlay.as_ref())?;
    clear_previous(root)?;
    for path in r.files.keys() {
        if let Some(parent) = root.join(path).parent() {
            fs::create_dir_all(parent).map_err(io(parent))?;
        }
    }
    let written: Vec<Result<(), GenError>> = std::thread::scope(|s| {
        let handles: Vec<_> = r
            .files
            .iter()
            .map(|(path, text)| {
                s.spawn(move || {
                    let p = root.join(path);
                    fs::write(&p, text).map_err(io(&p))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("write task panicked"))
            .collect()
    });
    written.into_iter().collect::<Result<(), _>>()?;
    let listing = root.join(MANIFEST);
    fs::write(&listing, r.manifest.to_text()).map_err(io(&listing))?;
    Ok(Generated {
        manifest: r.manifest,
        skipped: r.skipped,
    })
}

/// Same frames at the same paths with the same number of nested instances
/// per slot; returns the first differing path.
fn structure_diff(a: &FrameInstance, b: &FrameInstance) -> Option<String> {
    let (wa, wb) = (a.walk(), b.walk());
    for i in 0..wa.len().max(wb.len()) {
        match (wa.get(i), wb.get(i)) {
            (Some((pa, ia)), Some((pb, ib))) => {
                let counts = |x: &FrameInstance| -> BTreeMap<String, usize> {
                    x.fills
                        .keys()
                        .map(|s| (s.clone(), x.children(s).count()))
                        .filter(|(_, n)| *n > 0)
                        .collect()
                };
                if pa != pb || ia.frame != ib.frame || counts(ia) != counts(ib) {
                    return Some(pa.clone());
                }
            }
            (Some((p, _)), None) | (None, Some((p, _))) => return Some(p.clone()),
            (None, None) => unreachable!(),
        }
    }
    None
}

/// Literal-text edits in the generated files under `root`, relative to the
/// fills recorded by the last `generate`.
pub fn roundtrip_update(
    root: &Path,
    lib: &FrameLibrary,
    rules: &RuleSet,
) -> Result<Overlay, GenError> {
    let listing = root.join(MANIFEST);
    Manifest::parse(&fs::read_to_string(&listing).map_err(io(&listing))?)?;
    let fills_path = root.join(FILLS_FILE);
    let recorded: BTreeMap<String, FrameInstance> = serde_json::from_str(
        &fs::read_to_string(&fills_path).map_err(io(&fills_path))?,
    )
    .map_err(|e| GenError::Json {
        file: FILLS_FILE.into(),
        message: e.to_string(),
    })?;
    let mut overlay = Overlay::default();
    for (file, before) in &recorded {
        let out = rules.output(file).ok_or_else(|| GenError::Json {
            file: FILLS_FILE.into(),
            message: format!("`{file}` has no output rule"),
        })?;
        let path = root.join(file);
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let after = extract(&text, lib, &out.markers).map_err(|source| GenError::Corrupt {
            file: file.clone(),
            source,
        })?;
        if let Some(p) = structure_diff(before, &after) {
            return Err(GenError::StructureChanged {
                file: file.clone(),
                path: p,
            });
        }
        for ((path, b), (_, a)) in before.walk().into_iter().zip(after.walk()) {
            let frame = lib.get(&b.frame).ok_or_else(|| GenError::Frame {
                file: file.clone(),
                source: FrameError::UnknownFrame(b.frame.clone()),
            })?;
            for slot in frame.slots() {
                let (base, edited) = (slot_runs(b, slot), slot_runs(a, slot));
                if base != edited {
                    overlay.entries.push(OverlayEntry {
                        file: file.clone(),
                        path: path.clone(),
                        frame: b.frame.clone(),
                        slot: slot.clone(),
                        base,
                        edited,
                    });
                }
            }
        }
    }
    Ok(overlay)
}

/// Merges `edits` into `root/OVERLAY.json`. Returns the stored overlay.
pub fn export_overlay(root: &Path, edits: &Overlay) -> Result<Overlay, GenError> {
    let mut stored = read_overlay(root)?.unwrap_or_default();
    stored.merge(edits);
    let path = root.join(OVERLAY_FILE);
    if stored.is_empty() {
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io(&path)(e)),
        }
    } else {
        fs::write(&path, stored.to_json()).map_err(io(&path))?;
    }
    Ok(stored)
}
