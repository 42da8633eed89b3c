//! Random frame libraries, instances and marker-line corruptions.

use rand::Rng;
use varigen_core::frame::{
    validate_instance, Fill, Frame, FrameError, FrameInstance, FrameLibrary, MarkerConfig, Part,
};

const SLOT_NAMES: [&str; 3] = ["s", "t", "u"];
/// Frame body text; disjoint from literal fills apart from the escape-prone `<`.
const BODY_CHARS: &[char] = &['{', '}', '(', ')', ';', '=', '\n', 'K', 'Q', 'Z', '<', '>'];
const FILL_CHARS: &[char] = &['a', 'b', 'c', 'x', '1', '2', ' ', '-', '<'];

fn text(rng: &mut impl Rng, alphabet: &[char], max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

/// Library of 2..=5 frames named `Fa`, `Fb`, ... with up to three slots each.
pub fn random_library(rng: &mut impl Rng) -> FrameLibrary {
    let mut lib = FrameLibrary::new();
    for i in 0..rng.gen_range(2..=5) {
        let name = format!("F{}", (b'a' + i as u8) as char);
        let nslots = rng.gen_range(0..=3);
        let slots: Vec<String> = SLOT_NAMES[..nslots].iter().map(|s| s.to_string()).collect();
        let mut order = slots.clone();
        // shuffle the reference order
        for j in (1..order.len()).rev() {
            order.swap(j, rng.gen_range(0..=j));
        }
        let mut parts = vec![Part::Text(text(rng, BODY_CHARS, 6))];
        for s in order {
            parts.push(Part::Slot(s));
            let mut sep = text(rng, BODY_CHARS, 6);
            if sep.is_empty() {
                sep.push('\n');
            }
            parts.push(Part::Text(sep));
        }
        lib.add(Frame::new(name, slots, parts).unwrap()).unwrap();
    }
    lib
}

fn random_tree(rng: &mut impl Rng, lib: &FrameLibrary, depth: usize) -> FrameInstance {
    let frame = &lib.frames()[rng.gen_range(0..lib.frames().len())];
    let mut inst = FrameInstance::new(frame.name());
    for slot in frame.slots() {
        for _ in 0..rng.gen_range(0..=4) {
            if depth < 5 && rng.gen_bool(0.45) {
                inst.push(slot, Fill::Instance(random_tree(rng, lib, depth + 1)));
            } else {
                inst.push(slot, Fill::Text(text(rng, FILL_CHARS, 8)));
            }
        }
    }
    inst
}

/// A valid normalized instance of depth at most 5 and fan-out at most 4.
/// Candidates whose fills would read back ambiguously are redrawn.
pub fn random_instance(rng: &mut impl Rng, lib: &FrameLibrary) -> FrameInstance {
    loop {
        let inst = random_tree(rng, lib, 1).normalized();
        match validate_instance(lib, &inst) {
            Ok(()) => return inst,
            Err(FrameError::Ambiguous { .. }) => continue,
            Err(e) => panic!("generator produced an invalid instance: {e}"),
        }
    }
}

pub fn depth(inst: &FrameInstance) -> usize {
    1 + inst
        .fills
        .values()
        .flatten()
        .filter_map(|f| match f {
            Fill::Instance(i) => Some(depth(i)),
            Fill::Text(_) => None,
        })
        .max()
        .unwrap_or(0)
}

/// Replaces one randomly chosen literal fill with `edit(old)`; false when the
/// instance has no literal fill.
pub fn edit_random_literal(
    rng: &mut impl Rng,
    inst: &mut FrameInstance,
    edit: &mut dyn FnMut(&str) -> String,
) -> bool {
    fn count(i: &FrameInstance) -> usize {
        i.fills
            .values()
            .flatten()
            .map(|f| match f {
                Fill::Text(_) => 1,
                Fill::Instance(c) => count(c),
            })
            .sum()
    }
    fn apply(
        i: &mut FrameInstance,
        target: &mut usize,
        edit: &mut dyn FnMut(&str) -> String,
    ) -> bool {
        for f in i.fills.values_mut().flatten() {
            match f {
                Fill::Text(t) => {
                    if *target == 0 {
                        *t = edit(t);
                        return true;
                    }
                    *target -= 1;
                }
                Fill::Instance(c) => {
                    if apply(c, target, edit) {
                        return true;
                    }
                }
            }
        }
        false
    }
    let n = count(inst);
    if n == 0 {
        return false;
    }
    let mut target = rng.gen_range(0..n);
    apply(inst, &mut target, edit)
}

/// Random insertion, deletion or replacement inside a literal.
pub fn random_edit(rng: &mut impl Rng, old: &str) -> String {
    let chars: Vec<char> = old.chars().collect();
    let pool: Vec<char> = FILL_CHARS.iter().chain(BODY_CHARS).copied().collect();
    let mut out = chars.clone();
    match rng.gen_range(0..3) {
        0 | 1 if !out.is_empty() => {
            let at = rng.gen_range(0..out.len());
            out.remove(at);
            if rng.gen_bool(0.5) {
                out.insert(at, pool[rng.gen_range(0..pool.len())]);
            }
        }
        _ => {
            let at = rng.gen_range(0..=out.len());
            for k in 0..rng.gen_range(1..=5) {
                out.insert(at + k, pool[rng.gen_range(0..pool.len())]);
            }
        }
    }
    out.into_iter().collect()
}

/// Damages one marker line: deletes it, deletes one of its characters, or
/// duplicates it. Returns `None` when `text` has no marker line.
pub fn corrupt_marker(rng: &mut impl Rng, text: &str, m: &MarkerConfig) -> Option<String> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let marked: Vec<usize> = (0..lines.len())
        .filter(|i| lines[*i].contains("BEGIN-FRAME") || lines[*i].contains("END-FRAME"))
        .collect();
    if marked.is_empty() {
        return None;
    }
    let i = marked[rng.gen_range(0..marked.len())];
    let mut out: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    match rng.gen_range(0..3) {
        0 => {
            out.remove(i);
        }
        1 => {
            // markers may follow literal text on the same line; only touch the marker
            let start = [" BEGIN-FRAME", " END-FRAME"]
                .iter()
                .find_map(|k| out[i].find(&format!("{}{k}", m.prefix())))
                .expect("marker line holds a marker");
            let skip = out[i][..start].chars().count();
            let mut chars: Vec<char> = out[i].chars().collect();
            chars.remove(rng.gen_range(skip..chars.len()));
            out[i] = chars.into_iter().collect();
        }
        _ => {
            let dup = out[i].clone();
            out.insert(i, dup);
        }
    }
    Some(out.concat())
}
