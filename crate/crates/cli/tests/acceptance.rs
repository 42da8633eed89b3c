//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs with `cargo test -p varigen --test acceptance`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varigen_core::config::{ConfigError, DecisionValue};
use varigen_core::frame::{expand, extract, MarkerConfig};
use varigen_core::generator::{emit_spec, parse_spec};
use varigen_core::model::{count_variants, validate_model};
use varigen_core::widget::{compute_enablement, transform};
use varigen_core::{parse_model, Configuration, FeatureDiagram, FeatureState};
use varigen_service::recording::{replay, Recording};
use varigen_service::{router, AppState, ServiceConfig};

use support::frames::{
    corrupt_marker, depth, edit_random_literal, random_edit, random_instance, random_library,
};
use support::{brute_count, enumerate_valid, extends, random_diagram, subtree, SUITE200_COUNT};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn load(name: &str) -> Arc<FeatureDiagram> {
    Arc::new(parse_model(&read(name)).unwrap())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn partial(c: &Configuration) -> Vec<Option<bool>> {
    c.states().iter().map(|s| s.as_option()).collect()
}

fn random_value(rng: &mut impl Rng) -> DecisionValue {
    if rng.gen_bool(0.5) {
        DecisionValue::Selected
    } else {
        DecisionValue::Deselected
    }
}

fn counting_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let start = Instant::now();
    let mut constrained = 0;
    for i in 0..500 {
        let constraints = if i % 2 == 0 { 0 } else { rng.gen_range(1..=3) };
        constrained += usize::from(constraints > 0);
        let d = random_diagram(&mut rng, 20, constraints);
        let got = count_variants(&d).0;
        let want = BigUint::from(brute_count(&d));
        ensure(got == want, || {
            format!("diagram {i}: counted {got}, enumerated {want}\n{d}")
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "500 diagrams ({constrained} constrained) in {took:.2?}"
    ))
}

fn scale_check() -> Outcome {
    let d = load("suite200.fm");
    ensure(d.len() == 200, || format!("{} features", d.len()))?;
    ensure(validate_model(&d).is_empty(), || {
        "suite has diagnostics".into()
    })?;
    let start = Instant::now();
    let n = count_variants(&d);
    let took = start.elapsed();
    ensure(n.0 > BigUint::from(10u64).pow(17), || format!("count {n}"))?;
    ensure(n.to_string() == SUITE200_COUNT, || {
        format!("count {n}, expected {SUITE200_COUNT}")
    })?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1e);
    let mut checked = 0;
    while checked < 40 {
        let top = d.ids().nth(rng.gen_range(0..d.len())).unwrap();
        if d.subtree_end(top) - top.index() < 6 {
            continue;
        }
        let sub = subtree(&d, top, 15);
        let (got, want) = (count_variants(&sub).0, BigUint::from(brute_count(&sub)));
        ensure(got == want, || {
            format!("subtree under {}: {got} vs {want}", d.name_of(top))
        })?;
        checked += 1;
    }
    Ok(format!(
        "{n} variants in {took:.2?}; 40 subtrees of <= 15 features agree"
    ))
}

fn fixture_counts() -> Outcome {
    for (model, want) in [("view.fm", 68u64), ("dialog.fm", 12)] {
        let d = load(model);
        let (got, brute) = (count_variants(&d).0, brute_count(&d));
        ensure(got == BigUint::from(want) && brute == want, || {
            format!("{model}: counted {got}, enumerated {brute}, expected {want}")
        })?;
    }
    Ok("view 68, dialog 12".into())
}

fn propagation_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x50b);
    let (mut sequences, mut accepted, mut rejected) = (0, 0, 0);
    while sequences < 10_000 {
        let d = Arc::new(random_diagram(&mut rng, 16, sequences % 4));
        let valid = enumerate_valid(&d);
        let start = match Configuration::init(d.clone()) {
            Ok(c) => c,
            Err(ConfigError::VoidModel) if valid.is_empty() => continue,
            Err(e) => return Err(format!("init: {e}")),
        };
        for _ in 0..5 {
            let mut c = start.clone();
            for step in 0..8 {
                let f = d.ids().nth(rng.gen_range(0..d.len())).unwrap();
                let v = random_value(&mut rng);
                let mut wanted: Vec<Option<bool>> = vec![None; d.len()];
                for (id, dv) in c.decisions().iter().filter(|(id, _)| *id != f) {
                    wanted[id.index()] = Some(dv.as_bool());
                }
                wanted[f.index()] = Some(v.as_bool());
                let possible = extends(&valid, &wanted);
                match c.apply(f, v) {
                    Ok((next, _)) => {
                        ensure(possible && extends(&valid, &partial(&next)), || {
                            format!("step {step}: reached a state with no valid completion\n{d}")
                        })?;
                        c = next;
                        accepted += 1;
                    }
                    Err(ConfigError::Conflict(conflict)) => {
                        ensure(!possible, || format!("spurious conflict: {conflict}\n{d}"))?;
                        rejected += 1;
                    }
                    Err(e) => return Err(e.to_string()),
                }
            }
            sequences += 1;
        }
    }

    let mut permutations = 0;
    while permutations < 1000 {
        let d = Arc::new(random_diagram(&mut rng, 16, permutations % 3));
        let Ok(mut c) = Configuration::init(d.clone()) else {
            continue;
        };
        for _ in 0..8 {
            let f = d.ids().nth(rng.gen_range(0..d.len())).unwrap();
            if let Ok((next, _)) = c.apply(f, random_value(&mut rng)) {
                c = next;
            }
        }
        let mut decisions = c.decisions().to_vec();
        for _ in 0..5 {
            decisions.shuffle(&mut rng);
            let permuted = Configuration::from_decisions(d.clone(), &decisions)
                .map_err(|e| format!("permutation rejected: {e}"))?;
            ensure(permuted.states() == c.states(), || {
                format!("order changed the outcome\n{d}")
            })?;
            permutations += 1;
        }
    }
    Ok(format!(
        "{sequences} sequences ({accepted} accepted, {rejected} conflicts), {permutations} permutations"
    ))
}

fn transformation_goldens() -> Outcome {
    for (model, golden) in [
        ("dialog.fm", "dialog.widgets.json"),
        ("view.fm", "view.widgets.json"),
    ] {
        ensure(transform(&load(model)).to_json() == read(golden), || {
            format!("{golden} differs")
        })?;
    }
    let d = load("view.fm");
    let t = transform(&d);
    let (c, _) = Configuration::init(d)
        .unwrap()
        .apply_decision("View", DecisionValue::Deselected)
        .map_err(|e| e.to_string())?;
    let e = compute_enablement(&t, &c).map_err(|e| e.to_string())?;
    let governed: Vec<&str> = t
        .governed_by("View")
        .into_iter()
        .filter(|id| *id != "View")
        .collect();
    ensure(!governed.is_empty(), || "View governs nothing".into())?;
    for id in &governed {
        ensure(!e[*id], || format!("{id} still enabled"))?;
    }
    Ok(format!(
        "2 goldens; {} widgets under View disabled",
        governed.len()
    ))
}

fn frame_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf4a);
    let markers = [
        MarkerConfig::line("#").unwrap(),
        MarkerConfig::line("//").unwrap(),
        MarkerConfig::new("<!--", " -->").unwrap(),
    ];
    let mut deepest = 0;
    for n in 0..1000 {
        let lib = random_library(&mut rng);
        let inst = random_instance(&mut rng, &lib);
        deepest = deepest.max(depth(&inst));
        ensure(depth(&inst) <= 5, || "instance deeper than 5".into())?;
        let m = &markers[n % markers.len()];
        let text = expand(&lib, &inst, m);
        let back = extract(&text, &lib, m).map_err(|e| format!("{e}\n{text}"))?;
        ensure(back == inst, || format!("extract differs\n{text}"))?;
    }
    let mut edits = 0;
    while edits < 500 {
        let lib = random_library(&mut rng);
        let mut inst = random_instance(&mut rng, &lib);
        let seed = rng.gen();
        let mut edit = |old: &str| random_edit(&mut ChaCha8Rng::seed_from_u64(seed), old);
        if !edit_random_literal(&mut rng, &mut inst, &mut edit) {
            continue;
        }
        let m = &markers[edits % markers.len()];
        let edited = expand(&lib, &inst, m);
        let back = extract(&edited, &lib, m).map_err(|e| format!("{e}\n{edited}"))?;
        ensure(expand(&lib, &back, m) == edited, || {
            format!("edit lost\n{edited}")
        })?;
        edits += 1;
    }
    let mut corrupted = 0;
    for n in 0..1000 {
        let lib = random_library(&mut rng);
        let inst = random_instance(&mut rng, &lib);
        let m = &markers[n % markers.len()];
        let Some(bad) = corrupt_marker(&mut rng, &expand(&lib, &inst, m), m) else {
            continue;
        };
        ensure(extract(&bad, &lib, m).is_err(), || {
            format!("accepted corruption\n{bad}")
        })?;
        corrupted += 1;
    }
    Ok(format!(
        "1000 round trips (depth <= {deepest}), 500 literal edits, {corrupted} corruptions refused"
    ))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = varigen::run(args.iter().copied(), &mut out, &mut err);
    let err = String::from_utf8_lossy(&err).into_owned();
    ensure(code == 0, || {
        format!("varigen {} exited {code}: {err}", args.join(" "))
    })?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn cli_generate(decisions: &str, out: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let paths: Vec<String> = ["view.fm", decisions, "view.frame", "view.rules"]
        .iter()
        .map(|n| fixture(n).display().to_string())
        .collect();
    let out_s = out.display().to_string();
    cli(&[
        "varigen",
        "generate",
        "--model",
        &paths[0],
        "--decisions",
        &paths[1],
        "--frames",
        &paths[2],
        "--rules",
        &paths[3],
        "--out",
        &out_s,
    ])?;
    let mut files = BTreeMap::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(out).unwrap().display().to_string();
                files.insert(rel, std::fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(files)
}

/// Begin markers of `frame` regions in every file of a tree.
fn frame_regions(files: &BTreeMap<String, Vec<u8>>, frame: &str) -> usize {
    files
        .values()
        .flat_map(|bytes| {
            String::from_utf8_lossy(bytes)
                .lines()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .filter(|line| {
            let mut words = line
                .split_whitespace()
                .skip_while(|w| *w != "BEGIN-FRAME")
                .skip(2);
            line.contains("BEGIN-FRAME") && words.next() == Some(frame)
        })
        .count()
}

fn pipeline() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = cli_generate("view-all.dec", &tmp.path().join("a"))?;
    let b = cli_generate("view-all.dec", &tmp.path().join("b"))?;
    ensure(a == b, || "two runs differ".into())?;
    let with_view = frame_regions(&a, "ViewMenu");
    ensure(with_view > 0, || {
        "scan finds no ViewMenu region even with View on".into()
    })?;
    let off = cli_generate("view-off.dec", &tmp.path().join("off"))?;
    let found = frame_regions(&off, "ViewMenu");
    ensure(found == 0, || {
        format!("{found} ViewMenu region(s) with View=0")
    })?;
    Ok(format!(
        "{} files byte-identical across runs; ViewMenu regions: {with_view} with View=1, 0 with View=0",
        a.len()
    ))
}

fn spec_round_trip() -> Outcome {
    let mut fixtures = 0;
    for model in ["view.fm", "dialog.fm", "dialog-layouts.fm"] {
        let d = load(model);
        for assignment in enumerate_valid(&d) {
            let c = Configuration::from_assignment(d.clone(), &assignment);
            let xml = emit_spec(&c).map_err(|e| e.to_string())?;
            let back = parse_spec(&xml, d.clone()).map_err(|e| format!("{model}: {e}"))?;
            ensure(back.states() == c.states(), || {
                format!("{model}: states differ\n{xml}")
            })?;
            fixtures += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bec2);
    let mut random = 0;
    while random < 200 {
        let d = Arc::new(random_diagram(&mut rng, 16, random % 3));
        let valid = enumerate_valid(&d);
        let Some(assignment) = valid.choose(&mut rng) else {
            continue;
        };
        let c = Configuration::from_assignment(d.clone(), assignment);
        ensure(
            c.states().iter().all(|s| *s != FeatureState::Undecided),
            || "incomplete".into(),
        )?;
        let xml = emit_spec(&c).map_err(|e| e.to_string())?;
        let back = parse_spec(&xml, d.clone()).map_err(|e| e.to_string())?;
        ensure(back.states() == c.states(), || {
            format!("states differ\n{xml}")
        })?;
        ensure(emit_spec(&back).map_err(|e| e.to_string())? == xml, || {
            "xml differs".into()
        })?;
        random += 1;
    }
    Ok(format!(
        "{fixtures} fixture configurations, {random} random"
    ))
}

fn service_replay() -> Outcome {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture("protocol"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    ensure(!paths.is_empty(), || "no recordings".into())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let mut exchanges = 0;
    for path in &paths {
        let rec: Recording =
            serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?)
                .map_err(|e| format!("{}: {e}", path.display()))?;
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let app = router(AppState::new(ServiceConfig {
            out_root: out.path().to_path_buf(),
            ..ServiceConfig::default()
        }));
        runtime.block_on(replay(&app, &out.path().display().to_string(), &rec))?;
        exchanges += rec.exchanges.len();
    }
    Ok(format!("{} recordings, {exchanges} exchanges", paths.len()))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("counting oracle", counting_oracle),
        ("scale check", scale_check),
        ("fixture counts", fixture_counts),
        (
            "propagation soundness and confluence",
            propagation_soundness,
        ),
        (
            "transformation goldens and View enablement",
            transformation_goldens,
        ),
        ("frame round trip", frame_round_trip),
        ("pipeline determinism and gating", pipeline),
        ("specification round trip", spec_round_trip),
        ("service replay", service_replay),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed > 0 {
        std::process::exit(1);
    }
}
