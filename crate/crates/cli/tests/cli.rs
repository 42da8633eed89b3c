use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use varigen_core::config::parse_decisions;
use varigen_core::frame::parse_frames;
use varigen_core::generator::{emit_spec, generate, parse_rules};
use varigen_core::model::count_variants;
use varigen_core::widget::transform;
use varigen_core::{parse_model, Configuration};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn varigen(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("varigen").chain(args.iter().copied());
    let code = varigen::run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn configured(decisions: &str) -> Configuration {
    let d = Arc::new(parse_model(&fs::read_to_string(fixture("view.fm")).unwrap()).unwrap());
    let list = parse_decisions(&fs::read_to_string(fixture(decisions)).unwrap()).unwrap();
    Configuration::from_named(d, &list).unwrap()
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn generate_args<'a>(decisions: &'a str, out: &'a str) -> Vec<String> {
    vec![
        "generate".into(),
        "--model".into(),
        fixture("view.fm"),
        "--decisions".into(),
        fixture(decisions),
        "--frames".into(),
        fixture("view.frame"),
        "--rules".into(),
        fixture("view.rules"),
        "--out".into(),
        out.into(),
    ]
}

fn run_owned(args: &[String]) -> Run {
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    varigen(&args)
}

#[test]
fn validate_prints_ok() {
    let r = varigen(&["validate", &fixture("dialog.fm")]);
    assert_eq!((r.code, r.out.as_str()), (0, "ok\n"), "{}", r.err);
}

#[test]
fn validate_reports_errors_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.fm");
    fs::write(
        &model,
        "feature R { mandatory A mandatory B }\nexcludes A B\n",
    )
    .unwrap();
    let r = varigen(&["validate", model.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.out.is_empty());
    assert!(r.err.contains("no valid configuration"), "{}", r.err);

    let r = varigen(&["validate", "--format", "json", model.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["ok"], false);

    // warnings alone still validate
    fs::write(
        &model,
        "feature R { optional A optional B }\nrequires A -> B\nexcludes A B\n",
    )
    .unwrap();
    let r = varigen(&["validate", model.to_str().unwrap()]);
    assert_eq!((r.code, r.out.as_str()), (0, "ok\n"));
    assert!(r.err.contains("dead feature A"), "{}", r.err);
}

#[test]
fn count_prints_exact_count() {
    assert_eq!(varigen(&["count", &fixture("view.fm")]).out, "68\n");
    let r = varigen(&["count", "--format", "json", &fixture("suite200.fm")]);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    let d = parse_model(&fs::read_to_string(fixture("suite200.fm")).unwrap()).unwrap();
    assert_eq!(v["count"], count_variants(&d).to_string());
}

#[test]
fn transform_matches_library() {
    let r = varigen(&["transform", &fixture("view.fm")]);
    let d = parse_model(&fs::read_to_string(fixture("view.fm")).unwrap()).unwrap();
    assert_eq!(r.out, transform(&d).to_json());
    assert_eq!(
        r.out,
        fs::read_to_string(fixture("view.widgets.json")).unwrap()
    );
}

#[test]
fn configure_reports_obligations() {
    let r = varigen(&[
        "configure",
        &fixture("view.fm"),
        "--decisions",
        &fixture("view-zoom.dec"),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut lines = r.out.lines();
    assert_eq!(lines.next(), Some("incomplete"));
    assert!(
        lines.any(|l| l.contains("ToolBarCheck is undecided")),
        "{}",
        r.out
    );

    let r = varigen(&[
        "configure",
        &fixture("view.fm"),
        "--decisions",
        &fixture("view-all.dec"),
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["complete"], true);
    assert_eq!(v["states"]["Zoom150"], "selected");
    assert_eq!(v["obligations"].as_array().unwrap().len(), 0);
}

#[test]
fn conflicting_decisions_explain_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let dec = dir.path().join("clash.dec");
    fs::write(&dec, "deselect View\nselect Zoom\n").unwrap();
    let r = varigen(&[
        "configure",
        &fixture("view.fm"),
        "--decisions",
        dec.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.err.starts_with("error: cannot select Zoom"), "{}", r.err);
    assert!(r.err.contains("View deselected by decision"), "{}", r.err);
}

#[test]
fn spec_matches_library() {
    let r = varigen(&[
        "spec",
        &fixture("view.fm"),
        "--decisions",
        &fixture("view-all.dec"),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out, emit_spec(&configured("view-all.dec")).unwrap());

    let r = varigen(&[
        "spec",
        &fixture("view.fm"),
        "--decisions",
        &fixture("view-zoom.dec"),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("incomplete"), "{}", r.err);

    let r = varigen(&[
        "spec",
        &fixture("view.fm"),
        "--decisions",
        &fixture("view-zoom.dec"),
        "--preview",
    ]);
    assert!(r.out.contains("value=\"?\""));
}

#[test]
fn generate_matches_library_and_stays_in_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let r = run_owned(&generate_args("view-all.dec", out.to_str().unwrap()));
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out.trim_end(), out.join("MANIFEST").display().to_string());
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names, ["build"]);

    let lib = parse_frames(&fs::read_to_string(fixture("view.frame")).unwrap()).unwrap();
    let rules = parse_rules(&fs::read_to_string(fixture("view.rules")).unwrap()).unwrap();
    let direct = dir.path().join("direct");
    generate(&configured("view-all.dec"), &lib, &rules, &direct).unwrap();
    assert_eq!(tree(&out), tree(&direct));
}

#[test]
fn generate_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let mut args = generate_args("view-zoom.dec", out.to_str().unwrap());
    let r = run_owned(&args);
    assert_eq!(r.code, 1);
    assert!(!out.exists());

    args.extend(["--policy".into(), "default-off".into()]);
    let r = run_owned(&args);
    assert_eq!(r.code, 0, "{}", r.err);
    let spec = fs::read_to_string(out.join("specification.xml")).unwrap();
    assert!(spec.contains("name=\"Zoom\" value=\"1\""), "{spec}");
    assert!(spec.contains("name=\"StatusBar\" value=\"0\""), "{spec}");
}

#[test]
fn roundtrip_reports_and_exports_edits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let out_s = out.to_str().unwrap();
    assert_eq!(run_owned(&generate_args("view-all.dec", out_s)).code, 0);
    let roundtrip = |export: bool| {
        let frames = fixture("view.frame");
        let rules = fixture("view.rules");
        let mut args = vec![
            "roundtrip",
            "--frames",
            &frames,
            "--rules",
            &rules,
            "--out",
            out_s,
        ];
        if export {
            args.push("--export");
        }
        varigen(&args)
    };
    assert_eq!(roundtrip(false).out, "no edits\n");

    let menu = out.join("menu.rc");
    let edited = fs::read_to_string(&menu)
        .unwrap()
        .replace("&Status Bar", "Status &Line");
    fs::write(&menu, &edited).unwrap();
    let r = roundtrip(true);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.out, "menu.rc\t/menus[1]/entries[1]\tlabel\n");
    assert!(out.join("OVERLAY.json").exists());

    assert_eq!(run_owned(&generate_args("view-all.dec", out_s)).code, 0);
    assert_eq!(fs::read_to_string(&menu).unwrap(), edited);
}

#[test]
fn usage_errors_exit_2_and_list_flags() {
    let r = varigen(&["generate", "--model", "m.fm", "--bogus"]);
    assert_eq!(r.code, 2);
    assert!(r.out.is_empty());
    for flag in ["--decisions", "--frames", "--rules", "--out", "--policy"] {
        assert!(r.err.contains(flag), "{flag} not listed:\n{}", r.err);
    }
    assert_eq!(varigen(&[]).code, 2);
    assert_eq!(varigen(&["frobnicate"]).code, 2);
    assert_eq!(varigen(&["count", "m.fm", "--format", "yaml"]).code, 2);
}

#[test]
fn help_goes_to_stdout() {
    let r = varigen(&["--help"]);
    assert_eq!(r.code, 0);
    for sub in [
        "validate",
        "count",
        "transform",
        "configure",
        "spec",
        "generate",
        "roundtrip",
        "serve",
    ] {
        assert!(r.out.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn missing_file_is_a_domain_error() {
    let r = varigen(&["count", "/nonexistent/model.fm"]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("/nonexistent/model.fm"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_varigen");
    let ok = Command::new(bin)
        .args(["count", &fixture("dialog.fm")])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "12\n");
    let usage = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
