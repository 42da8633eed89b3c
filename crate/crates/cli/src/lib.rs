//! The `varigen` command line: one subcommand per pipeline stage.
//!
//! [`run`] takes the argument vector and two output streams and returns the
//! exit code, so the whole interface can be driven from tests.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;
use varigen_core::config::{parse_decisions, DecisionParseError};
use varigen_core::frame::{parse_frames, FrameError, FrameLibrary};
use varigen_core::generator::{
    emit_preview, emit_spec, export_overlay, generate, parse_rules, roundtrip_update, GenError,
    RuleError, RuleSet, SpecError, MANIFEST, OVERLAY_FILE,
};
use varigen_core::model::{count_variants, validate_model, ModelDiagnostic, ModelError, Severity};
use varigen_core::widget::{transform_with, MandatoryLeaves, TransformOptions};
use varigen_core::{
    parse_model, ConfigError, Configuration, FeatureDiagram, FinalizePolicy, Status,
};
use varigen_service::ServiceConfig;

#[derive(Parser, Debug)]
#[command(
    name = "varigen",
    version,
    about = "Feature-model specialization and generation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model for group arity, dead features and satisfiability
    Validate {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the exact number of valid configurations
    Count {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the widget tree derived from a model, as JSON
    Transform {
        model: PathBuf,
        /// How childless mandatory features are shown
        #[arg(long, value_enum, default_value_t = Leaves::Title)]
        mandatory_leaves: Leaves,
    },
    /// Apply a decision file and report what is still open
    Configure {
        model: PathBuf,
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the 0/1 XML specification of a configuration
    Spec {
        model: PathBuf,
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Write undecided features as `?` instead of requiring completeness
        #[arg(long, conflicts_with = "policy")]
        preview: bool,
    },
    /// Generate the output tree for a configuration
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Report hand edits in a generated tree, optionally keeping them
    Roundtrip {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Merge the edits into OVERLAY.json so the next generate keeps them
        #[arg(long)]
        export: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Serve the session protocol over HTTP
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory that receives generated trees, one per session
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Policy {
    Strict,
    DefaultOff,
}

impl From<Policy> for FinalizePolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Strict => FinalizePolicy::Strict,
            Policy::DefaultOff => FinalizePolicy::DefaultOff,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Leaves {
    Title,
    Label,
    Omit,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
    #[error("{}: model has {} error(s)", path.display(), diagnostics.len())]
    Invalid {
        path: PathBuf,
        diagnostics: Vec<ModelDiagnostic>,
    },
    #[error("{}: {source}", path.display())]
    Decisions {
        path: PathBuf,
        source: DecisionParseError,
    },
    #[error("{}: {source}", path.display())]
    Frames { path: PathBuf, source: FrameError },
    #[error("{}: {source}", path.display())]
    Rules { path: PathBuf, source: RuleError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("serve: {0}")]
    Serve(io::Error),
    #[error(transparent)]
    Output(#[from] io::Error),
}

/// Parses `args` (program name first) and runs the subcommand.
///
/// Exit codes: 0 success, 1 domain error, 2 usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => return usage(&e, &args, out, err),
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            report(&e, err);
            1
        }
    }
}

fn usage(
    e: &clap::Error,
    args: &[std::ffi::OsString],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    use clap::error::ErrorKind;
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = write!(out, "{}", e.render());
        return 0;
    }
    let _ = write!(err, "{}", e.render());
    // list the flags of the subcommand that was meant
    let mut cmd = Cli::command();
    cmd.build();
    let name = args
        .iter()
        .skip(1)
        .find_map(|a| a.to_str().filter(|s| !s.starts_with('-')));
    let help = match name.and_then(|n| cmd.find_subcommand_mut(n)) {
        Some(sub) => sub.render_help(),
        None => cmd.render_help(),
    };
    let _ = write!(err, "\n{help}");
    2
}

fn report(e: &CliError, err: &mut dyn Write) {
    let _ = writeln!(err, "error: {e}");
    match e {
        CliError::Invalid { diagnostics, .. } => {
            for d in diagnostics {
                let _ = writeln!(err, "  {d}");
            }
        }
        CliError::Config(ConfigError::Conflict(c)) => {
            for link in &c.reasons {
                let _ = writeln!(err, "  {link}");
            }
        }
        _ => {}
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn load_model(path: &Path) -> Result<FeatureDiagram, CliError> {
    parse_model(&read(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a model and refuses it when validation reports errors.
fn load_valid_model(path: &Path) -> Result<Arc<FeatureDiagram>, CliError> {
    let d = load_model(path)?;
    let diagnostics: Vec<_> = validate_model(&d)
        .into_iter()
        .filter(|p| p.severity == Severity::Error)
        .collect();
    if !diagnostics.is_empty() {
        return Err(CliError::Invalid {
            path: path.to_path_buf(),
            diagnostics,
        });
    }
    Ok(Arc::new(d))
}

fn configure(model: &Path, decisions: Option<&Path>) -> Result<Configuration, CliError> {
    let d = load_valid_model(model)?;
    let Some(path) = decisions else {
        return Ok(Configuration::init(d)?);
    };
    let list = parse_decisions(&read(path)?).map_err(|source| CliError::Decisions {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Configuration::from_named(d, &list)?)
}

fn load_generator(frames: &Path, rules: &Path) -> Result<(FrameLibrary, RuleSet), CliError> {
    let lib = parse_frames(&read(frames)?).map_err(|source| CliError::Frames {
        path: frames.to_path_buf(),
        source,
    })?;
    let rules_set = parse_rules(&read(rules)?).map_err(|source| CliError::Rules {
        path: rules.to_path_buf(),
        source,
    })?;
    Ok((lib, rules_set))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Validate { model, format } => {
            let d = load_model(&model)?;
            let diagnostics = validate_model(&d);
            let errors: Vec<_> = diagnostics
                .iter()
                .filter(|p| p.severity == Severity::Error)
                .cloned()
                .collect();
            if format == Format::Json {
                let ok = errors.is_empty();
                writeln!(
                    out,
                    "{}",
                    pretty(&json!({ "ok": ok, "diagnostics": diagnostics }))
                )?;
            } else {
                for w in diagnostics
                    .iter()
                    .filter(|p| p.severity == Severity::Warning)
                {
                    writeln!(err, "{w}")?;
                }
            }
            if !errors.is_empty() {
                return Err(CliError::Invalid {
                    path: model,
                    diagnostics: errors,
                });
            }
            if format == Format::Text {
                writeln!(out, "ok")?;
            }
        }
        Command::Count { model, format } => {
            let n = count_variants(&load_model(&model)?);
            match format {
                Format::Text => writeln!(out, "{n}")?,
                // a string: counts exceed every JSON number type
                Format::Json => writeln!(out, "{}", pretty(&json!({ "count": n.to_string() })))?,
            }
        }
        Command::Transform {
            model,
            mandatory_leaves,
        } => {
            let opts = TransformOptions {
                mandatory_leaves: match mandatory_leaves {
                    Leaves::Title => MandatoryLeaves::Title,
                    Leaves::Label => MandatoryLeaves::Label,
                    Leaves::Omit => MandatoryLeaves::Omit,
                },
            };
            write!(
                out,
                "{}",
                transform_with(&load_model(&model)?, opts).to_json()
            )?;
        }
        Command::Configure {
            model,
            decisions,
            format,
        } => {
            let c = configure(&model, decisions.as_deref())?;
            let obligations = match c.status() {
                Status::Complete => Vec::new(),
                Status::Incomplete(o) => o,
            };
            match format {
                Format::Text => {
                    let status = if obligations.is_empty() {
                        "complete"
                    } else {
                        "incomplete"
                    };
                    writeln!(out, "{status}")?;
                    for o in &obligations {
                        writeln!(out, "  {o}")?;
                    }
                }
                Format::Json => {
                    let states: serde_json::Map<_, _> = c
                        .named_states()
                        .into_iter()
                        .map(|(n, s)| (n, json!(s)))
                        .collect();
                    let v = json!({
                        "complete": obligations.is_empty(),
                        "states": states,
                        "obligations": obligations,
                    });
                    writeln!(out, "{}", pretty(&v))?;
                }
            }
        }
        Command::Spec {
            model,
            decisions,
            policy,
            preview,
        } => {
            let c = configure(&model, decisions.as_deref())?;
            if preview {
                write!(out, "{}", emit_preview(&c))?;
            } else {
                write!(out, "{}", emit_spec(&c.finalize(policy.into())?)?)?;
            }
        }
        Command::Generate {
            model,
            decisions,
            frames,
            rules,
            out: root,
            policy,
            format,
        } => {
            let c = configure(&model, decisions.as_deref())?.finalize(policy.into())?;
            let (lib, rules) = load_generator(&frames, &rules)?;
            let done = generate(&c, &lib, &rules, &root)?;
            let manifest = root.join(MANIFEST);
            match format {
                Format::Text => {
                    for s in &done.skipped {
                        writeln!(
                            err,
                            "warning: kept edit of {} {} slot {} no longer applies; skipped",
                            s.file, s.path, s.slot
                        )?;
                    }
                    writeln!(out, "{}", manifest.display())?;
                }
                Format::Json => {
                    let v = json!({
                        "manifest": manifest.display().to_string(),
                        "entries": done.manifest.entries,
                        "skipped": done.skipped,
                    });
                    writeln!(out, "{}", pretty(&v))?;
                }
            }
        }
        Command::Roundtrip {
            frames,
            rules,
            out: root,
            export,
            format,
        } => {
            let (lib, rules) = load_generator(&frames, &rules)?;
            let edits = roundtrip_update(&root, &lib, &rules)?;
            match format {
                Format::Text => {
                    if edits.is_empty() {
                        writeln!(out, "no edits")?;
                    }
                    for e in &edits.entries {
                        writeln!(out, "{}\t{}\t{}", e.file, e.path, e.slot)?;
                    }
                }
                Format::Json => write!(out, "{}", edits.to_json())?,
            }
            if export {
                let stored = export_overlay(&root, &edits)?;
                writeln!(
                    err,
                    "{}: {} kept edit(s)",
                    root.join(OVERLAY_FILE).display(),
                    stored.entries.len()
                )?;
            }
        }
        Command::Serve { port, out: root } => {
            let mut config = ServiceConfig::default();
            if let Some(root) = root {
                config.out_root = root;
            }
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(CliError::Serve)?;
            writeln!(err, "listening on http://{addr}")?;
            runtime
                .block_on(varigen_service::serve(addr, config))
                .map_err(CliError::Serve)?;
        }
    }
    Ok(())
}
