use std::fmt;

use serde::Serialize;

use super::{has_valid_configuration, FeatureDiagram, GroupKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModelDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub feature: Option<String>,
}

/// Renders as `severity: message (feature)`.
impl fmt::Display for ModelDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.message)?;
        if let Some(name) = &self.feature {
            write!(f, " ({name})")?;
        }
        Ok(())
    }
}

/// Checks group arity and semantic health of a diagram.
///
/// A feature is dead when no valid configuration selects it. When the model
/// has no valid configuration at all a single error is reported instead of
/// flagging every feature.
pub fn validate_model(d: &FeatureDiagram) -> Vec<ModelDiagnostic> {
    let mut out = Vec::new();
    for g in d.groups() {
        if g.kind() != GroupKind::And && g.members().len() < 2 {
            out.push(ModelDiagnostic {
                severity: Severity::Error,
                message: format!(
                    "{} group has {} member(s), at least 2 required",
                    g.kind(),
                    g.members().len()
                ),
                feature: Some(d.name_of(g.parent()).to_string()),
            });
        }
    }
    if !has_valid_configuration(d, &[]) {
        out.push(ModelDiagnostic {
            severity: Severity::Error,
            message: "model admits no valid configuration".into(),
            feature: None,
        });
        return out;
    }
    for id in d.ids().skip(1) {
        if !has_valid_configuration(d, &[(id, true)]) {
            out.push(ModelDiagnostic {
                severity: Severity::Warning,
                message: format!("dead feature {}", d.name_of(id)),
                feature: Some(d.name_of(id).to_string()),
            });
        }
    }
    out
}
