//! The 0/1 specification: one `<feature name value>` element per feature,
//! nested like the diagram.

use std::sync::Arc;

use thiserror::Error;

use crate::config::{FeatureState, Obligation, Status};
use crate::model::{FeatureDiagram, FeatureId};
use crate::Configuration;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("configuration is incomplete: {}", list(.0))]
    Incomplete(Vec<Obligation>),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("specification is for model `{found}`, expected `{expected}`")]
    WrongModel { expected: String, found: String },
    #[error("unexpected element <{0}>")]
    UnexpectedElement(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` appears more than once")]
    DuplicateFeature(String),
    #[error("feature `{feature}` is nested under `{found}`, expected `{expected}`")]
    Misplaced {
        feature: String,
        expected: String,
        found: String,
    },
    #[error("feature `{0}` is missing")]
    MissingFeature(String),
    #[error("feature `{feature}` has value `{value}`, expected 0 or 1")]
    BadValue { feature: String, value: String },
    #[error("invalid configuration: {}", list(.0))]
    Invalid(Vec<Obligation>),
}

fn list(obligations: &[Obligation]) -> String {
    obligations
        .iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('"', "&quot;")
}

/// The specification of a complete configuration.
pub fn emit_spec(c: &Configuration) -> Result<String, SpecError> {
    if let Status::Incomplete(obligations) = c.status() {
        return Err(SpecError::Incomplete(obligations));
    }
    Ok(render(c))
}

/// Like [`emit_spec`] but accepts open configurations; undecided features
/// get `value="?"`.
pub fn emit_preview(c: &Configuration) -> String {
    render(c)
}

fn render(c: &Configuration) -> String {
    let d = c.diagram();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!("<specification model=\"{}\">\n", escape(d.name())));
    element(c, d.root(), 1, &mut out);
    out.push_str("</specification>\n");
    out
}

fn element(c: &Configuration, f: FeatureId, depth: usize, out: &mut String) {
    let d = c.diagram();
    let indent = "  ".repeat(depth);
    let value = match c.state(f) {
        FeatureState::Selected => "1",
        FeatureState::Deselected => "0",
        FeatureState::Undecided => "?",
    };
    let open = format!(
        "{indent}<feature name=\"{}\" value=\"{value}\"",
        escape(d.name_of(f))
    );
    let children: Vec<FeatureId> = d.children(f).collect();
    if children.is_empty() {
        out.push_str(&open);
        out.push_str("/>\n");
        return;
    }
    out.push_str(&open);
    out.push_str(">\n");
    for child in children {
        element(c, child, depth + 1, out);
    }
    out.push_str(&indent);
    out.push_str("</feature>\n");
}

/// Reads a complete specification back into a configuration in which every
/// feature carries a user decision.
pub fn parse_spec(xml: &str, d: Arc<FeatureDiagram>) -> Result<Configuration, SpecError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| SpecError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "specification" {
        return Err(SpecError::UnexpectedElement(
            root.tag_name().name().to_string(),
        ));
    }
    let model = root.attribute("model").unwrap_or_default();
    if model != d.name() {
        return Err(SpecError::WrongModel {
            expected: d.name().to_string(),
            found: model.to_string(),
        });
    }
    let mut values: Vec<Option<bool>> = vec![None; d.len()];
    let tops: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    for top in tops {
        visit(&d, top, None, &mut values)?;
    }
    let mut assignment = Vec::with_capacity(d.len());
    for id in d.ids() {
        match values[id.index()] {
            Some(v) => assignment.push(v),
            None => return Err(SpecError::MissingFeature(d.name_of(id).to_string())),
        }
    }
    let c = Configuration::from_assignment(d, &assignment);
    match c.status() {
        Status::Complete => Ok(c),
        Status::Incomplete(obligations) => Err(SpecError::Invalid(obligations)),
    }
}

fn visit(
    d: &FeatureDiagram,
    node: roxmltree::Node<'_, '_>,
    parent: Option<FeatureId>,
    values: &mut [Option<bool>],
) -> Result<(), SpecError> {
    if node.tag_name().name() != "feature" {
        return Err(SpecError::UnexpectedElement(
            node.tag_name().name().to_string(),
        ));
    }
    let name = node.attribute("name").unwrap_or_default();
    let id = d
        .id(name)
        .ok_or_else(|| SpecError::UnknownFeature(name.to_string()))?;
    let expected = d.feature(id).parent();
    if expected != parent {
        let label = |p: Option<FeatureId>| {
            p.map_or("<specification>".to_string(), |p| d.name_of(p).to_string())
        };
        return Err(SpecError::Misplaced {
            feature: name.to_string(),
            expected: label(expected),
            found: label(parent),
        });
    }
    if values[id.index()].is_some() {
        return Err(SpecError::DuplicateFeature(name.to_string()));
    }
    values[id.index()] = Some(match node.attribute("value") {
        Some("1") => true,
        Some("0") => false,
        other => {
            return Err(SpecError::BadValue {
                feature: name.to_string(),
                value: other.unwrap_or_default().to_string(),
            })
        }
    });
    for child in node.children().filter(|n| n.is_element()) {
        visit(d, child, Some(id), values)?;
    }
    Ok(())
}
