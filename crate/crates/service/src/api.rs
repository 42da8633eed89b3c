//! Request and response bodies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use varigen_core::config::{Obligation, StateChange};
use varigen_core::generator::{Manifest, OverlayEntry};
use varigen_core::widget::{Notification, WidgetTree};
use varigen_core::{Configuration, DecisionValue, FeatureState};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub model: String,
    #[serde(default)]
    pub frames: Option<String>,
    #[serde(default)]
    pub rules: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    pub feature: String,
    pub value: DecisionValue,
}

/// What every successful session response carries.
#[derive(Clone, Debug, Serialize)]
pub struct SessionState {
    pub id: String,
    pub decisions: Vec<Decision>,
    pub states: BTreeMap<String, FeatureState>,
    /// Widget id to enabled.
    pub enablement: BTreeMap<String, bool>,
    pub complete: bool,
    pub obligations: Vec<Obligation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CreateResponse {
    pub widgets: WidgetTree,
    #[serde(flatten)]
    pub state: SessionState,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecisionResponse {
    pub changed: Vec<StateChange>,
    pub notifications: Vec<Notification>,
    #[serde(flatten)]
    pub state: SessionState,
}

#[derive(Clone, Debug, Serialize)]
pub struct UndoResponse {
    pub undone: Decision,
    pub changed: Vec<StateChange>,
    #[serde(flatten)]
    pub state: SessionState,
}

#[derive(Clone, Debug, Deserialize)]
pub struct SpecQuery {
    pub mode: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    Strict,
    DefaultOff,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    #[serde(default)]
    pub policy: Policy,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerateResponse {
    pub out: String,
    pub manifest: Manifest,
    pub skipped: Vec<OverlayEntry>,
}

/// Derived-state differences between two configurations of one diagram.
pub(crate) fn changes(before: &Configuration, after: &Configuration) -> Vec<StateChange> {
    before
        .diagram()
        .ids()
        .filter(|&f| before.state(f) != after.state(f))
        .map(|f| StateChange {
            feature: before.diagram().name_of(f).to_string(),
            from: before.state(f),
            to: after.state(f),
        })
        .collect()
}
