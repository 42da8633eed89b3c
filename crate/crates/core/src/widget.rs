//! Feature diagram to abstract dialog.
//!
//! Every feature with children owns a `Panel`; the panel hangs below the
//! feature's own control (or is the top-level widget for the root). And-group
//! members sit directly in their parent's panel, or-groups become a
//! `CheckboxGroup` and alternative groups a `RadioGroup` of `RadioButton`s.
//!
//! Widget ids: a feature's control is named after the feature, its panel is
//! `<Feature>/panel`, and a group box uses the group label `<Parent>/gN`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConsequenceReport, DecisionValue, FeatureState};
use crate::model::{FeatureDiagram, FeatureId, FeatureKind, GroupKind};
use crate::Configuration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WidgetKind {
    Panel,
    GroupTitle,
    Checkbox,
    RadioGroup,
    RadioButton,
    CheckboxGroup,
    Label,
}

impl WidgetKind {
    /// Whether the widget carries a user decision.
    pub fn is_interactive(self) -> bool {
        matches!(self, WidgetKind::Checkbox | WidgetKind::RadioButton)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validation {
    AtLeastOne,
    ExactlyOne,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidgetRef {
    Feature(String),
    Group(String),
}

// Fields are declared alphabetically so the serialized keys come out sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetNode {
    pub children: Vec<WidgetNode>,
    pub id: String,
    pub kind: WidgetKind,
    #[serde(rename = "ref")]
    pub reference: WidgetRef,
    pub title: String,
    pub validation: Option<Validation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnablementBinding {
    pub feature: String,
    pub widget: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omission {
    pub feature: String,
    pub reason: String,
}

/// How childless mandatory features show up in the dialog.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MandatoryLeaves {
    /// A non-interactive group title.
    #[default]
    Title,
    /// A plain non-interactive label.
    Label,
    /// Left out, with an omission record.
    Omit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransformOptions {
    pub mandatory_leaves: MandatoryLeaves,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetTree {
    pub bindings: Vec<EnablementBinding>,
    pub omissions: Vec<Omission>,
    pub root: WidgetNode,
    /// Name of the diagram the tree was built from.
    #[serde(skip)]
    model: String,
    /// Per feature: its control's widget id and the panel holding it.
    #[serde(skip)]
    placement: HashMap<String, Placement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Placement {
    control: Option<String>,
    container: Option<String>,
    /// Panels inside this feature's control, its own included.
    nested_panels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WidgetError {
    #[error("configuration belongs to model `{config}`, widget tree to `{tree}`")]
    ModelMismatch { tree: String, config: String },
    #[error("configuration has no feature `{0}` from the widget tree")]
    MissingFeature(String),
}

pub fn panel_id(feature: &str) -> String {
    format!("{feature}/panel")
}

pub fn transform(d: &FeatureDiagram) -> WidgetTree {
    transform_with(d, TransformOptions::default())
}

pub fn transform_with(d: &FeatureDiagram, opts: TransformOptions) -> WidgetTree {
    let mut b = Builder {
        d,
        opts,
        bindings: Vec::new(),
        omissions: Vec::new(),
        placement: HashMap::new(),
    };
    let root = b.panel(d.root());
    b.placement.insert(
        d.name().to_string(),
        Placement {
            control: Some(root.id.clone()),
            container: None,
            nested_panels: vec![root.id.clone()],
        },
    );
    for id in d.ids() {
        let panels = d
            .descendants(id)
            .chain(std::iter::once(id))
            .filter(|x| d.feature(*x).has_children())
            .map(|x| panel_id(d.name_of(x)))
            .collect();
        b.placement
            .get_mut(d.name_of(id))
            .expect("every feature placed")
            .nested_panels = panels;
    }
    WidgetTree {
        bindings: b.bindings,
        omissions: b.omissions,
        root,
        model: d.name().to_string(),
        placement: b.placement,
    }
}

struct Builder<'a> {
    d: &'a FeatureDiagram,
    opts: TransformOptions,
    bindings: Vec<EnablementBinding>,
    omissions: Vec<Omission>,
    placement: HashMap<String, Placement>,
}

impl Builder<'_> {
    fn panel(&mut self, f: FeatureId) -> WidgetNode {
        let d = self.d;
        let name = d.name_of(f).to_string();
        let id = panel_id(&name);
        let mut children = Vec::new();
        for &g in d.feature(f).groups() {
            let group = d.group(g);
            match group.kind() {
                GroupKind::And => {
                    for &m in group.members() {
                        if let Some(w) = self.member(m, &id) {
                            children.push(w);
                        }
                    }
                }
                kind => {
                    let label = d.group_label(g);
                    let (wk, validation) = match kind {
                        GroupKind::Or => (WidgetKind::CheckboxGroup, Validation::AtLeastOne),
                        _ => (WidgetKind::RadioGroup, Validation::ExactlyOne),
                    };
                    let members = group
                        .members()
                        .iter()
                        .filter_map(|m| self.member(*m, &id))
                        .collect();
                    children.push(WidgetNode {
                        children: members,
                        id: label.clone(),
                        kind: wk,
                        reference: WidgetRef::Group(label),
                        title: format!("{name} ({kind})"),
                        validation: Some(validation),
                    });
                }
            }
        }
        WidgetNode {
            children,
            id,
            kind: WidgetKind::Panel,
            reference: WidgetRef::Feature(name.clone()),
            title: name,
            validation: None,
        }
    }

    /// The control for a non-root feature, placed in panel `container`.
    fn member(&mut self, f: FeatureId, container: &str) -> Option<WidgetNode> {
        let d = self.d;
        let feature = d.feature(f);
        let name = feature.name().to_string();
        let in_alternative = feature
            .parent_group()
            .is_some_and(|g| d.group(g).kind() == GroupKind::Alternative);
        let kind = match feature.kind() {
            FeatureKind::Mandatory if feature.has_children() => WidgetKind::GroupTitle,
            FeatureKind::Mandatory => match self.opts.mandatory_leaves {
                MandatoryLeaves::Title => WidgetKind::GroupTitle,
                MandatoryLeaves::Label => WidgetKind::Label,
                MandatoryLeaves::Omit => {
                    self.omissions.push(Omission {
                        feature: name.clone(),
                        reason: "mandatory feature without children".into(),
                    });
                    self.placement.insert(
                        name,
                        Placement {
                            control: None,
                            container: Some(container.to_string()),
                            nested_panels: Vec::new(),
                        },
                    );
                    return None;
                }
            },
            _ if in_alternative => WidgetKind::RadioButton,
            _ => WidgetKind::Checkbox,
        };
        if kind.is_interactive() {
            self.bindings.push(EnablementBinding {
                feature: name.clone(),
                widget: name.clone(),
            });
        }
        let children = if feature.has_children() {
            vec![self.panel(f)]
        } else {
            Vec::new()
        };
        self.placement.insert(
            name.clone(),
            Placement {
                control: Some(name.clone()),
                container: Some(container.to_string()),
                nested_panels: Vec::new(),
            },
        );
        Some(WidgetNode {
            children,
            id: name.clone(),
            kind,
            reference: WidgetRef::Feature(name.clone()),
            title: name,
            validation: None,
        })
    }
}

impl WidgetTree {
    /// Byte-stable JSON: sorted keys, two-space indentation, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("widget tree serializes");
        s.push('\n');
        s
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// All widgets in document order.
    pub fn widgets(&self) -> Vec<&WidgetNode> {
        fn walk<'a>(n: &'a WidgetNode, out: &mut Vec<&'a WidgetNode>) {
            out.push(n);
            for c in &n.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn widget(&self, id: &str) -> Option<&WidgetNode> {
        self.widgets().into_iter().find(|w| w.id == id)
    }

    /// Widget id of a feature's control, `None` if the feature was omitted.
    pub fn control_of(&self, feature: &str) -> Option<&str> {
        self.placement.get(feature)?.control.as_deref()
    }

    /// Panel that holds a feature's control.
    pub fn container_of(&self, feature: &str) -> Option<&str> {
        self.placement.get(feature)?.container.as_deref()
    }

    /// Every widget whose appearance is governed by `feature`: its control
    /// and everything nested below it.
    pub fn governed_by(&self, feature: &str) -> Vec<&str> {
        let Some(control) = self.control_of(feature) else {
            return Vec::new();
        };
        fn walk<'a>(n: &'a WidgetNode, out: &mut Vec<&'a str>) {
            out.push(&n.id);
            for c in &n.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        if let Some(w) = self.widgets().into_iter().find(|w| w.id == control) {
            walk(w, &mut out);
        }
        out
    }
}

/// Widget id → enabled. Interactive widgets are enabled while their feature
/// is still open, everything else is always disabled.
pub fn compute_enablement(
    t: &WidgetTree,
    c: &Configuration,
) -> Result<BTreeMap<String, bool>, WidgetError> {
    let d = c.diagram();
    if d.name() != t.model {
        return Err(WidgetError::ModelMismatch {
            tree: t.model.clone(),
            config: d.name().to_string(),
        });
    }
    let mut out = BTreeMap::new();
    for w in t.widgets() {
        let enabled = match (&w.reference, w.kind.is_interactive()) {
            (WidgetRef::Feature(f), true) => {
                let id = d
                    .id(f)
                    .ok_or_else(|| WidgetError::MissingFeature(f.clone()))?;
                c.is_open(id)
            }
            _ => false,
        };
        out.insert(w.id.clone(), enabled);
    }
    Ok(out)
}

/// A consequence the user cannot see next to the control they used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub trigger: String,
    pub value: DecisionValue,
    /// Panel the affected controls live in.
    pub panel: String,
    pub affected: Vec<(String, FeatureState)>,
    pub cross_panel: bool,
}

/// One notification per panel outside the trigger's layout that holds a
/// changed feature. The layout is the panel around the trigger's control
/// plus every panel nested below that control.
pub fn derive_notifications(
    t: &WidgetTree,
    report: &ConsequenceReport,
    trigger: &str,
    value: DecisionValue,
) -> Vec<Notification> {
    let Some(place) = t.placement.get(trigger) else {
        return Vec::new();
    };
    let layout: BTreeSet<&str> = place
        .container
        .iter()
        .chain(place.nested_panels.iter())
        .map(String::as_str)
        .collect();
    let mut by_panel: Vec<(String, Vec<(String, FeatureState)>)> = Vec::new();
    for change in report.changed.iter().filter(|c| c.feature != trigger) {
        let Some(p) = t.placement.get(&change.feature) else {
            continue;
        };
        if p.control.is_none() {
            continue;
        }
        let Some(panel) = p.container.as_deref() else {
            continue;
        };
        if layout.contains(panel) {
            continue;
        }
        match by_panel.iter_mut().find(|(id, _)| id == panel) {
            Some((_, list)) => list.push((change.feature.clone(), change.to)),
            None => by_panel.push((panel.to_string(), vec![(change.feature.clone(), change.to)])),
        }
    }
    by_panel
        .into_iter()
        .map(|(panel, affected)| Notification {
            trigger: trigger.to_string(),
            value,
            panel,
            affected,
            cross_panel: true,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::parse_model;

    const DIALOG: &str = "feature Dialog {\n  mandatory CommonButtons\n  alternative { English German }\n  or { Ok Cancel }\n  optional Help\n}\n";

    #[test]
    fn dialog_shape() {
        let t = transform(&parse_model(DIALOG).unwrap());
        let kinds: Vec<_> = t
            .root
            .children
            .iter()
            .map(|w| (w.kind, w.id.as_str()))
            .collect();
        assert_eq!(
            kinds,
            vec![
                (WidgetKind::GroupTitle, "CommonButtons"),
                (WidgetKind::RadioGroup, "Dialog/g1"),
                (WidgetKind::CheckboxGroup, "Dialog/g2"),
                (WidgetKind::Checkbox, "Help"),
            ]
        );
        assert_eq!(t.root.children[1].validation, Some(Validation::ExactlyOne));
        assert_eq!(t.root.children[2].validation, Some(Validation::AtLeastOne));
        assert!(t.root.children[1]
            .children
            .iter()
            .all(|w| w.kind == WidgetKind::RadioButton));
        assert_eq!(t.bindings.len(), 5);
    }

    #[test]
    fn single_node_is_bare_panel() {
        let t = transform(&parse_model("feature Root { }").unwrap());
        assert_eq!(t.root.kind, WidgetKind::Panel);
        assert!(t.root.children.is_empty());
    }

    #[test]
    fn omission_mode_records_leaves() {
        let d = parse_model(DIALOG).unwrap();
        let t = transform_with(
            &d,
            TransformOptions {
                mandatory_leaves: MandatoryLeaves::Omit,
            },
        );
        assert_eq!(t.omissions.len(), 1);
        assert_eq!(t.omissions[0].feature, "CommonButtons");
        assert!(t.widget("CommonButtons").is_none());
    }

    #[test]
    fn fresh_config_enables_interactive_widgets() {
        let d = Arc::new(parse_model(DIALOG).unwrap());
        let t = transform(&d);
        let c = Configuration::init(d).unwrap();
        let e = compute_enablement(&t, &c).unwrap();
        for w in t.widgets() {
            assert_eq!(e[&w.id], w.kind.is_interactive(), "{}", w.id);
        }
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let t = transform(&parse_model(DIALOG).unwrap());
        let c = Configuration::init(Arc::new(parse_model("feature Other { }").unwrap())).unwrap();
        assert!(matches!(
            compute_enablement(&t, &c),
            Err(WidgetError::ModelMismatch { .. })
        ));
    }

    #[test]
    fn same_panel_consequences_stay_silent() {
        let d = Arc::new(parse_model(DIALOG).unwrap());
        let t = transform(&d);
        let c = Configuration::init(d).unwrap();
        let (_, report) = c
            .apply_decision("English", DecisionValue::Selected)
            .unwrap();
        assert!(derive_notifications(&t, &report, "English", DecisionValue::Selected).is_empty());
    }
}
