//! Interactive specialization of a feature diagram.
//!
//! A [`Configuration`] separates what the user decided from what follows
//! from it. The derived state is always recomputed from the decision list, so
//! retracting any decision is exact and no interaction sequence can trap the
//! user in an irreversible state.
//!
//! A decision is accepted only if the rule fixpoint is contradiction-free and
//! some complete valid configuration still extends it; otherwise it is
//! rejected atomically with a [`Conflict`] explaining why.

mod decisions;
mod propagate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decisions::{parse_decisions, DecisionParseError};
pub use propagate::RuleKind;

use crate::model::{
    has_valid_configuration, ConstraintKind, FeatureDiagram, FeatureId, FeatureKind, GroupKind,
};
use propagate::{Clash, Entry, Lit, Propagator, RuleBase};

/// The 1 and 0 of a specialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionValue {
    Selected,
    Deselected,
}

impl DecisionValue {
    pub fn as_bool(self) -> bool {
        self == DecisionValue::Selected
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            DecisionValue::Selected
        } else {
            DecisionValue::Deselected
        }
    }

    pub fn opposite(self) -> Self {
        Self::from_bool(!self.as_bool())
    }
}

impl fmt::Display for DecisionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionValue::Selected => "selected",
            DecisionValue::Deselected => "deselected",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureState {
    Selected,
    Deselected,
    Undecided,
}

impl FeatureState {
    pub fn from_option(v: Option<bool>) -> Self {
        match v {
            Some(true) => FeatureState::Selected,
            Some(false) => FeatureState::Deselected,
            None => FeatureState::Undecided,
        }
    }

    pub fn as_option(self) -> Option<bool> {
        match self {
            FeatureState::Selected => Some(true),
            FeatureState::Deselected => Some(false),
            FeatureState::Undecided => None,
        }
    }
}

impl fmt::Display for FeatureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureState::Selected => "selected",
            FeatureState::Deselected => "deselected",
            FeatureState::Undecided => "undecided",
        })
    }
}

/// One step of a conflict explanation: `feature` takes `value` by `rule`
/// because of the literals in `because`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonLink {
    pub rule: RuleKind,
    pub feature: String,
    pub value: DecisionValue,
    pub because: Vec<(String, DecisionValue)>,
}

impl fmt::Display for ReasonLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = serde_json::to_value(self.rule).expect("rule kinds serialize");
        write!(
            f,
            "{} {} by {}",
            self.feature,
            self.value,
            rule.as_str().unwrap_or("?")
        )?;
        if !self.because.is_empty() {
            let parts: Vec<String> = self
                .because
                .iter()
                .map(|(n, v)| format!("{n} {v}"))
                .collect();
            write!(f, " (from {})", parts.join(", "))?;
        }
        Ok(())
    }
}

/// A rejected decision with the implications that rule it out.
///
/// The chain is ordered so that every link's premises are established by a
/// decision, the root, or an earlier link. Its last two derivations for
/// `feature` disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub feature: String,
    pub value: DecisionValue,
    pub clash_feature: String,
    pub reasons: Vec<ReasonLink>,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = match self.value {
            DecisionValue::Selected => "select",
            DecisionValue::Deselected => "deselect",
        };
        write!(
            f,
            "cannot {verb} {}: {} would be both selected and deselected",
            self.feature, self.clash_feature
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub feature: String,
    pub from: FeatureState,
    pub to: FeatureState,
}

/// Features whose derived state changed because of a decision.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsequenceReport {
    pub changed: Vec<StateChange>,
}

/// An unmet requirement keeping a configuration from being complete.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obligation {
    Undecided {
        feature: String,
    },
    Group {
        group: String,
        group_kind: String,
        parent: String,
        selected: usize,
        undecided: usize,
    },
    RootDeselected {
        feature: String,
    },
    ParentDeselected {
        feature: String,
        parent: String,
    },
    MandatoryDeselected {
        feature: String,
        parent: String,
    },
    RequiresViolated {
        from: String,
        to: String,
    },
    ExcludesViolated {
        from: String,
        to: String,
    },
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obligation::Undecided { feature } => write!(f, "{feature} is undecided"),
            Obligation::Group {
                group,
                group_kind,
                parent,
                selected,
                ..
            } => {
                let need = if group_kind == "alternative" {
                    "exactly one"
                } else {
                    "at least one"
                };
                write!(f, "{group_kind} group {group} under {parent} needs {need} selected member ({selected} selected)")
            }
            Obligation::RootDeselected { feature } => write!(f, "root {feature} is deselected"),
            Obligation::ParentDeselected { feature, parent } => {
                write!(f, "{feature} is selected but its parent {parent} is not")
            }
            Obligation::MandatoryDeselected { feature, parent } => {
                write!(
                    f,
                    "mandatory {feature} is deselected under selected {parent}"
                )
            }
            Obligation::RequiresViolated { from, to } => write!(f, "{from} requires {to}"),
            Obligation::ExcludesViolated { from, to } => write!(f, "{from} excludes {to}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "obligations", rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete(Vec<Obligation>),
}

impl Status {
    pub fn is_complete(&self) -> bool {
        matches!(self, Status::Complete)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalizePolicy {
    /// Only already-complete configurations finalize.
    Strict,
    /// Undecided optional and or-group features default to deselected.
    DefaultOff,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("{0}")]
    Conflict(Box<Conflict>),
    #[error("no user decision on `{0}`")]
    NoDecision(String),
    #[error("configuration is incomplete: {}", join(.0))]
    Incomplete(Vec<Obligation>),
    #[error("model admits no valid configuration")]
    VoidModel,
}

fn join(obligations: &[Obligation]) -> String {
    obligations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A (possibly partial) specialization of one diagram.
#[derive(Clone, Debug)]
pub struct Configuration {
    diagram: Arc<FeatureDiagram>,
    rules: Arc<RuleBase>,
    decisions: Vec<(FeatureId, DecisionValue)>,
    derived: Vec<FeatureState>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        *self.diagram == *other.diagram
            && self.decisions == other.decisions
            && self.derived == other.derived
    }
}

fn assumptions_of(values: &[Option<bool>]) -> Vec<(FeatureId, bool)> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|b| (FeatureId(i), b)))
        .collect()
}

/// Completes rule propagation: a feature left open by the rules whose one
/// value has no valid completion takes the other value.
fn settle(d: &FeatureDiagram, mut values: Vec<Option<bool>>) -> Vec<FeatureState> {
    let base = assumptions_of(&values);
    let mut probe = base.clone();
    for (i, slot) in values.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        for v in [true, false] {
            probe.truncate(base.len());
            probe.push((FeatureId(i), v));
            if !has_valid_configuration(d, &probe) {
                *slot = Some(!v);
                break;
            }
        }
    }
    values.into_iter().map(FeatureState::from_option).collect()
}

enum Rejection {
    Clash(Box<Conflict>),
    NoCompletion,
}

impl Configuration {
    /// Root selected, mandatory chains selected, everything else open.
    pub fn init(diagram: Arc<FeatureDiagram>) -> Result<Self, ConfigError> {
        let rules = Arc::new(RuleBase::new(&diagram));
        let p = Propagator::new(&rules, diagram.len()).map_err(|_| ConfigError::VoidModel)?;
        let values: Vec<Option<bool>> = p.values().collect();
        drop(p);
        if !has_valid_configuration(&diagram, &assumptions_of(&values)) {
            return Err(ConfigError::VoidModel);
        }
        let derived = settle(&diagram, values);
        Ok(Configuration {
            diagram,
            rules,
            decisions: Vec::new(),
            derived,
        })
    }

    /// Replays `decisions` in order from a fresh configuration.
    pub fn from_decisions(
        diagram: Arc<FeatureDiagram>,
        decisions: &[(FeatureId, DecisionValue)],
    ) -> Result<Self, ConfigError> {
        let mut c = Configuration::init(diagram)?;
        for &(f, v) in decisions {
            c = c.apply(f, v)?.0;
        }
        Ok(c)
    }

    /// [`Configuration::from_decisions`] with features given by name, as
    /// read from a `.dec` file.
    pub fn from_named(
        diagram: Arc<FeatureDiagram>,
        decisions: &[(String, DecisionValue)],
    ) -> Result<Self, ConfigError> {
        let mut c = Configuration::init(diagram)?;
        for (name, v) in decisions {
            c = c.apply_decision(name, *v)?.0;
        }
        Ok(c)
    }

    /// Takes a complete 0/1 assignment verbatim, without propagation.
    ///
    /// Every feature becomes a user decision. The result may violate the
    /// diagram's semantics; [`Configuration::status`] reports how.
    pub fn from_assignment(diagram: Arc<FeatureDiagram>, assignment: &[bool]) -> Self {
        assert_eq!(
            assignment.len(),
            diagram.len(),
            "assignment covers every feature"
        );
        let rules = Arc::new(RuleBase::new(&diagram));
        Configuration {
            decisions: diagram
                .ids()
                .map(|id| (id, DecisionValue::from_bool(assignment[id.index()])))
                .collect(),
            derived: assignment
                .iter()
                .map(|b| FeatureState::from_option(Some(*b)))
                .collect(),
            diagram,
            rules,
        }
    }

    pub fn diagram(&self) -> &FeatureDiagram {
        &self.diagram
    }

    pub fn diagram_arc(&self) -> &Arc<FeatureDiagram> {
        &self.diagram
    }

    /// User decisions in the order they were made.
    pub fn decisions(&self) -> &[(FeatureId, DecisionValue)] {
        &self.decisions
    }

    pub fn decision(&self, f: FeatureId) -> Option<DecisionValue> {
        self.decisions
            .iter()
            .find(|(id, _)| *id == f)
            .map(|(_, v)| *v)
    }

    pub fn state(&self, f: FeatureId) -> FeatureState {
        self.derived[f.index()]
    }

    pub fn states(&self) -> &[FeatureState] {
        &self.derived
    }

    pub fn resolve(&self, name: &str) -> Result<FeatureId, ConfigError> {
        self.diagram
            .id(name)
            .ok_or_else(|| ConfigError::UnknownFeature(name.to_string()))
    }

    /// Applies a decision by feature name.
    pub fn apply_decision(
        &self,
        feature: &str,
        value: DecisionValue,
    ) -> Result<(Configuration, ConsequenceReport), ConfigError> {
        let id = self.resolve(feature)?;
        self.apply(id, value)
    }

    /// Applies a decision. A previous user decision on the same feature is
    /// replaced. On conflict `self` is untouched and the conflict explains
    /// the rejection.
    pub fn apply(
        &self,
        f: FeatureId,
        value: DecisionValue,
    ) -> Result<(Configuration, ConsequenceReport), ConfigError> {
        let prior: Vec<_> = self
            .decisions
            .iter()
            .copied()
            .filter(|(id, _)| *id != f)
            .collect();
        let derived = match self.fixpoint(&prior, Some((f, value))) {
            Ok(derived) => derived,
            Err(Rejection::Clash(conflict)) => return Err(ConfigError::Conflict(conflict)),
            Err(Rejection::NoCompletion) => {
                return Err(ConfigError::Conflict(Box::new(
                    self.explain_no_completion(&prior, f, value),
                )))
            }
        };
        let mut decisions = prior;
        decisions.push((f, value));
        let next = Configuration {
            diagram: self.diagram.clone(),
            rules: self.rules.clone(),
            decisions,
            derived,
        };
        let report = self.report(&next);
        Ok((next, report))
    }

    /// Removes the user decision on `feature` and recomputes from the rest.
    pub fn retract_decision(&self, feature: &str) -> Result<Configuration, ConfigError> {
        let id = self.resolve(feature)?;
        self.retract(id)
    }

    pub fn retract(&self, f: FeatureId) -> Result<Configuration, ConfigError> {
        if self.decision(f).is_none() {
            return Err(ConfigError::NoDecision(self.diagram.name_of(f).to_string()));
        }
        let rest: Vec<_> = self
            .decisions
            .iter()
            .copied()
            .filter(|(id, _)| *id != f)
            .collect();
        // a subset of a satisfiable decision set stays satisfiable
        let derived = self
            .fixpoint(&rest, None)
            .unwrap_or_else(|_| panic!("retracting a decision cannot introduce a conflict"));
        Ok(Configuration {
            diagram: self.diagram.clone(),
            rules: self.rules.clone(),
            decisions: rest,
            derived,
        })
    }

    /// Retracts the most recent decision, if any.
    pub fn undo(&self) -> Option<(FeatureId, Configuration)> {
        let (f, _) = *self.decisions.last()?;
        Some((f, self.retract(f).expect("last decision exists")))
    }

    /// Whether `value` on `f` would be accepted in place of the current decision on `f`.
    pub fn would_accept(&self, f: FeatureId, value: DecisionValue) -> bool {
        let prior: Vec<_> = self
            .decisions
            .iter()
            .copied()
            .filter(|(id, _)| *id != f)
            .collect();
        self.fixpoint(&prior, Some((f, value))).is_ok()
    }

    /// Whether the user can still choose freely for `f`: with their own
    /// decision on `f` set aside, both values are acceptable.
    pub fn is_open(&self, f: FeatureId) -> bool {
        if self.decision(f).is_none() {
            return self.derived[f.index()] == FeatureState::Undecided;
        }
        let prior: Vec<_> = self
            .decisions
            .iter()
            .copied()
            .filter(|(id, _)| *id != f)
            .collect();
        match self.fixpoint(&prior, None) {
            Ok(derived) => derived[f.index()] == FeatureState::Undecided,
            Err(_) => unreachable!("a subset of accepted decisions stays consistent"),
        }
    }

    fn run(
        &self,
        prior: &[(FeatureId, DecisionValue)],
        new: Option<(FeatureId, DecisionValue)>,
    ) -> Result<Propagator<'_>, (Propagator<'_>, Clash)> {
        let mut p =
            Propagator::new(&self.rules, self.diagram.len()).expect("diagram admits its root");
        for &(f, v) in prior.iter().chain(new.iter()) {
            if let Err(clash) = p.decide(f, v.as_bool()) {
                return Err((p, clash));
            }
        }
        Ok(p)
    }

    fn fixpoint(
        &self,
        prior: &[(FeatureId, DecisionValue)],
        new: Option<(FeatureId, DecisionValue)>,
    ) -> Result<Vec<FeatureState>, Rejection> {
        match self.run(prior, new) {
            Ok(p) => {
                let assumptions = assumptions_of(&p.values().collect::<Vec<_>>());
                if !has_valid_configuration(&self.diagram, &assumptions) {
                    return Err(Rejection::NoCompletion);
                }
                Ok(settle(&self.diagram, p.values().collect()))
            }
            Err((p, clash)) => {
                let (f, v) = new.expect("prior decisions are consistent");
                Err(Rejection::Clash(Box::new(
                    self.explain_clash(&p, clash, f, v),
                )))
            }
        }
    }

    fn link(&self, e: &Entry) -> ReasonLink {
        ReasonLink {
            rule: e.rule,
            feature: self.diagram.name_of(e.lit.feature).to_string(),
            value: DecisionValue::from_bool(e.lit.value),
            because: e
                .because
                .iter()
                .map(|l| {
                    (
                        self.diagram.name_of(l.feature).to_string(),
                        DecisionValue::from_bool(l.value),
                    )
                })
                .collect(),
        }
    }

    fn explain_clash(
        &self,
        p: &Propagator<'_>,
        clash: Clash,
        f: FeatureId,
        v: DecisionValue,
    ) -> Conflict {
        let mut needed: Vec<Lit> = clash.clash.because.clone();
        needed.push(Lit {
            feature: clash.clash.lit.feature,
            value: !clash.clash.lit.value,
        });
        let mut reasons: Vec<ReasonLink> = p
            .explain(&needed)
            .into_iter()
            .map(|e| self.link(e))
            .collect();
        reasons.push(self.link(&clash.clash));
        Conflict {
            feature: self.diagram.name_of(f).to_string(),
            value: v,
            clash_feature: self.diagram.name_of(clash.clash.lit.feature).to_string(),
            reasons,
        }
    }

    /// Shrinks the prior decisions to a subset that alone rules out `(f, v)`.
    fn explain_no_completion(
        &self,
        prior: &[(FeatureId, DecisionValue)],
        f: FeatureId,
        v: DecisionValue,
    ) -> Conflict {
        let mut core: Vec<(FeatureId, DecisionValue)> = prior.to_vec();
        let mut i = 0;
        while i < core.len() {
            let mut trial = core.clone();
            trial.remove(i);
            if self.fixpoint(&trial, Some((f, v))).is_err() {
                core = trial;
            } else {
                i += 1;
            }
        }
        let mut reasons: Vec<ReasonLink> = core
            .iter()
            .map(|(id, val)| ReasonLink {
                rule: RuleKind::Decision,
                feature: self.diagram.name_of(*id).to_string(),
                value: *val,
                because: Vec::new(),
            })
            .collect();
        let name = self.diagram.name_of(f).to_string();
        reasons.push(ReasonLink {
            rule: RuleKind::NoValidCompletion,
            feature: name.clone(),
            value: v.opposite(),
            because: core
                .iter()
                .map(|(id, val)| (self.diagram.name_of(*id).to_string(), *val))
                .collect(),
        });
        reasons.push(ReasonLink {
            rule: RuleKind::Decision,
            feature: name.clone(),
            value: v,
            because: Vec::new(),
        });
        Conflict {
            feature: name.clone(),
            value: v,
            clash_feature: name,
            reasons,
        }
    }

    fn report(&self, next: &Configuration) -> ConsequenceReport {
        ConsequenceReport {
            changed: self
                .diagram
                .ids()
                .filter(|id| self.derived[id.index()] != next.derived[id.index()])
                .map(|id| StateChange {
                    feature: self.diagram.name_of(id).to_string(),
                    from: self.derived[id.index()],
                    to: next.derived[id.index()],
                })
                .collect(),
        }
    }

    /// Complete iff every feature is decided and all group and constraint
    /// semantics hold; otherwise lists what is missing.
    pub fn status(&self) -> Status {
        let d = &*self.diagram;
        let s = |id: FeatureId| self.derived[id.index()];
        let mut out = Vec::new();
        let mut covered = vec![false; d.len()];

        if s(d.root()) == FeatureState::Deselected {
            out.push(Obligation::RootDeselected {
                feature: d.name().to_string(),
            });
        }
        for gid in d.group_ids() {
            let g = d.group(gid);
            if g.kind() == GroupKind::And || s(g.parent()) != FeatureState::Selected {
                continue;
            }
            let selected = g
                .members()
                .iter()
                .filter(|m| s(**m) == FeatureState::Selected)
                .count();
            let undecided = g
                .members()
                .iter()
                .filter(|m| s(**m) == FeatureState::Undecided)
                .count();
            let met = match g.kind() {
                GroupKind::Alternative => selected == 1,
                _ => selected >= 1,
            };
            if !met {
                for m in g.members() {
                    covered[m.index()] = true;
                }
                out.push(Obligation::Group {
                    group: d.group_label(gid),
                    group_kind: g.kind().to_string(),
                    parent: d.name_of(g.parent()).to_string(),
                    selected,
                    undecided,
                });
            }
        }
        for id in d.ids() {
            let f = d.feature(id);
            let Some(parent) = f.parent() else { continue };
            match (s(parent), s(id)) {
                (FeatureState::Selected, FeatureState::Undecided) if !covered[id.index()] => out
                    .push(Obligation::Undecided {
                        feature: f.name().to_string(),
                    }),
                (FeatureState::Deselected, FeatureState::Selected) => {
                    out.push(Obligation::ParentDeselected {
                        feature: f.name().to_string(),
                        parent: d.name_of(parent).to_string(),
                    })
                }
                (FeatureState::Selected, FeatureState::Deselected)
                    if f.kind() == FeatureKind::Mandatory =>
                {
                    out.push(Obligation::MandatoryDeselected {
                        feature: f.name().to_string(),
                        parent: d.name_of(parent).to_string(),
                    })
                }
                (FeatureState::Undecided, FeatureState::Undecided) => {}
                _ => {}
            }
        }
        for c in d.constraints() {
            let (a, b) = (s(c.from), s(c.to));
            let (from, to) = (d.name_of(c.from).to_string(), d.name_of(c.to).to_string());
            match c.kind {
                ConstraintKind::Requires
                    if a == FeatureState::Selected && b == FeatureState::Deselected =>
                {
                    out.push(Obligation::RequiresViolated { from, to })
                }
                ConstraintKind::Excludes
                    if a == FeatureState::Selected && b == FeatureState::Selected =>
                {
                    out.push(Obligation::ExcludesViolated { from, to })
                }
                _ => {}
            }
        }
        // anything still undecided below an undecided ancestor is implied by that ancestor's entry
        let any_undecided = self.derived.contains(&FeatureState::Undecided);
        if out.is_empty() && any_undecided {
            for id in d.ids().filter(|id| s(*id) == FeatureState::Undecided) {
                out.push(Obligation::Undecided {
                    feature: d.name_of(id).to_string(),
                });
            }
        }
        if out.is_empty() {
            Status::Complete
        } else {
            Status::Incomplete(out)
        }
    }

    /// Resolves the configuration to a complete 0/1 assignment.
    pub fn finalize(&self, policy: FinalizePolicy) -> Result<Configuration, ConfigError> {
        let mut c = self.clone();
        if policy == FinalizePolicy::DefaultOff {
            for id in self.diagram.ids() {
                if c.state(id) != FeatureState::Undecided {
                    continue;
                }
                let defaultable = match self.diagram.feature(id).kind() {
                    FeatureKind::Optional => true,
                    FeatureKind::Member => {
                        let g = self
                            .diagram
                            .feature(id)
                            .parent_group()
                            .expect("members belong to a group");
                        self.diagram.group(g).kind() == GroupKind::Or
                    }
                    FeatureKind::Mandatory => false,
                };
                if defaultable {
                    if let Ok((next, _)) = c.apply(id, DecisionValue::Deselected) {
                        c = next;
                    }
                }
            }
        }
        match c.status() {
            Status::Complete => Ok(c),
            Status::Incomplete(obligations) => Err(ConfigError::Incomplete(obligations)),
        }
    }

    /// Name → state, in document order.
    pub fn named_states(&self) -> Vec<(String, FeatureState)> {
        self.diagram
            .ids()
            .map(|id| (self.diagram.name_of(id).to_string(), self.state(id)))
            .collect()
    }
}
