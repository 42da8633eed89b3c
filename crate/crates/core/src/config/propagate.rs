//! Clause encoding of diagram semantics and rule-tagged unit propagation.
//!
//! Every group, parent/child edge and cross-tree constraint becomes a clause.
//! Unit propagation over those clauses is exactly the rule set the engine
//! advertises: each implied literal is tagged with the [`RuleKind`] that names
//! the direction in which its clause fired, and with the literals that
//! triggered it, so conflicts can be explained as a chain of implications.

use serde::Serialize;

use crate::model::{ConstraintKind, FeatureDiagram, FeatureId, FeatureKind, GroupKind};

/// Why a feature received its state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// The concept (root) is always part of the system.
    Root,
    /// A user decision.
    Decision,
    /// Deselecting a feature deselects its children.
    DeselectChild,
    /// Selecting a feature selects its parent.
    SelectParent,
    /// Selecting a feature selects its mandatory children.
    SelectMandatory,
    /// A deselected mandatory child deselects its parent.
    DeselectParentOfMandatory,
    /// One selected alternative deselects its siblings.
    AlternativeExclusive,
    /// The last open member of an alternative group under a selected parent is selected.
    AlternativeLastForced,
    /// The last open member of an or-group under a selected parent is selected.
    OrLastForced,
    /// A group whose members are all deselected deselects its parent.
    EmptyGroupDeselectsParent,
    /// `a requires b`: a selected selects b.
    Requires,
    /// `a requires b`: b deselected deselects a.
    RequiresBackward,
    /// `a excludes b`: either selected deselects the other.
    Excludes,
    /// The listed decisions leave no valid configuration with the other value.
    NoValidCompletion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Lit {
    pub feature: FeatureId,
    pub value: bool,
}

impl Lit {
    fn new(feature: FeatureId, value: bool) -> Self {
        Lit { feature, value }
    }
}

#[derive(Clone, Copy, Debug)]
enum Origin {
    Root,
    ParentChild,
    Mandatory,
    AtLeastOne(GroupKind),
    AtMostOne,
    Requires,
    Excludes,
}

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    origin: Origin,
}

impl Clause {
    /// Rule name for this clause implying `lit`.
    fn rule_for(&self, lit: Lit) -> RuleKind {
        match self.origin {
            Origin::Root => RuleKind::Root,
            Origin::ParentChild => {
                if lit.value {
                    RuleKind::SelectParent
                } else {
                    RuleKind::DeselectChild
                }
            }
            Origin::Mandatory => {
                if lit.value {
                    RuleKind::SelectMandatory
                } else {
                    RuleKind::DeselectParentOfMandatory
                }
            }
            Origin::AtLeastOne(kind) => match (lit.value, kind) {
                (false, _) => RuleKind::EmptyGroupDeselectsParent,
                (true, GroupKind::Alternative) => RuleKind::AlternativeLastForced,
                (true, _) => RuleKind::OrLastForced,
            },
            Origin::AtMostOne => RuleKind::AlternativeExclusive,
            Origin::Requires => {
                if lit.value {
                    RuleKind::Requires
                } else {
                    RuleKind::RequiresBackward
                }
            }
            Origin::Excludes => RuleKind::Excludes,
        }
    }
}

/// Clause database for one diagram.
#[derive(Debug)]
pub(crate) struct RuleBase {
    clauses: Vec<Clause>,
    occurs: Vec<Vec<usize>>,
}

impl RuleBase {
    pub fn new(d: &FeatureDiagram) -> Self {
        let mut clauses = vec![Clause {
            lits: vec![Lit::new(d.root(), true)],
            origin: Origin::Root,
        }];
        for id in d.ids().skip(1) {
            let f = d.feature(id);
            let parent = f.parent().expect("non-root feature has a parent");
            clauses.push(Clause {
                lits: vec![Lit::new(id, false), Lit::new(parent, true)],
                origin: Origin::ParentChild,
            });
            if f.kind() == FeatureKind::Mandatory {
                clauses.push(Clause {
                    lits: vec![Lit::new(parent, false), Lit::new(id, true)],
                    origin: Origin::Mandatory,
                });
            }
        }
        for gid in d.group_ids() {
            let g = d.group(gid);
            if g.kind() == GroupKind::And {
                continue;
            }
            let mut lits = vec![Lit::new(g.parent(), false)];
            lits.extend(g.members().iter().map(|m| Lit::new(*m, true)));
            clauses.push(Clause {
                lits,
                origin: Origin::AtLeastOne(g.kind()),
            });
            if g.kind() == GroupKind::Alternative {
                for (i, a) in g.members().iter().enumerate() {
                    for b in &g.members()[i + 1..] {
                        clauses.push(Clause {
                            lits: vec![Lit::new(*a, false), Lit::new(*b, false)],
                            origin: Origin::AtMostOne,
                        });
                    }
                }
            }
        }
        for c in d.constraints() {
            let (lits, origin) = match c.kind {
                ConstraintKind::Requires => (
                    vec![Lit::new(c.from, false), Lit::new(c.to, true)],
                    Origin::Requires,
                ),
                ConstraintKind::Excludes => (
                    vec![Lit::new(c.from, false), Lit::new(c.to, false)],
                    Origin::Excludes,
                ),
            };
            clauses.push(Clause { lits, origin });
        }
        let mut occurs = vec![Vec::new(); d.len()];
        for (i, c) in clauses.iter().enumerate() {
            for l in &c.lits {
                occurs[l.feature.index()].push(i);
            }
        }
        RuleBase { clauses, occurs }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Entry {
    pub lit: Lit,
    pub rule: RuleKind,
    /// Literals (already on the trail) that triggered this one.
    pub because: Vec<Lit>,
}

/// A derivation contradicting the value already on the trail for the same feature.
#[derive(Clone, Debug)]
pub(crate) struct Clash {
    pub clash: Entry,
}

pub(crate) struct Propagator<'a> {
    rules: &'a RuleBase,
    value: Vec<Option<(bool, usize)>>,
    pub trail: Vec<Entry>,
    head: usize,
}

impl<'a> Propagator<'a> {
    /// Starts from the root unit clause, already propagated.
    pub fn new(rules: &'a RuleBase, len: usize) -> Result<Self, Clash> {
        let mut p = Propagator {
            rules,
            value: vec![None; len],
            trail: Vec::new(),
            head: 0,
        };
        for clause in rules.clauses.iter().filter(|c| c.lits.len() == 1) {
            let lit = clause.lits[0];
            p.assign(Entry {
                lit,
                rule: clause.rule_for(lit),
                because: Vec::new(),
            })?;
        }
        p.propagate()?;
        Ok(p)
    }

    pub fn value(&self, f: FeatureId) -> Option<bool> {
        self.value[f.index()].map(|(v, _)| v)
    }

    pub fn values(&self) -> impl Iterator<Item = Option<bool>> + '_ {
        self.value.iter().map(|v| v.map(|(b, _)| b))
    }

    fn assign(&mut self, entry: Entry) -> Result<(), Clash> {
        let f = entry.lit.feature.index();
        match self.value[f] {
            Some((v, _)) if v == entry.lit.value => Ok(()),
            Some(_) => Err(Clash { clash: entry }),
            None => {
                self.value[f] = Some((entry.lit.value, self.trail.len()));
                self.trail.push(entry);
                Ok(())
            }
        }
    }

    pub fn decide(&mut self, feature: FeatureId, value: bool) -> Result<(), Clash> {
        self.assign(Entry {
            lit: Lit::new(feature, value),
            rule: RuleKind::Decision,
            because: Vec::new(),
        })?;
        self.propagate()
    }

    fn propagate(&mut self) -> Result<(), Clash> {
        while self.head < self.trail.len() {
            let f = self.trail[self.head].lit.feature;
            self.head += 1;
            for &ci in &self.rules.occurs[f.index()] {
                let clause = &self.rules.clauses[ci];
                let mut open = None;
                let mut open_count = 0;
                let mut satisfied = false;
                for l in &clause.lits {
                    match self.value(l.feature) {
                        Some(v) if v == l.value => {
                            satisfied = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            open_count += 1;
                            open = Some(*l);
                        }
                    }
                }
                if satisfied || open_count > 1 {
                    continue;
                }
                let implied = match open {
                    Some(l) => l,
                    // every literal is false: re-derive the most recent one's opposite
                    None => *clause
                        .lits
                        .iter()
                        .max_by_key(|l| self.value[l.feature.index()].map(|(_, at)| at))
                        .expect("clauses are non-empty"),
                };
                let because = clause
                    .lits
                    .iter()
                    .filter(|l| l.feature != implied.feature)
                    .map(|l| Lit::new(l.feature, !l.value))
                    .collect();
                self.assign(Entry {
                    lit: implied,
                    rule: clause.rule_for(implied),
                    because,
                })?;
            }
        }
        Ok(())
    }

    /// Trail entries needed to derive `lits`, in trail order.
    pub fn explain(&self, lits: &[Lit]) -> Vec<&Entry> {
        let mut needed = vec![false; self.trail.len()];
        let mut stack: Vec<usize> = lits
            .iter()
            .filter_map(|l| self.value[l.feature.index()].map(|(_, at)| at))
            .collect();
        while let Some(at) = stack.pop() {
            if needed[at] {
                continue;
            }
            needed[at] = true;
            for l in &self.trail[at].because {
                if let Some((_, a)) = self.value[l.feature.index()] {
                    stack.push(a);
                }
            }
        }
        needed
            .iter()
            .enumerate()
            .filter(|(_, n)| **n)
            .map(|(i, _)| &self.trail[i])
            .collect()
    }
}
