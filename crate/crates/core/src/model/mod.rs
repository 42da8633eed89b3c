//! Feature diagrams: the variability model.
//!
//! A [`FeatureDiagram`] is stored as a flat arena in document (pre-)order so
//! that every analysis can address features by [`FeatureId`] and iterate them
//! top-down. Diagrams are immutable once built.

mod count;
mod parse;
mod print;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use count::{count_variants, count_variants_with, has_valid_configuration, VariantCount};
pub use parse::parse_model;
pub use validate::{validate_model, ModelDiagnostic, Severity};

use thiserror::Error;

/// Index of a feature inside its diagram. Ids follow document order; the root is always id 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub(crate) usize);

impl FeatureId {
    pub const ROOT: FeatureId = FeatureId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(pub(crate) usize);

impl GroupId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How a feature relates to its parent.
///
/// Members of or/alternative groups carry no kind of their own; the group
/// governs them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Mandatory,
    Optional,
    Member,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    And,
    Or,
    Alternative,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::And => "and",
            GroupKind::Or => "or",
            GroupKind::Alternative => "alternative",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Requires,
    Excludes,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    name: String,
    kind: FeatureKind,
    parent: Option<FeatureId>,
    parent_group: Option<GroupId>,
    groups: Vec<GroupId>,
    annotations: BTreeMap<String, String>,
    subtree_end: usize,
}

impl Feature {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn parent(&self) -> Option<FeatureId> {
        self.parent
    }

    /// The group this feature is a member of (`None` for the root).
    pub fn parent_group(&self) -> Option<GroupId> {
        self.parent_group
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    pub fn annotations(&self) -> &BTreeMap<String, String> {
        &self.annotations
    }

    pub fn has_children(&self) -> bool {
        !self.groups.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    kind: GroupKind,
    parent: FeatureId,
    members: Vec<FeatureId>,
}

impl Group {
    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn parent(&self) -> FeatureId {
        self.parent
    }

    pub fn members(&self) -> &[FeatureId] {
        &self.members
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossTreeConstraint {
    pub kind: ConstraintKind,
    pub from: FeatureId,
    pub to: FeatureId,
}

/// Source position (1-based) used in parse errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

fn at(pos: &Option<Pos>) -> String {
    pos.map(|p| format!(" at {p}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("duplicate feature `{name}`{}", at(.pos))]
    DuplicateFeature { name: String, pos: Option<Pos> },
    #[error("{kind} group under `{parent}` has {members} member(s), at least 2 required{}", at(.pos))]
    GroupArity {
        parent: String,
        kind: GroupKind,
        members: usize,
        pos: Option<Pos>,
    },
    #[error("constraint references unknown feature `{name}`{}", at(.pos))]
    UnknownConstraintTarget { name: String, pos: Option<Pos> },
    #[error("constraint relates `{name}` to itself{}", at(.pos))]
    SelfConstraint { name: String, pos: Option<Pos> },
}

/// Owned, nested description of a feature subtree, used to build diagrams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureNode {
    pub name: String,
    pub annotations: BTreeMap<String, String>,
    pub groups: Vec<GroupNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupNode {
    /// Mandatory/optional children; the flag is `true` for mandatory.
    And(Vec<(bool, FeatureNode)>),
    Or(Vec<FeatureNode>),
    Alternative(Vec<FeatureNode>),
}

impl FeatureNode {
    pub fn new(name: impl Into<String>) -> Self {
        FeatureNode {
            name: name.into(),
            annotations: BTreeMap::new(),
            groups: Vec::new(),
        }
    }

    pub fn with_group(mut self, group: GroupNode) -> Self {
        self.groups.push(group);
        self
    }

    pub fn with_annotation(mut self, key: impl Into<String>, text: impl Into<String>) -> Self {
        self.annotations.insert(key.into(), text.into());
        self
    }
}

/// Constraint as written, with feature names not yet resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub from: String,
    pub to: String,
}

impl ConstraintSpec {
    pub fn requires(from: impl Into<String>, to: impl Into<String>) -> Self {
        ConstraintSpec {
            kind: ConstraintKind::Requires,
            from: from.into(),
            to: to.into(),
        }
    }

    pub fn excludes(a: impl Into<String>, b: impl Into<String>) -> Self {
        ConstraintSpec {
            kind: ConstraintKind::Excludes,
            from: a.into(),
            to: b.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureDiagram {
    name: String,
    features: Vec<Feature>,
    groups: Vec<Group>,
    constraints: Vec<CrossTreeConstraint>,
    by_name: HashMap<String, FeatureId>,
}

impl FeatureDiagram {
    /// Builds a diagram from a nested description.
    ///
    /// Structural invariants (unique names, resolvable constraints) are
    /// enforced here. Group arity is not: a one-member or-group is
    /// representable so that [`validate_model`] can report it.
    pub fn new(root: FeatureNode, constraints: Vec<ConstraintSpec>) -> Result<Self, ModelError> {
        let mut diagram = FeatureDiagram {
            name: root.name.clone(),
            features: Vec::new(),
            groups: Vec::new(),
            constraints: Vec::new(),
            by_name: HashMap::new(),
        };
        diagram.push_feature(root, FeatureKind::Mandatory, None, None)?;
        for c in constraints {
            let from = diagram.resolve_target(&c.from)?;
            let to = diagram.resolve_target(&c.to)?;
            if from == to {
                return Err(ModelError::SelfConstraint {
                    name: c.from,
                    pos: None,
                });
            }
            diagram.constraints.push(CrossTreeConstraint {
                kind: c.kind,
                from,
                to,
            });
        }
        Ok(diagram)
    }

    fn resolve_target(&self, name: &str) -> Result<FeatureId, ModelError> {
        self.id(name)
            .ok_or_else(|| ModelError::UnknownConstraintTarget {
                name: name.to_string(),
                pos: None,
            })
    }

    fn push_feature(
        &mut self,
        node: FeatureNode,
        kind: FeatureKind,
        parent: Option<FeatureId>,
        parent_group: Option<GroupId>,
    ) -> Result<FeatureId, ModelError> {
        let id = FeatureId(self.features.len());
        if self.by_name.insert(node.name.clone(), id).is_some() {
            return Err(ModelError::DuplicateFeature {
                name: node.name,
                pos: None,
            });
        }
        self.features.push(Feature {
            name: node.name,
            kind,
            parent,
            parent_group,
            groups: Vec::new(),
            annotations: node.annotations,
            subtree_end: id.0 + 1,
        });
        for group in node.groups {
            let gid = GroupId(self.groups.len());
            let (gkind, members): (GroupKind, Vec<(FeatureKind, FeatureNode)>) = match group {
                GroupNode::And(ms) => (
                    GroupKind::And,
                    ms.into_iter()
                        .map(|(mandatory, n)| {
                            let k = if mandatory {
                                FeatureKind::Mandatory
                            } else {
                                FeatureKind::Optional
                            };
                            (k, n)
                        })
                        .collect(),
                ),
                GroupNode::Or(ms) => (
                    GroupKind::Or,
                    ms.into_iter().map(|n| (FeatureKind::Member, n)).collect(),
                ),
                GroupNode::Alternative(ms) => (
                    GroupKind::Alternative,
                    ms.into_iter().map(|n| (FeatureKind::Member, n)).collect(),
                ),
            };
            self.groups.push(Group {
                kind: gkind,
                parent: id,
                members: Vec::new(),
            });
            self.features[id.0].groups.push(gid);
            for (k, m) in members {
                let mid = self.push_feature(m, k, Some(id), Some(gid))?;
                self.groups[gid.0].members.push(mid);
            }
        }
        self.features[id.0].subtree_end = self.features.len();
        Ok(id)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> FeatureId {
        FeatureId::ROOT
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, id: FeatureId) -> &Feature {
        &self.features[id.0]
    }

    pub fn group(&self, id: GroupId) -> &Group {
        &self.groups[id.0]
    }

    pub fn id(&self, name: &str) -> Option<FeatureId> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, id: FeatureId) -> &str {
        &self.features[id.0].name
    }

    /// All feature ids in document order.
    pub fn ids(&self) -> impl DoubleEndedIterator<Item = FeatureId> + ExactSizeIterator {
        (0..self.features.len()).map(FeatureId)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_ids(&self) -> impl Iterator<Item = GroupId> {
        (0..self.groups.len()).map(GroupId)
    }

    pub fn constraints(&self) -> &[CrossTreeConstraint] {
        &self.constraints
    }

    pub fn children(&self, id: FeatureId) -> impl Iterator<Item = FeatureId> + '_ {
        self.features[id.0]
            .groups
            .iter()
            .flat_map(move |g| self.groups[g.0].members.iter().copied())
    }

    /// Strict descendants of `id`, in document order.
    pub fn descendants(&self, id: FeatureId) -> impl Iterator<Item = FeatureId> + '_ {
        let end = self.subtree_end(id);
        (id.0 + 1..end).map(FeatureId)
    }

    /// One past the last id in the subtree of `id`. Pre-order makes every
    /// subtree a contiguous id range.
    pub fn subtree_end(&self, id: FeatureId) -> usize {
        self.features[id.0].subtree_end
    }

    pub fn is_ancestor(&self, ancestor: FeatureId, mut of: FeatureId) -> bool {
        while let Some(p) = self.features[of.0].parent {
            if p == ancestor {
                return true;
            }
            of = p;
        }
        false
    }

    /// Index of `group` within its parent's group list.
    pub fn group_position(&self, group: GroupId) -> usize {
        let parent = self.groups[group.0].parent;
        self.features[parent.0]
            .groups
            .iter()
            .position(|g| *g == group)
            .expect("group listed under its parent")
    }

    /// Stable textual reference for a group: `Parent/gN`.
    pub fn group_label(&self, group: GroupId) -> String {
        let parent = self.groups[group.0].parent;
        format!("{}/g{}", self.name_of(parent), self.group_position(group))
    }

    /// Nested description of the subtree rooted at `id` (constraints not included).
    pub fn subtree_node(&self, id: FeatureId) -> FeatureNode {
        let f = &self.features[id.0];
        FeatureNode {
            name: f.name.clone(),
            annotations: f.annotations.clone(),
            groups: f
                .groups
                .iter()
                .map(|g| {
                    let group = &self.groups[g.0];
                    match group.kind {
                        GroupKind::And => GroupNode::And(
                            group
                                .members
                                .iter()
                                .map(|m| {
                                    (
                                        self.features[m.0].kind == FeatureKind::Mandatory,
                                        self.subtree_node(*m),
                                    )
                                })
                                .collect(),
                        ),
                        GroupKind::Or => GroupNode::Or(
                            group
                                .members
                                .iter()
                                .map(|m| self.subtree_node(*m))
                                .collect(),
                        ),
                        GroupKind::Alternative => GroupNode::Alternative(
                            group
                                .members
                                .iter()
                                .map(|m| self.subtree_node(*m))
                                .collect(),
                        ),
                    }
                })
                .collect(),
        }
    }

    /// Constraints expressed by name, for rebuilding or printing.
    pub fn constraint_specs(&self) -> Vec<ConstraintSpec> {
        self.constraints
            .iter()
            .map(|c| ConstraintSpec {
                kind: c.kind,
                from: self.name_of(c.from).to_string(),
                to: self.name_of(c.to).to_string(),
            })
            .collect()
    }
}
