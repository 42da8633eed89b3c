//! Independent oracles and random generators shared by the integration tests.
//!
//! Nothing here calls into the counting or propagation code under test; the
//! validity predicate is written directly against the diagram's tree.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use varigen_core::model::{
    ConstraintKind, ConstraintSpec, FeatureDiagram, FeatureId, FeatureKind, FeatureNode, GroupKind,
    GroupNode,
};

/// Whether a complete 0/1 assignment is a valid configuration.
pub fn is_valid(d: &FeatureDiagram, s: &[bool]) -> bool {
    if !s[0] {
        return false;
    }
    for id in d.ids().skip(1) {
        let f = d.feature(id);
        let parent = f.parent().unwrap();
        if s[id.index()] && !s[parent.index()] {
            return false;
        }
        if f.kind() == FeatureKind::Mandatory && s[parent.index()] && !s[id.index()] {
            return false;
        }
    }
    for g in d.groups() {
        if !s[g.parent().index()] {
            continue;
        }
        let on = g.members().iter().filter(|m| s[m.index()]).count();
        match g.kind() {
            GroupKind::And => {}
            GroupKind::Or => {
                if on == 0 {
                    return false;
                }
            }
            GroupKind::Alternative => {
                if on != 1 {
                    return false;
                }
            }
        }
    }
    d.constraints().iter().all(|c| match c.kind {
        ConstraintKind::Requires => !s[c.from.index()] || s[c.to.index()],
        ConstraintKind::Excludes => !(s[c.from.index()] && s[c.to.index()]),
    })
}

/// Visits every valid configuration. Assignments are built in document
/// order, so a child never outlives a deselected parent and a mandatory
/// child follows its selected parent; every leaf is then checked in full by
/// [`is_valid`].
pub fn for_each_valid(d: &FeatureDiagram, visit: &mut impl FnMut(&[bool])) {
    fn go(d: &FeatureDiagram, i: usize, s: &mut Vec<bool>, visit: &mut impl FnMut(&[bool])) {
        if i == s.len() {
            if is_valid(d, s) {
                visit(s);
            }
            return;
        }
        let f = &d.features()[i];
        let choices: &[bool] = match f.parent() {
            None => &[true],
            Some(p) if !s[p.index()] => &[false],
            Some(_) if f.kind() == FeatureKind::Mandatory => &[true],
            Some(_) => &[false, true],
        };
        for &v in choices {
            s[i] = v;
            go(d, i + 1, s, visit);
        }
    }
    assert!(
        d.len() <= 24,
        "enumeration oracle limited to small diagrams"
    );
    go(d, 0, &mut vec![false; d.len()], visit);
}

/// Every valid configuration, by exhaustive enumeration.
pub fn enumerate_valid(d: &FeatureDiagram) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    for_each_valid(d, &mut |s| out.push(s.to_vec()));
    out
}

pub fn brute_count(d: &FeatureDiagram) -> u64 {
    let mut n = 0;
    for_each_valid(d, &mut |_| n += 1);
    n
}

/// Whether some valid configuration agrees with every decided entry of `partial`.
pub fn extends(valid: &[Vec<bool>], partial: &[Option<bool>]) -> bool {
    valid.iter().any(|s| {
        partial
            .iter()
            .zip(s)
            .all(|(p, v)| p.is_none_or(|p| p == *v))
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Mandatory,
    Optional,
    Or,
    Alt,
}

/// Random well-formed diagram with `2..=max_features` features named `F0..`.
pub fn random_diagram(
    rng: &mut impl Rng,
    max_features: usize,
    constraints: usize,
) -> FeatureDiagram {
    let n = rng.gen_range(2..=max_features);
    random_diagram_exact(rng, n, constraints)
}

pub fn random_diagram_exact(rng: &mut impl Rng, n: usize, constraints: usize) -> FeatureDiagram {
    let mut parent = vec![0usize; n];
    let mut slot = vec![Slot::Optional; n];
    for i in 1..n {
        // bias toward shallow-but-not-flat trees
        parent[i] = rng.gen_range(i.saturating_sub(4)..i);
        slot[i] = match rng.gen_range(0..10) {
            0..=1 => Slot::Mandatory,
            2..=4 => Slot::Optional,
            5..=7 => Slot::Or,
            _ => Slot::Alt,
        };
    }
    fn build(i: usize, parent: &[usize], slot: &[Slot]) -> FeatureNode {
        let kids: Vec<usize> = (i + 1..parent.len()).filter(|&c| parent[c] == i).collect();
        let mut node = FeatureNode::new(format!("F{i}"));
        let mut and = Vec::new();
        let mut or = Vec::new();
        let mut alt = Vec::new();
        for &k in &kids {
            let child = build(k, parent, slot);
            match slot[k] {
                Slot::Mandatory => and.push((true, child)),
                Slot::Optional => and.push((false, child)),
                Slot::Or => or.push(child),
                Slot::Alt => alt.push(child),
            }
        }
        // a lone group member degrades to an optional child
        if or.len() == 1 {
            and.push((false, or.pop().unwrap()));
        }
        if alt.len() == 1 {
            and.push((false, alt.pop().unwrap()));
        }
        if !and.is_empty() {
            node.groups.push(GroupNode::And(and));
        }
        if !or.is_empty() {
            node.groups.push(GroupNode::Or(or));
        }
        if !alt.is_empty() {
            node.groups.push(GroupNode::Alternative(alt));
        }
        node
    }
    let root = build(0, &parent, &slot);
    let mut specs = Vec::new();
    if n >= 3 {
        for _ in 0..constraints {
            let a = rng.gen_range(1..n);
            let mut b = rng.gen_range(1..n);
            while b == a {
                b = rng.gen_range(1..n);
            }
            specs.push(if rng.gen_bool(0.5) {
                ConstraintSpec::requires(format!("F{a}"), format!("F{b}"))
            } else {
                ConstraintSpec::excludes(format!("F{a}"), format!("F{b}"))
            });
        }
    }
    // document order of ids differs from the F-index order; names stay unique either way
    FeatureDiagram::new(root, specs).expect("generated diagram is well-formed")
}

/// Same diagram with every feature renamed through a random permutation of fresh names.
pub fn renamed(d: &FeatureDiagram, rng: &mut impl Rng) -> FeatureDiagram {
    let mut names: Vec<String> = (0..d.len()).map(|i| format!("N{i}x")).collect();
    names.shuffle(rng);
    let map = |id: FeatureId| names[id.index()].clone();
    fn rebuild(
        d: &FeatureDiagram,
        id: FeatureId,
        map: &dyn Fn(FeatureId) -> String,
    ) -> FeatureNode {
        let f = d.feature(id);
        let mut node = FeatureNode::new(map(id));
        for g in f.groups() {
            let group = d.group(*g);
            let members = group.members();
            node.groups.push(match group.kind() {
                GroupKind::And => GroupNode::And(
                    members
                        .iter()
                        .map(|m| {
                            (
                                d.feature(*m).kind() == FeatureKind::Mandatory,
                                rebuild(d, *m, map),
                            )
                        })
                        .collect(),
                ),
                GroupKind::Or => {
                    GroupNode::Or(members.iter().map(|m| rebuild(d, *m, map)).collect())
                }
                GroupKind::Alternative => {
                    GroupNode::Alternative(members.iter().map(|m| rebuild(d, *m, map)).collect())
                }
            });
        }
        node
    }
    let root = rebuild(d, d.root(), &map);
    let cs = d
        .constraints()
        .iter()
        .map(|c| ConstraintSpec {
            kind: c.kind,
            from: map(c.from),
            to: map(c.to),
        })
        .collect();
    FeatureDiagram::new(root, cs).unwrap()
}

pub mod frames;

/// Count of fixtures/suite200.fm, computed by tools/scale_model.py, which
/// counts independently.
pub const SUITE200_COUNT: &str = "700495985914532640";

/// The part of `d` under `top` holding at most `budget` features. Groups
/// are kept whole or dropped, so every kept group keeps its meaning.
pub fn subtree(d: &FeatureDiagram, top: FeatureId, budget: usize) -> FeatureDiagram {
    fn node(d: &FeatureDiagram, f: FeatureId, left: &mut usize) -> FeatureNode {
        let mut n = FeatureNode::new(d.name_of(f));
        for &g in d.feature(f).groups() {
            let group = d.group(g);
            if group.members().len() > *left {
                continue;
            }
            *left -= group.members().len();
            let kids: Vec<(bool, FeatureNode)> = group
                .members()
                .iter()
                .map(|&m| {
                    (
                        d.feature(m).kind() == FeatureKind::Mandatory,
                        node(d, m, left),
                    )
                })
                .collect();
            n = n.with_group(match group.kind() {
                GroupKind::And => GroupNode::And(kids),
                GroupKind::Or => GroupNode::Or(kids.into_iter().map(|k| k.1).collect()),
                GroupKind::Alternative => {
                    GroupNode::Alternative(kids.into_iter().map(|k| k.1).collect())
                }
            });
        }
        n
    }
    let mut left = budget - 1;
    let root = node(d, top, &mut left);
    let mut names = HashSet::new();
    let mut stack = vec![&root];
    while let Some(n) = stack.pop() {
        names.insert(n.name.clone());
        for g in &n.groups {
            match g {
                GroupNode::And(k) => stack.extend(k.iter().map(|(_, c)| c)),
                GroupNode::Or(k) | GroupNode::Alternative(k) => stack.extend(k.iter()),
            }
        }
    }
    let constraints = d
        .constraints()
        .iter()
        .filter(|c| names.contains(d.name_of(c.from)) && names.contains(d.name_of(c.to)))
        .map(|c| {
            let (a, b) = (d.name_of(c.from), d.name_of(c.to));
            match c.kind {
                ConstraintKind::Requires => ConstraintSpec::requires(a, b),
                ConstraintKind::Excludes => ConstraintSpec::excludes(a, b),
            }
        })
        .collect();
    FeatureDiagram::new(root, constraints).unwrap()
}
