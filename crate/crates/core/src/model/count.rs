//! Exact variant counting.
//!
//! For a constraint-free diagram the count is compositional over the tree.
//! Cross-tree constraints are handled by enumerating assignments of the
//! features they touch (pruning as soon as a constraint is violated) and
//! summing the tree count conditioned on each surviving assignment.
//!
//! The same routine runs over the boolean semiring to answer "does any valid
//! configuration extend these assumptions?", which the configuration engine
//! uses as its completion check.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{ConstraintKind, FeatureDiagram, FeatureId, FeatureKind, GroupKind};

/// Number of complete valid configurations of a diagram.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariantCount(pub BigUint);

impl VariantCount {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Display for VariantCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for VariantCount {
    fn from(v: u64) -> Self {
        VariantCount(BigUint::from(v))
    }
}

trait Tally: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// No further addition can change the value.
    fn saturated(&self) -> bool;
}

impl Tally for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn saturated(&self) -> bool {
        false
    }
}

impl Tally for bool {
    fn zero() -> Self {
        false
    }
    fn one() -> Self {
        true
    }
    fn add(&self, other: &Self) -> Self {
        *self || *other
    }
    fn mul(&self, other: &Self) -> Self {
        *self && *other
    }
    fn is_zero(&self) -> bool {
        !*self
    }
    fn saturated(&self) -> bool {
        *self
    }
}

/// Per-feature pair: configurations of the subtree with the feature selected,
/// and with it deselected (1 if nothing below is forced on, else 0).
struct Subtree<T> {
    on: T,
    off: T,
}

fn conditioned<T: Tally>(d: &FeatureDiagram, forced: &[Option<bool>]) -> T {
    let n = d.len();
    let mut on: Vec<T> = vec![T::zero(); n];
    let mut off: Vec<T> = vec![T::zero(); n];
    // reverse pre-order visits children before parents
    for id in d.ids().rev() {
        let f = d.feature(id);
        let mut some_forced_on = forced[id.0] == Some(true);
        let mut prod = T::one();
        for g in f.groups() {
            let group = d.group(*g);
            let members: Vec<Subtree<T>> = group
                .members()
                .iter()
                .map(|m| Subtree {
                    on: on[m.0].clone(),
                    off: off[m.0].clone(),
                })
                .collect();
            some_forced_on |= group.members().iter().any(|m| off[m.0].is_zero());
            let contribution = match group.kind() {
                GroupKind::And => {
                    group
                        .members()
                        .iter()
                        .zip(&members)
                        .fold(T::one(), |acc, (m, s)| match d.feature(*m).kind() {
                            FeatureKind::Mandatory => acc.mul(&s.on),
                            _ => acc.mul(&s.on.add(&s.off)),
                        })
                }
                GroupKind::Alternative => exactly_one(&members),
                GroupKind::Or => at_least_one(&members),
            };
            prod = prod.mul(&contribution);
        }
        on[id.0] = if forced[id.0] == Some(false) {
            T::zero()
        } else {
            prod
        };
        off[id.0] = if some_forced_on { T::zero() } else { T::one() };
    }
    on[FeatureId::ROOT.0].clone()
}

fn exactly_one<T: Tally>(members: &[Subtree<T>]) -> T {
    // Σ_i on_i · Π_{j≠i} off_j, via prefix/suffix products of `off`
    let k = members.len();
    let mut suffix = vec![T::one(); k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1].mul(&members[i].off);
    }
    let mut prefix = T::one();
    let mut total = T::zero();
    for i in 0..k {
        total = total.add(&prefix.mul(&members[i].on).mul(&suffix[i + 1]));
        prefix = prefix.mul(&members[i].off);
    }
    total
}

fn at_least_one<T: Tally>(members: &[Subtree<T>]) -> T {
    // classify by the first selected member: Σ_i (Π_{j<i} off_j) · on_i · Π_{j>i} (on_j + off_j)
    let k = members.len();
    let mut suffix = vec![T::one(); k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1].mul(&members[i].on.add(&members[i].off));
    }
    let mut prefix = T::one();
    let mut total = T::zero();
    for i in 0..k {
        total = total.add(&prefix.mul(&members[i].on).mul(&suffix[i + 1]));
        prefix = prefix.mul(&members[i].off);
    }
    total
}

fn violates(d: &FeatureDiagram, forced: &[Option<bool>]) -> bool {
    d.constraints().iter().any(|c| {
        let (a, b) = (forced[c.from.0], forced[c.to.0]);
        match c.kind {
            ConstraintKind::Requires => a == Some(true) && b == Some(false),
            ConstraintKind::Excludes => a == Some(true) && b == Some(true),
        }
    })
}

fn tally<T: Tally>(d: &FeatureDiagram, assumptions: &[(FeatureId, bool)]) -> T {
    let mut forced: Vec<Option<bool>> = vec![None; d.len()];
    for &(id, v) in assumptions {
        match forced[id.0] {
            Some(prev) if prev != v => return T::zero(),
            _ => forced[id.0] = Some(v),
        }
    }
    let mut touched: Vec<FeatureId> = d
        .constraints()
        .iter()
        .flat_map(|c| [c.from, c.to])
        .filter(|id| forced[id.0].is_none())
        .collect();
    touched.sort();
    touched.dedup();
    let mut total = T::zero();
    enumerate(d, &touched, &mut forced, &mut total);
    total
}

fn enumerate<T: Tally>(
    d: &FeatureDiagram,
    rest: &[FeatureId],
    forced: &mut Vec<Option<bool>>,
    total: &mut T,
) {
    if violates(d, forced) {
        return;
    }
    match rest.split_first() {
        None => *total = total.add(&conditioned::<T>(d, forced)),
        Some((&id, tail)) => {
            for v in [false, true] {
                forced[id.0] = Some(v);
                enumerate(d, tail, forced, total);
                if total.saturated() {
                    break;
                }
            }
            forced[id.0] = None;
        }
    }
}

/// Exact number of complete valid configurations.
pub fn count_variants(d: &FeatureDiagram) -> VariantCount {
    count_variants_with(d, &[])
}

/// Number of complete valid configurations agreeing with every assumption.
pub fn count_variants_with(d: &FeatureDiagram, assumptions: &[(FeatureId, bool)]) -> VariantCount {
    VariantCount(tally::<BigUint>(d, assumptions))
}

/// Whether at least one complete valid configuration agrees with every assumption.
pub fn has_valid_configuration(d: &FeatureDiagram, assumptions: &[(FeatureId, bool)]) -> bool {
    tally::<bool>(d, assumptions)
}
