//! The hierarchical cube lattice: multidimensional tuples over a fixed list of
//! hierarchies, ordered by componentwise specialization, with the all-empty
//! tuple as top element and `(ALL, ..., ALL)` as bottom.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeId};

/// Tuple of the multidimensional space.
///
/// `Cell` holds one value per dimension (the root encodes ALL). `Empty` is the
/// single all-empty tuple `(∅, ..., ∅)`; a lone ∅ slot is not representable.
/// The derived ordering is lexicographic on value ids with `Empty` last.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HTuple {
    Cell(Vec<NodeId>),
    Empty,
}

impl HTuple {
    pub fn is_all_empty(&self) -> bool {
        matches!(self, HTuple::Empty)
    }

    pub fn slots(&self) -> Option<&[NodeId]> {
        match self {
            HTuple::Cell(s) => Some(s),
            HTuple::Empty => None,
        }
    }
}

impl From<Vec<NodeId>> for HTuple {
    fn from(slots: Vec<NodeId>) -> Self {
        HTuple::Cell(slots)
    }
}

/// Default ceiling on the number of tuples an enumeration may produce.
pub const DEFAULT_SIZE_GUARD: u128 = 10_000_000;

/// Refuses enumerations larger than a fixed tuple count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeGuard(pub u128);

impl Default for SizeGuard {
    fn default() -> Self {
        SizeGuard(DEFAULT_SIZE_GUARD)
    }
}

impl SizeGuard {
    /// Reads `HDC_SIZE_GUARD`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        std::env::var("HDC_SIZE_GUARD")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(SizeGuard)
            .unwrap_or_default()
    }

    pub fn check(self, count: u128) -> Result<()> {
        if count > self.0 {
            Err(Error::SizeGuard { count, limit: self.0 })
        } else {
            Ok(())
        }
    }
}

/// The ordered dimensions of a warehouse, with cached domain sizes.
#[derive(Debug, Clone)]
pub struct LatticeContext {
    dims: Vec<Hierarchy>,
    domain_sizes: Vec<usize>,
}

impl LatticeContext {
    pub fn new(dims: Vec<Hierarchy>) -> Self {
        let domain_sizes = dims.iter().map(Hierarchy::domain_size).collect();
        LatticeContext { dims, domain_sizes }
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dimensions(&self) -> &[Hierarchy] {
        &self.dims
    }

    pub fn dimension(&self, i: usize) -> &Hierarchy {
        &self.dims[i]
    }

    pub fn dimension_index(&self, name: &str) -> Result<usize> {
        self.dims
            .iter()
            .position(|h| h.name() == name)
            .ok_or_else(|| Error::UnknownDimension(name.to_string()))
    }

    /// `|Dom(h_i)|` per dimension, ALL excluded.
    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    /// `(ALL_1, ..., ALL_n)`.
    pub fn bottom(&self) -> HTuple {
        HTuple::Cell(vec![NodeId::ROOT; self.arity()])
    }

    pub fn check(&self, t: &HTuple) -> Result<()> {
        let Some(slots) = t.slots() else {
            return Ok(());
        };
        if slots.len() != self.arity() {
            return Err(Error::Shape {
                expected: self.arity(),
                found: slots.len(),
            });
        }
        for (h, &x) in self.dims.iter().zip(slots) {
            h.check(x)?;
        }
        Ok(())
    }

    /// `t ⪯_s u`.
    pub fn leq(&self, t: &HTuple, u: &HTuple) -> Result<bool> {
        self.check(t)?;
        self.check(u)?;
        Ok(self.leq_unchecked(t, u))
    }

    pub(crate) fn leq_unchecked(&self, t: &HTuple, u: &HTuple) -> bool {
        match (t, u) {
            (_, HTuple::Empty) => true,
            (HTuple::Empty, HTuple::Cell(_)) => false,
            (HTuple::Cell(a), HTuple::Cell(b)) => self.slots_leq(a, b),
        }
    }

    pub(crate) fn slots_leq(&self, a: &[NodeId], b: &[NodeId]) -> bool {
        self.dims
            .iter()
            .zip(a.iter().zip(b))
            .all(|(h, (&x, &y))| h.ancestor_of(x, y))
    }

    /// Generalized Sum: the lattice meet, componentwise nearest common ancestor.
    pub fn gsum(&self, t: &HTuple, u: &HTuple) -> Result<HTuple> {
        self.check(t)?;
        self.check(u)?;
        Ok(match (t, u) {
            (HTuple::Empty, x) | (x, HTuple::Empty) => x.clone(),
            (HTuple::Cell(a), HTuple::Cell(b)) => HTuple::Cell(self.meet_slots(a, b)),
        })
    }

    pub(crate) fn meet_slots(&self, a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
        self.dims
            .iter()
            .zip(a.iter().zip(b))
            .map(|(h, (&x, &y))| h.nca(x, y))
            .collect()
    }

    /// Generalized Product: the lattice join, i.e. the minimal upper bounds of
    /// `{t, u}`. Componentwise least common descendant; if any dimension has
    /// none, the result collapses to `{(∅, ..., ∅)}`.
    pub fn gproduct(&self, t: &HTuple, u: &HTuple) -> Result<Vec<HTuple>> {
        self.check(t)?;
        self.check(u)?;
        let (HTuple::Cell(a), HTuple::Cell(b)) = (t, u) else {
            return Ok(vec![HTuple::Empty]);
        };
        let joined: Option<Vec<NodeId>> = self
            .dims
            .iter()
            .zip(a.iter().zip(b))
            .map(|(h, (&x, &y))| h.dim_join_unchecked(x, y))
            .collect();
        Ok(vec![joined.map_or(HTuple::Empty, HTuple::Cell)])
    }

    /// Generalized Semi-product: componentwise semi-product, Cartesian
    /// combination of the per-dimension results, same ∅ collapse rule.
    pub fn gsemiproduct(&self, t: &HTuple, u: &HTuple) -> Result<Vec<HTuple>> {
        self.check(t)?;
        self.check(u)?;
        let (HTuple::Cell(a), HTuple::Cell(b)) = (t, u) else {
            return Ok(vec![HTuple::Empty]);
        };
        let mut per_dim = Vec::with_capacity(self.arity());
        for (h, (&x, &y)) in self.dims.iter().zip(a.iter().zip(b)) {
            let values = h.dim_semiproduct(x, y)?;
            if values.is_empty() {
                return Ok(vec![HTuple::Empty]);
            }
            per_dim.push(values);
        }
        if per_dim.is_empty() {
            return Ok(vec![HTuple::Cell(Vec::new())]);
        }
        Ok(per_dim
            .into_iter()
            .multi_cartesian_product()
            .map(HTuple::Cell)
            .collect())
    }

    /// Order-embedding into sets of `(dimension, value)` pairs: every non-ALL
    /// ancestor-or-self of each slot. The all-empty tuple maps to every pair.
    pub fn phi(&self, t: &HTuple) -> Result<BTreeSet<(usize, NodeId)>> {
        self.check(t)?;
        Ok(match t {
            HTuple::Empty => self
                .dims
                .iter()
                .enumerate()
                .flat_map(|(i, h)| h.values().map(move |v| (i, v)))
                .collect(),
            HTuple::Cell(slots) => slots
                .iter()
                .enumerate()
                .flat_map(|(i, &x)| {
                    self.dims[i]
                        .ancestors(x)
                        .filter(|a| !a.is_root())
                        .map(move |a| (i, a))
                })
                .collect(),
        })
    }

    /// Length of the longest chain from the bottom to `t`.
    pub fn rank(&self, t: &HTuple) -> Result<usize> {
        self.check(t)?;
        Ok(match t {
            HTuple::Cell(slots) => self
                .dims
                .iter()
                .zip(slots)
                .map(|(h, &x)| h.tree_depth(x))
                .sum(),
            // one step above the highest-ranked co-atom
            HTuple::Empty => {
                1 + self
                    .dims
                    .iter()
                    .map(|h| h.leaves().into_iter().map(|l| h.tree_depth(l)).max().unwrap_or(0))
                    .sum::<usize>()
            }
        })
    }

    /// Minimal tuples above the bottom: one dimension on a child of its root,
    /// every other dimension ALL.
    pub fn atoms(&self) -> Vec<HTuple> {
        let mut out = Vec::new();
        for (i, h) in self.dims.iter().enumerate() {
            for &c in h.children(h.root()) {
                let mut slots = vec![NodeId::ROOT; self.arity()];
                slots[i] = c;
                out.push(HTuple::Cell(slots));
            }
        }
        out
    }

    /// Maximal tuples below the all-empty top: every dimension on a leaf.
    pub fn coatoms(&self) -> Vec<HTuple> {
        if self.dims.is_empty() {
            return vec![HTuple::Cell(Vec::new())];
        }
        self.dims
            .iter()
            .map(Hierarchy::leaves)
            .multi_cartesian_product()
            .map(HTuple::Cell)
            .collect()
    }

    /// `Π (|Dom(h_i)| + 1) + 1`, saturating at `u128::MAX`.
    pub fn space_size(&self) -> u128 {
        self.domain_sizes
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128 + 1))
            .and_then(|p| p.checked_add(1))
            .unwrap_or(u128::MAX)
    }

    /// Every tuple of the space, lexicographic by value id with ALL first in
    /// each dimension, the all-empty tuple last.
    pub fn enumerate_space(&self, guard: SizeGuard) -> Result<SpaceIter<'_>> {
        guard.check(self.space_size())?;
        Ok(SpaceIter {
            ctx: self,
            odometer: Some(vec![0; self.arity()]),
            empty_pending: true,
        })
    }

    /// Human-readable rendering, e.g. `(P_1, S_1, ALL_Series)`.
    pub fn display(&self, t: &HTuple) -> String {
        match t {
            HTuple::Empty => format!("({})", vec!["∅"; self.arity()].join(", ")),
            HTuple::Cell(slots) => {
                let mut s = String::from("(");
                for (i, (h, &x)) in self.dims.iter().zip(slots).enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    let _ = write!(s, "{}", h.display(x));
                }
                s.push(')');
                s
            }
        }
    }

    /// Parses a comma-separated tuple spec: one token per dimension, each a
    /// label, `#<id>`, or `*` / `ALL` / `ALL_<dimension>` for the root.
    pub fn parse_tuple(&self, spec: &str) -> Result<HTuple> {
        let tokens: Vec<&str> = spec.split(',').map(str::trim).collect();
        if tokens.len() != self.arity() {
            return Err(Error::TupleSpec(format!(
                "expected {} comma-separated values, got {}",
                self.arity(),
                tokens.len()
            )));
        }
        let mut slots = Vec::with_capacity(tokens.len());
        for (h, tok) in self.dims.iter().zip(tokens) {
            slots.push(resolve_token(h, tok)?);
        }
        Ok(HTuple::Cell(slots))
    }
}

fn resolve_token(h: &Hierarchy, tok: &str) -> Result<NodeId> {
    if tok == "*" || tok == "ALL" || tok == h.label(h.root()) {
        return Ok(h.root());
    }
    if let Some(raw) = tok.strip_prefix('#') {
        let key: i64 = raw
            .parse()
            .map_err(|_| Error::TupleSpec(format!("bad id {tok:?}")))?;
        return h.find_key(key).ok_or_else(|| Error::UnknownValue {
            dimension: h.name().to_string(),
            value: tok.to_string(),
        });
    }
    match h.find_label(tok).as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::UnknownValue {
            dimension: h.name().to_string(),
            value: tok.to_string(),
        }),
        many => Err(Error::TupleSpec(format!(
            "label {tok:?} is ambiguous in dimension {} ({} values); use #<id>",
            h.name(),
            many.len()
        ))),
    }
}

/// Restartable enumeration of the multidimensional space.
#[derive(Debug, Clone)]
pub struct SpaceIter<'a> {
    ctx: &'a LatticeContext,
    odometer: Option<Vec<usize>>,
    empty_pending: bool,
}

impl Iterator for SpaceIter<'_> {
    type Item = HTuple;

    fn next(&mut self) -> Option<HTuple> {
        if let Some(digits) = self.odometer.as_mut() {
            let tuple = HTuple::Cell(digits.iter().map(|&d| NodeId::from_index(d)).collect());
            // advance, last dimension fastest
            let mut i = digits.len();
            loop {
                if i == 0 {
                    self.odometer = None;
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < self.ctx.dims[i].node_count() {
                    break;
                }
                digits[i] = 0;
            }
            return Some(tuple);
        }
        if self.empty_pending {
            self.empty_pending = false;
            return Some(HTuple::Empty);
        }
        None
    }
}
