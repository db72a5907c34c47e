//! Independent oracles and instance generators for the integration tests.
//!
//! Oracle tuples use external value ids, with 0 standing for ALL and `None`
//! for the all-empty tuple. Nothing here calls the library's order or
//! aggregation code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use hdcube::ingest::{load_star, StarConfig};
use hdcube::{AggregateFn, Fact, HTuple, Hierarchy, HierarchyBuilder, LatticeContext, MeasureSpec, Warehouse};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const ALL: i64 = 0;

pub type OTuple = Option<Vec<i64>>;

pub fn om3_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/om3/om3.toml")
}

pub fn om3() -> Warehouse {
    let cfg = StarConfig::from_path(&om3_config()).expect("om3 config");
    load_star(&cfg).expect("om3 star")
}

/// One dimension as a plain parent table.
#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub name: String,
    pub levels: usize,
    /// key -> (level, parent key, 0 for the root)
    pub nodes: BTreeMap<i64, (usize, i64)>,
}

impl TreeSpec {
    /// Self first, ALL last.
    pub fn chain(&self, mut x: i64) -> Vec<i64> {
        let mut out = vec![x];
        while x != ALL {
            x = self.nodes[&x].1;
            out.push(x);
        }
        out
    }

    pub fn is_ancestor(&self, a: i64, x: i64) -> bool {
        self.chain(x).contains(&a)
    }

    /// Nearest common ancestor by intersecting the two chains.
    pub fn nca(&self, x: i64, y: i64) -> i64 {
        let cy = self.chain(y);
        *self.chain(x).iter().find(|a| cy.contains(a)).expect("chains meet at ALL")
    }

    pub fn keys(&self) -> Vec<i64> {
        std::iter::once(ALL).chain(self.nodes.keys().copied()).collect()
    }

    pub fn depth_of(&self, x: i64) -> usize {
        self.chain(x).len() - 1
    }

    pub fn children(&self, x: i64) -> Vec<i64> {
        self.nodes.iter().filter(|(_, &(_, p))| p == x).map(|(&k, _)| k).collect()
    }

    pub fn build(&self) -> Hierarchy {
        let levels: Vec<String> = (1..=self.levels).map(|l| format!("{}L{l}", self.name)).collect();
        let mut b = HierarchyBuilder::new(self.name.clone(), levels);
        for (&k, &(level, parent)) in &self.nodes {
            let parent = (parent != ALL).then_some(parent);
            b.value(k, level, parent, format!("{}{k}", self.name)).unwrap();
        }
        b.build().expect("generated hierarchy")
    }
}

/// A random tree with up to `max_values` values over 1..=`max_levels` levels.
/// Parents may skip levels, so leaves can sit at different depths.
pub fn random_tree(rng: &mut ChaCha8Rng, name: &str, max_levels: usize, max_values: usize) -> TreeSpec {
    let levels = rng.gen_range(1..=max_levels);
    let count = rng.gen_range(1..=max_values);
    let mut nodes: BTreeMap<i64, (usize, i64)> = BTreeMap::new();
    let mut keys: Vec<i64> = (1..=count as i64).collect();
    keys.shuffle(rng);
    for (i, &k) in keys.iter().enumerate() {
        let placed: Vec<(i64, usize)> = keys[..i]
            .iter()
            .map(|p| (*p, nodes[p].0))
            .filter(|&(_, l)| l < levels)
            .collect();
        let (level, parent) = if placed.is_empty() || rng.gen_bool(0.2) {
            (rng.gen_range(1..=levels), ALL)
        } else {
            let &(p, pl) = placed.choose(rng).unwrap();
            (rng.gen_range(pl + 1..=levels), p)
        };
        nodes.insert(k, (level, parent));
    }
    TreeSpec {
        name: name.to_string(),
        levels,
        nodes,
    }
}

#[derive(Debug, Clone)]
pub struct OFact {
    pub row_id: i64,
    pub dims: Vec<i64>,
    pub values: Vec<f64>,
}

/// A generated instance with its oracle-side description.
pub struct Instance {
    pub trees: Vec<TreeSpec>,
    pub functions: Vec<AggregateFn>,
    pub facts: Vec<OFact>,
    pub warehouse: Warehouse,
}

pub const ALL_FUNCTIONS: [AggregateFn; 5] = [
    AggregateFn::Sum,
    AggregateFn::Max,
    AggregateFn::Min,
    AggregateFn::Avg,
    AggregateFn::Count,
];

pub fn random_trees(rng: &mut ChaCha8Rng, max_dims: usize, max_levels: usize, max_values: usize) -> Vec<TreeSpec> {
    let n = rng.gen_range(1..=max_dims);
    (0..n)
        .map(|i| random_tree(rng, &format!("D{i}"), max_levels, max_values))
        .collect()
}

/// Facts reference random non-ALL values, measures carry every aggregate function.
pub fn random_instance(rng: &mut ChaCha8Rng, trees: Vec<TreeSpec>, max_facts: usize) -> Instance {
    let count = rng.gen_range(1..=max_facts);
    let mut row_ids: Vec<i64> = (1..=(count as i64 * 3)).collect();
    row_ids.shuffle(rng);
    let facts: Vec<OFact> = row_ids[..count]
        .iter()
        .map(|&row_id| OFact {
            row_id,
            dims: trees
                .iter()
                .map(|t| *t.nodes.keys().collect::<Vec<_>>().choose(rng).copied().unwrap())
                .collect(),
            values: ALL_FUNCTIONS
                .iter()
                .map(|_| f64::from(rng.gen_range(-500i32..5000)) / 100.0)
                .collect(),
        })
        .collect();
    let warehouse = build_warehouse(&trees, &ALL_FUNCTIONS, &facts);
    Instance {
        trees,
        functions: ALL_FUNCTIONS.to_vec(),
        facts,
        warehouse,
    }
}

pub fn build_warehouse(trees: &[TreeSpec], functions: &[AggregateFn], facts: &[OFact]) -> Warehouse {
    let dims: Vec<Hierarchy> = trees.iter().map(TreeSpec::build).collect();
    let lib_facts = facts
        .iter()
        .map(|f| Fact {
            row_id: f.row_id,
            dims: f
                .dims
                .iter()
                .zip(&dims)
                .map(|(&k, h)| h.find_key(k).unwrap())
                .collect(),
            values: f.values.clone(),
        })
        .collect();
    let measures = functions
        .iter()
        .enumerate()
        .map(|(i, &f)| MeasureSpec::new(format!("m{i}_{f}"), f))
        .collect();
    Warehouse::new(LatticeContext::new(dims), measures, lib_facts).expect("generated warehouse")
}

pub fn to_lib(ctx: &LatticeContext, t: &OTuple) -> HTuple {
    match t {
        None => HTuple::Empty,
        Some(keys) => HTuple::Cell(
            keys.iter()
                .zip(ctx.dimensions())
                .map(|(&k, h)| if k == ALL { h.root() } else { h.find_key(k).unwrap() })
                .collect(),
        ),
    }
}

pub fn from_lib(ctx: &LatticeContext, t: &HTuple) -> OTuple {
    t.slots().map(|slots| {
        slots
            .iter()
            .zip(ctx.dimensions())
            .map(|(&x, h)| h.key(x).unwrap_or(ALL))
            .collect()
    })
}

/// Every tuple of the space, built from the cartesian product of key lists.
pub fn space(trees: &[TreeSpec]) -> Vec<OTuple> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for t in trees {
        let keys = t.keys();
        out = out
            .into_iter()
            .flat_map(|p| {
                keys.iter().map(move |&k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    let mut v: Vec<OTuple> = out.into_iter().map(Some).collect();
    v.push(None);
    v
}

pub fn leq(trees: &[TreeSpec], t: &OTuple, u: &OTuple) -> bool {
    match (t, u) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => trees
            .iter()
            .zip(a.iter().zip(b))
            .all(|(tr, (&x, &y))| tr.is_ancestor(x, y)),
    }
}

/// Tuples directly below `s`: one slot lifted to its parent; below the
/// all-empty tuple, every tuple of leaves.
pub fn lower_covers(trees: &[TreeSpec], s: &OTuple) -> Vec<OTuple> {
    match s {
        None => {
            let mut out: Vec<Vec<i64>> = vec![Vec::new()];
            for t in trees {
                let leaves: Vec<i64> = t.nodes.keys().copied().filter(|&k| t.children(k).is_empty()).collect();
                let leaves = if leaves.is_empty() { vec![ALL] } else { leaves };
                out = out
                    .into_iter()
                    .flat_map(|p| {
                        leaves.iter().map(move |&l| {
                            let mut q = p.clone();
                            q.push(l);
                            q
                        })
                    })
                    .collect();
            }
            out.into_iter().map(Some).collect()
        }
        Some(v) => (0..v.len())
            .filter(|&i| v[i] != ALL)
            .map(|i| {
                let mut q = v.clone();
                q[i] = trees[i].nodes[&v[i]].1;
                Some(q)
            })
            .collect(),
    }
}

/// Tuples directly above `s`: one slot moved to a child, or the all-empty
/// tuple above a tuple of leaves.
pub fn upper_covers(trees: &[TreeSpec], s: &OTuple) -> Vec<OTuple> {
    let Some(v) = s else { return Vec::new() };
    let mut out = Vec::new();
    let mut all_leaves = true;
    for i in 0..v.len() {
        for c in trees[i].children(v[i]) {
            all_leaves = false;
            let mut q = v.clone();
            q[i] = c;
            out.push(Some(q));
        }
    }
    if all_leaves {
        out.push(None);
    }
    out
}

/// Greatest lower bound: the lower bounds in the space with no upper cover
/// that is itself a lower bound. Panics unless exactly one exists.
pub fn meet_by_enumeration(trees: &[TreeSpec], space: &[OTuple], t: &OTuple, u: &OTuple) -> OTuple {
    let is_lower = |s: &OTuple| leq(trees, s, t) && leq(trees, s, u);
    let maximal: Vec<&OTuple> = space
        .iter()
        .filter(|s| is_lower(s) && !upper_covers(trees, s).iter().any(is_lower))
        .collect();
    assert_eq!(maximal.len(), 1, "meet must be unique");
    maximal[0].clone()
}

/// Upper bounds in the space with no lower cover that is itself an upper bound.
pub fn minimal_upper_bounds(trees: &[TreeSpec], space: &[OTuple], t: &OTuple, u: &OTuple) -> BTreeSet<OTuple> {
    let is_upper = |s: &OTuple| leq(trees, t, s) && leq(trees, u, s);
    space
        .iter()
        .filter(|s| is_upper(s) && !lower_covers(trees, s).iter().any(is_upper))
        .cloned()
        .collect()
}

/// Componentwise meet of concrete tuples through chain intersection.
pub fn meet_all<'a>(trees: &[TreeSpec], tuples: impl IntoIterator<Item = &'a Vec<i64>>) -> OTuple {
    let mut acc: Option<Vec<i64>> = None;
    for t in tuples {
        acc = Some(match acc {
            None => t.clone(),
            Some(a) => a
                .iter()
                .zip(t)
                .zip(trees)
                .map(|((&x, &y), tr)| tr.nca(x, y))
                .collect(),
        });
    }
    acc
}

pub fn cover<'a>(trees: &[TreeSpec], facts: &'a [OFact], t: &OTuple) -> Vec<&'a OFact> {
    facts
        .iter()
        .filter(|f| leq(trees, t, &Some(f.dims.clone())))
        .collect()
}

pub fn closure(trees: &[TreeSpec], facts: &[OFact], t: &OTuple) -> OTuple {
    let c = cover(trees, facts, t);
    if c.is_empty() {
        return None;
    }
    meet_all(trees, c.iter().map(|f| &f.dims))
}

/// Aggregation in row-id order.
pub fn aggregate(function: AggregateFn, rows: &[&OFact], measure: usize) -> f64 {
    let mut rows: Vec<&&OFact> = rows.iter().collect();
    rows.sort_by_key(|f| f.row_id);
    let vals: Vec<f64> = rows.iter().map(|f| f.values[measure]).collect();
    match function {
        AggregateFn::Sum => vals.iter().fold(0.0, |a, v| a + v),
        AggregateFn::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggregateFn::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
        AggregateFn::Avg => vals.iter().sum::<f64>() / vals.len() as f64,
        AggregateFn::Count => vals.len() as f64,
    }
}

pub fn aggregate_all(functions: &[AggregateFn], rows: &[&OFact]) -> Vec<f64> {
    functions
        .iter()
        .enumerate()
        .map(|(i, &f)| aggregate(f, rows, i))
        .collect()
}

/// Exact for everything but AVG, which gets 1e-9.
pub fn measures_match(functions: &[AggregateFn], a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && functions.iter().zip(a.iter().zip(b)).all(|(f, (x, y))| match f {
            AggregateFn::Avg => (x - y).abs() <= 1e-9,
            _ => x == y,
        })
}

/// GROUP BY CUBE: for each subset of dimensions, group facts by their values
/// there and ALL elsewhere.
pub fn group_by_cube(trees: &[TreeSpec], functions: &[AggregateFn], facts: &[OFact]) -> HashMap<Vec<i64>, Vec<f64>> {
    let n = trees.len();
    let mut out = HashMap::new();
    for mask in 0u32..(1 << n) {
        let mut groups: BTreeMap<Vec<i64>, Vec<&OFact>> = BTreeMap::new();
        for f in facts {
            let key = (0..n)
                .map(|i| if mask & (1 << i) != 0 { f.dims[i] } else { ALL })
                .collect();
            groups.entry(key).or_default().push(f);
        }
        for (k, rows) in groups {
            out.insert(k, aggregate_all(functions, &rows));
        }
    }
    out
}

/// Height above the bottom: longest chain of covers, memoized.
pub fn height(trees: &[TreeSpec], s: &OTuple, memo: &mut HashMap<OTuple, usize>) -> usize {
    if let Some(&h) = memo.get(s) {
        return h;
    }
    let h = lower_covers(trees, s)
        .iter()
        .map(|c| height(trees, c, memo) + 1)
        .max()
        .unwrap_or(0);
    memo.insert(s.clone(), h);
    h
}

/// Builds the oracle view of an already loaded hierarchy from its parent table.
pub fn tree_of(h: &Hierarchy) -> TreeSpec {
    let nodes = h
        .values()
        .map(|x| {
            let parent = h.parent(x).and_then(|p| h.key(p)).unwrap_or(ALL);
            (h.key(x).unwrap(), (h.level_of(x).unwrap(), parent))
        })
        .collect();
    TreeSpec {
        name: h.name().to_string(),
        levels: h.depth() - 1,
        nodes,
    }
}

/// Dimensions whose values are all functions of one latent key, with the
/// same tree shape in every dimension.
pub fn correlated_instance(rng: &mut ChaCha8Rng, dims: usize, latent: i64, facts: usize) -> Instance {
    let trees: Vec<TreeSpec> = (0..dims)
        .map(|d| {
            let mut nodes = BTreeMap::new();
            for k in 0..latent {
                let top = 1 + k / 8;
                let mid = 1000 + k / 2;
                let leaf = 2000 + k;
                nodes.insert(top, (1, ALL));
                nodes.insert(mid, (2, top));
                nodes.insert(leaf, (3, mid));
            }
            TreeSpec {
                name: format!("C{d}"),
                levels: 3,
                nodes,
            }
        })
        .collect();
    let functions = vec![AggregateFn::Sum, AggregateFn::Count];
    let ofacts: Vec<OFact> = (0..facts as i64)
        .map(|row_id| {
            let k = rng.gen_range(0..latent);
            OFact {
                row_id,
                dims: vec![2000 + k; dims],
                values: vec![f64::from(rng.gen_range(0..100u32)), 1.0],
            }
        })
        .collect();
    let warehouse = build_warehouse(&trees, &functions, &ofacts);
    Instance {
        trees,
        functions,
        facts: ofacts,
        warehouse,
    }
}
