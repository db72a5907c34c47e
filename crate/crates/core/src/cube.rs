//! Star-schema warehouse, measures, and datacube materialization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::hierarchy::NodeId;
use crate::lattice::{HTuple, LatticeContext, SizeGuard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggregateFn {
    Sum,
    Max,
    Min,
    Avg,
    Count,
}

impl AggregateFn {
    /// Folds `values` in iteration order. SUM accumulates left to right.
    pub fn apply(self, values: impl IntoIterator<Item = f64>) -> Result<f64> {
        let mut it = values.into_iter();
        let first = it.next().ok_or(Error::EmptyCover)?;
        Ok(match self {
            AggregateFn::Sum => it.fold(first, |acc, v| acc + v),
            AggregateFn::Max => it.fold(first, f64::max),
            AggregateFn::Min => it.fold(first, f64::min),
            AggregateFn::Count => (1 + it.count()) as f64,
            AggregateFn::Avg => {
                let (sum, n) = it.fold((first, 1usize), |(s, n), v| (s + v, n + 1));
                sum / n as f64
            }
        })
    }
}

impl fmt::Display for AggregateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateFn::Sum => "SUM",
            AggregateFn::Max => "MAX",
            AggregateFn::Min => "MIN",
            AggregateFn::Avg => "AVG",
            AggregateFn::Count => "COUNT",
        })
    }
}

impl FromStr for AggregateFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SUM" => Ok(AggregateFn::Sum),
            "MAX" => Ok(AggregateFn::Max),
            "MIN" => Ok(AggregateFn::Min),
            "AVG" => Ok(AggregateFn::Avg),
            "COUNT" => Ok(AggregateFn::Count),
            other => Err(Error::invalid(
                "measure",
                None,
                format!("unknown aggregate function {other:?}"),
            )),
        }
    }
}

/// A named output measure bound to an aggregate function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureSpec {
    pub name: String,
    pub function: AggregateFn,
}

impl MeasureSpec {
    pub fn new(name: impl Into<String>, function: AggregateFn) -> Self {
        MeasureSpec {
            name: name.into(),
            function,
        }
    }
}

/// One fact row: a value per dimension (never ALL) and an input value per measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub row_id: i64,
    pub dims: Vec<NodeId>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Warehouse {
    ctx: LatticeContext,
    measures: Vec<MeasureSpec>,
    facts: Vec<Fact>,
}

impl Warehouse {
    /// Validates references and sorts facts by row id.
    pub fn new(ctx: LatticeContext, measures: Vec<MeasureSpec>, mut facts: Vec<Fact>) -> Result<Self> {
        let mut issues = Vec::new();
        let mut names = HashSet::new();
        for m in &measures {
            if !names.insert(m.name.as_str()) {
                issues.push(Issue::new("measures", None, format!("duplicate measure name {:?}", m.name)));
            }
        }
        let mut rows = HashSet::new();
        for f in &facts {
            let src = format!("fact {}", f.row_id);
            if !rows.insert(f.row_id) {
                issues.push(Issue::new(src.clone(), None, "duplicate RowId"));
            }
            if f.dims.len() != ctx.arity() {
                issues.push(Issue::new(
                    src.clone(),
                    None,
                    format!("{} dimension values, expected {}", f.dims.len(), ctx.arity()),
                ));
                continue;
            }
            if f.values.len() != measures.len() {
                issues.push(Issue::new(
                    src.clone(),
                    None,
                    format!("{} measure values, expected {}", f.values.len(), measures.len()),
                ));
            }
            for (h, &x) in ctx.dimensions().iter().zip(&f.dims) {
                if !h.contains(x) {
                    issues.push(Issue::new(src.clone(), None, format!("unknown value in {}", h.name())));
                } else if x.is_root() {
                    issues.push(Issue::new(src.clone(), None, format!("references ALL_{}", h.name())));
                }
            }
        }
        if !issues.is_empty() {
            return Err(Error::Invalid(issues));
        }
        facts.sort_by_key(|f| f.row_id);
        Ok(Warehouse { ctx, measures, facts })
    }

    pub fn context(&self) -> &LatticeContext {
        &self.ctx
    }

    pub fn measures(&self) -> &[MeasureSpec] {
        &self.measures
    }

    /// Facts in ascending row-id order.
    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn fact_tuple(&self, index: usize) -> HTuple {
        HTuple::Cell(self.facts[index].dims.clone())
    }

    /// Indices (into [`Warehouse::facts`]) of the facts `t` generalizes.
    pub fn cover_indices(&self, t: &HTuple) -> Result<Vec<usize>> {
        self.ctx.check(t)?;
        let Some(slots) = t.slots() else {
            return Ok(Vec::new());
        };
        Ok(self
            .facts
            .iter()
            .enumerate()
            .filter(|(_, f)| self.ctx.slots_leq(slots, &f.dims))
            .map(|(i, _)| i)
            .collect())
    }

    /// Row ids of the facts `t` generalizes; empty for the all-empty tuple.
    pub fn cover(&self, t: &HTuple) -> Result<Vec<i64>> {
        Ok(self
            .cover_indices(t)?
            .into_iter()
            .map(|i| self.facts[i].row_id)
            .collect())
    }

    /// Aggregates measure `measure` over the given row ids, in row-id order.
    pub fn aggregate(&self, measure: usize, row_ids: &[i64]) -> Result<f64> {
        let mut rows: Vec<usize> = Vec::with_capacity(row_ids.len());
        for id in row_ids {
            let idx = self
                .facts
                .binary_search_by_key(id, |f| f.row_id)
                .map_err(|_| Error::invalid("facts", None, format!("unknown RowId {id}")))?;
            rows.push(idx);
        }
        rows.sort_unstable();
        rows.dedup();
        self.aggregate_indices(measure, &rows)
    }

    pub(crate) fn aggregate_indices(&self, measure: usize, rows: &[usize]) -> Result<f64> {
        self.measures[measure]
            .function
            .apply(rows.iter().map(|&r| self.facts[r].values[measure]))
    }

    /// All measures over a sorted set of fact indices.
    pub(crate) fn measure_row(&self, rows: &[usize]) -> Result<Vec<f64>> {
        (0..self.measures.len())
            .map(|m| self.aggregate_indices(m, rows))
            .collect()
    }
}

/// One materialized cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub tuple: HTuple,
    pub measures: Vec<f64>,
}

/// A materialized set of cells sharing one schema.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CubeRelation {
    cells: Vec<Cell>,
}

impl CubeRelation {
    pub fn new(cells: Vec<Cell>) -> Self {
        CubeRelation { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, t: &HTuple) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.tuple == t)
    }

    pub fn to_map(&self) -> HashMap<HTuple, Vec<f64>> {
        self.cells
            .iter()
            .map(|c| (c.tuple.clone(), c.measures.clone()))
            .collect()
    }

    /// Byte size with every dimension value and measure stored as a 4-byte integer.
    pub fn byte_size(&self, dims: usize, measures: usize) -> u64 {
        byte_size(self.cells.len(), dims, measures)
    }
}

/// `count × (|D| + |M|) × 4`.
pub fn byte_size(count: usize, dims: usize, measures: usize) -> u64 {
    count as u64 * (dims + measures) as u64 * 4
}

/// Dimension subsets in cuboid output order: larger subsets first, then
/// lexicographic on dimension indices.
pub fn cuboids(arity: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(1 << arity);
    for k in (0..=arity).rev() {
        out.extend((0..arity).combinations(k));
    }
    out
}

/// `cuboid_X ⪯ cuboid_Y` iff `X ⊆ Y`, dimensions given by name.
pub fn cuboid_order(ctx: &LatticeContext, x: &[&str], y: &[&str]) -> Result<bool> {
    let resolve = |names: &[&str]| -> Result<HashSet<usize>> {
        names.iter().map(|n| ctx.dimension_index(n)).collect()
    };
    let (x, y) = (resolve(x)?, resolve(y)?);
    Ok(x.is_subset(&y))
}

// Rank of a tuple's cuboid (set of non-ALL dimensions) in `cuboids` order.
fn cuboid_rank_table(arity: usize) -> HashMap<Vec<usize>, usize> {
    cuboids(arity)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect()
}

fn cuboid_of(slots: &[NodeId]) -> Vec<usize> {
    slots
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_root())
        .map(|(i, _)| i)
        .collect()
}

/// Sorts cells into output order: cuboid order, then lexicographic by value id.
pub(crate) fn sort_cells(arity: usize, cells: &mut [Cell]) {
    let ranks = cuboid_rank_table(arity);
    cells.sort_by_cached_key(|c| match &c.tuple {
        HTuple::Cell(s) => (ranks[&cuboid_of(s)], c.tuple.clone()),
        HTuple::Empty => (usize::MAX, HTuple::Empty),
    });
}

/// Classic `GROUP BY CUBE`: one cuboid per dimension subset, grouping facts by
/// their stored values and padding the other dimensions with ALL.
pub fn cube_classic(w: &Warehouse) -> CubeRelation {
    let arity = w.ctx.arity();
    let mut cells = Vec::new();
    for dims in cuboids(arity) {
        let mut groups: BTreeMap<Vec<NodeId>, Vec<usize>> = BTreeMap::new();
        for (i, f) in w.facts.iter().enumerate() {
            let mut key = vec![NodeId::ROOT; arity];
            for &d in &dims {
                key[d] = f.dims[d];
            }
            groups.entry(key).or_default().push(i);
        }
        for (key, rows) in groups {
            let measures = w.measure_row(&rows).expect("groups are non-empty");
            cells.push(Cell {
                tuple: HTuple::Cell(key),
                measures,
            });
        }
    }
    CubeRelation::new(cells)
}

/// Every tuple of the space with a non-empty cover, including roll-ups to
/// ancestor levels, aggregated over its cover.
pub fn cube_hierarchical(w: &Warehouse, guard: SizeGuard) -> Result<CubeRelation> {
    guard.check(w.ctx.space_size())?;
    let mut groups: HashMap<Vec<NodeId>, Vec<usize>> = HashMap::new();
    for (i, f) in w.facts.iter().enumerate() {
        let chains: Vec<Vec<NodeId>> = w
            .ctx
            .dimensions()
            .iter()
            .zip(&f.dims)
            .map(|(h, &x)| h.ancestors(x).collect())
            .collect();
        if chains.is_empty() {
            groups.entry(Vec::new()).or_default().push(i);
            continue;
        }
        for key in chains.into_iter().multi_cartesian_product() {
            groups.entry(key).or_default().push(i);
        }
    }
    let mut cells: Vec<Cell> = groups
        .into_iter()
        .map(|(key, rows)| {
            let measures = w.measure_row(&rows).expect("groups are non-empty");
            Cell {
                tuple: HTuple::Cell(key),
                measures,
            }
        })
        .collect();
    sort_cells(w.ctx.arity(), &mut cells);
    Ok(CubeRelation::new(cells))
}

/// Formats a measure value with the shortest round-trip representation.
pub fn format_measure(v: f64) -> String {
    format!("{v}")
}

/// Writes `rel` as CSV: dimension names then measure names; ALL as
/// `ALL_<dimension>`; values by label with id fallback. The all-empty tuple,
/// if present, becomes a row of `EMPTY` with blank measures.
pub fn write_csv<W: Write>(w: &Warehouse, rel: &CubeRelation, out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    let ctx = w.context();
    let header = ctx
        .dimensions()
        .iter()
        .map(|h| h.name().to_string())
        .chain(w.measures().iter().map(|m| m.name.clone()));
    csv.write_record(header)?;
    for cell in rel.cells() {
        let record: Vec<String> = match &cell.tuple {
            HTuple::Cell(slots) => ctx
                .dimensions()
                .iter()
                .zip(slots)
                .map(|(h, &x)| h.display(x))
                .chain(cell.measures.iter().map(|&v| format_measure(v)))
                .collect(),
            HTuple::Empty => std::iter::repeat_n("EMPTY".to_string(), ctx.arity())
                .chain(std::iter::repeat_n(String::new(), w.measures().len()))
                .collect(),
        };
        csv.write_record(&record)?;
    }
    csv.flush().map_err(|source| Error::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}
