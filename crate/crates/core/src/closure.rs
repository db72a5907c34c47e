//! Cube closure, the closed hierarchical datacube, and closure-based queries.
//!
//! The closure of a tuple is the Sum of every fact it generalizes. Closed
//! tuples are exactly the Sums of non-empty sets of facts; each one stands for
//! all tuples sharing its cover, so their measures answer every cube cell.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::cube::{byte_size, cube_classic, cube_hierarchical, sort_cells, Cell, CubeRelation, Warehouse};
use crate::error::Result;
use crate::hierarchy::NodeId;
use crate::lattice::{HTuple, SizeGuard};

/// `ℂ(t)`: the meet of all facts more specific than `t`, or the all-empty
/// tuple when no fact is.
pub fn closure(w: &Warehouse, t: &HTuple) -> Result<HTuple> {
    let ctx = w.context();
    ctx.check(t)?;
    let Some(slots) = t.slots() else {
        return Ok(HTuple::Empty);
    };
    let mut acc: Option<Vec<NodeId>> = None;
    for f in w.facts() {
        if ctx.slots_leq(slots, &f.dims) {
            acc = Some(match acc {
                None => f.dims.clone(),
                Some(a) => ctx.meet_slots(&a, &f.dims),
            });
        }
    }
    Ok(acc.map_or(HTuple::Empty, HTuple::Cell))
}

/// Answer to a cell query.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryAnswer {
    Measures(Vec<f64>),
    /// No fact lies under the queried tuple.
    EmptyCell,
}

/// Direct fact-scan aggregation, bypassing any materialized cube.
pub fn naive_query(w: &Warehouse, t: &HTuple) -> Result<QueryAnswer> {
    let rows = w.cover_indices(t)?;
    if rows.is_empty() {
        return Ok(QueryAnswer::EmptyCell);
    }
    Ok(QueryAnswer::Measures(w.measure_row(&rows)?))
}

/// The closed hierarchical datacube: every closed tuple with its measures,
/// plus the measure-less all-empty sentinel.
#[derive(Debug, Clone)]
pub struct ClosedCube {
    arity: usize,
    cells: Vec<Cell>,
    lookup: HashMap<Vec<NodeId>, usize>,
    // per dimension: value -> sorted indices of cells whose slot descends from it
    postings: Vec<HashMap<NodeId, Vec<u32>>>,
}

impl ClosedCube {
    /// Saturates the distinct fact tuples under pairwise meets, then
    /// aggregates each closed tuple over its cover.
    pub fn build(w: &Warehouse) -> Self {
        let ctx = w.context();
        let mut distinct: Vec<Vec<NodeId>> = w.facts().iter().map(|f| f.dims.clone()).collect();
        distinct.sort_unstable();
        distinct.dedup();

        let mut seen: HashSet<Vec<NodeId>> = distinct.iter().cloned().collect();
        let mut queue: VecDeque<Vec<NodeId>> = distinct.iter().cloned().collect();
        // Meeting with single facts reaches the meet of every fact subset.
        while let Some(x) = queue.pop_front() {
            for f in &distinct {
                if ctx.slots_leq(&x, f) {
                    continue;
                }
                let m = ctx.meet_slots(&x, f);
                if !seen.contains(&m) {
                    seen.insert(m.clone());
                    queue.push_back(m);
                }
            }
        }

        let mut cells: Vec<Cell> = seen
            .into_iter()
            .map(|slots| {
                let rows: Vec<usize> = w
                    .facts()
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| ctx.slots_leq(&slots, &f.dims))
                    .map(|(i, _)| i)
                    .collect();
                let measures = w.measure_row(&rows).expect("closed tuples cover a fact");
                Cell {
                    tuple: HTuple::Cell(slots),
                    measures,
                }
            })
            .collect();
        sort_cells(ctx.arity(), &mut cells);

        let mut lookup = HashMap::with_capacity(cells.len());
        let mut postings: Vec<HashMap<NodeId, Vec<u32>>> = vec![HashMap::new(); ctx.arity()];
        for (i, cell) in cells.iter().enumerate() {
            let slots = cell.tuple.slots().expect("closed cells are not the sentinel");
            lookup.insert(slots.to_vec(), i);
            for (d, (h, &x)) in ctx.dimensions().iter().zip(slots).enumerate() {
                for a in h.ancestors(x).filter(|a| !a.is_root()) {
                    postings[d].entry(a).or_default().push(i as u32);
                }
            }
        }

        ClosedCube {
            arity: ctx.arity(),
            cells,
            lookup,
            postings,
        }
    }

    /// Number of closed tuples, the sentinel included.
    pub fn len(&self) -> usize {
        self.cells.len() + 1
    }

    /// Never true: the sentinel is always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Closed cells in output order, sentinel excluded.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, t: &HTuple) -> bool {
        match t {
            HTuple::Empty => true,
            HTuple::Cell(s) => self.lookup.contains_key(s),
        }
    }

    /// Measures stored for a closed tuple.
    pub fn measures(&self, t: &HTuple) -> Option<&[f64]> {
        let slots = t.slots()?;
        self.lookup
            .get(slots)
            .map(|&i| self.cells[i].measures.as_slice())
    }

    /// Closed tuples as a relation, with the sentinel as the final row.
    pub fn to_relation(&self) -> CubeRelation {
        let mut cells = self.cells.clone();
        cells.push(Cell {
            tuple: HTuple::Empty,
            measures: Vec::new(),
        });
        CubeRelation::new(cells)
    }

    /// Closure of `t` computed from the closed tuples alone: the meet of every
    /// closed tuple above `t`.
    pub fn resolve(&self, w: &Warehouse, t: &HTuple) -> Result<HTuple> {
        let ctx = w.context();
        ctx.check(t)?;
        let Some(slots) = t.slots() else {
            return Ok(HTuple::Empty);
        };
        debug_assert_eq!(slots.len(), self.arity);

        let mut lists: Vec<&[u32]> = Vec::new();
        for (d, &x) in slots.iter().enumerate() {
            if x.is_root() {
                continue;
            }
            match self.postings[d].get(&x) {
                Some(list) => lists.push(list),
                None => return Ok(HTuple::Empty),
            }
        }
        lists.sort_by_key(|l| l.len());

        let mut acc: Option<Vec<NodeId>> = None;
        let mut fold = |i: usize| {
            let s = self.cells[i].tuple.slots().expect("closed cell");
            acc = Some(match acc.take() {
                None => s.to_vec(),
                Some(a) => ctx.meet_slots(&a, s),
            });
        };
        match lists.split_first() {
            None => (0..self.cells.len()).for_each(&mut fold),
            Some((first, rest)) => {
                for &i in first.iter() {
                    if rest.iter().all(|l| l.binary_search(&i).is_ok()) {
                        fold(i as usize);
                    }
                }
            }
        }
        Ok(acc.map_or(HTuple::Empty, HTuple::Cell))
    }

    /// Measures of `t`'s cell, read from its closure.
    pub fn query(&self, w: &Warehouse, t: &HTuple) -> Result<QueryAnswer> {
        let closed = self.resolve(w, t)?;
        Ok(match self.measures(&closed) {
            Some(m) => QueryAnswer::Measures(m.to_vec()),
            None => QueryAnswer::EmptyCell,
        })
    }
}

/// Tuple counts and 4-bytes-per-value sizes of the three representations.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeStats {
    pub dimensions: usize,
    pub measures: usize,
    pub facts: usize,
    pub classic_cells: usize,
    /// `None` when the space exceeded the size guard.
    pub hierarchical_cells: Option<usize>,
    /// Sentinel included.
    pub closed_cells: usize,
}

impl CubeStats {
    fn bytes(&self, count: usize) -> u64 {
        byte_size(count, self.dimensions, self.measures)
    }

    pub fn classic_bytes(&self) -> u64 {
        self.bytes(self.classic_cells)
    }

    pub fn hierarchical_bytes(&self) -> Option<u64> {
        self.hierarchical_cells.map(|c| self.bytes(c))
    }

    pub fn closed_bytes(&self) -> u64 {
        self.bytes(self.closed_cells)
    }

    /// Classic cube size over closed cube size.
    pub fn classic_ratio(&self) -> f64 {
        self.classic_bytes() as f64 / self.closed_bytes() as f64
    }

    /// Hierarchical cube size over closed cube size.
    pub fn hierarchical_ratio(&self) -> Option<f64> {
        self.hierarchical_bytes()
            .map(|b| b as f64 / self.closed_bytes() as f64)
    }
}

pub fn stats(w: &Warehouse, cc: &ClosedCube, guard: SizeGuard) -> CubeStats {
    CubeStats {
        dimensions: w.context().arity(),
        measures: w.measures().len(),
        facts: w.facts().len(),
        classic_cells: cube_classic(w).len(),
        hierarchical_cells: cube_hierarchical(w, guard).ok().map(|c| c.len()),
        closed_cells: cc.len(),
    }
}
