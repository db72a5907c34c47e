//! Brute-force self-checks on a loaded warehouse, run by `hdc verify`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::closure::{closure, naive_query, ClosedCube, QueryAnswer};
use crate::cube::{cube_hierarchical, AggregateFn, Warehouse};
use crate::error::Result;
use crate::lattice::{HTuple, SizeGuard};

/// Closed cells beyond this count are not checked pairwise for meet-closedness.
const MEET_CHECK_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, failures: usize, total: usize, first: Option<String>) {
        let detail = match first {
            Some(f) => format!("{failures}/{total} failed, first: {f}"),
            None => format!("{total} checked"),
        };
        self.checks.push(Check {
            name,
            passed: failures == 0,
            detail,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Tally {
    failures: usize,
    total: usize,
    first: Option<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }
}

fn answers_match(w: &Warehouse, a: &QueryAnswer, b: &QueryAnswer) -> bool {
    match (a, b) {
        (QueryAnswer::EmptyCell, QueryAnswer::EmptyCell) => true,
        (QueryAnswer::Measures(x), QueryAnswer::Measures(y)) => w
            .measures()
            .iter()
            .zip(x.iter().zip(y))
            .all(|(m, (p, q))| match m.function {
                AggregateFn::Avg => (p - q).abs() <= 1e-9,
                _ => p.to_bits() == q.to_bits(),
            }),
        _ => false,
    }
}

/// Checks the space size formula, the closure axioms over every space tuple,
/// closed-set equality with brute force, and lossless query answering.
pub fn verify(w: &Warehouse, guard: SizeGuard) -> Result<VerifyReport> {
    let ctx = w.context();
    let mut report = VerifyReport::default();

    let space: Vec<HTuple> = ctx.enumerate_space(guard)?.collect();
    let mut t = Tally::default();
    t.record(space.len() as u128 == ctx.space_size(), || {
        format!("enumerated {} tuples, formula {}", space.len(), ctx.space_size())
    });
    report.push("space-size", t.failures, t.total, t.first);

    let mut closures: HashMap<&HTuple, HTuple> = HashMap::with_capacity(space.len());
    for s in &space {
        closures.insert(s, closure(w, s)?);
    }

    let mut ext = Tally::default();
    let mut idem = Tally::default();
    let mut iso = Tally::default();
    for (s, c) in &closures {
        ext.record(ctx.leq_unchecked(s, c), || ctx.display(s));
        idem.record(closures.get(c) == Some(c), || ctx.display(s));
        // Isotonicity over covering pairs implies it for all comparable pairs.
        if let HTuple::Cell(slots) = s {
            for (i, h) in ctx.dimensions().iter().enumerate() {
                let Some(p) = h.parent(slots[i]) else { continue };
                let mut lifted = slots.clone();
                lifted[i] = p;
                let lifted = HTuple::Cell(lifted);
                iso.record(ctx.leq_unchecked(&closures[&lifted], c), || {
                    format!("{} below {}", ctx.display(&lifted), ctx.display(s))
                });
            }
        }
    }
    report.push("closure-extensivity", ext.failures, ext.total, ext.first);
    report.push("closure-idempotency", idem.failures, idem.total, idem.first);
    report.push("closure-isotonicity", iso.failures, iso.total, iso.first);

    let cc = ClosedCube::build(w);
    let brute: HashSet<&HTuple> = closures.values().collect();
    let mut eq = Tally::default();
    for b in &brute {
        eq.record(cc.contains(b), || format!("missing {}", ctx.display(b)));
    }
    for cell in cc.cells() {
        eq.record(brute.contains(&cell.tuple), || format!("extra {}", ctx.display(&cell.tuple)));
    }
    report.push("closed-set-equals-brute-force", eq.failures, eq.total, eq.first);

    let mut meet = Tally::default();
    let cells = &cc.cells()[..cc.cells().len().min(MEET_CHECK_LIMIT)];
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let m = ctx.gsum(&a.tuple, &b.tuple)?;
            meet.record(cc.contains(&m), || ctx.display(&m));
        }
    }
    report.push("closed-set-meet-closed", meet.failures, meet.total, meet.first);

    let mut lossless = Tally::default();
    for cell in cube_hierarchical(w, guard)?.cells() {
        let fast = cc.query(w, &cell.tuple)?;
        let slow = naive_query(w, &cell.tuple)?;
        lossless.record(answers_match(w, &fast, &slow), || ctx.display(&cell.tuple));
    }
    for s in &space {
        let fast = cc.query(w, s)?;
        let slow = naive_query(w, s)?;
        lossless.record(answers_match(w, &fast, &slow), || ctx.display(s));
    }
    report.push("query-matches-naive", lossless.failures, lossless.total, lossless.first);

    Ok(report)
}
