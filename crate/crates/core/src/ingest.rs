//! Star-schema loading: dimension path tables, the fact table, and the TOML
//! configuration tying them together.
//!
//! A dimension file has a header row, then one row per value:
//!
//! ```text
//! id,<level 1>,...,<level n>,label
//! 4,1,2,3,4,,,,,92.88.91.80
//! ```
//!
//! Level cells hold the ids of the row's ancestors from most general to most
//! specific; they must be filled as a prefix and the deepest filled cell must
//! equal the row id. Empty cells are NULL.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cube::{AggregateFn, Fact, MeasureSpec, Warehouse};
use crate::error::{Error, Issue, Result};
use crate::hierarchy::{Hierarchy, HierarchyBuilder};
use crate::lattice::LatticeContext;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StarConfig {
    #[serde(rename = "dimension")]
    pub dimensions: Vec<DimensionConfig>,
    pub fact: FactConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    pub name: String,
    pub file: PathBuf,
    /// Non-⊤ levels, most general first.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FactConfig {
    pub file: PathBuf,
    #[serde(rename = "measure", default)]
    pub measures: Vec<MeasureConfig>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    /// Output name, unique across measures.
    pub name: String,
    pub function: AggregateFn,
    /// Fact-table column to aggregate; defaults to `name`. Ignored by COUNT.
    pub column: Option<String>,
}

impl MeasureConfig {
    pub fn new(name: impl Into<String>, function: AggregateFn) -> Self {
        MeasureConfig {
            name: name.into(),
            function,
            column: None,
        }
    }

    fn source_column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }
}

impl StarConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: StarConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.check(origin)?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for d in &mut cfg.dimensions {
            d.file = base.join(&d.file);
        }
        cfg.fact.file = base.join(&cfg.fact.file);
        Ok(cfg)
    }

    fn check(&self, origin: &Path) -> Result<()> {
        let fail = |message: String| {
            Err(Error::Config {
                path: origin.to_path_buf(),
                message,
            })
        };
        let mut names = HashSet::new();
        for d in &self.dimensions {
            if !names.insert(&d.name) {
                return fail(format!("duplicate dimension {:?}", d.name));
            }
            if d.levels.is_empty() {
                return fail(format!("dimension {:?} has no levels", d.name));
            }
        }
        let mut measures = HashSet::new();
        for m in &self.fact.measures {
            if !measures.insert(&m.name) {
                return fail(format!("duplicate measure {:?}", m.name));
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn parse_id(cell: &str) -> Option<std::result::Result<i64, String>> {
    let cell = cell.trim();
    if cell.is_empty() {
        None
    } else {
        Some(cell.parse().map_err(|_| format!("{cell:?} is not an integer id")))
    }
}

pub fn load_dimension(path: &Path, name: &str, levels: &[String]) -> Result<Hierarchy> {
    parse_dimension(open(path)?, &path.display().to_string(), name, levels)
}

/// Parses a dimension path table. All row problems are collected before failing.
pub fn parse_dimension<R: Read>(input: R, source: &str, name: &str, levels: &[String]) -> Result<Hierarchy> {
    let mut rdr = reader(input);
    let width = levels.len() + 2;
    let header_len = rdr.headers()?.len();
    if header_len != width {
        return Err(Error::invalid(
            source,
            Some(1),
            format!("header has {header_len} columns, expected id + {} levels + label", levels.len()),
        ));
    }

    let mut issues = Vec::new();
    // value id -> (level, parent, line of first claim)
    let mut claims: HashMap<i64, (usize, Option<i64>, u64)> = HashMap::new();
    // value id -> (level, parent, label, line) for the row that defines it
    let mut defined: BTreeMap<i64, (usize, Option<i64>, String, u64)> = BTreeMap::new();

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut bad = |msg: String| issues.push(Issue::new(source, Some(line), msg));
        if record.len() != width {
            bad(format!("{} fields, expected {width}", record.len()));
            continue;
        }
        let id = match parse_id(&record[0]) {
            Some(Ok(id)) => id,
            Some(Err(e)) => {
                bad(e);
                continue;
            }
            None => {
                bad("missing id".into());
                continue;
            }
        };
        let mut path = Vec::new();
        let mut gap = false;
        let mut broken = false;
        for k in 0..levels.len() {
            match parse_id(&record[k + 1]) {
                Some(Ok(v)) if gap => {
                    bad(format!("level {:?} filled after an empty level", levels[k]));
                    path.push(v);
                    broken = true;
                }
                Some(Ok(v)) => path.push(v),
                Some(Err(e)) => {
                    bad(e);
                    broken = true;
                }
                None => gap = true,
            }
        }
        if broken {
            continue;
        }
        let Some(&deepest) = path.last() else {
            bad(format!("row {id} fills no level"));
            continue;
        };
        if deepest != id {
            bad(format!("row id {id} differs from its deepest level cell {deepest}"));
            continue;
        }
        for (k, &v) in path.iter().enumerate() {
            let level = k + 1;
            let parent = if k == 0 { None } else { Some(path[k - 1]) };
            match claims.get(&v) {
                Some(&(l, p, first)) if (l, p) != (level, parent) => bad(format!(
                    "value {v} placed at level {level} under {} but line {first} has level {l} under {}",
                    show_parent(parent),
                    show_parent(p)
                )),
                Some(_) => {}
                None => {
                    claims.insert(v, (level, parent, line));
                }
            }
        }
        let label = record[width - 1].trim().to_string();
        if defined.contains_key(&id) {
            bad(format!("duplicate id {id}"));
            continue;
        }
        defined.insert(id, (path.len(), path.len().checked_sub(2).map(|k| path[k]), label, line));
    }

    for (v, &(_, _, line)) in &claims {
        if !defined.contains_key(v) {
            issues.push(Issue::new(source, Some(line), format!("value {v} is referenced but has no row of its own")));
        }
    }
    if !issues.is_empty() {
        issues.sort_by_key(|i| i.line);
        return Err(Error::Invalid(issues));
    }

    let mut builder = HierarchyBuilder::new(name, levels.iter().cloned());
    for (id, (level, parent, label, _)) in defined {
        builder.value(id, level, parent, label)?;
    }
    builder.build()
}

fn show_parent(p: Option<i64>) -> String {
    p.map_or_else(|| "ALL".to_string(), |v| v.to_string())
}

/// Writes `h` back out as a path table that [`parse_dimension`] reloads to the
/// same hierarchy.
pub fn write_dimension<W: Write>(h: &Hierarchy, out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(h.schema()[1..].iter().cloned());
    header.push("label".to_string());
    csv.write_record(&header)?;
    for v in h.values() {
        let mut row = vec![String::new(); h.depth() + 1];
        row[0] = h.key(v).expect("non-root").to_string();
        for a in h.ancestors(v).filter(|a| !a.is_root()) {
            let level = h.level_of(a)?;
            row[level] = h.key(a).expect("non-root").to_string();
        }
        row[h.depth()] = h.label(v).to_string();
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|source| Error::Io {
        path: "<output>".into(),
        source,
    })
}

pub fn load_facts(path: &Path, ctx: LatticeContext, measures: &[MeasureConfig]) -> Result<Warehouse> {
    parse_facts(open(path)?, &path.display().to_string(), ctx, measures)
}

/// Parses a fact table: `RowId`, one value id per dimension (in context
/// order), then named numeric columns.
pub fn parse_facts<R: Read>(
    input: R,
    source: &str,
    ctx: LatticeContext,
    measures: &[MeasureConfig],
) -> Result<Warehouse> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    let arity = ctx.arity();
    if header.len() < 1 + arity {
        return Err(Error::invalid(
            source,
            Some(1),
            format!("header has {} columns, expected RowId + {arity} dimensions", header.len()),
        ));
    }
    let mut columns = Vec::with_capacity(measures.len());
    let mut issues = Vec::new();
    for m in measures {
        if m.function == AggregateFn::Count && m.column.is_none() {
            columns.push(None);
            continue;
        }
        let col = m.source_column();
        match header.iter().skip(1 + arity).position(|h| h.trim() == col) {
            Some(p) => columns.push(Some(1 + arity + p)),
            None => issues.push(Issue::new(source, Some(1), format!("no column {col:?} for measure {:?}", m.name))),
        }
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }

    let mut facts = Vec::new();
    let mut row_ids = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut bad = |msg: String| issues.push(Issue::new(source, Some(line), msg));
        if record.len() != header.len() {
            bad(format!("{} fields, expected {}", record.len(), header.len()));
            continue;
        }
        let row_id = match parse_id(&record[0]) {
            Some(Ok(id)) => id,
            _ => {
                bad(format!("bad RowId {:?}", &record[0]));
                continue;
            }
        };
        if !row_ids.insert(row_id) {
            bad(format!("duplicate RowId {row_id}"));
            continue;
        }
        let mut dims = Vec::with_capacity(arity);
        for (d, h) in ctx.dimensions().iter().enumerate() {
            let cell = record[1 + d].trim();
            if cell == "*" || cell == "ALL" || cell == h.label(h.root()) {
                bad(format!("{} references ALL_{}; facts must use real values", header[1 + d].trim(), h.name()));
                continue;
            }
            match parse_id(cell) {
                Some(Ok(key)) => match h.find_key(key) {
                    Some(x) => dims.push(x),
                    None => bad(format!("unknown {} value {key}", h.name())),
                },
                Some(Err(e)) => bad(e),
                None => bad(format!("missing {} value", h.name())),
            }
        }
        let mut values = Vec::with_capacity(measures.len());
        for (m, col) in measures.iter().zip(&columns) {
            match col {
                None => values.push(1.0),
                Some(c) => match record[*c].trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => bad(format!("measure {:?}: {:?} is not a finite number", m.name, &record[*c])),
                },
            }
        }
        if dims.len() == arity && values.len() == measures.len() {
            facts.push(Fact { row_id, dims, values });
        }
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    let specs = measures
        .iter()
        .map(|m| MeasureSpec::new(m.name.clone(), m.function))
        .collect();
    Warehouse::new(ctx, specs, facts)
}

/// Loads every dimension then the fact table named by `cfg`.
pub fn load_star(cfg: &StarConfig) -> Result<Warehouse> {
    let mut dims = Vec::with_capacity(cfg.dimensions.len());
    let mut issues = Vec::new();
    for d in &cfg.dimensions {
        match load_dimension(&d.file, &d.name, &d.levels) {
            Ok(h) => dims.push(h),
            Err(Error::Invalid(mut more)) => issues.append(&mut more),
            Err(e) => return Err(e),
        }
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    load_facts(&cfg.fact.file, LatticeContext::new(dims), &cfg.fact.measures)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionSummary {
    pub name: String,
    pub depth: usize,
    pub domain_size: usize,
    /// `(level name, value count)`, ⊤ level first.
    pub per_level: Vec<(String, usize)>,
    /// Facts referencing each level, ⊤ level first (always 0).
    pub fact_levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub dimensions: Vec<DimensionSummary>,
    pub facts: usize,
    pub warnings: Vec<String>,
}

/// Re-checks the structural invariants of a loaded warehouse and summarizes it.
pub fn validate(w: &Warehouse) -> Result<ValidationReport> {
    let ctx = w.context();
    let mut issues = Vec::new();
    for h in ctx.dimensions() {
        for v in h.values() {
            let level = h.level_of(v)?;
            match h.parent(v) {
                Some(p) if h.level_of(p)? < level => {}
                _ => issues.push(Issue::new(h.name(), None, format!("value {} has an invalid parent", h.display(v)))),
            }
            if !h.ancestors(v).any(|a| a.is_root()) {
                issues.push(Issue::new(h.name(), None, format!("value {} does not reach ALL", h.display(v))));
            }
        }
        if h.dom_level(0)? != [h.root()] {
            issues.push(Issue::new(h.name(), None, "level 0 must hold only the root"));
        }
    }
    let mut dimensions: Vec<DimensionSummary> = ctx
        .dimensions()
        .iter()
        .map(|h| DimensionSummary {
            name: h.name().to_string(),
            depth: h.depth(),
            domain_size: h.domain_size(),
            per_level: h
                .schema()
                .iter()
                .enumerate()
                .map(|(e, n)| (n.clone(), h.dom_level(e).map_or(0, <[_]>::len)))
                .collect(),
            fact_levels: vec![0; h.depth()],
        })
        .collect();
    for f in w.facts() {
        for (d, (h, &x)) in ctx.dimensions().iter().zip(&f.dims).enumerate() {
            if x.is_root() {
                issues.push(Issue::new(format!("fact {}", f.row_id), None, format!("references ALL_{}", h.name())));
                continue;
            }
            dimensions[d].fact_levels[h.level_of(x)?] += 1;
        }
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    let mut warnings = Vec::new();
    if w.facts().is_empty() {
        warnings.push("fact table is empty".to_string());
    }
    Ok(ValidationReport {
        dimensions,
        facts: w.facts().len(),
        warnings,
    })
}
