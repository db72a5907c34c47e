//! The Open Match 3 fixtures, shared by unit tests.

use crate::cube::{AggregateFn, Warehouse};
use crate::hierarchy::{Hierarchy, NodeId};
use crate::ingest::{parse_dimension, parse_facts, MeasureConfig};
use crate::lattice::{HTuple, LatticeContext};

const PLAYER: &str = include_str!("../fixtures/om3/player.csv");
const TURN: &str = include_str!("../fixtures/om3/turn.csv");
const SERIES: &str = include_str!("../fixtures/om3/series.csv");
const FACTS: &str = include_str!("../fixtures/om3/facts.csv");

fn dim(text: &str, name: &str, levels: &[&str]) -> Hierarchy {
    let levels: Vec<String> = levels.iter().map(|s| s.to_string()).collect();
    parse_dimension(text.as_bytes(), name, name, &levels).expect("fixture dimension")
}

pub(crate) fn player() -> Hierarchy {
    dim(
        PLAYER,
        "Player",
        &["Country", "Region", "City", "IPAddress", "OS", "Browser", "Lang", "Player"],
    )
}

pub(crate) fn turn() -> Hierarchy {
    dim(TURN, "Turn", &["Game", "Round"])
}

pub(crate) fn series() -> Hierarchy {
    dim(SERIES, "Series", &["Move", "Combination"])
}

pub(crate) fn context() -> LatticeContext {
    LatticeContext::new(vec![player(), turn(), series()])
}

/// OM3 with SUM(Time) and MAX(Score).
pub(crate) fn warehouse() -> Warehouse {
    let measures = [
        MeasureConfig::new("Time", AggregateFn::Sum),
        MeasureConfig::new("Score", AggregateFn::Max),
    ];
    parse_facts(FACTS.as_bytes(), "facts.csv", context(), &measures).expect("fixture facts")
}

pub(crate) fn node(h: &Hierarchy, label: &str) -> NodeId {
    match h.find_label(label).as_slice() {
        [x] => *x,
        other => panic!("label {label:?} matched {} values", other.len()),
    }
}

pub(crate) fn tuple(ctx: &LatticeContext, spec: &str) -> HTuple {
    ctx.parse_tuple(spec).expect("tuple spec")
}
