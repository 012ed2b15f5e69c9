//! Data files compiled into the library.

pub const REGISTRY: &str = include_str!("../data/registry.txt");
pub const GRAPH: &str = include_str!("../data/knowledge.graph");
pub const SCENARIO_1: &str = include_str!("../scenarios/scenario1.qs");
pub const SCENARIO_2: &str = include_str!("../scenarios/scenario2.qs");

/// `(file name, text)` for every bundled scenario.
pub const SCENARIOS: [(&str, &str); 2] = [("scenario1.qs", SCENARIO_1), ("scenario2.qs", SCENARIO_2)];
