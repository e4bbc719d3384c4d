//! Experiment files shipped with the binary, addressable by name.

use crate::config::ExperimentSpec;
use crate::error::{CliError, Result};

const BUILTIN: &[(&str, &str)] = &[
    ("table1", include_str!("../../../experiments/table1.toml")),
    ("table2", include_str!("../../../experiments/table2.toml")),
    ("table3", include_str!("../../../experiments/table3.toml")),
    ("table4", include_str!("../../../experiments/table4.toml")),
    (
        "table4-largepath",
        include_str!("../../../experiments/table4-largepath.toml"),
    ),
    ("oracle", include_str!("../../../experiments/oracle.toml")),
];

pub fn names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<ExperimentSpec> {
    let text = source(name).ok_or_else(|| CliError::UnknownTable(name.to_string()))?;
    ExperimentSpec::from_toml(text, name)
}
