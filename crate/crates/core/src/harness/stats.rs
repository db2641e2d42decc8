use serde::Serialize;

use super::experiment::VectorPair;
use super::HarnessError;
use crate::circuit::{build_iterated_circuit, compile_to_two_qubit, compiled_stats};

/// Gate counts of the amplified circuit at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceRow {
    pub depth: usize,
    pub rbs_count: usize,
    pub rbs_depth: usize,
    pub cz_count: usize,
    pub cz_depth: usize,
    pub oracle_calls_per_shot: usize,
}

pub fn resource_table(max_depth: usize, pair: &VectorPair) -> Result<Vec<ResourceRow>, HarnessError> {
    (0..=max_depth)
        .map(|t| {
            let circuit = build_iterated_circuit(&pair.x, &pair.y, t)?;
            let rbs = compiled_stats(&circuit);
            let cz = compiled_stats(&compile_to_two_qubit(&circuit));
            Ok(ResourceRow {
                depth: t,
                rbs_count: rbs.two_qubit_count,
                rbs_depth: rbs.two_qubit_depth,
                cz_count: cz.two_qubit_count,
                cz_depth: cz.two_qubit_depth,
                oracle_calls_per_shot: 2 * t + 1,
            })
        })
        .collect()
}
