#![allow(dead_code)]

use proptest::prelude::*;
use relicomp::channel::Channel;
use relicomp::circuit::{Circuit, CircuitBuilder, NodeId, TruthTable};
use relicomp::info::Distribution;

/// Shape of a random circuit before it is assembled.
#[derive(Clone, Debug)]
pub struct Blueprint {
    pub inputs: usize,
    pub constants: Vec<bool>,
    /// `(table bits, wire picks)`; each pick is reduced modulo the number of
    /// earlier nodes.
    pub gates: Vec<(Vec<bool>, Vec<usize>)>,
}

impl Blueprint {
    pub fn build(&self) -> Circuit {
        let mut b = CircuitBuilder::new();
        let mut ids: Vec<NodeId> = (0..self.inputs).map(|i| b.input(format!("x{}", i + 1))).collect();
        for &c in &self.constants {
            ids.push(b.constant(c));
        }
        for (rows, picks) in &self.gates {
            let wires: Vec<NodeId> = picks.iter().map(|p| ids[p % ids.len()]).collect();
            let table = TruthTable::new(wires.len(), rows.clone()).expect("row count matches");
            ids.push(b.gate(table, &wires));
        }
        b.output(*ids.last().expect("nonempty"));
        b.build().expect("blueprints are valid")
    }
}

fn gate_spec(max_fan_in: usize) -> impl Strategy<Value = (Vec<bool>, Vec<usize>)> {
    (1..=max_fan_in).prop_flat_map(|k| {
        (proptest::collection::vec(any::<bool>(), 1 << k), proptest::collection::vec(0usize..1000, k))
    })
}

/// Random single-output circuits, output at the last gate.
pub fn circuits(
    inputs: std::ops::RangeInclusive<usize>,
    gates: std::ops::RangeInclusive<usize>,
    max_fan_in: usize,
    allow_constants: bool,
) -> impl Strategy<Value = Circuit> {
    let consts = if allow_constants { 0..=2usize } else { 0..=0usize };
    (
        inputs,
        proptest::collection::vec(any::<bool>(), consts),
        proptest::collection::vec(gate_spec(max_fan_in), gates),
    )
        .prop_map(|(inputs, constants, gates)| Blueprint { inputs, constants, gates }.build())
}

/// A strictly positive probability vector of length `n`.
pub fn distribution(n: usize) -> impl Strategy<Value = Distribution> {
    proptest::collection::vec(0.01f64..1.0, n).prop_map(|w| Distribution::normalized(w).unwrap())
}

/// A distribution that may contain exact zeros.
pub fn sparse_distribution(n: usize) -> impl Strategy<Value = Distribution> {
    proptest::collection::vec(prop_oneof![1 => Just(0.0f64), 4 => 0.01f64..1.0], n).prop_filter_map(
        "all-zero weights",
        |w| Distribution::normalized(w).ok(),
    )
}

pub fn channel(inputs: usize, outputs: usize) -> impl Strategy<Value = Channel> {
    proptest::collection::vec(distribution(outputs), inputs).prop_map(|rows| Channel::new(rows).unwrap())
}

pub fn sparse_channel(inputs: usize, outputs: usize) -> impl Strategy<Value = Channel> {
    proptest::collection::vec(sparse_distribution(outputs), inputs).prop_map(|rows| Channel::new(rows).unwrap())
}
