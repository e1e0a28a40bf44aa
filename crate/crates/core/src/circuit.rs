//! Boolean circuits as immutable DAGs of inputs, constants and gates.
//!
//! A [`Circuit`] may be constructed in an invalid state (cyclic, dangling
//! wires, arity mismatches) so that [`Circuit::validate`] can report what is
//! wrong with it. Every analysis entry point re-checks validity and refuses
//! to run on a malformed circuit.
//!
//! Path lengths count edges. The output of a circuit is the value of a
//! designated node, so a path from an input to the output gate through `l`
//! gates has length `l`.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{Error, Result};

/// Index of a node inside one circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A gate's Boolean function, one output bit per input row.
///
/// Row `r` holds the output for the inputs whose bits spell `r` with the
/// first argument as the most significant bit, so `rows[0b011]` is the
/// output for `(a, b, c) = (0, 1, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    fan_in: usize,
    rows: Vec<bool>,
}

impl TruthTable {
    /// Largest supported fan-in; a table then has 2^16 rows.
    pub const MAX_FAN_IN: usize = 16;

    pub fn new(fan_in: usize, rows: Vec<bool>) -> Result<Self> {
        if fan_in == 0 || fan_in > Self::MAX_FAN_IN {
            return Err(Error::Precondition(format!(
                "truth table fan-in {fan_in} outside 1..={}",
                Self::MAX_FAN_IN
            )));
        }
        if rows.len() != 1 << fan_in {
            return Err(Error::Shape(format!(
                "truth table with fan-in {fan_in} needs {} rows, got {}",
                1usize << fan_in,
                rows.len()
            )));
        }
        Ok(Self { fan_in, rows })
    }

    /// Parses a row string such as `"0110"`; the fan-in is inferred from its length.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let rows = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Shape(format!("invalid truth table character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let n = rows.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Shape(format!(
                "truth table length {n} is not 2^k for k >= 1"
            )));
        }
        Self::new(n.trailing_zeros() as usize, rows)
    }

    pub fn from_fn(fan_in: usize, f: impl Fn(&[bool]) -> bool) -> Result<Self> {
        if fan_in == 0 || fan_in > Self::MAX_FAN_IN {
            return Err(Error::Precondition(format!("truth table fan-in {fan_in} unsupported")));
        }
        let mut args = vec![false; fan_in];
        let rows = (0..1usize << fan_in)
            .map(|r| {
                for (i, a) in args.iter_mut().enumerate() {
                    *a = (r >> (fan_in - 1 - i)) & 1 == 1;
                }
                f(&args)
            })
            .collect();
        Self::new(fan_in, rows)
    }

    fn known(bits: &str) -> Self {
        Self::from_bits(bits).expect("built-in table")
    }

    /// Three-input majority.
    pub fn maj3() -> Self {
        Self::known("00010111")
    }

    /// Three-input minority, the negation of [`TruthTable::maj3`].
    pub fn min3() -> Self {
        Self::known("11101000")
    }

    pub fn not() -> Self {
        Self::known("10")
    }

    pub fn identity() -> Self {
        Self::known("01")
    }

    pub fn and() -> Self {
        Self::known("0001")
    }

    pub fn or() -> Self {
        Self::known("0111")
    }

    pub fn nand() -> Self {
        Self::known("1110")
    }

    pub fn nor() -> Self {
        Self::known("1000")
    }

    pub fn xor2() -> Self {
        Self::known("0110")
    }

    /// Parity of `fan_in` bits.
    pub fn xor(fan_in: usize) -> Result<Self> {
        Self::from_fn(fan_in, |a| a.iter().filter(|&&b| b).count() % 2 == 1)
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn rows(&self) -> &[bool] {
        &self.rows
    }

    pub fn eval_row(&self, row: usize) -> bool {
        self.rows[row]
    }

    pub fn eval(&self, args: &[bool]) -> bool {
        debug_assert_eq!(args.len(), self.fan_in);
        let row = args.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.rows[row]
    }

    pub fn to_bits(&self) -> String {
        self.rows.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// True when every row has the same output.
    pub fn is_constant(&self) -> bool {
        self.rows.iter().all(|&b| b == self.rows[0])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Input(String),
    Constant(bool),
    Gate(TruthTable),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub inputs: Vec<NodeId>,
}

impl Node {
    pub fn input(label: impl Into<String>) -> Self {
        Self { kind: NodeKind::Input(label.into()), inputs: Vec::new() }
    }

    pub fn constant(value: bool) -> Self {
        Self { kind: NodeKind::Constant(value), inputs: Vec::new() }
    }

    pub fn gate(table: TruthTable, inputs: Vec<NodeId>) -> Self {
        Self { kind: NodeKind::Gate(table), inputs }
    }

    pub fn is_gate(&self) -> bool {
        matches!(self.kind, NodeKind::Gate(_))
    }

    pub fn is_input(&self) -> bool {
        matches!(self.kind, NodeKind::Input(_))
    }

    pub fn table(&self) -> Option<&TruthTable> {
        match &self.kind {
            NodeKind::Gate(t) => Some(t),
            _ => None,
        }
    }
}

/// One problem found by [`Circuit::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoOutputs,
    DanglingOutput(NodeId),
    DanglingWire { gate: NodeId, wire: NodeId },
    ArityMismatch { gate: NodeId, expected: usize, found: usize },
    SourceWithInputs(NodeId),
    FanInExceeded { gate: NodeId, fan_in: usize, limit: usize },
    Cycle(Vec<NodeId>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoOutputs => write!(f, "circuit has no outputs"),
            Violation::DanglingOutput(id) => write!(f, "output {id} does not exist"),
            Violation::DanglingWire { gate, wire } => {
                write!(f, "gate {gate} reads nonexistent node {wire}")
            }
            Violation::ArityMismatch { gate, expected, found } => write!(
                f,
                "gate {gate} has a fan-in {expected} table but {found} input wires"
            ),
            Violation::SourceWithInputs(id) => {
                write!(f, "input/constant node {id} has incoming wires")
            }
            Violation::FanInExceeded { gate, fan_in, limit } => {
                write!(f, "gate {gate} has fan-in {fan_in}, circuit limit is {limit}")
            }
            Violation::Cycle(nodes) => {
                let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                write!(f, "cycle through {}", ids.join(" -> "))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidCircuit(self.violations))
        }
    }
}

/// A Boolean circuit: nodes, ordered gate inputs and designated outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
    fan_in_limit: Option<usize>,
}

impl Circuit {
    /// Assembles a circuit without checking it; see [`Circuit::validate`].
    pub fn new(nodes: Vec<Node>, outputs: Vec<NodeId>) -> Self {
        Self { nodes, outputs, fan_in_limit: None }
    }

    /// Declares the maximum fan-in that `validate` enforces.
    pub fn with_fan_in_limit(mut self, k: usize) -> Self {
        self.fan_in_limit = Some(k);
        self
    }

    pub fn fan_in_limit(&self) -> Option<usize> {
        self.fan_in_limit
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0)
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Input nodes in node order; assignments are indexed the same way.
    pub fn input_ids(&self) -> Vec<NodeId> {
        self.ids().filter(|&id| self.nodes[id.0].is_input()).collect()
    }

    pub fn gate_ids(&self) -> Vec<NodeId> {
        self.ids().filter(|&id| self.nodes[id.0].is_gate()).collect()
    }

    pub fn num_inputs(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_input()).count()
    }

    pub fn num_gates(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_gate()).count()
    }

    /// Looks up an input node by label.
    pub fn input_by_label(&self, label: &str) -> Option<NodeId> {
        self.ids().find(|&id| matches!(&self.nodes[id.0].kind, NodeKind::Input(l) if l == label))
    }

    /// Largest gate fan-in (0 when there are no gates).
    pub fn fan_in(&self) -> usize {
        self.nodes.iter().filter_map(|n| n.table()).map(|t| t.fan_in()).max().unwrap_or(0)
    }

    /// Number of outgoing wires, counted with multiplicity.
    pub fn fan_out(&self, id: NodeId) -> usize {
        self.nodes.iter().map(|n| n.inputs.iter().filter(|&&w| w == id).count()).sum()
    }

    /// Distinct successors of every node, sorted by id.
    pub fn successors(&self) -> Vec<Vec<NodeId>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for &w in &node.inputs {
                if w.0 < self.nodes.len() {
                    succ[w.0].push(NodeId(i));
                }
            }
        }
        for s in &mut succ {
            s.sort_unstable();
            s.dedup();
        }
        succ
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.nodes.len();
        let mut violations = Vec::new();
        if self.outputs.is_empty() {
            violations.push(Violation::NoOutputs);
        }
        for &o in &self.outputs {
            if o.0 >= n {
                violations.push(Violation::DanglingOutput(o));
            }
        }
        let mut wiring_ok = true;
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            match &node.kind {
                NodeKind::Gate(t) => {
                    if t.fan_in() != node.inputs.len() {
                        violations.push(Violation::ArityMismatch {
                            gate: id,
                            expected: t.fan_in(),
                            found: node.inputs.len(),
                        });
                    }
                    if let Some(limit) = self.fan_in_limit {
                        if node.inputs.len() > limit {
                            violations.push(Violation::FanInExceeded {
                                gate: id,
                                fan_in: node.inputs.len(),
                                limit,
                            });
                        }
                    }
                }
                _ => {
                    if !node.inputs.is_empty() {
                        violations.push(Violation::SourceWithInputs(id));
                    }
                }
            }
            for &w in &node.inputs {
                if w.0 >= n {
                    wiring_ok = false;
                    violations.push(Violation::DanglingWire { gate: id, wire: w });
                }
            }
        }
        if wiring_ok {
            if let Err(cycle) = self.kahn_order() {
                violations.push(Violation::Cycle(cycle));
            }
        }
        ValidationReport { violations }
    }

    /// Kahn's algorithm, always releasing the smallest ready id first so the
    /// order is a pure function of the circuit. On failure returns one cycle.
    fn kahn_order(&self) -> std::result::Result<Vec<NodeId>, Vec<NodeId>> {
        let n = self.nodes.len();
        let succ = self.successors();
        let mut indeg: Vec<usize> = self
            .nodes
            .iter()
            .map(|node| {
                let mut ins: Vec<usize> = node.inputs.iter().map(|w| w.0).collect();
                ins.sort_unstable();
                ins.dedup();
                ins.len()
            })
            .collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(NodeId(i));
            for &s in &succ[i] {
                indeg[s.0] -= 1;
                if indeg[s.0] == 0 {
                    ready.push(Reverse(s.0));
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        // Walk backwards along unresolved inputs until a node repeats.
        let start = (0..n).find(|&i| indeg[i] > 0).expect("unresolved node");
        let mut seen = vec![usize::MAX; n];
        let mut path = Vec::new();
        let mut cur = start;
        while seen[cur] == usize::MAX {
            seen[cur] = path.len();
            path.push(NodeId(cur));
            cur = self.nodes[cur]
                .inputs
                .iter()
                .map(|w| w.0)
                .find(|&w| indeg[w] > 0)
                .expect("unresolved node has an unresolved input");
        }
        let mut cycle = path[seen[cur]..].to_vec();
        cycle.reverse();
        Err(cycle)
    }

    /// Topological order of all nodes; fails unless the circuit validates.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        self.validate().into_result()?;
        Ok(self.kahn_order().expect("validated circuit is acyclic"))
    }

    fn check_node(&self, id: NodeId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(id))
        }
    }

    /// Value of every node under `assignment` (one bit per input, node order).
    pub fn evaluate_nodes(&self, assignment: &[bool]) -> Result<Vec<bool>> {
        let plan = Plan::new(self)?;
        plan.check_assignment(assignment)?;
        Ok(plan.eval(assignment, |_| false))
    }

    pub fn evaluate_noiseless(&self, assignment: &[bool]) -> Result<Vec<bool>> {
        let values = self.evaluate_nodes(assignment)?;
        Ok(self.outputs.iter().map(|o| values[o.0]).collect())
    }

    /// Length in edges of the longest directed path.
    pub fn depth(&self) -> Result<usize> {
        let order = self.topological_order()?;
        let mut longest = vec![0usize; self.nodes.len()];
        for id in order {
            let node = &self.nodes[id.0];
            longest[id.0] = node.inputs.iter().map(|w| longest[w.0] + 1).max().unwrap_or(0);
        }
        Ok(longest.into_iter().max().unwrap_or(0))
    }

    /// Edge count of the shortest directed path from `source` to `target`.
    pub fn shortest_distance(&self, source: NodeId, target: NodeId) -> Result<Option<usize>> {
        self.validate().into_result()?;
        self.check_node(source)?;
        self.check_node(target)?;
        let succ = self.successors();
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[source.0] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            if v == target {
                return Ok(Some(dist[v.0]));
            }
            for &s in &succ[v.0] {
                if dist[s.0] == usize::MAX {
                    dist[s.0] = dist[v.0] + 1;
                    queue.push_back(s);
                }
            }
        }
        Ok(None)
    }

    /// Nodes from which `target` is reachable (including `target`).
    pub fn ancestors_of(&self, targets: &[NodeId]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = targets.iter().copied().filter(|t| t.0 < mark.len()).collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut mark[v.0], true) {
                continue;
            }
            stack.extend(self.nodes[v.0].inputs.iter().copied().filter(|w| !mark[w.0]));
        }
        mark
    }

    /// Nodes reachable from `source` (including `source`).
    pub fn descendants_of(&self, source: NodeId) -> Vec<bool> {
        let succ = self.successors();
        let mut mark = vec![false; self.nodes.len()];
        let mut stack = vec![source];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut mark[v.0], true) {
                continue;
            }
            stack.extend(succ[v.0].iter().copied().filter(|s| !mark[s.0]));
        }
        mark
    }

    /// Every directed path from `source` to `target`, as vertex sequences in
    /// lexicographic order of node ids.
    pub fn enumerate_paths(&self, source: NodeId, target: NodeId) -> Result<Vec<Vec<NodeId>>> {
        self.validate().into_result()?;
        self.check_node(source)?;
        self.check_node(target)?;
        let succ = self.successors();
        let useful = self.ancestors_of(&[target]);
        let mut paths = Vec::new();
        if !useful[source.0] {
            return Ok(paths);
        }
        let mut path = vec![source];
        fn walk(
            succ: &[Vec<NodeId>],
            useful: &[bool],
            target: NodeId,
            path: &mut Vec<NodeId>,
            out: &mut Vec<Vec<NodeId>>,
        ) {
            let v = *path.last().expect("nonempty path");
            if v == target {
                out.push(path.clone());
                return;
            }
            for &s in &succ[v.0] {
                if useful[s.0] {
                    path.push(s);
                    walk(succ, useful, target, path, out);
                    path.pop();
                }
            }
        }
        walk(&succ, &useful, target, &mut path, &mut paths);
        Ok(paths)
    }

    /// True iff the single-output circuit is a formula: every other node
    /// feeds exactly one wire and the output feeds none.
    pub fn is_formula(&self) -> Result<bool> {
        self.validate().into_result()?;
        if self.outputs.len() != 1 {
            return Err(Error::NotSingleOutput(self.outputs.len()));
        }
        let out = self.outputs[0];
        let mut fan_out = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            for w in &node.inputs {
                fan_out[w.0] += 1;
            }
        }
        Ok(self
            .ids()
            .all(|id| fan_out[id.0] == if id == out { 0 } else { 1 }))
    }

    /// Structural fingerprint that is invariant under renumbering of nodes.
    pub fn canonical_form(&self) -> Result<CanonicalForm> {
        let order = self.topological_order()?;
        let mut label = vec![0u64; self.nodes.len()];
        for id in order {
            let node = &self.nodes[id.0];
            let mut h = DefaultHasher::new();
            match &node.kind {
                NodeKind::Input(l) => (0u8, l).hash(&mut h),
                NodeKind::Constant(b) => (1u8, b).hash(&mut h),
                NodeKind::Gate(t) => {
                    (2u8, t.rows()).hash(&mut h);
                    for w in &node.inputs {
                        label[w.0].hash(&mut h);
                    }
                }
            }
            label[id.0] = h.finish();
        }
        let outputs = self.outputs.iter().map(|o| label[o.0]).collect();
        label.sort_unstable();
        Ok(CanonicalForm { nodes: label, outputs })
    }

    pub fn is_isomorphic(&self, other: &Circuit) -> bool {
        match (self.canonical_form(), other.canonical_form()) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}

/// See [`Circuit::canonical_form`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    nodes: Vec<u64>,
    outputs: Vec<u64>,
}

/// Incremental construction of circuits; `build` validates.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
    fan_in_limit: Option<usize>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fan_in_limit(&mut self, k: usize) -> &mut Self {
        self.fan_in_limit = Some(k);
        self
    }

    pub fn add(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, label: impl Into<String>) -> NodeId {
        self.add(Node::input(label))
    }

    pub fn constant(&mut self, value: bool) -> NodeId {
        self.add(Node::constant(value))
    }

    pub fn gate(&mut self, table: TruthTable, inputs: &[NodeId]) -> NodeId {
        self.add(Node::gate(table, inputs.to_vec()))
    }

    pub fn output(&mut self, id: NodeId) -> &mut Self {
        self.outputs.push(id);
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self) -> Result<Circuit> {
        let mut c = Circuit::new(self.nodes, self.outputs);
        c.fan_in_limit = self.fan_in_limit;
        c.validate().into_result()?;
        Ok(c)
    }
}

/// A validated circuit flattened for repeated evaluation.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub(crate) len: usize,
    pub(crate) steps: Vec<Step>,
    /// `inputs[k]` is the node index of the k-th input.
    pub(crate) inputs: Vec<usize>,
    /// Node index of every gate, in plan order.
    pub(crate) gates: Vec<usize>,
    pub(crate) outputs: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    Input { node: usize, pos: usize },
    Constant { node: usize, value: bool },
    Gate { node: usize, slot: usize, inputs: Vec<usize>, rows: Vec<bool> },
}

impl Plan {
    pub(crate) fn new(circuit: &Circuit) -> Result<Self> {
        let order = circuit.topological_order()?;
        let inputs = circuit.input_ids().into_iter().map(|i| i.0).collect::<Vec<_>>();
        let mut input_pos = vec![usize::MAX; circuit.len()];
        for (k, &i) in inputs.iter().enumerate() {
            input_pos[i] = k;
        }
        let mut steps = Vec::with_capacity(order.len());
        let mut gates = Vec::new();
        for id in order {
            let node = &circuit.nodes[id.0];
            steps.push(match &node.kind {
                NodeKind::Input(_) => Step::Input { node: id.0, pos: input_pos[id.0] },
                NodeKind::Constant(v) => Step::Constant { node: id.0, value: *v },
                NodeKind::Gate(t) => {
                    let slot = gates.len();
                    gates.push(id.0);
                    Step::Gate {
                        node: id.0,
                        slot,
                        inputs: node.inputs.iter().map(|w| w.0).collect(),
                        rows: t.rows().to_vec(),
                    }
                }
            });
        }
        Ok(Self {
            len: circuit.len(),
            steps,
            inputs,
            gates,
            outputs: circuit.outputs.iter().map(|o| o.0).collect(),
        })
    }

    pub(crate) fn check_assignment(&self, assignment: &[bool]) -> Result<()> {
        if assignment.len() == self.inputs.len() {
            Ok(())
        } else {
            Err(Error::AssignmentLength { expected: self.inputs.len(), found: assignment.len() })
        }
    }

    /// Evaluates every node; `flip(slot)` says whether gate `slot` malfunctions.
    pub(crate) fn eval(&self, assignment: &[bool], mut flip: impl FnMut(usize) -> bool) -> Vec<bool> {
        let mut values = vec![false; self.len];
        self.eval_into(assignment, &mut values, &mut flip);
        values
    }

    pub(crate) fn eval_into(
        &self,
        assignment: &[bool],
        values: &mut [bool],
        flip: &mut impl FnMut(usize) -> bool,
    ) {
        for step in &self.steps {
            match step {
                Step::Input { node, pos } => values[*node] = assignment[*pos],
                Step::Constant { node, value } => values[*node] = *value,
                Step::Gate { node, slot, inputs, rows } => {
                    let row = inputs.iter().fold(0usize, |acc, &w| (acc << 1) | values[w] as usize);
                    values[*node] = rows[row] ^ flip(*slot);
                }
            }
        }
    }

    /// Bit-sliced evaluation: lane `j` of every word is an independent run.
    /// `flips(slot)` returns the malfunction word of gate `slot`.
    pub(crate) fn eval_words(
        &self,
        assignment: &[bool],
        values: &mut [u64],
        mut flips: impl FnMut(usize) -> u64,
    ) {
        for step in &self.steps {
            match step {
                Step::Input { node, pos } => values[*node] = if assignment[*pos] { !0 } else { 0 },
                Step::Constant { node, value } => values[*node] = if *value { !0 } else { 0 },
                Step::Gate { node, slot, inputs, rows } => {
                    let k = inputs.len();
                    let mut out = 0u64;
                    for (row, &bit) in rows.iter().enumerate() {
                        if !bit {
                            continue;
                        }
                        let mut term = !0u64;
                        for (i, &w) in inputs.iter().enumerate() {
                            let want = (row >> (k - 1 - i)) & 1 == 1;
                            term &= if want { values[w] } else { !values[w] };
                        }
                        out |= term;
                    }
                    values[*node] = out ^ flips(*slot);
                }
            }
        }
    }
}

/// All `2^n` assignments of `n` inputs, first input most significant.
pub fn assignment_from_index(index: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect()
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Precondition(format!("invalid bit {other:?} in {s:?}"))),
        })
        .collect()
}
