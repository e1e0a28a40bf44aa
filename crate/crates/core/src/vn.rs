//! Majority and minority reliability constructions and their error recursion.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::circuit::{Circuit, CircuitBuilder, NodeId, NodeKind, TruthTable};
use crate::error::{check_prob, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GateFamily {
    Maj3,
    Min3,
}

impl GateFamily {
    pub fn table(self) -> TruthTable {
        match self {
            GateFamily::Maj3 => TruthTable::maj3(),
            GateFamily::Min3 => TruthTable::min3(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateFamily::Maj3 => "maj3",
            GateFamily::Min3 => "min3",
        }
    }

    /// Multiple of δ in the one-level condition `cδ + 3g_δ(η) ≤ η`.
    fn delta_multiple(self) -> f64 {
        match self {
            GateFamily::Maj3 => 1.0,
            GateFamily::Min3 => 2.0,
        }
    }
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maj3" => Ok(GateFamily::Maj3),
            "min3" => Ok(GateFamily::Min3),
            other => Err(Error::Precondition(format!("unknown gate family {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    Not,
    Nand,
    Nor,
    And,
    Or,
}

/// A MIN3-only circuit computing the named function of inputs `a` (and `b`).
pub fn gadget(kind: GadgetKind) -> Circuit {
    let min = TruthTable::min3;
    let mut b = CircuitBuilder::new();
    b.fan_in_limit(3);
    let a = b.input("a");
    let out = if kind == GadgetKind::Not {
        let zero = b.constant(false);
        let one = b.constant(true);
        b.gate(min(), &[a, zero, one])
    } else {
        let y = b.input("b");
        let (pad, invert) = match kind {
            GadgetKind::Nand => (false, false),
            GadgetKind::Nor => (true, false),
            GadgetKind::And => (false, true),
            GadgetKind::Or => (true, true),
            GadgetKind::Not => unreachable!(),
        };
        let c = b.constant(pad);
        let g = b.gate(min(), &[a, y, c]);
        if invert {
            let zero = if pad { b.constant(false) } else { c };
            let one = if pad { c } else { b.constant(true) };
            b.gate(min(), &[g, zero, one])
        } else {
            g
        }
    };
    b.output(out);
    b.build().expect("gadgets are well formed")
}

/// Duplicates output `i` into `multiplicity[i]` identically wired copies.
pub fn replicate_outputs(circuit: &Circuit, multiplicity: &[usize]) -> Result<Circuit> {
    circuit.validate().into_result()?;
    if multiplicity.len() != circuit.outputs().len() {
        return Err(Error::DimensionMismatch { expected: circuit.outputs().len(), found: multiplicity.len() });
    }
    if multiplicity.contains(&0) {
        return Err(Error::Precondition("output multiplicity must be at least 1".into()));
    }
    let mut nodes = circuit.nodes().to_vec();
    let mut outputs = Vec::new();
    for (&o, &m) in circuit.outputs().iter().zip(multiplicity) {
        outputs.push(o);
        for _ in 1..m {
            let node = &circuit.nodes()[o.0];
            if node.is_gate() {
                nodes.push(node.clone());
                outputs.push(NodeId(nodes.len() - 1));
            } else {
                outputs.push(o);
            }
        }
    }
    let mut out = Circuit::new(nodes, outputs);
    if let Some(k) = circuit.fan_in_limit() {
        out = out.with_fan_in_limit(k);
    }
    out.validate().into_result()?;
    Ok(out)
}

/// Upper limit on the size of a transformed circuit.
pub const MAX_TRANSFORM_NODES: usize = 1 << 20;

struct Transform<'a> {
    src: &'a Circuit,
    family: GateFamily,
    b: CircuitBuilder,
    sources: Vec<Option<NodeId>>,
    not_consts: Option<(NodeId, NodeId)>,
}

impl Transform<'_> {
    fn source(&mut self, id: NodeId) -> NodeId {
        if let Some(n) = self.sources[id.0] {
            return n;
        }
        let n = match &self.src.nodes()[id.0].kind {
            NodeKind::Constant(v) => self.b.constant(*v),
            _ => unreachable!("inputs are created up front"),
        };
        self.sources[id.0] = Some(n);
        n
    }

    fn gate(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        if self.b.len() >= MAX_TRANSFORM_NODES {
            return Err(Error::SizeLimit {
                what: "transformed circuit node count",
                found: self.b.len(),
                limit: MAX_TRANSFORM_NODES,
            });
        }
        Ok(self.b.gate(self.family.table(), inputs))
    }

    /// Builds nodes whose noiseless values equal those of `targets`.
    fn construct(&mut self, targets: &[NodeId]) -> Result<Vec<NodeId>> {
        let mut result = vec![NodeId(usize::MAX); targets.len()];
        let mut next = Vec::new();
        let mut gate_targets = Vec::new();
        for (pos, &t) in targets.iter().enumerate() {
            let node = &self.src.nodes()[t.0];
            if node.is_gate() {
                gate_targets.push((pos, next.len()));
                next.extend_from_slice(&node.inputs);
            } else {
                result[pos] = self.source(t);
            }
        }
        if next.is_empty() {
            return Ok(result);
        }
        let copies = [self.construct(&next)?, self.construct(&next)?, self.construct(&next)?];
        let mut restored = Vec::with_capacity(next.len());
        for j in 0..next.len() {
            restored.push(self.gate(&[copies[0][j], copies[1][j], copies[2][j]])?);
        }
        for (pos, start) in gate_targets {
            let mut g = self.gate(&restored[start..start + 3])?;
            if self.family == GateFamily::Min3 {
                let (zero, one) = match self.not_consts {
                    Some(c) => c,
                    None => {
                        let c = (self.b.constant(false), self.b.constant(true));
                        self.not_consts = Some(c);
                        c
                    }
                };
                g = self.gate(&[g, zero, one])?;
            }
            result[pos] = g;
        }
        Ok(result)
    }
}

/// Replaces every gate by three independently built copies of its
/// inputs, a restoring layer of family gates and a final family gate.
/// MIN3 outputs are inverted back by a `MIN3(·, 0, 1)` stage. Inputs are
/// shared by all copies.
pub fn vn_transform(circuit: &Circuit, family: GateFamily) -> Result<Circuit> {
    circuit.validate().into_result()?;
    if circuit.outputs().len() != 1 {
        return Err(Error::NotSingleOutput(circuit.outputs().len()));
    }
    let table = family.table();
    if let Some(bad) = circuit.gate_ids().into_iter().find(|&g| circuit.nodes()[g.0].table() != Some(&table)) {
        return Err(Error::Precondition(format!("gate {bad} is not a {family} gate")));
    }
    let mut t = Transform {
        src: circuit,
        family,
        b: CircuitBuilder::new(),
        sources: vec![None; circuit.len()],
        not_consts: None,
    };
    t.b.fan_in_limit(3);
    for i in circuit.input_ids() {
        let label = match &circuit.nodes()[i.0].kind {
            NodeKind::Input(l) => l.clone(),
            _ => unreachable!(),
        };
        t.sources[i.0] = Some(t.b.input(label));
    }
    let out = t.construct(circuit.outputs())?[0];
    t.b.output(out);
    t.b.build()
}

/// `g_δ(η) = δ + (1 − 2δ)(3η² − 2η³)`.
pub fn g_delta(delta: f64, eta: f64) -> Result<f64> {
    check_prob("δ", delta, 0.0, 0.5)?;
    check_prob("η", eta, 0.0, 0.5)?;
    Ok(delta + (1.0 - 2.0 * delta) * (3.0 * eta * eta - 2.0 * eta.powi(3)))
}

fn check_triple(delta: f64, etas: [f64; 3]) -> Result<()> {
    check_prob("δ", delta, 0.0, 1.0)?;
    for e in etas {
        check_prob("input error η", e, 0.0, 1.0)?;
    }
    Ok(())
}

/// `min(1, δ + η₁ + η₂ + η₃)`.
pub fn general_bound(delta: f64, etas: [f64; 3]) -> Result<f64> {
    check_triple(delta, etas)?;
    Ok((delta + etas.iter().sum::<f64>()).min(1.0))
}

/// `δ + (1 − 2δ)Θ` with `Θ = η₁η₂ + η₁η₃ + η₂η₃ − 2η₁η₂η₃`.
pub fn special_bound(delta: f64, etas: [f64; 3]) -> Result<f64> {
    check_triple(delta, etas)?;
    let [a, b, c] = etas;
    let theta = a * b + a * c + b * c - 2.0 * a * b * c;
    Ok(delta + (1.0 - 2.0 * delta) * theta)
}

/// `η³ + aη² + bη + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CubicPoly {
    pub fn eval(&self, x: f64) -> f64 {
        ((x + self.a) * x + self.b) * x + self.c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * x + 2.0 * self.a) * x + self.b
    }
}

impl fmt::Display for CubicPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "η³ {:+}η² {:+}η {:+}", self.a, self.b, self.c)
    }
}

/// `p_δ` (MIN3) or `q_δ` (MAJ3); the cubic is `≥ 0` exactly where the
/// one-level condition `cδ + 3g_δ(η) ≤ η` holds.
pub fn cubic(family: GateFamily, delta: f64) -> Result<CubicPoly> {
    if !(delta.is_finite() && (0.0..0.5).contains(&delta)) {
        return Err(Error::ProbabilityRange { what: "δ (cubic needs δ < 1/2)", value: delta, lo: 0.0, hi: 0.5 });
    }
    let s = 1.0 - 2.0 * delta;
    let c = match family {
        GateFamily::Min3 => -5.0 * delta / (6.0 * s),
        GateFamily::Maj3 => -2.0 * delta / (3.0 * s),
    };
    Ok(CubicPoly { a: -1.5, b: 1.0 / (6.0 * s), c })
}

/// Open-interval endpoints used for root isolation.
pub const ETA_EDGE: f64 = 1e-12;
const ROOT_TOLERANCE: f64 = 1e-12;

fn bisect(p: &CubicPoly, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: sign(p(lo)) != sign(p(hi)); returns the root's left bracket.
    let rising = p.eval(lo) < 0.0;
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if (p.eval(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The interval of `(0, 1/2)` on which the family's cubic is non-negative.
pub fn feasible_eta(family: GateFamily, delta: f64) -> Result<Option<(f64, f64)>> {
    let p = cubic(family, delta)?;
    let (lo_end, hi_end) = (ETA_EDGE, 0.5 - ETA_EDGE);
    // The cubic rises up to its local maximum and falls after it.
    let disc = 9.0 - 12.0 * p.b;
    let peak = if disc > 0.0 { ((3.0 - disc.sqrt()) / 6.0).clamp(lo_end, hi_end) } else { hi_end };
    if p.eval(peak) < 0.0 {
        return Ok(None);
    }
    let lo = if p.eval(lo_end) >= 0.0 { lo_end } else { bisect(&p, lo_end, peak) };
    let hi = if p.eval(hi_end) >= 0.0 { hi_end } else { bisect(&p, peak, hi_end) };
    Ok(Some((lo, hi)))
}

/// Largest δ for which a feasible η exists, by bisection.
pub fn critical_delta(family: GateFamily) -> f64 {
    let feasible = |d: f64| matches!(feasible_eta(family, d), Ok(Some(_)));
    let (mut lo, mut hi) = (0.0, 0.25);
    debug_assert!(feasible(lo) && !feasible(hi));
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evidence that `η` bounds the output error at every construction level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionCertificate {
    pub family: GateFamily,
    pub delta: f64,
    pub eta: f64,
    /// Left-hand side `cδ + 3g_δ(η)` of the one-level condition.
    pub one_level: f64,
    /// `e₀ = 0`, `e_{l+1} = cδ + 3g_δ(e_l)`; every entry is `≤ η`.
    pub trajectory: Vec<f64>,
}

/// Checks `η ≥ δ` and `cδ + 3g_δ(η) ≤ η` (`c = 2` for MIN3, `1` for MAJ3).
/// Because the one-level map is increasing, the error after any number
/// of levels then stays below `η`.
pub fn recursion_bound(levels: usize, family: GateFamily, delta: f64, eta: f64) -> Result<RecursionCertificate> {
    check_prob("δ", delta, 0.0, 0.5)?;
    check_prob("η", eta, 0.0, 0.5)?;
    if eta < delta {
        return Err(Error::Precondition(format!("η = {eta} is below the gate noise δ = {delta}")));
    }
    let step = |e: f64| -> Result<f64> { Ok(family.delta_multiple() * delta + 3.0 * g_delta(delta, e)?) };
    let one_level = step(eta)?;
    if one_level > eta {
        return Err(Error::Precondition(format!(
            "infeasible η = {eta}: one-level error {one_level} exceeds it for {family} at δ = {delta}"
        )));
    }
    let mut trajectory = vec![0.0f64];
    for _ in 0..levels {
        let e = *trajectory.last().unwrap();
        trajectory.push(step(e.min(0.5))?);
    }
    Ok(RecursionCertificate { family, delta, eta, one_level, trajectory })
}
