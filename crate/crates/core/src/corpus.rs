//! A fixed collection of small circuits (at most 12 gates, fan-in at most 3)
//! used by the cross-checks and the acceptance suite.

use crate::circuit::Circuit;
use crate::netlist::parse;
use crate::vn::{vn_transform, GateFamily};

/// Five inputs and five fan-in-2 gates; `G2` feeds both `G3` and `G4`.
pub const FIGURE1: &str = "\
input x1
input x2
input x3
input x4
input x5
gate G1 = AND(x1,x2)
gate G2 = OR(x3,x4)
gate G3 = XOR2(G1,G2)
gate G4 = NAND(G2,x5)
gate G5 = OR(G3,G4)
output G5";

/// Five inputs and five gates of fan-in up to 3, with `X3` feeding
/// `G1`, `G2` and `G3`: there are four paths from `X3` to `Y = G5`.
pub const FIGURE6: &str = "\
input X1
input X2
input X3
input X4
input X5
gate G1 = MAJ3(X1,X2,X3)
gate G2 = XOR2(X3,X4)
gate G3 = MAJ3(G1,X3,G2)
gate G4 = AND(G2,X5)
gate G5 = XOR2(G3,G4)
output G5";

/// The three-gate, depth-2 MIN3 circuit used for the end-to-end construction check.
pub const MIN3_DEPTH2: &str = "\
input x1
input x2
input x3
input x4
input x5
gate G1 = MIN3(x1,x2,x3)
gate G2 = MIN3(x2,x3,x4)
gate G3 = MIN3(G1,G2,x5)
output G3";

const NETLISTS: &[(&str, &str)] = &[
    ("figure1", FIGURE1),
    ("figure6", FIGURE6),
    ("min3_depth2", MIN3_DEPTH2),
    ("single_maj3", "input a\ninput b\ninput c\ngate g = MAJ3(a,b,c)\noutput g"),
    ("single_min3", "input a\ninput b\ninput c\ngate g = MIN3(a,b,c)\noutput g"),
    ("maj3_series", "input a\ninput b\ninput c\ngate g1 = MAJ3(a,b,c)\ngate g2 = MAJ3(g1,a,b)\noutput g2"),
    (
        "identity_chain4",
        "input x\ngate g1 = TABLE[01](x)\ngate g2 = TABLE[01](g1)\ngate g3 = TABLE[01](g2)\ngate g4 = TABLE[01](g3)\noutput g4",
    ),
    (
        "not_chain6",
        "input x\ngate g1 = NOT(x)\ngate g2 = NOT(g1)\ngate g3 = NOT(g2)\ngate g4 = NOT(g3)\ngate g5 = NOT(g4)\ngate g6 = NOT(g5)\noutput g6",
    ),
    ("diamond", "input x\ninput y\ngate a = AND(x,y)\ngate b = NOT(x)\ngate w = OR(a,b)\noutput w"),
    (
        "maj_tree9",
        "input x1\ninput x2\ninput x3\ninput x4\ninput x5\ninput x6\ninput x7\ninput x8\ninput x9\n\
         gate g1 = MAJ3(x1,x2,x3)\ngate g2 = MAJ3(x4,x5,x6)\ngate g3 = MAJ3(x7,x8,x9)\ngate r = MAJ3(g1,g2,g3)\noutput r",
    ),
    (
        "min_tree9",
        "input x1\ninput x2\ninput x3\ninput x4\ninput x5\ninput x6\ninput x7\ninput x8\ninput x9\n\
         gate g1 = MIN3(x1,x2,x3)\ngate g2 = MIN3(x4,x5,x6)\ngate g3 = MIN3(x7,x8,x9)\ngate r = MIN3(g1,g2,g3)\noutput r",
    ),
    (
        "xor_tree4",
        "input a\ninput b\ninput c\ninput d\ngate l = XOR2(a,b)\ngate r = XOR2(c,d)\ngate t = XOR2(l,r)\noutput t",
    ),
    (
        "xor3_tree9",
        "input x1\ninput x2\ninput x3\ninput x4\ninput x5\ninput x6\ninput x7\ninput x8\ninput x9\n\
         gate g1 = TABLE[01101001](x1,x2,x3)\ngate g2 = TABLE[01101001](x4,x5,x6)\n\
         gate g3 = TABLE[01101001](x7,x8,x9)\ngate r = TABLE[01101001](g1,g2,g3)\noutput r",
    ),
    (
        "parity_chain5",
        "input a\ninput b\ninput c\ninput d\ninput e\ngate p1 = XOR2(a,b)\ngate p2 = XOR2(p1,c)\ngate p3 = XOR2(p2,d)\ngate p4 = XOR2(p3,e)\noutput p4",
    ),
    (
        "mux",
        "input s\ninput a\ninput b\ngate ns = NOT(s)\ngate l = AND(s,a)\ngate r = AND(ns,b)\ngate o = OR(l,r)\noutput o",
    ),
    (
        "nand_ladder",
        "input a\ninput b\ninput c\ninput d\ngate n1 = NAND(a,b)\ngate n2 = NAND(n1,c)\ngate n3 = NAND(n2,d)\ngate n4 = NAND(n3,n1)\noutput n4",
    ),
    (
        "full_adder_sum",
        "input a\ninput b\ninput cin\ngate h = XOR2(a,b)\ngate s = XOR2(h,cin)\ngate c = MAJ3(a,b,cin)\ngate o = AND(s,c)\noutput s",
    ),
    (
        "reconvergent",
        "input a\ninput b\ngate g1 = AND(a,b)\ngate g2 = OR(a,b)\ngate g3 = XOR2(g1,g2)\ngate g4 = MAJ3(g1,g2,g3)\noutput g4",
    ),
    (
        "nand_gadget",
        "input a\ninput b\nconst zero = 0\ngate g = MIN3(a,b,zero)\noutput g",
    ),
    (
        "and_gadget",
        "input a\ninput b\nconst zero = 0\nconst one = 1\ngate n = MIN3(a,b,zero)\ngate g = MIN3(n,zero,one)\noutput g",
    ),
    (
        "fanout_star",
        "input a\ninput b\ninput c\ngate u = AND(a,b)\ngate v = OR(a,c)\ngate w = XOR2(a,b)\ngate o = MAJ3(u,v,w)\noutput o",
    ),
    (
        "comparator2",
        "input a1\ninput a0\ninput b1\ninput b0\n\
         gate nb1 = NOT(b1)\ngate nb0 = NOT(b0)\ngate hi = AND(a1,nb1)\ngate eq = TABLE[1001](a1,b1)\n\
         gate lo = AND(a0,nb0)\ngate el = AND(eq,lo)\ngate o = OR(hi,el)\noutput o",
    ),
    (
        "deep_mixed12",
        "input a\ninput b\ninput c\ninput d\n\
         gate g1 = AND(a,b)\ngate g2 = OR(c,d)\ngate g3 = XOR2(g1,g2)\ngate g4 = MAJ3(a,g3,d)\n\
         gate g5 = NOT(g4)\ngate g6 = NAND(g5,b)\ngate g7 = MIN3(g6,g3,c)\ngate g8 = OR(g7,g1)\n\
         gate g9 = XOR2(g8,g2)\ngate g10 = MAJ3(g9,g6,a)\ngate g11 = AND(g10,g4)\ngate g12 = OR(g11,g9)\noutput g12",
    ),
];

/// Named corpus circuits, in a fixed order. The last two entries are the
/// one-level constructions of a single MAJ3 and a single MIN3 gate.
pub fn corpus() -> Vec<(String, Circuit)> {
    let mut out: Vec<(String, Circuit)> = NETLISTS
        .iter()
        .map(|(name, text)| (name.to_string(), parse(text).expect("corpus netlists are valid")))
        .collect();
    for (name, family) in [("vn_single_maj3", GateFamily::Maj3), ("vn_single_min3", GateFamily::Min3)] {
        let base = out
            .iter()
            .find(|(n, _)| n == &format!("single_{family}"))
            .map(|(_, c)| c.clone())
            .expect("base circuit present");
        out.push((name.to_string(), vn_transform(&base, family).expect("single gates transform")));
    }
    out
}

pub fn figure1() -> Circuit {
    parse(FIGURE1).expect("valid netlist")
}

pub fn figure6() -> Circuit {
    parse(FIGURE6).expect("valid netlist")
}

pub fn min3_depth2() -> Circuit {
    parse(MIN3_DEPTH2).expect("valid netlist")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::path_sum_bound;
    use crate::circuit::NodeId;
    use crate::netlist::serialize;

    fn gate_with_inputs(c: &Circuit, wires: &[NodeId]) -> NodeId {
        NodeId(c.nodes().iter().position(|n| n.inputs == wires).unwrap())
    }

    #[test]
    fn corpus_shape() {
        let c = corpus();
        assert_eq!(c.len(), 25);
        for (name, circuit) in &c {
            assert!(circuit.num_gates() <= 12, "{name}");
            assert!(circuit.fan_in() <= 3, "{name}");
            assert_eq!(circuit.outputs().len(), 1, "{name}");
        }
    }

    #[test]
    fn figure1_structure() {
        let c = figure1();
        assert_eq!(c.depth().unwrap(), 3);
        assert!(!c.is_formula().unwrap());
        let (x3, x4) = (c.input_by_label("x3").unwrap(), c.input_by_label("x4").unwrap());
        let g2 = gate_with_inputs(&c, &[x3, x4]);
        assert_eq!(c.fan_out(g2), 2);
        let again = parse(&serialize(&c).unwrap()).unwrap();
        assert!(again.is_isomorphic(&c));
    }

    #[test]
    fn figure6_paths_and_sum() {
        let c = figure6();
        let x3 = c.input_by_label("X3").unwrap();
        let x5 = c.input_by_label("X5").unwrap();
        let y = c.outputs()[0];
        let x1 = c.input_by_label("X1").unwrap();
        let x2 = c.input_by_label("X2").unwrap();
        let g1 = gate_with_inputs(&c, &[x1, x2, x3]);
        assert_eq!(c.enumerate_paths(x3, y).unwrap().len(), 4);
        assert_eq!(c.shortest_distance(x3, y).unwrap(), Some(2));
        assert!(c.enumerate_paths(x5, g1).unwrap().is_empty());
        assert_eq!(c.shortest_distance(x5, g1).unwrap(), None);
        for delta in [0.0, 0.05, 0.2, 0.5] {
            let e: f64 = 1.0 - 2.0 * delta;
            let want = e.powi(4) + 3.0 * e.powi(6);
            let got = path_sum_bound(&c, delta, x3, y).unwrap();
            assert!((got - want).abs() < 1e-15, "δ={delta}: {got} vs {want}");
        }
    }
}
