//! Exact analysis of small noisy circuits by enumerating malfunction
//! patterns.
//!
//! A pattern is a subset of gates that flip their output. Patterns are
//! processed 64 at a time: lane `j` of a word carries pattern
//! `64·w + j`, so the low six gate slots flip on fixed lane masks and the
//! higher slots flip on whole words.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{estimate_contraction_kl, Channel};
use crate::circuit::{assignment_from_index, Circuit, NodeId, NodeKind, Plan};
use crate::error::{check_prob, Error, Result};
use crate::info::{Distribution, JointTable};
use crate::sim::NoiseModel;

pub const MAX_GATES: usize = 20;
pub const MAX_INPUTS: usize = 12;
pub const MAX_TARGETS: usize = 12;

const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Words per parallel work unit; fixed so that summation order is too.
const BLOCK_WORDS: usize = 64;

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Independent input bits with the given `P(x = 1)`, in input order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputPrior(Vec<f64>);

impl InputPrior {
    pub fn uniform(n: usize) -> Self {
        Self(vec![0.5; n])
    }

    pub fn new(p_one: Vec<f64>) -> Result<Self> {
        for &p in &p_one {
            check_prob("input prior P(x=1)", p, 0.0, 1.0)?;
        }
        Ok(Self(p_one))
    }

    pub fn p_one(&self) -> &[f64] {
        &self.0
    }
}

struct Enumerator<'a> {
    plan: &'a Plan,
    deltas: Vec<f64>,
    lane_weights: [f64; 64],
    words: usize,
}

impl<'a> Enumerator<'a> {
    fn new(plan: &'a Plan, noise: &NoiseModel) -> Result<Self> {
        let deltas = noise.slot_deltas(plan);
        let g = deltas.len();
        if g > MAX_GATES {
            return Err(Error::SizeLimit { what: "gate count for exact enumeration", found: g, limit: MAX_GATES });
        }
        let mut lane_weights = [0.0; 64];
        let lanes = 1usize << g.min(6);
        for (j, w) in lane_weights.iter_mut().enumerate().take(lanes) {
            *w = (0..g.min(6))
                .map(|s| if (j >> s) & 1 == 1 { deltas[s] } else { 1.0 - deltas[s] })
                .product();
        }
        Ok(Self { plan, deltas, lane_weights, words: 1 << g.saturating_sub(6) })
    }

    fn word_weight(&self, w: usize) -> f64 {
        (6..self.deltas.len())
            .map(|s| if (w >> (s - 6)) & 1 == 1 { self.deltas[s] } else { 1.0 - self.deltas[s] })
            .product()
    }

    fn eval_word(&self, assignment: &[bool], w: usize, values: &mut [u64]) {
        self.plan.eval_words(assignment, values, |s| {
            if s < 6 {
                LANE_MASKS[s]
            } else if (w >> (s - 6)) & 1 == 1 {
                !0
            } else {
                0
            }
        });
    }

    /// Accumulates `visit(values, word_weight, into)` over every pattern word,
    /// in parallel blocks summed in a fixed order.
    fn fold<F>(&self, assignment: &[bool], slots: usize, visit: F) -> Vec<f64>
    where
        F: Fn(&[u64], f64, &[f64; 64], &mut [Sum]) + Sync,
    {
        let blocks = self.words.div_ceil(BLOCK_WORDS);
        let partials: Vec<Vec<Sum>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Sum::default(); slots];
                let mut values = vec![0u64; self.plan.len];
                for w in b * BLOCK_WORDS..((b + 1) * BLOCK_WORDS).min(self.words) {
                    self.eval_word(assignment, w, &mut values);
                    visit(&values, self.word_weight(w), &self.lane_weights, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = vec![Sum::default(); slots];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                t.add(v.value());
            }
        }
        total.into_iter().map(Sum::value).collect()
    }
}

fn lane_sum(mut bits: u64, lane_weights: &[f64; 64]) -> f64 {
    let mut s = 0.0;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        s += lane_weights[j];
        bits &= bits - 1;
    }
    s
}

/// `P(C(x) ≠ f(x))` summed over all malfunction patterns.
pub fn exact_error(circuit: &Circuit, noise: &NoiseModel, assignment: &[bool]) -> Result<f64> {
    let plan = Plan::new(circuit)?;
    if plan.outputs.len() != 1 {
        return Err(Error::NotSingleOutput(plan.outputs.len()));
    }
    plan.check_assignment(assignment)?;
    let en = Enumerator::new(&plan, noise)?;
    let out = plan.outputs[0];
    let truth = if plan.eval(assignment, |_| false)[out] { !0u64 } else { 0 };
    let total = en.fold(assignment, 1, |values, ww, lw, acc| {
        acc[0].add(ww * lane_sum(values[out] ^ truth, lw));
    });
    Ok(total[0].clamp(0.0, 1.0))
}

/// Exact error of every assignment, in index order (first input most significant).
pub fn exact_errors(circuit: &Circuit, noise: &NoiseModel) -> Result<Vec<f64>> {
    let n = circuit.num_inputs();
    if n > crate::sim::MAX_EXHAUSTIVE_INPUTS {
        return Err(Error::SizeLimit {
            what: "input count for exhaustive analysis",
            found: n,
            limit: crate::sim::MAX_EXHAUSTIVE_INPUTS,
        });
    }
    (0..1usize << n).map(|i| exact_error(circuit, noise, &assignment_from_index(i, n))).collect()
}

/// `P_{X_S | X_0}` for input `source` and target nodes `targets`. Column
/// `y` reads the targets as bits with the first target most significant.
/// Other inputs are independent with the given prior; the prior entry of
/// `source` itself is ignored.
pub fn conditional_channel(
    circuit: &Circuit,
    noise: &NoiseModel,
    source: NodeId,
    targets: &[NodeId],
    prior: &InputPrior,
) -> Result<Channel> {
    let plan = Plan::new(circuit)?;
    let n = plan.inputs.len();
    if prior.0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: prior.0.len() });
    }
    let src = match circuit.node(source).map(|node| &node.kind) {
        None => return Err(Error::UnknownNode(source)),
        Some(NodeKind::Input(_)) => plan.inputs.iter().position(|&i| i == source.0).unwrap(),
        Some(_) => return Err(Error::NotAnInput(source)),
    };
    if targets.is_empty() {
        return Err(Error::Precondition("target set must be nonempty".into()));
    }
    if targets.len() > MAX_TARGETS {
        return Err(Error::SizeLimit { what: "target count", found: targets.len(), limit: MAX_TARGETS });
    }
    if let Some(&t) = targets.iter().find(|t| t.0 >= circuit.len()) {
        return Err(Error::UnknownNode(t));
    }
    if n > MAX_INPUTS {
        return Err(Error::SizeLimit { what: "input count for exact inference", found: n, limit: MAX_INPUTS });
    }
    let en = Enumerator::new(&plan, noise)?;
    let cols = 1usize << targets.len();
    let others: Vec<usize> = (0..n).filter(|&i| i != src).collect();
    let mut rows = Vec::with_capacity(2);
    for x0 in [false, true] {
        let mut row = vec![Sum::default(); cols];
        for k in 0..1usize << others.len() {
            let mut assignment = vec![false; n];
            assignment[src] = x0;
            let mut weight = 1.0;
            for (pos, &i) in others.iter().enumerate() {
                let bit = (k >> (others.len() - 1 - pos)) & 1 == 1;
                assignment[i] = bit;
                weight *= if bit { prior.0[i] } else { 1.0 - prior.0[i] };
            }
            if weight == 0.0 {
                continue;
            }
            let part = en.fold(&assignment, cols, |values, ww, lw, acc| {
                let lanes = if en.deltas.len() >= 6 { 64 } else { 1 << en.deltas.len() };
                for j in 0..lanes {
                    let y = targets
                        .iter()
                        .fold(0usize, |a, t| (a << 1) | ((values[t.0] >> j) & 1) as usize);
                    acc[y].add(ww * lw[j]);
                }
            });
            for (r, p) in row.iter_mut().zip(part) {
                r.add(weight * p);
            }
        }
        let probs: Vec<f64> = row.into_iter().map(Sum::value).collect();
        rows.push(Distribution::normalized(probs)?);
    }
    Channel::new(rows)
}

/// `I(X_i; Y)` for input position `input_index` and the single output.
pub fn mutual_info_exact(
    circuit: &Circuit,
    noise: &NoiseModel,
    input_index: usize,
    prior: &InputPrior,
) -> Result<f64> {
    if circuit.outputs().len() != 1 {
        return Err(Error::NotSingleOutput(circuit.outputs().len()));
    }
    let inputs = circuit.input_ids();
    let source = *inputs
        .get(input_index)
        .ok_or(Error::DimensionMismatch { expected: inputs.len(), found: input_index + 1 })?;
    if prior.0.len() != inputs.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), found: prior.0.len() });
    }
    let ch = conditional_channel(circuit, noise, source, circuit.outputs(), prior)?;
    let px = Distribution::bernoulli(prior.0[input_index])?;
    let joint = JointTable::from_prior_and_rows(&px, ch.rows())?;
    crate::info::mutual_information(&joint)
}

/// The channel `P_{W | A, B}` of a canonical network, indexed by `a·|B| + b`.
#[derive(Clone, Debug, PartialEq)]
pub enum WChannel {
    /// `W = map(a, b)` passed through `BSC_δ`.
    BscForm { map: Vec<bool>, delta: f64 },
    General(Channel),
}

impl WChannel {
    fn channel(&self) -> Result<Channel> {
        match self {
            WChannel::General(c) => Ok(c.clone()),
            WChannel::BscForm { map, delta } => {
                check_prob("W-channel δ", *delta, 0.0, 0.5)?;
                Channel::from_rows(
                    map.iter()
                        .map(|&b| if b { vec![*delta, 1.0 - delta] } else { vec![1.0 - delta, *delta] })
                        .collect(),
                )
            }
        }
    }

    /// Closed form for the BSC form; search lower bound otherwise.
    pub fn eta(&self) -> Result<f64> {
        match self {
            WChannel::BscForm { map, delta } => {
                check_prob("W-channel δ", *delta, 0.0, 0.5)?;
                let constant = map.iter().all(|&b| b == map[0]);
                Ok(if constant { 0.0 } else { (1.0 - 2.0 * delta).powi(2) })
            }
            WChannel::General(c) => Ok(estimate_contraction_kl(c, 48)?.lower),
        }
    }
}

/// Five variables factorized as `P_U P_{X₀|U} P_{B|X₀} P_{A|B,X₀} P_{W|A,B}`.
/// `a_given_bx` rows are indexed by `b·|X₀| + x₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalNetwork {
    pub p_u: Distribution,
    pub x_given_u: Channel,
    pub b_given_x: Channel,
    pub a_given_bx: Channel,
    pub w_given_ab: WChannel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalCheck {
    /// `I(U; W, B)`.
    pub lhs: f64,
    /// `η·I(U; A, B) + (1 − η)·I(U; B)`.
    pub rhs: f64,
    pub eta: f64,
}

const MAX_CANONICAL_ALPHABET: usize = 3;
const FACTOR_TOLERANCE: f64 = 1e-9;

impl CanonicalNetwork {
    fn sizes(&self) -> Result<[usize; 5]> {
        let nu = self.p_u.len();
        let nx = self.x_given_u.output_size();
        let nb = self.b_given_x.output_size();
        let na = self.a_given_bx.output_size();
        let w = self.w_given_ab.channel()?;
        let nw = w.output_size();
        let checks = [
            (self.x_given_u.input_size(), nu),
            (self.b_given_x.input_size(), nx),
            (self.a_given_bx.input_size(), nb * nx),
            (w.input_size(), na * nb),
        ];
        for (found, expected) in checks {
            if found != expected {
                return Err(Error::DimensionMismatch { expected, found });
            }
        }
        for s in [nu, nx, na, nb, nw] {
            if s > MAX_CANONICAL_ALPHABET {
                return Err(Error::SizeLimit { what: "canonical network alphabet", found: s, limit: MAX_CANONICAL_ALPHABET });
            }
        }
        Ok([nu, nx, na, nb, nw])
    }

    /// The joint over axes `(U, X₀, A, B, W)`.
    pub fn joint(&self) -> Result<JointTable> {
        let [nu, nx, na, nb, nw] = self.sizes()?;
        let w = self.w_given_ab.channel()?;
        let mut probs = Vec::with_capacity(nu * nx * na * nb * nw);
        for u in 0..nu {
            for x in 0..nx {
                for a in 0..na {
                    for b in 0..nb {
                        for wv in 0..nw {
                            probs.push(
                                self.p_u.get(u)
                                    * self.x_given_u.prob(u, x)
                                    * self.b_given_x.prob(x, b)
                                    * self.a_given_bx.prob(b * nx + x, a)
                                    * w.prob(a * nb + b, wv),
                            );
                        }
                    }
                }
            }
        }
        JointTable::normalized(vec![nu, nx, na, nb, nw], probs)
    }

    /// Recovers the factors from a joint over `(U, X₀, A, B, W)`, failing
    /// when the joint does not factorize within `1e-9`.
    pub fn from_joint(joint: &JointTable) -> Result<Self> {
        if joint.rank() != 5 {
            return Err(Error::Shape(format!("expected a rank-5 table, got rank {}", joint.rank())));
        }
        let cond = |given: &[usize], target: usize| -> Result<Channel> {
            let mut axes = given.to_vec();
            axes.push(target);
            let m = joint.marginal(&axes)?;
            let n = joint.shape()[target];
            let rows = m
                .probs()
                .chunks(n)
                .map(|r| {
                    if r.iter().sum::<f64>() > 0.0 {
                        Distribution::normalized(r.to_vec())
                    } else {
                        Distribution::uniform(n)
                    }
                })
                .collect::<Result<_>>()?;
            Channel::new(rows)
        };
        let net = CanonicalNetwork {
            p_u: Distribution::new(joint.marginal(&[0])?.probs().to_vec())?,
            x_given_u: cond(&[0], 1)?,
            b_given_x: cond(&[1], 3)?,
            a_given_bx: cond(&[3, 1], 2)?,
            w_given_ab: WChannel::General(cond(&[2, 3], 4)?),
        };
        let rebuilt = net.joint()?;
        let gap = rebuilt
            .probs()
            .iter()
            .zip(joint.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > FACTOR_TOLERANCE {
            return Err(Error::Precondition(format!(
                "joint does not factorize as a canonical network (max deviation {gap:.3e})"
            )));
        }
        Ok(net)
    }
}

/// Both sides of `I(U; W, B) ≤ η·I(U; A, B) + (1 − η)·I(U; B)`.
pub fn canonical_network_check(net: &CanonicalNetwork) -> Result<CanonicalCheck> {
    let joint = net.joint()?;
    let eta = net.w_given_ab.eta()?;
    let lhs = joint.mutual_information_of(&[0], &[4, 3])?;
    let iab = joint.mutual_information_of(&[0], &[2, 3])?;
    let ib = joint.mutual_information_of(&[0], &[3])?;
    Ok(CanonicalCheck { lhs, rhs: eta * iab + (1.0 - eta) * ib, eta })
}
