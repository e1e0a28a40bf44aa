//! Percolation on circuit DAGs, the mutual-information bound chain and
//! threshold formulas with figure data.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, NodeId};
use crate::error::{check_prob, Error, Result};
use crate::exact::{mutual_info_exact, InputPrior, Sum};
use crate::sim::{trial_rng, SimConfig, Threshold, RNG_NAME};
use crate::vn::{cubic, GateFamily};

/// Per-node probability of being open.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenProbabilityMap(Vec<f64>);

impl OpenProbabilityMap {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            check_prob("open probability", p, 0.0, 1.0)?;
        }
        Ok(Self(probs))
    }

    pub fn get(&self, id: NodeId) -> f64 {
        self.0[id.0]
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// Gates open with probability `(1 − 2δ)²`; inputs and constants always.
pub fn open_probabilities(circuit: &Circuit, delta: f64) -> Result<OpenProbabilityMap> {
    check_prob("gate noise δ", delta, 0.0, 0.5)?;
    let eta = (1.0 - 2.0 * delta).powi(2);
    Ok(OpenProbabilityMap(circuit.nodes().iter().map(|n| if n.is_gate() { eta } else { 1.0 }).collect()))
}

/// Largest relevant vertex set for exact percolation.
pub const MAX_PERCOLATION_VERTICES: usize = 24;

/// Vertices lying on some path from the source to a target, in topological order.
struct Relevant {
    nodes: Vec<usize>,
    /// `preds[i]`: relevant predecessors of vertex `i`, as indices.
    preds: Vec<Vec<usize>>,
    /// Whether the source feeds vertex `i` directly.
    from_source: Vec<bool>,
    is_target: Vec<bool>,
    probs: Vec<f64>,
    /// The source is itself a target.
    trivial: bool,
}

impl Relevant {
    fn new(circuit: &Circuit, probs: &OpenProbabilityMap, source: NodeId, targets: &[NodeId]) -> Result<Self> {
        let order = circuit.topological_order()?;
        if source.0 >= circuit.len() {
            return Err(Error::UnknownNode(source));
        }
        if let Some(&t) = targets.iter().find(|t| t.0 >= circuit.len()) {
            return Err(Error::UnknownNode(t));
        }
        if probs.0.len() != circuit.len() {
            return Err(Error::DimensionMismatch { expected: circuit.len(), found: probs.0.len() });
        }
        let down = circuit.descendants_of(source);
        let up = circuit.ancestors_of(targets);
        let mut index = vec![usize::MAX; circuit.len()];
        let mut nodes = Vec::new();
        for id in order {
            if id != source && down[id.0] && up[id.0] {
                index[id.0] = nodes.len();
                nodes.push(id.0);
            }
        }
        let mut preds = Vec::with_capacity(nodes.len());
        let mut from_source = Vec::with_capacity(nodes.len());
        for &v in &nodes {
            let inputs = &circuit.nodes()[v].inputs;
            let mut p: Vec<usize> = inputs.iter().filter(|w| index[w.0] != usize::MAX).map(|w| index[w.0]).collect();
            p.sort_unstable();
            p.dedup();
            preds.push(p);
            from_source.push(inputs.contains(&source));
        }
        let is_target = nodes.iter().map(|&v| targets.contains(&NodeId(v))).collect();
        Ok(Self {
            probs: nodes.iter().map(|&v| probs.0[v]).collect(),
            nodes,
            preds,
            from_source,
            is_target,
            trivial: targets.contains(&source),
        })
    }

    /// Whether some target is reached when exactly the vertices in `open` are open.
    fn percolates(&self, open: impl Fn(usize) -> bool, reach: &mut [bool]) -> bool {
        for i in 0..self.nodes.len() {
            reach[i] = open(i) && (self.from_source[i] || self.preds[i].iter().any(|&p| reach[p]));
            if reach[i] && self.is_target[i] {
                return true;
            }
        }
        false
    }
}

/// Probability that an open path joins `source` to some target.
pub fn percolation_exact(
    circuit: &Circuit,
    probs: &OpenProbabilityMap,
    source: NodeId,
    targets: &[NodeId],
) -> Result<f64> {
    let rel = Relevant::new(circuit, probs, source, targets)?;
    if rel.trivial {
        return Ok(1.0);
    }
    let r = rel.nodes.len();
    if r > MAX_PERCOLATION_VERTICES {
        return Err(Error::SizeLimit { what: "relevant vertices for exact percolation", found: r, limit: MAX_PERCOLATION_VERTICES });
    }
    if r == 0 {
        return Ok(0.0);
    }
    let low_bits = r.min(12);
    let high_bits = r - low_bits;
    let weight = |state: usize, offset: usize, bits: usize| -> f64 {
        (0..bits)
            .map(|b| {
                let p = rel.probs[offset + b];
                if (state >> b) & 1 == 1 { p } else { 1.0 - p }
            })
            .product()
    };
    let low_weights: Vec<f64> = (0..1usize << low_bits).map(|s| weight(s, 0, low_bits)).collect();
    let parts: Vec<f64> = (0..1usize << high_bits)
        .into_par_iter()
        .map(|hi| {
            let w_hi = weight(hi, low_bits, high_bits);
            if w_hi == 0.0 {
                return 0.0;
            }
            let mut reach = vec![false; r];
            let mut acc = Sum::default();
            for (lo, &w_lo) in low_weights.iter().enumerate() {
                if w_lo == 0.0 {
                    continue;
                }
                let state = (hi << low_bits) | lo;
                if rel.percolates(|i| (state >> i) & 1 == 1, &mut reach) {
                    acc.add(w_lo);
                }
            }
            w_hi * acc.value()
        })
        .collect();
    let mut total = Sum::default();
    for p in parts {
        total.add(p);
    }
    Ok(total.value().clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercolationEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: f64,
    pub hits: u64,
    pub trials: u64,
    pub seed: u64,
    pub rng: String,
}

/// Monte Carlo percolation. Trial `t` opens relevant vertex `i` when the
/// `i`-th draw of stream 0, trial `t`, falls below `p·2^64`.
pub fn percolation_mc(
    circuit: &Circuit,
    probs: &OpenProbabilityMap,
    source: NodeId,
    targets: &[NodeId],
    config: &SimConfig,
) -> Result<PercolationEstimate> {
    let rel = Relevant::new(circuit, probs, source, targets)?;
    let r = rel.nodes.len();
    let thresholds: Vec<Threshold> = rel.probs.iter().map(|&p| Threshold::new(p)).collect();
    const BLOCK: u64 = 1 << 14;
    let hits: u64 = if rel.trivial {
        config.trials
    } else {
        (0..config.trials.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK;
                let end = (start + BLOCK).min(config.trials);
                let mut rng = trial_rng(config.seed, 0, start, r);
                let mut open = vec![false; r];
                let mut reach = vec![false; r];
                let mut hits = 0u64;
                for _ in start..end {
                    for (o, t) in open.iter_mut().zip(&thresholds) {
                        *o = t.flips(rng.next_u64());
                    }
                    hits += rel.percolates(|i| open[i], &mut reach) as u64;
                }
                hits
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    };
    let estimate = hits as f64 / config.trials as f64;
    let std_error = (estimate * (1.0 - estimate) / config.trials as f64).sqrt();
    Ok(PercolationEstimate {
        estimate,
        std_error,
        ci95: 1.96 * std_error,
        hits,
        trials: config.trials,
        seed: config.seed,
        rng: RNG_NAME.into(),
    })
}

/// `Σ_π (1 − 2δ)^{2·len(π)}` over all directed paths from `source` to `target`.
pub fn path_sum_bound(circuit: &Circuit, delta: f64, source: NodeId, target: NodeId) -> Result<f64> {
    check_prob("gate noise δ", delta, 0.0, 0.5)?;
    let eta = (1.0 - 2.0 * delta).powi(2);
    Ok(circuit
        .enumerate_paths(source, target)?
        .iter()
        .map(|p| eta.powi((p.len() - 1) as i32))
        .sum())
}

/// `(k(1 − 2δ)²)^d`, refused when `k(1 − 2δ)² > 1`.
pub fn depth_bound(k: usize, delta: f64, d: usize) -> Result<f64> {
    check_prob("gate noise δ", delta, 0.0, 0.5)?;
    let base = k as f64 * (1.0 - 2.0 * delta).powi(2);
    if base > 1.0 + 1e-12 {
        return Err(Error::Inapplicable(format!("k(1-2δ)² = {base} exceeds 1 for k = {k}, δ = {delta}")));
    }
    Ok(base.min(1.0).powi(d as i32))
}

/// One input's links in `I(X_i;Y) ≤ Perc ≤ path sum ≤ (k(1−2δ)²)^{d_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundChain {
    pub input: String,
    pub mutual_information: f64,
    pub percolation: f64,
    pub path_sum: f64,
    /// Absent when `k(1 − 2δ)² > 1`.
    pub depth_bound: Option<f64>,
    /// Shortest distance to the output; absent when unreachable.
    pub distance: Option<usize>,
    pub fan_in: usize,
}

impl BoundChain {
    /// Whether every applicable link holds with slack `≥ −tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.mutual_information <= self.percolation + tol
            && self.percolation <= self.path_sum + tol
            && self.depth_bound.is_none_or(|d| self.path_sum <= d + tol)
    }
}

/// The bound chain for input position `input_index` of a single-output
/// circuit under uniform independent inputs. `k` is the circuit's maximum
/// fan-in.
pub fn bound_chain(circuit: &Circuit, delta: f64, input_index: usize) -> Result<BoundChain> {
    if circuit.outputs().len() != 1 {
        return Err(Error::NotSingleOutput(circuit.outputs().len()));
    }
    let inputs = circuit.input_ids();
    let xi = *inputs
        .get(input_index)
        .ok_or(Error::DimensionMismatch { expected: inputs.len(), found: input_index + 1 })?;
    let y = circuit.outputs()[0];
    let noise = crate::sim::NoiseModel::uniform(delta)?;
    let mi = mutual_info_exact(circuit, &noise, input_index, &InputPrior::uniform(inputs.len()))?;
    let probs = open_probabilities(circuit, delta)?;
    let percolation = percolation_exact(circuit, &probs, xi, &[y])?;
    let path_sum = path_sum_bound(circuit, delta, xi, y)?;
    let distance = circuit.shortest_distance(xi, y)?;
    let k = circuit.fan_in().max(1);
    let depth = match depth_bound(k, delta, distance.unwrap_or(0)) {
        Ok(v) => Some(if distance.is_some() { v } else { 0.0 }),
        Err(Error::Inapplicable(_)) => None,
        Err(e) => return Err(e),
    };
    let label = match &circuit.nodes()[xi.0].kind {
        crate::circuit::NodeKind::Input(l) => l.clone(),
        _ => unreachable!(),
    };
    Ok(BoundChain {
        input: label,
        mutual_information: mi,
        percolation,
        path_sum,
        depth_bound: depth,
        distance,
        fan_in: k,
    })
}

/// `1/2 − 1/(2√k)`.
pub fn es_threshold(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Precondition(format!("fan-in must be at least 2, got {k}")));
    }
    Ok(0.5 - 1.0 / (2.0 * (k as f64).sqrt()))
}

fn binomial(n: u64, r: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `1/2 − 2^{k−2} / (k·C(k−1, (k−1)/2))` as an exact rational, for odd `k ≥ 3`.
pub fn formula_threshold_exact(k: usize) -> Result<BigRational> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::Precondition(format!("formula threshold needs odd k ≥ 3, got {k}")));
    }
    let k64 = k as u64;
    let num = BigInt::one() << (k - 2);
    let den = BigInt::from(k64) * binomial(k64 - 1, (k64 - 1) / 2);
    Ok(BigRational::new(BigInt::one(), BigInt::from(2)) - BigRational::new(num, den))
}

pub fn formula_threshold(k: usize) -> Result<f64> {
    let r = formula_threshold_exact(k)?;
    Ok(r.to_f64().expect("small rational converts"))
}

/// The fan-in 2 formula threshold `(3 − √7)/4`.
pub fn unger_constant() -> f64 {
    (3.0 - 7f64.sqrt()) / 4.0
}

/// `1/2 − √π/(2√(2k))`.
pub fn stirling_approx(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Precondition(format!("fan-in must be at least 2, got {k}")));
    }
    Ok(0.5 - std::f64::consts::PI.sqrt() / (2.0 * (2.0 * k as f64).sqrt()))
}

/// `(1/2 − stirling_approx(k)) / (1/2 − formula_threshold(k))` for odd `k ≥ 3`.
pub fn gap_ratio(k: usize) -> Result<f64> {
    Ok((0.5 - stirling_approx(k)?) / (0.5 - formula_threshold(k)?))
}

/// Smallest `d` with `k^d ≥ n`.
pub fn xor_min_depth(n: u64, k: u64) -> Result<u32> {
    if n < 1 || k < 2 {
        return Err(Error::Precondition(format!("need n ≥ 1 and k ≥ 2, got n = {n}, k = {k}")));
    }
    let mut d = 0;
    let mut reach: u128 = 1;
    while reach < n as u128 {
        reach *= k as u128;
        d += 1;
    }
    Ok(d)
}

/// Renders `r` rounded half away from zero to `digits` decimals.
pub fn rational_decimal(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = r * BigRational::from_integer(scale.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = if scaled.is_negative() { -((-scaled) + half).floor() } else { (scaled + half).floor() };
    let n = rounded.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let n = n.abs();
    let (int, frac) = (&n / &scale, &n % &scale);
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0>digits$}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRow {
    pub k: usize,
    pub es_threshold: f64,
    /// Exact for odd `k ≥ 3`; absent for even `k > 2`.
    pub formula_threshold: Option<BigRational>,
    /// Only for `k = 2`, where the entry is `(3 − √7)/4`.
    pub unger: Option<f64>,
    pub stirling: f64,
    pub gap_ratio: Option<f64>,
}

impl ThresholdRow {
    pub fn formula_value(&self) -> Option<f64> {
        self.formula_threshold.as_ref().and_then(|r| r.to_f64()).or(self.unger)
    }
}

pub fn threshold_table(k_min: usize, k_max: usize) -> Result<Vec<ThresholdRow>> {
    if k_min < 2 || k_max < k_min {
        return Err(Error::Precondition(format!("invalid fan-in range {k_min}..={k_max} (need 2 ≤ min ≤ max)")));
    }
    (k_min..=k_max)
        .map(|k| {
            let odd = k % 2 == 1;
            Ok(ThresholdRow {
                k,
                es_threshold: es_threshold(k)?,
                formula_threshold: if odd { Some(formula_threshold_exact(k)?) } else { None },
                unger: (k == 2).then(unger_constant),
                stirling: stirling_approx(k)?,
                gap_ratio: if odd { Some(gap_ratio(k)?) } else { None },
            })
        })
        .collect()
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Precondition(format!("CSV write failed: {e}"))
}

/// Columns `k,es_threshold,formula_threshold,stirling` (plus `gap_ratio`
/// when requested), values to `digits` decimals, empty where undefined.
pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W, digits: usize, with_gap: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k", "es_threshold", "formula_threshold", "stirling"];
    if with_gap {
        header.push("gap_ratio");
    }
    w.write_record(&header).map_err(csv_error)?;
    let f = |x: f64| format!("{x:.digits$}");
    for r in rows {
        let formula = match (&r.formula_threshold, r.unger) {
            (Some(q), _) => rational_decimal(q, digits),
            (None, Some(u)) => f(u),
            (None, None) => String::new(),
        };
        let mut rec = vec![r.k.to_string(), f(r.es_threshold), formula, f(r.stirling)];
        if with_gap {
            rec.push(r.gap_ratio.map(f).unwrap_or_default());
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)?;
    Ok(())
}

/// The cubic of `family` at `δ`, sampled at `points` evenly spaced `η ∈ [0, 1/2]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubicCurve {
    pub family: GateFamily,
    pub delta: f64,
    pub rows: Vec<(f64, f64)>,
}

pub fn cubic_curve(family: GateFamily, delta: f64, points: usize) -> Result<CubicCurve> {
    if points < 2 {
        return Err(Error::Precondition(format!("need at least 2 sample points, got {points}")));
    }
    let p = cubic(family, delta)?;
    let rows = (0..points)
        .map(|i| {
            let eta = 0.5 * i as f64 / (points - 1) as f64;
            (eta, p.eval(eta))
        })
        .collect();
    Ok(CubicCurve { family, delta, rows })
}

/// Columns `eta,p_value`.
pub fn write_cubic_csv<W: Write>(curve: &CubicCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "p_value"]).map_err(csv_error)?;
    for (eta, v) in &curve.rows {
        w.write_record([eta.to_string(), v.to_string()]).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum FigureKind {
    Thresholds { k_min: usize, k_max: usize },
    CubicMin { deltas: Vec<f64>, points: usize },
    CubicMaj { deltas: Vec<f64>, points: usize },
}

impl FigureKind {
    /// The default parameters of each figure.
    pub fn thresholds() -> Self {
        FigureKind::Thresholds { k_min: 2, k_max: 50 }
    }

    pub fn cubic_min() -> Self {
        FigureKind::CubicMin { deltas: vec![0.004, 0.0058, 0.0073], points: 501 }
    }

    pub fn cubic_maj() -> Self {
        FigureKind::CubicMaj { deltas: vec![0.0058, 0.0073, 0.01], points: 501 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FigureData {
    Thresholds(Vec<ThresholdRow>),
    Cubic(Vec<CubicCurve>),
}

pub fn figure_data(kind: &FigureKind) -> Result<FigureData> {
    match kind {
        FigureKind::Thresholds { k_min, k_max } => Ok(FigureData::Thresholds(threshold_table(*k_min, *k_max)?)),
        FigureKind::CubicMin { deltas, points } => Ok(FigureData::Cubic(
            deltas.iter().map(|&d| cubic_curve(GateFamily::Min3, d, *points)).collect::<Result<_>>()?,
        )),
        FigureKind::CubicMaj { deltas, points } => Ok(FigureData::Cubic(
            deltas.iter().map(|&d| cubic_curve(GateFamily::Maj3, d, *points)).collect::<Result<_>>()?,
        )),
    }
}
