//! Seeded Monte Carlo simulation of δ-noisy circuits.
//!
//! Randomness is counter based: the draws of a trial are a pure function
//! of `(seed, input index, trial index, gate slot)`. Stream `i` of a
//! ChaCha8 generator keyed by the seed serves assignment `i`, and trial `t`
//! reads the `g` 64-bit words starting at word `t·g`, one per gate in
//! evaluation order. Changing the number of worker threads therefore
//! cannot change any result.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{assignment_from_index, bits_to_string, Circuit, NodeId, Plan};
use crate::error::{check_prob, Error, Result};

/// Name of the generator recorded in every report.
pub const RNG_NAME: &str = "chacha8";
/// Largest input count for exhaustive simulation.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 20;

/// Per-gate flip probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    delta: f64,
    overrides: BTreeMap<NodeId, f64>,
}

impl NoiseModel {
    /// The same δ on every gate, `0 ≤ δ ≤ 1/2`.
    pub fn uniform(delta: f64) -> Result<Self> {
        check_prob("gate noise δ", delta, 0.0, 0.5)?;
        Ok(Self { delta, overrides: BTreeMap::new() })
    }

    pub fn noiseless() -> Self {
        Self { delta: 0.0, overrides: BTreeMap::new() }
    }

    pub fn with_override(mut self, gate: NodeId, delta: f64) -> Result<Self> {
        check_prob("gate noise δ", delta, 0.0, 0.5)?;
        self.overrides.insert(gate, delta);
        Ok(self)
    }

    /// Test hook: accepts any δ in `[0, 1]`, so `δ = 1` flips every gate.
    #[doc(hidden)]
    pub fn unchecked(delta: f64) -> Self {
        Self { delta: delta.clamp(0.0, 1.0), overrides: BTreeMap::new() }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_for(&self, gate: NodeId) -> f64 {
        self.overrides.get(&gate).copied().unwrap_or(self.delta)
    }

    pub fn is_uniform(&self) -> bool {
        self.overrides.values().all(|&d| d == self.delta)
    }

    /// δ of every gate in plan (evaluation) order.
    pub(crate) fn slot_deltas(&self, plan: &Plan) -> Vec<f64> {
        plan.gates.iter().map(|&g| self.delta_for(NodeId(g))).collect()
    }
}

/// Flip `u` for gate noise δ: `u < δ·2^64`, and always when `δ = 1`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Threshold(Option<u64>);

impl Threshold {
    pub(crate) fn new(delta: f64) -> Self {
        if delta >= 1.0 {
            Threshold(None)
        } else {
            Threshold(Some((delta * 18_446_744_073_709_551_616.0) as u64))
        }
    }

    pub(crate) fn flips(self, u: u64) -> bool {
        match self.0 {
            None => true,
            Some(t) => u < t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Precondition("trials must be at least 1".into()));
        }
        Ok(Self { trials, seed })
    }

    pub fn rng_name(&self) -> &'static str {
        RNG_NAME
    }
}

/// Generator positioned at the first draw of `trial` for assignment `input_index`.
pub fn trial_rng(seed: u64, input_index: u64, trial: u64, gates: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(input_index);
    rng.set_word_pos(2 * trial as u128 * gates as u128);
    rng
}

/// One noisy evaluation: each gate, in evaluation order, consumes one
/// 64-bit draw and flips its output when the draw falls below `δ·2^64`.
pub fn sample_once(
    circuit: &Circuit,
    assignment: &[bool],
    noise: &NoiseModel,
    rng: &mut impl RngCore,
) -> Result<Vec<bool>> {
    let plan = Plan::new(circuit)?;
    plan.check_assignment(assignment)?;
    let thresholds: Vec<Threshold> = noise.slot_deltas(&plan).into_iter().map(Threshold::new).collect();
    let values = plan.eval(assignment, |slot| thresholds[slot].flips(rng.next_u64()));
    Ok(plan.outputs.iter().map(|&o| values[o]).collect())
}

/// Which assignments to simulate.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSelection {
    All,
    List(Vec<Vec<bool>>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRow {
    pub input: String,
    pub errors: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci95: f64,
    pub seed: u64,
    pub rng: String,
}

impl SimRow {
    /// Standard error of the estimate under the normal approximation.
    pub fn std_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub rng: String,
    pub seed: u64,
    pub trials: u64,
    pub max_estimate: f64,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    /// The row with the largest estimate (first on ties).
    pub fn max_row(&self) -> &SimRow {
        let mut best = &self.rows[0];
        for r in &self.rows[1..] {
            if r.estimate > best.estimate {
                best = r;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Precondition(format!("CSV write failed: {e}")))?;
        }
        w.flush().map_err(|e| Error::Precondition(format!("CSV write failed: {e}")))?;
        Ok(())
    }
}

const TRIAL_BLOCK: u64 = 1 << 14;

/// Fraction of trials in which the noisy output differs from the noiseless one.
pub fn estimate_error(
    circuit: &Circuit,
    noise: &NoiseModel,
    config: &SimConfig,
    inputs: &InputSelection,
) -> Result<SimReport> {
    let plan = Plan::new(circuit)?;
    if plan.outputs.len() != 1 {
        return Err(Error::NotSingleOutput(plan.outputs.len()));
    }
    let n = plan.inputs.len();
    let assignments: Vec<(u64, Vec<bool>)> = match inputs {
        InputSelection::All => {
            if n > MAX_EXHAUSTIVE_INPUTS {
                return Err(Error::SizeLimit {
                    what: "input count for exhaustive simulation",
                    found: n,
                    limit: MAX_EXHAUSTIVE_INPUTS,
                });
            }
            (0..1usize << n).map(|i| (i as u64, assignment_from_index(i, n))).collect()
        }
        InputSelection::List(list) => {
            let mut out = Vec::with_capacity(list.len());
            for a in list {
                plan.check_assignment(a)?;
                let index = a.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
                out.push((index, a.clone()));
            }
            out
        }
    };
    if assignments.is_empty() {
        return Err(Error::Precondition("no input assignments selected".into()));
    }
    let thresholds: Vec<Threshold> = noise.slot_deltas(&plan).into_iter().map(Threshold::new).collect();
    let gates = thresholds.len();
    let out = plan.outputs[0];
    let blocks = config.trials.div_ceil(TRIAL_BLOCK);

    let work: Vec<(usize, u64)> =
        (0..assignments.len()).flat_map(|a| (0..blocks).map(move |b| (a, b))).collect();
    let counts: Vec<u64> = work
        .par_iter()
        .map(|&(a, b)| {
            let (index, ref assignment) = assignments[a];
            let truth = plan.eval(assignment, |_| false)[out];
            let start = b * TRIAL_BLOCK;
            let end = (start + TRIAL_BLOCK).min(config.trials);
            let mut rng = trial_rng(config.seed, index, start, gates);
            let mut values = vec![false; plan.len];
            let mut errors = 0u64;
            for _ in start..end {
                plan.eval_into(assignment, &mut values, &mut |slot| thresholds[slot].flips(rng.next_u64()));
                errors += (values[out] != truth) as u64;
            }
            errors
        })
        .collect();

    let mut rows = Vec::with_capacity(assignments.len());
    for (a, (_, assignment)) in assignments.iter().enumerate() {
        let errors: u64 = counts[a * blocks as usize..(a + 1) * blocks as usize].iter().sum();
        let estimate = errors as f64 / config.trials as f64;
        rows.push(SimRow {
            input: bits_to_string(assignment),
            errors,
            trials: config.trials,
            estimate,
            ci95: 1.96 * (estimate * (1.0 - estimate) / config.trials as f64).sqrt(),
            seed: config.seed,
            rng: RNG_NAME.to_string(),
        });
    }
    let max_estimate = rows.iter().map(|r| r.estimate).fold(0.0, f64::max);
    Ok(SimReport { rng: RNG_NAME.into(), seed: config.seed, trials: config.trials, max_estimate, rows })
}

/// Outcome of majority amplification over repeated runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Amplified {
    pub bit: bool,
    /// `exp(−2ε²m)` with `ε = 1/2 − per-run error`.
    pub hoeffding_bound: f64,
    pub ones: u64,
    pub zeros: u64,
    /// The fair coin used when the vote tied.
    pub tie_break: Option<bool>,
}

/// Majority of `m` independent noisy runs on one assignment. Run `t`
/// uses the draws of trial `t`; a tie is broken by the low bit of the
/// first draw of trial `m`.
pub fn amplify(
    circuit: &Circuit,
    assignment: &[bool],
    noise: &NoiseModel,
    m: u64,
    per_run_error: f64,
    config: &SimConfig,
) -> Result<Amplified> {
    if m == 0 {
        return Err(Error::Precondition("amplification needs at least one run".into()));
    }
    let epsilon = 0.5 - per_run_error;
    if epsilon.is_nan() || epsilon <= 0.0 || per_run_error < 0.0 {
        return Err(Error::Precondition(format!(
            "per-run error {per_run_error} leaves no advantage ε = {epsilon} over 1/2"
        )));
    }
    let plan = Plan::new(circuit)?;
    if plan.outputs.len() != 1 {
        return Err(Error::NotSingleOutput(plan.outputs.len()));
    }
    plan.check_assignment(assignment)?;
    let thresholds: Vec<Threshold> = noise.slot_deltas(&plan).into_iter().map(Threshold::new).collect();
    let gates = thresholds.len();
    let index = assignment.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    let mut rng = trial_rng(config.seed, index, 0, gates);
    let mut values = vec![false; plan.len];
    let mut ones = 0;
    for _ in 0..m {
        plan.eval_into(assignment, &mut values, &mut |slot| thresholds[slot].flips(rng.next_u64()));
        ones += values[plan.outputs[0]] as u64;
    }
    let zeros = m - ones;
    let (bit, tie_break) = if ones == zeros {
        let coin = trial_rng(config.seed, index, m, gates.max(1)).next_u64() & 1 == 1;
        (coin, Some(coin))
    } else {
        (ones > zeros, None)
    };
    Ok(Amplified {
        bit,
        hoeffding_bound: (-2.0 * epsilon * epsilon * m as f64).exp(),
        ones,
        zeros,
        tie_break,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, TruthTable};

    fn maj() -> Circuit {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = ["a", "b", "c"].iter().map(|l| b.input(*l)).collect();
        let g = b.gate(TruthTable::maj3(), &x);
        b.output(g);
        b.build().unwrap()
    }

    #[test]
    fn noiseless_sample_matches_evaluation() {
        let c = maj();
        let mut rng = trial_rng(7, 0, 0, 1);
        for i in 0..8 {
            let a = assignment_from_index(i, 3);
            let s = sample_once(&c, &a, &NoiseModel::uniform(0.0).unwrap(), &mut rng).unwrap();
            assert_eq!(s, c.evaluate_noiseless(&a).unwrap());
        }
    }

    #[test]
    fn certain_flip_hook() {
        let c = maj();
        let mut rng = trial_rng(0, 0, 0, 1);
        for i in 0..8 {
            let a = assignment_from_index(i, 3);
            let s = sample_once(&c, &a, &NoiseModel::unchecked(1.0), &mut rng).unwrap();
            assert_eq!(s[0], !c.evaluate_noiseless(&a).unwrap()[0]);
        }
        assert!(NoiseModel::uniform(1.0).is_err());
        assert!(NoiseModel::uniform(0.51).is_err());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = maj();
        let noise = NoiseModel::uniform(0.3).unwrap();
        let draw = || {
            let mut rng = trial_rng(42, 3, 0, 1);
            (0..64)
                .map(|_| sample_once(&c, &[false, true, true], &noise, &mut rng).unwrap()[0])
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn single_gate_error_rate() {
        let r = estimate_error(
            &maj(),
            &NoiseModel::uniform(0.1).unwrap(),
            &SimConfig::new(1_000_000, 0).unwrap(),
            &InputSelection::All,
        )
        .unwrap();
        assert_eq!(r.rows.len(), 8);
        for row in &r.rows {
            assert!((row.estimate - 0.1).abs() <= 0.001, "{row:?}");
            assert_eq!(row.rng, "chacha8");
        }
    }

    #[test]
    fn half_noise_gives_half_error() {
        let r = estimate_error(
            &maj(),
            &NoiseModel::uniform(0.5).unwrap(),
            &SimConfig::new(200_000, 1).unwrap(),
            &InputSelection::List(vec![vec![true, true, false]]),
        )
        .unwrap();
        let row = &r.rows[0];
        assert_eq!(row.input, "110");
        assert!((row.estimate - 0.5).abs() <= 4.0 * row.std_error());
    }

    #[test]
    fn thread_count_does_not_change_report() {
        let c = maj();
        let noise = NoiseModel::uniform(0.2).unwrap();
        let cfg = SimConfig::new(50_000, 9).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_error(&c, &noise, &cfg, &InputSelection::All).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn exhaustive_limit_and_single_output() {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..21).map(|i| b.input(format!("x{i}"))).collect();
        let g = b.gate(TruthTable::maj3(), &x[..3]);
        b.output(g);
        let c = b.build().unwrap();
        let cfg = SimConfig::new(10, 0).unwrap();
        let noise = NoiseModel::uniform(0.1).unwrap();
        assert!(matches!(
            estimate_error(&c, &noise, &cfg, &InputSelection::All),
            Err(Error::SizeLimit { .. })
        ));
        let mut b = CircuitBuilder::new();
        let a = b.input("a");
        b.output(a).output(a);
        let two = b.build().unwrap();
        assert!(matches!(
            estimate_error(&two, &noise, &cfg, &InputSelection::All),
            Err(Error::NotSingleOutput(2))
        ));
        assert!(SimConfig::new(0, 0).is_err());
    }

    #[test]
    fn amplify_examples() {
        let c = maj();
        let noise = NoiseModel::uniform(0.2).unwrap();
        let cfg = SimConfig::new(1, 5).unwrap();
        let a = [true, false, true];
        let one = amplify(&c, &a, &noise, 1, 0.2, &cfg).unwrap();
        let mut rng = trial_rng(5, 0b101, 0, 1);
        assert_eq!(one.bit, sample_once(&c, &a, &noise, &mut rng).unwrap()[0]);

        let r = amplify(&c, &a, &noise, 500, 0.4, &cfg).unwrap();
        assert!((r.hoeffding_bound - (-10.0f64).exp()).abs() < 1e-12);
        assert!((r.hoeffding_bound - 4.54e-5).abs() < 1e-7);

        let clean = amplify(&c, &a, &NoiseModel::noiseless(), 101, 0.0, &cfg).unwrap();
        assert!(clean.bit && clean.zeros == 0);
        assert!(amplify(&c, &a, &noise, 5, 0.5, &cfg).is_err());

        let even = amplify(&c, &a, &NoiseModel::uniform(0.5).unwrap(), 2, 0.4, &cfg).unwrap();
        assert_eq!(even.tie_break.is_some(), even.ones == even.zeros);
    }
}
