use std::io::Write;
use std::path::Path;

use relicomp::bounds::{
    bound_chain, cubic_curve, open_probabilities, percolation_exact, percolation_mc, threshold_table,
    write_cubic_csv, write_threshold_csv,
};
use relicomp::circuit::{assignment_from_index, parse_bits, Circuit, NodeId, NodeKind};
use relicomp::exact::{mutual_info_exact, InputPrior};
use relicomp::netlist::{parse, serialize};
use relicomp::sim::{estimate_error, InputSelection, NoiseModel, SimConfig, MAX_EXHAUSTIVE_INPUTS, RNG_NAME};
use relicomp::vn::{feasible_eta, vn_transform};
use serde::{Serialize, Serializer};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{AnalyzeArgs, Cli, Command, Format, Mode, RootsArgs, SimulateArgs, ThresholdArgs, TransformArgs};

/// Slack allowed at every link of the bound chain.
const CHAIN_TOLERANCE: f64 = 1e-9;

pub fn dispatch(cli: Cli, arguments: Vec<String>) -> CliResult<()> {
    let explicit = cli.manifest.clone();
    let manifest = match cli.command {
        Command::Validate { file } => validate(&file, arguments)?,
        Command::Simulate(a) => simulate(a, arguments)?,
        Command::Transform(a) => transform(a, arguments)?,
        Command::Analyze(a) => analyze(a, arguments, explicit.as_deref())?,
        Command::Thresholds(a) => thresholds(a, arguments)?,
        Command::Roots(a) => roots(a, arguments)?,
        Command::Replay { manifest } => {
            let recorded = RunManifest::load(&manifest)?;
            return crate::run(recorded.arguments);
        }
    };
    manifest.emit(explicit.as_deref())
}

fn load(file: &Path) -> CliResult<Circuit> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    Ok(parse(&text)?)
}

/// Writes `bytes` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, bytes: &[u8], manifest: &mut RunManifest) -> CliResult<()> {
    match out {
        Some(p) => {
            std::fs::write(p, bytes).map_err(|e| CliError::io(p, e))?;
            manifest.output(p);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}

fn render<T: Serialize>(rows: &[T], format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows).expect("rows serialize");
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Usage(format!("CSV write failed: {e}")))?;
            }
            w.into_inner().map_err(|e| CliError::Usage(format!("CSV write failed: {e}")))
        }
    }
}

fn validate(file: &Path, arguments: Vec<String>) -> CliResult<RunManifest> {
    let c = load(file)?;
    println!(
        "ok: {} inputs, {} gates, {} outputs, depth {}, fan-in {}",
        c.num_inputs(),
        c.num_gates(),
        c.outputs().len(),
        c.depth()?,
        c.fan_in()
    );
    Ok(RunManifest::new("validate", arguments))
}

fn simulate(a: SimulateArgs, arguments: Vec<String>) -> CliResult<RunManifest> {
    let c = load(&a.file)?;
    let noise = NoiseModel::uniform(a.delta)?;
    let config = SimConfig::new(a.trials, a.seed)?;
    let selection = if a.input.is_empty() {
        InputSelection::All
    } else {
        InputSelection::List(a.input.iter().map(|s| parse_bits(s)).collect::<Result<_, _>>()?)
    };
    let report = estimate_error(&c, &noise, &config, &selection)?;
    let bytes = match a.format {
        Format::Json => (report.to_json() + "\n").into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
    };
    let mut manifest = RunManifest::new("simulate", arguments).with_rng(a.seed, config.rng_name());
    emit(a.out.as_deref(), &bytes, &mut manifest)?;
    Ok(manifest)
}

fn transform(a: TransformArgs, arguments: Vec<String>) -> CliResult<RunManifest> {
    let c = load(&a.file)?;
    let t = vn_transform(&c, a.family)?;
    if a.check {
        let n = c.num_inputs();
        if n > MAX_EXHAUSTIVE_INPUTS {
            return Err(relicomp::Error::SizeLimit {
                what: "input count for the equivalence check",
                found: n,
                limit: MAX_EXHAUSTIVE_INPUTS,
            }
            .into());
        }
        for i in 0..1usize << n {
            let x = assignment_from_index(i, n);
            if t.evaluate_noiseless(&x)? != c.evaluate_noiseless(&x)? {
                return Err(CliError::Check(format!(
                    "transformed circuit differs from the original on input {}",
                    relicomp::circuit::bits_to_string(&x)
                )));
            }
        }
        eprintln!("noiseless equivalence: ok on all {} assignments", 1usize << n);
    }
    let mut text = serialize(&t)?;
    text.push('\n');
    let mut manifest = RunManifest::new("transform", arguments);
    emit(a.out.as_deref(), text.as_bytes(), &mut manifest)?;
    Ok(manifest)
}

fn label(c: &Circuit, id: NodeId) -> String {
    match &c.nodes()[id.0].kind {
        NodeKind::Input(l) => l.clone(),
        _ => id.to_string(),
    }
}

/// Input positions to analyze: one named input, or all of them.
fn selected_inputs(c: &Circuit, name: Option<&str>) -> CliResult<Vec<(usize, NodeId)>> {
    let all: Vec<(usize, NodeId)> = c.input_ids().into_iter().enumerate().collect();
    match name {
        None => Ok(all),
        Some(n) => all
            .into_iter()
            .find(|&(_, id)| label(c, id) == n)
            .map(|x| vec![x])
            .ok_or_else(|| CliError::Usage(format!("no input named {n:?}"))),
    }
}

#[derive(Serialize)]
struct MiRow {
    input: String,
    mutual_information: f64,
}

#[derive(Serialize)]
struct PercolationRow {
    input: String,
    percolation: f64,
}

#[derive(Serialize)]
struct PercolationMcRow {
    input: String,
    percolation: f64,
    std_error: f64,
    ci95: f64,
    hits: u64,
    trials: u64,
}

/// A depth bound, or the marker `inapplicable` when `k(1 − 2δ)² > 1`.
struct DepthCell(Option<f64>);

impl Serialize for DepthCell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("inapplicable"),
        }
    }
}

#[derive(Serialize)]
struct ChainRow {
    input: String,
    mutual_information: f64,
    percolation: f64,
    path_sum: f64,
    depth_bound: DepthCell,
    distance: Option<usize>,
    fan_in: usize,
    holds: bool,
}

fn analyze(a: AnalyzeArgs, arguments: Vec<String>, explicit: Option<&Path>) -> CliResult<RunManifest> {
    let c = load(&a.file)?;
    if c.outputs().len() != 1 {
        return Err(relicomp::Error::NotSingleOutput(c.outputs().len()).into());
    }
    let y = c.outputs()[0];
    let inputs = selected_inputs(&c, a.input_node.as_deref())?;
    let mut manifest = RunManifest::new("analyze", arguments);
    let mut failure = None;
    let bytes = match a.mode {
        Mode::Mi | Mode::Chain if a.mc => {
            return Err(CliError::Usage(format!(
                "{} mode is exact only; --mc applies to percolation",
                if a.mode == Mode::Mi { "mi" } else { "chain" }
            )))
        }
        Mode::Mi => {
            let noise = NoiseModel::uniform(a.delta)?;
            let prior = InputPrior::uniform(c.num_inputs());
            let rows = inputs
                .iter()
                .map(|&(i, id)| {
                    Ok(MiRow { input: label(&c, id), mutual_information: mutual_info_exact(&c, &noise, i, &prior)? })
                })
                .collect::<CliResult<Vec<_>>>()?;
            render(&rows, a.format)?
        }
        Mode::Percolation => {
            let probs = open_probabilities(&c, a.delta)?;
            if a.mc {
                let config = SimConfig::new(a.trials, a.seed)?;
                manifest = manifest.with_rng(a.seed, RNG_NAME);
                let rows = inputs
                    .iter()
                    .map(|&(_, id)| {
                        let e = percolation_mc(&c, &probs, id, &[y], &config)?;
                        Ok(PercolationMcRow {
                            input: label(&c, id),
                            percolation: e.estimate,
                            std_error: e.std_error,
                            ci95: e.ci95,
                            hits: e.hits,
                            trials: e.trials,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                render(&rows, a.format)?
            } else {
                let rows = inputs
                    .iter()
                    .map(|&(_, id)| {
                        Ok(PercolationRow { input: label(&c, id), percolation: percolation_exact(&c, &probs, id, &[y])? })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                render(&rows, a.format)?
            }
        }
        Mode::Chain => {
            let mut rows = Vec::with_capacity(inputs.len());
            for &(i, _) in &inputs {
                let b = bound_chain(&c, a.delta, i)?;
                let holds = b.holds(CHAIN_TOLERANCE);
                if !holds && failure.is_none() {
                    failure = Some(format!("bound chain ordering violated for input {}", b.input));
                }
                rows.push(ChainRow {
                    input: b.input,
                    mutual_information: b.mutual_information,
                    percolation: b.percolation,
                    path_sum: b.path_sum,
                    depth_bound: DepthCell(b.depth_bound),
                    distance: b.distance,
                    fan_in: b.fan_in,
                    holds,
                });
            }
            render(&rows, a.format)?
        }
    };
    emit(a.out.as_deref(), &bytes, &mut manifest)?;
    match failure {
        Some(msg) => {
            manifest.emit(explicit)?;
            Err(CliError::Check(msg))
        }
        None => Ok(manifest),
    }
}

fn parse_range(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("invalid --k-range {s:?}, expected A..B"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn thresholds(a: ThresholdArgs, arguments: Vec<String>) -> CliResult<RunManifest> {
    let (lo, hi) = parse_range(&a.k_range)?;
    let rows = threshold_table(lo, hi)?;
    let mut buf = Vec::new();
    write_threshold_csv(&rows, &mut buf, a.digits, a.gap_ratio)?;
    let mut manifest = RunManifest::new("thresholds", arguments);
    emit(a.out.as_deref(), &buf, &mut manifest)?;
    Ok(manifest)
}

fn roots(a: RootsArgs, arguments: Vec<String>) -> CliResult<RunManifest> {
    let mut manifest = RunManifest::new("roots", arguments);
    let mut summary = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("CSV write failed: {e}"));
    summary.write_record(["family", "delta", "eta_lo", "eta_hi"]).map_err(csv_err)?;
    if let Some(dir) = &a.curves {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    for &delta in &a.deltas {
        let family = a.family;
        match feasible_eta(family, delta)? {
            Some((lo, hi)) => {
                println!("{family} δ={delta}: feasible η ∈ [{lo:.9}, {hi:.9}]");
                summary
                    .write_record([family.to_string(), delta.to_string(), lo.to_string(), hi.to_string()])
                    .map_err(csv_err)?;
            }
            None => {
                println!("{family} δ={delta}: no feasible interval");
                summary
                    .write_record([family.to_string(), delta.to_string(), String::new(), String::new()])
                    .map_err(csv_err)?;
            }
        }
        if let Some(dir) = &a.curves {
            let path = dir.join(format!("cubic_{family}_{delta}.csv"));
            let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_cubic_csv(&cubic_curve(family, delta, a.points)?, file)?;
            manifest.output(&path);
        }
    }
    if let Some(out) = &a.out {
        let bytes = summary.into_inner().map_err(|e| CliError::Usage(format!("CSV write failed: {e}")))?;
        std::fs::write(out, bytes).map_err(|e| CliError::io(out, e))?;
        manifest.outputs.insert(0, out.display().to_string());
    }
    Ok(manifest)
}
