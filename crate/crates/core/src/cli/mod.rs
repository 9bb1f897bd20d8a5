//! Command-line front end.
//!
//! Exit codes: `0` success, `1` a guaranteed property was violated during
//! `simulate`, `2` invalid input or usage.

pub mod files;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::block_code::{density_stats, multiplicity_bound, rational_to_f64, WindowCode};
use crate::channel_sim::{
    apply_channel_with, random_frame, run_experiment, write_trials_csv, ChannelSpec,
    ExperimentConfig, ExperimentReport, MultiplicitySpec,
};
use crate::conv_system::{ConvCode, SymbolSeq};
use crate::decoders::{
    cost_bound, DecodeResult, ExactDecoder, HorizonParams, RecedingHorizonDecoder,
};
use crate::{Budget, Error, Result, DEFAULT_BUDGET};

pub use files::{parse_inputs, parse_sequence, write_sequence, CodeSpecFile, LoadedCode, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "rhcode",
    version,
    about = "Receding-horizon and exact decoding of convolutional codes over GF(p)"
)]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on exhaustive enumerations (codewords, syndromes, trellis states).
    #[arg(long, global = true, env = "RHCODE_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    /// JSON.
    Structured,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distances, covering radius, admissible capability and bounds of C_N.
    Analyze(AnalyzeArgs),
    /// Encode inputs into a terminated codeword, optionally adding noise.
    Encode(EncodeArgs),
    /// Decode a received sequence file.
    Decode(DecodeArgs),
    /// Run a Monte Carlo experiment described by a config file.
    Simulate(SimulateArgs),
    /// Time the receding-horizon decoder against the exact decoder.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct HorizonArgs {
    /// Window length N.
    #[arg(short = 'N', long = "window")]
    pub window: usize,
    /// Update length L.
    #[arg(short = 'L', long = "update", default_value_t = 1)]
    pub update: usize,
}

impl HorizonArgs {
    fn params(&self) -> Result<HorizonParams> {
        HorizonParams::new(self.window, self.update)
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Code specification file.
    #[arg(long)]
    pub code: PathBuf,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Frame index T for the cost bound.
    #[arg(long)]
    pub frame: Option<usize>,
    /// Number of solutions M for the multiplicity bound.
    #[arg(long)]
    pub multiplicity: Option<usize>,
    /// Span Delta for the multiplicity bound (defaults to N).
    #[arg(long)]
    pub delta: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Input file, one line of k integers per step.
    #[arg(long, conflicts_with = "random")]
    pub inputs: Option<PathBuf>,
    /// Number of uniformly random input steps.
    #[arg(long)]
    pub random: Option<usize>,
    /// Symbol error probability of a q-ary symmetric channel.
    #[arg(long, conflicts_with = "window_errors")]
    pub p_err: Option<f64>,
    /// Exact number of symbol errors per window.
    #[arg(long)]
    pub window_errors: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub error_window: usize,
    #[arg(long, default_value_t = 1)]
    pub error_stride: usize,
    /// Where to write the (possibly corrupted) sequence; stdout otherwise.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Where to write the noiseless codeword.
    #[arg(long)]
    pub clean_output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Received sequence file.
    #[arg(long)]
    pub received: PathBuf,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Also run the exact decoder and compare.
    #[arg(long)]
    pub exact: bool,
    /// Write the decoded codeword as a sequence file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Experiment config (TOML).
    #[arg(long, required_unless_present = "manifest")]
    pub config: Option<PathBuf>,
    /// Re-run the experiment recorded in a report or CSV file.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Output directory for `report.json` and `trials.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Frame index T.
    #[arg(long, default_value_t = 50)]
    pub frame: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Symbol error probability of the test channel.
    #[arg(long, default_value_t = 0.05)]
    pub p_err: f64,
    /// Decodes per timing sample.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
}

/// Experiment description as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Path (relative to the config file) or inline specification.
    pub code: CodeRef,
    pub window: usize,
    #[serde(default = "one")]
    pub update: usize,
    /// Frame index T.
    pub frame: usize,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub exact: bool,
    pub channel: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<MultiplicitySpec>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Path(String),
    Inline(CodeSpecFile),
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let budget = Budget::new(cli.budget);
    match &cli.command {
        Command::Analyze(a) => analyze(cli, a, budget, out).map(|_| 0),
        Command::Encode(a) => encode(cli, a, out).map(|_| 0),
        Command::Decode(a) => decode(cli, a, budget, out).map(|_| 0),
        Command::Simulate(a) => simulate(cli, a, out),
        Command::Bench(a) => bench_cmd(cli, a, budget, out).map(|_| 0),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn render_rows(rows: &[Vec<u32>]) -> String {
    let inner: Vec<String> = rows
        .iter()
        .map(|r| format!("[{}]", r.iter().map(u32::to_string).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", inner.join(","))
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn csv_row(out: &mut dyn Write, fields: &[String]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(fields).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.write_all(&bytes)?;
    Ok(())
}

/// Every quantity reported by `analyze`.
#[derive(Debug, Serialize)]
pub struct Analysis {
    pub manifest: RunManifest,
    pub label: Option<String>,
    pub field_p: u32,
    pub n: usize,
    pub k: usize,
    pub delta: usize,
    pub controllability_indices: Vec<usize>,
    pub kappa_min: usize,
    pub kappa_max: usize,
    pub realization_verified: Option<bool>,
    pub window: usize,
    pub update: usize,
    pub generator_matrix: Vec<Vec<u32>>,
    pub check_matrix: Vec<Vec<u32>>,
    pub min_distance: usize,
    pub covering_radius: usize,
    pub protected: Vec<usize>,
    pub d_prime: usize,
    pub correctable_per_window: usize,
    pub meets_distance_condition: bool,
    pub density: Vec<DensityRow>,
    pub cost_bound: Option<CostBoundRow>,
    pub multiplicity: Option<MultiplicityRow>,
}

#[derive(Debug, Serialize)]
pub struct DensityRow {
    pub window: usize,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub e_kt: String,
    pub density: String,
    pub p_outside: String,
    pub density_value: f64,
}

#[derive(Debug, Serialize)]
pub struct CostBoundRow {
    pub frame: usize,
    pub update: usize,
    pub bound: usize,
}

#[derive(Debug, Serialize)]
pub struct MultiplicityRow {
    pub m: usize,
    pub delta: usize,
    pub bound: String,
    pub value: f64,
}

/// Computes the `analyze` report.
pub fn analysis(
    loaded: &LoadedCode,
    params: HorizonParams,
    frame: Option<usize>,
    multiplicity: Option<(usize, usize)>,
    budget: Budget,
    manifest: RunManifest,
) -> Result<Analysis> {
    let code = &loaded.code;
    let wc = WindowCode::build(code, params.window, budget)?;
    let adm = wc.admissible_capability(params.update)?;
    let mut density = Vec::new();
    for i in 1..=params.window {
        let w = WindowCode::build(code, i, budget)?;
        let (n, k, d) = (w.block().n(), w.block().k(), w.min_distance()?);
        let s = density_stats(n, k, d, code.field());
        density.push(DensityRow {
            window: i,
            n,
            k,
            d,
            t: s.t,
            e_kt: s.e_kt.to_string(),
            density_value: rational_to_f64(&s.density),
            density: s.density.to_string(),
            p_outside: s.p_outside.to_string(),
        });
    }
    let cost_bound = match frame {
        Some(t) => Some(CostBoundRow {
            frame: t,
            update: params.update,
            bound: cost_bound(&wc, t, params.update)?,
        }),
        None => None,
    };
    let multiplicity = match multiplicity {
        Some((m, delta)) => {
            let b = multiplicity_bound(code, params.window, delta, m, budget)?;
            Some(MultiplicityRow {
                m,
                delta,
                value: rational_to_f64(&b),
                bound: b.to_string(),
            })
        }
        None => None,
    };
    Ok(Analysis {
        manifest,
        label: loaded.spec.label.clone(),
        field_p: code.field().order(),
        n: code.n(),
        k: code.k(),
        delta: code.delta(),
        controllability_indices: code.controllability_indices().to_vec(),
        kappa_min: code.kappa_min(),
        kappa_max: code.kappa_max(),
        realization_verified: loaded.generator.as_ref().map(|_| true),
        window: params.window,
        update: params.update,
        generator_matrix: wc.generator().to_rows(),
        check_matrix: wc.check_matrix().to_rows(),
        min_distance: adm.min_distance,
        covering_radius: wc.covering_radius()?,
        correctable_per_window: adm.correctable(),
        protected: adm.protected,
        d_prime: adm.d_prime,
        meets_distance_condition: adm.meets_distance_condition,
        density,
        cost_bound,
        multiplicity,
    })
}

fn analyze(cli: &Cli, a: &AnalyzeArgs, budget: Budget, out: &mut dyn Write) -> Result<()> {
    let params = a.horizon.params()?;
    let loaded = CodeSpecFile::read(&a.code)?;
    let multiplicity = a.multiplicity.map(|m| (m, a.delta.unwrap_or(params.window)));
    let manifest = RunManifest::new(
        "analyze",
        cli.seed.unwrap_or(0),
        budget.max_enumeration,
        json!({
            "code": loaded.spec,
            "window": params.window,
            "update": params.update,
            "frame": a.frame,
            "multiplicity": multiplicity,
        }),
    );
    let r = analysis(&loaded, params, a.frame, multiplicity, budget, manifest)?;
    match cli.format {
        Format::Structured => writeln!(out, "{}", serde_json::to_string_pretty(&r).expect("serializes"))?,
        Format::Csv => {
            writeln!(out, "# {}", r.manifest.comment_line())?;
            let mut rows: Vec<(String, String)> = vec![
                ("field_p".into(), r.field_p.to_string()),
                ("n".into(), r.n.to_string()),
                ("k".into(), r.k.to_string()),
                ("delta".into(), r.delta.to_string()),
                ("controllability_indices".into(), join(&r.controllability_indices, " ")),
                ("kappa_min".into(), r.kappa_min.to_string()),
                ("kappa_max".into(), r.kappa_max.to_string()),
                ("window".into(), r.window.to_string()),
                ("update".into(), r.update.to_string()),
                ("generator_matrix".into(), render_rows(&r.generator_matrix)),
                ("check_matrix".into(), render_rows(&r.check_matrix)),
                ("min_distance".into(), r.min_distance.to_string()),
                ("covering_radius".into(), r.covering_radius.to_string()),
                ("protected".into(), join(&r.protected, " ")),
                ("d_prime".into(), r.d_prime.to_string()),
                ("meets_distance_condition".into(), r.meets_distance_condition.to_string()),
            ];
            for d in &r.density {
                rows.push((format!("density_c{}", d.window), d.density.clone()));
            }
            if let Some(c) = &r.cost_bound {
                rows.push(("cost_bound".into(), c.bound.to_string()));
            }
            if let Some(m) = &r.multiplicity {
                rows.push(("multiplicity_bound".into(), m.bound.clone()));
            }
            csv_row(out, &["quantity".into(), "value".into()])?;
            for (q, v) in rows {
                csv_row(out, &[q, v])?;
            }
        }
        Format::Text => {
            writeln!(out, "# {}", r.manifest.comment_line())?;
            if let Some(label) = &r.label {
                writeln!(out, "{label}")?;
            }
            writeln!(out, "GF({}), n = {}, k = {}, delta = {}", r.field_p, r.n, r.k, r.delta)?;
            writeln!(
                out,
                "controllability indices = ({}), kappa_min = {}, kappa_max = {}",
                join(&r.controllability_indices, ", "),
                r.kappa_min,
                r.kappa_max
            )?;
            if r.realization_verified == Some(true) {
                writeln!(out, "generator matches the realization")?;
            }
            writeln!(out, "window N = {}, update L = {}", r.window, r.update)?;
            writeln!(out, "B_{} =", r.window)?;
            for row in &r.generator_matrix {
                writeln!(out, "  [{}]", join(row, " "))?;
            }
            writeln!(out, "H_{} =", r.window)?;
            for row in &r.check_matrix {
                writeln!(out, "  [{}]", join(row, " "))?;
            }
            writeln!(out, "d_{} = {}", r.window, r.min_distance)?;
            writeln!(out, "rho_{} = {}", r.window, r.covering_radius)?;
            writeln!(out, "protected = {{{}}}", join(&r.protected, ","))?;
            writeln!(
                out,
                "d' = {} (corrects {} per window, d' >= d_N - 1: {})",
                r.d_prime,
                r.correctable_per_window,
                if r.meets_distance_condition { "yes" } else { "no" }
            )?;
            for d in &r.density {
                writeln!(
                    out,
                    "C_{}: [{}, {}, {}], t = {}, E = {}, density = {} (~{:.6}), outside = {}",
                    d.window, d.n, d.k, d.d, d.t, d.e_kt, d.density, d.density_value, d.p_outside
                )?;
            }
            if let Some(c) = &r.cost_bound {
                writeln!(out, "cost bound for T = {}, L = {}: {}", c.frame, c.update, c.bound)?;
            }
            if let Some(m) = &r.multiplicity {
                writeln!(
                    out,
                    "multiplicity bound M = {}, Delta = {}: {} (~{:.6})",
                    m.m, m.delta, m.bound, m.value
                )?;
            }
        }
    }
    Ok(())
}

fn encode(cli: &Cli, a: &EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = CodeSpecFile::read(&a.code)?;
    let code = &loaded.code;
    let seed = cli.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = match (&a.inputs, a.random) {
        (Some(path), _) => parse_inputs(&read_file(path)?, &path.display().to_string(), code.field(), code.k())?,
        (None, Some(len)) => {
            use rand::Rng;
            (0..len)
                .map(|_| (0..code.k()).map(|_| rng.gen_range(0..code.field().order())).collect())
                .collect()
        }
        (None, None) => {
            return Err(Error::InvalidParams("encode needs --inputs or --random".into()))
        }
    };
    let clean = code.encode_terminated(&inputs)?;
    let channel = match (a.p_err, a.window_errors) {
        (Some(p_err), _) => Some(ChannelSpec::QSymmetric { p_err }),
        (None, Some(weight)) => Some(ChannelSpec::PerWindowWeight {
            weight,
            window: a.error_window,
            stride: a.error_stride,
        }),
        (None, None) => None,
    };
    let (received, error_weight) = match &channel {
        Some(spec) => apply_channel_with(&clean, spec, &mut rng)?,
        None => (clean.clone(), 0),
    };
    let manifest = RunManifest::new(
        "encode",
        seed,
        cli.budget,
        json!({
            "code": loaded.spec,
            "inputs": inputs,
            "channel": channel,
        }),
    );
    let comments = [manifest.comment_line()];
    if let Some(path) = &a.clean_output {
        write_file(path, &write_sequence(&clean, &comments))?;
    }
    match cli.format {
        Format::Structured => {
            let doc = json!({
                "manifest": manifest,
                "codeword": (0..clean.len()).map(|t| clean.symbol(t).to_vec()).collect::<Vec<_>>(),
                "received": (0..received.len()).map(|t| received.symbol(t).to_vec()).collect::<Vec<_>>(),
                "error_weight": error_weight,
            });
            let text = serde_json::to_string_pretty(&doc).expect("serializes");
            match &a.output {
                Some(path) => write_file(path, &(text + "\n"))?,
                None => writeln!(out, "{text}")?,
            }
        }
        Format::Text | Format::Csv => {
            let text = write_sequence(&received, &comments);
            match &a.output {
                Some(path) => {
                    write_file(path, &text)?;
                    writeln!(
                        out,
                        "wrote {} symbols ({} errors) to {}",
                        received.len(),
                        error_weight,
                        path.display()
                    )?;
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn load_received(path: &Path, code: &ConvCode) -> Result<SymbolSeq> {
    let seq = parse_sequence(&read_file(path)?, &path.display().to_string())?;
    if seq.field() != code.field() {
        return Err(Error::FieldMismatch {
            expected: code.field().order(),
            found: seq.field().order(),
        });
    }
    if seq.outputs() != code.outputs() || seq.inputs() != code.k() {
        return Err(Error::Dimension(format!(
            "{}: symbols have n = {}, k = {}; the code has n = {}, k = {}",
            path.display(),
            seq.n(),
            seq.inputs(),
            code.n(),
            code.k()
        )));
    }
    Ok(seq)
}

fn symbols_json(seq: &SymbolSeq) -> serde_json::Value {
    json!((0..seq.len()).map(|t| seq.symbol(t).to_vec()).collect::<Vec<_>>())
}

fn decode_json(r: &DecodeResult) -> serde_json::Value {
    json!({
        "inputs": r.u_seq,
        "codeword": symbols_json(&r.codeword),
        "cost": r.cost,
        "frame_cost": r.frame_cost,
        "tau": r.tau,
        "tie_events": r.tie_events,
        "per_step_costs": r.per_step_costs,
    })
}

fn decode(cli: &Cli, a: &DecodeArgs, budget: Budget, out: &mut dyn Write) -> Result<()> {
    let params = a.horizon.params()?;
    let loaded = CodeSpecFile::read(&a.code)?;
    let code = &loaded.code;
    let received = load_received(&a.received, code)?;
    let result = RecedingHorizonDecoder::new(code, params, budget)?.decode(&received)?;
    let exact = if a.exact {
        Some(ExactDecoder::new(code, budget)?.decode(&received)?)
    } else {
        None
    };
    let manifest = RunManifest::new(
        "decode",
        cli.seed.unwrap_or(0),
        budget.max_enumeration,
        json!({
            "code": loaded.spec,
            "window": params.window,
            "update": params.update,
            "exact": a.exact,
            "received": symbols_json(&received),
        }),
    );
    if let Some(path) = &a.output {
        write_file(path, &write_sequence(&result.codeword, &[manifest.comment_line()]))?;
    }
    let len = received
        .len()
        .max(result.codeword.len())
        .max(exact.as_ref().map_or(0, |e| e.codeword.len()));
    let (rx, heur) = (received.padded(len), result.codeword.padded(len));
    let ex = exact.as_ref().map(|e| e.codeword.padded(len));
    match cli.format {
        Format::Structured => {
            let doc = json!({
                "manifest": manifest,
                "receding_horizon": decode_json(&result),
                "exact": exact.as_ref().map(decode_json),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes"))?;
        }
        Format::Csv => {
            writeln!(out, "# {}", manifest.comment_line())?;
            let mut header = vec!["t".to_string(), "received".into(), "decoded".into()];
            if ex.is_some() {
                header.push("exact".into());
            }
            csv_row(out, &header)?;
            for t in 0..len {
                let mut row = vec![t.to_string(), join(rx.symbol(t), " "), join(heur.symbol(t), " ")];
                if let Some(e) = &ex {
                    row.push(join(e.symbol(t), " "));
                }
                csv_row(out, &row)?;
            }
        }
        Format::Text => {
            writeln!(out, "# {}", manifest.comment_line())?;
            writeln!(out, "recovered inputs:")?;
            for (t, u) in result.u_seq.iter().enumerate() {
                writeln!(out, "  u_{t} = ({})", join(u, ","))?;
            }
            writeln!(out, "codeword:")?;
            for t in 0..result.codeword.len() {
                writeln!(
                    out,
                    "  c_{t} = y ({}) u ({})",
                    join(result.codeword.y(t), ","),
                    join(result.codeword.u(t), ",")
                )?;
            }
            writeln!(out, "window costs: {}", join(&result.per_step_costs, " "))?;
            if result.tie_events.is_empty() {
                writeln!(out, "ties: none")?;
            }
            for e in &result.tie_events {
                writeln!(out, "tie at t = {}: {} equally near window codewords", e.time, e.count)?;
            }
            writeln!(out, "tau = {}", result.tau)?;
            writeln!(out, "cost = {} (frame {})", result.cost, result.frame_cost)?;
            if let (Some(e), Some(exc)) = (&exact, &ex) {
                writeln!(out, "exact cost = {} (frame {})", e.cost, e.frame_cost)?;
                writeln!(out, "   t  received | receding | exact")?;
                for t in 0..len {
                    let mark = if heur.symbol(t) != exc.symbol(t) { "  *" } else { "" };
                    writeln!(
                        out,
                        "{t:>4}  {} | {} | {}{mark}",
                        join(rx.symbol(t), " "),
                        join(heur.symbol(t), " "),
                        join(exc.symbol(t), " ")
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Resolves a config into an experiment; relative code paths are taken
/// from `base`.
pub fn experiment_from_config(
    cfg: &SimulateConfig,
    base: Option<&Path>,
    seed: u64,
    budget: Budget,
) -> Result<(ExperimentConfig, SimulateConfig)> {
    let loaded = match &cfg.code {
        CodeRef::Path(p) => {
            let path = match base {
                Some(b) => b.join(p),
                None => PathBuf::from(p),
            };
            CodeSpecFile::read(&path)?
        }
        CodeRef::Inline(spec) => CodeSpecFile::load(&toml::to_string(spec).expect("serializes"), "inline code")?,
    };
    let params = HorizonParams::new(cfg.window, cfg.update)?;
    let mut exp = ExperimentConfig::new(loaded.code, params, cfg.frame, cfg.channel.clone());
    exp.trials = cfg.trials;
    exp.seed = seed;
    exp.budget = budget;
    exp.exact = cfg.exact;
    exp.multiplicity = cfg.multiplicity;
    exp.validate()?;
    let resolved = SimulateConfig {
        code: CodeRef::Inline(loaded.spec),
        seed: None,
        ..cfg.clone()
    };
    Ok((exp, resolved))
}

fn simulate(cli: &Cli, a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let (cfg, base, seed, budget) = match (&a.config, &a.manifest) {
        (Some(path), _) => {
            let src = read_file(path)?;
            let cfg: SimulateConfig = toml::from_str(&src).map_err(|e| Error::Parse {
                source_name: path.display().to_string(),
                line: e.span().map_or(1, |s| src[..s.start].matches('\n').count() + 1),
                message: e.message().trim().to_string(),
            })?;
            let seed = cli.seed.or(cfg.seed).unwrap_or(0);
            (cfg, path.parent().map(Path::to_path_buf), seed, cli.budget)
        }
        (None, Some(path)) => {
            let m = RunManifest::extract(&read_file(path)?, &path.display().to_string())?;
            if m.command != "simulate" {
                return Err(Error::InvalidParams(format!(
                    "manifest records `{}`, not `simulate`",
                    m.command
                )));
            }
            let cfg: SimulateConfig = serde_json::from_value(m.parameters.clone())
                .map_err(|e| Error::InvalidParams(format!("manifest parameters: {e}")))?;
            (cfg, None, m.seed, m.budget)
        }
        (None, None) => return Err(Error::InvalidParams("simulate needs --config or --manifest".into())),
    };
    let budget = Budget::new(budget);
    let (mut exp, resolved) = experiment_from_config(&cfg, base.as_deref(), seed, budget)?;
    exp.workers = a.workers;
    exp.timing = a.timing;
    let manifest = RunManifest::new(
        "simulate",
        seed,
        budget.max_enumeration,
        serde_json::to_value(&resolved).expect("serializes"),
    );
    let (report, records) = run_experiment(&exp)?;

    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;
    let doc = json!({ "manifest": manifest, "report": report });
    let report_text = serde_json::to_string_pretty(&doc).expect("serializes") + "\n";
    write_file(&a.out.join("report.json"), &report_text)?;
    let mut csv_bytes = Vec::new();
    write_trials_csv(&mut csv_bytes, &[manifest.comment_line()], &records)?;
    std::fs::write(a.out.join("trials.csv"), &csv_bytes)
        .map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;

    match cli.format {
        Format::Structured => out.write_all(report_text.as_bytes())?,
        Format::Csv => out.write_all(&csv_bytes)?,
        Format::Text => write_report_text(out, &report)?,
    }
    Ok(if report.has_hard_violation() { 1 } else { 0 })
}

fn write_report_text(out: &mut dyn Write, r: &ExperimentReport) -> Result<()> {
    writeln!(out, "trials: {}", r.trials)?;
    writeln!(out, "frame errors: {} ({:.4})", r.frame_error_count, r.frame_error_rate)?;
    writeln!(out, "average cost: {:.4}, max cost: {}", r.avg_cost, r.max_cost)?;
    writeln!(
        out,
        "max frame cost: {} (bound {} = ceil(T/L) * {})",
        r.max_frame_cost, r.bound_cost, r.covering_radius
    )?;
    writeln!(
        out,
        "tie rate: {:.4} (first window {:.4})",
        r.tie_event_rate, r.first_window_tie_rate
    )?;
    if let Some(e) = &r.exact {
        writeln!(
            out,
            "exact: average cost {:.4}, optimal in {:.4} of trials",
            e.avg_exact_cost, e.equal_cost_fraction
        )?;
    }
    if let Some(m) = &r.multiplicity {
        writeln!(
            out,
            "multiplicity M = {}, Delta = {}: observed {:.5} (lower {:.5}), bound {} (~{:.5})",
            m.m, m.delta, m.observed_rate, m.observed_lower, m.bound, m.bound_value
        )?;
    }
    if let Some(t) = &r.timing {
        writeln!(out, "receding-horizon decode: {:.0} ns mean", t.heuristic_mean_ns)?;
        if let Some(e) = t.exact_mean_ns {
            writeln!(out, "exact decode: {e:.0} ns mean")?;
        }
    }
    let v = &r.violations;
    writeln!(
        out,
        "violations: membership {}, cost bound {}, optimality {}",
        v.membership, v.cost_bound, v.optimality
    )?;
    Ok(())
}

/// Timing summary of one decoder.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub decoder: String,
    pub samples: usize,
    pub median_ns: Option<f64>,
    pub p10_ns: Option<f64>,
    pub p90_ns: Option<f64>,
    /// `ok`, or why the decoder was skipped.
    pub status: String,
}

/// Nearest-rank quantile of sorted samples.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn summarize(decoder: &str, mut samples: Vec<f64>) -> BenchRow {
    samples.sort_by(f64::total_cmp);
    BenchRow {
        decoder: decoder.to_string(),
        samples: samples.len(),
        median_ns: Some(quantile(&samples, 0.5)),
        p10_ns: Some(quantile(&samples, 0.1)),
        p90_ns: Some(quantile(&samples, 0.9)),
        status: "ok".into(),
    }
}

/// Times both decoders on the same noisy frames. The exact row is marked
/// skipped when its trellis exceeds the budget.
#[allow(clippy::too_many_arguments)]
pub fn bench(
    code: &ConvCode,
    params: HorizonParams,
    frame_last: usize,
    trials: usize,
    p_err: f64,
    reps: usize,
    seed: u64,
    budget: Budget,
) -> Result<Vec<BenchRow>> {
    if trials == 0 || reps == 0 {
        return Err(Error::InvalidParams("bench needs trials >= 1 and reps >= 1".into()));
    }
    params.check_frame(frame_last)?;
    let heuristic = RecedingHorizonDecoder::new(code, params, budget)?;
    let exact = ExactDecoder::new(code, budget);
    let channel = ChannelSpec::QSymmetric { p_err };
    let frames: Vec<SymbolSeq> = (0..trials)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sent = random_frame(code, frame_last, &mut rng)?;
            Ok(apply_channel_with(&sent, &channel, &mut rng)?.0)
        })
        .collect::<Result<_>>()?;

    let time = |f: &dyn Fn(&SymbolSeq) -> Result<DecodeResult>| -> Result<Vec<f64>> {
        f(&frames[0])?;
        frames
            .iter()
            .map(|r| {
                let start = Instant::now();
                for _ in 0..reps {
                    std::hint::black_box(f(std::hint::black_box(r))?);
                }
                Ok(start.elapsed().as_nanos() as f64 / reps as f64)
            })
            .collect()
    };
    let mut rows = vec![summarize("receding_horizon", time(&|r| heuristic.decode(r))?)];
    let exact = exact.and_then(|ex| time(&|r| ex.decode(r)));
    rows.push(match exact {
        Ok(samples) => summarize("exact", samples),
        Err(e @ Error::BudgetExceeded { .. }) => BenchRow {
            decoder: "exact".into(),
            samples: 0,
            median_ns: None,
            p10_ns: None,
            p90_ns: None,
            status: format!("skipped: {e}"),
        },
        Err(e) => return Err(e),
    });
    Ok(rows)
}

fn bench_cmd(cli: &Cli, a: &BenchArgs, budget: Budget, out: &mut dyn Write) -> Result<()> {
    let params = a.horizon.params()?;
    let loaded = CodeSpecFile::read(&a.code)?;
    let seed = cli.seed.unwrap_or(0);
    let rows = bench(&loaded.code, params, a.frame, a.trials, a.p_err, a.reps, seed, budget)?;
    let manifest = RunManifest::new(
        "bench",
        seed,
        budget.max_enumeration,
        json!({
            "code": loaded.spec,
            "window": params.window,
            "update": params.update,
            "frame": a.frame,
            "trials": a.trials,
            "p_err": a.p_err,
            "reps": a.reps,
        }),
    );
    let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.0}"));
    match cli.format {
        Format::Structured => {
            let doc = json!({ "manifest": manifest, "rows": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes"))?;
        }
        Format::Csv => {
            writeln!(out, "# {}", manifest.comment_line())?;
            csv_row(
                out,
                &["decoder", "samples", "median_ns", "p10_ns", "p90_ns", "status"].map(String::from),
            )?;
            for r in &rows {
                csv_row(
                    out,
                    &[
                        r.decoder.clone(),
                        r.samples.to_string(),
                        num(r.median_ns),
                        num(r.p10_ns),
                        num(r.p90_ns),
                        r.status.clone(),
                    ],
                )?;
            }
        }
        Format::Text => {
            writeln!(out, "# {}", manifest.comment_line())?;
            writeln!(
                out,
                "{:<18} {:>8} {:>12} {:>12} {:>12}  status",
                "decoder", "samples", "median_ns", "p10_ns", "p90_ns"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{:<18} {:>8} {:>12} {:>12} {:>12}  {}",
                    r.decoder,
                    r.samples,
                    num(r.median_ns),
                    num(r.p10_ns),
                    num(r.p90_ns),
                    r.status
                )?;
            }
        }
    }
    Ok(())
}
