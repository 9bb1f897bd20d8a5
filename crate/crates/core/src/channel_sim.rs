//! Noise injection and the Monte Carlo experiment runner.
//!
//! Every trial draws its randomness from `ChaCha8Rng::seed_from_u64(seed)`
//! with the stream set to the trial index, so a trial's outcome depends only
//! on the master seed and its index. Trials run on a dedicated rayon pool and
//! are collected in index order, which makes reports independent of the
//! worker count.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_code::{multiplicity_bound, rational_to_f64, WindowCode};
use crate::conv_system::{ConvCode, SymbolSeq};
use crate::decoders::{cost_bound, DecodeResult, ExactDecoder, HorizonParams, RecedingHorizonDecoder};
use crate::{Budget, Error, Result};

/// Channel model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    /// Each field symbol is replaced, with probability `p_err`, by a uniformly
    /// chosen different element.
    QSymmetric { p_err: f64 },
    /// Every window of `window` symbols starting at a multiple of `stride`
    /// carries exactly `weight` symbol errors (fewer only where the window
    /// runs past the frame end and the remaining positions cannot hold them).
    PerWindowWeight {
        weight: usize,
        window: usize,
        stride: usize,
    },
    /// A fixed additive error, one row per symbol.
    Explicit { errors: Vec<Vec<u32>> },
}

impl ChannelSpec {
    pub fn noiseless() -> Self {
        ChannelSpec::QSymmetric { p_err: 0.0 }
    }

    /// Checks the spec against symbols of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ChannelSpec::QSymmetric { p_err } => {
                if !(0.0..=1.0).contains(p_err) {
                    return Err(Error::InvalidParams(format!(
                        "p_err = {p_err} is not a probability"
                    )));
                }
            }
            ChannelSpec::PerWindowWeight {
                weight,
                window,
                stride,
            } => {
                if *window == 0 || *stride == 0 {
                    return Err(Error::InvalidParams(
                        "per-window channel needs window >= 1 and stride >= 1".into(),
                    ));
                }
                if *weight > window * n {
                    return Err(Error::InvalidParams(format!(
                        "weight {weight} exceeds the {} positions of a window",
                        window * n
                    )));
                }
            }
            ChannelSpec::Explicit { errors } => {
                if let Some(row) = errors.iter().find(|r| r.len() != n) {
                    return Err(Error::Dimension(format!(
                        "explicit error symbol has length {}, expected {n}",
                        row.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Passes `c` through the channel using a generator seeded with `seed`.
/// Returns the received word and the weight of the error actually added.
pub fn apply_channel(c: &SymbolSeq, spec: &ChannelSpec, seed: u64) -> Result<(SymbolSeq, usize)> {
    apply_channel_with(c, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// [`apply_channel`] with a caller-supplied generator.
pub fn apply_channel_with<R: Rng>(
    c: &SymbolSeq,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<(SymbolSeq, usize)> {
    let n = c.n();
    spec.validate(n)?;
    let f = c.field();
    let p = f.order();
    let mut received = c.clone();
    match spec {
        ChannelSpec::QSymmetric { p_err } => {
            for t in 0..c.len() {
                for x in received.symbol_mut(t) {
                    if *p_err > 0.0 && rng.gen_bool(*p_err) {
                        *x = f.add(*x, rng.gen_range(1..p));
                    }
                }
            }
        }
        ChannelSpec::PerWindowWeight {
            weight,
            window,
            stride,
        } => {
            let len = c.len();
            let mut hit = vec![false; len * n];
            let mut covered = 0;
            let mut start = 0;
            while start < len {
                let end = (start + window).min(len);
                let existing = hit[start * n..end * n].iter().filter(|&&h| h).count();
                let fresh = covered.max(start)..end;
                let need = weight.saturating_sub(existing).min(fresh.len() * n);
                let positions = rand::seq::index::sample(rng, fresh.len() * n, need);
                for pos in positions {
                    let idx = fresh.start * n + pos;
                    hit[idx] = true;
                    let (t, j) = (idx / n, idx % n);
                    let x = &mut received.symbol_mut(t)[j];
                    *x = f.add(*x, rng.gen_range(1..p));
                }
                covered = covered.max(end);
                start += stride;
            }
        }
        ChannelSpec::Explicit { errors } => {
            let e = SymbolSeq::from_symbols(f, c.outputs(), c.inputs(), errors)?;
            received = c.add(&e);
        }
    }
    let w = received.sub(c).weight();
    Ok((received, w))
}

/// Decoder under test in an experiment.
pub trait FrameDecoder: Sync {
    fn decode(&self, received: &SymbolSeq) -> Result<DecodeResult>;
}

impl FrameDecoder for RecedingHorizonDecoder {
    fn decode(&self, received: &SymbolSeq) -> Result<DecodeResult> {
        RecedingHorizonDecoder::decode(self, received)
    }
}

/// Random terminated codeword of exactly `T + 1` symbols ending in the zero
/// state.
pub fn random_frame<R: Rng>(code: &ConvCode, frame_last: usize, rng: &mut R) -> Result<SymbolSeq> {
    let frame = frame_last + 1;
    let msg_len = frame.saturating_sub(code.kappa_max());
    let p = code.field().order();
    let inputs: Vec<Vec<u32>> = (0..msg_len)
        .map(|_| (0..code.k()).map(|_| rng.gen_range(0..p)).collect())
        .collect();
    let mut c = code.encode_terminated(&inputs)?;
    if c.len() > frame {
        // only when the frame is shorter than kappa_max
        c = SymbolSeq::zeros(code.field(), code.outputs(), code.k(), frame);
    }
    Ok(c.padded(frame))
}

/// Estimate of the probability of `m` equally good window solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicitySpec {
    pub m: usize,
    pub delta: usize,
}

/// Everything needed to reproduce an experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub code: ConvCode,
    pub params: HorizonParams,
    /// Index `T` of the last frame symbol; frames have `T + 1` symbols.
    pub frame_last: usize,
    pub channel: ChannelSpec,
    pub trials: usize,
    pub seed: u64,
    pub budget: Budget,
    /// Also run the exact decoder on every trial.
    pub exact: bool,
    pub multiplicity: Option<MultiplicitySpec>,
    /// Worker threads; `0` lets rayon decide. Does not affect results.
    pub workers: usize,
    /// Record wall-clock decode times (excluded from the per-trial CSV).
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(code: ConvCode, params: HorizonParams, frame_last: usize, channel: ChannelSpec) -> Self {
        Self {
            code,
            params,
            frame_last,
            channel,
            trials: 1000,
            seed: 0,
            budget: Budget::default(),
            exact: false,
            multiplicity: None,
            workers: 0,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("trial count must be at least 1".into()));
        }
        HorizonParams::new(self.params.window, self.params.update)?;
        self.params.check_frame(self.frame_last)?;
        self.channel.validate(self.code.n())?;
        if let Some(m) = self.multiplicity {
            if m.m < 2 || m.delta < self.params.window {
                return Err(Error::InvalidParams(format!(
                    "multiplicity estimate needs M >= 2 and Delta >= N, got M = {}, Delta = {}",
                    m.m, m.delta
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub error_weight: usize,
    pub heuristic_cost: usize,
    pub heuristic_frame_cost: usize,
    pub exact_cost: Option<usize>,
    pub tie_events: usize,
    pub first_window_ties: u64,
    pub recovered: bool,
    pub is_codeword: bool,
    pub within_bound: bool,
    pub multiplicity_event: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    /// Decoder output not a codeword.
    pub membership: usize,
    /// Frame cost above `ceil(T / L) rho_N`.
    pub cost_bound: usize,
    /// Heuristic cost below the exact optimum.
    pub optimality: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.membership + self.cost_bound + self.optimality
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactComparison {
    /// Trials where the heuristic reached the optimal cost.
    pub equal_cost_fraction: f64,
    pub avg_exact_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub m: usize,
    pub delta: usize,
    /// Exact bound as `numerator/denominator`.
    pub bound: String,
    pub bound_value: f64,
    pub events: usize,
    pub observed_rate: f64,
    /// One-sided lower confidence limit (Wilson score, 3 sigma).
    pub observed_lower: f64,
    /// `observed_lower <= bound`. Only asserted by callers when `Delta = N`.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub heuristic_mean_ns: f64,
    pub exact_mean_ns: Option<f64>,
}

/// Aggregate statistics of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub trials: usize,
    pub frame_error_count: usize,
    pub frame_error_rate: f64,
    pub avg_cost: f64,
    pub max_cost: usize,
    /// Largest cost over the frame symbols `0..T`, checked against the bound.
    pub max_frame_cost: usize,
    pub bound_cost: usize,
    pub covering_radius: usize,
    /// Fraction of trials with at least one tied window decode.
    pub tie_event_rate: f64,
    /// Fraction of trials whose first window decode was tied.
    pub first_window_tie_rate: f64,
    pub violations: Violations,
    pub exact: Option<ExactComparison>,
    pub multiplicity: Option<MultiplicityReport>,
    pub timing: Option<Timing>,
}

impl ExperimentReport {
    /// True when a guaranteed property failed in some trial.
    pub fn has_hard_violation(&self) -> bool {
        self.violations.total() > 0 || self.max_frame_cost > self.bound_cost
    }
}

/// Lower end of the one-sided Wilson score interval.
pub fn wilson_lower(successes: usize, trials: usize, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let centre = phat + z2 / (2.0 * n);
    let spread = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

/// Runs the experiment with the receding-horizon decoder.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Vec<TrialRecord>)> {
    cfg.validate()?;
    let decoder = RecedingHorizonDecoder::new(&cfg.code, cfg.params, cfg.budget)?;
    run_experiment_with(cfg, &decoder)
}

/// Runs the experiment with any decoder; the window code of length `N` is
/// still used for the cost bound.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    decoder: &dyn FrameDecoder,
) -> Result<(ExperimentReport, Vec<TrialRecord>)> {
    cfg.validate()?;
    let harness = Harness::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(TrialRecord, u128, u128)> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| harness.trial(cfg, decoder, i))
            .collect::<Result<_>>()
    })?;
    let report = harness.aggregate(cfg, &outcomes)?;
    Ok((report, outcomes.into_iter().map(|o| o.0).collect()))
}

struct Harness {
    bound: usize,
    rho: usize,
    exact: Option<ExactDecoder>,
    /// Window codes `C_N, ..., C_Delta` for the multiplicity estimate.
    tie_windows: Vec<RecedingHorizonDecoder>,
}

impl Harness {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let wc = WindowCode::build(&cfg.code, cfg.params.window, cfg.budget)?;
        let rho = wc.covering_radius()?;
        let bound = cost_bound(&wc, cfg.frame_last, cfg.params.update)?;
        let exact = if cfg.exact {
            Some(ExactDecoder::new(&cfg.code, cfg.budget)?)
        } else {
            None
        };
        let mut tie_windows = Vec::new();
        if let Some(m) = cfg.multiplicity {
            for l in cfg.params.window..=m.delta {
                let wc = Arc::new(WindowCode::build(&cfg.code, l, cfg.budget)?);
                tie_windows.push(RecedingHorizonDecoder::with_window_code(
                    wc,
                    HorizonParams::new(l, 1)?,
                )?);
            }
        }
        Ok(Self {
            bound,
            rho,
            exact,
            tie_windows,
        })
    }

    fn trial(
        &self,
        cfg: &ExperimentConfig,
        decoder: &dyn FrameDecoder,
        index: usize,
    ) -> Result<(TrialRecord, u128, u128)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let sent = random_frame(&cfg.code, cfg.frame_last, &mut rng)?;
        let (received, error_weight) = apply_channel_with(&sent, &cfg.channel, &mut rng)?;

        let started = cfg.timing.then(Instant::now);
        let out = decoder.decode(&received)?;
        let heuristic_ns = started.map_or(0, |s| s.elapsed().as_nanos());

        let (exact_cost, exact_ns) = match &self.exact {
            Some(ex) => {
                let started = cfg.timing.then(Instant::now);
                let res = ex.decode(&received)?;
                (Some(res.cost), started.map_or(0, |s| s.elapsed().as_nanos()))
            }
            None => (None, 0),
        };

        let first_window_ties = out
            .tie_events
            .first()
            .filter(|e| e.time == 0)
            .map_or(1, |e| e.count);
        let multiplicity_event = match cfg.multiplicity {
            Some(m) => {
                let x0 = vec![0; cfg.code.delta()];
                let mut all = true;
                for dec in &self.tie_windows {
                    if dec.window_step(&x0, &received, 0)?.ties < m.m as u64 {
                        all = false;
                        break;
                    }
                }
                Some(all)
            }
            None => None,
        };

        let len = sent.len().max(out.codeword.len());
        let record = TrialRecord {
            trial: index,
            seed: cfg.seed,
            error_weight,
            heuristic_cost: out.cost,
            heuristic_frame_cost: out.frame_cost,
            exact_cost,
            tie_events: out.tie_events.len(),
            first_window_ties,
            recovered: out.codeword.padded(len) == sent.padded(len),
            is_codeword: cfg.code.is_codeword(&out.codeword),
            within_bound: out.frame_cost <= self.bound,
            multiplicity_event,
        };
        Ok((record, heuristic_ns, exact_ns))
    }

    fn aggregate(
        &self,
        cfg: &ExperimentConfig,
        outcomes: &[(TrialRecord, u128, u128)],
    ) -> Result<ExperimentReport> {
        let trials = outcomes.len();
        let records = || outcomes.iter().map(|o| &o.0);
        let n = trials as f64;
        let frame_errors = records().filter(|r| !r.recovered).count();
        let violations = Violations {
            membership: records().filter(|r| !r.is_codeword).count(),
            cost_bound: records().filter(|r| !r.within_bound).count(),
            optimality: records()
                .filter(|r| r.exact_cost.is_some_and(|e| e > r.heuristic_cost))
                .count(),
        };
        let exact = self.exact.as_ref().map(|_| ExactComparison {
            equal_cost_fraction: records()
                .filter(|r| r.exact_cost == Some(r.heuristic_cost))
                .count() as f64
                / n,
            avg_exact_cost: records().filter_map(|r| r.exact_cost).sum::<usize>() as f64 / n,
        });
        let multiplicity = match cfg.multiplicity {
            Some(m) => {
                let bound: BigRational =
                    multiplicity_bound(&cfg.code, cfg.params.window, m.delta, m.m, cfg.budget)?;
                let events = records().filter(|r| r.multiplicity_event == Some(true)).count();
                let bound_value = rational_to_f64(&bound);
                let observed_lower = wilson_lower(events, trials, 3.0);
                Some(MultiplicityReport {
                    m: m.m,
                    delta: m.delta,
                    bound: bound.to_string(),
                    bound_value,
                    events,
                    observed_rate: events as f64 / n,
                    observed_lower,
                    consistent: observed_lower <= bound_value,
                })
            }
            None => None,
        };
        let timing = cfg.timing.then(|| Timing {
            heuristic_mean_ns: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / n,
            exact_mean_ns: self
                .exact
                .as_ref()
                .map(|_| outcomes.iter().map(|o| o.2 as f64).sum::<f64>() / n),
        });
        Ok(ExperimentReport {
            trials,
            frame_error_count: frame_errors,
            frame_error_rate: frame_errors as f64 / n,
            avg_cost: records().map(|r| r.heuristic_cost).sum::<usize>() as f64 / n,
            max_cost: records().map(|r| r.heuristic_cost).max().unwrap_or(0),
            max_frame_cost: records().map(|r| r.heuristic_frame_cost).max().unwrap_or(0),
            bound_cost: self.bound,
            covering_radius: self.rho,
            tie_event_rate: records().filter(|r| r.tie_events > 0).count() as f64 / n,
            first_window_tie_rate: records().filter(|r| r.first_window_ties > 1).count() as f64 / n,
            violations,
            exact,
            multiplicity,
            timing,
        })
    }
}

/// Writes one CSV row per trial. `preamble` lines are emitted first, each
/// prefixed with `# `.
pub fn write_trials_csv<W: Write>(out: W, preamble: &[String], records: &[TrialRecord]) -> Result<()> {
    let mut out = out;
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv_system::fixtures::{f2_code, f5_code};
    use crate::gf_linalg::Field;

    #[test]
    fn noiseless_and_explicit_channels() {
        let code = f5_code();
        let c = code.encode_terminated(&[vec![1, 2], vec![3, 4]]).unwrap();
        let (r, w) = apply_channel(&c, &ChannelSpec::noiseless(), 1).unwrap();
        assert_eq!((r, w), (c.clone(), 0));

        let errors = vec![vec![0, 1, 0], vec![0, 0, 0], vec![4, 0, 0]];
        let (r, w) = apply_channel(&c, &ChannelSpec::Explicit { errors: errors.clone() }, 1).unwrap();
        let e = SymbolSeq::from_symbols(code.field(), 1, 2, &errors).unwrap();
        assert_eq!(r, c.add(&e));
        assert_eq!(w, 2);
    }

    #[test]
    fn per_window_weight_places_exact_counts() {
        let code = f5_code();
        let c = SymbolSeq::zeros(code.field(), 1, 2, 11);
        let spec = ChannelSpec::PerWindowWeight {
            weight: 1,
            window: 2,
            stride: 1,
        };
        for seed in 0..200 {
            let (r, _) = apply_channel(&c, &spec, seed).unwrap();
            for j in 0..11 {
                let count: usize = (j..(j + 2).min(11)).map(|t| crate::gf_linalg::weight(r.symbol(t))).sum();
                if j + 1 < 11 {
                    assert_eq!(count, 1, "window {j}, seed {seed}");
                } else {
                    assert!(count <= 1);
                }
            }
        }
        assert!(ChannelSpec::PerWindowWeight { weight: 7, window: 2, stride: 1 }.validate(3).is_err());
    }

    #[test]
    fn q_symmetric_flip_rate() {
        let f = Field::new(3).unwrap();
        let c = SymbolSeq::zeros(f, 2, 2, 25_000);
        let (_, w) = apply_channel(&c, &ChannelSpec::QSymmetric { p_err: 0.2 }, 9).unwrap();
        let n = 100_000.0;
        let sigma = (n * 0.2 * 0.8f64).sqrt();
        assert!((w as f64 - 0.2 * n).abs() <= 3.0 * sigma);
        assert!(ChannelSpec::QSymmetric { p_err: 1.5 }.validate(4).is_err());
    }

    #[test]
    fn noiseless_experiment_is_clean() {
        let mut cfg = ExperimentConfig::new(f2_code(), HorizonParams::new(2, 1).unwrap(), 8, ChannelSpec::noiseless());
        cfg.trials = 100;
        cfg.exact = true;
        let (report, records) = run_experiment(&cfg).unwrap();
        assert_eq!(report.frame_error_count, 0);
        assert_eq!(report.avg_cost, 0.0);
        assert!(!report.has_hard_violation());
        assert_eq!(records.len(), 100);
        assert_eq!(report.exact.unwrap().equal_cost_fraction, 1.0);
    }

    #[test]
    fn reports_do_not_depend_on_workers() {
        let mut cfg = ExperimentConfig::new(
            f5_code(),
            HorizonParams::new(2, 1).unwrap(),
            10,
            ChannelSpec::QSymmetric { p_err: 0.1 },
        );
        cfg.trials = 300;
        cfg.seed = 42;
        cfg.workers = 1;
        let one = run_experiment(&cfg).unwrap();
        cfg.workers = 4;
        let four = run_experiment(&cfg).unwrap();
        assert_eq!(one, four);
    }

    struct Corrupting;

    impl FrameDecoder for Corrupting {
        fn decode(&self, received: &SymbolSeq) -> Result<DecodeResult> {
            let mut c = received.clone();
            c.symbol_mut(0)[0] = c.field().add(c.symbol(0)[0], 1);
            Ok(DecodeResult {
                u_seq: c.inputs_list(),
                cost: 1,
                frame_cost: 1,
                codeword: c,
                tau: 0,
                tie_events: Vec::new(),
                per_step_costs: Vec::new(),
            })
        }
    }

    #[test]
    fn corrupted_decoder_is_flagged() {
        let mut cfg = ExperimentConfig::new(f5_code(), HorizonParams::new(2, 1).unwrap(), 5, ChannelSpec::noiseless());
        cfg.trials = 10;
        let (report, _) = run_experiment_with(&cfg, &Corrupting).unwrap();
        assert_eq!(report.violations.membership, 10);
        assert!(report.has_hard_violation());
    }

    #[test]
    fn wilson_interval_behaves() {
        assert_eq!(wilson_lower(0, 100, 3.0), 0.0);
        let lo = wilson_lower(50, 100, 3.0);
        assert!(lo > 0.3 && lo < 0.5);
    }

    #[test]
    fn csv_has_preamble_and_rows() {
        let mut cfg = ExperimentConfig::new(f2_code(), HorizonParams::new(1, 1).unwrap(), 3, ChannelSpec::noiseless());
        cfg.trials = 3;
        let (_, records) = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &["manifest".to_string()], &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# manifest");
        assert!(lines[1].starts_with("trial,seed,error_weight"));
        assert_eq!(lines.len(), 5);
    }
}
