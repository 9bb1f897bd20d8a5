//! Receding-horizon decoding and the exact trellis decoder it is measured
//! against.
//!
//! The receding-horizon decoder repeatedly solves an `N`-step tracking
//! problem by decoding the window code `C_N`, commits the first `L` inputs,
//! advances the state and finally steers it back to zero. The exact decoder
//! runs the full backward recursion over all `p^delta` states with the
//! terminal state pinned to zero, which makes it a minimum-distance decoder of
//! the convolutional code.

use std::sync::Arc;

use serde::Serialize;

use crate::block_code::WindowCode;
use crate::conv_system::{ConvCode, SymbolSeq};
use crate::gf_linalg::{hamming_distance, lex_index, lex_vector, weight};
use crate::{checked_pow, Budget, Error, Result};

/// Hamming distance between two symbol sequences, the shorter one
/// zero-padded.
pub fn cost(received: &SymbolSeq, candidate: &SymbolSeq) -> usize {
    let len = received.len().max(candidate.len());
    let n = received.n();
    debug_assert_eq!(n, candidate.n());
    let (a, b) = (received.as_flat(), candidate.as_flat());
    let common = a.len().min(b.len());
    let tail = if a.len() > common { &a[common..] } else { &b[common..] };
    debug_assert_eq!(a.len().max(b.len()), len * n);
    hamming_distance(&a[..common], &b[..common]) + weight(tail)
}

/// Distance over the symbols `0..frame_len` only.
pub fn frame_cost(received: &SymbolSeq, candidate: &SymbolSeq, frame_len: usize) -> usize {
    (0..frame_len)
        .map(|t| {
            let r = (received.y_or_zero(t), received.u_or_zero(t));
            let c = (candidate.y_or_zero(t), candidate.u_or_zero(t));
            hamming_distance(r.0, c.0) + hamming_distance(r.1, c.1)
        })
        .sum()
}

/// Window length `N` and update length `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct HorizonParams {
    pub window: usize,
    pub update: usize,
}

impl HorizonParams {
    /// Requires `1 <= L <= N`.
    pub fn new(window: usize, update: usize) -> Result<Self> {
        if update == 0 || update > window {
            return Err(Error::InvalidParams(format!(
                "horizon needs 1 <= L <= N, got N = {window}, L = {update}"
            )));
        }
        Ok(Self { window, update })
    }

    /// Checks `N <= T + 1` for a frame with last index `t_last`.
    pub fn check_frame(&self, t_last: usize) -> Result<()> {
        if self.window > t_last + 1 {
            return Err(Error::InvalidParams(format!(
                "window N = {} exceeds the frame length T + 1 = {}",
                self.window,
                t_last + 1
            )));
        }
        Ok(())
    }
}

/// A window decode that had more than one nearest codeword.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TieEvent {
    pub time: usize,
    pub count: u64,
}

/// Output of either decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    /// Recovered inputs `u_0, ..., u_{T + tau}`.
    pub u_seq: Vec<Vec<u32>>,
    pub codeword: SymbolSeq,
    /// Distance to the zero-padded received word over the whole codeword.
    pub cost: usize,
    /// Distance over the symbols `0..T`, the quantity bounded by
    /// `ceil(T / L) rho_N`.
    pub frame_cost: usize,
    /// Length of the zero-return extension.
    pub tau: usize,
    pub tie_events: Vec<TieEvent>,
    /// Error weight of every window decode, in order.
    pub per_step_costs: Vec<usize>,
}

/// Outcome of a single window decode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowStep {
    /// The committed inputs `u_t, ..., u_{t + L - 1}`.
    pub inputs: Vec<Vec<u32>>,
    pub error_weight: usize,
    pub ties: u64,
}

/// Receding-horizon decoder with a prebuilt window code.
#[derive(Clone, Debug)]
pub struct RecedingHorizonDecoder {
    window_code: Arc<WindowCode>,
    params: HorizonParams,
    fast: Option<Arc<FastTables>>,
}

/// Largest table (in entries) the table-driven decode path may allocate.
const FAST_TABLE_CAP: u128 = 1 << 20;

/// Lookup tables that reduce a window step to vector additions: the
/// syndrome `y~_w - O x - T u~_w` is assembled from per-state and
/// per-received-symbol contributions, and the state advances through the
/// trellis.
#[derive(Debug)]
struct FastTables {
    trellis: Trellis,
    /// `-O x` for every state, `rows` entries each.
    state_part: Vec<u32>,
    /// Contribution of received symbol value `v` at window block `r`:
    /// entry `(r * symbols + v) * rows`.
    symbol_part: Vec<u32>,
    symbols: usize,
    rows: usize,
    /// Zero-return inputs for every state, as input indices.
    zero_return: Vec<Vec<usize>>,
}

impl FastTables {
    fn build(wc: &WindowCode, budget: Budget) -> Result<Option<Self>> {
        let code = wc.code();
        let f = code.field();
        let p = f.order() as u64;
        let big_n = wc.window();
        let rows = big_n * code.outputs();
        let states = checked_pow(p, code.delta());
        let symbols = checked_pow(p, code.n());
        let entries = states
            .saturating_mul(checked_pow(p, code.k()))
            .max(states.saturating_mul(rows as u128))
            .max(symbols.saturating_mul((big_n * rows) as u128));
        if entries > FAST_TABLE_CAP || budget.check("decoder tables", entries).is_err() {
            return Ok(None);
        }
        let trellis = Trellis::new(code, budget)?;
        let (states, symbols) = (states as usize, symbols as usize);

        let obs = wc.observability();
        let mut state_part = Vec::with_capacity(states * rows);
        let mut zero_return = Vec::with_capacity(states);
        for s in 0..states {
            let x = lex_vector(f, s, code.delta());
            state_part.extend(f.neg_vec(&obs.mul_vec(&x)?));
            let tail = code.zero_return_extension(&x)?;
            zero_return.push(tail.iter().map(|u| lex_index(f, u)).collect());
        }

        let top = wc.block().parity_part();
        let (ny, k) = (code.outputs(), code.k());
        let mut symbol_part = vec![0u32; big_n * symbols * rows];
        for r in 0..big_n {
            let t_block = top.block(0, r * k, rows, k);
            for v in 0..symbols {
                let sym = lex_vector(f, v, code.n());
                let (y, u) = sym.split_at(ny);
                let mut part = f.neg_vec(&t_block.mul_vec(u)?);
                for (a, &b) in part[r * ny..(r + 1) * ny].iter_mut().zip(y) {
                    *a = f.add(*a, b);
                }
                symbol_part[(r * symbols + v) * rows..(r * symbols + v + 1) * rows]
                    .copy_from_slice(&part);
            }
        }
        Ok(Some(Self {
            trellis,
            state_part,
            symbol_part,
            symbols,
            rows,
            zero_return,
        }))
    }
}

impl RecedingHorizonDecoder {
    /// Builds `C_N` and its syndrome table.
    pub fn new(code: &ConvCode, params: HorizonParams, budget: Budget) -> Result<Self> {
        let wc = WindowCode::build(code, params.window, budget)?;
        Self::with_window_code(Arc::new(wc), params)
    }

    /// Reuses an existing window code of length `params.window`.
    pub fn with_window_code(window_code: Arc<WindowCode>, params: HorizonParams) -> Result<Self> {
        HorizonParams::new(params.window, params.update)?;
        if window_code.window() != params.window {
            return Err(Error::InvalidParams(format!(
                "window code has N = {}, parameters ask for N = {}",
                window_code.window(),
                params.window
            )));
        }
        window_code.block().table()?;
        let fast = FastTables::build(&window_code, window_code.block().budget())?.map(Arc::new);
        Ok(Self {
            window_code,
            params,
            fast,
        })
    }

    /// Same decoder without lookup tables; every step goes through
    /// [`window_step`](Self::window_step). Results are identical.
    pub fn without_tables(mut self) -> Self {
        self.fast = None;
        self
    }

    pub fn params(&self) -> HorizonParams {
        self.params
    }

    pub fn window_code(&self) -> &WindowCode {
        &self.window_code
    }

    pub fn code(&self) -> &ConvCode {
        self.window_code.code()
    }

    /// The vector `z_{t,N}`: output rows `C A^i x_t - y~_{t+i}` and input rows
    /// `-u~_{t+i}`, both in decreasing time. Symbols past the received word
    /// count as zero.
    pub fn window_vector(&self, x: &[u32], received: &SymbolSeq, t: usize) -> Vec<u32> {
        let code = self.code();
        let f = code.field();
        let (big_n, ny, k) = (self.params.window, code.outputs(), code.k());
        let mut z = vec![0u32; big_n * code.n()];
        let (zy, zu) = z.split_at_mut(big_n * ny);
        self.window_code.observability().mul_vec_into(x, zy);
        for r in 0..big_n {
            let time = t + big_n - 1 - r;
            let y = received.y_or_zero(time);
            for (a, &b) in zy[r * ny..(r + 1) * ny].iter_mut().zip(y) {
                *a = f.sub(*a, b);
            }
            for (a, &b) in zu[r * k..(r + 1) * k].iter_mut().zip(received.u_or_zero(time)) {
                *a = f.neg(b);
            }
        }
        z
    }

    /// One window decode from state `x` at time `t`, committing `L` inputs.
    pub fn window_step(&self, x: &[u32], received: &SymbolSeq, t: usize) -> Result<WindowStep> {
        let code = self.code();
        let f = code.field();
        let (big_n, ny, k) = (self.params.window, code.outputs(), code.k());
        let z = self.window_vector(x, received, t);
        let dec = self.window_code.ml_decode(&z)?;
        let v = &dec.codeword[big_n * ny..];
        // u_{t+j} sits in block N - 1 - j of the message
        let inputs = (0..self.params.update)
            .map(|j| {
                let r = big_n - 1 - j;
                f.neg_vec(&v[r * k..(r + 1) * k])
            })
            .collect();
        Ok(WindowStep {
            inputs,
            error_weight: dec.weight,
            ties: dec.ties,
        })
    }

    /// Decodes a received word `c~_0, ..., c~_T`.
    pub fn decode(&self, received: &SymbolSeq) -> Result<DecodeResult> {
        check_received(self.code(), received)?;
        self.params.check_frame(received.len() - 1)?;
        match &self.fast {
            Some(tables) => self.decode_with_tables(tables, received),
            None => self.decode_stepwise(received),
        }
    }

    fn decode_stepwise(&self, received: &SymbolSeq) -> Result<DecodeResult> {
        let code = self.code();
        let t_last = received.len() - 1;
        let mut x = vec![0u32; code.delta()];
        let mut u_seq = Vec::with_capacity(received.len() + code.kappa_max());
        let mut tie_events = Vec::new();
        let mut per_step_costs = Vec::new();
        let mut t = 0;
        while t <= t_last {
            let step = self.window_step(&x, received, t)?;
            per_step_costs.push(step.error_weight);
            if step.ties > 1 {
                tie_events.push(TieEvent {
                    time: t,
                    count: step.ties,
                });
            }
            for u in step.inputs.into_iter().take(t_last + 1 - t) {
                x = code.step(&x, &u).1;
                u_seq.push(u);
            }
            t += self.params.update;
        }
        let tail = code.zero_return_extension(&x)?;
        let tau = tail.len();
        u_seq.extend(tail);
        let (codeword, end) = code.encode(&u_seq, None)?;
        debug_assert!(end.iter().all(|&v| v == 0));
        Ok(DecodeResult {
            cost: cost(received, &codeword),
            frame_cost: frame_cost(received, &codeword, t_last),
            u_seq,
            codeword,
            tau,
            tie_events,
            per_step_costs,
        })
    }

    fn decode_with_tables(&self, tables: &FastTables, received: &SymbolSeq) -> Result<DecodeResult> {
        let code = self.code();
        let f = code.field();
        let table = self.window_code.block().table()?;
        let (big_n, ny, k) = (self.params.window, code.outputs(), code.k());
        let (rows, symbols) = (tables.rows, tables.symbols);
        let t_last = received.len() - 1;
        let sym_index: Vec<usize> = (0..received.len())
            .map(|t| lex_index(f, received.symbol(t)))
            .collect();

        let mut path = Vec::with_capacity(received.len() + code.kappa_max());
        let mut tie_events = Vec::new();
        let mut per_step_costs = Vec::new();
        let mut syn = vec![0u32; rows];
        let mut u = vec![0u32; k];
        let mut state = 0usize;
        let mut t = 0;
        while t <= t_last {
            syn.copy_from_slice(&tables.state_part[state * rows..(state + 1) * rows]);
            for r in 0..big_n {
                let v = sym_index.get(t + big_n - 1 - r).copied().unwrap_or(0);
                if v != 0 {
                    let off = (r * symbols + v) * rows;
                    for (a, &b) in syn.iter_mut().zip(&tables.symbol_part[off..off + rows]) {
                        *a = f.add(*a, b);
                    }
                }
            }
            let idx = lex_index(f, &syn);
            let ties = table.ties(idx);
            per_step_costs.push(table.leader_weight(idx));
            if ties > 1 {
                tie_events.push(TieEvent { time: t, count: ties });
            }
            // u_{t+j} = u~_{t+j} + e_u, block N - 1 - j
            let e_u = &table.leader(idx)[rows..];
            for j in 0..self.params.update.min(t_last + 1 - t) {
                let r = big_n - 1 - j;
                let ur = received.u(t + j);
                for ((a, &b), &e) in u.iter_mut().zip(ur).zip(&e_u[r * k..(r + 1) * k]) {
                    *a = f.add(b, e);
                }
                let i = lex_index(f, &u);
                path.push(i);
                state = tables.trellis.next(state, i);
            }
            t += self.params.update;
        }
        let tail = &tables.zero_return[state];
        path.extend_from_slice(tail);
        let codeword = tables.trellis.codeword(&path);
        debug_assert_eq!(codeword.y(0).len(), ny);
        Ok(DecodeResult {
            cost: cost(received, &codeword),
            frame_cost: frame_cost(received, &codeword, t_last),
            u_seq: codeword.inputs_list(),
            codeword,
            tau: tail.len(),
            tie_events,
            per_step_costs,
        })
    }
}

fn check_received(code: &ConvCode, received: &SymbolSeq) -> Result<()> {
    if received.field() != code.field() {
        return Err(Error::FieldMismatch {
            expected: code.field().order(),
            found: received.field().order(),
        });
    }
    if received.outputs() != code.outputs() || received.inputs() != code.k() {
        return Err(Error::Dimension(format!(
            "received symbols are {}+{}, code symbols are {}+{}",
            received.outputs(),
            received.inputs(),
            code.outputs(),
            code.k()
        )));
    }
    if received.is_empty() {
        return Err(Error::InvalidParams("received word is empty".into()));
    }
    Ok(())
}

/// One-shot receding-horizon decode.
pub fn receding_horizon_decode(
    code: &ConvCode,
    received: &SymbolSeq,
    params: HorizonParams,
    budget: Budget,
) -> Result<DecodeResult> {
    RecedingHorizonDecoder::new(code, params, budget)?.decode(received)
}

/// `ceil(T / L) rho_N`.
pub fn cost_bound(wc: &WindowCode, t_last: usize, update: usize) -> Result<usize> {
    if update == 0 {
        return Err(Error::InvalidParams("update length L must be at least 1".into()));
    }
    Ok(t_last.div_ceil(update) * wc.covering_radius()?)
}

/// Optimal cost-to-go and argmin input index for every state at each stage.
#[derive(Clone, Debug)]
pub struct ValueTable {
    states: usize,
    values: Vec<u32>,
    argmin: Vec<u32>,
}

impl ValueTable {
    pub fn stages(&self) -> usize {
        self.argmin.len() / self.states.max(1)
    }

    /// `V_t(x)` for the state with lexicographic index `x`; `None` when no
    /// admissible trajectory exists.
    pub fn value(&self, stage: usize, state: usize) -> Option<u32> {
        let v = self.values[stage * self.states + state];
        (v != UNREACHABLE).then_some(v)
    }

    pub fn argmin(&self, stage: usize, state: usize) -> usize {
        self.argmin[stage * self.states + state] as usize
    }
}

const UNREACHABLE: u32 = u32::MAX;

/// Transition and output tables of a code over all `p^delta` states.
#[derive(Clone, Debug)]
pub struct Trellis {
    code: ConvCode,
    states: usize,
    inputs: usize,
    /// `next[s * inputs + i]`: successor state index.
    next: Vec<u32>,
    /// Output `y` for `(s, i)`, flat, `outputs` entries each.
    out: Vec<u32>,
    input_vecs: Vec<u32>,
}

impl Trellis {
    pub fn new(code: &ConvCode, budget: Budget) -> Result<Self> {
        let f = code.field();
        let p = f.order() as u64;
        let states = checked_pow(p, code.delta());
        let inputs = checked_pow(p, code.k());
        budget.check("trellis transitions", states.saturating_mul(inputs))?;
        let (states, inputs) = (states as usize, inputs as usize);
        let ny = code.outputs();
        let mut next = Vec::with_capacity(states * inputs);
        let mut out = Vec::with_capacity(states * inputs * ny);
        let input_vecs: Vec<u32> = (0..inputs).flat_map(|i| lex_vector(f, i, code.k())).collect();
        for s in 0..states {
            let x = lex_vector(f, s, code.delta());
            for i in 0..inputs {
                let (y, nx) = code.step(&x, &input_vecs[i * code.k()..(i + 1) * code.k()]);
                next.push(lex_index(f, &nx) as u32);
                out.extend_from_slice(&y);
            }
        }
        Ok(Self {
            code: code.clone(),
            states,
            inputs,
            next,
            out,
            input_vecs,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    #[inline]
    pub fn next(&self, state: usize, input: usize) -> usize {
        self.next[state * self.inputs + input] as usize
    }

    #[inline]
    pub fn output(&self, state: usize, input: usize) -> &[u32] {
        let ny = self.code.outputs();
        let tr = state * self.inputs + input;
        &self.out[tr * ny..(tr + 1) * ny]
    }

    #[inline]
    pub fn input(&self, i: usize) -> &[u32] {
        let k = self.code.k();
        &self.input_vecs[i * k..(i + 1) * k]
    }

    /// Codeword produced by the input indices from the zero state.
    pub fn codeword(&self, inputs: &[usize]) -> SymbolSeq {
        let code = &self.code;
        let mut seq = SymbolSeq::empty(code.field(), code.outputs(), code.k());
        let mut s = 0;
        for &i in inputs {
            seq.push(self.output(s, i), self.input(i));
            s = self.next(s, i);
        }
        seq
    }
}

/// Exact minimum-distance decoder over the full trellis.
#[derive(Clone, Debug)]
pub struct ExactDecoder {
    trellis: Trellis,
    budget: Budget,
}

impl ExactDecoder {
    pub fn new(code: &ConvCode, budget: Budget) -> Result<Self> {
        Ok(Self {
            trellis: Trellis::new(code, budget)?,
            budget,
        })
    }

    pub fn code(&self) -> &ConvCode {
        &self.trellis.code
    }

    /// Backward recursion over stages `0..=T + kappa_max`, terminal state 0.
    pub fn value_table(&self, received: &SymbolSeq) -> Result<ValueTable> {
        let tr = &self.trellis;
        check_received(&tr.code, received)?;
        let (states, inputs) = (tr.states, tr.inputs);
        let stages = received.len() + tr.code.kappa_max();
        self.budget.check(
            "trellis stages",
            (stages as u128).saturating_mul((states * inputs) as u128),
        )?;
        let ny = tr.code.outputs();
        let mut values = vec![UNREACHABLE; (stages + 1) * states];
        let mut argmin = vec![0u32; stages * states];
        values[stages * states] = 0;
        let mut input_cost = vec![0u32; inputs];
        for t in (0..stages).rev() {
            let (yr, ur) = (received.y_or_zero(t), received.u_or_zero(t));
            for (i, c) in input_cost.iter_mut().enumerate() {
                *c = hamming_distance(tr.input(i), ur) as u32;
            }
            let (head, tail) = values.split_at_mut((t + 1) * states);
            let later = &tail[..states];
            let here = &mut head[t * states..];
            for s in 0..states {
                let mut best = UNREACHABLE;
                let mut arg = 0u32;
                let base = s * inputs;
                for i in 0..inputs {
                    let v = later[tr.next[base + i] as usize];
                    if v == UNREACHABLE {
                        continue;
                    }
                    let y = &tr.out[(base + i) * ny..(base + i + 1) * ny];
                    let total = v + input_cost[i] + hamming_distance(y, yr) as u32;
                    if total < best {
                        best = total;
                        arg = i as u32;
                    }
                }
                here[s] = best;
                argmin[t * states + s] = arg;
            }
        }
        values.truncate(stages * states);
        Ok(ValueTable {
            states,
            values,
            argmin,
        })
    }

    /// Globally nearest codeword of length `T + kappa_max + 1`.
    pub fn decode(&self, received: &SymbolSeq) -> Result<DecodeResult> {
        let tr = &self.trellis;
        let table = self.value_table(received)?;
        let mut path = Vec::with_capacity(table.stages());
        let mut s = 0usize;
        for t in 0..table.stages() {
            let i = table.argmin(t, s);
            path.push(i);
            s = tr.next(s, i);
        }
        debug_assert_eq!(s, 0);
        let codeword = tr.codeword(&path);
        let c = cost(received, &codeword);
        debug_assert_eq!(Some(c as u32), table.value(0, 0));
        Ok(DecodeResult {
            cost: c,
            frame_cost: frame_cost(received, &codeword, received.len() - 1),
            u_seq: codeword.inputs_list(),
            codeword,
            tau: tr.code.kappa_max(),
            tie_events: Vec::new(),
            per_step_costs: Vec::new(),
        })
    }
}

/// One-shot exact decode.
pub fn exact_decode(code: &ConvCode, received: &SymbolSeq, budget: Budget) -> Result<DecodeResult> {
    ExactDecoder::new(code, budget)?.decode(received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv_system::fixtures::{f2_code, f5_code};
    use crate::gf_linalg::{next_lex, Field};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(f: Field, ny: usize, k: usize, rows: &[&[u32]]) -> SymbolSeq {
        let symbols: Vec<Vec<u32>> = rows.iter().map(|r| r.to_vec()).collect();
        SymbolSeq::from_symbols(f, ny, k, &symbols).unwrap()
    }

    /// Minimum distance from `received` to any codeword of length
    /// `T + 1 + kappa_max`, by enumerating every input sequence.
    fn brute_min_cost(code: &ConvCode, received: &SymbolSeq) -> usize {
        let len = received.len() + code.kappa_max();
        let mut flat = vec![0u32; len * code.k()];
        let mut best = usize::MAX;
        loop {
            let inputs: Vec<Vec<u32>> = flat.chunks(code.k()).map(<[u32]>::to_vec).collect();
            let (c, end) = code.encode(&inputs, None).unwrap();
            if end.iter().all(|&v| v == 0) {
                best = best.min(cost(received, &c));
            }
            if !next_lex(code.field(), &mut flat) {
                return best;
            }
        }
    }

    #[test]
    fn cost_examples() {
        let f = Field::new(2).unwrap();
        let a = seq(f, 2, 2, &[&[1, 1, 0, 1], &[0, 0, 1, 0]]);
        assert_eq!(cost(&a, &a), 0);
        let zero = SymbolSeq::zeros(f, 2, 2, 1);
        assert_eq!(cost(&a, &zero), 4);
        assert_eq!(cost(&zero, &a), 4);
        let w = seq(f, 2, 2, &[&[1, 1, 0, 1], &[0, 0, 0, 0]]);
        let c = seq(f, 2, 2, &[&[1, 1, 0, 1], &[0, 0, 1, 0]]);
        assert_eq!(cost(&w, &c), 1);
    }

    #[test]
    fn horizon_params_validation() {
        assert!(HorizonParams::new(2, 1).is_ok());
        assert!(HorizonParams::new(2, 3).is_err());
        assert!(HorizonParams::new(0, 0).is_err());
        assert!(HorizonParams::new(3, 1).unwrap().check_frame(1).is_err());
        assert!(HorizonParams::new(2, 1).unwrap().check_frame(1).is_ok());
    }

    #[test]
    fn appendix_window_step() {
        let code = f2_code();
        let f = code.field();
        let dec = RecedingHorizonDecoder::new(&code, HorizonParams::new(2, 1).unwrap(), Budget::default())
            .unwrap();
        // received symbols t+1, t+2 stored at positions 0, 1 with the step at 0
        let received = seq(f, 2, 2, &[&[0, 0, 0, 0], &[1, 0, 0, 0]]);
        let z = dec.window_vector(&[1, 0], &received, 0);
        assert_eq!(z, vec![1, 1, 0, 1, 0, 0, 0, 0]);
        let step = dec.window_step(&[1, 0], &received, 0).unwrap();
        assert_eq!(step.inputs, vec![vec![1, 0]]);
        assert_eq!((step.error_weight, step.ties), (1, 1));

        let dec1 = RecedingHorizonDecoder::new(&code, HorizonParams::new(1, 1).unwrap(), Budget::default())
            .unwrap();
        let step = dec1.window_step(&[1, 0], &received, 0).unwrap();
        assert_eq!(step.ties, 2);
        // the lexicographically smallest error (0, 0, 1, 0) gives u = (1, 0)
        assert_eq!(step.inputs, vec![vec![1, 0]]);
    }

    #[test]
    fn codewords_decode_to_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for code in [f5_code(), f2_code()] {
            for (big_n, l) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
                let params = HorizonParams::new(big_n, l).unwrap();
                let dec = RecedingHorizonDecoder::new(&code, params, Budget::default()).unwrap();
                for _ in 0..20 {
                    let len = rng.gen_range(3..10);
                    let inputs: Vec<Vec<u32>> = (0..len)
                        .map(|_| (0..code.k()).map(|_| rng.gen_range(0..code.field().order())).collect())
                        .collect();
                    let c = code.encode_terminated(&inputs).unwrap();
                    let out = dec.decode(&c).unwrap();
                    assert_eq!(out.codeword, c);
                    assert_eq!(out.cost, 0);
                    assert!(out.per_step_costs.iter().all(|&w| w == 0));
                    assert!(out.tie_events.is_empty());
                }
            }
        }
    }

    #[test]
    fn f5_single_errors_are_corrected() {
        let code = f5_code();
        let f = code.field();
        let dec = RecedingHorizonDecoder::new(&code, HorizonParams::new(2, 1).unwrap(), Budget::default())
            .unwrap();
        let exact = ExactDecoder::new(&code, Budget::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let inputs: Vec<Vec<u32>> = (0..5).map(|_| vec![rng.gen_range(0..5), rng.gen_range(0..5)]).collect();
            let c = code.encode_terminated(&inputs).unwrap();
            for pos in 0..c.as_flat().len() {
                for val in 1..5 {
                    let mut r = c.clone();
                    let (t, j) = (pos / 3, pos % 3);
                    r.symbol_mut(t)[j] = f.add(r.symbol(t)[j], val);
                    let out = dec.decode(&r).unwrap();
                    assert_eq!(out.codeword.padded(c.len()), c.padded(out.codeword.len()));
                    assert_eq!(exact.decode(&r).unwrap().cost, 1);
                }
            }
        }
    }

    #[test]
    fn exact_decoder_examples() {
        for code in [f5_code(), f2_code()] {
            let f = code.field();
            let exact = ExactDecoder::new(&code, Budget::default()).unwrap();
            let zero = SymbolSeq::zeros(f, code.outputs(), code.k(), 4);
            let out = exact.decode(&zero).unwrap();
            assert_eq!(out.cost, 0);
            assert_eq!(out.codeword.weight(), 0);

            let c = code.encode_terminated(&[vec![1, 0], vec![0, 1]]).unwrap();
            let out = exact.decode(&c).unwrap();
            assert_eq!(out.cost, 0);
            assert_eq!(out.codeword.padded(out.codeword.len()), c.padded(out.codeword.len()));
        }
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let code = f2_code();
        for t_last in 0..=6 {
            let exact = ExactDecoder::new(&code, Budget::default()).unwrap();
            for _ in 0..3 {
                let r = SymbolSeq::random(code.field(), 2, 2, t_last + 1, &mut rng);
                let out = exact.decode(&r).unwrap();
                assert!(code.is_codeword(&out.codeword));
                assert_eq!(out.cost, brute_min_cost(&code, &r));
            }
        }
        let code = f5_code();
        for t_last in 0..=2 {
            let r = SymbolSeq::random(code.field(), 1, 2, t_last + 1, &mut rng);
            let out = exact_decode(&code, &r, Budget::default()).unwrap();
            assert_eq!(out.cost, brute_min_cost(&code, &r));
        }
    }

    #[test]
    fn cost_bound_examples() {
        let code = f2_code();
        let wc = WindowCode::build(&code, 1, Budget::default()).unwrap();
        assert_eq!(wc.covering_radius().unwrap(), 1);
        assert_eq!(cost_bound(&wc, 4, 1).unwrap(), 4);
        assert_eq!(cost_bound(&wc, 10, 3).unwrap(), 4);
        assert!(cost_bound(&wc, 4, 0).is_err());
    }

    #[test]
    fn rejects_mismatched_received_words() {
        let code = f2_code();
        let dec = RecedingHorizonDecoder::new(&code, HorizonParams::new(2, 1).unwrap(), Budget::default())
            .unwrap();
        let f5 = Field::new(5).unwrap();
        assert!(matches!(
            dec.decode(&SymbolSeq::zeros(f5, 2, 2, 3)),
            Err(Error::FieldMismatch { .. })
        ));
        assert!(matches!(
            dec.decode(&SymbolSeq::zeros(code.field(), 1, 2, 3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            dec.decode(&SymbolSeq::zeros(code.field(), 2, 2, 1)),
            Err(Error::InvalidParams(_))
        ));
    }

    fn decode_case() -> impl Strategy<Value = (bool, usize, usize, usize, u64)> {
        (any::<bool>(), 1usize..=3, 1usize..=3, 3usize..=12, any::<u64>())
            .prop_filter("L <= N", |(_, n, l, _, _)| l <= n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn decoder_invariants((binary, big_n, l, t_last, seed) in decode_case()) {
            let code = if binary { f2_code() } else { f5_code() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = SymbolSeq::random(code.field(), code.outputs(), code.k(), t_last + 1, &mut rng);
            let params = HorizonParams::new(big_n, l).unwrap();
            let dec = RecedingHorizonDecoder::new(&code, params, Budget::default()).unwrap();
            let out = dec.decode(&r).unwrap();
            prop_assert!(code.is_codeword(&out.codeword));
            prop_assert!(out.tau <= code.kappa_max());
            prop_assert_eq!(out.codeword.len(), t_last + 1 + out.tau);
            prop_assert_eq!(out.cost, cost(&r, &out.codeword));
            prop_assert!(out.frame_cost <= cost_bound(dec.window_code(), t_last, l).unwrap());
            prop_assert_eq!(out.per_step_costs.len(), (t_last + 1).div_ceil(l));
            prop_assert_eq!(&dec.clone().without_tables().decode(&r).unwrap(), &out);
            let exact = exact_decode(&code, &r, Budget::default()).unwrap();
            prop_assert!(exact.cost <= out.cost);
            prop_assert_eq!(dec.decode(&r).unwrap(), out);
        }
    }
}
