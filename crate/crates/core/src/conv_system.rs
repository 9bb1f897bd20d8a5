//! Convolutional codes as minimal linear systems over `GF(p)`.
//!
//! ```text
//! x_{t+1} = A x_t + B u_t,   x_0 = 0
//! y_t     = C x_t + D u_t
//! ```
//!
//! A codeword is a finite sequence of symbols `c_t = (y_t; u_t)` whose input
//! sequence brings the state back to zero at the end. The polynomial view
//! `G(z) = (P(z); Q(z))` uses the delay convention of the transfer function
//! `C (zI - A)^{-1} B + D`: a polynomial `c(z)` of degree `g` corresponds to
//! the symbol sequence `c_t = [z^{g - t}] c(z)`, i.e. highest power first.

use crate::gf_linalg::{next_lex, weight, FMatrix, FPolyMatrix, Field};
use crate::{checked_pow, Error, Result};

/// Zero-return searches enumerate at most this many affine solutions before
/// settling for the particular solution.
const ZERO_RETURN_ENUMERATION_CAP: u128 = 1 << 20;

/// A validated minimal realization `(A, B, C, D)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCode {
    a: FMatrix,
    b: FMatrix,
    c: FMatrix,
    d: FMatrix,
    field: Field,
    n: usize,
    k: usize,
    delta: usize,
    kappa: Vec<usize>,
}

impl ConvCode {
    /// Validates dimensions, controllability of `(A, B)` and observability
    /// of `(A, C)`.
    pub fn new(a: FMatrix, b: FMatrix, c: FMatrix, d: FMatrix) -> Result<Self> {
        let field = a.field();
        for m in [&b, &c, &d] {
            if m.field() != field {
                return Err(Error::FieldMismatch {
                    expected: field.order(),
                    found: m.field().order(),
                });
            }
        }
        let delta = a.rows();
        if a.cols() != delta {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let k = d.cols();
        let outputs = d.rows();
        if k == 0 || outputs == 0 {
            return Err(Error::Dimension(format!(
                "need n > k >= 1, D is {}x{}",
                d.rows(),
                d.cols()
            )));
        }
        if (b.rows(), b.cols()) != (delta, k) {
            return Err(Error::Dimension(format!(
                "B must be {delta}x{k}, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        if (c.rows(), c.cols()) != (outputs, delta) {
            return Err(Error::Dimension(format!(
                "C must be {outputs}x{delta}, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }

        let kappa = controllability_indices_of(&a, &b);
        let reach: usize = kappa.iter().sum();
        if reach != delta {
            return Err(Error::NotControllable {
                rank: reach,
                expected: delta,
            });
        }
        let obs_rank = observability_matrix(&a, &c, delta).rank();
        if obs_rank != delta {
            return Err(Error::NotObservable {
                rank: obs_rank,
                expected: delta,
            });
        }

        Ok(Self {
            n: outputs + k,
            k,
            delta,
            kappa,
            a,
            b,
            c,
            d,
            field,
        })
    }

    /// Convenience constructor from integer rows.
    pub fn from_rows<R: AsRef<[i64]>>(
        field: Field,
        a: &[R],
        b: &[R],
        c: &[R],
        d: &[R],
        delta: usize,
    ) -> Result<Self> {
        let k = d.first().map_or(0, |r| r.as_ref().len());
        let shaped = |rows: &[R], r: usize, cols: usize| -> Result<FMatrix> {
            if rows.is_empty() {
                Ok(FMatrix::zeros(field, r, cols))
            } else {
                FMatrix::from_rows(field, rows)
            }
        };
        let a = shaped(a, delta, delta)?;
        let b = shaped(b, delta, k)?;
        let c = shaped(c, d.len(), delta)?;
        let d = FMatrix::from_rows(field, d)?;
        Self::new(a, b, c, d)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Code length (symbols per time step).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Input dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of output (parity) symbols per time step, `n - k`.
    pub fn outputs(&self) -> usize {
        self.n - self.k
    }

    /// Complexity: the state dimension of the realization.
    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn a(&self) -> &FMatrix {
        &self.a
    }

    pub fn b(&self) -> &FMatrix {
        &self.b
    }

    pub fn c(&self) -> &FMatrix {
        &self.c
    }

    pub fn d(&self) -> &FMatrix {
        &self.d
    }

    /// Controllability indices, sorted descending, one per input.
    pub fn controllability_indices(&self) -> &[usize] {
        &self.kappa
    }

    pub fn kappa_min(&self) -> usize {
        *self.kappa.last().expect("k >= 1")
    }

    pub fn kappa_max(&self) -> usize {
        self.kappa[0]
    }

    /// One system step from state `x` with input `u`: returns `(y, x_next)`.
    pub fn step(&self, x: &[u32], u: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let f = self.field;
        let mut y = vec![0; self.outputs()];
        let mut tmp = vec![0; self.outputs()];
        self.c.mul_vec_into(x, &mut y);
        self.d.mul_vec_into(u, &mut tmp);
        for (a, b) in y.iter_mut().zip(&tmp) {
            *a = f.add(*a, *b);
        }
        let mut next = vec![0; self.delta];
        let mut tmp = vec![0; self.delta];
        self.a.mul_vec_into(x, &mut next);
        self.b.mul_vec_into(u, &mut tmp);
        for (a, b) in next.iter_mut().zip(&tmp) {
            *a = f.add(*a, *b);
        }
        (y, next)
    }

    fn check_state(&self, x: &[u32]) -> Result<()> {
        if x.len() != self.delta {
            return Err(Error::Dimension(format!(
                "state has length {}, expected {}",
                x.len(),
                self.delta
            )));
        }
        Ok(())
    }

    /// Runs the system over `inputs` from `x0` (zero when `None`).
    ///
    /// Returns the symbol sequence and the state after the last input.
    pub fn encode(&self, inputs: &[Vec<u32>], x0: Option<&[u32]>) -> Result<(SymbolSeq, Vec<u32>)> {
        let mut x = match x0 {
            Some(x0) => {
                self.check_state(x0)?;
                x0.iter().map(|&v| v % self.field.order()).collect()
            }
            None => vec![0; self.delta],
        };
        let mut seq = SymbolSeq::empty(self.field, self.outputs(), self.k);
        for (t, u) in inputs.iter().enumerate() {
            if u.len() != self.k {
                return Err(Error::Dimension(format!(
                    "input {t} has length {}, expected {}",
                    u.len(),
                    self.k
                )));
            }
            let u: Vec<u32> = u.iter().map(|&v| v % self.field.order()).collect();
            let (y, next) = self.step(&x, &u);
            seq.push(&y, &u);
            x = next;
        }
        Ok((seq, x))
    }

    /// Shortest input sequence steering `x` to the zero state.
    ///
    /// Among the shortest sequences the one of least Hamming weight is
    /// returned, ties going to the lexicographically smallest stacked input.
    /// The length never exceeds `kappa_max`. When the solution space is too
    /// large to enumerate (more than 2^20 candidates) the deterministic
    /// particular solution of the linear system is returned instead.
    pub fn zero_return_extension(&self, x: &[u32]) -> Result<Vec<Vec<u32>>> {
        self.check_state(x)?;
        let f = self.field;
        if x.iter().all(|&v| v == 0) {
            return Ok(Vec::new());
        }
        // A^tau x + [A^{tau-1}B ... AB B] (u_0; ...; u_{tau-1}) = 0
        let mut a_pow = self.a.clone();
        let mut blocks = vec![self.b.clone()];
        for tau in 1..=self.delta.max(1) {
            let mut steer = FMatrix::zeros(f, self.delta, tau * self.k);
            for (i, blk) in blocks.iter().enumerate() {
                // blocks[i] = A^i B multiplies u_{tau-1-i}
                steer.set_block(0, (tau - 1 - i) * self.k, blk);
            }
            let target = f.neg_vec(&a_pow.mul_vec(x)?);
            if let Some(sol) = steer.solve_affine(&target)? {
                let stacked = best_affine_point(f, &sol.particular, &sol.kernel);
                return Ok(stacked.chunks(self.k).map(<[u32]>::to_vec).collect());
            }
            a_pow = self.a.mul(&a_pow)?;
            let next = self.a.mul(blocks.last().expect("non-empty"))?;
            blocks.push(next);
        }
        unreachable!("a controllable pair reaches zero within delta steps")
    }

    /// Input sequence of `inputs` followed by its zero-return extension,
    /// encoded from the zero state. The result is always a codeword.
    pub fn encode_terminated(&self, inputs: &[Vec<u32>]) -> Result<SymbolSeq> {
        let (mut seq, x) = self.encode(inputs, None)?;
        let tail = self.zero_return_extension(&x)?;
        let (tail_seq, _) = self.encode(&tail, Some(&x))?;
        seq.extend(&tail_seq);
        Ok(seq)
    }

    /// Codeword membership by re-encoding: the inputs of `c` run from the
    /// zero state must reproduce its outputs and end in the zero state.
    pub fn is_codeword(&self, c: &SymbolSeq) -> bool {
        if !self.compatible(c) {
            return false;
        }
        let mut x = vec![0; self.delta];
        for t in 0..c.len() {
            let (y, next) = self.step(&x, c.u(t));
            if y != c.y(t) {
                return false;
            }
            x = next;
        }
        x.iter().all(|&v| v == 0)
    }

    /// Codeword membership through the kernel description: `c` is a codeword
    /// iff `M (y_0..y_g, u_0..u_g) = 0` for the matrix of
    /// [`membership_matrix`](Self::membership_matrix).
    pub fn is_codeword_by_kernel(&self, c: &SymbolSeq) -> bool {
        if !self.compatible(c) {
            return false;
        }
        if c.is_empty() {
            return true;
        }
        let m = self.membership_matrix(c.len() - 1);
        let mut v = Vec::with_capacity(c.len() * self.n);
        for t in 0..c.len() {
            v.extend_from_slice(c.y(t));
        }
        for t in 0..c.len() {
            v.extend_from_slice(c.u(t));
        }
        m.mul_vec(&v).expect("sized by construction").iter().all(|&s| s == 0)
    }

    fn compatible(&self, c: &SymbolSeq) -> bool {
        c.field() == self.field && c.outputs() == self.outputs() && c.inputs() == self.k
    }

    /// Kernel matrix for sequences of length `gamma + 1`:
    ///
    /// ```text
    /// [ 0 | A^g B  A^{g-1} B  ...  B ]
    /// [   | D                         ]
    /// [-I | CB     D                  ]
    /// [   | ...         ...           ]
    /// [   | CA^{g-1}B   ...    CB   D ]
    /// ```
    ///
    /// acting on `(y_0, ..., y_g, u_0, ..., u_g)`. The first block row is the
    /// zero-return condition.
    pub fn membership_matrix(&self, gamma: usize) -> FMatrix {
        let f = self.field;
        let len = gamma + 1;
        let (ny, k) = (self.outputs(), self.k);
        let mut m = FMatrix::zeros(f, self.delta + len * ny, len * self.n);
        let markov = self.markov_parameters(len);
        let mut a_pow_b = self.b.clone();
        for j in (0..len).rev() {
            m.set_block(0, len * ny + j * k, &a_pow_b);
            a_pow_b = self.a.mul(&a_pow_b).expect("square");
        }
        let neg_id = FMatrix::identity(f, len * ny).neg();
        m.set_block(self.delta, 0, &neg_id);
        for t in 0..len {
            for j in 0..=t {
                m.set_block(self.delta + t * ny, len * ny + j * k, &markov[t - j]);
            }
        }
        m
    }

    /// `[D, CB, CAB, ..., CA^{count-2}B]`.
    pub fn markov_parameters(&self, count: usize) -> Vec<FMatrix> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut a_pow_b = self.b.clone();
        for _ in 1..count {
            out.push(self.c.mul(&a_pow_b).expect("conforming"));
            a_pow_b = self.a.mul(&a_pow_b).expect("square");
        }
        out
    }

    /// Checks that `P(z) Q(z)^{-1}` equals the transfer function
    /// `C (zI - A)^{-1} B + D`, i.e.
    /// `det(zI - A) P = (C adj(zI - A) B + det(zI - A) D) Q`.
    pub fn verify_realization(&self, gen: &PolyGenerator) -> Result<bool> {
        if gen.field() != self.field {
            return Err(Error::FieldMismatch {
                expected: self.field.order(),
                found: gen.field().order(),
            });
        }
        if gen.n() != self.n || gen.k() != self.k {
            return Err(Error::Dimension(format!(
                "generator is {}x{}, code has n = {}, k = {}",
                gen.n(),
                gen.k(),
                self.n,
                self.k
            )));
        }
        let (p, q) = gen.split()?;
        let pencil = FPolyMatrix::resolvent_pencil(&self.a)?;
        let chi = pencil.det()?;
        let lhs = p.scale(&chi);
        let c = FPolyMatrix::from_matrix(&self.c);
        let b = FPolyMatrix::from_matrix(&self.b);
        let strictly_proper = c.mul(&pencil.adjugate()?)?.mul(&b)?;
        let numerator = strictly_proper.add(&FPolyMatrix::from_matrix(&self.d).scale(&chi))?;
        let rhs = numerator.mul(&q)?;
        Ok(lhs == rhs)
    }
}

/// Minimum-weight, then lexicographically smallest, point of
/// `particular + span(kernel)`.
fn best_affine_point(field: Field, particular: &[u32], kernel: &FMatrix) -> Vec<u32> {
    let dim = kernel.cols();
    if checked_pow(field.order() as u64, dim) > ZERO_RETURN_ENUMERATION_CAP {
        return particular.to_vec();
    }
    let mut coeffs = vec![0; dim];
    let mut best = particular.to_vec();
    let mut best_w = weight(&best);
    let mut cand = vec![0; particular.len()];
    while next_lex(field, &mut coeffs) {
        cand.copy_from_slice(particular);
        for (j, &s) in coeffs.iter().enumerate() {
            field.axpy(&mut cand, s, &kernel.column(j));
        }
        let w = weight(&cand);
        if w < best_w || (w == best_w && cand < best) {
            best_w = w;
            best.copy_from_slice(&cand);
        }
    }
    best
}

/// Standard controllability indices: scan the columns of
/// `[B, AB, A^2 B, ...]` in order, keep those independent of the columns
/// kept so far; `kappa_i` counts the kept columns of the form `A^j b_i`.
fn controllability_indices_of(a: &FMatrix, b: &FMatrix) -> Vec<usize> {
    let field = a.field();
    let delta = a.rows();
    let k = b.cols();
    let mut kappa = vec![0; k];
    let mut active = vec![true; k];
    let mut kept: Option<FMatrix> = None;
    let mut rank = 0;
    let mut a_pow_b = b.clone();
    for _ in 0..delta {
        for i in 0..k {
            if !active[i] || rank == delta {
                continue;
            }
            let col = FMatrix::column_vector(field, &a_pow_b.column(i));
            let trial = match &kept {
                Some(m) => m.hstack(&col).expect("same rows"),
                None => col,
            };
            if trial.rank() > rank {
                rank += 1;
                kappa[i] += 1;
                kept = Some(trial);
            } else {
                // once A^j b_i depends on earlier columns, so do all A^{j'} b_i
                active[i] = false;
            }
        }
        a_pow_b = a.mul(&a_pow_b).expect("square");
    }
    kappa.sort_unstable_by(|x, y| y.cmp(x));
    kappa
}

fn observability_matrix(a: &FMatrix, c: &FMatrix, steps: usize) -> FMatrix {
    let mut out = FMatrix::zeros(a.field(), 0, a.cols());
    let mut c_a_pow = c.clone();
    for _ in 0..steps {
        out = out.vstack(&c_a_pow).expect("same cols");
        c_a_pow = c_a_pow.mul(a).expect("conforming");
    }
    out
}

/// Finite sequence of code symbols `c_t = (y_t; u_t)`, stored flat.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolSeq {
    field: Field,
    outputs: usize,
    inputs: usize,
    data: Vec<u32>,
}

impl SymbolSeq {
    pub fn empty(field: Field, outputs: usize, inputs: usize) -> Self {
        Self {
            field,
            outputs,
            inputs,
            data: Vec::new(),
        }
    }

    pub fn zeros(field: Field, outputs: usize, inputs: usize, len: usize) -> Self {
        Self {
            field,
            outputs,
            inputs,
            data: vec![0; len * (outputs + inputs)],
        }
    }

    /// Builds from whole symbols, each `(y; u)` of length `outputs + inputs`.
    pub fn from_symbols(
        field: Field,
        outputs: usize,
        inputs: usize,
        symbols: &[Vec<u32>],
    ) -> Result<Self> {
        let n = outputs + inputs;
        let mut data = Vec::with_capacity(symbols.len() * n);
        for (t, s) in symbols.iter().enumerate() {
            if s.len() != n {
                return Err(Error::Dimension(format!(
                    "symbol {t} has length {}, expected {n}",
                    s.len()
                )));
            }
            data.extend(s.iter().map(|&v| v % field.order()));
        }
        Ok(Self {
            field,
            outputs,
            inputs,
            data,
        })
    }

    /// Builds from matching lists of outputs and inputs.
    pub fn from_parts(field: Field, y: &[Vec<u32>], u: &[Vec<u32>]) -> Result<Self> {
        if y.len() != u.len() {
            return Err(Error::Dimension(format!(
                "{} outputs but {} inputs",
                y.len(),
                u.len()
            )));
        }
        let outputs = y.first().map_or(0, Vec::len);
        let inputs = u.first().map_or(0, Vec::len);
        let symbols: Vec<Vec<u32>> = y
            .iter()
            .zip(u)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Self::from_symbols(field, outputs, inputs, &symbols)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// `n - k`.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// `k`.
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Symbol length `n`.
    pub fn n(&self) -> usize {
        self.outputs + self.inputs
    }

    /// Number of symbols, `T + 1`.
    pub fn len(&self) -> usize {
        self.data.len() / self.n()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn symbol(&self, t: usize) -> &[u32] {
        let n = self.n();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn symbol_mut(&mut self, t: usize) -> &mut [u32] {
        let n = self.n();
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn y(&self, t: usize) -> &[u32] {
        &self.symbol(t)[..self.outputs]
    }

    pub fn u(&self, t: usize) -> &[u32] {
        &self.symbol(t)[self.outputs..]
    }

    /// Output at `t`, or zeros past the end.
    pub fn y_or_zero(&self, t: usize) -> &[u32] {
        if t < self.len() {
            self.y(t)
        } else {
            &ZEROS[..self.outputs]
        }
    }

    /// Input at `t`, or zeros past the end.
    pub fn u_or_zero(&self, t: usize) -> &[u32] {
        if t < self.len() {
            self.u(t)
        } else {
            &ZEROS[..self.inputs]
        }
    }

    pub fn inputs_list(&self) -> Vec<Vec<u32>> {
        (0..self.len()).map(|t| self.u(t).to_vec()).collect()
    }

    pub fn outputs_list(&self) -> Vec<Vec<u32>> {
        (0..self.len()).map(|t| self.y(t).to_vec()).collect()
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.data
    }

    pub fn push(&mut self, y: &[u32], u: &[u32]) {
        debug_assert_eq!(y.len(), self.outputs);
        debug_assert_eq!(u.len(), self.inputs);
        self.data.extend_from_slice(y);
        self.data.extend_from_slice(u);
    }

    pub fn extend(&mut self, other: &SymbolSeq) {
        debug_assert_eq!(self.n(), other.n());
        self.data.extend_from_slice(&other.data);
    }

    pub fn truncate(&mut self, len: usize) {
        self.data.truncate(len * self.n());
    }

    /// Copy padded with zero symbols to `len` (never shortened).
    pub fn padded(&self, len: usize) -> Self {
        let mut out = self.clone();
        if len > self.len() {
            out.data.resize(len * self.n(), 0);
        }
        out
    }

    /// Total Hamming weight.
    pub fn weight(&self) -> usize {
        weight(&self.data)
    }

    /// Symbol-wise sum; the shorter operand is zero-padded.
    pub fn add(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        let (a, b) = (self.padded(len), other.padded(len));
        Self {
            data: self.field.add_vec(&a.data, &b.data),
            ..self.clone()
        }
    }

    /// Symbol-wise difference; the shorter operand is zero-padded.
    pub fn sub(&self, other: &Self) -> Self {
        let len = self.len().max(other.len());
        let (a, b) = (self.padded(len), other.padded(len));
        Self {
            data: self.field.sub_vec(&a.data, &b.data),
            ..self.clone()
        }
    }

    /// Random sequence of `len` uniform symbols (testing helper).
    pub fn random<R: rand::Rng>(
        field: Field,
        outputs: usize,
        inputs: usize,
        len: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..len * (outputs + inputs))
            .map(|_| rng.gen_range(0..field.order()))
            .collect();
        Self {
            field,
            outputs,
            inputs,
            data,
        }
    }
}

static ZEROS: [u32; 256] = [0; 256];

/// Polynomial generator `G(z)` with the row order that maps it onto the
/// stacked `(y; u)` symbol layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyGenerator {
    g: FPolyMatrix,
    outputs: usize,
    /// Row `i` of the stacked `(P; Q)` is row `row_permutation[i]` of `g`.
    row_permutation: Vec<usize>,
}

impl PolyGenerator {
    /// `g` is `n x k`; the first `n - k` permuted rows form `P`, the
    /// remaining `k` form `Q`. `None` means the identity order.
    pub fn new(g: FPolyMatrix, row_permutation: Option<Vec<usize>>) -> Result<Self> {
        let (n, k) = (g.rows(), g.cols());
        if k == 0 || n <= k {
            return Err(Error::Dimension(format!(
                "generator must be n x k with n > k >= 1, got {n}x{k}"
            )));
        }
        let row_permutation = row_permutation.unwrap_or_else(|| (0..n).collect());
        // validates the permutation
        let permuted = g.permute_rows(&row_permutation)?;
        let gen = Self {
            g,
            outputs: n - k,
            row_permutation,
        };
        if !has_full_column_rank(&permuted)? {
            return Err(Error::InvalidParams(
                "generator does not have full column rank".into(),
            ));
        }
        Ok(gen)
    }

    pub fn field(&self) -> Field {
        self.g.field()
    }

    pub fn n(&self) -> usize {
        self.g.rows()
    }

    pub fn k(&self) -> usize {
        self.g.cols()
    }

    pub fn matrix(&self) -> &FPolyMatrix {
        &self.g
    }

    pub fn row_permutation(&self) -> &[usize] {
        &self.row_permutation
    }

    /// `(P, Q)` after applying the row permutation.
    pub fn split(&self) -> Result<(FPolyMatrix, FPolyMatrix)> {
        let permuted = self.g.permute_rows(&self.row_permutation)?;
        Ok((
            permuted.row_block(0, self.outputs),
            permuted.row_block(self.outputs, self.k()),
        ))
    }

    /// `G(z) v(z)` in permuted `(y; u)` order, as the time sequence of
    /// coefficients from the highest power down to `z^0`.
    pub fn codeword_of(&self, message: &[Vec<i64>]) -> Result<SymbolSeq> {
        let f = self.field();
        if message.len() != self.k() {
            return Err(Error::Dimension(format!(
                "message has {} entries, expected {}",
                message.len(),
                self.k()
            )));
        }
        let v = FPolyMatrix::from_coeff_rows(f, &message.iter().map(|c| vec![c.clone()]).collect::<Vec<_>>())?;
        let permuted = self.g.permute_rows(&self.row_permutation)?;
        let gv = permuted.mul(&v)?;
        let degree = (0..self.n())
            .filter_map(|r| gv.get(r, 0).degree())
            .max()
            .unwrap_or(0);
        let symbols: Vec<Vec<u32>> = (0..=degree)
            .map(|t| (0..self.n()).map(|r| gv.get(r, 0).coeff(degree - t)).collect())
            .collect();
        SymbolSeq::from_symbols(f, self.outputs, self.k(), &symbols)
    }
}

/// Full column rank over the rational function field: some `k x k` minor has
/// a nonzero determinant.
fn has_full_column_rank(g: &FPolyMatrix) -> Result<bool> {
    let (n, k) = (g.rows(), g.cols());
    let mut rows: Vec<usize> = (0..k).collect();
    loop {
        let mut minor = FPolyMatrix::zeros(g.field(), k, k);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..k {
                minor.set(i, c, g.get(r, c).clone());
            }
        }
        if !minor.det()?.is_zero() {
            return Ok(true);
        }
        // next k-subset of 0..n in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| rows[i] < n - k + i) else {
            return Ok(false);
        };
        rows[i] += 1;
        for j in i + 1..k {
            rows[j] = rows[j - 1] + 1;
        }
    }
}

#[cfg(test)]
/// All `p^len` vectors of length `len` in lexicographic order.
pub(crate) fn all_vectors(field: Field, len: usize) -> impl Iterator<Item = Vec<u32>> {
    let count = field.order().pow(len as u32) as usize;
    (0..count).map(move |i| crate::gf_linalg::lex_vector(field, i, len))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The GF(5) code with realization ((0), (1, 2), (4), (1, 3)).
    pub fn f5_code() -> ConvCode {
        let f = Field::new(5).unwrap();
        ConvCode::from_rows(f, &[vec![0]], &[vec![1, 2]], &[vec![4]], &[vec![1, 3]], 1).unwrap()
    }

    /// Its generator `(1, 4 + z; 3, z; 1, 0)`.
    pub fn f5_generator() -> PolyGenerator {
        let f = Field::new(5).unwrap();
        let g = FPolyMatrix::from_coeff_rows(
            f,
            &[
                vec![vec![1], vec![4, 1]],
                vec![vec![3], vec![0, 1]],
                vec![vec![1], vec![]],
            ],
        )
        .unwrap();
        PolyGenerator::new(g, None).unwrap()
    }

    /// The binary code with A = I, B = C = D = (0 1; 1 1).
    pub fn f2_code() -> ConvCode {
        let f = Field::new(2).unwrap();
        let m = vec![vec![0, 1], vec![1, 1]];
        ConvCode::from_rows(f, &[vec![1, 0], vec![0, 1]], &m, &m, &m, 2).unwrap()
    }

    /// `P = CB + D (z + 1)`, `Q = (z + 1) I` for [`f2_code`].
    pub fn f2_generator() -> PolyGenerator {
        let f = Field::new(2).unwrap();
        let g = FPolyMatrix::from_coeff_rows(
            f,
            &[
                vec![vec![1], vec![0, 1]],
                vec![vec![0, 1], vec![1, 1]],
                vec![vec![1, 1], vec![]],
                vec![vec![], vec![1, 1]],
            ],
        )
        .unwrap();
        PolyGenerator::new(g, None).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constructs_bundled_codes() {
        let c = f5_code();
        assert_eq!((c.n(), c.k(), c.delta()), (3, 2, 1));
        assert_eq!(c.controllability_indices(), &[1, 0]);
        assert_eq!((c.kappa_min(), c.kappa_max()), (0, 1));

        let c = f2_code();
        assert_eq!((c.n(), c.k(), c.delta()), (4, 2, 2));
        assert_eq!(c.controllability_indices(), &[1, 1]);
    }

    #[test]
    fn rejects_uncontrollable_and_unobservable() {
        let f = Field::new(5).unwrap();
        let err = ConvCode::from_rows(f, &[vec![0]], &[vec![0, 0]], &[vec![4]], &[vec![1, 3]], 1);
        assert_eq!(err, Err(Error::NotControllable { rank: 0, expected: 1 }));
        let err = ConvCode::from_rows(f, &[vec![0]], &[vec![1, 2]], &[vec![0]], &[vec![1, 3]], 1);
        assert_eq!(err, Err(Error::NotObservable { rank: 0, expected: 1 }));
        let err = ConvCode::from_rows(f, &[vec![0]], &[vec![1]], &[vec![4]], &[vec![1, 3]], 1);
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn memoryless_code_is_valid() {
        let f = Field::new(3).unwrap();
        let empty: [Vec<i64>; 0] = [];
        let c = ConvCode::from_rows(f, &empty, &empty, &empty, &[vec![1, 2]], 0).unwrap();
        assert_eq!((c.n(), c.k(), c.delta()), (3, 2, 0));
        assert_eq!(c.controllability_indices(), &[0, 0]);
        assert!(c.zero_return_extension(&[]).unwrap().is_empty());
    }

    #[test]
    fn indices_all_one_when_b_spans() {
        let f = Field::new(3).unwrap();
        let c = ConvCode::from_rows(
            f,
            &[vec![1, 2], vec![0, 1]],
            &[vec![1, 0], vec![0, 1]],
            &[vec![1, 1]],
            &[vec![2, 1]],
            2,
        )
        .unwrap();
        assert_eq!(c.controllability_indices(), &[1, 1]);
    }

    #[test]
    fn encode_examples() {
        let c = f5_code();
        let (seq, x) = c.encode(&vec![vec![0, 0]; 4], None).unwrap();
        assert_eq!(seq.weight(), 0);
        assert_eq!(x, vec![0]);

        let (seq, x) = c.encode(&[vec![1, 0]], None).unwrap();
        assert_eq!(seq.y(0), &[1]);
        assert_eq!(x, vec![1]);

        let c = f2_code();
        let (seq, x) = c.encode(&[vec![1, 0]], Some(&[1, 0])).unwrap();
        assert_eq!(seq.y(0), &[0, 0]);
        assert_eq!(x, vec![1, 1]);

        assert!(matches!(c.encode(&[vec![1]], None), Err(Error::Dimension(_))));
        assert!(matches!(c.encode(&[], Some(&[1])), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_return_examples() {
        let c = f5_code();
        assert!(c.zero_return_extension(&[0]).unwrap().is_empty());
        // brute force over all 25 single-step inputs
        let best = all_vectors(c.field(), 2)
            .filter(|u| c.step(&[1], u).1 == vec![0])
            .min_by_key(|u| (weight(u), u.clone()))
            .unwrap();
        assert_eq!(best, vec![0, 0]);
        assert_eq!(c.zero_return_extension(&[1]).unwrap(), vec![vec![0, 0]]);

        let c = f2_code();
        let best: Vec<_> = all_vectors(c.field(), 2)
            .filter(|u| c.step(&[1, 1], u).1 == vec![0, 0])
            .collect();
        assert_eq!(best, vec![vec![0, 1]]);
        assert_eq!(c.zero_return_extension(&[1, 1]).unwrap(), vec![vec![0, 1]]);
    }

    /// Reference: breadth-first over input sequences of growing length.
    fn zero_return_brute(c: &ConvCode, x: &[u32]) -> Vec<Vec<u32>> {
        for tau in 0..=c.delta() {
            let mut best: Option<Vec<u32>> = None;
            for stacked in all_vectors(c.field(), tau * c.k()) {
                let inputs: Vec<Vec<u32>> = stacked.chunks(c.k().max(1)).map(<[u32]>::to_vec).collect();
                let (_, end) = c.encode(&inputs, Some(x)).unwrap();
                if end.iter().all(|&v| v == 0) {
                    let better = match &best {
                        None => true,
                        Some(b) => (weight(&stacked), &stacked) < (weight(b), b),
                    };
                    if better {
                        best = Some(stacked);
                    }
                }
            }
            if let Some(b) = best {
                return b.chunks(c.k()).map(<[u32]>::to_vec).collect();
            }
        }
        unreachable!()
    }

    #[test]
    fn zero_return_sweep_matches_brute_force() {
        for c in [f5_code(), f2_code()] {
            for x in all_vectors(c.field(), c.delta()) {
                let ext = c.zero_return_extension(&x).unwrap();
                assert!(ext.len() <= c.kappa_max());
                assert_eq!(ext, zero_return_brute(&c, &x), "state {x:?}");
            }
        }
    }

    #[test]
    fn membership_examples() {
        let c = f2_code();
        let zero = SymbolSeq::zeros(c.field(), 2, 2, 5);
        assert!(c.is_codeword(&zero));
        assert!(c.is_codeword_by_kernel(&zero));

        let word = c.encode_terminated(&[vec![1, 0]]).unwrap();
        assert!(c.is_codeword(&word));
        assert!(c.is_codeword_by_kernel(&word));
        assert_eq!(word.len(), 2);
        assert_eq!(word.u(1), &[1, 0]);

        let mut cut = word.clone();
        cut.truncate(1);
        assert!(!c.is_codeword(&cut));
        assert!(!c.is_codeword_by_kernel(&cut));
    }

    #[test]
    fn realization_matches_generators() {
        assert!(f5_code().verify_realization(&f5_generator()).unwrap());
        assert!(f2_code().verify_realization(&f2_generator()).unwrap());

        // perturbed P entry
        let f = Field::new(5).unwrap();
        let g = FPolyMatrix::from_coeff_rows(
            f,
            &[
                vec![vec![2], vec![4, 1]],
                vec![vec![3], vec![0, 1]],
                vec![vec![1], vec![]],
            ],
        )
        .unwrap();
        let bad = PolyGenerator::new(g.clone(), None).unwrap();
        assert!(!f5_code().verify_realization(&bad).unwrap());

        // the generator rows listed in a different order, with the order
        // restored by the permutation
        let shuffled = g.permute_rows(&[1, 2, 0]).unwrap();
        let good = f5_generator().matrix().permute_rows(&[1, 2, 0]).unwrap();
        let gen = PolyGenerator::new(good, Some(vec![2, 0, 1])).unwrap();
        assert!(f5_code().verify_realization(&gen).unwrap());
        let gen = PolyGenerator::new(shuffled, Some(vec![2, 0, 1])).unwrap();
        assert!(!f5_code().verify_realization(&gen).unwrap());
    }

    #[test]
    fn constant_transfer_function() {
        let f = Field::new(5).unwrap();
        let empty: [Vec<i64>; 0] = [];
        let c = ConvCode::from_rows(f, &empty, &empty, &empty, &[vec![2, 3]], 0).unwrap();
        let g = FPolyMatrix::from_coeff_rows(
            f,
            &[
                vec![vec![2], vec![3]],
                vec![vec![1], vec![]],
                vec![vec![], vec![1]],
            ],
        )
        .unwrap();
        assert!(c.verify_realization(&PolyGenerator::new(g, None).unwrap()).unwrap());
    }

    #[test]
    fn realization_dimension_mismatch() {
        assert!(matches!(
            f2_code().verify_realization(&f5_generator()),
            Err(Error::FieldMismatch { .. })
        ));
    }

    #[test]
    fn kernel_and_operational_membership_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in [f5_code(), f2_code()] {
            for _ in 0..500 {
                let len = rng.gen_range(1..7);
                let seq = if rng.gen_bool(0.5) {
                    let inputs: Vec<Vec<u32>> = (0..len)
                        .map(|_| (0..c.k()).map(|_| rng.gen_range(0..c.field().order())).collect())
                        .collect();
                    c.encode_terminated(&inputs).unwrap()
                } else {
                    SymbolSeq::random(c.field(), c.outputs(), c.k(), len, &mut rng)
                };
                assert_eq!(c.is_codeword(&seq), c.is_codeword_by_kernel(&seq));
            }
        }
    }

    fn message(p: u32, k: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
        prop::collection::vec(prop::collection::vec(0..p as i64, 0..=4), k)
    }

    proptest! {
        #[test]
        fn encode_is_linear(
            u1 in prop::collection::vec(prop::collection::vec(0u32..5, 2), 0..8),
            seed in any::<u64>(),
        ) {
            let c = f5_code();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u2: Vec<Vec<u32>> = u1.iter().map(|_| vec![rng.gen_range(0..5), rng.gen_range(0..5)]).collect();
            let sum: Vec<Vec<u32>> = u1.iter().zip(&u2).map(|(a, b)| c.field().add_vec(a, b)).collect();
            let (s1, x1) = c.encode(&u1, None).unwrap();
            let (s2, x2) = c.encode(&u2, None).unwrap();
            let (s, x) = c.encode(&sum, None).unwrap();
            prop_assert_eq!(s, s1.add(&s2));
            prop_assert_eq!(x, c.field().add_vec(&x1, &x2));
        }

        #[test]
        fn terminated_encodings_are_codewords(
            inputs in prop::collection::vec(prop::collection::vec(0u32..2, 2), 0..8),
        ) {
            let c = f2_code();
            let word = c.encode_terminated(&inputs).unwrap();
            prop_assert!(c.is_codeword(&word));
            prop_assert!(c.is_codeword_by_kernel(&word));
            prop_assert!(word.len() <= inputs.len() + c.kappa_max());
        }

        #[test]
        fn generator_images_are_codewords_f5(v in message(5, 2)) {
            let (c, g) = (f5_code(), f5_generator());
            let word = g.codeword_of(&v).unwrap();
            let padded = word.padded(word.len() + c.kappa_max());
            let (reenc, end) = c.encode(&padded.inputs_list(), None).unwrap();
            prop_assert_eq!(reenc.outputs_list(), padded.outputs_list());
            prop_assert!(end.iter().all(|&x| x == 0));
            prop_assert!(c.is_codeword(&word));
        }

        #[test]
        fn generator_images_are_codewords_f2(v in message(2, 2)) {
            let (c, g) = (f2_code(), f2_generator());
            let word = g.codeword_of(&v).unwrap();
            let padded = word.padded(word.len() + c.kappa_max());
            let (reenc, end) = c.encode(&padded.inputs_list(), None).unwrap();
            prop_assert_eq!(reenc.outputs_list(), padded.outputs_list());
            prop_assert!(end.iter().all(|&x| x == 0));
        }
    }
}
