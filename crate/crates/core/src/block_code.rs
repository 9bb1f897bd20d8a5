//! Systematic linear block codes and the window codes `C_N` of a
//! convolutional code.
//!
//! A [`BlockCode`] is generated by `(T; I_k)` and checked by `(-I | T)`. Its
//! syndrome table maps every syndrome to the lexicographically smallest
//! minimum-weight vector of the coset together with the number of
//! minimum-weight vectors in that coset, so decoding reports ties instead of
//! silently picking one.
//!
//! The window code `C_N` of a realization `(A, B, C, D)` stacks `N` time steps
//! in decreasing time order:
//!
//! ```text
//!       [ D  CB  CAB  ...  CA^{N-2}B ]
//! B_N = [ 0  D   CB   ...  CA^{N-3}B ]      u_{t,N} = (u_{t+N-1}, ..., u_t)
//!       [          ...          D    ]
//!       [          I_{Nk}            ]
//! ```
//!
//! so the oldest symbol `c_t` occupies output row block `N` and the last `k`
//! input positions. Index sets are reported 1-based.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::conv_system::ConvCode;
use crate::gf_linalg::{lex_index, weight, FMatrix, Field};
use crate::{checked_pow, Budget, Error, Result};

/// Syndrome lookup table built by a breadth-first sweep over error weights.
#[derive(Clone, Debug)]
pub struct SyndromeTable {
    n: usize,
    leaders: Vec<u32>,
    weights: Vec<u32>,
    ties: Vec<u64>,
}

impl SyndromeTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn leader(&self, idx: usize) -> &[u32] {
        &self.leaders[idx * self.n..(idx + 1) * self.n]
    }

    pub fn leader_weight(&self, idx: usize) -> usize {
        self.weights[idx] as usize
    }

    /// Number of minimum-weight vectors in the coset.
    pub fn ties(&self, idx: usize) -> u64 {
        self.ties[idx]
    }

    /// Largest coset-leader weight.
    pub fn covering_radius(&self) -> usize {
        self.weights.iter().copied().max().unwrap_or(0) as usize
    }
}

/// Result of a maximum-likelihood block decode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecode {
    pub codeword: Vec<u32>,
    /// `received - codeword`, the canonical coset leader.
    pub error: Vec<u32>,
    pub weight: usize,
    /// Number of codewords at the minimum distance (at least 1).
    pub ties: u64,
}

impl BlockDecode {
    /// Message part of the codeword (its last `k` entries).
    pub fn message(&self, k: usize) -> &[u32] {
        &self.codeword[self.codeword.len() - k..]
    }
}

/// Systematic linear code `{(T u; u)}` of length `n = rows(T) + k`.
#[derive(Debug)]
pub struct BlockCode {
    field: Field,
    n: usize,
    k: usize,
    top: FMatrix,
    generator: FMatrix,
    check: FMatrix,
    budget: Budget,
    table: OnceLock<SyndromeTable>,
    min_distance: OnceLock<usize>,
}

impl Clone for BlockCode {
    fn clone(&self) -> Self {
        Self {
            field: self.field,
            n: self.n,
            k: self.k,
            top: self.top.clone(),
            generator: self.generator.clone(),
            check: self.check.clone(),
            budget: self.budget,
            table: self.table.clone(),
            min_distance: self.min_distance.clone(),
        }
    }
}

impl BlockCode {
    /// Code generated by `(top; I_k)` where `k = cols(top)`.
    pub fn systematic(top: FMatrix, budget: Budget) -> Self {
        let field = top.field();
        let (r, k) = (top.rows(), top.cols());
        let generator = top
            .vstack(&FMatrix::identity(field, k))
            .expect("same column count");
        let check = FMatrix::identity(field, r)
            .neg()
            .hstack(&top)
            .expect("same row count");
        Self {
            field,
            n: r + k,
            k,
            top,
            generator,
            check,
            budget,
            table: OnceLock::new(),
            min_distance: OnceLock::new(),
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    /// Generator `(T; I)`, `n x k`.
    pub fn generator(&self) -> &FMatrix {
        &self.generator
    }

    /// Check matrix `(-I | T)`, `(n - k) x n`.
    pub fn check_matrix(&self) -> &FMatrix {
        &self.check
    }

    /// Parity part `T` of the generator.
    pub fn parity_part(&self) -> &FMatrix {
        &self.top
    }

    pub fn encode(&self, message: &[u32]) -> Result<Vec<u32>> {
        self.generator.mul_vec(message)
    }

    /// Syndrome index of `z` in the table. `z` must have length `n`.
    pub fn syndrome_index(&self, z: &[u32], scratch: &mut [u32]) -> usize {
        self.check.mul_vec_into(z, scratch);
        lex_index(self.field, scratch)
    }

    /// The syndrome table, built on first use.
    pub fn table(&self) -> Result<&SyndromeTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let t = self.build_table()?;
        let _ = self.table.set(t);
        Ok(self.table.get().expect("just set"))
    }

    fn build_table(&self) -> Result<SyndromeTable> {
        let f = self.field;
        let (n, r) = (self.n, self.redundancy());
        let cosets = checked_pow(f.order() as u64, r);
        self.budget.check("syndrome table", cosets * n as u128)?;
        let cosets = cosets as usize;

        let mut leaders = vec![0u32; cosets * n];
        let mut weights = vec![u32::MAX; cosets];
        let mut ties = vec![0u64; cosets];
        let mut filled = 0usize;
        let mut visited: u128 = 0;

        let cols: Vec<Vec<u32>> = (0..n).map(|j| self.check.column(j)).collect();
        let mut e = vec![0u32; n];
        let mut syn = vec![0u32; r];

        for w in 0..=n {
            let level = binomial(n, w) * checked_pow(f.order() as u64 - 1, w);
            visited = visited.saturating_add(level);
            self.budget.check("coset leader sweep", visited)?;

            for_each_weight_vector(f, n, w, &mut e, |e, support| {
                syn.iter_mut().for_each(|s| *s = 0);
                for &j in support {
                    f.axpy(&mut syn, e[j], &cols[j]);
                }
                let idx = lex_index(f, &syn);
                let slot = &mut leaders[idx * n..(idx + 1) * n];
                if weights[idx] == u32::MAX {
                    weights[idx] = w as u32;
                    ties[idx] = 1;
                    slot.copy_from_slice(e);
                    filled += 1;
                } else if weights[idx] == w as u32 {
                    ties[idx] += 1;
                    if e < &*slot {
                        slot.copy_from_slice(e);
                    }
                }
            });
            if filled == cosets {
                break;
            }
        }
        debug_assert_eq!(filled, cosets);
        Ok(SyndromeTable {
            n,
            leaders,
            weights,
            ties,
        })
    }

    /// Covering radius: the largest coset-leader weight.
    pub fn covering_radius(&self) -> Result<usize> {
        Ok(self.table()?.covering_radius())
    }

    /// Nearest codeword by syndrome lookup.
    pub fn ml_decode(&self, z: &[u32]) -> Result<BlockDecode> {
        if z.len() != self.n {
            return Err(Error::Dimension(format!(
                "received vector has length {}, code length is {}",
                z.len(),
                self.n
            )));
        }
        let table = self.table()?;
        let mut scratch = vec![0; self.redundancy()];
        let idx = self.syndrome_index(z, &mut scratch);
        let error = table.leader(idx).to_vec();
        Ok(BlockDecode {
            codeword: self.field.sub_vec(z, &error),
            weight: table.leader_weight(idx),
            ties: table.ties(idx),
            error,
        })
    }

    /// Every codeword at minimum distance from `z`, ordered by their error
    /// vectors `z - c` (lexicographically), so the first entry is the one
    /// [`ml_decode`](Self::ml_decode) returns.
    pub fn nearest_codewords(&self, z: &[u32]) -> Result<Vec<Vec<u32>>> {
        let best = self.ml_decode(z)?;
        let f = self.field;
        let mut scratch = vec![0; self.redundancy()];
        let target = self.syndrome_index(z, &mut scratch);
        let count = binomial(self.n, best.weight) * checked_pow(f.order() as u64 - 1, best.weight);
        self.budget.check("nearest codeword listing", count)?;
        let mut errors = Vec::new();
        let mut e = vec![0; self.n];
        for_each_weight_vector(f, self.n, best.weight, &mut e, |e, _| {
            if self.syndrome_index(e, &mut scratch) == target {
                errors.push(e.to_vec());
            }
        });
        errors.sort();
        Ok(errors.iter().map(|e| f.sub_vec(z, e)).collect())
    }

    /// Calls `visit(message, codeword)` for every codeword, messages in
    /// lexicographic order.
    pub fn for_each_codeword(&self, mut visit: impl FnMut(&[u32], &[u32])) -> Result<()> {
        let f = self.field;
        let total = checked_pow(f.order() as u64, self.k);
        self.budget.check("codeword enumeration", total)?;
        let r = self.redundancy();
        let cols: Vec<Vec<u32>> = (0..self.k).map(|j| self.top.column(j)).collect();
        let mut u = vec![0u32; self.k];
        let mut cw = vec![0u32; self.n];
        loop {
            visit(&u, &cw);
            // odometer on u, keeping cw = (T u; u) up to date; wrapping a digit
            // adds its column p times in total, which is zero
            let mut j = self.k;
            loop {
                if j == 0 {
                    return Ok(());
                }
                j -= 1;
                f.axpy(&mut cw[..r], 1, &cols[j]);
                u[j] += 1;
                if u[j] == f.order() {
                    u[j] = 0;
                    cw[r + j] = 0;
                } else {
                    cw[r + j] = u[j];
                    break;
                }
            }
        }
    }

    /// Exact minimum distance by enumerating all codewords.
    pub fn min_distance(&self) -> Result<usize> {
        if let Some(&d) = self.min_distance.get() {
            return Ok(d);
        }
        let mut d = usize::MAX;
        self.for_each_codeword(|u, c| {
            if u.iter().any(|&x| x != 0) {
                d = d.min(weight(c));
            }
        })?;
        // k >= 1 always gives a nonzero codeword
        let _ = self.min_distance.set(d);
        Ok(d)
    }

    /// Density statistics for this code's parameters.
    pub fn density_stats(&self) -> Result<DensityStats> {
        Ok(density_stats(self.n, self.k, self.min_distance()?, self.field))
    }
}

/// Calls `visit(e, support)` for every vector of Hamming weight `w`.
fn for_each_weight_vector(
    f: Field,
    n: usize,
    w: usize,
    e: &mut [u32],
    mut visit: impl FnMut(&[u32], &[usize]),
) {
    e.iter_mut().for_each(|x| *x = 0);
    if w > n {
        return;
    }
    let mut support: Vec<usize> = (0..w).collect();
    loop {
        for &j in &support {
            e[j] = 1;
        }
        // odometer over nonzero values on the support
        loop {
            visit(e, &support);
            let mut i = w;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                let j = support[i];
                if e[j] + 1 < f.order() {
                    e[j] += 1;
                    advanced = true;
                    break;
                }
                e[j] = 1;
            }
            if !advanced {
                break;
            }
        }
        for &j in &support {
            e[j] = 0;
        }
        // next w-subset of 0..n
        let Some(i) = (0..w).rev().find(|&i| support[i] < n - w + i) else {
            return;
        };
        support[i] += 1;
        for j in i + 1..w {
            support[j] = support[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn binomial_big(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Sphere-packing quantities of an `[n, k, d]` code over `GF(q)`, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityStats {
    /// Error-correction capacity `floor((d - 1) / 2)`.
    pub t: usize,
    /// `E_{k,t} = sum_{i<=t} C(k, i) (q - 1)^i`.
    pub e_kt: BigUint,
    /// Fraction of `F^n` inside the disjoint radius-`t` balls around codewords.
    pub density: BigRational,
    /// `1 - density`.
    pub p_outside: BigRational,
}

/// `sum_{i<=t} C(len, i) (q - 1)^i`, the size of a Hamming ball.
pub fn ball_size(len: usize, radius: usize, q: u32) -> BigUint {
    (0..=radius.min(len))
        .map(|i| binomial_big(len, i) * BigUint::from(q - 1).pow(i as u32))
        .sum()
}

/// Density of an `[n, k, d]` code: `ball(n, t) / q^(n - k)`.
pub fn density_stats(n: usize, k: usize, d: usize, field: Field) -> DensityStats {
    assert!(d >= 1 && k <= n, "need d >= 1 and k <= n");
    let q = field.order();
    let t = (d - 1) / 2;
    let ball = ball_size(n, t, q);
    let space = BigUint::from(q).pow((n - k) as u32);
    let density = BigRational::new(BigInt::from(ball), BigInt::from(space));
    DensityStats {
        t,
        e_kt: ball_size(k, t, q),
        p_outside: BigRational::one() - &density,
        density,
    }
}

/// Correction capability of a window code up to admissible errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Admissibility {
    /// 1-based positions committed by an `L`-step update.
    pub protected: Vec<usize>,
    /// Largest `d'` such that every nonzero codeword of weight `<= d'`
    /// vanishes on the protected positions.
    pub d_prime: usize,
    pub min_distance: usize,
    /// Whether `d' >= d_N - 1`.
    pub meets_distance_condition: bool,
}

impl Admissibility {
    /// Errors per window that are always corrected up to admissible errors.
    pub fn correctable(&self) -> usize {
        self.d_prime / 2
    }
}

/// The length-`N n` window code of a convolutional code.
#[derive(Clone, Debug)]
pub struct WindowCode {
    window: usize,
    code: ConvCode,
    block: BlockCode,
    observability: FMatrix,
}

impl WindowCode {
    /// Builds `C_N`. The syndrome table is built lazily on first decode.
    pub fn build(code: &ConvCode, window: usize, budget: Budget) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParams("window length N must be at least 1".into()));
        }
        let f = code.field();
        let (ny, k) = (code.outputs(), code.k());
        let markov = code.markov_parameters(window);
        let mut top = FMatrix::zeros(f, window * ny, window * k);
        for r in 0..window {
            for c in r..window {
                top.set_block(r * ny, c * k, &markov[c - r]);
            }
        }
        // rows C A^{N-1}, ..., CA, C
        let mut observability = FMatrix::zeros(f, window * ny, code.delta());
        let mut c_a_pow = code.c().clone();
        for i in (0..window).rev() {
            observability.set_block(i * ny, 0, &c_a_pow);
            c_a_pow = c_a_pow.mul(code.a())?;
        }
        let block = BlockCode::systematic(top, budget);
        debug_assert!(block.check_matrix().mul(block.generator())?.is_zero());
        Ok(Self {
            window,
            code: code.clone(),
            block,
            observability,
        })
    }

    /// Window length `N`.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn code(&self) -> &ConvCode {
        &self.code
    }

    pub fn block(&self) -> &BlockCode {
        &self.block
    }

    /// `B_N`.
    pub fn generator(&self) -> &FMatrix {
        self.block.generator()
    }

    /// `H_N = (-I | T_N)`.
    pub fn check_matrix(&self) -> &FMatrix {
        self.block.check_matrix()
    }

    /// `(C A^{N-1}; ...; CA; C)`, mapping the window's initial state to the
    /// free response of its outputs.
    pub fn observability(&self) -> &FMatrix {
        &self.observability
    }

    pub fn min_distance(&self) -> Result<usize> {
        self.block.min_distance()
    }

    pub fn covering_radius(&self) -> Result<usize> {
        self.block.covering_radius()
    }

    pub fn ml_decode(&self, z: &[u32]) -> Result<BlockDecode> {
        self.block.ml_decode(z)
    }

    /// 1-based positions of the symbols committed by an `L`-step update:
    /// the oldest `L` output blocks and the oldest `L` input blocks.
    pub fn protected_indices(&self, update: usize) -> Result<Vec<usize>> {
        self.check_update(update)?;
        let (ny, k, n) = (self.code.outputs(), self.code.k(), self.code.n());
        let big_n = self.window;
        let outputs = (big_n - update) * ny + 1..=big_n * ny;
        let inputs = big_n * n - update * k + 1..=big_n * n;
        Ok(outputs.chain(inputs).collect())
    }

    fn check_update(&self, update: usize) -> Result<()> {
        if update == 0 || update > self.window {
            return Err(Error::InvalidParams(format!(
                "update length L = {update} must satisfy 1 <= L <= N = {}",
                self.window
            )));
        }
        Ok(())
    }

    /// Largest `d'` for which decoding is exact on the committed positions,
    /// found by enumerating all codewords.
    pub fn admissible_capability(&self, update: usize) -> Result<Admissibility> {
        let protected = self.protected_indices(update)?;
        let mut mask = vec![false; self.block.n()];
        for &i in &protected {
            mask[i - 1] = true;
        }
        let mut min_touching = usize::MAX;
        self.block.for_each_codeword(|u, c| {
            if u.iter().any(|&x| x != 0)
                && c.iter().zip(&mask).any(|(&x, &m)| m && x != 0)
            {
                min_touching = min_touching.min(weight(c));
            }
        })?;
        let d_prime = if min_touching == usize::MAX {
            self.block.n()
        } else {
            min_touching - 1
        };
        let min_distance = self.min_distance()?;
        Ok(Admissibility {
            protected,
            d_prime,
            min_distance,
            meets_distance_condition: d_prime + 1 >= min_distance,
        })
    }

    pub fn density_stats(&self) -> Result<DensityStats> {
        self.block.density_stats()
    }
}

/// Upper bound on the probability of `M` equally good solutions that differ
/// over `delta` consecutive inputs:
///
/// ```text
/// density(C_1)^(M-1) / E_{k,t} * prod_{i=N}^{delta} (1 - density(C_i))
/// ```
///
/// with `t` the correction capacity of `C_1`.
pub fn multiplicity_bound(
    code: &ConvCode,
    window: usize,
    delta: usize,
    solutions: usize,
    budget: Budget,
) -> Result<BigRational> {
    if window == 0 || window > delta {
        return Err(Error::InvalidParams(format!(
            "need 1 <= N <= Delta, got N = {window}, Delta = {delta}"
        )));
    }
    if solutions < 2 {
        return Err(Error::InvalidParams(format!(
            "need M >= 2 solutions, got {solutions}"
        )));
    }
    let c1 = WindowCode::build(code, 1, budget)?.density_stats()?;
    let mut bound = num_traits::pow(c1.density.clone(), solutions - 1)
        / BigRational::from_integer(BigInt::from(c1.e_kt.clone()));
    for i in window..=delta {
        let stats = WindowCode::build(code, i, budget)?.density_stats()?;
        bound *= stats.p_outside;
    }
    Ok(bound)
}

/// Decimal approximation of an exact rational, for presentation only.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
