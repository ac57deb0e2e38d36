//! Partitioned BCH codes: additive encoding that masks stuck-at defects and
//! bounded-distance decoding that corrects channel errors.
//!
//! An [n, k, l] code splits the cyclic code generated by `g̃` (degree r,
//! n = k + l + r) into a data subcode C1 = <g> with deg g = l + r and a mask
//! subcode C0 = <g0>, C1 ∩ C0 = {0}. A codeword is c = G1 m + G0 d; the mask
//! word d is solved per-write so that c agrees with the stuck cells, and the
//! receiver corrects up to t = r/10 (for n = 1023) random errors before
//! projecting back to the message.

use crate::bch::{bch_generator, BchDecoder, BchError, BinaryPolynomial, FieldContext};
use crate::gf2::{solve, Gf2Matrix, Gf2Vector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PbchError {
    #[error("invalid dimensions n={n}, k={k}, l={l}: need k >= 1 and k + l <= n")]
    InvalidDimensions { n: usize, k: usize, l: usize },
    #[error("field supports length {field_n}, code was asked for n={n}")]
    LengthDisagreesWithField { n: usize, field_n: usize },
    #[error("no BCH generator of degree exactly {r} exists at length {n}")]
    RedundancyNotRealizable { n: usize, r: usize },
    #[error("no product of unused coset polynomials has degree {l} at length {n}")]
    MaskNotRealizable { n: usize, l: usize },
    #[error(transparent)]
    Field(#[from] BchError),
    #[error("message length {got}, expected {expected}")]
    MessageLength { expected: usize, got: usize },
    #[error("defect vector length {got}, expected {expected}")]
    DefectLength { expected: usize, got: usize },
    #[error("received word length {got}, expected {expected}")]
    ReceivedLength { expected: usize, got: usize },
    #[error("vector length {left} does not match defect vector length {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Per-cell write behavior: healthy, or stuck at a fixed value regardless of
/// what is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Normal,
    Stuck0,
    Stuck1,
}

/// Defect side information for one codeword-length block of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectVector {
    states: Vec<CellState>,
}

impl DefectVector {
    pub fn all_normal(len: usize) -> Self {
        Self { states: vec![CellState::Normal; len] }
    }

    pub fn from_states(states: Vec<CellState>) -> Self {
        Self { states }
    }

    /// Stuck-at-1 cells at `positions`, everything else healthy. This is the
    /// shape a flash pre-read produces.
    pub fn from_stuck_ones(len: usize, positions: &[usize]) -> Self {
        let mut s = Self::all_normal(len);
        for &p in positions {
            assert!(p < len, "defect position {p} out of range {len}");
            s.states[p] = CellState::Stuck1;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> CellState {
        self.states[i]
    }

    pub fn set(&mut self, i: usize, state: CellState) {
        self.states[i] = state;
    }

    /// The value a defective cell will hold, `None` for healthy cells.
    pub fn stuck_bit(&self, i: usize) -> Option<bool> {
        match self.states[i] {
            CellState::Normal => None,
            CellState::Stuck0 => Some(false),
            CellState::Stuck1 => Some(true),
        }
    }

    pub fn defect_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| !matches!(s, CellState::Normal))
            .map(|(i, _)| i)
    }

    pub fn defect_count(&self) -> usize {
        self.defect_positions().count()
    }
}

/// The write operator of the stuck-at channel: defective cells hold their
/// stuck value, healthy cells take the written bit.
pub fn circ(x: &Gf2Vector, s_plus: &DefectVector) -> Result<Gf2Vector, PbchError> {
    if x.len() != s_plus.len() {
        return Err(PbchError::LengthMismatch { left: x.len(), right: s_plus.len() });
    }
    let mut out = x.clone();
    for u in s_plus.defect_positions() {
        out.set(u, s_plus.stuck_bit(u).expect("defect position"));
    }
    Ok(out)
}

/// Number of cells where the stuck value disagrees with the intended bit,
/// i.e. the weight of `circ(c, s) - c`.
pub fn defect_error_count(c: &Gf2Vector, s_plus: &DefectVector) -> Result<usize, PbchError> {
    if c.len() != s_plus.len() {
        return Err(PbchError::LengthMismatch { left: c.len(), right: s_plus.len() });
    }
    Ok(s_plus
        .defect_positions()
        .filter(|&u| s_plus.stuck_bit(u) != Some(c.get(u)))
        .count())
}

/// Result of one masked encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeOutcome {
    pub codeword: Gf2Vector,
    /// The solved mask word d (length l).
    pub mask_word: Gf2Vector,
    /// Defects the mask could not absorb; equals `‖codeword ∘ s⁺ − codeword‖`.
    pub unmasked_count: usize,
}

/// An [n, k, l] partitioned BCH code over GF(2^m), n = 2^m - 1.
pub struct PbchCode {
    ctx: FieldContext,
    n: usize,
    k: usize,
    l: usize,
    r: usize,
    t_correct: usize,
    g_tilde: BinaryPolynomial,
    g: BinaryPolynomial,
    g0: BinaryPolynomial,
    /// k rows, row i = x^i g. Data codeword c1 = m^T (this matrix).
    g1_rows: Gf2Matrix,
    /// l rows, row j = x^j g0. Mask codeword c0 = d^T (this matrix).
    g0_rows: Gf2Matrix,
    /// n x l transpose of `g0_rows`; row u is the defect equation at cell u.
    g0_cols: Gf2Matrix,
    /// r x n parity check of <g̃>: column j holds x^j mod g̃.
    h_tilde_t: Gf2Matrix,
    /// n x k message recovery map: m = ĉ^T (this matrix).
    g1_inv: Gf2Matrix,
    decoder: BchDecoder,
}

/// Reduced row echelon form together with the row-operations matrix:
/// returns (pivot columns, ops) with ops * input == rref.
fn rref_with_ops(input: &Gf2Matrix) -> (Vec<usize>, Gf2Matrix) {
    let mut e = input.clone();
    let mut ops = Gf2Matrix::identity(input.rows());
    let mut pivot_cols = Vec::new();
    let mut next = 0usize;
    for col in 0..input.cols() {
        let Some(p) = (next..e.rows()).find(|&rr| e.get(rr, col)) else {
            continue;
        };
        e.swap_rows(p, next);
        ops.swap_rows(p, next);
        for rr in 0..e.rows() {
            if rr != next && e.get(rr, col) {
                e.xor_row_into(next, rr);
                ops.xor_row_into(next, rr);
            }
        }
        pivot_cols.push(col);
        next += 1;
        if next == e.rows() {
            break;
        }
    }
    (pivot_cols, ops)
}

/// Lexicographically first subset of `degrees` (by index) summing to
/// `target`, if any.
fn lex_first_subset_sum(degrees: &[usize], target: usize) -> Option<Vec<usize>> {
    fn go(degrees: &[usize], start: usize, target: usize, acc: &mut Vec<usize>) -> bool {
        if target == 0 {
            return true;
        }
        for i in start..degrees.len() {
            if degrees[i] <= target {
                acc.push(i);
                if go(degrees, i + 1, target - degrees[i], acc) {
                    return true;
                }
                acc.pop();
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(degrees, 0, target, &mut acc).then_some(acc)
}

/// Narrow-sense generator whose degree is exactly `deg`, with its correction
/// radius, found by walking t upward. None if the degree is skipped.
fn prefix_generator_of_degree(
    ctx: &FieldContext,
    deg: usize,
) -> Result<Option<(usize, BinaryPolynomial)>, BchError> {
    let mut t = 0;
    loop {
        if 2 * t + 1 > ctx.n() {
            return Ok(None);
        }
        let g = bch_generator(ctx, t)?;
        let d = g.degree().unwrap_or(0);
        match d.cmp(&deg) {
            std::cmp::Ordering::Equal => return Ok(Some((t, g))),
            std::cmp::Ordering::Greater => return Ok(None),
            std::cmp::Ordering::Less => t += 1,
        }
    }
}

impl PbchCode {
    /// Builds the code, picking g̃ as the narrow-sense generator of degree
    /// r = n - k - l, the data generator g = g̃·h0 of degree l + r, and the
    /// mask generator g0 = g̃·(x^n + 1)/g. h0 is the matching narrow-sense
    /// prefix when one lands on degree l + r (always true for the n = 1023
    /// family, where degrees move in steps of 10); otherwise the first
    /// degree-l product of unused coset polynomials in coset order. All
    /// algebraic identities are checked before returning.
    pub fn construct(n: usize, k: usize, l: usize, ctx: FieldContext) -> Result<Self, PbchError> {
        if ctx.n() != n {
            return Err(PbchError::LengthDisagreesWithField { n, field_n: ctx.n() });
        }
        if k == 0 || k + l > n {
            return Err(PbchError::InvalidDimensions { n, k, l });
        }
        let r = n - k - l;
        let x_n_1 = BinaryPolynomial::from_exponents(&[n, 0]);

        let (t_correct, g_tilde) = prefix_generator_of_degree(&ctx, r)?
            .ok_or(PbchError::RedundancyNotRealizable { n, r })?;

        let g = match prefix_generator_of_degree(&ctx, l + r)? {
            Some((_, cand)) if g_tilde.divides(&cand) => cand,
            _ => {
                // Assemble h0 from cosets g̃ does not already use.
                let mut reps = Vec::new();
                let mut polys = Vec::new();
                let mut seen = vec![false; n];
                for j in 0..n {
                    if seen[j] {
                        continue;
                    }
                    let coset = crate::bch::cyclotomic_coset(n, j);
                    for &e in &coset {
                        seen[e] = true;
                    }
                    let mp = crate::bch::minimal_polynomial(&ctx, &coset);
                    if !mp.divides(&g_tilde) {
                        reps.push(mp.degree().expect("nonconstant"));
                        polys.push(mp);
                    }
                }
                let picks = lex_first_subset_sum(&reps, l)
                    .ok_or(PbchError::MaskNotRealizable { n, l })?;
                let mut g = g_tilde.clone();
                for i in picks {
                    g = g.mul(&polys[i]);
                }
                g
            }
        };
        assert_eq!(g.degree(), Some(l + r));
        assert!(g.divides(&x_n_1), "data generator must divide x^n + 1");

        let (h1, rem) = x_n_1.div_rem(&g).expect("nonzero divisor");
        assert!(rem.is_zero());
        let g0 = g_tilde.mul(&h1);

        // Row bases for the data and mask subcodes. Degrees are such that no
        // shift wraps past x^(n-1).
        let mut g1_rows = Gf2Matrix::zeros(k, n);
        for i in 0..k {
            let row = BinaryPolynomial::x_pow(i).mul(&g).to_vector(n).expect("fits");
            g1_rows.set_row(i, &row);
        }
        let mut g0_rows = Gf2Matrix::zeros(l, n);
        for j in 0..l {
            let row = BinaryPolynomial::x_pow(j).mul(&g0).to_vector(n).expect("fits");
            g0_rows.set_row(j, &row);
        }
        let g0_cols = g0_rows.transpose();

        let mut h_tilde_t = Gf2Matrix::zeros(r, n);
        if r > 0 {
            let x = BinaryPolynomial::x_pow(1);
            let mut rem = BinaryPolynomial::one();
            for j in 0..n {
                for i in rem.support() {
                    h_tilde_t.set(i, j, true);
                }
                rem = x.mul(&rem).div_rem(&g_tilde).expect("nonzero").1;
            }
        }

        // Message recovery: run the combined basis to reduced echelon form
        // while tracking ops. For a codeword c, the coefficient of basis row
        // i is c at the i-th pivot column, so scattering the first k bits of
        // each ops row to its pivot position gives the map c -> m.
        let mut basis = Gf2Matrix::zeros(k + l, n);
        for i in 0..k {
            basis.set_row(i, &g1_rows.row_vec(i));
        }
        for j in 0..l {
            basis.set_row(k + j, &g0_rows.row_vec(j));
        }
        let (pivot_cols, ops) = rref_with_ops(&basis);
        assert_eq!(pivot_cols.len(), k + l, "subcodes must intersect trivially");
        let mut g1_inv = Gf2Matrix::zeros(n, k);
        for (i, &c) in pivot_cols.iter().enumerate() {
            g1_inv.set_row(c, &ops.row_vec(i).truncated(k));
        }

        let decoder = BchDecoder::new(&ctx, t_correct)?;
        let code = Self {
            ctx,
            n,
            k,
            l,
            r,
            t_correct,
            g_tilde,
            g,
            g0,
            g1_rows,
            g0_rows,
            g0_cols,
            h_tilde_t,
            g1_inv,
            decoder,
        };
        code.verify_identities();
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Random-error correction radius of the overall code.
    pub fn t_correct(&self) -> usize {
        self.t_correct
    }

    pub fn generator(&self) -> &BinaryPolynomial {
        &self.g
    }

    pub fn overall_generator(&self) -> &BinaryPolynomial {
        &self.g_tilde
    }

    pub fn mask_generator(&self) -> &BinaryPolynomial {
        &self.g0
    }

    /// k x n data basis; row i is x^i g.
    pub fn data_rows(&self) -> &Gf2Matrix {
        &self.g1_rows
    }

    /// l x n mask basis; row j is x^j g0.
    pub fn mask_rows(&self) -> &Gf2Matrix {
        &self.g0_rows
    }

    /// r x n parity check of the overall code.
    pub fn parity_check_t(&self) -> &Gf2Matrix {
        &self.h_tilde_t
    }

    /// n x k recovery map; m = ĉ^T G̃₁.
    pub fn message_inverse(&self) -> &Gf2Matrix {
        &self.g1_inv
    }

    /// Panics if any construction identity fails: parity annihilation
    /// H̃ᵀ[G₁ G₀] = 0, recovery G̃₁ᵀG₁ = I and G̃₁ᵀG₀ = 0, full combined rank,
    /// and the generator divisibility chain.
    pub fn verify_identities(&self) {
        let x_n_1 = BinaryPolynomial::from_exponents(&[self.n, 0]);
        assert!(self.g_tilde.divides(&self.g));
        assert!(self.g_tilde.divides(&self.g0));
        assert!(self.g.divides(&x_n_1));
        assert!(self.g0.divides(&x_n_1));
        assert_eq!(
            BinaryPolynomial::lcm(&self.g, &self.g0),
            x_n_1,
            "subcodes must span the overall code pairwise-disjointly"
        );

        let mut basis = Gf2Matrix::zeros(self.k + self.l, self.n);
        for i in 0..self.k {
            basis.set_row(i, &self.g1_rows.row_vec(i));
        }
        for j in 0..self.l {
            basis.set_row(self.k + j, &self.g0_rows.row_vec(j));
        }
        assert_eq!(basis.rank(), self.k + self.l);

        for i in 0..self.k + self.l {
            let syn = self.h_tilde_t.mat_vec_mul(&basis.row_vec(i)).expect("dims");
            assert!(syn.is_zero(), "basis row {i} escapes the overall code");
        }

        let proj = basis.mat_mul(&self.g1_inv).expect("dims");
        for i in 0..self.k + self.l {
            for j in 0..self.k {
                assert_eq!(proj.get(i, j), i == j, "recovery map wrong at ({i},{j})");
            }
        }
    }

    /// Two-step masked encoding: form the data codeword, then solve for the
    /// mask word on the defect positions. Inconsistent defect equations are
    /// dropped; each dropped equation is one cell that will hold the wrong
    /// bit.
    pub fn encode(
        &self,
        message: &Gf2Vector,
        s_plus: &DefectVector,
    ) -> Result<EncodeOutcome, PbchError> {
        if message.len() != self.k {
            return Err(PbchError::MessageLength { expected: self.k, got: message.len() });
        }
        if s_plus.len() != self.n {
            return Err(PbchError::DefectLength { expected: self.n, got: s_plus.len() });
        }
        let c1 = self.g1_rows.mul_left(message).expect("dims");
        let defects: Vec<usize> = s_plus.defect_positions().collect();
        if defects.is_empty() {
            return Ok(EncodeOutcome {
                codeword: c1,
                mask_word: Gf2Vector::zeros(self.l),
                unmasked_count: 0,
            });
        }

        let mut system = Gf2Matrix::zeros(defects.len(), self.l);
        let mut rhs = Gf2Vector::zeros(defects.len());
        for (row, &u) in defects.iter().enumerate() {
            system.set_row(row, &self.g0_cols.row_vec(u));
            let stuck = s_plus.stuck_bit(u).expect("defect position");
            rhs.set(row, stuck ^ c1.get(u));
        }
        let solved = solve(&system, &rhs).expect("dims");

        let mut codeword = self.g0_rows.mul_left(&solved.solution).expect("dims");
        codeword ^= &c1;
        let unmasked_count = solved.dropped_rows.len();
        debug_assert_eq!(
            unmasked_count,
            defect_error_count(&codeword, s_plus).expect("lengths"),
        );
        Ok(EncodeOutcome { codeword, mask_word: solved.solution, unmasked_count })
    }

    /// Bounded-distance decode then message recovery. `None` when the error
    /// pattern falls outside the correction radius.
    pub fn decode(&self, received: &Gf2Vector) -> Result<Option<Gf2Vector>, PbchError> {
        if received.len() != self.n {
            return Err(PbchError::ReceivedLength { expected: self.n, got: received.len() });
        }
        let Some(error_positions) = self.decoder.decode(&self.ctx, received)? else {
            return Ok(None);
        };
        let mut corrected = received.clone();
        for p in error_positions {
            corrected.flip(p);
        }
        Ok(Some(self.g1_inv.mul_left(&corrected).expect("dims")))
    }
}
