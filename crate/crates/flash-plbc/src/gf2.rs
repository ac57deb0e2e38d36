//! Bit-packed vectors and matrices over GF(2).
//!
//! Matrix-vector products, rank, and a deterministic solver for possibly
//! inconsistent systems. Vectors pack 64 bits per word; all operations keep
//! the unused tail bits of the last word zero so equality and weight can work
//! word-wise.

use std::fmt;
use std::ops::BitXorAssign;

use rand::Rng;
use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word of a length-`bits` vector.
#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => !0,
        rem => (1u64 << rem) - 1,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("{op}: dimension mismatch ({left} vs {right})")]
    DimensionMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
}

/// A length-`len` bit vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Vector {
    len: usize,
    words: Vec<u64>,
}

impl Gf2Vector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from 0/1 entries (any nonzero byte counts as 1).
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Uniformly random vector; draws one `u64` per word from `rng`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.random()).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    /// First `new_len` bits as a new vector. `new_len` must not exceed `len`.
    pub fn truncated(&self, new_len: usize) -> Gf2Vector {
        assert!(new_len <= self.len);
        let mut words = self.words[..words_for(new_len)].to_vec();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(new_len);
        }
        Gf2Vector {
            len: new_len,
            words,
        }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub(crate) fn xor_words(&mut self, other: &[u64]) {
        debug_assert_eq!(self.words.len(), other.len());
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= b;
        }
    }
}

impl BitXorAssign<&Gf2Vector> for Gf2Vector {
    fn bitxor_assign(&mut self, rhs: &Gf2Vector) {
        assert_eq!(self.len, rhs.len, "xor of mismatched vector lengths");
        self.xor_words(&rhs.words);
    }
}

impl fmt::Debug for Gf2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// Row-major bit matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    wpr: usize,
    words: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = words_for(cols);
        Self {
            rows,
            cols,
            wpr,
            words: vec![0; rows * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Stacks equal-length rows; at least one row is required to fix the
    /// column count.
    pub fn from_rows(rows: &[Gf2Vector]) -> Result<Self, Gf2Error> {
        let cols = rows
            .first()
            .map(Gf2Vector::len)
            .ok_or(Gf2Error::DimensionMismatch {
                op: "from_rows",
                left: 0,
                right: 0,
            })?;
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    op: "from_rows",
                    left: cols,
                    right: r.len(),
                });
            }
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Test helper: rows given as 0/1 byte slices.
    pub fn from_row_bits(rows: &[&[u8]]) -> Result<Self, Gf2Error> {
        let vecs: Vec<Gf2Vector> = rows.iter().map(|r| Gf2Vector::from_bits(r)).collect();
        Self::from_rows(&vecs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.words[r * self.wpr + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let mask = 1u64 << (c % WORD_BITS);
        let w = &mut self.words[r * self.wpr + c / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.wpr..(r + 1) * self.wpr]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.words[r * self.wpr..(r + 1) * self.wpr]
    }

    pub fn row_vec(&self, r: usize) -> Gf2Vector {
        Gf2Vector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn set_row(&mut self, r: usize, v: &Gf2Vector) {
        assert_eq!(v.len(), self.cols, "set_row length mismatch");
        self.row_words_mut(r).copy_from_slice(v.words());
    }

    /// XORs row `src` into row `dst`. No-op when `src == dst` would zero the
    /// row, so that case is rejected.
    pub(crate) fn xor_row_into(&mut self, src: usize, dst: usize) {
        assert!(src != dst && src < self.rows && dst < self.rows);
        let (a, b) = if src < dst {
            let (lo, hi) = self.words.split_at_mut(dst * self.wpr);
            (&lo[src * self.wpr..(src + 1) * self.wpr], &mut hi[..self.wpr])
        } else {
            let (lo, hi) = self.words.split_at_mut(src * self.wpr);
            (&hi[..self.wpr], &mut lo[dst * self.wpr..(dst + 1) * self.wpr])
        };
        for (d, s) in b.iter_mut().zip(a) {
            *d ^= s;
        }
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        assert!(a < self.rows && b < self.rows);
        if a == b {
            return;
        }
        let (a, b) = (a.min(b), a.max(b));
        let (lo, hi) = self.words.split_at_mut(b * self.wpr);
        lo[a * self.wpr..(a + 1) * self.wpr].swap_with_slice(&mut hi[..self.wpr]);
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            let row = self.row_vec(r);
            for c in row.ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `M * v` with `v.len() == cols`; bit `i` of the result is the parity of
    /// `row_i AND v`.
    pub fn mat_vec_mul(&self, v: &Gf2Vector) -> Result<Gf2Vector, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                op: "mat_vec_mul",
                left: self.cols,
                right: v.len(),
            });
        }
        let mut out = Gf2Vector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row_words(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() & 1 == 1 {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// `v^T * M` with `v.len() == rows`: the XOR of the rows selected by `v`.
    /// This is the cheap orientation for codeword assembly.
    pub fn mul_left(&self, v: &Gf2Vector) -> Result<Gf2Vector, Gf2Error> {
        if v.len() != self.rows {
            return Err(Gf2Error::DimensionMismatch {
                op: "mul_left",
                left: self.rows,
                right: v.len(),
            });
        }
        let mut out = Gf2Vector::zeros(self.cols);
        for r in v.ones() {
            out.xor_words(self.row_words(r));
        }
        Ok(out)
    }

    /// `self * other`.
    pub fn mat_mul(&self, other: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                op: "mat_mul",
                left: self.cols,
                right: other.rows,
            });
        }
        let mut out = Gf2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let row = self.row_vec(r);
            let mut acc = vec![0u64; out.wpr];
            for j in row.ones() {
                for (a, b) in acc.iter_mut().zip(other.row_words(j)) {
                    *a ^= b;
                }
            }
            out.row_words_mut(r).copy_from_slice(&acc);
        }
        Ok(out)
    }

    /// Rank by forward Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut basis: Vec<Gf2Vector> = Vec::new();
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            let mut r = self.row_vec(i);
            for (b, &c) in basis.iter().zip(cols.iter()) {
                if r.get(c) {
                    r ^= b;
                }
            }
            if let Some(c) = r.first_one() {
                basis.push(r);
                cols.push(c);
            }
        }
        basis.len()
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "{:?}", self.row_vec(r))?;
        }
        Ok(())
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// A solution with every free variable set to zero.
    pub solution: Gf2Vector,
    /// Rows that contributed a pivot, in processing (ascending) order.
    pub pivot_rows: Vec<usize>,
    /// Rows the returned solution violates. Empty iff the system is
    /// consistent.
    pub dropped_rows: Vec<usize>,
}

/// Solves `A x = b`, processing rows in ascending index order.
///
/// Each row is kept if it is consistent with the rows kept so far and dropped
/// otherwise, so when two rows conflict the later-indexed one is dropped. The
/// returned solution satisfies exactly the non-dropped rows; free variables
/// are zero, which makes the result deterministic.
pub fn solve(a: &Gf2Matrix, b: &Gf2Vector) -> Result<SolveResult, Gf2Error> {
    if b.len() != a.rows() {
        return Err(Gf2Error::DimensionMismatch {
            op: "solve",
            left: a.rows(),
            right: b.len(),
        });
    }
    // Gauss-Jordan: pivot rows are kept mutually reduced, so each ends up
    // containing its own pivot column plus free columns only.
    let mut piv_rows: Vec<Gf2Vector> = Vec::new();
    let mut piv_rhs: Vec<bool> = Vec::new();
    let mut piv_cols: Vec<usize> = Vec::new();
    let mut pivot_rows = Vec::new();
    let mut dropped_rows = Vec::new();

    for i in 0..a.rows() {
        let mut r = a.row_vec(i);
        let mut rhs = b.get(i);
        for (p, &c) in piv_cols.iter().enumerate() {
            if r.get(c) {
                r ^= &piv_rows[p];
                rhs ^= piv_rhs[p];
            }
        }
        match r.first_one() {
            Some(c) => {
                for p in 0..piv_rows.len() {
                    if piv_rows[p].get(c) {
                        let rr = r.clone();
                        piv_rows[p] ^= &rr;
                        piv_rhs[p] ^= rhs;
                    }
                }
                piv_rows.push(r);
                piv_rhs.push(rhs);
                piv_cols.push(c);
                pivot_rows.push(i);
            }
            None => {
                if rhs {
                    dropped_rows.push(i);
                }
            }
        }
    }

    let mut solution = Gf2Vector::zeros(a.cols());
    for (p, &c) in piv_cols.iter().enumerate() {
        if piv_rhs[p] {
            solution.set(c, true);
        }
    }
    Ok(SolveResult {
        solution,
        pivot_rows,
        dropped_rows,
    })
}
