//! GF(2^m) fields, binary polynomials, and BCH generator/decoder machinery.
//!
//! Fields are represented by log/antilog tables over a primitive polynomial;
//! elements are `u16` (m up to 16). Binary polynomials are bit-packed and
//! unbounded-degree, enough for generators of the length-1023 codes and for
//! divisibility checks against `x^n + 1`.

use crate::gf2::Gf2Vector;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BchError {
    #[error("unsupported field degree m={0}, supported range is 2..=16")]
    UnsupportedDegree(u32),
    #[error("0x{poly:x} is not a degree-{m} primitive polynomial")]
    NotPrimitive { poly: u32, m: u32 },
    #[error("designed distance {0} exceeds code length {1}")]
    DistanceTooLarge(usize, usize),
    #[error("received word length {0} does not match code length {1}")]
    LengthMismatch(usize, usize),
    #[error("division by the zero polynomial")]
    DivisionByZero,
}

/// Default primitive polynomials, indexed by m. Primitivity is re-verified
/// when the table is built, so a bad entry cannot slip through silently.
pub const PRIMITIVE_POLYS: [u32; 17] = [
    0,
    0,
    0b111,       // m=2:  x^2 + x + 1
    0b1011,      // m=3:  x^3 + x + 1
    0b1_0011,    // m=4:  x^4 + x + 1
    0b10_0101,   // m=5:  x^5 + x^2 + 1
    0b100_0011,  // m=6:  x^6 + x + 1
    0b1000_1001, // m=7:  x^7 + x^3 + 1
    0x11d,       // m=8:  x^8 + x^4 + x^3 + x^2 + 1
    0x211,       // m=9:  x^9 + x^4 + 1
    0x409,       // m=10: x^10 + x^3 + 1
    0x805,       // m=11: x^11 + x^2 + 1
    0x1053,      // m=12: x^12 + x^6 + x^4 + x + 1
    0x201b,      // m=13: x^13 + x^4 + x^3 + x + 1
    0x4443,      // m=14: x^14 + x^10 + x^6 + x + 1
    0x8003,      // m=15: x^15 + x + 1
    0x1100b,     // m=16: x^16 + x^12 + x^3 + x + 1
];

/// GF(2^m) with log/antilog tables over a primitive polynomial.
#[derive(Clone)]
pub struct FieldContext {
    m: u32,
    poly: u32,
    n: usize,
    log: Vec<u16>,
    alog: Vec<u16>,
}

impl FieldContext {
    pub fn new(m: u32) -> Result<Self, BchError> {
        if !(2..=16).contains(&m) {
            return Err(BchError::UnsupportedDegree(m));
        }
        Self::with_modulus(m, PRIMITIVE_POLYS[m as usize])
    }

    /// Builds the tables, verifying that `poly` really is primitive: alpha's
    /// powers must only return to 1 after the full period 2^m - 1.
    #[allow(clippy::needless_range_loop)] // i indexes alog and is the exponent
    pub fn with_modulus(m: u32, poly: u32) -> Result<Self, BchError> {
        if !(2..=16).contains(&m) {
            return Err(BchError::UnsupportedDegree(m));
        }
        let bad = BchError::NotPrimitive { poly, m };
        // Degree exactly m with nonzero constant term.
        if poly >> m != 1 || poly & 1 == 0 {
            return Err(bad);
        }
        let n = (1usize << m) - 1;
        let mut log = vec![0u16; n + 1];
        let mut alog = vec![0u16; n];
        let mut x: u32 = 1;
        for i in 0..n {
            if i > 0 && x == 1 {
                return Err(bad); // period shorter than n
            }
            alog[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x >> m != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(bad);
        }
        Ok(Self { m, poly, n, log, alog })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Code length n = 2^m - 1.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> u32 {
        self.poly
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] as usize + self.log[b as usize] as usize;
        self.alog[if s >= self.n { s - self.n } else { s }]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        assert_ne!(a, 0, "inverse of zero");
        let l = self.log[a as usize] as usize;
        self.alog[(self.n - l) % self.n]
    }

    /// alpha^e, exponent reduced mod n.
    #[inline]
    pub fn alpha_pow(&self, e: usize) -> u16 {
        self.alog[e % self.n]
    }

    #[inline]
    pub fn log(&self, a: u16) -> usize {
        assert_ne!(a, 0, "log of zero");
        self.log[a as usize] as usize
    }
}

/// Polynomial over GF(2), bit-packed, normalized to no high zero words.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryPolynomial {
    words: Vec<u64>,
}

impl BinaryPolynomial {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn one() -> Self {
        Self { words: vec![1] }
    }

    pub fn x_pow(k: usize) -> Self {
        let mut p = Self::zero();
        p.set_coeff(k);
        p
    }

    pub fn from_exponents(exps: &[usize]) -> Self {
        let mut p = Self::zero();
        for &e in exps {
            p.toggle_coeff(e);
        }
        p
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    fn set_coeff(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1u64 << (i % 64);
    }

    fn toggle_coeff(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] ^= 1u64 << (i % 64);
        self.trim();
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = self.words.last()?;
        Some((self.words.len() - 1) * 64 + (63 - last.leading_zeros() as usize))
    }

    pub fn coeff(&self, i: usize) -> bool {
        let w = i / 64;
        w < self.words.len() && (self.words[w] >> (i % 64)) & 1 == 1
    }

    /// Exponents with nonzero coefficient, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    pub fn num_terms(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut words = self.words.clone();
        if words.len() < other.words.len() {
            words.resize(other.words.len(), 0);
        }
        for (a, b) in words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        let mut p = Self { words };
        p.trim();
        p
    }

    /// XORs `other << shift` into `self`.
    fn xor_shifted(&mut self, other: &Self, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        let needed = other.words.len() + ws + 1;
        if self.words.len() < needed {
            self.words.resize(needed, 0);
        }
        for (i, &w) in other.words.iter().enumerate() {
            self.words[i + ws] ^= w << bs;
            if bs != 0 {
                self.words[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        self.trim();
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        let (small, big) = if self.num_terms() <= other.num_terms() {
            (self, other)
        } else {
            (other, self)
        };
        for e in small.support() {
            out.xor_shifted(big, e);
        }
        out
    }

    /// Quotient and remainder of `self / divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self), BchError> {
        let d_deg = divisor.degree().ok_or(BchError::DivisionByZero)?;
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(r_deg) = rem.degree() {
            if r_deg < d_deg {
                break;
            }
            let shift = r_deg - d_deg;
            quot.set_coeff(shift);
            rem.xor_shifted(divisor, shift);
        }
        quot.trim();
        Ok((quot, rem))
    }

    /// Does `self` divide `other`?
    pub fn divides(&self, other: &Self) -> bool {
        match other.div_rem(self) {
            Ok((_, rem)) => rem.is_zero(),
            Err(_) => false,
        }
    }

    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.div_rem(&y).expect("nonzero divisor").1;
            x = y;
            y = r;
        }
        x
    }

    pub fn lcm(a: &Self, b: &Self) -> Self {
        if a.is_zero() || b.is_zero() {
            return Self::zero();
        }
        let g = Self::gcd(a, b);
        let (q, _) = a.div_rem(&g).expect("gcd is nonzero");
        q.mul(b)
    }

    /// Coefficients as a length-`len` bit vector; None if the degree does not
    /// fit.
    pub fn to_vector(&self, len: usize) -> Option<Gf2Vector> {
        if let Some(d) = self.degree() {
            if d >= len {
                return None;
            }
        }
        let mut v = Gf2Vector::zeros(len);
        for e in self.support() {
            v.set(e, true);
        }
        Some(v)
    }
}

/// The cyclotomic coset of `j` mod `n` under doubling, sorted ascending.
pub fn cyclotomic_coset(n: usize, j: usize) -> Vec<usize> {
    let start = j % n;
    let mut coset = vec![start];
    let mut cur = (start * 2) % n;
    while cur != start {
        coset.push(cur);
        cur = (cur * 2) % n;
    }
    coset.sort_unstable();
    coset
}

/// prod (x + alpha^e) over the given exponents. For a full cyclotomic coset
/// the product has GF(2) coefficients; that is asserted, not assumed.
pub fn minimal_polynomial(ctx: &FieldContext, exponents: &[usize]) -> BinaryPolynomial {
    let mut coeffs: Vec<u16> = vec![1];
    for &e in exponents {
        let root = ctx.alpha_pow(e);
        let mut next = vec![0u16; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] ^= c;
            next[i] ^= ctx.mul(root, c);
        }
        coeffs = next;
    }
    let mut p = BinaryPolynomial::zero();
    for (i, &c) in coeffs.iter().enumerate() {
        assert!(c <= 1, "minimal polynomial coefficient left the prime field");
        if c == 1 {
            p.set_coeff(i);
        }
    }
    p
}

/// Narrow-sense BCH generator for designed distance 2t+1: the product of the
/// minimal polynomials of alpha^1 .. alpha^2t (one factor per distinct
/// cyclotomic coset). t = 0 yields the constant 1.
pub fn bch_generator(ctx: &FieldContext, t: usize) -> Result<BinaryPolynomial, BchError> {
    let n = ctx.n();
    if 2 * t + 1 > n {
        return Err(BchError::DistanceTooLarge(2 * t + 1, n));
    }
    let mut seen = vec![false; n];
    let mut g = BinaryPolynomial::one();
    for j in 1..=2 * t {
        if !seen[j] {
            let coset = cyclotomic_coset(n, j);
            for &e in &coset {
                seen[e] = true;
            }
            g = g.mul(&minimal_polynomial(ctx, &coset));
        }
    }
    Ok(g)
}

/// Bounded-distance decoder for the narrow-sense BCH code of correction
/// radius `t`: syndromes, Berlekamp-Massey, Chien search. Holds a
/// precomputed alpha^(i*j) table so per-word syndrome computation is table
/// lookups only.
pub struct BchDecoder {
    t: usize,
    n: usize,
    /// pow[(j-1)*n + i] = alpha^(i*j), j = 1..=2t.
    pow: Vec<u16>,
}

impl BchDecoder {
    pub fn new(ctx: &FieldContext, t: usize) -> Result<Self, BchError> {
        let n = ctx.n();
        if 2 * t + 1 > n {
            return Err(BchError::DistanceTooLarge(2 * t + 1, n));
        }
        let mut pow = vec![0u16; 2 * t * n];
        for j in 1..=2 * t {
            let step = ctx.alpha_pow(j);
            let row = &mut pow[(j - 1) * n..j * n];
            let mut cur: u16 = 1;
            for slot in row.iter_mut() {
                *slot = cur;
                cur = ctx.mul(cur, step);
            }
        }
        Ok(Self { t, n, pow })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Error positions if the received word lies within distance t of a
    /// codeword, `None` on decoder failure. A clean syndrome short-circuits
    /// to "no errors"; t = 0 never corrects anything.
    #[allow(clippy::needless_range_loop)] // j is both index and power
    pub fn decode(
        &self,
        ctx: &FieldContext,
        received: &Gf2Vector,
    ) -> Result<Option<Vec<usize>>, BchError> {
        let n = self.n;
        if received.len() != n {
            return Err(BchError::LengthMismatch(received.len(), n));
        }
        if self.t == 0 {
            return Ok(Some(Vec::new()));
        }

        let nsyn = 2 * self.t;
        let mut syn = vec![0u16; nsyn + 1]; // 1-based
        for i in received.ones() {
            for j in 1..=nsyn {
                syn[j] ^= self.pow[(j - 1) * n + i];
            }
        }
        if syn[1..].iter().all(|&s| s == 0) {
            return Ok(Some(Vec::new()));
        }

        // Berlekamp-Massey for the error locator sigma(x).
        let mut sigma: Vec<u16> = vec![1];
        let mut prev: Vec<u16> = vec![1];
        let mut big_l = 0usize;
        let mut gap = 1usize;
        let mut prev_disc: u16 = 1;
        for r in 1..=nsyn {
            let mut d = syn[r];
            for j in 1..=big_l.min(sigma.len() - 1) {
                if sigma[j] != 0 && syn[r - j] != 0 {
                    d ^= ctx.mul(sigma[j], syn[r - j]);
                }
            }
            if d == 0 {
                gap += 1;
                continue;
            }
            let coef = ctx.mul(d, ctx.inv(prev_disc));
            let mut updated = sigma.clone();
            if updated.len() < prev.len() + gap {
                updated.resize(prev.len() + gap, 0);
            }
            for (i, &p) in prev.iter().enumerate() {
                if p != 0 {
                    updated[i + gap] ^= ctx.mul(coef, p);
                }
            }
            if 2 * big_l < r {
                prev = sigma;
                prev_disc = d;
                big_l = r - big_l;
                gap = 1;
            } else {
                gap += 1;
            }
            sigma = updated;
        }
        if big_l > self.t {
            return Ok(None);
        }
        let deg = match sigma.iter().rposition(|&c| c != 0) {
            Some(d) if d == big_l => d,
            _ => return Ok(None), // degenerate locator
        };

        // Chien search: error at position i iff sigma(alpha^-i) == 0.
        let mult: Vec<u16> = (0..=deg).map(|k| ctx.alpha_pow(n - k % n)).collect();
        let mut vals: Vec<u16> = sigma[..=deg].to_vec();
        let mut positions = Vec::with_capacity(deg);
        for i in 0..n {
            let mut acc = 0u16;
            for &v in &vals {
                acc ^= v;
            }
            if acc == 0 {
                positions.push(i);
                if positions.len() == deg {
                    break;
                }
            }
            for (k, v) in vals.iter_mut().enumerate() {
                *v = ctx.mul(*v, mult[k]);
            }
        }
        if positions.len() != deg {
            return Ok(None); // locator does not split over the field
        }
        Ok(Some(positions))
    }
}

/// One-shot convenience wrapper around [`BchDecoder`].
pub fn bch_decode(
    ctx: &FieldContext,
    t: usize,
    received: &Gf2Vector,
) -> Result<Option<Vec<usize>>, BchError> {
    BchDecoder::new(ctx, t)?.decode(ctx, received)
}
