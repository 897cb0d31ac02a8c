//! Dense bit-packed linear algebra over GF(2).
//!
//! Vectors hold error patterns, syndromes, and corrections; matrices hold
//! parity checks. Rows are packed 64 bits to a word so elimination sweeps
//! and syndrome products reduce to XOR/AND/popcount loops. The external
//! contract is index-level access only; the word layout is internal.
//!
//! All values are immutable after construction from the caller's point of
//! view and safe to share across threads.

use std::fmt;

use thiserror::Error;

/// Errors reported by GF(2) operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has length {len}")]
    DimensionMismatch { rows: usize, cols: usize, len: usize },
}

const WORD_BITS: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

// ============================================================================
// BitVector
// ============================================================================

/// A vector over GF(2), packed 64 bits per word.
///
/// Bits past `len` in the last word are kept zero so equality and hashing
/// work on the packed words directly.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    /// Zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            debug_assert!(b <= 1, "entries must be 0 or 1");
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len` with ones at the given indices.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns bit `i`.
    ///
    /// # Panics
    /// Panics if `i >= len`.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    /// Sets bit `i`.
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Flips bit `i`.
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len={})", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// XOR-assigns another vector into this one (GF(2) addition).
    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor_assign: length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Returns the GF(2) sum of two vectors.
    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Sets all bits to zero without reallocating.
    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the overlap `<self, other>` (the GF(2) inner product).
    pub fn overlap_parity(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "overlap_parity: length mismatch");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| OnesIter {
            word: w,
            base: wi * WORD_BITS,
        })
    }

    /// Expands to a dense 0/1 byte vector.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| u8::from(self.get(i))).collect()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({}; [", self.len)?;
        for (k, i) in self.ones().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "])")
    }
}

/// Iterator over set bits of a single word.
struct OnesIter {
    word: u64,
    base: usize,
}

impl Iterator for OnesIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let bit = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + bit)
    }
}

// ============================================================================
// BitMatrix
// ============================================================================

/// A row-major matrix over GF(2) with bit-packed rows.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    row_words: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let row_words = words_for(cols);
        Self {
            rows,
            cols,
            row_words,
            words: vec![0; rows * row_words],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from dense 0/1 rows. All rows must share a length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from per-row support lists.
    pub fn from_row_support(rows: usize, cols: usize, support: &[Vec<usize>]) -> Self {
        assert_eq!(support.len(), rows);
        let mut m = Self::zeros(rows, cols);
        for (r, cs) in support.iter().enumerate() {
            for &c in cs {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        (self.words[r * self.row_words + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of range");
        let idx = r * self.row_words + c / WORD_BITS;
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            self.words[idx] |= mask;
        } else {
            self.words[idx] &= !mask;
        }
    }

    /// Copies row `r` out as a vector of length `cols`.
    pub fn row(&self, r: usize) -> BitVector {
        assert!(r < self.rows);
        BitVector {
            words: self.row_slice(r).to_vec(),
            len: self.cols,
        }
    }

    /// Copies column `c` out as a vector of length `rows`.
    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_slice(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the overlap between row `i` of `self` and row `j` of `other`.
    pub fn row_dot(&self, i: usize, other: &BitMatrix, j: usize) -> bool {
        assert_eq!(self.cols, other.cols, "row_dot: column count mismatch");
        let mut acc = 0u64;
        for (a, b) in self.row_slice(i).iter().zip(other.row_slice(j)) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// XORs row `src` into row `dst`.
    pub fn xor_rows(&mut self, src: usize, dst: usize) {
        assert!(src < self.rows && dst < self.rows);
        let rw = self.row_words;
        let (s, d) = (src * rw, dst * rw);
        for k in 0..rw {
            let v = self.words[s + k];
            self.words[d + k] ^= v;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let rw = self.row_words;
        let (a0, b0) = (a * rw, b * rw);
        for k in 0..rw {
            self.words.swap(a0 + k, b0 + k);
        }
    }

    fn row_slice(&self, r: usize) -> &[u64] {
        &self.words[r * self.row_words..(r + 1) * self.row_words]
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", u8::from(self.get(r, c)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// ============================================================================
// Operations
// ============================================================================

/// Matrix-vector product over GF(2): `result[i] = XOR_j M[i,j] v[j]`.
pub fn mat_vec(m: &BitMatrix, v: &BitVector) -> Result<BitVector, Gf2Error> {
    if v.len() != m.cols {
        return Err(Gf2Error::DimensionMismatch {
            rows: m.rows,
            cols: m.cols,
            len: v.len(),
        });
    }
    let mut out = BitVector::zeros(m.rows);
    for r in 0..m.rows {
        let mut acc = 0u64;
        for (a, b) in m.row_slice(r).iter().zip(v.words()) {
            acc ^= a & b;
        }
        if acc.count_ones() % 2 == 1 {
            out.set(r, true);
        }
    }
    Ok(out)
}

/// GF(2) row rank.
pub fn rank(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    reduce_in_place(&mut work, None).len()
}

/// Result of [`row_reduce`]: `transform * input == reduced`.
#[derive(Debug, Clone)]
pub struct RowReduction {
    /// Reduced row-echelon form of the input.
    pub reduced: BitMatrix,
    /// Pivot column indices, strictly increasing.
    pub pivot_cols: Vec<usize>,
    /// Row-operation matrix accumulated during elimination.
    pub transform: BitMatrix,
}

/// Reduced row-echelon form over GF(2) with the accumulated row transform.
pub fn row_reduce(m: &BitMatrix) -> RowReduction {
    let mut reduced = m.clone();
    let mut transform = BitMatrix::identity(m.rows());
    let pivot_cols = reduce_in_place(&mut reduced, Some(&mut transform));
    RowReduction {
        reduced,
        pivot_cols,
        transform,
    }
}

/// Full Gauss-Jordan elimination; mirror receives the same row operations.
fn reduce_in_place(m: &mut BitMatrix, mut mirror: Option<&mut BitMatrix>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut pr = 0;
    for c in 0..m.cols() {
        if pr == m.rows() {
            break;
        }
        let Some(r) = (pr..m.rows()).find(|&r| m.get(r, c)) else {
            continue;
        };
        m.swap_rows(pr, r);
        if let Some(t) = mirror.as_deref_mut() {
            t.swap_rows(pr, r);
        }
        for r2 in 0..m.rows() {
            if r2 != pr && m.get(r2, c) {
                m.xor_rows(pr, r2);
                if let Some(t) = mirror.as_deref_mut() {
                    t.xor_rows(pr, r2);
                }
            }
        }
        pivots.push(c);
        pr += 1;
    }
    pivots
}

/// Solves `M e = s` with the support of `e` restricted to `allowed_cols`.
///
/// Returns `None` when no solution exists on the allowed support. When the
/// restricted system is underdetermined, free variables are fixed to zero
/// and pivot variables are read off the reduced system, so the result is
/// deterministic for a given column order.
pub fn solve_restricted(
    m: &BitMatrix,
    s: &BitVector,
    allowed_cols: &[usize],
) -> Option<BitVector> {
    assert_eq!(s.len(), m.rows(), "syndrome length must match row count");
    let k = allowed_cols.len();
    {
        let mut seen = vec![false; m.cols()];
        for &c in allowed_cols {
            assert!(c < m.cols(), "allowed column {c} out of range");
            assert!(!seen[c], "allowed column {c} repeated");
            seen[c] = true;
        }
    }

    // Restricted system [R | s] with R's columns taken in the given order.
    let mut aug = BitMatrix::zeros(m.rows(), k + 1);
    for (j, &c) in allowed_cols.iter().enumerate() {
        for r in 0..m.rows() {
            if m.get(r, c) {
                aug.set(r, j, true);
            }
        }
    }
    for r in 0..m.rows() {
        if s.get(r) {
            aug.set(r, k, true);
        }
    }

    let pivots = reduce_in_place(&mut aug, None);
    if pivots.last() == Some(&k) {
        return None; // a row reduced to 0 = 1
    }

    let mut e = BitVector::zeros(m.cols());
    for (pr, &j) in pivots.iter().enumerate() {
        if aug.get(pr, k) {
            e.set(allowed_cols[j], true);
        }
    }
    debug_assert_eq!(mat_vec(m, &e).unwrap(), *s);
    Some(e)
}
