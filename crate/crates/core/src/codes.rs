//! CSS surface-code constructions with a pinned qubit layout.
//!
//! Two families are provided:
//!
//! - [`rotated_surface`]: `n = d*d` data qubits on a square grid, weight-4
//!   bulk plaquettes and weight-2 boundary checks (Z-type boundary checks on
//!   the top and bottom edges, X-type on the left and right);
//! - [`unrotated_surface`]: `n = d*d + (d-1)*(d-1)` data qubits on the even
//!   sites of a (2d-1)x(2d-1) board, minimum check weight 3, and a distinct
//!   Z-syndrome signature for every single qubit.
//!
//! Qubit indexing is row-major over the data-qubit grid with index 0 at the
//! top-left corner; experiment configs name sites through this map, which is
//! also exported by the `code-info` CLI command. The logical-Z representative
//! is the leftmost column of data qubits, the logical-X representative the
//! top row; the two overlap only at qubit 0.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::gf2::{mat_vec, rank, row_reduce, BitMatrix, BitVector};

/// Errors reported by code constructors and oracles.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("distance must be at least 2, got {0}")]
    DistanceTooSmall(usize),
    #[error("exhaustive search infeasible: n = {n} exceeds the limit of {limit} qubits")]
    TooLargeForExhaustive { n: usize, limit: usize },
    #[error("no logical operator found in the requested sector")]
    NoLogicalOperator,
}

/// Largest qubit count accepted by the brute-force distance oracle.
pub const EXHAUSTIVE_QUBIT_LIMIT: usize = 26;

/// Which Pauli error sector an operation refers to.
///
/// Bit flips (X errors) are detected by the Z checks `hz`; phase flips by
/// the X checks `hx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorSector {
    BitFlip,
    PhaseFlip,
}

/// A CSS code instance: check matrices, logical representatives, parameters.
#[derive(Debug, Clone)]
pub struct CssCode {
    pub name: String,
    /// Physical qubit count.
    pub n: usize,
    /// Logical qubit count.
    pub k: usize,
    /// Designed distance.
    pub d: usize,
    /// Z-type checks; detect X (bit-flip) errors.
    pub hz: BitMatrix,
    /// X-type checks; detect Z (phase-flip) errors.
    pub hx: BitMatrix,
    /// One representative of the logical-Z support (length n).
    pub logical_z: BitVector,
    /// One representative of the logical-X support (length n).
    pub logical_x: BitVector,
    /// Qubit index -> grid coordinate, fixing the layout for configs.
    sites: Vec<(usize, usize)>,
}

impl CssCode {
    /// Grid coordinate of a qubit index.
    pub fn site(&self, qubit: usize) -> (usize, usize) {
        self.sites[qubit]
    }

    /// The full index -> coordinate map.
    pub fn sites(&self) -> &[(usize, usize)] {
        &self.sites
    }

    /// The partner sharing a weight-2 X-check with `qubit`, if any.
    ///
    /// A bit flip on such a qubit is stabilizer-equivalent to a bit flip on
    /// its partner, so the pair is indistinguishable from syndromes alone.
    pub fn weight_two_partner(&self, qubit: usize) -> Option<usize> {
        for r in 0..self.hx.rows() {
            if self.hx.row_weight(r) == 2 && self.hx.get(r, qubit) {
                return self.hx.row(r).ones().find(|&q| q != qubit);
            }
        }
        None
    }

    fn validate(&self) {
        // CSS commutation: every X check overlaps every Z check evenly.
        for i in 0..self.hx.rows() {
            for j in 0..self.hz.rows() {
                assert!(!self.hx.row_dot(i, &self.hz, j), "hx row {i} anticommutes with hz row {j}");
            }
        }
        assert_eq!(rank(&self.hx) + rank(&self.hz), self.n - self.k);
        assert!(mat_vec(&self.hx, &self.logical_z).unwrap().is_zero());
        assert!(mat_vec(&self.hz, &self.logical_x).unwrap().is_zero());
        assert!(self.logical_z.overlap_parity(&self.logical_x));
    }
}

/// Bipartite adjacency between checks and bits, read off a check matrix.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    pub check_to_bits: Vec<Vec<usize>>,
    pub bit_to_checks: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn check_count(&self) -> usize {
        self.check_to_bits.len()
    }

    pub fn bit_count(&self) -> usize {
        self.bit_to_checks.len()
    }
}

/// Builds the Tanner graph whose adjacency is the support of `h`.
pub fn tanner(h: &BitMatrix) -> TannerGraph {
    let mut check_to_bits = vec![Vec::new(); h.rows()];
    let mut bit_to_checks = vec![Vec::new(); h.cols()];
    for (r, adj) in check_to_bits.iter_mut().enumerate() {
        for c in h.row(r).ones() {
            adj.push(c);
            bit_to_checks[c].push(r);
        }
    }
    TannerGraph {
        check_to_bits,
        bit_to_checks,
    }
}

/// Constructs the rotated surface code of distance `d` (`n = d*d`, `k = 1`).
pub fn rotated_surface(d: usize) -> Result<CssCode, CodeError> {
    if d < 2 {
        return Err(CodeError::DistanceTooSmall(d));
    }
    let n = d * d;
    let qubit = |r: i64, c: i64| (r as usize) * d + c as usize;
    let in_grid = |r: i64, c: i64| r >= 0 && c >= 0 && (r as usize) < d && (c as usize) < d;

    let mut z_rows: Vec<Vec<usize>> = Vec::new();
    let mut x_rows: Vec<Vec<usize>> = Vec::new();
    let last = d as i64 - 1;
    // Face (fr, fc) sits between data rows fr/fr+1 and columns fc/fc+1.
    for fr in -1..=last {
        for fc in -1..=last {
            let corners = [(fr, fc), (fr, fc + 1), (fr + 1, fc), (fr + 1, fc + 1)];
            let support: Vec<usize> = corners
                .iter()
                .filter(|&&(r, c)| in_grid(r, c))
                .map(|&(r, c)| qubit(r, c))
                .collect();
            let z_type = (fr + fc).rem_euclid(2) == 0;
            match support.len() {
                // Bulk plaquette: checkerboard coloring.
                4 => {
                    if z_type {
                        z_rows.push(support);
                    } else {
                        x_rows.push(support);
                    }
                }
                // Boundary half-plaquette: kept only where its color matches
                // the edge. Z pairs live on the top/bottom rows, X pairs on
                // the left/right columns.
                2 => {
                    let top_bottom = fr == -1 || fr == last;
                    if z_type && top_bottom {
                        z_rows.push(support);
                    } else if !z_type && !top_bottom {
                        x_rows.push(support);
                    }
                }
                _ => {}
            }
        }
    }
    debug_assert_eq!(z_rows.len() + x_rows.len(), n - 1);

    let hz = BitMatrix::from_row_support(z_rows.len(), n, &z_rows);
    let hx = BitMatrix::from_row_support(x_rows.len(), n, &x_rows);
    let logical_z = BitVector::from_support(n, &(0..d).map(|r| r * d).collect::<Vec<_>>());
    let logical_x = BitVector::from_support(n, &(0..d).collect::<Vec<_>>());
    let sites = (0..n).map(|q| (q / d, q % d)).collect();

    let code = CssCode {
        name: "rotated_surface".into(),
        n,
        k: 1,
        d,
        hz,
        hx,
        logical_z,
        logical_x,
        sites,
    };
    code.validate();
    Ok(code)
}

/// Constructs the unrotated (planar) surface code of distance `d`
/// (`n = d*d + (d-1)*(d-1)`, `k = 1`).
pub fn unrotated_surface(d: usize) -> Result<CssCode, CodeError> {
    if d < 2 {
        return Err(CodeError::DistanceTooSmall(d));
    }
    let span = 2 * d - 1;
    // Data qubits on even-parity board sites, indexed in scan order.
    let mut index = vec![vec![usize::MAX; span]; span];
    let mut sites = Vec::new();
    for (i, row) in index.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            if (i + j) % 2 == 0 {
                *slot = sites.len();
                sites.push((i, j));
            }
        }
    }
    let n = sites.len();
    debug_assert_eq!(n, d * d + (d - 1) * (d - 1));

    let neighbors = |i: usize, j: usize| {
        let mut out = Vec::with_capacity(4);
        if i > 0 {
            out.push(index[i - 1][j]);
        }
        if j > 0 {
            out.push(index[i][j - 1]);
        }
        if j + 1 < span {
            out.push(index[i][j + 1]);
        }
        if i + 1 < span {
            out.push(index[i + 1][j]);
        }
        out
    };

    let mut z_rows: Vec<Vec<usize>> = Vec::new();
    let mut x_rows: Vec<Vec<usize>> = Vec::new();
    for i in 0..span {
        for j in 0..span {
            if (i + j) % 2 == 1 {
                // Z checks on (even, odd) sites, X checks on (odd, even).
                if i % 2 == 0 {
                    z_rows.push(neighbors(i, j));
                } else {
                    x_rows.push(neighbors(i, j));
                }
            }
        }
    }

    let hz = BitMatrix::from_row_support(z_rows.len(), n, &z_rows);
    let hx = BitMatrix::from_row_support(x_rows.len(), n, &x_rows);
    let col0: Vec<usize> = (0..span).step_by(2).map(|i| index[i][0]).collect();
    let row0: Vec<usize> = (0..span).step_by(2).map(|j| index[0][j]).collect();
    let logical_z = BitVector::from_support(n, &col0);
    let logical_x = BitVector::from_support(n, &row0);

    let code = CssCode {
        name: "unrotated_surface".into(),
        n,
        k: 1,
        d,
        hz,
        hx,
        logical_z,
        logical_x,
        sites,
    };
    code.validate();
    Ok(code)
}

/// Minimum weight of a logical operator in the given sector, by exhaustive
/// search over the check-matrix kernel.
///
/// For the bit-flip sector this is the smallest `wt(e)` with `hz e = 0` and
/// odd overlap between `e` and the logical-Z representative; for a correctly
/// built code it equals the designed distance.
pub fn min_logical_weight(code: &CssCode, sector: ErrorSector) -> Result<usize, CodeError> {
    if code.n > EXHAUSTIVE_QUBIT_LIMIT {
        return Err(CodeError::TooLargeForExhaustive {
            n: code.n,
            limit: EXHAUSTIVE_QUBIT_LIMIT,
        });
    }
    let (h, logical) = match sector {
        ErrorSector::BitFlip => (&code.hz, &code.logical_z),
        ErrorSector::PhaseFlip => (&code.hx, &code.logical_x),
    };
    let basis = kernel_basis(h);
    let dim = basis.len();
    assert!(dim < 64, "kernel too large to enumerate");

    // Gray-code walk over every nonzero kernel combination: one basis XOR
    // per step.
    let mut current = BitVector::zeros(code.n);
    let mut best: Option<usize> = None;
    for step in 1u64..(1u64 << dim) {
        current.xor_assign(&basis[step.trailing_zeros() as usize]);
        if current.overlap_parity(logical) {
            let w = current.weight();
            if best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
    }
    best.ok_or(CodeError::NoLogicalOperator)
}

/// Basis of the null space of `h` (vectors `v` with `h v = 0`).
fn kernel_basis(h: &BitMatrix) -> Vec<BitVector> {
    let rr = row_reduce(h);
    let pivot_of_col: BTreeMap<usize, usize> = rr
        .pivot_cols
        .iter()
        .enumerate()
        .map(|(pr, &c)| (c, pr))
        .collect();
    let mut basis = Vec::new();
    for free in 0..h.cols() {
        if pivot_of_col.contains_key(&free) {
            continue;
        }
        let mut v = BitVector::zeros(h.cols());
        v.set(free, true);
        for (&pc, &pr) in &pivot_of_col {
            if rr.reduced.get(pr, free) {
                v.set(pc, true);
            }
        }
        basis.push(v);
    }
    basis
}

/// Histogram of check (row) weights, used by `code-info`.
pub fn check_weight_histogram(h: &BitMatrix) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for r in 0..h.rows() {
        *hist.entry(h.row_weight(r)).or_insert(0) += 1;
    }
    hist
}
