//! Belief-propagation decoding with ordered-statistics fallback (BPOSD).
//!
//! The decoder runs sum-product message passing in the log-likelihood-ratio
//! domain with a flooding schedule, seeded by per-qubit prior flip rates.
//! Convergence is declared at the first iteration whose hard decision
//! reproduces the observed syndrome. When belief propagation fails to
//! converge — the usual outcome for stabilizer-degenerate syndromes — an
//! order-0 ordered-statistics step takes over: columns are ranked by the BP
//! posterior flip probability, a maximal independent subset is selected
//! greedily, and the syndrome equation is solved on that support.
//!
//! Degeneracy needs care in two places. Stabilizer-equivalent candidate
//! errors produce exactly tied marginals, so the OSD ranking breaks ties by
//! a fixed hash of the column content before falling back to the index:
//! identical columns (interchangeable bits) still resolve to the lower
//! index, while distinct-but-tied columns resolve in an order uncorrelated
//! with their position in the code. And when OSD overrides BP, the reported
//! soft output is the committed belief — the mean of the BP marginal and the
//! committed hard bit — because the raw marginal sits pinned at 1/2 on
//! degenerate supports and carries no usable signal for prior updates.
//!
//! Message and prior clamps keep the arithmetic finite at rates approaching
//! 0 or 1 without changing any hard decision. All entry points are pure
//! functions of their inputs and safe to call concurrently.

use std::cmp::Ordering;

use log::warn;
use thiserror::Error;

use crate::codes::{tanner, TannerGraph};
use crate::gf2::{mat_vec, rank, solve_restricted, BitMatrix, BitVector};
use crate::Scalar;

/// Errors reported by the decoding layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BposdError {
    /// The syndrome is not in the column space of the check matrix. Cannot
    /// occur for syndromes generated by errors; signals corrupted input.
    #[error("syndrome lies outside the column space of the check matrix")]
    SyndromeOutsideColumnSpace,
}

/// Clamp bound for prior flip rates.
pub const PRIOR_FLOOR: f64 = 1e-12;
/// Clamp bound for log-likelihood ratios and messages.
pub const LLR_CAP: f64 = 30.0;
/// Default belief-propagation iteration cap.
pub const DEFAULT_MAX_ITER: usize = 50;

/// Per-qubit prior bit-flip probabilities fed to the decoder.
///
/// Entries are clamped into `[PRIOR_FLOOR, 1 - PRIOR_FLOOR]` on every write
/// so the induced log-likelihood ratios stay finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorVector<F: Scalar> {
    p: Vec<F>,
}

impl<F: Scalar> PriorVector<F> {
    /// Builds a prior vector, clamping each entry.
    pub fn new(rates: Vec<F>) -> Self {
        let mut v = Self { p: rates };
        let half = F::from(0.5).unwrap();
        if v.p.iter().any(|&p| p >= half) {
            warn!("prior vector contains rates >= 0.5; decoder quality degrades near 1/2");
        }
        for p in &mut v.p {
            *p = clamp_prior(*p);
        }
        v
    }

    /// Uniform priors at a single rate.
    pub fn uniform(n: usize, rate: F) -> Self {
        Self::new(vec![rate; n])
    }

    /// Copy with one site replaced (clamped).
    pub fn with_site(&self, site: usize, rate: F) -> Self {
        let mut out = self.clone();
        out.set(site, rate);
        out
    }

    pub fn set(&mut self, site: usize, rate: F) {
        let half = F::from(0.5).unwrap();
        if rate >= half {
            warn!("prior for site {site} set to {rate} (>= 0.5)");
        }
        self.p[site] = clamp_prior(rate);
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn get(&self, i: usize) -> F {
        self.p[i]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.p
    }

    /// Channel log-likelihood ratio `ln((1-p)/p)` for qubit `i`.
    pub fn llr(&self, i: usize) -> F {
        ((F::one() - self.p[i]) / self.p[i]).ln()
    }
}

fn clamp_prior<F: Scalar>(p: F) -> F {
    let floor = F::from(PRIOR_FLOOR).unwrap();
    p.max(floor).min(F::one() - floor)
}

fn clamp_llr<F: Scalar>(x: F) -> F {
    let cap = F::from(LLR_CAP).unwrap();
    if x > cap {
        cap
    } else if x < -cap {
        -cap
    } else {
        x
    }
}

/// Output of one belief-propagation run.
#[derive(Debug, Clone)]
pub struct BpOutcome<F: Scalar> {
    /// Posterior flip probabilities from the final iteration.
    pub soft: Vec<F>,
    /// Hard decision (posterior LLR < 0).
    pub hard: BitVector,
    /// Whether the hard decision reproduced the syndrome.
    pub converged: bool,
    /// Iterations executed.
    pub iterations: usize,
}

/// Full decode result: hard correction plus soft posteriors.
#[derive(Debug, Clone)]
pub struct DecodeResult<F: Scalar> {
    /// Correction satisfying `H * correction = syndrome`.
    pub correction: BitVector,
    /// Per-bit flip probabilities: the final-iteration BP posterior, or the
    /// committed belief (marginal averaged with the hard bit) when OSD
    /// overrode BP.
    pub soft: Vec<F>,
    pub bp_converged: bool,
    pub osd_used: bool,
    pub iterations: usize,
}

/// Sum-product belief propagation over a Tanner graph.
///
/// Flooding (parallel) schedule; check-to-bit messages use the tanh product
/// rule with the syndrome sign. Non-convergence within `max_iter` is a valid
/// flagged outcome, not an error.
pub fn bp_decode<F: Scalar>(
    graph: &TannerGraph,
    syndrome: &BitVector,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> BpOutcome<F> {
    let m = graph.check_count();
    let n = graph.bit_count();
    assert_eq!(syndrome.len(), m, "syndrome length must match check count");
    assert_eq!(priors.len(), n, "prior length must match bit count");
    assert!(max_iter >= 1, "max_iter must be at least 1");

    // Flat edge layout, contiguous per check.
    let total_edges: usize = graph.check_to_bits.iter().map(Vec::len).sum();
    let mut edge_bit = Vec::with_capacity(total_edges);
    let mut check_offset = Vec::with_capacity(m + 1);
    let mut bit_edges = vec![Vec::new(); n];
    check_offset.push(0);
    for bits in &graph.check_to_bits {
        for &i in bits {
            bit_edges[i].push(edge_bit.len());
            edge_bit.push(i);
        }
        check_offset.push(edge_bit.len());
    }

    let two = F::from(2.0).unwrap();
    let llr0: Vec<F> = (0..n).map(|i| priors.llr(i)).collect();
    let mut bit_to_check: Vec<F> = edge_bit.iter().map(|&i| llr0[i]).collect();
    let mut check_to_bit = vec![F::zero(); total_edges];
    let mut posterior = llr0.clone();
    let mut hard = BitVector::zeros(n);

    for iteration in 1..=max_iter {
        for a in 0..m {
            let edges = check_offset[a]..check_offset[a + 1];
            let flip = syndrome.get(a);
            for ei in edges.clone() {
                let mut prod = F::one();
                for ej in edges.clone() {
                    if ej != ei {
                        prod = prod * (bit_to_check[ej] / two).tanh();
                    }
                }
                if flip {
                    prod = -prod;
                }
                check_to_bit[ei] = clamp_llr(two * prod.atanh());
            }
        }

        for i in 0..n {
            let mut sum = llr0[i];
            for &ei in &bit_edges[i] {
                sum = sum + check_to_bit[ei];
            }
            posterior[i] = clamp_llr(sum);
            hard.set(i, posterior[i] < F::zero());
            for &ei in &bit_edges[i] {
                bit_to_check[ei] = clamp_llr(sum - check_to_bit[ei]);
            }
        }

        let satisfied = graph.check_to_bits.iter().enumerate().all(|(a, bits)| {
            let parity = bits.iter().filter(|&&i| hard.get(i)).count() % 2;
            parity == usize::from(syndrome.get(a))
        });
        if satisfied {
            return BpOutcome {
                soft: posterior.iter().map(|&l| flip_probability(l)).collect(),
                hard,
                converged: true,
                iterations: iteration,
            };
        }
    }

    BpOutcome {
        soft: posterior.iter().map(|&l| flip_probability(l)).collect(),
        hard,
        converged: false,
        iterations: max_iter,
    }
}

/// `P(bit = 1)` from a posterior LLR: `1 / (1 + exp(llr))`.
fn flip_probability<F: Scalar>(llr: F) -> F {
    F::one() / (F::one() + llr.exp())
}

/// Order-0 ordered-statistics decoding.
///
/// Columns are sorted by soft flip probability, descending; a maximal
/// linearly independent set is selected greedily in that order until
/// `rank(H)` columns are chosen, and the syndrome equation is solved on
/// that support.
///
/// Exact ties are broken by a fixed hash of the column content, then by
/// lower index. Degenerate syndromes tie whole equivalence classes of
/// candidate supports at identical marginals; position-independent tie
/// resolution keeps the committed class uncorrelated with where a hot
/// qubit happens to sit in the index order, while bits with identical
/// columns still resolve deterministically to the lower index.
pub fn osd0<F: Scalar>(
    h: &BitMatrix,
    syndrome: &BitVector,
    soft: &[F],
) -> Result<BitVector, BposdError> {
    osd0_ranked(h, syndrome, soft, rank(h))
}

fn osd0_ranked<F: Scalar>(
    h: &BitMatrix,
    syndrome: &BitVector,
    soft: &[F],
    h_rank: usize,
) -> Result<BitVector, BposdError> {
    assert_eq!(soft.len(), h.cols(), "soft length must match column count");
    assert_eq!(syndrome.len(), h.rows());

    let column_keys: Vec<u64> = (0..h.cols()).map(|c| column_hash(h, c)).collect();
    let mut order: Vec<usize> = (0..h.cols()).collect();
    order.sort_by(|&a, &b| {
        soft[b]
            .partial_cmp(&soft[a])
            .unwrap_or(Ordering::Equal)
            .then(column_keys[a].cmp(&column_keys[b]))
            .then(a.cmp(&b))
    });

    // Greedy independent column selection with one pivot bit per basis entry.
    let mut chosen = Vec::with_capacity(h_rank);
    let mut basis: Vec<(usize, BitVector)> = Vec::new();
    for &c in &order {
        if chosen.len() == h_rank {
            break;
        }
        let mut col = h.column(c);
        for (lead, v) in &basis {
            if col.get(*lead) {
                col.xor_assign(v);
            }
        }
        let lead = col.ones().next();
        if let Some(lead) = lead {
            basis.push((lead, col));
            chosen.push(c);
        }
    }

    solve_restricted(h, syndrome, &chosen).ok_or(BposdError::SyndromeOutsideColumnSpace)
}

/// Fixed, platform-independent fingerprint of a column's support pattern.
fn column_hash(h: &BitMatrix, c: usize) -> u64 {
    let mut acc: u64 = 0x9e37_79b9_7f4a_7c15;
    for r in 0..h.rows() {
        if h.get(r, c) {
            acc ^= (r as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
            acc = splitmix64(acc);
        }
    }
    splitmix64(acc)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A check matrix prepared for repeated decoding: the Tanner graph and the
/// matrix rank are computed once.
#[derive(Debug, Clone)]
pub struct Decoder {
    h: BitMatrix,
    graph: TannerGraph,
    h_rank: usize,
}

impl Decoder {
    pub fn new(h: &BitMatrix) -> Self {
        Self {
            h: h.clone(),
            graph: tanner(h),
            h_rank: rank(h),
        }
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.h
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    /// Runs BP, falling back to OSD-0 when BP does not converge.
    ///
    /// The returned correction always satisfies `H c = s`. The soft output
    /// is the BP posterior when BP converges; under OSD fallback it is the
    /// committed belief, the mean of the BP marginal and the committed hard
    /// bit (degenerate marginals are pinned at 1/2 and would otherwise
    /// never move a prior).
    pub fn decode<F: Scalar>(
        &self,
        syndrome: &BitVector,
        priors: &PriorVector<F>,
        max_iter: usize,
    ) -> Result<DecodeResult<F>, BposdError> {
        let bp = bp_decode(&self.graph, syndrome, priors, max_iter);
        if bp.converged {
            debug_assert_eq!(mat_vec(&self.h, &bp.hard).unwrap(), *syndrome);
            return Ok(DecodeResult {
                correction: bp.hard,
                soft: bp.soft,
                bp_converged: true,
                osd_used: false,
                iterations: bp.iterations,
            });
        }
        let correction = osd0_ranked(&self.h, syndrome, &bp.soft, self.h_rank)?;
        debug_assert_eq!(mat_vec(&self.h, &correction).unwrap(), *syndrome);
        let half = F::from(0.5).unwrap();
        let soft = bp
            .soft
            .iter()
            .enumerate()
            .map(|(i, &marginal)| {
                let committed = if correction.get(i) { F::one() } else { F::zero() };
                half * (marginal + committed)
            })
            .collect();
        Ok(DecodeResult {
            correction,
            soft,
            bp_converged: false,
            osd_used: true,
            iterations: bp.iterations,
        })
    }
}

/// One-shot decode of a syndrome against a check matrix.
pub fn decode<F: Scalar>(
    h: &BitMatrix,
    syndrome: &BitVector,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> Result<DecodeResult<F>, BposdError> {
    Decoder::new(h).decode(syndrome, priors, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{rotated_surface, unrotated_surface};
    use crate::gf2::row_reduce;

    fn syndrome_of(h: &BitMatrix, support: &[usize]) -> BitVector {
        mat_vec(h, &BitVector::from_support(h.cols(), support)).unwrap()
    }

    /// Membership of `v` in the row space of `m`.
    fn in_rowspace(m: &BitMatrix, v: &BitVector) -> bool {
        let mut rows: Vec<Vec<u8>> = (0..m.rows()).map(|r| m.row(r).to_bits()).collect();
        let base = rank(m);
        rows.push(v.to_bits());
        rank(&BitMatrix::from_rows(&rows)) == base
    }

    #[test]
    fn prior_vector_clamps_and_reports_llr() {
        let p = PriorVector::new(vec![0.0f64, 1.0, 0.3]);
        assert_eq!(p.get(0), PRIOR_FLOOR);
        assert_eq!(p.get(1), 1.0 - PRIOR_FLOOR);
        assert!(p.llr(0).is_finite() && p.llr(0) > 0.0);
        assert!(p.llr(1).is_finite() && p.llr(1) < 0.0);
        assert!((p.llr(2) - (0.7f64 / 0.3).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_syndrome_converges_immediately() {
        let code = rotated_surface(3).unwrap();
        let graph = tanner(&code.hz);
        let priors = PriorVector::uniform(code.n, 0.01f64);
        let out = bp_decode(&graph, &BitVector::zeros(code.hz.rows()), &priors, 50);
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.hard.is_zero());
        assert!(out.soft.iter().all(|&s| s < 0.5));
    }

    #[test]
    fn single_check_follows_maximum_likelihood() {
        let h = BitMatrix::from_rows(&[vec![1, 1, 1, 1]]);
        let priors = PriorVector::new(vec![0.3f64, 0.01, 0.01, 0.01]);
        let s = BitVector::from_bits(&[1]);

        // Oracle: the most likely of the 2^4 patterns consistent with s.
        let mut best = (f64::MIN, BitVector::zeros(4));
        for mask in 0u32..16 {
            let e = BitVector::from_support(
                4,
                &(0..4).filter(|i| (mask >> i) & 1 == 1).collect::<Vec<_>>(),
            );
            if mat_vec(&h, &e).unwrap() != s {
                continue;
            }
            let logp: f64 = (0..4)
                .map(|i| {
                    let p: f64 = [0.3, 0.01, 0.01, 0.01][i];
                    if e.get(i) {
                        p.ln()
                    } else {
                        (1.0 - p).ln()
                    }
                })
                .sum();
            if logp > best.0 {
                best = (logp, e);
            }
        }
        assert_eq!(best.1.to_bits(), vec![1, 0, 0, 0]);

        let out = bp_decode(&tanner(&h), &s, &priors, 50);
        assert!(out.converged);
        assert_eq!(out.hard, best.1);
    }

    #[test]
    fn unique_weight_one_explanation_is_found() {
        let code = rotated_surface(3).unwrap();
        // Qubit 0 shares no weight-2 X check in the d=3 layout orientation
        // used here only if its syndrome is unique; pick a bulk qubit with a
        // unique signature instead of assuming, then check exactness.
        let priors = PriorVector::uniform(code.n, 0.01f64);
        let decoder = Decoder::new(&code.hz);
        for q in 0..code.n {
            let unique = (0..code.n)
                .filter(|&r| code.hz.column(r) == code.hz.column(q))
                .count()
                == 1;
            if !unique {
                continue;
            }
            let s = syndrome_of(&code.hz, &[q]);
            let result = decoder.decode(&s, &priors, 50).unwrap();
            assert_eq!(
                result.correction,
                BitVector::from_support(code.n, &[q]),
                "qubit {q}"
            );
        }
    }

    #[test]
    fn osd_zero_syndrome_returns_zero() {
        let code = rotated_surface(3).unwrap();
        let soft = vec![0.3f64; code.n];
        let c = osd0(&code.hz, &BitVector::zeros(code.hz.rows()), &soft).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn osd_two_by_two_substitution() {
        let h = BitMatrix::from_rows(&[vec![1, 1], vec![0, 1]]);
        let s = BitVector::from_bits(&[1, 0]);
        let c = osd0(&h, &s, &[0.9f64, 0.1]).unwrap();
        assert_eq!(c.to_bits(), vec![1, 0]);
    }

    #[test]
    fn osd_commits_to_one_class_of_a_degenerate_syndrome() {
        // The errors {0,5} and {3,6} share a syndrome and differ by a
        // logical operator. Uniform priors tie their likelihoods exactly;
        // OSD must return a valid correction equivalent to exactly one of
        // them, and the same one on every call.
        let code = rotated_surface(4).unwrap();
        let a = BitVector::from_support(code.n, &[0, 5]);
        let b = BitVector::from_support(code.n, &[3, 6]);
        let s = mat_vec(&code.hz, &a).unwrap();
        assert_eq!(s, mat_vec(&code.hz, &b).unwrap());
        assert!(in_rowspace(&code.hx, &a.xor(&b).xor(&code.logical_x)));

        let priors = PriorVector::uniform(code.n, 0.01f64);
        let bp = bp_decode(&tanner(&code.hz), &s, &priors, 50);
        let c = osd0(&code.hz, &s, &bp.soft).unwrap();
        assert_eq!(mat_vec(&code.hz, &c).unwrap(), s);
        let a_ok = in_rowspace(&code.hx, &a.xor(&c));
        let b_ok = in_rowspace(&code.hx, &b.xor(&c));
        assert!(a_ok ^ b_ok, "exactly one class must be committed");
        assert_eq!(c, osd0(&code.hz, &s, &bp.soft).unwrap());
    }

    #[test]
    fn elevated_prior_breaks_the_partner_tie() {
        let code = rotated_surface(4).unwrap();
        let partner = code.weight_two_partner(0).unwrap();
        let s = syndrome_of(&code.hz, &[0]);
        let decoder = Decoder::new(&code.hz);

        let eps = 0.001f64;
        let on_zero = decoder
            .decode(&s, &PriorVector::uniform(code.n, eps).with_site(0, 1.0 / 3.0), 50)
            .unwrap();
        assert_eq!(on_zero.correction, BitVector::from_support(code.n, &[0]));

        let on_partner = decoder
            .decode(
                &s,
                &PriorVector::uniform(code.n, eps).with_site(partner, 1.0 / 3.0),
                50,
            )
            .unwrap();
        assert_eq!(
            on_partner.correction,
            BitVector::from_support(code.n, &[partner])
        );
    }

    #[test]
    fn elevated_prior_matches_likelihood_oracle_on_weight_bounded_search() {
        let code = rotated_surface(4).unwrap();
        let s = syndrome_of(&code.hz, &[0]);
        let rates: Vec<f64> = (0..code.n)
            .map(|i| if i == 0 { 1.0 / 3.0 } else { 0.001 })
            .collect();

        // Likelihood oracle over all candidates of weight <= 3.
        let mut best: Option<(f64, BitVector)> = None;
        for e in crate::noise::enumerate_errors(code.n, Some(3)).unwrap() {
            if mat_vec(&code.hz, &e).unwrap() != s {
                continue;
            }
            let logp: f64 = (0..code.n)
                .map(|i| if e.get(i) { rates[i].ln() } else { (1.0 - rates[i]).ln() })
                .sum();
            if best.as_ref().is_none_or(|(b, _)| logp > *b) {
                best = Some((logp, e));
            }
        }
        let oracle = best.unwrap().1;
        assert_eq!(oracle, BitVector::from_support(code.n, &[0]));

        let priors = PriorVector::new(rates);
        let result = decode(&code.hz, &s, &priors, 50).unwrap();
        assert_eq!(result.correction, oracle);
    }

    #[test]
    fn uniform_tie_keeps_syndrome_consistency() {
        let code = rotated_surface(4).unwrap();
        let s = syndrome_of(&code.hz, &[0]);
        let priors = PriorVector::uniform(code.n, 0.001f64);
        let result = decode(&code.hz, &s, &priors, 50).unwrap();
        assert_eq!(mat_vec(&code.hz, &result.correction).unwrap(), s);
        // Exactly two weight-1 candidates explain this syndrome.
        let candidates: Vec<usize> = (0..code.n)
            .filter(|&q| syndrome_of(&code.hz, &[q]) == s)
            .collect();
        assert_eq!(candidates.len(), 2);
        assert!(candidates.contains(&result.correction.ones().next().unwrap()));
        assert_eq!(result.correction.weight(), 1);
    }

    #[test]
    fn decode_is_deterministic() {
        let code = rotated_surface(4).unwrap();
        let priors = PriorVector::uniform(code.n, 0.003f64);
        let decoder = Decoder::new(&code.hz);
        for support in [vec![0], vec![3, 7], vec![1, 5, 12]] {
            let s = syndrome_of(&code.hz, &support);
            let a = decoder.decode(&s, &priors, 50).unwrap();
            let b = decoder.decode(&s, &priors, 50).unwrap();
            assert_eq!(a.correction, b.correction);
            assert_eq!(a.soft, b.soft);
            assert_eq!(a.iterations, b.iterations);
        }
    }

    #[test]
    fn every_syndrome_decodes_consistently() {
        // All 2^m syndromes are achievable: the check matrices here have
        // full row rank.
        for code in [
            rotated_surface(3).unwrap(),
            rotated_surface(4).unwrap(),
            unrotated_surface(3).unwrap(),
        ] {
            let m = code.hz.rows();
            assert_eq!(rank(&code.hz), m);
            let decoder = Decoder::new(&code.hz);
            let priors = PriorVector::uniform(code.n, 0.01f64);
            for mask in 0u32..(1u32 << m) {
                let mut s = BitVector::zeros(m);
                for a in 0..m {
                    s.set(a, (mask >> a) & 1 == 1);
                }
                let result = decoder.decode(&s, &priors, 50).unwrap();
                assert_eq!(
                    mat_vec(&code.hz, &result.correction).unwrap(),
                    s,
                    "{} syndrome {mask:b}",
                    code.name
                );
                assert_eq!(result.osd_used, !result.bp_converged);
            }
        }
    }

    #[test]
    fn decoder_works_in_f32() {
        let code = rotated_surface(3).unwrap();
        let priors = PriorVector::uniform(code.n, 0.01f32);
        let s = syndrome_of(&code.hz, &[4]);
        let result = decode(&code.hz, &s, &priors, 50).unwrap();
        assert_eq!(mat_vec(&code.hz, &result.correction).unwrap(), s);
    }

    #[test]
    fn row_reduce_of_checks_has_full_rank_rows() {
        // Guard for the exhaustive-syndrome test's rank assumption.
        let code = rotated_surface(4).unwrap();
        assert_eq!(row_reduce(&code.hz).pivot_cols.len(), code.hz.rows());
    }
}
