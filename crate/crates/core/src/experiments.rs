//! Logical-failure experiments on a bit-flip channel.
//!
//! The workhorse is an exhaustive quantum-memory evaluation: enumerate error
//! patterns (all of them for small codes, weight-capped for larger ones),
//! decode each distinct syndrome once through a syndrome-keyed cache, and
//! sum the probabilities of the patterns whose correction leaves a logical
//! residual. Weight-capped runs carry the Poisson-binomial tail mass as a
//! separate bound rather than folding it into the failure figure.
//!
//! On top of that sit the three standard prior/noise pairings (identical
//! qubits, unknown bad qubit, known bad qubit), log-log scaling fits over an
//! epsilon grid, and an exhaustive check that a known high-rate site plus a
//! bounded number of unknown flips is always corrected.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bposd::{BposdError, Decoder, PriorVector};
use crate::codes::CssCode;
use crate::gf2::{mat_vec, BitVector};
use crate::noise::{enumerate_errors, ErrorModel, NoiseError};
use crate::Scalar;

/// Errors reported by the experiment layer.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("residual error has a nonzero syndrome: the correction does not decode this error")]
    ResidualSyndrome,
    #[error("exact enumeration limited to {limit} qubits, got {n}; use the weight-capped evaluation")]
    TooLargeForExact { n: usize, limit: usize },
    #[error("scaling fit needs at least two points, got {0}")]
    FitUnderdetermined(usize),
    #[error("scaling fit requires positive coordinates, got ({epsilon}, {failure})")]
    FitNonpositive { epsilon: f64, failure: f64 },
    #[error("known sites and unknown budget must satisfy n1 + 2*n2 < d, got {n1} + 2*{n2} with d = {d}")]
    LemmaPrecondition { n1: usize, n2: usize, d: usize },
    #[error("site index {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Decode(#[from] BposdError),
}

/// Largest code evaluated by full `2^n` enumeration; bigger codes are
/// dispatched to the weight-capped path.
pub const EXACT_QUBIT_LIMIT: usize = 20;
/// Default enumeration cap for codes above the exact limit.
pub const DEFAULT_WEIGHT_CAP: usize = 6;
/// Default epsilon grid for scaling fits, logarithmically spread.
pub const DEFAULT_EPSILON_GRID: [f64; 4] = [1e-3, 2e-3, 5e-3, 1e-2];

/// The three prior/noise pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// Uniform noise, uniform priors.
    IdenticalQubits,
    /// One hot site in the noise, uniform priors.
    UnknownBadQubit,
    /// One hot site in both the noise and the priors.
    KnownBadQubit,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [
        CaseId::IdenticalQubits,
        CaseId::UnknownBadQubit,
        CaseId::KnownBadQubit,
    ];

    /// 1-based index used by CLI flags.
    pub fn number(self) -> u8 {
        match self {
            CaseId::IdenticalQubits => 1,
            CaseId::UnknownBadQubit => 2,
            CaseId::KnownBadQubit => 3,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::IdenticalQubits => "identical_qubits",
            CaseId::UnknownBadQubit => "unknown_bad_qubit",
            CaseId::KnownBadQubit => "known_bad_qubit",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "identical_qubits" => Ok(CaseId::IdenticalQubits),
            "2" | "unknown_bad_qubit" => Ok(CaseId::UnknownBadQubit),
            "3" | "known_bad_qubit" => Ok(CaseId::KnownBadQubit),
            other => Err(format!("unknown case '{other}' (expected 1, 2, or 3)")),
        }
    }
}

/// Parameters for one evaluated point.
#[derive(Debug, Clone)]
pub struct CaseSpec<F: Scalar> {
    pub case: CaseId,
    /// Background flip rate.
    pub epsilon: F,
    /// Flip rate of the bad site (cases 2 and 3).
    pub p_star: F,
    pub bad_site: usize,
}

/// One evaluated failure-probability point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub code: String,
    pub d: usize,
    pub case: String,
    pub epsilon: f64,
    /// Probability-weighted logical failure over the enumerated patterns.
    pub failure: f64,
    /// Probability mass above the weight cap (0 for exact runs); reported
    /// separately, never added to `failure`.
    pub tail: f64,
    pub seed: u64,
    #[serde(skip)]
    pub cache_hits: u64,
    #[serde(skip)]
    pub decodes: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Whether the residual `e XOR c` acts as a logical operator.
///
/// The correction must actually decode the error (zero residual syndrome);
/// the failure indicator is then the overlap parity of the residual with the
/// logical-Z representative.
pub fn logical_failure(
    code: &CssCode,
    error: &BitVector,
    correction: &BitVector,
) -> Result<bool, ExperimentError> {
    let residual = error.xor(correction);
    if !mat_vec(&code.hz, &residual)
        .map_err(|_| ExperimentError::ResidualSyndrome)?
        .is_zero()
    {
        return Err(ExperimentError::ResidualSyndrome);
    }
    Ok(residual.overlap_parity(&code.logical_z))
}

/// Exhaustive failure probability over all `2^n` error patterns.
pub fn exact_failure_probability<F: Scalar>(
    code: &CssCode,
    model: &ErrorModel<F>,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> Result<FailureRecord, ExperimentError> {
    if code.n > EXACT_QUBIT_LIMIT {
        return Err(ExperimentError::TooLargeForExact {
            n: code.n,
            limit: EXACT_QUBIT_LIMIT,
        });
    }
    evaluate(code, model, priors, None, max_iter)
}

/// Failure probability restricted to patterns of weight at most
/// `max_weight`, with the remaining mass reported as `tail`.
pub fn capped_failure_probability<F: Scalar>(
    code: &CssCode,
    model: &ErrorModel<F>,
    priors: &PriorVector<F>,
    max_weight: usize,
    max_iter: usize,
) -> Result<FailureRecord, ExperimentError> {
    evaluate(code, model, priors, Some(max_weight), max_iter)
}

/// Size-dispatched evaluation: exact for small codes, weight-capped at
/// [`DEFAULT_WEIGHT_CAP`] above [`EXACT_QUBIT_LIMIT`] qubits.
pub fn failure_probability<F: Scalar>(
    code: &CssCode,
    model: &ErrorModel<F>,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> Result<FailureRecord, ExperimentError> {
    if code.n <= EXACT_QUBIT_LIMIT {
        exact_failure_probability(code, model, priors, max_iter)
    } else {
        capped_failure_probability(code, model, priors, DEFAULT_WEIGHT_CAP, max_iter)
    }
}

fn evaluate<F: Scalar>(
    code: &CssCode,
    model: &ErrorModel<F>,
    priors: &PriorVector<F>,
    cap: Option<usize>,
    max_iter: usize,
) -> Result<FailureRecord, ExperimentError> {
    let start = Instant::now();
    let n = code.n;
    let decoder = Decoder::new(&code.hz);
    let logical = &code.logical_z;

    // Per-qubit syndrome columns: the syndrome of any pattern is the XOR of
    // the columns on its support.
    let columns: Vec<BitVector> = (0..n).map(|q| code.hz.column(q)).collect();

    // Log-probability pieces. Patterns differ from the all-zero pattern by
    // one delta term per set bit; rates of exactly 0 or 1 fall back to the
    // direct product to avoid inf - inf.
    let rates = model.effective_rates();
    let degenerate = rates.iter().any(|&p| p == F::zero() || p == F::one());
    let base_log: F = rates.iter().map(|&p| (F::one() - p).ln()).sum();
    let deltas: Vec<F> = rates
        .iter()
        .map(|&p| p.ln() - (F::one() - p).ln())
        .collect();

    // Decode each distinct syndrome once; only the logical parity of the
    // cached correction matters for the failure sum.
    let mut cache: HashMap<BitVector, bool> = HashMap::new();
    let mut cache_hits = 0u64;
    let mut syndrome = BitVector::zeros(code.hz.rows());

    // Kahan-compensated failure sum keeps the reduction order-stable.
    let mut failure = F::zero();
    let mut compensation = F::zero();

    for error in enumerate_errors(n, cap)? {
        syndrome.clear();
        for i in error.ones() {
            syndrome.xor_assign(&columns[i]);
        }
        let correction_parity = match cache.get(&syndrome) {
            Some(&parity) => {
                cache_hits += 1;
                parity
            }
            None => {
                let result = decoder.decode(&syndrome, priors, max_iter)?;
                debug_assert_eq!(mat_vec(&code.hz, &result.correction).unwrap(), syndrome);
                let parity = result.correction.overlap_parity(logical);
                cache.insert(syndrome.clone(), parity);
                parity
            }
        };
        if error.overlap_parity(logical) != correction_parity {
            let log_p = if degenerate {
                model.error_probability(&error)?.ln()
            } else {
                error.ones().fold(base_log, |acc, i| acc + deltas[i])
            };
            let term = log_p.exp();
            let y = term - compensation;
            let t = failure + y;
            compensation = (t - failure) - y;
            failure = t;
        }
    }

    let tail = match cap {
        Some(w) => model.tail_probability(w),
        None => F::zero(),
    };

    Ok(FailureRecord {
        code: code.name.clone(),
        d: code.d,
        case: String::new(),
        epsilon: model.base_rate().to_f64().unwrap(),
        failure: failure.to_f64().unwrap(),
        tail: tail.to_f64().unwrap(),
        seed: 0,
        cache_hits,
        decodes: cache.len() as u64,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Builds the model/prior pairing for a case and evaluates it, dispatching
/// on code size.
pub fn run_case<F: Scalar>(
    code: &CssCode,
    spec: &CaseSpec<F>,
    max_iter: usize,
    seed: u64,
) -> Result<FailureRecord, ExperimentError> {
    if spec.bad_site >= code.n {
        return Err(ExperimentError::SiteOutOfRange {
            site: spec.bad_site,
            n: code.n,
        });
    }
    let base = ErrorModel::new(code.n, spec.epsilon)?;
    let model = match spec.case {
        CaseId::IdenticalQubits => base,
        CaseId::UnknownBadQubit | CaseId::KnownBadQubit => {
            base.with_override(spec.bad_site, spec.p_star)?
        }
    };
    let priors = match spec.case {
        CaseId::IdenticalQubits | CaseId::UnknownBadQubit => {
            PriorVector::uniform(code.n, spec.epsilon)
        }
        CaseId::KnownBadQubit => {
            PriorVector::uniform(code.n, spec.epsilon).with_site(spec.bad_site, spec.p_star)
        }
    };
    let mut record = failure_probability(code, &model, &priors, max_iter)?;
    record.case = spec.case.to_string();
    record.seed = seed;
    Ok(record)
}

/// Least-squares line through `(ln epsilon, ln failure)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope: the fitted scaling exponent.
    pub slope: f64,
    /// Intercept in natural-log space.
    pub intercept: f64,
    /// Sum of squared residuals of the fit.
    pub residual: f64,
}

/// Fits `ln f = slope * ln eps + intercept` by least squares.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit, ExperimentError> {
    if points.len() < 2 {
        return Err(ExperimentError::FitUnderdetermined(points.len()));
    }
    for &(epsilon, failure) in points {
        if epsilon <= 0.0 || failure <= 0.0 {
            return Err(ExperimentError::FitNonpositive { epsilon, failure });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(e, f)| (e.ln(), f.ln())).collect();
    let len = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual: f64 = logs
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
    })
}

/// First error in the known-sites-plus-bounded-unknowns class that the
/// decoder fails to correct, if any.
///
/// The class is every pattern with arbitrary support on `known_sites` plus
/// at most `n2` flips elsewhere; the precondition `n1 + 2 n2 < d` is the
/// regime where full correction is possible in principle.
pub fn lemma_counterexample<F: Scalar>(
    code: &CssCode,
    known_sites: &[usize],
    n2: usize,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> Result<Option<BitVector>, ExperimentError> {
    let mut known: Vec<usize> = known_sites.to_vec();
    known.sort_unstable();
    known.dedup();
    for &site in &known {
        if site >= code.n {
            return Err(ExperimentError::SiteOutOfRange { site, n: code.n });
        }
    }
    let n1 = known.len();
    if n1 + 2 * n2 >= code.d {
        return Err(ExperimentError::LemmaPrecondition { n1, n2, d: code.d });
    }

    let others: Vec<usize> = (0..code.n).filter(|q| !known.contains(q)).collect();
    let decoder = Decoder::new(&code.hz);

    for mask in 0u32..(1u32 << n1) {
        let mut base = BitVector::zeros(code.n);
        for (bit, &site) in known.iter().enumerate() {
            if (mask >> bit) & 1 == 1 {
                base.set(site, true);
            }
        }
        for unknown in enumerate_errors(others.len(), Some(n2))? {
            let mut error = base.clone();
            for j in unknown.ones() {
                error.set(others[j], true);
            }
            let syndrome = mat_vec(&code.hz, &error).expect("shape fixed by construction");
            let result = decoder.decode(&syndrome, priors, max_iter)?;
            if logical_failure(code, &error, &result.correction)? {
                return Ok(Some(error));
            }
        }
    }
    Ok(None)
}

/// True when every error in the known/unknown class decodes without logical
/// failure.
pub fn lemma_check<F: Scalar>(
    code: &CssCode,
    known_sites: &[usize],
    n2: usize,
    priors: &PriorVector<F>,
    max_iter: usize,
) -> Result<bool, ExperimentError> {
    Ok(lemma_counterexample(code, known_sites, n2, priors, max_iter)?.is_none())
}
