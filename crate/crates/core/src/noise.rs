//! Independent bit-flip error models.
//!
//! An [`ErrorModel`] assigns every qubit a flip probability: a shared
//! background rate plus per-site overrides (the "one bad qubit" models use a
//! single override). The module supplies seeded sampling, exact error
//! probabilities evaluated in log space, exhaustive and weight-capped
//! enumeration, and the Poisson-binomial tail bound used to bracket
//! weight-capped failure sums.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::gf2::BitVector;
use crate::Scalar;

/// Errors reported by the noise layer.
#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("flip rate {rate} is outside [0, 1]")]
    RateOutOfRange { rate: f64 },
    #[error("qubit index {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("enumeration of {count} errors exceeds the supported limit of {limit}")]
    InfeasibleEnumeration { count: u128, limit: u128 },
    #[error("unbounded enumeration limited to {limit} qubits, got {n}")]
    UnboundedTooWide { n: usize, limit: usize },
    #[error("error vector length {len} does not match qubit count {n}")]
    LengthMismatch { len: usize, n: usize },
}

/// Widest register accepted for full `2^n` enumeration.
pub const UNBOUNDED_QUBIT_LIMIT: usize = 20;
/// Largest number of error patterns a capped enumeration may produce.
pub const ENUMERATION_LIMIT: u128 = 1 << 28;

/// Independent per-qubit bit-flip probabilities.
#[derive(Debug, Clone)]
pub struct ErrorModel<F: Scalar> {
    n: usize,
    base_rate: F,
    overrides: BTreeMap<usize, F>,
}

impl<F: Scalar> ErrorModel<F> {
    /// A model where every qubit flips with probability `base_rate`.
    pub fn new(n: usize, base_rate: F) -> Result<Self, NoiseError> {
        check_rate(base_rate)?;
        Ok(Self {
            n,
            base_rate,
            overrides: BTreeMap::new(),
        })
    }

    /// Overrides the rate of a single site.
    pub fn with_override(mut self, site: usize, rate: F) -> Result<Self, NoiseError> {
        if site >= self.n {
            return Err(NoiseError::SiteOutOfRange { site, n: self.n });
        }
        check_rate(rate)?;
        self.overrides.insert(site, rate);
        Ok(self)
    }

    /// Same overrides on a different background rate (used by sweeps).
    pub fn with_base_rate(&self, base_rate: F) -> Result<Self, NoiseError> {
        check_rate(base_rate)?;
        Ok(Self {
            n: self.n,
            base_rate,
            overrides: self.overrides.clone(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn base_rate(&self) -> F {
        self.base_rate
    }

    pub fn overrides(&self) -> &BTreeMap<usize, F> {
        &self.overrides
    }

    /// Effective flip rate of qubit `i`.
    pub fn rate(&self, i: usize) -> F {
        *self.overrides.get(&i).unwrap_or(&self.base_rate)
    }

    /// All effective rates in index order.
    pub fn effective_rates(&self) -> Vec<F> {
        (0..self.n).map(|i| self.rate(i)).collect()
    }

    /// Draws one error pattern; each bit flips independently.
    pub fn sample_error<R: Rng>(&self, rng: &mut R) -> BitVector {
        let mut e = BitVector::zeros(self.n);
        for i in 0..self.n {
            let p = self.rate(i).to_f64().expect("rate fits in f64");
            if rng.gen_bool(p) {
                e.set(i, true);
            }
        }
        e
    }

    /// Exact probability of the pattern `e` under this model.
    ///
    /// Accumulated in log space; products over dozens of factors at small
    /// rates underflow in direct form.
    pub fn error_probability(&self, e: &BitVector) -> Result<F, NoiseError> {
        if e.len() != self.n {
            return Err(NoiseError::LengthMismatch {
                len: e.len(),
                n: self.n,
            });
        }
        let mut log_p = F::zero();
        for i in 0..self.n {
            let p = self.rate(i);
            log_p = log_p + if e.get(i) { p.ln() } else { (F::one() - p).ln() };
        }
        Ok(log_p.exp())
    }

    /// Distribution of the total error weight (Poisson binomial), by direct
    /// convolution of the per-qubit Bernoulli factors.
    pub fn weight_distribution(&self) -> Vec<F> {
        let mut dist = vec![F::zero(); self.n + 1];
        dist[0] = F::one();
        for i in 0..self.n {
            let p = self.rate(i);
            let q = F::one() - p;
            for k in (0..=i).rev() {
                let v = dist[k];
                dist[k + 1] = dist[k + 1] + v * p;
                dist[k] = v * q;
            }
        }
        dist
    }

    /// Probability that a sampled error has weight strictly above
    /// `max_weight`.
    pub fn tail_probability(&self, max_weight: usize) -> F {
        if max_weight >= self.n {
            return F::zero();
        }
        let dist = self.weight_distribution();
        dist[max_weight + 1..].iter().fold(F::zero(), |a, &b| a + b)
    }
}

fn check_rate<F: Scalar>(rate: F) -> Result<(), NoiseError> {
    if rate < F::zero() || rate > F::one() || rate.is_nan() {
        return Err(NoiseError::RateOutOfRange {
            rate: rate.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Number of patterns `enumerate_errors` will yield.
pub fn enumeration_len(n: usize, max_weight: Option<usize>) -> u128 {
    match max_weight {
        None => 1u128 << n,
        Some(cap) => (0..=cap.min(n)).map(|w| binomial(n, w)).sum(),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Streams every error pattern exactly once, in weight-then-lexicographic
/// order.
///
/// Unbounded mode yields all `2^n` patterns (and is limited to small `n`);
/// capped mode yields patterns of weight at most `max_weight`. Both modes
/// share the same ordering, so a cap of `n` reproduces the unbounded stream
/// term for term — weight-capped sums then agree bit-for-bit with exact
/// ones.
pub fn enumerate_errors(
    n: usize,
    max_weight: Option<usize>,
) -> Result<ErrorEnumerator, NoiseError> {
    let cap = match max_weight {
        None => {
            if n > UNBOUNDED_QUBIT_LIMIT {
                return Err(NoiseError::UnboundedTooWide {
                    n,
                    limit: UNBOUNDED_QUBIT_LIMIT,
                });
            }
            n
        }
        Some(cap) => {
            let count = enumeration_len(n, Some(cap));
            if count > ENUMERATION_LIMIT {
                return Err(NoiseError::InfeasibleEnumeration {
                    count,
                    limit: ENUMERATION_LIMIT,
                });
            }
            cap.min(n)
        }
    };
    Ok(ErrorEnumerator {
        n,
        cap,
        weight: 0,
        combo: Vec::new(),
        started: false,
        done: false,
    })
}

/// Iterator created by [`enumerate_errors`].
pub struct ErrorEnumerator {
    n: usize,
    cap: usize,
    weight: usize,
    combo: Vec<usize>,
    started: bool,
    done: bool,
}

impl Iterator for ErrorEnumerator {
    type Item = BitVector;

    fn next(&mut self) -> Option<BitVector> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(BitVector::zeros(self.n)); // weight 0
        }
        if !next_combination(&mut self.combo, self.n) {
            self.weight += 1;
            if self.weight > self.cap {
                self.done = true;
                return None;
            }
            self.combo = (0..self.weight).collect();
        }
        Some(BitVector::from_support(self.n, &self.combo))
    }
}

/// Advances a k-combination of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let w = combo.len();
    let mut i = w;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (w - i) {
            combo[i] += 1;
            for j in i + 1..w {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
