//! Closed-loop protocols: learning priors from decoder output, and
//! calibrating a single-qubit rotation while the code keeps protecting the
//! logical state.
//!
//! Prior learning runs repeated memory rounds (sample an error, measure the
//! syndrome, decode) and folds the decoder's soft output back into the prior
//! vector with a fixed-gain exponential update: `p <- p + gain * (b - p)`.
//! With a static channel the priors converge toward the decoder's belief at
//! rate `1 - gain` per round. The loop floors its estimates at the smallest
//! starting rate; see [`LearningState`].
//!
//! Calibration drives the control angle of a rotation applied to one target
//! qubit. Each round flips the target with probability
//! `sin^2((theta + theta0)/2)` (`theta0` is the hidden offset), decodes, and
//! nudges `theta` against the single-shot indicator `b = 1 iff the
//! correction touches the target`. The update
//! `theta <- theta - sgn * |gain| * (b - p_target)` with
//! `sgn = sign(sin(theta_target/2))` has a stable fixed point where the
//! total angle reaches `theta_target` and an unstable one at
//! `-theta_target`. The feedback sees only `b`; the hidden offset is
//! consumed inside the sampling step and never reaches the controller.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::bposd::{BposdError, DecodeResult, Decoder, PriorVector};
use crate::codes::CssCode;
use crate::experiments::{
    failure_probability, fit_scaling, ExperimentError, FailureRecord, ScalingFit,
};
use crate::gf2::{mat_vec, BitVector};
use crate::noise::{ErrorModel, NoiseError};
use crate::Scalar;

/// Errors reported by the feedback loops.
#[derive(Debug, Error)]
pub enum AdaptiveError {
    #[error("gain {gain} outside the half-open interval (0, 1]")]
    GainOutOfRange { gain: f64 },
    #[error("angle gain must be nonzero and finite, got {gain}")]
    AngleGainInvalid { gain: f64 },
    #[error("target angle {theta} outside the open interval (-pi, pi)")]
    TargetAngleOutOfRange { theta: f64 },
    #[error("at least one round required")]
    ZeroRounds,
    #[error("target qubit {site} out of range for {n} qubits")]
    TargetOutOfRange { site: usize, n: usize },
    #[error("background model must not flip the target qubit {site}; the gate supplies that channel")]
    BackgroundOnTarget { site: usize },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Decode(#[from] BposdError),
}

/// Default learning gain.
pub const DEFAULT_GAIN: f64 = 0.01;
/// Default calibration angle gain.
pub const DEFAULT_GAIN_THETA: f64 = 0.02;
/// Default target rotation angle; the support indicator needs flip rates
/// below 1/2, so a third of pi rather than the Ramsey point.
pub const DEFAULT_THETA_TARGET: f64 = std::f64::consts::FRAC_PI_3;
/// Default hidden rotation offset for simulations.
pub const DEFAULT_THETA_OFFSET: f64 = 0.3;
/// Default background flip rate during the loops.
pub const DEFAULT_BACKGROUND_RATE: f64 = 1e-3;
/// Runs up to this many rounds keep a snapshot every round; longer runs
/// stride the history.
pub const HISTORY_FULL_LIMIT: usize = 10_000;
const HISTORY_STRIDE: usize = 10;

/// One exponential step of every prior toward the decoder's soft output.
pub fn kalman_update<F: Scalar>(
    priors: &PriorVector<F>,
    soft: &[F],
    gain: F,
) -> Result<PriorVector<F>, AdaptiveError> {
    check_gain(gain)?;
    assert_eq!(priors.len(), soft.len(), "soft output length mismatch");
    debug_assert!(soft.iter().all(|&b| b >= F::zero() && b <= F::one()));
    let updated: Vec<F> = priors
        .as_slice()
        .iter()
        .zip(soft)
        .map(|(&p, &b)| p + gain * (b - p))
        .collect();
    Ok(PriorVector::new(updated))
}

fn check_gain<F: Scalar>(gain: F) -> Result<(), AdaptiveError> {
    if gain <= F::zero() || gain > F::one() {
        return Err(AdaptiveError::GainOutOfRange {
            gain: gain.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Strided snapshot of the prior vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSnapshot<F: Scalar> {
    pub round: usize,
    pub priors: Vec<F>,
}

/// State of the prior-learning loop.
///
/// Estimates are floored at the smallest starting rate. A fixed-gain filter
/// cannot resolve rates below its baseline, and letting quiet qubits drift
/// downward without bound builds up absurd odds against them: a handful of
/// rounds after a stretch of clean syndromes, the decoder would rather blame
/// a cluster of recently flipped qubits than a single "impossibly quiet"
/// one.
#[derive(Debug, Clone)]
pub struct LearningState<F: Scalar> {
    pub priors: PriorVector<F>,
    pub gain: F,
    pub round: usize,
    pub history: Vec<PriorSnapshot<F>>,
    stride: usize,
    floor: F,
}

impl<F: Scalar> LearningState<F> {
    pub fn new(priors: PriorVector<F>, gain: F, stride: usize) -> Result<Self, AdaptiveError> {
        check_gain(gain)?;
        let floor = priors
            .as_slice()
            .iter()
            .copied()
            .fold(F::one(), F::min);
        let mut state = Self {
            priors,
            gain,
            round: 0,
            history: Vec::new(),
            stride: stride.max(1),
            floor,
        };
        state.snapshot();
        Ok(state)
    }

    /// Lowest rate the filter will report, taken from the starting priors.
    pub fn floor(&self) -> F {
        self.floor
    }

    fn snapshot(&mut self) {
        self.history.push(PriorSnapshot {
            round: self.round,
            priors: self.priors.as_slice().to_vec(),
        });
    }

    fn absorb(&mut self, soft: &[F]) -> Result<(), AdaptiveError> {
        let mut updated = kalman_update(&self.priors, soft, self.gain)?;
        for i in 0..updated.len() {
            if updated.get(i) < self.floor {
                updated.set(i, self.floor);
            }
        }
        self.priors = updated;
        self.round += 1;
        if self.round.is_multiple_of(self.stride) {
            self.snapshot();
        }
        Ok(())
    }
}

/// One memory round: sample an error from the truth model, decode its
/// syndrome with the current priors, and absorb the soft output.
///
/// Returns the decode result and the sampled error for bookkeeping.
pub fn memory_round<F: Scalar, R: Rng>(
    code: &CssCode,
    truth: &ErrorModel<F>,
    state: &mut LearningState<F>,
    rng: &mut R,
    max_iter: usize,
) -> Result<(DecodeResult<F>, BitVector), AdaptiveError> {
    let error = truth.sample_error(rng);
    let syndrome = mat_vec(&code.hz, &error).expect("model sized to the code");
    let result = Decoder::new(&code.hz).decode(&syndrome, &state.priors, max_iter)?;
    state.absorb(&result.soft)?;
    Ok((result, error))
}

/// Output of [`run_learning`].
#[derive(Debug, Clone)]
pub struct LearningRun<F: Scalar> {
    pub history: Vec<PriorSnapshot<F>>,
    pub initial_priors: PriorVector<F>,
    pub final_priors: PriorVector<F>,
    /// Failure sweep with the initial priors, on the bad-qubit model.
    pub before: Vec<FailureRecord>,
    /// Failure sweep with the learned priors.
    pub after: Vec<FailureRecord>,
    pub before_fit: ScalingFit,
    pub after_fit: ScalingFit,
    /// Mean BP soft value over positions where the correction bit was 1.
    pub flagged_soft_mean: Option<f64>,
    pub flagged_soft_count: u64,
}

/// Runs `rounds` memory rounds from uniform priors at the truth's background
/// rate, then sweeps the epsilon grid twice: once with the starting priors
/// and once with the learned ones.
pub fn run_learning<F: Scalar>(
    code: &CssCode,
    truth: &ErrorModel<F>,
    gain: F,
    rounds: usize,
    seed: u64,
    grid: &[f64],
    max_iter: usize,
) -> Result<LearningRun<F>, AdaptiveError> {
    if rounds == 0 {
        return Err(AdaptiveError::ZeroRounds);
    }
    let initial_priors = PriorVector::uniform(code.n, truth.base_rate());
    let stride = if rounds <= HISTORY_FULL_LIMIT {
        1
    } else {
        HISTORY_STRIDE
    };
    let mut state = LearningState::new(initial_priors.clone(), gain, stride)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let decoder = Decoder::new(&code.hz);

    let mut flagged_sum = 0.0f64;
    let mut flagged_count = 0u64;
    for _ in 0..rounds {
        let error = truth.sample_error(&mut rng);
        let syndrome = mat_vec(&code.hz, &error).expect("model sized to the code");
        let result = decoder.decode(&syndrome, &state.priors, max_iter)?;
        for i in result.correction.ones() {
            flagged_sum += result.soft[i].to_f64().unwrap();
            flagged_count += 1;
        }
        state.absorb(&result.soft)?;
    }

    let sweep =
        |priors: &PriorVector<F>, label: &str| -> Result<Vec<FailureRecord>, AdaptiveError> {
            grid.iter()
                .map(|&eps| {
                    let model = truth.with_base_rate(F::from(eps).unwrap())?;
                    let mut rec = failure_probability(code, &model, priors, max_iter)?;
                    rec.case = label.to_string();
                    rec.epsilon = eps;
                    rec.seed = seed;
                    Ok(rec)
                })
                .collect()
        };
    let before = sweep(&initial_priors, "initial_priors")?;
    let after = sweep(&state.priors, "learned_priors")?;
    let points = |records: &[FailureRecord]| -> Vec<(f64, f64)> {
        records.iter().map(|r| (r.epsilon, r.failure)).collect()
    };
    let before_fit = fit_scaling(&points(&before))?;
    let after_fit = fit_scaling(&points(&after))?;

    Ok(LearningRun {
        history: std::mem::take(&mut state.history),
        initial_priors,
        final_priors: state.priors,
        before,
        after,
        before_fit,
        after_fit,
        flagged_soft_mean: (flagged_count > 0).then(|| flagged_sum / flagged_count as f64),
        flagged_soft_count: flagged_count,
    })
}

/// Flip probability induced by a total rotation angle: `sin^2(theta/2)`.
pub fn gate_flip_probability<F: Scalar>(theta_tot: F) -> F {
    let half = theta_tot / F::from(2.0).unwrap();
    half.sin() * half.sin()
}

/// The angle update: `theta - sgn * |gain| * (b - p_target)` with
/// `sgn = sign(sin(theta_target / 2))`.
///
/// With `b` replaced by its expectation the map has a stable fixed point
/// where the total rotation equals `theta_target` and an unstable one at
/// `-theta_target`.
pub fn calibration_step<F: Scalar>(
    theta: F,
    b: F,
    p_target: F,
    gain_theta: F,
    theta_target: F,
) -> F {
    let sgn = (theta_target / F::from(2.0).unwrap()).sin().signum();
    theta - sgn * gain_theta.abs() * (b - p_target)
}

/// Per-round calibration record.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRound<F: Scalar> {
    pub round: usize,
    /// Control angle applied this round.
    pub theta: F,
    /// Total rotation actually applied (control plus hidden offset).
    pub theta_tot: F,
    /// Whether the correction was supported on the target qubit.
    pub flagged: bool,
    /// Learned prior of the target qubit after the round.
    pub prior_target: F,
    /// Median learned prior of the other qubits after the round.
    pub prior_median_others: F,
}

/// State of the gate-calibration loop.
///
/// The hidden offset is private by design: it feeds the flip sampling and
/// the diagnostic history, never the feedback path.
#[derive(Debug, Clone)]
pub struct CalibrationState<F: Scalar> {
    pub theta: F,
    theta0: F,
    pub theta_target: F,
    pub gain_theta: F,
    pub learning: LearningState<F>,
    pub target_qubit: usize,
    pub history: Vec<CalibrationRound<F>>,
}

impl<F: Scalar> CalibrationState<F> {
    pub fn new(
        code: &CssCode,
        theta_initial: F,
        theta0: F,
        theta_target: F,
        gain_theta: F,
        learning: LearningState<F>,
        target_qubit: usize,
    ) -> Result<Self, AdaptiveError> {
        let pi = F::from(std::f64::consts::PI).unwrap();
        if theta_target <= -pi || theta_target >= pi {
            return Err(AdaptiveError::TargetAngleOutOfRange {
                theta: theta_target.to_f64().unwrap_or(f64::NAN),
            });
        }
        if gain_theta == F::zero() || !gain_theta.is_finite() {
            return Err(AdaptiveError::AngleGainInvalid {
                gain: gain_theta.to_f64().unwrap_or(f64::NAN),
            });
        }
        if target_qubit >= code.n {
            return Err(AdaptiveError::TargetOutOfRange {
                site: target_qubit,
                n: code.n,
            });
        }
        Ok(Self {
            theta: theta_initial,
            theta0,
            theta_target,
            gain_theta,
            learning,
            target_qubit,
            history: Vec::new(),
        })
    }

    /// Desired flip probability `sin^2(theta_target / 2)`.
    pub fn p_target(&self) -> F {
        gate_flip_probability(self.theta_target)
    }
}

/// One calibration round: apply the gate, add background noise, decode,
/// update the angle from the support indicator, and absorb the soft output
/// into the priors.
pub fn calibration_round<F: Scalar, R: Rng>(
    code: &CssCode,
    state: &mut CalibrationState<F>,
    background: &ErrorModel<F>,
    rng: &mut R,
    max_iter: usize,
) -> Result<(), AdaptiveError> {
    let target = state.target_qubit;
    if background.rate(target) != F::zero() {
        return Err(AdaptiveError::BackgroundOnTarget { site: target });
    }

    let theta_applied = state.theta;
    let theta_tot = theta_applied + state.theta0;
    // The hidden offset is consumed here, in the physical sampling step.
    let p_flip = gate_flip_probability(theta_tot).to_f64().unwrap();
    let gate_flip = rng.gen_bool(p_flip.clamp(0.0, 1.0));
    let mut error = background.sample_error(rng);
    if gate_flip {
        error.flip(target);
    }

    let syndrome = mat_vec(&code.hz, &error).expect("model sized to the code");
    let result = Decoder::new(&code.hz).decode(&syndrome, &state.learning.priors, max_iter)?;
    let flagged = result.correction.get(target);

    let b = if flagged { F::one() } else { F::zero() };
    state.theta = calibration_step(
        state.theta,
        b,
        state.p_target(),
        state.gain_theta,
        state.theta_target,
    );
    state.learning.absorb(&result.soft)?;

    let priors = &state.learning.priors;
    let mut others: Vec<F> = (0..code.n)
        .filter(|&q| q != target)
        .map(|q| priors.get(q))
        .collect();
    others.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = others[others.len() / 2];
    state.history.push(CalibrationRound {
        round: state.learning.round,
        theta: theta_applied,
        theta_tot,
        flagged,
        prior_target: priors.get(target),
        prior_median_others: median,
    });
    Ok(())
}

/// Configuration for [`run_calibration`].
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    pub theta_target: f64,
    /// Hidden true offset of the gate (simulation-only secret).
    pub theta0: f64,
    pub theta_initial: f64,
    pub gain_theta: f64,
    pub gain: f64,
    /// Background flip rate for the non-target qubits.
    pub epsilon: f64,
    pub rounds: usize,
    pub seed: u64,
    pub target_qubit: usize,
    pub max_iter: usize,
    /// Epsilon grid for the post-calibration failure sweep.
    pub grid: Vec<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            theta_target: DEFAULT_THETA_TARGET,
            theta0: DEFAULT_THETA_OFFSET,
            theta_initial: 0.0,
            gain_theta: DEFAULT_GAIN_THETA,
            gain: DEFAULT_GAIN,
            epsilon: DEFAULT_BACKGROUND_RATE,
            rounds: 4000,
            seed: 0,
            target_qubit: 0,
            max_iter: crate::bposd::DEFAULT_MAX_ITER,
            grid: crate::experiments::DEFAULT_EPSILON_GRID.to_vec(),
        }
    }
}

/// Output of [`run_calibration`].
#[derive(Debug, Clone)]
pub struct CalibrationRun<F: Scalar> {
    pub history: Vec<CalibrationRound<F>>,
    pub final_theta: F,
    /// Mean realized flip probability over the last quarter of the run.
    pub mean_p_late: f64,
    /// Actual flip rate frozen for the sweep: mean realized rate over the
    /// second half of the run.
    pub fixed_rate: f64,
    /// Estimated rate frozen for the sweep: the worst (lowest) learned
    /// target prior over the second half of the run.
    pub fixed_prior: f64,
    /// Post-calibration failure sweep with the frozen rates.
    pub sweep: Vec<FailureRecord>,
    pub sweep_fit: ScalingFit,
}

/// Runs the calibration loop and the post-calibration failure sweep.
///
/// Convergence statistics use two windows: the second half of the run for
/// the frozen sweep parameters (worst-case learned prior, mean realized
/// rate) and the final quarter for the reported convergence level.
pub fn run_calibration<F: Scalar>(
    code: &CssCode,
    config: &CalibrationConfig,
) -> Result<CalibrationRun<F>, AdaptiveError> {
    if config.rounds == 0 {
        return Err(AdaptiveError::ZeroRounds);
    }
    let as_f = |x: f64| F::from(x).unwrap();
    let rounds = config.rounds;
    let stride = if rounds <= HISTORY_FULL_LIMIT {
        1
    } else {
        HISTORY_STRIDE
    };
    let priors = PriorVector::uniform(code.n, as_f(config.epsilon));
    let learning = LearningState::new(priors, as_f(config.gain), stride)?;
    let mut state = CalibrationState::new(
        code,
        as_f(config.theta_initial),
        as_f(config.theta0),
        as_f(config.theta_target),
        as_f(config.gain_theta),
        learning,
        config.target_qubit,
    )?;
    let background = ErrorModel::new(code.n, as_f(config.epsilon))?
        .with_override(config.target_qubit, F::zero())?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    for _ in 0..rounds {
        calibration_round(code, &mut state, &background, &mut rng, config.max_iter)?;
    }

    let realized =
        |row: &CalibrationRound<F>| gate_flip_probability(row.theta_tot).to_f64().unwrap();
    let late = &state.history[state.history.len() * 3 / 4..];
    let mean_p_late = late.iter().map(realized).sum::<f64>() / late.len() as f64;
    let window = &state.history[state.history.len() / 2..];
    let fixed_rate = window.iter().map(realized).sum::<f64>() / window.len() as f64;
    let fixed_prior = window
        .iter()
        .map(|row| row.prior_target.to_f64().unwrap())
        .fold(f64::INFINITY, f64::min);

    // Freeze the target's actual and estimated rates, vary the background.
    let sweep_priors = state
        .learning
        .priors
        .with_site(config.target_qubit, as_f(fixed_prior));
    let sweep: Vec<FailureRecord> = config
        .grid
        .iter()
        .map(|&eps| {
            let model = ErrorModel::new(code.n, as_f(eps))?
                .with_override(config.target_qubit, as_f(fixed_rate))?;
            let mut rec = failure_probability(code, &model, &sweep_priors, config.max_iter)?;
            rec.case = "calibrated".to_string();
            rec.epsilon = eps;
            rec.seed = config.seed;
            Ok(rec)
        })
        .collect::<Result<_, AdaptiveError>>()?;
    let sweep_fit = fit_scaling(
        &sweep
            .iter()
            .map(|r| (r.epsilon, r.failure))
            .collect::<Vec<_>>(),
    )?;

    Ok(CalibrationRun {
        final_theta: state.theta,
        history: state.history,
        mean_p_late,
        fixed_rate,
        fixed_prior,
        sweep,
        sweep_fit,
    })
}
