//! Robbins-Monro proposal adaptation for the independence Metropolis-Hastings
//! blocks, following the stochastic-approximation scheme of Andrieu and Thoms
//! (2008, Algorithm 2): each proposal family tracks the sufficient statistics
//! of the draw stream, with a diminishing step size `delta_i = 1 / (C i^d)`.

use crate::error::{Error, Result};
use crate::priors::PriorFamily;
use rand::Rng;
use statrs::function::gamma::digamma;

/// Lower bound for every adaptable proposal parameter; keeps each update
/// inside the family's valid domain (bounded-convergence projection).
pub const PROPOSAL_PARAM_FLOOR: f64 = 1e-4;

/// Default adaptation constant `C`.
pub const DEFAULT_TUNING_C: f64 = 10.0;

/// Default step-size exponent `d`; any value in [0.5, 1] keeps the schedule
/// square-summable enough for diminishing adaptation while still summing to
/// infinity.
pub const DEFAULT_EXPONENT: f64 = 0.5;

/// Adaptation step size `delta_i = 1 / (C sqrt(i))` for iteration `i >= 1`.
pub fn step_size(i: u64, c: f64) -> f64 {
    1.0 / (c * (i as f64).sqrt())
}

/// One adaptive independence proposal block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveProposal {
    /// Current proposal density.
    pub density: PriorFamily,
    /// Number of adaptation steps applied so far.
    pub iterations: u64,
    /// Adaptation constant `C`.
    pub tuning_c: f64,
    /// Step-size exponent `d`.
    pub exponent: f64,
}

impl AdaptiveProposal {
    pub fn new(density: PriorFamily) -> Self {
        AdaptiveProposal {
            density,
            iterations: 0,
            tuning_c: DEFAULT_TUNING_C,
            exponent: DEFAULT_EXPONENT,
        }
    }

    pub fn with_tuning(density: PriorFamily, tuning_c: f64) -> Self {
        AdaptiveProposal { tuning_c, ..AdaptiveProposal::new(density) }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        self.density.sample(rng)
    }

    pub fn log_density(&self, x: f64) -> f64 {
        self.density.log_density(x)
    }

    /// Step size the next self-counted adaptation will use.
    pub fn next_delta(&self) -> f64 {
        1.0 / (self.tuning_c * ((self.iterations + 1) as f64).powf(self.exponent))
    }

    /// Adapt towards `draw` with the proposal's own diminishing schedule.
    pub fn adapt(&mut self, draw: f64) {
        let delta = self.next_delta();
        self.iterations += 1;
        self.adapt_with(draw, delta);
    }

    /// Adapt towards `draw` with an externally supplied step size.
    pub fn adapt_with(&mut self, draw: f64, delta: f64) {
        match self.density {
            PriorFamily::Gaussian { .. } => adapt_gaussian(self, draw, delta),
            PriorFamily::InverseGamma { .. } => adapt_invgamma(self, draw, delta),
            PriorFamily::ScaledBeta { .. } => adapt_beta(self, draw, delta),
        }
    }
}

/// Moment recursion for a Gaussian proposal: the mean chases the draw stream
/// and the variance chases the squared deviation around the updated mean,
/// `s2 <- s2 + delta ((x - m')^2 - s2)`.
pub fn adapt_gaussian(prop: &mut AdaptiveProposal, draw: f64, delta: f64) {
    if let PriorFamily::Gaussian { mean, variance } = &mut prop.density {
        let new_mean = *mean + delta * (draw - *mean);
        let dev = draw - new_mean;
        let new_var = *variance + delta * (dev * dev - *variance);
        *mean = new_mean;
        *variance = new_var.max(PROPOSAL_PARAM_FLOOR);
    }
}

/// Score-function recursion for an inverse-gamma proposal. At the fixed
/// point the proposal matches the stream's expectations of `log x` and
/// `1 / x`, the Kullback-Leibler stationarity conditions for this family.
pub fn adapt_invgamma(prop: &mut AdaptiveProposal, draw: f64, delta: f64) {
    if draw <= 0.0 || !draw.is_finite() {
        return;
    }
    if let PriorFamily::InverseGamma { shape, scale } = &mut prop.density {
        let new_shape = *shape + delta * ((*scale / draw).ln() - digamma(*shape));
        let new_scale = *scale + delta * (*shape / *scale - 1.0 / draw);
        *shape = new_shape.max(PROPOSAL_PARAM_FLOOR);
        *scale = new_scale.max(PROPOSAL_PARAM_FLOOR);
    }
}

/// Score-function recursion for a beta proposal on a scaled support. The
/// draw is rescaled to (0, 1) first; the second shape update uses the
/// already-updated first shape.
pub fn adapt_beta(prop: &mut AdaptiveProposal, draw: f64, delta: f64) {
    if let PriorFamily::ScaledBeta { alpha, beta, scale } = &mut prop.density {
        let u = draw / *scale;
        if !(u > 0.0 && u < 1.0) {
            return;
        }
        let new_alpha =
            (*alpha + delta * (u.ln() + digamma(*alpha + *beta) - digamma(*alpha)))
                .max(PROPOSAL_PARAM_FLOOR);
        let new_beta = (*beta
            + delta * ((1.0 - u).ln() + digamma(new_alpha + *beta) - digamma(*beta)))
        .max(PROPOSAL_PARAM_FLOOR);
        *alpha = new_alpha;
        *beta = new_beta;
    }
}

/// Independence Metropolis-Hastings step for one scalar block.
///
/// `log_target` must return the block's log full-conditional (including its
/// prior); out-of-support candidates yield `-inf` and are rejected rather
/// than raised. The acceptance ratio is
/// `target(cand) q(current) / (target(current) q(cand))`, so proposing the
/// current point is accepted with probability exactly one.
pub fn aimh_step<R: Rng, F: Fn(f64) -> f64>(
    current: f64,
    log_target: F,
    proposal: &AdaptiveProposal,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let candidate = proposal.sample(rng)?;
    // The uniform is always consumed so the stream position does not depend
    // on the candidate's support.
    let u: f64 = rng.random();
    Ok(aimh_decide(current, candidate, log_target, proposal, u))
}

/// Accept/reject decision given an already-drawn candidate and uniform.
/// Identical candidate and current points produce a log-ratio of exactly
/// zero and are always accepted.
pub fn aimh_decide<F: Fn(f64) -> f64>(
    current: f64,
    candidate: f64,
    log_target: F,
    proposal: &AdaptiveProposal,
    u: f64,
) -> (f64, bool) {
    let lt_cand = log_target(candidate);
    if lt_cand == f64::NEG_INFINITY || !candidate.is_finite() {
        return (current, false);
    }
    let lt_cur = log_target(current);
    let log_ratio =
        lt_cand - lt_cur + proposal.log_density(current) - proposal.log_density(candidate);
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        (candidate, true)
    } else {
        (current, false)
    }
}

/// Conjugate inverse-gamma posterior parameters for a variance block:
/// `shape' = shape + n/2`, `scale' = scale + ss/2`.
pub fn gibbs_variance_posterior(
    prior_shape: f64,
    prior_scale: f64,
    n: usize,
    sum_sq: f64,
) -> Result<(f64, f64)> {
    if !sum_sq.is_finite() || sum_sq < 0.0 {
        return Err(Error::numerical(format!(
            "residual sum of squares is not finite: {sum_sq}"
        )));
    }
    Ok((prior_shape + 0.5 * n as f64, prior_scale + 0.5 * sum_sq))
}

/// Exact draw from the shape/scale inverse gamma.
pub fn sample_inverse_gamma<R: Rng>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    PriorFamily::InverseGamma { shape, scale }.sample(rng)
}
