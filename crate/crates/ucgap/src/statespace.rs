//! Linear Gaussian state-space machinery: Kalman filter, fixed-interval
//! smoother, exact log-likelihood, and a mean-correction simulation smoother
//! for drawing full latent-state paths (Durbin and Koopman, 2002).
//!
//! The model is time invariant:
//!
//! ```text
//! y_t     = c + Z a_t + e_t,      e_t ~ N(0, Sigma)
//! a_{t+1} = d + T a_t + w_t,      w_t ~ N(0, Omega)
//! a_1     ~ N(0, kappa I)
//! ```
//!
//! `Omega` may be rank deficient (companion rows carry no innovation); no
//! jitter is ever added. The initial covariance is a big-kappa approximation
//! of a diffuse prior, `kappa = 1e7` by default.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Default variance of the diffuse initial-state distribution.
pub const DEFAULT_DIFFUSE_SCALE: f64 = 1e7;

/// Time-invariant linear Gaussian state-space model.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    /// Observation intercept `c` (d).
    pub obs_intercept: DVector<f64>,
    /// State intercept `d` (p).
    pub state_intercept: DVector<f64>,
    /// Loading matrix `Z` (d x p).
    pub design: DMatrix<f64>,
    /// Transition matrix `T` (p x p).
    pub transition: DMatrix<f64>,
    /// Observation noise covariance `Sigma` (d x d, PSD).
    pub obs_cov: DMatrix<f64>,
    /// State noise covariance `Omega` (p x p, PSD, possibly singular).
    pub state_cov: DMatrix<f64>,
    /// Variance of the diffuse initial state, `a_1 ~ N(0, kappa I)`.
    pub diffuse_scale: f64,
}

impl StateSpaceModel {
    /// Build a model and validate dimensions, symmetry and positive
    /// semi-definiteness of the noise covariances.
    pub fn new(
        obs_intercept: DVector<f64>,
        state_intercept: DVector<f64>,
        design: DMatrix<f64>,
        transition: DMatrix<f64>,
        obs_cov: DMatrix<f64>,
        state_cov: DMatrix<f64>,
        diffuse_scale: f64,
    ) -> Result<Self> {
        let d = design.nrows();
        let p = design.ncols();
        if d == 0 || p == 0 {
            return Err(Error::structural("state and observation dimensions must be positive"));
        }
        if obs_intercept.len() != d {
            return Err(Error::structural(format!(
                "obs intercept has length {}, expected {d}",
                obs_intercept.len()
            )));
        }
        if state_intercept.len() != p {
            return Err(Error::structural(format!(
                "state intercept has length {}, expected {p}",
                state_intercept.len()
            )));
        }
        if transition.nrows() != p || transition.ncols() != p {
            return Err(Error::structural("transition matrix must be p x p"));
        }
        if obs_cov.nrows() != d || obs_cov.ncols() != d {
            return Err(Error::structural("observation covariance must be d x d"));
        }
        if state_cov.nrows() != p || state_cov.ncols() != p {
            return Err(Error::structural("state covariance must be p x p"));
        }
        if !(diffuse_scale.is_finite() && diffuse_scale > 0.0) {
            return Err(Error::structural("diffuse scale must be positive and finite"));
        }
        let all_finite = obs_intercept.iter().all(|v| v.is_finite())
            && state_intercept.iter().all(|v| v.is_finite())
            && design.iter().all(|v| v.is_finite())
            && transition.iter().all(|v| v.is_finite())
            && obs_cov.iter().all(|v| v.is_finite())
            && state_cov.iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::structural("model matrices must be finite"));
        }
        check_sym_psd(&obs_cov, "observation covariance")?;
        check_sym_psd(&state_cov, "state covariance")?;
        Ok(Self {
            obs_intercept,
            state_intercept,
            design,
            transition,
            obs_cov,
            state_cov,
            diffuse_scale,
        })
    }

    /// Number of latent states `p`.
    pub fn n_states(&self) -> usize {
        self.design.ncols()
    }

    /// Number of observed series `d`.
    pub fn n_obs(&self) -> usize {
        self.design.nrows()
    }
}

fn check_sym_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let n = m.nrows();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::structural(format!("{what} is not symmetric")));
            }
        }
    }
    let eig = m.clone().symmetric_eigenvalues();
    if eig.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::structural(format!("{what} is not positive semi-definite")));
    }
    Ok(())
}

/// Symmetric PSD square root via spectral decomposition. Eigenvalues within
/// rounding of zero are clamped, so rank-deficient inputs are handled without
/// regularization.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut root = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -1e-10 * scale {
            return Err(Error::numerical("covariance is not positive semi-definite"));
        }
        let s = l.max(0.0).sqrt();
        for i in 0..m.nrows() {
            root[(i, j)] *= s;
        }
    }
    Ok(root)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// A full latent-state path: one state vector per observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStatePath {
    pub states: Vec<DVector<f64>>,
}

impl LatentStatePath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// One state component over time.
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[idx]).collect()
    }
}

/// Output of the forward Kalman recursion.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// One-step-ahead predicted means `a_{t|t-1}`.
    pub predicted_means: Vec<DVector<f64>>,
    /// One-step-ahead predicted covariances `P_{t|t-1}`.
    pub predicted_covs: Vec<DMatrix<f64>>,
    /// Filtered means `a_{t|t}`.
    pub filtered_means: Vec<DVector<f64>>,
    /// Filtered covariances `P_{t|t}`.
    pub filtered_covs: Vec<DMatrix<f64>>,
    /// Innovations `v_t`.
    pub innovations: Vec<DVector<f64>>,
    /// Innovation covariances `F_t`.
    pub innovation_covs: Vec<DMatrix<f64>>,
    /// Per-step Gaussian log-density contributions.
    pub loglik_terms: Vec<f64>,
    /// Prediction-error-decomposition log-likelihood (sum of all terms,
    /// including the diffuse burn-in under the big-kappa approximation).
    pub log_likelihood: f64,
}

/// Output of the backward smoothing recursion.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    /// Smoothed means `E[a_t | y_{1:T}]`.
    pub smoothed_means: Vec<DVector<f64>>,
    /// Smoothed covariances `Var[a_t | y_{1:T}]`.
    pub smoothed_covs: Vec<DMatrix<f64>>,
}

fn validate_observations(model: &StateSpaceModel, ys: &[DVector<f64>]) -> Result<()> {
    if ys.is_empty() {
        return Err(Error::structural("observation sequence must be non-empty"));
    }
    let d = model.n_obs();
    for (t, y) in ys.iter().enumerate() {
        if y.len() != d {
            return Err(Error::structural(format!(
                "y[{t}] has dimension {}, expected {d}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::structural(format!("y[{t}] contains non-finite values")));
        }
    }
    Ok(())
}

/// Run the Kalman filter over a complete observation sequence.
///
/// The initial state is `N(0, kappa I)`; every prediction-error term enters
/// the log-likelihood, so the first `p` contributions are dominated by the
/// diffuse prior. Covariances are re-symmetrized after each update to
/// suppress drift.
pub fn kalman_filter(model: &StateSpaceModel, ys: &[DVector<f64>]) -> Result<FilterOutput> {
    validate_observations(model, ys)?;
    let n = ys.len();
    let p = model.n_states();
    let d = model.n_obs();

    let mut predicted_means = Vec::with_capacity(n);
    let mut predicted_covs = Vec::with_capacity(n);
    let mut filtered_means = Vec::with_capacity(n);
    let mut filtered_covs = Vec::with_capacity(n);
    let mut innovations = Vec::with_capacity(n);
    let mut innovation_covs = Vec::with_capacity(n);
    let mut loglik_terms = Vec::with_capacity(n);

    let mut a_pred = DVector::<f64>::zeros(p);
    let mut p_pred = DMatrix::<f64>::identity(p, p) * model.diffuse_scale;
    let mut loglik = 0.0f64;

    for (t, y) in ys.iter().enumerate() {
        // Innovation and its covariance.
        let v = y - &model.obs_intercept - &model.design * &a_pred;
        let mut f = &model.design * &p_pred * model.design.transpose() + &model.obs_cov;
        symmetrize(&mut f);

        let chol = f.clone().cholesky().ok_or_else(|| {
            Error::numerical(format!(
                "innovation covariance not positive definite at t = {}",
                t + 1
            ))
        })?;
        let f_inv_v = chol.solve(&v);
        let mut logdet = 0.0;
        let l = chol.l();
        for i in 0..d {
            logdet += 2.0 * l[(i, i)].ln();
        }
        let term = -0.5 * (d as f64 * LN_2PI + logdet + v.dot(&f_inv_v));
        if !term.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite log-likelihood contribution at t = {}",
                t + 1
            )));
        }
        loglik += term;

        // Gain K = P Z' F^{-1}, filtered moments in Joseph form.
        let zp = &model.design * &p_pred;
        let k = chol.solve(&zp).transpose();
        let a_filt = &a_pred + &k * &v;
        let i_kz = DMatrix::<f64>::identity(p, p) - &k * &model.design;
        let mut p_filt =
            &i_kz * &p_pred * i_kz.transpose() + &k * &model.obs_cov * k.transpose();
        symmetrize(&mut p_filt);

        predicted_means.push(a_pred.clone());
        predicted_covs.push(p_pred.clone());
        innovations.push(v);
        innovation_covs.push(f);
        loglik_terms.push(term);
        filtered_means.push(a_filt.clone());
        filtered_covs.push(p_filt.clone());

        // One-step prediction.
        a_pred = &model.state_intercept + &model.transition * a_filt;
        p_pred = &model.transition * p_filt * model.transition.transpose() + &model.state_cov;
        symmetrize(&mut p_pred);
    }

    Ok(FilterOutput {
        predicted_means,
        predicted_covs,
        filtered_means,
        filtered_covs,
        innovations,
        innovation_covs,
        loglik_terms,
        log_likelihood: loglik,
    })
}

/// Fixed-interval smoother via the backward recursion of Durbin and Koopman
/// (2012, section 4.4), which never inverts a predicted state covariance and
/// therefore tolerates singular `Omega`.
pub fn kalman_smoother(model: &StateSpaceModel, filt: &FilterOutput) -> Result<SmootherOutput> {
    let n = filt.predicted_means.len();
    if n == 0 {
        return Err(Error::structural("filter output is empty"));
    }
    let p = model.n_states();
    if filt.predicted_covs.len() != n
        || filt.innovations.len() != n
        || filt.innovation_covs.len() != n
    {
        return Err(Error::structural("filter output has inconsistent lengths"));
    }

    let mut smoothed_means = vec![DVector::<f64>::zeros(p); n];
    let mut smoothed_covs = vec![DMatrix::<f64>::zeros(p, p); n];

    let mut r = DVector::<f64>::zeros(p);
    let mut n_mat = DMatrix::<f64>::zeros(p, p);

    for t in (0..n).rev() {
        let p_pred = &filt.predicted_covs[t];
        let chol = filt.innovation_covs[t].clone().cholesky().ok_or_else(|| {
            Error::numerical(format!(
                "innovation covariance not positive definite at t = {}",
                t + 1
            ))
        })?;
        let f_inv_v = chol.solve(&filt.innovations[t]);
        let f_inv_z = chol.solve(&model.design);

        // K = T P Z' F^{-1}, L = T - K Z.
        let k = &model.transition * (chol.solve(&(&model.design * p_pred)).transpose());
        let l = &model.transition - &k * &model.design;

        let r_prev = model.design.transpose() * &f_inv_v + l.transpose() * &r;
        let mut n_prev = model.design.transpose() * &f_inv_z + l.transpose() * &n_mat * &l;
        symmetrize(&mut n_prev);

        smoothed_means[t] = &filt.predicted_means[t] + p_pred * &r_prev;
        let mut v_t = p_pred - p_pred * &n_prev * p_pred;
        symmetrize(&mut v_t);
        smoothed_covs[t] = v_t;

        r = r_prev;
        n_mat = n_prev;
    }

    Ok(SmootherOutput { smoothed_means, smoothed_covs })
}

/// Simulate one unconditional path of states and observations from the model,
/// with `a_1 ~ N(0, init_var I)`. Returns `(states, observations)`.
///
/// Noise draw order is fixed (initial state, then per step: observation noise,
/// state noise), so a seeded stream reproduces bit-identical paths.
pub fn simulate_paths<R: Rng>(
    model: &StateSpaceModel,
    n: usize,
    init_var: f64,
    rng: &mut R,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    if n == 0 {
        return Err(Error::structural("simulation length must be positive"));
    }
    if !(init_var.is_finite() && init_var >= 0.0) {
        return Err(Error::structural("initial state variance must be non-negative"));
    }
    let p = model.n_states();
    let d = model.n_obs();
    let obs_root = psd_sqrt(&model.obs_cov)?;
    let state_root = psd_sqrt(&model.state_cov)?;

    let mut states = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);

    let init_sd = init_var.sqrt();
    let mut state = DVector::from_fn(p, |_, _| {
        init_sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });
    for _ in 0..n {
        let eps = DVector::from_fn(d, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let y = &model.obs_intercept + &model.design * &state + &obs_root * eps;
        let eta = DVector::from_fn(p, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let next = &model.state_intercept + &model.transition * &state + &state_root * eta;
        states.push(state);
        obs.push(y);
        state = next;
    }
    Ok((states, obs))
}

/// Draw one exact sample from the joint smoothing distribution of the latent
/// states given the data, by mean correction (Durbin and Koopman, 2002):
/// simulate an unconditional path and pseudo-observations, smooth both, and
/// combine. Rank-deficient `Omega` needs no special treatment.
pub fn simulation_smoother<R: Rng>(
    model: &StateSpaceModel,
    ys: &[DVector<f64>],
    rng: &mut R,
) -> Result<LatentStatePath> {
    let filt = kalman_filter(model, ys)?;
    let smooth = kalman_smoother(model, &filt)?;
    simulation_smoother_with(model, ys.len(), &smooth, rng)
}

/// Mean-correction draw reusing an already-computed smoother pass on the data.
pub fn simulation_smoother_with<R: Rng>(
    model: &StateSpaceModel,
    n: usize,
    smooth: &SmootherOutput,
    rng: &mut R,
) -> Result<LatentStatePath> {
    if smooth.smoothed_means.len() != n {
        return Err(Error::structural("smoother output length does not match data length"));
    }
    let (sim_states, sim_obs) = simulate_paths(model, n, model.diffuse_scale, rng)?;
    let sim_filt = kalman_filter(model, &sim_obs)?;
    let sim_smooth = kalman_smoother(model, &sim_filt)?;

    let states = (0..n)
        .map(|t| &smooth.smoothed_means[t] + &sim_states[t] - &sim_smooth.smoothed_means[t])
        .collect();
    Ok(LatentStatePath { states })
}
