//! Trend/cycle output-gap model specifications and their state-space casting.
//!
//! Eight specifications are supported: univariate or bivariate (output plus
//! inflation through a backward Phillips relation), each with one of four
//! trend dynamics. The state vector is laid out as
//! `(trend, slope, cycle, cycle_lag, core_inflation)` with spec-dependent
//! deletions; the cycle is a stationary AR(2) reparameterized by its
//! amplitude `rho` and spectral frequency `lambda`.

use crate::error::{Error, Result};
use crate::statespace::{simulate_paths, LatentStatePath, StateSpaceModel, DEFAULT_DIFFUSE_SCALE};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Observed series entering the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variate {
    /// Output only.
    Univariate,
    /// Output and inflation, coupled through the output gap.
    Bivariate,
}

/// Dynamics of the long-run (trend) component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendSpec {
    /// Random-walk level, I(1).
    LocalLevel,
    /// Random-walk level with a fixed drift, I(1).
    LocalLevelDrift,
    /// Stochastic level and stochastic slope, I(2).
    LocalTrend,
    /// Deterministic level driven by a stochastic slope, I(2); the
    /// smoothing-filter special case.
    IntegratedRandomWalk,
}

/// One of the eight model specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub variate: Variate,
    pub trend: TrendSpec,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 8] = [
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalLevel },
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalLevelDrift },
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalTrend },
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::IntegratedRandomWalk },
        ModelSpec { variate: Variate::Bivariate, trend: TrendSpec::LocalLevel },
        ModelSpec { variate: Variate::Bivariate, trend: TrendSpec::LocalLevelDrift },
        ModelSpec { variate: Variate::Bivariate, trend: TrendSpec::LocalTrend },
        ModelSpec { variate: Variate::Bivariate, trend: TrendSpec::IntegratedRandomWalk },
    ];

    pub fn is_bivariate(&self) -> bool {
        self.variate == Variate::Bivariate
    }

    pub fn has_slope_state(&self) -> bool {
        matches!(self.trend, TrendSpec::LocalTrend | TrendSpec::IntegratedRandomWalk)
    }

    pub fn n_obs(&self) -> usize {
        match self.variate {
            Variate::Univariate => 1,
            Variate::Bivariate => 2,
        }
    }

    /// Positions of the named components in the canonical state ordering.
    pub fn layout(&self) -> StateLayout {
        let slope = self.has_slope_state();
        let trend = 0usize;
        let slope_idx = if slope { Some(1) } else { None };
        let cycle = if slope { 2 } else { 1 };
        let cycle_lag = cycle + 1;
        let core_inflation = if self.is_bivariate() { Some(cycle_lag + 1) } else { None };
        let dim = cycle_lag + 1 + if self.is_bivariate() { 1 } else { 0 };
        StateLayout { trend, slope: slope_idx, cycle, cycle_lag, core_inflation, dim }
    }

    pub fn n_states(&self) -> usize {
        self.layout().dim
    }

    /// Parameters that are estimated under this specification, in reporting
    /// order.
    pub fn active_params(&self) -> Vec<ParamId> {
        ParamId::ALL.iter().copied().filter(|id| id.is_active(*self)).collect()
    }

    /// Compact code such as `uni-lt` or `biv-irw`.
    pub fn code(&self) -> String {
        let v = match self.variate {
            Variate::Univariate => "uni",
            Variate::Bivariate => "biv",
        };
        let t = match self.trend {
            TrendSpec::LocalLevel => "ll",
            TrendSpec::LocalLevelDrift => "lld",
            TrendSpec::LocalTrend => "lt",
            TrendSpec::IntegratedRandomWalk => "irw",
        };
        format!("{v}-{t}")
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (v, t) = s
            .split_once('-')
            .ok_or_else(|| Error::validation(format!("unknown model spec `{s}`")))?;
        let variate = match v {
            "uni" => Variate::Univariate,
            "biv" => Variate::Bivariate,
            _ => return Err(Error::validation(format!("unknown variate `{v}` in `{s}`"))),
        };
        let trend = match t {
            "ll" => TrendSpec::LocalLevel,
            "lld" => TrendSpec::LocalLevelDrift,
            "lt" => TrendSpec::LocalTrend,
            "irw" => TrendSpec::IntegratedRandomWalk,
            _ => return Err(Error::validation(format!("unknown trend `{t}` in `{s}`"))),
        };
        Ok(ModelSpec { variate, trend })
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index map of the canonical state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub trend: usize,
    pub slope: Option<usize>,
    pub cycle: usize,
    pub cycle_lag: usize,
    pub core_inflation: Option<usize>,
    pub dim: usize,
}

/// Identifier of one scalar model parameter, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    Sigma2Eps,
    Rho,
    Lambda,
    Sigma2Eta,
    Sigma2Zeta,
    Drift,
    Sigma2Kappa,
    Sigma2Vareps,
    Theta0,
    Theta1,
    Sigma2Xi,
}

impl ParamId {
    pub const ALL: [ParamId; 11] = [
        ParamId::Sigma2Eps,
        ParamId::Rho,
        ParamId::Lambda,
        ParamId::Sigma2Eta,
        ParamId::Sigma2Zeta,
        ParamId::Drift,
        ParamId::Sigma2Kappa,
        ParamId::Sigma2Vareps,
        ParamId::Theta0,
        ParamId::Theta1,
        ParamId::Sigma2Xi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ParamId::Sigma2Eps => "sigma2_eps",
            ParamId::Rho => "rho",
            ParamId::Lambda => "lambda",
            ParamId::Sigma2Eta => "sigma2_eta",
            ParamId::Sigma2Zeta => "sigma2_zeta",
            ParamId::Drift => "drift",
            ParamId::Sigma2Kappa => "sigma2_kappa",
            ParamId::Sigma2Vareps => "sigma2_vareps",
            ParamId::Theta0 => "theta0",
            ParamId::Theta1 => "theta1",
            ParamId::Sigma2Xi => "sigma2_xi",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        ParamId::ALL.iter().copied().find(|id| id.name() == name)
    }

    /// Whether this parameter is estimated under the given specification.
    pub fn is_active(&self, spec: ModelSpec) -> bool {
        match self {
            ParamId::Sigma2Eps | ParamId::Rho | ParamId::Lambda | ParamId::Sigma2Kappa => true,
            ParamId::Sigma2Eta => spec.trend != TrendSpec::IntegratedRandomWalk,
            ParamId::Sigma2Zeta => spec.has_slope_state(),
            ParamId::Drift => spec.trend == TrendSpec::LocalLevelDrift,
            ParamId::Sigma2Vareps | ParamId::Theta0 | ParamId::Theta1 | ParamId::Sigma2Xi => {
                spec.is_bivariate()
            }
        }
    }
}

/// The full hyperparameter vector. Entries that are inactive under a given
/// specification are ignored by the model builder and kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    /// Output measurement variance.
    pub sigma2_eps: f64,
    /// Trend level innovation variance.
    pub sigma2_eta: f64,
    /// Trend slope innovation variance.
    pub sigma2_zeta: f64,
    /// Cycle innovation variance.
    pub sigma2_kappa: f64,
    /// Cycle amplitude in (0, 1).
    pub rho: f64,
    /// Cycle spectral frequency in (0, pi); period is `2 pi / lambda`.
    pub lambda: f64,
    /// Inflation measurement variance.
    pub sigma2_vareps: f64,
    /// Core-inflation innovation variance.
    pub sigma2_xi: f64,
    /// Contemporaneous output-gap loading on core inflation changes.
    pub theta0: f64,
    /// Lagged output-gap loading.
    pub theta1: f64,
    /// Fixed trend drift (local level with drift only).
    pub drift: f64,
}

impl ParameterVector {
    pub fn zeros() -> Self {
        ParameterVector {
            sigma2_eps: 0.0,
            sigma2_eta: 0.0,
            sigma2_zeta: 0.0,
            sigma2_kappa: 0.0,
            rho: 0.0,
            lambda: 0.0,
            sigma2_vareps: 0.0,
            sigma2_xi: 0.0,
            theta0: 0.0,
            theta1: 0.0,
            drift: 0.0,
        }
    }

    /// Prior-mean parameter values implied by the default hyperparameters,
    /// restricted to the entries active under `spec`.
    pub fn table1_means(spec: ModelSpec) -> Self {
        let mut p = ParameterVector::zeros();
        p.sigma2_eps = 1.8e-3;
        p.rho = 0.4;
        p.lambda = std::f64::consts::PI * 5.54 / (5.54 + 27.72);
        p.sigma2_kappa = 2.82 / 1.4;
        if ParamId::Sigma2Eta.is_active(spec) {
            p.sigma2_eta = 2.0e-3;
        }
        if ParamId::Sigma2Zeta.is_active(spec) {
            p.sigma2_zeta = 2.0e-4;
        }
        if spec.is_bivariate() {
            p.sigma2_vareps = 1.6e-4;
            p.sigma2_xi = 1.6e-4;
        }
        p
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Sigma2Eps => self.sigma2_eps,
            ParamId::Rho => self.rho,
            ParamId::Lambda => self.lambda,
            ParamId::Sigma2Eta => self.sigma2_eta,
            ParamId::Sigma2Zeta => self.sigma2_zeta,
            ParamId::Drift => self.drift,
            ParamId::Sigma2Kappa => self.sigma2_kappa,
            ParamId::Sigma2Vareps => self.sigma2_vareps,
            ParamId::Theta0 => self.theta0,
            ParamId::Theta1 => self.theta1,
            ParamId::Sigma2Xi => self.sigma2_xi,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        match id {
            ParamId::Sigma2Eps => self.sigma2_eps = value,
            ParamId::Rho => self.rho = value,
            ParamId::Lambda => self.lambda = value,
            ParamId::Sigma2Eta => self.sigma2_eta = value,
            ParamId::Sigma2Zeta => self.sigma2_zeta = value,
            ParamId::Drift => self.drift = value,
            ParamId::Sigma2Kappa => self.sigma2_kappa = value,
            ParamId::Sigma2Vareps => self.sigma2_vareps = value,
            ParamId::Theta0 => self.theta0 = value,
            ParamId::Theta1 => self.theta1 = value,
            ParamId::Sigma2Xi => self.sigma2_xi = value,
        }
    }

    /// Check the entries active under `spec`. Variances must be non-negative
    /// (zero is allowed so that degenerate models can be built and simulated;
    /// the sampler keeps its draws strictly interior), the amplitude must lie
    /// in [0, 1), the frequency in (0, pi), and loadings and drift finite.
    pub fn validate(&self, spec: ModelSpec) -> Result<()> {
        for id in spec.active_params() {
            let v = self.get(id);
            if !v.is_finite() {
                return Err(Error::structural(format!("{} is not finite", id.name())));
            }
            match id {
                ParamId::Sigma2Eps
                | ParamId::Sigma2Eta
                | ParamId::Sigma2Zeta
                | ParamId::Sigma2Kappa
                | ParamId::Sigma2Vareps
                | ParamId::Sigma2Xi => {
                    if v < 0.0 {
                        return Err(Error::structural(format!(
                            "{} must be non-negative, got {v}",
                            id.name()
                        )));
                    }
                }
                ParamId::Rho => {
                    if !(0.0..1.0).contains(&v) {
                        return Err(Error::structural(format!("rho must lie in [0,1), got {v}")));
                    }
                }
                ParamId::Lambda => {
                    if !(v > 0.0 && v < std::f64::consts::PI) {
                        return Err(Error::structural(format!(
                            "lambda must lie in (0, pi), got {v}"
                        )));
                    }
                }
                ParamId::Theta0 | ParamId::Theta1 | ParamId::Drift => {}
            }
        }
        Ok(())
    }
}

/// AR(2) coefficients of the cycle from its amplitude and frequency:
/// `phi1 = 2 rho cos(lambda)`, `phi2 = -rho^2`. For `rho` in (0,1) the
/// polynomial `1 - phi1 L - phi2 L^2` has complex-conjugate roots of modulus
/// `1/rho`, giving a stationary pseudo-cyclical process with period
/// `2 pi / lambda`.
pub fn cycle_coefficients(rho: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
        return Err(Error::domain(format!("cycle amplitude must lie in [0,1), got {rho}")));
    }
    if !(lambda.is_finite() && lambda > 0.0 && lambda < std::f64::consts::PI) {
        return Err(Error::domain(format!("cycle frequency must lie in (0, pi), got {lambda}")));
    }
    Ok((2.0 * rho * lambda.cos(), -rho * rho))
}

/// Inverse of [`cycle_coefficients`] for `phi2` in (-1, 0).
pub fn cycle_from_coefficients(phi1: f64, phi2: f64) -> Result<(f64, f64)> {
    if !(phi2 > -1.0 && phi2 < 0.0) {
        return Err(Error::domain(format!("phi2 must lie in (-1, 0), got {phi2}")));
    }
    let rho = (-phi2).sqrt();
    let c = phi1 / (2.0 * rho);
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::domain("coefficients do not describe a complex-root cycle"));
    }
    Ok((rho, c.acos()))
}

/// Inflation loadings and their permanent/transitory decomposition, per
/// posterior draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedEffects {
    /// Permanent (level) effect of the gap on inflation changes:
    /// `theta0 (phi1 + phi2) + theta1`.
    pub level_effect: f64,
    /// Transitory (change) effect: `theta0 phi2`.
    pub change_effect: f64,
    /// Loading on the lag-1 gap: `theta0 phi1 + theta1`.
    pub loading_level: f64,
    /// Loading on the lag-2 gap: `theta0 phi2`.
    pub loading_change: f64,
}

impl DerivedEffects {
    pub fn compute(rho: f64, lambda: f64, theta0: f64, theta1: f64) -> Result<Self> {
        let (phi1, phi2) = cycle_coefficients(rho, lambda)?;
        Ok(DerivedEffects {
            level_effect: theta0 * (phi1 + phi2) + theta1,
            change_effect: theta0 * phi2,
            loading_level: theta0 * phi1 + theta1,
            loading_change: theta0 * phi2,
        })
    }
}

/// Cast a specification and parameter vector into state-space form.
///
/// The core-inflation row carries the substituted Phillips relation: loadings
/// `theta0 phi1 + theta1` and `theta0 phi2` in the transition, innovation
/// variance `sigma2_xi + theta0^2 sigma2_kappa`, and cross-covariance
/// `theta0 sigma2_kappa` with the cycle innovation.
pub fn build_model(spec: ModelSpec, params: &ParameterVector) -> Result<StateSpaceModel> {
    params.validate(spec)?;
    let (phi1, phi2) = cycle_coefficients(params.rho, params.lambda)?;
    let lay = spec.layout();
    let p = lay.dim;
    let d = spec.n_obs();

    let mut design = DMatrix::<f64>::zeros(d, p);
    design[(0, lay.trend)] = 1.0;
    design[(0, lay.cycle)] = 1.0;

    let mut obs_cov = DMatrix::<f64>::zeros(d, d);
    obs_cov[(0, 0)] = params.sigma2_eps;

    let mut transition = DMatrix::<f64>::zeros(p, p);
    transition[(lay.trend, lay.trend)] = 1.0;
    if let Some(slope) = lay.slope {
        transition[(lay.trend, slope)] = 1.0;
        transition[(slope, slope)] = 1.0;
    }
    transition[(lay.cycle, lay.cycle)] = phi1;
    transition[(lay.cycle, lay.cycle_lag)] = phi2;
    transition[(lay.cycle_lag, lay.cycle)] = 1.0;

    let mut state_cov = DMatrix::<f64>::zeros(p, p);
    if spec.trend != TrendSpec::IntegratedRandomWalk {
        state_cov[(lay.trend, lay.trend)] = params.sigma2_eta;
    }
    if let Some(slope) = lay.slope {
        state_cov[(slope, slope)] = params.sigma2_zeta;
    }
    state_cov[(lay.cycle, lay.cycle)] = params.sigma2_kappa;

    let mut state_intercept = DVector::<f64>::zeros(p);
    if spec.trend == TrendSpec::LocalLevelDrift {
        state_intercept[lay.trend] = params.drift;
    }

    if let Some(tau) = lay.core_inflation {
        design[(1, tau)] = 1.0;
        obs_cov[(1, 1)] = params.sigma2_vareps;
        transition[(tau, lay.cycle)] = params.theta0 * phi1 + params.theta1;
        transition[(tau, lay.cycle_lag)] = params.theta0 * phi2;
        transition[(tau, tau)] = 1.0;
        state_cov[(tau, tau)] =
            params.sigma2_xi + params.theta0 * params.theta0 * params.sigma2_kappa;
        state_cov[(lay.cycle, tau)] = params.theta0 * params.sigma2_kappa;
        state_cov[(tau, lay.cycle)] = params.theta0 * params.sigma2_kappa;
    }

    StateSpaceModel::new(
        DVector::zeros(d),
        state_intercept,
        design,
        transition,
        obs_cov,
        state_cov,
        DEFAULT_DIFFUSE_SCALE,
    )
}

/// Draw one exact sample path from the generative model, returning both
/// observations and the true latent states. Initial states are
/// `N(0, init_var I)`; `init_var` may be zero for a fixed zero start.
pub fn simulate_data<R: Rng>(
    spec: ModelSpec,
    params: &ParameterVector,
    n: usize,
    init_var: f64,
    rng: &mut R,
) -> Result<(Vec<DVector<f64>>, LatentStatePath)> {
    if n < 8 {
        return Err(Error::structural(format!("simulation length must be >= 8, got {n}")));
    }
    let model = build_model(spec, params)?;
    let (states, obs) = simulate_paths(&model, n, init_var, rng)?;
    Ok((obs, LatentStatePath { states }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    const UNI_LL: ModelSpec =
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalLevel };
    const UNI_LT: ModelSpec =
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalTrend };
    const UNI_IRW: ModelSpec =
        ModelSpec { variate: Variate::Univariate, trend: TrendSpec::IntegratedRandomWalk };
    const BIV_LT: ModelSpec =
        ModelSpec { variate: Variate::Bivariate, trend: TrendSpec::LocalTrend };

    #[test]
    fn cycle_coefficients_quarter_period() {
        // cos(pi/2) = 0 kills the first coefficient.
        let (phi1, phi2) = cycle_coefficients(0.9, std::f64::consts::FRAC_PI_2).unwrap();
        assert_close(phi1, 0.0, 1e-15, "phi1");
        assert_close(phi2, -0.81, 1e-15, "phi2");
    }

    #[test]
    fn cycle_coefficients_degenerate_amplitude() {
        let (phi1, phi2) = cycle_coefficients(0.0, 1.0).unwrap();
        assert_eq!((phi1, phi2), (0.0, 0.0));
    }

    #[test]
    fn cycle_coefficients_posterior_mode_values() {
        // Amplitude/frequency pair at a representative posterior mode.
        let (rho, lambda) = (0.8992, 0.5400);
        let (phi1, phi2) = cycle_coefficients(rho, lambda).unwrap();
        assert_close(phi1, 2.0 * rho * lambda.cos(), 0.0, "phi1 direct evaluation");
        assert_close(phi2, -rho * rho, 0.0, "phi2 direct evaluation");
        assert_close(phi1, 1.5425, 5e-4, "phi1 magnitude");
        assert_close(phi2, -0.80856, 5e-5, "phi2 magnitude");
    }

    #[test]
    fn cycle_coefficients_rejects_out_of_range() {
        assert!(matches!(cycle_coefficients(1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(cycle_coefficients(0.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            cycle_coefficients(0.5, std::f64::consts::PI),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn cycle_roundtrip(rho in 1e-6..0.999f64, lambda in 1e-6..3.14f64) {
            let (phi1, phi2) = cycle_coefficients(rho, lambda).unwrap();
            let (r, l) = cycle_from_coefficients(phi1, phi2).unwrap();
            prop_assert!((r - rho).abs() < 1e-12);
            prop_assert!((l - lambda).abs() < 1e-9);
        }

        #[test]
        fn cycle_block_spectral_radius_is_rho(rho in 0.01..0.99f64, lambda in 0.01..3.13f64) {
            let (phi1, phi2) = cycle_coefficients(rho, lambda).unwrap();
            let block = DMatrix::from_row_slice(2, 2, &[phi1, phi2, 1.0, 0.0]);
            let radius = block
                .complex_eigenvalues()
                .iter()
                .fold(0.0f64, |a, l| a.max(l.norm()));
            prop_assert!((radius - rho).abs() < 1e-9);
        }
    }

    #[test]
    fn bivariate_lt_matrices_match_substituted_phillips_relation() {
        let mut params = ParameterVector::table1_means(BIV_LT);
        params.theta0 = 0.3;
        params.theta1 = -0.1;
        let (phi1, phi2) = cycle_coefficients(params.rho, params.lambda).unwrap();
        let m = build_model(BIV_LT, &params).unwrap();
        let lay = BIV_LT.layout();
        assert_eq!(m.n_states(), 5);
        assert_eq!(m.n_obs(), 2);
        let tau = lay.core_inflation.unwrap();

        assert_eq!(m.design[(0, lay.trend)], 1.0);
        assert_eq!(m.design[(0, lay.cycle)], 1.0);
        assert_eq!(m.design[(1, tau)], 1.0);
        assert_eq!(m.design[(1, lay.cycle)], 0.0);

        assert_eq!(m.transition[(lay.trend, lay.slope.unwrap())], 1.0);
        assert_close(m.transition[(lay.cycle, lay.cycle)], phi1, 0.0, "phi1 entry");
        assert_close(m.transition[(lay.cycle, lay.cycle_lag)], phi2, 0.0, "phi2 entry");
        assert_close(
            m.transition[(tau, lay.cycle)],
            params.theta0 * phi1 + params.theta1,
            0.0,
            "level loading",
        );
        assert_close(m.transition[(tau, lay.cycle_lag)], params.theta0 * phi2, 0.0, "lag loading");

        assert_close(
            m.state_cov[(lay.cycle, tau)],
            params.theta0 * params.sigma2_kappa,
            0.0,
            "cycle/inflation cross term",
        );
        assert_close(
            m.state_cov[(tau, tau)],
            params.sigma2_xi + params.theta0 * params.theta0 * params.sigma2_kappa,
            0.0,
            "inflation innovation variance",
        );
        assert_eq!(m.state_cov[(lay.cycle_lag, lay.cycle_lag)], 0.0);
    }

    #[test]
    fn zero_coupling_gives_block_diagonal_state_cov() {
        let mut params = ParameterVector::table1_means(BIV_LT);
        params.theta0 = 0.0;
        let m = build_model(BIV_LT, &params).unwrap();
        let lay = BIV_LT.layout();
        let tau = lay.core_inflation.unwrap();
        assert_eq!(m.state_cov[(lay.cycle, tau)], 0.0);
        assert_close(m.state_cov[(tau, tau)], params.sigma2_xi, 0.0, "pure xi variance");
    }

    #[test]
    fn univariate_local_level_matches_hand_built_three_state_model() {
        let params = ParameterVector {
            sigma2_eps: 0.5,
            sigma2_eta: 0.2,
            sigma2_kappa: 0.8,
            rho: 0.9,
            lambda: 0.7,
            ..ParameterVector::zeros()
        };
        let m = build_model(UNI_LL, &params).unwrap();
        assert_eq!(m.n_states(), 3);
        let (phi1, phi2) = cycle_coefficients(0.9, 0.7).unwrap();
        let hand = StateSpaceModel::new(
            DVector::zeros(1),
            DVector::zeros(3),
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]),
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, phi1, phi2, 0.0, 1.0, 0.0]),
            DMatrix::from_row_slice(1, 1, &[0.5]),
            DMatrix::from_row_slice(3, 3, &[0.2, 0.0, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 0.0]),
            DEFAULT_DIFFUSE_SCALE,
        )
        .unwrap();
        // Identical matrices imply identical likelihoods on any sample.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (obs, _) = simulate_data(UNI_LL, &params, 30, 1.0, &mut rng).unwrap();
        let ll_a = crate::statespace::kalman_filter(&m, &obs).unwrap().log_likelihood;
        let ll_b = crate::statespace::kalman_filter(&hand, &obs).unwrap().log_likelihood;
        assert_close(ll_a, ll_b, 1e-12, "likelihood of hand-built model");
    }

    #[test]
    fn drift_enters_state_intercept() {
        let spec = ModelSpec { variate: Variate::Univariate, trend: TrendSpec::LocalLevelDrift };
        let mut params = ParameterVector::table1_means(spec);
        params.drift = 0.35;
        let m = build_model(spec, &params).unwrap();
        assert_eq!(m.state_intercept[spec.layout().trend], 0.35);
        assert_eq!(m.n_states(), 3);
    }

    #[test]
    fn irw_trend_carries_no_level_noise() {
        let params = ParameterVector::table1_means(UNI_IRW);
        let m = build_model(UNI_IRW, &params).unwrap();
        let lay = UNI_IRW.layout();
        assert_eq!(m.state_cov[(lay.trend, lay.trend)], 0.0);
        assert!(m.state_cov[(lay.slope.unwrap(), lay.slope.unwrap())] > 0.0);
    }

    #[test]
    fn all_specs_build_valid_models() {
        for spec in ModelSpec::ALL {
            let mut params = ParameterVector::table1_means(spec);
            params.theta0 = 0.05;
            params.theta1 = -0.02;
            params.drift = 0.1;
            let m = build_model(spec, &params).unwrap();
            assert_eq!(m.n_states(), spec.n_states());
            assert_eq!(m.n_obs(), spec.n_obs());
            // Determinism of the builder.
            let m2 = build_model(spec, &params).unwrap();
            assert_eq!(m.transition, m2.transition);
            assert_eq!(m.state_cov, m2.state_cov);
        }
    }

    #[test]
    fn inconsistent_mask_is_structural_error() {
        let mut params = ParameterVector::table1_means(BIV_LT);
        params.sigma2_xi = -1.0;
        assert!(matches!(build_model(BIV_LT, &params), Err(Error::Structural(_))));
        let mut params = ParameterVector::table1_means(BIV_LT);
        params.lambda = 4.0;
        assert!(matches!(build_model(BIV_LT, &params), Err(Error::Structural(_))));
    }

    #[test]
    fn simulate_all_variances_zero_is_identically_zero() {
        let params = ParameterVector {
            rho: 0.5,
            lambda: 0.5,
            ..ParameterVector::zeros()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (obs, states) = simulate_data(UNI_LL, &params, 16, 0.0, &mut rng).unwrap();
        for y in &obs {
            assert_eq!(y[0], 0.0);
        }
        for s in &states.states {
            assert_eq!(s.amax(), 0.0);
        }
    }

    #[test]
    fn simulated_irw_second_differences_have_slope_variance() {
        let params = ParameterVector {
            sigma2_eps: 1.0,
            sigma2_zeta: 0.49,
            sigma2_kappa: 1.0,
            rho: 0.5,
            lambda: 1.0,
            ..ParameterVector::zeros()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let (_, states) = simulate_data(UNI_IRW, &params, 10_000, 1.0, &mut rng).unwrap();
        let trend = states.component(UNI_IRW.layout().trend);
        let d2: Vec<f64> = trend.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        let mean = d2.iter().sum::<f64>() / d2.len() as f64;
        let var = d2.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d2.len() as f64;
        assert!(
            (var - 0.49).abs() / 0.49 < 0.05,
            "second-difference variance {var} not within 5% of 0.49"
        );
    }

    #[test]
    fn simulated_cycle_matches_yule_walker_lag_one() {
        let params = ParameterVector {
            sigma2_eps: 1e-6,
            sigma2_eta: 1e-6,
            sigma2_kappa: 1.0,
            rho: 0.9,
            lambda: 0.54,
            ..ParameterVector::zeros()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let (_, states) = simulate_data(UNI_LL, &params, 10_000, 1.0, &mut rng).unwrap();
        let psi = states.component(UNI_LL.layout().cycle);
        let mean = psi.iter().sum::<f64>() / psi.len() as f64;
        let var = psi.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / psi.len() as f64;
        let cov1 = psi
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (psi.len() - 1) as f64;
        let (phi1, phi2) = cycle_coefficients(0.9, 0.54).unwrap();
        let expected = phi1 / (1.0 - phi2);
        assert!(
            (cov1 / var - expected).abs() < 0.02,
            "lag-1 autocorrelation {} vs {expected}",
            cov1 / var
        );
    }

    #[test]
    fn derived_effects_identities() {
        let eff = DerivedEffects::compute(0.9, 0.6, 0.3, -0.1).unwrap();
        let (phi1, phi2) = cycle_coefficients(0.9, 0.6).unwrap();
        // Level effect equals loading on the level plus the change loading.
        assert_close(
            eff.level_effect,
            eff.loading_level + eff.loading_change,
            1e-14,
            "algebraic identity",
        );
        assert_close(eff.change_effect, 0.3 * phi2, 0.0, "change effect");
        // Opposite signs of theta0 and the change effect.
        assert!(eff.change_effect < 0.0);
        let eff_neg = DerivedEffects::compute(0.9, 0.6, -0.3, 0.0).unwrap();
        assert!(eff_neg.change_effect > 0.0);
    }

    #[test]
    fn spec_codes_roundtrip() {
        for spec in ModelSpec::ALL {
            let parsed: ModelSpec = spec.code().parse().unwrap();
            assert_eq!(parsed, spec);
        }
        assert!("uni-xx".parse::<ModelSpec>().is_err());
        assert!("foo".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn layout_positions_are_consistent() {
        let lay = UNI_LT.layout();
        assert_eq!((lay.trend, lay.slope, lay.cycle, lay.cycle_lag), (0, Some(1), 2, 3));
        assert_eq!(lay.dim, 4);
        let lay = UNI_LL.layout();
        assert_eq!((lay.trend, lay.slope, lay.cycle, lay.cycle_lag), (0, None, 1, 2));
        assert_eq!(lay.dim, 3);
        let lay = BIV_LT.layout();
        assert_eq!(lay.core_inflation, Some(4));
        assert_eq!(lay.dim, 5);
    }
}
