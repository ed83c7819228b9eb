//! Online tensor regression from node-level feedback.
//!
//! Maintains `Sigma = lambda I + sum phi phi^T`, its inverse, `log det Sigma`
//! and `B = sum phi y`. The inverse and determinant follow rank-1 identities
//! (observations sharing a feature vector are applied as one weighted update)
//! with a periodic Cholesky refactorization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diffusion::{dot, Features, LinkFunction, StateMatrix, UserClasses};
use crate::error::{invalid, Error, Result};

/// Rank-1 updates between full refactorizations.
pub const REFACTOR_INTERVAL: usize = 10_000;

/// `count` observations sharing feature vector `phi`, `successes` of which were active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedObservation {
    pub phi: Vec<f64>,
    pub count: u32,
    pub successes: u32,
}

/// Collapses bitwise-identical feature vectors, keeping first-occurrence order.
pub fn group_observations(observations: &[(Vec<f64>, bool)]) -> Vec<GroupedObservation> {
    let mut groups: Vec<GroupedObservation> = Vec::new();
    let mut index: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
    for (phi, y) in observations {
        let key: Vec<u64> = phi.iter().map(|v| (v + 0.0).to_bits()).collect();
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push(GroupedObservation { phi: phi.clone(), count: 0, successes: 0 });
            groups.len() - 1
        });
        groups[slot].count += 1;
        groups[slot].successes += u32::from(*y);
    }
    groups
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    dim: usize,
    lambda: f64,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    log_det: f64,
    b: DVector<f64>,
    t_hat: DVector<f64>,
    batches: usize,
    since_refactor: usize,
    n_observations: u64,
    potential_sum: f64,
    max_phi_norm: f64,
    history: Option<Vec<GroupedObservation>>,
}

impl EstimatorState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("regression dimension must be positive"));
        }
        if !(lambda > 0.0) {
            return Err(invalid(format!("regularizer must be positive, got {lambda}")));
        }
        Ok(Self {
            dim,
            lambda,
            sigma: DMatrix::identity(dim, dim) * lambda,
            sigma_inv: DMatrix::identity(dim, dim) / lambda,
            log_det: dim as f64 * lambda.ln(),
            b: DVector::zeros(dim),
            t_hat: DVector::zeros(dim),
            batches: 0,
            since_refactor: 0,
            n_observations: 0,
            potential_sum: 0.0,
            max_phi_norm: 0.0,
            history: None,
        })
    }

    /// Keeps every grouped observation; required by [`solve_glm`].
    pub fn with_history(mut self) -> Self {
        self.history = Some(Vec::new());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn t_hat(&self) -> &DVector<f64> {
        &self.t_hat
    }

    /// Number of ingested batches (time steps of feedback).
    pub fn batches(&self) -> usize {
        self.batches
    }

    /// Index `t` of the next decision: `Sigma` currently equals `Sigma_{t-1}`.
    pub fn current_time(&self) -> usize {
        self.batches + 1
    }

    pub fn n_observations(&self) -> u64 {
        self.n_observations
    }

    /// Running `sum min(1, ||phi||^2_{Sigma^{-1}})`, each term against the
    /// covariance before that observation.
    pub fn potential_sum(&self) -> f64 {
        self.potential_sum
    }

    pub fn max_phi_norm(&self) -> f64 {
        self.max_phi_norm
    }

    pub fn history(&self) -> Option<&[GroupedObservation]> {
        self.history.as_deref()
    }

    /// `||phi||^2_{Sigma^{-1}}`.
    pub fn inv_norm_sq(&self, phi: &[f64]) -> f64 {
        let v = DVector::from_column_slice(phi);
        v.dot(&(&self.sigma_inv * &v))
    }

    /// Ingests one time step of `(phi, outcome)` observations.
    pub fn ingest_batch(&mut self, observations: &[(Vec<f64>, bool)]) -> Result<()> {
        for (phi, _) in observations {
            if phi.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: phi.len(),
                    context: "observation feature",
                });
            }
        }
        self.ingest_grouped(&group_observations(observations))
    }

    /// Ingests one time step given as grouped observations.
    pub fn ingest_grouped(&mut self, groups: &[GroupedObservation]) -> Result<()> {
        for g in groups {
            if g.phi.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: g.phi.len(),
                    context: "observation feature",
                });
            }
            if g.successes > g.count {
                return Err(invalid("more successes than observations"));
            }
        }
        for g in groups {
            self.apply_group(g);
        }
        self.batches += 1;
        Ok(())
    }

    fn apply_group(&mut self, g: &GroupedObservation) {
        if g.count == 0 || g.phi.iter().all(|&v| v == 0.0) {
            return;
        }
        let phi = DVector::from_column_slice(&g.phi);
        let n = g.count as f64;
        let v = &self.sigma_inv * &phi;
        let q = phi.dot(&v).max(0.0);

        // sequential potential terms for n copies: q / (1 + m q), m = 0..n-1
        let mut pot = 0.0;
        for m in 0..g.count {
            let term = q / (1.0 + m as f64 * q);
            pot += term.min(1.0);
        }
        self.potential_sum += pot;
        self.n_observations += u64::from(g.count);
        self.max_phi_norm = self.max_phi_norm.max(phi.norm());

        self.sigma.ger(n, &phi, &phi, 1.0);
        self.b.axpy(g.successes as f64, &phi, 1.0);
        let coef = n / (1.0 + n * q);
        self.sigma_inv.ger(-coef, &v, &v, 1.0);
        self.log_det += (n * q).ln_1p();

        if let Some(history) = self.history.as_mut() {
            history.push(g.clone());
        }
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor();
        }
    }

    /// Recomputes the inverse and log-determinant from `Sigma`.
    pub fn refactor(&mut self) {
        let sym = (&self.sigma + self.sigma.transpose()) * 0.5;
        if let Some(chol) = sym.cholesky() {
            self.log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            self.sigma_inv = chol.inverse();
        }
        self.since_refactor = 0;
    }

    /// Ridge solution `Sigma^{-1} B`, stored as the current estimate.
    pub fn solve_ridge(&mut self) -> &DVector<f64> {
        self.t_hat = &self.sigma_inv * &self.b;
        &self.t_hat
    }

    /// Replaces the current estimate (e.g. with a GLM solution).
    pub fn set_estimate(&mut self, t_hat: DVector<f64>) -> Result<()> {
        if t_hat.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: t_hat.len(), context: "estimate" });
        }
        self.t_hat = t_hat;
        Ok(())
    }

    pub fn checkpoint(&self) -> EstimatorCheckpoint {
        let mut sigma_lower = Vec::with_capacity(self.dim * (self.dim + 1) / 2);
        for i in 0..self.dim {
            for j in 0..=i {
                sigma_lower.push(self.sigma[(i, j)]);
            }
        }
        EstimatorCheckpoint {
            version: EstimatorCheckpoint::VERSION,
            t: self.batches,
            lambda: self.lambda,
            dim: self.dim,
            sigma_lower,
            b: self.b.as_slice().to_vec(),
            t_hat: self.t_hat.as_slice().to_vec(),
            log_det: self.log_det,
            n_observations: self.n_observations,
            potential_sum: self.potential_sum,
            max_phi_norm: self.max_phi_norm,
        }
    }

    pub fn from_checkpoint(cp: &EstimatorCheckpoint) -> Result<Self> {
        if cp.version != EstimatorCheckpoint::VERSION {
            return Err(invalid(format!("unsupported checkpoint version {}", cp.version)));
        }
        let d = cp.dim;
        if cp.sigma_lower.len() != d * (d + 1) / 2 || cp.b.len() != d || cp.t_hat.len() != d {
            return Err(invalid("checkpoint arrays do not match its dimension"));
        }
        let mut est = Self::new(d, cp.lambda)?;
        let mut it = cp.sigma_lower.iter();
        for i in 0..d {
            for j in 0..=i {
                let v = *it.next().expect("length checked");
                est.sigma[(i, j)] = v;
                est.sigma[(j, i)] = v;
            }
        }
        est.b = DVector::from_column_slice(&cp.b);
        est.t_hat = DVector::from_column_slice(&cp.t_hat);
        est.batches = cp.t;
        est.n_observations = cp.n_observations;
        est.potential_sum = cp.potential_sum;
        est.max_phi_norm = cp.max_phi_norm;
        est.refactor();
        Ok(est)
    }
}

/// Serialized estimator; `sigma_lower` is the row-major lower triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCheckpoint {
    pub version: u32,
    pub t: usize,
    pub lambda: f64,
    pub dim: usize,
    pub sigma_lower: Vec<f64>,
    pub b: Vec<f64>,
    pub t_hat: Vec<f64>,
    pub log_det: f64,
    #[serde(default)]
    pub n_observations: u64,
    #[serde(default)]
    pub potential_sum: f64,
    #[serde(default)]
    pub max_phi_norm: f64,
}

impl EstimatorCheckpoint {
    pub const VERSION: u32 = 1;
}

/// Problem sizes entering the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSize {
    pub n_users: usize,
    pub n_contents: usize,
    pub dim: usize,
}

/// Hyperparameters of the confidence radius and the exploration bonus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusConfig {
    pub gamma: f64,
    pub decay: f64,
    pub influence_cap: f64,
    pub lambda: f64,
    /// Reward truncation level.
    pub reward_cap: f64,
    pub delta: f64,
    pub horizon: usize,
    /// Upper bound on `||phi||_2`.
    pub feature_bound: f64,
    /// Stand-in for the unknown `||T*||_2`.
    pub tensor_norm_bound: f64,
    pub kappa: f64,
    /// Multiplier on the bonus; `1.0` is the untuned value.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl BonusConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("decay", self.decay),
            ("influence_cap", self.influence_cap),
            ("lambda", self.lambda),
            ("reward_cap", self.reward_cap),
            ("delta", self.delta),
            ("feature_bound", self.feature_bound),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma >= 1.0 {
            return Err(Error::Config(format!("gamma must be < 1, got {}", self.gamma)));
        }
        if self.tensor_norm_bound < 0.0 || self.scale < 0.0 {
            return Err(Error::Config("tensor_norm_bound and scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Confidence radius at time `t`:
/// `(24/D sqrt(C/(NK) d ln(1 + NK L^2 t/(d lambda))) + 4) ln(8 N^2 K^2 t^2 / delta) + sqrt(lambda) ||T||`.
pub fn beta(cfg: &BonusConfig, size: ProblemSize, t: usize) -> Result<f64> {
    let nk = (size.n_users * size.n_contents) as f64;
    let d = size.dim as f64;
    let t = t as f64;
    let inner = 1.0 + nk * cfg.feature_bound * cfg.feature_bound * t / (d * cfg.lambda);
    let outer = 8.0 * nk * nk * t * t / cfg.delta;
    if !(inner > 0.0) || !(outer > 0.0) || !(cfg.decay > 0.0) || nk == 0.0 || d == 0.0 || t <= 0.0 {
        return Err(Error::Config("confidence radius: nonpositive logarithm argument".into()));
    }
    let width = 24.0 / cfg.decay * (cfg.influence_cap / nk * d * inner.ln()).sqrt() + 4.0;
    Ok(width * outer.ln() + cfg.lambda.sqrt() * cfg.tensor_norm_bound)
}

/// Truncation level `6 / D^2 ln(4 N K T^3)`.
pub fn lambda_cap(n_users: usize, n_contents: usize, horizon: usize, decay: f64) -> f64 {
    let t = horizon as f64;
    6.0 / (decay * decay) * (4.0 * n_users as f64 * n_contents as f64 * t * t * t).ln()
}

/// Bonus prefactor `2 gamma Lambda / (1 - gamma)`, times `2 kappa` for the GLM variant.
pub fn bonus_prefactor(cfg: &BonusConfig, glm: bool) -> f64 {
    let base = 2.0 * cfg.gamma * cfg.reward_cap / (1.0 - cfg.gamma);
    let factor = if glm { 2.0 * cfg.kappa } else { 1.0 };
    base * factor * cfg.scale
}

/// Frozen bonus evaluator built from `Sigma^{-1}` at a switch.
///
/// For a user class with feature `x` and content `k`, stores the `d1 x d1`
/// form `S` with `||x (x) g (x) theta_k||^2_{Sigma^{-1}} = g^T S g`, so a
/// bonus evaluation costs `O(classes * d1^2)` per active content.
#[derive(Debug, Clone)]
pub struct BonusSnapshot {
    beta: f64,
    prefactor: f64,
    d1: usize,
    n_contents: usize,
    class_sizes: Vec<usize>,
    forms: Vec<Vec<f64>>,
}

impl BonusSnapshot {
    pub fn new(
        sigma_inv: &DMatrix<f64>,
        features: &Features,
        classes: &UserClasses,
        beta: f64,
        prefactor: f64,
    ) -> Result<Self> {
        let (d1, d2) = (features.d1, features.d2);
        let d = features.dim();
        if sigma_inv.nrows() != d || sigma_inv.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: sigma_inv.nrows(),
                context: "bonus covariance",
            });
        }
        let kk = features.n_contents();
        let mut forms = Vec::with_capacity(classes.len() * kk);
        for c in 0..classes.len() {
            let x = features.user(classes.representative(c));
            for k in 0..kk {
                let theta = features.content(k);
                // U has columns u_q = x (x) e_q (x) theta
                let mut u = DMatrix::<f64>::zeros(d, d1);
                for p in 0..d1 {
                    if x[p] == 0.0 {
                        continue;
                    }
                    for q in 0..d1 {
                        for r in 0..d2 {
                            u[((p * d1 + q) * d2 + r, q)] = x[p] * theta[r];
                        }
                    }
                }
                let s = u.transpose() * (sigma_inv * &u);
                let mut form = vec![0.0; d1 * d1];
                for q in 0..d1 {
                    for q2 in 0..d1 {
                        form[q * d1 + q2] = 0.5 * (s[(q, q2)] + s[(q2, q)]);
                    }
                }
                forms.push(form);
            }
        }
        Ok(Self {
            beta,
            prefactor,
            d1,
            n_contents: kk,
            class_sizes: (0..classes.len()).map(|c| classes.size(c)).collect(),
            forms,
        })
    }

    /// A snapshot whose bonus is identically zero.
    pub fn zero(features: &Features, classes: &UserClasses) -> Self {
        Self {
            beta: 0.0,
            prefactor: 0.0,
            d1: features.d1,
            n_contents: features.n_contents(),
            class_sizes: (0..classes.len()).map(|c| classes.size(c)).collect(),
            forms: vec![vec![0.0; features.d1 * features.d1]; classes.len() * features.n_contents()],
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn is_zero(&self) -> bool {
        self.beta == 0.0 || self.prefactor == 0.0
    }

    /// `||x_c (x) g (x) theta_k||_{Sigma^{-1}}`.
    pub fn class_norm(&self, class: usize, k: usize, g: &[f64]) -> f64 {
        let form = &self.forms[class * self.n_contents + k];
        let d1 = self.d1;
        let mut acc = 0.0;
        for q in 0..d1 {
            if g[q] == 0.0 {
                continue;
            }
            let row = &form[q * d1..(q + 1) * d1];
            acc += g[q] * dot(row, g);
        }
        acc.max(0.0).sqrt()
    }

    /// `sum_i min(1, beta ||phi_{i,k}||)` for content `k` with aggregate `g`
    /// (without the prefactor).
    pub fn width_for_content(&self, k: usize, g: &[f64]) -> f64 {
        if g.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        self.class_sizes
            .iter()
            .enumerate()
            .map(|(c, &n)| n as f64 * (self.beta * self.class_norm(c, k, g)).min(1.0))
            .sum()
    }

    /// Bonus for content `k` with aggregate `g`.
    pub fn content_term(&self, k: usize, g: &[f64]) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.prefactor * self.width_for_content(k, g)
    }

    /// `b(s, a)` summed over all contents.
    pub fn bonus(&self, features: &Features, s: &StateMatrix, a: crate::diffusion::Action) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let s_a = s.apply_action(a)?;
        Ok((0..self.n_contents).map(|k| self.content_term(k, &features.content_aggregate(&s_a, k))).sum())
    }
}

/// Result of the generalized-linear fit.
#[derive(Debug, Clone)]
pub struct GlmSolution {
    pub tensor: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const GLM_MAX_ITERS: usize = 500;
pub const GLM_TOLERANCE: f64 = 1e-8;

/// Minimizes `1/2 || lambda T + sum [mu(<T, phi>) - y] phi ||^2_{Sigma^{-1}}` by
/// damped Newton steps on the estimating equation.
///
/// The estimating function is the gradient of a strictly convex potential
/// (its Jacobian `lambda I + sum mu' phi phi^T` is positive definite), so the
/// minimum value is zero at its unique root. Convergence is declared when the
/// estimating function's norm drops below `GLM_TOLERANCE * max(1, ||B||)`.
pub fn solve_glm(
    history: &[GroupedObservation],
    link: &LinkFunction,
    lambda: f64,
    sigma_inv: &DMatrix<f64>,
) -> Result<GlmSolution> {
    let d = sigma_inv.nrows();
    for g in history {
        if g.phi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: g.phi.len(), context: "GLM history" });
        }
    }
    let phis: Vec<DVector<f64>> = history.iter().map(|g| DVector::from_column_slice(&g.phi)).collect();
    let mut b = DVector::<f64>::zeros(d);
    for (g, phi) in history.iter().zip(&phis) {
        b.axpy(g.successes as f64, phi, 1.0);
    }
    let scale = b.norm().max(1.0);

    let estimating = |t: &DVector<f64>| -> DVector<f64> {
        let mut out = t * lambda - &b;
        for (g, phi) in history.iter().zip(&phis) {
            let z = phi.dot(t);
            out.axpy(g.count as f64 * link.mu(z), phi, 1.0);
        }
        out
    };
    let objective = |e: &DVector<f64>| 0.5 * e.dot(&(sigma_inv * e));

    let mut t = DVector::<f64>::zeros(d);
    let mut e = estimating(&t);
    let mut f = objective(&e);
    for iter in 0..GLM_MAX_ITERS {
        let residual = e.norm();
        if residual <= GLM_TOLERANCE * scale {
            return Ok(GlmSolution { tensor: t, iterations: iter, residual });
        }
        let mut jac = DMatrix::<f64>::identity(d, d) * lambda;
        for (g, phi) in history.iter().zip(&phis) {
            let w = g.count as f64 * link.derivative(phi.dot(&t));
            jac.ger(w, phi, phi, 1.0);
        }
        let step = match jac.cholesky() {
            Some(chol) => chol.solve(&e),
            None => {
                return Err(Error::NonConvergence { solver: "GLM Newton", iterations: iter, residual });
            }
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &t - &step * alpha;
            let e_c = estimating(&cand);
            let f_c = objective(&e_c);
            if f_c < f || e_c.norm() <= GLM_TOLERANCE * scale {
                t = cand;
                e = e_c;
                f = f_c;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            let residual = e.norm();
            if residual <= GLM_TOLERANCE * scale * 10.0 {
                return Ok(GlmSolution { tensor: t, iterations: iter + 1, residual });
            }
            return Err(Error::NonConvergence { solver: "GLM Newton", iterations: iter + 1, residual });
        }
    }
    let residual = e.norm();
    if residual <= GLM_TOLERANCE * scale {
        Ok(GlmSolution { tensor: t, iterations: GLM_MAX_ITERS, residual })
    } else {
        Err(Error::NonConvergence { solver: "GLM Newton", iterations: GLM_MAX_ITERS, residual })
    }
}

/// Deterministic bound `2 d ln((d lambda + n L^2) / (d lambda))` on the potential sum.
pub fn elliptical_potential_bound(dim: usize, lambda: f64, n_observations: u64, feature_bound: f64) -> f64 {
    let d = dim as f64;
    let n = n_observations as f64;
    2.0 * d * ((d * lambda + n * feature_bound * feature_bound) / (d * lambda)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{Action, RewardWeights};
    use crate::rng::seeded;
    use rand::Rng;

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn empty_batch_is_a_no_op_on_the_regression() {
        let mut est = EstimatorState::new(3, 1.0).unwrap();
        est.ingest_batch(&[]).unwrap();
        assert_eq!(est.sigma(), &DMatrix::identity(3, 3));
        assert_eq!(est.b(), &DVector::zeros(3));
    }

    #[test]
    fn single_observation_update() {
        let mut est = EstimatorState::new(3, 1.0).unwrap();
        est.ingest_batch(&[(unit(3, 0), true)]).unwrap();
        assert_eq!(est.sigma()[(0, 0)], 2.0);
        assert_eq!(est.sigma()[(1, 1)], 1.0);
        assert_eq!(est.b(), &DVector::from_column_slice(&unit(3, 0)));
        let t = est.solve_ridge().clone();
        assert!((t[0] - 0.5).abs() < 1e-15 && t[1] == 0.0);
    }

    #[test]
    fn zero_b_gives_zero_estimate() {
        let mut est = EstimatorState::new(4, 2.0).unwrap();
        est.ingest_batch(&[(vec![1.0, 2.0, 0.0, 1.0], false)]).unwrap();
        assert!(est.solve_ridge().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut est = EstimatorState::new(3, 1.0).unwrap();
        assert!(matches!(est.ingest_batch(&[(vec![1.0], true)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_features_are_skipped() {
        let mut est = EstimatorState::new(2, 1.0).unwrap();
        est.ingest_batch(&[(vec![0.0, 0.0], true)]).unwrap();
        assert_eq!(est.n_observations(), 0);
        assert_eq!(est.b(), &DVector::zeros(2));
    }

    #[test]
    fn inverse_tracks_direct_inversion_after_many_updates() {
        let d = 8;
        let mut est = EstimatorState::new(d, 1.0).unwrap();
        let mut rng = seeded(42);
        for _ in 0..100 {
            let batch: Vec<(Vec<f64>, bool)> = (0..10)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
                    let n = crate::diffusion::norm(&v);
                    (v.iter().map(|x| x / n).collect(), rng.random::<bool>())
                })
                .collect();
            est.ingest_batch(&batch).unwrap();
        }
        let direct = est.sigma().clone().try_inverse().unwrap();
        assert!((est.sigma_inv() - direct).norm() < 1e-8);
        let logdet = est.sigma().clone().cholesky().unwrap().l().diagonal().iter().map(|v| 2.0 * v.ln()).sum::<f64>();
        assert!((est.log_det() - logdet).abs() < 1e-6);
    }

    #[test]
    fn log_det_rank_one_identity() {
        let mut est = EstimatorState::new(3, 1.5).unwrap();
        est.ingest_batch(&[(vec![0.3, -0.2, 0.9], true)]).unwrap();
        let phi = vec![0.1, 0.5, -0.4];
        let before = est.log_det();
        let q = est.inv_norm_sq(&phi);
        est.ingest_batch(&[(phi, false)]).unwrap();
        assert!((est.log_det() - (before + q.ln_1p())).abs() < 1e-10);
    }

    #[test]
    fn grouped_updates_match_individual_ones() {
        let phi = vec![0.2, 0.7, -0.1];
        let mut a = EstimatorState::new(3, 1.0).unwrap();
        let mut b = EstimatorState::new(3, 1.0).unwrap();
        a.ingest_batch(&vec![(phi.clone(), true); 5]).unwrap();
        for y in [true, true, true, true, true] {
            b.ingest_grouped(&[GroupedObservation { phi: phi.clone(), count: 1, successes: u32::from(y) }]).unwrap();
        }
        assert!((a.sigma_inv() - b.sigma_inv()).norm() < 1e-12);
        assert!((a.potential_sum() - b.potential_sum()).abs() < 1e-12);
        assert!((a.log_det() - b.log_det()).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut est = EstimatorState::new(3, 1.0).unwrap();
        est.ingest_batch(&[(vec![0.3, 0.1, 0.2], true), (vec![0.0, 1.0, 0.5], false)]).unwrap();
        est.solve_ridge();
        let json = serde_json::to_string(&est.checkpoint()).unwrap();
        let cp: EstimatorCheckpoint = serde_json::from_str(&json).unwrap();
        let back = EstimatorState::from_checkpoint(&cp).unwrap();
        assert!((back.sigma_inv() - est.sigma_inv()).norm() < 1e-10);
        assert!((back.log_det() - est.log_det()).abs() < 1e-10);
        assert_eq!(back.t_hat(), est.t_hat());
        assert_eq!(back.batches(), est.batches());
    }

    fn cfg() -> BonusConfig {
        BonusConfig {
            gamma: 0.9,
            decay: 1.0,
            influence_cap: 1.0,
            lambda: 1.0,
            reward_cap: 10.0,
            delta: 8.0,
            horizon: 10,
            feature_bound: 1.0,
            tensor_norm_bound: 0.0,
            kappa: 1.0,
            scale: 1.0,
        }
    }

    #[test]
    fn beta_vanishes_when_log_argument_is_one() {
        let size = ProblemSize { n_users: 1, n_contents: 1, dim: 1 };
        assert_eq!(beta(&cfg(), size, 1).unwrap(), 0.0);
    }

    #[test]
    fn beta_is_nondecreasing_in_time() {
        let mut c = cfg();
        c.delta = 0.05;
        c.decay = 0.5;
        let size = ProblemSize { n_users: 30, n_contents: 2, dim: 12 };
        let mut prev = 0.0;
        for t in 1..=10_000 {
            let b = beta(&c, size, t).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn beta_rejects_bad_config() {
        let mut c = cfg();
        c.decay = 0.0;
        assert!(beta(&c, ProblemSize { n_users: 1, n_contents: 1, dim: 1 }, 1).is_err());
    }

    #[test]
    fn lambda_cap_examples() {
        assert!(lambda_cap(10, 10, 10, 0.9) < lambda_cap(10, 10, 10, 0.5));
        // 4 N K T^3 = e  =>  Lambda = 6 / decay^2
        let e = std::f64::consts::E;
        let forced = 6.0 / (0.5f64 * 0.5) * (4.0 * (e / 4.0)).ln();
        assert!((forced - 24.0).abs() < 1e-12);
    }

    #[test]
    fn bonus_snapshot_limits() {
        let features =
            Features::new(2, 1, vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 0.0]], vec![vec![1.0]]).unwrap();
        let classes = UserClasses::new(&features, &RewardWeights::Unit);
        let est = EstimatorState::new(4, 1.0).unwrap();
        let s = StateMatrix::empty(3, 1);
        let zero = BonusSnapshot::new(est.sigma_inv(), &features, &classes, 0.0, 5.0).unwrap();
        assert_eq!(zero.bonus(&features, &s, Action::new(0, 0)).unwrap(), 0.0);
        // saturated: every user with nonzero phi contributes one
        let big = BonusSnapshot::new(est.sigma_inv(), &features, &classes, 1e12, 5.0).unwrap();
        assert!((big.bonus(&features, &s, Action::new(1, 0)).unwrap() - 5.0 * 2.0).abs() < 1e-9);
    }
}
