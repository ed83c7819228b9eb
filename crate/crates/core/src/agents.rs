//! Policies: the slow-switching optimistic agent, its variants and baselines.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    active_pair_bound, connectivity_from_tensor, kron3, Action, Features, LinkFunction, NetworkModel, RewardWeights,
    StateMatrix, UserClasses,
};
use crate::error::{Error, Result};
use crate::estimator::{
    beta, bonus_prefactor, lambda_cap, solve_glm, BonusConfig, BonusSnapshot, EstimatorState, GroupedObservation,
    ProblemSize,
};
use crate::planner::{
    truncated_value_iteration, ClassModel, ExactProblem, LookaheadPlanner, PlanConfig, PlanMode, QFunction, Terminal,
};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Morima,
    MorimaNoSwitch,
    MorimaOneStep,
    MorimaKnownModel,
    Random,
    Imlinucb { budget: usize },
}

impl PolicyKind {
    pub fn label(&self) -> String {
        match self {
            PolicyKind::Morima => "morima".into(),
            PolicyKind::MorimaNoSwitch => "morima_no_switch".into(),
            PolicyKind::MorimaOneStep => "morima_one_step".into(),
            PolicyKind::MorimaKnownModel => "known_model".into(),
            PolicyKind::Random => "random".into(),
            PolicyKind::Imlinucb { budget } => format!("imlinucb_b{budget}"),
        }
    }
}

/// Agent hyperparameters shared by all learning policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Reward truncation level; `None` uses `6/D^2 ln(4 N K T^3)`.
    pub reward_cap: Option<f64>,
    pub tensor_norm_bound: f64,
    /// Bound on `||phi||`; `None` derives it from the active-pair cap.
    pub feature_bound: Option<f64>,
    /// Multiplier on the bonus prefactor.
    pub bonus_scale: f64,
    /// Multiplier on the confidence radius.
    pub beta_scale: f64,
    /// Width multiplier of the batch UCB baseline.
    pub imlinucb_alpha: f64,
    pub plan: PlanConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            lambda: 1.0,
            delta: 0.05,
            reward_cap: None,
            tensor_norm_bound: 1.0,
            feature_bound: None,
            bonus_scale: 1.0,
            beta_scale: 1.0,
            imlinucb_alpha: 1.0,
            plan: PlanConfig::default(),
        }
    }
}

/// What a policy did at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    pub action: Action,
    pub switched: bool,
}

pub trait Policy: Send {
    fn act(&mut self, s: &StateMatrix) -> Result<StepDecision>;

    /// Node-level feedback for the transition `s --a--> next`.
    fn observe(&mut self, s: &StateMatrix, a: Action, next: &StateMatrix) -> Result<()>;

    /// Plan computations so far, including the initial one.
    fn switch_count(&self) -> usize {
        0
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        None
    }
}

/// Slow-switching trigger: `log det Sigma > Z + ln 2`, strictly.
pub fn should_switch(current_logdet: f64, z: f64) -> bool {
    current_logdet > z + std::f64::consts::LN_2
}

/// Deterministic cap on plan computations:
/// `d ln((d + N K T L^2 / lambda) / d) / ln 2 + 1`.
pub fn switch_bound(
    dim: usize,
    n_users: usize,
    n_contents: usize,
    horizon: usize,
    feature_bound: f64,
    lambda: f64,
) -> f64 {
    let d = dim as f64;
    let nkt = (n_users * n_contents * horizon) as f64;
    d * ((d + nkt * feature_bound * feature_bound / lambda) / d).ln() / std::f64::consts::LN_2 + 1.0
}

/// Immutable facts every learning policy needs.
#[derive(Debug, Clone)]
pub struct AgentContext {
    pub features: Features,
    pub weights: RewardWeights,
    pub link: LinkFunction,
    pub decay: f64,
    pub influence_cap: f64,
    pub horizon: usize,
    pub bonus: BonusConfig,
    pub size: ProblemSize,
    /// Users grouped by features only: members share their regression feature.
    pub feature_classes: UserClasses,
    /// Users grouped by features and reward weights: the planning classes.
    pub plan_classes: UserClasses,
}

impl AgentContext {
    pub fn new(
        model: &NetworkModel,
        weights: RewardWeights,
        link: LinkFunction,
        horizon: usize,
        cfg: &AgentConfig,
    ) -> Result<Self> {
        let features = model.features().clone();
        let n = model.n_users();
        let kk = model.n_contents();
        let reward_cap = cfg.reward_cap.unwrap_or_else(|| lambda_cap(n, kk, horizon, model.decay()));
        let feature_bound = cfg
            .feature_bound
            .unwrap_or_else(|| model.feature_norm_bound(active_pair_bound(model.decay(), horizon, cfg.delta) + 1.0));
        let bonus = BonusConfig {
            gamma: cfg.gamma,
            decay: model.decay(),
            influence_cap: model.influence_cap(),
            lambda: cfg.lambda,
            reward_cap,
            delta: cfg.delta,
            horizon,
            feature_bound,
            tensor_norm_bound: cfg.tensor_norm_bound,
            kappa: link.kappa(),
            scale: cfg.bonus_scale,
        };
        bonus.validate()?;
        cfg.plan.validate()?;
        weights.validate(n, kk)?;
        Ok(Self {
            feature_classes: UserClasses::new(&features, &RewardWeights::Unit),
            plan_classes: UserClasses::new(&features, &weights),
            size: ProblemSize { n_users: n, n_contents: kk, dim: features.dim() },
            features,
            weights,
            link,
            decay: model.decay(),
            influence_cap: model.influence_cap(),
            horizon,
            bonus,
        })
    }

    fn entry_clamp(&self, headroom: f64) -> f64 {
        headroom * self.influence_cap / (self.size.n_users * self.size.n_contents) as f64
    }

    /// One grouped observation per (feature class, content with an active user in `s_a`).
    pub fn feedback(&self, s_a: &StateMatrix, next: &StateMatrix) -> Vec<GroupedObservation> {
        let kk = self.size.n_contents;
        let classes = &self.feature_classes;
        let mut successes = vec![0u32; classes.len() * kk];
        for (i, k) in next.pairs() {
            successes[classes.class_of(i) * kk + k] += 1;
        }
        let mut out = Vec::new();
        for k in 0..kk {
            let g = self.features.content_aggregate(s_a, k);
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let theta = self.features.content(k);
            for c in 0..classes.len() {
                let x = self.features.user(classes.representative(c));
                if x.iter().all(|&v| v == 0.0) {
                    continue;
                }
                out.push(GroupedObservation {
                    phi: kron3(x, &g, theta),
                    count: classes.size(c) as u32,
                    successes: successes[c * kk + k],
                });
            }
        }
        out
    }

    fn new_estimator(&self, lambda: f64) -> Result<EstimatorState> {
        let est = EstimatorState::new(self.size.dim, lambda)?;
        Ok(if self.link.is_identity() { est } else { est.with_history() })
    }
}

/// Plan built from a tensor, a bonus snapshot and the planner settings.
pub fn build_plan(
    ctx: &AgentContext,
    tensor: &[f64],
    bonus: Option<Arc<BonusSnapshot>>,
    plan: &PlanConfig,
) -> Result<QFunction> {
    let gamma = ctx.bonus.gamma;
    let cap = ctx.bonus.reward_cap;
    match plan.mode {
        PlanMode::Lookahead => {
            let model = ClassModel::from_tensor(
                &ctx.features,
                &ctx.weights,
                tensor,
                ctx.link,
                ctx.entry_clamp(plan.headroom),
                ctx.decay,
            )?;
            Ok(QFunction::Lookahead(LookaheadPlanner::new(Arc::new(model), bonus, gamma, cap, plan)?))
        }
        PlanMode::Exact => {
            let mut conn = connectivity_from_tensor(tensor, &ctx.features)?;
            let hi = ctx.entry_clamp(plan.headroom).min(1.0);
            for k in 0..conn.n_contents() {
                for i in 0..conn.n_users() {
                    for j in 0..conn.n_users() {
                        conn.set(k, i, j, conn.get(k, i, j).clamp(0.0, hi));
                    }
                }
            }
            let features = &ctx.features;
            let bonus_fn = move |s: &StateMatrix, a: Action| match &bonus {
                Some(b) => b.bonus(features, s, a).unwrap_or(0.0),
                None => 0.0,
            };
            let problem = ExactProblem {
                connectivity: &conn,
                link: &ctx.link,
                weights: &ctx.weights,
                gamma,
                reward_cap: cap,
                bonus: &bonus_fn,
            };
            Ok(QFunction::Exact(truncated_value_iteration(&problem, plan)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Replan {
    /// When the determinant doubles.
    Doubling,
    /// At every step.
    Always,
    /// Once, at the first step.
    Once,
}

/// Optimistic model-based agent with slow switching.
pub struct Morima {
    ctx: Arc<AgentContext>,
    plan_cfg: PlanConfig,
    beta_scale: f64,
    replan: Replan,
    estimator: EstimatorState,
    /// Planning tensor override; the bonus is zero when set.
    fixed_tensor: Option<Vec<f64>>,
    last_logdet: f64,
    plan: Option<Arc<QFunction>>,
    switches: usize,
    step: usize,
    rng: SimRng,
}

impl Morima {
    pub fn new(ctx: Arc<AgentContext>, cfg: &AgentConfig, rng: SimRng) -> Result<Self> {
        let estimator = ctx.new_estimator(cfg.lambda)?;
        Ok(Self {
            last_logdet: estimator.log_det(),
            ctx,
            plan_cfg: cfg.plan.clone(),
            beta_scale: cfg.beta_scale,
            replan: Replan::Doubling,
            estimator,
            fixed_tensor: None,
            plan: None,
            switches: 0,
            step: 0,
            rng,
        })
    }

    /// Replans at every step instead of on determinant doubling.
    pub fn no_switch(mut self) -> Self {
        self.replan = Replan::Always;
        self
    }

    /// One-step lookahead valued by the expected immediate reward.
    pub fn one_step(mut self) -> Self {
        self.plan_cfg.depth = 1;
        self.plan_cfg.terminal = Terminal::Immediate;
        self
    }

    /// Plans with `tensor` and zero bonus instead of the estimate.
    pub fn with_fixed_tensor(mut self, tensor: Vec<f64>) -> Self {
        self.fixed_tensor = Some(tensor);
        self
    }

    /// Plans once with the true tensor and zero bonus.
    pub fn known_model(ctx: Arc<AgentContext>, tensor: Vec<f64>, cfg: &AgentConfig, rng: SimRng) -> Result<Self> {
        let mut agent = Self::new(ctx, cfg, rng)?.with_fixed_tensor(tensor);
        agent.replan = Replan::Once;
        Ok(agent)
    }

    pub fn plan(&self) -> Option<&Arc<QFunction>> {
        self.plan.as_ref()
    }

    /// `Z`: log-determinant at the most recent switch.
    pub fn last_switch_logdet(&self) -> f64 {
        self.last_logdet
    }

    pub fn step(&self) -> usize {
        self.step
    }

    fn recompute(&mut self, t: usize) -> Result<()> {
        let ctx = &self.ctx;
        let (tensor, bonus) = match &self.fixed_tensor {
            Some(tensor) => (tensor.clone(), None),
            None => {
                if ctx.link.is_identity() {
                    self.estimator.solve_ridge();
                } else {
                    let history = self.estimator.history().unwrap_or(&[]);
                    let sol = solve_glm(history, &ctx.link, self.estimator.lambda(), self.estimator.sigma_inv())?;
                    self.estimator.set_estimate(sol.tensor)?;
                }
                let radius = beta(&ctx.bonus, ctx.size, t)? * self.beta_scale;
                let prefactor = bonus_prefactor(&ctx.bonus, !ctx.link.is_identity());
                let snapshot = if radius == 0.0 || prefactor == 0.0 {
                    None
                } else {
                    Some(Arc::new(BonusSnapshot::new(
                        self.estimator.sigma_inv(),
                        &ctx.features,
                        &ctx.plan_classes,
                        radius,
                        prefactor,
                    )?))
                };
                (self.estimator.t_hat().as_slice().to_vec(), snapshot)
            }
        };
        self.plan = Some(Arc::new(build_plan(ctx, &tensor, bonus, &self.plan_cfg)?));
        self.last_logdet = self.estimator.log_det();
        self.switches += 1;
        Ok(())
    }
}

impl Policy for Morima {
    fn act(&mut self, s: &StateMatrix) -> Result<StepDecision> {
        let t = self.step + 1;
        let switched = match (&self.plan, self.replan) {
            (None, _) => true,
            (Some(_), Replan::Always) => true,
            (Some(_), Replan::Once) => false,
            (Some(_), Replan::Doubling) => should_switch(self.estimator.log_det(), self.last_logdet),
        };
        if switched {
            let switch = self.switches + 1;
            self.recompute(t).map_err(|e| Error::Planner { step: t, switch, source: Box::new(e) })?;
        }
        let seed: u64 = self.rng.random();
        let plan = self.plan.as_ref().expect("plan computed above");
        let action =
            plan.greedy(s, seed).map_err(|e| Error::Planner { step: t, switch: self.switches, source: Box::new(e) })?;
        self.step = t;
        Ok(StepDecision { action, switched })
    }

    fn observe(&mut self, s: &StateMatrix, a: Action, next: &StateMatrix) -> Result<()> {
        if self.fixed_tensor.is_some() {
            return Ok(());
        }
        let s_a = s.apply_action(a)?;
        let obs = self.ctx.feedback(&s_a, next);
        self.estimator.ingest_grouped(&obs)
    }

    fn switch_count(&self) -> usize {
        self.switches
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        if self.fixed_tensor.is_some() {
            None
        } else {
            Some(&self.estimator)
        }
    }
}

/// Uniform over all `N K` actions.
pub fn random_policy<R: Rng + ?Sized>(s: &StateMatrix, rng: &mut R) -> Action {
    let (n, k) = s.shape();
    Action::from_index(rng.random_range(0..n * k), k)
}

pub struct RandomPolicy {
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(rng: SimRng) -> Self {
        Self { rng }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, s: &StateMatrix) -> Result<StepDecision> {
        Ok(StepDecision { action: random_policy(s, &mut self.rng), switched: false })
    }

    fn observe(&mut self, _: &StateMatrix, _: Action, _: &StateMatrix) -> Result<()> {
        Ok(())
    }
}

/// Batch UCB baseline: every `budget` steps, ranks all actions at the batch
/// start by `E[r(s')] + alpha sum_{i,k} min(1, ||phi_{i,k}||_{Sigma^{-1}})`
/// and plays the top `budget` on consecutive steps without looking at the
/// intermediate states.
pub struct ImLinUcb {
    ctx: Arc<AgentContext>,
    budget: usize,
    alpha: f64,
    headroom: f64,
    estimator: EstimatorState,
    queue: std::collections::VecDeque<Action>,
    batches: usize,
}

impl ImLinUcb {
    pub fn new(ctx: Arc<AgentContext>, budget: usize, cfg: &AgentConfig) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Config("batch budget must be at least 1".into()));
        }
        Ok(Self {
            estimator: EstimatorState::new(ctx.size.dim, cfg.lambda)?,
            ctx,
            budget,
            alpha: cfg.imlinucb_alpha,
            headroom: cfg.plan.headroom,
            queue: Default::default(),
            batches: 0,
        })
    }

    /// Estimated model with an externally supplied tensor (used with the true one in tests).
    pub fn select_batch_with(&self, s: &StateMatrix, tensor: &[f64], alpha: f64) -> Result<Vec<Action>> {
        let ctx = &self.ctx;
        let model = ClassModel::from_tensor(
            &ctx.features,
            &ctx.weights,
            tensor,
            ctx.link,
            ctx.entry_clamp(self.headroom),
            ctx.decay,
        )?;
        let width = if alpha > 0.0 {
            Some(BonusSnapshot::new(self.estimator.sigma_inv(), &ctx.features, &ctx.plan_classes, 1.0, alpha)?)
        } else {
            None
        };
        let classes = &ctx.plan_classes;
        let kk = ctx.size.n_contents;
        let counts = model.counts(s);
        let base_expected: Vec<f64> = (0..kk).map(|k| model.expected_content_reward(&counts, k)).collect();
        let base_width: Vec<f64> =
            (0..kk).map(|k| width.as_ref().map_or(0.0, |w| w.content_term(k, &model.aggregate(&counts, k)))).collect();
        let base: f64 = base_expected.iter().sum::<f64>() + base_width.iter().sum::<f64>();

        // (score, action) for every distinct action; members of a class share a score
        let mut scored: Vec<(f64, Action)> = Vec::new();
        for c in 0..classes.len() {
            for k in 0..kk {
                let inactive: Vec<usize> = classes.members(c).iter().copied().filter(|&u| !s.contains(u, k)).collect();
                if inactive.is_empty() {
                    continue;
                }
                let mut post = counts.clone();
                post[c * kk + k] += 1;
                let e = model.expected_content_reward(&post, k);
                let w = width.as_ref().map_or(0.0, |w| w.content_term(k, &model.aggregate(&post, k)));
                let score = base - base_expected[k] - base_width[k] + e + w;
                scored.extend(inactive.into_iter().take(self.budget).map(|u| (score, Action::new(u, k))));
            }
        }
        for (u, k) in s.pairs() {
            scored.push((base, Action::new(u, k)));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(scored.into_iter().take(self.budget).map(|(_, a)| a).collect())
    }

    pub fn select_batch(&mut self, s: &StateMatrix) -> Result<Vec<Action>> {
        self.estimator.solve_ridge();
        let tensor = self.estimator.t_hat().as_slice().to_vec();
        self.select_batch_with(s, &tensor, self.alpha)
    }
}

impl Policy for ImLinUcb {
    fn act(&mut self, s: &StateMatrix) -> Result<StepDecision> {
        let switched = self.queue.is_empty();
        if switched {
            let batch = self.select_batch(s)?;
            self.queue.extend(batch);
            self.batches += 1;
        }
        let action = self.queue.pop_front().expect("batch is nonempty");
        Ok(StepDecision { action, switched })
    }

    fn observe(&mut self, s: &StateMatrix, a: Action, next: &StateMatrix) -> Result<()> {
        let s_a = s.apply_action(a)?;
        let obs = self.ctx.feedback(&s_a, next);
        self.estimator.ingest_grouped(&obs)
    }

    fn switch_count(&self) -> usize {
        self.batches
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        Some(&self.estimator)
    }
}

/// Builds a policy for one run. `rng` is the policy's private stream.
pub fn build_policy(
    kind: PolicyKind,
    model: &NetworkModel,
    ctx: Arc<AgentContext>,
    cfg: &AgentConfig,
    rng: SimRng,
) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Morima => Box::new(Morima::new(ctx, cfg, rng)?),
        PolicyKind::MorimaNoSwitch => Box::new(Morima::new(ctx, cfg, rng)?.no_switch()),
        PolicyKind::MorimaOneStep => Box::new(Morima::new(ctx, cfg, rng)?.one_step()),
        PolicyKind::MorimaKnownModel => Box::new(Morima::known_model(ctx, model.tensor().to_vec(), cfg, rng)?),
        PolicyKind::Random => Box::new(RandomPolicy::new(rng)),
        PolicyKind::Imlinucb { budget } => Box::new(ImLinUcb::new(ctx, budget, cfg)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_trigger_is_strict() {
        let z = 3.0;
        assert!(should_switch(z + 2.1f64.ln(), z));
        assert!(!should_switch(z + 1.9f64.ln(), z));
        assert!(!should_switch(z + std::f64::consts::LN_2, z));
    }

    #[test]
    fn random_policy_single_action() {
        let s = StateMatrix::empty(1, 1);
        let mut rng = crate::rng::seeded(1);
        for _ in 0..10 {
            assert_eq!(random_policy(&s, &mut rng), Action::new(0, 0));
        }
    }

    #[test]
    fn policy_labels_are_distinct() {
        let kinds = [
            PolicyKind::Morima,
            PolicyKind::MorimaNoSwitch,
            PolicyKind::MorimaOneStep,
            PolicyKind::MorimaKnownModel,
            PolicyKind::Random,
            PolicyKind::Imlinucb { budget: 2 },
        ];
        let labels: std::collections::BTreeSet<String> = kinds.iter().map(PolicyKind::label).collect();
        assert_eq!(labels.len(), kinds.len());
    }
}
