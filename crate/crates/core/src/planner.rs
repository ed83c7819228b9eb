//! Optimistic planning against an estimated model.
//!
//! Two planners share the truncated Bellman update
//! `Q(s,a) = min(Lambda/(1-gamma), r~(s) + b(s,a) + gamma E[max_a' Q(s',a')])`:
//!
//! - [`truncated_value_iteration`] enumerates all `2^(NK)` states (NK <= 16).
//! - [`LookaheadPlanner`] expands a depth-limited expectimax tree with sampled
//!   next states. It works on per-class activation counts: users with equal
//!   features and reward weights are exchangeable, so a class of `n` users
//!   activates as `Binomial(n, p)`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    content_slice, dot, Action, Connectivity, Features, LinkFunction, RewardWeights, StateMatrix, UserClasses,
};
use crate::error::{invalid, Error, Result};
use crate::estimator::BonusSnapshot;
use crate::rng::{mix, split};

/// Largest `N * K` accepted by exact value iteration.
pub const EXACT_MAX_PAIRS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Exact,
    #[default]
    Lookahead,
}

/// Closure of the lookahead tree at its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// `r~(s) (1 - D) / (1 - gamma (1 - D))`: geometric decay of the state.
    #[default]
    DecayTail,
    /// `r~(s)`: value of the next state is its immediate reward.
    Immediate,
}

impl Terminal {
    pub fn factor(self, gamma: f64, decay: f64) -> f64 {
        match self {
            Terminal::DecayTail => (1.0 - decay) / (1.0 - gamma * (1.0 - decay)),
            Terminal::Immediate => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub mode: PlanMode,
    /// Number of action levels in the lookahead tree.
    pub depth: usize,
    /// Sampled next states per expectation node.
    pub rollouts: usize,
    /// Candidates kept at inner nodes, ranked by optimistic one-step gain.
    pub inner_candidates: usize,
    pub terminal: Terminal,
    /// Estimated entries are clamped to `[0, headroom * C/(NK)]`.
    pub headroom: f64,
    pub vi_tolerance: f64,
    pub vi_max_iters: usize,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            mode: PlanMode::Lookahead,
            depth: 2,
            rollouts: 32,
            inner_candidates: 8,
            terminal: Terminal::DecayTail,
            headroom: 10.0,
            vi_tolerance: 1e-9,
            vi_max_iters: 10_000,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.rollouts == 0 || self.inner_candidates == 0 {
            return Err(Error::Config("depth, rollouts and inner_candidates must be at least 1".into()));
        }
        if !(self.vi_tolerance > 0.0) || self.vi_max_iters == 0 {
            return Err(Error::Config("vi_tolerance and vi_max_iters must be positive".into()));
        }
        if !(self.headroom > 0.0) {
            return Err(Error::Config("headroom must be positive".into()));
        }
        Ok(())
    }
}

/// Argmax over scored candidates; equal scores go to the smallest `(user, content)`.
pub fn greedy_action(candidates: &[(Action, f64)]) -> Option<Action> {
    let mut best: Option<(Action, f64)> = None;
    for &(a, v) in candidates {
        best = match best {
            None => Some((a, v)),
            Some((b, bv)) if v > bv || (v == bv && a < b) => Some((a, v)),
            keep => keep,
        };
    }
    best.map(|(a, _)| a)
}

/// Dynamics for exact value iteration over explicit per-user states.
pub struct ExactProblem<'a> {
    pub connectivity: &'a Connectivity,
    pub link: &'a LinkFunction,
    pub weights: &'a RewardWeights,
    pub gamma: f64,
    pub reward_cap: f64,
    pub bonus: &'a (dyn Fn(&StateMatrix, Action) -> f64 + Sync),
}

/// Converged table over all `2^(NK)` states; bit `user * K + content` is pair activity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactQ {
    pub n_users: usize,
    pub n_contents: usize,
    pub cap: f64,
    pub iterations: usize,
    /// Sup-norm change of each sweep.
    pub residuals: Vec<f64>,
    values: Vec<f64>,
}

impl ExactQ {
    fn n_actions(&self) -> usize {
        self.n_users * self.n_contents
    }

    pub fn q(&self, s: &StateMatrix, a: Action) -> Result<f64> {
        s.check_action(a)?;
        Ok(self.values[state_mask(s) * self.n_actions() + a.index(self.n_contents)])
    }

    pub fn q_mask(&self, mask: usize, action_index: usize) -> f64 {
        self.values[mask * self.n_actions() + action_index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn greedy(&self, s: &StateMatrix) -> Result<Action> {
        let mask = state_mask(s);
        let scored: Vec<(Action, f64)> =
            (0..self.n_actions()).map(|ai| (Action::from_index(ai, self.n_contents), self.q_mask(mask, ai))).collect();
        greedy_action(&scored).ok_or_else(|| invalid("empty action set"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Bitmask of a state; bit `user * K + content`.
pub fn state_mask(s: &StateMatrix) -> usize {
    let k = s.n_contents();
    s.pairs().fold(0usize, |m, (i, c)| m | (1 << (i * k + c)))
}

pub fn state_from_mask(mask: usize, n_users: usize, n_contents: usize) -> StateMatrix {
    let pairs = (0..n_users * n_contents).filter(|b| mask >> b & 1 == 1).map(|b| {
        let a = Action::from_index(b, n_contents);
        (a.user, a.content)
    });
    StateMatrix::from_pairs(n_users, n_contents, pairs).expect("indices in range")
}

/// Truncated value iteration from the optimistic initialization `Lambda/(1-gamma)`.
///
/// `E[V(s')]` depends on `(s, a)` only through `s_a`, so each sweep evaluates
/// one expectation per post-action state, enumerating only bits with
/// activation probability strictly inside `(0, 1)`.
pub fn truncated_value_iteration(problem: &ExactProblem<'_>, cfg: &PlanConfig) -> Result<ExactQ> {
    cfg.validate()?;
    let n = problem.connectivity.n_users();
    let kk = problem.connectivity.n_contents();
    let pairs = n * kk;
    if pairs > EXACT_MAX_PAIRS {
        return Err(invalid(format!("exact planning needs N*K <= {EXACT_MAX_PAIRS}, got {pairs}")));
    }
    if !(problem.gamma >= 0.0 && problem.gamma < 1.0) || !(problem.reward_cap > 0.0) {
        return Err(Error::Config("gamma must lie in [0, 1) and the reward cap must be positive".into()));
    }
    let n_states = 1usize << pairs;
    let cap = problem.reward_cap / (1.0 - problem.gamma);

    // support of P(. | s_a) for every post-action mask
    let mut support: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_states);
    let mut total = 0usize;
    for u in 0..n_states {
        let mut base = 0usize;
        let mut uncertain: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            for k in 0..kk {
                let z: f64 = (0..n)
                    .filter(|&j| u >> (j * kk + k) & 1 == 1)
                    .map(|j| problem.connectivity.get(k, i, j).clamp(0.0, 1.0))
                    .sum();
                let p = problem.link.mu(z).clamp(0.0, 1.0);
                let bit = i * kk + k;
                if p >= 1.0 {
                    base |= 1 << bit;
                } else if p > 0.0 {
                    uncertain.push((bit, p));
                }
            }
        }
        total += 1 << uncertain.len();
        if total > 50_000_000 {
            return Err(invalid("transition support too large for exact planning"));
        }
        let mut outcomes = Vec::with_capacity(1 << uncertain.len());
        for m in 0..(1usize << uncertain.len()) {
            let mut mask = base;
            let mut prob = 1.0;
            for (idx, &(bit, p)) in uncertain.iter().enumerate() {
                if m >> idx & 1 == 1 {
                    mask |= 1 << bit;
                    prob *= p;
                } else {
                    prob *= 1.0 - p;
                }
            }
            outcomes.push((mask, prob));
        }
        support.push(outcomes);
    }

    let mut immediate = vec![0.0; n_states * pairs];
    for s in 0..n_states {
        let state = state_from_mask(s, n, kk);
        let r: f64 = (0..pairs)
            .filter(|b| s >> b & 1 == 1)
            .map(|b| {
                let a = Action::from_index(b, kk);
                problem.weights.weight(a.user, a.content)
            })
            .sum::<f64>()
            .min(problem.reward_cap);
        for ai in 0..pairs {
            immediate[s * pairs + ai] = r + (problem.bonus)(&state, Action::from_index(ai, kk));
        }
    }

    let mut q = vec![cap; n_states * pairs];
    let mut v = vec![cap; n_states];
    let mut residuals = Vec::new();
    for iter in 1..=cfg.vi_max_iters {
        let w: Vec<f64> = support.iter().map(|out| out.iter().map(|&(m, p)| p * v[m]).sum()).collect();
        let mut residual: f64 = 0.0;
        for s in 0..n_states {
            for ai in 0..pairs {
                let post = s | 1 << ai;
                let new = (immediate[s * pairs + ai] + problem.gamma * w[post]).clamp(0.0, cap);
                residual = residual.max((new - q[s * pairs + ai]).abs());
                q[s * pairs + ai] = new;
            }
        }
        for s in 0..n_states {
            v[s] = q[s * pairs..(s + 1) * pairs].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        residuals.push(residual);
        if residual < cfg.vi_tolerance {
            return Ok(ExactQ { n_users: n, n_contents: kk, cap, iterations: iter, residuals, values: q });
        }
    }
    Err(Error::NonConvergence {
        solver: "truncated value iteration",
        iterations: cfg.vi_max_iters,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Estimated dynamics compressed to user classes.
#[derive(Debug, Clone)]
pub struct ClassModel {
    n_users: usize,
    n_contents: usize,
    classes: UserClasses,
    sizes: Vec<u32>,
    /// `conn[(k * C + receiver) * C + sender]`
    conn: Vec<f64>,
    /// `weights[c * K + k]`
    weights: Vec<f64>,
    /// Representative feature per class.
    x: Vec<Vec<f64>>,
    link: LinkFunction,
    decay: f64,
}

impl ClassModel {
    /// Class connectivity `clamp(<T, x_c (x) x_c' (x) theta_k>, 0, max_entry)`.
    pub fn from_tensor(
        features: &Features,
        weights: &RewardWeights,
        tensor: &[f64],
        link: LinkFunction,
        max_entry: f64,
        decay: f64,
    ) -> Result<Self> {
        if tensor.len() != features.dim() {
            return Err(Error::DimensionMismatch {
                expected: features.dim(),
                actual: tensor.len(),
                context: "planning tensor",
            });
        }
        let classes = UserClasses::new(features, weights);
        let nc = classes.len();
        let kk = features.n_contents();
        let d1 = features.d1;
        let x: Vec<Vec<f64>> = (0..nc).map(|c| features.user(classes.representative(c)).to_vec()).collect();
        let mut conn = vec![0.0; kk * nc * nc];
        for k in 0..kk {
            let m = content_slice(tensor, d1, features.d2, features.content(k));
            for ci in 0..nc {
                let y: Vec<f64> = (0..d1).map(|q| (0..d1).map(|p| x[ci][p] * m[p * d1 + q]).sum()).collect();
                for cj in 0..nc {
                    conn[(k * nc + ci) * nc + cj] = dot(&y, &x[cj]).clamp(0.0, max_entry);
                }
            }
        }
        let w = (0..nc)
            .flat_map(|c| {
                let rep = classes.representative(c);
                (0..kk).map(move |k| (rep, k))
            })
            .map(|(rep, k)| weights.weight(rep, k))
            .collect();
        Ok(Self {
            n_users: features.n_users(),
            n_contents: kk,
            sizes: (0..nc).map(|c| classes.size(c) as u32).collect(),
            classes,
            conn,
            weights: w,
            x,
            link,
            decay,
        })
    }

    pub fn classes(&self) -> &UserClasses {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.sizes.len()
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Class-level connectivity entry.
    pub fn entry(&self, k: usize, receiver: usize, sender: usize) -> f64 {
        let nc = self.n_classes();
        self.conn[(k * nc + receiver) * nc + sender]
    }

    /// Per-class active counts `counts[c * K + k]`.
    pub fn counts(&self, s: &StateMatrix) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes() * self.n_contents];
        for (i, k) in s.pairs() {
            counts[self.classes.class_of(i) * self.n_contents + k] += 1;
        }
        counts
    }

    fn content_active(&self, counts: &[u32], k: usize) -> bool {
        (0..self.n_classes()).any(|c| counts[c * self.n_contents + k] > 0)
    }

    /// Activation probability of a class-`c` user for content `k`.
    pub fn prob(&self, counts: &[u32], c: usize, k: usize) -> f64 {
        let nc = self.n_classes();
        let row = &self.conn[(k * nc + c) * nc..(k * nc + c + 1) * nc];
        let z: f64 = (0..nc).map(|j| row[j] * counts[j * self.n_contents + k] as f64).sum();
        self.link.mu(z).clamp(0.0, 1.0)
    }

    pub fn reward(&self, counts: &[u32]) -> f64 {
        counts.iter().zip(&self.weights).map(|(&n, &w)| n as f64 * w).sum()
    }

    /// `E[sum_i v_ik s'_ik]` for one content given the post-action counts.
    pub fn expected_content_reward(&self, counts: &[u32], k: usize) -> f64 {
        if !self.content_active(counts, k) {
            return 0.0;
        }
        (0..self.n_classes())
            .map(|c| self.weights[c * self.n_contents + k] * self.sizes[c] as f64 * self.prob(counts, c, k))
            .sum()
    }

    pub fn expected_reward(&self, counts: &[u32]) -> f64 {
        (0..self.n_contents).map(|k| self.expected_content_reward(counts, k)).sum()
    }

    /// `g_k = sum_j x_j s_{j,k}`.
    pub fn aggregate(&self, counts: &[u32], k: usize) -> Vec<f64> {
        let d1 = self.x.first().map_or(0, Vec::len);
        let mut g = vec![0.0; d1];
        for c in 0..self.n_classes() {
            let n = counts[c * self.n_contents + k];
            if n > 0 {
                for (gq, xq) in g.iter_mut().zip(&self.x[c]) {
                    *gq += n as f64 * xq;
                }
            }
        }
        g
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, counts: &[u32], rng: &mut R) -> Vec<u32> {
        let mut next = vec![0u32; counts.len()];
        for k in 0..self.n_contents {
            if !self.content_active(counts, k) {
                continue;
            }
            for c in 0..self.n_classes() {
                let p = self.prob(counts, c, k);
                let n = self.sizes[c];
                next[c * self.n_contents + k] = if p <= 0.0 {
                    0
                } else if p >= 1.0 {
                    n
                } else if n == 1 {
                    u32::from(rng.random::<f64>() < p)
                } else {
                    Binomial::new(u64::from(n), p).expect("valid binomial").sample(rng) as u32
                };
            }
        }
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClassAction {
    Seed { class: usize, content: usize },
    NoOp,
}

/// Depth-limited expectimax with sampled transitions on a class model.
#[derive(Debug, Clone)]
pub struct LookaheadPlanner {
    model: Arc<ClassModel>,
    bonus: Option<Arc<BonusSnapshot>>,
    gamma: f64,
    reward_cap: f64,
    depth: usize,
    rollouts: usize,
    inner_candidates: usize,
    tail: f64,
}

/// Root evaluation: the chosen action and every root candidate's value.
#[derive(Debug, Clone)]
pub struct Decision {
    pub action: Action,
    pub value: f64,
    pub candidates: Vec<(Action, f64)>,
}

/// Per-content terms of a node: expected next reward and bonus.
struct NodeTerms {
    expected: Vec<f64>,
    bonus: Vec<f64>,
}

impl LookaheadPlanner {
    pub fn new(
        model: Arc<ClassModel>,
        bonus: Option<Arc<BonusSnapshot>>,
        gamma: f64,
        reward_cap: f64,
        cfg: &PlanConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(0.0..1.0).contains(&gamma) || !(reward_cap > 0.0) {
            return Err(Error::Config("gamma must lie in [0, 1) and the reward cap must be positive".into()));
        }
        let tail = cfg.terminal.factor(gamma, model.decay());
        Ok(Self {
            model,
            bonus: bonus.filter(|b| !b.is_zero()),
            gamma,
            reward_cap,
            depth: cfg.depth,
            rollouts: cfg.rollouts,
            inner_candidates: cfg.inner_candidates,
            tail,
        })
    }

    pub fn cap(&self) -> f64 {
        self.reward_cap / (1.0 - self.gamma)
    }

    pub fn model(&self) -> &ClassModel {
        &self.model
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn content_bonus(&self, counts: &[u32], k: usize) -> f64 {
        match &self.bonus {
            None => 0.0,
            Some(b) => b.content_term(k, &self.model.aggregate(counts, k)),
        }
    }

    fn terms(&self, counts: &[u32]) -> NodeTerms {
        let kk = self.model.n_contents;
        NodeTerms {
            expected: (0..kk).map(|k| self.model.expected_content_reward(counts, k)).collect(),
            bonus: (0..kk).map(|k| self.content_bonus(counts, k)).collect(),
        }
    }

    fn post(&self, counts: &[u32], a: ClassAction) -> Vec<u32> {
        let mut post = counts.to_vec();
        if let ClassAction::Seed { class, content } = a {
            let idx = class * self.model.n_contents + content;
            if post[idx] < self.model.sizes[class] {
                post[idx] += 1;
            }
        }
        post
    }

    /// `(sum_k bonus, sum_k expected reward)` after `a`, recomputing only the touched content.
    fn post_terms(&self, terms: &NodeTerms, post: &[u32], a: ClassAction) -> (f64, f64) {
        let mut b: f64 = terms.bonus.iter().sum();
        let mut e: f64 = terms.expected.iter().sum();
        if let ClassAction::Seed { content, .. } = a {
            b += self.content_bonus(post, content) - terms.bonus[content];
            e += self.model.expected_content_reward(post, content) - terms.expected[content];
        }
        (b, e)
    }

    fn candidates(&self, counts: &[u32]) -> Vec<ClassAction> {
        let kk = self.model.n_contents;
        let mut out = Vec::new();
        for c in 0..self.model.n_classes() {
            for k in 0..kk {
                if counts[c * kk + k] < self.model.sizes[c] {
                    out.push(ClassAction::Seed { class: c, content: k });
                }
            }
        }
        if counts.iter().any(|&n| n > 0) {
            out.push(ClassAction::NoOp);
        }
        out
    }

    /// `Q_depth(s, a)` with `terms` describing `s`.
    fn q_at(
        &self,
        counts: &[u32],
        terms: &NodeTerms,
        a: ClassAction,
        depth: usize,
        rng: &mut crate::rng::SimRng,
    ) -> f64 {
        let r = self.model.reward(counts).min(self.reward_cap);
        let post = self.post(counts, a);
        let (bonus, expected) = self.post_terms(terms, &post, a);
        let future = if self.gamma == 0.0 {
            0.0
        } else if depth <= 1 {
            self.tail * expected.min(self.reward_cap)
        } else {
            let mut acc = 0.0;
            for _ in 0..self.rollouts {
                let next = self.model.sample_next(&post, rng);
                acc += self.value(&next, depth - 1, rng);
            }
            acc / self.rollouts as f64
        };
        (r + bonus + self.gamma * future).clamp(0.0, self.cap())
    }

    /// `max_a Q_depth(s, a)` over the top candidates by optimistic one-step gain.
    fn value(&self, counts: &[u32], depth: usize, rng: &mut crate::rng::SimRng) -> f64 {
        let terms = self.terms(counts);
        let mut cands = self.candidates(counts);
        if cands.is_empty() {
            return 0.0;
        }
        if depth > 1 && cands.len() > self.inner_candidates {
            let mut scored: Vec<(f64, usize)> = cands
                .iter()
                .enumerate()
                .map(|(idx, &a)| {
                    let (b, e) = self.post_terms(&terms, &self.post(counts, a), a);
                    (b + e, idx)
                })
                .collect();
            scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            cands = scored[..self.inner_candidates].iter().map(|&(_, idx)| cands[idx]).collect();
        }
        cands.into_iter().map(|a| self.q_at(counts, &terms, a, depth, rng)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn concrete(&self, s: &StateMatrix, a: ClassAction) -> Action {
        match a {
            ClassAction::Seed { class, content } => {
                let user = self
                    .model
                    .classes
                    .members(class)
                    .iter()
                    .copied()
                    .find(|&u| !s.contains(u, content))
                    .expect("class has an inactive member");
                Action::new(user, content)
            }
            ClassAction::NoOp => s.pairs().map(|(u, k)| Action::new(u, k)).min().expect("state is nonempty"),
        }
    }

    fn classify(&self, s: &StateMatrix, a: Action) -> ClassAction {
        if s.contains(a.user, a.content) {
            ClassAction::NoOp
        } else {
            ClassAction::Seed { class: self.model.classes.class_of(a.user), content: a.content }
        }
    }

    fn root_rng(seed: u64, a: ClassAction) -> crate::rng::SimRng {
        let tag = match a {
            ClassAction::Seed { class, content } => ((class as u64) << 32) | content as u64,
            ClassAction::NoOp => u64::MAX,
        };
        split(mix(seed, tag), 0)
    }

    fn check_state(&self, s: &StateMatrix) -> Result<()> {
        if s.shape() != (self.model.n_users, self.model.n_contents) {
            return Err(invalid("state shape does not match the planning model"));
        }
        Ok(())
    }

    /// `Q(s, a)` at the configured depth, using the stream for `seed`.
    pub fn q_value(&self, s: &StateMatrix, a: Action, seed: u64) -> Result<f64> {
        self.check_state(s)?;
        s.check_action(a)?;
        let counts = self.model.counts(s);
        let terms = self.terms(&counts);
        let ca = self.classify(s, a);
        let mut rng = Self::root_rng(seed, ca);
        Ok(self.q_at(&counts, &terms, ca, self.depth, &mut rng))
    }

    /// Greedy action over all `NK` actions. Actions that lead to the same
    /// class-level post-action state share one evaluation.
    pub fn decide(&self, s: &StateMatrix, seed: u64) -> Result<Decision> {
        self.check_state(s)?;
        let counts = self.model.counts(s);
        let terms = self.terms(&counts);
        let cands = self.candidates(&counts);
        if cands.is_empty() {
            return Err(invalid("no candidate actions"));
        }
        let eval = |a: &ClassAction| {
            let mut rng = Self::root_rng(seed, *a);
            (self.concrete(s, *a), self.q_at(&counts, &terms, *a, self.depth, &mut rng))
        };
        #[cfg(feature = "parallel")]
        let scored: Vec<(Action, f64)> = {
            use rayon::prelude::*;
            cands.par_iter().map(eval).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let scored: Vec<(Action, f64)> = cands.iter().map(eval).collect();
        let action = greedy_action(&scored).expect("nonempty");
        let value = scored.iter().find(|(a, _)| *a == action).map(|x| x.1).unwrap_or(0.0);
        Ok(Decision { action, value, candidates: scored })
    }
}

/// A plan usable for greedy action selection.
#[derive(Debug, Clone)]
pub enum QFunction {
    Exact(ExactQ),
    Lookahead(LookaheadPlanner),
}

impl QFunction {
    pub fn cap(&self) -> f64 {
        match self {
            QFunction::Exact(q) => q.cap,
            QFunction::Lookahead(p) => p.cap(),
        }
    }

    pub fn q_value(&self, s: &StateMatrix, a: Action, seed: u64) -> Result<f64> {
        match self {
            QFunction::Exact(q) => q.q(s, a),
            QFunction::Lookahead(p) => p.q_value(s, a, seed),
        }
    }

    pub fn greedy(&self, s: &StateMatrix, seed: u64) -> Result<Action> {
        match self {
            QFunction::Exact(q) => q.greedy(s),
            QFunction::Lookahead(p) => Ok(p.decide(s, seed)?.action),
        }
    }
}
