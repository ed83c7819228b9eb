//! Ground-truth diffusion environment.
//!
//! A network of `N` users and `K` contents. Each user carries a feature
//! vector of dimension `d1`, each content a feature vector of dimension `d2`,
//! and a `d1 x d1 x d2` tensor induces the per-content connectivity
//! `A^k[i][j] = <T, x_i (x) x_j (x) theta_k>`. Given a post-action state
//! `s_a`, pair `(i, k)` is active in the next state independently with
//! probability `clamp(mu(sum_j A^k[i][j] s_a[j][k]), 0, 1)`.
//!
//! Tensors are flat vectors in `(p, q, r)` order with `r` fastest, which is
//! also the layout of the regression features produced by [`feature_map`].

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A seed decision: force `(user, content)` active before diffusion.
///
/// Ordering is lexicographic in `(user, content)`, which is the tie-break
/// order used when several actions score equally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub user: usize,
    pub content: usize,
}

impl Action {
    pub fn new(user: usize, content: usize) -> Self {
        Self { user, content }
    }

    /// Flat index `user * n_contents + content`.
    pub fn index(&self, n_contents: usize) -> usize {
        self.user * n_contents + self.content
    }

    pub fn from_index(index: usize, n_contents: usize) -> Self {
        Self::new(index / n_contents, index % n_contents)
    }
}

/// Binary `N x K` activation state stored as the set of active pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateMatrix {
    n_users: usize,
    n_contents: usize,
    // keyed (content, user) so per-content scans are range queries
    active: BTreeSet<(usize, usize)>,
}

impl StateMatrix {
    pub fn empty(n_users: usize, n_contents: usize) -> Self {
        Self { n_users, n_contents, active: BTreeSet::new() }
    }

    pub fn from_pairs(
        n_users: usize,
        n_contents: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut s = Self::empty(n_users, n_contents);
        for (user, content) in pairs {
            s.insert(Action::new(user, content))?;
        }
        Ok(s)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_users, self.n_contents)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_contents(&self) -> usize {
        self.n_contents
    }

    pub fn check_action(&self, a: Action) -> Result<()> {
        if a.user >= self.n_users || a.content >= self.n_contents {
            return Err(invalid(format!(
                "action ({}, {}) out of range for a {}x{} state",
                a.user, a.content, self.n_users, self.n_contents
            )));
        }
        Ok(())
    }

    pub fn insert(&mut self, a: Action) -> Result<bool> {
        self.check_action(a)?;
        Ok(self.active.insert((a.content, a.user)))
    }

    pub fn contains(&self, user: usize, content: usize) -> bool {
        self.active.contains(&(content, user))
    }

    /// `||s||_1`, the number of active pairs.
    pub fn l1(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Active pairs as `(user, content)` in content-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.active.iter().map(|&(k, i)| (i, k))
    }

    /// Users active for content `k`, ascending.
    pub fn active_users(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.active.range((k, 0)..(k + 1, 0)).map(|&(_, i)| i)
    }

    pub fn content_is_active(&self, k: usize) -> bool {
        self.active_users(k).next().is_some()
    }

    /// Post-action state `s + 1_a` with saturation.
    pub fn apply_action(&self, a: Action) -> Result<StateMatrix> {
        let mut next = self.clone();
        next.insert(a)?;
        Ok(next)
    }
}

/// Link `mu` mapping the linear influence sum to an activation probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFunction {
    /// `mu(z) = z`.
    #[default]
    Identity,
    /// `mu(z) = z / kappa + (1 - 1/kappa)(1 - e^{-z})`; slope in `[1/kappa, 1]` for `z >= 0`.
    SoftSaturating { kappa: f64 },
}

impl LinkFunction {
    pub fn mu(&self, z: f64) -> f64 {
        match *self {
            LinkFunction::Identity => z,
            LinkFunction::SoftSaturating { kappa } => z / kappa + (1.0 - 1.0 / kappa) * (-(-z).exp_m1()),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            LinkFunction::Identity => 1.0,
            LinkFunction::SoftSaturating { kappa } => 1.0 / kappa + (1.0 - 1.0 / kappa) * (-z).exp(),
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            LinkFunction::Identity => 1.0,
            LinkFunction::SoftSaturating { kappa } => kappa,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, LinkFunction::Identity)
    }

    /// Checks `mu(0) = 0` and that central finite differences stay in
    /// `[1/kappa, 1]` on `[0, z_max]`.
    pub fn validate(&self, z_max: f64, samples: usize) -> Result<()> {
        let kappa = self.kappa();
        if !(kappa >= 1.0) {
            return Err(invalid(format!("link kappa must be >= 1, got {kappa}")));
        }
        if self.mu(0.0).abs() > 1e-15 {
            return Err(invalid("link must satisfy mu(0) = 0"));
        }
        let h = 1e-6;
        let samples = samples.max(2);
        for n in 0..samples {
            let z = h + (z_max - 2.0 * h) * n as f64 / (samples - 1) as f64;
            let slope = (self.mu(z + h) - self.mu(z - h)) / (2.0 * h);
            if slope < 1.0 / kappa - 1e-6 || slope > 1.0 + 1e-6 {
                return Err(invalid(format!("link slope {slope} at z = {z} outside [1/{kappa}, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-pair reward weights `v[i][k] <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardWeights {
    /// `v = 1` everywhere: the reward counts active pairs.
    #[default]
    Unit,
    PerPair {
        n_contents: usize,
        values: Vec<f64>,
    },
}

impl RewardWeights {
    pub fn weight(&self, user: usize, content: usize) -> f64 {
        match self {
            RewardWeights::Unit => 1.0,
            RewardWeights::PerPair { n_contents, values } => values[user * n_contents + content],
        }
    }

    pub fn validate(&self, n_users: usize, n_contents: usize) -> Result<()> {
        if let RewardWeights::PerPair { n_contents: kk, values } = self {
            if *kk != n_contents || values.len() != n_users * n_contents {
                return Err(Error::DimensionMismatch {
                    expected: n_users * n_contents,
                    actual: values.len(),
                    context: "reward weights",
                });
            }
            if values.iter().any(|v| !(*v <= 1.0) || *v < 0.0) {
                return Err(invalid("reward weights must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// `r(s) = sum of v over active pairs`.
pub fn reward(s: &StateMatrix, v: &RewardWeights) -> f64 {
    s.pairs().fold(0.0, |acc, (i, k)| acc + v.weight(i, k))
}

/// `min(r(s), cap)`.
pub fn truncated_reward(s: &StateMatrix, v: &RewardWeights, cap: f64) -> f64 {
    reward(s, v).min(cap)
}

/// User and content feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub d1: usize,
    pub d2: usize,
    users: Vec<f64>,
    contents: Vec<f64>,
}

impl Features {
    pub fn new(d1: usize, d2: usize, users: Vec<Vec<f64>>, contents: Vec<Vec<f64>>) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(invalid("feature dimensions must be positive"));
        }
        for row in &users {
            if row.len() != d1 {
                return Err(Error::DimensionMismatch { expected: d1, actual: row.len(), context: "user feature" });
            }
        }
        for row in &contents {
            if row.len() != d2 {
                return Err(Error::DimensionMismatch { expected: d2, actual: row.len(), context: "content feature" });
            }
        }
        if users.is_empty() || contents.is_empty() {
            return Err(invalid("need at least one user and one content"));
        }
        Ok(Self { d1, d2, users: users.concat(), contents: contents.concat() })
    }

    pub fn n_users(&self) -> usize {
        self.users.len() / self.d1
    }

    pub fn n_contents(&self) -> usize {
        self.contents.len() / self.d2
    }

    pub fn user(&self, i: usize) -> &[f64] {
        &self.users[i * self.d1..(i + 1) * self.d1]
    }

    pub fn content(&self, k: usize) -> &[f64] {
        &self.contents[k * self.d2..(k + 1) * self.d2]
    }

    /// Regression dimension `d1^2 * d2`.
    pub fn dim(&self) -> usize {
        self.d1 * self.d1 * self.d2
    }

    /// `g_k = sum of x_j over users j active for content k in `s_a``.
    pub fn content_aggregate(&self, s_a: &StateMatrix, k: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.d1];
        for j in s_a.active_users(k) {
            for (gq, xq) in g.iter_mut().zip(self.user(j)) {
                *gq += xq;
            }
        }
        g
    }

    pub fn max_user_norm(&self) -> f64 {
        (0..self.n_users()).map(|i| norm(self.user(i))).fold(0.0, f64::max)
    }

    pub fn max_content_norm(&self) -> f64 {
        (0..self.n_contents()).map(|k| norm(self.content(k))).fold(0.0, f64::max)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `vec(x (x) g (x) theta)` in `(p, q, r)` order.
pub fn kron3(x: &[f64], g: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * g.len() * theta.len());
    for &xp in x {
        for &gq in g {
            let w = xp * gq;
            for &tr in theta {
                out.push(w * tr);
            }
        }
    }
    out
}

/// `phi_{i,k}(s, a) = x_i (x) (sum_j x_j (s_a)_{j,k}) (x) theta_k`.
pub fn feature_map(features: &Features, s: &StateMatrix, a: Action, i: usize, k: usize) -> Result<Vec<f64>> {
    let s_a = s.apply_action(a)?;
    if i >= features.n_users() || k >= features.n_contents() {
        return Err(invalid(format!("pair ({i}, {k}) out of range")));
    }
    let g = features.content_aggregate(&s_a, k);
    Ok(kron3(features.user(i), &g, features.content(k)))
}

/// `M_k[p][q] = sum_r T[p, q, r] theta_k[r]`, row-major `d1 x d1`.
pub(crate) fn content_slice(tensor: &[f64], d1: usize, d2: usize, theta: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; d1 * d1];
    for p in 0..d1 {
        for q in 0..d1 {
            let base = (p * d1 + q) * d2;
            m[p * d1 + q] = dot(&tensor[base..base + d2], theta);
        }
    }
    m
}

/// Dense per-content connectivity `A^k`, row `i` (receiver), column `j` (sender).
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    n_users: usize,
    n_contents: usize,
    data: Vec<f64>,
}

impl Connectivity {
    pub fn zeros(n_users: usize, n_contents: usize) -> Self {
        Self { n_users, n_contents, data: vec![0.0; n_users * n_users * n_contents] }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_contents(&self) -> usize {
        self.n_contents
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n_users + i) * self.n_users + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.n_users + i) * self.n_users + j] = value;
    }

    /// Row `i` of `A^k`.
    pub fn row(&self, k: usize, i: usize) -> &[f64] {
        let start = (k * self.n_users + i) * self.n_users;
        &self.data[start..start + self.n_users]
    }

    pub fn column_sum(&self, k: usize, j: usize) -> f64 {
        (0..self.n_users).map(|i| self.get(k, i, j)).sum()
    }

    pub fn max_abs_diff(&self, other: &Connectivity) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Materializes `A^k[i][j] = <T, x_i (x) x_j (x) theta_k>` for every entry.
pub fn connectivity_from_tensor(tensor: &[f64], features: &Features) -> Result<Connectivity> {
    let (d1, d2) = (features.d1, features.d2);
    if tensor.len() != features.dim() {
        return Err(Error::DimensionMismatch {
            expected: features.dim(),
            actual: tensor.len(),
            context: "tensor length vs d1*d1*d2",
        });
    }
    let n = features.n_users();
    let kk = features.n_contents();
    let mut conn = Connectivity::zeros(n, kk);
    let mut projected = vec![0.0; n * d1];
    for k in 0..kk {
        let m = content_slice(tensor, d1, d2, features.content(k));
        // projected[i][q] = sum_p x_i[p] M[p][q]
        for i in 0..n {
            let x = features.user(i);
            for q in 0..d1 {
                projected[i * d1 + q] = (0..d1).map(|p| x[p] * m[p * d1 + q]).sum();
            }
        }
        for i in 0..n {
            let y = &projected[i * d1..(i + 1) * d1];
            for j in 0..n {
                conn.set(k, i, j, dot(y, features.user(j)));
            }
        }
    }
    Ok(conn)
}

/// Serialized network: connectivity is never stored, always re-derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub n_users: usize,
    pub n_contents: usize,
    pub d1: usize,
    pub d2: usize,
    pub decay: f64,
    pub influence_cap: f64,
    pub user_features: Vec<Vec<f64>>,
    pub content_features: Vec<Vec<f64>>,
    pub tensor: Vec<f64>,
}

/// Ground-truth diffusion parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct NetworkModel {
    features: Features,
    tensor: Vec<f64>,
    decay: f64,
    influence_cap: f64,
    connectivity: Connectivity,
}

impl NetworkModel {
    pub fn new(features: Features, tensor: Vec<f64>, decay: f64, influence_cap: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(invalid(format!("decay must lie in (0, 1), got {decay}")));
        }
        if !(influence_cap > 0.0) {
            return Err(invalid(format!("influence cap must be positive, got {influence_cap}")));
        }
        let connectivity = connectivity_from_tensor(&tensor, &features)?;
        Ok(Self { features, tensor, decay, influence_cap, connectivity })
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn tensor(&self) -> &[f64] {
        &self.tensor
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.connectivity
    }

    /// Overrides a derived connectivity entry. The model then no longer
    /// satisfies the tensor identity; used to exercise validation.
    pub fn override_entry(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.connectivity.set(k, i, j, value);
    }

    pub fn n_users(&self) -> usize {
        self.features.n_users()
    }

    pub fn n_contents(&self) -> usize {
        self.features.n_contents()
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn influence_cap(&self) -> f64 {
        self.influence_cap
    }

    /// Entry bound `C / (N K)`.
    pub fn entry_bound(&self) -> f64 {
        self.influence_cap / (self.n_users() * self.n_contents()) as f64
    }

    pub fn tensor_norm(&self) -> f64 {
        norm(&self.tensor)
    }

    pub fn empty_state(&self) -> StateMatrix {
        StateMatrix::empty(self.n_users(), self.n_contents())
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            n_users: self.n_users(),
            n_contents: self.n_contents(),
            d1: self.features.d1,
            d2: self.features.d2,
            decay: self.decay,
            influence_cap: self.influence_cap,
            user_features: (0..self.n_users()).map(|i| self.features.user(i).to_vec()).collect(),
            content_features: (0..self.n_contents()).map(|k| self.features.content(k).to_vec()).collect(),
            tensor: self.tensor.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Upper bound on `||phi||_2` for states with at most `max_active` pairs
    /// per content: `max||x|| * (max_active * max||x||) * max||theta||`.
    pub fn feature_norm_bound(&self, max_active: f64) -> f64 {
        let x = self.features.max_user_norm();
        x * x * max_active * self.features.max_content_norm()
    }
}

impl TryFrom<NetworkDocument> for NetworkModel {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        if doc.user_features.len() != doc.n_users {
            return Err(Error::DimensionMismatch {
                expected: doc.n_users,
                actual: doc.user_features.len(),
                context: "user rows",
            });
        }
        if doc.content_features.len() != doc.n_contents {
            return Err(Error::DimensionMismatch {
                expected: doc.n_contents,
                actual: doc.content_features.len(),
                context: "content rows",
            });
        }
        let features = Features::new(doc.d1, doc.d2, doc.user_features, doc.content_features)?;
        NetworkModel::new(features, doc.tensor, doc.decay, doc.influence_cap)
    }
}

impl From<NetworkModel> for NetworkDocument {
    fn from(model: NetworkModel) -> Self {
        model.to_document()
    }
}

/// One violated structural assumption.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `A^k[i][j] > C/(NK)`; `margin` is the excess.
    EntryAboveCap {
        content: usize,
        row: usize,
        column: usize,
        value: f64,
        margin: f64,
    },
    NegativeEntry {
        content: usize,
        row: usize,
        column: usize,
        value: f64,
    },
    /// `sum_i A^k[i][j] > 1 - decay`; `margin` is the excess.
    ColumnSum {
        content: usize,
        column: usize,
        sum: f64,
        margin: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

const VALIDATION_SLACK: f64 = 1e-12;

/// Checks nonnegativity, the uniform entry bound and the per-column decay bound.
pub fn validate_network(model: &NetworkModel) -> ValidationReport {
    let conn = model.connectivity();
    let cap = model.entry_bound();
    let column_bound = 1.0 - model.decay();
    let n = model.n_users();
    let mut violations = Vec::new();
    for k in 0..model.n_contents() {
        for i in 0..n {
            for j in 0..n {
                let value = conn.get(k, i, j);
                if value < -VALIDATION_SLACK {
                    violations.push(Violation::NegativeEntry { content: k, row: i, column: j, value });
                } else if value > cap + VALIDATION_SLACK {
                    violations.push(Violation::EntryAboveCap {
                        content: k,
                        row: i,
                        column: j,
                        value,
                        margin: value - cap,
                    });
                }
            }
        }
        for j in 0..n {
            let sum = conn.column_sum(k, j);
            if sum > column_bound + VALIDATION_SLACK {
                violations.push(Violation::ColumnSum { content: k, column: j, sum, margin: sum - column_bound });
            }
        }
    }
    ValidationReport { violations }
}

/// `clamp(mu(sum_j A^k[i][j] (s_a)_{j,k}), 0, 1)`.
pub fn activation_prob(
    model: &NetworkModel,
    link: &LinkFunction,
    s_a: &StateMatrix,
    i: usize,
    k: usize,
) -> Result<f64> {
    if i >= model.n_users() || k >= model.n_contents() {
        return Err(invalid(format!("pair ({i}, {k}) out of range")));
    }
    let row = model.connectivity().row(k, i);
    let z: f64 = s_a.active_users(k).map(|j| row[j]).sum();
    Ok(link.mu(z).clamp(0.0, 1.0))
}

/// Bernoulli parameters of every pair whose content has an active user in `s_a`.
/// Pairs of inactive contents have probability zero and are omitted.
pub fn activation_probs(model: &NetworkModel, link: &LinkFunction, s_a: &StateMatrix) -> Vec<(Action, f64)> {
    let conn = model.connectivity();
    let mut out = Vec::new();
    for k in 0..model.n_contents() {
        let senders: Vec<usize> = s_a.active_users(k).collect();
        if senders.is_empty() {
            continue;
        }
        for i in 0..model.n_users() {
            let row = conn.row(k, i);
            let z: f64 = senders.iter().map(|&j| row[j]).sum();
            out.push((Action::new(i, k), link.mu(z).clamp(0.0, 1.0)));
        }
    }
    out
}

/// Draws `s' ~ P(. | s, a)` under the linearized cascade.
pub fn sample_transition<R: Rng + ?Sized>(
    model: &NetworkModel,
    link: &LinkFunction,
    s: &StateMatrix,
    a: Action,
    rng: &mut R,
) -> Result<StateMatrix> {
    let s_a = s.apply_action(a)?;
    let mut next = model.empty_state();
    for (pair, p) in activation_probs(model, link, &s_a) {
        if p > 0.0 && rng.random::<f64>() < p {
            next.insert(pair)?;
        }
    }
    Ok(next)
}

/// Draws the next state under the product-form cascade
/// `1 - prod_j (1 - A^k[i][j] s_a[j][k])`. For comparison only.
pub fn sample_transition_exact_ic<R: Rng + ?Sized>(
    model: &NetworkModel,
    s: &StateMatrix,
    a: Action,
    rng: &mut R,
) -> Result<StateMatrix> {
    let s_a = s.apply_action(a)?;
    let conn = model.connectivity();
    let mut next = model.empty_state();
    for k in 0..model.n_contents() {
        let senders: Vec<usize> = s_a.active_users(k).collect();
        if senders.is_empty() {
            continue;
        }
        for i in 0..model.n_users() {
            let row = conn.row(k, i);
            let stay_inactive: f64 = senders.iter().map(|&j| 1.0 - row[j].clamp(0.0, 1.0)).product();
            let p = 1.0 - stay_inactive;
            if p > 0.0 && rng.random::<f64>() < p {
                next.insert(Action::new(i, k))?;
            }
        }
    }
    Ok(next)
}

/// High-probability cap on `||s_t||_1`: `(2/decay)((2/decay) ln(2 t^2 / delta) + 1)`.
pub fn active_pair_bound(decay: f64, t: usize, delta: f64) -> f64 {
    let t = t.max(1) as f64;
    (2.0 / decay) * ((2.0 / decay) * (2.0 * t * t / delta).ln() + 1.0)
}

/// Users grouped by identical feature vectors and reward-weight rows.
///
/// Under any model expressed through the tensor, members of a class are
/// exchangeable, so planners work on per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UserClasses {
    class_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl UserClasses {
    pub fn new(features: &Features, weights: &RewardWeights) -> Self {
        let n = features.n_users();
        let kk = features.n_contents();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut index: std::collections::HashMap<(Vec<u64>, Vec<u64>), usize> = std::collections::HashMap::new();
        let class_of = (0..n)
            .map(|i| {
                // `+ 0.0` folds -0.0 into 0.0 so equal features share a key
                let fkey: Vec<u64> = features.user(i).iter().map(|x| (x + 0.0).to_bits()).collect();
                let wkey: Vec<u64> = (0..kk).map(|k| weights.weight(i, k).to_bits()).collect();
                let c = *index.entry((fkey, wkey)).or_insert_with(|| {
                    members.push(Vec::new());
                    members.len() - 1
                });
                members[c].push(i);
                c
            })
            .collect();
        Self { class_of, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn class_of(&self, user: usize) -> usize {
        self.class_of[user]
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn size(&self, class: usize) -> usize {
        self.members[class].len()
    }

    /// First member, the canonical representative.
    pub fn representative(&self, class: usize) -> usize {
        self.members[class][0]
    }
}
