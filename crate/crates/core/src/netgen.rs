//! Synthetic networks.
//!
//! Every generator returns a model that passes [`validate_network`]; the
//! connectivity is always induced by a nonnegative tensor and nonnegative
//! features, so entries are nonnegative by construction.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{validate_network, Features, NetworkModel};
use crate::error::{invalid, Error, Result};
use crate::rng::{seeded, SimRng};

/// Declarative network description; `seed` drives every random choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub kind: NetworkKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkKind {
    ContentBlocks(ContentBlocksSpec),
    Star(StarSpec),
    RandomValid(RandomSpec),
}

impl NetworkSpec {
    pub fn content_blocks() -> Self {
        Self { seed: 0, kind: NetworkKind::ContentBlocks(ContentBlocksSpec::default()) }
    }

    pub fn star() -> Self {
        Self { seed: 0, kind: NetworkKind::Star(StarSpec::default()) }
    }

    pub fn random_valid(spec: RandomSpec, seed: u64) -> Self {
        Self { seed, kind: NetworkKind::RandomValid(spec) }
    }

    pub fn generate(&self) -> Result<NetworkModel> {
        let mut rng = seeded(self.seed);
        match &self.kind {
            NetworkKind::ContentBlocks(s) => generate_content_blocks(s, &mut rng),
            NetworkKind::Star(s) => generate_star(s, &mut rng),
            NetworkKind::RandomValid(s) => generate_random_valid(s, &mut rng),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Users per block and tier. Per block, `d1` holds two dimensions: a
/// spreader dimension carried by high-tier users and an audience dimension
/// carried by medium-tier users (weight 1) and low-tier users (`low_weight`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContentBlocksSpec {
    pub blocks: usize,
    pub high_users: usize,
    pub medium_users: usize,
    pub low_users: usize,
    pub low_weight: f64,
    /// Expected one-step spread of a high-tier seed (its column sum).
    pub high_spread: f64,
    /// Expected one-step spread of a medium-tier seed.
    pub medium_spread: f64,
    /// Extra contents beyond the `blocks` axis-aligned ones, given as weights
    /// over the block directions (entries in `[0, 1]`, max entry 1).
    pub mixtures: Vec<Vec<f64>>,
    pub decay: f64,
    pub influence_cap: f64,
}

impl Default for ContentBlocksSpec {
    fn default() -> Self {
        Self {
            blocks: 3,
            high_users: 20,
            medium_users: 3,
            low_users: 77,
            low_weight: 0.3,
            high_spread: 0.7,
            medium_spread: 0.8,
            mixtures: vec![vec![1.0, 0.6, 0.3]],
            decay: 0.2,
            influence_cap: 48.0,
        }
    }
}

/// Tier of a user in the content-block network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    High,
    Medium,
    Low,
}

/// Block and tier of each user, recovered from its features.
pub fn content_block_roles(model: &NetworkModel) -> Vec<(usize, Tier)> {
    let f = model.features();
    (0..f.n_users())
        .map(|i| {
            let x = f.user(i);
            let p = x.iter().position(|&v| v > 0.0).unwrap_or(0);
            let tier = if p % 2 == 0 {
                Tier::High
            } else if x[p] >= 1.0 {
                Tier::Medium
            } else {
                Tier::Low
            };
            (p / 2, tier)
        })
        .collect()
}

pub fn generate_content_blocks(spec: &ContentBlocksSpec, rng: &mut SimRng) -> Result<NetworkModel> {
    let nb = spec.blocks;
    if nb == 0 || spec.high_users == 0 || spec.medium_users == 0 {
        return Err(invalid("content-block network needs at least one block, one high-tier and one medium-tier user"));
    }
    if !(spec.low_weight > 0.0 && spec.low_weight <= 1.0) {
        return Err(invalid("low_weight must lie in (0, 1]"));
    }
    let per_block = spec.high_users + spec.medium_users + spec.low_users;
    let n = nb * per_block;
    let kk = nb + spec.mixtures.len();
    let d1 = 2 * nb;
    let d2 = nb;
    let entry_cap = spec.influence_cap / (n * kk) as f64;

    // alpha * high_users = high_spread; eta * audience = medium_spread
    let alpha = spec.high_spread / spec.high_users as f64;
    let audience = spec.medium_users as f64 + spec.low_users as f64 * spec.low_weight;
    let eta = spec.medium_spread / audience;
    let column_bound = 1.0 - spec.decay;
    if spec.high_spread > column_bound + 1e-12 || spec.medium_spread > column_bound + 1e-12 {
        return Err(invalid(format!(
            "tier spreads {} / {} exceed the decay bound {column_bound}",
            spec.high_spread, spec.medium_spread
        )));
    }
    if alpha > entry_cap || eta > entry_cap {
        return Err(invalid(format!(
            "per-edge weights {alpha:.4} / {eta:.4} exceed the entry cap C/(NK) = {entry_cap:.4}"
        )));
    }
    for m in &spec.mixtures {
        if m.len() != nb || m.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(invalid("each mixture needs one weight in [0, 1] per block"));
        }
    }

    let mut users = Vec::with_capacity(n);
    for b in 0..nb {
        let mut x = vec![0.0; d1];
        x[2 * b] = 1.0;
        users.extend(std::iter::repeat_n(x.clone(), spec.high_users));
        x[2 * b] = 0.0;
        x[2 * b + 1] = 1.0;
        users.extend(std::iter::repeat_n(x.clone(), spec.medium_users));
        x[2 * b + 1] = spec.low_weight;
        users.extend(std::iter::repeat_n(x, spec.low_users));
    }
    users.shuffle(rng);

    let mut contents: Vec<Vec<f64>> = (0..nb)
        .map(|b| {
            let mut t = vec![0.0; d2];
            t[b] = 1.0;
            t
        })
        .collect();
    contents.extend(spec.mixtures.iter().cloned());

    let mut tensor = vec![0.0; d1 * d1 * d2];
    for b in 0..nb {
        let (hi, au) = (2 * b, 2 * b + 1);
        tensor[(hi * d1 + hi) * d2 + b] = alpha;
        tensor[(au * d1 + au) * d2 + b] = eta;
    }

    let features = Features::new(d1, d2, users, contents)?;
    let model = NetworkModel::new(features, tensor, spec.decay, spec.influence_cap)?;
    ensure_valid(model)
}

/// Hub-and-spoke network with a single content. One-hot user groups:
/// `0` center, `1` and `2` the peripheral influencers, `3` and `4` their
/// followers, `5` background users reached from the followers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StarSpec {
    pub followers_per_influencer: usize,
    pub background_users: usize,
    /// Center to each peripheral influencer.
    pub center_weight: f64,
    /// Peripheral influencer to each of its followers.
    pub follower_weight: f64,
    /// Follower to each background user.
    pub background_weight: f64,
    pub decay: f64,
    pub influence_cap: f64,
}

impl Default for StarSpec {
    fn default() -> Self {
        Self {
            followers_per_influencer: 11,
            background_users: 5,
            center_weight: 0.4,
            follower_weight: 0.08,
            background_weight: 0.01,
            decay: 0.1,
            influence_cap: 12.0,
        }
    }
}

/// Group index of every star-network user (the first coordinate that is one).
pub fn star_groups(model: &NetworkModel) -> Vec<usize> {
    let f = model.features();
    (0..f.n_users()).map(|i| f.user(i).iter().position(|&v| v > 0.0).unwrap_or(5)).collect()
}

pub fn generate_star(spec: &StarSpec, rng: &mut SimRng) -> Result<NetworkModel> {
    let f = spec.followers_per_influencer;
    if f == 0 {
        return Err(invalid("star network needs followers"));
    }
    let sizes = [1, 1, 1, f, f, spec.background_users];
    let n: usize = sizes.iter().sum();
    let d1 = 6;
    let mut users = Vec::with_capacity(n);
    for (g, &size) in sizes.iter().enumerate() {
        let mut x = vec![0.0; d1];
        x[g] = 1.0;
        users.extend(std::iter::repeat_n(x, size));
    }
    users.shuffle(rng);

    // A(receiver <- sender) = T[group(receiver), group(sender)]
    let mut tensor = vec![0.0; d1 * d1];
    tensor[d1] = spec.center_weight;
    tensor[2 * d1] = spec.center_weight;
    tensor[3 * d1 + 1] = spec.follower_weight;
    tensor[4 * d1 + 2] = spec.follower_weight;
    tensor[5 * d1 + 3] = spec.background_weight;
    tensor[5 * d1 + 4] = spec.background_weight;

    let features = Features::new(d1, 1, users, vec![vec![1.0]])?;
    let model = NetworkModel::new(features, tensor, spec.decay, spec.influence_cap)?;
    ensure_valid(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSpec {
    pub n_users: usize,
    pub n_contents: usize,
    pub d1: usize,
    pub d2: usize,
    pub decay: f64,
    /// Entry cap `C`; `None` picks the smallest cap the rescaled network satisfies.
    pub influence_cap: Option<f64>,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { n_users: 4, n_contents: 2, d1: 2, d2: 3, decay: 0.2, influence_cap: None }
    }
}

/// Uniform nonnegative factors, rescaled so the largest column sum sits just
/// below `1 - decay`. If a supplied cap binds first, the cap wins and the
/// decay bound is slack.
pub fn generate_random_valid(spec: &RandomSpec, rng: &mut SimRng) -> Result<NetworkModel> {
    if spec.n_users == 0 || spec.n_contents == 0 || spec.d1 == 0 || spec.d2 == 0 {
        return Err(invalid("random network needs positive dimensions"));
    }
    let users: Vec<Vec<f64>> = (0..spec.n_users).map(|_| (0..spec.d1).map(|_| rng.random::<f64>()).collect()).collect();
    let contents: Vec<Vec<f64>> =
        (0..spec.n_contents).map(|_| (0..spec.d2).map(|_| rng.random::<f64>()).collect()).collect();
    let dim = spec.d1 * spec.d1 * spec.d2;
    let tensor: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let features = Features::new(spec.d1, spec.d2, users, contents)?;

    let raw = NetworkModel::new(features.clone(), tensor.clone(), spec.decay, f64::MAX)?;
    let conn = raw.connectivity();
    let nk = (spec.n_users * spec.n_contents) as f64;
    let mut max_col: f64 = 0.0;
    let mut max_entry: f64 = 0.0;
    for k in 0..spec.n_contents {
        for j in 0..spec.n_users {
            max_col = max_col.max(conn.column_sum(k, j));
        }
        for i in 0..spec.n_users {
            max_entry = conn.row(k, i).iter().cloned().fold(max_entry, f64::max);
        }
    }
    if max_col <= 0.0 {
        return Err(invalid("degenerate random draw"));
    }
    let mut scale = (1.0 - spec.decay) * (1.0 - 1e-9) / max_col;
    let cap = match spec.influence_cap {
        Some(c) => {
            scale = scale.min(c / nk / max_entry * (1.0 - 1e-9));
            c
        }
        None => max_entry * scale * nk * (1.0 + 1e-9),
    };
    let tensor: Vec<f64> = tensor.iter().map(|v| v * scale).collect();
    ensure_valid(NetworkModel::new(features, tensor, spec.decay, cap)?)
}

fn ensure_valid(model: NetworkModel) -> Result<NetworkModel> {
    let report = validate_network(&model);
    if report.passes() {
        Ok(model)
    } else {
        Err(invalid(format!("generated network violates {} structural bounds", report.violations.len())))
    }
}

/// `sum_{t=1}^{horizon} gamma^(t-1) 1^T (A^k)^t e_j`: expected discounted
/// spread of a single seed `j` for content `k`, ignoring clamping.
pub fn discounted_spread(model: &NetworkModel, k: usize, j: usize, gamma: f64, horizon: usize) -> f64 {
    let n = model.n_users();
    let conn = model.connectivity();
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    let mut total = 0.0;
    let mut w = 1.0;
    for _ in 0..horizon {
        let next: Vec<f64> = (0..n).map(|i| conn.row(k, i).iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        total += w * next.iter().sum::<f64>();
        w *= gamma;
        v = next;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_content_blocks_dimensions() {
        let m = NetworkSpec::content_blocks().generate().unwrap();
        assert_eq!((m.n_users(), m.n_contents(), m.dim()), (300, 4, 108));
        assert!(validate_network(&m).passes());
    }

    #[test]
    fn star_has_three_influencers() {
        let m = NetworkSpec::star().generate().unwrap();
        let strong = (0..m.n_users()).filter(|&j| m.connectivity().column_sum(0, j) > 0.1).count();
        assert_eq!(strong, 3);
    }

    #[test]
    fn infeasible_tiers_are_rejected() {
        let spec = ContentBlocksSpec { high_spread: 0.95, ..ContentBlocksSpec::default() };
        assert!(generate_content_blocks(&spec, &mut seeded(0)).is_err());
        let spec = ContentBlocksSpec { influence_cap: 1.0, ..ContentBlocksSpec::default() };
        assert!(generate_content_blocks(&spec, &mut seeded(0)).is_err());
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = NetworkSpec { seed: 9, ..NetworkSpec::content_blocks() };
        let text = spec.to_toml().unwrap();
        assert_eq!(NetworkSpec::from_toml(&text).unwrap(), spec);
    }
}
