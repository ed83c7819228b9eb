//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a JSON string. The `*_json` functions are
//! plain Rust so they can be tested natively; the `#[wasm_bindgen]` wrappers
//! only convert errors.

use influence_rl::agents::PolicyKind;
use influence_rl::diffusion::{sample_transition, Action};
use influence_rl::harness::{run_policy, ExperimentConfig};
use influence_rl::rng::seeded;
use influence_rl::NetworkModel;
use serde_json::json;
use wasm_bindgen::prelude::*;

const STAR: &str = include_str!("../../core/configs/star.toml");
const CONTENT_BLOCKS: &str = include_str!("../../core/configs/content_blocks.toml");

fn config(network: &str) -> Result<ExperimentConfig, String> {
    let text = match network {
        "star" => STAR,
        "content_blocks" => CONTENT_BLOCKS,
        other => return Err(format!("unknown network '{other}'")),
    };
    ExperimentConfig::from_toml(text).map_err(|e| e.to_string())
}

fn model(network: &str, seed: u64) -> Result<NetworkModel, String> {
    let mut cfg = config(network)?;
    cfg.network.seed = seed;
    cfg.network_model().map_err(|e| e.to_string())
}

/// Row-major `A^k` (row = receiver) plus its shape.
pub fn connectivity_json(network: &str, content: usize, seed: u64) -> Result<String, String> {
    let m = model(network, seed)?;
    if content >= m.n_contents() {
        return Err(format!("content {content} out of range (K = {})", m.n_contents()));
    }
    let n = m.n_users();
    let values: Vec<f64> = (0..n).flat_map(|i| m.connectivity().row(content, i).to_vec()).collect();
    Ok(json!({ "n_users": n, "n_contents": m.n_contents(), "values": values }).to_string())
}

/// Mean number of active pairs per step when the same pair is seeded every step.
pub fn rollout_json(
    network: &str,
    user: usize,
    content: usize,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<String, String> {
    let m = model(network, seed)?;
    if user >= m.n_users() || content >= m.n_contents() {
        return Err("seed pair out of range".into());
    }
    let samples = samples.max(1);
    let a = Action::new(user, content);
    let mut rng = seeded(seed);
    let mut mean = vec![0.0; steps];
    for _ in 0..samples {
        let mut s = m.empty_state();
        for slot in mean.iter_mut() {
            s = sample_transition(&m, &Default::default(), &s, a, &mut rng).map_err(|e| e.to_string())?;
            *slot += s.l1() as f64 / samples as f64;
        }
    }
    Ok(json!({ "mean_active": mean }).to_string())
}

/// Mean discounted cumulative reward curves of the demo policies.
pub fn compare_json(network: &str, horizon: usize, runs: usize, seed: u64) -> Result<String, String> {
    let mut cfg = config(network)?;
    cfg.horizon = horizon.max(1);
    cfg.runs = runs.max(1);
    cfg.base_seed = seed;
    let m = cfg.network_model().map_err(|e| e.to_string())?;
    let mut curves = serde_json::Map::new();
    for kind in
        [PolicyKind::MorimaKnownModel, PolicyKind::Morima, PolicyKind::Imlinucb { budget: 2 }, PolicyKind::Random]
    {
        let s = run_policy(&m, &cfg, kind).map_err(|e| e.to_string())?.summary;
        curves.insert(s.policy.clone(), json!({ "mean": s.mean, "ci_low": s.ci_low, "ci_high": s.ci_high }));
    }
    Ok(serde_json::Value::Object(curves).to_string())
}

#[wasm_bindgen]
pub fn connectivity(network: &str, content: usize, seed: u64) -> Result<String, JsError> {
    connectivity_json(network, content, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rollout(
    network: &str,
    user: usize,
    content: usize,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<String, JsError> {
    rollout_json(network, user, content, steps, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare(network: &str, horizon: usize, runs: usize, seed: u64) -> Result<String, JsError> {
    compare_json(network, horizon, runs, seed).map_err(|e| JsError::new(&e))
}
