use std::fs;
use std::process::Command;

use influence_rl::agents::{AgentConfig, PolicyKind};
use influence_rl::diffusion::{active_pair_bound, Features, NetworkModel};
use influence_rl::harness::{
    diagnostics, empirical_regret, export, read_trajectories_csv, run_policy, summarize, BoundContext,
    ExperimentConfig, RunFailure, CI_LEVEL,
};
use influence_rl::netgen::{NetworkSpec, RandomSpec};
use influence_rl::planner::PlanConfig;

fn tiny_cfg(runs: usize, horizon: usize, policy: PolicyKind) -> ExperimentConfig {
    ExperimentConfig {
        name: "tiny".into(),
        network: NetworkSpec::random_valid(RandomSpec { n_users: 5, n_contents: 2, ..RandomSpec::default() }, 7),
        policy,
        horizon,
        runs,
        base_seed: 100,
        agent: AgentConfig {
            bonus_scale: 1e-3,
            beta_scale: 1e-2,
            plan: PlanConfig { depth: 2, rollouts: 4, ..PlanConfig::default() },
            ..AgentConfig::default()
        },
        threads: Some(2),
        ..ExperimentConfig::default()
    }
}

/// Type-7 (linear interpolation) sample quantile, written independently.
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < v.len() {
        v[lo] * (1.0 - frac) + v[lo + 1] * frac
    } else {
        v[lo]
    }
}

#[test]
fn single_step_reward_is_the_initial_state_size() {
    let cfg = tiny_cfg(1, 1, PolicyKind::Random);
    let out = run_policy(&cfg.network_model().unwrap(), &cfg, PolicyKind::Random).unwrap();
    let rec = &out.runs[0].records[0];
    assert_eq!(out.runs[0].records.len(), 1);
    assert_eq!(rec.t, 1);
    assert_eq!(rec.reward, rec.active_pairs as f64);
    assert_eq!(rec.disc_cum_reward, rec.reward);
    assert_eq!(rec.reward, 0.0);
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let cfg = tiny_cfg(4, 30, PolicyKind::Morima);
    let model = cfg.network_model().unwrap();
    let a = run_policy(&model, &cfg, PolicyKind::Morima).unwrap();
    let b = run_policy(&model, &ExperimentConfig { threads: Some(1), ..cfg.clone() }, PolicyKind::Morima).unwrap();
    assert_eq!(a.records().collect::<Vec<_>>(), b.records().collect::<Vec<_>>());
    assert_eq!(a.summary.mean, b.summary.mean);
    let c = run_policy(&model, &ExperimentConfig { base_seed: 101, ..cfg }, PolicyKind::Morima).unwrap();
    assert_ne!(a.runs[0].records, c.runs[0].records);
    // run ids shift with the base seed: run 1 at seed 100 is run 0 at seed 101
    assert_eq!(
        a.runs[1].records.iter().map(|r| r.reward).collect::<Vec<_>>(),
        c.runs[0].records.iter().map(|r| r.reward).collect::<Vec<_>>()
    );
}

#[test]
fn constant_unit_reward_follows_the_geometric_series() {
    // one user, one content, certain self-activation: every state after the first is full
    let features = Features::new(1, 1, vec![vec![1.0]], vec![vec![1.0]]).unwrap();
    let mut model = NetworkModel::new(features, vec![0.5], 0.5, 1.0).unwrap();
    model.override_entry(0, 0, 0, 1.0);
    let horizon = 60;
    let cfg = ExperimentConfig { horizon, runs: 2, ..tiny_cfg(2, horizon, PolicyKind::Random) };
    let out = run_policy(&model, &cfg, PolicyKind::Random).unwrap();
    let g: f64 = 0.9;
    for run in &out.runs {
        assert_eq!(run.records[0].reward, 0.0);
        assert!(run.records[1..].iter().all(|r| r.reward == 1.0));
        let last = run.records.last().unwrap().disc_cum_reward;
        // sum_{t=2}^{T} g^(t-1): the limit 1/(1-g) minus the empty first step
        let closed = (g - g.powi(horizon as i32)) / (1.0 - g);
        assert!((last - closed).abs() < 1e-12);
        assert!((last + 1.0 - 1.0 / (1.0 - g)).abs() <= g.powi(horizon as i32) / (1.0 - g) + 1e-12);
    }
}

#[test]
fn export_is_complete_and_byte_stable() {
    let cfg = tiny_cfg(3, 7, PolicyKind::Random);
    let out = run_policy(&cfg.network_model().unwrap(), &cfg, PolicyKind::Random).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv_a, json_a) = export(&dir.path().join("a"), &out).unwrap();
    let (csv_b, json_b) = export(&dir.path().join("b"), &out).unwrap();
    let text = fs::read_to_string(&csv_a).unwrap();
    assert_eq!(text.lines().count(), 3 * 7 + 1);
    assert_eq!(text.lines().next().unwrap(), "run_id,t,user,content,reward,disc_cum_reward,active_pairs,switched");
    assert_eq!(fs::read(&csv_a).unwrap(), fs::read(&csv_b).unwrap());
    let (ja, jb) = (fs::read(&json_a).unwrap(), fs::read(&json_b).unwrap());
    // wall clock is the only field allowed to differ between runs, not between exports
    assert_eq!(ja, jb);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let cfg = tiny_cfg(1, 2, PolicyKind::Random);
    let out = run_policy(&cfg.network_model().unwrap(), &cfg, PolicyKind::Random).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    assert!(export(&file.path().join("sub"), &out).is_err());
}

#[test]
fn summary_statistics_match_the_raw_csv() {
    let cfg = tiny_cfg(9, 25, PolicyKind::Morima);
    let out = run_policy(&cfg.network_model().unwrap(), &cfg, PolicyKind::Morima).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = export(dir.path(), &out).unwrap();
    let records = read_trajectories_csv(&csv).unwrap();
    let summary: influence_rl::harness::RunSummary = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    let tail = (1.0 - CI_LEVEL) / 2.0;
    for t in 1..=25 {
        let col: Vec<f64> = records.iter().filter(|r| r.t == t).map(|r| r.disc_cum_reward).collect();
        assert_eq!(col.len(), 9);
        let mean = col.iter().sum::<f64>() / 9.0;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 8.0;
        assert!((summary.mean[t - 1] - mean).abs() < 1e-9);
        assert!((summary.variance[t - 1] - var).abs() < 1e-9);
        assert!(summary.variance[t - 1] >= 0.0);
        assert!((summary.ci_low[t - 1] - quantile(&col, tail)).abs() < 1e-9);
        assert!((summary.ci_high[t - 1] - quantile(&col, 1.0 - tail)).abs() < 1e-9);
        let switches: f64 = records.iter().filter(|r| r.t <= t && r.switched).count() as f64 / 9.0;
        assert!((summary.mean_switches[t - 1] - switches).abs() < 1e-9);
    }
    assert_eq!(summary.mean.len(), 25);
    assert_eq!(summary.realtime_mean.len(), 25);
}

#[test]
fn regret_is_zero_on_itself_antisymmetric_and_checks_shapes() {
    let cfg = tiny_cfg(3, 20, PolicyKind::Random);
    let model = cfg.network_model().unwrap();
    let a = run_policy(&model, &cfg, PolicyKind::Random).unwrap().summary;
    let b = run_policy(&model, &cfg, PolicyKind::Imlinucb { budget: 2 }).unwrap().summary;
    assert!(empirical_regret(&a, &a).unwrap().regret.iter().all(|&x| x == 0.0));
    let ab = empirical_regret(&a, &b).unwrap();
    let ba = empirical_regret(&b, &a).unwrap();
    assert!(ab.regret.iter().zip(&ba.regret).all(|(x, y)| x == &-y));
    for (t, (r, n)) in ab.regret.iter().zip(&ab.normalized).enumerate() {
        assert!((n - r / ((t + 1) as f64).sqrt()).abs() < 1e-12);
    }
    let short =
        run_policy(&model, &ExperimentConfig { horizon: 10, ..cfg.clone() }, PolicyKind::Random).unwrap().summary;
    assert!(empirical_regret(&a, &short).is_err());
    let mut other_gamma = cfg;
    other_gamma.agent.gamma = 0.5;
    let c = run_policy(&model, &other_gamma, PolicyKind::Random).unwrap().summary;
    assert!(empirical_regret(&a, &c).is_err());
}

#[test]
fn failed_runs_are_isolated_and_flag_the_summary() {
    let cfg = tiny_cfg(4, 15, PolicyKind::Morima);
    let model = cfg.network_model().unwrap();
    let full = run_policy(&model, &cfg, PolicyKind::Morima).unwrap();
    assert!(!full.summary.is_partial());
    // drop run 2 as if it had failed; the others keep their own outputs
    let survivors: Vec<_> = full.runs.iter().filter(|r| r.diagnostics.run_id != 2).cloned().collect();
    let failure = RunFailure { run_id: 2, message: "panicked: injected".into() };
    let partial = summarize("morima", 15, 0.9, 4, &survivors, vec![failure], 0.0);
    assert!(partial.is_partial());
    assert_eq!(partial.runs_completed, 3);
    let solo = run_policy(
        &model,
        &ExperimentConfig { runs: 1, base_seed: cfg.base_seed + 3, ..cfg.clone() },
        PolicyKind::Morima,
    )
    .unwrap();
    assert_eq!(
        solo.runs[0].records.iter().map(|r| r.reward).collect::<Vec<_>>(),
        full.runs[3].records.iter().map(|r| r.reward).collect::<Vec<_>>()
    );
    let expected: f64 = survivors.iter().map(|r| r.records[14].disc_cum_reward).sum::<f64>() / 3.0;
    assert!((partial.mean[14] - expected).abs() < 1e-12);
}

#[test]
fn fast_decay_keeps_states_below_the_active_cap() {
    let mut cfg = tiny_cfg(20, 200, PolicyKind::Random);
    cfg.network =
        NetworkSpec::random_valid(RandomSpec { n_users: 8, n_contents: 2, decay: 0.98, ..RandomSpec::default() }, 3);
    let model = cfg.network_model().unwrap();
    let out = run_policy(&model, &cfg, PolicyKind::Random).unwrap();
    let cap = active_pair_bound(0.98, 1, 0.05);
    assert!(cap < 20.0);
    for rec in out.records() {
        assert!((rec.active_pairs as f64) <= active_pair_bound(0.98, rec.t, 0.05));
    }
    let report = diagnostics(&out.summary.diagnostics, &BoundContext::new(&model, &cfg).unwrap());
    assert_eq!(report.active_bound_violating_runs, 0);
    assert!(report.deterministic_bounds_hold());
}

#[test]
fn cli_generates_runs_and_diagnoses() {
    let bin = env!("CARGO_BIN_EXE_influence-rl");
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("star.json");
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/network_star.toml");
    let st = Command::new(bin).args(["generate", "--spec", spec, "--out"]).arg(&net).status().unwrap();
    assert!(st.success());
    assert_eq!(NetworkModel::from_json(&fs::read_to_string(&net).unwrap()).unwrap().n_users(), 30);

    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "name = \"smoke\"\nnetwork_path = \"star.json\"\npolicy = { kind = \"random\" }\nhorizon = 12\nruns = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = Command::new(bin).args(["run", "--config"]).arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    for f in ["random.csv", "random.json", "random.svg", "diagnostics.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let st = Command::new(bin)
        .args(["diagnose", "--config"])
        .arg(&config)
        .arg("--trajectories")
        .arg(out.join("random.csv"))
        .output()
        .unwrap();
    assert!(st.status.success());
    let report: serde_json::Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(report["runs"], 3);

    let bad = Command::new(bin).args(["run", "--config", "/nonexistent.toml"]).status().unwrap();
    assert!(!bad.success());
}
