//! Multi-run experiments: simulation loop, aggregation, bound diagnostics,
//! CSV/JSON export and SVG plots.

use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{build_policy, switch_bound, AgentConfig, AgentContext, PolicyKind};
use crate::diffusion::{active_pair_bound, reward, sample_transition, LinkFunction, NetworkModel, RewardWeights};
use crate::error::{Error, Result};
use crate::estimator::elliptical_potential_bound;
use crate::netgen::NetworkSpec;
use crate::rng::split;

/// Two-sided coverage of the plotted confidence bands.
pub const CI_LEVEL: f64 = 0.85;

const ENV_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub network: NetworkSpec,
    /// Serialized network to load instead of generating from `network`.
    pub network_path: Option<PathBuf>,
    pub policy: PolicyKind,
    /// Policies of a `compare` grid; empty means just `policy`.
    pub policies: Vec<PolicyKind>,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub link: LinkFunction,
    pub weights: RewardWeights,
    pub agent: AgentConfig,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            network: NetworkSpec::content_blocks(),
            network_path: None,
            policy: PolicyKind::Morima,
            policies: Vec::new(),
            horizon: 200,
            runs: 20,
            base_seed: 0,
            link: LinkFunction::Identity,
            weights: RewardWeights::Unit,
            agent: AgentConfig::default(),
            output_dir: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&fs::read_to_string(path)?)?;
        if let (Some(p), Some(dir)) = (&cfg.network_path, path.parent()) {
            if p.is_relative() {
                cfg.network_path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.horizon == 0 {
            return Err(Error::Config("runs and horizon must be at least 1".into()));
        }
        let g = self.agent.gamma;
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {g}")));
        }
        self.agent.plan.validate()
    }

    pub fn network_model(&self) -> Result<NetworkModel> {
        match &self.network_path {
            Some(p) => NetworkModel::from_json(&fs::read_to_string(p)?),
            None => self.network.generate(),
        }
    }

    pub fn policy_grid(&self) -> Vec<PolicyKind> {
        if self.policies.is_empty() {
            vec![self.policy]
        } else {
            self.policies.clone()
        }
    }
}

/// One simulated step. `reward` is paid on the pre-action state `s_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub run_id: usize,
    pub t: usize,
    pub user: usize,
    pub content: usize,
    pub reward: f64,
    pub disc_cum_reward: f64,
    pub active_pairs: usize,
    pub switched: bool,
}

/// Per-run bound bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub run_id: usize,
    pub seed: u64,
    pub switches: usize,
    /// Steps where `||s_t||_1` exceeded the active-pair cap.
    pub active_bound_violations: Vec<usize>,
    pub potential_sum: Option<f64>,
    pub n_observations: Option<u64>,
    pub max_phi_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TrajectoryRecord>,
    pub diagnostics: RunDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_id: usize,
    pub message: String,
}

/// Pointwise statistics of the discounted cumulative reward across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub horizon: usize,
    pub gamma: f64,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub failures: Vec<RunFailure>,
    pub mean: Vec<f64>,
    /// Unbiased across-run variance (zero for a single run).
    pub variance: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub mean_active_pairs: Vec<f64>,
    /// Mean cumulative plan computations up to each step.
    pub mean_switches: Vec<f64>,
    /// Mean of the exponentially weighted reward `R_t = gamma R_{t-1} + r_t`.
    #[serde(default)]
    pub realtime_mean: Vec<f64>,
    pub diagnostics: Vec<RunDiagnostics>,
    pub wall_clock_secs: f64,
}

impl RunSummary {
    pub fn is_partial(&self) -> bool {
        self.runs_completed < self.runs_requested
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Simulates one trajectory of `kind` with run seed `seed`.
pub fn run_single(
    model: &NetworkModel,
    ctx: Arc<AgentContext>,
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    run_id: usize,
    seed: u64,
) -> Result<RunResult> {
    let mut env_rng = split(seed, ENV_STREAM);
    let mut policy = build_policy(kind, model, ctx, &cfg.agent, split(seed, POLICY_STREAM))?;
    let gamma = cfg.agent.gamma;
    let mut s = model.empty_state();
    let mut disc = 0.0;
    let mut weight = 1.0;
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut active_viol = Vec::new();
    for t in 1..=cfg.horizon {
        let decision = policy.act(&s)?;
        let r = reward(&s, &cfg.weights);
        disc += weight * r;
        weight *= gamma;
        if s.l1() as f64 > active_pair_bound(model.decay(), t, cfg.agent.delta) {
            active_viol.push(t);
        }
        records.push(TrajectoryRecord {
            run_id,
            t,
            user: decision.action.user,
            content: decision.action.content,
            reward: r,
            disc_cum_reward: disc,
            active_pairs: s.l1(),
            switched: decision.switched,
        });
        let next = sample_transition(model, &cfg.link, &s, decision.action, &mut env_rng)?;
        policy.observe(&s, decision.action, &next)?;
        s = next;
    }
    let est = policy.estimator();
    Ok(RunResult {
        records,
        diagnostics: RunDiagnostics {
            run_id,
            seed,
            switches: policy.switch_count(),
            active_bound_violations: active_viol,
            potential_sum: est.map(|e| e.potential_sum()),
            n_observations: est.map(|e| e.n_observations()),
            max_phi_norm: est.map(|e| e.max_phi_norm()),
        },
    })
}

/// `R_t = gamma R_{t-1} + r_t` with `R_0 = 0`: the discounted sum seen from step `t`.
pub fn realtime_discounted(rewards: &[f64], gamma: f64) -> Vec<f64> {
    rewards
        .iter()
        .scan(0.0, |acc, &r| {
            *acc = gamma * *acc + r;
            Some(*acc)
        })
        .collect()
}

/// Linear-interpolation percentile of `sorted` at `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Aggregates completed runs (ordered by run id) into a summary.
pub fn summarize(
    policy: &str,
    horizon: usize,
    gamma: f64,
    runs_requested: usize,
    results: &[RunResult],
    failures: Vec<RunFailure>,
    wall_clock_secs: f64,
) -> RunSummary {
    let r = results.len();
    let mut mean = vec![0.0; horizon];
    let mut variance = vec![0.0; horizon];
    let mut ci_low = vec![0.0; horizon];
    let mut ci_high = vec![0.0; horizon];
    let mut active = vec![0.0; horizon];
    let mut switches = vec![0.0; horizon];
    let tail = (1.0 - CI_LEVEL) / 2.0;
    let mut cum_switch = vec![0usize; r];
    let mut realtime = vec![0.0; horizon];
    for run in results {
        let rewards: Vec<f64> = run.records.iter().map(|x| x.reward).collect();
        for (acc, v) in realtime.iter_mut().zip(realtime_discounted(&rewards, gamma)) {
            *acc += v / r as f64;
        }
    }
    for t in 0..horizon {
        let mut col: Vec<f64> = results.iter().map(|run| run.records[t].disc_cum_reward).collect();
        let m = col.iter().sum::<f64>() / r.max(1) as f64;
        mean[t] = m;
        variance[t] = if r > 1 { col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1) as f64 } else { 0.0 };
        col.sort_by(f64::total_cmp);
        ci_low[t] = percentile(&col, tail);
        ci_high[t] = percentile(&col, 1.0 - tail);
        active[t] = results.iter().map(|run| run.records[t].active_pairs as f64).sum::<f64>() / r.max(1) as f64;
        for (c, run) in cum_switch.iter_mut().zip(results) {
            *c += usize::from(run.records[t].switched);
        }
        switches[t] = cum_switch.iter().sum::<usize>() as f64 / r.max(1) as f64;
    }
    RunSummary {
        policy: policy.to_string(),
        horizon,
        gamma,
        runs_requested,
        runs_completed: r,
        failures,
        mean,
        variance,
        ci_low,
        ci_high,
        mean_active_pairs: active,
        mean_switches: switches,
        realtime_mean: realtime,
        diagnostics: results.iter().map(|x| x.diagnostics.clone()).collect(),
        wall_clock_secs,
    }
}

/// Output of one policy over all runs.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: RunSummary,
    pub runs: Vec<RunResult>,
}

impl ExperimentOutput {
    pub fn records(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }

    /// Final discounted cumulative reward of each completed run.
    pub fn final_rewards(&self) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.records.last().map(|x| x.disc_cum_reward)).collect()
    }
}

/// Wall-clock seconds since the call; always zero where no clock exists.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> f64 {
    || 0.0
}

fn run_isolated(
    model: &NetworkModel,
    ctx: &Arc<AgentContext>,
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    run_id: usize,
) -> std::result::Result<RunResult, RunFailure> {
    let seed = cfg.base_seed.wrapping_add(run_id as u64);
    let outcome = catch_unwind(AssertUnwindSafe(|| run_single(model, ctx.clone(), cfg, kind, run_id, seed)));
    match outcome {
        Ok(Ok(run)) => Ok(run),
        Ok(Err(e)) => Err(RunFailure { run_id, message: e.to_string() }),
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(RunFailure { run_id, message: format!("panicked: {message}") })
        }
    }
}

/// Runs `cfg.runs` independent trajectories of `kind` on `model`.
pub fn run_policy(model: &NetworkModel, cfg: &ExperimentConfig, kind: PolicyKind) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ctx = Arc::new(AgentContext::new(model, cfg.weights.clone(), cfg.link, cfg.horizon, &cfg.agent)?);
    let elapsed = stopwatch();
    let ids: Vec<usize> = (0..cfg.runs).collect();
    let job = |id: &usize| run_isolated(model, &ctx, cfg, kind, *id);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = {
        use rayon::prelude::*;
        match cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?
                .install(|| ids.par_iter().map(job).collect()),
            None => ids.par_iter().map(job).collect(),
        }
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = ids.iter().map(job).collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => {
                log::warn!("run {} failed: {}", f.run_id, f.message);
                failures.push(f);
            }
        }
    }
    let summary = summarize(&kind.label(), cfg.horizon, cfg.agent.gamma, cfg.runs, &runs, failures, elapsed());
    Ok(ExperimentOutput { summary, runs })
}

/// Runs the configured policy on the configured network.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = cfg.network_model()?;
    run_policy(&model, cfg, cfg.policy)
}

/// Gap to a reference curve and its `1/sqrt(t)` normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub regret: Vec<f64>,
    pub normalized: Vec<f64>,
}

/// `reference.mean[t] - policy.mean[t]`.
pub fn empirical_regret(reference: &RunSummary, policy: &RunSummary) -> Result<RegretSeries> {
    if reference.horizon != policy.horizon || reference.gamma != policy.gamma {
        return Err(Error::Config("summaries differ in horizon or discount".into()));
    }
    let regret: Vec<f64> = reference.mean.iter().zip(&policy.mean).map(|(a, b)| a - b).collect();
    let normalized = regret.iter().enumerate().map(|(i, r)| r / ((i + 1) as f64).sqrt()).collect();
    Ok(RegretSeries { regret, normalized })
}

/// Problem constants needed to evaluate the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub decay: f64,
    pub delta: f64,
    pub dim: usize,
    pub n_users: usize,
    pub n_contents: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub feature_bound: f64,
}

impl BoundContext {
    pub fn new(model: &NetworkModel, cfg: &ExperimentConfig) -> Result<Self> {
        let ctx = AgentContext::new(model, cfg.weights.clone(), cfg.link, cfg.horizon, &cfg.agent)?;
        Ok(Self {
            decay: model.decay(),
            delta: cfg.agent.delta,
            dim: model.dim(),
            n_users: model.n_users(),
            n_contents: model.n_contents(),
            horizon: cfg.horizon,
            lambda: cfg.agent.lambda,
            feature_bound: ctx.bonus.feature_bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub runs: usize,
    /// Runs with at least one step above the active-pair cap.
    pub active_bound_violating_runs: usize,
    pub active_bound_rate: f64,
    /// The rate allowed at `delta` plus a three-sigma binomial margin.
    pub active_bound_allowed_rate: f64,
    pub switch_bound: f64,
    pub max_switches: usize,
    pub switch_violations: Vec<usize>,
    /// Runs whose potential sum exceeded its deterministic bound.
    pub potential_violations: Vec<usize>,
    pub potential_checked: usize,
}

impl DiagnosticReport {
    pub fn deterministic_bounds_hold(&self) -> bool {
        self.switch_violations.is_empty() && self.potential_violations.is_empty()
    }

    pub fn active_bound_within_band(&self) -> bool {
        self.active_bound_rate <= self.active_bound_allowed_rate
    }
}

/// Bound checks over per-run diagnostics. The switch and potential bounds
/// use `max(L, largest observed ||phi||)` so they stay deterministic.
pub fn diagnostics(runs: &[RunDiagnostics], bounds: &BoundContext) -> DiagnosticReport {
    let n = runs.len();
    let active_bound_violating_runs = runs.iter().filter(|r| !r.active_bound_violations.is_empty()).count();
    let rate = if n == 0 { 0.0 } else { active_bound_violating_runs as f64 / n as f64 };
    let d = bounds.delta;
    let allowed = d + 3.0 * (d * (1.0 - d) / n.max(1) as f64).sqrt();
    let observed_l = runs.iter().filter_map(|r| r.max_phi_norm).fold(0.0, f64::max);
    let l = bounds.feature_bound.max(observed_l);
    let m_bound = switch_bound(bounds.dim, bounds.n_users, bounds.n_contents, bounds.horizon, l, bounds.lambda);
    let switch_violations = runs.iter().filter(|r| r.switches as f64 >= m_bound).map(|r| r.run_id).collect();
    let mut potential_checked = 0;
    let potential_violations = runs
        .iter()
        .filter_map(|r| {
            let (sum, n_obs) = (r.potential_sum?, r.n_observations?);
            potential_checked += 1;
            let lr = bounds.feature_bound.max(r.max_phi_norm.unwrap_or(0.0));
            (sum > elliptical_potential_bound(bounds.dim, bounds.lambda, n_obs, lr)).then_some(r.run_id)
        })
        .collect();
    DiagnosticReport {
        runs: n,
        active_bound_violating_runs,
        active_bound_rate: rate,
        active_bound_allowed_rate: allowed,
        switch_bound: m_bound,
        max_switches: runs.iter().map(|r| r.switches).max().unwrap_or(0),
        switch_violations,
        potential_violations,
        potential_checked,
    }
}

/// Rebuilds per-run diagnostics from exported trajectories (switch counts and
/// active-pair violations; estimator quantities are unavailable).
pub fn diagnostics_from_records(records: &[TrajectoryRecord], bounds: &BoundContext) -> Vec<RunDiagnostics> {
    let mut by_run: std::collections::BTreeMap<usize, RunDiagnostics> = Default::default();
    for rec in records {
        let entry = by_run.entry(rec.run_id).or_insert_with(|| RunDiagnostics {
            run_id: rec.run_id,
            seed: 0,
            switches: 0,
            active_bound_violations: Vec::new(),
            potential_sum: None,
            n_observations: None,
            max_phi_norm: None,
        });
        entry.switches += usize::from(rec.switched);
        if rec.active_pairs as f64 > active_pair_bound(bounds.decay, rec.t, bounds.delta) {
            entry.active_bound_violations.push(rec.t);
        }
    }
    by_run.into_values().collect()
}

/// Writes trajectories with the fixed column schema.
pub fn write_trajectories_csv<'a>(path: &Path, records: impl IntoIterator<Item = &'a TrajectoryRecord>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories_csv(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Writes `<label>.csv` and `<label>.json` into `dir`.
pub fn export(dir: &Path, output: &ExperimentOutput) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", output.summary.policy));
    let json_path = dir.join(format!("{}.json", output.summary.policy));
    write_trajectories_csv(&csv_path, output.records())?;
    write_json(&json_path, &output.summary)?;
    Ok((csv_path, json_path))
}

const PALETTE: [plotters::style::RGBColor; 6] = [
    plotters::style::RGBColor(31, 119, 180),
    plotters::style::RGBColor(214, 39, 40),
    plotters::style::RGBColor(44, 160, 44),
    plotters::style::RGBColor(255, 127, 14),
    plotters::style::RGBColor(148, 103, 189),
    plotters::style::RGBColor(127, 127, 127),
];

/// Mean discounted cumulative reward with 85% bands, one curve per summary.
pub fn emit_plot(path: &Path, title: &str, summaries: &[&RunSummary]) -> Result<()> {
    use plotters::prelude::*;
    let perr = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let horizon = summaries.iter().map(|s| s.horizon).max().unwrap_or(1);
    let y_max =
        summaries.iter().flat_map(|s| s.ci_high.iter().chain(&s.mean)).cloned().fold(0.0f64, f64::max).max(1e-9) * 1.05;
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| perr(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(1f64..horizon as f64, 0f64..y_max)
        .map_err(|e| perr(&e))?;
    chart.configure_mesh().x_desc("round").y_desc("discounted cumulative reward").draw().map_err(|e| perr(&e))?;
    for (idx, s) in summaries.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut band: Vec<(f64, f64)> = s.ci_high.iter().enumerate().map(|(t, &v)| ((t + 1) as f64, v)).collect();
        band.extend(s.ci_low.iter().enumerate().rev().map(|(t, &v)| ((t + 1) as f64, v)));
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.18)))).map_err(|e| perr(&e))?;
        chart
            .draw_series(LineSeries::new(
                s.mean.iter().enumerate().map(|(t, &v)| ((t + 1) as f64, v)),
                color.stroke_width(2),
            ))
            .map_err(|e| perr(&e))?
            .label(s.policy.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| perr(&e))?;
    root.present().map_err(|e| perr(&e))?;
    Ok(())
}

/// Regret and its `sqrt(t)`-normalized series.
pub fn emit_regret_plot(path: &Path, title: &str, series: &[(String, RegretSeries)]) -> Result<()> {
    use plotters::prelude::*;
    let perr = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let horizon = series.iter().map(|(_, s)| s.regret.len()).max().unwrap_or(1).max(2);
    let (lo, hi) =
        series.iter().flat_map(|(_, s)| s.regret.iter()).fold((0.0f64, 1e-9f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| perr(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(1f64..horizon as f64, (lo * 1.05)..(hi * 1.05))
        .map_err(|e| perr(&e))?;
    chart.configure_mesh().x_desc("round").y_desc("empirical regret").draw().map_err(|e| perr(&e))?;
    for (idx, (label, s)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                s.regret.iter().enumerate().map(|(t, &v)| ((t + 1) as f64, v)),
                color.stroke_width(2),
            ))
            .map_err(|e| perr(&e))?
            .label(label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(|e| perr(&e))?;
    root.present().map_err(|e| perr(&e))?;
    Ok(())
}

/// Result of a multi-policy grid.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub outputs: Vec<ExperimentOutput>,
    /// Regret of every other policy against the known-model reference, if present.
    pub regrets: Vec<(String, RegretSeries)>,
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let model = cfg.network_model()?;
    let mut outputs = Vec::new();
    for kind in cfg.policy_grid() {
        log::info!("running {} ({} runs, T = {})", kind.label(), cfg.runs, cfg.horizon);
        outputs.push(run_policy(&model, cfg, kind)?);
    }
    let reference = outputs.iter().find(|o| o.summary.policy == PolicyKind::MorimaKnownModel.label());
    let mut regrets = Vec::new();
    if let Some(reference) = reference {
        for o in &outputs {
            if o.summary.policy != reference.summary.policy {
                regrets.push((o.summary.policy.clone(), empirical_regret(&reference.summary, &o.summary)?));
            }
        }
    }
    Ok(Comparison { outputs, regrets })
}
