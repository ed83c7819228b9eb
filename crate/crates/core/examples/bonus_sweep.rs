//! Sweeps the bonus and radius multipliers on a config and prints final means.
//!
//! cargo run --release --example bonus_sweep -- configs/content_blocks.toml 8 100

use influence_rl::agents::PolicyKind;
use influence_rl::harness::{run_policy, ExperimentConfig};

fn main() -> influence_rl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let path = args.get(1).map(String::as_str).unwrap_or("configs/content_blocks.toml");
    let mut cfg = ExperimentConfig::load(std::path::Path::new(path))?;
    cfg.runs = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    cfg.horizon = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(100);
    let model = cfg.network_model()?;
    let reference = run_policy(&model, &cfg, PolicyKind::MorimaKnownModel)?.summary;
    let late = |v: &[f64]| v[v.len() * 3 / 4..].iter().sum::<f64>() / (v.len() - v.len() * 3 / 4) as f64;
    println!("known_model {:.3} late realtime {:.3}", reference.final_mean(), late(&reference.realtime_mean));
    let ucb = run_policy(&model, &cfg, PolicyKind::Imlinucb { budget: 2 })?.summary;
    println!(
        "imlinucb final {:.3} ratio {:.3} late realtime ratio {:.3}",
        ucb.final_mean(),
        ucb.final_mean() / reference.final_mean(),
        late(&ucb.realtime_mean) / late(&reference.realtime_mean)
    );
    let bonuses: Vec<f64> =
        args.get(4).map_or(vec![1e-7, 1e-6], |s| s.split(',').map(|x| x.parse().unwrap()).collect());
    let radii: Vec<f64> = args.get(5).map_or(vec![1e-4, 1e-3], |s| s.split(',').map(|x| x.parse().unwrap()).collect());
    for &bonus in &bonuses {
        for &radius in &radii {
            cfg.agent.bonus_scale = bonus;
            cfg.agent.beta_scale = radius;
            let s = run_policy(&model, &cfg, PolicyKind::Morima)?.summary;
            println!(
                "bonus {bonus:e} radius {radius:e}: final {:.3} ratio {:.3} late realtime ratio {:.3}",
                s.final_mean(),
                s.final_mean() / reference.final_mean(),
                late(&s.realtime_mean) / late(&reference.realtime_mean)
            );
        }
    }
    Ok(())
}
