//! Prints the first steps of one run: action, role of the seed user, reward.
//!
//! cargo run --release --example trace -- configs/content_blocks.toml morima 40

use influence_rl::agents::PolicyKind;
use influence_rl::harness::{run_policy, ExperimentConfig};
use influence_rl::netgen::{content_block_roles, star_groups};

fn main() -> influence_rl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::load(std::path::Path::new(&args[1]))?;
    let kind: PolicyKind = serde_json::from_str(&format!("{{\"kind\":\"{}\"}}", args[2]))?;
    cfg.runs = 1;
    cfg.horizon = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(40);
    if let Some(b) = args.get(4) {
        cfg.agent.bonus_scale = b.parse().unwrap();
    }
    if let Some(b) = args.get(5) {
        cfg.agent.beta_scale = b.parse().unwrap();
    }
    let model = cfg.network_model()?;
    let star = matches!(cfg.network.kind, influence_rl::netgen::NetworkKind::Star(_));
    let roles = content_block_roles(&model);
    let groups = star_groups(&model);
    let out = run_policy(&model, &cfg, kind)?;
    for r in out.records() {
        let role = if star { format!("group {}", groups[r.user]) } else { format!("{:?}", roles[r.user]) };
        println!(
            "t {:>3} user {:>3} content {} {role} reward {:>5.1} cum {:.3}{}",
            r.t,
            r.user,
            r.content,
            r.reward,
            r.disc_cum_reward,
            if r.switched { " *" } else { "" }
        );
    }
    Ok(())
}
