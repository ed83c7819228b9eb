use influence_rl::diffusion::{validate_network, NetworkModel};
use influence_rl::netgen::{
    content_block_roles, discounted_spread, star_groups, ContentBlocksSpec, NetworkKind, NetworkSpec, RandomSpec,
    StarSpec, Tier,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dense(model: &NetworkModel, k: usize) -> DMatrix<f64> {
    let n = model.n_users();
    DMatrix::from_fn(n, n, |i, j| model.connectivity().get(k, i, j))
}

/// `sum_{t=1}^{h} gamma^(t-1) 1^T A^t e_j` by explicit matrix powers.
fn power_series_spread(a: &DMatrix<f64>, j: usize, gamma: f64, horizon: usize) -> f64 {
    let n = a.nrows();
    let mut power = DMatrix::<f64>::identity(n, n);
    let ones = DVector::<f64>::from_element(n, 1.0);
    let mut total = 0.0;
    for t in 0..horizon {
        power = a * &power;
        total += gamma.powi(t as i32) * ones.dot(&power.column(j));
    }
    total
}

fn first_user(roles: &[(usize, Tier)], block: usize, tier: Tier) -> usize {
    roles.iter().position(|&r| r == (block, tier)).unwrap()
}

#[test]
fn content_blocks_never_couple_users_across_blocks() {
    let model = NetworkSpec::content_blocks().generate().unwrap();
    let roles = content_block_roles(&model);
    let conn = model.connectivity();
    for k in 0..model.n_contents() {
        for i in 0..model.n_users() {
            for j in 0..model.n_users() {
                if roles[i].0 != roles[j].0 {
                    assert_eq!(conn.get(k, i, j), 0.0, "content {k} couples {i} and {j}");
                }
            }
        }
    }
    // the axis-aligned contents stay inside their own block
    for b in 0..3 {
        for (j, role) in roles.iter().enumerate() {
            if role.0 != b {
                assert_eq!(conn.column_sum(b, j), 0.0);
            }
        }
    }
}

#[test]
fn content_blocks_tier_spreads_are_as_configured() {
    let spec = ContentBlocksSpec::default();
    let model = NetworkSpec::content_blocks().generate().unwrap();
    let roles = content_block_roles(&model);
    let count = |tier| roles.iter().filter(|r| r.1 == tier).count();
    assert_eq!((count(Tier::High), count(Tier::Medium), count(Tier::Low)), (60, 9, 231));
    for b in 0..3 {
        let h = first_user(&roles, b, Tier::High);
        let m = first_user(&roles, b, Tier::Medium);
        assert!((model.connectivity().column_sum(b, h) - spec.high_spread).abs() < 1e-12);
        assert!((model.connectivity().column_sum(b, m) - spec.medium_spread).abs() < 1e-12);
    }
}

#[test]
fn high_tier_seeds_pay_off_later_than_medium_tier_seeds() {
    let model = NetworkSpec::content_blocks().generate().unwrap();
    let roles = content_block_roles(&model);
    let a = dense(&model, 0);
    let h = first_user(&roles, 0, Tier::High);
    let m = first_user(&roles, 0, Tier::Medium);
    let one_step = |j| a.column(j).sum();
    assert!(one_step(m) > one_step(h));
    let gamma = 0.9;
    let (vh, vm) = (power_series_spread(&a, h, gamma, 50), power_series_spread(&a, m, gamma, 50));
    assert!(vh > vm, "discounted spread high {vh} medium {vm}");
    assert!((discounted_spread(&model, 0, h, gamma, 50) - vh).abs() < 1e-9);
    assert!((discounted_spread(&model, 0, m, gamma, 50) - vm).abs() < 1e-9);
    // second generation alone already favours the high tier
    let a2 = &a * &a;
    assert!(a2.column(h).sum() > a2.column(m).sum());
}

#[test]
fn star_center_loses_one_step_but_wins_discounted() {
    let model = NetworkSpec::star().generate().unwrap();
    let groups = star_groups(&model);
    let a = dense(&model, 0);
    let influencers: Vec<usize> = (0..model.n_users()).filter(|&j| a.column(j).sum() > 0.1).collect();
    assert_eq!(influencers.len(), 3);
    let center = groups.iter().position(|&g| g == 0).unwrap();
    let peripheral = groups.iter().position(|&g| g == 1).unwrap();
    assert!(influencers.contains(&center) && influencers.contains(&peripheral));
    assert!(a.column(center).sum() < a.column(peripheral).sum());
    let vc = power_series_spread(&a, center, 0.9, 50);
    let vp = power_series_spread(&a, peripheral, 0.9, 50);
    assert!(vc > vp, "center {vc} peripheral {vp}");
}

#[test]
fn random_valid_hits_the_column_bound_and_is_seeded() {
    let spec = RandomSpec { n_users: 12, n_contents: 3, d1: 3, d2: 2, decay: 0.25, influence_cap: None };
    let a = NetworkSpec::random_valid(spec.clone(), 4).generate().unwrap();
    let b = NetworkSpec::random_valid(spec.clone(), 4).generate().unwrap();
    let c = NetworkSpec::random_valid(spec, 5).generate().unwrap();
    assert_eq!(a.tensor(), b.tensor());
    assert_ne!(a.tensor(), c.tensor());
    let mut max_col: f64 = 0.0;
    for k in 0..3 {
        for j in 0..12 {
            let s = a.connectivity().column_sum(k, j);
            assert!(s <= 0.75);
            max_col = max_col.max(s);
        }
    }
    assert!(max_col >= 0.99 * 0.75, "largest column sum {max_col}");
}

#[test]
fn a_binding_cap_leaves_the_column_bound_slack() {
    let spec = RandomSpec { n_users: 6, n_contents: 2, d1: 2, d2: 2, decay: 0.2, influence_cap: Some(0.5) };
    let m = NetworkSpec::random_valid(spec, 1).generate().unwrap();
    assert!(validate_network(&m).passes());
    assert!(m.entry_bound() <= 0.5 / 12.0);
}

#[test]
fn generated_models_survive_a_json_round_trip() {
    let specs = [
        NetworkSpec::content_blocks(),
        NetworkSpec::star(),
        NetworkSpec::random_valid(RandomSpec::default(), 3),
        NetworkSpec {
            seed: 2,
            kind: NetworkKind::Star(StarSpec { followers_per_influencer: 4, ..StarSpec::default() }),
        },
    ];
    for spec in specs {
        let m = spec.generate().unwrap();
        let back = NetworkModel::from_json(&m.to_json().unwrap()).unwrap();
        assert!(m.connectivity().max_abs_diff(back.connectivity()) <= 1e-12);
        assert_eq!(m.tensor(), back.tensor());
        assert_eq!(m.decay(), back.decay());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_random_network_is_valid(
        seed in 0u64..10_000,
        n_users in 1usize..15,
        n_contents in 1usize..4,
        d1 in 1usize..4,
        d2 in 1usize..4,
        decay in 0.01f64..0.99,
    ) {
        let spec = RandomSpec { n_users, n_contents, d1, d2, decay, influence_cap: None };
        let m = NetworkSpec::random_valid(spec, seed).generate().unwrap();
        prop_assert!(validate_network(&m).passes());
        for k in 0..n_contents {
            for j in 0..n_users {
                prop_assert!(m.connectivity().column_sum(k, j) <= 1.0 - decay);
            }
        }
    }

    #[test]
    fn content_block_draws_are_valid_exactly_when_feasible(seed in 0u64..10_000, high in 5usize..25, low in 0usize..80) {
        let spec = ContentBlocksSpec { high_users: high, low_users: low, ..ContentBlocksSpec::default() };
        let n = 3 * (high + spec.medium_users + low);
        let entry_cap = spec.influence_cap / (n * 4) as f64;
        let alpha = spec.high_spread / high as f64;
        let eta = spec.medium_spread / (spec.medium_users as f64 + low as f64 * spec.low_weight);
        let feasible = alpha <= entry_cap && eta <= entry_cap;
        let got = NetworkSpec { seed, kind: NetworkKind::ContentBlocks(spec) }.generate();
        prop_assert_eq!(got.is_ok(), feasible);
        if let Ok(m) = got {
            prop_assert!(validate_network(&m).passes());
        }
    }

    #[test]
    fn star_draws_are_valid_exactly_when_feasible(seed in 0u64..10_000, followers in 1usize..20, background in 0usize..10) {
        let spec = StarSpec { followers_per_influencer: followers, background_users: background, ..StarSpec::default() };
        let n = 3 + 2 * followers + background;
        let column_bound = 1.0 - spec.decay;
        let feasible = followers as f64 * spec.follower_weight <= column_bound
            && spec.center_weight <= spec.influence_cap / n as f64;
        let got = NetworkSpec { seed, kind: NetworkKind::Star(spec) }.generate();
        prop_assert_eq!(got.is_ok(), feasible);
        if let Ok(m) = got {
            prop_assert!(validate_network(&m).passes());
            prop_assert_eq!(star_groups(&m).iter().filter(|&&g| g == 0).count(), 1);
        }
    }
}
