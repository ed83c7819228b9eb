//! Oracles shared by the integration tests.
#![allow(dead_code)]
// index loops mirror the dense formulas
#![allow(clippy::needless_range_loop)]

use influence_rl::diffusion::{Action, Connectivity, LinkFunction, NetworkModel, RewardWeights, StateMatrix};
use influence_rl::netgen::{NetworkSpec, RandomSpec};

pub fn tiny_model(seed: u64, n_users: usize, n_contents: usize, decay: f64) -> NetworkModel {
    let spec = RandomSpec { n_users, n_contents, d1: 2, d2: 2, decay, influence_cap: None };
    NetworkSpec::random_valid(spec, seed).generate().expect("random network")
}

/// Dense Bellman solver over explicit bit vectors, written without the
/// bitmask support pruning of the library: every next state is enumerated.
pub struct DenseSolution {
    pub n_pairs: usize,
    pub q: Vec<Vec<f64>>,
}

impl DenseSolution {
    pub fn greedy(&self, state: usize) -> Option<usize> {
        let row = &self.q[state];
        let mut sorted: Vec<f64> = row.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() > 1 && sorted[0] - sorted[1] < 1e-6 {
            return None;
        }
        row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
    }
}

pub struct DenseProblem<'a> {
    pub connectivity: &'a Connectivity,
    pub link: LinkFunction,
    pub weights: RewardWeights,
    pub gamma: f64,
    pub reward_cap: f64,
    pub bonus: &'a dyn Fn(&[bool], usize) -> f64,
}

pub fn dense_value_iteration(p: &DenseProblem<'_>, tol: f64, max_iters: usize) -> DenseSolution {
    let n = p.connectivity.n_users();
    let kk = p.connectivity.n_contents();
    let m = n * kk;
    let states = 1usize << m;
    let bits = |s: usize| -> Vec<bool> { (0..m).map(|b| s & (1 << b) != 0).collect() };

    // transition[post][next]
    let mut transition = vec![vec![0.0; states]; states];
    for post in 0..states {
        let sb = bits(post);
        let mut probs = vec![0.0; m];
        for i in 0..n {
            for k in 0..kk {
                let mut z = 0.0;
                for j in 0..n {
                    if sb[j * kk + k] {
                        z += p.connectivity.get(k, i, j).clamp(0.0, 1.0);
                    }
                }
                probs[i * kk + k] = p.link.mu(z).clamp(0.0, 1.0);
            }
        }
        for next in 0..states {
            let nb = bits(next);
            transition[post][next] = (0..m).map(|b| if nb[b] { probs[b] } else { 1.0 - probs[b] }).product();
        }
    }

    let cap = p.reward_cap / (1.0 - p.gamma);
    let mut q = vec![vec![cap; m]; states];
    for _ in 0..max_iters {
        let v: Vec<f64> = q.iter().map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
        let mut change: f64 = 0.0;
        let mut next_q = q.clone();
        for s in 0..states {
            let sb = bits(s);
            let mut r = 0.0;
            for b in 0..m {
                if sb[b] {
                    r += p.weights.weight(b / kk, b % kk);
                }
            }
            let r = r.min(p.reward_cap);
            for a in 0..m {
                let post = s | (1 << a);
                let ev: f64 = transition[post].iter().zip(&v).map(|(pr, val)| pr * val).sum();
                let val = (r + (p.bonus)(&sb, a) + p.gamma * ev).clamp(0.0, cap);
                change = change.max((val - q[s][a]).abs());
                next_q[s][a] = val;
            }
        }
        q = next_q;
        if change < tol {
            break;
        }
    }
    DenseSolution { n_pairs: m, q }
}

pub fn mask_to_state(mask: usize, n: usize, kk: usize) -> StateMatrix {
    let pairs = (0..n * kk).filter(|b| mask & (1 << b) != 0).map(|b| (b / kk, b % kk));
    StateMatrix::from_pairs(n, kk, pairs).unwrap()
}

pub fn action_of(bit: usize, kk: usize) -> Action {
    Action::new(bit / kk, bit % kk)
}
