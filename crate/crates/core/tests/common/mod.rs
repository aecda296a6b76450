//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use beliefnet::fdd::{centralized_posterior, HypothesisBank, LocalEvidence};
use beliefnet::PairwiseMRF;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0f64..=1.0).exp()
}

fn random_edge(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| log_uniform(rng)).collect()).collect()
}

/// Random tree with up to `max_nodes` nodes, cardinalities 2..=4 and
/// log-potentials uniform on [-1, 1]. Node `k > 0` hangs off a uniformly
/// chosen earlier node.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> PairwiseMRF {
    let n = rng.random_range(1..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
    let nodes = cards.iter().map(|&c| (0..c).map(|_| log_uniform(rng)).collect()).collect();
    let edges = (1..n)
        .map(|k| {
            let parent = rng.random_range(0..k);
            (parent, k, random_edge(rng, cards[parent], cards[k]))
        })
        .collect();
    PairwiseMRF::new(nodes, edges).unwrap()
}

/// Random graph (loops allowed) with 2..=`max_nodes` nodes, cardinalities
/// 2..=3 and each pair joined with probability 0.4.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> PairwiseMRF {
    let n = rng.random_range(2..=max_nodes);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let nodes = cards.iter().map(|&c| (0..c).map(|_| log_uniform(rng)).collect()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                edges.push((i, j, random_edge(rng, cards[i], cards[j])));
            }
        }
    }
    PairwiseMRF::new(nodes, edges).unwrap()
}

/// Dirichlet(1, ..., 1) sample.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn tree_diameter(mrf: &PairwiseMRF) -> usize {
    let far = |start: usize| {
        let mut dist = vec![usize::MAX; mrf.num_nodes()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut last = start;
        while let Some(k) = queue.pop_front() {
            last = k;
            for nb in mrf.neighbors(k) {
                if dist[nb.node] == usize::MAX {
                    dist[nb.node] = dist[k] + 1;
                    queue.push_back(nb.node);
                }
            }
        }
        (last, dist[last])
    };
    far(far(0).0).1
}

pub struct FddInstance {
    pub bank: HypothesisBank,
    pub evidence: Vec<LocalEvidence>,
    pub topology: Vec<(usize, usize)>,
}

/// Random star or tree scenario with 2..=5 agents and 2..=4 hypotheses,
/// likelihoods uniform on [0.1, 1], resampled until the oracle posterior's
/// top-two gap exceeds `min_gap`.
pub fn random_fdd(rng: &mut ChaCha8Rng, min_gap: f64) -> FddInstance {
    loop {
        let n = rng.random_range(2..=5);
        let h = rng.random_range(2..=4);
        let prior: Vec<f64> = random_simplex(rng, h).iter().map(|p| 0.5 * p + 0.5 / h as f64).collect();
        let labels = (0..h).map(|i| format!("h{i}")).collect();
        let bank = HypothesisBank::new(labels, prior).unwrap();
        let evidence: Vec<LocalEvidence> = (0..n)
            .map(|k| LocalEvidence::new(format!("agent-{k}"), (0..h).map(|_| rng.random_range(0.1..=1.0)).collect()))
            .collect();
        let star = rng.random_bool(0.5);
        let topology = (1..n)
            .map(|k| if star { (0, k) } else { (rng.random_range(0..k), k) })
            .collect();
        let mut post = centralized_posterior(&bank, &evidence).unwrap();
        post.sort_by(|a, b| b.total_cmp(a));
        if post[0] - post[1] > min_gap {
            return FddInstance { bank, evidence, topology };
        }
    }
}
