//! Deterministic random model generation.
//!
//! Protocols are drawn per indistinguishability class so uniformity holds by
//! construction; transitions are drawn uniformly over states, or over the
//! next layer when the layered mission-style topology is selected. The
//! imperfect-information percentage is realized per agent by merging that
//! fraction of unordered state pairs into indistinguishability classes.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use submc_core::icgs::{AgentDoc, Icgs, IndistDoc, ModelDoc, ProtocolDoc, StateDoc, TransitionDoc};

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorConfig {
    pub states: usize,
    pub agents: usize,
    pub actions_per_agent: usize,
    pub atom_count: usize,
    /// Probability that an atom labels a state, in (0, 1].
    pub label_density: f64,
    /// Probability that an action is enabled for a class, in (0, 1].
    pub protocol_density: f64,
    /// Fraction of unordered state pairs merged per agent, in [0, 100].
    pub pi_percent: u32,
    /// Probability that an instance uses the layered topology.
    pub layered_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            states: 5,
            agents: 2,
            actions_per_agent: 2,
            atom_count: 3,
            label_density: 0.4,
            protocol_density: 0.7,
            pi_percent: 0,
            layered_fraction: 0.25,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// A layered instance approximating the large mission scenario: hundreds
    /// of states, several agents. Not an acceptance target, only a stress
    /// preset.
    pub fn rover_large(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            states: 300,
            agents: 6,
            actions_per_agent: 2,
            atom_count: 8,
            label_density: 0.3,
            protocol_density: 0.6,
            pi_percent: 10,
            layered_fraction: 1.0,
            seed,
        }
    }
}

/// Generates a valid model, reproducibly from the seed.
pub fn random_icgs(cfg: &GeneratorConfig) -> Icgs {
    let doc = random_model_doc(cfg);
    Icgs::from_doc(&doc).expect("generated models satisfy the structural invariants")
}

pub fn random_model_doc(cfg: &GeneratorConfig) -> ModelDoc {
    assert!(cfg.states >= 1 && cfg.agents >= 1 && cfg.actions_per_agent >= 1);
    assert!(cfg.pi_percent <= 100);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.states;
    let m = cfg.agents;

    let agents: Vec<AgentDoc> = (0..m)
        .map(|i| AgentDoc {
            name: format!("a{i}"),
            actions: (0..cfg.actions_per_agent).map(|j| format!("m{j}")).collect(),
        })
        .collect();

    // Indistinguishability: per agent, merge a pi-proportional sample of
    // state pairs.
    let mut class_of: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut indist_docs = Vec::new();
    let all_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    for ai in 0..m {
        let want = (cfg.pi_percent as usize * all_pairs.len()).div_ceil(100).min(all_pairs.len());
        let mut pairs = all_pairs.clone();
        // Partial Fisher-Yates: the first `want` entries are the sample.
        for k in 0..want {
            let swap = rng.gen_range(k..pairs.len());
            pairs.swap(k, swap);
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for &(x, y) in pairs.iter().take(want) {
            indist_docs.push(IndistDoc {
                agent: format!("a{ai}"),
                states: vec![format!("q{x}"), format!("q{y}")],
            });
            let rx = find(&mut parent, x);
            let ry = find(&mut parent, y);
            if rx != ry {
                let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
                parent[hi] = lo;
            }
        }
        let classes: Vec<usize> = (0..n).map(|s| find(&mut parent, s)).collect();
        class_of.push(classes);
    }

    // Protocols drawn once per (agent, class representative).
    let mut protocol_docs = Vec::new();
    let mut enabled: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; m];
    for ai in 0..m {
        let mut per_root: std::collections::HashMap<usize, Vec<usize>> = Default::default();
        for s in 0..n {
            let root = class_of[ai][s];
            let actions = per_root.entry(root).or_insert_with(|| {
                let mut acts: Vec<usize> = (0..cfg.actions_per_agent)
                    .filter(|_| rng.gen_bool(cfg.protocol_density))
                    .collect();
                if acts.is_empty() {
                    acts.push(rng.gen_range(0..cfg.actions_per_agent));
                }
                acts
            });
            enabled[ai][s] = actions.clone();
        }
        for s in 0..n {
            protocol_docs.push(ProtocolDoc {
                agent: format!("a{ai}"),
                state: format!("q{s}"),
                actions: enabled[ai][s].iter().map(|&k| format!("m{k}")).collect(),
            });
        }
    }

    // Topology: uniform targets, or forward-layered with a looping last layer.
    let layered = rng.gen_bool(cfg.layered_fraction);
    let layer_count = (n as f64).sqrt().ceil() as usize;
    let layer = |s: usize| s * layer_count / n;
    let mut transitions = Vec::new();
    for s in 0..n {
        let mut joint = vec![0usize; m];
        let mut idx = vec![0usize; m];
        loop {
            for ai in 0..m {
                joint[ai] = enabled[ai][s][idx[ai]];
            }
            let to = if layered && layer_count > 1 {
                let next_layer = (layer(s) + 1).min(layer_count - 1);
                let lo = next_layer * n / layer_count;
                let hi = ((next_layer + 1) * n / layer_count).max(lo + 1).min(n);
                rng.gen_range(lo..hi)
            } else {
                rng.gen_range(0..n)
            };
            transitions.push(TransitionDoc {
                from: format!("q{s}"),
                action: joint.iter().map(|&k| format!("m{k}")).collect(),
                to: format!("q{to}"),
            });
            let mut ai = m;
            loop {
                if ai == 0 {
                    break;
                }
                ai -= 1;
                idx[ai] += 1;
                if idx[ai] < enabled[ai][s].len() {
                    break;
                }
                idx[ai] = 0;
            }
            if idx.iter().all(|&k| k == 0) {
                break;
            }
        }
    }

    let states: Vec<StateDoc> = (0..n)
        .map(|s| StateDoc {
            name: format!("q{s}"),
            labels: (0..cfg.atom_count)
                .filter(|_| rng.gen_bool(cfg.label_density))
                .map(|k| format!("p{k}"))
                .collect(),
        })
        .collect();

    ModelDoc {
        agents,
        states,
        initial: "q0".to_string(),
        protocol: protocol_docs,
        transitions,
        indistinguishable: indist_docs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use submc_core::icgs::AgentId;

    #[test]
    fn zero_pi_gives_identity_relations() {
        let cfg = GeneratorConfig {
            states: 5,
            pi_percent: 0,
            seed: 42,
            ..Default::default()
        };
        let m = random_icgs(&cfg);
        for a in 0..m.agent_count() {
            assert!(m.has_identity_indist(AgentId(a)));
        }
    }

    #[test]
    fn full_pi_gives_total_relations() {
        let cfg = GeneratorConfig {
            states: 5,
            pi_percent: 100,
            seed: 7,
            ..Default::default()
        };
        let m = random_icgs(&cfg);
        for a in 0..m.agent_count() {
            assert_eq!(m.indist_classes(AgentId(a)).len(), 1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig {
            states: 6,
            pi_percent: 40,
            seed: 123,
            ..Default::default()
        };
        let a = random_icgs(&cfg).to_json();
        let b = random_icgs(&cfg).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_models_validate_across_seeds() {
        for seed in 0..30 {
            let cfg = GeneratorConfig {
                states: 4 + (seed as usize % 5),
                pi_percent: (seed as u32 * 13) % 101,
                layered_fraction: 0.5,
                seed,
                ..Default::default()
            };
            let m = random_icgs(&cfg);
            assert!(m.revalidate().is_ok(), "seed {seed}");
        }
    }
}
