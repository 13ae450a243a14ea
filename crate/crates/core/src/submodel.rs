//! Preprocessing and the enumeration of candidate pairs of
//! perfect-information negative/positive sub-models.
//!
//! Preprocessing rewrites the formula into negation-free NNF, inventing a
//! fresh atom `n<p>` for every negated atom `p` and labelling the model so
//! that `n<p>` holds exactly where `p` does not. The enumeration then removes
//! states until no two distinct states are indistinguishable for an agent of
//! the formula's coalitions; every conflict-free core yields one negative and
//! one positive sub-model sharing that core.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::formula::{self, Formula};
use crate::icgs::{AgentId, Icgs, ModelError, StateId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubmodelError {
    #[error("initial state is not in the core")]
    InitialStateRemoved,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A preprocessed verification problem: negation-free NNF formula plus the
/// model extended with the complement atoms.
#[derive(Debug, Clone)]
pub struct PreprocessedProblem {
    pub model: Icgs,
    pub formula: Formula,
    /// Original negated atom -> fresh complement atom.
    pub atom_map: Vec<(String, String)>,
}

/// Rewrites `f` to negation-free NNF over `m`, extending the labelling with a
/// complement atom for every negated atom of the NNF.
pub fn preprocess(m: &Icgs, f: &Formula) -> PreprocessedProblem {
    let mut model = m.clone();
    let mut formula = formula::to_nnf(f);
    let mut atom_map = Vec::new();

    // Fresh names must avoid both the model's AP and atoms mentioned only in
    // the formula.
    let mut taken: HashSet<String> = model.atoms().iter().cloned().collect();
    taken.extend(formula.atoms());

    for p in formula::extract_negated_atoms(&formula) {
        let mut np = format!("n{p}");
        while taken.contains(&np) {
            np.push('_');
        }
        taken.insert(np.clone());

        formula = formula::replace_negated_atom(&formula, &p, &np);
        let np_idx = model.add_atom(&np);
        let p_idx = model.atom_index(&p);
        for s in model.states().collect::<Vec<_>>() {
            let holds = p_idx.is_some_and(|k| model.has_label(s, k));
            if !holds {
                model.add_label(s, np_idx);
            }
        }
        atom_map.push((p, np));
    }

    PreprocessedProblem {
        model,
        formula,
        atom_map,
    }
}

/// Whether a sub-model's sink absorbs with an empty or a full labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubModelKind {
    Negative,
    Positive,
}

/// A restriction of a model to a core state set plus one absorbing sink.
///
/// Transitions between core states are kept; transitions leaving the core are
/// redirected to the sink, which enables every action and self-loops on every
/// joint action. The negative sink carries no atoms, the positive sink all of
/// them.
#[derive(Debug, Clone)]
pub struct SubModel {
    pub model: Icgs,
    pub kind: SubModelKind,
    /// The sink state within `model`.
    pub sink: StateId,
    /// Core states as ids of the original model, ascending.
    pub core: Vec<StateId>,
    /// Original state id -> state id in `model` (core states only).
    to_sub: HashMap<usize, usize>,
}

impl SubModel {
    pub fn sub_state(&self, original: StateId) -> Option<StateId> {
        self.to_sub.get(&original.0).copied().map(StateId)
    }

    /// Labels a core state (addressed by its original id) with `atom`.
    pub fn add_core_label(&mut self, original: StateId, atom: &str) {
        let s = self.sub_state(original).expect("state not in core");
        self.model.add_label_named(s, atom);
    }

    pub fn add_sink_label(&mut self, atom: &str) {
        self.model.add_label_named(self.sink, atom);
    }
}

pub fn generate_negative(m: &Icgs, core: &[StateId]) -> Result<SubModel, SubmodelError> {
    generate(m, core, SubModelKind::Negative)
}

pub fn generate_positive(m: &Icgs, core: &[StateId]) -> Result<SubModel, SubmodelError> {
    generate(m, core, SubModelKind::Positive)
}

fn generate(m: &Icgs, core: &[StateId], kind: SubModelKind) -> Result<SubModel, SubmodelError> {
    let mut core: Vec<StateId> = core.to_vec();
    core.sort_unstable();
    core.dedup();
    if !core.contains(&m.initial_state()) {
        return Err(SubmodelError::InitialStateRemoved);
    }

    let in_core: HashSet<usize> = core.iter().map(|s| s.0).collect();
    let sink_base = match kind {
        SubModelKind::Negative => "s_bot",
        SubModelKind::Positive => "s_top",
    };
    let mut sink_name = sink_base.to_string();
    while core.iter().any(|&s| m.state_name(s) == sink_name) {
        sink_name.push('_');
    }

    let mut doc = crate::icgs::ModelDoc {
        agents: m
            .agents()
            .map(|a| crate::icgs::AgentDoc {
                name: m.agent_name(a).to_string(),
                actions: m.action_names(a).to_vec(),
            })
            .collect(),
        states: Vec::new(),
        initial: m.state_name(m.initial_state()).to_string(),
        protocol: Vec::new(),
        transitions: Vec::new(),
        indistinguishable: Vec::new(),
    };

    for &s in &core {
        doc.states.push(crate::icgs::StateDoc {
            name: m.state_name(s).to_string(),
            labels: m.label_names(s).iter().map(|s| s.to_string()).collect(),
        });
    }
    doc.states.push(crate::icgs::StateDoc {
        name: sink_name.clone(),
        labels: match kind {
            SubModelKind::Negative => Vec::new(),
            SubModelKind::Positive => m.atoms().to_vec(),
        },
    });

    for a in m.agents() {
        for &s in &core {
            doc.protocol.push(crate::icgs::ProtocolDoc {
                agent: m.agent_name(a).to_string(),
                state: m.state_name(s).to_string(),
                actions: m
                    .enabled_actions(a, s)
                    .iter()
                    .map(|&k| m.action_names(a)[k].clone())
                    .collect(),
            });
        }
        doc.protocol.push(crate::icgs::ProtocolDoc {
            agent: m.agent_name(a).to_string(),
            state: sink_name.clone(),
            actions: m.action_names(a).to_vec(),
        });
    }

    for &s in &core {
        for joint in m.enabled_joint_actions(s) {
            let to = m.successor(s, &joint);
            let to_name = if in_core.contains(&to.0) {
                m.state_name(to).to_string()
            } else {
                sink_name.clone()
            };
            doc.transitions.push(crate::icgs::TransitionDoc {
                from: m.state_name(s).to_string(),
                action: m.joint_action_names(&joint),
                to: to_name,
            });
        }
    }
    // The sink self-loops on every joint action.
    let mut sink_joint = vec![0usize; m.agent_count()];
    loop {
        doc.transitions.push(crate::icgs::TransitionDoc {
            from: sink_name.clone(),
            action: sink_joint
                .iter()
                .enumerate()
                .map(|(ai, &k)| m.action_names(AgentId(ai))[k].clone())
                .collect(),
            to: sink_name.clone(),
        });
        let mut ai = m.agent_count();
        loop {
            if ai == 0 {
                break;
            }
            ai -= 1;
            sink_joint[ai] += 1;
            if sink_joint[ai] < m.action_names(AgentId(ai)).len() {
                break;
            }
            sink_joint[ai] = 0;
        }
        if sink_joint.iter().all(|&k| k == 0) {
            break;
        }
    }

    // Indistinguishability restricted to the core; the sink is its own class.
    for a in m.agents() {
        for class in m.indist_classes(a) {
            let members: Vec<usize> = class.iter().copied().filter(|s| in_core.contains(s)).collect();
            for w in members.windows(2) {
                doc.indistinguishable.push(crate::icgs::IndistDoc {
                    agent: m.agent_name(a).to_string(),
                    states: vec![
                        m.state_name(StateId(w[0])).to_string(),
                        m.state_name(StateId(w[1])).to_string(),
                    ],
                });
            }
        }
    }

    let model = Icgs::from_doc(&doc)?;
    let sink = model.state_index(&sink_name)?;
    let to_sub = core
        .iter()
        .enumerate()
        .map(|(i, s)| (s.0, i))
        .collect::<HashMap<_, _>>();

    Ok(SubModel {
        model,
        kind,
        sink,
        core,
        to_sub,
    })
}

/// A matched negative/positive sub-model pair over one shared core.
#[derive(Debug, Clone)]
pub struct CandidatePair {
    pub neg: SubModel,
    pub pos: SubModel,
    /// Shared core, as original state ids, ascending.
    pub core: Vec<StateId>,
}

/// Enumerates candidate pairs: a worklist search from the full state set that,
/// whenever two distinct core states are indistinguishable for an agent of
/// the formula's coalitions, branches into the two cores dropping either
/// state. Conflict-free cores are emitted in discovery order; duplicate cores
/// are visited once and cores that lose the initial state are discarded.
pub fn find_submodels(m: &Icgs, f: &Formula) -> Result<Vec<CandidatePair>, ModelError> {
    let agents: Vec<AgentId> = formula::coalition_agents(f)
        .iter()
        .map(|name| m.agent_index(name))
        .collect::<Result<_, _>>()?;
    let pairs = m.indist_pairs(&agents);
    let full: Vec<usize> = (0..m.state_count()).collect();

    let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();

    queue.push_back(full.clone());
    seen.insert(full);

    while let Some(core) = queue.pop_front() {
        let contains = |s: StateId| core.binary_search(&s.0).is_ok();
        let conflict = pairs.iter().find(|&&(a, b)| contains(a) && contains(b));
        match conflict {
            Some(&(a, b)) => {
                for drop in [a, b] {
                    if drop == m.initial_state() {
                        log::debug!(
                            "discarding branch that would remove the initial state `{}`",
                            m.state_name(drop)
                        );
                        continue;
                    }
                    let mut next: Vec<usize> = core.iter().copied().filter(|&s| s != drop.0).collect();
                    next.shrink_to_fit();
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
            None => {
                let core_ids: Vec<StateId> = core.iter().map(|&s| StateId(s)).collect();
                let neg = generate_negative(m, &core_ids).expect("core retains the initial state");
                let pos = generate_positive(m, &core_ids).expect("core retains the initial state");
                out.push(CandidatePair {
                    neg,
                    pos,
                    core: core_ids,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn rover() -> Icgs {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/rover.json"
        ))
        .unwrap();
        Icgs::load(&text).unwrap()
    }

    fn phi1() -> Formula {
        parse("<<rover>> F ((oc & rm) & F ((pl | pr) & F (oc & rm)))").unwrap()
    }

    fn phi3() -> Formula {
        parse("<<rover,mechanic>> F (rp & !ip & <<rover>> F ((pl | pr) & F (oc & rm)))").unwrap()
    }

    fn names(m: &Icgs, states: &[StateId]) -> Vec<String> {
        states.iter().map(|&s| m.state_name(s).to_string()).collect()
    }

    #[test]
    fn preprocess_phi3_adds_nip_complement() {
        let m = rover();
        let pre = preprocess(&m, &phi3());
        assert_eq!(pre.atom_map, vec![("ip".to_string(), "nip".to_string())]);
        let nip = pre.model.atom_index("nip").unwrap();
        let labelled: Vec<&str> = pre
            .model
            .states()
            .filter(|&s| pre.model.has_label(s, nip))
            .map(|s| pre.model.state_name(s))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        assert_eq!(labelled.len(), 9);
        assert!(!labelled.contains(&"s6"));
        assert!(!labelled.contains(&"s7"));
        assert!(formula::extract_negated_atoms(&pre.formula).is_empty());
    }

    #[test]
    fn preprocess_negation_free_is_identity_on_model() {
        let m = rover();
        let pre = preprocess(&m, &phi1());
        assert_eq!(pre.model, m);
        assert!(pre.atom_map.is_empty());
    }

    #[test]
    fn preprocess_two_negated_atoms() {
        let m = rover();
        let f = parse("!sp & !cp").unwrap();
        let pre = preprocess(&m, &f);
        assert_eq!(pre.atom_map.len(), 2);
        assert!(pre.model.atom_index("nsp").is_some());
        assert!(pre.model.atom_index("ncp").is_some());
        assert_eq!(pre.formula, parse("nsp & ncp").unwrap());
    }

    #[test]
    fn negative_submodel_matches_figure_shape() {
        let m = rover();
        let core: Vec<StateId> = m
            .states()
            .filter(|&s| m.state_name(s) != "s1" && m.state_name(s) != "s3")
            .collect();
        let sub = generate_negative(&m, &core).unwrap();
        assert_eq!(sub.model.state_count(), 10);
        let sink = sub.sink;
        assert!(sub.model.label_indices(sink).is_empty());
        assert_eq!(sub.model.state_name(sink), "s_bot");

        // sI's (chk,ca) and (chk,cm) edges are redirected to the sink.
        let si = sub.model.state_index("sI").unwrap();
        for joint in sub.model.enabled_joint_actions(si) {
            let names = sub.model.joint_action_names(&joint);
            let to = sub.model.successor(si, &joint);
            match (names[0].as_str(), names[1].as_str()) {
                ("chk", "ca") | ("chk", "cm") => assert_eq!(to, sink),
                ("chk", "cw") => assert_eq!(sub.model.state_name(to), "s2"),
                _ => assert_eq!(sub.model.state_name(to), "sI"),
            }
        }

        // The sink enables everything and self-loops on every joint action.
        assert_eq!(sub.model.enabled_joint_actions(sink).len(), 30);
        for joint in sub.model.enabled_joint_actions(sink) {
            assert_eq!(sub.model.successor(sink, &joint), sink);
        }
        assert!(sub.model.revalidate().is_ok());
    }

    #[test]
    fn positive_submodel_sink_has_all_atoms() {
        let m = rover();
        let core: Vec<StateId> = m.states().collect();
        let sub = generate_positive(&m, &core).unwrap();
        let sink_labels = sub.model.label_indices(sub.sink);
        assert_eq!(sink_labels.len(), m.atoms().len());
        // With the full core nothing is redirected, so the sink is unreachable
        // from the initial state.
        let mut reachable = vec![false; sub.model.state_count()];
        let mut stack = vec![sub.model.initial_state()];
        reachable[sub.model.initial_state().0] = true;
        while let Some(s) = stack.pop() {
            for t in sub.model.successors(s) {
                if !reachable[t.0] {
                    reachable[t.0] = true;
                    stack.push(t);
                }
            }
        }
        assert!(!reachable[sub.sink.0]);
    }

    #[test]
    fn core_without_initial_is_rejected() {
        let m = rover();
        let core: Vec<StateId> = m.states().skip(1).collect();
        assert_eq!(
            generate_negative(&m, &core).unwrap_err(),
            SubmodelError::InitialStateRemoved
        );
        assert_eq!(
            generate_positive(&m, &core).unwrap_err(),
            SubmodelError::InitialStateRemoved
        );
    }

    #[test]
    fn rover_enumeration_finds_three_candidates() {
        let m = rover();
        let candidates = find_submodels(&m, &phi1()).unwrap();
        assert_eq!(candidates.len(), 3);
        let all: Vec<String> = m.states().map(|s| m.state_name(s).to_string()).collect();
        let expect_core = |dropped: [&str; 2]| -> Vec<String> {
            all.iter().filter(|n| !dropped.contains(&n.as_str())).cloned().collect()
        };
        assert_eq!(names(&m, &candidates[0].core), expect_core(["s1", "s2"]));
        assert_eq!(names(&m, &candidates[1].core), expect_core(["s1", "s3"]));
        assert_eq!(names(&m, &candidates[2].core), expect_core(["s2", "s3"]));
        for c in &candidates {
            assert_eq!(c.neg.core, c.pos.core);
            assert!(c.neg.model.revalidate().is_ok());
            assert!(c.pos.model.revalidate().is_ok());
        }
    }

    #[test]
    fn emitted_cores_are_conflict_free_and_tight() {
        let m = rover();
        let rover_id = m.agent_index("rover").unwrap();
        let candidates = find_submodels(&m, &phi1()).unwrap();
        for c in &candidates {
            for (i, &a) in c.core.iter().enumerate() {
                for &b in &c.core[i + 1..] {
                    assert!(!m.indistinguishable(rover_id, a, b) || a == b);
                }
            }
            // Exactly two of {s1,s2,s3} are excluded and nothing else.
            assert_eq!(c.core.len(), 9);
        }
    }

    #[test]
    fn identity_relations_yield_single_full_candidate() {
        let m = rover().with_identity_indist();
        let candidates = find_submodels(&m, &phi1()).unwrap();
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].core.len(), m.state_count());
    }

    #[test]
    fn empty_coalition_set_ignores_relations() {
        let m = rover();
        let f = parse("sp").unwrap();
        let candidates = find_submodels(&m, &f).unwrap();
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].core.len(), m.state_count());
    }
}
