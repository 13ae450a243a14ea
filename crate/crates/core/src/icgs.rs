//! In-memory representation, validation and traversal of concurrent game
//! structures with imperfect information.
//!
//! A model is loaded from a JSON document and validated against the structural
//! requirements: non-empty protocols, protocol uniformity across
//! indistinguishability classes, and a transition function that is total on
//! exactly the enabled joint actions. Indistinguishability is given as
//! unordered state pairs and canonicalized into per-agent partitions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an agent in the model's agent list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

/// Index of a state in the model's state list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// An action, identified by its owner agent and its index in that agent's
/// action alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId {
    pub agent: AgentId,
    pub index: usize,
}

/// One action per agent, in agent-index order.
pub type JointAction = Vec<usize>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("transition error: {0}")]
    Transition(String),
    #[error("name error: {0}")]
    Name(String),
}

// ---------------------------------------------------------------------------
// JSON document schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentDoc {
    pub name: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDoc {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolDoc {
    pub agent: String,
    pub state: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub from: String,
    pub action: Vec<String>,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndistDoc {
    pub agent: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub agents: Vec<AgentDoc>,
    pub states: Vec<StateDoc>,
    pub initial: String,
    pub protocol: Vec<ProtocolDoc>,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default)]
    pub indistinguishable: Vec<IndistDoc>,
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// A validated concurrent game structure with imperfect information.
///
/// Immutable after load apart from the atom/label extension used by the
/// verification pipeline on its own copies; all traversal operations are pure,
/// so a loaded model can be shared across parallel workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Icgs {
    agent_names: Vec<String>,
    /// Per agent, the action alphabet in file order.
    actions: Vec<Vec<String>>,
    state_names: Vec<String>,
    /// Atom names (AP) in first-occurrence order.
    atoms: Vec<String>,
    /// Per state, sorted atom indices.
    labels: Vec<Vec<usize>>,
    initial: StateId,
    /// `protocol[agent][state]` -> sorted action indices, non-empty.
    protocol: Vec<Vec<Vec<usize>>>,
    /// `transitions[state]` maps an encoded joint action to its successor.
    transitions: Vec<HashMap<u64, usize>>,
    /// Per agent: `class_of[agent][state]` -> class index.
    class_of: Vec<Vec<usize>>,
    /// Per agent: class index -> sorted member states.
    classes: Vec<Vec<Vec<usize>>>,
}

impl Icgs {
    /// Parses and validates a JSON model document.
    pub fn load(document: &str) -> Result<Icgs, ModelError> {
        let doc: ModelDoc =
            serde_json::from_str(document).map_err(|e| ModelError::Schema(e.to_string()))?;
        Icgs::from_doc(&doc)
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Icgs, ModelError> {
        if doc.agents.is_empty() {
            return Err(ModelError::Schema("at least one agent is required".into()));
        }
        if doc.states.is_empty() {
            return Err(ModelError::Schema("at least one state is required".into()));
        }

        let mut agent_index = HashMap::new();
        let mut actions = Vec::new();
        let mut action_index: Vec<HashMap<String, usize>> = Vec::new();
        for (i, agent) in doc.agents.iter().enumerate() {
            if agent.name.is_empty() {
                return Err(ModelError::Schema("agent name must be non-empty".into()));
            }
            if agent_index.insert(agent.name.clone(), i).is_some() {
                return Err(ModelError::Schema(format!("duplicate agent `{}`", agent.name)));
            }
            if agent.actions.is_empty() {
                return Err(ModelError::Schema(format!(
                    "agent `{}` has an empty action alphabet",
                    agent.name
                )));
            }
            let mut idx = HashMap::new();
            for (j, a) in agent.actions.iter().enumerate() {
                if idx.insert(a.clone(), j).is_some() {
                    return Err(ModelError::Schema(format!(
                        "duplicate action `{}` for agent `{}`",
                        a, agent.name
                    )));
                }
            }
            action_index.push(idx);
            actions.push(agent.actions.clone());
        }

        let mut state_index = HashMap::new();
        let mut atoms = Vec::new();
        let mut atom_index = HashMap::new();
        let mut labels = Vec::new();
        for (i, state) in doc.states.iter().enumerate() {
            if state_index.insert(state.name.clone(), i).is_some() {
                return Err(ModelError::Schema(format!("duplicate state `{}`", state.name)));
            }
            let mut lab = Vec::new();
            for atom in &state.labels {
                let k = *atom_index.entry(atom.clone()).or_insert_with(|| {
                    atoms.push(atom.clone());
                    atoms.len() - 1
                });
                if !lab.contains(&k) {
                    lab.push(k);
                }
            }
            lab.sort_unstable();
            labels.push(lab);
        }

        let initial = StateId(*state_index.get(&doc.initial).ok_or_else(|| {
            ModelError::Name(format!("unknown initial state `{}`", doc.initial))
        })?);

        let m = doc.agents.len();
        let n = doc.states.len();

        let mut protocol: Vec<Vec<Option<Vec<usize>>>> = vec![vec![None; n]; m];
        for entry in &doc.protocol {
            let &ai = agent_index
                .get(&entry.agent)
                .ok_or_else(|| ModelError::Name(format!("unknown agent `{}` in protocol", entry.agent)))?;
            let &si = state_index
                .get(&entry.state)
                .ok_or_else(|| ModelError::Name(format!("unknown state `{}` in protocol", entry.state)))?;
            if protocol[ai][si].is_some() {
                return Err(ModelError::Schema(format!(
                    "duplicate protocol entry for agent `{}` at state `{}`",
                    entry.agent, entry.state
                )));
            }
            let mut acts = Vec::new();
            for a in &entry.actions {
                let &k = action_index[ai].get(a).ok_or_else(|| {
                    ModelError::Name(format!(
                        "action `{}` is not in the alphabet of agent `{}`",
                        a, entry.agent
                    ))
                })?;
                if !acts.contains(&k) {
                    acts.push(k);
                }
            }
            acts.sort_unstable();
            protocol[ai][si] = Some(acts);
        }
        let mut proto = Vec::with_capacity(m);
        for (ai, rows) in protocol.into_iter().enumerate() {
            let mut per_agent = Vec::with_capacity(n);
            for (si, row) in rows.into_iter().enumerate() {
                let acts = row.unwrap_or_default();
                if acts.is_empty() {
                    return Err(ModelError::Protocol(format!(
                        "agent `{}` has no enabled action at state `{}`",
                        doc.agents[ai].name, doc.states[si].name
                    )));
                }
                per_agent.push(acts);
            }
            proto.push(per_agent);
        }

        // Canonicalize the indistinguishability pairs into partitions.
        let mut class_of = Vec::with_capacity(m);
        let mut classes = Vec::with_capacity(m);
        for ai in 0..m {
            let mut uf = UnionFind::new(n);
            for entry in doc.indistinguishable.iter().filter(|e| e.agent == doc.agents[ai].name) {
                if entry.states.len() != 2 {
                    return Err(ModelError::Schema(
                        "indistinguishable entry must name exactly two states".into(),
                    ));
                }
                let &a = state_index.get(&entry.states[0]).ok_or_else(|| {
                    ModelError::Name(format!("unknown state `{}` in indistinguishable", entry.states[0]))
                })?;
                let &b = state_index.get(&entry.states[1]).ok_or_else(|| {
                    ModelError::Name(format!("unknown state `{}` in indistinguishable", entry.states[1]))
                })?;
                uf.union(a, b);
            }
            let (co, cl) = uf.into_partition();
            class_of.push(co);
            classes.push(cl);
        }
        for entry in &doc.indistinguishable {
            if !agent_index.contains_key(&entry.agent) {
                return Err(ModelError::Name(format!(
                    "unknown agent `{}` in indistinguishable",
                    entry.agent
                )));
            }
        }

        // Protocol uniformity across each indistinguishability class.
        for ai in 0..m {
            for class in &classes[ai] {
                let first = &proto[ai][class[0]];
                for &s in &class[1..] {
                    if &proto[ai][s] != first {
                        return Err(ModelError::Protocol(format!(
                            "agent `{}` has different protocols at indistinguishable states `{}` and `{}`",
                            doc.agents[ai].name, doc.states[class[0]].name, doc.states[s].name
                        )));
                    }
                }
            }
        }

        let mut model = Icgs {
            agent_names: doc.agents.iter().map(|a| a.name.clone()).collect(),
            actions,
            state_names: doc.states.iter().map(|s| s.name.clone()).collect(),
            atoms,
            labels,
            initial,
            protocol: proto,
            transitions: vec![HashMap::new(); n],
            class_of,
            classes,
        };

        for entry in &doc.transitions {
            let &from = state_index
                .get(&entry.from)
                .ok_or_else(|| ModelError::Name(format!("unknown state `{}` in transition", entry.from)))?;
            let &to = state_index
                .get(&entry.to)
                .ok_or_else(|| ModelError::Name(format!("unknown state `{}` in transition", entry.to)))?;
            if entry.action.len() != m {
                return Err(ModelError::Transition(format!(
                    "transition from `{}` has {} actions for {} agents",
                    entry.from,
                    entry.action.len(),
                    m
                )));
            }
            let mut joint = Vec::with_capacity(m);
            for (ai, a) in entry.action.iter().enumerate() {
                let &k = action_index[ai].get(a).ok_or_else(|| {
                    ModelError::Name(format!(
                        "action `{}` is not in the alphabet of agent `{}`",
                        a, model.agent_names[ai]
                    ))
                })?;
                if !model.protocol[ai][from].contains(&k) {
                    return Err(ModelError::Transition(format!(
                        "transition from `{}` uses action `{}` disabled for agent `{}`",
                        entry.from, a, model.agent_names[ai]
                    )));
                }
                joint.push(k);
            }
            let key = model.encode_joint(&joint);
            if model.transitions[from].insert(key, to).is_some() {
                return Err(ModelError::Transition(format!(
                    "duplicate transition from `{}` on ({})",
                    entry.from,
                    entry.action.join(",")
                )));
            }
        }

        // The transition function must be total on the enabled joint actions.
        for s in 0..n {
            let expected: usize = (0..m).map(|ai| model.protocol[ai][s].len()).product();
            if model.transitions[s].len() != expected {
                let missing = model
                    .enabled_joint_actions(StateId(s))
                    .into_iter()
                    .find(|j| !model.transitions[s].contains_key(&model.encode_joint(j)))
                    .map(|j| model.joint_action_names(&j).join(","))
                    .unwrap_or_default();
                return Err(ModelError::Transition(format!(
                    "state `{}` is missing a transition for enabled joint action ({missing})",
                    model.state_names[s]
                )));
            }
        }

        Ok(model)
    }

    /// Serializes back to the JSON document schema. Loading the result yields
    /// a model equal to this one.
    pub fn to_doc(&self) -> ModelDoc {
        let mut indist = Vec::new();
        for (ai, classes) in self.classes.iter().enumerate() {
            for class in classes {
                for w in class.windows(2) {
                    indist.push(IndistDoc {
                        agent: self.agent_names[ai].clone(),
                        states: vec![self.state_names[w[0]].clone(), self.state_names[w[1]].clone()],
                    });
                }
            }
        }
        let mut transitions = Vec::new();
        for s in 0..self.state_names.len() {
            for joint in self.enabled_joint_actions(StateId(s)) {
                let to = self.successor(StateId(s), &joint);
                transitions.push(TransitionDoc {
                    from: self.state_names[s].clone(),
                    action: self.joint_action_names(&joint),
                    to: self.state_names[to.0].clone(),
                });
            }
        }
        ModelDoc {
            agents: self
                .agent_names
                .iter()
                .zip(&self.actions)
                .map(|(name, actions)| AgentDoc {
                    name: name.clone(),
                    actions: actions.clone(),
                })
                .collect(),
            states: self
                .state_names
                .iter()
                .zip(&self.labels)
                .map(|(name, labels)| StateDoc {
                    name: name.clone(),
                    labels: labels.iter().map(|&k| self.atoms[k].clone()).collect(),
                })
                .collect(),
            initial: self.state_names[self.initial.0].clone(),
            protocol: (0..self.agent_names.len())
                .flat_map(|ai| {
                    (0..self.state_names.len()).map(move |si| (ai, si))
                })
                .map(|(ai, si)| ProtocolDoc {
                    agent: self.agent_names[ai].clone(),
                    state: self.state_names[si].clone(),
                    actions: self.protocol[ai][si]
                        .iter()
                        .map(|&k| self.actions[ai][k].clone())
                        .collect(),
                })
                .collect(),
            transitions,
            indistinguishable: indist,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model serialization cannot fail")
    }

    // -- accessors ----------------------------------------------------------

    pub fn agent_count(&self) -> usize {
        self.agent_names.len()
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agent_names[a.0]
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.0]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_names.len()).map(StateId)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agent_names.len()).map(AgentId)
    }

    pub fn agent_index(&self, name: &str) -> Result<AgentId, ModelError> {
        self.agent_names
            .iter()
            .position(|n| n == name)
            .map(AgentId)
            .ok_or_else(|| ModelError::Name(format!("unknown agent `{name}`")))
    }

    pub fn state_index(&self, name: &str) -> Result<StateId, ModelError> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(StateId)
            .ok_or_else(|| ModelError::Name(format!("unknown state `{name}`")))
    }

    /// Atom names in AP order.
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }

    pub fn action_names(&self, a: AgentId) -> &[String] {
        &self.actions[a.0]
    }

    /// Sorted atom indices labelling `s`.
    pub fn label_indices(&self, s: StateId) -> &[usize] {
        &self.labels[s.0]
    }

    pub fn has_label(&self, s: StateId, atom: usize) -> bool {
        self.labels[s.0].binary_search(&atom).is_ok()
    }

    pub fn has_label_named(&self, s: StateId, atom: &str) -> bool {
        self.atom_index(atom).is_some_and(|k| self.has_label(s, k))
    }

    pub fn label_names(&self, s: StateId) -> Vec<&str> {
        self.labels[s.0].iter().map(|&k| self.atoms[k].as_str()).collect()
    }

    /// Enabled actions of `agent` at `state`, as indices into its alphabet.
    pub fn enabled_actions(&self, agent: AgentId, state: StateId) -> &[usize] {
        &self.protocol[agent.0][state.0]
    }

    /// All enabled joint actions at `s`, in lexicographic agent-index order.
    pub fn enabled_joint_actions(&self, s: StateId) -> Vec<JointAction> {
        let m = self.agent_count();
        let mut out = Vec::new();
        let mut current = vec![0usize; m];
        self.product_rec(s, 0, &mut current, &mut out);
        out
    }

    fn product_rec(&self, s: StateId, agent: usize, current: &mut Vec<usize>, out: &mut Vec<JointAction>) {
        if agent == self.agent_count() {
            out.push(current.clone());
            return;
        }
        for &a in &self.protocol[agent][s.0] {
            current[agent] = a;
            self.product_rec(s, agent + 1, current, out);
        }
    }

    /// Successor under an enabled joint action. Panics if the joint action is
    /// not enabled, which validation rules out for loaded models.
    pub fn successor(&self, s: StateId, joint: &JointAction) -> StateId {
        let key = self.encode_joint(joint);
        StateId(self.transitions[s.0][&key])
    }

    /// Distinct successors of `s` over all enabled joint actions, sorted.
    pub fn successors(&self, s: StateId) -> Vec<StateId> {
        let mut out: Vec<usize> = self.transitions[s.0].values().copied().collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter().map(StateId).collect()
    }

    pub fn joint_action_names(&self, joint: &JointAction) -> Vec<String> {
        joint
            .iter()
            .enumerate()
            .map(|(ai, &k)| self.actions[ai][k].clone())
            .collect()
    }

    fn encode_joint(&self, joint: &JointAction) -> u64 {
        let mut key: u64 = 0;
        for (ai, &a) in joint.iter().enumerate() {
            key = key * self.actions[ai].len() as u64 + a as u64;
        }
        key
    }

    /// The indistinguishability class of `s` for `agent` (sorted members).
    pub fn indist_class(&self, agent: AgentId, s: StateId) -> &[usize] {
        &self.classes[agent.0][self.class_of[agent.0][s.0]]
    }

    pub fn indist_classes(&self, agent: AgentId) -> &[Vec<usize>] {
        &self.classes[agent.0]
    }

    pub fn indistinguishable(&self, agent: AgentId, a: StateId, b: StateId) -> bool {
        self.class_of[agent.0][a.0] == self.class_of[agent.0][b.0]
    }

    /// True when `agent`'s relation is the identity.
    pub fn has_identity_indist(&self, agent: AgentId) -> bool {
        self.classes[agent.0].iter().all(|c| c.len() == 1)
    }

    /// All unordered pairs of distinct states indistinguishable for some agent
    /// in `agents`, sorted lexicographically by state indices.
    pub fn indist_pairs(&self, agents: &[AgentId]) -> Vec<(StateId, StateId)> {
        let mut pairs = Vec::new();
        for &agent in agents {
            for class in &self.classes[agent.0] {
                for i in 0..class.len() {
                    for j in i + 1..class.len() {
                        pairs.push((StateId(class[i]), StateId(class[j])));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    // -- construction and extension ----------------------------------------

    /// Adds an atom (if absent) and returns its index.
    pub fn add_atom(&mut self, name: &str) -> usize {
        if let Some(k) = self.atom_index(name) {
            return k;
        }
        self.atoms.push(name.to_string());
        self.atoms.len() - 1
    }

    pub fn add_label(&mut self, s: StateId, atom: usize) {
        if let Err(pos) = self.labels[s.0].binary_search(&atom) {
            self.labels[s.0].insert(pos, atom);
        }
    }

    pub fn add_label_named(&mut self, s: StateId, atom: &str) {
        let k = self.add_atom(atom);
        self.add_label(s, k);
    }

    /// A copy with every agent's indistinguishability relation replaced by the
    /// identity (perfect information).
    pub fn with_identity_indist(&self) -> Icgs {
        let n = self.state_count();
        let mut copy = self.clone();
        for ai in 0..self.agent_count() {
            copy.class_of[ai] = (0..n).collect();
            copy.classes[ai] = (0..n).map(|s| vec![s]).collect();
        }
        copy
    }

    /// Re-runs the loader validation on the serialized form. Used by tests and
    /// by the sub-model constructors to guarantee they produce valid models.
    pub fn revalidate(&self) -> Result<(), ModelError> {
        Icgs::from_doc(&self.to_doc()).map(|_| ())
    }
}

// ---------------------------------------------------------------------------
// Histories and lassos
// ---------------------------------------------------------------------------

/// A finitely-represented ultimately periodic path: `prefix . cycle^omega`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

impl Lasso {
    pub fn new(prefix: Vec<StateId>, cycle: Vec<StateId>) -> Lasso {
        assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
        Lasso { prefix, cycle }
    }

    /// Number of stored positions (prefix plus one cycle iteration).
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    /// State at position `i` (0-based) of the induced infinite path.
    pub fn at(&self, i: usize) -> StateId {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Checks that consecutive states (including the cycle wrap) are related
    /// by some enabled joint action of `m`.
    pub fn is_path_of(&self, m: &Icgs) -> bool {
        let states: Vec<StateId> = self.prefix.iter().chain(&self.cycle).copied().collect();
        for w in states.windows(2) {
            if !m.successors(w[0]).contains(&w[1]) {
                return false;
            }
        }
        let last = *self.cycle.last().unwrap();
        m.successors(last).contains(&self.cycle[0])
    }
}

// ---------------------------------------------------------------------------
// Union-find used to canonicalize indistinguishability input
// ---------------------------------------------------------------------------

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Returns (class_of, classes) with classes ordered by their smallest
    /// member and members sorted.
    fn into_partition(mut self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let n = self.parent.len();
        let mut root_to_class: HashMap<usize, usize> = HashMap::new();
        let mut class_of = vec![0; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            let c = *root_to_class.entry(r).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            class_of[x] = c;
            classes[c].push(x);
        }
        (class_of, classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "agents": [{"name": "a", "actions": ["go"]}],
        "states": [{"name": "s", "labels": ["p"]}],
        "initial": "s",
        "protocol": [{"agent": "a", "state": "s", "actions": ["go"]}],
        "transitions": [{"from": "s", "action": ["go"], "to": "s"}],
        "indistinguishable": []
    }"#;

    fn rover() -> Icgs {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/rover.json"
        ))
        .unwrap();
        Icgs::load(&text).unwrap()
    }

    #[test]
    fn loads_rover_fixture() {
        let m = rover();
        assert_eq!(m.state_count(), 11);
        assert_eq!(m.agent_count(), 2);
        assert_eq!(m.atoms().len(), 8);
        assert_eq!(m.state_name(m.initial_state()), "sI");
    }

    #[test]
    fn loads_minimal_model() {
        let m = Icgs::load(MINIMAL).unwrap();
        assert_eq!(m.state_count(), 1);
        assert_eq!(m.enabled_joint_actions(StateId(0)), vec![vec![0]]);
    }

    #[test]
    fn rejects_non_uniform_protocol() {
        let m = rover();
        let mut doc = m.to_doc();
        // Give the rover an extra action at s1 only; s1 ~ s2 for the rover.
        for entry in &mut doc.protocol {
            if entry.agent == "rover" && entry.state == "s1" {
                entry.actions.push("chk".into());
            }
        }
        let err = Icgs::from_doc(&doc).unwrap_err();
        assert!(matches!(err, ModelError::Protocol(_)), "got {err:?}");
    }

    #[test]
    fn rejects_missing_transition() {
        let m = rover();
        let mut doc = m.to_doc();
        doc.transitions.retain(|t| !(t.from == "s4" && t.action == vec!["L", "i"]));
        let err = Icgs::from_doc(&doc).unwrap_err();
        assert!(matches!(err, ModelError::Transition(_)), "got {err:?}");
    }

    #[test]
    fn rejects_disabled_transition() {
        let m = rover();
        let mut doc = m.to_doc();
        doc.transitions.push(TransitionDoc {
            from: "s4".into(),
            action: vec!["chk".into(), "i".into()],
            to: "s4".into(),
        });
        let err = Icgs::from_doc(&doc).unwrap_err();
        assert!(matches!(err, ModelError::Transition(_)), "got {err:?}");
    }

    #[test]
    fn rejects_unknown_names() {
        let m = rover();
        let mut doc = m.to_doc();
        doc.initial = "nowhere".into();
        assert!(matches!(Icgs::from_doc(&doc), Err(ModelError::Name(_))));
    }

    #[test]
    fn rejects_empty_protocol() {
        let mut doc = Icgs::load(MINIMAL).unwrap().to_doc();
        doc.protocol.clear();
        doc.transitions.clear();
        assert!(matches!(Icgs::from_doc(&doc), Err(ModelError::Protocol(_))));
    }

    #[test]
    fn enabled_joint_actions_at_s4() {
        let m = rover();
        let s4 = m.state_index("s4").unwrap();
        let got: Vec<Vec<String>> = m
            .enabled_joint_actions(s4)
            .iter()
            .map(|j| m.joint_action_names(j))
            .collect();
        let want = vec![vec!["L", "i"], vec!["R", "i"], vec!["i", "i"]];
        let want: Vec<Vec<String>> = want
            .into_iter()
            .map(|v| v.into_iter().map(String::from).collect())
            .collect();
        assert_eq!(got.len(), 3);
        for w in &want {
            assert!(got.contains(w), "missing {w:?}");
        }
    }

    #[test]
    fn enabled_joint_actions_at_initial() {
        let m = rover();
        let si = m.initial_state();
        let got: Vec<Vec<String>> = m
            .enabled_joint_actions(si)
            .iter()
            .map(|j| m.joint_action_names(j))
            .collect();
        assert_eq!(got.len(), 6);
        for (a, b) in [
            ("chk", "ca"),
            ("chk", "cm"),
            ("chk", "cw"),
            ("i", "ca"),
            ("i", "cm"),
            ("i", "cw"),
        ] {
            assert!(got.contains(&vec![a.to_string(), b.to_string()]), "missing ({a},{b})");
        }
    }

    #[test]
    fn indist_pairs_examples() {
        let m = rover();
        let rover_id = m.agent_index("rover").unwrap();
        let mech_id = m.agent_index("mechanic").unwrap();
        let s = |name: &str| m.state_index(name).unwrap();
        assert_eq!(
            m.indist_pairs(&[rover_id]),
            vec![(s("s1"), s("s2")), (s("s1"), s("s3")), (s("s2"), s("s3"))]
        );
        assert!(m.indist_pairs(&[mech_id]).is_empty());
        assert!(m.indist_pairs(&[]).is_empty());
    }

    #[test]
    fn partition_closes_pairs_transitively() {
        let m = rover();
        let rover_id = m.agent_index("rover").unwrap();
        let class = m.indist_class(rover_id, m.state_index("s1").unwrap());
        assert_eq!(class.len(), 3);
    }

    #[test]
    fn round_trip_preserves_model() {
        let m = rover();
        let again = Icgs::load(&m.to_json()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn serialization_is_deterministic() {
        let m = rover();
        assert_eq!(m.to_json(), m.to_json());
    }

    #[test]
    fn successor_lookup_matches_fixture() {
        let m = rover();
        let s4 = m.state_index("s4").unwrap();
        let joint = m.enabled_joint_actions(s4);
        for j in joint {
            let names = m.joint_action_names(&j);
            let to = m.successor(s4, &j);
            match (names[0].as_str(), names[1].as_str()) {
                ("L", "i") => assert_eq!(m.state_name(to), "s6"),
                ("R", "i") => assert_eq!(m.state_name(to), "s7"),
                ("i", "i") => assert_eq!(m.state_name(to), "s4"),
                other => panic!("unexpected joint action {other:?}"),
            }
        }
    }

    #[test]
    fn identity_indist_copy() {
        let m = rover().with_identity_indist();
        let rover_id = m.agent_index("rover").unwrap();
        assert!(m.has_identity_indist(rover_id));
        assert!(m.revalidate().is_ok());
    }
}
