//! Deciding strategic formulas with one strategic operator under perfect
//! information and perfect recall.
//!
//! The ATL fragment (a single `X`/`U`/`R` over boolean arguments) is solved by
//! state fixpoints over the controllable predecessor. Syntactic co-safety and
//! safety bodies are compiled to deterministic reach/safe automata by formula
//! derivatives and solved as reachability or safety games on the product of
//! the model with the automaton; positional product strategies are exact for
//! these objectives, so the answer coincides with the perfect-recall one.
//!
//! `<<G>>` is solved with the existential-then-universal predecessor; the dual
//! `[[G]]` swaps the quantifiers (for every coalition profile some completion
//! stays winning), which is the exact complement without formula negation.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::formula::Formula;
use crate::icgs::{AgentId, Icgs, ModelError, StateId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("unsupported path formula `{0}`")]
    Unsupported(String),
    #[error("coalition agent `{0}` has imperfect information in this model")]
    ImperfectInformation(String),
    #[error("expected a strategic operator at the root of the formula")]
    NotStrategic,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The two strategic quantifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategicKind {
    /// `<<G>>` — some coalition strategy works against all completions.
    Exists,
    /// `[[G]]` — against every coalition strategy some completion works.
    ForAll,
}

/// Syntactic class of a path formula body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathClass {
    /// One `X`/`U`/`R` (or `F`/`G`) over boolean arguments.
    AtlFragment,
    /// NNF built from literals with `X`, `F`, `U`, `&`, `|` only.
    CoSafety,
    /// NNF built from literals with `X`, `G`, `R`, `&`, `|` only.
    Safety,
    Unsupported,
}

/// Classifies the body of a strategic operator. State sub-formulas must
/// already be atoms or boolean combinations.
pub fn classify_path_formula(body: &Formula) -> PathClass {
    if is_atl_fragment(body) {
        PathClass::AtlFragment
    } else if is_cosafety(body) {
        PathClass::CoSafety
    } else if is_safety(body) {
        PathClass::Safety
    } else {
        PathClass::Unsupported
    }
}

fn is_atl_fragment(body: &Formula) -> bool {
    match body {
        Formula::Next(x) | Formula::Finally(x) | Formula::Globally(x) => x.is_boolean(),
        Formula::Until(a, b) | Formula::Release(a, b) => a.is_boolean() && b.is_boolean(),
        _ => false,
    }
}

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => true,
        Formula::Not(x) => matches!(x.as_ref(), Formula::Atom(_)),
        _ => false,
    }
}

fn is_cosafety(f: &Formula) -> bool {
    if is_literal(f) {
        return true;
    }
    match f {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) => is_cosafety(a) && is_cosafety(b),
        Formula::Next(x) | Formula::Finally(x) => is_cosafety(x),
        _ => false,
    }
}

fn is_safety(f: &Formula) -> bool {
    if is_literal(f) {
        return true;
    }
    match f {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Release(a, b) => is_safety(a) && is_safety(b),
        Formula::Next(x) | Formula::Globally(x) => is_safety(x),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Predecessor operators and state fixpoints
// ---------------------------------------------------------------------------

/// Enabled joint actions of each state grouped by the coalition's share:
/// `groups[s]` holds, per coalition action profile (lexicographic order), the
/// distinct successor states any completion can reach.
struct CoalitionMoves {
    groups: Vec<Vec<Vec<usize>>>,
}

fn coalition_moves(m: &Icgs, coalition: &[AgentId]) -> CoalitionMoves {
    let mut coal: Vec<usize> = coalition.iter().map(|a| a.0).collect();
    coal.sort_unstable();
    coal.dedup();
    let mut groups = Vec::with_capacity(m.state_count());
    for s in m.states() {
        let mut by_profile: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for joint in m.enabled_joint_actions(s) {
            let profile: Vec<usize> = coal.iter().map(|&ai| joint[ai]).collect();
            let succ = m.successor(s, &joint).0;
            let entry = by_profile.entry(profile).or_default();
            if !entry.contains(&succ) {
                entry.push(succ);
            }
        }
        groups.push(by_profile.into_values().collect());
    }
    CoalitionMoves { groups }
}

impl CoalitionMoves {
    /// One-step forcing: for `Exists`, some coalition profile sends every
    /// completion into `target`; for `ForAll`, every profile admits some
    /// completion into `target`.
    fn pre(&self, kind: StrategicKind, s: usize, target: &[bool]) -> bool {
        match kind {
            StrategicKind::Exists => self.groups[s].iter().any(|g| g.iter().all(|&t| target[t])),
            StrategicKind::ForAll => self.groups[s].iter().all(|g| g.iter().any(|&t| target[t])),
        }
    }
}

/// States from which the coalition can force the successor into `target`
/// regardless of the other agents' choices.
pub fn controllable_pre(m: &Icgs, coalition: &[AgentId], target: &[StateId]) -> Vec<StateId> {
    let moves = coalition_moves(m, coalition);
    let mut t = vec![false; m.state_count()];
    for &s in target {
        t[s.0] = true;
    }
    (0..m.state_count())
        .filter(|&s| moves.pre(StrategicKind::Exists, s, &t))
        .map(StateId)
        .collect()
}

fn eval_boolean(m: &Icgs, f: &Formula, s: StateId) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(name) => m.has_label_named(s, name),
        Formula::Not(x) => !eval_boolean(m, x, s),
        Formula::And(a, b) => eval_boolean(m, a, s) && eval_boolean(m, b, s),
        Formula::Or(a, b) => eval_boolean(m, a, s) || eval_boolean(m, b, s),
        _ => unreachable!("boolean evaluation on a temporal formula"),
    }
}

fn boolean_set(m: &Icgs, f: &Formula) -> Vec<bool> {
    m.states().map(|s| eval_boolean(m, f, s)).collect()
}

/// Exact satisfaction set for a single strategic operator whose body is in
/// the ATL fragment, by the standard fixpoint characterizations.
pub fn check_atl_fragment(
    m: &Icgs,
    kind: StrategicKind,
    coalition: &[AgentId],
    body: &Formula,
) -> Result<Vec<StateId>, GameError> {
    let moves = coalition_moves(m, coalition);
    let n = m.state_count();
    let result: Vec<bool> = match body {
        Formula::Next(x) if x.is_boolean() => {
            let target = boolean_set(m, x);
            (0..n).map(|s| moves.pre(kind, s, &target)).collect()
        }
        Formula::Finally(x) if x.is_boolean() => until_fixpoint(&moves, kind, &vec![true; n], &boolean_set(m, x)),
        Formula::Globally(x) if x.is_boolean() => {
            release_fixpoint(&moves, kind, &vec![false; n], &boolean_set(m, x))
        }
        Formula::Until(a, b) if a.is_boolean() && b.is_boolean() => {
            until_fixpoint(&moves, kind, &boolean_set(m, a), &boolean_set(m, b))
        }
        Formula::Release(a, b) if a.is_boolean() && b.is_boolean() => {
            release_fixpoint(&moves, kind, &boolean_set(m, a), &boolean_set(m, b))
        }
        _ => return Err(GameError::Unsupported(body.to_string())),
    };
    Ok(result
        .into_iter()
        .enumerate()
        .filter_map(|(s, win)| win.then_some(StateId(s)))
        .collect())
}

/// Least fixpoint `Z = b \/ (a /\ Pre(Z))`.
fn until_fixpoint(moves: &CoalitionMoves, kind: StrategicKind, a: &[bool], b: &[bool]) -> Vec<bool> {
    let n = a.len();
    let mut z = b.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !z[s] && a[s] && moves.pre(kind, s, &z) {
                z[s] = true;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// Greatest fixpoint `Z = b /\ (a \/ Pre(Z))`.
fn release_fixpoint(moves: &CoalitionMoves, kind: StrategicKind, a: &[bool], b: &[bool]) -> Vec<bool> {
    let n = a.len();
    let mut z = b.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if z[s] && !a[s] && !moves.pre(kind, s, &z) {
                z[s] = false;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

// ---------------------------------------------------------------------------
// Objective automata via formula derivatives
// ---------------------------------------------------------------------------

/// Acceptance discipline of an [`ObjectiveAutomaton`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceKind {
    /// Co-safety: accept once the `true` residual is reached.
    Reach,
    /// Safety: accept while the `false` residual is avoided.
    Safe,
}

/// A deterministic automaton over atom-set letters whose states are canonical
/// formula residuals. Transitions are evaluated symbolically on each concrete
/// letter, so the alphabet is never enumerated; states are interned on demand.
#[derive(Debug, Clone)]
pub struct ObjectiveAutomaton {
    pub kind: AcceptanceKind,
    states: Vec<Formula>,
    index: HashMap<Formula, usize>,
    pub init: usize,
}

/// Builds the reach (co-safety) or safe (safety) automaton for a path formula
/// in the corresponding syntactic fragment. `F`/`G` sugar is expanded to
/// `U`/`R` here.
pub fn ltl_to_dfa(body: &Formula, kind: AcceptanceKind) -> Result<ObjectiveAutomaton, GameError> {
    let ok = match kind {
        AcceptanceKind::Reach => is_cosafety(body),
        AcceptanceKind::Safe => is_safety(body),
    };
    if !ok {
        return Err(GameError::Unsupported(body.to_string()));
    }
    let init_formula = canonical(&crate::formula::expand_sugar(body));
    let mut aut = ObjectiveAutomaton {
        kind,
        states: Vec::new(),
        index: HashMap::new(),
        init: 0,
    };
    aut.init = aut.intern(init_formula);
    Ok(aut)
}

impl ObjectiveAutomaton {
    fn intern(&mut self, f: Formula) -> usize {
        if let Some(&q) = self.index.get(&f) {
            return q;
        }
        self.states.push(f.clone());
        self.index.insert(f, self.states.len() - 1);
        self.states.len() - 1
    }

    /// Successor state after reading one letter, given as a predicate over
    /// atom names.
    pub fn step(&mut self, q: usize, holds: &dyn Fn(&str) -> bool) -> usize {
        let d = derivative(&self.states[q].clone(), holds);
        self.intern(d)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.states[q] == Formula::True
    }

    pub fn is_trap(&self, q: usize) -> bool {
        self.states[q] == Formula::False
    }

    /// Whether the infinite word `prefix . cycle^omega` is in the language.
    /// Letters are atom sets. Used by tests and oracles.
    pub fn accepts_word_lasso(&mut self, prefix: &[HashSet<String>], cycle: &[HashSet<String>]) -> bool {
        assert!(!cycle.is_empty());
        let mut q = self.init;
        let feed = |q: usize, letter: &HashSet<String>, aut: &mut ObjectiveAutomaton| {
            aut.step(q, &|a: &str| letter.contains(a))
        };
        let mut seen_at_cycle_start = HashSet::new();
        for letter in prefix {
            q = feed(q, letter, self);
        }
        loop {
            match self.kind {
                AcceptanceKind::Reach => {
                    if self.is_accepting(q) {
                        return true;
                    }
                }
                AcceptanceKind::Safe => {
                    if self.is_trap(q) {
                        return false;
                    }
                }
            }
            if !seen_at_cycle_start.insert(q) {
                // The automaton state recurs at the cycle head: the run is
                // periodic from here on.
                return matches!(self.kind, AcceptanceKind::Safe);
            }
            for letter in cycle {
                q = feed(q, letter, self);
                match self.kind {
                    AcceptanceKind::Reach => {
                        if self.is_accepting(q) {
                            return true;
                        }
                    }
                    AcceptanceKind::Safe => {
                        if self.is_trap(q) {
                            return false;
                        }
                    }
                }
            }
        }
    }
}

/// Rebuilds a formula with flattened, sorted, constant-absorbed `And`/`Or`
/// chains so residuals have one canonical representative.
fn canonical(f: &Formula) -> Formula {
    match f {
        Formula::And(..) => {
            let mut parts = Vec::new();
            collect_and(f, &mut parts);
            mk_and(parts.iter().map(canonical).collect())
        }
        Formula::Or(..) => {
            let mut parts = Vec::new();
            collect_or(f, &mut parts);
            mk_or(parts.iter().map(canonical).collect())
        }
        Formula::Not(x) => canonical(x).not(),
        Formula::Next(x) => canonical(x).next(),
        Formula::Until(a, b) => canonical(a).until(canonical(b)),
        Formula::Release(a, b) => canonical(a).release(canonical(b)),
        _ => f.clone(),
    }
}

fn collect_and(f: &Formula, out: &mut Vec<Formula>) {
    if let Formula::And(a, b) = f {
        collect_and(a, out);
        collect_and(b, out);
    } else {
        out.push(f.clone());
    }
}

fn collect_or(f: &Formula, out: &mut Vec<Formula>) {
    if let Formula::Or(a, b) = f {
        collect_or(a, out);
        collect_or(b, out);
    } else {
        out.push(f.clone());
    }
}

fn mk_and(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for p in parts {
        collect_and(&p, &mut flat);
    }
    if flat.iter().any(|f| *f == Formula::False) {
        return Formula::False;
    }
    flat.retain(|f| *f != Formula::True);
    flat.sort();
    flat.dedup();
    let mut it = flat.into_iter().rev();
    match it.next() {
        None => Formula::True,
        Some(last) => it.fold(last, |acc, f| f.and(acc)),
    }
}

fn mk_or(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for p in parts {
        collect_or(&p, &mut flat);
    }
    if flat.iter().any(|f| *f == Formula::True) {
        return Formula::True;
    }
    flat.retain(|f| *f != Formula::False);
    flat.sort();
    flat.dedup();
    let mut it = flat.into_iter().rev();
    match it.next() {
        None => Formula::False,
        Some(last) => it.fold(last, |acc, f| f.or(acc)),
    }
}

/// One-letter derivative: the residual obligation after reading a letter.
fn derivative(f: &Formula, holds: &dyn Fn(&str) -> bool) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(p) => {
            if holds(p) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(x) => match x.as_ref() {
            Formula::Atom(p) => {
                if holds(p) {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            _ => unreachable!("negation above a non-atom in an automaton body"),
        },
        Formula::And(a, b) => mk_and(vec![derivative(a, holds), derivative(b, holds)]),
        Formula::Or(a, b) => mk_or(vec![derivative(a, holds), derivative(b, holds)]),
        Formula::Next(x) => x.as_ref().clone(),
        Formula::Until(a, b) => mk_or(vec![
            derivative(b, holds),
            mk_and(vec![derivative(a, holds), f.clone()]),
        ]),
        Formula::Release(a, b) => mk_and(vec![
            derivative(b, holds),
            mk_or(vec![derivative(a, holds), f.clone()]),
        ]),
        _ => unreachable!("F/G are expanded before derivative construction"),
    }
}

// ---------------------------------------------------------------------------
// Product games
// ---------------------------------------------------------------------------

/// Solves the reach/safe game on the product of the model with the objective
/// automaton. Returns, per model state `s`, whether the position
/// `(s, init after reading V(s))` is winning for the given quantifier.
fn solve_product(
    m: &Icgs,
    kind: StrategicKind,
    coalition: &[AgentId],
    aut: &mut ObjectiveAutomaton,
) -> Vec<bool> {
    let n = m.state_count();
    let moves = coalition_moves(m, coalition);
    let labels: Vec<HashSet<String>> = m
        .states()
        .map(|s| m.label_names(s).into_iter().map(String::from).collect())
        .collect();

    // Close the automaton under the letters this model can produce and build
    // the full step table (rows appear as residuals are discovered).
    let mut table: Vec<Vec<usize>> = Vec::new();
    let mut q0 = Vec::with_capacity(n);
    for s in 0..n {
        q0.push(aut.step(aut.init, &|a: &str| labels[s].contains(a)));
    }
    while table.len() < aut.state_count() {
        let q = table.len();
        let mut row = Vec::with_capacity(n);
        for s in 0..n {
            row.push(aut.step(q, &|a: &str| labels[s].contains(a)));
        }
        table.push(row);
    }
    let q_count = aut.state_count();

    // win[q][s]
    let mut win: Vec<Vec<bool>> = (0..q_count)
        .map(|q| {
            let keep = match aut.kind {
                AcceptanceKind::Reach => aut.is_accepting(q),
                AcceptanceKind::Safe => !aut.is_trap(q),
            };
            vec![keep; n]
        })
        .collect();

    match aut.kind {
        AcceptanceKind::Reach => loop {
            let mut changed = false;
            for q in 0..q_count {
                for s in 0..n {
                    if win[q][s] {
                        continue;
                    }
                    let forced = match kind {
                        StrategicKind::Exists => moves.groups[s]
                            .iter()
                            .any(|g| g.iter().all(|&t| win[table[q][t]][t])),
                        StrategicKind::ForAll => moves.groups[s]
                            .iter()
                            .all(|g| g.iter().any(|&t| win[table[q][t]][t])),
                    };
                    if forced {
                        win[q][s] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        },
        AcceptanceKind::Safe => loop {
            let mut changed = false;
            for q in 0..q_count {
                for s in 0..n {
                    if !win[q][s] {
                        continue;
                    }
                    let forced = match kind {
                        StrategicKind::Exists => moves.groups[s]
                            .iter()
                            .any(|g| g.iter().all(|&t| win[table[q][t]][t])),
                        StrategicKind::ForAll => moves.groups[s]
                            .iter()
                            .all(|g| g.iter().any(|&t| win[table[q][t]][t])),
                    };
                    if !forced {
                        win[q][s] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        },
    }

    (0..n).map(|s| win[q0[s]][s]).collect()
}

/// Exact `IR` satisfaction set of a formula with exactly one strategic
/// operator over atomic/boolean state arguments.
///
/// Requires perfect information for the coalition agents (identity
/// indistinguishability), which the sub-model construction guarantees.
/// General LTL bodies outside the supported fragments are reported as
/// [`GameError::Unsupported`], never silently mis-answered.
pub fn check_strategic(m: &Icgs, f: &Formula) -> Result<Vec<StateId>, GameError> {
    let (kind, names, body) = match f {
        Formula::Strategic(c, b) => (StrategicKind::Exists, c, b.as_ref()),
        Formula::StrategicDual(c, b) => (StrategicKind::ForAll, c, b.as_ref()),
        _ => return Err(GameError::NotStrategic),
    };
    let coalition: Vec<AgentId> = names
        .iter()
        .map(|n| m.agent_index(n))
        .collect::<Result<_, _>>()?;
    for &a in &coalition {
        if !m.has_identity_indist(a) {
            return Err(GameError::ImperfectInformation(m.agent_name(a).to_string()));
        }
    }
    match classify_path_formula(body) {
        PathClass::AtlFragment => check_atl_fragment(m, kind, &coalition, body),
        PathClass::CoSafety => {
            let mut aut = ltl_to_dfa(body, AcceptanceKind::Reach)?;
            let win = solve_product(m, kind, &coalition, &mut aut);
            Ok(win
                .into_iter()
                .enumerate()
                .filter_map(|(s, w)| w.then_some(StateId(s)))
                .collect())
        }
        PathClass::Safety => {
            let mut aut = ltl_to_dfa(body, AcceptanceKind::Safe)?;
            let win = solve_product(m, kind, &coalition, &mut aut);
            Ok(win
                .into_iter()
                .enumerate()
                .filter_map(|(s, w)| w.then_some(StateId(s)))
                .collect())
        }
        PathClass::Unsupported => Err(GameError::Unsupported(body.to_string())),
    }
}
