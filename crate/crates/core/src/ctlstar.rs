//! Full CTL* model checking by LTL-to-Büchi translation and accepting-cycle
//! search on the product.
//!
//! The translation is the classical on-the-fly tableau construction: nodes
//! carry processed obligations (`old`) and next-step obligations (`next`),
//! until-formulas induce generalized Büchi acceptance which is degeneralized
//! with a counter, and duplicate states are fused afterwards. Emptiness of
//! the model/automaton product is decided by nested depth-first search.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::formula::{self, Formula};
use crate::icgs::{Icgs, StateId};

// ---------------------------------------------------------------------------
// Büchi automata
// ---------------------------------------------------------------------------

/// Conjunction of literals a letter must satisfy to traverse an edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LetterCond {
    pos: Vec<String>,
    neg: Vec<String>,
}

impl LetterCond {
    pub fn satisfied_by(&self, holds: &dyn Fn(&str) -> bool) -> bool {
        self.pos.iter().all(|a| holds(a)) && self.neg.iter().all(|a| !holds(a))
    }
}

/// A nondeterministic Büchi automaton over atom-set letters, with edge
/// conditions as literal conjunctions.
#[derive(Debug, Clone)]
pub struct Nba {
    pub edges: Vec<Vec<(LetterCond, usize)>>,
    pub initial: Vec<(LetterCond, usize)>,
    pub accepting: Vec<bool>,
}

impl Nba {
    pub fn state_count(&self) -> usize {
        self.accepting.len()
    }
}

/// Tableau node under construction.
#[derive(Debug, Clone)]
struct TableauNode {
    incoming: BTreeSet<usize>,
    new: Vec<Formula>,
    old: BTreeSet<Formula>,
    next: BTreeSet<Formula>,
}

const INIT: usize = usize::MAX;

struct TableauBuilder {
    /// (old, next) -> node id
    index: HashMap<(BTreeSet<Formula>, BTreeSet<Formula>), usize>,
    nodes: Vec<TableauNode>,
}

impl TableauBuilder {
    fn expand(&mut self, mut node: TableauNode) {
        let Some(eta) = node.new.pop() else {
            // Fully processed: merge with an equal node or store and spawn
            // the successor carrying the next-step obligations.
            let key = (node.old.clone(), node.next.clone());
            if let Some(&id) = self.index.get(&key) {
                let incoming = node.incoming;
                self.nodes[id].incoming.extend(incoming);
                return;
            }
            let id = self.nodes.len();
            self.index.insert(key, id);
            let next = node.next.clone();
            self.nodes.push(node);
            self.expand(TableauNode {
                incoming: BTreeSet::from([id]),
                new: next.into_iter().collect(),
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
            return;
        };
        if node.old.contains(&eta) {
            self.expand(node);
            return;
        }
        match &eta {
            Formula::True => self.expand(node),
            Formula::False => {} // inconsistent, drop
            Formula::Atom(p) => {
                let negated = Formula::atom(p.clone()).not();
                if node.old.contains(&negated) {
                    return;
                }
                node.old.insert(eta);
                self.expand(node);
            }
            Formula::Not(inner) => {
                let Formula::Atom(_) = inner.as_ref() else {
                    unreachable!("tableau input is in NNF");
                };
                if node.old.contains(inner) {
                    return;
                }
                node.old.insert(eta);
                self.expand(node);
            }
            Formula::And(a, b) => {
                node.old.insert(eta.clone());
                for part in [a.as_ref(), b.as_ref()] {
                    if !node.old.contains(part) && !node.new.contains(part) {
                        node.new.push(part.clone());
                    }
                }
                self.expand(node);
            }
            Formula::Or(a, b) => {
                node.old.insert(eta.clone());
                let mut left = node.clone();
                left.new.push(a.as_ref().clone());
                self.expand(left);
                node.new.push(b.as_ref().clone());
                self.expand(node);
            }
            Formula::Next(x) => {
                node.old.insert(eta.clone());
                node.next.insert(x.as_ref().clone());
                self.expand(node);
            }
            Formula::Until(a, b) => {
                node.old.insert(eta.clone());
                let mut wait = node.clone();
                wait.new.push(a.as_ref().clone());
                wait.next.insert(eta.clone());
                self.expand(wait);
                node.new.push(b.as_ref().clone());
                self.expand(node);
            }
            Formula::Release(a, b) => {
                node.old.insert(eta.clone());
                let mut wait = node.clone();
                wait.new.push(b.as_ref().clone());
                wait.next.insert(eta.clone());
                self.expand(wait);
                node.new.push(a.as_ref().clone());
                node.new.push(b.as_ref().clone());
                self.expand(node);
            }
            _ => unreachable!("F/G expanded and quantifiers removed before tableau"),
        }
    }
}

fn node_literals(node: &TableauNode) -> LetterCond {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for f in &node.old {
        match f {
            Formula::Atom(p) => pos.push(p.clone()),
            Formula::Not(inner) => {
                if let Formula::Atom(p) = inner.as_ref() {
                    neg.push(p.clone());
                }
            }
            _ => {}
        }
    }
    pos.sort();
    neg.sort();
    LetterCond { pos, neg }
}

/// Translates an LTL path formula over atoms into a Büchi automaton accepting
/// exactly the satisfying atom-set words.
pub fn ltl_to_nba(psi: &Formula) -> Nba {
    assert!(psi.is_ltl(), "ltl_to_nba expects a pure LTL formula");
    let normalized = formula::expand_sugar(&formula::to_nnf(psi));

    let mut builder = TableauBuilder {
        index: HashMap::new(),
        nodes: Vec::new(),
    };
    builder.expand(TableauNode {
        incoming: BTreeSet::from([INIT]),
        new: vec![normalized.clone()],
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    });
    let nodes = builder.nodes;

    // Until-fulfillment acceptance sets.
    let mut untils: Vec<(Formula, Formula)> = Vec::new();
    let mut seen = HashSet::new();
    normalized_untils(&normalized, &mut untils, &mut seen);
    let k = untils.len().max(1);
    let in_f = |i: usize, node: &TableauNode| -> bool {
        match untils.get(i) {
            Some((u, rhs)) => !node.old.contains(u) || node.old.contains(rhs),
            None => true,
        }
    };

    // Degeneralize: state (q, i) advances the counter when q is in F_i;
    // accepting states are (q, k-1) with q in F_{k-1}.
    let flat = |q: usize, i: usize| q * k + i;
    let n_flat = nodes.len() * k;
    let mut edges: Vec<Vec<(LetterCond, usize)>> = vec![Vec::new(); n_flat];
    let mut initial: Vec<(LetterCond, usize)> = Vec::new();
    let mut accepting = vec![false; n_flat];

    for (q2, node) in nodes.iter().enumerate() {
        let cond = node_literals(node);
        for &q1 in &node.incoming {
            if q1 == INIT {
                initial.push((cond.clone(), flat(q2, 0)));
            } else {
                for i in 0..k {
                    let i2 = if in_f(i, &nodes[q1]) { (i + 1) % k } else { i };
                    edges[flat(q1, i)].push((cond.clone(), flat(q2, i2)));
                }
            }
        }
    }
    for (q, node) in nodes.iter().enumerate() {
        if in_f(k - 1, node) {
            accepting[flat(q, k - 1)] = true;
        }
    }

    let mut nba = Nba {
        edges,
        initial,
        accepting,
    };
    prune_unreachable(&mut nba);
    fuse_duplicates(&mut nba);
    nba
}

fn normalized_untils(f: &Formula, out: &mut Vec<(Formula, Formula)>, seen: &mut HashSet<Formula>) {
    match f {
        Formula::Until(a, b) => {
            if seen.insert(f.clone()) {
                out.push((f.clone(), b.as_ref().clone()));
            }
            normalized_untils(a, out, seen);
            normalized_untils(b, out, seen);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Release(a, b) => {
            normalized_untils(a, out, seen);
            normalized_untils(b, out, seen);
        }
        Formula::Not(x) | Formula::Next(x) => normalized_untils(x, out, seen),
        _ => {}
    }
}

fn prune_unreachable(nba: &mut Nba) {
    let n = nba.state_count();
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &(_, q) in &nba.initial {
        if !reach[q] {
            reach[q] = true;
            stack.push(q);
        }
    }
    while let Some(q) = stack.pop() {
        for &(_, t) in &nba.edges[q] {
            if !reach[t] {
                reach[t] = true;
                stack.push(t);
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut next = 0;
    for q in 0..n {
        if reach[q] {
            remap[q] = next;
            next += 1;
        }
    }
    let mut edges = vec![Vec::new(); next];
    let mut accepting = vec![false; next];
    for q in 0..n {
        if !reach[q] {
            continue;
        }
        accepting[remap[q]] = nba.accepting[q];
        edges[remap[q]] = nba.edges[q]
            .iter()
            .filter(|&&(_, t)| reach[t])
            .map(|(c, t)| (c.clone(), remap[*t]))
            .collect();
    }
    nba.initial = nba
        .initial
        .iter()
        .map(|(c, q)| (c.clone(), remap[*q]))
        .collect();
    nba.edges = edges;
    nba.accepting = accepting;
}

/// Merges states with identical acceptance and outgoing edge sets. Iterated
/// to a fixpoint this collapses the duplicate tails the tableau produces.
fn fuse_duplicates(nba: &mut Nba) {
    loop {
        let n = nba.state_count();
        let mut key_to_rep: HashMap<(bool, Vec<(LetterCond, usize)>), usize> = HashMap::new();
        let mut remap: Vec<usize> = (0..n).collect();
        let mut distinct = 0;
        for q in 0..n {
            let mut key_edges = nba.edges[q].clone();
            key_edges.sort();
            key_edges.dedup();
            let key = (nba.accepting[q], key_edges);
            match key_to_rep.get(&key) {
                Some(&rep) => remap[q] = rep,
                None => {
                    key_to_rep.insert(key, q);
                    distinct += 1;
                }
            }
        }
        if distinct == n {
            return;
        }
        // Compact the representatives and rewrite all references.
        let mut compact = vec![usize::MAX; n];
        let mut next = 0;
        for q in 0..n {
            if remap[q] == q {
                compact[q] = next;
                next += 1;
            }
        }
        let final_map: Vec<usize> = (0..n).map(|q| compact[remap[q]]).collect();
        let mut edges = vec![Vec::new(); next];
        let mut accepting = vec![false; next];
        for q in 0..n {
            if remap[q] != q {
                continue;
            }
            accepting[final_map[q]] = nba.accepting[q];
            let mut es: Vec<(LetterCond, usize)> = nba.edges[q]
                .iter()
                .map(|(c, t)| (c.clone(), final_map[*t]))
                .collect();
            es.sort();
            es.dedup();
            edges[final_map[q]] = es;
        }
        let mut initial: Vec<(LetterCond, usize)> = nba
            .initial
            .iter()
            .map(|(c, q)| (c.clone(), final_map[*q]))
            .collect();
        initial.sort();
        initial.dedup();
        nba.edges = edges;
        nba.accepting = accepting;
        nba.initial = initial;
    }
}

/// Whether the automaton accepts `prefix . cycle^omega` (letters are atom
/// sets). Exhaustive over the finite position/state product; used by tests
/// and oracles.
pub fn nba_accepts_word_lasso(
    nba: &Nba,
    prefix: &[HashSet<String>],
    cycle: &[HashSet<String>],
) -> bool {
    assert!(!cycle.is_empty());
    let total = prefix.len() + cycle.len();
    let letter = |i: usize| -> &HashSet<String> {
        if i < prefix.len() {
            &prefix[i]
        } else {
            &cycle[i - prefix.len()]
        }
    };
    let next = |i: usize| if i + 1 < total { i + 1 } else { prefix.len() };

    // Product nodes (position, nba state); find a reachable accepting cycle.
    let idx = |pos: usize, q: usize| pos * nba.state_count() + q;
    let mut reach = vec![false; total * nba.state_count()];
    let mut stack = Vec::new();
    for (cond, q) in &nba.initial {
        if cond.satisfied_by(&|a| letter(0).contains(a)) && !reach[idx(0, *q)] {
            reach[idx(0, *q)] = true;
            stack.push((0usize, *q));
        }
    }
    let mut nodes = Vec::new();
    while let Some((pos, q)) = stack.pop() {
        nodes.push((pos, q));
        let np = next(pos);
        for (cond, t) in &nba.edges[q] {
            if cond.satisfied_by(&|a| letter(np).contains(a)) && !reach[idx(np, *t)] {
                reach[idx(np, *t)] = true;
                stack.push((np, *t));
            }
        }
    }
    // For each reachable accepting node, test whether it can reach itself.
    for &(pos, q) in &nodes {
        if !nba.accepting[q] {
            continue;
        }
        let mut seen = vec![false; total * nba.state_count()];
        let mut st = vec![(pos, q)];
        while let Some((p1, q1)) = st.pop() {
            let np = next(p1);
            for (cond, t) in &nba.edges[q1] {
                if !cond.satisfied_by(&|a| letter(np).contains(a)) {
                    continue;
                }
                if (np, *t) == (pos, q) {
                    return true;
                }
                if !seen[idx(np, *t)] {
                    seen[idx(np, *t)] = true;
                    st.push((np, *t));
                }
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Product emptiness and CTL* evaluation
// ---------------------------------------------------------------------------

/// Nested depth-first search for an accepting cycle in the product of the
/// model's state graph with the automaton, starting from `s`.
fn product_nonempty(m: &Icgs, s: StateId, nba: &Nba) -> bool {
    let labels: Vec<HashSet<&str>> = m
        .states()
        .map(|t| m.label_names(t).into_iter().collect())
        .collect();
    let succ = |(u, q): (usize, usize)| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in m.successors(StateId(u)) {
            for (cond, q2) in &nba.edges[q] {
                if cond.satisfied_by(&|a| labels[t.0].contains(a)) {
                    out.push((t.0, *q2));
                }
            }
        }
        out
    };

    let mut blue: HashSet<(usize, usize)> = HashSet::new();
    let mut red: HashSet<(usize, usize)> = HashSet::new();
    let mut succs_cache: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();

    let mut initials = Vec::new();
    for (cond, q) in &nba.initial {
        if cond.satisfied_by(&|a| labels[s.0].contains(a)) {
            initials.push((s.0, *q));
        }
    }

    for init in initials {
        if blue.contains(&init) {
            continue;
        }
        // Iterative blue DFS with post-order red search from accepting nodes.
        let mut stack: Vec<((usize, usize), usize)> = vec![(init, 0)];
        blue.insert(init);
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            let children = succs_cache.entry(u).or_insert_with(|| succ(u));
            if *i < children.len() {
                let v = children[*i];
                *i += 1;
                if !blue.contains(&v) {
                    blue.insert(v);
                    stack.push((v, 0));
                }
            } else {
                stack.pop();
                if nba.accepting[u.1] && red_search(u, &succ, &mut red, &mut succs_cache) {
                    return true;
                }
            }
        }
    }
    false
}

fn red_search(
    seed: (usize, usize),
    succ: &dyn Fn((usize, usize)) -> Vec<(usize, usize)>,
    red: &mut HashSet<(usize, usize)>,
    succs_cache: &mut HashMap<(usize, usize), Vec<(usize, usize)>>,
) -> bool {
    let mut stack = vec![seed];
    while let Some(u) = stack.pop() {
        let children = succs_cache.entry(u).or_insert_with(|| succ(u)).clone();
        for v in children {
            if v == seed {
                return true;
            }
            if red.insert(v) {
                stack.push(v);
            }
        }
    }
    false
}

/// True iff some infinite path of `m` from `s` (over enabled joint actions,
/// ignoring indistinguishability) satisfies the LTL formula `psi`.
pub fn exists_path(m: &Icgs, s: StateId, psi: &Formula) -> bool {
    let nba = ltl_to_nba(psi);
    product_nonempty(m, s, &nba)
}

/// The set variant: per state, whether some path from it satisfies `psi`.
/// Builds the automaton once.
pub fn exists_path_set(m: &Icgs, psi: &Formula) -> Vec<bool> {
    let nba = ltl_to_nba(psi);
    m.states().map(|s| product_nonempty(m, s, &nba)).collect()
}

/// Standard recursive CTL* model checking: innermost path-quantified
/// sub-formulas are evaluated state-by-state and replaced by fresh atoms
/// bottom-up; `A psi` is decided as the complement of `E !psi`.
///
/// `f` must be free of strategic operators (use the pipeline for those).
pub fn check_ctlstar(m: &Icgs, s: StateId, f: &Formula) -> bool {
    assert!(
        f.is_strategic_free(),
        "check_ctlstar expects a CTL* formula without strategic operators"
    );
    let mut work = m.clone();
    let mut counter = 0usize;
    let reduced = reduce_state(&mut work, f, &mut counter);
    eval_boolean(&work, &reduced, s)
}

fn fresh_ctl_atom(work: &Icgs, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let name = format!("__ctl_{counter}");
        if work.atom_index(&name).is_none() {
            return name;
        }
    }
}

fn reduce_state(work: &mut Icgs, f: &Formula, counter: &mut usize) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => reduce_state(work, x, counter).not(),
        Formula::And(a, b) => reduce_state(work, a, counter).and(reduce_state(work, b, counter)),
        Formula::Or(a, b) => reduce_state(work, a, counter).or(reduce_state(work, b, counter)),
        Formula::PathA(body) | Formula::PathE(body) => {
            let ltl_body = reduce_path(work, body, counter);
            let sat: Vec<bool> = if matches!(f, Formula::PathE(_)) {
                exists_path_set(work, &ltl_body)
            } else {
                exists_path_set(work, &formula::to_nnf(&ltl_body.clone().not()))
                    .into_iter()
                    .map(|b| !b)
                    .collect()
            };
            let atom = fresh_ctl_atom(work, counter);
            let k = work.add_atom(&atom);
            for (i, ok) in sat.iter().enumerate() {
                if *ok {
                    work.add_label(StateId(i), k);
                }
            }
            Formula::atom(atom)
        }
        _ => unreachable!("temporal operator outside a path quantifier"),
    }
}

fn reduce_path(work: &mut Icgs, f: &Formula, counter: &mut usize) -> Formula {
    match f {
        Formula::PathA(_) | Formula::PathE(_) => reduce_state(work, f, counter),
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(x) => reduce_path(work, x, counter).not(),
        Formula::And(a, b) => reduce_path(work, a, counter).and(reduce_path(work, b, counter)),
        Formula::Or(a, b) => reduce_path(work, a, counter).or(reduce_path(work, b, counter)),
        Formula::Next(x) => reduce_path(work, x, counter).next(),
        Formula::Until(a, b) => reduce_path(work, a, counter).until(reduce_path(work, b, counter)),
        Formula::Release(a, b) => reduce_path(work, a, counter).release(reduce_path(work, b, counter)),
        Formula::Finally(x) => reduce_path(work, x, counter).finally(),
        Formula::Globally(x) => reduce_path(work, x, counter).globally(),
        Formula::Strategic(..) | Formula::StrategicDual(..) => {
            unreachable!("strategic operator in CTL* checking")
        }
    }
}

fn eval_boolean(m: &Icgs, f: &Formula, s: StateId) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(name) => m.has_label_named(s, name),
        Formula::Not(x) => !eval_boolean(m, x, s),
        Formula::And(a, b) => eval_boolean(m, a, s) && eval_boolean(m, b, s),
        Formula::Or(a, b) => eval_boolean(m, a, s) || eval_boolean(m, b, s),
        _ => unreachable!("non-boolean residue after CTL* reduction"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::testoracle;

    fn rover() -> Icgs {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/rover.json"
        ))
        .unwrap();
        Icgs::load(&text).unwrap()
    }

    fn path_body(text: &str) -> Formula {
        match parse(&format!("E {text}")).unwrap() {
            Formula::PathE(b) => *b,
            _ => unreachable!(),
        }
    }

    #[test]
    fn nba_for_finally_p_has_two_states() {
        let nba = ltl_to_nba(&path_body("F p"));
        assert_eq!(nba.state_count(), 2);
    }

    #[test]
    fn nba_language_matches_lasso_evaluator() {
        for text in ["p U q", "X p", "G p", "F (p & X q)", "G F p", "F G p", "p U (q U p)"] {
            let f = path_body(text);
            let nba = ltl_to_nba(&f);
            for (prefix, cycle) in testoracle::word_lassos(&["p", "q"], 4) {
                let want = testoracle::eval_word_lasso(&prefix, &cycle, &f);
                let got = nba_accepts_word_lasso(&nba, &prefix, &cycle);
                assert_eq!(got, want, "{text} on {prefix:?} ({cycle:?})");
            }
        }
    }

    #[test]
    fn nba_for_next_p_on_short_lassos() {
        let f = path_body("X p");
        let nba = ltl_to_nba(&f);
        for (prefix, cycle) in testoracle::word_lassos(&["p"], 3) {
            assert_eq!(
                nba_accepts_word_lasso(&nba, &prefix, &cycle),
                testoracle::eval_word_lasso(&prefix, &cycle, &f ),
                "X p on {prefix:?} ({cycle:?})"
            );
        }
    }

    #[test]
    fn exists_path_finally_true() {
        let m = rover();
        for s in m.states() {
            assert!(exists_path(&m, s, &path_body("F true")));
        }
    }

    #[test]
    fn exists_path_globally_on_two_state_cycle() {
        let doc = r#"{
            "agents": [{"name": "a", "actions": ["t"]}],
            "states": [{"name": "s0", "labels": ["p"]}, {"name": "s1", "labels": []}],
            "initial": "s0",
            "protocol": [
                {"agent": "a", "state": "s0", "actions": ["t"]},
                {"agent": "a", "state": "s1", "actions": ["t"]}
            ],
            "transitions": [
                {"from": "s0", "action": ["t"], "to": "s1"},
                {"from": "s1", "action": ["t"], "to": "s0"}
            ]
        }"#;
        let m = Icgs::load(doc).unwrap();
        assert!(!exists_path(&m, StateId(0), &path_body("G p")));
        assert!(exists_path(&m, StateId(0), &path_body("F p")));
    }

    #[test]
    fn exists_path_phi3_residue_is_false_on_rover() {
        // After preprocessing and labelling patom_1 at s4..s8 there is still
        // no state satisfying rp & nip, so the existential check fails at sI.
        let m = rover();
        let pre = crate::submodel::preprocess(
            &m,
            &parse("<<rover,mechanic>> F (rp & !ip & <<rover>> F ((pl | pr) & F (oc & rm)))").unwrap(),
        );
        let mut work = pre.model.clone();
        for name in ["s4", "s5", "s6", "s7", "s8"] {
            let s = work.state_index(name).unwrap();
            work.add_label_named(s, "patom_1");
        }
        let body = path_body("F (rp & nip & patom_1)");
        assert!(!exists_path(&work, work.initial_state(), &body));
    }

    #[test]
    fn check_ctlstar_atom_at_state()  {
        let m = rover();
        assert!(check_ctlstar(&m, m.initial_state(), &parse("sp").unwrap()));
        assert!(!check_ctlstar(&m, m.initial_state(), &parse("cp").unwrap()));
    }

    #[test]
    fn check_ctlstar_af_vs_ef_on_fork() {
        // s0 branches to a p-state and a dead end; only E F p holds.
        let doc = r#"{
            "agents": [{"name": "a", "actions": ["l", "r"]}],
            "states": [
                {"name": "s0", "labels": []},
                {"name": "sp", "labels": ["p"]},
                {"name": "sq", "labels": []}
            ],
            "initial": "s0",
            "protocol": [
                {"agent": "a", "state": "s0", "actions": ["l", "r"]},
                {"agent": "a", "state": "sp", "actions": ["l"]},
                {"agent": "a", "state": "sq", "actions": ["l"]}
            ],
            "transitions": [
                {"from": "s0", "action": ["l"], "to": "sp"},
                {"from": "s0", "action": ["r"], "to": "sq"},
                {"from": "sp", "action": ["l"], "to": "sp"},
                {"from": "sq", "action": ["l"], "to": "sq"}
            ]
        }"#;
        let m = Icgs::load(doc).unwrap();
        assert!(!check_ctlstar(&m, StateId(0), &parse("A F p").unwrap()));
        assert!(check_ctlstar(&m, StateId(0), &parse("E F p").unwrap()));
    }

    #[test]
    fn check_ctlstar_nested_quantifiers() {
        let m = rover();
        // From sI some path reaches a state from which every path keeps cp
        // off forever (the error sink e1 or the mission loop elsewhere).
        let f = parse("E F (A G !cp)").unwrap();
        assert!(check_ctlstar(&m, m.initial_state(), &f));
    }

    #[test]
    fn duality_of_path_quantifiers() {
        let m = rover();
        for text in ["F cp", "G !cp", "F (oc & rm)", "cp U oc"] {
            let a = parse(&format!("A {text}")).unwrap();
            let not_e_not = !check_ctlstar(
                &m,
                m.initial_state(),
                &parse(&format!("E !({text})")).unwrap(),
            );
            assert_eq!(
                check_ctlstar(&m, m.initial_state(), &a),
                not_e_not,
                "duality failed for {text}"
            );
        }
    }
}
