//! Orchestration: sub-formula checking on candidate pairs, the CTL*
//! verification step, and the overall three-valued procedure.
//!
//! For each candidate pair and each extracted sub-formula the checker labels
//! both sub-models with the sub-formula's atom where it holds, recording
//! `<state, sub-formula, natom/patom>` tuples. Verification lifts those
//! labels onto a fresh copy of the input model, substitutes checked
//! sub-formulas by their variant atoms and decides `phi_A` (universal) and
//! `phi_E` (existential) by CTL* checking: `phi_A` true gives a conclusive
//! "true", `phi_E` false a conclusive "false", otherwise unknown.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ctlstar;
use crate::formula::{self, CtlVariant, Formula, ParseError, SubformulaTree};
use crate::game::{self, GameError};
use crate::icgs::{Icgs, ModelError, StateId};
use crate::submodel::{self, CandidatePair, PreprocessedProblem};

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("model atom `{0}` collides with the reserved `atom_`/`natom_`/`patom_` namespace")]
    ReservedAtom(String),
    #[error("internal soundness violation: {0}")]
    InternalSoundness(String),
}

/// Which sub-model variant produced a result tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    N,
    P,
}

/// One tuple produced by sub-formula checking: the (original-model) state,
/// the sub-formula id, and the variant that satisfied it there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultEntry {
    pub state: StateId,
    pub sub: usize,
    pub variant: Variant,
}

impl ResultEntry {
    /// The variant-tagged atom (`natom_<k>` / `patom_<k>`).
    pub fn variant_atom(&self) -> String {
        match self.variant {
            Variant::N => format!("natom_{}", self.sub),
            Variant::P => format!("patom_{}", self.sub),
        }
    }
}

/// Three-valued outcome of the procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictValue {
    True,
    False,
    Unknown,
}

impl fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictValue::True => write!(f, "true"),
            VerdictValue::False => write!(f, "false"),
            VerdictValue::Unknown => write!(f, "unknown"),
        }
    }
}

/// The overall verdict plus, when conclusive, the candidate that settled it
/// and the CTL* formulas used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub value: VerdictValue,
    pub witness: Option<VerdictWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictWitness {
    pub candidate: usize,
    pub phi_a: Formula,
    pub phi_e: Formula,
}

/// Checks every extracted sub-formula against both sub-models of `pair`,
/// labelling satisfied states with the sub-formula's atom and collecting the
/// result tuples. Sub-formulas whose body falls outside the supported game
/// fragments are skipped (their atom never appears, which only weakens
/// conclusiveness). After all checks the positive sink is labelled with every
/// atom minted into the positive sub-model.
pub fn check_subformulas(pair: &mut CandidatePair, f: &Formula) -> Vec<ResultEntry> {
    let tree = formula::subformulas(f);
    check_subformulas_with_tree(pair, &tree)
}

pub(crate) fn check_subformulas_with_tree(
    pair: &mut CandidatePair,
    tree: &SubformulaTree,
) -> Vec<ResultEntry> {
    let mut entries = Vec::new();
    let mut minted_p: Vec<String> = Vec::new();

    for node in &tree.nodes {
        let sat_n = match game::check_strategic(&pair.neg.model, &node.formula) {
            Ok(sat) => sat,
            Err(GameError::Unsupported(body)) => {
                log::info!(
                    "skipping sub-formula {} (unsupported body `{body}`)",
                    node.atom
                );
                continue;
            }
            Err(err) => unreachable!("sub-model violates the game preconditions: {err}"),
        };
        let sat_p = match game::check_strategic(&pair.pos.model, &node.formula) {
            Ok(sat) => sat,
            Err(err) => unreachable!("negative/positive fragment support diverged: {err}"),
        };
        let sat_n: HashSet<StateId> = sat_n.into_iter().collect();
        let sat_p: HashSet<StateId> = sat_p.into_iter().collect();

        let mut touched_p = false;
        for &orig in &pair.core.clone() {
            let sub_n = pair.neg.sub_state(orig).expect("core state");
            if sat_n.contains(&sub_n) {
                pair.neg.add_core_label(orig, &node.atom);
                entries.push(ResultEntry {
                    state: orig,
                    sub: node.id,
                    variant: Variant::N,
                });
            }
            let sub_p = pair.pos.sub_state(orig).expect("core state");
            if sat_p.contains(&sub_p) {
                pair.pos.add_core_label(orig, &node.atom);
                entries.push(ResultEntry {
                    state: orig,
                    sub: node.id,
                    variant: Variant::P,
                });
                touched_p = true;
            }
        }
        if touched_p {
            minted_p.push(node.atom.clone());
        }
    }

    // The positive sink must carry every atom of the updated model. Deferring
    // this until after the checks keeps later sub-formulas from being
    // satisfied through the sink by atoms minted for earlier ones, matching
    // the per-sub-formula results of the worked examples.
    for atom in minted_p {
        pair.pos.add_sink_label(&atom);
    }

    entries
}

/// The CTL* verification step on (a fresh copy of) the preprocessed model.
pub fn verification(
    m: &Icgs,
    f: &Formula,
    entries: &[ResultEntry],
) -> Result<Verdict, PipelineError> {
    let tree = formula::subformulas(f);
    verification_with_tree(m, &tree, entries).map(|(verdict, _, _)| verdict)
}

/// As [`verification`] but reusing a precomputed sub-formula tree; also
/// returns the two CTL* formulas for reporting.
pub(crate) fn verification_with_tree(
    m: &Icgs,
    tree: &SubformulaTree,
    entries: &[ResultEntry],
) -> Result<(Verdict, Formula, Formula), PipelineError> {
    let mut work = m.clone();
    let mut checked_n: HashSet<usize> = HashSet::new();
    let mut checked_p: HashSet<usize> = HashSet::new();
    for entry in entries {
        work.add_label_named(entry.state, &entry.variant_atom());
        match entry.variant {
            Variant::N => checked_n.insert(entry.sub),
            Variant::P => checked_p.insert(entry.sub),
        };
    }

    // Negative-side labels must under-approximate positive-side labels.
    for node in &tree.nodes {
        for entry in entries.iter().filter(|e| e.sub == node.id && e.variant == Variant::N) {
            let patom = format!("patom_{}", node.id);
            if !work.has_label_named(entry.state, &patom) {
                return Err(PipelineError::InternalSoundness(format!(
                    "state `{}` carries natom_{} but not patom_{}",
                    work.state_name(entry.state),
                    node.id,
                    node.id
                )));
            }
        }
    }

    let psi_n = rebuild(tree, &checked_n, Variant::N, &tree.residue);
    let psi_p = rebuild(tree, &checked_p, Variant::P, &tree.residue);
    let phi_a = formula::atl_to_ctl(&psi_n, CtlVariant::Universal);
    let phi_e = formula::atl_to_ctl(&psi_p, CtlVariant::Existential);

    let initial = work.initial_state();
    let a_holds = ctlstar::check_ctlstar(&work, initial, &phi_a);
    let e_holds = ctlstar::check_ctlstar(&work, initial, &phi_e);

    if a_holds && !e_holds {
        return Err(PipelineError::InternalSoundness(format!(
            "phi_A `{phi_a}` holds while phi_E `{phi_e}` fails on the same labelling"
        )));
    }

    let value = if a_holds {
        VerdictValue::True
    } else if !e_holds {
        VerdictValue::False
    } else {
        VerdictValue::Unknown
    };
    Ok((
        Verdict {
            value,
            witness: None,
        },
        phi_a,
        phi_e,
    ))
}

/// Rebuilds the residual formula for one variant: checked sub-formulas become
/// their variant atoms, unchecked ones keep their strategic operator (with
/// inner occurrences rebuilt the same way).
fn rebuild(tree: &SubformulaTree, checked: &HashSet<usize>, variant: Variant, f: &Formula) -> Formula {
    let expansion: HashMap<String, Formula> = tree
        .nodes
        .iter()
        .map(|node| {
            let replacement = if checked.contains(&node.id) {
                Formula::atom(match variant {
                    Variant::N => format!("natom_{}", node.id),
                    Variant::P => format!("patom_{}", node.id),
                })
            } else {
                // Keep the strategic operator; expand the atoms inside its
                // body recursively.
                node.formula.clone()
            };
            (node.atom.clone(), replacement)
        })
        .collect();
    expand_atoms(f, &expansion)
}

fn expand_atoms(f: &Formula, expansion: &HashMap<String, Formula>) -> Formula {
    match f {
        // Replacements only mention atoms of earlier nodes, so this recursion
        // terminates.
        Formula::Atom(name) => match expansion.get(name) {
            Some(replacement) => expand_atoms(replacement, expansion),
            None => f.clone(),
        },
        Formula::True | Formula::False => f.clone(),
        Formula::Not(x) => expand_atoms(x, expansion).not(),
        Formula::And(a, b) => expand_atoms(a, expansion).and(expand_atoms(b, expansion)),
        Formula::Or(a, b) => expand_atoms(a, expansion).or(expand_atoms(b, expansion)),
        Formula::Strategic(c, body) => {
            Formula::Strategic(c.clone(), Box::new(expand_atoms(body, expansion)))
        }
        Formula::StrategicDual(c, body) => {
            Formula::StrategicDual(c.clone(), Box::new(expand_atoms(body, expansion)))
        }
        Formula::PathA(body) => Formula::path_a(expand_atoms(body, expansion)),
        Formula::PathE(body) => Formula::path_e(expand_atoms(body, expansion)),
        Formula::Next(x) => expand_atoms(x, expansion).next(),
        Formula::Until(a, b) => expand_atoms(a, expansion).until(expand_atoms(b, expansion)),
        Formula::Release(a, b) => expand_atoms(a, expansion).release(expand_atoms(b, expansion)),
        Formula::Finally(x) => expand_atoms(x, expansion).finally(),
        Formula::Globally(x) => expand_atoms(x, expansion).globally(),
    }
}

fn check_reserved_atoms(m: &Icgs) -> Result<(), PipelineError> {
    for atom in m.atoms() {
        if atom.starts_with("atom_") || atom.starts_with("natom_") || atom.starts_with("patom_") {
            return Err(PipelineError::ReservedAtom(atom.clone()));
        }
    }
    Ok(())
}

fn validate_coalitions(m: &Icgs, f: &Formula) -> Result<(), ModelError> {
    for name in formula::coalition_agents(f) {
        m.agent_index(&name)?;
    }
    Ok(())
}

/// The overall procedure: preprocess, enumerate candidates, and return the
/// first conclusive verdict (processing candidates in discovery order).
pub fn model_checking_procedure(m: &Icgs, f: &Formula) -> Result<Verdict, PipelineError> {
    validate_coalitions(m, f)?;
    check_reserved_atoms(m)?;
    let pre = submodel::preprocess(m, f);
    let tree = formula::subformulas(&pre.formula);
    let candidates = submodel::find_submodels(&pre.model, &pre.formula)?;

    for (idx, pair) in candidates.into_iter().enumerate() {
        let mut pair = pair;
        let entries = check_subformulas_with_tree(&mut pair, &tree);
        let (verdict, phi_a, phi_e) = verification_with_tree(&pre.model, &tree, &entries)?;
        if verdict.value != VerdictValue::Unknown {
            return Ok(Verdict {
                value: verdict.value,
                witness: Some(VerdictWitness {
                    candidate: idx,
                    phi_a,
                    phi_e,
                }),
            });
        }
    }
    Ok(Verdict {
        value: VerdictValue::Unknown,
        witness: None,
    })
}

// ---------------------------------------------------------------------------
// Reporting front-end
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EntryReport {
    pub state: String,
    pub sub: usize,
    pub atom: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub core: Vec<String>,
    pub entries: Vec<EntryReport>,
    #[serde(rename = "phiA")]
    pub phi_a: String,
    #[serde(rename = "phiE")]
    pub phi_e: String,
    #[serde(rename = "A_holds")]
    pub a_holds: bool,
    #[serde(rename = "E_holds")]
    pub e_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub verdict: VerdictValue,
    pub candidates: usize,
    pub conclusive_candidate: Option<usize>,
    pub per_candidate: Vec<CandidateReport>,
    pub timings_ms: HashMap<String, u128>,
}

/// Runs the procedure over every candidate (no early stop) and assembles the
/// full report. The verdict equals the procedure's: the lowest conclusive
/// candidate wins, independent of worker count.
pub fn check_with_report(m: &Icgs, f: &Formula, parallel: usize) -> Result<CheckReport, PipelineError> {
    let started = Instant::now();
    validate_coalitions(m, f)?;
    check_reserved_atoms(m)?;
    let pre = submodel::preprocess(m, f);
    let tree = formula::subformulas(&pre.formula);

    let enum_started = Instant::now();
    let candidates = submodel::find_submodels(&pre.model, &pre.formula)?;
    let enumerate_ms = enum_started.elapsed().as_millis();

    let check_started = Instant::now();
    let process = |pair: CandidatePair| -> Result<(CandidateReport, VerdictValue), PipelineError> {
        let mut pair = pair;
        let entries = check_subformulas_with_tree(&mut pair, &tree);
        let (verdict, phi_a, phi_e) = verification_with_tree(&pre.model, &tree, &entries)?;
        let report = CandidateReport {
            core: pair
                .core
                .iter()
                .map(|&s| pre.model.state_name(s).to_string())
                .collect(),
            entries: entries
                .iter()
                .map(|e| EntryReport {
                    state: pre.model.state_name(e.state).to_string(),
                    sub: e.sub,
                    atom: e.variant_atom(),
                })
                .collect(),
            phi_a: phi_a.to_string(),
            phi_e: phi_e.to_string(),
            a_holds: verdict.value == VerdictValue::True,
            e_holds: verdict.value != VerdictValue::False,
        };
        Ok((report, verdict.value))
    };

    let results: Vec<(CandidateReport, VerdictValue)> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .expect("worker pool");
        pool.install(|| {
            candidates
                .into_par_iter()
                .map(process)
                .collect::<Result<Vec<_>, _>>()
        })?
    } else {
        candidates
            .into_iter()
            .map(process)
            .collect::<Result<Vec<_>, _>>()?
    };
    let check_ms = check_started.elapsed().as_millis();

    let mut verdict = VerdictValue::Unknown;
    let mut conclusive = None;
    for (idx, (_, value)) in results.iter().enumerate() {
        if *value != VerdictValue::Unknown {
            verdict = *value;
            conclusive = Some(idx);
            break;
        }
    }
    // Conclusive candidates cannot disagree; a true and a false verdict on
    // the same run would contradict the labelling lemmas.
    for (idx, (_, value)) in results.iter().enumerate() {
        if *value != VerdictValue::Unknown && *value != verdict {
            return Err(PipelineError::InternalSoundness(format!(
                "candidates {} and {} produced opposite conclusive verdicts",
                conclusive.unwrap_or_default(),
                idx
            )));
        }
    }

    let mut timings = HashMap::new();
    timings.insert("enumerate".to_string(), enumerate_ms);
    timings.insert("check".to_string(), check_ms);
    timings.insert("total".to_string(), started.elapsed().as_millis());

    Ok(CheckReport {
        verdict,
        candidates: results.len(),
        conclusive_candidate: conclusive,
        per_candidate: results.into_iter().map(|(r, _)| r).collect(),
        timings_ms: timings,
    })
}

/// Convenience wrapper: preprocess only (exposed for the CLI and tests).
pub fn preprocess(m: &Icgs, f: &Formula) -> PreprocessedProblem {
    submodel::preprocess(m, f)
}
