//! Test-only reference evaluation of LTL on ultimately periodic words.
//!
//! This evaluator unrolls the positional semantics directly on a word lasso
//! and is deliberately independent of the automata constructions it is used
//! to validate.

use std::collections::HashSet;

use crate::formula::Formula;

pub type Letter = HashSet<String>;

/// Evaluates an LTL formula at position 0 of `prefix . cycle^omega`.
pub fn eval_word_lasso(prefix: &[Letter], cycle: &[Letter], f: &Formula) -> bool {
    assert!(!cycle.is_empty());
    eval_at(prefix, cycle, f, 0)
}

fn letter_at<'a>(prefix: &'a [Letter], cycle: &'a [Letter], i: usize) -> &'a Letter {
    if i < prefix.len() {
        &prefix[i]
    } else {
        &cycle[i - prefix.len()]
    }
}

fn next_pos(prefix: &[Letter], cycle: &[Letter], i: usize) -> usize {
    if i + 1 < prefix.len() + cycle.len() {
        i + 1
    } else {
        prefix.len()
    }
}

fn eval_at(prefix: &[Letter], cycle: &[Letter], f: &Formula, pos: usize) -> bool {
    let total = prefix.len() + cycle.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => letter_at(prefix, cycle, pos).contains(p),
        Formula::Not(x) => !eval_at(prefix, cycle, x, pos),
        Formula::And(a, b) => eval_at(prefix, cycle, a, pos) && eval_at(prefix, cycle, b, pos),
        Formula::Or(a, b) => eval_at(prefix, cycle, a, pos) || eval_at(prefix, cycle, b, pos),
        Formula::Next(x) => eval_at(prefix, cycle, x, next_pos(prefix, cycle, pos)),
        Formula::Until(a, b) => {
            let mut j = pos;
            for _ in 0..=total {
                if eval_at(prefix, cycle, b, j) {
                    return true;
                }
                if !eval_at(prefix, cycle, a, j) {
                    return false;
                }
                j = next_pos(prefix, cycle, j);
            }
            false
        }
        Formula::Release(a, b) => {
            let mut j = pos;
            for _ in 0..=total {
                if !eval_at(prefix, cycle, b, j) {
                    return false;
                }
                if eval_at(prefix, cycle, a, j) {
                    return true;
                }
                j = next_pos(prefix, cycle, j);
            }
            true
        }
        Formula::Finally(x) => {
            let mut j = pos;
            for _ in 0..=total {
                if eval_at(prefix, cycle, x, j) {
                    return true;
                }
                j = next_pos(prefix, cycle, j);
            }
            false
        }
        Formula::Globally(x) => {
            let mut j = pos;
            for _ in 0..=total {
                if !eval_at(prefix, cycle, x, j) {
                    return false;
                }
                j = next_pos(prefix, cycle, j);
            }
            true
        }
        _ => unreachable!("word-lasso evaluation expects pure LTL"),
    }
}

/// Every subset of `atoms` as a letter.
pub fn all_letters(atoms: &[&str]) -> Vec<Letter> {
    let mut out = Vec::with_capacity(1 << atoms.len());
    for mask in 0..1u32 << atoms.len() {
        let mut letter = Letter::new();
        for (i, a) in atoms.iter().enumerate() {
            if mask & (1 << i) != 0 {
                letter.insert(a.to_string());
            }
        }
        out.push(letter);
    }
    out
}

/// Every word lasso with `prefix + cycle` of at most `max_len` positions over
/// the subsets of `atoms`.
pub fn word_lassos(atoms: &[&str], max_len: usize) -> Vec<(Vec<Letter>, Vec<Letter>)> {
    let letters = all_letters(atoms);
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut word = vec![0usize; len];
        loop {
            for cycle_start in 0..len {
                let prefix: Vec<Letter> = word[..cycle_start].iter().map(|&i| letters[i].clone()).collect();
                let cycle: Vec<Letter> = word[cycle_start..].iter().map(|&i| letters[i].clone()).collect();
                out.push((prefix, cycle));
            }
            let mut k = len;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                word[k] += 1;
                if word[k] < letters.len() {
                    break;
                }
                word[k] = 0;
            }
            if word.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out
}
