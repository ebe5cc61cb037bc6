//! Two-block quantified Boolean formulas `∃x ∀y φ` and their encoding as a
//! leader/follower game: the leader's action is an assignment to `x`, the
//! follower's an assignment to `y`, and the follower is paid `-1` exactly
//! when the leader is paid `1` (`φ` satisfied). The formula is true iff the
//! leader can secure payoff 1.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{GameError, GameMeta, InformationStructure, RewardTable, ScmasGame};
use crate::scm::ScmBuilder;
use crate::solvers::{exact_scne, SolverConfig, SolverError};

/// Largest quantifier block `reduce_to_scmas` accepts.
pub const MAX_BLOCK: usize = 4;
/// Largest variable count `brute_force_qbf` accepts.
pub const MAX_BRUTE_FORCE_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbfError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: only an `e` block followed by an `a` block is supported")]
    UnsupportedAlternation { line: usize },
    #[error("{what} has {got} variables, limit is {max}")]
    TooLarge { what: &'static str, got: usize, max: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// A prenex formula `∃ existential ∀ universal . clauses`. Literals use
/// DIMACS numbering: variable `v` is `v`, its negation `-v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub existential: Vec<u32>,
    pub universal: Vec<u32>,
    pub clauses: Vec<Vec<i32>>,
}

impl Qbf {
    pub fn n_vars(&self) -> usize {
        self.existential.len() + self.universal.len()
    }

    fn max_var(&self) -> u32 {
        self.existential.iter().chain(&self.universal).copied().max().unwrap_or(0)
    }

    /// Evaluates the matrix; `value(v)` gives variable `v`'s truth value.
    pub fn satisfied(&self, value: impl Fn(u32) -> bool) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&lit| value(lit.unsigned_abs()) == (lit > 0)))
    }

    /// Matrix value when existential variable `i` takes bit `i` of `x` and
    /// universal variable `j` takes bit `j` of `y`.
    pub fn satisfied_by(&self, x: usize, y: usize) -> bool {
        self.satisfied(|v| {
            if let Some(i) = self.existential.iter().position(|e| *e == v) {
                x >> i & 1 == 1
            } else {
                let j = self.universal.iter().position(|u| *u == v).expect("declared variable");
                y >> j & 1 == 1
            }
        })
    }

    pub fn to_qdimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.max_var(), self.clauses.len());
        for (tag, block) in [("e", &self.existential), ("a", &self.universal)] {
            if !block.is_empty() {
                s.push_str(tag);
                for v in block {
                    write!(s, " {v}").unwrap();
                }
                s.push_str(" 0\n");
            }
        }
        for c in &self.clauses {
            for lit in c {
                write!(s, "{lit} ").unwrap();
            }
            s.push_str("0\n");
        }
        s
    }
}

/// Reads the QDIMACS subset: comments, a `p cnf` header, at most one `e`
/// line followed by at most one `a` line, then clauses.
pub fn parse_qdimacs(text: &str) -> Result<Qbf, QbfError> {
    let err = |line: usize, message: String| QbfError::Parse { line, message };
    let mut header: Option<(u32, usize)> = None;
    let mut existential = Vec::new();
    let mut universal = Vec::new();
    let mut seen_e = false;
    let mut seen_a = false;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut pending: Vec<i32> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        let mut words = t.split_whitespace();
        let first = words.next().expect("nonempty line");
        match first {
            "p" => {
                if header.is_some() {
                    return Err(err(line, "duplicate problem line".into()));
                }
                let rest: Vec<&str> = words.collect();
                match rest.as_slice() {
                    ["cnf", v, c] => {
                        let v = v.parse().map_err(|_| err(line, format!("bad variable count `{v}`")))?;
                        let c = c.parse().map_err(|_| err(line, format!("bad clause count `{c}`")))?;
                        header = Some((v, c));
                    }
                    _ => return Err(err(line, "expected `p cnf <vars> <clauses>`".into())),
                }
            }
            "e" | "a" => {
                let (n_vars, _) = header.ok_or_else(|| err(line, "quantifier before problem line".into()))?;
                if !pending.is_empty() || !clauses.is_empty() {
                    return Err(err(line, "quantifier after clauses".into()));
                }
                let block = if first == "e" {
                    if seen_e || seen_a {
                        return Err(QbfError::UnsupportedAlternation { line });
                    }
                    seen_e = true;
                    &mut existential
                } else {
                    if seen_a {
                        return Err(QbfError::UnsupportedAlternation { line });
                    }
                    seen_a = true;
                    &mut universal
                };
                let mut closed = false;
                for w in words {
                    let v: u32 = w.parse().map_err(|_| err(line, format!("bad variable `{w}`")))?;
                    if closed {
                        return Err(err(line, "text after terminating 0".into()));
                    }
                    if v == 0 {
                        closed = true;
                    } else if v > n_vars {
                        return Err(err(line, format!("variable {v} exceeds declared count {n_vars}")));
                    } else {
                        block.push(v);
                    }
                }
                if !closed {
                    return Err(err(line, "quantifier line must end with 0".into()));
                }
            }
            _ => {
                let (n_vars, _) = header.ok_or_else(|| err(line, "clause before problem line".into()))?;
                for w in t.split_whitespace() {
                    let lit: i32 = w.parse().map_err(|_| err(line, format!("bad literal `{w}`")))?;
                    if lit == 0 {
                        clauses.push(std::mem::take(&mut pending));
                    } else if lit.unsigned_abs() > n_vars {
                        return Err(err(line, format!("literal {lit} exceeds declared count {n_vars}")));
                    } else {
                        pending.push(lit);
                    }
                }
            }
        }
    }
    let last = text.lines().count().max(1);
    let (_, n_clauses) = header.ok_or_else(|| err(last, "missing problem line".into()))?;
    if !pending.is_empty() {
        return Err(err(last, "last clause is not terminated by 0".into()));
    }
    if clauses.len() != n_clauses {
        return Err(err(last, format!("header declares {n_clauses} clauses, found {}", clauses.len())));
    }
    let mut declared: Vec<u32> = existential.iter().chain(&universal).copied().collect();
    declared.sort_unstable();
    if declared.windows(2).any(|w| w[0] == w[1]) {
        return Err(err(last, "variable quantified twice".into()));
    }
    for c in &clauses {
        if let Some(lit) = c.iter().find(|l| declared.binary_search(&l.unsigned_abs()).is_err()) {
            return Err(err(last, format!("literal {lit} uses an unquantified variable")));
        }
    }
    Ok(Qbf { existential, universal, clauses })
}

/// Decides the formula by trying every assignment.
pub fn brute_force_qbf(f: &Qbf) -> Result<bool, QbfError> {
    if f.n_vars() > MAX_BRUTE_FORCE_VARS {
        return Err(QbfError::TooLarge { what: "formula", got: f.n_vars(), max: MAX_BRUTE_FORCE_VARS });
    }
    let (ne, na) = (f.existential.len(), f.universal.len());
    Ok((0..1usize << ne).any(|x| (0..1usize << na).all(|y| f.satisfied_by(x, y))))
}

/// The game whose leader can force payoff 1 iff the formula is true. The
/// causal model is degenerate: one single-valued exogenous variable and
/// constant mechanisms.
pub fn reduce_to_scmas(f: &Qbf) -> Result<ScmasGame, QbfError> {
    for (what, block) in [("existential block", &f.existential), ("universal block", &f.universal)] {
        if block.len() > MAX_BLOCK {
            return Err(QbfError::TooLarge { what, got: block.len(), max: MAX_BLOCK });
        }
    }
    let (nl, nf) = (1usize << f.existential.len(), 1usize << f.universal.len());
    let scm = ScmBuilder::new()
        .exogenous("U", vec![1.0])
        .node("X_L", nl, &["U"], vec![0])
        .node("X_F", nf, &["U"], vec![0])
        .action("X_L")
        .action("X_F")
        .build()
        .map_err(GameError::from)?;
    let rewards =
        RewardTable::from_fn(nl, nf, 1, |x, y, _| if f.satisfied_by(x, y) { (1.0, -1.0) } else { (0.0, 0.0) });
    let meta = GameMeta { name: "qbf".into(), seed: None, params: None };
    Ok(ScmasGame::new(scm, "X_L", "X_F", rewards, InformationStructure::Perfect, meta)?)
}

/// Outcome of checking one formula against its game encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub oracle: bool,
    pub game: bool,
}

impl Verification {
    pub fn equivalent(&self) -> bool {
        self.oracle == self.game
    }
}

pub fn verify_reduction_detail(f: &Qbf) -> Result<Verification, QbfError> {
    let oracle = brute_force_qbf(f)?;
    let game = reduce_to_scmas(f)?;
    let cfg = SolverConfig { max_actions: 1 << MAX_BLOCK, ..SolverConfig::default() };
    let profile = exact_scne(&game, &cfg)?;
    Ok(Verification { oracle, game: (profile.leader_payoff - 1.0).abs() < 1e-12 })
}

/// True iff the brute-force truth value matches "the leader's equilibrium
/// payoff is 1" in the encoded game.
pub fn verify_reduction(f: &Qbf) -> Result<bool, QbfError> {
    Ok(verify_reduction_detail(f)?.equivalent())
}

/// Every formula with `k` existential and `k` universal variables and at
/// most two (ordered) nonempty clauses, each clause choosing for every
/// variable one of absent, positive, negative.
pub fn exhaustive_family(k: usize) -> Result<Vec<Qbf>, QbfError> {
    if !(1..=2).contains(&k) {
        return Err(QbfError::TooLarge { what: "exhaustive block size", got: k, max: 2 });
    }
    let n = 2 * k;
    let clauses: Vec<Vec<i32>> = crate::scm::tuples(&vec![3; n])
        .skip(1)
        .map(|signs| {
            signs
                .iter()
                .enumerate()
                .filter(|(_, s)| **s != 0)
                .map(|(v, s)| if *s == 1 { v as i32 + 1 } else { -(v as i32 + 1) })
                .collect()
        })
        .collect();
    let existential: Vec<u32> = (1..=k as u32).collect();
    let universal: Vec<u32> = (k as u32 + 1..=n as u32).collect();
    let make = |cs: Vec<Vec<i32>>| Qbf { existential: existential.clone(), universal: universal.clone(), clauses: cs };
    let mut out = vec![make(Vec::new())];
    out.extend(clauses.iter().map(|c| make(vec![c.clone()])));
    for a in &clauses {
        for b in &clauses {
            out.push(make(vec![a.clone(), b.clone()]));
        }
    }
    Ok(out)
}

/// A seeded random formula; each clause has `width` distinct variables
/// with random signs.
pub fn random_qbf(seed: u64, n_exists: usize, n_forall: usize, n_clauses: usize, width: usize) -> Qbf {
    let n = n_exists + n_forall;
    let width = width.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..n_clauses)
        .map(|_| {
            let mut vars: Vec<usize> = sample(&mut rng, n, width).into_vec();
            vars.sort_unstable();
            vars.into_iter()
                .map(|v| {
                    let lit = v as i32 + 1;
                    if rng.random::<bool>() {
                        lit
                    } else {
                        -lit
                    }
                })
                .collect()
        })
        .collect();
    Qbf { existential: (1..=n_exists as u32).collect(), universal: (n_exists as u32 + 1..=n as u32).collect(), clauses }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_block_formula() {
        let f = parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(f.existential, vec![1]);
        assert_eq!(f.universal, vec![2]);
        assert_eq!(f.clauses, vec![vec![1, 2]]);
        assert_eq!(parse_qdimacs(&f.to_qdimacs()).unwrap(), f);
    }

    #[test]
    fn empty_matrix_is_true() {
        let f = parse_qdimacs("p cnf 1 0\ne 1 0\n").unwrap();
        assert!(f.clauses.is_empty());
        assert!(brute_force_qbf(&f).unwrap());
    }

    #[test]
    fn deeper_prefix_is_rejected() {
        let e = parse_qdimacs("p cnf 3 0\ne 1 0\na 2 0\ne 3 0\n").unwrap_err();
        assert_eq!(e, QbfError::UnsupportedAlternation { line: 4 });
        let e = parse_qdimacs("p cnf 2 0\na 1 0\ne 2 0\n").unwrap_err();
        assert_eq!(e, QbfError::UnsupportedAlternation { line: 3 });
    }

    #[test]
    fn parse_errors_carry_lines() {
        match parse_qdimacs("p cnf 2 1\ne 1 0\na 2 0\n1 x 0\n").unwrap_err() {
            QbfError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_qdimacs("e 1 0\n").unwrap_err() {
            QbfError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_truth_values() {
        let t = |s: &str| brute_force_qbf(&parse_qdimacs(s).unwrap()).unwrap();
        assert!(t("p cnf 1 1\ne 1 0\n1 0\n"));
        assert!(!t("p cnf 2 2\ne 1 0\na 2 0\n1 2 0\n-1 -2 0\n"));
        assert!(t("p cnf 2 1\ne 1 0\na 2 0\n1 2 0\n"));
        assert!(!t("p cnf 1 2\ne 1 0\n1 0\n-1 0\n"));
    }

    #[test]
    fn reduction_shapes() {
        let f = parse_qdimacs("p cnf 1 1\ne 1 0\n1 0\n").unwrap();
        let g = reduce_to_scmas(&f).unwrap();
        assert_eq!((g.n_leader(), g.n_follower()), (2, 1));
        assert_eq!(g.rewards.get(1, 0, 0), (1.0, -1.0));
        assert_eq!(g.rewards.get(0, 0, 0), (0.0, 0.0));
    }

    #[test]
    fn exhaustive_family_size() {
        // 8 nonempty clauses over 2 variables: 1 + 8 + 64 formulas.
        assert_eq!(exhaustive_family(1).unwrap().len(), 73);
    }
}
