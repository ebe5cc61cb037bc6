//! Hand-crafted games. All use two independent exogenous variables with ten
//! equiprobable bins, one per agent, so instinct probabilities are exact
//! multiples of 0.1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GeneratorError;
use crate::game::{GameMeta, InformationStructure, RewardTable, ScmasGame};
use crate::scm::ScmBuilder;

pub const SYNTHETIC_NAMES: [&str; 7] = [
    "coordination",
    "battle_of_sexes",
    "stag_hunt",
    "anti_coordination",
    "prisoners_dilemma_m1",
    "prisoners_dilemma_m2",
    "appendix_d_coordination",
];

/// The five game types of the synthetic experiment suite.
pub const SYNTHETIC_SUITE: [&str; 5] =
    ["coordination", "battle_of_sexes", "stag_hunt", "anti_coordination", "prisoners_dilemma_m1"];

const BINS: usize = 10;

/// Builds a named synthetic game. The four classic 2×2 games get a small
/// seeded jitter on every payoff cell and a seeded instinct strength; the
/// prisoner's dilemma and the 3×3 coordination game are fixed.
pub fn synthetic(name: &str, seed: u64) -> Result<ScmasGame, GeneratorError> {
    let meta = GameMeta { name: name.to_string(), seed: Some(seed), params: None };
    let info = InformationStructure::Mechanism;
    let game = match name {
        "coordination" => classic(&[[(4.0, 4.0), (0.0, 0.0)], [(0.0, 0.0), (2.0, 2.0)]], false, seed),
        "battle_of_sexes" => classic(&[[(3.0, 2.0), (0.0, 0.0)], [(0.0, 0.0), (2.0, 3.0)]], false, seed),
        "stag_hunt" => classic(&[[(4.0, 4.0), (0.0, 3.0)], [(3.0, 0.0), (3.0, 3.0)]], false, seed),
        "anti_coordination" => classic(&[[(0.0, 0.0), (3.0, 2.0)], [(2.0, 3.0), (0.0, 0.0)]], true, seed),
        "prisoners_dilemma_m1" => prisoners_dilemma(7),
        "prisoners_dilemma_m2" => prisoners_dilemma(3),
        "appendix_d_coordination" => appendix_d(),
        other => {
            return Err(GeneratorError::UnknownName {
                kind: "synthetic game",
                name: other.to_string(),
                valid: SYNTHETIC_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    let (scm, rewards) = game?;
    Ok(ScmasGame::new(scm, "X_L", "X_F", rewards, info, meta)?)
}

type Parts = Result<(crate::scm::Scm, RewardTable), GeneratorError>;

/// A 2×2 game whose instincts favor outcome `(0, 0)`, or `(0, 1)` when
/// `anti` is set: the leader's instinct is action 0 on the first `k` bins,
/// and the follower's instinct answers the leader's action with the
/// favored reply on the first `k` bins. `k` ranges over 6..=9 by seed.
fn classic(base: &[[(f64, f64); 2]; 2], anti: bool, seed: u64) -> Parts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(6..=9);
    let mut cells = vec![vec![(0.0, 0.0); 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let (l, f) = base[x][y];
            cells[x][y] = (l + 0.5 * rng.random::<f64>(), f + 0.5 * rng.random::<f64>());
        }
    }
    let favored = move |x: usize| if anti { 1 - x } else { x };
    let scm = ScmBuilder::new()
        .uniform_exogenous("U_1", BINS)
        .uniform_exogenous("U_2", BINS)
        .node_fn("X_L", 2, &["U_1"], move |v| usize::from(v[0] >= k))
        .node_fn("X_F", 2, &["U_2", "X_L"], move |v| if v[0] < k { favored(v[1]) } else { 1 - favored(v[1]) })
        .action("X_L")
        .action("X_F")
        .build()?;
    Ok((scm, RewardTable::from_matrix(&cells)))
}

/// Action 1 is cooperate, 0 defect; `(T, R, P, S) = (5, 3, 1, 0)`. The
/// leader's instinct cooperates on the first `coop_bins` bins; the
/// follower's instinct reciprocates on 7 of 10 bins and defects otherwise.
fn prisoners_dilemma(coop_bins: usize) -> Parts {
    let scm = ScmBuilder::new()
        .uniform_exogenous("U_1", BINS)
        .uniform_exogenous("U_2", BINS)
        .node_fn("X_L", 2, &["U_1"], move |v| usize::from(v[0] < coop_bins))
        .node_fn("X_F", 2, &["U_2", "X_L"], |v| if v[0] < 7 { v[1] } else { 0 })
        .action("X_L")
        .action("X_F")
        .build()?;
    let rewards = RewardTable::from_matrix(&[vec![(1.0, 1.0), (5.0, 0.0)], vec![(0.0, 5.0), (3.0, 3.0)]]);
    Ok((scm, rewards))
}

/// 3×3 coordination with Pareto-ranked diagonal `(15, 15)`, `(10, 10)`,
/// `(5, 5)` and zeros elsewhere. The leader's instinct is action 0 on 8
/// bins, 1 and 2 on one bin each; the follower's instinct copies the
/// leader's action on 8 bins and shifts it by one otherwise.
fn appendix_d() -> Parts {
    let scm = ScmBuilder::new()
        .uniform_exogenous("U_1", BINS)
        .uniform_exogenous("U_2", BINS)
        .node_fn("X_L", 3, &["U_1"], |v| match v[0] {
            8 => 1,
            9 => 2,
            _ => 0,
        })
        .node_fn("X_F", 3, &["U_2", "X_L"], |v| if v[0] < 8 { v[1] } else { (v[1] + 1) % 3 })
        .action("X_L")
        .action("X_F")
        .build()?;
    let rewards = RewardTable::from_fn(3, 3, 1, |x, y, _| {
        if x == y {
            let v = [15.0, 10.0, 5.0][x];
            (v, v)
        } else {
            (0.0, 0.0)
        }
    });
    Ok((scm, rewards))
}
