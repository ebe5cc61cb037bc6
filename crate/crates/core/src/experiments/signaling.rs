//! Leader types as a signaling game, and the welfare of uniform play over
//! pure equilibria.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::game::{expected_payoffs, FollowerPolicy, InformationStructure, LayeredStrategy, Response, ScmasGame};
use crate::solvers::{EquilibriumProfile, SolverError};

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalingClass {
    Separating,
    Pooling,
    Semi,
}

/// Classifies one equilibrium per leader type by the layer each type
/// signals: all distinct is separating, all equal is pooling.
pub fn classify_signaling(
    type_games: &[ScmasGame],
    profiles: &[EquilibriumProfile],
) -> Result<SignalingClass, ExperimentError> {
    let mismatch = |m: String| ExperimentError::Solver(SolverError::TypeMismatch(m));
    if type_games.len() < 2 {
        return Err(ExperimentError::Solver(SolverError::TypeSetTooSmall(type_games.len())));
    }
    if profiles.len() != type_games.len() {
        return Err(mismatch(format!("{} profiles for {} leader types", profiles.len(), type_games.len())));
    }
    let shape = (type_games[0].n_leader(), type_games[0].n_follower());
    for g in type_games {
        if g.info != InformationStructure::Mechanism {
            return Err(mismatch(format!(
                "`{}` has {} information, signaling needs mechanism",
                g.meta.name,
                g.info.label()
            )));
        }
        if (g.n_leader(), g.n_follower()) != shape {
            return Err(mismatch("leader types differ in action shape".into()));
        }
    }
    let layers: Vec<_> = profiles.iter().map(|p| p.leader.layer()).collect();
    let distinct = layers.iter().enumerate().all(|(i, a)| layers[..i].iter().all(|b| b != a));
    Ok(if layers.iter().all(|l| *l == layers[0]) {
        SignalingClass::Pooling
    } else if distinct {
        SignalingClass::Separating
    } else {
        SignalingClass::Semi
    })
}

/// Expected welfare when play is uniform over the pure Nash equilibria of
/// the induced matrix `(E[Y_L | do(x_L, x_F)], E[Y_F | do(x_L, x_F)])`.
pub fn uniform_equilibrium_welfare(game: &ScmasGame) -> Result<f64, ExperimentError> {
    let (nl, nf) = (game.n_leader(), game.n_follower());
    let mut matrix = vec![vec![(0.0, 0.0); nf]; nl];
    for (x, row) in matrix.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            let follower = FollowerPolicy::constant(game, Response::Play(LayeredStrategy::L2 { action: y }));
            *cell = expected_payoffs(game, &LayeredStrategy::L2 { action: x }, &follower).map_err(SolverError::from)?;
        }
    }
    let mut welfare = Vec::new();
    for x in 0..nl {
        for y in 0..nf {
            let (l, f) = matrix[x][y];
            let leader_best = (0..nl).all(|x2| matrix[x2][y].0 <= l + TOLERANCE);
            let follower_best = (0..nf).all(|y2| matrix[x][y2].1 <= f + TOLERANCE);
            if leader_best && follower_best {
                welfare.push(l + f);
            }
        }
    }
    if welfare.is_empty() {
        return Err(ExperimentError::NoPureEquilibrium);
    }
    Ok(welfare.iter().sum::<f64>() / welfare.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::synthetic;
    use crate::solvers::{exact_scne, SolverConfig};

    #[test]
    fn appendix_d_uniform_welfare() {
        let g = synthetic("appendix_d_coordination", 1).unwrap();
        assert!((uniform_equilibrium_welfare(&g).unwrap() - 20.0).abs() < 1e-12);
        let mut doubled = g.clone();
        doubled.rewards = g.rewards.scaled(2.0);
        assert!((uniform_equilibrium_welfare(&doubled).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn classes() {
        let g = synthetic("prisoners_dilemma_m1", 0).unwrap();
        let p = exact_scne(&g, &SolverConfig::default()).unwrap();
        let with = |layer: LayeredStrategy| EquilibriumProfile { leader: layer, ..p.clone() };
        let l1 = with(LayeredStrategy::L1);
        let l2 = with(LayeredStrategy::L2 { action: 0 });
        let l3 = with(LayeredStrategy::identity(2));
        let types = vec![g.clone(), g.clone()];
        assert_eq!(classify_signaling(&types, &[l1.clone(), l3]).unwrap(), SignalingClass::Separating);
        assert_eq!(classify_signaling(&types, &[l1.clone(), l1.clone()]).unwrap(), SignalingClass::Pooling);
        let three = vec![g.clone(), g.clone(), g.clone()];
        assert_eq!(classify_signaling(&three, &[l1.clone(), l1.clone(), l2]).unwrap(), SignalingClass::Semi);
        assert!(classify_signaling(&types, std::slice::from_ref(&l1)).is_err());
        let perfect = vec![g.with_info(InformationStructure::Perfect), g];
        assert!(classify_signaling(&perfect, &[l1.clone(), l1]).is_err());
    }
}
