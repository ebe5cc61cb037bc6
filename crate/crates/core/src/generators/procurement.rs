//! Government procurement: the agency commits to a contract mechanism, the
//! contractor then chooses how to bid.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GeneratorError;
use crate::game::{GameMeta, InformationStructure, RewardTable, ScmasGame};
use crate::scm::ScmBuilder;

/// Leader actions.
pub const MECHANISMS: [&str; 3] = ["fixed_price", "incentive", "audit_heavy"];
/// Follower actions.
pub const BIDS: [&str; 3] = ["truthful", "padded", "strategic"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContractorType {
    Honest,
    Opportunistic,
}

impl ContractorType {
    pub fn name(self) -> &'static str {
        match self {
            ContractorType::Honest => "honest",
            ContractorType::Opportunistic => "opportunistic",
        }
    }
}

impl fmt::Display for ContractorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContractorType {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(ContractorType::Honest),
            "opportunistic" => Ok(ContractorType::Opportunistic),
            other => Err(GeneratorError::UnknownName {
                kind: "contractor type",
                name: other.to_string(),
                valid: vec!["honest".into(), "opportunistic".into()],
            }),
        }
    }
}

/// One simulated contract. Payoffs are on a 0..10 scale; the seed adds a
/// jitter below 0.25 to every cell, too small to move any best reply.
///
/// The incentive mechanism answered by a truthful bid is the strict
/// Stackelberg outcome for both contractor types: only under a fixed price
/// does padding pay, and only for an opportunistic contractor.
pub fn procurement(contractor: ContractorType, seed: u64) -> Result<ScmasGame, GeneratorError> {
    let opportunistic = contractor == ContractorType::Opportunistic;
    let base = [
        [(5.0, 3.0), (2.0, if opportunistic { 5.0 } else { 2.0 }), (3.0, if opportunistic { 4.0 } else { 2.0 })],
        [(7.0, 4.0), (3.0, 1.0), (4.0, 2.0)],
        [(4.0, 2.5), (4.0, 0.0), (3.0, 1.0)],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Vec<(f64, f64)>> = base
        .iter()
        .map(|row| row.iter().map(|(l, f)| (l + 0.25 * rng.random::<f64>(), f + 0.25 * rng.random::<f64>())).collect())
        .collect();
    // Instinct bins: the agency leans toward incentives on 6 of 10 bins;
    // the contractor's habitual bid covers 8 of 10 bins.
    let habit = usize::from(opportunistic);
    let scm = ScmBuilder::new()
        .uniform_exogenous("U_G", 10)
        .uniform_exogenous("U_C", 10)
        .node_fn("X_L", 3, &["U_G"], |v| match v[0] {
            0..=5 => 1,
            6 | 7 => 0,
            _ => 2,
        })
        .node_fn("X_F", 3, &["U_C", "X_L"], move |v| match v[0] {
            0..=7 => habit,
            8 => 1 - habit,
            _ => 2,
        })
        .action("X_L")
        .action("X_F")
        .build()?;
    let meta = GameMeta { name: format!("procurement-{contractor}"), seed: Some(seed), params: None };
    Ok(ScmasGame::new(scm, "X_L", "X_F", RewardTable::from_matrix(&cells), InformationStructure::Perfect, meta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contractor_instinct_mass() {
        for (t, bid) in [(ContractorType::Honest, 0), (ContractorType::Opportunistic, 1)] {
            let g = procurement(t, 5).unwrap();
            let mass: f64 = g
                .scm
                .enumerate_exogenous(1000)
                .unwrap()
                .iter()
                .filter(|r| g.scm.natural_instinct(&r.values, g.follower_action).unwrap() == bid)
                .map(|r| r.prob)
                .sum();
            assert!((mass - 0.8).abs() < 1e-12, "{t}");
        }
    }
}
