//! Game instance generators: seeded random instances over ten causal
//! topologies, hand-crafted 2×2 and 3×3 games, and the procurement scenario.

mod procurement;
mod synthetic;

pub use procurement::{procurement, ContractorType, BIDS, MECHANISMS};
pub use synthetic::{synthetic, SYNTHETIC_NAMES, SYNTHETIC_SUITE};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, GameMeta, InformationStructure, RewardTable, ScmasGame};
use crate::scm::{tuples, Scm, ScmBuilder, ScmError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("unknown {kind} `{name}`; expected one of: {}", .valid.join(", "))]
    UnknownName { kind: &'static str, name: String, valid: Vec<String> },
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<ScmError> for GeneratorError {
    fn from(e: ScmError) -> Self {
        GeneratorError::Game(GameError::Scm(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "chain-3")]
    Chain3,
    #[serde(rename = "chain-5")]
    Chain5,
    #[serde(rename = "fork")]
    Fork,
    #[serde(rename = "collider")]
    Collider,
    #[serde(rename = "diamond")]
    Diamond,
    #[serde(rename = "fork+collider")]
    ForkCollider,
    #[serde(rename = "leader-cycle")]
    LeaderCycle,
    #[serde(rename = "follower-cycle")]
    FollowerCycle,
    #[serde(rename = "confounded")]
    Confounded,
    #[serde(rename = "independent")]
    Independent,
}

impl Topology {
    pub const ALL: [Topology; 10] = [
        Topology::Chain3,
        Topology::Chain5,
        Topology::Fork,
        Topology::Collider,
        Topology::Diamond,
        Topology::ForkCollider,
        Topology::LeaderCycle,
        Topology::FollowerCycle,
        Topology::Confounded,
        Topology::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Chain3 => "chain-3",
            Topology::Chain5 => "chain-5",
            Topology::Fork => "fork",
            Topology::Collider => "collider",
            Topology::Diamond => "diamond",
            Topology::ForkCollider => "fork+collider",
            Topology::LeaderCycle => "leader-cycle",
            Topology::FollowerCycle => "follower-cycle",
            Topology::Confounded => "confounded",
            Topology::Independent => "independent",
        }
    }

    pub fn is_cyclic(self) -> bool {
        matches!(self, Topology::LeaderCycle | Topology::FollowerCycle)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topology::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| GeneratorError::UnknownName {
            kind: "topology",
            name: s.to_string(),
            valid: Topology::ALL.iter().map(|t| t.name().to_string()).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffDist {
    /// Uniform on `[0, 10]`.
    Uniform,
    /// `Normal(5, 2)` clamped to `[0, 10]`.
    Normal,
    /// `10 u²` with `u` uniform on `[0, 1]`.
    Skewed,
}

impl PayoffDist {
    pub const ALL: [PayoffDist; 3] = [PayoffDist::Uniform, PayoffDist::Normal, PayoffDist::Skewed];

    pub fn name(self) -> &'static str {
        match self {
            PayoffDist::Uniform => "uniform",
            PayoffDist::Normal => "normal",
            PayoffDist::Skewed => "skewed",
        }
    }

    pub fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            PayoffDist::Uniform => 10.0 * rng.random::<f64>(),
            PayoffDist::Normal => Normal::<f64>::new(5.0, 2.0).expect("fixed parameters").sample(rng).clamp(0.0, 10.0),
            PayoffDist::Skewed => {
                let u: f64 = rng.random();
                10.0 * u * u
            }
        }
    }
}

impl fmt::Display for PayoffDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PayoffDist {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PayoffDist::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| GeneratorError::UnknownName {
            kind: "payoff distribution",
            name: s.to_string(),
            valid: PayoffDist::ALL.iter().map(|d| d.name().to_string()).collect(),
        })
    }
}

pub const NOISE_LEVELS: [f64; 3] = [0.1, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_leader_actions: usize,
    pub n_follower_actions: usize,
    pub topology: Topology,
    pub info: InformationStructure,
    pub payoff_dist: PayoffDist,
    /// Probability that an agent's natural mechanism picks its classical
    /// Stackelberg action.
    pub instinct_quality: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        for (name, n) in [("n_leader_actions", self.n_leader_actions), ("n_follower_actions", self.n_follower_actions)]
        {
            if !(2..=5).contains(&n) {
                return Err(GeneratorError::InvalidParams(format!("{name} = {n} is outside [2, 5]")));
            }
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<(), GeneratorError> {
        if !(0.2..=0.8).contains(&self.instinct_quality) {
            return Err(GeneratorError::InvalidParams(format!(
                "instinct_quality = {} is outside [0.2, 0.8]",
                self.instinct_quality
            )));
        }
        if let InformationStructure::Imperfect { sigma } = self.info {
            if !NOISE_LEVELS.contains(&sigma) {
                return Err(GeneratorError::InvalidParams(format!(
                    "imperfect-information noise {sigma} is not one of {NOISE_LEVELS:?}"
                )));
            }
        }
        Ok(())
    }
}

/// A seeded random instance.
///
/// Each agent's instinct is `(target + offset) mod n`, where the offset is
/// `0` with probability `instinct_quality` and uniform over the other values
/// otherwise; the leader's target is its classical Stackelberg action and
/// the follower's is its best reply to the leader's action. The topology
/// decides how the offset reaches the action node.
pub fn random_instance(params: &GeneratorParams) -> Result<ScmasGame, GeneratorError> {
    params.validate()?;
    build_random(params)
}

/// A random instance for scaling benchmarks: any action count in `[2, 20]`,
/// independent topology, perfect information, uniform payoffs.
pub fn bench_instance(n_actions: usize, seed: u64) -> Result<ScmasGame, GeneratorError> {
    if !(2..=20).contains(&n_actions) {
        return Err(GeneratorError::InvalidParams(format!("benchmark size {n_actions} is outside [2, 20]")));
    }
    let params = GeneratorParams {
        n_leader_actions: n_actions,
        n_follower_actions: n_actions,
        topology: Topology::Independent,
        info: InformationStructure::Perfect,
        payoff_dist: PayoffDist::Uniform,
        instinct_quality: 0.5,
        seed,
    };
    params.validate_common()?;
    build_random(&params)
}

fn build_random(p: &GeneratorParams) -> Result<ScmasGame, GeneratorError> {
    let (nl, nf) = (p.n_leader_actions, p.n_follower_actions);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rewards = RewardTable::from_matrix(
        &(0..nl)
            .map(|_| (0..nf).map(|_| (p.payoff_dist.sample(&mut rng), p.payoff_dist.sample(&mut rng))).collect())
            .collect::<Vec<_>>(),
    );
    let (leader_target, follower_reply) = stackelberg_targets(&rewards);
    let scm = topology_scm(p, leader_target, &follower_reply)?;
    let meta =
        GameMeta { name: format!("random-{}-{nl}x{nf}", p.topology), seed: Some(p.seed), params: Some(p.clone()) };
    Ok(ScmasGame::new(scm, "X_L", "X_F", rewards, p.info, meta)?)
}

/// Pure-strategy Stackelberg actions of a context-free table: the follower's
/// best reply to each leader action and the leader's best commitment, lowest
/// index on ties.
pub(crate) fn stackelberg_targets(r: &RewardTable) -> (usize, Vec<usize>) {
    let argmax = |n: usize, f: &dyn Fn(usize) -> f64| (1..n).fold(0, |best, i| if f(i) > f(best) { i } else { best });
    let reply: Vec<usize> = (0..r.n_leader()).map(|x| argmax(r.n_follower(), &|y| r.get(x, y, 0).1)).collect();
    let lead = argmax(r.n_leader(), &|x| r.get(x, reply[x], 0).0);
    (lead, reply)
}

/// Offset prior: `q` on 0, the rest spread evenly.
fn offset_prior(n: usize, q: f64) -> Vec<f64> {
    let rest = (1.0 - q) / (n - 1) as f64;
    (0..n).map(|i| if i == 0 { q } else { rest }).collect()
}

fn table(sizes: &[usize], f: impl Fn(&[usize]) -> usize) -> Vec<usize> {
    tuples(sizes).map(|t| f(&t)).collect()
}

fn topology_scm(p: &GeneratorParams, a: usize, reply: &[usize]) -> Result<Scm, ScmError> {
    let (nl, nf, q) = (p.n_leader_actions, p.n_follower_actions, p.instinct_quality);
    let reply = reply.to_vec();
    let leader = move |off: usize| (a + off) % nl;
    let follower = move |x: usize, off: usize| (reply[x] + off) % nf;
    let copy = |v: &[usize]| v[0];
    let b = ScmBuilder::new();

    // Leader side: the node carrying the leader's offset.
    let (b, lead_src) = match p.topology {
        Topology::Chain3 | Topology::Chain5 => {
            let names: &[&str] =
                if p.topology == Topology::Chain3 { &["A", "B", "C"] } else { &["A", "B", "C", "D", "E"] };
            let mut b = b.exogenous("U_L", offset_prior(nl, q));
            let mut prev = "U_L";
            for n in names {
                b = b.node_fn(n, nl, &[prev], copy);
                prev = n;
            }
            (b, prev)
        }
        Topology::Fork | Topology::ForkCollider => (
            b.exogenous("U_L", offset_prior(nl, q)).node_fn("W", nl, &["U_L"], copy).node_fn("Z", nl, &["W"], copy),
            "W",
        ),
        Topology::Collider => (
            b.exogenous("U_G", vec![1.0 - q, q]).uniform_exogenous("U_W", nl - 1).node_fn(
                "C",
                nl,
                &["U_G", "U_W"],
                |v| if v[0] == 1 { 0 } else { 1 + v[1] },
            ),
            "C",
        ),
        Topology::Diamond => (
            b.exogenous("U_L", offset_prior(nl, q))
                .node_fn("D", nl, &["U_L"], copy)
                .node_fn("B1", nl, &["D"], copy)
                .node_fn("B2", nl, &["D"], copy)
                .node_fn("J", nl, &["B1", "B2"], copy),
            "J",
        ),
        Topology::Confounded => (
            b.exogenous("S", vec![q, 1.0 - q])
                .uniform_exogenous("V_L", nl - 1)
                .uniform_exogenous("V_F", nf - 1)
                .node_fn("O_L", nl, &["S", "V_L"], |v| if v[0] == 0 { 0 } else { 1 + v[1] }),
            "O_L",
        ),
        Topology::LeaderCycle | Topology::FollowerCycle | Topology::Independent => {
            (b.exogenous("U_L", offset_prior(nl, q)), "U_L")
        }
    };

    let b = if p.topology == Topology::LeaderCycle {
        // X_L reads its own echo M; the forward pass sees M = 0.
        b.node("X_L", nl, &[lead_src, "M"], table(&[nl, nl], |v| leader((v[0] + v[1]) % nl))).node_fn(
            "M",
            nl,
            &["X_L"],
            copy,
        )
    } else {
        b.node_fn("X_L", nl, &[lead_src], |v| leader(v[0]))
    };

    // Follower side.
    let (b, follow_src) = match p.topology {
        Topology::ForkCollider => (
            b.exogenous("U_G", vec![1.0 - q, q]).uniform_exogenous("U_W", nf - 1).node_fn(
                "C",
                nf,
                &["U_G", "U_W"],
                |v| if v[0] == 1 { 0 } else { 1 + v[1] },
            ),
            "C",
        ),
        Topology::Confounded => (b.node_fn("O_F", nf, &["S", "V_F"], |v| if v[0] == 0 { 0 } else { 1 + v[1] }), "O_F"),
        _ => (b.exogenous("U_F", offset_prior(nf, q)), "U_F"),
    };

    let b = if p.topology == Topology::FollowerCycle {
        let f = follower.clone();
        b.node("X_F", nf, &[follow_src, "X_L", "N"], table(&[nf, nl, nf], move |v| f(v[1], (v[0] + v[2]) % nf)))
            .node_fn("N", nf, &["X_F"], copy)
    } else {
        b.node_fn("X_F", nf, &[follow_src, "X_L"], move |v| follower(v[1], v[0]))
    };
    b.action("X_L").action("X_F").build()
}

/// SplitMix64 step: derives independent per-item seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
