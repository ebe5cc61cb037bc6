//! Equilibrium computation by backward induction over layered strategies.
//!
//! Every solver shares one core: for each leader candidate (enumerated in
//! tie-break order) the follower's posterior at every observation is formed
//! from the committed strategy, the follower replies, and the leader keeps
//! the first candidate that no later one strictly beats.

mod refine;

pub use refine::{forward_induction_filter, trembling_hand_check, SignalingProfile, DEFAULT_TREMBLE_GRID};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{beats, best_follower, satisficing_set, BeliefPoint, Evaluator, Reply, Totals, Worlds};
use crate::game::{
    FollowerPolicy, GameError, InformationStructure, Layer, LayeredStrategy, Observation, Response, ScmasGame,
};
use crate::scm::{ScmError, DEFAULT_ENUMERATION_CAP};

pub const EXACT_CAP_ENV: &str = "SCMAS_EXACT_CAP";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("action space of size {size} exceeds the exact-solver cap {cap}")]
    ActionSpaceTooLarge { size: usize, cap: usize },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("need at least 2 leader types, got {0}")]
    TypeSetTooSmall(usize),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

impl From<ScmError> for SolverError {
    fn from(e: ScmError) -> Self {
        SolverError::Game(GameError::Scm(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest action support the exact solvers accept.
    pub max_actions: usize,
    /// Largest number of leader L3 maps enumerated when they cannot be
    /// ruled out analytically.
    pub map_budget: u64,
    pub enumeration_cap: usize,
    /// Relative tolerance under which two payoffs count as tied.
    pub tie_tolerance: f64,
    /// `C` in `N = ceil(C / ε² · ln max(|X_L|, |X_F|, 2))`.
    pub sample_constant: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_actions: 8,
            map_budget: 1_000_000,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            tie_tolerance: 1e-12,
            sample_constant: 0.5,
        }
    }
}

impl SolverConfig {
    /// Defaults, with `max_actions` taken from `SCMAS_EXACT_CAP` when set.
    pub fn from_env() -> Result<Self, SolverError> {
        let mut cfg = Self::default();
        if let Ok(v) = std::env::var(EXACT_CAP_ENV) {
            cfg.max_actions = v.trim().parse().map_err(|_| {
                SolverError::InvalidParameter(format!("{EXACT_CAP_ENV}={v:?} is not a positive integer"))
            })?;
            if cfg.max_actions == 0 {
                return Err(SolverError::InvalidParameter(format!("{EXACT_CAP_ENV} must be positive")));
            }
        }
        Ok(cfg)
    }

    /// Sample count used by the approximate solver.
    pub fn samples_for(&self, epsilon: f64, n_leader: usize, n_follower: usize) -> usize {
        let k = n_leader.max(n_follower).max(2) as f64;
        (self.sample_constant / (epsilon * epsilon) * k.ln()).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Exact,
    ClassicalL2,
    Approx { epsilon: f64, seed: u64, samples: usize },
    Satisficing { eps_sat: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub leader: LayeredStrategy,
    pub follower: FollowerPolicy,
    pub leader_payoff: f64,
    pub follower_payoff: f64,
    pub welfare: f64,
    pub method: Method,
    /// `outcome[x_L][x_F]`: probability of each action pair on the path of
    /// play.
    pub outcome: Vec<Vec<f64>>,
}

impl EquilibriumProfile {
    /// The most likely action pair, lowest indices on ties.
    pub fn modal_outcome(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (x, row) in self.outcome.iter().enumerate() {
            for (y, p) in row.iter().enumerate() {
                if *p > self.outcome[best.0][best.1] + 1e-12 {
                    best = (x, y);
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy)]
enum FollowerModel {
    Rational(&'static [Layer]),
    Satisfice(f64),
}

struct Candidate {
    leader: LayeredStrategy,
    replies: Vec<Reply>,
    totals: Totals,
}

struct Solve<'a> {
    eval: Evaluator<'a>,
    leader_layers: &'static [Layer],
    follower: FollowerModel,
    cfg: &'a SolverConfig,
}

impl<'a> Solve<'a> {
    /// Leader candidates in tie-break order.
    fn candidates(&self) -> Result<Vec<LayeredStrategy>, SolverError> {
        let nl = self.eval.worlds.nl;
        let mut out = Vec::new();
        for layer in self.leader_layers {
            match layer {
                Layer::L1 => out.push(LayeredStrategy::L1),
                Layer::L2 => out.extend((0..nl).map(|action| LayeredStrategy::L2 { action })),
                Layer::L3 => {
                    if self.eval.l3_reducible(self.cfg.tie_tolerance) {
                        continue;
                    }
                    let count = (nl as u64).checked_pow(nl as u32).unwrap_or(u64::MAX);
                    if count > self.cfg.map_budget {
                        return Err(SolverError::ActionSpaceTooLarge { size: nl, cap: self.cfg.max_actions });
                    }
                    out.extend(crate::scm::tuples(&vec![nl; nl]).map(|map| LayeredStrategy::L3 { map }));
                }
            }
        }
        Ok(out)
    }

    fn belief_at(&self, on_path: &[BeliefPoint], k: usize) -> Vec<BeliefPoint> {
        if on_path.iter().any(|b| b.w > 0.0) {
            on_path.to_vec()
        } else {
            self.eval.default_belief(&self.eval.observation(k))
        }
    }

    fn reply(&self, belief: &[BeliefPoint]) -> Reply {
        let nf = self.eval.worlds.nf;
        let tol = self.cfg.tie_tolerance;
        let points = self.eval.points(belief);
        match self.follower {
            FollowerModel::Rational(layers) => Reply::Play(best_follower(points, nf, layers, tol).0),
            FollowerModel::Satisfice(eps) => Reply::Uniform(satisficing_set(points, nf, eps, tol)),
        }
    }

    fn replies_for(&self, leader: &LayeredStrategy) -> Vec<Reply> {
        let beliefs = self.eval.beliefs(leader);
        beliefs.iter().enumerate().map(|(k, b)| self.reply(&self.belief_at(b, k))).collect()
    }

    /// Backward induction. `perturb` rewrites the follower replies before
    /// the leader evaluates them.
    fn run(&self, perturb: impl Fn(Vec<Reply>) -> Vec<Reply>) -> Result<Candidate, SolverError> {
        let mut best: Option<Candidate> = None;
        for leader in self.candidates()? {
            let replies = perturb(self.replies_for(&leader));
            let totals = self.eval.evaluate(&leader, &replies);
            let better = match &best {
                None => true,
                Some(b) => beats(totals.leader, b.totals.leader, self.cfg.tie_tolerance),
            };
            if better {
                best = Some(Candidate { leader, replies, totals });
            }
        }
        Ok(best.expect("leader always has an L2 candidate"))
    }

    fn profile(&self, c: Candidate, method: Method) -> EquilibriumProfile {
        let nf = self.eval.worlds.nf;
        let follower = c
            .replies
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let response = match r {
                    Reply::Play(s) => Response::Play(s.clone()),
                    Reply::Uniform(set) => Response::Satisfice { acceptable: set.clone() },
                    Reply::Tremble { base, .. } => Response::Play(base.clone()),
                };
                (self.eval.observation(k), response)
            })
            .collect();
        EquilibriumProfile {
            leader: c.leader,
            follower,
            leader_payoff: c.totals.leader,
            follower_payoff: c.totals.follower,
            welfare: c.totals.leader + c.totals.follower,
            method,
            outcome: c.totals.outcome.chunks(nf).map(|r| r.to_vec()).collect(),
        }
    }
}

fn check_sizes(game: &ScmasGame, cfg: &SolverConfig) -> Result<(), SolverError> {
    game.ensure_valid()?;
    let size = game.n_leader().max(game.n_follower());
    if size > cfg.max_actions {
        return Err(SolverError::ActionSpaceTooLarge { size, cap: cfg.max_actions });
    }
    Ok(())
}

fn classical_info(info: InformationStructure) -> InformationStructure {
    match info {
        InformationStructure::Mechanism => InformationStructure::Perfect,
        other => other,
    }
}

/// Exact sequential causal Nash equilibrium.
pub fn exact_scne(game: &ScmasGame, cfg: &SolverConfig) -> Result<EquilibriumProfile, SolverError> {
    check_sizes(game, cfg)?;
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let solve = Solve {
        eval: Evaluator::new(game, &worlds, game.info),
        leader_layers: &Layer::ALL,
        follower: FollowerModel::Rational(&Layer::ALL),
        cfg,
    };
    let c = solve.run(|r| r)?;
    Ok(solve.profile(c, Method::Exact))
}

/// Classical Stackelberg equilibrium: both agents restricted to L2, the
/// follower observing only the action signal.
pub fn classical_stackelberg(game: &ScmasGame, cfg: &SolverConfig) -> Result<EquilibriumProfile, SolverError> {
    check_sizes(game, cfg)?;
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let solve = Solve {
        eval: Evaluator::new(game, &worlds, classical_info(game.info)),
        leader_layers: &[Layer::L2],
        follower: FollowerModel::Rational(&[Layer::L2]),
        cfg,
    };
    let c = solve.run(|r| r)?;
    Ok(solve.profile(c, Method::ClassicalL2))
}

/// Sampling approximation: the same backward induction over
/// `N = ceil(C ε⁻² ln max(|X_L|, |X_F|, 2))` sampled exogenous states.
/// Reported payoffs are the sample estimates.
pub fn approx_scne(
    game: &ScmasGame,
    epsilon: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<EquilibriumProfile, SolverError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SolverError::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    game.ensure_valid()?;
    let samples = cfg.samples_for(epsilon, game.n_leader(), game.n_follower());
    let draws = game.scm.sample_exogenous(seed, samples)?;
    let worlds = Worlds::sampled(game, &draws)?;
    // Reducibility is a property of the model, not of the sample: an
    // empirical conditional almost never matches across instinct values.
    let exact_reducible = Worlds::exact(game, cfg.enumeration_cap)
        .map(|w| Evaluator::new(game, &w, game.info).l3_reducible(cfg.tie_tolerance))
        .unwrap_or(false);
    let solve = Solve {
        eval: Evaluator::new(game, &worlds, game.info),
        leader_layers: if exact_reducible { &[Layer::L1, Layer::L2] } else { &Layer::ALL },
        follower: FollowerModel::Rational(&Layer::ALL),
        cfg,
    };
    let c = solve.run(|r| r)?;
    Ok(solve.profile(c, Method::Approx { epsilon, seed, samples }))
}

/// Equilibrium against an ε-rational follower who mixes uniformly over every
/// action within `eps_sat` of its best expected payoff.
pub fn satisficing_scne(game: &ScmasGame, eps_sat: f64, cfg: &SolverConfig) -> Result<EquilibriumProfile, SolverError> {
    if !(eps_sat >= 0.0 && eps_sat.is_finite()) {
        return Err(SolverError::InvalidParameter(format!("eps_sat must be >= 0, got {eps_sat}")));
    }
    check_sizes(game, cfg)?;
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let solve = Solve {
        eval: Evaluator::new(game, &worlds, game.info),
        leader_layers: &Layer::ALL,
        follower: FollowerModel::Satisfice(eps_sat),
        cfg,
    };
    let c = solve.run(|r| r)?;
    Ok(solve.profile(c, Method::Satisficing { eps_sat }))
}

/// The follower's best strategy within `layer` at an observation, with the
/// leader's move taken at face value (prior over the exogenous state, the
/// observed action as `x_L`, and, when the layer is observed to be L1, the
/// leader's instinct equal to that action).
pub fn follower_best_response(
    game: &ScmasGame,
    observation: &Observation,
    layer: Layer,
    cfg: &SolverConfig,
) -> Result<LayeredStrategy, SolverError> {
    game.ensure_valid()?;
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let eval = Evaluator::new(game, &worlds, game.info);
    let belief = eval.default_belief(&checked_observation(&eval, observation)?);
    Ok(best_follower(eval.points(&belief), game.n_follower(), &[layer], cfg.tie_tolerance).0)
}

/// As [`follower_best_response`], but with the posterior implied by a known
/// leader commitment. Falls back to the face-value belief off path.
pub fn follower_best_response_to(
    game: &ScmasGame,
    leader: &LayeredStrategy,
    observation: &Observation,
    layer: Layer,
    cfg: &SolverConfig,
) -> Result<LayeredStrategy, SolverError> {
    game.ensure_valid()?;
    leader.check(game.n_leader())?;
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let eval = Evaluator::new(game, &worlds, game.info);
    let obs = checked_observation(&eval, observation)?;
    let k = eval.index_of(&obs).expect("checked");
    let on_path = eval.beliefs(leader).swap_remove(k);
    let belief = if on_path.iter().any(|b| b.w > 0.0) { on_path } else { eval.default_belief(&obs) };
    Ok(best_follower(eval.points(&belief), game.n_follower(), &[layer], cfg.tie_tolerance).0)
}

fn checked_observation(eval: &Evaluator, obs: &Observation) -> Result<Observation, SolverError> {
    match eval.index_of(obs) {
        Some(_) => Ok(*obs),
        None => Err(SolverError::InvalidParameter(format!(
            "observation {obs} cannot occur under this information structure"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameMeta, RewardTable};
    use crate::scm::ScmBuilder;

    fn appendix_d() -> ScmasGame {
        let scm = ScmBuilder::new()
            .uniform_exogenous("U", 10)
            .node_fn("XL", 3, &["U"], |p| match p[0] {
                8 => 1,
                9 => 2,
                _ => 0,
            })
            .node_fn("XF", 3, &["U", "XL"], |p| if p[0] < 8 { p[1] } else { (p[1] + 1) % 3 })
            .action("XL")
            .action("XF")
            .build()
            .unwrap();
        let rewards = RewardTable::from_fn(3, 3, 1, |x, y, _| {
            if x == y {
                let v = [15.0, 10.0, 5.0][x];
                (v, v)
            } else {
                (0.0, 0.0)
            }
        });
        ScmasGame::new(scm, "XL", "XF", rewards, InformationStructure::Mechanism, GameMeta::default()).unwrap()
    }

    #[test]
    fn appendix_d_all_methods_pick_top_outcome() {
        let g = appendix_d();
        let cfg = SolverConfig::default();
        for p in [
            exact_scne(&g, &cfg).unwrap(),
            classical_stackelberg(&g, &cfg).unwrap(),
            satisficing_scne(&g, 0.0, &cfg).unwrap(),
        ] {
            assert_eq!(p.modal_outcome(), (0, 0), "{:?}", p.method);
            assert!((p.welfare - 30.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_satisficing_mixes_over_everything() {
        let g = appendix_d();
        let p = satisficing_scne(&g, 15.0, &SolverConfig::default()).unwrap();
        assert_eq!(p.leader, LayeredStrategy::L2 { action: 0 });
        assert!((p.leader_payoff - 5.0).abs() < 1e-12);
        let obs = Observation::with_layer(0, Layer::L2);
        assert_eq!(p.follower.get(&obs), Some(&Response::Satisfice { acceptable: vec![0, 1, 2] }));
    }

    #[test]
    fn follower_best_response_at_face_value() {
        let g = appendix_d();
        let cfg = SolverConfig::default();
        let obs = Observation::with_layer(0, Layer::L2);
        assert_eq!(follower_best_response(&g, &obs, Layer::L2, &cfg).unwrap(), LayeredStrategy::L2 { action: 0 });
        let bad = Observation::action(0);
        assert!(follower_best_response(&g, &bad, Layer::L2, &cfg).is_err());
    }

    #[test]
    fn sample_count_formula() {
        let cfg = SolverConfig::default();
        // 0.5 / 0.01 * ln 2 = 34.66
        assert_eq!(cfg.samples_for(0.1, 2, 2), 35);
        assert_eq!(cfg.samples_for(0.1, 1, 1), 35);
        assert_eq!(cfg.samples_for(0.1, 5, 3), (50.0 * 5f64.ln()).ceil() as usize);
    }

    #[test]
    fn oversized_games_are_rejected() {
        let g = appendix_d();
        let cfg = SolverConfig { max_actions: 2, ..SolverConfig::default() };
        assert_eq!(exact_scne(&g, &cfg).unwrap_err(), SolverError::ActionSpaceTooLarge { size: 3, cap: 2 });
    }
}
