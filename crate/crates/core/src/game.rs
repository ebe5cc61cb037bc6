//! Sequential causal games: one leader and one follower whose action nodes
//! live inside a structural causal model.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{Evaluator, Reply, Worlds};
use crate::generators::GeneratorParams;
use crate::scm::{NodeId, Scm, ScmError, Var, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("invalid game: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("follower policy has no response for observation {0}")]
    ObservationNotCovered(Observation),
    #[error("strategy does not fit the game: {0}")]
    StrategyMismatch(String),
    #[error("format error: {0}")]
    Format(String),
}

/// Pearl causal hierarchy layer. The derived order is the tie-break
/// preference: L1 before L2 before L3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    L1,
    L2,
    L3,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::L1, Layer::L2, Layer::L3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A layer choice together with its within-layer object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "layer")]
pub enum LayeredStrategy {
    /// Play the natural mechanism.
    L1,
    /// `do(X = action)`.
    L2 { action: usize },
    /// Observe the instinct, then play `map[instinct]`.
    L3 { map: Vec<usize> },
}

impl LayeredStrategy {
    pub fn layer(&self) -> Layer {
        match self {
            LayeredStrategy::L1 => Layer::L1,
            LayeredStrategy::L2 { .. } => Layer::L2,
            LayeredStrategy::L3 { .. } => Layer::L3,
        }
    }

    pub fn identity(n: usize) -> Self {
        LayeredStrategy::L3 { map: (0..n).collect() }
    }

    /// The action played given the agent's instinct.
    pub fn act(&self, instinct: usize) -> usize {
        match self {
            LayeredStrategy::L1 => instinct,
            LayeredStrategy::L2 { action } => *action,
            LayeredStrategy::L3 { map } => map[instinct],
        }
    }

    pub(crate) fn check(&self, n_actions: usize) -> Result<(), GameError> {
        match self {
            LayeredStrategy::L1 => Ok(()),
            LayeredStrategy::L2 { action } if *action < n_actions => Ok(()),
            LayeredStrategy::L3 { map } if map.len() == n_actions && map.iter().all(|a| *a < n_actions) => Ok(()),
            other => Err(GameError::StrategyMismatch(format!("{other:?} with {n_actions} actions"))),
        }
    }
}

impl fmt::Display for LayeredStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayeredStrategy::L1 => write!(f, "L1"),
            LayeredStrategy::L2 { action } => write!(f, "L2({action})"),
            LayeredStrategy::L3 { map } => write!(f, "L3{map:?}"),
        }
    }
}

/// What the follower observes about the leader: `I_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InformationStructure {
    /// The leader's action.
    Perfect,
    /// The leader's action and layer.
    Mechanism,
    /// The leader's action index plus rounded Gaussian noise, clamped to the
    /// action support.
    Imperfect { sigma: f64 },
}

impl InformationStructure {
    pub fn observes_layer(&self) -> bool {
        matches!(self, InformationStructure::Mechanism)
    }

    pub fn label(&self) -> String {
        match self {
            InformationStructure::Perfect => "perfect".into(),
            InformationStructure::Mechanism => "mechanism".into(),
            InformationStructure::Imperfect { sigma } => format!("imperfect({sigma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub action: Option<usize>,
    pub layer: Option<Layer>,
}

impl Observation {
    pub fn action(action: usize) -> Self {
        Self { action: Some(action), layer: None }
    }

    pub fn with_layer(action: usize, layer: Layer) -> Self {
        Self { action: Some(action), layer: Some(layer) }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.action, self.layer) {
            (Some(a), Some(l)) => write!(f, "({l}, {a})"),
            (Some(a), None) => write!(f, "({a})"),
            (None, Some(l)) => write!(f, "({l}, -)"),
            (None, None) => write!(f, "(-)"),
        }
    }
}

/// What the follower does at one observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Play(LayeredStrategy),
    /// Uniform mixture over the listed actions.
    Satisfice {
        acceptable: Vec<usize>,
    },
}

/// `σ_F`: a response for each observation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FollowerPolicy {
    responses: BTreeMap<Observation, Response>,
}

impl FollowerPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same response at every observation the game can produce.
    pub fn constant(game: &ScmasGame, response: Response) -> Self {
        game.observations().into_iter().map(|o| (o, response.clone())).collect()
    }

    pub fn insert(&mut self, observation: Observation, response: Response) {
        self.responses.insert(observation, response);
    }

    pub fn get(&self, observation: &Observation) -> Option<&Response> {
        self.responses.get(observation)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Observation, &Response)> {
        self.responses.iter()
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl FromIterator<(Observation, Response)> for FollowerPolicy {
    fn from_iter<T: IntoIterator<Item = (Observation, Response)>>(iter: T) -> Self {
        Self { responses: iter.into_iter().collect() }
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyEntry {
    observation: Observation,
    response: Response,
}

impl Serialize for FollowerPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.responses.iter().map(|(o, r)| PolicyEntry { observation: *o, response: r.clone() }))
    }
}

impl<'de> Deserialize<'de> for FollowerPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<PolicyEntry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.observation, e.response)).collect())
    }
}

/// Rewards keyed by `(x_L, x_F, context)`; each cell holds
/// `(leader, follower)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    n_leader: usize,
    n_follower: usize,
    n_context: usize,
    cells: Vec<(f64, f64)>,
}

impl RewardTable {
    pub fn from_fn(
        n_leader: usize,
        n_follower: usize,
        n_context: usize,
        f: impl Fn(usize, usize, usize) -> (f64, f64),
    ) -> Self {
        let mut cells = Vec::with_capacity(n_leader * n_follower * n_context);
        for x in 0..n_leader {
            for y in 0..n_follower {
                for c in 0..n_context {
                    cells.push(f(x, y, c));
                }
            }
        }
        Self { n_leader, n_follower, n_context, cells }
    }

    /// A context-free table from a row-major `[x_L][x_F]` matrix.
    pub fn from_matrix(rows: &[Vec<(f64, f64)>]) -> Self {
        let n_follower = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), n_follower, 1, |x, y, _| rows[x][y])
    }

    pub fn zeros(n_leader: usize, n_follower: usize) -> Self {
        Self::from_fn(n_leader, n_follower, 1, |_, _, _| (0.0, 0.0))
    }

    pub fn n_leader(&self) -> usize {
        self.n_leader
    }

    pub fn n_follower(&self) -> usize {
        self.n_follower
    }

    pub fn n_context(&self) -> usize {
        self.n_context
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, context: usize) -> (f64, f64) {
        self.cells[(x * self.n_follower + y) * self.n_context + context]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { cells: self.cells.iter().map(|(l, f)| (l * factor, f * factor)).collect(), ..self.clone() }
    }

    pub fn cells(&self) -> &[(f64, f64)] {
        &self.cells
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GameMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GeneratorParams>,
}

/// An S-CMAS with one leader and one follower.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmasGame {
    pub scm: Scm,
    pub leader_action: NodeId,
    pub follower_action: NodeId,
    /// Node whose value (under the played actions) selects the reward
    /// context. `None` means a single context.
    pub context: Option<NodeId>,
    pub leader_reward: String,
    pub follower_reward: String,
    pub rewards: RewardTable,
    pub info: InformationStructure,
    pub meta: GameMeta,
}

impl ScmasGame {
    /// Assembles a game from named action nodes and checks every invariant.
    pub fn new(
        scm: Scm,
        leader_action: &str,
        follower_action: &str,
        rewards: RewardTable,
        info: InformationStructure,
        meta: GameMeta,
    ) -> Result<Self, GameError> {
        let game = ScmasGame {
            leader_action: scm.node_id(leader_action)?,
            follower_action: scm.node_id(follower_action)?,
            scm,
            context: None,
            leader_reward: "Y_L".into(),
            follower_reward: "Y_F".into(),
            rewards,
            info,
            meta,
        };
        game.ensure_valid()?;
        Ok(game)
    }

    /// Like [`ScmasGame::new`], with rewards indexed by the value of the
    /// `context` node as a third coordinate.
    pub fn contextual(
        scm: Scm,
        leader_action: &str,
        follower_action: &str,
        context: &str,
        rewards: RewardTable,
        info: InformationStructure,
        meta: GameMeta,
    ) -> Result<Self, GameError> {
        let game = ScmasGame {
            leader_action: scm.node_id(leader_action)?,
            follower_action: scm.node_id(follower_action)?,
            context: Some(scm.node_id(context)?),
            scm,
            leader_reward: "Y_L".into(),
            follower_reward: "Y_F".into(),
            rewards,
            info,
            meta,
        };
        game.ensure_valid()?;
        Ok(game)
    }

    pub fn with_info(&self, info: InformationStructure) -> Self {
        Self { info, ..self.clone() }
    }

    pub fn n_leader(&self) -> usize {
        self.scm.node_support(self.leader_action)
    }

    pub fn n_follower(&self) -> usize {
        self.scm.node_support(self.follower_action)
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), GameError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(GameError::Invalid(violations))
        }
    }

    /// Every invariant violation, as a human-readable description. Empty iff
    /// the game is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n_nodes = self.scm.node_count();
        let known = |id: NodeId| id.0 < n_nodes;
        for (field, id) in [("leader_action", self.leader_action), ("follower_action", self.follower_action)] {
            if !known(id) {
                out.push(format!("{field} refers to unknown node #{}", id.0));
            } else if !self.scm.is_action(id) {
                out.push(format!("{field} `{}` is not declared as an action node of the SCM", self.scm.node_name(id)));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if self.leader_action == self.follower_action {
            out.push(format!(
                "leader_action and follower_action are the same node `{}`",
                self.scm.node_name(self.leader_action)
            ));
        }
        let action_names = [self.scm.node_name(self.leader_action), self.scm.node_name(self.follower_action)];
        for (field, name) in [("leader_reward", &self.leader_reward), ("follower_reward", &self.follower_reward)] {
            if action_names.contains(&name.as_str()) {
                out.push(format!("{field} `{name}` coincides with an action variable"));
            }
        }
        if self.leader_reward == self.follower_reward {
            out.push(format!("leader_reward and follower_reward share the name `{}`", self.leader_reward));
        }
        if self.scm.ancestors(self.leader_action).contains(&Var::Node(self.follower_action)) {
            out.push(format!(
                "timing: follower action `{}` is an ancestor of leader action `{}`",
                action_names[1], action_names[0]
            ));
        }
        let n_context = match self.context {
            None => 1,
            Some(c) if known(c) => self.scm.node_support(c),
            Some(c) => {
                out.push(format!("context refers to unknown node #{}", c.0));
                1
            }
        };
        let r = &self.rewards;
        if (r.n_leader, r.n_follower, r.n_context) != (self.n_leader(), self.n_follower(), n_context) {
            out.push(format!(
                "rewards have shape {}x{}x{}, expected {}x{}x{}",
                r.n_leader,
                r.n_follower,
                r.n_context,
                self.n_leader(),
                self.n_follower(),
                n_context
            ));
        }
        if r.cells.len() != r.n_leader * r.n_follower * r.n_context {
            out.push("reward table is ragged".into());
        }
        if r.cells.iter().any(|(l, f)| !l.is_finite() || !f.is_finite()) {
            out.push("rewards must be finite".into());
        }
        if let InformationStructure::Imperfect { sigma } = self.info {
            if !(sigma.is_finite() && sigma >= 0.0) {
                out.push(format!("imperfect-information noise {sigma} must be finite and >= 0"));
            }
        }
        out
    }

    /// Every observation the follower can receive under this game's
    /// information structure.
    pub fn observations(&self) -> Vec<Observation> {
        observation_space(self.n_leader(), self.info.observes_layer())
    }

    /// Draws the follower's observation of a leader move. Under imperfect
    /// information the signal is `clamp(x_L + round(N(0, σ)))`, seeded by
    /// `noise_seed`.
    pub fn observe(&self, leader_layer: Layer, x_leader: usize, noise_seed: u64) -> Observation {
        match self.info {
            InformationStructure::Perfect => Observation::action(x_leader),
            InformationStructure::Mechanism => Observation::with_layer(x_leader, leader_layer),
            InformationStructure::Imperfect { sigma } => {
                if sigma == 0.0 {
                    return Observation::action(x_leader);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
                let z: f64 = Normal::new(0.0, sigma).expect("sigma validated finite and nonnegative").sample(&mut rng);
                Observation::action(clamp_signal(x_leader as i64 + z.round() as i64, self.n_leader()))
            }
        }
    }
}

pub(crate) fn observation_space(n_leader: usize, with_layer: bool) -> Vec<Observation> {
    if with_layer {
        Layer::ALL.iter().flat_map(|l| (0..n_leader).map(move |x| Observation::with_layer(x, *l))).collect()
    } else {
        (0..n_leader).map(Observation::action).collect()
    }
}

pub(crate) fn clamp_signal(raw: i64, n: usize) -> usize {
    raw.clamp(0, n as i64 - 1) as usize
}

/// Exact `(E[Y_L], E[Y_F])` of a leader strategy against a follower policy,
/// by enumeration of the exogenous space (and the noise grid under imperfect
/// information).
pub fn expected_payoffs(
    game: &ScmasGame,
    leader: &LayeredStrategy,
    follower: &FollowerPolicy,
) -> Result<(f64, f64), GameError> {
    game.ensure_valid()?;
    leader.check(game.n_leader())?;
    let worlds = Worlds::exact(game, DEFAULT_ENUMERATION_CAP)?;
    let eval = Evaluator::new(game, &worlds, game.info);
    let mut replies = Vec::with_capacity(eval.n_observations());
    for obs in eval.observations() {
        let reply = match follower.get(&obs) {
            Some(Response::Play(s)) => {
                s.check(game.n_follower())?;
                Some(Reply::Play(s.clone()))
            }
            Some(Response::Satisfice { acceptable }) => {
                if acceptable.is_empty() || acceptable.iter().any(|a| *a >= game.n_follower()) {
                    return Err(GameError::StrategyMismatch(format!("satisficing set {acceptable:?} at {obs}")));
                }
                Some(Reply::Uniform(acceptable.clone()))
            }
            None => None,
        };
        replies.push(reply);
    }
    let visited = eval.visited_observations(leader);
    for (k, reply) in replies.iter().enumerate() {
        if visited[k] && reply.is_none() {
            return Err(GameError::ObservationNotCovered(eval.observation(k)));
        }
    }
    let replies: Vec<Reply> = replies.into_iter().map(|r| r.unwrap_or(Reply::Play(LayeredStrategy::L1))).collect();
    let totals = eval.evaluate(leader, &replies);
    Ok((totals.leader, totals.follower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::ScmBuilder;

    fn coordination() -> ScmasGame {
        let scm = ScmBuilder::new()
            .uniform_exogenous("U", 2)
            .node_fn("XL", 3, &["U"], |_| 0)
            .node_fn("XF", 3, &["XL"], |p| p[0])
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
        ScmasGame::new(scm, "XL", "XF", rewards, InformationStructure::Perfect, GameMeta::default()).unwrap()
    }

    #[test]
    fn valid_game_has_no_violations() {
        assert!(coordination().validate().is_empty());
    }

    #[test]
    fn same_action_node_is_a_violation() {
        let mut g = coordination();
        g.follower_action = g.leader_action;
        let v = g.validate();
        assert!(v.iter().any(|m| m.contains("leader_action") && m.contains("follower_action")));
    }

    #[test]
    fn follower_ancestor_of_leader_is_a_timing_violation() {
        let scm = ScmBuilder::new()
            .uniform_exogenous("U", 2)
            .node_fn("XF", 2, &["U"], |p| p[0])
            .node_fn("XL", 2, &["XF"], |p| p[0])
            .action("XL")
            .action("XF")
            .build()
            .unwrap();
        let err = ScmasGame::new(
            scm,
            "XL",
            "XF",
            RewardTable::zeros(2, 2),
            InformationStructure::Perfect,
            GameMeta::default(),
        )
        .unwrap_err();
        match err {
            GameError::Invalid(v) => assert!(v.iter().any(|m| m.starts_with("timing"))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reward_shape_and_finiteness() {
        let mut g = coordination();
        g.rewards = RewardTable::zeros(2, 3);
        assert!(g.validate().iter().any(|m| m.contains("shape")));
        let mut g = coordination();
        g.rewards = RewardTable::from_fn(3, 3, 1, |_, _, _| (f64::NAN, 0.0));
        assert!(g.validate().iter().any(|m| m.contains("finite")));
    }

    #[test]
    fn observe_by_information_structure() {
        let g = coordination();
        assert_eq!(g.observe(Layer::L2, 2, 0), Observation::action(2));
        let m = g.with_info(InformationStructure::Mechanism);
        assert_eq!(m.observe(Layer::L1, 0, 0), Observation::with_layer(0, Layer::L1));
        let i = g.with_info(InformationStructure::Imperfect { sigma: 0.0 });
        assert_eq!(i.observe(Layer::L2, 1, 99), Observation::action(1));
        let noisy = g.with_info(InformationStructure::Imperfect { sigma: 1.0 });
        for seed in 0..50 {
            let o = noisy.observe(Layer::L2, 1, seed);
            assert!(o.action.unwrap() < 3 && o.layer.is_none());
            assert_eq!(o, noisy.observe(Layer::L2, 1, seed));
        }
    }

    #[test]
    fn coordination_payoffs() {
        let g = coordination();
        let policy = FollowerPolicy::constant(&g, Response::Play(LayeredStrategy::L2 { action: 0 }));
        let (l, f) = expected_payoffs(&g, &LayeredStrategy::L2 { action: 0 }, &policy).unwrap();
        assert_eq!((l, f), (15.0, 15.0));
    }

    #[test]
    fn zero_rewards_give_zero() {
        let mut g = coordination();
        g.rewards = RewardTable::zeros(3, 3);
        let policy = FollowerPolicy::constant(&g, Response::Play(LayeredStrategy::L1));
        for s in [LayeredStrategy::L1, LayeredStrategy::L2 { action: 2 }, LayeredStrategy::identity(3)] {
            assert_eq!(expected_payoffs(&g, &s, &policy).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn missing_observation_is_reported() {
        let g = coordination();
        let mut policy = FollowerPolicy::new();
        policy.insert(Observation::action(1), Response::Play(LayeredStrategy::L1));
        let err = expected_payoffs(&g, &LayeredStrategy::L2 { action: 0 }, &policy).unwrap_err();
        assert_eq!(err, GameError::ObservationNotCovered(Observation::action(0)));
        // Only visited observations need a response.
        assert!(expected_payoffs(&g, &LayeredStrategy::L2 { action: 1 }, &policy).is_ok());
    }

    #[test]
    fn strategy_serde_shape() {
        let s = serde_json::to_string(&LayeredStrategy::L2 { action: 3 }).unwrap();
        assert_eq!(s, r#"{"layer":"L2","action":3}"#);
        let s = serde_json::to_string(&LayeredStrategy::L1).unwrap();
        assert_eq!(s, r#"{"layer":"L1"}"#);
        let back: LayeredStrategy = serde_json::from_str(r#"{"layer":"L3","map":[1,0]}"#).unwrap();
        assert_eq!(back, LayeredStrategy::L3 { map: vec![1, 0] });
        let info = serde_json::to_string(&InformationStructure::Imperfect { sigma: 0.5 }).unwrap();
        assert_eq!(info, r#"{"kind":"imperfect","sigma":0.5}"#);
    }
}
