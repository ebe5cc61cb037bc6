//! JSON interchange format for games.
//!
//! ```json
//! {
//!   "scm": {
//!     "exogenous": [{"name": "U", "prior": [0.5, 0.5]}],
//!     "endogenous": [
//!       {"name": "X_L", "support": 2, "parents": ["U"], "table": [0, 1]},
//!       {"name": "X_F", "support": 2, "parents": ["X_L"], "table": [1, 0]}
//!     ],
//!     "actions": ["X_L", "X_F"]
//!   },
//!   "leader_action": "X_L",
//!   "follower_action": "X_F",
//!   "rewards": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]],
//!   "info": {"kind": "perfect"},
//!   "meta": {"name": "example"}
//! }
//! ```
//!
//! Equation tables nest one array level per parent, first parent outermost;
//! a node without parents has a scalar table. `rewards` is indexed
//! `[x_L][x_F]` giving `[leader, follower]`, or `[x_L][x_F][context]` when a
//! `context` node is named. An optional `scm.order` lists the evaluation
//! order of a cyclic model.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::game::{GameError, GameMeta, InformationStructure, RewardTable, ScmasGame};
use crate::scm::{Scm, ScmBuilder};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameDoc {
    scm: ScmDoc,
    leader_action: String,
    follower_action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<String>,
    #[serde(default = "default_leader_reward")]
    leader_reward: String,
    #[serde(default = "default_follower_reward")]
    follower_reward: String,
    rewards: RewardsDoc,
    info: InformationStructure,
    #[serde(default)]
    meta: GameMeta,
}

fn default_leader_reward() -> String {
    "Y_L".into()
}

fn default_follower_reward() -> String {
    "Y_F".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScmDoc {
    exogenous: Vec<ExogenousDoc>,
    endogenous: Vec<NodeDoc>,
    actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExogenousDoc {
    name: String,
    prior: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    support: usize,
    parents: Vec<String>,
    table: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RewardsDoc {
    Matrix(Vec<Vec<[f64; 2]>>),
    Contextual(Vec<Vec<Vec<[f64; 2]>>>),
}

fn format_err(msg: impl Into<String>) -> GameError {
    GameError::Format(msg.into())
}

pub fn game_to_json(game: &ScmasGame) -> String {
    let doc = to_doc(game);
    let mut s = serde_json::to_string_pretty(&doc).expect("game documents always serialize");
    s.push('\n');
    s
}

pub fn game_from_json(text: &str) -> Result<ScmasGame, GameError> {
    let doc: GameDoc = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
    from_doc(doc)
}

fn to_doc(game: &ScmasGame) -> GameDoc {
    let scm = &game.scm;
    let exogenous = scm
        .exogenous()
        .iter()
        .map(|e| ExogenousDoc { name: e.name().to_string(), prior: e.prior().to_vec() })
        .collect();
    let endogenous = scm
        .equations()
        .iter()
        .map(|eq| {
            let sizes: Vec<usize> = eq.parents.iter().map(|p| scm.support(*p)).collect();
            NodeDoc {
                name: scm.node_name(eq.target).to_string(),
                support: scm.node_support(eq.target),
                parents: eq.parents.iter().map(|p| scm.var_name(*p).to_string()).collect(),
                table: nest(&eq.table, &sizes),
            }
        })
        .collect();
    let names = |ids: &[crate::scm::NodeId]| ids.iter().map(|id| scm.node_name(*id).to_string()).collect();
    let r = &game.rewards;
    let cell = |x, y, c| {
        let (l, f) = r.get(x, y, c);
        [l, f]
    };
    let rewards = if game.context.is_none() && r.n_context() == 1 {
        RewardsDoc::Matrix((0..r.n_leader()).map(|x| (0..r.n_follower()).map(|y| cell(x, y, 0)).collect()).collect())
    } else {
        RewardsDoc::Contextual(
            (0..r.n_leader())
                .map(|x| (0..r.n_follower()).map(|y| (0..r.n_context()).map(|c| cell(x, y, c)).collect()).collect())
                .collect(),
        )
    };
    GameDoc {
        scm: ScmDoc { exogenous, endogenous, actions: names(scm.actions()), order: scm.declared_order().map(names) },
        leader_action: scm.node_name(game.leader_action).to_string(),
        follower_action: scm.node_name(game.follower_action).to_string(),
        context: game.context.map(|c| scm.node_name(c).to_string()),
        leader_reward: game.leader_reward.clone(),
        follower_reward: game.follower_reward.clone(),
        rewards,
        info: game.info,
        meta: game.meta.clone(),
    }
}

fn nest(table: &[usize], sizes: &[usize]) -> Value {
    match sizes.split_first() {
        None => Value::from(table[0]),
        Some((first, rest)) => {
            let stride = table.len() / first;
            Value::Array(table.chunks(stride).map(|c| nest(c, rest)).collect())
        }
    }
}

fn flatten(value: &Value, sizes: &[usize], node: &str, out: &mut Vec<usize>) -> Result<(), GameError> {
    match sizes.split_first() {
        None => {
            let v = value
                .as_u64()
                .ok_or_else(|| format_err(format!("table of `{node}`: expected a nonnegative integer, got {value}")))?;
            out.push(v as usize);
        }
        Some((first, rest)) => {
            let items = value
                .as_array()
                .filter(|a| a.len() == *first)
                .ok_or_else(|| format_err(format!("table of `{node}`: expected an array of length {first}")))?;
            for item in items {
                flatten(item, rest, node, out)?;
            }
        }
    }
    Ok(())
}

fn from_doc(doc: GameDoc) -> Result<ScmasGame, GameError> {
    let scm = build_scm(&doc.scm)?;
    let rewards = match &doc.rewards {
        RewardsDoc::Matrix(m) => {
            check_rect(m.iter().map(|r| r.len()))?;
            RewardTable::from_fn(m.len(), m.first().map_or(0, |r| r.len()), 1, |x, y, _| (m[x][y][0], m[x][y][1]))
        }
        RewardsDoc::Contextual(m) => {
            check_rect(m.iter().map(|r| r.len()))?;
            check_rect(m.iter().flatten().map(|c| c.len()))?;
            let nf = m.first().map_or(0, |r| r.len());
            let nc = m.first().and_then(|r| r.first()).map_or(0, |c| c.len());
            RewardTable::from_fn(m.len(), nf, nc, |x, y, c| (m[x][y][c][0], m[x][y][c][1]))
        }
    };
    let game = ScmasGame {
        leader_action: scm.node_id(&doc.leader_action)?,
        follower_action: scm.node_id(&doc.follower_action)?,
        context: doc.context.as_deref().map(|c| scm.node_id(c)).transpose()?,
        scm,
        leader_reward: doc.leader_reward,
        follower_reward: doc.follower_reward,
        rewards,
        info: doc.info,
        meta: doc.meta,
    };
    game.ensure_valid()?;
    Ok(game)
}

fn check_rect(mut lens: impl Iterator<Item = usize>) -> Result<(), GameError> {
    if let Some(first) = lens.next() {
        if lens.any(|l| l != first) {
            return Err(format_err("rewards array is ragged"));
        }
    }
    Ok(())
}

fn build_scm(doc: &ScmDoc) -> Result<Scm, GameError> {
    let mut b = ScmBuilder::new();
    for e in &doc.exogenous {
        b = b.exogenous(&e.name, e.prior.clone());
    }
    let mut supports: std::collections::HashMap<&str, usize> =
        doc.exogenous.iter().map(|e| (e.name.as_str(), e.prior.len())).collect();
    for n in &doc.endogenous {
        supports.insert(n.name.as_str(), n.support);
    }
    for n in &doc.endogenous {
        let sizes = n
            .parents
            .iter()
            .map(|p| {
                supports
                    .get(p.as_str())
                    .copied()
                    .ok_or_else(|| format_err(format!("`{}` has unknown parent `{p}`", n.name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = Vec::new();
        flatten(&n.table, &sizes, &n.name, &mut table)?;
        let parents: Vec<&str> = n.parents.iter().map(String::as_str).collect();
        b = b.node(&n.name, n.support, &parents, table);
    }
    for a in &doc.actions {
        b = b.action(a);
    }
    if let Some(order) = &doc.order {
        let names: Vec<&str> = order.iter().map(String::as_str).collect();
        b = b.order(&names);
    }
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_instance, synthetic, GeneratorParams, PayoffDist, Topology};

    #[test]
    fn generated_games_round_trip() {
        for t in Topology::ALL {
            let p = GeneratorParams {
                n_leader_actions: 3,
                n_follower_actions: 2,
                topology: t,
                info: InformationStructure::Imperfect { sigma: 0.5 },
                payoff_dist: PayoffDist::Normal,
                instinct_quality: 0.6,
                seed: 99,
            };
            let g = random_instance(&p).unwrap();
            let text = game_to_json(&g);
            assert_eq!(game_from_json(&text).unwrap(), g, "{t}");
            assert_eq!(game_to_json(&game_from_json(&text).unwrap()), text);
        }
        let d = synthetic("appendix_d_coordination", 1).unwrap();
        assert_eq!(game_from_json(&game_to_json(&d)).unwrap(), d);
    }

    #[test]
    fn module_doc_example_parses() {
        let text = r#"{
          "scm": {
            "exogenous": [{"name": "U", "prior": [0.5, 0.5]}],
            "endogenous": [
              {"name": "X_L", "support": 2, "parents": ["U"], "table": [0, 1]},
              {"name": "X_F", "support": 2, "parents": ["X_L"], "table": [1, 0]}
            ],
            "actions": ["X_L", "X_F"]
          },
          "leader_action": "X_L",
          "follower_action": "X_F",
          "rewards": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]],
          "info": {"kind": "perfect"},
          "meta": {"name": "example"}
        }"#;
        let g = game_from_json(text).unwrap();
        assert_eq!(g.rewards.get(1, 1, 0), (1.0, 0.0));
    }

    #[test]
    fn malformed_documents_are_format_errors() {
        assert!(matches!(game_from_json("{"), Err(GameError::Format(_))));
        let bad_table = r#"{"scm":{"exogenous":[{"name":"U","prior":[1.0]}],
            "endogenous":[{"name":"A","support":2,"parents":["U"],"table":[0,1]},
                          {"name":"B","support":2,"parents":[],"table":0}],
            "actions":["A","B"]},
            "leader_action":"A","follower_action":"B",
            "rewards":[[[0,0],[0,0]],[[0,0],[0,0]]],"info":{"kind":"perfect"}}"#;
        let e = game_from_json(bad_table).unwrap_err().to_string();
        assert!(e.contains("table of `A`"), "{e}");
    }
}
