//! Equilibrium refinements: a finite-grid trembling-hand survival check and
//! a forward-induction filter over leader types.

use serde::{Deserialize, Serialize};

use super::{check_sizes, EquilibriumProfile, FollowerModel, Solve, SolverConfig, SolverError};
use crate::eval::{beats, best_follower, follower_value, l2_values, Evaluator, Point, Reply, Worlds};
use crate::game::{FollowerPolicy, InformationStructure, Layer, LayeredStrategy, Response, ScmasGame};

pub const DEFAULT_TREMBLE_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// True iff, for every `ε` in `grid`, the leader's choice in `profile` is
/// still the tie-break optimum when every follower reply puts `ε` on each
/// non-best action and the rest on its best response.
///
/// A finite-grid surrogate for the limit definition.
pub fn trembling_hand_check(
    game: &ScmasGame,
    profile: &EquilibriumProfile,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<bool, SolverError> {
    check_sizes(game, cfg)?;
    let nf = game.n_follower();
    for &eps in grid {
        if !(eps > 0.0 && eps * nf as f64 <= 1.0) {
            return Err(SolverError::InvalidParameter(format!("tremble {eps} outside (0, 1/{nf}]")));
        }
    }
    let worlds = Worlds::exact(game, cfg.enumeration_cap)?;
    let solve = Solve {
        eval: Evaluator::new(game, &worlds, game.info),
        leader_layers: &Layer::ALL,
        follower: FollowerModel::Rational(&Layer::ALL),
        cfg,
    };
    for &eps in grid {
        let chosen = solve.run(|replies| {
            replies
                .into_iter()
                .map(|r| match r {
                    Reply::Play(base) => Reply::Tremble { base, eps },
                    other => other,
                })
                .collect()
        })?;
        if chosen.leader != profile.leader {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One candidate equilibrium of the game between leader types: a commitment
/// per type and a single follower policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingProfile {
    pub leaders: Vec<LayeredStrategy>,
    pub follower: FollowerPolicy,
}

struct TypeView<'a> {
    eval: Evaluator<'a>,
    /// Probability of each leader instinct value.
    instinct_mass: Vec<f64>,
}

/// Removes profiles whose follower policy, at some off-path observation,
/// relies on a belief about a leader type that could not gain from sending
/// that observation while other types could.
///
/// For an off-path observation `(layer, x)` the admissible types are those
/// able to produce it whose best case (over every follower response to the
/// deviation) reaches their equilibrium payoff. A profile is removed when
/// its response there is a best response neither to any admissible type nor
/// to the uniform mixture over them, but is one to some excluded type. When
/// every type or no type is admissible the observation imposes nothing.
pub fn forward_induction_filter(
    types: &[ScmasGame],
    profiles: Vec<SignalingProfile>,
    cfg: &SolverConfig,
) -> Result<Vec<SignalingProfile>, SolverError> {
    if types.len() < 2 {
        return Err(SolverError::TypeSetTooSmall(types.len()));
    }
    let (nl, nf) = (types[0].n_leader(), types[0].n_follower());
    for g in types {
        check_sizes(g, cfg)?;
        if g.info != InformationStructure::Mechanism {
            return Err(SolverError::TypeMismatch(format!(
                "forward induction needs mechanism information, `{}` has {}",
                g.meta.name,
                g.info.label()
            )));
        }
        if (g.n_leader(), g.n_follower()) != (nl, nf) {
            return Err(SolverError::TypeMismatch("leader types differ in action shape".into()));
        }
    }
    let worlds = types.iter().map(|g| Worlds::exact(g, cfg.enumeration_cap)).collect::<Result<Vec<_>, _>>()?;
    let views: Vec<TypeView> = types
        .iter()
        .zip(&worlds)
        .map(|(g, w)| {
            let mut instinct_mass = vec![0.0; nl];
            for u in 0..w.len() {
                instinct_mass[w.leader_instinct[u]] += w.prob[u];
            }
            TypeView { eval: Evaluator::new(g, w, g.info), instinct_mass }
        })
        .collect();

    let mut kept = Vec::with_capacity(profiles.len());
    for p in profiles {
        if p.leaders.len() != types.len() {
            return Err(SolverError::TypeMismatch(format!(
                "profile has {} leader strategies for {} types",
                p.leaders.len(),
                types.len()
            )));
        }
        for s in &p.leaders {
            s.check(nl)?;
        }
        if consistent(&views, &p, cfg)? {
            kept.push(p);
        }
    }
    Ok(kept)
}

fn consistent(views: &[TypeView], p: &SignalingProfile, cfg: &SolverConfig) -> Result<bool, SolverError> {
    let tol = cfg.tie_tolerance;
    let eval0 = &views[0].eval;
    let n_obs = eval0.n_observations();
    let replies: Vec<Reply> = eval0
        .observations()
        .map(|o| match p.follower.get(&o) {
            Some(Response::Play(s)) => Reply::Play(s.clone()),
            Some(Response::Satisfice { acceptable }) => Reply::Uniform(acceptable.clone()),
            None => Reply::Play(LayeredStrategy::L1),
        })
        .collect();
    let mut on_path = vec![false; n_obs];
    let mut eq_payoff = Vec::with_capacity(views.len());
    for (v, s) in views.iter().zip(&p.leaders) {
        for (k, seen) in v.eval.visited_observations(s).into_iter().enumerate() {
            on_path[k] |= seen;
        }
        eq_payoff.push(v.eval.evaluate(s, &replies).leader);
    }

    for k in (0..n_obs).filter(|k| !on_path[*k]) {
        let obs = eval0.observation(k);
        let Some(response) = p.follower.get(&obs) else { continue };
        let (layer, x) = (obs.layer.expect("mechanism"), obs.action.expect("action"));
        let admissible: Vec<bool> = views
            .iter()
            .zip(&eq_payoff)
            .map(|(v, eq)| match best_case(v, layer, x, cfg) {
                Some(bc) => !beats(*eq, bc, tol),
                None => false,
            })
            .collect();
        let n_adm = admissible.iter().filter(|a| **a).count();
        if n_adm == 0 || n_adm == views.len() {
            continue;
        }
        let beliefs: Vec<_> = views.iter().map(|v| v.eval.default_belief(&obs)).collect();
        let is_br = |members: &[usize]| -> bool {
            let mut pts: Vec<Point> = Vec::new();
            for &t in members {
                let b: Vec<Point> = views[t].eval.points(&beliefs[t]).collect();
                let total: f64 = b.iter().map(|q| q.w).sum();
                if total <= 0.0 {
                    continue;
                }
                pts.extend(b.into_iter().map(|q| Point { w: q.w / total, ..q }));
            }
            let nf = views[0].eval.worlds.nf;
            let best = best_follower(pts.iter().copied(), nf, &Layer::ALL, tol).1;
            let value = match response {
                Response::Play(s) => follower_value(pts.iter().copied(), s),
                Response::Satisfice { acceptable } => {
                    let vals = l2_values(pts.iter().copied(), nf);
                    acceptable.iter().map(|a| vals[*a]).sum::<f64>() / acceptable.len() as f64
                }
            };
            !beats(best, value, tol)
        };
        let inside: Vec<usize> = (0..views.len()).filter(|t| admissible[*t]).collect();
        let outside: Vec<usize> = (0..views.len()).filter(|t| !admissible[*t]).collect();
        let justified = inside.iter().any(|t| is_br(&[*t])) || is_br(&inside);
        if !justified && outside.iter().any(|t| is_br(&[*t])) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The leader's best achievable payoff from a commitment that produces
/// `(layer, x)`, maximizing over follower responses at every observation the
/// commitment generates. `None` when the type cannot produce it.
fn best_case(v: &TypeView, layer: Layer, x: usize, cfg: &SolverConfig) -> Option<f64> {
    let w = v.eval.worlds;
    let nl = w.nl;
    let has = |i: usize| v.instinct_mass[i] > 0.0;
    // Best follower response from the leader's point of view, at action `a`
    // over the worlds whose instinct is in `group`.
    let value_at = |a: usize, group: &dyn Fn(usize) -> bool| -> f64 {
        let nf = w.nf;
        let mut acc = vec![0.0; nf * nf];
        for u in (0..w.len()).filter(|u| group(w.leader_instinct[*u])) {
            let fi = w.follower_instinct(u, a);
            let ctx = w.context_row(u, a);
            for y in 0..nf {
                acc[fi * nf + y] += w.prob[u] * v.eval.game.rewards.get(a, y, ctx[y]).0;
            }
        }
        acc.chunks(nf).map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum()
    };
    match layer {
        Layer::L1 => {
            if !has(x) {
                return None;
            }
            Some((0..nl).filter(|i| has(*i)).map(|i| value_at(i, &|v| v == i)).sum())
        }
        Layer::L2 => Some(value_at(x, &|_| true)),
        Layer::L3 => {
            let count = (nl as u64).checked_pow(nl as u32).unwrap_or(u64::MAX);
            if count > cfg.map_budget {
                // Too many maps: use the bound where the follower also sees
                // the leader's instinct. Overstating the best case only
                // admits more types, so the filter stays conservative.
                return Some(
                    (0..nl)
                        .filter(|i| has(*i))
                        .map(|i| (0..nl).map(|a| value_at(a, &|v| v == i)).fold(f64::NEG_INFINITY, f64::max))
                        .sum(),
                );
            }
            crate::scm::tuples(&vec![nl; nl])
                .filter(|m| (0..nl).any(|i| has(i) && m[i] == x))
                .map(|m| (0..nl).map(|a| value_at(a, &|v| m[v] == a)).sum::<f64>())
                .reduce(f64::max)
        }
    }
}
