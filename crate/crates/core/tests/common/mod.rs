//! Brute-force reference evaluator. It walks the exogenous space and the
//! observation channel directly through `Scm::propagate`, without the
//! solver's precomputed tables.

#![allow(dead_code)]

use scmas::experiments::ParamGrid;
use scmas::generators::random_instance;
use scmas::{
    exact_scne, EquilibriumProfile, FollowerPolicy, InformationStructure, LayeredStrategy, Observation, Response,
    ScmasGame, SolverConfig,
};

pub const TIE: f64 = 1e-9;

pub struct Oracle<'a> {
    pub game: &'a ScmasGame,
    /// `(u, prob)` for every exogenous state with positive mass.
    pub worlds: Vec<(Vec<usize>, f64)>,
    /// `(offset, weight)` of the observation channel.
    pub channel: Vec<(i64, f64)>,
}

/// One path of play up to the follower's move.
pub struct Path {
    pub mass: f64,
    pub u: usize,
    pub x: usize,
    pub observation: Observation,
    pub follower_instinct: usize,
}

fn channel(info: InformationStructure) -> Vec<(i64, f64)> {
    let InformationStructure::Imperfect { sigma } = info else { return vec![(0, 1.0)] };
    if sigma == 0.0 {
        return vec![(0, 1.0)];
    }
    let mut raw: Vec<(i64, f64)> = (0..17)
        .map(|k| {
            let t = -4.0 + 0.5 * k as f64;
            ((sigma * t).round() as i64, (-t * t / 2.0).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|r| r.1).sum();
    for r in &mut raw {
        r.1 /= total;
    }
    raw
}

pub fn all_strategies(n: usize) -> Vec<LayeredStrategy> {
    let mut out = vec![LayeredStrategy::L1];
    out.extend((0..n).map(|action| LayeredStrategy::L2 { action }));
    let mut map = vec![0; n];
    loop {
        out.push(LayeredStrategy::L3 { map: map.clone() });
        let mut d = n;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            map[d] += 1;
            if map[d] < n {
                break;
            }
            map[d] = 0;
        }
    }
}

impl<'a> Oracle<'a> {
    pub fn new(game: &'a ScmasGame) -> Self {
        let worlds = game
            .scm
            .enumerate_exogenous(1 << 20)
            .unwrap()
            .into_iter()
            .filter(|r| r.prob > 0.0)
            .map(|r| (r.values, r.prob))
            .collect();
        Oracle { game, worlds, channel: channel(game.info) }
    }

    fn leader_instinct(&self, u: &[usize]) -> usize {
        self.game.scm.propagate(u, &[]).unwrap().node(self.game.leader_action)
    }

    pub fn leader_instinct_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.game.n_leader()];
        for (u, p) in &self.worlds {
            mass[self.leader_instinct(u)] += p;
        }
        mass
    }

    pub fn paths(&self, leader: &LayeredStrategy) -> Vec<Path> {
        let g = self.game;
        let nl = g.n_leader() as i64;
        let mut out = Vec::new();
        for (i, (u, p)) in self.worlds.iter().enumerate() {
            let x = leader.act(self.leader_instinct(u));
            let fi = g.scm.propagate(u, &[(g.leader_action, x)]).unwrap().node(g.follower_action);
            for &(off, w) in &self.channel {
                let signal = (x as i64 + off).clamp(0, nl - 1) as usize;
                let observation = match g.info {
                    InformationStructure::Mechanism => Observation::with_layer(signal, leader.layer()),
                    _ => Observation::action(signal),
                };
                out.push(Path { mass: p * w, u: i, x, observation, follower_instinct: fi });
            }
        }
        out
    }

    pub fn rewards(&self, u: usize, x: usize, y: usize) -> (f64, f64) {
        let g = self.game;
        let c = match g.context {
            None => 0,
            Some(ctx) => {
                g.scm.propagate(&self.worlds[u].0, &[(g.leader_action, x), (g.follower_action, y)]).unwrap().node(ctx)
            }
        };
        g.rewards.get(x, y, c)
    }

    /// Exact expected payoffs of a leader strategy against a follower
    /// policy.
    pub fn payoffs(&self, leader: &LayeredStrategy, follower: &FollowerPolicy) -> (f64, f64) {
        let (mut l, mut f) = (0.0, 0.0);
        for path in self.paths(leader) {
            let ys: Vec<(usize, f64)> = match follower.get(&path.observation).expect("policy covers path") {
                Response::Play(s) => vec![(s.act(path.follower_instinct), 1.0)],
                Response::Satisfice { acceptable } => {
                    acceptable.iter().map(|y| (*y, 1.0 / acceptable.len() as f64)).collect()
                }
            };
            for (y, q) in ys {
                let (rl, rf) = self.rewards(path.u, path.x, y);
                l += path.mass * q * rl;
                f += path.mass * q * rf;
            }
        }
        (l, f)
    }

    /// Leader payoff of committing to `leader` when the follower best
    /// responds at every on-path observation, as `(worst, best)` over the
    /// follower's tied best responses. Every layered follower strategy has
    /// the outcome of some instinct-to-action map, so the follower's optimum
    /// separates by observation and instinct value.
    pub fn commitment_value(&self, leader: &LayeredStrategy) -> (f64, f64) {
        let nf = self.game.n_follower();
        let mut groups: std::collections::BTreeMap<(Observation, usize), Vec<(f64, f64)>> =
            std::collections::BTreeMap::new();
        for path in self.paths(leader) {
            let acc = groups.entry((path.observation, path.follower_instinct)).or_insert_with(|| vec![(0.0, 0.0); nf]);
            for (y, cell) in acc.iter_mut().enumerate() {
                let (rl, rf) = self.rewards(path.u, path.x, y);
                cell.0 += path.mass * rl;
                cell.1 += path.mass * rf;
            }
        }
        let (mut worst, mut best) = (0.0, 0.0);
        for acc in groups.values() {
            let top = acc.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
            let tied = acc.iter().filter(|c| c.1 >= top - TIE);
            worst += tied.clone().map(|c| c.0).fold(f64::INFINITY, f64::min);
            best += tied.map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        }
        (worst, best)
    }

    /// Largest follower gain from switching, at some on-path observation,
    /// away from the policy's response.
    pub fn follower_regret(&self, leader: &LayeredStrategy, follower: &FollowerPolicy) -> f64 {
        let nf = self.game.n_follower();
        let mut per_obs: std::collections::BTreeMap<Observation, Vec<(usize, f64, Vec<f64>)>> =
            std::collections::BTreeMap::new();
        for path in self.paths(leader) {
            let values = (0..nf).map(|y| path.mass * self.rewards(path.u, path.x, y).1).collect();
            per_obs.entry(path.observation).or_default().push((path.follower_instinct, path.mass, values));
        }
        let mut regret: f64 = 0.0;
        for (obs, items) in per_obs {
            let current: f64 = match follower.get(&obs).expect("policy covers path") {
                Response::Play(s) => items.iter().map(|(fi, _, v)| v[s.act(*fi)]).sum(),
                Response::Satisfice { acceptable } => items
                    .iter()
                    .map(|(_, _, v)| acceptable.iter().map(|y| v[*y]).sum::<f64>() / acceptable.len() as f64)
                    .sum(),
            };
            let mut by_instinct: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
            for (fi, _, v) in &items {
                let acc = by_instinct.entry(*fi).or_insert_with(|| vec![0.0; nf]);
                for y in 0..nf {
                    acc[y] += v[y];
                }
            }
            let optimum: f64 =
                by_instinct.values().map(|acc| acc.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
            regret = regret.max(optimum - current);
        }
        regret
    }
}

/// Seeded random games with at most `max_size` actions per agent, over
/// every topology and information structure.
pub fn small_games(n: usize, max_size: usize, master: u64) -> Vec<ScmasGame> {
    let grid = ParamGrid { sizes: (2..=max_size).collect(), ..ParamGrid::with_imperfect() };
    (0..n as u64).map(|i| random_instance(&grid.draw(master, i)).unwrap()).collect()
}

/// Checks an exact equilibrium against the oracle; returns a description
/// of the first violation.
pub fn check_equilibrium(game: &ScmasGame, p: &EquilibriumProfile) -> Result<(), String> {
    let o = Oracle::new(game);
    let name = &game.meta.name;
    let (l, f) = o.payoffs(&p.leader, &p.follower);
    if (l - p.leader_payoff).abs() > TIE || (f - p.follower_payoff).abs() > TIE {
        return Err(format!(
            "{name}: reported ({}, {}) but oracle gives ({l}, {f})",
            p.leader_payoff, p.follower_payoff
        ));
    }
    let regret = o.follower_regret(&p.leader, &p.follower);
    if regret > TIE {
        return Err(format!("{name}: follower gains {regret} by deviating"));
    }
    let (worst, best) = o.commitment_value(&p.leader);
    if p.leader_payoff < worst - TIE || p.leader_payoff > best + TIE {
        return Err(format!("{name}: payoff {} outside [{worst}, {best}]", p.leader_payoff));
    }
    for s in all_strategies(game.n_leader()) {
        let (worst, _) = o.commitment_value(&s);
        if worst > p.leader_payoff + TIE {
            return Err(format!("{name}: leader gains {} by committing to {s}", worst - p.leader_payoff));
        }
    }
    Ok(())
}

pub fn solve(game: &ScmasGame) -> EquilibriumProfile {
    exact_scne(game, &SolverConfig::default()).unwrap()
}
