//! Precomputed world tables and the expectation machinery shared by
//! `expected_payoffs` and every solver.
//!
//! A world is one joint exogenous state `u` with positive weight. For each
//! world the table stores the leader's instinct, the follower's instinct
//! under every `do(X_L = x)`, and the reward context under every
//! `do(X_L = x, X_F = y)`.

use std::collections::BTreeMap;

use crate::game::{
    clamp_signal, observation_space, GameError, InformationStructure, Layer, LayeredStrategy, Observation, RewardTable,
    ScmasGame,
};
use crate::scm::Realization;

pub(crate) struct Worlds {
    pub nl: usize,
    pub nf: usize,
    pub prob: Vec<f64>,
    pub leader_instinct: Vec<usize>,
    /// `[u * nl + x]`
    pub follower_instinct: Vec<usize>,
    /// `[(u * nl + x) * nf + y]`
    pub context: Vec<usize>,
}

impl Worlds {
    pub fn exact(game: &ScmasGame, cap: usize) -> Result<Self, GameError> {
        let all = game.scm.enumerate_exogenous(cap)?;
        Self::build(game, all.into_iter().filter(|r| r.prob > 0.0))
    }

    /// Empirical worlds: each distinct sampled state weighted by its
    /// frequency.
    pub fn sampled(game: &ScmasGame, samples: &[Vec<usize>]) -> Result<Self, GameError> {
        let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
        for s in samples {
            *counts.entry(s.as_slice()).or_default() += 1;
        }
        let n = samples.len() as f64;
        Self::build(
            game,
            counts.into_iter().map(|(values, c)| Realization { values: values.to_vec(), prob: c as f64 / n }),
        )
    }

    fn build(game: &ScmasGame, realizations: impl Iterator<Item = Realization>) -> Result<Self, GameError> {
        let (nl, nf) = (game.n_leader(), game.n_follower());
        let (lead, follow) = (game.leader_action, game.follower_action);
        let mut w = Worlds {
            nl,
            nf,
            prob: Vec::new(),
            leader_instinct: Vec::new(),
            follower_instinct: Vec::new(),
            context: Vec::new(),
        };
        for r in realizations {
            let u = &r.values;
            w.prob.push(r.prob);
            w.leader_instinct.push(game.scm.propagate(u, &[])?.node(lead));
            for x in 0..nl {
                let a = game.scm.propagate(u, &[(lead, x)])?;
                w.follower_instinct.push(a.node(follow));
                for y in 0..nf {
                    let c = match game.context {
                        None => 0,
                        Some(ctx) => game.scm.propagate(u, &[(lead, x), (follow, y)])?.node(ctx),
                    };
                    w.context.push(c);
                }
            }
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    #[inline]
    pub fn follower_instinct(&self, u: usize, x: usize) -> usize {
        self.follower_instinct[u * self.nl + x]
    }

    #[inline]
    pub fn context_row(&self, u: usize, x: usize) -> &[usize] {
        let start = (u * self.nl + x) * self.nf;
        &self.context[start..start + self.nf]
    }
}

/// Discretized noise channel: 17 grid points over ±4σ, Gaussian weights,
/// rounded offsets merged and renormalized.
pub(crate) fn noise_grid(info: InformationStructure) -> Vec<(i64, f64)> {
    let sigma = match info {
        InformationStructure::Imperfect { sigma } if sigma > 0.0 => sigma,
        _ => return vec![(0, 1.0)],
    };
    let mut merged: BTreeMap<i64, f64> = BTreeMap::new();
    for k in 0..17 {
        let t = -4.0 + 0.5 * k as f64;
        *merged.entry((sigma * t).round() as i64).or_default() += (-0.5 * t * t).exp();
    }
    let total: f64 = merged.values().sum();
    merged.into_iter().map(|(o, w)| (o, w / total)).collect()
}

/// How the follower plays at one observation, in evaluation form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Reply {
    Play(LayeredStrategy),
    Uniform(Vec<usize>),
    /// `eps` on every action, the rest on `base`.
    Tremble {
        base: LayeredStrategy,
        eps: f64,
    },
}

impl Reply {
    #[inline]
    fn for_each(&self, instinct: usize, nf: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            Reply::Play(s) => f(s.act(instinct), 1.0),
            Reply::Uniform(set) => {
                let w = 1.0 / set.len() as f64;
                for &y in set {
                    f(y, w);
                }
            }
            Reply::Tremble { base, eps } => {
                f(base.act(instinct), 1.0 - nf as f64 * eps);
                for y in 0..nf {
                    f(y, *eps);
                }
            }
        }
    }
}

/// Posterior mass on one `(world, leader action)` pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BeliefPoint {
    pub u: usize,
    pub x: usize,
    pub w: f64,
}

/// A belief point resolved to the data the follower's payoff depends on.
#[derive(Clone, Copy)]
pub(crate) struct Point<'a> {
    pub w: f64,
    pub x: usize,
    pub instinct: usize,
    pub ctx: &'a [usize],
    pub rewards: &'a RewardTable,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Totals {
    pub leader: f64,
    pub follower: f64,
    /// `[x * nf + y]`
    pub outcome: Vec<f64>,
}

pub(crate) struct Evaluator<'a> {
    pub game: &'a ScmasGame,
    pub worlds: &'a Worlds,
    noise: Vec<(i64, f64)>,
    with_layer: bool,
    observations: Vec<Observation>,
}

impl<'a> Evaluator<'a> {
    pub fn new(game: &'a ScmasGame, worlds: &'a Worlds, info: InformationStructure) -> Self {
        let with_layer = info.observes_layer();
        Self {
            game,
            worlds,
            noise: noise_grid(info),
            with_layer,
            observations: observation_space(worlds.nl, with_layer),
        }
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        self.observations.iter().copied()
    }

    pub fn observation(&self, k: usize) -> Observation {
        self.observations[k]
    }

    pub fn has_noise(&self) -> bool {
        self.noise.len() > 1
    }

    #[inline]
    fn obs_index(&self, layer: Layer, signal: usize) -> usize {
        if self.with_layer {
            layer.index() * self.worlds.nl + signal
        } else {
            signal
        }
    }

    pub fn index_of(&self, obs: &Observation) -> Option<usize> {
        self.observations.iter().position(|o| o == obs)
    }

    #[inline]
    fn signals(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let nl = self.worlds.nl;
        self.noise.iter().map(move |&(off, q)| (clamp_signal(x as i64 + off, nl), q))
    }

    pub fn visited_observations(&self, leader: &LayeredStrategy) -> Vec<bool> {
        let mut seen = vec![false; self.n_observations()];
        for u in 0..self.worlds.len() {
            let x = leader.act(self.worlds.leader_instinct[u]);
            for (s, q) in self.signals(x) {
                if q > 0.0 {
                    seen[self.obs_index(leader.layer(), s)] = true;
                }
            }
        }
        seen
    }

    /// Posterior (unnormalized) at every observation, given the follower
    /// knows the leader's committed strategy.
    pub fn beliefs(&self, leader: &LayeredStrategy) -> Vec<Vec<BeliefPoint>> {
        let mut out = vec![Vec::new(); self.n_observations()];
        for u in 0..self.worlds.len() {
            let x = leader.act(self.worlds.leader_instinct[u]);
            let p = self.worlds.prob[u];
            for (s, q) in self.signals(x) {
                out[self.obs_index(leader.layer(), s)].push(BeliefPoint { u, x, w: p * q });
            }
        }
        out
    }

    /// Belief at an observation the committed strategy never produces: the
    /// prior, with the leader's action taken at face value. An observed L1
    /// layer additionally conditions on the instinct matching the action
    /// when that event has positive mass.
    pub fn default_belief(&self, obs: &Observation) -> Vec<BeliefPoint> {
        let x = obs.action.unwrap_or(0);
        let all: Vec<BeliefPoint> =
            (0..self.worlds.len()).map(|u| BeliefPoint { u, x, w: self.worlds.prob[u] }).collect();
        if obs.layer == Some(Layer::L1) {
            let matching: Vec<BeliefPoint> =
                all.iter().copied().filter(|b| self.worlds.leader_instinct[b.u] == x).collect();
            if matching.iter().any(|b| b.w > 0.0) {
                return matching;
            }
        }
        all
    }

    pub fn points<'b>(&'b self, belief: &'b [BeliefPoint]) -> impl Iterator<Item = Point<'b>> + Clone + 'b {
        belief.iter().map(move |b| Point {
            w: b.w,
            x: b.x,
            instinct: self.worlds.follower_instinct(b.u, b.x),
            ctx: self.worlds.context_row(b.u, b.x),
            rewards: &self.game.rewards,
        })
    }

    pub fn evaluate(&self, leader: &LayeredStrategy, replies: &[Reply]) -> Totals {
        let (nl, nf) = (self.worlds.nl, self.worlds.nf);
        let rewards = &self.game.rewards;
        let mut t = Totals { leader: 0.0, follower: 0.0, outcome: vec![0.0; nl * nf] };
        for u in 0..self.worlds.len() {
            let x = leader.act(self.worlds.leader_instinct[u]);
            let p = self.worlds.prob[u];
            let fi = self.worlds.follower_instinct(u, x);
            let ctx = self.worlds.context_row(u, x);
            for (s, q) in self.signals(x) {
                let reply = &replies[self.obs_index(leader.layer(), s)];
                reply.for_each(fi, nf, |y, w| {
                    let mass = p * q * w;
                    let (rl, rf) = rewards.get(x, y, ctx[y]);
                    t.leader += mass * rl;
                    t.follower += mass * rf;
                    t.outcome[x * nf + y] += mass;
                });
            }
        }
        t
    }

    /// True when no leader L3 map can strictly beat the best L2 action.
    ///
    /// Holds when the follower observes the action without noise and, at
    /// every leader action, the distribution of everything payoff-relevant
    /// downstream (follower instinct and context row) is the same whatever
    /// the leader's instinct. Any posterior the follower can then form at
    /// `x` has that same distribution, so the follower's reply and the
    /// leader's conditional payoff depend on `x` alone, and a map's value is
    /// an average of L2 values.
    pub fn l3_reducible(&self, tol: f64) -> bool {
        if self.has_noise() {
            return false;
        }
        let w = self.worlds;
        let mut mass = vec![0.0; w.nl];
        for u in 0..w.len() {
            mass[w.leader_instinct[u]] += w.prob[u];
        }
        for x in 0..w.nl {
            let mut by_instinct: Vec<BTreeMap<Vec<usize>, f64>> = vec![BTreeMap::new(); w.nl];
            for u in 0..w.len() {
                let v = w.leader_instinct[u];
                let mut key = Vec::with_capacity(w.nf + 1);
                key.push(w.follower_instinct(u, x));
                key.extend_from_slice(w.context_row(u, x));
                *by_instinct[v].entry(key).or_default() += w.prob[u] / mass[v];
            }
            let mut present = (0..w.nl).filter(|v| mass[*v] > 0.0);
            let Some(first) = present.next() else { continue };
            for v in present {
                if !same_distribution(&by_instinct[first], &by_instinct[v], tol) {
                    return false;
                }
            }
        }
        true
    }
}

fn same_distribution(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>, tol: f64) -> bool {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        let pa = a.get(k).copied().unwrap_or(0.0);
        let pb = b.get(k).copied().unwrap_or(0.0);
        (pa - pb).abs() <= tol
    })
}

/// `a` beats `b` by more than the tie tolerance.
#[inline]
pub(crate) fn beats(a: f64, b: f64, tol: f64) -> bool {
    a > b + tol * b.abs().max(1.0)
}

fn total_weight<'a>(points: impl Iterator<Item = Point<'a>>) -> f64 {
    points.map(|p| p.w).sum()
}

/// Normalized follower value of a within-layer strategy under a belief.
pub(crate) fn follower_value<'a, I>(points: I, strategy: &LayeredStrategy) -> f64
where
    I: Iterator<Item = Point<'a>> + Clone,
{
    let total = total_weight(points.clone());
    if total <= 0.0 {
        return 0.0;
    }
    points
        .map(|p| {
            let y = strategy.act(p.instinct);
            p.w * p.rewards.get(p.x, y, p.ctx[y]).1
        })
        .sum::<f64>()
        / total
}

/// Normalized expected follower payoff of each L2 action.
pub(crate) fn l2_values<'a, I>(points: I, nf: usize) -> Vec<f64>
where
    I: Iterator<Item = Point<'a>> + Clone,
{
    let total = total_weight(points.clone());
    let mut v = vec![0.0; nf];
    for p in points {
        for (y, slot) in v.iter_mut().enumerate() {
            *slot += p.w * p.rewards.get(p.x, y, p.ctx[y]).1;
        }
    }
    if total > 0.0 {
        v.iter_mut().for_each(|s| *s /= total);
    }
    v
}

/// The follower's best within-layer strategy over `layers` (given in
/// preference order). L2 ties go to the lowest action; the L3 map is chosen
/// instinct by instinct, lowest action on ties, which yields the
/// lexicographically smallest optimal map.
pub(crate) fn best_follower<'a, I>(points: I, nf: usize, layers: &[Layer], tol: f64) -> (LayeredStrategy, f64)
where
    I: Iterator<Item = Point<'a>> + Clone,
{
    let mut best: Option<(LayeredStrategy, f64)> = None;
    let mut offer = |s: LayeredStrategy, v: f64| match &best {
        Some((_, bv)) if !beats(v, *bv, tol) => {}
        _ => best = Some((s, v)),
    };
    for layer in layers {
        match layer {
            Layer::L1 => offer(LayeredStrategy::L1, follower_value(points.clone(), &LayeredStrategy::L1)),
            Layer::L2 => {
                let vals = l2_values(points.clone(), nf);
                let mut a = 0;
                for y in 1..nf {
                    if beats(vals[y], vals[a], tol) {
                        a = y;
                    }
                }
                offer(LayeredStrategy::L2 { action: a }, vals[a]);
            }
            Layer::L3 => {
                let total = total_weight(points.clone());
                let mut acc = vec![0.0; nf * nf];
                for p in points.clone() {
                    for y in 0..nf {
                        acc[p.instinct * nf + y] += p.w * p.rewards.get(p.x, y, p.ctx[y]).1;
                    }
                }
                let mut map = vec![0; nf];
                let mut value = 0.0;
                for v in 0..nf {
                    let row = &acc[v * nf..(v + 1) * nf];
                    let mut a = 0;
                    for y in 1..nf {
                        if beats(row[y], row[a], tol) {
                            a = y;
                        }
                    }
                    map[v] = a;
                    value += row[a];
                }
                if total > 0.0 {
                    value /= total;
                }
                offer(LayeredStrategy::L3 { map }, value);
            }
        }
    }
    best.expect("at least one follower layer")
}

/// Actions whose expected follower payoff is within `eps` of the best.
pub(crate) fn satisficing_set<'a, I>(points: I, nf: usize, eps: f64, tol: f64) -> Vec<usize>
where
    I: Iterator<Item = Point<'a>> + Clone,
{
    let vals = l2_values(points, nf);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = eps + tol * max.abs().max(1.0);
    (0..nf).filter(|y| vals[*y] >= max - slack).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_grid_shapes() {
        assert_eq!(noise_grid(InformationStructure::Perfect), vec![(0, 1.0)]);
        assert_eq!(noise_grid(InformationStructure::Imperfect { sigma: 0.0 }), vec![(0, 1.0)]);
        // ±0.4 never rounds away from zero.
        assert_eq!(noise_grid(InformationStructure::Imperfect { sigma: 0.1 }), vec![(0, 1.0)]);
        let g = noise_grid(InformationStructure::Imperfect { sigma: 1.0 });
        let total: f64 = g.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(g.first().unwrap().0, -4);
        assert_eq!(g.last().unwrap().0, 4);
        // Symmetric channel.
        for (o, w) in &g {
            let mirror = g.iter().find(|(m, _)| *m == -o).unwrap().1;
            assert!((w - mirror).abs() < 1e-15);
        }
    }

    #[test]
    fn beats_uses_relative_tolerance() {
        assert!(!beats(1.0 + 1e-14, 1.0, 1e-12));
        assert!(beats(1.0 + 1e-9, 1.0, 1e-12));
        assert!(!beats(1e6 + 1e-7, 1e6, 1e-12));
    }
}
