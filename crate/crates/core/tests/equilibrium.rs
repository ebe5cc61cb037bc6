mod common;

use common::{all_strategies, check_equilibrium, small_games, solve, Oracle};
use proptest::prelude::*;
use scmas::generators::{random_instance, GeneratorParams, PayoffDist, Topology};
use scmas::{expected_payoffs, FollowerPolicy, InformationStructure, LayeredStrategy, Response, ScmasGame};

#[test]
fn exact_profiles_admit_no_profitable_deviation() {
    for game in small_games(60, 3, 11) {
        let p = solve(&game);
        check_equilibrium(&game, &p).unwrap();
    }
}

#[test]
fn l3_identity_matches_l1() {
    for game in small_games(40, 4, 12) {
        let o = Oracle::new(&game);
        let l1 = o.commitment_value(&LayeredStrategy::L1);
        let id = o.commitment_value(&LayeredStrategy::identity(game.n_leader()));
        assert!((l1.0 - id.0).abs() <= 1e-12 && (l1.1 - id.1).abs() <= 1e-12, "{}", game.meta.name);
    }
}

fn info_strategy() -> impl Strategy<Value = InformationStructure> {
    prop_oneof![
        Just(InformationStructure::Perfect),
        Just(InformationStructure::Mechanism),
        (0.0..1.5f64).prop_map(|sigma| InformationStructure::Imperfect { sigma }),
    ]
}

/// Random games under any information structure, including noise levels
/// the generator grid does not use.
fn games() -> impl Strategy<Value = ScmasGame> {
    (2..=3usize, 2..=3usize, 0..Topology::ALL.len(), info_strategy(), 0.2..=0.8f64, any::<u64>()).prop_map(
        |(nl, nf, t, info, q, seed)| {
            let p = GeneratorParams {
                n_leader_actions: nl,
                n_follower_actions: nf,
                topology: Topology::ALL[t],
                info: InformationStructure::Perfect,
                payoff_dist: PayoffDist::Uniform,
                instinct_quality: q,
                seed,
            };
            random_instance(&p).unwrap().with_info(info)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expected_payoffs_match_brute_force(game in games(), picks in proptest::collection::vec(any::<u32>(), 40)) {
        let leaders = all_strategies(game.n_leader());
        let followers = all_strategies(game.n_follower());
        let leader = leaders[picks[0] as usize % leaders.len()].clone();
        let mut policy = FollowerPolicy::new();
        for (k, obs) in game.observations().into_iter().enumerate() {
            let pick = picks[1 + k % 39] as usize;
            let response = if pick.is_multiple_of(4) {
                let nf = game.n_follower();
                let set: Vec<usize> = (0..nf).filter(|y| (pick >> (2 + y)) & 1 == 1).collect();
                Response::Satisfice { acceptable: if set.is_empty() { vec![pick % nf] } else { set } }
            } else {
                Response::Play(followers[pick % followers.len()].clone())
            };
            policy.insert(obs, response);
        }
        let (l, f) = expected_payoffs(&game, &leader, &policy).unwrap();
        let (ol, of) = Oracle::new(&game).payoffs(&leader, &policy);
        prop_assert!((l - ol).abs() < 1e-9 && (f - of).abs() < 1e-9, "({l}, {f}) vs ({ol}, {of})");
    }

    #[test]
    fn solver_output_is_an_equilibrium(game in games()) {
        let profile = solve(&game);
        prop_assert!(check_equilibrium(&game, &profile).is_ok(), "{:?}", check_equilibrium(&game, &profile));
    }
}

#[test]
fn oracle_rejects_suboptimal_commitments() {
    let mut caught = 0;
    for game in small_games(30, 3, 13) {
        let p = solve(&game);
        let o = Oracle::new(&game);
        for s in all_strategies(game.n_leader()) {
            let (l, f) = o.payoffs(&s, &p.follower);
            if l < p.leader_payoff - 1e-6 {
                let worse = scmas::EquilibriumProfile {
                    leader: s,
                    leader_payoff: l,
                    follower_payoff: f,
                    welfare: l + f,
                    ..p.clone()
                };
                assert!(check_equilibrium(&game, &worse).is_err());
                caught += 1;
                break;
            }
        }
    }
    assert!(caught > 10, "only {caught} games had a worse commitment");
}
