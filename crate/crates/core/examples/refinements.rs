//! Trembling-hand survival and forward-induction filtering.

use scmas::generators::synthetic;
use scmas::solvers::{forward_induction_filter, trembling_hand_check, SignalingProfile, DEFAULT_TREMBLE_GRID};
use scmas::{exact_scne, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::default();
    for name in ["coordination", "stag_hunt", "appendix_d_coordination"] {
        let game = synthetic(name, 1)?;
        let p = exact_scne(&game, &cfg)?;
        println!(
            "{name:24} {} survives trembles: {}",
            p.leader,
            trembling_hand_check(&game, &p, &DEFAULT_TREMBLE_GRID, &cfg)?
        );
    }

    let types = vec![synthetic("prisoners_dilemma_m1", 0)?, synthetic("prisoners_dilemma_m2", 0)?];
    let solved: Vec<_> = types.iter().map(|g| exact_scne(g, &cfg)).collect::<Result<_, _>>()?;
    let candidates: Vec<SignalingProfile> = solved
        .iter()
        .map(|p| SignalingProfile {
            leaders: solved.iter().map(|q| q.leader.clone()).collect(),
            follower: p.follower.clone(),
        })
        .collect();
    let kept = forward_induction_filter(&types, candidates.clone(), &cfg)?;
    println!("forward induction keeps {}/{} candidate profiles", kept.len(), candidates.len());
    Ok(())
}
