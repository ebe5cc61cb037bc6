//! Generates a random game, saves it as JSON, and solves it with every
//! method.

use scmas::format::{game_from_json, game_to_json};
use scmas::generators::{random_instance, GeneratorParams, PayoffDist, Topology};
use scmas::{approx_scne, classical_stackelberg, exact_scne, satisficing_scne, InformationStructure, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = GeneratorParams {
        n_leader_actions: 3,
        n_follower_actions: 3,
        topology: Topology::Fork,
        info: InformationStructure::Imperfect { sigma: 0.5 },
        payoff_dist: PayoffDist::Normal,
        instinct_quality: 0.8,
        seed: 7,
    };
    let text = game_to_json(&random_instance(&params)?);
    let game = game_from_json(&text)?;
    println!("{} ({} bytes of JSON)", game.meta.name, text.len());

    let cfg = SolverConfig::default();
    let profiles = [
        exact_scne(&game, &cfg)?,
        classical_stackelberg(&game, &cfg)?,
        approx_scne(&game, 0.05, 3, &cfg)?,
        satisficing_scne(&game, 0.5, &cfg)?,
    ];
    for p in &profiles {
        println!(
            "{:70} leader {:10} payoffs ({:.4}, {:.4})",
            serde_json::to_string(&p.method)?,
            p.leader.to_string(),
            p.leader_payoff,
            p.follower_payoff
        );
    }
    Ok(())
}
