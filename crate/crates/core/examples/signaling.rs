//! Two leader types seen by a follower who observes the leader's layer.

use scmas::experiments::classify_signaling;
use scmas::generators::synthetic;
use scmas::{exact_scne, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::default();
    let types = vec![synthetic("prisoners_dilemma_m1", 0)?, synthetic("prisoners_dilemma_m2", 0)?];
    let profiles: Vec<_> = types.iter().map(|g| exact_scne(g, &cfg)).collect::<Result<_, _>>()?;
    for (g, p) in types.iter().zip(&profiles) {
        println!("{:22} leader {} payoff {:.3}", g.meta.name, p.leader, p.leader_payoff);
    }
    println!("equilibrium class: {:?}", classify_signaling(&types, &profiles)?);
    Ok(())
}
