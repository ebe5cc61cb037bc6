//! The 3×3 coordination game: every solver picks the top outcome, and a
//! follower who satisfices within 15 mixes over all three replies.

use scmas::experiments::uniform_equilibrium_welfare;
use scmas::generators::synthetic;
use scmas::{classical_stackelberg, exact_scne, satisficing_scne, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = synthetic("appendix_d_coordination", 1)?;
    let cfg = SolverConfig::default();
    let profiles = [
        ("exact", exact_scne(&game, &cfg)?),
        ("classical", classical_stackelberg(&game, &cfg)?),
        ("satisficing(0)", satisficing_scne(&game, 0.0, &cfg)?),
        ("satisficing(15)", satisficing_scne(&game, 15.0, &cfg)?),
    ];
    for (name, p) in &profiles {
        println!(
            "{name:16} leader {:8} outcome {:?} welfare {:.6}",
            p.leader.to_string(),
            p.modal_outcome(),
            p.welfare
        );
    }
    println!("uniform over pure equilibria: welfare {:.6}", uniform_equilibrium_welfare(&game)?);
    Ok(())
}
