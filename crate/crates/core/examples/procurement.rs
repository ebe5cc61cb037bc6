//! Government procurement: an agency commits to a contract mechanism,
//! honest and opportunistic contractors bid.

use scmas::experiments::{run_procurement, ExperimentConfig};
use scmas::generators::{procurement, ContractorType};
use scmas::{classical_stackelberg, exact_scne, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SolverConfig::default();
    for kind in [ContractorType::Honest, ContractorType::Opportunistic] {
        let game = procurement(kind, 1)?;
        let s = exact_scne(&game, &cfg)?;
        let c = classical_stackelberg(&game, &cfg)?;
        println!(
            "{kind:14} S-CNE {} -> {:?}  classical {} -> {:?}",
            s.leader,
            s.modal_outcome(),
            c.leader,
            c.modal_outcome()
        );
    }
    let report = run_procurement(240, 1, &ExperimentConfig::default())?;
    let summary = report.aggregate.procurement.expect("procurement suite has a summary");
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
