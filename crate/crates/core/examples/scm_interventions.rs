//! Builds a small structural causal model, enumerates its exogenous space
//! and compares natural and intervened outcomes.

use scmas::ScmBuilder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Weather drives both the leader's habit and the follower's reaction.
    let scm = ScmBuilder::new()
        .exogenous("U_W", vec![0.7, 0.3])
        .uniform_exogenous("U_F", 2)
        .node("X_L", 2, &["U_W"], vec![0, 1])
        .node("X_F", 2, &["X_L", "U_F"], vec![0, 1, 1, 1])
        .action("X_L")
        .action("X_F")
        .build()?;
    let (xl, xf) = (scm.node_id("X_L")?, scm.node_id("X_F")?);

    println!("u\tprob\tX_L\tX_F\tX_F | do(X_L=1)");
    for r in scm.enumerate_exogenous(1 << 16)? {
        let natural = scm.evaluate(&r.values, &[])?;
        let forced = scm.evaluate(&r.values, &[(xl, 1)])?;
        println!("{:?}\t{:.2}\t{}\t{}\t{}", r.values, r.prob, natural.node(xl), natural.node(xf), forced.node(xf));
    }

    // A feedback loop through the follower's action node.
    let cyclic = ScmBuilder::new()
        .uniform_exogenous("U", 2)
        .node("X_F", 2, &["U", "N"], vec![0, 1, 1, 1])
        .node("N", 2, &["X_F"], vec![0, 1])
        .action("X_F")
        .build()?;
    let n = cyclic.node_id("N")?;
    let xf = cyclic.node_id("X_F")?;
    println!("cyclic: {}", cyclic.is_cyclic());
    for u in 0..2 {
        let natural = cyclic.propagate(&[u], &[])?;
        let forced = cyclic.evaluate(&[u], &[(xf, 1)])?;
        println!("u={u}: natural N={} do(X_F=1) N={}", natural.node(n), forced.node(n));
    }
    match cyclic.evaluate(&[0], &[]) {
        Ok(_) => println!("loop resolved without intervention"),
        Err(e) => println!("without intervention: {e}"),
    }
    Ok(())
}
