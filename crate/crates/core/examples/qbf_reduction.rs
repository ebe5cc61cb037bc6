//! Encodes ∃x∀y formulas as games and checks the encoding against brute
//! force.

use scmas::qbf::{exhaustive_family, parse_qdimacs, random_qbf, reduce_to_scmas, verify_reduction_detail};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // ∃x1 ∀y2 (x1 ∨ y2) ∧ (x1 ∨ ¬y2): true with x1 = 1.
    let f = parse_qdimacs("p cnf 2 2\ne 1 0\na 2 0\n1 2 0\n1 -2 0\n")?;
    let game = reduce_to_scmas(&f)?;
    let v = verify_reduction_detail(&f)?;
    println!("{} leader actions, formula {} game {}", game.n_leader(), v.oracle, v.game);

    let family = exhaustive_family(1)?;
    let ok = family.iter().filter(|f| verify_reduction_detail(f).is_ok_and(|v| v.equivalent())).count();
    println!("exhaustive 1e1a family: {ok}/{} equivalent", family.len());

    let mut ok = 0;
    for seed in 0..100 {
        if verify_reduction_detail(&random_qbf(seed, 3, 3, 4, 3))?.equivalent() {
            ok += 1;
        }
    }
    println!("random 3e3a 4-clause formulas: {ok}/100 equivalent");
    Ok(())
}
