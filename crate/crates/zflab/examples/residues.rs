//! Residues of T_m at ζ_j − ζ_i = iπ by contour integration, and the
//! log-derivative formula for T_m(αx).

use zflab::formfactors::{check_logderiv, check_tm_residues, Contour};

fn main() -> zflab::Result<()> {
    let c = check_tm_residues(7, 20, 42, 1e-6, Contour::default())?;
    println!("{:<32} {} max rel err {:.2e}", c.name, c.passed, c.max_residual);
    for m in 2..=4 {
        let c = check_logderiv(m, 100, 42, 1e-6)?;
        println!("{:<32} {} max rel err {:.2e}", c.name, c.passed, c.max_residual);
    }
    Ok(())
}
