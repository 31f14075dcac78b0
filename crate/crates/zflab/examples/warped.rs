//! Warped convolution of the free field: exchange phases, the deformed
//! algebra, and the nested Q-commutator formula for the coefficients.

use zflab::fock::RapidityGrid;
use zflab::warped::{battery_operator, verify_nested_commutator, verify_phases, verify_zf_from_q, DeformedFock, QMatrix};

fn main() -> zflab::Result<()> {
    let a = 0.7;
    let q = QMatrix::new(a, 1.0)?;
    println!("Q = {:?}, S = {}", q.matrix(), q.scattering()?);
    let mut checks = verify_phases(&q, &RapidityGrid::new(-3.0, 3.0, 16, 1.0)?, 200, 1, 1e-13)?.checks;
    let dfs = DeformedFock::new(RapidityGrid::new(-2.0, 2.0, 5, 1.0)?, 4, a)?;
    checks.push(verify_zf_from_q(&dfs, 20, 1, 1e-12)?);
    let small = DeformedFock::new(RapidityGrid::new(-1.2, 0.9, 3, 1.0)?, 4, a)?;
    checks.extend(verify_nested_commutator(&small, &battery_operator(), &[(1, 0), (1, 1), (2, 1)], 1e-8)?.checks);
    for c in checks {
        println!("{:<40} {} {:.2e}", c.name, c.passed, c.max_residual);
    }
    Ok(())
}
