//! Expansion coefficients of a small operator: basis property, inversion,
//! reflection, and agreement with matrix elements on the grid.

use zflab::araki::{self, kernels, Battery, OperatorExpansion};
use zflab::fock::{FockSpace, RapidityGrid};
use zflab::scattering::ScatteringFunction;
use zflab::C;

fn main() -> zflab::Result<()> {
    let grid = RapidityGrid::new(-2.0, 2.0, 5, 1.0)?;
    let s = ScatteringFunction::exponential(0.7)?;
    let a = OperatorExpansion::new()
        .with_term(0, 0, |_, _| C::new(0.3, 0.0))
        .with_term(1, 1, kernels::gaussian(1, 1, 1))
        .with_term(2, 0, kernels::gaussian(2, 0, 2));

    let f = araki::contracted_coefficients(&a, 1, 1)?;
    println!("f_(1,1) has {} delta terms", f.terms.len());

    let b = Battery::new(grid.clone(), s.clone(), 7);
    let fs = FockSpace::new(grid, s, 3)?;
    let checks = [
        araki::verify_basis(&a, 2, 2, &b, 1e-9)?,
        araki::verify_inversion(&a, 2, 1, &b, 1e-9)?,
        araki::verify_reflection(&a, 2, 2, &b, 1e-9)?,
        araki::verify_wick_against_grid(&fs, &a, 2, 1, 1e-11)?,
    ];
    for c in checks {
        println!("{:<44} {} {:.2e}", c.name, c.passed, c.max_residual);
    }
    Ok(())
}
