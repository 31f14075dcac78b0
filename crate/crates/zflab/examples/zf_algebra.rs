//! Zamolodchikov-Faddeev relations on a truncated S-symmetric Fock space.

use zflab::fock::{check_primed_commutators, check_zf_relations, FockSpace, RapidityGrid};
use zflab::scattering::ScatteringFunction;

fn main() -> zflab::Result<()> {
    let grid = RapidityGrid::new(-3.0, 3.0, 16, 1.0)?;
    for s in [ScatteringFunction::free(), ScatteringFunction::ising(), ScatteringFunction::exponential(0.7)?] {
        let fs = FockSpace::new(grid.clone(), s.clone(), 3)?;
        let zf = check_zf_relations(&fs, 20, 42, 1e-10);
        let primed = check_primed_commutators(&fs, 20, 42, 1e-10);
        println!("{s}");
        for c in [zf, primed] {
            println!("  {:<40} {} {:.2e} in {:.0} ms", c.name, c.passed, c.max_residual, c.runtime_ms);
        }
    }
    Ok(())
}
