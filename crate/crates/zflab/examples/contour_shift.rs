//! Shifting the ξ contour from Im ξ = ε to Im ξ = π − ε for the
//! bump-smeared family at (m, n) = (1, 0).

use zflab::analysis::Profile;
use zflab::formfactors::{family_buchholz_summers, verify_contour_shift, ContourShiftConfig};

fn main() -> zflab::Result<()> {
    let bs = family_buchholz_summers(Profile::bump(1.0), 1.0);
    let cfg = ContourShiftConfig::for_family(&bs);
    let c = verify_contour_shift(&bs, 1, 0, &cfg)?;
    println!("{} passed={} in {:.1} s", c.name, c.passed, c.runtime_ms / 1e3);
    for key in ["eps", "line_discrepancy", "boundary_discrepancy", "boundary_shrink_factor"] {
        println!("  {key}: {}", c.details[key]);
    }
    Ok(())
}
