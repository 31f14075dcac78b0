//! Conditions (F1)-(F6) for the two built-in form factor families.

use zflab::analysis::Profile;
use zflab::formfactors::{family_buchholz_summers, family_schroer_truong, verify_conditions_f, FConfig};
use zflab::scattering::ScatteringFunction;

fn main() -> zflab::Result<()> {
    let cfg = FConfig { samples: 20, ..FConfig::default() };
    let bs = family_buchholz_summers(Profile::bump(1.0), 1.0);
    let st = family_schroer_truong(Profile::bump(1.0), 1.0, &ScatteringFunction::ising())?;
    for (fam, ks) in [(&bs, vec![2]), (&st, vec![1, 3])] {
        for c in verify_conditions_f(fam, &ks, &cfg)?.checks {
            println!("{:<36} {:>5} {:.3e} (tol {:.1e})", c.name, c.passed, c.max_residual, c.tol);
        }
    }
    Ok(())
}
