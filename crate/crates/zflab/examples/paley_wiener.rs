//! Boundary relation and strip bounds of the Fourier components of bump
//! functions supported in a shifted right wedge.

use zflab::analysis::{paley_wiener_check, PaleyWienerConfig, TestFunction2D};

fn main() -> zflab::Result<()> {
    let cfg = PaleyWienerConfig::default();
    let bumps = [
        TestFunction2D::Bump { center: [0.0, 2.5], radius: 0.6 },
        TestFunction2D::Bump { center: [0.3, 3.0], radius: 0.8 },
    ];
    for f in bumps {
        println!("{f:?}");
        for c in paley_wiener_check(&f, &cfg)?.checks {
            println!("  {:<45} {:>5} residual {:.3e} (tol {:.1e})", c.name, c.passed, c.max_residual, c.tol);
        }
    }
    Ok(())
}
