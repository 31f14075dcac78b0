//! Sampled supremum of |T_m| on real rapidities. Pass the number of samples
//! per arity as the first argument.

use zflab::formfactors::{sample_tm_bound, t_m_real, DEFAULT_DISTRIBUTIONS};

fn main() -> zflab::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    println!("T_3(0, 1, -2) = {:.6}", t_m_real(&[0.0, 1.0, -2.0]));
    for m in 1..=11 {
        let b = sample_tm_bound(m, samples, &DEFAULT_DISTRIBUTIONS, 42)?;
        println!(
            "m={m:>2} max|T_m| = {:.15} exceeds={} boundary residual {:.1e}",
            b.max_abs, b.exceeds, b.boundary_residual
        );
    }
    Ok(())
}
