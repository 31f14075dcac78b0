//! Ratio test on c d^m sqrt(γ_α(m)) on both sides of α = 1/3.

use zflab::analysis::summability_test;

fn main() -> zflab::Result<()> {
    for alpha in [0.5, 0.4, 1.0 / 3.0, 0.3, 0.25] {
        let r = summability_test(alpha, 1.0, 2.0, 200)?;
        let last = r.log_ratios.last().copied().unwrap_or(f64::NAN);
        println!(
            "alpha={alpha:.4}: {:?}, exponent sign {:+}, tail slope {:+.3}, last log-ratio {last:+.3}",
            r.verdict, r.exponent_sign, r.tail_slope
        );
    }
    Ok(())
}
