//! Built-in scattering functions: values on the real line and the
//! unitarity, hermiticity, crossing and periodicity checks.

use zflab::scattering::{check_defining_relations, ScatteringFunction};
use zflab::C;

fn main() -> zflab::Result<()> {
    let all = [
        ScatteringFunction::free(),
        ScatteringFunction::ising(),
        "exponential:a=0.7".parse::<ScatteringFunction>()?,
        ScatteringFunction::signed_exponential(0.7)?,
    ];
    let sample: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
    for s in &all {
        let half = s.eval(C::new(0.5, 0.0))?;
        let strip = s.eval(C::new(0.5, 1.0))?;
        println!("{s}: S(0) = {:+.3}, S(0.5) = {half:.4}, S(0.5 + i) = {strip:.4}", s.at_zero());
        let c = check_defining_relations(s, &sample, 1e-12);
        println!("  {} residual {:.2e}", if c.passed { "ok" } else { "FAILED" }, c.max_residual);
    }
    Ok(())
}
