//! Discretized m×n cross norms: the delta kernel, a rank-one kernel, and
//! the ω-weighted norm of a smooth 2×1 kernel.

use zflab::analysis::{cross_norm_estimate, parse_indicatrix, KernelSource};
use zflab::fock::RapidityGrid;
use zflab::C;

fn main() -> zflab::Result<()> {
    let omega = parse_indicatrix("log:beta=2")?;
    for npts in [8, 16, 32] {
        let grid = RapidityGrid::new(-3.0, 3.0, npts, 1.0)?;
        let rank_one = |a: &[f64], b: &[f64]| C::new((-a[0] * a[0]).exp(), 0.0) / (1.0 + b[0] * b[0]);
        let r1 = cross_norm_estimate(KernelSource::Smooth(&rank_one), 1, 1, &grid, None)?;
        let k = |a: &[f64], b: &[f64]| C::new((a[0] - b[0]).cos(), a[1]).exp() / (1.0 + a[0] * a[0]);
        let plain = cross_norm_estimate(KernelSource::Smooth(&k), 2, 1, &grid, None)?;
        let weighted = cross_norm_estimate(KernelSource::Smooth(&k), 2, 1, &grid, Some(&omega))?;
        println!("{npts:>2} points: rank one {r1:.6}, 2x1 kernel {plain:.6}, weighted {weighted:.6}");
    }
    Ok(())
}
