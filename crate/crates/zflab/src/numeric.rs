//! Small numerical helpers: seeded RNG streams, Gauss-Legendre quadrature,
//! finite differences, circle integrals.

use crate::{Error, Result, C};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Deterministic RNG for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Gauss-Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` panels of `order` points.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for k in 0..order {
                nodes.push(lo + 0.5 * h * (x[k] + 1.0));
                weights.push(0.5 * h * w[k]);
            }
        }
        Rule { nodes, weights }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> C) -> C {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    pub fn integrate_real(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Integrates with doubling panel counts until two successive estimates agree
/// to `rel` (relative to `scale.max(|I|)`).
pub fn integrate_converged(
    a: f64,
    b: f64,
    order: usize,
    rel: f64,
    scale: f64,
    f: impl Fn(f64) -> C,
) -> Result<C> {
    let mut panels = 8;
    let mut prev = Rule::composite(a, b, panels, order).integrate(&f);
    for _ in 0..10 {
        panels *= 2;
        let cur = Rule::composite(a, b, panels, order).integrate(&f);
        if (cur - prev).norm() <= rel * scale.max(cur.norm()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!("quadrature on [{a}, {b}] did not converge; last {prev}")))
}

/// `(1/2πi) ∮ f(w) dw` over the circle `|w − c| = ρ` with `nodes` trapezoid points.
pub fn circle_residue(c: C, rho: f64, nodes: usize, f: impl Fn(C) -> C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for k in 0..nodes {
        let t = 2.0 * PI * k as f64 / nodes as f64;
        let e = C::from_polar(1.0, t);
        // dw = i ρ e dt, divided by 2πi
        acc += f(c + e * rho) * e * rho;
    }
    acc / nodes as f64
}

/// Richardson-extrapolated central difference of a real function.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Largest singular value of a dense complex matrix (row-major, `rows × cols`).
pub fn spectral_norm(rows: usize, cols: usize, data: &[C]) -> f64 {
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, data);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_for_polynomials() {
        let r = Rule::composite(0.0, 2.0, 1, 5);
        let v = r.integrate_real(|x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        let (_, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn residue_of_simple_pole() {
        let r = circle_residue(C::new(0.0, 1.0), 0.1, 64, |w| C::new(3.0, 0.0) / (w - C::new(0.0, 1.0)));
        assert!((r - C::new(3.0, 0.0)).norm() < 1e-14);
        let z = circle_residue(C::new(0.0, 0.0), 0.1, 64, |w| w.exp());
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn derivative_of_sin() {
        assert!((derivative(f64::sin, 0.3, 1e-3) - 0.3f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn norm_of_identity() {
        let d = vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        assert!((spectral_norm(2, 2, &d) - 1.0).abs() < 1e-14);
    }
}
