//! Warped convolution on homogeneous operators, the Q-commutator, and the
//! nested-commutator form of the expansion coefficients for S = e^{ia sinh θ}.
//!
//! Deformed operators act on the Bose grid Fock space: for an operator C with
//! momentum transfer φ_C, τ_Q(C) acts on a vector of total momentum P as
//! e^{iφ_C·QP} C. Only homogeneous operators are handled, as word sums.

use crate::araki::{contracted_coefficients, OperatorExpansion};
use crate::combinatorics::factorial;
use crate::fock::{minkowski, FockSpace, FockVector, RapidityGrid};
use crate::numeric::rng;
use crate::report::{worse, Check, CheckReport};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::Rng;
use std::time::Instant;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Q = −(a/2μ²)[[0,1],[1,0]], skew for the Minkowski product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrix {
    pub a: f64,
    pub mu: f64,
}

impl QMatrix {
    pub fn new(a: f64, mu: f64) -> Result<Self> {
        if !a.is_finite() || !(mu > 0.0) {
            return Err(Error::Config(format!("Q needs finite a and μ > 0, got a = {a}, μ = {mu}")));
        }
        Ok(QMatrix { a, mu })
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let c = -self.a / (2.0 * self.mu * self.mu);
        [[0.0, c], [c, 0.0]]
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let m = self.matrix();
        [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
    }

    /// x·Qy.
    pub fn form(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        minkowski(x, self.apply(y))
    }

    pub fn sum(&self, other: &QMatrix) -> QMatrix {
        QMatrix { a: self.a + other.a, mu: self.mu }
    }

    /// 2p(θ)·Qp(η), which equals a sinh(θ − η).
    pub fn exchange_exponent(&self, theta: f64, eta: f64) -> f64 {
        2.0 * self.form(p(self.mu, theta), p(self.mu, eta))
    }

    /// The scattering function produced by the deformation.
    pub fn scattering(&self) -> Result<ScatteringFunction> {
        ScatteringFunction::exponential(self.a)
    }
}

fn p(mu: f64, t: f64) -> [f64; 2] {
    [mu * t.cosh(), mu * t.sinh()]
}

fn add(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    [x[0] + y[0], x[1] + y[1]]
}

/// Elementary deformed operator at a grid index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Create(usize),
    Annihilate(usize),
}

/// Operator product with coefficient; `ops[0]` acts last.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub coeff: C,
    pub ops: Vec<Op>,
}

/// Finite sum of words sharing one momentum transfer φ.
#[derive(Debug, Clone, PartialEq)]
pub struct Homogeneous {
    pub phi: [f64; 2],
    pub words: Vec<Word>,
}

impl Homogeneous {
    pub fn identity() -> Self {
        Homogeneous { phi: [0.0, 0.0], words: vec![Word { coeff: ONE, ops: vec![] }] }
    }

    pub fn op(grid: &RapidityGrid, o: Op) -> Self {
        let phi = match o {
            Op::Create(a) => grid.momentum(grid.point(a)),
            Op::Annihilate(a) => {
                let q = grid.momentum(grid.point(a));
                [-q[0], -q[1]]
            }
        };
        Homogeneous { phi, words: vec![Word { coeff: ONE, ops: vec![o] }] }
    }

    pub fn product(&self, other: &Homogeneous) -> Homogeneous {
        let mut words = Vec::with_capacity(self.words.len() * other.words.len());
        for a in &self.words {
            for b in &other.words {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                words.push(Word { coeff: a.coeff * b.coeff, ops });
            }
        }
        Homogeneous { phi: add(self.phi, other.phi), words }
    }

    pub fn scale(&self, c: C) -> Homogeneous {
        let mut h = self.clone();
        for w in &mut h.words {
            w.coeff *= c;
        }
        h
    }

    /// Sum of two operators with the same momentum transfer.
    pub fn plus(&self, other: &Homogeneous) -> Homogeneous {
        debug_assert!((self.phi[0] - other.phi[0]).abs() + (self.phi[1] - other.phi[1]).abs() < 1e-9);
        let mut h = self.clone();
        h.words.extend(other.words.iter().cloned());
        h
    }
}

/// e^{2iφ_A·Qφ_B}.
pub fn exchange_phase(q: &QMatrix, a: [f64; 2], b: [f64; 2]) -> C {
    C::from_polar(1.0, 2.0 * q.form(a, b))
}

/// [A, B]_Q = AB − e^{2iφ_A Qφ_B} BA.
pub fn q_commutator(q: &QMatrix, a: &Homogeneous, b: &Homogeneous) -> Homogeneous {
    a.product(b).plus(&b.product(a).scale(-exchange_phase(q, a.phi, b.phi)))
}

/// Bose grid Fock space carrying the deformed operators z† = τ_Q(a†), z = τ_Q(a).
#[derive(Debug, Clone)]
pub struct DeformedFock {
    pub fs: FockSpace,
    pub q: QMatrix,
}

impl DeformedFock {
    pub fn new(grid: RapidityGrid, nmax: usize, a: f64) -> Result<Self> {
        let q = QMatrix::new(a, grid.mu)?;
        Ok(DeformedFock { fs: FockSpace::new(grid, ScatteringFunction::free(), nmax)?, q })
    }

    /// τ_Q(C)Ψ = C e^{iφ_C·QP}Ψ for an undeformed C with transfer φ_C.
    pub fn deform(&self, q: &QMatrix, phi: [f64; 2], c: &dyn Fn(&FockVector) -> FockVector, v: &FockVector) -> FockVector {
        let twisted = self.fs.diagonal(v, |d| C::from_polar(1.0, q.form(phi, self.fs.total_momentum(d))));
        c(&twisted)
    }

    pub fn apply_op(&self, o: Op, v: &FockVector) -> FockVector {
        let g = &self.fs.grid;
        match o {
            Op::Create(a) => self.deform(&self.q, g.momentum(g.point(a)), &|w| self.fs.create_at(a, w), v),
            Op::Annihilate(a) => {
                let k = g.momentum(g.point(a));
                self.deform(&self.q, [-k[0], -k[1]], &|w| self.fs.annihilate_at(a, w), v)
            }
        }
    }

    pub fn apply_word(&self, w: &Word, v: &FockVector) -> FockVector {
        let mut cur = v.clone();
        for &o in w.ops.iter().rev() {
            cur = self.apply_op(o, &cur);
            if !cur.truncated && cur.sectors.iter().all(|s| s.iter().all(|x| *x == ZERO)) {
                return cur;
            }
        }
        cur.scale(w.coeff)
    }

    pub fn apply(&self, h: &Homogeneous, v: &FockVector) -> FockVector {
        let mut out = self.fs.zero();
        for w in &h.words {
            out.axpy(ONE, &self.apply_word(w, v));
        }
        out
    }

    fn random_vector(&self, top: usize, r: &mut impl Rng) -> FockVector {
        self.fs.random_vector(top, r)
    }
}

/// Minkowski skewness of Q and agreement of the exchange phases with
/// S(θ − η) = e^{ia sinh(θ−η)} on grid pairs and random rapidities in
/// [−3, 3]. The phase residual grows like ε·a·sinh|θ − η|.
pub fn verify_phases(q: &QMatrix, grid: &RapidityGrid, samples: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let t0 = Instant::now();
    let s = q.scattering()?;
    let mut rep = CheckReport::new("warped-phases");
    let mut r = rng(seed, 0x9a);
    let mut skew = 0.0_f64;
    for _ in 0..samples {
        let x = [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
        let y = [r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
        let lhs = q.form(x, y);
        let rhs = -minkowski(q.apply(x), y);
        skew = worse(skew, (lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    rep.push(Check::residual("Q Minkowski skewness", "warped-q-skew", skew, tol).samples(samples as u64).seed(seed));
    let mut sinh_res = 0.0_f64;
    let mut phase_res = 0.0_f64;
    let mut n = 0u64;
    let mut pairs: Vec<(f64, f64)> = grid.points().iter().flat_map(|&a| grid.points().into_iter().map(move |b| (a, b))).collect();
    pairs.extend((0..samples).map(|_| (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0))));
    for (th, et) in pairs {
        let e = q.exchange_exponent(th, et);
        let want = q.a * (th - et).sinh();
        sinh_res = worse(sinh_res, (e - want).abs() / (1.0 + want.abs()));
        phase_res = worse(phase_res, (C::from_polar(1.0, e) - s.real(th - et)).norm());
        n += 1;
    }
    rep.push(
        Check::residual("2p(θ)Qp(η) = a sinh(θ−η)", "warped-exchange-exponent", sinh_res, tol)
            .samples(n)
            .seed(seed)
            .detail("sign", "+"),
    );
    rep.push(Check::residual("deformed exchange phase = S(θ−η)", "warped-exchange-phase", phase_res, tol).samples(n).seed(seed).timed(t0));
    Ok(rep)
}

/// Zamolodchikov-Faddeev relations of the deformed operators at grid points,
/// with S(θ) = e^{ia sinh θ}, on random vectors.
pub fn verify_zf_from_q(dfs: &DeformedFock, trials: usize, seed: u64, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let fs = &dfs.fs;
    let s = dfs.q.scattering()?;
    let npts = fs.npts();
    let pts = fs.grid.points();
    let mut worst = [0.0_f64; 3];
    for t in 0..trials {
        let mut r = rng(seed, 0x2f00 + t as u64);
        let psi = dfs.random_vector(fs.nmax.saturating_sub(2), &mut r);
        let a = r.random_range(0..npts);
        let b = r.random_range(0..npts);
        let (ca, cb, na, nb) = (Op::Create(a), Op::Create(b), Op::Annihilate(a), Op::Annihilate(b));
        let sab = s.real(pts[a] - pts[b]);
        let l = dfs.apply_op(ca, &dfs.apply_op(cb, &psi));
        let rr = dfs.apply_op(cb, &dfs.apply_op(ca, &psi)).scale(sab);
        worst[0] = worse(worst[0], fs.dist(&l, &rr));
        let l = dfs.apply_op(na, &dfs.apply_op(nb, &psi));
        let rr = dfs.apply_op(nb, &dfs.apply_op(na, &psi)).scale(sab);
        worst[1] = worse(worst[1], fs.dist(&l, &rr));
        let l = dfs.apply_op(na, &dfs.apply_op(cb, &psi));
        let mut rr = dfs.apply_op(cb, &dfs.apply_op(na, &psi)).scale(s.real(pts[b] - pts[a]));
        if a == b {
            rr.axpy(C::new(1.0 / fs.delta(), 0.0), &psi);
        }
        worst[2] = worse(worst[2], fs.dist(&l, &rr));
    }
    let w = worst.iter().cloned().fold(0.0, worse);
    Ok(Check::residual(&format!("deformed ZF relations a={}", dfs.q.a), "warped-zf-relations", w, tol)
        .samples(trials as u64)
        .seed(seed)
        .detail("creation_creation", worst[0])
        .detail("annihilation_annihilation", worst[1])
        .detail("annihilation_creation", worst[2])
        .timed(t0))
}

/// Seeded library of homogeneous test operators: single z†, z, and the
/// products z†z, z†z†, zz, z†z†z at random grid points.
pub fn kernel_library(grid: &RapidityGrid, r: &mut impl Rng) -> Vec<Homogeneous> {
    let mut pick = || r.random_range(0..grid.n_points);
    let c = |a| Homogeneous::op(grid, Op::Create(a));
    let z = |a| Homogeneous::op(grid, Op::Annihilate(a));
    vec![
        c(pick()),
        z(pick()),
        c(pick()).product(&z(pick())),
        c(pick()).product(&c(pick())),
        z(pick()).product(&z(pick())),
        c(pick()).product(&c(pick())).product(&z(pick())).scale(C::new(0.3, -0.7)),
    ]
}

/// Anticommutativity, Leibniz rule and Jacobi identity of the Q-commutator,
/// the CCR-type relations of z, z†, composition τ_Q τ_Q′ = τ_{Q+Q′}, and
/// preservation of the momentum transfer, all on random grid vectors.
pub fn verify_q_algebra(dfs: &DeformedFock, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let t0 = Instant::now();
    let fs = &dfs.fs;
    let q = &dfs.q;
    let mut rep = CheckReport::new("q-algebra");
    let mut w = [0.0_f64; 6];
    let top = fs.nmax.saturating_sub(4);
    for t in 0..trials {
        let mut r = rng(seed, 0x3a00 + t as u64);
        let lib = kernel_library(&fs.grid, &mut r);
        let pick = |r: &mut rand_chacha::ChaCha8Rng| lib[r.random_range(0..lib.len())].clone();
        let (a, b, c) = (pick(&mut r), pick(&mut r), pick(&mut r));
        let psi = dfs.random_vector(top, &mut r);
        let scale = 1.0 + fs.norm(&dfs.apply(&a.product(&b), &psi)) + fs.norm(&dfs.apply(&b.product(&a), &psi));
        // anticommutativity
        let lhs = dfs.apply(&q_commutator(q, &a, &b), &psi);
        let rhs = dfs.apply(&q_commutator(q, &b, &a), &psi).scale(-exchange_phase(q, a.phi, b.phi));
        w[0] = worse(w[0], fs.dist(&lhs, &rhs) / scale);
        // Leibniz
        let lhs = dfs.apply(&q_commutator(q, &a, &b.product(&c)), &psi);
        let mut rhs = dfs.apply(&q_commutator(q, &a, &b).product(&c), &psi);
        rhs.axpy(exchange_phase(q, a.phi, b.phi), &dfs.apply(&b.product(&q_commutator(q, &a, &c)), &psi));
        let scale3 = 1.0 + fs.norm(&dfs.apply(&a.product(&b).product(&c), &psi));
        w[1] = worse(w[1], fs.dist(&lhs, &rhs) / scale3);
        // Jacobi
        let term = |x: &Homogeneous, y: &Homogeneous, z: &Homogeneous| {
            dfs.apply(&q_commutator(q, x, &q_commutator(q, y, z)), &psi).scale(exchange_phase(q, x.phi, z.phi).conj())
        };
        let mut sum = term(&a, &b, &c);
        sum.axpy(ONE, &term(&b, &c, &a));
        sum.axpy(ONE, &term(&c, &a, &b));
        w[2] = worse(w[2], fs.norm(&sum) / scale3);
        // CCR-type relations with the discrete delta
        let i = r.random_range(0..fs.npts());
        let j = r.random_range(0..fs.npts());
        let zi = Homogeneous::op(&fs.grid, Op::Annihilate(i));
        let cj = Homogeneous::op(&fs.grid, Op::Create(j));
        let ci = Homogeneous::op(&fs.grid, Op::Create(i));
        let zj = Homogeneous::op(&fs.grid, Op::Annihilate(j));
        let mut ccr = dfs.apply(&q_commutator(q, &zi, &cj), &psi);
        if i == j {
            ccr.axpy(C::new(-1.0 / fs.delta(), 0.0), &psi);
        }
        let r1 = fs.norm(&ccr);
        let r2 = fs.norm(&dfs.apply(&q_commutator(q, &ci, &cj), &psi));
        let r3 = fs.norm(&dfs.apply(&q_commutator(q, &zi, &zj), &psi));
        w[3] = worse(w[3], r1.max(r2).max(r3) * fs.delta());
        // τ_Q τ_Q′ = τ_{Q+Q′} on a†(δ_i)
        let q2 = QMatrix { a: r.random_range(-1.0..1.0), mu: q.mu };
        let phi = fs.grid.momentum(fs.grid.point(i));
        let raw = |v: &FockVector| fs.create_at(i, v);
        let once = |v: &FockVector| dfs.deform(q, phi, &raw, v);
        let twice = dfs.deform(&q2, phi, &once, &psi);
        let joint = dfs.deform(&q.sum(&q2), phi, &raw, &psi);
        w[4] = worse(w[4], fs.dist(&twice, &joint) * fs.delta());
        // U(x) τ_Q(C) U(x)* = e^{iφ_C·x} τ_Q(C)
        let x = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let lhs = fs.translate(x, &dfs.apply(&a, &fs.translate([-x[0], -x[1]], &psi)));
        let rhs = dfs.apply(&a, &psi).scale(C::from_polar(1.0, minkowski(a.phi, x)));
        w[5] = worse(w[5], fs.dist(&lhs, &rhs) / scale);
    }
    let names = [
        ("Q-commutator anticommutativity", "qcomm-anticommutativity"),
        ("Q-commutator Leibniz rule", "qcomm-leibniz"),
        ("Q-commutator Jacobi identity", "qcomm-jacobi"),
        ("CCR-type Q-commutators of z, z†", "qcomm-ccr"),
        ("τ_Q τ_Q′ = τ_{Q+Q′}", "warped-composition"),
        ("deformation keeps momentum transfer", "warped-homogeneity"),
    ];
    for (k, (name, anchor)) in names.iter().enumerate() {
        rep.push(Check::residual(name, anchor, w[k], tol).samples(trials as u64).seed(seed).timed(t0));
    }
    Ok(rep)
}

fn decode(mut idx: usize, npts: usize, out: &mut [usize]) {
    for k in (0..out.len()).rev() {
        out[k] = idx % npts;
        idx /= npts;
    }
}

/// ⟨Ω, [z(θ_m)…[z(θ_1), [⋯[A, z†(η_n)]_Q ⋯, z†(η_1)]_Q]_Q ⋯]_Q Ω⟩ at all grid
/// tuples (θ first), for A = Σ ∫ g z†^{m′} z^{n′}/(m′!n′!) built from the
/// deformed operators.
pub fn nested_commutator_vev(dfs: &DeformedFock, a: &OperatorExpansion, m: usize, n: usize) -> Result<Vec<C>> {
    let fs = &dfs.fs;
    let grid = &fs.grid;
    let npts = fs.npts();
    let pts = grid.points();
    let need = a.terms.iter().map(|t| n + t.m).max().unwrap_or(0).max(m);
    if need > fs.nmax {
        return Err(Error::Precondition(format!("N_max = {} below the {need} particles the nested commutator needs", fs.nmax)));
    }
    let mut out = vec![ZERO; npts.pow((m + n) as u32)];
    let omega = fs.vacuum();
    let mut th = vec![0; m];
    let mut et = vec![0; n];
    for term in &a.terms {
        let (mp, np) = (term.m, term.n);
        let mut dt = vec![0; mp];
        let mut de = vec![0; np];
        let w = grid.delta().powi((mp + np) as i32) / (factorial(mp) * factorial(np));
        for it in 0..npts.pow((mp + np) as u32) {
            let mut all = vec![0; mp + np];
            decode(it, npts, &mut all);
            dt.copy_from_slice(&all[..mp]);
            de.copy_from_slice(&all[mp..]);
            let targ: Vec<C> = dt.iter().map(|&i| C::new(pts[i], 0.0)).collect();
            let earg: Vec<C> = de.iter().map(|&i| C::new(pts[i], 0.0)).collect();
            let g = (term.kernel)(&targ, &earg) * w;
            if g == ZERO {
                continue;
            }
            let mut h = Homogeneous::identity();
            for &i in &dt {
                h = h.product(&Homogeneous::op(grid, Op::Create(i)));
            }
            for &j in &de {
                h = h.product(&Homogeneous::op(grid, Op::Annihilate(j)));
            }
            let h = h.scale(g);
            for idx in 0..out.len() {
                let mut all = vec![0; m + n];
                decode(idx, npts, &mut all);
                th.copy_from_slice(&all[..m]);
                et.copy_from_slice(&all[m..]);
                let mut c = h.clone();
                for &j in et.iter().rev() {
                    c = q_commutator(&dfs.q, &c, &Homogeneous::op(grid, Op::Create(j)));
                }
                for &i in &th {
                    c = q_commutator(&dfs.q, &Homogeneous::op(grid, Op::Annihilate(i)), &c);
                }
                let v = dfs.apply(&c, &omega);
                if v.truncated {
                    return Err(Error::Resource("Fock truncation reached inside the nested commutator".into()));
                }
                out[idx] += v.sectors[0][0];
            }
        }
    }
    Ok(out)
}

/// Nested Q-commutator expression against f_{m,n}[A] from the contraction
/// formula, on the grid, for every (m, n) in `arities`.
pub fn verify_nested_commutator(dfs: &DeformedFock, a: &OperatorExpansion, arities: &[(usize, usize)], tol: f64) -> Result<CheckReport> {
    let mut rep = CheckReport::new("nested-commutator");
    let s = dfs.q.scattering()?;
    for &(m, n) in arities {
        let t0 = Instant::now();
        let lhs = contracted_coefficients(a, m, n)?.materialize(&dfs.fs.grid, &s)?;
        let rhs = nested_commutator_vev(dfs, a, m, n)?;
        let scale = lhs.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let resid = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm()).fold(0.0, worse) / scale;
        rep.push(
            Check::residual(&format!("nested Q-commutator (m,n)=({m},{n}) a={}", dfs.q.a), "nested-commutator-coefficients", resid, tol)
                .samples(lhs.len() as u64)
                .detail("max_abs_coefficient", lhs.iter().map(|x| x.norm()).fold(0.0, f64::max))
                .timed(t0),
        );
    }
    Ok(rep)
}

/// Operator with terms of arity (0,0), (1,0), (0,1), (1,1), (2,1), (1,2),
/// (2,2) and smooth, non-symmetric kernels.
pub fn battery_operator() -> OperatorExpansion {
    let k = |seed: f64| {
        move |t: &[C], e: &[C]| {
            let mut acc = C::new(0.2 * seed, 0.1);
            for (i, x) in t.iter().enumerate() {
                acc += x * (0.3 + 0.2 * i as f64) - x * x * 0.25;
            }
            for (j, y) in e.iter().enumerate() {
                acc += C::new(0.0, 0.4 - 0.3 * j as f64) * y - y * y * 0.2;
            }
            acc.exp()
        }
    };
    OperatorExpansion::new()
        .with_term(0, 0, k(1.0))
        .with_term(1, 0, k(2.0))
        .with_term(0, 1, k(3.0))
        .with_term(1, 1, k(4.0))
        .with_term(2, 1, k(5.0))
        .with_term(1, 2, k(6.0))
        .with_term(2, 2, k(7.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(a: f64, nmax: usize) -> DeformedFock {
        DeformedFock::new(RapidityGrid::new(-1.2, 0.9, 3, 1.0).unwrap(), nmax, a).unwrap()
    }

    #[test]
    fn exponent_sign() {
        let q = QMatrix::new(0.7, 1.3).unwrap();
        for (t, e) in [(0.4, -0.2), (1.5, 0.3), (-2.0, 1.0)] {
            assert!((q.exchange_exponent(t, e) - 0.7 * (t - e).sinh()).abs() < 1e-13);
        }
        let rep = verify_phases(&q, &RapidityGrid::new(-3.0, 3.0, 9, 1.3).unwrap(), 200, 1, 1e-13).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn zero_deformation_is_identity() {
        let d = small(0.0, 3);
        let mut r = rng(2, 0);
        let v = d.fs.random_vector(2, &mut r);
        let l = d.apply_op(Op::Create(1), &v);
        assert!(d.fs.dist(&l, &d.fs.create_at(1, &v)) < 1e-15);
        // creation on the vacuum carries no phase for any a
        let d = small(0.9, 3);
        let l = d.apply_op(Op::Create(2), &d.fs.vacuum());
        assert!(d.fs.dist(&l, &d.fs.create_at(2, &d.fs.vacuum())) < 1e-15);
    }

    #[test]
    fn zf_relations() {
        let d = DeformedFock::new(RapidityGrid::new(-2.0, 2.0, 5, 1.0).unwrap(), 4, 0.7).unwrap();
        let c = verify_zf_from_q(&d, 20, 3, 1e-12).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn q_algebra() {
        let d = DeformedFock::new(RapidityGrid::new(-2.0, 2.0, 4, 1.0).unwrap(), 5, 0.7).unwrap();
        let rep = verify_q_algebra(&d, 10, 4, 1e-10).unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn nested_commutator_small() {
        let a = battery_operator();
        for av in [0.0, 0.7] {
            let d = small(av, 4);
            let rep = verify_nested_commutator(&d, &a, &[(0, 0), (1, 0), (0, 1), (1, 1), (2, 1)], 1e-8).unwrap();
            for c in &rep.checks {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn nested_commutator_detects_wrong_phase() {
        // S = 1 coefficients against a deformed commutator
        let a = OperatorExpansion::new().with_term(2, 0, |t: &[C], _: &[C]| (t[0] * 0.7 - t[1] * 0.2).exp());
        let d = small(0.9, 3);
        let lhs = contracted_coefficients(&a, 2, 0).unwrap().materialize(&d.fs.grid, &ScatteringFunction::free()).unwrap();
        let rhs = nested_commutator_vev(&d, &a, 2, 0).unwrap();
        let diff = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff > 1e-3);
    }
}
