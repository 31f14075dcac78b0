//! Contracted matrix elements `f_{m,n}[A]` of finite operator expansions.
//!
//! Distributions are kept structural: a [`DeltaKernel`] is a sum of terms,
//! each a product of delta pairs `δ(θ_i − η_j)` and smooth factors. Weak
//! equality is decided by smearing against a seeded battery of separable
//! Gaussians on a rapidity grid.

use crate::combinatorics::{enumerate_contractions, factorial, Contraction, Permutation, Var};
use crate::fock::{momentum, minkowski, FockSpace, FockVector, RapidityGrid};
use crate::numeric::rng;
use crate::report::{worse, Check};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// Default cap on the number of terms a single kernel may hold.
pub const TERM_CAP: usize = 200_000;

pub type KernelFn = Arc<dyn Fn(&[C], &[C]) -> C + Send + Sync>;

#[derive(Clone)]
pub struct ExpansionTerm {
    pub m: usize,
    pub n: usize,
    pub kernel: KernelFn,
}

impl fmt::Debug for ExpansionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExpansionTerm({}, {})", self.m, self.n)
    }
}

/// `A = Σ ∫ g_{mn}(θ, η) z†(θ_1)…z†(θ_m) z(η_1)…z(η_n) / (m! n!)`.
#[derive(Clone, Debug, Default)]
pub struct OperatorExpansion {
    pub terms: Vec<ExpansionTerm>,
}

impl OperatorExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, m: usize, n: usize, k: impl Fn(&[C], &[C]) -> C + Send + Sync + 'static) -> Self {
        self.terms.push(ExpansionTerm { m, n, kernel: Arc::new(k) });
        self
    }

    /// `c · 1`.
    pub fn identity(c: C) -> Self {
        Self::new().with_term(0, 0, move |_, _| c)
    }

    pub fn max_arity(&self) -> usize {
        self.terms.iter().map(|t| t.m + t.n).max().unwrap_or(0)
    }

    /// `Sym_{S,θ} Sym_{S,η} g` of term `idx`.
    pub fn symmetrized(&self, s: &ScatteringFunction, idx: usize, theta: &[C], eta: &[C]) -> Result<C> {
        let t = &self.terms[idx];
        let pm = Permutation::all(t.m);
        let pn = Permutation::all(t.n);
        let mut acc = ZERO;
        for p in &pm {
            let sp = crate::combinatorics::s_sigma(s, p, theta)?;
            let th = p.apply(theta);
            for q in &pn {
                let sq = crate::combinatorics::s_sigma(s, q, eta)?;
                acc += sp * sq * (t.kernel)(&th, &q.apply(eta));
            }
        }
        Ok(acc / (pm.len() * pn.len()) as f64)
    }

    /// `A*`: term `(m, n, g)` becomes `(n, m, g*)`, `g*(a, b) = conj g(b̄ reversed, ā reversed)`.
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let k = t.kernel.clone();
                let kernel: KernelFn = Arc::new(move |a: &[C], b: &[C]| {
                    let th: Vec<C> = b.iter().rev().map(|z| z.conj()).collect();
                    let et: Vec<C> = a.iter().rev().map(|z| z.conj()).collect();
                    k(&th, &et).conj()
                });
                ExpansionTerm { m: t.n, n: t.m, kernel }
            })
            .collect();
        OperatorExpansion { terms }
    }

    /// `U(x, λ) A U(x, λ)*`: kernels become `e^{i(Σp(θ) − Σp(η))·x} g(θ − λ, η − λ)`.
    pub fn transformed(&self, x: [f64; 2], lambda: f64, mu: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let k = t.kernel.clone();
                let kernel: KernelFn = Arc::new(move |a: &[C], b: &[C]| {
                    let th: Vec<C> = a.iter().map(|z| z - lambda).collect();
                    let et: Vec<C> = b.iter().map(|z| z - lambda).collect();
                    k(&th, &et) * phase(a, b, x, mu)
                });
                ExpansionTerm { m: t.m, n: t.n, kernel }
            })
            .collect();
        OperatorExpansion { terms }
    }

    /// Dense grid samples of term `idx`, θ digits first.
    pub fn grid_kernel(&self, idx: usize, grid: &RapidityGrid) -> Vec<C> {
        let t = &self.terms[idx];
        let pts = grid.points();
        let npts = grid.n_points;
        let len = npts.pow((t.m + t.n) as u32);
        let mut out = Vec::with_capacity(len);
        let mut d = vec![0; t.m + t.n];
        for idx in 0..len {
            decode(idx, npts, &mut d);
            let th: Vec<C> = d[..t.m].iter().map(|&i| C::new(pts[i], 0.0)).collect();
            let et: Vec<C> = d[t.m..].iter().map(|&i| C::new(pts[i], 0.0)).collect();
            out.push((t.kernel)(&th, &et));
        }
        out
    }

    /// Applies `A` on the grid Fock space.
    pub fn apply(&self, fs: &FockSpace, v: &FockVector) -> FockVector {
        let mut out = fs.zero();
        out.truncated = v.truncated;
        for (i, t) in self.terms.iter().enumerate() {
            let k = self.grid_kernel(i, &fs.grid);
            let w = fs.apply_normal_ordered(t.m, t.n, &k, v);
            out.axpy(C::new(1.0 / (factorial(t.m) * factorial(t.n)), 0.0), &w);
        }
        out
    }
}

/// `e^{i(Σp(θ) − Σp(η))·x}`, with rapidities taken as real parts.
pub fn phase(theta: &[C], eta: &[C], x: [f64; 2], mu: f64) -> C {
    let mut p = [0.0; 2];
    for z in theta {
        let q = momentum(mu, z.re);
        p[0] += q[0];
        p[1] += q[1];
    }
    for z in eta {
        let q = momentum(mu, z.re);
        p[0] -= q[0];
        p[1] -= q[1];
    }
    C::from_polar(1.0, minkowski(p, x))
}

fn decode(mut idx: usize, npts: usize, out: &mut [usize]) {
    for k in (0..out.len()).rev() {
        out[k] = idx % npts;
        idx /= npts;
    }
}

/// Smooth factor of a delta-kernel term.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// `S(x − y)`.
    S(Var, Var),
    /// Expansion kernel `id` at the given variables, all shifted by `−shift`.
    Kernel { id: usize, theta: Vec<Var>, eta: Vec<Var>, shift: f64 },
    /// `1 − ∏ S(x − y)`.
    OneMinusProd(Vec<(Var, Var)>),
    /// `e^{i(Σp(θ) − Σp(η))·x}` over all variables of the kernel.
    Phase { x: [f64; 2], mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTerm {
    pub coeff: C,
    /// `δ(θ_i − η_j)` as `(i, j)`.
    pub deltas: Vec<(usize, usize)>,
    pub factors: Vec<Factor>,
}

/// Formal sum of delta-pattern terms in `m` θ- and `n` η-variables.
#[derive(Clone)]
pub struct DeltaKernel {
    pub m: usize,
    pub n: usize,
    pub terms: Vec<DeltaTerm>,
    pub kernels: Vec<KernelFn>,
}

impl fmt::Debug for DeltaKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeltaKernel")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl DeltaKernel {
    pub fn zero(m: usize, n: usize, kernels: Vec<KernelFn>) -> Self {
        DeltaKernel { m, n, terms: Vec::new(), kernels }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_cap(&self) -> Result<()> {
        if self.terms.len() > TERM_CAP {
            return Err(Error::Resource(format!(
                "{} delta terms at arity ({}, {}) exceed the cap {TERM_CAP}",
                self.terms.len(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }

    /// Re-expresses the kernel in `(m, n)` variables via `map` on every variable.
    pub fn relabel(&self, m: usize, n: usize, map: &dyn Fn(Var) -> Var) -> DeltaKernel {
        let mv = |v: Var| map(v);
        let terms = self
            .terms
            .iter()
            .map(|t| DeltaTerm {
                coeff: t.coeff,
                deltas: t
                    .deltas
                    .iter()
                    .map(|&(i, j)| delta_of(mv(Var::Theta(i)), mv(Var::Eta(j))))
                    .collect(),
                factors: t
                    .factors
                    .iter()
                    .map(|f| match f {
                        Factor::S(x, y) => Factor::S(mv(*x), mv(*y)),
                        Factor::Kernel { id, theta, eta, shift } => Factor::Kernel {
                            id: *id,
                            theta: theta.iter().map(|v| mv(*v)).collect(),
                            eta: eta.iter().map(|v| mv(*v)).collect(),
                            shift: *shift,
                        },
                        Factor::OneMinusProd(g) => {
                            Factor::OneMinusProd(g.iter().map(|(x, y)| (mv(*x), mv(*y))).collect())
                        }
                        Factor::Phase { .. } => {
                            panic!("relabelling a kernel with a global phase factor is not supported")
                        }
                    })
                    .collect(),
            })
            .collect();
        DeltaKernel { m, n, terms, kernels: self.kernels.clone() }
    }

    pub fn scaled(mut self, c: C) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    pub fn extend(&mut self, other: DeltaKernel) {
        assert_eq!((self.m, self.n), (other.m, other.n), "arity mismatch");
        if self.kernels.is_empty() {
            self.kernels = other.kernels.clone();
        }
        self.terms.extend(other.terms);
    }

    /// `e^{i(Σp(θ) − Σp(η))·x} k(θ − λ, η − λ)`.
    pub fn poincare(&self, x: [f64; 2], lambda: f64, mu: f64) -> DeltaKernel {
        let mut out = self.clone();
        for t in &mut out.terms {
            for f in &mut t.factors {
                if let Factor::Kernel { shift, .. } = f {
                    *shift += lambda;
                }
            }
            t.factors.push(Factor::Phase { x, mu });
        }
        out
    }

    /// Value of one term at a point; deltas are ignored (evaluate on support).
    pub fn eval_term(&self, t: &DeltaTerm, s: &dyn Fn(C) -> C, theta: &[C], eta: &[C]) -> C {
        let val = |v: Var| match v {
            Var::Theta(i) => theta[i],
            Var::Eta(j) => eta[j],
        };
        let mut acc = t.coeff;
        for f in &t.factors {
            acc *= match f {
                Factor::S(x, y) => s(val(*x) - val(*y)),
                Factor::Kernel { id, theta: a, eta: b, shift } => {
                    let th: Vec<C> = a.iter().map(|v| val(*v) - shift).collect();
                    let et: Vec<C> = b.iter().map(|v| val(*v) - shift).collect();
                    (self.kernels[*id])(&th, &et)
                }
                Factor::OneMinusProd(g) => ONE - g.iter().fold(ONE, |p, (x, y)| p * s(val(*x) - val(*y))),
                Factor::Phase { x, mu } => phase(theta, eta, *x, *mu),
            };
            if acc == ZERO {
                break;
            }
        }
        acc
    }

    /// Grid values with `δ` replaced by Kronecker/Δ, θ digits first.
    pub fn materialize(&self, grid: &RapidityGrid, s: &ScatteringFunction) -> Result<Vec<C>> {
        let npts = grid.n_points;
        let mut out = vec![ZERO; npts.pow((self.m + self.n) as u32)];
        let table = STable::new(grid, s)?;
        for (pattern, terms) in self.patterns() {
            let inv = 1.0 / grid.delta().powi(pattern.len() as i32);
            for_each_assignment(self.m, self.n, &pattern, npts, |slots| {
                let v: C = terms.iter().map(|t| self.eval_grid(t, &table, slots)).sum();
                let idx = slots.iter().fold(0, |a, &d| a * npts + d);
                out[idx] += v * inv;
            });
        }
        Ok(out)
    }

    fn patterns(&self) -> Vec<(Vec<(usize, usize)>, Vec<&DeltaTerm>)> {
        let mut map: BTreeMap<Vec<(usize, usize)>, Vec<&DeltaTerm>> = BTreeMap::new();
        for t in &self.terms {
            let mut d = t.deltas.clone();
            d.sort();
            map.entry(d).or_default().push(t);
        }
        map.into_iter().collect()
    }

    fn eval_grid(&self, t: &DeltaTerm, table: &STable, slots: &[usize]) -> C {
        let idx = |v: Var| match v {
            Var::Theta(i) => slots[i],
            Var::Eta(j) => slots[self.m + j],
        };
        let mut acc = t.coeff;
        for f in &t.factors {
            acc *= match f {
                Factor::S(x, y) => table.at(idx(*x), idx(*y)),
                Factor::OneMinusProd(g) => ONE - g.iter().fold(ONE, |p, (x, y)| p * table.at(idx(*x), idx(*y))),
                _ => {
                    let th: Vec<C> = (0..self.m).map(|i| C::new(table.pts[slots[i]], 0.0)).collect();
                    let et: Vec<C> = (0..self.n).map(|j| C::new(table.pts[slots[self.m + j]], 0.0)).collect();
                    let single = DeltaTerm { coeff: ONE, deltas: vec![], factors: vec![f.clone()] };
                    self.eval_term(&single, &|z| table.s.value(z), &th, &et)
                }
            };
            if acc == ZERO {
                break;
            }
        }
        acc
    }
}

fn delta_of(a: Var, b: Var) -> (usize, usize) {
    match (a, b) {
        (Var::Theta(i), Var::Eta(j)) | (Var::Eta(j), Var::Theta(i)) => (i, j),
        _ => panic!("delta must pair a θ- with an η-variable, got {a:?}, {b:?}"),
    }
}

struct STable {
    s: ScatteringFunction,
    pts: Vec<f64>,
    npts: usize,
    vals: Vec<C>,
}

impl STable {
    fn new(grid: &RapidityGrid, s: &ScatteringFunction) -> Result<Self> {
        let pts = grid.points();
        let npts = pts.len();
        let mut vals = Vec::with_capacity(npts * npts);
        for a in &pts {
            for b in &pts {
                vals.push(s.eval(C::new(a - b, 0.0))?);
            }
        }
        Ok(STable { s: s.clone(), pts, npts, vals })
    }

    #[inline]
    fn at(&self, a: usize, b: usize) -> C {
        self.vals[a * self.npts + b]
    }
}

/// Calls `f(slots)` for every grid assignment consistent with the delta pattern.
fn for_each_assignment(m: usize, n: usize, pattern: &[(usize, usize)], npts: usize, mut f: impl FnMut(&[usize])) {
    // free slots: every θ, plus η not fixed by a delta
    let mut owner: Vec<Option<usize>> = vec![None; m + n];
    for &(i, j) in pattern {
        owner[m + j] = Some(i);
    }
    let free: Vec<usize> = (0..m + n).filter(|&k| owner[k].is_none()).collect();
    let count = npts.pow(free.len() as u32);
    let mut slots = vec![0; m + n];
    let mut digits = vec![0; free.len()];
    for idx in 0..count {
        decode(idx, npts, &mut digits);
        for (k, &sl) in free.iter().enumerate() {
            slots[sl] = digits[k];
        }
        for k in 0..m + n {
            if let Some(i) = owner[k] {
                slots[k] = slots[i];
            }
        }
        f(&slots);
    }
}

/// Seeded separable Gaussian test functions for weak comparisons.
#[derive(Debug, Clone)]
pub struct Battery {
    pub grid: RapidityGrid,
    pub s: ScatteringFunction,
    pub seed: u64,
    pub count: usize,
}

impl Battery {
    pub fn new(grid: RapidityGrid, s: ScatteringFunction, seed: u64) -> Self {
        Battery { grid, s, seed, count: 32 }
    }

    /// `tests[k][slot][grid index]`, deterministic per arity.
    pub fn test_functions(&self, m: usize, n: usize) -> Vec<Vec<Vec<C>>> {
        let mut r = rng(self.seed, 7_000 + (m * 16 + n) as u64);
        let pts = self.grid.points();
        let (lo, hi) = (self.grid.min, self.grid.max);
        let span = hi - lo;
        (0..self.count)
            .map(|_| {
                (0..m + n)
                    .map(|_| {
                        let c = r.random_range(lo + 0.2 * span..hi - 0.2 * span);
                        let w = r.random_range(0.08 * span..0.25 * span);
                        let k = r.random_range(-1.0..1.0);
                        let f: Vec<C> = pts
                            .iter()
                            .map(|x| C::from_polar((-(x - c).powi(2) / (2.0 * w * w)).exp(), k * x))
                            .collect();
                        let nrm = self.grid.l2(&f);
                        f.into_iter().map(|z| z / nrm).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `∫ K(θ, η) ∏ φ_k(θ_i) ∏ φ_k(η_j)` for every test function.
    pub fn smear(&self, k: &DeltaKernel) -> Result<Vec<C>> {
        let tests = self.test_functions(k.m, k.n);
        let table = STable::new(&self.grid, &self.s)?;
        let npts = self.grid.n_points;
        let dl = self.grid.delta();
        let count = self.count;
        let patterns = k.patterns();
        let parts: Vec<Vec<C>> = patterns
            .par_iter()
            .map(|(pattern, terms)| {
                let mut acc = vec![ZERO; count];
                let w = dl.powi((k.m + k.n - pattern.len()) as i32);
                for_each_assignment(k.m, k.n, pattern, npts, |slots| {
                    let v: C = terms.iter().map(|t| k.eval_grid(t, &table, slots)).sum();
                    if v == ZERO {
                        return;
                    }
                    let v = v * w;
                    for (a, test) in acc.iter_mut().zip(&tests) {
                        let p = slots.iter().enumerate().fold(ONE, |p, (sl, &d)| p * test[sl][d]);
                        *a += v * p;
                    }
                });
                acc
            })
            .collect();
        let mut out = vec![ZERO; count];
        for p in parts {
            for (o, x) in out.iter_mut().zip(p) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Smears a dense grid array over `grid^{m+n}`.
    pub fn smear_dense(&self, m: usize, n: usize, dense: &[C]) -> Vec<C> {
        let tests = self.test_functions(m, n);
        let npts = self.grid.n_points;
        let w = self.grid.delta().powi((m + n) as i32);
        let mut d = vec![0; m + n];
        let mut out = vec![ZERO; self.count];
        for (idx, v) in dense.iter().enumerate() {
            if *v == ZERO {
                continue;
            }
            decode(idx, npts, &mut d);
            for (a, test) in out.iter_mut().zip(&tests) {
                *a += v * w * d.iter().enumerate().fold(ONE, |p, (sl, &g)| p * test[sl][g]);
            }
        }
        out
    }

    /// `max_k |⟨a, φ_k⟩ − ⟨b, φ_k⟩| / max(1, max_k |⟨a, φ_k⟩|)`.
    pub fn residual(&self, a: &DeltaKernel, b: &DeltaKernel) -> Result<f64> {
        if (a.m, a.n) != (b.m, b.n) {
            return Err(Error::Precondition("weak comparison across different arities".into()));
        }
        Ok(compare(&self.smear(a)?, &self.smear(b)?))
    }
}

pub fn compare(a: &[C], b: &[C]) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, worse) / scale
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum W {
    V(Var),
    Xi(usize),
    Ka(usize),
}

#[derive(Clone)]
struct Branch {
    deltas: Vec<(W, W)>,
    s: Vec<(W, W)>,
    left: Vec<W>,
    right: Vec<W>,
}

/// Applies `z(a)` to `z†(v_1)…z†(v_p)Ω`: `Σ_j ∏_{i<j} S(v_i − a) δ(a − v_j)`.
/// On the bra side the S factors are conjugated, `S(a − v_i)` for real arguments.
fn annihilate(branches: Vec<Branch>, a: W, bra: bool) -> Vec<Branch> {
    let mut out = Vec::new();
    for b in branches {
        let list = if bra { &b.left } else { &b.right };
        for j in 0..list.len() {
            let mut nb = b.clone();
            for &v in &list[..j] {
                nb.s.push(if bra { (a, v) } else { (v, a) });
            }
            nb.deltas.push((a, list[j]));
            if bra {
                nb.left.remove(j);
            } else {
                nb.right.remove(j);
            }
            out.push(nb);
        }
    }
    out
}

/// `⟨z†(θ_1)…z†(θ_m)Ω, A z†(η_n)…z†(η_1)Ω⟩` as a delta kernel.
pub fn wick_matrix_element(a: &OperatorExpansion, m: usize, n: usize) -> Result<DeltaKernel> {
    let kernels: Vec<KernelFn> = a.terms.iter().map(|t| t.kernel.clone()).collect();
    let mut out = DeltaKernel::zero(m, n, kernels);
    for (id, t) in a.terms.iter().enumerate() {
        if t.m > m || t.n > n || m - t.m != n - t.n {
            continue;
        }
        let mut br = vec![Branch {
            deltas: vec![],
            s: vec![],
            left: (0..m).map(|i| W::V(Var::Theta(i))).collect(),
            right: (0..n).rev().map(|j| W::V(Var::Eta(j))).collect(),
        }];
        for i in 0..t.m {
            br = annihilate(br, W::Xi(i), true);
        }
        for j in (0..t.n).rev() {
            br = annihilate(br, W::Ka(j), false);
        }
        for _ in 0..m - t.m {
            let mut next = Vec::new();
            for mut b in br {
                let l = b.left.remove(0);
                next.extend(annihilate(vec![b], l, false));
            }
            br = next;
        }
        if br.len() > TERM_CAP {
            return Err(Error::Resource(format!("{} Wick branches exceed the cap {TERM_CAP}", br.len())));
        }
        let coeff = C::new(1.0 / (factorial(t.m) * factorial(t.n)), 0.0);
        for b in br {
            let mut sub: BTreeMap<W, Var> = BTreeMap::new();
            let mut deltas = Vec::new();
            for &(x, y) in &b.deltas {
                match (x, y) {
                    (W::Xi(_) | W::Ka(_), W::V(v)) => {
                        sub.insert(x, v);
                    }
                    (W::V(u), W::V(v)) => deltas.push(delta_of(u, v)),
                    _ => unreachable!("auxiliary variables only pair with external ones"),
                }
            }
            let r = |w: W| match w {
                W::V(v) => v,
                other => sub[&other],
            };
            let mut factors: Vec<Factor> = b.s.iter().map(|&(x, y)| Factor::S(r(x), r(y))).collect();
            factors.push(Factor::Kernel {
                id,
                theta: (0..t.m).map(|i| r(W::Xi(i))).collect(),
                eta: (0..t.n).map(|j| r(W::Ka(j))).collect(),
                shift: 0.0,
            });
            deltas.sort();
            out.terms.push(DeltaTerm { coeff, deltas, factors });
        }
    }
    out.check_cap()?;
    Ok(out)
}

/// Relabels a reduced-arity kernel into the uncontracted variables of `c`.
fn embed(k: &DeltaKernel, c: &Contraction, swap: bool) -> DeltaKernel {
    let fl = c.free_left();
    let fr = c.free_right();
    if swap {
        k.relabel(c.m, c.n, &|v| match v {
            Var::Theta(i) => Var::Eta(fr[i]),
            Var::Eta(j) => Var::Theta(fl[j]),
        })
    } else {
        k.relabel(c.m, c.n, &|v| match v {
            Var::Theta(i) => Var::Theta(fl[i]),
            Var::Eta(j) => Var::Eta(fr[j]),
        })
    }
}

/// `Σ_C sign^{|C|} δ_C S_C [R_C] · provider(m − |C|, n − |C|)` embedded into the
/// free variables (swapped when `swap`).
fn contraction_sum(
    m: usize,
    n: usize,
    alternating: bool,
    with_rc: bool,
    swap: bool,
    provider: &dyn Fn(usize, usize) -> Result<DeltaKernel>,
) -> Result<DeltaKernel> {
    let mut out: Option<DeltaKernel> = None;
    for c in enumerate_contractions(m, n) {
        let (pm, pn) = if swap { (n - c.len(), m - c.len()) } else { (m - c.len(), n - c.len()) };
        let base = provider(pm, pn)?;
        let mut k = embed(&base, &c, swap);
        let sign = if alternating && c.len() % 2 == 1 { -1.0 } else { 1.0 };
        let dp = c.delta_pairs();
        let sc: Vec<Factor> = c.sc_factors().into_iter().map(|(x, y)| Factor::S(x, y)).collect();
        let rc: Vec<Factor> = if with_rc {
            c.rc_factors().into_iter().map(Factor::OneMinusProd).collect()
        } else {
            vec![]
        };
        for t in &mut k.terms {
            t.coeff *= sign;
            t.deltas.extend(dp.iter().cloned());
            t.deltas.sort();
            t.factors.extend(sc.iter().cloned());
            t.factors.extend(rc.iter().cloned());
        }
        match &mut out {
            None => out = Some(k),
            Some(o) => o.extend(k),
        }
        if let Some(o) = &out {
            o.check_cap()?;
        }
    }
    Ok(out.expect("at least the empty contraction"))
}

/// `f_{m,n}[A] = Σ_C (−1)^{|C|} δ_C S_C ⟨l_C|A|r_C⟩`.
pub fn contracted_coefficients(a: &OperatorExpansion, m: usize, n: usize) -> Result<DeltaKernel> {
    contraction_sum(m, n, true, false, false, &|p, q| wick_matrix_element(a, p, q))
}

/// `Σ_C δ_C S_C f_{m−|C|,n−|C|}[A]`, which should reproduce `⟨l|A|r⟩`.
pub fn reconstruct_matrix_element(a: &OperatorExpansion, m: usize, n: usize) -> Result<DeltaKernel> {
    contraction_sum(m, n, false, false, false, &|p, q| contracted_coefficients(a, p, q))
}

/// `f_{m,n}[J A* J]` from `⟨l(θ)|JA*J|r(η)⟩ = ⟨l(η)|A|r(θ)⟩`.
pub fn reflected_coefficients(a: &OperatorExpansion, m: usize, n: usize) -> Result<DeltaKernel> {
    contraction_sum(m, n, true, false, false, &|p, q| {
        let k = wick_matrix_element(a, q, p)?;
        Ok(k.relabel(p, q, &|v| match v {
            Var::Theta(i) => Var::Eta(i),
            Var::Eta(j) => Var::Theta(j),
        }))
    })
}

/// `Σ_C (−1)^{|C|} δ_C S_C R_C f_{n−|C|,m−|C|}[A](η̂, θ̂)`.
pub fn reflection_formula(a: &OperatorExpansion, m: usize, n: usize) -> Result<DeltaKernel> {
    contraction_sum(m, n, true, true, true, &|p, q| contracted_coefficients(a, p, q))
}

/// `Σ_{(m,n) terms} Sym_{S,θ} Sym_{S,η} g` as a delta-free kernel.
pub fn symmetrized_kernel(a: &OperatorExpansion, m: usize, n: usize) -> DeltaKernel {
    let kernels: Vec<KernelFn> = a.terms.iter().map(|t| t.kernel.clone()).collect();
    let mut out = DeltaKernel::zero(m, n, kernels);
    let pm = Permutation::all(m);
    let pn = Permutation::all(n);
    let norm = C::new(1.0 / (pm.len() * pn.len()) as f64, 0.0);
    for (id, t) in a.terms.iter().enumerate() {
        if (t.m, t.n) != (m, n) {
            continue;
        }
        for p in &pm {
            for q in &pn {
                let mut factors: Vec<Factor> = p
                    .inversions()
                    .into_iter()
                    .map(|(i, j)| Factor::S(Var::Theta(p.at(i)), Var::Theta(p.at(j))))
                    .collect();
                factors.extend(
                    q.inversions()
                        .into_iter()
                        .map(|(i, j)| Factor::S(Var::Eta(q.at(i)), Var::Eta(q.at(j)))),
                );
                factors.push(Factor::Kernel {
                    id,
                    theta: (0..m).map(|i| Var::Theta(p.at(i))).collect(),
                    eta: (0..n).map(|j| Var::Eta(q.at(j))).collect(),
                    shift: 0.0,
                });
                out.terms.push(DeltaTerm { coeff: norm, deltas: vec![], factors });
            }
        }
    }
    out
}

/// `S^π(θ) S^τ(η) K(θ^π, η^τ)`.
pub fn permuted(k: &DeltaKernel, pi: &Permutation, tau: &Permutation) -> DeltaKernel {
    let mut out = k.relabel(k.m, k.n, &|v| match v {
        Var::Theta(i) => Var::Theta(pi.at(i)),
        Var::Eta(j) => Var::Eta(tau.at(j)),
    });
    let mut extra: Vec<Factor> = pi
        .inversions()
        .into_iter()
        .map(|(i, j)| Factor::S(Var::Theta(pi.at(i)), Var::Theta(pi.at(j))))
        .collect();
    extra.extend(
        tau.inversions()
            .into_iter()
            .map(|(i, j)| Factor::S(Var::Eta(tau.at(i)), Var::Eta(tau.at(j)))),
    );
    for t in &mut out.terms {
        t.factors.extend(extra.iter().cloned());
    }
    out
}

/// `⟨l(θ)|A|r(η)⟩` at all grid tuples, computed on the grid Fock space.
pub fn grid_matrix_elements(fs: &FockSpace, op: &(dyn Fn(&FockVector) -> FockVector + Sync), m: usize, n: usize) -> Result<Vec<C>> {
    if m.max(n) > fs.nmax {
        return Err(Error::Precondition(format!("N_max = {} below arity ({m}, {n})", fs.nmax)));
    }
    let npts = fs.npts();
    let build = |k: usize, reversed: bool| -> Vec<FockVector> {
        let mut d = vec![0; k];
        (0..npts.pow(k as u32))
            .map(|idx| {
                decode(idx, npts, &mut d);
                let mut v = fs.vacuum();
                // l = z†(θ_1)…z†(θ_m)Ω applies θ_m first; r = z†(η_n)…z†(η_1)Ω applies η_1 first
                let order: Vec<usize> = if reversed { d.iter().rev().cloned().collect() } else { d.clone() };
                for a in order {
                    v = fs.create_at(a, &v);
                }
                v
            })
            .collect()
    };
    let lefts = build(m, true);
    let rights: Vec<FockVector> = build(n, false).par_iter().map(|r| op(r)).collect();
    let out: Vec<C> = lefts
        .par_iter()
        .flat_map_iter(|l| rights.iter().map(move |r| fs.inner(l, r)).collect::<Vec<_>>())
        .collect();
    Ok(out)
}

fn max_rel(a: &[C], b: &[C]) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, worse) / scale
}

/// Structural `⟨l|A|r⟩` against the grid Fock oracle, exact on the grid.
pub fn verify_wick_against_grid(fs: &FockSpace, a: &OperatorExpansion, m: usize, n: usize, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let k = wick_matrix_element(a, m, n)?;
    let structural = k.materialize(&fs.grid, &fs.s)?;
    let oracle = grid_matrix_elements(fs, &|v| a.apply(fs, v), m, n)?;
    let r = max_rel(&oracle, &structural);
    Ok(Check::residual(&format!("wick ({m},{n}) vs grid {}", fs.s), "matrix-element-wick", r, tol)
        .samples(oracle.len() as u64)
        .detail("terms", k.terms.len())
        .timed(t0))
}

/// Inversion: `Σ_C δ_C S_C f_{m−|C|,n−|C|}` weakly equals `⟨l|A|r⟩`.
pub fn verify_inversion(a: &OperatorExpansion, m: usize, n: usize, battery: &Battery, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let lhs = reconstruct_matrix_element(a, m, n)?;
    let rhs = wick_matrix_element(a, m, n)?;
    let r = battery.residual(&rhs, &lhs)?;
    Ok(Check::residual(&format!("inversion ({m},{n}) {}", battery.s), "coefficient-inversion", r, tol)
        .samples(battery.count as u64)
        .seed(battery.seed)
        .timed(t0))
}

/// Basis property and selection rule: `f_{m,n}[A] = Σ Sym_{S,θ} Sym_{S,η} g_{mn}` for
/// all `m ≤ mmax`, `n ≤ nmax`.
pub fn verify_basis(a: &OperatorExpansion, mmax: usize, nmax: usize, battery: &Battery, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let mut worst = 0.0;
    let mut per = BTreeMap::new();
    for m in 0..=mmax {
        for n in 0..=nmax {
            let f = contracted_coefficients(a, m, n)?;
            let g = symmetrized_kernel(a, m, n);
            let r = battery.residual(&g, &f)?;
            per.insert(format!("{m},{n}"), r);
            worst = worse(worst, r);
        }
    }
    Ok(Check::residual(&format!("basis property {}", battery.s), "coefficients-dual-basis", worst, tol)
        .samples(battery.count as u64)
        .seed(battery.seed)
        .detail("per_arity", per)
        .timed(t0))
}

/// `f_{m,n}(θ, η) = S^π(θ) S^τ(η) f_{m,n}(θ^π, η^τ)` for random `π, τ`.
pub fn verify_symmetry(a: &OperatorExpansion, m: usize, n: usize, trials: usize, battery: &Battery, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let f = contracted_coefficients(a, m, n)?;
    let base = battery.smear(&f)?;
    let mut r = rng(battery.seed, 11);
    let mut worst = 0.0;
    for _ in 0..trials {
        let pi = Permutation::random(m, &mut r);
        let tau = Permutation::random(n, &mut r);
        worst = worse(worst, compare(&base, &battery.smear(&permuted(&f, &pi, &tau))?));
    }
    Ok(Check::residual(&format!("S-symmetry ({m},{n}) {}", battery.s), "coefficient-s-symmetry", worst, tol)
        .samples(trials as u64)
        .seed(battery.seed)
        .timed(t0))
}

/// Coefficients of `U(x,λ) A U(x,λ)*` against the phase-and-shift transform.
pub fn verify_poincare(
    a: &OperatorExpansion,
    m: usize,
    n: usize,
    transforms: &[([f64; 2], f64)],
    mu: f64,
    battery: &Battery,
    tol: f64,
) -> Result<Check> {
    let t0 = Instant::now();
    let f = contracted_coefficients(a, m, n)?;
    let mut worst = 0.0;
    for &(x, l) in transforms {
        let lhs = contracted_coefficients(&a.transformed(x, l, mu), m, n)?;
        worst = worse(worst, battery.residual(&f.poincare(x, l, mu), &lhs)?);
    }
    Ok(Check::residual(&format!("Poincaré covariance ({m},{n}) {}", battery.s), "coefficient-covariance", worst, tol)
        .samples(transforms.len() as u64)
        .seed(battery.seed)
        .timed(t0))
}

/// Translations on the grid: `⟨l|U A U*|r⟩` against the transformed expansion.
pub fn verify_translation_on_grid(fs: &FockSpace, a: &OperatorExpansion, m: usize, n: usize, x: [f64; 2], tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let oracle = grid_matrix_elements(fs, &|v| fs.translate(x, &a.apply(fs, &fs.translate([-x[0], -x[1]], v))), m, n)?;
    let structural = wick_matrix_element(&a.transformed(x, 0.0, fs.grid.mu), m, n)?.materialize(&fs.grid, &fs.s)?;
    let r = max_rel(&oracle, &structural);
    Ok(Check::residual(&format!("translated matrix elements ({m},{n}) {}", fs.s), "coefficient-covariance", r, tol)
        .timed(t0))
}

/// `f_{m,n}[JA*J] = Σ_C (−1)^{|C|} δ_C S_C R_C f_{n−|C|,m−|C|}[A](η̂, θ̂)`.
pub fn verify_reflection(a: &OperatorExpansion, m: usize, n: usize, battery: &Battery, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let lhs = reflected_coefficients(a, m, n)?;
    let rhs = reflection_formula(a, m, n)?;
    let r = battery.residual(&lhs, &rhs)?;
    Ok(Check::residual(&format!("reflection ({m},{n}) {}", battery.s), "reflected-coefficients", r, tol)
        .samples(battery.count as u64)
        .seed(battery.seed)
        .timed(t0))
}

/// Grid check that `J A* J` has the matrix elements used by [`reflected_coefficients`].
pub fn verify_reflected_on_grid(fs: &FockSpace, a: &OperatorExpansion, m: usize, n: usize, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let adj = a.adjoint();
    let oracle = grid_matrix_elements(fs, &|v| fs.reflect(&adj.apply(fs, &fs.reflect(v))), m, n)?;
    let k = wick_matrix_element(a, n, m)?.relabel(m, n, &|v| match v {
        Var::Theta(i) => Var::Eta(i),
        Var::Eta(j) => Var::Theta(j),
    });
    let r = max_rel(&oracle, &k.materialize(&fs.grid, &fs.s)?);
    Ok(Check::residual(&format!("JA*J matrix elements ({m},{n}) {}", fs.s), "reflected-coefficients", r, tol)
        .timed(t0))
}

/// `[A, φ′(g)]` as `Σ ∫ (f_{m,n+1} z†^m (B^{ḡ⁺,ξ})* z^n − f_{m+1,n} z†^m B^{g⁻,ξ} z^n) / (m!n!)`.
#[derive(Debug, Clone)]
pub struct CommutatorExpansion {
    /// `(m, n, f_{m,n+1})`.
    pub plus: Vec<(usize, usize, DeltaKernel)>,
    /// `(m, n, f_{m+1,n})`.
    pub minus: Vec<(usize, usize, DeltaKernel)>,
    pub g_plus: Vec<C>,
    pub g_minus: Vec<C>,
}

pub fn commutator_expansion(a: &OperatorExpansion, g_plus: &[C], g_minus: &[C]) -> Result<CommutatorExpansion> {
    let top = a.max_arity();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for m in 0..top {
        for n in 0..top - m {
            let fp = contracted_coefficients(a, m, n + 1)?;
            if !fp.is_zero() {
                plus.push((m, n, fp));
            }
            let fm = contracted_coefficients(a, m + 1, n)?;
            if !fm.is_zero() {
                minus.push((m, n, fm));
            }
        }
    }
    Ok(CommutatorExpansion { plus, minus, g_plus: g_plus.to_vec(), g_minus: g_minus.to_vec() })
}

impl CommutatorExpansion {
    pub fn apply(&self, fs: &FockSpace, v: &FockVector) -> Result<FockVector> {
        let mut out = fs.zero();
        let gp = &self.g_plus;
        let gm = &self.g_minus;
        let bstar = |xi: &[usize], lam: &[usize]| gp[xi[0]] * fs.b_factor(xi[0], lam, true);
        let b = |xi: &[usize], lam: &[usize]| gm[xi[0]] * fs.b_factor(xi[0], lam, false);
        for (m, n, f) in &self.plus {
            let k = f.materialize(&fs.grid, &fs.s)?;
            let w = fs.apply_with_middle(*m, *n, 1, &k, &bstar, v);
            out.axpy(C::new(1.0 / (factorial(*m) * factorial(*n)), 0.0), &w);
        }
        for (m, n, f) in &self.minus {
            let k = f.materialize(&fs.grid, &fs.s)?;
            let w = fs.apply_with_middle(*m, *n, 1, &k, &b, v);
            out.axpy(C::new(-1.0 / (factorial(*m) * factorial(*n)), 0.0), &w);
        }
        Ok(out)
    }
}

/// Direct commutator `A φ′(g) − φ′(g) A` against the expansion, on random vectors.
pub fn verify_commutator(fs: &FockSpace, a: &OperatorExpansion, trials: usize, seed: u64, tol: f64) -> Result<Check> {
    let t0 = Instant::now();
    let raise = a.terms.iter().map(|t| t.m as i64 - t.n as i64).max().unwrap_or(0).max(0) as usize;
    if fs.nmax < raise + 1 {
        return Err(Error::Precondition("N_max too small for the commutator check".into()));
    }
    let top = fs.nmax - raise - 1;
    let mut worst = 0.0;
    for t in 0..trials {
        let mut r = rng(seed, 300 + t as u64);
        let gp = fs.random_function(&mut r);
        let gm = fs.random_function(&mut r);
        let v = fs.random_vector(top, &mut r);
        let ce = commutator_expansion(a, &gp, &gm)?;
        let direct = a
            .apply(fs, &fs.field_primed(&gp, &gm, &v))
            .sub(&fs.field_primed(&gp, &gm, &a.apply(fs, &v)));
        let viaexp = ce.apply(fs, &v)?;
        let scale = fs.norm(&direct).max(1.0);
        worst = worse(worst, fs.dist(&direct, &viaexp) / scale);
    }
    Ok(Check::residual(&format!("commutator with φ′ {}", fs.s), "field-commutator-expansion", worst, tol)
        .samples(trials as u64)
        .seed(seed)
        .timed(t0))
}

/// Smooth bounded test kernels used by examples and suites.
pub mod kernels {
    use super::*;

    /// `∏ e^{−(x − c_k)²/2w²} e^{i k_k x}` over all arguments, with seeded centers.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> impl Fn(&[C], &[C]) -> C + Send + Sync + Clone {
        let mut r = rng(seed, 42);
        let params: Vec<(f64, f64, f64)> = (0..m + n)
            .map(|_| (r.random_range(-0.8..0.8), r.random_range(0.5..1.0), r.random_range(-1.0..1.0)))
            .collect();
        move |th: &[C], et: &[C]| {
            th.iter()
                .chain(et)
                .zip(&params)
                .map(|(x, &(c, w, k))| (-(x - c) * (x - c) / (2.0 * w * w)).exp() * (C::new(0.0, k) * x).exp())
                .product()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RapidityGrid {
        RapidityGrid::new(-2.0, 2.0, 5, 1.0).unwrap()
    }

    fn all_s() -> Vec<ScatteringFunction> {
        vec![
            ScatteringFunction::free(),
            ScatteringFunction::ising(),
            ScatteringFunction::exponential(0.7).unwrap(),
        ]
    }

    fn op(m: usize, n: usize, seed: u64) -> OperatorExpansion {
        OperatorExpansion::new().with_term(m, n, kernels::gaussian(m, n, seed))
    }

    #[test]
    fn wick_matches_grid() {
        for s in all_s() {
            let fs = FockSpace::new(grid(), s, 3).unwrap();
            let a = op(1, 1, 1).with_term(2, 0, kernels::gaussian(2, 0, 2)).with_term(0, 0, |_, _| C::new(0.3, 0.1));
            for (m, n) in [(0, 0), (1, 1), (2, 2), (2, 0), (3, 1), (1, 2)] {
                let c = verify_wick_against_grid(&fs, &a, m, n, 1e-12).unwrap();
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn selection_rule_is_exact() {
        let a = op(2, 1, 3);
        for (m, n) in [(1, 1), (2, 2), (0, 1), (3, 1)] {
            let f = contracted_coefficients(&a, m, n).unwrap();
            let g = symmetrized_kernel(&a, m, n);
            let b = Battery::new(grid(), ScatteringFunction::ising(), 1);
            assert!(b.residual(&g, &f).unwrap() < 1e-12, "({m},{n})");
        }
    }

    #[test]
    fn basis_property() {
        for s in all_s() {
            let b = Battery::new(grid(), s, 2);
            let a = op(1, 1, 4).with_term(2, 1, kernels::gaussian(2, 1, 5));
            let c = verify_basis(&a, 2, 2, &b, 1e-10).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn inversion_and_symmetry() {
        for s in all_s() {
            let b = Battery::new(grid(), s, 3);
            let a = op(1, 1, 6).with_term(2, 0, kernels::gaussian(2, 0, 7));
            let c = verify_inversion(&a, 2, 2, &b, 1e-10).unwrap();
            assert!(c.passed, "{c:?}");
            let c = verify_symmetry(&a, 2, 2, 4, &b, 1e-10).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn poincare() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        let b = Battery::new(grid(), s.clone(), 4);
        let a = op(1, 1, 8);
        let c = verify_poincare(&a, 1, 1, &[([0.3, -0.2], 0.0), ([0.1, 0.4], 0.37)], 1.0, &b, 1e-10).unwrap();
        assert!(c.passed, "{c:?}");
        let fs = FockSpace::new(grid(), s, 2).unwrap();
        let c = verify_translation_on_grid(&fs, &a, 1, 1, [0.3, -0.2], 1e-12).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn reflection() {
        for s in all_s() {
            let fs = FockSpace::new(grid(), s.clone(), 3).unwrap();
            let a = op(1, 1, 9).with_term(2, 0, kernels::gaussian(2, 0, 10));
            let c = verify_reflected_on_grid(&fs, &a, 1, 1, 1e-12).unwrap();
            assert!(c.passed, "{c:?}");
            let b = Battery::new(grid(), s, 5);
            for (m, n) in [(1, 1), (2, 0), (0, 2), (2, 2)] {
                let c = verify_reflection(&a, m, n, &b, 1e-10).unwrap();
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn commutator() {
        for s in all_s() {
            let fs = FockSpace::new(grid(), s, 3).unwrap();
            let a = op(1, 1, 11).with_term(2, 0, kernels::gaussian(2, 0, 12));
            let c = verify_commutator(&fs, &a, 2, 3, 1e-10).unwrap();
            assert!(c.passed, "{c:?}");
        }
    }
}

#[cfg(test)]
mod negative {
    use super::*;

    #[test]
    fn checks_detect_wrong_answers() {
        let grid = RapidityGrid::new(-2.0, 2.0, 5, 1.0).unwrap();
        let s = ScatteringFunction::exponential(0.7).unwrap();
        let b = Battery::new(grid.clone(), s.clone(), 1);
        let a = OperatorExpansion::new().with_term(2, 1, kernels::gaussian(2, 1, 3));
        let f = contracted_coefficients(&a, 2, 1).unwrap();
        let sm = b.smear(&f).unwrap();
        let mag = sm.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(mag > 1e-3, "smeared coefficients are too small: {mag}");
        // unsymmetrized kernel differs from f_{2,1}
        let raw = symmetrized_kernel(&OperatorExpansion::new().with_term(2, 1, kernels::gaussian(2, 1, 3)), 2, 1);
        let mut wrong = raw.clone();
        wrong.terms.truncate(1);
        assert!(b.residual(&f, &wrong).unwrap() > 1e-4);
        // the grid oracle notices a different scattering function
        let fs = FockSpace::new(grid, ScatteringFunction::ising(), 3).unwrap();
        let k = wick_matrix_element(&a, 2, 1).unwrap().materialize(&fs.grid, &s).unwrap();
        let o = grid_matrix_elements(&fs, &|v| a.apply(&fs, v), 2, 1).unwrap();
        assert!(max_rel(&o, &k) > 1e-4);
    }
}
