//! Truncated S-symmetric Fock space on a rapidity grid.
//!
//! Sector `n` is a dense array over `grid^n`, first variable most significant.
//! Inner products carry the weight `Δ^n`; the discrete delta is `1/Δ` at
//! coincident grid points, which keeps the Zamolodchikov-Faddeev relations
//! exact on the grid.

use crate::combinatorics::Permutation;
use crate::numeric::{rng, spectral_norm};
use crate::report::{worse, Check};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::Rng;
use rand_distr::StandardNormal;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct RapidityGrid {
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
    pub mu: f64,
}

impl RapidityGrid {
    pub fn new(min: f64, max: f64, n_points: usize, mu: f64) -> Result<Self> {
        if n_points < 2 || !(max > min) || !(mu > 0.0) {
            return Err(Error::Config(format!(
                "grid needs n_points >= 2, max > min, mass > 0 (got {n_points}, [{min}, {max}], {mu})"
            )));
        }
        Ok(RapidityGrid { min, max, n_points, mu })
    }

    pub fn delta(&self) -> f64 {
        (self.max - self.min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.delta()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// `p(θ) = μ(cosh θ, sinh θ)`.
    pub fn momentum(&self, theta: f64) -> [f64; 2] {
        momentum(self.mu, theta)
    }

    /// Grid L² norm of a one-particle array.
    pub fn l2(&self, f: &[C]) -> f64 {
        (f.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.delta()).sqrt()
    }

    /// Bilinear pairing `Σ Δ f g` (no conjugation).
    pub fn pair(&self, f: &[C], g: &[C]) -> C {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<C>() * self.delta()
    }
}

pub fn momentum(mu: f64, theta: f64) -> [f64; 2] {
    [mu * theta.cosh(), mu * theta.sinh()]
}

/// `x·y = x⁰y⁰ − x¹y¹`.
pub fn minkowski(x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[0] - x[1] * y[1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub sectors: Vec<Vec<C>>,
    /// Set when an operation dropped a nonzero component above `N_max`.
    pub truncated: bool,
}

impl FockVector {
    pub fn zero(nmax: usize, npts: usize) -> Self {
        FockVector {
            sectors: (0..=nmax).map(|n| vec![ZERO; npts.pow(n as u32)]).collect(),
            truncated: false,
        }
    }

    pub fn vacuum(nmax: usize, npts: usize) -> Self {
        let mut v = Self::zero(nmax, npts);
        v.sectors[0][0] = C::new(1.0, 0.0);
        v
    }

    pub fn nmax(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn axpy(&mut self, a: C, x: &FockVector) {
        for (s, t) in self.sectors.iter_mut().zip(&x.sectors) {
            for (u, v) in s.iter_mut().zip(t) {
                *u += a * v;
            }
        }
        self.truncated |= x.truncated;
    }

    pub fn add(&self, x: &FockVector) -> FockVector {
        let mut r = self.clone();
        r.axpy(C::new(1.0, 0.0), x);
        r
    }

    pub fn sub(&self, x: &FockVector) -> FockVector {
        let mut r = self.clone();
        r.axpy(C::new(-1.0, 0.0), x);
        r
    }

    pub fn scale(&self, a: C) -> FockVector {
        let mut r = self.clone();
        for s in &mut r.sectors {
            for u in s.iter_mut() {
                *u *= a;
            }
        }
        r
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &FockVector, delta: f64) -> C {
        self.sectors
            .iter()
            .zip(&other.sectors)
            .enumerate()
            .map(|(n, (a, b))| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>() * delta.powi(n as i32))
            .sum()
    }

    pub fn norm(&self, delta: f64) -> f64 {
        self.inner(self, delta).re.max(0.0).sqrt()
    }

    /// Keeps sectors `0..=k`.
    pub fn project_particles(&self, k: usize) -> FockVector {
        let mut r = self.clone();
        for (n, s) in r.sectors.iter_mut().enumerate() {
            if n > k {
                s.iter_mut().for_each(|u| *u = ZERO);
            }
        }
        r
    }
}

/// Grid, scattering function and truncation, with cached tables.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub grid: RapidityGrid,
    pub s: ScatteringFunction,
    pub nmax: usize,
    table: Vec<C>,
    perms: Vec<Vec<(Vec<usize>, Vec<(usize, usize)>)>>,
}

impl FockSpace {
    pub fn new(grid: RapidityGrid, s: ScatteringFunction, nmax: usize) -> Result<Self> {
        if nmax > 6 {
            return Err(Error::Resource(format!("N_max = {nmax} exceeds the desk-scale cap 6")));
        }
        let total = (0..=nmax).map(|n| grid.n_points.pow(n as u32)).sum::<usize>();
        if total > 4_000_000 {
            return Err(Error::Resource(format!(
                "{total} amplitudes per vector; reduce grid points or N_max"
            )));
        }
        let pts = grid.points();
        let npts = grid.n_points;
        let mut table = vec![ZERO; npts * npts];
        for a in 0..npts {
            for b in 0..npts {
                table[a * npts + b] = s.eval(C::new(pts[a] - pts[b], 0.0))?;
            }
        }
        let perms = (0..=nmax)
            .map(|n| {
                Permutation::all(n)
                    .into_iter()
                    .map(|p| {
                        let inv = p.inversions().into_iter().map(|(i, j)| (p.at(i), p.at(j))).collect();
                        (p.images().to_vec(), inv)
                    })
                    .collect()
            })
            .collect();
        Ok(FockSpace { grid, s, nmax, table, perms })
    }

    pub fn npts(&self) -> usize {
        self.grid.n_points
    }

    pub fn delta(&self) -> f64 {
        self.grid.delta()
    }

    /// `S(θ_a − θ_b)` on grid indices.
    #[inline]
    pub fn s_at(&self, a: usize, b: usize) -> C {
        self.table[a * self.grid.n_points + b]
    }

    pub fn sector_len(&self, n: usize) -> usize {
        self.grid.n_points.pow(n as u32)
    }

    #[inline]
    pub fn decode(&self, mut idx: usize, n: usize, out: &mut [usize]) {
        let npts = self.grid.n_points;
        for k in (0..n).rev() {
            out[k] = idx % npts;
            idx /= npts;
        }
    }

    #[inline]
    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.grid.n_points + d)
    }

    pub fn vacuum(&self) -> FockVector {
        FockVector::vacuum(self.nmax, self.npts())
    }

    pub fn zero(&self) -> FockVector {
        FockVector::zero(self.nmax, self.npts())
    }

    /// `S^σ` on grid digits for a cached permutation.
    #[inline]
    fn s_sigma_digits(&self, inv: &[(usize, usize)], d: &[usize]) -> C {
        inv.iter().fold(C::new(1.0, 0.0), |acc, &(a, b)| acc * self.s_at(d[a], d[b]))
    }

    /// `P^S_n`: `(1/n!) Σ_σ S^σ(θ) f(θ^σ)`.
    pub fn project(&self, n: usize, f: &[C]) -> Vec<C> {
        if n <= 1 {
            return f.to_vec();
        }
        let perms = self.perm_table(n);
        let norm = 1.0 / perms.len() as f64;
        let mut out = vec![ZERO; f.len()];
        let mut d = vec![0; n];
        let mut pd = vec![0; n];
        for (idx, o) in out.iter_mut().enumerate() {
            self.decode(idx, n, &mut d);
            let mut acc = ZERO;
            for (img, inv) in perms.iter() {
                for k in 0..n {
                    pd[k] = d[img[k]];
                }
                acc += self.s_sigma_digits(inv, &d) * f[self.encode(&pd)];
            }
            *o = acc * norm;
        }
        out
    }

    fn perm_table(&self, n: usize) -> std::borrow::Cow<'_, [(Vec<usize>, Vec<(usize, usize)>)]> {
        if n < self.perms.len() {
            std::borrow::Cow::Borrowed(&self.perms[n])
        } else {
            std::borrow::Cow::Owned(
                Permutation::all(n)
                    .into_iter()
                    .map(|p| {
                        let inv = p.inversions().into_iter().map(|(i, j)| (p.at(i), p.at(j))).collect();
                        (p.images().to_vec(), inv)
                    })
                    .collect(),
            )
        }
    }

    /// Max over grid tuples and permutations of `|f(θ) − S^σ(θ) f(θ^σ)|`.
    pub fn symmetry_defect(&self, n: usize, f: &[C]) -> f64 {
        let perms = self.perm_table(n);
        let mut d = vec![0; n];
        let mut pd = vec![0; n];
        let mut worst = 0.0;
        for idx in 0..f.len() {
            self.decode(idx, n, &mut d);
            for (img, inv) in perms.iter() {
                for k in 0..n {
                    pd[k] = d[img[k]];
                }
                let r = (f[idx] - self.s_sigma_digits(inv, &d) * f[self.encode(&pd)]).norm();
                worst = worse(worst, r);
            }
        }
        worst
    }

    /// `(z†(f)Φ)_n = √n P_n(f ⊗ Φ_{n−1})`.
    pub fn create(&self, f: &[C], v: &FockVector) -> FockVector {
        let mut out = self.zero();
        out.truncated = v.truncated;
        let npts = self.npts();
        for n in 1..=self.nmax {
            let prev = &v.sectors[n - 1];
            let len = prev.len();
            let mut raw = vec![ZERO; len * npts];
            for (a, fa) in f.iter().enumerate() {
                for (k, p) in prev.iter().enumerate() {
                    raw[a * len + k] = fa * p;
                }
            }
            let scale = (n as f64).sqrt();
            out.sectors[n] = self.project(n, &raw).into_iter().map(|x| x * scale).collect();
        }
        if v.sectors[self.nmax].iter().any(|x| *x != ZERO) && f.iter().any(|x| *x != ZERO) {
            out.truncated = true;
        }
        out
    }

    /// `(z(f)Φ)_{n−1}(θ̂) = √n Σ_i Δ f_i Φ_n(θ_i, θ̂)`.
    pub fn annihilate(&self, f: &[C], v: &FockVector) -> FockVector {
        let mut out = self.zero();
        out.truncated = v.truncated;
        let dl = self.delta();
        for n in 1..=self.nmax {
            let cur = &v.sectors[n];
            let len = cur.len() / self.npts();
            let scale = (n as f64).sqrt() * dl;
            let o = &mut out.sectors[n - 1];
            for (a, fa) in f.iter().enumerate() {
                let fa = fa * scale;
                for k in 0..len {
                    o[k] += fa * cur[a * len + k];
                }
            }
        }
        out
    }

    /// Grid array of the discrete delta at index `a`.
    pub fn delta_at(&self, a: usize) -> Vec<C> {
        let mut f = vec![ZERO; self.npts()];
        f[a] = C::new(1.0 / self.delta(), 0.0);
        f
    }

    pub fn create_at(&self, a: usize, v: &FockVector) -> FockVector {
        self.create(&self.delta_at(a), v)
    }

    pub fn annihilate_at(&self, a: usize, v: &FockVector) -> FockVector {
        self.annihilate(&self.delta_at(a), v)
    }

    /// `∫ K(θ, η) z†(θ_1)…z†(θ_m) z(η_1)…z(η_n) Φ` for a dense kernel over
    /// `grid^{m+n}` (θ first). No `1/(m!n!)` factor.
    pub fn apply_normal_ordered(&self, m: usize, n: usize, kernel: &[C], v: &FockVector) -> FockVector {
        self.apply_with_middle(m, n, 0, kernel, &|_, _| C::new(1.0, 0.0), v)
    }

    /// `Σ_ξ Δ^q ∫ K(θ, ξ, η) z†^m(θ) M(ξ) z^n(η) Φ`, where `M(ξ)` multiplies
    /// the intermediate sector by `middle(ξ, λ)`. The kernel is dense over
    /// `grid^{m+q+n}` in the order (θ, ξ, η); `q` is 0 or 1.
    pub fn apply_with_middle(
        &self,
        m: usize,
        n: usize,
        q: usize,
        kernel: &[C],
        middle: &dyn Fn(&[usize], &[usize]) -> C,
        v: &FockVector,
    ) -> FockVector {
        let npts = self.npts();
        let dl = self.delta();
        let mut out = self.zero();
        out.truncated = v.truncated;
        let lm = npts.pow(m as u32);
        let lq = npts.pow(q as u32);
        let ln = npts.pow(n as u32);
        assert_eq!(kernel.len(), lm * lq * ln, "kernel size");
        let mut eta = vec![0; n];
        let mut rev = vec![0; n];
        let mut xi = vec![0; q];
        for k in n..=self.nmax {
            let l = k - n + m;
            let src = &v.sectors[k];
            if src.iter().all(|x| *x == ZERO) {
                continue;
            }
            if l > self.nmax {
                out.truncated = true;
                continue;
            }
            let rest = npts.pow((k - n) as u32);
            let mut lam = vec![0; k - n];
            // contracted[η-reversed index][λ] = Φ_k(η_n..η_1, λ)
            let mut raw = vec![ZERO; lm * rest];
            let mut tmp = vec![ZERO; rest];
            for iq in 0..lq {
                self.decode(iq, q, &mut xi);
                for it in 0..lm {
                    tmp.iter_mut().for_each(|x| *x = ZERO);
                    for ie in 0..ln {
                        let kv = kernel[(it * lq + iq) * ln + ie];
                        if kv == ZERO {
                            continue;
                        }
                        self.decode(ie, n, &mut eta);
                        for j in 0..n {
                            rev[j] = eta[n - 1 - j];
                        }
                        let base = self.encode(&rev) * rest;
                        for (t, s) in tmp.iter_mut().zip(&src[base..base + rest]) {
                            *t += kv * s;
                        }
                    }
                    let w = dl.powi((n + q) as i32);
                    for (il, t) in tmp.iter().enumerate() {
                        if *t == ZERO {
                            continue;
                        }
                        self.decode(il, k - n, &mut lam);
                        raw[it * rest + il] += t * w * middle(&xi, &lam);
                    }
                }
            }
            let c = (fact(k) * fact(l)).sqrt() / fact(k - n);
            out.sectors[l] = self.project(l, &raw).into_iter().map(|x| x * c).collect();
        }
        out
    }

    /// `B^{g,θ_a}`: multiplies sector n by `g(θ_a) ∏_j S(θ_a − θ_j)`.
    pub fn b_operator(&self, g: &[C], a: usize, v: &FockVector) -> FockVector {
        self.b_generic(g[a], a, v, false)
    }

    /// `(B^{g,θ_a})*`.
    pub fn b_adjoint(&self, g: &[C], a: usize, v: &FockVector) -> FockVector {
        self.b_generic(g[a].conj(), a, v, true)
    }

    /// Multiplier of `B^{·,θ_a}` (without `g`) on a tuple.
    pub fn b_factor(&self, a: usize, lam: &[usize], adjoint: bool) -> C {
        lam.iter().fold(C::new(1.0, 0.0), |acc, &d| {
            let s = self.s_at(a, d);
            acc * if adjoint { s.conj() } else { s }
        })
    }

    fn b_generic(&self, ga: C, a: usize, v: &FockVector, adjoint: bool) -> FockVector {
        let mut out = v.clone();
        for n in 0..=self.nmax {
            let mut d = vec![0; n];
            for (idx, x) in out.sectors[n].iter_mut().enumerate() {
                self.decode(idx, n, &mut d);
                *x *= ga * self.b_factor(a, &d, adjoint);
            }
        }
        out
    }

    /// Antiunitary reflection: conjugate and reverse each sector.
    pub fn reflect(&self, v: &FockVector) -> FockVector {
        let mut out = v.clone();
        for n in 0..=self.nmax {
            let mut d = vec![0; n];
            let mut r = vec![0; n];
            for idx in 0..v.sectors[n].len() {
                self.decode(idx, n, &mut d);
                for k in 0..n {
                    r[k] = d[n - 1 - k];
                }
                out.sectors[n][idx] = v.sectors[n][self.encode(&r)].conj();
            }
        }
        out
    }

    /// Applies `f(tuple)` as a diagonal multiplier on every sector.
    pub fn diagonal(&self, v: &FockVector, f: impl Fn(&[usize]) -> C) -> FockVector {
        let mut out = v.clone();
        for n in 0..=self.nmax {
            let mut d = vec![0; n];
            for (idx, x) in out.sectors[n].iter_mut().enumerate() {
                self.decode(idx, n, &mut d);
                *x *= f(&d);
            }
        }
        out
    }

    /// Total momentum of a grid tuple.
    pub fn total_momentum(&self, d: &[usize]) -> [f64; 2] {
        d.iter().fold([0.0, 0.0], |acc, &i| {
            let p = self.grid.momentum(self.grid.point(i));
            [acc[0] + p[0], acc[1] + p[1]]
        })
    }

    /// `U(x, 0)`: multiplies by `exp(i Σ p(θ_k)·x)`.
    pub fn translate(&self, x: [f64; 2], v: &FockVector) -> FockVector {
        self.diagonal(v, |d| C::from_polar(1.0, minkowski(self.total_momentum(d), x)))
    }

    /// `U(0, λ)` for `λ = shift·Δ`: `Ψ_n(θ − λ)`, zero outside the grid.
    pub fn boost_shift(&self, shift: i64, v: &FockVector) -> FockVector {
        let npts = self.npts() as i64;
        let mut out = v.clone();
        for n in 0..=self.nmax {
            let mut d = vec![0; n];
            let mut s = vec![0; n];
            for idx in 0..v.sectors[n].len() {
                self.decode(idx, n, &mut d);
                let mut inside = true;
                for k in 0..n {
                    let t = d[k] as i64 - shift;
                    if t < 0 || t >= npts {
                        inside = false;
                        break;
                    }
                    s[k] = t as usize;
                }
                out.sectors[n][idx] = if inside { v.sectors[n][self.encode(&s)] } else { ZERO };
            }
        }
        out
    }

    /// `U(0, λ)`; λ must be an integer multiple of Δ.
    pub fn boost(&self, lambda: f64, v: &FockVector) -> Result<FockVector> {
        let k = lambda / self.delta();
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "boost λ = {lambda} is not an integer multiple of the grid spacing {}",
                self.delta()
            )));
        }
        Ok(self.boost_shift(k.round() as i64, v))
    }

    /// `U(x, λ) = U(x, 0) U(0, λ)`.
    pub fn apply_symmetry(&self, op: &Symmetry, v: &FockVector) -> Result<FockVector> {
        match op {
            Symmetry::Translation(x) => Ok(self.translate(*x, v)),
            Symmetry::Boost(l) => self.boost(*l, v),
            Symmetry::Reflection => Ok(self.reflect(v)),
        }
    }

    /// `e^{−s ω(H/μ)}` with `H/μ = Σ cosh θ_k`.
    pub fn energy_damping(&self, omega: &dyn Fn(f64) -> f64, s: f64, v: &FockVector) -> FockVector {
        let pts = self.grid.points();
        self.diagonal(v, |d| {
            let e: f64 = d.iter().map(|&i| pts[i].cosh()).sum();
            C::new((-s * omega(e)).exp(), 0.0)
        })
    }

    /// `φ(f) = z†(f⁺) + z(f⁻)`.
    pub fn field(&self, fp: &[C], fm: &[C], v: &FockVector) -> FockVector {
        self.create(fp, v).add(&self.annihilate(fm, v))
    }

    /// `φ′(f) = J φ(f^j) J` with `(f^j)^± = conj(f^±)`.
    pub fn field_primed(&self, fp: &[C], fm: &[C], v: &FockVector) -> FockVector {
        let cp: Vec<C> = fp.iter().map(|x| x.conj()).collect();
        let cm: Vec<C> = fm.iter().map(|x| x.conj()).collect();
        self.reflect(&self.field(&cp, &cm, &self.reflect(v)))
    }

    /// `J z†(f) J`.
    pub fn create_primed(&self, f: &[C], v: &FockVector) -> FockVector {
        self.reflect(&self.create(f, &self.reflect(v)))
    }

    /// `J z(f) J`.
    pub fn annihilate_primed(&self, f: &[C], v: &FockVector) -> FockVector {
        self.reflect(&self.annihilate(f, &self.reflect(v)))
    }

    /// Random S-symmetric vector with sectors `0..=top` filled, unit norm.
    pub fn random_vector<R: Rng>(&self, top: usize, r: &mut R) -> FockVector {
        let mut v = self.zero();
        for n in 0..=top.min(self.nmax) {
            let raw: Vec<C> = (0..self.sector_len(n)).map(|_| random_c(r)).collect();
            v.sectors[n] = self.project(n, &raw);
        }
        let nrm = v.norm(self.delta());
        v.scale(C::new(1.0 / nrm, 0.0))
    }

    /// Random one-particle array with unit grid norm.
    pub fn random_function<R: Rng>(&self, r: &mut R) -> Vec<C> {
        let f: Vec<C> = (0..self.npts()).map(|_| random_c(r)).collect();
        let nrm = self.grid.l2(&f);
        f.into_iter().map(|x| x / nrm).collect()
    }

    pub fn inner(&self, a: &FockVector, b: &FockVector) -> C {
        a.inner(b, self.delta())
    }

    pub fn norm(&self, a: &FockVector) -> f64 {
        a.norm(self.delta())
    }

    pub fn dist(&self, a: &FockVector, b: &FockVector) -> f64 {
        self.norm(&a.sub(b))
    }
}

pub fn random_c<R: Rng + ?Sized>(r: &mut R) -> C {
    C::new(r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal))
}

fn fact(n: usize) -> f64 {
    crate::combinatorics::factorial(n)
}

/// Spacetime symmetry acting on Fock vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Symmetry {
    Translation([f64; 2]),
    Boost(f64),
    Reflection,
}

/// Checks the three smeared exchange relations on random vectors.
///
/// `z†(f)z†(g) = ∫ f(θ)g(η)S(θ−η) z†(η)z†(θ)`, the adjoint-type relation for
/// `z z`, and `z(f)z†(g) = ∫ f(θ)g(η)S(η−θ) z†(η)z(θ) + Σ Δ f g`.
pub fn check_zf_relations(fs: &FockSpace, trials: usize, seed: u64, tol: f64) -> Check {
    let t0 = std::time::Instant::now();
    let npts = fs.npts();
    let pts = fs.grid.points();
    let mut worst = [0.0f64; 3];
    for t in 0..trials {
        let mut r = rng(seed, t as u64);
        let f = fs.random_function(&mut r);
        let g = fs.random_function(&mut r);
        let phi = fs.random_vector(fs.nmax.saturating_sub(1), &mut r);
        // K(x1, x2) = g(x1) f(x2) S(x2 − x1)
        let mut k = vec![ZERO; npts * npts];
        for a in 0..npts {
            for b in 0..npts {
                k[a * npts + b] = g[a] * f[b] * fs.s.real(pts[b] - pts[a]);
            }
        }
        let lhs1 = fs.create(&f, &fs.create(&g, &phi));
        let rhs1 = fs.apply_normal_ordered(2, 0, &k, &phi);
        worst[0] = worse(worst[0], fs.dist(&lhs1, &rhs1));
        let lhs2 = fs.annihilate(&f, &fs.annihilate(&g, &phi));
        let rhs2 = fs.apply_normal_ordered(0, 2, &k, &phi);
        worst[1] = worse(worst[1], fs.dist(&lhs2, &rhs2));
        // K(η, θ) = g(η) f(θ) S(η − θ) for z†(η) z(θ)
        let mut k3 = vec![ZERO; npts * npts];
        for a in 0..npts {
            for b in 0..npts {
                k3[a * npts + b] = g[a] * f[b] * fs.s.real(pts[a] - pts[b]);
            }
        }
        let lhs3 = fs.annihilate(&f, &fs.create(&g, &phi));
        let mut rhs3 = fs.apply_normal_ordered(1, 1, &k3, &phi);
        rhs3.axpy(fs.grid.pair(&f, &g), &phi);
        worst[2] = worse(worst[2], fs.dist(&lhs3, &rhs3));
    }
    let w = worst.iter().cloned().fold(0.0, worse);
    Check::residual(&format!("ZF relations {}", fs.s), "zf-exchange-relations", w, tol)
        .samples(trials as u64)
        .seed(seed)
        .detail("creation_creation", worst[0])
        .detail("annihilation_annihilation", worst[1])
        .detail("annihilation_creation", worst[2])
        .timed(t0)
}

/// Exchange relation `B^{g,θ′} z†(θ) = S(θ′−θ) z†(θ) B^{g,θ′}` and the primed
/// commutators `[z(ḡ)′, z†(θ)] = B^{g,θ}`, `[z†(ḡ)′, z(θ)] = −(B^{ḡ,θ})*`, plus
/// the two-operator versions, on random vectors at every pair of grid points.
pub fn check_primed_commutators(fs: &FockSpace, trials: usize, seed: u64, tol: f64) -> Check {
    let t0 = std::time::Instant::now();
    let npts = fs.npts();
    let mut worst = [0.0f64; 5];
    for t in 0..trials {
        let mut r = rng(seed, 1000 + t as u64);
        let g = fs.random_function(&mut r);
        let gbar: Vec<C> = g.iter().map(|x| x.conj()).collect();
        let psi = fs.random_vector(fs.nmax.saturating_sub(2), &mut r);
        let a = r.random_range(0..npts);
        let b = r.random_range(0..npts);
        // B z† exchange
        let l = fs.b_operator(&g, a, &fs.create_at(b, &psi));
        let rr = fs.create_at(b, &fs.b_operator(&g, a, &psi)).scale(fs.s_at(a, b));
        worst[0] = worse(worst[0], fs.dist(&l, &rr));
        // [z(ḡ)', z†(θ_b)] = B^{g,θ_b}
        let c1 = fs
            .annihilate_primed(&gbar, &fs.create_at(b, &psi))
            .sub(&fs.create_at(b, &fs.annihilate_primed(&gbar, &psi)));
        worst[1] = worse(worst[1], fs.dist(&c1, &fs.b_operator(&g, b, &psi)));
        // [z†(ḡ)', z(θ_b)] = −(B^{ḡ,θ_b})*
        let c2 = fs
            .create_primed(&gbar, &fs.annihilate_at(b, &psi))
            .sub(&fs.annihilate_at(b, &fs.create_primed(&gbar, &psi)));
        let want2 = fs.b_adjoint(&gbar, b, &psi).scale(C::new(-1.0, 0.0));
        worst[2] = worse(worst[2], fs.dist(&c2, &want2));
        // two creators: [z(ḡ)', z†(θ_a) z†(θ_b)]
        let prod = |v: &FockVector| fs.create_at(a, &fs.create_at(b, v));
        let c3 = fs.annihilate_primed(&gbar, &prod(&psi)).sub(&prod(&fs.annihilate_primed(&gbar, &psi)));
        let mut want3 = fs.create_at(b, &fs.b_operator(&g, a, &psi)).scale(fs.s_at(a, b));
        want3.axpy(C::new(1.0, 0.0), &fs.create_at(a, &fs.b_operator(&g, b, &psi)));
        worst[3] = worse(worst[3], fs.dist(&c3, &want3));
        // two annihilators: [z†(ḡ)', z(θ_a) z(θ_b)]
        let prodz = |v: &FockVector| fs.annihilate_at(a, &fs.annihilate_at(b, v));
        let psi2 = fs.random_vector(fs.nmax, &mut r);
        let c4 = fs.create_primed(&gbar, &prodz(&psi2)).sub(&prodz(&fs.create_primed(&gbar, &psi2)));
        let mut want4 = fs.b_adjoint(&gbar, a, &fs.annihilate_at(b, &psi2)).scale(C::new(-1.0, 0.0));
        want4.axpy(-fs.s_at(a, b), &fs.b_adjoint(&gbar, b, &fs.annihilate_at(a, &psi2)));
        let top = fs.nmax - 2;
        worst[4] = worse(worst[4], fs.dist(&c4.project_particles(top), &want4.project_particles(top)));
    }
    let scale = 1.0 / fs.delta();
    let w = worst.iter().cloned().fold(0.0, worse) / scale;
    Check::residual(&format!("primed commutators {}", fs.s), "b-operator-exchange", w, tol)
        .samples(trials as u64)
        .seed(seed)
        .detail("exchange", worst[0] / scale)
        .detail("single_creator", worst[1] / scale)
        .detail("single_annihilator", worst[2] / scale)
        .detail("two_creators", worst[3] / scale)
        .detail("two_annihilators", worst[4] / scale)
        .timed(t0)
}

/// `½‖Q_k A e^{−ω(H/μ)} Q_k‖ + ½‖Q_k e^{−ω(H/μ)} A Q_k‖`, norms taken on the
/// S-symmetric subspace under the grid weights.
pub fn qform_norm(
    fs: &FockSpace,
    op: &dyn Fn(&FockVector) -> FockVector,
    k: usize,
    omega: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let k = k.min(fs.nmax);
    let dims: Vec<usize> = (0..=k).map(|n| fs.sector_len(n)).collect();
    let total: usize = dims.iter().sum();
    if total > 2500 {
        return Err(Error::Resource(format!("{total}-dimensional block; reduce grid or k")));
    }
    let dl = fs.delta();
    let mut m1 = vec![ZERO; total * total];
    let mut m2 = vec![ZERO; total * total];
    let mut col = 0;
    for (n, &dn) in dims.iter().enumerate() {
        for t in 0..dn {
            let mut e = fs.zero();
            e.sectors[n][t] = C::new(dl.powf(-(n as f64) / 2.0), 0.0);
            let proj = fs.project(n, &e.sectors[n]);
            e.sectors[n] = proj;
            let a1 = op(&fs.energy_damping(omega, 1.0, &e)).project_particles(k);
            let a2 = fs.energy_damping(omega, 1.0, &op(&e)).project_particles(k);
            if a1.truncated || a2.truncated {
                // components above k are removed by Q_k anyway
            }
            let mut row = 0;
            for (l, &dlen) in dims.iter().enumerate() {
                let w = dl.powf(l as f64 / 2.0);
                for s in 0..dlen {
                    m1[(row + s) * total + col] = a1.sectors[l][s] * w;
                    m2[(row + s) * total + col] = a2.sectors[l][s] * w;
                }
                row += dlen;
            }
            col += 1;
        }
    }
    let v = 0.5 * spectral_norm(total, total, &m1) + 0.5 * spectral_norm(total, total, &m2);
    if !v.is_finite() {
        return Err(Error::Eval("non-finite operator block".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(s: ScatteringFunction, n: usize, nmax: usize) -> FockSpace {
        FockSpace::new(RapidityGrid::new(-2.0, 2.0, n, 1.0).unwrap(), s, nmax).unwrap()
    }

    fn all_s() -> Vec<ScatteringFunction> {
        vec![
            ScatteringFunction::free(),
            ScatteringFunction::ising(),
            ScatteringFunction::exponential(0.7).unwrap(),
        ]
    }

    #[test]
    fn projector_idempotent_and_symmetric() {
        for s in all_s() {
            let fs = space(s, 6, 3);
            let mut r = rng(1, 0);
            let raw: Vec<C> = (0..216).map(|_| random_c(&mut r)).collect();
            let p = fs.project(3, &raw);
            let pp = fs.project(3, &p);
            let d = p.iter().zip(&pp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
            assert!(fs.symmetry_defect(3, &p) < 1e-12);
            // self-adjoint: <x, P y> = <P x, y>
            let y: Vec<C> = (0..216).map(|_| random_c(&mut r)).collect();
            let py = fs.project(3, &y);
            let lhs: C = raw.iter().zip(&py).map(|(a, b)| a.conj() * b).sum();
            let rhs: C = p.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn ising_two_particle_projection() {
        let fs = space(ScatteringFunction::ising(), 5, 2);
        let mut r = rng(2, 0);
        let g: Vec<C> = (0..5).map(|_| random_c(&mut r)).collect();
        let h: Vec<C> = (0..5).map(|_| random_c(&mut r)).collect();
        let raw: Vec<C> = (0..25).map(|i| g[i / 5] * h[i % 5]).collect();
        let p = fs.project(2, &raw);
        for i in 0..25 {
            let want = (g[i / 5] * h[i % 5] - h[i / 5] * g[i % 5]) / 2.0;
            assert!((p[i] - want).norm() < 1e-15);
        }
        let free = space(ScatteringFunction::free(), 5, 2);
        let anti: Vec<C> = (0..25).map(|i| g[i / 5] * h[i % 5] - h[i / 5] * g[i % 5]).collect();
        assert!(free.project(2, &anti).iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn adjointness_and_vacuum() {
        for s in all_s() {
            let fs = space(s, 7, 3);
            let mut r = rng(3, 0);
            let f = fs.random_function(&mut r);
            let g = fs.random_function(&mut r);
            let fbar: Vec<C> = f.iter().map(|x| x.conj()).collect();
            let psi = fs.random_vector(2, &mut r);
            let phi = fs.random_vector(3, &mut r);
            let lhs = fs.inner(&fs.create(&fbar, &psi), &phi);
            let rhs = fs.inner(&psi, &fs.annihilate(&f, &phi));
            assert!((lhs - rhs).norm() < 1e-12);
            let om = fs.vacuum();
            assert!(fs.norm(&fs.annihilate(&f, &om)) == 0.0);
            let zz = fs.annihilate(&f, &fs.create(&g, &om));
            assert!((zz.sectors[0][0] - fs.grid.pair(&f, &g)).norm() < 1e-13);
            let one = fs.inner(&fs.create(&f, &om), &fs.create(&g, &om));
            let want: C = f.iter().zip(&g).map(|(a, b)| a.conj() * b).sum::<C>() * fs.delta();
            assert!((one - want).norm() < 1e-13);
        }
    }

    #[test]
    fn zf_relations_hold() {
        for s in all_s() {
            let fs = space(s, 8, 3);
            let c = check_zf_relations(&fs, 3, 7, 1e-10);
            assert!(c.passed, "{:?}", c);
        }
    }

    #[test]
    fn primed_commutators_hold() {
        for s in all_s() {
            let fs = space(s, 6, 4);
            let c = check_primed_commutators(&fs, 4, 5, 1e-10);
            assert!(c.passed, "{:?}", c);
        }
    }

    #[test]
    fn symmetries() {
        let fs = space(ScatteringFunction::exponential(0.7).unwrap(), 7, 3);
        let mut r = rng(4, 0);
        let v = fs.random_vector(3, &mut r);
        assert_eq!(fs.translate([0.0, 0.0], &v), v);
        assert_eq!(fs.boost(0.0, &v).unwrap(), v);
        let u = fs.translate([0.4, -1.3], &v);
        assert!((fs.norm(&u) - fs.norm(&v)).abs() < 1e-12);
        assert!(fs.dist(&fs.reflect(&fs.reflect(&v)), &v) < 1e-15);
        assert!((fs.norm(&fs.reflect(&v)) - fs.norm(&v)).abs() < 1e-12);
        assert!(fs.boost(0.1234, &v).is_err());
        // translations commute with the energy damping
        let w = |e: f64| 0.5 * (1.0 + e).ln();
        let a = fs.translate([0.3, 0.1], &fs.energy_damping(&w, 1.0, &v));
        let b = fs.energy_damping(&w, 1.0, &fs.translate([0.3, 0.1], &v));
        assert!(fs.dist(&a, &b) < 1e-15);
    }

    #[test]
    fn field_examples() {
        let fs = space(ScatteringFunction::free(), 6, 2);
        let mut r = rng(5, 0);
        let (fp, fm, gp, gm) = (
            fs.random_function(&mut r),
            fs.random_function(&mut r),
            fs.random_function(&mut r),
            fs.random_function(&mut r),
        );
        let om = fs.vacuum();
        let one = fs.field(&fp, &fm, &om);
        assert!(one.sectors[1].iter().zip(&fp).all(|(a, b)| (a - b).norm() < 1e-15));
        let two = fs.field(&fp, &fm, &fs.field(&gp, &gm, &om));
        assert!((two.sectors[0][0] - fs.grid.pair(&fm, &gp)).norm() < 1e-13);
        let comm = fs.field(&fp, &fm, &fs.field(&gp, &gm, &om)).sub(&fs.field(&gp, &gm, &fs.field(&fp, &fm, &om)));
        let want = fs.grid.pair(&fm, &gp) - fs.grid.pair(&gm, &fp);
        assert!((comm.sectors[0][0] - want).norm() < 1e-13);
        assert!(comm.sectors[2].iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn qform_norm_examples() {
        let fs = space(ScatteringFunction::ising(), 5, 2);
        let zero = |_: f64| 0.0;
        let id = qform_norm(&fs, &|v| v.clone(), 2, &zero).unwrap();
        assert!((id - 1.0).abs() < 1e-10);
        let mut r = rng(6, 0);
        let f = fs.random_function(&mut r);
        for l in 0..=2 {
            let nc = qform_norm(&fs, &|v| fs.create(&f, v), l, &zero).unwrap();
            assert!(nc <= ((l + 1) as f64).sqrt() * fs.grid.l2(&f) + 1e-10);
            let na = qform_norm(&fs, &|v| fs.annihilate(&f, v), l, &zero).unwrap();
            assert!(na <= (l as f64).sqrt() * fs.grid.l2(&f) + 1e-10);
        }
    }
}
