//! Permutations, contractions and pairings with their S-dependent factors.
//!
//! Permutations are stored 0-based. Contractions and pairings keep the
//! 1-based index convention of the formulas they feed (left indices `1..=m`,
//! right indices `m+1..=m+n`).

use crate::report::{worse, Check};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// From 0-based images. Errors if not a bijection.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::Precondition(format!("{images:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// From one-line notation over `1..=n`.
    pub fn from_one_line(one_based: &[usize]) -> Result<Self> {
        if one_based.iter().any(|&i| i == 0) {
            return Err(Error::Precondition("one-line notation is 1-based".into()));
        }
        Self::new(one_based.iter().map(|i| i - 1).collect())
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.images.iter().map(|i| i + 1).collect()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &s) in self.images.iter().enumerate() {
            inv[s] = i;
        }
        Permutation { images: inv }
    }

    /// Pairs `(i, j)`, `i < j`, with `σ(i) > σ(j)`.
    pub fn inversions(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.images[i] > self.images[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn sign(&self) -> i32 {
        if self.inversions().len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// `x^σ` with `(x^σ)_i = x_{σ(i)}`.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.images.iter().map(|&i| x[i]).collect()
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.shuffle(rng);
        Permutation { images }
    }

    /// All permutations of `n` elements in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation { images: cur.clone() });
            // next lexicographic permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.one_line())
    }
}

/// `S^σ` with a caller-supplied pair factor: `∏_{i<j, σ(i)>σ(j)} s(σ(i), σ(j))`,
/// where `s(a, b)` stands for `S(θ_a − θ_b)`.
pub fn s_sigma_by(sigma: &Permutation, mut s: impl FnMut(usize, usize) -> C) -> C {
    let n = sigma.len();
    let mut acc = C::new(1.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (sigma.at(i), sigma.at(j));
            if a > b {
                acc *= s(a, b);
            }
        }
    }
    acc
}

/// `S^σ(θ) = ∏_{i<j, σ(i)>σ(j)} S(θ_{σ(i)} − θ_{σ(j)})`.
pub fn s_sigma(s: &ScatteringFunction, sigma: &Permutation, theta: &[C]) -> Result<C> {
    if theta.len() != sigma.len() {
        return Err(Error::Precondition("length of θ differs from degree of σ".into()));
    }
    let mut err = None;
    let v = s_sigma_by(sigma, |a, b| match s.eval(theta[a] - theta[b]) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            C::new(f64::NAN, f64::NAN)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `Sym_S f(θ) = (1/n!) Σ_σ S^σ(θ) f(θ^σ)`.
pub fn sym_s(s: &ScatteringFunction, f: &dyn Fn(&[C]) -> C, theta: &[C]) -> Result<C> {
    let perms = Permutation::all(theta.len());
    let mut acc = C::new(0.0, 0.0);
    for p in &perms {
        acc += s_sigma(s, p, theta)? * f(&p.apply(theta));
    }
    Ok(acc / perms.len() as f64)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `Σ_k C(m,k) C(n,k) k!`.
pub fn contraction_count(m: usize, n: usize) -> u128 {
    (0..=m.min(n))
        .map(|k| binomial(m, k) * binomial(n, k) * (1..=k as u128).product::<u128>())
        .sum()
}

/// A contraction of `m` left and `n` right indices. Pairs `(l, r)` are
/// 1-based with `l <= m < r`, stored with ascending `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contraction {
    pub m: usize,
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

/// Variable reference into the concatenation `x = (θ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Theta(usize),
    Eta(usize),
}

impl Contraction {
    pub fn new(m: usize, n: usize, mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.1);
        for (i, &(l, r)) in pairs.iter().enumerate() {
            if !(1..=m).contains(&l) || !(m + 1..=m + n).contains(&r) {
                return Err(Error::Precondition(format!("pair ({l},{r}) out of range for ({m},{n})")));
            }
            if pairs[..i].iter().any(|&(l2, r2)| l2 == l || r2 == r) {
                return Err(Error::Precondition(format!("index reused in {pairs:?}")));
            }
        }
        Ok(Contraction { m, n, pairs })
    }

    pub fn empty(m: usize, n: usize) -> Self {
        Contraction { m, n, pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Variable at 1-based position `a` of `(θ, η)`.
    pub fn var(&self, a: usize) -> Var {
        if a <= self.m {
            Var::Theta(a - 1)
        } else {
            Var::Eta(a - self.m - 1)
        }
    }

    /// `S^{(m)}_{a,b}` resolved to `S(x − y)` as the pair `(x, y)`.
    pub fn smn(&self, a: usize, b: usize) -> (Var, Var) {
        let cross = (a <= self.m) != (b <= self.m);
        if cross {
            (self.var(b), self.var(a))
        } else {
            (self.var(a), self.var(b))
        }
    }

    /// Factor list of `S_C` as `S(x − y)` pairs.
    pub fn sc_factors(&self) -> Vec<(Var, Var)> {
        let mut out = Vec::new();
        for &(l, r) in &self.pairs {
            for q in l + 1..r {
                out.push(self.smn(q, l));
            }
        }
        for &(li, ri) in &self.pairs {
            for &(lj, rj) in &self.pairs {
                if ri < rj && li < lj {
                    out.push(self.smn(lj, ri));
                }
            }
        }
        out
    }

    /// For each pair, the factor list of `∏_p S^{(m)}_{l_j,p}` entering `R_C`.
    pub fn rc_factors(&self) -> Vec<Vec<(Var, Var)>> {
        self.pairs
            .iter()
            .map(|&(l, _)| (1..=self.m + self.n).map(|p| self.smn(l, p)).collect())
            .collect()
    }

    /// Delta pairs `(θ index, η index)`, 0-based.
    pub fn delta_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(l, r)| (l - 1, r - self.m - 1)).collect()
    }

    /// Uncontracted left indices (0-based, ascending).
    pub fn free_left(&self) -> Vec<usize> {
        (0..self.m).filter(|i| !self.pairs.iter().any(|p| p.0 - 1 == *i)).collect()
    }

    /// Uncontracted right indices into η (0-based, ascending).
    pub fn free_right(&self) -> Vec<usize> {
        (0..self.n).filter(|j| !self.pairs.iter().any(|p| p.1 - self.m - 1 == *j)).collect()
    }

    /// The permutations σ ∈ S_m, ρ ∈ S_n with `δ_C S_C = δ_C S^σ(θ) S^ρ(η)`.
    pub fn permutations(&self) -> (Permutation, Permutation) {
        let mut s: Vec<usize> = self.free_left();
        s.extend(self.pairs.iter().map(|p| p.0 - 1));
        let mut r: Vec<usize> = self.pairs.iter().rev().map(|p| p.1 - self.m - 1).collect();
        r.extend(self.free_right());
        (Permutation { images: s }, Permutation { images: r })
    }

    /// `C^J = (n, m, {(r_j − m, l_j + n)})`.
    pub fn reflect(&self) -> Contraction {
        let pairs = self.pairs.iter().map(|&(l, r)| (r - self.m, l + self.n)).collect();
        Contraction::new(self.n, self.m, pairs).expect("reflection of a valid contraction")
    }

    /// `C ⊔ C'` with `C'` numbered relative to the uncontracted indices of `C`.
    pub fn compose(&self, other: &Contraction) -> Result<Contraction> {
        if other.m != self.m - self.len() || other.n != self.n - self.len() {
            return Err(Error::Precondition(format!(
                "composed contraction must act on ({}, {}), got ({}, {})",
                self.m - self.len(),
                self.n - self.len(),
                other.m,
                other.n
            )));
        }
        let fl = self.free_left();
        let fr = self.free_right();
        let mut pairs = self.pairs.clone();
        for &(l, r) in &other.pairs {
            pairs.push((fl[l - 1] + 1, fr[r - other.m - 1] + self.m + 1));
        }
        Contraction::new(self.m, self.n, pairs)
    }
}

/// All contractions of `(m, n)` in canonical form.
pub fn enumerate_contractions(m: usize, n: usize) -> Vec<Contraction> {
    let mut out = Vec::new();
    let mut used_l = vec![false; m];
    let mut pairs = Vec::new();
    // walk right indices in ascending order; each is either free or paired
    fn rec(
        j: usize,
        m: usize,
        n: usize,
        used_l: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<Contraction>,
    ) {
        if j == n {
            out.push(Contraction { m, n, pairs: pairs.clone() });
            return;
        }
        rec(j + 1, m, n, used_l, pairs, out);
        for l in 0..m {
            if !used_l[l] {
                used_l[l] = true;
                pairs.push((l + 1, m + j + 1));
                rec(j + 1, m, n, used_l, pairs, out);
                pairs.pop();
                used_l[l] = false;
            }
        }
    }
    rec(0, m, n, &mut used_l, &mut pairs, &mut out);
    out
}

/// Value of `x_v` given `θ` and `η`.
#[inline]
pub fn var_value(v: Var, theta: &[C], eta: &[C]) -> C {
    match v {
        Var::Theta(i) => theta[i],
        Var::Eta(j) => eta[j],
    }
}

/// Numeric factors of a contraction.
#[derive(Debug, Clone)]
pub struct ContractionFactors {
    pub s_c: C,
    /// Only on the delta support.
    pub r_c: Option<C>,
    pub sigma: Permutation,
    pub rho: Permutation,
}

/// Evaluates `S_C` literally and, when `η_{r_j−m} = θ_{l_j}` holds for all
/// pairs (to 1e−12), also `R_C`.
pub fn contraction_factors(
    s: &ScatteringFunction,
    c: &Contraction,
    theta: &[C],
    eta: &[C],
) -> Result<ContractionFactors> {
    if theta.len() != c.m || eta.len() != c.n {
        return Err(Error::Precondition("argument lengths do not match the contraction".into()));
    }
    let ev = |x: Var, y: Var| s.eval(var_value(x, theta, eta) - var_value(y, theta, eta));
    let mut s_c = C::new(1.0, 0.0);
    for (x, y) in c.sc_factors() {
        s_c *= ev(x, y)?;
    }
    let on_support = c
        .delta_pairs()
        .iter()
        .all(|&(i, j)| (theta[i] - eta[j]).norm() <= 1e-12);
    let r_c = if on_support {
        let mut acc = C::new(1.0, 0.0);
        for group in c.rc_factors() {
            let mut prod = C::new(1.0, 0.0);
            for (x, y) in group {
                prod *= ev(x, y)?;
            }
            acc *= C::new(1.0, 0.0) - prod;
        }
        Some(acc)
    } else {
        None
    };
    let (sigma, rho) = c.permutations();
    Ok(ContractionFactors { s_c, r_c, sigma, rho })
}

/// `R_C`, erroring off the delta support.
pub fn r_c(s: &ScatteringFunction, c: &Contraction, theta: &[C], eta: &[C]) -> Result<C> {
    contraction_factors(s, c, theta, eta)?
        .r_c
        .ok_or_else(|| Error::Precondition("R_C requested off the delta support".into()))
}

/// A pairing of `1..=m`: pairs `(ℓ, r)` with `ℓ < r`, plus the leftover index
/// for odd `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub m: usize,
    pub pairs: Vec<(usize, usize)>,
    pub leftover: Option<usize>,
}

impl Pairing {
    /// Sign of the permutation `(ℓ_1 r_1 … ℓ_k r_k [leftover])`.
    pub fn sign(&self) -> i32 {
        let mut line: Vec<usize> = Vec::with_capacity(self.m);
        for &(l, r) in &self.pairs {
            line.push(l);
            line.push(r);
        }
        if let Some(x) = self.leftover {
            line.push(x);
        }
        Permutation::from_one_line(&line).expect("pairing covers 1..=m").sign()
    }
}

/// All pairings of `m` indices with their signs.
pub fn enumerate_pairings(m: usize) -> Vec<(Pairing, i32)> {
    fn perfect(rest: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if rest.is_empty() {
            return vec![Vec::new()];
        }
        let first = rest[0];
        let mut out = Vec::new();
        for k in 1..rest.len() {
            let partner = rest[k];
            let remaining: Vec<usize> =
                rest[1..].iter().copied().filter(|&x| x != partner).collect();
            for mut tail in perfect(&remaining) {
                let mut v = vec![(first, partner)];
                v.append(&mut tail);
                out.push(v);
            }
        }
        out
    }
    let all: Vec<usize> = (1..=m).collect();
    let mut out = Vec::new();
    if m % 2 == 0 {
        for pairs in perfect(&all) {
            let p = Pairing { m, pairs, leftover: None };
            let s = p.sign();
            out.push((p, s));
        }
    } else {
        for hat in 1..=m {
            let rest: Vec<usize> = all.iter().copied().filter(|&x| x != hat).collect();
            for pairs in perfect(&rest) {
                let p = Pairing { m, pairs, leftover: Some(hat) };
                let s = p.sign();
                out.push((p, s));
            }
        }
    }
    out
}

/// `S^{σ∘ρ}(θ) = S^σ(θ) S^ρ(θ^σ)` at random (σ, ρ, θ) with degree ≤ `n_max`.
pub fn check_composition_law(s: &ScatteringFunction, samples: usize, n_max: usize, seed: u64, tol: f64) -> Result<Check> {
    let t0 = std::time::Instant::now();
    let mut r = crate::numeric::rng(seed, 0xc0);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let n = r.random_range(1..=n_max);
        let sigma = Permutation::random(n, &mut r);
        let rho = Permutation::random(n, &mut r);
        let theta: Vec<C> = (0..n).map(|_| C::new(r.random_range(-2.0..2.0), r.random_range(-0.5..0.5))).collect();
        let lhs = s_sigma(s, &sigma.compose(&rho), &theta)?;
        let rhs = s_sigma(s, &sigma, &theta)? * s_sigma(s, &rho, &sigma.apply(&theta))?;
        worst = worse(worst, (lhs - rhs).norm() / lhs.norm().max(1.0));
    }
    Ok(Check::residual(&format!("S^σ composition law {s}"), "s-sigma-composition", worst, tol)
        .samples(samples as u64)
        .seed(seed)
        .timed(t0))
}

/// Enumerated contractions against Σ_k C(m,k)C(n,k)k! for all m, n ≤ `max`.
pub fn check_contraction_counts(max: usize) -> Check {
    let t0 = std::time::Instant::now();
    let mut mismatches = 0u64;
    let mut table = Vec::new();
    for m in 0..=max {
        for n in 0..=max {
            let got = enumerate_contractions(m, n).len() as u128;
            let want = contraction_count(m, n);
            if got != want {
                mismatches += 1;
            }
            table.push((m, n, got as u64));
        }
    }
    Check::residual(&format!("contraction counts m,n<={max}"), "contraction-count", mismatches as f64, 0.0)
        .samples(((max + 1) * (max + 1)) as u64)
        .detail("counts_m_n_value", table)
        .timed(t0)
}

/// R_C = 0 for every nonempty contraction when S = 1, and when S = −1 with
/// m + n even, on random delta-support points. Exact comparison.
pub fn check_rc_collapse(s: &ScatteringFunction, max_arity: usize, seed: u64) -> Result<Check> {
    let t0 = std::time::Instant::now();
    if !s.is_constant() {
        return Err(Error::Precondition(format!("R_C collapse only holds for constant S, got {s}")));
    }
    let mut r = crate::numeric::rng(seed, 0xcc);
    let mut worst = 0.0_f64;
    let mut count = 0u64;
    for m in 0..=max_arity {
        for n in 0..=max_arity {
            if s.at_zero() < 0.0 && (m + n) % 2 == 1 {
                continue;
            }
            for c in enumerate_contractions(m, n).into_iter().filter(|c| !c.is_empty()) {
                let theta: Vec<C> = (0..m).map(|_| C::new(r.random_range(-1.0..1.0), 0.0)).collect();
                let mut eta: Vec<C> = (0..n).map(|_| C::new(r.random_range(-1.0..1.0), 0.0)).collect();
                for (i, j) in c.delta_pairs() {
                    eta[j] = theta[i];
                }
                worst = worse(worst, r_c(s, &c, &theta, &eta)?.norm());
                count += 1;
            }
        }
    }
    Ok(Check::residual(&format!("R_C collapse {s}"), "reflection-rc-collapse", worst, 0.0)
        .samples(count)
        .seed(seed)
        .timed(t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C {
        C::new(rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5))
    }

    #[test]
    fn s_sigma_examples() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        let th = [C::new(0.4, 0.0), C::new(-0.1, 0.0)];
        let id = Permutation::identity(2);
        assert_eq!(s_sigma(&s, &id, &th).unwrap(), C::new(1.0, 0.0));
        let t = Permutation::from_one_line(&[2, 1]).unwrap();
        let v = s_sigma(&s, &t, &th).unwrap();
        let want = C::from_polar(1.0, 0.7 * (-0.5f64).sinh());
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn ising_s_sigma_is_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = ScatteringFunction::ising();
        for _ in 0..30 {
            let p = Permutation::random(5, &mut rng);
            let th: Vec<C> = (0..5).map(|_| rand_c(&mut rng)).collect();
            assert_eq!(s_sigma(&s, &p, &th).unwrap(), C::new(p.sign() as f64, 0.0));
        }
    }

    #[test]
    fn sym_s_ising_example() {
        let s = ScatteringFunction::ising();
        let v = sym_s(&s, &|x: &[C]| x[0], &[C::new(2.0, 0.0), C::new(5.0, 0.0)]).unwrap();
        assert!((v - C::new(-1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn counts() {
        assert_eq!(enumerate_contractions(0, 4).len(), 1);
        assert_eq!(enumerate_contractions(2, 1).len(), 3);
        assert_eq!(enumerate_contractions(3, 3).len(), 34);
        assert_eq!(contraction_count(3, 3), 34);
        for m in 0..=5 {
            for n in 0..=5 {
                assert_eq!(enumerate_contractions(m, n).len() as u128, contraction_count(m, n));
            }
        }
        assert_eq!(enumerate_pairings(2).len(), 1);
        assert_eq!(enumerate_pairings(2)[0].1, 1);
        assert_eq!(enumerate_pairings(3).len(), 3);
        assert_eq!(enumerate_pairings(5).len(), 15);
        assert_eq!(enumerate_pairings(6).len(), 15);
    }

    #[test]
    fn empty_contraction_factors() {
        let s = ScatteringFunction::exponential(0.7).unwrap();
        let c = Contraction::empty(2, 2);
        let f = contraction_factors(&s, &c, &[C::new(0.1, 0.0); 2], &[C::new(0.3, 0.0); 2]).unwrap();
        assert_eq!(f.s_c, C::new(1.0, 0.0));
        assert_eq!(f.r_c, Some(C::new(1.0, 0.0)));
    }

    #[test]
    fn r_c_vanishes_free_and_even_ising() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (m, n) in [(1, 1), (2, 2), (1, 3), (3, 2), (2, 1)] {
            for c in enumerate_contractions(m, n).into_iter().filter(|c| !c.is_empty()) {
                let theta: Vec<C> = (0..m).map(|_| C::new(rng.random_range(-1.0..1.0), 0.0)).collect();
                let mut eta: Vec<C> = (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), 0.0)).collect();
                for (i, j) in c.delta_pairs() {
                    eta[j] = theta[i];
                }
                let free = r_c(&ScatteringFunction::free(), &c, &theta, &eta).unwrap();
                assert_eq!(free, C::new(0.0, 0.0));
                let ising = r_c(&ScatteringFunction::ising(), &c, &theta, &eta).unwrap();
                if (m + n) % 2 == 0 {
                    assert_eq!(ising, C::new(0.0, 0.0));
                }
            }
        }
        let c = Contraction::new(1, 1, vec![(1, 2)]).unwrap();
        assert!(r_c(&ScatteringFunction::free(), &c, &[C::new(0.0, 0.0)], &[C::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn sc_matches_permutation_form_on_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = ScatteringFunction::exponential(0.7).unwrap();
        for (m, n) in [(2, 2), (3, 2), (3, 3), (2, 4)] {
            for c in enumerate_contractions(m, n) {
                let theta: Vec<C> = (0..m).map(|_| rand_c(&mut rng)).collect();
                let mut eta: Vec<C> = (0..n).map(|_| rand_c(&mut rng)).collect();
                for (i, j) in c.delta_pairs() {
                    eta[j] = theta[i];
                }
                let f = contraction_factors(&s, &c, &theta, &eta).unwrap();
                let rhs = s_sigma(&s, &f.sigma, &theta).unwrap() * s_sigma(&s, &f.rho, &eta).unwrap();
                assert!((f.s_c - rhs).norm() < 1e-12, "{c:?}");
            }
        }
    }

    #[test]
    fn reflect_and_compose() {
        let c = Contraction::new(3, 2, vec![(2, 4), (3, 5)]).unwrap();
        assert_eq!(c.reflect(), Contraction::new(2, 3, vec![(1, 4), (2, 5)]).unwrap());
        assert_eq!(c.reflect().reflect(), c);
        let c1 = Contraction::new(3, 3, vec![(2, 5)]).unwrap();
        let c2 = Contraction::new(2, 2, vec![(2, 3)]).unwrap();
        let joint = c1.compose(&c2).unwrap();
        assert_eq!(joint, Contraction::new(3, 3, vec![(2, 5), (3, 4)]).unwrap());
        assert_eq!(c1.compose(&Contraction::empty(2, 2)).unwrap(), c1);
        assert!(c1.compose(&Contraction::empty(3, 3)).is_err());
    }

    #[test]
    fn module_checks() {
        for s in [ScatteringFunction::free(), ScatteringFunction::ising(), ScatteringFunction::exponential(0.7).unwrap()] {
            let c = check_composition_law(&s, 200, 6, 1, 1e-12).unwrap();
            assert!(c.passed, "{c:?}");
        }
        assert!(check_contraction_counts(5).passed);
        assert!(check_rc_collapse(&ScatteringFunction::free(), 3, 1).unwrap().passed);
        assert!(check_rc_collapse(&ScatteringFunction::ising(), 3, 1).unwrap().passed);
        assert!(check_rc_collapse(&ScatteringFunction::exponential(0.7).unwrap(), 3, 1).is_err());
    }

    #[test]
    fn pairing_sign_independent_of_order() {
        for (p, s) in enumerate_pairings(6) {
            let mut q = p.clone();
            q.pairs.reverse();
            assert_eq!(q.sign(), s);
        }
    }
}
