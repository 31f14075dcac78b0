//! Candidate form factor families, the functions T_m, and checkers for the
//! analyticity, symmetry, periodicity, residue and bound conditions on a
//! family {F_k}.

use crate::analysis::{cross_norm_estimate, Indicatrix, IndicatrixKind, KernelSource, Profile, TestFunction2D, DiscRule};
use crate::combinatorics::{enumerate_pairings, s_sigma, Permutation};
use crate::fock::RapidityGrid;
use crate::numeric::{rng, Rule};
use crate::report::{worse, Check, CheckReport};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Default distance below which a pole hyperplane counts as hit.
pub const POLE_GUARD: f64 = 1e-10;

// ---------------------------------------------------------------- Pfaffians

macro_rules! pfaffian_impl {
    ($name:ident, $t:ty, $abs:expr, $zero:expr, $one:expr) => {
        /// Pfaffian of a skew matrix (row-major `n × n`), destroyed in place.
        pub fn $name(a: &mut [$t], n: usize) -> $t {
            if n % 2 == 1 {
                return $zero;
            }
            let mut pf = $one;
            let mut k = 0;
            while k + 1 < n {
                // pivot: largest |a[k][p]|, p > k
                let mut p = k + 1;
                let mut best = $abs(a[k * n + k + 1]);
                for q in k + 2..n {
                    let v = $abs(a[k * n + q]);
                    if v > best {
                        best = v;
                        p = q;
                    }
                }
                if p != k + 1 {
                    for c in 0..n {
                        a.swap((k + 1) * n + c, p * n + c);
                    }
                    for r in 0..n {
                        a.swap(r * n + k + 1, r * n + p);
                    }
                    pf = -pf;
                }
                let piv = a[k * n + k + 1];
                if best == 0.0 {
                    return $zero;
                }
                pf = pf * piv;
                for i in k + 2..n {
                    let (ki, k1i) = (a[k * n + i], a[(k + 1) * n + i]);
                    for j in k + 2..n {
                        let upd = (ki * a[(k + 1) * n + j] - k1i * a[k * n + j]) / piv;
                        a[i * n + j] = a[i * n + j] - upd;
                    }
                }
                k += 2;
            }
            pf
        }
    };
}

pfaffian_impl!(pfaffian, C, |z: C| z.norm(), ZERO, ONE);
pfaffian_impl!(pfaffian_real, f64, |x: f64| x.abs(), 0.0, 1.0);

/// Skew matrix `a_{ij} = pair(i, j)` (i < j), bordered by a row of ones for
/// odd sizes, so that its Pfaffian is the signed pairing sum.
fn bordered<T: Copy + std::ops::Neg<Output = T>>(m: usize, zero: T, one: T, pair: impl Fn(usize, usize) -> T) -> (Vec<T>, usize) {
    let n = m + m % 2;
    let mut a = vec![zero; n * n];
    for i in 0..m {
        for j in i + 1..m {
            let v = pair(i, j);
            a[i * n + j] = v;
            a[j * n + i] = -v;
        }
        if n > m {
            a[i * n + m] = one;
            a[m * n + i] = -one;
        }
    }
    (a, n)
}

// ---------------------------------------------------------------- T_m

fn near_pole(d: C, guard: f64) -> bool {
    // tanh(d/2) has poles at d = iπ(2l+1)
    (d * 0.5).cosh().norm() < guard
}

/// T_m(ζ) = Σ_P sign P ∏ tanh((ζ_ℓ − ζ_r)/2), via a (bordered) Pfaffian.
pub fn t_m(z: &[C]) -> Result<C> {
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if near_pole(z[i] - z[j], POLE_GUARD) {
                return Err(Error::Eval(format!("T_{} evaluated on the pole ζ_{} − ζ_{} = iπ", z.len(), j + 1, i + 1)));
            }
        }
    }
    Ok(t_m_unchecked(z))
}

pub fn t_m_unchecked(z: &[C]) -> C {
    let (mut a, n) = bordered(z.len(), ZERO, ONE, |i, j| ((z[i] - z[j]) * 0.5).tanh());
    pfaffian(&mut a, n)
}

/// T_m at real rapidities.
pub fn t_m_real(theta: &[f64]) -> f64 {
    let (mut a, n) = bordered(theta.len(), 0.0, 1.0, |i, j| ((theta[i] - theta[j]) * 0.5).tanh());
    pfaffian_real(&mut a, n)
}

/// T_m in the variables x_j = tanh(θ_j/2), defined on the closed cube except
/// where x_ℓ x_r = 1.
pub fn t_m_rational(x: &[f64]) -> f64 {
    let (mut a, n) = bordered(x.len(), 0.0, 1.0, |i, j| (x[i] - x[j]) / (1.0 - x[i] * x[j]));
    pfaffian_real(&mut a, n)
}

/// T_m by explicit enumeration of pairings. Slow; used as an oracle.
pub fn t_m_pairings(z: &[C]) -> C {
    enumerate_pairings(z.len())
        .iter()
        .map(|(p, sign)| {
            p.pairs.iter().fold(C::new(*sign as f64, 0.0), |acc, &(l, r)| acc * ((z[l - 1] - z[r - 1]) * 0.5).tanh())
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleDistribution {
    /// Uniform on [−R, R]^m.
    Box(u32),
    /// Independent Cauchy draws with scale 3.
    HeavyTailed,
}

impl fmt::Display for SampleDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleDistribution::Box(r) => write!(f, "box{r}"),
            SampleDistribution::HeavyTailed => write!(f, "cauchy"),
        }
    }
}

pub const DEFAULT_DISTRIBUTIONS: [SampleDistribution; 4] =
    [SampleDistribution::Box(1), SampleDistribution::Box(5), SampleDistribution::Box(20), SampleDistribution::HeavyTailed];

fn draw(dist: SampleDistribution, r: &mut ChaCha8Rng) -> f64 {
    match dist {
        SampleDistribution::Box(b) => r.random_range(-(b as f64)..b as f64),
        SampleDistribution::HeavyTailed => 3.0 * (PI * (r.random::<f64>() - 0.5)).tan(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TmBound {
    pub m: usize,
    pub samples: usize,
    pub max_abs: f64,
    pub argmax: Vec<f64>,
    pub exceeds: bool,
    pub per_distribution: Vec<(String, f64)>,
    /// max over sampled boundary points of min |T_m(x) ∓ T_{m−1}(x̂)|.
    pub boundary_residual: f64,
    pub boundary_samples: usize,
}

/// Empirical sup of |T_m| over real points, split evenly across the
/// distributions, plus the boundary reduction T_m|_{x_j=±1} = ±T_{m−1}.
pub fn sample_tm_bound(m: usize, samples: usize, distributions: &[SampleDistribution], seed: u64) -> Result<TmBound> {
    if m > 15 {
        return Err(Error::Precondition(format!("m = {m} exceeds the cap 15")));
    }
    if distributions.is_empty() {
        return Err(Error::Precondition("no sampling distributions".into()));
    }
    let chunk = samples.div_ceil(distributions.len());
    let mut max_abs = 0.0_f64;
    let mut argmax = vec![0.0; m];
    let mut per = Vec::new();
    let mut total = 0;
    for (d, &dist) in distributions.iter().enumerate() {
        let mut r = rng(seed, (m as u64) << 8 | d as u64);
        let mut th = vec![0.0; m];
        let mut best = 0.0_f64;
        for _ in 0..chunk {
            for t in th.iter_mut() {
                *t = draw(dist, &mut r);
            }
            let v = t_m_real(&th).abs();
            best = best.max(v);
            if v > max_abs {
                max_abs = v;
                argmax.copy_from_slice(&th);
            }
        }
        total += chunk;
        per.push((dist.to_string(), best));
    }
    let mut r = rng(seed, 0xb0 | (m as u64) << 16);
    let boundary_samples = if m >= 1 { 2000 } else { 0 };
    let mut boundary_residual = 0.0_f64;
    for _ in 0..boundary_samples {
        let mut x: Vec<f64> = (0..m).map(|_| r.random_range(-0.999..0.999)).collect();
        let j = r.random_range(0..m);
        x[j] = if r.random::<bool>() { 1.0 } else { -1.0 };
        let full = t_m_rational(&x);
        let mut hat = x.clone();
        hat.remove(j);
        let red = t_m_rational(&hat);
        boundary_residual = worse(boundary_residual, (full - red).abs().min((full + red).abs()));
    }
    Ok(TmBound {
        m,
        samples: total,
        max_abs,
        argmax,
        exceeds: max_abs > 1.0 + 1e-12,
        per_distribution: per,
        boundary_residual,
        boundary_samples,
    })
}

/// d/dα log|T_m(αx)| against (1/α) Σ_{i<j} (1 + x_i x_j α²)/(1 − x_i x_j α²).
/// The derivative is taken by the complex step Im T(x(α + ih))/h, which has
/// no subtractive cancellation. Points with |T_m(αx)| < 1e−8 are skipped.
pub fn check_logderiv(m: usize, samples: usize, seed: u64, tol: f64) -> Result<Check> {
    if !(2..=12).contains(&m) {
        return Err(Error::Precondition(format!("log-derivative check needs 2 <= m <= 12, got {m}")));
    }
    let t0 = Instant::now();
    let mut r = rng(seed, 0x10d | (m as u64) << 12);
    let mut worst = 0.0_f64;
    let mut skipped = 0u64;
    let mut done = 0u64;
    let mut worst_point = Vec::new();
    const STEP: f64 = 1e-20;
    while done < samples as u64 {
        if skipped > 100 * samples as u64 {
            break;
        }
        let x: Vec<f64> = (0..m).map(|_| r.random_range(-0.99..0.99)).collect();
        let alpha = r.random_range(0.05..0.95);
        let xs: Vec<C> = x.iter().map(|v| C::new(alpha, STEP) * v).collect();
        let (mut a, n) = bordered(m, ZERO, ONE, |i, j| (xs[i] - xs[j]) / (ONE - xs[i] * xs[j]));
        let t = pfaffian(&mut a, n);
        if !(t.re.abs() >= 1e-8) {
            skipped += 1;
            continue;
        }
        let lhs = t.im / STEP / t.re;
        let mut rhs = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                let q = x[i] * x[j] * alpha * alpha;
                rhs += (1.0 + q) / (1.0 - q);
            }
        }
        rhs /= alpha;
        let rel = (lhs - rhs).abs() / rhs.abs();
        if rel > worst || rel.is_nan() {
            worst_point = x.clone();
            worst_point.push(alpha);
        }
        worst = worse(worst, rel);
        done += 1;
    }
    Ok(Check::residual(&format!("log-derivative m={m}"), "tm-log-derivative", worst, tol)
        .samples(done)
        .seed(seed)
        .detail("skipped_near_zero", skipped)
        .detail("worst_point_x_then_alpha", worst_point)
        .timed(t0))
}

// ---------------------------------------------------------------- residues

/// Circle used for residue extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contour {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for Contour {
    fn default() -> Self {
        Contour { radius: 0.1, nodes: 256 }
    }
}

/// Residue of `f` on the hyperplane ζ_j − ζ_i = iπ (0-based `i`, `j`), in the
/// variable w = ζ_j − ζ_i with all other components fixed at `base`.
/// Returns the residue from `2·nodes` points and the magnitude scale
/// ρ·max|f| on the circle; errors if the `nodes` and `2·nodes` estimates
/// differ by more than 1e−8 of the larger of |residue| and that scale.
pub fn residue_on_hyperplane(
    f: &dyn Fn(&[C]) -> Result<C>,
    i: usize,
    j: usize,
    base: &[C],
    contour: Contour,
) -> Result<(C, f64)> {
    if i == j || i >= base.len() || j >= base.len() {
        return Err(Error::Precondition(format!("bad hyperplane indices ({i}, {j}) for k = {}", base.len())));
    }
    let mut err = None;
    let mut scale = 0.0_f64;
    let mut eval = |w: C| {
        let mut z = base.to_vec();
        z[j] = z[i] + w;
        match f(&z) {
            Ok(v) => {
                scale = scale.max(v.norm());
                v
            }
            Err(e) => {
                err.get_or_insert(e);
                ZERO
            }
        }
    };
    let centre = C::new(0.0, PI);
    let coarse = {
        let mut acc = ZERO;
        let n = contour.nodes;
        for k in 0..n {
            let e = C::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            acc += eval(centre + e * contour.radius) * e * contour.radius;
        }
        acc / n as f64
    };
    let fine = {
        let mut acc = ZERO;
        let n = 2 * contour.nodes;
        for k in 0..n {
            let e = C::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            acc += eval(centre + e * contour.radius) * e * contour.radius;
        }
        acc / n as f64
    };
    if let Some(e) = err {
        return Err(e);
    }
    let scale = scale * contour.radius;
    if (fine - coarse).norm() > 1e-8 * fine.norm().max(scale) {
        return Err(Error::Accuracy(format!("residue not converged: {coarse} vs {fine}")));
    }
    Ok((fine, scale))
}

fn spread_base(k: usize, r: &mut ChaCha8Rng, imag: f64) -> Vec<C> {
    loop {
        let z: Vec<C> = (0..k).map(|_| C::new(r.random_range(-2.0..2.0), r.random_range(-imag..=imag))).collect();
        let ok = (0..k).all(|a| (0..k).all(|b| a == b || (z[a].re - z[b].re).abs() > 0.3));
        if ok {
            return z;
        }
    }
}

/// Residues of T_m on every hyperplane ζ_j − ζ_i = iπ against
/// 2(−1)^{i+j} T_{m−2}(ζ̂), for 2 ≤ m ≤ m_max.
pub fn check_tm_residues(m_max: usize, points: usize, seed: u64, tol: f64, contour: Contour) -> Result<Check> {
    let t0 = Instant::now();
    let mut worst = 0.0_f64;
    let mut count = 0u64;
    let f = |z: &[C]| t_m(z);
    for m in 2..=m_max {
        let mut r = rng(seed, 0x7e5 | (m as u64) << 12);
        for _ in 0..points {
            let base = spread_base(m, &mut r, 0.0);
            for i in 0..m {
                for j in i + 1..m {
                    let (res, _) = residue_on_hyperplane(&f, i, j, &base, contour)?;
                    let hat: Vec<C> = (0..m).filter(|&q| q != i && q != j).map(|q| base[q]).collect();
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let want = t_m(&hat)? * (2.0 * sign);
                    worst = worse(worst, (res - want).norm() / want.norm().max(1e-3));
                    count += 1;
                }
            }
        }
    }
    Ok(Check::residual(&format!("T_m residues m<={m_max}"), "tm-residue-lemma", worst, tol)
        .samples(count)
        .seed(seed)
        .timed(t0))
}

// ---------------------------------------------------------------- general S

/// H_S(ζ) = (e^{ζ/2} + S(−ζ) e^{−ζ/2}) / (e^{ζ/2} + e^{−ζ/2}).
pub fn h_s(s: &ScatteringFunction, z: C) -> Result<C> {
    let den = (z * 0.5).exp() + (-z * 0.5).exp();
    if den.norm() < POLE_GUARD {
        return Err(Error::Eval(format!("H_S evaluated at its pole {z}")));
    }
    Ok(((z * 0.5).exp() + s.eval(-z)? * (-z * 0.5).exp()) / den)
}

/// T_{S,m}(ζ) = (1/(2^k k!)) Σ_σ S^σ(ζ) ∏_{j≤k} H_S(ζ_{σ(2j−1)} − ζ_{σ(2j)}),
/// k = ⌊m/2⌋. Permutation sum, so m ≤ 8.
pub fn t_s_m(s: &ScatteringFunction, z: &[C]) -> Result<C> {
    let m = z.len();
    if m > 8 {
        return Err(Error::Precondition(format!("T_(S,m) by permutation sum needs m <= 8, got {m}")));
    }
    let k = m / 2;
    let mut acc = ZERO;
    for sigma in Permutation::all(m) {
        let mut term = s_sigma(s, &sigma, z)?;
        for j in 0..k {
            term *= h_s(s, z[sigma.at(2 * j)] - z[sigma.at(2 * j + 1)])?;
        }
        acc += term;
    }
    Ok(acc / (2f64.powi(k as i32) * crate::combinatorics::factorial(k)))
}

/// Conditions on a candidate factor family M_{S,2k+1}: permutation
/// invariance, 2πi-shift covariance with ∏_{i≠j} S(ζ_i − ζ_j), and the
/// restriction M_{2k+1}|_{ζ_n−ζ_m=iπ} = M_{2k−1}(ζ̂) · ½(1 − ∏_j S(ζ_m − ζ_j)).
/// `m` receives vectors of odd length 1..=k_max.
pub fn check_ms_conditions(
    s: &ScatteringFunction,
    m: &dyn Fn(&[C]) -> C,
    k_max: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new("ms-conditions");
    let mut r = rng(seed, 0x3511);
    let (mut c1, mut c2, mut c3) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut n = 0u64;
    let rel = |a: C, b: C| (a - b).norm() / a.norm().max(b.norm()).max(1.0);
    for k in (1..=k_max).step_by(2) {
        for _ in 0..samples {
            let z: Vec<C> = (0..k).map(|_| C::new(r.random_range(-2.0..2.0), r.random_range(-0.5..0.5))).collect();
            let base = m(&z);
            let sigma = Permutation::random(k, &mut r);
            c1 = worse(c1, rel(m(&sigma.apply(&z)), base));
            let j = r.random_range(0..k);
            let mut shifted = z.clone();
            shifted[j] += C::new(0.0, 2.0 * PI);
            let mut prod = ONE;
            for i in (0..k).filter(|&i| i != j) {
                prod *= s.eval(z[i] - z[j])?;
            }
            c2 = worse(c2, rel(m(&shifted), prod * base));
            if k >= 3 {
                let a = r.random_range(0..k);
                let mut b = r.random_range(0..k - 1);
                if b >= a {
                    b += 1;
                }
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let mut on = z.clone();
                on[hi] = on[lo] + C::new(0.0, PI);
                let hat: Vec<C> = (0..k).filter(|&q| q != lo && q != hi).map(|q| on[q]).collect();
                let mut p = ONE;
                for q in 0..k {
                    p *= s.eval(on[lo] - on[q])?;
                }
                c3 = worse(c3, (m(&on) - m(&hat) * (ONE - p) * 0.5).norm());
            }
            n += 1;
        }
    }
    rep.push(Check::residual("M permutation invariance", "ms-permutation-invariance", c1, tol).samples(n).seed(seed));
    rep.push(Check::residual("M S-periodicity", "ms-shift-covariance", c2, tol).samples(n).seed(seed));
    rep.push(Check::residual("M restriction identity", "ms-restriction", c3, tol).samples(n).seed(seed));
    Ok(rep)
}

// ---------------------------------------------------------------- families

pub type CustomFn = Arc<dyn Fn(&[C]) -> Result<C> + Send + Sync>;

#[derive(Clone)]
pub enum FamilyKind {
    /// F_2 = sinh((ζ₁−ζ₂)/2) g̃(μE), all other F_k = 0.
    BuchholzSummers,
    /// F_{2k+1} = (2πi)^{−k} g̃(μE) T_{2k+1}, even F_k = 0.
    SchroerTruong,
    Zero,
    /// User-supplied F_k with declared pole pairs per k.
    Custom { f: CustomFn, poles: Arc<dyn Fn(usize) -> Vec<(usize, usize)> + Send + Sync> },
}

#[derive(Clone)]
pub struct FormFactorFamily {
    pub name: String,
    pub s: ScatteringFunction,
    pub mu: f64,
    /// Localization radius.
    pub r: f64,
    pub profile: Profile,
    pub kind: FamilyKind,
}

impl fmt::Debug for FormFactorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormFactorFamily")
            .field("name", &self.name)
            .field("s", &self.s.to_string())
            .field("mu", &self.mu)
            .field("r", &self.r)
            .finish()
    }
}

pub fn family_buchholz_summers(profile: Profile, mu: f64) -> FormFactorFamily {
    FormFactorFamily {
        name: "bs".into(),
        s: ScatteringFunction::ising(),
        mu,
        r: profile.radius(),
        profile,
        kind: FamilyKind::BuchholzSummers,
    }
}

pub fn family_schroer_truong(profile: Profile, mu: f64, s: &ScatteringFunction) -> Result<FormFactorFamily> {
    if s.at_zero() != -1.0 || !s.is_constant() {
        return Err(Error::Config(format!("the odd T_m family needs S = ising, got {s}")));
    }
    Ok(FormFactorFamily {
        name: "st".into(),
        s: s.clone(),
        mu,
        r: profile.radius(),
        profile,
        kind: FamilyKind::SchroerTruong,
    })
}

pub fn family_zero(s: ScatteringFunction) -> FormFactorFamily {
    FormFactorFamily { name: "zero".into(), s, mu: 1.0, r: 1.0, profile: Profile::gaussian(1.0), kind: FamilyKind::Zero }
}

/// E(ζ) = Σ cosh ζ_j.
pub fn energy(z: &[C]) -> C {
    z.iter().map(|v| v.cosh()).sum()
}

impl FormFactorFamily {
    /// F_k(ζ), k = ζ.len().
    pub fn eval(&self, z: &[C]) -> Result<C> {
        let k = z.len();
        match &self.kind {
            FamilyKind::Zero => Ok(ZERO),
            FamilyKind::BuchholzSummers => {
                if k != 2 {
                    return Ok(ZERO);
                }
                Ok(((z[0] - z[1]) * 0.5).sinh() * self.profile.eval(energy(z) * self.mu))
            }
            FamilyKind::SchroerTruong => {
                if k % 2 == 0 {
                    return Ok(ZERO);
                }
                let pre = C::new(0.0, 2.0 * PI).powi(-((k / 2) as i32));
                Ok(pre * self.profile.eval(energy(z) * self.mu) * t_m(z)?)
            }
            FamilyKind::Custom { f, .. } => f(z),
        }
    }

    /// Declared pole pairs (m, n), 0-based, m < n, for hyperplanes ζ_n − ζ_m = iπ.
    pub fn poles(&self, k: usize) -> Vec<(usize, usize)> {
        match &self.kind {
            FamilyKind::SchroerTruong if k % 2 == 1 => {
                (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect()
            }
            FamilyKind::Custom { poles, .. } => poles(k),
            _ => Vec::new(),
        }
    }

    /// Nonzero arities among 0..=k_max.
    pub fn arities(&self, k_max: usize) -> Vec<usize> {
        match &self.kind {
            FamilyKind::BuchholzSummers => vec![2].into_iter().filter(|&k| k <= k_max).collect(),
            FamilyKind::SchroerTruong => (1..=k_max).step_by(2).collect(),
            FamilyKind::Zero => Vec::new(),
            FamilyKind::Custom { .. } => (0..=k_max).collect(),
        }
    }
}

// ---------------------------------------------------------------- nodes

/// λ^{(k,j)} for any integer j: (0,…,0,π,…,π) with j entries π for
/// 0 ≤ j ≤ k, (−π,…,−π,0,…,0) with |j| entries −π for −k ≤ j < 0, and
/// λ^{(k,j+2k)} = λ^{(k,j)} + 2π.
pub fn node(k: usize, j: i64) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    let period = 2 * k as i64;
    let q = (j + k as i64).div_euclid(period);
    let j0 = j - q * period;
    let shift = 2.0 * PI * q as f64;
    let v: Vec<f64> = if j0 >= 0 {
        (0..k).map(|i| if i >= k - j0 as usize { PI } else { 0.0 }).collect()
    } else {
        (0..k).map(|i| if i < (-j0) as usize { -PI } else { 0.0 }).collect()
    };
    v.into_iter().map(|x| x + shift).collect()
}

/// ν^{(k,j)} = (1, 2, …, k−j, −j, …, −2, −1).
pub fn offset(k: usize, j: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=k - j).map(|x| x as f64).collect();
    v.extend((1..=j).rev().map(|x| -(x as f64)));
    v
}

// ---------------------------------------------------------------- conditions

#[derive(Debug, Clone)]
pub struct FConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Node offset magnitude for the boundary-value norms.
    pub eps: f64,
    pub ceiling: f64,
    pub omega: Indicatrix,
    pub contour: Contour,
    pub grid_min: f64,
    pub grid_max: f64,
}

impl Default for FConfig {
    fn default() -> Self {
        FConfig {
            samples: 40,
            seed: 1,
            tol: 1e-8,
            eps: 1e-3,
            ceiling: 1e8,
            omega: Indicatrix { kind: IndicatrixKind::Log { beta: 2.0 }, a_omega: None, b_omega: None },
            contour: Contour::default(),
            grid_min: -3.0,
            grid_max: 3.0,
        }
    }
}

fn rel_diff(a: C, b: C) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

fn guarded(f: &FormFactorFamily, z: &[C], margin: f64) -> bool {
    let k = z.len();
    if f.poles(k).is_empty() {
        return true;
    }
    (0..k).all(|a| (a + 1..k).all(|b| !near_pole(z[b] - z[a], margin)))
}

/// Point in the analyticity domain Im ζ₁ < … < Im ζ_k < Im ζ₁ + π, kept 0.3
/// away from the pole hyperplanes.
fn domain_point(k: usize, r: &mut ChaCha8Rng) -> Vec<C> {
    let y0 = r.random_range(-0.5..0.5);
    let mut ys: Vec<f64> = (0..k).map(|i| if i == 0 { 0.0 } else { r.random_range(0.0..PI - 0.3) }).collect();
    ys.sort_by(f64::total_cmp);
    ys.iter().map(|y| C::new(r.random_range(-2.0..2.0), y0 + y)).collect()
}

fn random_point(k: usize, r: &mut ChaCha8Rng) -> Vec<C> {
    (0..k).map(|_| C::new(r.random_range(-2.0..2.0), r.random_range(-1.0..1.0))).collect()
}

fn grid_points_for(k: usize) -> usize {
    match k {
        0 | 1 => 32,
        2 => 24,
        3 => 16,
        4 => 10,
        _ => 8,
    }
}

/// Conditions (F1)–(F6) for the arities in `ks`.
pub fn verify_conditions_f(family: &FormFactorFamily, ks: &[usize], cfg: &FConfig) -> Result<CheckReport> {
    let mut rep = CheckReport::new("conditions-f");
    rep.environment.insert("family".into(), family.name.clone());
    rep.environment.insert("s".into(), family.s.to_string());
    for &k in ks {
        let label = format!("{} k={k}", family.name);
        rep.push(check_f1(family, k, cfg, &label)?);
        rep.push(check_f2(family, k, cfg, &label)?);
        rep.push(check_f3(family, k, cfg, &label)?);
        rep.push(check_f4(family, k, cfg, &label)?);
        rep.push(check_f5(family, k, cfg, &label)?);
        rep.push(check_f6(family, k, cfg, &label)?);
    }
    Ok(rep)
}

fn check_f1(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(cfg.seed, 0xf1 | (k as u64) << 8);
    let h = 1e-4;
    let mut worst = 0.0_f64;
    for _ in 0..cfg.samples {
        let z = domain_point(k, &mut r);
        let f0 = family.eval(&z)?;
        for j in 0..k {
            let at = |d: C| -> Result<C> {
                let mut w = z.clone();
                w[j] += d;
                family.eval(&w)
            };
            let diff = |dir: C| -> Result<C> {
                let d1 = (at(dir * h)? - at(-dir * h)?) / (2.0 * h);
                let d2 = (at(dir * (h / 2.0))? - at(-dir * (h / 2.0))?) / h;
                Ok((d2 * 4.0 - d1) / 3.0)
            };
            let dx = diff(ONE)?;
            let dy = diff(C::i())?;
            let scale = dx.norm() + f0.norm();
            if scale > 0.0 {
                worst = worse(worst, (dy - C::i() * dx).norm() / scale);
            }
        }
    }
    Ok(Check::residual(&format!("F1 Cauchy-Riemann {label}"), "condition-f-analyticity", worst, cfg.tol)
        .samples((cfg.samples * k) as u64)
        .seed(cfg.seed)
        .timed(t0))
}

fn check_f2(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(cfg.seed, 0xf2 | (k as u64) << 8);
    let mut worst = 0.0_f64;
    let mut n = 0;
    while n < cfg.samples {
        let z = random_point(k, &mut r);
        if !guarded(family, &z, 0.05) {
            continue;
        }
        let f0 = family.eval(&z)?;
        for j in 0..k.saturating_sub(1) {
            let mut w = z.clone();
            w.swap(j, j + 1);
            let rhs = family.s.eval(z[j + 1] - z[j])? * family.eval(&w)?;
            worst = worse(worst, rel_diff(f0, rhs));
        }
        n += 1;
    }
    Ok(Check::residual(&format!("F2 S-symmetry {label}"), "condition-f-symmetry", worst, cfg.tol)
        .samples(n as u64)
        .seed(cfg.seed)
        .timed(t0))
}

fn check_f3(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(cfg.seed, 0xf3 | (k as u64) << 8);
    let mut worst = 0.0_f64;
    let mut n = 0;
    while n < cfg.samples {
        let z = random_point(k, &mut r);
        if !guarded(family, &z, 0.05) {
            continue;
        }
        let f0 = family.eval(&z)?;
        for j in 0..k {
            let mut w = z.clone();
            w[j] += C::new(0.0, 2.0 * PI);
            let mut prod = ONE;
            for i in (0..k).filter(|&i| i != j) {
                prod *= family.s.eval(z[i] - z[j])?;
            }
            worst = worse(worst, rel_diff(family.eval(&w)?, prod * f0));
        }
        n += 1;
    }
    Ok(Check::residual(&format!("F3 S-periodicity {label}"), "condition-f-periodicity", worst, cfg.tol)
        .samples(n as u64)
        .seed(cfg.seed)
        .timed(t0))
}

fn check_f4(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(cfg.seed, 0xf4 | (k as u64) << 8);
    let mut worst = 0.0_f64;
    let mut n = 0u64;
    let f = |z: &[C]| family.eval(z);
    let per_pair = (cfg.samples / 10).max(2);
    for m in 0..k {
        for nn in m + 1..k {
            for _ in 0..per_pair {
                let base = spread_base(k, &mut r, 0.2);
                let (res, scale) = residue_on_hyperplane(&f, m, nn, &base, cfg.contour)?;
                let mut on = base.clone();
                on[nn] = on[m] + C::new(0.0, PI);
                let mut p1 = ONE;
                for j in m..=nn {
                    p1 *= family.s.eval(on[j] - on[m])?;
                }
                let mut p2 = ONE;
                for p in 0..k {
                    p2 *= family.s.eval(on[m] - on[p])?;
                }
                let hat: Vec<C> = (0..k).filter(|&q| q != m && q != nn).map(|q| on[q]).collect();
                let want = -p1 * (ONE - p2) * family.eval(&hat)? / C::new(0.0, 2.0 * PI);
                let denom = want.norm().max(scale).max(f64::MIN_POSITIVE);
                worst = worse(worst, (res - want).norm() / denom);
                n += 1;
            }
        }
    }
    Ok(Check::residual(&format!("F4 recursion residues {label}"), "condition-f-recursion", worst, cfg.tol)
        .samples(n)
        .seed(cfg.seed)
        .detail("declared_poles", family.poles(k).len())
        .timed(t0))
}

/// ‖F_k(· + iλ^{(k,j+kℓ)} + iεν^{(k,j)})‖^ω_{(k−j)×j} on a grid.
pub fn node_norm(family: &FormFactorFamily, k: usize, j: usize, ell: i64, eps: f64, grid: &RapidityGrid, omega: &Indicatrix) -> Result<f64> {
    let lam = node(k, j as i64 + k as i64 * ell);
    let nu = offset(k, j);
    let npts = grid.n_points;
    let pts = grid.points();
    let total = npts.pow(k as u32);
    let vals: Vec<Result<C>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut z = vec![ZERO; k];
            let mut i = idx;
            for v in (0..k).rev() {
                z[v] = C::new(pts[i % npts], lam[v] + eps * nu[v]);
                i /= npts;
            }
            family.eval(&z)
        })
        .collect();
    let vals: Vec<C> = vals.into_iter().collect::<Result<_>>()?;
    cross_norm_estimate(KernelSource::Grid(&vals), k - j, j, grid, Some(omega))
}

fn check_f5(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let grid = RapidityGrid::new(cfg.grid_min, cfg.grid_max, grid_points_for(k), family.mu)?;
    let mut worst = 0.0_f64;
    let mut norms = Vec::new();
    let mut sensitivity = 0.0_f64;
    for j in 0..=k {
        for ell in 0..=1 {
            let a = node_norm(family, k, j, ell, cfg.eps, &grid, &cfg.omega)?;
            let b = node_norm(family, k, j, ell, cfg.eps / 2.0, &grid, &cfg.omega)?;
            worst = worse(worst, a);
            if a > 0.0 {
                sensitivity = sensitivity.max(b / a);
            }
            norms.push((j, ell, a));
        }
    }
    Ok(Check::verdict(&format!("F5 node norms {label}"), "condition-f-node-bounds", worst.is_finite() && worst <= cfg.ceiling, worst, cfg.ceiling)
        .samples(norms.len() as u64)
        .detail("norms_j_ell_value", norms)
        .detail("eps", cfg.eps)
        .detail("max_ratio_half_eps", sensitivity)
        .detail("grid_points", grid.n_points)
        .timed(t0))
}

/// Point in the tube over the interior of the convex hull of the upper
/// (sign +1) or lower (sign −1) staircase, with its distance to the boundary.
fn tube_point(k: usize, sign: f64, r: &mut ChaCha8Rng) -> (Vec<C>, f64) {
    let mut gaps: Vec<f64> = (0..=k)
        .map(|_| {
            let g: f64 = -r.random::<f64>().max(1e-300).ln();
            if r.random::<f64>() < 0.3 {
                g * 10f64.powf(-r.random_range(0.0..3.0))
            } else {
                g
            }
        })
        .collect();
    let total: f64 = gaps.iter().sum();
    for g in gaps.iter_mut() {
        *g *= PI / total;
    }
    let mut lam = Vec::with_capacity(k);
    let mut acc = 0.0;
    for g in gaps.iter().take(k) {
        acc += g;
        lam.push(acc);
    }
    let mut dist = gaps[0].min(gaps[k]);
    for g in &gaps[1..k] {
        dist = dist.min(g / 2f64.sqrt());
    }
    let off = if sign > 0.0 { 0.0 } else { -PI };
    let z = lam.iter().map(|l| C::new(r.random_range(-3.0..3.0), l + off)).collect();
    (z, dist)
}

fn check_f6(family: &FormFactorFamily, k: usize, cfg: &FConfig, label: &str) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(cfg.seed, 0xf6 | (k as u64) << 8);
    // the sampled maxima are heavy tailed, so the training set is kept much
    // larger than the holdout
    let n_train = (200 * cfg.samples).max(8000);
    let n = (5 * cfg.samples).max(200);
    let mut collect = |n: usize| -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let sign = if out.len() % 2 == 0 { 1.0 } else { -1.0 };
            let (z, dist) = tube_point(k, sign, &mut r);
            let v = family.eval(&z)?.norm();
            if v == 0.0 {
                out.push((0.0, f64::NEG_INFINITY));
                continue;
            }
            let growth: f64 = z.iter().map(|w| family.mu * family.r * w.sinh().im.abs()).sum();
            let x: f64 = z.iter().map(|w| cfg.omega.omega(w.re.cosh())).sum();
            out.push((x, v.ln() + 0.5 * k as f64 * dist.ln() - growth));
        }
        Ok(out)
    };
    let train = collect(n_train)?;
    let hold = collect(n)?;
    let fin: Vec<&(f64, f64)> = train.iter().filter(|p| p.1.is_finite()).collect();
    let c_prime = if fin.len() > 2 {
        let m = fin.len() as f64;
        let (mx, my) = fin.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / m, b + p.1 / m));
        let (sxy, sxx) = fin.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
        if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 }
    } else {
        0.0
    };
    let ln_c = train.iter().map(|p| p.1 - c_prime * p.0).fold(f64::NEG_INFINITY, f64::max) + 2f64.ln();
    let worst = hold.iter().map(|p| p.1 - c_prime * p.0).fold(f64::NEG_INFINITY, f64::max);
    let passed = worst <= ln_c || worst == f64::NEG_INFINITY;
    Ok(Check::verdict(&format!("F6 pointwise bound {label}"), "condition-f-pointwise-bound", passed, worst.exp(), ln_c.exp())
        .samples((n_train + n) as u64)
        .seed(cfg.seed)
        .detail("train_holdout", (n_train, n))
        .detail("fitted_c", ln_c.exp())
        .detail("fitted_c_prime", c_prime)
        .timed(t0))
}

// ---------------------------------------------------------------- contour shift

#[derive(Debug, Clone)]
pub struct ContourShiftConfig {
    pub eps: [f64; 2],
    /// Test function, supported (up to negligible tails) in x¹ > |x⁰| + r.
    pub g: TestFunction2D,
    /// Width of the Gaussian smearing function f.
    pub f_width: f64,
    /// Finite stand-in for the i0 offsets of θ and η.
    pub i0: f64,
    pub xi_range: f64,
    pub theta_range: f64,
    pub tol: f64,
}

impl ContourShiftConfig {
    pub fn for_family(family: &FormFactorFamily) -> Self {
        ContourShiftConfig {
            eps: [0.05, 0.01],
            g: TestFunction2D::Gaussian { center: [0.0, family.r + 4.0], sigma: 0.3 },
            f_width: 1.0,
            i0: 0.0,
            xi_range: 4.5,
            theta_range: 6.0,
            tol: 1e-5,
        }
    }
}

struct LineData {
    /// K(ξ + iε) and K(ξ + iπ − iε) on the ξ nodes.
    lower: Vec<C>,
    upper: Vec<C>,
}

fn k_line(family: &FormFactorFamily, m: usize, n: usize, cfg: &ContourShiftConfig, xi: &Rule, th: &Rule, lam: f64) -> Result<Vec<C>> {
    let mu = family.mu;
    let w = cfg.f_width;
    // product rule over θ ∈ ℝ^m, η ∈ ℝ^n
    let dims = m + n;
    let q = th.nodes.len();
    let combos = q.pow(dims as u32);
    xi.nodes
        .par_iter()
        .map(|&x| {
            let zeta = C::new(x, lam);
            let mut acc = ZERO;
            let mut args = vec![ZERO; dims + 1];
            for idx in 0..combos {
                let mut i = idx;
                let mut weight = 1.0;
                let mut fval = 1.0;
                for d in 0..dims {
                    let t = th.nodes[i % q];
                    weight *= th.weights[i % q];
                    fval *= (-((t - 0.3) / w).powi(2)).exp();
                    i /= q;
                    if d < m {
                        args[d] = C::new(t, cfg.i0 * (d + 1) as f64);
                    } else {
                        let e = d - m;
                        args[d + 1] = C::new(t, PI - cfg.i0 * (n - e) as f64);
                    }
                }
                args[m] = zeta;
                acc += family.eval(&args)? * (weight * fval);
            }
            Ok(acc * (-C::i() * mu * family.r * zeta.sinh()).exp())
        })
        .collect()
}

fn h_at(family: &FormFactorFamily, g: &TestFunction2D, z: C, rule: &DiscRule) -> C {
    (C::i() * family.mu * family.r * z.sinh()).exp() * g.fourier(-1.0, z, 0, family.mu, rule)
}

/// The contour-shift identity ∫K(ξ+iε)h(ξ+iε)dξ = ∫K(ξ+iπ−iε)h(ξ+iπ−iε)dξ,
/// with f a Gaussian and h(ξ) = e^{iμr sinh ξ} g⁻(ξ).
///
/// Reported per ε: the relative line discrepancy D(ε), and the boundary-value
/// discrepancy D_bv(ε) = |∫K(ξ+iε)h(ξ) − ∫K(ξ+iπ−iε)h(ξ+iπ)| in which only K
/// is displaced from the real boundary. Passes when D ≤ tol at both ε and
/// D_bv shrinks at least 3× from the first to the second ε.
pub fn verify_contour_shift(family: &FormFactorFamily, m: usize, n: usize, cfg: &ContourShiftConfig) -> Result<Check> {
    if m + n > 1 {
        return Err(Error::Precondition(format!("contour shift implemented for m + n <= 1, got ({m}, {n})")));
    }
    if cfg.g.wedge_margin(family.r) < 0.0 {
        return Err(Error::Precondition("test function g is not inside the wedge".into()));
    }
    let t0 = Instant::now();
    let mut results = Vec::new();
    let mut prev: Option<Vec<(f64, f64, f64)>> = None;
    let mut converged = false;
    let disc = DiscRule::new(6, 16, 96);
    for level in 0..3 {
        let panels = 12 << level;
        let xi = Rule::composite(-cfg.xi_range, cfg.xi_range, panels, 16);
        let th = Rule::composite(-cfg.theta_range, cfg.theta_range, panels, 16);
        let mut cur = Vec::new();
        for &eps in &cfg.eps {
            let line = LineData {
                lower: k_line(family, m, n, cfg, &xi, &th, eps)?,
                upper: k_line(family, m, n, cfg, &xi, &th, PI - eps)?,
            };
            let mut il = ZERO;
            let mut iu = ZERO;
            let mut bl = ZERO;
            let mut bu = ZERO;
            for (i, (&x, &w)) in xi.nodes.iter().zip(&xi.weights).enumerate() {
                il += line.lower[i] * h_at(family, &cfg.g, C::new(x, eps), &disc) * w;
                iu += line.upper[i] * h_at(family, &cfg.g, C::new(x, PI - eps), &disc) * w;
                bl += line.lower[i] * h_at(family, &cfg.g, C::new(x, 0.0), &disc) * w;
                bu += line.upper[i] * h_at(family, &cfg.g, C::new(x, PI), &disc) * w;
            }
            let scale = il.norm().max(iu.norm());
            let d = if scale > 0.0 { (il - iu).norm() / scale } else { 0.0 };
            let dbv = if scale > 0.0 { (bl - bu).norm() / scale } else { 0.0 };
            cur.push((d, dbv, scale));
        }
        if let Some(p) = &prev {
            let stable = p.iter().zip(&cur).all(|(a, b)| (a.1 - b.1).abs() <= 1e-3 * b.1.max(1e-12) && (a.0 - b.0).abs() <= 1e-7);
            if stable {
                converged = true;
                results = cur;
                break;
            }
        }
        prev = Some(cur.clone());
        results = cur;
    }
    let d_max = results.iter().map(|r| r.0).fold(0.0, worse);
    let shrink = if results[1].1 > 0.0 { results[0].1 / results[1].1 } else if results[0].1 == 0.0 { f64::INFINITY } else { 0.0 };
    let zero_family = results.iter().all(|r| r.2 == 0.0);
    let passed = converged && d_max <= cfg.tol && (zero_family || shrink >= 3.0);
    Ok(Check::verdict(&format!("contour shift {} (m,n)=({m},{n})", family.name), "wedge-contour-shift", passed, d_max, cfg.tol)
        .detail("eps", cfg.eps.to_vec())
        .detail("line_discrepancy", results.iter().map(|r| r.0).collect::<Vec<_>>())
        .detail("boundary_discrepancy", results.iter().map(|r| r.1).collect::<Vec<_>>())
        .detail("boundary_shrink_factor", if shrink.is_finite() { Some(shrink) } else { None })
        .detail("integral_scale", results.iter().map(|r| r.2).collect::<Vec<_>>())
        .detail("quadrature_converged", converged)
        .timed(t0))
}
