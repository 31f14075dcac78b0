//! Indicatrices, cross norms, γ_α asymptotics, summability and the
//! Paley-Wiener boundary relation for wedge-localized test functions.

use crate::araki::DeltaKernel;
use crate::fock::RapidityGrid;
use crate::numeric::{rng, spectral_norm, Rule};
use crate::report::{worse, Check, CheckReport};
use crate::scattering::ScatteringFunction;
use crate::{Error, Result, C};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::time::Instant;

/// Largest matrix (rows × cols) a cross-norm estimate will build.
pub const CROSS_NORM_CAP: usize = 1 << 20;

// ---------------------------------------------------------------- indicatrix

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IndicatrixKind {
    /// ω(p) = (β/2) log(1+p).
    Log { beta: f64 },
    /// ω(p) = p^α cos(απ/2).
    Power { alpha: f64 },
    /// ω ≡ 0.
    Zero,
    /// ω(p) = p. Not an indicatrix; used as a negative control.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Indicatrix {
    pub kind: IndicatrixKind,
    /// Constants in ω(|z|) ≤ Re ϖ(z) ≤ a ω(|z|) + b, if known.
    pub a_omega: Option<f64>,
    pub b_omega: Option<f64>,
}

impl Indicatrix {
    pub fn omega(&self, p: f64) -> f64 {
        match self.kind {
            IndicatrixKind::Log { beta } => 0.5 * beta * p.ln_1p(),
            IndicatrixKind::Power { alpha } => p.powf(alpha) * (alpha * PI / 2.0).cos(),
            IndicatrixKind::Zero => 0.0,
            IndicatrixKind::Linear => p,
        }
    }

    /// Analytic majorant on the closed upper half plane, principal branches.
    pub fn varpi(&self, z: C) -> C {
        let i = C::i();
        match self.kind {
            IndicatrixKind::Log { beta } => ((i + z).ln() + 1.0) * beta,
            IndicatrixKind::Power { alpha } => (i.ln() * -alpha).exp() * (z + i).powf(alpha),
            IndicatrixKind::Zero => C::new(0.0, 0.0),
            IndicatrixKind::Linear => (z * z + 1.0).sqrt(),
        }
    }

    /// `e^{−ω(E)}` weight.
    pub fn damping(&self, e: f64) -> f64 {
        (-self.omega(e)).exp()
    }

    /// Constants implied by elementary estimates: |z+i| ≤ 1+|z| and
    /// (1+|z|)^α ≤ 1+|z|^α.
    pub fn derived_constants(&self) -> Option<(f64, f64)> {
        match self.kind {
            IndicatrixKind::Log { beta } => Some((2.0, beta)),
            IndicatrixKind::Power { alpha } => Some((1.0 / (alpha * PI / 2.0).cos(), 1.0)),
            IndicatrixKind::Zero => Some((1.0, 0.0)),
            IndicatrixKind::Linear => None,
        }
    }

    /// ∫_0^∞ ω(p)/(1+p²) dp: quadrature on [0, P] plus an analytic tail bound.
    /// Infinite for growth that is not sublinear enough.
    pub fn log_integral(&self) -> f64 {
        let cut: f64 = 1e4;
        // substitute p = t² to resolve the region near 0 and the slow tail
        let head = Rule::composite(0.0, cut.sqrt(), 400, 12)
            .integrate_real(|t| 2.0 * t * self.omega(t * t) / (1.0 + t.powi(4)));
        let tail = match self.kind {
            // ∫_P^∞ log(1+p)/p² ≤ (log(1+P)+1)/P
            IndicatrixKind::Log { beta } => 0.5 * beta * ((1.0 + cut).ln() + 1.0) / cut,
            IndicatrixKind::Power { alpha } => {
                (alpha * PI / 2.0).cos() * cut.powf(alpha - 1.0) / (1.0 - alpha)
            }
            IndicatrixKind::Zero => 0.0,
            IndicatrixKind::Linear => f64::INFINITY,
        };
        head + tail
    }
}

/// Built-in indicatrix families: `log` (β > 0), `power` (0 < α < 1), `zero`,
/// `linear`.
pub fn builtin_indicatrix(kind: &str, param: f64) -> Result<Indicatrix> {
    let kind = match kind {
        "log" => {
            if !(param > 0.0 && param.is_finite()) {
                return Err(Error::Config(format!("log indicatrix needs beta > 0, got {param}")));
            }
            IndicatrixKind::Log { beta: param }
        }
        "power" => {
            if !(param > 0.0 && param < 1.0) {
                return Err(Error::Config(format!("power indicatrix needs 0 < alpha < 1, got {param}")));
            }
            IndicatrixKind::Power { alpha: param }
        }
        "zero" => IndicatrixKind::Zero,
        "linear" => IndicatrixKind::Linear,
        other => return Err(Error::Config(format!("unknown indicatrix '{other}'"))),
    };
    Ok(Indicatrix { kind, a_omega: None, b_omega: None })
}

/// Parses `log:beta=2`, `power:alpha=0.5`, `zero`, `linear`.
pub fn parse_indicatrix(spec: &str) -> Result<Indicatrix> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut param = f64::NAN;
    for kv in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad indicatrix parameter '{kv}'")))?;
        match (name, k.trim()) {
            ("log", "beta") | ("power", "alpha") => {
                param = v.trim().parse().map_err(|_| Error::Config(format!("bad number '{v}'")))?
            }
            _ => return Err(Error::Config(format!("unknown parameter '{k}' for '{name}'"))),
        }
    }
    builtin_indicatrix(name, param)
}

fn uhp_sample<R: Rng>(r: &mut R) -> C {
    let rad = 10f64.powf(r.random_range(-3.0..6.0));
    let phi = r.random_range(0.0..PI);
    C::from_polar(rad, phi)
}

/// Items (ω1)–(ω5). (ω5) reports fitted (a, b) and checks them on a holdout
/// sample; the derived constants, when known, are checked as well.
pub fn check_indicatrix(ind: &Indicatrix, samples: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new("indicatrix");
    let name = format!("{:?}", ind.kind);
    let mut r = rng(seed, 0x1d1);
    let t0 = Instant::now();

    let mut mono = 0.0_f64;
    let mut sub = 0.0_f64;
    let mut sym = 0.0_f64;
    for _ in 0..samples {
        let p = 10f64.powf(r.random_range(-3.0..6.0));
        let q = 10f64.powf(r.random_range(-3.0..6.0));
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        mono = worse(mono, (ind.omega(lo) - ind.omega(hi)).max(0.0));
        sub = worse(sub, (ind.omega(p + q) - ind.omega(p) - ind.omega(q)).max(0.0) / (1.0 + ind.omega(p + q)));
        let a = ind.varpi(C::new(p, 0.0)).re;
        let b = ind.varpi(C::new(-p, 0.0)).re;
        sym = worse(sym, (a - b).abs() / (1.0 + a.abs()));
    }
    rep.push(Check::residual(&format!("omega1 monotone {name}"), "indicatrix-monotone", mono, 1e-12).samples(samples as u64).seed(seed));
    rep.push(Check::residual(&format!("omega2 sublinear {name}"), "indicatrix-sublinear", sub, 1e-12).samples(samples as u64).seed(seed));

    let li = ind.log_integral();
    rep.push(
        Check::verdict(&format!("omega3 growth integral {name}"), "indicatrix-growth", li.is_finite(), li, f64::INFINITY)
            .detail("integral", if li.is_finite() { Some(li) } else { None })
            .detail("diverges", !li.is_finite()),
    );
    rep.push(Check::residual(&format!("omega4 reflection symmetry {name}"), "indicatrix-symmetric", sym, 1e-12).samples(samples as u64).seed(seed));

    // (ω5): training sample fixes (a, b), holdout checks them
    let train: Vec<C> = (0..samples).map(|_| uhp_sample(&mut r)).collect();
    let hold: Vec<C> = (0..samples).map(|_| uhp_sample(&mut r)).collect();
    let lower = |z: &C| {
        let w = ind.omega(z.norm());
        (w - ind.varpi(*z).re).max(0.0) / (1.0 + w.abs())
    };
    let low = train.iter().chain(&hold).map(lower).fold(0.0, worse);
    let (a_fit, b_fit) = fit_upper(ind, &train);
    let excess = |a: f64, b: f64| {
        hold.iter()
            .map(|z| {
                let w = ind.omega(z.norm());
                (ind.varpi(*z).re - a * w - b).max(0.0) / (1.0 + w.abs())
            })
            .fold(0.0, worse)
    };
    let up = excess(a_fit, b_fit);
    let mut c = Check::residual(&format!("omega5 majorant {name}"), "indicatrix-analytic-majorant", worse(low, up), 1e-9)
        .samples(2 * samples as u64)
        .seed(seed)
        .detail("a_fit", a_fit)
        .detail("b_fit", b_fit)
        .detail("lower_violation", low)
        .detail("upper_violation_holdout", up);
    if let Some((a, b)) = ind.a_omega.zip(ind.b_omega).or(ind.derived_constants()) {
        c = c.detail("a_derived", a).detail("b_derived", b).detail("upper_violation_derived", excess(a, b));
    }
    rep.push(c.timed(t0));
    rep
}

/// Slope from least squares on the large-|z| half of the sample, then the
/// smallest b on the training sample, widened by 2% (plus 1e−9) for the
/// holdout.
fn fit_upper(ind: &Indicatrix, train: &[C]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = train.iter().map(|z| (ind.omega(z.norm()), ind.varpi(*z).re)).collect();
    let mut big: Vec<&(f64, f64)> = pts.iter().filter(|(w, _)| *w > 0.0).collect();
    big.sort_by(|a, b| a.0.total_cmp(&b.0));
    let big = &big[big.len() / 2..];
    let a = if big.is_empty() {
        1.0
    } else {
        let n = big.len() as f64;
        let (mx, my) = big.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / n, y + p.1 / n));
        let (sxy, sxx) = big.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
        // the upper envelope must not grow faster than the fitted line
        let slope = if sxx > 0.0 { sxy / sxx } else { 1.0 };
        let env = big.iter().map(|p| p.1 / p.0).fold(0.0, f64::max);
        slope.max(env.min(slope * 1.05)).max(1.0)
    };
    let b = pts.iter().map(|(w, v)| v - a * w).fold(0.0, f64::max);
    (a, b * 1.02 + 1e-9)
}

// ---------------------------------------------------------------- γ_α

/// `log γ_α(k)`, with γ_α(0) = 1 and γ_α(k) = Γ(k/2α)/(α Γ(k/2)).
pub fn ln_gamma_alpha(alpha: f64, k: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("γ_α needs 0 < α < 1, got {alpha}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let k = k as f64;
    Ok(ln_gamma(k / (2.0 * alpha)) - alpha.ln() - ln_gamma(k / 2.0))
}

/// γ_α(k); errors on overflow (use [`ln_gamma_alpha`]).
pub fn gamma_alpha(alpha: f64, k: usize) -> Result<f64> {
    let v = ln_gamma_alpha(alpha, k)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Resource(format!("γ_{alpha}({k}) overflows; use the log value")))
    }
}

/// Large-m asymptotic form of log(γ_α(m)/m!).
pub fn stirling_ln_gamma_over_factorial(alpha: f64, m: usize) -> f64 {
    let m = m as f64;
    let base = 2f64.sqrt().ln() + 1.5 - (2.0 * alpha * std::f64::consts::E).ln() / (2.0 * alpha);
    -0.5 * (2.0 * PI * m * alpha).ln() + m * base + 0.5 * m * (1.0 / alpha - 3.0) * m.ln()
}

// ---------------------------------------------------------------- summability

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Marginal,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummabilityResult {
    pub alpha: f64,
    pub log_terms: Vec<f64>,
    /// log(a_{m+1}/a_m).
    pub log_ratios: Vec<f64>,
    /// (1/α − 3)/2.
    pub stirling_exponent: f64,
    /// Sign of the exponent decided as sign(1 − 3α).
    pub exponent_sign: i32,
    /// Fitted slope of log-ratio against log m over the tail window.
    pub tail_slope: f64,
    pub verdict: SeriesVerdict,
}

/// Ratio-test verdict from the tail half of a log-term sequence.
/// Returns the verdict and the fitted slope of the log-ratios against log m.
pub fn ratio_verdict(log_terms: &[f64]) -> (SeriesVerdict, f64) {
    let last_finite = log_terms.iter().rposition(|t| t.is_finite());
    let Some(last) = last_finite else {
        return (SeriesVerdict::Convergent, 0.0);
    };
    if last + 4 < log_terms.len() {
        // all later terms vanish
        return (SeriesVerdict::Convergent, f64::NEG_INFINITY);
    }
    let start = log_terms.len() / 2;
    let pts: Vec<(f64, f64)> = (start.max(1)..log_terms.len() - 1)
        .map(|m| ((m as f64).ln(), log_terms[m + 1] - log_terms[m]))
        .collect();
    if pts.len() < 3 {
        return (SeriesVerdict::Marginal, 0.0);
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / n, y + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    let slope = sxy / sxx;
    let last_ratio = pts.last().unwrap().1;
    let verdict = if slope < -0.05 {
        SeriesVerdict::Convergent
    } else if slope > 0.05 {
        SeriesVerdict::Divergent
    } else if last_ratio < -0.01 {
        SeriesVerdict::Convergent
    } else if last_ratio > 0.01 {
        SeriesVerdict::Divergent
    } else {
        SeriesVerdict::Marginal
    };
    (verdict, slope)
}

/// Terms a_m = c (√2 d)^m (γ_α(m)/m!)^{1/2}, m = 0..=m_max, in log space.
/// The verdict is Marginal when the power-law part of the ratios is flat.
pub fn summability_test(alpha: f64, c: f64, d: f64, m_max: usize) -> Result<SummabilityResult> {
    if m_max > 400 {
        return Err(Error::Precondition(format!("m_max = {m_max} exceeds 400")));
    }
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::Precondition("c and d must be positive".into()));
    }
    let mut log_terms = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let lg = ln_gamma_alpha(alpha, m)?;
        log_terms.push(c.ln() + m as f64 * (2f64.sqrt() * d).ln() + 0.5 * (lg - ln_gamma(m as f64 + 1.0)));
    }
    let log_ratios: Vec<f64> = log_terms.windows(2).map(|w| w[1] - w[0]).collect();
    let (rv, tail_slope) = ratio_verdict(&log_terms);
    let x = 1.0 - 3.0 * alpha;
    let exponent_sign = if x.abs() < 1e-12 { 0 } else if x > 0.0 { 1 } else { -1 };
    let verdict = if tail_slope.abs() <= 0.05 { SeriesVerdict::Marginal } else { rv };
    Ok(SummabilityResult {
        alpha,
        log_terms,
        log_ratios,
        stirling_exponent: (1.0 / alpha - 3.0) / 2.0,
        exponent_sign,
        tail_slope,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosabilityResult {
    /// log of the terms 2^{m/2}/√m! (‖f_{m,n}‖ + ‖f_{n,m}‖) at fixed n.
    pub single_log_terms: Vec<f64>,
    pub single_partial_sums: Vec<f64>,
    pub single: SeriesVerdict,
    /// Row sums over n of 2^{(m+n)/2}/√(m!n!) ‖f_{m,n}‖, log space.
    pub double_log_terms: Vec<f64>,
    pub double: SeriesVerdict,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Summability of coefficient norms. `ln_norm(m, n)` returns log‖f_{m,n}‖
/// (−∞ for a vanishing coefficient).
pub fn closability_criterion(ln_norm: &dyn Fn(usize, usize) -> f64, n_fixed: usize, m_max: usize) -> ClosabilityResult {
    let w = |m: usize| 0.5 * m as f64 * 2f64.ln() - 0.5 * ln_gamma(m as f64 + 1.0);
    let single_log_terms: Vec<f64> =
        (0..=m_max).map(|m| w(m) + log_add(ln_norm(m, n_fixed), ln_norm(n_fixed, m))).collect();
    let mut acc = f64::NEG_INFINITY;
    let single_partial_sums = single_log_terms
        .iter()
        .map(|&t| {
            acc = log_add(acc, t);
            acc.exp()
        })
        .collect();
    let double_log_terms: Vec<f64> = (0..=m_max)
        .map(|m| (0..=m_max).map(|n| w(m) + w(n) + ln_norm(m, n)).fold(f64::NEG_INFINITY, log_add))
        .collect();
    ClosabilityResult {
        single: ratio_verdict(&single_log_terms).0,
        single_partial_sums,
        double: ratio_verdict(&double_log_terms).0,
        single_log_terms,
        double_log_terms,
    }
}

// ---------------------------------------------------------------- cross norms

/// Kernel handed to [`cross_norm_estimate`].
pub enum KernelSource<'a> {
    /// Values on `grid^{m+n}`, θ digits first, row-major.
    Grid(&'a [C]),
    /// A function of (θ, η).
    Smooth(&'a (dyn Fn(&[f64], &[f64]) -> C + Sync)),
    /// A delta kernel, materialized with Kronecker/Δ deltas.
    Delta(&'a DeltaKernel, &'a ScatteringFunction),
}

fn energy(grid: &RapidityGrid, digits: usize, idx: usize) -> f64 {
    let n = grid.n_points;
    let mut e = 0.0;
    let mut i = idx;
    for _ in 0..digits {
        e += grid.point(i % n).cosh();
        i /= n;
    }
    e
}

/// Discretized ‖f‖_{m×n} (ω = None) or ‖f‖^ω_{m×n}: the largest singular
/// value of the kernel matrix with weights Δ^{m/2}, Δ^{n/2}.
pub fn cross_norm_estimate(kernel: KernelSource, m: usize, n: usize, grid: &RapidityGrid, omega: Option<&Indicatrix>) -> Result<f64> {
    let npts = grid.n_points;
    let rows = npts.pow(m as u32);
    let cols = npts.pow(n as u32);
    if rows.saturating_mul(cols) > CROSS_NORM_CAP {
        return Err(Error::Resource(format!(
            "cross norm needs a {rows}×{cols} matrix (cap {CROSS_NORM_CAP}); use a smaller grid"
        )));
    }
    let values: Vec<C> = match kernel {
        KernelSource::Grid(v) => {
            if v.len() != rows * cols {
                return Err(Error::Precondition(format!("kernel has {} values, expected {}", v.len(), rows * cols)));
            }
            v.to_vec()
        }
        KernelSource::Delta(k, s) => {
            if (k.m, k.n) != (m, n) {
                return Err(Error::Precondition("kernel arity mismatch".into()));
            }
            k.materialize(grid, s)?
        }
        KernelSource::Smooth(f) => {
            let pts = grid.points();
            (0..rows * cols)
                .into_par_iter()
                .map(|idx| {
                    let mut th = vec![0.0; m];
                    let mut et = vec![0.0; n];
                    let mut i = idx;
                    for j in (0..n).rev() {
                        et[j] = pts[i % npts];
                        i /= npts;
                    }
                    for j in (0..m).rev() {
                        th[j] = pts[i % npts];
                        i /= npts;
                    }
                    f(&th, &et)
                })
                .collect()
        }
    };
    let w = grid.delta().powf(0.5 * (m + n) as f64);
    let base: Vec<C> = values.iter().map(|v| v * w).collect();
    let Some(ind) = omega else {
        return Ok(spectral_norm(rows, cols, &base));
    };
    let mut left = base.clone();
    let mut right = base;
    for r in 0..rows {
        let dl = ind.damping(energy(grid, m, r));
        for c in 0..cols {
            left[r * cols + c] *= dl;
            right[r * cols + c] *= ind.damping(energy(grid, n, c));
        }
    }
    Ok(0.5 * (spectral_norm(rows, cols, &left) + spectral_norm(rows, cols, &right)))
}

/// Lower estimate of the full cross norm ‖f‖_× of a k-variable grid kernel,
/// by alternating maximization over product test functions.
pub fn full_cross_norm_lower(values: &[C], k: usize, grid: &RapidityGrid, sweeps: usize) -> f64 {
    let n = grid.n_points;
    let d = grid.delta();
    let mut g: Vec<Vec<C>> = vec![vec![C::new(1.0 / (n as f64 * d).sqrt(), 0.0); n]; k];
    let mut best = 0.0_f64;
    for _ in 0..sweeps {
        for j in 0..k {
            // contract all variables except j
            let mut acc = vec![C::new(0.0, 0.0); n];
            for (idx, v) in values.iter().enumerate() {
                let mut w = *v;
                let mut i = idx;
                let mut dj = 0;
                for var in (0..k).rev() {
                    let digit = i % n;
                    i /= n;
                    if var == j {
                        dj = digit;
                    } else {
                        w *= g[var][digit] * d;
                    }
                }
                acc[dj] += w;
            }
            let norm = (acc.iter().map(|z| z.norm_sqr()).sum::<f64>() * d).sqrt();
            best = best.max(norm);
            if norm > 0.0 {
                g[j] = acc.iter().map(|z| z.conj() / norm).collect();
            }
        }
    }
    best
}

// ---------------------------------------------------------------- test functions

/// Fourier profile g̃ of a one-dimensional smearing function.
#[derive(Debug, Clone)]
pub enum Profile {
    /// e^{−(w p)²/2}. Not compactly supported.
    Gaussian { width: f64 },
    /// ∫ b(t/r) e^{ipt} dt / ∫ b, b the standard bump on (−1, 1). Trapezoid
    /// weights on equispaced nodes, which converge faster than any power for
    /// a flat-ended integrand and allow a geometric recurrence in e^{ipt}.
    Bump { radius: f64, weights: Vec<f64> },
}

/// The standard smooth bump `exp(−1/(1−y²))` on (−1, 1).
pub fn bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

const BUMP_NODES: usize = 1024;

fn bump_node(k: usize) -> f64 {
    -1.0 + 2.0 * k as f64 / BUMP_NODES as f64
}

impl Profile {
    pub fn gaussian(width: f64) -> Self {
        Profile::Gaussian { width }
    }

    pub fn bump(radius: f64) -> Self {
        let mut weights: Vec<f64> = (0..=BUMP_NODES).map(|k| bump(bump_node(k))).collect();
        let norm: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= norm;
        }
        Profile::Bump { radius, weights }
    }

    /// Support radius (declared width for the Gaussian surrogate).
    pub fn radius(&self) -> f64 {
        match self {
            Profile::Gaussian { width } => *width,
            Profile::Bump { radius, .. } => *radius,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self, Profile::Bump { .. })
    }

    pub fn eval(&self, p: C) -> C {
        match self {
            Profile::Gaussian { width } => (-(p * *width) * (p * *width) * 0.5).exp(),
            Profile::Bump { radius, weights } => {
                let mut x = (-C::i() * p * *radius).exp();
                let step = (C::i() * p * (*radius * 2.0 / BUMP_NODES as f64)).exp();
                let mut acc = C::new(0.0, 0.0);
                for &w in weights {
                    acc += x * w;
                    x *= step;
                }
                acc
            }
        }
    }
}

/// Two-dimensional test function for the Fourier components
/// g^±(ζ) = (1/2π) ∫ g(x) e^{±ip(ζ)·x} d²x, with p·x = p⁰x⁰ − p¹x¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunction2D {
    /// b(|x − c|/ρ).
    Bump { center: [f64; 2], radius: f64 },
    /// exp(−|x − c|²/2σ²), Euclidean norm.
    Gaussian { center: [f64; 2], sigma: f64 },
}

/// Polar product rule over the unit disc: Gauss-Legendre in the radius,
/// trapezoid in the angle.
#[derive(Debug, Clone)]
pub struct DiscRule {
    pub radial: Rule,
    pub angles: usize,
}

impl DiscRule {
    pub fn new(panels: usize, order: usize, angles: usize) -> Self {
        DiscRule { radial: Rule::composite(0.0, 1.0, panels, order), angles }
    }
}

fn p_of(mu: f64, z: C) -> [C; 2] {
    [z.cosh() * mu, z.sinh() * mu]
}

impl TestFunction2D {
    /// Distance of the support (or 8σ ball) from the boundary of the shifted
    /// right wedge {x¹ > |x⁰| + r}; positive when inside.
    pub fn wedge_margin(&self, r: f64) -> f64 {
        let (c, rad) = match *self {
            TestFunction2D::Bump { center, radius } => (center, radius),
            TestFunction2D::Gaussian { center, sigma } => (center, 8.0 * sigma),
        };
        (c[1] - c[0].abs() - r) / 2f64.sqrt() - rad
    }

    /// `d^ℓ/dζ^ℓ g^±(ζ)` for ℓ ∈ {0, 1}.
    pub fn fourier(&self, sign: f64, z: C, ell: usize, mu: f64, rule: &DiscRule) -> C {
        let p = p_of(mu, z);
        let dp = [z.sinh() * mu, z.cosh() * mu];
        match *self {
            TestFunction2D::Gaussian { center, sigma } => {
                let s2 = sigma * sigma;
                let pc = p[0] * center[0] - p[1] * center[1];
                let q2 = p[0] * p[0] + p[1] * p[1];
                let v = (C::i() * sign * pc - q2 * s2 * 0.5).exp() * s2;
                match ell {
                    0 => v,
                    _ => {
                        let dpc = dp[0] * center[0] - dp[1] * center[1];
                        let dq2 = (p[0] * dp[0] + p[1] * dp[1]) * 2.0;
                        v * (C::i() * sign * dpc - dq2 * s2 * 0.5)
                    }
                }
            }
            TestFunction2D::Bump { center, radius } => {
                let mut acc = C::new(0.0, 0.0);
                let dphi = 2.0 * PI / rule.angles as f64;
                for (&s, &ws) in rule.radial.nodes.iter().zip(&rule.radial.weights) {
                    let b = bump(s) * s * ws;
                    if b == 0.0 {
                        continue;
                    }
                    for k in 0..rule.angles {
                        let (sn, cs) = (k as f64 * dphi).sin_cos();
                        let x0 = center[0] + radius * s * cs;
                        let x1 = center[1] + radius * s * sn;
                        let e = (C::i() * sign * (p[0] * x0 - p[1] * x1)).exp();
                        let f = if ell == 0 { e } else { e * C::i() * sign * (dp[0] * x0 - dp[1] * x1) };
                        acc += f * b;
                    }
                }
                acc * (radius * radius * dphi / (2.0 * PI))
            }
        }
    }
}

/// Configuration for [`paley_wiener_check`].
#[derive(Debug, Clone)]
pub struct PaleyWienerConfig {
    pub mu: f64,
    pub r: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for PaleyWienerConfig {
    fn default() -> Self {
        PaleyWienerConfig { mu: 1.0, r: 1.0, theta_min: -2.0, theta_max: 2.0, theta_points: 64, tol: 1e-8, seed: 7 }
    }
}

/// (i) f⁻(θ+iπ) = f⁺(θ), each side from its own quadrature rule;
/// (ii) the strip bound |d^ℓ f⁻(θ+iλ)| ≤ c (cosh θ)^ℓ e^{−μ r cosh θ sin λ}
/// with c fitted on a training sample (safety factor 2) and checked on a
/// holdout sample, ℓ ∈ {0, 1};
/// (iii) translating the support by Δr in x¹ rescales |f⁻(θ+iλ)| by exactly
/// e^{−μ Δr cosh θ sin λ}.
pub fn paley_wiener_check(f: &TestFunction2D, cfg: &PaleyWienerConfig) -> Result<CheckReport> {
    let margin = f.wedge_margin(cfg.r);
    if margin < 0.0 {
        return Err(Error::Precondition(format!("test function leaves the wedge x¹ > |x⁰| + {} (margin {margin})", cfg.r)));
    }
    let mut rep = CheckReport::new("paley-wiener");
    let t0 = Instant::now();
    let rule_a = DiscRule::new(6, 16, 96);
    let rule_b = DiscRule::new(5, 20, 110);
    let thetas: Vec<f64> = (0..cfg.theta_points)
        .map(|i| cfg.theta_min + (cfg.theta_max - cfg.theta_min) * i as f64 / (cfg.theta_points - 1).max(1) as f64)
        .collect();
    let pairs: Vec<(C, C)> = thetas
        .par_iter()
        .map(|&th| {
            let plus = f.fourier(1.0, C::new(th, 0.0), 0, cfg.mu, &rule_a);
            let minus = f.fourier(-1.0, C::new(th, PI), 0, cfg.mu, &rule_b);
            (plus, minus)
        })
        .collect();
    let scale = pairs.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    let resid = pairs.iter().map(|(a, b)| (a - b).norm()).fold(0.0, worse);
    let rel = if scale > 0.0 { resid / scale } else { resid };
    rep.push(
        Check::residual("boundary relation f-(theta+i pi) = f+(theta)", "wedge-fourier-boundary", rel, cfg.tol)
            .samples(thetas.len() as u64)
            .detail("max_abs_f_plus", scale)
            .timed(t0),
    );

    // strip bound
    let t1 = Instant::now();
    let mut r = rng(cfg.seed, 0x9a1e);
    let draw = |r: &mut rand_chacha::ChaCha8Rng| (r.random_range(-3.0..3.0), r.random_range(0.0..PI));
    let train: Vec<(f64, f64)> = (0..200).map(|_| draw(&mut r)).collect();
    let hold: Vec<(f64, f64)> = (0..200).map(|_| draw(&mut r)).collect();
    for ell in 0..=1usize {
        let ratio = |&(th, lam): &(f64, f64)| {
            let v = f.fourier(-1.0, C::new(th, lam), ell, cfg.mu, &rule_a).norm();
            v / (th.cosh().powi(ell as i32) * (-cfg.mu * cfg.r * th.cosh() * lam.sin()).exp())
        };
        let tr: Vec<f64> = train.par_iter().map(ratio).collect();
        let ho: Vec<f64> = hold.par_iter().map(ratio).collect();
        let c = 2.0 * tr.iter().cloned().fold(0.0, f64::max);
        let worst = ho.iter().cloned().fold(0.0, f64::max);
        rep.push(
            Check::verdict(&format!("strip bound l={ell}"), "wedge-fourier-strip-bound", worst <= c, worst, c)
                .samples(400)
                .seed(cfg.seed)
                .detail("fitted_c", c)
                .timed(t1),
        );
    }

    // damping with the distance from the wedge edge
    let t2 = Instant::now();
    let shift = 0.5;
    let moved = match *f {
        TestFunction2D::Bump { center, radius } => TestFunction2D::Bump { center: [center[0], center[1] + shift], radius },
        TestFunction2D::Gaussian { center, sigma } => TestFunction2D::Gaussian { center: [center[0], center[1] + shift], sigma },
    };
    let th = 2.0;
    let lams: Vec<f64> = (1..16).map(|i| PI * i as f64 / 16.0).collect();
    let mut dev = 0.0_f64;
    let mut ratios = Vec::new();
    for &lam in &lams {
        let z = C::new(th, lam);
        let a = f.fourier(-1.0, z, 0, cfg.mu, &rule_a).norm();
        let b = moved.fourier(-1.0, z, 0, cfg.mu, &rule_a).norm();
        let got = (b / a).ln();
        let want = -cfg.mu * shift * th.cosh() * lam.sin();
        ratios.push(got);
        dev = worse(dev, (got - want).abs());
    }
    rep.push(
        Check::residual("damping by r sin(lambda)", "wedge-fourier-damping", dev, 1e-8)
            .samples(lams.len() as u64)
            .detail("log_ratios", ratios)
            .timed(t2),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let l = builtin_indicatrix("log", 2.0).unwrap();
        assert_eq!(l.omega(0.0), 0.0);
        let p = builtin_indicatrix("power", 0.5).unwrap();
        assert!((p.omega(1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(builtin_indicatrix("power", 1.0).is_err());
        assert!(builtin_indicatrix("log", -1.0).is_err());
        assert_eq!(parse_indicatrix("power:alpha=0.3").unwrap().kind, IndicatrixKind::Power { alpha: 0.3 });
        assert_eq!(parse_indicatrix("zero").unwrap().omega(5.0), 0.0);
    }

    #[test]
    fn indicatrix_items() {
        for ind in [
            builtin_indicatrix("log", 2.0).unwrap(),
            builtin_indicatrix("log", 0.5).unwrap(),
            builtin_indicatrix("power", 0.5).unwrap(),
            builtin_indicatrix("power", 0.9).unwrap(),
            builtin_indicatrix("zero", 0.0).unwrap(),
        ] {
            let rep = check_indicatrix(&ind, 2000, 1);
            for c in &rep.checks {
                assert!(c.passed, "{c:?}");
            }
            if let Some((a, b)) = ind.derived_constants() {
                let last = rep.checks.last().unwrap();
                assert_eq!(last.details["upper_violation_derived"], serde_json::json!(0.0), "{a} {b}");
            }
        }
        let lin = check_indicatrix(&builtin_indicatrix("linear", 0.0).unwrap(), 500, 1);
        let w3 = lin.checks.iter().find(|c| c.name.starts_with("omega3")).unwrap();
        assert!(!w3.passed);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_alpha(0.3, 0).unwrap(), 1.0);
        assert!((gamma_alpha(0.5, 2).unwrap() - 2.0).abs() < 1e-12);
        assert!((gamma_alpha(0.5, 4).unwrap() - 12.0).abs() < 1e-10);
        // Γ by quadrature: Γ(4) = ∫ t³ e^{−t}
        let g4 = Rule::composite(0.0, 60.0, 60, 12).integrate_real(|t| t.powi(3) * (-t).exp());
        assert!((g4 - 6.0).abs() < 1e-10);
        assert!(gamma_alpha(0.2, 400).is_err());
        assert!(ln_gamma_alpha(0.2, 400).unwrap().is_finite());
    }

    #[test]
    fn stirling_form() {
        for alpha in [0.25, 0.4, 0.7] {
            for m in [50usize, 100, 200] {
                let exact = ln_gamma_alpha(alpha, m).unwrap() - ln_gamma(m as f64 + 1.0);
                let approx = stirling_ln_gamma_over_factorial(alpha, m);
                assert!(((exact - approx) / exact).abs() < 0.01, "{alpha} {m} {exact} {approx}");
            }
        }
    }

    #[test]
    fn summability_dichotomy() {
        let a = summability_test(0.4, 1.0, 1.0, 200).unwrap();
        assert_eq!(a.verdict, SeriesVerdict::Convergent);
        assert_eq!(a.exponent_sign, -1);
        let b = summability_test(0.25, 1.0, 1.0, 200).unwrap();
        assert_eq!(b.verdict, SeriesVerdict::Divergent);
        assert_eq!(b.exponent_sign, 1);
        let c = summability_test(1.0 / 3.0, 1.0, 1.0, 200).unwrap();
        assert_eq!(c.exponent_sign, 0);
        assert_eq!(c.verdict, SeriesVerdict::Marginal);
        assert!(summability_test(0.4, 1.0, 1.0, 401).is_err());
    }

    #[test]
    fn closability_examples() {
        let finite = closability_criterion(&|m, n| if m + n <= 3 { 0.0 } else { f64::NEG_INFINITY }, 1, 60);
        assert_eq!(finite.single, SeriesVerdict::Convergent);
        assert_eq!(finite.double, SeriesVerdict::Convergent);
        let x: f64 = 3.0;
        let expo = closability_criterion(&|m, n| (m + n) as f64 * x.ln(), 2, 150);
        assert_eq!(expo.single, SeriesVerdict::Convergent);
        assert_eq!(expo.double, SeriesVerdict::Convergent);
        for (alpha, want) in [(0.4, SeriesVerdict::Convergent), (0.25, SeriesVerdict::Divergent)] {
            let st = closability_criterion(&|m, _| 0.5 * ln_gamma_alpha(alpha, m).unwrap(), 0, 200);
            assert_eq!(st.single, want, "{alpha}");
        }
    }

    #[test]
    fn cross_norm_calibration() {
        use crate::araki::{DeltaKernel, DeltaTerm};
        for npts in [16, 32] {
            let grid = RapidityGrid::new(-3.0, 3.0, npts, 1.0).unwrap();
            let delta = DeltaKernel {
                m: 1,
                n: 1,
                terms: vec![DeltaTerm { coeff: C::new(1.0, 0.0), deltas: vec![(0, 0)], factors: vec![] }],
                kernels: vec![],
            };
            let s = ScatteringFunction::free();
            let v = cross_norm_estimate(KernelSource::Delta(&delta, &s), 1, 1, &grid, None).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{v}");
            let g = |t: f64| C::new((-t * t).exp(), 0.3 * t);
            let h = |t: f64| C::new(1.0 / (1.0 + t * t), 0.0);
            let f = move |a: &[f64], b: &[f64]| g(a[0]) * h(b[0]);
            let nv = cross_norm_estimate(KernelSource::Smooth(&f), 1, 1, &grid, None).unwrap();
            let gv: Vec<C> = grid.points().iter().map(|&t| g(t)).collect();
            let hv: Vec<C> = grid.points().iter().map(|&t| h(t)).collect();
            assert!((nv - grid.l2(&gv) * grid.l2(&hv)).abs() < 1e-10);
        }
    }

    #[test]
    fn cross_norm_adjoint_and_inequalities() {
        let grid = RapidityGrid::new(-2.0, 2.0, 10, 1.0).unwrap();
        let k = |a: &[f64], b: &[f64]| C::new((a[0] - b[0]).cos(), a[1] * b[0]).exp() / (1.0 + a[0] * a[0]);
        let adj = |a: &[f64], b: &[f64]| k(&[b[1], b[0]], a).conj();
        let n1 = cross_norm_estimate(KernelSource::Smooth(&k), 2, 1, &grid, None).unwrap();
        let n2 = cross_norm_estimate(KernelSource::Smooth(&adj), 1, 2, &grid, None).unwrap();
        assert!((n1 - n2).abs() < 1e-10 * n1);
        let om = builtin_indicatrix("log", 1.0).unwrap();
        let nw = cross_norm_estimate(KernelSource::Smooth(&k), 2, 1, &grid, Some(&om)).unwrap();
        // bounded factors are absorbed
        let fl = |a: &[f64], b: &[f64]| k(a, b) * C::from_polar(0.5, a[0]);
        let nl = cross_norm_estimate(KernelSource::Smooth(&fl), 2, 1, &grid, Some(&om)).unwrap();
        assert!(nl <= 0.5 * nw + 1e-12);
        // product weighting is dominated by the ω-norm
        let pts = grid.points();
        let mut vals = Vec::new();
        for &a in &pts {
            for &b in &pts {
                for &c in &pts {
                    let w = om.damping(a.cosh()) * om.damping(b.cosh()) * om.damping(c.cosh());
                    vals.push(k(&[a, b], &[c]) * w);
                }
            }
        }
        let full = full_cross_norm_lower(&vals, 3, &grid, 20);
        assert!(full <= nw * (1.0 + 1e-12), "{full} {nw}");
    }

    #[test]
    fn paley_wiener() {
        let cfg = PaleyWienerConfig::default();
        for f in [
            TestFunction2D::Bump { center: [0.0, 2.5], radius: 0.6 },
            TestFunction2D::Bump { center: [0.3, 3.0], radius: 0.8 },
        ] {
            let rep = paley_wiener_check(&f, &cfg).unwrap();
            for c in &rep.checks {
                assert!(c.passed, "{c:?}");
            }
        }
        let outside = TestFunction2D::Bump { center: [0.0, 1.0], radius: 0.6 };
        assert!(paley_wiener_check(&outside, &cfg).is_err());
    }

    #[test]
    fn gaussian_fourier_matches_quadrature() {
        let g = TestFunction2D::Gaussian { center: [0.2, 3.0], sigma: 0.3 };
        // disc rule over a large radius approximates the Gaussian integral
        let z = C::new(0.4, 0.3);
        let exact = g.fourier(-1.0, z, 0, 1.0, &DiscRule::new(1, 1, 1));
        let rule = Rule::composite(-3.0, 3.0, 40, 12);
        let p = p_of(1.0, z);
        let mut acc = C::new(0.0, 0.0);
        for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
            for (&b, &wb) in rule.nodes.iter().zip(&rule.weights) {
                let x = [0.2 + a, 3.0 + b];
                let gv = (-(a * a + b * b) / (2.0 * 0.09)).exp();
                acc += (C::i() * -1.0 * (p[0] * x[0] - p[1] * x[1])).exp() * gv * wa * wb;
            }
        }
        acc /= 2.0 * PI;
        assert!((acc - exact).norm() < 1e-12 * exact.norm().max(1e-3), "{acc} {exact}");
        let h = 1e-5;
        let d = (g.fourier(-1.0, z + h, 0, 1.0, &DiscRule::new(1, 1, 1)) - g.fourier(-1.0, z - h, 0, 1.0, &DiscRule::new(1, 1, 1))) / (2.0 * h);
        let dd = g.fourier(-1.0, z, 1, 1.0, &DiscRule::new(1, 1, 1));
        assert!((d - dd).norm() < 1e-7 * dd.norm().max(1.0));
    }

    #[test]
    fn profiles() {
        let b = Profile::bump(1.0);
        assert!((b.eval(C::new(0.0, 0.0)) - 1.0).norm() < 1e-13);
        // exponential type: |g̃(iy)| ≤ e^{r|y|}
        for y in [1.0, 5.0, 20.0] {
            assert!(b.eval(C::new(0.0, y)).norm() <= (y).exp());
        }
        let rule = Rule::composite(-1.0, 1.0, 64, 16);
        let norm = rule.integrate_real(bump);
        for p in [C::new(0.3, 0.0), C::new(12.0, -3.0), C::new(-40.0, 8.0), C::new(90.0, 0.5)] {
            let want = rule.integrate(|t| (C::i() * p * t).exp() * bump(t)) / norm;
            assert!((b.eval(p) - want).norm() < 1e-12 * p.im.abs().exp(), "{p}");
        }
        let g = Profile::gaussian(0.5);
        assert!((g.eval(C::new(2.0, 0.0)) - (-0.5f64).exp()).norm() < 1e-15);
    }
}
