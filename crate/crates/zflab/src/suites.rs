//! Named verification suites built from the module checkers.
//!
//! Each suite is a pure function of the [`Config`]: seeds are derived from
//! `config.seed`, so a rerun reproduces every residual bit for bit.
//! Resource and accuracy failures inside a suite become failing checks;
//! configuration and precondition errors abort the run.

use crate::analysis::{
    check_indicatrix, cross_norm_estimate, paley_wiener_check, summability_test, KernelSource, PaleyWienerConfig, SeriesVerdict,
    TestFunction2D,
};
use crate::araki::{self, kernels, Battery, DeltaKernel, DeltaTerm, OperatorExpansion};
use crate::combinatorics::{check_composition_law, check_contraction_counts, check_rc_collapse};
use crate::config::Config;
use crate::fock::{check_primed_commutators, check_zf_relations, FockSpace, RapidityGrid};
use crate::formfactors::{
    check_logderiv, check_ms_conditions, check_tm_residues, family_buchholz_summers, family_schroer_truong, sample_tm_bound,
    verify_conditions_f, verify_contour_shift, Contour, ContourShiftConfig, FConfig, DEFAULT_DISTRIBUTIONS,
};
use crate::report::{Check, CheckReport};
use crate::scattering::{check_defining_relations, ScatteringFunction};
use crate::warped::{battery_operator, verify_nested_commutator, verify_phases, verify_q_algebra, verify_zf_from_q, DeformedFock, QMatrix};
use crate::{Error, Result, C};
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Suite names accepted by [`run_suite`]. `all` runs the others in order.
pub const SUITES: &[&str] = &[
    "algebra",
    "araki",
    "conditions-f",
    "conjecture-tm",
    "logderiv",
    "residues",
    "analysis",
    "summability",
    "warped",
    "all",
];

/// Plot-ready table. `doc` lines go into the CSV header as `# ` comments.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub name: String,
    pub doc: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataTable {
    fn new(name: &str, doc: &[&str], columns: &[&str]) -> Self {
        DataTable {
            name: name.to_string(),
            doc: doc.iter().map(|s| s.to_string()).collect(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Writes `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut file = std::fs::File::create(dir.join(format!("{}.csv", self.name)))?;
        for line in &self.doc {
            writeln!(file, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Report plus data tables of one run.
#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub report: CheckReport,
    pub tables: Vec<DataTable>,
}

pub fn run_suite(name: &str, cfg: &Config) -> Result<CheckReport> {
    run_suite_with_data(name, cfg).map(|o| o.report)
}

pub fn run_suite_with_data(name: &str, cfg: &Config) -> Result<SuiteOutput> {
    cfg.validate()?;
    let mut out = SuiteOutput { report: CheckReport::new(name), tables: Vec::new() };
    let names: Vec<&str> = if name == "all" {
        SUITES.iter().copied().filter(|s| *s != "all").collect()
    } else if SUITES.contains(&name) {
        vec![name]
    } else {
        return Err(Error::Config(format!("unknown suite '{name}' (expected one of {})", SUITES.join(", "))));
    };
    for n in names {
        let part = match n {
            "algebra" => algebra(cfg)?,
            "araki" => araki_suite(cfg)?,
            "conditions-f" => conditions_f(cfg)?,
            "conjecture-tm" => conjecture_tm(cfg)?,
            "logderiv" => logderiv(cfg)?,
            "residues" => residues(cfg)?,
            "analysis" => analysis(cfg)?,
            "summability" => summability(cfg)?,
            "warped" => warped(cfg)?,
            _ => unreachable!(),
        };
        out.report.extend(part.report);
        out.tables.extend(part.tables);
    }
    out.report.environment = cfg.echo();
    out.report.environment.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    Ok(out)
}

/// Turns a recoverable failure into a failing check so the rest of the
/// suite still runs.
fn recover(name: &str, anchor: &str, seed: u64, r: Result<Check>) -> Result<Check> {
    match r {
        Ok(c) => Ok(c),
        Err(e @ (Error::Config(_) | Error::Precondition(_))) => Err(e),
        Err(e) => Ok(Check::verdict(name, anchor, false, f64::NAN, 0.0).seed(seed).detail("error", e.to_string())),
    }
}

fn recover_report(suite: &str, anchor: &str, seed: u64, r: Result<CheckReport>) -> Result<CheckReport> {
    match r {
        Ok(rep) => Ok(rep),
        Err(e @ (Error::Config(_) | Error::Precondition(_))) => Err(e),
        Err(e) => {
            let mut rep = CheckReport::new(suite);
            rep.push(Check::verdict(suite, anchor, false, f64::NAN, 0.0).seed(seed).detail("error", e.to_string()));
            Ok(rep)
        }
    }
}

fn single(suite: &str, checks: Vec<Check>) -> SuiteOutput {
    let mut report = CheckReport::new(suite);
    for c in checks {
        report.push(c);
    }
    SuiteOutput { report, tables: Vec::new() }
}

fn sample_points(grid: &RapidityGrid, n: usize) -> Vec<f64> {
    (0..n).map(|i| grid.min + (grid.max - grid.min) * (i as f64 + 0.37) / n as f64).collect()
}

// ---------------------------------------------------------------- algebra

fn algebra(cfg: &Config) -> Result<SuiteOutput> {
    let grid = cfg.grid()?;
    let sample = sample_points(&grid, 25);
    let per_s: Vec<Result<Vec<Check>>> = cfg
        .scattering_functions()?
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let mut v = vec![check_defining_relations(&s, &sample, cfg.tol_or(1e-12))];
            match FockSpace::new(grid.clone(), s.clone(), cfg.nmax) {
                Ok(fs) => {
                    v.push(check_zf_relations(&fs, cfg.trials, seed, cfg.tol_or(1e-10)));
                    v.push(check_primed_commutators(&fs, cfg.trials, seed, cfg.tol_or(1e-10)));
                }
                Err(e) => v.push(recover(&format!("ZF relations {s}"), "zf-relations", seed, Err(e))?),
            }
            v.push(check_composition_law(&s, 200, 6, seed, cfg.tol_or(1e-12))?);
            if s.is_constant() {
                v.push(check_rc_collapse(&s, 4, seed)?);
            }
            Ok(v)
        })
        .collect();
    let mut checks = Vec::new();
    for r in per_s {
        checks.extend(r?);
    }
    checks.push(check_contraction_counts(5));
    Ok(single("algebra", checks))
}

// ---------------------------------------------------------------- araki

/// Fixed multi-term expansion exercised by the araki suite.
pub fn araki_operator(seed: u64) -> OperatorExpansion {
    OperatorExpansion::new()
        .with_term(0, 0, |_, _| C::new(0.3, -0.1))
        .with_term(1, 1, kernels::gaussian(1, 1, seed))
        .with_term(2, 0, kernels::gaussian(2, 0, seed + 1))
        .with_term(2, 1, kernels::gaussian(2, 1, seed + 2))
}

fn araki_suite(cfg: &Config) -> Result<SuiteOutput> {
    let grid = cfg.araki_grid()?;
    let tol = cfg.tol_or(1e-9);
    let mm = cfg.araki_mmax;
    let per_s: Vec<Result<Vec<Check>>> = cfg
        .scattering_functions()?
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = cfg.seed.wrapping_add(100 + i as u64);
            let a = araki_operator(seed);
            let b = Battery::new(grid.clone(), s.clone(), seed);
            let mut v = vec![araki::verify_basis(&a, mm, mm, &b, tol)?];
            for m in 0..=mm {
                for n in 0..=mm {
                    v.push(araki::verify_inversion(&a, m, n, &b, tol)?);
                    v.push(araki::verify_reflection(&a, m, n, &b, tol)?);
                }
            }
            v.push(araki::verify_symmetry(&a, mm, mm, 4, &b, tol)?);
            v.push(araki::verify_poincare(&a, 1, 1, &[([0.3, -0.2], 0.0), ([0.1, 0.4], 0.37)], cfg.mass, &b, tol)?);
            let fs = FockSpace::new(grid.clone(), s.clone(), 3)?;
            for (m, n) in [(1, 1), (2, 0), (2, 1)] {
                v.push(recover("Wick vs grid", "wick-grid", seed, araki::verify_wick_against_grid(&fs, &a, m, n, cfg.tol_or(1e-11)))?);
            }
            v.push(recover("reflected on grid", "reflection-grid", seed, araki::verify_reflected_on_grid(&fs, &a, 1, 1, cfg.tol_or(1e-11)))?);
            let small = OperatorExpansion::new().with_term(1, 1, kernels::gaussian(1, 1, seed)).with_term(2, 0, kernels::gaussian(2, 0, seed + 1));
            v.push(recover("commutator", "field-commutator", seed, araki::verify_commutator(&fs, &small, 2, seed, cfg.tol_or(1e-10)))?);
            Ok(v)
        })
        .collect();
    let mut checks = Vec::new();
    for r in per_s {
        checks.extend(r?);
    }
    Ok(single("araki", checks))
}

// ---------------------------------------------------------------- form factors

fn conditions_f(cfg: &Config) -> Result<SuiteOutput> {
    let mut rep = CheckReport::new("conditions-f");
    let profile = cfg.profile()?;
    let fcfg = FConfig {
        samples: cfg.conditions_samples,
        seed: cfg.seed,
        tol: cfg.tol_or(1e-8),
        eps: cfg.node_eps,
        omega: cfg.indicatrix()?,
        grid_min: cfg.grid_min,
        grid_max: cfg.grid_max,
        ..FConfig::default()
    };
    let mut nodes = DataTable::new(
        "node_norms",
        &[
            "F5 node norms at offset eps and eps/2.",
            "family: family name; k: arity; check: F-condition name; max_residual: worst value; tol: threshold",
        ],
        &["family", "k", "check", "max_residual", "tol", "passed"],
    );
    for fam in &cfg.families {
        let (family, ks) = match fam.as_str() {
            "bs" => (family_buchholz_summers(profile.clone(), cfg.mass), vec![2]),
            _ => (family_schroer_truong(profile.clone(), cfg.mass, &ScatteringFunction::ising())?, cfg.st_ks.clone()),
        };
        let part = recover_report("conditions-f", "conditions-f", cfg.seed, verify_conditions_f(&family, &ks, &fcfg))?;
        for c in &part.checks {
            nodes.rows.push(vec![
                family.name.clone(),
                ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
                c.name.clone(),
                format!("{:e}", c.max_residual),
                format!("{:e}", c.tol),
                c.passed.to_string(),
            ]);
        }
        rep.extend(part);
        if fam == "bs" && cfg.contour_shift {
            let cs = ContourShiftConfig::for_family(&family);
            rep.push(recover("contour shift", "wedge-contour-shift", cfg.seed, verify_contour_shift(&family, 1, 0, &cs))?);
        }
    }
    let one = |_: &[C]| C::new(1.0, 0.0);
    rep.extend(check_ms_conditions(&ScatteringFunction::ising(), &one, 7, 20, cfg.seed, cfg.tol_or(1e-12))?);
    Ok(SuiteOutput { report: rep, tables: vec![nodes] })
}

fn conjecture_tm(cfg: &Config) -> Result<SuiteOutput> {
    let mut table = DataTable::new(
        "tm_bound",
        &[
            "Sampled sup of |T_m| over real rapidities.",
            "m: arity; samples: total draws; max_abs: largest |T_m|; box1/box5/box20/cauchy: per-distribution maxima;",
            "boundary_residual: worst |T_m - (+/-)T_{m-1}| on the faces x_j = +/-1",
        ],
        &["m", "samples", "max_abs", "box1", "box5", "box20", "cauchy", "boundary_residual"],
    );
    let bounds: Vec<Result<(Check, Vec<String>)>> = (1..=cfg.tm_m_max)
        .into_par_iter()
        .map(|m| {
            let t0 = Instant::now();
            let b = sample_tm_bound(m, cfg.tm_samples, &DEFAULT_DISTRIBUTIONS, cfg.seed)?;
            let mut row = vec![m.to_string(), b.samples.to_string(), format!("{:.17e}", b.max_abs)];
            row.extend(b.per_distribution.iter().map(|(_, v)| format!("{v:.17e}")));
            row.push(format!("{:e}", b.boundary_residual));
            let c = Check::verdict(&format!("|T_{m}| <= 1"), "tm-conjecture", !b.exceeds, b.max_abs, 1.0 + cfg.tol_or(1e-12))
                .samples(b.samples as u64)
                .seed(cfg.seed)
                .detail("argmax", &b.argmax)
                .detail("per_distribution", &b.per_distribution)
                .detail("boundary_residual", b.boundary_residual)
                .detail("boundary_samples", b.boundary_samples)
                .timed(t0);
            Ok((c, row))
        })
        .collect();
    let mut rep = CheckReport::new("conjecture-tm");
    let mut boundary = 0.0_f64;
    for r in bounds {
        let (c, row) = r?;
        boundary = crate::report::worse(boundary, c.details["boundary_residual"].as_f64().unwrap_or(f64::NAN));
        rep.push(c);
        table.rows.push(row);
    }
    rep.push(Check::residual("T_m boundary reduction", "tm-boundary-reduction", boundary, 1e-12).seed(cfg.seed));
    Ok(SuiteOutput { report: rep, tables: vec![table] })
}

fn logderiv(cfg: &Config) -> Result<SuiteOutput> {
    let checks: Result<Vec<Check>> =
        (2..=cfg.logderiv_m_max).map(|m| check_logderiv(m, cfg.logderiv_samples, cfg.seed, cfg.tol_or(1e-6))).collect();
    Ok(single("logderiv", checks?))
}

fn residues(cfg: &Config) -> Result<SuiteOutput> {
    let c = check_tm_residues(cfg.residue_m_max, cfg.residue_points, cfg.seed, cfg.tol_or(1e-6), Contour::default());
    Ok(single("residues", vec![recover("T_m residues", "tm-residue-lemma", cfg.seed, c)?]))
}

// ---------------------------------------------------------------- analysis

fn analysis(cfg: &Config) -> Result<SuiteOutput> {
    let mut rep = CheckReport::new("analysis");
    rep.extend(check_indicatrix(&cfg.indicatrix()?, 400, cfg.seed));
    for npts in [16, 32] {
        let t0 = Instant::now();
        let grid = RapidityGrid::new(cfg.grid_min, cfg.grid_max, npts, cfg.mass)?;
        let delta = DeltaKernel {
            m: 1,
            n: 1,
            terms: vec![DeltaTerm { coeff: C::new(1.0, 0.0), deltas: vec![(0, 0)], factors: vec![] }],
            kernels: vec![],
        };
        let free = ScatteringFunction::free();
        let v = cross_norm_estimate(KernelSource::Delta(&delta, &free), 1, 1, &grid, None);
        rep.push(recover(
            "cross norm of delta",
            "cross-norm-delta",
            cfg.seed,
            v.map(|v| Check::residual(&format!("cross norm of delta, {npts} points"), "cross-norm-delta", (v - 1.0).abs(), cfg.tol_or(1e-6)).timed(t0)),
        )?);
        let g = |t: f64| C::new((-t * t).exp(), 0.3 * t);
        let h = |t: f64| C::new(1.0 / (1.0 + t * t), 0.0);
        let f = move |a: &[f64], b: &[f64]| g(a[0]) * h(b[0]);
        let want = grid.l2(&grid.points().iter().map(|&t| g(t)).collect::<Vec<_>>())
            * grid.l2(&grid.points().iter().map(|&t| h(t)).collect::<Vec<_>>());
        let t0 = Instant::now();
        let v = cross_norm_estimate(KernelSource::Smooth(&f), 1, 1, &grid, None);
        rep.push(recover(
            "cross norm of rank one",
            "cross-norm-rank-one",
            cfg.seed,
            v.map(|v| {
                Check::residual(&format!("cross norm of rank one, {npts} points"), "cross-norm-rank-one", (v - want).abs(), cfg.tol_or(1e-10))
                    .timed(t0)
            }),
        )?);
    }
    let pw = PaleyWienerConfig { mu: cfg.mass, seed: cfg.seed, tol: cfg.tol_or(1e-8), ..PaleyWienerConfig::default() };
    for f in [
        TestFunction2D::Bump { center: [0.0, 2.5], radius: 0.6 },
        TestFunction2D::Bump { center: [0.3, 3.0], radius: 0.8 },
    ] {
        rep.extend(recover_report("analysis", "paley-wiener", cfg.seed, paley_wiener_check(&f, &pw))?);
    }
    Ok(SuiteOutput { report: rep, tables: Vec::new() })
}

fn summability(cfg: &Config) -> Result<SuiteOutput> {
    let mut rep = CheckReport::new("summability");
    let mut table = DataTable::new(
        "summability",
        &[
            "Terms a_m = c (sqrt2 d)^m sqrt(gamma_alpha(m)/m!) in log space.",
            "alpha: exponent; m: index; log_term: ln a_m; log_ratio: ln(a_{m+1}/a_m), empty at the last m",
        ],
        &["alpha", "m", "log_term", "log_ratio"],
    );
    for &alpha in &cfg.alpha {
        let t0 = Instant::now();
        let r = summability_test(alpha, cfg.summability_c, cfg.summability_d, cfg.summability_mmax)?;
        for (m, t) in r.log_terms.iter().enumerate() {
            let ratio = r.log_ratios.get(m).map(|x| format!("{x:.17e}")).unwrap_or_default();
            table.rows.push(vec![alpha.to_string(), m.to_string(), format!("{t:.17e}"), ratio]);
        }
        let expected = match r.exponent_sign {
            -1 => SeriesVerdict::Convergent,
            1 => SeriesVerdict::Divergent,
            _ => SeriesVerdict::Marginal,
        };
        // informational: records the verdict, always passes
        rep.push(
            Check::verdict(&format!("summability verdict alpha={alpha}"), "summability-verdict", true, r.tail_slope, f64::INFINITY)
                .detail("verdict", r.verdict)
                .detail("tail_slope", r.tail_slope)
                .detail("stirling_exponent", r.stirling_exponent)
                .timed(t0),
        );
        let x = 1.0 - 3.0 * alpha;
        let sign_ok = r.exponent_sign == if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 }
            && (r.stirling_exponent > 0.0) == (r.exponent_sign > 0);
        rep.push(
            Check::verdict(&format!("Stirling exponent sign alpha={alpha}"), "summability-stirling-sign", sign_ok, 0.0, 0.0)
                .detail("exponent_sign", r.exponent_sign),
        );
        rep.push(
            Check::verdict(&format!("ratio test agrees with exponent alpha={alpha}"), "summability-dichotomy", r.verdict == expected, 0.0, 0.0)
                .detail("verdict", r.verdict)
                .detail("expected", expected),
        );
    }
    Ok(SuiteOutput { report: rep, tables: vec![table] })
}

// ---------------------------------------------------------------- warped

fn warped(cfg: &Config) -> Result<SuiteOutput> {
    let mut rep = CheckReport::new("warped");
    let q = QMatrix::new(cfg.a, cfg.mass)?;
    let phase_grid = RapidityGrid::new(cfg.grid_min, cfg.grid_max, cfg.grid_points, cfg.mass)?;
    rep.extend(verify_phases(&q, &phase_grid, 200, cfg.seed, cfg.tol_or(1e-13))?);
    let zf = DeformedFock::new(RapidityGrid::new(-2.0, 2.0, 5, cfg.mass)?, 4, cfg.a)?;
    rep.push(verify_zf_from_q(&zf, cfg.trials, cfg.seed, cfg.tol_or(1e-12))?);
    let alg = DeformedFock::new(RapidityGrid::new(-2.0, 2.0, 4, cfg.mass)?, 5, cfg.a)?;
    rep.extend(verify_q_algebra(&alg, cfg.trials.min(10), cfg.seed, cfg.tol_or(1e-10))?);
    let nc = DeformedFock::new(cfg.warped_grid()?, 4, cfg.a)?;
    let arities: Vec<(usize, usize)> = (0..=2).flat_map(|m| (0..=2).map(move |n| (m, n))).collect();
    rep.extend(recover_report("warped", "nested-commutator-coefficients", cfg.seed, verify_nested_commutator(&nc, &battery_operator(), &arities, cfg.tol_or(1e-8)))?);
    Ok(SuiteOutput { report: rep, tables: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Config {
        let mut c = Config::default();
        for (k, v) in [
            ("grid.points", "6"),
            ("fock.nmax", "2"),
            ("run.trials", "3"),
            ("araki.mmax", "1"),
            ("araki.points", "3"),
            ("conjecture.m", "4"),
            ("conjecture.samples", "2000"),
            ("logderiv.m", "3"),
            ("logderiv.samples", "10"),
            ("residues.m", "4"),
            ("residues.points", "2"),
            ("conditions.samples", "5"),
            ("conditions.k", "1"),
            ("conditions.contour_shift", "false"),
        ] {
            c.set(k, v).unwrap();
        }
        c
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(run_suite("nope", &Config::default()), Err(Error::Config(_))));
    }

    #[test]
    fn quick_suites_pass_and_repeat() {
        let cfg = quick();
        for name in ["algebra", "araki", "conjecture-tm", "logderiv", "residues", "summability"] {
            let a = run_suite(name, &cfg).unwrap();
            assert!(a.all_passed(), "{name}: {:?}", a.failures().collect::<Vec<_>>());
            assert!(!a.checks.is_empty());
            assert_eq!(a.environment["seed"], "42");
            let b = run_suite(name, &cfg).unwrap();
            assert_eq!(a.fingerprint(), b.fingerprint(), "{name}");
        }
    }

    #[test]
    fn tables_have_documented_headers() {
        let cfg = quick();
        let out = run_suite_with_data("summability", &cfg).unwrap();
        let t = &out.tables[0];
        assert_eq!(t.rows.len(), 2 * (cfg.summability_mmax + 1));
        let dir = std::env::temp_dir().join(format!("zflab-tables-{}", std::process::id()));
        t.write(&dir).unwrap();
        let text = std::fs::read_to_string(dir.join("summability.csv")).unwrap();
        assert!(text.starts_with("# "));
        assert!(text.contains("alpha,m,log_term,log_ratio"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
