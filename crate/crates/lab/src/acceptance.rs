//! The acceptance suite: one check per criterion, each reporting a single line.
//!
//! Every kernel matrix built here is also run through the determinant bound
//! `det(I - vK) <= exp(-v tr K)`; criterion 5 reports the tally.

use std::time::Instant;

use fredholm_core::growth::{self, AnalysisOptions, GrowthParams};
use fredholm_core::kernels::{self, build_kernel, default_size, KernelMatrix};
use fredholm_core::mc;
use fredholm_core::spectral;
use fredholm_core::symbols::SymbolSpec;
use fredholm_core::twlimit;
use fredholm_core::Result;
use serde::Serialize;

use crate::commands::sample_parallel;
use crate::oracle;
use crate::sweep;

/// Criteria that fail at the prescribed parameters for reasons analyzed in the
/// README. They are still run and reported as failures.
pub const KNOWN_SHORTFALLS: [u8; 2] = [4, 9];

pub const SWEEP_SEED: u64 = 6;
pub const MC_SEED_T2: u64 = 2024;
pub const MC_SEED_T4: u64 = 2025;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub known_shortfall: bool,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let note = if !self.pass && self.known_shortfall { " [known shortfall]" } else { "" };
        format!("criterion {:>2} {verdict} {}: {}{note} ({:.1}s)", self.id, self.title, self.detail, self.seconds)
    }
}

#[derive(Debug, Clone)]
struct BoundCheck {
    label: String,
    holds: bool,
    detail: String,
}

/// Tally of determinant-bound checks over every kernel instance.
#[derive(Debug, Default)]
struct Audit {
    checks: Vec<BoundCheck>,
}

impl Audit {
    fn kernel(&mut self, label: String, km: &KernelMatrix) {
        let (holds, detail) = match spectral::lemma1_check(km, 1.0) {
            Ok(r) => (r.holds, format!("det {:e} vs bound {:e}", r.det, r.exp_bound)),
            Err(e) => (false, e.to_string()),
        };
        self.checks.push(BoundCheck { label, holds, detail });
    }

    fn outcome(&mut self, label: String, holds: bool, detail: String) {
        self.checks.push(BoundCheck { label, holds, detail });
    }
}

fn exp_kernel(t: f64, offset: i64) -> Result<KernelMatrix> {
    let sym = SymbolSpec::exponential(t)?;
    build_kernel(&sym, offset, default_size(&sym, offset), 1e-15)
}

type Check = (bool, String);

fn trace_identity(audit: &mut Audit) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in [10, 50, 200] {
        for t in [2.0, 10.0, 40.0] {
            let km = exp_kernel(t, n)?;
            let (b, _) = kernels::bessel_trace_sum(t, n);
            worst = worst.max((spectral::trace(&km) - b).abs());
            audit.kernel(format!("exponential t={t} n={n}"), &km);
        }
    }
    Ok((worst <= 1e-9, format!("worst |matrix trace - Bessel sum| = {worst:.2e} (limit 1e-9)")))
}

fn growth_traces(audit: &mut Audit) -> Result<Check> {
    let mut worst = 0.0f64;
    for m in [20, 40] {
        for s in [1.0, 2.0] {
            let gp = GrowthParams::new(1.0, 0.3, m, s)?;
            let sym = gp.symbol()?;
            let km = build_kernel(&sym, gp.h, default_size(&sym, gp.h), 1e-14)?;
            let mt = spectral::trace(&km);
            let ct = growth::trace_contour(&gp)?;
            worst = worst.max((mt - ct.value).abs() / mt.abs());
            audit.kernel(format!("growth m={m} s={s}"), &km);
        }
    }
    let leading = |m: u32| -> Result<f64> {
        let gp = GrowthParams::new(1.0, 0.3, m, 4.0)?;
        let exact = kernels::diagonal_trace(&gp.symbol()?, gp.h)?.value;
        Ok((growth::leading_trace(&gp)?.value - exact).abs() / exact)
    };
    let (l400, l1600) = rayon::join(|| leading(400), || leading(1600));
    let (l400, l1600) = (l400?, l1600?);
    let pass = worst <= 1e-7 && l400 <= 0.25 && l1600 <= 0.10;
    Ok((
        pass,
        format!(
            "matrix vs contour worst rel {worst:.2e} (limit 1e-7); leading rel error {:.1}% at m=400 (limit 25%), {:.1}% at m=1600 (limit 10%)",
            100.0 * l400,
            100.0 * l1600
        ),
    ))
}

fn edge_scaling() -> Result<Check> {
    let tab = spectral::prop1_experiment(&[10_000], &[5.0, 8.0, 12.0, 16.0, 20.0])?;
    let fit = tab.fits.first().map(|f| f.fit);
    let slope = fit.map_or(f64::NAN, |f| f.slope);
    let slope_ok = fit.is_some_and(|f| f.points == 5) && (1.4..=1.6).contains(&slope);
    let ratios = [50i64, 100, 200]
        .iter()
        .map(|&n| {
            let row = spectral::edge_trace_row(n, 2.0 * (n as f64).powf(2.0 / 3.0))?;
            Ok(row.trace / row.t)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let ratio_ok = lo > 0.0 && lo / hi >= 0.3;
    Ok((
        slope_ok && ratio_ok,
        format!("slope {slope:.4} at n=1e4 (want [1.4, 1.6]); tr/t = {ratios:.4?}, min/max {:.3} (want >= 0.3)", lo / hi),
    ))
}

fn growth_trace_slope() -> Result<Check> {
    let opts = AnalysisOptions { contour: false, det: false };
    let tab = growth::lemma3_experiment(1.0, 0.3, &[200], &[2.0, 3.0, 4.0, 6.0, 8.0], opts)?;
    let slope = tab.summaries.first().and_then(|s| s.trace_slope).map_or(f64::NAN, |f| f.slope);
    Ok(((1.35..=1.65).contains(&slope), format!("trace slope {slope:.4} at m=200 (want [1.35, 1.65])")))
}

fn eigenvalue_sweep(audit: &mut Audit) -> Result<Check> {
    let products = sweep::run_cases(&sweep::product_cases(200, SWEEP_SEED)?, false)?;
    let growths = sweep::run_cases(&sweep::growth_cases(50, SWEEP_SEED)?, true)?;
    for (k, r) in products.iter().enumerate() {
        audit.outcome(format!("product case {k}"), r.det_bound_holds, format!("top {}", r.top));
    }
    for (k, r) in growths.iter().enumerate() {
        audit.outcome(format!("growth case {k}"), r.det_bound_holds, format!("top {}", r.top));
    }
    let bad_p = products.iter().filter(|r| !r.ok(false)).count();
    let bad_g = growths.iter().filter(|r| !r.ok(true)).count();
    let reruns = products.iter().chain(&growths).filter(|r| r.rerun_size.is_some()).count();
    let max_imag = products.iter().chain(&growths).map(|r| r.max_imag).fold(0.0, f64::max);
    let top_g = growths.iter().map(|r| r.top).fold(0.0, f64::max);
    Ok((
        bad_p == 0 && bad_g == 0,
        format!(
            "{bad_p}/200 product and {bad_g}/50 growth candidates after {reruns} reruns; max |Im| {max_imag:.1e}, largest growth eigenvalue {top_g:.6}"
        ),
    ))
}

fn monte_carlo(audit: &mut Audit) -> Result<Check> {
    let counts = sample_parallel(2.0, 100_000, MC_SEED_T2).map_err(lab_to_core)?;
    let rep = mc::compare_shifts(2.0, 2..=8, &counts, MC_SEED_T2, &mc::CANDIDATE_SHIFTS)?;
    let counts4 = sample_parallel(4.0, 100_000, MC_SEED_T4).map_err(lab_to_core)?;
    let rep4 = mc::compare_shifts(4.0, 6..=14, &counts4, MC_SEED_T4, &[mc::FROZEN_OFFSET])?;
    for (t, window, shifts) in [(2.0, 2..=8, &mc::CANDIDATE_SHIFTS[..]), (4.0, 6..=14, &[mc::FROZEN_OFFSET][..])] {
        for n in window {
            for &d in shifts {
                audit.kernel(format!("exponential t={t} n={}", n + d), &exp_kernel(t, n + d)?);
            }
        }
    }
    let unique = rep.offset == Some(mc::FROZEN_OFFSET);
    let holds4 = rep4.consistent == [mc::FROZEN_OFFSET];
    Ok((
        unique && holds4,
        format!(
            "t=2 consistent shifts {:?} (max dev per shift {:.3?}); frozen shift {} at t=4: {} (max dev {:.4})",
            rep.consistent,
            rep.max_deviation,
            mc::FROZEN_OFFSET,
            if holds4 { "agrees" } else { "disagrees" },
            rep4.max_deviation[0]
        ),
    ))
}

fn lab_to_core(e: crate::error::LabError) -> fredholm_core::Error {
    match e {
        crate::error::LabError::Numeric(c) => c,
        other => fredholm_core::Error::Precondition(other.to_string()),
    }
}

fn combinatorics() -> Result<Check> {
    let mut lis_bad = 0;
    let perms7 = oracle::permutations(7);
    for p in &perms7 {
        if mc::patience_lis(p)? != oracle::brute_lis(p) {
            lis_bad += 1;
        }
    }
    let mut rsk_bad = 0;
    let mut rsk_total = 0;
    for n in 1..=6 {
        for p in oracle::permutations(n) {
            rsk_total += 1;
            if mc::rsk_two_rows(&p)? != oracle::brute_greene2(&p) {
                rsk_bad += 1;
            }
        }
    }
    Ok((
        lis_bad == 0 && rsk_bad == 0 && perms7.len() == 5040,
        format!("{lis_bad}/{} LIS mismatches, {rsk_bad}/{rsk_total} two-row mismatches", perms7.len()),
    ))
}

fn tracy_widom(audit: &mut Audit) -> Result<Check> {
    let mut monotone = true;
    let mut worst_last = 0.0f64;
    let mut parts = Vec::new();
    for x in [-1.0, 0.0, 1.0] {
        let rows = twlimit::plancherel_limit_scan(x, &[20.0, 50.0, 100.0])?;
        let dev: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
        monotone &= dev.windows(2).all(|w| w[1] < w[0]);
        worst_last = worst_last.max(*dev.last().unwrap_or(&f64::NAN));
        parts.push(format!("x={x}: {dev:.4?}"));
        for r in &rows {
            audit.kernel(format!("exponential t={} n={}", r.t, r.n), &exp_kernel(r.t, r.n + mc::FROZEN_OFFSET)?);
        }
    }
    let mut airy_worst = 0.0f64;
    for x in [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0] {
        airy_worst = airy_worst.max(twlimit::airy_kernel_det(x, 80)?.convergence_delta);
    }
    let pass = monotone && worst_last <= 0.02 && airy_worst <= 1e-8;
    Ok((
        pass,
        format!(
            "deviations {} (decreasing: {monotone}, worst at t=100 {worst_last:.4}, limit 0.02); Airy order 40 vs 80 worst {airy_worst:.1e}",
            parts.join(", ")
        ),
    ))
}

fn growth_monotone(audit: &mut Audit) -> Result<Check> {
    let s_list: Vec<f64> = (0..=8).map(f64::from).collect();
    let opts = AnalysisOptions { contour: false, det: true };
    let tab = growth::lemma3_experiment(1.0, 0.3, &[40], &s_list, opts)?;
    for a in &tab.rows {
        audit.outcome(
            format!("growth m=40 s={}", a.params.s),
            a.det_bound_holds == Some(true),
            format!("ln det {:?} vs -trace {}", a.ln_det, -a.matrix_trace),
        );
    }
    let nonincreasing = tab.summaries.first().and_then(|s| s.det_nonincreasing) == Some(true);
    let delta = tab
        .rows
        .iter()
        .filter(|a| a.params.s >= 3.0)
        .filter_map(|a| a.ln_det.map(|l| -l / a.params.s.powf(1.5)))
        .fold(f64::INFINITY, f64::min);
    let pass = nonincreasing && delta > 0.0 && delta.is_finite();
    let ln: Vec<f64> = tab.rows.iter().filter_map(|a| a.ln_det).collect();
    Ok((pass, format!("ln det along s=0..8 {ln:.2?}, nonincreasing: {nonincreasing}; fitted decay constant {delta:.4}")))
}

fn finish(id: u8, title: &'static str, start: Instant, r: Result<Check>) -> CriterionResult {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title,
        pass,
        detail,
        known_shortfall: KNOWN_SHORTFALLS.contains(&id),
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion, calling `report` as each one finishes.
pub fn run_all(mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut audit = Audit::default();
    let mut out = Vec::new();
    let mut step = |id, title, f: &mut dyn FnMut(&mut Audit) -> Result<Check>| {
        let start = Instant::now();
        let r = finish(id, title, start, f(&mut audit));
        report(&r);
        out.push(r);
    };
    step(1, "trace identity", &mut |a| trace_identity(a));
    step(2, "growth trace agreement", &mut |a| growth_traces(a));
    step(3, "edge trace scaling", &mut |_| edge_scaling());
    step(4, "growth trace scaling", &mut |_| growth_trace_slope());
    step(6, "eigenvalue location sweep", &mut |a| eigenvalue_sweep(a));
    step(7, "Monte Carlo vs determinant", &mut |a| monte_carlo(a));
    step(8, "combinatorial oracles", &mut |_| combinatorics());
    step(9, "Airy limit", &mut |a| tracy_widom(a));
    step(10, "determinant monotone in s", &mut |a| growth_monotone(a));
    step(5, "determinant bound on every kernel", &mut |a| {
        let bad: Vec<&BoundCheck> = a.checks.iter().filter(|c| !c.holds).collect();
        let detail = match bad.first() {
            None => format!("{} kernels checked, 0 violations", a.checks.len()),
            Some(c) => format!("{} of {} violate, first: {} ({})", bad.len(), a.checks.len(), c.label, c.detail),
        };
        Ok((bad.is_empty() && !a.checks.is_empty(), detail))
    });
    out.sort_by_key(|r| r.id);
    out
}
