//! One function per subcommand, each turning flags into an [`Outcome`].

use fredholm_core::growth::{self, AnalysisOptions, GrowthAnalysis, GrowthParams};
use fredholm_core::kernels::{self, build_kernel, default_size};
use fredholm_core::mc;
use fredholm_core::spectral::{self, SpectrumOptions};
use fredholm_core::symbols::{laurent_coeffs, Family, FamilyParams, Ratio, SymbolSpec};
use fredholm_core::twlimit;
use fredholm_core::Error as CoreError;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::acceptance;
use crate::args::{Command, FamilyArg, Flags};
use crate::error::{LabError, LabResult};
use crate::record::{Outcome, Table};
use crate::row;
use crate::sweep;

const ENTRY_TOL: f64 = 1e-14;

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

fn one<T: Copy>(v: &[T], name: &str) -> LabResult<T> {
    match v {
        [x] => Ok(*x),
        [] => Err(usage(format!("--{name} is required"))),
        _ => Err(usage(format!("--{name} takes a single value here"))),
    }
}

fn one_or<T: Copy>(v: &[T], name: &str, default: T) -> LabResult<T> {
    if v.is_empty() {
        Ok(default)
    } else {
        one(v, name)
    }
}

fn list_or<T: Clone>(v: &[T], default: &[T]) -> Vec<T> {
    if v.is_empty() {
        default.to_vec()
    } else {
        v.to_vec()
    }
}

fn positive_u32(x: i64, name: &str) -> LabResult<u32> {
    u32::try_from(x).ok().filter(|&v| v > 0).ok_or_else(|| usage(format!("--{name} must be a positive integer, got {x}")))
}

fn size_of(x: Option<i64>) -> LabResult<Option<usize>> {
    x.map(|s| usize::try_from(s).ok().filter(|&v| v > 0).ok_or_else(|| usage(format!("--size must be positive, got {s}"))))
        .transpose()
}

fn seed_of(f: &Flags, default: u64) -> LabResult<u64> {
    f.seed.map_or(Ok(default), |s| u64::try_from(s).map_err(|_| usage(format!("--seed must be nonnegative, got {s}"))))
}

/// Symbol and kernel offset from the family flags.
///
/// `--n` is the offset for the exponential family and the symbol degree for the
/// growth and Johansson families; `--offset` always sets the offset.
pub fn symbol_from(f: &Flags) -> LabResult<(SymbolSpec, i64)> {
    let family = f.family.ok_or_else(|| usage("--family is required"))?;
    let offset = f.offset;
    let out = match family {
        FamilyArg::Exp => {
            let t = one(&f.t, "t")?;
            let off = offset.unwrap_or(one_or(&f.n, "n", 0)?);
            (SymbolSpec::exponential(t)?, off)
        }
        FamilyArg::Growth => {
            let m = positive_u32(one(&f.m, "m")?, "m")?;
            let r = f.r.ok_or_else(|| usage("--r is required"))?;
            let n = match f.n.as_slice() {
                [] => {
                    let nf = f.alpha.unwrap_or(1.0) * m as f64;
                    if (nf - nf.round()).abs() > 1e-9 || nf < 0.5 {
                        return Err(usage(format!("alpha * m = {nf} is not a positive integer")));
                    }
                    nf.round() as u32
                }
                _ => positive_u32(one(&f.n, "n")?, "n")?,
            };
            (SymbolSpec::growth(n, m, r)?, offset.unwrap_or(0))
        }
        FamilyArg::Johansson => {
            let m = positive_u32(one(&f.m, "m")?, "m")?;
            let n = positive_u32(one(&f.n, "n")?, "n")?;
            let t = one(&f.t, "t")?;
            (SymbolSpec::johansson(m, n, t)?, offset.unwrap_or(0))
        }
        FamilyArg::Conjecture => {
            if f.rs.is_empty() || f.ss.is_empty() {
                return Err(usage("--rs and --ss are required"));
            }
            (SymbolSpec::conjecture(f.rs.clone(), f.ss.clone())?, offset.unwrap_or(0))
        }
    };
    Ok(out)
}

fn params_json(sym: &SymbolSpec, offset: i64) -> Value {
    json!({ "symbol": sym, "offset": offset })
}

pub fn run(cmd: Command, f: &Flags) -> LabResult<Outcome> {
    match cmd {
        Command::Coeffs => coeffs(f),
        Command::Kernel => kernel(f),
        Command::Spectrum => spectrum(f),
        Command::Det => det(f),
        Command::Trace => trace(f),
        Command::Prop1 => edge_trace_cmd(f),
        Command::Growth => growth_cmd(f),
        Command::Lemma3 => growth_sweep_cmd(f),
        Command::Conjecture => product_cmd(f),
        Command::Mc => mc_cmd(f),
        Command::Twlimit => twlimit_cmd(f),
        Command::Accept => accept(),
    }
}

fn coeffs(f: &Flags) -> LabResult<Outcome> {
    let (sym, _) = symbol_from(f)?;
    let lo = f.lo.unwrap_or(-10);
    let hi = f.hi.unwrap_or(10);
    if lo > hi {
        return Err(usage(format!("--lo {lo} exceeds --hi {hi}")));
    }
    let mop = laurent_coeffs(&sym, Ratio::MinusOverPlus, lo, hi)?;
    let pom = laurent_coeffs(&sym, Ratio::PlusOverMinus, lo, hi)?;
    let mut table = Table::new(&["ratio", "k", "value", "tail_bound"]);
    for (name, t) in [("minus_over_plus", &mop), ("plus_over_minus", &pom)] {
        for k in t.indices() {
            table.push(row![name, k, t.get(k).unwrap_or(0.0), t.tail_bound]);
        }
    }
    Ok(Outcome {
        params: json!({ "symbol": sym, "lo": lo, "hi": hi }),
        convergence: json!({
            "minus_over_plus": { "tail_bound": mop.tail_bound, "method": mop.method },
            "plus_over_minus": { "tail_bound": pom.tail_bound, "method": pom.method },
        }),
        results: json!({ "minus_over_plus": mop.values, "plus_over_minus": pom.values }),
        table,
        violation: None,
    })
}

fn kernel(f: &Flags) -> LabResult<Outcome> {
    let (sym, offset) = symbol_from(f)?;
    let size = size_of(f.size)?.unwrap_or_else(|| default_size(&sym, offset));
    let km = build_kernel(&sym, offset, size, f.tol.unwrap_or(ENTRY_TOL))?;
    let mut table = Table::new(&["i", "j", "value"]);
    let mut rows = Vec::with_capacity(size);
    for p in 0..size {
        rows.push((0..size).map(|q| km.entries[(p, q)]).collect::<Vec<_>>());
        for q in 0..size {
            table.push(row![km.index(p), km.index(q), km.entries[(p, q)]]);
        }
    }
    Ok(Outcome {
        params: json!({ "symbol": sym, "offset": offset, "size": size }),
        convergence: json!({
            "entry_error": km.entry_error,
            "ksum_cut": km.ksum_cut,
            "last_row_max": km.last_row_max(),
        }),
        results: json!({ "first_index": offset, "entries": rows, "max_abs": km.max_abs() }),
        table,
        violation: None,
    })
}

fn spectrum(f: &Flags) -> LabResult<Outcome> {
    let (sym, offset) = symbol_from(f)?;
    let size = size_of(f.size)?.unwrap_or_else(|| default_size(&sym, offset));
    let km = build_kernel(&sym, offset, size, f.tol.unwrap_or(ENTRY_TOL))?;
    let mut opts = SpectrumOptions::default();
    if !f.grid.is_empty() {
        opts.v_grid = f.grid.clone();
    }
    let rep = spectral::spectrum_with(&km, &opts);
    let table = spectrum_table(&rep);
    let violation = rep.candidate.as_ref().map(|c| format!("spectrum outside [0, 1]: {:?}", c.reasons));
    Ok(Outcome {
        params: json!({ "symbol": sym, "offset": offset, "size": size, "v_grid": opts.v_grid }),
        convergence: json!({
            "entry_error": km.entry_error,
            "last_row_max": km.last_row_max(),
            "symmetrizer_residual": rep.symmetrizer_residual,
        }),
        results: serde_json::to_value(&rep)?,
        table,
        violation,
    })
}

fn spectrum_table(rep: &spectral::SpectrumReport) -> Table {
    let mut table = Table::new(&["quantity", "key", "value", "aux"]);
    for (k, z) in rep.eigenvalues.iter().enumerate() {
        table.push(row!["eigenvalue", k, z.re, z.im]);
    }
    for (v, d) in &rep.det_at_v {
        table.push(row!["det", v, d, (-v * rep.trace).exp()]);
    }
    for (k, d) in rep.derivs.iter().enumerate() {
        table.push(row!["v_derivative", k, d, ""]);
    }
    table.push(row!["trace", "", rep.trace, ""]);
    table
}

fn det(f: &Flags) -> LabResult<Outcome> {
    let (sym, offset) = symbol_from(f)?;
    let v = f.v.unwrap_or(1.0);
    let tol = f.tol.unwrap_or(1e-10);
    let size = size_of(f.size)?;
    let rep = spectral::fredholm_det_checked(&sym, offset, size, v, tol)?;
    let hp = if kernels::is_finite_rank(&sym) {
        Some(kernels::fredholm_det_hp(&sym, offset, size.unwrap_or_else(|| default_size(&sym, offset)), v)?)
    } else {
        None
    };
    let mut table = Table::new(&["route", "value", "delta"]);
    table.push(row!["double", rep.value, rep.delta]);
    if let Some(h) = hp {
        table.push(row!["arbitrary_precision", h.value, ""]);
    }
    Ok(Outcome {
        params: json!({ "symbol": sym, "offset": offset, "size": rep.size, "v": v, "tol": tol }),
        convergence: json!({ "delta": rep.delta, "entry_error": rep.entry_error, "hp_bits": hp.map(|h| h.bits) }),
        results: json!({ "value": rep.value, "hp": hp }),
        table,
        violation: None,
    })
}

fn trace(f: &Flags) -> LabResult<Outcome> {
    let (sym, offset) = symbol_from(f)?;
    let size = size_of(f.size)?.unwrap_or_else(|| default_size(&sym, offset));
    let km = build_kernel(&sym, offset, size, ENTRY_TOL)?;
    let matrix = spectral::trace(&km);
    let diag = kernels::diagonal_trace(&sym, offset)?;
    let mut table = Table::new(&["route", "value", "error"]);
    table.push(row!["matrix", matrix, km.entry_error * size as f64]);
    table.push(row!["diagonal_sum", diag.value, diag.error]);
    let mut results = json!({ "matrix": matrix, "diagonal": diag });
    let mut convergence = json!({ "entry_error": km.entry_error, "diagonal_bits": diag.bits });
    match sym.params() {
        FamilyParams::Exponential { t } => {
            let (b, e) = kernels::bessel_trace_sum(*t, offset);
            table.push(row!["bessel_sum", b, e]);
            results["bessel_sum"] = json!(b);
            convergence["bessel_error"] = json!(e);
        }
        FamilyParams::Growth { n, m, r } => match growth::trace_contour_at(*n, *m, *r, offset) {
            Ok(c) => {
                table.push(row!["contour", c.value, c.delta]);
                results["contour"] = serde_json::to_value(c)?;
            }
            Err(e @ CoreError::Convergence { .. }) => convergence["contour_error"] = json!(e.to_string()),
            Err(e) => return Err(e.into()),
        },
        _ => {}
    }
    Ok(Outcome { params: params_json(&sym, offset), convergence, results, table, violation: None })
}

fn edge_trace_cmd(f: &Flags) -> LabResult<Outcome> {
    let n_list = list_or(&f.n, &[10_000]);
    let s_list = list_or(&f.s, &[5.0, 8.0, 12.0, 16.0, 20.0]);
    let tab = spectral::prop1_experiment(&n_list, &s_list)?;
    let mut table = Table::new(&[
        "n", "s", "t", "trace", "trace_error", "k_lo", "k_hi", "scaled_min", "good_phase_fraction", "band_share",
    ]);
    for r in &tab.rows {
        let b = &r.band;
        table.push(row![
            r.n,
            r.s,
            r.t,
            r.trace,
            r.trace_error,
            b.k_lo,
            b.k_hi,
            b.scaled_min.map_or(String::new(), |v| v.to_string()),
            b.good_phase_fraction,
            b.band_share
        ]);
    }
    let worst = tab.rows.iter().map(|r| r.trace_error).fold(0.0, f64::max);
    Ok(Outcome {
        params: json!({ "n": n_list, "s": s_list }),
        convergence: json!({ "max_trace_error": worst }),
        results: serde_json::to_value(&tab)?,
        table,
        violation: None,
    })
}

fn growth_inputs(f: &Flags, m_default: &[i64], s_default: &[f64]) -> LabResult<(f64, f64, Vec<u32>, Vec<f64>)> {
    let alpha = f.alpha.unwrap_or(1.0);
    let r = f.r.unwrap_or(0.3);
    let m = list_or(&f.m, m_default).into_iter().map(|m| positive_u32(m, "m")).collect::<LabResult<Vec<_>>>()?;
    Ok((alpha, r, m, list_or(&f.s, s_default)))
}

fn growth_row(table: &mut Table, a: &GrowthAnalysis) {
    let p = &a.params;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    table.push(row![
        p.m,
        p.s,
        p.c,
        p.c_prime,
        p.h,
        a.matrix_trace,
        opt(a.contour.map(|c| c.value)),
        a.leading.value,
        opt(a.det),
        opt(a.ln_det),
        a.exp_bound,
        a.det_bound_holds.map_or(String::new(), |b| b.to_string())
    ]);
}

const GROWTH_HEADER: [&str; 12] = [
    "m", "s", "c", "c_prime", "h", "matrix_trace", "contour_trace", "leading_trace", "det", "ln_det", "exp_bound",
    "det_bound_holds",
];

fn growth_cmd(f: &Flags) -> LabResult<Outcome> {
    let (alpha, r, m_list, s_list) = growth_inputs(f, &[40], &[2.0])?;
    let grid: Vec<(u32, f64)> = m_list.iter().flat_map(|&m| s_list.iter().map(move |&s| (m, s))).collect();
    let out: Vec<(GrowthAnalysis, Option<String>)> = grid
        .par_iter()
        .map(|&(m, s)| {
            let gp = GrowthParams::new(alpha, r, m, s)?;
            match growth::analyze(&gp, AnalysisOptions::default()) {
                Ok(a) => Ok((a, None)),
                // The contour route fails at large m; the other routes still stand.
                Err(e @ CoreError::Convergence { what: "contour trace", .. }) => {
                    let a = growth::analyze(&gp, AnalysisOptions { contour: false, det: true })?;
                    Ok((a, Some(e.to_string())))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, CoreError>>()?;
    let mut table = Table::new(&GROWTH_HEADER);
    for (a, _) in &out {
        growth_row(&mut table, a);
    }
    let violation = out
        .iter()
        .find(|(a, _)| a.det_bound_holds == Some(false))
        .map(|(a, _)| format!("det exceeds exp(-trace) at m = {}, s = {}", a.params.m, a.params.s));
    let convergence: Vec<Value> = out
        .iter()
        .map(|(a, err)| {
            json!({
                "m": a.params.m,
                "s": a.params.s,
                "matrix_trace_error": a.matrix_trace_error,
                "leading_quad_error": a.leading.quad_error,
                "contour_delta": a.contour.map(|c| c.delta),
                "contour_error": err,
            })
        })
        .collect();
    let rows: Vec<&GrowthAnalysis> = out.iter().map(|(a, _)| a).collect();
    Ok(Outcome {
        params: json!({ "alpha": alpha, "r": r, "m": m_list, "s": s_list }),
        convergence: Value::Array(convergence),
        results: serde_json::to_value(rows)?,
        table,
        violation,
    })
}

fn growth_sweep_cmd(f: &Flags) -> LabResult<Outcome> {
    let (alpha, r, m_list, s_list) = growth_inputs(f, &[40], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])?;
    let opts = AnalysisOptions { contour: false, det: true };
    let parts = m_list
        .par_iter()
        .map(|&m| growth::lemma3_experiment(alpha, r, &[m], &s_list, opts))
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut table = Table::new(&GROWTH_HEADER);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for p in parts {
        for a in &p.rows {
            growth_row(&mut table, a);
        }
        rows.extend(p.rows);
        summaries.extend(p.summaries);
    }
    let violation = summaries
        .iter()
        .find(|s| s.det_nonincreasing == Some(false) || s.det_bound_all == Some(false))
        .map(|s| format!("monotonicity or determinant bound failed at m = {}", s.m));
    let decay: Vec<Value> = m_list
        .iter()
        .map(|&m| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|a| a.params.m == m)
                .filter_map(|a| a.ln_det.map(|l| (a.params.s, l.exp())))
                .collect();
            json!({ "m": m, "decay_constant": twlimit::decay_constant(&pts) })
        })
        .collect();
    let convergence: Vec<Value> =
        rows.iter().map(|a| json!({ "m": a.params.m, "s": a.params.s, "matrix_trace_error": a.matrix_trace_error })).collect();
    Ok(Outcome {
        params: json!({ "alpha": alpha, "r": r, "m": m_list, "s": s_list }),
        convergence: Value::Array(convergence),
        results: json!({ "rows": rows, "summaries": summaries, "decay": decay }),
        table,
        violation,
    })
}

fn product_cmd(f: &Flags) -> LabResult<Outcome> {
    let size = size_of(f.size)?.unwrap_or(sweep::PRODUCT_SIZE);
    let (cases, strict, seed) = if f.rs.is_empty() && f.ss.is_empty() {
        let count = f.samples.unwrap_or(200);
        let count = usize::try_from(count).map_err(|_| usage(format!("--samples must be nonnegative, got {count}")))?;
        let seed = seed_of(f, 0)?;
        let strict = f.family == Some(FamilyArg::Growth);
        let mut cases =
            if strict { sweep::growth_cases(count, seed)? } else { sweep::product_cases(count, seed)? };
        if !strict && f.size.is_some() {
            cases.iter_mut().for_each(|c| c.size = size);
        }
        (cases, strict, Some(seed))
    } else {
        let sym = SymbolSpec::conjecture(f.rs.clone(), f.ss.clone())?;
        (vec![sweep::Case { sym, offset: f.offset.unwrap_or(0), size }], false, None)
    };
    let results = sweep::run_cases(&cases, strict)?;
    let mut table = Table::new(&["case", "family", "offset", "size", "top", "bottom", "max_imag", "in_unit_interval"]);
    for (k, r) in results.iter().enumerate() {
        let fam = match r.sym.family() {
            Family::Growth => "growth",
            _ => "product",
        };
        table.push(row![k, fam, r.offset, r.size, r.top, r.bottom, r.max_imag, r.in_unit_interval]);
    }
    let bad: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.ok(strict)).map(|(k, _)| k).collect();
    let violation = (!bad.is_empty()).then(|| format!("counterexample candidates at cases {bad:?}"));
    let in_unit_interval = bad.is_empty();
    Ok(Outcome {
        params: json!({ "cases": cases.len(), "seed": seed, "size": size, "strict_below_one": strict,
            "rs": f.rs, "ss": f.ss, "offset": f.offset }),
        convergence: json!({ "reruns": results.iter().filter(|r| r.rerun_size.is_some()).count() }),
        results: json!({ "in_unit_interval": in_unit_interval, "candidates": bad, "cases": results }),
        table,
        violation,
    })
}

/// Samples in parallel; blocks have fixed streams so the merged counts do not
/// depend on scheduling.
pub fn sample_parallel(t: f64, samples: u64, seed: u64) -> LabResult<mc::ShapeCounts> {
    let parts = mc::blocks(samples)
        .into_par_iter()
        .map(|(b, count)| mc::sample_block(t, seed, b, count))
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut total = mc::ShapeCounts::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn mc_cmd(f: &Flags) -> LabResult<Outcome> {
    let t = one_or(&f.t, "t", 2.0)?;
    let samples = f.samples.unwrap_or(100_000);
    let samples = u64::try_from(samples).ok().filter(|&s| s > 0).ok_or_else(|| usage("--samples must be positive"))?;
    let seed = seed_of(f, 2024)?;
    let window = list_or(&f.n, &[2, 8]);
    let (lo, hi) = (*window.iter().min().unwrap_or(&0), *window.iter().max().unwrap_or(&0));
    let counts = sample_parallel(t, samples, seed)?;
    let rep = mc::compare_shifts(t, lo..=hi, &counts, seed, &mc::CANDIDATE_SHIFTS)?;
    let mut table = Table::new(&["n", "p_hat", "std_error", "shift", "det", "agrees"]);
    for r in &rep.rows {
        for (k, d) in rep.shifts.iter().enumerate() {
            table.push(row![r.n, r.p_hat, r.std_error, d, r.det[k], r.agrees[k]]);
        }
    }
    let violation = rep.consistent.is_empty().then(|| "no offset convention agrees with sampling".to_string());
    let det_delta = rep.rows.iter().flat_map(|r| r.det_delta.iter().copied()).fold(0.0, f64::max);
    Ok(Outcome {
        params: json!({ "t": t, "samples": samples, "seed": seed, "window": [lo, hi], "block": mc::BLOCK }),
        convergence: json!({ "max_det_delta": det_delta, "mean_size": counts.mean_size() }),
        results: serde_json::to_value(&rep)?,
        table,
        violation,
    })
}

fn twlimit_cmd(f: &Flags) -> LabResult<Outcome> {
    let xs = list_or(&f.x, &[-1.0, 0.0, 1.0]);
    let order = f.order.unwrap_or(twlimit::DEFAULT_ORDER as i64);
    let order = usize::try_from(order).map_err(|_| usage(format!("--order must be positive, got {order}")))?;
    let airy = xs.iter().map(|&x| twlimit::airy_kernel_det(x, order)).collect::<Result<Vec<_>, CoreError>>()?;
    if f.family == Some(FamilyArg::Growth) {
        let (alpha, r, m_list, _) = growth_inputs(f, &[20, 40, 80], &[])?;
        let scans = xs
            .par_iter()
            .map(|&x| twlimit::growth_limit_scan(x, alpha, r, &m_list))
            .collect::<Result<Vec<_>, CoreError>>()?;
        let mut table = Table::new(&["x", "m", "h", "det", "f2", "deviation"]);
        for s in &scans {
            for row in &s.rows {
                table.push(row![s.x, row.m, row.h, row.det, row.f2, row.deviation]);
            }
        }
        return Ok(Outcome {
            params: json!({ "family": "growth", "x": xs, "alpha": alpha, "r": r, "m": m_list, "order": order }),
            convergence: json!({ "airy": airy }),
            results: json!({ "scans": scans }),
            table,
            violation: None,
        });
    }
    let t_list = list_or(&f.t, &[20.0, 50.0, 100.0]);
    let scans = xs
        .par_iter()
        .map(|&x| twlimit::plancherel_limit_scan(x, &t_list).map(|rows| (x, rows)))
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut table = Table::new(&["x", "t", "n", "det", "f2", "deviation"]);
    for (x, rows) in &scans {
        for r in rows {
            table.push(row![x, r.t, r.n, r.det, r.f2, r.deviation]);
        }
    }
    let scans: Vec<Value> = scans.iter().map(|(x, rows)| json!({ "x": x, "rows": rows })).collect();
    Ok(Outcome {
        params: json!({ "family": "exp", "x": xs, "t": t_list, "order": order }),
        convergence: json!({ "airy": airy }),
        results: json!({ "scans": scans }),
        table,
        violation: None,
    })
}

fn accept() -> LabResult<Outcome> {
    let results = acceptance::run_all(|r| eprintln!("{}", r.line()));
    let mut table = Table::new(&["criterion", "pass", "known_shortfall", "detail"]);
    for r in &results {
        table.push(row![r.id, r.pass, r.known_shortfall, r.detail]);
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    let violation = (!failed.is_empty()).then(|| format!("criteria {failed:?} failed"));
    Ok(Outcome {
        params: json!({}),
        convergence: json!({}),
        results: serde_json::to_value(&results)?,
        table,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Cli;
    use clap::Parser;

    fn flags(args: &[&str]) -> Flags {
        let mut v = vec!["lab", "det"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap().flags
    }

    #[test]
    fn exponential_offset_from_n() {
        let (sym, off) = symbol_from(&flags(&["--family", "exp", "--t", "1", "--n", "5"])).unwrap();
        assert_eq!(off, 5);
        assert_eq!(sym, SymbolSpec::exponential(1.0).unwrap());
    }

    #[test]
    fn growth_degree_from_alpha() {
        let (sym, _) = symbol_from(&flags(&["--family", "growth", "--m", "4", "--alpha", "0.5", "--r", "0.3"])).unwrap();
        assert_eq!(sym, SymbolSpec::growth(2, 4, 0.3).unwrap());
        assert!(symbol_from(&flags(&["--family", "growth", "--m", "3", "--alpha", "0.5", "--r", "0.3"])).is_err());
    }

    #[test]
    fn trivial_determinant() {
        let o = run(Command::Det, &flags(&["--family", "exp", "--t", "0", "--n", "5", "--v", "1"])).unwrap();
        assert_eq!(o.results["value"], json!(1.0));
    }

    #[test]
    fn missing_family_is_usage() {
        let e = run(Command::Det, &flags(&[])).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
