use std::fmt::Write as _;
use std::time::Instant;

use mse_core::existence::{fr_check, ExistenceCache};
use mse_core::glm::{select_best_bic, FitResult, FitSettings, PWindow, ParamCount, SampleSize};
use mse_core::history::CaptureHistory;
use mse_core::model::ModelSpec;
use mse_core::resample::{
    chisq_bootstrap, diagnose, downhill_bootstrap, downhill_starts, ntop_sweep, restricted_bootstrap,
    BootstrapConfig, DiagnosticsReport, IntervalResult, RankDegree, SweepResult, TieRule,
};
use mse_core::space::{enumerate_models, ModelSpace};
use mse_core::{fixtures, Dataset};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: "invalid_argument", message: message.into() }
    }
}

impl From<mse_core::Error> for CliError {
    fn from(e: mse_core::Error) -> Self {
        CliError { code: e.code(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        mse_core::Error::from(e).into()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        mse_core::Error::from(e).into()
    }
}

type CliResult<T> = Result<T, CliError>;

/// Loaded data plus anything worth echoing in reports.
struct Loaded {
    dataset: Dataset,
}

impl Loaded {
    fn t(&self) -> usize {
        self.dataset.table.t()
    }

    fn summary(&self) -> Value {
        json!({
            "lists": self.dataset.list_names,
            "observed_cases": self.dataset.table.n_total(),
            "observed_histories": self.dataset.table.support_len(),
            "warnings": self.dataset.warnings,
        })
    }

    /// List names of a history, e.g. `["B", "C"]`.
    fn names(&self, h: CaptureHistory) -> Vec<&str> {
        h.lists().map(|l| self.dataset.list_names[l - 1].as_str()).collect()
    }
}

fn load(source: &DataSource) -> CliResult<Loaded> {
    let dataset = match source.data.strip_prefix('@') {
        Some(name) => fixtures::by_name(name).ok_or_else(|| {
            CliError::usage(format!(
                "unknown fixture {name:?}; available: {}",
                fixtures::NAMES.join(", ")
            ))
        })?,
        None => Dataset::from_path(&source.data)?,
    };
    let dataset = match &source.lists {
        Some(names) => {
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut d = dataset.select_lists(&names)?;
            d.warnings.splice(0..0, dataset.warnings.iter().cloned());
            d
        }
        None => dataset,
    };
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Loaded { dataset })
}

fn max_order(requested: Option<usize>, t: usize) -> CliResult<usize> {
    let l = requested.unwrap_or(t - 1);
    if l == 0 || l >= t {
        return Err(CliError::usage(format!(
            "--max-order must be between 1 and {} for {t} lists, got {l}",
            t - 1
        )));
    }
    Ok(l)
}

fn fit_settings(args: &ModelArgs) -> FitSettings {
    FitSettings {
        sample_size: match args.sample_size {
            Some(SampleSizeArg::Capture) => SampleSize::Capture,
            _ => SampleSize::Case,
        },
        param_count: ParamCount::Full,
        ..FitSettings::default()
    }
}

fn sample_size_label(s: SampleSize) -> &'static str {
    match s {
        SampleSize::Case => "case",
        SampleSize::Capture => "capture",
    }
}

/// JSON number, or the string `"-inf"`/`"inf"` where JSON has no number.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("inf")
    }
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report is serializable");
    s.push('\n');
    s
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        String::new()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "inf".into()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

pub fn enumerate(args: &EnumerateArgs) -> CliResult<String> {
    let t = args.lists;
    if !(2..=16).contains(&t) {
        return Err(CliError::usage(format!("--lists must be between 2 and 16, got {t}")));
    }
    let l = max_order(args.max_order, t)?;
    let space = enumerate_models(t, l)?;
    let models: Vec<String> = space.models().iter().map(|m| m.to_string()).collect();
    Ok(match args.output.format {
        Format::Json => {
            let mut v = json!({ "t": t, "max_order": l, "count": space.len() });
            if args.models {
                v["models"] = json!(models);
            }
            to_json(&v)
        }
        Format::Text => {
            let mut s = format!("{} hierarchical models on {t} lists with order at most {l}\n", space.len());
            if args.models {
                for m in &models {
                    let _ = writeln!(s, "{m}");
                }
            }
            s
        }
        Format::Csv => csv_string(&["model"], models.into_iter().map(|m| vec![m]).collect())?,
    })
}

pub fn data(args: &DataArgs) -> CliResult<Vec<u8>> {
    let d = load(&args.source)?;
    let mut buf = Vec::new();
    d.dataset.write_csv(&mut buf)?;
    Ok(buf)
}

fn fit_json(d: &Loaded, f: &FitResult, exists: bool) -> Value {
    let table = &d.dataset.table;
    let params: Vec<Value> = f
        .model
        .params()
        .iter()
        .map(|&h| {
            json!({
                "term": h.to_string(),
                "lists": d.names(h),
                "estimate": opt_num(f.alpha_of(h)),
            })
        })
        .collect();
    let cells: Vec<Value> = CaptureHistory::all_nonempty(table.t())
        .into_iter()
        .map(|h| {
            json!({
                "history": h.to_string(),
                "observed": table.count(h),
                "fitted": if f.mu.is_empty() { Value::Null } else { num(f.mu_of(h)) },
            })
        })
        .collect();
    json!({
        "model": f.model.to_string(),
        "mle_exists": exists,
        "status": f.status.label(),
        "population_estimate": opt_num(f.population_estimate),
        "dark_figure": opt_num(f.dark_figure()),
        "bic": num(f.bic),
        "deviance": num(f.deviance),
        "iterations": f.iterations,
        "minus_infinity_terms": f.reduced.minus_infinity_params.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        "parameters": params,
        "cells": cells,
    })
}

fn fit_text(d: &Loaded, f: &FitResult, exists: bool, out: &mut String) {
    let _ = writeln!(out, "model {}: {}", f.model, f.status.label());
    if !exists {
        let _ = writeln!(out, "  the maximum likelihood estimate does not exist for this table");
        return;
    }
    let _ = writeln!(out, "  population estimate {}", fmt_opt(f.population_estimate));
    let _ = writeln!(out, "  BIC {}", fmt_f(f.bic));
    for &h in f.model.params() {
        let label = if h.is_empty() { "intercept".to_string() } else { d.names(h).join("*") };
        let _ = writeln!(out, "  {label:<20} {}", fmt_opt(f.alpha_of(h)));
    }
}

pub fn fit(args: &FitArgs) -> CliResult<String> {
    let d = load(&args.source)?;
    let t = d.t();
    let settings = fit_settings(&args.model_args);
    let cache = ExistenceCache::new();
    let format = args.output.format;

    if args.model.trim().eq_ignore_ascii_case("best") {
        let l = max_order(args.model_args.max_order, t)?;
        let space = enumerate_models(t, l)?;
        let sel = select_best_bic(space.models(), &d.dataset.table, &cache, &settings)?;
        let best = sel.best_fit();
        let failures: Vec<String> = sel.fr_failures().map(|m| m.to_string()).collect();
        let mut order: Vec<usize> = (0..sel.fits.len()).collect();
        let key = |b: f64| if b.is_nan() { f64::INFINITY } else { b };
        order.sort_by(|&a, &b| key(sel.fits[a].bic).total_cmp(&key(sel.fits[b].bic)).then(a.cmp(&b)));
        return Ok(match format {
            Format::Json => {
                let candidates: Vec<Value> = order
                    .iter()
                    .map(|&i| {
                        let f = &sel.fits[i];
                        json!({
                            "model": f.model.to_string(),
                            "status": f.status.label(),
                            "bic": num(f.bic),
                            "population_estimate": opt_num(f.population_estimate),
                        })
                    })
                    .collect();
                to_json(&json!({
                    "dataset": d.summary(),
                    "max_order": l,
                    "sample_size": sample_size_label(settings.sample_size),
                    "models": space.len(),
                    "best": fit_json(&d, best, true),
                    "fr_failures": failures,
                    "candidates": candidates,
                }))
            }
            Format::Text => {
                let mut s = format!("{} models on {t} lists, order at most {l}\n", space.len());
                fit_text(&d, best, true, &mut s);
                let _ = writeln!(s, "models failing the existence check: {}", failures.len());
                for m in &failures {
                    let _ = writeln!(s, "  {m}");
                }
                s
            }
            Format::Csv => csv_string(
                &["model", "status", "bic", "population_estimate"],
                order
                    .iter()
                    .map(|&i| {
                        let f = &sel.fits[i];
                        vec![
                            f.model.to_string(),
                            f.status.label().to_string(),
                            fmt_f(f.bic),
                            fmt_opt(f.population_estimate),
                        ]
                    })
                    .collect(),
            )?,
        });
    }

    if args.model_args.max_order.is_some() {
        return Err(CliError::usage("--max-order applies only with --model best"));
    }
    let model = ModelSpec::parse(t, &args.model)?;
    let exists = fr_check(&model, &d.dataset.table);
    let f = if exists {
        mse_core::glm::fit(&model, &d.dataset.table, &settings)
    } else {
        FitResult::fr_failed(&model, &d.dataset.table)
    };
    Ok(match format {
        Format::Json => {
            let mut v = fit_json(&d, &f, exists);
            v["dataset"] = d.summary();
            v["sample_size"] = json!(sample_size_label(settings.sample_size));
            to_json(&v)
        }
        Format::Text => {
            let mut s = String::new();
            fit_text(&d, &f, exists, &mut s);
            s
        }
        Format::Csv => csv_string(
            &["term", "estimate"],
            f.model
                .params()
                .iter()
                .map(|&h| vec![h.to_string(), fmt_opt(f.alpha_of(h))])
                .collect(),
        )?,
    })
}

fn boot_config(r: &ResampleArgs, levels: Vec<f64>, settings: FitSettings, ties: TieRule) -> BootstrapConfig {
    BootstrapConfig {
        reps: r.reps,
        levels,
        seed: r.seed,
        workers: r.workers,
        fit: settings,
        ties,
    }
}

/// Options that only some methods accept.
fn check_method_options(a: &BootstrapArgs) -> CliResult<()> {
    let reject = |flag: &str, methods: &str| {
        Err(CliError::usage(format!(
            "{flag} is not used by --method {}; it applies to {methods}",
            method_name(a.method)
        )))
    };
    let ranked = matches!(a.method, MethodArg::Bic | MethodArg::Degree2);
    if !ranked && a.ntop.is_some() {
        return reject("--ntop", "bic and degree2");
    }
    if !ranked && a.sweep {
        return reject("--sweep", "bic and degree2");
    }
    if a.method != MethodArg::Chisq && (a.p_lo.is_some() || a.p_hi.is_some()) {
        return reject("--p-lo/--p-hi", "chisq");
    }
    if a.method != MethodArg::Downhill && (a.starts.is_some() || a.start_pairs.is_some()) {
        return reject("--starts/--start-pairs", "downhill");
    }
    if a.method == MethodArg::Chisq && a.model_args.sample_size.is_some() {
        return reject("--sample-size", "the BIC-based methods");
    }
    Ok(())
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Bic => "bic",
        MethodArg::Degree2 => "degree2",
        MethodArg::Downhill => "downhill",
        MethodArg::Chisq => "chisq",
    }
}

enum BootOutput {
    Single(IntervalResult),
    Sweep(SweepResult),
}

fn interval_rows(r: &IntervalResult) -> Vec<Vec<String>> {
    r.intervals
        .iter()
        .map(|i| {
            vec![
                r.n_top.map(|n| n.to_string()).unwrap_or_default(),
                serde_json::to_value(r.method).unwrap().as_str().unwrap_or_default().to_string(),
                fmt_f(i.level),
                fmt_f(i.lower),
                fmt_f(i.upper),
                fmt_f(r.point_estimate),
                r.used_replicates.to_string(),
                r.excluded_replicates.to_string(),
                fmt_f(r.z0_hat),
                fmt_f(r.a_hat),
            ]
        })
        .collect()
}

fn interval_text(r: &IntervalResult, s: &mut String) {
    let label = r.n_top.map(|n| format!("n_top {n}")).unwrap_or_else(|| {
        serde_json::to_value(r.method).unwrap().as_str().unwrap_or_default().to_string()
    });
    let ivs: Vec<String> = r
        .intervals
        .iter()
        .map(|i| format!("{:.0}%: [{:.1}, {:.1}]", i.level * 100.0, i.lower, i.upper))
        .collect();
    let _ = write!(s, "{label:<12} {}", ivs.join("  "));
    if r.excluded_replicates > 0 {
        let _ = write!(s, "  ({} of {} replicates excluded)", r.excluded_replicates, r.reps);
    }
    s.push('\n');
}

pub fn bootstrap(args: &BootstrapArgs) -> CliResult<String> {
    check_method_options(args)?;
    let started = Instant::now();
    let d = load(&args.source)?;
    let t = d.t();
    let l = max_order(args.model_args.max_order, t)?;
    let settings = fit_settings(&args.model_args);
    let ties = if args.half_ties { TieRule::Half } else { TieRule::Strict };
    let cfg = boot_config(&args.resample, args.levels.clone(), settings, ties);
    cfg.validate()?;
    let cache = ExistenceCache::new();
    let table = &d.dataset.table;

    let space = || -> CliResult<ModelSpace> { Ok(enumerate_models(t, l)?) };
    let mut config = json!({
        "method": method_name(args.method),
        "max_order": l,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "levels": cfg.levels,
        "ties": if args.half_ties { "half" } else { "strict" },
    });
    let out = match args.method {
        MethodArg::Bic | MethodArg::Degree2 => {
            let degree = if args.method == MethodArg::Bic { RankDegree::Degree1 } else { RankDegree::Degree2 };
            let ntop = args.ntop.unwrap_or(NTop::All);
            config["n_top"] = ntop.as_option().map_or(json!("all"), |n| json!(n));
            config["sample_size"] = json!(sample_size_label(settings.sample_size));
            let space = space()?;
            if args.sweep {
                BootOutput::Sweep(ntop_sweep(table, &space, degree, ntop.as_option(), &cfg, &cache)?)
            } else {
                BootOutput::Single(restricted_bootstrap(table, &space, degree, ntop.as_option(), &cfg, &cache)?)
            }
        }
        MethodArg::Downhill => {
            let extra = args.starts.unwrap_or(0);
            let pairs = args.start_pairs.unwrap_or(t.min(t * (t - 1) / 2));
            config["starts"] = json!(extra);
            config["start_pairs"] = json!(pairs);
            config["sample_size"] = json!(sample_size_label(settings.sample_size));
            let starts = downhill_starts(t, extra, pairs, cfg.seed)?;
            config["start_models"] = json!(starts.iter().map(|m| m.to_string()).collect::<Vec<_>>());
            BootOutput::Single(downhill_bootstrap(table, l, &starts, &cfg, &cache)?)
        }
        MethodArg::Chisq => {
            let def = PWindow::default();
            let window = PWindow::new(args.p_lo.unwrap_or(def.lo), args.p_hi.unwrap_or(def.hi))?;
            config["p_window"] = json!([window.lo, window.hi]);
            BootOutput::Single(chisq_bootstrap(table, &space()?, window, &cfg, &cache)?)
        }
    };
    let elapsed = started.elapsed().as_secs_f64();

    Ok(match args.output.format {
        Format::Json => {
            let mut v = json!({ "dataset": d.summary(), "config": config });
            match &out {
                BootOutput::Single(r) => v["result"] = serde_json::to_value(r).unwrap(),
                BootOutput::Sweep(s) => v["sweep"] = serde_json::to_value(s).unwrap(),
            }
            if args.resample.timing {
                v["elapsed_seconds"] = json!(elapsed);
            }
            to_json(&v)
        }
        Format::Csv => {
            let rows = match &out {
                BootOutput::Single(r) => interval_rows(r),
                BootOutput::Sweep(s) => s.rows.iter().flat_map(interval_rows).collect(),
            };
            csv_string(
                &["n_top", "method", "level", "lower", "upper", "point_estimate", "used_replicates",
                  "excluded_replicates", "z0_hat", "a_hat"],
                rows,
            )?
        }
        Format::Text => {
            let (point, model) = match &out {
                BootOutput::Single(r) => (r.point_estimate, r.selected_model.clone()),
                BootOutput::Sweep(s) => (s.point_estimate, s.selected_model.clone()),
            };
            let mut s = format!("point estimate {point:.1} from model {model}\n");
            match &out {
                BootOutput::Single(r) => {
                    interval_text(r, &mut s);
                    if let Some(c) = &r.caveat {
                        let _ = writeln!(s, "caveat: {c}");
                    }
                }
                BootOutput::Sweep(sw) => sw.rows.iter().for_each(|r| interval_text(r, &mut s)),
            }
            let _ = writeln!(s, "{} replicates, seed {}, {elapsed:.2} s", cfg.reps, cfg.seed);
            s
        }
    })
}

pub fn diagnose_cmd(args: &DiagnoseArgs) -> CliResult<String> {
    let started = Instant::now();
    let d = load(&args.source)?;
    let t = d.t();
    let l = max_order(args.model_args.max_order, t)?;
    let settings = fit_settings(&args.model_args);
    if args.grid.contains(&0) {
        return Err(CliError::usage("--grid values must be positive"));
    }
    let cfg = boot_config(&args.resample, vec![0.95], settings, TieRule::Strict);
    let space = enumerate_models(t, l)?;
    let rep: DiagnosticsReport = diagnose(&d.dataset.table, &space, &args.grid, &cfg, &ExistenceCache::new())?;
    let elapsed = started.elapsed().as_secs_f64();
    Ok(match args.output.format {
        Format::Json => {
            let mut v = json!({
                "dataset": d.summary(),
                "config": {
                    "max_order": l,
                    "reps": cfg.reps,
                    "seed": cfg.seed,
                    "sample_size": sample_size_label(settings.sample_size),
                    "grid": args.grid,
                },
                "result": rep,
            });
            if args.resample.timing {
                v["elapsed_seconds"] = json!(elapsed);
            }
            to_json(&v)
        }
        Format::Csv => match args.table {
            DiagnoseTable::Containment => csv_string(
                &["n_top", "count", "reps"],
                rep.containment
                    .iter()
                    .map(|c| vec![c.n_top.to_string(), c.count.to_string(), rep.reps.to_string()])
                    .collect(),
            )?,
            DiagnoseTable::Replicates => csv_string(
                &["replicate", "rho", "m1", "m2"],
                (0..rep.reps)
                    .map(|i| {
                        vec![
                            i.to_string(),
                            fmt_opt(rep.rho[i]),
                            rep.m1[i].map(|v| v.to_string()).unwrap_or_default(),
                            rep.m2[i].map(|v| v.to_string()).unwrap_or_default(),
                        ]
                    })
                    .collect(),
            )?,
        },
        Format::Text => {
            let mut s = format!(
                "{} models, best {}; {} replicates, seed {}\n",
                rep.models, rep.selected_model, rep.reps, rep.seed
            );
            match rep.mean_rho {
                Some(r) => {
                    let _ = writeln!(s, "mean Spearman rho {r:.4} ({} replicates undefined)", rep.undefined_rho);
                }
                None => s.push_str("mean Spearman rho undefined\n"),
            }
            for c in &rep.containment {
                let _ = writeln!(s, "minimum within top {:>5}: {} of {}", c.n_top, c.count, rep.reps);
            }
            let _ = writeln!(s, "{elapsed:.2} s");
            s
        }
    })
}
