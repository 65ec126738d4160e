use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use chscale::analysis::{analyze_record, default_xi_grid, scaled_profile, AnalysisReport};
use chscale::config::RunConfig;
use chscale::frame::ratio_to_f64;
use chscale::record::{save_field, write_json, RunRecord};
use chscale::relevance::{classify_pde, predicted_rates, NonlinearTerm, RatePrediction};
use chscale::scaledflow::{integrate_scaled, ScaledState};
use chscale::simulator::{init_perturbation, integrate, RunFailure, RunResult};
use chscale::spectrum::{
    default_decay_range, eigenvalue, kernel_decay_fit, kernel_g, predicted_decay, profile_of_kind, a_of_tau,
    ProfileKind,
};
use chscale::{Error, Result};

use crate::output::{csv, field_csv, gnuplot_field, gnuplot_loglog, gnuplot_semilog, write_text, Staged};
use crate::{Cli, Command, Failure, SpectrumCommand};

const DEFAULT_OUT: &str = "chscale-out";

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let need = || cfg.as_ref().ok_or_else(|| Error::invalid("this subcommand needs --config"));
    let ctx = |cfg: Option<&RunConfig>| Context {
        out: cli
            .out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        gnuplot: cli.gnuplot,
    };
    match &cli.command {
        Command::Classify => classify(need()?, &ctx(cfg.as_ref())),
        Command::Spectrum(sub) => spectrum(sub, need()?, &ctx(cfg.as_ref())),
        Command::Simulate => simulate(need()?, &ctx(cfg.as_ref())),
        Command::Scaled => scaled(need()?, &ctx(cfg.as_ref())),
        Command::Analyze { run_dir } => analyze(run_dir, cfg.as_ref(), &ctx(cfg.as_ref())),
        Command::Scenario { name } => scenario(name, &ctx(cfg.as_ref())),
    }
}

struct Context {
    out: PathBuf,
    gnuplot: bool,
}

impl Context {
    /// Create the output directory; failures from here on leave an error
    /// report in it.
    fn open(&self) -> std::result::Result<&Path, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure {
            error: e.into(),
            out: None,
        })?;
        Ok(&self.out)
    }

    fn fail(&self, error: Error) -> Failure {
        Failure {
            error,
            out: Some(self.out.clone()),
        }
    }
}

fn term_label(t: &NonlinearTerm) -> String {
    let factors: Vec<String> = t
        .factors
        .iter()
        .map(|f| {
            let base = if f.alpha.degree() == 0 {
                "u".to_string()
            } else {
                format!("D{}u", f.alpha)
            };
            if f.power == 1 {
                base
            } else {
                format!("({base})^{}", f.power)
            }
        })
        .collect();
    format!("{} {}", t.coefficient, factors.join(" "))
}

fn prediction_text(p: &RatePrediction) -> String {
    match p {
        RatePrediction::Predicted {
            decay_exponent,
            remainder_exponent,
            frame,
        } => format!(
            "sup-norm ~ t^-{decay_exponent}, remainder ~ t^-({remainder_exponent} - eps), frame beta = {}",
            frame.beta
        ),
        RatePrediction::NoPrediction { reason } => format!("no prediction: {reason}"),
    }
}

fn classify(cfg: &RunConfig, ctx: &Context) -> std::result::Result<(), Failure> {
    let spec = cfg.require_spec()?;
    let report = classify_pde(spec)?;
    let prediction = predicted_rates(spec)?;
    let labels: Vec<String> = report.terms.iter().map(|t| term_label(&t.term)).collect();
    let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(4).max(4);
    let mut text = format!("n = {}, d = {}\n{:<width$}  {:>4}  {:>2}  label\n", report.n, report.d, "term", "p", "K");
    for (t, label) in report.terms.iter().zip(&labels) {
        let c = &t.classification;
        let _ = writeln!(text, "{label:<width$}  {:>4}  {:>2}  {}", c.p, c.total_power, c.label);
    }
    let _ = writeln!(text, "aggregate: {}", report.aggregate);
    let _ = writeln!(text, "{}", prediction_text(&prediction));
    let dir = ctx.open()?;
    let body = json!({"seed": cfg.seed, "classification": report, "prediction": prediction});
    write_json(&dir.join("classify.json"), &body).map_err(|e| ctx.fail(e))?;
    write_text(&dir.join("classify.txt"), &text).map_err(|e| ctx.fail(e))?;
    print!("{text}");
    Ok(())
}

fn spectrum(sub: &SpectrumCommand, cfg: &RunConfig, ctx: &Context) -> std::result::Result<(), Failure> {
    let frame = cfg.resolve_frame()?;
    let sc = cfg.spectrum.clone().unwrap_or_default();
    let (n, d) = (frame.n, frame.d);
    let meta = json!({"seed": cfg.seed, "frame": frame, "spectrum": sc});
    match sub {
        SpectrumCommand::Eig => {
            let rows: Vec<Value> = (0..=sc.max_index)
                .map(|j| {
                    let lam = eigenvalue(j, &frame);
                    // Number of multi-indices with |α| = j in d dimensions.
                    let mult = (1..d as u64).fold(1u64, |m, i| m * (j as u64 + i) / i);
                    json!({"j": j, "eigenvalue": lam.to_string(), "value": ratio_to_f64(lam), "multiplicity": mult})
                })
                .collect();
            let dir = ctx.open()?;
            let mut text = String::from("j  eigenvalue  multiplicity\n");
            for r in &rows {
                let _ = writeln!(text, "{:<2} {:>10}  {}", r["j"], r["eigenvalue"].as_str().unwrap_or(""), r["multiplicity"]);
            }
            write_json(&dir.join("eig.json"), &json!({"meta": meta, "eigenvalues": rows})).map_err(|e| ctx.fail(e))?;
            print!("{text}");
        }
        SpectrumCommand::Profile => {
            let grid = match sc.grid {
                Some(g) => g,
                None => default_xi_grid(d as usize)?,
            };
            if grid.dim != d as usize {
                return Err(Error::invalid("spectrum.grid dimension differs from the frame").into());
            }
            let kind = match sc.kind {
                Some(k) => k,
                None => ProfileKind::for_frame(&frame)?,
            };
            let dir = ctx.open()?;
            let p = profile_of_kind(kind, n, &grid, &sc.profile).map_err(|e| ctx.fail(e))?;
            let err = chscale::Field::from_fn(grid, |_| p.error_estimate);
            let table = field_csv(&["value", "error_estimate"], &[&p.field, &err]).map_err(|e| ctx.fail(e))?;
            write_text(&dir.join("profile.csv"), &table).map_err(|e| ctx.fail(e))?;
            let side = json!({"meta": meta, "kind": kind, "grid": grid, "tolerance": sc.profile.tolerance,
                "error_estimate": p.error_estimate, "sup_norm": p.field.sup_norm(), "integral": p.field.integral()});
            write_json(&dir.join("profile.json"), &side).map_err(|e| ctx.fail(e))?;
            if ctx.gnuplot {
                write_text(&dir.join("profile.gp"), &gnuplot_field("profile.csv", grid.dim, 1, "profile"))
                    .map_err(|e| ctx.fail(e))?;
            }
            println!("{}", serde_json::to_string_pretty(&side).unwrap_or_default());
        }
        SpectrumCommand::Kernel => {
            let dir = ctx.open()?;
            let mut rows = Vec::with_capacity(sc.z_points);
            for i in 0..sc.z_points {
                let z = sc.z_max * i as f64 / (sc.z_points - 1) as f64;
                let mut point = vec![0.0; d as usize];
                point[0] = z;
                let g = kernel_g(&point, sc.tau, n, d).map_err(|e| ctx.fail(e))?;
                rows.push(vec![z, g.value, g.error]);
            }
            write_text(&dir.join("kernel.csv"), &csv(&["z", "value", "error_estimate"], rows)).map_err(|e| ctx.fail(e))?;
            let (gamma, s) = predicted_decay(n, a_of_tau(sc.tau));
            let side = json!({"meta": meta, "tau": sc.tau, "a": a_of_tau(sc.tau),
                "predicted_decay": {"gamma": gamma, "exponent": s}});
            write_json(&dir.join("kernel.json"), &side).map_err(|e| ctx.fail(e))?;
            if ctx.gnuplot {
                write_text(&dir.join("kernel.gp"), &gnuplot_semilog("kernel.csv", "|g(z, tau)|")).map_err(|e| ctx.fail(e))?;
            }
            println!("{}", serde_json::to_string_pretty(&side).unwrap_or_default());
        }
        SpectrumCommand::DecayFit => {
            let range = sc.z_range.unwrap_or_else(|| default_decay_range(n, sc.tau));
            let dir = ctx.open()?;
            let fit = kernel_decay_fit(n, d, sc.tau, range).map_err(|e| ctx.fail(e))?;
            let (gamma, s) = predicted_decay(n, a_of_tau(sc.tau));
            let rows = fit.points.iter().map(|(z, g)| {
                vec![*z, *g, (fit.intercept - fit.gamma_hat * z.powf(fit.exponent_hat)).exp()]
            });
            write_text(&dir.join("decay_fit.csv"), &csv(&["z", "abs_g", "fit"], rows)).map_err(|e| ctx.fail(e))?;
            let side = json!({"meta": meta, "range": range, "exponent": fit.exponent_hat, "gamma": fit.gamma_hat,
                "intercept": fit.intercept, "r2": fit.r2, "samples": fit.samples,
                "predicted": {"exponent": s, "gamma": gamma},
                "relative_error": fit.exponent_hat / s - 1.0});
            write_json(&dir.join("decay_fit.json"), &side).map_err(|e| ctx.fail(e))?;
            if ctx.gnuplot {
                write_text(&dir.join("decay_fit.gp"), &gnuplot_semilog("decay_fit.csv", "kernel envelope"))
                    .map_err(|e| ctx.fail(e))?;
            }
            println!("{}", serde_json::to_string_pretty(&side).unwrap_or_default());
        }
    }
    Ok(())
}

/// Persist a finished or failed run under `<out>/run`.
fn persist(result: RunResult, cfg: &RunConfig, ctx: &Context) -> std::result::Result<(), Failure> {
    let dir = ctx.open()?.to_path_buf();
    let stage = Staged::new(&dir.join("run")).map_err(|e| ctx.fail(e))?;
    let tag = |mut r: RunRecord| {
        r.metadata["seed"] = json!(cfg.seed);
        r.metadata["config"] = serde_json::to_value(cfg).unwrap_or(Value::Null);
        r
    };
    match result {
        Ok(record) => {
            let record = tag(record);
            record.save(&stage.tmp).map_err(|e| ctx.fail(e))?;
            if ctx.gnuplot {
                write_text(
                    &stage.tmp.join("series.gp"),
                    &gnuplot_loglog("series.csv", record.columns.len(), "diagnostics"),
                )
                .map_err(|e| ctx.fail(e))?;
            }
            let path = stage.commit().map_err(|e| ctx.fail(e))?;
            let summary = json!({"status": "ok", "run_dir": path, "rows": record.rows.len(),
                "snapshots": record.snapshots.len(), "stats": record.metadata["stats"]});
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            Ok(())
        }
        Err(failure) => {
            let RunFailure {
                error,
                time,
                state,
                record,
            } = *failure;
            let record = tag(record);
            record.save(&stage.tmp).map_err(|e| ctx.fail(e))?;
            save_field(&stage.tmp.join("failure_state"), &state, time).map_err(|e| ctx.fail(e))?;
            stage.commit().map_err(|e| ctx.fail(e))?;
            Err(ctx.fail(error))
        }
    }
}

fn simulate(cfg: &RunConfig, ctx: &Context) -> std::result::Result<(), Failure> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::invalid("config lacks a 'simulate' section"))?;
    let eq = cfg.equation(&sim.grid, sim.nonlinearity.as_ref())?;
    let (w0, _) = init_perturbation(&sim.initial, &sim.grid)?;
    let result = integrate(&w0, eq.n, &eq.nonlinearity, &sim.integrator);
    // Configuration problems detected by the integrator leave no outputs.
    if let Err(f) = &result {
        if f.error.kind() == chscale::ErrorKind::Validation && f.record.rows.is_empty() {
            let RunFailure { error, .. } = *result.err().expect("checked");
            return Err(error.into());
        }
    }
    persist(result, cfg, ctx)
}

fn scaled(cfg: &RunConfig, ctx: &Context) -> std::result::Result<(), Failure> {
    let sc = cfg
        .scaled
        .as_ref()
        .ok_or_else(|| Error::invalid("config lacks a 'scaled' section"))?;
    let frame = cfg.resolve_frame()?;
    let eq = cfg.equation(&sc.grid, sc.nonlinearity.as_ref())?;
    if frame.n != eq.n || frame.d != eq.d {
        return Err(Error::invalid("frame (n, d) differs from the spec").into());
    }
    let (v0, _) = init_perturbation(&sc.initial, &sc.grid)?;
    let state = ScaledState::new(frame, sc.integrator.tau_start, v0)?;
    let result = integrate_scaled(&state, &eq.nonlinearity, &sc.integrator);
    if let Err(f) = &result {
        if f.error.kind() == chscale::ErrorKind::Validation && f.record.rows.is_empty() {
            let RunFailure { error, .. } = *result.err().expect("checked");
            return Err(error.into());
        }
    }
    persist(result, cfg, ctx)
}

fn analyze(run_dir: &Path, cfg: Option<&RunConfig>, ctx: &Context) -> std::result::Result<(), Failure> {
    if !run_dir.join("run.json").is_file() {
        return Err(Error::invalid(format!("{} is not a run directory", run_dir.display())).into());
    }
    let record = RunRecord::load(run_dir)?;
    let opts = cfg.and_then(|c| c.analyze.clone()).unwrap_or_default();
    let dir = ctx.open()?.to_path_buf();
    let report = analyze_record(&record, &opts).map_err(|e| ctx.fail(e))?;
    write_json(&dir.join("analysis.json"), &report).map_err(|e| ctx.fail(e))?;
    write_tables(&record, &report, &opts, &dir, ctx.gnuplot).map_err(|e| ctx.fail(e))?;
    for c in &report.checks {
        println!(
            "{} {}: measured {:.6e} (target {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.target
        );
    }
    if let RatePrediction::NoPrediction { reason } = &report.prediction {
        println!("no prediction: {reason}");
    }
    Ok(())
}

fn write_tables(
    record: &RunRecord,
    report: &AnalysisReport,
    opts: &chscale::analysis::AnalyzeOptions,
    dir: &Path,
    gnuplot: bool,
) -> Result<()> {
    let t = record.times();
    let sup = record.column("sup_norm")?;
    let l2 = record.column("l2_norm")?;
    let a = report.decay_sup.amplitude.unwrap_or(f64::NAN);
    let p = report.decay_sup.exponent.unwrap_or(f64::NAN);
    let rows = (0..t.len()).map(|i| vec![t[i], sup[i], l2[i], a * t[i].powf(p)]);
    write_text(&dir.join("decay.csv"), &csv(&["t", "sup_norm", "l2_norm", "fit_sup"], rows))?;
    let res = report.profile_residuals.iter().map(|(t, r)| vec![*t, *r]);
    write_text(&dir.join("profile_residuals.csv"), &csv(&["t", "residual"], res))?;
    let mut scripts = vec![("decay.gp", gnuplot_loglog("decay.csv", 4, "decay"))];
    if let (Some(frame), Some(time)) = (report.prediction.frame(), report.profile_time) {
        let snap = record
            .snapshot_near(time)
            .ok_or_else(|| Error::invalid("profile time without snapshot"))?;
        let xi = match opts.xi_grid {
            Some(g) => g,
            None => default_xi_grid(snap.field.grid.dim)?,
        };
        let reference = profile_of_kind(ProfileKind::for_frame(frame)?, frame.n, &xi, &Default::default())?.field;
        let v = scaled_profile(&snap.field, snap.time, frame, &xi)?;
        let b_hat = report.amplitude.as_ref().and_then(|f| f.amplitude).unwrap_or(f64::NAN);
        let b = report.predicted_amplitude.unwrap_or(b_hat);
        let fitted = reference.scaled(b_hat);
        let predicted = reference.scaled(b);
        let table = field_csv(&["scaled", "fitted", "predicted"], &[&v, &fitted, &predicted])?;
        write_text(&dir.join("profile.csv"), &table)?;
        scripts.push(("profile.gp", gnuplot_field("profile.csv", xi.dim, 3, "scaled profile")));
    }
    if gnuplot {
        for (name, text) in scripts {
            write_text(&dir.join(name), &text)?;
        }
    }
    Ok(())
}

fn scenario(name: &str, ctx: &Context) -> std::result::Result<(), Failure> {
    let dir = ctx.open()?.to_path_buf();
    let start = std::time::Instant::now();
    let report = chscale::scenario::run_scenario(name, Some(&dir)).map_err(|e| ctx.fail(e))?;
    for c in &report.checks {
        println!(
            "{} {name}/{}: measured {:.6e} (target {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.target
        );
    }
    println!(
        "{name}: {} in {:.1} s",
        if report.passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if ctx.gnuplot && dir.join("run/series.csv").is_file() {
        let cols = RunRecord::load(&dir.join("run")).map(|r| r.columns.len()).map_err(|e| ctx.fail(e))?;
        write_text(&dir.join("run/series.gp"), &gnuplot_loglog("series.csv", cols, name)).map_err(|e| ctx.fail(e))?;
    }
    Ok(())
}
