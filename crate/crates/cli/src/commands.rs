use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use renewal_ldp::cgf::classify_domain;
use renewal_ldp::conditional::{conditional_mgf, ln_conditional_mgf, nested_integral, NestedMode};
use renewal_ldp::lambda::{hessian_origin, lambda_eval, lambda_grad, regularity_report};
use renewal_ldp::legendre::{poisson_g_curve, rate_ld, rate_ld_poisson, ScaledPoint};
use renewal_ldp::moderate::{
    correlation_limit, exact_moments, md_event_rate, CenteringMode, ModerateScaling,
};
use renewal_ldp::simulator::{
    default_workers, run_events, sample_passages, SimulationConfig, TailEvent,
};
use renewal_ldp::validation::{run_criterion, Effort, ValidationOptions, CRITERIA};
use renewal_ldp::{ExtReal, ModelKind, RateEvaluation, Tilt};
use serde_json::{json, Value};

use crate::{CenteringArg, CliError, Command, Format, ModeArg, RateMethodArg, TableFormat};

/// Seventeen significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn ext(v: ExtReal) -> String {
    match v {
        ExtReal::Finite(f) => num(f),
        ExtReal::PosInfinity => "inf".into(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn emit_json(out: Option<&Path>, mut body: Value) -> Result<(), CliError> {
    body["schema"] = json!("v1");
    let mut text =
        serde_json::to_string_pretty(&body).map_err(|e| CliError::Compute(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn workers(w: Option<usize>) -> Result<usize, CliError> {
    match w {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => Ok(w),
        None => Ok(default_workers()),
    }
}

/// Runs one subcommand. `Ok(false)` signals a failed validation.
pub fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Model { model, output } => {
            let cov = hessian_origin(&model);
            emit_json(
                output.out.as_deref(),
                json!({
                    "model": to_value(&model),
                    "descriptor": model.to_string(),
                    "mean": model.mean(),
                    "variance": model.variance(),
                    "domain": to_value(&classify_domain(&model)),
                    "regularity": to_value(&regularity_report(&model)),
                    "covariance": to_value(&cov),
                }),
            )?;
        }
        Command::Lambda {
            model,
            a1,
            a2,
            output,
        } => {
            let mut csv = String::from("a1,a2,value,grad1,grad2,finite\n");
            for &u in &a1.0 {
                for &v in &a2.0 {
                    let t = Tilt::new(u, v);
                    let value = lambda_eval(&model, t)?;
                    let grad = lambda_grad(&model, t).unwrap_or([f64::NAN; 2]);
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        num(u),
                        num(v),
                        ext(value),
                        num(grad[0]),
                        num(grad[1]),
                        value.is_finite()
                    );
                }
            }
            emit(output.out.as_deref(), &csv)?;
        }
        Command::Rate {
            model,
            z1,
            z2,
            grid,
            method,
            g_curve,
            points,
            format,
            output,
        } => {
            let out = output.out.as_deref();
            if g_curve {
                let (z1, z2) = z1
                    .zip(z2)
                    .ok_or_else(|| CliError::Usage("--g-curve needs --z1 and --z2".into()))?;
                let mut csv = String::from("alpha2,g,h\n");
                for p in poisson_g_curve(z1, z2, points)? {
                    let _ = writeln!(csv, "{},{},{}", num(p.a2), num(p.g), num(p.h));
                }
                return emit(out, &csv).map(|_| true);
            }
            let model = model.expect("required by the parser");
            let solve = |z: [f64; 2]| -> Result<RateEvaluation, CliError> {
                let z = ScaledPoint::new(z[0], z[1]);
                Ok(match method {
                    RateMethodArg::Auto => rate_ld(&model, z)?,
                    RateMethodArg::Poisson => match model.kind() {
                        ModelKind::Exponential { lambda } => rate_ld_poisson(lambda, z)?,
                        _ => {
                            return Err(CliError::Usage(
                                "--method poisson needs an exponential model".into(),
                            ))
                        }
                    },
                })
            };
            let pts = match (&grid, z1, z2) {
                (Some(g), _, _) => g.0.clone(),
                (None, Some(a), Some(b)) => vec![[a, b]],
                _ => return Err(CliError::Usage("give --z1 and --z2, or --grid".into())),
            };
            let evals = pts
                .iter()
                .map(|&z| solve(z))
                .collect::<Result<Vec<_>, _>>()?;
            match format {
                Format::Csv => {
                    let mut csv = String::from("z1,z2,value,a1,a2,converged,method,iterations\n");
                    for (z, r) in pts.iter().zip(&evals) {
                        let t = r.argmax_tilt.map(|t| [t.a1, t.a2]).unwrap_or([f64::NAN; 2]);
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{},{},{}",
                            num(z[0]),
                            num(z[1]),
                            ext(r.value),
                            num(t[0]),
                            num(t[1]),
                            r.converged,
                            to_value(&r.method).as_str().unwrap_or_default(),
                            r.iterations
                        );
                    }
                    emit(out, &csv)?;
                }
                Format::Json => {
                    let rows: Vec<Value> = pts
                        .iter()
                        .zip(&evals)
                        .map(|(z, r)| rate_json(*z, r))
                        .collect();
                    let body = if grid.is_some() {
                        json!({ "model": to_value(&model), "points": rows })
                    } else {
                        let mut row = rows.into_iter().next().expect("one point");
                        row["model"] = to_value(&model);
                        row
                    };
                    emit_json(out, body)?;
                }
            }
        }
        Command::Moderate {
            model,
            p,
            region,
            x_grid,
            output,
        } => {
            let scaling = ModerateScaling::power(p)?;
            scaling.validate_on(&x_grid.0)?;
            let rate = region.as_ref().map(|r| md_event_rate(&model, r));
            let mut rows = Vec::with_capacity(x_grid.0.len());
            for &x in &x_grid.0 {
                let speed = scaling.speed(x);
                let log_p = rate.map(|r| match r {
                    ExtReal::Finite(v) => json!(-v * speed),
                    ExtReal::PosInfinity => json!("-inf"),
                });
                rows.push(json!({
                    "x": x,
                    "a_x": scaling.a(x),
                    "multiplier": scaling.multiplier(x),
                    "predicted_log_probability": log_p,
                    "moments": to_value(&exact_moments(&model, x)?),
                    "correlation": to_value(&correlation_limit(&model, x)?),
                }));
            }
            emit_json(
                output.out.as_deref(),
                json!({
                    "model": to_value(&model),
                    "p": p,
                    "covariance": to_value(&hessian_origin(&model)),
                    "region": region.map(|r| r.to_string()),
                    "rate": rate.map(|r| to_value(&r)),
                    "rows": rows,
                }),
            )?;
        }
        Command::Simulate {
            model,
            x,
            n,
            seed,
            workers: w,
            event,
            centering,
            format,
            output,
        } => {
            let out = output.out.as_deref();
            let format = format.unwrap_or(if event.is_empty() {
                Format::Csv
            } else {
                Format::Json
            });
            let mut config = SimulationConfig::new(model, x, n, seed);
            config.workers = workers(w.workers)?;
            config.centering = match centering {
                CenteringArg::Theoretical => CenteringMode::Theoretical,
                CenteringArg::Expectation => CenteringMode::Expectation,
            };
            config.events = event
                .into_iter()
                .map(|region| TailEvent::Region { region })
                .collect();
            config.validate()?;
            match format {
                Format::Csv => {
                    if !config.events.is_empty() {
                        return Err(CliError::Usage("tail estimates are written as json".into()));
                    }
                    let mut csv = String::from("x,tau,area,n_terms\n");
                    for s in sample_passages(&model, x, n, seed)? {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{}",
                            num(x),
                            num(s.tau),
                            num(s.area),
                            s.n_terms
                        );
                    }
                    emit(out, &csv)?;
                }
                Format::Json => {
                    if config.events.is_empty() {
                        return Err(CliError::Usage(
                            "json output needs at least one --event".into(),
                        ));
                    }
                    let estimates = run_events(&config)?;
                    emit_json(
                        out,
                        json!({
                            "model": to_value(&model),
                            "x": x,
                            "n_samples": n,
                            "seed": seed,
                            "centering": to_value(&config.centering),
                            "estimates": to_value(&estimates),
                        }),
                    )?;
                }
            }
        }
        Command::Conditional {
            x,
            y,
            beta,
            mode,
            output,
        } => {
            let mode = match mode {
                ModeArg::ClosedForm => NestedMode::ClosedForm,
                ModeArg::BruteForce => NestedMode::BruteForce,
            };
            let nested = nested_integral(x, y, beta, mode)?;
            emit_json(
                output.out.as_deref(),
                json!({
                    "x": x,
                    "y": y,
                    "beta": beta,
                    "mode": to_value(&mode),
                    "nested_integral": nested,
                    "conditional_mgf": conditional_mgf(x, y, beta)?,
                    "ln_conditional_mgf": ln_conditional_mgf(x, y, beta)?,
                }),
            )?;
        }
        Command::Validate {
            quick,
            criterion,
            seed,
            workers: w,
            format,
            output,
        } => {
            let opts = ValidationOptions {
                effort: if quick { Effort::Quick } else { Effort::Full },
                workers: workers(w.workers)?,
                seed,
            };
            let ids = if criterion.is_empty() {
                (1..=CRITERIA.len()).collect()
            } else {
                criterion
            };
            if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
                return Err(CliError::Usage(format!("no criterion numbered {bad}")));
            }
            let outcomes: Vec<_> = ids.iter().map(|&id| run_criterion(id, &opts)).collect();
            let passed = outcomes.iter().filter(|o| o.passed).count();
            let all = passed == outcomes.len();
            match format {
                TableFormat::Table => {
                    let mut text = String::new();
                    for o in &outcomes {
                        let _ = writeln!(text, "{o}");
                    }
                    let _ = writeln!(text, "{passed} of {} criteria passed", outcomes.len());
                    emit(output.out.as_deref(), &text)?;
                }
                TableFormat::Json => emit_json(
                    output.out.as_deref(),
                    json!({
                        "effort": to_value(&opts.effort),
                        "seed": seed,
                        "outcomes": to_value(&outcomes),
                        "passed": all,
                    }),
                )?,
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn rate_json(z: [f64; 2], r: &RateEvaluation) -> Value {
    json!({
        "z1": z[0],
        "z2": z[1],
        "value": to_value(&r.value),
        "tilt": to_value(&r.argmax_tilt),
        "converged": r.converged,
        "method": to_value(&r.method),
        "iterations": r.iterations,
        "on_boundary": r.on_boundary,
    })
}
