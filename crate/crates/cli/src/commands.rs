use std::io::Read as _;
use std::path::Path;

use meanfield::branch_tracer::{
    beta_derivatives, find_roots, sample_profile, trace_branches, BetaProfile, BranchRow, RootKind,
    SampleFailure, ScanWindow, TRIVIAL_TOL,
};
use meanfield::collocation::{degenerate_mode, linearized_spectrum, solve_bvp, CollocationProblem};
use meanfield::identity_validators::{validate, ValidationReport};
use meanfield::sphere_field::{
    gauss_curvature, gauss_curvature_from_equation, reconstruct_trajectory, total_curvature, SphereField,
    DEFAULT_THETA_NODES,
};
use meanfield::{integrate_radial, ProblemParams, ShootingConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BetaArgs, BifurcationArgs, CrosscheckArgs, Format, RootsArgs, ValidateArgs};
use crate::output::{self, num};
use crate::settings::{self, required, ConfigFile};
use crate::CliError;

/// Collocation and shooting must agree to this in sup-norm.
pub const CROSSCHECK_TOL: f64 = 1e-6;
/// Newton steps allowed when starting from a shooting solution.
pub const CROSSCHECK_MAX_ITER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Partial,
    Failed,
}

const PROFILE_HEADER: [&str; 4] = ["s", "beta", "d_beta", "dd_beta"];
const ROOT_HEADER: [&str; 4] = ["lambda", "s_root", "kind", "beta_slope"];
const FIELD_HEADER: [&str; 4] = ["theta", "u", "u_prime", "weight"];

fn params_json(command: &str, params: &ProblemParams, extra: Value) -> Value {
    let mut v = json!({
        "command": command,
        "lambda": params.lambda(),
        "l": params.l(),
        "alpha": params.alpha(),
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

fn field_csv(field: &SphereField) -> Result<Vec<u8>, CliError> {
    output::csv(&FIELD_HEADER, field.rows().map(|r| r.iter().map(|&x| num(x)).collect()))
}

fn root_rows<'a>(rows: impl IntoIterator<Item = &'a BranchRow>) -> Vec<Vec<String>> {
    rows.into_iter()
        .map(|r| vec![num(r.lambda), num(r.s_root), r.kind.as_str().into(), num(r.beta_slope)])
        .collect()
}

pub fn beta(args: &BetaArgs, file: &ConfigFile) -> Result<Status, CliError> {
    let params = ProblemParams::new(required("lambda", args.lambda, file.lambda)?)?;
    let window = settings::window(&args.scan, file);
    let config = settings::shooting(&args.shooting, file, ShootingConfig::default());
    let out = settings::output(&args.output, file, Format::Csv, &[Format::Csv, Format::Json])?;

    let profile = sample_profile(&params, &window, &config)?;
    let bytes = match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Sample {
                s: f64,
                beta: f64,
                d_beta: f64,
                dd_beta: f64,
            }
            let results: Vec<Sample> = (0..profile.samples.len())
                .map(|k| Sample {
                    s: profile.samples[k].0,
                    beta: profile.samples[k].1,
                    d_beta: profile.d_beta[k],
                    dd_beta: profile.dd_beta[k],
                })
                .collect();
            output::json(
                &params_json("beta", &params, json!({ "window": window, "shooting": config })),
                &results,
                &json!({ "failures": profile.failures }),
            )?
        }
        _ => output::csv(
            &PROFILE_HEADER,
            (0..profile.samples.len()).map(|k| {
                vec![
                    num(profile.samples[k].0),
                    num(profile.samples[k].1),
                    num(profile.d_beta[k]),
                    num(profile.dd_beta[k]),
                ]
            }),
        )?,
    };
    output::emit(out.path.as_deref(), &bytes)?;
    for f in &profile.failures {
        eprintln!("warning: beta({}) failed: {}", f.s, f.error);
    }
    Ok(if profile.is_complete() { Status::Success } else { Status::Partial })
}

/// Reads a `beta` CSV back into a profile. The grid is taken from the file.
fn read_profile(path: &Path, params: ProblemParams, config: ShootingConfig) -> Result<BetaProfile, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(e.to_string()))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let bad = |msg: String| CliError::Usage(format!("profile {}: {msg}", path.display()));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != PROFILE_HEADER {
        return Err(bad(format!("expected header {}", PROFILE_HEADER.join(","))));
    }
    let (mut samples, mut d_beta, mut dd_beta, mut failures) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| -> Result<f64, CliError> {
            record[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: cannot parse {:?}", line + 1, &record[k])))
        };
        let (s, b) = (field(0)?, field(1)?);
        if b.is_nan() {
            failures.push(SampleFailure { s, error: "missing in input profile".into() });
        }
        samples.push((s, b));
        d_beta.push(field(2)?);
        dd_beta.push(field(3)?);
    }
    if samples.len() < 2 {
        return Err(bad("needs at least two samples".into()));
    }
    let (s_min, s_max) = (samples[0].0, samples[samples.len() - 1].0);
    let window = ScanWindow {
        s_min,
        s_max,
        ds: (s_max - s_min) / (samples.len() - 1) as f64,
    };
    window.validate(&params)?;
    Ok(BetaProfile {
        params,
        config,
        window,
        samples,
        d_beta,
        dd_beta,
        failures,
    })
}

pub fn roots(args: &RootsArgs, file: &ConfigFile) -> Result<Status, CliError> {
    let params = ProblemParams::new(required("lambda", args.lambda, file.lambda)?)?;
    let config = settings::shooting(&args.shooting, file, ShootingConfig::default());
    config.validate()?;
    let out = settings::output(&args.output, file, Format::Json, &[Format::Json, Format::Csv])?;

    let profile = match &args.profile {
        Some(path) => read_profile(path, params, config)?,
        None => sample_profile(&params, &settings::window(&args.scan, file), &config)?,
    };
    let scan = match find_roots(&profile) {
        Ok(scan) => Some(scan),
        Err(meanfield::Error::IncompleteProfile(n)) => {
            eprintln!("warning: {n} profile samples failed; no roots certified");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let (roots, suspected) = scan.map(|s| (s.roots, s.suspected)).unwrap_or_default();
    let (d_beta, dd_beta) = beta_derivatives(&params, params.trivial_shot(), &config)?;

    let bytes = match out.format {
        Format::Csv => output::csv(
            &ROOT_HEADER,
            root_rows(&roots.iter().map(|r| BranchRow {
                lambda: params.lambda(),
                s_root: r.s_root,
                kind: r.kind,
                beta_slope: r.beta_slope,
            }).collect::<Vec<_>>()),
        )?,
        _ => output::json(
            &params_json(
                "roots",
                &params,
                json!({ "window": profile.window, "shooting": config }),
            ),
            &roots,
            &json!({
                "certified": roots.len(),
                "suspected": suspected,
                "failures": profile.failures,
                "trivial_shot": params.trivial_shot(),
                "d_beta_at_trivial": d_beta,
                "dd_beta_at_trivial": dd_beta,
            }),
        )?,
    };
    output::emit(out.path.as_deref(), &bytes)?;
    for t in &suspected {
        eprintln!("warning: suspected tangency near s = {} (|beta - 2 lambda| = {:.3e})", t.s, t.residual);
    }
    let certified = !roots.is_empty() && suspected.is_empty() && profile.is_complete();
    Ok(if certified { Status::Success } else { Status::Partial })
}

pub fn bifurcation(args: &BifurcationArgs, file: &ConfigFile) -> Result<Status, CliError> {
    let lambda_min = args.lambda_min.or(file.lambda_min).unwrap_or(4.0);
    let lambda_max = args.lambda_max.or(file.lambda_max).unwrap_or(8.0);
    let d_lambda = args.d_lambda.or(file.d_lambda).unwrap_or(0.25);
    let window = settings::window(&args.scan, file);
    let config = settings::shooting(&args.shooting, file, ShootingConfig::default());
    let out = settings::output(&args.output, file, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;

    let table = trace_branches(lambda_min, lambda_max, d_lambda, &window, &config)?;
    let svg = || output::svg_scatter(&table.rows, (lambda_min, lambda_max));
    let bytes = match out.format {
        Format::Svg => svg().into_bytes(),
        Format::Json => output::json(
            &json!({
                "command": "bifurcation",
                "lambda_min": lambda_min,
                "lambda_max": lambda_max,
                "d_lambda": d_lambda,
                "window": window,
                "shooting": config,
            }),
            &table.rows,
            &json!({
                "summaries": table.summaries,
                "degeneracy": table.diagnostics,
                "degeneracy_crossing": table.degeneracy_crossing(),
                "gaps": table.gaps,
            }),
        )?,
        Format::Csv => {
            let mut rows = root_rows(&table.rows);
            rows.extend(
                table
                    .gaps
                    .iter()
                    .map(|g| vec![num(g.lambda), num(f64::NAN), "gap".into(), num(f64::NAN)]),
            );
            output::csv(&ROOT_HEADER, rows)?
        }
    };
    output::emit(out.path.as_deref(), &bytes)?;
    if let Some(path) = &args.svg {
        output::emit(Some(path), svg().as_bytes())?;
    }
    for g in &table.gaps {
        eprintln!("warning: lambda = {}: {}", g.lambda, g.reason);
    }
    Ok(if table.is_complete() { Status::Success } else { Status::Partial })
}

fn render_report(report: &ValidationReport) {
    eprintln!("{:<18} {:>12} {:>10}  result", "check", "value", "tolerance");
    for c in &report.checks {
        eprintln!(
            "{:<18} {:>12.3e} {:>10.1e}  {}",
            c.name,
            c.value,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
}

fn sup_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn validate_cmd(args: &ValidateArgs, file: &ConfigFile) -> Result<Status, CliError> {
    let params = ProblemParams::new(required("lambda", args.lambda, file.lambda)?)?;
    let s_root = required("s_root", args.s_root, file.s_root)?;
    let n_theta = args.n_theta.or(file.n_theta).unwrap_or(DEFAULT_THETA_NODES);
    let config = settings::shooting(&args.shooting, file, ShootingConfig::for_reconstruction());
    config.validate()?;
    let out = settings::output(&args.output, file, Format::Json, &[Format::Json, Format::Csv])?;

    let solution = integrate_radial(&params, s_root, &config)?;
    let field = reconstruct_trajectory(&solution, n_theta)?;
    let report = validate(&field, format!("lambda={},s_root={}", params.lambda(), s_root));

    let bytes = match out.format {
        Format::Csv => field_csv(&field)?,
        _ => {
            let curvature = gauss_curvature(&field);
            let formula_gap = sup_abs(
                curvature
                    .iter()
                    .zip(gauss_curvature_from_equation(&field))
                    .map(|(a, b)| a - b),
            );
            let gauss_bonnet = total_curvature(&field, &curvature) / (4.0 * std::f64::consts::PI) - 1.0;
            let kind = if (s_root - params.trivial_shot()).abs() <= TRIVIAL_TOL {
                RootKind::Trivial
            } else {
                RootKind::Nonzero
            };
            output::json(
                &params_json(
                    "validate",
                    &params,
                    json!({ "s_root": s_root, "n_theta": n_theta, "shooting": config }),
                ),
                std::slice::from_ref(&report),
                &json!({
                    "passed": report.passed(),
                    "failure_margin": report.failure_margin(),
                    "kind": kind,
                    "beta": solution.beta,
                    "beta_minus_target": solution.beta - params.target_beta(),
                    "beta_gap": solution.beta_gap,
                    "equation_residual": field.equation_residual(),
                    "gauss_bonnet_residual": gauss_bonnet,
                    "curvature_formula_gap": formula_gap,
                    "sup_u": sup_abs(field.u_values.iter().copied()),
                }),
            )?
        }
    };
    output::emit(out.path.as_deref(), &bytes)?;
    render_report(&report);
    Ok(if report.passed() { Status::Success } else { Status::Failed })
}

pub fn crosscheck(args: &CrosscheckArgs, file: &ConfigFile) -> Result<Status, CliError> {
    if let Some(n_modes) = args.spectrum {
        return spectrum(args, file, n_modes);
    }
    let params = ProblemParams::new(required("lambda", args.lambda, file.lambda)?)?;
    let n_theta = args.n_theta.or(file.n_theta).unwrap_or(DEFAULT_THETA_NODES);
    let config = settings::shooting(&args.shooting, file, ShootingConfig::for_reconstruction());
    config.validate()?;
    let out = settings::output(&args.output, file, Format::Json, &[Format::Json, Format::Csv])?;

    let (guess_name, s_root, reference) = if args.zero_guess {
        ("zero", None, SphereField::zero(params, n_theta))
    } else {
        let s_root = args.s_root.or(file.s_root).ok_or_else(|| {
            CliError::Usage("--s-root or --zero-guess is required".into())
        })?;
        let solution = integrate_radial(&params, s_root, &config)?;
        ("shooting", Some(s_root), reconstruct_trajectory(&solution, n_theta)?)
    };
    let mut problem = CollocationProblem::from_field(&reference);
    if args.zero_guess {
        problem.max_iter = 50;
    } else {
        problem.max_iter = CROSSCHECK_MAX_ITER;
    }
    let solution = solve_bvp(&problem)?;
    let gap = sup_abs(
        solution
            .field
            .u_values
            .iter()
            .zip(&reference.u_values)
            .map(|(a, b)| a - b),
    );
    let sup_u = sup_abs(solution.field.u_values.iter().copied());
    let passed = gap <= CROSSCHECK_TOL;

    let bytes = match out.format {
        Format::Csv => field_csv(&solution.field)?,
        _ => output::json(
            &params_json(
                "crosscheck",
                &params,
                json!({ "guess": guess_name, "s_root": s_root, "n_theta": n_theta, "shooting": config }),
            ),
            &[json!({
                "guess": guess_name,
                "iterations": solution.iterations,
                "residual_history": solution.residual_history,
                "sup_gap": gap,
                "sup_u": sup_u,
                "passed": passed,
            })],
            &json!({
                "tolerance": CROSSCHECK_TOL,
                "max_iterations": problem.max_iter,
                "equation_residual": solution.field.equation_residual(),
            }),
        )?,
    };
    output::emit(out.path.as_deref(), &bytes)?;
    eprintln!(
        "{guess_name} guess: {} Newton steps, sup gap {gap:.3e}, sup |u| {sup_u:.3e}",
        solution.iterations
    );
    Ok(if passed { Status::Success } else { Status::Failed })
}

fn spectrum(args: &CrosscheckArgs, file: &ConfigFile, n_modes: usize) -> Result<Status, CliError> {
    let params = args
        .lambda
        .or(file.lambda)
        .map(ProblemParams::new)
        .transpose()?;
    let out = settings::output(&args.output, file, Format::Json, &[Format::Json])?;
    let eigenvalues = linearized_spectrum(n_modes)?;
    let results: Vec<Value> = eigenvalues
        .iter()
        .enumerate()
        .map(|(j, e)| json!({ "j": j, "eigenvalue": e, "exact": (j * (j + 1)) as f64 }))
        .collect();
    let degenerate = params.as_ref().and_then(|p| degenerate_mode(p, &eigenvalues));
    let mut base = json!({ "command": "crosscheck", "spectrum": n_modes });
    if let Some(p) = &params {
        base = params_json("crosscheck", p, json!({ "spectrum": n_modes }));
    }
    let bytes = output::json(&base, &results, &json!({ "degenerate_mode": degenerate }))?;
    output::emit(out.path.as_deref(), &bytes)?;
    let rounded: Vec<String> = eigenvalues
        .iter()
        .map(|&e| format!("{:.6}", if e.abs() < 1e-9 { 0.0 } else { e }))
        .collect();
    eprintln!("spectrum: {{{}}}", rounded.join(", "));
    if let Some(j) = degenerate {
        eprintln!("linearization at u = 0 is singular: lambda = j(j+1) with j = {j}");
    }
    Ok(Status::Success)
}
