use std::fs;
use std::path::Path;

use bn_ergodic::analysis::compare::{
    closed_form_error, heatmap_csv, panel, panel_csv, triangle_route, tv_distance_curve,
};
use bn_ergodic::analysis::conditions::geometric_samples;
use bn_ergodic::analysis::fit::{default_window, fit_constant, fit_power_law};
use bn_ergodic::analysis::{check_conditions, compare_rows};
use bn_ergodic::beta_binomial::{
    beta_binomial_row, beta_binomial_row_exact, beta_binomial_table, Beta,
};
use bn_ergodic::bn_coeffs::{bn_row_recursive, bn_row_recursive_exact, bn_rows, Alpha};
use bn_ergodic::ergodic::{
    bn_iterate, cesaro_iterate, cesaro_table, equivalence_check, Checkpoints, Diagnostic,
    IterateOptions, IterationTrace,
};
use bn_ergodic::exact::{format_rational, from_int, parse_rational, to_f64, Rational};
use bn_ergodic::linalg::{norm, unit};
use bn_ergodic::operators::{
    fixed_point_projector, BuiltinOperator, FixedPointProjector, OperatorModel, OperatorSpec,
};
use bn_ergodic::table::{format_f64, CoefficientTable, TableKind};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{slug, Run};
use crate::{
    CoeffsArgs, CompareArgs, ConditionsArgs, EquivalenceArgs, Figure, FiguresArgs, IterateArgs,
    OperatorArgs,
};

/// Default dimension for a built-in without one of its own.
const IDENTITY_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Bn,
    BetaBin,
    Cesaro,
}

impl Kind {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "bn" => Ok(Kind::Bn),
            "betabin" => Ok(Kind::BetaBin),
            "cesaro" => Ok(Kind::Cesaro),
            _ => Err(CliError::usage(format!(
                "unknown table kind `{s}` (expected bn, betabin or cesaro)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Bn => "bn",
            Kind::BetaBin => "betabin",
            Kind::Cesaro => "cesaro",
        }
    }
}

/// Accepts decimals as well as `p/q`.
fn parse_real(s: &str) -> Result<f64, CliError> {
    if s.contains('/') {
        return Ok(to_f64(&parse_rational(s)?));
    }
    s.parse()
        .map_err(|_| CliError::usage(format!("not a number: `{s}`")))
}

fn parse_index(s: &str, what: &str) -> Result<usize, CliError> {
    s.parse()
        .map_err(|_| CliError::usage(format!("{what} must be a nonnegative integer (got `{s}`)")))
}

fn generate(kind: Kind, param: &str, n_max: usize) -> Result<CoefficientTable, CliError> {
    Ok(match kind {
        Kind::Bn => bn_row_recursive(Alpha::new(parse_real(param)?)?, n_max),
        Kind::BetaBin => beta_binomial_table(Beta::new(parse_real(param)?)?, n_max),
        Kind::Cesaro => cesaro_table(n_max),
    })
}

fn generate_exact(kind: Kind, param: &str, n_max: usize) -> Result<Vec<Vec<Rational>>, CliError> {
    let rational = || {
        parse_rational(param).map_err(|_| {
            CliError::usage(format!(
                "--exact needs an integer or p/q parameter (got `{param}`)"
            ))
        })
    };
    Ok(match kind {
        Kind::Bn => bn_row_recursive_exact(&rational()?, n_max)?.rows,
        Kind::BetaBin => {
            let b = rational()?;
            (0..=n_max)
                .map(|n| beta_binomial_row_exact(&b, n))
                .collect::<Result<_, _>>()?
        }
        Kind::Cesaro => (0..=n_max)
            .map(|n| vec![from_int(1) / from_int(n as i64 + 1); n + 1])
            .collect(),
    })
}

fn exact_csv(rows: &[Vec<Rational>]) -> String {
    let mut out = String::from("n,k,value\n");
    for (n, row) in rows.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            out.push_str(&format!("{n},{k},{}\n", format_rational(v)));
        }
    }
    out
}

pub fn coeffs(out_dir: &Path, args: &CoeffsArgs) -> Result<(), CliError> {
    let mut pos = args.positional.iter().map(String::as_str);
    let kind = Kind::parse(pos.next().unwrap_or_default())?;
    let param = match kind {
        Kind::Cesaro => None,
        _ => Some(
            pos.next()
                .ok_or_else(|| CliError::usage(format!("{} needs a parameter", kind.name())))?,
        ),
    };
    let n_max = parse_index(
        pos.next().ok_or_else(|| CliError::usage("missing n_max"))?,
        "n_max",
    )?;
    let format = pos.next().unwrap_or("csv");
    if !matches!(format, "csv" | "json") {
        return Err(CliError::usage(format!(
            "unknown format `{format}` (csv or json)"
        )));
    }
    if let Some(extra) = pos.next() {
        return Err(CliError::usage(format!("unexpected argument `{extra}`")));
    }

    let mut stem = format!("coeffs_{}", kind.name());
    if let Some(p) = param {
        stem.push('_');
        stem.push_str(&slug(p));
    }
    stem.push_str(&format!("_{n_max}"));
    if args.exact {
        stem.push_str("_exact");
    }

    let mut run = Run::new(out_dir, "coeffs")?;
    run.param("kind", kind.name());
    run.param("param", param);
    run.param("n_max", n_max);
    run.param("format", format);
    run.param("exact", args.exact);

    let body = if args.exact {
        let p = param.unwrap_or("1");
        let rows = generate_exact(kind, p, n_max)?;
        if format == "csv" {
            exact_csv(&rows)
        } else {
            let rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().map(format_rational).collect())
                .collect();
            let doc = json!({
                "kind": kind.name(),
                "param": param,
                "exact": true,
                "n_max": n_max,
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    } else {
        let table = generate(kind, param.unwrap_or("0"), n_max)?;
        if format == "csv" {
            table.to_csv()
        } else {
            table.to_json()? + "\n"
        }
    };
    let file = format!("{stem}.{format}");
    let path = run.write(&file, &body)?;
    run.finish(&stem)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_table(path: &Path) -> Result<CoefficientTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let malformed = |e: bn_ergodic::Error| {
        CliError::usage(format!("malformed table file {}: {e}", path.display()))
    };
    if text.trim_start().starts_with('{') {
        CoefficientTable::from_json(&text).map_err(malformed)
    } else {
        let label = path
            .file_stem()
            .map_or("table".to_string(), |s| s.to_string_lossy().into_owned());
        CoefficientTable::from_csv(&text, TableKind::Custom { label }).map_err(malformed)
    }
}

pub fn conditions(out_dir: &Path, args: &ConditionsArgs) -> Result<(), CliError> {
    let mut run = Run::new(out_dir, "conditions")?;
    let (table, stem) = match &args.table {
        Some(path) => {
            run.param("table", path.display().to_string());
            let stem = path
                .file_stem()
                .map_or("table".to_string(), |s| slug(&s.to_string_lossy()));
            (load_table(path)?, format!("conditions_{stem}"))
        }
        None => {
            let kind = Kind::parse(&args.kind)?;
            run.param("kind", kind.name());
            run.param("n", args.n);
            let stem = if kind == Kind::Cesaro {
                format!("conditions_cesaro_{}", args.n)
            } else {
                run.param("param", &args.param);
                format!(
                    "conditions_{}_{}_{}",
                    kind.name(),
                    slug(&args.param),
                    args.n
                )
            };
            (generate(kind, &args.param, args.n)?, stem)
        }
    };
    let ns = if args.n_samples.is_empty() {
        geometric_samples(table.n_max)
    } else {
        args.n_samples.clone()
    };
    let ks = if args.k_samples.is_empty() {
        let mut ks = vec![0];
        if table.n_max >= 2 {
            ks.extend(geometric_samples(table.n_max / 2));
        }
        ks
    } else {
        args.k_samples.clone()
    };
    run.param("n_samples", &ns);
    run.param("k_samples", &ks);

    let report = check_conditions(&table, &ns, &ks);
    println!("{} (n_max = {})", report.table, report.n_max);
    for line in report.verdict_lines() {
        println!("{line}");
    }
    let path = run.write_json(&format!("{stem}.json"), &report)?;
    run.finish(&stem)?;
    println!("wrote {}", path.display());
    Ok(())
}

struct ResolvedOperator {
    op: OperatorModel,
    name: String,
    seed: Option<u64>,
}

fn resolve_operator(args: &OperatorArgs, n_max: usize) -> Result<ResolvedOperator, CliError> {
    let requested = match args.dim.as_str() {
        "auto" => None,
        d => Some(parse_index(d, "--dim")?),
    };
    if let Ok(builtin) = args.operator.parse::<BuiltinOperator>() {
        let dim = match (builtin.fixed_dim(), requested) {
            (Some(f), Some(d)) if f != d => {
                return Err(CliError::usage(format!(
                    "`{}` has dimension {f}, but --dim {d} was given",
                    args.operator
                )))
            }
            (Some(f), _) => f,
            (None, Some(d)) => d,
            (None, None) => match builtin {
                // d = n + 2 keeps every iterate inside the truncation
                BuiltinOperator::Shift => n_max + 2,
                _ => IDENTITY_DIM,
            },
        };
        return Ok(ResolvedOperator {
            op: builtin.build(dim)?,
            name: slug(&args.operator),
            seed: builtin.seed(),
        });
    }
    let path = Path::new(&args.operator);
    if !path.exists() {
        return Err(CliError::usage(format!(
            "`{}` is neither a built-in operator nor an existing file",
            args.operator
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: OperatorSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed operator file {}: {e}", path.display())))?;
    let op = OperatorModel::from_spec(&spec)?;
    if let Some(d) = requested {
        if d != op.dim() {
            return Err(CliError::usage(format!(
                "operator file has dimension {}, but --dim {d} was given",
                op.dim()
            )));
        }
    }
    let name = path
        .file_stem()
        .map_or("operator".to_string(), |s| slug(&s.to_string_lossy()));
    Ok(ResolvedOperator {
        op,
        name,
        seed: None,
    })
}

fn parse_x0(spec: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    if spec == "ones" {
        return Ok(vec![1.0; dim]);
    }
    if let Some(k) = spec.strip_prefix('e').and_then(|k| k.parse::<usize>().ok()) {
        if k == 0 || k > dim {
            return Err(CliError::usage(format!("--x0 e{k} is outside 1..={dim}")));
        }
        return Ok(unit(dim, k - 1));
    }
    let v: Vec<f64> = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("bad --x0 `{spec}`")))?;
    if v.len() != dim {
        return Err(CliError::usage(format!(
            "--x0 has {} entries, operator dimension is {dim}",
            v.len()
        )));
    }
    Ok(v)
}

fn parse_window(s: &str) -> Result<(usize, usize), CliError> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("--window must be lo:hi (got `{s}`)")))?;
    Ok((
        parse_index(lo, "window start")?,
        parse_index(hi, "window end")?,
    ))
}

/// Free fit plus constants with the exponent held at the expected value.
fn fits_json(
    trace: &IterationTrace,
    window: (usize, usize),
    pinned: &[(Diagnostic, f64)],
) -> Value {
    let mut fits = serde_json::Map::new();
    for diag in Diagnostic::ALL {
        let series = trace.series(diag);
        if series.is_empty() {
            continue;
        }
        let mut entry = serde_json::Map::new();
        match fit_power_law(&series, window) {
            Ok(f) => entry.insert("fit".into(), json!(f)),
            Err(e) => entry.insert("fit_error".into(), json!(e.to_string())),
        };
        if let Some(&(_, p)) = pinned.iter().find(|(d, _)| *d == diag) {
            let c = match fit_constant(&series, window, p) {
                Ok(c) => json!({ "exponent": p, "constant": c }),
                Err(e) => json!({ "exponent": p, "error": e.to_string() }),
            };
            entry.insert("pinned".into(), c);
        }
        if let Some(&(n, v)) = series.last() {
            entry.insert("terminal".into(), json!({ "n": n, "value": v }));
        }
        fits.insert(diag.name().into(), Value::Object(entry));
    }
    Value::Object(fits)
}

fn projection_json(
    proj: &FixedPointProjector,
    x0: &[f64],
    trace: &IterationTrace,
) -> Result<Value, CliError> {
    let target = proj.project(x0)?;
    let terminal = trace.points.last().and_then(|p| p.dist_sq).map(f64::sqrt);
    let fejer = trace.fejer.map(|f| {
        json!({
            "initial": f.initial,
            "max": f.max,
            "argmax": f.argmax,
            "holds": f.holds(1e-9 * (1.0 + norm(x0))),
        })
    });
    // long projections (shift) are summarised by their norm only
    let projection = if target.len() <= 64 {
        json!(target)
    } else {
        Value::Null
    };
    Ok(json!({
        "status": proj.status,
        "rank": proj.rank(),
        "projection": projection,
        "projection_norm": norm(&target),
        "terminal_distance": terminal,
        "fejer": fejer,
    }))
}

pub fn iterate(out_dir: &Path, args: &IterateArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let alpha = Alpha::new(args.op.alpha)?;
    let resolved = resolve_operator(&args.op, args.n)?;
    let op = &resolved.op;
    let x0 = parse_x0(&args.op.x0, op.dim())?;
    let step = (args.n / 100).max(1);
    let options = IterateOptions {
        checkpoints: Checkpoints::Geometric {
            extras: (step..=args.n).step_by(step).collect(),
        },
        projector: Some(fixed_point_projector(op)),
        store_vectors: false,
    };
    let trace = bn_iterate(op, &x0, alpha, args.n, &options)?;
    let window = match &args.window {
        Some(w) => parse_window(w)?,
        None => default_window(&trace),
    };

    let stem = format!(
        "iterate_{}_a{}_n{}",
        resolved.name,
        slug(&format_f64(args.op.alpha)),
        args.n
    );
    let mut run = Run::new(out_dir, "iterate")?;
    run.param("operator", &args.op.operator);
    run.param("dim", op.dim());
    run.param("alpha", args.op.alpha);
    run.param("n", args.n);
    run.param("x0", &args.op.x0);
    run.param("window", window);
    run.param("cesaro", args.cesaro);
    run.seed(resolved.seed);

    let proj = options.projector.as_ref().expect("projector set above");
    let mut report = json!({
        "operator": args.op.operator,
        "dim": op.dim(),
        "alpha": args.op.alpha,
        "n": args.n,
        "x0": args.op.x0,
        "window": window,
        "bn": fits_json(
            &trace,
            window,
            &[(Diagnostic::NormSq, -1.0), (Diagnostic::VelSq, -3.0), (Diagnostic::ResSq, -3.0)],
        ),
        "fixed_point": projection_json(proj, &x0, &trace)?,
    });
    run.write(&format!("{stem}.csv"), &trace.to_csv())?;

    if args.cesaro {
        let ces = cesaro_iterate(op, &x0, args.n, &options)?;
        report["cesaro"] = fits_json(
            &ces,
            window,
            &[(Diagnostic::NormSq, -1.0), (Diagnostic::ResSq, -2.0)],
        );
        report["cesaro_fixed_point"] = projection_json(proj, &x0, &ces)?;
        run.write(&format!("{stem}_cesaro.csv"), &ces.to_csv())?;
    }
    let path = run.write_json(&format!("{stem}_fits.json"), &report)?;
    run.finish(&stem)?;

    for diag in [Diagnostic::NormSq, Diagnostic::VelSq, Diagnostic::ResSq] {
        if let Some(c) = report["bn"][diag.name()]["pinned"]["constant"].as_f64() {
            let p = report["bn"][diag.name()]["pinned"]["exponent"]
                .as_f64()
                .unwrap_or(0.0);
            println!("{:<8} ~ {c:.6} * n^{p}", diag.name());
        }
    }
    if let Some(d) = report["fixed_point"]["terminal_distance"].as_f64() {
        println!("distance to projection at n = {}: {d:.3e}", args.n);
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn equivalence(out_dir: &Path, args: &EquivalenceArgs) -> Result<(), CliError> {
    let alpha = Alpha::new(args.op.alpha)?;
    let resolved = resolve_operator(&args.op, args.n)?;
    let x0 = parse_x0(&args.op.x0, resolved.op.dim())?;
    let eq = equivalence_check(&resolved.op, &x0, alpha, args.n)?;

    let stem = format!(
        "equivalence_{}_a{}_n{}",
        resolved.name,
        slug(&format_f64(args.op.alpha)),
        args.n
    );
    let mut run = Run::new(out_dir, "equivalence")?;
    run.param("operator", &args.op.operator);
    run.param("dim", resolved.op.dim());
    run.param("alpha", args.op.alpha);
    run.param("n", args.n);
    run.param("x0", &args.op.x0);
    run.seed(resolved.seed);
    let doc = json!({
        "max_deviation": eq.max_deviation,
        "at_n": eq.at_n,
        "tolerance": eq.tolerance,
        "passes": eq.passes(),
    });
    let path = run.write_json(&format!("{stem}.json"), &doc)?;
    run.finish(&stem)?;
    println!(
        "max deviation {:.3e} at n = {} (tolerance {:.1e})",
        eq.max_deviation, eq.at_n, eq.tolerance
    );
    println!("wrote {}", path.display());
    if !eq.passes() {
        return Err(CliError::ContractFailed(
            "iteration and coefficient expansion disagree beyond tolerance".into(),
        ));
    }
    Ok(())
}

pub fn compare(out_dir: &Path, args: &CompareArgs) -> Result<(), CliError> {
    let alpha = Alpha::new(args.alpha)?;
    let beta = Beta::new(args.beta)?;
    let mut ns = args.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let n_max = ns.last().copied().unwrap_or(0);
    let closed = args.alpha == 4.0 && args.beta == 2.0;

    let mut csv = String::from("n,tv,max_abs,argmax,delta0,lorentz_bn,triangle_rhs");
    csv.push_str(if closed { ",closed_form_error\n" } else { "\n" });
    for (n, c) in bn_rows(alpha).take(n_max + 1).enumerate() {
        if ns.binary_search(&n).is_err() {
            continue;
        }
        let b = beta_binomial_row(beta, n).values;
        let cmp = compare_rows(&c, &b, n)?;
        let tri = triangle_route(&c, &b, n)?;
        csv.push_str(&format!(
            "{n},{},{},{},{},{},{}",
            format_f64(cmp.tv),
            format_f64(cmp.max_abs),
            cmp.argmax,
            format_f64(cmp.delta[0]),
            format_f64(tri.lorentz_bn),
            format_f64(tri.rhs),
        ));
        if closed {
            csv.push_str(&format!(",{}", format_f64(closed_form_error(&cmp))));
        }
        csv.push('\n');
    }

    let stem = format!(
        "compare_a{}_b{}",
        slug(&format_f64(args.alpha)),
        slug(&format_f64(args.beta))
    );
    let mut run = Run::new(out_dir, "compare")?;
    run.param("alpha", args.alpha);
    run.param("beta", args.beta);
    run.param("n", &ns);
    print!("{csv}");
    run.write(&format!("{stem}.csv"), &csv)?;
    run.finish(&stem)?;
    Ok(())
}

pub fn figures(out_dir: &Path, args: &FiguresArgs) -> Result<(), CliError> {
    let alpha = Alpha::new(args.alpha)?;
    let beta = Beta::new(args.beta)?;
    if (args.beta - args.alpha / 2.0).abs() > 1e-12 {
        eprintln!(
            "warning: beta = {} differs from alpha/2 = {}; the pairing is unmatched",
            args.beta,
            args.alpha / 2.0
        );
    }
    let tag = format!(
        "a{}_b{}",
        slug(&format_f64(args.alpha)),
        slug(&format_f64(args.beta))
    );
    let mut run = Run::new(out_dir, "figures")?;
    run.param("alpha", args.alpha);
    run.param("beta", args.beta);
    let stem = match args.which {
        Figure::Panel => {
            let mut ns = args.n.clone();
            ns.sort_unstable();
            ns.dedup();
            run.param("which", "panel");
            run.param("n", &ns);
            let stem = format!("figure_panel_{tag}");
            run.write(&format!("{stem}.csv"), &panel_csv(&panel(alpha, beta, &ns)))?;
            stem
        }
        Figure::Heatmap => {
            let n_max = args.n_max.unwrap_or(220);
            run.param("which", "heatmap");
            run.param("n_max", n_max);
            let stem = format!("figure_heatmap_{tag}_n{n_max}");
            run.write(&format!("{stem}.csv"), &heatmap_csv(alpha, beta, n_max))?;
            stem
        }
        Figure::Loglog => {
            let n_max = args.n_max.unwrap_or(2000);
            run.param("which", "loglog");
            run.param("n_max", n_max);
            let curve = tv_distance_curve(alpha, beta, n_max)?;
            let window = ((n_max / 20).max(1), n_max);
            let fit = fit_power_law(&curve.series(), window);
            let stem = format!("figure_loglog_{tag}_n{n_max}");
            run.write(&format!("{stem}.csv"), &curve.to_csv())?;
            let fit = match fit {
                Ok(f) => {
                    println!("slope {:.4} on [{}, {}]", f.exponent, window.0, window.1);
                    json!(f)
                }
                Err(e) => json!({ "error": e.to_string() }),
            };
            let doc = json!({
                "label": curve.label,
                "alpha": curve.alpha,
                "beta": curve.beta,
                "matched": curve.matched,
                "fit": fit,
            });
            run.write_json(&format!("{stem}.json"), &doc)?;
            stem
        }
    };
    run.finish(&stem)?;
    println!("wrote {}", out_dir.join(format!("{stem}.csv")).display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x0_specs() {
        assert_eq!(parse_x0("e2", 3).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(parse_x0("ones", 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(parse_x0("1, -2.5", 2).unwrap(), vec![1.0, -2.5]);
        assert!(parse_x0("e0", 3).is_err());
        assert!(parse_x0("e4", 3).is_err());
        assert!(parse_x0("1,2", 3).is_err());
    }

    #[test]
    fn windows_and_reals() {
        assert_eq!(parse_window("10:200").unwrap(), (10, 200));
        assert!(parse_window("10-200").is_err());
        assert_eq!(parse_real("7/2").unwrap(), 3.5);
        assert_eq!(parse_real("2.5").unwrap(), 2.5);
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn shift_dimension_follows_run_length() {
        let args = OperatorArgs {
            operator: "shift".into(),
            dim: "auto".into(),
            x0: "e1".into(),
            alpha: 4.0,
        };
        assert_eq!(resolve_operator(&args, 50).unwrap().op.dim(), 52);
        let args = OperatorArgs {
            operator: "identity".into(),
            ..args
        };
        assert_eq!(resolve_operator(&args, 50).unwrap().op.dim(), IDENTITY_DIM);
    }

    #[test]
    fn exact_cesaro_rows() {
        let rows = generate_exact(Kind::Cesaro, "1", 2).unwrap();
        assert_eq!(
            exact_csv(&rows),
            "n,k,value\n0,0,1\n1,0,1/2\n1,1,1/2\n2,0,1/3\n2,1,1/3\n2,2,1/3\n"
        );
    }
}
