use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use opa_lab::dynamics::{
    export_cobweb, iterate_orbit, Branch, BranchPolicy, PhiPsiParams, DEFAULT_BUDGET,
};
use opa_lab::extra_zero::DEFAULT_CAP;
use opa_lab::records::{exclusion_csv, extremal_csv, fmt_float, tau_csv, to_json};
use opa_lab::reference::{EXCLUSION, TAU};
use opa_lab::{
    check_precision, direct_maximize_t, exclusion_radius, find_min_k_extra_zero, run_verify,
    solve_linear_opa, solve_opa, solve_tau, solve_tdp_chain, ExclusionRecord, ExtremalConfig,
    ExtremalRecord, OpaRecord, PNorm, RealPoly, SolverConfig, TauRecord, VerifyConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Opa,
    Extremal,
    Tau,
    Exclusion,
    Examples,
    Orbit,
    Verify,
    Tables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Exhaustive,
    Left,
    Middle,
    Right,
}

/// Optimal polynomial approximants in l^p_A: approximants, extremal
/// constants, the Phi/Psi recurrence and the critical radius.
///
/// Coefficients for `opa` go after `--` so that negative values parse, e.g.
/// `opa-lab opa --p 4 -- 1 -0.5 0.25 --degree 2`.
#[derive(Debug, Parser)]
#[command(name = "opa-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Option<Command>,

    /// Alternative to the positional command.
    #[arg(long = "command", value_enum, conflicts_with = "command")]
    command_flag: Option<Command>,

    /// Exponent(s), comma separated or repeated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p: Vec<f64>,

    /// Degree `d` or a range such as `2..6`.
    #[arg(long)]
    d: Option<String>,

    /// Approximant degree for `opa`.
    #[arg(long)]
    degree: Option<usize>,

    #[arg(long)]
    tol: Option<f64>,

    /// Working precision for extremal systems of degree above 12.
    #[arg(long, env = "OPA_LAB_PRECISION_BITS", default_value_t = 256)]
    precision_bits: u32,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Output file; a directory for `tables`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Maximum number of orbit steps.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,

    /// Multi-start restarts for the direct maximisation cross-check (0 skips it).
    #[arg(long, default_value_t = 0)]
    restarts: usize,

    /// Orbit parameter `t`; defaults to `T_{d,p}` when `--d` is given.
    #[arg(long)]
    t: Option<f64>,

    /// Orbit start; defaults to `p t`.
    #[arg(long)]
    x1: Option<f64>,

    #[arg(long, value_enum, default_value_t = Policy::Exhaustive)]
    branch: Policy,

    /// Write the Phi/Psi curve samples of an orbit to this CSV file.
    #[arg(long)]
    curves: Option<PathBuf>,

    /// Search cap for `examples`.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,

    #[arg(long, default_value_t = 2024)]
    seed: u64,

    /// Polynomial coefficients `a_0 a_1 ...` for `opa`.
    #[arg(last = true, allow_hyphen_values = true)]
    coeffs: Vec<String>,
}

enum Failure {
    Usage(String),
    Solver(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Solver(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn exponents(cli: &Cli, default: &[f64]) -> Result<Vec<PNorm>, Failure> {
    let ps = if cli.p.is_empty() {
        default.to_vec()
    } else {
        cli.p.clone()
    };
    ps.into_iter()
        .map(|p| PNorm::new(p).map_err(|e| usage(e.to_string())))
        .collect()
}

fn single_p(cli: &Cli) -> Result<PNorm, Failure> {
    match cli.p.as_slice() {
        [p] => PNorm::new(*p).map_err(|e| usage(e.to_string())),
        [] => Err(usage("--p is required")),
        _ => Err(usage("this command takes a single --p")),
    }
}

fn degrees(cli: &Cli, default: (usize, usize)) -> Result<(usize, usize), Failure> {
    let Some(s) = cli.d.as_deref() else {
        return Ok(default);
    };
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("bad --d value {s:?}")))
    };
    let (lo, hi) = if let Some((a, b)) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'))
    {
        (parse(a)?, parse(b)?)
    } else {
        let d = parse(s)?;
        (d, d)
    };
    if lo < 2 || hi < lo {
        return Err(usage(format!(
            "--d must be a degree >= 2 or a non-empty range, got {s:?}"
        )));
    }
    Ok((lo, hi))
}

fn solver_config(cli: &Cli) -> SolverConfig {
    SolverConfig {
        tol: cli.tol.unwrap_or(SolverConfig::default().tol),
        ..SolverConfig::default()
    }
}

fn extremal_config(cli: &Cli) -> ExtremalConfig {
    ExtremalConfig {
        precision_bits: cli.precision_bits,
        ..ExtremalConfig::default()
    }
}

fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_lines<T: serde::Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&to_json(r)?);
        s.push('\n');
    }
    Ok(s)
}

fn cmd_opa(cli: &Cli) -> Outcome {
    let p = single_p(cli)?;
    // `--degree` may also follow the coefficients after `--`
    let mut degree = cli.degree;
    let mut coeffs = Vec::new();
    let mut it = cli.coeffs.iter();
    while let Some(tok) = it.next() {
        if let Some(v) = tok.strip_prefix("--degree=") {
            degree = Some(v.parse().map_err(|_| usage(format!("bad degree {v:?}")))?);
        } else if tok == "--degree" {
            let v = it.next().ok_or_else(|| usage("--degree needs a value"))?;
            degree = Some(v.parse().map_err(|_| usage(format!("bad degree {v:?}")))?);
        } else {
            coeffs.push(
                tok.parse::<f64>()
                    .map_err(|_| usage(format!("bad coefficient {tok:?}")))?,
            );
        }
    }
    if coeffs.is_empty() {
        return Err(usage("opa needs coefficients after `--`"));
    }
    let n = degree.unwrap_or(1);
    let f = RealPoly::new(coeffs.clone()).map_err(|e| usage(e.to_string()))?;
    if f.coeff(0) == 0.0 {
        let msg = "f(0) = 0: every approximant q f vanishes at 0, so the optimal polynomial approximant is identically zero";
        return match cli.format {
            Format::Json => emit(
                cli,
                &format!(
                    "{}\n",
                    json!({"p": p.p(), "degree": n, "f": coeffs, "q": vec![0.0; n + 1], "notice": msg})
                ),
            ),
            _ => emit(cli, &format!("{msg}\n")),
        };
    }
    let cfg = solver_config(cli);
    let res = solve_opa(&f, p, n, &cfg)?;
    let lin = if n == 1 {
        Some(solve_linear_opa(&f, p, &cfg)?)
    } else {
        None
    };
    let rec = OpaRecord::new(p.p(), &coeffs, n, &res, lin.as_ref());
    let text = match cli.format {
        Format::Json => format!("{}\n", to_json(&rec)?),
        Format::Csv => {
            let mut s = String::from("k,q\n");
            for (k, q) in rec.q.iter().enumerate() {
                s.push_str(&format!("{k},{}\n", fmt_float(*q)));
            }
            s
        }
        Format::Text => {
            let mut s = format!("p = {}, degree {n}\n", rec.p);
            s.push_str(&format!("q        = {:?}\n", rec.q));
            s.push_str(&format!("residual = {:e}\n", rec.residual_norm));
            s.push_str(&format!("zeros    = {:?}\n", rec.zeros));
            s.push_str(&format!("orth     = {:?}\n", rec.orth_residuals));
            if let Some(l) = &rec.linear {
                s.push_str(&format!("t_f      = {}\n", l.t_f));
                if let Some(z) = l.zero {
                    s.push_str(&format!("zero     = {z}\n"));
                }
            }
            s
        }
    };
    emit(cli, &text)
}

fn cmd_extremal(cli: &Cli) -> Outcome {
    let ps = exponents(cli, &[4.0, 6.0, 8.0, 10.0])?;
    let (lo, hi) = degrees(cli, (2, 4))?;
    let cfg = extremal_config(cli);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for p in ps {
        let chain = solve_tdp_chain(p, hi, &cfg)
            .map_err(|e| Failure::Solver(format!("p={}: {e}", p.p())))?;
        for s in chain.iter().filter(|s| s.d >= lo) {
            rows.push(ExtremalRecord::from(s));
            if cli.restarts > 0 {
                let dm = direct_maximize_t(p, s.d, cli.restarts, cli.seed)?;
                checks.push(json!({"p": p.p(), "d": s.d, "t_lagrange": s.t, "t_direct": dm.t, "gap": (dm.t - s.t).abs()}));
            }
        }
    }
    let text = match cli.format {
        Format::Json => {
            let mut s = json_lines(&rows)?;
            for c in &checks {
                s.push_str(&format!("{c}\n"));
            }
            s
        }
        Format::Csv => extremal_csv(&rows)?,
        Format::Text => {
            let mut s = format!(
                "{:>3} {:>6} {:>12} {:>10}  coefficients\n",
                "d", "p", "1/t", "residual"
            );
            for r in &rows {
                let c: Vec<String> = r.coeffs.iter().map(|x| format!("{x:.6}")).collect();
                s.push_str(&format!(
                    "{:>3} {:>6} {:>12.8} {:>10.1e}  {}\n",
                    r.d,
                    r.p,
                    r.inv_t,
                    r.residual_max,
                    c.join(" ")
                ));
            }
            for c in &checks {
                s.push_str(&format!(
                    "direct check p={} d={}: |t_direct - t| = {:.2e}\n",
                    c["p"],
                    c["d"],
                    c["gap"].as_f64().unwrap_or(f64::NAN)
                ));
            }
            s
        }
    };
    emit(cli, &text)
}

fn tau_rows(ps: &[PNorm]) -> Result<Vec<TauRecord>, Failure> {
    ps.iter()
        .map(|&p| {
            solve_tau(p)
                .map(|r| TauRecord::from(&r))
                .map_err(|e| Failure::Solver(format!("p={}: {e}", p.p())))
        })
        .collect()
}

fn cmd_tau(cli: &Cli) -> Outcome {
    let default: Vec<f64> = TAU.iter().map(|r| r.p).collect();
    let rows = tau_rows(&exponents(cli, &default)?)?;
    let text = match cli.format {
        Format::Json => json_lines(&rows)?,
        Format::Csv => tau_csv(&rows)?,
        Format::Text => {
            let mut s = format!("{:>6} {:>14} {:>14} {:>14}\n", "p", "tau", "xi1", "xi2");
            for r in &rows {
                s.push_str(&format!(
                    "{:>6} {:>14.10} {:>14.10} {:>14.10}\n",
                    r.p, r.tau, r.xi1, r.xi2
                ));
            }
            s
        }
    };
    emit(cli, &text)
}

fn cmd_exclusion(cli: &Cli) -> Outcome {
    let default: Vec<f64> = EXCLUSION.iter().map(|r| r.p).collect();
    let rows: Vec<ExclusionRecord> = exponents(cli, &default)?
        .into_iter()
        .map(|p| ExclusionRecord::from(&exclusion_radius(p)))
        .collect();
    let text = match cli.format {
        Format::Json => json_lines(&rows)?,
        Format::Csv => exclusion_csv(&rows)?,
        Format::Text => {
            let mut s = format!("{:>10} {:>12} {:>12}\n", "p", "s", "r");
            for r in &rows {
                s.push_str(&format!("{:>10.6} {:>12.7} {:>12.7}\n", r.p, r.s, r.r));
            }
            s
        }
    };
    emit(cli, &text)
}

fn cmd_examples(cli: &Cli) -> Outcome {
    let cfg = solver_config(cli);
    let mut rows = Vec::new();
    for p in exponents(cli, &[1.5, 1.75, 3.0, 4.0, 6.0])? {
        let w = find_min_k_extra_zero(p, cli.cap, &cfg)
            .map_err(|e| Failure::Solver(format!("p={}: {e}", p.p())))?;
        rows.push(json!({
            "p": p.p(),
            "k": w.k,
            "family": if p.p() < 2.0 { "small-p" } else { "large-p" },
            "t_f": w.t_f,
            "zero": w.zero,
            "inside_disk": w.inside_disk,
            "f": w.f.coeffs(),
        }));
    }
    let text = match cli.format {
        Format::Json => rows.iter().map(|r| format!("{r}\n")).collect(),
        Format::Csv => {
            let mut s = String::from("p,k,t_f,zero,inside_disk\n");
            for r in &rows {
                let num = |key: &str| fmt_float(r[key].as_f64().unwrap_or(f64::NAN));
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    num("p"),
                    r["k"],
                    num("t_f"),
                    num("zero"),
                    r["inside_disk"]
                ));
            }
            s
        }
        Format::Text => {
            let mut s = format!("{:>6} {:>6} {:>12} {:>12}\n", "p", "k", "t_f", "zero");
            for r in &rows {
                s.push_str(&format!(
                    "{:>6} {:>6} {:>12.8} {:>12.8}\n",
                    r["p"].as_f64().unwrap_or(f64::NAN),
                    r["k"].as_u64().unwrap_or(0),
                    r["t_f"].as_f64().unwrap_or(f64::NAN),
                    r["zero"].as_f64().unwrap_or(f64::NAN)
                ));
            }
            s
        }
    };
    emit(cli, &text)
}

fn cmd_orbit(cli: &Cli) -> Outcome {
    let p = single_p(cli)?;
    let t = match (cli.t, cli.d.as_ref()) {
        (Some(t), _) => t,
        (None, Some(_)) => {
            let (_, d) = degrees(cli, (2, 2))?;
            solve_tdp_chain(p, d, &extremal_config(cli))?
                .last()
                .expect("non-empty chain")
                .t
        }
        (None, None) => return Err(usage("orbit needs --t or --d")),
    };
    let params = PhiPsiParams::new(p, t).map_err(|e| usage(e.to_string()))?;
    let policy = match cli.branch {
        Policy::Exhaustive => BranchPolicy::Exhaustive,
        Policy::Left => BranchPolicy::Fixed(Branch::Left),
        Policy::Middle => BranchPolicy::Fixed(Branch::Middle),
        Policy::Right => BranchPolicy::Fixed(Branch::Right),
    };
    let x1 = cli.x1.unwrap_or(p.p() * t);
    let trace = iterate_orbit(&params, x1, &policy, cli.budget)
        .map_err(|e| Failure::Solver(e.to_string()))?;
    let cw = export_cobweb(Some(&trace), &params);
    if let Some(path) = &cli.curves {
        fs::write(path, cw.curves_csv()?)
            .map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))?;
    }
    let text = match cli.format {
        Format::Json => format!("{}\n", to_json(&trace)?),
        Format::Csv => cw.segments_csv()?,
        Format::Text => {
            let mut s = format!("p = {}, t = {t}, x1 = {x1}\n", p.p());
            s.push_str(&format!(
                "status: {}\n",
                serde_json::to_value(trace.status)?.as_str().unwrap_or("?")
            ));
            let branches: Vec<&str> = trace.branches().iter().map(|b| b.as_str()).collect();
            s.push_str(&format!("branches: {}\n", branches.join(" ")));
            for (k, r) in trace.ratios.iter().enumerate() {
                s.push_str(&format!("x{} = {}\n", k + 1, fmt_float(*r)));
            }
            s
        }
    };
    emit(cli, &text)
}

fn cmd_verify(cli: &Cli) -> Outcome {
    let cfg = VerifyConfig {
        ps: (!cli.p.is_empty()).then(|| cli.p.clone()),
        tol: cli.tol,
        seed: cli.seed,
        precision_bits: cli.precision_bits,
    };
    let report = run_verify(&cfg);
    let text = match cli.format {
        Format::Json => json_lines(&report.checks)?,
        Format::Csv => {
            let mut s = String::from("suite,name,passed,worst,tol,samples,seconds\n");
            for c in &report.checks {
                let tol = c.tol.map_or(String::new(), fmt_float);
                s.push_str(&format!(
                    "{},{},{},{},{tol},{},{}\n",
                    c.suite,
                    c.name,
                    c.passed,
                    fmt_float(c.worst),
                    c.samples,
                    fmt_float(c.seconds)
                ));
            }
            s
        }
        Format::Text => report.matrix(),
    };
    emit(cli, &text)?;
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{}/{}", c.suite, c.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(format!(
            "failed invariants: {}",
            failed.join(", ")
        )))
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))
}

fn cmd_tables(cli: &Cli) -> Outcome {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("tables"));
    fs::create_dir_all(&dir).map_err(|e| Failure::Solver(format!("{}: {e}", dir.display())))?;
    let pick = |default: Vec<f64>| -> Result<Vec<PNorm>, Failure> { exponents(cli, &default) };
    let mut errors = Vec::new();

    let excl: Vec<ExclusionRecord> = pick(EXCLUSION.iter().map(|r| r.p).collect())?
        .into_iter()
        .map(|p| ExclusionRecord::from(&exclusion_radius(p)))
        .collect();

    let (lo, hi) = degrees(cli, (2, 4))?;
    let cfg = extremal_config(cli);
    let mut ext = Vec::new();
    for p in pick(vec![4.0, 6.0, 8.0, 10.0])? {
        match solve_tdp_chain(p, hi, &cfg) {
            Ok(chain) => ext.extend(chain.iter().filter(|s| s.d >= lo).map(ExtremalRecord::from)),
            Err(e) => errors.push(format!("extremal p={}: {e}", p.p())),
        }
    }
    // rows ordered by d, then p
    ext.sort_by(|a, b| a.d.cmp(&b.d).then(a.p.total_cmp(&b.p)));

    let mut taus = Vec::new();
    for p in pick(TAU.iter().map(|r| r.p).collect())? {
        match solve_tau(p) {
            Ok(r) => taus.push(TauRecord::from(&r)),
            Err(e) => errors.push(format!("tau p={}: {e}", p.p())),
        }
    }

    write_file(&dir, "exclusion.csv", &exclusion_csv(&excl)?)?;
    write_file(&dir, "extremal.csv", &extremal_csv(&ext)?)?;
    write_file(&dir, "tau.csv", &tau_csv(&taus)?)?;
    println!(
        "wrote {} exclusion, {} extremal and {} tau rows to {}",
        excl.len(),
        ext.len(),
        taus.len(),
        dir.display()
    );
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(errors.join("\n")))
    }
}

fn run(cli: &Cli) -> Outcome {
    let Some(command) = cli.command.or(cli.command_flag) else {
        return Err(usage("no command given; see --help"));
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    check_precision(cli.precision_bits).map_err(|e| usage(e.to_string()))?;
    if command != Command::Opa && !cli.coeffs.is_empty() {
        return Err(usage("coefficients after `--` are only used by opa"));
    }
    match command {
        Command::Opa => cmd_opa(cli),
        Command::Extremal => cmd_extremal(cli),
        Command::Tau => cmd_tau(cli),
        Command::Exclusion => cmd_exclusion(cli),
        Command::Examples => cmd_examples(cli),
        Command::Orbit => cmd_orbit(cli),
        Command::Verify => cmd_verify(cli),
        Command::Tables => cmd_tables(cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
