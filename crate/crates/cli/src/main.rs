//! `bellsdp`: device-independent entanglement bounds from the command line.

use anyhow::{bail, Context, Result};
use bellsdp::algebra::{generate_basis, parse_extra_words, LevelSpec};
use bellsdp::moment::{apply_symmetry, build_template, MomentTemplate, SymmetrySpec};
use bellsdp::oracle::{self, QuantumModel, SeesawConfig};
use bellsdp::programs::{self, ProgramResult, SdpProblem};
use bellsdp::scenario::{load, BellFunctional};
use bellsdp::solver::{export_sdpa, Backend, SolverConfig, Status};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "bellsdp",
    version,
    about = "Moment-matrix bounds on Bell values and entanglement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum quantum value of the inequality.
    Tsirelson(Common),
    /// Maximum value over states PPT with respect to the given bipartitions.
    PptTsirelson(Common),
    /// Maximum value over mixtures of states PPT across some bipartition.
    PptMixture(Common),
    /// Minimum negativity as a function of the observed violation.
    NegativityCurve(Curve),
    /// Minimum genuine negativity as a function of the observed violation.
    GenuineNegativityCurve(Curve),
    /// Maximum value with negativity capped at (d - 1) / 2.
    DimensionWitness(Witness),
    /// Attainable value from alternating optimisation.
    Seesaw(SeesawArgs),
    /// Write the SDPA sparse file of a program without solving it.
    ExportSdpa(Export),
    /// Check a quantum model file and report its behaviour and value.
    ValidateModel(ValidateArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in name or path to an inequality file.
    inequality: String,
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// JSON file of per-party words appended to the level.
    #[arg(long)]
    extra_words: Option<PathBuf>,
    /// Bipartitions as party lists, e.g. `0` or `0;0,1` (default: all).
    #[arg(long)]
    partitions: Option<String>,
    /// Restrict moments to real values (default).
    #[arg(long, overrides_with = "no_real")]
    real: bool,
    #[arg(long)]
    no_real: bool,
    /// Identify the template with its partial transposes on the partitions.
    #[arg(long)]
    ppt_invariant: bool,
    /// Party permutation such as `1,0`; bare `--swap` uses every invariant one.
    #[arg(long, num_args = 0..=1, default_missing_value = "auto")]
    swap: Vec<String>,
    /// Feasibility tolerance; the gap tolerance is ten times larger.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value = "auto")]
    backend: Backend,
    /// Wall-clock budget per solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Largest variable count sent to the interior-point method.
    #[arg(long, default_value_t = SolverConfig::default().ipm_limit)]
    dense_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the (first) program in SDPA sparse format.
    #[arg(long)]
    sdpa_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct Curve {
    #[command(flatten)]
    common: Common,
    /// Violation grid `start:stop:points`.
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct Witness {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    d: usize,
}

#[derive(Args)]
struct SeesawArgs {
    #[command(flatten)]
    common: Common,
    /// Local dimensions, e.g. `2,2`.
    #[arg(long)]
    dims: String,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    /// Write the best model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct Export {
    #[command(flatten)]
    common: Common,
    /// One of tsirelson, ppt-tsirelson, ppt-mixture, negativity,
    /// genuine-negativity, dimension-witness.
    #[arg(long, default_value = "tsirelson")]
    program: String,
    /// Violation for the negativity programs.
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Quantum model JSON file.
    model: PathBuf,
    /// Inequality to evaluate on the model's behaviour.
    #[arg(long)]
    inequality: Option<String>,
    /// Level of the moment-matrix cross-check.
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything a program needs, resolved from the flags.
struct Setup {
    functional: BellFunctional,
    template: MomentTemplate,
    partitions: Option<Vec<Vec<usize>>>,
    config: SolverConfig,
    header: Value,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("bad integer '{t}'"))
        })
        .collect()
}

fn parse_partitions(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';').map(parse_list).collect()
}

/// `a:b:n`, `n` points including both ends.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be start:stop:points, got '{s}'");
    }
    let a: f64 = parts[0]
        .parse()
        .with_context(|| format!("bad grid start '{}'", parts[0]))?;
    let b: f64 = parts[1]
        .parse()
        .with_context(|| format!("bad grid stop '{}'", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .with_context(|| format!("bad grid size '{}'", parts[2]))?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        bail!("grid needs finite ends and at least one point");
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for s in 0..n {
            if !prefix.contains(&s) {
                prefix.push(s);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

fn setup(c: &Common) -> Result<Setup> {
    if c.level == 0 {
        bail!("level must be at least 1");
    }
    if c.jobs == 0 {
        bail!("jobs must be at least 1");
    }
    let functional = load(&c.inequality)?.functional;
    let sc = &functional.scenario;
    let n = sc.parties();
    let extra = match &c.extra_words {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_extra_words(&text)?
        }
        None => Vec::new(),
    };
    let level = LevelSpec::with_extra(c.level, extra);
    let partitions = c.partitions.as_deref().map(parse_partitions).transpose()?;
    let real = !c.no_real;
    let mut sym = SymmetrySpec {
        real,
        ..Default::default()
    };
    if c.ppt_invariant {
        sym.ppt_invariant = partitions
            .clone()
            .unwrap_or_else(|| oracle::bipartitions(n));
    }
    for s in &c.swap {
        if s == "auto" {
            let id: Vec<usize> = (0..n).collect();
            for p in permutations(n) {
                if p != id
                    && sc.is_invariant_under(&p)
                    && functional.is_invariant_under(&p)
                    && !sym.swap.contains(&p)
                {
                    sym.swap.push(p);
                }
            }
        } else {
            sym.swap.push(parse_list(s)?);
        }
    }
    let basis = generate_basis(sc, &level)?;
    let template = build_template(sc, &basis)?;
    let template = apply_symmetry(&template, &sym, Some(&functional))?;
    let config = SolverConfig {
        feas_tol: c.tol,
        gap_tol: 10.0 * c.tol,
        verbosity: c.verbose,
        backend: c.backend,
        ipm_limit: c.dense_limit,
        time_limit: c.time_limit,
        ..SolverConfig::default()
    };
    config.validate()?;
    let header = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "inequality": functional.name,
        "level": level.label(),
        "side": template.side(),
        "symmetry": sym.label(),
        "feas_tol": config.feas_tol,
        "gap_tol": config.gap_tol,
        "backend": format!("{:?}", config.backend).to_lowercase(),
    });
    Ok(Setup {
        functional,
        template,
        partitions,
        config,
        header,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_sdpa(c: &Common, p: &SdpProblem) -> Result<()> {
    if let Some(path) = &c.sdpa_out {
        std::fs::write(path, export_sdpa(p))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn code(status: Status) -> ExitCode {
    if status == Status::NumericalLimit {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn result_json(
    header: Value,
    command: &str,
    r: &ProgramResult,
    seconds: f64,
    notes: &[String],
) -> Value {
    json!({
        "header": header,
        "command": command,
        "value": r.value,
        "status": r.status.as_str(),
        "gap": number(r.gap),
        "dual_bound": number(r.dual_bound),
        "primal_residual": number(r.primal_residual),
        "dual_residual": number(r.dual_residual),
        "iterations": r.iterations,
        "notes": notes,
        "seconds": seconds,
    })
}

fn single(
    c: &Common,
    command: &str,
    build: impl Fn(&Setup) -> Result<SdpProblem>,
) -> Result<ExitCode> {
    let s = setup(c)?;
    let p = build(&s)?;
    write_sdpa(c, &p)?;
    let t0 = Instant::now();
    let r = programs::solve_program(&p, &s.config)?;
    let obj = result_json(s.header, command, &r, t0.elapsed().as_secs_f64(), &p.notes);
    emit(
        &c.out,
        &format!("{}\n", serde_json::to_string_pretty(&obj)?),
    )?;
    Ok(code(r.status))
}

fn all_partitions(s: &Setup) -> Vec<Vec<usize>> {
    s.partitions
        .clone()
        .unwrap_or_else(|| oracle::bipartitions(s.functional.scenario.parties()))
}

struct Row {
    v: f64,
    bound: Option<f64>,
    status: Status,
    gap: f64,
    seconds: f64,
}

fn curve(args: &Curve, genuine: bool) -> Result<ExitCode> {
    let c = &args.common;
    let s = setup(c)?;
    let grid = parse_grid(&args.grid)?;
    let build = |v: f64| -> Result<SdpProblem> {
        Ok(if genuine {
            programs::genuine_negativity(&s.template, &s.functional, v)?
        } else {
            programs::negativity(&s.template, &s.functional, v)?
        })
    };
    // fail fast on structural errors and export the first grid point
    let first = build(grid[0])?;
    write_sdpa(c, &first)?;
    drop(first);

    let slots: Vec<Mutex<Option<Result<Row>>>> = grid.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let k = next.fetch_add(1, Ordering::SeqCst);
        if k >= grid.len() {
            break;
        }
        let v = grid[k];
        let t0 = Instant::now();
        let row = build(v).and_then(|p| {
            let r = programs::solve_program(&p, &s.config)?;
            Ok(Row {
                v,
                bound: r.value,
                status: r.status,
                gap: r.gap,
                seconds: t0.elapsed().as_secs_f64(),
            })
        });
        *slots[k].lock().unwrap() = Some(row);
    };
    std::thread::scope(|scope| {
        for _ in 0..c.jobs.min(grid.len()) {
            scope.spawn(worker);
        }
    });

    let mut text = String::new();
    if let Value::Object(map) = &s.header {
        for (k, v) in map {
            text.push_str(&format!(
                "# {k}: {}\n",
                v.as_str()
                    .map(str::to_string)
                    .unwrap_or_else(|| v.to_string())
            ));
        }
    }
    text.push_str(&format!(
        "# command: {}\n",
        if genuine {
            "genuine-negativity-curve"
        } else {
            "negativity-curve"
        }
    ));
    text.push_str("v,bound,status,gap,seconds\n");
    let mut worst = Status::Optimal;
    for slot in slots {
        let row = slot
            .into_inner()
            .unwrap()
            .expect("every grid point is processed")?;
        if row.status == Status::NumericalLimit {
            worst = Status::NumericalLimit;
        }
        let bound = row.bound.map(|b| format!("{b:.12}")).unwrap_or_default();
        let gap = if row.gap.is_finite() {
            format!("{:.3e}", row.gap)
        } else {
            String::new()
        };
        text.push_str(&format!(
            "{},{bound},{},{gap},{:.3}\n",
            row.v,
            row.status.as_str(),
            row.seconds
        ));
    }
    emit(&c.out, &text)?;
    Ok(code(worst))
}

fn seesaw(a: &SeesawArgs) -> Result<ExitCode> {
    let c = &a.common;
    let functional = load(&c.inequality)?.functional;
    let dims = parse_list(&a.dims)?;
    let cfg = SeesawConfig {
        restarts: a.restarts,
        iterations: a.iterations,
        seed: c.seed,
        ..SeesawConfig::default()
    };
    let t0 = Instant::now();
    let r = oracle::seesaw(&functional, &dims, &cfg)?;
    let seconds = t0.elapsed().as_secs_f64();
    if let Some(p) = &a.model_out {
        std::fs::write(p, r.model.to_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    let obj = json!({
        "header": {
            "version": env!("CARGO_PKG_VERSION"),
            "inequality": functional.name,
            "dims": dims,
            "restarts": a.restarts,
            "iterations": a.iterations,
            "seed": c.seed,
        },
        "command": "seesaw",
        "value": r.value,
        "restart_values": r.restart_values,
        "seconds": seconds,
    });
    emit(
        &c.out,
        &format!("{}\n", serde_json::to_string_pretty(&obj)?),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn export(a: &Export) -> Result<ExitCode> {
    let c = &a.common;
    let s = setup(c)?;
    let need_v = || a.v.context("--v is required for this program");
    let p = match a.program.as_str() {
        "tsirelson" => programs::tsirelson(&s.template, &s.functional)?,
        "ppt-tsirelson" => {
            programs::ppt_tsirelson(&s.template, &s.functional, &all_partitions(&s))?
        }
        "ppt-mixture" => programs::ppt_mixture(&s.template, &s.functional)?,
        "negativity" => programs::negativity(&s.template, &s.functional, need_v()?)?,
        "genuine-negativity" => {
            programs::genuine_negativity(&s.template, &s.functional, need_v()?)?
        }
        "dimension-witness" => programs::dimension_witness(
            &s.template,
            &s.functional,
            a.d.context("--d is required")?,
        )?,
        other => bail!("unknown program '{other}'"),
    };
    let text = export_sdpa(&p);
    match (&c.sdpa_out, &c.out) {
        (Some(path), _) | (None, Some(path)) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        (None, None) => emit(&None, &text)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn validate_model(a: &ValidateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.model)
        .with_context(|| format!("reading {}", a.model.display()))?;
    let model = QuantumModel::from_json(&text)?;
    model.validate()?;
    let sc = model.scenario()?;
    let behavior = oracle::behavior_of(&model)?;
    let basis = generate_basis(&sc, &LevelSpec::full(a.level))?;
    let check = oracle::moment_matrix_of(&model, &basis)?;
    let eig = oracle::linalg::herm_eigvals(&check.matrix);
    let negativities: Vec<Value> = oracle::bipartitions(sc.parties())
        .iter()
        .map(|m| -> Result<Value> {
            let n = oracle::negativity_of(&model.state, &model.dims, m)?;
            Ok(json!({ "partition": m, "negativity": n.value }))
        })
        .collect::<Result<_>>()?;
    let value = match &a.inequality {
        Some(name) => {
            let f = load(name)?.functional;
            f.check_scenario(&sc)?;
            Some(f.evaluate(&behavior)?)
        }
        None => None,
    };
    let obj = json!({
        "header": { "version": env!("CARGO_PKG_VERSION"), "level": a.level },
        "command": "validate-model",
        "valid": true,
        "dims": model.dims,
        "behavior": behavior.coordinates,
        "bell_value": value,
        "moment_min_eigenvalue": eig.first().copied(),
        "fixed_cell_deviation": check.fixed_deviation,
        "negativity": negativities,
    });
    emit(
        &a.out,
        &format!("{}\n", serde_json::to_string_pretty(&obj)?),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Tsirelson(c) => single(c, "tsirelson", |s| {
            Ok(programs::tsirelson(&s.template, &s.functional)?)
        }),
        Command::PptTsirelson(c) => single(c, "ppt-tsirelson", |s| {
            Ok(programs::ppt_tsirelson(
                &s.template,
                &s.functional,
                &all_partitions(s),
            )?)
        }),
        Command::PptMixture(c) => single(c, "ppt-mixture", |s| {
            Ok(programs::ppt_mixture(&s.template, &s.functional)?)
        }),
        Command::NegativityCurve(a) => curve(a, false),
        Command::GenuineNegativityCurve(a) => curve(a, true),
        Command::DimensionWitness(w) => single(&w.common, "dimension-witness", |s| {
            Ok(programs::dimension_witness(
                &s.template,
                &s.functional,
                w.d,
            )?)
        }),
        Command::Seesaw(a) => seesaw(a),
        Command::ExportSdpa(a) => export(a),
        Command::ValidateModel(a) => validate_model(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
