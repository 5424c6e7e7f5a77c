//! `ramulus`: solve, validate and experiment with branched transport
//! instances from the command line.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ramulus::experiments;
use ramulus::local_branch::{self, FourPointInstance};
use ramulus::measures::{self, AtomicMeasure, Boundary};
use ramulus::solver::{self, SolveOptions};
use ramulus::{svg, Error, Point, PolyChain};

#[derive(Parser, Debug)]
#[command(name = "ramulus", version, about = "Branched optimal transport on finite atomic measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CommandKind {
    Solve,
    Flatnorm,
    Dyadic,
    Perturb,
    Classify,
    Stability,
    Validate,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal network for a boundary measure
    Solve(Common),
    /// Flat norm of an atomic 0-current
    Flatnorm(Common),
    /// Dyadic transport of a positive measure in the unit cube
    Dyadic(Common),
    /// Multiplicity reduction of a network around given points
    Perturb(Common),
    /// Four-point local topology classification
    Classify(Common),
    /// Solver values over a family of boundaries
    Stability(Common),
    /// Parse and check a network
    Validate(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Input JSON file
    input: PathBuf,
    /// Output file; standard output when absent
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    /// Relative value gap under which two networks count as tied
    #[arg(long, default_value_t = 1e-9)]
    gap_tol: f64,
    #[arg(long, default_value_t = solver::DEFAULT_ATOM_CAP)]
    atom_cap: usize,
    /// Placement accuracy relative to 1 + value
    #[arg(long, default_value_t = ramulus::optimizer::DEFAULT_TOL)]
    tol: f64,
    /// Reserved for randomized procedures; every current command is
    /// deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SVG drawing of the result
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Output format; tables default to CSV, everything else to JSON
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
struct RunConfig {
    command: CommandKind,
    args: Common,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Capacity { .. }) => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Lib(e) => (e.kind(), e.to_string()),
            Failure::Io(m) => ("io", m.clone()),
        };
        json!({"error": {"kind": kind, "message": message}})
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn read_json(path: &PathBuf) -> Run<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Lib(Error::Parse(format!("{}: {e}", path.display()))))
}

fn field<'a>(v: &'a Value, key: &str) -> Run<&'a Value> {
    v.get(key).ok_or_else(|| Failure::Lib(Error::Parse(format!("missing \"{key}\""))))
}

fn point(v: &Value, what: &str) -> Run<Point> {
    let coords = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what}: expected a coordinate array")))?
        .iter()
        .map(|c| c.as_f64().ok_or_else(|| Error::Parse(format!("{what}: non-numeric coordinate"))))
        .collect::<ramulus::Result<Vec<f64>>>()?;
    Ok(Point::new(coords).map_err(|e| Error::Parse(format!("{what}: {e}")))?)
}

/// Accepts a bare chain or any object carrying it under `network`.
fn chain_of(v: &Value) -> Run<PolyChain> {
    Ok(PolyChain::from_json(v.get("network").unwrap_or(v))?)
}

fn check_alpha(alpha: f64) -> Run<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")).into())
    }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Run<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_svg(path: &Option<PathBuf>, body: impl FnOnce() -> String) -> Run<()> {
    if let Some(p) = path {
        fs::write(p, body()).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn draw_chain(path: &Option<PathBuf>, chain: &PolyChain) -> Run<()> {
    if path.is_some() {
        if let Some(w) = svg::projection_warning(chain) {
            eprintln!("{}", json!({"warning": w}));
        }
    }
    write_svg(path, || svg::chain_to_svg(chain))
}

fn run(cfg: &RunConfig) -> Run<String> {
    let a = &cfg.args;
    if cfg.command != CommandKind::Flatnorm {
        check_alpha(a.alpha)?;
    }
    let input = read_json(&a.input)?;
    let opts = SolveOptions { atom_cap: a.atom_cap, tol: a.tol, ..SolveOptions::default() };
    let format = a.format.unwrap_or(match cfg.command {
        CommandKind::Dyadic | CommandKind::Stability => Format::Csv,
        _ => Format::Json,
    });
    match cfg.command {
        CommandKind::Solve => {
            let b = Boundary::new(AtomicMeasure::from_json(&input)?)?;
            let r = solver::solve_gilbert_with(&b, a.alpha, &opts)?;
            draw_chain(&a.svg, &r.best)?;
            let mut out = r.to_json();
            out["alpha"] = json!(a.alpha);
            out["unique"] = json!(!(r.gap <= a.gap_tol));
            Ok(pretty(&out))
        }
        CommandKind::Flatnorm => {
            let m = AtomicMeasure::from_json(&input)?;
            Ok(pretty(&json!({"flat_norm": measures::flat_norm_0(&m), "mass": m.mass()})))
        }
        CommandKind::Dyadic => {
            let m = AtomicMeasure::from_json(&input)?;
            let r = experiments::dyadic_transport(&m, a.alpha, a.depth)?;
            draw_chain(&a.svg, &r.chain)?;
            Ok(match format {
                Format::Csv => r.to_csv(),
                Format::Json => pretty(&r.to_json()),
            })
        }
        CommandKind::Perturb => {
            let t = chain_of(field(&input, "chain")?)?;
            let points = field(&input, "points")?
                .as_array()
                .ok_or_else(|| Error::Parse("\"points\": expected an array".into()))?
                .iter()
                .enumerate()
                .map(|(i, p)| point(p, &format!("points[{i}]")))
                .collect::<Run<Vec<Point>>>()?;
            let k = a.k.unwrap_or(8);
            let n = a.n.unwrap_or(8);
            let r = experiments::perturb_boundary(&t, &points, k, n, a.alpha)?;
            draw_chain(&a.svg, &r.t_n)?;
            Ok(pretty(&r.to_json()))
        }
        CommandKind::Classify => {
            let k = match (a.k, input.get("k").and_then(Value::as_u64)) {
                (Some(k), _) => k,
                (None, Some(k)) => u32::try_from(k).map_err(|_| Error::Domain(format!("k = {k} is too large")))?,
                (None, None) => return Err(Error::Parse("missing \"k\" (input field or --k)".into()).into()),
            };
            let theta = input.get("theta").and_then(Value::as_f64).unwrap_or(1.0);
            let inst = FourPointInstance {
                a: point(field(&input, "a")?, "a")?,
                b: point(field(&input, "b")?, "b")?,
                c: point(field(&input, "c")?, "c")?,
                d: point(field(&input, "d")?, "d")?,
                theta,
                k,
                alpha: a.alpha,
            };
            let c = local_branch::classify_four_point(&inst)?;
            write_svg(&a.svg, || {
                let panels: Vec<(String, PolyChain)> = c
                    .candidates
                    .iter()
                    .map(|x| (format!("{} {:.6}", x.id, x.alpha_mass), x.chain.clone()))
                    .collect();
                svg::contact_sheet(&panels)
            })?;
            let ranking: Vec<Value> = c.ranking.iter().map(|(id, v)| json!({"id": id, "alpha_mass": v})).collect();
            Ok(pretty(&json!({"label": c.label.to_string(), "ranking": ranking})))
        }
        CommandKind::Stability => {
            let base = Boundary::new(AtomicMeasure::from_json(field(&input, "base")?)?)?;
            let family = field(&input, "family")?
                .as_array()
                .ok_or_else(|| Error::Parse("\"family\": expected an array".into()))?
                .iter()
                .map(|m| Ok(Boundary::new(AtomicMeasure::from_json(m)?)?))
                .collect::<Run<Vec<Boundary>>>()?;
            let r = experiments::stability_experiment_with(&base, &family, a.alpha, &opts)?;
            Ok(match format {
                Format::Csv => r.to_csv(),
                Format::Json => pretty(&r.to_json()),
            })
        }
        CommandKind::Validate => {
            let t = chain_of(&input)?;
            let bd = t.boundary();
            let mut out = json!({
                "valid": true,
                "tree": t.is_tree(),
                "acyclic_flow": !t.has_cycle(),
                "mass": t.mass(),
                "alpha_mass": t.alpha_mass(a.alpha),
                "boundary": bd.to_json(),
            });
            if let Some(expected) = input.get("boundary") {
                let expected = AtomicMeasure::from_json(expected)?;
                let (plus, minus) = expected.jordan();
                let ok = ramulus::chains::validate_kirchhoff(&t, &minus, &plus);
                out["kirchhoff"] = json!(ok);
                if !ok {
                    return Err(Error::Domain("network boundary differs from the declared boundary".into()).into());
                }
            }
            Ok(pretty(&out))
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("RAMULUS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (command, args) = match cli.command {
        Command::Solve(a) => (CommandKind::Solve, a),
        Command::Flatnorm(a) => (CommandKind::Flatnorm, a),
        Command::Dyadic(a) => (CommandKind::Dyadic, a),
        Command::Perturb(a) => (CommandKind::Perturb, a),
        Command::Classify(a) => (CommandKind::Classify, a),
        Command::Stability(a) => (CommandKind::Stability, a),
        Command::Validate(a) => (CommandKind::Validate, a),
    };
    let cfg = RunConfig { command, args };
    match run(&cfg).and_then(|text| write_out(&cfg.args.output, &text)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
