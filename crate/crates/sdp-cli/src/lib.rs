//! The `sdp` command line: parsing of flags, dispatch to the engines and
//! exit codes.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 resource cap
//! (iteration cap or tightening rounds exhausted), 3 internal invariant
//! breach.

mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sdp_benchgen::{gen_bigrid, gen_chain, gen_dice, gen_room, gen_unigrid, DiceSpec, RoomSpec};
use sdp_compose::{semantics, Diagram};
use sdp_compositional::{
    approx_multiobj_sd, check_single_exit, node_error_bound, replay, CompError, CurveCache,
};
use sdp_core::{Rational, Scalar};
use sdp_geometry::{to_csv, GeomError, Norm};
use sdp_io::{build, emit_report, from_diagram, parse, print, IoError, Report};
use sdp_multiobj::{approx_multiobj, MultiObjError, SoundApproximation};
use serde_json::{json, Value};

pub use sdp_benchgen::{Safety, Wind};

#[derive(Parser, Debug, Clone)]
#[command(name = "sdp", version, about = "Pareto curves of open MDPs and string diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Approximation tolerance.
    #[arg(long, global = true, default_value_t = 1e-4)]
    pub eta: f64,
    /// Target width of single-exit bounds in `check`.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, global = true, value_enum, default_value_t = Engine::Comp)]
    pub engine: Engine,
    #[arg(long, global = true, value_enum, default_value_t = Arith::Float)]
    pub arith: Arith,
    #[arg(long, global = true, value_enum, default_value_t = NormArg::Linf)]
    pub norm: NormArg,
    /// Analyse every leaf occurrence separately.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Output file: the curve for `pareto`, the document for `bench`, a
    /// copy of the report otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// With `pareto`: also write an SVG plot next to `--out`.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Seed for generated benchmarks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Compositional bounds; with `--exit`, bounds on one exit within
    /// `--epsilon` and a scheduler attaining the lower bound.
    Check {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        entrance: usize,
        #[arg(long)]
        exit: Option<usize>,
    },
    /// Multi-objective analysis of the monolithic semantics.
    Mono { input: PathBuf },
    /// Pareto curve of one entrance as CSV.
    Pareto {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        entrance: usize,
    },
    /// Generates a benchmark instance and runs `--engine` on it.
    Bench {
        #[arg(value_enum)]
        family: Family,
        /// Grid size, chain length.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Room side, odd.
        #[arg(long, default_value_t = 7)]
        side: usize,
        #[arg(long, value_enum, default_value_t = SafetyArg::Safe)]
        safety: SafetyArg,
        #[arg(long, value_enum, default_value_t = WindArg::Calm)]
        wind: WindArg,
        /// Dice: number of score bands.
        #[arg(long, default_value_t = 2)]
        bands: usize,
        /// Dice: number of rounds.
        #[arg(long, default_value_t = 100)]
        rounds: usize,
    },
    /// Both engines side by side, with a cross-check of their sandwiches.
    Compare { input: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Mono,
    Comp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arith {
    Float,
    Rational,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormArg {
    L2,
    Linf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Room,
    Dice,
    Chain,
    Unigrid,
    Bigrid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SafetyArg {
    Safe,
    Unsafe,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindArg {
    Calm,
    Windy,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    /// A resource cap was hit; `bounds` holds what was achieved.
    #[error("resource cap: {msg}")]
    Cap { msg: String, bounds: Value },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 1,
            CliError::Cap { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<MultiObjError> for CliError {
    fn from(e: MultiObjError) -> Self {
        match e {
            MultiObjError::IterationCap { entrance, cap, gap } => CliError::Cap {
                msg: e.to_string(),
                bounds: json!({ "entrance": entrance, "cap": cap, "gap": gap }),
            },
            MultiObjError::Invalid(_) | MultiObjError::ZeroEtaNeedsRational => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<CompError> for CliError {
    fn from(e: CompError) -> Self {
        match e {
            CompError::CapReached { lower, upper, eta } => CliError::Cap {
                msg: e.to_string(),
                bounds: json!({ "lower": lower, "upper": upper, "eta": eta }),
            },
            CompError::Analysis { source, path } => match CliError::from(source) {
                CliError::Cap { msg, bounds } => CliError::Cap {
                    msg: format!("at {path}: {msg}"),
                    bounds,
                },
                CliError::Input(m) => CliError::Input(format!("at {path}: {m}")),
                other => CliError::Internal(format!("at {path}: {other}")),
            },
            CompError::Compose(_)
            | CompError::ZeroEtaNeedsRational
            | CompError::OutOfRange { .. } => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl Cli {
    fn norm(&self) -> Norm {
        match self.norm {
            NormArg::L2 => Norm::L2,
            NormArg::Linf => Norm::Linf,
        }
    }

    /// Rejects settings no engine can honour.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(CliError::Config(format!("--eta must be a finite non-negative number, got {}", self.eta)));
        }
        if self.eta == 0.0 && self.arith == Arith::Float {
            return Err(CliError::Config("--eta 0 requires --arith rational".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Config(format!("--epsilon must be a finite non-negative number, got {}", self.epsilon)));
        }
        if self.epsilon == 0.0 && self.arith == Arith::Float {
            if let Command::Check { exit: Some(_), .. } = self.command {
                return Err(CliError::Config("--epsilon 0 requires --arith rational".into()));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if self.plot && !matches!(self.command, Command::Pareto { .. }) {
            return Err(CliError::Config("--plot only applies to pareto".into()));
        }
        if self.plot && self.out.is_none() {
            return Err(CliError::Config("--plot needs --out".into()));
        }
        Ok(())
    }
}

/// Runs one command, writing its primary output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    cli.validate()?;
    if let Some(j) = cli.jobs {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match cli.arith {
        Arith::Float => run_in::<f64>(cli, stdout),
        Arith::Rational => run_in::<Rational>(cli, stdout),
    }
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(stdout, "{text}").map_err(|e| CliError::Internal(format!("writing output: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn load<T: Scalar>(path: &Path) -> Result<Diagram<T>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(build(&parse(&text)?)?)
}

fn run_in<T: Scalar>(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let report = match &cli.command {
        Command::Mono { input } => {
            let d = load::<T>(input)?;
            mono(cli, &d, start)?.0
        }
        Command::Check {
            input,
            entrance,
            exit,
        } => {
            let d = load::<T>(input)?;
            match exit {
                None => comp(cli, &d, start)?.0,
                Some(x) => check(cli, &d, *entrance, *x, start)?,
            }
        }
        Command::Pareto { input, entrance } => {
            let d = load::<T>(input)?;
            return pareto(cli, &d, *entrance, start, stdout);
        }
        Command::Bench { .. } => {
            let d = bench_instance::<T>(cli)?;
            let t_m = start.elapsed().as_secs_f64();
            if let Some(path) = &cli.out {
                write_file(path, &print(&from_diagram(&d)))?;
            }
            let (mut r, _) = match cli.engine {
                Engine::Mono => mono(cli, &d, start)?,
                Engine::Comp => comp(cli, &d, start)?,
            };
            r.t_m = t_m;
            if let Command::Bench { family, n, .. } = &cli.command {
                r.extra.insert("family".into(), json!(format!("{family:?}").to_lowercase()));
                r.extra.insert("n".into(), json!(n));
            }
            write_out(stdout, &emit_report(&r))?;
            return Ok(());
        }
        Command::Compare { input } => {
            let d = load::<T>(input)?;
            return compare(cli, &d, start, stdout);
        }
    };
    let text = emit_report(&report);
    if let Some(path) = &cli.out {
        write_file(path, &text)?;
    }
    write_out(stdout, &text)
}

fn mono<T: Scalar>(
    cli: &Cli,
    d: &Diagram<T>,
    start: Instant,
) -> Result<(Report, SoundApproximation<T>), CliError> {
    let sem = semantics(d).map_err(|e| CliError::Input(e.to_string()))?;
    let t_m = start.elapsed().as_secs_f64();
    let a = approx_multiobj(&sem, cli.eta)?;
    let mut r = Report::from_approx("mono", &a, cli.norm(), start.elapsed().as_secs_f64(), t_m)?;
    r.extra.insert("states".into(), json!(sem.num_states()));
    r.extra.insert("transitions".into(), json!(sem.mdp.num_transitions()));
    Ok((r, a))
}

fn cache_for<T: Scalar>(cli: &Cli) -> CurveCache<T> {
    if cli.no_cache {
        CurveCache::disabled()
    } else {
        CurveCache::new()
    }
}

fn comp<T: Scalar>(
    cli: &Cli,
    d: &Diagram<T>,
    start: Instant,
) -> Result<(Report, SoundApproximation<T>), CliError> {
    let t_m = start.elapsed().as_secs_f64();
    let cache = cache_for::<T>(cli);
    let res = approx_multiobj_sd(d, cli.eta, &cache)?;
    let a = res.approx().clone();
    let mut r = Report::from_approx("comp", &a, cli.norm(), start.elapsed().as_secs_f64(), t_m)?;
    r.extra.insert("leaves".into(), json!(d.leaves().len()));
    r.extra.insert(
        "cache".into(),
        json!({ "hits": cache.hits(), "misses": cache.misses(), "leaf_runs": cache.leaf_runs() }),
    );
    if let Some(b) = node_error_bound(&res.root)? {
        r.extra.insert("error_bound".into(), json!(b.to_f64()));
    }
    Ok((r, a))
}

fn check<T: Scalar>(
    cli: &Cli,
    d: &Diagram<T>,
    entrance: usize,
    exit: usize,
    start: Instant,
) -> Result<Report, CliError> {
    let t_m = start.elapsed().as_secs_f64();
    let cache = cache_for::<T>(cli);
    let se = check_single_exit(d, entrance, exit, cli.epsilon, &cache)?;
    let played = replay(&se.result.canon, &se.scheduler)?;
    let replayed = played[exit].clone();
    let slack = T::tol(1e-9);
    if (replayed.clone() - se.lower.clone()).abs() > slack {
        return Err(CliError::Internal(format!(
            "replayed scheduler reaches {replayed}, reported lower bound is {}",
            se.lower
        )));
    }
    let mut r = Report::from_approx(
        "comp",
        se.result.approx(),
        cli.norm(),
        start.elapsed().as_secs_f64(),
        t_m,
    )?;
    let mut single = json!({
        "entrance": entrance,
        "exit": exit,
        "lower": se.lower.to_f64(),
        "upper": se.upper.to_f64(),
        "eta_final": se.eta,
        "rounds": se.rounds,
        "scheduler": { "vertex": se.scheduler.vertex, "replayed": replayed.to_f64() },
    });
    if T::EXACT {
        single["lower_exact"] = json!(se.lower.to_string());
        single["upper_exact"] = json!(se.upper.to_string());
        single["scheduler"]["replayed_exact"] = json!(replayed.to_string());
    }
    r.extra.insert("single_exit".into(), single);
    r.extra.insert(
        "cache".into(),
        json!({ "hits": cache.hits(), "misses": cache.misses(), "leaf_runs": cache.leaf_runs() }),
    );
    Ok(r)
}

fn pareto<T: Scalar>(
    cli: &Cli,
    d: &Diagram<T>,
    entrance: usize,
    start: Instant,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (r, a) = mono(cli, d, start)?;
    let e = a.entrances.get(entrance).ok_or_else(|| {
        CliError::Input(format!("entrance {entrance} out of range ({} available)", a.entrances.len()))
    })?;
    let mut lower = e.lower_points();
    lower.sort_by(|p, q| q.partial_cmp(p).expect("finite coordinates"));
    let csv = to_csv(&lower);
    match &cli.out {
        None => write_out(stdout, csv.trim_end()),
        Some(path) => {
            write_file(path, &csv)?;
            if cli.plot {
                if e.num_exits != 2 {
                    return Err(CliError::Config(format!(
                        "--plot needs two exits, the model has {}",
                        e.num_exits
                    )));
                }
                let upper = e.upper_points()?;
                let mut svg_path = path.clone().into_os_string();
                svg_path.push(".svg");
                write_file(Path::new(&svg_path), &svg::plot(&lower, &upper))?;
            }
            write_out(stdout, &emit_report(&r))
        }
    }
}

fn compare<T: Scalar>(
    cli: &Cli,
    d: &Diagram<T>,
    start: Instant,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (rm, am) = mono(cli, d, start)?;
    let comp_start = Instant::now();
    let (rc, ac) = comp(cli, d, comp_start)?;
    let violations = sandwich_violations(&am, &ac)?;
    let out = json!({
        "mono": serde_json::to_value(&rm).expect("plain data"),
        "comp": serde_json::to_value(&rc).expect("plain data"),
        "sandwich": { "ok": violations.is_empty(), "violations": violations },
    });
    let text = serde_json::to_string_pretty(&out).expect("plain data");
    if let Some(path) = &cli.out {
        write_file(path, &text)?;
    }
    write_out(stdout, &text)?;
    if !violations.is_empty() {
        return Err(CliError::Internal(format!(
            "sandwich cross-check failed: {}",
            violations.join("; ")
        )));
    }
    Ok(())
}

/// Lower vertices of either engine that the other engine's upper set
/// excludes.
pub fn sandwich_violations<T: Scalar>(
    mono: &SoundApproximation<T>,
    comp: &SoundApproximation<T>,
) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    if mono.entrances.len() != comp.entrances.len() {
        return Err(CliError::Internal("engines disagree on the number of entrances".into()));
    }
    for (i, (m, c)) in mono.entrances.iter().zip(&comp.entrances).enumerate() {
        for p in m.lower_points() {
            if !c.upper_contains(&p)? {
                out.push(format!("entrance {i}: mono point {} outside comp U", sdp_geometry::fmt_point(&p)));
            }
        }
        for p in c.lower_points() {
            if !m.upper_contains(&p)? {
                out.push(format!("entrance {i}: comp point {} outside mono U", sdp_geometry::fmt_point(&p)));
            }
        }
    }
    Ok(out)
}

fn bench_instance<T: Scalar>(cli: &Cli) -> Result<Diagram<T>, CliError> {
    let Command::Bench {
        family,
        n,
        side,
        safety,
        wind,
        bands,
        rounds,
    } = &cli.command
    else {
        unreachable!("called for bench only")
    };
    let safety = match safety {
        SafetyArg::Safe => Safety::Safe,
        SafetyArg::Unsafe => Safety::Unsafe,
    };
    let wind = match wind {
        WindArg::Calm => Wind::Calm,
        WindArg::Windy => Wind::Windy,
    };
    let bench = |e: sdp_benchgen::BenchError| CliError::Input(e.to_string());
    let room = |unidirectional: bool| -> Result<Arc<_>, CliError> {
        let spec = RoomSpec {
            unidirectional,
            ..RoomSpec::new(*side, safety, wind, cli.seed)
        };
        Ok(Arc::new(gen_room::<T>(&spec).map_err(bench)?))
    };
    Ok(match family {
        Family::Room => Diagram::leaf_arc("room", room(false)?),
        Family::Dice => {
            let spec = DiceSpec {
                rounds: *rounds,
                ..DiceSpec::with_bands(*bands)
            };
            Diagram::leaf("dice", gen_dice::<T>(&spec).map_err(bench)?)
        }
        Family::Chain => gen_chain(*n, room(false)?).map_err(bench)?,
        Family::Unigrid => gen_unigrid(*n, room(true)?).map_err(bench)?,
        Family::Bigrid => gen_bigrid(*n, room(false)?).map_err(bench)?,
    })
}
