//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxdim::{
    box_count_series, estimate_dimension, fif_bounds, finite_energy_bounds, harmonic_bounds,
    holder_estimate, BoundKind, BoundReport, CountMethod, DEFAULT_OVERSAMPLE,
};
use crate::energy::{energy_series, energy_series_of};
use crate::fif::{build_fif, AlphaSpec, FifInstance, FunctionProvider};
use crate::format::{
    read_vertex_csv, write_energy_csv, write_gasket_edges, write_gasket_vertices, write_vertex_csv,
    JsonObject,
};
use crate::function::VertexFunction;
use crate::gasket::{GasketLevel, LEVEL_CAP};
use crate::harmonic::{
    harmonic_extend, piecewise_harmonic_extend, BoundaryValues, HarmonicSpec, PiecewiseHarmonicSpec,
};

pub const LEVEL_CAP_ENV: &str = "GASKETDIM_LEVEL_CAP";

/// Tolerance used when a bound report is requested from `boxdim`.
pub const REPORT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "gasketdim",
    version,
    about = "Energies and graph dimensions of functions on the Sierpinski gasket"
)]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Seed for every randomized input.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vertices (and optionally edges) of the level-M graph.
    Gasket(GasketArgs),
    /// Harmonic or piecewise harmonic extension.
    Harmonic(HarmonicArgs),
    /// α-fractal interpolation function.
    Fif(FifArgs),
    /// Energy series of a tabulated function.
    Energy(EnergyArgs),
    /// Box counts and a dimension estimate for a tabulated function.
    Boxdim(BoxdimArgs),
    /// Closed-form dimension bounds.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct GasketArgs {
    #[arg(long)]
    pub level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the edge list here.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HarmonicArgs {
    /// `A,B,C` or `random`.
    #[arg(
        long,
        conflicts_with = "piecewise",
        required_unless_present = "piecewise"
    )]
    pub boundary: Option<String>,
    #[arg(long)]
    pub level: u32,
    /// JSON file with per-cell boundary values.
    #[arg(long)]
    pub piecewise: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FifArgs {
    #[arg(long)]
    pub n: u32,
    /// One value for every word, `3^n` values, or `random:MAX`.
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub f: String,
    /// Base function; `harmonic` means the harmonic interpolant of f.
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub level: u32,
    /// Write the energy series instead of the vertex values.
    #[arg(long)]
    pub energy_series: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `M0..M1`, inclusive.
    #[arg(long)]
    pub levels: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoxdimArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub kmin: u32,
    #[arg(long)]
    pub kmax: u32,
    #[arg(long, default_value = "column")]
    pub method: String,
    #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
    pub oversample: u32,
    /// Emit `(k ln 2, ln N)` pairs instead of the count table.
    #[arg(long)]
    pub plot_data: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the estimate (and bound report) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Compare the estimate with these bounds.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
}

/// Parses arguments, runs the command and maps failures to a one-line
/// message on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(args) => args,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &anyhow::Error) -> ExitCode {
    let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
    eprintln!("error: {}", chain.join(": ").replace('\n', " "));
    ExitCode::FAILURE
}

/// Replaces `--config FILE` by the flags it contains. The file holds one JSON
/// object with a `command` key; other keys are flag names (underscores allowed)
/// and `true` stands for a bare flag.
fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .ok_or_else(|| anyhow!("--config needs a file"))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", Path::new(path).display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).context("parsing config")?;
    let object = value
        .as_object()
        .ok_or_else(|| anyhow!("config must be a JSON object"))?;
    let command = object
        .get("command")
        .and_then(|c| c.as_str())
        .ok_or_else(|| anyhow!("config needs a string \"command\""))?;

    let mut out: Vec<OsString> = args[..pos].to_vec();
    out.extend(args[pos + 2..].iter().cloned());
    let mut flags = vec![OsString::from(command)];
    for (key, value) in object {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Bool(true) => flags.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => flags.extend([flag.into(), s.into()]),
            serde_json::Value::Number(n) => flags.extend([flag.into(), n.to_string().into()]),
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                flags.extend([flag.into(), parts.join(",").into()]);
            }
            serde_json::Value::Object(_) => bail!("config key {key:?} cannot be an object"),
        }
    }
    // global flags may precede the subcommand, subcommand flags must follow it
    out.extend(flags);
    Ok(out)
}

/// Level cap, lowered by `GASKETDIM_LEVEL_CAP` if set.
pub fn level_cap() -> anyhow::Result<u32> {
    match std::env::var(LEVEL_CAP_ENV) {
        Ok(text) => {
            let cap: u32 = text
                .trim()
                .parse()
                .map_err(|_| anyhow!("{LEVEL_CAP_ENV}={text:?} is not a level"))?;
            Ok(cap.min(LEVEL_CAP))
        }
        Err(_) => Ok(LEVEL_CAP),
    }
}

fn check_cap(level: u32) -> anyhow::Result<()> {
    let cap = level_cap()?;
    if level > cap {
        bail!("level {level} exceeds the level cap {cap}");
    }
    Ok(())
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if cli.threads == 0 {
        bail!("--threads must be positive");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .context("starting worker threads")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    pool.install(|| match &cli.command {
        Command::Gasket(args) => run_gasket(args),
        Command::Harmonic(args) => run_harmonic(args, &mut rng),
        Command::Fif(args) => run_fif(args, &mut rng),
        Command::Energy(args) => run_energy(args),
        Command::Boxdim(args) => run_boxdim(args),
        Command::Bounds(args) => run_bounds(args),
    })
}

fn emit(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_gasket(args: &GasketArgs) -> anyhow::Result<()> {
    check_cap(args.level)?;
    let level = GasketLevel::shared(args.level)?;
    emit(args.out.as_deref(), |w| {
        Ok(write_gasket_vertices(w, &level)?)
    })?;
    if let Some(path) = &args.edges {
        emit(Some(path), |w| Ok(write_gasket_edges(w, &level)?))?;
    }
    Ok(())
}

/// `A,B,C` or `random` (three values uniform in `[-1, 1]`).
pub fn parse_boundary(text: &str, rng: &mut impl Rng) -> anyhow::Result<BoundaryValues> {
    if text.trim() == "random" {
        let mut draw = || rng.gen_range(-1.0..=1.0);
        return Ok(BoundaryValues::new(draw(), draw(), draw())?);
    }
    let values = parse_reals(text)?;
    let [a, b, c]: [f64; 3] = values
        .try_into()
        .map_err(|v: Vec<f64>| anyhow!("--boundary needs 3 values, got {}", v.len()))?;
    Ok(BoundaryValues::new(a, b, c)?)
}

fn parse_reals(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{s:?} is not a number"))
        })
        .collect()
}

fn run_harmonic(args: &HarmonicArgs, rng: &mut ChaCha8Rng) -> anyhow::Result<()> {
    check_cap(args.level)?;
    let u = match (&args.boundary, &args.piecewise) {
        (Some(text), None) => {
            harmonic_extend(&HarmonicSpec::new(parse_boundary(text, rng)?), args.level)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            piecewise_harmonic_extend(&PiecewiseHarmonicSpec::from_json(&text)?, args.level)?
        }
        _ => bail!("give exactly one of --boundary and --piecewise"),
    };
    emit(args.out.as_deref(), |w| Ok(write_vertex_csv(w, &u)?))
}

/// One value (used for every word), `3^n` values in word order, or
/// `random:MAX` (uniform in `(-MAX, MAX)`).
pub fn parse_alpha(text: &str, n: u32, rng: &mut impl Rng) -> anyhow::Result<AlphaSpec> {
    let count = 3usize
        .checked_pow(n)
        .ok_or_else(|| anyhow!("n = {n} is too large"))?;
    let alphas = if let Some(max) = text.trim().strip_prefix("random:") {
        let max: f64 = max
            .parse()
            .map_err(|_| anyhow!("{max:?} is not a number"))?;
        if !(max > 0.0 && max <= 1.0) {
            bail!("random scaling bound {max} must lie in (0, 1]");
        }
        (0..count).map(|_| rng.gen_range(-max..max)).collect()
    } else {
        let values = parse_reals(text)?;
        match values.len() {
            1 => vec![values[0]; count],
            len if len == count => values,
            len => bail!("--alpha needs 1 or {count} values, got {len}"),
        }
    };
    Ok(AlphaSpec::new(n, alphas)?)
}

/// The `--b` argument: `harmonic` or any provider expression.
fn parse_base(text: &str, f: &FunctionProvider) -> anyhow::Result<FunctionProvider> {
    if text.trim() == "harmonic" {
        Ok(f.harmonic_interpolant()?)
    } else {
        Ok(text.parse()?)
    }
}

fn fif_header(instance: &FifInstance) -> anyhow::Result<String> {
    Ok(JsonObject::new()
        .int("n", instance.alpha.n() as i64)
        .reals("alphas", instance.alpha.alphas())
        .string("f_spec", &instance.f.to_string())
        .string("b_spec", &instance.b.to_string())
        .int("M", instance.level() as i64)
        .boolean("coplanar", instance.interpolation_coplanar()?)
        .finish())
}

fn run_fif(args: &FifArgs, rng: &mut ChaCha8Rng) -> anyhow::Result<()> {
    check_cap(args.level)?;
    let f: FunctionProvider = args.f.parse().context("--f")?;
    let b = parse_base(&args.b, &f).context("--b")?;
    let alpha = parse_alpha(&args.alpha, args.n, rng)?;
    let instance = build_fif(&f, &b, &alpha, args.level)?;
    if args.energy_series {
        let series = energy_series(&instance, args.level)?;
        emit(args.out.as_deref(), |w| Ok(write_energy_csv(w, &series)?))
    } else {
        let header = fif_header(&instance)?;
        emit(args.out.as_deref(), |w| {
            writeln!(w, "# {header}")?;
            Ok(write_vertex_csv(w, &instance.values)?)
        })
    }
}

fn read_input(path: &Path) -> anyhow::Result<VertexFunction> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let u = read_vertex_csv(file).with_context(|| format!("reading {}", path.display()))?;
    check_cap(u.level())?;
    Ok(u)
}

/// `M0..M1` (inclusive) or a single level.
pub fn parse_levels(text: &str) -> anyhow::Result<(u32, u32)> {
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| anyhow!("{s:?} is not a level"))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
        None => {
            let m = parse(text)?;
            (m, m)
        }
    };
    if lo > hi {
        bail!("empty level range {text:?}");
    }
    Ok((lo, hi))
}

fn run_energy(args: &EnergyArgs) -> anyhow::Result<()> {
    let u = read_input(&args.input)?;
    let (lo, hi) = parse_levels(&args.levels)?;
    if hi > u.level() {
        bail!("input has level {}, cannot report level {hi}", u.level());
    }
    let series = energy_series_of(&u, lo..=hi)?;
    emit(args.out.as_deref(), |w| Ok(write_energy_csv(w, &series)?))
}

/// FIF metadata found in a `# {...}` header line of a vertex table.
struct FifHeader {
    alpha: AlphaSpec,
    f: FunctionProvider,
    b: FunctionProvider,
}

fn read_fif_header(path: &Path) -> anyhow::Result<Option<FifHeader>> {
    let text = std::fs::read_to_string(path)?;
    let Some(json) = text.lines().next().and_then(|l| l.strip_prefix("# ")) else {
        return Ok(None);
    };
    let value: serde_json::Value = serde_json::from_str(json).context("parsing FIF header")?;
    let field = |key: &str| {
        value
            .get(key)
            .ok_or_else(|| anyhow!("FIF header lacks {key:?}"))
    };
    let n = field("n")?
        .as_u64()
        .ok_or_else(|| anyhow!("FIF header n is not an integer"))? as u32;
    let alphas: Vec<f64> = serde_json::from_value(field("alphas")?.clone())?;
    let spec = |key: &str| -> anyhow::Result<FunctionProvider> {
        let s = field(key)?
            .as_str()
            .ok_or_else(|| anyhow!("FIF header {key} is not a string"))?;
        Ok(s.parse()?)
    };
    Ok(Some(FifHeader {
        alpha: AlphaSpec::new(n, alphas)?,
        f: spec("f_spec")?,
        b: spec("b_spec")?,
    }))
}

/// Level used when estimating Hölder exponents of the seed and base.
const HOLDER_LEVEL: u32 = 12;

fn run_boxdim(args: &BoxdimArgs) -> anyhow::Result<()> {
    let method: CountMethod = args.method.parse()?;
    let u = read_input(&args.input)?;
    let series = box_count_series(&u, args.kmin, args.kmax, args.oversample, method)?;
    emit(args.out.as_deref(), |w| {
        let text = if args.plot_data {
            series.to_plot_csv()
        } else {
            series.to_csv()
        };
        Ok(w.write_all(text.as_bytes())?)
    })?;

    let Some(report_path) = &args.report else {
        if args.kind.is_some() {
            bail!("--kind needs --report");
        }
        return Ok(());
    };
    let estimate = estimate_dimension(&series, args.kmin, args.kmax)?;
    let json = match &args.kind {
        None => JsonObject::new()
            .string("method", &method.to_string())
            .object("estimate", estimate.to_json()),
        Some(kind) => {
            let kind: BoundKind = kind.parse()?;
            let bounds = match kind {
                BoundKind::Harmonic => harmonic_bounds(),
                BoundKind::FiniteEnergy => finite_energy_bounds(),
                BoundKind::Fif => {
                    let header = read_fif_header(&args.input)?;
                    let psi = match (args.psi, &header) {
                        (Some(psi), _) => psi,
                        (None, Some(h)) => h.alpha.psi(),
                        (None, None) => bail!("--kind fif needs --psi or a FIF input"),
                    };
                    let eta = match (args.eta, &header) {
                        (Some(eta), _) => eta,
                        (None, Some(h)) => {
                            let level = HOLDER_LEVEL.min(level_cap()?).max(4);
                            let ef = holder_estimate(&h.f.sample(level)?)?.for_bounds();
                            let eb = holder_estimate(&h.b.sample(level)?)?.for_bounds();
                            ef.min(eb)
                        }
                        (None, None) => bail!("--kind fif needs --eta or a FIF input"),
                    };
                    let b = fif_bounds(psi, eta)?;
                    (b.lower, b.upper)
                }
            };
            JsonObject::new()
                .string("method", &method.to_string())
                .object(
                    "bounds",
                    BoundReport::new(kind, bounds, estimate, REPORT_TOLERANCE).to_json(),
                )
        }
    };
    emit(Some(report_path), |w| Ok(writeln!(w, "{}", json.finish())?))
}

fn run_bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    let kind: BoundKind = args.kind.parse()?;
    let json = match kind {
        BoundKind::Harmonic | BoundKind::FiniteEnergy => {
            if args.psi.is_some() || args.eta.is_some() {
                bail!("--psi and --eta only apply to --kind fif");
            }
            let (lower, upper) = if kind == BoundKind::Harmonic {
                harmonic_bounds()
            } else {
                finite_energy_bounds()
            };
            JsonObject::new()
                .string("kind", &kind.to_string())
                .real("lower", lower)
                .real("upper", upper)
        }
        BoundKind::Fif => {
            let (Some(psi), Some(eta)) = (args.psi, args.eta) else {
                bail!("--kind fif needs --psi and --eta");
            };
            let b = fif_bounds(psi, eta)?;
            JsonObject::new()
                .string("kind", &kind.to_string())
                .real("lower", b.lower)
                .real("upper", b.upper)
                .string(
                    "case",
                    if b.case == crate::boxdim::FifCase::I {
                        "I"
                    } else {
                        "II"
                    },
                )
                .boolean("vacuous", b.vacuous)
        }
    };
    emit(None, |w| Ok(writeln!(w, "{}", json.finish())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(parse_alpha("0.2", 1, &mut rng).unwrap().alphas(), &[0.2; 3]);
        assert_eq!(
            parse_alpha("0.1,0.2,0.3", 1, &mut rng).unwrap().alphas(),
            &[0.1, 0.2, 0.3]
        );
        assert!(parse_alpha("0.1,0.2", 1, &mut rng).is_err());
        assert!(parse_alpha("1.5", 1, &mut rng).is_err());
        let a = parse_alpha("random:0.5", 2, &mut rng).unwrap();
        assert_eq!(a.alphas().len(), 9);
        assert!(a.sup_norm() < 0.5);
        let mut again = ChaCha8Rng::seed_from_u64(0);
        parse_alpha("0.2", 1, &mut again).unwrap();
        parse_alpha("0.1,0.2,0.3", 1, &mut again).unwrap();
        assert_eq!(parse_alpha("random:0.5", 2, &mut again).unwrap(), a);
    }

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("2..5").unwrap(), (2, 5));
        assert_eq!(parse_levels("2..=5").unwrap(), (2, 5));
        assert_eq!(parse_levels("3").unwrap(), (3, 3));
        assert!(parse_levels("5..2").is_err());
        assert!(parse_levels("a..2").is_err());
    }

    #[test]
    fn boundary_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            parse_boundary("1,0,0", &mut rng).unwrap().as_array(),
            [1.0, 0.0, 0.0]
        );
        assert!(parse_boundary("1,0", &mut rng).is_err());
        let r = parse_boundary("random", &mut rng).unwrap();
        assert!(r.as_array().iter().all(|v| v.abs() <= 1.0));
    }
}
