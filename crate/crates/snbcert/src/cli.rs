//! `snbcert` command line. Exit codes: 0 certified (or success for commands
//! without a verdict), 2 inconclusive, 1 error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use snbcert_core::channels::{dephasing, depolarizing, KrausChannel, QuantumMap};
use snbcert_core::circuit::prep_gates;
use snbcert_core::decomposition::{decompose_witness, game_inputs_from_decomposition, standard_basis, StateBasis};
use snbcert_core::game::{
    certification_game, evaluate, witness_decomposition, GameResult, MeasurementModel, Mode, Verdict,
};
use snbcert_core::witnesses::optimal_sn_witness;
use snbcert_core::GameSpec;

use crate::formats::{
    write_json, BasisFile, Channel, ChannelFile, ChannelKind, CircuitFile, DecompositionFile, GameFile, ResultRecord,
    WitnessFile,
};
use crate::parallel::sample_parallel;
use crate::sweep::{run_sweep, write_csv, Family, LambdaGrid, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "snbcert", version, about = "Certify that a quantum channel preserves Schmidt number above k")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play the class-k certification game on one channel.
    Certify(CertifyArgs),
    /// Sweep the noise parameter of a channel family and write CSV.
    Sweep(SweepArgs),
    /// Expand a witness over product states.
    Decompose(DecomposeArgs),
    /// Finite-shot simulation with an optional per-round log.
    Simulate(SimulateArgs),
    /// Export the measurement circuit as a gate list.
    Circuit(CircuitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Depolarizing,
    Dephasing,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeName {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    #[value(name = "w2opt-d3")]
    W2OptD3,
    #[value(name = "w1-d3")]
    W1D3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasurementName {
    Bell,
    Circuit,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Built-in channel family.
    #[arg(long, conflicts_with_all = ["choi", "kraus"])]
    pub family: Option<FamilyName>,
    /// Channel JSON file with kind "choi".
    #[arg(long, value_name = "FILE", conflicts_with = "kraus")]
    pub choi: Option<PathBuf>,
    /// Channel JSON file with kind "kraus".
    #[arg(long, value_name = "FILE")]
    pub kraus: Option<PathBuf>,
    /// Local dimension.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Noise parameter of the built-in family.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModeArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeName,
    /// Rounds in sampled mode.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    /// RNG seed; required in sampled mode.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ModeArgs {
    fn mode(&self) -> Result<Mode> {
        match self.mode {
            ModeName::Exact => Ok(Mode::Exact),
            ModeName::Sampled => {
                let seed = self.seed.ok_or_else(|| anyhow!("--seed is required in sampled mode"))?;
                if self.shots == 0 {
                    bail!("--shots must be at least 1");
                }
                Ok(Mode::Sampled { shots: self.shots, seed })
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Schmidt-number class tested against (1 <= k < d).
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// Also write the JSON record here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub k: usize,
    /// Grid as start:stop:step.
    #[arg(long, default_value = "0:1:0.01", allow_hyphen_values = true)]
    pub lambda_grid: String,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// CSV destination (stdout if absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write one JSON result record per grid point.
    #[arg(long, value_name = "PATH")]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, value_enum, conflicts_with = "witness")]
    pub builtin: Option<Builtin>,
    /// Witness JSON file.
    #[arg(long, value_name = "FILE")]
    pub witness: Option<PathBuf>,
    /// `default` or a basis JSON file.
    #[arg(long, default_value = "default")]
    pub basis: String,
    /// JSON destination (stdout if absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write the game spec built from the decomposition.
    #[arg(long, value_name = "PATH")]
    pub game_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Game spec JSON file replacing the built-in class-k game.
    #[arg(long, value_name = "FILE")]
    pub game: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bell")]
    pub measurement: MeasurementName,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    /// Per-round JSON lines.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Also write the summary record here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Certify(a) => certify(a),
        Command::Sweep(a) => sweep(a),
        Command::Decompose(a) => decompose(a),
        Command::Simulate(a) => simulate(a),
        Command::Circuit(a) => circuit(a),
    }
}

fn load_channel_file(path: &Path, expected: ChannelKind) -> Result<Channel> {
    let file = ChannelFile::load(path)?;
    if file.kind != expected {
        bail!(
            "{} declares kind {:?}, expected {:?}",
            path.display(),
            file.kind,
            expected
        );
    }
    file.into_channel().with_context(|| format!("invalid channel in {}", path.display()))
}

fn file_channel(a: &ChannelArgs) -> Result<Option<Channel>> {
    Ok(match (&a.choi, &a.kraus) {
        (Some(p), _) => Some(load_channel_file(p, ChannelKind::Choi)?),
        (_, Some(p)) => Some(load_channel_file(p, ChannelKind::Kraus)?),
        _ => None,
    })
}

/// The channel named by `--family`/`--lambda`, `--choi` or `--kraus`.
fn resolve_channel(a: &ChannelArgs) -> Result<(Channel, Option<f64>)> {
    if let Some(ch) = file_channel(a)? {
        if a.lambda.is_some() {
            bail!("--lambda applies only to --family channels");
        }
        return Ok((ch, None));
    }
    let family = a
        .family
        .ok_or_else(|| anyhow!("a channel is required: --family, --choi or --kraus"))?;
    let lambda = a.lambda;
    let need = || lambda.ok_or_else(|| anyhow!("--lambda is required for the {family:?} family"));
    let ch = match family {
        FamilyName::Depolarizing => depolarizing(a.d, need()?)?,
        FamilyName::Dephasing => dephasing(a.d, need()?)?,
        FamilyName::Identity => {
            if a.d < 2 {
                bail!("dimension must be >= 2, got {}", a.d);
            }
            KrausChannel::identity(a.d)
        }
    };
    Ok((Channel::Kraus(ch), lambda))
}

fn check_square(ch: &dyn QuantumMap, d: usize) -> Result<()> {
    if ch.d_in() != d || ch.d_out() != d {
        bail!(
            "channel is {} -> {} but the game is played at d = {d}; pass --d {}",
            ch.d_in(),
            ch.d_out(),
            ch.d_in()
        );
    }
    Ok(())
}

fn emit_line(line: &str, out: Option<&Path>) -> Result<()> {
    println!("{line}");
    if let Some(p) = out {
        std::fs::write(p, format!("{line}\n")).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

fn verdict_code(r: &GameResult) -> i32 {
    match r.verdict {
        Verdict::CertifiedNonKSnb => 0,
        Verdict::Inconclusive => 2,
    }
}

fn game_result(spec: &GameSpec, ch: &Channel, mode: Mode) -> Result<GameResult> {
    Ok(match mode {
        Mode::Exact => evaluate(spec, ch.as_map(), mode)?,
        Mode::Sampled { shots, seed } => sample_parallel(spec, ch.as_map(), shots, seed, false)?.0,
    })
}

fn certify(a: &CertifyArgs) -> Result<i32> {
    let mode = a.mode.mode()?;
    let (ch, lambda) = resolve_channel(&a.channel)?;
    let d = ch.as_map().d_in();
    check_square(ch.as_map(), d)?;
    let spec = certification_game(d, a.k, MeasurementModel::BellProjector)?;
    let result = game_result(&spec, &ch, mode)?;
    emit_line(&ResultRecord::new(lambda, a.k, &result).to_line(), a.out.as_deref())?;
    Ok(verdict_code(&result))
}

fn sweep(a: &SweepArgs) -> Result<i32> {
    let mode = a.mode.mode()?;
    let grid = LambdaGrid::parse(&a.lambda_grid)?;
    if a.channel.lambda.is_some() {
        bail!("use --lambda-grid with sweep, not --lambda");
    }
    let (family, d) = match (file_channel(&a.channel)?, a.channel.family) {
        (Some(ch), _) => {
            let d = ch.as_map().d_in();
            (Family::File(ch), d)
        }
        (None, Some(FamilyName::Depolarizing)) => (Family::Depolarizing, a.channel.d),
        (None, Some(FamilyName::Dephasing)) => (Family::Dephasing, a.channel.d),
        (None, Some(FamilyName::Identity)) => bail!("the identity family has no noise parameter to sweep"),
        (None, None) => bail!("a channel is required: --family, --choi or --kraus"),
    };
    let cfg = SweepConfig {
        family,
        d,
        k: a.k,
        grid,
        mode,
    };
    let rows = run_sweep(&cfg)?;
    match &a.out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    if let Some(p) = &a.records {
        let mut text = String::new();
        for r in &rows {
            text.push_str(&ResultRecord::new(Some(r.lambda), r.k, &r.result).to_line());
            text.push('\n');
        }
        std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(0)
}

fn load_basis(arg: &str, d: usize) -> Result<StateBasis> {
    let basis = if arg == "default" {
        standard_basis(d)?
    } else {
        BasisFile::load(Path::new(arg))?.into_basis()?
    };
    if basis.d() != d {
        bail!("basis is on C^{} but the witness needs C^{d}", basis.d());
    }
    Ok(basis)
}

fn decompose(a: &DecomposeArgs) -> Result<i32> {
    let w = match (&a.builtin, &a.witness) {
        (Some(Builtin::W2OptD3), _) => optimal_sn_witness(3, 2)?,
        (Some(Builtin::W1D3), _) => optimal_sn_witness(3, 1)?,
        (None, Some(p)) => WitnessFile::load(p)?.into_witness()?,
        (None, None) => bail!("a witness is required: --builtin or --witness"),
    };
    let basis = load_basis(&a.basis, w.d())?;
    let pd = decompose_witness(&w, &basis, &basis)?;
    let text = serde_json::to_string_pretty(&DecompositionFile::from_decomposition(&pd))?;
    match &a.out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("cannot write {}", p.display()))?,
        None => println!("{text}"),
    }
    eprintln!("reconstruction residual {:e}", pd.residual);
    if let Some(p) = &a.game_out {
        let spec = GameSpec::from_decomposition(&pd, MeasurementModel::BellProjector)?;
        write_json(p, &GameFile::from_spec(&spec))?;
    }
    Ok(0)
}

fn simulate(a: &SimulateArgs) -> Result<i32> {
    if a.shots == 0 {
        bail!("--shots must be at least 1");
    }
    let (ch, lambda) = resolve_channel(&a.channel)?;
    let measurement = match a.measurement {
        MeasurementName::Bell => MeasurementModel::BellProjector,
        MeasurementName::Circuit => MeasurementModel::Circuit,
    };
    let spec = match &a.game {
        Some(p) => GameFile::load(p)?.into_spec()?,
        None => {
            let d = ch.as_map().d_in();
            check_square(ch.as_map(), d)?;
            certification_game(d, a.k, measurement)?
        }
    };
    let (result, log) = sample_parallel(&spec, ch.as_map(), a.shots, a.seed, a.log.is_some())?;
    if let Some(p) = &a.log {
        let f = File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
        let mut w = BufWriter::new(f);
        for r in &log {
            writeln!(
                w,
                "{{\"shot\":{},\"x\":{},\"y\":{},\"outcome\":{},\"payoff\":{}}}",
                r.shot,
                r.x,
                r.y,
                r.outcome,
                serde_json::to_string(&r.payoff)?
            )?;
        }
        w.flush()?;
    }
    emit_line(&ResultRecord::new(lambda, a.k, &result).to_line(), a.out.as_deref())?;
    Ok(0)
}

fn circuit(a: &CircuitArgs) -> Result<i32> {
    let pd = witness_decomposition(a.d, a.k)?;
    let (psi, phi) = game_inputs_from_decomposition(&pd);
    let prep_a: Vec<_> = prep_gates(&psi)?.iter().map(|g| g.matrix().clone()).collect();
    let prep_b: Vec<_> = prep_gates(&phi)?.iter().map(|g| g.matrix().clone()).collect();
    let desc = CircuitFile::build(a.d, &prep_a, &prep_b)?;
    match &a.out {
        Some(p) => write_json(p, &desc)?,
        None => println!("{}", serde_json::to_string_pretty(&desc)?),
    }
    Ok(0)
}
