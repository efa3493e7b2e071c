use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tangentscope_core::dyadic::{Dyadic, DyadicRect, RareSequence, RectBasis, DEFAULT_RESOLUTION_CAP};
use tangentscope_core::kernels::KernelSpec;
use tangentscope_core::regions::ApproachCurve;

#[derive(Debug, Parser)]
#[command(
    name = "tangentscope",
    version,
    about = "Approximate identities, tangential convergence and dyadic bases"
)]
pub struct Cli {
    /// Replay a saved `run.json`.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the one stored in `--config`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Everything a run depends on; written to `<out>/run.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub out: PathBuf,
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Region functional tables (Π, Π_p, Π̃_p, Π_∞, Π*, Carlsson bound).
    Pi(PiArgs),
    /// Convergence of kernel averages along the approach region at one point.
    Converge(ConvergeArgs),
    /// λ-maximal operator with weak-type and domination checks.
    Maximal(MaximalArgs),
    /// Oscillation of averages along `x + λ(r)` at sampled points.
    Osc(OscArgs),
    /// Finite-depth divergence constructions.
    #[command(subcommand)]
    Counterexample(CounterexampleCommand),
    /// Exact dyadic constructions and covering checks.
    #[command(subcommand)]
    Dyadic(DyadicCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Plain,
    P,
    TildeP,
    Infty,
    Star,
    Carlsson,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, default_value = "poisson")]
    pub kernel: KernelSpec,
    #[arg(long, default_value = "nontangential:c=1")]
    pub curve: ApproachCurve,
    /// Grid size N.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PiArgs {
    #[arg(long, value_enum)]
    pub functional: Functional,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Radii `1 − 2^{−k}`, `k = 1..=rmax-exponent`.
    #[arg(long, default_value_t = 20)]
    pub rmax_exponent: u32,
    /// δ-sequence `2^{−j}`, `j = 1..=deltas` (Π_∞ and Π* only).
    #[arg(long, default_value_t = 10)]
    pub deltas: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `f ≡ 1`.
    Const,
    /// Indicator of `[0, π)`.
    Step,
    /// `cos x`.
    Cos,
    /// Unit-mass box on the 7 grid cells nearest 0.
    Bump,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct SignalArgs {
    /// GridFunction CSV (`theta,value`).
    #[arg(long = "f")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// ArcSet CSV (`start,end`); the signal is its indicator.
    #[arg(long)]
    pub arcs: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Point at which convergence is probed.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub x: f64,
    #[arg(long, default_value_t = 14)]
    pub rmax_exponent: u32,
    /// Offsets `θ` probed per radius, evenly spread over `(−λ(r), λ(r))`.
    #[arg(long, default_value_t = 9)]
    pub offsets: usize,
    /// Fejér orders for the shift check `σ_n(x + c/n)`.
    #[arg(long, value_delimiter = ',')]
    pub fejer_orders: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub fejer_shift: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct MaximalArgs {
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 14)]
    pub rmax_exponent: u32,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 32)]
    pub t_points: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct OscArgs {
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Radius window `1 − 2^{−k}`, `k = rmin-exponent..=rmax-exponent`.
    #[arg(long, default_value_t = 7)]
    pub rmin_exponent: u32,
    #[arg(long, default_value_t = 14)]
    pub rmax_exponent: u32,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleCommand {
    /// Set whose indicator's averages keep oscillating along the curve
    Littlewood(ConstructionArgs),
    /// Set built from alternating combs of shrinking width
    Alternating(ConstructionArgs),
    /// Integrable function whose averages blow up along the curve
    L1div(ConstructionArgs),
    /// Blaschke product with no limit along the curve
    Blaschke(ConstructionArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ConstructionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Depth K.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Witness sample points.
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicCommand {
    /// Counterexample block of height L on a dyadic square.
    L4(L4Args),
    /// Global function built from blocks placed in the gaps of Δ.
    Saks(SaksArgs),
    /// Rounding rectangles up into a rare basis.
    Cover(CoverArgs),
    /// Quasi-coverability certificate search.
    Quasi(QuasiArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct L4Args {
    #[arg(long = "L")]
    pub big_l: u32,
    /// Square `i,j,m` (1-based indices, side `2^{−m}`).
    #[arg(long, default_value = "1,1,0", value_parser = parse_square)]
    pub square: DyadicRect,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION_CAP)]
    pub cap: u32,
    /// Sampled rectangles not inside the square.
    #[arg(long, default_value_t = 100)]
    pub exterior: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SaksArgs {
    /// Δ as a comma-separated increasing list.
    #[arg(long, value_parser = parse_sequence)]
    pub delta: RareSequence,
    /// Number of stages K.
    #[arg(long = "K", default_value_t = 1)]
    pub stages: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION_CAP)]
    pub cap: u32,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CoverArgs {
    #[arg(long, value_parser = parse_sequence)]
    pub delta: RareSequence,
    /// Rectangle `i,j,m1,m2`; random rectangles when absent.
    #[arg(long, value_parser = parse_rect)]
    pub rect: Option<DyadicRect>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct QuasiArgs {
    /// Rectangle `i,j,m1,m2` to cover.
    #[arg(long, value_parser = parse_rect)]
    pub rect: DyadicRect,
    /// Covering basis: `all`, `squares`, `rare:ν1,ν2,…` or `evens:n`.
    #[arg(long, value_parser = parse_basis)]
    pub pieces: RectBasis,
    #[arg(long, default_value = "all", value_parser = parse_basis)]
    pub ambient: RectBasis,
    /// Constant c ≥ 1 (dyadic: `4`, `3/2`, `5/2^3`).
    #[arg(long)]
    pub c: Dyadic,
    #[arg(long, default_value_t = 24)]
    pub search_resolution: u32,
}

fn ints(s: &str) -> Result<Vec<i64>, String> {
    s.split(',').map(|p| p.trim().parse::<i64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn exponent(v: i64) -> Result<u32, String> {
    u32::try_from(v).map_err(|_| format!("exponent {v} out of range"))
}

pub fn parse_rect(s: &str) -> Result<DyadicRect, String> {
    match ints(s)?.as_slice() {
        &[i, j, m1, m2] => Ok(DyadicRect::new(i, j, exponent(m1)?, exponent(m2)?)),
        _ => Err("expected i,j,m1,m2".into()),
    }
}

pub fn parse_square(s: &str) -> Result<DyadicRect, String> {
    match ints(s)?.as_slice() {
        &[i, j, m] => Ok(DyadicRect::square(i, j, exponent(m)?)),
        _ => Err("expected i,j,m".into()),
    }
}

pub fn parse_sequence(s: &str) -> Result<RareSequence, String> {
    let terms = ints(s)?.into_iter().map(exponent).collect::<Result<Vec<_>, _>>()?;
    RareSequence::new(terms).map_err(|e| e.to_string())
}

pub fn parse_basis(s: &str) -> Result<RectBasis, String> {
    match s.trim() {
        "all" => Ok(RectBasis::AllDyadic),
        "squares" => Ok(RectBasis::Squares),
        other => {
            if let Some(list) = other.strip_prefix("rare:") {
                return parse_sequence(list).map(RectBasis::Rare);
            }
            if let Some(n) = other.strip_prefix("evens:") {
                let n: u32 = n.parse().map_err(|e| format!("{n:?}: {e}"))?;
                return Ok(RectBasis::Rare(RareSequence::evens(n)));
            }
            Err(format!("unknown basis {other:?} (all, squares, rare:…, evens:n)"))
        }
    }
}
