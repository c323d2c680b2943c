use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "graham-seq", version, about = "Valid orderings and subset-sum anticoncentration in Z_p")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a valid ordering by random shuffling and local repair.
    Order(OrderArgs),
    /// Check that an ordering has distinct partial sums (exit 1 if not).
    Verify(VerifyArgs),
    /// Largest point probability of the sum of a uniform m-subset.
    Maxprob(MaxprobArgs),
    /// Joint probability that a uniform chain hits the given sums.
    Chain(ChainArgs),
    /// Fourier-side level sets and lemma checks.
    Fourier(FourierArgs),
    /// Max point probability against the bounds over a list of m (CSV).
    Sweep(SweepArgs),
    /// Grid check of the chain-sum inequality.
    Lemmas(LemmasArgs),
    /// Collision endpoints and bad-event flags of one ordering.
    Events(EventsArgs),
}

/// Where the set comes from.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["set_file", "random_size"])))]
pub struct SetArgs {
    /// Modulus; required with --random-size, checked against the file otherwise.
    #[arg(long)]
    pub prime: Option<u64>,
    /// JSON {"p", "elements"} or text (p, then one element per line).
    #[arg(long)]
    pub set_file: Option<PathBuf>,
    /// Draw a uniform set of this size from Z_p \ {0} using the seed.
    #[arg(long)]
    pub random_size: Option<usize>,
    /// Accept 0 as an element.
    #[arg(long)]
    pub allow_zero: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FallbackArg {
    Backtrack,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CandidateArg {
    First,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
        }
    }
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 16)]
    pub window: usize,
    #[arg(long, default_value_t = 64)]
    pub max_restarts: usize,
    #[arg(long, value_enum, default_value_t = FallbackArg::Backtrack)]
    pub fallback: FallbackArg,
    #[arg(long, default_value_t = 24)]
    pub backtrack_threshold: usize,
    #[arg(long, value_enum, default_value_t = CandidateArg::First)]
    pub candidate_rule: CandidateArg,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub prime: Option<u64>,
    /// JSON {"p", "ordering"} or text (p, then the ordering one per line).
    #[arg(long)]
    pub ordering_file: PathBuf,
    /// Accept 0, which must then come first.
    #[arg(long)]
    pub allow_zero: bool,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct MaxprobArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the full distribution as z,count.
    #[arg(long)]
    pub counts_csv: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Strictly increasing sizes m_1 < ... < m_k < n.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// One target sum per size.
    #[arg(long, value_delimiter = ',', required = true)]
    pub targets: Vec<i128>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `paper` or a number used for every constant.
    #[arg(long, default_value = "paper")]
    pub constants: String,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub t: Vec<u64>,
    /// Any of est-Psi, Bt, Q-lower, Q-dual, sumset.
    #[arg(long, value_delimiter = ',', default_value = "est-Psi,Bt,Q-lower,Q-dual,sumset")]
    pub checks: Vec<String>,
    /// δ values for the sumset check: `a/b`, or `10t/m` for 10t/m at each t.
    #[arg(long, value_delimiter = ',', default_value = "10t/m,1/200")]
    pub delta: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub k: Vec<usize>,
    /// Include B_t, D_t and Q_{t,δ} membership lists in the report.
    #[arg(long)]
    pub level_sets: bool,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_list: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Mc)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ε for the log-corrected bound.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// `paper`, `fit` (largest C_emp of the sweep) or a number.
    #[arg(long, default_value = "paper")]
    pub constants: String,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct LemmasArgs {
    #[arg(long, value_delimiter = ',', default_value = "101,10007")]
    pub primes: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,60")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k_list: Vec<usize>,
    /// Values of C_k; `paper` uses the derived constants.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub ck: Vec<String>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["ordering_file", "set_file", "random_size"])))]
pub struct EventsArgs {
    #[arg(long)]
    pub prime: Option<u64>,
    /// Use this ordering as given.
    #[arg(long)]
    pub ordering_file: Option<PathBuf>,
    /// Shuffle this set uniformly with the seed.
    #[arg(long)]
    pub set_file: Option<PathBuf>,
    #[arg(long)]
    pub random_size: Option<usize>,
    #[arg(long)]
    pub allow_zero: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Window parameter D.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value = "-")]
    pub out: String,
}
