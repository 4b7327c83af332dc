use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nscost::channel::file::{load_channel, ChannelKind, ChannelParams, ChannelSpec};
use nscost::channel::BipartiteChannel;
use nscost::conic::builders::HminDirection;
use nscost::costs::{CostReport, Estimator};
use nscost::solver::SolverConfig;
use nscost::Error;
use nscost_cli::sweep::{run_sweep, write_csv, Family, Grid, SweepQuantity, SweepSpec};
use nscost_cli::verify::{run_verify, VerifyOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Non-signalling assisted communication cost of bipartite quantum channels.
#[derive(Debug, Parser)]
#[command(name = "nscost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one cost measure of a channel.
    Cost {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, value_enum, default_value = "one-shot")]
        quantity: CostQuantity,
        /// Smoothing parameter of `smooth-dmax`.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Least simulation error with `m` classical messages each way.
    Simerr {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        m: usize,
    },
    /// Sweep a gate family over its parameter and noise levels, writing CSV.
    Sweep {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        /// Parameter grid `start,stop,count`.
        #[arg(long, default_value = "0,1,21", value_parser = parse_grid)]
        grid: Grid,
        /// Comma-separated noise levels.
        #[arg(long = "p", value_delimiter = ',', default_value = "0,0.2,0.4")]
        ps: Vec<f64>,
        /// Comma-separated subset of one_shot_cost, lower_bound, dmax.
        #[arg(long, value_delimiter = ',', default_value = "one_shot_cost,lower_bound,dmax", value_parser = parse_quantity)]
        quantities: Vec<SweepQuantity>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the property suite on a seeded corpus; exits with 3 on any failure.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Break trace preservation of every corpus channel before validating.
        #[arg(long)]
        perturb: bool,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.parse()
}

fn parse_quantity(s: &str) -> Result<SweepQuantity, String> {
    s.parse()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    SwapAlpha,
    PartialSwap,
    ClassicalNoiseless,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Channel spec file (TOML).
    #[arg(long, conflicts_with = "kind", required_unless_present = "kind")]
    channel: Option<PathBuf>,
    /// Built-in channel family.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Interaction exponent of `swap_alpha`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Parameter of `partial_swap`.
    #[arg(long)]
    a: Option<f64>,
    /// Alphabet size of `classical_noiseless`.
    #[arg(long)]
    symbols: Option<usize>,
    /// Global depolarizing noise.
    #[arg(long)]
    p: Option<f64>,
}

impl ChannelArgs {
    fn load(&self) -> nscost::Result<BipartiteChannel> {
        if let Some(path) = &self.channel {
            return load_channel(path);
        }
        let kind = match self.kind.expect("clap requires --channel or --kind") {
            KindArg::SwapAlpha => ChannelKind::SwapAlpha,
            KindArg::PartialSwap => ChannelKind::PartialSwap,
            KindArg::ClassicalNoiseless => ChannelKind::ClassicalNoiseless,
        };
        ChannelSpec {
            kind,
            params: ChannelParams {
                alpha: self.alpha,
                a: self.a,
                p: self.p,
                m: self.symbols,
            },
            dims: None,
            choi: None,
        }
        .build()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CostQuantity {
    OneShot,
    LowerBound,
    Dmax,
    DmaxOneway,
    Robustness,
    SmoothDmax,
    HminAb,
    HminBa,
    P2p,
}

fn compute(
    est: &Estimator,
    ch: &BipartiteChannel,
    q: CostQuantity,
    eps: f64,
) -> nscost::Result<CostReport> {
    match q {
        CostQuantity::OneShot => est.one_shot_cost(ch),
        CostQuantity::LowerBound => est.asymptotic_lower_bound(ch),
        CostQuantity::Dmax => est.dmax(ch),
        CostQuantity::DmaxOneway => est.dmax_oneway(ch),
        CostQuantity::Robustness => est.robustness(ch),
        CostQuantity::SmoothDmax => est.smooth_dmax(ch, eps),
        CostQuantity::HminAb => est.hmin(ch, HminDirection::AGivenB),
        CostQuantity::HminBa => est.hmin(ch, HminDirection::BGivenA),
        CostQuantity::P2p => est.p2p_cost(ch),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver { .. } => EXIT_SOLVER,
        _ => EXIT_USAGE,
    }
}

/// Prints a line to stdout; a closed pipe is not an error.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn run(cli: Cli) -> Result<u8, Error> {
    let est = Estimator::new(SolverConfig::from_env()?);
    match cli.command {
        Command::Cost {
            channel,
            quantity,
            eps,
        } => {
            let ch = channel.load()?;
            emit(&compute(&est, &ch, quantity, eps)?.to_string());
        }
        Command::Simerr { channel, m } => {
            let ch = channel.load()?;
            emit(&est.min_sim_error(&ch, m)?.to_string());
        }
        Command::Sweep {
            family,
            grid,
            ps,
            quantities,
            out,
            jobs,
        } => {
            let spec = SweepSpec {
                family,
                grid,
                ps,
                quantities,
            };
            spec.validate()?;
            let file = File::create(&out)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", out.display())))?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                pool = pool.num_threads(j);
            }
            let pool = pool
                .build()
                .map_err(|e| Error::MalformedProblem(format!("worker pool: {e}")))?;
            let rows = pool.install(|| run_sweep(&spec, &est))?;
            write_csv(&rows, BufWriter::new(file))?;
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            eprintln!(
                "wrote {} rows to {} ({failed} failed)",
                rows.len(),
                out.display()
            );
        }
        Command::Verify {
            seed,
            cases,
            perturb,
        } => {
            let outcomes = run_verify(
                &est,
                VerifyOptions {
                    seed,
                    cases,
                    perturb,
                },
            )?;
            let failed = outcomes.iter().filter(|o| !o.passed()).count();
            for o in &outcomes {
                emit(&o.to_string());
            }
            emit(&format!(
                "{} of {} checks passed",
                outcomes.len() - failed,
                outcomes.len()
            ));
            if failed > 0 {
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let solver = Error::Solver {
            status: nscost::solver::SolveStatus::NumericalFailure,
            quantity: "dmax".into(),
        };
        assert_eq!(exit_code(&solver), EXIT_SOLVER);
        assert_eq!(exit_code(&Error::MalformedProblem("x".into())), EXIT_USAGE);
    }
}
