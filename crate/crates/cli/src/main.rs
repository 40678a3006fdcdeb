//! Command-line surface: connect operators inside a stratum, certify path
//! files, inspect tangent dimensions and the stratification, build common
//! complements, and generate seeded instances.
//!
//! Exit codes: 0 success (and certificate pass), 1 certificate fail,
//! 2 invalid input, 3 infeasible request (e.g. the stratum is disconnected
//! between the given operators). Diagnostics go to standard error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stratum::certify::certify;
use stratum::connect::{connect_fredholm, connect_rank_stratum, StratumSpec};
use stratum::geometry::{stratification_report, stratum_dim, tangent_space_dim};
use stratum::linalg::{column_space, numerical_rank, stacked_sigma_min};
use stratum::path::{seg_reversal_pencil, OperatorPath};
use stratum::sample::random_stratum_point;
use stratum::subspace::{common_complement, GraphOperator, Subspace};
use stratum::thresholds::{DEFAULT_SAMPLES, DEFAULT_TOL};
use stratum::{io, Error, Matrix64};

#[derive(Parser)]
#[command(
    name = "stratum",
    version,
    about = "Certified operator paths inside fixed-rank and Fredholm strata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a path between two operators that stays inside the stratum
    Connect {
        /// Input matrix files, given twice (JSON or CSV)
        #[arg(long = "in", value_name = "FILE", required = true)]
        inputs: Vec<PathBuf>,
        /// Stratum: `rank:k` or `fredholm:m,n`
        #[arg(long)]
        stratum: String,
        /// Where to write the path file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Re-check a path file against its declared invariants by sampling
    Certify {
        #[arg(long)]
        path: PathBuf,
        /// Stratum: `rank:k` or `fredholm:m,n`
        #[arg(long)]
        stratum: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Where to write the certificate (JSON); stdout gets the verdict
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Tangent dimension of the rank stratum at a base point
    TangentDim {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Closed-form stratum dimension (m + n - k) * k
    StratumDim { m: usize, n: usize, k: usize },
    /// Stratification of the m x n matrix space with sampled certificates
    Stratify {
        m: usize,
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A subspace complementary to both inputs simultaneously
    CommonComplement {
        /// Subspace files (columns span the subspace), given twice
        #[arg(long = "in", value_name = "FILE", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print the midpoint degeneracy of the 2x2 reversal pencil
    CounterexampleThm22,
    /// Sample a seeded exact-rank matrix
    Gen {
        /// Dimensions as `rows,cols`
        #[arg(long)]
        dims: String,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::StratumDisconnected(_)
        | Error::InfeasibleHop { .. }
        | Error::HypothesisViolated(_)
        | Error::NoSpareDirection => 3,
        _ => 2,
    }
}

/// `STRATUM_PATH_SEED` beats the command-line seed when set.
fn effective_seed(cli_seed: u64) -> Result<u64, Error> {
    match std::env::var("STRATUM_PATH_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("STRATUM_PATH_SEED: {e}"))),
        Err(_) => Ok(cli_seed),
    }
}

enum StratumArg {
    Rank(usize),
    Fredholm { kernel: usize, cokernel: usize },
}

fn parse_stratum(text: &str) -> Result<StratumArg, Error> {
    let bad = || {
        Error::Parse(format!(
            "stratum must be rank:k or fredholm:m,n, got `{text}`"
        ))
    };
    let (head, tail) = text.split_once(':').ok_or_else(bad)?;
    match head {
        "rank" => Ok(StratumArg::Rank(tail.trim().parse().map_err(|_| bad())?)),
        "fredholm" => {
            let (m, n) = tail.split_once(',').ok_or_else(bad)?;
            Ok(StratumArg::Fredholm {
                kernel: m.trim().parse().map_err(|_| bad())?,
                cokernel: n.trim().parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}

fn spec_for(arg: &StratumArg, rows: usize, cols: usize) -> Result<StratumSpec, Error> {
    match arg {
        StratumArg::Rank(k) => StratumSpec::rank(cols, rows, *k),
        StratumArg::Fredholm { kernel, cokernel } => {
            StratumSpec::fredholm(cols, rows, *kernel, *cokernel)
        }
    }
}

fn two_files(inputs: &[PathBuf]) -> Result<(&PathBuf, &PathBuf), Error> {
    match inputs {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Parse(format!(
            "expected exactly two --in files, got {}",
            inputs.len()
        ))),
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Connect {
            inputs,
            stratum,
            out,
            tol,
        } => {
            let (a, b) = two_files(&inputs)?;
            let t1 = io::read_matrix(a)?;
            let t2 = io::read_matrix(b)?;
            if t1.shape() != t2.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "{:?} vs {:?}",
                    t1.shape(),
                    t2.shape()
                )));
            }
            let arg = parse_stratum(&stratum)?;
            let spec = spec_for(&arg, t1.nrows(), t1.ncols())?;
            for (name, t) in [("first", &t1), ("second", &t2)] {
                let rank = numerical_rank(t, tol).rank;
                if rank != spec.expected_rank() {
                    return Err(Error::Parse(format!(
                        "{name} operator has rank {rank}, stratum expects {}",
                        spec.expected_rank()
                    )));
                }
            }
            let path = match arg {
                StratumArg::Rank(_) => connect_rank_stratum(&t1, &t2, tol)?,
                StratumArg::Fredholm { .. } => connect_fredholm(&t1, &t2, &spec, tol)?,
            };
            io::write_path(&out, &path)?;
            eprintln!(
                "wrote a {}-segment path to {}",
                path.segments().len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Certify {
            path,
            stratum,
            samples,
            report,
            tol,
        } => {
            let operator_path = io::read_path(&path)?;
            let arg = parse_stratum(&stratum)?;
            let spec = spec_for(&arg, operator_path.rows(), operator_path.cols())?;
            let cert = certify(&operator_path, &spec, samples, tol);
            if let Some(report_path) = report {
                io::write_certificate(&report_path, &cert)?;
            }
            println!("{}", serde_json::to_string_pretty(&cert.verdict)?);
            Ok(if cert.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::TangentDim { input, tol } => {
            let x = io::read_matrix(&input)?;
            let report = tangent_space_dim(&x, tol)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::StratumDim { m, n, k } => {
            println!("{}", stratum_dim(m, n, k)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::Stratify { m, n, seed } => {
            let report = stratification_report(m, n, effective_seed(seed)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            let all_good = report.entries.iter().all(|e| e.certified) && report.top_stratum_hit;
            Ok(if all_good {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::CommonComplement { inputs } => {
            let (a, b) = two_files(&inputs)?;
            let e1 = io::read_subspace(a, DEFAULT_TOL)?;
            let e2 = io::read_subspace(b, DEFAULT_TOL)?;
            let r = common_complement(&e1, &e2)?;
            println!("{}", io::matrix_json(r.basis()));
            Ok(ExitCode::SUCCESS)
        }

        Command::CounterexampleThm22 => counterexample(),

        Command::Gen {
            dims,
            rank,
            seed,
            out,
        } => {
            let (rows, cols) = dims
                .split_once(',')
                .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
                .ok_or_else(|| Error::Parse(format!("dims must be rows,cols, got `{dims}`")))?;
            let t: Matrix64 = random_stratum_point(rows, cols, rank, effective_seed(seed)?)?;
            io::write_matrix(&out, &t)?;
            eprintln!(
                "wrote {rows}x{cols} rank-{rank} sample to {}",
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// The canonical 2x2 instance of the reversal pencil: an affine family that
/// claims to keep its range complemented to the second axis but collapses
/// into it at the midpoint. Exit 0 when the defect reproduces.
fn counterexample() -> Result<ExitCode, Error> {
    let estar = Subspace::<f64>::coordinate(2, 0);
    let r = Subspace::<f64>::coordinate(2, 1);
    let alpha =
        GraphOperator::from_coeffs(estar.clone(), r.clone(), Matrix64::from_element(1, 1, 1.0))?;
    let seg = seg_reversal_pencil(&estar, &r, &alpha)?;
    for (label, lambda) in [("0", 0.0), ("1/2", 0.5), ("1", 1.0)] {
        println!("pencil({label}) =");
        println!("{:.6}", seg.at(lambda));
    }
    let mid_range = column_space(&seg.at(0.5), DEFAULT_TOL);
    let sigma = stacked_sigma_min(&mid_range, &r);
    println!("midpoint range stacked with the declared complement: sigma_min = {sigma:.3e}");

    let path = OperatorPath::try_new(vec![seg])?;
    let spec = StratumSpec::rank(2, 2, 1)?;
    let cert = certify(&path, &spec, 101, DEFAULT_TOL);
    match cert.first_failure() {
        Some(failure) if failure.check == "complemented_range" => {
            println!(
                "certification fails as expected at sample {} ({}: {:.3e} < {:.3e})",
                failure.sample_index, failure.check, failure.value, failure.threshold
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(failure) => {
            eprintln!("unexpected failure kind: {failure:?}");
            Ok(ExitCode::from(1))
        }
        None => {
            eprintln!("the pencil unexpectedly certified; the defect did not reproduce");
            Ok(ExitCode::from(1))
        }
    }
}
