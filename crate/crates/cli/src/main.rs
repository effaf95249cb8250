//! Command-line driver for the rationality certificates.
//!
//! Four subcommands: `search` enumerates admissible double-bundle triples,
//! `check-db` runs the genericity certificate, `check-cov` runs the covariant
//! spanning check, and `table` prints the per-degree status record.  Reports
//! go to stdout as JSON (the table as rendered text); `--output` duplicates
//! them to a file.  Exit codes: 0 for PASS or informational output, 2 for
//! INCONCLUSIVE, 3 for invalid input, 4 for resource or internal failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use curvecert::covariants::{case_for, span_check, SpanReport, DEFAULT_G_TERMS};
use curvecert::error::{Error, Result};
use curvecert::ffcore::{fallback_primes, DEFAULT_PRIME};
use curvecert::genericity::{run_check, GenericityInstance, Status, Verdict};
use curvecert::rep::{search_candidates, Candidate, DEFAULT_KAPPA};
use curvecert::table::{self, MethodTag, TableRow};

#[derive(Parser)]
#[command(
    name = "curvecert",
    version,
    about = "Finite-field certificates for rationality of plane-curve moduli"
)]
struct Cli {
    /// Cap the worker thread count (0 picks the core count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate admissible (e, I) triples at a degree.
    Search {
        /// Plane-curve degree.
        #[arg(long)]
        d: u32,
        /// Codimension safety margin.
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: u64,
        /// Duplicate the JSON report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the double-bundle genericity certificate.
    CheckDb {
        /// Plane-curve degree.
        #[arg(long)]
        d: u32,
        /// Vector-power degree; defaults to the first admissible candidate.
        #[arg(long)]
        e: Option<u32>,
        /// Component indices of W, comma separated; needs --e.
        #[arg(long, value_delimiter = ',', requires = "e")]
        components: Option<Vec<u32>>,
        /// Working prime; defaults to a built-in with fallbacks.
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluation points (default: dim W plus a safety margin).
        #[arg(long)]
        n_points: Option<usize>,
        /// Power-sum terms in the sampled point (default: dim W plus margin).
        #[arg(long)]
        t_terms: Option<usize>,
        /// Codimension safety margin for the candidate search.
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: u64,
        /// Persist rank state here and resume interrupted runs.
        #[arg(long, env = "CURVECERT_CHECKPOINT_DIR")]
        checkpoint_dir: Option<PathBuf>,
        /// Duplicate the JSON report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the covariant spanning check.
    CheckCov {
        /// Plane-curve degree (1 mod 3 and >= 19, or 2 mod 3 and >= 35).
        #[arg(long)]
        d: u32,
        /// Working prime; defaults to a built-in with fallbacks.
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Interpolation samples (default: twice the span dimension).
        #[arg(long)]
        samples: Option<usize>,
        /// Terms in the sampled auxiliary form g.
        #[arg(long, default_value_t = DEFAULT_G_TERMS)]
        g_terms: usize,
        /// Duplicate the JSON report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the per-degree rationality record.
    Table {
        /// Largest degree to include.
        #[arg(long, default_value_t = 48)]
        to: u32,
        /// Re-run the live checks behind double-bundle and covariant rows.
        #[arg(long)]
        verify: bool,
        /// Seed for the --verify runs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the --verify report files.
        #[arg(long, default_value = "reports")]
        report_dir: PathBuf,
        /// Duplicate the rows as JSON to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {err}");
            return ExitCode::from(4);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_for(&err))
        }
    }
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_)
        | Error::BadPrime { .. }
        | Error::DuplicateNode
        | Error::CollidingC
        | Error::CorruptCheckpoint { .. } => 3,
        Error::Resource { .. } | Error::Io(_) | Error::Internal(_) => 4,
    }
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Pass => ExitCode::SUCCESS,
        Status::Inconclusive => ExitCode::from(2),
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Search { d, kappa, output } => {
            let candidates = search_candidates(d, kappa, None)?;
            let report = serde_json::json!({
                "d": d,
                "kappa": kappa,
                "count": candidates.len(),
                "candidates": candidates,
            });
            emit(&report, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckDb {
            d,
            e,
            components,
            prime,
            seed,
            n_points,
            t_terms,
            kappa,
            checkpoint_dir,
            output,
        } => {
            let cand = match (e, components) {
                (Some(e), Some(cs)) => Candidate::new(d, e, cs, kappa)?,
                (e, None) => {
                    let range = e.map(|e| e..=e);
                    match search_candidates(d, kappa, range)?.into_iter().next() {
                        Some(c) => c,
                        None => {
                            let report = serde_json::json!({
                                "d": d,
                                "kappa": kappa,
                                "status": "NO-CANDIDATE",
                                "detail": "no admissible (e, I) triple at this degree",
                            });
                            emit(&report, output.as_deref())?;
                            return Ok(ExitCode::from(2));
                        }
                    }
                }
                (None, Some(_)) => {
                    return Err(Error::InvalidInput("--components needs --e".into()));
                }
            };
            if let Some(dir) = &checkpoint_dir {
                std::fs::create_dir_all(dir)?;
            }
            let verdict = run_db(cand, prime, seed, n_points, t_terms, checkpoint_dir)?;
            emit(&verdict, output.as_deref())?;
            Ok(status_code(verdict.status))
        }
        Command::CheckCov { d, prime, seed, samples, g_terms, output } => {
            let needed = case_for(d)?.needed as usize;
            let samples = samples.unwrap_or(2 * needed);
            let report = run_cov(d, prime, seed, samples, g_terms)?;
            emit(&report, output.as_deref())?;
            Ok(status_code(report.status))
        }
        Command::Table { to, verify, seed, report_dir, output } => {
            let mut rows = table::rows(to)?;
            let all_pass = if verify {
                Some(verify_rows(&mut rows, &report_dir, seed)?)
            } else {
                None
            };
            print!("{}", render(&rows));
            if let Some(path) = output.as_deref() {
                write_json(path, &rows)?;
            }
            match all_pass {
                Some(true) => {
                    println!("verification: PASS");
                    Ok(ExitCode::SUCCESS)
                }
                Some(false) => {
                    println!("verification: INCONCLUSIVE");
                    Ok(ExitCode::from(2))
                }
                None => Ok(ExitCode::SUCCESS),
            }
        }
    }
}

/// Try the user's prime, or walk the built-in list until one is usable.
fn primes_to_try(prime: Option<u64>) -> Vec<u64> {
    match prime {
        Some(p) => vec![p],
        None => std::iter::once(DEFAULT_PRIME).chain(fallback_primes()).collect(),
    }
}

fn run_db(
    cand: Candidate,
    prime: Option<u64>,
    seed: u64,
    n_points: Option<usize>,
    t_terms: Option<usize>,
    checkpoint_dir: Option<PathBuf>,
) -> Result<Verdict> {
    let primes = primes_to_try(prime);
    let last = primes.len() - 1;
    for (i, &p) in primes.iter().enumerate() {
        let mut inst = GenericityInstance::new(cand.clone(), p, seed);
        if let Some(n) = n_points {
            inst.n_points = n;
        }
        if let Some(t) = t_terms {
            inst.t_terms = t;
        }
        inst.checkpoint_dir = checkpoint_dir.clone();
        match run_check(&inst) {
            Err(Error::BadPrime { p, reason }) if i < last => {
                log::warn!("prime {p} rejected ({reason}); trying the next fallback");
            }
            other => return other,
        }
    }
    unreachable!("the last prime either returns or errors out");
}

fn run_cov(d: u32, prime: Option<u64>, seed: u64, samples: usize, g_terms: usize) -> Result<SpanReport> {
    let primes = primes_to_try(prime);
    let last = primes.len() - 1;
    for (i, &p) in primes.iter().enumerate() {
        match span_check(d, p, seed, samples, g_terms) {
            Err(Error::BadPrime { p, reason }) if i < last => {
                log::warn!("prime {p} rejected ({reason}); trying the next fallback");
            }
            other => return other,
        }
    }
    unreachable!("the last prime either returns or errors out");
}

fn verify_rows(rows: &mut [TableRow], report_dir: &Path, seed: u64) -> Result<bool> {
    std::fs::create_dir_all(report_dir)?;
    let mut all_pass = true;
    for row in rows.iter_mut() {
        match row.method {
            Some(MethodTag::DoubleBundle) => {
                let Some(cand) =
                    search_candidates(row.d, DEFAULT_KAPPA, None)?.into_iter().next()
                else {
                    log::warn!("degree {} row has no candidate to verify", row.d);
                    all_pass = false;
                    continue;
                };
                let verdict = run_db(cand, None, seed, None, None, None)?;
                let path = report_dir.join(format!("check-db-d{}.json", row.d));
                write_json(&path, &verdict)?;
                all_pass &= verdict.status == Status::Pass;
                row.certificate = Some(path.display().to_string());
            }
            Some(MethodTag::CovariantS | MethodTag::CovariantT) => {
                let needed = case_for(row.d)?.needed as usize;
                let report = run_cov(row.d, None, seed, 2 * needed, DEFAULT_G_TERMS)?;
                let path = report_dir.join(format!("check-cov-d{}.json", row.d));
                write_json(&path, &report)?;
                all_pass &= report.status == Status::Pass;
                row.certificate = Some(path.display().to_string());
            }
            _ => {}
        }
    }
    Ok(all_pass)
}

fn render(rows: &[TableRow]) -> String {
    let mut out = String::from("  d  status    method         source\n");
    for row in rows {
        let method = serde_json::to_value(row.method).expect("tag serializes");
        let status = serde_json::to_value(row.status).expect("status serializes");
        out.push_str(&format!(
            "{:>3}  {:<8}  {:<13}  {}\n",
            row.d,
            status.as_str().expect("status is a string"),
            method.as_str().unwrap_or("-"),
            row.source
        ));
        if let Some(cert) = &row.certificate {
            out.push_str(&format!("{:>30}certificate: {}\n", "", cert));
        }
    }
    out
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    println!("{text}");
    if let Some(path) = output {
        std::fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, format!("{text}\n"))?;
    Ok(())
}
