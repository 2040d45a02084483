//! `schreier`: command-line front end printing JSON.

mod input;
mod suites;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use schreier::averages::repeated_average;
use schreier::families::{self, enumerate_maximal, maximal_partition};
use schreier::norms::{dual_norm, schreier_norm};
use schreier::operators::{
    build_ss_chain, dyadic_collapse, dyadic_failure, dyadic_family, formal_identity, op_norm, xi_injectivity_report, IndexMap,
};
use schreier::pairs::{build_pair, verify_pair, VerifyOptions};
use schreier::{Caps, Error, Result};

#[derive(Parser)]
#[command(name = "schreier", version, about = "Exact computations on Schreier families and spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Ordinal expression such as `w^2+w*3+1`.
    #[arg(long, global = true)]
    xi: Option<String>,
    /// Finite set `a,b,c`.
    #[arg(long, global = true)]
    set: Option<String>,
    /// Vector as JSON or a path to a JSON file.
    #[arg(long, global = true)]
    vector: Option<String>,
    #[arg(long, global = true)]
    horizon: Option<u64>,
    #[arg(long, global = true, default_value_t = suites::default_seed())]
    seed: u64,
    /// JSON file overriding the default caps.
    #[arg(long, global = true)]
    caps: Option<PathBuf>,
    /// Also write the output to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normal form, predecessor, fundamental sequence and prefix/suffix sets.
    Ordinal,
    /// Membership of --set in S_xi.
    Member {
        /// Decide membership in the modified family instead.
        #[arg(long)]
        modified: bool,
    },
    /// Maximality of --set, or all maximal sets inside [1, --horizon].
    Maximal,
    /// The first --count maximal S_xi blocks of a stream.
    Partition {
        #[arg(long, default_value = "naturals")]
        stream: String,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Least number of successive S_xi sets covering --set.
    Tau,
    /// The repeated average of order xi on the --n-th block of a stream.
    Average {
        #[arg(long, default_value = "naturals")]
        stream: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Exact S_xi norm of --vector.
    Norm,
    /// Exact dual norm of --vector.
    Dualnorm,
    /// Build and verify a Schreier pair.
    Pair {
        #[arg(long, default_value = "1")]
        iota: String,
        #[arg(long, default_value = "naturals")]
        stream: String,
    },
    /// Operator diagnostics.
    Op {
        #[command(subcommand)]
        action: OpAction,
    },
    /// Run one verification suite, or `all`.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        zeta: Option<String>,
        /// Record per-check wall time (makes reports machine dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Run the suites listed in a JSON config.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Subcommand)]
enum OpAction {
    /// Norm of a finite matrix X_xi -> X_zeta given as triplets.
    Norm {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        zeta: String,
    },
    /// Norm of the formal identity X_xi -> X_zeta on [1, --n].
    Identity {
        #[arg(long)]
        zeta: String,
        #[arg(long, default_value_t = 6)]
        n: u64,
    },
    /// The chain of strictly singular factors for xi.
    Sschain {
        #[arg(long, default_value = "1/8")]
        eps: String,
    },
    /// The dyadic family F_1 < ... < F_n.
    Dyadic {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Injectivity ratio of the map collapsing [lo, hi] to lo on [1, --n].
    Injectivity {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
    },
}

/// What a command produced: JSON plus its exit code.
struct Outcome {
    body: Value,
    code: u8,
}

impl Outcome {
    fn checked(body: Value, pass: bool) -> Self {
        Outcome { body, code: if pass { 0 } else { 1 } }
    }
}

impl From<Value> for Outcome {
    fn from(body: Value) -> Self {
        Outcome { body, code: 0 }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let c = &cli.common;
    let caps = input::caps(c.caps.as_deref())?;
    let xi = || input::ordinal(c.xi.as_deref(), "xi", &caps);
    let horizon = |default: u64| c.horizon.unwrap_or(default);
    Ok(match cli.command {
        Command::Ordinal => {
            let o = xi()?;
            let fundamental = if o.is_limit() {
                (1..=4).map(|n| o.fundamental(n).map(|f| f.to_string())).collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            json!({
                "cnf": o,
                "kind": if o.is_zero() { "zero" } else if o.is_limit() { "limit" } else { "successor" },
                "pred": o.pred(),
                "fundamental": fundamental,
                "i_set": o.i_set(),
                "r_set": o.r_set(),
            })
            .into()
        }
        Command::Member { modified } => {
            let (o, e) = (xi()?, input::set(c.set.as_deref())?);
            let member = if modified { families::is_member_modified(&e, &o, caps.brute_force)? } else { families::is_member(&e, &o) };
            json!({ "member": member }).into()
        }
        Command::Maximal => {
            let o = xi()?;
            match c.set.as_deref() {
                Some(text) => json!({ "maximal": families::is_maximal(&input::set(Some(text))?, &o)? }).into(),
                None => json!({ "maximal_sets": enumerate_maximal(&o, horizon(8), caps.materialize)? }).into(),
            }
        }
        Command::Partition { stream, count } => {
            let o = xi()?;
            let blocks = match c.set.as_deref() {
                Some(text) => families::greedy_blocks(&input::set(Some(text))?, &o),
                None => maximal_partition(&input::stream(&stream, c.seed)?, &o, count, caps.materialize)?,
            };
            json!({ "blocks": blocks }).into()
        }
        Command::Tau => json!({ "tau": families::tau(&input::set(c.set.as_deref())?, &xi()?) }).into(),
        Command::Average { stream, n } => {
            let v = repeated_average(&xi()?, &input::stream(&stream, c.seed)?, n, &caps)?;
            json!({ "support": v.support(), "vector": v }).into()
        }
        Command::Norm => {
            let v = input::vector(c.vector.as_deref())?;
            let wide = Caps { support: caps.support.max(v.len()), ..caps };
            json!(schreier_norm(&v, &xi()?, &wide)?).into()
        }
        Command::Dualnorm => json!(dual_norm(&input::vector(c.vector.as_deref())?, &xi()?, &caps)?).into(),
        Command::Pair { iota, stream } => {
            let iota = input::ordinal(Some(&iota), "iota", &caps)?;
            let pair = build_pair(&xi()?, &iota, &input::stream(&stream, c.seed)?, horizon(5) as usize, &caps)?;
            let opts = VerifyOptions { seed: c.seed, ..VerifyOptions::default() };
            let cert = verify_pair(&pair, &opts, &caps)?;
            Outcome::checked(json!({ "pair": pair, "certificate": cert }), cert.pass)
        }
        Command::Op { action } => op(action, c, &caps)?,
        Command::Verify { suite, zeta, timings } => {
            let config = suites::single(&suite, c.xi.as_deref(), zeta.as_deref(), c.horizon, c.seed)?;
            report(&suite, &config, &caps, timings)?
        }
        Command::Report { config, timings } => {
            let body = fs::read_to_string(&config)
                .map_err(|e| input::usage(format!("cannot read {}: {e}", config.display())))?;
            let parsed: suites::Config = serde_json::from_str(&body)
                .map_err(|e| Error::Parse { pos: e.column().saturating_sub(1), msg: e.to_string() })?;
            let name = config.file_stem().and_then(|s| s.to_str()).unwrap_or("config").to_string();
            report(&name, &parsed, &caps, timings)?
        }
    })
}

fn report(name: &str, config: &suites::Config, caps: &Caps, timings: bool) -> Result<Outcome> {
    let r = suites::verify_all(name, config, caps, timings)?;
    Ok(Outcome { code: r.exit_code(), body: serde_json::to_value(&r).expect("report serializes") })
}

fn op(action: OpAction, c: &Common, caps: &Caps) -> Result<Outcome> {
    let xi = input::ordinal(c.xi.as_deref(), "xi", caps)?;
    Ok(match action {
        OpAction::Norm { matrix, zeta } => {
            let zeta = input::ordinal(Some(&zeta), "zeta", caps)?;
            json!(op_norm(&input::matrix(Some(&matrix), xi, zeta)?, caps)?).into()
        }
        OpAction::Identity { zeta, n } => {
            let zeta = input::ordinal(Some(&zeta), "zeta", caps)?;
            json!(op_norm(&formal_identity(&xi, &zeta, n), caps)?).into()
        }
        OpAction::Sschain { eps } => {
            let chain = build_ss_chain(&xi, c.horizon.unwrap_or(5) as usize, &input::rational(&eps)?, caps)?;
            Outcome::checked(json!(chain), chain.pass)
        }
        OpAction::Dyadic { n } => {
            let family = dyadic_family(&xi, n, caps)?;
            let failure = dyadic_failure(&family);
            let psi = dyadic_collapse(&family)?;
            let lows = family.iter().map(|m| m.interval.lo).max().unwrap_or(1);
            let injectivity = xi_injectivity_report(&psi, &xi, lows, caps)?;
            let pass = failure.is_none();
            Outcome::checked(json!({ "family": family, "failure": failure, "injectivity": injectivity }), pass)
        }
        OpAction::Injectivity { n, lo, hi } => {
            let psi = IndexMap::collapse(n, lo, hi)?;
            json!(xi_injectivity_report(&psi, &xi, c.horizon.unwrap_or(n), caps)?).into()
        }
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Certificate(_) => 1,
        Error::Parse { .. } | Error::Domain(_) => 2,
        Error::Resource(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.common.out.clone();
    match run(cli) {
        Ok(outcome) => {
            let text = serde_json::to_string(&outcome.body).expect("output serializes");
            println!("{text}");
            if let Some(path) = out {
                if let Err(e) = fs::write(&path, format!("{text}\n")) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            println!("{}", json!({ "error": e.to_string(), "exit": exit_code(&e) }));
            ExitCode::from(exit_code(&e))
        }
    }
}
