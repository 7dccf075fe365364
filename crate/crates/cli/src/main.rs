//! `ppt-moments`: NPT detection for two-mode states from the command line.
//!
//! Exit codes: 0 PPT-consistent, 2 NPT-witnessed, 1 error.

mod report;
mod state_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ppt_moments::det::SignClass;
use ppt_moments::signature::DEFAULT_SEARCH_BUDGET;
use ppt_moments::{
    agreement_audit, leading_minor_scan, oracle_npt, ordering_signature_search, search_witness, Backend,
    MomentEngine, MultiIndex, OperatorOrdering, SearchOptions, Strategy,
};

use report::{OrderingRecord, Parameters, RunReport};
use state_file::LoadedState;

#[derive(Parser)]
#[command(name = "ppt-moments", version, about = "Moment-matrix NPT detection for two-mode bosonic states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leading principal minors det M_1 .. det M_N of the partially transposed moment matrix.
    ScanLeading(Common),
    /// Search all principal minors up to a cardinality for a negative one.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: SearchArgs,
        /// Also diagonalise the partially transposed density matrix.
        #[arg(long)]
        with_oracle: bool,
    },
    /// Witness search and explicit partial transposition side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Find an ordering whose leading minors have the given signs, e.g. "+++++++00000000".
    FindOrdering {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        signature: String,
        /// Maximum number of prefix-set determinants to evaluate.
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON state description.
    state: PathBuf,
    /// Ordering name (sv-compatible, grlex) or a file of operator words.
    #[arg(long, default_value = ppt_moments::ordering::SV_COMPATIBLE)]
    order: String,
    #[arg(long, default_value_t = 15)]
    n_max: usize,
    /// exact, float, or auto (exact with per-entry float fallback).
    #[arg(long, default_value = "auto")]
    backend: Backend,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Fock cutoff for the oracle, as `c` or `ca,cb`.
    #[arg(long, value_parser = parse_cutoff)]
    cutoff: Option<(u32, u32)>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 4)]
    max_card: usize,
    /// exhaustive or eigenvector-guided.
    #[arg(long, default_value = "exhaustive")]
    strategy: Strategy,
    /// Maximum number of minors to evaluate.
    #[arg(long)]
    budget: Option<usize>,
}

fn parse_cutoff(s: &str) -> Result<(u32, u32), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<u32>().map_err(|e| format!("bad cutoff `{p}`: {e}"));
    match parts.as_slice() {
        [c] => num(c).map(|c| (c, c)),
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err("expected `c` or `ca,cb`".into()),
    }
}

/// A named ordering, or a file listing one operator word per line or comma.
fn resolve_ordering(order: &str, n_max: usize) -> Result<OperatorOrdering> {
    let ordering = match OperatorOrdering::by_name(order, n_max) {
        Ok(o) => o,
        Err(named) => {
            let path = Path::new(order);
            if !path.is_file() {
                return Err(named.into());
            }
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read ordering file {order}"))?;
            let words = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(|l| l.split(','))
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(|w| w.parse::<MultiIndex>())
                .collect::<Result<Vec<_>, _>>()?;
            let name = path.file_stem().map_or(order.into(), |s| s.to_string_lossy().into_owned());
            OperatorOrdering::new(name, words)?
        }
    };
    if ordering.len() < n_max {
        bail!("ordering `{}` has {} operators, fewer than N = {n_max}", ordering.name(), ordering.len());
    }
    Ok(ordering)
}

struct Run {
    report: RunReport,
    exit: u8,
}

struct Inputs {
    loaded: LoadedState,
    ordering: OperatorOrdering,
}

impl Common {
    fn load(&self) -> Result<Inputs> {
        let loaded = state_file::load(&self.state)?;
        let ordering = resolve_ordering(&self.order, self.n_max)?;
        Ok(Inputs { loaded, ordering })
    }

    fn oracle_cutoffs(&self, loaded: &LoadedState) -> (u32, u32) {
        self.cutoff.or(loaded.cutoff).unwrap_or_else(|| loaded.state.natural_cutoffs())
    }

    fn parameters(&self) -> Parameters {
        Parameters {
            order: self.order.clone(),
            n_max: self.n_max,
            backend: self.backend,
            tol: self.tol,
            cutoff: self.cutoff.map(|(a, b)| [a, b]),
            max_cardinality: None,
            strategy: None,
            budget: None,
            signature: None,
            with_oracle: false,
        }
    }

    fn ordering_record(&self, ordering: &OperatorOrdering) -> OrderingRecord {
        OrderingRecord { name: ordering.name().into(), words: ordering.words().into_iter().take(self.n_max).collect() }
    }
}

fn witness_run(common: &Common, search: &SearchArgs, command: &str, oracle: bool) -> Result<Run> {
    let ctx = common.load()?;
    let engine = MomentEngine::new(&ctx.loaded.state, common.backend);
    let m = engine.matrix(&ctx.ordering, common.n_max, true)?;
    let scan = leading_minor_scan(&m, common.n_max, common.tol)?;
    let options = SearchOptions { tol: common.tol, budget: search.budget };
    let witness = search_witness(&m, search.max_card, search.strategy, options)?;

    let mut parameters = common.parameters();
    parameters.max_cardinality = Some(search.max_card);
    parameters.strategy = Some(search.strategy);
    parameters.budget = search.budget;
    parameters.with_oracle = oracle;
    let mut report = RunReport::new(
        command,
        &common.state.display().to_string(),
        engine.fingerprint().into(),
        parameters,
        common.ordering_record(&ctx.ordering),
        &scan,
    )
    .with_witness(&witness);
    let mut exit = report.verdict.exit_code();
    if oracle {
        let (ca, cb) = common.oracle_cutoffs(&ctx.loaded);
        let result = oracle_npt(&ctx.loaded.state, ca, cb, common.tol)?;
        let audit = agreement_audit(&witness, &result);
        if audit.is_hard_failure() {
            report.warnings.push("a negative minor contradicts the PPT oracle".into());
            exit = 1;
        }
        report = report.with_oracle(&result, &audit);
    }
    Ok(Run { report, exit })
}

fn run(command: &Command) -> Result<(Run, bool)> {
    match command {
        Command::ScanLeading(common) => {
            let ctx = common.load()?;
            let engine = MomentEngine::new(&ctx.loaded.state, common.backend);
            let m = engine.matrix(&ctx.ordering, common.n_max, true)?;
            let scan = leading_minor_scan(&m, common.n_max, common.tol)?;
            let report = RunReport::new(
                "scan-leading",
                &common.state.display().to_string(),
                engine.fingerprint().into(),
                common.parameters(),
                common.ordering_record(&ctx.ordering),
                &scan,
            );
            Ok((Run { report, exit: 0 }, common.json))
        }
        Command::Check { common, search, with_oracle } => {
            Ok((witness_run(common, search, "check", *with_oracle)?, common.json))
        }
        Command::Compare { common, search } => Ok((witness_run(common, search, "compare", true)?, common.json)),
        Command::FindOrdering { common, signature, budget } => {
            let ctx = common.load()?;
            let target = SignClass::parse_signature(signature)
                .with_context(|| format!("signature `{signature}` may only contain +, 0 and -"))?;
            let found =
                ordering_signature_search(&ctx.loaded.state, &ctx.ordering, &target, *budget, common.backend, common.tol)?;
            let mut parameters = common.parameters();
            parameters.signature = Some(signature.clone());
            parameters.budget = Some(*budget);
            let mut report = RunReport::new(
                "find-ordering",
                &common.state.display().to_string(),
                ctx.loaded.state.fingerprint(),
                parameters,
                OrderingRecord { name: found.ordering.name().into(), words: found.ordering.words()[..found.scan.len()].to_vec() },
                &found.scan,
            );
            report.prefix_sets_examined = Some(found.examined);
            Ok((Run { report, exit: 0 }, common.json))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((run, json)) => {
            if json {
                match serde_json::to_string_pretty(&run.report) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                print!("{}", run.report.render());
            }
            ExitCode::from(run.exit)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
