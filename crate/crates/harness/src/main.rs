use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spiked_amp_harness::aggregate::aggregate;
use spiked_amp_harness::config::{Experiment, ExperimentConfig, InitKind, ScanQuantity, SignalChoice};
use spiked_amp_harness::output;
use spiked_amp_harness::{run, HarnessError, Output};

#[derive(Parser)]
#[command(name = "spiked-amp", version, about = "AMP experiments on the spiked Wigner model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Z2 synchronization runs
    Z2(Common),
    /// Sparse PCA runs
    Sparse(Common),
    /// State-evolution grid scan
    SeScan(Common),
    /// κ bound grid scan
    KappaScan(Common),
    /// Decomposition ledger audit
    DecompAudit(Common),
    /// Top eigenpair statistics
    Spectral(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "T", alias = "t-max")]
    t_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c_tau: Option<f64>,
    #[arg(long)]
    s_power: Option<usize>,
    #[arg(long)]
    p_split: Option<f64>,
    #[arg(long)]
    n_rounds: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long, value_enum)]
    signal: Option<SignalArg>,
    #[arg(long, value_enum)]
    quantity: Option<QuantityArg>,
    #[arg(long)]
    tau_points: Option<usize>,
    /// Output CSV path (stdout when absent)
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the (metric, t) summary to this path
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum InitArg {
    Spectral,
    Informative,
    DiagMax,
    Split,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SignalArg {
    Dirac,
    Gaussian,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum QuantityArg {
    T2,
    Dt2,
    Identity,
}

fn build_config(experiment: Experiment, c: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(experiment),
    };
    if cfg.experiment != experiment {
        return Err(HarnessError::Config(format!(
            "config describes {:?} but the subcommand is {:?}",
            cfg.experiment, experiment
        )));
    }
    macro_rules! patch {
        ($($f:ident),*) => { $(if let Some(v) = c.$f { cfg.$f = Some(v); })* };
    }
    patch!(n, lambda, k, t_max, c_tau, s_power, p_split, n_rounds, tau_points);
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(i) = c.init {
        cfg.init = Some(match i {
            InitArg::Spectral => InitKind::Spectral,
            InitArg::Informative => InitKind::Informative,
            InitArg::DiagMax => InitKind::DiagMax,
            InitArg::Split => InitKind::Split,
        });
    }
    if let Some(s) = c.signal {
        cfg.signal = Some(match s {
            SignalArg::Dirac => SignalChoice::Dirac,
            SignalArg::Gaussian => SignalChoice::Gaussian,
        });
    }
    if let Some(q) = c.quantity {
        cfg.quantity = Some(match q {
            QuantityArg::T2 => ScanQuantity::T2,
            QuantityArg::Dt2 => ScanQuantity::Dt2,
            QuantityArg::Identity => ScanQuantity::Identity,
        });
    }
    if let Some(o) = &c.output {
        cfg.output_path = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(experiment: Experiment, c: &Common) -> Result<(), HarnessError> {
    let cfg = build_config(experiment, c)?;
    let out = run(&cfg)?;
    let path = cfg.output_path.as_ref().map(PathBuf::from);
    let stdout_err = |source| HarnessError::Csv {
        path: PathBuf::from("<stdout>"),
        source,
    };
    match (&out, &path) {
        (Output::Records(r), Some(p)) => output::write_records_file(p, r)?,
        (Output::Records(r), None) => output::write_records(std::io::stdout().lock(), r).map_err(stdout_err)?,
        (Output::Scan(s), Some(p)) => output::write_scan_file(p, s)?,
        (Output::Scan(s), None) => output::write_scan(std::io::stdout().lock(), s).map_err(stdout_err)?,
    }
    if let (Some(sp), Output::Records(r)) = (&c.summary, &out) {
        output::write_summary_file(sp, &aggregate(r))?;
    }
    if let Output::Scan(rows) = &out {
        let failed = rows.iter().filter(|r| !r.pass).count();
        if failed > 0 {
            eprintln!("{failed} of {} grid points outside the bound", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = match &cli.command {
        Command::Z2(c) => (Experiment::Z2, c),
        Command::Sparse(c) => (Experiment::Sparse, c),
        Command::SeScan(c) => (Experiment::SeScan, c),
        Command::KappaScan(c) => (Experiment::KappaScan, c),
        Command::DecompAudit(c) => (Experiment::DecompAudit, c),
        Command::Spectral(c) => (Experiment::Spectral, c),
    };
    match execute(exp, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
