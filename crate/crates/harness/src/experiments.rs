//! Trial runners. Trial `i` draws every random quantity from seeds derived from
//! `(seed, i, tag)`, so results do not depend on the worker count.

use rayon::prelude::*;
use spiked_amp::amp::{self, AmpTrajectory};
use spiked_amp::decomp::{decompose, ProjectionMode};
use spiked_amp::denoise::default_threshold;
use spiked_amp::linalg::{dot, norm};
use spiked_amp::model::{make_signal, make_spiked, sample_wigner, SignalKind, SignalSpec, SpikedModel};
use spiked_amp::pipeline;
use spiked_amp::rng::{derive_seed, tag};
use spiked_amp::se::{self, Quadrature};
use spiked_amp::sparse_init::{normalized_overlap, SplitParams};

use crate::config::{Experiment, ExperimentConfig, InitKind, ScanQuantity, SignalChoice};
use crate::error::{HarnessError, Result};
use crate::records::{Metric, ScanRow, TrialRecord};

/// Environment variable that fixes the worker count.
pub const WORKERS_ENV: &str = "SPIKED_AMP_WORKERS";

/// Step of the central difference used for `dT₂/dτ`.
pub const DT2_STEP: f64 = 1e-5;

/// Tolerance of the quadrature identity.
pub const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Records(Vec<TrialRecord>),
    Scan(Vec<ScanRow>),
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs whatever the config describes.
pub fn run(cfg: &ExperimentConfig) -> Result<Output> {
    match cfg.experiment {
        Experiment::SeScan | Experiment::KappaScan => run_scan(cfg).map(Output::Scan),
        _ => run_experiment(cfg).map(Output::Records),
    }
}

struct Seeds {
    signal: u64,
    noise: u64,
    spectral: u64,
    init: u64,
    ledger: u64,
    split: u64,
}

impl Seeds {
    fn new(master: u64, trial: usize) -> Self {
        let d = |t| derive_seed(master, trial as u64, t);
        Seeds {
            signal: d(tag::SIGNAL),
            noise: d(tag::NOISE),
            spectral: d(tag::SPECTRAL),
            init: d(tag::INIT),
            ledger: d(tag::LEDGER),
            split: d(tag::SPLIT),
        }
    }
}

/// Per-trial inputs resolved from the config once.
struct Plan {
    experiment: Experiment,
    n: usize,
    lambda: f64,
    k: usize,
    t_max: usize,
    seed: u64,
    c_tau: f64,
    s_power: Option<usize>,
    init: InitKind,
    signal: SignalKind,
    split: Option<SplitParams>,
    /// `τ_1 … τ_T` for Z2 runs
    tau: Vec<f64>,
}

impl Plan {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let experiment = cfg.experiment;
        let n = cfg.n()?;
        let lambda = cfg.lambda()?;
        let t_max = if experiment == Experiment::Spectral {
            cfg.t_max.unwrap_or(0)
        } else {
            cfg.t_max()?
        };
        let k = if experiment == Experiment::Sparse { cfg.k()? } else { 0 };
        let init = match (experiment, cfg.init) {
            (_, Some(i)) => i,
            (Experiment::Sparse, None) => InitKind::Informative,
            _ => InitKind::Spectral,
        };
        let signal = match cfg.signal.unwrap_or(SignalChoice::Dirac) {
            SignalChoice::Dirac => SignalKind::SparseDirac,
            SignalChoice::Gaussian => SignalKind::SparseGaussian,
        };
        let split = (experiment == Experiment::Sparse && init == InitKind::Split).then(|| {
            let mut p = SplitParams::defaults(n, k);
            if let Some(ps) = cfg.p_split {
                p.p = ps;
                p.k_hint = ((ps * k as f64).ceil() as usize).max(1);
            }
            if let Some(r) = cfg.n_rounds {
                p.rounds = r;
            }
            p
        });
        let tau = if matches!(experiment, Experiment::Z2) && t_max > 0 {
            se::se_z2_trajectory(lambda, t_max, &Quadrature::standard())?.values
        } else {
            Vec::new()
        };
        Ok(Plan {
            experiment,
            n,
            lambda,
            k,
            t_max,
            seed: cfg.seed,
            c_tau: cfg.c_tau(),
            s_power: cfg.s_power,
            init,
            signal,
            split,
            tau,
        })
    }

    fn model(&self, s: &Seeds) -> spiked_amp::Result<SpikedModel> {
        let spec = if self.experiment == Experiment::Sparse {
            SignalSpec::sparse(self.signal, self.n, self.k, s.signal)
        } else {
            SignalSpec::z2(self.n, s.signal)
        };
        make_spiked(self.lambda, make_signal(&spec)?, sample_wigner(self.n, s.noise)?)
    }

    fn trial(&self, id: usize) -> Vec<TrialRecord> {
        let mut out = Vec::new();
        let res = match self.experiment {
            Experiment::Z2 => self.z2_trial(id, &mut out),
            Experiment::Sparse => self.sparse_trial(id, &mut out),
            Experiment::DecompAudit => self.decomp_trial(id, &mut out),
            Experiment::Spectral => self.spectral_trial(id, &mut out),
            Experiment::SeScan | Experiment::KappaScan => unreachable!("scans have no trials"),
        };
        if let Err(e) = res {
            out.push(TrialRecord::new(id, 0, Metric::ErrorCode, e.code() as f64));
        }
        out
    }

    fn z2_run(&self, model: &SpikedModel, s: &Seeds, out: &mut Vec<TrialRecord>, id: usize) -> spiked_amp::Result<AmpTrajectory> {
        match self.init {
            InitKind::Informative => pipeline::z2_informative(model, s.init, self.t_max),
            _ => {
                let run = pipeline::z2_spectral(model, self.s_power, s.spectral, self.t_max)?;
                let sp = &run.spectral;
                out.push(TrialRecord::new(id, 0, Metric::LambdaMax, sp.lambda_max));
                let c = dot(&sp.vhat, &model.v_star);
                out.push(TrialRecord::new(id, 0, Metric::EigOverlapSq, c * c));
                Ok(run.traj)
            }
        }
    }

    fn z2_trial(&self, id: usize, out: &mut Vec<TrialRecord>) -> spiked_amp::Result<()> {
        let s = Seeds::new(self.seed, id);
        let model = self.model(&s)?;
        let traj = self.z2_run(&model, &s, out, id)?;
        let v = &model.v_star;
        for t in 1..=self.t_max {
            let a = if t == 1 {
                dot(v, traj.x(1))
            } else {
                self.lambda * dot(v, traj.eta(t - 1))
            };
            out.push(TrialRecord::new(id, t, Metric::Alpha, a));
            out.push(TrialRecord::new(id, t, Metric::AlphaSq, a * a));
            out.push(TrialRecord::new(id, t, Metric::TauT, self.tau[t - 1]));
            out.push(TrialRecord::new(id, t, Metric::Overlap, dot(v, traj.eta(t)).abs()));
        }
        Ok(())
    }

    fn sparse_trial(&self, id: usize, out: &mut Vec<TrialRecord>) -> spiked_amp::Result<()> {
        let s = Seeds::new(self.seed, id);
        let model = self.model(&s)?;
        let tau = default_threshold(self.n, self.c_tau);
        let (traj, v, with_se) = match self.init {
            InitKind::DiagMax => {
                let (hat, traj) = pipeline::sparse_diag_max(&model, self.c_tau, self.t_max)?;
                out.push(TrialRecord::new(id, 0, Metric::Overlap, model.v_star[hat].abs()));
                (traj, model.v_star.clone(), true)
            }
            InitKind::Split => {
                let params = self.split.expect("split params resolved");
                let run = pipeline::sparse_split(&model, &model.observed, &params, self.c_tau, s.split, self.t_max)?;
                let round = run.split.chosen_round();
                out.push(TrialRecord::new(id, 0, Metric::Score, round.score.unwrap_or(f64::NAN)));
                let ov = normalized_overlap(&model.v_star, &round.complement, run.split.x1());
                out.push(TrialRecord::new(id, 0, Metric::Overlap, ov.abs()));
                let vc = round.complement.iter().map(|&i| model.v_star[i]).collect();
                (run.traj, vc, false)
            }
            _ => (
                pipeline::sparse_informative(&model, self.c_tau, s.init, self.t_max)?,
                model.v_star.clone(),
                true,
            ),
        };
        for t in 1..=self.t_max {
            let err = pipeline::sparse_l2_error(traj.x(t), &v, tau, self.lambda);
            out.push(TrialRecord::new(id, t, Metric::L2Err, err));
        }
        let alphas = pipeline::alpha_path(&traj, &v, self.lambda);
        // alphas[i] = α_{i+2}; α⋆ is seeded from the empirical α_2
        let se_path = match (with_se, alphas.first()) {
            (true, Some(&a2)) if self.t_max >= 2 => {
                Some(se::se_sparse_trajectory(a2, &v, tau, self.lambda, self.t_max - 1)?.values)
            }
            _ => None,
        };
        for t in 2..=self.t_max {
            let a = alphas[t - 2];
            out.push(TrialRecord::new(id, t, Metric::Alpha, a));
            if let Some(p) = &se_path {
                out.push(TrialRecord::new(id, t, Metric::AlphaSe, p[t - 2]));
            }
        }
        Ok(())
    }

    fn decomp_trial(&self, id: usize, out: &mut Vec<TrialRecord>) -> spiked_amp::Result<()> {
        let s = Seeds::new(self.seed, id);
        let model = self.model(&s)?;
        let traj = self.z2_run(&model, &s, out, id)?;
        let ledger = decompose(&model, &traj, s.ledger, ProjectionMode::for_dimension(self.n))?;
        if let Some(x0) = ledger.xi0_norm {
            out.push(TrialRecord::new(id, 0, Metric::XiNorm, x0));
        }
        for r in &ledger.records {
            out.push(TrialRecord::new(id, r.t, Metric::Alpha, r.alpha));
            out.push(TrialRecord::new(id, r.t, Metric::XiNorm, r.xi_norm));
            out.push(TrialRecord::new(id, r.t, Metric::ReconErr, r.recon_err));
            out.push(TrialRecord::new(id, r.t, Metric::OutsideSpan, r.outside_span));
            out.push(TrialRecord::new(id, r.t, Metric::BetaNorm, norm(&r.beta)));
            let d = ledger.residual_diagnostics(&model, &traj, r.t)?;
            out.push(TrialRecord::new(id, r.t, Metric::DeltaNorm, d.delta_norm));
            out.push(TrialRecord::new(id, r.t, Metric::DeltaAbs, (d.xi_norm - d.xi_norm_leading).abs()));
        }
        let g = ledger.gaussianity_report();
        let last = ledger.records.last().map_or(0, |r| r.t);
        out.push(TrialRecord::new(id, last, Metric::MaxPhiCorr, g.max_phi_corr));
        out.push(TrialRecord::new(id, last, Metric::W1Mixed, g.w1_mixed));
        for (k, var) in g.phi_var.iter().enumerate() {
            out.push(TrialRecord::new(id, k + 1, Metric::PhiVar, *var));
        }
        Ok(())
    }

    fn spectral_trial(&self, id: usize, out: &mut Vec<TrialRecord>) -> spiked_amp::Result<()> {
        let s = Seeds::new(self.seed, id);
        let model = self.model(&s)?;
        let steps = self
            .s_power
            .unwrap_or_else(|| amp::default_power_steps(self.n, self.lambda));
        let sp = amp::spectral_init(&model.observed, steps, s.spectral)?;
        out.push(TrialRecord::new(id, 0, Metric::LambdaMax, sp.lambda_max));
        let c = dot(&sp.vhat, &model.v_star);
        out.push(TrialRecord::new(id, 0, Metric::EigOverlapSq, c * c));
        Ok(())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// Runs `trials` independent trials and returns their records in trial order. A trial
/// that hits a numerical error contributes the rows produced so far plus one
/// `error_code` row.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_experiment_with_workers(cfg, worker_count())
}

/// [`run_experiment`] on an explicit number of worker threads.
pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    if matches!(cfg.experiment, Experiment::SeScan | Experiment::KappaScan) {
        return Err(HarnessError::Config("scans produce scan rows; use run_scan".into()));
    }
    let plan = Plan::new(cfg)?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool(workers)?.install(|| (0..cfg.trials).into_par_iter().map(|i| plan.trial(i)).collect());
    Ok(per_trial.into_iter().flatten().collect())
}

fn tau_grid(lambda: f64, points: usize) -> impl Iterator<Item = f64> {
    let lo = lambda * lambda - 1.0;
    (0..points).map(move |j| lo + j as f64 / (points - 1) as f64)
}

/// Evaluates the SE quantity or `√κ²` on the `(λ, τ)` grid.
pub fn run_scan(cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let q = Quadrature::standard();
    let points = cfg.tau_points();
    let quantity = cfg.quantity.unwrap_or(ScanQuantity::T2);
    let mut rows = Vec::new();
    for lambda in cfg.lambda_grid() {
        for tau in tau_grid(lambda, points) {
            let row = match cfg.experiment {
                Experiment::KappaScan => {
                    let value = se::kappa2_z2(lambda, tau, &q)?.sqrt();
                    let bound = 1.0 - (lambda - 1.0) / 12.0;
                    ScanRow { lambda, tau, value, bound, pass: value <= bound }
                }
                Experiment::SeScan => match quantity {
                    ScanQuantity::T2 => {
                        let value = se::t2_z2(lambda, tau, &q)?;
                        let bound = 1.0 - (lambda - 1.0);
                        ScanRow { lambda, tau, value, bound, pass: (0.0..=bound).contains(&value) }
                    }
                    ScanQuantity::Dt2 => {
                        let h = DT2_STEP;
                        let value = (se::t2_z2(lambda, tau + h, &q)? - se::t2_z2(lambda, tau - h, &q)?) / (2.0 * h);
                        ScanRow { lambda, tau, value, bound: 0.0, pass: value <= 0.0 }
                    }
                    ScanQuantity::Identity => {
                        let (sq, lin) = se::quad_identity_check(tau, lambda, &q)?;
                        let value = (sq - lin).abs();
                        ScanRow { lambda, tau, value, bound: IDENTITY_TOL, pass: value <= IDENTITY_TOL }
                    }
                },
                _ => return Err(HarnessError::Config("not a scan experiment".into())),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}
