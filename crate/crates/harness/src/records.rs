use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Closed vocabulary of per-trial metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Alpha,
    AlphaSq,
    TauT,
    XiNorm,
    L2Err,
    Overlap,
    Score,
    W1Mixed,
    MaxPhiCorr,
    LambdaMax,
    EigOverlapSq,
    /// state-evolution prediction paired with `alpha`
    AlphaSe,
    ReconErr,
    OutsideSpan,
    BetaNorm,
    DeltaNorm,
    /// `|‖ξ_t‖ − leading-order prediction|`
    DeltaAbs,
    PhiVar,
    /// numeric code of the error that stopped the trial
    ErrorCode,
}

impl Metric {
    pub const ALL: [Metric; 19] = [
        Metric::Alpha,
        Metric::AlphaSq,
        Metric::TauT,
        Metric::XiNorm,
        Metric::L2Err,
        Metric::Overlap,
        Metric::Score,
        Metric::W1Mixed,
        Metric::MaxPhiCorr,
        Metric::LambdaMax,
        Metric::EigOverlapSq,
        Metric::AlphaSe,
        Metric::ReconErr,
        Metric::OutsideSpan,
        Metric::BetaNorm,
        Metric::DeltaNorm,
        Metric::DeltaAbs,
        Metric::PhiVar,
        Metric::ErrorCode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Alpha => "alpha",
            Metric::AlphaSq => "alpha_sq",
            Metric::TauT => "tau_t",
            Metric::XiNorm => "xi_norm",
            Metric::L2Err => "l2_err",
            Metric::Overlap => "overlap",
            Metric::Score => "score",
            Metric::W1Mixed => "w1_mixed",
            Metric::MaxPhiCorr => "max_phi_corr",
            Metric::LambdaMax => "lambda_max",
            Metric::EigOverlapSq => "eig_overlap_sq",
            Metric::AlphaSe => "alpha_se",
            Metric::ReconErr => "recon_err",
            Metric::OutsideSpan => "outside_span",
            Metric::BetaNorm => "beta_norm",
            Metric::DeltaNorm => "delta_norm",
            Metric::DeltaAbs => "delta_abs",
            Metric::PhiVar => "phi_var",
            Metric::ErrorCode => "error_code",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// One row of experiment output. `t = 0` marks quantities that are not per-iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub t: usize,
    pub metric: Metric,
    pub value: f64,
}

impl TrialRecord {
    pub fn new(trial_id: usize, t: usize, metric: Metric, value: f64) -> Self {
        TrialRecord {
            trial_id,
            t,
            metric,
            value,
        }
    }
}

/// One grid point of an SE or κ scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub tau: f64,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("gamma".parse::<Metric>().is_err());
    }
}
