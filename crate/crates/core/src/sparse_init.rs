//! Initializations for sparse PCA: diagonal maximization, a sample-split scheme that
//! keeps `x_1` independent of the block AMP later runs on, and the eigenvector estimator
//! used on the held-in block.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::denoise::soft_threshold;
use crate::linalg::{self, dot, norm, SymMatrix};
use crate::rng::{self, tag, Rng};
use crate::{Error, Result};

/// `ŝ = argmax_i |M_ii|` (smallest index on ties) and `x_1 = e_ŝ`.
pub fn diag_max_init(m: &SymMatrix) -> Result<(usize, Vec<f64>)> {
    let n = m.n();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut best = 0;
    for i in 1..n {
        if libm::fabs(m.get(i, i)) > libm::fabs(m.get(best, best)) {
            best = i;
        }
    }
    Ok((best, linalg::unit_vector(n, best)))
}

/// Read access to a symmetric matrix, with hooks that let an auditor see which block a
/// sample-split round is reading.
pub trait MatrixAccess {
    fn dim(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;
    /// A new round starts; `in_set[i]` marks `i ∈ I`.
    fn begin_round(&self, _in_set: &[bool]) {}
    /// The round's `x^j` is fixed and scoring on `I^c × I^c` begins.
    fn begin_scoring(&self) {}
}

impl MatrixAccess for SymMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

#[derive(Debug, Default)]
struct AuditState {
    in_set: Vec<bool>,
    scoring: bool,
    early_reads: Vec<usize>,
}

/// Counts, per round, the reads of `M_{I^c, I^c}` made before scoring starts.
#[derive(Debug)]
pub struct AuditedAccess<'a> {
    inner: &'a SymMatrix,
    state: RefCell<AuditState>,
}

impl<'a> AuditedAccess<'a> {
    pub fn new(inner: &'a SymMatrix) -> Self {
        AuditedAccess {
            inner,
            state: RefCell::new(AuditState::default()),
        }
    }

    /// Early reads of the held-out block, one entry per round.
    pub fn early_reads(&self) -> Vec<usize> {
        self.state.borrow().early_reads.clone()
    }
}

impl MatrixAccess for AuditedAccess<'_> {
    fn dim(&self) -> usize {
        self.inner.n()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let mut s = self.state.borrow_mut();
        if !s.scoring && !s.in_set.is_empty() && !s.in_set[i] && !s.in_set[j] {
            if let Some(c) = s.early_reads.last_mut() {
                *c += 1;
            }
        }
        self.inner.get(i, j)
    }

    fn begin_round(&self, in_set: &[bool]) {
        let mut s = self.state.borrow_mut();
        s.in_set = in_set.to_vec();
        s.scoring = false;
        s.early_reads.push(0);
    }

    fn begin_scoring(&self) {
        self.state.borrow_mut().scoring = true;
    }
}

/// Entry threshold, in units of the estimated noise level.
pub const ORACLE_ENTRY_C: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub v: Vec<f64>,
    /// Set when nothing survived thresholding (the returned vector is `e_1`).
    pub degenerate: bool,
}

fn median_abs(mut a: Vec<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let mid = a.len() / 2;
    let (_, m, _) = a.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Leading eigenvector estimate for a sparse spike in `m_sub`.
///
/// Entries are hard-thresholded at `3σ̂` (`3√2 σ̂` on the diagonal), with `σ̂` the
/// median absolute off-diagonal entry over 0.6745; the thresholded matrix is sparse and
/// its top eigenvector is found by power iteration shifted by the largest absolute row
/// sum. The result is truncated to its `2 k_hint` largest entries and renormalized.
pub fn oracle_estimate(m_sub: &SymMatrix, k_hint: usize) -> Result<OracleEstimate> {
    let n = m_sub.n();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if k_hint == 0 {
        return Err(Error::InvalidParameter("k_hint must be positive"));
    }
    let mut off = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        off.extend(m_sub.row(i)[i + 1..].iter().map(|v| libm::fabs(*v)));
    }
    let sigma = median_abs(off) / 0.674_489_750_196_081_7;
    let nu_off = ORACLE_ENTRY_C * sigma;
    let nu_diag = ORACLE_ENTRY_C * core::f64::consts::SQRT_2 * sigma;

    // Sparse rows of the thresholded matrix.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, &v) in m_sub.row(i).iter().enumerate() {
            let nu = if i == j { nu_diag } else { nu_off };
            if libm::fabs(v) > nu {
                row.push((j, v));
            }
        }
    }
    let shift = rows
        .iter()
        .map(|r| r.iter().map(|(_, v)| libm::fabs(*v)).sum::<f64>())
        .fold(0.0, f64::max);
    if shift == 0.0 {
        return Ok(OracleEstimate {
            v: linalg::unit_vector(n, 0),
            degenerate: true,
        });
    }

    let apply = |u: &[f64]| -> Vec<f64> {
        rows.iter()
            .zip(u)
            .map(|(r, ui)| shift * ui + r.iter().map(|(j, v)| v * u[*j]).sum::<f64>())
            .collect()
    };
    // Start from the heaviest row's support.
    let top = (0..n)
        .max_by(|a, b| {
            let sa: f64 = rows[*a].iter().map(|(_, v)| libm::fabs(*v)).sum();
            let sb: f64 = rows[*b].iter().map(|(_, v)| libm::fabs(*v)).sum();
            sa.total_cmp(&sb).then(b.cmp(a))
        })
        .expect("n > 0");
    let mut u = vec![1.0 / libm::sqrt(n as f64); n];
    u[top] += 1.0;
    for (j, v) in &rows[top] {
        u[*j] += v.signum();
    }
    let (mut u, _) = linalg::normalized(&u).expect("nonzero start");
    for _ in 0..20_000 {
        let (next, _) = linalg::normalized(&apply(&u)).expect("shifted operator is positive");
        let diff = norm(&linalg::sub(&next, &u));
        u = next;
        if diff < 1e-13 {
            break;
        }
    }

    let keep = (2 * k_hint).min(n);
    if keep < n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| libm::fabs(u[*b]).total_cmp(&libm::fabs(u[*a])).then(a.cmp(b)));
        for &i in &order[keep..] {
            u[i] = 0.0;
        }
    }
    let (v, _) = linalg::normalized(&u).expect("top entries are nonzero");
    Ok(OracleEstimate { v, degenerate: false })
}

/// Parameters of the sample-split initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    /// inclusion probability of each index in `I_j`
    pub p: f64,
    /// number of rounds `N`
    pub rounds: usize,
    /// threshold `τ_1` applied to `v^j`
    pub tau1: f64,
    /// sparsity hint passed to the eigenvector estimator on `M_{I,I}`
    pub k_hint: usize,
}

impl SplitParams {
    /// `p = 4 log n / k` (capped at 0.9), `N = ⌈log n⌉`, `τ_1 = 2 √(log n / n)`,
    /// `k_hint = ⌈p k⌉`.
    pub fn defaults(n: usize, k: usize) -> Self {
        let ln = libm::log(n as f64);
        let p = f64::min(4.0 * ln / k as f64, 0.9);
        SplitParams {
            p,
            rounds: (libm::ceil(ln) as usize).max(1),
            tau1: 2.0 * libm::sqrt(ln / n as f64),
            k_hint: (libm::ceil(p * k as f64) as usize).max(1),
        }
    }
}

/// One round of the split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRound {
    /// `I_j` (sorted)
    pub index_set: Vec<usize>,
    /// `I_j^c` (sorted)
    pub complement: Vec<usize>,
    /// eigenvector estimate on `M_{I,I}`
    pub v_sub: Vec<f64>,
    /// `v^j = M_{I^c, I} v_sub`
    pub v_j: Vec<f64>,
    /// `ST_{τ_1}(v^j) / ‖ST_{τ_1}(v^j)‖`, `None` if everything was thresholded
    pub x_j: Option<Vec<f64>>,
    /// `x^j^T M_{I^c, I^c} x^j`
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub rounds: Vec<SplitRound>,
    /// index of the winning round `ĵ`
    pub chosen: usize,
}

impl SplitOutcome {
    pub fn chosen_round(&self) -> &SplitRound {
        &self.rounds[self.chosen]
    }

    /// `x_1 = x^ĵ` over `I_ĵ^c`.
    pub fn x1(&self) -> &[f64] {
        self.chosen_round().x_j.as_deref().expect("winner has x_j")
    }
}

/// Runs `N` split rounds on `m` and picks the one with the largest score.
pub fn sample_split_init<A: MatrixAccess + ?Sized>(m: &A, params: &SplitParams, seed: u64) -> Result<SplitOutcome> {
    let n = m.dim();
    if !(params.p > 0.0 && params.p < 1.0) {
        return Err(Error::InvalidParameter("p must lie in (0, 1)"));
    }
    if params.p * (n as f64) < 2.0 {
        return Err(Error::InvalidParameter("p n must be at least 2"));
    }
    if params.rounds == 0 {
        return Err(Error::InvalidParameter("at least one round is required"));
    }

    let mut rounds = Vec::with_capacity(params.rounds);
    for j in 0..params.rounds {
        let mut r = rng::stream(rng::derive_seed(seed, j as u64, tag::SPLIT));
        let in_set: Vec<bool> = (0..n).map(|_| r.random_bool(params.p)).collect();
        let index_set: Vec<usize> = (0..n).filter(|i| in_set[*i]).collect();
        let complement: Vec<usize> = (0..n).filter(|i| !in_set[*i]).collect();
        m.begin_round(&in_set);
        if index_set.is_empty() || complement.is_empty() {
            rounds.push(SplitRound {
                index_set,
                complement,
                v_sub: Vec::new(),
                v_j: Vec::new(),
                x_j: None,
                score: None,
            });
            continue;
        }

        let sub = SymMatrix::from_upper(index_set.len(), |a, b| m.entry(index_set[a], index_set[b]));
        let est = oracle_estimate(&sub, params.k_hint)?;
        let v_sub = est.v;
        let v_j: Vec<f64> = complement
            .iter()
            .map(|&i| index_set.iter().zip(&v_sub).map(|(&l, v)| m.entry(i, l) * v).sum())
            .collect();
        let st: Vec<f64> = v_j.iter().map(|v| soft_threshold(*v, params.tau1)).collect();
        let x_j = linalg::normalized(&st).map(|(x, _)| x);

        m.begin_scoring();
        let score = x_j.as_ref().map(|x| {
            let support: Vec<usize> = (0..x.len()).filter(|a| x[*a] != 0.0).collect();
            let mut s = 0.0;
            for &a in &support {
                for &b in &support {
                    s += x[a] * x[b] * m.entry(complement[a], complement[b]);
                }
            }
            s
        });
        rounds.push(SplitRound {
            index_set,
            complement,
            v_sub,
            v_j,
            x_j,
            score,
        });
    }

    let chosen = rounds
        .iter()
        .enumerate()
        .filter_map(|(j, r)| r.score.map(|s| (j, s)))
        .fold(None, |best: Option<(usize, f64)>, (j, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((j, s)),
        })
        .map(|(j, _)| j)
        .ok_or(Error::InitializationFailure("every round thresholded to zero"))?;
    Ok(SplitOutcome { rounds, chosen })
}

/// `⟨v⋆_{I^c}, x⟩ / ‖v⋆_{I^c}‖` for `x` indexed by `complement`.
pub fn normalized_overlap(v_star: &[f64], complement: &[usize], x: &[f64]) -> f64 {
    let vc: Vec<f64> = complement.iter().map(|&i| v_star[i]).collect();
    let nv = norm(&vc);
    if nv == 0.0 {
        0.0
    } else {
        dot(&vc, x) / nv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_max_examples() {
        let (s, x) = diag_max_init(&SymMatrix::diagonal(&[1.0, -5.0, 2.0])).unwrap();
        assert_eq!(s, 1);
        assert_eq!(x, [0.0, 1.0, 0.0]);
        let (s, _) = diag_max_init(&SymMatrix::diagonal(&[3.0, -3.0, 1.0])).unwrap();
        assert_eq!(s, 0);
    }

    #[test]
    fn oracle_recovers_noiseless_rank_one() {
        let mut v = vec![0.0; 30];
        v[2] = 0.6;
        v[7] = -0.48;
        v[20] = 0.64;
        let m = SymMatrix::zeros(30).scaled_plus_rank_one(0.0, 2.0, &v).unwrap();
        let est = oracle_estimate(&m, 3).unwrap();
        let c = dot(&est.v, &v).abs();
        assert!((c - 1.0).abs() < 1e-8, "{c}");
        assert!(!est.degenerate);
    }

    #[test]
    fn oracle_on_zero_matrix_is_flagged() {
        let est = oracle_estimate(&SymMatrix::zeros(4), 1).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.v, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn audited_access_counts_only_the_held_out_block() {
        let m = SymMatrix::identity(3);
        let a = AuditedAccess::new(&m);
        a.begin_round(&[true, false, false]);
        a.entry(0, 1);
        a.entry(1, 2);
        a.begin_scoring();
        a.entry(2, 2);
        assert_eq!(a.early_reads(), [1]);
    }

    #[test]
    fn split_rejects_bad_parameters() {
        let m = SymMatrix::identity(4);
        let p = SplitParams { p: 0.1, rounds: 1, tau1: 0.0, k_hint: 1 };
        assert!(sample_split_init(&m, &p, 0).is_err());
    }
}
