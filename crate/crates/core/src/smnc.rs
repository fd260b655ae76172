//! Iterative symbol-mismatch noise cancellation.
//!
//! Every iteration detects targets on the current range profile, rebuilds
//! the cross-band residual they cause from their extracted gains and the
//! known symbols, and subtracts it from the *initial* unfolded frame:
//!
//! ```text
//! D(n) = D(0) - Ȳ(n-1),    Q(n) = IFFT[D(n)]
//! ```
//!
//! The loop stops when the sidelobe level changes by at most `ε` dB between
//! consecutive iterations.
//!
//! Sidelobe level `μ`: mean integrated power over all bins outside
//! `±guard_cells` of every current detection, in dB. Detections accumulate
//! across iterations (union by range bin); all of them are re-extracted from
//! the latest profile, and a bin that no longer clears its CFAR threshold is
//! dropped.

use std::collections::BTreeSet;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::measure_isl;
use crate::channel::FreqFrame;
use crate::config::RadarConfig;
use crate::detect::{
    cfar_detect, cfar_probe, extract_targets, mean_outside, range_profiles, CfarParams, Detection,
    RangeDopplerProduct, TargetEstimate,
};
use crate::error::{Error, Result};
use crate::sampler::fold_frame;
use crate::scalar::{phasor, Real};
use crate::unfold::unfold_full;
use crate::to_db;
use crate::waveform::SymbolMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmncParams {
    pub epsilon_db: f64,
    pub max_iters: usize,
    pub cfar: CfarParams,
}

impl Default for SmncParams {
    fn default() -> Self {
        Self {
            epsilon_db: 0.5,
            max_iters: 10,
            cfar: CfarParams::default(),
        }
    }
}

impl SmncParams {
    fn validate(&self) -> Result<()> {
        if self.epsilon_db.is_nan() || self.epsilon_db <= 0.0 || self.max_iters == 0 {
            return Err(Error::Config(format!(
                "SMNC needs epsilon > 0 and max_iters >= 1 (got {}, {})",
                self.epsilon_db, self.max_iters
            )));
        }
        Ok(())
    }
}

/// What one loop body saw and did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Bins used for reconstruction, ascending.
    pub bins: Vec<usize>,
    pub new_bins: Vec<usize>,
    pub pruned_bins: Vec<usize>,
    pub gains: Vec<Vec<Complex<f64>>>,
    pub mu_db: f64,
}

#[derive(Debug, Clone)]
pub struct SmncState<T: Real> {
    d0: FreqFrame<T>,
    pub d_current: FreqFrame<T>,
    pub q_current: RangeDopplerProduct<T>,
    pub mu_history: Vec<f64>,
    pub iteration: usize,
    pub detected: Vec<TargetEstimate<T>>,
    pub trivially_converged: bool,
    pub records: Vec<IterationRecord>,
}

impl<T: Real> SmncState<T> {
    /// `Q(0)` and `μ0` from the initial unfolded frame.
    pub fn init(d0: FreqFrame<T>, config: &RadarConfig, params: &SmncParams) -> Result<Self> {
        let q0 = range_profiles(&d0, config)?;
        let hits = cfar_detect(&q0.integrated, &params.cfar, config.num_symbols)?;
        let bins: Vec<usize> = hits.iter().map(|d| d.range_bin).collect();
        let mu0 = to_db(mean_outside(&q0.integrated, &bins, params.cfar.guard_cells)?);
        Ok(Self {
            d_current: d0.clone(),
            d0,
            q_current: q0,
            mu_history: vec![mu0],
            iteration: 0,
            detected: Vec::new(),
            trivially_converged: false,
            records: Vec::new(),
        })
    }

    pub fn d0(&self) -> &FreqFrame<T> {
        &self.d0
    }

    pub fn mu(&self) -> f64 {
        *self.mu_history.last().expect("mu history starts non-empty")
    }
}

/// SMN caused by the given estimates: block `i` is `Σ_{k≠i} X̄_k ⊙ (C_k ⊘ C_i)`.
///
/// `X̄` is built from each estimate's per-symbol gains and its range
/// steering vector, so no velocity estimate is needed.
pub fn reconstruct_smn<T: Real>(
    estimates: &[TargetEstimate<T>],
    symbols: &SymbolMatrix<T>,
    config: &RadarConfig,
) -> Result<FreqFrame<T>> {
    let nc = config.num_subcarriers;
    let ns = config.num_symbols;
    let l = config.sub_sampling_ratio;
    if l == 1 || estimates.is_empty() {
        return Ok(FreqFrame::zeros(nc, ns, crate::channel::Band::FullBand));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut xbar = Array2::from_elem((nc, ns), zero);
    for est in estimates {
        let steer: Vec<Complex<T>> = (0..nc)
            .map(|n| {
                let cycles = (n * est.range_bin) % nc;
                phasor(-2.0 * std::f64::consts::PI * cycles as f64 / nc as f64)
            })
            .collect();
        for q in 0..ns {
            let g = est.gains[q];
            for n in 0..nc {
                xbar[[n, q]] = xbar[[n, q]] + steer[n] * g;
            }
        }
    }
    // Z ⊘ C_i over all k includes X̄_i itself; subtracting it leaves k ≠ i.
    let modulated = FreqFrame::full(&xbar * symbols.entries());
    let mut y = unfold_full(&fold_frame(&modulated, l)?, symbols)?;
    y.entries = y.entries - &xbar;
    Ok(y)
}

/// One loop body: estimate from `Q(n-1)`, rebuild `Ȳ(n-1)`, form
/// `D(n) = D(0) - Ȳ(n-1)` and `Q(n)`, append `μn`.
pub fn smnc_iterate<T: Real>(
    mut state: SmncState<T>,
    symbols: &SymbolMatrix<T>,
    config: &RadarConfig,
    params: &SmncParams,
) -> Result<SmncState<T>> {
    let ns = config.num_symbols;
    let q_prev = &state.q_current;
    let hits = cfar_detect(&q_prev.integrated, &params.cfar, ns)?;
    let hit_bins: BTreeSet<usize> = hits.iter().map(|d| d.range_bin).collect();
    let known: BTreeSet<usize> = state.detected.iter().map(|e| e.range_bin).collect();
    let candidates: BTreeSet<usize> = hit_bins.union(&known).copied().collect();

    if candidates.is_empty() && state.iteration == 0 {
        state.trivially_converged = true;
        return Ok(state);
    }

    let mut kept: Vec<Detection> = Vec::new();
    let mut pruned = Vec::new();
    for &bin in &candidates {
        let probe = cfar_probe(&q_prev.integrated, bin, &params.cfar, ns);
        if hit_bins.contains(&bin) || probe.is_above_threshold() {
            kept.push(probe);
        } else {
            pruned.push(bin);
        }
    }
    let estimates = extract_targets(q_prev, &kept, config);
    let ybar = reconstruct_smn(&estimates, symbols, config)?;
    let d_next = FreqFrame::full(&state.d0.entries - &ybar.entries);
    let mut q_next = range_profiles(&d_next, config)?;
    let bins: Vec<usize> = kept.iter().map(|d| d.range_bin).collect();
    let mu = to_db(mean_outside(&q_next.integrated, &bins, params.cfar.guard_cells)?);

    state.iteration += 1;
    state.records.push(IterationRecord {
        iteration: state.iteration,
        new_bins: bins.iter().filter(|b| !known.contains(b)).copied().collect(),
        pruned_bins: pruned,
        gains: estimates
            .iter()
            .map(|e| e.gains.iter().map(|g| crate::scalar::widen(*g)).collect())
            .collect(),
        bins,
        mu_db: mu,
    });
    q_next.detections = estimates.clone();
    state.detected = estimates;
    state.d_current = d_next;
    state.q_current = q_next;
    state.mu_history.push(mu);
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmncReport {
    pub iterations: usize,
    pub converged: bool,
    pub trivially_converged: bool,
    pub epsilon_db: f64,
    pub max_iters: usize,
    pub mu_history_db: Vec<f64>,
    pub records: Vec<IterationRecord>,
    /// Peak-relative ISL of the final profile; `None` below the measurement floor.
    pub final_isl_db: Option<f64>,
    pub final_detections: Vec<Detection>,
}

/// Runs the canceller to convergence (or `max_iters`) and returns the final
/// range profile with its detections. Non-convergence is reported, not an
/// error.
pub fn run_smnc<T: Real>(
    d0: &FreqFrame<T>,
    symbols: &SymbolMatrix<T>,
    config: &RadarConfig,
    params: &SmncParams,
) -> Result<(RangeDopplerProduct<T>, SmncReport)> {
    params.validate()?;
    let mut state = SmncState::init(d0.clone(), config, params)?;
    let mut converged = config.sub_sampling_ratio == 1;
    // without folding there is no SMN to cancel
    while !converged && state.iteration < params.max_iters {
        state = smnc_iterate(state, symbols, config, params)?;
        if state.trivially_converged {
            converged = true;
            break;
        }
        let n = state.mu_history.len();
        converged = (state.mu_history[n - 1] - state.mu_history[n - 2]).abs() <= params.epsilon_db;
    }

    let mut product = state.q_current;
    let finals = cfar_detect(&product.integrated, &params.cfar, config.num_symbols)?;
    product.detections = extract_targets(&product, &finals, config);
    let bins = product.detected_bins();
    let isl = if bins.is_empty() {
        f64::NEG_INFINITY
    } else {
        measure_isl(&product.integrated, &bins, params.cfar.guard_cells)?
    };
    let report = SmncReport {
        iterations: state.iteration,
        converged,
        trivially_converged: state.trivially_converged,
        epsilon_db: params.epsilon_db,
        max_iters: params.max_iters,
        mu_history_db: state.mu_history,
        records: state.records,
        final_isl_db: isl.is_finite().then_some(isl),
        final_detections: finals,
    };
    Ok((product, report))
}
