//! Range/Doppler processing and CA-CFAR target extraction.
//!
//! Range profiles use an orthonormal (`1/√Nc`) inverse DFT per column. A
//! target of per-bin power `|α|²` then peaks at `Nc|α|²` and white noise of
//! per-bin variance `σ²` stays at `σ²` in every range bin.

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::{Band, FreqFrame};
use crate::config::RadarConfig;
use crate::dft::{self, Direction};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfarParams {
    /// Training cells on each side of the cell under test.
    pub training_cells: usize,
    /// Guard cells on each side of the cell under test.
    pub guard_cells: usize,
    /// Design false-alarm probability per cell.
    pub pfa: f64,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self {
            training_cells: 16,
            guard_cells: 4,
            pfa: 1e-4,
        }
    }
}

impl CfarParams {
    pub fn window(&self) -> usize {
        2 * (self.training_cells + self.guard_cells) + 1
    }

    /// Multiplier on the training-cell mean that yields `pfa` when every cell
    /// is the non-coherent sum of `integrated` complex Gaussian powers.
    pub fn scale_factor(&self, integrated: usize) -> f64 {
        let n = 2 * self.training_cells;
        let ns = integrated.max(1);
        // solve pfa(t) = target for t = scale / n, pfa decreasing in t
        let target = self.pfa;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while false_alarm_probability(hi, n, ns) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if false_alarm_probability(mid, n, ns) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) * n as f64
    }
}

/// CA-CFAR false-alarm probability for a cell `X ~ Gamma(ns)` tested
/// against `t·S`, with `S` the sum of `n` training cells each `Gamma(ns)`:
/// `Σ_{k<ns} C(n·ns+k-1, k) t^k / (1+t)^{n·ns+k}`.
pub fn false_alarm_probability(t: f64, n: usize, ns: usize) -> f64 {
    let m = (n * ns) as f64;
    let ln1t = t.ln_1p();
    let mut log_binom = 0.0;
    let mut sum = (-m * ln1t).exp();
    for k in 1..ns {
        log_binom += ((m + k as f64 - 1.0) / k as f64).ln();
        sum += (log_binom + k as f64 * t.ln() - (m + k as f64) * ln1t).exp();
    }
    sum
}

/// CFAR evaluation of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub range_bin: usize,
    pub power: f64,
    pub noise_mw: f64,
    pub threshold_mw: f64,
    pub snr_db: f64,
}

impl Detection {
    pub fn is_above_threshold(&self) -> bool {
        self.power > self.threshold_mw
    }
}

/// Detected target with its per-symbol complex gains `α·e^{jqωTs}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TargetEstimate<T: Real> {
    pub range_bin: usize,
    pub range_m: f64,
    pub gains: Vec<Complex<T>>,
    pub power: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerProduct<T: Real> {
    /// Per-symbol range profiles, `Nc x Ns`.
    pub profiles: Array2<Complex<T>>,
    /// Non-coherent sum `Σ_q |Q[r,q]|²` per range bin.
    pub integrated: Vec<f64>,
    pub doppler_map: Option<Array2<Complex<T>>>,
    pub detections: Vec<TargetEstimate<T>>,
}

impl<T: Real> RangeDopplerProduct<T> {
    pub fn num_bins(&self) -> usize {
        self.profiles.nrows()
    }

    pub fn num_symbols(&self) -> usize {
        self.profiles.ncols()
    }

    pub fn detected_bins(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.range_bin).collect()
    }
}

pub fn range_profiles<T: Real>(d: &FreqFrame<T>, config: &RadarConfig) -> Result<RangeDopplerProduct<T>> {
    if d.band != Band::FullBand || d.rows() != config.num_subcarriers {
        return Err(Error::Shape {
            what: "range processing needs a full-band frame",
            expected: config.num_subcarriers,
            actual: d.rows(),
        });
    }
    let scale = T::one() / T::of((d.rows() as f64).sqrt());
    let profiles = dft::columns(&d.entries, Direction::Inverse, scale);
    let integrated = profiles
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.norm_sqr().as_f64()).sum())
        .collect();
    Ok(RangeDopplerProduct {
        profiles,
        integrated,
        doppler_map: None,
        detections: Vec::new(),
    })
}

fn training_mean(integrated: &[f64], bin: usize, params: &CfarParams) -> f64 {
    let n = integrated.len() as isize;
    let (tr, g) = (params.training_cells as isize, params.guard_cells as isize);
    let b = bin as isize;
    let mut sum = 0.0;
    for off in g + 1..=g + tr {
        sum += integrated[(b - off).rem_euclid(n) as usize];
        sum += integrated[(b + off).rem_euclid(n) as usize];
    }
    sum / (2 * tr) as f64
}

/// CFAR statistics of a single cell, whether or not it is a detection.
pub fn cfar_probe(integrated: &[f64], bin: usize, params: &CfarParams, num_symbols: usize) -> Detection {
    let noise = training_mean(integrated, bin, params);
    let power = integrated[bin];
    Detection {
        range_bin: bin,
        power,
        noise_mw: noise,
        threshold_mw: params.scale_factor(num_symbols) * noise,
        snr_db: 10.0 * (power / noise).log10(),
    }
}

/// Cell-averaging CFAR over a circular profile; one detection per local
/// maximum within the guard span.
pub fn cfar_detect(integrated: &[f64], params: &CfarParams, num_symbols: usize) -> Result<Vec<Detection>> {
    let n = integrated.len();
    if n < params.window() {
        return Err(Error::CfarWindow {
            cells: n,
            needed: params.window(),
        });
    }
    let scale = params.scale_factor(num_symbols);
    let g = params.guard_cells as isize;
    let mut out = Vec::new();
    for bin in 0..n {
        let noise = training_mean(integrated, bin, params);
        let power = integrated[bin];
        let threshold = scale * noise;
        if power <= threshold {
            continue;
        }
        let b = bin as isize;
        let at = |off: isize| integrated[(b + off).rem_euclid(n as isize) as usize];
        // ties resolve to the leftmost cell
        let peak = (1..=g).all(|o| power > at(-o) && power >= at(o));
        if peak {
            out.push(Detection {
                range_bin: bin,
                power,
                noise_mw: noise,
                threshold_mw: threshold,
                snr_db: 10.0 * (power / noise).log10(),
            });
        }
    }
    Ok(out)
}

/// Reads each detection's per-symbol gains from the profiles, undoing the
/// `√Nc` coherent gain so they estimate `α·e^{jqωTs}`.
pub fn extract_targets<T: Real>(
    product: &RangeDopplerProduct<T>,
    detections: &[Detection],
    config: &RadarConfig,
) -> Vec<TargetEstimate<T>> {
    let inv = T::one() / T::of((product.num_bins() as f64).sqrt());
    detections
        .iter()
        .map(|d| TargetEstimate {
            range_bin: d.range_bin,
            range_m: config.bin_to_range_m(d.range_bin),
            gains: product.profiles.row(d.range_bin).iter().map(|v| *v * inv).collect(),
            power: d.power,
            snr_db: d.snr_db,
        })
        .collect()
}

/// Mean of `integrated` over every bin farther than `guard` (circularly)
/// from all of `exclude`.
pub fn mean_outside(integrated: &[f64], exclude: &[usize], guard: usize) -> Result<f64> {
    let n = integrated.len();
    let mut masked = vec![false; n];
    for &b in exclude {
        for off in -(guard as isize)..=guard as isize {
            masked[(b as isize + off).rem_euclid(n as isize) as usize] = true;
        }
    }
    let (sum, count) = integrated
        .iter()
        .zip(&masked)
        .filter(|(_, m)| !**m)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    if count == 0 {
        return Err(Error::Measurement(
            "exclusion zones cover the whole profile".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Ns-point forward DFT across symbols for every range bin.
pub fn doppler_process<T: Real>(product: &RangeDopplerProduct<T>) -> Result<Array2<Complex<T>>> {
    if product.num_symbols() < 2 {
        return Err(Error::SingleSymbol);
    }
    Ok(dft::rows(&product.profiles, Direction::Forward, T::one()))
}
