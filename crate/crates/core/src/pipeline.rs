//! End-to-end orchestration: simulate, fold, unfold, cancel, detect, measure.
//!
//! Trials run in parallel and are collected in trial order, so every output
//! depends only on the scenario and its seed.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{measure_isl, predict_snr, Stage};
use crate::channel::{apply_channel_freq, apply_channel_time, FreqFrame, Target};
use crate::config::RadarConfig;
use crate::detect::{cfar_detect, extract_targets, mean_outside, range_profiles, RangeDopplerProduct};
use crate::error::{Error, Result};
use crate::iq::IqCapture;
use crate::rng::trial_seed;
use crate::sampler::{demodulate_folded, fold_frame, subsample};
use crate::scalar::Real;
use crate::scenario::{ChannelModel, Scenario, ScenarioFile};
use crate::smnc::{run_smnc, SmncParams, SmncReport};
use crate::unfold::unfold_full;
use crate::waveform::{generate_symbols, modulate, synthesize, Constellation, SymbolMatrix, TimeSignal};
use crate::{from_db, to_db};

/// One simulated frame as the receiver sees it.
#[derive(Debug, Clone)]
pub struct FoldedCapture<T: Real> {
    pub config: RadarConfig,
    pub symbols: SymbolMatrix<T>,
    pub folded: FreqFrame<T>,
    /// Decimated time samples at `B/L`, kept on request.
    pub rx_sub: Option<TimeSignal<T>>,
    pub isi_warning: bool,
}

/// Radar constants of trial `trial`: the scenario's, with the trial seed.
pub fn trial_config(scenario: &Scenario, trial: usize) -> RadarConfig {
    let base = scenario.radar.rng_seed;
    scenario.radar.clone().with_seed(trial_seed(base, trial))
}

/// Draws symbols and noise for one trial and produces the folded frame.
///
/// The frequency model folds `S` directly; its time signal, when kept, is
/// synthesized from `S`, which is exact for static scenes.
pub fn simulate<T: Real>(scenario: &Scenario, trial: usize, keep_time: bool) -> Result<FoldedCapture<T>> {
    let config = trial_config(scenario, trial);
    let l = config.sub_sampling_ratio;
    let symbols = generate_symbols::<T>(&config, scenario.constellation())?;
    let (folded, rx_sub, isi_warning) = match scenario.channel_model() {
        ChannelModel::Freq => {
            let s = apply_channel_freq(&symbols, &scenario.targets, &config, true)?;
            let rx_sub = if keep_time {
                let rx = TimeSignal::new(synthesize(&s.entries, config.cp_samples()?), config.bandwidth_hz);
                Some(subsample(&rx, &config)?)
            } else {
                None
            };
            (fold_frame(&s, l)?, rx_sub, false)
        }
        ChannelModel::Time => {
            let tx = modulate(&symbols, &config)?;
            let rx = apply_channel_time(&tx, &scenario.targets, &config, true)?;
            let sub = subsample(&rx, &config)?;
            let z = demodulate_folded(&sub, &config)?;
            let isi = rx.isi_warning;
            (z, keep_time.then_some(sub), isi)
        }
    };
    Ok(FoldedCapture {
        config,
        symbols,
        folded,
        rx_sub,
        isi_warning,
    })
}

#[derive(Debug, Clone)]
pub struct ProcessedFrame<T: Real> {
    pub pre: RangeDopplerProduct<T>,
    pub post: RangeDopplerProduct<T>,
    pub smnc: Option<SmncReport>,
}

/// Receiver chain from the folded frame on: unfold, detect, and (optionally)
/// cancel. Without cancellation `post` equals `pre`.
pub fn process_folded<T: Real>(
    z: &FreqFrame<T>,
    symbols: &SymbolMatrix<T>,
    config: &RadarConfig,
    params: &SmncParams,
    enabled: bool,
) -> Result<ProcessedFrame<T>> {
    let d0 = unfold_full(z, symbols)?;
    let mut pre = range_profiles(&d0, config)?;
    let hits = cfar_detect(&pre.integrated, &params.cfar, config.num_symbols)?;
    pre.detections = extract_targets(&pre, &hits, config);
    if !enabled {
        return Ok(ProcessedFrame {
            post: pre.clone(),
            pre,
            smnc: None,
        });
    }
    let (post, report) = run_smnc(&d0, symbols, config, params)?;
    Ok(ProcessedFrame {
        pre,
        post,
        smnc: Some(report),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedTarget {
    pub range_bin: usize,
    pub range_m: f64,
    /// Peak power per symbol.
    pub power_dbm: f64,
    /// Peak over the local CFAR noise estimate.
    pub snr_db: f64,
}

/// Detections and measured levels of one range profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub detections: Vec<DetectedTarget>,
    /// Peak-relative ISL; `None` without detections or below the measurement floor.
    pub isl_db: Option<f64>,
    /// Mean power per bin and symbol away from detections.
    pub floor_dbm: f64,
    /// Strongest detection over the floor.
    pub peak_snr_db: Option<f64>,
}

impl StageMetrics {
    pub fn measure<T: Real>(product: &RangeDopplerProduct<T>, config: &RadarConfig, guard: usize) -> Result<Self> {
        let bins = product.detected_bins();
        let floor = mean_outside(&product.integrated, &bins, guard)?;
        let peak = bins.iter().map(|&b| product.integrated[b]).fold(f64::NAN, f64::max);
        let isl = if bins.is_empty() {
            None
        } else {
            Some(measure_isl(&product.integrated, &bins, guard)?).filter(|v| v.is_finite())
        };
        Ok(Self {
            detections: product
                .detections
                .iter()
                .map(|e| DetectedTarget {
                    range_bin: e.range_bin,
                    range_m: e.range_m,
                    power_dbm: to_db(e.power / config.num_symbols as f64),
                    snr_db: e.snr_db,
                })
                .collect(),
            isl_db: isl,
            floor_dbm: to_db(floor / config.num_symbols as f64),
            peak_snr_db: (!bins.is_empty()).then(|| to_db(peak / floor)),
        })
    }

    pub fn detected_bins(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.range_bin).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub bin: usize,
    pub range_m: f64,
    pub pre_dbm: f64,
    pub post_dbm: f64,
}

/// Range profiles before and after cancellation, power per symbol in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    pub fn from_products<T: Real>(
        pre: &RangeDopplerProduct<T>,
        post: &RangeDopplerProduct<T>,
        config: &RadarConfig,
    ) -> Self {
        let ns = config.num_symbols as f64;
        let rows = pre
            .integrated
            .iter()
            .zip(&post.integrated)
            .enumerate()
            .map(|(bin, (a, b))| ProfileRow {
                bin,
                range_m: config.bin_to_range_m(bin),
                pre_dbm: to_db(a / ns),
                post_dbm: to_db(b / ns),
            })
            .collect();
        Self { rows }
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "bin,range_m,pre_dbm,post_dbm")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.bin, r.range_m, r.pre_dbm, r.post_dbm)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub isi_warning: bool,
    pub pre: StageMetrics,
    pub post: StageMetrics,
    pub smnc: Option<SmncReport>,
    #[serde(skip)]
    pub profile: ProfileTable,
}

fn evaluate<T: Real>(
    frame: &ProcessedFrame<T>,
    config: &RadarConfig,
    params: &SmncParams,
    trial: usize,
    isi_warning: bool,
    keep_profile: bool,
) -> Result<TrialResult> {
    let guard = params.cfar.guard_cells;
    Ok(TrialResult {
        trial,
        seed: config.rng_seed,
        isi_warning,
        pre: StageMetrics::measure(&frame.pre, config, guard)?,
        post: StageMetrics::measure(&frame.post, config, guard)?,
        smnc: frame.smnc.clone(),
        profile: if keep_profile {
            ProfileTable::from_products(&frame.pre, &frame.post, config)
        } else {
            ProfileTable::default()
        },
    })
}

/// Simulates and processes one trial in double precision.
pub fn run_trial(scenario: &Scenario, trial: usize, keep_profile: bool) -> Result<TrialResult> {
    let cap = simulate::<f64>(scenario, trial, false)?;
    let frame = process_folded(&cap.folded, &cap.symbols, &cap.config, &scenario.smnc, scenario.smnc_enabled())?;
    evaluate(&frame, &cap.config, &scenario.smnc, trial, cap.isi_warning, keep_profile)
}

/// Runs trials `0..n` in parallel; results come back in trial order.
pub fn run_trials(scenario: &Scenario, n: usize) -> Result<Vec<TrialResult>> {
    (0..n).into_par_iter().map(|t| run_trial(scenario, t, t == 0)).collect()
}

/// Processes a recorded capture taken at `B/L` against known symbols.
pub fn ingest<T: Real>(capture: &IqCapture, symbols: &SymbolMatrix<T>, scenario: &Scenario) -> Result<TrialResult> {
    let config = &scenario.radar;
    let rate = config.adc_rate_hz();
    if (capture.sample_rate_hz - rate).abs() > 1e-6 * rate {
        return Err(Error::Config(format!(
            "capture rate {} Hz does not match the scenario ADC rate {rate} Hz",
            capture.sample_rate_hz
        )));
    }
    let z = demodulate_folded(&capture.to_signal::<T>(), config)?;
    let frame = process_folded(&z, symbols, config, &scenario.smnc, scenario.smnc_enabled())?;
    evaluate(&frame, config, &scenario.smnc, 0, false, true)
}

/// Stores a symbol matrix as an IQ capture, column by column.
pub fn symbols_to_capture<T: Real>(symbols: &SymbolMatrix<T>) -> IqCapture {
    let samples = symbols
        .entries()
        .t()
        .iter()
        .map(|z| Complex::new(z.re.as_f64() as f32, z.im.as_f64() as f32))
        .collect();
    IqCapture {
        sample_rate_hz: 0.0,
        center_freq_hz: 0.0,
        samples,
    }
}

/// Inverse of [`symbols_to_capture`] for an `Nc x Ns` frame.
pub fn symbols_from_capture<T: Real>(capture: &IqCapture, config: &RadarConfig) -> Result<SymbolMatrix<T>> {
    let (nc, ns) = (config.num_subcarriers, config.num_symbols);
    if capture.samples.len() != nc * ns {
        return Err(Error::Shape {
            what: "symbols in file vs Nc*Ns",
            expected: nc * ns,
            actual: capture.samples.len(),
        });
    }
    let entries = ndarray::Array2::from_shape_fn((nc, ns), |(n, q)| {
        let z = capture.samples[q * nc + n];
        Complex::new(T::of(z.re as f64), T::of(z.im as f64))
    });
    Ok(SymbolMatrix::from_entries(entries, Constellation::Qpsk))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub snr_before_db: Option<f64>,
    pub snr_after_db: Option<f64>,
    pub strong_target_snr_db: Option<f64>,
    /// Expected pre-cancellation ISL, the negated strong-target SNR.
    pub isl_pre_db: Option<f64>,
    pub folded_floor_dbm: f64,
}

impl Predictions {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        let p = |stage| predict_snr(&scenario.targets, &scenario.radar, stage).ok();
        let strong = p(Stage::StrongTargetApprox);
        Self {
            snr_before_db: p(Stage::BeforeSmnc),
            snr_after_db: p(Stage::AfterSmnc),
            strong_target_snr_db: strong,
            isl_pre_db: strong.map(|v| -v),
            folded_floor_dbm: to_db(scenario.radar.folded_noise_mw()),
        }
    }
}

/// Trial averages. dB quantities are averaged in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub isl_pre_db: Option<f64>,
    pub isl_post_db: Option<f64>,
    pub floor_pre_dbm: f64,
    pub floor_post_dbm: f64,
    pub snr_pre_db: Option<f64>,
    pub snr_post_db: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub converged_trials: usize,
}

/// Mean of `10^(x/10)` over the present values, back in dB.
pub fn db_mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + from_db(v), n + 1));
    (n > 0).then(|| to_db(sum / n as f64))
}

impl Summary {
    pub fn of(trials: &[TrialResult]) -> Self {
        let reports: Vec<&SmncReport> = trials.iter().filter_map(|t| t.smnc.as_ref()).collect();
        Self {
            trials: trials.len(),
            isl_pre_db: db_mean(trials.iter().map(|t| t.pre.isl_db)),
            isl_post_db: db_mean(trials.iter().map(|t| t.post.isl_db)),
            floor_pre_dbm: db_mean(trials.iter().map(|t| Some(t.pre.floor_dbm))).unwrap_or(f64::NAN),
            floor_post_dbm: db_mean(trials.iter().map(|t| Some(t.post.floor_dbm))).unwrap_or(f64::NAN),
            snr_pre_db: db_mean(trials.iter().map(|t| t.pre.peak_snr_db)),
            snr_post_db: db_mean(trials.iter().map(|t| t.post.peak_snr_db)),
            mean_iterations: (!reports.is_empty())
                .then(|| reports.iter().map(|r| r.iterations as f64).sum::<f64>() / reports.len() as f64),
            converged_trials: reports.iter().filter(|r| r.converged).count(),
        }
    }
}

/// Everything a run produces. The report embeds the resolved scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle {
    pub scenario: ScenarioFile,
    pub radar: RadarConfig,
    pub targets: Vec<Target>,
    pub predictions: Predictions,
    pub summary: Summary,
    pub trials: Vec<TrialResult>,
    /// Profiles of trial 0.
    #[serde(skip)]
    pub profile: ProfileTable,
    /// Decimated receive signal of trial 0, when requested.
    #[serde(skip)]
    pub capture: Option<IqCapture>,
}

impl ResultBundle {
    pub fn write_report(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        Ok(())
    }
}

pub fn run_pipeline(scenario: &Scenario) -> Result<ResultBundle> {
    let trials = run_trials(scenario, scenario.trials())?;
    let capture = if scenario.wants(crate::scenario::Output::Iq) {
        let cap = simulate::<f64>(scenario, 0, true)?;
        cap.rx_sub
            .as_ref()
            .map(|s| IqCapture::from_signal(s, scenario.radar.carrier_freq_hz))
    } else {
        None
    };
    Ok(ResultBundle {
        scenario: scenario.file.clone(),
        radar: scenario.radar.clone(),
        targets: scenario.targets.targets.clone(),
        predictions: Predictions::for_scenario(scenario),
        summary: Summary::of(&trials),
        profile: trials[0].profile.clone(),
        trials,
        capture,
    })
}
