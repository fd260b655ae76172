//! Closed-form SNR predictions, measured metrics and parameter sweeps.
//!
//! With `P = Σ|α|²` over the targets, `σ²` the per-bin noise power and `L`
//! the sub-sampling ratio:
//!
//! | stage                 | SNR                              |
//! |-----------------------|----------------------------------|
//! | before cancellation   | `Nc·P / ((L-1)·P + σ²L)`         |
//! | strong-target limit   | `Nc / (L-1)`                     |
//! | after cancellation    | `Nc·P / (σ²L)`                   |
//!
//! ISL values are relative to the strongest peak (dB); floors are absolute
//! (dBm).

use serde::{Deserialize, Serialize};

use crate::channel::TargetSet;
use crate::config::RadarConfig;
use crate::detect::mean_outside;
use crate::error::{Error, Result};
use crate::pipeline::{db_mean, run_trials, TrialResult};
use crate::scenario::{ChannelModel, Scenario};
use crate::to_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    BeforeSmnc,
    AfterSmnc,
    StrongTargetApprox,
}

/// Predicted detection SNR in dB. Infinite when the denominator vanishes
/// (no noise and no folding).
pub fn predict_snr(targets: &TargetSet, config: &RadarConfig, stage: Stage) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::Config("SNR prediction needs at least one target".into()));
    }
    let nc = config.num_subcarriers as f64;
    let l = config.sub_sampling_ratio as f64;
    let p: f64 = targets.iter().map(|t| t.power_mw()).sum();
    let noise = config.noise_power_mw * l;
    let ratio = match stage {
        Stage::BeforeSmnc => nc * p / ((l - 1.0) * p + noise),
        Stage::AfterSmnc => nc * p / noise,
        Stage::StrongTargetApprox => {
            if config.sub_sampling_ratio == 1 {
                return Err(Error::Config(
                    "strong-target approximation is undefined without folding (L=1)".into(),
                ));
            }
            nc / (l - 1.0)
        }
    };
    Ok(to_db(ratio))
}

/// Mean power outside `±guard` of every peak, relative to the largest peak,
/// in dB. A floor of exactly zero gives `-inf`, the "below measurement
/// floor" sentinel.
pub fn measure_isl(profile: &[f64], peak_bins: &[usize], guard: usize) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::Measurement("empty profile".into()));
    }
    if peak_bins.is_empty() {
        return Err(Error::Measurement("ISL needs at least one peak".into()));
    }
    if let Some(&b) = peak_bins.iter().find(|&&b| b >= profile.len()) {
        return Err(Error::Measurement(format!(
            "peak bin {b} outside a {}-bin profile",
            profile.len()
        )));
    }
    let peak = peak_bins.iter().map(|&b| profile[b]).fold(f64::MIN, f64::max);
    let floor = mean_outside(profile, peak_bins, guard)?;
    Ok(to_db(floor / peak))
}

/// Mean per-symbol power away from `exclude`, in dBm.
pub fn measure_floor_dbm(profile: &[f64], exclude: &[usize], guard: usize, num_symbols: usize) -> Result<f64> {
    Ok(to_db(mean_outside(profile, exclude, guard)? / num_symbols as f64))
}

/// Power in `bin` over the mean power away from `exclude`, in dB.
pub fn measure_snr_db(profile: &[f64], bin: usize, exclude: &[usize], guard: usize) -> Result<f64> {
    Ok(to_db(profile[bin] / mean_outside(profile, exclude, guard)?))
}

/// Pre-cancellation ISL of a lone strong target, `-10log10(Nc/(L-1))`.
pub fn predicted_isl_db(config: &RadarConfig) -> Option<f64> {
    (config.sub_sampling_ratio > 1).then(|| {
        -to_db(config.num_subcarriers as f64 / (config.sub_sampling_ratio - 1) as f64)
    })
}

/// Allowed deviation of the pre-cancellation ISL from its prediction.
pub const ISL_TOLERANCE_DB: f64 = 1.0;
/// Allowed deviation of the floor step from 3 dB when `L` doubles.
pub const DOUBLING_TOLERANCE_DB: f64 = 0.5;
/// Allowed pre/post difference per bin at `L = 1`.
pub const UNIT_RATIO_TOLERANCE_DB: f64 = 0.2;
/// Allowed deviation of the SNR gap between two ratios from `10log10(L2/L1)`.
pub const OFFSET_TOLERANCE_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub law: String,
    pub passed: bool,
    pub detail: String,
}

impl LawCheck {
    fn new(law: &str, passed: bool, detail: String) -> Self {
        Self {
            law: law.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub ratio: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLRow {
    pub ratio: usize,
    pub trials: usize,
    pub isl_pre_db: Option<f64>,
    pub isl_post_db: Option<f64>,
    pub floor_pre_dbm: f64,
    pub floor_post_dbm: f64,
    pub snr_pre_db: Option<f64>,
    pub snr_post_db: Option<f64>,
    pub predicted_isl_pre_db: Option<f64>,
    pub predicted_snr_before_db: Option<f64>,
    pub predicted_snr_after_db: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Largest per-bin pre/post difference in trial 0.
    pub max_profile_change_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLTable {
    pub rows: Vec<SweepLRow>,
    pub skipped: Vec<Skipped>,
    pub checks: Vec<LawCheck>,
}

fn sweep_row(s: &Scenario, trials: &[TrialResult]) -> SweepLRow {
    let sum = crate::pipeline::Summary::of(trials);
    let p = |stage| predict_snr(&s.targets, &s.radar, stage).ok();
    let max_change = trials[0]
        .profile
        .rows
        .iter()
        .map(|r| (r.pre_dbm - r.post_dbm).abs())
        .fold(0.0, f64::max);
    SweepLRow {
        ratio: s.radar.sub_sampling_ratio,
        trials: trials.len(),
        isl_pre_db: sum.isl_pre_db,
        isl_post_db: sum.isl_post_db,
        floor_pre_dbm: sum.floor_pre_dbm,
        floor_post_dbm: sum.floor_post_dbm,
        snr_pre_db: sum.snr_pre_db,
        snr_post_db: sum.snr_post_db,
        predicted_isl_pre_db: predicted_isl_db(&s.radar),
        predicted_snr_before_db: p(Stage::BeforeSmnc),
        predicted_snr_after_db: p(Stage::AfterSmnc),
        mean_iterations: sum.mean_iterations,
        max_profile_change_db: max_change,
    }
}

/// Monte-Carlo metrics per sub-sampling ratio. Ratios that do not divide
/// `Nc` and `Ncp` are listed in `skipped`.
pub fn sweep_l(scenario: &Scenario, ratios: &[usize]) -> Result<SweepLTable> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &l in ratios {
        let s = match scenario.with_ratio(l) {
            Ok(s) => s,
            Err(e) => {
                skipped.push(Skipped {
                    ratio: l,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let trials = run_trials(&s, s.trials())?;
        rows.push(sweep_row(&s, &trials));
    }
    let checks = l_sweep_checks(&rows);
    Ok(SweepLTable { rows, skipped, checks })
}

fn l_sweep_checks(rows: &[SweepLRow]) -> Vec<LawCheck> {
    let mut out = Vec::new();
    for r in rows {
        if let (Some(m), Some(p)) = (r.isl_pre_db, r.predicted_isl_pre_db) {
            out.push(LawCheck::new(
                "pre-cancellation ISL follows -10log10(Nc/(L-1))",
                (m - p).abs() <= ISL_TOLERANCE_DB,
                format!("L={}: measured {m:.2} dB, predicted {p:.2} dB", r.ratio),
            ));
        }
        if r.ratio == 1 {
            out.push(LawCheck::new(
                "no change from cancellation at L=1",
                r.max_profile_change_db <= UNIT_RATIO_TOLERANCE_DB,
                format!("largest per-bin change {:.3} dB", r.max_profile_change_db),
            ));
        }
    }
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.ratio == 2 * a.ratio {
            let step = b.floor_post_dbm - a.floor_post_dbm;
            out.push(LawCheck::new(
                "post-cancellation floor rises 3 dB per doubling of L",
                (step - to_db(2.0)).abs() <= DOUBLING_TOLERANCE_DB,
                format!("L={}→{}: {step:.2} dB", a.ratio, b.ratio),
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerRow {
    pub ratio: usize,
    pub normalized_doppler: f64,
    pub trials: usize,
    pub snr_post_db: Option<f64>,
    pub floor_post_dbm: f64,
    pub predicted_snr_after_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDopplerTable {
    pub rows: Vec<DopplerRow>,
    pub skipped: Vec<Skipped>,
    pub checks: Vec<LawCheck>,
}

/// Post-cancellation SNR over a (ratio, normalized Doppler) grid. Every
/// target gets the grid point's Doppler; the time-domain channel is always
/// used so intra-symbol Doppler is modelled. Rows are ordered by ratio,
/// then Doppler.
pub fn sweep_doppler(scenario: &Scenario, dopplers: &[f64], ratios: &[usize]) -> Result<SweepDopplerTable> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &l in ratios {
        let mut file = scenario.file.clone();
        file.radar.sub_sampling_ratio = l;
        file.channel_model = ChannelModel::Time;
        let mut line = Vec::new();
        for &nu in dopplers {
            let mut f = file.clone();
            for t in &mut f.targets {
                t.velocity_mps = None;
                t.normalized_doppler = Some(nu);
            }
            match f.resolve() {
                Ok(s) => {
                    let trials = run_trials(&s, s.trials())?;
                    let sum = crate::pipeline::Summary::of(&trials);
                    line.push(DopplerRow {
                        ratio: l,
                        normalized_doppler: nu,
                        trials: trials.len(),
                        snr_post_db: sum.snr_post_db,
                        floor_post_dbm: sum.floor_post_dbm,
                        predicted_snr_after_db: predict_snr(&s.targets, &s.radar, Stage::AfterSmnc).ok(),
                    });
                }
                Err(e) => {
                    skipped.push(Skipped {
                        ratio: l,
                        reason: e.to_string(),
                    });
                    line.clear();
                    break;
                }
            }
        }
        rows.extend(line);
    }
    let checks = doppler_checks(&rows);
    Ok(SweepDopplerTable { rows, skipped, checks })
}

fn doppler_checks(rows: &[DopplerRow]) -> Vec<LawCheck> {
    let mut out = Vec::new();
    let mut ratios: Vec<usize> = rows.iter().map(|r| r.ratio).collect();
    ratios.dedup();
    for &l in &ratios {
        let mut line: Vec<&DopplerRow> = rows.iter().filter(|r| r.ratio == l).collect();
        line.sort_by(|a, b| a.normalized_doppler.total_cmp(&b.normalized_doppler));
        let snr: Vec<f64> = line.iter().map(|r| r.snr_post_db.unwrap_or(f64::NEG_INFINITY)).collect();
        let ok = snr.windows(2).all(|w| w[1] <= w[0]);
        out.push(LawCheck::new(
            "post-cancellation SNR does not increase with Doppler",
            ok,
            format!(
                "L={l}: {}",
                snr.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
            ),
        ));
    }
    let at_zero: Vec<&DopplerRow> = rows.iter().filter(|r| r.normalized_doppler == 0.0).collect();
    for pair in at_zero.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if let (Some(sa), Some(sb)) = (a.snr_post_db, b.snr_post_db) {
            let want = to_db(b.ratio as f64 / a.ratio as f64);
            let gap = sa - sb;
            out.push(LawCheck::new(
                "SNR gap between ratios is 10log10(L2/L1) at zero Doppler",
                (gap - want).abs() <= OFFSET_TOLERANCE_DB,
                format!("L={}→{}: {gap:.2} dB, expected {want:.2} dB", a.ratio, b.ratio),
            ));
        }
    }
    out
}

/// Mean of a dB quantity over trials, averaged in linear units.
pub fn mean_db(values: &[f64]) -> Option<f64> {
    db_mean(values.iter().map(|v| Some(*v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Target;
    use num_complex::Complex;

    fn cfg(nc: usize, l: usize, noise: f64) -> RadarConfig {
        RadarConfig {
            num_subcarriers: nc,
            num_symbols: 1,
            bandwidth_hz: nc as f64 * 1e6,
            cp_duration_s: 0.25e-6,
            carrier_freq_hz: 77e9,
            sub_sampling_ratio: l,
            noise_power_mw: noise,
            rng_seed: 0,
        }
    }

    fn unit_target(c: &RadarConfig) -> TargetSet {
        TargetSet::new(vec![Target::on_bin(1, Complex::new(1.0, 0.0), c)])
    }

    #[test]
    fn before_cancellation_small_case() {
        let c = cfg(8, 2, 0.01);
        let v = predict_snr(&unit_target(&c), &c, Stage::BeforeSmnc).unwrap();
        assert!((v - 8.94489815230026).abs() < 1e-9, "{v}");
    }

    #[test]
    fn strong_target_limit() {
        let c = RadarConfig::automotive_1ghz(8);
        let v = predict_snr(&unit_target(&c), &c, Stage::StrongTargetApprox).unwrap();
        assert!((v - 24.662319122895365).abs() < 1e-9, "{v}");
        assert!((v - 24.66).abs() < 0.005);
        let c1 = RadarConfig::automotive_1ghz(1);
        assert!(predict_snr(&unit_target(&c1), &c1, Stage::StrongTargetApprox).is_err());
    }

    #[test]
    fn stages_agree_without_folding() {
        let c = cfg(64, 1, 0.1);
        let t = unit_target(&c);
        let before = predict_snr(&t, &c, Stage::BeforeSmnc).unwrap();
        let after = predict_snr(&t, &c, Stage::AfterSmnc).unwrap();
        assert_eq!(before, after);
        assert!((after - to_db(64.0 / 0.1)).abs() < 1e-12);
    }

    #[test]
    fn prediction_needs_targets() {
        let c = cfg(64, 2, 0.1);
        assert!(predict_snr(&TargetSet::default(), &c, Stage::AfterSmnc).is_err());
    }

    #[test]
    fn predicted_isl_at_l32() {
        let c = RadarConfig::automotive_1ghz(32);
        let v = predicted_isl_db(&c).unwrap();
        assert!((v + 18.199682584695204).abs() < 1e-9);
        assert_eq!(predicted_isl_db(&RadarConfig::automotive_1ghz(1)), None);
    }

    #[test]
    fn impulse_isl_is_below_floor() {
        let mut p = vec![0.0; 64];
        p[10] = 1.0;
        assert_eq!(measure_isl(&p, &[10], 2).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn isl_of_flat_floor() {
        let mut p = vec![0.01; 64];
        p[10] = 1.0;
        p[11] = 0.5;
        assert!((measure_isl(&p, &[10], 2).unwrap() + 20.0).abs() < 1e-12);
    }

    #[test]
    fn isl_errors() {
        assert!(measure_isl(&[], &[0], 1).is_err());
        assert!(measure_isl(&[1.0; 8], &[], 1).is_err());
        assert!(measure_isl(&[1.0; 8], &[3], 4).is_err());
        assert!(measure_isl(&[1.0; 8], &[9], 1).is_err());
    }

    #[test]
    fn floor_and_snr() {
        let mut p = vec![2.0; 32];
        p[5] = 200.0;
        assert!((measure_floor_dbm(&p, &[5], 1, 2).unwrap()).abs() < 1e-12);
        assert!((measure_snr_db(&p, 5, &[5], 1).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_check_flags_deviation() {
        let row = |ratio, floor| SweepLRow {
            ratio,
            trials: 1,
            isl_pre_db: None,
            isl_post_db: None,
            floor_pre_dbm: floor,
            floor_post_dbm: floor,
            snr_pre_db: None,
            snr_post_db: None,
            predicted_isl_pre_db: None,
            predicted_snr_before_db: None,
            predicted_snr_after_db: None,
            mean_iterations: None,
            max_profile_change_db: 0.0,
        };
        let checks = l_sweep_checks(&[row(2, -50.0), row(4, -47.0), row(8, -40.0)]);
        let passed: Vec<bool> = checks.iter().map(|c| c.passed).collect();
        assert_eq!(passed, vec![true, false]);
    }

    #[test]
    fn doppler_checks_monotone_and_offset() {
        let row = |ratio, nu, snr| DopplerRow {
            ratio,
            normalized_doppler: nu,
            trials: 1,
            snr_post_db: Some(snr),
            floor_post_dbm: 0.0,
            predicted_snr_after_db: None,
        };
        let rows = vec![
            row(1, 0.0, 60.0),
            row(1, 0.1, 58.0),
            row(2, 0.0, 57.0),
            row(2, 0.1, 57.5),
        ];
        let checks = doppler_checks(&rows);
        assert_eq!(checks.len(), 3);
        assert!(checks[0].passed);
        assert!(!checks[1].passed);
        assert!(checks[2].passed);
    }
}
