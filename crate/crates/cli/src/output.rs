use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use snsradar::analysis::{LawCheck, SweepDopplerTable, SweepLTable};
use snsradar::config::RadarConfig;
use snsradar::pipeline::TrialResult;
use snsradar::scenario::{Scenario, ScenarioFile};

use crate::failure::Failure;

pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let run = || {
        let mut w = BufWriter::new(File::create(path)?);
        f(&mut w)?;
        w.flush()
    };
    run().map_err(|e| Failure::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// Sweep results together with the configuration that produced them.
#[derive(Serialize)]
pub struct SweepReport<'a, T> {
    scenario: &'a ScenarioFile,
    radar: &'a RadarConfig,
    sweep: &'a T,
}

impl<'a, T> SweepReport<'a, T> {
    pub fn new(s: &'a Scenario, sweep: &'a T) -> Self {
        Self {
            scenario: &s.file,
            radar: &s.radar,
            sweep,
        }
    }
}

#[derive(Serialize)]
pub struct IngestReport<'a> {
    scenario: &'a ScenarioFile,
    radar: &'a RadarConfig,
    trial: &'a TrialResult,
}

impl<'a> IngestReport<'a> {
    pub fn new(s: &'a Scenario, trial: &'a TrialResult) -> Self {
        Self {
            scenario: &s.file,
            radar: &s.radar,
            trial,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_l_csv(t: &SweepLTable, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "ratio,trials,isl_pre_db,isl_post_db,floor_pre_dbm,floor_post_dbm,snr_pre_db,snr_post_db,\
         predicted_isl_pre_db,predicted_snr_before_db,predicted_snr_after_db,mean_iterations"
    )?;
    for r in &t.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.ratio,
            r.trials,
            opt(r.isl_pre_db),
            opt(r.isl_post_db),
            r.floor_pre_dbm,
            r.floor_post_dbm,
            opt(r.snr_pre_db),
            opt(r.snr_post_db),
            opt(r.predicted_isl_pre_db),
            opt(r.predicted_snr_before_db),
            opt(r.predicted_snr_after_db),
            opt(r.mean_iterations),
        )?;
    }
    Ok(())
}

pub fn sweep_doppler_csv(t: &SweepDopplerTable, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "ratio,normalized_doppler,trials,snr_post_db,floor_post_dbm,predicted_snr_after_db")?;
    for r in &t.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.ratio,
            r.normalized_doppler,
            r.trials,
            opt(r.snr_post_db),
            r.floor_post_dbm,
            opt(r.predicted_snr_after_db),
        )?;
    }
    Ok(())
}

pub fn print_checks(checks: &[LawCheck]) {
    for c in checks {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("{tag} {}: {}", c.law, c.detail);
    }
}

pub fn trial_line(t: &TrialResult) -> String {
    let db = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    let iterations = t.smnc.as_ref().map_or("-".to_string(), |r| r.iterations.to_string());
    format!(
        "trial {} seed {}: pre bins {:?} isl {} dB, post bins {:?} isl {} dB floor {:.2} dBm, iterations {}",
        t.trial,
        t.seed,
        t.pre.detected_bins(),
        db(t.pre.isl_db),
        t.post.detected_bins(),
        db(t.post.isl_db),
        t.post.floor_dbm,
        iterations,
    )
}
