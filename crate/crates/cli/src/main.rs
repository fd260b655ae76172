//! `snsradar`: simulate, sweep and ingest sub-sampled OFDM radar frames.

mod args;
mod failure;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use snsradar::analysis::{sweep_doppler, sweep_l};
use snsradar::iq::{read_iq, write_iq, IqCapture};
use snsradar::pipeline::{ingest, run_pipeline, symbols_from_capture, symbols_to_capture, trial_config};
use snsradar::scenario::{load_scenario, Output, Scenario};
use snsradar::waveform::{generate_symbols, SymbolMatrix};

use args::{Cli, Command, Overrides, SymbolSource};
use failure::Failure;

const DEFAULT_RATIOS: [usize; 6] = [1, 2, 4, 8, 16, 32];
const DEFAULT_DOPPLER: [f64; 5] = [0.0, 0.05, 0.1, 0.15, 0.2];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::usage(e.to_string()).report(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, overrides } => run(&scenario, &overrides),
        Command::SweepL {
            scenario,
            ratios,
            overrides,
        } => {
            let s = resolve(&scenario, &overrides)?;
            let ratios = pick(ratios, &s.file.sweep.ratios, &DEFAULT_RATIOS);
            let table = sweep_l(&s, &ratios)?;
            let dir = overrides.out_dir()?;
            output::write_json(&dir.join("sweep_l.json"), &output::SweepReport::new(&s, &table))?;
            output::write_with(&dir.join("sweep_l.csv"), |w| output::sweep_l_csv(&table, w))?;
            output::print_checks(&table.checks);
            Ok(())
        }
        Command::SweepDoppler {
            scenario,
            ratios,
            doppler,
            overrides,
        } => {
            let s = resolve(&scenario, &overrides)?;
            let ratios = pick(ratios, &s.file.sweep.ratios, &DEFAULT_RATIOS[..5]);
            let doppler = pick(doppler, &s.file.sweep.normalized_doppler, &DEFAULT_DOPPLER);
            let table = sweep_doppler(&s, &doppler, &ratios)?;
            let dir = overrides.out_dir()?;
            output::write_json(&dir.join("sweep_doppler.json"), &output::SweepReport::new(&s, &table))?;
            output::write_with(&dir.join("sweep_doppler.csv"), |w| output::sweep_doppler_csv(&table, w))?;
            output::print_checks(&table.checks);
            Ok(())
        }
        Command::Ingest {
            capture,
            symbols,
            scenario,
            overrides,
        } => {
            let s = resolve(&scenario, &overrides)?;
            let iq = read_iq(&capture)?;
            let symbols = load_symbols(&symbols, &s)?;
            let trial = ingest(&iq, &symbols, &s)?;
            let dir = overrides.out_dir()?;
            output::write_with(&dir.join("profile.csv"), |w| trial.profile.write_csv(w))?;
            output::write_json(&dir.join("report.json"), &output::IngestReport::new(&s, &trial))?;
            println!("{}", output::trial_line(&trial));
            Ok(())
        }
        Command::Validate { scenario, overrides } => {
            let s = resolve(&scenario, &overrides)?;
            print!("{}", s.to_toml()?);
            Ok(())
        }
    }
}

fn run(path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let s = resolve(path, overrides)?;
    let bundle = run_pipeline(&s)?;
    let dir = overrides.out_dir()?;
    if s.wants(Output::Profile) {
        output::write_with(&dir.join("profile.csv"), |w| bundle.profile.write_csv(w))?;
    }
    if s.wants(Output::Report) {
        output::write_with(&dir.join("report.json"), |w| {
            bundle.write_report(w).map_err(std::io::Error::other)
        })?;
    }
    if let Some(capture) = &bundle.capture {
        write_iq(dir.join("rx.iq"), capture)?;
        let symbols = generate_symbols::<f64>(&trial_config(&s, 0), s.constellation())?;
        write_iq(dir.join("symbols.iq"), &symbols_to_capture(&symbols))?;
    }
    for trial in &bundle.trials {
        println!("{}", output::trial_line(trial));
    }
    Ok(())
}

/// Flags override the file, the file overrides built-in defaults.
fn resolve(path: &Path, overrides: &Overrides) -> Result<Scenario, Failure> {
    let mut file = load_scenario(path)?.file;
    overrides.apply(&mut file);
    Ok(file.resolve()?)
}

fn pick<T: Clone>(flag: Option<Vec<T>>, file: &[T], default: &[T]) -> Vec<T> {
    match flag {
        Some(v) => v,
        None if !file.is_empty() => file.to_vec(),
        None => default.to_vec(),
    }
}

fn load_symbols(source: &SymbolSource, s: &Scenario) -> Result<SymbolMatrix<f64>, Failure> {
    match source {
        SymbolSource::Seed(seed) => Ok(generate_symbols(
            &s.radar.clone().with_seed(*seed),
            s.constellation(),
        )?),
        SymbolSource::File(path) => {
            let cap: IqCapture = read_iq(path)?;
            Ok(symbols_from_capture(&cap, &s.radar)?)
        }
    }
}
