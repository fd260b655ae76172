use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Waveform and sampling constants of one radar frame.
///
/// `noise_power_mw` is the complex noise variance of a single frequency bin
/// at the Nyquist rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    pub bandwidth_hz: f64,
    pub cp_duration_s: f64,
    pub carrier_freq_hz: f64,
    pub sub_sampling_ratio: usize,
    pub noise_power_mw: f64,
    pub rng_seed: u64,
}

impl RadarConfig {
    /// 2048 subcarriers over 1 GHz with a quarter-symbol cyclic prefix at 77 GHz.
    pub fn automotive_1ghz(sub_sampling_ratio: usize) -> Self {
        Self {
            num_subcarriers: 2048,
            num_symbols: 1,
            bandwidth_hz: 1.0e9,
            cp_duration_s: 0.512e-6,
            carrier_freq_hz: 77.0e9,
            sub_sampling_ratio,
            noise_power_mw: 1.0e-8,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_ratio(mut self, l: usize) -> Self {
        self.sub_sampling_ratio = l;
        self
    }

    pub fn with_noise_mw(mut self, noise: f64) -> Self {
        self.noise_power_mw = noise;
        self
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_subcarriers as f64
    }

    /// Symbol duration including the cyclic prefix.
    pub fn symbol_duration_s(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz() + self.cp_duration_s
    }

    /// Cyclic prefix length in Nyquist-rate samples.
    pub fn cp_samples(&self) -> Result<usize> {
        let exact = self.cp_duration_s * self.bandwidth_hz;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-9 || rounded < 0.0 {
            return Err(Error::Config(format!(
                "cyclic prefix spans {exact} samples; Tcp*B must be an integer"
            )));
        }
        Ok(rounded as usize)
    }

    pub fn symbol_samples(&self) -> Result<usize> {
        Ok(self.num_subcarriers + self.cp_samples()?)
    }

    /// Rows of the folded frame, `Nc/L`.
    pub fn folded_rows(&self) -> usize {
        self.num_subcarriers / self.sub_sampling_ratio
    }

    pub fn adc_rate_hz(&self) -> f64 {
        self.bandwidth_hz / self.sub_sampling_ratio as f64
    }

    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }

    pub fn bin_to_range_m(&self, bin: usize) -> f64 {
        bin as f64 * self.range_resolution_m()
    }

    /// Folded noise variance per bin, `sigma^2 L`.
    pub fn folded_noise_mw(&self) -> f64 {
        self.noise_power_mw * self.sub_sampling_ratio as f64
    }

    /// Checks every structural invariant and reports all violations at once.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let nc = self.num_subcarriers;
        let l = self.sub_sampling_ratio;
        if nc == 0 {
            out.push(("num_subcarriers", "must be positive".to_string()));
        }
        if self.num_symbols == 0 {
            out.push(("num_symbols", "must be positive".to_string()));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            out.push(("bandwidth_hz", "must be positive and finite".to_string()));
        }
        if !(self.cp_duration_s >= 0.0 && self.cp_duration_s.is_finite()) {
            out.push(("cp_duration_s", "must be non-negative and finite".to_string()));
        }
        if !(self.carrier_freq_hz > 0.0 && self.carrier_freq_hz.is_finite()) {
            out.push(("carrier_freq_hz", "must be positive and finite".to_string()));
        }
        if !(self.noise_power_mw >= 0.0 && self.noise_power_mw.is_finite()) {
            out.push(("noise_power_mw", "must be non-negative and finite".to_string()));
        }
        if l == 0 {
            out.push(("sub_sampling_ratio", "must be positive".to_string()));
        } else if nc > 0 && !nc.is_multiple_of(l) {
            out.push((
                "sub_sampling_ratio",
                format!("L must divide Nc (L={l}, Nc={nc})"),
            ));
        }
        if self.bandwidth_hz > 0.0 && self.cp_duration_s >= 0.0 {
            match self.cp_samples() {
                Err(e) => out.push(("cp_duration_s", e.to_string())),
                Ok(ncp) if l > 0 && ncp % l != 0 => out.push((
                    "sub_sampling_ratio",
                    format!("L must divide the cyclic prefix length (L={l}, Ncp={ncp})"),
                )),
                Ok(_) => {}
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            let msg = v
                .iter()
                .map(|(field, why)| format!("{field}: {why}"))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::Config(msg))
        }
    }
}
