//! Run configuration. Keys follow the protocol and finite-size parameter
//! names (`modulation_variance = 20`, `total_pulse = 1e8`, ...); every
//! section is optional and falls back to the fiber reference defaults.

use serde::{Deserialize, Serialize};

use crate::channels::ProtocolParams;
use crate::error::{invalid, Result};
use crate::fading::{CodePolicy, FadingConfig};
use crate::finite_size::FiniteSizeParams;
use crate::gkp::Ancilla;
use crate::scenario::{Compensation, LinkSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Fiber,
    FreeSpace,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub code: CodeSection,
    /// Absent means asymptotic rates.
    pub finite_size: Option<FiniteSizeSection>,
    pub fading: Option<FadingSection>,
    pub sweep: Option<SweepSection>,
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    /// nm
    pub signal_wavelength: f64,
    /// σ_A² = σ_B², SNU.
    pub modulation_variance: f64,
    pub reconciliation_efficiency: f64,
    /// dB/km
    pub smf_attenuation_coefficient: f64,
    pub thermal_noise_photon_mean: f64,
    /// km
    pub alice_distance: f64,
    /// km
    pub bob_distance: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            signal_wavelength: 1550.0,
            modulation_variance: 20.0,
            reconciliation_efficiency: 1.0,
            smf_attenuation_coefficient: 0.2,
            thermal_noise_photon_mean: 0.0,
            alice_distance: 1.0,
            bob_distance: 5.0,
        }
    }
}

impl ProtocolSection {
    pub fn params(&self) -> Result<ProtocolParams> {
        let p = ProtocolParams {
            sigma2_a: self.modulation_variance,
            sigma2_b: self.modulation_variance,
            n_bar: self.thermal_noise_photon_mean,
            beta0: self.reconciliation_efficiency,
            alpha0: self.smf_attenuation_coefficient,
            wavelength_nm: self.signal_wavelength,
            ..ProtocolParams::default()
        }
        .with_distances(self.alice_distance, self.bob_distance)?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeSection {
    pub compensation: Compensation,
    /// GKP ancilla squeezing, dB. `inf` selects the ideal ancilla.
    pub gkp_squeezing: f64,
    pub layers: u32,
    /// TMSV squeezing for teleportation, dB.
    pub tmsv_squeezing: f64,
    /// Fixed TMS squeezing `r` on fading links. Absent means re-optimized per transmittance.
    pub fixed_squeezing: Option<f64>,
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            compensation: Compensation::Gkp,
            gkp_squeezing: 20.0,
            layers: 1,
            tmsv_squeezing: 20.0,
            fixed_squeezing: None,
        }
    }
}

impl CodeSection {
    pub fn ancilla(&self) -> Ancilla {
        if self.gkp_squeezing == f64::INFINITY {
            Ancilla::Ideal
        } else {
            Ancilla::finite(self.gkp_squeezing)
        }
    }

    pub fn link(&self) -> Result<LinkSpec> {
        let link = LinkSpec {
            compensation: self.compensation,
            ancilla: self.ancilla(),
            layers: self.layers,
            tmsv_squeezing_db: self.tmsv_squeezing,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn policy(&self) -> CodePolicy {
        self.fixed_squeezing.map_or(CodePolicy::Dynamic, CodePolicy::Fixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiniteSizeSection {
    pub total_pulse: f64,
    /// Absent means a tenth of `total_pulse`.
    pub pe_signals: Option<f64>,
    pub digitalization: u32,
    pub ec_success_probability: f64,
    pub epsilon_correctness: f64,
    pub smoothing_parameter: f64,
    pub hash_parameter: f64,
    pub pe_error_probability: f64,
}

impl Default for FiniteSizeSection {
    fn default() -> Self {
        let d = FiniteSizeParams::default();
        Self {
            total_pulse: d.n,
            pe_signals: None,
            digitalization: d.d,
            ec_success_probability: d.p_ec,
            epsilon_correctness: d.eps_cor,
            smoothing_parameter: d.eps_s,
            hash_parameter: d.eps_h,
            pe_error_probability: d.eps_pe,
        }
    }
}

impl FiniteSizeSection {
    pub fn params(&self) -> Result<FiniteSizeParams> {
        let fs = FiniteSizeParams {
            n: self.total_pulse,
            m_pe: self.pe_signals.unwrap_or(0.1 * self.total_pulse),
            d: self.digitalization,
            p_ec: self.ec_success_probability,
            eps_cor: self.epsilon_correctness,
            eps_s: self.smoothing_parameter,
            eps_h: self.hash_parameter,
            eps_pe: self.pe_error_probability,
        };
        fs.validate()?;
        Ok(fs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingPreset {
    FittedWideAperture,
    FittedNarrowAperture,
}

/// Fading law parameters. A preset supplies fitted values; explicit keys override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSection {
    pub preset: Option<FadingPreset>,
    pub tau0: Option<f64>,
    pub gamma0: Option<f64>,
    /// m
    pub r0: Option<f64>,
    /// m²
    pub sigma_bw2: Option<f64>,
    /// m
    pub aperture_radius: Option<f64>,
    /// Number of density samples emitted by `fading`.
    pub pdf_points: Option<usize>,
}

impl FadingSection {
    pub fn config(&self) -> Result<FadingConfig> {
        let base = match self.preset {
            Some(FadingPreset::FittedWideAperture) => FadingConfig::fitted_wide_aperture(),
            Some(FadingPreset::FittedNarrowAperture) => FadingConfig::fitted_narrow_aperture(),
            None => {
                if self.tau0.is_none() || self.gamma0.is_none() || self.r0.is_none() || self.sigma_bw2.is_none() {
                    return invalid("fading needs a preset or all of tau0, gamma0, r0, sigma_bw2");
                }
                FadingConfig::fitted_wide_aperture()
            }
        };
        let cfg = FadingConfig {
            tau0: self.tau0.unwrap_or(base.tau0),
            gamma0: self.gamma0.unwrap_or(base.gamma0),
            r0: self.r0.unwrap_or(base.r0),
            sigma_bw2: self.sigma_bw2.unwrap_or(base.sigma_bw2),
            a_r: self.aperture_radius.unwrap_or(base.a_r),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    AliceDistance,
    BobDistance,
    Layers,
    TotalPulse,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::AliceDistance => "alice_distance",
            Axis::BobDistance => "bob_distance",
            Axis::Layers => "layers",
            Axis::TotalPulse => "total_pulse",
        }
    }
}

/// Inclusive range `start, start + step, ..., ≤ stop`. `start > stop` is an empty sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSection {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return invalid("sweep bounds must be finite");
        }
        if self.start > self.stop {
            return Ok(Vec::new());
        }
        if !(self.step > 0.0) {
            return invalid("sweep step must be positive");
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if n > 1_000_000 {
            return invalid("sweep has more than 10^6 points");
        }
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// Root-finding mode for `rate`: report the max secure distance along `along`
/// for every sweep point, searching `[0, limit]` km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub along: Axis,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<std::path::PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| crate::Error::InvalidInput(format!("config: {}", e.message())))
    }

    pub fn finite_size(&self) -> Result<Option<FiniteSizeParams>> {
        self.finite_size.as_ref().map(FiniteSizeSection::params).transpose()
    }

    /// Checks cross-section consistency.
    pub fn validate(&self) -> Result<()> {
        self.protocol.params()?;
        self.code.link()?;
        self.finite_size()?;
        match (self.scenario, &self.fading) {
            (Scenario::FreeSpace, None) => return invalid("free_space scenario needs a [fading] section"),
            (Scenario::Fiber, Some(_)) => return invalid("[fading] is only used by the free_space scenario"),
            (Scenario::FreeSpace, Some(f)) => {
                f.config()?;
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            s.points()?;
            if s.axis == Axis::TotalPulse && self.finite_size.is_none() {
                return invalid("a total_pulse sweep needs a [finite_size] section");
            }
        }
        if let Some(s) = &self.search {
            if !matches!(s.along, Axis::AliceDistance | Axis::BobDistance) {
                return invalid("search.along must be alice_distance or bob_distance");
            }
            if !(s.limit > 0.0 && s.limit.is_finite()) {
                return invalid("search.limit must be a positive distance");
            }
            if self.sweep.as_ref().is_some_and(|w| w.axis == s.along) {
                return invalid("sweep axis and search axis must differ");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_names_parse() {
        let c = RunConfig::from_toml(
            r#"
            [protocol]
            modulation_variance = 20
            alice_distance = 3
            [finite_size]
            total_pulse = 1e8
            [sweep]
            axis = "bob_distance"
            start = 0
            stop = 1
            step = 0.25
            "#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.finite_size().unwrap().unwrap(), FiniteSizeParams::default());
        assert_eq!(c.sweep.unwrap().points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.protocol.params().unwrap().l_a, 3.0);
    }

    #[test]
    fn infinite_squeezing_is_ideal() {
        let c = RunConfig::from_toml("[code]\ngkp_squeezing = inf").unwrap();
        assert_eq!(c.code.ancilla(), Ancilla::Ideal);
        assert_eq!(RunConfig::default().code.ancilla(), Ancilla::finite(20.0));
        assert!(RunConfig::from_toml("[code]\ngkp_squeezing = -3").and_then(|c| c.validate()).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("[protocol]\nmodulation_varience = 20").is_err());
        let bad = [
            "scenario = \"free_space\"",
            "[code]\nlayers = 0",
            "[protocol]\nalice_distance = -1",
            "[sweep]\naxis = \"total_pulse\"\nstart = 1e8\nstop = 1e9\nstep = 1e8",
            "[search]\nalong = \"layers\"\nlimit = 10",
            "[fading]\ntau0 = 0.9",
        ];
        for text in bad {
            assert!(RunConfig::from_toml(text).and_then(|c| c.validate()).is_err(), "{text}");
        }
    }

    #[test]
    fn empty_and_degenerate_sweeps() {
        let s = SweepSection { axis: Axis::Layers, start: 3.0, stop: 1.0, step: 1.0 };
        assert!(s.points().unwrap().is_empty());
        let s = SweepSection { axis: Axis::Layers, start: 2.0, stop: 2.0, step: 0.0 };
        assert!(s.points().is_err());
        let s = SweepSection { axis: Axis::BobDistance, start: 0.0, stop: 0.3, step: 0.1 };
        assert_eq!(s.points().unwrap().len(), 4);
    }

    #[test]
    fn fading_presets_and_overrides() {
        let f =
            FadingSection { preset: Some(FadingPreset::FittedNarrowAperture), tau0: Some(0.5), ..Default::default() };
        let c = f.config().unwrap();
        assert_eq!(c.tau0, 0.5);
        assert_eq!(c.gamma0, FadingConfig::fitted_narrow_aperture().gamma0);
    }
}
