//! Experiment configuration files (TOML).
//!
//! All frequencies are in units of the coupling `g`, times in `1/g`. Complex
//! amplitudes are written in polar form `[modulus, phase]`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tavis_core::analytic::collapse_revival;
use tavis_core::hamiltonian::SystemParams;
use tavis_core::hilbert::{default_truncation, CoherentSpec, QubitPairState};
use tavis_core::protocols::{ProtocolConfig, SecondPhase};
use tavis_core::C64;

use crate::error::RunError;

/// Largest oscillator or signal photon number accepted by the beam-splitter oracle.
pub const MAX_BEAM_SPLITTER_PHOTONS: f64 = 400.0;
/// Largest mean photon number of a homodyne signal state.
pub const MAX_SIGNAL_PHOTONS: f64 = 4.0;

pub type Polar = [f64; 2];

pub fn polar(z: Polar) -> C64 {
    C64::from_polar(z[0], z[1])
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Overlaps,
    Wigner,
    BellProjection,
    Teleport,
    Swap,
    AsymSweep,
    HomodyneConvergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Overlaps,
        ExperimentKind::Wigner,
        ExperimentKind::BellProjection,
        ExperimentKind::Teleport,
        ExperimentKind::Swap,
        ExperimentKind::AsymSweep,
        ExperimentKind::HomodyneConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Overlaps => "overlaps",
            ExperimentKind::Wigner => "wigner",
            ExperimentKind::BellProjection => "bell-projection",
            ExperimentKind::Teleport => "teleport",
            ExperimentKind::Swap => "swap",
            ExperimentKind::AsymSweep => "asym-sweep",
            ExperimentKind::HomodyneConvergence => "homodyne-convergence",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Overlaps => {
                "branch-field overlaps with the rotating coherent state vs time"
            }
            ExperimentKind::Wigner => {
                "Wigner function and quadrature marginal of the field after one or two cavities"
            }
            ExperimentKind::BellProjection => {
                "two-cavity singlet postselection on Haar-random registers"
            }
            ExperimentKind::Teleport => "teleportation of random qubit states",
            ExperimentKind::Swap => "entanglement swapping for both Bell signs",
            ExperimentKind::AsymSweep => "fidelity and success probability vs coupling asymmetry",
            ExperimentKind::HomodyneConvergence => {
                "beam-splitter photocount statistics vs the quadrature law"
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Relative paths are taken from the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub system: SystemSection,
    pub field: FieldSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register: Option<RegisterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<OverlapsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homodyne: Option<HomodyneSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub delta: f64,
    #[serde(default)]
    pub theta: f64,
    /// Defaults to `8 pi / tau_r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default)]
    pub eps_g: f64,
    #[serde(default)]
    pub eps_delta: f64,
    /// Defaults to `max(200, default_truncation(nbar))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub alpha: Polar,
}

/// Register amplitudes; renormalized when within 1e-3 of unit norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterSection {
    pub c_minus: Polar,
    pub c_one: Polar,
    pub c_plus: Polar,
    pub c_zero: Polar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Defaults to `tau_r / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub tau_f: f64,
    /// Second-cavity phase; solved from the cancellation condition when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_phase: Option<f64>,
    #[serde(default = "default_half_width")]
    pub window_half_width: f64,
}

fn default_half_width() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapsSection {
    /// End of the time axis in units of `tau_r`.
    pub t_max_over_revival: f64,
    pub points: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WignerStage {
    /// Field leaving the first cavity.
    First,
    /// Field leaving the second cavity of the Ramsey sequence.
    Ramsey,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    pub stage: WignerStage,
    pub points: usize,
    #[serde(default)]
    pub frame_angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Upper end of the `eps_g` axis; defaults to `3 / nbar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_g_max: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalState {
    Vacuum,
    Fock(usize),
    Coherent(Polar),
    /// Normalized `|alpha> + |-alpha>`.
    EvenCat(Polar),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomodyneSection {
    pub signals: Vec<SignalState>,
    pub lo_mean_photon_numbers: Vec<f64>,
    #[serde(default)]
    pub lo_phase: f64,
}

/// Parameters derived from a validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub params: SystemParams,
    pub field: CoherentSpec,
    pub tau_r: f64,
    pub tau_c: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configurations always serialize")
    }

    fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, RunError> {
        section.as_ref().ok_or_else(|| {
            RunError::Config(format!(
                "experiment `{}` needs a [{name}] section",
                self.kind.name()
            ))
        })
    }

    pub fn overlaps_section(&self) -> Result<&OverlapsSection, RunError> {
        self.require(&self.overlaps, "overlaps")
    }

    pub fn wigner_section(&self) -> Result<&WignerSection, RunError> {
        self.require(&self.wigner, "wigner")
    }

    pub fn batch_section(&self) -> Result<&BatchSection, RunError> {
        self.require(&self.batch, "batch")
    }

    pub fn sweep_section(&self) -> Result<&SweepSection, RunError> {
        self.require(&self.sweep, "sweep")
    }

    pub fn homodyne_section(&self) -> Result<&HomodyneSection, RunError> {
        self.require(&self.homodyne, "homodyne")
    }

    pub fn register_state(&self) -> Result<QubitPairState, RunError> {
        let r = self.require(&self.register, "register")?;
        let q = QubitPairState::new(
            polar(r.c_minus),
            polar(r.c_one),
            polar(r.c_plus),
            polar(r.c_zero),
        );
        let norm = q.norm_sqr();
        if (norm - 1.0).abs() > 1e-3 {
            return Err(RunError::Config(format!(
                "register norm^2 is {norm}, expected 1"
            )));
        }
        Ok(q.normalized()?)
    }

    /// Checks the schema-level requirements of the kind and the physical
    /// ranges, and derives the cavity parameters.
    pub fn validate(&self) -> Result<Resolved, RunError> {
        let field = CoherentSpec::new(self.field.alpha[0].powi(2), self.field.alpha[1])?;
        let scales = collapse_revival(self.system.delta, field.mean_photon_number)?;
        let s = &self.system;
        let n_max = s
            .n_max
            .unwrap_or_else(|| default_truncation(field.mean_photon_number).max(200));
        let omega = s.omega.unwrap_or(8.0 * PI / scales.revival);
        let params = SystemParams {
            omega,
            delta: s.delta,
            theta: s.theta,
            eps_g: s.eps_g,
            eps_delta: s.eps_delta,
            n_max,
        };
        params.validate()?;
        let resolved = Resolved {
            params,
            field,
            tau_r: scales.revival,
            tau_c: scales.collapse,
        };
        match self.kind {
            ExperimentKind::Overlaps => {
                let o = self.overlaps_section()?;
                self.register_state()?;
                if o.points < 2 || !(o.t_max_over_revival > 0.0) {
                    return Err(RunError::Config(
                        "overlaps need points >= 2 and t_max_over_revival > 0".into(),
                    ));
                }
            }
            ExperimentKind::Wigner => {
                if self.wigner_section()?.points < 3 {
                    return Err(RunError::Config(
                        "a Wigner grid needs at least 3 points per axis".into(),
                    ));
                }
                self.register_state()?;
                self.protocol_config(&resolved)?.validate()?;
            }
            ExperimentKind::BellProjection | ExperimentKind::Teleport => {
                if self.batch_section()?.runs == 0 {
                    return Err(RunError::Config("batch.runs must be positive".into()));
                }
                self.protocol_config(&resolved)?.validate()?;
            }
            ExperimentKind::Swap => {
                self.protocol_config(&resolved)?.validate()?;
            }
            ExperimentKind::AsymSweep => {
                let sw = self.sweep_section()?;
                self.register_state()?;
                if sw.points < 2 {
                    return Err(RunError::Config("sweep.points must be at least 2".into()));
                }
                let eps_max = sw.eps_g_max.unwrap_or(3.0 / field.mean_photon_number);
                resolved
                    .params
                    .clone()
                    .with_asymmetry(eps_max, s.eps_delta)
                    .validate()?;
                self.protocol_config(&resolved)?.validate()?;
            }
            ExperimentKind::HomodyneConvergence => {
                let h = self.homodyne_section()?;
                if h.signals.is_empty() || h.lo_mean_photon_numbers.is_empty() {
                    return Err(RunError::Config(
                        "homodyne needs signals and oscillator photon numbers".into(),
                    ));
                }
                for &lo in &h.lo_mean_photon_numbers {
                    if !(lo > 0.0 && lo <= MAX_BEAM_SPLITTER_PHOTONS) {
                        return Err(RunError::Physics(format!(
                            "oscillator mean photon number {lo} is outside (0, {MAX_BEAM_SPLITTER_PHOTONS}]"
                        )));
                    }
                }
                for signal in &h.signals {
                    let n = signal_mean_photon_number(signal);
                    if !(n <= MAX_SIGNAL_PHOTONS) {
                        return Err(RunError::Physics(format!(
                            "signal mean photon number {n} exceeds {MAX_SIGNAL_PHOTONS}"
                        )));
                    }
                }
            }
        }
        Ok(resolved)
    }

    pub fn protocol_config(&self, resolved: &Resolved) -> Result<ProtocolConfig, RunError> {
        let p = self.protocol.clone().unwrap_or(ProtocolSection {
            tau: None,
            tau_f: 0.0,
            second_phase: None,
            window_half_width: default_half_width(),
        });
        Ok(ProtocolConfig {
            cavity: resolved.params.clone(),
            second_cavity: None,
            field: resolved.field,
            second_mean_photon_number: None,
            second_phase: p.second_phase.map_or(SecondPhase::Auto, SecondPhase::Fixed),
            tau: p.tau.unwrap_or(resolved.tau_r / 4.0),
            tau_f: p.tau_f,
            window_half_width: p.window_half_width,
        })
    }
}

pub fn signal_mean_photon_number(signal: &SignalState) -> f64 {
    match signal {
        SignalState::Vacuum => 0.0,
        SignalState::Fock(n) => *n as f64,
        SignalState::Coherent(a) => a[0] * a[0],
        SignalState::EvenCat(a) => {
            let x = a[0] * a[0];
            x * (1.0 - (-2.0 * x).exp()) / (1.0 + (-2.0 * x).exp())
        }
    }
}
