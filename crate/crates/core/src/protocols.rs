//! Two-cavity postselection of the singlet `|Psi->_{AB}` and the
//! teleportation and swapping protocols built on it.
//!
//! The pipeline is exact throughout: each cavity stage composes the register
//! with a coherent field, evolves with the block propagator and projects the
//! field on the freely rotated coherent state. Spectator qubits that never
//! enter a cavity are carried as a register index: amplitude `s` of an
//! [`ExtendedRegisterState`] is the AB state paired with spectator basis
//! vector `s`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::analytic::{self, collapse_revival};
use crate::hamiltonian::{Propagator, SystemParams};
use crate::hilbert::{
    default_truncation, make_coherent, product_basis_invert, Branch, CoherentSpec, FockVector,
    QubitPairState, TripartiteState,
};
use crate::measurement::{window_accept, FieldMixture};
use crate::{Error, Result, C64};

/// Smallest stage probability accepted as a real outcome.
pub const DEGENERATE_PROBABILITY: f64 = 1e-12;

/// Initial phase of the second cavity's field, relative to the first.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum SecondPhase {
    /// Solve the cancellation condition.
    Auto,
    /// Use the given `varphi`.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub cavity: SystemParams,
    /// A distinct second cavity; the first is reused when absent.
    #[serde(default)]
    pub second_cavity: Option<SystemParams>,
    /// Coherent field of the first cavity.
    pub field: CoherentSpec,
    /// Mean photon number of the second field; that of the first when absent.
    #[serde(default)]
    pub second_mean_photon_number: Option<f64>,
    pub second_phase: SecondPhase,
    /// Interaction time in each cavity.
    pub tau: f64,
    /// Free flight between the cavities.
    #[serde(default)]
    pub tau_f: f64,
    /// Homodyne window half-width; its acceptance is reported, not applied.
    pub window_half_width: f64,
}

impl ProtocolConfig {
    /// Identical cavities with `omega = 8 pi / tau_r`, `tau = tau_r / 4`,
    /// no free flight and `N_max >= 200`.
    pub fn standard(field: CoherentSpec, delta: f64, theta: f64) -> Result<Self> {
        let scales = collapse_revival(delta, field.mean_photon_number)?;
        let n_max = default_truncation(field.mean_photon_number).max(200);
        Ok(Self {
            cavity: SystemParams::symmetric(8.0 * PI / scales.revival, delta, theta, n_max),
            second_cavity: None,
            field,
            second_mean_photon_number: None,
            second_phase: SecondPhase::Auto,
            tau: scales.revival / 4.0,
            tau_f: 0.0,
            window_half_width: 3.0,
        })
    }

    pub fn second(&self) -> &SystemParams {
        self.second_cavity.as_ref().unwrap_or(&self.cavity)
    }

    pub fn second_field_mean(&self) -> f64 {
        self.second_mean_photon_number
            .unwrap_or(self.field.mean_photon_number)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        self.second().validate()?;
        if self.second().n_max != self.cavity.n_max {
            return Err(Error::TruncationMismatch {
                left: self.cavity.n_max,
                right: self.second().n_max,
            });
        }
        let (first, second) = (&self.cavity, self.second());
        if ((first.omega + first.delta) - (second.omega + second.delta)).abs()
            > 1e-9 * (1.0 + first.omega.abs())
        {
            return Err(Error::InvalidParameter(format!(
                "both cavities must share the qubit transition: {} vs {}",
                first.omega + first.delta,
                second.omega + second.delta
            )));
        }
        if !(self.tau_f >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "free flight time must be >= 0, got {}",
                self.tau_f
            )));
        }
        if !(self.window_half_width > 0.0) {
            return Err(Error::InvalidParameter(
                "window half-width must be > 0".into(),
            ));
        }
        for (params, nbar) in [
            (&self.cavity, self.field.mean_photon_number),
            (self.second(), self.second_field_mean()),
        ] {
            let scales = collapse_revival(params.delta, nbar)?;
            let (lower, upper) = (scales.collapse, scales.revival / 2.0);
            if !(self.tau > lower && self.tau <= upper) {
                return Err(Error::OutsidePlateau {
                    tau: self.tau,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }
}

/// A two-qubit register entangled with `spectator_dim` other basis states,
/// each paired with its own copy of the cavity field.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedRegisterState {
    parts: Vec<TripartiteState>,
}

impl ExtendedRegisterState {
    pub fn from_register(register: &[QubitPairState], field: &FockVector) -> Self {
        Self {
            parts: register
                .iter()
                .map(|q| TripartiteState::product(q, field))
                .collect(),
        }
    }

    pub fn spectator_dim(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[TripartiteState] {
        &self.parts
    }

    pub fn norm_sqr(&self) -> f64 {
        self.parts.iter().map(TripartiteState::norm_sqr).sum()
    }

    /// Field state with every qubit traced out.
    pub fn field_mixture(&self) -> FieldMixture {
        let components = self
            .parts
            .iter()
            .flat_map(|p| p.branches().iter().cloned())
            .collect();
        FieldMixture::new(components).expect("parts share one truncation")
    }

    pub fn evolve(&self, propagator: &Propagator, t: f64) -> Result<Self> {
        let parts = self
            .parts
            .iter()
            .map(|p| propagator.evolve(p, t))
            .collect::<Result<_>>()?;
        Ok(Self { parts })
    }

    /// Projects the field of every part on `field`; returns the register
    /// amplitudes and the success probability.
    pub fn project(&self, field: &FockVector) -> Result<(Vec<QubitPairState>, f64)> {
        let mut register = Vec::with_capacity(self.parts.len());
        for part in &self.parts {
            let mut amplitudes = [C64::new(0.0, 0.0); 4];
            for b in Branch::ALL {
                amplitudes[b.index()] = field.inner(part.branch(b))?;
            }
            register.push(QubitPairState { amplitudes });
        }
        let p = register_norm_sqr(&register);
        Ok((register, p))
    }

    /// `rho_S[s][s'] = sum_b <chi_{s',b}|chi_{s,b}>` after tracing out the
    /// qubits A, B and the field.
    pub fn spectator_density(&self) -> Vec<Vec<C64>> {
        let d = self.parts.len();
        let mut rho = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (s, ps) in self.parts.iter().enumerate() {
            for (t, pt) in self.parts.iter().enumerate() {
                rho[s][t] = Branch::ALL
                    .iter()
                    .map(|&b| {
                        pt.branch(b)
                            .inner(ps.branch(b))
                            .expect("parts share one truncation")
                    })
                    .sum();
            }
        }
        rho
    }
}

pub fn register_norm_sqr(register: &[QubitPairState]) -> f64 {
    register.iter().map(QubitPairState::norm_sqr).sum()
}

fn scale_register(register: &[QubitPairState], factor: f64) -> Vec<QubitPairState> {
    register
        .iter()
        .map(|q| q.scaled(C64::new(factor, 0.0)))
        .collect()
}

/// Free two-qubit evolution for `tau_f` with transition frequencies
/// `omega_a +- eps_delta`. With zero-excitation reference, `|1,1>` gains
/// `e^{-i omega_a tau_f}`, `|0,0>` gains `e^{+i omega_a tau_f}`, and the two
/// Bell states rotate into each other at the rate `eps_delta`.
pub fn free_evolve_qubits(
    state: &QubitPairState,
    tau_f: f64,
    omega_a: f64,
    eps_delta: f64,
) -> QubitPairState {
    let (s, c) = (eps_delta * tau_f).sin_cos();
    let i_s = C64::new(0.0, s);
    let [c_minus, c_one, c_plus, c_zero] = state.amplitudes;
    QubitPairState::new(
        c_minus * c + c_plus * i_s,
        c_one * C64::from_polar(1.0, -omega_a * tau_f),
        c_plus * c + c_minus * i_s,
        c_zero * C64::from_polar(1.0, omega_a * tau_f),
    )
}

/// Pure-state fidelity `|<target|state>|`, clamped to `[0, 1]`.
pub fn fidelity(state: &QubitPairState, target: &QubitPairState) -> f64 {
    target.inner(state).norm().min(1.0)
}

/// `sqrt(<target|rho|target>)` for a density matrix given as rows.
pub fn mixed_fidelity(rho: &[Vec<C64>], target: &[C64]) -> f64 {
    let trace: f64 = (0..rho.len()).map(|i| rho[i][i].re).sum();
    let mut v = C64::new(0.0, 0.0);
    for (i, row) in rho.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            v += target[i].conj() * r * target[j];
        }
    }
    (v.re / trace).max(0.0).sqrt().min(1.0)
}

/// Reduced spectator density matrix of a register `sum_s |q_s>_{AB} |s>`.
pub fn spectator_density_of(register: &[QubitPairState]) -> Vec<Vec<C64>> {
    register
        .iter()
        .map(|qs| register.iter().map(|qt| qt.inner(qs)).collect())
        .collect()
}

/// Everything one run of the two-cavity scheme reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    /// Final register amplitudes, one AB state per spectator basis vector,
    /// normalized jointly.
    pub final_register: Vec<QubitPairState>,
    /// Unnormalized amplitudes right after the first projection (`z_j`).
    pub first_overlaps: Vec<QubitPairState>,
    /// Unnormalized amplitudes right after the second projection (`z'_j`).
    pub second_overlaps: Vec<QubitPairState>,
    pub first_probability: f64,
    pub second_probability: f64,
    pub total_probability: f64,
    /// Fidelity with the protocol's target state.
    pub fidelity: f64,
    /// `sum_s |<Psi-|q_s>|^2`: weight of the singlet in the AB register.
    pub singlet_weight: f64,
    /// Second-cavity phase `varphi` actually used.
    pub second_phase: f64,
    /// Local-oscillator phases of the two homodyne stages.
    pub lo_phases: [f64; 2],
    /// Coherent-state acceptance `erf(delta_L)` of each homodyne window.
    pub window_acceptance: [f64; 2],
}

/// Prepared two-cavity pipeline: cached propagators and projection targets.
pub struct BellProjector {
    config: ProtocolConfig,
    first: Propagator,
    second: Propagator,
    first_field: FockVector,
    first_target: FockVector,
    second_field: FockVector,
    second_target: FockVector,
    second_phase: f64,
    target_specs: [CoherentSpec; 2],
}

impl BellProjector {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let first = Propagator::new(&config.cavity)?;
        let second = if config.second_cavity.is_some() {
            Propagator::new(config.second())?
        } else {
            first.clone()
        };
        let n_max = config.cavity.n_max;
        let (tau, tau_f) = (config.tau, config.tau_f);
        let second_phase = match config.second_phase {
            SecondPhase::Fixed(v) => v,
            SecondPhase::Auto => analytic::ramsey_phase_between(
                &config.cavity,
                config.field.mean_photon_number,
                config.second(),
                config.second_field_mean(),
                tau,
                tau_f,
            )?,
        };
        let omega2 = config.second().omega;
        let phi = config.field.phase;
        let tilde = second_phase - omega2 * (tau + tau_f);
        let first_target_spec = config.field.rotated(-config.cavity.omega * tau);
        let second_spec = CoherentSpec::new(config.second_field_mean(), phi + tilde)?;
        let second_target_spec = second_spec.rotated(-omega2 * tau);
        Ok(Self {
            first_field: make_coherent(&config.field, n_max)?,
            first_target: make_coherent(&first_target_spec, n_max)?,
            second_field: make_coherent(&second_spec, n_max)?,
            second_target: make_coherent(&second_target_spec, n_max)?,
            target_specs: [first_target_spec, second_target_spec],
            config: config.clone(),
            first,
            second,
            second_phase,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn second_phase(&self) -> f64 {
        self.second_phase
    }

    /// Register and field at the exit of the first cavity, before projection.
    pub fn first_evolved(&self, register: &[QubitPairState]) -> Result<ExtendedRegisterState> {
        ExtendedRegisterState::from_register(register, &self.first_field)
            .evolve(&self.first, self.config.tau)
    }

    /// Exit of the second cavity for the (normalized) register left by the
    /// first projection; the free flight is applied first.
    pub fn second_evolved(&self, register: &[QubitPairState]) -> Result<ExtendedRegisterState> {
        ExtendedRegisterState::from_register(&self.free_flight(register), &self.second_field)
            .evolve(&self.second, self.config.tau)
    }

    /// Coherent states the two fields are projected on.
    pub fn target_specs(&self) -> [CoherentSpec; 2] {
        self.target_specs
    }

    /// First cavity stage only: unnormalized register after the projection.
    pub fn first_stage(&self, register: &[QubitPairState]) -> Result<(Vec<QubitPairState>, f64)> {
        self.first_evolved(register)?.project(&self.first_target)
    }

    fn second_stage(&self, register: &[QubitPairState]) -> Result<(Vec<QubitPairState>, f64)> {
        self.second_evolved(register)?.project(&self.second_target)
    }

    fn free_flight(&self, register: &[QubitPairState]) -> Vec<QubitPairState> {
        let p = &self.config.cavity;
        register
            .iter()
            .map(|q| free_evolve_qubits(q, self.config.tau_f, p.omega_a(), p.eps_delta))
            .collect()
    }

    /// Both stages without renormalization in between; linear in the input.
    /// For a normalized input the squared norm of the result is `P P'`.
    pub fn unnormalized(&self, register: &[QubitPairState]) -> Result<Vec<QubitPairState>> {
        let (after_first, _) = self.first_stage(register)?;
        let (after_second, _) = self.second_stage(&after_first)?;
        Ok(after_second)
    }

    /// Full postselective run on a normalized extended register. The
    /// reported fidelity is the AB singlet fidelity; protocol-specific
    /// targets are computed by the callers.
    pub fn run(&self, register: &[QubitPairState]) -> Result<ProtocolOutcome> {
        let norm = register_norm_sqr(register);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "register norm^2 = {norm} is not 1"
            )));
        }
        let (first_overlaps, p1) = self.first_stage(register)?;
        if p1 < DEGENERATE_PROBABILITY {
            return Err(Error::DegenerateOutcome {
                probability: p1,
                limit: DEGENERATE_PROBABILITY,
            });
        }
        let normalized = scale_register(&first_overlaps, 1.0 / p1.sqrt());
        let (second_overlaps, p2) = self.second_stage(&normalized)?;
        if p2 < DEGENERATE_PROBABILITY {
            return Err(Error::DegenerateOutcome {
                probability: p2,
                limit: DEGENERATE_PROBABILITY,
            });
        }
        let final_register = scale_register(&second_overlaps, 1.0 / p2.sqrt());
        let singlet_weight: f64 = final_register.iter().map(|q| q.c_minus().norm_sqr()).sum();
        let acceptance = window_accept(self.config.window_half_width).probability;
        Ok(ProtocolOutcome {
            fidelity: singlet_weight.sqrt().min(1.0),
            singlet_weight,
            final_register,
            first_overlaps,
            second_overlaps,
            first_probability: p1,
            second_probability: p2,
            total_probability: p1 * p2,
            second_phase: self.second_phase,
            lo_phases: self.target_specs.map(|t| t.phase),
            window_acceptance: [acceptance, acceptance],
        })
    }
}

impl BellProjector {
    pub fn teleport(&self, a: C64, b: C64) -> Result<ProtocolOutcome> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "|a|^2 + |b|^2 = {norm} is not 1"
            )));
        }
        let mut outcome = self.run(&teleport_register(a, b))?;
        let rho = spectator_density_of(&outcome.final_register);
        outcome.fidelity = mixed_fidelity(&rho, &[a, b]);
        Ok(outcome)
    }

    pub fn swap(&self, plus: bool) -> Result<ProtocolOutcome> {
        let mut outcome = self.run(&swap_register(plus))?;
        let rho = spectator_density_of(&outcome.final_register);
        let sign = if plus { 1.0 } else { -1.0 };
        // |d c> with index 2d + c: (|0,1> +- |1,0>)/sqrt 2
        let target = [0.0, FRAC_1_SQRT_2, sign * FRAC_1_SQRT_2, 0.0].map(|x| C64::new(x, 0.0));
        outcome.fidelity = mixed_fidelity(&rho, &target);
        Ok(outcome)
    }
}

/// Ramsey-type projection of a two-qubit register onto `|Psi->`.
pub fn bell_projection(
    initial: &QubitPairState,
    config: &ProtocolConfig,
) -> Result<ProtocolOutcome> {
    BellProjector::new(config)?.run(std::slice::from_ref(initial))
}

/// Register for `(a|0> + b|1>)_A (x) |Psi->_{BC}`, indexed by the state of C.
pub fn teleport_register(a: C64, b: C64) -> Vec<QubitPairState> {
    let psi_a = [a, b];
    // |Psi->_{BC}[b][c]
    let singlet = [[0.0, FRAC_1_SQRT_2], [-FRAC_1_SQRT_2, 0.0]];
    (0..2)
        .map(|c| {
            let product = std::array::from_fn(|ab| psi_a[ab / 2] * singlet[ab % 2][c]);
            product_basis_invert(product)
        })
        .collect()
}

/// Register for `|Psi+->_{DA} (x) |Psi->_{BC}`, indexed by `2 d + c`.
pub fn swap_register(plus: bool) -> Vec<QubitPairState> {
    let sign = if plus { 1.0 } else { -1.0 };
    // |Psi+->_{DA}[d][a] and |Psi->_{BC}[b][c]
    let da = [[0.0, FRAC_1_SQRT_2], [sign * FRAC_1_SQRT_2, 0.0]];
    let bc = [[0.0, FRAC_1_SQRT_2], [-FRAC_1_SQRT_2, 0.0]];
    (0..4)
        .map(|dc| {
            let (d, c) = (dc / 2, dc % 2);
            let product = std::array::from_fn(|ab| C64::new(da[d][ab / 2] * bc[ab % 2][c], 0.0));
            product_basis_invert(product)
        })
        .collect()
}

/// Teleports `a|0> + b|1>` from qubit A to qubit C. The fidelity is that of
/// C's reduced state with the input.
pub fn teleport(a: C64, b: C64, config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    BellProjector::new(config)?.teleport(a, b)
}

/// Swaps `|Psi+->_{DA} |Psi->_{BC}` into `|Psi+->_{DC}`. The fidelity is that
/// of the DC reduced state with `|Psi+->_{DC}`.
pub fn swap(plus: bool, config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    BellProjector::new(config)?.swap(plus)
}

/// First-stage success probability predicted by the plateau formula, summed
/// over spectator components: `sum_s |c_-^s|^2 + |eta(c^s)|^2 (1 + delta^2/omega_nbar^2) |s|^2`.
pub fn predicted_first_probability(register: &[QubitPairState], config: &ProtocolConfig) -> f64 {
    register
        .iter()
        .map(|q| {
            analytic::projected_state_first_cavity(
                q,
                config.field.phase,
                config.tau,
                &config.cavity,
                config.field.mean_photon_number,
            )
            .1
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::HaarSampler;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn reference_config() -> ProtocolConfig {
        ProtocolConfig::standard(
            CoherentSpec::from_alpha(C64::from_polar(7.6, 2.65)),
            3.5,
            0.0,
        )
        .unwrap()
    }

    fn close(a: &QubitPairState, b: &QubitPairState, tol: f64) -> bool {
        a.amplitudes
            .iter()
            .zip(&b.amplitudes)
            .all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn free_evolution_cases() {
        let q = QubitPairState::new(c(0.1, 0.2), c(0.3, -0.1), c(0.5, 0.0), c(-0.2, 0.4));
        assert_eq!(free_evolve_qubits(&q, 0.0, 7.0, 0.0), q);
        for b in [Branch::PsiMinus, Branch::PsiPlus] {
            let bell = QubitPairState::basis(b);
            assert!(close(
                &free_evolve_qubits(&bell, 3.1, 7.0, 0.0),
                &bell,
                1e-15
            ));
        }
        let (tau_f, omega_a) = (0.37, 5.2);
        let out = free_evolve_qubits(&q, tau_f, omega_a, 0.0);
        let rel = (out.c_zero() / q.c_zero()) / (out.c_one() / q.c_one());
        assert!(
            (rel.arg() - (2.0 * omega_a * tau_f - 2.0 * PI)).abs() < 1e-12
                || (rel.arg() - 2.0 * omega_a * tau_f).abs() < 1e-12
        );
    }

    #[test]
    fn unequal_detunings_rotate_the_bell_pair() {
        let out = free_evolve_qubits(&QubitPairState::basis(Branch::PsiMinus), PI / 4.0, 3.0, 2.0);
        assert!(out.c_minus().norm() < 1e-15);
        assert!((out.c_plus() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn fidelity_cases() {
        let m = QubitPairState::basis(Branch::PsiMinus);
        let p = QubitPairState::basis(Branch::PsiPlus);
        assert_eq!(fidelity(&m, &m), 1.0);
        assert_eq!(fidelity(&p, &m), 0.0);
        let mix = QubitPairState::new(
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        );
        assert!((fidelity(&mix, &m) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn singlet_input_is_kept() {
        let out = bell_projection(
            &QubitPairState::basis(Branch::PsiMinus),
            &reference_config(),
        )
        .unwrap();
        assert!((out.fidelity - 1.0).abs() < 1e-10);
        assert!((out.total_probability - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singlet_free_input_is_suppressed() {
        let out =
            bell_projection(&QubitPairState::basis(Branch::OneOne), &reference_config()).unwrap();
        assert_eq!(out.final_register[0].c_minus(), c(0.0, 0.0));
        assert!(
            out.total_probability < 1e-3,
            "P_T = {}",
            out.total_probability
        );
        assert!(out.second_probability < 1e-3);
    }

    #[test]
    fn reference_setup_state_is_projected() {
        let q = QubitPairState::new(
            C64::from_polar(0.5446, 1.0),
            C64::from_polar(0.6389, -1.8),
            C64::from_polar(0.1950, -0.3),
            C64::from_polar(0.5071, 1.3),
        )
        .normalized()
        .unwrap();
        let out = bell_projection(&q, &reference_config()).unwrap();
        assert!(out.fidelity > 0.999, "F = {}", out.fidelity);
        assert!((out.total_probability - q.c_minus().norm_sqr()).abs() < 0.01);
        assert!(
            (out.total_probability - out.first_probability * out.second_probability).abs() < 1e-15
        );
    }

    #[test]
    fn free_flight_is_compensated_by_the_phase() {
        let q = HaarSampler::new(3).qubit_pair();
        let mut config = reference_config();
        let base = bell_projection(&q, &config).unwrap();
        config.tau_f = 2.7;
        let out = bell_projection(&q, &config).unwrap();
        assert!(out.fidelity > 0.999, "F = {}", out.fidelity);
        assert!((out.fidelity - base.fidelity).abs() < 1e-3);
    }

    #[test]
    fn teleport_register_expansion() {
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let reg = teleport_register(a, b);
        let h = FRAC_1_SQRT_2;
        // spectator |0>_C: -a/2 |Psi-> - b/sqrt2 |1,1> - a/2 |Psi+>
        let c0 = QubitPairState::new(-a * 0.5, -b * h, -a * 0.5, c(0.0, 0.0));
        // spectator |1>_C: -b/2 |Psi-> + b/2 |Psi+> + a/sqrt2 |0,0>
        let c1 = QubitPairState::new(-b * 0.5, c(0.0, 0.0), b * 0.5, a * h);
        assert!(close(&reg[0], &c0, 1e-15));
        assert!(close(&reg[1], &c1, 1e-15));
        // eta vectors (c_+, c_0, c_1) of the non-singlet parts
        let pairs = [
            (
                crate::analytic::coefficient_vector(&reg[1]),
                [b * 0.5, a * h, c(0.0, 0.0)],
            ),
            (
                crate::analytic::coefficient_vector(&reg[0]),
                [-a * 0.5, c(0.0, 0.0), -b * h],
            ),
        ];
        for (got, want) in pairs {
            assert!(got.iter().zip(&want).all(|(x, y)| (x - y).norm() < 1e-15));
        }
    }

    #[test]
    fn swap_register_expansion() {
        for plus in [true, false] {
            let s = if plus { 1.0 } else { -1.0 };
            let reg = swap_register(plus);
            let h = FRAC_1_SQRT_2;
            let zero = c(0.0, 0.0);
            // index 2d + c; |Psi+->_DC has weight 1/sqrt2 on |0,1> and +-1/sqrt2 on |1,0>
            let expected = [
                QubitPairState::new(zero, c(-0.5, 0.0), zero, zero),
                QubitPairState::new(c(-0.5 * h, 0.0), zero, c(0.5 * h, 0.0), zero),
                QubitPairState::new(c(-0.5 * h * s, 0.0), zero, c(-0.5 * h * s, 0.0), zero),
                QubitPairState::new(zero, zero, zero, c(0.5 * s, 0.0)),
            ];
            for (r, e) in reg.iter().zip(&expected) {
                assert!(close(r, e, 1e-15), "{r:?} vs {e:?}");
            }
        }
    }

    #[test]
    fn teleport_basis_state() {
        let out = teleport(c(1.0, 0.0), c(0.0, 0.0), &reference_config()).unwrap();
        assert!(out.fidelity > 0.999, "F = {}", out.fidelity);
        assert!((out.total_probability - 0.25).abs() < 0.01);
    }

    #[test]
    fn teleport_first_stage_matches_plateau_formula() {
        let config = reference_config();
        let reg = teleport_register(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2));
        let exact = BellProjector::new(&config)
            .unwrap()
            .first_stage(&reg)
            .unwrap()
            .1;
        let predicted = predicted_first_probability(&reg, &config);
        assert!(
            (exact / predicted - 1.0).abs() < 0.05,
            "{exact} vs {predicted}"
        );
    }

    #[test]
    fn swap_both_signs() {
        let config = reference_config();
        for plus in [true, false] {
            let out = swap(plus, &config).unwrap();
            assert!(out.fidelity > 0.999, "F = {}", out.fidelity);
            assert!((out.total_probability - 0.25).abs() < 0.01);
            let reg = swap_register(plus);
            let exact = BellProjector::new(&config)
                .unwrap()
                .first_stage(&reg)
                .unwrap()
                .1;
            assert!((exact / predicted_first_probability(&reg, &config) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn spectator_is_untouched_when_ab_starts_in_the_singlet() {
        let config = reference_config();
        let prop = Propagator::new(&config.cavity).unwrap();
        let field = make_coherent(&config.field, config.cavity.n_max).unwrap();
        let weights = [c(0.6, 0.0), c(0.0, 0.8)];
        let reg: Vec<_> = weights
            .iter()
            .map(|w| QubitPairState::basis(Branch::PsiMinus).scaled(*w))
            .collect();
        let before = ExtendedRegisterState::from_register(&reg, &field);
        let after = before.evolve(&prop, config.tau).unwrap();
        let (r0, r1) = (before.spectator_density(), after.spectator_density());
        for i in 0..2 {
            for j in 0..2 {
                assert!((r0[i][j] - r1[i][j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn plateau_is_checked() {
        let mut config = reference_config();
        config.tau = 0.1;
        assert!(matches!(
            BellProjector::new(&config),
            Err(Error::OutsidePlateau { .. })
        ));
    }

    #[test]
    fn second_cavity_must_share_the_transition() {
        let mut config = reference_config();
        let mut second = config.cavity.clone();
        second.delta += 0.5;
        config.second_cavity = Some(second.clone());
        assert!(matches!(config.validate(), Err(Error::InvalidParameter(_))));
        second.omega -= 0.5;
        config.second_cavity = Some(second);
        assert!(!matches!(
            config.validate(),
            Err(Error::InvalidParameter(_))
        ));
    }

    fn arb_register() -> impl Strategy<Value = QubitPairState> {
        proptest::array::uniform8(-1.0f64..1.0).prop_map(|x| {
            QubitPairState::new(c(x[0], x[1]), c(x[2], x[3]), c(x[4], x[5]), c(x[6], x[7]))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn pipeline_is_linear(x in arb_register(), y in arb_register(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let projector = BellProjector::new(&reference_config()).unwrap();
            let (wa, wb) = (c(a, 0.3), c(-0.2, b));
            let sum = QubitPairState { amplitudes: std::array::from_fn(|k| wa * x.amplitudes[k] + wb * y.amplitudes[k]) };
            let lhs = projector.unnormalized(&[sum]).unwrap();
            let fx = projector.unnormalized(&[x]).unwrap();
            let fy = projector.unnormalized(&[y]).unwrap();
            for k in 0..4 {
                let rhs = wa * fx[0].amplitudes[k] + wb * fy[0].amplitudes[k];
                prop_assert!((lhs[0].amplitudes[k] - rhs).norm() < 1e-10);
            }
        }

        #[test]
        fn global_phase_and_probability_chain(x in arb_register(), gamma in -3.2f64..3.2) {
            prop_assume!(x.norm_sqr() > 1e-2 && x.c_minus().norm_sqr() / x.norm_sqr() > 1e-3);
            let x = x.normalized().unwrap();
            let projector = BellProjector::new(&reference_config()).unwrap();
            let plain = projector.run(&[x]).unwrap();
            let rotated = projector.run(&[x.scaled(C64::from_polar(1.0, gamma))]).unwrap();
            prop_assert!((plain.fidelity - rotated.fidelity).abs() < 1e-12);
            prop_assert!((plain.total_probability - plain.first_probability * plain.second_probability).abs() < 1e-12);
            for p in [plain.first_probability, plain.second_probability, plain.total_probability] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
            }
            prop_assert!((0.0..=1.0).contains(&plain.fidelity));
        }
    }
}
