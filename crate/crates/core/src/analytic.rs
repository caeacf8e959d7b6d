//! Closed-form approximations around the mean photon number `nbar` of the
//! initial coherent field: linearized spectrum, coherent-state expansion of the
//! branch fields, plateau overlaps, the first-cavity projected state, the
//! two-cavity phase condition and the slow frequencies of unequal qubits.
//!
//! Eigen-branch labels `j` are `-1, 0, 1`; the field `chi_j` rides on
//! `|0,0>`, `|Psi+>` and `|1,1>` respectively.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{validate_timescale, SystemParams, TimescaleCheck};
use crate::hilbert::{make_coherent, Branch, CoherentSpec, FockVector, QubitPairState};
use crate::{Error, Result, C64};

fn j_index(j: i32) -> usize {
    assert!(
        (-1..=1).contains(&j),
        "eigen-branch label must be -1, 0 or 1, got {j}"
    );
    (j + 1) as usize
}

/// Register state that carries the field `chi_j`.
pub fn branch_of(j: i32) -> Branch {
    match j {
        -1 => Branch::ZeroZero,
        0 => Branch::PsiPlus,
        1 => Branch::OneOne,
        _ => panic!("eigen-branch label must be -1, 0 or 1, got {j}"),
    }
}

/// `(-1)^j 2^{delta_{j,0}}`.
fn parity_weight(j: i32) -> f64 {
    match j {
        0 => 2.0,
        _ => -1.0,
    }
}

/// Spectral data linearized around `nbar`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFrequencies {
    pub mean_photon_number: f64,
    pub delta: f64,
    /// `omega_nbar = sqrt(4 nbar - 2)`.
    pub omega_n: f64,
    /// `Omega_nbar = sqrt(4 nbar - 2 + delta^2)`.
    pub big_omega_n: f64,
    /// `1 / sqrt(8 nbar - 4)`.
    pub eps_n: f64,
    /// `Delta_j` for `j = -1, 0, 1`.
    pub rabi: [f64; 3],
    /// `varpi_j` for `j = -1, 0, 1`.
    pub dispersion: [f64; 3],
}

impl SpectralFrequencies {
    pub fn new(mean_photon_number: f64, delta: f64) -> Self {
        let nbar = mean_photon_number;
        let omega_sq = 4.0 * nbar - 2.0;
        let big_sq = omega_sq + delta * delta;
        let big = big_sq.sqrt();
        let big4 = big_sq * big_sq;
        let rabi = [-1, 0, 1].map(|j| {
            j as f64 * (2.0 * nbar + delta * delta) / big
                + delta * (omega_sq + big_sq - 2.0) / big4 * parity_weight(j)
        });
        let dispersion =
            [-1, 0, 1].map(|j| 2.0 * j as f64 / big - 4.0 * delta / big4 * parity_weight(j));
        Self {
            mean_photon_number,
            delta,
            omega_n: omega_sq.sqrt(),
            big_omega_n: big,
            eps_n: 1.0 / (8.0 * nbar - 4.0).sqrt(),
            rabi,
            dispersion,
        }
    }

    pub fn rabi(&self, j: i32) -> f64 {
        self.rabi[j_index(j)]
    }

    pub fn dispersion(&self, j: i32) -> f64 {
        self.dispersion[j_index(j)]
    }
}

/// Linearized eigenvalue `Delta_j + (omega + varpi_j)(n - 1)`.
pub fn approx_eigenvalue(n: usize, j: i32, params: &SystemParams, mean_photon_number: f64) -> f64 {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    f.rabi(j) + (params.omega + f.dispersion(j)) * (n as f64 - 1.0)
}

/// First-order perturbative eigenvalue at photon number `n` itself:
/// `omega (n-1) + j Omega_n + (-1)^j 2^{1-|j|} delta / Omega_n^2`.
pub fn perturbative_eigenvalue(n: usize, j: i32, params: &SystemParams) -> f64 {
    let big_sq = 4.0 * n as f64 - 2.0 + params.delta * params.delta;
    params.omega * (n as f64 - 1.0)
        + j as f64 * big_sq.sqrt()
        + parity_weight(j) * params.delta / big_sq
}

/// `(c_+, c_0, c_1)` of a register state.
pub fn coefficient_vector(state: &QubitPairState) -> [C64; 3] {
    [state.c_plus(), state.c_zero(), state.c_one()]
}

/// `eta(c, phi)` for `c = (c_+, c_0, c_1)`.
pub fn eta(c: [C64; 3], phi: f64, params: &SystemParams, mean_photon_number: f64) -> C64 {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let [c_plus, c_zero, c_one] = c;
    let rot = C64::from_polar(1.0, phi + params.theta);
    let inner =
        c_plus * (params.delta / f.omega_n) + (c_zero * rot - c_one * rot.conj()) * FRAC_1_SQRT_2;
    inner * (f.omega_n * f.omega_n / (f.big_omega_n * f.big_omega_n))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaCoefficients {
    pub eta: C64,
    /// `eta_{j,k}` indexed `[j + 1][k + 1]`.
    pub eta_jk: [[C64; 3]; 3],
}

impl EtaCoefficients {
    pub fn get(&self, j: i32, k: i32) -> C64 {
        self.eta_jk[j_index(j)][j_index(k)]
    }
}

pub fn eta_coefficients(
    c: [C64; 3],
    phi: f64,
    params: &SystemParams,
    mean_photon_number: f64,
) -> EtaCoefficients {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let e = eta(c, phi, params, mean_photon_number);
    let [c_plus, c_zero, c_one] = c;
    let rot = C64::from_polar(1.0, phi + params.theta);
    let (w, big, delta) = (f.omega_n, f.big_omega_n, params.delta);
    let mut eta_jk = [[C64::new(0.0, 0.0); 3]; 3];
    for j in -1..=1i32 {
        let norm_j = 2f64.powi(j.abs()).sqrt();
        let sign = if j == 1 { -1.0 } else { 1.0 };
        let detuning = if j == 0 { delta / w } else { 1.0 };
        eta_jk[j_index(j)][1] = e * (detuning * sign / norm_j);
        for k in [-1, 1] {
            let shifted = delta + k as f64 * big;
            let prefactor = (shifted / w).powi(j) * w * w / (norm_j * 2.0 * big * big);
            let bracket = c_plus
                + c_zero * rot * (w / (2f64.sqrt() * shifted))
                + c_one * rot.conj() * (shifted / (2f64.sqrt() * w));
            eta_jk[j_index(j)][j_index(k)] = bracket * prefactor;
        }
    }
    EtaCoefficients { eta: e, eta_jk }
}

/// Approximate branch field `chi_j(t)` as a superposition of three coherent
/// states. The returned check reports whether `t` lies inside the range where
/// the linearized spectrum holds; the field is produced either way.
pub fn approx_field_state(
    j: i32,
    t: f64,
    c: [C64; 3],
    initial: &CoherentSpec,
    params: &SystemParams,
) -> Result<(FockVector, TimescaleCheck)> {
    let nbar = initial.mean_photon_number;
    let f = SpectralFrequencies::new(nbar, params.delta);
    let coeffs = eta_coefficients(c, initial.phase, params, nbar);
    let mut field = FockVector::zeros(params.n_max);
    for k in -1..=1 {
        let rotation = (params.omega + f.dispersion(k)) * t;
        let phase = j as f64 * (initial.phase + params.theta - rotation) - f.rabi(k) * t;
        let component = make_coherent(&initial.rotated(-rotation), params.n_max)?;
        field.add_scaled(coeffs.get(j, k) * C64::from_polar(1.0, phase), &component);
    }
    Ok((field, validate_timescale(params, nbar, t)))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapLaw {
    /// `exp(-nbar (1 - e^{-i varpi t}))`.
    pub exact: C64,
    /// `exp(-nbar (i varpi t + varpi^2 t^2 / 2))`.
    pub short_time: C64,
    /// `|varpi t| <= 0.2 pi`, i.e. `t` well below `2 pi / varpi`.
    pub short_time_valid: bool,
}

/// Overlap `<alpha e^{-i omega t} | alpha e^{-i (omega + varpi) t}>` of two
/// coherent states with mean photon number `nbar`.
pub fn coherent_overlap_law(varpi: f64, t: f64, mean_photon_number: f64) -> OverlapLaw {
    let x = varpi * t;
    let nbar = mean_photon_number;
    let exact = (-(C64::new(1.0, 0.0) - C64::from_polar(1.0, -x)) * nbar).exp();
    let short_time = C64::new(-nbar * x * x / 2.0, -nbar * x).exp();
    OverlapLaw {
        exact,
        short_time,
        short_time_valid: x.abs() <= 0.2 * PI,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeScales {
    pub revival: f64,
    pub collapse: f64,
}

/// `tau_r = pi sqrt(4 nbar - 2 + delta^2)`, `tau_c = tau_r / (pi sqrt(2 nbar))`.
pub fn collapse_revival(delta: f64, mean_photon_number: f64) -> Result<TimeScales> {
    if !(mean_photon_number > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "collapse and revival need nbar > 1/2, got {mean_photon_number}"
        )));
    }
    let revival = PI * (4.0 * mean_photon_number - 2.0 + delta * delta).sqrt();
    Ok(TimeScales {
        revival,
        collapse: revival / (PI * (2.0 * mean_photon_number).sqrt()),
    })
}

/// Plateau value of `|<alpha e^{-i omega tau}|chi_j(tau)>|^2`. Times outside
/// `[tau_c, tau_r / 2]` are rejected.
pub fn plateau_overlap(
    j: i32,
    tau: f64,
    c: [C64; 3],
    phi: f64,
    params: &SystemParams,
    mean_photon_number: f64,
) -> Result<f64> {
    let scales = collapse_revival(params.delta, mean_photon_number)?;
    let (lower, upper) = (scales.collapse, scales.revival / 2.0);
    if !(tau >= lower && tau <= upper) {
        return Err(Error::OutsidePlateau { tau, lower, upper });
    }
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let varpi0 = f.dispersion(0);
    let detuning = if j == 0 {
        (params.delta / f.omega_n).powi(2)
    } else {
        1.0
    };
    let decay = (-mean_photon_number * varpi0 * varpi0 * tau * tau).exp();
    Ok(decay / 2f64.powi(j.abs()) * detuning * eta(c, phi, params, mean_photon_number).norm_sqr())
}

/// Damping factor `s = exp(-i (Delta_0 + varpi_0 nbar) tau - nbar varpi_0^2 tau^2 / 2)`.
pub fn damping_factor(tau: f64, params: &SystemParams, mean_photon_number: f64) -> C64 {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let (d0, v0) = (f.rabi(0), f.dispersion(0));
    C64::new(
        -mean_photon_number * v0 * v0 * tau * tau / 2.0,
        -(d0 + v0 * mean_photon_number) * tau,
    )
    .exp()
}

/// Unnormalized register state `psi_phi` left next to the singlet by the
/// first projection, with `Theta = theta - (omega + varpi_0) tau`.
pub fn residual_state(
    phi: f64,
    tau: f64,
    params: &SystemParams,
    mean_photon_number: f64,
) -> QubitPairState {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let big_theta = params.theta - (params.omega + f.dispersion(0)) * tau;
    let rot = C64::from_polar(FRAC_1_SQRT_2, big_theta + phi);
    QubitPairState::new(
        C64::new(0.0, 0.0),
        -rot,
        C64::new(params.delta / f.omega_n, 0.0),
        rot.conj(),
    )
}

/// Unnormalized register state after projecting the first cavity on
/// `|alpha e^{-i omega tau}>`, and its probability `P`.
pub fn projected_state_first_cavity(
    c: &QubitPairState,
    phi: f64,
    tau: f64,
    params: &SystemParams,
    mean_photon_number: f64,
) -> (QubitPairState, f64) {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let e = eta(coefficient_vector(c), phi, params, mean_photon_number);
    let s = damping_factor(tau, params, mean_photon_number);
    let psi = residual_state(phi, tau, params, mean_photon_number).scaled(e * s);
    let mut out = psi;
    out.amplitudes[0] = c.c_minus();
    let v0 = f.dispersion(0);
    let p = c.c_minus().norm_sqr()
        + e.norm_sqr()
            * (1.0 + (params.delta / f.omega_n).powi(2))
            * (-mean_photon_number * v0 * v0 * tau * tau).exp();
    (out, p)
}

/// Initial phase `varphi` of the second cavity that cancels the residual
/// state left by the first projection, for two identical cavities.
pub fn ramsey_phase(
    params: &SystemParams,
    mean_photon_number: f64,
    tau: f64,
    tau_f: f64,
) -> Result<f64> {
    ramsey_phase_between(
        params,
        mean_photon_number,
        params,
        mean_photon_number,
        tau,
        tau_f,
    )
}

/// Phase condition for a second cavity with its own `(omega', delta', theta')`
/// and mean photon number; reduces to [`ramsey_phase`] for equal cavities.
/// Both parameter sets must describe the same qubits, `omega + delta = omega' + delta'`.
pub fn ramsey_phase_between(
    first: &SystemParams,
    first_nbar: f64,
    second: &SystemParams,
    second_nbar: f64,
    tau: f64,
    tau_f: f64,
) -> Result<f64> {
    let f1 = SpectralFrequencies::new(first_nbar, first.delta);
    let f2 = SpectralFrequencies::new(second_nbar, second.delta);
    let ratio = -first.delta * second.delta / (f1.omega_n * f2.omega_n);
    if !(-1.0..=1.0).contains(&ratio) {
        return Err(Error::NoPhaseSolution {
            delta: first.delta.abs().max(second.delta.abs()),
            omega_nbar: f1.omega_n.min(f2.omega_n),
        });
    }
    Ok(ratio.acos() - f1.dispersion(0) * tau - second.delta * tau_f
        + (first.theta - second.theta)
        + (second.omega - first.omega) * tau)
}

/// Coefficient vector `d = (delta/omega_nbar, d_0, -conj(d_0))` of the
/// residual state after the free flight, to be fed to [`eta`] for the second
/// cavity.
pub fn residual_coefficients(
    phi: f64,
    tau: f64,
    tau_f: f64,
    params: &SystemParams,
    mean_photon_number: f64,
) -> [C64; 3] {
    let f = SpectralFrequencies::new(mean_photon_number, params.delta);
    let big_theta = params.theta - (params.omega + f.dispersion(0)) * tau;
    let d0 = C64::from_polar(FRAC_1_SQRT_2, -(big_theta + phi - params.omega_a() * tau_f));
    [C64::new(params.delta / f.omega_n, 0.0), d0, -d0.conj()]
}

/// Slow frequencies introduced by unequal qubits.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricFrequencies {
    /// Slow Rabi frequency `Delta`.
    pub rabi: f64,
    /// Slow dispersion `varpi`.
    pub dispersion: f64,
}

pub fn asym_frequencies(
    eps_g: f64,
    eps_delta: f64,
    delta: f64,
    mean_photon_number: f64,
) -> AsymmetricFrequencies {
    let f = SpectralFrequencies::new(mean_photon_number, delta);
    let (w, big) = (f.omega_n, f.big_omega_n);
    AsymmetricFrequencies {
        rabi: w * w / big * eps_g + delta / big * eps_delta,
        dispersion: 2.0 * (big * big + delta * delta) / big.powi(3) * eps_g
            + delta / big.powi(3) * eps_delta,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryBoundary {
    /// Largest `eps_g` for which `2 nbar varpi^2 (tau_r/4)^2 <= 1`.
    pub eps_g_max: f64,
    /// Rule of thumb `eps_g << 1 / (2 nbar)`.
    pub coupling_scale: f64,
    /// Rule of thumb `eps_delta << 2 / delta`; infinite at resonance.
    pub detuning_scale: f64,
}

pub fn asym_boundary(eps_delta: f64, delta: f64, mean_photon_number: f64) -> AsymmetryBoundary {
    let f = SpectralFrequencies::new(mean_photon_number, delta);
    let big_sq = f.big_omega_n * f.big_omega_n;
    let eps_g_max = (2.0 / mean_photon_number).sqrt() / PI * big_sq / (big_sq + delta * delta)
        - 0.5 * delta * eps_delta / (big_sq + delta * delta);
    AsymmetryBoundary {
        eps_g_max,
        coupling_scale: 1.0 / (2.0 * mean_photon_number),
        detuning_scale: if delta == 0.0 {
            f64::INFINITY
        } else {
            2.0 / delta.abs()
        },
    }
}

/// Coupling asymmetry at which the slow Rabi oscillation completes `l` cycles
/// by `tau_r / 4`, giving a fidelity maximum.
pub fn fidelity_maximum(l: u32, eps_delta: f64, delta: f64, mean_photon_number: f64) -> f64 {
    let w_sq = 4.0 * mean_photon_number - 2.0;
    (4.0 * l as f64 - delta * eps_delta) / w_sq
}

/// Halfway to the first maximum; close to `1 / (2 nbar)` when `eps_delta = 0`.
pub fn first_fidelity_minimum(eps_delta: f64, delta: f64, mean_photon_number: f64) -> f64 {
    fidelity_maximum(1, eps_delta, delta, mean_photon_number) / 2.0
}

/// Allowed difference of the two qubits' positions along the cavity axis,
/// `(lambda / pi) arctan(1 / (2 nbar))`, in the units of `wavelength`.
pub fn position_tolerance(wavelength: f64, mean_photon_number: f64) -> f64 {
    wavelength / PI * (1.0 / (2.0 * mean_photon_number)).atan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_block, eigendecompose};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn reference_params() -> (SystemParams, f64) {
        let nbar: f64 = 7.6 * 7.6;
        let tau_r = collapse_revival(3.5, nbar).unwrap().revival;
        (
            SystemParams::symmetric(8.0 * PI / tau_r, 3.5, 0.0, 200),
            nbar,
        )
    }

    #[test]
    fn spectral_identities() {
        for (nbar, delta) in [(50.0, 3.5), (57.76, 3.5), (120.0, 3.5), (30.0, 0.7)] {
            let f = SpectralFrequencies::new(nbar, delta);
            assert!((f.big_omega_n.powi(2) - f.omega_n.powi(2) - delta * delta).abs() < 1e-11);
            if nbar >= 50.0 {
                for j in [-1, 1] {
                    assert!((f.rabi(j) / f.rabi(0)).abs() > nbar);
                }
            }
        }
    }

    #[test]
    fn resonant_middle_eigenvalue_is_free() {
        let p = SystemParams::symmetric(0.8, 0.0, 0.0, 100);
        for n in [3, 20, 58] {
            assert!((approx_eigenvalue(n, 0, &p, 40.0) - 0.8 * (n as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn linearized_spectrum_matches_exact_at_nbar() {
        let p = SystemParams::symmetric(0.5, 3.5, 0.0, 100);
        let n = 58;
        let exact = eigendecompose(&build_block(n, &p).unwrap()).eigenvalues;
        let f = SpectralFrequencies::new(n as f64, p.delta);
        for j in [-1i32, 1] {
            let e = approx_eigenvalue(n, j, &p, n as f64);
            assert!((e - exact[(j + 1) as usize]).abs() <= 0.005 * f.big_omega_n);
        }
        assert!((perturbative_eigenvalue(n, 0, &p) - exact[1]).abs() <= 0.02);
        let trace: f64 = (0..3)
            .map(|k| build_block(n, &p).unwrap().matrix[(k, k)].re)
            .sum();
        let sum: f64 = [-1, 0, 1]
            .iter()
            .map(|&j| approx_eigenvalue(n, j, &p, n as f64))
            .sum();
        assert!((sum - trace).abs() <= 0.1);
    }

    #[test]
    fn eta_vanishing_cases() {
        let p = SystemParams::symmetric(0.0, 0.0, 0.4, 100);
        assert_eq!(
            eta([c(0.7, 0.2), c(0.0, 0.0), c(0.0, 0.0)], 1.3, &p, 57.76),
            c(0.0, 0.0)
        );
        let h = FRAC_1_SQRT_2;
        assert!(eta([c(0.0, 0.0), c(h, 0.0), c(h, 0.0)], -0.4, &p, 57.76).norm() < 1e-15);
    }

    #[test]
    fn eta_reference_setup_value() {
        let (p, nbar) = reference_params();
        let q = QubitPairState::new(
            C64::from_polar(0.5446, 1.0),
            C64::from_polar(0.6389, -1.8),
            C64::from_polar(0.1950, -0.3),
            C64::from_polar(0.5071, 1.3),
        )
        .normalized()
        .unwrap();
        let e = eta(coefficient_vector(&q), 2.65, &p, nbar);
        assert!(e.norm() > 0.1);
        // direct evaluation of the defining formula
        let w = (4.0 * nbar - 2.0).sqrt();
        let big_sq = w * w + 12.25;
        let direct = (q.c_plus() * (3.5 / w)
            + (q.c_zero() * C64::from_polar(1.0, 2.65) - q.c_one() * C64::from_polar(1.0, -2.65))
                / 2f64.sqrt())
            * (w * w / big_sq);
        assert!((e - direct).norm() < 1e-15);
    }

    #[test]
    fn eta_jk_middle_column_is_proportional_to_eta() {
        let (p, nbar) = reference_params();
        let cv = [c(0.3, 0.1), c(-0.2, 0.5), c(0.4, -0.3)];
        let co = eta_coefficients(cv, 0.9, &p, nbar);
        let w = (4.0 * nbar - 2.0).sqrt();
        assert!((co.get(0, 0) - co.eta * (3.5 / w)).norm() < 1e-15);
        assert!((co.get(1, 0) + co.eta / 2f64.sqrt()).norm() < 1e-15);
        assert!((co.get(-1, 0) - co.eta / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn overlap_law_values() {
        let nbar = 57.76;
        let law = coherent_overlap_law(0.3, 0.0, nbar);
        assert_eq!(law.exact, c(1.0, 0.0));
        assert_eq!(law.short_time, c(1.0, 0.0));
        let law = coherent_overlap_law(0.5, 4.0 * PI, nbar);
        assert!((law.exact - c(1.0, 0.0)).norm() < 1e-12);
        assert!(!law.short_time_valid);
        let law = coherent_overlap_law(1.0, PI, nbar);
        assert!((law.exact.norm() / (-2.0 * nbar).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_scales() {
        let s = collapse_revival(3.5, 57.76).unwrap();
        assert!((s.revival - 48.80).abs() < 0.005);
        assert!((s.collapse - 1.445).abs() < 0.0005);
        assert_eq!(s.collapse, s.revival / (PI * (2.0f64 * 57.76).sqrt()));
        let s = collapse_revival(0.0, 1.0).unwrap();
        assert!((s.revival - PI * 2f64.sqrt()).abs() < 1e-15);
        let big = collapse_revival(3.5, 4.0e8).unwrap().revival
            / collapse_revival(3.5, 1.0e8).unwrap().revival;
        assert!((big - 2.0).abs() < 1e-6);
        assert!(collapse_revival(0.0, 0.4).is_err());
    }

    #[test]
    fn plateau_overlap_cases() {
        let (p, nbar) = reference_params();
        let cv = [c(0.3, 0.1), c(-0.2, 0.5), c(0.4, -0.3)];
        let tau = 3.0 * collapse_revival(p.delta, nbar).unwrap().collapse;
        let up = plateau_overlap(1, tau, cv, 2.65, &p, nbar).unwrap();
        let down = plateau_overlap(-1, tau, cv, 2.65, &p, nbar).unwrap();
        assert_eq!(up, down);
        let resonant = SystemParams::symmetric(0.1, 0.0, 0.0, 200);
        assert_eq!(
            plateau_overlap(0, tau, cv, 2.65, &resonant, nbar).unwrap(),
            0.0
        );
        assert!(matches!(
            plateau_overlap(0, 0.1, cv, 2.65, &p, nbar),
            Err(Error::OutsidePlateau { .. })
        ));
    }

    #[test]
    fn projected_state_special_cases() {
        let (p, nbar) = reference_params();
        let tau = collapse_revival(p.delta, nbar).unwrap().revival / 4.0;
        let (out, prob) = projected_state_first_cavity(
            &QubitPairState::basis(Branch::PsiMinus),
            2.65,
            tau,
            &p,
            nbar,
        );
        assert_eq!(out, QubitPairState::basis(Branch::PsiMinus));
        assert_eq!(prob, 1.0);

        let resonant = SystemParams::symmetric(0.1, 0.0, 0.6, 200);
        let q = QubitPairState::new(c(0.6, 0.0), c(0.4, 0.2), c(0.3, -0.1), c(0.4, 0.2))
            .normalized()
            .unwrap();
        let (out, prob) = projected_state_first_cavity(&q, -0.6, tau, &resonant, nbar);
        assert!((prob - q.c_minus().norm_sqr()).abs() < 1e-15);
        assert!(out.amplitudes[1..].iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn ramsey_phase_cases() {
        let (p, nbar) = reference_params();
        let resonant = SystemParams::symmetric(0.3, 0.0, 0.0, 200);
        assert!((ramsey_phase(&resonant, nbar, 12.0, 3.0).unwrap() - PI / 2.0).abs() < 1e-15);
        let w = (4.0 * nbar - 2.0).sqrt();
        let edge = SystemParams::symmetric(0.3, w, 0.0, 200);
        assert!((ramsey_phase(&edge, nbar, 0.0, 0.0).unwrap() - PI).abs() < 1e-6);
        let beyond = SystemParams::symmetric(0.3, w * 1.01, 0.0, 200);
        assert!(matches!(
            ramsey_phase(&beyond, nbar, 1.0, 0.0),
            Err(Error::NoPhaseSolution { .. })
        ));

        let tau = collapse_revival(p.delta, nbar).unwrap().revival / 4.0;
        for tau_f in [0.0, 0.37, 5.0] {
            let phi = 2.65;
            let varphi = ramsey_phase(&p, nbar, tau, tau_f).unwrap();
            let tilde = varphi - p.omega * (tau + tau_f);
            let d = residual_coefficients(phi, tau, tau_f, &p, nbar);
            assert!(eta(d, phi + tilde, &p, nbar).norm() < 1e-12);
        }
    }

    #[test]
    fn ramsey_phase_between_distinct_cavities() {
        let nbar = 57.76;
        let first = SystemParams::symmetric(0.5, 3.5, 0.2, 200);
        // same qubits, so omega + delta is shared by both cavities
        let second = SystemParams::symmetric(0.7, 3.3, -0.4, 200);
        let (tau, tau_f, phi) = (12.0, 1.3, 2.65);
        let varphi = ramsey_phase_between(&first, nbar, &second, nbar, tau, tau_f).unwrap();
        let tilde = varphi - second.omega * (tau + tau_f);
        let d = residual_coefficients(phi, tau, tau_f, &first, nbar);
        assert!(eta(d, phi + tilde, &second, nbar).norm() < 1e-12);
    }

    #[test]
    fn asymmetric_formulas() {
        let f = asym_frequencies(0.0, 0.0, 3.5, 57.76);
        assert_eq!((f.rabi, f.dispersion), (0.0, 0.0));
        let b = asym_boundary(0.0, 0.0, 100.0);
        assert!((b.eps_g_max - (2.0f64 / 100.0).sqrt() / PI).abs() < 1e-15);
        let w_sq = 4.0 * 57.76 - 2.0;
        assert!((fidelity_maximum(1, 0.0, 3.5, 57.76) - 4.0 / w_sq).abs() < 1e-15);
        assert!((fidelity_maximum(2, 0.1, 3.5, 57.76) - (8.0 - 0.35) / w_sq).abs() < 1e-15);
        let min = first_fidelity_minimum(0.0, 3.5, 100.0);
        assert!((min * 200.0 - 1.0).abs() < 0.01);
        // a full slow Rabi cycle at tau_r / 4
        let eps = fidelity_maximum(1, 0.0, 3.5, 57.76);
        let tau_r = collapse_revival(3.5, 57.76).unwrap().revival;
        let cycles = 2.0 * asym_frequencies(eps, 0.0, 3.5, 57.76).rabi * tau_r / 4.0 / (2.0 * PI);
        assert!((cycles - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cavity_position_tolerance() {
        let tol_mm = position_tolerance(5.87, 100.0);
        assert!((tol_mm * 1000.0 - 9.34).abs() < 0.01);
        assert!(tol_mm * 1000.0 < 10.0);
    }
}
