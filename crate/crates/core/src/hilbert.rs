//! States of two qubits times a single truncated bosonic mode.
//!
//! The two-qubit register is always expanded in the ordered basis
//! `{|Psi->, |1,1>, |Psi+>, |0,0>}` with `|Psi+-> = (|0,1> +- |1,0>)/sqrt(2)`
//! and `|i,j> = |i>_A |j>_B`. A [`TripartiteState`] keeps one Fock vector per
//! register basis label ("branch").

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Tail mass a coherent state may lose to truncation.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-10;

/// Two-qubit register basis label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    PsiMinus,
    OneOne,
    PsiPlus,
    ZeroZero,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::PsiMinus,
        Branch::OneOne,
        Branch::PsiPlus,
        Branch::ZeroZero,
    ];

    pub fn index(self) -> usize {
        match self {
            Branch::PsiMinus => 0,
            Branch::OneOne => 1,
            Branch::PsiPlus => 2,
            Branch::ZeroZero => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::PsiMinus => "psi_minus",
            Branch::OneOne => "one_one",
            Branch::PsiPlus => "psi_plus",
            Branch::ZeroZero => "zero_zero",
        }
    }
}

/// Photon-number amplitudes `0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<C64>,
}

impl FockVector {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); n_max + 1],
        }
    }

    pub fn number_state(n: usize, n_max: usize) -> Self {
        let mut v = Self::zeros(n_max);
        v.amplitudes[n] = C64::new(1.0, 0.0);
        v
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::number_state(0, n_max)
    }

    /// Panics on an empty amplitude list.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        assert!(
            !amplitudes.is_empty(),
            "a Fock vector needs at least the vacuum amplitude"
        );
        Self { amplitudes }
    }

    pub fn truncation(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.truncation() != other.truncation() {
            return Err(Error::TruncationMismatch {
                left: self.truncation(),
                right: other.truncation(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scaled(&self, factor: C64) -> FockVector {
        FockVector {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// `self += factor * other`; truncations must agree.
    pub fn add_scaled(&mut self, factor: C64, other: &FockVector) {
        assert_eq!(self.truncation(), other.truncation());
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += factor * b;
        }
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }
}

/// A coherent field `|alpha>` with `alpha = sqrt(nbar) e^{i phase}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub mean_photon_number: f64,
    pub phase: f64,
}

impl CoherentSpec {
    pub fn new(mean_photon_number: f64, phase: f64) -> Result<Self> {
        if !(mean_photon_number >= 0.0) || !mean_photon_number.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean photon number must be finite and >= 0, got {mean_photon_number}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameter(
                "coherent phase must be finite".into(),
            ));
        }
        Ok(Self {
            mean_photon_number,
            phase,
        })
    }

    pub fn from_alpha(alpha: C64) -> Self {
        Self {
            mean_photon_number: alpha.norm_sqr(),
            phase: alpha.arg(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.mean_photon_number.sqrt()
    }

    pub fn alpha(&self) -> C64 {
        C64::from_polar(self.amplitude(), self.phase)
    }

    /// The same field rotated by `angle` in phase space, `|alpha e^{i angle}>`.
    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            mean_photon_number: self.mean_photon_number,
            phase: self.phase + angle,
        }
    }
}

/// `ceil(nbar + 10 sqrt(nbar))`, raised where needed so the Poisson tail of a
/// small field stays below [`COHERENT_TAIL_LIMIT`], and never below 16.
pub fn default_truncation(mean_photon_number: f64) -> usize {
    let ten_sigma = (mean_photon_number + 10.0 * mean_photon_number.sqrt()).ceil() as usize;
    ten_sigma
        .max(poisson_tail_cutoff(
            mean_photon_number,
            0.1 * COHERENT_TAIL_LIMIT,
        ))
        .max(16)
}

/// Smallest `N` with `P(n >= N) < limit` for a Poisson law of mean `nbar`.
fn poisson_tail_cutoff(nbar: f64, limit: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let mut log_p = -nbar;
    let mut cumulative = 0.0;
    let mut n = 0usize;
    loop {
        cumulative += log_p.exp();
        n += 1;
        if 1.0 - cumulative < limit && (n as f64) > nbar {
            return n;
        }
        log_p += nbar.ln() - (n as f64).ln();
    }
}

/// Photon-number amplitudes `e^{-nbar/2} alpha^n / sqrt(n!)`, accumulated in
/// log space so that large `n` does not overflow.
pub fn make_coherent(spec: &CoherentSpec, n_max: usize) -> Result<FockVector> {
    if n_max < 1 {
        return Err(Error::InvalidParameter(
            "Fock truncation must be at least 1".into(),
        ));
    }
    let nbar = spec.mean_photon_number;
    let mut amplitudes = vec![C64::new(0.0, 0.0); n_max + 1];
    if nbar == 0.0 {
        amplitudes[0] = C64::new(1.0, 0.0);
        return Ok(FockVector { amplitudes });
    }
    let log_modulus = 0.5 * nbar.ln();
    let mut log_factorial = 0.0;
    for (n, amp) in amplitudes.iter_mut().enumerate() {
        if n > 0 {
            log_factorial += (n as f64).ln();
        }
        let log_abs = -0.5 * nbar + n as f64 * log_modulus - 0.5 * log_factorial;
        *amp = C64::from_polar(log_abs.exp(), n as f64 * spec.phase);
    }
    let v = FockVector { amplitudes };
    let tail = (1.0 - v.norm_sqr()).max(v.amplitudes[n_max].norm_sqr());
    if tail > COHERENT_TAIL_LIMIT {
        return Err(Error::TruncationTooSmall {
            n_max,
            tail,
            limit: COHERENT_TAIL_LIMIT,
        });
    }
    Ok(v)
}

/// Closed form `<alpha|beta> = exp(-(|alpha|^2 + |beta|^2)/2 + conj(alpha) beta)`.
pub fn coherent_overlap_closed_form(alpha: C64, beta: C64) -> C64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta).exp()
}

/// Two-qubit amplitudes `(c_-, c_1, c_+, c_0)` in the Bell/product basis
/// `{|Psi->, |1,1>, |Psi+>, |0,0>}`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitPairState {
    pub amplitudes: [C64; 4],
}

impl QubitPairState {
    pub fn new(c_minus: C64, c_one: C64, c_plus: C64, c_zero: C64) -> Self {
        Self {
            amplitudes: [c_minus, c_one, c_plus, c_zero],
        }
    }

    pub fn basis(branch: Branch) -> Self {
        let mut amplitudes = [C64::new(0.0, 0.0); 4];
        amplitudes[branch.index()] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn get(&self, branch: Branch) -> C64 {
        self.amplitudes[branch.index()]
    }

    pub fn c_minus(&self) -> C64 {
        self.amplitudes[0]
    }

    pub fn c_one(&self) -> C64 {
        self.amplitudes[1]
    }

    pub fn c_plus(&self) -> C64 {
        self.amplitudes[2]
    }

    pub fn c_zero(&self) -> C64 {
        self.amplitudes[3]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero qubit state".into(),
            ));
        }
        Ok(self.scaled(C64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|a| a * factor),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitPairState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Amplitudes in the product basis `{|0,0>, |0,1>, |1,0>, |1,1>}`.
pub fn product_basis_convert(state: &QubitPairState) -> [C64; 4] {
    let [c_minus, c_one, c_plus, c_zero] = state.amplitudes;
    [
        c_zero,
        (c_plus + c_minus) * FRAC_1_SQRT_2,
        (c_plus - c_minus) * FRAC_1_SQRT_2,
        c_one,
    ]
}

/// Inverse of [`product_basis_convert`].
pub fn product_basis_invert(product: [C64; 4]) -> QubitPairState {
    let [a00, a01, a10, a11] = product;
    QubitPairState::new(
        (a01 - a10) * FRAC_1_SQRT_2,
        a11,
        (a01 + a10) * FRAC_1_SQRT_2,
        a00,
    )
}

/// Two qubits times one field mode, stored as one Fock vector per branch.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteState {
    branches: [FockVector; 4],
}

impl TripartiteState {
    pub fn zeros(n_max: usize) -> Self {
        Self {
            branches: std::array::from_fn(|_| FockVector::zeros(n_max)),
        }
    }

    /// Builds a state from four branch fields sharing one truncation.
    pub fn from_branches(branches: [FockVector; 4]) -> Result<Self> {
        let n_max = branches[0].truncation();
        for b in &branches[1..] {
            if b.truncation() != n_max {
                return Err(Error::TruncationMismatch {
                    left: n_max,
                    right: b.truncation(),
                });
            }
        }
        Ok(Self { branches })
    }

    /// Unchecked product `qubits (x) field`; linear in both arguments.
    pub fn product(qubits: &QubitPairState, field: &FockVector) -> Self {
        Self {
            branches: qubits.amplitudes.map(|c| field.scaled(c)),
        }
    }

    pub fn truncation(&self) -> usize {
        self.branches[0].truncation()
    }

    pub fn branch(&self, branch: Branch) -> &FockVector {
        &self.branches[branch.index()]
    }

    pub fn branch_mut(&mut self, branch: Branch) -> &mut FockVector {
        &mut self.branches[branch.index()]
    }

    pub fn branches(&self) -> &[FockVector; 4] {
        &self.branches
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(FockVector::norm_sqr).sum()
    }

    /// Splits a product state back into its qubit and field factors. The field
    /// is taken from the heaviest branch and normalized; returns `None` when
    /// the state is not a product to within `tol` (in norm).
    pub fn decompose(&self, tol: f64) -> Option<(QubitPairState, FockVector)> {
        let heaviest = self
            .branches
            .iter()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))?;
        let norm = heaviest.norm_sqr().sqrt();
        if norm == 0.0 {
            return None;
        }
        let field = heaviest.scaled(C64::new(1.0 / norm, 0.0));
        let mut amplitudes = [C64::new(0.0, 0.0); 4];
        for (amp, branch) in amplitudes.iter_mut().zip(&self.branches) {
            *amp = field.inner(branch).ok()?;
        }
        let qubits = QubitPairState { amplitudes };
        let residual = TripartiteState::product(&qubits, &field);
        let err: f64 = residual
            .branches
            .iter()
            .zip(&self.branches)
            .map(|(r, s)| {
                r.amplitudes
                    .iter()
                    .zip(&s.amplitudes)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        (err.sqrt() <= tol).then_some((qubits, field))
    }
}

/// Validating product of a normalized register state and a normalized field.
pub fn compose(qubits: &QubitPairState, field: &FockVector) -> Result<TripartiteState> {
    const TOL: f64 = 1e-9;
    if !qubits.is_normalized(TOL) {
        return Err(Error::InvalidParameter(format!(
            "qubit state norm^2 = {} is not 1",
            qubits.norm_sqr()
        )));
    }
    if (field.norm_sqr() - 1.0).abs() > TOL {
        return Err(Error::InvalidParameter(format!(
            "field norm^2 = {} is not 1",
            field.norm_sqr()
        )));
    }
    Ok(TripartiteState::product(qubits, field))
}

/// `<target|state.branch>`.
pub fn branch_overlap(state: &TripartiteState, branch: Branch, target: &FockVector) -> Result<C64> {
    target.inner(state.branch(branch))
}
