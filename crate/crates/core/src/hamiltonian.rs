//! Exact two-qubit Tavis-Cummings dynamics through fixed-excitation blocks.
//!
//! The Hamiltonian conserves `N = a^dag a + (sigma_z^A + sigma_z^B)/2 + 1`.
//! Block `n` is spanned by `|1,1>|n-2>`, `|Psi+>|n-1>`, `|0,0>|n>` and, when
//! the qubits are not identical, `|Psi->|n-1>`. States outside the Fock
//! truncation are dropped from a block, which keeps the truncated evolution
//! exactly unitary.
//!
//! Energies are measured with `hbar = g = 1`; the common offset of block `n`
//! is `omega (n - 1)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{Branch, TripartiteState};
use crate::{Error, Result, C64};

/// Threshold on the dispersion ratio returned by [`validate_timescale`].
pub const TIMESCALE_RATIO_LIMIT: f64 = 0.1;

/// Hamiltonian parameters in units of the mean coupling `g = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Field frequency `omega`.
    pub omega: f64,
    /// Detuning `delta = omega_a - omega`.
    pub delta: f64,
    /// Dipole phase `theta` carried by the coupling terms.
    pub theta: f64,
    /// Coupling asymmetry: `g_A = 1 + eps_g`, `g_B = 1 - eps_g`.
    #[serde(default)]
    pub eps_g: f64,
    /// Detuning asymmetry: `delta_A = delta + eps_delta`, `delta_B = delta - eps_delta`.
    #[serde(default)]
    pub eps_delta: f64,
    /// Fock truncation `N_max`.
    pub n_max: usize,
}

impl SystemParams {
    pub fn symmetric(omega: f64, delta: f64, theta: f64, n_max: usize) -> Self {
        Self {
            omega,
            delta,
            theta,
            eps_g: 0.0,
            eps_delta: 0.0,
            n_max,
        }
    }

    pub fn with_asymmetry(mut self, eps_g: f64, eps_delta: f64) -> Self {
        self.eps_g = eps_g;
        self.eps_delta = eps_delta;
        self
    }

    /// Qubit transition frequency `omega_a = omega + delta`.
    pub fn omega_a(&self) -> f64 {
        self.omega + self.delta
    }

    pub fn is_symmetric(&self) -> bool {
        self.eps_g == 0.0 && self.eps_delta == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("delta", self.delta),
            ("theta", self.theta),
            ("eps_g", self.eps_g),
            ("eps_delta", self.eps_delta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.eps_g.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "both couplings 1 +- eps_g must stay positive, got eps_g = {}",
                self.eps_g
            )));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter(
                "Fock truncation must be at least 1".into(),
            ));
        }
        if !self.is_symmetric() && self.theta != 0.0 {
            return Err(Error::AsymmetricPhase { theta: self.theta });
        }
        Ok(())
    }
}

/// Which states make up a block.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockLayout {
    /// Leave out `|Psi->|n-1>`; valid only for identical qubits, where that
    /// state is an eigenstate with energy `omega (n - 1)`.
    Reduced,
    /// Include `|Psi->|n-1>` as the first basis state.
    Full,
}

impl BlockLayout {
    pub fn for_params(params: &SystemParams) -> Self {
        if params.is_symmetric() {
            BlockLayout::Reduced
        } else {
            BlockLayout::Full
        }
    }
}

/// One fixed-excitation block of the Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationBlock {
    pub n: usize,
    pub matrix: DMatrix<C64>,
    /// `(branch, photon number)` of each basis state, in matrix order.
    pub labels: Vec<(Branch, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockEigensystem {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Columns are the matching eigenvectors.
    pub eigenvectors: DMatrix<C64>,
}

fn block_labels(n: usize, n_max: usize, layout: BlockLayout) -> Vec<(Branch, usize)> {
    let mut labels = Vec::with_capacity(4);
    let has = |m: Option<usize>| m.filter(|&m| m <= n_max);
    if layout == BlockLayout::Full {
        if let Some(m) = has(n.checked_sub(1)) {
            labels.push((Branch::PsiMinus, m));
        }
    }
    if let Some(m) = has(n.checked_sub(2)) {
        labels.push((Branch::OneOne, m));
    }
    if let Some(m) = has(n.checked_sub(1)) {
        labels.push((Branch::PsiPlus, m));
    }
    if let Some(m) = has(Some(n)) {
        labels.push((Branch::ZeroZero, m));
    }
    labels
}

/// Highest excitation number with a non-empty block.
pub fn max_excitation(n_max: usize) -> usize {
    n_max + 2
}

/// Builds block `n` in the layout implied by `params`.
pub fn build_block(n: usize, params: &SystemParams) -> Result<ExcitationBlock> {
    build_block_with(n, params, BlockLayout::for_params(params))
}

pub fn build_block_with(
    n: usize,
    params: &SystemParams,
    layout: BlockLayout,
) -> Result<ExcitationBlock> {
    params.validate()?;
    if layout == BlockLayout::Reduced && !params.is_symmetric() {
        return Err(Error::InvalidParameter(
            "asymmetric qubits need the full block layout".into(),
        ));
    }
    if n > max_excitation(params.n_max) {
        return Err(Error::InvalidParameter(format!(
            "excitation number {n} exceeds {} for N_max = {}",
            max_excitation(params.n_max),
            params.n_max
        )));
    }
    let labels = block_labels(n, params.n_max, layout);
    let dim = labels.len();
    let mut matrix = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let offset = params.omega * (n as f64 - 1.0);
    let position = |b: Branch| labels.iter().position(|(lb, _)| *lb == b);
    for (i, (b, _)) in labels.iter().enumerate() {
        let shift = match b {
            Branch::OneOne => params.delta,
            Branch::ZeroZero => -params.delta,
            Branch::PsiMinus | Branch::PsiPlus => 0.0,
        };
        matrix[(i, i)] = C64::new(offset + shift, 0.0);
    }
    let phase = C64::from_polar(1.0, params.theta);
    let nf = n as f64;
    let mut couple = |a: Branch, b: Branch, value: C64| {
        if let (Some(i), Some(j)) = (position(a), position(b)) {
            matrix[(i, j)] = value;
            matrix[(j, i)] = value.conj();
        }
    };
    if n >= 2 {
        couple(
            Branch::OneOne,
            Branch::PsiPlus,
            phase * (2.0 * (nf - 1.0)).sqrt(),
        );
        couple(
            Branch::OneOne,
            Branch::PsiMinus,
            phase * params.eps_g * (2.0 * (nf - 1.0)).sqrt(),
        );
    }
    couple(Branch::PsiPlus, Branch::ZeroZero, phase * (2.0 * nf).sqrt());
    couple(
        Branch::PsiMinus,
        Branch::ZeroZero,
        -phase * params.eps_g * (2.0 * nf).sqrt(),
    );
    couple(
        Branch::PsiMinus,
        Branch::PsiPlus,
        C64::new(-params.eps_delta, 0.0),
    );
    Ok(ExcitationBlock { n, matrix, labels })
}

/// Hermitian eigensolve; the diagonal offset `omega (n-1)` is removed first so
/// that the solver works on `O(sqrt(n))` entries instead of `O(omega n)`.
pub fn eigendecompose(block: &ExcitationBlock) -> BlockEigensystem {
    let dim = block.matrix.nrows();
    let offset = if dim > 0 {
        block.matrix.diagonal().iter().map(|d| d.re).sum::<f64>() / dim as f64
    } else {
        0.0
    };
    let mut shifted = block.matrix.clone();
    for i in 0..dim {
        shifted[(i, i)] -= C64::new(offset, 0.0);
    }
    let eig = SymmetricEigen::new(shifted);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues =
        DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k] + offset));
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    BlockEigensystem {
        eigenvalues,
        eigenvectors,
    }
}

/// Cached block eigensystems for one parameter set. Immutable once built, so a
/// single propagator can be shared between threads.
#[derive(Clone, Debug)]
pub struct Propagator {
    params: SystemParams,
    layout: BlockLayout,
    blocks: Vec<(ExcitationBlock, BlockEigensystem)>,
}

impl Propagator {
    pub fn new(params: &SystemParams) -> Result<Self> {
        Self::with_layout(params, BlockLayout::for_params(params))
    }

    pub fn with_layout(params: &SystemParams, layout: BlockLayout) -> Result<Self> {
        params.validate()?;
        let blocks = (0..=max_excitation(params.n_max))
            .into_par_iter()
            .map(|n| {
                let block = build_block_with(n, params, layout)?;
                let eig = eigendecompose(&block);
                Ok((block, eig))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: params.clone(),
            layout,
            blocks,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn block(&self, n: usize) -> Option<&(ExcitationBlock, BlockEigensystem)> {
        self.blocks.get(n)
    }

    /// `exp(-i H t)` applied to `state`.
    pub fn evolve(&self, state: &TripartiteState, t: f64) -> Result<TripartiteState> {
        if state.truncation() != self.params.n_max {
            return Err(Error::TruncationMismatch {
                left: state.truncation(),
                right: self.params.n_max,
            });
        }
        let mut out = TripartiteState::zeros(self.params.n_max);
        if self.layout == BlockLayout::Reduced {
            let src = state.branch(Branch::PsiMinus).amplitudes();
            let dst = out.branch_mut(Branch::PsiMinus).amplitudes_mut();
            for (m, (d, s)) in dst.iter_mut().zip(src).enumerate() {
                *d = s * C64::from_polar(1.0, -self.params.omega * m as f64 * t);
            }
        }
        for (block, eig) in &self.blocks {
            let v = DVector::from_iterator(
                block.labels.len(),
                block
                    .labels
                    .iter()
                    .map(|&(b, m)| state.branch(b).amplitudes()[m]),
            );
            let u = &eig.eigenvectors;
            let mut w = u.adjoint() * v;
            for (k, x) in w.iter_mut().enumerate() {
                *x *= C64::from_polar(1.0, -eig.eigenvalues[k] * t);
            }
            let v = u * w;
            for (&(b, m), x) in block.labels.iter().zip(v.iter()) {
                out.branch_mut(b).amplitudes_mut()[m] = *x;
            }
        }
        Ok(out)
    }
}

/// One-shot exact evolution; build a [`Propagator`] when evolving repeatedly.
pub fn evolve(state: &TripartiteState, params: &SystemParams, t: f64) -> Result<TripartiteState> {
    Propagator::new(params)?.evolve(state, t)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimescaleCheck {
    /// `max_j (1/2) |d^2 E_j / dn^2| t nbar / (2 pi)`.
    pub ratio: f64,
    pub valid: bool,
}

/// Checks that the quadratic photon-number dependence of the eigenvalues,
/// neglected by the linearized spectrum, has not yet dephased the field at
/// time `t`. Curvatures come from second differences of exact eigenvalues of
/// the identical-qubit blocks around `nbar`.
pub fn validate_timescale(
    params: &SystemParams,
    mean_photon_number: f64,
    t: f64,
) -> TimescaleCheck {
    let n0 = (mean_photon_number.round() as usize).max(3);
    let sym = SystemParams::symmetric(params.omega, params.delta, params.theta, n0 + 1);
    let energies: Vec<DVector<f64>> = (n0 - 1..=n0 + 1)
        .map(|n| {
            let block =
                build_block_with(n, &sym, BlockLayout::Reduced).expect("valid symmetric block");
            eigendecompose(&block).eigenvalues
        })
        .collect();
    let curvature = (0..3)
        .map(|j| (energies[2][j] - 2.0 * energies[1][j] + energies[0][j]).abs())
        .fold(0.0, f64::max);
    let ratio = 0.5 * curvature * t.abs() * mean_photon_number / (2.0 * std::f64::consts::PI);
    TimescaleCheck {
        ratio,
        valid: ratio < TIMESCALE_RATIO_LIMIT,
    }
}
