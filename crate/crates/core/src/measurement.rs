//! Photonic postselection and phase-space diagnostics of the cavity field.
//!
//! Quadratures follow `x_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)`,
//! so a coherent state `|alpha>` read at `theta = arg(alpha)` is a Gaussian of
//! variance 1/2 centred on `sqrt(2) |alpha|`. Phase-space points are written
//! `beta = e^{i theta} (q + i p) / sqrt(2)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::hilbert::{
    make_coherent, Branch, CoherentSpec, FockVector, QubitPairState, TripartiteState,
};
use crate::{Error, Result, C64};

/// Probability mass that a quadrature grid may miss.
pub const GRID_MASS_LIMIT: f64 = 1e-8;

/// Reduced field state `sum_b |chi_b><chi_b|` with unit weights, one pure
/// (sub-normalized) component per register branch.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMixture {
    components: Vec<FockVector>,
}

impl FieldMixture {
    pub fn new(components: Vec<FockVector>) -> Result<Self> {
        let first = components.first().ok_or_else(|| {
            Error::InvalidParameter("a field mixture needs at least one component".into())
        })?;
        for c in &components[1..] {
            if c.truncation() != first.truncation() {
                return Err(Error::TruncationMismatch {
                    left: first.truncation(),
                    right: c.truncation(),
                });
            }
        }
        Ok(Self { components })
    }

    pub fn pure(field: FockVector) -> Self {
        Self {
            components: vec![field],
        }
    }

    /// Traces out the two-qubit register.
    pub fn from_state(state: &TripartiteState) -> Self {
        Self {
            components: state.branches().to_vec(),
        }
    }

    pub fn components(&self) -> &[FockVector] {
        &self.components
    }

    pub fn truncation(&self) -> usize {
        self.components[0].truncation()
    }

    pub fn trace(&self) -> f64 {
        self.components.iter().map(FockVector::norm_sqr).sum()
    }
}

/// Projects the field on `|alpha e^{-i rotation}>` (the target rotated by the
/// free field evolution `omega tau`). Returns the unnormalized register state
/// and the success probability.
pub fn postselect_coherent(
    state: &TripartiteState,
    target: &CoherentSpec,
    rotation: f64,
) -> Result<(QubitPairState, f64)> {
    let field = make_coherent(&target.rotated(-rotation), state.truncation())?;
    let mut amplitudes = [C64::new(0.0, 0.0); 4];
    for b in Branch::ALL {
        amplitudes[b.index()] = field.inner(state.branch(b))?;
    }
    let q = QubitPairState { amplitudes };
    let p = q.norm_sqr();
    Ok((q, p))
}

/// Hermite functions `u_0(q) ..= u_{n_max}(q)`, normalized on the real line,
/// with `u_0 = pi^{-1/4} e^{-q^2/2}`. The upward recursion is carried with a
/// separate log scale so neither overflow nor early underflow occurs.
pub fn hermite_functions(q: f64, n_max: usize) -> Vec<f64> {
    const RESCALE: f64 = 1e150;
    let mut out = vec![0.0; n_max + 1];
    let mut log_scale = -0.5 * q * q;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let emit = |v: f64, log_scale: f64| {
        if v == 0.0 {
            0.0
        } else {
            v.signum() * (v.abs().ln() + log_scale).exp()
        }
    };
    out[0] = emit(cur, log_scale);
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[n + 1] = emit(cur, log_scale);
    }
    out
}

/// `<q_theta|field>`.
pub fn quadrature_wavefunction(field: &FockVector, theta: f64, q: f64) -> C64 {
    let u = hermite_functions(q, field.truncation());
    field
        .amplitudes()
        .iter()
        .zip(&u)
        .enumerate()
        .map(|(n, (a, un))| a * C64::from_polar(*un, -(n as f64) * theta))
        .sum()
}

fn check_uniform(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "a grid needs at least two points".into(),
        ));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0)
        || grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0))
    {
        return Err(Error::InvalidParameter(
            "grid must be uniform and increasing".into(),
        ));
    }
    Ok(step)
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + i as f64 * step).collect()
}

/// Quadrature distribution `P(q) = sum_b |<q_theta|chi_b>|^2` on a uniform
/// grid. Fails when the grid misses more than [`GRID_MASS_LIMIT`] of the
/// trace.
pub fn quadrature_distribution(
    fields: &FieldMixture,
    theta: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let step = check_uniform(grid)?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&q| {
            fields
                .components()
                .iter()
                .map(|f| quadrature_wavefunction(f, theta, q).norm_sqr())
                .sum()
        })
        .collect();
    let integral = trapezoid(&values, step);
    let mass = fields.trace() - integral;
    if mass > GRID_MASS_LIMIT {
        return Err(Error::GridTooSmall { mass });
    }
    Ok(values)
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Rectangular `(q, p)` grid in a frame rotated by `frame_angle`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub q_points: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
    #[serde(default)]
    pub frame_angle: f64,
}

impl WignerGridSpec {
    /// Square grid covering `+-(sqrt(2)|alpha| + 6)` in both quadratures.
    pub fn covering(alpha_abs: f64, points: usize, frame_angle: f64) -> Self {
        let r = 2f64.sqrt() * alpha_abs + 6.0;
        Self {
            q_min: -r,
            q_max: r,
            q_points: points,
            p_min: -r,
            p_max: r,
            p_points: points,
            frame_angle,
        }
    }

    pub fn q_values(&self) -> Vec<f64> {
        uniform_grid(self.q_min, self.q_max, self.q_points)
    }

    pub fn p_values(&self) -> Vec<f64> {
        uniform_grid(self.p_min, self.p_max, self.p_points)
    }

    pub fn q_step(&self) -> f64 {
        (self.q_max - self.q_min) / (self.q_points - 1) as f64
    }

    pub fn p_step(&self) -> f64 {
        (self.p_max - self.p_min) / (self.p_points - 1) as f64
    }

    pub fn beta(&self, q: f64, p: f64) -> C64 {
        C64::from_polar(1.0, self.frame_angle) * C64::new(q, p) * FRAC_1_SQRT_2
    }

    fn validate(&self) -> Result<()> {
        if self.q_points < 2
            || self.p_points < 2
            || !(self.q_max > self.q_min)
            || !(self.p_max > self.p_min)
        {
            return Err(Error::InvalidParameter(
                "Wigner grid needs increasing ranges and at least 2x2 points".into(),
            ));
        }
        Ok(())
    }
}

/// Wigner function values, normalized so that `int W d^2 beta = trace`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub spec: WignerGridSpec,
    /// Row-major, `values[i * p_points + j]` at `(q_i, p_j)`.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.p_points + j]
    }

    /// `int W d^2 beta`, with `d^2 beta = dq dp / 2`.
    pub fn integral(&self) -> f64 {
        0.5 * self.spec.q_step() * self.spec.p_step() * self.values.iter().sum::<f64>()
    }

    /// Quadrature distribution along `frame_angle`, `P(q) = (1/2) int W dp`.
    pub fn marginal(&self) -> Vec<f64> {
        let dp = self.spec.p_step();
        self.values
            .chunks(self.spec.p_points)
            .map(|row| 0.5 * dp * row.iter().sum::<f64>())
            .collect()
    }

    /// `(q, p, Re beta, Im beta, W)` for every grid point.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        let qs = self.spec.q_values();
        let ps = self.spec.p_values();
        qs.into_iter().enumerate().flat_map(move |(i, q)| {
            let ps = ps.clone();
            ps.into_iter().enumerate().map(move |(j, p)| {
                let b = self.spec.beta(q, p);
                [q, p, b.re, b.im, self.value(i, j)]
            })
        })
    }
}

/// Largest photon number carrying non-negligible amplitude.
fn effective_photon_cutoff(fields: &FieldMixture) -> usize {
    fields
        .components()
        .iter()
        .filter_map(|f| f.amplitudes().iter().rposition(|a| a.norm_sqr() > 1e-18))
        .max()
        .unwrap_or(0)
}

/// Wigner function on a grid, evaluated from the quadrature wavefunctions as
/// `W(q, p) = (2/pi) int psi*(q + y) psi(q - y) e^{2 i p y} dy` per component.
/// This is the displaced-parity expectation written in the quadrature
/// representation; the integral is a trapezoid sum on a sub-grid of step at
/// most 0.04, far finer than the field's oscillation length up to `N_max`.
pub fn wigner(fields: &FieldMixture, spec: &WignerGridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let dq = spec.q_step();
    let oversample = (dq / 0.04).ceil().max(1.0) as usize;
    let h = dq / oversample as f64;
    let support = (2.0 * effective_photon_cutoff(fields) as f64 + 1.0).sqrt() + 8.0;
    let reach = support + spec.q_min.abs().max(spec.q_max.abs());
    let pad = (reach / h).ceil() as usize;
    let fine_len = (spec.q_points - 1) * oversample + 1 + 2 * pad;
    let x0 = spec.q_min - pad as f64 * h;
    let wavefunctions: Vec<Vec<C64>> = fields
        .components()
        .iter()
        .map(|f| {
            (0..fine_len)
                .into_par_iter()
                .map(|i| {
                    let x = x0 + i as f64 * h;
                    if x.abs() > support {
                        C64::new(0.0, 0.0)
                    } else {
                        quadrature_wavefunction(f, spec.frame_angle, x)
                    }
                })
                .collect()
        })
        .collect();
    let ps = spec.p_values();
    let values: Vec<f64> = (0..spec.q_points)
        .into_par_iter()
        .flat_map_iter(|i| {
            let centre = pad + i * oversample;
            let mut row = vec![0.0; ps.len()];
            for psi in &wavefunctions {
                let products: Vec<C64> = (1..=pad)
                    .map(|k| psi[centre + k].conj() * psi[centre - k])
                    .collect();
                let last = products
                    .iter()
                    .rposition(|z| z.norm() > 1e-300)
                    .map_or(0, |k| k + 1);
                let diag = psi[centre].norm_sqr();
                for (w, &p) in row.iter_mut().zip(&ps) {
                    let step = C64::from_polar(1.0, 2.0 * p * h);
                    let mut phase = step;
                    let mut acc = C64::new(0.0, 0.0);
                    for z in &products[..last] {
                        acc += z * phase;
                        phase *= step;
                    }
                    *w += 2.0 / PI * h * (diag + 2.0 * acc.re);
                }
            }
            row
        })
        .collect();
    Ok(WignerGrid {
        spec: *spec,
        values,
    })
}

/// Largest `|W|` within `radius` of the midpoint between `centre` and each of
/// `others`, relative to the largest `W` within `radius` of `centre`.
pub fn fringe_contrast(grid: &WignerGrid, centre: C64, others: &[C64], radius: f64) -> f64 {
    let mut peak: f64 = 0.0;
    let mut fringe: f64 = 0.0;
    let mids: Vec<C64> = others.iter().map(|o| (centre + o) * 0.5).collect();
    for row in grid.rows() {
        let b = C64::new(row[2], row[3]);
        if (b - centre).norm() <= radius {
            peak = peak.max(row[4]);
        }
        if mids.iter().any(|m| (b - m).norm() <= radius) {
            fringe = fringe.max(row[4].abs());
        }
    }
    fringe / peak
}

/// Balanced homodyne settings; all quadratures in the `x_theta` units above.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneConfig {
    /// Local-oscillator phase `theta_L`.
    pub lo_phase: f64,
    /// `|alpha_L|`.
    pub lo_amplitude: f64,
    /// Half-width `delta_L` of the accepted quadrature window.
    pub half_width: f64,
    /// Window centre `q~`.
    pub target: f64,
}

impl HomodyneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window half-width must be > 0, got {}",
                self.half_width
            )));
        }
        if !(self.lo_amplitude >= 0.0) {
            return Err(Error::InvalidParameter(
                "local-oscillator amplitude must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Strong-oscillator condition `|alpha_L| >= 100 |alpha|` under which the
    /// photocurrent difference reads the quadrature.
    pub fn gaussian_limit_holds(&self, field_amplitude: f64) -> bool {
        self.lo_amplitude >= 100.0 * field_amplitude
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowAcceptance {
    /// `erf(delta_L)`.
    pub probability: f64,
    /// `1 - e^{-delta_L^2} / (sqrt(pi) delta_L)`.
    pub lower_bound: f64,
}

/// Probability that a coherent state centred in the window is accepted.
pub fn window_accept(half_width: f64) -> WindowAcceptance {
    if half_width <= 0.0 {
        return WindowAcceptance {
            probability: 0.0,
            lower_bound: f64::NEG_INFINITY,
        };
    }
    WindowAcceptance {
        probability: erf(half_width),
        lower_bound: 1.0 - (-half_width * half_width).exp() / (PI.sqrt() * half_width),
    }
}

/// Windowed quadrature acceptance `int_{q~-delta_L}^{q~+delta_L} P(q) dq`
/// for an arbitrary field mixture (composite Simpson rule).
pub fn windowed_acceptance(fields: &FieldMixture, config: &HomodyneConfig) -> Result<f64> {
    config.validate()?;
    const INTERVALS: usize = 2000;
    let a = config.target - config.half_width;
    let h = 2.0 * config.half_width / INTERVALS as f64;
    let total: f64 = (0..=INTERVALS)
        .into_par_iter()
        .map(|i| {
            let q = a + i as f64 * h;
            let weight = if i == 0 || i == INTERVALS {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let p: f64 = fields
                .components()
                .iter()
                .map(|f| quadrature_wavefunction(f, config.lo_phase, q).norm_sqr())
                .sum();
            weight * p
        })
        .sum();
    Ok(total * h / 3.0)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeWindow {
    /// Largest half-width that keeps the interference fringes outside the window.
    pub max_half_width: f64,
    /// Quadrature at which the fringes sit.
    pub fringe_centre: f64,
}

/// `delta_L < (|alpha| / sqrt 2) sin^2(pi tau / tau_r)`, fringes at
/// `sqrt(2) |alpha| cos^2(pi tau / tau_r)`.
pub fn fringe_safe_window(tau: f64, tau_r: f64, alpha_abs: f64) -> FringeWindow {
    let x = PI * tau / tau_r;
    FringeWindow {
        max_half_width: alpha_abs * FRAC_1_SQRT_2 * x.sin().powi(2),
        fringe_centre: 2f64.sqrt() * alpha_abs * x.cos().powi(2),
    }
}

/// `<n|D(gamma)|k>` for `n = 0..=rows-1`, `k = 0..=cols-1`, from the
/// associated-Laguerre closed form with log-space prefactors.
pub fn displacement_matrix(gamma: C64, rows: usize, cols: usize) -> Vec<Vec<C64>> {
    let x = gamma.norm_sqr();
    let log_abs = if x > 0.0 {
        0.5 * x.ln()
    } else {
        f64::NEG_INFINITY
    };
    let arg = gamma.arg();
    let laguerre = |degree: usize, order: usize| -> f64 {
        let a = order as f64;
        let (mut l0, mut l1) = (1.0, 1.0 + a - x);
        if degree == 0 {
            return 1.0;
        }
        for j in 1..degree {
            let jf = j as f64;
            let next = ((2.0 * jf + 1.0 + a - x) * l1 - (jf + a) * l0) / (jf + 1.0);
            l0 = l1;
            l1 = next;
        }
        l1
    };
    (0..rows)
        .map(|n| {
            (0..cols)
                .map(|k| {
                    let (lo, hi) = (n.min(k), n.max(k));
                    let l = laguerre(lo, hi - lo);
                    if l == 0.0 {
                        return C64::new(0.0, 0.0);
                    }
                    let power = (hi - lo) as f64;
                    let log_pre = if power == 0.0 {
                        -0.5 * x
                    } else if x == 0.0 {
                        return C64::new(0.0, 0.0);
                    } else {
                        -0.5 * x
                            + 0.5 * (ln_gamma(lo as f64 + 1.0) - ln_gamma(hi as f64 + 1.0))
                            + power * log_abs
                    };
                    let sign = if n < k && (k - n) % 2 == 1 { -1.0 } else { 1.0 };
                    C64::from_polar(
                        sign * l.signum() * (log_pre + l.abs().ln()).exp(),
                        (n as f64 - k as f64) * arg,
                    )
                })
                .collect()
        })
        .collect()
}

/// Exact photocount-difference statistics of a unit-efficiency balanced
/// homodyne detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterCounts {
    /// Smallest `n_- = n_2 - n_1` represented in `probabilities`.
    pub min_difference: i64,
    pub probabilities: Vec<f64>,
    pub lo_amplitude: f64,
    /// Probability lost to the joint truncation.
    pub truncation_loss: f64,
}

impl BeamSplitterCounts {
    /// `(q, P(q)/dq)` with `q = n_- / (sqrt(2) |alpha_L|)`, as a density.
    pub fn rescaled(&self) -> Vec<(f64, f64)> {
        let scale = 2f64.sqrt() * self.lo_amplitude;
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| ((self.min_difference + i as i64) as f64 / scale, p * scale))
            .collect()
    }

    /// Total-variation distance to a continuous law `density(q)`, with each
    /// count bin weighted by the density at its centre times the bin width.
    pub fn tv_distance(&self, density: impl Fn(f64) -> f64) -> f64 {
        let scale = 2f64.sqrt() * self.lo_amplitude;
        let dq = 1.0 / scale;
        let inside: f64 = self.rescaled().iter().map(|&(q, _)| density(q) * dq).sum();
        let diff: f64 = self
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (p - density((self.min_difference + i as i64) as f64 / scale) * dq).abs())
            .sum();
        0.5 * (diff + (1.0 - inside).abs())
    }
}

/// Output photon-number distributions of a 50/50 beam splitter mixing the
/// field with a coherent local oscillator, reduced to the difference
/// `n_- = n_2 - n_1`. The splitter maps `a_S^dag -> (c_2^dag - c_1^dag)/sqrt 2`
/// and `a_L^dag -> (c_1^dag + c_2^dag)/sqrt 2`, so the oscillator becomes the
/// product displacement `D_1(gamma) D_2(gamma)` with `gamma = alpha_L / sqrt 2`.
/// `joint_truncation` bounds each output port's photon number.
pub fn beam_splitter_counts(
    field: &FockVector,
    lo: &CoherentSpec,
    joint_truncation: usize,
) -> Result<BeamSplitterCounts> {
    let n_field = field
        .amplitudes()
        .iter()
        .rposition(|a| a.norm_sqr() > 0.0)
        .unwrap_or(0);
    if joint_truncation < n_field {
        return Err(Error::InvalidParameter(format!(
            "joint truncation {joint_truncation} is below the field's photon content {n_field}"
        )));
    }
    let gamma = lo.alpha() * FRAC_1_SQRT_2;
    // B[k][l]: amplitude of |k>_1 |l>_2 before the displacement
    let ln_fact: Vec<f64> = (0..=n_field).map(|m| ln_gamma(m as f64 + 1.0)).collect();
    let mut b = vec![vec![C64::new(0.0, 0.0); n_field + 1]; n_field + 1];
    for (m, a) in field.amplitudes().iter().enumerate().take(n_field + 1) {
        for k in 0..=m {
            let binom = (0.5 * (ln_fact[m] - ln_fact[k] - ln_fact[m - k])
                - 0.5 * m as f64 * 2f64.ln())
            .exp();
            let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
            b[k][m - k] = a * (sign * binom);
        }
    }
    let rows = joint_truncation + 1;
    let d = displacement_matrix(gamma, rows, n_field + 1);
    // X = D B, then A = X D^T
    let x: Vec<Vec<C64>> = d
        .iter()
        .map(|drow| {
            (0..=n_field)
                .map(|l| (0..=n_field).map(|k| drow[k] * b[k][l]).sum())
                .collect()
        })
        .collect();
    let probs: Vec<Vec<f64>> = x
        .par_iter()
        .map(|xrow| {
            d.iter()
                .map(|drow| {
                    xrow.iter()
                        .zip(drow)
                        .map(|(u, v)| u * v)
                        .sum::<C64>()
                        .norm_sqr()
                })
                .collect()
        })
        .collect();
    let size = rows as i64;
    let mut diff = vec![0.0; 2 * rows - 1];
    let mut total = 0.0;
    for (n1, row) in probs.iter().enumerate() {
        for (n2, p) in row.iter().enumerate() {
            diff[(n2 as i64 - n1 as i64 + size - 1) as usize] += p;
            total += p;
        }
    }
    let truncation_loss = field.norm_sqr() - total;
    if truncation_loss > 1e-10 {
        return Err(Error::TruncationTooSmall {
            n_max: joint_truncation,
            tail: truncation_loss,
            limit: 1e-10,
        });
    }
    Ok(BeamSplitterCounts {
        min_difference: -(size - 1),
        probabilities: diff,
        lo_amplitude: lo.amplitude(),
        truncation_loss,
    })
}

/// Joint truncation that holds the displaced oscillator plus the field's
/// photons to well below `1e-10` loss.
pub fn default_joint_truncation(lo_mean_photon_number: f64, field_cutoff: usize) -> usize {
    let half = lo_mean_photon_number / 2.0 + field_cutoff as f64;
    (half + 12.0 * half.sqrt() + 20.0).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Propagator, SystemParams};
    use crate::hilbert::{compose, default_truncation};
    use proptest::prelude::*;

    fn gaussian(q: f64, centre: f64) -> f64 {
        (-(q - centre).powi(2)).exp() / PI.sqrt()
    }

    #[test]
    fn hermite_functions_match_closed_forms() {
        for q in [-3.0, -0.4, 0.0, 1.1, 2.5] {
            let u = hermite_functions(q, 3);
            let g = PI.powf(-0.25) * (-q * q / 2.0f64).exp();
            assert!((u[0] - g).abs() < 1e-15);
            assert!((u[1] - 2f64.sqrt() * q * g).abs() < 1e-15);
            assert!((u[2] - (2.0 * q * q - 1.0) / 2f64.sqrt() * g).abs() < 1e-14);
        }
        // high orders stay finite and normalized
        let grid = uniform_grid(-30.0, 30.0, 6001);
        let h = grid[1] - grid[0];
        let norm: f64 = grid
            .iter()
            .map(|&q| hermite_functions(q, 250)[250].powi(2))
            .sum::<f64>()
            * h;
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn postselection_of_unevolved_state() {
        let q = QubitPairState::new(
            C64::new(0.5, 0.1),
            C64::new(0.1, -0.6),
            C64::new(0.3, 0.0),
            C64::new(-0.2, 0.4),
        )
        .normalized()
        .unwrap();
        let spec = CoherentSpec::new(20.0, 0.8).unwrap();
        let s = compose(&q, &make_coherent(&spec, 80).unwrap()).unwrap();
        let (out, p) = postselect_coherent(&s, &spec, 0.0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        for (a, b) in out.amplitudes.iter().zip(&q.amplitudes) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn postselection_keeps_the_invariant_singlet() {
        let spec = CoherentSpec::from_alpha(C64::from_polar(7.6, 2.65));
        let p = SystemParams::symmetric(0.6, 3.5, 0.0, 200);
        let s = compose(
            &QubitPairState::basis(Branch::PsiMinus),
            &make_coherent(&spec, 200).unwrap(),
        )
        .unwrap();
        let prop = Propagator::new(&p).unwrap();
        for t in [0.7, 12.2, 30.0] {
            let (out, prob) =
                postselect_coherent(&prop.evolve(&s, t).unwrap(), &spec, p.omega * t).unwrap();
            assert!(1.0 - prob < 1e-10);
            assert!(out.amplitudes[1..].iter().all(|a| a.norm() < 1e-12));
        }
    }

    #[test]
    fn coherent_and_vacuum_quadratures() {
        let grid = uniform_grid(-12.0, 16.0, 561);
        let alpha = C64::from_polar(3.0, 0.7);
        let field = make_coherent(&CoherentSpec::from_alpha(alpha), 60).unwrap();
        let p = quadrature_distribution(&FieldMixture::pure(field), 0.7, &grid).unwrap();
        for (q, v) in grid.iter().zip(&p) {
            assert!((v - gaussian(*q, 2f64.sqrt() * 3.0)).abs() < 1e-12);
        }
        let p = quadrature_distribution(&FieldMixture::pure(FockVector::vacuum(10)), 0.0, &grid)
            .unwrap();
        for (q, v) in grid.iter().zip(&p) {
            assert!((v - gaussian(*q, 0.0)).abs() < 1e-14);
        }
        let narrow = uniform_grid(-1.0, 1.0, 41);
        assert!(matches!(
            quadrature_distribution(&FieldMixture::pure(FockVector::vacuum(10)), 0.0, &narrow),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn coherent_wigner_function() {
        let alpha = C64::from_polar(2.0, -0.9);
        let field = make_coherent(&CoherentSpec::from_alpha(alpha), 50).unwrap();
        let spec = WignerGridSpec::covering(2.0, 61, 0.3);
        let w = wigner(&FieldMixture::pure(field), &spec).unwrap();
        for row in w.rows() {
            let b = C64::new(row[2], row[3]);
            let expected = 2.0 / PI * (-2.0 * (b - alpha).norm_sqr()).exp();
            assert!((row[4] - expected).abs() < 1e-10, "{row:?}");
        }
        assert!((w.integral() - 1.0).abs() < 0.02);
        let vac = wigner(
            &FieldMixture::pure(FockVector::vacuum(8)),
            &WignerGridSpec::covering(0.0, 41, 0.0),
        )
        .unwrap();
        for row in vac.rows() {
            let expected = 2.0 / PI * (-2.0 * (row[2] * row[2] + row[3] * row[3])).exp();
            assert!((row[4] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn window_values() {
        let w2 = window_accept(2.0);
        assert!((w2.probability - 0.9953222650).abs() < 1e-10);
        assert!(w2.probability >= w2.lower_bound);
        let w3 = window_accept(3.0);
        assert!((w3.probability - 0.9999779095).abs() < 1e-10);
        assert!(w3.probability >= w3.lower_bound);
        assert_eq!(window_accept(0.0).probability, 0.0);
        assert!(window_accept(1e-9).probability < 1e-8);
    }

    #[test]
    fn numeric_window_matches_erf_for_coherent_state() {
        let field = make_coherent(&CoherentSpec::new(4.0, 0.2).unwrap(), 40).unwrap();
        for half_width in [0.5, 2.0, 3.0] {
            let config = HomodyneConfig {
                lo_phase: 0.2,
                lo_amplitude: 1000.0,
                half_width,
                target: 2f64.sqrt() * 2.0,
            };
            let acc = windowed_acceptance(&FieldMixture::pure(field.clone()), &config).unwrap();
            assert!((acc - erf(half_width)).abs() < 1e-10);
        }
    }

    #[test]
    fn fringe_windows() {
        let tau_r = 48.8;
        let w = fringe_safe_window(tau_r / 4.0, tau_r, 7.6);
        assert!((w.max_half_width - 2.68701).abs() < 5e-6);
        assert_eq!(fringe_safe_window(0.0, tau_r, 7.6).max_half_width, 0.0);
        assert!(
            (fringe_safe_window(tau_r / 2.0, tau_r, 7.6).max_half_width - 7.6 / 2f64.sqrt()).abs()
                < 1e-14
        );
    }

    #[test]
    fn displacement_matrix_is_unitary_on_low_columns() {
        let gamma = C64::from_polar(200f64.sqrt(), 0.4);
        let d = displacement_matrix(gamma, 520, 25);
        for k in 0..25 {
            for l in 0..25 {
                let ip: C64 = d.iter().map(|row| row[k].conj() * row[l]).sum();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-10, "({k},{l}) -> {ip}");
            }
        }
        // first column is the coherent state |gamma>
        let coh = make_coherent(&CoherentSpec::from_alpha(gamma), 519).unwrap();
        for (row, a) in d.iter().zip(coh.amplitudes()) {
            assert!((row[0] - a).norm() < 1e-13);
        }
    }

    #[test]
    fn vacuum_counts_are_skellam() {
        let lo = CoherentSpec::new(100.0, 0.0).unwrap();
        let counts = beam_splitter_counts(
            &FockVector::vacuum(4),
            &lo,
            default_joint_truncation(100.0, 0),
        )
        .unwrap();
        let mean: f64 = counts
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (counts.min_difference + i as i64) as f64 * p)
            .sum();
        let var: f64 = counts
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| ((counts.min_difference + i as i64) as f64 - mean).powi(2) * p)
            .sum();
        assert!(mean.abs() < 1e-10);
        assert!((var - 100.0).abs() < 1e-6);
        // two independent Poisson(50) ports
        let mu: f64 = 50.0;
        let poisson = |n: i64| {
            if n < 0 {
                0.0
            } else {
                (-mu + n as f64 * mu.ln() - ln_gamma(n as f64 + 1.0)).exp()
            }
        };
        for m in [-8i64, 0, 5] {
            let skellam: f64 = (0..400).map(|n1| poisson(n1) * poisson(n1 + m)).sum();
            let p = counts.probabilities[(m - counts.min_difference) as usize];
            assert!((p - skellam).abs() < 1e-12, "m={m} p={p} skellam={skellam}");
        }
    }

    #[test]
    fn coherent_counts_have_the_quadrature_mean() {
        let alpha = C64::from_polar(1.5, 0.3);
        let field =
            make_coherent(&CoherentSpec::from_alpha(alpha), default_truncation(2.25)).unwrap();
        let lo = CoherentSpec::new(100.0, 0.3).unwrap();
        let counts = beam_splitter_counts(
            &field,
            &lo,
            default_joint_truncation(100.0, field.truncation()),
        )
        .unwrap();
        let mean_q: f64 =
            counts.rescaled().iter().map(|(q, d)| q * d).sum::<f64>() / (2f64.sqrt() * 10.0);
        assert!((mean_q - 2f64.sqrt() * 1.5).abs() < 1e-8);
    }

    fn arb_mixture() -> impl Strategy<Value = FieldMixture> {
        proptest::collection::vec(
            (
                0.0f64..2.5,
                -3.2f64..3.2,
                -1.0f64..1.0,
                -1.0f64..1.0,
                0usize..4,
            ),
            1..4,
        )
        .prop_map(|parts| {
            let comps = parts
                .into_iter()
                .map(|(r, ph, wr, wi, fock)| {
                    let mut f =
                        make_coherent(&CoherentSpec::from_alpha(C64::from_polar(r, ph)), 40)
                            .unwrap();
                    f.add_scaled(C64::new(0.5, 0.2), &FockVector::number_state(fock, 40));
                    f.scaled(C64::new(wr, wi))
                })
                .collect();
            FieldMixture::new(comps).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn wigner_marginal_is_the_quadrature_distribution(fields in arb_mixture(), theta in -3.2f64..3.2) {
            prop_assume!(fields.trace() > 1e-3);
            let spec = WignerGridSpec::covering(2.5, 81, theta);
            let w = wigner(&fields, &spec).unwrap();
            let grid = spec.q_values();
            let p = quadrature_distribution(&fields, theta, &grid).unwrap();
            let l1: f64 = w.marginal().iter().zip(&p).map(|(a, b)| (a - b).abs()).sum::<f64>() * spec.q_step();
            prop_assert!(l1 <= 0.01 * fields.trace(), "L1 = {l1}");
        }
    }
}
