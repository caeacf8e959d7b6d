//! One runner per experiment kind.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use tavis_core::analytic::{
    asym_boundary, asym_frequencies, coefficient_vector, eta, fidelity_maximum,
    first_fidelity_minimum, plateau_overlap, SpectralFrequencies,
};
use tavis_core::hamiltonian::Propagator;
use tavis_core::hilbert::{
    default_truncation, make_coherent, Branch, CoherentSpec, FockVector, QubitPairState,
    TripartiteState,
};
use tavis_core::measurement::{
    beam_splitter_counts, default_joint_truncation, fringe_contrast, quadrature_distribution,
    quadrature_wavefunction, wigner, window_accept, WignerGridSpec,
};
use tavis_core::protocols::{BellProjector, ProtocolOutcome};
use tavis_core::sampling::HaarSampler;
use tavis_core::{Error, C64};

use crate::config::{
    polar, signal_mean_photon_number, ExperimentConfig, ExperimentKind, Resolved, SignalState,
    WignerStage,
};
use crate::error::RunError;
use crate::output::{output_dir, write_bundle, Cell, RunResult, Table};

/// Radius (in `|beta|` units) of the disks probed for peaks and fringes.
pub const FRINGE_RADIUS: f64 = 0.5;

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let resolved = config.validate()?;
    match config.kind {
        ExperimentKind::Overlaps => overlaps(config, &resolved),
        ExperimentKind::Wigner => wigner_run(config, &resolved),
        ExperimentKind::BellProjection => bell_batch(config, &resolved),
        ExperimentKind::Teleport => teleport_batch(config, &resolved),
        ExperimentKind::Swap => swap_run(config, &resolved),
        ExperimentKind::AsymSweep => asym_sweep(config, &resolved),
        ExperimentKind::HomodyneConvergence => homodyne_convergence(config),
    }
}

/// Runs `config` and writes its bundle; returns the output directory.
pub fn run_and_write(config: &ExperimentConfig) -> Result<std::path::PathBuf, RunError> {
    let start = Instant::now();
    let result = run_experiment(config)?;
    let dir = output_dir(config);
    write_bundle(&dir, config, &result, start.elapsed().as_secs_f64())?;
    Ok(dir)
}

fn overlaps(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let o = config.overlaps_section()?;
    let q = config.register_state()?;
    let p = &r.params;
    let prop = Propagator::new(p)?;
    let initial = TripartiteState::product(&q, &make_coherent(&r.field, p.n_max)?);
    let c = coefficient_vector(&q);
    let nbar = r.field.mean_photon_number;
    let formula = |j: i32, t: f64| match plateau_overlap(j, t, c, r.field.phase, p, nbar) {
        Ok(v) => Ok(v),
        Err(Error::OutsidePlateau { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    };
    let rows: Vec<Vec<Cell>> = (0..o.points)
        .into_par_iter()
        .map(|k| -> Result<Vec<Cell>, Error> {
            let t = o.t_max_over_revival * r.tau_r * k as f64 / (o.points - 1) as f64;
            let state = prop.evolve(&initial, t)?;
            let target = make_coherent(&r.field.rotated(-p.omega * t), p.n_max)?;
            let mut row = vec![Cell::from(t)];
            for b in [Branch::ZeroZero, Branch::PsiPlus, Branch::OneOne] {
                row.push(target.inner(state.branch(b))?.norm_sqr().into());
            }
            row.push(formula(0, t)?.into());
            row.push(formula(1, t)?.into());
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(
        "overlaps",
        &[
            "t [1/g]",
            "overlap j=-1 [1]",
            "overlap j=0 [1]",
            "overlap j=1 [1]",
            "plateau formula j=0 [1]",
            "plateau formula j=1 [1]",
        ],
    );
    rows.into_iter().for_each(|row| table.push(row));
    let eta_sq = eta(c, r.field.phase, p, nbar).norm_sqr();
    Ok(RunResult {
        tables: vec![table],
        summary: json!({ "tau_r": r.tau_r, "tau_c": r.tau_c, "eta_abs_sq": eta_sq }),
        outcomes: None,
    })
}

/// Phase-space positions of the freely rotating (singlet) peak and the two
/// `k = +-1` peaks after an interaction time `tau`.
fn peak_positions(target: &CoherentSpec, delta: f64, tau: f64) -> (C64, Vec<C64>) {
    let f = SpectralFrequencies::new(target.mean_photon_number, delta);
    let centre = target.alpha();
    let others = [-1, 1]
        .iter()
        .map(|&k| centre * C64::from_polar(1.0, -f.dispersion(k) * tau))
        .collect();
    (centre, others)
}

fn wigner_run(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let w = config.wigner_section()?;
    let q = config.register_state()?;
    let pc = config.protocol_config(r)?;
    let projector = BellProjector::new(&pc)?;
    let targets = projector.target_specs();
    let (state, target, first_probability) = match w.stage {
        WignerStage::First => (projector.first_evolved(&[q])?, targets[0], None),
        WignerStage::Ramsey => {
            let (reg, p) = projector.first_stage(&[q])?;
            let normalized: Vec<QubitPairState> = reg
                .iter()
                .map(|x| x.scaled(C64::new(1.0 / p.sqrt(), 0.0)))
                .collect();
            (projector.second_evolved(&normalized)?, targets[1], Some(p))
        }
    };
    let fields = state.field_mixture();
    let spec = WignerGridSpec::covering(r.field.amplitude(), w.points, w.frame_angle);
    let grid = wigner(&fields, &spec)?;
    let q_values = spec.q_values();
    let marginal = grid.marginal();
    let direct = quadrature_distribution(&fields, w.frame_angle, &q_values)?;
    let l1: f64 = marginal
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * spec.q_step();
    let (centre, others) = peak_positions(&target, r.params.delta, pc.tau);
    let contrast = fringe_contrast(&grid, centre, &others, FRINGE_RADIUS);

    let mut wtable = Table::new(
        "wigner",
        &["q [1]", "p [1]", "Re beta [1]", "Im beta [1]", "W [1]"],
    );
    for row in grid.rows() {
        wtable.push(row.iter().map(|&x| Cell::from(x)).collect());
    }
    let mut mtable = Table::new(
        "marginal",
        &[
            "q [1]",
            "Wigner marginal [1]",
            "quadrature distribution [1]",
        ],
    );
    for ((qv, m), d) in q_values.iter().zip(&marginal).zip(&direct) {
        mtable.push(vec![(*qv).into(), (*m).into(), (*d).into()]);
    }
    Ok(RunResult {
        tables: vec![wtable, mtable],
        summary: json!({
            "integral": grid.integral(),
            "trace": fields.trace(),
            "marginal_l1": l1,
            "fringe_contrast": contrast,
            "centre_peak": [centre.re, centre.im],
            "side_peaks": others.iter().map(|o| [o.re, o.im]).collect::<Vec<_>>(),
            "first_probability": first_probability,
            "tau": pc.tau,
        }),
        outcomes: None,
    })
}

fn outcome_row(index: usize, weight: f64, o: &ProtocolOutcome) -> Vec<Cell> {
    vec![
        index.into(),
        weight.into(),
        o.first_probability.into(),
        o.second_probability.into(),
        o.total_probability.into(),
        o.fidelity.into(),
    ]
}

const OUTCOME_HEADERS: [&str; 6] = [
    "index",
    "reference [1]",
    "P [1]",
    "P' [1]",
    "P_T [1]",
    "F [1]",
];

fn batch_summary(
    outcomes: &[ProtocolOutcome],
    reference: &[f64],
    second_phase: f64,
    half_width: f64,
) -> serde_json::Value {
    let f_min = outcomes
        .iter()
        .map(|o| o.fidelity)
        .fold(f64::INFINITY, f64::min);
    let deviation = outcomes
        .iter()
        .zip(reference)
        .map(|(o, w)| (o.total_probability - w).abs())
        .fold(0.0, f64::max);
    let pt: Vec<f64> = outcomes.iter().map(|o| o.total_probability).collect();
    let spread = pt.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - pt.iter().cloned().fold(f64::INFINITY, f64::min);
    json!({
        "runs": outcomes.len(),
        "min_fidelity": f_min,
        "max_probability_deviation": deviation,
        "total_probability_spread": spread,
        "second_phase": second_phase,
        "window_acceptance_per_stage": window_accept(half_width).probability,
    })
}

fn bell_batch(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let runs = config.batch_section()?.runs;
    let pc = config.protocol_config(r)?;
    let projector = BellProjector::new(&pc)?;
    let mut rng = HaarSampler::new(config.seed);
    let inputs: Vec<QubitPairState> = (0..runs).map(|_| rng.qubit_pair()).collect();
    let outcomes: Vec<ProtocolOutcome> = inputs
        .par_iter()
        .map(|q| projector.run(std::slice::from_ref(q)))
        .collect::<Result<_, _>>()?;
    let weights: Vec<f64> = inputs.iter().map(|q| q.c_minus().norm_sqr()).collect();
    let mut headers = OUTCOME_HEADERS;
    headers[1] = "|c_-|^2 [1]";
    let mut table = Table::new("bell_projection", &headers);
    for (i, o) in outcomes.iter().enumerate() {
        table.push(outcome_row(i, weights[i], o));
    }
    let records: Vec<_> = inputs
        .iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(i, (q, o))| json!({ "index": i, "input": q, "outcome": o }))
        .collect();
    Ok(RunResult {
        tables: vec![table],
        summary: batch_summary(
            &outcomes,
            &weights,
            projector.second_phase(),
            pc.window_half_width,
        ),
        outcomes: Some(records.into()),
    })
}

fn teleport_batch(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let runs = config.batch_section()?.runs;
    let pc = config.protocol_config(r)?;
    let projector = BellProjector::new(&pc)?;
    let mut rng = HaarSampler::new(config.seed);
    let inputs: Vec<(C64, C64)> = (0..runs).map(|_| rng.qubit()).collect();
    let outcomes: Vec<ProtocolOutcome> = inputs
        .par_iter()
        .map(|&(a, b)| projector.teleport(a, b))
        .collect::<Result<_, _>>()?;
    let mut headers = OUTCOME_HEADERS;
    headers[1] = "|a|^2 [1]";
    let mut table = Table::new("teleport", &headers);
    for (i, o) in outcomes.iter().enumerate() {
        table.push(outcome_row(i, inputs[i].0.norm_sqr(), o));
    }
    let records: Vec<_> = inputs
        .iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(i, ((a, b), o))| json!({ "index": i, "a": a, "b": b, "outcome": o }))
        .collect();
    let quarter = vec![0.25; outcomes.len()];
    Ok(RunResult {
        tables: vec![table],
        summary: batch_summary(
            &outcomes,
            &quarter,
            projector.second_phase(),
            pc.window_half_width,
        ),
        outcomes: Some(records.into()),
    })
}

fn swap_run(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let pc = config.protocol_config(r)?;
    let projector = BellProjector::new(&pc)?;
    let signs = [true, false];
    let outcomes: Vec<ProtocolOutcome> = signs
        .par_iter()
        .map(|&s| projector.swap(s))
        .collect::<Result<_, _>>()?;
    let mut headers = OUTCOME_HEADERS;
    headers[0] = "sign";
    headers[1] = "reference [1]";
    let mut table = Table::new("swap", &headers);
    for (s, o) in signs.iter().zip(&outcomes) {
        let mut row = outcome_row(0, 0.25, o);
        row[0] = Cell::Int(if *s { 1 } else { -1 });
        table.push(row);
    }
    let records: Vec<_> = signs
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| json!({ "sign": if *s { "+" } else { "-" }, "outcome": o }))
        .collect();
    Ok(RunResult {
        tables: vec![table],
        summary: batch_summary(
            &outcomes,
            &[0.25, 0.25],
            projector.second_phase(),
            pc.window_half_width,
        ),
        outcomes: Some(records.into()),
    })
}

/// Indices of strict-left local extrema of `values` (plateaus count once).
pub fn local_extrema(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            maxima.push(i);
        }
        if values[i] < values[i - 1] && values[i] <= values[i + 1] {
            minima.push(i);
        }
    }
    (maxima, minima)
}

fn asym_sweep(config: &ExperimentConfig, r: &Resolved) -> Result<RunResult, RunError> {
    let sw = config.sweep_section()?;
    let q = config.register_state()?;
    let base = config.protocol_config(r)?;
    let nbar = r.field.mean_photon_number;
    let (delta, eps_delta) = (r.params.delta, r.params.eps_delta);
    let eps_max = sw.eps_g_max.unwrap_or(3.0 / nbar);
    let step = eps_max / (sw.points - 1) as f64;
    let grid: Vec<f64> = (0..sw.points).map(|k| k as f64 * step).collect();
    let outcomes: Vec<ProtocolOutcome> = grid
        .par_iter()
        .map(|&eps| {
            let mut pc = base.clone();
            pc.cavity = pc.cavity.with_asymmetry(eps, eps_delta);
            BellProjector::new(&pc)?.run(&[q])
        })
        .collect::<Result<_, Error>>()?;
    let predicted: Vec<f64> = (1..)
        .map(|l| fidelity_maximum(l, eps_delta, delta, nbar))
        .take_while(|&e| e <= eps_max)
        .collect();
    let p0 = outcomes[0].total_probability;
    let mut table = Table::new(
        "asym_sweep",
        &[
            "eps_g [g]",
            "F [1]",
            "P_T [1]",
            "P [1]",
            "P' [1]",
            "envelope [1]",
            "predicted maximum l",
        ],
    );
    for (eps, o) in grid.iter().zip(&outcomes) {
        let varpi = asym_frequencies(*eps, eps_delta, delta, nbar).dispersion;
        let envelope = p0 * (-2.0 * nbar * varpi * varpi * base.tau * base.tau).exp();
        let marker = predicted
            .iter()
            .position(|m| (eps - m).abs() <= step / 2.0)
            .map_or(0, |l| l + 1);
        table.push(vec![
            (*eps).into(),
            o.fidelity.into(),
            o.total_probability.into(),
            o.first_probability.into(),
            o.second_probability.into(),
            envelope.into(),
            marker.into(),
        ]);
    }
    let fidelity: Vec<f64> = outcomes.iter().map(|o| o.fidelity).collect();
    let (maxima, minima) = local_extrema(&fidelity);
    Ok(RunResult {
        tables: vec![table],
        summary: json!({
            "grid_step": step,
            "predicted_maxima": predicted,
            "predicted_first_minimum": first_fidelity_minimum(eps_delta, delta, nbar),
            "observed_maxima": maxima.iter().map(|&i| grid[i]).collect::<Vec<_>>(),
            "observed_minima": minima.iter().map(|&i| grid[i]).collect::<Vec<_>>(),
            "eps_g_boundary": asym_boundary(eps_delta, delta, nbar).eps_g_max,
        }),
        outcomes: None,
    })
}

pub fn signal_field(signal: &SignalState) -> Result<FockVector, Error> {
    let cutoff = default_truncation(signal_mean_photon_number(signal).max(1.0));
    Ok(match signal {
        SignalState::Vacuum => FockVector::vacuum(cutoff),
        SignalState::Fock(n) => FockVector::number_state(*n, cutoff.max(*n)),
        SignalState::Coherent(a) => make_coherent(&CoherentSpec::from_alpha(polar(*a)), cutoff)?,
        SignalState::EvenCat(a) => {
            let plus = CoherentSpec::from_alpha(polar(*a));
            let mut field = make_coherent(&plus, cutoff)?;
            field.add_scaled(
                C64::new(1.0, 0.0),
                &make_coherent(&plus.rotated(std::f64::consts::PI), cutoff)?,
            );
            field.scaled(C64::new(1.0 / field.norm_sqr().sqrt(), 0.0))
        }
    })
}

fn homodyne_convergence(config: &ExperimentConfig) -> Result<RunResult, RunError> {
    let h = config.homodyne_section()?;
    let fields: Vec<FockVector> = h
        .signals
        .iter()
        .map(signal_field)
        .collect::<Result<_, _>>()?;
    let pairs: Vec<(usize, f64)> = (0..fields.len())
        .flat_map(|i| h.lo_mean_photon_numbers.iter().map(move |&lo| (i, lo)))
        .collect();
    let largest = h.lo_mean_photon_numbers.iter().cloned().fold(0.0, f64::max);
    let results: Vec<(f64, f64, Vec<Vec<Cell>>)> = pairs
        .par_iter()
        .map(|&(i, lo)| -> Result<_, Error> {
            let field = &fields[i];
            let lo_spec = CoherentSpec::new(lo, h.lo_phase)?;
            let counts = beam_splitter_counts(
                field,
                &lo_spec,
                default_joint_truncation(lo, field.truncation()),
            )?;
            let density = |q: f64| quadrature_wavefunction(field, h.lo_phase, q).norm_sqr();
            let tv = counts.tv_distance(density);
            let mut rows = Vec::new();
            if lo == largest {
                for (q, d) in counts.rescaled() {
                    if d > 1e-12 || density(q) > 1e-12 {
                        rows.push(vec![i.into(), q.into(), d.into(), density(q).into()]);
                    }
                }
            }
            Ok((tv, counts.truncation_loss, rows))
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(
        "convergence",
        &[
            "signal",
            "signal mean photons [1]",
            "LO mean photons [1]",
            "TV distance [1]",
            "truncation loss [1]",
        ],
    );
    let mut dist = Table::new(
        "distributions",
        &[
            "signal",
            "q [1]",
            "exact density [1]",
            "quadrature density [1]",
        ],
    );
    for ((i, lo), (tv, loss, rows)) in pairs.iter().zip(results) {
        table.push(vec![
            (*i).into(),
            signal_mean_photon_number(&h.signals[*i]).into(),
            (*lo).into(),
            tv.into(),
            loss.into(),
        ]);
        rows.into_iter().for_each(|r| dist.push(r));
    }
    let worst = table
        .column("TV distance [1]")
        .unwrap_or_default()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(RunResult {
        tables: vec![table, dist],
        summary: json!({ "max_tv_distance": worst }),
        outcomes: None,
    })
}
