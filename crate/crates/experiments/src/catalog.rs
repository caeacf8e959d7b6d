//! Sample configurations shipped with the runner, one per experiment kind.

use crate::config::ExperimentKind;

pub struct Sample {
    pub kind: ExperimentKind,
    pub file_name: &'static str,
    pub text: &'static str,
}

pub const SAMPLES: [Sample; 7] = [
    Sample {
        kind: ExperimentKind::Overlaps,
        file_name: "overlaps.toml",
        text: include_str!("../configs/overlaps.toml"),
    },
    Sample {
        kind: ExperimentKind::Wigner,
        file_name: "wigner.toml",
        text: include_str!("../configs/wigner.toml"),
    },
    Sample {
        kind: ExperimentKind::BellProjection,
        file_name: "bell-projection.toml",
        text: include_str!("../configs/bell-projection.toml"),
    },
    Sample {
        kind: ExperimentKind::Teleport,
        file_name: "teleport.toml",
        text: include_str!("../configs/teleport.toml"),
    },
    Sample {
        kind: ExperimentKind::Swap,
        file_name: "swap.toml",
        text: include_str!("../configs/swap.toml"),
    },
    Sample {
        kind: ExperimentKind::AsymSweep,
        file_name: "asym-sweep.toml",
        text: include_str!("../configs/asym-sweep.toml"),
    },
    Sample {
        kind: ExperimentKind::HomodyneConvergence,
        file_name: "homodyne-convergence.toml",
        text: include_str!("../configs/homodyne-convergence.toml"),
    },
];

pub fn sample(kind: ExperimentKind) -> &'static Sample {
    SAMPLES
        .iter()
        .find(|s| s.kind == kind)
        .expect("every kind has a sample")
}
