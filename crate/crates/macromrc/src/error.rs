use thiserror::Error;

/// Errors produced by configuration building and the analytic evaluators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two or more desired-source link powers coincide exactly. The closed
    /// forms assume pairwise distinct powers; callers should apply
    /// `perturb_coincident_powers` first.
    #[error("coincident desired powers at antennas {antennas:?}; apply perturb_coincident_powers")]
    CoincidentPowers { antennas: Vec<usize> },

    /// A partial-fraction denominator is too close to zero for reliable
    /// evaluation. The offending antenna triple is reported.
    #[error("near-singular coefficient denominator at (i={i}, k={k}, l={l}); perturb the configuration")]
    NearSingular { i: usize, k: usize, l: usize },

    /// The interference-plus-noise profile ties antennas {antennas:?} without
    /// tying all of them, so neither the mixture form nor the uniform
    /// reduction applies. Perturbation breaks the tie.
    #[error("degenerate interference profile: antennas {antennas:?} share an identical profile; perturb the configuration")]
    DegenerateInterference { antennas: Vec<usize> },

    #[error("arguments (alpha={alpha}, beta={beta}) outside the validity region {region}")]
    OutOfRegion {
        alpha: f64,
        beta: f64,
        region: &'static str,
    },

    /// An internal validity constraint that should hold by construction was
    /// violated; indicates a coefficient bug rather than a user error.
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    #[error("power metric undefined: interference and noise are both zero")]
    UndefinedMetric,

    #[error("symbol enumeration has {count} profiles, above the cap of {cap}; compress equal-magnitude interferers")]
    CombinatorialBlowup { count: usize, cap: usize },

    #[error("accuracy loss: {0}")]
    Accuracy(String),

    #[error("degenerate channel: zero desired-channel vector")]
    DegenerateChannel,

    #[error("quadrature failed to converge: {0}")]
    OracleFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
