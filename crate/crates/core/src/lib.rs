//! Entanglement of two qubits dephased by independent random telegraph
//! fluctuators, with and without simultaneous spin echo.
//!
//! * [`noise`]: telegraph channel parameters and trajectory sampling.
//! * [`coherence`]: closed-form single-qubit coherences and large-`g` forms.
//! * [`entanglement`]: EWL states, concurrence traces and feature detection.
//! * [`montecarlo`]: trajectory-averaged estimates of the same coherences.
//! * [`sweep`]: sweep configurations, runners and CSV/JSON output.
//! * [`cli`]: the `rtn-echo-lab` command line.

pub mod cli;
pub mod coherence;
pub mod entanglement;
pub mod error;
pub mod montecarlo;
pub mod noise;
pub mod sweep;

pub use coherence::{
    echo_coherence, echo_coherence_large_g, free_coherence, free_coherence_large_g,
    CoherenceValue, Protocol,
};
pub use entanglement::{
    concurrence, concurrence_trace, detect_features, threshold_g, ConcurrenceTrace, EwlState,
    Family, FeatureReport, TimeAxis,
};
pub use error::{Error, Result};
pub use montecarlo::{mc_concurrence, mc_echo_coherence, mc_free_coherence, McEstimate};
pub use noise::{sample_trajectory, RtnParams, Trajectory};
