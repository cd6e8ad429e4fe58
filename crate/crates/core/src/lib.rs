//! Positive-realness classification, energy-balance auditing and
//! hyperstability simulation for scalar LTI plants in negative feedback.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod feedback;
pub mod harness;
pub mod lti;
pub mod poly;
pub mod ratfun;
pub mod realness;
pub mod signal;
pub mod taxonomy;
pub mod tol;
pub mod trace;

pub use corpus::{corpus_check, load_corpus, seed_corpus, CorpusEntry, CorpusError, CorpusReport};
pub use feedback::{
    apply_device, device_popov_audit, DeclaredPopov, DevicePopovStatus, DeviceSpec, FeedbackError,
    Slope,
};
pub use harness::{
    batch_run, convergence_verdict, run_closed_loop, verify_bound_chain, BoundChainAudit,
    HarnessError, Pulse, RunReport, Scenario, SimulationRun, Verdict,
};
pub use lti::{
    convolve, impulse_positivity_check, impulse_response, realize, simulate_forced, Hold,
    ImpulseResponse, LtiError, StateSpace,
};
pub use num_complex::Complex64;
pub use poly::{PolyError, Polynomial, RootCluster};
pub use ratfun::{PoleInfo, RationalFunction, StabilityClass};
pub use realness::{classify_pr, FrequencyGrid, Grade, PrClassification};
pub use signal::{
    energy_trace, frequency_energy, inner_product, input_integral, EnergyTrace, Signal, SignalError,
};
pub use taxonomy::{classify_taxonomy, popov_audit, Label, PopovAudit, TaxonomyVerdict};
pub use trace::{Trace, TraceError};
