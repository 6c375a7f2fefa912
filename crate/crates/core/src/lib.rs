//! Design and evaluation of tandem (serial) detection networks.
//!
//! `N` decision makers observe the same phenomenon. Each quantizes its own
//! observation together with its predecessor's message into a message from
//! a rate-limited alphabet; the last one fuses its observation and the
//! incoming message with a MAP rule. [`designer::design_network`] shapes
//! every decision table by cyclic person-by-person descent on the fusion
//! center's error probability, redesigning one DM at a time through its
//! [`restricted::RestrictedModel`].
//!
//! ```
//! use tandem_core::{design_network, discretize, DesignConfig, GaussianSpec, Priors};
//!
//! let obs = discretize(&GaussianSpec::at_snr(2, -10.0)).unwrap();
//! let config = DesignConfig::uniform(4, 1, 7);
//! let design = design_network(&config, vec![obs; 4], Priors::uniform(2).unwrap()).unwrap();
//! assert!(design.error() < design.initial_error);
//! ```

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod baselines;
pub mod designer;
pub mod error;
pub mod gaussian;
pub mod markov;
pub mod model;
pub mod network;
pub mod oracle;
pub mod restricted;

pub use baselines::{cover_curve, linear_detector_error, q_tail, swaszek_curve, CoverSchedule};
pub use designer::{
    design_network, initialize_network, Initialization, multiplication_count, DesignConfig, IterationReport,
    MultiplicationCount, NetworkDesign,
};
pub use error::{Error, Result};
pub use gaussian::{discretize, signal_set, snr_to_amplitude, GaussianSpec};
pub use markov::{backward_products, dm_transition_matrix, fc_joint_pmf, forward_q, network_error};
pub use model::{
    bayes_error, map_decision, DecisionFunction, DiscreteObservationModel, HypothesisMatrix,
    MessageDistribution, Priors,
};
pub use network::TandemNetwork;
pub use oracle::{brute_force_design, monte_carlo_error, BruteForceResult, MonteCarloEstimate};
pub use restricted::{candidate_score, design_dm, reassign_input, DesignState, DmDesign, RestrictedModel};
