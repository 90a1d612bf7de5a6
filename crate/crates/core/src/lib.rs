//! Simulator for leveled entangled overlay networks embedded in a
//! k-dimensional lattice.
//!
//! An overlay network of quantum repeater nodes carries probabilistic
//! entangled links grouped into levels; a link's level fixes how many
//! overlay hops it spans. Mapping the nodes onto a finite square lattice
//! turns link probabilities into an inverse k-power law of L1 distance,
//! which makes greedy distance-only routing take a polylogarithmic number
//! of hops. This crate builds such networks, orders their placements with
//! a Metropolis position-swap chain, routes over sampled link
//! realizations, and verifies the distance-law, stationarity, and
//! diameter-bound properties behind the construction.
//!
//! The pieces, bottom up:
//!
//! - [`stream`]: named, independently seeded random streams.
//! - [`lattice`]: the base lattice, L1 geometry, and node placements.
//! - [`overlay`]: networks of leveled entangled links and their
//!   generation, realization, and serialization.
//! - [`model`]: the inverse k-power connection law tying link
//!   probabilities to placement distances.
//! - [`embedding`]: the position-swap Markov chain, its exact posterior,
//!   and convergence diagnostics.
//! - [`routing`]: greedy L1 next-hop routing and ensemble statistics.
//! - [`analysis`]: diameters, tessellation diameter bounds, and the
//!   `(log n)^2` scaling experiment.
//! - [`experiment`]: the config-file harness behind the CLI.
//!
//! The `examples/` directory holds one runnable walkthrough per
//! capability; start with `generate_network` and `greedy_route`.

// Validation code writes `!(x > 0.0)` on purpose: the negated form also
// rejects NaN, which `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod embedding;
pub mod experiment;
pub mod lattice;
pub mod model;
pub mod overlay;
pub mod routing;
pub mod stream;

pub use analysis::{
    analytic_m, conjunction_bound, event_probability_bound, measured_diameter, scaling_experiment,
    single_level_check, tessellate_and_check, AnalysisError, DiameterReport, ScalingReport,
    ScalingSpec, TessellationReport,
};
pub use embedding::{
    detailed_balance_residual, empirical_distribution, exact_posterior, proposal_quantities,
    stationarity_check, swap_probability, total_variation, transition_matrix, EmbedError,
    ExactPosterior, SwapChain,
};
pub use lattice::{
    l1_distance, read_placement, write_placement, BaseGraph, Configuration, LatticeError,
    LatticePosition,
};
pub use model::{
    connection_probability, correction_constant, log_likelihood, normalizer, LikelihoodModel,
    ModelError, NormalizerForm,
};
pub use overlay::{
    entanglement_fidelity, generate_overlay, hop_distance, read_network, realize_links,
    write_network, EntangledLink, GeneratorSpec, LinkRealization, NodeId, OverlayError,
    OverlayNetwork, RepeaterGeneration,
};
pub use routing::{
    default_hop_limit, route, route_ensemble, EnsembleSummary, RouteError, RouteStatus,
    RoutingMetric, RoutingOutcome,
};
