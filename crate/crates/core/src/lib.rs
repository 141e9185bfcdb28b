//! Spin-wave magnons in bipartite antiferromagnets, their two-mode squeezing
//! and entanglement, and the cavity-mediated coupling to a transmon qubit that
//! turns the qubit's Rabi frequency into a probe of those quantities.
//!
//! The analytic modules (`model`, `bogoliubov`, `entanglement`, `hybrid`) are
//! generic over the floating-point scalar; [`fockoracle`] is a brute-force
//! truncated Fock-space engine in `f64` used to cross-check every closed form.

pub mod bogoliubov;
pub mod entanglement;
pub mod fockoracle;
pub mod hybrid;
pub mod model;
pub mod scalar;

pub use scalar::Real;

pub use bogoliubov::{squeeze_params, BogoliubovError, BogoliubovMatrix, SqueezeParams};
pub use entanglement::{
    entanglement_entropy, epr_function, ground_state_entropy_closed_form, schmidt_coefficients,
    schmidt_coefficients_auto, EntanglementError, EntanglementReport, LogBase, SchmidtSpectrum,
};
pub use hybrid::{
    couplings, effective_qubit, invert_rabi, rabi_frequency_zero_detuning, rabi_probability, schrieffer_wolff,
    transmon_spectrum, Couplings, DressedParams, HybridError, HybridParams, Inversion, ProbeMode, RabiObservables,
    SqueezeBranch, TransmonParams,
};
pub use model::{
    diagonal_frequencies, kittel_parameters, kpath, structure_factor, KittelModes, LatticeKind, LatticeSpec,
    MagnonDispersion, ModelError, ModelParams, PathSegment, Wavevector,
};

/// Double-precision aliases for the common case.
pub type LatticeSpec64 = LatticeSpec<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type KittelModes64 = KittelModes<f64>;
pub type MagnonDispersion64 = MagnonDispersion<f64>;
pub type SqueezeParams64 = SqueezeParams<f64>;
pub type SchmidtSpectrum64 = SchmidtSpectrum<f64>;
pub type TransmonParams64 = TransmonParams<f64>;
pub type HybridParams64 = HybridParams<f64>;
pub type DressedParams64 = DressedParams<f64>;
pub type RabiObservables64 = RabiObservables<f64>;

/// Single-precision aliases, mostly useful for quick sweeps.
pub type ModelParams32 = ModelParams<f32>;
pub type SqueezeParams32 = SqueezeParams<f32>;
