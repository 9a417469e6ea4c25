//! Models of a quantum repeater built from single rare-earth ions coupled to
//! nanophotonic cavities: rate and fidelity formulas, a cavity-QED master
//! equation simulator for the photon-exchange gate, and repeater-chain
//! fidelity and waiting-time estimates.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`.

pub mod analytic;
pub mod chain;
pub mod constants;
pub mod error;
pub mod lindblad;
pub mod params;
pub mod presets;
pub mod scalar;
pub mod units;

pub use error::{Error, Result};
pub use params::{derive_rates, CavityParams, DerivedRates, IonParams, PurcellModel};
pub use presets::{er167_yso, Preset, PresetDocument};
pub use scalar::Real;
pub use units::Quantity;

pub type Ion = params::IonParams<f64>;
pub type Cavity = params::CavityParams<f64>;
pub type Rates = params::DerivedRates<f64>;
pub type Link = analytic::LinkParams<f64>;
pub type Readout = analytic::ReadoutConfig<f64>;
pub type ExchangeInputs = analytic::ExchangeGateInputs<f64>;
