//! Master-equation simulation of the cavity-mediated two-ion phase gate.

pub mod fit;
pub mod linalg;
pub mod model;
pub mod propagate;
pub mod protocol;
pub mod space;
pub mod state;
pub mod superop;
pub mod sweep;

pub use linalg::{expm, hermitian_eigenvalues, CMat};
pub use model::{
    annihilation, build_hamiltonian, build_hamiltonian_with, build_liouvillian, ion_operator, Couplings, Frame,
    HamiltonianTerms, Liouvillian, LiouvillianOptions,
};
pub use propagate::{conditional_generator, conditional_propagate, rk45_propagate, Propagator, Rk45Options};
pub use space::{CompositeSpace, IonLabel, Level};
pub use state::DensityOperator;
pub use superop::{SuperBuilder, Superoperator};
pub use protocol::{
    apply_pi_pulse, run_cz_protocol, GateModel, GateProtocol, GateSimResult, InputState, KappaUnits, Transition,
    TRUNCATION_THRESHOLD,
};
pub use fit::{dephasing_study, fit_dephasing_coefficients, DephasingFit, DephasingSample, MIN_DEPHASING_SAMPLES};
pub use sweep::{golden_section_max, linspace, refine_optimum, sweep_and_optimize, SweepCurve, SweepPoint};
