//! Measurement-induced currents in monitored one-dimensional lattices.
//!
//! A single particle hops on a periodic chain with two or three sites per unit
//! cell. Projective measurements act inside every cell, either at Poisson-distributed
//! times (absorbed into a Lindbladian) or periodically (a stroboscopic map), while a
//! thermal bath relaxes the particle towards equilibrium. The crate computes
//! steady states and the three current species that flow in them.
//!
//! ```
//! use monitored_chain::prelude::*;
//!
//! let lattice = LatticeSpec::two_site(3, 1.0, 0.5, -3.0);
//! let h = build_hamiltonian(&lattice)?;
//! let spectral = eigendecompose(&h)?;
//! let bath = BathSpec { gamma0: 1e-2, temperature: 0.1 };
//! let jumps = thermal_jump_operators(&spectral, &bath)?;
//! let m = normalize3([0.0, 1.0, 1.0])?;
//! let proj = build_projectors(&MeasurementSpec::bloch(m, 100.0), &lattice)?;
//!
//! let l = build_full_lindbladian(&h, &proj, 100.0, &jumps)?;
//! let rho = steady_state(&l)?;
//! let x = position_operator(&lattice)?;
//! let report = CurrentOperators::new(&h, &x, &proj, &jumps)?.report(&rho, 100.0);
//! assert!(report.j_total.abs() > 1e-4);
//! # Ok::<(), monitored_chain::Error>(())
//! ```

pub mod currents;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod lindblad;
pub mod linalg;
pub mod measurement;
pub mod operator;
pub mod symmetry;
pub mod zeno;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/lattice.md")]
    pub struct Lattice;
    #[doc = include_str!("../../../book/src/measurement.md")]
    pub struct Measurement;
    #[doc = include_str!("../../../book/src/symmetry.md")]
    pub struct Symmetry;
    #[doc = include_str!("../../../book/src/lindblad.md")]
    pub struct Lindblad;
    #[doc = include_str!("../../../book/src/currents.md")]
    pub struct Currents;
    #[doc = include_str!("../../../book/src/zeno.md")]
    pub struct Zeno;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}

pub mod prelude {
    pub use crate::currents::{
        bond_current, dc_current, dissipative_current_operator, displacement_trace, entropy_and_gap,
        hamiltonian_current_operator, measurement_current_operator, CurrentOperators, CurrentReport,
        GeneratorPart,
    };
    pub use crate::error::{Error, Result};
    pub use crate::lattice::{
        analytic_spectrum, build_hamiltonian, eigendecompose, inversion_operator, position_operator,
        site_projector, time_reverse, Band, LatticeSpec, Model, SpectralData,
    };
    pub use crate::lindblad::{
        build_dissipator, build_full_lindbladian, build_hd_lindbladian, build_measurement_lindbladian, evolve,
        floquet_fixed_point, floquet_state, kraus_superprojector, steady_state, steady_state_diagnostics,
        thermal_jump_operators, thermal_state, BathSpec, Superoperator,
    };
    pub use crate::measurement::{
        build_projectors, cell_unitary, charge_displacement_operator, kraus_map, normalize3, MeasurementKind,
        MeasurementSpec, ProjectorSet, Scheme,
    };
    pub use crate::operator::{DensityMatrix, QOperator};
    pub use crate::symmetry::{classify_bloch, classify_operator, predict_selection_rules, Parity, Symmetry};
    pub use crate::zeno::{
        effective_lindbladian, first_order_coherences, regime_scales, solve_balance, three_site_zeno,
        transition_rates, two_site_closed_form, RateMatrix, ZenoSolution,
    };
}
