use crate::currents::CurrentOperators;
use crate::error::Result;
use crate::lattice::{build_hamiltonian, eigendecompose, position_operator, LatticeSpec, SpectralData};
use crate::lindblad::{build_dissipator, thermal_jump_operators, BathSpec, Superoperator};
use crate::measurement::{build_projectors, MeasurementSpec, ProjectorSet};
use crate::operator::QOperator;

use super::config::ExperimentConfig;

/// Everything derived from the lattice and bath, shared by every measurement choice.
#[derive(Debug, Clone)]
pub struct Environment {
    pub lattice: LatticeSpec,
    pub bath: BathSpec,
    pub h: QOperator,
    pub spectral: SpectralData,
    pub jumps: Vec<QOperator>,
    pub x: QOperator,
    pub dissipator: Superoperator,
    pub l_hd: Superoperator,
}

impl Environment {
    pub fn new(lattice: &LatticeSpec, bath: &BathSpec) -> Result<Self> {
        let h = build_hamiltonian(lattice)?;
        let spectral = eigendecompose(&h)?;
        let jumps = thermal_jump_operators(&spectral, bath)?;
        let dissipator = build_dissipator(&jumps, h.dim())?;
        let l_hd = &Superoperator::hamiltonian(&h) + &dissipator;
        Ok(Environment { lattice: *lattice, bath: *bath, x: position_operator(lattice)?, h, spectral, jumps, dissipator, l_hd })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(&cfg.lattice, &cfg.bath)
    }

    pub fn measured(&self, spec: &MeasurementSpec) -> Result<Measured<'_>> {
        let proj = build_projectors(spec, &self.lattice)?;
        let ops = CurrentOperators::new(&self.h, &self.x, &proj, &self.jumps)?;
        Ok(Measured { env: self, tau: spec.tau, proj, ops })
    }
}

#[derive(Debug, Clone)]
pub struct Measured<'a> {
    pub env: &'a Environment,
    pub tau: f64,
    pub proj: ProjectorSet,
    pub ops: CurrentOperators,
}
