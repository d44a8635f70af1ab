//! Inversion, time reversal and their product, acting on operators and Bloch vectors.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{max_abs, CMatrix};
use crate::measurement::{normalize3, ProjectorSet};
use crate::operator::QOperator;

pub const PARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn is_eigen(self) -> bool {
        self != Parity::None
    }

    fn times(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub under_i: Parity,
    pub under_t: Parity,
    pub under_it: Parity,
    pub h_inversion_symmetric: bool,
    /// Measurement of the site occupation itself.
    pub position_measurement: bool,
}

impl ParityReport {
    pub fn with_hamiltonian(self, h_inversion_symmetric: bool) -> Self {
        ParityReport { h_inversion_symmetric, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectionRules {
    pub jh_at_0plus_zero: bool,
    pub jh_all_t_zero: bool,
    pub jh_dc_zero: bool,
    pub q_zero: bool,
}

fn parity_of(image: [f64; 3], m: [f64; 3]) -> Parity {
    let close = |s: f64| (0..3).all(|k| (image[k] - s * m[k]).abs() <= 1e-12);
    if close(1.0) {
        Parity::Even
    } else if close(-1.0) {
        Parity::Odd
    } else {
        Parity::None
    }
}

/// Parity of m̂·σ. The Hamiltonian flag defaults to inversion-symmetric.
pub fn classify_bloch(m: [f64; 3]) -> Result<ParityReport> {
    let m = normalize3(m)?;
    let [x, y, z] = m;
    let under_i = parity_of([x, -y, -z], m);
    let under_t = parity_of([x, -y, z], m);
    let under_it = parity_of([x, y, -z], m);
    Ok(ParityReport {
        under_i,
        under_t,
        under_it,
        h_inversion_symmetric: true,
        position_measurement: x.abs() <= 1e-12 && y.abs() <= 1e-12,
    })
}

/// Representation of a symmetry on the lattice Hilbert space.
#[derive(Debug, Clone)]
pub enum Symmetry {
    Inversion(QOperator),
    TimeReversal,
    InversionTime(QOperator),
}

impl Symmetry {
    pub fn apply(&self, op: &CMatrix) -> CMatrix {
        match self {
            Symmetry::Inversion(p) => p.entries() * op * p.entries().adjoint(),
            Symmetry::TimeReversal => op.map(|z| z.conj()),
            Symmetry::InversionTime(p) => p.entries() * op.map(|z| z.conj()) * p.entries().adjoint(),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Symmetry::Inversion(p) | Symmetry::InversionTime(p) => Some(p.dim()),
            Symmetry::TimeReversal => None,
        }
    }
}

pub fn classify_operator(op: &QOperator, sym: &Symmetry) -> Result<Parity> {
    if let Some(d) = sym.dim() {
        op.check_dim(d)?;
    }
    let image = sym.apply(op.entries());
    let o = op.entries();
    Ok(if max_abs(&(&image - o)) <= PARITY_TOL {
        Parity::Even
    } else if max_abs(&(&image + o)) <= PARITY_TOL {
        Parity::Odd
    } else {
        Parity::None
    })
}

/// Whether the symmetry permutes the projectors among themselves.
pub fn permutes_projectors(proj: &ProjectorSet, sym: &Symmetry) -> bool {
    let images: Vec<CMatrix> = proj.projectors().iter().map(|p| sym.apply(p.entries())).collect();
    let mut used = vec![false; proj.len()];
    images.iter().all(|img| {
        let hit = proj
            .projectors()
            .iter()
            .enumerate()
            .find(|(b, q)| !used[*b] && max_abs(&(img - q.entries())) <= PARITY_TOL);
        match hit {
            Some((b, _)) => {
                used[b] = true;
                true
            }
            None => false,
        }
    })
}

/// Selection rules for a single measurement on the equilibrium state.
pub fn predict_selection_rules(report: &ParityReport) -> SelectionRules {
    let i_eigen = report.under_i.is_eigen();
    let t_eigen = report.under_t.is_eigen();
    let jh_all_t_zero = report.h_inversion_symmetric && i_eigen;
    let jh_at_0plus_zero = jh_all_t_zero || t_eigen;
    let it_only = report.h_inversion_symmetric && !i_eigen && !t_eigen && report.under_it.is_eigen();
    SelectionRules {
        jh_at_0plus_zero,
        jh_all_t_zero,
        jh_dc_zero: jh_at_0plus_zero,
        q_zero: jh_all_t_zero || it_only || report.position_measurement,
    }
}

/// Parity of the combined symmetry implied by the individual ones.
pub fn implied_it(report: &ParityReport) -> Parity {
    report.under_i.times(report.under_t)
}
