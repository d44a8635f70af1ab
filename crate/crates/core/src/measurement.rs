//! Projective measurements acting inside each unit cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Model};
use crate::linalg::{c, commutator, max_abs, CMatrix, CVector, C64, I};
use crate::operator::{DensityMatrix, QOperator};

pub const PROJECTOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Bloch { m: [f64; 3] },
    ThreeSite { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Poisson,
    Floquet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    pub tau: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl MeasurementSpec {
    pub fn bloch(m: [f64; 3], tau: f64) -> Self {
        MeasurementSpec { kind: MeasurementKind::Bloch { m }, tau, scheme: Scheme::Poisson }
    }

    pub fn three_site(alpha: f64, tau: f64) -> Self {
        MeasurementSpec { kind: MeasurementKind::ThreeSite { alpha }, tau, scheme: Scheme::Poisson }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        MeasurementSpec { tau, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        match self.kind {
            MeasurementKind::Bloch { m } => {
                let n = norm3(m);
                if (n - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("Bloch vector norm {n}")));
                }
            }
            MeasurementKind::ThreeSite { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
                }
            }
        }
        Ok(())
    }
}

pub fn norm3(m: [f64; 3]) -> f64 {
    (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt()
}

pub fn normalize3(m: [f64; 3]) -> Result<[f64; 3]> {
    let n = norm3(m);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidParameter("zero Bloch vector".into()));
    }
    Ok([m[0] / n, m[1] / n, m[2] / n])
}

pub fn pauli() -> [CMatrix; 3] {
    let z = c(0.0);
    let o = c(1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

pub fn m_dot_sigma(m: [f64; 3]) -> CMatrix {
    let s = pauli();
    &s[0] * c(m[0]) + &s[1] * c(m[1]) + &s[2] * c(m[2])
}

/// U with U† σ_z U = m̂·σ, built from the rotation carrying ẑ onto m̂.
pub fn cell_unitary(m: [f64; 3]) -> Result<CMatrix> {
    let m = normalize3(m)?;
    let theta = m[2].clamp(-1.0, 1.0).acos();
    let axis_norm = (m[0] * m[0] + m[1] * m[1]).sqrt();
    let axis = if axis_norm > 1e-15 {
        [-m[1] / axis_norm, m[0] / axis_norm, 0.0]
    } else if m[2] > 0.0 {
        return Ok(CMatrix::identity(2, 2));
    } else {
        [1.0, 0.0, 0.0]
    };
    // R = exp(−iθ n·σ/2) maps σ_z to m̂·σ under R σ_z R†; U = R†.
    let r = CMatrix::identity(2, 2) * c((theta / 2.0).cos()) - m_dot_sigma(axis) * (I * (theta / 2.0).sin());
    Ok(r.adjoint())
}

/// Orthonormal outcome states of one unit cell, as columns.
pub fn cell_basis(kind: &MeasurementKind) -> Result<CMatrix> {
    match *kind {
        MeasurementKind::Bloch { m } => Ok(cell_unitary(m)?.adjoint()),
        MeasurementKind::ThreeSite { alpha } => {
            let e = C64::from_polar(1.0, alpha);
            let s3 = 3f64.sqrt();
            let s2 = 2f64.sqrt();
            let s6 = 6f64.sqrt();
            let psi1 = [c(1.0 / s3), e / s3, c(1.0 / s3)];
            let psi2 = [c(1.0 / s2), -e / s2, c(0.0)];
            let psi3 = [c(1.0 / s6), e / s6, c(-2.0 / s6)];
            let mut b = CMatrix::zeros(3, 3);
            for (col, psi) in [psi1, psi2, psi3].iter().enumerate() {
                for row in 0..3 {
                    b[(row, col)] = psi[row];
                }
            }
            Ok(b)
        }
    }
}

/// Complete set of orthogonal projectors, each supported inside one measurement cell.
#[derive(Debug, Clone)]
pub struct ProjectorSet {
    projectors: Vec<QOperator>,
    dim: usize,
    cell_size: usize,
}

impl ProjectorSet {
    pub fn new(projectors: Vec<QOperator>, cell_size: usize) -> Result<Self> {
        let dim = projectors.first().map(|p| p.dim()).ok_or_else(|| Error::Dimension("empty projector set".into()))?;
        if cell_size == 0 || dim % cell_size != 0 {
            return Err(Error::Dimension(format!("cell size {cell_size} does not divide {dim}")));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for (a, p) in projectors.iter().enumerate() {
            p.check_dim(dim)?;
            if !p.is_hermitian() {
                return Err(Error::NotHermitian(crate::linalg::hermitian_deviation(p.entries())));
            }
            let pm = p.entries();
            if max_abs(&(pm * pm - pm)) > PROJECTOR_TOL {
                return Err(Error::InvalidParameter(format!("projector {a} is not idempotent")));
            }
            for (b, q) in projectors.iter().enumerate().skip(a + 1) {
                if max_abs(&(pm * q.entries())) > PROJECTOR_TOL {
                    return Err(Error::InvalidParameter(format!("projectors {a} and {b} overlap")));
                }
            }
            sum += pm;
        }
        if max_abs(&(sum - CMatrix::identity(dim, dim))) > PROJECTOR_TOL {
            return Err(Error::InvalidParameter("projectors are not complete".into()));
        }
        Ok(ProjectorSet { projectors, dim, cell_size })
    }

    /// Rank-1 projectors from one unitary basis per cell (columns are outcome states).
    pub fn from_cell_bases(bases: &[CMatrix]) -> Result<Self> {
        let cell_size = bases.first().map(|b| b.nrows()).ok_or_else(|| Error::Dimension("no cells".into()))?;
        let dim = cell_size * bases.len();
        let mut projectors = Vec::with_capacity(dim);
        for (n, b) in bases.iter().enumerate() {
            if b.nrows() != cell_size || b.ncols() != cell_size {
                return Err(Error::dim(cell_size, b.nrows()));
            }
            for k in 0..cell_size {
                let mut v = CVector::zeros(dim);
                for r in 0..cell_size {
                    v[n * cell_size + r] = b[(r, k)];
                }
                projectors.push(QOperator::hermitize(&v * v.adjoint())?);
            }
        }
        Self::new(projectors, cell_size)
    }

    pub fn projectors(&self) -> &[QOperator] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> usize {
        self.cell_size
    }

    pub fn is_rank_one(&self) -> bool {
        self.projectors.iter().all(|p| (crate::linalg::trace(p.entries()).re - 1.0).abs() < 1e-10)
    }

    /// Outcome state |a⟩ of a rank-1 projector, with the phase fixed by its largest component.
    pub fn outcome_state(&self, a: usize) -> CVector {
        let p = self.projectors[a].entries();
        let col = (0..self.dim)
            .max_by(|&i, &j| p[(i, i)].re.total_cmp(&p[(j, j)].re))
            .expect("non-empty");
        let v = p.column(col).into_owned();
        let n = v.norm();
        v / c(n)
    }

    /// Columns are the outcome states, in projector order.
    pub fn basis(&self) -> Result<CMatrix> {
        if !self.is_rank_one() || self.len() != self.dim {
            return Err(Error::Unsupported("measurement basis requires rank-1 projectors".into()));
        }
        let mut b = CMatrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            b.set_column(a, &self.outcome_state(a));
        }
        Ok(b)
    }

    /// Outcomes of cell `n` occupy indices n·cell_size .. (n+1)·cell_size.
    pub fn cell_of(&self, a: usize) -> Option<usize> {
        let p = self.projectors[a].entries();
        let sites: Vec<usize> = (0..self.dim).filter(|&i| p.row(i).iter().any(|z| z.norm() > 1e-14)).collect();
        let first = *sites.first()? / self.cell_size;
        sites.iter().all(|&s| s / self.cell_size == first).then_some(first)
    }
}

pub fn build_projectors(spec: &MeasurementSpec, lattice: &LatticeSpec) -> Result<ProjectorSet> {
    spec.validate()?;
    lattice.validate()?;
    match (spec.kind, lattice.model) {
        (MeasurementKind::Bloch { .. }, Model::TwoSite) | (MeasurementKind::ThreeSite { .. }, Model::ThreeSite) => {}
        _ => return Err(Error::InvalidParameter("measurement kind does not match the unit cell".into())),
    }
    let basis = cell_basis(&spec.kind)?;
    ProjectorSet::from_cell_bases(&vec![basis; lattice.cells])
}

pub fn kraus_map(rho: &DensityMatrix, proj: &ProjectorSet) -> Result<DensityMatrix> {
    if rho.dim() != proj.dim() {
        return Err(Error::dim(proj.dim(), rho.dim()));
    }
    let mut out = CMatrix::zeros(proj.dim(), proj.dim());
    for p in proj.projectors() {
        out += p.entries() * rho.entries() * p.entries();
    }
    DensityMatrix::normalized(out)
}

/// Q̂ = ½ Σ_a (P_a[x̂,P_a] − [x̂,P_a]P_a).
pub fn charge_displacement_operator(proj: &ProjectorSet, x: &QOperator) -> Result<QOperator> {
    x.check_dim(proj.dim())?;
    let mut q = CMatrix::zeros(proj.dim(), proj.dim());
    for (a, p) in proj.projectors().iter().enumerate() {
        if proj.cell_of(a).is_none() {
            return Err(Error::InvalidParameter(format!("projector {a} is not supported on a single cell")));
        }
        let pm = p.entries();
        let comm = commutator(x.entries(), pm);
        q += (pm * &comm - &comm * pm) * c(0.5);
    }
    QOperator::hermitize(q)
}
