use crate::error::{Error, Result};
use crate::linalg::{c, eigvalsh, hermitian_deviation, max_abs, trace, trace_product, CMatrix, CVector};

pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense square operator on the single-particle Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    entries: CMatrix,
    hermitian: bool,
}

impl QOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(QOperator { entries, hermitian: false })
    }

    /// Accepts the matrix only if it is Hermitian to 1e-12.
    pub fn hermitian(entries: CMatrix) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let dev = hermitian_deviation(&op.entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        op.hermitian = true;
        Ok(op)
    }

    /// Averages with the adjoint to remove rounding noise.
    pub fn hermitize(entries: CMatrix) -> Result<Self> {
        let sym = (&entries + entries.adjoint()) * c(0.5);
        Self::hermitian(sym)
    }

    pub fn zeros(dim: usize) -> Self {
        QOperator { entries: CMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        QOperator { entries: CMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> QOperator {
        QOperator { entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    /// Real part of tr(ρ O).
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product(rho.entries(), &self.entries).re
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn distance(&self, other: &QOperator) -> f64 {
        max_abs(&(&self.entries - &other.entries))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::dim(dim, self.dim()));
        }
        Ok(())
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(QOperator);

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let op = QOperator::hermitian(entries)?;
        let tr = trace(&op.entries).re;
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr}")));
        }
        let min = eigvalsh(&op.entries).first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidParameter(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(op))
    }

    /// Hermitizes and rescales to unit trace; positivity is left to the caller.
    pub fn normalized(entries: CMatrix) -> Result<Self> {
        let tr = trace(&entries);
        if tr.norm() < 1e-300 {
            return Err(Error::InvalidParameter("zero trace".into()));
        }
        let scaled = entries / tr;
        Ok(DensityMatrix(QOperator::hermitize(scaled)?))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(QOperator {
            entries: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
            hermitian: true,
        })
    }

    pub fn pure(state: &CVector) -> Result<Self> {
        let n = state.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let psi = state / c(n);
        Self::normalized(&psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0.entries
    }

    pub fn as_operator(&self) -> &QOperator {
        &self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.0.entries)
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.0.distance(&other.0)
    }

    /// Uhlmann fidelity (tr sqrt(sqrt(ρ) σ sqrt(ρ)))².
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let (vals, vecs) = crate::linalg::eigh(self.entries());
        let sqrt_diag = CMatrix::from_diagonal(&CVector::from_iterator(
            vals.len(),
            vals.iter().map(|&x| c(x.max(0.0).sqrt())),
        ));
        let s = &vecs * sqrt_diag * vecs.adjoint();
        let inner = &s * other.entries() * &s;
        let root: f64 = eigvalsh(&inner).iter().map(|&x| x.max(0.0).sqrt()).sum();
        root * root
    }
}
