//! Superoperators, thermal baths and the stationary states of monitored dynamics.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SpectralData;
use crate::linalg::{c, identity, kron, max_abs, null_space, unvec_op, vec_op, CMatrix, CVector, I};
use crate::measurement::ProjectorSet;
use crate::operator::{DensityMatrix, QOperator};

pub const NULL_GAP_TOL: f64 = 1e-8;
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub gamma0: f64,
    pub temperature: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        BathSpec { gamma0: 1e-3, temperature: 0.1 }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {}", self.gamma0)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature must be positive, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// Linear map on column-stacked d×d operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    entries: CMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != dim * dim || entries.ncols() != dim * dim {
            return Err(Error::dim(dim * dim, entries.nrows()));
        }
        Ok(Superoperator { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Superoperator { dim, entries: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Superoperator { dim, entries: identity(dim * dim) }
    }

    /// ρ ↦ A ρ
    pub fn left(a: &CMatrix) -> Self {
        let d = a.nrows();
        Superoperator { dim: d, entries: kron(&identity(d), a) }
    }

    /// ρ ↦ ρ B
    pub fn right(b: &CMatrix) -> Self {
        let d = b.nrows();
        Superoperator { dim: d, entries: kron(&b.transpose(), &identity(d)) }
    }

    /// ρ ↦ A ρ B
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Superoperator { dim: a.nrows(), entries: kron(&b.transpose(), a) }
    }

    /// ρ ↦ −i[H, ρ]
    pub fn hamiltonian(h: &QOperator) -> Self {
        let l = Self::left(h.entries());
        let r = Self::right(h.entries());
        Superoperator { dim: h.dim(), entries: (l.entries - r.entries) * (-I) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn apply(&self, op: &CMatrix) -> CMatrix {
        unvec_op(&(&self.entries * vec_op(op)), self.dim)
    }

    /// Heisenberg-picture action, adjoint with respect to tr(X† Y).
    pub fn apply_adjoint(&self, op: &CMatrix) -> CMatrix {
        unvec_op(&(self.entries.adjoint() * vec_op(op)), self.dim)
    }

    /// self ∘ other
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { dim: self.dim, entries: &self.entries * &other.entries }
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator { dim: self.dim, entries: &self.entries * c(s) }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    /// max |vec(𝟙)† L|; zero for trace-preserving maps.
    pub fn trace_defect(&self) -> f64 {
        let v = vec_op(&identity(self.dim));
        (v.adjoint() * &self.entries).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn exp(&self, t: f64) -> Superoperator {
        Superoperator { dim: self.dim, entries: (&self.entries * c(t)).exp() }
    }

    /// Complex eigenvalues of the matrix.
    pub fn eigenvalues(&self) -> Option<Vec<crate::linalg::C64>> {
        self.entries.clone().eigenvalues().map(|v| v.iter().copied().collect())
    }

    fn check(&self, other: &Superoperator) {
        assert_eq!(self.dim, other.dim, "superoperator dimensions differ");
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        self.check(rhs);
        Superoperator { dim: self.dim, entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        self.check(rhs);
        Superoperator { dim: self.dim, entries: &self.entries - &rhs.entries }
    }
}

impl Mul<f64> for &Superoperator {
    type Output = Superoperator;
    fn mul(self, s: f64) -> Superoperator {
        self.scale(s)
    }
}

pub fn thermal_state(spectral: &SpectralData, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!("temperature must be positive, got {temperature}")));
    }
    let e0 = spectral.energies.first().copied().unwrap_or(0.0);
    let weights: Vec<f64> = spectral.energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    let u = &spectral.states;
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(weights.len(), weights.iter().map(|w| c(w / z))));
    DensityMatrix::normalized(u * diag * u.adjoint())
}

/// Rate of the jump |i⟩⟨j| between eigenstates i ← j.
pub fn thermal_rate(e_to: f64, e_from: f64, bath: &BathSpec, dim: usize) -> f64 {
    let base = bath.gamma0 / dim as f64;
    if e_to <= e_from {
        base
    } else {
        base * (-(e_to - e_from) / bath.temperature).exp()
    }
}

/// √γ |i⟩⟨j| for every ordered pair of eigenstates, the diagonal pairs included.
pub fn thermal_jump_operators(spectral: &SpectralData, bath: &BathSpec) -> Result<Vec<QOperator>> {
    bath.validate()?;
    let d = spectral.dim();
    let u = &spectral.states;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            let rate = thermal_rate(spectral.energies[i], spectral.energies[j], bath, d);
            let op = u.column(i) * u.column(j).adjoint() * c(rate.sqrt());
            out.push(QOperator::new(op)?);
        }
    }
    Ok(out)
}

/// True when some eigenvalues coincide to `tol`; the jump basis inside such multiplets is the solver's.
pub fn has_degeneracies(spectral: &SpectralData, tol: f64) -> bool {
    spectral.energies.windows(2).any(|w| w[1] - w[0] <= tol)
}

pub fn build_dissipator(jumps: &[QOperator], dim: usize) -> Result<Superoperator> {
    let mut total = CMatrix::zeros(dim * dim, dim * dim);
    let mut loss = CMatrix::zeros(dim, dim);
    for l in jumps {
        l.check_dim(dim)?;
        let lm = l.entries();
        total += kron(&lm.map(|z| z.conj()), lm);
        loss += lm.adjoint() * lm;
    }
    let half = loss * c(0.5);
    total -= kron(&identity(dim), &half) + kron(&half.transpose(), &identity(dim));
    Superoperator::new(dim, total)
}

/// ρ ↦ Σ_a P_a ρ P_a
pub fn kraus_superprojector(proj: &ProjectorSet) -> Superoperator {
    let d = proj.dim();
    let mut total = CMatrix::zeros(d * d, d * d);
    for p in proj.projectors() {
        total += kron(&p.entries().transpose(), p.entries());
    }
    Superoperator { dim: d, entries: total }
}

pub fn build_measurement_lindbladian(proj: &ProjectorSet, tau: f64) -> Result<Superoperator> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let pa = kraus_superprojector(proj);
    Ok(&(&pa - &Superoperator::identity(proj.dim())) * (1.0 / tau))
}

/// −i[H,·] + 𝓓
pub fn build_hd_lindbladian(h: &QOperator, jumps: &[QOperator]) -> Result<Superoperator> {
    let d = build_dissipator(jumps, h.dim())?;
    Ok(&Superoperator::hamiltonian(h) + &d)
}

/// −i[H,·] + 𝓓 + (𝓟_A − 1)/τ; an infinite τ drops the measurement part.
pub fn build_full_lindbladian(h: &QOperator, proj: &ProjectorSet, tau: f64, jumps: &[QOperator]) -> Result<Superoperator> {
    h.check_dim(proj.dim())?;
    let hd = build_hd_lindbladian(h, jumps)?;
    if tau.is_infinite() && tau > 0.0 {
        return Ok(hd);
    }
    Ok(&hd + &build_measurement_lindbladian(proj, tau)?)
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// ‖𝓛[ρ]‖_F of the returned, trace-normalized state.
    pub residual: f64,
    /// Second-smallest singular value of 𝓛.
    pub null_gap: f64,
}

fn state_from_vector(v: &CVector, dim: usize) -> Result<DensityMatrix> {
    DensityMatrix::normalized(unvec_op(v, dim))
}

pub fn steady_state_diagnostics(l: &Superoperator) -> Result<SteadyState> {
    let ns = null_space(&l.entries);
    let gap = ns.singular_values.get(1).copied().unwrap_or(f64::INFINITY);
    if gap <= NULL_GAP_TOL {
        let null_dim = ns.singular_values.iter().filter(|&&s| s <= NULL_GAP_TOL).count();
        return Err(Error::NonUniqueSteadyState { null_dim, gap });
    }
    let rho = state_from_vector(&ns.vectors.column(0).into_owned(), l.dim)?;
    let residual = (&l.entries * vec_op(rho.entries())).norm();
    Ok(SteadyState { rho, residual, null_gap: gap })
}

pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let ss = steady_state_diagnostics(l)?;
    if ss.residual > STEADY_RESIDUAL_TOL {
        return Err(Error::Residual(ss.residual));
    }
    Ok(ss.rho)
}

pub fn evolve(rho0: &DensityMatrix, l: &Superoperator, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if rho0.dim() != l.dim {
        return Err(Error::dim(l.dim, rho0.dim()));
    }
    DensityMatrix::normalized(l.exp(t).apply(rho0.entries()))
}

/// exp(𝓛t) together with ∫₀ᵗ exp(𝓛s) ds, both from one augmented exponential.
pub fn propagator_with_integral(l: &Superoperator, t: f64) -> (Superoperator, Superoperator) {
    let n = l.dim * l.dim;
    let mut aug = CMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&l.entries * c(t)));
    aug.view_mut((0, n), (n, n)).copy_from(&(identity(n) * c(t)));
    let e = aug.exp();
    let prop = e.view((0, 0), (n, n)).into_owned();
    let integral = e.view((0, n), (n, n)).into_owned();
    (Superoperator { dim: l.dim, entries: prop }, Superoperator { dim: l.dim, entries: integral })
}

#[derive(Debug, Clone)]
pub struct FloquetState {
    /// State immediately after a measurement.
    pub rho_post: DensityMatrix,
    /// State immediately before the next measurement.
    pub rho_pre: DensityMatrix,
    /// (1/τ)∫₀^τ ρ(t) dt
    pub rho_mean: DensityMatrix,
    /// Second-smallest singular value of (M − 1)/min(τ, 1).
    pub fixed_point_gap: f64,
}

pub fn floquet_fixed_point(l_hd: &Superoperator, proj: &ProjectorSet, tau: f64) -> Result<DensityMatrix> {
    Ok(floquet_state(l_hd, proj, tau)?.rho_post)
}

pub fn floquet_state(l_hd: &Superoperator, proj: &ProjectorSet, tau: f64) -> Result<FloquetState> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if proj.dim() != l_hd.dim {
        return Err(Error::dim(l_hd.dim, proj.dim()));
    }
    let (prop, integral) = propagator_with_integral(l_hd, tau);
    let monodromy = kraus_superprojector(proj).compose(&prop);
    let n = l_hd.dim * l_hd.dim;
    // Slow modes of M − 1 shrink with τ; rescale so the gap test stays meaningful.
    let shifted = (&monodromy.entries - identity(n)) * c(1.0 / tau.min(1.0));
    let ns = null_space(&shifted);
    let gap = ns.singular_values.get(1).copied().unwrap_or(f64::INFINITY);
    if gap <= NULL_GAP_TOL {
        let multiplicity = ns.singular_values.iter().filter(|&&s| s <= NULL_GAP_TOL).count();
        return Err(Error::NonUniqueFloquet { multiplicity });
    }
    let rho_post = state_from_vector(&ns.vectors.column(0).into_owned(), l_hd.dim)?;
    let rho_pre = DensityMatrix::normalized(prop.apply(rho_post.entries()))?;
    let rho_mean = DensityMatrix::normalized(integral.apply(rho_post.entries()))?;
    Ok(FloquetState { rho_post, rho_pre, rho_mean, fixed_point_gap: gap })
}
