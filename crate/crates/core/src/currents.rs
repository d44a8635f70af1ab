//! Hamiltonian, measurement and dissipative currents, bond currents and entropy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::SpectralData;
use crate::linalg::{anticommutator, c, commutator, eigvalsh, trace_product, CMatrix, I};
use crate::lindblad::Superoperator;
use crate::measurement::{kraus_map, ProjectorSet};
use crate::operator::{DensityMatrix, QOperator};

pub const DEGENERACY_TOL: f64 = 1e-8;
pub const ENTROPY_CLAMP: f64 = 1e-15;

/// Shortest signed displacement from `x` to `y` on a ring; half-ring ties give zero.
pub fn minimal_image(x: f64, y: f64, circumference: f64) -> f64 {
    let mut d = (y - x).rem_euclid(circumference);
    if d > circumference / 2.0 {
        d -= circumference;
    }
    if (d.abs() - circumference / 2.0).abs() < 1e-12 {
        0.0
    } else {
        d
    }
}

/// −i Σ_{x,y} P_y H P_x (y − x) with ring displacements.
pub fn hamiltonian_current_operator(h: &QOperator, x: &QOperator) -> Result<QOperator> {
    x.check_dim(h.dim())?;
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(crate::linalg::hermitian_deviation(h.entries())));
    }
    let d = h.dim();
    let pos: Vec<f64> = x.entries().diagonal().iter().map(|z| z.re).collect();
    let hm = h.entries();
    let j = CMatrix::from_fn(d, d, |r, s| -I * hm[(r, s)] * c(minimal_image(pos[s], pos[r], d as f64)));
    QOperator::hermitize(j)
}

pub fn measurement_current_operator(q: &QOperator, tau: f64) -> Result<QOperator> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    QOperator::hermitize(q.entries() * c(1.0 / tau))
}

/// Σ_α (L_α† x̂ L_α − ½{x̂, L_α†L_α})
pub fn dissipative_current_operator(jumps: &[QOperator], x: &QOperator) -> Result<QOperator> {
    let d = x.dim();
    let mut out = CMatrix::zeros(d, d);
    let xm = x.entries();
    for l in jumps {
        l.check_dim(d)?;
        let lm = l.entries();
        let ld = lm.adjoint();
        out += &ld * xm * lm - anticommutator(xm, &(&ld * lm)) * c(0.5);
    }
    QOperator::hermitize(out)
}

/// One piece of the generator, applied in the Heisenberg picture.
#[derive(Debug, Clone, Copy)]
pub enum GeneratorPart<'a> {
    Hamiltonian(&'a QOperator),
    Measurement { proj: &'a ProjectorSet, tau: f64 },
    Dissipative(&'a [QOperator]),
}

impl GeneratorPart<'_> {
    pub fn adjoint_apply(&self, op: &CMatrix) -> CMatrix {
        match *self {
            GeneratorPart::Hamiltonian(h) => commutator(h.entries(), op) * I,
            GeneratorPart::Measurement { proj, tau } => {
                let mut out = -op.clone();
                for p in proj.projectors() {
                    out += p.entries() * op * p.entries();
                }
                out * c(1.0 / tau)
            }
            GeneratorPart::Dissipative(jumps) => {
                let mut out = CMatrix::zeros(op.nrows(), op.ncols());
                for l in jumps {
                    let lm = l.entries();
                    let ld = lm.adjoint();
                    out += &ld * op * lm - anticommutator(op, &(&ld * lm)) * c(0.5);
                }
                out
            }
        }
    }
}

/// ⟨½{P_x, 𝓛†[P_y]} − ½{P_y, 𝓛†[P_x]}⟩, the flow from site x to site y.
pub fn bond_current(rho: &DensityMatrix, x: usize, y: usize, part: GeneratorPart<'_>) -> Result<f64> {
    let d = rho.dim();
    if x >= d || y >= d || x == y {
        return Err(Error::OutOfRange { what: "bond", value: format!("({x}, {y}) in dim {d}") });
    }
    let proj = |s: usize| {
        let mut m = CMatrix::zeros(d, d);
        m[(s, s)] = c(1.0);
        m
    };
    let (px, py) = (proj(x), proj(y));
    let op = (anticommutator(&px, &part.adjoint_apply(&py)) - anticommutator(&py, &part.adjoint_apply(&px))) * c(0.5);
    Ok(trace_product(rho.entries(), &op).re)
}

#[derive(Debug, Clone)]
pub struct DisplacementTrace {
    pub times: Vec<f64>,
    pub current: Vec<f64>,
    pub displacement: Vec<f64>,
    /// ⟨Q̂⟩ in the state just before the measurement.
    pub q_expect: f64,
}

impl DisplacementTrace {
    /// Least-squares slope of Δx(t) over t ∈ [t0, t1].
    pub fn slope(&self, t0: f64, t1: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.displacement)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(t, x)| (*t, *x))
            .collect();
        linear_fit(&pts).0
    }
}

/// (slope, intercept) of an ordinary least-squares line.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Measure once at t = 0, then accumulate ∫⟨J_H⟩ under 𝓛_HD with the trapezoid rule.
pub fn displacement_trace(
    rho0: &DensityMatrix,
    l_hd: &Superoperator,
    proj: &ProjectorSet,
    j_h: &QOperator,
    q: &QOperator,
    horizon: f64,
    dt: f64,
) -> Result<DisplacementTrace> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let q_expect = q.expectation(rho0);
    let post = kraus_map(rho0, proj)?;
    let steps = (horizon / dt).round().max(1.0) as usize;
    let step = l_hd.exp(dt);
    let jvec = crate::linalg::vec_op(&j_h.entries().adjoint());
    let mut state = crate::linalg::vec_op(post.entries());
    let mut times = Vec::with_capacity(steps + 1);
    let mut current = Vec::with_capacity(steps + 1);
    let mut displacement = Vec::with_capacity(steps + 1);
    let mut acc = q_expect;
    let mut prev = 0.0;
    for k in 0..=steps {
        // tr(J ρ) = vec(J†)† vec(ρ)
        let j = jvec.dotc(&state).re;
        if k > 0 {
            acc += 0.5 * dt * (prev + j);
        }
        times.push(k as f64 * dt);
        current.push(j);
        displacement.push(acc);
        prev = j;
        state = step.entries() * state;
    }
    Ok(DisplacementTrace { times, current, displacement, q_expect })
}

/// Energy-diagonal part of ⟨J_H⟩, whole degenerate blocks kept.
pub fn dc_current(rho_post: &DensityMatrix, spectral: &SpectralData, j_h: &QOperator) -> f64 {
    let u = &spectral.states;
    let r = u.adjoint() * rho_post.entries() * u;
    let j = u.adjoint() * j_h.entries() * u;
    let mut total = 0.0;
    for block in spectral.multiplets(DEGENERACY_TOL) {
        for a in block.clone() {
            for b in block.clone() {
                total += (r[(a, b)] * j[(b, a)]).re;
            }
        }
    }
    total
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    eigvalsh(rho.entries()).iter().map(|&p| {
        let p = p.max(ENTROPY_CLAMP);
        -p * p.ln()
    }).sum::<f64>()
}

/// (S, Δs) with Δs = (log dim − S)/log dim.
pub fn entropy_and_gap(rho: &DensityMatrix) -> (f64, f64) {
    let s_max = (rho.dim() as f64).ln();
    let s = von_neumann_entropy(rho).clamp(0.0, s_max);
    (s, ((s_max - s) / s_max).clamp(0.0, 1.0))
}

/// The operators needed to evaluate every current species on a state.
#[derive(Debug, Clone)]
pub struct CurrentOperators {
    pub j_h: QOperator,
    pub q: QOperator,
    pub j_dis: QOperator,
}

impl CurrentOperators {
    pub fn new(h: &QOperator, x: &QOperator, proj: &ProjectorSet, jumps: &[QOperator]) -> Result<Self> {
        Ok(CurrentOperators {
            j_h: hamiltonian_current_operator(h, x)?,
            q: crate::measurement::charge_displacement_operator(proj, x)?,
            j_dis: dissipative_current_operator(jumps, x)?,
        })
    }

    /// Currents in a Poisson steady state with mean measurement time τ.
    pub fn report(&self, rho: &DensityMatrix, tau: f64) -> CurrentReport {
        let j_h = self.j_h.expectation(rho);
        let q_expect = self.q.expectation(rho);
        let j_meas = q_expect / tau;
        let j_dis = self.j_dis.expectation(rho);
        let (entropy, entropy_gap) = entropy_and_gap(rho);
        CurrentReport { j_h, j_meas, j_dis, j_total: j_h + j_meas + j_dis, q_expect, entropy, entropy_gap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentReport {
    pub j_h: f64,
    pub j_meas: f64,
    pub j_dis: f64,
    pub j_total: f64,
    pub q_expect: f64,
    pub entropy: f64,
    pub entropy_gap: f64,
}
