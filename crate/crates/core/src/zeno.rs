//! Fast-measurement limit: balance equations, effective generators and closed forms.

use nalgebra::{DMatrix, SVD};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, commutator, identity, null_space, trace, trace_product, unvec_op, CMatrix};
use crate::lindblad::Superoperator;
use crate::measurement::ProjectorSet;
use crate::operator::{DensityMatrix, QOperator};

pub const KERNEL_CUTOFF: f64 = 1e-10;
pub const GAP_TOL: f64 = 1e-8;

/// Classical transition rates, `rates[(a, b)]` = T^{a→b}.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    rates: DMatrix<f64>,
}

impl RateMatrix {
    pub fn new(mut rates: DMatrix<f64>) -> Result<Self> {
        if rates.nrows() != rates.ncols() {
            return Err(Error::Dimension("rate matrix must be square".into()));
        }
        if let Some(bad) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate {bad} is not a non-negative number")));
        }
        rates.fill_diagonal(0.0);
        Ok(RateMatrix { rates })
    }

    pub fn len(&self) -> usize {
        self.rates.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Rates read off the population block of an effective generator,
    /// T^{a→b} = tr(P_b 𝓛[P_a]). Small negative entries from higher orders are dropped.
    pub fn from_generator(l: &Superoperator, proj: &ProjectorSet) -> Result<Self> {
        let n = proj.len();
        let flows: Vec<CMatrix> = proj.projectors().iter().map(|p| l.apply(p.entries())).collect();
        let mut rates = DMatrix::zeros(n, n);
        let mut scale = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let r = trace_product(proj.projectors()[b].entries(), &flows[a]).re;
                    rates[(a, b)] = r;
                    scale = scale.max(r.abs());
                }
            }
        }
        for r in rates.iter_mut() {
            if *r < 0.0 {
                if *r < -1e-6 * scale {
                    return Err(Error::PerturbationInvalid(format!("negative effective rate {r:.3e}")));
                }
                *r = 0.0;
            }
        }
        Self::new(rates)
    }
}

/// T^{a→a'} = Σ_α |⟨a'|L_α|a⟩|²
pub fn transition_rates(jumps: &[QOperator], proj: &ProjectorSet) -> Result<RateMatrix> {
    if !proj.is_rank_one() {
        return Err(Error::Unsupported("transition rates need a non-degenerate measurement".into()));
    }
    let n = proj.len();
    let mut rates = DMatrix::zeros(n, n);
    for l in jumps {
        l.check_dim(proj.dim())?;
        let lm = l.entries();
        let ld = lm.adjoint();
        for a in 0..n {
            let moved = lm * proj.projectors()[a].entries() * &ld;
            for b in 0..n {
                if a != b {
                    rates[(a, b)] += trace_product(proj.projectors()[b].entries(), &moved).re;
                }
            }
        }
    }
    RateMatrix::new(rates.map(|r: f64| r.max(0.0)))
}

fn reachable(rates: &DMatrix<f64>, tol: f64, forward: bool) -> Vec<bool> {
    let n = rates.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(a) = stack.pop() {
        for b in 0..n {
            let r = if forward { rates[(a, b)] } else { rates[(b, a)] };
            if !seen[b] && r > tol {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen
}

/// Stationary distribution of the classical master equation.
pub fn solve_balance(rates: &RateMatrix) -> Result<Vec<f64>> {
    let n = rates.len();
    if n == 0 {
        return Err(Error::Dimension("empty rate matrix".into()));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let t = &rates.rates;
    let tol = 1e-14 * t.max();
    if !reachable(t, tol, true).iter().all(|&s| s) || !reachable(t, tol, false).iter().all(|&s| s) {
        return Err(Error::Reducible);
    }
    let mut g = t.transpose();
    for a in 0..n {
        g[(a, a)] = -t.row(a).sum();
    }
    let svd = SVD::new(g, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = svd.singular_values.imin();
    let v = v_t.row(k);
    let sum: f64 = v.iter().sum();
    let mut w: Vec<f64> = v.iter().map(|x| x / sum).collect();
    for x in &mut w {
        *x = x.max(0.0);
    }
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// 𝓠_A ρ⁽¹⁾ = −iτ[H, ρ⁽⁰⁾] with the measurement-diagonal part removed.
pub fn first_order_coherences(rho0: &DensityMatrix, h: &QOperator, proj: &ProjectorSet, tau: f64) -> Result<QOperator> {
    h.check_dim(rho0.dim())?;
    let x = commutator(h.entries(), rho0.entries()) * (-crate::linalg::I * tau);
    let mut diag = CMatrix::zeros(x.nrows(), x.ncols());
    for p in proj.projectors() {
        diag += p.entries() * &x * p.entries();
    }
    QOperator::hermitize(x - diag)
}

/// 𝓟𝓥𝓟 − 𝓟𝓥𝓠 𝓛₀⁺ 𝓠𝓥𝓟, with 𝓟 the kernel projector of 𝓛₀.
pub fn effective_lindbladian(p: &Superoperator, v: &Superoperator, l0: &Superoperator) -> Result<Superoperator> {
    let n = l0.dim() * l0.dim();
    let kernel_dim = trace(p.entries()).re.round() as usize;
    let svd = SVD::new(l0.entries().clone(), true, true);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    let cutoff = KERNEL_CUTOFF * s.last().copied().unwrap_or(0.0).max(1.0);
    if kernel_dim > 0 && s[kernel_dim - 1] > cutoff {
        return Err(Error::PerturbationInvalid("projector does not span the kernel of the unperturbed generator".into()));
    }
    if kernel_dim < n && s[kernel_dim] <= GAP_TOL {
        return Err(Error::PerturbationInvalid(format!("unperturbed generator is gapless ({:.3e})", s[kernel_dim])));
    }
    let pinv = svd.pseudo_inverse(cutoff).expect("non-negative cutoff");
    let pm = p.entries();
    let qm = identity(n) - pm;
    let vm = v.entries();
    let first = pm * vm * pm;
    let second = pm * vm * &qm * pinv * &qm * vm * pm;
    Superoperator::new(l0.dim(), first - second)
}

/// Stationary state of a generator confined to the range of 𝓟.
pub fn kernel_steady_state(l_eff: &Superoperator, p: &Superoperator) -> Result<DensityMatrix> {
    let n = l_eff.dim() * l_eff.dim();
    let m = l_eff.entries() - (identity(n) - p.entries());
    let ns = null_space(&m);
    if ns.singular_values.get(1).is_some_and(|&g| g <= GAP_TOL) {
        let null_dim = ns.singular_values.iter().filter(|&&s| s <= GAP_TOL).count();
        return Err(Error::NonUniqueSteadyState { null_dim, gap: ns.singular_values[1] });
    }
    DensityMatrix::normalized(unvec_op(&ns.vectors.column(0).into_owned(), l_eff.dim()))
}

/// ρ ↦ Σ_E P_E ρ P_E over energy multiplets.
pub fn energy_superprojector(spectral: &crate::lattice::SpectralData) -> Superoperator {
    let d = spectral.dim();
    let mut total = CMatrix::zeros(d * d, d * d);
    for block in spectral.multiplets(crate::currents::DEGENERACY_TOL) {
        let mut pe = CMatrix::zeros(d, d);
        for k in block {
            pe += spectral.states.column(k) * spectral.states.column(k).adjoint();
        }
        total += crate::linalg::kron(&pe.transpose(), &pe);
    }
    Superoperator::new(d, total).expect("square by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeScales {
    pub tau_z: f64,
    pub tau_r: f64,
    pub tau_star_estimate: f64,
}

pub fn regime_scales(h_norm: f64, gamma0: f64) -> Result<RegimeScales> {
    if !(h_norm > 0.0 && gamma0 > 0.0) {
        return Err(Error::InvalidParameter("scales need positive ‖H‖ and γ0".into()));
    }
    Ok(RegimeScales { tau_z: gamma0 / (h_norm * h_norm), tau_r: 1.0 / gamma0, tau_star_estimate: 1.0 / h_norm })
}

#[derive(Debug, Clone)]
pub struct ZenoSolution {
    pub weights: Vec<f64>,
    pub rho0: DensityMatrix,
    pub rho1_offdiag: QOperator,
    pub tau_z: f64,
    pub tau_r: f64,
}

/// Leading-order state from the bath rates alone, plus its first coherent correction.
pub fn zeno_solution(
    h: &QOperator,
    jumps: &[QOperator],
    proj: &ProjectorSet,
    tau: f64,
    gamma0: f64,
) -> Result<ZenoSolution> {
    let rates = transition_rates(jumps, proj)?;
    let weights = solve_balance(&rates)?;
    zeno_solution_from_weights(h, proj, tau, gamma0, weights)
}

pub fn zeno_solution_from_weights(
    h: &QOperator,
    proj: &ProjectorSet,
    tau: f64,
    gamma0: f64,
    weights: Vec<f64>,
) -> Result<ZenoSolution> {
    let mut rho = CMatrix::zeros(proj.dim(), proj.dim());
    for (w, p) in weights.iter().zip(proj.projectors()) {
        rho += p.entries() * c(*w);
    }
    let rho0 = DensityMatrix::normalized(rho)?;
    let rho1_offdiag = first_order_coherences(&rho0, h, proj, tau)?;
    let h_norm = crate::lattice::eigendecompose(h)?.norm_h;
    let scales = regime_scales(h_norm, gamma0)?;
    Ok(ZenoSolution { weights, rho0, rho1_offdiag, tau_z: scales.tau_z, tau_r: scales.tau_r })
}

/// Population rates of the fast-measurement effective generator at finite τ.
pub fn effective_rates(h: &QOperator, dissipator: &Superoperator, proj: &ProjectorSet, tau: f64) -> Result<RateMatrix> {
    let pa = crate::lindblad::kraus_superprojector(proj);
    let l0 = crate::lindblad::build_measurement_lindbladian(proj, tau)?;
    let v = &Superoperator::hamiltonian(h) + dissipator;
    let l_eff = effective_lindbladian(&pa, &v, &l0)?;
    RateMatrix::from_generator(&l_eff, proj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoSiteZeno {
    pub j_h: f64,
    pub j_meas: f64,
}

/// Zeno-limit currents of one two-site cell, h = (−t1, 0, V/2).
pub fn two_site_closed_form(t1: f64, v: f64, m: [f64; 3], w_left: f64) -> Result<TwoSiteZeno> {
    let m = crate::measurement::normalize3(m)?;
    let h = [-t1, 0.0, v / 2.0];
    let cross_z = h[0] * m[1] - h[1] * m[0];
    let j_h = -2.0 * (w_left - 0.5) * cross_z;
    Ok(TwoSiteZeno { j_h, j_meas: -j_h })
}

/// Cell-averaged weight of the first outcome, w₊/(w₊ + w₋).
pub fn cell_fraction(weights: &[f64], cell_size: usize, outcome: usize) -> f64 {
    let cells = weights.len() / cell_size;
    weights
        .chunks(cell_size)
        .map(|cw| cw[outcome] / cw.iter().sum::<f64>())
        .sum::<f64>()
        / cells as f64
}

/// (u, Δu) = (3w₃ − 1, 3(w₂ − w₁)) from cell-normalized weights.
pub fn three_site_parameters(weights: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = (0..3).map(|k| cell_fraction(weights, 3, k)).collect();
    (3.0 * w[2] - 1.0, 3.0 * (w[1] - w[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSiteZeno {
    pub meas_12: f64,
    pub meas_23: f64,
    pub meas_13: f64,
    pub ham_12: f64,
    pub ham_23: f64,
    pub ham_13: f64,
    pub net_hamiltonian: f64,
    /// Common value of the total bond currents 1→2, 2→3 and 3→1.
    pub loop_current: f64,
}

impl ThreeSiteZeno {
    pub fn total_12(&self) -> f64 {
        self.meas_12 + self.ham_12
    }

    pub fn total_23(&self) -> f64 {
        self.meas_23 + self.ham_23
    }

    pub fn total_13(&self) -> f64 {
        self.meas_13 + self.ham_13
    }

    /// Net measurement displacement per unit time; bond 1→3 spans two sites.
    pub fn net_measurement(&self) -> f64 {
        self.meas_12 + self.meas_23 + 2.0 * self.meas_13
    }
}

pub fn three_site_zeno(t1: f64, t2: f64, alpha: f64, u: f64, du: f64) -> ThreeSiteZeno {
    let s = alpha.sin() / 18.0;
    let meas_12 = (-2.0 * (t1 - t2) * u + (4.0 * t1 + t2) * du) * s;
    let meas_23 = ((t1 - 4.0 * t2) * u - (t1 + t2) * du) * s;
    let meas_13 = (-(t1 + 2.0 * t2) * u + (t1 - t2) * du) * s;
    let ham_12 = t1 * (3.0 * u - 5.0 * du) * s;
    let ham_23 = 2.0 * t2 * (3.0 * u + du) * s;
    let net_hamiltonian = (3.0 * (t1 + 2.0 * t2) * u - (5.0 * t1 - 2.0 * t2) * du) * s;
    let loop_current = ((t1 + 2.0 * t2) * u - (t1 - t2) * du) * s;
    ThreeSiteZeno { meas_12, meas_23, meas_13, ham_12, ham_23, ham_13: 0.0, net_hamiltonian, loop_current }
}

/// Outcome probabilities tr(P_a ρ).
pub fn outcome_weights(rho: &DensityMatrix, proj: &ProjectorSet) -> Vec<f64> {
    proj.projectors().iter().map(|p| trace_product(p.entries(), rho.entries()).re).collect()
}
