//! Periodic chains with two or three sites per unit cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, CMatrix};
use crate::operator::QOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    TwoSite,
    ThreeSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub model: Model,
    pub cells: usize,
    pub t1: f64,
    pub t2: f64,
    #[serde(default)]
    pub t3: f64,
    #[serde(rename = "V")]
    pub v: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec::two_site(3, 1.0, 0.5, 3.0)
    }
}

impl LatticeSpec {
    pub fn two_site(cells: usize, t1: f64, t2: f64, v: f64) -> Self {
        LatticeSpec { model: Model::TwoSite, cells, t1, t2, t3: 0.0, v }
    }

    pub fn three_site(cells: usize, t1: f64, t2: f64, t3: f64, v: f64) -> Self {
        LatticeSpec { model: Model::ThreeSite, cells, t1, t2, t3, v }
    }

    pub fn with_v(&self, v: f64) -> Self {
        LatticeSpec { v, ..*self }
    }

    pub fn cell_size(&self) -> usize {
        match self.model {
            Model::TwoSite => 2,
            Model::ThreeSite => 3,
        }
    }

    pub fn dim(&self) -> usize {
        self.cells * self.cell_size()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(Error::Dimension(format!("need at least 2 cells, got {}", self.cells)));
        }
        for (name, x) in [("t1", self.t1), ("t2", self.t2), ("t3", self.t3), ("V", self.v)] {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {x}")));
            }
        }
        Ok(())
    }
}

pub fn build_hamiltonian(spec: &LatticeSpec) -> Result<QOperator> {
    spec.validate()?;
    let d = spec.dim();
    let mut h = CMatrix::zeros(d, d);
    let mut hop = |a: usize, b: usize, t: f64| {
        let b = b % d;
        h[(a, b)] -= c(t);
        h[(b, a)] -= c(t);
    };
    for n in 0..spec.cells {
        match spec.model {
            Model::TwoSite => {
                let s = 2 * n;
                hop(s, s + 1, spec.t1);
                hop(s + 1, s + 2, spec.t2);
            }
            Model::ThreeSite => {
                let s = 3 * n;
                hop(s, s + 1, spec.t1);
                hop(s + 1, s + 2, spec.t2);
                hop(s + 2, s + 3, spec.t3);
            }
        }
    }
    let last = spec.cell_size() - 1;
    for n in 0..spec.cells {
        let s = n * spec.cell_size();
        h[(s, s)] += c(spec.v / 2.0);
        h[(s + last, s + last)] -= c(spec.v / 2.0);
    }
    QOperator::hermitian(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Lower,
    Upper,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Lower => -1.0,
            Band::Upper => 1.0,
        }
    }
}

/// Allowed crystal momenta k = nπ/N, n = 0..N.
pub fn momenta(spec: &LatticeSpec) -> Vec<f64> {
    (0..spec.cells).map(|n| n as f64 * PI / spec.cells as f64).collect()
}

pub fn analytic_spectrum(spec: &LatticeSpec, k: f64, band: Band) -> Result<f64> {
    if spec.model != Model::TwoSite {
        return Err(Error::Unsupported("closed-form spectrum exists only for the two-site chain".into()));
    }
    spec.validate()?;
    let n = k * spec.cells as f64 / PI;
    if (n - n.round()).abs() > 1e-9 {
        return Err(Error::OutOfRange { what: "momentum", value: format!("{k}") });
    }
    let (t1, t2, v) = (spec.t1, spec.t2, spec.v);
    let e2 = t1 * t1 + t2 * t2 + 2.0 * t1 * t2 * (2.0 * k).cos() + v * v / 4.0;
    Ok(band.sign() * e2.max(0.0).sqrt())
}

pub fn site_positions(spec: &LatticeSpec) -> Vec<f64> {
    (0..spec.dim()).map(|x| x as f64).collect()
}

pub fn position_operator(spec: &LatticeSpec) -> Result<QOperator> {
    spec.validate()?;
    let d = spec.dim();
    QOperator::hermitian(CMatrix::from_fn(d, d, |i, j| if i == j { c(i as f64) } else { c(0.0) }))
}

pub fn site_projector(spec: &LatticeSpec, site: usize) -> Result<QOperator> {
    let d = spec.dim();
    if site >= d {
        return Err(Error::OutOfRange { what: "site", value: format!("{site} (dim {d})") });
    }
    let mut m = CMatrix::zeros(d, d);
    m[(site, site)] = c(1.0);
    QOperator::hermitian(m)
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub energies: Vec<f64>,
    pub states: CMatrix,
    pub norm_h: f64,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Index ranges of eigenvalues closer than `tol` to their neighbours.
    pub fn multiplets(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.energies.len() {
            if k == self.energies.len() || self.energies[k] - self.energies[k - 1] > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Distinct positive transition frequencies |E_i − E_j|.
    pub fn gaps(&self, tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (i, a) in self.energies.iter().enumerate() {
            for b in &self.energies[i + 1..] {
                let g = b - a;
                if g > tol && out.iter().all(|x| (x - g).abs() > tol) {
                    out.push(g);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

pub fn eigendecompose(h: &QOperator) -> Result<SpectralData> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(crate::linalg::hermitian_deviation(h.entries())));
    }
    let (energies, states) = eigh(h.entries());
    let norm_h = energies.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    Ok(SpectralData { energies, states, norm_h })
}

fn permutation(d: usize, map: impl Fn(usize) -> usize) -> Result<QOperator> {
    let mut p = CMatrix::zeros(d, d);
    for x in 0..d {
        p[(map(x), x)] = c(1.0);
    }
    QOperator::new(p)
}

/// Site reflection through the middle of the first t1 bond (two sites) or through
/// the central site of the first cell (three sites, only when t1 = t2).
pub fn inversion_operator(spec: &LatticeSpec) -> Result<QOperator> {
    spec.validate()?;
    let d = spec.dim();
    match spec.model {
        Model::TwoSite => QOperator::hermitian(permutation(d, |x| (d + 1 - x) % d)?.into_entries()),
        Model::ThreeSite if spec.t1 == spec.t2 => QOperator::hermitian(permutation(d, |x| (d + 2 - x) % d)?.into_entries()),
        Model::ThreeSite => Err(Error::Unsupported(
            "three-site chain has no inversion centre unless t1 = t2".into(),
        )),
    }
}

/// Cyclic shift by one unit cell.
pub fn translation_operator(spec: &LatticeSpec) -> Result<QOperator> {
    spec.validate()?;
    let d = spec.dim();
    let s = spec.cell_size();
    permutation(d, |x| (x + s) % d)
}

/// Complex conjugation in the position basis.
pub fn time_reverse(op: &QOperator) -> QOperator {
    let conj = op.entries().map(|z| z.conj());
    if op.is_hermitian() {
        QOperator::hermitian(conj).expect("conjugation preserves Hermiticity")
    } else {
        QOperator::new(conj).expect("square")
    }
}
