use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::currents::{bond_current, dc_current, displacement_trace, entropy_and_gap, GeneratorPart};
use crate::error::{Error, Result};
use crate::lattice::{analytic_spectrum, momenta, Band, Model};
use crate::lindblad::{build_measurement_lindbladian, floquet_state, steady_state_diagnostics, thermal_state, Superoperator};
use crate::measurement::{kraus_map, MeasurementKind, MeasurementSpec};
use crate::zeno::{
    cell_fraction, solve_balance, three_site_parameters, three_site_zeno, transition_rates, two_site_closed_form,
};

use super::analysis::{argmin, decay_rate, late_slope};
use super::config::{bloch_from_angles, logspace, BlochMode, ExperimentConfig, FloquetMode, SweepVariable};
use super::system::{Environment, Measured};
use super::table::{Cell, Table};

/// Largest ‖𝓛[ρ]‖ accepted in an emitted row.
pub const ROW_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    ResidualExceeded,
    NonUnique,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::ResidualExceeded => "residual_exceeded",
            RowStatus::NonUnique => "non_unique",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub value: f64,
    pub j_h: f64,
    pub j_meas: f64,
    pub j_dis: f64,
    pub j_total: f64,
    pub q_expect: f64,
    pub entropy: f64,
    pub entropy_gap: f64,
    pub steady_state_residual: f64,
    pub null_space_gap: f64,
    pub status: RowStatus,
}

pub const RECORD_COLUMNS: [&str; 10] = [
    "j_h",
    "j_meas",
    "j_dis",
    "j_total",
    "q_expect",
    "entropy",
    "entropy_gap",
    "steady_state_residual",
    "null_space_gap",
    "status",
];

impl SweepRecord {
    fn failed(value: f64, null_space_gap: f64, status: RowStatus) -> Self {
        let nan = f64::NAN;
        SweepRecord {
            value,
            j_h: nan,
            j_meas: nan,
            j_dis: nan,
            j_total: nan,
            q_expect: nan,
            entropy: nan,
            entropy_gap: nan,
            steady_state_residual: nan,
            null_space_gap,
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.value.into(),
            self.j_h.into(),
            self.j_meas.into(),
            self.j_dis.into(),
            self.j_total.into(),
            self.q_expect.into(),
            self.entropy.into(),
            self.entropy_gap.into(),
            self.steady_state_residual.into(),
            self.null_space_gap.into(),
            self.status.as_str().into(),
        ]
    }
}

pub fn records_table(variable: SweepVariable, records: &[SweepRecord]) -> Table {
    let mut t = Table::new(std::iter::once(variable.name()).chain(RECORD_COLUMNS));
    for r in records {
        t.push(r.cells());
    }
    t
}

/// A command result: the table plus whatever goes into the sidecar.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    pub failures: usize,
    pub summary: Value,
}

fn scales_json(cfg: &ExperimentConfig) -> Result<Value> {
    Ok(serde_json::to_value(cfg.scales()?).expect("plain struct"))
}

/// Poisson steady state for one measurement setting.
pub fn poisson_record(m: &Measured<'_>, value: f64) -> Result<SweepRecord> {
    let l = &m.env.l_hd + &build_measurement_lindbladian(&m.proj, m.tau)?;
    match steady_state_diagnostics(&l) {
        Ok(ss) => {
            let r = m.ops.report(&ss.rho, m.tau);
            let status = if ss.residual <= ROW_RESIDUAL_TOL { RowStatus::Ok } else { RowStatus::ResidualExceeded };
            Ok(SweepRecord {
                value,
                j_h: r.j_h,
                j_meas: r.j_meas,
                j_dis: r.j_dis,
                j_total: r.j_total,
                q_expect: r.q_expect,
                entropy: r.entropy,
                entropy_gap: r.entropy_gap,
                steady_state_residual: ss.residual,
                null_space_gap: ss.null_gap,
                status,
            })
        }
        Err(Error::NonUniqueSteadyState { gap, .. }) => Ok(SweepRecord::failed(value, gap, RowStatus::NonUnique)),
        Err(e) => Err(e),
    }
}

/// Stroboscopic steady state; currents are period averages.
pub fn floquet_record(m: &Measured<'_>, value: f64) -> Result<SweepRecord> {
    match floquet_state(&m.env.l_hd, &m.proj, m.tau) {
        Ok(fs) => {
            let j_h = m.ops.j_h.expectation(&fs.rho_mean);
            let j_dis = m.ops.j_dis.expectation(&fs.rho_mean);
            let q_expect = m.ops.q.expectation(&fs.rho_pre);
            let j_meas = q_expect / m.tau;
            let (entropy, entropy_gap) = entropy_and_gap(&fs.rho_mean);
            let residual = (kraus_map(&fs.rho_pre, &m.proj)?.entries() - fs.rho_post.entries()).norm();
            let status = if residual <= ROW_RESIDUAL_TOL { RowStatus::Ok } else { RowStatus::ResidualExceeded };
            Ok(SweepRecord {
                value,
                j_h,
                j_meas,
                j_dis,
                j_total: j_h + j_meas + j_dis,
                q_expect,
                entropy,
                entropy_gap,
                steady_state_residual: residual,
                null_space_gap: fs.fixed_point_gap,
                status,
            })
        }
        Err(Error::NonUniqueFloquet { .. }) => Ok(SweepRecord::failed(value, 0.0, RowStatus::NonUnique)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScheme {
    Poisson,
    Floquet,
}

/// Lower end of the automatic τ grid in units of τ_Z.
pub fn auto_tau_lower(scheme: SweepScheme) -> f64 {
    match scheme {
        SweepScheme::Poisson => 0.1,
        SweepScheme::Floquet => 0.01,
    }
}

pub fn sweep_records(cfg: &ExperimentConfig, scheme: SweepScheme) -> Result<Vec<SweepRecord>> {
    let var = cfg.sweep.variable;
    let values = cfg.sweep_values(auto_tau_lower(scheme))?;
    let shared = Environment::from_config(cfg)?;
    let rebuild = matches!(var, SweepVariable::V | SweepVariable::Gamma0);
    values
        .par_iter()
        .map(|&value| {
            let point = cfg.with_value(var, value)?;
            let own;
            let env = if rebuild {
                own = Environment::from_config(&point)?;
                &own
            } else {
                &shared
            };
            let m = env.measured(&point.measurement)?;
            match scheme {
                SweepScheme::Poisson => poisson_record(&m, value),
                SweepScheme::Floquet => floquet_record(&m, value),
            }
        })
        .collect()
}

fn sweep_output(cfg: &ExperimentConfig, scheme: SweepScheme) -> Result<Output> {
    let records = sweep_records(cfg, scheme)?;
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    Ok(Output {
        table: records_table(cfg.sweep.variable, &records),
        failures,
        summary: json!({ "scales": scales_json(cfg)?, "points": records.len() }),
    })
}

pub fn cmd_tau_sweep(cfg: &ExperimentConfig) -> Result<Output> {
    sweep_output(cfg, SweepScheme::Poisson)
}

pub fn cmd_floquet(cfg: &ExperimentConfig) -> Result<Output> {
    match cfg.floquet.mode {
        FloquetMode::Sweep => sweep_output(cfg, SweepScheme::Floquet),
        FloquetMode::Trace => floquet_trace(cfg),
    }
}

/// ⟨J_H⟩(t) within one period of the stroboscopic steady state.
fn floquet_trace(cfg: &ExperimentConfig) -> Result<Output> {
    let env = Environment::from_config(cfg)?;
    let m = env.measured(&cfg.measurement)?;
    let fs = floquet_state(&env.l_hd, &m.proj, m.tau)?;
    let steps = (m.tau * env.spectral.norm_h / 0.01).ceil().max(100.0);
    let dt = m.tau / steps;
    let trace = displacement_trace(&fs.rho_pre, &env.l_hd, &m.proj, &m.ops.j_h, &m.ops.q, m.tau, dt)?;
    let mut table = Table::new(["t", "j_h", "displacement"]);
    for k in 0..trace.times.len() {
        table.push(vec![trace.times[k].into(), trace.current[k].into(), trace.displacement[k].into()]);
    }
    let rate = decay_rate(&trace.times, &trace.current);
    Ok(Output {
        table,
        failures: 0,
        summary: json!({
            "scales": scales_json(cfg)?,
            "tau": m.tau,
            "oscillation_decay_rate": rate,
            "fixed_point_gap": fs.fixed_point_gap,
        }),
    })
}

pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Output> {
    if cfg.lattice.model != Model::TwoSite {
        return Err(Error::Config("the band formula covers the two-site chain only".into()));
    }
    let env = Environment::from_config(cfg)?;
    let mut entries = Vec::new();
    for k in momenta(&cfg.lattice) {
        for band in [Band::Lower, Band::Upper] {
            entries.push((k, band, analytic_spectrum(&cfg.lattice, k, band)?));
        }
    }
    // Pair the two sorted lists so every eigenvalue is used exactly once.
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].2.total_cmp(&entries[b].2));
    let mut numeric = vec![0.0; entries.len()];
    for (rank, &idx) in order.iter().enumerate() {
        numeric[idx] = env.spectral.energies[rank];
    }
    let mut table = Table::new(["k", "band", "energy_analytic", "energy_numeric"]);
    let mut worst = 0.0f64;
    for ((k, band, e), num) in entries.into_iter().zip(numeric) {
        worst = worst.max((e - num).abs());
        let name = match band {
            Band::Lower => "lower",
            Band::Upper => "upper",
        };
        table.push(vec![k.into(), name.into(), e.into(), num.into()]);
    }
    Ok(Output { table, failures: 0, summary: json!({ "max_abs_difference": worst, "norm_h": env.spectral.norm_h }) })
}

/// One measurement of the Gibbs state at t = 0, then free evolution.
pub fn cmd_pulse(cfg: &ExperimentConfig) -> Result<Output> {
    let env = Environment::from_config(cfg)?;
    let m = env.measured(&cfg.measurement)?;
    let rho = thermal_state(&env.spectral, cfg.bath.temperature)?;
    let generator = if cfg.pulse.with_bath { env.l_hd.clone() } else { Superoperator::hamiltonian(&env.h) };
    let dt = cfg.pulse.dt.unwrap_or(0.01 / env.spectral.norm_h);
    let trace = displacement_trace(&rho, &generator, &m.proj, &m.ops.j_h, &m.ops.q, cfg.pulse.horizon, dt)?;
    let mut table = Table::new(["t", "j_h", "displacement"]);
    for k in 0..trace.times.len() {
        table.push(vec![trace.times[k].into(), trace.current[k].into(), trace.displacement[k].into()]);
    }
    let post = kraus_map(&rho, &m.proj)?;
    Ok(Output {
        table,
        failures: 0,
        summary: json!({
            "q_expect": trace.q_expect,
            "dc_current": dc_current(&post, &env.spectral, &m.ops.j_h),
            "late_slope": late_slope(&trace),
        }),
    })
}

pub fn cmd_bloch_sweep(cfg: &ExperimentConfig) -> Result<Output> {
    let env = Environment::from_config(cfg)?;
    let points = cfg.sphere.points();
    let tau = cfg.measurement.tau;
    match cfg.bloch.mode {
        BlochMode::Pulse => {
            let rho = thermal_state(&env.spectral, cfg.bath.temperature)?;
            let rows: Vec<Vec<Cell>> = points
                .par_iter()
                .map(|&(theta, phi)| {
                    let mv = bloch_from_angles(theta, phi);
                    let m = env.measured(&MeasurementSpec::bloch(mv, tau))?;
                    let post = kraus_map(&rho, &m.proj)?;
                    Ok(vec![
                        theta.into(),
                        phi.into(),
                        mv[0].into(),
                        mv[1].into(),
                        mv[2].into(),
                        m.ops.j_h.expectation(&post).into(),
                        m.ops.q.expectation(&rho).into(),
                        dc_current(&post, &env.spectral, &m.ops.j_h).into(),
                    ])
                })
                .collect::<Result<_>>()?;
            let mut table = Table::new(["theta", "phi", "m_x", "m_y", "m_z", "j_h_0plus", "q_expect", "j_dc"]);
            rows.into_iter().for_each(|r| table.push(r));
            Ok(Output { table, failures: 0, summary: json!({ "points": points.len() }) })
        }
        BlochMode::Zeno => {
            let rows: Vec<(Vec<Cell>, bool)> = points
                .par_iter()
                .map(|&(theta, phi)| {
                    let mv = bloch_from_angles(theta, phi);
                    let m = env.measured(&MeasurementSpec::bloch(mv, tau))?;
                    let rec = poisson_record(&m, theta)?;
                    let w = solve_balance(&transition_rates(&env.jumps, &m.proj)?)?;
                    let formula = two_site_closed_form(cfg.lattice.t1, cfg.lattice.v, mv, cell_fraction(&w, 2, 0))?;
                    let row = vec![
                        theta.into(),
                        phi.into(),
                        mv[0].into(),
                        mv[1].into(),
                        mv[2].into(),
                        rec.j_h.into(),
                        rec.j_meas.into(),
                        formula.j_h.into(),
                        rec.steady_state_residual.into(),
                        rec.status.as_str().into(),
                    ];
                    Ok((row, rec.is_ok()))
                })
                .collect::<Result<_>>()?;
            let mut table = Table::new([
                "theta",
                "phi",
                "m_x",
                "m_y",
                "m_z",
                "j_h",
                "j_meas",
                "j_h_formula",
                "steady_state_residual",
                "status",
            ]);
            let failures = rows.iter().filter(|(_, ok)| !ok).count();
            rows.into_iter().for_each(|(r, _)| table.push(r));
            Ok(Output { table, failures, summary: json!({ "points": points.len(), "tau": tau }) })
        }
    }
}

fn relative_error(formula: f64, numerical: f64) -> f64 {
    let diff = (formula - numerical).abs();
    // Zero-valued predictions are compared in absolute terms.
    if formula.abs() > 1e-12 { diff / formula.abs() } else { diff }
}

struct Report {
    table: Table,
    failures: usize,
}

impl Report {
    fn row(&mut self, case: &str, tau: f64, quantity: &str, formula: f64, numerical: f64) {
        self.table.push(vec![
            case.into(),
            tau.into(),
            quantity.into(),
            formula.into(),
            numerical.into(),
            relative_error(formula, numerical).into(),
        ]);
    }
}

fn default_taus(tau_z: f64) -> Vec<f64> {
    [1e-2, 1e-3, 1e-4].iter().map(|f| f * tau_z).collect()
}

pub fn cmd_zeno_report(cfg: &ExperimentConfig) -> Result<Output> {
    let mut rep = Report {
        table: Table::new(["case", "tau", "quantity", "formula", "numerical", "relative_error"]),
        failures: 0,
    };
    let mut summary = serde_json::Map::new();
    if let MeasurementKind::Bloch { m: mv } = cfg.measurement.kind {
        let env = Environment::from_config(cfg)?;
        let scales = cfg.scales()?;
        let taus = cfg.zeno.taus.clone().unwrap_or_else(|| default_taus(scales.tau_z));
        let w = {
            let m = env.measured(&cfg.measurement)?;
            solve_balance(&transition_rates(&env.jumps, &m.proj)?)?
        };
        let formula = two_site_closed_form(cfg.lattice.t1, cfg.lattice.v, mv, cell_fraction(&w, 2, 0))?;
        let recs: Vec<SweepRecord> = taus
            .par_iter()
            .map(|&tau| poisson_record(&env.measured(&cfg.measurement.with_tau(tau))?, tau))
            .collect::<Result<_>>()?;
        for r in &recs {
            rep.failures += usize::from(!r.is_ok());
            rep.row("two_site", r.value, "j_h", formula.j_h, r.j_h);
            rep.row("two_site", r.value, "j_meas", formula.j_meas, r.j_meas);
            rep.row("two_site", r.value, "j_h_plus_j_meas", 0.0, r.j_h + r.j_meas);
        }
        // τ* is located as the minimum of the entropy gap on the default grid.
        let grid = logspace(0.1 * scales.tau_z, 100.0 * scales.tau_r, super::config::DEFAULT_TAU_POINTS);
        let gaps: Vec<f64> = grid
            .par_iter()
            .map(|&tau| Ok(poisson_record(&env.measured(&cfg.measurement.with_tau(tau))?, tau)?.entropy_gap))
            .collect::<Result<_>>()?;
        let tau_star = argmin(&gaps).map(|k| grid[k]).unwrap_or(f64::NAN);
        rep.row("scales", f64::NAN, "tau_z", scales.tau_z, scales.tau_z);
        rep.row("scales", f64::NAN, "tau_r", scales.tau_r, scales.tau_r);
        rep.row("scales", f64::NAN, "tau_star", scales.tau_star_estimate, tau_star);
        summary.insert("scales".into(), serde_json::to_value(scales).expect("plain struct"));
        summary.insert("tau_star_entropy_minimum".into(), json!(tau_star));
    }
    three_site_section(cfg, &mut rep, &mut summary)?;
    Ok(Output { table: rep.table, failures: rep.failures, summary: Value::Object(summary) })
}

fn three_site_section(cfg: &ExperimentConfig, rep: &mut Report, summary: &mut serde_json::Map<String, Value>) -> Result<()> {
    let ts = cfg.zeno.three_site;
    let lattice = ts.lattice();
    let env = Environment::new(&lattice, &cfg.bath)?;
    let scales = crate::zeno::regime_scales(env.spectral.norm_h, cfg.bath.gamma0)?;
    let taus = cfg.zeno.taus.clone().unwrap_or_else(|| default_taus(scales.tau_z));
    let spec = MeasurementSpec::three_site(ts.alpha, 1.0);
    let w = solve_balance(&transition_rates(&env.jumps, &env.measured(&spec)?.proj)?)?;
    let (u, du) = three_site_parameters(&w);
    let z = three_site_zeno(ts.t1, ts.t2, ts.alpha, u, du);
    summary.insert("three_site_loop_current".into(), json!(z.loop_current));
    let rows: Vec<(f64, [f64; 4], bool)> = taus
        .par_iter()
        .map(|&tau| {
            let m = env.measured(&spec.with_tau(tau))?;
            let l = &env.l_hd + &build_measurement_lindbladian(&m.proj, tau)?;
            let ss = steady_state_diagnostics(&l)?;
            let bond = |a: usize, b: usize| -> Result<f64> {
                let mut total = 0.0;
                for n in 0..lattice.cells {
                    let (x, y) = (3 * n + a, 3 * n + b);
                    total += bond_current(&ss.rho, x, y, GeneratorPart::Hamiltonian(&env.h))?;
                    total += bond_current(&ss.rho, x, y, GeneratorPart::Measurement { proj: &m.proj, tau })?;
                }
                Ok(total)
            };
            let rec = poisson_record(&m, tau)?;
            Ok((tau, [bond(0, 1)?, bond(1, 2)?, bond(0, 2)?, rec.j_h], rec.is_ok()))
        })
        .collect::<Result<_>>()?;
    for (tau, [j12, j23, j13, jh], ok) in rows {
        rep.failures += usize::from(!ok);
        rep.row("three_site", tau, "j_12", z.total_12(), j12);
        rep.row("three_site", tau, "j_23", z.total_23(), j23);
        rep.row("three_site", tau, "j_13", z.total_13(), j13);
        rep.row("three_site", tau, "j_h", z.net_hamiltonian, jh);
    }
    Ok(())
}
