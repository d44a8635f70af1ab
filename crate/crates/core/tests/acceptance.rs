//! Reproduction checks, one line per criterion. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use monitored_chain::experiments::analysis::{argmax, argmin, local_maxima, loglog_slope};
use monitored_chain::experiments::{
    poisson_record, sweep_records, Environment, ExperimentConfig, Grid, SweepScheme, SweepVariable,
};
use monitored_chain::linalg::{CMatrix, C64};
use monitored_chain::prelude::*;
use monitored_chain::zeno::{
    cell_fraction, effective_rates, outcome_weights, three_site_parameters,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = std::result::Result<String, String>;

fn unit(m: [f64; 3]) -> [f64; 3] {
    normalize3(m).unwrap()
}

fn env(t1: f64, t2: f64, v: f64, gamma0: f64, temperature: f64) -> Environment {
    Environment::new(&LatticeSpec::two_site(3, t1, t2, v), &BathSpec { gamma0, temperature }).unwrap()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok { Ok(detail) } else { Err(detail) }
}

// Selection-rule table, one column per measurement class; rows J_H(0+), J_H(t), DC, ⟨Q⟩. true = vanishes.
const TABLE: [[bool; 4]; 5] = [
    [true, true, true, true],
    [true, false, true, false],
    [false, false, false, false],
    [true, false, true, false],
    [false, false, false, false],
];

fn c1() -> Check {
    let cols = [
        (0.0, unit([0.0, 1.0, 1.0])),
        (0.0, unit([1.0, 0.0, 1.0])),
        (0.0, unit([1.0, 1.0, 1.0])),
        (3.0, [1.0, 0.0, 0.0]),
        (3.0, unit([0.0, 1.0, -1.0])),
    ];
    let mut worst_zero = 0.0f64;
    let mut weakest = f64::INFINITY;
    for (col, &(v, m)) in cols.iter().enumerate() {
        let e = env(1.0, 0.5, v, 1e-3, 0.1);
        let meas = e.measured(&MeasurementSpec::bloch(m, 1.0)).unwrap();
        let rho = thermal_state(&e.spectral, 0.1).unwrap();
        let post = kraus_map(&rho, &meas.proj).unwrap();
        let trace = displacement_trace(&rho, &Superoperator::hamiltonian(&e.h), &meas.proj, &meas.ops.j_h, &meas.ops.q, 40.0, 0.01)
            .unwrap();
        let all_t = trace.current.iter().fold(0.0f64, |a, j| a.max(j.abs()));
        let values = [
            meas.ops.j_h.expectation(&post),
            all_t,
            dc_current(&post, &e.spectral, &meas.ops.j_h),
            meas.ops.q.expectation(&rho),
        ];
        let rules = predict_selection_rules(&classify_bloch(m).unwrap().with_hamiltonian(v == 0.0));
        let predicted = [rules.jh_at_0plus_zero, rules.jh_all_t_zero, rules.jh_dc_zero, rules.q_zero];
        if predicted != TABLE[col] {
            return Err(format!("column {}: selection rules {:?} disagree with the table", col + 1, predicted));
        }
        for (row, &val) in values.iter().enumerate() {
            if TABLE[col][row] {
                worst_zero = worst_zero.max(val.abs());
            } else {
                weakest = weakest.min(val.abs());
            }
        }
    }
    ensure(worst_zero <= 1e-10 && weakest >= 1e-4, format!("max |zero entry| {worst_zero:.2e}, min |allowed entry| {weakest:.2e}"))
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    a.qr().q()
}

fn c2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for draw in 0..50 {
        let three = draw % 2 == 1;
        let v = rng.gen_range(-3.0..3.0);
        let lattice = if three {
            LatticeSpec::three_site(3, 1.0, 0.5, 0.7, v)
        } else {
            LatticeSpec::two_site(3, 1.0, 0.5, v)
        };
        let cell = lattice.cell_size();
        let bases: Vec<CMatrix> = (0..lattice.cells).map(|_| random_unitary(cell, &mut rng)).collect();
        let proj = ProjectorSet::from_cell_bases(&bases).unwrap();
        let h = build_hamiltonian(&lattice).unwrap();
        let x = position_operator(&lattice).unwrap();
        let ops = CurrentOperators::new(&h, &x, &proj, &[]).unwrap();
        let rho = DensityMatrix::maximally_mixed(lattice.dim());
        let post = kraus_map(&rho, &proj).unwrap();
        worst = worst.max(ops.j_h.expectation(&post).abs()).max(ops.q.expectation(&rho).abs());
    }
    ensure(worst <= 1e-14, format!("max |<J_H>|, |<Q>| over 50 draws: {worst:.2e}"))
}

fn c3() -> Check {
    let mut worst = 0.0f64;
    for (v, t) in [(3.0, 0.1), (-3.0, 0.1), (0.0, 0.1), (1.5, 0.5)] {
        let e = env(1.0, 0.5, v, 1e-3, t);
        let rho = steady_state(&e.dissipator).unwrap();
        let gibbs = thermal_state(&e.spectral, t).unwrap();
        worst = worst.max(1.0 - rho.fidelity(&gibbs));
    }
    ensure(worst <= 1e-8, format!("max infidelity {worst:.2e}"))
}

fn c4() -> Check {
    let mut worst = 0.0f64;
    for (v, m, tau) in [(3.0, [0.3, 0.5, 0.8], 1.0), (-1.0, [0.9, -0.2, 0.4], 0.3), (0.5, [-0.4, 0.7, 0.1], 5.0)] {
        let lattice = LatticeSpec::two_site(3, 1.0, 0.5, v);
        let h = build_hamiltonian(&lattice).unwrap();
        let proj = build_projectors(&MeasurementSpec::bloch(unit(m), tau), &lattice).unwrap();
        let l = &Superoperator::hamiltonian(&h) + &build_measurement_lindbladian(&proj, tau).unwrap();
        let rho = steady_state(&l).unwrap();
        worst = worst.max(rho.distance(&DensityMatrix::maximally_mixed(6)));
    }
    ensure(worst <= 1e-8, format!("max distance from I/d {worst:.2e}"))
}

fn staggered_config(v: f64, m: [f64; 3], gamma0: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.lattice = LatticeSpec::two_site(3, 1.0, 0.5, v);
    cfg.bath.gamma0 = gamma0;
    cfg.measurement = MeasurementSpec::bloch(unit(m), 1.0 / gamma0);
    cfg
}

fn c5() -> Check {
    let mut peaks = Vec::new();
    let mut all_ok = true;
    for gamma0 in [1e-2, 1e-3] {
        let cfg = staggered_config(-3.0, [0.0, 1.0, 1.0], gamma0);
        let recs = sweep_records(&cfg, SweepScheme::Poisson).unwrap();
        all_ok &= recs.iter().all(|r| r.is_ok());
        let mags: Vec<f64> = recs.iter().map(|r| r.j_total.abs()).collect();
        let k = argmax(&mags).unwrap();
        peaks.push((recs[k].value * gamma0, mags[k]));
    }
    let located = peaks.iter().all(|&(x, _)| (0.3..=3.0).contains(&x));
    let spread = (peaks[0].1 - peaks[1].1).abs() / peaks[0].1.max(peaks[1].1);
    ensure(
        all_ok && located && spread < 0.25,
        format!("peak tau*gamma0 = {:.2}, {:.2}; heights differ by {:.1}%", peaks[0].0, peaks[1].0, 100.0 * spread),
    )
}

fn total_current(v: f64, m: [f64; 3], gamma0: f64) -> f64 {
    let e = env(1.0, 0.5, v, gamma0, 0.1);
    poisson_record(&e.measured(&MeasurementSpec::bloch(unit(m), 1.0 / gamma0)).unwrap(), 0.0).unwrap().j_total
}

fn c6() -> Check {
    let mut worst = 0.0f64;
    let mut smallest = f64::INFINITY;
    for v in [0.5, 1.0, 3.0] {
        let (a, b) = (total_current(v, [0.0, 1.0, 1.0], 1e-3), total_current(-v, [0.0, 1.0, 1.0], 1e-3));
        worst = worst.max((a + b).abs());
        smallest = smallest.min(a.abs());
    }
    let broken = total_current(0.0, [1.0, 1.0, -1.0], 1e-3).abs();
    ensure(
        worst <= 1e-8 && smallest > 1e-6 && broken >= 1e-4,
        format!("max |J(V) + J(-V)| {worst:.2e}; non-eigen J(V=0) = {broken:.2e}"),
    )
}

fn entropy_gaps(gamma0: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cfg = staggered_config(-3.0, [0.0, 1.0, 1.0], gamma0);
    let recs = sweep_records(&cfg, SweepScheme::Poisson).unwrap();
    (
        recs.iter().map(|r| r.value).collect(),
        recs.iter().map(|r| r.entropy_gap).collect(),
        recs.iter().map(|r| r.entropy).collect(),
    )
}

fn c7() -> Check {
    let gamma0 = 1e-3;
    let e = env(1.0, 0.5, -3.0, gamma0, 0.1);
    let scales = regime_scales(e.spectral.norm_h, gamma0).unwrap();
    let (taus, gaps, _) = entropy_gaps(gamma0);
    let tau_star = taus[argmin(&gaps).unwrap()];
    let below = loglog_slope(&taus, &gaps, 10.0 * scales.tau_z, 0.1 * tau_star).unwrap_or(f64::NAN);
    let above = loglog_slope(&taus, &gaps, 10.0 * tau_star, 0.1 * scales.tau_r).unwrap_or(f64::NAN);
    // Grids start at 0.1 τ_Z for each γ0, so the first points are at equal τ/τ_Z.
    let (_, _, s3) = entropy_gaps(1e-3);
    let (_, _, s2) = entropy_gaps(1e-2);
    let plateau = (s3[0] - s2[0]).abs() / s3[0];
    ensure(
        (below + 2.0).abs() <= 0.1 && (above - 2.0).abs() <= 0.1 && plateau <= 0.01,
        format!("tau* = {tau_star:.3}, slopes {below:.3} / {above:.3}, plateau spread {plateau:.1e}"),
    )
}

fn c8() -> Check {
    let e = env(1.5, 1.0, 3.0, 1e-2, 0.1);
    let r = poisson_record(&e.measured(&MeasurementSpec::bloch(unit([1.0, 1.0, -1.0]), 1e-3)).unwrap(), 1e-3).unwrap();
    let ratio = (r.j_h + r.j_meas).abs() / r.j_h.abs();
    ensure(
        r.j_h.abs() >= 1e-3 && r.j_meas.abs() >= 1e-3 && ratio <= 1e-2,
        format!("J_H = {:.4}, J_meas = {:.4}, |sum|/|J_H| = {ratio:.2e}", r.j_h, r.j_meas),
    )
}

fn c9() -> Check {
    let (t1, v, tau) = (1.5, 3.0, 1e-6);
    let e = env(t1, 1.0, v, 1e-2, 0.1);
    let grid: Vec<[f64; 3]> = (0..10)
        .flat_map(|i| {
            let theta = PI * (i as f64 + 0.5) / 10.0;
            (0..20).map(move |j| {
                let phi = 2.0 * PI * j as f64 / 20.0;
                [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
            })
        })
        .collect();
    let errs: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&m| {
            let meas = e.measured(&MeasurementSpec::bloch(unit(m), tau)).unwrap();
            let w = solve_balance(&transition_rates(&e.jumps, &meas.proj).unwrap()).unwrap();
            let f = two_site_closed_form(t1, v, unit(m), cell_fraction(&w, 2, 0)).unwrap();
            let r = poisson_record(&meas, tau).unwrap();
            // The m_y = 0 circle has f = 0 and is compared against an absolute floor.
            let rel = (r.j_h - f.j_h).abs() / f.j_h.abs().max(1e-3);
            // J_meas = −J_H holds up to the O(γ0) dissipative current.
            let meas_gap = (r.j_meas - f.j_meas + r.j_dis).abs() / f.j_h.abs().max(1e-3);
            (rel, meas_gap)
        })
        .collect();
    let worst2 = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let worst_meas = errs.iter().map(|e| e.1).fold(0.0, f64::max);

    let lattice = LatticeSpec::three_site(3, 1.0, 0.5, 0.7, 1.0);
    let e3 = Environment::new(&lattice, &BathSpec { gamma0: 1e-2, temperature: 0.1 }).unwrap();
    let loop_at = |alpha: f64| {
        let proj = e3.measured(&MeasurementSpec::three_site(alpha, 1.0)).unwrap().proj;
        let (u, du) = three_site_parameters(&solve_balance(&transition_rates(&e3.jumps, &proj).unwrap()).unwrap());
        three_site_zeno(1.0, 0.5, alpha, u, du)
    };
    let z = loop_at(PI / 2.0);
    let equal = (z.total_12() - z.total_23()).abs().max((z.total_12() + z.total_13()).abs());
    let vanish = [0.0, PI]
        .iter()
        .map(|&a| {
            let z = loop_at(a);
            [z.total_12(), z.total_23(), z.total_13(), z.net_hamiltonian, z.meas_12, z.ham_12]
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs()))
        })
        .fold(0.0, f64::max);
    ensure(
        worst2 <= 1e-2 && worst_meas <= 1e-2 && equal <= 1e-10 && z.loop_current.abs() > 1e-6 && vanish <= 1e-10,
        format!(
            "two-site J_H max rel err {worst2:.2e}, J_meas + J_dis {worst_meas:.2e}; loop j = {:.4e}, mismatch {equal:.1e}; alpha in {{0, pi}} max {vanish:.1e}",
            z.loop_current
        ),
    )
}

fn c10() -> Check {
    let gamma0 = 1e-2;
    let mut cfg = staggered_config(3.0, [0.0, 1.0, 1.0], gamma0);
    let floquet = sweep_records(&cfg, SweepScheme::Floquet).unwrap();
    let e = env(1.0, 0.5, 3.0, gamma0, 0.1);
    let ends = [0, floquet.len() - 1];
    let rel: Vec<f64> = ends
        .iter()
        .map(|&k| {
            let tau = floquet[k].value;
            let p = poisson_record(&e.measured(&cfg.measurement.with_tau(tau)).unwrap(), tau).unwrap();
            (floquet[k].j_h - p.j_h).abs() / p.j_h.abs()
        })
        .collect();

    let step = 0.02;
    cfg.sweep = monitored_chain::experiments::config::SweepSpec {
        variable: SweepVariable::Tau,
        grid: Grid::Linear { start: 5.0, stop: 20.0, points: 751 },
    };
    let fine = sweep_records(&cfg, SweepScheme::Floquet).unwrap();
    let j: Vec<f64> = fine.iter().map(|r| r.j_h).collect();
    let peaks: Vec<f64> = local_maxima(&j).into_iter().map(|k| fine[k].value).collect();
    let mut gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let spacing = if gaps.is_empty() { f64::NAN } else { gaps[gaps.len() / 2] };
    let energies = &e.spectral.energies;
    let mut periods = Vec::new();
    for a in energies.iter() {
        for b in energies.iter() {
            if a - b > 1e-8 {
                periods.push(2.0 * PI / (a - b));
            }
        }
    }
    let nearest = periods.iter().cloned().min_by(|p, q| (p - spacing).abs().total_cmp(&(q - spacing).abs())).unwrap();
    ensure(
        rel.iter().all(|&r| r <= 0.1) && peaks.len() >= 3 && (nearest - spacing).abs() <= step,
        format!(
            "end-point differences {:.1}%, {:.1}%; {} maxima, median spacing {spacing:.3} vs 2pi/gap {nearest:.3}",
            100.0 * rel[0],
            100.0 * rel[1],
            peaks.len()
        ),
    )
}

fn c11() -> Check {
    let cases = [
        ("a", [1.0, 0.0, 1.0], 0.0, false),
        ("b", [1.0, 1.0, 1.0], 0.0, true),
        ("c", [1.0, 0.0, 0.0], 3.0, false),
        ("d", [0.0, 1.0, -1.0], 3.0, true),
    ];
    let slopes: Vec<(&str, f64, bool)> = cases
        .par_iter()
        .map(|&(name, m, v, dc)| {
            let e = env(1.0, 0.5, v, 1e-3, 0.1);
            let meas = e.measured(&MeasurementSpec::bloch(unit(m), 1.0)).unwrap();
            let rho = thermal_state(&e.spectral, 0.1).unwrap();
            let gen = Superoperator::hamiltonian(&e.h);
            let trace = displacement_trace(&rho, &gen, &meas.proj, &meas.ops.j_h, &meas.ops.q, 2000.0, 0.01).unwrap();
            (name, trace.slope(1000.0, 2000.0), dc)
        })
        .collect();
    let ok = slopes.iter().all(|&(_, s, dc)| if dc { s.abs() >= 1e-4 } else { s.abs() <= 1e-6 });
    let detail = slopes.iter().map(|(n, s, _)| format!("({n}) {s:.2e}")).collect::<Vec<_>>().join(", ");
    ensure(ok, format!("late slopes {detail}"))
}

fn c12() -> Check {
    let tau = 1e-4;
    let mut worst = 0.0f64;
    for gamma0 in [1e-2, 1e-3] {
        for (m, (t1, t2, v)) in [
            ([1.0, 1.0, -1.0], (1.5, 1.0, 3.0)),
            ([0.0, 1.0, 1.0], (1.0, 0.5, 3.0)),
            ([0.0, 1.0, 1.0], (1.0, 0.5, -3.0)),
        ] {
            let e = env(t1, t2, v, gamma0, 0.1);
            let meas = e.measured(&MeasurementSpec::bloch(unit(m), tau)).unwrap();
            let rates = effective_rates(&e.h, &e.dissipator, &meas.proj, tau).unwrap();
            let w = solve_balance(&rates).unwrap();
            let l = &e.l_hd + &build_measurement_lindbladian(&meas.proj, tau).unwrap();
            let full = outcome_weights(&steady_state(&l).unwrap(), &meas.proj);
            let tv = 0.5 * w.iter().zip(&full).map(|(a, b)| (a - b).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    ensure(worst <= 1e-3, format!("max total-variation distance {worst:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("selection rules after one measurement", c1),
        ("infinite-temperature state carries no current", c2),
        ("dissipator alone relaxes to the Gibbs state", c3),
        ("measurements without a bath heat to I/d", c4),
        ("current peak at the relaxation time", c5),
        ("ratchet antisymmetry under V -> -V", c6),
        ("entropy-gap power laws and Zeno plateau", c7),
        ("Zeno cancellation of J_H and J_meas", c8),
        ("closed-form Zeno currents and loop currents", c9),
        ("periodic vs Poisson measurements and resonances", c10),
        ("DC displacement after one measurement", c11),
        ("balance weights vs full steady state", c12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} ({secs:.1}s)", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
