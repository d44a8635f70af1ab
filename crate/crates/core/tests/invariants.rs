use std::f64::consts::PI;

use monitored_chain::experiments::config::{BlochMode, SphereGrid};
use monitored_chain::experiments::{cmd_bloch_sweep, Environment, ExperimentConfig};
use monitored_chain::linalg::{trace_product, CMatrix, C64};
use monitored_chain::prelude::*;
use monitored_chain::zeno::zeno_solution;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env(t1: f64, t2: f64, v: f64, gamma0: f64) -> Environment {
    Environment::new(&LatticeSpec::two_site(3, t1, t2, v), &BathSpec { gamma0, temperature: 0.1 }).unwrap()
}

fn sphere(n_theta: usize, n_phi: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 0..n_theta {
        let theta = PI * (i as f64 + 0.5) / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    // Axes and symmetry planes are where the selection rules bite.
    out.extend([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    out
}

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    DensityMatrix::normalized(&a * a.adjoint()).unwrap()
}

#[test]
fn selection_rules_hold_over_the_sphere() {
    for v in [0.0, 3.0] {
        let e = env(1.0, 0.5, v, 1e-3);
        let rho = thermal_state(&e.spectral, 0.1).unwrap();
        let mut zeros_checked = 0;
        for m in sphere(20, 20) {
            let m = normalize3(m).unwrap();
            let rules = predict_selection_rules(&classify_bloch(m).unwrap().with_hamiltonian(v == 0.0));
            let meas = e.measured(&MeasurementSpec::bloch(m, 1.0)).unwrap();
            let post = kraus_map(&rho, &meas.proj).unwrap();
            if rules.jh_at_0plus_zero {
                assert!(meas.ops.j_h.expectation(&post).abs() <= 1e-10, "V={v} m={m:?}");
                zeros_checked += 1;
            }
            if rules.q_zero {
                assert!(meas.ops.q.expectation(&rho).abs() <= 1e-10, "V={v} m={m:?}");
                zeros_checked += 1;
            }
        }
        assert!(zeros_checked > 20);
    }
}

#[test]
fn t_even_measurement_switches_off_dc_current() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for v in [0.0, 3.0] {
        let e = env(1.0, 0.5, v, 1e-3);
        for phi in [0.0f64, 0.7, 2.0] {
            let m = [phi.cos(), 0.0, phi.sin()];
            let meas = e.measured(&MeasurementSpec::bloch(m, 1.0)).unwrap();
            for _ in 0..5 {
                let rho = random_state(6, &mut rng);
                let post = kraus_map(&rho, &meas.proj).unwrap();
                assert!(dc_current(&post, &e.spectral, &meas.ops.j_h).abs() < 1e-12);
            }
        }
        // A T-odd component leaves a DC part for generic states.
        let meas = e.measured(&MeasurementSpec::bloch(normalize3([1.0, 1.0, 1.0]).unwrap(), 1.0)).unwrap();
        let post = kraus_map(&random_state(6, &mut rng), &meas.proj).unwrap();
        assert!(dc_current(&post, &e.spectral, &meas.ops.j_h).abs() > 1e-6);
    }
}

#[test]
fn dc_current_is_the_long_time_average() {
    for (m, v) in [([1.0, 1.0, 1.0], 0.0), ([0.0, 1.0, -1.0], 3.0), ([0.3, -0.8, 0.2], 1.0)] {
        let e = env(1.0, 0.5, v, 1e-3);
        let meas = e.measured(&MeasurementSpec::bloch(normalize3(m).unwrap(), 1.0)).unwrap();
        let rho = thermal_state(&e.spectral, 0.1).unwrap();
        let post = kraus_map(&rho, &meas.proj).unwrap();
        let dc = dc_current(&post, &e.spectral, &meas.ops.j_h);
        let trace = displacement_trace(&rho, &Superoperator::hamiltonian(&e.h), &meas.proj, &meas.ops.j_h, &meas.ops.q, 3000.0, 0.02)
            .unwrap();
        let avg = (trace.displacement.last().unwrap() - trace.q_expect) / 3000.0;
        assert!((avg - dc).abs() < 1e-3 * dc.abs().max(1.0), "avg {avg} dc {dc}");
    }
}

#[test]
fn oscillation_frequencies_are_spectral_gaps() {
    let e = env(1.0, 0.5, 3.0, 1e-3);
    let meas = e.measured(&MeasurementSpec::bloch(normalize3([0.0, 1.0, -1.0]).unwrap(), 1.0)).unwrap();
    let rho = thermal_state(&e.spectral, 0.1).unwrap();
    let (n, dt) = (4096usize, 0.1);
    let trace = displacement_trace(&rho, &Superoperator::hamiltonian(&e.h), &meas.proj, &meas.ops.j_h, &meas.ops.q, n as f64 * dt, dt)
        .unwrap();
    let j = &trace.current[..n];
    let mean = j.iter().sum::<f64>() / n as f64;
    let window = |k: usize| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos();
    let power: Vec<f64> = (0..n / 2)
        .map(|b| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, x) in j.iter().enumerate() {
                let arg = -2.0 * PI * (b * k) as f64 / n as f64;
                let y = (x - mean) * window(k);
                re += y * arg.cos();
                im += y * arg.sin();
            }
            re.hypot(im)
        })
        .collect();
    let bin = 2.0 * PI / (n as f64 * dt);
    let top = power.iter().cloned().fold(0.0, f64::max);
    let energies = &e.spectral.energies;
    let gaps: Vec<f64> = energies.iter().flat_map(|a| energies.iter().map(move |b| a - b)).filter(|g| *g > 1e-8).collect();
    let peaks: Vec<usize> = (1..power.len() - 1)
        .filter(|&b| power[b] > power[b - 1] && power[b] >= power[b + 1] && power[b] > 0.05 * top)
        .collect();
    assert!(!peaks.is_empty());
    for b in peaks {
        let w = b as f64 * bin;
        let nearest = gaps.iter().map(|g| (g - w).abs()).fold(f64::INFINITY, f64::min);
        assert!(nearest <= bin, "peak at {w} is {nearest} from every gap");
    }
}

#[test]
fn measurement_transitions_respect_time_reversal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lattice = LatticeSpec::two_site(3, 1.0, 0.5, 3.0);
    for m in [[1.0, 0.0, 0.0], [0.6, 0.0, 0.8], [0.0, 1.0, 0.0]] {
        let proj = build_projectors(&MeasurementSpec::bloch(m, 1.0), &lattice).unwrap();
        for _ in 0..10 {
            let phi = random_state(6, &mut rng).entries().column(0).normalize();
            let psi = random_state(6, &mut rng).entries().column(1).normalize();
            let t = |a: &CMatrix, b: &CMatrix| -> f64 {
                proj.projectors().iter().map(|p| (a.adjoint() * p.entries() * b)[(0, 0)].norm_sqr()).sum()
            };
            let (phi, psi) = (CMatrix::from_column_slice(6, 1, phi.as_slice()), CMatrix::from_column_slice(6, 1, psi.as_slice()));
            assert!((t(&psi, &phi) - t(&psi.conjugate(), &phi.conjugate())).abs() < 1e-12);
        }
    }
}

#[test]
fn zeno_cancellation_over_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gamma0 = 1e-2;
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let m = normalize3([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).unwrap();
        let v = rng.gen_range(-3.0..3.0);
        let e = env(1.0, 0.5, v, gamma0);
        let norm = e.spectral.norm_h;
        let tau = 1e-3 / norm;
        let meas = e.measured(&MeasurementSpec::bloch(m, tau)).unwrap();

        // Perturbative ρ⁽⁰⁾, ρ⁽¹⁾: the cancellation is exact.
        let z = zeno_solution(&e.h, &e.jumps, &meas.proj, tau, gamma0).unwrap();
        let j0 = meas.ops.j_h.expectation(&z.rho0);
        let jm = trace_product(z.rho1_offdiag.entries(), meas.ops.q.entries()).re / tau;
        assert!((j0 + jm).abs() <= 1e-10 * j0.abs().max(1.0));

        // Full solver split into block-diagonal and off-diagonal parts.
        let l = build_full_lindbladian(&e.h, &meas.proj, tau, &e.jumps).unwrap();
        let rho = steady_state(&l).unwrap();
        let rho0 = kraus_map(&rho, &meas.proj).unwrap();
        let rho1 = rho.entries() - rho0.entries();
        let jh = meas.ops.j_h.expectation(&rho0);
        let jmeas = trace_product(&rho1, meas.ops.q.entries()).re / tau;
        let bound = (gamma0 / norm) * jh.abs().max(norm);
        worst = worst.max((jh + jmeas).abs() / bound);
    }
    assert!(worst <= 1.0, "worst ratio {worst}");
}

#[test]
fn zeno_currents_on_the_sphere_are_odd_in_m_y() {
    let mut cfg = ExperimentConfig::default();
    cfg.lattice = LatticeSpec::two_site(3, 1.5, 1.0, 3.0);
    cfg.bath.gamma0 = 1e-2;
    cfg.measurement.tau = 1e-5;
    cfg.bloch.mode = BlochMode::Zeno;
    cfg.sphere = SphereGrid { n_theta: 9, n_phi: 12 };
    let out = cmd_bloch_sweep(&cfg).unwrap();
    assert_eq!(out.failures, 0);
    let t = &out.table;
    let (phi, my, jh, jf) = (t.column("phi").unwrap(), t.column("m_y").unwrap(), t.column("j_h").unwrap(), t.column("j_h_formula").unwrap());
    let theta = t.column("theta").unwrap();
    // Exact for the closed form; the solver carries O(τ) corrections.
    let scale = jh.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut pairs = 0;
    for a in 0..phi.len() {
        if my[a].abs() < 1e-12 {
            assert!(jf[a].abs() < 1e-14 && jh[a].abs() < 1e-3 * scale, "row {a}: {} {}", jf[a], jh[a]);
        }
        let mirror = (2.0 * PI - phi[a]) % (2.0 * PI);
        if let Some(b) = (0..phi.len()).find(|&b| theta[b] == theta[a] && (phi[b] - mirror).abs() < 1e-12) {
            assert!((jf[a] + jf[b]).abs() < 1e-14);
            assert!((jh[a] + jh[b]).abs() < 1e-3 * scale);
            pairs += 1;
        }
    }
    assert!(pairs > 50);
}
