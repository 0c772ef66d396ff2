mod common;

use common::*;
use kkwave::continuation::cycles::{LimitCycle, MeshPoint};
use kkwave::equilibria::interior_equilibrium;
use kkwave::pde::{
    cycle_to_initial_condition, equilibrium_speed, run_and_report, significant_extrema, stable_dt, step, traveling_profile, PdeOptions,
    PdeState, Verdict, VerdictThresholds,
};
use kkwave::PhysicalConstants;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

#[test]
fn homogeneous_states_stay_fixed_over_many_steps() {
    let c = consts();
    for rho0 in [15.0, 35.0, 60.0, 110.0] {
        let s = PdeState::homogeneous(3.0, 256, rho0, &c).unwrap();
        let opts = PdeOptions::default();
        let dt = stable_dt(&s, &c, &opts);
        let mut cur = s.clone();
        for _ in 0..200 {
            cur = step(&cur, &c, dt, &opts).unwrap();
        }
        assert_eq!(cur.rho, s.rho, "rho0 = {rho0}");
        let dv = cur.v.iter().zip(&s.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dv <= 1e-12 * equilibrium_speed(rho0, &c).abs().max(1.0), "rho0 = {rho0}: dV = {dv:e}");
    }
}

#[test]
fn constant_cycle_gives_a_homogeneous_state() {
    let b = family_b_cycle();
    let v_c = interior_equilibrium(&b.params).unwrap().unwrap().v_c;
    let n = b.mesh.len();
    let flat = LimitCycle {
        mesh: (0..n)
            .map(|i| MeshPoint { z: b.period * i as f64 / (n - 1) as f64, v: v_c, y: 0.0 })
            .collect(),
        ..b.clone()
    };
    let c = consts();
    let s = cycle_to_initial_condition(&flat, &c, 1, 256).unwrap();
    let rho0 = s.rho[0];
    assert!(s.rho.iter().all(|r| *r == rho0));
    assert!((s.v[0] - equilibrium_speed(rho0, &c)).abs() < 1e-9 * s.v[0].abs());
}

#[test]
fn cycle_initial_condition_has_one_bump_per_period() {
    let b = family_b_cycle();
    let c = consts();
    for m in [1u32, 2, 3] {
        let s = cycle_to_initial_condition(&b, &c, m, 512 * m as usize).unwrap();
        assert!((s.length - m as f64 * b.period / c.rho_max).abs() < 1e-12);
        assert_eq!(significant_extrema(&s.v, 0.01), 2 * m as usize, "m = {m}");
        assert!(s.rho.iter().all(|r| *r > 0.0));
    }
}

#[test]
fn mass_is_conserved_along_a_traveling_wave() {
    let b = family_b_cycle();
    let c = consts();
    let s0 = cycle_to_initial_condition(&b, &c, 1, 512).unwrap();
    let (_, r, _) = run_and_report(&s0, &c, 5.0 / 60.0, b.params.v_g, &PdeOptions::default(), &VerdictThresholds::default()).unwrap();
    assert!(r.max_mass_change_per_step < 1e-12, "{:e}", r.max_mass_change_per_step);
    assert!(r.steps > 1000);
}

/// RMS error in V against the exact traveling profile after `t_end` hours.
fn profile_error(b: &LimitCycle, n: usize, t_end: f64) -> f64 {
    let c = consts();
    let s0 = cycle_to_initial_condition(b, &c, 1, n).unwrap();
    let opts = PdeOptions { snapshot_every: t_end, ..PdeOptions::default() };
    let (s, _, _) = run_and_report(&s0, &c, t_end, b.params.v_g, &opts, &VerdictThresholds::default()).unwrap();
    let exact = traveling_profile(b, &c, 1, n, t_end).unwrap();
    (s.v.iter().zip(&exact.v).map(|(a, e)| (a - e).powi(2)).sum::<f64>() / n as f64).sqrt()
}

#[test]
fn scheme_converges_at_second_order() {
    let b = family_b_cycle();
    let e: Vec<f64> = [128, 256, 512].iter().map(|&n| profile_error(&b, n, 2.0 / 60.0)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.5).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn measured_speed_matches_the_wave_speed() {
    let b = family_b_cycle();
    let c = consts();
    let s0 = cycle_to_initial_condition(&b, &c, 1, 1024).unwrap();
    let (_, r, snaps) = run_and_report(&s0, &c, 10.0 / 60.0, b.params.v_g, &PdeOptions::default(), &VerdictThresholds::default()).unwrap();
    assert!((r.expected_speed + b.params.v_g * c.v_max).abs() < 1e-12);
    assert!(rel(r.measured_speed, r.expected_speed) < 5e-3, "{} vs {}", r.measured_speed, r.expected_speed);
    assert_eq!(r.verdict, Verdict::TravelingWave);
    assert_eq!(snaps.first().unwrap().t, 0.0);
}

#[test]
fn perturbed_unstable_homogeneous_flow_grows() {
    let c = consts();
    let (length, n) = (5.0, 512);
    let mut s = PdeState::homogeneous(length, n, 35.0, &c).unwrap();
    for (j, r) in s.rho.iter_mut().enumerate() {
        *r *= 1.0 + 0.01 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin();
    }
    let (_, r, _) = run_and_report(&s, &c, 10.0 / 60.0, 0.0, &PdeOptions::default(), &VerdictThresholds::default()).unwrap();
    assert!(r.final_amplitude > 2.0 * r.initial_amplitude, "{} -> {}", r.initial_amplitude, r.final_amplitude);
    assert_ne!(r.verdict, Verdict::Dispersed);
}

#[test]
fn family_a_wave_travels_on_its_road() {
    let fam = family(FAMILY_A.0, FAMILY_A_PERIOD, 30);
    let a = most_stable(&fam).unwrap();
    let c = consts();
    let s0 = cycle_to_initial_condition(a, &c, 1, 2048).unwrap();
    let (_, r, _) = run_and_report(&s0, &c, 5.0 / 60.0, a.params.v_g, &PdeOptions::default(), &VerdictThresholds::default()).unwrap();
    assert!(rel(r.measured_speed, r.expected_speed) < 0.02);
    assert_eq!(r.verdict, Verdict::TravelingWave);
}

#[test]
fn oversized_steps_are_refused() {
    let c = consts();
    let s = PdeState::homogeneous(1.0, 64, 30.0, &c).unwrap();
    let opts = PdeOptions::default();
    assert!(step(&s, &c, 10.0 * stable_dt(&s, &c, &opts), &opts).is_err());
}
