#![allow(dead_code)]

use kkwave::continuation::cycles::{cycle_from_hopf, continue_cycle_fixed_period, CycleFamily, CycleOptions, CycleStability, LimitCycle};
use kkwave::continuation::hopf::{continue_hopf, hopf_point_at, hopf_policy, HopfCurve, HopfPoint};
use kkwave::equilibria::{FoldBranch, FoldCurveTrace};
use kkwave::model::Param;

pub const THETA0: f64 = 0.16;

/// `(q_g, v_g, v_c)` of the family-A Hopf point.
pub const FAMILY_A: (f64, f64, f64) = (0.164212226, 0.335569670, 0.064430330);
/// `(q_g, v_g, v_c)` of the family-B Hopf point.
pub const FAMILY_B: (f64, f64, f64) = (0.133886021, 0.204071932, 0.195928068);

pub const FAMILY_A_PERIOD: f64 = 1469.90;
pub const FAMILY_B_PERIOD: f64 = 262.612;

pub fn hopf_seed(q_g: f64) -> HopfPoint {
    hopf_point_at(THETA0, q_g).expect("Hopf point at theta0 = 0.16")
}

/// Fixed-period family seeded at the Hopf point at `q_g`.
pub fn family(q_g: f64, period: f64, max_steps: usize) -> CycleFamily {
    let h = hopf_seed(q_g);
    let opts = CycleOptions::default();
    let seed = cycle_from_hopf(&h.params().unwrap(), h.v_c, Param::VG, &opts).expect("Hopf seed cycle");
    continue_cycle_fixed_period(&seed, period, max_steps, &opts).expect("fixed-period family")
}

/// Stable member with the smallest Floquet multiplier.
pub fn most_stable(fam: &CycleFamily) -> Option<&LimitCycle> {
    fam.cycles
        .iter()
        .filter(|c| c.stability == CycleStability::Stable)
        .min_by(|a, b| a.floquet_multiplier.total_cmp(&b.floquet_multiplier))
}

pub fn family_b_cycle() -> LimitCycle {
    let fam = family(FAMILY_B.0, FAMILY_B_PERIOD, 30);
    most_stable(&fam).expect("stable family-B member").clone()
}

/// Hopf curve through the family-B Hopf point.
pub fn family_b_hopf_curve() -> HopfCurve {
    let h = hopf_seed(FAMILY_B.0);
    continue_hopf((h.q_g, h.v_g, h.v_c), hopf_policy(), 20_000).expect("Hopf curve")
}

/// Hopf curve started at the `gamma-` BT point at `q_g`.
pub fn hopf_from_gamma_minus(trace: &FoldCurveTrace, q_g: f64) -> HopfCurve {
    let (v_g, v_c, _) = trace.at(q_g, FoldBranch::LowerGammaMinus).expect("gamma- fold point");
    continue_hopf((q_g, v_g, v_c), hopf_policy(), 20_000).expect("Hopf curve from BT")
}

/// `v_g` of the family polyline at `q_g`, by linear interpolation on the
/// first segment that straddles it.
pub fn vg_at(fam: &CycleFamily, q_g: f64) -> Option<f64> {
    fam.cycles
        .windows(2)
        .find(|w| (w[0].params.q_g - q_g) * (w[1].params.q_g - q_g) <= 0.0 && w[0].params.q_g != w[1].params.q_g)
        .map(|w| {
            let (a, b) = (&w[0].params, &w[1].params);
            a.v_g + (q_g - a.q_g) / (b.q_g - a.q_g) * (b.v_g - a.v_g)
        })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
