//! Continuation of Hopf curves and periodic orbits.

pub mod curve;
pub mod cycles;
pub mod hopf;
pub mod palc;

pub use curve::{BifurcationCurve, CurveKind, CurvePoint, Label, LabelKind};
pub use cycles::{
    continue_cycle_fixed_period, cycle_from_hopf, homoclinic_approx, resonant_road_length, CycleFamily, CycleOptions,
    CycleStability, LimitCycle, MeshPoint,
};
pub use hopf::{continue_hopf, hopf_point_at, BtPoint, HopfCurve, HopfPoint};
