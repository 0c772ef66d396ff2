//! Run configuration: a flat JSON object with dotted keys over documented
//! defaults, plus `key=value` overrides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::continuation::cycles::CycleOptions;
use crate::continuation::hopf::hopf_policy;
use crate::continuation::palc::StepPolicy;
use crate::equilibria::ThetaPolicy;
use crate::error::{Error, Result};
use crate::model::{ModelParams, PhysicalConstants};
use crate::pde::{PdeOptions, VerdictThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaKind {
    Fixed,
    BtConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    pub policy: ThetaKind,
    /// Used when `policy` is `fixed`.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfConfig {
    pub step: StepPolicy,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclesConfig {
    pub max_steps: usize,
    /// Periods of the long-period families approximating the homoclinic curve.
    pub homoclinic_periods: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    pub n: usize,
    pub m: u32,
    /// Simulated time (h).
    pub t_end: f64,
    #[serde(flatten)]
    pub options: PdeOptions,
    pub verdict: VerdictThresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramConfig {
    /// Number of Hopf curves started from `gamma-` BT points.
    pub fan: usize,
    pub fan_q_min: f64,
    pub fan_q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
}

/// Every setting of a run. Dimensional quantities are in km, h and veh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub theta: ThetaConfig,
    pub fold: RangeConfig,
    pub gh: RangeConfig,
    pub hopf: HopfConfig,
    pub shooting: CycleOptions,
    pub cycles: CyclesConfig,
    pub pde: PdeConfig,
    pub diagram: DiagramConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let constants = PhysicalConstants::default();
        Self {
            theta: ThetaConfig {
                policy: ThetaKind::Fixed,
                value: constants.theta0(),
            },
            constants,
            fold: RangeConfig {
                q_min: 0.02,
                q_max: 0.3167,
                points: 200,
            },
            gh: RangeConfig {
                q_min: 0.05,
                q_max: 0.313,
                points: 100,
            },
            hopf: HopfConfig {
                step: hopf_policy(),
                max_steps: 20_000,
            },
            shooting: CycleOptions::default(),
            cycles: CyclesConfig {
                max_steps: 30,
                homoclinic_periods: vec![300.0, 600.0, 1200.0],
            },
            pde: PdeConfig {
                n: 1024,
                m: 1,
                t_end: 1.0,
                options: PdeOptions::default(),
                verdict: VerdictThresholds::default(),
            },
            diagram: DiagramConfig {
                fan: 6,
                fan_q_min: 0.1,
                fan_q_max: 0.3,
            },
            output: OutputConfig { dir: "kkwave-out".into() },
        }
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn unflatten(flat: &BTreeMap<String, Value>) -> Value {
    let mut root = Map::new();
    for (key, v) in flat {
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("config keys form a tree");
        }
        node.insert(parts[parts.len() - 1].to_string(), v.clone());
    }
    Value::Object(root)
}

/// Parse an override value: JSON if it parses, otherwise a bare string.
fn parse_value(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

impl RunConfig {
    /// All settings as dotted keys.
    pub fn to_flat(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let v = serde_json::to_value(self).expect("config serializes");
        flatten_into("", &v, &mut out);
        out
    }

    /// Apply dotted-key values on top of `self`; unknown keys are rejected.
    pub fn merged(&self, entries: impl IntoIterator<Item = (String, Value)>) -> Result<Self> {
        let mut flat = self.to_flat();
        for (k, v) in entries {
            let slot = flat
                .get_mut(&k)
                .ok_or_else(|| Error::Config(format!("unknown key `{k}`")))?;
            *slot = v;
        }
        let cfg: RunConfig =
            serde_json::from_value(unflatten(&flat)).map_err(|e| Error::Config(format!("invalid value: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults overlaid with a flat JSON object.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        if let Some((k, _)) = obj.iter().find(|(_, v)| v.is_object()) {
            return Err(Error::Config(format!("key `{k}` holds an object; use flat dotted keys")));
        }
        Self::default().merged(obj.clone())
    }

    /// Apply `key=value` overrides.
    pub fn with_overrides(&self, items: &[String]) -> Result<Self> {
        let mut entries = Vec::with_capacity(items.len());
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            entries.push((k.trim().to_string(), parse_value(v.trim())));
        }
        self.merged(entries)
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.theta.policy == ThetaKind::Fixed && !(self.theta.value > 0.0) {
            return Err(Error::Config(format!("theta.value = {} must be positive", self.theta.value)));
        }
        for (name, r) in [("fold", &self.fold), ("gh", &self.gh)] {
            if !(r.q_min > 0.0 && r.q_min <= r.q_max) || r.points == 0 {
                return Err(Error::Config(format!(
                    "{name}: need 0 < q_min <= q_max and points >= 1 (got {}, {}, {})",
                    r.q_min, r.q_max, r.points
                )));
            }
        }
        for (name, s) in [("hopf.step", &self.hopf.step), ("shooting.step", &self.shooting.step)] {
            if !(s.min > 0.0 && s.min <= s.initial && s.initial <= s.max && s.tol > 0.0) {
                return Err(Error::Config(format!("{name}: need 0 < min <= initial <= max and tol > 0")));
            }
        }
        if self.shooting.segments < 2 || self.shooting.samples_per_segment < 1 {
            return Err(Error::Config("shooting needs at least 2 segments and 1 sample per segment".into()));
        }
        if !(self.shooting.ode.rtol > 0.0 && self.shooting.ode.atol > 0.0) {
            return Err(Error::Config("shooting.ode tolerances must be positive".into()));
        }
        if self.cycles.homoclinic_periods.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("cycles.homoclinic_periods must be positive".into()));
        }
        let pde = &self.pde;
        if pde.n < 8 || pde.m == 0 || !(pde.t_end > 0.0) {
            return Err(Error::Config("pde: need n >= 8, m >= 1 and t_end > 0".into()));
        }
        if !(pde.options.cfl > 0.0 && pde.options.cfl <= 2.0) {
            return Err(Error::Config(format!("pde.cfl = {} must lie in (0, 2]", pde.options.cfl)));
        }
        if !(pde.options.dissipation >= 0.0 && pde.options.snapshot_every > 0.0) {
            return Err(Error::Config("pde: need dissipation >= 0 and snapshot_every > 0".into()));
        }
        if !(self.diagram.fan_q_min > 0.0 && self.diagram.fan_q_min <= self.diagram.fan_q_max) {
            return Err(Error::Config("diagram: need 0 < fan_q_min <= fan_q_max".into()));
        }
        Ok(())
    }

    pub fn theta_policy(&self) -> ThetaPolicy {
        match self.theta.policy {
            ThetaKind::Fixed => ThetaPolicy::Fixed(self.theta.value),
            ThetaKind::BtConvention => ThetaPolicy::BtConvention,
        }
    }

    /// ODE parameters at `(q_g, v_g)`: `lambda`, `mu` from the constants and
    /// `theta0` from the policy, or from `theta0` when given.
    pub fn params(&self, q_g: f64, v_g: f64, theta0: Option<f64>) -> Result<ModelParams> {
        let c = &self.constants;
        let theta0 = theta0.unwrap_or(match self.theta.policy {
            ThetaKind::Fixed => self.theta.value,
            ThetaKind::BtConvention => c.theta0(),
        });
        ModelParams::new(c.lambda(), c.mu(), theta0, q_g, v_g)
    }

    /// SHA-256 of the canonical flat form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut flat = self.to_flat();
        flat.remove("output.dir");
        let canonical = serde_json::to_string(&flat).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_standard_constants() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.theta.value, 0.16);
        assert!((c.constants.lambda() - 0.2).abs() < 1e-15);
        assert!((c.constants.mu() - 1.0 / 700.0).abs() < 1e-15);
    }

    #[test]
    fn flat_round_trip() {
        let c = RunConfig::default();
        let flat = c.to_flat();
        assert!(flat.contains_key("pde.cfl"));
        assert!(flat.contains_key("shooting.step.initial"));
        let back = RunConfig::default().merged(flat).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = RunConfig::from_json(r#"{"pde.n": 512, "theta.policy": "bt_convention"}"#).unwrap();
        assert_eq!(c.pde.n, 512);
        assert_eq!(c.theta_policy(), ThetaPolicy::BtConvention);
        let c = c.with_overrides(&["pde.flux=upwind".into()]).unwrap();
        assert_eq!(c.pde.options.flux, crate::pde::DensityFlux::Upwind);
        assert!(RunConfig::from_json(r#"{"pde.nn": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"pde": {"n": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"pde.n": 2}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let b = a.with_overrides(&["output.dir=elsewhere".into()]).unwrap();
        let c = a.with_overrides(&["pde.n=2048".into()]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
