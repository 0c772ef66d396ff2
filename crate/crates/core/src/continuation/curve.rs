use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    HopfCurve,
    FoldCurve,
    CycleFamily,
    GhCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    BT,
    GH,
    LPC,
    Cusp,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::BT => "BT",
            LabelKind::GH => "GH",
            LabelKind::LPC => "LPC",
            LabelKind::Cusp => "Cusp",
        }
    }
}

/// Marker attached to a point of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub index: usize,
    pub kind: LabelKind,
}

/// A point in the `(q_g, v_g)` plane with named auxiliary values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub q_g: f64,
    pub v_g: f64,
    pub aux: BTreeMap<String, f64>,
}

impl CurvePoint {
    pub fn new(q_g: f64, v_g: f64) -> Self {
        Self {
            q_g,
            v_g,
            aux: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    pub fn distance(&self, other: &CurvePoint) -> f64 {
        (self.q_g - other.q_g).hypot(self.v_g - other.v_g)
    }
}

/// Polyline of labeled points in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
    pub labels: Vec<Label>,
    /// Points that were requested but could not be computed.
    pub failures: Vec<String>,
    /// Free-form metadata carried into exports.
    pub meta: BTreeMap<String, String>,
}

impl BifurcationCurve {
    pub fn new(kind: CurveKind) -> Self {
        Self {
            kind,
            points: Vec::new(),
            labels: Vec::new(),
            failures: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, p: CurvePoint) -> usize {
        self.points.push(p);
        self.points.len() - 1
    }

    pub fn label(&mut self, index: usize, kind: LabelKind) {
        self.labels.push(Label { index, kind });
    }

    pub fn labeled(&self, kind: LabelKind) -> impl Iterator<Item = &CurvePoint> {
        self.labels
            .iter()
            .filter(move |l| l.kind == kind)
            .map(|l| &self.points[l.index])
    }

    pub fn label_at(&self, index: usize) -> Option<LabelKind> {
        self.labels.iter().find(|l| l.index == index).map(|l| l.kind)
    }

    /// Sorted union of auxiliary keys over all points.
    pub fn aux_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self
            .points
            .iter()
            .flat_map(|p| p.aux.keys().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// Largest distance from a point of `self` to the polyline `other`.
    pub fn sup_distance_to(&self, other: &BifurcationCurve) -> f64 {
        self.points
            .iter()
            .map(|p| polyline_distance(p, &other.points))
            .fold(0.0, f64::max)
    }
}

/// Euclidean distance from `p` to the polyline through `line`.
pub fn polyline_distance(p: &CurvePoint, line: &[CurvePoint]) -> f64 {
    if line.len() == 1 {
        return p.distance(&line[0]);
    }
    line.windows(2)
        .map(|w| {
            let (ax, ay) = (w[0].q_g, w[0].v_g);
            let (dx, dy) = (w[1].q_g - ax, w[1].v_g - ay);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.q_g - ax) * dx + (p.v_g - ay) * dy) / len2).clamp(0.0, 1.0)
            };
            (p.q_g - ax - t * dx).hypot(p.v_g - ay - t * dy)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_to_polyline() {
        let line = vec![CurvePoint::new(0.0, 0.0), CurvePoint::new(1.0, 0.0)];
        assert!((polyline_distance(&CurvePoint::new(0.5, 0.2), &line) - 0.2).abs() < 1e-15);
        assert!((polyline_distance(&CurvePoint::new(2.0, 0.0), &line) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn labels_and_keys() {
        let mut c = BifurcationCurve::new(CurveKind::HopfCurve);
        let i = c.push(CurvePoint::new(0.1, 0.2).with("ell1", -1.0));
        c.push(CurvePoint::new(0.2, 0.3).with("omega0", 0.1));
        c.label(i, LabelKind::GH);
        assert_eq!(c.labeled(LabelKind::GH).count(), 1);
        assert_eq!(c.label_at(0), Some(LabelKind::GH));
        assert_eq!(c.aux_keys(), vec!["ell1".to_string(), "omega0".to_string()]);
    }
}
