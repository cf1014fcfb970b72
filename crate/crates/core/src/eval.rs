//! Scoring a pipeline result against simulator ground truth.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dataset::GroundTruth;
use crate::mask::Mask;
use crate::pipeline::PipelineResult;
use crate::tracking::hungarian_padded;

/// Predictions farther than this from a junction never match it.
pub const MATCH_GATE_MM: f64 = 30.0;
/// Acceptable needle distance band from the bifurcation, millimetres.
pub const NEEDLE_RANGE_MM: (f64, f64) = (20.0, 50.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionMatch {
    pub truth_index: usize,
    pub bifurcation_index: usize,
    pub error_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matches: Vec<JunctionMatch>,
    /// Error of each matched junction, in truth order.
    pub bifurcation_error_mm: Vec<f64>,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Per matched junction: whether its needle site lies in [`NEEDLE_RANGE_MM`].
    pub needle_in_range: Vec<bool>,
    pub identification_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_iou: Option<f64>,
}

impl EvalReport {
    pub fn mean_error_mm(&self) -> Option<f64> {
        let n = self.bifurcation_error_mm.len();
        (n > 0).then(|| self.bifurcation_error_mm.iter().sum::<f64>() / n as f64)
    }
}

/// One-to-one matching of truth junctions to predicted bifurcations that
/// minimizes the total distance, ignoring pairs beyond [`MATCH_GATE_MM`].
pub fn match_junctions(truth: &[Vector3<f64>], predicted: &[Vector3<f64>]) -> Vec<JunctionMatch> {
    if truth.is_empty() || predicted.is_empty() {
        return Vec::new();
    }
    let dist: Vec<Vec<f64>> = truth.iter().map(|g| predicted.iter().map(|p| (p - g).norm()).collect()).collect();
    // Gated pairs cost more than any set of admissible ones, so the optimum
    // maximizes the number of admissible matches first.
    let blocked = MATCH_GATE_MM * (truth.len() + predicted.len() + 1) as f64;
    let cost: Vec<Vec<f64>> =
        dist.iter().map(|row| row.iter().map(|&d| if d <= MATCH_GATE_MM { d } else { blocked }).collect()).collect();
    let assignment = hungarian_padded(&cost, blocked).expect("finite non-negative costs");
    let mut out: Vec<JunctionMatch> = assignment
        .pairs()
        .filter(|&(i, j)| dist[i][j] <= MATCH_GATE_MM)
        .map(|(i, j)| JunctionMatch { truth_index: i, bifurcation_index: j, error_mm: dist[i][j] })
        .collect();
    out.sort_by_key(|m| m.truth_index);
    out
}

pub fn evaluate(result: &PipelineResult, truth: &GroundTruth) -> EvalReport {
    let predicted: Vec<Vector3<f64>> = result.bifurcations.iter().map(|b| b.position).collect();
    let matches = match_junctions(&truth.junctions, &predicted);
    let needle_in_range = matches
        .iter()
        .map(|m| {
            result.needle_sites.get(m.bifurcation_index).and_then(Option::as_ref).is_some_and(|site| {
                let d = (site.position - truth.junctions[m.truth_index]).norm();
                (NEEDLE_RANGE_MM.0..=NEEDLE_RANGE_MM.1).contains(&d)
            })
        })
        .collect();
    EvalReport {
        bifurcation_error_mm: matches.iter().map(|m| m.error_mm).collect(),
        false_positives: predicted.len() - matches.len(),
        false_negatives: truth.junctions.len() - matches.len(),
        matches,
        needle_in_range,
        identification_time_s: result.identification_time_s,
        mean_iou: None,
    }
}

/// Mean intersection-over-union of paired masks; `None` for no pairs.
pub fn mean_iou<'a>(pairs: impl IntoIterator<Item = (&'a Mask, &'a Mask)>) -> Option<f64> {
    let (sum, n) = pairs.into_iter().fold((0.0, 0usize), |(s, n), (a, b)| (s + a.iou(b), n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::RunStats;
    use crate::skeleton::{Bifurcation, NeedleSite};
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    fn result_with(preds: &[Vector3<f64>]) -> PipelineResult {
        PipelineResult {
            merged_tracks: Vec::new(),
            bifurcations: preds
                .iter()
                .map(|&p| Bifurcation { position: p, t: p.z, origin_pair: (0, 1), supporting_pairs: 1, merged_id: 0 })
                .collect(),
            needle_sites: preds
                .iter()
                .map(|&p| {
                    Some(NeedleSite {
                        position: p - v(0.0, 0.0, 20.0),
                        t: 0.0,
                        distance_to_bifurcation: 20.0,
                        point_index: 0,
                        merged_id: 0,
                    })
                })
                .collect(),
            primary: None,
            timings: Vec::new(),
            identification_time_s: 0.5,
            stats: RunStats::default(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn three_four_five() {
        let truth = GroundTruth { junctions: vec![v(1.0, 2.0, 3.0)] };
        let r = evaluate(&result_with(&[v(4.0, 6.0, 3.0)]), &truth);
        assert_eq!(r.bifurcation_error_mm, vec![5.0]);
        assert_eq!((r.false_positives, r.false_negatives), (0, 0));
        assert_eq!(r.identification_time_s, 0.5);
    }

    #[test]
    fn extra_prediction_is_a_false_positive() {
        let truth = GroundTruth { junctions: vec![v(0.0, 0.0, 0.0)] };
        let r = evaluate(&result_with(&[v(0.0, 0.0, 7.4), v(0.0, 0.0, 3.0)]), &truth);
        assert_eq!(r.matches.len(), 1);
        assert_eq!(r.matches[0].bifurcation_index, 1);
        assert_eq!(r.false_positives, 1);
    }

    #[test]
    fn no_predictions_is_a_false_negative() {
        let truth = GroundTruth { junctions: vec![v(0.0, 0.0, 0.0)] };
        let r = evaluate(&result_with(&[]), &truth);
        assert_eq!(r.false_negatives, 1);
        assert!(r.bifurcation_error_mm.is_empty());
    }

    #[test]
    fn gate_rejects_far_predictions() {
        let truth = GroundTruth { junctions: vec![v(0.0, 0.0, 0.0)] };
        let r = evaluate(&result_with(&[v(0.0, 0.0, 30.5)]), &truth);
        assert_eq!((r.false_positives, r.false_negatives), (1, 1));
    }

    #[test]
    fn matching_prefers_more_matches_over_a_closer_single() {
        // Nearest-first would give truth 0 the prediction at 1 and leave
        // truth 1 (29 mm from it, 31 from the other) unmatched.
        let truth = vec![v(0.0, 0.0, 0.0), v(30.0, 0.0, 0.0)];
        let preds = vec![v(1.0, 0.0, 0.0), v(-20.0, 0.0, 0.0)];
        let m = match_junctions(&truth, &preds);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].bifurcation_index, m[1].bifurcation_index), (1, 0));
    }

    #[test]
    fn needle_range_uses_truth_distance() {
        let truth = GroundTruth { junctions: vec![v(0.0, 0.0, 0.0)] };
        let r = evaluate(&result_with(&[v(0.0, 0.0, 1.0)]), &truth);
        assert_eq!(r.needle_in_range, vec![false]);
        let r = evaluate(&result_with(&[v(0.0, 0.0, -1.0)]), &truth);
        assert_eq!(r.needle_in_range, vec![true]);
    }

    proptest! {
        #[test]
        fn matching_is_injective_and_gated(
            truth in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 0..6),
            preds in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 0..6),
        ) {
            let truth: Vec<_> = truth.into_iter().map(|(x, y)| v(x, y, 0.0)).collect();
            let preds: Vec<_> = preds.into_iter().map(|(x, y)| v(x, y, 0.0)).collect();
            let m = match_junctions(&truth, &preds);
            let ti: std::collections::BTreeSet<_> = m.iter().map(|m| m.truth_index).collect();
            let pi: std::collections::BTreeSet<_> = m.iter().map(|m| m.bifurcation_index).collect();
            prop_assert_eq!(ti.len(), m.len());
            prop_assert_eq!(pi.len(), m.len());
            for x in &m {
                prop_assert!(x.error_mm <= MATCH_GATE_MM);
                prop_assert!((x.error_mm - (truth[x.truth_index] - preds[x.bifurcation_index]).norm()).abs() < 1e-12);
            }
        }
    }
}
