//! CLEAR-MOT evaluation: frame-by-frame correspondence between ground truth
//! and tracker output with correspondence persistence, producing MOTA and the
//! usual companion counts (Rcll, Prcn, IDsw, Frag, MT, ML).

use crate::assoc::gated_match;
use crate::mot_io::{GtRow, ResultRow};
use crate::track::{iou, BBox};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("ground truth contains no evaluated rows")]
    EmptyGroundTruth,
    #[error("IoU gate must be in (0, 1], got {0}")]
    InvalidGate(f64),
}

/// Evaluation knobs. By default only ground-truth rows with the considered
/// flag set and the pedestrian class (1) are scored, matching MOTChallenge
/// practice.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Minimum IoU for a hypothesis to count as covering a ground-truth box.
    pub iou_gate: f64,
    /// Skip ground-truth rows whose considered flag is 0.
    pub require_considered: bool,
    /// Evaluate only this ground-truth class; `None` evaluates all classes.
    pub class_filter: Option<i64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_gate: 0.5,
            require_considered: true,
            class_filter: Some(1),
        }
    }
}

/// Aggregated evaluation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Total evaluated ground-truth boxes.
    pub num_gt: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    pub fragmentations: u64,
    /// Trajectories tracked in >= 80% of their frames.
    pub mostly_tracked: u64,
    /// Trajectories tracked in <= 20% of their frames.
    pub mostly_lost: u64,
    /// Total ground-truth trajectories evaluated.
    pub trajectories: u64,
    pub recall: f64,
    pub precision: f64,
    pub mota: f64,
}

fn gt_bbox(row: &GtRow) -> BBox {
    BBox {
        x: row.x,
        y: row.y,
        w: row.w,
        h: row.h,
    }
}

fn res_bbox(row: &ResultRow) -> BBox {
    BBox {
        x: row.x,
        y: row.y,
        w: row.w,
        h: row.h,
    }
}

/// Runs the CLEAR protocol over per-frame ground-truth and result tables.
///
/// Per frame, correspondences from the previous frame are kept while they
/// still clear the IoU gate; the remainder is re-matched with the Hungarian
/// algorithm on a `1 - IoU` cost. A ground-truth object re-matched to a
/// different hypothesis than its last known partner counts one ID switch.
pub fn evaluate(
    gt: &BTreeMap<u32, Vec<GtRow>>,
    res: &BTreeMap<u32, Vec<ResultRow>>,
    options: &EvalOptions,
) -> Result<EvalReport, MetricsError> {
    if !(options.iou_gate > 0.0 && options.iou_gate <= 1.0) {
        return Err(MetricsError::InvalidGate(options.iou_gate));
    }
    let considered = |row: &GtRow| {
        (!options.require_considered || row.considered)
            && options.class_filter.is_none_or(|c| row.class_id == c)
    };

    let mut frames: Vec<u32> = gt.keys().chain(res.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();

    let mut num_gt: u64 = 0;
    let mut tp: u64 = 0;
    let mut fp: u64 = 0;
    let mut fn_count: u64 = 0;
    let mut id_switches: u64 = 0;
    // Correspondence active in the previous frame, and the last hypothesis
    // each ground-truth object was ever matched to.
    let mut active: HashMap<u64, u64> = HashMap::new();
    let mut last_partner: HashMap<u64, u64> = HashMap::new();
    // Per-trajectory tracked/untracked timeline, in frame order.
    let mut timelines: BTreeMap<u64, Vec<bool>> = BTreeMap::new();

    for &t in &frames {
        let gt_rows: Vec<&GtRow> = gt
            .get(&t)
            .map(|rows| rows.iter().filter(|r| considered(r)).collect())
            .unwrap_or_default();
        let hyp_rows: &[ResultRow] = res.get(&t).map(Vec::as_slice).unwrap_or(&[]);
        num_gt += gt_rows.len() as u64;

        let hyp_index_by_id: HashMap<u64, usize> = hyp_rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id, i))
            .collect();

        let mut gt_matched: Vec<Option<usize>> = vec![None; gt_rows.len()];
        let mut hyp_used = vec![false; hyp_rows.len()];

        // Keep surviving correspondences from the previous frame.
        for (gi, g) in gt_rows.iter().enumerate() {
            if let Some(&partner) = active.get(&g.id) {
                if let Some(&hi) = hyp_index_by_id.get(&partner) {
                    if !hyp_used[hi] && iou(&gt_bbox(g), &res_bbox(&hyp_rows[hi])) >= options.iou_gate
                    {
                        gt_matched[gi] = Some(hi);
                        hyp_used[hi] = true;
                    }
                }
            }
        }

        // Re-match the rest globally, gated at the same IoU.
        let free_gt: Vec<usize> = (0..gt_rows.len()).filter(|&i| gt_matched[i].is_none()).collect();
        let free_hyp: Vec<usize> = (0..hyp_rows.len()).filter(|&i| !hyp_used[i]).collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let gt_boxes: Vec<BBox> = free_gt.iter().map(|&i| gt_bbox(gt_rows[i])).collect();
            let hyp_boxes: Vec<BBox> = free_hyp.iter().map(|&i| res_bbox(&hyp_rows[i])).collect();
            let assignment = gated_match(&gt_boxes, &hyp_boxes, 1.0 - options.iou_gate);
            for (a, b) in assignment.matches {
                gt_matched[free_gt[a]] = Some(free_hyp[b]);
                hyp_used[free_hyp[b]] = true;
            }
        }

        let mut new_active = HashMap::new();
        for (gi, g) in gt_rows.iter().enumerate() {
            match gt_matched[gi] {
                Some(hi) => {
                    let partner = hyp_rows[hi].id;
                    tp += 1;
                    if let Some(&previous) = last_partner.get(&g.id) {
                        if previous != partner {
                            id_switches += 1;
                        }
                    }
                    last_partner.insert(g.id, partner);
                    new_active.insert(g.id, partner);
                    timelines.entry(g.id).or_default().push(true);
                }
                None => {
                    fn_count += 1;
                    timelines.entry(g.id).or_default().push(false);
                }
            }
        }
        fp += hyp_used.iter().filter(|&&u| !u).count() as u64;
        active = new_active;
    }

    if num_gt == 0 {
        return Err(MetricsError::EmptyGroundTruth);
    }

    let mut mostly_tracked = 0u64;
    let mut mostly_lost = 0u64;
    let mut fragmentations = 0u64;
    for timeline in timelines.values() {
        let tracked = timeline.iter().filter(|&&s| s).count();
        let ratio = tracked as f64 / timeline.len() as f64;
        if ratio >= 0.8 {
            mostly_tracked += 1;
        }
        if ratio <= 0.2 {
            mostly_lost += 1;
        }
        let mut seen_tracked = false;
        let mut previous = false;
        for &s in timeline {
            if s && !previous && seen_tracked {
                fragmentations += 1;
            }
            seen_tracked |= s;
            previous = s;
        }
    }

    let recall = tp as f64 / num_gt as f64;
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let mota = 1.0 - (fn_count + fp + id_switches) as f64 / num_gt as f64;
    Ok(EvalReport {
        num_gt,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_count,
        id_switches,
        fragmentations,
        mostly_tracked,
        mostly_lost,
        trajectories: timelines.len() as u64,
        recall,
        precision,
        mota,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt_row(frame: u32, id: u64, x: f64, y: f64) -> GtRow {
        GtRow {
            frame,
            id,
            x,
            y,
            w: 20.0,
            h: 40.0,
            considered: true,
            class_id: 1,
            visibility: 1.0,
        }
    }

    fn res_row(frame: u32, id: u64, x: f64, y: f64) -> ResultRow {
        ResultRow {
            frame,
            id,
            x,
            y,
            w: 20.0,
            h: 40.0,
            conf: 1.0,
        }
    }

    fn group_gt(rows: Vec<GtRow>) -> BTreeMap<u32, Vec<GtRow>> {
        let mut map: BTreeMap<u32, Vec<GtRow>> = BTreeMap::new();
        for r in rows {
            map.entry(r.frame).or_default().push(r);
        }
        map
    }

    fn group_res(rows: Vec<ResultRow>) -> BTreeMap<u32, Vec<ResultRow>> {
        let mut map: BTreeMap<u32, Vec<ResultRow>> = BTreeMap::new();
        for r in rows {
            map.entry(r.frame).or_default().push(r);
        }
        map
    }

    fn gt_as_results(gt: &BTreeMap<u32, Vec<GtRow>>) -> BTreeMap<u32, Vec<ResultRow>> {
        gt.iter()
            .map(|(&f, rows)| {
                (
                    f,
                    rows.iter()
                        .map(|r| ResultRow {
                            frame: r.frame,
                            id: r.id,
                            x: r.x,
                            y: r.y,
                            w: r.w,
                            h: r.h,
                            conf: 1.0,
                        })
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn perfect_results_score_perfectly() {
        let gt = group_gt(
            (1..=8)
                .flat_map(|f| {
                    vec![
                        gt_row(f, 1, f as f64 * 3.0, 10.0),
                        gt_row(f, 2, 100.0 - f as f64, 80.0),
                    ]
                })
                .collect(),
        );
        let report = evaluate(&gt, &gt_as_results(&gt), &EvalOptions::default()).unwrap();
        assert_eq!(report.mota, 1.0);
        assert_eq!(report.id_switches, 0);
        assert_eq!(report.fragmentations, 0);
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.false_negatives, 0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.mostly_tracked, 2);
        assert_eq!(report.mostly_lost, 0);
    }

    #[test]
    fn empty_results_score_zero_mota() {
        let gt = group_gt((1..=5).map(|f| gt_row(f, 1, 10.0, 10.0)).collect());
        let report = evaluate(&gt, &BTreeMap::new(), &EvalOptions::default()).unwrap();
        assert_eq!(report.mota, 0.0);
        assert_eq!(report.false_negatives, 5);
        assert_eq!(report.mostly_lost, 1);
        assert_eq!(report.recall, 0.0);
    }

    /// One object, perfect boxes, hypothesis identity changes at frame 4:
    /// exactly one switch, MOTA = 1 - 1/6.
    #[test]
    fn id_switch_scenario_hand_traced() {
        let gt = group_gt((1..=6).map(|f| gt_row(f, 1, 30.0, 30.0)).collect());
        let res = group_res(
            (1..=6)
                .map(|f| res_row(f, if f <= 3 { 1 } else { 2 }, 30.0, 30.0))
                .collect(),
        );
        let report = evaluate(&gt, &res, &EvalOptions::default()).unwrap();
        assert_eq!(report.id_switches, 1);
        assert!((report.mota - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
        assert_eq!(report.fragmentations, 0);
        assert_eq!(report.true_positives, 6);
    }

    /// An identity that disappears and comes back as itself after a gap is a
    /// fragmentation, not a switch.
    #[test]
    fn gap_counts_fragmentation_not_switch() {
        let gt = group_gt((1..=9).map(|f| gt_row(f, 1, 30.0, 30.0)).collect());
        let res = group_res(
            (1..=9)
                .filter(|f| !(4..=5).contains(f))
                .map(|f| res_row(f, 7, 30.0, 30.0))
                .collect(),
        );
        let report = evaluate(&gt, &res, &EvalOptions::default()).unwrap();
        assert_eq!(report.id_switches, 0);
        assert_eq!(report.fragmentations, 1);
        assert_eq!(report.false_negatives, 2);
    }

    #[test]
    fn correspondence_persists_against_a_closer_newcomer() {
        // Hypothesis 1 tracks the object slightly off-center; a new
        // hypothesis 2 appears dead-on at frame 3. The persisted match must
        // win, and hypothesis 2 becomes a false positive.
        let gt = group_gt((1..=4).map(|f| gt_row(f, 1, 30.0, 30.0)).collect());
        let mut rows: Vec<ResultRow> = (1..=4).map(|f| res_row(f, 1, 32.0, 30.0)).collect();
        rows.push(res_row(3, 2, 30.0, 30.0));
        rows.push(res_row(4, 2, 30.0, 30.0));
        let res = group_res(rows);
        let report = evaluate(&gt, &res, &EvalOptions::default()).unwrap();
        assert_eq!(report.id_switches, 0);
        assert_eq!(report.true_positives, 4);
        assert_eq!(report.false_positives, 2);
    }

    #[test]
    fn matches_below_the_gate_never_count() {
        let gt = group_gt(vec![gt_row(1, 1, 0.0, 0.0)]);
        // Offset by half the box width: IoU ~ 1/3 < 0.5.
        let res = group_res(vec![res_row(1, 1, 10.0, 0.0)]);
        let report = evaluate(&gt, &res, &EvalOptions::default()).unwrap();
        assert_eq!(report.true_positives, 0);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.false_negatives, 1);
        assert!((report.mota - -1.0).abs() < 1e-12);
    }

    #[test]
    fn unconsidered_and_foreign_class_rows_are_ignored() {
        let mut distractor = gt_row(1, 2, 60.0, 60.0);
        distractor.considered = false;
        let mut vehicle = gt_row(1, 3, 90.0, 90.0);
        vehicle.class_id = 3;
        let gt = group_gt(vec![gt_row(1, 1, 30.0, 30.0), distractor, vehicle]);
        let res = group_res(vec![res_row(1, 1, 30.0, 30.0)]);
        let report = evaluate(&gt, &res, &EvalOptions::default()).unwrap();
        assert_eq!(report.num_gt, 1);
        assert_eq!(report.mota, 1.0);

        let all_classes = EvalOptions {
            class_filter: None,
            require_considered: false,
            ..EvalOptions::default()
        };
        let report = evaluate(&gt, &res, &all_classes).unwrap();
        assert_eq!(report.num_gt, 3);
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        assert_eq!(
            evaluate(&BTreeMap::new(), &BTreeMap::new(), &EvalOptions::default()),
            Err(MetricsError::EmptyGroundTruth)
        );
        let mut unconsidered = gt_row(1, 1, 0.0, 0.0);
        unconsidered.considered = false;
        let gt = group_gt(vec![unconsidered]);
        assert_eq!(
            evaluate(&gt, &BTreeMap::new(), &EvalOptions::default()),
            Err(MetricsError::EmptyGroundTruth)
        );
    }

    #[test]
    fn deleting_rows_never_raises_recall() {
        let gt = group_gt(
            (1..=6)
                .flat_map(|f| (1..=3).map(move |i| gt_row(f, i, 40.0 * i as f64, 10.0)))
                .collect(),
        );
        let full = gt_as_results(&gt);
        let full_report = evaluate(&gt, &full, &EvalOptions::default()).unwrap();
        let mut pruned = full.clone();
        for rows in pruned.values_mut() {
            rows.retain(|r| r.id != 2);
        }
        let pruned_report = evaluate(&gt, &pruned, &EvalOptions::default()).unwrap();
        assert!(pruned_report.recall <= full_report.recall);
        assert!(pruned_report.mostly_tracked + pruned_report.mostly_lost <= pruned_report.trajectories);
    }

    #[test]
    fn duplicated_disjoint_rows_never_raise_precision() {
        let gt = group_gt((1..=6).map(|f| gt_row(f, 1, 30.0, 30.0)).collect());
        let clean = gt_as_results(&gt);
        let clean_report = evaluate(&gt, &clean, &EvalOptions::default()).unwrap();
        let mut noisy = clean.clone();
        for (f, rows) in noisy.iter_mut() {
            rows.push(res_row(*f, 99, 300.0, 300.0));
        }
        let noisy_report = evaluate(&gt, &noisy, &EvalOptions::default()).unwrap();
        assert!(noisy_report.precision <= clean_report.precision);
        assert_eq!(noisy_report.false_positives, 6);
    }
}
