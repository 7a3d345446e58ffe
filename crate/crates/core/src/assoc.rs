//! Track-to-detection assignment: Hungarian algorithm on a cost matrix, and
//! the IoU-gated matcher built on top of it.

use crate::track::{iou, BBox};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AssocError {
    #[error("cost buffer has {got} entries, expected {rows}x{cols}={expected}")]
    BufferSizeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("cost at ({row}, {col}) is not a finite non-negative number")]
    InvalidCost { row: usize, col: usize },
}

/// Row-major rectangular cost matrix with finite, non-negative entries.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self, AssocError> {
        if costs.len() != rows * cols {
            return Err(AssocError::BufferSizeMismatch {
                rows,
                cols,
                expected: rows * cols,
                got: costs.len(),
            });
        }
        for (i, &c) in costs.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(AssocError::InvalidCost {
                    row: i / cols.max(1),
                    col: i % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, costs })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.cols + col]
    }
}

/// Outcome of an assignment round. The three index sets partition the rows
/// (tracks) and columns (detections).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// `(track index, detection index)` pairs, sorted by track index.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| costs.get(r, c)).sum()
    }
}

/// Minimum-total-cost assignment of `min(rows, cols)` pairs via the shortest
/// augmenting path formulation with dual potentials (O(n^2 m)). Rectangular
/// matrices leave the surplus dimension unmatched; an empty matrix yields an
/// empty assignment.
#[allow(clippy::needless_range_loop)] // index walks three parallel arrays
pub fn hungarian(costs: &CostMatrix) -> Assignment {
    let (rows, cols) = (costs.rows, costs.cols);
    if rows == 0 || cols == 0 {
        return Assignment {
            matches: Vec::new(),
            unmatched_tracks: (0..rows).collect(),
            unmatched_detections: (0..cols).collect(),
        };
    }

    // The augmenting-path solver wants rows <= cols; transpose if needed.
    let transposed = rows > cols;
    let (n, m) = if transposed { (cols, rows) } else { (rows, cols) };
    let at = |i: usize, j: usize| -> f64 {
        if transposed {
            costs.get(j, i)
        } else {
            costs.get(i, j)
        }
    };

    // 1-based arrays; row_of[j] is the row assigned to column j (0 = none).
    let mut pot_row = vec![0.0f64; n + 1];
    let mut pot_col = vec![0.0f64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut prev_col = vec![0usize; m + 1];

    for row in 1..=n {
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        row_of[0] = row;
        let mut j0 = 0usize;
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - pot_row[i0] - pot_col[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    prev_col[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    pot_row[row_of[j]] += delta;
                    pot_col[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = prev_col[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        }
    }

    let mut matches = Vec::with_capacity(n);
    for j in 1..=m {
        if row_of[j] != 0 {
            let (r, c) = if transposed {
                (j - 1, row_of[j] - 1)
            } else {
                (row_of[j] - 1, j - 1)
            };
            matches.push((r, c));
        }
    }
    matches.sort_unstable();
    let matched_rows: Vec<bool> = {
        let mut v = vec![false; rows];
        for &(r, _) in &matches {
            v[r] = true;
        }
        v
    };
    let matched_cols: Vec<bool> = {
        let mut v = vec![false; cols];
        for &(_, c) in &matches {
            v[c] = true;
        }
        v
    };
    Assignment {
        matches,
        unmatched_tracks: (0..rows).filter(|&r| !matched_rows[r]).collect(),
        unmatched_detections: (0..cols).filter(|&c| !matched_cols[c]).collect(),
    }
}

/// Hungarian matching on `cost = 1 - IoU`, followed by gating: any match
/// whose cost exceeds `epsilon` is dissolved and both endpoints move to the
/// unmatched lists. Gating runs after the global solve rather than by
/// masking entries beforehand.
pub fn gated_match(tracks: &[BBox], detections: &[BBox], epsilon: f64) -> Assignment {
    assert!(
        (0.0..=1.0).contains(&epsilon),
        "gate must be a cost in [0, 1]"
    );
    let mut costs = Vec::with_capacity(tracks.len() * detections.len());
    for t in tracks {
        for d in detections {
            costs.push(1.0 - iou(t, d));
        }
    }
    let matrix = CostMatrix::new(tracks.len(), detections.len(), costs)
        .expect("1 - IoU is always finite and non-negative");
    let solved = hungarian(&matrix);

    let mut matches = Vec::with_capacity(solved.matches.len());
    let mut unmatched_tracks = solved.unmatched_tracks;
    let mut unmatched_detections = solved.unmatched_detections;
    for (r, c) in solved.matches {
        if matrix.get(r, c) > epsilon {
            unmatched_tracks.push(r);
            unmatched_detections.push(c);
        } else {
            matches.push((r, c));
        }
    }
    unmatched_tracks.sort_unstable();
    unmatched_detections.sort_unstable();
    Assignment {
        matches,
        unmatched_tracks,
        unmatched_detections,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::BBox;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize, costs: &[f64]) -> CostMatrix {
        CostMatrix::new(rows, cols, costs.to_vec()).unwrap()
    }

    /// Exhaustive minimum over all maximal matchings; the independent route
    /// the solver is checked against. After transposing so rows <= cols,
    /// every maximal matching assigns each row to a distinct column.
    fn brute_force_min(costs: &CostMatrix) -> f64 {
        fn recurse(costs: &CostMatrix, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == costs.rows() {
                *best = best.min(acc);
                return;
            }
            for c in 0..costs.cols() {
                if !used[c] {
                    used[c] = true;
                    recurse(costs, row + 1, used, acc + costs.get(row, c), best);
                    used[c] = false;
                }
            }
        }
        let (r, c) = (costs.rows(), costs.cols());
        let normal: CostMatrix = if r <= c {
            costs.clone()
        } else {
            let mut t = Vec::with_capacity(r * c);
            for j in 0..c {
                for i in 0..r {
                    t.push(costs.get(i, j));
                }
            }
            CostMatrix::new(c, r, t).unwrap()
        };
        let mut best = f64::INFINITY;
        recurse(
            &normal,
            0,
            &mut vec![false; normal.cols()],
            0.0,
            &mut best,
        );
        best
    }

    #[test]
    fn diagonal_case() {
        let a = hungarian(&matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(a.matches, vec![(0, 0), (1, 1)]);
        assert!(a.unmatched_tracks.is_empty());
        assert!(a.unmatched_detections.is_empty());
    }

    #[test]
    fn rectangular_leaves_surplus_unmatched() {
        let m = matrix(2, 3, &[5.0, 1.0, 9.0, 2.0, 7.0, 3.0]);
        let a = hungarian(&m);
        assert_eq!(a.matches.len(), 2);
        assert_eq!(a.unmatched_detections.len(), 1);
        assert!(a.unmatched_tracks.is_empty());
        assert!((a.total_cost(&m) - brute_force_min(&m)).abs() < 1e-9);

        let tall = matrix(3, 1, &[4.0, 2.0, 8.0]);
        let a = hungarian(&tall);
        assert_eq!(a.matches, vec![(1, 0)]);
        assert_eq!(a.unmatched_tracks, vec![0, 2]);
    }

    #[test]
    fn empty_matrices() {
        let a = hungarian(&matrix(0, 3, &[]));
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_detections, vec![0, 1, 2]);
        let b = hungarian(&matrix(2, 0, &[]));
        assert_eq!(b.unmatched_tracks, vec![0, 1]);
    }

    #[test]
    fn wikipedia_style_instance() {
        let m = matrix(
            4,
            4,
            &[
                10.0, 25.0, 15.0, 20.0, //
                15.0, 30.0, 5.0, 15.0, //
                35.0, 20.0, 12.0, 24.0, //
                17.0, 25.0, 24.0, 20.0,
            ],
        );
        let a = hungarian(&m);
        assert_eq!(a.matches, vec![(0, 0), (1, 2), (2, 1), (3, 3)]);
        assert_eq!(a.total_cost(&m), 55.0);
    }

    fn assignment_partitions(a: &Assignment, rows: usize, cols: usize) -> bool {
        let mut seen_r = vec![false; rows];
        let mut seen_c = vec![false; cols];
        for &(r, c) in &a.matches {
            if seen_r[r] || seen_c[c] {
                return false;
            }
            seen_r[r] = true;
            seen_c[c] = true;
        }
        for &r in &a.unmatched_tracks {
            if seen_r[r] {
                return false;
            }
            seen_r[r] = true;
        }
        for &c in &a.unmatched_detections {
            if seen_c[c] {
                return false;
            }
            seen_c[c] = true;
        }
        seen_r.iter().all(|&s| s) && seen_c.iter().all(|&s| s)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]
        #[test]
        fn matches_brute_force_minimum(
            rows in 1usize..=7, cols in 1usize..=7,
            raw in proptest::collection::vec(0.0f64..10.0, 49),
        ) {
            let costs: Vec<f64> = raw.into_iter().take(rows * cols).collect();
            let m = CostMatrix::new(rows, cols, costs).unwrap();
            let a = hungarian(&m);
            prop_assert_eq!(a.matches.len(), rows.min(cols));
            prop_assert!(assignment_partitions(&a, rows, cols));
            let best = brute_force_min(&m);
            prop_assert!((a.total_cost(&m) - best).abs() < 1e-9,
                "solver {} vs brute force {}", a.total_cost(&m), best);
        }

        /// Adding a constant to a square matrix shifts every maximal
        /// matching's cost by n*c, so the returned matching must stay optimal
        /// for the shifted matrix as well.
        #[test]
        fn cost_shift_keeps_matching_optimal(
            n in 1usize..=5,
            raw in proptest::collection::vec(0.0f64..10.0, 25),
            shift in 0.0f64..5.0,
        ) {
            let costs: Vec<f64> = raw.into_iter().take(n * n).collect();
            let m = CostMatrix::new(n, n, costs.clone()).unwrap();
            let shifted = CostMatrix::new(n, n, costs.iter().map(|c| c + shift).collect()).unwrap();
            let a = hungarian(&m);
            let b = hungarian(&shifted);
            let expected = a.total_cost(&m) + n as f64 * shift;
            prop_assert!((b.total_cost(&shifted) - expected).abs() < 1e-9);
            prop_assert!((a.total_cost(&shifted) - b.total_cost(&shifted)).abs() < 1e-9);
        }
    }

    #[test]
    fn gate_dissolves_weak_matches() {
        let track = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        // IoU = 1/3 with the track, cost 2/3 < 0.7: kept.
        let near = BBox::new(5.0, 0.0, 10.0, 10.0).unwrap();
        let a = gated_match(&[track], &[near], 0.7);
        assert_eq!(a.matches, vec![(0, 0)]);

        // IoU = 0.2 -> cost 0.8 > 0.7: dissolved.
        let far = BBox::new(0.0, 0.0, 10.0, 50.0).unwrap();
        let a = gated_match(&[track], &[far], 0.7);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn identical_lists_match_identically() {
        let boxes: Vec<BBox> = (0..4)
            .map(|i| BBox::new(20.0 * i as f64, 5.0, 10.0, 10.0).unwrap())
            .collect();
        let a = gated_match(&boxes, &boxes, 0.7);
        assert_eq!(a.matches, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!(a.unmatched_tracks.is_empty());
    }

    #[test]
    fn no_detections_leaves_all_tracks_unmatched() {
        let boxes = vec![BBox::new(0.0, 0.0, 4.0, 4.0).unwrap()];
        let a = gated_match(&boxes, &[], 0.7);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0]);
    }

    #[test]
    fn gated_matches_always_clear_the_gate() {
        let mut rng_state = 12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 33) as f64 / (1u64 << 31) as f64) * 50.0
        };
        for _ in 0..200 {
            let tracks: Vec<BBox> = (0..5)
                .map(|_| BBox::new(next(), next(), 5.0 + next() / 5.0, 5.0 + next() / 5.0).unwrap())
                .collect();
            let dets: Vec<BBox> = (0..5)
                .map(|_| BBox::new(next(), next(), 5.0 + next() / 5.0, 5.0 + next() / 5.0).unwrap())
                .collect();
            let a = gated_match(&tracks, &dets, 0.7);
            for &(t, d) in &a.matches {
                assert!(iou(&tracks[t], &dets[d]) >= 1.0 - 0.7 - 1e-12);
            }
            assert!(assignment_partitions(&a, 5, 5));
        }
    }
}
