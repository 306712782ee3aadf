//! Exact maximum-weight one-to-one assignment on integer weights.
//!
//! Small instances are solved by exhaustive enumeration, larger ones by the
//! Hungarian algorithm on negated costs. Weights are `i64` (tick durations),
//! so the optimum is exact in both routes.

/// Both sides at most this size: enumerate every injection exhaustively.
const BRUTE_FORCE_LIMIT: usize = 8;

/// Maximum-weight assignment of rows to columns.
///
/// `weights[i][j] >= 0` is the gain of pairing row `i` with column `j`.
/// Returns, per row, the assigned column. Every returned pairing has
/// strictly positive weight; zero-gain pairings are left unmatched.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols));
    debug_assert!(weights.iter().flatten().all(|&w| w >= 0));

    let mut assignment = if rows.max(cols) <= BRUTE_FORCE_LIMIT {
        brute_force(weights, rows, cols)
    } else {
        hungarian(weights, rows, cols)
    };
    for (i, slot) in assignment.iter_mut().enumerate() {
        if matches!(*slot, Some(j) if weights[i][j] <= 0) {
            *slot = None;
        }
    }
    assignment
}

/// Total weight of an assignment.
pub fn assignment_weight(weights: &[Vec<i64>], assignment: &[Option<usize>]) -> i64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .sum()
}

fn brute_force(weights: &[Vec<i64>], rows: usize, cols: usize) -> Vec<Option<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; rows];
    let mut best_weight = 0;
    let mut current: Vec<Option<usize>> = vec![None; rows];
    let mut used = vec![false; cols];

    fn recurse(
        weights: &[Vec<i64>],
        row: usize,
        acc: i64,
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut Vec<Option<usize>>,
        best_weight: &mut i64,
    ) {
        if row == weights.len() {
            if acc > *best_weight {
                *best_weight = acc;
                best.clone_from(current);
            }
            return;
        }
        // Leave this row unmatched.
        current[row] = None;
        recurse(weights, row + 1, acc, current, used, best, best_weight);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                current[row] = Some(j);
                recurse(
                    weights,
                    row + 1,
                    acc + weights[row][j],
                    current,
                    used,
                    best,
                    best_weight,
                );
                current[row] = None;
                used[j] = false;
            }
        }
    }

    recurse(
        weights,
        0,
        0,
        &mut current,
        &mut used,
        &mut best,
        &mut best_weight,
    );
    best
}

/// Hungarian algorithm (potentials formulation), minimizing cost over a
/// square matrix padded with zero-weight cells.
#[allow(clippy::needless_range_loop)] // 1-indexed potential arrays
fn hungarian(weights: &[Vec<i64>], rows: usize, cols: usize) -> Vec<Option<usize>> {
    let n = rows.max(cols);
    let max_w = weights.iter().flatten().copied().max().unwrap_or(0);
    // cost of a padded cell == cost of weight 0.
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max_w - weights[i][j]
        } else {
            max_w
        }
    };

    const INF: i64 = i64::MAX / 4;
    // 1-indexed arrays per the classic formulation.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // column -> row
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = assigned_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_degenerate() {
        assert!(max_weight_assignment(&[]).is_empty());
        assert_eq!(max_weight_assignment(&[vec![]]), vec![None]);
        assert_eq!(max_weight_assignment(&[vec![5]]), vec![Some(0)]);
        assert_eq!(max_weight_assignment(&[vec![0]]), vec![None]);
    }

    #[test]
    fn picks_optimal_over_greedy() {
        // Greedy would take (0,0)=9 then (1,1)=1 for 10; optimum is 8+7=15.
        let w = vec![vec![9, 8], vec![7, 1]];
        let a = max_weight_assignment(&w);
        assert_eq!(assignment_weight(&w, &a), 15);
    }

    #[test]
    fn rectangular_shapes() {
        let w = vec![vec![1, 10, 2]];
        assert_eq!(max_weight_assignment(&w), vec![Some(1)]);
        let w = vec![vec![1], vec![10], vec![2]];
        assert_eq!(max_weight_assignment(&w), vec![None, Some(0), None]);
    }

    fn oracle_weight(weights: &[Vec<i64>]) -> i64 {
        // Independent enumeration over column permutations.
        let rows = weights.len();
        let cols = weights[0].len();
        fn go(weights: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == weights.len() {
                return 0;
            }
            let mut best = go(weights, row + 1, used); // skip row
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(weights[row][j] + go(weights, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        let _ = (rows, cols);
        go(weights, 0, &mut vec![false; cols])
    }

    proptest! {
        // Hungarian route (forced) against oracle enumeration.
        #[test]
        fn hungarian_matches_enumeration(
            rows in 1usize..9,
            cols in 1usize..9,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 1000) as i64
            };
            let w: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let hung = hungarian(&w, rows, cols);
            prop_assert_eq!(assignment_weight(&w, &hung), oracle_weight(&w));
            let brute = brute_force(&w, rows, cols);
            prop_assert_eq!(assignment_weight(&w, &brute), oracle_weight(&w));
        }
    }
}
