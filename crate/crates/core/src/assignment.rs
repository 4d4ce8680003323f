//! Exact maximum-weight bipartite assignment (Kuhn-Munkres with potentials).

/// Solves the rectangular maximum-weight assignment over `weights`
/// (`rows x cols`, row-major, all rows the same length).
///
/// Returns the total weight and, for each row, the column it was assigned
/// to. When there are more rows than columns some rows stay unassigned.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    if rows <= cols {
        let cost = |i: usize, j: usize| -weights[i][j];
        let row_to_col = min_cost_rows_le_cols(rows, cols, cost);
        let total = row_to_col
            .iter()
            .enumerate()
            .map(|(i, &j)| weights[i][j])
            .sum();
        (total, row_to_col.into_iter().map(Some).collect())
    } else {
        let cost = |j: usize, i: usize| -weights[i][j];
        let col_to_row = min_cost_rows_le_cols(cols, rows, cost);
        let mut assigned = vec![None; rows];
        let mut total = 0.0;
        for (j, &i) in col_to_row.iter().enumerate() {
            assigned[i] = Some(j);
            total += weights[i][j];
        }
        (total, assigned)
    }
}

/// Shortest augmenting path Hungarian method for `n <= m`. Returns the
/// column assigned to every row.
fn min_cost_rows_le_cols(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based internally; index 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
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
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn brute_force(weights: &[Vec<f64>]) -> f64 {
        let rows = weights.len();
        let cols = weights.first().map_or(0, Vec::len);
        let k = rows.min(cols);
        let mut best = 0.0f64;
        for rs in (0..rows).combinations(k) {
            for cs in (0..cols).permutations(k) {
                let s: f64 = rs.iter().zip(&cs).map(|(&i, &j)| weights[i][j]).sum();
                best = best.max(s);
            }
        }
        best
    }

    #[test]
    fn small_cases() {
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(max_weight_assignment(&w).0, 2.0);
        let w = vec![vec![1.0], vec![1.0]];
        let (total, a) = max_weight_assignment(&w);
        assert_eq!(total, 1.0);
        assert_eq!(a.iter().filter(|x| x.is_some()).count(), 1);
        assert_eq!(max_weight_assignment(&[]).0, 0.0);
    }

    #[test]
    fn prefers_global_optimum_over_greedy() {
        // greedy picks (0,0)=0.9 then (1,1)=0.1 -> 1.0; optimum is 0.8 + 0.8
        let w = vec![vec![0.9, 0.8], vec![0.8, 0.1]];
        assert!((max_weight_assignment(&w).0 - 1.6).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_brute_force(rows in 1usize..5, cols in 1usize..5, seed in prop::collection::vec(0.0f64..1.0, 16)) {
            let w: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..cols).map(|j| seed[i * 4 + j]).collect())
                .collect();
            let (total, assigned) = max_weight_assignment(&w);
            prop_assert!((total - brute_force(&w)).abs() < 1e-9);
            let used: Vec<usize> = assigned.iter().flatten().copied().collect();
            prop_assert_eq!(used.iter().unique().count(), used.len());
        }
    }
}
