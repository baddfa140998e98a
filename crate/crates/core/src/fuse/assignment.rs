//! Rectangular linear assignment with forbidden entries.

/// Minimum-cost one-to-one assignment of rows to columns.
///
/// `None` entries are forbidden. Among all matchings that use only allowed
/// entries, the result has maximum cardinality and, among those, minimum total
/// cost. Returns the matched column (if any) for each row.
pub fn min_cost_assignment(costs: &[Vec<Option<f64>>]) -> Vec<Option<usize>> {
    let rows = costs.len();
    let cols = costs.iter().map(Vec::len).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    // Any unmatched row (forbidden or padded cell) costs `big`, which exceeds
    // every achievable sum of allowed costs, so cardinality dominates.
    let allowed_sum: f64 = costs.iter().flatten().flatten().map(|c| c.abs()).sum();
    let big = 2.0 * allowed_sum + 1.0;
    let n = rows.max(cols);
    let cell = |r: usize, c: usize| -> f64 {
        costs
            .get(r)
            .and_then(|row| row.get(c))
            .copied()
            .flatten()
            .unwrap_or(big)
    };
    let assignment = hungarian(n, cell);
    (0..rows)
        .map(|r| {
            let c = assignment[r];
            (c < cols && costs[r].get(c).copied().flatten().is_some()).then_some(c)
        })
        .collect()
}

/// Dense O(n³) Hungarian algorithm with potentials on an n×n cost function.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
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
            for j in 0..=n {
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
