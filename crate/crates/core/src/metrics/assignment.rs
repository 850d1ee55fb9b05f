//! Maximum-weight bipartite assignment.
//!
//! Both solvers take a rectangular `rows x cols` weight matrix and return, for
//! each row, the matched column (or `None` when there are more rows than
//! columns).

/// Exhaustive search over all injective row-to-column maps. Only suitable for
/// tiny matrices (the caller caps both sides at six).
pub fn exhaustive(weights: &[Vec<f64>], cols: usize) -> Vec<Option<usize>> {
    let rows = weights.len();
    let n = rows.max(cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_total = f64::NEG_INFINITY;
    let mut best = perm.clone();
    permute(&mut perm, 0, &mut |p| {
        let total = canonical_sum(
            p.iter()
                .take(rows)
                .enumerate()
                .filter(|&(_, &c)| c < cols)
                .map(|(r, &c)| weights[r][c]),
        );
        if total > best_total {
            best_total = total;
            best = p.to_vec();
        }
    });
    (0..rows)
        .map(|r| (best[r] < cols).then_some(best[r]))
        .collect()
}

fn permute(p: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Kuhn-Munkres with row/column potentials (shortest augmenting paths),
/// O(n^3) on the zero-padded square matrix.
pub fn hungarian(weights: &[Vec<f64>], cols: usize) -> Vec<Option<usize>> {
    let rows = weights.len();
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    // Minimize cost = -weight; padded cells cost 0.
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0.0
        }
    };
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Order-independent sum: values are added in ascending order so that two
/// assignments selecting the same multiset of weights give identical bits.
pub fn canonical_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

pub fn assignment_total(weights: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    canonical_sum(
        assignment
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| weights[r][c])),
    )
}
