//! Small dense linear algebra: just enough for stationary laws (K ≤ ~8)
//! and the vertex-enumeration feasibility solver (≤ 3 unknowns).

/// Solve `A x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` when the matrix is numerically singular.
pub(crate) fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        let scale: f64 = a[pivot_row].iter().map(|v| v.abs()).fold(0.0, f64::max);
        if a[pivot_row][col].abs() <= 1e-14 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Strong connectivity of the digraph with an edge j→k wherever
/// `weight(j, k) > 0`.
pub(crate) fn strongly_connected(n: usize, weight: impl Fn(usize, usize) -> f64) -> bool {
    if n <= 1 {
        return true;
    }
    let reaches_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                let w = if forward { weight(v, u) } else { weight(u, v) };
                if u != v && w > 0.0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reaches_all(true) && reaches_all(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let mut b = vec![5.0, 10.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b).is_none());
    }

    #[test]
    fn connectivity() {
        // 0 -> 1 -> 2 -> 0 is strongly connected
        let cyc = |i: usize, j: usize| if (i + 1) % 3 == j { 1.0 } else { 0.0 };
        assert!(strongly_connected(3, cyc));
        // 0 -> 1, 0 -> 2 only: not strongly connected
        let star = |i: usize, _j: usize| if i == 0 { 1.0 } else { 0.0 };
        assert!(!strongly_connected(3, star));
    }
}
