//! Independent modified nodal analysis used as a reference solver.
//!
//! Unknowns are the potentials of every node reachable from the ground or
//! source, plus the current through the ideal source. The dense system is
//! solved by Gaussian elimination with partial pivoting.

#![allow(dead_code)]

use std::collections::VecDeque;

/// Resistor between nodes `a` and `b`.
#[derive(Debug, Clone, Copy)]
pub struct Resistor {
    pub a: usize,
    pub b: usize,
    pub ohms: f64,
}

pub fn r(a: usize, b: usize, ohms: f64) -> Resistor {
    Resistor { a, b, ohms }
}

fn reachable(n: usize, rs: &[Resistor], roots: &[usize]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for e in rs {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = roots.iter().copied().collect();
    for &s in roots {
        seen[s] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

#[allow(clippy::needless_range_loop)]
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[piv][col].abs() > 1e-300, "singular system");
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Node potentials with `ground` at 0 V and an ideal source of `volts`
/// from ground to `source`. Nodes cut off from both sit at 0 V.
pub fn mna_potentials(
    n: usize,
    rs: &[Resistor],
    ground: usize,
    source: usize,
    volts: f64,
) -> Vec<f64> {
    let live = reachable(n, rs, &[ground, source]);
    let unknown: Vec<usize> = (0..n).filter(|&i| live[i] && i != ground).collect();
    let mut index = vec![usize::MAX; n];
    for (k, &i) in unknown.iter().enumerate() {
        index[i] = k;
    }
    let m = unknown.len() + 1;
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for e in rs {
        let g = 1.0 / e.ohms;
        let (ia, ib) = (index[e.a], index[e.b]);
        if ia != usize::MAX {
            a[ia][ia] += g;
        }
        if ib != usize::MAX {
            a[ib][ib] += g;
        }
        if ia != usize::MAX && ib != usize::MAX {
            a[ia][ib] -= g;
            a[ib][ia] -= g;
        }
    }
    // Source branch current enters `source`.
    let s = index[source];
    let j = m - 1;
    a[s][j] -= 1.0;
    a[j][s] = 1.0;
    b[j] = volts;
    let x = gauss(a, b);
    let mut v = vec![0.0; n];
    for (k, &i) in unknown.iter().enumerate() {
        v[i] = x[k];
    }
    v
}

/// Equivalent resistance between `a` and `b`, or `None` when open.
pub fn mna_resistance(n: usize, rs: &[Resistor], a: usize, b: usize) -> Option<f64> {
    if !reachable(n, rs, &[a])[b] {
        return None;
    }
    let v = mna_potentials(n, rs, b, a, 1.0);
    let current: f64 = rs
        .iter()
        .filter_map(|e| {
            if e.a == a {
                Some((v[a] - v[e.b]) / e.ohms)
            } else if e.b == a {
                Some((v[a] - v[e.a]) / e.ohms)
            } else {
                None
            }
        })
        .sum();
    Some(1.0 / current)
}

pub fn relative_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// The all-circles drawing at zero offsets built by hand. Neighbouring rings
/// (centres 70 mm apart, radius 50 mm) cross at angles `±θ` from each centre
/// with `cos θ = 0.7`; every arc has resistance `0.2 Ω/mm × 50 mm × angle`.
/// Node 0 is the left bar contact, node 9 the right bar contact.
pub fn all_circles_network() -> (usize, Vec<Resistor>) {
    use std::f64::consts::PI;
    let theta = 0.7f64.acos();
    let arc = |angle: f64| 10.0 * angle;
    // top/bottom crossing between ring k and k+1, k = 0..4
    let top = |k: usize| 1 + 2 * k;
    let bottom = |k: usize| 2 + 2 * k;
    let (left, right) = (0, 9);
    let mut rs = vec![
        r(left, top(0), arc(PI - theta)),
        r(left, bottom(0), arc(PI - theta)),
        r(top(0), bottom(0), arc(2.0 * theta)),
    ];
    for k in 1..4 {
        rs.push(r(top(k - 1), bottom(k - 1), arc(2.0 * theta)));
        rs.push(r(top(k - 1), top(k), arc(PI - 2.0 * theta)));
        rs.push(r(bottom(k - 1), bottom(k), arc(PI - 2.0 * theta)));
        rs.push(r(top(k), bottom(k), arc(2.0 * theta)));
    }
    rs.push(r(top(3), bottom(3), arc(2.0 * theta)));
    rs.push(r(top(3), right, arc(PI - theta)));
    rs.push(r(bottom(3), right, arc(PI - theta)));
    (10, rs)
}
