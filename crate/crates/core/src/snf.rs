//! Smith normal form of small integer matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// `left * input * right = diag(divisors, 0...)` with unimodular `left`, `right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmithForm {
    pub divisors: Vec<i64>,
    pub left: DMatrix<i64>,
    pub right: DMatrix<i64>,
}

impl SmithForm {
    /// Nonzero divisors greater than one: the torsion orders of the cokernel.
    pub fn torsion(&self) -> Vec<i64> {
        self.divisors.iter().copied().filter(|&d| d > 1).collect()
    }

    pub fn rank(&self) -> usize {
        self.divisors.len()
    }
}

pub fn smith_normal_form(input: &DMatrix<i64>) -> SmithForm {
    let (m, n) = input.shape();
    let mut a = input.map(|x| x as i128);
    let mut left = DMatrix::<i128>::identity(m, m);
    let mut right = DMatrix::<i128>::identity(n, n);
    let mut divisors = Vec::new();

    let mut t = 0;
    while t < m.min(n) {
        // pivot: smallest nonzero |entry| in the trailing block
        let mut pivot = None;
        for i in t..m {
            for j in t..n {
                let v = a[(i, j)].abs();
                if v != 0 && pivot.is_none_or(|(_, _, best)| v < best) {
                    pivot = Some((i, j, v));
                }
            }
        }
        let Some((pi, pj, _)) = pivot else { break };
        a.swap_rows(t, pi);
        left.swap_rows(t, pi);
        a.swap_columns(t, pj);
        right.swap_columns(t, pj);

        loop {
            let mut dirty = false;
            for i in t + 1..m {
                let q = a[(i, t)].div_euclid(a[(t, t)]);
                if q != 0 {
                    row_axpy(&mut a, i, t, -q);
                    row_axpy(&mut left, i, t, -q);
                }
                if a[(i, t)] != 0 {
                    a.swap_rows(t, i);
                    left.swap_rows(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..n {
                let q = a[(t, j)].div_euclid(a[(t, t)]);
                if q != 0 {
                    col_axpy(&mut a, j, t, -q);
                    col_axpy(&mut right, j, t, -q);
                }
                if a[(t, j)] != 0 {
                    a.swap_columns(t, j);
                    right.swap_columns(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // divisibility of the trailing block by the pivot
            let p = a[(t, t)];
            let offender = (t + 1..m)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| a[(i, j)] % p != 0);
            match offender {
                Some((i, _)) => {
                    row_axpy(&mut a, t, i, 1);
                    row_axpy(&mut left, t, i, 1);
                }
                None => break,
            }
        }
        if a[(t, t)] < 0 {
            for j in 0..n {
                a[(t, j)] = -a[(t, j)];
            }
            for j in 0..m {
                left[(t, j)] = -left[(t, j)];
            }
        }
        divisors.push(a[(t, t)] as i64);
        t += 1;
    }

    SmithForm {
        divisors,
        left: left.map(|x| x as i64),
        right: right.map(|x| x as i64),
    }
}

fn row_axpy(a: &mut DMatrix<i128>, target: usize, source: usize, factor: i128) {
    for j in 0..a.ncols() {
        let v = a[(source, j)];
        a[(target, j)] += factor * v;
    }
}

fn col_axpy(a: &mut DMatrix<i128>, target: usize, source: usize, factor: i128) {
    for i in 0..a.nrows() {
        let v = a[(i, source)];
        a[(i, target)] += factor * v;
    }
}

/// Least common multiple of the torsion orders, at least two.
pub fn torsion_exponent(form: &SmithForm) -> i64 {
    form.torsion().into_iter().fold(1, lcm).max(2)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}
