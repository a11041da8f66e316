//! Fixed-size 4×4 complex matrix helpers.

use crate::Complex;

pub type Mat4 = [[Complex; 4]; 4];

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

pub fn zeros() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn identity() -> Mat4 {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn from_real(a: [[f64; 4]; 4]) -> Mat4 {
    a.map(|row| row.map(|x| Complex::new(x, 0.0)))
}

pub fn transpose(a: &Mat4) -> Mat4 {
    let mut t = zeros();
    for i in 0..4 {
        for j in 0..4 {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = zeros();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn scale(a: &Mat4, s: Complex) -> Mat4 {
    a.map(|row| row.map(|x| x * s))
}

pub fn max_abs(a: &Mat4) -> f64 {
    a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// Determinant by Laplace expansion over the 2×2 minors of the first two rows.
pub fn det(a: &Mat4) -> Complex {
    let m2 = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    // Column pairs (c0 < c1) and their complements, with the Laplace sign.
    const PAIRS: [((usize, usize), (usize, usize), f64); 6] = [
        ((0, 1), (2, 3), 1.0),
        ((0, 2), (1, 3), -1.0),
        ((0, 3), (1, 2), 1.0),
        ((1, 2), (0, 3), 1.0),
        ((1, 3), (0, 2), -1.0),
        ((2, 3), (0, 1), 1.0),
    ];
    PAIRS
        .iter()
        .map(|&((c0, c1), (d0, d1), s)| m2(0, 1, c0, c1) * m2(2, 3, d0, d1) * s)
        .sum()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tol` times the largest entry.
pub fn inverse(a: &Mat4, tol: f64) -> Option<Mat4> {
    let scale = max_abs(a);
    if scale == 0.0 {
        return None;
    }
    let mut m = *a;
    let mut inv = identity();
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        if m[pivot][col].norm() <= tol * scale {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].inv();
        for j in 0..4 {
            m[col][j] *= p;
            inv[col][j] *= p;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row][col];
                if f != ZERO {
                    for j in 0..4 {
                        let mc = m[col][j];
                        let ic = inv[col][j];
                        m[row][j] -= f * mc;
                        inv[row][j] -= f * ic;
                    }
                }
            }
        }
    }
    Some(inv)
}

/// `Wᵀ G W` (plain transpose, no conjugation).
pub fn congruence(g: &Mat4, w: &Mat4) -> Mat4 {
    matmul(&transpose(w), &matmul(g, w))
}
