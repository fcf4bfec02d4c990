//! Fixed-size dense linear algebra for 2×2 and 4×4 real matrices.
//!
//! Vectorization is column-stacking, `vec(M) = (m₁₁, m₂₁, m₁₂, m₂₂)`, and
//! [`kron2`] is the standard Kronecker product, so that
//! `vec(A X Bᵀ) = (B ⊗ A) vec(X)`.

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];
pub type Vec4 = [f64; 4];

/// Condition numbers above this are logged when inverting.
pub const ILL_CONDITIONED: f64 = 1e12;

pub fn vec2(m: &Mat2) -> Vec4 {
    [m[0][0], m[1][0], m[0][1], m[1][1]]
}

pub fn unvec2(v: &Vec4) -> Mat2 {
    [[v[0], v[2]], [v[1], v[3]]]
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose2(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn add4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for (row, brow) in out.iter_mut().zip(b) {
        for (x, y) in row.iter_mut().zip(brow) {
            *x += y;
        }
    }
    out
}

pub fn sub4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for (row, brow) in out.iter_mut().zip(b) {
        for (x, y) in row.iter_mut().zip(brow) {
            *x -= y;
        }
    }
    out
}

pub fn scale4(a: &Mat4, s: f64) -> Mat4 {
    a.map(|row| row.map(|x| x * s))
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat4_vec(a: &Mat4, v: &Vec4) -> Vec4 {
    a.map(|row| dot4(&row, v))
}

pub fn dot4(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm4(v: &Vec4) -> f64 {
    dot4(v, v).sqrt()
}

pub fn frobenius4(a: &Mat4) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs4(a: &Mat4) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn identity4() -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}

/// Maximum absolute column sum.
pub fn norm1_4(a: &Mat4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Result of a 4×4 inversion.
#[derive(Debug, Clone, Copy)]
pub struct Inverse4 {
    pub inverse: Mat4,
    /// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`.
    pub condition: f64,
}

/// Gauss-Jordan elimination with partial pivoting.
///
/// Returns `None` when a pivot is exactly zero or the inverse is not finite.
pub fn invert4(a: &Mat4) -> Option<Inverse4> {
    let mut work = *a;
    let mut inv = identity4();
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs()))
            .unwrap_or(col);
        if work[pivot][col] == 0.0 {
            return None;
        }
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = work[col][col];
        for j in 0..4 {
            work[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..4 {
            if row == col {
                continue;
            }
            let f = work[row][col];
            if f != 0.0 {
                for j in 0..4 {
                    work[row][j] -= f * work[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    if inv.iter().flatten().any(|x| !x.is_finite()) {
        return None;
    }
    let condition = norm1_4(a) * norm1_4(&inv);
    if condition > ILL_CONDITIONED {
        log::debug!("4x4 inversion is ill-conditioned (cond1 = {condition:e})");
    }
    Some(Inverse4 {
        inverse: inv,
        condition,
    })
}

/// Determinant by LU elimination with partial pivoting.
pub fn det4(a: &Mat4) -> f64 {
    let mut work = *a;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs()))
            .unwrap_or(col);
        if work[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            work.swap(col, pivot);
            det = -det;
        }
        let p = work[col][col];
        det *= p;
        for row in col + 1..4 {
            let f = work[row][col] / p;
            for j in col..4 {
                work[row][j] -= f * work[col][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat2() -> impl Strategy<Value = Mat2> {
        prop::array::uniform2(prop::array::uniform2(-3.0..3.0f64))
    }

    #[test]
    fn vec_is_column_stacking() {
        assert_eq!(vec2(&[[1.0, 2.0], [3.0, 4.0]]), [1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvec2(&[1.0, 3.0, 2.0, 4.0]), [[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn kron_of_identities() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(kron2(&id, &id), identity4());
    }

    #[test]
    fn inverse_of_permutation() {
        let mut p = [[0.0; 4]; 4];
        p[0][3] = 1.0;
        p[1][2] = 1.0;
        p[2][0] = 1.0;
        p[3][1] = 2.0;
        let inv = invert4(&p).unwrap().inverse;
        let prod = mat4_mul(&p, &inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        assert!((det4(&p) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let mut a = identity4();
        a[2] = [0.0; 4];
        assert!(invert4(&a).is_none());
        assert_eq!(det4(&a), 0.0);
    }

    proptest! {
        #[test]
        fn kron_matches_vec_triple_product(a in mat2(), x in mat2(), b in mat2()) {
            let direct = vec2(&mat2_mul(&mat2_mul(&a, &x), &transpose2(&b)));
            let via_kron = mat4_vec(&kron2(&b, &a), &vec2(&x));
            for (d, k) in direct.iter().zip(&via_kron) {
                prop_assert!((d - k).abs() < 1e-12);
            }
        }

        #[test]
        fn vec_is_linear(a in mat2(), b in mat2()) {
            let mut sum = a;
            for i in 0..2 { for j in 0..2 { sum[i][j] += b[i][j]; } }
            let lhs = vec2(&sum);
            let (va, vb) = (vec2(&a), vec2(&b));
            for k in 0..4 {
                prop_assert!((lhs[k] - va[k] - vb[k]).abs() < 1e-14);
            }
        }

        #[test]
        fn det_of_kron_factorises(a in mat2(), b in mat2()) {
            // det(A⊗B) = det(A)² det(B)² for 2×2 factors
            let expected = det2(&a).powi(2) * det2(&b).powi(2);
            let got = det4(&kron2(&a, &b));
            prop_assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
    }
}
