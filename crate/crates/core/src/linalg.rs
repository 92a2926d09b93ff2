//! Fixed-size helpers on top of `nalgebra`.

use nalgebra::{Matrix2, Matrix4};

pub type Mat4 = Matrix4<f64>;
pub type Mat2 = Matrix2<f64>;

/// Relative determinant (against the Hadamard bound) below which the
/// cofactor inverse is abandoned for a pivoted LU solve.
const COFACTOR_DET_FLOOR: f64 = 1e-10;

/// Inverse of a 4×4 matrix by cofactor expansion, falling back to an LU
/// factorization with partial pivoting when the determinant is small
/// relative to the row norms.
pub fn invert4(m: &Mat4) -> Option<Mat4> {
    let a = |i: usize, j: usize| m[(i, j)];

    // 2×2 minors of the top two rows and bottom two rows.
    let s0 = a(0, 0) * a(1, 1) - a(1, 0) * a(0, 1);
    let s1 = a(0, 0) * a(1, 2) - a(1, 0) * a(0, 2);
    let s2 = a(0, 0) * a(1, 3) - a(1, 0) * a(0, 3);
    let s3 = a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2);
    let s4 = a(0, 1) * a(1, 3) - a(1, 1) * a(0, 3);
    let s5 = a(0, 2) * a(1, 3) - a(1, 2) * a(0, 3);

    let c5 = a(2, 2) * a(3, 3) - a(3, 2) * a(2, 3);
    let c4 = a(2, 1) * a(3, 3) - a(3, 1) * a(2, 3);
    let c3 = a(2, 1) * a(3, 2) - a(3, 1) * a(2, 2);
    let c2 = a(2, 0) * a(3, 3) - a(3, 0) * a(2, 3);
    let c1 = a(2, 0) * a(3, 2) - a(3, 0) * a(2, 2);
    let c0 = a(2, 0) * a(3, 1) - a(3, 0) * a(2, 1);

    let det = s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;

    let hadamard: f64 = m.row_iter().map(|r| r.norm()).product();
    if !det.is_finite() || hadamard == 0.0 || det.abs() < COFACTOR_DET_FLOOR * hadamard {
        return m.lu().try_inverse();
    }

    let inv_det = 1.0 / det;
    let mut out = Mat4::zeros();
    out[(0, 0)] = (a(1, 1) * c5 - a(1, 2) * c4 + a(1, 3) * c3) * inv_det;
    out[(0, 1)] = (-a(0, 1) * c5 + a(0, 2) * c4 - a(0, 3) * c3) * inv_det;
    out[(0, 2)] = (a(3, 1) * s5 - a(3, 2) * s4 + a(3, 3) * s3) * inv_det;
    out[(0, 3)] = (-a(2, 1) * s5 + a(2, 2) * s4 - a(2, 3) * s3) * inv_det;

    out[(1, 0)] = (-a(1, 0) * c5 + a(1, 2) * c2 - a(1, 3) * c1) * inv_det;
    out[(1, 1)] = (a(0, 0) * c5 - a(0, 2) * c2 + a(0, 3) * c1) * inv_det;
    out[(1, 2)] = (-a(3, 0) * s5 + a(3, 2) * s2 - a(3, 3) * s1) * inv_det;
    out[(1, 3)] = (a(2, 0) * s5 - a(2, 2) * s2 + a(2, 3) * s1) * inv_det;

    out[(2, 0)] = (a(1, 0) * c4 - a(1, 1) * c2 + a(1, 3) * c0) * inv_det;
    out[(2, 1)] = (-a(0, 0) * c4 + a(0, 1) * c2 - a(0, 3) * c0) * inv_det;
    out[(2, 2)] = (a(3, 0) * s4 - a(3, 1) * s2 + a(3, 3) * s0) * inv_det;
    out[(2, 3)] = (-a(2, 0) * s4 + a(2, 1) * s2 - a(2, 3) * s0) * inv_det;

    out[(3, 0)] = (-a(1, 0) * c3 + a(1, 1) * c1 - a(1, 2) * c0) * inv_det;
    out[(3, 1)] = (a(0, 0) * c3 - a(0, 1) * c1 + a(0, 2) * c0) * inv_det;
    out[(3, 2)] = (-a(3, 0) * s3 + a(3, 1) * s1 - a(3, 2) * s0) * inv_det;
    out[(3, 3)] = (a(2, 0) * s3 - a(2, 1) * s1 + a(2, 2) * s0) * inv_det;

    Some(out)
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat4) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_inverse_matches_identity() {
        let m = Mat4::new(
            2.0, -1.0, 0.5, 3.0, //
            0.1, 4.0, -2.0, 1.0, //
            1.5, 0.0, 1.0, -0.7, //
            -0.3, 2.2, 0.9, 1.1,
        );
        let inv = invert4(&m).unwrap();
        assert!((m * inv - Mat4::identity()).amax() < 1e-14);
    }

    #[test]
    fn near_singular_uses_pivoted_fallback() {
        let mut m = Mat4::identity();
        m[(3, 3)] = 1e-14;
        m[(0, 3)] = 1.0;
        let inv = invert4(&m).unwrap();
        assert!((m * inv - Mat4::identity()).amax() < 1e-12);
    }

    #[test]
    fn singular_is_none() {
        let m = Mat4::from_element(1.0);
        assert!(invert4(&m).is_none());
    }
}
