use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Proper rotation followed by a translation, applied about a pivot point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    /// `R (p - pivot) + pivot + t`.
    pub fn apply_about(&self, p: [f64; 3], pivot: [f64; 3]) -> [f64; 3] {
        let q = [p[0] - pivot[0], p[1] - pivot[1], p[2] - pivot[2]];
        let r = &self.rotation;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = r[i][0] * q[0] + r[i][1] * q[1] + r[i][2] * q[2] + pivot[i] + self.translation[i];
        }
        out
    }

    /// `Rᵀ v`: pulls a gradient in the transformed frame back to the original frame.
    pub fn rotate_back<T: Scalar>(&self, v: [T; 3]) -> [T; 3] {
        let r = &self.rotation;
        let mut out = [T::zero(); 3];
        for (j, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                *o += T::of(r[i][j]) * v[i];
            }
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.rotation;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Uniformly random rotation (Shoemake's quaternion method) and a translation drawn
/// uniformly from the cube `[-max_translate, max_translate]³`.
pub fn random_transform(seed: u64, max_translate: f64) -> Result<RigidTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_transform_with(&mut rng, max_translate)
}

pub fn random_transform_with<R: Rng + ?Sized>(rng: &mut R, max_translate: f64) -> Result<RigidTransform> {
    if !(max_translate >= 0.0 && max_translate.is_finite()) {
        return Err(Error::Domain(format!(
            "max translation must be non-negative, got {max_translate}"
        )));
    }
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
        b * (tau * u3).cos(),
    );
    let rotation = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ];
    let mut translation = [0.0; 3];
    if max_translate > 0.0 {
        for t in &mut translation {
            *t = rng.random_range(-max_translate..=max_translate);
        }
    }
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_orthonormal() {
        for seed in 0..50 {
            let t = random_transform(seed, 2.0).unwrap();
            assert_eq!(t, random_transform(seed, 2.0).unwrap());
            let r = &t.rotation;
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
            assert!((t.determinant() - 1.0).abs() < 1e-12);
            assert!(t.translation.iter().all(|v| v.abs() <= 2.0));
        }
    }

    #[test]
    fn pure_rotation() {
        let t = random_transform(7, 0.0).unwrap();
        assert_eq!(t.translation, [0.0; 3]);
        let pivot = [1.0, 2.0, 3.0];
        assert_eq!(t.apply_about(pivot, pivot), pivot);
        assert!(random_transform(1, -1.0).is_err());
    }

    #[test]
    fn rotate_back_inverts() {
        let t = random_transform(3, 0.0).unwrap();
        let p = [0.3, -1.2, 2.5];
        let q = t.apply_about(p, [0.0; 3]);
        let back = t.rotate_back(q);
        for k in 0..3 {
            assert!((back[k] - p[k]).abs() < 1e-12);
        }
    }
}
