//! Truncated Gaussian atom density and its radial derivative.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_radius<T: Scalar>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("atom radius must be positive, got {r}")))
    }
}

/// Density contributed by an atom of radius `r` at distance `d`: Gaussian core out to
/// `r`, quadratic tail reaching zero with zero slope at `1.5 r`.
pub fn atom_density<T: Scalar>(d: T, r: T) -> Result<T> {
    check_radius(r)?;
    if d < T::zero() {
        return Err(Error::Domain(format!("distance must be non-negative, got {d}")));
    }
    Ok(density_unchecked(d, r))
}

/// Derivative of [`atom_density`] with respect to `d`.
pub fn atom_density_ddist<T: Scalar>(d: T, r: T) -> Result<T> {
    check_radius(r)?;
    if d < T::zero() {
        return Err(Error::Domain(format!("distance must be non-negative, got {d}")));
    }
    Ok(density_ddist_unchecked(d, r))
}

#[inline]
pub(crate) fn density_unchecked<T: Scalar>(d: T, r: T) -> T {
    if d < r {
        (-T::of(2.0) * d * d / (r * r)).exp()
    } else if d < T::of(1.5) * r {
        let e2 = T::of(std::f64::consts::E * std::f64::consts::E);
        T::of(4.0) / (e2 * r * r) * d * d - T::of(12.0) / (e2 * r) * d + T::of(9.0) / e2
    } else {
        T::zero()
    }
}

#[inline]
pub(crate) fn density_ddist_unchecked<T: Scalar>(d: T, r: T) -> T {
    if d <= r {
        -T::of(4.0) * d / (r * r) * (-T::of(2.0) * d * d / (r * r)).exp()
    } else if d < T::of(1.5) * r {
        let e2 = T::of(std::f64::consts::E * std::f64::consts::E);
        T::of(8.0) / (e2 * r * r) * d - T::of(12.0) / (e2 * r)
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const E2: f64 = std::f64::consts::E * std::f64::consts::E;

    fn gaussian(d: f64, r: f64) -> f64 {
        (-2.0 * d * d / (r * r)).exp()
    }
    fn quadratic(d: f64, r: f64) -> f64 {
        4.0 / (E2 * r * r) * d * d - 12.0 / (E2 * r) * d + 9.0 / E2
    }

    #[test]
    fn center_and_cutoff() {
        assert_eq!(atom_density(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(atom_density(3.0, 2.0).unwrap(), 0.0);
        assert_eq!(atom_density(10.0, 2.0).unwrap(), 0.0);
        assert_eq!(atom_density_ddist(0.0, 1.7).unwrap(), 0.0);
        assert_eq!(atom_density_ddist(2.55, 1.7).unwrap(), 0.0);
    }

    #[test]
    fn branches_meet_at_radius() {
        for r in [0.5, 1.0, 1.7, 2.2] {
            let v = atom_density(r, r).unwrap();
            assert_abs_diff_eq!(v, (-2.0f64).exp(), epsilon = 1e-15);
            assert_abs_diff_eq!(gaussian(r, r), quadratic(r, r), epsilon = 1e-15);
            let g = atom_density_ddist(r, r).unwrap();
            assert_abs_diff_eq!(g, -4.0 / (E2 * r), epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-5;
        for r in [0.8, 1.5, 1.9, 2.1] {
            for k in 1..60 {
                let d = 1.6 * r * k as f64 / 60.0;
                if (d - r).abs() < 10.0 * h || (d - 1.5 * r).abs() < 10.0 * h {
                    continue;
                }
                let fd = (atom_density(d + h, r).unwrap() - atom_density((d - h).max(0.0), r).unwrap())
                    / (d + h - (d - h).max(0.0));
                let an = atom_density_ddist(d, r).unwrap();
                assert!((fd - an).abs() < 1e-6, "d={d} r={r}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(atom_density(1.0, 0.0).is_err());
        assert!(atom_density(1.0, -1.0).is_err());
        assert!(atom_density_ddist(1.0, 0.0).is_err());
        assert!(atom_density(-1.0, 1.0).is_err());
    }

    #[test]
    fn single_precision() {
        let v: f32 = atom_density(1.0f32, 1.0).unwrap();
        assert!((v - (-2.0f32).exp()).abs() < 1e-6);
    }
}
