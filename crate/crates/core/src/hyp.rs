//! Poincaré-disk model primitives.
//!
//! Everything here is exact hyperbolic trigonometry: distances, disk
//! automorphisms, geodesic directions, and triangle relations. The face
//! charts and patch layouts used by the bundle calculus are built from these,
//! so the only approximation anywhere downstream is the finite stencil, not
//! the geometry.

use num_complex::Complex64;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Hyperbolic distance between two points of the unit disk.
pub fn dist(a: Complex64, b: Complex64) -> f64 {
    let num = (a - b).norm();
    let den = (Complex64::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * (num / den).atanh()
}

/// Disk automorphism sending `a` to the origin: w -> (w - a)/(1 - conj(a) w).
pub fn to_origin(a: Complex64, w: Complex64) -> Complex64 {
    (w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w)
}

/// Inverse of [`to_origin`]: w -> (w + a)/(1 + conj(a) w).
pub fn from_origin(a: Complex64, w: Complex64) -> Complex64 {
    (w + a) / (Complex64::new(1.0, 0.0) + a.conj() * w)
}

/// Initial direction (as an angle) of the geodesic from `a` towards `b`.
///
/// The disk model is conformal, so this Euclidean angle at `a` is also the
/// metric angle.
pub fn direction(a: Complex64, b: Complex64) -> f64 {
    to_origin(a, b).arg()
}

/// Point reached from `a` by following the geodesic with initial angle
/// `theta` for hyperbolic length `len`.
pub fn exp_map(a: Complex64, theta: f64, len: f64) -> Complex64 {
    let r = (len / 2.0).tanh();
    from_origin(a, Complex64::from_polar(r, theta))
}

/// Geodesic midpoint of `a` and `b`.
pub fn midpoint(a: Complex64, b: Complex64) -> Complex64 {
    let d = dist(a, b);
    exp_map(a, direction(a, b), d / 2.0)
}

/// Interior angle opposite to nothing: the angle at the corner between sides
/// of lengths `adj1`, `adj2`, with `opp` the side facing the corner.
/// Hyperbolic law of cosines.
pub fn corner_angle(opp: f64, adj1: f64, adj2: f64) -> f64 {
    let c = (adj1.cosh() * adj2.cosh() - opp.cosh()) / (adj1.sinh() * adj2.sinh());
    c.clamp(-1.0, 1.0).acos()
}

/// Area of the hyperbolic triangle with side lengths `a`, `b`, `c`
/// (angle defect).
pub fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    let alpha = corner_angle(a, b, c);
    let beta = corner_angle(b, c, a);
    let gamma = corner_angle(c, a, b);
    std::f64::consts::PI - alpha - beta - gamma
}

/// True if `a`, `b`, `c` satisfy the strict triangle inequality.
pub fn triangle_inequality(a: f64, b: f64, c: f64) -> bool {
    a + b > c && b + c > a && c + a > b
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(t: f64) -> f64 {
    let mut t = t % TWO_PI;
    if t <= -std::f64::consts::PI {
        t += TWO_PI;
    } else if t > std::f64::consts::PI {
        t -= TWO_PI;
    }
    t
}

/// Conformal factor of the hyperbolic disk metric, lambda = 2/(1-|w|^2).
pub fn lambda(w: Complex64) -> f64 {
    2.0 / (1.0 - w.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_is_symmetric_and_additive_along_geodesics() {
        let a = Complex64::new(0.3, -0.1);
        let b = Complex64::new(-0.4, 0.5);
        assert_relative_eq!(dist(a, b), dist(b, a), epsilon = 1e-14);
        let m = midpoint(a, b);
        assert_relative_eq!(dist(a, m) + dist(m, b), dist(a, b), epsilon = 1e-12);
        assert_relative_eq!(dist(a, m), dist(m, b), epsilon = 1e-12);
    }

    #[test]
    fn exp_map_round_trip() {
        let a = Complex64::new(0.2, 0.6);
        let b = Complex64::new(-0.3, -0.2);
        let c = exp_map(a, direction(a, b), dist(a, b));
        assert!((b - c).norm() < 1e-13);
    }

    #[test]
    fn law_of_cosines_matches_layout() {
        // Lay out a triangle explicitly and compare angles.
        let a = Complex64::new(0.0, 0.0);
        let b = Complex64::new(0.5, 0.0);
        let c = Complex64::new(0.1, 0.45);
        let (lab, lbc, lca) = (dist(a, b), dist(b, c), dist(c, a));
        let alpha = corner_angle(lbc, lab, lca); // angle at a
        let layout = (direction(a, b) - direction(a, c)).abs();
        assert_relative_eq!(alpha, layout.min(TWO_PI - layout), epsilon = 1e-12);
        // Gauss-Bonnet for one triangle: area = pi - angle sum, positive.
        assert!(triangle_area(lbc, lca, lab) > 0.0);
    }

    #[test]
    fn mobius_isometry_preserves_distance() {
        let a = Complex64::new(0.35, 0.15);
        let p = Complex64::new(-0.2, 0.4);
        let q = Complex64::new(0.6, -0.3);
        let d0 = dist(p, q);
        let d1 = dist(to_origin(a, p), to_origin(a, q));
        assert_relative_eq!(d0, d1, epsilon = 1e-13);
    }

    #[test]
    fn wrap_angle_range() {
        for i in -20..20 {
            let t = 0.7 * i as f64;
            let w = wrap_angle(t);
            assert!(w > -std::f64::consts::PI - 1e-15 && w <= std::f64::consts::PI + 1e-15);
            assert_relative_eq!((t - w) % TWO_PI, 0.0, epsilon = 1e-12);
        }
    }
}
