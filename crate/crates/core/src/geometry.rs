//! Two-disk geometry and distance distributions for points of a cloud.
//!
//! A cloud is a disk of radius `D` centred at distance `x_norm` from the user,
//! who sits at the origin. RUs are uniform in the cloud disk. A guard disk of
//! radius `d_g` around the user is where interfering clouds stay silent.

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Cloud radius, guard radius and user-to-centre distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskLayout<T> {
    pub d: T,
    pub d_g: T,
    pub x_norm: T,
}

/// `((y+x)² − D²)(D² − (y−x)²)`, in factored form so that it stays accurate
/// near tangency, clamped at zero against roundoff.
fn lens_kite<T: Scalar>(d: T, x: T, y: T) -> T {
    ((y + x - d) * (y + x + d) * (d - y + x) * (d + y - x)).max(T::zero())
}

/// Area of the intersection of disk(centre at distance `x`, radius `d`) with
/// disk(origin, radius `y`), for `|x − d| <= y <= x + d`, `x > 0`.
///
/// The half-angles are taken with `atan2` rather than `acos`, which keeps the
/// result accurate when the disks are nearly tangent.
pub fn lens_area_raw<T: Scalar>(d: T, x: T, y: T) -> T {
    let root = lens_kite(d, x, y).sqrt();
    let a1 = root.atan2(d * d + x * x - y * y);
    let a2 = root.atan2(y * y + x * x - d * d);
    d * d * a1 + y * y * a2 - T::lit(0.5) * root
}

/// `∂/∂y` of [`lens_area_raw`]: the arc of the circle of radius `y` that lies
/// inside the cloud disk. The derivatives of the two angle terms cancel that
/// of the square-root term, leaving `2y·acos((y² + x² − D²)/(2xy))`.
pub fn lens_area_dy_raw<T: Scalar>(d: T, x: T, y: T) -> T {
    let root = lens_kite(d, x, y).sqrt();
    T::lit(2.0) * y * root.atan2(y * y + x * x - d * d)
}

/// Density of the distance from the origin to a uniform point of
/// disk(centre at distance `x`, radius `d`).
pub fn distance_pdf_raw<T: Scalar>(d: T, x: T, y: T) -> T {
    let zero = T::zero();
    let two = T::lit(2.0);
    let area = T::PI() * d * d;
    if y < zero {
        return zero;
    }
    if x <= zero {
        return if y < d { two * y / (d * d) } else { zero };
    }
    if y < (d - x).abs() {
        return if x < d { two * y / (d * d) } else { zero };
    }
    if y >= d + x || y <= zero {
        return zero;
    }
    lens_area_dy_raw(d, x, y) / area
}

/// Distribution function matching [`distance_pdf_raw`].
pub fn distance_cdf_raw<T: Scalar>(d: T, x: T, y: T) -> T {
    let zero = T::zero();
    let one = T::one();
    if y <= zero {
        return zero;
    }
    if x <= zero {
        return if y < d {
            (y * y / (d * d)).min(one)
        } else {
            one
        };
    }
    if y < (d - x).abs() {
        return if x < d { y * y / (d * d) } else { zero };
    }
    if y >= d + x {
        return one;
    }
    (lens_area_raw(d, x, y) / (T::PI() * d * d))
        .max(zero)
        .min(one)
}

/// Area of the cloud disk lying outside the guard disk around the origin.
pub fn guard_excluded_area_raw<T: Scalar>(d: T, d_g: T, x: T) -> T {
    let full = T::PI() * d * d;
    if d_g <= T::zero() {
        return full;
    }
    let inside = if x <= (d - d_g).abs() {
        let r = d.min(d_g);
        T::PI() * r * r
    } else if x < d + d_g {
        lens_area_raw(d, x, d_g)
    } else {
        T::zero()
    };
    (full - inside).max(T::zero())
}

impl<T: Scalar> DiskLayout<T> {
    pub fn new(d: T, d_g: T, x_norm: T) -> Result<Self> {
        if !(d > T::zero()) || !d.is_finite() {
            return domain(format!("cloud radius must be positive, got {d}"));
        }
        if !(d_g >= T::zero()) || !d_g.is_finite() {
            return domain(format!("guard radius must be nonnegative, got {d_g}"));
        }
        if !(x_norm >= T::zero()) || !x_norm.is_finite() {
            return domain(format!(
                "distance to cloud centre must be nonnegative, got {x_norm}"
            ));
        }
        Ok(Self { d, d_g, x_norm })
    }

    /// Same cloud and guard radii, different user-to-centre distance.
    pub fn at_distance(&self, x_norm: T) -> Result<Self> {
        Self::new(self.d, self.d_g, x_norm)
    }

    pub fn cloud_area(&self) -> T {
        T::PI() * self.d * self.d
    }

    /// Lens area between the cloud disk and disk(origin, `y`).
    pub fn lens_area(&self, y: T) -> Result<T> {
        let x = self.x_norm;
        if x <= T::zero() {
            return domain("lens area is undefined for a cloud centred at the user");
        }
        let eps = T::epsilon() * T::lit(16.0) * (self.d + x);
        if y < (x - self.d).abs() - eps || y > x + self.d + eps {
            return domain(format!(
                "lens radius {y} outside [{}, {}]",
                (x - self.d).abs(),
                x + self.d
            ));
        }
        Ok(lens_area_raw(self.d, x, y).max(T::zero()))
    }

    pub fn distance_pdf(&self, y: T) -> T {
        distance_pdf_raw(self.d, self.x_norm, y)
    }

    pub fn distance_cdf(&self, y: T) -> T {
        distance_cdf_raw(self.d, self.x_norm, y)
    }

    /// Density of the nearest of `n` i.i.d. cloud points.
    pub fn serving_distance_pdf_given_n(&self, r: T, n: usize) -> Result<T> {
        if n == 0 {
            return domain("serving distance needs at least one point");
        }
        let f = self.distance_pdf(r);
        if f == T::zero() {
            return Ok(T::zero());
        }
        let tail = T::one() - self.distance_cdf(r);
        Ok(T::from_usize_lossy(n) * f * tail.powi(n as i32 - 1))
    }

    /// Cloud area outside the guard disk when the centre is at `x_norm`.
    pub fn guard_excluded_area(&self, x_norm: T) -> T {
        guard_excluded_area_raw(self.d, self.d_g, x_norm)
    }

    /// Points where the distance density changes formula.
    pub fn breakpoints(&self) -> Vec<T> {
        let x = self.x_norm;
        let mut pts = vec![T::zero()];
        if x > T::zero() {
            pts.push((self.d - x).abs());
        }
        pts.push(self.d + x);
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_with_breakpoints, QuadSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const D: f64 = 30.0;

    fn layout(x: f64) -> DiskLayout<f64> {
        DiskLayout::new(D, 2.0, x).unwrap()
    }

    #[test]
    fn lens_area_equal_radii() {
        let g = layout(D);
        let want = D * D * (2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0);
        assert_relative_eq!(g.lens_area(D).unwrap(), want, max_relative = 1e-13);
        assert_relative_eq!(want / (D * D), 1.2284, epsilon = 1e-4);
    }

    #[test]
    fn lens_area_limits() {
        let g = layout(D);
        assert_relative_eq!(
            g.lens_area(2.0 * D - 1e-9).unwrap(),
            std::f64::consts::PI * D * D,
            max_relative = 1e-6
        );
        assert!(g.lens_area(1e-9).unwrap() < 1e-12);
    }

    #[test]
    fn lens_area_domain_errors() {
        assert!(layout(0.0).lens_area(1.0).is_err());
        assert!(layout(10.0).lens_area(5.0).is_err());
        assert!(layout(10.0).lens_area(41.0).is_err());
    }

    #[test]
    fn lens_area_matches_rejection_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(x, y) in &[(D, D), (10.0, 25.0), (45.0, 20.0), (15.0, 40.0)] {
            let g = layout(x);
            let exact = g.lens_area(y).unwrap();
            // Sample uniformly in the cloud's disk and count points within y of the origin.
            let n = 1_000_000;
            let mut hits = 0u64;
            for _ in 0..n {
                let r = D * rng.random::<f64>().sqrt();
                let th = std::f64::consts::TAU * rng.random::<f64>();
                let (px, py) = (x + r * th.cos(), r * th.sin());
                if px * px + py * py <= y * y {
                    hits += 1;
                }
            }
            let frac = hits as f64 / n as f64;
            let se = (frac * (1.0 - frac) / n as f64).sqrt() * g.cloud_area();
            let est = frac * g.cloud_area();
            assert!(
                (est - exact).abs() <= 3.0 * se,
                "x={x} y={y}: {est} vs {exact}"
            );
        }
    }

    #[test]
    fn lens_area_nondecreasing() {
        for &x in &[5.0, D, 50.0] {
            let g = layout(x);
            let (lo, hi) = ((x - D).abs(), x + D);
            let mut prev = 0.0;
            for k in 0..=200 {
                let y = lo + (hi - lo) * k as f64 / 200.0;
                let a = g.lens_area(y).unwrap();
                assert!(a >= prev - 1e-9);
                prev = a;
            }
        }
    }

    #[test]
    fn analytic_derivative_matches_difference_quotient() {
        for &(x, y) in &[(10.0, 25.0), (D, 12.0), (50.0, 40.0)] {
            let h = 1e-5;
            let fd = (lens_area_raw(D, x, y + h) - lens_area_raw(D, x, y - h)) / (2.0 * h);
            assert_relative_eq!(lens_area_dy_raw(D, x, y), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn pdf_branches() {
        let g = layout(0.0);
        assert_relative_eq!(g.distance_pdf(12.0), 24.0 / (D * D));
        let g = layout(7.0);
        assert_eq!(g.distance_pdf(7.0 + D + 1.0), 0.0);
        assert_eq!(layout(50.0).distance_pdf(10.0), 0.0);
    }

    #[test]
    fn pdf_normalizes() {
        let spec = QuadSpec::new(1e-11, 1e-13);
        for &x in &[0.0, D / 2.0, D, 2.0 * D] {
            let g = layout(x);
            let r =
                integrate_with_breakpoints(|y| g.distance_pdf(y), &g.breakpoints(), &spec).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "x={x}: {}", r.value);
        }
    }

    #[test]
    fn cdf_values_and_continuity() {
        let g = layout(0.0);
        assert_eq!(g.distance_cdf(D), 1.0);
        assert_relative_eq!(g.distance_cdf(D / 2.0), 0.25);
        let g = layout(D / 2.0);
        let b = D - D / 2.0;
        let jump = (g.distance_cdf(b + 1e-12) - g.distance_cdf(b - 1e-12)).abs();
        assert!(jump < 1e-10, "jump {jump}");
        assert_eq!(g.distance_cdf(D / 2.0 + D), 1.0);
        let mut prev = 0.0;
        for k in 0..=300 {
            let y = 1.5 * D * k as f64 / 300.0;
            let c = g.distance_cdf(y);
            assert!(c >= prev - 1e-14);
            prev = c;
        }
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        let spec = QuadSpec::new(1e-12, 1e-14);
        for &x in &[0.0, 10.0, D, 45.0] {
            let g = layout(x);
            for &y in &[3.0, 19.0, 33.0, 60.0] {
                let mut pts: Vec<f64> = g.breakpoints().into_iter().filter(|&p| p < y).collect();
                pts.push(y);
                let r = integrate_with_breakpoints(|t| g.distance_pdf(t), &pts, &spec).unwrap();
                assert!((r.value - g.distance_cdf(y)).abs() < 1e-9, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn serving_pdf() {
        let g = layout(0.0);
        let r = D / 2.0;
        assert_relative_eq!(
            g.serving_distance_pdf_given_n(r, 3).unwrap(),
            (3.0 / D) * (9.0 / 16.0),
            max_relative = 1e-13
        );
        let g = layout(12.0);
        for &y in &[2.0, 20.0, 35.0] {
            assert_eq!(
                g.serving_distance_pdf_given_n(y, 1).unwrap(),
                g.distance_pdf(y)
            );
            let n = 5;
            let want = n as f64 * g.distance_pdf(y) * (1.0 - g.distance_cdf(y)).powi(n - 1);
            assert_relative_eq!(
                g.serving_distance_pdf_given_n(y, n as usize).unwrap(),
                want,
                max_relative = 1e-12
            );
        }
        assert!(g.serving_distance_pdf_given_n(1.0, 0).is_err());
        let spec = QuadSpec::new(1e-11, 1e-13);
        for n in [1, 4, 20] {
            let r = integrate_with_breakpoints(
                |y| g.serving_distance_pdf_given_n(y, n).unwrap(),
                &g.breakpoints(),
                &spec,
            )
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn guard_excluded_area_branches() {
        let full = std::f64::consts::PI * D * D;
        let no_guard = DiskLayout::new(D, 0.0, 0.0).unwrap();
        for &x in &[0.0, 10.0, 31.0, 100.0] {
            assert_eq!(no_guard.guard_excluded_area(x), full);
        }
        let g = layout(0.0);
        assert_eq!(g.guard_excluded_area(D + 2.0), full);
        assert_eq!(g.guard_excluded_area(50.0), full);
        assert_relative_eq!(
            g.guard_excluded_area(0.0),
            full - std::f64::consts::PI * 4.0
        );
        for b in [D - 2.0, D + 2.0] {
            let jump = (g.guard_excluded_area(b + 1e-11) - g.guard_excluded_area(b - 1e-11)).abs();
            assert!(jump < 1e-10, "jump {jump} at {b}");
        }
    }

    #[test]
    fn single_precision() {
        let g = DiskLayout::<f32>::new(30.0, 2.0, 30.0).unwrap();
        let want = 900.0 * (2.0 * std::f32::consts::PI / 3.0 - 3f32.sqrt() / 2.0);
        assert!((g.lens_area(30.0).unwrap() - want).abs() / want < 1e-5);
        assert!((g.distance_cdf(60.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_layouts() {
        assert!(DiskLayout::new(0.0, 1.0, 1.0).is_err());
        assert!(DiskLayout::new(1.0, -1.0, 1.0).is_err());
        assert!(DiskLayout::new(1.0, 1.0, -1.0).is_err());
    }
}
