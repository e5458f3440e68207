//! Planar geometry primitives.
//!
//! Lengths are millimetres, angles radians. Everything here is a pure
//! function of its arguments.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, AddAssign, Mul, Neg, Sub};
#[allow(unused_imports)] // inherent methods take over when std is linked
use num_traits::Float;

use thiserror::Error;

/// Absolute tolerance for tangency and coincidence tests (mm).
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("degenerate configuration: concentric circles")]
    Degenerate,
    #[error("no intersection")]
    NoIntersection,
    #[error("degenerate point set")]
    DegeneratePointSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` from +x.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| Vec2::new(self.x / n, self.y / n))
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Reflection across the y axis.
    #[inline]
    pub fn mirror_x(self) -> Vec2 {
        Vec2::new(-self.x, self.y)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Rigid planar pose. The orientation is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub position: Vec2,
    orientation: f64,
}

impl Pose2 {
    pub fn new(position: Vec2, orientation: f64) -> Self {
        Self {
            position,
            orientation: normalize_angle(orientation),
        }
    }

    pub const IDENTITY: Pose2 = Pose2 {
        position: Vec2::ZERO,
        orientation: 0.0,
    };

    #[inline]
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Maps a point expressed in this frame into the parent frame.
    pub fn transform_point(&self, p: Vec2) -> Vec2 {
        self.position + p.rotated(self.orientation)
    }

    /// Maps a direction expressed in this frame into the parent frame.
    pub fn transform_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(self.orientation)
    }

    /// Composition `self ∘ other`: `other` is expressed in this frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2::new(
            self.transform_point(other.position),
            self.orientation + other.orientation,
        )
    }
}

/// Result of a successful circle–circle intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intersection {
    /// Tangent circles.
    One(Vec2),
    /// Ordered so that `(c2 − c1) × (p − c1)` is positive for the first point.
    Two(Vec2, Vec2),
}

impl Intersection {
    pub fn first(&self) -> Vec2 {
        match *self {
            Intersection::One(p) | Intersection::Two(p, _) => p,
        }
    }

    pub fn second(&self) -> Vec2 {
        match *self {
            Intersection::One(p) | Intersection::Two(_, p) => p,
        }
    }
}

/// Intersects the circle `(c1, r1)` with the circle `(c2, r2)`.
///
/// Tangency is detected with the absolute tolerance [`GEOM_TOL`].
pub fn circle_intersect(c1: Vec2, r1: f64, c2: Vec2, r2: f64) -> Result<Intersection, GeomError> {
    let delta = c2 - c1;
    let d = delta.norm();
    if d < GEOM_TOL {
        return Err(GeomError::Degenerate);
    }
    let outer = r1 + r2;
    let inner = (r1 - r2).abs();
    if d > outer + GEOM_TOL || d < inner - GEOM_TOL {
        return Err(GeomError::NoIntersection);
    }
    let u = delta * (1.0 / d);
    // distance from c1 to the radical line
    let a = 0.5 * (d + (r1 - r2) * (r1 + r2) / d);
    let base = c1 + u * a;
    if (d - outer).abs() <= GEOM_TOL || (d - inner).abs() <= GEOM_TOL {
        return Ok(Intersection::One(base));
    }
    let h = (r1 * r1 - a * a).max(0.0).sqrt();
    let off = u.perp() * h;
    Ok(Intersection::Two(base + off, base - off))
}

/// Total-least-squares line through an ordered point list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    /// Centroid of the fitted points; lies on the line.
    pub point: Vec2,
    /// Unit direction, oriented from the start of the list towards its end.
    pub direction: Vec2,
    pub max_dev: f64,
    pub rms_dev: f64,
}

impl LineFit {
    /// Signed perpendicular distance of `p` from the line.
    pub fn offset(&self, p: Vec2) -> f64 {
        self.direction.cross(p - self.point)
    }
}

/// Fits a line minimising perpendicular residuals.
pub fn fit_line(points: &[Vec2]) -> Result<LineFit, GeomError> {
    let first = *points.first().ok_or(GeomError::DegeneratePointSet)?;
    // farthest point from the first one fixes the orientation
    let (far, far_d) = points.iter().fold((first, 0.0_f64), |(bp, bd), &p| {
        let d = p.dist(first);
        if d > bd {
            (p, d)
        } else {
            (bp, bd)
        }
    });
    if points.len() < 2 || far_d == 0.0 {
        return Err(GeomError::DegeneratePointSet);
    }

    let n = points.len() as f64;
    let mut centroid = Vec2::ZERO;
    for &p in points {
        centroid += p;
    }
    centroid = centroid * (1.0 / n);

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut direction = Vec2::from_angle(angle);
    let last = *points.last().unwrap();
    let hint = if last != first {
        last - first
    } else {
        far - first
    };
    if direction.dot(hint) < 0.0 {
        direction = -direction;
    }

    let mut fit = LineFit {
        point: centroid,
        direction,
        max_dev: 0.0,
        rms_dev: 0.0,
    };
    let mut sq = 0.0;
    for &p in points {
        let r = fit.offset(p).abs();
        fit.max_dev = fit.max_dev.max(r);
        sq += r * r;
    }
    fit.rms_dev = (sq / n).sqrt().min(fit.max_dev);
    Ok(fit)
}

/// Orders segment endpoints so that results do not depend on argument order.
#[inline]
fn canonical(a: Vec2, b: Vec2) -> (Vec2, Vec2) {
    if (b.x, b.y) < (a.x, a.y) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Closest point to `p` on the closed segment `[a, b]`.
pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let (a, b) = canonical(a, b);
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    if t == 1.0 {
        b
    } else {
        a + ab * t
    }
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.dist(closest_point_on_segment(p, a, b))
}

/// Whether the closed segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| point_segment_distance(r, p, q) == 0.0;
    (d1 == 0.0 && on(a, b, c))
        || (d2 == 0.0 && on(a, b, d))
        || (d3 == 0.0 && on(c, d, a))
        || (d4 == 0.0 && on(c, d, b))
}

/// Closest pair between segments `[a, b]` and `[c, d]`: returns
/// `(distance, point on [a, b], point on [c, d])`.
pub fn segment_segment_closest(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> (f64, Vec2, Vec2) {
    if segments_intersect(a, b, c, d) {
        // intersection point (or any shared point for collinear overlap)
        let r = b - a;
        let s = d - c;
        let denom = r.cross(s);
        let p = if denom != 0.0 {
            a + r * ((c - a).cross(s) / denom)
        } else {
            closest_point_on_segment(c, a, b)
        };
        return (0.0, p, p);
    }
    let candidates = [
        (closest_point_on_segment(c, a, b), c),
        (closest_point_on_segment(d, a, b), d),
        (a, closest_point_on_segment(a, c, d)),
        (b, closest_point_on_segment(b, c, d)),
    ];
    let mut best = (f64::INFINITY, a, c);
    for (p, q) in candidates {
        let dist = p.dist(q);
        if dist < best.0 {
            best = (dist, p, q);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        a.dist(b) < tol
    }

    #[test]
    fn three_four_five_intersection() {
        let hit = circle_intersect(Vec2::new(0.0, 0.0), 5.0, Vec2::new(8.0, 0.0), 5.0).unwrap();
        match hit {
            Intersection::Two(p, q) => {
                assert!(close(p, Vec2::new(4.0, 3.0), 1e-12));
                assert!(close(q, Vec2::new(4.0, -3.0), 1e-12));
            }
            other => panic!("expected two points, got {other:?}"),
        }
    }

    #[test]
    fn tangent_circles_give_one_point() {
        let hit = circle_intersect(Vec2::ZERO, 1.0, Vec2::new(2.0, 0.0), 1.0).unwrap();
        assert_eq!(hit, Intersection::One(Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn disjoint_and_concentric() {
        assert_eq!(
            circle_intersect(Vec2::ZERO, 1.0, Vec2::new(5.0, 0.0), 1.0),
            Err(GeomError::NoIntersection)
        );
        assert_eq!(
            circle_intersect(Vec2::ZERO, 1.0, Vec2::ZERO, 2.0),
            Err(GeomError::Degenerate)
        );
        // one circle strictly inside the other
        assert_eq!(
            circle_intersect(Vec2::ZERO, 5.0, Vec2::new(1.0, 0.0), 1.0),
            Err(GeomError::NoIntersection)
        );
    }

    #[test]
    fn collinear_fits() {
        let f = fit_line(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
        ])
        .unwrap();
        assert!(close(f.direction, Vec2::new(1.0, 0.0), 1e-12));
        assert_eq!(f.max_dev, 0.0);

        let f = fit_line(&[
            Vec2::new(0.0, -1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!(close(f.direction, Vec2::new(0.0, 1.0), 1e-12));
        assert!(f.max_dev < 1e-15);
    }

    #[test]
    fn triangle_fit_matches_grid_search() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(2.0, 0.0),
        ];
        let fit = fit_line(&pts).unwrap();

        // oracle: minimise the sum of squared perpendicular residuals over the
        // line angle (line through the centroid), 1e-4 rad grid
        let c = Vec2::new(1.0, 1.0 / 3.0);
        let mut best = (f64::INFINITY, 0.0);
        let steps = (PI / 1e-4) as usize;
        for i in 0..=steps {
            let dir = Vec2::from_angle(i as f64 * 1e-4);
            let ss: f64 = pts.iter().map(|&p| dir.cross(p - c).powi(2)).sum();
            if ss < best.0 {
                let md = pts
                    .iter()
                    .map(|&p| dir.cross(p - c).abs())
                    .fold(0.0, f64::max);
                best = (ss, md);
            }
        }
        assert!(
            (fit.max_dev - best.1).abs() < 1e-6,
            "{} vs {}",
            fit.max_dev,
            best.1
        );
        assert!((fit.max_dev - 2.0 / 3.0).abs() < 1e-12);
        assert!(fit.rms_dev <= fit.max_dev);
    }

    #[test]
    fn degenerate_point_sets() {
        let p = Vec2::new(3.0, 4.0);
        assert_eq!(fit_line(&[p, p, p]), Err(GeomError::DegeneratePointSet));
        assert_eq!(fit_line(&[p]), Err(GeomError::DegeneratePointSet));
        assert_eq!(fit_line(&[]), Err(GeomError::DegeneratePointSet));
    }

    #[test]
    fn segment_distances() {
        let d = point_segment_distance(Vec2::new(5.0, 15.0), Vec2::ZERO, Vec2::new(0.0, 30.0));
        assert_eq!(d, 5.0);
        let d = point_segment_distance(Vec2::ZERO, Vec2::new(3.0, 4.0), Vec2::new(6.0, 8.0));
        assert_eq!(d, 5.0);
        let d = point_segment_distance(Vec2::new(1.0, 1.0), Vec2::ZERO, Vec2::new(2.0, 0.0));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn segment_pairs() {
        let (d, _, _) = segment_segment_closest(
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(0.0, 1.0),
        );
        assert_eq!(d, 0.0);
        let (d, p, q) = segment_segment_closest(
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 10.0),
            Vec2::new(3.0, 5.0),
            Vec2::new(8.0, 5.0),
        );
        assert_eq!(d, 3.0);
        assert_eq!(p, Vec2::new(0.0, 5.0));
        assert_eq!(q, Vec2::new(3.0, 5.0));
    }

    #[test]
    fn pose_normalization() {
        let p = Pose2::new(Vec2::ZERO, 3.0 * PI);
        assert!((p.orientation() - PI).abs() < 1e-12);
        let p = Pose2::new(Vec2::ZERO, -PI);
        assert!((p.orientation() - PI).abs() < 1e-12);
        let q = Pose2::new(Vec2::new(1.0, 0.0), PI / 2.0);
        assert!(close(
            q.transform_point(Vec2::new(1.0, 0.0)),
            Vec2::new(1.0, 1.0),
            1e-15
        ));
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1e3..1e3f64
    }

    proptest! {
        #[test]
        fn intersections_satisfy_both_circles(
            cx in coord(), cy in coord(),
            r1 in 0.1..1e4f64, r2 in 0.1..1e4f64,
            ang in 0.0..TAU, frac in 0.0..1.0f64,
        ) {
            let inner = (r1 - r2).abs();
            let outer = r1 + r2;
            let d = inner + (outer - inner) * frac;
            prop_assume!(d > 1e-6);
            let c1 = Vec2::new(cx, cy);
            let c2 = c1 + Vec2::from_angle(ang) * d;
            if let Ok(hit) = circle_intersect(c1, r1, c2, r2) {
                for p in [hit.first(), hit.second()] {
                    prop_assert!((p.dist(c1) - r1).abs() < 1e-9);
                    prop_assert!((p.dist(c2) - r2).abs() < 1e-9);
                }
                if let Intersection::Two(p, _) = hit {
                    prop_assert!((c2 - c1).cross(p - c1) > 0.0);
                }
            }
        }

        #[test]
        fn fit_line_is_rigid_equivariant(
            params in proptest::collection::vec((-100.0..100.0f64, -1.0..1.0f64), 3..40),
            line_angle in -PI..PI, angle in -PI..PI, tx in coord(), ty in coord(),
        ) {
            let u = Vec2::from_angle(line_angle);
            let pts: alloc::vec::Vec<Vec2> =
                params.iter().map(|&(t, n)| u * t + u.perp() * n).collect();
            prop_assume!(fit_line(&pts).is_ok());
            let pose = Pose2::new(Vec2::new(tx, ty), angle);
            let moved: alloc::vec::Vec<Vec2> = pts.iter().map(|&p| pose.transform_point(p)).collect();
            let a = fit_line(&pts).unwrap();
            let b = fit_line(&moved).unwrap();
            prop_assert!((a.max_dev - b.max_dev).abs() < 1e-9);
            prop_assert!(pose.transform_point(a.point).dist(b.point) < 1e-9);
            prop_assert!((b.direction.norm() - 1.0).abs() < 1e-12);
            let spread = params.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
                - params.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            if spread > 20.0 {
                prop_assert!(pose.transform_vector(a.direction).dist(b.direction) < 1e-9);
            }
        }

        #[test]
        fn segment_distance_symmetric(
            px in coord(), py in coord(), ax in coord(), ay in coord(), bx in coord(), by in coord(),
        ) {
            let (p, a, b) = (Vec2::new(px, py), Vec2::new(ax, ay), Vec2::new(bx, by));
            prop_assert_eq!(point_segment_distance(p, a, b), point_segment_distance(p, b, a));
        }
    }
}
