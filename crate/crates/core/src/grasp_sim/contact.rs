//! Object profiles and phalange-to-object distances.

use alloc::vec::Vec;

use crate::geom2d::{
    closest_point_on_segment, point_segment_distance, segment_segment_closest, segments_intersect,
    Vec2,
};

use super::{FingerId, GraspError, GripperState, Phalange};

/// 2D cross-section of the grasped object.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectProfile {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Counter-clockwise, strictly convex.
    Polygon {
        vertices: Vec<Vec2>,
    },
}

impl ObjectProfile {
    pub fn validate(&self) -> Result<(), GraspError> {
        match self {
            ObjectProfile::Circle { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || *radius <= 0.0 {
                    return Err(GraspError::MalformedObject(
                        "circle radius must be positive",
                    ));
                }
            }
            ObjectProfile::Polygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(GraspError::MalformedObject(
                        "polygon needs at least 3 vertices",
                    ));
                }
                if vertices.iter().any(|v| !v.is_finite()) {
                    return Err(GraspError::MalformedObject(
                        "polygon vertices must be finite",
                    ));
                }
                for i in 0..n {
                    let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    if (b - a).cross(c - b) <= 0.0 {
                        return Err(GraspError::MalformedObject(
                            "polygon must be strictly convex and counter-clockwise",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        match self {
            ObjectProfile::Circle { center, radius } => (
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            ObjectProfile::Polygon { vertices } => vertices.iter().fold(
                (
                    Vec2::new(f64::INFINITY, f64::INFINITY),
                    Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                ),
                |(lo, hi), v| {
                    (
                        Vec2::new(lo.x.min(v.x), lo.y.min(v.y)),
                        Vec2::new(hi.x.max(v.x), hi.y.max(v.y)),
                    )
                },
            ),
        }
    }

    pub fn mirrored(&self) -> ObjectProfile {
        match self {
            ObjectProfile::Circle { center, radius } => ObjectProfile::Circle {
                center: center.mirror_x(),
                radius: *radius,
            },
            ObjectProfile::Polygon { vertices } => ObjectProfile::Polygon {
                // mirroring flips the winding; reverse to stay counter-clockwise
                vertices: vertices.iter().rev().map(|v| v.mirror_x()).collect(),
            },
        }
    }

    fn contains(&self, p: Vec2) -> bool {
        match self {
            ObjectProfile::Circle { center, radius } => p.dist(*center) < *radius,
            ObjectProfile::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| (vertices[(i + 1) % n] - vertices[i]).cross(p - vertices[i]) > 0.0)
            }
        }
    }

    /// Signed distance from segment `[a, b]` to the object boundary
    /// (negative inside) and the closest point on the segment.
    pub fn segment_distance(&self, a: Vec2, b: Vec2) -> (f64, Vec2) {
        match self {
            ObjectProfile::Circle { center, radius } => {
                let p = closest_point_on_segment(*center, a, b);
                (point_segment_distance(*center, a, b) - radius, p)
            }
            ObjectProfile::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = (f64::INFINITY, a);
                let mut crosses = false;
                for i in 0..n {
                    let (c, d) = (vertices[i], vertices[(i + 1) % n]);
                    let (dist, on_seg, _) = segment_segment_closest(a, b, c, d);
                    if dist < best.0 {
                        best = (dist, on_seg);
                    }
                    crosses |= segments_intersect(a, b, c, d);
                }
                let depth = |p: Vec2| -> f64 {
                    (0..n)
                        .map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                };
                let inside: Vec<Vec2> = [a, b].into_iter().filter(|p| self.contains(*p)).collect();
                if let Some(&deep) = inside
                    .iter()
                    .max_by(|p, q| depth(**p).total_cmp(&depth(**q)))
                {
                    (-depth(deep), deep)
                } else if crosses {
                    (0.0, best.1)
                } else {
                    best
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    /// Closest-approach point on the phalange.
    pub position: Vec2,
    pub finger: FingerId,
    pub phalange: Phalange,
    /// `pad − distance`, clamped to `[0, pad]`.
    pub penetration: f64,
}

/// Every phalange segment within `pad` of the object.
pub fn detect_contacts(
    state: &GripperState,
    object: &ObjectProfile,
    pad: f64,
) -> Result<Vec<ContactPoint>, GraspError> {
    object.validate()?;
    Ok(contacts_unchecked(state, object, pad))
}

pub(crate) fn contacts_unchecked(
    state: &GripperState,
    object: &ObjectProfile,
    pad: f64,
) -> Vec<ContactPoint> {
    let mut out = Vec::new();
    for (finger, f) in [FingerId::Left, FingerId::Right]
        .into_iter()
        .zip(&state.fingers)
    {
        for (phalange, (a, b)) in Phalange::ALL.into_iter().zip(f.segments) {
            let (dist, position) = object.segment_distance(a, b);
            if dist <= pad {
                out.push(ContactPoint {
                    position,
                    finger,
                    phalange,
                    penetration: (pad - dist).clamp(0.0, pad),
                });
            }
        }
    }
    out
}
