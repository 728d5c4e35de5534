//! Planar geometry: arc-length parameterized polylines, projection onto a
//! reference, curvature estimation and whole-scene Frenet transforms.

mod polyline;
mod transform;

pub use polyline::{
    build_polyline, circumcircle_curvature, curvature_profile, FrenetPoint, ParamPolyline,
    Projection, ProjectionKind, DEFAULT_RESAMPLE_STEP,
};
pub use transform::{scene_to_cartesian, scene_to_frenet, FrenetScene, TransformFlags};

use std::f64::consts::{PI, TAU};

pub type Vec2 = nalgebra::Vector2<f64>;

/// z-component of the 2D cross product.
#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.perp(&b)
}

/// Unit vector rotated 90 degrees counter-clockwise.
#[inline]
pub fn left_normal(t: Vec2) -> Vec2 {
    Vec2::new(-t.y, t.x)
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

pub fn heading_vector(heading: f64) -> Vec2 {
    Vec2::new(heading.cos(), heading.sin())
}
