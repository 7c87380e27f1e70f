//! Parametric food primitives standing in for perceived food meshes.
//!
//! Every primitive is built closed and outward-wound, then re-centered on
//! its volumetric centroid. Local `+z` is the long axis of elongated foods.
//! Curved profiles use equal-area tessellation: arc vertices sit slightly
//! outside the true radius so each polygonal cross-section has exactly the
//! area of the analytic one.

use super::TriMesh;
use crate::error::{Error, Result};
use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_SEGMENTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FoodShape {
    /// Cylinder along `z`.
    Carrot { radius: f64, length: f64 },
    /// Trapezoidal prism: trapezoid in the `x`/`y` plane (bottom edge at
    /// `-y`), extruded along `z`.
    Cantaloupe {
        bottom_width: f64,
        top_width: f64,
        height: f64,
        length: f64,
    },
    /// Half of a cylindrical tube along `z`, opening toward `-y`, caps closed.
    Celery {
        outer_radius: f64,
        wall_thickness: f64,
        length: f64,
    },
    /// Teardrop surface of revolution about `z`, pointed end toward `+z`.
    Strawberry { radius: f64, length: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoodSpec {
    #[serde(flatten)]
    pub shape: FoodShape,
    #[serde(default = "default_segments")]
    pub segments: usize,
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

impl FoodSpec {
    pub fn new(shape: FoodShape) -> Self {
        Self {
            shape,
            segments: DEFAULT_SEGMENTS,
        }
    }

    pub fn with_segments(mut self, segments: usize) -> Self {
        self.segments = segments;
        self
    }

    /// Default-scale foods.
    pub fn carrot() -> Self {
        Self::new(FoodShape::Carrot {
            radius: 0.008,
            length: 0.05,
        })
    }

    pub fn cantaloupe() -> Self {
        Self::new(FoodShape::Cantaloupe {
            bottom_width: 0.03,
            top_width: 0.018,
            height: 0.02,
            length: 0.025,
        })
    }

    pub fn celery() -> Self {
        Self::new(FoodShape::Celery {
            outer_radius: 0.01,
            wall_thickness: 0.004,
            length: 0.05,
        })
    }

    pub fn strawberry() -> Self {
        Self::new(FoodShape::Strawberry {
            radius: 0.012,
            length: 0.032,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            FoodShape::Carrot { .. } => "carrot",
            FoodShape::Cantaloupe { .. } => "cantaloupe",
            FoodShape::Celery { .. } => "celery",
            FoodShape::Strawberry { .. } => "strawberry",
        }
    }

    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let shape = match self.shape {
            FoodShape::Carrot { radius, length } => FoodShape::Carrot {
                radius: radius * s,
                length: length * s,
            },
            FoodShape::Cantaloupe {
                bottom_width,
                top_width,
                height,
                length,
            } => FoodShape::Cantaloupe {
                bottom_width: bottom_width * s,
                top_width: top_width * s,
                height: height * s,
                length: length * s,
            },
            FoodShape::Celery {
                outer_radius,
                wall_thickness,
                length,
            } => FoodShape::Celery {
                outer_radius: outer_radius * s,
                wall_thickness: wall_thickness * s,
                length: length * s,
            },
            FoodShape::Strawberry { radius, length } => FoodShape::Strawberry {
                radius: radius * s,
                length: length * s,
            },
        };
        Self { shape, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let dims: Vec<(&str, f64)> = match self.shape {
            FoodShape::Carrot { radius, length } => vec![("radius", radius), ("length", length)],
            FoodShape::Cantaloupe {
                bottom_width,
                top_width,
                height,
                length,
            } => vec![
                ("bottom_width", bottom_width),
                ("top_width", top_width),
                ("height", height),
                ("length", length),
            ],
            FoodShape::Celery {
                outer_radius,
                wall_thickness,
                length,
            } => {
                if wall_thickness > outer_radius {
                    return Err(Error::InvalidSpec(format!(
                        "celery wall_thickness {wall_thickness} exceeds outer_radius {outer_radius}"
                    )));
                }
                vec![
                    ("outer_radius", outer_radius),
                    ("wall_thickness", wall_thickness),
                    ("length", length),
                ]
            }
            FoodShape::Strawberry { radius, length } => vec![("radius", radius), ("length", length)],
        };
        for (name, v) in dims {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{} {name} must be positive, got {v}", self.name())));
            }
        }
        if self.segments < 8 {
            return Err(Error::InvalidSpec(format!(
                "tessellation needs at least 8 segments, got {}",
                self.segments
            )));
        }
        Ok(())
    }
}

/// Builds the closed food mesh, centered at its volumetric centroid.
pub fn make_food_mesh(spec: &FoodSpec) -> Result<TriMesh> {
    spec.validate()?;
    let n = spec.segments;
    let mesh = match spec.shape {
        FoodShape::Carrot { radius, length } => {
            let r = radius * equal_area_factor(2.0 * PI, n);
            let profile: Vec<_> = (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    Point2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let caps = (1..n - 1).map(|k| [0, k, k + 1]).collect::<Vec<_>>();
            extrude(&profile, &caps, length)
        }
        FoodShape::Cantaloupe {
            bottom_width,
            top_width,
            height,
            length,
        } => {
            let (b, t, h) = (bottom_width / 2.0, top_width / 2.0, height / 2.0);
            let profile = vec![
                Point2::new(-b, -h),
                Point2::new(b, -h),
                Point2::new(t, h),
                Point2::new(-t, h),
            ];
            extrude(&profile, &[[0, 1, 2], [0, 2, 3]], length)
        }
        FoodShape::Celery {
            outer_radius,
            wall_thickness,
            length,
        } => {
            let f = equal_area_factor(PI, n);
            let ro = outer_radius * f;
            let ri = (outer_radius - wall_thickness).max(0.0) * f;
            let arc = |r: f64, k: usize| {
                let a = PI * k as f64 / n as f64;
                Point2::new(r * a.cos(), r * a.sin())
            };
            let mut profile: Vec<_> = (0..=n).map(|k| arc(ro, k)).collect();
            let mut caps = Vec::new();
            if ri > 1e-12 * outer_radius {
                // inner arc runs back from angle pi to 0; inner k sits at index 2n+1-k
                profile.extend((0..=n).rev().map(|k| arc(ri, k)));
                let inner = |k: usize| 2 * n + 1 - k;
                for k in 0..n {
                    caps.push([k, k + 1, inner(k + 1)]);
                    caps.push([k, inner(k + 1), inner(k)]);
                }
            } else {
                profile.push(Point2::origin());
                let c = n + 1;
                for k in 0..n {
                    caps.push([c, k, k + 1]);
                }
            }
            extrude(&profile, &caps, length)
        }
        FoodShape::Strawberry { radius, length } => teardrop(radius, length, n),
    };
    Ok(mesh.centered())
}

/// Radius scale making an `n`-segment polygonal arc of angle `sweep` enclose
/// the same area as the true circular sector.
fn equal_area_factor(sweep: f64, n: usize) -> f64 {
    let step = sweep / n as f64;
    (step / step.sin()).sqrt()
}

/// Prism over a counter-clockwise profile with the given cap triangulation
/// (triangles counter-clockwise in the profile plane).
fn extrude(profile: &[Point2<f64>], caps: &[[usize; 3]], length: f64) -> TriMesh {
    let n = profile.len();
    let h = length / 2.0;
    let mut vertices = Vec::with_capacity(2 * n);
    vertices.extend(profile.iter().map(|p| Point3::new(p.x, p.y, -h)));
    vertices.extend(profile.iter().map(|p| Point3::new(p.x, p.y, h)));
    let mut faces = Vec::with_capacity(2 * caps.len() + 2 * n);
    for c in caps {
        faces.push([c[0] as u32, c[2] as u32, c[1] as u32]);
        faces.push([(c[0] + n) as u32, (c[1] + n) as u32, (c[2] + n) as u32]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let (bi, bj, ti, tj) = (i as u32, j as u32, (i + n) as u32, (j + n) as u32);
        faces.push([bi, bj, tj]);
        faces.push([bi, tj, ti]);
    }
    TriMesh { vertices, faces }
}

/// Revolution of the teardrop profile `z = cos t`, `rho = sin t * sin(t/2)`,
/// `t` in `[0, pi]`, scaled so the widest ring has `radius` and the axial
/// extent is `length`.
fn teardrop(radius: f64, length: f64, segments: usize) -> TriMesh {
    let rings = segments.max(8);
    // max of sin t sin(t/2) is at cos t = 1/3 (t ~ 1.9106), value 4 / (3 sqrt 3)
    let rho_max = 4.0 / (3.0 * 3f64.sqrt());
    let half = length / 2.0;
    let mut vertices = Vec::with_capacity((rings - 1) * segments + 2);
    vertices.push(Point3::new(0.0, 0.0, half));
    for i in 1..rings {
        let t = PI * i as f64 / rings as f64;
        let rho = radius * (t.sin() * (t / 2.0).sin()) / rho_max;
        let z = half * t.cos();
        for k in 0..segments {
            let a = 2.0 * PI * k as f64 / segments as f64;
            vertices.push(Point3::new(rho * a.cos(), rho * a.sin(), z));
        }
    }
    let bottom = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, -half));

    let ring = |i: usize, k: usize| (1 + (i - 1) * segments + k % segments) as u32;
    let mut faces = Vec::new();
    for k in 0..segments {
        faces.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for i in 1..rings - 1 {
        for k in 0..segments {
            let (a, b) = (ring(i, k), ring(i, k + 1));
            let (c, d) = (ring(i + 1, k), ring(i + 1, k + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for k in 0..segments {
        faces.push([bottom, ring(rings - 1, k + 1), ring(rings - 1, k)]);
    }
    TriMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_specs() -> Vec<FoodSpec> {
        vec![
            FoodSpec::carrot(),
            FoodSpec::cantaloupe(),
            FoodSpec::celery(),
            FoodSpec::strawberry(),
        ]
    }

    #[test]
    fn primitives_are_closed_and_outward() {
        for spec in all_specs() {
            for segs in [8, 32, 64] {
                let m = make_food_mesh(&spec.with_segments(segs)).unwrap();
                m.check_watertight().unwrap();
                assert!(m.signed_volume() > 0.0, "{}", spec.name());
                assert!(m.centroid().coords.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn carrot_volume_matches_cylinder() {
        let spec = FoodSpec::new(FoodShape::Carrot {
            radius: 0.005,
            length: 0.05,
        });
        let v = make_food_mesh(&spec).unwrap().volume().unwrap();
        let exact = PI * 0.005f64.powi(2) * 0.05;
        assert!((v - exact).abs() / exact < 0.02);
        assert!((v - 3.927e-6).abs() / 3.927e-6 < 0.02);
    }

    #[test]
    fn cantaloupe_volume_is_trapezoid_area_times_length() {
        let m = make_food_mesh(&FoodSpec::cantaloupe()).unwrap();
        let exact = 0.5 * (0.03 + 0.018) * 0.02 * 0.025;
        assert_relative_eq!(m.volume().unwrap(), exact, max_relative = 1e-12);
    }

    #[test]
    fn celery_full_wall_is_half_cylinder() {
        let (r, h) = (0.01, 0.05);
        let spec = FoodSpec::new(FoodShape::Celery {
            outer_radius: r,
            wall_thickness: r,
            length: h,
        });
        let m = make_food_mesh(&spec).unwrap();
        m.check_watertight().unwrap();
        let half_cylinder = 0.5 * PI * r * r * h;
        assert!((m.volume().unwrap() - half_cylinder).abs() / half_cylinder < 0.02);
    }

    #[test]
    fn celery_tube_volume() {
        let m = make_food_mesh(&FoodSpec::celery()).unwrap();
        let exact = 0.5 * PI * (0.01f64.powi(2) - 0.006f64.powi(2)) * 0.05;
        assert_relative_eq!(m.volume().unwrap(), exact, max_relative = 1e-9);
    }

    #[test]
    fn invalid_dimensions_rejected() {
        let bad = FoodSpec::new(FoodShape::Carrot {
            radius: -0.01,
            length: 0.05,
        });
        assert!(matches!(make_food_mesh(&bad), Err(Error::InvalidSpec(_))));
        let bad = FoodSpec::carrot().with_segments(4);
        assert!(matches!(make_food_mesh(&bad), Err(Error::InvalidSpec(_))));
        let bad = FoodSpec::new(FoodShape::Celery {
            outer_radius: 0.01,
            wall_thickness: 0.02,
            length: 0.05,
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec: FoodSpec = toml::from_str("kind = \"carrot\"\nradius = 0.01\nlength = 0.1\n").unwrap();
        assert_eq!(spec.segments, DEFAULT_SEGMENTS);
        assert!(matches!(spec.shape, FoodShape::Carrot { .. }));
    }
}
