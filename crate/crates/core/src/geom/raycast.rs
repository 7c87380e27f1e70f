use super::{MouthModel, TriMesh};
use nalgebra::{Point3, Vector3};

/// Ray origins on the face plane: an `n × m` cell-centered grid covering a
/// centered `extent × extent` square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayGrid {
    pub n: usize,
    pub m: usize,
    pub extent: f64,
    pub z_max: f64,
}

impl RayGrid {
    fn origin_x(&self, i: usize) -> f64 {
        -self.extent / 2.0 + (i as f64 + 0.5) * self.extent / self.n as f64
    }

    fn origin_y(&self, j: usize) -> f64 {
        -self.extent / 2.0 + (j as f64 + 0.5) * self.extent / self.m as f64
    }

    /// Index range of origins whose coordinate lies in `[lo, hi]`.
    fn span(lo: f64, hi: f64, extent: f64, count: usize) -> std::ops::Range<usize> {
        let cell = extent / count as f64;
        let to_idx = |v: f64| (v + extent / 2.0) / cell - 0.5;
        let a = to_idx(lo).ceil().max(0.0);
        let b = (to_idx(hi).floor() + 1.0).min(count as f64);
        if b <= a {
            return 0..0;
        }
        a as usize..b as usize
    }
}

/// Möller–Trumbore intersection of the ray `o + t d`, returning `t`.
pub fn ray_triangle(
    o: &Point3<f64>,
    d: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Nearest hits of `+z` rays against triangles already expressed in the
/// mouth frame. `nearest` holds one slot per ray, `None` for misses so far.
pub(crate) fn accumulate_hits(grid: &RayGrid, vertices: &[Point3<f64>], faces: &[[u32; 3]], nearest: &mut [Option<f64>]) {
    let d = Vector3::z();
    for f in faces {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        let zmax = a.z.max(b.z).max(c.z);
        let zmin = a.z.min(b.z).min(c.z);
        if zmax < 0.0 || zmin > grid.z_max {
            continue;
        }
        let xs = RayGrid::span(a.x.min(b.x).min(c.x), a.x.max(b.x).max(c.x), grid.extent, grid.n);
        let ys = RayGrid::span(a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y), grid.extent, grid.m);
        for i in xs {
            for j in ys.clone() {
                let o = Point3::new(grid.origin_x(i), grid.origin_y(j), 0.0);
                if let Some(t) = ray_triangle(&o, &d, &a, &b, &c) {
                    if (0.0..=grid.z_max).contains(&t) {
                        let slot = &mut nearest[i * grid.m + j];
                        if slot.is_none_or(|cur| t < cur) {
                            *slot = Some(t);
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn collect_hits(grid: &RayGrid, nearest: &[Option<f64>]) -> Vec<Point3<f64>> {
    let mut hits = Vec::new();
    for i in 0..grid.n {
        for j in 0..grid.m {
            if let Some(t) = nearest[i * grid.m + j] {
                hits.push(Point3::new(grid.origin_x(i), grid.origin_y(j), t));
            }
        }
    }
    hits
}

/// Casts one ray per grid origin along the mouth axis and returns the
/// nearest hit of each (misses omitted), in the mouth frame. Meshes are
/// given in world coordinates.
pub fn raycast_grid(meshes: &[TriMesh], mouth: &MouthModel, grid: &RayGrid) -> Vec<Point3<f64>> {
    let mut nearest = vec![None; grid.n * grid.m];
    let to_mouth = mouth.pose.inverse();
    for mesh in meshes {
        let local: Vec<Point3<f64>> = mesh.vertices.iter().map(|v| to_mouth.transform_point(v)).collect();
        accumulate_hits(grid, &local, &mesh.faces, &mut nearest);
    }
    collect_hits(grid, &nearest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose;
    use approx::assert_relative_eq;

    fn grid() -> RayGrid {
        RayGrid { n: 16, m: 16, extent: 0.4, z_max: 0.5 }
    }

    fn wall(z: f64, half: f64) -> TriMesh {
        let vertices = vec![
            Point3::new(-half, -half, z),
            Point3::new(half, -half, z),
            Point3::new(half, half, z),
            Point3::new(-half, half, z),
        ];
        TriMesh { vertices, faces: vec![[0, 1, 2], [0, 2, 3]] }
    }

    #[test]
    fn empty_scene_has_no_hits() {
        assert!(raycast_grid(&[], &MouthModel::default(), &grid()).is_empty());
    }

    #[test]
    fn wall_is_hit_by_every_ray() {
        let hits = raycast_grid(&[wall(0.3, 1.0)], &MouthModel::default(), &grid());
        assert_eq!(hits.len(), 256);
        for h in hits {
            assert_relative_eq!(h.z, 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn nearest_wall_wins() {
        let hits = raycast_grid(&[wall(0.4, 1.0), wall(0.2, 1.0)], &MouthModel::default(), &grid());
        assert_eq!(hits.len(), 256);
        assert!(hits.iter().all(|h| (h.z - 0.2).abs() < 1e-9));
    }

    #[test]
    fn out_of_range_and_behind_are_missed() {
        let g = grid();
        assert!(raycast_grid(&[wall(0.6, 1.0)], &MouthModel::default(), &g).is_empty());
        assert!(raycast_grid(&[wall(-0.1, 1.0)], &MouthModel::default(), &g).is_empty());
    }

    #[test]
    fn mouth_pose_is_respected() {
        let mouth = MouthModel {
            pose: Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
            ..MouthModel::default()
        };
        let hits = raycast_grid(&[wall(1.25, 1.0)], &mouth, &grid());
        assert_eq!(hits.len(), 256);
        assert_relative_eq!(hits[0].z, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn small_patch_hits_only_covered_rays() {
        // origins sit at odd multiples of 0.0125; a 0.02 square around the
        // axis covers exactly the four central rays
        let hits = raycast_grid(&[wall(0.1, 0.02)], &MouthModel::default(), &grid());
        assert_eq!(hits.len(), 4);
    }
}
