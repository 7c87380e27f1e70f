//! Plane slicing of closed meshes with capped cuts.

use super::TriMesh;
use crate::error::{Error, Result};
use nalgebra::{Point2, Point3, Unit, Vector3};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub point: Point3<f64>,
    pub normal: Unit<Vector3<f64>>,
}

impl Plane {
    pub fn new(point: Point3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let len = normal.norm();
        if !(len > 1e-300) || !len.is_finite() {
            return Err(Error::InvalidPlane);
        }
        Ok(Self {
            point,
            normal: Unit::new_unchecked(normal / len),
        })
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }
}

/// Result of cutting a mesh: `inside` is the half-space opposite the normal.
#[derive(Clone, Debug)]
pub struct SlicedMesh {
    pub inside: TriMesh,
    pub outside: TriMesh,
}

/// Splits a watertight mesh by a plane and caps both cuts, so each piece is
/// itself watertight. Vertices within a tiny tolerance of the plane shift the
/// cut by a few ulps of the mesh scale rather than creating degenerate
/// on-plane vertices.
pub fn slice_mesh_by_plane(mesh: &TriMesh, plane: &Plane) -> Result<SlicedMesh> {
    mesh.check_watertight()?;
    let n = plane.normal.into_inner();

    let scale = mesh
        .aabb()
        .map(|(lo, hi)| (hi - lo).norm())
        .unwrap_or(0.0)
        .max(plane.point.coords.amax())
        .max(1e-9);
    let tol = scale * 1e-12;
    let raw: Vec<f64> = mesh.vertices.iter().map(|v| plane.signed_distance(v)).collect();
    let shift = nudge(&raw, tol);
    let d: Vec<f64> = raw.iter().map(|x| x - shift).collect();

    if d.iter().all(|&x| x < 0.0) {
        return Ok(SlicedMesh {
            inside: mesh.compacted(),
            outside: TriMesh::empty(),
        });
    }
    if d.iter().all(|&x| x > 0.0) {
        return Ok(SlicedMesh {
            inside: TriMesh::empty(),
            outside: mesh.compacted(),
        });
    }

    let mut inside = Builder::new(mesh.vertices.len());
    let mut outside = Builder::new(mesh.vertices.len());
    // crossing edge -> (index in inside, index in outside, cut point id)
    let mut crossings: HashMap<(u32, u32), (u32, u32, usize)> = HashMap::new();
    let mut cut_points: Vec<Point3<f64>> = Vec::new();
    // directed cap edges of the inside cap (normal +n), in cut point ids
    let mut cap_edges: Vec<(usize, usize)> = Vec::new();

    let mut crossing = |a: u32, b: u32, inside: &mut Builder, outside: &mut Builder| {
        let key = (a.min(b), a.max(b));
        *crossings.entry(key).or_insert_with(|| {
            let (i, j) = key;
            let (pi, pj) = (mesh.vertices[i as usize], mesh.vertices[j as usize]);
            let t = d[i as usize] / (d[i as usize] - d[j as usize]);
            let p = pi + (pj - pi) * t;
            let id = cut_points.len();
            cut_points.push(p);
            (inside.push_new(p), outside.push_new(p), id)
        })
    };

    for face in &mesh.faces {
        let neg = face.iter().filter(|&&v| d[v as usize] < 0.0).count();
        match neg {
            3 => {
                let f = face.map(|v| inside.map(v, &mesh.vertices));
                inside.faces.push(f);
            }
            0 => {
                let f = face.map(|v| outside.map(v, &mesh.vertices));
                outside.faces.push(f);
            }
            _ => {
                // rotate so the lone vertex (the one on the minority side) comes first
                let lone_neg = neg == 1;
                let lone = (0..3)
                    .find(|&k| (d[face[k] as usize] < 0.0) == lone_neg)
                    .expect("mixed face has a lone vertex");
                let v0 = face[lone];
                let v1 = face[(lone + 1) % 3];
                let v2 = face[(lone + 2) % 3];
                let (i01, o01, c01) = crossing(v0, v1, &mut inside, &mut outside);
                let (i02, o02, c02) = crossing(v0, v2, &mut inside, &mut outside);
                if lone_neg {
                    let a = inside.map(v0, &mesh.vertices);
                    inside.faces.push([a, i01, i02]);
                    let (b, c) = (outside.map(v1, &mesh.vertices), outside.map(v2, &mesh.vertices));
                    outside.faces.push([o01, b, c]);
                    outside.faces.push([o01, c, o02]);
                    cap_edges.push((c02, c01));
                } else {
                    let a = outside.map(v0, &mesh.vertices);
                    outside.faces.push([a, o01, o02]);
                    let (b, c) = (inside.map(v1, &mesh.vertices), inside.map(v2, &mesh.vertices));
                    inside.faces.push([i01, b, c]);
                    inside.faces.push([i01, c, i02]);
                    cap_edges.push((c01, c02));
                }
            }
        }
    }

    let loops = chain_loops(&cap_edges)?;
    let (u, v) = plane_basis(&n);
    let origin = plane.point;
    let pts2: Vec<Point2<f64>> = cut_points
        .iter()
        .map(|p| {
            let r = p - origin;
            Point2::new(r.dot(&u), r.dot(&v))
        })
        .collect();
    let cap = triangulate_loops(&loops, &pts2);

    // cut point id -> builder index; ids were assigned in creation order
    let mut in_idx = vec![0u32; cut_points.len()];
    let mut out_idx = vec![0u32; cut_points.len()];
    for &(i, o, id) in crossings.values() {
        in_idx[id] = i;
        out_idx[id] = o;
    }
    for t in cap {
        inside.faces.push([in_idx[t[0]], in_idx[t[1]], in_idx[t[2]]]);
        outside.faces.push([out_idx[t[0]], out_idx[t[2]], out_idx[t[1]]]);
    }

    Ok(SlicedMesh {
        inside: inside.finish(),
        outside: outside.finish(),
    })
}

/// Smallest plane offset keeping every vertex at least `tol` off the plane.
fn nudge(d: &[f64], tol: f64) -> f64 {
    if d.iter().all(|x| x.abs() >= tol) {
        return 0.0;
    }
    let mut step = 2.0 * tol;
    loop {
        for shift in [step, -step] {
            if d.iter().all(|x| (x - shift).abs() >= tol) {
                return shift;
            }
        }
        step *= 1.5;
    }
}

struct Builder {
    remap: Vec<u32>,
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            remap: vec![u32::MAX; n],
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    fn map(&mut self, v: u32, src: &[Point3<f64>]) -> u32 {
        let slot = &mut self.remap[v as usize];
        if *slot == u32::MAX {
            *slot = self.vertices.len() as u32;
            self.vertices.push(src[v as usize]);
        }
        *slot
    }

    fn push_new(&mut self, p: Point3<f64>) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    fn finish(self) -> TriMesh {
        TriMesh {
            vertices: self.vertices,
            faces: self.faces,
        }
    }
}

fn chain_loops(edges: &[(usize, usize)]) -> Result<Vec<Vec<usize>>> {
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
    for &(a, b) in edges {
        if next.insert(a, b).is_some() {
            return Err(Error::Topology("cut curve is not manifold".into()));
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = Vec::new();
    for s in starts {
        if !next.contains_key(&s) {
            continue;
        }
        let mut lp = vec![s];
        let mut cur = next.remove(&s).unwrap();
        while cur != s {
            lp.push(cur);
            cur = next
                .remove(&cur)
                .ok_or_else(|| Error::Topology("cut curve does not close".into()))?;
        }
        loops.push(lp);
    }
    Ok(loops)
}

fn plane_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = helper.cross(n).normalize();
    let v = n.cross(&u);
    (u, v)
}

fn signed_area(lp: &[usize], pts: &[Point2<f64>]) -> f64 {
    let mut a = 0.0;
    for i in 0..lp.len() {
        let p = pts[lp[i]];
        let q = pts[lp[(i + 1) % lp.len()]];
        a += p.x * q.y - q.x * p.y;
    }
    a / 2.0
}

fn point_in_polygon(p: &Point2<f64>, lp: &[usize], pts: &[Point2<f64>]) -> bool {
    let mut inside = false;
    let n = lp.len();
    for i in 0..n {
        let a = pts[lp[i]];
        let b = pts[lp[(i + 1) % n]];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Counter-clockwise triangulation of cut loops: counter-clockwise loops are
/// outer boundaries, clockwise loops are holes of the smallest enclosing outer.
pub(crate) fn triangulate_loops(loops: &[Vec<usize>], pts: &[Point2<f64>]) -> Vec<[usize; 3]> {
    let areas: Vec<f64> = loops.iter().map(|l| signed_area(l, pts)).collect();
    let outers: Vec<usize> = (0..loops.len()).filter(|&i| areas[i] > 0.0).collect();
    let mut holes_of: Vec<Vec<usize>> = vec![Vec::new(); loops.len()];
    let mut tris = Vec::new();
    for h in (0..loops.len()).filter(|&i| areas[i] <= 0.0) {
        let probe = pts[loops[h][0]];
        let owner = outers
            .iter()
            .copied()
            .filter(|&o| point_in_polygon(&probe, &loops[o], pts))
            .min_by(|&a, &b| areas[a].total_cmp(&areas[b]));
        match owner {
            Some(o) => holes_of[o].push(h),
            // orphan clockwise loop: a fan keeps the cap closed and volume exact
            None => tris.extend(fan(&loops[h])),
        }
    }
    for &o in &outers {
        let mut poly = loops[o].clone();
        let mut holes: Vec<&Vec<usize>> = holes_of[o].iter().map(|&h| &loops[h]).collect();
        holes.sort_by(|a, b| max_x(b, pts).1.total_cmp(&max_x(a, pts).1));
        for hole in holes {
            poly = bridge_hole(&poly, hole, pts);
        }
        tris.extend(ear_clip(&poly, pts));
    }
    tris
}

fn fan(lp: &[usize]) -> Vec<[usize; 3]> {
    (1..lp.len().saturating_sub(1))
        .map(|k| [lp[0], lp[k], lp[k + 1]])
        .collect()
}

fn max_x(lp: &[usize], pts: &[Point2<f64>]) -> (usize, f64) {
    lp.iter()
        .enumerate()
        .map(|(i, &v)| (i, pts[v].x))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn cross2(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Splices a clockwise hole into a counter-clockwise polygon through a
/// mutually visible vertex pair (rightmost hole vertex to an outer vertex).
fn bridge_hole(poly: &[usize], hole: &[usize], pts: &[Point2<f64>]) -> Vec<usize> {
    let (hi, _) = max_x(hole, pts);
    let m = pts[hole[hi]];
    // nearest edge hit by the ray from m toward +x
    let mut best: Option<(f64, usize)> = None;
    let n = poly.len();
    for i in 0..n {
        let a = pts[poly[i]];
        let b = pts[poly[(i + 1) % n]];
        if (a.y > m.y) == (b.y > m.y) {
            continue;
        }
        let x = a.x + (m.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if x >= m.x && best.is_none_or(|(bx, _)| x < bx) {
            best = Some((x, i));
        }
    }
    let connect = match best {
        Some((x, i)) => {
            let j = (i + 1) % n;
            let cand = if pts[poly[i]].x > pts[poly[j]].x { i } else { j };
            let hit = Point2::new(x, m.y);
            let p = pts[poly[cand]];
            // reflex vertices inside (m, hit, p) would block visibility
            let mut chosen = cand;
            let mut best_angle = f64::INFINITY;
            for k in 0..n {
                let q = pts[poly[k]];
                let prev = pts[poly[(k + n - 1) % n]];
                let next = pts[poly[(k + 1) % n]];
                if k == cand || cross2(&prev, &q, &next) > 0.0 {
                    continue;
                }
                if in_triangle(&q, &m, &hit, &p) || in_triangle(&q, &m, &p, &hit) {
                    let angle = (q.y - m.y).atan2(q.x - m.x).abs();
                    if angle < best_angle {
                        best_angle = angle;
                        chosen = k;
                    }
                }
            }
            chosen
        }
        None => {
            // degenerate: connect to the closest outer vertex
            (0..n)
                .min_by(|&a, &b| {
                    (pts[poly[a]] - m).norm().total_cmp(&(pts[poly[b]] - m).norm())
                })
                .unwrap()
        }
    };
    let mut out = Vec::with_capacity(poly.len() + hole.len() + 2);
    out.extend_from_slice(&poly[..=connect]);
    for k in 0..=hole.len() {
        out.push(hole[(hi + k) % hole.len()]);
    }
    out.extend_from_slice(&poly[connect..]);
    out
}

fn in_triangle(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> bool {
    let d1 = cross2(a, b, p);
    let d2 = cross2(b, c, p);
    let d3 = cross2(c, a, p);
    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
}

/// Ear clipping of a counter-clockwise (possibly bridged) polygon. When no
/// strict ear exists (numerical corner cases) the most convex vertex is
/// clipped anyway; the result stays a closed, consistently oriented cap.
fn ear_clip(poly: &[usize], pts: &[Point2<f64>]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = poly.to_vec();
    let mut tris = Vec::with_capacity(idx.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let mut ear = None;
        let mut fallback = (0usize, f64::NEG_INFINITY);
        for i in 0..n {
            let (ia, ib, ic) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let turn = cross2(&a, &b, &c);
            if turn > fallback.1 {
                fallback = (i, turn);
            }
            if turn <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = pts[j];
                if p == a || p == b || p == c {
                    return false;
                }
                in_triangle(&p, &a, &b, &c)
            });
            if !blocked {
                ear = Some(i);
                break;
            }
        }
        let i = ear.unwrap_or(fallback.0);
        let n = idx.len();
        tris.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    if idx.len() == 3 {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    tris
}
