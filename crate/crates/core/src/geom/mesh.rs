use super::Pose;
use crate::error::{Error, Result};
use nalgebra::{Point3, Vector3};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Triangle mesh. Closed, consistently wound (outward normals) meshes are
/// required for volume and slicing; other operations accept any mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidMesh(format!(
                "face {f:?} references a vertex out of range (have {n})"
            )));
        }
        if vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex".into()));
        }
        Ok(Self { vertices, faces })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Every directed edge appears exactly once and is matched by its reverse.
    pub fn check_watertight(&self) -> Result<()> {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Topology(format!("degenerate face {f:?}")));
            }
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::Topology(format!(
                    "edge ({a}, {b}) used {count} times in the same direction"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::Topology(format!("boundary edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    pub fn is_watertight(&self) -> bool {
        self.check_watertight().is_ok()
    }

    /// Divergence-theorem volume: signed tetrahedra against the origin.
    /// Positive for outward-wound closed meshes. No topology check.
    pub fn signed_volume(&self) -> f64 {
        // Anchor at the first vertex to keep cancellation small for meshes far from the origin.
        let Some(o) = self.vertices.first() else {
            return 0.0;
        };
        let mut six_v = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            six_v += (a - o).dot(&(b - o).cross(&(c - o)));
        }
        six_v / 6.0
    }

    /// Absolute enclosed volume of a watertight mesh.
    pub fn volume(&self) -> Result<f64> {
        self.check_watertight()?;
        Ok(self.signed_volume().abs())
    }

    /// Volumetric centroid (falls back to the vertex mean for zero volume).
    pub fn centroid(&self) -> Point3<f64> {
        let Some(o) = self.vertices.first().copied() else {
            return Point3::origin();
        };
        let mut acc = Vector3::zeros();
        let mut six_v = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let (a, b, c) = (a - o, b - o, c - o);
            let v = a.dot(&b.cross(&c));
            six_v += v;
            acc += (a + b + c) * v;
        }
        if six_v.abs() < 1e-300 {
            let mean = self.vertices.iter().fold(Vector3::zeros(), |s, p| s + p.coords)
                / self.vertices.len() as f64;
            return Point3::from(mean);
        }
        o + acc / (4.0 * six_v)
    }

    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn translated(&self, t: &Vector3<f64>) -> TriMesh {
        self.transformed(&Pose::from_translation(*t))
    }

    /// Copy translated so its volumetric centroid sits at the origin.
    pub fn centered(&self) -> TriMesh {
        let c = self.centroid();
        self.translated(&-c.coords)
    }

    pub fn aabb(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        let (mut lo, mut hi) = (first, first);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        Some((lo, hi))
    }

    /// Largest distance of any vertex from `center`.
    pub fn radius_about(&self, center: &Point3<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - center).norm())
            .fold(0.0, f64::max)
    }

    /// Undirected edges, each listed once.
    pub fn unique_edges(&self) -> Vec<[u32; 2]> {
        let mut edges: Vec<[u32; 2]> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                [a.min(b), a.max(b)]
            }))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Drops unreferenced vertices and renumbers faces.
    pub fn compacted(&self) -> TriMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let faces = self
            .faces
            .iter()
            .map(|f| {
                f.map(|i| {
                    let slot = &mut remap[i as usize];
                    if *slot == u32::MAX {
                        *slot = vertices.len() as u32;
                        vertices.push(self.vertices[i as usize]);
                    }
                    *slot
                })
            })
            .collect();
        TriMesh { vertices, faces }
    }

    /// ASCII OBJ with `v` and `f` records only (1-based indices).
    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(self.vertices.len() * 40 + self.faces.len() * 20);
        for v in &self.vertices {
            let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    /// Parses `v`/`f` records; other record types are ignored. Faces must be
    /// triangles; `f 1/2/3` style references use the vertex index only.
    pub fn from_obj(src: &str) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in src.lines().enumerate() {
            let line = line.trim();
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let xyz: Vec<f64> = parts
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                    if xyz.len() != 3 {
                        return Err(Error::Parse(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                    }
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                }
                Some("f") => {
                    let idx: Vec<i64> = parts
                        .map(|t| t.split('/').next().unwrap_or("").parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                    if idx.len() != 3 {
                        return Err(Error::InvalidMesh(format!(
                            "line {}: only triangle faces are supported, got {} vertices",
                            lineno + 1,
                            idx.len()
                        )));
                    }
                    let n = vertices.len() as i64;
                    let mut face = [0u32; 3];
                    for (slot, &i) in face.iter_mut().zip(&idx) {
                        // Negative indices are relative to the current vertex count.
                        let abs = if i < 0 { n + i } else { i - 1 };
                        if abs < 0 {
                            return Err(Error::Parse(format!("line {}: bad index {i}", lineno + 1)));
                        }
                        *slot = abs as u32;
                    }
                    faces.push(face);
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, faces)
    }

    /// Axis-aligned box centered at the origin.
    pub fn cuboid(size: Vector3<f64>) -> TriMesh {
        let h = size / 2.0;
        let vertices = (0..8)
            .map(|i| {
                Point3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let faces = vec![
            [0, 2, 3], [0, 3, 1], // -z
            [4, 5, 7], [4, 7, 6], // +z
            [0, 1, 5], [0, 5, 4], // -y
            [2, 6, 7], [2, 7, 3], // +y
            [0, 4, 6], [0, 6, 2], // -x
            [1, 3, 7], [1, 7, 5], // +x
        ];
        TriMesh { vertices, faces }
    }
}
