//! Triangle meshes and the ASCII OBJ subset used to load them.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::bvh::{Aabb, Bvh};
use crate::{Error, Result};

/// Möller–Trumbore determinant threshold.
const DET_EPSILON: f64 = 1e-9;

/// Precomputed intersection data for one triangle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Triangle {
    pub v0: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
}

impl Triangle {
    /// Distance along `dir` from `origin` to the hit, if the ray hits the
    /// triangle in front of the origin.
    #[inline]
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let h = dir.cross(&self.e2);
        let det = self.e1.dot(&h);
        if det.abs() < DET_EPSILON {
            return None;
        }
        // barycentric tests on det-scaled coordinates; one division per hit
        let sign = det.signum();
        let adet = det.abs();
        let s = origin - self.v0;
        let u = sign * s.dot(&h);
        if !(0.0..=adet).contains(&u) {
            return None;
        }
        let q = s.cross(&self.e1);
        let v = sign * dir.dot(&q);
        if v < 0.0 || u + v > adet {
            return None;
        }
        let t = self.e2.dot(&q) / det;
        (t > 0.0).then_some(t)
    }
}

/// Immutable triangle mesh in the object frame, with its bounding-volume
/// hierarchy built at construction.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    pub(crate) prepared: Vec<Triangle>,
    pub(crate) bvh: Bvh,
    centroid: Vector3<f64>,
}

impl TriangleMesh {
    /// Validates the mesh and drops zero-area triangles.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Mesh("non-finite vertex coordinate".into()));
        }
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::Mesh(format!(
                "triangle {:?} references a vertex out of range ({} vertices)",
                t, n
            )));
        }
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                (b - a).cross(&(c - a)).norm() > 0.0
            })
            .collect();
        let prepared: Vec<Triangle> = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                Triangle {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                }
            })
            .collect();
        let centroid = if vertices.is_empty() {
            Vector3::zeros()
        } else {
            vertices.iter().sum::<Vector3<f64>>() / n as f64
        };
        let bvh = Bvh::build(&prepared);
        Ok(Self {
            vertices,
            triangles,
            prepared,
            bvh,
            centroid,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Mean of the mesh vertices; rotations in the process models act about it.
    pub fn centroid(&self) -> Vector3<f64> {
        self.centroid
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.bvh.bounds()
    }

    /// Axis-aligned box centered at `center` with edge lengths `size`,
    /// outward-facing triangles.
    pub fn cuboid(size: Vector3<f64>, center: Vector3<f64>) -> Self {
        let h = size / 2.0;
        let vertices: Vec<Vector3<f64>> = (0..8)
            .map(|i| {
                let sx = if i & 1 == 0 { -h.x } else { h.x };
                let sy = if i & 2 == 0 { -h.y } else { h.y };
                let sz = if i & 4 == 0 { -h.z } else { h.z };
                center + Vector3::new(sx, sy, sz)
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        Self::new(vertices, triangles).expect("cuboid is well formed")
    }

    /// Rectangle in the plane `z = 0`, spanning `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let vertices = vec![
            Vector3::new(x0, y0, 0.0),
            Vector3::new(x1, y0, 0.0),
            Vector3::new(x1, y1, 0.0),
            Vector3::new(x0, y1, 0.0),
        ];
        Self::new(vertices, vec![[0, 1, 2], [0, 2, 3]]).expect("rectangle is well formed")
    }

    /// Concatenates meshes into one (overlapping parts are allowed).
    pub fn merge(parts: &[TriangleMesh]) -> Self {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for part in parts {
            let offset = vertices.len() as u32;
            vertices.extend_from_slice(&part.vertices);
            triangles.extend(part.triangles.iter().map(|t| t.map(|i| i + offset)));
        }
        Self::new(vertices, triangles).expect("merged parts were already valid")
    }

    /// Parses `v` and `f` lines of an ASCII OBJ file; faces with more than
    /// three vertices are fan-triangulated. Other statements are ignored.
    pub fn from_obj_str(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let bad = |what: &str| Error::Mesh(format!("line {}: {}", lineno + 1, what));
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let coords: Vec<f64> = tokens
                        .take(3)
                        .map(|t| t.parse::<f64>().map_err(|_| bad("bad vertex coordinate")))
                        .collect::<Result<_>>()?;
                    if coords.len() != 3 {
                        return Err(bad("vertex needs three coordinates"));
                    }
                    vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx: Vec<u32> = tokens
                        .map(|t| {
                            // "i", "i/t", "i/t/n" and "i//n" all start with the position index
                            let head = t.split('/').next().unwrap_or("");
                            let i: i64 = head.parse().map_err(|_| bad("bad face index"))?;
                            let resolved = if i > 0 {
                                i - 1
                            } else if i < 0 {
                                vertices.len() as i64 + i
                            } else {
                                return Err(bad("face index 0"));
                            };
                            u32::try_from(resolved).map_err(|_| bad("face index out of range"))
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(bad("face needs at least three vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_obj_str(&text)
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }

    pub fn save_obj(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_obj_string()).map_err(|e| Error::io(path, e))
    }

    /// Nearest hit along a ray given in the object frame, via the hierarchy.
    #[inline]
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        self.bvh.intersect(&self.prepared, origin, dir)
    }

    /// Nearest hit testing every triangle; reference path for the hierarchy.
    pub fn intersect_brute_force(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        self.prepared
            .iter()
            .filter_map(|t| t.intersect(origin, dir))
            .min_by(|a, b| a.total_cmp(b))
    }
}
