//! Axis-aligned bounding-volume hierarchy built by median split.

use nalgebra::Vector3;

use super::mesh::Triangle;

const LEAF_SIZE: usize = 4;
// median splits halve the triangle count, so 32 levels hold any mesh
const MAX_DEPTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn union(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    /// Inflates the box so that rounding in the slab test cannot reject a ray
    /// whose triangle hit lies on the boundary.
    fn padded(mut self) -> Self {
        let scale = self.min.abs().max().max(self.max.abs().max()).max(1.0);
        let pad = Vector3::repeat(1e-7 * scale);
        self.min -= pad;
        self.max += pad;
        self
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        std::array::from_fn(|i| {
            Vector3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            )
        })
    }

    /// Entry distance of the ray into the box, if it enters before `limit`.
    /// `inv_dir` is the componentwise reciprocal of the direction, finite
    /// even for zero components (see [`reciprocal`]), so no bound is NaN.
    #[inline]
    fn entry(&self, origin: &Vector3<f64>, inv_dir: &[f64; 3], limit: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = limit;
        for a in 0..3 {
            let lo = (self.min[a] - origin[a]) * inv_dir[a];
            let hi = (self.max[a] - origin[a]) * inv_dir[a];
            let (near, far) = if lo < hi { (lo, hi) } else { (hi, lo) };
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        (t0 <= t1).then_some(t0)
    }
}

/// `1 / d`, with zero mapped to a huge value of the same sign. Slab bounds
/// then overflow to the correct infinity instead of becoming `0 · ∞`.
#[inline]
fn reciprocal(d: f64) -> f64 {
    if d == 0.0 {
        1e300f64.copysign(d)
    } else {
        1.0 / d
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// First triangle slot for leaves, left child index for interior nodes.
    start: u32,
    /// Triangle count for leaves, zero for interior nodes.
    count: u32,
    right: u32,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(triangles: &[Triangle]) -> Self {
        if triangles.is_empty() {
            return Self::default();
        }
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| {
                let mut b = Aabb::empty();
                b.grow(&t.v0);
                b.grow(&(t.v0 + t.e1));
                b.grow(&(t.v0 + t.e2));
                b
            })
            .collect();
        let centers: Vec<Vector3<f64>> = boxes.iter().map(|b| (b.min + b.max) / 2.0).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * triangles.len()),
            order: (0..triangles.len() as u32).collect(),
        };
        bvh.build_node(&boxes, &centers, 0, triangles.len(), 0);
        bvh
    }

    fn build_node(
        &mut self,
        boxes: &[Aabb],
        centers: &[Vector3<f64>],
        lo: usize,
        hi: usize,
        depth: usize,
    ) -> u32 {
        let mut bounds = Aabb::empty();
        let mut spread = Aabb::empty();
        for &i in &self.order[lo..hi] {
            bounds.union(&boxes[i as usize]);
            spread.grow(&centers[i as usize]);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            bounds: bounds.padded(),
            start: lo as u32,
            count: (hi - lo) as u32,
            right: 0,
        });
        let extent = spread.max - spread.min;
        let axis = extent.imax();
        if hi - lo <= LEAF_SIZE || depth >= MAX_DEPTH || extent[axis] <= 0.0 {
            return id;
        }
        let mid = (lo + hi) / 2;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            centers[a as usize][axis].total_cmp(&centers[b as usize][axis])
        });
        let left = self.build_node(boxes, centers, lo, mid, depth + 1);
        let right = self.build_node(boxes, centers, mid, hi, depth + 1);
        let node = &mut self.nodes[id as usize];
        node.start = left;
        node.right = right;
        node.count = 0;
        id
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.bounds)
    }

    /// Nearest hit among `triangles` (the slice the hierarchy was built on).
    pub fn intersect(
        &self,
        triangles: &[Triangle],
        origin: &Vector3<f64>,
        dir: &Vector3<f64>,
    ) -> Option<f64> {
        let root = self.nodes.first()?;
        let inv_dir = [reciprocal(dir.x), reciprocal(dir.y), reciprocal(dir.z)];
        let mut best = f64::INFINITY;
        root.bounds.entry(origin, &inv_dir, best)?;
        // nodes on the stack have passed their box test at the given entry
        let mut stack = [(0u32, 0.0f64); MAX_DEPTH + 2];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let (id, enter) = stack[top];
            if enter > best {
                continue;
            }
            let node = &self.nodes[id as usize];
            if node.count > 0 {
                let s = node.start as usize;
                for &tri in &self.order[s..s + node.count as usize] {
                    if let Some(t) = triangles[tri as usize].intersect(origin, dir) {
                        if t < best {
                            best = t;
                        }
                    }
                }
                continue;
            }
            let (l, r) = (node.start, node.right);
            let hit_l = self.nodes[l as usize].bounds.entry(origin, &inv_dir, best);
            let hit_r = self.nodes[r as usize].bounds.entry(origin, &inv_dir, best);
            // the nearer child goes on top so it is searched first
            match (hit_l, hit_r) {
                (Some(a), Some(b)) => {
                    let (near, far) = if a <= b { ((l, a), (r, b)) } else { ((r, b), (l, a)) };
                    stack[top] = far;
                    stack[top + 1] = near;
                    top += 2;
                }
                (Some(a), None) => {
                    stack[top] = (l, a);
                    top += 1;
                }
                (None, Some(b)) => {
                    stack[top] = (r, b);
                    top += 1;
                }
                (None, None) => {}
            }
        }
        best.is_finite().then_some(best)
    }
}
