//! Ray casting of posed meshes into a pinhole camera.
//!
//! Depths are optical-axis depths: for a camera-frame point `(x, y, z)` the
//! pixel it projects to reads `z`, not the Euclidean ray length.

use nalgebra::{Matrix3, Vector3};

use super::{CameraIntrinsics, DepthImage, Pose, TriangleMesh};

/// A posed mesh with the camera origin expressed in its frame. The
/// object-frame ray of pixel `(col, row)` is `row_term(row) + col_term(col)`,
/// so a scan over a window needs one vector addition per pixel.
struct ObjectView<'a> {
    mesh: &'a TriangleMesh,
    to_object: Matrix3<f64>,
    origin: Vector3<f64>,
}

impl<'a> ObjectView<'a> {
    fn new(mesh: &'a TriangleMesh, pose: &Pose) -> Self {
        let inv = pose.inverse();
        Self {
            mesh,
            to_object: inv.rotation.to_rotation_matrix().into_inner(),
            origin: inv.translation,
        }
    }

    #[inline]
    fn col_term(&self, cam: &CameraIntrinsics, col: usize) -> Vector3<f64> {
        self.to_object.column(0) * ((col as f64 - cam.cx) / cam.fx)
    }

    #[inline]
    fn row_term(&self, cam: &CameraIntrinsics, row: usize) -> Vector3<f64> {
        self.to_object.column(1) * ((row as f64 - cam.cy) / cam.fy) + self.to_object.column(2)
    }

    #[inline]
    fn ray(&self, cam: &CameraIntrinsics, pixel: usize) -> Vector3<f64> {
        let w = cam.width as usize;
        self.row_term(cam, pixel / w) + self.col_term(cam, pixel % w)
    }

    #[inline]
    fn cast(&self, cam: &CameraIntrinsics, pixel: usize) -> Option<f64> {
        self.mesh.intersect(&self.origin, &self.ray(cam, pixel))
    }
}

/// Optical-axis depth of the nearest intersection of pixel `pixel`'s viewing
/// ray with `mesh` placed at `pose`, or `None` if the ray misses.
pub fn ray_cast(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
    pixel: usize,
) -> Option<f64> {
    debug_assert!(pixel < cam.pixel_count());
    ObjectView::new(mesh, pose).cast(cam, pixel)
}

/// Same as [`ray_cast`] but tests every triangle, without the hierarchy.
pub fn ray_cast_brute_force(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
    pixel: usize,
) -> Option<f64> {
    let view = ObjectView::new(mesh, pose);
    mesh.intersect_brute_force(&view.origin, &view.ray(cam, pixel))
}

/// Inclusive pixel rectangle `(col0, col1, row0, row1)` that can contain hits
/// of `mesh` at `pose`, or `None` when the mesh is entirely behind the camera.
fn candidate_window(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
) -> Option<(usize, usize, usize, usize)> {
    let bounds = mesh.bounds()?;
    let corners = bounds.corners().map(|c| pose.transform_point(&c));
    if corners.iter().all(|c| c.z <= 0.0) {
        return None;
    }
    let (w, h) = (cam.width as usize, cam.height as usize);
    if corners.iter().any(|c| c.z <= 1e-9) {
        // box straddles the image plane; projection is unbounded
        return Some((0, w - 1, 0, h - 1));
    }
    let (mut u0, mut u1, mut v0, mut v1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for c in &corners {
        let (u, v) = cam.project(c)?;
        u0 = u0.min(u);
        u1 = u1.max(u);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    let clamp = |x: f64, n: usize| x.max(0.0).min((n - 1) as f64) as usize;
    if u1 < -1.0 || v1 < -1.0 || u0 > w as f64 || v0 > h as f64 {
        return None;
    }
    Some((
        clamp((u0 - 1.0).floor(), w),
        clamp((u1 + 1.0).ceil(), w),
        clamp((v0 - 1.0).floor(), h),
        clamp((v1 + 1.0).ceil(), h),
    ))
}

/// How [`for_each_hit`] finds the nearest triangle along each ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scan {
    /// Traverse the hierarchy once per pixel.
    Hierarchy,
    /// Test each triangle against the pixels its projection can cover.
    Triangles,
}

/// Per-triangle scanning wins while there are several window pixels per
/// triangle.
const PIXELS_PER_TRIANGLE: usize = 8;

/// Camera-frame depth below which a vertex is treated as behind the camera
/// and its triangle is tested against the whole window.
const NEAR_PLANE: f64 = 1e-6;

/// Calls `visit(pixel, depth)` for every pixel whose ray hits `mesh` at
/// `pose`, in row-major order. Only pixels inside the projected bounding box
/// are cast. Both strategies return the minimum over the same
/// ray–triangle tests, so the depths are bit-identical to
/// [`ray_cast_brute_force`].
pub fn for_each_hit(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
    visit: impl FnMut(usize, f64),
) {
    for_each_hit_with(mesh, pose, cam, None, visit)
}

fn for_each_hit_with(
    mesh: &TriangleMesh,
    pose: &Pose,
    cam: &CameraIntrinsics,
    strategy: Option<Scan>,
    mut visit: impl FnMut(usize, f64),
) {
    let Some((c0, c1, r0, r1)) = candidate_window(mesh, pose, cam) else {
        return;
    };
    let view = ObjectView::new(mesh, pose);
    let w = cam.width as usize;
    let cols: Vec<Vector3<f64>> = (c0..=c1).map(|c| view.col_term(cam, c)).collect();
    let area = cols.len() * (r1 - r0 + 1);
    let strategy = strategy.unwrap_or(if mesh.prepared.len() * PIXELS_PER_TRIANGLE <= area {
        Scan::Triangles
    } else {
        Scan::Hierarchy
    });
    match strategy {
        Scan::Hierarchy => {
            for row in r0..=r1 {
                let base = view.row_term(cam, row);
                for (col, term) in (c0..=c1).zip(&cols) {
                    if let Some(d) = mesh.intersect(&view.origin, &(base + term)) {
                        visit(row * w + col, d);
                    }
                }
            }
        }
        Scan::Triangles => {
            let rows: Vec<Vector3<f64>> = (r0..=r1).map(|r| view.row_term(cam, r)).collect();
            let ww = cols.len();
            let mut depth = vec![f64::INFINITY; area];
            for tri in &mesh.prepared {
                let corners = [tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2].map(|v| pose.transform_point(&v));
                let projected = (!corners.iter().any(|c| c.z <= NEAR_PLANE))
                    .then(|| corners.map(|c| (cam.fx * c.x / c.z + cam.cx, cam.fy * c.y / c.z + cam.cy)));
                let (ra, rb) = match projected {
                    Some(p) => {
                        let lo = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
                        let hi = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
                        (clamp_index(lo - 1.0, r0, r1, true), clamp_index(hi + 1.0, r0, r1, false))
                    }
                    None => (Some(r0), Some(r1)),
                };
                let (Some(ra), Some(rb)) = (ra, rb) else { continue };
                for row in ra..=rb {
                    let span = match &projected {
                        Some(p) => row_span(p, row as f64).map(|(lo, hi)| {
                            (clamp_index(lo - 1.0, c0, c1, true), clamp_index(hi + 1.0, c0, c1, false))
                        }),
                        None => Some((Some(c0), Some(c1))),
                    };
                    let Some((Some(ca), Some(cb))) = span else { continue };
                    let base = rows[row - r0];
                    let line = &mut depth[(row - r0) * ww..(row - r0 + 1) * ww];
                    for col in ca..=cb {
                        if let Some(t) = tri.intersect(&view.origin, &(base + cols[col - c0])) {
                            let slot = &mut line[col - c0];
                            if t < *slot {
                                *slot = t;
                            }
                        }
                    }
                }
            }
            for (i, &d) in depth.iter().enumerate() {
                if d.is_finite() {
                    visit((r0 + i / ww) * w + c0 + i % ww, d);
                }
            }
        }
    }
}

/// Smallest (`up = true`) or largest index in `lo..=hi` on the inner side of
/// `x`, or `None` if there is none.
fn clamp_index(x: f64, lo: usize, hi: usize, up: bool) -> Option<usize> {
    let v = if up { x.ceil() } else { x.floor() };
    if !v.is_finite() {
        return None;
    }
    let v = v.clamp(lo as f64 - 1.0, hi as f64 + 1.0);
    if up {
        (v <= hi as f64).then(|| (v.max(lo as f64)) as usize)
    } else {
        (v >= lo as f64).then(|| (v.min(hi as f64)) as usize)
    }
}

/// Horizontal extent of the projected triangle `p` within the band
/// `row − 1 ≤ v ≤ row + 1`, which contains the triangle's crossing of the
/// pixel row with a full pixel to spare.
fn row_span(p: &[(f64, f64); 3], row: f64) -> Option<(f64, f64)> {
    let (lo_v, hi_v) = (row - 1.0, row + 1.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |u: f64| {
        lo = lo.min(u);
        hi = hi.max(u);
    };
    for (k, a) in p.iter().enumerate() {
        if (lo_v..=hi_v).contains(&a.1) {
            take(a.0);
        }
        let b = p[(k + 1) % 3];
        for y in [lo_v, hi_v] {
            if (a.1 - y) * (b.1 - y) < 0.0 {
                take(a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// `(pixel, depth)` pairs for every pixel covered by the posed mesh.
pub fn silhouette(mesh: &TriangleMesh, pose: &Pose, cam: &CameraIntrinsics) -> Vec<(u32, f64)> {
    let mut out = Vec::new();
    for_each_hit(mesh, pose, cam, |p, d| out.push((p as u32, d)));
    out
}

/// Noiseless depth of the scene as the per-pixel minimum over objects, in
/// double precision. Misses are `None`.
pub fn render_depth_f64(scene: &[(&TriangleMesh, Pose)], cam: &CameraIntrinsics) -> Vec<Option<f64>> {
    let mut depth: Vec<Option<f64>> = vec![None; cam.pixel_count()];
    for (mesh, pose) in scene {
        for_each_hit(mesh, pose, cam, |p, d| {
            depth[p] = Some(depth[p].map_or(d, |old: f64| old.min(d)));
        });
    }
    depth
}

/// Noiseless depth image of the scene; pixels that hit nothing are NaN.
pub fn render_depth(scene: &[(&TriangleMesh, Pose)], cam: &CameraIntrinsics) -> DepthImage {
    let depths = render_depth_f64(scene, cam)
        .into_iter()
        .map(|d| d.map_or(f32::NAN, |d| d as f32))
        .collect();
    DepthImage {
        width: cam.width,
        height: cam.height,
        depths,
        timestamp: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use nalgebra::UnitQuaternion;

    fn small_cam() -> CameraIntrinsics {
        CameraIntrinsics {
            width: 33,
            height: 25,
            fx: 30.0,
            fy: 30.0,
            cx: 16.0,
            cy: 12.0,
            max_range: 6.0,
        }
    }

    fn unit_square() -> TriangleMesh {
        TriangleMesh::rectangle(-0.5, 0.5, -0.5, 0.5)
    }

    fn center_pixel(cam: &CameraIntrinsics) -> usize {
        cam.cy as usize * cam.width as usize + cam.cx as usize
    }

    #[test]
    fn square_facing_camera() {
        let cam = small_cam();
        let sq = unit_square();
        let at1 = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let at2 = Pose::from_translation(Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(ray_cast(&sq, &at1, &cam, center_pixel(&cam)), Some(1.0));
        assert_eq!(ray_cast(&sq, &at2, &cam, center_pixel(&cam)), Some(2.0));
        // corner pixel sees past the square
        assert_eq!(ray_cast(&sq, &at1, &cam, 0), None);
    }

    #[test]
    fn depth_is_along_optical_axis() {
        let cam = small_cam();
        // a large tilted plane; off-axis pixel depth must equal the hit's z
        let plane = TriangleMesh::rectangle(-5.0, 5.0, -5.0, 5.0);
        let pose = Pose::new(
            Vector3::new(0.1, -0.2, 2.0),
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.1),
        );
        for pixel in [0, 40, 400, cam.pixel_count() - 1] {
            let d = ray_cast(&plane, &pose, &cam, pixel).unwrap();
            let hit = cam.ray_direction(pixel) * d;
            let local = pose.inverse().transform_point(&hit);
            assert!(local.z.abs() < 1e-12, "hit lies on the plane");
            assert!((hit.z - d).abs() < 1e-15);
        }
    }

    #[test]
    fn object_behind_camera_is_invisible() {
        let cam = small_cam();
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, -1.0));
        assert!(silhouette(&unit_square(), &pose, &cam).is_empty());
    }

    #[test]
    fn empty_scene_is_all_invalid() {
        let img = render_depth(&[], &small_cam());
        assert!(img.depths.iter().all(|d| d.is_nan()));
    }

    #[test]
    fn occluder_in_front_wins() {
        let cam = small_cam();
        let sq = unit_square();
        let object = Pose::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let occluder = Pose::from_translation(Vector3::new(0.0, 0.0, 0.5));
        let img = render_depth(&[(&sq, object), (&sq, occluder)], &cam);
        assert_eq!(img.depths[center_pixel(&cam)], 0.5);
        let swapped = render_depth(&[(&sq, occluder), (&sq, object)], &cam);
        assert_eq!(img.depths, swapped.depths);
    }

    #[test]
    fn two_objects_match_per_object_minimum() {
        let cam = small_cam();
        let cube = TriangleMesh::cuboid(Vector3::new(0.3, 0.2, 0.25), Vector3::zeros());
        let sq = unit_square();
        let a = Pose::new(
            Vector3::new(0.05, 0.0, 1.2),
            UnitQuaternion::from_euler_angles(0.4, 0.7, -0.2),
        );
        let b = Pose::new(
            Vector3::new(-0.2, 0.1, 1.4),
            UnitQuaternion::from_euler_angles(0.1, -0.3, 0.2),
        );
        let img = render_depth(&[(&cube, a), (&sq, b)], &cam);
        for p in 0..cam.pixel_count() {
            let expect = match (ray_cast(&cube, &a, &cam, p), ray_cast(&sq, &b, &cam, p)) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
            match expect {
                Some(d) => assert_eq!(img.depths[p], d as f32),
                None => assert!(img.depths[p].is_nan()),
            }
        }
    }

    #[test]
    fn silhouette_window_misses_nothing() {
        let cam = small_cam();
        let cube = TriangleMesh::cuboid(Vector3::new(0.4, 0.3, 0.2), Vector3::new(0.1, 0.0, 0.0));
        let pose = Pose::new(
            Vector3::new(0.3, -0.1, 0.9),
            UnitQuaternion::from_euler_angles(0.2, 0.9, 0.4),
        );
        let fast = silhouette(&cube, &pose, &cam);
        let full: Vec<(u32, f64)> = (0..cam.pixel_count())
            .filter_map(|p| ray_cast(&cube, &pose, &cam, p).map(|d| (p as u32, d)))
            .collect();
        assert_eq!(fast, full);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hierarchy_matches_brute_force(
            rot in prop::array::uniform3(-3.0f64..3.0),
            t in prop::array::uniform3(-0.3f64..0.3),
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // random triangle soup plus a cube, so the hierarchy has depth
            let mut parts = vec![TriangleMesh::cuboid(Vector3::new(0.2, 0.3, 0.1), Vector3::zeros())];
            for _ in 0..40 {
                let v: Vec<Vector3<f64>> = (0..3)
                    .map(|_| Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
                    .collect();
                parts.push(TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap());
            }
            let mesh = TriangleMesh::merge(&parts);
            let cam = small_cam();
            let pose = Pose::new(
                Vector3::new(t[0], t[1], 1.0 + t[2]),
                UnitQuaternion::from_scaled_axis(Vector3::from(rot)),
            );
            let mut want = vec![None; cam.pixel_count()];
            for (p, slot) in want.iter_mut().enumerate() {
                *slot = ray_cast_brute_force(&mesh, &pose, &cam, p);
                prop_assert_eq!(ray_cast(&mesh, &pose, &cam, p), *slot);
            }
            for strategy in [Scan::Hierarchy, Scan::Triangles] {
                let mut got = vec![None; cam.pixel_count()];
                for_each_hit_with(&mesh, &pose, &cam, Some(strategy), |p, d| got[p] = Some(d));
                prop_assert_eq!(&got, &want, "{:?}", strategy);
            }
        }

        #[test]
        fn strategies_agree_near_the_camera(
            rot in prop::array::uniform3(-3.0f64..3.0),
            t in prop::array::uniform3(-0.2f64..0.2),
        ) {
            // the cuboid straddles the image plane for many of these poses
            let mesh = TriangleMesh::cuboid(Vector3::new(0.3, 0.2, 0.4), Vector3::zeros());
            let cam = small_cam();
            let pose = Pose::new(Vector3::from(t), UnitQuaternion::from_scaled_axis(Vector3::from(rot)));
            let want: Vec<Option<f64>> = (0..cam.pixel_count()).map(|p| ray_cast_brute_force(&mesh, &pose, &cam, p)).collect();
            for strategy in [Scan::Hierarchy, Scan::Triangles] {
                let mut got = vec![None; cam.pixel_count()];
                for_each_hit_with(&mesh, &pose, &cam, Some(strategy), |p, d| got[p] = Some(d));
                prop_assert_eq!(&got, &want, "{:?}", strategy);
            }
        }
    }
}
