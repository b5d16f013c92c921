use nalgebra::{Matrix4, Quaternion, SymmetricEigen, UnitQuaternion, Vector3, Vector4};

use crate::geometry::Pose;
use crate::{Error, Result};

use super::{Estimator, Particle, ParticleSet};

/// Point estimate of a weighted particle set. `weights` must be normalized
/// and match `particles` in length.
///
/// The mean rotation is the principal eigenvector of `Σ w q qᵀ`, which is
/// insensitive to the sign of each quaternion. The result takes the sign of
/// the highest-weight particle.
pub fn estimate_weighted(particles: &[Particle], weights: &[f64], estimator: Estimator) -> Pose {
    debug_assert_eq!(particles.len(), weights.len());
    let best = weights
        .iter()
        .enumerate()
        .fold(0, |b, (i, &w)| if w > weights[b] { i } else { b });
    if estimator == Estimator::MaxWeight {
        return particles[best].pose;
    }
    let mut translation = Vector3::zeros();
    let mut acc = Matrix4::zeros();
    for (p, &w) in particles.iter().zip(weights) {
        translation += p.pose.translation * w;
        let q = p.pose.rotation.coords;
        acc += q * q.transpose() * w;
    }
    let eig = SymmetricEigen::new(acc);
    let mut q: Vector4<f64> = eig.eigenvectors.column(eig.eigenvalues.imax()).into();
    if q.dot(&particles[best].pose.rotation.coords) < 0.0 {
        q = -q;
    }
    Pose::new(translation, UnitQuaternion::from_quaternion(Quaternion::from(q)))
}

/// Point estimate of a set using its stored log weights.
pub fn estimate(set: &ParticleSet, estimator: Estimator) -> Result<Pose> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty particle set".into()));
    }
    Ok(estimate_weighted(&set.particles, &set.weights()?, estimator))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_angle, translation_distance};
    use crate::occlusion::OcclusionBelief;
    use crate::process::gaussian3;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn particle(pose: Pose, log_weight: f64) -> Particle {
        Particle {
            pose,
            occlusion: OcclusionBelief::uniform(0, 0.5),
            log_weight,
        }
    }

    fn set(poses: &[Pose], logs: &[f64]) -> ParticleSet {
        ParticleSet {
            particles: poses.iter().zip(logs).map(|(p, &l)| particle(*p, l)).collect(),
            frame: 0,
            timestamp: 0.0,
        }
    }

    fn pose(t: [f64; 3], euler: [f64; 3]) -> Pose {
        Pose::new(
            Vector3::from(t),
            UnitQuaternion::from_euler_angles(euler[0], euler[1], euler[2]),
        )
    }

    #[test]
    fn identical_particles() {
        let p = pose([0.1, 0.2, 0.9], [0.3, -0.2, 1.0]);
        let s = set(&[p; 5], &[0.0, -1.0, -2.0, 3.0, 0.5]);
        let e = estimate(&s, Estimator::Mean).unwrap();
        assert!(translation_distance(&e, &p) < 1e-12);
        assert!(geodesic_angle(&e, &p) < 1e-7);
    }

    #[test]
    fn opposite_quaternion_signs() {
        let p = pose([0.0, 0.0, 1.0], [0.5, 0.1, -0.4]);
        let mut flipped = p;
        flipped.rotation = UnitQuaternion::new_unchecked(-p.rotation.into_inner());
        let e = estimate(&set(&[p, flipped], &[0.0, 0.0]), Estimator::Mean).unwrap();
        assert!(geodesic_angle(&e, &p) < 1e-7);
    }

    #[test]
    fn max_weight_mode() {
        let a = pose([0.0, 0.0, 1.0], [0.0; 3]);
        let b = pose([0.1, 0.0, 1.0], [0.2, 0.0, 0.0]);
        let e = estimate(&set(&[a, b], &[0.0, 0.1]), Estimator::MaxWeight).unwrap();
        assert_eq!(e, b);
    }

    #[test]
    fn cluster_mean_within_standard_errors() {
        let center = pose([0.05, -0.02, 0.8], [0.4, 0.2, -0.3]);
        let (st, sr) = (0.01, 0.05);
        let n = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let poses: Vec<Pose> = (0..n)
            .map(|_| {
                let d = Pose::new(gaussian3(&mut rng, st), UnitQuaternion::from_scaled_axis(gaussian3(&mut rng, sr)));
                center.compose(&d)
            })
            .collect();
        let e = estimate(&set(&poses, &vec![0.0; n]), Estimator::Mean).unwrap();
        let se_t = st / (n as f64).sqrt();
        let se_r = sr / (n as f64).sqrt();
        let rel = center.inverse().compose(&e);
        for k in 0..3 {
            assert!(rel.translation[k].abs() < 3.0 * se_t, "axis {} {}", k, rel.translation[k]);
        }
        let rv = rel.rotation.scaled_axis();
        for k in 0..3 {
            assert!(rv[k].abs() < 3.0 * se_r, "axis {} {}", k, rv[k]);
        }
    }

    proptest! {
        #[test]
        fn equivariant_under_rigid_transform(
            seed in any::<u64>(),
            g in (prop::array::uniform3(-1.0f64..1.0), prop::array::uniform3(-3.0f64..3.0)),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = pose([0.0, 0.0, 1.0], [0.3, 0.1, 0.2]);
            let poses: Vec<Pose> = (0..20)
                .map(|_| base.compose(&Pose::new(gaussian3(&mut rng, 0.02), UnitQuaternion::from_scaled_axis(gaussian3(&mut rng, 0.2)))))
                .collect();
            let logs: Vec<f64> = (0..20).map(|i| -(i as f64) * 0.1).collect();
            let gp = pose(g.0, g.1);
            let moved: Vec<Pose> = poses.iter().map(|p| gp.compose(p)).collect();
            let e = estimate(&set(&poses, &logs), Estimator::Mean).unwrap();
            let em = estimate(&set(&moved, &logs), Estimator::Mean).unwrap();
            let want = gp.compose(&e);
            prop_assert!(translation_distance(&em, &want) < 1e-9);
            prop_assert!(geodesic_angle(&em, &want) < 1e-7);
        }
    }
}
