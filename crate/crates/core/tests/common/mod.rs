//! Reference computations for the integration tests. Nothing here calls into
//! the library's geometry, quadrature or occlusion code.
#![allow(dead_code, clippy::excessive_precision)]

use nalgebra::{Matrix2, UnitQuaternion, Vector3};

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1]; odd indices of
// `KRONROD_X` are the Gauss nodes.
const KRONROD_X: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const KRONROD_W: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const GAUSS_W: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// (Kronrod estimate, |Kronrod − Gauss|) on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = KRONROD_W[7] * f(c);
    let mut gauss = GAUSS_W[3] * f(c);
    for j in 0..7 {
        let pair = f(c - h * KRONROD_X[j]) + f(c + h * KRONROD_X[j]);
        kronrod += KRONROD_W[j] * pair;
        if j % 2 == 1 {
            gauss += GAUSS_W[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= abs.max(rel * value.abs()) || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, rel, abs * 0.5, depth - 1) + adapt(f, m, b, rel, abs * 0.5, depth - 1)
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`, split first at every
/// breakpoint inside the interval so that narrow peaks are never straddled
/// by a single coarse panel.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64], rel: f64) -> f64 {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| adapt(&f, w[0], w[1], rel, 1e-300, 60))
        .sum()
}

/// `2k + 1` points `step` apart centred on `center`, for use as breakpoints
/// around a peak.
pub fn around(center: f64, step: f64, k: i32) -> Vec<f64> {
    (-k..=k).map(|j| center + j as f64 * step).collect()
}

pub fn normal_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let u = (x - mean) / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `∫₀^d TruncExp(b; λ, d) · N(z; b, σ) db` by quadrature.
pub fn occluder_convolution(z: f64, d: f64, lambda: f64, sigma: f64) -> f64 {
    let norm = lambda / (1.0 - (-lambda * d).exp());
    let mut cuts = around(z, sigma, 12);
    cuts.extend(around(d, sigma, 4));
    integrate(
        |b| norm * (-lambda * b).exp() * normal_pdf(z, b, sigma),
        0.0,
        d,
        &cuts,
        1e-13,
    )
}

/// Row-stochastic two-state chain `[[a, 1−a], [b, 1−b]]` (state 0 visible)
/// raised to the real power `s` by explicit diagonalization. Returns
/// `(P(vis | vis), P(vis | occ))`.
pub fn chain_power(a: f64, b: f64, s: f64) -> (f64, f64) {
    let t = Matrix2::new(a, 1.0 - a, b, 1.0 - b);
    let mu = a - b;
    // right eigenvectors: (1, 1) for eigenvalue 1, (1 − a, −b) for μ
    let v = Matrix2::new(1.0, 1.0 - a, 1.0, -b);
    let Some(v_inv) = v.try_inverse() else {
        // a = 1, b = 0: identity chain
        assert_eq!(t, Matrix2::identity());
        return (1.0, 0.0);
    };
    let d = Matrix2::new(1.0, 0.0, 0.0, mu.powf(s));
    let p = v * d * v_inv;
    (p[(0, 0)], p[(1, 0)])
}

/// Pinhole ray through pixel `(col, row)` with unit z component.
pub fn pixel_ray(col: u32, row: u32, fx: f64, fy: f64, cx: f64, cy: f64) -> Vector3<f64> {
    Vector3::new((col as f64 - cx) / fx, (row as f64 - cy) / fy, 1.0)
}

/// Nearest hit of a camera-frame ray from the origin against world-space
/// triangles, with the smallest barycentric margin over every triangle the
/// ray passes near. A small margin means the hit/miss decision is fragile.
pub fn nearest_hit(dir: &Vector3<f64>, triangles: &[[Vector3<f64>; 3]]) -> (Option<f64>, f64) {
    let mut best: Option<f64> = None;
    let mut margin = f64::INFINITY;
    for [p0, p1, p2] in triangles {
        let n = (p1 - p0).cross(&(p2 - p0));
        let denom = n.dot(dir);
        if denom.abs() < 1e-14 {
            continue;
        }
        let t = n.dot(p0) / denom;
        let x = dir * t;
        let area = n.norm_squared();
        let w0 = (p2 - p1).cross(&(x - p1)).dot(&n) / area;
        let w1 = (p0 - p2).cross(&(x - p2)).dot(&n) / area;
        let w2 = 1.0 - w0 - w1;
        let lo = w0.min(w1).min(w2);
        margin = margin.min(lo.abs());
        if lo >= 0.0 && t > 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    }
    (best, margin)
}

/// Applies a rotation and translation to every triangle of an indexed mesh.
pub fn place(vertices: &[Vector3<f64>], triangles: &[[u32; 3]], q: &UnitQuaternion<f64>, t: &Vector3<f64>) -> Vec<[Vector3<f64>; 3]> {
    triangles
        .iter()
        .map(|tri| tri.map(|i| q * vertices[i as usize] + t))
        .collect()
}

/// One pixel's measurement factor given its current occlusion state.
#[derive(Clone, Copy, Debug)]
pub enum PixelTerm {
    /// No usable measurement.
    Silent,
    /// Same density whether occluded or not.
    Constant(f64),
    Branches { visible: f64, occluded: f64 },
}

/// Joint-occlusion likelihood of one frame by brute force: the sum over
/// every assignment of previous and current occlusion states of all pixels.
///
/// `prev[i]` is pixel `i`'s previous visibility posterior and `transition`
/// the chain's `(P(vis | vis), P(vis | occ))` over the elapsed time.
pub fn joint_likelihood(prev: &[f64], transition: (f64, f64), lik: &[PixelTerm]) -> f64 {
    let n = prev.len();
    assert!(n <= 12, "enumeration over 4^{} assignments", n);
    let (from_vis, from_occ) = transition;
    let mut total = 0.0;
    for before in 0u64..(1 << n) {
        for now in 0u64..(1 << n) {
            let mut term = 1.0;
            for i in 0..n {
                let was_visible = before >> i & 1 == 0;
                let is_visible = now >> i & 1 == 0;
                term *= if was_visible { prev[i] } else { 1.0 - prev[i] };
                let p = if was_visible { from_vis } else { from_occ };
                term *= if is_visible { p } else { 1.0 - p };
                term *= match lik[i] {
                    PixelTerm::Silent => 1.0,
                    PixelTerm::Constant(c) => c,
                    PixelTerm::Branches { visible, occluded } => {
                        if is_visible {
                            visible
                        } else {
                            occluded
                        }
                    }
                };
                if term == 0.0 {
                    break;
                }
            }
            total += term;
        }
    }
    total
}

/// Posterior visibility of one pixel from the explicit sum over its previous
/// and current states.
pub fn four_term_posterior(prev: f64, transition: (f64, f64), visible: f64, occluded: f64) -> f64 {
    let (from_vis, from_occ) = transition;
    let states = [(true, prev), (false, 1.0 - prev)];
    let mut numerator = 0.0;
    let mut evidence = 0.0;
    for (was_visible, p_before) in states {
        let stay = if was_visible { from_vis } else { from_occ };
        for is_visible in [true, false] {
            let step = if is_visible { stay } else { 1.0 - stay };
            let lik = if is_visible { visible } else { occluded };
            let term = p_before * step * lik;
            evidence += term;
            if is_visible {
                numerator += term;
            }
        }
    }
    numerator / evidence
}
