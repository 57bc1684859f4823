//! Built-in instances: the 4x3 worked example and seeded random problems.

use rand::Rng;

use crate::energy::{build_problem, DisparityRange, Labeling, ProblemError, StereoProblem};
use crate::imaging::GrayImage;
use crate::rational::Rational;

/// Intensities chosen so that the data cost is 50 exactly at
/// `(1,0,0) (2,0,1) (2,1,0) (3,1,1) (1,2,0) (2,2,1)` and 0 everywhere else.
const SUPP_LEFT: [u8; 12] = [
    100, 100, 100, 100, //
    100, 100, 100, 200, //
    100, 100, 100, 100,
];
const SUPP_RIGHT: [u8; 12] = [
    100, 150, 100, 100, //
    100, 100, 150, 200, //
    100, 150, 100, 100,
];

/// Disparities of the example's optimal labeling, in pixel enumeration order.
pub const SUPPLEMENTARY_DISPARITIES: [u32; 9] = [1, 0, 0, 1, 1, 0, 1, 0, 0];

/// The example's optimal bit assignment over `x_(i,j,d)` in flat index order.
pub const SUPPLEMENTARY_BITS: [u8; 18] = [0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0];

/// Penalty weight used by the worked example (below the sufficient bound).
pub const SUPPLEMENTARY_ALPHA: i64 = 200;

pub fn supplementary_images() -> (GrayImage, GrayImage) {
    (
        GrayImage::new(4, 3, SUPP_LEFT.to_vec()).expect("fixture dims"),
        GrayImage::new(4, 3, SUPP_RIGHT.to_vec()).expect("fixture dims"),
    )
}

/// The 4x3, `D = {0, 1}` worked example.
pub fn supplementary(lambda: Rational) -> StereoProblem {
    supplementary_with(lambda).expect("fixture builds")
}

/// [`supplementary`] for a caller-supplied, possibly invalid, `lambda`.
pub fn supplementary_with(lambda: Rational) -> Result<StereoProblem, ProblemError> {
    let (l, r) = supplementary_images();
    build_problem(l, r, DisparityRange::new(0, 1)?, lambda)
}

pub fn supplementary_labeling(p: &StereoProblem) -> Labeling {
    assert_eq!(p.num_pixels(), SUPPLEMENTARY_DISPARITIES.len());
    Labeling::new(SUPPLEMENTARY_DISPARITIES.to_vec())
}

/// Uniform-noise image pair.
pub fn random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    range: DisparityRange,
    lambda: Rational,
) -> StereoProblem {
    try_random_problem(rng, width, height, range, lambda).expect("caller keeps width > d_max")
}

pub fn try_random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    range: DisparityRange,
    lambda: Rational,
) -> Result<StereoProblem, ProblemError> {
    if width == 0 || height == 0 {
        return Err(ProblemError::EmptyDomain { width, d_max: range.d_max() });
    }
    let mut img = || {
        let px = (0..width * height).map(|_| rng.random::<u8>()).collect();
        GrayImage::new(width, height, px).expect("positive dims")
    };
    let left = img();
    let right = img();
    build_problem(left, right, range, lambda)
}

/// A synthetic rectified pair: a textured right image, and a left image
/// made from it by shifting blocks of constant disparity, plus bounded noise.
pub fn random_scene<R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    range: DisparityRange,
    lambda: Rational,
    noise: u8,
) -> StereoProblem {
    let right_px: Vec<u8> = (0..width * height).map(|_| rng.random::<u8>()).collect();
    let right = GrayImage::new(width, height, right_px).expect("positive dims");
    let block = 4usize;
    let bw = width.div_ceil(block);
    let bh = height.div_ceil(block);
    let truth: Vec<u32> = (0..bw * bh)
        .map(|_| rng.random_range(range.d_min()..=range.d_max()))
        .collect();
    let mut left_px = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = truth[(y / block) * bw + x / block] as usize;
            let base = i32::from(right.get(x.saturating_sub(d), y));
            let jitter = if noise == 0 {
                0
            } else {
                rng.random_range(-i32::from(noise)..=i32::from(noise))
            };
            left_px.push((base + jitter).clamp(0, 255) as u8);
        }
    }
    let left = GrayImage::new(width, height, left_px).expect("positive dims");
    build_problem(left, right, range, lambda).expect("caller keeps width > d_max")
}
