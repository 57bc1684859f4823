//! The stereo labeling problem and its global energy
//!
//! ```text
//! F(w) = sum_{p in P} theta_p(w_p) + lambda * sum_{{p,q} in N} delta(w_p, w_q)
//! ```
//!
//! with the SAD data cost `theta_(i,j)(d) = |I_l(i,j) - I_r(i-d,j)|` and the
//! Potts smoothness `delta`. Coordinates are `(i, j)` = (column, row); columns
//! `i < d_max` are left out of the domain so that `i - d` never goes negative.

use std::collections::HashMap;

use num_traits::Zero;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::imaging::{DispMatrix, GrayImage};
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("left image is {left:?} but right image is {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("image width {width} leaves no pixels for d_max {d_max}")]
    EmptyDomain { width: usize, d_max: u32 },
    #[error("invalid disparity range [{d_min}, {d_max}]")]
    InvalidRange { d_min: u32, d_max: u32 },
    #[error("smoothness factor must be non-negative, got {0}")]
    NegativeLambda(Rational),
    #[error("pixel ({0},{1}) is outside the problem domain")]
    PixelOutside(usize, usize),
    #[error("disparity {d} is outside [{d_min}, {d_max}]")]
    LabelOutOfRange { d: u32, d_min: u32, d_max: u32 },
    #[error("labeling covers {got} pixels, problem has {expected}")]
    PartialLabeling { got: usize, expected: usize },
}

/// Disparity set `{d_min, ..., d_max}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisparityRange {
    d_min: u32,
    d_max: u32,
}

impl DisparityRange {
    pub fn new(d_min: u32, d_max: u32) -> Result<Self, ProblemError> {
        if d_min > d_max {
            return Err(ProblemError::InvalidRange { d_min, d_max });
        }
        Ok(Self { d_min, d_max })
    }

    pub fn d_min(&self) -> u32 {
        self.d_min
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    /// Number of labels.
    pub fn len(&self) -> usize {
        (self.d_max - self.d_min) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, d: u32) -> bool {
        (self.d_min..=self.d_max).contains(&d)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + Clone {
        self.d_min..=self.d_max
    }

    pub(crate) fn check(&self, d: u32) -> Result<(), ProblemError> {
        if self.contains(d) {
            Ok(())
        } else {
            Err(ProblemError::LabelOutOfRange {
                d,
                d_min: self.d_min,
                d_max: self.d_max,
            })
        }
    }
}

/// Pixel coordinate `(i, j)`: column, row.
pub type Pixel = (usize, usize);

/// `delta(d1, d2)`: 0 when the labels agree, 1 otherwise.
#[inline]
pub fn potts(d1: u32, d2: u32) -> u32 {
    u32::from(d1 != d2)
}

#[derive(Debug, Clone)]
pub struct StereoProblem {
    left: GrayImage,
    right: GrayImage,
    range: DisparityRange,
    lambda: Rational,
    pixels: Vec<Pixel>,
    /// Pairs of pixel ranks, first < second.
    neighbors: Vec<(usize, usize)>,
    /// Neighbor ranks per pixel rank.
    adjacency: Vec<Vec<usize>>,
    /// `theta[rank * k + (d - d_min)]`
    costs: Vec<u32>,
}

/// Builds `P`, `N` and the data-cost table for a rectified pair.
///
/// Pixels are enumerated row-major; each pixel contributes its right-neighbor
/// pair and then its down-neighbor pair.
pub fn build_problem(
    left: GrayImage,
    right: GrayImage,
    range: DisparityRange,
    lambda: Rational,
) -> Result<StereoProblem, ProblemError> {
    let dims = |g: &GrayImage| (g.width(), g.height());
    if dims(&left) != dims(&right) {
        return Err(ProblemError::DimensionMismatch {
            left: dims(&left),
            right: dims(&right),
        });
    }
    if lambda < Rational::zero() {
        return Err(ProblemError::NegativeLambda(lambda));
    }
    let (width, height) = dims(&left);
    let first_col = range.d_max as usize;
    if width <= first_col {
        return Err(ProblemError::EmptyDomain {
            width,
            d_max: range.d_max,
        });
    }
    let cols = width - first_col;

    let pixels: Vec<Pixel> = (0..height)
        .flat_map(|j| (first_col..width).map(move |i| (i, j)))
        .collect();
    let rank = |i: usize, j: usize| j * cols + (i - first_col);

    let mut neighbors = Vec::with_capacity(height * (cols - 1) + cols * (height - 1));
    let mut adjacency = vec![Vec::with_capacity(4); pixels.len()];
    for (r, &(i, j)) in pixels.iter().enumerate() {
        if i + 1 < width {
            neighbors.push((r, rank(i + 1, j)));
        }
        if j + 1 < height {
            neighbors.push((r, rank(i, j + 1)));
        }
    }
    for &(a, b) in &neighbors {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    let k = range.len();
    let mut costs = Vec::with_capacity(pixels.len() * k);
    for &(i, j) in &pixels {
        let l = i32::from(left.get(i, j));
        for d in range.iter() {
            let r = i32::from(right.get(i - d as usize, j));
            costs.push((l - r).unsigned_abs());
        }
    }

    Ok(StereoProblem {
        left,
        right,
        range,
        lambda,
        pixels,
        neighbors,
        adjacency,
        costs,
    })
}

impl StereoProblem {
    pub fn left(&self) -> &GrayImage {
        &self.left
    }

    pub fn right(&self) -> &GrayImage {
        &self.right
    }

    pub fn width(&self) -> usize {
        self.left.width()
    }

    pub fn height(&self) -> usize {
        self.left.height()
    }

    pub fn range(&self) -> DisparityRange {
        self.range
    }

    pub fn num_labels(&self) -> usize {
        self.range.len()
    }

    pub fn lambda(&self) -> Rational {
        self.lambda
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn num_pixels(&self) -> usize {
        self.pixels.len()
    }

    /// Neighbor pairs as pixel ranks.
    pub fn neighbors(&self) -> &[(usize, usize)] {
        &self.neighbors
    }

    pub fn neighbor_pixels(&self) -> impl Iterator<Item = (Pixel, Pixel)> + '_ {
        self.neighbors
            .iter()
            .map(|&(a, b)| (self.pixels[a], self.pixels[b]))
    }

    pub fn adjacent(&self, rank: usize) -> &[usize] {
        &self.adjacency[rank]
    }

    /// Position of `(i, j)` in the pixel enumeration.
    pub fn rank_of(&self, (i, j): Pixel) -> Option<usize> {
        let first_col = self.range.d_max as usize;
        if i < first_col || i >= self.width() || j >= self.height() {
            return None;
        }
        Some(j * (self.width() - first_col) + (i - first_col))
    }

    /// Data cost by pixel rank and label offset `d - d_min`; no bounds checks
    /// beyond slice indexing.
    #[inline]
    pub fn cost(&self, rank: usize, label_offset: usize) -> u32 {
        self.costs[rank * self.range.len() + label_offset]
    }

    /// Data costs of one pixel across all labels.
    pub fn costs_of(&self, rank: usize) -> &[u32] {
        let k = self.range.len();
        &self.costs[rank * k..(rank + 1) * k]
    }

    /// SAD matching cost `|I_l(i,j) - I_r(i-d,j)|`.
    pub fn data_cost(&self, pixel: Pixel, d: u32) -> Result<u32, ProblemError> {
        let rank = self
            .rank_of(pixel)
            .ok_or(ProblemError::PixelOutside(pixel.0, pixel.1))?;
        self.range.check(d)?;
        Ok(self.cost(rank, (d - self.range.d_min) as usize))
    }

    /// `sum_P max_d theta + lambda * |N|`; a penalty weight strictly above this
    /// makes every minimizer of the one-hot QUBO feasible.
    pub fn penalty_bound(&self) -> Rational {
        let data: i64 = (0..self.num_pixels())
            .map(|r| i64::from(*self.costs_of(r).iter().max().unwrap_or(&0)))
            .sum();
        Rational::from_integer(data) + self.lambda * Rational::from_integer(self.neighbors.len() as i64)
    }

    /// Stable content hash identifying the energy function (dims, range,
    /// lambda and the data-cost table).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"stereo-problem/v1");
        for v in [
            self.width() as u64,
            self.height() as u64,
            u64::from(self.range.d_min),
            u64::from(self.range.d_max),
        ] {
            h.update(v.to_le_bytes());
        }
        h.update(self.lambda.numer().to_le_bytes());
        h.update(self.lambda.denom().to_le_bytes());
        for c in &self.costs {
            h.update(c.to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Renders a labeling over the full image grid; excluded boundary columns
    /// are filled with 0.
    pub fn disparity_map(&self, w: &Labeling) -> Result<DispMatrix, ProblemError> {
        self.check_labeling(w)?;
        let mut values = vec![0i64; self.width() * self.height()];
        for (&(i, j), &d) in self.pixels.iter().zip(w.values()) {
            values[j * self.width() + i] = i64::from(d);
        }
        Ok(DispMatrix::new(self.width(), self.height(), values).expect("grid is non-empty"))
    }

    pub fn check_labeling(&self, w: &Labeling) -> Result<(), ProblemError> {
        if w.len() != self.num_pixels() {
            return Err(ProblemError::PartialLabeling {
                got: w.len(),
                expected: self.num_pixels(),
            });
        }
        w.values().iter().try_for_each(|&d| self.range.check(d))
    }

    /// Builds a labeling from an explicit pixel → disparity map.
    pub fn labeling_from_map(&self, map: &HashMap<Pixel, u32>) -> Result<Labeling, ProblemError> {
        if map.len() != self.num_pixels() {
            return Err(ProblemError::PartialLabeling {
                got: map.len(),
                expected: self.num_pixels(),
            });
        }
        let mut values = vec![0; self.num_pixels()];
        for (&px, &d) in map {
            let r = self.rank_of(px).ok_or(ProblemError::PixelOutside(px.0, px.1))?;
            self.range.check(d)?;
            values[r] = d;
        }
        Ok(Labeling::new(values))
    }
}

/// One disparity per pixel, aligned with the problem's pixel enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(Vec<u32>);

impl Labeling {
    pub fn new(values: Vec<u32>) -> Self {
        Self(values)
    }

    pub fn constant(p: &StereoProblem, d: u32) -> Result<Self, ProblemError> {
        p.range().check(d)?;
        Ok(Self(vec![d; p.num_pixels()]))
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, rank: usize) -> u32 {
        self.0[rank]
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

/// The two integer parts of `F`: data cost and the count of disagreeing pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyTerms {
    pub data: u64,
    pub disagreements: u64,
}

impl EnergyTerms {
    pub fn value(&self, lambda: Rational) -> Rational {
        Rational::from_integer(self.data as i64)
            + lambda * Rational::from_integer(self.disagreements as i64)
    }
}

pub fn energy_terms(p: &StereoProblem, w: &Labeling) -> Result<EnergyTerms, ProblemError> {
    p.check_labeling(w)?;
    let d_min = p.range().d_min();
    let data = w
        .values()
        .iter()
        .enumerate()
        .map(|(r, &d)| u64::from(p.cost(r, (d - d_min) as usize)))
        .sum();
    let disagreements = p
        .neighbors()
        .iter()
        .map(|&(a, b)| u64::from(potts(w.get(a), w.get(b))))
        .sum();
    Ok(EnergyTerms {
        data,
        disagreements,
    })
}

/// Global energy `F(w)`.
pub fn total_energy(p: &StereoProblem, w: &Labeling) -> Result<Rational, ProblemError> {
    Ok(energy_terms(p, w)?.value(p.lambda()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    fn int(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    /// Grid edges counted by brute force over all coordinate pairs.
    fn count_grid_edges(w: usize, h: usize) -> usize {
        let cells: Vec<(usize, usize)> = (0..h).flat_map(|j| (0..w).map(move |i| (i, j))).collect();
        let mut n = 0;
        for (a, &(i1, j1)) in cells.iter().enumerate() {
            for &(i2, j2) in &cells[a + 1..] {
                if i1.abs_diff(i2) + j1.abs_diff(j2) == 1 {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn supplementary_domain() {
        let p = fixtures::supplementary(int(10));
        assert_eq!(p.num_pixels(), 9);
        assert_eq!(p.neighbors().len(), 12);
        assert!(p.pixels().iter().all(|&(i, _)| i >= 1));
        let listed: Vec<(Pixel, Pixel)> = vec![
            ((1, 0), (2, 0)),
            ((1, 0), (1, 1)),
            ((2, 0), (3, 0)),
            ((2, 0), (2, 1)),
            ((3, 0), (3, 1)),
            ((1, 1), (2, 1)),
            ((1, 1), (1, 2)),
            ((2, 1), (3, 1)),
            ((2, 1), (2, 2)),
            ((3, 1), (3, 2)),
            ((1, 2), (2, 2)),
            ((2, 2), (3, 2)),
        ];
        assert_eq!(p.neighbor_pixels().collect::<Vec<_>>(), listed);
    }

    #[test]
    fn smallest_grid() {
        let p = build_problem(
            gray(2, 1, &[1, 2]),
            gray(2, 1, &[1, 2]),
            DisparityRange::new(0, 0).unwrap(),
            int(1),
        )
        .unwrap();
        assert_eq!((p.num_pixels(), p.neighbors().len()), (2, 1));
    }

    #[test]
    fn edge_count_matches_enumeration() {
        for w in 1..7 {
            for h in 1..7 {
                let img = GrayImage::filled(w, h, 0).unwrap();
                let p = build_problem(img.clone(), img, DisparityRange::new(0, 0).unwrap(), int(0))
                    .unwrap();
                assert_eq!(p.neighbors().len(), count_grid_edges(w, h), "{w}x{h}");
                assert_eq!(p.neighbors().len(), h * (w - 1) + w * (h - 1));
            }
        }
    }

    #[test]
    fn build_errors() {
        let r = DisparityRange::new(0, 1).unwrap();
        assert!(matches!(
            build_problem(gray(2, 1, &[0, 0]), gray(1, 2, &[0, 0]), r, int(1)),
            Err(ProblemError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            build_problem(gray(1, 2, &[0, 0]), gray(1, 2, &[0, 0]), r, int(1)),
            Err(ProblemError::EmptyDomain { .. })
        ));
        assert!(matches!(
            build_problem(gray(2, 1, &[0, 0]), gray(2, 1, &[0, 0]), r, int(-1)),
            Err(ProblemError::NegativeLambda(_))
        ));
        assert!(DisparityRange::new(3, 2).is_err());
    }

    #[test]
    fn sad_costs() {
        let img = gray(3, 1, &[10, 20, 30]);
        let p = build_problem(img.clone(), img, DisparityRange::new(0, 2).unwrap(), int(1)).unwrap();
        assert_eq!(p.data_cost((2, 0), 0).unwrap(), 0);
        assert_eq!(p.data_cost((2, 0), 2).unwrap(), 20);

        let p = build_problem(
            gray(2, 1, &[0, 200]),
            gray(2, 1, &[150, 0]),
            DisparityRange::new(0, 1).unwrap(),
            int(1),
        )
        .unwrap();
        assert_eq!(p.data_cost((1, 0), 1).unwrap(), 50);
        assert_eq!(p.data_cost((0, 0), 0), Err(ProblemError::PixelOutside(0, 0)));
        assert!(matches!(p.data_cost((1, 0), 2), Err(ProblemError::LabelOutOfRange { .. })));
    }

    #[test]
    fn supplementary_costs_match_fixture() {
        let p = fixtures::supplementary(int(10));
        let fifty = [
            ((1, 0), 0),
            ((2, 0), 1),
            ((2, 1), 0),
            ((3, 1), 1),
            ((1, 2), 0),
            ((2, 2), 1),
        ];
        for &px in p.pixels() {
            for d in 0..2 {
                let expected = if fifty.contains(&(px, d)) { 50 } else { 0 };
                assert_eq!(p.data_cost(px, d).unwrap(), expected, "{px:?} d={d}");
            }
        }
    }

    #[test]
    fn potts_cases() {
        assert_eq!(potts(3, 3), 0);
        assert_eq!(potts(0, 1), 1);
        for a in 0..5 {
            for b in 0..5 {
                assert_eq!(potts(a, b), potts(b, a));
            }
        }
    }

    #[test]
    fn supplementary_optimum_energy() {
        let p = fixtures::supplementary(int(10));
        let w = fixtures::supplementary_labeling(&p);
        let t = energy_terms(&p, &w).unwrap();
        assert_eq!(t, EnergyTerms { data: 0, disagreements: 5 });
        assert_eq!(total_energy(&p, &w).unwrap(), int(50));
    }

    #[test]
    fn identical_images_zero_energy() {
        let img = gray(4, 2, &[5, 9, 200, 3, 7, 7, 1, 0]);
        let p = build_problem(img.clone(), img, DisparityRange::new(0, 2).unwrap(), int(3)).unwrap();
        let w = Labeling::constant(&p, 0).unwrap();
        assert_eq!(total_energy(&p, &w).unwrap(), int(0));
    }

    #[test]
    fn partial_labeling_rejected() {
        let p = fixtures::supplementary(int(10));
        assert_eq!(
            total_energy(&p, &Labeling::new(vec![0; 8])),
            Err(ProblemError::PartialLabeling { got: 8, expected: 9 })
        );
        assert!(total_energy(&p, &Labeling::new(vec![2; 9])).is_err());
    }

    fn arb_problem() -> impl Strategy<Value = (StereoProblem, Vec<u32>)> {
        (2usize..=6, 1usize..=5, 0u32..=2, 1u32..=3, 0i64..=30).prop_flat_map(
            |(extra, h, d_min, k, lambda)| {
                let d_max = d_min + k - 1;
                let w = d_max as usize + extra;
                let n = w * h;
                (
                    proptest::collection::vec(any::<u8>(), n),
                    proptest::collection::vec(any::<u8>(), n),
                    proptest::collection::vec(d_min..=d_max, extra * h),
                )
                    .prop_map(move |(l, r, labels)| {
                        let p = build_problem(
                            GrayImage::new(w, h, l).unwrap(),
                            GrayImage::new(w, h, r).unwrap(),
                            DisparityRange::new(d_min, d_max).unwrap(),
                            Rational::from_integer(lambda),
                        )
                        .unwrap();
                        (p, labels)
                    })
            },
        )
    }

    proptest! {
        #[test]
        fn energy_bounds((p, labels) in arb_problem()) {
            let w = Labeling::new(labels);
            let f = total_energy(&p, &w).unwrap();
            prop_assert!(f >= int(0));
            prop_assert!(f <= p.penalty_bound());
        }

        #[test]
        fn lambda_zero_is_separable((p, labels) in arb_problem()) {
            let p0 = build_problem(p.left().clone(), p.right().clone(), p.range(), int(0)).unwrap();
            let w = Labeling::new(labels);
            let direct: u32 = p0.pixels().iter().zip(w.values())
                .map(|(&px, &d)| p0.data_cost(px, d).unwrap())
                .sum();
            prop_assert_eq!(total_energy(&p0, &w).unwrap(), int(direct.into()));
        }

        #[test]
        fn enumeration_order_irrelevant((p, labels) in arb_problem(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let w = Labeling::new(labels);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let by_pixel: HashMap<Pixel, u32> = p.pixels().iter().copied().zip(w.values().iter().copied()).collect();
            let mut px: Vec<Pixel> = p.pixels().to_vec();
            let mut pairs: Vec<(Pixel, Pixel)> = p.neighbor_pixels().map(|(a, b)| (b, a)).collect();
            px.shuffle(&mut rng);
            pairs.shuffle(&mut rng);
            let data: i64 = px.iter().map(|&q| i64::from(p.data_cost(q, by_pixel[&q]).unwrap())).sum();
            let smooth: i64 = pairs.iter().map(|(a, b)| i64::from(potts(by_pixel[a], by_pixel[b]))).sum();
            prop_assert_eq!(total_energy(&p, &w).unwrap(), int(data) + p.lambda() * int(smooth));
            prop_assert_eq!(p.labeling_from_map(&by_pixel).unwrap(), w);
        }
    }
}
