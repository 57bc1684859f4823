//! One-hot QUBO compilation of the stereo energy.
//!
//! Each pixel `p` gets `k` binary variables `x_(p,d)`, and
//!
//! ```text
//! H(x) = alpha * sum_p (1 - sum_d x_(p,d))^2
//!      + sum_p sum_d theta_p(d) x_(p,d)
//!      + lambda * sum_{{p,q} in N} sum_{d1,d2} delta(d1,d2) x_(p,d1) x_(q,d2)
//! ```
//!
//! Expanding with `x^2 = x` gives linear coefficients `theta_p(d) - alpha`,
//! same-pixel couplings `2 alpha`, cross-pixel couplings `lambda` for every
//! disagreeing label pair, and the constant `alpha * |P|`. On feasible
//! (one-hot) vectors `H` equals the stereo energy of the decoded labeling.

mod export;

pub use export::{export_qubo, import_qubo, QuboText, Sidecar};

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::energy::{potts, DisparityRange, Labeling, Pixel, ProblemError, StereoProblem};
use crate::rational::{common_denominator, format_rational, scaled_integer, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuboError {
    #[error("penalty weight {alpha} must exceed the feasibility bound {bound}")]
    PenaltyTooSmall { alpha: Rational, bound: Rational },
    #[error("penalty weight must be positive, got {0}")]
    NonPositivePenalty(Rational),
    #[error("bit vector has length {got}, model has {expected} variables")]
    LengthMismatch { got: usize, expected: usize },
    #[error("bit vector is infeasible: pixel {pixel:?} has {set} bits set")]
    Infeasible { pixel: Pixel, set: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("coefficient overflow while converting to integer form")]
    Overflow,
    #[error("qubo format error on line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("sidecar error: {0}")]
    Sidecar(String),
}

/// Bijection `(pixel, d) <-> rank(pixel) * k + (d - d_min)`.
///
/// Pixels are the row-major grid over columns `d_max..width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    width: usize,
    height: usize,
    range: DisparityRange,
}

impl VarIndex {
    pub fn new(width: usize, height: usize, range: DisparityRange) -> Self {
        Self {
            width,
            height,
            range,
        }
    }

    pub fn for_problem(p: &StereoProblem) -> Self {
        Self::new(p.width(), p.height(), p.range())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn range(&self) -> DisparityRange {
        self.range
    }

    pub fn k(&self) -> usize {
        self.range.len()
    }

    fn first_col(&self) -> usize {
        self.range.d_max() as usize
    }

    fn cols(&self) -> usize {
        self.width.saturating_sub(self.first_col())
    }

    pub fn num_pixels(&self) -> usize {
        self.cols() * self.height
    }

    pub fn num_vars(&self) -> usize {
        self.num_pixels() * self.k()
    }

    pub fn pixel(&self, rank: usize) -> Pixel {
        (self.first_col() + rank % self.cols(), rank / self.cols())
    }

    pub fn rank(&self, (i, j): Pixel) -> Option<usize> {
        (i >= self.first_col() && i < self.width && j < self.height)
            .then(|| j * self.cols() + (i - self.first_col()))
    }

    pub fn flat(&self, pixel: Pixel, d: u32) -> Option<usize> {
        let r = self.rank(pixel)?;
        self.range
            .contains(d)
            .then(|| r * self.k() + (d - self.range.d_min()) as usize)
    }

    /// Inverse of [`VarIndex::flat`].
    pub fn triple(&self, flat: usize) -> Option<(Pixel, u32)> {
        (flat < self.num_vars()).then(|| {
            let k = self.k();
            (self.pixel(flat / k), self.range.d_min() + (flat % k) as u32)
        })
    }
}

/// Binary assignment `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_u8(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }
}

/// Whether the penalty weight must clear the feasibility bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyCheck {
    #[default]
    Strict,
    /// Accept any positive weight (the worked example uses 200 against a
    /// bound of 420).
    Unchecked,
}

/// Sparse upper-triangular QUBO with a constant offset.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub(crate) index: VarIndex,
    pub(crate) linear: BTreeMap<usize, Rational>,
    pub(crate) quadratic: BTreeMap<(usize, usize), Rational>,
    pub(crate) offset: Rational,
    pub(crate) alpha: Rational,
    pub(crate) lambda: Rational,
    pub(crate) problem_key: String,
}

/// `sum_P max_d theta + lambda |N|`. Any `alpha` strictly above this keeps
/// every QUBO minimizer one-hot.
pub fn alpha_bound(p: &StereoProblem) -> Rational {
    p.penalty_bound()
}

/// `max_p (min_d theta_p(d) + lambda * deg(p))`, a per-pixel condition that
/// is also sufficient for one-hot minimizers: removing a bit from a group
/// with two or more set always lowers `H` by at least `alpha`, and adding the
/// cheapest label to an empty group lowers it whenever `alpha` exceeds this
/// value. Never larger than [`alpha_bound`].
pub fn local_alpha_bound(p: &StereoProblem) -> Rational {
    (0..p.num_pixels())
        .map(|r| {
            let cheapest = *p.costs_of(r).iter().min().expect("k >= 1");
            Rational::from_integer(cheapest.into())
                + p.lambda() * Rational::from_integer(p.adjacent(r).len() as i64)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

/// The smallest integer strictly above [`alpha_bound`].
pub fn default_alpha(p: &StereoProblem) -> Rational {
    Rational::from_integer(alpha_bound(p).floor().to_integer() + 1)
}

fn add_term<K: Ord>(map: &mut BTreeMap<K, Rational>, key: K, value: Rational) {
    if value.is_zero() {
        return;
    }
    let slot = map.entry(key).or_insert_with(Rational::zero);
    *slot += value;
}

fn prune<K: Ord>(map: &mut BTreeMap<K, Rational>) {
    map.retain(|_, v| !v.is_zero());
}

/// Compiles the stereo energy into its one-hot QUBO.
pub fn build_qubo(
    p: &StereoProblem,
    alpha: Rational,
    check: PenaltyCheck,
) -> Result<QuboModel, QuboError> {
    if alpha <= Rational::zero() {
        return Err(QuboError::NonPositivePenalty(alpha));
    }
    if check == PenaltyCheck::Strict {
        let bound = alpha_bound(p);
        if alpha <= bound {
            return Err(QuboError::PenaltyTooSmall { alpha, bound });
        }
    }

    let index = VarIndex::for_problem(p);
    let k = index.k();
    let mut linear = BTreeMap::new();
    let mut quadratic = BTreeMap::new();
    let two = Rational::from_integer(2);

    // alpha (1 - sum_d x)^2 = alpha - alpha sum_d x + 2 alpha sum_{d<d'} x x'
    for rank in 0..p.num_pixels() {
        let base = rank * k;
        for (off, &theta) in p.costs_of(rank).iter().enumerate() {
            add_term(&mut linear, base + off, Rational::from_integer(theta.into()) - alpha);
            for other in off + 1..k {
                add_term(&mut quadratic, (base + off, base + other), two * alpha);
            }
        }
    }

    let lambda = p.lambda();
    let labels: Vec<u32> = p.range().iter().collect();
    for &(a, b) in p.neighbors() {
        for (o1, &d1) in labels.iter().enumerate() {
            for (o2, &d2) in labels.iter().enumerate() {
                let w = lambda * Rational::from_integer(potts(d1, d2).into());
                let (u, v) = (a * k + o1, b * k + o2);
                add_term(&mut quadratic, (u.min(v), u.max(v)), w);
            }
        }
    }
    prune(&mut linear);
    prune(&mut quadratic);

    Ok(QuboModel {
        index,
        linear,
        quadratic,
        offset: alpha * Rational::from_integer(p.num_pixels() as i64),
        alpha,
        lambda,
        problem_key: p.fingerprint(),
    })
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.index.num_vars()
    }

    pub fn index(&self) -> &VarIndex {
        &self.index
    }

    /// Nonzero diagonal coefficients, ascending by index.
    pub fn linear(&self) -> &BTreeMap<usize, Rational> {
        &self.linear
    }

    /// Nonzero couplings keyed `(a, b)` with `a < b`.
    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.quadratic
    }

    pub fn offset(&self) -> Rational {
        self.offset
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    pub fn lambda(&self) -> Rational {
        self.lambda
    }

    /// Fingerprint of the stereo problem this model encodes.
    pub fn problem_key(&self) -> &str {
        &self.problem_key
    }

    pub fn linear_coeff(&self, a: usize) -> Rational {
        self.linear.get(&a).copied().unwrap_or_else(Rational::zero)
    }

    pub fn quadratic_coeff(&self, a: usize, b: usize) -> Rational {
        self.quadratic
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or_else(Rational::zero)
    }

    /// Data cost recovered from the linear coefficient: `theta = Q_aa + alpha`.
    pub fn data_cost(&self, a: usize) -> Rational {
        self.linear_coeff(a) + self.alpha
    }

    fn check_len(&self, x: &BitVector) -> Result<(), QuboError> {
        if x.len() != self.num_vars() {
            return Err(QuboError::LengthMismatch {
                got: x.len(),
                expected: self.num_vars(),
            });
        }
        Ok(())
    }

    /// `offset + sum_a Q_aa x_a + sum_{a<b} Q_ab x_a x_b`, exactly.
    pub fn evaluate(&self, x: &BitVector) -> Result<Rational, QuboError> {
        self.check_len(x)?;
        let b = x.bits();
        let mut e = self.offset;
        for (&a, &c) in &self.linear {
            if b[a] {
                e += c;
            }
        }
        for (&(u, v), &c) in &self.quadratic {
            if b[u] && b[v] {
                e += c;
            }
        }
        Ok(e)
    }

    /// First pixel whose one-hot group does not have exactly one bit set.
    pub fn first_violation(&self, x: &BitVector) -> Result<Option<(Pixel, usize)>, QuboError> {
        self.check_len(x)?;
        let k = self.index.k();
        Ok(x.bits()
            .chunks(k)
            .enumerate()
            .map(|(r, group)| (r, group.iter().filter(|&&b| b).count()))
            .find(|&(_, set)| set != 1)
            .map(|(r, set)| (self.index.pixel(r), set)))
    }

    pub fn is_feasible(&self, x: &BitVector) -> Result<bool, QuboError> {
        Ok(self.first_violation(x)?.is_none())
    }

    /// One-hot encoding of a labeling.
    pub fn encode(&self, w: &Labeling) -> Result<BitVector, QuboError> {
        let n = self.index.num_pixels();
        if w.len() != n {
            return Err(ProblemError::PartialLabeling {
                got: w.len(),
                expected: n,
            }
            .into());
        }
        let range = self.index.range();
        let mut x = BitVector::zeros(self.num_vars());
        for (r, &d) in w.values().iter().enumerate() {
            range.check(d)?;
            x.set(r * range.len() + (d - range.d_min()) as usize, true);
        }
        Ok(x)
    }

    /// Reads the labeling off a feasible vector; infeasible input is an error.
    pub fn decode(&self, x: &BitVector) -> Result<Labeling, QuboError> {
        if let Some((pixel, set)) = self.first_violation(x)? {
            return Err(QuboError::Infeasible { pixel, set });
        }
        let range = self.index.range();
        let values = x
            .bits()
            .chunks(range.len())
            .map(|g| range.d_min() + g.iter().position(|&b| b).expect("one-hot") as u32)
            .collect();
        Ok(Labeling::new(values))
    }

    /// All coefficients scaled by their common denominator.
    pub fn integer_form(&self) -> Result<IntegerQubo, QuboError> {
        let all = self
            .linear
            .values()
            .chain(self.quadratic.values())
            .chain(std::iter::once(&self.offset));
        let scale = common_denominator(all).ok_or(QuboError::Overflow)?;
        let conv = |r: &Rational| scaled_integer(r, scale).ok_or(QuboError::Overflow);
        let mut linear = vec![0i64; self.num_vars()];
        for (&a, c) in &self.linear {
            linear[a] = conv(c)?;
        }
        let quadratic = self
            .quadratic
            .iter()
            .map(|(&(a, b), c)| Ok((a, b, conv(c)?)))
            .collect::<Result<Vec<_>, QuboError>>()?;
        Ok(IntegerQubo {
            scale,
            linear,
            quadratic,
            offset: conv(&self.offset)?,
            group_size: self.index.k(),
        })
    }

    /// Human-readable polynomial, mostly for debugging.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let name = |a: usize| {
            let ((i, j), d) = self.index.triple(a).expect("in range");
            format!("x[{i},{j},{d}]")
        };
        for (&a, c) in &self.linear {
            out.push_str(&format!("{:+} {}\n", format_rational(c), name(a)));
        }
        for (&(a, b), c) in &self.quadratic {
            out.push_str(&format!("{:+} {} {}\n", format_rational(c), name(a), name(b)));
        }
        out.push_str(&format!("{:+}\n", format_rational(&self.offset)));
        out
    }
}

/// `H * scale` with every coefficient an integer; used by the solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerQubo {
    pub scale: i64,
    pub linear: Vec<i64>,
    pub quadratic: Vec<(usize, usize, i64)>,
    pub offset: i64,
    /// One-hot group width `k`.
    pub group_size: usize,
}

impl IntegerQubo {
    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    /// Symmetric adjacency lists `(neighbor, coupling)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, i64)>> {
        let mut adj = vec![Vec::new(); self.num_vars()];
        for &(a, b, c) in &self.quadratic {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        adj
    }

    pub fn evaluate(&self, x: &[bool]) -> i64 {
        let mut e = self.offset;
        for (a, &c) in self.linear.iter().enumerate() {
            if x[a] {
                e += c;
            }
        }
        for &(a, b, c) in &self.quadratic {
            if x[a] && x[b] {
                e += c;
            }
        }
        e
    }

    pub fn to_rational(&self, scaled: i64) -> Rational {
        Rational::new(scaled, self.scale)
    }
}
