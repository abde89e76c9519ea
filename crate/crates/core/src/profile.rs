//! Continuous and discrete population profiles.
//!
//! A [`ContinuousProfile`] is a piecewise-linear function on `[0, h)` that is
//! positive inside its support and vanishes from the extinction height `h`
//! on. A [`DiscreteProfile`] lists generation sizes `q(1), ..., q(h_q - 1)`;
//! generation 0 is the artificial root and generation `h_q` is extinct.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refinement points inserted into every knot interval when `ell_sigma`
/// resamples the (piecewise-rational) ratio `4 ell / sigma^2`.
pub const DEFAULT_REFINEMENT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct ContinuousProfile {
    xs: Vec<f64>,
    vs: Vec<f64>,
    // cumulative integral up to each knot
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    knots: Vec<[f64; 2]>,
}

impl TryFrom<RawProfile> for ContinuousProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        ContinuousProfile::new(raw.knots.iter().map(|k| (k[0], k[1])).collect())
    }
}

impl From<ContinuousProfile> for RawProfile {
    fn from(p: ContinuousProfile) -> Self {
        RawProfile {
            knots: p.xs.iter().zip(&p.vs).map(|(&x, &v)| [x, v]).collect(),
        }
    }
}

impl ContinuousProfile {
    /// Validates a knot list `(position, value)`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::EmptyProfile);
        }
        if knots[0].0 != 0.0 {
            return Err(Error::NonMonotonePositions(0));
        }
        for (i, w) in knots.windows(2).enumerate() {
            if !w[1].0.is_finite() || w[1].0 <= w[0].0 {
                return Err(Error::NonMonotonePositions(i + 1));
            }
        }
        let last = knots.len() - 1;
        for (i, &(_, v)) in knots.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeValue(i));
            }
            if v == 0.0 && i != 0 && i != last {
                return Err(Error::InteriorZero(i));
            }
        }
        let (xs, vs): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        let mut cum = Vec::with_capacity(xs.len());
        cum.push(0.0);
        for i in 1..xs.len() {
            let seg = 0.5 * (vs[i - 1] + vs[i]) * (xs[i] - xs[i - 1]);
            cum.push(cum[i - 1] + seg);
        }
        Ok(Self { xs, vs, cum })
    }

    /// Constant profile `value` on `[0, h)`.
    pub fn constant(value: f64, h: f64) -> Result<Self> {
        Self::new(vec![(0.0, value), (h, value)])
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.vs.iter().copied())
    }

    pub fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    /// Extinction height `h`.
    pub fn extinction_height(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Linear interpolant on `[0, h)`, zero elsewhere.
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..self.extinction_height()).contains(&x) {
            return 0.0;
        }
        let i = self.segment(x);
        self.interp(i, x)
    }

    /// Left limit at `x`; equals `eval` except at `h`, where it is the last knot value.
    pub fn left_limit(&self, x: f64) -> f64 {
        let h = self.extinction_height();
        if x == h {
            *self.vs.last().unwrap()
        } else {
            self.eval(x)
        }
    }

    pub fn max_value(&self) -> f64 {
        self.vs.iter().copied().fold(0.0, f64::max)
    }

    fn segment(&self, x: f64) -> usize {
        // index i with xs[i] <= x < xs[i+1]
        match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => (i - 1).min(self.xs.len() - 2),
        }
    }

    fn interp(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (v0, v1) = (self.vs[i], self.vs[i + 1]);
        if x == x0 {
            return v0;
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Exact integral of the interpolant over `[0, h]`.
    pub fn integral(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Integral from 0 to `x` (clamped to the support).
    pub fn integral_to(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.extinction_height() {
            return self.integral();
        }
        let i = self.segment(x);
        let v = self.interp(i, x);
        self.cum[i] + 0.5 * (self.vs[i] + v) * (x - self.xs[i])
    }

    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.integral_to(b) - self.integral_to(a)
    }

    /// CDF of the normalized density `ell / I(ell)`.
    pub fn height_cdf(&self, x: f64) -> f64 {
        self.integral_to(x) / self.integral()
    }

    /// Inverse CDF of the density `ell / I(ell)`, evaluated at `u` in `[0, 1]`.
    pub fn sample_height(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let target = u * self.integral();
        // first knot whose cumulative mass reaches the target
        let j = self.cum.partition_point(|&c| c < target);
        if j == 0 {
            return 0.0;
        }
        if j >= self.cum.len() {
            return self.extinction_height();
        }
        let i = j - 1;
        let area = target - self.cum[i];
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let v0 = self.vs[i];
        let slope = (self.vs[i + 1] - v0) / (x1 - x0);
        // solve v0 t + slope t^2 / 2 = area, in the cancellation-free form
        let disc = (v0 * v0 + 2.0 * slope * area).max(0.0);
        let denom = v0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * area / denom } else { 0.0 };
        (x0 + t).clamp(x0, x1)
    }
}

/// The pair `(ell, sigma)` together with the limit of `ell / sigma^2` at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    pub ell: ContinuousProfile,
    pub sigma: ContinuousProfile,
    pub ratio_at_zero: f64,
}

impl ProfilePair {
    /// Pairs two profiles. When `sigma(0) > 0` the ratio at zero is read off the
    /// first knots; a supplied value must then agree with it. When `sigma(0) = 0`
    /// and `ell(0) > 0` the pair is rejected. When both vanish at zero the ratio
    /// must be supplied.
    pub fn new(
        ell: ContinuousProfile,
        sigma: ContinuousProfile,
        ratio_at_zero: Option<f64>,
    ) -> Result<Self> {
        let (he, hs) = (ell.extinction_height(), sigma.extinction_height());
        if he != hs {
            return Err(Error::ExtinctionMismatch(he, hs));
        }
        let (l0, s0) = (ell.values()[0], sigma.values()[0]);
        let ratio = if s0 > 0.0 {
            let computed = l0 / (s0 * s0);
            if let Some(r) = ratio_at_zero {
                if (r - computed).abs() > 1e-12 * computed.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ratio_at_zero {r} disagrees with ell(0)/sigma(0)^2 = {computed}"
                    )));
                }
            }
            computed
        } else if l0 > 0.0 {
            return Err(Error::InfiniteRatioAtZero);
        } else {
            match ratio_at_zero {
                Some(r) if r.is_finite() && r >= 0.0 => r,
                _ => return Err(Error::InfiniteRatioAtZero),
            }
        };
        Ok(Self {
            ell,
            sigma,
            ratio_at_zero: ratio,
        })
    }

    /// `ell` with `sigma == 1` on the same support.
    pub fn unit_variance(ell: ContinuousProfile) -> Result<Self> {
        let sigma = ContinuousProfile::constant(1.0, ell.extinction_height())?;
        Self::new(ell, sigma, None)
    }

    pub fn extinction_height(&self) -> f64 {
        self.ell.extinction_height()
    }

    /// Pair-merge rate `sigma^2 / ell` at an interior height.
    pub fn pair_rate(&self, s: f64) -> f64 {
        let sg = self.sigma.eval(s);
        sg * sg / self.ell.eval(s)
    }
}

/// Piecewise-linear resampling of `4 ell / sigma^2` on the merged knot grid,
/// with `refine` extra points per interval.
pub fn ell_sigma(pair: &ProfilePair, refine: usize) -> Result<ContinuousProfile> {
    let h = pair.extinction_height();
    let mut grid: Vec<f64> = pair
        .ell
        .positions()
        .iter()
        .chain(pair.sigma.positions())
        .copied()
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut fine = Vec::with_capacity(grid.len() * (refine + 1));
    for w in grid.windows(2) {
        fine.push(w[0]);
        for j in 1..=refine {
            let x = w[0] + (w[1] - w[0]) * j as f64 / (refine + 1) as f64;
            if x > w[0] && x < w[1] {
                fine.push(x);
            }
        }
    }
    fine.push(h);

    let mut knots = Vec::with_capacity(fine.len());
    for (idx, &x) in fine.iter().enumerate() {
        let v = if idx == 0 {
            4.0 * pair.ratio_at_zero
        } else if idx == fine.len() - 1 {
            let s = pair.sigma.left_limit(h);
            if s > 0.0 {
                4.0 * pair.ell.left_limit(h) / (s * s)
            } else {
                // no finite left limit; hold the last interior value
                knots.last().map(|&(_, v): &(f64, f64)| v).unwrap_or(0.0)
            }
        } else {
            let s = pair.sigma.eval(x);
            if s <= 0.0 {
                return Err(Error::SigmaZeroInside(x));
            }
            4.0 * pair.ell.eval(x) / (s * s)
        };
        knots.push((x, v));
    }
    ContinuousProfile::new(knots)
}

/// Generation sizes `q(1), ..., q(h_q - 1)` of a Cannings model, with the
/// scale `n` used to rescale heights by `1/n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteProfile {
    sizes: Vec<u64>,
    scale: u64,
}

impl DiscreteProfile {
    pub fn new(sizes: Vec<u64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "a discrete profile needs at least one generation".into(),
            ));
        }
        if let Some(s) = sizes.iter().position(|&q| q == 0) {
            return Err(Error::InvalidParameter(format!(
                "generation {} has size 0 before extinction",
                s + 1
            )));
        }
        Ok(Self { sizes, scale: 1 })
    }

    /// `q(s) = n` for `1 <= s <= generations`.
    pub fn constant(n: u64, generations: usize) -> Result<Self> {
        Ok(Self::new(vec![n; generations])?.with_scale(n))
    }

    pub fn with_scale(mut self, n: u64) -> Self {
        self.scale = n.max(1);
        self
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Extinction generation `h_q`.
    pub fn extinction(&self) -> usize {
        self.sizes.len() + 1
    }

    /// Size of generation `s`; the root generation has size 1.
    pub fn q(&self, s: usize) -> u64 {
        match s {
            0 => 1,
            s if s < self.extinction() => self.sizes[s - 1],
            _ => 0,
        }
    }

    /// `q(1), ..., q(h_q - 1)`.
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    /// Sum of all generation sizes, excluding the root.
    pub fn total(&self) -> u64 {
        self.sizes.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.sizes.windows(2).all(|w| w[0] == w[1])
    }
}

/// Realizes `ell` at scale `n`: `h_q = ceil(n h)`, `q(s) = max(1, round(n ell(s/n)))`.
pub fn discretize(ell: &ContinuousProfile, n: u64) -> Result<DiscreteProfile> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("discretize needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let scaled = nf * ell.extinction_height();
    let h_q = if (scaled - scaled.round()).abs() < 1e-9 {
        scaled.round()
    } else {
        scaled.ceil()
    } as usize;
    let h_q = h_q.max(2);
    let sizes = (1..h_q)
        .map(|s| {
            let v = (nf * ell.eval(s as f64 / nf)).round();
            (v as u64).max(1)
        })
        .collect();
    Ok(DiscreteProfile::new(sizes)?.with_scale(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> ContinuousProfile {
        ContinuousProfile::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn validation_examples() {
        let p = ContinuousProfile::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(p.extinction_height(), 1.0);
        assert_eq!(p.eval(0.3), 1.0);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(7.0), 0.0);
        assert_eq!(p.left_limit(1.0), 1.0);

        assert_eq!(triangle().extinction_height(), 1.0);
        assert_eq!(
            ContinuousProfile::new(vec![(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)]),
            Err(Error::InteriorZero(1))
        );
        assert_eq!(
            ContinuousProfile::new(vec![(0.0, 1.0), (0.5, 1.0), (0.5, 1.0)]),
            Err(Error::NonMonotonePositions(2))
        );
        assert_eq!(
            ContinuousProfile::new(vec![(0.1, 1.0), (0.5, 1.0)]),
            Err(Error::NonMonotonePositions(0))
        );
        assert_eq!(
            ContinuousProfile::new(vec![(0.0, -1.0), (0.5, 1.0)]),
            Err(Error::NegativeValue(0))
        );
        assert_eq!(ContinuousProfile::new(vec![(0.0, 1.0)]), Err(Error::EmptyProfile));
    }

    #[test]
    fn integrals() {
        assert_eq!(ContinuousProfile::constant(1.0, 1.0).unwrap().integral(), 1.0);
        assert_eq!(triangle().integral(), 0.5);
        assert_eq!(ContinuousProfile::constant(2.0, 3.0).unwrap().integral(), 6.0);
        let t = triangle();
        assert!((t.integral_between(0.25, 0.75) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn ell_sigma_constants() {
        for (l, s, want) in [(1.0, 2.0, 1.0), (1.0, 1.0, 4.0), (2.0, 2.0, 2.0)] {
            let pair = ProfilePair::new(
                ContinuousProfile::constant(l, 1.0).unwrap(),
                ContinuousProfile::constant(s, 1.0).unwrap(),
                None,
            )
            .unwrap();
            let es = ell_sigma(&pair, DEFAULT_REFINEMENT).unwrap();
            assert!(es.values().iter().all(|&v| v == want), "{l} {s}");
        }
    }

    #[test]
    fn ell_sigma_exact_on_grid() {
        let ell = ContinuousProfile::new(vec![(0.0, 1.0), (0.4, 2.0), (1.0, 0.5)]).unwrap();
        let sigma = ContinuousProfile::new(vec![(0.0, 1.0), (0.7, 1.5), (1.0, 1.2)]).unwrap();
        let pair = ProfilePair::new(ell, sigma, None).unwrap();
        let es = ell_sigma(&pair, 5).unwrap();
        let n = es.positions().len();
        for (i, (x, v)) in es.knots().enumerate() {
            if i == 0 || i == n - 1 {
                continue;
            }
            let s = pair.sigma.eval(x);
            assert_eq!(v, 4.0 * pair.ell.eval(x) / (s * s));
        }
        assert_eq!(es.values()[0], 4.0);
        assert_eq!(es.values()[n - 1], 4.0 * 0.5 / (1.2 * 1.2));
    }

    #[test]
    fn pair_ratio_rules() {
        let one = ContinuousProfile::constant(1.0, 1.0).unwrap();
        let vanishing = ContinuousProfile::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(
            ProfilePair::new(one.clone(), vanishing.clone(), None),
            Err(Error::InfiniteRatioAtZero)
        );
        assert!(ProfilePair::new(vanishing.clone(), vanishing.clone(), Some(0.5)).is_ok());
        assert!(ProfilePair::new(vanishing.clone(), vanishing, None).is_err());
        let short = ContinuousProfile::constant(1.0, 0.5).unwrap();
        assert!(matches!(
            ProfilePair::new(one, short, None),
            Err(Error::ExtinctionMismatch(..))
        ));
    }

    #[test]
    fn sigma_vanishing_at_extinction_holds_last_value() {
        let ell = ContinuousProfile::constant(1.0, 1.0).unwrap();
        let sigma = ContinuousProfile::new(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        let pair = ProfilePair::new(ell, sigma, None).unwrap();
        let es = ell_sigma(&pair, 3).unwrap();
        let v = es.values();
        assert_eq!(v[v.len() - 1], v[v.len() - 2]);
    }

    #[test]
    fn discretize_examples() {
        let one = ContinuousProfile::constant(1.0, 1.0).unwrap();
        let d = discretize(&one, 4).unwrap();
        assert_eq!(d.sizes(), &[4, 4, 4]);
        assert_eq!(d.extinction(), 4);
        let d = discretize(&triangle(), 4).unwrap();
        assert_eq!(d.sizes(), &[2, 4, 2]);
        assert_eq!(d.extinction(), 4);
        let d = discretize(&one, 2).unwrap();
        assert_eq!(d.sizes(), &[2]);
        assert_eq!(d.extinction(), 2);
        assert_eq!(d.q(0), 1);
        assert_eq!(d.q(2), 0);
    }

    #[test]
    fn sample_height_examples() {
        let one = ContinuousProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(one.sample_height(0.25), 0.25);
        assert_eq!(one.sample_height(1.0), 1.0);
        assert_eq!(triangle().sample_height(0.5), 0.5);
        assert_eq!(triangle().sample_height(0.0), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let p = ContinuousProfile::new(vec![(0.0, 0.1), (0.3, 1.0 / 3.0), (1.7, 2.0f64.sqrt())])
            .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"knots\":[["));
        let back: ContinuousProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad: std::result::Result<ContinuousProfile, _> =
            serde_json::from_str("{\"knots\":[[0,1],[0.5,0],[1,1]]}");
        assert!(bad.is_err());
    }
}
