//! Exchangeable offspring laws.
//!
//! Every law draws a vector `nu` of length `q(s)` summing to `q(s+1)`. The
//! three shipped laws have closed-form factorial moments
//! `E[prod_i (nu_i)_{a_i}]`, from which every moment report and every
//! coalescence probability is derived.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::profile::DiscreteProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffspringLaw {
    /// Each child picks its parent uniformly (multinomial offspring).
    WrightFisher,
    /// Multinomial with symmetric Dirichlet(theta, ..., theta) weights.
    DirichletMultinomial { theta: f64 },
    /// Mostly one child each; with probability `p_n` one parent takes `r_n`
    /// children and `r_n - 1` others have none.
    Counterexample { alpha: f64 },
}

impl OffspringLaw {
    pub fn name(&self) -> &'static str {
        match self {
            OffspringLaw::WrightFisher => "wright_fisher",
            OffspringLaw::DirichletMultinomial { .. } => "dirichlet_multinomial",
            OffspringLaw::Counterexample { .. } => "counterexample",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OffspringLaw::WrightFisher => Ok(()),
            OffspringLaw::DirichletMultinomial { theta } if theta.is_finite() && theta > 0.0 => {
                Ok(())
            }
            OffspringLaw::DirichletMultinomial { theta } => Err(Error::InvalidParameter(
                format!("dirichlet theta must be positive, got {theta}"),
            )),
            OffspringLaw::Counterexample { alpha } if alpha.is_finite() && alpha > 0.0 => Ok(()),
            OffspringLaw::Counterexample { alpha } => Err(Error::InvalidParameter(format!(
                "counterexample alpha must be positive, got {alpha}"
            ))),
        }
    }

    /// Checks that the law can drive every generation of `profile`.
    pub fn check_profile(&self, profile: &DiscreteProfile) -> Result<()> {
        self.validate()?;
        if let OffspringLaw::Counterexample { alpha } = *self {
            if !profile.is_constant() {
                return Err(Error::LawProfileMismatch(
                    "counterexample law requires constant profile".into(),
                ));
            }
            if profile.extinction() > 2 {
                CounterexampleParams::new(alpha, profile.q(1))?;
            }
        }
        Ok(())
    }
}

/// `r_n = floor(n / (ln n)^alpha)` and `p_n = (ln n)^(2 alpha) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    pub n: u64,
    pub r: u64,
    pub p: f64,
}

impl CounterexampleParams {
    pub fn new(alpha: f64, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::LawProfileMismatch(format!(
                "the counterexample law needs n >= 2, got {n}"
            )));
        }
        let ln = (n as f64).ln();
        let r = (n as f64 / ln.powf(alpha)).floor() as u64;
        let p = ln.powf(2.0 * alpha) / n as f64;
        if r < 1 || r > n || p > 1.0 {
            return Err(Error::LawProfileMismatch(format!(
                "counterexample parameters out of range at n = {n}: r_n = {r}, p_n = {p}"
            )));
        }
        Ok(Self { n, r, p })
    }

    /// Whether a generation is non-trivial (some parent has `r_n` children).
    pub fn draw_nontrivial<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.p
    }
}

fn counterexample_params(alpha: f64, q_s: u64, q_s1: u64) -> Result<CounterexampleParams> {
    if q_s != q_s1 {
        return Err(Error::LawProfileMismatch(format!(
            "the counterexample law needs q(s) = q(s+1), got {q_s} and {q_s1}"
        )));
    }
    CounterexampleParams::new(alpha, q_s)
}

/// Draws one offspring vector of length `q_s` summing to `q_s1`.
pub fn sample_offspring<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_s: u64,
    q_s1: u64,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    sample_offspring_into(law, q_s, q_s1, rng, &mut out)?;
    Ok(out)
}

/// As [`sample_offspring`], reusing `out`.
pub fn sample_offspring_into<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_s: u64,
    q_s1: u64,
    rng: &mut R,
    out: &mut Vec<u32>,
) -> Result<()> {
    if q_s == 0 {
        return Err(Error::InvalidParameter("offspring vector of length 0".into()));
    }
    out.clear();
    out.resize(q_s as usize, 0);
    if q_s1 == 0 {
        return Ok(());
    }
    match *law {
        OffspringLaw::WrightFisher => {
            // sequential binomial splitting of a uniform multinomial
            let mut remaining = q_s1;
            for (i, slot) in out.iter_mut().enumerate() {
                if remaining == 0 {
                    break;
                }
                let cells_left = q_s - i as u64;
                let take = if cells_left == 1 {
                    remaining
                } else {
                    binomial(remaining, 1.0 / cells_left as f64, rng)
                };
                *slot = take as u32;
                remaining -= take;
            }
        }
        OffspringLaw::DirichletMultinomial { theta } => {
            law.validate()?;
            let gamma = Gamma::new(theta, 1.0).expect("validated theta");
            let weights: Vec<f64> = (0..q_s).map(|_| gamma.sample(rng)).collect();
            let mut mass: f64 = weights.iter().sum();
            let mut remaining = q_s1;
            for (i, (slot, w)) in out.iter_mut().zip(&weights).enumerate() {
                if remaining == 0 {
                    break;
                }
                let take = if i as u64 == q_s - 1 || mass <= 0.0 {
                    remaining
                } else {
                    binomial(remaining, (w / mass).clamp(0.0, 1.0), rng)
                };
                *slot = take as u32;
                remaining -= take;
                mass -= w;
            }
        }
        OffspringLaw::Counterexample { alpha } => {
            let params = counterexample_params(alpha, q_s, q_s1)?;
            out.fill(1);
            if params.draw_nontrivial(rng) {
                fill_nontrivial_counterexample(&params, rng, out);
            }
        }
    }
    Ok(())
}

fn fill_nontrivial_counterexample<R: Rng + ?Sized>(
    params: &CounterexampleParams,
    rng: &mut R,
    out: &mut [u32],
) {
    let n = params.n as usize;
    let i0 = rng.random_range(0..n);
    out[i0] = params.r as u32;
    for j in index::sample(rng, n - 1, params.r as usize - 1) {
        let idx = if j >= i0 { j + 1 } else { j };
        out[idx] = 0;
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p).expect("p in (0,1)").sample(rng)
}

pub(crate) fn falling(x: f64, k: u32) -> f64 {
    (0..k).map(|j| x - j as f64).product()
}

/// `E[prod_i (nu_i)_{a_i}]` over distinct indices `i = 1..orders.len()`.
pub fn factorial_moment(law: &OffspringLaw, q_s: u64, q_s1: u64, orders: &[u32]) -> Result<f64> {
    law.validate()?;
    let orders: Vec<u32> = orders.iter().copied().filter(|&a| a > 0).collect();
    if orders.len() as u64 > q_s {
        return Err(Error::InvalidParameter(format!(
            "{} distinct parents requested from a generation of size {q_s}",
            orders.len()
        )));
    }
    let total: u64 = orders.iter().map(|&a| a as u64).sum();
    if total == 0 {
        return Ok(1.0);
    }
    if total > q_s1 {
        return Ok(0.0);
    }
    let m = q_s1 as f64;
    let q = q_s as f64;
    Ok(match *law {
        OffspringLaw::WrightFisher => (0..total).map(|j| (m - j as f64) / q).product(),
        OffspringLaw::DirichletMultinomial { theta } => {
            let shared: f64 = (0..total)
                .map(|j| (m - j as f64) / (q * theta + j as f64))
                .product();
            let rising: f64 = orders
                .iter()
                .map(|&a| (0..a).map(|l| theta + l as f64).product::<f64>())
                .product();
            shared * rising
        }
        OffspringLaw::Counterexample { alpha } => {
            let params = counterexample_params(alpha, q_s, q_s1)?;
            counterexample_factorial_moment(&params, &orders)
        }
    })
}

fn counterexample_factorial_moment(params: &CounterexampleParams, orders: &[u32]) -> f64 {
    let n = params.n as f64;
    let r = params.r;
    let m = orders.len() as u64;
    // P(x given non-hub indices all avoid the r - 1 zeros)
    let avoid_zeros = |x: u64| -> f64 {
        let big = params.n - 1;
        if big < x || big - x < r - 1 {
            return 0.0;
        }
        (0..r - 1)
            .map(|j| (big - x - j) as f64 / (big - j) as f64)
            .product()
    };
    let all_unit = orders.iter().all(|&a| a == 1);
    let trivial = if all_unit { 1.0 } else { 0.0 };

    let mut nontrivial = 0.0;
    if all_unit {
        nontrivial += (n - m as f64) / n * avoid_zeros(m);
    }
    for (t, &a_t) in orders.iter().enumerate() {
        let others_unit = orders
            .iter()
            .enumerate()
            .all(|(j, &a)| j == t || a == 1);
        if others_unit {
            nontrivial += falling(r as f64, a_t) / n * avoid_zeros(m - 1);
        }
    }
    (1.0 - params.p) * trivial + params.p * nontrivial
}

/// Moments of one offspring count `nu_1` (and the cross moments with `nu_2`),
/// with standard errors that are zero for analytic reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean: f64,
    /// `E[(nu_1)_2]`
    pub falling2: f64,
    pub sigma2: f64,
    /// `E[nu_1^3]`
    pub third: f64,
    /// `E[(nu_1)_2 (nu_2)_2]`
    pub cross22: f64,
    /// `E[nu_1^2 nu_2^2]`
    pub square_cross: f64,
    pub mean_se: f64,
    pub falling2_se: f64,
    pub sigma2_se: f64,
    pub third_se: f64,
    pub cross22_se: f64,
    pub square_cross_se: f64,
}

impl MomentReport {
    /// `q(s+1) / (q(s) - 1) * E[nu^3] - E[nu_1^2 nu_2^2]`; nonnegative for
    /// every exchangeable law.
    pub fn cross_moment_residual(&self, q_s: u64, q_s1: u64) -> f64 {
        if q_s < 2 {
            return 0.0;
        }
        q_s1 as f64 / (q_s - 1) as f64 * self.third - self.square_cross
    }
}

pub fn exact_moments(law: &OffspringLaw, q_s: u64, q_s1: u64) -> Result<MomentReport> {
    let f = |orders: &[u32]| factorial_moment(law, q_s, q_s1, orders);
    let (f1, f2, f3) = (f(&[1])?, f(&[2])?, f(&[3])?);
    let (cross22, square_cross) = if q_s >= 2 {
        let c22 = f(&[2, 2])?;
        (c22, c22 + 2.0 * f(&[2, 1])? + f(&[1, 1])?)
    } else {
        (0.0, 0.0)
    };
    Ok(MomentReport {
        mean: f1,
        falling2: f2,
        sigma2: f2 + f1 - f1 * f1,
        third: f3 + 3.0 * f2 + f1,
        cross22,
        square_cross,
        mean_se: 0.0,
        falling2_se: 0.0,
        sigma2_se: 0.0,
        third_se: 0.0,
        cross22_se: 0.0,
        square_cross_se: 0.0,
    })
}

#[derive(Default)]
struct Accum {
    sum: f64,
    sum_sq: f64,
}

impl Accum {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean_se(&self, n: f64) -> (f64, f64) {
        let mean = self.sum / n;
        let var = ((self.sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Monte Carlo moments over `reps` independent offspring vectors.
pub fn estimate_moments<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_s: u64,
    q_s1: u64,
    reps: usize,
    rng: &mut R,
) -> Result<MomentReport> {
    if reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "estimate_moments needs reps >= 100, got {reps}"
        )));
    }
    let mut xs = Vec::with_capacity(reps);
    let (mut m1, mut f2, mut t3, mut c22, mut sc) = (
        Accum::default(),
        Accum::default(),
        Accum::default(),
        Accum::default(),
        Accum::default(),
    );
    let mut buf = Vec::new();
    for _ in 0..reps {
        sample_offspring_into(law, q_s, q_s1, rng, &mut buf)?;
        let x = buf[0] as f64;
        xs.push(x);
        m1.push(x);
        f2.push(x * (x - 1.0));
        t3.push(x * x * x);
        if q_s >= 2 {
            let y = buf[1] as f64;
            c22.push(x * (x - 1.0) * y * (y - 1.0));
            sc.push(x * x * y * y);
        }
    }
    let n = reps as f64;
    let (mean, mean_se) = m1.mean_se(n);
    let mut dev = Accum::default();
    for &x in &xs {
        dev.push((x - mean) * (x - mean));
    }
    let (sigma2, sigma2_se) = dev.mean_se(n);
    let (falling2, falling2_se) = f2.mean_se(n);
    let (third, third_se) = t3.mean_se(n);
    let (cross22, cross22_se) = if q_s >= 2 { c22.mean_se(n) } else { (0.0, 0.0) };
    let (square_cross, square_cross_se) = if q_s >= 2 { sc.mean_se(n) } else { (0.0, 0.0) };
    Ok(MomentReport {
        mean,
        falling2,
        sigma2: sigma2 * n / (n - 1.0),
        third,
        cross22,
        square_cross,
        mean_se,
        falling2_se,
        sigma2_se,
        third_se,
        cross22_se,
        square_cross_se,
    })
}

fn check_event(q_s: u64, q_s1: u64, multiplicities: &[u64]) -> Result<u64> {
    if multiplicities.contains(&0) {
        return Err(Error::InvalidParameter("multiplicities must be >= 1".into()));
    }
    let total: u64 = multiplicities.iter().sum();
    if total > q_s1 {
        return Err(Error::InfeasibleEvent {
            requested: total,
            available: q_s1,
        });
    }
    if multiplicities.len() as u64 > q_s {
        return Err(Error::InfeasibleEvent {
            requested: multiplicities.len() as u64,
            available: q_s,
        });
    }
    Ok(total)
}

/// Probability that `sum(N_i)` uniformly chosen distinct children of
/// generation `s+1`, split into consecutive groups of sizes `N_1, ..., N_m`,
/// have one common parent per group and distinct parents across groups:
/// `(q_s)_m E[prod (nu_i)_{N_i}] / (q_s1)_{sum N_i}`.
pub fn coal_event_prob(
    law: &OffspringLaw,
    q_s: u64,
    q_s1: u64,
    multiplicities: &[u64],
) -> Result<f64> {
    let total = check_event(q_s, q_s1, multiplicities)?;
    let orders: Vec<u32> = multiplicities.iter().map(|&k| k as u32).collect();
    let moment = factorial_moment(law, q_s, q_s1, &orders)?;
    let m = multiplicities.len() as u32;
    Ok(falling(q_s as f64, m) * moment / falling(q_s1 as f64, total as u32))
}

/// Monte Carlo estimate of [`coal_event_prob`] with its standard error.
pub fn estimate_coal_event_prob<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_s: u64,
    q_s1: u64,
    multiplicities: &[u64],
    reps: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let total = check_event(q_s, q_s1, multiplicities)? as usize;
    let mut buf = Vec::new();
    let mut prefix = Vec::with_capacity(q_s as usize);
    let mut hits = 0usize;
    for _ in 0..reps {
        sample_offspring_into(law, q_s, q_s1, rng, &mut buf)?;
        prefix.clear();
        let mut acc = 0u64;
        for &v in &buf {
            acc += v as u64;
            prefix.push(acc);
        }
        let children = index::sample(rng, q_s1 as usize, total).into_vec();
        let parent = |c: usize| prefix.partition_point(|&p| p <= c as u64);
        let mut group_parents = Vec::with_capacity(multiplicities.len());
        let mut ok = true;
        let mut pos = 0;
        for &k in multiplicities {
            let p0 = parent(children[pos]);
            if (1..k as usize).any(|j| parent(children[pos + j]) != p0) {
                ok = false;
                break;
            }
            group_parents.push(p0);
            pos += k as usize;
        }
        if ok {
            group_parents.sort_unstable();
            ok = group_parents.windows(2).all(|w| w[0] != w[1]);
        }
        hits += ok as usize;
    }
    let p = hits as f64 / reps as f64;
    Ok((p, (p * (1.0 - p) / reps as f64).sqrt()))
}

/// Law of a single offspring count `nu_1`, as a probability vector over `0..=q_s1`.
pub fn marginal_pmf(law: &OffspringLaw, q_s: u64, q_s1: u64) -> Result<Vec<f64>> {
    law.validate()?;
    let m = q_s1 as usize;
    let mut pmf = vec![0.0; m + 1];
    if q_s1 == 0 || q_s == 1 {
        pmf[m] = 1.0;
        return Ok(pmf);
    }
    match *law {
        OffspringLaw::WrightFisher => {
            let p = 1.0 / q_s as f64;
            for (k, slot) in pmf.iter_mut().enumerate() {
                *slot = (ln_binomial(q_s1, k as u64)
                    + k as f64 * p.ln()
                    + (m - k) as f64 * (1.0 - p).ln())
                .exp();
            }
        }
        OffspringLaw::DirichletMultinomial { theta } => {
            let (a, b) = (theta, (q_s - 1) as f64 * theta);
            let norm = ln_beta(a, b);
            for (k, slot) in pmf.iter_mut().enumerate() {
                *slot = (ln_binomial(q_s1, k as u64)
                    + ln_beta(k as f64 + a, (m - k) as f64 + b)
                    - norm)
                    .exp();
            }
        }
        OffspringLaw::Counterexample { alpha } => {
            let params = counterexample_params(alpha, q_s, q_s1)?;
            let n = params.n as f64;
            let r = params.r as usize;
            let p = params.p;
            pmf[1] += 1.0 - p;
            pmf[r] += p / n;
            pmf[0] += p * (r - 1) as f64 / n;
            pmf[1] += p * (params.n - params.r) as f64 / n;
        }
    }
    Ok(pmf)
}

/// `E[nu_1^2 1{nu_1 > k}]`, the uniform-integrability probe.
pub fn tail_second_moment(pmf: &[f64], k: u64) -> f64 {
    pmf.iter()
        .enumerate()
        .skip(k as usize + 1)
        .map(|(x, p)| (x * x) as f64 * p)
        .sum()
}

/// Numerical proxies for the moment conditions on a law at one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPredicateRow {
    pub n: u64,
    pub q_s: u64,
    pub q_s1: u64,
    /// `E[nu^3]`
    pub third: f64,
    /// `E[nu^3] / n`; must vanish as `n` grows
    pub third_over_n: f64,
    /// `E[nu^3] (ln n)^(2 + eps) / n`; must vanish for the strong third-moment condition
    pub third_log_ratio: f64,
    /// `E[nu^2 1{nu > K}]`; must vanish uniformly for L2-integrability
    pub tail_l2: f64,
    /// `p_n(m) n / (ln n)^(2(1 + eps))` with `m = floor((ln n)^(1 + eps))`;
    /// must stay bounded away from 0
    pub merge_ratio: f64,
}

pub fn h_predicate_row(
    law: &OffspringLaw,
    n: u64,
    q_s: u64,
    q_s1: u64,
    eps: f64,
    tail_k: u64,
) -> Result<HPredicateRow> {
    let moments = exact_moments(law, q_s, q_s1)?;
    let ln = (n as f64).ln();
    let pmf = marginal_pmf(law, q_s, q_s1)?;
    let m = (ln.powf(1.0 + eps).floor() as u64).clamp(2, q_s.min(q_s1).max(2));
    let merge_prob = if m <= q_s.min(q_s1) {
        1.0 - coal_event_prob(law, q_s, q_s1, &vec![1; m as usize])?
    } else {
        f64::NAN
    };
    Ok(HPredicateRow {
        n,
        q_s,
        q_s1,
        third: moments.third,
        third_over_n: moments.third / n as f64,
        third_log_ratio: moments.third * ln.powf(2.0 + eps) / n as f64,
        tail_l2: tail_second_moment(&pmf, tail_k),
        merge_ratio: merge_prob * n as f64 / ln.powf(2.0 * (1.0 + eps)),
    })
}
