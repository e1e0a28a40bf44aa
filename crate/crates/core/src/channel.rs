//! Finite channels, composition, the binary symmetric channel, squared
//! Hellinger distance and contraction coefficients.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_prob, Error, Result};
use crate::info::{kl_divergence, Distribution};

/// A row-stochastic table `P_{Y|X}`: row `x` is the output law given input `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Channel {
    rows: Vec<Distribution>,
}

impl Channel {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let n = rows.first().map(|r| r.len()).ok_or(Error::Empty)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Distribution::new).collect::<Result<_>>()?)
    }

    /// The noiseless channel on `n` symbols.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| Distribution::point_mass(n, i)).collect::<Result<_>>()?)
    }

    /// A deterministic map `x -> map[x]` onto `n` symbols.
    pub fn deterministic(map: &[usize], n: usize) -> Result<Self> {
        Self::new(map.iter().map(|&y| Distribution::point_mass(n, y)).collect::<Result<_>>()?)
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x].get(y)
    }
}

/// `BSC_δ` with crossover probability `δ ∈ [0, 1/2]`.
pub fn bsc(delta: f64) -> Result<Channel> {
    check_prob("BSC crossover", delta, 0.0, 0.5)?;
    Channel::from_rows(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
}

/// `P_Y = P_{Y|X} ∘ P_X`.
pub fn push_forward(ch: &Channel, prior: &Distribution) -> Result<Distribution> {
    if prior.len() != ch.input_size() {
        return Err(Error::DimensionMismatch { expected: ch.input_size(), found: prior.len() });
    }
    Ok(Distribution::from_raw(push_raw(ch, prior.probs())))
}

fn push_raw(ch: &Channel, prior: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ch.output_size()];
    for (px, row) in prior.iter().zip(&ch.rows) {
        for (o, p) in out.iter_mut().zip(row.probs()) {
            *o += px * p;
        }
    }
    out
}

/// Composition `second ∘ first`: feed `first`'s output into `second`.
pub fn stitch(second: &Channel, first: &Channel) -> Result<Channel> {
    if first.output_size() != second.input_size() {
        return Err(Error::DimensionMismatch {
            expected: second.input_size(),
            found: first.output_size(),
        });
    }
    let rows = first
        .rows
        .iter()
        .map(|r| Distribution::from_raw(push_raw(second, r.probs())))
        .collect();
    Ok(Channel { rows })
}

/// `Σ (√p − √q)²`, in `[0, 2]`.
pub fn hellinger_sq(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let s: f64 = p.probs().iter().zip(q.probs()).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok(s.clamp(0.0, 2.0))
}

/// `(H²/2, H² − H⁴/4)` for a binary-input channel with `H² = hellinger_sq(P₀, P₁)`.
pub fn contraction_bounds_hellinger(ch: &Channel) -> Result<(f64, f64)> {
    if ch.input_size() != 2 {
        return Err(Error::Precondition(format!(
            "Hellinger bounds need a binary-input channel, got {} inputs",
            ch.input_size()
        )));
    }
    let h2 = hellinger_sq(ch.row(0), ch.row(1))?;
    Ok((h2 / 2.0, h2 - h2 * h2 / 4.0))
}

/// `η(BSC_δ) = (1 − 2δ)²`.
pub fn contraction_bsc(delta: f64) -> Result<f64> {
    check_prob("BSC crossover", delta, 0.0, 0.5)?;
    Ok((1.0 - 2.0 * delta).powi(2))
}

/// Where the best ratio of a contraction search was attained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// `P(U = 1)` for the mutual-information search; absent for the KL search.
    pub lambda: Option<f64>,
    /// `P_{X|U=0}` (MI search) or `P_X` (KL search).
    pub p: Vec<f64>,
    /// `P_{X|U=1}` (MI search) or `Q_X` (KL search).
    pub q: Vec<f64>,
}

/// Search result bracketing a contraction coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<Witness>,
}

/// Smallest coordinate used by the searches, keeping ratios well defined.
pub const CLAMP: f64 = 1e-6;
/// Denominators below this are excluded from the ratio searches.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Cap on the number of grid points of a single search.
const GRID_BUDGET: usize = 4_000_000;
/// Number of grid maxima refined locally.
const REFINE_STARTS: usize = 8;

pub fn estimate_contraction_mi(ch: &Channel, resolution: usize) -> Result<ContractionEstimate> {
    let m = ch.input_size();
    let dims = 1 + 2 * (m - 1);
    let objective = |v: &[f64]| -> Option<f64> {
        let lambda = v[0];
        let p = simplex_point(&v[1..m]);
        let q = simplex_point(&v[m..]);
        mi_ratio(ch, lambda, &p, &q)
    };
    let best = search(dims, resolution, m, &objective)?;
    let witness = best.as_ref().map(|(_, v)| Witness {
        lambda: Some(v[0]),
        p: simplex_point(&v[1..m]),
        q: simplex_point(&v[m..]),
    });
    Ok(finish(ch, best.as_ref().map(|b| b.0), witness))
}

pub fn estimate_contraction_kl(ch: &Channel, resolution: usize) -> Result<ContractionEstimate> {
    let m = ch.input_size();
    let dims = 2 * (m - 1);
    let objective = |v: &[f64]| -> Option<f64> {
        let p = simplex_point(&v[..m - 1]);
        let q = simplex_point(&v[m - 1..]);
        kl_ratio(ch, &p, &q)
    };
    let best = search(dims, resolution, m, &objective)?;
    let witness = best.as_ref().map(|(_, v)| Witness {
        lambda: None,
        p: simplex_point(&v[..m - 1]),
        q: simplex_point(&v[m - 1..]),
    });
    Ok(finish(ch, best.as_ref().map(|b| b.0), witness))
}

fn finish(ch: &Channel, best: Option<f64>, witness: Option<Witness>) -> ContractionEstimate {
    let upper = contraction_bounds_hellinger(ch).map(|b| b.1.min(1.0)).unwrap_or(1.0);
    // A search value can exceed the analytic upper bound only through rounding.
    let lower = best.unwrap_or(0.0).clamp(0.0, upper);
    ContractionEstimate { lower, upper, witness }
}

/// Stick-breaking map from `[0,1]^{m-1}` onto the probability simplex.
fn simplex_point(coords: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coords.len() + 1);
    let mut rest = 1.0;
    for &c in coords {
        out.push(rest * c);
        rest *= 1.0 - c;
    }
    out.push(rest);
    out
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    d.max(0.0)
}

fn kl_ratio(ch: &Channel, p: &[f64], q: &[f64]) -> Option<f64> {
    let den = kl_raw(p, q);
    if !(den.is_finite() && den / std::f64::consts::LN_2 >= DENOMINATOR_FLOOR) {
        return None;
    }
    let num = kl_raw(&push_raw(ch, p), &push_raw(ch, q));
    Some(num / den)
}

/// `I(U;Y)/I(U;X)` for `U ~ Ber(λ)`, `X|U=0 ~ p`, `X|U=1 ~ q`, `Y|X ~ ch`.
fn mi_ratio(ch: &Channel, lambda: f64, p: &[f64], q: &[f64]) -> Option<f64> {
    let mi = |a: &[f64], b: &[f64]| {
        let mix: Vec<f64> = a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect();
        (1.0 - lambda) * kl_raw(a, &mix) + lambda * kl_raw(b, &mix)
    };
    let den = mi(p, q);
    if !(den.is_finite() && den / std::f64::consts::LN_2 >= DENOMINATOR_FLOOR) {
        return None;
    }
    let num = mi(&push_raw(ch, p), &push_raw(ch, q));
    Some(num / den)
}

fn grid_values(resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|i| (i as f64 / (resolution - 1) as f64).clamp(CLAMP, 1.0 - CLAMP))
        .collect()
}

/// Per-axis resolution so that the full grid fits the budget.
fn axis_resolution(dims: usize, resolution: usize) -> usize {
    let mut r = resolution;
    while r > 8 && (r as f64).powi(dims as i32) > GRID_BUDGET as f64 {
        r -= 1;
    }
    r
}

type Objective<'a> = dyn Fn(&[f64]) -> Option<f64> + Sync + 'a;

/// Grid search over `[CLAMP, 1 − CLAMP]^dims` followed by pattern-search
/// refinement of the best grid points. Ties go to the lowest grid index,
/// so the result does not depend on scheduling.
fn search(dims: usize, resolution: usize, m: usize, f: &Objective<'_>) -> Result<Option<(f64, Vec<f64>)>> {
    if resolution < 8 {
        return Err(Error::Precondition(format!("search resolution must be at least 8, got {resolution}")));
    }
    if !(2..=8).contains(&m) {
        return Err(Error::Precondition(format!("contraction search needs 2..=8 input symbols, got {m}")));
    }
    let r = axis_resolution(dims, resolution);
    let axis = grid_values(r);
    let total = r.pow(dims as u32);
    let point = |mut idx: usize| -> Vec<f64> {
        let mut v = vec![0.0; dims];
        for d in (0..dims).rev() {
            v[d] = axis[idx % r];
            idx /= r;
        }
        v
    };
    const CHUNK: usize = 4096;
    let per_chunk: Vec<Vec<(f64, usize)>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut top: Vec<(f64, usize)> = Vec::new();
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                if let Some(val) = f(&point(idx)) {
                    insert_top(&mut top, (val, idx));
                }
            }
            top
        })
        .collect();
    let mut top = Vec::new();
    for chunk in per_chunk {
        for e in chunk {
            insert_top(&mut top, e);
        }
    }
    if top.is_empty() {
        return Ok(None);
    }
    let step = 1.0 / (r - 1) as f64;
    let refined: Vec<(f64, Vec<f64>)> = top
        .par_iter()
        .map(|&(val, idx)| pattern_search(f, point(idx), val, step))
        .collect();
    let mut best = refined[0].clone();
    for cand in refined.into_iter().skip(1) {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    Ok(Some(best))
}

fn insert_top(top: &mut Vec<(f64, usize)>, e: (f64, usize)) {
    let better = |a: &(f64, usize), b: &(f64, usize)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    let pos = top.iter().position(|t| better(&e, t)).unwrap_or(top.len());
    if pos < REFINE_STARTS {
        top.insert(pos, e);
        top.truncate(REFINE_STARTS);
    }
}

fn pattern_search(f: &Objective<'_>, mut x: Vec<f64>, mut fx: f64, mut step: f64) -> (f64, Vec<f64>) {
    const MIN_STEP: f64 = 1e-10;
    while step > MIN_STEP {
        let mut improved = false;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + dir * step).clamp(CLAMP, 1.0 - CLAMP);
                if y[d] == x[d] {
                    continue;
                }
                if let Some(fy) = f(&y) {
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    (fx, x)
}

/// `D(P_Y ‖ Q_Y)` and `D(P_X ‖ Q_X)` in bits, exposed for checks.
pub fn kl_through(ch: &Channel, p: &Distribution, q: &Distribution) -> Result<(f64, f64)> {
    let py = push_forward(ch, p)?;
    let qy = push_forward(ch, q)?;
    Ok((kl_divergence(&py, &qy)?, kl_divergence(p, q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bsc_examples() {
        assert_eq!(bsc(0.0).unwrap(), Channel::identity(2).unwrap());
        let half = bsc(0.5).unwrap();
        assert_eq!(half.row(0).probs(), &[0.5, 0.5]);
        assert_eq!(half.row(1).probs(), &[0.5, 0.5]);
        let c = bsc(0.1).unwrap();
        assert_eq!(c.row(0).probs(), &[0.9, 0.1]);
        assert_eq!(c.row(1).probs(), &[0.1, 0.9]);
        assert!(bsc(0.6).is_err());
        assert!(bsc(-0.01).is_err());
    }

    #[test]
    fn push_forward_examples() {
        let prior = Distribution::bernoulli(0.3).unwrap();
        assert_eq!(push_forward(&Channel::identity(2).unwrap(), &prior).unwrap(), prior);
        let (a, d) = (0.3, 0.1);
        let y = push_forward(&bsc(d).unwrap(), &prior).unwrap();
        assert_abs_diff_eq!(y.get(1), a * (1.0 - d) + d * (1.0 - a), epsilon = 1e-15);
        let ch = Channel::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let y = push_forward(&ch, &Distribution::uniform(2).unwrap()).unwrap();
        assert_abs_diff_eq!(y.get(0), 0.4, epsilon = 1e-15);
        assert!(push_forward(&ch, &Distribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn stitch_examples() {
        let d = 0.1;
        let two = stitch(&bsc(d).unwrap(), &bsc(d).unwrap()).unwrap();
        let expected = bsc(2.0 * d * (1.0 - d)).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_abs_diff_eq!(two.prob(x, y), expected.prob(x, y), epsilon = 1e-15);
            }
        }
        let ch = Channel::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        assert_eq!(stitch(&Channel::identity(2).unwrap(), &ch).unwrap(), ch);
        let flat = stitch(&bsc(0.5).unwrap(), &ch).unwrap();
        assert!(flat.rows().iter().all(|r| r.probs() == [0.5, 0.5]));
        assert!(stitch(&Channel::identity(3).unwrap(), &ch).is_err());
    }

    #[test]
    fn hellinger_examples() {
        let p = Distribution::bernoulli(0.3).unwrap();
        assert_eq!(hellinger_sq(&p, &p).unwrap(), 0.0);
        let a = Distribution::point_mass(2, 0).unwrap();
        let b = Distribution::point_mass(2, 1).unwrap();
        assert_abs_diff_eq!(hellinger_sq(&a, &b).unwrap(), 2.0, epsilon = 1e-15);
        let c = bsc(0.25).unwrap();
        let h = hellinger_sq(c.row(0), c.row(1)).unwrap();
        assert_abs_diff_eq!(h, 2.0 - 4.0 * (0.25f64 * 0.75).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(h, 0.267949, epsilon = 1e-6);
    }

    #[test]
    fn hellinger_bound_examples() {
        assert_eq!(contraction_bounds_hellinger(&Channel::identity(2).unwrap()).unwrap(), (1.0, 1.0));
        assert_eq!(contraction_bounds_hellinger(&bsc(0.5).unwrap()).unwrap(), (0.0, 0.0));
        let (lo, hi) = contraction_bounds_hellinger(&bsc(0.25).unwrap()).unwrap();
        assert_abs_diff_eq!(lo, 0.133975, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.25, epsilon = 1e-12);
        assert!(contraction_bounds_hellinger(&Channel::identity(3).unwrap()).is_err());
    }

    #[test]
    fn contraction_bsc_examples() {
        assert_eq!(contraction_bsc(0.0).unwrap(), 1.0);
        assert_eq!(contraction_bsc(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(contraction_bsc(0.1).unwrap(), 0.64, epsilon = 1e-15);
    }

    #[test]
    fn mi_search_examples() {
        let e = estimate_contraction_mi(&bsc(0.1).unwrap(), 200).unwrap();
        assert!(e.lower >= 0.639 && e.lower <= 0.64 + 1e-9, "{e:?}");
        let id = estimate_contraction_mi(&Channel::identity(2).unwrap(), 16).unwrap();
        assert_abs_diff_eq!(id.lower, 1.0, epsilon = 1e-12);
        let flat = estimate_contraction_mi(&bsc(0.5).unwrap(), 16).unwrap();
        assert_eq!(flat.lower, 0.0);
        assert!(estimate_contraction_mi(&bsc(0.1).unwrap(), 7).is_err());
    }

    #[test]
    fn kl_search_examples() {
        let id = estimate_contraction_kl(&Channel::identity(2).unwrap(), 16).unwrap();
        assert_abs_diff_eq!(id.lower, 1.0, epsilon = 1e-12);
        let e = estimate_contraction_kl(&bsc(0.25).unwrap(), 64).unwrap();
        assert!((e.lower - 0.25).abs() < 5e-3, "{e:?}");
    }

    #[test]
    fn searches_agree_on_asymmetric_channel() {
        let ch = Channel::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let mi = estimate_contraction_mi(&ch, 64).unwrap();
        let kl = estimate_contraction_kl(&ch, 64).unwrap();
        assert!((mi.lower - kl.lower).abs() < 1e-2, "{mi:?} {kl:?}");
        assert!(mi.lower <= mi.upper && kl.lower <= kl.upper);
    }

    #[test]
    fn three_symbol_input_search_runs() {
        let ch = Channel::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let e = estimate_contraction_kl(&ch, 16).unwrap();
        assert!(e.lower > 0.0 && e.lower <= 1.0);
        assert_eq!(e.upper, 1.0);
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let p = simplex_point(&[0.3, 0.5]);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.35, epsilon = 1e-15);
    }
}
