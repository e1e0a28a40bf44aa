//! Exact information measures over finite alphabets, in bits.
//!
//! `0 log 0` is taken to be 0. A divergence with `p(x) > 0 = q(x)` is
//! `f64::INFINITY`.

use serde::Serialize;

use crate::error::{check_prob, Error, Result};

/// Tolerance on the total mass of a distribution or table.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

fn check_entries(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in p.iter().enumerate() {
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(Error::InvalidEntry { index, value });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// A probability vector over `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        Ok(Self(probs))
    }

    /// Rescales non-negative weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            let (index, &value) =
                weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0).unwrap();
            return Err(Error::InvalidEntry { index, value });
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Empty);
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::DimensionMismatch { expected: n, found: at });
        }
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Ok(Self(v))
    }

    /// `(1 - p, p)`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_prob("Bernoulli parameter", p, 0.0, 1.0)?;
        Ok(Self(vec![1.0 - p, p]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self(probs)
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn entropy_of(p: &[f64]) -> f64 {
    (-p.iter().map(|&x| plogp(x)).sum::<f64>()).max(0.0)
}

fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

pub fn entropy(d: &Distribution) -> f64 {
    entropy_of(d.probs())
}

/// `H(α) = -α log α - (1-α) log(1-α)`.
pub fn binary_entropy(alpha: f64) -> Result<f64> {
    check_prob("binary entropy argument", alpha, 0.0, 1.0)?;
    Ok(entropy_of(&[alpha, 1.0 - alpha]))
}

/// Relative entropy `D(p || q)`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(kl_of(p.probs(), q.probs()))
}

/// A probability table over a product of finite alphabets, row-major
/// (last axis varies fastest).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointTable {
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("invalid joint table shape {shape:?}")));
        }
        let size: usize = shape.iter().product();
        if size != probs.len() {
            return Err(Error::DimensionMismatch { expected: size, found: probs.len() });
        }
        check_entries(&probs)?;
        Ok(Self { shape, probs })
    }

    pub fn normalized(shape: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let d = Distribution::normalized(weights)?;
        Self::new(shape, d.0)
    }

    /// Joint of `X ~ prior` and `Y | X` given by `rows[x]`: axes `(X, Y)`.
    pub fn from_prior_and_rows(prior: &Distribution, rows: &[Distribution]) -> Result<Self> {
        if rows.len() != prior.len() {
            return Err(Error::DimensionMismatch { expected: prior.len(), found: rows.len() });
        }
        let n = rows.first().map(|r| r.len()).ok_or(Error::Empty)?;
        let mut probs = Vec::with_capacity(prior.len() * n);
        for (px, row) in prior.probs().iter().zip(rows) {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            probs.extend(row.probs().iter().map(|p| px * p));
        }
        Self::new(vec![prior.len(), n], probs)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.shape[i + 1];
        }
        s
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for &a in axes {
            if a >= self.rank() || std::mem::replace(&mut seen[a], true) {
                return Err(Error::Shape(format!("invalid axis list {axes:?} for rank {}", self.rank())));
            }
        }
        Ok(())
    }

    /// Marginal over `axes`, kept in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointTable> {
        self.check_axes(axes)?;
        if axes.is_empty() {
            return Err(Error::Shape("marginal over no axes".into()));
        }
        let strides = self.strides();
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut out = vec![0.0; shape.iter().product()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let mut idx = 0;
            for &a in axes {
                idx = idx * self.shape[a] + (flat / strides[a]) % self.shape[a];
            }
            out[idx] += p;
        }
        Ok(JointTable { shape, probs: out })
    }

    /// Collapses a group of axes into one (mixed-radix, first axis most significant).
    fn grouped(&self, groups: &[&[usize]]) -> Result<JointTable> {
        let all: Vec<usize> = groups.iter().flat_map(|g| g.iter().copied()).collect();
        let m = self.marginal(&all)?;
        let shape = groups
            .iter()
            .map(|g| g.iter().map(|&a| self.shape[a]).product())
            .collect();
        Ok(JointTable { shape, probs: m.probs })
    }

    pub fn to_distribution(&self) -> Distribution {
        Distribution(self.probs.clone())
    }

    /// Joint entropy over `axes`.
    pub fn entropy_of(&self, axes: &[usize]) -> Result<f64> {
        Ok(entropy_of(&self.marginal(axes)?.probs))
    }

    /// `H(A | B)` for disjoint axis groups.
    pub fn conditional_entropy_of(&self, target: &[usize], given: &[usize]) -> Result<f64> {
        if given.is_empty() {
            return self.entropy_of(target);
        }
        let t = self.grouped(&[given, target])?;
        let (ny, nx) = (t.shape[0], t.shape[1]);
        let mut h = 0.0;
        for y in 0..ny {
            let row = &t.probs[y * nx..(y + 1) * nx];
            let py: f64 = row.iter().sum();
            if py > 0.0 {
                let cond: Vec<f64> = row.iter().map(|p| p / py).collect();
                h += py * entropy_of(&cond);
            }
        }
        Ok(h)
    }

    /// `I(A; B)` computed as `D(P_AB || P_A P_B)`.
    pub fn mutual_information_of(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        let t = self.grouped(&[a, b])?;
        Ok(mi_2d(&t.probs, t.shape[0], t.shape[1]))
    }

    /// `I(A; B | C)` computed as `E_C D(P_AB|C || P_A|C P_B|C)`.
    pub fn conditional_mutual_information_of(&self, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
        if c.is_empty() {
            return self.mutual_information_of(a, b);
        }
        let t = self.grouped(&[c, a, b])?;
        let (nz, nx, ny) = (t.shape[0], t.shape[1], t.shape[2]);
        let block = nx * ny;
        let mut total = 0.0;
        for z in 0..nz {
            let slab = &t.probs[z * block..(z + 1) * block];
            let pz: f64 = slab.iter().sum();
            if pz > 0.0 {
                let cond: Vec<f64> = slab.iter().map(|p| p / pz).collect();
                total += pz * mi_2d(&cond, nx, ny);
            }
        }
        Ok(total)
    }
}

fn mi_2d(p: &[f64], nx: usize, ny: usize) -> f64 {
    let mut px = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            px[x] += p[x * ny + y];
            py[y] += p[x * ny + y];
        }
    }
    let product: Vec<f64> = (0..nx * ny).map(|i| px[i / ny] * py[i % ny]).collect();
    kl_of(p, &product)
}

fn require_rank(joint: &JointTable, rank: usize) -> Result<()> {
    if joint.rank() == rank {
        Ok(())
    } else {
        Err(Error::Shape(format!("expected a rank-{rank} table, got rank {}", joint.rank())))
    }
}

/// `H(X | Y)` for a table over `(X, Y)`.
pub fn conditional_entropy(joint: &JointTable) -> Result<f64> {
    require_rank(joint, 2)?;
    joint.conditional_entropy_of(&[0], &[1])
}

/// `I(X; Y)` for a table over `(X, Y)`.
pub fn mutual_information(joint: &JointTable) -> Result<f64> {
    require_rank(joint, 2)?;
    joint.mutual_information_of(&[0], &[1])
}

/// `I(X; Y | Z)` for a table over `(X, Y, Z)`.
pub fn conditional_mutual_information(joint: &JointTable) -> Result<f64> {
    require_rank(joint, 3)?;
    joint.conditional_mutual_information_of(&[0], &[1], &[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary_entropy_oracle(a: f64) -> f64 {
        let t = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
        t(a) + t(1.0 - a)
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&Distribution::uniform(2).unwrap()), 1.0, epsilon = 1e-15);
        assert_eq!(entropy(&Distribution::point_mass(3, 1).unwrap()), 0.0);
        let h = entropy(&Distribution::bernoulli(0.11).unwrap());
        assert_abs_diff_eq!(h, binary_entropy_oracle(0.11), epsilon = 1e-15);
        assert_abs_diff_eq!(h, 0.49995, epsilon = 1e-4);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.25).unwrap(), 0.811278, epsilon = 1e-6);
        assert_abs_diff_eq!(binary_entropy(0.3).unwrap(), binary_entropy(0.7).unwrap(), epsilon = 1e-15);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn distribution_construction() {
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        let d = Distribution::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn conditional_entropy_examples() {
        let indep = JointTable::new(vec![2, 2], vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        assert_abs_diff_eq!(
            conditional_entropy(&indep).unwrap(),
            binary_entropy_oracle(0.4),
            epsilon = 1e-12
        );
        let diag = JointTable::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&diag).unwrap(), 0.0, epsilon = 1e-15);
        let bsc = JointTable::new(vec![2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        assert_abs_diff_eq!(conditional_entropy(&bsc).unwrap(), 0.468996, epsilon = 1e-6);
    }

    #[test]
    fn kl_examples() {
        let half = Distribution::bernoulli(0.5).unwrap();
        let quarter = Distribution::bernoulli(0.25).unwrap();
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);
        // ½(−2 log 2 − log q − log(1−q)) at q = 1/4.
        let q: f64 = 0.25;
        let expected = 0.5 * (-2.0 * 2f64.log2() - q.log2() - (1.0 - q).log2());
        assert_abs_diff_eq!(kl_divergence(&half, &quarter).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.207519, epsilon = 1e-6);
        let one = Distribution::bernoulli(1.0).unwrap();
        let zero = Distribution::bernoulli(0.0).unwrap();
        assert_eq!(kl_divergence(&one, &zero).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&half, &Distribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let indep = JointTable::new(vec![2, 2], vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        assert_abs_diff_eq!(mutual_information(&indep).unwrap(), 0.0, epsilon = 1e-15);
        let same = JointTable::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mutual_information(&same).unwrap(), 1.0, epsilon = 1e-15);
        let bsc = JointTable::new(vec![2, 2], vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&bsc).unwrap(),
            1.0 - binary_entropy_oracle(0.1),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(mutual_information(&bsc).unwrap(), 0.531004, epsilon = 1e-6);
    }

    #[test]
    fn conditional_mi_examples() {
        let px = [0.3, 0.7];
        let py = [0.6, 0.4];
        let pz = [0.2, 0.8];
        let mut probs = Vec::new();
        for x in px {
            for y in py {
                for z in pz {
                    probs.push(x * y * z);
                }
            }
        }
        let t = JointTable::new(vec![2, 2, 2], probs).unwrap();
        assert_abs_diff_eq!(conditional_mutual_information(&t).unwrap(), 0.0, epsilon = 1e-14);

        // Constant Z: equals I(X;Y).
        let xy = [0.4, 0.1, 0.2, 0.3];
        let mut probs = Vec::new();
        for p in xy {
            probs.push(p);
            probs.push(0.0);
        }
        let t = JointTable::new(vec![2, 2, 2], probs).unwrap();
        let two = JointTable::new(vec![2, 2], xy.to_vec()).unwrap();
        assert_abs_diff_eq!(
            conditional_mutual_information(&t).unwrap(),
            mutual_information(&two).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn conditional_mi_matches_chain_rule_residual() {
        // Hand-picked 2x2x2 joint; both sides computed by brute force.
        let probs = vec![0.05, 0.15, 0.10, 0.20, 0.12, 0.08, 0.18, 0.12];
        let t = JointTable::new(vec![2, 2, 2], probs.clone()).unwrap();
        let brute_mi = |a_of: &dyn Fn(usize) -> usize, b_of: &dyn Fn(usize) -> usize, na: usize, nb: usize| {
            let mut joint = vec![0.0; na * nb];
            for (i, p) in probs.iter().enumerate() {
                joint[a_of(i) * nb + b_of(i)] += p;
            }
            let pa: Vec<f64> = (0..na).map(|a| (0..nb).map(|b| joint[a * nb + b]).sum()).collect();
            let pb: Vec<f64> = (0..nb).map(|b| (0..na).map(|a| joint[a * nb + b]).sum()).collect();
            let mut s = 0.0;
            for a in 0..na {
                for b in 0..nb {
                    let p = joint[a * nb + b];
                    if p > 0.0 {
                        s += p * (p / (pa[a] * pb[b])).log2();
                    }
                }
            }
            s
        };
        let x = |i: usize| i >> 2;
        let y = |i: usize| (i >> 1) & 1;
        let z = |i: usize| i & 1;
        let yz = |i: usize| i & 3;
        let residual = brute_mi(&x, &yz, 2, 4) - brute_mi(&x, &z, 2, 2);
        let _ = y;
        assert_abs_diff_eq!(conditional_mutual_information(&t).unwrap(), residual, epsilon = 1e-14);
    }

    #[test]
    fn marginals_and_groups() {
        let t = JointTable::normalized(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let m = t.marginal(&[1]).unwrap();
        assert_eq!(m.shape(), &[3]);
        assert_abs_diff_eq!(m.probs()[0], 5.0 / 21.0, epsilon = 1e-15);
        let swapped = t.marginal(&[1, 0]).unwrap();
        assert_abs_diff_eq!(swapped.probs()[1], 4.0 / 21.0, epsilon = 1e-15);
        assert!(t.marginal(&[0, 0]).is_err());
        assert!(t.marginal(&[2]).is_err());
        assert!(mutual_information(&JointTable::new(vec![1, 1, 1], vec![1.0]).unwrap()).is_err());
    }
}
