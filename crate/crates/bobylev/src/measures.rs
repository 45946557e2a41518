//! Finitely supported probability measures on R^d.
//!
//! [`DiscreteMeasure`] is the concrete carrier for every measure-side
//! computation in the crate: a list of distinct support points with
//! nonnegative weights normalized to total mass one. Construction merges
//! bitwise-identical points (callers control any coarser deduplication) and
//! normalizes the weights, so quadrature-generated inputs with non-unit mass
//! are accepted.

use crate::{Error, Result};

/// A finitely supported probability measure: `n` distinct points in R^d with
/// positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    /// Flat row-major storage, `n * dim` entries.
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Outcome of the membership test for the class of measures with finite
/// moment of order `2k-2+α` and (when that order is at least one) zero mean.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub order: f64,
    pub moment: f64,
    pub mean_norm: f64,
    /// Whether the zero-mean condition applies at this order.
    pub mean_required: bool,
    pub mean_ok: bool,
    pub member: bool,
}

impl DiscreteMeasure {
    /// Build a measure from points and weights. Weights are normalized to
    /// total mass one; duplicate points (exact bitwise coordinate match) are
    /// merged by adding their weights.
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ParamDomain("dimension must be at least 1".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if points.is_empty() {
            return Err(Error::EmptySupport);
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index: i, value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        // Inputs already normalized to within rounding pass through
        // bit-exact, so text round trips are lossless.
        let total = if (total - 1.0).abs() <= 16.0 * f64::EPSILON {
            1.0
        } else {
            total
        };

        // Merge bitwise-equal points, first occurrence keeps its slot.
        let mut merged_points: Vec<f64> = Vec::with_capacity(points.len() * dim);
        let mut merged_weights: Vec<f64> = Vec::new();
        let mut index: std::collections::HashMap<Vec<u64>, usize> =
            std::collections::HashMap::new();
        for (p, &w) in points.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            let key: Vec<u64> = p.iter().map(|x| x.to_bits()).collect();
            match index.get(&key) {
                Some(&slot) => merged_weights[slot] += w / total,
                None => {
                    index.insert(key, merged_weights.len());
                    merged_weights.push(w / total);
                    merged_points.extend_from_slice(p);
                }
            }
        }
        if merged_weights.is_empty() {
            return Err(Error::EmptySupport);
        }
        // Renormalize once more so dropped zero weights cannot leave the sum
        // off by more than rounding.
        let s: f64 = merged_weights.iter().sum();
        if (s - 1.0).abs() > 16.0 * f64::EPSILON {
            for w in &mut merged_weights {
                *w /= s;
            }
        }
        Ok(DiscreteMeasure {
            dim,
            points: merged_points,
            weights: merged_weights,
        })
    }

    /// A unit point mass at `point`.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        Self::new(dim, vec![point], vec![1.0])
    }

    /// The symmetric two-point measure (δ_v + δ_{-v})/2.
    pub fn symmetric_pair(v: Vec<f64>) -> Result<Self> {
        let neg = v.iter().map(|x| -x).collect();
        let dim = v.len();
        Self::new(dim, vec![v, neg], vec![0.5, 0.5])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    /// Euclidean norm of support point `i`.
    pub fn radius(&self, i: usize) -> f64 {
        self.point(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Smallest nonzero support radius, if any point is off the origin.
    pub fn min_nonzero_radius(&self) -> Option<f64> {
        (0..self.len())
            .map(|i| self.radius(i))
            .filter(|&r| r > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn max_radius(&self) -> f64 {
        (0..self.len()).map(|i| self.radius(i)).fold(0.0, f64::max)
    }

    /// Absolute moment ∫ |v|^p dF(v), with the convention 0^0 = 1 so the
    /// zeroth moment is one for every measure including a mass at the origin.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(Error::ParamDomain(format!(
                "moment order p = {p} must be >= 0"
            )));
        }
        Ok(self
            .iter()
            .map(|(pt, w)| {
                let r2: f64 = pt.iter().map(|x| x * x).sum();
                w * r2.sqrt().powf(p)
            })
            .sum())
    }

    /// Tail moment ∫_{|v| >= r0} |v|^p dF(v), computed by direct summation.
    pub fn tail_moment(&self, p: f64, r0: f64) -> f64 {
        self.iter()
            .map(|(pt, w)| {
                let r = pt.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r >= r0 {
                    w * r.powf(p)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Component-wise mean ∫ v dF(v).
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (pt, w) in self.iter() {
            for (mj, x) in m.iter_mut().zip(pt) {
                *mj += w * x;
            }
        }
        m
    }

    /// Expectation of an arbitrary function of the support point.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(pt, w)| w * f(pt)).sum()
    }

    /// Translate so the mean vanishes (within rounding).
    pub fn center(&self) -> Self {
        let m = self.mean();
        let points = self
            .points
            .chunks_exact(self.dim)
            .map(|pt| pt.iter().zip(&m).map(|(x, mj)| x - mj).collect())
            .collect();
        // Re-merging cannot fail: same weights, translated points.
        DiscreteMeasure::new(self.dim, points, self.weights.clone())
            .expect("centering preserves validity")
    }

    /// Membership in the class of probability measures with finite moment of
    /// order `2k-2+α` and zero mean whenever that order is >= 1. The moment is
    /// always finite for a discrete measure; the report records both
    /// conditions.
    pub fn membership(&self, k: u32, alpha: f64) -> Result<MembershipReport> {
        check_order_params(k, alpha)?;
        let order = 2.0 * k as f64 - 2.0 + alpha;
        let moment = self.moment(order)?;
        let mean = self.mean();
        let mean_norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mean_required = order >= 1.0;
        let scale = 1.0 + self.max_radius();
        let mean_ok = mean_norm <= 1e-12 * scale;
        Ok(MembershipReport {
            order,
            moment,
            mean_norm,
            mean_required,
            mean_ok,
            member: !mean_required || mean_ok,
        })
    }

    /// True when the support is a single point (after merging).
    pub fn is_single_dirac(&self) -> bool {
        self.len() == 1
    }

    /// Serialize to the plain-text exchange format: a `dim n` header line,
    /// then one `w x1 ... xd` line per support point, every float printed
    /// with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.len());
        for (pt, w) in self.iter() {
            out.push_str(&crate::report::fmt_f64(w));
            for x in pt {
                out.push(' ');
                out.push_str(&crate::report::fmt_f64(*x));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the plain-text exchange format written by [`Self::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty measure file".into()))?;
        let mut it = header.split_whitespace();
        let dim: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("bad header: expected `dim n`".into()))?;
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("bad header: expected `dim n`".into()))?;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (i, line) in lines.take(n).enumerate() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))?;
            if vals.len() != dim + 1 {
                return Err(Error::Format(format!(
                    "line {}: expected {} values, got {}",
                    i + 2,
                    dim + 1,
                    vals.len()
                )));
            }
            weights.push(vals[0]);
            points.push(vals[1..].to_vec());
        }
        if points.len() != n {
            return Err(Error::Format(format!(
                "expected {n} support lines, found {}",
                points.len()
            )));
        }
        Self::new(dim, points, weights)
    }
}

/// Shared guard for the (k, α) parameter domain: integer k >= 1,
/// α ∈ [0, 2), k + α > 1.
pub fn check_order_params(k: u32, alpha: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::ParamDomain("k must be a positive integer".into()));
    }
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::ParamDomain(format!(
            "alpha = {alpha} must lie in [0, 2)"
        )));
    }
    if k as f64 + alpha <= 1.0 {
        return Err(Error::ParamDomain(format!(
            "k + alpha = {} must exceed 1",
            k as f64 + alpha
        )));
    }
    Ok(())
}
