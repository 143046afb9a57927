//! Precomputed table of the quantile curve gamma -> cbar_gamma(v) with O(1)
//! range-maximum queries, cubic interpolation between nodes, and a fast
//! interval-supremum used by the rule evaluator on Monte Carlo hot paths.

use rayon::prelude::*;

use crate::dist::{Distribution, Gamma, ModelParams, Tolerances};
use crate::error::{Error, Result};

/// Uniform grid of upper-v quantiles over a gamma range.
///
/// Node i sits at `(lo*(n-1-i) + hi*i)/(n-1)`; the blend form keeps the
/// endpoints exact and puts a node exactly at 0 for symmetric ranges with an
/// even interval count.
#[derive(Clone, Debug)]
pub struct QuantileGrid {
    params: ModelParams,
    level: f64,
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    tol: Tolerances,
    rmq: SparseArgmax,
}

impl QuantileGrid {
    /// Tabulates `cbar_gamma(v)` at spacing at most `step` over `[lo, hi]`.
    pub fn build(
        params: ModelParams,
        v: f64,
        lo: f64,
        hi: f64,
        step: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        if !(v > 0.0 && v < 1.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "grid level must satisfy 0 < v < 1, got {v}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!(
                "grid range must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("grid step must be positive, got {step}")));
        }
        tol.validate()?;
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let n = n.max(4);
        if n > 20_000_000 {
            return Err(Error::Domain(format!(
                "grid of {n} nodes is unreasonably large"
            )));
        }
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let g = blend(lo, hi, i, n);
                Distribution::with_tolerances(params, Gamma::new(g)?, tol).quantile(v)
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_parts(params, v, lo, hi, values, tol))
    }

    pub(crate) fn from_parts(
        params: ModelParams,
        level: f64,
        lo: f64,
        hi: f64,
        values: Vec<f64>,
        tol: Tolerances,
    ) -> Self {
        let rmq = SparseArgmax::new(&values);
        Self {
            params,
            level,
            lo,
            hi,
            values,
            tol,
            rmq,
        }
    }

    #[inline]
    pub fn params(&self) -> ModelParams {
        self.params
    }

    /// The quantile level v of the tabulated curve.
    #[inline]
    pub fn level(&self) -> f64 {
        self.level
    }

    #[inline]
    pub fn gamma_lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn gamma_hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.len() - 1) as f64
    }

    #[inline]
    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Abscissa of node `i`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        blend(self.lo, self.hi, i, self.len())
    }

    /// Tabulated value at node `i`.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_cover(&self, lo: f64, hi: f64) -> Result<()> {
        if !(lo >= self.lo && hi <= self.hi && lo <= hi) {
            return Err(Error::GridRange {
                lo,
                hi,
                grid_lo: self.lo,
                grid_hi: self.hi,
            });
        }
        Ok(())
    }

    /// Interpolated quantile at an arbitrary in-range gamma (4-point cubic;
    /// error far below the quantile tolerance at the default spacing).
    pub fn value_at(&self, gamma: f64) -> Result<f64> {
        self.check_cover(gamma, gamma)?;
        Ok(self.interp(gamma))
    }

    fn interp(&self, gamma: f64) -> f64 {
        let n = self.len();
        let h = self.step();
        let cell = (((gamma - self.lo) / h) as usize).min(n - 2);
        let base = cell.saturating_sub(1).min(n - 4);
        let tau = (gamma - self.node(base)) / h;
        let (v0, v1, v2, v3) = (
            self.values[base],
            self.values[base + 1],
            self.values[base + 2],
            self.values[base + 3],
        );
        let l0 = -(tau - 1.0) * (tau - 2.0) * (tau - 3.0) / 6.0;
        let l1 = tau * (tau - 2.0) * (tau - 3.0) / 2.0;
        let l2 = -tau * (tau - 1.0) * (tau - 3.0) / 2.0;
        let l3 = tau * (tau - 1.0) * (tau - 2.0) / 6.0;
        v0 * l0 + v1 * l1 + v2 * l2 + v3 * l3
    }

    /// Indices of the grid nodes inside `[lo, hi]`, if any.
    fn covered_nodes(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let n = self.len();
        let h = self.step();
        let mut i = (((lo - self.lo) / h).ceil() as isize).clamp(0, n as isize - 1) as usize;
        while self.node(i) < lo {
            if i + 1 == n {
                return None;
            }
            i += 1;
        }
        while i > 0 && self.node(i - 1) >= lo {
            i -= 1;
        }
        let mut j = (((hi - self.lo) / h).floor() as isize).clamp(0, n as isize - 1) as usize;
        while self.node(j) > hi {
            if j == 0 {
                return None;
            }
            j -= 1;
        }
        while j + 1 < n && self.node(j + 1) <= hi {
            j += 1;
        }
        if self.node(i) >= lo && self.node(j) <= hi && i <= j {
            Some((i, j))
        } else {
            None
        }
    }

    /// Supremum of the quantile curve over `[lo, hi]`: range-maximum over
    /// the covered nodes plus freshly solved quantiles at the two endpoints.
    pub fn interval_sup(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_cover(lo, hi)?;
        let mut best = f64::NEG_INFINITY;
        if let Some((i, j)) = self.covered_nodes(lo, hi) {
            best = self.values[self.rmq.argmax(&self.values, i, j)];
        }
        for g in [lo, hi] {
            let q = Distribution::with_tolerances(self.params, Gamma::new(g)?, self.tol)
                .quantile(self.level)?;
            best = best.max(q);
        }
        Ok(best)
    }

    /// Fast interval supremum: interpolated endpoints, range-maximum over
    /// interior nodes, and a parabolic vertex correction at the interior
    /// argmax. No quantile solves; suitable for per-replication use.
    pub(crate) fn interval_sup_fast(&self, lo: f64, hi: f64) -> Result<f64> {
        self.check_cover(lo, hi)?;
        let mut best = self.interp(lo).max(self.interp(hi));
        if let Some((i, j)) = self.covered_nodes(lo, hi) {
            let k = self.rmq.argmax(&self.values, i, j);
            best = best.max(self.values[k]);
            if k > 0 && k + 1 < self.len() {
                let (vm, v0, vp) = (self.values[k - 1], self.values[k], self.values[k + 1]);
                let curv = vm - 2.0 * v0 + vp;
                if curv < 0.0 {
                    let h = self.step();
                    let offset = 0.5 * (vm - vp) / curv;
                    let vertex_gamma = self.node(k) + offset * h;
                    if offset.abs() <= 1.0 && vertex_gamma >= lo && vertex_gamma <= hi {
                        best = best.max(v0 - (vm - vp) * (vm - vp) / (8.0 * curv));
                    }
                }
            }
        }
        Ok(best)
    }
}

#[inline]
fn blend(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    let d = (n - 1) as f64;
    (lo * (d - i as f64) + hi * i as f64) / d
}

/// Sparse (doubling) table answering range-argmax queries in O(1).
/// Ties resolve to the smaller index.
#[derive(Clone, Debug)]
struct SparseArgmax {
    layers: Vec<Vec<u32>>,
}

impl SparseArgmax {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let levels = usize::BITS - n.leading_zeros();
        let mut layers: Vec<Vec<u32>> = Vec::with_capacity(levels as usize);
        layers.push((0..n as u32).collect());
        let mut width = 1usize;
        while 2 * width <= n {
            let prev = layers.last().unwrap();
            let m = n - 2 * width + 1;
            let mut layer = Vec::with_capacity(m);
            for i in 0..m {
                let a = prev[i];
                let b = prev[i + width];
                layer.push(if values[b as usize] > values[a as usize] {
                    b
                } else {
                    a
                });
            }
            layers.push(layer);
            width *= 2;
        }
        Self { layers }
    }

    /// Index of the maximum over the inclusive node range [i, j].
    fn argmax(&self, values: &[f64], i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        let k = (usize::BITS - 1 - (j - i + 1).leading_zeros()) as usize;
        let a = self.layers[k][i];
        let b = self.layers[k][j + 1 - (1 << k)];
        if values[b as usize] > values[a as usize] {
            b as usize
        } else {
            a as usize
        }
    }
}
