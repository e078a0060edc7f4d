//! Component-by-component construction of interlaced polynomial lattice rules.
//!
//! The search criterion for a generating vector `q` of length `d` is
//!
//! ```text
//! E_d(q) = 1/b^m sum_n sum_{v != {}} gamma~_v prod_{j in v} omega(y_j^(n))
//! ```
//!
//! [`fast`] evaluates it for all candidates of one component at once with an
//! FFT-based mat-vec against the circulant-permuted kernel matrix; [`naive`]
//! enumerates subsets directly and serves as the reference on small instances.

pub mod fast;
pub mod naive;
pub mod omega;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::gf_poly::Modulus;
use crate::pointgen::{InterlacedRule, PolyLatticeRule};
use crate::weights::{BlockWeights, WeightSpec};

pub use fast::{cbc_fast, cbc_product, cbc_spod, criterion_trace};
pub use naive::{cbc_naive, cbc_naive_with, criterion_naive};
pub use omega::{direct_matvec, omega_kernel, omega_matrix_direct, rader_matvec, OmegaColumn, OmegaTable};

/// Relative width inside which two criterion values count as tied.
///
/// The criterion is a heavily cancelling sum; two algebraically equal routes differ
/// by up to ~1e-11 relative at `b^(alpha m) ~ 10^7`, so ties are resolved at 1e-9.
pub const TIE_RELATIVE: f64 = 1e-9;

/// Largest point count `b^m` the fast construction accepts (memory is a few `f64` per point and order).
pub const MAX_FAST_POINTS: u64 = 1 << 24;

/// Largest `alpha * s` for which `l!` stays inside double range in the SPOD recurrences.
pub const SPOD_ENVELOPE: usize = 120;

/// Output of a CBC construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CbcResult {
    pub modulus: Modulus,
    /// Interlacing factor (block size).
    pub alpha: usize,
    /// Order of the kernel used in the criterion (equals `alpha` for interlaced rules).
    pub kernel_order: usize,
    pub s: usize,
    /// Integer encodings of the selected polynomials, length `alpha * s`.
    pub q: Vec<u64>,
    /// `E_d(q*_1..q*_d)` for d = 1..alpha*s.
    pub criterion: Vec<f64>,
    pub family: String,
    pub wall_time: f64,
}

impl CbcResult {
    pub fn b(&self) -> u32 {
        self.modulus.base()
    }

    pub fn m(&self) -> usize {
        self.modulus.degree()
    }

    pub fn final_criterion(&self) -> f64 {
        self.criterion.last().copied().unwrap_or(0.0)
    }

    pub fn rule(&self) -> Result<InterlacedRule> {
        let base = PolyLatticeRule::from_encodings(self.modulus.clone(), &self.q)?;
        InterlacedRule::new(self.alpha, base)
    }
}

/// Source of transformed weights `gamma~_v` for 1-based component sets.
pub trait TildeWeights: Sync {
    fn tilde_gamma(&self, v: &[usize]) -> f64;
}

impl TildeWeights for WeightSpec {
    fn tilde_gamma(&self, v: &[usize]) -> f64 {
        WeightSpec::tilde_gamma(self, v)
    }
}

/// Per-block weights viewed through a block size.
pub struct BlockTilde<'a> {
    pub weights: &'a BlockWeights,
    pub alpha: usize,
}

impl TildeWeights for BlockTilde<'_> {
    fn tilde_gamma(&self, v: &[usize]) -> f64 {
        self.weights.tilde_gamma(v, self.alpha)
    }
}

/// Explicit table of `gamma~_v`; absent sets weigh zero.
#[derive(Clone, Debug, Default)]
pub struct GammaTable(pub BTreeMap<Vec<usize>, f64>);

impl TildeWeights for GammaTable {
    fn tilde_gamma(&self, v: &[usize]) -> f64 {
        self.0.get(v).copied().unwrap_or(0.0)
    }
}

/// Compensated sum.
pub(crate) fn neumaier<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Smallest encoding among candidates whose value lies within the tie band of the minimum.
///
/// `values[i]` belongs to encoding `encodings[i]`.
pub(crate) fn tie_break(encodings: &[u64], values: &[f64]) -> (u64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let band = min + TIE_RELATIVE * min.abs();
    encodings
        .iter()
        .zip(values)
        .filter(|(_, &v)| v <= band)
        .min_by_key(|(&q, _)| q)
        .map(|(&q, &v)| (q, v))
        .expect("at least one candidate")
}

/// Evaluates `f` for every candidate in parallel; each evaluation is sequential, so
/// results do not depend on the worker count.
pub(crate) fn par_eval<F>(candidates: &[u64], f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync,
{
    candidates.par_iter().map(|&q| f(q)).collect()
}
