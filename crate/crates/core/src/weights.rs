//! Weight sequences, SPOD/product weights and the constants that enter the
//! search criterion and the error bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf_poly::is_prime;

/// How the fluctuation magnitudes `beta_j` are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BetaFamily {
    /// `beta_j = c * j^(-theta)`.
    Power { c: f64, theta: f64 },
    /// Explicit finite list; entries beyond its end are zero.
    List { values: Vec<f64> },
}

/// A non-increasing sequence `beta_1 >= beta_2 >= ... >= 0` with a declared summability exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaSequenceRaw")]
pub struct BetaSequence {
    family: BetaFamily,
    p: f64,
}

#[derive(Deserialize)]
struct BetaSequenceRaw {
    family: BetaFamily,
    p: f64,
}

impl TryFrom<BetaSequenceRaw> for BetaSequence {
    type Error = Error;
    fn try_from(raw: BetaSequenceRaw) -> Result<Self> {
        BetaSequence::new(raw.family, raw.p)
    }
}

impl BetaSequence {
    pub fn new(family: BetaFamily, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} outside (0, 1]")));
        }
        match &family {
            BetaFamily::Power { c, theta } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParameter(format!("beta scale c = {c}")));
                }
                if !(theta * p > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power decay needs theta * p > 1 (theta = {theta}, p = {p})"
                    )));
                }
            }
            BetaFamily::List { values } => {
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter("beta values must be >= 0".into()));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidParameter("beta values must be non-increasing".into()));
                }
            }
        }
        Ok(BetaSequence { family, p })
    }

    pub fn power(c: f64, theta: f64, p: f64) -> Result<Self> {
        Self::new(BetaFamily::Power { c, theta }, p)
    }

    pub fn list(values: Vec<f64>, p: f64) -> Result<Self> {
        Self::new(BetaFamily::List { values }, p)
    }

    pub fn family(&self) -> &BetaFamily {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `beta_j` for 1-based `j`.
    pub fn get(&self, j: usize) -> f64 {
        assert!(j >= 1, "beta is indexed from 1");
        match &self.family {
            BetaFamily::Power { c, theta } => c * (j as f64).powf(-theta),
            BetaFamily::List { values } => values.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn first(&self, s: usize) -> Vec<f64> {
        (1..=s).map(|j| self.get(j)).collect()
    }

    /// `sum_j beta_j` over the whole sequence.
    pub fn total(&self) -> f64 {
        match &self.family {
            BetaFamily::Power { c, theta } => c * zeta(*theta),
            BetaFamily::List { values } => values.iter().sum(),
        }
    }
}

/// Riemann zeta for `x > 1` by Euler-Maclaurin summation.
pub fn zeta(x: f64) -> f64 {
    assert!(x > 1.0);
    const N: usize = 20;
    let n = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-x)).sum();
    // f(N)/2 + int_N^inf + Bernoulli corrections
    let mut tail = n.powf(-x) / 2.0 + n.powf(1.0 - x) / (x - 1.0);
    // B2/2!, B4/4!, B6/6!, B8/8! times the odd derivatives of k^-x at N
    let coeffs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0];
    let mut rising = x; // x (x+1) ... (x + 2i - 2)
    for (i, c) in coeffs.iter().enumerate() {
        let order = 2 * i + 1;
        tail += c * rising * n.powf(-x - order as f64);
        rising *= (x + order as f64) * (x + order as f64 + 1.0);
    }
    head + tail
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFamily {
    Spod,
    Product,
}

impl std::str::FromStr for WeightFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spod" => Ok(WeightFamily::Spod),
            "product" => Ok(WeightFamily::Product),
            other => Err(Error::InvalidParameter(format!("unknown weight family {other}"))),
        }
    }
}

impl std::fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightFamily::Spod => "spod",
            WeightFamily::Product => "product",
        })
    }
}

/// Serialized form of a [`WeightSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpecFile {
    pub family: WeightFamily,
    pub b: u32,
    pub alpha: usize,
    pub beta: BetaFamily,
    pub p: f64,
}

/// Weight family, interlacing factor and beta sequence for one construction.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    family: WeightFamily,
    b: u32,
    alpha: usize,
    beta: BetaSequence,
    c_alpha_b: f64,
}

impl WeightSpec {
    /// `alpha = None` selects `floor(1/p) + 1`.
    pub fn new(family: WeightFamily, b: u32, alpha: Option<usize>, beta: BetaSequence) -> Result<Self> {
        if !is_prime(b) {
            return Err(Error::NotPrime(b));
        }
        let alpha = match alpha {
            Some(a) => a,
            None => choose_alpha(beta.p())?,
        };
        if beta.p() <= 1.0 / alpha as f64 {
            return Err(Error::InvalidParameter(format!(
                "p = {} must exceed 1/alpha = {}",
                beta.p(),
                1.0 / alpha as f64
            )));
        }
        let c_alpha_b = c_alpha_b(alpha, b)?;
        Ok(WeightSpec {
            family,
            b,
            alpha,
            beta,
            c_alpha_b,
        })
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn beta(&self) -> &BetaSequence {
        &self.beta
    }

    pub fn p(&self) -> f64 {
        self.beta.p()
    }

    pub fn c_alpha_b(&self) -> f64 {
        self.c_alpha_b
    }

    /// `C_{alpha,b} b^(alpha(alpha-1)/2)`, the per-block multiplier of the transformed weights.
    pub fn block_multiplier(&self) -> f64 {
        self.c_alpha_b * (self.b as f64).powf((self.alpha * (self.alpha - 1)) as f64 / 2.0)
    }

    /// Weight `gamma_u` of this family for a 1-based coordinate set.
    pub fn gamma(&self, u: &[usize]) -> f64 {
        match self.family {
            WeightFamily::Spod => spod_weight(u, self),
            WeightFamily::Product => u.iter().map(|&j| product_weight(j, self)).product(),
        }
    }

    /// Transformed weight of a 1-based set `v` of pre-interlacing components.
    pub fn tilde_gamma(&self, v: &[usize]) -> f64 {
        let u = u_of_v(v, self.alpha);
        self.block_multiplier().powi(u.len() as i32) * self.gamma(&u)
    }

    /// Per-order factors `gamma_j(nu)` (SPOD) or per-coordinate `gamma_j` (product),
    /// with the block multiplier folded in.
    pub fn cbc_factors(&self, s: usize) -> BlockWeights {
        let mult = self.block_multiplier();
        match self.family {
            WeightFamily::Spod => BlockWeights::Spod(
                (1..=s)
                    .map(|j| {
                        let beta = self.beta.get(j);
                        (1..=self.alpha)
                            .map(|nu| mult * order_factor(nu, self.alpha) * beta.powi(nu as i32))
                            .collect()
                    })
                    .collect(),
            ),
            WeightFamily::Product => {
                BlockWeights::Product((1..=s).map(|j| mult * product_weight(j, self)).collect())
            }
        }
    }

    pub fn to_file(&self) -> WeightSpecFile {
        WeightSpecFile {
            family: self.family,
            b: self.b,
            alpha: self.alpha,
            beta: self.beta.family().clone(),
            p: self.beta.p(),
        }
    }

    pub fn from_file(file: &WeightSpecFile) -> Result<Self> {
        let beta = BetaSequence::new(file.beta.clone(), file.p)?;
        Self::new(file.family, file.b, Some(file.alpha), beta)
    }
}

/// Per-block weight data consumed by the fast CBC engines.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockWeights {
    /// `factors[j-1][nu-1] = gamma_j(nu)`.
    Spod(Vec<Vec<f64>>),
    /// `factors[j-1] = gamma_j`.
    Product(Vec<f64>),
}

impl BlockWeights {
    pub fn len(&self) -> usize {
        match self {
            BlockWeights::Spod(f) => f.len(),
            BlockWeights::Product(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transformed weight of a 1-based component set under block size `alpha`.
    pub fn tilde_gamma(&self, v: &[usize], alpha: usize) -> f64 {
        let u = u_of_v(v, alpha);
        match self {
            BlockWeights::Product(g) => u.iter().map(|&j| g[j - 1]).product(),
            BlockWeights::Spod(g) => {
                let rows: Vec<Vec<f64>> = u.iter().map(|&j| g[j - 1].clone()).collect();
                order_grouped_sum(&rows, 1.0)
            }
        }
    }
}

/// `2^delta(nu, alpha)`.
fn order_factor(nu: usize, alpha: usize) -> f64 {
    if nu == alpha {
        2.0
    } else {
        1.0
    }
}

/// `sum over nu in {1..}^|rows| of (|nu|!)^lambda prod_j rows[j][nu_j - 1]`, grouped by total order.
pub(crate) fn order_grouped_sum(rows: &[Vec<f64>], lambda: f64) -> f64 {
    // poly[l] = sum over nu with |nu| = l of prod rows
    let mut poly = vec![1.0f64];
    for row in rows {
        let mut next = vec![0.0f64; poly.len() + row.len()];
        for (l, &c) in poly.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (k, &r) in row.iter().enumerate() {
                next[l + k + 1] += c * r;
            }
        }
        poly = next;
    }
    let mut log_fact = 0.0f64;
    let mut total = 0.0;
    for (l, &c) in poly.iter().enumerate() {
        if l > 0 {
            log_fact += (l as f64).ln();
        }
        if c != 0.0 {
            total += c * (lambda * log_fact).exp();
        }
    }
    total
}

/// `floor(1/p) + 1`.
pub fn choose_alpha(p: f64) -> Result<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} outside (0, 1]")));
    }
    Ok((1.0 / p).floor() as usize + 1)
}

/// The Walsh-coefficient constant `C_{alpha,b}`.
pub fn c_alpha_b(alpha: usize, b: u32) -> Result<f64> {
    if alpha < 2 {
        return Err(Error::InvalidParameter(format!("C_(alpha,b) needs alpha >= 2, got {alpha}")));
    }
    if !is_prime(b) {
        return Err(Error::NotPrime(b));
    }
    let bf = b as f64;
    let two_sin = 2.0 * (PI / bf).sin();
    let mut lead = 2.0 / two_sin.powi(alpha as i32);
    for z in 1..alpha {
        lead = lead.max(1.0 / two_sin.powi(z as i32));
    }
    let middle = (1.0 + 1.0 / bf + 1.0 / (bf * (bf + 1.0))).powi(alpha as i32 - 2);
    let last = 3.0 + 2.0 / bf + (2.0 * bf + 1.0) / (bf - 1.0);
    Ok(lead * middle * last)
}

/// SPOD weight `gamma_u` for a 1-based coordinate set; `gamma_{} = 1`.
pub fn spod_weight(u: &[usize], spec: &WeightSpec) -> f64 {
    let alpha = spec.alpha();
    let rows: Vec<Vec<f64>> = u
        .iter()
        .map(|&j| {
            let beta = spec.beta().get(j);
            (1..=alpha)
                .map(|nu| order_factor(nu, alpha) * beta.powi(nu as i32))
                .collect()
        })
        .collect();
    order_grouped_sum(&rows, 1.0)
}

/// Product weight factor `gamma_j = sum_{nu=1}^alpha nu! 2^delta(nu,alpha) beta_j^nu`.
pub fn product_weight(j: usize, spec: &WeightSpec) -> f64 {
    let alpha = spec.alpha();
    let beta = spec.beta().get(j);
    let mut fact = 1.0;
    (1..=alpha)
        .map(|nu| {
            fact *= nu as f64;
            fact * order_factor(nu, alpha) * beta.powi(nu as i32)
        })
        .sum()
}

/// `u(v) = { ceil(j / alpha) : j in v }` for 1-based indices, sorted and deduplicated.
pub fn u_of_v(v: &[usize], alpha: usize) -> Vec<usize> {
    let mut u: Vec<usize> = v.iter().map(|&j| j.div_ceil(alpha)).collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Right-hand side of the `p = 1` smallness condition on `sum_j beta_j`.
pub fn smallness_threshold(b: u32) -> f64 {
    let bf = b as f64;
    let two_sin = 2.0 * (PI / bf).sin();
    let lead = (2.0 / (two_sin * two_sin)).max(1.0 / two_sin);
    1.0 / (4.0 * lead * (3.0 + 2.0 / bf + (2.0 * bf + 1.0) / (bf - 1.0)) * (2.0 + 1.0 / bf))
}

pub fn check_smallness(beta: &BetaSequence, b: u32) -> bool {
    beta.total() < smallness_threshold(b)
}
