//! Test integrands with closed-form regularity, QMC quadrature, reference integrals
//! and convergence experiments.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::optimize_lambda;
use crate::cbc::cbc_fast;
use crate::error::{Error, Result};
use crate::gf_poly::find_irreducible;
use crate::pointgen::{interlaced_points, PointSet};
use crate::weights::{choose_alpha, BetaSequence, BlockWeights, WeightFamily, WeightSpec};

/// A function on `[0,1]^s`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64]) -> f64;
}

/// Solution of the scalar affine equation `(a0 + sum_j a_j (y_j - 1/2)) u = f`, scaled by `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    pub a0: f64,
    pub a: Vec<f64>,
    pub f: f64,
    pub g: f64,
}

impl ParametricModel {
    pub fn new(a0: f64, a: Vec<f64>, f: f64, g: f64) -> Result<Self> {
        let model = ParametricModel { a0, a, f, g };
        if !(a0 > 0.0) || !(model.kappa() < 2.0) {
            return Err(Error::Model(format!(
                "need a0 > 0 and sum |a_j| < 2 a0 (a0 = {a0}, kappa = {})",
                model.kappa()
            )));
        }
        Ok(model)
    }

    /// `a_j = a0 beta_j` for `j = 1..s`.
    pub fn from_beta(beta: &BetaSequence, s: usize) -> Result<Self> {
        Self::new(1.0, beta.first(s), 1.0, 1.0)
    }

    /// `sum_j |a_j| / a0`.
    pub fn kappa(&self) -> f64 {
        self.a.iter().map(|x| x.abs()).sum::<f64>() / self.a0
    }

    pub fn denominator(&self, y: &[f64]) -> f64 {
        self.a0 + self.a.iter().zip(y).map(|(a, y)| a * (y - 0.5)).sum::<f64>()
    }

    /// Lower bound `a0 (1 - kappa/2)` of the denominator on the unit cube.
    pub fn coercivity(&self) -> f64 {
        self.a0 * (1.0 - self.kappa() / 2.0)
    }

    /// `c = |G f| / (a0 (1 - kappa/2))`.
    pub fn c(&self) -> f64 {
        (self.g * self.f).abs() / self.coercivity()
    }

    /// `beta_j = |a_j| / (a0 (1 - kappa/2))`.
    pub fn beta(&self) -> Vec<f64> {
        let mu = self.coercivity();
        self.a.iter().map(|a| a.abs() / mu).collect()
    }

    pub fn solution(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.a.len() {
            return Err(Error::DimensionMismatch {
                expected: self.a.len(),
                got: y.len(),
            });
        }
        let d = self.denominator(y);
        if !(d > 0.0) {
            return Err(Error::Model(format!("denominator {d} <= 0")));
        }
        Ok(self.g * self.f / d)
    }

    /// `(-1)^|nu| |nu|! G f prod a_j^nu_j / D^(|nu|+1)`.
    pub fn derivative(&self, y: &[f64], nu: &[usize]) -> f64 {
        let order: usize = nu.iter().sum();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        let mono: f64 = self.a.iter().zip(nu).map(|(a, &k)| a.powi(k as i32)).product();
        sign * factorial(order) * self.g * self.f * mono / self.denominator(y).powi(order as i32 + 1)
    }

    /// `c |nu|! beta^nu`.
    pub fn derivative_bound(&self, nu: &[usize]) -> f64 {
        let order: usize = nu.iter().sum();
        let mono: f64 = self.beta().iter().zip(nu).map(|(b, &k)| b.powi(k as i32)).product();
        self.c() * factorial(order) * mono
    }

    /// Norm bound for weights built on `beta_j = |a_j| / a0`.
    ///
    /// With those weights the derivative constants exceed them by `(1 - kappa/2)^-1` per
    /// order, and orders are at most `alpha s`.
    pub fn norm_bound(&self, alpha: usize) -> f64 {
        self.c() * (1.0 - self.kappa() / 2.0).powi(-((alpha * self.a.len()) as i32))
    }
}

impl Integrand for ParametricModel {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.g * self.f / self.denominator(y)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Closed form against finite differences (relative `1e-5`) and against `c |nu|! beta^nu`.
pub fn derivative_bound_check(model: &ParametricModel, y: &[f64], nu: &[usize]) -> bool {
    let exact = model.derivative(y, nu);
    let fd = finite_difference(model, y, nu);
    let scale = exact.abs().max(1e-300);
    let fd_ok = if nu.iter().zip(&model.a).any(|(&k, &a)| k > 0 && a == 0.0) {
        exact == 0.0 && fd.abs() <= 1e-12 * model.c()
    } else {
        (fd - exact).abs() <= 1e-5 * scale
    };
    fd_ok && exact.abs() <= model.derivative_bound(nu) * (1.0 + 1e-12)
}

/// Central differences with one Richardson step. The step in `y_j` is scaled by
/// `D/|a_j|` so every stencil moves the denominator by the same relative amount.
pub fn finite_difference(model: &ParametricModel, y: &[f64], nu: &[usize]) -> f64 {
    let d0 = model.denominator(y);
    let rel = 0.02;
    let steps: Vec<f64> = model
        .a
        .iter()
        .map(|a| if *a == 0.0 { 1e-3 } else { rel * d0 / a.abs() })
        .collect();
    let coarse = stencil_apply(model, y, nu, &steps, 1.0);
    let fine = stencil_apply(model, y, nu, &steps, 0.5);
    (4.0 * fine - coarse) / 3.0
}

/// Offsets and coefficients of the second-order central stencil for the k-th derivative.
fn stencil(k: usize) -> &'static [(f64, f64)] {
    match k {
        0 => &[(0.0, 1.0)],
        1 => &[(1.0, 0.5), (-1.0, -0.5)],
        2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
        3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
        _ => panic!("finite differences implemented up to order 3 per coordinate"),
    }
}

fn stencil_apply(model: &ParametricModel, y: &[f64], nu: &[usize], steps: &[f64], scale: f64) -> f64 {
    let active: Vec<usize> = (0..nu.len()).filter(|&j| nu[j] > 0).collect();
    let mut total = 0.0;
    let mut point = y.to_vec();
    fn rec(
        model: &ParametricModel,
        active: &[usize],
        nu: &[usize],
        steps: &[f64],
        scale: f64,
        point: &mut Vec<f64>,
        y: &[f64],
        coef: f64,
        total: &mut f64,
    ) {
        let Some((&j, rest)) = active.split_first() else {
            *total += coef * model.eval(point);
            return;
        };
        let h = steps[j] * scale;
        for &(off, c) in stencil(nu[j]) {
            point[j] = y[j] + off * h;
            rec(model, rest, nu, steps, scale, point, y, coef * c / h.powi(nu[j] as i32), total);
        }
        point[j] = y[j];
    }
    rec(model, &active, nu, steps, scale, &mut point, y, 1.0, &mut total);
    total
}

/// `prod_j (1 + c_j (y_j^2 - 1/3))`, exact integral 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTestIntegrand {
    pub c: Vec<f64>,
}

impl ProductTestIntegrand {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidParameter("coefficients must lie in [0, 1]".into()));
        }
        Ok(ProductTestIntegrand { c })
    }

    /// `c_j = min(1, beta_j)`.
    pub fn from_beta(beta: &BetaSequence, s: usize) -> Self {
        ProductTestIntegrand {
            c: beta.first(s).into_iter().map(|b| b.min(1.0)).collect(),
        }
    }

    /// `sup |g^(alpha)| + sum_{tau < alpha} |int g^(tau)|` for `g(y) = y^2 - 1/3`.
    fn factor_norm(alpha: usize) -> f64 {
        let sup = match alpha {
            1 => 2.0,
            2 => 2.0,
            _ => 0.0,
        };
        // int g = 0, int g' = 1, int g'' = 2, higher vanish
        let ints: f64 = (0..alpha).map(|tau| [0.0, 1.0, 2.0].get(tau).copied().unwrap_or(0.0)).sum();
        sup + ints
    }

    /// Norm in the product-weight space with per-coordinate weights `gamma_j`:
    /// `prod_j max(1, c_j h / gamma_j)`.
    pub fn norm(&self, alpha: usize, gamma: &[f64]) -> f64 {
        let h = Self::factor_norm(alpha);
        self.c
            .iter()
            .zip(gamma)
            .map(|(&c, &g)| {
                let t = c * h;
                if t == 0.0 {
                    1.0
                } else if g == 0.0 {
                    f64::INFINITY
                } else {
                    (t / g).max(1.0)
                }
            })
            .product()
    }
}

impl Integrand for ProductTestIntegrand {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.c
            .iter()
            .zip(y)
            .map(|(c, y)| 1.0 + c * (y * y - 1.0 / 3.0))
            .product()
    }
}

/// Pairwise sum with a fixed split, independent of the worker count.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let (lo, hi) = x.split_at(x.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// `1/N sum_n F(y_n)`.
pub fn qmc_integrate(f: &dyn Integrand, pts: &PointSet) -> Result<f64> {
    if f.dim() != pts.s() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: pts.s(),
        });
    }
    let values: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|n| f.eval(&pts.row_f64(n)))
        .collect();
    Ok(pairwise_sum(&values) / pts.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub uncertainty: f64,
}

/// Largest dimension handled by the tensor Gauss-Legendre path.
pub const TENSOR_MAX_DIM: usize = 4;

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).expect("positive degree"))
        .as_node_weight_pairs()
        .to_vec()
}

/// Tensor Gauss-Legendre on `[0,1]^s` with `n` nodes per axis.
pub fn tensor_gauss(f: &dyn Integrand, n: usize) -> f64 {
    let s = f.dim();
    let rule: Vec<(f64, f64)> = gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
        .collect();
    let total = n.pow(s as u32);
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut y = vec![0.0; s];
            let mut w = 1.0;
            for yj in y.iter_mut() {
                let (x, wj) = rule[idx % n];
                *yj = x;
                w *= wj;
                idx /= n;
            }
            w * f.eval(&y)
        })
        .collect();
    pairwise_sum(&values)
}

/// `G f int_0^inf exp(-t (a0 - sum a_j / 2)) prod_j phi(t a_j) dt`, `phi(z) = (1 - e^-z)/z`.
///
/// Composite Gauss-Legendre on `[0, T]` with `panels` panels of 16 nodes.
fn laplace_quadrature(model: &ParametricModel, panels: usize, t_max: f64) -> f64 {
    let rule = gauss_legendre(16);
    let c0 = model.a0 - model.a.iter().sum::<f64>() / 2.0;
    let phi = |z: f64| if z == 0.0 { 1.0 } else { -(-z).exp_m1() / z };
    let width = t_max / panels as f64;
    let values: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let lo = p as f64 * width;
            rule.iter()
                .map(|&(x, w)| {
                    let t = lo + (x + 1.0) / 2.0 * width;
                    let prod: f64 = model.a.iter().map(|&a| phi(t * a)).product();
                    w * width / 2.0 * (-t * c0).exp() * prod
                })
                .sum::<f64>()
        })
        .collect();
    model.g * model.f * pairwise_sum(&values)
}

/// Reference value of `int_[0,1]^s u` for the model.
///
/// `s <= 4`: tensor Gauss-Legendre with 64 nodes, uncertainty from 32 nodes.
/// Larger `s`: the one-dimensional Laplace representation, uncertainty from panel doubling
/// plus the truncated tail.
pub fn reference_model(model: &ParametricModel) -> Result<Reference> {
    let s = model.a.len();
    if s <= TENSOR_MAX_DIM {
        let fine = tensor_gauss(model, 64);
        let coarse = tensor_gauss(model, 32);
        return Ok(Reference {
            value: fine,
            uncertainty: (fine - coarse).abs(),
        });
    }
    let rate = model.coercivity();
    let t_max = 60.0 / rate;
    let fine = laplace_quadrature(model, 256, t_max);
    let coarse = laplace_quadrature(model, 128, t_max);
    let tail = (model.g * model.f).abs() * (-rate * t_max).exp() / rate;
    Ok(Reference {
        value: fine,
        uncertainty: (fine - coarse).abs() + tail,
    })
}

/// Integrand selection for experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrandKind {
    Model,
    Product,
}

impl std::str::FromStr for IntegrandKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "model" => Ok(IntegrandKind::Model),
            "product" => Ok(IntegrandKind::Product),
            other => Err(Error::InvalidParameter(format!("unknown integrand {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub integrand: IntegrandKind,
    pub family: WeightFamily,
    pub b: u32,
    pub s: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub beta: BetaSequence,
    /// `None` selects `floor(1/p) + 1`.
    pub alpha: Option<usize>,
    /// Also run a non-interlaced (order 1) rule on the same integrand.
    pub baseline: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: usize,
    pub n: u64,
    pub estimate: f64,
    pub error: f64,
    /// Certified bound on the error (worst-case error bound times norm bound).
    pub bound: f64,
    pub q: Vec<u64>,
    pub baseline_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ConvergenceConfig,
    pub alpha: usize,
    pub reference: Reference,
    pub norm: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log_b(error)` against `m`.
    pub slope: Option<f64>,
    pub baseline_slope: Option<f64>,
    /// Values of `m` used in the fits.
    pub fit_m: Vec<usize>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,N,error,bound");
        if self.config.baseline {
            out.push_str(",baseline_error");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.17e},{:.17e}", r.m, r.n, r.error, r.bound));
            if let Some(e) = r.baseline_error {
                out.push_str(&format!(",{e:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Summary without per-row generating vectors.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "alpha": self.alpha,
            "reference": self.reference,
            "norm": self.norm,
            "slope": self.slope,
            "baseline_slope": self.baseline_slope,
            "fit_m": self.fit_m,
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "m": r.m, "N": r.n, "error": r.error, "bound": r.bound,
                "baseline_error": r.baseline_error,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Minimum number of usable points for a slope.
pub const MIN_FIT_POINTS: usize = 4;

fn fit(ms: &[usize], errors: &[f64], floor: f64, b: u32) -> (Option<f64>, Vec<usize>) {
    let lb = (b as f64).ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ms
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 10.0 * floor && e > 0.0)
        .map(|(&m, &e)| (m as f64, e.ln() / lb))
        .unzip();
    let used: Vec<usize> = xs.iter().map(|&x| x as usize).collect();
    if xs.len() < MIN_FIT_POINTS {
        return (None, used);
    }
    (ls_slope(&xs, &ys), used)
}

/// One rule per `m`, errors against the reference, slopes of `log_b(error)` in `m`.
pub fn convergence_experiment(config: &ConvergenceConfig) -> Result<ConvergenceReport> {
    let alpha = match config.alpha {
        Some(a) => a,
        None => choose_alpha(config.beta.p())?,
    };
    let spec = WeightSpec::new(config.family, config.b, Some(alpha), config.beta.clone())?;
    let s = config.s;
    let (integrand, reference, norm): (Box<dyn Integrand>, Reference, f64) = match config.integrand {
        IntegrandKind::Model => {
            let model = ParametricModel::from_beta(&config.beta, s)?;
            let reference = reference_model(&model)?;
            let norm = model.norm_bound(alpha);
            (Box::new(model), reference, norm)
        }
        IntegrandKind::Product => {
            let f = ProductTestIntegrand::from_beta(&config.beta, s);
            // SPOD weights dominate the product weights coordinatewise, so the product norm
            // bounds the SPOD norm as well
            let gamma: Vec<f64> = (1..=s).map(|j| crate::weights::product_weight(j, &spec)).collect();
            let norm = f.norm(alpha, &gamma);
            (Box::new(f), Reference { value: 1.0, uncertainty: 0.0 }, norm)
        }
    };
    let weights = spec.cbc_factors(s);
    let baseline_weights = BlockWeights::Product(config.beta.first(s));
    let mut rows = Vec::new();
    for m in config.m_min..=config.m_max {
        let modulus = find_irreducible(config.b, m)?;
        let res = cbc_fast(&modulus, alpha, alpha, &weights)?;
        let pts = interlaced_points(&res.rule()?);
        let estimate = qmc_integrate(integrand.as_ref(), &pts)?;
        let error = (estimate - reference.value).abs();
        let wce = optimize_lambda(&spec, m, s)?.best_bound.min(res.final_criterion());
        let baseline_error = if config.baseline {
            let base = cbc_fast(&modulus, 1, 2, &baseline_weights)?;
            let pts = interlaced_points(&base.rule()?);
            Some((qmc_integrate(integrand.as_ref(), &pts)? - reference.value).abs())
        } else {
            None
        };
        rows.push(ConvergenceRow {
            m,
            n: modulus.order(),
            estimate,
            error,
            bound: wce * norm,
            q: res.q,
            baseline_error,
        });
    }
    let ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let floor = reference.uncertainty.max(1e-15);
    let (slope, fit_m) = fit(&ms, &errors, floor, config.b);
    let baseline_slope = if config.baseline {
        let be: Vec<f64> = rows.iter().map(|r| r.baseline_error.unwrap_or(0.0)).collect();
        fit(&ms, &be, floor, config.b).0
    } else {
        None
    };
    Ok(ConvergenceReport {
        config: config.clone(),
        alpha,
        reference,
        norm,
        rows,
        slope,
        baseline_slope,
        fit_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::{classical_points, PolyLatticeRule};

    #[test]
    fn model_examples() {
        let m = ParametricModel::new(1.0, vec![0.5], 1.0, 1.0).unwrap();
        assert!((m.solution(&[1.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(m.solution(&[0.5]).unwrap(), 1.0);
        let flat = ParametricModel::new(2.0, vec![0.0, 0.0], 3.0, 1.0).unwrap();
        assert_eq!(flat.solution(&[0.1, 0.9]).unwrap(), 1.5);
        assert!(ParametricModel::new(1.0, vec![1.5, 0.6], 1.0, 1.0).is_err());
        // first derivative at the midpoint is -G f a1 / a0^2
        assert!((m.derivative(&[0.5], &[1]) + 0.5).abs() < 1e-15);
        assert!(derivative_bound_check(&m, &[0.5], &[0]));
        assert!(derivative_bound_check(&m, &[0.2], &[3]));
    }

    #[test]
    fn mixed_finite_differences() {
        let m = ParametricModel::new(1.3, vec![0.7, -0.4, 0.05], 2.0, -0.5).unwrap();
        for nu in [[1, 1, 0], [2, 0, 1], [1, 1, 1], [0, 0, 3]] {
            for y in [[0.1, 0.5, 0.9], [0.0, 1.0, 0.3]] {
                assert!(derivative_bound_check(&m, &y, &nu), "{nu:?} {y:?}");
            }
        }
    }

    #[test]
    fn reference_one_dimensional() {
        let m = ParametricModel::new(1.0, vec![0.5], 1.0, 1.0).unwrap();
        let r = reference_model(&m).unwrap();
        let exact = 2.0 * (5.0f64 / 3.0).ln();
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.uncertainty < 1e-12);
    }

    #[test]
    fn laplace_agrees_with_tensor() {
        let m = ParametricModel::new(1.0, vec![0.4, -0.3, 0.2, 0.1], 1.0, 1.0).unwrap();
        let tensor = tensor_gauss(&m, 40);
        let laplace = laplace_quadrature(&m, 256, 60.0 / m.coercivity());
        assert!((tensor - laplace).abs() < 1e-13, "{tensor} {laplace}");
    }

    #[test]
    fn qmc_exact_cases() {
        let modulus = find_irreducible(2, 6).unwrap();
        let rule = PolyLatticeRule::from_encodings(modulus, &[1, 13]).unwrap();
        let pts = classical_points(&rule);
        struct Affine;
        impl Integrand for Affine {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, y: &[f64]) -> f64 {
                3.0 * y[1] - 1.0
            }
        }
        let n = 64.0;
        let expect = 3.0 * (n - 1.0) / (2.0 * n) - 1.0;
        assert!((qmc_integrate(&Affine, &pts).unwrap() - expect).abs() < 1e-14);
        let flat = ProductTestIntegrand::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(qmc_integrate(&flat, &pts).unwrap(), 1.0);
        let wrong = ProductTestIntegrand::new(vec![0.0]).unwrap();
        assert!(qmc_integrate(&wrong, &pts).is_err());
    }

    #[test]
    fn product_norm_values() {
        let f = ProductTestIntegrand::new(vec![0.5, 0.1]).unwrap();
        assert_eq!(ProductTestIntegrand::factor_norm(2), 3.0);
        assert!((f.norm(2, &[0.5, 1.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand_has_no_slope() {
        let config = ConvergenceConfig {
            integrand: IntegrandKind::Product,
            family: WeightFamily::Product,
            b: 2,
            s: 3,
            m_min: 3,
            m_max: 7,
            beta: BetaSequence::list(vec![0.0, 0.0, 0.0], 0.6).unwrap(),
            alpha: None,
            baseline: false,
        };
        let r = convergence_experiment(&config).unwrap();
        assert!(r.rows.iter().all(|row| row.error <= 1e-15));
        assert!(r.slope.is_none());
    }
}
