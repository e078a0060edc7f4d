//! Certified CBC error bounds, lambda optimization, and dual-net oracles.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf_poly::{checked_pow, poly_mulmod, Modulus, PolyGF};
use crate::pointgen::{interlace_integer, mu_alpha, PointSet, PolyLatticeRule};
use crate::weights::{
    c_alpha_b, check_smallness, u_of_v, WeightFamily, WeightSpec,
};

/// Number of uniform grid points in `optimize_lambda`.
pub const LAMBDA_GRID: usize = 50;
/// Offset of the lowest grid point above the pole at `1/alpha`.
pub const LAMBDA_OFFSET: f64 = 1e-3;

fn check_lambda(lambda: f64, alpha: usize) -> Result<()> {
    if !(lambda > 1.0 / alpha as f64 && lambda <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda = {lambda} outside (1/{alpha}, 1]"
        )));
    }
    Ok(())
}

/// `(C b^(alpha(alpha-1)/2))^lambda ((1 + (b-1)/(b^(alpha lambda) - b))^alpha - 1)`.
pub fn rho_alpha_b(lambda: f64, alpha: usize, b: u32) -> Result<f64> {
    check_lambda(lambda, alpha)?;
    let bf = b as f64;
    let mult = c_alpha_b(alpha, b)? * bf.powf((alpha * (alpha - 1)) as f64 / 2.0);
    let inner = (1.0 + geometric_ratio(lambda, alpha, b)?).powi(alpha as i32) - 1.0;
    let rho = mult.powf(lambda) * inner;
    if !rho.is_finite() {
        return Err(Error::Envelope(format!("rho overflows at lambda = {lambda}")));
    }
    Ok(rho)
}

/// `(b-1)/(b^(alpha lambda) - b)`.
fn geometric_ratio(lambda: f64, alpha: usize, b: u32) -> Result<f64> {
    let bf = b as f64;
    let denom = bf.powf(alpha as f64 * lambda) - bf;
    if denom <= 0.0 || !((bf - 1.0) / denom).is_finite() {
        return Err(Error::Envelope(format!(
            "lambda = {lambda} too close to the pole at 1/{alpha}"
        )));
    }
    Ok((bf - 1.0) / denom)
}

/// `B = C b^(alpha(alpha-1)/2) ((1 + (b-1)/(b^(alpha lambda) - b))^alpha - 1)^(1/lambda)`.
pub fn b_constant(lambda: f64, alpha: usize, b: u32) -> Result<f64> {
    check_lambda(lambda, alpha)?;
    let bf = b as f64;
    let mult = c_alpha_b(alpha, b)? * bf.powf((alpha * (alpha - 1)) as f64 / 2.0);
    let inner = (1.0 + geometric_ratio(lambda, alpha, b)?).powi(alpha as i32) - 1.0;
    Ok(mult * inner.powf(1.0 / lambda))
}

/// Upper bound on `E_(alpha s)(q*)` for the rule built by CBC with `spec` at `(m, s)`;
/// `+inf` when the value exceeds double range.
///
/// SPOD: `(2/(b^m-1) sum_{0 != nu in {0..alpha}^s} (|nu|!)^lambda prod (B 2^delta beta_j^nu_j)^lambda)^(1/lambda)`.
/// Product: `(2/(b^m-1) exp(sum_j (B gamma_j)^lambda))^(1/lambda)`.
pub fn cbc_bound(lambda: f64, spec: &WeightSpec, m: usize, s: usize) -> Result<f64> {
    let alpha = spec.alpha();
    let b = spec.b();
    let big_b = b_constant(lambda, alpha, b)?;
    let lead = 2.0 / ((b as f64).powi(m as i32) - 1.0);
    // log of the inner sum; the product form is evaluated without exponentiating
    let log_sum = match spec.family() {
        WeightFamily::Spod => {
            let rows: Vec<Vec<f64>> = (1..=s)
                .map(|j| {
                    let beta = spec.beta().get(j);
                    (1..=alpha)
                        .map(|nu| {
                            let two = if nu == alpha { 2.0 } else { 1.0 };
                            (big_b * two * beta.powi(nu as i32)).powf(lambda)
                        })
                        .collect()
                })
                .collect();
            sum_over_supports(&rows, lambda).ln()
        }
        WeightFamily::Product => (1..=s)
            .map(|j| (big_b * crate::weights::product_weight(j, spec)).powf(lambda))
            .sum(),
    };
    // may be +inf when the bound leaves double range near the pole
    Ok(((lead.ln() + log_sum) / lambda).exp())
}

/// `sum_{0 != nu in {0..alpha}^s} (|nu|!)^lambda prod_{nu_j > 0} rows[j][nu_j - 1]`.
fn sum_over_supports(rows: &[Vec<f64>], lambda: f64) -> f64 {
    // poly[l] = sum over nu with |nu| = l, zero orders allowed
    let mut poly = vec![1.0f64];
    for row in rows {
        let mut next = poly.clone();
        next.resize(poly.len() + row.len(), 0.0);
        for (l, &c) in poly.iter().enumerate() {
            for (k, &r) in row.iter().enumerate() {
                next[l + k + 1] += c * r;
            }
        }
        poly = next;
    }
    let mut log_fact = 0.0f64;
    let mut total = 0.0;
    for (l, &c) in poly.iter().enumerate().skip(1) {
        log_fact += (l as f64).ln();
        if c != 0.0 {
            total += c * (lambda * log_fact).exp();
        }
    }
    total
}

/// The unresolved form `(2/(b^m-1) sum_v gamma~_v^lambda ((b-1)/(b^(alpha lambda)-b))^|v|)^(1/lambda)`
/// by subset enumeration; `d <= 20`.
pub fn cbc_bound_subsets(
    lambda: f64,
    alpha: usize,
    b: u32,
    m: usize,
    d: usize,
    tilde_gamma: &dyn Fn(&[usize]) -> f64,
) -> Result<f64> {
    check_lambda(lambda, alpha)?;
    if d > 20 {
        return Err(Error::ScaleGuard(format!("subset enumeration with d = {d} > 20")));
    }
    let ratio = geometric_ratio(lambda, alpha, b)?;
    let mut total = 0.0;
    let mut v = Vec::with_capacity(d);
    for mask in 1u32..(1 << d) {
        v.clear();
        v.extend((0..d).filter(|j| mask >> j & 1 == 1).map(|j| j + 1));
        total += tilde_gamma(&v).powf(lambda) * ratio.powi(v.len() as i32);
    }
    Ok((2.0 / ((b as f64).powi(m as i32) - 1.0) * total).powf(1.0 / lambda))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: WeightFamily,
    pub b: u32,
    pub alpha: usize,
    pub p: f64,
    pub m: usize,
    pub s: usize,
    pub lambdas: Vec<f64>,
    pub bounds: Vec<f64>,
    pub best_lambda: f64,
    pub best_bound: f64,
    pub bound_at_p: f64,
    /// Smallness condition on `sum beta_j`; reported only for `p = 1`.
    pub smallness: Option<bool>,
}

/// Uniform grid of [`LAMBDA_GRID`] values in `(1/alpha + offset, 1]` with `p` inserted.
pub fn lambda_grid(alpha: usize, p: f64) -> Vec<f64> {
    let lo = 1.0 / alpha as f64 + LAMBDA_OFFSET;
    let step = (1.0 - lo) / (LAMBDA_GRID - 1) as f64;
    let mut grid: Vec<f64> = (0..LAMBDA_GRID)
        .map(|i| if i + 1 == LAMBDA_GRID { 1.0 } else { lo + step * i as f64 })
        .collect();
    if p > 1.0 / alpha as f64 && p <= 1.0 && !grid.iter().any(|&l| l == p) {
        grid.push(p);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

/// Evaluates [`cbc_bound`] on [`lambda_grid`] and reports the minimum.
pub fn optimize_lambda(spec: &WeightSpec, m: usize, s: usize) -> Result<BoundReport> {
    let p = spec.p();
    let lambdas = lambda_grid(spec.alpha(), p);
    let bounds = lambdas
        .iter()
        .map(|&l| cbc_bound(l, spec, m, s).unwrap_or(f64::INFINITY))
        .collect::<Vec<_>>();
    let (best_lambda, best_bound) = lambdas
        .iter()
        .zip(&bounds)
        .fold((p, f64::INFINITY), |acc, (&l, &v)| if v < acc.1 { (l, v) } else { acc });
    let bound_at_p = cbc_bound(p, spec, m, s)?;
    Ok(BoundReport {
        family: spec.family(),
        b: spec.b(),
        alpha: spec.alpha(),
        p,
        m,
        s,
        lambdas,
        bounds,
        best_lambda,
        best_bound,
        bound_at_p,
        smallness: (p == 1.0).then(|| check_smallness(spec.beta(), spec.b())),
    })
}

/// `wal_k(y)` for `y = y_num / b^digits`.
pub fn walsh_eval(k: u64, y_num: u64, digits: usize, b: u32) -> Complex<f64> {
    let e = walsh_exponent(k, y_num, digits, b);
    if e == 0 {
        return Complex::new(1.0, 0.0);
    }
    if b == 2 {
        return Complex::new(-1.0, 0.0);
    }
    Complex::from_polar(1.0, 2.0 * PI * e as f64 / b as f64)
}

/// `sum_i kappa_i y_(i+1) mod b`.
pub fn walsh_exponent(k: u64, y_num: u64, digits: usize, b: u32) -> u32 {
    let bb = b as u64;
    let mut k = k;
    let mut acc = 0u64;
    let mut i = 0usize;
    while k > 0 && i < digits {
        let kappa = k % bb;
        if kappa != 0 {
            let y_digit = (y_num / bb.pow((digits - 1 - i) as u32)) % bb;
            acc += kappa * y_digit;
        }
        k /= bb;
        i += 1;
    }
    (acc % bb) as u32
}

/// `1/N sum_n prod_{j in v} wal_(k_j)(y_j^(n))`; `v` holds 0-based columns.
pub fn character_sum(pts: &PointSet, v: &[usize], k: &[u64]) -> Complex<f64> {
    assert_eq!(v.len(), k.len(), "one frequency per coordinate of v");
    let b = pts.b();
    let digits = pts.digits();
    if b == 2 {
        let total: i64 = pts
            .rows()
            .map(|row| {
                let e: u32 = v.iter().zip(k).map(|(&j, &kj)| walsh_exponent(kj, row[j], digits, b)).sum();
                if e % 2 == 0 { 1 } else { -1 }
            })
            .sum();
        return Complex::new(total as f64 / pts.len() as f64, 0.0);
    }
    // exponents add mod b, so count residues and evaluate b roots once
    let mut counts = vec![0u64; b as usize];
    for row in pts.rows() {
        let e: u32 = v.iter().zip(k).map(|(&j, &kj)| walsh_exponent(kj, row[j], digits, b)).sum();
        counts[(e % b) as usize] += 1;
    }
    let total: Complex<f64> = counts
        .iter()
        .enumerate()
        .map(|(r, &c)| Complex::from_polar(c as f64, 2.0 * PI * r as f64 / b as f64))
        .sum();
    total / pts.len() as f64
}

/// `(b-1)/(b^alpha - b)`: sum of `b^(-alpha mu_1(k))` over all `k >= 1`.
pub fn slot_sum(alpha: usize, b: u32) -> f64 {
    let bf = b as f64;
    (bf - 1.0) / (bf.powi(alpha as i32) - bf)
}

/// Sum of `b^(-alpha mu_1(k))` over `k >= b^K`.
pub fn slot_tail(alpha: usize, b: u32, k_cut: usize) -> f64 {
    let bf = b as f64;
    let r = bf.powi(1 - alpha as i32);
    (bf - 1.0) / bf * r.powi(k_cut as i32 + 1) / (1.0 - r)
}

/// Partial sum over the truncated dual with an upper bound on the discarded terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub partial: f64,
    pub tail: f64,
}

impl Truncated {
    /// Whether `x` lies in `[partial, partial + tail]` up to `slack`.
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.partial - slack && x <= self.partial + self.tail + slack
    }
}

struct DualWalk<'a> {
    modulus: &'a Modulus,
    qs: &'a [PolyGF],
    upper: u64,
    q_last_inv: PolyGF,
}

impl DualWalk<'_> {
    fn rec<F: FnMut(&[u64])>(&self, idx: usize, syn: PolyGF, ls: &mut [u64], visit: &mut F) {
        let b = self.modulus.base();
        let m = self.modulus.degree();
        let last = self.qs.len() - 1;
        if idx == last {
            // tr_m(l_last) = -syn / q_last; digits at positions >= m are free
            let need = poly_mulmod(&syn.scale(b - 1), &self.q_last_inv, self.modulus).expect("same base");
            let step = checked_pow(b, m).unwrap_or(u64::MAX);
            let mut l = need.to_int();
            while l < self.upper {
                if l != 0 {
                    ls[last] = l;
                    visit(ls);
                }
                l = l.saturating_add(step);
            }
            return;
        }
        for l in 1..self.upper {
            let tr = PolyGF::from_int(b, l).truncate(m);
            let next = self.modulus.reduce(&(&syn + &(&tr * &self.qs[idx])));
            ls[idx] = l;
            self.rec(idx + 1, next, ls, visit);
        }
    }
}

/// Visits every `l_v` with components in `1..b^K` and `sum tr_m(l_j) q_j = 0 mod P`.
fn for_each_dual<F: FnMut(&[u64])>(modulus: &Modulus, qs: &[PolyGF], k_cut: usize, mut visit: F) -> Result<()> {
    let b = modulus.base();
    let upper = checked_pow(b, k_cut).ok_or_else(|| Error::Envelope(format!("{b}^{k_cut} overflows")))?;
    if qs.is_empty() || k_cut == 0 {
        return Ok(());
    }
    let walk = DualWalk {
        modulus,
        qs,
        upper,
        q_last_inv: qs[qs.len() - 1].pow_mod(modulus.order() - 2, modulus.poly()),
    };
    let mut ls = vec![0u64; qs.len()];
    walk.rec(0, PolyGF::zero(b), &mut ls, &mut visit);
    Ok(())
}

/// `sum_{l_v in dual, l_j < b^K} prod_j b^(-alpha mu_1(l_j))` with the tail of all omitted terms.
///
/// By the kernel identity this brackets `1/N sum_n prod_{j in v} omega(y_j^(n))` for the
/// columns `v` (0-based) of `rule`.
pub fn dual_kernel_sum_truncated(rule: &PolyLatticeRule, v: &[usize], alpha: usize, k_cut: usize) -> Result<Truncated> {
    let b = rule.b();
    let qs: Vec<PolyGF> = v.iter().map(|&j| rule.generating()[j].clone()).collect();
    let bf = b as f64;
    let mut partial = 0.0;
    for_each_dual(rule.modulus(), &qs, k_cut, |ls| {
        let e: u32 = ls.iter().map(|&l| mu_alpha(l, 1, b)).sum();
        partial += bf.powi(-(alpha as i32) * e as i32);
    })?;
    let full = slot_sum(alpha, b);
    let kept = full - slot_tail(alpha, b, k_cut);
    let tail = full.powi(v.len() as i32) - kept.powi(v.len() as i32);
    Ok(Truncated { partial, tail })
}

/// Truncated dual-net worst-case error of the interlaced rule with generating vector `q`
/// (length `alpha s`) under `spec`, with an upper bound on the discarded terms.
pub fn dualnet_wce_truncated(modulus: &Modulus, q: &[u64], spec: &WeightSpec, k_cut: usize) -> Result<Truncated> {
    let b = modulus.base();
    let m = modulus.degree();
    let alpha = spec.alpha();
    let d = q.len();
    if modulus.order() > 32 || d > 6 || k_cut > m + 4 || d % alpha != 0 {
        return Err(Error::ScaleGuard(format!(
            "dual enumeration limited to b^m <= 32, alpha s <= 6, K <= m + 4 (got b^m = {}, alpha s = {d}, K = {k_cut})",
            modulus.order()
        )));
    }
    let rule = PolyLatticeRule::from_encodings(modulus.clone(), q)?;
    let c = c_alpha_b(alpha, b)?;
    let bf = b as f64;
    let full = slot_sum(alpha, b);
    let kept = full - slot_tail(alpha, b, k_cut);
    let mut partial = 0.0;
    let mut tail = 0.0;
    for mask in 1u32..(1 << d) {
        let v: Vec<usize> = (0..d).filter(|j| mask >> j & 1 == 1).collect();
        let v1: Vec<usize> = v.iter().map(|j| j + 1).collect();
        let u = u_of_v(&v1, alpha);
        let weight = c.powi(u.len() as i32) * spec.gamma(&u);
        let qs: Vec<PolyGF> = v.iter().map(|&j| rule.generating()[j].clone()).collect();
        let mut acc = 0.0;
        for_each_dual(modulus, &qs, k_cut, |ls| {
            let mut full_l = vec![0u64; d];
            for (&j, &l) in v.iter().zip(ls) {
                full_l[j] = l;
            }
            let e: u32 = full_l
                .chunks(alpha)
                .map(|block| mu_alpha(interlace_integer(block, b), alpha, b))
                .sum();
            acc += bf.powi(-(e as i32));
        })?;
        partial += weight * acc;
        let block_gain = bf.powf((alpha * (alpha - 1)) as f64 / 2.0).powi(u.len() as i32);
        tail += weight * block_gain * (full.powi(v.len() as i32) - kept.powi(v.len() as i32));
    }
    Ok(Truncated { partial, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf_poly::find_irreducible;
    use crate::pointgen::classical_points;
    use crate::pointgen::dual_membership;
    use crate::weights::BetaSequence;

    #[test]
    fn rho_examples() {
        assert!((rho_alpha_b(1.0, 2, 2).unwrap() - 11.25).abs() < 1e-12);
        assert!(rho_alpha_b(0.5, 2, 2).is_err());
        assert!(rho_alpha_b(0.5 + 1e-12, 2, 2).unwrap() > 1e6);
        for alpha in 2..=4 {
            for b in [2u32, 3] {
                let mut l = 1.0 / alpha as f64 + 0.01;
                while l <= 1.0 {
                    let r = rho_alpha_b(l, alpha, b).unwrap();
                    assert!(r.is_finite() && r > 0.0);
                    l += 0.01;
                }
            }
        }
    }

    #[test]
    fn spod_bound_single_coordinate() {
        let beta = 0.3;
        let spec = WeightSpec::new(WeightFamily::Spod, 2, Some(2), BetaSequence::list(vec![beta], 0.6).unwrap()).unwrap();
        for lambda in [0.6, 0.8, 1.0] {
            let bb = b_constant(lambda, 2, 2).unwrap();
            let sum = (bb * beta).powf(lambda) + 2f64.powf(lambda) * (2.0 * bb * beta * beta).powf(lambda);
            let expect = (2.0 / 15.0 * sum).powf(1.0 / lambda);
            let got = cbc_bound(lambda, &spec, 4, 1).unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect, "{got} {expect}");
        }
        let zero = WeightSpec::new(WeightFamily::Spod, 2, Some(2), BetaSequence::list(vec![0.0], 0.6).unwrap()).unwrap();
        assert_eq!(cbc_bound(0.7, &zero, 4, 3).unwrap(), 0.0);
    }

    #[test]
    fn resolved_bounds_dominate_subset_form() {
        for family in [WeightFamily::Spod, WeightFamily::Product] {
            let spec = WeightSpec::new(family, 2, Some(2), BetaSequence::power(0.5, 2.0, 0.6).unwrap()).unwrap();
            for lambda in lambda_grid(2, 0.6) {
                let exact = cbc_bound_subsets(lambda, 2, 2, 5, 6, &|v| spec.tilde_gamma(v)).unwrap();
                let resolved = cbc_bound(lambda, &spec, 5, 3).unwrap();
                assert!(exact <= resolved * (1.0 + 1e-12), "{family} {lambda}");
            }
        }
    }

    #[test]
    fn report_contains_p() {
        let spec = WeightSpec::new(WeightFamily::Spod, 2, None, BetaSequence::power(0.5, 2.0, 0.6).unwrap()).unwrap();
        let r = optimize_lambda(&spec, 6, 4).unwrap();
        assert!(r.lambdas.contains(&0.6));
        assert!(r.best_bound <= r.bound_at_p);
        assert_eq!(r.lambdas.len(), LAMBDA_GRID + 1);
        assert!(r.smallness.is_none());
        let big = WeightSpec::new(WeightFamily::Spod, 2, Some(2), BetaSequence::power(0.5, 2.0, 1.0).unwrap()).unwrap();
        let r = optimize_lambda(&big, 6, 4).unwrap();
        assert_eq!(r.smallness, Some(false));
        assert!(r.bounds.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn walsh_examples() {
        assert_eq!(walsh_eval(0, 3, 2, 2), Complex::new(1.0, 0.0));
        assert_eq!(walsh_eval(1, 1, 1, 2), Complex::new(-1.0, 0.0));
        assert_eq!(walsh_eval(1, 1, 2, 2), Complex::new(1.0, 0.0));
        let w = walsh_eval(2, 5, 2, 3);
        assert!((w.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn character_sums_match_membership() {
        let modulus = find_irreducible(2, 3).unwrap();
        let rule = PolyLatticeRule::from_encodings(modulus.clone(), &[1, 3]).unwrap();
        let pts = classical_points(&rule);
        for k1 in 0..64u64 {
            for k2 in 0..64u64 {
                let cs = character_sum(&pts, &[0, 1], &[k1, k2]);
                let member = dual_membership(&[k1, k2], &[0, 1], rule.generating(), &modulus);
                assert!((cs.re - if member { 1.0 } else { 0.0 }).abs() < 1e-12);
                assert!(cs.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_grows_with_k() {
        let modulus = find_irreducible(2, 3).unwrap();
        let rule = PolyLatticeRule::from_encodings(modulus, &[1, 5]).unwrap();
        let mut prev: Option<Truncated> = None;
        for k in 0..=6 {
            let t = dual_kernel_sum_truncated(&rule, &[0, 1], 2, k).unwrap();
            if let Some(p) = prev {
                assert!(t.partial >= p.partial);
                assert!(t.partial <= p.partial + p.tail * (1.0 + 1e-12));
            }
            prev = Some(t);
        }
        let k0 = dual_kernel_sum_truncated(&rule, &[0, 1], 2, 0).unwrap();
        assert_eq!(k0.partial, 0.0);
        assert!((k0.tail - slot_sum(2, 2).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn single_coordinate_series() {
        // the dual of one coordinate is the multiples of b^m: sum_{mu >= m+1} (b-1) b^(mu-m-1) b^(-alpha mu)
        let (b, m, alpha) = (2u32, 3usize, 2usize);
        let rule = PolyLatticeRule::from_encodings(find_irreducible(b, m).unwrap(), &[1]).unwrap();
        let k = m + 4;
        let t = dual_kernel_sum_truncated(&rule, &[0], alpha, k).unwrap();
        let bf = b as f64;
        let expect: f64 = (m + 1..=k)
            .map(|mu| (bf - 1.0) * bf.powi((mu - m - 1) as i32) * bf.powi(-((alpha * mu) as i32)))
            .sum();
        assert!((t.partial - expect).abs() < 1e-15);
    }
}
