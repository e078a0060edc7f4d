//! Fast CBC for SPOD and product weights.
//!
//! State vectors are indexed by the point index `n = 0..b^m-1`. The `n = 0` point has
//! every coordinate at zero, so its kernel value is the constant `omega(0)`; it is
//! carried alongside and excluded from the circulant mat-vec, which covers `n >= 1`.
//! `V - 1` and `Y - 1` are tracked directly to avoid cancellation against 1.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::gf_poly::{find_irreducible, Modulus};
use crate::weights::{BlockWeights, WeightFamily, WeightSpec};

use super::omega::{rader_matvec, OmegaColumn};
use super::{neumaier, par_eval, tie_break, CbcResult, SPOD_ENVELOPE, TIE_RELATIVE};

/// Scale of the FFT round-off relative to `|column|_2 |x|_2 log2(M)`.
const FFT_NOISE: f64 = 1e-14;
/// Above this many near-minimal candidates the FFT values are used as they are.
const REFINE_CAP: usize = 4096;

/// SPOD-weight construction with the modulus of smallest encoding.
pub fn cbc_spod(m: usize, s_max: usize, spec: &WeightSpec) -> Result<CbcResult> {
    if spec.family() != WeightFamily::Spod {
        return Err(Error::InvalidParameter("cbc_spod needs SPOD weights".into()));
    }
    let modulus = find_irreducible(spec.b(), m)?;
    cbc_fast(&modulus, spec.alpha(), spec.alpha(), &spec.cbc_factors(s_max))
}

/// Product-weight construction with the modulus of smallest encoding.
pub fn cbc_product(m: usize, s_max: usize, spec: &WeightSpec) -> Result<CbcResult> {
    if spec.family() != WeightFamily::Product {
        return Err(Error::InvalidParameter("cbc_product needs product weights".into()));
    }
    let modulus = find_irreducible(spec.b(), m)?;
    cbc_fast(&modulus, spec.alpha(), spec.alpha(), &spec.cbc_factors(s_max))
}

/// Fast CBC with block size `alpha` (interlacing factor) and kernel order `kernel_order`.
///
/// The number of blocks is the length of `weights`. For SPOD weights each block row
/// must hold `alpha` per-order factors.
pub fn cbc_fast(
    modulus: &Modulus,
    alpha: usize,
    kernel_order: usize,
    weights: &BlockWeights,
) -> Result<CbcResult> {
    let start = Instant::now();
    let s_max = weights.len();
    if alpha == 0 || s_max == 0 {
        return Err(Error::InvalidParameter("need alpha >= 1 and at least one block".into()));
    }
    let col = OmegaColumn::new(modulus, kernel_order)?;
    let (q, criterion, family) = match weights {
        BlockWeights::Spod(factors) => {
            if alpha * s_max > SPOD_ENVELOPE {
                return Err(Error::Envelope(format!(
                    "alpha * s = {} exceeds {SPOD_ENVELOPE}",
                    alpha * s_max
                )));
            }
            if factors.iter().any(|row| row.len() != alpha) {
                return Err(Error::InvalidParameter("SPOD factors need alpha orders per block".into()));
            }
            let (q, e) = spod_engine(&col, factors, alpha, None);
            (q, e, WeightFamily::Spod)
        }
        BlockWeights::Product(factors) => {
            let (q, e) = product_engine(&col, factors, alpha, None);
            (q, e, WeightFamily::Product)
        }
    };
    Ok(CbcResult {
        modulus: modulus.clone(),
        alpha,
        kernel_order,
        s: s_max,
        q,
        criterion,
        family: family.to_string(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Picks the component minimizing `offset + (base + sum_{n>=1} omega_q(n) x(n)) / N`.
///
/// The FFT ranks all candidates; those within its noise band (widened by the tie band)
/// of the best are re-summed exactly before the tie-break.
fn select(col: &OmegaColumn, x: &[f64], base: f64, offset: f64) -> (u64, f64) {
    let nf = (col.size() + 1) as f64;
    let xs = &x[1..];
    let approx = rader_matvec(col, xs).expect("length checked by construction");
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let noise = FFT_NOISE
        * (col.size() as f64).log2().max(1.0)
        * norm(col.permuted_column())
        * norm(xs);
    let r_min = approx.iter().copied().fold(f64::INFINITY, f64::min);
    let e_min = offset + (base + r_min) / nf;
    let window = 2.0 * noise + 2.0 * TIE_RELATIVE * e_min.abs() * nf;
    let candidates: Vec<u64> = approx
        .iter()
        .enumerate()
        .filter(|(_, &r)| r <= r_min + window)
        .map(|(i, _)| i as u64 + 1)
        .collect();
    let values: Vec<f64> = if candidates.len() > REFINE_CAP {
        candidates
            .iter()
            .map(|&q| offset + (base + approx[q as usize - 1]) / nf)
            .collect()
    } else {
        par_eval(&candidates, |q| offset + (base + exact_dot(col, q, xs)) / nf)
    };
    tie_break(&candidates, &values)
}

/// `sum_{n>=1} omega(v_m(n q / P)) x[n-1]`, compensated.
fn exact_dot(col: &OmegaColumn, q: u64, xs: &[f64]) -> f64 {
    let kc = col.kernel_column(q);
    neumaier(kc.iter().zip(xs).map(|(w, x)| w * x))
}

/// Kernel values of component `q` at every point, including `n = 0`.
fn kernel_with_origin(col: &OmegaColumn, q: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(col.size() + 1);
    out.push(col.table().zero_value());
    out.extend(col.kernel_column(q));
    out
}

/// `E_d(q_1..q_d)` for d = 1..len(q) of a given generating vector, by the fast recurrences.
pub fn criterion_trace(
    modulus: &Modulus,
    alpha: usize,
    kernel_order: usize,
    weights: &BlockWeights,
    q: &[u64],
) -> Result<Vec<f64>> {
    if alpha == 0 || q.len() != alpha * weights.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha * weights.len(),
            got: q.len(),
        });
    }
    let order = modulus.order();
    if q.iter().any(|&x| x == 0 || x >= order) {
        return Err(Error::InvalidParameter("components must be nonzero of degree < m".into()));
    }
    let col = OmegaColumn::new(modulus, kernel_order)?;
    Ok(match weights {
        BlockWeights::Spod(f) => spod_engine(&col, f, alpha, Some(q)).1,
        BlockWeights::Product(f) => product_engine(&col, f, alpha, Some(q)).1,
    })
}

/// Component choice: forced, the fixed first component, or the searched minimizer.
fn choose(col: &OmegaColumn, d: usize, xv: &[f64], base: f64, offset: f64, forced: Option<&[u64]>) -> (u64, f64) {
    let nf = (col.size() + 1) as f64;
    match forced {
        Some(f) => (f[d - 1], offset + (base + exact_dot(col, f[d - 1], &xv[1..])) / nf),
        None if d == 1 => (1, offset + (base + exact_dot(col, 1, &xv[1..])) / nf),
        None => select(col, xv, base, offset),
    }
}

fn spod_engine(col: &OmegaColumn, factors: &[Vec<f64>], alpha: usize, forced: Option<&[u64]>) -> (Vec<u64>, Vec<f64>) {
    let n_pts = col.size() + 1;
    let s_max = factors.len();
    let l_max = alpha * s_max;
    let mut u = vec![vec![0.0f64; n_pts]; l_max + 1];
    u[0].iter_mut().for_each(|x| *x = 1.0);
    let mut q_out = Vec::with_capacity(l_max);
    let mut trace = Vec::with_capacity(l_max);
    let mut e_block = 0.0f64;

    for (s_idx, gamma) in factors.iter().enumerate() {
        let s = s_idx + 1;
        let l_cap = alpha * s;
        // X(l) = sum_nu gamma_s(nu) l!/(l-nu)! U(l-nu);  W = sum_l X(l)
        let mut x_l = vec![vec![0.0f64; n_pts]; l_cap + 1];
        let mut w = vec![0.0f64; n_pts];
        for l in 1..=l_cap {
            let mut ratio = 1.0f64;
            for nu in 1..=alpha.min(l) {
                ratio *= (l - nu + 1) as f64;
                let coef = gamma[nu - 1] * ratio;
                if coef == 0.0 {
                    continue;
                }
                let (dst, src) = (&mut x_l[l], &u[l - nu]);
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d += coef * s);
            }
            w.iter_mut().zip(&x_l[l]).for_each(|(a, &b)| *a += b);
        }

        let mut vm1 = vec![0.0f64; n_pts];
        for t in 1..=alpha {
            let d = alpha * (s - 1) + t;
            let xv: Vec<f64> = vm1.iter().zip(&w).map(|(&v, &w)| (1.0 + v) * w).collect();
            let base = neumaier(vm1.iter().zip(&w).map(|(v, w)| v * w)) + col.table().zero_value() * xv[0];
            let (q, e) = choose(col, d, &xv, base, e_block, forced);
            let kernel = kernel_with_origin(col, q);
            vm1.iter_mut()
                .zip(&kernel)
                .for_each(|(v, &om)| *v = (*v + om) + om * *v);
            q_out.push(q);
            trace.push(e);
        }

        for l in 1..=l_cap {
            let (dst, src) = (&mut u[l], &x_l[l]);
            dst.iter_mut()
                .zip(src)
                .zip(&vm1)
                .for_each(|((d, &x), &v)| *d += v * x);
        }
        debug_assert!(u[0].iter().all(|&x| x == 1.0));
        debug_assert!(u[l_cap + 1..].iter().all(|row| row.iter().all(|&x| x == 0.0)));
        e_block = *trace.last().expect("alpha >= 1");
    }
    (q_out, trace)
}

fn product_engine(col: &OmegaColumn, factors: &[f64], alpha: usize, forced: Option<&[u64]>) -> (Vec<u64>, Vec<f64>) {
    let n_pts = col.size() + 1;
    let mut ym1 = vec![0.0f64; n_pts];
    let mut q_out = Vec::with_capacity(alpha * factors.len());
    let mut trace = Vec::with_capacity(alpha * factors.len());

    for (s_idx, &gamma) in factors.iter().enumerate() {
        let mut vm1 = vec![0.0f64; n_pts];
        for t in 1..=alpha {
            let d = alpha * s_idx + t;
            let xv: Vec<f64> = vm1
                .iter()
                .zip(&ym1)
                .map(|(&v, &y)| gamma * (1.0 + v) * (1.0 + y))
                .collect();
            let base = neumaier(
                vm1.iter()
                    .zip(&ym1)
                    .map(|(&v, &y)| y + gamma * v * (1.0 + y)),
            ) + col.table().zero_value() * xv[0];
            let (q, e) = choose(col, d, &xv, base, 0.0, forced);
            let kernel = kernel_with_origin(col, q);
            vm1.iter_mut()
                .zip(&kernel)
                .for_each(|(v, &om)| *v = (*v + om) + om * *v);
            q_out.push(q);
            trace.push(e);
        }
        ym1.iter_mut()
            .zip(&vm1)
            .for_each(|(y, &v)| *y += gamma * v * (1.0 + *y));
    }
    (q_out, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::BetaSequence;

    fn spec(family: WeightFamily, b: u32, alpha: usize, beta: Vec<f64>) -> WeightSpec {
        WeightSpec::new(family, b, Some(alpha), BetaSequence::list(beta, 0.6).unwrap()).unwrap()
    }

    #[test]
    fn first_component_is_one() {
        let sp = spec(WeightFamily::Spod, 2, 2, vec![0.5, 0.125]);
        let r = cbc_spod(4, 2, &sp).unwrap();
        assert_eq!(r.q[0], 1);
        assert_eq!(r.q.len(), 4);
        assert!(r.criterion.iter().all(|&e| e >= 0.0));
        assert!(r.criterion.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }

    #[test]
    fn first_criterion_closed_form() {
        // E_1(1) = gamma~_{1} b^(-alpha m) (b - 1) / (b^alpha - b)
        for (b, m, alpha) in [(2u32, 5usize, 2usize), (3, 3, 3), (2, 4, 3)] {
            let sp = spec(WeightFamily::Product, b, alpha, vec![0.4]);
            let r = cbc_product(m, 1, &sp).unwrap();
            let g1 = sp.tilde_gamma(&[1]);
            let bf = b as f64;
            let expect = g1 * bf.powi(-((alpha * m) as i32)) * (bf - 1.0)
                / (bf.powi(alpha as i32) - bf);
            assert!((r.criterion[0] - expect).abs() <= 1e-10 * expect, "{b} {m} {alpha} {} {expect}", r.criterion[0]);
        }
    }

    #[test]
    fn zero_weights_tie_to_one() {
        let sp = spec(WeightFamily::Product, 2, 2, vec![0.0, 0.0, 0.0]);
        let r = cbc_product(5, 3, &sp).unwrap();
        assert!(r.q.iter().all(|&q| q == 1));
        assert!(r.criterion.iter().all(|&e| e == 0.0));

        // SPOD with weight only on block 1: later blocks add nothing
        let sp = spec(WeightFamily::Spod, 2, 2, vec![0.5]);
        let r = cbc_spod(5, 3, &sp).unwrap();
        assert_eq!(&r.q[2..], &[1, 1, 1, 1]);
        let last = r.criterion[1];
        assert!(r.criterion[2..].iter().all(|&e| (e - last).abs() <= 1e-15 * last));
    }

    #[test]
    fn singleton_supported_weights_agree_across_families() {
        let beta = vec![0.3];
        let sp = cbc_spod(6, 1, &spec(WeightFamily::Spod, 2, 3, beta.clone())).unwrap();
        let pr = cbc_product(6, 1, &spec(WeightFamily::Product, 2, 3, beta)).unwrap();
        assert_eq!(sp.q, pr.q);
        for (a, b) in sp.criterion.iter().zip(&pr.criterion) {
            assert!((a - b).abs() <= 1e-11 * a.abs());
        }
    }

    #[test]
    fn trace_reproduces_construction() {
        for family in [WeightFamily::Spod, WeightFamily::Product] {
            let sp = WeightSpec::new(family, 2, Some(2), BetaSequence::power(0.5, 2.0, 0.6).unwrap()).unwrap();
            let r = cbc_fast(&find_irreducible(2, 7).unwrap(), 2, 2, &sp.cbc_factors(4)).unwrap();
            let t = criterion_trace(&r.modulus, 2, 2, &sp.cbc_factors(4), &r.q).unwrap();
            for (a, b) in t.iter().zip(&r.criterion) {
                assert!((a - b).abs() <= 1e-12 * b.abs());
            }
            let mut bad = r.q.clone();
            bad[3] = if bad[3] == 1 { 2 } else { 1 };
            let t = criterion_trace(&r.modulus, 2, 2, &sp.cbc_factors(4), &bad).unwrap();
            assert!(t[3] > r.criterion[3] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn envelope_and_family_checks() {
        let sp = spec(WeightFamily::Spod, 2, 2, vec![0.1]);
        assert!(matches!(cbc_spod(3, 61, &sp), Err(Error::Envelope(_))));
        assert!(cbc_product(3, 2, &sp).is_err());
    }

    #[test]
    fn point_envelope() {
        let modulus = find_irreducible(2, 25).unwrap();
        let w = BlockWeights::Product(vec![1.0]);
        assert!(matches!(cbc_fast(&modulus, 2, 2, &w), Err(Error::Envelope(_))));
    }
}
