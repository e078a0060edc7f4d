//! Reference CBC by direct evaluation of the criterion over all subsets.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::gf_poly::{find_irreducible, Modulus};
use crate::pointgen::{classical_points, PolyLatticeRule};
use crate::weights::WeightSpec;

use super::omega::OmegaTable;
use super::{neumaier, par_eval, tie_break, CbcResult, TildeWeights};

/// Largest point count accepted by the naive routines.
pub const NAIVE_MAX_POINTS: u64 = 1 << 10;
/// Largest number of components accepted by the naive routines.
pub const NAIVE_MAX_DIM: usize = 12;

fn guard(modulus: &Modulus, d: usize) -> Result<()> {
    if modulus.order() > NAIVE_MAX_POINTS || d > NAIVE_MAX_DIM {
        return Err(Error::ScaleGuard(format!(
            "naive criterion limited to b^m <= {NAIVE_MAX_POINTS} and d <= {NAIVE_MAX_DIM} (got b^m = {}, d = {d})",
            modulus.order()
        )));
    }
    Ok(())
}

/// `gamma~` for every nonempty subset, indexed by bitmask over components 1..d.
fn gamma_masks(d: usize, weights: &dyn TildeWeights) -> Vec<f64> {
    let mut out = vec![0.0; 1 << d];
    let mut v = Vec::with_capacity(d);
    for (mask, g) in out.iter_mut().enumerate().skip(1) {
        v.clear();
        v.extend((0..d).filter(|j| mask >> j & 1 == 1).map(|j| j + 1));
        *g = weights.tilde_gamma(&v);
    }
    out
}

/// Kernel values `omega(y_j^(n))`, row per point.
fn kernel_rows(modulus: &Modulus, q: &[u64], table: &OmegaTable) -> Result<Vec<Vec<f64>>> {
    let pts = classical_points(&PolyLatticeRule::from_encodings(modulus.clone(), q)?);
    Ok(pts
        .rows()
        .map(|row| row.iter().map(|&y| table.value(y)).collect())
        .collect())
}

fn evaluate(rows: &[Vec<f64>], gammas: &[f64]) -> f64 {
    let mut prod = vec![0.0f64; gammas.len()];
    let per_point = rows.iter().map(|om| {
        prod[0] = 1.0;
        for mask in 1..gammas.len() {
            let low = mask.trailing_zeros() as usize;
            prod[mask] = prod[mask & (mask - 1)] * om[low];
        }
        neumaier(gammas.iter().zip(&prod).skip(1).map(|(g, p)| g * p))
    });
    neumaier(per_point) / rows.len() as f64
}

/// `E_d(q) = 1/b^m sum_n sum_{v != {}} gamma~_v prod_{j in v} omega(y_j^(n))` by enumeration.
pub fn criterion_naive(
    modulus: &Modulus,
    kernel_order: usize,
    q: &[u64],
    weights: &dyn TildeWeights,
) -> Result<f64> {
    guard(modulus, q.len())?;
    let table = OmegaTable::new(modulus.base(), modulus.degree(), kernel_order)?;
    let rows = kernel_rows(modulus, q, &table)?;
    Ok(evaluate(&rows, &gamma_masks(q.len(), weights)))
}

/// CBC minimizing [`criterion_naive`] over every nonzero `q` of degree `< m`, component by component.
pub fn cbc_naive_with(
    modulus: &Modulus,
    alpha: usize,
    kernel_order: usize,
    d_max: usize,
    weights: &dyn TildeWeights,
    family: &str,
) -> Result<CbcResult> {
    let start = Instant::now();
    if alpha == 0 || d_max % alpha != 0 {
        return Err(Error::InvalidParameter(format!(
            "d = {d_max} is not a multiple of alpha = {alpha}"
        )));
    }
    guard(modulus, d_max)?;
    let table = OmegaTable::new(modulus.base(), modulus.degree(), kernel_order)?;
    let candidates: Vec<u64> = (1..modulus.order()).collect();
    let mut q: Vec<u64> = Vec::with_capacity(d_max);
    let mut criterion = Vec::with_capacity(d_max);
    for d in 1..=d_max {
        let gammas = gamma_masks(d, weights);
        let prefix = if q.is_empty() {
            None
        } else {
            Some(kernel_rows(modulus, &q, &table)?)
        };
        let values = par_eval(&candidates, |c| {
            let col = kernel_rows(modulus, &[c], &table).expect("valid candidate");
            let rows: Vec<Vec<f64>> = match &prefix {
                Some(p) => p
                    .iter()
                    .zip(&col)
                    .map(|(r, c)| {
                        let mut r = r.clone();
                        r.push(c[0]);
                        r
                    })
                    .collect(),
                None => col,
            };
            evaluate(&rows, &gammas)
        });
        let (best, e) = tie_break(&candidates, &values);
        q.push(best);
        criterion.push(e);
    }
    Ok(CbcResult {
        modulus: modulus.clone(),
        alpha,
        kernel_order,
        s: d_max / alpha,
        q,
        criterion,
        family: family.to_string(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Naive CBC for a weight specification, with the modulus of smallest encoding.
pub fn cbc_naive(m: usize, s_max: usize, spec: &WeightSpec) -> Result<CbcResult> {
    let modulus = find_irreducible(spec.b(), m)?;
    let alpha = spec.alpha();
    cbc_naive_with(&modulus, alpha, alpha, alpha * s_max, spec, &spec.family().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbc::GammaTable;
    use crate::weights::{BetaSequence, WeightFamily};

    #[test]
    fn single_component_closed_form() {
        let modulus = find_irreducible(2, 4).unwrap();
        let mut t = GammaTable::default();
        t.0.insert(vec![1], 2.0);
        let e = criterion_naive(&modulus, 2, &[3], &t).unwrap();
        // 2 * b^(-alpha m) (b-1)/(b^alpha-b)
        assert!((e - 2.0 / 256.0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn first_pick_is_one() {
        let spec = WeightSpec::new(
            WeightFamily::Product,
            3,
            Some(2),
            BetaSequence::list(vec![0.5, 0.125], 0.6).unwrap(),
        )
        .unwrap();
        let r = cbc_naive(2, 2, &spec).unwrap();
        assert_eq!(r.q[0], 1);
        assert_eq!(r.q.len(), 4);
    }

    #[test]
    fn guard_rejects_large() {
        let modulus = find_irreducible(2, 11).unwrap();
        let t = GammaTable::default();
        assert!(matches!(
            criterion_naive(&modulus, 2, &[1], &t),
            Err(Error::ScaleGuard(_))
        ));
    }
}
