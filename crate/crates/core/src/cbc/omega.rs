//! The omega kernel and the circulant structure of the matrix
//! `Omega[n, q] = omega(v_m(n q / P))` under the discrete-log reordering.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::gf_poly::{checked_pow, discrete_log_permutation, group_generator, DiscreteLog, Modulus};
use crate::pointgen::{classical_points, PolyLatticeRule};

/// `omega(y)` for `y = numerator / b^digits`.
///
/// The kernel depends on `y` only through the position of its first nonzero digit,
/// which is read off the integer numerator rather than a floating logarithm.
pub fn omega_kernel(numerator: u64, digits: usize, alpha: usize, b: u32) -> Result<f64> {
    if alpha < 2 {
        return Err(Error::InvalidParameter(format!(
            "omega kernel diverges for alpha = {alpha} < 2"
        )));
    }
    Ok(OmegaTable::new(b, digits, alpha)?.value(numerator))
}

/// The `digits + 1` distinct kernel values on a `digits`-digit coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaTable {
    b: u32,
    digits: usize,
    /// `values[0]` is omega(0); `values[k]` is the value when the first nonzero digit is at position k.
    values: Vec<f64>,
}

impl OmegaTable {
    pub fn new(b: u32, digits: usize, alpha: usize) -> Result<Self> {
        if alpha < 2 {
            return Err(Error::InvalidParameter(format!(
                "omega kernel diverges for alpha = {alpha} < 2"
            )));
        }
        if checked_pow(b, digits).is_none() {
            return Err(Error::Envelope(format!("{b}^{digits} overflows")));
        }
        let bf = b as f64;
        let b_alpha = bf.powi(alpha as i32);
        let zero = (bf - 1.0) / (b_alpha - bf);
        let slope = (b_alpha - 1.0) / (b_alpha - bf);
        let mut values = vec![zero];
        for k in 1..=digits {
            // floor(log_b y) = -k
            values.push(zero - bf.powi(-(k as i32) * (alpha as i32 - 1)) * slope);
        }
        Ok(OmegaTable { b, digits, values })
    }

    pub fn zero_value(&self) -> f64 {
        self.values[0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position (1-based) of the first nonzero digit, 0 for y = 0.
    pub fn first_digit_position(&self, numerator: u64) -> usize {
        if numerator == 0 {
            return 0;
        }
        let mut len = 0usize;
        let mut v = numerator;
        while v > 0 {
            v /= self.b as u64;
            len += 1;
        }
        self.digits + 1 - len
    }

    pub fn value(&self, numerator: u64) -> f64 {
        self.values[self.first_digit_position(numerator)]
    }
}

/// First column of the permuted Omega matrix with its cached forward transform.
pub struct OmegaColumn {
    b: u32,
    m: usize,
    alpha: usize,
    modulus: Modulus,
    dlog: DiscreteLog,
    table: OmegaTable,
    /// `column[k] = omega(v_m(g^k / P))`.
    column: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OmegaColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OmegaColumn")
            .field("b", &self.b)
            .field("m", &self.m)
            .field("alpha", &self.alpha)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl OmegaColumn {
    /// `alpha` is the kernel order (the exponent in `b^(-alpha mu_1)`).
    pub fn new(modulus: &Modulus, alpha: usize) -> Result<Self> {
        let b = modulus.base();
        let m = modulus.degree();
        if checked_pow(b, m).map_or(true, |n| n > super::MAX_FAST_POINTS) {
            return Err(Error::Envelope(format!(
                "b^m = {}^{m} exceeds {} points",
                b,
                super::MAX_FAST_POINTS
            )));
        }
        let table = OmegaTable::new(b, m, alpha)?;
        let g = group_generator(modulus);
        let dlog = discrete_log_permutation(modulus, &g)?;
        let column: Vec<f64> = dlog
            .powers()
            .iter()
            .map(|&r| {
                let num = modulus.laurent_numerator(&crate::gf_poly::PolyGF::from_int(b, r));
                table.value(num)
            })
            .collect();
        let len = column.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum: Vec<Complex<f64>> = column.iter().map(|&c| Complex::new(c, 0.0)).collect();
        forward.process(&mut spectrum);
        Ok(OmegaColumn {
            b,
            m,
            alpha,
            modulus: modulus.clone(),
            dlog,
            table,
            column,
            spectrum,
            forward,
            inverse,
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn table(&self) -> &OmegaTable {
        &self.table
    }

    /// `b^m - 1`.
    pub fn size(&self) -> usize {
        self.column.len()
    }

    pub fn permuted_column(&self) -> &[f64] {
        &self.column
    }

    /// `Omega[n, q]` for nonzero encodings `n`, `q`.
    pub fn entry(&self, n: u64, q: u64) -> f64 {
        let k = self.dlog.log(n) as usize + self.dlog.log(q) as usize;
        self.column[k % self.column.len()]
    }

    /// Row `q` of the transposed matrix: `out[n-1] = omega(v_m(n q / P))`, n = 1..b^m-1.
    pub fn kernel_column(&self, q: u64) -> Vec<f64> {
        let size = self.size();
        let shift = self.dlog.log(q) as usize;
        let mut out = vec![0.0; size];
        for (k, &r) in self.dlog.powers().iter().enumerate() {
            out[r as usize - 1] = self.column[(k + shift) % size];
        }
        out
    }
}

/// `out[q-1] = sum_{n=1}^{b^m-1} Omega[n, q] v[n-1]`, evaluated as a length-(b^m-1)
/// circular convolution in discrete-log order.
pub fn rader_matvec(col: &OmegaColumn, v: &[f64]) -> Result<Vec<f64>> {
    let size = col.size();
    if v.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: v.len(),
        });
    }
    // With n = g^i and q = g^k the entry is c[i + k]; reversing the permuted input
    // turns the correlation into a convolution.
    let powers = col.dlog.powers();
    let mut buf: Vec<Complex<f64>> = (0..size)
        .map(|i| {
            let src = powers[(size - i) % size];
            Complex::new(v[src as usize - 1], 0.0)
        })
        .collect();
    col.forward.process(&mut buf);
    for (z, c) in buf.iter_mut().zip(&col.spectrum) {
        *z *= c;
    }
    col.inverse.process(&mut buf);
    let scale = 1.0 / size as f64;
    let mut out = vec![0.0; size];
    for (k, z) in buf.iter().enumerate() {
        out[powers[k] as usize - 1] = z.re * scale;
    }
    Ok(out)
}

/// Dense `Omega` built from the point generator (row n-1, column q-1), for oracle checks.
pub fn omega_matrix_direct(modulus: &Modulus, alpha: usize) -> Result<Vec<Vec<f64>>> {
    let b = modulus.base();
    let m = modulus.degree();
    let table = OmegaTable::new(b, m, alpha)?;
    let size = (modulus.order() - 1) as usize;
    let q: Vec<u64> = (1..=size as u64).collect();
    let rule = PolyLatticeRule::from_encodings(modulus.clone(), &q)?;
    let pts = classical_points(&rule);
    Ok((1..=size)
        .map(|n| pts.row(n).iter().map(|&y| table.value(y)).collect())
        .collect())
}

/// Plain `O(N^2)` transpose product against [`omega_matrix_direct`].
pub fn direct_matvec(matrix: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let size = matrix.len();
    (0..size)
        .map(|q| matrix.iter().zip(v).map(|(row, &x)| row[q] * x).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf_poly::find_irreducible;
    use rand::{Rng, SeedableRng};

    #[test]
    fn kernel_examples() {
        assert_eq!(omega_kernel(0, 4, 2, 2).unwrap(), 0.5);
        for y in 8..16 {
            assert_eq!(omega_kernel(y, 4, 2, 2).unwrap(), -0.25);
        }
        for y in 4..8 {
            assert_eq!(omega_kernel(y, 4, 2, 2).unwrap(), 0.125);
        }
        assert!(omega_kernel(1, 4, 1, 2).is_err());
    }

    /// The kernel equals the Walsh series sum_l b^(-alpha mu_1(l)) wal_l(y). For a
    /// `D`-digit `y`, `wal_l(y)` only sees `l mod b^D`, and the frequencies above
    /// `b^D` sharing a residue sum to `b^(-alpha D) omega(0)` in closed form.
    #[test]
    fn kernel_matches_walsh_series() {
        use crate::bounds::walsh_eval;
        use crate::pointgen::mu_alpha;
        for (b, alpha, digits) in [(2u32, 2usize, 4usize), (3, 2, 3), (2, 3, 5), (5, 4, 2)] {
            let denom = checked_pow(b, digits).unwrap();
            let table = OmegaTable::new(b, digits, alpha).unwrap();
            let bf = b as f64;
            let folded = bf.powi(-((alpha * digits) as i32)) * (bf - 1.0) / (bf.powi(alpha as i32) - bf);
            for y in 0..denom {
                let series: f64 = (0..denom)
                    .map(|r| {
                        let head = if r == 0 {
                            0.0
                        } else {
                            bf.powi(-(alpha as i32) * mu_alpha(r, 1, b) as i32)
                        };
                        (head + folded) * walsh_eval(r, y, digits, b).re
                    })
                    .sum();
                assert!((series - table.value(y)).abs() < 1e-12, "b={b} y={y}");
            }
        }
    }

    #[test]
    fn table_has_m_plus_one_values() {
        let t = OmegaTable::new(3, 5, 3).unwrap();
        let mut seen: Vec<f64> = (0..243).map(|y| t.value(y)).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn column_matches_direct_entries() {
        let modulus = find_irreducible(2, 4).unwrap();
        let col = OmegaColumn::new(&modulus, 2).unwrap();
        let dense = omega_matrix_direct(&modulus, 2).unwrap();
        for n in 1..16u64 {
            for q in 1..16u64 {
                assert_eq!(col.entry(n, q), dense[n as usize - 1][q as usize - 1]);
            }
        }
        let kc = col.kernel_column(5);
        for n in 1..16 {
            assert_eq!(kc[n - 1], dense[n - 1][4]);
        }
    }

    #[test]
    fn matvec_examples() {
        let modulus = find_irreducible(2, 5).unwrap();
        let col = OmegaColumn::new(&modulus, 2).unwrap();
        let dense = omega_matrix_direct(&modulus, 2).unwrap();
        let size = col.size();
        // unit vector picks a row of the matrix
        let mut e = vec![0.0; size];
        e[0] = 1.0;
        let out = rader_matvec(&col, &e).unwrap();
        for q in 0..size {
            assert!((out[q] - dense[0][q]).abs() < 1e-12);
        }
        // all-ones: equal column sums by group symmetry
        let ones = rader_matvec(&col, &vec![1.0; size]).unwrap();
        for &x in &ones {
            assert!((x - ones[0]).abs() < 1e-12);
        }
        assert!(rader_matvec(&col, &[1.0]).is_err());
    }

    #[test]
    fn matvec_matches_direct_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for (b, m) in [(2u32, 6usize), (3, 4), (5, 2), (2, 1)] {
            let modulus = find_irreducible(b, m).unwrap();
            let col = OmegaColumn::new(&modulus, 3).unwrap();
            let dense = omega_matrix_direct(&modulus, 3).unwrap();
            for _ in 0..5 {
                let v: Vec<f64> = (0..col.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let fast = rader_matvec(&col, &v).unwrap();
                let slow = direct_matvec(&dense, &v);
                let scale = slow.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                for (f, s) in fast.iter().zip(&slow) {
                    assert!((f - s).abs() <= 1e-9 * scale.max(1e-300));
                }
            }
        }
    }
}
