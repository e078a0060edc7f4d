//! Classical and interlaced polynomial lattice point sets.
//!
//! Coordinates are kept as integer numerators over `b^digits`; floats are only
//! produced at the consumer boundary.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf_poly::{checked_pow, Modulus, PolyGF};

/// A classical polynomial lattice rule with `d` generating polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyLatticeRule {
    modulus: Modulus,
    generating: Vec<PolyGF>,
}

impl PolyLatticeRule {
    pub fn new(modulus: Modulus, generating: Vec<PolyGF>) -> Result<Self> {
        let m = modulus.degree();
        if generating.is_empty() {
            return Err(Error::InvalidParameter("empty generating vector".into()));
        }
        for q in &generating {
            if q.base() != modulus.base() {
                return Err(Error::BaseMismatch(q.base(), modulus.base()));
            }
            match q.degree() {
                Some(d) if d < m => {}
                _ => return Err(Error::InvalidGenerator(m)),
            }
        }
        Ok(PolyLatticeRule {
            modulus,
            generating,
        })
    }

    /// Builds a rule from integer encodings of the generating polynomials.
    pub fn from_encodings(modulus: Modulus, q: &[u64]) -> Result<Self> {
        let b = modulus.base();
        Self::new(modulus, q.iter().map(|&e| PolyGF::from_int(b, e)).collect())
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn generating(&self) -> &[PolyGF] {
        &self.generating
    }

    pub fn b(&self) -> u32 {
        self.modulus.base()
    }

    pub fn m(&self) -> usize {
        self.modulus.degree()
    }

    pub fn d(&self) -> usize {
        self.generating.len()
    }

    pub fn n_points(&self) -> usize {
        self.modulus.order() as usize
    }
}

/// An interlaced rule of order `alpha`: `alpha * s` classical components folded into `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterlacedRule {
    alpha: usize,
    s: usize,
    base: PolyLatticeRule,
}

impl InterlacedRule {
    pub fn new(alpha: usize, base: PolyLatticeRule) -> Result<Self> {
        if alpha == 0 || base.d() % alpha != 0 {
            return Err(Error::DimensionMismatch {
                expected: alpha.max(1) * (base.d() / alpha.max(1) + 1),
                got: base.d(),
            });
        }
        let s = base.d() / alpha;
        if checked_pow(base.b(), alpha * base.m()).is_none() {
            return Err(Error::Envelope(format!(
                "{}^{} does not fit a 64-bit digit buffer",
                base.b(),
                alpha * base.m()
            )));
        }
        Ok(InterlacedRule { alpha, s, base })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn base(&self) -> &PolyLatticeRule {
        &self.base
    }
}

/// `N x s` points stored as numerators over `b^digits`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    b: u32,
    s: usize,
    digits: usize,
    numerators: Vec<u64>,
}

impl PointSet {
    pub fn new(b: u32, s: usize, digits: usize, numerators: Vec<u64>) -> Result<Self> {
        let denom = checked_pow(b, digits)
            .ok_or_else(|| Error::Envelope(format!("{b}^{digits} overflows")))?;
        if s == 0 || numerators.len() % s != 0 {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: numerators.len(),
            });
        }
        if numerators.iter().any(|&v| v >= denom) {
            return Err(Error::InvalidParameter("coordinate outside [0,1)".into()));
        }
        Ok(PointSet {
            b,
            s,
            digits,
            numerators,
        })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Base-b digits carried per coordinate.
    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.numerators.len() / self.s
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn denominator(&self) -> u64 {
        checked_pow(self.b, self.digits).expect("validated at construction")
    }

    pub fn row(&self, n: usize) -> &[u64] {
        &self.numerators[n * self.s..(n + 1) * self.s]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.numerators.chunks(self.s)
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn coord(&self, n: usize, j: usize) -> f64 {
        self.numerators[n * self.s + j] as f64 / self.denominator() as f64
    }

    pub fn row_f64(&self, n: usize) -> Vec<f64> {
        let denom = self.denominator() as f64;
        self.row(n).iter().map(|&v| v as f64 / denom).collect()
    }

    /// Projection onto coordinate `j` as a new one-dimensional point set.
    pub fn column(&self, j: usize) -> Vec<u64> {
        self.rows().map(|r| r[j]).collect()
    }
}

/// Most-significant-first base-b digits of a numerator over `b^digits`.
pub fn to_digits(mut num: u64, b: u32, digits: usize) -> Vec<u32> {
    let mut out = vec![0u32; digits];
    for slot in out.iter_mut().rev() {
        *slot = (num % b as u64) as u32;
        num /= b as u64;
    }
    out
}

pub fn from_digits(digits: &[u32], b: u32) -> u64 {
    digits.iter().fold(0u64, |acc, &d| acc * b as u64 + d as u64)
}

/// Digit-wise `x + c*y (mod b)` for numerators carrying `digits` digits.
fn digit_axpy(x: u64, c: u32, y: u64, b: u32, digits: usize) -> u64 {
    if c == 0 {
        return x;
    }
    if b == 2 {
        return x ^ y;
    }
    let b64 = b as u64;
    let (mut x, mut y) = (x, y);
    let (mut out, mut scale) = (0u64, 1u64);
    for _ in 0..digits {
        let d = (x % b64 + c as u64 * (y % b64)) % b64;
        out += d * scale;
        scale *= b64;
        x /= b64;
        y /= b64;
    }
    out
}

/// Points of a classical polynomial lattice rule, n = 0..b^m-1 in natural order.
///
/// `n -> v_m(n q / P)` is Z_b-linear in the digits of `n`, so each coordinate is a
/// digit-wise combination of the images of `x^r q`, r < m.
pub fn classical_points(rule: &PolyLatticeRule) -> PointSet {
    let (b, m, d) = (rule.b(), rule.m(), rule.d());
    let n_points = rule.n_points();
    let basis: Vec<Vec<u64>> = rule
        .generating()
        .iter()
        .map(|q| {
            (0..m)
                .map(|r| {
                    let mut coeffs = vec![0u32; r];
                    coeffs.push(1);
                    let xr = PolyGF::new(b, coeffs);
                    rule.modulus().laurent_numerator(&(&xr * q))
                })
                .collect()
        })
        .collect();
    let mut numerators = vec![0u64; n_points * d];
    numerators
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(n, row)| {
            let eta = to_digits(n as u64, b, m);
            for (slot, col) in row.iter_mut().zip(&basis) {
                let mut acc = 0u64;
                // eta is most significant first; basis[r] pairs with eta_r (digit of b^r)
                for (r, &c) in eta.iter().rev().enumerate() {
                    acc = digit_axpy(acc, c, col[r], b, m);
                }
                *slot = acc;
            }
        });
    PointSet {
        b,
        s: d,
        digits: m,
        numerators,
    }
}

/// Digit interlacing of `alpha` coordinates carrying `digits` digits each.
///
/// Digit `a` of input `j` lands at position `j + (a-1) alpha` of the output.
pub fn interlace_digits(xs: &[u64], b: u32, digits: usize) -> u64 {
    let alpha = xs.len();
    let expanded: Vec<Vec<u32>> = xs.iter().map(|&x| to_digits(x, b, digits)).collect();
    let mut out = vec![0u32; alpha * digits];
    for (j, dj) in expanded.iter().enumerate() {
        for (a, &digit) in dj.iter().enumerate() {
            out[j + a * alpha] = digit;
        }
    }
    from_digits(&out, b)
}

/// Interlaced points: blocks of `alpha` classical coordinates folded into one.
pub fn interlaced_points(rule: &InterlacedRule) -> PointSet {
    let classical = classical_points(rule.base());
    let (b, m, alpha, s) = (rule.base().b(), rule.base().m(), rule.alpha(), rule.s());
    if alpha == 1 {
        return classical;
    }
    let numerators: Vec<u64> = classical
        .numerators
        .par_chunks(alpha * s)
        .flat_map_iter(|row| row.chunks(alpha).map(|blk| interlace_digits(blk, b, m)))
        .collect();
    PointSet {
        b,
        s,
        digits: alpha * m,
        numerators,
    }
}

/// Integer interlacing: digit `a` (from b^0) of `l_j` lands at b^(j-1 + a alpha).
pub fn interlace_integer(ls: &[u64], b: u32) -> u64 {
    let alpha = ls.len() as u32;
    let mut out = 0u64;
    for (j, &l) in ls.iter().enumerate() {
        let mut l = l;
        let mut a = 0u32;
        while l > 0 {
            let digit = l % b as u64;
            if digit != 0 {
                out += digit * (b as u64).pow(j as u32 + a * alpha);
            }
            l /= b as u64;
            a += 1;
        }
    }
    out
}

/// Sum of the `min(alpha, rho)` most significant nonzero digit positions (1-based) of `k`.
pub fn mu_alpha(k: u64, alpha: usize, b: u32) -> u32 {
    let mut positions = Vec::new();
    let mut k = k;
    let mut pos = 1u32;
    while k > 0 {
        if k % b as u64 != 0 {
            positions.push(pos);
        }
        k /= b as u64;
        pos += 1;
    }
    positions.iter().rev().take(alpha).sum()
}

/// Digit-wise addition mod b of `shift` (numerators at the set's precision) to every point.
pub fn digital_shift(pts: &PointSet, shift: &[u64]) -> Result<PointSet> {
    if shift.len() != pts.s {
        return Err(Error::DimensionMismatch {
            expected: pts.s,
            got: shift.len(),
        });
    }
    let denom = pts.denominator();
    if shift.iter().any(|&v| v >= denom) {
        return Err(Error::InvalidParameter("shift outside [0,1)".into()));
    }
    let numerators = pts
        .numerators
        .chunks(pts.s)
        .flat_map(|row| {
            row.iter()
                .zip(shift)
                .map(|(&y, &sig)| digit_axpy(y, 1, sig, pts.b, pts.digits))
        })
        .collect();
    Ok(PointSet {
        numerators,
        ..pts.clone()
    })
}

/// Truncates a float shift in [0,1) to `digits` base-b digits.
pub fn shift_from_f64(sigma: &[f64], b: u32, digits: usize) -> Result<Vec<u64>> {
    let denom = checked_pow(b, digits)
        .ok_or_else(|| Error::Envelope(format!("{b}^{digits} overflows")))?;
    sigma
        .iter()
        .map(|&x| {
            if !(0.0..1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!("shift {x} outside [0,1)")));
            }
            Ok(((x * denom as f64).floor() as u64).min(denom - 1))
        })
        .collect()
}

/// Whether `sum_{j in v} tr_m(k_j)(x) q_j(x) = 0 (mod P)`.
pub fn dual_membership(k: &[u64], v: &[usize], q: &[PolyGF], modulus: &Modulus) -> bool {
    assert_eq!(k.len(), v.len(), "one frequency per coordinate of v");
    let b = modulus.base();
    let m = modulus.degree();
    let mut acc = PolyGF::zero(b);
    for (&kj, &j) in k.iter().zip(v) {
        let tr = PolyGF::from_int(b, kj).truncate(m);
        acc = &acc + &(&tr * &q[j]);
    }
    modulus.reduce(&acc).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf_poly::find_irreducible;

    fn rule(b: u32, m: usize, q: &[u64]) -> PolyLatticeRule {
        PolyLatticeRule::from_encodings(find_irreducible(b, m).unwrap(), q).unwrap()
    }

    #[test]
    fn classical_examples() {
        let r = rule(2, 2, &[1]);
        let pts = classical_points(&r);
        assert_eq!(pts.column(0), vec![0, 1, 3, 2]);
        assert_eq!(pts.coord(1, 0), 0.25);
        assert!(pts.row(0).iter().all(|&v| v == 0));
    }

    #[test]
    fn classical_matches_v_m_map() {
        for (b, m, q) in [(2u32, 5usize, vec![1u64, 7, 22]), (3, 3, vec![1, 14, 26])] {
            let r = rule(b, m, &q);
            let pts = classical_points(&r);
            for n in 0..r.n_points() {
                let np = PolyGF::from_int(b, n as u64);
                for (j, qj) in r.generating().iter().enumerate() {
                    let v = crate::gf_poly::v_m_map(&np, qj, r.modulus(), m).unwrap();
                    assert_eq!(pts.row(n)[j], v);
                }
            }
        }
    }

    #[test]
    fn each_coordinate_is_a_permutation() {
        let r = rule(3, 4, &[1, 5, 80]);
        let pts = classical_points(&r);
        for j in 0..3 {
            let mut col = pts.column(j);
            col.sort_unstable();
            assert_eq!(col, (0..81).collect::<Vec<_>>());
        }
    }

    #[test]
    fn interlace_digits_examples() {
        // 0.01 and 0.01 -> 0.0011 in base 2
        assert_eq!(interlace_digits(&[1, 1], 2, 2), 3);
        assert_eq!(interlace_digits(&[0, 0, 0], 3, 4), 0);
        assert_eq!(interlace_digits(&[5], 2, 3), 5);
        // 0.10 , 0.01 -> 0.1001
        assert_eq!(interlace_digits(&[2, 1], 2, 2), 0b1001);
    }

    #[test]
    fn interlaced_examples() {
        let ir = InterlacedRule::new(2, rule(2, 2, &[1, 1])).unwrap();
        let pts = interlaced_points(&ir);
        assert_eq!(pts.digits(), 4);
        assert_eq!(pts.row(0), &[0]);
        assert_eq!(pts.coord(1, 0), 3.0 / 16.0);

        let base = rule(2, 3, &[1, 3, 5]);
        let one = InterlacedRule::new(1, base.clone()).unwrap();
        assert_eq!(interlaced_points(&one), classical_points(&base));
        assert!(InterlacedRule::new(2, base).is_err());
    }

    #[test]
    fn interlace_integer_examples() {
        assert_eq!(interlace_integer(&[1, 1], 2), 3);
        assert_eq!(interlace_integer(&[0, 0, 0], 2), 0);
        assert_eq!(interlace_integer(&[37], 3), 37);
        // l1 = 2 = 10_2 -> b^(0 + 1*2) = 4
        assert_eq!(interlace_integer(&[2, 0], 2), 4);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_alpha(0, 2, 2), 0);
        assert_eq!(mu_alpha(6, 2, 2), 5);
        assert_eq!(mu_alpha(6, 1, 2), 3);
        assert_eq!(mu_alpha(6, 5, 2), 5);
        // 10 in base 3 = 101_3: positions 3 and 1
        assert_eq!(mu_alpha(10, 2, 3), 4);
    }

    #[test]
    fn shift_examples() {
        let pts = PointSet::new(2, 1, 2, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(digital_shift(&pts, &[0]).unwrap(), pts);
        let once = digital_shift(&pts, &[2]).unwrap();
        assert_eq!(once.column(0), vec![2, 3, 0, 1]);
        assert_eq!(digital_shift(&once, &[2]).unwrap(), pts);
        assert!(digital_shift(&pts, &[1, 1]).is_err());
        assert_eq!(shift_from_f64(&[0.5, 0.7], 2, 2).unwrap(), vec![2, 2]);
        // base 3: 0.12_3 + 0.21_3 = 0.00_3
        let p3 = PointSet::new(3, 1, 2, vec![5]).unwrap();
        assert_eq!(digital_shift(&p3, &[7]).unwrap().row(0), &[0]);
    }

    #[test]
    fn dual_membership_examples() {
        let modulus = find_irreducible(2, 3).unwrap();
        let q: Vec<PolyGF> = [1u64, 1, 5].iter().map(|&e| PolyGF::from_int(2, e)).collect();
        assert!(dual_membership(&[8], &[0], &q, &modulus));
        for k in 1..8 {
            assert!(!dual_membership(&[k], &[2], &q, &modulus));
            assert!(dual_membership(&[k, k], &[0, 1], &q, &modulus));
            // truncation ignores digits at positions >= m
            assert!(dual_membership(&[k + 16, k], &[0, 1], &q, &modulus));
        }
    }

    #[test]
    fn float_round_trip() {
        let ir = InterlacedRule::new(3, rule(2, 6, &[1, 9, 33, 17, 40, 2])).unwrap();
        let pts = interlaced_points(&ir);
        let denom = pts.denominator() as f64;
        for n in 0..pts.len() {
            for j in 0..pts.s() {
                let x = pts.coord(n, j);
                assert!((0.0..1.0).contains(&x));
                assert_eq!((x * denom) as u64, pts.row(n)[j]);
            }
        }
    }

    /// Brute-force check of the interlacing inequality on all digit vectors < b^4.
    #[test]
    fn interlacing_inequality_small() {
        let b = 2u32;
        for alpha in [2usize, 3] {
            let limit = 16u64;
            let total = limit.pow(alpha as u32);
            for code in 0..total {
                let zs: Vec<u64> = (0..alpha).map(|i| (code / limit.pow(i as u32)) % limit).collect();
                let lhs = mu_alpha(interlace_integer(&zs, b), alpha, b) as i64;
                let mu1: i64 = zs.iter().map(|&z| mu_alpha(z, 1, b) as i64).sum();
                let a = alpha as i64;
                assert!(lhs >= a * mu1 - a * (a - 1) / 2, "{zs:?}");
            }
        }
    }
}
