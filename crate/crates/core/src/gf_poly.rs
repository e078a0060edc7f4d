//! Polynomials over the prime field Z_b.
//!
//! A polynomial is identified with the base-b integer whose i-th digit is the
//! coefficient of x^i. That encoding is used for tie-breaking in the CBC search
//! and for every serialized artifact.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime factors of `n`, ascending.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `b^e`, or `None` on u64 overflow.
pub fn checked_pow(b: u32, e: usize) -> Option<u64> {
    let mut acc = 1u64;
    for _ in 0..e {
        acc = acc.checked_mul(b as u64)?;
    }
    Some(acc)
}

fn inv_mod(a: u32, b: u32) -> u32 {
    // b prime: a^(b-2)
    let (mut acc, mut base, mut e) = (1u64, a as u64 % b as u64, b as u64 - 2);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % b as u64;
        }
        base = base * base % b as u64;
        e >>= 1;
    }
    acc as u32
}

/// A polynomial over Z_b in canonical form (no zero coefficient above the leading term).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyGF {
    base: u32,
    coeffs: Vec<u32>,
}

impl PolyGF {
    /// Builds a polynomial from low-to-high coefficients, reducing each mod `base`.
    pub fn new(base: u32, coeffs: Vec<u32>) -> Self {
        let mut p = PolyGF {
            base,
            coeffs: coeffs.into_iter().map(|c| c % base).collect(),
        };
        p.trim();
        p
    }

    pub fn zero(base: u32) -> Self {
        PolyGF {
            base,
            coeffs: Vec::new(),
        }
    }

    pub fn one(base: u32) -> Self {
        PolyGF::new(base, vec![1])
    }

    pub fn x(base: u32) -> Self {
        PolyGF::new(base, vec![0, 1])
    }

    /// Decodes the base-b integer encoding (least significant digit = constant term).
    pub fn from_int(base: u32, mut enc: u64) -> Self {
        let mut coeffs = Vec::new();
        while enc > 0 {
            coeffs.push((enc % base as u64) as u32);
            enc /= base as u64;
        }
        PolyGF { base, coeffs }
    }

    pub fn to_int(&self) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc * self.base as u64 + c as u64)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    /// Coefficient of x^i (zero beyond the stored range).
    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    /// Degree, with `None` standing for the zero polynomial's minus infinity.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    fn check_base(&self, other: &PolyGF) -> Result<()> {
        if self.base != other.base {
            return Err(Error::BaseMismatch(self.base, other.base));
        }
        Ok(())
    }

    /// Truncates to the terms of degree < `m`.
    pub fn truncate(&self, m: usize) -> PolyGF {
        let mut p = PolyGF {
            base: self.base,
            coeffs: self.coeffs.iter().take(m).copied().collect(),
        };
        p.trim();
        p
    }

    pub fn scale(&self, c: u32) -> PolyGF {
        let b = self.base as u64;
        PolyGF::new(
            self.base,
            self.coeffs
                .iter()
                .map(|&a| ((a as u64 * c as u64) % b) as u32)
                .collect(),
        )
    }

    /// Quotient and remainder of Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &PolyGF) -> (PolyGF, PolyGF) {
        assert_eq!(self.base, divisor.base, "base mismatch");
        let dd = divisor.degree().expect("division by the zero polynomial");
        let b = self.base as u64;
        let lead_inv = inv_mod(divisor.coeffs[dd], self.base) as u64;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (PolyGF::zero(self.base), self.clone());
        }
        let mut quot = vec![0u32; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = rem[i + dd] as u64 * lead_inv % b;
            if c == 0 {
                continue;
            }
            quot[i] = c as u32;
            for (k, &dk) in divisor.coeffs.iter().enumerate() {
                let sub = c * dk as u64 % b;
                rem[i + k] = ((rem[i + k] as u64 + b - sub) % b) as u32;
            }
        }
        rem.truncate(dd);
        (PolyGF::new(self.base, quot), PolyGF::new(self.base, rem))
    }

    pub fn rem(&self, divisor: &PolyGF) -> PolyGF {
        self.div_rem(divisor).1
    }

    /// Monic associate (zero stays zero).
    pub fn monic(&self) -> PolyGF {
        match self.coeffs.last() {
            None => self.clone(),
            Some(&lead) => self.scale(inv_mod(lead, self.base)),
        }
    }

    /// `self^e mod modulus`.
    pub fn pow_mod(&self, mut e: u64, modulus: &PolyGF) -> PolyGF {
        let mut acc = PolyGF::one(self.base).rem(modulus);
        let mut sq = self.rem(modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = (&acc * &sq).rem(modulus);
            }
            sq = (&sq * &sq).rem(modulus);
            e >>= 1;
        }
        acc
    }

    pub fn gcd(&self, other: &PolyGF) -> PolyGF {
        let (mut a, mut c) = (self.clone(), other.clone());
        while !c.is_zero() {
            let r = a.rem(&c);
            a = c;
            c = r;
        }
        a.monic()
    }
}

impl fmt::Debug for PolyGF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyGF[b={}]({})", self.base, self)
    }
}

impl fmt::Display for PolyGF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "x")?,
                (1, c) => write!(f, "{c}x")?,
                (i, 1) => write!(f, "x^{i}")?,
                (i, c) => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Add for &PolyGF {
    type Output = PolyGF;
    fn add(self, rhs: &PolyGF) -> PolyGF {
        assert_eq!(self.base, rhs.base, "base mismatch");
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyGF::new(
            self.base,
            (0..n)
                .map(|i| (self.coeff(i) + rhs.coeff(i)) % self.base)
                .collect(),
        )
    }
}

impl Sub for &PolyGF {
    type Output = PolyGF;
    fn sub(self, rhs: &PolyGF) -> PolyGF {
        assert_eq!(self.base, rhs.base, "base mismatch");
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyGF::new(
            self.base,
            (0..n)
                .map(|i| (self.coeff(i) + self.base - rhs.coeff(i)) % self.base)
                .collect(),
        )
    }
}

impl Mul for &PolyGF {
    type Output = PolyGF;
    fn mul(self, rhs: &PolyGF) -> PolyGF {
        assert_eq!(self.base, rhs.base, "base mismatch");
        if self.is_zero() || rhs.is_zero() {
            return PolyGF::zero(self.base);
        }
        let b = self.base as u64;
        let mut out = vec![0u64; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &c) in rhs.coeffs.iter().enumerate() {
                out[i + j] = (out[i + j] + a as u64 * c as u64) % b;
            }
        }
        PolyGF::new(self.base, out.into_iter().map(|c| c as u32).collect())
    }
}

/// An irreducible polynomial of degree `m` defining the residue field Z_b[x]/P.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    poly: PolyGF,
    degree: usize,
}

impl Modulus {
    /// Validates irreducibility.
    pub fn new(poly: PolyGF) -> Result<Self> {
        if !is_prime(poly.base()) {
            return Err(Error::NotPrime(poly.base()));
        }
        if !is_irreducible(&poly) {
            return Err(Error::NotIrreducible(poly.base()));
        }
        let degree = poly.degree().expect("irreducible polynomials are nonzero");
        Ok(Modulus { poly, degree })
    }

    pub fn poly(&self) -> &PolyGF {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> u32 {
        self.poly.base()
    }

    /// Number of residues, b^m.
    pub fn order(&self) -> u64 {
        checked_pow(self.base(), self.degree).expect("b^m fits in u64")
    }

    pub fn reduce(&self, a: &PolyGF) -> PolyGF {
        a.rem(&self.poly)
    }

    /// Numerator over b^m of the first m Laurent digits of `r(x)/P(x)`.
    ///
    /// With `r x^m = Q P + R`, the coefficient of x^(m-l) in Q is the digit t_l,
    /// so the integer encoding of Q is exactly sum_l t_l b^(m-l).
    pub fn laurent_numerator(&self, r: &PolyGF) -> u64 {
        let r = self.reduce(r);
        if r.is_zero() {
            return 0;
        }
        let mut shifted = vec![0u32; self.degree];
        shifted.extend_from_slice(r.coeffs());
        let (quot, _) = PolyGF::new(self.base(), shifted).div_rem(&self.poly);
        quot.to_int()
    }
}

/// `(a * c) mod P`.
pub fn poly_mulmod(a: &PolyGF, c: &PolyGF, modulus: &Modulus) -> Result<PolyGF> {
    a.check_base(c)?;
    a.check_base(modulus.poly())?;
    Ok((a * c).rem(modulus.poly()))
}

/// Rabin's test: `x^(b^m) = x mod P` and `gcd(x^(b^(m/r)) - x, P) = 1` for every prime `r | m`.
pub fn is_irreducible(p: &PolyGF) -> bool {
    let m = match p.degree() {
        None | Some(0) => return false,
        Some(m) => m,
    };
    if m == 1 {
        return true;
    }
    let b = p.base();
    let p = p.monic();
    let x = PolyGF::x(b);
    // frob[i] = x^(b^i) mod P
    let mut frob = Vec::with_capacity(m + 1);
    frob.push(x.rem(&p));
    for i in 1..=m {
        let next = frob[i - 1].pow_mod(b as u64, &p);
        frob.push(next);
    }
    if frob[m] != x.rem(&p) {
        return false;
    }
    prime_factors(m as u64).into_iter().all(|r| {
        let diff = &frob[m / r as usize] - &x;
        diff.gcd(&p).is_one()
    })
}

/// The irreducible degree-`m` polynomial with the smallest integer encoding.
pub fn find_irreducible(b: u32, m: usize) -> Result<Modulus> {
    if !is_prime(b) {
        return Err(Error::NotPrime(b));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("modulus degree must be >= 1".into()));
    }
    let lo = checked_pow(b, m).ok_or_else(|| Error::Envelope(format!("{b}^{m} overflows")))?;
    (lo..lo * b as u64)
        .map(|enc| PolyGF::from_int(b, enc))
        .find(is_irreducible)
        .map(|poly| Modulus { poly, degree: m })
        .ok_or(Error::NotIrreducible(b))
}

/// Laurent digit map: the first `m` base-b digits of `n(x) q(x) / P(x)`, as a numerator over b^m.
pub fn v_m_map(n: &PolyGF, q: &PolyGF, modulus: &Modulus, m: usize) -> Result<u64> {
    n.check_base(q)?;
    n.check_base(modulus.poly())?;
    if m != modulus.degree() {
        return Err(Error::InvalidParameter(format!(
            "digit count {m} differs from modulus degree {}",
            modulus.degree()
        )));
    }
    match q.degree() {
        None => return Err(Error::InvalidGenerator(m)),
        Some(d) if d >= m => return Err(Error::InvalidGenerator(m)),
        _ => {}
    }
    Ok(modulus.laurent_numerator(&(n * q)))
}

/// Smallest-encoding generator of the multiplicative group of Z_b[x]/P.
pub fn group_generator(modulus: &Modulus) -> PolyGF {
    let b = modulus.base();
    let order = modulus.order() - 1;
    let factors = prime_factors(order);
    (1..=order)
        .map(|enc| PolyGF::from_int(b, enc))
        .find(|g| {
            factors
                .iter()
                .all(|&l| !g.pow_mod(order / l, modulus.poly()).is_one())
        })
        .expect("the multiplicative group of a finite field is cyclic")
}

/// Discrete logarithm tables for a generator of (Z_b[x]/P)^*.
#[derive(Clone, Debug)]
pub struct DiscreteLog {
    /// `powers[k]` = integer encoding of g^k, k = 0..b^m-2.
    powers: Vec<u64>,
    /// `logs[r]` = k with g^k = r, for nonzero encodings r; `logs[0]` is unused.
    logs: Vec<u32>,
}

impl DiscreteLog {
    pub fn powers(&self) -> &[u64] {
        &self.powers
    }

    pub fn group_order(&self) -> usize {
        self.powers.len()
    }

    /// Discrete log of a nonzero residue encoding.
    pub fn log(&self, residue: u64) -> u32 {
        debug_assert!(residue != 0);
        self.logs[residue as usize]
    }

    pub fn exp(&self, k: usize) -> u64 {
        self.powers[k % self.powers.len()]
    }
}

/// Builds the bijection between nonzero residues and their discrete logs base `g`.
pub fn discrete_log_permutation(modulus: &Modulus, g: &PolyGF) -> Result<DiscreteLog> {
    g.check_base(modulus.poly())?;
    let order = (modulus.order() - 1) as usize;
    let mut powers = Vec::with_capacity(order);
    let mut logs = vec![u32::MAX; order + 1];
    let mut cur = PolyGF::one(modulus.base());
    for k in 0..order {
        let enc = cur.to_int();
        if logs[enc as usize] != u32::MAX {
            return Err(Error::InvalidParameter(format!(
                "{g} is not a generator modulo {}",
                modulus.poly()
            )));
        }
        logs[enc as usize] = k as u32;
        powers.push(enc);
        cur = (&cur * g).rem(modulus.poly());
    }
    Ok(DiscreteLog { powers, logs })
}
