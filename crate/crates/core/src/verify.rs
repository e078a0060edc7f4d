//! Cross-module oracle suites.

use std::collections::HashMap;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::bounds::{cbc_bound, character_sum, dual_kernel_sum_truncated, lambda_grid, walsh_exponent};
use crate::cbc::{
    cbc_naive, cbc_product, cbc_spod, criterion_trace, omega_matrix_direct, direct_matvec,
    rader_matvec, CbcResult, OmegaColumn, OmegaTable,
};
use crate::error::Result;
use crate::formats::VectorFile;
use crate::gf_poly::{find_irreducible, PolyGF};
use crate::pointgen::{classical_points, dual_membership, interlace_integer, mu_alpha, PolyLatticeRule};
use crate::weights::{BetaSequence, WeightFamily, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Smoke,
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Preset::Smoke),
            "desk" => Ok(Preset::Desk),
            other => Err(crate::Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
    pub seconds: f64,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.into(),
            ..Default::default()
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub preset: Option<Preset>,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn timed(name: &str, body: impl FnOnce(&mut SuiteReport)) -> SuiteReport {
    let start = Instant::now();
    let mut r = SuiteReport::new(name);
    body(&mut r);
    r.seconds = start.elapsed().as_secs_f64();
    r
}

/// One CBC configuration of the oracle grid.
pub struct GridCase {
    pub spec: WeightSpec,
    pub m: usize,
    pub s: usize,
    pub fast: CbcResult,
}

/// `beta_j = 0.5 j^-2`, `p = 0.6`.
pub fn grid_beta() -> BetaSequence {
    BetaSequence::power(0.5, 2.0, 0.6).expect("valid")
}

struct Scale {
    bases: Vec<u32>,
    ms: Vec<usize>,
    alphas: Vec<usize>,
    s_max: usize,
    rader_m: Vec<usize>,
    rader_vectors: usize,
    char_points: u64,
    char_samples: usize,
}

fn scale(preset: Preset) -> Scale {
    match preset {
        Preset::Smoke => Scale {
            bases: vec![2],
            ms: vec![2, 3],
            alphas: vec![2, 3],
            s_max: 2,
            rader_m: (3..=6).collect(),
            rader_vectors: 3,
            char_points: 8,
            char_samples: 200,
        },
        Preset::Desk => Scale {
            bases: vec![2, 3],
            ms: (2..=5).collect(),
            alphas: vec![2, 3],
            s_max: 3,
            rader_m: (3..=10).collect(),
            rader_vectors: 20,
            char_points: 32,
            char_samples: 2000,
        },
    }
}

/// Fast constructions over `{b} x {m} x {alpha} x {SPOD, product}` with `s = s_max`;
/// shorter `s` are prefixes of these.
pub fn grid_cases(bases: &[u32], ms: &[usize], alphas: &[usize], s_max: usize) -> Result<Vec<GridCase>> {
    let mut out = Vec::new();
    for &b in bases {
        for &m in ms {
            for &alpha in alphas {
                for family in [WeightFamily::Spod, WeightFamily::Product] {
                    let spec = WeightSpec::new(family, b, Some(alpha), grid_beta())?;
                    let fast = match family {
                        WeightFamily::Spod => cbc_spod(m, s_max, &spec)?,
                        WeightFamily::Product => cbc_product(m, s_max, &spec)?,
                    };
                    out.push(GridCase { spec, m, s: s_max, fast });
                }
            }
        }
    }
    Ok(out)
}

/// Identical vectors and criterion values within `1e-10` relative.
pub fn suite_fast_vs_naive(cases: &[GridCase]) -> SuiteReport {
    timed("fast-vs-naive", |r| {
        for c in cases {
            let label = || format!("b={} m={} alpha={} {}", c.spec.b(), c.m, c.spec.alpha(), c.spec.family());
            match cbc_naive(c.m, c.s, &c.spec) {
                Ok(naive) => {
                    r.check(naive.q == c.fast.q, || format!("{}: q {:?} vs {:?}", label(), c.fast.q, naive.q));
                    for (d, (x, y)) in c.fast.criterion.iter().zip(&naive.criterion).enumerate() {
                        let rel = (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
                        r.check(rel <= 1e-10, || format!("{}: E_{} differs by {rel:e}", label(), d + 1));
                    }
                }
                Err(e) => r.check(false, || format!("{}: {e}", label())),
            }
        }
    })
}

/// FFT mat-vec against the dense product, normwise relative `1e-9`.
pub fn suite_rader(ms: &[usize], vectors: usize, seed: u64) -> SuiteReport {
    timed("rader-vs-direct", |r| {
        let mut rng = StdRng::seed_from_u64(seed);
        for &m in ms {
            let modulus = find_irreducible(2, m).expect("irreducible exists");
            let col = OmegaColumn::new(&modulus, 2).expect("valid");
            let dense = omega_matrix_direct(&modulus, 2).expect("valid");
            for _ in 0..vectors {
                let v: Vec<f64> = (0..col.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let fast = rader_matvec(&col, &v).expect("length");
                let slow = direct_matvec(&dense, &v);
                let diff = fast.iter().zip(&slow).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm = slow.iter().map(|a| a * a).sum::<f64>().sqrt();
                r.check(diff <= 1e-9 * norm, || format!("m={m}: relative {}", diff / norm));
            }
        }
    })
}

fn digit_add(x: u64, y: u64, b: u32) -> u64 {
    if b == 2 {
        return x ^ y;
    }
    let bb = b as u64;
    let (mut x, mut y, mut out, mut place) = (x, y, 0u64, 1u64);
    while x > 0 || y > 0 {
        out += ((x % bb + y % bb) % bb) * place;
        x /= bb;
        y /= bb;
        place *= bb;
    }
    out
}

/// Exponent classes of one column: `class[k]` indexes `vectors`, the distinct
/// per-point exponent vectors of `wal_k(y_j^(n))`.
struct Classes {
    class: Vec<usize>,
    vectors: Vec<Vec<u32>>,
}

fn column_classes(column: &[u64], digits: usize, b: u32, k_max: u64) -> Classes {
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut vectors = Vec::new();
    let class = (0..k_max)
        .map(|k| {
            let e: Vec<u32> = column.iter().map(|&y| walsh_exponent(k, y, digits, b)).collect();
            *index.entry(e.clone()).or_insert_with(|| {
                vectors.push(e);
                vectors.len() - 1
            })
        })
        .collect();
    Classes { class, vectors }
}

/// `1/N sum_n exp(2 pi i e_n / b)`; returns (real, imaginary).
fn root_sum(counts: &[u64], b: u32, n: usize) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for (r, &c) in counts.iter().enumerate() {
        let t = 2.0 * std::f64::consts::PI * r as f64 / b as f64;
        re += c as f64 * t.cos();
        im += c as f64 * t.sin();
    }
    (re / n as f64, im / n as f64)
}

/// Character sums of the classical rule against dual membership. Singletons and pairs
/// run over every `k_j < b^(2m)`; larger sets use `samples` random frequency vectors.
pub fn check_character_sums(rule: &PolyLatticeRule, samples: usize, rng: &mut StdRng, r: &mut SuiteReport) {
    let b = rule.b();
    let m = rule.m();
    let d = rule.d();
    let n_pts = rule.n_points();
    let pts = classical_points(rule);
    let k_max = (b as u64).pow(2 * m as u32);
    let modulus = rule.modulus();
    // tr_m(k) q_j mod P as encodings
    let prods: Vec<Vec<u64>> = rule
        .generating()
        .iter()
        .map(|q| {
            (0..k_max)
                .map(|k| {
                    let tr = PolyGF::from_int(b, k).truncate(m);
                    modulus.reduce(&(&tr * q)).to_int()
                })
                .collect()
        })
        .collect();
    let classes: Vec<Classes> = (0..d).map(|j| column_classes(&pts.column(j), m, b, k_max)).collect();
    let tol = 1e-12;
    let judge = |re: f64, im: f64, member: bool| {
        let target = if member { 1.0 } else { 0.0 };
        (re - target).abs() <= tol && im.abs() <= tol
    };
    for j in 0..d {
        for k in 1..k_max {
            let mut counts = vec![0u64; b as usize];
            for &e in &classes[j].vectors[classes[j].class[k as usize]] {
                counts[e as usize] += 1;
            }
            let (re, im) = root_sum(&counts, b, n_pts);
            let member = prods[j][k as usize] == 0;
            r.check(judge(re, im, member), || format!("v={{{j}}} k={k}: sum {re}+{im}i, member {member}"));
        }
    }
    for j1 in 0..d {
        for j2 in j1 + 1..d {
            let (c1, c2) = (&classes[j1], &classes[j2]);
            let mut table: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
            for k1 in 1..k_max {
                for k2 in 1..k_max {
                    let key = (c1.class[k1 as usize], c2.class[k2 as usize]);
                    let (re, im) = *table.entry(key).or_insert_with(|| {
                        let mut counts = vec![0u64; b as usize];
                        for (e1, e2) in c1.vectors[key.0].iter().zip(&c2.vectors[key.1]) {
                            counts[((e1 + e2) % b) as usize] += 1;
                        }
                        root_sum(&counts, b, n_pts)
                    });
                    let member = digit_add(prods[j1][k1 as usize], prods[j2][k2 as usize], b) == 0;
                    r.check(judge(re, im, member), || {
                        format!("v={{{j1},{j2}}} k=({k1},{k2}): sum {re}+{im}i, member {member}")
                    });
                }
            }
        }
    }
    if d >= 3 {
        for _ in 0..samples {
            let size = rng.gen_range(3..=d);
            let mut v: Vec<usize> = (0..d).collect();
            for i in 0..size {
                let j = rng.gen_range(i..d);
                v.swap(i, j);
            }
            v.truncate(size);
            v.sort_unstable();
            let k: Vec<u64> = v.iter().map(|_| rng.gen_range(1..k_max)).collect();
            let mut counts = vec![0u64; b as usize];
            for n in 0..n_pts {
                let e: u32 = v
                    .iter()
                    .zip(&k)
                    .map(|(&j, &kj)| classes[j].vectors[classes[j].class[kj as usize]][n])
                    .sum();
                counts[(e % b) as usize] += 1;
            }
            let (re, im) = root_sum(&counts, b, n_pts);
            let member = v.iter().zip(&k).fold(0u64, |acc, (&j, &kj)| digit_add(acc, prods[j][kj as usize], b)) == 0;
            r.check(judge(re, im, member), || format!("v={v:?} k={k:?}: sum {re}+{im}i, member {member}"));
        }
    }
}

/// Rank over `Z_b` (`b` prime) of a row-major matrix.
fn rank_mod(mut rows: Vec<Vec<u32>>, b: u32) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = (1..b).find(|&x| rows[rank][c] * x % b == 1).expect("b prime");
        for x in rows[rank].iter_mut() {
            *x = *x * inv % b;
        }
        let piv = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] != 0 {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&piv) {
                    *x = (*x + (b - f) * y) % b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Character identity over every frequency vector `k` with `0 <= k_j < b^(2m)`, all `j`.
///
/// The exponent pattern `n -> sum_j <k_j, y_j^(n)>` and the syndrome `sum_j tr_m(k_j) q_j mod P`
/// are both linear in the digits of `k`. The character sum is 1 exactly when the pattern
/// vanishes, so the identity for all `k` is equality of the two kernels, decided by ranks.
/// Every attainable pattern (at most `b^m` of them) is also summed numerically.
pub fn exhaustive_character_identity(rule: &PolyLatticeRule, r: &mut SuiteReport) {
    let b = rule.b();
    let m = rule.m();
    let n_pts = rule.n_points();
    let pts = classical_points(rule);
    let modulus = rule.modulus();
    let mut pattern: Vec<Vec<u32>> = Vec::new();
    let mut syndrome: Vec<Vec<u32>> = Vec::new();
    for (j, q) in rule.generating().iter().enumerate() {
        let col = pts.column(j);
        for i in 0..2 * m {
            let k = (b as u64).pow(i as u32);
            pattern.push(col.iter().map(|&y| walsh_exponent(k, y, m, b) % b).collect());
            let tr = PolyGF::from_int(b, k).truncate(m);
            let red = modulus.reduce(&(&tr * q));
            syndrome.push((0..m).map(|t| red.coeff(t)).collect());
        }
    }
    let transpose = |cols: &[Vec<u32>]| -> Vec<Vec<u32>> {
        let h = cols.first().map_or(0, Vec::len);
        (0..h).map(|t| cols.iter().map(|c| c[t]).collect()).collect()
    };
    let pe = transpose(&pattern);
    let ps = transpose(&syndrome);
    let (re, rs) = (rank_mod(pe.clone(), b), rank_mod(ps.clone(), b));
    let joint = rank_mod(pe.into_iter().chain(ps).collect(), b);
    r.check(re == rs && rs == joint, || {
        format!("P={} q={:?}: ranks pattern {re}, syndrome {rs}, joint {joint}", modulus.poly().to_int(), rule.generating().iter().map(PolyGF::to_int).collect::<Vec<_>>())
    });
    // every attainable exponent pattern, from a basis of the pattern space
    let mut basis: Vec<Vec<u32>> = Vec::new();
    for c in &pattern {
        let mut trial = basis.clone();
        trial.push(c.clone());
        if rank_mod(trial, b) > basis.len() {
            basis.push(c.clone());
        }
    }
    let total = (b as u64).pow(basis.len() as u32);
    for idx in 0..total {
        let mut e = vec![0u32; n_pts];
        let mut rest = idx;
        for v in &basis {
            let c = (rest % b as u64) as u32;
            rest /= b as u64;
            for (x, &y) in e.iter_mut().zip(v) {
                *x = (*x + c * y) % b;
            }
        }
        let mut counts = vec![0u64; b as usize];
        for &x in &e {
            counts[x as usize] += 1;
        }
        let (sr, si) = root_sum(&counts, b, n_pts);
        let target = if e.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
        r.check((sr - target).abs() <= 1e-12 && si.abs() <= 1e-12, || format!("pattern {idx}: sum {sr}+{si}i"));
    }
}

/// Points above which file checks sample frequency vectors instead of enumerating pairs.
pub const EXHAUSTIVE_MAX_POINTS: usize = 32;

/// Random `(v, k)` character sums against dual membership. Every other sample solves the
/// last frequency so that `k` lies in the dual net.
pub fn sampled_character_sums(rule: &PolyLatticeRule, samples: usize, rng: &mut StdRng, r: &mut SuiteReport) {
    let b = rule.b();
    let m = rule.m();
    let d = rule.d();
    let pts = classical_points(rule);
    let modulus = rule.modulus();
    let q: Vec<PolyGF> = rule.generating().to_vec();
    let bm = (b as u64).pow(m as u32);
    let digits_cap = (63.0 / (b as f64).log2()).floor() as usize;
    let k_max = (b as u64).pow((2 * m).min(digits_cap) as u32);
    let unit_order = bm - 1;
    for i in 0..samples {
        let size = rng.gen_range(1..=d.min(4));
        let mut v: Vec<usize> = (0..d).collect();
        for t in 0..size {
            let j = rng.gen_range(t..d);
            v.swap(t, j);
        }
        v.truncate(size);
        v.sort_unstable();
        let mut k: Vec<u64> = v.iter().map(|_| rng.gen_range(1..k_max)).collect();
        let last = *v.last().expect("nonempty");
        if i % 2 == 1 && !q[last].is_zero() && k_max > bm {
            let mut syn = PolyGF::zero(b);
            for (&j, &kj) in v.iter().zip(&k).take(size - 1) {
                syn = &syn + &(&PolyGF::from_int(b, kj).truncate(m) * &q[j]);
            }
            let inv = q[last].pow_mod(unit_order - 1, modulus.poly());
            let need = modulus.reduce(&(&syn.scale(b - 1) * &inv));
            let hi = rng.gen_range(0..k_max / bm);
            let kl = need.to_int() + hi * bm;
            if kl == 0 {
                continue;
            }
            k[size - 1] = kl;
        }
        let z = character_sum(&pts, &v, &k);
        let member = dual_membership(&k, &v, &q, modulus);
        let target = if member { 1.0 } else { 0.0 };
        r.check((z.re - target).abs() <= 1e-9 && z.im.abs() <= 1e-9, || {
            format!("v={v:?} k={k:?}: sum {}+{}i, member {member}", z.re, z.im)
        });
    }
}

pub fn suite_character_sums(cases: &[GridCase], max_points: u64, samples: usize, seed: u64) -> SuiteReport {
    timed("character-sums", |r| {
        let mut rng = StdRng::seed_from_u64(seed);
        for c in cases {
            if c.fast.modulus.order() > max_points || c.fast.q.len() > 6 {
                continue;
            }
            let rule = PolyLatticeRule::from_encodings(c.fast.modulus.clone(), &c.fast.q).expect("constructed");
            exhaustive_character_identity(&rule, r);
            check_character_sums(&rule, samples, &mut rng, r);
        }
    })
}

/// `1/N sum_n prod_{j in v} omega(y_j^(n))` inside the truncated dual sum plus tail, `|v| <= 2`.
pub fn suite_kernel_dual(cases: &[GridCase], max_points: u64) -> SuiteReport {
    timed("kernel-dual", |r| {
        for c in cases {
            let modulus = &c.fast.modulus;
            if modulus.order() > max_points {
                continue;
            }
            let m = modulus.degree();
            let alpha = c.spec.alpha();
            let rule = PolyLatticeRule::from_encodings(modulus.clone(), &c.fast.q).expect("constructed");
            let pts = classical_points(&rule);
            let table = OmegaTable::new(modulus.base(), m, alpha).expect("valid");
            let d = rule.d();
            let mut sets: Vec<Vec<usize>> = (0..d).map(|j| vec![j]).collect();
            for j1 in 0..d {
                for j2 in j1 + 1..d {
                    sets.push(vec![j1, j2]);
                }
            }
            for v in sets {
                let lhs = pts
                    .rows()
                    .map(|row| v.iter().map(|&j| table.value(row[j])).product::<f64>())
                    .sum::<f64>()
                    / pts.len() as f64;
                match dual_kernel_sum_truncated(&rule, &v, alpha, m + 4) {
                    Ok(t) => r.check(t.contains(lhs, 1e-14), || {
                        format!("m={m} q={:?} v={v:?}: {lhs:e} outside [{:e}, {:e}]", c.fast.q, t.partial, t.partial + t.tail)
                    }),
                    Err(e) => r.check(false, || e.to_string()),
                }
            }
        }
    })
}

/// `mu_alpha(E_alpha(z)) >= alpha sum mu_1(z_j) - alpha(alpha-1)/2` for `b = 2`, `z_j < 16`;
/// equality form at `alpha = 1`.
pub fn suite_mu_inequality() -> SuiteReport {
    timed("mu-inequality", |r| {
        let b = 2u32;
        let limit = 16u64;
        for alpha in [2usize, 3] {
            for code in 0..limit.pow(alpha as u32) {
                let zs: Vec<u64> = (0..alpha).map(|i| (code / limit.pow(i as u32)) % limit).collect();
                let lhs = mu_alpha(interlace_integer(&zs, b), alpha, b) as i64;
                let mu1: i64 = zs.iter().map(|&z| mu_alpha(z, 1, b) as i64).sum();
                let a = alpha as i64;
                r.check(lhs >= a * mu1 - a * (a - 1) / 2, || format!("alpha={alpha} z={zs:?}"));
            }
        }
        for z in 0..limit {
            r.check(interlace_integer(&[z], b) == z, || format!("E_1({z})"));
            r.check(
                mu_alpha(interlace_integer(&[z], b), 1, b) == mu_alpha(z, 1, b),
                || format!("mu_1 identity at {z}"),
            );
        }
    })
}

/// `E_(alpha s')(q*) <= cbc_bound(lambda)` on the grid, strict at `lambda = p`, for each `s' <= s`.
pub fn suite_certified_bound(cases: &[GridCase]) -> SuiteReport {
    timed("certified-bound", |r| {
        for c in cases {
            let alpha = c.spec.alpha();
            let p = c.spec.p();
            for s in 1..=c.s {
                let e = c.fast.criterion[alpha * s - 1];
                for lambda in lambda_grid(alpha, p) {
                    let bound = cbc_bound(lambda, &c.spec, c.m, s).unwrap_or(f64::NAN);
                    let ok = if lambda == p { e < bound } else { e <= bound };
                    r.check(ok, || {
                        format!("b={} m={} alpha={alpha} {} s={s} lambda={lambda}: E={e:e} bound={bound:e}",
                            c.spec.b(), c.m, c.spec.family())
                    });
                }
            }
        }
    })
}

/// All suites at a preset scale.
pub fn run_preset(preset: Preset) -> Result<VerifyReport> {
    let sc = scale(preset);
    let cases = grid_cases(&sc.bases, &sc.ms, &sc.alphas, sc.s_max)?;
    let suites = vec![
        suite_fast_vs_naive(&cases),
        suite_rader(&sc.rader_m, sc.rader_vectors, 7),
        suite_character_sums(&cases, sc.char_points, sc.char_samples, 11),
        suite_kernel_dual(&cases, sc.char_points),
        suite_mu_inequality(),
        suite_certified_bound(&cases),
    ];
    Ok(VerifyReport {
        preset: Some(preset),
        suites,
    })
}

/// Checks a generating-vector file: structure and character sums, and the recorded
/// criterion trace when the weights are recorded.
pub fn verify_file(file: &VectorFile) -> VerifyReport {
    let mut suites = Vec::new();
    let rule = file.rule();
    suites.push(timed("character-sums", |r| {
        let modulus_ok = file.modulus();
        r.check(modulus_ok.is_ok(), || format!("modulus: {}", modulus_ok.as_ref().err().map(|e| e.to_string()).unwrap_or_default()));
        match &rule {
            Ok(rule) => {
                let mut rng = StdRng::seed_from_u64(13);
                let n = rule.base().n_points();
                exhaustive_character_identity(rule.base(), r);
                if n <= EXHAUSTIVE_MAX_POINTS {
                    check_character_sums(rule.base(), 500, &mut rng, r);
                } else {
                    let budget = ((1usize << 24) / (n * rule.base().d())).clamp(20, 1000);
                    sampled_character_sums(rule.base(), budget, &mut rng, r);
                }
            }
            Err(e) => r.check(false, || format!("rule: {e}")),
        }
    }));
    if let (Ok(rule), Some(cons)) = (&rule, &file.construction) {
        if let Some(w) = &cons.weights {
            suites.push(timed("criterion-trace", |r| {
                let trace = WeightSpec::from_file(w).and_then(|spec| {
                    let order = cons.kernel_order.unwrap_or(file.alpha);
                    criterion_trace(rule.base().modulus(), file.alpha, order, &spec.cbc_factors(file.s), &file.q)
                });
                match trace {
                    Ok(t) => {
                        r.check(t.len() == cons.e_trace.len(), || "trace length".into());
                        for (d, (x, y)) in t.iter().zip(&cons.e_trace).enumerate() {
                            let rel = (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
                            r.check(rel <= 1e-9, || format!("E_{} recorded {y:e}, recomputed {x:e}", d + 1));
                        }
                    }
                    Err(e) => r.check(false, || e.to_string()),
                }
            }));
        }
    }
    VerifyReport { preset: None, suites }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_passes() {
        let report = run_preset(Preset::Smoke).unwrap();
        for s in &report.suites {
            assert!(s.passed(), "{}: {:?}", s.name, s.first_failure);
            assert!(s.checks > 0, "{}", s.name);
        }
    }

    #[test]
    fn corrupted_modulus_fails_character_suite() {
        let spec = WeightSpec::new(WeightFamily::Spod, 2, Some(2), grid_beta()).unwrap();
        let res = cbc_spod(4, 2, &spec).unwrap();
        let mut file = VectorFile::from_result(&res, Some(&spec), false);
        assert!(verify_file(&file).passed());
        file.p = 0b10001; // x^4 + 1 is reducible
        let report = verify_file(&file);
        assert!(!report.suite("character-sums").unwrap().passed());
    }

    #[test]
    fn rank_identity_holds() {
        let modulus = find_irreducible(2, 4).unwrap();
        let rule = PolyLatticeRule::from_encodings(modulus, &[1, 7, 9]).unwrap();
        let mut r = SuiteReport::new("x");
        exhaustive_character_identity(&rule, &mut r);
        assert!(r.passed(), "{:?}", r.first_failure);
        assert_eq!(rank_mod(vec![vec![1, 1], vec![1, 1]], 2), 1);
        assert_eq!(rank_mod(vec![vec![1, 2], vec![2, 1]], 3), 1);
        assert_eq!(rank_mod(vec![vec![1, 0], vec![1, 1]], 3), 2);
    }

    #[test]
    fn sampled_sums_hit_members() {
        let spec = WeightSpec::new(WeightFamily::Spod, 2, Some(2), grid_beta()).unwrap();
        let res = cbc_spod(8, 3, &spec).unwrap();
        let rule = PolyLatticeRule::from_encodings(res.modulus.clone(), &res.q).unwrap();
        let mut r = SuiteReport::new("s");
        sampled_character_sums(&rule, 200, &mut StdRng::seed_from_u64(1), &mut r);
        assert!(r.passed(), "{:?}", r.first_failure);
        assert!(r.checks >= 150);
        let file = VectorFile::from_result(&res, Some(&spec), false);
        assert!(verify_file(&file).passed());
    }

    #[test]
    fn corrupted_component_fails_trace() {
        let spec = WeightSpec::new(WeightFamily::Product, 2, Some(2), grid_beta()).unwrap();
        let res = cbc_product(5, 2, &spec).unwrap();
        let mut file = VectorFile::from_result(&res, Some(&spec), false);
        file.q[2] = if file.q[2] == 1 { 2 } else { 1 };
        let report = verify_file(&file);
        assert!(!report.passed());
    }
}
