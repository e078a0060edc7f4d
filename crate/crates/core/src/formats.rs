//! Generating-vector JSON and point CSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cbc::CbcResult;
use crate::error::{Error, Result};
use crate::gf_poly::{checked_pow, Modulus, PolyGF};
use crate::pointgen::{InterlacedRule, PointSet, PolyLatticeRule};
use crate::weights::{WeightSpec, WeightSpecFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub family: String,
    #[serde(rename = "E_trace")]
    pub e_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
    /// Kernel order used in the criterion, when it differs from `alpha`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<WeightSpecFile>,
}

/// `{b, m, s, alpha, P, q, construction}`; `P` and `q` are integer encodings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFile {
    pub b: u32,
    pub m: usize,
    pub s: usize,
    pub alpha: usize,
    #[serde(rename = "P")]
    pub p: u64,
    pub q: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub construction: Option<Construction>,
}

impl VectorFile {
    /// `with_time` controls whether the wall time is recorded; without it the file is a
    /// function of the inputs only.
    pub fn from_result(res: &CbcResult, spec: Option<&WeightSpec>, with_time: bool) -> Self {
        VectorFile {
            b: res.b(),
            m: res.m(),
            s: res.s,
            alpha: res.alpha,
            p: res.modulus.poly().to_int(),
            q: res.q.clone(),
            construction: Some(Construction {
                family: res.family.clone(),
                e_trace: res.criterion.clone(),
                wall_time: with_time.then_some(res.wall_time),
                kernel_order: (res.kernel_order != res.alpha).then_some(res.kernel_order),
                weights: spec.map(WeightSpec::to_file),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Checks and builds the modulus.
    pub fn modulus(&self) -> Result<Modulus> {
        checked_pow(self.b, self.m).ok_or_else(|| Error::Envelope(format!("{}^{} overflows", self.b, self.m)))?;
        let poly = PolyGF::from_int(self.b, self.p);
        if poly.degree() != Some(self.m) {
            return Err(Error::Format(format!("P has degree {:?}, expected m = {}", poly.degree(), self.m)));
        }
        Modulus::new(poly)
    }

    pub fn rule(&self) -> Result<InterlacedRule> {
        if self.q.len() != self.alpha * self.s {
            return Err(Error::DimensionMismatch {
                expected: self.alpha * self.s,
                got: self.q.len(),
            });
        }
        let base = PolyLatticeRule::from_encodings(self.modulus()?, &self.q)?;
        InterlacedRule::new(self.alpha, base)
    }
}

/// CSV without header, one row per point. Floats carry 17 significant digits;
/// `exact` writes `numerator/denominator`.
pub fn points_csv(pts: &PointSet, count: Option<usize>, exact: bool) -> String {
    let rows = count.map_or(pts.len(), |c| c.min(pts.len()));
    let den = pts.denominator();
    let mut out = String::with_capacity(rows * pts.s() * 24);
    for n in 0..rows {
        for (j, &num) in pts.row(n).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            if exact {
                let _ = write!(out, "{num}/{den}");
            } else {
                let _ = write!(out, "{:.16e}", num as f64 / den as f64);
            }
        }
        out.push('\n');
    }
    out
}
