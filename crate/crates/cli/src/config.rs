use std::path::PathBuf;

use anyhow::{bail, Context};
use hoqmc::integrands::IntegrandKind;
use hoqmc::weights::{BetaFamily, BetaSequence, WeightFamily, WeightSpec};
use serde::{Deserialize, Serialize};

/// Run parameters; each field may come from a JSON config file or a flag, flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub b: Option<u32>,
    pub m: Option<usize>,
    pub m_min: Option<usize>,
    pub m_max: Option<usize>,
    pub s: Option<usize>,
    pub p: Option<f64>,
    pub alpha: Option<usize>,
    pub weights: Option<WeightFamily>,
    /// Full beta family; `beta_c`/`beta_theta` override it with a power law.
    pub beta: Option<BetaFamily>,
    pub beta_c: Option<f64>,
    pub beta_theta: Option<f64>,
    pub integrand: Option<IntegrandKind>,
    pub baseline: Option<bool>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(b, m, m_min, m_max, s, p, alpha, weights, beta, beta_c, beta_theta, integrand, baseline, out)
    }

    pub fn b(&self) -> u32 {
        self.b.unwrap_or(2)
    }

    pub fn family(&self) -> WeightFamily {
        self.weights.unwrap_or(WeightFamily::Spod)
    }

    pub fn require_m(&self) -> anyhow::Result<usize> {
        self.m.context("missing --m")
    }

    pub fn require_s(&self) -> anyhow::Result<usize> {
        self.s.context("missing --s")
    }

    pub fn beta(&self) -> anyhow::Result<BetaSequence> {
        let p = self.p.context("missing --p")?;
        let family = match (self.beta_c, self.beta_theta, &self.beta) {
            (None, None, Some(f)) => f.clone(),
            (c, theta, Some(BetaFamily::Power { c: c0, theta: t0 })) => BetaFamily::Power {
                c: c.unwrap_or(*c0),
                theta: theta.unwrap_or(*t0),
            },
            (c, theta, _) => BetaFamily::Power {
                c: c.unwrap_or(0.1),
                theta: theta.unwrap_or(2.0),
            },
        };
        Ok(BetaSequence::new(family, p)?)
    }

    pub fn spec(&self) -> anyhow::Result<WeightSpec> {
        Ok(WeightSpec::new(self.family(), self.b(), self.alpha, self.beta()?)?)
    }

    pub fn m_range(&self) -> anyhow::Result<(usize, usize)> {
        let lo = self.m_min.or(self.m).context("missing --m-min")?;
        let hi = self.m_max.or(self.m).context("missing --m-max")?;
        if lo > hi {
            bail!("m range {lo}..{hi} is empty");
        }
        Ok((lo, hi))
    }
}
