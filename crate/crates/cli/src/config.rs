//! Command line, JSON config, and their merge into fully resolved parameters.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use siegel_core::degree_one::Summation;
use siegel_core::{Family, GroupDescriptor, TruncationParams};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    VerifyScaling,
    VerifyLimit,
    VerifyLipschitz,
    CuspConfig,
    CosetCount,
    KloostermanTable,
    PeterssonGram,
    LargeSieve,
    Nonvanishing,
    LinearIndependence,
    BergmanDomainBound,
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

/// Integers written as `a:b:step`, `a:b`, or a comma list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntList(pub Vec<u64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("'{t}': {e}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let (lo, hi, step) = match parts.as_slice() {
                [a, b] => (num(a)?, num(b)?, 1),
                [a, b, c] => (num(a)?, num(b)?, num(c)?),
                _ => return Err(format!("range '{s}' must be a:b or a:b:step")),
            };
            if step == 0 || hi < lo {
                return Err(format!("empty range '{s}'"));
            }
            return Ok(Self((lo..=hi).step_by(step as usize).collect()));
        }
        let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Self(v))
    }
}

impl<'de> Deserialize<'de> for IntList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(u64),
            Many(Vec<u64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(Self(vec![v])),
            Raw::Many(v) => Ok(Self(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every tunable, optional so that a config file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Siegel degree n.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Congruence family: full, gamma0, gamma_upper0, gamma0_upper0, gamma1, principal.
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub level: Option<u64>,
    /// Weights, e.g. `12:60:4` or `12,16`.
    #[arg(long)]
    pub k: Option<IntList>,
    /// Primes for the degree-two level-p experiments.
    #[arg(long)]
    pub p: Option<IntList>,
    /// Levels of Γ₀(q) for the degree-one Gram experiments.
    #[arg(long)]
    pub q: Option<IntList>,
    /// Gram matrix size.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub size: Option<usize>,
    /// Forms `t·1_n`, or Kloosterman indices.
    #[arg(long)]
    pub t: Option<IntList>,
    #[arg(long)]
    pub c_max: Option<u64>,
    #[arg(long)]
    pub summation: Option<Summation>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub coset_height: Option<u64>,
    #[arg(long)]
    pub quadrature_grid: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Points per `y` axis of search grids.
    #[arg(long)]
    pub y_steps: Option<usize>,
    /// Acceptance tolerance; its meaning is per experiment.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    /// Fields set in `over` win.
    pub fn overlay(self, over: Self) -> Self {
        Self {
            degree: over.degree.or(self.degree),
            family: over.family.or(self.family),
            level: over.level.or(self.level),
            k: over.k.or(self.k),
            p: over.p.or(self.p),
            q: over.q.or(self.q),
            size: over.size.or(self.size),
            t: over.t.or(self.t),
            c_max: over.c_max.or(self.c_max),
            summation: over.summation.or(self.summation),
            seed: over.seed.or(self.seed),
            trials: over.trials.or(self.trials),
            coset_height: over.coset_height.or(self.coset_height),
            quadrature_grid: over.quadrature_grid.or(self.quadrature_grid),
            tail_tol: over.tail_tol.or(self.tail_tol),
            y_steps: over.y_steps.or(self.y_steps),
            tol: over.tol.or(self.tol),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lab", version, about = "Run one registered verification experiment")]
pub struct Cli {
    pub experiment: ExperimentName,
    /// JSON file with any of the flag fields in camelCase; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving result.json and sweep.csv.
    #[arg(long, default_value = "lab-out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: ExperimentConfig,
}

/// Parameters after defaults, recorded verbatim in `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Resolved {
    pub experiment: ExperimentName,
    pub degree: usize,
    pub family: Family,
    pub level: u64,
    pub k: Vec<u64>,
    pub p: Vec<u64>,
    pub q: Vec<u64>,
    #[serde(rename = "K")]
    pub size: usize,
    pub t: Vec<u64>,
    pub summation: Summation,
    pub seed: u64,
    pub trials: usize,
    pub y_steps: usize,
    pub tol: f64,
    pub truncation: TruncationParams,
}

impl Resolved {
    pub fn group(&self) -> Result<GroupDescriptor, LabError> {
        Ok(GroupDescriptor::new(self.degree, self.family, self.level)?)
    }
}

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

fn list(v: &Option<IntList>, default: &[u64]) -> Vec<u64> {
    v.as_ref().map_or_else(|| default.to_vec(), |l| l.0.clone())
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Fills defaults for `name` and checks the result against what the
/// experiment accepts.
pub fn resolve(name: ExperimentName, cfg: &ExperimentConfig) -> Result<Resolved, LabError> {
    use ExperimentName::*;
    let degree = cfg.degree.unwrap_or(match name {
        CuspConfig | CosetCount => 2,
        _ => 1,
    });
    let allowed: &[usize] = match name {
        VerifyScaling | VerifyLimit | VerifyLipschitz | Nonvanishing | LinearIndependence | BergmanDomainBound => &[1, 2],
        CuspConfig | CosetCount => &[2],
        KloostermanTable | PeterssonGram | LargeSieve => &[1],
    };
    if !allowed.contains(&degree) {
        return Err(usage(format!("{name} supports degree {allowed:?}, got {degree}")));
    }
    let two = degree == 2;
    let (family, level) = match name {
        BergmanDomainBound if !two => (cfg.family.unwrap_or(Family::Gamma0), cfg.level.unwrap_or(2)),
        _ => (cfg.family.unwrap_or(Family::Full), cfg.level.unwrap_or(1)),
    };
    let k = list(
        &cfg.k,
        match (name, two) {
            (VerifyScaling, false) => &[12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44, 46, 48, 50, 52, 54, 56, 58, 60],
            (VerifyScaling, true) => &[10, 12, 14, 16, 18, 20, 22, 24],
            (VerifyLimit, false) => &[40],
            (VerifyLimit, true) => &[30],
            (VerifyLipschitz, false) => &[4, 8, 12],
            (VerifyLipschitz, true) => &[6],
            (Nonvanishing, _) => &[24],
            (LinearIndependence, _) => &[40],
            (BergmanDomainBound, false) => &[8, 16, 24, 32],
            (BergmanDomainBound, true) => &[10, 12],
            _ => &[],
        },
    );
    let t = list(
        &cfg.t,
        match name {
            Nonvanishing => &[1, 2, 3, 4, 5],
            LinearIndependence => &[1, 2, 3],
            KloostermanTable => &[1, 2, 3],
            _ => &[1],
        },
    );
    let p = list(&cfg.p, if name == CuspConfig { &[3] } else { &[2, 3, 5] });
    let q = list(&cfg.q, if name == LargeSieve { &[11, 17, 23] } else { &[11] });
    let tol = cfg.tol.unwrap_or(match (name, two) {
        (VerifyScaling, false) => 0.15,
        (VerifyScaling, true) => 0.5,
        (VerifyLimit, false) => 0.01,
        (VerifyLimit, true) => 0.8,
        (VerifyLipschitz, false) => 1e-10,
        (VerifyLipschitz, true) => 1e-6,
        (KloostermanTable, _) => 1e-12,
        (PeterssonGram, _) => 0.05,
        (LargeSieve, _) => 50.0,
        (BergmanDomainBound, _) => 0.1,
        _ => 0.0,
    });
    let mut truncation = TruncationParams::for_degree(degree);
    if two && matches!(name, VerifyScaling | BergmanDomainBound) {
        truncation.tail_tol = 1e-6;
    }
    truncation.c_max = match name {
        KloostermanTable => 50,
        PeterssonGram => 64_000,
        LargeSieve => 8000,
        _ => truncation.c_max,
    };
    if let Some(c) = cfg.c_max {
        truncation.c_max = c;
    }
    if let Some(h) = cfg.coset_height {
        truncation.coset_height = h;
    }
    if let Some(g) = cfg.quadrature_grid {
        truncation.quadrature_grid = g;
    }
    if let Some(tt) = cfg.tail_tol {
        truncation.tail_tol = tt;
    }
    truncation.validate()?;
    let out = Resolved {
        experiment: name,
        degree,
        family,
        level,
        k,
        p,
        q,
        size: cfg.size.unwrap_or(10),
        t,
        summation: cfg.summation.unwrap_or_default(),
        seed: cfg.seed.unwrap_or(7),
        trials: cfg.trials.unwrap_or(100),
        y_steps: cfg.y_steps.unwrap_or(match (name, two) {
            (BergmanDomainBound, false) => 8,
            (BergmanDomainBound, true) => 3,
            (_, true) => 6,
            (_, false) => 40,
        }),
        tol,
        truncation,
    };
    validate(&out)?;
    Ok(out)
}

fn validate(r: &Resolved) -> Result<(), LabError> {
    use ExperimentName::*;
    let n = r.degree as u64;
    r.group()?;
    if r.k.is_empty() && matches!(r.experiment, VerifyScaling | VerifyLimit | VerifyLipschitz | Nonvanishing | LinearIndependence | BergmanDomainBound) {
        return Err(usage("weight list is empty"));
    }
    let min_k = match r.experiment {
        VerifyLipschitz => n + 1,
        BergmanDomainBound => (n + 1) * (n + 1) + 1,
        _ => 2 * n + 2,
    };
    if let Some(&k) = r.k.iter().find(|&&k| k < min_k || k > 400) {
        return Err(usage(format!("weight {k} outside [{min_k}, 400] for {}", r.experiment)));
    }
    if matches!(r.experiment, VerifyScaling) && r.k.len() < 2 {
        return Err(usage("a slope needs at least two weights"));
    }
    if matches!(r.experiment, CuspConfig | CosetCount) {
        if let Some(&p) = r.p.iter().find(|&&p| !is_prime(p)) {
            return Err(usage(format!("{p} is not prime")));
        }
    }
    if matches!(r.experiment, PeterssonGram | LargeSieve) {
        if r.q.iter().any(|&q| q == 0) {
            return Err(usage("levels must be positive"));
        }
        if r.size == 0 || r.size > 64 {
            return Err(usage("K must lie in 1..=64"));
        }
        if r.trials == 0 {
            return Err(usage("trials must be positive"));
        }
    }
    if r.t.iter().any(|&t| t == 0) {
        return Err(usage("forms and indices must be positive"));
    }
    if r.experiment == BergmanDomainBound && r.degree == 1 {
        let prime_gamma0 = r.family == Family::Gamma0 && is_prime(r.level);
        if !(prime_gamma0 || r.level == 1) {
            return Err(usage("bergman-domain-bound needs the full group or Γ₀(p) with p prime"));
        }
    }
    if r.experiment == BergmanDomainBound && r.degree == 2 && r.level != 1 {
        return Err(usage("bergman-domain-bound in degree 2 is limited to the full group"));
    }
    if r.y_steps == 0 {
        return Err(usage("y steps must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_list_forms() {
        assert_eq!("12:20:4".parse::<IntList>().unwrap().0, vec![12, 16, 20]);
        assert_eq!("3:5".parse::<IntList>().unwrap().0, vec![3, 4, 5]);
        assert_eq!("2,3,5".parse::<IntList>().unwrap().0, vec![2, 3, 5]);
        assert!("5:3".parse::<IntList>().is_err());
        assert!("1:2:0".parse::<IntList>().is_err());
        assert!("x".parse::<IntList>().is_err());
    }

    #[test]
    fn json_lists_accept_three_shapes() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"k": "12:16:2", "p": [2, 3], "q": 11, "K": 4}"#).unwrap();
        assert_eq!(c.k.unwrap().0, vec![12, 14, 16]);
        assert_eq!(c.p.unwrap().0, vec![2, 3]);
        assert_eq!(c.q.unwrap().0, vec![11]);
        assert_eq!(c.size, Some(4));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig { degree: Some(2), seed: Some(1), ..Default::default() };
        let flags = ExperimentConfig { seed: Some(9), ..Default::default() };
        let m = file.overlay(flags);
        assert_eq!((m.degree, m.seed), (Some(2), Some(9)));
    }

    #[test]
    fn defaults_and_rejections() {
        let r = resolve(ExperimentName::PeterssonGram, &ExperimentConfig::default()).unwrap();
        assert_eq!((r.q.clone(), r.size, r.truncation.c_max), (vec![11], 10, 64_000));
        let bad = ExperimentConfig { degree: Some(2), ..Default::default() };
        assert!(matches!(resolve(ExperimentName::LargeSieve, &bad), Err(LabError::Usage(_))));
        let small_k = ExperimentConfig { k: Some(IntList(vec![4])), ..Default::default() };
        assert!(resolve(ExperimentName::BergmanDomainBound, &small_k).is_err());
        let composite = ExperimentConfig { p: Some(IntList(vec![4])), ..Default::default() };
        assert!(resolve(ExperimentName::CosetCount, &composite).is_err());
    }
}
