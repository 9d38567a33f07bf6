//! Delimited-text reports of the numerical theory checks, one row per configuration.

use std::io::Write;
use std::str::FromStr;

use treebandit_core::theory::{
    lemma1_slope, sup_cdf_distance, theorem1_report, theorem1_slope, tie_bound_exhaustive, ArmSummary,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryMode {
    Lemma1,
    Lemma2,
    Theorem1,
    Slopes,
}

impl FromStr for TheoryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma1" => Ok(Self::Lemma1),
            "lemma2" => Ok(Self::Lemma2),
            "theorem1" => Ok(Self::Theorem1),
            "slopes" => Ok(Self::Slopes),
            _ => Err(Error::Config(format!("unknown theory mode `{s}` (lemma1, lemma2, theorem1, slopes)"))),
        }
    }
}

pub const LEMMA1_NS: [u64; 5] = [16, 64, 256, 1024, 4096];
pub const LEMMA1_PS: [f64; 3] = [0.5, 0.25, 0.125];
pub const TIE_BOUND_MAX_N: u64 = 64;
pub const THEOREM1_FACTORS: [u64; 4] = [1, 4, 16, 64];

/// Arm sets scaled by [`THEOREM1_FACTORS`]: `(n, p)` per arm.
pub const THEOREM1_BASES: [&[(u64, f64)]; 2] = [&[(2, 0.5), (3, 2.0 / 3.0)], &[(3, 1.0 / 3.0), (6, 1.0 / 3.0)]];

fn arms(base: &[(u64, f64)]) -> Result<Vec<ArmSummary>> {
    Ok(base.iter().map(|&(n, p)| ArmSummary::from_rate(n, p)).collect::<treebandit_core::Result<_>>()?)
}

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_report<W: Write>(mode: TheoryMode, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |source| Error::Csv { path: "<report>".into(), source };
    match mode {
        TheoryMode::Lemma1 => {
            w.write_record(["n", "p", "sup_distance", "z_star", "left_limit", "scaled_distance", "slope"]).map_err(err)?;
            for p in LEMMA1_PS {
                let slope = lemma1_slope(p, &LEMMA1_NS)?.slope;
                for n in LEMMA1_NS {
                    let r = sup_cdf_distance(ArmSummary::from_rate(n, p)?)?;
                    let row = [
                        n.to_string(),
                        p.to_string(),
                        r.sup_distance.to_string(),
                        r.z_star.to_string(),
                        r.left_limit.to_string(),
                        (r.sup_distance * (n as f64).sqrt()).to_string(),
                        slope.to_string(),
                    ];
                    w.write_record(row).map_err(err)?;
                }
            }
        }
        TheoryMode::Lemma2 => {
            w.write_record(["n", "p", "tie_cap", "argmax", "bound", "ok"]).map_err(err)?;
            for r in tie_bound_exhaustive(TIE_BOUND_MAX_N) {
                let row = [r.n.to_string(), r.p.to_string(), r.tie_cap.to_string(), r.argmax.to_string(), r.bound.to_string(), r.ok.to_string()];
                w.write_record(row).map_err(err)?;
            }
        }
        TheoryMode::Theorem1 => {
            w.write_record(["n", "p", "ts_probs", "bootstrap_probs", "max_abs_diff", "bound"]).map_err(err)?;
            for base in THEOREM1_BASES {
                for factor in THEOREM1_FACTORS {
                    let set = arms(base)?.iter().map(|a| a.scaled(factor)).collect::<treebandit_core::Result<Vec<_>>>()?;
                    let r = theorem1_report(&set)?;
                    let row = [
                        join(set.iter().map(|a| a.n())),
                        join(set.iter().map(|a| a.p())),
                        join(&r.ts_probs),
                        join(&r.bootstrap_probs),
                        r.max_abs_diff.to_string(),
                        r.bound.to_string(),
                    ];
                    w.write_record(row).map_err(err)?;
                }
            }
        }
        TheoryMode::Slopes => {
            w.write_record(["kind", "p", "n", "values", "slope"]).map_err(err)?;
            for p in LEMMA1_PS {
                let r = lemma1_slope(p, &LEMMA1_NS)?;
                let row = ["lemma1".to_string(), p.to_string(), join(r.points.iter().map(|q| q.0)), join(r.points.iter().map(|q| q.1)), r.slope.to_string()];
                w.write_record(row).map_err(err)?;
            }
            for base in THEOREM1_BASES {
                let set = arms(base)?;
                let ps = join(set.iter().map(|a| a.p()));
                let row = match theorem1_slope(&set, &THEOREM1_FACTORS) {
                    Ok(r) => ["theorem1".to_string(), ps, join(r.points.iter().map(|q| q.0)), join(r.points.iter().map(|q| q.1)), r.slope.to_string()],
                    Err(e) => ["theorem1".to_string(), ps, String::new(), String::new(), e.to_string()],
                };
                w.write_record(row).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io { path: "<report>".into(), source })
}
