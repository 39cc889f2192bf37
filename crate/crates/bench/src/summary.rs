//! Aggregates over scan rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scan::ScanRow;
use crate::CHEMICAL_ACCURACY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub molecule: String,
    pub basis: String,
    pub method: String,
    pub eps: Option<f64>,
    pub n_points: usize,
    pub mean_params: f64,
    pub min_params: usize,
    pub max_params: usize,
    /// Fraction of points with `abs_err` below chemical accuracy.
    pub chem_acc_fraction: f64,
    pub max_abs_err: f64,
    /// Rows that failed and were left out of the statistics.
    pub n_failed: usize,
}

/// Mean-parameter ratio of two methods at equal threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub molecule: String,
    pub basis: String,
    pub eps: f64,
    pub numerator: String,
    pub denominator: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub ratios: Vec<RatioRow>,
}

impl Summary {
    pub fn find(&self, molecule: &str, basis: &str, method: &str, eps: Option<f64>) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.molecule == molecule && r.basis == basis && r.method == method && r.eps == eps)
    }

    pub fn ratio(&self, molecule: &str, basis: &str, eps: f64) -> Option<f64> {
        self.ratios
            .iter()
            .find(|r| r.molecule == molecule && r.basis == basis && r.eps == eps)
            .map(|r| r.ratio)
    }
}

// f64 thresholds keyed by bit pattern, so groups keep first-seen order
type Key = (String, String, String, Option<u64>);

pub fn summarize(rows: &[ScanRow]) -> Summary {
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, Vec<&ScanRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.molecule.clone(), r.basis.clone(), r.method.clone(), r.eps.map(f64::to_bits));
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let mut out = Summary::default();
    for key in &order {
        let all = &groups[key];
        let good: Vec<&&ScanRow> = all.iter().filter(|r| r.is_ok() || r.status == "below-fci").collect();
        let n = good.len();
        let params: Vec<usize> = good.iter().map(|r| r.n_params).collect();
        out.rows.push(SummaryRow {
            molecule: key.0.clone(),
            basis: key.1.clone(),
            method: key.2.clone(),
            eps: key.3.map(f64::from_bits),
            n_points: n,
            mean_params: if n == 0 { f64::NAN } else { params.iter().sum::<usize>() as f64 / n as f64 },
            min_params: params.iter().copied().min().unwrap_or(0),
            max_params: params.iter().copied().max().unwrap_or(0),
            chem_acc_fraction: if n == 0 {
                f64::NAN
            } else {
                good.iter().filter(|r| r.abs_err < CHEMICAL_ACCURACY).count() as f64 / n as f64
            },
            max_abs_err: good.iter().map(|r| r.abs_err).fold(0.0, f64::max),
            n_failed: all.len() - n,
        });
    }
    for s in &out.rows {
        if s.method != "uscc" {
            continue;
        }
        let Some(eps) = s.eps else { continue };
        if let Some(a) = out.find(&s.molecule, &s.basis, "adapt", Some(eps)) {
            if a.mean_params > 0.0 {
                out.ratios.push(RatioRow {
                    molecule: s.molecule.clone(),
                    basis: s.basis.clone(),
                    eps,
                    numerator: "uscc".into(),
                    denominator: "adapt".into(),
                    ratio: s.mean_params / a.mean_params,
                });
            }
        }
    }
    out
}
