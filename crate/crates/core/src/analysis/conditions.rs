//! Finite-scale evidence for the summability conditions of a coefficient table.
//!
//! A limit statement cannot be proved from finitely many rows. Each condition
//! is reported as `verified-at-scale` when its sampled values strictly
//! decrease over the last decade of samples and the terminal value sits below
//! ten times a known envelope (where one exists), `violated` when the values
//! show no decay at all over that decade, and `inconclusive` otherwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::beta_binomial::{adjacent_abs_diff_sum, beta_binomial_row_bound, Beta};
use crate::table::{CoefficientTable, TableKind};

use super::compare::lorentz_bound_via_beta2;

/// Terminal values may exceed the envelope by at most this factor.
pub const ENVELOPE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "ST1")]
    St1,
    #[serde(rename = "ST2")]
    St2,
    #[serde(rename = "ST3")]
    St3,
    #[serde(rename = "L")]
    Lorentz,
    #[serde(rename = "C")]
    Cohen,
    #[serde(rename = "BB")]
    BrezisBrowder,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::St1,
        Condition::St2,
        Condition::St3,
        Condition::Lorentz,
        Condition::Cohen,
        Condition::BrezisBrowder,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Condition::St1 => "ST1",
            Condition::St2 => "ST2",
            Condition::St3 => "ST3",
            Condition::Lorentz => "L",
            Condition::Cohen => "C",
            Condition::BrezisBrowder => "BB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    VerifiedAtScale,
    Violated,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Status::VerifiedAtScale => "verified-at-scale",
            Status::Violated => "violated",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Concrete counterexample location; `k` is absent for row-level quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: usize,
    pub k: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// `n` for row quantities, `K` for Cohen tails.
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Sample>,
    /// Sub-results (one per sampled column for ST2).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<ColumnEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnEvidence {
    pub k: usize,
    pub status: Status,
    pub terminal: Option<Sample>,
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub table: String,
    pub n_max: usize,
    pub results: Vec<ConditionResult>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn get(&self, c: Condition) -> &ConditionResult {
        self.results
            .iter()
            .find(|r| r.condition == c)
            .expect("every condition is reported")
    }

    /// One line per condition.
    pub fn verdict_lines(&self) -> Vec<String> {
        self.results
            .iter()
            .map(|r| format!("{:<3} {:<17} {}", r.condition.short(), r.status, r.detail))
            .collect()
    }
}

/// Envelope functions of `n` (or `K`) known for the table kind.
struct Envelopes {
    column: Option<Box<dyn Fn(usize) -> f64>>,
    lorentz: Option<Box<dyn Fn(usize) -> f64>>,
}

fn envelopes(kind: &TableKind) -> Envelopes {
    match kind {
        TableKind::Cesaro => Envelopes {
            column: Some(Box::new(|n| 1.0 / (n as f64 + 1.0))),
            lorentz: Some(Box::new(|n| 2.0 / (n as f64 + 1.0))),
        },
        TableKind::BetaBinomial { beta } => match Beta::new(*beta) {
            Ok(b) => {
                let constant = beta_binomial_row_bound(b, 0).constant;
                Envelopes {
                    column: Some(Box::new(move |n| constant / (n as f64 + 1.0))),
                    lorentz: Some(Box::new(move |n| 2.0 * constant / (n as f64 + 1.0))),
                }
            }
            Err(_) => Envelopes {
                column: None,
                lorentz: None,
            },
        },
        // entries are bounded by the Lorentz sum of their row (telescoping)
        TableKind::Bn { alpha } if *alpha == 4.0 => Envelopes {
            column: Some(Box::new(lorentz_bound_via_beta2)),
            lorentz: Some(Box::new(lorentz_bound_via_beta2)),
        },
        _ => Envelopes {
            column: None,
            lorentz: None,
        },
    }
}

/// Trend verdict over the last decade `[last/10, last]` of the samples.
fn trend_status(samples: &[Sample], envelope: Option<&dyn Fn(usize) -> f64>) -> (Status, String) {
    let Some(last) = samples.last() else {
        return (Status::Inconclusive, "no samples".into());
    };
    if last.value.abs() < f64::MIN_POSITIVE {
        return (
            Status::VerifiedAtScale,
            format!("identically 0 at {}", last.index),
        );
    }
    let decade: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.index * 10 >= last.index)
        .collect();
    if decade.len() < 3 {
        return (
            Status::Inconclusive,
            format!("{} samples in the last decade, need 3", decade.len()),
        );
    }
    let first = decade[0];
    let decreasing = decade.windows(2).all(|w| w[1].value < w[0].value);
    if !decreasing {
        let status = if last.value >= first.value {
            Status::Violated
        } else {
            Status::Inconclusive
        };
        return (
            status,
            format!(
                "no strict decrease over [{}, {}]: {:.6e} -> {:.6e}",
                first.index, last.index, first.value, last.value
            ),
        );
    }
    match envelope {
        Some(env) => {
            let bound = ENVELOPE_FACTOR * env(last.index);
            if last.value <= bound {
                (
                    Status::VerifiedAtScale,
                    format!(
                        "decreasing over [{}, {}], terminal {:.6e} <= 10 x envelope {:.6e}",
                        first.index,
                        last.index,
                        last.value,
                        env(last.index)
                    ),
                )
            } else {
                (
                    Status::Inconclusive,
                    format!(
                        "decreasing but terminal {:.6e} exceeds 10 x envelope {:.6e}",
                        last.value,
                        env(last.index)
                    ),
                )
            }
        }
        None => (
            Status::VerifiedAtScale,
            format!(
                "decreasing over [{}, {}], terminal {:.6e} (no envelope)",
                first.index, last.index, last.value
            ),
        ),
    }
}

fn row_witness(status: Status, samples: &[Sample]) -> Option<Witness> {
    (status == Status::Violated).then(|| {
        let s = samples.last().expect("violated implies samples");
        Witness {
            n: s.index,
            k: None,
            value: s.value,
        }
    })
}

/// `Σ_{k≥0} max{0, w_{k+1} − w_k}`
pub fn positive_increment_sum(row: &[f64]) -> f64 {
    row.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// Evidence for ST1–ST3, (L), (C) and (BB) at the sampled rows `n_samples`
/// and tail starts `k_samples`. Samples beyond the table are dropped.
pub fn check_conditions(
    table: &CoefficientTable,
    n_samples: &[usize],
    k_samples: &[usize],
) -> ConditionReport {
    let mut notes = Vec::new();
    let mut ns: Vec<usize> = n_samples
        .iter()
        .copied()
        .filter(|&n| n <= table.n_max)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < n_samples.len() {
        notes.push(format!(
            "dropped n samples beyond the table (n_max = {})",
            table.n_max
        ));
    }
    let mut ks: Vec<usize> = k_samples
        .iter()
        .copied()
        .filter(|&k| k <= table.n_max)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    notes.push(format!(
        "Cohen tail sups are taken over generated rows n <= {} only",
        table.n_max
    ));
    let env = envelopes(&table.kind);
    let rows = &table.rows;

    // ST1: sup of absolute row sums over every generated row
    let (sup_n, sup) = rows
        .iter()
        .enumerate()
        .map(|(n, r)| (n, r.iter().map(|v| v.abs()).sum::<f64>()))
        .fold((0, 0.0_f64), |b, (n, v)| if v > b.1 { (n, v) } else { b });
    let st1_tol = 1.0 + 1e-12 * (table.n_max as f64 + 1.0);
    let st1_samples: Vec<Sample> = ns
        .iter()
        .map(|&n| Sample {
            index: n,
            value: rows[n].iter().map(|v| v.abs()).sum(),
        })
        .collect();
    let st1 = if sup <= st1_tol {
        ConditionResult {
            condition: Condition::St1,
            status: Status::VerifiedAtScale,
            detail: format!("sup_n sum_k |c_nk| = {sup:.15} at n = {sup_n}"),
            witness: None,
            samples: st1_samples,
            columns: Vec::new(),
        }
    } else {
        let growing =
            st1_samples.len() >= 3 && st1_samples.windows(2).all(|w| w[1].value > w[0].value);
        ConditionResult {
            condition: Condition::St1,
            status: Status::Inconclusive,
            detail: format!(
                "sup_n sum_k |c_nk| = {sup:.6e} at n = {sup_n}{}",
                if growing { ", still growing" } else { "" }
            ),
            witness: None,
            samples: st1_samples,
            columns: Vec::new(),
        }
    };

    // ST2: each sampled column tends to zero. A column k rises until n ≈ 2k,
    // so it is only judged when the last decade of rows lies past that.
    let n_last = ns.last().copied().unwrap_or(0);
    let (col_ks, skipped): (Vec<usize>, Vec<usize>) = ks.iter().partition(|&&k| 20 * k <= n_last);
    if !skipped.is_empty() {
        notes.push(format!(
            "ST2 skips columns k > n/20 = {}: {skipped:?}",
            n_last / 20
        ));
    }
    let mut columns = Vec::new();
    let mut st2_witness = None;
    for &k in &col_ks {
        let col: Vec<Sample> = ns
            .iter()
            .filter(|&&n| n >= k)
            .map(|&n| Sample {
                index: n,
                value: table.get(n, k).abs(),
            })
            .collect();
        let (status, _) = trend_status(&col, env.column.as_deref());
        if status == Status::Violated && st2_witness.is_none() {
            let s = col.last().expect("violated implies samples");
            st2_witness = Some(Witness {
                n: s.index,
                k: Some(k),
                value: s.value,
            });
        }
        columns.push(ColumnEvidence {
            k,
            status,
            terminal: col.last().copied(),
            envelope: col
                .last()
                .and_then(|s| env.column.as_ref().map(|e| e(s.index))),
        });
    }
    let st2_status = aggregate(columns.iter().map(|c| c.status));
    let st2 = ConditionResult {
        condition: Condition::St2,
        status: st2_status,
        detail: match st2_witness {
            Some(w) => format!(
                "column k = {} does not decay: c({}, {}) = {:.6e}",
                w.k.unwrap_or(0),
                w.n,
                w.k.unwrap_or(0),
                w.value
            ),
            None => format!(
                "{} of {} sampled columns decaying",
                columns
                    .iter()
                    .filter(|c| c.status == Status::VerifiedAtScale)
                    .count(),
                columns.len()
            ),
        },
        witness: st2_witness,
        samples: Vec::new(),
        columns,
    };

    // ST3: row sums tend to one
    let st3_samples: Vec<Sample> = ns
        .iter()
        .map(|&n| Sample {
            index: n,
            value: (rows[n].iter().sum::<f64>() - 1.0).abs(),
        })
        .collect();
    let st3 = {
        let worst = st3_samples
            .iter()
            .copied()
            .max_by(|a, b| a.value.total_cmp(&b.value));
        match (st3_samples.last(), worst) {
            (None, _) | (_, None) => ConditionResult {
                condition: Condition::St3,
                status: Status::Inconclusive,
                detail: "no samples".into(),
                witness: None,
                samples: st3_samples,
                columns: Vec::new(),
            },
            (Some(last), Some(worst)) => {
                let tol = |n: usize| 1e-12 * (n as f64 + 1.0);
                let (status, detail, witness) = if last.value <= tol(last.index) {
                    (
                        Status::VerifiedAtScale,
                        format!(
                            "max |row sum - 1| = {:.3e} at n = {}",
                            worst.value, worst.index
                        ),
                        None,
                    )
                } else {
                    let (s, d) = trend_status(&st3_samples, None);
                    let w = row_witness(s, &st3_samples);
                    (s, format!("|row sum - 1|: {d}"), w)
                };
                ConditionResult {
                    condition: Condition::St3,
                    status,
                    detail,
                    witness,
                    samples: st3_samples,
                    columns: Vec::new(),
                }
            }
        }
    };

    let row_condition = |condition: Condition, f: &dyn Fn(&[f64]) -> f64| {
        let samples: Vec<Sample> = ns
            .iter()
            .map(|&n| Sample {
                index: n,
                value: f(&rows[n]),
            })
            .collect();
        let (status, detail) = trend_status(&samples, env.lorentz.as_deref());
        ConditionResult {
            condition,
            status,
            detail,
            witness: row_witness(status, &samples),
            samples,
            columns: Vec::new(),
        }
    };
    let lorentz = row_condition(Condition::Lorentz, &adjacent_abs_diff_sum);
    let bb = row_condition(Condition::BrezisBrowder, &positive_increment_sum);

    // (C): sup over generated n of the tail Σ_{k≥K} |c_{n,k} − c_{n,k+1}|
    let mut tail_sup = vec![0.0_f64; ks.len()];
    let mut tail_arg = vec![0_usize; ks.len()];
    for (n, row) in rows.iter().enumerate() {
        let mut suffix = 0.0;
        let mut next = 0.0;
        let mut ki = ks.iter().rposition(|&k| k <= n);
        for k in (0..row.len()).rev() {
            suffix += (row[k] - next).abs();
            next = row[k];
            while let Some(i) = ki {
                if ks[i] != k {
                    break;
                }
                if suffix > tail_sup[i] {
                    tail_sup[i] = suffix;
                    tail_arg[i] = n;
                }
                ki = i.checked_sub(1);
            }
        }
    }
    let cohen_samples: Vec<Sample> = ks
        .iter()
        .zip(&tail_sup)
        .map(|(&k, &v)| Sample { index: k, value: v })
        .collect();
    let cohen = {
        let (status, detail) = trend_status(&cohen_samples, env.lorentz.as_deref());
        let witness = (status == Status::Violated).then(|| {
            let i = cohen_samples.len() - 1;
            Witness {
                n: tail_arg[i],
                k: Some(ks[i]),
                value: tail_sup[i],
            }
        });
        ConditionResult {
            condition: Condition::Cohen,
            status,
            detail,
            witness,
            samples: cohen_samples,
            columns: Vec::new(),
        }
    };

    ConditionReport {
        table: table.kind.label(),
        n_max: table.n_max,
        results: vec![st1, st2, st3, lorentz, cohen, bb],
        notes,
    }
}

fn aggregate(statuses: impl Iterator<Item = Status>) -> Status {
    let all: Vec<Status> = statuses.collect();
    if all.is_empty() {
        Status::Inconclusive
    } else if all.contains(&Status::Violated) {
        Status::Violated
    } else if all.iter().all(|s| *s == Status::VerifiedAtScale) {
        Status::VerifiedAtScale
    } else {
        Status::Inconclusive
    }
}

/// `⌈1.25^j⌉` up to `n_max`, always including `n_max`.
pub fn geometric_samples(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut g = 1.0_f64;
    while g.ceil() <= n_max as f64 {
        let v = g.ceil() as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        g *= 1.25;
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}
