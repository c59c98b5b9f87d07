//! The accelerated iteration run directly, and the same trajectory read off
//! as weighted ergodic sums `Σ_k c_{n,k} T^k x₀`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bn_coeffs::{bn_rows, Alpha};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dist_sq, norm, norm_sq};
use crate::operators::{FixedPointProjector, OperatorModel};
use crate::table::{format_f64, CoefficientTable, TableKind};

/// Runs with `n_max` above this never keep per-step vectors.
pub const FULL_TRACE_LIMIT: usize = 1000;

/// Which indices `n` get a [`TracePoint`].
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoints {
    /// `⌈1.25^j⌉` for all `j`, plus `n_max` and the given extras.
    Geometric {
        extras: Vec<usize>,
    },
    All,
    Explicit(Vec<usize>),
}

impl Default for Checkpoints {
    fn default() -> Self {
        Checkpoints::Geometric { extras: Vec::new() }
    }
}

impl Checkpoints {
    /// Sorted, deduplicated indices within `1..=n_max`.
    pub fn resolve(&self, n_max: usize) -> Vec<usize> {
        let mut set = BTreeSet::new();
        match self {
            Checkpoints::All => set.extend(1..=n_max),
            Checkpoints::Explicit(v) => set.extend(v.iter().copied()),
            Checkpoints::Geometric { extras } => {
                let mut g = 1.0_f64;
                while g.ceil() <= n_max as f64 {
                    set.insert(g.ceil() as usize);
                    g *= 1.25;
                }
                set.insert(n_max);
                set.extend(extras.iter().copied());
            }
        }
        set.into_iter().filter(|&n| n >= 1 && n <= n_max).collect()
    }
}

/// Scalar diagnostics at one index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: usize,
    /// ‖x_n‖²
    pub norm_sq: f64,
    /// ‖x_n − x_{n+1}‖²
    pub vel_sq: f64,
    /// ‖x_n − T x_n‖²
    pub res_sq: f64,
    /// ‖x_n − P x₀‖², when a projector was supplied
    pub dist_sq: Option<f64>,
}

/// Name of a scalar diagnostic column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    NormSq,
    VelSq,
    ResSq,
    DistSq,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 4] = [
        Diagnostic::NormSq,
        Diagnostic::VelSq,
        Diagnostic::ResSq,
        Diagnostic::DistSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Diagnostic::NormSq => "norm_sq",
            Diagnostic::VelSq => "vel_sq",
            Diagnostic::ResSq => "res_sq",
            Diagnostic::DistSq => "dist_sq",
        }
    }

    pub fn of(self, p: &TracePoint) -> Option<f64> {
        match self {
            Diagnostic::NormSq => Some(p.norm_sq),
            Diagnostic::VelSq => Some(p.vel_sq),
            Diagnostic::ResSq => Some(p.res_sq),
            Diagnostic::DistSq => p.dist_sq,
        }
    }
}

impl FromStr for Diagnostic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Diagnostic::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown diagnostic `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    Bn { alpha: f64 },
    Cesaro,
}

/// Largest observed `‖x_n − f‖` against `‖x₀ − f‖` for `f = P x₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FejerCheck {
    pub initial: f64,
    pub max: f64,
    pub argmax: usize,
}

impl FejerCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.max <= self.initial + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub scheme: Scheme,
    pub dim: usize,
    pub n_max: usize,
    pub points: Vec<TracePoint>,
    /// `vectors[n] = x_n` for `n = 0..=n_max+1`; only kept for short runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    pub fejer: Option<FejerCheck>,
}

impl IterationTrace {
    pub fn point(&self, n: usize) -> Option<&TracePoint> {
        self.points
            .binary_search_by_key(&n, |p| p.n)
            .ok()
            .map(|i| &self.points[i])
    }

    /// `(n, value)` pairs for one diagnostic, skipping missing values.
    pub fn series(&self, diag: Diagnostic) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .filter_map(|p| diag.of(p).map(|v| (p.n, v)))
            .collect()
    }

    /// CSV `n,norm_sq,vel_sq,res_sq,dist_sq`; `dist_sq` is blank without a projector.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,norm_sq,vel_sq,res_sq,dist_sq\n");
        for p in &self.points {
            let dist = p.dist_sq.map(format_f64).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.n,
                format_f64(p.norm_sq),
                format_f64(p.vel_sq),
                format_f64(p.res_sq),
                dist
            );
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct IterateOptions {
    pub checkpoints: Checkpoints,
    /// Enables `dist_sq` and the Fejér check.
    pub projector: Option<FixedPointProjector>,
    /// Ignored when `n_max > FULL_TRACE_LIMIT`.
    pub store_vectors: bool,
}

/// One-step-at-a-time BN iteration; each step applies `T` exactly once.
#[derive(Debug, Clone)]
pub struct BnIteration<'a> {
    op: &'a OperatorModel,
    alpha: f64,
    n: usize,
    x: Vec<f64>,
    tx: Vec<f64>,
    tx_prev: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> BnIteration<'a> {
    /// Starts at `n = 1` with `x₁ = x₀`, so `T x₀ = T x₁` is shared.
    pub fn new(op: &'a OperatorModel, x0: &[f64], alpha: Alpha) -> Result<Self> {
        check_start(op, x0)?;
        let tx = op.apply(x0)?;
        Ok(Self {
            op,
            alpha: alpha.value(),
            n: 1,
            x: x0.to_vec(),
            tx_prev: tx.clone(),
            tx,
            scratch: vec![0.0; x0.len()],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current iterate `x_n`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `T x_n`
    pub fn tx(&self) -> &[f64] {
        &self.tx
    }

    /// Advances to `x_{n+1}`.
    pub fn step(&mut self) -> Result<()> {
        let n = self.n as f64;
        let a = self.alpha / (2.0 * (n + self.alpha));
        let b = n / (n + self.alpha);
        for i in 0..self.x.len() {
            // written so that a fixed point stays bit-identical
            self.x[i] += a * (self.tx[i] - self.x[i]) + b * (self.tx[i] - self.tx_prev[i]);
        }
        std::mem::swap(&mut self.tx_prev, &mut self.tx);
        self.op.apply_into(&self.x, &mut self.scratch)?;
        std::mem::swap(&mut self.tx, &mut self.scratch);
        self.n += 1;
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: self.n });
        }
        Ok(())
    }
}

fn check_start(op: &OperatorModel, x0: &[f64]) -> Result<()> {
    if x0.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok(())
}

/// Runs the BN iteration up to `x_{n_max+1}` and records diagnostics for
/// `1 <= n <= n_max`.
pub fn bn_iterate(
    op: &OperatorModel,
    x0: &[f64],
    alpha: Alpha,
    n_max: usize,
    options: &IterateOptions,
) -> Result<IterationTrace> {
    let mut it = BnIteration::new(op, x0, alpha)?;
    let mut recorder = Recorder::new(x0, n_max, options)?;
    recorder.record_state(0, x0);
    while it.n() <= n_max {
        let n = it.n();
        let pending = recorder
            .wants(n)
            .then(|| (it.x().to_vec(), dist_sq(it.x(), it.tx())));
        recorder.record_state(n, it.x());
        it.step()?;
        if let Some((x_n, res_sq)) = pending {
            recorder.push(n, &x_n, it.x(), res_sq);
        }
    }
    recorder.record_state(n_max + 1, it.x());
    Ok(recorder.finish(
        Scheme::Bn {
            alpha: alpha.value(),
        },
        op.dim(),
        n_max,
    ))
}

/// Cesàro means `x_n = (1/n) Σ_{k<n} T^k x₀`, recorded for `1 <= n <= n_max`.
///
/// Uses `T x_n = (S_{n+1} − x₀)/n` with `S_n = Σ_{k<n} T^k x₀`, so no extra
/// operator applications are needed for the residual.
pub fn cesaro_iterate(
    op: &OperatorModel,
    x0: &[f64],
    n_max: usize,
    options: &IterateOptions,
) -> Result<IterationTrace> {
    check_start(op, x0)?;
    let d = x0.len();
    let mut recorder = Recorder::new(x0, n_max, options)?;
    recorder.record_state(0, x0);
    let mut power = x0.to_vec(); // T^n x₀
    let mut sum = x0.to_vec(); // S_{n+1}
    let mut next = vec![0.0; d];
    let mut x = x0.to_vec();
    let mut x_next = vec![0.0; d];
    let mut tx = vec![0.0; d];
    for n in 1..=n_max + 1 {
        // sum holds S_n here
        let inv = 1.0 / n as f64;
        x.iter_mut().zip(&sum).for_each(|(xi, s)| *xi = s * inv);
        recorder.record_state(n, &x);
        op.apply_into(&power, &mut next)?;
        std::mem::swap(&mut power, &mut next);
        axpy(1.0, &power, &mut sum);
        if n > n_max || !recorder.wants(n) {
            continue;
        }
        if sum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: n });
        }
        for i in 0..d {
            tx[i] = (sum[i] - x0[i]) * inv;
            x_next[i] = sum[i] / (n + 1) as f64;
        }
        let res_sq = dist_sq(&x, &tx);
        recorder.push(n, &x, &x_next, res_sq);
    }
    Ok(recorder.finish(Scheme::Cesaro, op.dim(), n_max))
}

struct Recorder {
    checkpoints: Vec<usize>,
    cursor: usize,
    points: Vec<TracePoint>,
    target: Option<(Vec<f64>, f64)>,
    fejer: Option<FejerCheck>,
    vectors: Option<Vec<Vec<f64>>>,
}

impl Recorder {
    fn new(x0: &[f64], n_max: usize, options: &IterateOptions) -> Result<Self> {
        let target = match &options.projector {
            Some(p) => {
                let f = p.project(x0)?;
                let initial = dist_sq(x0, &f).sqrt();
                Some((f, initial))
            }
            None => None,
        };
        Ok(Self {
            checkpoints: options.checkpoints.resolve(n_max),
            cursor: 0,
            points: Vec::new(),
            fejer: target.as_ref().map(|(_, initial)| FejerCheck {
                initial: *initial,
                max: *initial,
                argmax: 0,
            }),
            target,
            vectors: (options.store_vectors && n_max <= FULL_TRACE_LIMIT).then(Vec::new),
        })
    }

    fn wants(&self, n: usize) -> bool {
        self.checkpoints.get(self.cursor) == Some(&n)
    }

    /// Called once for every `n` in order.
    fn record_state(&mut self, n: usize, x: &[f64]) {
        if let Some(v) = &mut self.vectors {
            v.push(x.to_vec());
        }
        if let (Some((f, _)), Some(check)) = (&self.target, &mut self.fejer) {
            let d = dist_sq(x, f).sqrt();
            if d > check.max {
                check.max = d;
                check.argmax = n;
            }
        }
    }

    fn push(&mut self, n: usize, x: &[f64], x_next: &[f64], res_sq: f64) {
        self.points.push(TracePoint {
            n,
            norm_sq: norm_sq(x),
            vel_sq: dist_sq(x, x_next),
            res_sq,
            dist_sq: self.target.as_ref().map(|(f, _)| dist_sq(x, f)),
        });
        self.cursor += 1;
    }

    fn finish(self, scheme: Scheme, dim: usize, n_max: usize) -> IterationTrace {
        IterationTrace {
            scheme,
            dim,
            n_max,
            points: self.points,
            vectors: self.vectors,
            fejer: self.fejer,
        }
    }
}

/// `Σ_{k=0}^{n} c_{n,k} T^k x₀`, accumulating powers with `n` applications of `T`.
pub fn ergodic_sum(
    op: &OperatorModel,
    x0: &[f64],
    table: &CoefficientTable,
    n: usize,
) -> Result<Vec<f64>> {
    let row = table.row(n).ok_or(Error::RowOutOfRange {
        n,
        n_max: table.n_max,
    })?;
    check_start(op, x0)?;
    let mut power = x0.to_vec();
    let mut next = vec![0.0; x0.len()];
    let mut acc = vec![0.0; x0.len()];
    axpy(row[0], &power, &mut acc);
    for &c in &row[1..] {
        op.apply_into(&power, &mut next)?;
        std::mem::swap(&mut power, &mut next);
        axpy(c, &power, &mut acc);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    /// `max_n ‖x_{n+1} − Σ_k c_{n,k} T^k x₀‖` over `0 <= n <= n_max`
    pub max_deviation: f64,
    pub at_n: usize,
    /// Contract: `max_deviation <= 1e-10 (1 + ‖x₀‖)`.
    pub tolerance: f64,
}

impl Equivalence {
    pub fn passes(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Compares the direct iteration against the coefficient expansion at every
/// `n <= n_max`. Keeps all powers `T^k x₀`, so memory is `O(n_max · d)`.
pub fn equivalence_check(
    op: &OperatorModel,
    x0: &[f64],
    alpha: Alpha,
    n_max: usize,
) -> Result<Equivalence> {
    let mut it = BnIteration::new(op, x0, alpha)?;
    let mut powers = vec![x0.to_vec()];
    let mut worst = (0.0_f64, 0);
    for (n, row) in bn_rows(alpha).take(n_max + 1).enumerate() {
        while powers.len() < row.len() {
            let next = op.apply(powers.last().expect("nonempty"))?;
            powers.push(next);
        }
        let mut expansion = vec![0.0; x0.len()];
        for (c, p) in row.iter().zip(&powers) {
            axpy(*c, p, &mut expansion);
        }
        // it currently holds x_{n+1}
        let dev = dist_sq(it.x(), &expansion).sqrt();
        if dev > worst.0 || dev.is_nan() {
            worst = (dev, n);
        }
        if n < n_max {
            it.step()?;
        }
    }
    Ok(Equivalence {
        max_deviation: worst.0,
        at_n: worst.1,
        tolerance: 1e-10 * (1.0 + norm(x0)),
    })
}

/// Equal weights `1/(n+1)` in row `n`.
pub fn cesaro_table(n_max: usize) -> CoefficientTable {
    CoefficientTable {
        kind: TableKind::Cesaro,
        n_max,
        rows: (0..=n_max)
            .map(|n| vec![1.0 / (n + 1) as f64; n + 1])
            .collect(),
    }
}
