//! Linear nonexpansive operators on `R^d` and projection onto their fixed
//! point subspace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Slack allowed on the operator norm certificate.
pub const NORM_SLACK: f64 = 1e-10;
/// Power iterations on `TᵀT` used to certify a dense matrix.
pub const POWER_ITERATIONS: usize = 200;
/// Pivots below this are treated as zero when computing `ker(I − T)`.
pub const PIVOT_THRESHOLD: f64 = 1e-10;
/// Accepted pivots below this mark the kernel as ill-conditioned.
pub const ILL_CONDITIONED_BELOW: f64 = 1e-6;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Domain("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("matrix entries must be finite".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks(self.dim)) {
            *o = dot(row, x);
        }
    }

    fn mul_transpose_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (xi, row) in x.iter().zip(self.data.chunks(self.dim)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
    }

    /// Estimate of the spectral norm by power iteration on `AᵀA`.
    pub fn norm_estimate(&self, iterations: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_726d);
        let mut v: Vec<f64> = (0..self.dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut av = vec![0.0; self.dim];
        let mut estimate = 0.0;
        for _ in 0..iterations {
            let nv = norm(&v);
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            self.mul_into(&v, &mut av);
            estimate = norm(&av);
            self.mul_transpose_into(&av, &mut v);
        }
        estimate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Dense(DenseMatrix),
    /// `(x_1, …, x_d) ↦ (0, x_1, …, x_{d−1})`
    RightShift,
    /// Planar rotation on the first two coordinates, identity on the rest.
    Rotation {
        angle: f64,
        cos: f64,
        sin: f64,
    },
    /// Convex combination `Σ w_i T_i`.
    Composite(Vec<(f64, OperatorModel)>),
}

/// A linear operator on `R^d` certified nonexpansive at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel {
    variant: Variant,
    dim: usize,
    norm_bound: f64,
}

impl OperatorModel {
    /// Dense matrix, certified by [`POWER_ITERATIONS`] steps of power iteration.
    pub fn dense(matrix: DenseMatrix) -> Result<Self> {
        let est = matrix.norm_estimate(POWER_ITERATIONS);
        if est > 1.0 + NORM_SLACK {
            return Err(Error::NotNonexpansive(est));
        }
        Ok(Self {
            dim: matrix.dim(),
            norm_bound: est,
            variant: Variant::Dense(matrix),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            norm_bound: 1.0,
            variant: Variant::Dense(DenseMatrix::identity(dim)),
        })
    }

    pub fn right_shift(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            norm_bound: 1.0,
            variant: Variant::RightShift,
        })
    }

    /// Rotation by `angle` (radians) on coordinates 1–2 ⊕ identity on the rest.
    pub fn rotation(angle: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain("rotation needs dim >= 2".into()));
        }
        if !angle.is_finite() {
            return Err(Error::Domain("rotation angle must be finite".into()));
        }
        Ok(Self {
            dim,
            norm_bound: 1.0,
            variant: Variant::Rotation {
                angle,
                cos: angle.cos(),
                sin: angle.sin(),
            },
        })
    }

    /// Convex combination; the norm bound is `Σ w_i ‖T_i‖`, no re-estimation.
    pub fn composite(parts: Vec<(f64, OperatorModel)>) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, op)| op.dim)
            .ok_or_else(|| Error::Domain("composite needs at least one part".into()))?;
        if let Some((_, bad)) = parts.iter().find(|(_, op)| op.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim,
            });
        }
        if parts.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain(
                "composite weights must be nonnegative".into(),
            ));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "composite weights must sum to 1 (got {total})"
            )));
        }
        let norm_bound = parts.iter().map(|(w, op)| w * op.norm_bound).sum();
        Ok(Self {
            dim,
            norm_bound,
            variant: Variant::Composite(parts),
        })
    }

    /// Haar-like random orthogonal matrix (Gram–Schmidt on a Gaussian matrix).
    pub fn random_orthogonal(dim: usize, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let q = orthonormalize(cols, 1e-8);
        if q.len() != dim {
            return Err(Error::Domain("degenerate random draw".into()));
        }
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| q.iter().map(|col| col[i]).collect())
            .collect();
        Self::dense(DenseMatrix::from_rows(&rows)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    /// Certified (or structurally known) bound on `‖T‖`.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `Tx` into `out`; both must have length `dim`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for len in [x.len(), out.len()] {
            if len != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: len,
                });
            }
        }
        self.apply_unchecked(x, out);
        Ok(())
    }

    fn apply_unchecked(&self, x: &[f64], out: &mut [f64]) {
        match &self.variant {
            Variant::Dense(m) => m.mul_into(x, out),
            Variant::RightShift => {
                out[0] = 0.0;
                out[1..].copy_from_slice(&x[..self.dim - 1]);
            }
            Variant::Rotation { cos, sin, .. } => {
                out[0] = cos * x[0] - sin * x[1];
                out[1] = sin * x[0] + cos * x[1];
                out[2..].copy_from_slice(&x[2..]);
            }
            Variant::Composite(parts) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp = vec![0.0; self.dim];
                for (w, op) in parts {
                    op.apply_unchecked(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += w * t;
                    }
                }
            }
        }
    }

    /// Materialises `T` as a dense matrix (column `j` is `T e_j`).
    pub fn to_dense(&self) -> DenseMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            self.apply_unchecked(&e, &mut col);
            e[j] = 0.0;
            for i in 0..d {
                data[i * d + j] = col[i];
            }
        }
        DenseMatrix { dim: d, data }
    }

    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        match spec {
            OperatorSpec::Dense { matrix } => Self::dense(DenseMatrix::from_rows(matrix)?),
            OperatorSpec::Identity { dim } => Self::identity(*dim),
            OperatorSpec::Shift { dim } => Self::right_shift(*dim),
            OperatorSpec::Rotation { angle, dim } => Self::rotation(*angle, *dim),
            OperatorSpec::Composite { parts } => Self::composite(
                parts
                    .iter()
                    .map(|p| Ok((p.weight, Self::from_spec(&p.operator)?)))
                    .collect::<Result<_>>()?,
            ),
        }
    }

    pub fn to_spec(&self) -> OperatorSpec {
        match &self.variant {
            Variant::Dense(m) => OperatorSpec::Dense { matrix: m.rows() },
            Variant::RightShift => OperatorSpec::Shift { dim: self.dim },
            Variant::Rotation { angle, .. } => OperatorSpec::Rotation {
                angle: *angle,
                dim: self.dim,
            },
            Variant::Composite(parts) => OperatorSpec::Composite {
                parts: parts
                    .iter()
                    .map(|(w, op)| WeightedSpec {
                        weight: *w,
                        operator: op.to_spec(),
                    })
                    .collect(),
            },
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::Domain("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// JSON operator description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorSpec {
    Dense { matrix: Vec<Vec<f64>> },
    Identity { dim: usize },
    Shift { dim: usize },
    Rotation { angle: f64, dim: usize },
    Composite { parts: Vec<WeightedSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpec {
    pub weight: f64,
    pub operator: OperatorSpec,
}

/// Operators addressable by name: `shift`, `identity`, `rotation:<angle>:<dim>`,
/// `orthogonal:<dim>:<seed>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinOperator {
    Shift,
    Identity,
    Rotation { angle: f64, dim: usize },
    Orthogonal { dim: usize, seed: u64 },
}

impl std::str::FromStr for BuiltinOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift" => return Ok(Self::Shift),
            "identity" => return Ok(Self::Identity),
            _ => {}
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["rotation", angle, dim] => {
                let angle = angle
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rotation angle `{angle}`")))?;
                let dim = dim
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rotation dimension `{dim}`")))?;
                Ok(Self::Rotation { angle, dim })
            }
            ["orthogonal", dim, seed] => {
                let dim = dim
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad dimension `{dim}`")))?;
                let seed = seed
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad seed `{seed}`")))?;
                Ok(Self::Orthogonal { dim, seed })
            }
            _ => Err(Error::Parse(format!("unknown operator `{s}`"))),
        }
    }
}

impl BuiltinOperator {
    /// Dimension fixed by the name itself, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Self::Rotation { dim, .. } | Self::Orthogonal { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    /// `dim` is ignored when the name already fixes the dimension.
    pub fn build(&self, dim: usize) -> Result<OperatorModel> {
        match *self {
            Self::Shift => OperatorModel::right_shift(dim),
            Self::Identity => OperatorModel::identity(dim),
            Self::Rotation { angle, dim } => OperatorModel::rotation(angle, dim),
            Self::Orthogonal { dim, seed } => OperatorModel::random_orthogonal(dim, seed),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Orthogonal { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProjectorStatus {
    Ok,
    /// Some accepted pivot of `I − T` was in `[1e-10, 1e-6)`.
    IllConditioned {
        smallest_pivot: f64,
    },
}

/// Orthonormal basis of `Fix T = ker(I − T)`; an empty basis means `Fix T = {0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointProjector {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
    pub status: ProjectorStatus,
}

impl FixedPointProjector {
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for v in &self.basis {
            let c = dot(x, v);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

pub fn project(proj: &FixedPointProjector, x: &[f64]) -> Result<Vec<f64>> {
    proj.project(x)
}

pub fn fixed_point_projector(op: &OperatorModel) -> FixedPointProjector {
    let d = op.dim();
    let unit = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    match op.variant() {
        // I − T is unit lower triangular, hence invertible
        Variant::RightShift => FixedPointProjector {
            dim: d,
            basis: Vec::new(),
            status: ProjectorStatus::Ok,
        },
        Variant::Rotation { cos, sin, .. } if (1.0 - cos).hypot(*sin) >= PIVOT_THRESHOLD => {
            FixedPointProjector {
                dim: d,
                basis: (2..d).map(unit).collect(),
                status: ProjectorStatus::Ok,
            }
        }
        _ => kernel_of_identity_minus(&op.to_dense()),
    }
}

/// `ker(I − T)` by Gauss–Jordan elimination with complete pivoting,
/// followed by modified Gram–Schmidt applied twice.
fn kernel_of_identity_minus(t: &DenseMatrix) -> FixedPointProjector {
    let d = t.dim();
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { 1.0 } else { 0.0 } - t.get(i, j))
                .collect()
        })
        .collect();
    let mut is_pivot_col = vec![false; d];
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut smallest = f64::INFINITY;
    for r in 0..d {
        let mut best = (0.0, r, 0);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate() {
                if !is_pivot_col[j] && v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        let (mag, pi, pj) = best;
        if mag < PIVOT_THRESHOLD {
            break;
        }
        smallest = smallest.min(mag);
        a.swap(r, pi);
        let p = a[r][pj];
        a[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && row[pj] != 0.0 {
                let f = row[pj];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        is_pivot_col[pj] = true;
        pivots.push((r, pj));
    }
    let raw: Vec<Vec<f64>> = (0..d)
        .filter(|&j| !is_pivot_col[j])
        .map(|f| {
            let mut v = vec![0.0; d];
            v[f] = 1.0;
            for &(r, j) in &pivots {
                v[j] = -a[r][f];
            }
            v
        })
        .collect();
    let status = if smallest < ILL_CONDITIONED_BELOW {
        ProjectorStatus::IllConditioned {
            smallest_pivot: smallest,
        }
    } else {
        ProjectorStatus::Ok
    };
    FixedPointProjector {
        dim: d,
        basis: orthonormalize(raw, 1e-12),
        status,
    }
}

/// Modified Gram–Schmidt, run twice per vector; vectors whose residual norm
/// falls below `drop_below` are discarded.
pub fn orthonormalize(vectors: Vec<Vec<f64>>, drop_below: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _pass in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let n = norm(&v);
        if n > drop_below {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}
