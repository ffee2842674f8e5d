//! Finite-sum objectives `F(w) = (1/n) Σ f(w; x_i, y_i) + (λ/2)‖w‖²`,
//! split into shards that each own a block of samples.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, norm, Matrix};
use crate::scalar::Scalar;

/// Hidden width of the tiny tanh network.
pub const MLP_HIDDEN: usize = 4;

pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;
    fn value(&self, w: &[T]) -> Result<T>;
    fn gradient(&self, w: &[T]) -> Result<Vec<T>>;
    fn hessvec(&self, w: &[T], v: &[T]) -> Result<Vec<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic,
    LogisticL2,
    MlpTiny,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "logistic" | "logistic_l2" => Ok(ProblemKind::LogisticL2),
            "mlp" | "mlp_tiny" => Ok(ProblemKind::MlpTiny),
            other => Err(invalid(format!("unknown problem kind {other:?}"))),
        }
    }

    /// Parameter count for `p` input features.
    pub fn dim_for_features(self, p: usize) -> usize {
        match self {
            ProblemKind::Quadratic | ProblemKind::LogisticL2 => p,
            ProblemKind::MlpTiny => MLP_HIDDEN * p + 2 * MLP_HIDDEN + 1,
        }
    }
}

/// Samples are the columns of `features` (`p × n`).
///
/// For `Quadratic` a sample `a_i` contributes `½(a_iᵀw)² − bᵀw` with the
/// shared offset `b`; labels are unused. For the classification kinds labels
/// are `±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    pub kind: ProblemKind,
    pub features: Matrix<T>,
    pub labels: Vec<T>,
    pub offset: Vec<T>,
    pub l2: T,
}

impl<T: Scalar> Dataset<T> {
    pub fn n(&self) -> usize {
        self.features.ncols()
    }

    pub fn p(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim_for_features(self.p())
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.n() {
            return Err(invalid(format!(
                "{} labels for {} samples",
                self.labels.len(),
                self.n()
            )));
        }
        if self.kind == ProblemKind::Quadratic && self.offset.len() != self.p() {
            return Err(invalid("quadratic dataset needs an offset of length p"));
        }
        if self.n() == 0 {
            return Err(invalid("dataset has no samples"));
        }
        if !(self.l2 >= T::zero()) {
            return Err(invalid("l2 must be nonnegative"));
        }
        Ok(())
    }

    /// Contiguous sample ranges for `k` shards; sizes differ by at most one.
    pub fn shard_ranges(&self, k: usize) -> Result<Vec<Range<usize>>> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(invalid(format!("cannot split {n} samples into {k} shards")));
        }
        let (base, extra) = (n / k, n % k);
        let mut start = 0;
        Ok((0..k)
            .map(|i| {
                let len = base + usize::from(i < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect())
    }

    pub fn shard(&self, range: Range<usize>) -> Result<ObjectiveShard<T>> {
        ObjectiveShard::from_dataset(self, range)
    }

    pub fn shards(&self, k: usize) -> Result<Vec<ObjectiveShard<T>>> {
        self.shard_ranges(k)?.into_iter().map(|r| self.shard(r)).collect()
    }

    pub fn full(&self) -> Result<ObjectiveShard<T>> {
        self.shard(0..self.n())
    }

    pub fn subset(&self, range: Range<usize>) -> Dataset<T> {
        let idx: Vec<usize> = range.clone().collect();
        Dataset {
            kind: self.kind,
            features: self.features.select_columns(&idx),
            labels: self.labels[range].to_vec(),
            offset: self.offset.clone(),
            l2: self.l2,
        }
    }
}

#[derive(Debug, Clone)]
enum ShardData<T: Scalar> {
    Quadratic { a: Matrix<T>, b: Vec<T> },
    Logistic { x: Matrix<T>, labels: Vec<T> },
    Mlp { x: Matrix<T>, labels: Vec<T> },
}

/// One worker's share of the data.
#[derive(Debug, Clone)]
pub struct ObjectiveShard<T: Scalar> {
    data: ShardData<T>,
    l2: T,
    n_local: usize,
    dim: usize,
}

impl<T: Scalar> ObjectiveShard<T> {
    /// `½ wᵀAw − bᵀw + (λ/2)‖w‖²` given directly.
    pub fn quadratic(a: Matrix<T>, b: Vec<T>, l2: T) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(invalid("quadratic needs square A and matching b"));
        }
        Ok(ObjectiveShard {
            dim: b.len(),
            data: ShardData::Quadratic { a, b },
            l2,
            n_local: 1,
        })
    }

    pub fn from_dataset(ds: &Dataset<T>, range: Range<usize>) -> Result<Self> {
        ds.validate()?;
        if range.is_empty() || range.end > ds.n() {
            return Err(invalid(format!("bad shard range {range:?} for {} samples", ds.n())));
        }
        let idx: Vec<usize> = range.clone().collect();
        let x = ds.features.select_columns(&idx);
        let labels = ds.labels[range.clone()].to_vec();
        let n_local = idx.len();
        let data = match ds.kind {
            ProblemKind::Quadratic => {
                let p = ds.p();
                let inv_n = T::one() / T::lit(n_local as f64);
                let mut a = Matrix::zeros(p, p);
                for i in 0..n_local {
                    let xi = x.col(i);
                    for c in 0..p {
                        let f = xi[c] * inv_n;
                        axpy(f, xi, a.col_mut(c));
                    }
                }
                ShardData::Quadratic {
                    a,
                    b: ds.offset.clone(),
                }
            }
            ProblemKind::LogisticL2 => ShardData::Logistic { x, labels },
            ProblemKind::MlpTiny => ShardData::Mlp { x, labels },
        };
        Ok(ObjectiveShard {
            data,
            l2: ds.l2,
            n_local,
            dim: ds.dim(),
        })
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn kind(&self) -> ProblemKind {
        match self.data {
            ShardData::Quadratic { .. } => ProblemKind::Quadratic,
            ShardData::Logistic { .. } => ProblemKind::LogisticL2,
            ShardData::Mlp { .. } => ProblemKind::MlpTiny,
        }
    }

    fn check(&self, v: &[T], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(invalid(format!("{what} has length {}, expected {}", v.len(), self.dim)));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(invalid(format!("{what} has non-finite entries")));
        }
        Ok(())
    }

    fn add_l2(&self, w: &[T], mut g: Vec<T>) -> Vec<T> {
        if self.l2 > T::zero() {
            axpy(self.l2, w, &mut g);
        }
        g
    }

    fn mlp_hessvec_fd(&self, w: &[T], v: &[T]) -> Result<Vec<T>> {
        let vn = norm(v);
        if vn == T::zero() {
            return Ok(vec![T::zero(); self.dim]);
        }
        // central difference along the unit direction, rescaled by ‖v‖
        let h = T::lit(1e-4) * (T::one() + norm(w));
        let step: Vec<T> = v.iter().map(|&x| h * x / vn).collect();
        let wp: Vec<T> = w.iter().zip(&step).map(|(&a, &b)| a + b).collect();
        let wm: Vec<T> = w.iter().zip(&step).map(|(&a, &b)| a - b).collect();
        let gp = self.gradient(&wp)?;
        let gm = self.gradient(&wm)?;
        let f = vn / (T::lit(2.0) * h);
        Ok(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) * f).collect())
    }
}

/// `ln(1 + eᵗ)` without overflow.
fn softplus<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

struct MlpView<'a, T> {
    w1: &'a [T],
    b1: &'a [T],
    w2: &'a [T],
    b2: T,
}

fn mlp_split<T: Scalar>(w: &[T], p: usize) -> MlpView<'_, T> {
    let h = MLP_HIDDEN;
    MlpView {
        w1: &w[..h * p],
        b1: &w[h * p..h * p + h],
        w2: &w[h * p + h..h * p + 2 * h],
        b2: w[h * p + 2 * h],
    }
}

impl<T: Scalar> Objective<T> for ObjectiveShard<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[T]) -> Result<T> {
        self.check(w, "w")?;
        let reg = T::lit(0.5) * self.l2 * dot(w, w);
        let inv_n = T::one() / T::lit(self.n_local as f64);
        let v = match &self.data {
            ShardData::Quadratic { a, b } => {
                let aw = a.mul_vec(w)?;
                T::lit(0.5) * dot(w, &aw) - dot(b, w)
            }
            ShardData::Logistic { x, labels } => {
                (0..x.ncols())
                    .map(|i| softplus(-labels[i] * dot(x.col(i), w)))
                    .sum::<T>()
                    * inv_n
            }
            ShardData::Mlp { x, labels } => {
                let p = x.nrows();
                let net = mlp_split(w, p);
                let mut acc = T::zero();
                for i in 0..x.ncols() {
                    let xi = x.col(i);
                    let mut out = net.b2;
                    for k in 0..MLP_HIDDEN {
                        let z = dot(&net.w1[k * p..(k + 1) * p], xi) + net.b1[k];
                        out = out + net.w2[k] * z.tanh();
                    }
                    acc = acc + softplus(-labels[i] * out);
                }
                acc * inv_n
            }
        };
        Ok(v + reg)
    }

    fn gradient(&self, w: &[T]) -> Result<Vec<T>> {
        self.check(w, "w")?;
        let inv_n = T::one() / T::lit(self.n_local as f64);
        let g = match &self.data {
            ShardData::Quadratic { a, b } => {
                let aw = a.mul_vec(w)?;
                aw.iter().zip(b).map(|(&x, &y)| x - y).collect()
            }
            ShardData::Logistic { x, labels } => {
                let mut g = vec![T::zero(); self.dim];
                for i in 0..x.ncols() {
                    let yi = labels[i];
                    let coef = -yi * sigmoid(-yi * dot(x.col(i), w));
                    axpy(coef, x.col(i), &mut g);
                }
                g.iter().map(|&v| v * inv_n).collect()
            }
            ShardData::Mlp { x, labels } => {
                let p = x.nrows();
                let net = mlp_split(w, p);
                let h = MLP_HIDDEN;
                let mut g = vec![T::zero(); self.dim];
                let mut act = [T::zero(); MLP_HIDDEN];
                for i in 0..x.ncols() {
                    let xi = x.col(i);
                    let mut out = net.b2;
                    for k in 0..h {
                        act[k] = (dot(&net.w1[k * p..(k + 1) * p], xi) + net.b1[k]).tanh();
                        out = out + net.w2[k] * act[k];
                    }
                    let yi = labels[i];
                    let g_out = -yi * sigmoid(-yi * out);
                    for k in 0..h {
                        let dz = g_out * net.w2[k] * (T::one() - act[k] * act[k]);
                        axpy(dz, xi, &mut g[k * p..(k + 1) * p]);
                        g[h * p + k] = g[h * p + k] + dz;
                        g[h * p + h + k] = g[h * p + h + k] + g_out * act[k];
                    }
                    g[h * p + 2 * h] = g[h * p + 2 * h] + g_out;
                }
                g.iter().map(|&v| v * inv_n).collect()
            }
        };
        Ok(self.add_l2(w, g))
    }

    fn hessvec(&self, w: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check(w, "w")?;
        self.check(v, "v")?;
        let inv_n = T::one() / T::lit(self.n_local as f64);
        let hv = match &self.data {
            ShardData::Quadratic { a, .. } => a.mul_vec(v)?,
            ShardData::Logistic { x, labels } => {
                let mut out = vec![T::zero(); self.dim];
                for i in 0..x.ncols() {
                    let xi = x.col(i);
                    let s = sigmoid(labels[i] * dot(xi, w));
                    let coef = s * (T::one() - s) * dot(xi, v);
                    axpy(coef, xi, &mut out);
                }
                out.iter().map(|&u| u * inv_n).collect()
            }
            ShardData::Mlp { .. } => return self.mlp_hessvec_fd(w, v),
        };
        Ok(self.add_l2(v, hv))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: ProblemKind,
    /// Input features (the parameter dimension for quadratic and logistic).
    pub p: usize,
    /// Samples; ignored for quadratic, which always uses one sample per
    /// eigendirection (`n = p`).
    pub n: usize,
    pub seed: u64,
    pub l2: f64,
    /// Condition number of the quadratic's Hessian.
    pub cond: f64,
    /// Label flip probability for the classification kinds.
    pub noise: f64,
}

impl SyntheticSpec {
    pub fn new(kind: ProblemKind, p: usize, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            kind,
            p,
            n,
            seed,
            l2: if kind == ProblemKind::Quadratic { 0.0 } else { 1e-2 },
            cond: 100.0,
            noise: 0.1,
        }
    }
}

/// Deterministic synthetic data.
///
/// Quadratic: `A = Qᵀ Λ Q` with `Λ` log-spaced on `[1, cond]` and `Q` a
/// random orthogonal matrix; sample `i` is `√p · √λ_i · q_i` so that the mean
/// of `a_i a_iᵀ` is `A`. Classification: Gaussian features labelled by a
/// random hyperplane, each label flipped with probability `noise`.
pub fn make_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    let p = spec.p;
    if p == 0 {
        return Err(invalid("synthetic problem needs p >= 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    match spec.kind {
        ProblemKind::Quadratic => {
            if !(spec.cond >= 1.0) {
                return Err(invalid("condition number must be >= 1"));
            }
            let q = random_orthogonal(p, &mut normal);
            let lam = |i: usize| {
                if p == 1 {
                    1.0
                } else {
                    spec.cond.powf(i as f64 / (p - 1) as f64)
                }
            };
            let scale = (p as f64).sqrt();
            let features = Matrix::from_fn(p, p, |r, i| T::lit(scale * lam(i).sqrt() * q[i][r]));
            let offset = (0..p).map(|_| T::lit(normal())).collect();
            Ok(Dataset {
                kind: spec.kind,
                features,
                labels: vec![T::zero(); p],
                offset,
                l2: T::lit(spec.l2),
            })
        }
        ProblemKind::LogisticL2 | ProblemKind::MlpTiny => {
            if spec.n == 0 {
                return Err(invalid("synthetic problem needs n >= 1"));
            }
            let truth: Vec<f64> = (0..p).map(|_| normal()).collect();
            let mut feats = Vec::with_capacity(p * spec.n);
            let mut labels = Vec::with_capacity(spec.n);
            let mut flips = ChaCha20Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
            for _ in 0..spec.n {
                let x: Vec<f64> = (0..p).map(|_| normal()).collect();
                let margin = dot(&x, &truth);
                let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
                if flips.random::<f64>() < spec.noise {
                    y = -y;
                }
                feats.extend(x.into_iter().map(T::lit));
                labels.push(T::lit(y));
            }
            Ok(Dataset {
                kind: spec.kind,
                features: Matrix::from_col_major(p, spec.n, feats)?,
                labels,
                offset: Vec::new(),
                l2: T::lit(spec.l2),
            })
        }
    }
}

/// Rows of a random orthogonal matrix (modified Gram–Schmidt on Gaussians).
fn random_orthogonal(p: usize, normal: &mut impl FnMut() -> f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    while rows.len() < p {
        let mut v: Vec<f64> = (0..p).map(|_| normal()).collect();
        for r in &rows {
            let c = dot(r, &v);
            axpy(-c, r, &mut v);
        }
        let n = norm(&v);
        if n > 1e-8 {
            rows.push(v.iter().map(|x| x / n).collect());
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub kind: ProblemKind,
    pub n: usize,
    pub p: usize,
    pub l2: f64,
    /// `column-major-f64-le`: an `n × (p + 1)` table with the label column
    /// first, followed by `offset_len` offset entries.
    pub layout: String,
    pub offset_len: usize,
}

pub const DATASET_LAYOUT: &str = "column-major-f64-le";

/// Writes `<stem>.bin` and the `<stem>.json` sidecar.
pub fn save_dataset<T: Scalar>(ds: &Dataset<T>, stem: &Path) -> Result<()> {
    ds.validate()?;
    let (n, p) = (ds.n(), ds.p());
    let mut buf = Vec::with_capacity(8 * (n * (p + 1) + ds.offset.len()));
    for &y in &ds.labels {
        buf.extend_from_slice(&y.as_f64().to_le_bytes());
    }
    for c in 0..p {
        for i in 0..n {
            buf.extend_from_slice(&ds.features.get(c, i).as_f64().to_le_bytes());
        }
    }
    for &b in &ds.offset {
        buf.extend_from_slice(&b.as_f64().to_le_bytes());
    }
    fs::File::create(stem.with_extension("bin"))?.write_all(&buf)?;
    let meta = DatasetMeta {
        format_version: 1,
        kind: ds.kind,
        n,
        p,
        l2: ds.l2.as_f64(),
        layout: DATASET_LAYOUT.into(),
        offset_len: ds.offset.len(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(stem.with_extension("json"), json)?;
    Ok(())
}

pub fn load_dataset<T: Scalar>(stem: &Path) -> Result<Dataset<T>> {
    let meta_path = stem.with_extension("json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;
    let meta: DatasetMeta = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if meta.format_version != 1 || meta.layout != DATASET_LAYOUT {
        return Err(Error::Format(format!(
            "unsupported dataset format version {} / layout {}",
            meta.format_version, meta.layout
        )));
    }
    let bin_path = stem.with_extension("bin");
    let bytes = fs::read(&bin_path).map_err(|e| Error::Io(format!("{}: {e}", bin_path.display())))?;
    let (n, p) = (meta.n, meta.p);
    let want = 8 * (n * (p + 1) + meta.offset_len);
    if bytes.len() != want {
        return Err(Error::Format(format!(
            "{} holds {} bytes, sidecar implies {want}",
            bin_path.display(),
            bytes.len()
        )));
    }
    let vals: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
        .collect();
    let labels = vals[..n].to_vec();
    let features = Matrix::from_fn(p, n, |c, i| vals[n + c * n + i]);
    let offset = vals[n * (p + 1)..].to_vec();
    let ds = Dataset {
        kind: meta.kind,
        features,
        labels,
        offset,
        l2: T::lit(meta.l2),
    };
    ds.validate()?;
    Ok(ds)
}

/// Reads `label,f1,…,fp` rows (an optional header line is skipped when its
/// first field is not numeric).
pub fn import_csv<T: Scalar>(path: &Path, kind: ProblemKind, l2: f64) -> Result<Dataset<T>> {
    if kind == ProblemKind::Quadratic {
        return Err(invalid("csv import covers the classification kinds only"));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut labels = Vec::new();
    let mut feats = Vec::new();
    let mut p = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if lineno == 0 => continue,
            Err(e) => return Err(Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))),
        };
        if row.len() < 2 {
            return Err(Error::Format(format!(
                "{}:{}: need a label and features",
                path.display(),
                lineno + 1
            )));
        }
        match p {
            None => p = Some(row.len() - 1),
            Some(q) if q != row.len() - 1 => {
                return Err(Error::Format(format!(
                    "{}:{}: expected {q} features, found {}",
                    path.display(),
                    lineno + 1,
                    row.len() - 1
                )))
            }
            _ => {}
        }
        let y = if row[0] > 0.0 { 1.0 } else { -1.0 };
        labels.push(T::lit(y));
        feats.extend(row[1..].iter().map(|&x| T::lit(x)));
    }
    let p = p.ok_or_else(|| Error::Format(format!("{} has no data rows", path.display())))?;
    let n = labels.len();
    Ok(Dataset {
        kind,
        features: Matrix::from_col_major(p, n, feats)?,
        labels,
        offset: Vec::new(),
        l2: T::lit(l2),
    })
}
