//! Source-coding projection matrices, the loss selection matrix and the
//! equivalent sensing matrix `A = Φr · Φs · Ψ`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::signal::{BasisKind, Signal, SparsifyingBasis};

/// Redraw budget when random placement leaves a row without nonzeros.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixKind {
    SparseGaussian,
    DenseGaussian,
    Bernoulli,
    Toeplitz,
    PartialBasis,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 5] = [
        MatrixKind::SparseGaussian,
        MatrixKind::DenseGaussian,
        MatrixKind::Bernoulli,
        MatrixKind::Toeplitz,
        MatrixKind::PartialBasis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::SparseGaussian => "sparse_gaussian",
            MatrixKind::DenseGaussian => "dense_gaussian",
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::Toeplitz => "toeplitz",
            MatrixKind::PartialBasis => "partial_basis",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "sparsegaussian" | "sg" => Ok(MatrixKind::SparseGaussian),
            "densegaussian" | "gaussian" => Ok(MatrixKind::DenseGaussian),
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "toeplitz" => Ok(MatrixKind::Toeplitz),
            "partialbasis" => Ok(MatrixKind::PartialBasis),
            _ => Err(Error::invalid("kind", format!("unknown matrix kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layout {
    #[default]
    RandomPlacement,
    /// Cyclically shifted support pattern, constant along diagonals.
    Structured,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::RandomPlacement => "random",
            Layout::Structured => "structured",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "randomplacement" | "random_placement" => Ok(Layout::RandomPlacement),
            "structured" => Ok(Layout::Structured),
            other => Err(Error::invalid(
                "layout",
                format!("unknown layout `{other}`"),
            )),
        }
    }
}

/// Coordinate-list storage sorted row-major, with 32-bit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    row_idx: Vec<u32>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CooMatrix {
    fn from_sorted(rows: usize, cols: usize, triples: Vec<(usize, usize, f64)>) -> Self {
        let mut row_idx = Vec::with_capacity(triples.len());
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        for (i, j, v) in triples {
            row_idx.push(i as u32);
            col_idx.push(j as u32);
            values.push(v);
        }
        CooMatrix {
            rows,
            cols,
            row_idx,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.row_idx
            .iter()
            .zip(&self.col_idx)
            .zip(&self.values)
            .map(|((&i, &j), &v)| (i as usize, j as usize, v))
    }

    fn row_range(&self, row: usize) -> std::ops::Range<usize> {
        let start = self.row_idx.partition_point(|&r| (r as usize) < row);
        let end = self.row_idx.partition_point(|&r| (r as usize) <= row);
        start..end
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    fn byte_size(&self) -> usize {
        self.nnz() * (2 * std::mem::size_of::<u32>() + std::mem::size_of::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Coordinate(CooMatrix),
}

/// A source-coding matrix `Φs` of shape `M_s x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    kind: MatrixKind,
    layout: Layout,
    density: f64,
    seed: u64,
    storage: Storage,
}

impl ProjectionMatrix {
    pub fn from_dense(kind: MatrixKind, entries: DMatrix<f64>, seed: u64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid("entries", "matrix must be nonempty"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("entries", "non-finite entry"));
        }
        let nnz = entries.iter().filter(|v| **v != 0.0).count();
        let density = nnz as f64 / (entries.nrows() * entries.ncols()) as f64;
        Ok(ProjectionMatrix {
            kind,
            layout: Layout::RandomPlacement,
            density: if nnz == entries.len() { 1.0 } else { density },
            seed,
            storage: Storage::Dense(entries),
        })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse_storage(&self) -> bool {
        matches!(self.storage, Storage::Coordinate(_))
    }

    pub fn rows(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Coordinate(c) => c.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.ncols(),
            Storage::Coordinate(c) => c.cols,
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.iter().filter(|v| **v != 0.0).count(),
            Storage::Coordinate(c) => c.nnz(),
        }
    }

    /// Bytes held by the entry storage (indices plus values).
    pub fn storage_bytes(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.len() * std::mem::size_of::<f64>(),
            Storage::Coordinate(c) => c.byte_size(),
        }
    }

    /// Bytes the same matrix would occupy in dense storage.
    pub fn dense_bytes(&self) -> usize {
        self.rows() * self.cols() * std::mem::size_of::<f64>()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Coordinate(c) => {
                let range = c.row_range(i);
                match c.col_idx[range.clone()].binary_search(&(j as u32)) {
                    Ok(pos) => c.values[range.start + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(m) => m.row(i).iter().copied().collect(),
            Storage::Coordinate(c) => {
                let mut out = vec![0.0; c.cols];
                for k in c.row_range(i) {
                    out[c.col_idx[k] as usize] = c.values[k];
                }
                out
            }
        }
    }

    /// Nonzero entries as `(row, col, value)` in row-major order.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let v = m[(i, j)];
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            Storage::Coordinate(c) => c.iter().collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Coordinate(c) => c.to_dense(),
        }
    }

    pub fn with_dense_storage(&self) -> ProjectionMatrix {
        ProjectionMatrix {
            storage: Storage::Dense(self.to_dense()),
            ..self.clone()
        }
    }

    pub fn with_coordinate_storage(&self) -> ProjectionMatrix {
        let coo = CooMatrix::from_sorted(self.rows(), self.cols(), self.triples());
        ProjectionMatrix {
            storage: Storage::Coordinate(coo),
            ..self.clone()
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> ProjectionMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * factor),
            Storage::Coordinate(c) => {
                let mut c = c.clone();
                c.values.iter_mut().for_each(|v| *v *= factor);
                Storage::Coordinate(c)
            }
        };
        ProjectionMatrix {
            storage,
            ..self.clone()
        }
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> ProjectionMatrix {
        let mut m = DMatrix::zeros(rows.len(), self.cols());
        for (r, &src) in rows.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&self.row(src));
        }
        ProjectionMatrix {
            storage: Storage::Dense(m),
            ..self.clone()
        }
    }

    /// `x_s = Φs · x`.
    pub fn project(&self, x: &Signal) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                context: "project",
                expected: self.cols(),
                actual: x.len(),
            });
        }
        Ok(self.mul_slice(x.samples()))
    }

    pub(crate) fn mul_slice(&self, x: &[f64]) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(m) => (0..m.nrows())
                .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
            Storage::Coordinate(c) => {
                let mut out = vec![0.0; c.rows];
                for (i, j, v) in c.iter() {
                    out[i] += v * x[j];
                }
                out
            }
        }
    }

    /// Serializes as a header `rows cols kind density seed`, an optional
    /// `# layout <name>` line, then one `i j value` line per nonzero.
    ///
    /// Values use the shortest round-trip decimal form, so import is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {:e} {}",
            self.rows(),
            self.cols(),
            self.kind,
            self.density,
            self.seed
        );
        if self.kind == MatrixKind::SparseGaussian {
            let _ = writeln!(out, "# layout {}", self.layout);
        }
        for (i, j, v) in self.triples() {
            let _ = writeln!(out, "{i} {j} {v:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(
                hline + 1,
                "header needs `rows cols kind density seed`".into(),
            ));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| parse_err(hline + 1, format!("bad {what} `{s}`")))
        };
        let rows = num(fields[0], "rows")?;
        let cols = num(fields[1], "cols")?;
        let kind: MatrixKind = fields[2]
            .parse()
            .map_err(|_| parse_err(hline + 1, format!("bad kind `{}`", fields[2])))?;
        let density: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(hline + 1, format!("bad density `{}`", fields[3])))?;
        let seed: u64 = fields[4]
            .parse()
            .map_err(|_| parse_err(hline + 1, format!("bad seed `{}`", fields[4])))?;
        if rows == 0 || cols == 0 {
            return Err(parse_err(hline + 1, "empty matrix".into()));
        }

        let mut layout = Layout::RandomPlacement;
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        for (ln, line) in lines {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("layout") {
                    if let Some(name) = parts.next() {
                        layout = name
                            .parse()
                            .map_err(|_| parse_err(ln + 1, format!("bad layout `{name}`")))?;
                    }
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(ln + 1, "expected `i j value`".into()));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(ln + 1, format!("bad row `{}`", parts[0])))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(ln + 1, format!("bad column `{}`", parts[1])))?;
            let v: f64 = parts[2]
                .parse()
                .map_err(|_| parse_err(ln + 1, format!("bad value `{}`", parts[2])))?;
            if i >= rows || j >= cols {
                return Err(parse_err(ln + 1, format!("entry ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(parse_err(ln + 1, "non-finite value".into()));
            }
            if let Some(&(pi, pj, _)) = triples.last() {
                if (i, j) <= (pi, pj) {
                    return Err(parse_err(
                        ln + 1,
                        format!("entry ({i}, {j}) duplicated or not in row-major order"),
                    ));
                }
            }
            triples.push((i, j, v));
        }

        let sparse = kind == MatrixKind::SparseGaussian && density < 1.0;
        let storage = if sparse {
            Storage::Coordinate(CooMatrix::from_sorted(rows, cols, triples))
        } else {
            let mut m = DMatrix::zeros(rows, cols);
            for (i, j, v) in triples {
                m[(i, j)] = v;
            }
            Storage::Dense(m)
        };
        Ok(ProjectionMatrix {
            kind,
            layout,
            density,
            seed,
            storage,
        })
    }
}

/// Nonzero budget `round(density · rows · cols)`.
pub fn nonzero_budget(rows: usize, cols: usize, density: f64) -> usize {
    (density * rows as f64 * cols as f64).round() as usize
}

/// Builds a sparse Gaussian matrix with exactly `round(density·rows·cols)`
/// i.i.d. `N(0, variance)` nonzeros.
pub fn build_sparse_gaussian(
    rows: usize,
    cols: usize,
    density: f64,
    layout: Layout,
    variance: f64,
    seed: u64,
) -> Result<ProjectionMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("rows/cols", "must be positive"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(
            "density",
            format!("{density} is outside (0, 1]"),
        ));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::invalid(
            "variance",
            format!("{variance} must be positive"),
        ));
    }
    let nnz = nonzero_budget(rows, cols, density);
    if nnz < rows {
        return Err(Error::invalid(
            "density",
            format!("{nnz} nonzeros cannot cover {rows} rows"),
        ));
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("variance checked above");
    let mut rng = seed::rng(seed);

    if nnz == rows * cols {
        let mut m = DMatrix::zeros(rows, cols);
        // row-major fill, same value order as the coordinate path
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = nonzero_normal(&normal, &mut rng);
            }
        }
        return Ok(ProjectionMatrix {
            kind: MatrixKind::SparseGaussian,
            layout,
            density,
            seed,
            storage: Storage::Dense(m),
        });
    }

    let positions = match layout {
        Layout::RandomPlacement => random_positions(&mut rng, rows, cols, nnz)?,
        Layout::Structured => structured_positions(&mut rng, rows, cols, nnz)?,
    };
    let triples = positions
        .into_iter()
        .map(|(i, j)| (i, j, nonzero_normal(&normal, &mut rng)))
        .collect();
    Ok(ProjectionMatrix {
        kind: MatrixKind::SparseGaussian,
        layout,
        density,
        seed,
        storage: Storage::Coordinate(CooMatrix::from_sorted(rows, cols, triples)),
    })
}

fn nonzero_normal(normal: &Normal<f64>, rng: &mut Rng) -> f64 {
    loop {
        let v = normal.sample(rng);
        if v != 0.0 {
            return v;
        }
    }
}

/// Uniform placement without replacement via rejection into a bitset;
/// redraws whenever a row ends up empty.
fn random_positions(
    rng: &mut Rng,
    rows: usize,
    cols: usize,
    nnz: usize,
) -> Result<Vec<(usize, usize)>> {
    let total = rows * cols;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let words = total.div_ceil(64);
        let mut bits = vec![0u64; words];
        // sample the smaller of the chosen set and its complement
        let complement = nnz * 2 > total;
        let target = if complement { total - nnz } else { nnz };
        let mut placed = 0;
        while placed < target {
            let p = rng.random_range(0..total);
            let (w, b) = (p / 64, p % 64);
            if bits[w] & (1 << b) == 0 {
                bits[w] |= 1 << b;
                placed += 1;
            }
        }
        let mut positions = Vec::with_capacity(nnz);
        let mut row_hit = vec![false; rows];
        for p in 0..total {
            let set = bits[p / 64] & (1 << (p % 64)) != 0;
            if set != complement {
                let i = p / cols;
                row_hit[i] = true;
                positions.push((i, p % cols));
            }
        }
        if row_hit.iter().all(|&h| h) {
            return Ok(positions);
        }
    }
    Err(Error::ZeroRowPlacement {
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Toeplitz-like support: one random base pattern, cyclically shifted by
/// the row index. Row budgets differ by at most one and sum to `nnz`.
fn structured_positions(
    rng: &mut Rng,
    rows: usize,
    cols: usize,
    nnz: usize,
) -> Result<Vec<(usize, usize)>> {
    let base = nnz / rows;
    let extra = nnz % rows;
    let widest = base + usize::from(extra > 0);
    if widest > cols {
        return Err(Error::invalid("density", "row budget exceeds column count"));
    }
    let pattern: Vec<usize> = index::sample(rng, cols, widest).into_vec();
    let mut positions = Vec::with_capacity(nnz);
    for i in 0..rows {
        let budget = base + usize::from(i < extra);
        let mut row: Vec<usize> = pattern[..budget].iter().map(|p| (p + i) % cols).collect();
        row.sort_unstable();
        positions.extend(row.into_iter().map(|j| (i, j)));
    }
    Ok(positions)
}

/// Builds one of the baseline projection families.
///
/// Dense Gaussian and Toeplitz draws are `N(0, 1/rows)`, Bernoulli entries
/// are `±1/√rows`. A partial-basis matrix keeps `rows` distinct basis vectors
/// (rows of `Ψᵀ`) chosen uniformly and stacked in ascending index order.
pub fn build_baseline_matrix(
    kind: MatrixKind,
    rows: usize,
    cols: usize,
    basis: Option<&SparsifyingBasis>,
    seed: u64,
) -> Result<ProjectionMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("rows/cols", "must be positive"));
    }
    let mut rng = seed::rng(seed);
    let scale = 1.0 / (rows as f64).sqrt();
    let entries = match kind {
        MatrixKind::SparseGaussian => {
            return Err(Error::invalid(
                "kind",
                "sparse Gaussian matrices are built with build_sparse_gaussian",
            ))
        }
        MatrixKind::DenseGaussian => {
            let normal = Normal::new(0.0, scale).expect("finite scale");
            let mut m = DMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = normal.sample(&mut rng);
                }
            }
            m
        }
        MatrixKind::Bernoulli => {
            let mut m = DMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = if rng.random::<bool>() { scale } else { -scale };
                }
            }
            m
        }
        MatrixKind::Toeplitz => {
            let normal = Normal::new(0.0, scale).expect("finite scale");
            let generator: Vec<f64> = (0..rows + cols - 1)
                .map(|_| normal.sample(&mut rng))
                .collect();
            DMatrix::from_fn(rows, cols, |i, j| generator[j + rows - 1 - i])
        }
        MatrixKind::PartialBasis => {
            let basis = basis
                .ok_or_else(|| Error::invalid("basis", "a partial-basis matrix needs a basis"))?;
            if basis.dimension() != cols {
                return Err(Error::DimensionMismatch {
                    context: "partial basis",
                    expected: cols,
                    actual: basis.dimension(),
                });
            }
            if rows > cols {
                return Err(Error::invalid(
                    "rows",
                    format!("{rows} rows exceed the {cols} basis vectors"),
                ));
            }
            let mut chosen = index::sample(&mut rng, cols, rows).into_vec();
            chosen.sort_unstable();
            let mut m = DMatrix::zeros(rows, cols);
            let mut unit = vec![0.0; cols];
            for (r, &k) in chosen.iter().enumerate() {
                unit[k] = 1.0;
                let atom = basis.synthesize_slice(&unit);
                unit[k] = 0.0;
                m.row_mut(r).copy_from_slice(&atom);
            }
            m
        }
    };
    Ok(ProjectionMatrix {
        kind,
        layout: Layout::RandomPlacement,
        density: 1.0,
        seed,
        storage: Storage::Dense(entries),
    })
}

/// Builds any projection kind from the shared experiment parameters.
pub fn build_projection(
    kind: MatrixKind,
    rows: usize,
    cols: usize,
    params: &ProjectionParams,
    seed: u64,
) -> Result<ProjectionMatrix> {
    match kind {
        MatrixKind::SparseGaussian => build_sparse_gaussian(
            rows,
            cols,
            params.density,
            params.layout,
            params.variance,
            seed,
        ),
        MatrixKind::PartialBasis => {
            let basis = SparsifyingBasis::new(params.partial_basis, cols)?;
            build_baseline_matrix(kind, rows, cols, Some(&basis), seed)
        }
        _ => build_baseline_matrix(kind, rows, cols, None, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub density: f64,
    pub variance: f64,
    pub layout: Layout,
    /// Basis whose vectors a partial-basis matrix is cut from.
    pub partial_basis: BasisKind,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            density: 0.1,
            variance: 1.0,
            layout: Layout::RandomPlacement,
            partial_basis: BasisKind::Canonical,
        }
    }
}

/// The loss matrix `Φr`, stored as the received-index map `J`.
///
/// Sequence numbers are 1-based: `J(i)` is the sent sequence number of the
/// `i`-th received sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMatrix {
    received_map: Vec<usize>,
    sent_count: usize,
}

impl SelectionMatrix {
    pub fn new(received_seq: Vec<usize>, sent_count: usize) -> Result<Self> {
        if sent_count == 0 {
            return Err(Error::InvalidSelection(
                "sent count must be positive".into(),
            ));
        }
        for (pos, &j) in received_seq.iter().enumerate() {
            if j == 0 || j > sent_count {
                return Err(Error::InvalidSelection(format!(
                    "sequence number {j} outside [1, {sent_count}]"
                )));
            }
            if pos > 0 && received_seq[pos - 1] >= j {
                return Err(Error::InvalidSelection(format!(
                    "sequence numbers must be strictly increasing ({} then {j})",
                    received_seq[pos - 1]
                )));
            }
        }
        Ok(SelectionMatrix {
            received_map: received_seq,
            sent_count,
        })
    }

    pub fn identity(sent_count: usize) -> Result<Self> {
        Self::new((1..=sent_count).collect(), sent_count)
    }

    pub fn received_map(&self) -> &[usize] {
        &self.received_map
    }

    /// 0-based row indices of `Φs` that survived.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.received_map.iter().map(|j| j - 1)
    }

    pub fn received_count(&self) -> usize {
        self.received_map.len()
    }

    pub fn sent_count(&self) -> usize {
        self.sent_count
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.received_map.len(), self.sent_count);
        for (i, j) in self.indices().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    /// `Φr · v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.sent_count {
            return Err(Error::DimensionMismatch {
                context: "selection",
                expected: self.sent_count,
                actual: v.len(),
            });
        }
        Ok(self.indices().map(|j| v[j]).collect())
    }
}

/// Shorthand for [`SelectionMatrix::new`].
pub fn build_selection_matrix(
    received_seq: &[usize],
    sent_count: usize,
) -> Result<SelectionMatrix> {
    SelectionMatrix::new(received_seq.to_vec(), sent_count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub selection: SelectionMatrix,
    pub projection_kind: MatrixKind,
    pub projection_seed: u64,
    pub basis: BasisKind,
}

/// Equivalent sensing matrix `A = Φr · Φs · Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    entries: DMatrix<f64>,
    provenance: Option<Provenance>,
}

impl SensingMatrix {
    /// Wraps an arbitrary dense matrix with no provenance.
    pub fn from_dense(entries: DMatrix<f64>) -> Self {
        SensingMatrix {
            entries,
            provenance: None,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn mul(&self, s: &[f64]) -> Vec<f64> {
        let v = &self.entries * nalgebra::DVector::from_column_slice(s);
        v.as_slice().to_vec()
    }
}

/// Composes `A`: row `i` of `A` is row `J(i)` of `Φs · Ψ`, computed as the
/// analysis transform of that row of `Φs`.
pub fn compose_sensing_matrix(
    sel: &SelectionMatrix,
    proj: &ProjectionMatrix,
    basis: &SparsifyingBasis,
) -> Result<SensingMatrix> {
    if sel.sent_count() != proj.rows() {
        return Err(Error::CompositionMismatch {
            link: "selection columns vs projection rows",
            expected: proj.rows(),
            actual: sel.sent_count(),
        });
    }
    if proj.cols() != basis.dimension() {
        return Err(Error::CompositionMismatch {
            link: "projection columns vs basis dimension",
            expected: basis.dimension(),
            actual: proj.cols(),
        });
    }
    let n = proj.cols();
    let mut entries = DMatrix::zeros(sel.received_count(), n);
    for (i, j) in sel.indices().enumerate() {
        let row = basis.analyze_slice(&proj.row(j));
        entries.row_mut(i).copy_from_slice(&row);
    }
    Ok(SensingMatrix {
        entries,
        provenance: Some(Provenance {
            selection: sel.clone(),
            projection_kind: proj.kind(),
            projection_seed: proj.seed(),
            basis: basis.kind(),
        }),
    })
}
