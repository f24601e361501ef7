//! Quantized symbols as explicit matrices on Fourier coefficients.
//!
//! The quantization of a symbol acts on a wavefunction's Fourier
//! coefficients by `(Q(F)ψ)_k = Σ_m F̂(k − m, m) ψ_m`, so its matrix is
//! banded: entries vanish unless `|k − m|∞ ≤ K`.  Matrices are stored
//! sparsely, column-major, and the output box is always the input box
//! enlarged by the frequency radius so no amplitude is ever dropped.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::lattice::{ModeBox, ModeIndex};
use crate::symbols::SymbolCoefficients;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state has support at {mode}, outside the operator input box")]
    SupportOutsideBox { mode: ModeIndex },
    #[error("entry at (row {row}, column {column}) lies outside the operator boxes")]
    EntryOutsideBox { row: ModeIndex, column: ModeIndex },
    #[error("entry at (row {row}, column {column}) is not finite")]
    NonFiniteEntry { row: ModeIndex, column: ModeIndex },
    #[error("operator boxes are incompatible: {context}")]
    BoxMismatch { context: &'static str },
    #[error("target box is not contained in the operator output box")]
    BoxNotContained,
    #[error("matrix of {rows}×{columns} entries exceeds the dense decomposition limit {limit}")]
    SizeLimit { rows: usize, columns: usize, limit: usize },
    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Finitely supported coefficient vector `ψ_k` over modes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dimension: usize,
    coeffs: BTreeMap<ModeIndex, Complex64>,
}

impl StateVector {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0);
        StateVector { dimension, coeffs: BTreeMap::new() }
    }

    /// The basis state with a single unit coefficient at mode `n`.
    pub fn basis(n: &ModeIndex) -> Self {
        let mut sv = StateVector::new(n.dim());
        sv.coeffs.insert(n.clone(), Complex64::new(1.0, 0.0));
        sv
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn set(&mut self, n: ModeIndex, value: Complex64) {
        assert_eq!(n.dim(), self.dimension, "dimension mismatch in state coefficient");
        if value == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, value);
        }
    }

    pub fn get(&self, n: &ModeIndex) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch in inner product");
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, a) in &self.coeffs {
            acc += a.conj() * other.get(n);
        }
        acc
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch in state difference");
        let mut out = self.clone();
        for (n, b) in &other.coeffs {
            out.set(n.clone(), out.get(n) - b);
        }
        out
    }
}

/// Sparse complex matrix indexed by (output mode, input mode).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    input_box: ModeBox,
    output_box: ModeBox,
    // column-major: columns[m][k] = entry(k, m)
    columns: BTreeMap<ModeIndex, BTreeMap<ModeIndex, Complex64>>,
}

impl OperatorMatrix {
    pub fn zero(input_box: ModeBox, output_box: ModeBox) -> Result<Self, OperatorError> {
        if input_box.dimension() != output_box.dimension() {
            return Err(OperatorError::DimensionMismatch {
                expected: input_box.dimension(),
                got: output_box.dimension(),
            });
        }
        Ok(OperatorMatrix { input_box, output_box, columns: BTreeMap::new() })
    }

    pub fn identity(modes: ModeBox) -> Self {
        let mut columns = BTreeMap::new();
        for m in modes.iter() {
            let mut col = BTreeMap::new();
            col.insert(m.clone(), Complex64::new(1.0, 0.0));
            columns.insert(m, col);
        }
        OperatorMatrix { input_box: modes, output_box: modes, columns }
    }

    pub fn input_box(&self) -> &ModeBox {
        &self.input_box
    }

    pub fn output_box(&self) -> &ModeBox {
        &self.output_box
    }

    pub fn dimension(&self) -> usize {
        self.input_box.dimension()
    }

    pub fn insert(
        &mut self,
        row: ModeIndex,
        column: ModeIndex,
        value: Complex64,
    ) -> Result<(), OperatorError> {
        if !self.output_box.contains(&row) || !self.input_box.contains(&column) {
            return Err(OperatorError::EntryOutsideBox { row, column });
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(OperatorError::NonFiniteEntry { row, column });
        }
        self.columns.entry(column).or_default().insert(row, value);
        Ok(())
    }

    pub fn entry(&self, row: &ModeIndex, column: &ModeIndex) -> Complex64 {
        self.columns
            .get(column)
            .and_then(|col| col.get(row))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn entry_count(&self) -> usize {
        self.columns.values().map(|col| col.len()).sum()
    }

    /// Visits stored entries as `(row, column, value)` in column-major order.
    pub fn for_each_entry(&self, mut f: impl FnMut(&ModeIndex, &ModeIndex, Complex64)) {
        for (m, col) in &self.columns {
            for (k, v) in col {
                f(k, m, *v);
            }
        }
    }

    /// New matrix over the same boxes with every stored entry transformed.
    pub fn map_entries(
        &self,
        mut f: impl FnMut(&ModeIndex, &ModeIndex, Complex64) -> Complex64,
    ) -> OperatorMatrix {
        let columns = self
            .columns
            .iter()
            .map(|(m, col)| {
                let new_col =
                    col.iter().map(|(k, v)| (k.clone(), f(k, m, *v))).collect();
                (m.clone(), new_col)
            })
            .collect();
        OperatorMatrix { input_box: self.input_box, output_box: self.output_box, columns }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(
        &self,
        other: &OperatorMatrix,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<OperatorMatrix, OperatorError> {
        if self.input_box != other.input_box || self.output_box != other.output_box {
            return Err(OperatorError::BoxMismatch {
                context: "entrywise combination needs identical input and output boxes",
            });
        }
        let mut out = OperatorMatrix {
            input_box: self.input_box,
            output_box: self.output_box,
            columns: BTreeMap::new(),
        };
        let zero = Complex64::new(0.0, 0.0);
        let keys: Vec<&ModeIndex> =
            self.columns.keys().chain(other.columns.keys()).collect();
        for m in keys {
            if out.columns.contains_key(m) {
                continue;
            }
            let mut col = BTreeMap::new();
            let left = self.columns.get(m);
            let right = other.columns.get(m);
            let row_keys: Vec<&ModeIndex> = left
                .into_iter()
                .flat_map(|c| c.keys())
                .chain(right.into_iter().flat_map(|c| c.keys()))
                .collect();
            for k in row_keys {
                if col.contains_key(k) {
                    continue;
                }
                let a = left.and_then(|c| c.get(k)).copied().unwrap_or(zero);
                let b = right.and_then(|c| c.get(k)).copied().unwrap_or(zero);
                col.insert(k.clone(), op(a, b));
            }
            out.columns.insert(m.clone(), col);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> OperatorMatrix {
        self.map_entries(|_, _, v| v * factor)
    }
}

/// Builds the matrix of `Q(F)` from a coefficient table.
///
/// The input box is the momentum box of `F`; the output box is enlarged by
/// the frequency radius so every amplitude `F̂(k − m, m)` has a row to land
/// in.  Entry `(m + k, m)` holds `F̂(k, m)`.
pub fn quantize(coeffs: &SymbolCoefficients) -> OperatorMatrix {
    let input_box = *coeffs.momentum_box();
    let output_box = ModeBox::new(
        input_box.dimension(),
        input_box.radius() + coeffs.frequency_box().radius(),
    )
    .expect("enlarged box is valid");
    let mut columns: BTreeMap<ModeIndex, BTreeMap<ModeIndex, Complex64>> = BTreeMap::new();
    for ((k, p), v) in coeffs.iter() {
        let row = p.add(k);
        columns.entry(p.clone()).or_default().insert(row, *v);
    }
    OperatorMatrix { input_box, output_box, columns }
}

/// Applies the matrix to a state: `(Aψ)_k = Σ_m A[k, m] ψ_m`.
pub fn apply(op: &OperatorMatrix, state: &StateVector) -> Result<StateVector, OperatorError> {
    if state.dimension() != op.dimension() {
        return Err(OperatorError::DimensionMismatch {
            expected: op.dimension(),
            got: state.dimension(),
        });
    }
    let mut out = StateVector::new(op.dimension());
    for (m, amp) in state.iter() {
        if !op.input_box.contains(m) {
            return Err(OperatorError::SupportOutsideBox { mode: m.clone() });
        }
        if let Some(col) = op.columns.get(m) {
            for (k, v) in col {
                let updated = out.get(k) + v * amp;
                out.set(k.clone(), updated);
            }
        }
    }
    Ok(out)
}

/// Conjugate transpose: boxes swap roles.
pub fn adjoint(op: &OperatorMatrix) -> OperatorMatrix {
    let mut columns: BTreeMap<ModeIndex, BTreeMap<ModeIndex, Complex64>> = BTreeMap::new();
    op.for_each_entry(|k, m, v| {
        columns.entry(k.clone()).or_default().insert(m.clone(), v.conj());
    });
    OperatorMatrix { input_box: op.output_box, output_box: op.input_box, columns }
}

/// Matrix product `a·b`; requires `b`'s output box to fit inside `a`'s input box.
pub fn compose(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
    if a.dimension() != b.dimension() {
        return Err(OperatorError::DimensionMismatch {
            expected: a.dimension(),
            got: b.dimension(),
        });
    }
    if !a.input_box.contains_box(&b.output_box) {
        return Err(OperatorError::BoxMismatch {
            context: "composition needs the inner operator's output inside the outer input box",
        });
    }
    let mut columns: BTreeMap<ModeIndex, BTreeMap<ModeIndex, Complex64>> = BTreeMap::new();
    for (j, bcol) in &b.columns {
        let mut acc: BTreeMap<ModeIndex, Complex64> = BTreeMap::new();
        for (m, bv) in bcol {
            if let Some(acol) = a.columns.get(m) {
                for (k, av) in acol {
                    let updated =
                        acc.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0)) + av * bv;
                    acc.insert(k.clone(), updated);
                }
            }
        }
        if !acc.is_empty() {
            columns.insert(j.clone(), acc);
        }
    }
    Ok(OperatorMatrix { input_box: b.input_box, output_box: a.output_box, columns })
}

/// Restricts rows to `target`: entries with output mode outside it are
/// dropped.  This is lossy whenever the operator has amplitudes beyond the
/// target box; callers report it as a truncation step.
pub fn compress(op: &OperatorMatrix, target: ModeBox) -> Result<OperatorMatrix, OperatorError> {
    if !op.output_box.contains_box(&target) {
        return Err(OperatorError::BoxNotContained);
    }
    let mut columns: BTreeMap<ModeIndex, BTreeMap<ModeIndex, Complex64>> = BTreeMap::new();
    op.for_each_entry(|k, m, v| {
        if target.contains(k) {
            columns.entry(m.clone()).or_default().insert(k.clone(), v);
        }
    });
    Ok(OperatorMatrix { input_box: op.input_box, output_box: target, columns })
}

// dense column-compressed form for the iteration kernels
struct DenseColumns {
    in_len: usize,
    out_len: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl DenseColumns {
    fn build(op: &OperatorMatrix) -> Self {
        let in_len = op.input_box.len();
        let out_len = op.output_box.len();
        let mut cols = vec![Vec::new(); in_len];
        op.for_each_entry(|k, m, v| {
            let ci = op.input_box.index_of(m).expect("stored column inside box");
            let ri = op.output_box.index_of(k).expect("stored row inside box");
            cols[ci].push((ri, v));
        });
        DenseColumns { in_len, out_len, cols }
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.out_len];
        for (ci, col) in self.cols.iter().enumerate() {
            let amp = v[ci];
            if amp != Complex64::new(0.0, 0.0) {
                for (ri, a) in col {
                    out[*ri] += a * amp;
                }
            }
        }
        out
    }

    fn apply_adjoint(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.in_len];
        for (ci, col) in self.cols.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (ri, a) in col {
                acc += a.conj() * w[*ri];
            }
            out[ci] = acc;
        }
        out
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `A*A`.
///
/// Starts from the all-ones vector and stops when successive estimates agree
/// to the relative tolerance, so results are reproducible bit for bit.  The
/// returned value never overshoots the true norm, which keeps upper-bound
/// checks sound.
pub fn operator_norm(
    op: &OperatorMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<f64, OperatorError> {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    assert!(max_iter > 0);
    let dense = DenseColumns::build(op);
    let mut v = vec![Complex64::new(1.0, 0.0); dense.in_len];
    let scale = 1.0 / (dense.in_len as f64).sqrt();
    for z in &mut v {
        *z *= scale;
    }
    let mut w = dense.apply(&v);
    if vec_norm(&w) == 0.0 {
        // the all-ones vector sits in the kernel; fall back to basis starts
        let mut found = false;
        for i in 0..dense.in_len {
            let mut basis = vec![Complex64::new(0.0, 0.0); dense.in_len];
            basis[i] = Complex64::new(1.0, 0.0);
            let candidate = dense.apply(&basis);
            if vec_norm(&candidate) > 0.0 {
                v = basis;
                w = candidate;
                found = true;
                break;
            }
        }
        if !found {
            return Ok(0.0);
        }
    }
    let mut sigma = vec_norm(&w) / vec_norm(&v);
    for _ in 0..max_iter {
        let u = dense.apply_adjoint(&w);
        let u_norm = vec_norm(&u);
        if u_norm == 0.0 {
            return Ok(sigma);
        }
        v = u;
        let inv = 1.0 / u_norm;
        for z in &mut v {
            *z *= inv;
        }
        w = dense.apply(&v);
        let next = vec_norm(&w);
        if (next - sigma).abs() <= tol * next.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        sigma = next;
    }
    Err(OperatorError::NoConvergence { iterations: max_iter })
}

// dense decomposition guard: boxes beyond this are not materialized
const DENSE_ENTRY_LIMIT: usize = 250_000;

/// Full singular spectrum in descending order via dense decomposition.
pub fn singular_values(op: &OperatorMatrix) -> Result<Vec<f64>, OperatorError> {
    let rows = op.output_box.len();
    let cols = op.input_box.len();
    if rows * cols > DENSE_ENTRY_LIMIT {
        return Err(OperatorError::SizeLimit { rows, columns: cols, limit: DENSE_ENTRY_LIMIT });
    }
    let dense = DMatrix::<Complex64>::from_fn(rows, cols, |i, j| {
        op.entry(&op.output_box.mode_at(i), &op.input_box.mode_at(j))
    });
    let mut values: Vec<f64> = dense.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    Ok(values)
}

/// Number of singular values above the absolute tolerance.
pub fn rank(op: &OperatorMatrix, tol: f64) -> Result<usize, OperatorError> {
    Ok(singular_values(op)?.into_iter().filter(|s| *s > tol).count())
}

/// Number of singular values above `relative_tol · σ_max`; scale invariant.
pub fn rank_relative(op: &OperatorMatrix, relative_tol: f64) -> Result<usize, OperatorError> {
    let sv = singular_values(op)?;
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0);
    }
    let tol = relative_tol * max;
    Ok(sv.into_iter().filter(|s| *s > tol).count())
}

/// Rank with the default relative tolerance `1e−10`.
pub fn rank_default(op: &OperatorMatrix) -> Result<usize, OperatorError> {
    rank_relative(op, 1e-10)
}

/// Writes entries as coordinate-list text: one line per stored entry,
/// `k-components m-components re im`, sorted by (row, column).
pub fn write_coordinate_list(op: &OperatorMatrix, mut w: impl Write) -> io::Result<()> {
    let mut entries: Vec<(ModeIndex, ModeIndex, Complex64)> = Vec::new();
    op.for_each_entry(|k, m, v| entries.push((k.clone(), m.clone(), v)));
    entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    for (k, m, v) in entries {
        for c in k.components() {
            write!(w, "{c} ")?;
        }
        for c in m.components() {
            write!(w, "{c} ")?;
        }
        writeln!(w, "{} {}", v.re, v.im)?;
    }
    Ok(())
}
