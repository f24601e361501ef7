//! Symbols on the torus phase space and their Fourier-side representation.
//!
//! A symbol `F(x, p)` is a function of position on the torus and integer
//! momentum.  We store its partial Fourier coefficients `F̂(k, p)` over a
//! finite frequency box `|k|∞ ≤ K` and momentum box `|p|∞ ≤ P`.  The weighted
//! norm
//!
//! ```text
//! ‖F‖_r = sup_(k,p) (1 + |k|²)^(r/2) |F̂(k, p)|
//! ```
//!
//! with `r > N` controls the operator norm of the quantization through the
//! summed lattice constant `C_r = Σ_k (1 + |k|²)^(−r/2)`, which this module
//! encloses rigorously by truncated summation plus an integral tail bound.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeError, ModeBox, ModeIndex};

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("regularity r = {r} must exceed the dimension {dimension}")]
    RegularityTooSmall { r: f64, dimension: usize },
    #[error("frequency {frequency} lies outside the frequency box of radius {radius}")]
    FrequencyOutsideBox { frequency: ModeIndex, radius: i64 },
    #[error("momentum {momentum} lies outside the momentum box of radius {radius}")]
    MomentumOutsideBox { momentum: ModeIndex, radius: i64 },
    #[error("coefficient at (k = {frequency}, p = {momentum}) is not finite")]
    NonFiniteCoefficient { frequency: ModeIndex, momentum: ModeIndex },
    #[error("sample at momentum {momentum} is not finite")]
    NonFiniteSample { momentum: ModeIndex },
    #[error(
        "grid of {grid_size} points per axis cannot resolve frequency radius {freq_radius}; \
         at least {required} points are needed"
    )]
    ResolutionTooSmall { grid_size: usize, freq_radius: i64, required: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient tables live over different boxes and cannot be combined")]
    ShapeMismatch,
    #[error("tolerance {0} must be positive and finite")]
    InvalidTolerance(f64),
    #[error(
        "tail tolerance {tol:e} needs a summation box of radius {radius}; \
         the supported maximum is {limit}"
    )]
    TailToleranceTooTight { tol: f64, radius: i64, limit: i64 },
    #[error("profile parameter {name} = {value} is invalid ({reason})")]
    InvalidProfile { name: &'static str, value: f64, reason: &'static str },
}

/// Regularity exponent `r` for the weighted norm, validated against the
/// dimension: the lattice sum `C_r` converges exactly when `r > N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityIndex {
    value: f64,
    dimension: usize,
}

impl RegularityIndex {
    pub fn new(value: f64, dimension: usize) -> Result<Self, SymbolError> {
        if !value.is_finite() || value <= dimension as f64 {
            return Err(SymbolError::RegularityTooSmall { r: value, dimension });
        }
        Ok(RegularityIndex { value, dimension })
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn dimension(self) -> usize {
        self.dimension
    }
}

fn frequency_weight(k: &ModeIndex, r: f64) -> f64 {
    (1.0 + k.norm_sq() as f64).powf(r / 2.0)
}

/// Finite table of partial Fourier coefficients `F̂(k, p)`.
///
/// Entries live over `frequency box × momentum box`; absent keys read as
/// zero.  All stored values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCoefficients {
    freq_box: ModeBox,
    momentum_box: ModeBox,
    table: BTreeMap<(ModeIndex, ModeIndex), Complex64>,
}

impl SymbolCoefficients {
    pub fn new(
        dimension: usize,
        freq_radius: i64,
        momentum_radius: i64,
    ) -> Result<Self, SymbolError> {
        Ok(SymbolCoefficients {
            freq_box: ModeBox::new(dimension, freq_radius)?,
            momentum_box: ModeBox::new(dimension, momentum_radius)?,
            table: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.freq_box.dimension()
    }

    pub fn frequency_box(&self) -> &ModeBox {
        &self.freq_box
    }

    pub fn momentum_box(&self) -> &ModeBox {
        &self.momentum_box
    }

    pub fn insert(
        &mut self,
        k: ModeIndex,
        p: ModeIndex,
        value: Complex64,
    ) -> Result<(), SymbolError> {
        if !self.freq_box.contains(&k) {
            return Err(SymbolError::FrequencyOutsideBox {
                frequency: k,
                radius: self.freq_box.radius(),
            });
        }
        if !self.momentum_box.contains(&p) {
            return Err(SymbolError::MomentumOutsideBox {
                momentum: p,
                radius: self.momentum_box.radius(),
            });
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(SymbolError::NonFiniteCoefficient { frequency: k, momentum: p });
        }
        self.table.insert((k, p), value);
        Ok(())
    }

    /// Adds `value` to the stored coefficient at `(k, p)`.
    pub fn accumulate(
        &mut self,
        k: ModeIndex,
        p: ModeIndex,
        value: Complex64,
    ) -> Result<(), SymbolError> {
        let current = self.get(&k, &p);
        self.insert(k, p, current + value)
    }

    /// The coefficient at `(k, p)`; zero when no entry is stored.
    pub fn get(&self, k: &ModeIndex, p: &ModeIndex) -> Complex64 {
        self.table
            .get(&(k.clone(), p.clone()))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Stored entries in deterministic `(k, p)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&(ModeIndex, ModeIndex), &Complex64)> {
        self.table.iter()
    }

    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    /// Frequencies that carry at least one nonzero coefficient, in order.
    pub fn active_frequencies(&self) -> Vec<ModeIndex> {
        let mut out: Vec<ModeIndex> = Vec::new();
        // keys are k-major, so equal frequencies are adjacent
        for ((k, _), v) in &self.table {
            if v.norm_sqr() > 0.0 && out.last() != Some(k) {
                out.push(k.clone());
            }
        }
        out
    }

    /// Largest coefficient modulus; zero for an empty table.
    pub fn max_abs(&self) -> f64 {
        self.table.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// New table over the same boxes with every entry transformed.
    pub(crate) fn map_entries(
        &self,
        mut f: impl FnMut(&ModeIndex, &ModeIndex, Complex64) -> Complex64,
    ) -> SymbolCoefficients {
        let table = self
            .table
            .iter()
            .map(|((k, p), v)| ((k.clone(), p.clone()), f(k, p, *v)))
            .collect();
        SymbolCoefficients { freq_box: self.freq_box, momentum_box: self.momentum_box, table }
    }

    /// New table keeping only entries whose key satisfies the predicate.
    pub(crate) fn filter_entries(
        &self,
        mut keep: impl FnMut(&ModeIndex, &ModeIndex) -> bool,
    ) -> SymbolCoefficients {
        let table = self
            .table
            .iter()
            .filter(|((k, p), _)| keep(k, p))
            .map(|(key, v)| (key.clone(), *v))
            .collect();
        SymbolCoefficients { freq_box: self.freq_box, momentum_box: self.momentum_box, table }
    }

    pub fn scale(&self, factor: Complex64) -> SymbolCoefficients {
        self.map_entries(|_, _, v| v * factor)
    }

    pub fn add(&self, other: &SymbolCoefficients) -> Result<SymbolCoefficients, SymbolError> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymbolCoefficients) -> Result<SymbolCoefficients, SymbolError> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(
        &self,
        other: &SymbolCoefficients,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SymbolCoefficients, SymbolError> {
        if self.freq_box != other.freq_box || self.momentum_box != other.momentum_box {
            return Err(SymbolError::ShapeMismatch);
        }
        let mut table = BTreeMap::new();
        let zero = Complex64::new(0.0, 0.0);
        for key in self.table.keys().chain(other.table.keys()) {
            if !table.contains_key(key) {
                let a = self.table.get(key).copied().unwrap_or(zero);
                let b = other.table.get(key).copied().unwrap_or(zero);
                table.insert(key.clone(), op(a, b));
            }
        }
        Ok(SymbolCoefficients { freq_box: self.freq_box, momentum_box: self.momentum_box, table })
    }
}

/// Named radial momentum profiles used by symbol terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MomentumProfile {
    /// `amplitude`
    Constant { amplitude: f64 },
    /// `amplitude · (1 + |p|²)^(−exponent/2)`
    InversePower { exponent: f64, amplitude: f64 },
    /// `amplitude · exp(−|p|²/width)`
    Gaussian { width: f64, amplitude: f64 },
    /// `amplitude` on `|p|² ≤ radius²`, zero outside
    Ball { radius: i64, amplitude: f64 },
}

impl MomentumProfile {
    pub fn validate(&self) -> Result<(), SymbolError> {
        let check_finite = |name: &'static str, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(SymbolError::InvalidProfile { name, value, reason: "must be finite" })
            }
        };
        match self {
            MomentumProfile::Constant { amplitude } => check_finite("amplitude", *amplitude),
            MomentumProfile::InversePower { exponent, amplitude } => {
                check_finite("exponent", *exponent)?;
                check_finite("amplitude", *amplitude)
            }
            MomentumProfile::Gaussian { width, amplitude } => {
                check_finite("width", *width)?;
                if *width <= 0.0 {
                    return Err(SymbolError::InvalidProfile {
                        name: "width",
                        value: *width,
                        reason: "must be positive",
                    });
                }
                check_finite("amplitude", *amplitude)
            }
            MomentumProfile::Ball { radius, amplitude } => {
                if *radius < 0 {
                    return Err(SymbolError::InvalidProfile {
                        name: "radius",
                        value: *radius as f64,
                        reason: "must be nonnegative",
                    });
                }
                check_finite("amplitude", *amplitude)
            }
        }
    }

    pub fn evaluate(&self, p: &ModeIndex) -> f64 {
        let nsq = p.norm_sq() as f64;
        match self {
            MomentumProfile::Constant { amplitude } => *amplitude,
            MomentumProfile::InversePower { exponent, amplitude } => {
                amplitude * (1.0 + nsq).powf(-exponent / 2.0)
            }
            MomentumProfile::Gaussian { width, amplitude } => amplitude * (-nsq / width).exp(),
            MomentumProfile::Ball { radius, amplitude } => {
                if p.norm_sq() <= radius * radius {
                    *amplitude
                } else {
                    0.0
                }
            }
        }
    }
}

/// One explicit coefficient of a table term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub frequency: Vec<i64>,
    pub momentum: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// A building block of a symbol: a single position harmonic `e^{ik·x}` with a
/// radial momentum profile, or an explicit coefficient table.  Terms add up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolTerm {
    Harmonic { frequency: Vec<i64>, profile: MomentumProfile },
    Table { table: Vec<TableEntry> },
}

/// Assembles `Σ terms` into a coefficient table over the given boxes.
pub fn build_symbol(
    dimension: usize,
    freq_radius: i64,
    momentum_radius: i64,
    terms: &[SymbolTerm],
) -> Result<SymbolCoefficients, SymbolError> {
    let mut coeffs = SymbolCoefficients::new(dimension, freq_radius, momentum_radius)?;
    for term in terms {
        match term {
            SymbolTerm::Harmonic { frequency, profile } => {
                if frequency.len() != dimension {
                    return Err(SymbolError::DimensionMismatch {
                        expected: dimension,
                        got: frequency.len(),
                    });
                }
                profile.validate()?;
                let k = ModeIndex::new(frequency.clone());
                if !coeffs.freq_box.contains(&k) {
                    return Err(SymbolError::FrequencyOutsideBox {
                        frequency: k,
                        radius: freq_radius,
                    });
                }
                for p in coeffs.momentum_box.iter().collect::<Vec<_>>() {
                    let value = profile.evaluate(&p);
                    if value != 0.0 {
                        coeffs.accumulate(k.clone(), p, Complex64::new(value, 0.0))?;
                    }
                }
            }
            SymbolTerm::Table { table } => {
                for entry in table {
                    if entry.frequency.len() != dimension || entry.momentum.len() != dimension {
                        return Err(SymbolError::DimensionMismatch {
                            expected: dimension,
                            got: entry.frequency.len().max(entry.momentum.len()),
                        });
                    }
                    let k = ModeIndex::new(entry.frequency.clone());
                    let p = ModeIndex::new(entry.momentum.clone());
                    coeffs.accumulate(k, p, Complex64::new(entry.re, entry.im))?;
                }
            }
        }
    }
    Ok(coeffs)
}

/// Samples of a symbol on a uniform position grid, one slice per momentum.
///
/// Grid points per axis are `x_j = 2πj/M`, `j = 0..M`.  A grid with
/// `M ≥ 2K + 1` determines every coefficient with `|k|∞ ≤ K` exactly.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    dimension: usize,
    grid_size: usize,
    momentum_box: ModeBox,
    // outer index: momentum in box order; inner: grid point in lex order
    values: Vec<Vec<Complex64>>,
}

impl SymbolGrid {
    /// Samples `f(x, p)` over the grid and momentum box.
    pub fn sample(
        dimension: usize,
        grid_size: usize,
        momentum_radius: i64,
        mut f: impl FnMut(&[f64], &ModeIndex) -> Complex64,
    ) -> Result<Self, SymbolError> {
        assert!(grid_size >= 1, "grid needs at least one point per axis");
        let momentum_box = ModeBox::new(dimension, momentum_radius)?;
        let points = grid_point_count(dimension, grid_size);
        let mut values = Vec::with_capacity(momentum_box.len());
        let mut x = vec![0.0f64; dimension];
        for p_idx in 0..momentum_box.len() {
            let p = momentum_box.mode_at(p_idx);
            let mut slice = Vec::with_capacity(points);
            for flat in 0..points {
                fill_grid_point(dimension, grid_size, flat, &mut x);
                let v = f(&x, &p);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(SymbolError::NonFiniteSample { momentum: p });
                }
                slice.push(v);
            }
            values.push(slice);
        }
        Ok(SymbolGrid { dimension, grid_size, momentum_box, values })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn momentum_box(&self) -> &ModeBox {
        &self.momentum_box
    }

    pub fn value(&self, momentum_index: usize, grid_index: usize) -> Complex64 {
        self.values[momentum_index][grid_index]
    }
}

fn grid_point_count(dimension: usize, grid_size: usize) -> usize {
    grid_size.pow(dimension as u32)
}

// decodes a flat index into grid coordinates x_j = 2πj/M, lexicographically
fn fill_grid_point(dimension: usize, grid_size: usize, flat: usize, x: &mut [f64]) {
    let mut rest = flat;
    for d in (0..dimension).rev() {
        let j = rest % grid_size;
        rest /= grid_size;
        x[d] = TAU * j as f64 / grid_size as f64;
    }
}

fn grid_digits(dimension: usize, grid_size: usize, flat: usize, digits: &mut [i64]) {
    let mut rest = flat;
    for d in (0..dimension).rev() {
        digits[d] = (rest % grid_size) as i64;
        rest /= grid_size;
    }
}

fn unit_phase(angle: f64) -> Complex64 {
    let reduced = angle.rem_euclid(TAU);
    Complex64::new(reduced.cos(), reduced.sin())
}

/// Discrete partial Fourier transform of the grid samples.
///
/// Computes `F̂(k, p) = (1/M^N) Σ_j F(x_j, p) e^{−ik·x_j}` for `|k|∞ ≤
/// freq_radius`; this equals the integral transform exactly (up to roundoff)
/// whenever the sampled symbol is band-limited to the requested radius.
pub fn analyze(grid: &SymbolGrid, freq_radius: i64) -> Result<SymbolCoefficients, SymbolError> {
    if freq_radius < 0 {
        return Err(LatticeError::NegativeRadius(freq_radius).into());
    }
    let required = 2 * freq_radius as usize + 1;
    if grid.grid_size < required {
        return Err(SymbolError::ResolutionTooSmall {
            grid_size: grid.grid_size,
            freq_radius,
            required,
        });
    }
    let dim = grid.dimension;
    let mut coeffs =
        SymbolCoefficients::new(dim, freq_radius, grid.momentum_box.radius())?;
    let points = grid_point_count(dim, grid.grid_size);
    let scale = 1.0 / points as f64;
    let freq_box = *coeffs.frequency_box();
    let mut digits = vec![0i64; dim];
    for (p_idx, slice) in grid.values.iter().enumerate() {
        let p = grid.momentum_box.mode_at(p_idx);
        for k in freq_box.iter() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (flat, v) in slice.iter().enumerate() {
                grid_digits(dim, grid.grid_size, flat, &mut digits);
                let kj: i64 = k.components().iter().zip(&digits).map(|(a, b)| a * b).sum();
                let angle = -TAU * kj as f64 / grid.grid_size as f64;
                acc += v * unit_phase(angle);
            }
            coeffs.insert(k.clone(), p.clone(), acc * scale)?;
        }
    }
    Ok(coeffs)
}

/// Evaluates the finite Fourier series `Σ_k F̂(k, p) e^{ik·x}` at one point.
pub fn synthesize(
    coeffs: &SymbolCoefficients,
    x: &[f64],
    p: &ModeIndex,
) -> Result<Complex64, SymbolError> {
    if x.len() != coeffs.dimension() {
        return Err(SymbolError::DimensionMismatch {
            expected: coeffs.dimension(),
            got: x.len(),
        });
    }
    if !coeffs.momentum_box.contains(p) {
        return Err(SymbolError::MomentumOutsideBox {
            momentum: p.clone(),
            radius: coeffs.momentum_box.radius(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for ((k, kp), v) in coeffs.iter() {
        if kp == p {
            let angle: f64 =
                k.components().iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
            acc += v * unit_phase(angle);
        }
    }
    Ok(acc)
}

/// Evaluates the series on a whole uniform grid (inverse of [`analyze`]).
pub fn synthesize_grid(
    coeffs: &SymbolCoefficients,
    grid_size: usize,
) -> Result<SymbolGrid, SymbolError> {
    assert!(grid_size >= 1);
    let dim = coeffs.dimension();
    let momentum_box = coeffs.momentum_box;
    let points = grid_point_count(dim, grid_size);
    let mut values = vec![vec![Complex64::new(0.0, 0.0); points]; momentum_box.len()];
    let mut digits = vec![0i64; dim];
    for ((k, p), v) in coeffs.iter() {
        let p_idx = momentum_box.index_of(p).expect("stored momentum inside box");
        let slice = &mut values[p_idx];
        for (flat, slot) in slice.iter_mut().enumerate() {
            grid_digits(dim, grid_size, flat, &mut digits);
            let kj: i64 = k.components().iter().zip(&digits).map(|(a, b)| a * b).sum();
            let angle = TAU * kj as f64 / grid_size as f64;
            *slot += v * unit_phase(angle);
        }
    }
    Ok(SymbolGrid { dimension: dim, grid_size, momentum_box, values })
}

/// The weighted norm `sup (1 + |k|²)^(r/2) |F̂(k, p)|` over stored entries.
pub fn norm_r(coeffs: &SymbolCoefficients, reg: &RegularityIndex) -> f64 {
    debug_assert_eq!(coeffs.dimension(), reg.dimension());
    coeffs
        .iter()
        .map(|((k, _), v)| frequency_weight(k, reg.value()) * v.norm())
        .fold(0.0, f64::max)
}

/// Largest sample modulus on the grid.
pub fn sup_norm(grid: &SymbolGrid) -> f64 {
    grid.values
        .iter()
        .flat_map(|slice| slice.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Sup norm of the symbol with coefficients `(1 + |k|²)^(r/2) F̂(k, p)`,
/// i.e. of `(1 − Δ_x)^(r/2) F` for a band-limited grid.
pub fn sobolev_sup(grid: &SymbolGrid, reg: &RegularityIndex) -> Result<f64, SymbolError> {
    let usable_radius = ((grid.grid_size - 1) / 2) as i64;
    let coeffs = analyze(grid, usable_radius)?;
    let weighted = coeffs.map_entries(|k, _, v| v * frequency_weight(k, reg.value()));
    let back = synthesize_grid(&weighted, grid.grid_size)?;
    Ok(sup_norm(&back))
}

/// Keeps only the `k = 0` coefficients: the position average `F̄(p) = F̂(0, p)`.
pub fn classical_average(coeffs: &SymbolCoefficients) -> SymbolCoefficients {
    coeffs.filter_entries(|k, _| k.norm_sq() == 0)
}

/// Drops all coefficients with `|k|∞ > max_radius`.
pub fn truncate_frequencies(coeffs: &SymbolCoefficients, max_radius: i64) -> SymbolCoefficients {
    coeffs.filter_entries(|k, _| k.sup_norm() <= max_radius)
}

/// Drops all coefficients with `|p|∞ > max_radius`.
pub fn truncate_momenta(coeffs: &SymbolCoefficients, max_radius: i64) -> SymbolCoefficients {
    coeffs.filter_entries(|_, p| p.sup_norm() <= max_radius)
}

/// Two-sided enclosure of a positive series sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Enclosure {
    lower: f64,
    upper: f64,
}

impl Enclosure {
    pub fn lower(self) -> f64 {
        self.lower
    }

    pub fn upper(self) -> f64 {
        self.upper
    }

    pub fn width(self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    fn new() -> Self {
        KahanSum { sum: 0.0, compensation: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }
}

// largest summation box we are willing to enumerate for the lattice constant
const BESSEL_POINT_LIMIT: usize = 40_000_000;

// tail of Σ (1+|k|²)^(−r/2) beyond the box |k|∞ ≤ m: the sup-norm shell at
// radius t has at most 2N·3^(N−1)·t^(N−1) points, each term ≤ t^(−r)
fn bessel_tail_bound(dimension: usize, r: f64, m: f64) -> f64 {
    let n = dimension as f64;
    2.0 * n * 3f64.powi(dimension as i32 - 1) * m.powf(n - r) / (r - n)
}

/// Encloses `C_r = Σ_{k ∈ Z^N} (1 + |k|²)^(−r/2)` within `tail_tol`.
///
/// The lower end is the compensated sum over the smallest box whose analytic
/// tail bound fits in the tolerance; the upper end adds that bound.  Keeping
/// the box minimal keeps the enclosure honest about where the true value sits.
pub fn bessel_constant(
    reg: &RegularityIndex,
    tail_tol: f64,
) -> Result<Enclosure, SymbolError> {
    if !tail_tol.is_finite() || tail_tol <= 0.0 {
        return Err(SymbolError::InvalidTolerance(tail_tol));
    }
    let n = reg.dimension() as f64;
    let r = reg.value();
    let target = 0.9 * tail_tol;
    let prefactor = 2.0 * n * 3f64.powi(reg.dimension() as i32 - 1);
    let radius_real = (prefactor / ((r - n) * target)).powf(1.0 / (r - n));
    let radius = (radius_real.ceil() as i64).max(1);
    let side = 2 * radius + 1;
    let points = (side as u128).pow(reg.dimension() as u32);
    if points > BESSEL_POINT_LIMIT as u128 {
        return Err(SymbolError::TailToleranceTooTight {
            tol: tail_tol,
            radius,
            limit: ((BESSEL_POINT_LIMIT as f64).powf(1.0 / n) as i64 - 1) / 2,
        });
    }
    let summation_box =
        ModeBox::new(reg.dimension(), radius).expect("radius is positive");
    let mut acc = KahanSum::new();
    let exponent = -r / 2.0;
    summation_box.for_each(|components| {
        let nsq: i64 = components.iter().map(|c| c * c).sum();
        acc.add((1.0 + nsq as f64).powf(exponent));
    });
    let sum = acc.sum;
    let fp_slack = 16.0 * f64::EPSILON * sum;
    let tail = bessel_tail_bound(reg.dimension(), r, radius as f64);
    Ok(Enclosure { lower: (sum - fp_slack).max(0.0), upper: sum + fp_slack + tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m1(k: i64) -> ModeIndex {
        ModeIndex::new(vec![k])
    }

    #[test]
    fn analyze_constant_symbol() {
        let grid = SymbolGrid::sample(1, 5, 2, |_, _| c(1.0, 0.0)).unwrap();
        let coeffs = analyze(&grid, 2).unwrap();
        for p in -2..=2 {
            assert_relative_eq!(coeffs.get(&m1(0), &m1(p)).re, 1.0, epsilon = 1e-14);
            for k in [-2i64, -1, 1, 2] {
                assert!(coeffs.get(&m1(k), &m1(p)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn analyze_single_harmonic_with_profile() {
        let g = |p: &ModeIndex| (-(p.norm_sq() as f64)).exp();
        let grid = SymbolGrid::sample(1, 7, 3, |x, p| {
            c(0.0, x[0]).exp() * g(p)
        })
        .unwrap();
        let coeffs = analyze(&grid, 3).unwrap();
        for p in -3..=3i64 {
            let expected = g(&m1(p));
            assert_relative_eq!(coeffs.get(&m1(1), &m1(p)).re, expected, epsilon = 1e-13);
            assert!(coeffs.get(&m1(2), &m1(p)).norm() < 1e-13);
            assert!(coeffs.get(&m1(0), &m1(p)).norm() < 1e-13);
        }
    }

    #[test]
    fn analyze_cosine() {
        let grid = SymbolGrid::sample(1, 5, 1, |x, _| c(x[0].cos(), 0.0)).unwrap();
        let coeffs = analyze(&grid, 2).unwrap();
        assert_relative_eq!(coeffs.get(&m1(1), &m1(0)).re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(coeffs.get(&m1(-1), &m1(0)).re, 0.5, epsilon = 1e-14);
        assert!(coeffs.get(&m1(2), &m1(0)).norm() < 1e-14);
    }

    #[test]
    fn analyze_rejects_too_coarse_grid() {
        let grid = SymbolGrid::sample(1, 4, 1, |_, _| c(1.0, 0.0)).unwrap();
        let err = analyze(&grid, 2).unwrap_err();
        assert!(matches!(err, SymbolError::ResolutionTooSmall { required: 5, .. }));
    }

    #[test]
    fn synthesize_point_values() {
        let mut coeffs = SymbolCoefficients::new(1, 1, 1).unwrap();
        coeffs.insert(m1(0), m1(0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(synthesize(&coeffs, &[2.1], &m1(0)).unwrap().re, 1.0);

        let mut raising = SymbolCoefficients::new(1, 1, 1).unwrap();
        raising.insert(m1(1), m1(1), c(1.0, 0.0)).unwrap();
        let v = synthesize(&raising, &[PI], &m1(1)).unwrap();
        assert_relative_eq!(v.re, -1.0, epsilon = 1e-15);
        assert!(v.im.abs() < 1e-15);

        let mut cosine = SymbolCoefficients::new(1, 1, 0).unwrap();
        cosine.insert(m1(1), m1(0), c(0.5, 0.0)).unwrap();
        cosine.insert(m1(-1), m1(0), c(0.5, 0.0)).unwrap();
        assert_relative_eq!(synthesize(&cosine, &[0.0], &m1(0)).unwrap().re, 1.0);
    }

    #[test]
    fn synthesize_rejects_momentum_outside_box() {
        let coeffs = SymbolCoefficients::new(1, 1, 1).unwrap();
        assert!(matches!(
            synthesize(&coeffs, &[0.0], &m1(2)),
            Err(SymbolError::MomentumOutsideBox { .. })
        ));
    }

    #[test]
    fn analyze_synthesize_roundtrip() {
        let mut coeffs = SymbolCoefficients::new(2, 1, 1).unwrap();
        let kbox = ModeBox::new(2, 1).unwrap();
        let mut phase = 0.3f64;
        for k in kbox.iter() {
            for p in kbox.iter() {
                phase += 0.7;
                coeffs.insert(k.clone(), p, c(phase.cos(), phase.sin() * 0.5)).unwrap();
            }
        }
        let grid = synthesize_grid(&coeffs, 3).unwrap();
        let back = analyze(&grid, 1).unwrap();
        let diff = coeffs.sub(&back).unwrap();
        assert!(diff.max_abs() < 1e-13);
    }

    #[test]
    fn norm_r_examples() {
        let r2 = RegularityIndex::new(2.0, 1).unwrap();
        let mut constant = SymbolCoefficients::new(1, 0, 2).unwrap();
        for p in -2..=2 {
            constant.insert(m1(0), m1(p), c(1.0, 0.0)).unwrap();
        }
        assert_relative_eq!(norm_r(&constant, &r2), 1.0);

        let mut harmonic = SymbolCoefficients::new(1, 1, 0).unwrap();
        harmonic.insert(m1(1), m1(0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(norm_r(&harmonic, &r2), 2.0);

        let r3 = RegularityIndex::new(3.0, 2).unwrap();
        let mut plane = SymbolCoefficients::new(2, 2, 0).unwrap();
        plane
            .insert(ModeIndex::new(vec![2, 0]), ModeIndex::new(vec![0, 0]), c(1.0, 0.0))
            .unwrap();
        assert_relative_eq!(norm_r(&plane, &r3), 5f64.powf(1.5), epsilon = 1e-12);
        assert_relative_eq!(norm_r(&plane, &r3), 11.180339887498949, epsilon = 1e-12);
    }

    #[test]
    fn regularity_must_exceed_dimension() {
        assert!(RegularityIndex::new(1.0, 1).is_err());
        assert!(RegularityIndex::new(2.0, 2).is_err());
        assert!(RegularityIndex::new(f64::NAN, 1).is_err());
        assert!(RegularityIndex::new(2.5, 2).is_ok());
    }

    #[test]
    fn bessel_constant_dimension_one() {
        let reg = RegularityIndex::new(2.0, 1).unwrap();
        let enc = bessel_constant(&reg, 1e-6).unwrap();
        // closed form of Σ 1/(1+k²) over Z
        let truth = PI / PI.tanh();
        assert!(enc.contains(truth), "enclosure [{}, {}] misses {}", enc.lower(), enc.upper(), truth);
        assert!(enc.contains(3.153348));
        assert!(enc.width() <= 1e-6);
    }

    #[test]
    fn bessel_constant_r4_lower_bound() {
        let reg = RegularityIndex::new(4.0, 1).unwrap();
        let enc = bessel_constant(&reg, 1e-6).unwrap();
        assert!(enc.lower() >= 1.0);
        assert!(enc.width() <= 1e-6);
    }

    #[test]
    fn bessel_constant_dimension_two() {
        let reg = RegularityIndex::new(3.0, 2).unwrap();
        let enc = bessel_constant(&reg, 1e-2).unwrap();
        assert!(enc.lower() > 1.0);
        assert!(enc.upper().is_finite());
        assert!(enc.width() <= 1e-2);
    }

    #[test]
    fn bessel_constant_rejects_hopeless_tolerance() {
        let reg = RegularityIndex::new(2.0, 1).unwrap();
        assert!(matches!(
            bessel_constant(&reg, 1e-12),
            Err(SymbolError::TailToleranceTooTight { .. })
        ));
        assert!(matches!(bessel_constant(&reg, 0.0), Err(SymbolError::InvalidTolerance(_))));
    }

    #[test]
    fn sup_and_sobolev_norms() {
        let r2 = RegularityIndex::new(2.0, 1).unwrap();

        let constant = SymbolGrid::sample(1, 5, 1, |_, _| c(1.0, 0.0)).unwrap();
        assert_relative_eq!(sup_norm(&constant), 1.0);
        assert_relative_eq!(sobolev_sup(&constant, &r2).unwrap(), 1.0, epsilon = 1e-13);

        let harmonic = SymbolGrid::sample(1, 5, 1, |x, _| c(0.0, x[0]).exp()).unwrap();
        assert_relative_eq!(sup_norm(&harmonic), 1.0, epsilon = 1e-15);
        assert_relative_eq!(sobolev_sup(&harmonic, &r2).unwrap(), 2.0, epsilon = 1e-13);

        let cosine = SymbolGrid::sample(1, 5, 1, |x, _| c(x[0].cos(), 0.0)).unwrap();
        assert_relative_eq!(sobolev_sup(&cosine, &r2).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn classical_average_and_truncation() {
        let terms = vec![
            SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            },
            SymbolTerm::Harmonic {
                frequency: vec![1],
                profile: MomentumProfile::Constant { amplitude: 0.5 },
            },
            SymbolTerm::Harmonic {
                frequency: vec![-1],
                profile: MomentumProfile::Constant { amplitude: 0.5 },
            },
        ];
        let coeffs = build_symbol(1, 2, 2, &terms).unwrap();

        let avg = classical_average(&coeffs);
        for p in -2..=2 {
            assert_relative_eq!(avg.get(&m1(0), &m1(p)).re, 1.0);
        }
        assert_eq!(avg.active_frequencies(), vec![m1(0)]);

        assert_eq!(truncate_frequencies(&coeffs, 2), coeffs);
        assert_eq!(truncate_frequencies(&coeffs, 0), avg);

        let mut cosine = SymbolCoefficients::new(1, 1, 0).unwrap();
        cosine.insert(m1(1), m1(0), c(0.5, 0.0)).unwrap();
        cosine.insert(m1(-1), m1(0), c(0.5, 0.0)).unwrap();
        assert_eq!(truncate_frequencies(&cosine, 0).support_len(), 0);
    }

    #[test]
    fn truncation_never_increases_norm() {
        let r2 = RegularityIndex::new(2.0, 1).unwrap();
        let terms = vec![
            SymbolTerm::Harmonic {
                frequency: vec![2],
                profile: MomentumProfile::Gaussian { width: 2.0, amplitude: 1.3 },
            },
            SymbolTerm::Harmonic {
                frequency: vec![1],
                profile: MomentumProfile::InversePower { exponent: 2.0, amplitude: 0.8 },
            },
        ];
        let coeffs = build_symbol(1, 2, 3, &terms).unwrap();
        let full = norm_r(&coeffs, &r2);
        for l in 0..=2 {
            assert!(norm_r(&truncate_frequencies(&coeffs, l), &r2) <= full);
        }
    }

    #[test]
    fn coefficients_bounded_by_sup_of_samples() {
        // |F̂(k,p)| ≤ sup_x |F(x,p)| for the discrete transform as well
        let grid = SymbolGrid::sample(1, 7, 2, |x, p| {
            c(x[0].cos() + 0.3 * (2.0 * x[0]).sin(), 0.1 * p.norm_sq() as f64)
        })
        .unwrap();
        let coeffs = analyze(&grid, 3).unwrap();
        let sup = sup_norm(&grid);
        for (_, v) in coeffs.iter() {
            assert!(v.norm() <= sup + 1e-12);
        }
    }

    #[test]
    fn build_symbol_profiles() {
        let ball = build_symbol(
            1,
            0,
            3,
            &[SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::Ball { radius: 2, amplitude: 2.0 },
            }],
        )
        .unwrap();
        assert_relative_eq!(ball.get(&m1(0), &m1(2)).re, 2.0);
        assert_eq!(ball.get(&m1(0), &m1(3)).norm(), 0.0);
        assert_eq!(ball.support_len(), 5);

        let decay = build_symbol(
            1,
            0,
            2,
            &[SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::InversePower { exponent: 2.0, amplitude: 1.0 },
            }],
        )
        .unwrap();
        assert_relative_eq!(decay.get(&m1(0), &m1(2)).re, 0.2);

        let table = build_symbol(
            1,
            1,
            1,
            &[SymbolTerm::Table {
                table: vec![TableEntry { frequency: vec![1], momentum: vec![-1], re: 0.5, im: -0.25 }],
            }],
        )
        .unwrap();
        assert_eq!(table.get(&m1(1), &m1(-1)), c(0.5, -0.25));
    }

    #[test]
    fn build_symbol_rejects_bad_terms() {
        let outside = build_symbol(
            1,
            1,
            1,
            &[SymbolTerm::Harmonic {
                frequency: vec![2],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            }],
        );
        assert!(matches!(outside, Err(SymbolError::FrequencyOutsideBox { .. })));

        let bad_width = build_symbol(
            1,
            1,
            1,
            &[SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::Gaussian { width: 0.0, amplitude: 1.0 },
            }],
        );
        assert!(matches!(bad_width, Err(SymbolError::InvalidProfile { .. })));

        let wrong_dim = build_symbol(
            2,
            1,
            1,
            &[SymbolTerm::Harmonic {
                frequency: vec![1],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            }],
        );
        assert!(matches!(wrong_dim, Err(SymbolError::DimensionMismatch { .. })));
    }

    #[test]
    fn combine_tables() {
        let mut a = SymbolCoefficients::new(1, 1, 1).unwrap();
        a.insert(m1(0), m1(0), c(1.0, 0.0)).unwrap();
        let mut b = SymbolCoefficients::new(1, 1, 1).unwrap();
        b.insert(m1(0), m1(0), c(0.25, 0.0)).unwrap();
        b.insert(m1(1), m1(1), c(0.0, 1.0)).unwrap();

        let sum = a.add(&b).unwrap();
        assert_eq!(sum.get(&m1(0), &m1(0)), c(1.25, 0.0));
        assert_eq!(sum.get(&m1(1), &m1(1)), c(0.0, 1.0));

        let diff = sum.sub(&b).unwrap();
        assert_eq!(diff.get(&m1(0), &m1(0)), c(1.0, 0.0));
        assert_eq!(diff.get(&m1(1), &m1(1)), c(0.0, 0.0));

        let other_shape = SymbolCoefficients::new(1, 2, 1).unwrap();
        assert!(matches!(a.add(&other_shape), Err(SymbolError::ShapeMismatch)));
    }

    #[test]
    fn insert_validates() {
        let mut coeffs = SymbolCoefficients::new(1, 1, 1).unwrap();
        assert!(matches!(
            coeffs.insert(m1(2), m1(0), c(1.0, 0.0)),
            Err(SymbolError::FrequencyOutsideBox { .. })
        ));
        assert!(matches!(
            coeffs.insert(m1(0), m1(0), c(f64::NAN, 0.0)),
            Err(SymbolError::NonFiniteCoefficient { .. })
        ));
    }
}
