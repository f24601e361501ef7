//! The free Schrödinger flow on symbols and its time averages.
//!
//! Conjugation by `e^{itH}` with `H = −Δ/2` acts on partial Fourier
//! coefficients as a pure phase: `F̂_t(k, p) = e^{it(|k|²/2 + k·p)} F̂(k, p)`.
//! Averaging over `[0, T]` therefore has a closed form per entry, and the
//! infinite-time limit keeps exactly the resonant entries `k·p + |k|²/2 = 0`.
//! The non-resonant phase `k·p + |k|²/2` is always a half-integer, so every
//! dropped entry decays at least like `4/T`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{is_resonant, ModeIndex};
use crate::operators::OperatorMatrix;
use crate::symbols::{norm_r, RegularityIndex, SymbolCoefficients};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("time parameter must be finite, got {0}")]
    NonFiniteTime(f64),
    #[error("averaging horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
}

/// A validated (finite) time value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeParameter(f64);

impl TimeParameter {
    pub fn new(t: f64) -> Result<Self, DynamicsError> {
        if !t.is_finite() {
            return Err(DynamicsError::NonFiniteTime(t));
        }
        Ok(TimeParameter(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

// phases are reduced modulo 2π before exponentiation so large t·θ products
// do not lose accuracy
fn unit_phase(angle: f64) -> Complex64 {
    let reduced = angle.rem_euclid(TAU);
    Complex64::new(reduced.cos(), reduced.sin())
}

// |k|²/2 + k·p as an exactly halved integer
fn flow_phase(k: &ModeIndex, p: &ModeIndex) -> f64 {
    (k.norm_sq() + 2 * k.dot(p)) as f64 * 0.5
}

/// Conjugated symbol at time `t`: entrywise phase `e^{it(|k|²/2 + k·p)}`.
pub fn evolve_symbol(coeffs: &SymbolCoefficients, t: TimeParameter) -> SymbolCoefficients {
    coeffs.map_entries(|k, p, v| v * unit_phase(t.value() * flow_phase(k, p)))
}

/// Geodesic-flow part only: the argument shift `x → x + tp`, i.e. the phase
/// `e^{it·k·p}` with no dispersive term.
pub fn classical_flow_symbol(
    coeffs: &SymbolCoefficients,
    t: TimeParameter,
) -> SymbolCoefficients {
    coeffs.map_entries(|k, p, v| v * unit_phase(t.value() * k.dot(p) as f64))
}

/// Dispersive part only: the phase `e^{it|k|²/2}`.  Composing it with the
/// classical flow reproduces [`evolve_symbol`].
pub fn quantum_correction(coeffs: &SymbolCoefficients, t: TimeParameter) -> SymbolCoefficients {
    coeffs.map_entries(|k, _, v| v * unit_phase(t.value() * k.norm_sq() as f64 * 0.5))
}

/// Conjugates a quantized operator: entry `(k, m)` picks up the phase
/// `e^{it(|k|² − |m|²)/2}`.
///
/// For matrices built by quantization this equals quantizing the evolved
/// symbol, because `(|k|² − |m|²)/2 = |k − m|²/2 + (k − m)·m` holds exactly
/// in integers.
pub fn conjugate_operator(op: &OperatorMatrix, t: TimeParameter) -> OperatorMatrix {
    op.map_entries(|k, m, v| {
        let angle = t.value() * ((k.norm_sq() - m.norm_sq()) as f64 * 0.5);
        v * unit_phase(angle)
    })
}

/// Mean of the conjugated symbol over `[0, T]`, in closed form.
///
/// Resonant entries are fixed points of the flow and pass through unchanged;
/// a non-resonant entry with phase speed `θ` is multiplied by
/// `(e^{iTθ} − 1)/(iTθ) = e^{iTθ/2}·sinc(Tθ/2)`.  No time quadrature is
/// involved.
pub fn finite_time_average(
    coeffs: &SymbolCoefficients,
    horizon: TimeParameter,
) -> Result<SymbolCoefficients, DynamicsError> {
    let t = horizon.value();
    if t <= 0.0 {
        return Err(DynamicsError::NonPositiveHorizon(t));
    }
    Ok(coeffs.map_entries(|k, p, v| {
        if is_resonant(k, p) {
            v
        } else {
            let half = 0.5 * t * flow_phase(k, p);
            let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
            v * unit_phase(half) * sinc
        }
    }))
}

/// Infinite-time average: keeps exactly the resonant entries, decided in
/// integer arithmetic.  Idempotent.
pub fn ergodic_average(coeffs: &SymbolCoefficients) -> SymbolCoefficients {
    coeffs.filter_entries(is_resonant)
}

/// Distance from the finite-time average to its limit, with the proven decay
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragingReport {
    pub horizon: f64,
    pub defect: f64,
    pub bound: f64,
}

impl AveragingReport {
    pub fn satisfies_bound(&self) -> bool {
        self.defect <= self.bound
    }
}

/// Measures `‖avg_T(F) − <F>‖_r` against the bound `4‖F‖_r/T`.
///
/// The bound comes from `|e^{iTθ} − 1| ≤ 2` and the non-resonant spectral gap
/// `|θ| ≥ 1/2`.
pub fn averaging_defect(
    coeffs: &SymbolCoefficients,
    reg: &RegularityIndex,
    horizon: TimeParameter,
) -> Result<AveragingReport, DynamicsError> {
    let averaged = finite_time_average(coeffs, horizon)?;
    let limit = ergodic_average(coeffs);
    let difference = averaged
        .sub(&limit)
        .expect("averages share the source boxes");
    let defect = norm_r(&difference, reg);
    let bound = 4.0 * norm_r(coeffs, reg) / horizon.value();
    Ok(AveragingReport { horizon: horizon.value(), defect, bound })
}
