//! High-energy diagnostics: shell averages, negligibility scans, and the
//! structure of infinite-time averages.
//!
//! The state `τ_E` averages `‖a φ_n‖²` over the eigenmodes with `|n|²/2 ≤ E`;
//! an operator is negligible in the high-energy limit when this tends to 0.
//! The infinite-time average of a quantized symbol splits as the diagonal
//! quantization of the position average plus a remainder supported on
//! resonant off-diagonal entries; the scans here measure how fast that
//! remainder fades as the energy window grows.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{count_states, enumerate_energy_shell, EnergyCutoff};
use crate::operators::{
    adjoint, apply, compose, compress, operator_norm, quantize, rank_relative, OperatorError,
    OperatorMatrix, StateVector,
};
use crate::symbols::{classical_average, SymbolCoefficients};
use crate::dynamics::ergodic_average;

#[derive(Debug, Error)]
pub enum SemiclassicalError {
    #[error(
        "energy shell needs modes up to radius {required_radius}, but the operator input box \
         has radius {box_radius}"
    )]
    ShellNotCovered { required_radius: i64, box_radius: i64 },
    #[error("energy grid is empty")]
    EmptyEnergyGrid,
    #[error("energy grid must be strictly increasing")]
    EnergyGridNotIncreasing,
    #[error("rank certificates are defined for dimension 1, got {dimension}")]
    DimensionNotOne { dimension: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Mean squared action on the energy shell:
/// `(1/N(E)) Σ_{|n|²/2 ≤ E} ‖op φ_n‖²`.
///
/// This is the shell average of `op*op`; feeding it `a` directly avoids
/// materializing the product.  The input box must cover the whole shell,
/// otherwise the sum would silently truncate and fake decay.
pub fn tau_e(op: &OperatorMatrix, cutoff: EnergyCutoff) -> Result<f64, SemiclassicalError> {
    let required = cutoff.shell_radius();
    if op.input_box().radius() < required {
        return Err(SemiclassicalError::ShellNotCovered {
            required_radius: required,
            box_radius: op.input_box().radius(),
        });
    }
    let shell = enumerate_energy_shell(cutoff, op.dimension());
    let mut sum = 0.0;
    for n in &shell {
        let image = apply(op, &StateVector::basis(n)).expect("shell mode inside input box");
        sum += image.norm_sq();
    }
    Ok(sum / shell.len() as f64)
}

/// Sampled `(E, value)` pairs with a least-squares slope of
/// `log value` against `log E`.
///
/// Only samples with positive energy and positive value enter the fit; the
/// standard error needs at least three such points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
}

impl DecayCurve {
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Self {
        let points: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(e, v)| *e > 0.0 && *v > 0.0)
            .map(|(e, v)| (e.ln(), v.ln()))
            .collect();
        let (fitted_slope, slope_stderr) = fit_line(&points);
        DecayCurve { samples, fitted_slope, slope_stderr }
    }

    /// Two-column plot data with a trailing fit summary comment.
    pub fn write_table(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# energy value")?;
        for (e, v) in &self.samples {
            writeln!(w, "{e} {v}")?;
        }
        match (self.fitted_slope, self.slope_stderr) {
            (Some(slope), Some(err)) => writeln!(w, "# fit slope={slope} stderr={err}"),
            (Some(slope), None) => writeln!(w, "# fit slope={slope} stderr=n/a"),
            _ => writeln!(w, "# fit unavailable (fewer than two usable samples)"),
        }
    }
}

fn fit_line(points: &[(f64, f64)]) -> (Option<f64>, Option<f64>) {
    let n = points.len();
    if n < 2 {
        return (None, None);
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx == 0.0 {
        return (None, None);
    }
    let slope = sxy / sxx;
    if n < 3 {
        return (Some(slope), None);
    }
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let stderr = (ss_res / ((nf - 2.0) * sxx)).sqrt();
    (Some(slope), Some(stderr))
}

/// Scans `τ_E` over an increasing energy grid and fits the decay exponent.
pub fn sn_scan(
    op: &OperatorMatrix,
    energies: &[EnergyCutoff],
) -> Result<DecayCurve, SemiclassicalError> {
    if energies.is_empty() {
        return Err(SemiclassicalError::EmptyEnergyGrid);
    }
    if energies.windows(2).any(|w| w[1].value() <= w[0].value()) {
        return Err(SemiclassicalError::EnergyGridNotIncreasing);
    }
    let mut samples = Vec::with_capacity(energies.len());
    for cutoff in energies {
        samples.push((cutoff.value(), tau_e(op, *cutoff)?));
    }
    Ok(DecayCurve::from_samples(samples))
}

/// The infinite-time average split into its diagonal (classical) part and
/// the purely off-diagonal remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageDecomposition {
    pub classical_part: OperatorMatrix,
    pub remainder: OperatorMatrix,
}

impl AverageDecomposition {
    /// `classical_part + remainder`, which equals the quantized average.
    pub fn reassemble(&self) -> OperatorMatrix {
        self.classical_part
            .add(&self.remainder)
            .expect("decomposition parts share boxes")
    }
}

/// Splits `quantize(<F>)` as `quantize(F̄) + remainder`.
///
/// The classical part quantizes the position average `F̄(p) = F̂(0, p)` and is
/// diagonal; the remainder carries the resonant entries with `k ≠ 0` and has
/// an exactly zero diagonal, since the diagonal of the average is precisely
/// the classical part.
pub fn decompose_average(coeffs: &SymbolCoefficients) -> AverageDecomposition {
    let classical_part = quantize(&classical_average(coeffs));
    let averaged = quantize(&ergodic_average(coeffs));
    let remainder = averaged
        .sub(&classical_part)
        .expect("quantizations over one symbol share boxes");
    AverageDecomposition { classical_part, remainder }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdealCheckRow {
    pub energy: f64,
    pub sum_lhs: f64,
    pub sum_rhs: f64,
    pub sum_ok: bool,
    pub product_lhs: f64,
    pub product_rhs: f64,
    pub product_ok: bool,
}

/// Outcome of the two ideal inequalities over an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealCheckReport {
    pub b_norm: f64,
    pub output_truncated: bool,
    pub rows: Vec<IdealCheckRow>,
}

impl IdealCheckReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.sum_ok && r.product_ok)
    }
}

// comparisons allow for roundoff at equality cases
fn leq_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + 1e-12) + 1e-15
}

/// Verifies, at each grid energy, the two inequalities that make negligible
/// operators a left ideal:
/// `τ_E((a+b)*(a+b)) ≤ 2τ_E(a*a) + 2τ_E(b*b)` and
/// `τ_E((ba)*(ba)) ≤ ‖b‖² τ_E(a*a)`.
///
/// When `a`'s output box is wider than `b`'s input box, `a` is compressed
/// first; the zero-extended product only lowers the left side, so the second
/// inequality stays sound.  The truncation is flagged in the report.
pub fn sn_ideal_checks(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    energies: &[EnergyCutoff],
    norm_tol: f64,
    norm_max_iter: usize,
) -> Result<IdealCheckReport, SemiclassicalError> {
    let sum = a.add(b)?;
    let b_norm = operator_norm(b, norm_tol, norm_max_iter)?;
    let output_truncated = !b.input_box().contains_box(a.output_box());
    let ba = if output_truncated {
        compose(b, &compress(a, *b.input_box())?)?
    } else {
        compose(b, a)?
    };
    let mut rows = Vec::with_capacity(energies.len());
    for cutoff in energies {
        let tau_a = tau_e(a, *cutoff)?;
        let tau_b = tau_e(b, *cutoff)?;
        let sum_lhs = tau_e(&sum, *cutoff)?;
        let sum_rhs = 2.0 * (tau_a + tau_b);
        let product_lhs = tau_e(&ba, *cutoff)?;
        let product_rhs = b_norm * b_norm * tau_a;
        rows.push(IdealCheckRow {
            energy: cutoff.value(),
            sum_lhs,
            sum_rhs,
            sum_ok: leq_with_slack(sum_lhs, sum_rhs),
            product_lhs,
            product_rhs,
            product_ok: leq_with_slack(product_lhs, product_rhs),
        });
    }
    Ok(IdealCheckReport { b_norm, output_truncated, rows })
}

/// Rank verdict for one frequency of a dimension-1 symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyRank {
    pub frequency: i64,
    /// The unique solution `p = −k/2` when the frequency is even.
    pub resonant_momentum: Option<i64>,
    pub rank: usize,
    pub max_rank: usize,
    pub ok: bool,
}

/// Finite-rank certificate for the averaged operator in dimension 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCertificate {
    pub rows: Vec<FrequencyRank>,
    pub remainder_rank: usize,
    pub even_frequency_count: usize,
    pub ok: bool,
}

/// Certifies that in dimension 1 each averaged frequency contributes rank 0
/// (odd `k`: the resonance `kp + k²/2 = 0` has no integer solution) or at
/// most 1 (even `k`: the single momentum `p = −k/2`), and that the full
/// off-diagonal remainder has rank at most the number of active even
/// frequencies.
pub fn n1_rank_certificate(
    coeffs: &SymbolCoefficients,
) -> Result<RankCertificate, SemiclassicalError> {
    n1_rank_certificate_with(coeffs, 1e-10)
}

/// Same certificate with an explicit relative rank tolerance.
pub fn n1_rank_certificate_with(
    coeffs: &SymbolCoefficients,
    rank_tol: f64,
) -> Result<RankCertificate, SemiclassicalError> {
    if coeffs.dimension() != 1 {
        return Err(SemiclassicalError::DimensionNotOne { dimension: coeffs.dimension() });
    }
    let mut rows = Vec::new();
    let mut even_frequency_count = 0usize;
    for k in coeffs.active_frequencies() {
        let freq = k.components()[0];
        if freq == 0 {
            continue;
        }
        let even = freq % 2 == 0;
        let single = coeffs.filter_entries(|key, _| *key == k);
        let averaged = quantize(&ergodic_average(&single));
        let rank = rank_relative(&averaged, rank_tol)?;
        let max_rank = if even { 1 } else { 0 };
        if even {
            even_frequency_count += 1;
        }
        rows.push(FrequencyRank {
            frequency: freq,
            resonant_momentum: even.then_some(-freq / 2),
            rank,
            max_rank,
            ok: rank <= max_rank,
        });
    }
    let remainder_rank = rank_relative(&decompose_average(coeffs).remainder, rank_tol)?;
    let ok = rows.iter().all(|r| r.ok) && remainder_rank <= even_frequency_count;
    Ok(RankCertificate { rows, remainder_rank, even_frequency_count, ok })
}

/// Shell average of the conjugated product, `τ_E(a*a)` materialized
/// explicitly.  Matches [`tau_e`] and exists mainly as a cross-check.
pub fn tau_e_product(
    op: &OperatorMatrix,
    cutoff: EnergyCutoff,
) -> Result<f64, SemiclassicalError> {
    let gram = compose(&adjoint(op), op)?;
    let shell = enumerate_energy_shell(cutoff, op.dimension());
    let required = cutoff.shell_radius();
    if op.input_box().radius() < required {
        return Err(SemiclassicalError::ShellNotCovered {
            required_radius: required,
            box_radius: op.input_box().radius(),
        });
    }
    let mut sum = 0.0;
    for n in &shell {
        let phi = StateVector::basis(n);
        let image = apply(&gram, &phi).expect("shell mode inside input box");
        sum += phi.inner(&image).re;
    }
    Ok(sum / count_states(cutoff, op.dimension()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ModeBox, ModeIndex};
    use crate::operators::rank_default;
    use crate::symbols::{build_symbol, MomentumProfile, SymbolTerm};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn e(v: f64) -> EnergyCutoff {
        EnergyCutoff::new(v).unwrap()
    }

    fn m1(k: i64) -> ModeIndex {
        ModeIndex::new(vec![k])
    }

    fn harmonic_times_one(freq: i64, momentum_radius: i64) -> SymbolCoefficients {
        build_symbol(
            1,
            freq.abs(),
            momentum_radius,
            &[SymbolTerm::Harmonic {
                frequency: vec![freq],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            }],
        )
        .unwrap()
    }

    #[test]
    fn tau_of_zero_and_identity() {
        let box8 = ModeBox::new(1, 8).unwrap();
        let zero = OperatorMatrix::zero(box8, box8).unwrap();
        let id = OperatorMatrix::identity(box8);
        for energy in [0.0, 2.0, 30.0] {
            assert_eq!(tau_e(&zero, e(energy)).unwrap(), 0.0);
            assert_eq!(tau_e(&id, e(energy)).unwrap(), 1.0);
        }
    }

    #[test]
    fn tau_of_single_resonant_entry() {
        // averaged e^{2ix}·1 keeps only (k, p) = (2, −1); one shell state hits it
        let averaged = ergodic_average(&harmonic_times_one(2, 5));
        let op = quantize(&averaged);
        assert_relative_eq!(tau_e(&op, e(2.0)).unwrap(), 0.2);
        let n300 = count_states(e(300.0), 1) as f64;
        let wide = quantize(&ergodic_average(&harmonic_times_one(2, 24)));
        assert_eq!(tau_e(&wide, e(300.0)).unwrap(), 1.0 / n300);
    }

    #[test]
    fn tau_requires_shell_coverage() {
        let small = quantize(&harmonic_times_one(2, 3));
        let err = tau_e(&small, e(300.0)).unwrap_err();
        match err {
            SemiclassicalError::ShellNotCovered { required_radius, box_radius } => {
                assert_eq!(required_radius, 24);
                assert_eq!(box_radius, 3);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn tau_agrees_with_materialized_product() {
        let op = quantize(&harmonic_times_one(1, 6));
        for energy in [1.0, 8.0, 18.0] {
            let direct = tau_e(&op, e(energy)).unwrap();
            let via_product = tau_e_product(&op, e(energy)).unwrap();
            assert_relative_eq!(direct, via_product, epsilon = 1e-13);
        }
    }

    #[test]
    fn scan_of_identity_is_flat() {
        let id = OperatorMatrix::identity(ModeBox::new(1, 10).unwrap());
        let grid = [e(1.0), e(4.0), e(16.0), e(50.0)];
        let curve = sn_scan(&id, &grid).unwrap();
        assert_eq!(curve.samples.len(), 4);
        for (_, v) in &curve.samples {
            assert_eq!(*v, 1.0);
        }
        assert_relative_eq!(curve.fitted_slope.unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn scan_of_averaged_harmonic_tracks_state_count() {
        let op = quantize(&ergodic_average(&harmonic_times_one(2, 8)));
        let grid = [e(4.6875), e(9.375), e(18.75), e(37.5)];
        let curve = sn_scan(&op, &grid).unwrap();
        for ((energy, value), cutoff) in curve.samples.iter().zip(&grid) {
            assert_eq!(*energy, cutoff.value());
            assert_eq!(*value, 1.0 / count_states(*cutoff, 1) as f64);
        }
        let slope = curve.fitted_slope.unwrap();
        assert!((-0.65..=-0.35).contains(&slope), "slope {slope} outside window");
        assert!(curve.slope_stderr.unwrap() < 0.1);
    }

    #[test]
    fn scan_validates_grid() {
        let id = OperatorMatrix::identity(ModeBox::new(1, 5).unwrap());
        assert!(matches!(sn_scan(&id, &[]), Err(SemiclassicalError::EmptyEnergyGrid)));
        assert!(matches!(
            sn_scan(&id, &[e(4.0), e(4.0)]),
            Err(SemiclassicalError::EnergyGridNotIncreasing)
        ));
    }

    #[test]
    fn fit_recovers_power_law() {
        let samples: Vec<(f64, f64)> =
            (0..6).map(|j| {
                let energy = 3.0 * 2f64.powi(j);
                (energy, 2.5 * energy.powf(-0.5))
            })
            .collect();
        let curve = DecayCurve::from_samples(samples);
        assert_relative_eq!(curve.fitted_slope.unwrap(), -0.5, epsilon = 1e-12);
        assert!(curve.slope_stderr.unwrap() < 1e-12);
    }

    #[test]
    fn fit_skips_nonpositive_values() {
        let curve = DecayCurve::from_samples(vec![(1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(curve.fitted_slope, None);
        assert_eq!(curve.slope_stderr, None);
    }

    #[test]
    fn curve_table_output() {
        let curve = DecayCurve::from_samples(vec![(1.0, 0.5), (4.0, 0.25)]);
        let mut buf = Vec::new();
        curve.write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# energy value\n1 0.5\n4 0.25\n# fit slope=-0.5 stderr=n/a\n");
    }

    #[test]
    fn decomposition_of_diagonal_symbol_has_zero_remainder() {
        let diagonal = build_symbol(
            1,
            0,
            4,
            &[SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::Gaussian { width: 5.0, amplitude: 2.0 },
            }],
        )
        .unwrap();
        let parts = decompose_average(&diagonal);
        let mut max = 0.0f64;
        parts.remainder.for_each_entry(|_, _, v| max = max.max(v.norm()));
        assert_eq!(max, 0.0);
        assert_eq!(parts.reassemble(), quantize(&ergodic_average(&diagonal)));
    }

    #[test]
    fn decomposition_of_even_harmonic() {
        let g = build_symbol(
            1,
            2,
            4,
            &[SymbolTerm::Harmonic {
                frequency: vec![2],
                profile: MomentumProfile::Gaussian { width: 2.0, amplitude: 1.0 },
            }],
        )
        .unwrap();
        let parts = decompose_average(&g);
        assert_eq!(parts.classical_part.entry_count(), 0);
        let expected = (-(1.0f64) / 2.0).exp();
        assert_relative_eq!(parts.remainder.entry(&m1(1), &m1(-1)).re, expected);
        let nonzero: usize = {
            let mut count = 0;
            parts.remainder.for_each_entry(|_, _, v| {
                if v.norm() > 0.0 {
                    count += 1;
                }
            });
            count
        };
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn decomposition_sum_and_zero_diagonal() {
        let mixed = build_symbol(
            1,
            3,
            5,
            &[
                SymbolTerm::Harmonic {
                    frequency: vec![0],
                    profile: MomentumProfile::Constant { amplitude: 1.0 },
                },
                SymbolTerm::Harmonic {
                    frequency: vec![2],
                    profile: MomentumProfile::Constant { amplitude: 1.0 },
                },
                SymbolTerm::Harmonic {
                    frequency: vec![3],
                    profile: MomentumProfile::Constant { amplitude: 0.4 },
                },
            ],
        )
        .unwrap();
        let parts = decompose_average(&mixed);
        assert_eq!(parts.reassemble(), quantize(&ergodic_average(&mixed)));
        for m in parts.remainder.input_box().iter() {
            assert_eq!(parts.remainder.entry(&m, &m), Complex64::new(0.0, 0.0));
        }
        // identity-like classical part, rank-1 remainder
        assert_eq!(rank_default(&parts.remainder).unwrap(), 1);
    }

    #[test]
    fn ideal_checks_trivial_cases() {
        let box6 = ModeBox::new(1, 6).unwrap();
        let zero = OperatorMatrix::zero(box6, box6).unwrap();
        let grid = [e(2.0), e(8.0), e(18.0)];
        let report = sn_ideal_checks(&zero, &zero, &grid, 1e-10, 10_000).unwrap();
        assert!(report.all_pass());
        for row in &report.rows {
            assert_eq!(row.sum_lhs, 0.0);
            assert_eq!(row.product_lhs, 0.0);
        }

        let a = quantize(&ergodic_average(&harmonic_times_one(2, 6)));
        let one = build_symbol(
            1,
            2,
            6,
            &[SymbolTerm::Harmonic {
                frequency: vec![0],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            }],
        )
        .unwrap();
        let id = quantize(&one);
        let report = sn_ideal_checks(&a, &id, &grid, 1e-10, 10_000).unwrap();
        assert!(report.all_pass());
        assert!(report.output_truncated);
        assert_relative_eq!(report.b_norm, 1.0, epsilon = 1e-12);
        for row in &report.rows {
            // left multiplication by the identity reproduces τ_E(a*a)
            assert_relative_eq!(row.product_lhs, row.product_rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_certificate_examples() {
        let odd = harmonic_times_one(3, 5);
        let cert = n1_rank_certificate(&odd).unwrap();
        assert!(cert.ok);
        assert_eq!(cert.rows.len(), 1);
        assert_eq!(cert.rows[0].rank, 0);
        assert_eq!(cert.rows[0].max_rank, 0);
        assert_eq!(cert.rows[0].resonant_momentum, None);
        assert_eq!(cert.remainder_rank, 0);

        // even frequency whose resonant amplitude vanishes
        let vanishing = build_symbol(
            1,
            2,
            5,
            &[SymbolTerm::Harmonic {
                frequency: vec![2],
                profile: MomentumProfile::Ball { radius: 0, amplitude: 1.0 },
            }],
        )
        .unwrap();
        let cert = n1_rank_certificate(&vanishing).unwrap();
        assert!(cert.ok);
        assert_eq!(cert.rows[0].rank, 0);
        assert_eq!(cert.rows[0].max_rank, 1);

        let two_even = build_symbol(
            1,
            4,
            5,
            &[
                SymbolTerm::Harmonic {
                    frequency: vec![2],
                    profile: MomentumProfile::Constant { amplitude: 1.0 },
                },
                SymbolTerm::Harmonic {
                    frequency: vec![4],
                    profile: MomentumProfile::Constant { amplitude: 1.0 },
                },
            ],
        )
        .unwrap();
        let cert = n1_rank_certificate(&two_even).unwrap();
        assert!(cert.ok);
        assert_eq!(cert.even_frequency_count, 2);
        assert_eq!(cert.remainder_rank, 2);
        for row in &cert.rows {
            assert_eq!(row.rank, 1);
            assert_eq!(row.resonant_momentum, Some(-row.frequency / 2));
        }

        let flat = build_symbol(
            2,
            1,
            1,
            &[SymbolTerm::Harmonic {
                frequency: vec![1, 0],
                profile: MomentumProfile::Constant { amplitude: 1.0 },
            }],
        )
        .unwrap();
        assert!(matches!(
            n1_rank_certificate(&flat),
            Err(SemiclassicalError::DimensionNotOne { dimension: 2 })
        ));
    }

    #[test]
    fn tau_bounded_by_squared_norm() {
        let op = quantize(&harmonic_times_one(1, 8));
        let norm = operator_norm(&op, 1e-12, 10_000).unwrap();
        for energy in [2.0, 8.0, 32.0] {
            let tau = tau_e(&op, e(energy)).unwrap();
            assert!(tau <= norm * norm + 1e-9);
        }
    }
}
