//! Numerical laboratory for nonlocal operators on `R^d`.
//!
//! This crate evaluates the fractional Laplacian `(-Δ)^s`, its nonlinear
//! cousin `l_{p,s}`, and Riesz potentials by direct adaptive quadrature,
//! cross-checks them against an independent Fourier-side oracle, and runs
//! verification campaigns for integration-by-parts identities in weighted
//! Lebesgue spaces with two-power radial weights.
//!
//! Module layout:
//!
//! * [`params`] — problem parameters `(d, s, p)`, kernel normalization
//!   constants, and critical-exponent arithmetic.
//! * [`quadrature`] — deterministic adaptive Gauss–Kronrod integration on
//!   intervals and on `R^d` (radial reduction, graded substitutions near
//!   singular points, power-tail fitting at infinity).
//! * [`fields`] — scalar test fields (bumps, Gaussians, cutoff families,
//!   mollifiers), two-power weights, and radial interpolation tables.
//! * [`nonlocal`] — pointwise operator evaluation, bilinear Gagliardo forms,
//!   duality pairings, and weighted norms with divergence classification.
//! * [`oracle`] — FFT-based spectral reference implementations on periodic
//!   grids, used only for cross-validation, never as the primary route.
//! * [`experiments`] — the verification campaigns (integration by parts,
//!   weight scans, remainder decay, mollification, membership, symmetry).
//! * [`report`] — record/report types and deterministic CSV/JSON emission.

pub mod experiments;
pub mod fields;
pub mod nonlocal;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod report;

pub use experiments::{
    decay_fit, failure_demo, field_integral, frac_laplacian_field, membership_check,
    membership_report, mollification_convergence, operator_mass, oracle_check,
    potential_slope_prediction, remainder_decay, remainder_predicted_slope, remainder_report,
    riesz_potential_field, scan_gamma, symmetry_check, tabulate_radial_operator,
    theory_classification, verify_ibp, DecayFit, DecaySample, ExperimentError, MembershipPolicy,
    MembershipVerdict, RemainderRecord, TableGrid, TableTail,
};
pub use fields::{Mollifier, PowerWeight, ScalarField};
pub use nonlocal::{
    duality_pairing, frac_laplacian, frac_laplacian_batch, gagliardo_form, l_ps, riesz_potential,
    riesz_potential_batch, weighted_norm, BilinearFormResult, FormKind, NonlocalError, NormClass,
    NormResult, OperatorEvaluation, PairingSide,
};
pub use params::{KernelConstants, ParamError, ProblemParams};
pub use report::{ExperimentReport, Provenance, Record, Verdict};
pub use quadrature::{IntegralResult, QuadratureError, QuadratureSpec};
