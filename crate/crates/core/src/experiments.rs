//! Verification campaigns: machine-checkable verdicts on the
//! integration-by-parts identity, its breakdown for strongly decaying
//! weights, remainder decay rates, mollification convergence, weighted-space
//! membership, and operator symmetry.
//!
//! The regime language used throughout: with weight exponent `gamma` (the
//! decay rate of the weight at infinity) and critical threshold
//! `gamma_c = d - (p/2)(d - 2s)`, the identity is expected to
//!
//! * **HOLD** for `gamma <= max(d, gamma_c)`,
//! * **FAIL** for `gamma > d` when `d > 2s` (integrable weights admit
//!   nontrivial constant directions, and the potential of a nonnegative
//!   source has positive operator mass against them), and
//! * remain **UNRESOLVED** for `d <= 2s`, `gamma > gamma_c` — a case the
//!   underlying theory leaves open, which this laboratory therefore never
//!   classifies.
//!
//! Every campaign returns an [`ExperimentReport`] whose records carry the
//! measured numbers, the tolerances they were judged against, and honest
//! quadrature error estimates. Quadrature failures degrade to UNRESOLVED
//! records; they are never silently dropped.

use std::cell::{Cell, RefCell};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fields::{
    make_bump, mollify, CutoffFamily, FieldError, Mollifier, PowerWeight, RadialTable, RadialTail,
    ScalarField,
};
use crate::nonlocal::{
    duality_pairing, frac_laplacian, gagliardo_form, riesz_potential, weighted_norm,
    BilinearFormResult, NonlocalError, NormClass, NormResult, OperatorEvaluation, PairingSide,
};
use crate::params::{sphere_area, ProblemParams};
use crate::quadrature::{integrate_radial, integrate_rd, QuadratureError, QuadratureSpec, RdIntegrand};
use crate::report::{ExperimentReport, Provenance, Record, Verdict};

/// Default pairwise agreement tolerance for bilinear-form comparisons.
pub const FORM_TOLERANCE: f64 = 5e-3;

/// Slope slack for decay-rate verdicts: measured decay may be slower than
/// predicted by at most this much.
pub const SLOPE_SLACK: f64 = 0.15;

/// Errors from campaign construction (not from measured outcomes, which
/// are verdicts).
#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The requested configuration is outside the campaign's domain.
    #[error("experiment domain violation: {0}")]
    Domain(String),
    /// A decay fit was requested on data drowned by its own error bars.
    #[error(
        "degenerate decay fit: magnitude {magnitude} at radius {radius} \
         is within its error estimate {error_estimate}"
    )]
    DegenerateFit {
        radius: f64,
        magnitude: f64,
        error_estimate: f64,
    },
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Whether a campaign must verify weighted-space membership of its inputs
/// before measuring, or the caller takes responsibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MembershipPolicy {
    /// Verify membership of both fields; refuse to run when it fails.
    Require,
    /// Skip the membership precondition (caller vouches for it).
    Waive,
}

/// Membership classification of one field in the weighted space: both the
/// field itself (against `p`, the weight) and its operator image (against
/// the conjugate exponent, the dual weight) must have finite norms.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipVerdict {
    pub norm_primal: NormResult,
    pub norm_dual: NormResult,
    pub in_x: bool,
}

/// Decay measurements of the cutoff-remainder integral
/// `J(R) = integral of v^2 xi_R |(-Delta)^s xi_R| rho`, with the fitted
/// log-log slope compared against the predicted dominant exponent.
#[derive(Debug, Clone, Serialize)]
pub struct RemainderRecord {
    pub r_values: Vec<f64>,
    pub measured: Vec<f64>,
    pub error_estimates: Vec<f64>,
    /// The scale-splitting rule the predicted exponent assumes (the second
    /// term of the remainder bound dominates under it).
    pub alpha_rule: String,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    pub verdict: Verdict,
}

/// One radius/magnitude measurement for a decay fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecaySample {
    pub radius: f64,
    pub magnitude: f64,
    pub error_estimate: f64,
}

/// Least-squares log-log slope with a 2-standard-error confidence width.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub width: f64,
}

// --- Theory helpers ---------------------------------------------------------

/// The regime partition for the integration-by-parts identity at weight
/// decay exponent `gamma`: HOLD up to `max(d, gamma_c)`, FAIL beyond `d`
/// when `d > 2s`, UNRESOLVED (open) beyond `gamma_c` when `d <= 2s`.
pub fn theory_classification(params: &ProblemParams, gamma: f64) -> Verdict {
    let d = params.d as f64;
    let threshold = d.max(params.critical_gamma());
    if gamma <= threshold + 1e-12 {
        Verdict::Hold
    } else if d > 2.0 * params.s {
        Verdict::Fail
    } else {
        Verdict::Unresolved
    }
}

/// Predicted dominant log-log slope of the remainder integral `J(R)` under
/// the square-root scale split: `-(2d + p(2s - d) - 2 gamma) / p`, which
/// reduces to `gamma - 2s` at `p = 2`.
pub fn remainder_predicted_slope(params: &ProblemParams, gamma: f64) -> f64 {
    let d = params.d as f64;
    -(2.0 * d + params.p * (2.0 * params.s - d) - 2.0 * gamma) / params.p
}

/// Predicted far-field slope of the p-power slope functional of a
/// potential-type field (tail `|x|^{-(d-2s)}`): `-p(d-s)`, valid only while
/// the local power mass dominates the monopole term, i.e. `p < d/(d-2s)`.
/// Returns `None` outside that range — no slope claim is made there.
pub fn potential_slope_prediction(params: &ProblemParams, p: f64) -> Option<f64> {
    let d = params.d as f64;
    let s = params.s;
    if d <= 2.0 * s {
        return None;
    }
    if p < d / (d - 2.0 * s) {
        Some(-p * (d - s))
    } else {
        None
    }
}

// --- Decay fitting -----------------------------------------------------------

/// Least-squares power-law fit in log-log coordinates.
///
/// Preconditions: at least 4 samples spanning at least 2 octaves in
/// radius, all magnitudes positive. Any magnitude at or below its own
/// error estimate aborts with `DegenerateFit` — a slope fitted through
/// noise would be an invented number.
pub fn decay_fit(samples: &[DecaySample]) -> Result<DecayFit, ExperimentError> {
    if samples.len() < 4 {
        return Err(ExperimentError::Domain(format!(
            "decay fit needs at least 4 radii, got {}",
            samples.len()
        )));
    }
    let mut radii: Vec<f64> = samples.iter().map(|s| s.radius).collect();
    radii.sort_by(f64::total_cmp);
    if radii[0] <= 0.0 || radii[radii.len() - 1] / radii[0] < 4.0 - 1e-9 {
        return Err(ExperimentError::Domain(
            "decay fit needs radii spanning at least two octaves".into(),
        ));
    }
    for s in samples {
        if !(s.magnitude > 0.0) {
            return Err(ExperimentError::Domain(format!(
                "decay fit needs positive magnitudes, got {} at radius {}",
                s.magnitude, s.radius
            )));
        }
        if s.magnitude <= s.error_estimate {
            return Err(ExperimentError::DegenerateFit {
                radius: s.radius,
                magnitude: s.magnitude,
                error_estimate: s.error_estimate,
            });
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.radius.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.magnitude.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let se = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        slope,
        width: 2.0 * se,
    })
}

// --- Field tabulation ---------------------------------------------------------

/// Knot layout for tabulating a radial operator output: dense linear knots
/// through the structured core, geometric knots through the tail region.
#[derive(Debug, Clone, Copy)]
pub struct TableGrid {
    /// End of the linearly spaced core region.
    pub core_max: f64,
    /// Number of linear intervals in the core.
    pub core_knots: usize,
    /// Geometric knot ratio beyond the core.
    pub ratio: f64,
    /// Extend geometric knots until at least this radius.
    pub r_max: f64,
}

impl TableGrid {
    /// Layout for unit-scale fields (supports of radius about 1).
    pub fn unit() -> Self {
        TableGrid {
            core_max: 4.0,
            core_knots: 160,
            ratio: 1.06,
            r_max: 48.0,
        }
    }

    /// Layout scaled to a field of the given characteristic radius.
    pub fn for_radius(radius: f64) -> Self {
        let core_max = (2.0 * radius + 2.0).max(4.0);
        TableGrid {
            core_max,
            core_knots: 160,
            ratio: 1.06,
            r_max: (6.0 * core_max).max(48.0),
        }
    }

    fn knots(&self) -> Vec<f64> {
        let mut rs: Vec<f64> = (0..=self.core_knots)
            .map(|i| self.core_max * i as f64 / self.core_knots as f64)
            .collect();
        let mut r = self.core_max;
        while r < self.r_max {
            r *= self.ratio;
            rs.push(r);
        }
        rs
    }
}

/// How a tabulated operator output continues beyond the last knot.
#[derive(Debug, Clone, Copy)]
pub enum TableTail {
    /// Fit a two-term power law `c1 r^{-q} + c2 r^{-q-2}` at the outermost
    /// knots, with the known leading exponent `q`.
    PowerFit { q: f64 },
    /// Treat the output as zero beyond the last knot (appropriate when the
    /// sampled magnitudes out there are numerically indistinguishable from
    /// the quadrature noise floor).
    Compact,
}

/// Tabulates a radial pointwise operator as a cubic-spline field with the
/// requested tail continuation. Samples are computed in parallel
/// (index-stable, so the table is deterministic). Returns the field and
/// the largest error estimate among the samples.
pub fn tabulate_radial_operator<F>(
    op: F,
    grid: &TableGrid,
    tail: TableTail,
    dim: usize,
) -> Result<(ScalarField, f64), NonlocalError>
where
    F: Fn(f64) -> Result<OperatorEvaluation, NonlocalError> + Sync,
{
    let rs = grid.knots();
    let evals: Vec<OperatorEvaluation> = rs.par_iter().map(|&r| op(r)).collect::<Result<_, _>>()?;
    let vals: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let peak_err = evals
        .iter()
        .map(|e| e.error_estimate)
        .fold(0.0_f64, f64::max);

    let radial_tail = match tail {
        TableTail::Compact => RadialTail::Zero,
        TableTail::PowerFit { q } => {
            let (ia, ib) = (rs.len() - 8, rs.len() - 1);
            let (ra, rb) = (rs[ia], rs[ib]);
            let (a11, a12) = (ra.powf(-q), ra.powf(-q - 2.0));
            let (a21, a22) = (rb.powf(-q), rb.powf(-q - 2.0));
            let det = a11 * a22 - a12 * a21;
            let c1 = (vals[ia] * a22 - a12 * vals[ib]) / det;
            let c2 = (a11 * vals[ib] - vals[ia] * a21) / det;
            RadialTail::TwoTerm { q, c1, c2 }
        }
    };

    // Derivative metadata from divided differences (informational bounds).
    let mut grad: f64 = 0.0;
    for i in 1..rs.len() {
        grad = grad.max(((vals[i] - vals[i - 1]) / (rs[i] - rs[i - 1])).abs());
    }
    let h = grid.core_max / grid.core_knots as f64;
    let mut hess: f64 = 0.0;
    for i in 1..grid.core_knots {
        hess = hess.max(((vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (h * h)).abs());
    }

    let table = RadialTable::from_samples(rs, vals, radial_tail);
    Ok((table.into_field(dim, grad, hess), peak_err))
}

/// The Riesz potential of a radial field, tabulated as a reusable field
/// with the exact leading tail exponent `d - 2s`.
pub fn riesz_potential_field(
    f: &ScalarField,
    params: &ProblemParams,
    spec: &QuadratureSpec,
) -> Result<(ScalarField, f64), ExperimentError> {
    require_radial(f, "potential tabulation")?;
    let grid = table_grid_for(f);
    let q = params.d as f64 - 2.0 * params.s;
    let (field, err) = tabulate_radial_operator(
        |r| riesz_potential(f, [r, 0.0, 0.0], params, spec),
        &grid,
        TableTail::PowerFit { q },
        params.d,
    )?;
    Ok((field, err))
}

/// The fractional Laplacian of a radial field, tabulated as a reusable
/// field with the exact leading tail exponent `d + 2s`.
pub fn frac_laplacian_field(
    f: &ScalarField,
    params: &ProblemParams,
    spec: &QuadratureSpec,
) -> Result<(ScalarField, f64), ExperimentError> {
    require_radial(f, "operator tabulation")?;
    let grid = table_grid_for(f);
    let q = params.d as f64 + 2.0 * params.s;
    let (field, err) = tabulate_radial_operator(
        |r| frac_laplacian(f, [r, 0.0, 0.0], params, spec),
        &grid,
        TableTail::PowerFit { q },
        params.d,
    )?;
    Ok((field, err))
}

fn table_grid_for(f: &ScalarField) -> TableGrid {
    if f.support_radius.is_finite() {
        TableGrid::for_radius(f.support_radius)
    } else {
        TableGrid::unit()
    }
}

fn require_radial(f: &ScalarField, what: &str) -> Result<(), ExperimentError> {
    if !f.is_radial {
        return Err(ExperimentError::Domain(format!(
            "{what} is implemented for radial fields"
        )));
    }
    Ok(())
}

// --- Shared measurement helpers -------------------------------------------------

/// Relaxed tolerances for integrals whose integrand is itself a quadrature
/// result (chasing the inner noise floor wastes the panel budget).
fn relaxed_spec(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: spec.rel_tol.max(1e-6),
        abs_tol: spec.abs_tol.max(1e-9),
        ..*spec
    }
}

/// Integral of a field over the whole space, with error estimate.
pub fn field_integral(
    f: &ScalarField,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), ExperimentError> {
    let integrand = RdIntegrand {
        dim: f.dim,
        eval: &|x| f.eval(x),
        is_radial: f.is_radial,
        origin_exponent: 0.0,
        tail: f.tail_spec()?,
    };
    let r = integrate_rd(&integrand, spec)?;
    Ok((r.value, r.error_estimate))
}

/// Total integral of the fractional Laplacian of a radial field over the
/// ball of the given radius, plus an estimate including the truncation.
///
/// For fields with enough decay this is zero (the operator's output has
/// zero mean); for the potential of a nonnegative source it reproduces the
/// source's mass — the quantity whose failure to vanish witnesses the
/// breakdown of integration by parts against constant directions.
pub fn operator_mass(
    f: &ScalarField,
    params: &ProblemParams,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), ExperimentError> {
    require_radial(f, "operator mass")?;
    let d = params.d;
    let sphere = sphere_area(d);
    let failure: RefCell<Option<NonlocalError>> = RefCell::new(None);
    let peak_rel = Cell::new(0.0_f64);
    let res = integrate_radial(
        |t| match frac_laplacian(f, [t, 0.0, 0.0], params, spec) {
            Ok(ev) => {
                if ev.value.abs() > 1e-300 {
                    peak_rel.set(peak_rel.get().max(ev.error_estimate / ev.value.abs()));
                }
                ev.value * t.powi(d as i32 - 1)
            }
            Err(e) => {
                if failure.borrow().is_none() {
                    *failure.borrow_mut() = Some(e);
                }
                0.0
            }
        },
        0.0,
        radius,
        &relaxed_spec(spec),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let edge = frac_laplacian(f, [radius, 0.0, 0.0], params, spec)?;
    let truncation = edge.value.abs() * sphere * radius.powi(d as i32) / d as f64 * 2.0;
    let value = sphere * res.value;
    let err = sphere * res.error_estimate + truncation + value.abs() * 3.0 * peak_rel.get();
    Ok((value, err))
}

fn base_report(
    name: &str,
    params: &ProblemParams,
    gamma0: f64,
    gamma: f64,
    spec: &QuadratureSpec,
) -> ExperimentReport {
    let config = format!(
        "{name} d={} s={} p={} gamma0={gamma0} gamma={gamma} spec={spec:?}",
        params.d, params.s, params.p
    );
    ExperimentReport::new(
        name,
        params.d,
        params.s,
        params.p,
        gamma0,
        gamma,
        Provenance::from_config(&config, 0),
    )
}

fn value_record(input: &str, form: &BilinearFormResult) -> Record {
    Record {
        input: input.into(),
        measured: form.value,
        expected: None,
        tolerance: 0.0,
        error_estimate: form.error_estimate,
        verdict: Verdict::Pass,
    }
}

fn unresolved_record(input: &str, tolerance: f64) -> Record {
    Record {
        input: input.into(),
        measured: f64::NAN,
        expected: None,
        tolerance,
        error_estimate: f64::NAN,
        verdict: Verdict::Unresolved,
    }
}

/// Pairwise agreement record: relative difference against the larger
/// magnitude, with the two error estimates added to the allowance.
fn pair_record(input: &str, a: &BilinearFormResult, b: &BilinearFormResult, tol: f64) -> Record {
    let scale = a.value.abs().max(b.value.abs());
    let diff = (a.value - b.value).abs();
    let budget = tol * scale + a.error_estimate + b.error_estimate;
    let measured = if scale > 0.0 { diff / scale } else { 0.0 };
    Record {
        input: input.into(),
        measured,
        expected: Some(0.0),
        tolerance: tol,
        error_estimate: (a.error_estimate + b.error_estimate) / scale.max(f64::MIN_POSITIVE),
        verdict: if diff <= budget {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    }
}

type FormTrio = (BilinearFormResult, BilinearFormResult, BilinearFormResult);

/// The three realizations of the bilinear form. Quadrature failures are
/// returned as `Ok(Err(...))` so campaigns can degrade to UNRESOLVED;
/// structural errors propagate.
fn form_trio(
    v: &ScalarField,
    w: &ScalarField,
    params: &ProblemParams,
    spec: &QuadratureSpec,
) -> Result<Result<FormTrio, QuadratureError>, ExperimentError> {
    let run = || -> Result<FormTrio, NonlocalError> {
        let g = gagliardo_form(v, w, params, spec)?;
        let l = duality_pairing(v, w, params, spec, PairingSide::OperatorOnFirst)?;
        let r = duality_pairing(v, w, params, spec, PairingSide::OperatorOnSecond)?;
        Ok((g, l, r))
    };
    match run() {
        Ok(t) => Ok(Ok(t)),
        Err(NonlocalError::Quadrature(e)) => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

// --- Campaign: integration-by-parts verification ----------------------------------

/// Measures the symmetric-difference form and both duality pairings of
/// `(v, w)` and judges their pairwise agreement at the default tolerance.
///
/// The weight enters through the membership precondition (with
/// `MembershipPolicy::Require`) and through the constant-direction record:
/// when the weight is integrable (`gamma > d`, `d > 2s`) constants join
/// the space, and the report additionally checks that the operator mass of
/// `v` vanishes — the pairing of `v` against the constant direction, whose
/// failure to vanish is exactly the identity's breakdown.
pub fn verify_ibp(
    v: &ScalarField,
    w: &ScalarField,
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
    policy: MembershipPolicy,
) -> Result<ExperimentReport, ExperimentError> {
    let mut rep = base_report("verify_ibp", params, weight.gamma0, weight.gamma, spec);

    if policy == MembershipPolicy::Require {
        for (label, f) in [("first", v), ("second", w)] {
            let m = membership_check(f, params, weight, spec)?;
            if !m.in_x {
                return Err(ExperimentError::Domain(format!(
                    "membership required but the {label} field is outside the weighted space \
                     (primal {:?}, dual {:?})",
                    m.norm_primal.classification, m.norm_dual.classification
                )));
            }
            rep.push(Record {
                input: format!("membership={label}"),
                measured: 1.0,
                expected: Some(1.0),
                tolerance: 0.0,
                error_estimate: m.norm_primal.error_estimate + m.norm_dual.error_estimate,
                verdict: Verdict::Pass,
            });
        }
    }

    match form_trio(v, w, params, spec)? {
        Err(_) => {
            for input in [
                "form=a-gagliardo",
                "form=b-duality_left",
                "form=c-duality_right",
            ] {
                rep.push(unresolved_record(input, FORM_TOLERANCE));
            }
        }
        Ok((g, l, r)) => {
            rep.push(value_record("form=a-gagliardo", &g));
            rep.push(value_record("form=b-duality_left", &l));
            rep.push(value_record("form=c-duality_right", &r));
            rep.push(pair_record("pair=a-gagliardo-left", &g, &l, FORM_TOLERANCE));
            rep.push(pair_record("pair=b-gagliardo-right", &g, &r, FORM_TOLERANCE));
            rep.push(pair_record("pair=c-left-right", &l, &r, FORM_TOLERANCE));
        }
    }

    // Constant-direction test, active when the weight admits constants.
    let d = params.d as f64;
    if weight.gamma > d && d > 2.0 * params.s && v.is_radial {
        rep.push(constant_direction_record(v, params, spec)?);
    }

    rep.finalize();
    Ok(rep)
}

/// Pairing of a field against the constant direction: the operator applied
/// to a constant vanishes identically (differences of a constant are
/// zero), so the only surviving term is the operator mass of the field —
/// the record passes iff that mass vanishes within tolerance of the
/// field's own scale.
fn constant_direction_record(
    v: &ScalarField,
    params: &ProblemParams,
    spec: &QuadratureSpec,
) -> Result<Record, ExperimentError> {
    let (mass, mass_err) = operator_mass(v, params, 12.0, spec)?;
    // Scale: the L1 mass of |v| over the structured region.
    let core = if v.support_radius.is_finite() {
        v.support_radius
    } else {
        8.0
    };
    let inner = v.clone();
    let abs_field = ScalarField::from_radial_profile(
        v.dim,
        move |r| inner.eval([r, 0.0, 0.0]).abs(),
        core,
        core,
        v.grad_bound,
        v.hess_bound,
        None,
    );
    let (scale, _) = field_integral(&abs_field, spec)?;
    let tol = FORM_TOLERANCE;
    let budget = tol * scale.max(f64::MIN_POSITIVE) + 3.0 * mass_err;
    Ok(Record {
        input: "pair=d-constant-direction".into(),
        measured: mass / scale.max(f64::MIN_POSITIVE),
        expected: Some(0.0),
        tolerance: tol,
        error_estimate: mass_err / scale.max(f64::MIN_POSITIVE),
        verdict: if mass.abs() <= budget {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

// --- Campaign: breakdown demonstration ----------------------------------------------

/// Reproduces the identity's failure in the strongly weighted regime
/// `d > 2s`, `gamma in (d, d + ps]`: the potential of a nonnegative bump
/// and the bump itself both belong to the relevant weighted spaces, yet
/// the integral of the operator output equals the bump's positive mass —
/// pairing with the constant direction cannot integrate by parts.
///
/// PASS means "failure reproduced". Outside the window the construction
/// proves nothing, so the campaign refuses to run.
pub fn failure_demo(
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
) -> Result<ExperimentReport, ExperimentError> {
    let d = params.d as f64;
    let s = params.s;
    let p = params.p;
    let gamma = weight.gamma;
    if !(d > 2.0 * s) {
        return Err(ExperimentError::Domain(format!(
            "breakdown construction needs d > 2s, got d = {d}, s = {s}"
        )));
    }
    if !(gamma > d) {
        return Err(ExperimentError::Domain(format!(
            "gamma = {gamma} is not above d = {d}: not in the failure window"
        )));
    }
    if gamma > d + p * s + 1e-9 {
        return Err(ExperimentError::Domain(format!(
            "gamma = {gamma} is beyond the window edge d + ps = {}",
            d + p * s
        )));
    }

    let mut rep = base_report("failure_demo", params, weight.gamma0, gamma, spec);
    let phi = make_bump([0.0; 3], 1.0, params.d);
    let (phi_mass, phi_mass_err) = field_integral(&phi, spec)?;
    let (big_phi, _) = riesz_potential_field(&phi, params, spec)?;

    // (i) The potential belongs to the primal weighted space.
    let primal = weighted_norm(&big_phi, p, weight, spec)?;
    rep.push(Record {
        input: "norm=a-primal-potential".into(),
        measured: primal.norm,
        expected: None,
        tolerance: 0.0,
        error_estimate: primal.error_estimate,
        verdict: if primal.classification == NormClass::Finite {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    });

    // (ii) The source belongs to the dual weighted space.
    let p_dual = p / (p - 1.0);
    let dual_weight = weight.dual();
    let dual = weighted_norm(&phi, p_dual, &dual_weight, spec)?;
    rep.push(Record {
        input: "norm=b-dual-source".into(),
        measured: dual.norm,
        expected: None,
        tolerance: 0.0,
        error_estimate: dual.error_estimate,
        verdict: if dual.classification == NormClass::Finite {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    });

    // (iii) The operator mass of the potential reproduces the source mass.
    let (mass, mass_err) = operator_mass(&big_phi, params, 12.0, spec)?;
    rep.push(Record {
        input: "mass=a-source".into(),
        measured: phi_mass,
        expected: None,
        tolerance: 0.0,
        error_estimate: phi_mass_err,
        verdict: if phi_mass > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    });
    rep.push(Record {
        input: "mass=b-operator".into(),
        measured: mass,
        expected: Some(phi_mass),
        tolerance: 0.01,
        error_estimate: mass_err,
        verdict: if mass >= 0.99 * phi_mass && phi_mass > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    });

    rep.finalize();
    Ok(rep)
}

// --- Campaign: weight-exponent scan ----------------------------------------------

/// Classifies each weight decay exponent as HOLD / FAIL / UNRESOLVED from
/// measurements, for comparison against the theoretical partition.
///
/// Evidence gathered once (it is exponent-independent): the three-form
/// agreement on the regime's test pair (potential and source for
/// `d > 2s`, bumps otherwise), the remainder decay slope, and — when
/// `d > 2s` — the operator mass of the potential. Per exponent, the HOLD
/// side requires form agreement plus an acceptable remainder slope; the
/// FAIL side requires an integrable weight (constants join the space) plus
/// persistent operator mass; the open window `d <= 2s`, `gamma > gamma_c`
/// is always reported UNRESOLVED, never classified.
pub fn scan_gamma(
    gammas: &[f64],
    params: &ProblemParams,
    spec: &QuadratureSpec,
) -> Result<ExperimentReport, ExperimentError> {
    if gammas.is_empty() {
        return Err(ExperimentError::Domain(
            "scan needs a nonempty exponent list".into(),
        ));
    }
    let d = params.d as f64;
    let s = params.s;
    let supercritical_geometry = d > 2.0 * s;
    let threshold = d.max(params.critical_gamma());
    // The header's gamma slot is not meaningful for a scan; the per-record
    // descriptors carry the exponents.
    let mut rep = base_report("scan_gamma", params, 0.0, f64::NAN, spec);

    // --- One-time evidence ---
    let phi = make_bump([0.0; 3], 1.0, params.d);
    let (phi_mass, _) = field_integral(&phi, spec)?;

    let potential = if supercritical_geometry {
        Some(riesz_potential_field(&phi, params, spec)?.0)
    } else {
        None
    };

    let trio = match &potential {
        Some(big_phi) => form_trio(big_phi, &phi, params, spec)?,
        None => form_trio(&phi, &phi, params, spec)?,
    };
    let (ibp_rel, ibp_err, ibp_ok) = match &trio {
        Ok((g, l, r)) => {
            let recs = [
                pair_record("x", g, l, FORM_TOLERANCE),
                pair_record("x", g, r, FORM_TOLERANCE),
                pair_record("x", l, r, FORM_TOLERANCE),
            ];
            let rel = recs.iter().map(|r| r.measured).fold(0.0_f64, f64::max);
            let err = recs
                .iter()
                .map(|r| r.error_estimate)
                .fold(0.0_f64, f64::max);
            let ok = recs.iter().all(|r| r.verdict == Verdict::Pass);
            (rel, err, ok)
        }
        Err(_) => (f64::NAN, f64::NAN, false),
    };

    let mass_ratio = match &potential {
        Some(big_phi) => {
            let (mass, mass_err) = operator_mass(big_phi, params, 12.0, spec)?;
            Some((mass / phi_mass, mass_err / phi_mass))
        }
        None => None,
    };

    // Remainder decay measured once with the neutral weight (the test
    // field is supported where the scanned weights all equal one, so the
    // measured integrals are exponent-independent; only the predicted
    // slope varies).
    let neutral = PowerWeight::new(0.0, 0.0, params.p)?;
    let r_list = [1.0, 2.0, 4.0, 8.0];
    let rem = remainder_decay(&phi, params, &neutral, &r_list, spec)?;
    let rem_slope = rem.fitted_slope;

    // --- Per-exponent classification ---
    for &gamma in gammas {
        let hold_regime = gamma <= threshold + 1e-12;
        let (measured_value, err_value, verdict) = if hold_regime {
            let rem_ok =
                rem_slope.is_finite() && rem_slope <= remainder_predicted_slope(params, gamma) + SLOPE_SLACK;
            if ibp_ok && rem_ok {
                (ibp_rel, ibp_err, Verdict::Hold)
            } else {
                (ibp_rel, ibp_err, Verdict::Unresolved)
            }
        } else if supercritical_geometry {
            let (ratio, ratio_err) = mass_ratio.expect("potential exists when d > 2s");
            match weight_admits_constants(params, gamma, spec)? {
                Some(true) if ratio >= 0.5 => (ratio, ratio_err, Verdict::Fail),
                Some(_) => (ratio, ratio_err, Verdict::Unresolved),
                None => (ratio, ratio_err, Verdict::Unresolved),
            }
        } else {
            // Open window: the theory makes no claim and neither do we.
            (ibp_rel, ibp_err, Verdict::Unresolved)
        };
        rep.push(Record {
            input: format!("gamma={gamma:+09.4}"),
            measured: measured_value,
            expected: None,
            tolerance: if hold_regime { FORM_TOLERANCE } else { 0.5 },
            error_estimate: err_value,
            verdict,
        });
    }

    rep.finalize();
    Ok(rep)
}

/// Whether the weight with the given decay exponent admits constant
/// directions (is integrable at infinity). The exponent test `gamma > d`
/// decides; away from the boundary (margin 0.5) a measured growth probe of
/// plateau norms must agree, otherwise the answer is `None` (inconsistent
/// evidence).
fn weight_admits_constants(
    params: &ProblemParams,
    gamma: f64,
    spec: &QuadratureSpec,
) -> Result<Option<bool>, ExperimentError> {
    let d = params.d as f64;
    let by_exponent = gamma > d;
    if (gamma - d).abs() <= 0.5 {
        // Quadrature cannot resolve growth this slow; the analytic
        // exponent of the input weight is the only honest classifier.
        return Ok(Some(by_exponent));
    }
    let weight = PowerWeight::new(0.0, gamma, params.p)?;
    let family = CutoffFamily::new(params.d);
    let mut integrals = Vec::new();
    for scale in [4.0, 8.0, 16.0] {
        let n = weighted_norm(&family.at_scale(scale), params.p, &weight, spec)?;
        integrals.push(n.integral);
    }
    let max_ratio = (integrals[1] / integrals[0]).max(integrals[2] / integrals[1]);
    let by_growth = max_ratio <= 1.10;
    Ok(if by_growth == by_exponent {
        Some(by_exponent)
    } else {
        None
    })
}

// --- Campaign: remainder decay -------------------------------------------------------

/// Measures the cutoff-remainder integrals `J(R)` over an increasing list
/// of plateau scales, fits their log-log slope, and compares against the
/// predicted dominant exponent. PASS means the measured decay is at least
/// as fast as predicted (within the slope slack).
pub fn remainder_decay(
    v: &ScalarField,
    params: &ProblemParams,
    weight: &PowerWeight,
    r_list: &[f64],
    spec: &QuadratureSpec,
) -> Result<RemainderRecord, ExperimentError> {
    if r_list.len() < 4 {
        return Err(ExperimentError::Domain(
            "remainder decay needs at least 4 scales for a slope".into(),
        ));
    }
    if r_list[0] < 1.0 || r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Domain(
            "remainder scales must be strictly increasing and at least 1".into(),
        ));
    }
    require_radial(v, "remainder measurement")?;
    let predicted = remainder_predicted_slope(params, weight.gamma);

    let mut measured = Vec::with_capacity(r_list.len());
    let mut errors = Vec::with_capacity(r_list.len());
    let mut quadrature_failed = false;
    for &r in r_list {
        match remainder_integral(v, params, weight, r, spec) {
            Ok((j, e)) => {
                measured.push(j);
                errors.push(e);
            }
            Err(ExperimentError::Nonlocal(NonlocalError::Quadrature(_)))
            | Err(ExperimentError::Quadrature(_)) => {
                measured.push(f64::NAN);
                errors.push(f64::NAN);
                quadrature_failed = true;
            }
            Err(e) => return Err(e),
        }
    }

    let (fitted, verdict) = if quadrature_failed {
        (f64::NAN, Verdict::Unresolved)
    } else {
        let samples: Vec<DecaySample> = r_list
            .iter()
            .zip(measured.iter().zip(&errors))
            .map(|(&radius, (&magnitude, &error_estimate))| DecaySample {
                radius,
                magnitude,
                error_estimate,
            })
            .collect();
        match decay_fit(&samples) {
            Ok(fit) => (
                fit.slope,
                if fit.slope <= predicted + SLOPE_SLACK {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            ),
            Err(ExperimentError::DegenerateFit { .. }) => (f64::NAN, Verdict::Unresolved),
            Err(e) => return Err(e),
        }
    };

    Ok(RemainderRecord {
        r_values: r_list.to_vec(),
        measured,
        error_estimates: errors,
        alpha_rule: "sqrt".into(),
        fitted_slope: fitted,
        predicted_slope: predicted,
        verdict,
    })
}

/// `J(R)` for one plateau scale: the weighted integral of
/// `v^2 xi_R |(-Delta)^s xi_R|` over the plateau's support.
fn remainder_integral(
    v: &ScalarField,
    params: &ProblemParams,
    weight: &PowerWeight,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), ExperimentError> {
    let xi = CutoffFamily::new(params.d).at_scale(r);
    let d = params.d;
    let sphere = sphere_area(d);
    let upper = if v.support_radius.is_finite() {
        v.support_radius.min(2.0 * r)
    } else {
        2.0 * r
    };
    // The origin branch of the weight is exact power r^{-gamma0}; a zero
    // exponent needs no special handling, a positive one gets a truncated
    // lower endpoint with the truncation charged to the estimate.
    let lower = if weight.gamma0 > 0.0 { 1e-6 } else { 0.0 };
    let failure: RefCell<Option<NonlocalError>> = RefCell::new(None);
    let res = integrate_radial(
        |t| {
            let vt = v.eval([t, 0.0, 0.0]);
            if vt == 0.0 {
                return 0.0;
            }
            let xit = xi.eval([t, 0.0, 0.0]);
            if xit == 0.0 {
                return 0.0;
            }
            match frac_laplacian(&xi, [t, 0.0, 0.0], params, spec) {
                Ok(ev) => {
                    vt * vt
                        * xit
                        * ev.value.abs()
                        * weight.eval_radius(t)
                        * t.powi(d as i32 - 1)
                }
                Err(e) => {
                    if failure.borrow().is_none() {
                        *failure.borrow_mut() = Some(e);
                    }
                    0.0
                }
            }
        },
        lower,
        upper,
        &relaxed_spec(spec),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let mut truncation = 0.0;
    if lower > 0.0 {
        let d_f = d as f64;
        let expo = d_f - weight.gamma0;
        if expo <= 0.0 {
            return Err(ExperimentError::Domain(format!(
                "remainder integrand not integrable at the origin (gamma0 = {})",
                weight.gamma0
            )));
        }
        let v0 = v.eval([lower, 0.0, 0.0]).abs();
        let l0 = frac_laplacian(&xi, [lower, 0.0, 0.0], params, spec)?
            .value
            .abs();
        truncation = v0 * v0 * l0 * lower.powf(expo) / expo * sphere;
    }
    Ok((
        sphere * res.value,
        sphere * res.error_estimate + truncation,
    ))
}

/// Wraps a remainder record as a report for serialization: one record per
/// scale plus the slope comparison.
pub fn remainder_report(
    record: &RemainderRecord,
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
) -> ExperimentReport {
    let mut rep = base_report(
        "remainder_decay",
        params,
        weight.gamma0,
        weight.gamma,
        spec,
    );
    for ((&r, &j), &e) in record
        .r_values
        .iter()
        .zip(&record.measured)
        .zip(&record.error_estimates)
    {
        rep.push(Record {
            input: format!("scale={r:09.3}"),
            measured: j,
            expected: None,
            tolerance: 0.0,
            error_estimate: e,
            verdict: if j.is_nan() {
                Verdict::Unresolved
            } else {
                Verdict::Pass
            },
        });
    }
    rep.push(Record {
        input: "slope=fit".into(),
        measured: record.fitted_slope,
        expected: Some(record.predicted_slope),
        tolerance: SLOPE_SLACK,
        error_estimate: 0.0,
        verdict: record.verdict,
    });
    rep.finalize();
    rep
}

// --- Campaign: mollification convergence ------------------------------------------

/// For weight exponents in the convergent window `lambda in (-d, (p-1)d)`:
/// verifies that the mollified field converges to the field in the
/// `|x|^lambda`-weighted norm (strictly decreasing errors, final error
/// below 1% of the field's norm). At or below the window's lower edge the
/// same construction is expected to break; pass the borderline field and
/// the campaign instead records the divergence witness: truncated norms of
/// the mollified field over shrinking inner annuli grow without bound.
pub fn mollification_convergence(
    f: &ScalarField,
    lambda: f64,
    p: f64,
    eps_list: &[f64],
    spec: &QuadratureSpec,
) -> Result<ExperimentReport, ExperimentError> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExperimentError::Domain(
            "mollification needs a strictly decreasing scale list".into(),
        ));
    }
    if eps_list[0] <= 0.0 || eps_list.iter().any(|&e| e <= 0.0) {
        return Err(ExperimentError::Domain(
            "mollification scales must be positive".into(),
        ));
    }
    let d = f.dim as f64;
    let params = ProblemParams::new(f.dim, 0.5, p.max(1.5))
        .map_err(|e| ExperimentError::Domain(e.to_string()))?;
    let mut rep = base_report("mollification", &params, -lambda, -lambda, spec);
    // The report's s slot is irrelevant here; keep the weight exponents.
    rep.s = f64::NAN;

    if lambda > -d && lambda < (p - 1.0) * d {
        let weight = PowerWeight::pure_power(lambda, p)?;
        let base = weighted_norm(f, p, &weight, spec)?;
        if base.classification != NormClass::Finite {
            return Err(ExperimentError::Domain(format!(
                "the field's weighted norm must be finite, got {:?}",
                base.classification
            )));
        }
        let mut prev = f64::INFINITY;
        let mut last = f64::INFINITY;
        let mut last_err = 0.0;
        for &eps in eps_list {
            let m = Mollifier::new(f.dim, eps)?;
            let smoothed = mollify(f, &m, spec)?;
            let diff = ScalarField::linear_combination(1.0, &smoothed, -1.0, f);
            let n = weighted_norm(&diff, p, &weight, spec)?;
            rep.push(Record {
                input: format!("eps={eps:08.4}"),
                measured: n.norm,
                expected: None,
                tolerance: 0.0,
                error_estimate: n.error_estimate,
                verdict: if n.norm < prev {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            });
            prev = n.norm;
            last = n.norm;
            last_err = n.error_estimate;
        }
        rep.push(Record {
            input: "target=final".into(),
            measured: last / base.norm,
            expected: Some(0.0),
            tolerance: 1e-2,
            error_estimate: last_err / base.norm,
            verdict: if last < 1e-2 * base.norm {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    } else if lambda <= -d {
        divergence_witness(f, lambda, p, eps_list[0], spec, &mut rep)?;
    } else {
        return Err(ExperimentError::Domain(format!(
            "lambda = {lambda} is at or above the window edge (p-1)d = {}",
            (p - 1.0) * d
        )));
    }

    rep.finalize();
    Ok(rep)
}

/// The sharpness witness at the window's lower edge: mollification parks
/// positive mass at the origin, where the weight `|x|^lambda` with
/// `lambda <= -d` is no longer integrable. Truncated weighted integrals
/// over `[delta, 1]` must grow without bound as `delta` shrinks; each
/// decade is checked against the growth its origin value predicts.
fn divergence_witness(
    f: &ScalarField,
    lambda: f64,
    p: f64,
    eps: f64,
    spec: &QuadratureSpec,
    rep: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    require_radial(f, "divergence witness")?;
    let d = f.dim as f64;
    let sphere = sphere_area(f.dim);
    let m = Mollifier::new(f.dim, eps)?;
    let smoothed = mollify(f, &m, spec)?;
    let origin = smoothed.eval([0.0; 3]).abs();
    if origin <= 0.0 {
        return Err(ExperimentError::Domain(
            "the witness needs positive mollified mass at the origin".into(),
        ));
    }
    // Growth of one decade when lambda = -d; faster divergence only helps.
    let per_decade = sphere * origin.powf(p) * std::f64::consts::LN_10;
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut prev: Option<f64> = None;
    for (k, &delta) in deltas.iter().enumerate() {
        let t = integrate_radial(
            |r| smoothed.eval([r, 0.0, 0.0]).abs().powf(p) * r.powf(lambda + d - 1.0),
            delta,
            1.0,
            &relaxed_spec(spec),
        )?;
        let total = sphere * t.value;
        let verdict = match prev {
            None => Verdict::Pass,
            Some(before) => {
                if total - before >= 0.3 * per_decade {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        rep.push(Record {
            input: format!("annulus={:.0e}", delta),
            measured: total,
            expected: prev.map(|b| b + per_decade),
            tolerance: 0.7 * per_decade,
            error_estimate: sphere * t.error_estimate,
            verdict,
        });
        prev = Some(total);
        let _ = k;
    }
    Ok(())
}

// --- Campaign: membership classification -------------------------------------------

/// Classifies whether a radial field belongs to the weighted space: its
/// own norm against `(p, weight)` and its operator image's norm against
/// the conjugate exponent and dual weight must both be finite. The
/// operator image is tabulated once; its tail model is the exact kernel
/// decay for compactly supported fields, a fitted decay otherwise — and
/// when the sampled far field is indistinguishable from quadrature noise
/// the image is treated as effectively compact.
pub fn membership_check(
    v: &ScalarField,
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
) -> Result<MembershipVerdict, ExperimentError> {
    require_radial(v, "membership classification")?;
    if v.dim != params.d {
        return Err(ExperimentError::Domain(format!(
            "field dimension {} does not match parameters ({})",
            v.dim, params.d
        )));
    }
    let norm_primal = weighted_norm(v, params.p, weight, spec)?;

    let grid = table_grid_for(v);
    let tail = dual_tail_model(v, params, &grid, spec)?;
    let (image, _) = tabulate_radial_operator(
        |r| frac_laplacian(v, [r, 0.0, 0.0], params, spec),
        &grid,
        tail,
        params.d,
    )?;
    let p_dual = params.p / (params.p - 1.0);
    let dual_weight = weight.dual();
    let norm_dual = weighted_norm(&image, p_dual, &dual_weight, spec)?;

    let in_x = norm_primal.classification == NormClass::Finite
        && norm_dual.classification == NormClass::Finite;
    Ok(MembershipVerdict {
        norm_primal,
        norm_dual,
        in_x,
    })
}

/// Tail model for the tabulated operator image of `v`.
fn dual_tail_model(
    v: &ScalarField,
    params: &ProblemParams,
    grid: &TableGrid,
    spec: &QuadratureSpec,
) -> Result<TableTail, ExperimentError> {
    let kernel_decay = params.d as f64 + 2.0 * params.s;
    if v.support_radius.is_finite() {
        // Outside a compact support the operator is a kernel convolution:
        // the decay exponent is exact.
        return Ok(TableTail::PowerFit { q: kernel_decay });
    }
    // Probe the far field and fit, falling back to an effectively compact
    // model when the signal is drowned (e.g. the operator output of a
    // potential is again compactly supported up to quadrature noise).
    let radii: Vec<f64> = [0.125, 0.25, 0.5, 1.0]
        .iter()
        .map(|&f| f * grid.r_max)
        .collect();
    let mut samples = Vec::new();
    for &r in &radii {
        let ev = frac_laplacian(v, [r, 0.0, 0.0], params, spec)?;
        samples.push(DecaySample {
            radius: r,
            magnitude: ev.value.abs(),
            error_estimate: ev.error_estimate,
        });
    }
    match decay_fit(&samples) {
        Ok(fit) => Ok(TableTail::PowerFit { q: -fit.slope }),
        Err(ExperimentError::DegenerateFit { .. }) => Ok(TableTail::Compact),
        Err(e) => Err(e),
    }
}

/// Wraps a membership verdict as a report for serialization.
pub fn membership_report(
    verdict: &MembershipVerdict,
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
) -> ExperimentReport {
    let mut rep = base_report(
        "membership",
        params,
        weight.gamma0,
        weight.gamma,
        spec,
    );
    let class_value = |c: NormClass| match c {
        NormClass::Finite => 1.0,
        _ => 0.0,
    };
    rep.push(Record {
        input: "norm=a-primal".into(),
        measured: verdict.norm_primal.norm,
        expected: None,
        tolerance: 0.0,
        error_estimate: verdict.norm_primal.error_estimate,
        verdict: Verdict::Pass,
    });
    rep.push(Record {
        input: "norm=b-dual".into(),
        measured: verdict.norm_dual.norm,
        expected: None,
        tolerance: 0.0,
        error_estimate: verdict.norm_dual.error_estimate,
        verdict: Verdict::Pass,
    });
    rep.push(Record {
        input: "membership=in_space".into(),
        measured: class_value(verdict.norm_primal.classification)
            * class_value(verdict.norm_dual.classification),
        expected: None,
        tolerance: 0.0,
        error_estimate: 0.0,
        verdict: Verdict::Pass,
    });
    rep.finalize();
    rep
}

// --- Campaign: operator symmetry ---------------------------------------------------

/// Checks the weighted operator's symmetry: with the operator normalized
/// by the weight, the weighted pairings reduce to the two unweighted
/// duality pairings, which must agree; the quadratic form on the first
/// field must be nonnegative within its error budget. When the weight is
/// integrable (`gamma > d`, `d > 2s`) the constant direction joins the
/// space and its record (the operator mass of the first field) is
/// included — the regime where symmetry genuinely breaks.
pub fn symmetry_check(
    f: &ScalarField,
    g: &ScalarField,
    params: &ProblemParams,
    weight: &PowerWeight,
    spec: &QuadratureSpec,
) -> Result<ExperimentReport, ExperimentError> {
    let mut rep = base_report("symmetry_check", params, weight.gamma0, weight.gamma, spec);

    let run = || -> Result<(BilinearFormResult, BilinearFormResult, BilinearFormResult), NonlocalError> {
        let left = duality_pairing(f, g, params, spec, PairingSide::OperatorOnFirst)?;
        let right = duality_pairing(f, g, params, spec, PairingSide::OperatorOnSecond)?;
        let self_energy = duality_pairing(f, f, params, spec, PairingSide::OperatorOnFirst)?;
        Ok((left, right, self_energy))
    };
    match run() {
        Err(NonlocalError::Quadrature(_)) => {
            rep.push(unresolved_record("pairing=a-operator-first", FORM_TOLERANCE));
            rep.push(unresolved_record("pairing=b-operator-second", FORM_TOLERANCE));
            rep.push(unresolved_record("quadratic=self", 0.0));
        }
        Err(e) => return Err(e.into()),
        Ok((left, right, self_energy)) => {
            rep.push(value_record("pairing=a-operator-first", &left));
            rep.push(value_record("pairing=b-operator-second", &right));
            rep.push(pair_record("pair=adjoint", &left, &right, FORM_TOLERANCE));
            rep.push(Record {
                input: "quadratic=self".into(),
                measured: self_energy.value,
                expected: None,
                tolerance: 0.0,
                error_estimate: self_energy.error_estimate,
                verdict: if self_energy.value >= -3.0 * self_energy.error_estimate {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
            });
        }
    }

    let d = params.d as f64;
    if weight.gamma > d && d > 2.0 * params.s && f.is_radial {
        rep.push(constant_direction_record(f, params, spec)?);
    }

    rep.finalize();
    Ok(rep)
}

// --- Campaign: closed-form and spectral cross-checks ---------------------------------

/// Cross-checks the quadrature engine against independent references: the
/// closed-form values for the Gaussian at the origin in two parameter
/// sets, a spectral (Fourier) evaluation on a periodic box, and the
/// spectral Parseval identity.
pub fn oracle_check(spec: &QuadratureSpec) -> Result<ExperimentReport, ExperimentError> {
    use crate::oracle::{oracle_frac_laplacian, parseval_energies, PeriodicGrid};
    use crate::params::gamma_fn;

    let params1 = ProblemParams::new(1, 0.5, 2.0).map_err(|e| ExperimentError::Domain(e.to_string()))?;
    let mut rep = base_report("oracle_check", &params1, 0.0, 0.0, spec);

    // Closed form, d = 1, s = 1/2: 2 / sqrt(pi).
    {
        let f = crate::fields::make_gaussian([0.0; 3], 1.0, 1);
        let ev = frac_laplacian(&f, [0.0; 3], &params1, spec)?;
        let truth = 1.128_379_167_095_512_6_f64;
        rep.push(Record {
            input: "anchor=a-gaussian-d1".into(),
            measured: ev.value,
            expected: Some(truth),
            tolerance: 1e-3,
            error_estimate: ev.error_estimate,
            verdict: if (ev.value - truth).abs() <= 1e-3 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    }

    // Closed form, d = 2, s = 1/4.
    {
        let params2 =
            ProblemParams::new(2, 0.25, 2.0).map_err(|e| ExperimentError::Domain(e.to_string()))?;
        let f = crate::fields::make_gaussian([0.0; 3], 1.0, 2);
        let ev = frac_laplacian(&f, [0.0; 3], &params2, spec)?;
        let truth = 4.0_f64.powf(0.25) * gamma_fn(1.25) / gamma_fn(1.0);
        rep.push(Record {
            input: "anchor=b-gaussian-d2".into(),
            measured: ev.value,
            expected: Some(truth),
            tolerance: 1e-3,
            error_estimate: ev.error_estimate,
            verdict: if (ev.value - truth).abs() <= 1e-3 * truth {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    }

    // Spectral evaluation on a periodic box versus direct quadrature.
    {
        let grid = PeriodicGrid::new(1, 8192, 40.0).map_err(spectral_domain)?;
        let f = crate::fields::make_gaussian([0.0; 3], 1.0, 1);
        let sampled = grid.sample(&f).map_err(spectral_domain)?;
        let lap = oracle_frac_laplacian(&sampled, 0.5).map_err(spectral_domain)?;
        let mut worst = 0.0_f64;
        let mut worst_err = 0.0_f64;
        for &t in &[0.0, 0.5, 1.0] {
            let ev = frac_laplacian(&f, [t, 0.0, 0.0], &params1, spec)?;
            let spectral = lap.interpolate([t, 0.0, 0.0]);
            worst = worst.max((ev.value - spectral).abs());
            worst_err = worst_err.max(ev.error_estimate);
        }
        // The box periodizes the kernel; its images contribute at the
        // 1e-3 level for this box size, so the tolerance includes them.
        rep.push(Record {
            input: "spectral=box-comparison".into(),
            measured: worst,
            expected: Some(0.0),
            tolerance: 2e-3,
            error_estimate: worst_err,
            verdict: if worst <= 2e-3 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });

        // Parseval consistency of the spectral route itself.
        let (spectral_energy, direct_energy) =
            parseval_energies(&sampled, 0.5).map_err(spectral_domain)?;
        let rel = (spectral_energy - direct_energy).abs() / spectral_energy.abs().max(1e-300);
        rep.push(Record {
            input: "spectral=parseval".into(),
            measured: rel,
            expected: Some(0.0),
            tolerance: 1e-10,
            error_estimate: 0.0,
            verdict: if rel <= 1e-10 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    }

    rep.finalize();
    Ok(rep)
}

fn spectral_domain<E: std::fmt::Display>(e: E) -> ExperimentError {
    ExperimentError::Domain(format!("spectral reference unavailable: {e}"))
}
