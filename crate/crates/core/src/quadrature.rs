//! Deterministic adaptive quadrature on intervals and on `R^d`.
//!
//! The interval engine is a globally adaptive Gauss–Kronrod 7/15 scheme
//! (worst-panel-first bisection) with the classical error rescaling of the
//! embedded pair. Integrals over `R^d` are reduced to radial integrals:
//! genuinely radial integrands directly, general ones through a product
//! sphere rule (exact endpoints in d = 1, offset trapezoid on the circle in
//! d = 2, Gauss–Legendre × uniform azimuth in d = 3). Power singularities
//! at the origin are flattened by a graded substitution `r = delta t^m`,
//! and power-law tails beyond the outer split radius are integrated in
//! closed form from a coefficient fitted on the last octave.
//!
//! Determinism contract: identical spec and integrand produce bit-identical
//! results. The subdivision order is fixed (ties broken toward the leftmost
//! panel) and final values are pairwise-summed over panels sorted by left
//! endpoint, so the reduction tree does not depend on scheduling.

use crate::params::sphere_area;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the quadrature engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("invalid integration interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error(
        "quadrature budget exhausted: best value {value} with error estimate \
         {error_estimate} above target {target}"
    )]
    ToleranceNotMet {
        value: f64,
        error_estimate: f64,
        target: f64,
    },
    #[error("tail exponent q = {q} is not integrable in dimension d = {d} (needs q > d)")]
    NonIntegrableTail { q: f64, d: usize },
    #[error("origin exponent sigma = {sigma} is not integrable in dimension d = {d}")]
    NonIntegrableOrigin { sigma: f64, d: usize },
    #[error("integrand has unbounded support but no decay hint; cannot choose a tail model")]
    MissingDecayHint,
    #[error("dimension d = {0} supported only for radial integrands")]
    UnsupportedDimension(usize),
}

/// Tolerances and splitting radii steering one integration call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Radius separating the (possibly singular) core from the midfield.
    pub inner_split: f64,
    /// Radius beyond which the power-law tail model takes over.
    pub outer_split: f64,
    /// Relative tolerance target.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Maximum number of panel bisections per adaptive call.
    pub max_subdivisions: usize,
    /// Order of the angular rule for d >= 2 (points scale linearly with it).
    pub sphere_rule_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            inner_split: 1e-3,
            outer_split: 64.0,
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
            sphere_rule_order: 16,
        }
    }
}

impl QuadratureSpec {
    /// Default spec with split radii proportional to a field length scale:
    /// core below `1e-3 * scale`, tail model beyond `64 * scale`.
    pub fn for_scale(scale: f64) -> Self {
        Self {
            inner_split: 1e-3 * scale,
            outer_split: 64.0 * scale,
            ..Self::default()
        }
    }

    /// Checks the type invariants.
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.inner_split > 0.0 && self.inner_split < self.outer_split) {
            return Err(QuadratureError::InvalidSpec(format!(
                "need 0 < inner_split < outer_split, got {} and {}",
                self.inner_split, self.outer_split
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidSpec(format!(
                "tolerances must be positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidSpec(
                "subdivision budget must be at least 1".into(),
            ));
        }
        if self.sphere_rule_order < 2 {
            return Err(QuadratureError::InvalidSpec(
                "sphere rule order must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one integration call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResult {
    /// The computed integral.
    pub value: f64,
    /// Rigorous-style error estimate (embedded-pair based, nonnegative).
    pub error_estimate: f64,
    /// Number of panel bisections spent.
    pub subdivisions_used: usize,
    /// Fraction of |value| contributed by the extrapolated tail (0 when no
    /// tail model was used; clamped to [0, 1]).
    pub tail_fraction: f64,
}

// --- Gauss–Kronrod 7/15 nodes and weights ------------------------------

/// Kronrod abscissae on [0, 1] side of the symmetric 15-point rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Embedded 7-point Gauss weights (nodes are the odd-indexed `XGK`).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// One 15-point Kronrod evaluation on [a, b] with the classical
/// embedded-pair error rescaling.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);

    let fc = f(centr);
    let mut resg = WG[3] * fc;
    let mut resk = WGK[7] * fc;
    let mut resabs = WGK[7] * fc.abs();
    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        let fsum = f1 + f2;
        resg += WG[j] * fsum;
        resk += WGK[jtw] * fsum;
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        if jtwm1 == 7 {
            continue;
        }
        let absc = hlgth * XGK[jtwm1];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        let fsum = f1 + f2;
        resk += WGK[jtwm1] * fsum;
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let value = resk * hlgth;
    let resabs = resabs * hlgth.abs();
    let resasc = resasc * hlgth.abs();
    let raw_err = ((resk - resg) * hlgth).abs();
    let error = rescale_error(raw_err, resabs, resasc);

    Panel {
        a,
        b,
        value,
        error,
    }
}

/// QUADPACK-style error rescaling for the embedded pair.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err;
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let tiny_floor = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny_floor {
        let min_err = 50.0 * f64::EPSILON * resabs;
        if min_err > e {
            e = min_err;
        }
    }
    e
}

/// Sums a slice pairwise (fixed reduction tree), for reproducible totals
/// that do not depend on accumulation order quirks.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Globally adaptive integration of `g` over the finite interval [a, b].
fn adaptive_interval(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(QuadratureError::InvalidInterval { a, b });
    }

    let mut panels = vec![gk15(g, a, b)];
    let mut subdivisions = 0usize;

    loop {
        let total_value = summed(&panels, |p| p.value);
        let total_error = summed(&panels, |p| p.error);
        let target = spec.abs_tol.max(spec.rel_tol * total_value.abs());

        if total_error <= target {
            return Ok(IntegralResult {
                value: total_value,
                error_estimate: total_error,
                subdivisions_used: subdivisions,
                tail_fraction: 0.0,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(QuadratureError::ToleranceNotMet {
                value: total_value,
                error_estimate: total_error,
                target,
            });
        }

        // Worst panel first; ties resolved toward the leftmost panel so the
        // subdivision order is fully deterministic.
        let mut worst = 0usize;
        for (i, p) in panels.iter().enumerate() {
            if p.error > panels[worst].error
                || (p.error == panels[worst].error && p.a < panels[worst].a)
            {
                worst = i;
            }
        }
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // Interval no longer bisectable in floating point; accept.
            let total_value = summed(&panels, |p| p.value);
            let total_error = summed(&panels, |p| p.error);
            return Ok(IntegralResult {
                value: total_value,
                error_estimate: total_error,
                subdivisions_used: subdivisions,
                tail_fraction: 0.0,
            });
        }
        panels[worst] = gk15(g, pa, mid);
        panels.push(gk15(g, mid, pb));
        subdivisions += 1;
    }
}

/// Pairwise-sums a panel field over panels sorted by left endpoint.
fn summed(panels: &[Panel], field: impl Fn(&Panel) -> f64) -> f64 {
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].a.total_cmp(&panels[j].a));
    let vals: Vec<f64> = order.iter().map(|&i| field(&panels[i])).collect();
    pairwise_sum(&vals)
}

/// Adaptive integration of a scalar function over a finite interval
/// `[a, b]` with `a >= 0` (radial coordinates and 1D reductions).
pub fn integrate_radial(
    g: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    spec.validate()?;
    if a < 0.0 {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    adaptive_interval(&g, a, b, spec)
}

// --- Sphere rules -------------------------------------------------------

/// Quadrature rule on the unit sphere `S^{d-1}`: pairs of (unit point,
/// weight) with weights summing to the sphere area.
///
/// * d = 1: the two endpoints, weight 1 each (exact).
/// * d = 2: offset trapezoid with `2 * order` points (spectrally accurate).
/// * d = 3: Gauss–Legendre in the polar cosine times a uniform offset
///   azimuth grid, `order * 2*order` points; exact for spherical
///   polynomials up to degree about `2 * order - 1`.
pub fn sphere_rule(d: usize, order: usize) -> Result<Vec<([f64; 3], f64)>, QuadratureError> {
    match d {
        1 => Ok(vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)]),
        2 => {
            let n = 2 * order.max(2);
            let w = 2.0 * std::f64::consts::PI / n as f64;
            Ok((0..n)
                .map(|j| {
                    let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                    ([theta.cos(), theta.sin(), 0.0], w)
                })
                .collect())
        }
        3 => {
            let k = order.max(2);
            let m = 2 * k;
            let nodes = gauss_legendre(k);
            let wphi = 2.0 * std::f64::consts::PI / m as f64;
            let mut rule = Vec::with_capacity(k * m);
            for &(ct, wt) in &nodes {
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                for i in 0..m {
                    let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    rule.push(([st * phi.cos(), st * phi.sin(), ct], wt * wphi));
                }
            }
            Ok(rule)
        }
        _ => Err(QuadratureError::UnsupportedDimension(d)),
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// Legendre recurrence. Deterministic; accurate to machine precision.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // Recompute derivative at the converged node for the weight.
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    // Ascending node order for a stable, deterministic layout.
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

// --- Integration over R^d ----------------------------------------------

/// How an integrand behaves far from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSpec {
    /// Numerically negligible beyond this radius (compact support or
    /// super-polynomial decay); no tail model is used.
    Compact { radius: f64 },
    /// Behaves like `c |x|^{-exponent}` at infinity; the coefficient is
    /// fitted on the last octave before the outer split radius.
    PowerLaw { exponent: f64 },
}

/// An integrand over `R^d` with the structural hints the engine needs:
/// dimension, radiality, origin exponent, and tail behavior. Points are
/// passed as `[f64; 3]` with trailing zero coordinates for `d < 3`.
pub struct RdIntegrand<'a> {
    pub dim: usize,
    pub eval: &'a (dyn Fn([f64; 3]) -> f64 + Sync),
    /// Radial about the origin: the engine then samples one ray only.
    pub is_radial: bool,
    /// Power behavior `|x|^sigma` as `x -> 0` (0 for bounded integrands).
    pub origin_exponent: f64,
    pub tail: TailSpec,
}

impl<'a> RdIntegrand<'a> {
    /// Angular average of the integrand at radius `r` (the integrand itself
    /// on one ray when radial), times the sphere area.
    fn shell_integral(
        &self,
        r: f64,
        rule: &[([f64; 3], f64)],
    ) -> f64 {
        if self.is_radial {
            (self.eval)([r, 0.0, 0.0]) * sphere_area(self.dim)
        } else {
            let vals: Vec<f64> = rule
                .iter()
                .map(|&(u, w)| w * (self.eval)([r * u[0], r * u[1], r * u[2]]))
                .collect();
            pairwise_sum(&vals)
        }
    }
}

/// Closed-form tail of a fitted power law: integrates
/// `coefficient * |x|^{-q}` over `|x| > a_outer` in dimension `d`.
pub fn integrate_tail(
    d: usize,
    q: f64,
    a_outer: f64,
    coefficient: f64,
) -> Result<f64, QuadratureError> {
    if !(q > d as f64) {
        return Err(QuadratureError::NonIntegrableTail { q, d });
    }
    Ok(coefficient * sphere_area(d) * a_outer.powf(d as f64 - q) / (q - d as f64))
}

/// Fits the coefficient of an assumed `c r^{-q}` law from 8 log-spaced
/// samples of the angular average on `[a/2, a]`. Returns the mean
/// coefficient and the maximum deviation from it (a spread, used as an
/// error proxy).
fn fit_tail_coefficient(
    integrand: &RdIntegrand,
    rule: &[([f64; 3], f64)],
    q: f64,
    a_outer: f64,
) -> (f64, f64) {
    let area = sphere_area(integrand.dim);
    let lo = 0.5 * a_outer;
    let mut coeffs = [0.0_f64; 8];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let r = lo * (a_outer / lo).powf(i as f64 / 7.0);
        // Angular mean of the raw integrand at radius r, times r^q.
        let mean = integrand.shell_integral(r, rule) / area;
        *c = mean * r.powf(q);
    }
    let mean = pairwise_sum(&coeffs) / 8.0;
    let spread = coeffs
        .iter()
        .map(|c| (c - mean).abs())
        .fold(0.0_f64, f64::max);
    (mean, spread)
}

/// Integrates an integrand over `R^d`.
///
/// The domain is split at `spec.inner_split` (graded substitution flattens
/// a power singularity at the origin) and at the tail boundary: compactly
/// supported integrands are integrated out to their support radius, while
/// power-tailed integrands are cut at `spec.outer_split` and completed by
/// the closed-form tail of a fitted power law.
pub fn integrate_rd(
    integrand: &RdIntegrand,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadratureError> {
    spec.validate()?;
    let d = integrand.dim;
    if d < 1 {
        return Err(QuadratureError::UnsupportedDimension(d));
    }
    if d > 3 && !integrand.is_radial {
        return Err(QuadratureError::UnsupportedDimension(d));
    }

    let rule = if integrand.is_radial || d == 1 {
        if d == 1 {
            sphere_rule(1, spec.sphere_rule_order)?
        } else {
            Vec::new()
        }
    } else {
        sphere_rule(d, spec.sphere_rule_order)?
    };
    // d = 1 non-radial integrands still use the two-point endpoint rule.
    let rule_ref: &[([f64; 3], f64)] = &rule;

    // F(r) = r^{d-1} * (shell integral of the integrand at radius r).
    let profile = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        r.powi(d as i32 - 1) * integrand.shell_integral(r, rule_ref)
    };

    let sigma = integrand.origin_exponent;
    let beta = sigma + (d as f64 - 1.0);
    if beta <= -1.0 {
        return Err(QuadratureError::NonIntegrableOrigin { sigma, d });
    }

    let (outer_bound, tail_exponent): (f64, Option<f64>) = match integrand.tail {
        TailSpec::Compact { radius } => {
            if !radius.is_finite() || radius <= 0.0 {
                return Err(QuadratureError::MissingDecayHint);
            }
            (radius, None)
        }
        TailSpec::PowerLaw { exponent } => {
            if !(exponent > d as f64) {
                return Err(QuadratureError::NonIntegrableTail { q: exponent, d });
            }
            (spec.outer_split, Some(exponent))
        }
    };

    let mut values: Vec<f64> = Vec::with_capacity(3);
    let mut errors: Vec<f64> = Vec::with_capacity(3);
    let mut subdivisions = 0usize;

    let delta = spec.inner_split.min(0.5 * outer_bound);

    if sigma < 0.0 {
        // Graded core: r = delta * t^m turns F ~ r^beta into t^{m(beta+1)-1},
        // with m chosen so the transformed integrand vanishes at least
        // quadratically at t = 0.
        let m = ((3.0 / (beta + 1.0)).ceil().max(1.0)).min(8.0);
        let core = adaptive_interval(
            &|t: f64| {
                if t == 0.0 {
                    0.0
                } else {
                    let r = delta * t.powf(m);
                    profile(r) * delta * m * t.powf(m - 1.0)
                }
            },
            0.0,
            1.0,
            spec,
        )?;
        values.push(core.value);
        errors.push(core.error_estimate);
        subdivisions += core.subdivisions_used;

        let mid = adaptive_interval(&profile, delta, outer_bound, spec)?;
        values.push(mid.value);
        errors.push(mid.error_estimate);
        subdivisions += mid.subdivisions_used;
    } else {
        let mid = adaptive_interval(&profile, 0.0, outer_bound, spec)?;
        values.push(mid.value);
        errors.push(mid.error_estimate);
        subdivisions += mid.subdivisions_used;
    }

    let mut tail_value = 0.0;
    if let Some(q) = tail_exponent {
        let (coeff, spread) = fit_tail_coefficient(integrand, rule_ref, q, outer_bound);
        tail_value = integrate_tail(d, q, outer_bound, coeff)?;
        let tail_err = integrate_tail(d, q, outer_bound, spread)?.abs();
        values.push(tail_value);
        errors.push(tail_err);
    }

    let value = pairwise_sum(&values);
    let error_estimate = pairwise_sum(&errors);
    let tail_fraction = if value != 0.0 {
        (tail_value.abs() / value.abs()).min(1.0)
    } else {
        0.0
    };

    Ok(IntegralResult {
        value,
        error_estimate,
        subdivisions_used: subdivisions,
        tail_fraction,
    })
}

/// Least-squares slope and intercept of `log|y|` against `log x` over
/// strictly positive samples; `None` when fewer than two usable points
/// remain or the abscissae are degenerate. Used for decay-rate fits.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.abs() > 0.0 && x.is_finite() && y.is_finite())
        .map(|&(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * (n * sxx).abs().max(1.0) {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Some((slope, intercept))
}
