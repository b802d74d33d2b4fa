//! Concrete scalar fields with the metadata quadrature needs.
//!
//! All fields carry their dimension, an exact support radius (infinite when
//! not compactly supported), a numerically effective radius, conservative
//! sup-norm bounds for gradient and Hessian, a radial-symmetry flag, and an
//! optional power-decay hint for the tail model. Evaluation is pure and
//! bit-deterministic; mollified fields memoize point values behind a mutex,
//! which behaves as a pure memo (same point, same value).

use crate::quadrature::{
    integrate_rd, IntegralResult, QuadratureError, QuadratureSpec, RdIntegrand, TailSpec,
};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Errors from field construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("weight is singular at the origin (inner exponent {exponent})")]
    SingularPoint { exponent: f64 },
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
}

/// Euclidean norm of a padded point.
pub fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// A scalar function on `R^d` plus the structural metadata the quadrature
/// and operator layers rely on. Points use `[f64; 3]` with trailing zeros
/// when `d < 3`.
#[derive(Clone)]
pub struct ScalarField {
    pub dim: usize,
    evaluate: Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>,
    /// Radius about the origin outside which the field is exactly zero;
    /// `f64::INFINITY` when the support is unbounded.
    pub support_radius: f64,
    /// Radius beyond which the field is numerically negligible (equals
    /// `support_radius` for compactly supported fields, finite for
    /// super-polynomially decaying ones, infinite for power tails).
    pub effective_radius: f64,
    /// Valid upper bound for `sup |grad f|` (may be `f64::INFINITY`).
    pub grad_bound: f64,
    /// Valid upper bound for `sup |D^2 f|` (may be `f64::INFINITY`).
    pub hess_bound: f64,
    /// Radial about the origin.
    pub is_radial: bool,
    /// `q` such that `|f(x)| <~ |x|^{-q}` at infinity; `f64::INFINITY`
    /// means super-polynomial decay; `None` means compact support.
    pub decay_exponent_hint: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .field("effective_radius", &self.effective_radius)
            .field("grad_bound", &self.grad_bound)
            .field("hess_bound", &self.hess_bound)
            .field("is_radial", &self.is_radial)
            .field("decay_exponent_hint", &self.decay_exponent_hint)
            .finish()
    }
}

impl ScalarField {
    /// Evaluates the field at a point.
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        (self.evaluate)(x)
    }

    /// The field shifted by `shift`: `x -> f(x - shift)`. Radiality about
    /// the origin is lost for nonzero shifts; support and effective radii
    /// grow by `|shift|`.
    pub fn translated(&self, shift: [f64; 3]) -> ScalarField {
        let inner = self.evaluate.clone();
        let offset = norm(shift);
        ScalarField {
            dim: self.dim,
            evaluate: Arc::new(move |x: [f64; 3]| {
                inner([x[0] - shift[0], x[1] - shift[1], x[2] - shift[2]])
            }),
            support_radius: self.support_radius + offset,
            effective_radius: self.effective_radius + offset,
            grad_bound: self.grad_bound,
            hess_bound: self.hess_bound,
            is_radial: self.is_radial && offset == 0.0,
            decay_exponent_hint: self.decay_exponent_hint,
        }
    }

    /// Pointwise linear combination `a f + b g` with conservatively
    /// propagated metadata (triangle inequality on the bounds).
    pub fn linear_combination(a: f64, f: &ScalarField, b: f64, g: &ScalarField) -> ScalarField {
        assert_eq!(f.dim, g.dim, "fields must share a dimension");
        let (fe, ge) = (f.evaluate.clone(), g.evaluate.clone());
        ScalarField {
            dim: f.dim,
            evaluate: Arc::new(move |x: [f64; 3]| a * fe(x) + b * ge(x)),
            support_radius: f.support_radius.max(g.support_radius),
            effective_radius: f.effective_radius.max(g.effective_radius),
            grad_bound: a.abs() * f.grad_bound + b.abs() * g.grad_bound,
            hess_bound: a.abs() * f.hess_bound + b.abs() * g.hess_bound,
            is_radial: f.is_radial && g.is_radial,
            decay_exponent_hint: match (f.decay_exponent_hint, g.decay_exponent_hint) {
                (None, None) => None,
                (Some(q), None) | (None, Some(q)) => Some(q),
                (Some(q1), Some(q2)) => Some(q1.min(q2)),
            },
        }
    }

    /// Builds a field from a radial profile `r -> value` with explicit
    /// metadata; the caller vouches for the bounds.
    pub fn from_radial_profile(
        dim: usize,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_radius: f64,
        effective_radius: f64,
        grad_bound: f64,
        hess_bound: f64,
        decay_exponent_hint: Option<f64>,
    ) -> ScalarField {
        ScalarField {
            dim,
            evaluate: Arc::new(move |x: [f64; 3]| profile(norm(x))),
            support_radius,
            effective_radius,
            grad_bound,
            hess_bound,
            is_radial: true,
            decay_exponent_hint,
        }
    }

    /// Tail model for integrating this field (or a bounded transform of
    /// it): compact cut at the effective radius when one exists, fitted
    /// power law otherwise.
    pub fn tail_spec(&self) -> Result<TailSpec, QuadratureError> {
        if self.effective_radius.is_finite() {
            Ok(TailSpec::Compact {
                radius: self.effective_radius,
            })
        } else {
            match self.decay_exponent_hint {
                Some(q) if q.is_finite() => Ok(TailSpec::PowerLaw { exponent: q }),
                _ => Err(QuadratureError::MissingDecayHint),
            }
        }
    }
}

/// Scans a radial profile's first and second derivatives (central
/// differences on the closed-form profile) and returns safe sup-norm
/// bounds for gradient and Hessian of the induced radial field on `R^d`,
/// including the tangential `|F'(r)/r|` curvature term.
fn scan_radial_bounds(profile: &dyn Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let n = 2400;
    let h1 = hi * 5e-7;
    let h2 = hi * 2e-5;
    let mut grad: f64 = 0.0;
    let mut hess: f64 = 0.0;
    for i in 1..=n {
        let t = hi * i as f64 / (n as f64 + 1.0);
        let d1 = (profile(t + h1) - profile(t - h1)) / (2.0 * h1);
        let d2 = (profile(t + h2) - 2.0 * profile(t) + profile(t - h2)) / (h2 * h2);
        grad = grad.max(d1.abs());
        hess = hess.max(d2.abs()).max((d1 / t).abs());
    }
    (grad * 1.1, hess * 1.1)
}

/// Smooth bump supported on the open ball of the given radius about
/// `center`: `exp(-1 / (1 - |x-center|^2 / radius^2))` inside, zero
/// outside. Its value at the center is `exp(-1)`.
pub fn make_bump(center: [f64; 3], radius: f64, dim: usize) -> ScalarField {
    assert!(radius > 0.0, "bump radius must be positive");
    let profile = move |t: f64| -> f64 {
        let u = t / radius;
        if u.abs() < 1.0 {
            (-1.0 / (1.0 - u * u)).exp()
        } else {
            0.0
        }
    };
    let (grad, hess) = scan_radial_bounds(&|t| profile(t), radius);
    let offset = norm(center);
    ScalarField {
        dim,
        evaluate: Arc::new(move |x: [f64; 3]| {
            profile(norm([x[0] - center[0], x[1] - center[1], x[2] - center[2]]))
        }),
        support_radius: offset + radius,
        effective_radius: offset + radius,
        grad_bound: grad,
        hess_bound: hess,
        is_radial: offset == 0.0,
        decay_exponent_hint: None,
    }
}

/// Gaussian `exp(-|x-center|^2 / width^2)`. Unbounded support with
/// super-polynomial decay; the effective radius is where the value drops
/// below 1e-300.
pub fn make_gaussian(center: [f64; 3], width: f64, dim: usize) -> ScalarField {
    assert!(width > 0.0, "gaussian width must be positive");
    let profile = move |t: f64| -> f64 {
        let u = t / width;
        (-u * u).exp()
    };
    let (grad, hess) = scan_radial_bounds(&|t| profile(t), 4.0 * width);
    let offset = norm(center);
    ScalarField {
        dim,
        evaluate: Arc::new(move |x: [f64; 3]| {
            profile(norm([x[0] - center[0], x[1] - center[1], x[2] - center[2]]))
        }),
        support_radius: f64::INFINITY,
        // exp(-700) < 1e-300: |x - center| = width sqrt(700).
        effective_radius: offset + width * 700.0_f64.sqrt(),
        grad_bound: grad,
        hess_bound: hess,
        is_radial: offset == 0.0,
        decay_exponent_hint: Some(f64::INFINITY),
    }
}

/// The gluing function `exp(-1/t)` extended by zero to `t <= 0`.
fn glue(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Radial smoothstep profile: 1 for `r <= 1`, 0 for `r >= 2`, and the
/// standard `exp(-1/t)` partition ratio in between (monotone, smooth).
fn cutoff_profile(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = 2.0 - r;
        glue(t) / (glue(t) + glue(1.0 - t))
    }
}

/// The cut-off family `xi_R(x) = xi(x/R)`: base profile equal to 1 on the
/// unit ball, 0 outside radius 2, smooth and monotone in between.
#[derive(Debug, Clone)]
pub struct CutoffFamily {
    dim: usize,
    base_grad: f64,
    base_hess: f64,
}

impl CutoffFamily {
    pub fn new(dim: usize) -> Self {
        let (g, h) = scan_radial_bounds(&cutoff_profile, 2.0);
        Self {
            dim,
            base_grad: g,
            base_hess: h,
        }
    }

    /// The base profile `xi` (scale 1).
    pub fn base(&self) -> ScalarField {
        self.at_scale(1.0)
    }

    /// `xi_R(x) = xi(x/R)`: plateau of radius `R`, support of radius `2R`,
    /// derivative bounds scaled by `1/R` and `1/R^2`.
    pub fn at_scale(&self, r_scale: f64) -> ScalarField {
        assert!(r_scale >= 1.0, "cutoff scale must be at least 1");
        ScalarField {
            dim: self.dim,
            evaluate: Arc::new(move |x: [f64; 3]| cutoff_profile(norm(x) / r_scale)),
            support_radius: 2.0 * r_scale,
            effective_radius: 2.0 * r_scale,
            grad_bound: self.base_grad / r_scale,
            hess_bound: self.base_hess / (r_scale * r_scale),
            is_radial: true,
            decay_exponent_hint: None,
        }
    }
}

/// Two-power radial weight: `rho(x) = |x|^{-gamma0}` for `|x| <= 1` and
/// `|x|^{-gamma}` for `|x| > 1` (continuous at `|x| = 1`), together with
/// the exponent `p` used to form the dual weight `rho^{-(p'-1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWeight {
    pub gamma0: f64,
    pub gamma: f64,
    pub p: f64,
}

impl PowerWeight {
    pub fn new(gamma0: f64, gamma: f64, p: f64) -> Result<Self, FieldError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(FieldError::InvalidParameter(format!(
                "weight exponent p must exceed 1, got {p}"
            )));
        }
        if !gamma0.is_finite() || !gamma.is_finite() {
            return Err(FieldError::InvalidParameter(
                "weight exponents must be finite".into(),
            ));
        }
        Ok(Self { gamma0, gamma, p })
    }

    /// The single-power weight `|x|^{lambda}` (mollification norms),
    /// encoded with both branch exponents equal to `-lambda`.
    pub fn pure_power(lambda: f64, p: f64) -> Result<Self, FieldError> {
        Self::new(-lambda, -lambda, p)
    }

    /// Weight value at radius `r > 0`; returns `INFINITY` at `r = 0` for
    /// singular weights and 1 when the inner exponent is zero.
    pub fn eval_radius(&self, r: f64) -> f64 {
        if r == 0.0 {
            return if self.gamma0 > 0.0 {
                f64::INFINITY
            } else if self.gamma0 == 0.0 {
                1.0
            } else {
                0.0
            };
        }
        if r <= 1.0 {
            r.powf(-self.gamma0)
        } else {
            r.powf(-self.gamma)
        }
    }

    /// Weight value at a point; `x = 0` is a singular point when the inner
    /// exponent is positive.
    pub fn eval(&self, x: [f64; 3]) -> Result<f64, FieldError> {
        let r = norm(x);
        if r == 0.0 && self.gamma0 > 0.0 {
            return Err(FieldError::SingularPoint {
                exponent: self.gamma0,
            });
        }
        Ok(self.eval_radius(r))
    }

    /// The dual weight `rho' = rho^{-(p'-1)}`, carrying the conjugate
    /// exponent. For `p = 2` this is the reciprocal weight.
    pub fn dual(&self) -> PowerWeight {
        let p_conj = self.p / (self.p - 1.0);
        let factor = -(p_conj - 1.0);
        PowerWeight {
            gamma0: self.gamma0 * factor,
            gamma: self.gamma * factor,
            p: p_conj,
        }
    }
}

/// Field with a pure inner power profile: `|x|^{-lambda/p}` on the unit
/// ball, zero outside. For `lambda = -d` this is the bounded profile
/// `|x|^{d/p}`, whose mollification escapes the `lambda = -d` weighted
/// space (log-divergent norm); for `lambda > 0` it is singular at the
/// origin but still p-integrable against `|x|^{lambda}`.
pub fn make_inner_power_field(lambda: f64, p: f64, dim: usize) -> ScalarField {
    assert!(p > 1.0, "exponent p must exceed 1");
    let alpha = -lambda / p;
    ScalarField {
        dim,
        evaluate: Arc::new(move |x: [f64; 3]| {
            let r = norm(x);
            if r >= 1.0 {
                0.0
            } else if r == 0.0 {
                if alpha > 0.0 {
                    0.0
                } else if alpha == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                r.powf(alpha)
            }
        }),
        support_radius: 1.0,
        effective_radius: 1.0,
        grad_bound: f64::INFINITY,
        hess_bound: f64::INFINITY,
        is_radial: true,
        decay_exponent_hint: None,
    }
}

/// The borderline non-integrable field `1 / (|x|^d |log |x||)` on the ball
/// of radius 1/2, zero outside. Its integral over any punctured ball
/// diverges like `log log (1/r)`, so it has no locally integrable
/// extension across the origin.
pub fn make_log_borderline_field(dim: usize) -> ScalarField {
    let d = dim as f64;
    ScalarField {
        dim,
        evaluate: Arc::new(move |x: [f64; 3]| {
            let r = norm(x);
            if r >= 0.5 || r == 0.0 {
                0.0
            } else {
                1.0 / (r.powf(d) * r.ln().abs())
            }
        }),
        support_radius: 0.5,
        effective_radius: 0.5,
        grad_bound: f64::INFINITY,
        hess_bound: f64::INFINITY,
        is_radial: true,
        decay_exponent_hint: None,
    }
}

/// Field with an exact power tail: `(1 + |x|^2)^{-q/2}`, radial, smooth,
/// decaying like `|x|^{-q}`.
pub fn make_power_tail(q: f64, dim: usize) -> ScalarField {
    assert!(q > 0.0, "tail exponent must be positive");
    let profile = move |t: f64| (1.0 + t * t).powf(-q / 2.0);
    let (grad, hess) = scan_radial_bounds(&profile, 6.0);
    ScalarField {
        dim,
        evaluate: Arc::new(move |x: [f64; 3]| profile(norm(x))),
        support_radius: f64::INFINITY,
        effective_radius: f64::INFINITY,
        grad_bound: grad,
        hess_bound: hess,
        is_radial: true,
        decay_exponent_hint: Some(q),
    }
}

/// A mollifier: the normalized standard bump at scale `epsilon`,
/// `eta_eps(z) = eps^{-d} eta(z/eps)`, nonnegative, supported in the ball
/// of radius `epsilon`, with unit mass.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub dim: usize,
    pub epsilon: f64,
    /// `1 / integral of the unit bump` in this dimension, computed once by
    /// quadrature at 1e-10 tolerance.
    normalization: f64,
}

impl Mollifier {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self, QuadratureError> {
        if !(epsilon > 0.0) {
            return Err(QuadratureError::InvalidSpec(format!(
                "mollifier scale must be positive, got {epsilon}"
            )));
        }
        let spec = QuadratureSpec {
            rel_tol: 1e-10,
            ..QuadratureSpec::default()
        };
        let unit = RdIntegrand {
            dim,
            eval: &|x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            },
            is_radial: true,
            origin_exponent: 0.0,
            tail: TailSpec::Compact { radius: 1.0 },
        };
        let mass = integrate_rd(&unit, &spec)?;
        Ok(Self {
            dim,
            epsilon,
            normalization: 1.0 / mass.value,
        })
    }

    /// Evaluates `eta_eps` at a point.
    pub fn eval(&self, z: [f64; 3]) -> f64 {
        let u2 = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / (self.epsilon * self.epsilon);
        if u2 < 1.0 {
            self.normalization * self.epsilon.powi(-(self.dim as i32)) * (-1.0 / (1.0 - u2)).exp()
        } else {
            0.0
        }
    }

    /// The mollifier as a ScalarField.
    pub fn as_field(&self) -> ScalarField {
        let m = self.clone();
        let peak = self.normalization * self.epsilon.powi(-(self.dim as i32));
        ScalarField {
            dim: self.dim,
            evaluate: Arc::new(move |z: [f64; 3]| m.eval(z)),
            support_radius: self.epsilon,
            effective_radius: self.epsilon,
            // Bounds for the unit bump scale like 1/eps^{d+1}, 1/eps^{d+2}
            // relative to the peak; a crude but valid envelope.
            grad_bound: peak * 2.0 / self.epsilon,
            hess_bound: peak * 12.0 / (self.epsilon * self.epsilon),
            is_radial: true,
            decay_exponent_hint: None,
        }
    }
}

/// Mollification `f_eps(x) = integral of eta_eps(z) f(x - z) dz` over the
/// ball `|z| <= eps`, evaluated by adaptive quadrature and memoized per
/// point. Construction probes one evaluation so budget problems surface
/// immediately; later evaluations fall back to the best-effort value if
/// the tolerance is not met at some point.
pub fn mollify(
    f: &ScalarField,
    m: &Mollifier,
    spec: &QuadratureSpec,
) -> Result<ScalarField, QuadratureError> {
    assert_eq!(f.dim, m.dim, "field and mollifier dimensions must agree");
    let dim = f.dim;
    let eps = m.epsilon;
    let inner = f.clone();
    let moll = m.clone();
    let local_spec = QuadratureSpec {
        inner_split: (1e-3 * eps).min(spec.inner_split),
        outer_split: spec.outer_split.max(2.0 * eps),
        ..*spec
    };
    let cache: Arc<Mutex<HashMap<[u64; 3], f64>>> = Arc::new(Mutex::new(HashMap::new()));

    let evaluate = {
        let inner = inner.clone();
        move |x: [f64; 3]| -> f64 {
            let key = [x[0].to_bits(), x[1].to_bits(), x[2].to_bits()];
            if let Some(&v) = cache.lock().unwrap().get(&key) {
                return v;
            }
            let integrand = RdIntegrand {
                dim,
                eval: &|z: [f64; 3]| {
                    moll.eval(z) * inner.eval([x[0] - z[0], x[1] - z[1], x[2] - z[2]])
                },
                is_radial: false,
                origin_exponent: 0.0,
                tail: TailSpec::Compact { radius: eps },
            };
            let v = match integrate_rd(&integrand, &local_spec) {
                Ok(IntegralResult { value, .. }) => value,
                Err(QuadratureError::ToleranceNotMet { value, .. }) => value,
                Err(_) => f64::NAN,
            };
            cache.lock().unwrap().insert(key, v);
            v
        }
    };

    // Probe once at the origin so spec/budget errors surface eagerly.
    let probe = RdIntegrand {
        dim,
        eval: &|z: [f64; 3]| m.eval(z) * f.eval([-z[0], -z[1], -z[2]]),
        is_radial: false,
        origin_exponent: 0.0,
        tail: TailSpec::Compact { radius: eps },
    };
    match integrate_rd(&probe, &local_spec) {
        Ok(_) | Err(QuadratureError::ToleranceNotMet { .. }) => {}
        Err(e) => return Err(e),
    }

    Ok(ScalarField {
        dim,
        evaluate: Arc::new(evaluate),
        support_radius: f.support_radius + eps,
        effective_radius: if f.effective_radius.is_finite() {
            f.effective_radius + eps
        } else {
            f64::INFINITY
        },
        // Mollification does not increase derivative sup norms; keep the
        // parent's bounds (conservative when they are infinite).
        grad_bound: f.grad_bound,
        hess_bound: f.hess_bound,
        is_radial: f.is_radial,
        decay_exponent_hint: f.decay_exponent_hint,
    })
}

/// How a tabulated radial function continues beyond its last knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialTail {
    /// Zero beyond the last knot.
    Zero,
    /// Two-term power law `c1 r^{-q} + c2 r^{-q-2}`.
    TwoTerm { q: f64, c1: f64, c2: f64 },
}

/// Cubic-spline interpolant of a radial profile sampled on an increasing
/// knot grid, with a prescribed continuation beyond the last knot. The
/// left end is clamped to zero slope (smooth radial functions have even
/// profiles), the right end uses the natural condition.
#[derive(Debug, Clone)]
pub struct RadialTable {
    rs: Vec<f64>,
    vals: Vec<f64>,
    /// Second derivatives at the knots (spline moments).
    moments: Vec<f64>,
    pub tail: RadialTail,
}

impl RadialTable {
    /// Builds the interpolant. Knots must be strictly increasing with at
    /// least four entries; the first knot is typically 0.
    pub fn from_samples(rs: Vec<f64>, vals: Vec<f64>, tail: RadialTail) -> Self {
        assert!(rs.len() >= 4, "need at least four knots");
        assert_eq!(rs.len(), vals.len(), "knots and values must align");
        for w in rs.windows(2) {
            assert!(w[1] > w[0], "knots must be strictly increasing");
        }
        let n = rs.len();
        // Tridiagonal system for spline moments: clamped left (slope 0),
        // natural right (moment 0).
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut rhs = vec![0.0; n];

        let h0 = rs[1] - rs[0];
        b[0] = 2.0 * h0;
        c[0] = h0;
        rhs[0] = 6.0 * ((vals[1] - vals[0]) / h0 - 0.0);

        for i in 1..n - 1 {
            let hl = rs[i] - rs[i - 1];
            let hr = rs[i + 1] - rs[i];
            a[i] = hl;
            b[i] = 2.0 * (hl + hr);
            c[i] = hr;
            rhs[i] = 6.0 * ((vals[i + 1] - vals[i]) / hr - (vals[i] - vals[i - 1]) / hl);
        }
        b[n - 1] = 1.0;
        rhs[n - 1] = 0.0;

        // Thomas algorithm.
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut moments = vec![0.0; n];
        moments[n - 1] = rhs[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            moments[i] = (rhs[i] - c[i] * moments[i + 1]) / b[i];
        }

        Self {
            rs,
            vals,
            moments,
            tail,
        }
    }

    /// Last knot radius.
    pub fn max_radius(&self) -> f64 {
        *self.rs.last().unwrap()
    }

    /// Evaluates the interpolant (tail model beyond the last knot, first
    /// value below the first knot — profiles start at r = 0 in practice).
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.rs.len();
        if r <= self.rs[0] {
            return self.vals[0];
        }
        if r >= self.rs[n - 1] {
            return match self.tail {
                RadialTail::Zero => 0.0,
                RadialTail::TwoTerm { q, c1, c2 } => {
                    c1 * r.powf(-q) + c2 * r.powf(-q - 2.0)
                }
            };
        }
        // Binary search for the knot interval.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.rs[mid] <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.rs[hi] - self.rs[lo];
        let t = (r - self.rs[lo]) / h;
        let (ml, mh) = (self.moments[lo], self.moments[hi]);
        let (yl, yh) = (self.vals[lo], self.vals[hi]);
        // Standard cubic spline segment form in the moments.
        yl * (1.0 - t) + yh * t
            + h * h / 6.0
                * (((1.0 - t).powi(3) - (1.0 - t)) * ml + (t.powi(3) - t) * mh)
    }

    /// Wraps the table as a radial ScalarField.
    pub fn into_field(
        self,
        dim: usize,
        grad_bound: f64,
        hess_bound: f64,
    ) -> ScalarField {
        let (support, effective, hint) = match self.tail {
            RadialTail::Zero => (self.max_radius(), self.max_radius(), None),
            RadialTail::TwoTerm { q, .. } => (f64::INFINITY, f64::INFINITY, Some(q)),
        };
        let table = self;
        ScalarField {
            dim,
            evaluate: Arc::new(move |x: [f64; 3]| table.eval(norm(x))),
            support_radius: support,
            effective_radius: effective,
            grad_bound,
            hess_bound,
            is_radial: true,
            decay_exponent_hint: hint,
        }
    }
}
