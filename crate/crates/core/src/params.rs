//! Problem parameters, kernel normalization constants, and
//! critical-exponent arithmetic shared by every other module.
//!
//! All quantities here are pure functions of `(d, s, p)`. The closed forms
//! for the kernel constants are validated elsewhere against two independent
//! numerical routes (a Fourier-symbol oracle and a delta-identity check)
//! rather than trusted as transcriptions.

use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors from parameter validation and constant evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(usize),
    #[error("fractional order s must lie strictly inside (0, 1), got {0}")]
    InvalidOrder(f64),
    #[error("integrability exponent p must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("Riesz kernel requires d > 2s, got d = {d}, s = {s}")]
    RieszUndefined { d: usize, s: f64 },
}

/// The triple `(d, s, p)` driving every operator and campaign, with the
/// conjugate exponent and the `d > 2s` flag computed once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    /// Ambient dimension of `R^d`.
    pub d: usize,
    /// Fractional order of the Laplacian, `0 < s < 1`.
    pub s: f64,
    /// Integrability exponent, `p > 1` (campaigns use `p >= 2`).
    pub p: f64,
    /// Conjugate exponent `p / (p - 1)`.
    pub p_conj: f64,
    /// Whether `d > 2s`, i.e. whether the Riesz kernel `|x|^{-(d-2s)}` is
    /// a genuine (locally integrable, decaying) potential kernel.
    pub d_exceeds_2s: bool,
}

impl ProblemParams {
    /// Validates and builds the parameter set.
    pub fn new(d: usize, s: f64, p: f64) -> Result<Self, ParamError> {
        if d < 1 {
            return Err(ParamError::InvalidDimension(d));
        }
        if !(s > 0.0 && s < 1.0) || !s.is_finite() {
            return Err(ParamError::InvalidOrder(s));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(ParamError::InvalidExponent(p));
        }
        Ok(Self {
            d,
            s,
            p,
            p_conj: p / (p - 1.0),
            d_exceeds_2s: (d as f64) > 2.0 * s,
        })
    }

    /// The weight exponent below which the full first-power identity is
    /// expected to hold: `gamma_c = d - (p/2)(d - 2s)`. Equals `2s` when
    /// `p = 2` and collapses to `d` when `d = 2s`.
    pub fn critical_gamma(&self) -> f64 {
        self.d as f64 - 0.5 * self.p * (self.d as f64 - 2.0 * self.s)
    }
}

/// Normalization constants of the singular kernel and the Riesz kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    /// `C_{d,s}`, the constant in front of the principal-value integral
    /// defining the fractional Laplacian.
    pub c_ds: f64,
    /// `kappa_{d,s}`, the constant of the Riesz kernel
    /// `kappa |x|^{-(d-2s)}`; present only when `d > 2s`.
    pub kappa_ds: Option<f64>,
}

impl KernelConstants {
    /// Evaluates both constants for the given parameters.
    pub fn for_params(params: &ProblemParams) -> Self {
        Self {
            c_ds: normalization_constant(params),
            kappa_ds: riesz_constant(params).ok(),
        }
    }
}

/// `C_{d,s} = 4^s Gamma(d/2 + s) / (pi^{d/2} |Gamma(-s)|)`.
///
/// This is the unique constant making the singular-integral definition of
/// `(-Δ)^s` agree with the Fourier multiplier `|xi|^{2s}`.
pub fn normalization_constant(params: &ProblemParams) -> f64 {
    let d = params.d as f64;
    let s = params.s;
    // |Gamma(-s)| = Gamma(1 - s) / s for 0 < s < 1.
    let abs_gamma_neg_s = gamma_fn(1.0 - s) / s;
    4.0_f64.powf(s) * gamma_fn(d / 2.0 + s) / (PI.powf(d / 2.0) * abs_gamma_neg_s)
}

/// `kappa_{d,s} = Gamma((d - 2s)/2) / (4^s pi^{d/2} Gamma(s))`, defined
/// only when `d > 2s`; the kernel `kappa |x|^{-(d-2s)}` inverts `(-Δ)^s`.
pub fn riesz_constant(params: &ProblemParams) -> Result<f64, ParamError> {
    let d = params.d as f64;
    let s = params.s;
    if !params.d_exceeds_2s {
        return Err(ParamError::RieszUndefined { d: params.d, s });
    }
    Ok(gamma_fn((d - 2.0 * s) / 2.0) / (4.0_f64.powf(s) * PI.powf(d / 2.0) * gamma_fn(s)))
}

/// Surface area of the unit sphere `S^{d-1}`: `2 pi^{d/2} / Gamma(d/2)`.
/// For `d = 1` this is `2` (the two endpoints of an interval).
pub fn sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) / gamma_fn(d / 2.0)
}

/// Lanczos coefficients (g = 7, n = 9).
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles excluded), via the Lanczos
/// approximation with reflection for arguments below 1/2. Relative error
/// is below 1e-12 across the arguments used in this crate (|x| <= 30).
pub fn gamma_fn(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        PI / ((PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn gamma_matches_exact_values_at_integers_and_half_integers() {
        let sqrt_pi = PI.sqrt();
        let cases = [
            (1.0, 1.0),
            (2.0, 1.0),
            (3.0, 2.0),
            (4.0, 6.0),
            (5.0, 24.0),
            (6.0, 120.0),
            (0.5, sqrt_pi),
            (1.5, sqrt_pi / 2.0),
            (2.5, 3.0 * sqrt_pi / 4.0),
            (3.5, 15.0 * sqrt_pi / 8.0),
        ];
        for (x, want) in cases {
            assert_relative_eq!(gamma_fn(x), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_reflection_gives_negative_half_integer_values() {
        let sqrt_pi = PI.sqrt();
        // Gamma(-1/2) = -2 sqrt(pi), Gamma(-3/2) = 4 sqrt(pi) / 3.
        assert_relative_eq!(gamma_fn(-0.5), -2.0 * sqrt_pi, max_relative = 1e-12);
        assert_relative_eq!(gamma_fn(-1.5), 4.0 * sqrt_pi / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_recursion_holds_on_a_grid() {
        // Gamma(x+1) = x Gamma(x) across a spread of arguments.
        for k in 1..60 {
            let x = 0.07 * k as f64 + 0.013;
            assert_relative_eq!(gamma_fn(x + 1.0), x * gamma_fn(x), max_relative = 1e-11);
        }
    }

    #[test]
    fn abs_gamma_of_minus_s_identity() {
        // |Gamma(-s)| = Gamma(1-s)/s, used inside normalization_constant.
        for s in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            let direct = gamma_fn(-s).abs();
            let via_recursion = gamma_fn(1.0 - s) / s;
            assert_relative_eq!(direct, via_recursion, max_relative = 1e-11);
        }
    }

    #[test]
    fn params_validation_accepts_good_and_rejects_bad() {
        assert!(ProblemParams::new(1, 0.5, 2.0).is_ok());
        assert!(ProblemParams::new(3, 0.999, 17.0).is_ok());
        assert_eq!(
            ProblemParams::new(0, 0.5, 2.0),
            Err(ParamError::InvalidDimension(0))
        );
        assert_eq!(
            ProblemParams::new(1, 1.0, 2.0),
            Err(ParamError::InvalidOrder(1.0))
        );
        assert_eq!(
            ProblemParams::new(1, 0.0, 2.0),
            Err(ParamError::InvalidOrder(0.0))
        );
        assert_eq!(
            ProblemParams::new(1, 0.5, 1.0),
            Err(ParamError::InvalidExponent(1.0))
        );
        assert!(ProblemParams::new(2, -0.3, 2.0).is_err());
        assert!(ProblemParams::new(2, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn conjugate_exponent_satisfies_hoelder_relation() {
        for p in [1.2, 2.0, 2.5, 3.0, 7.0] {
            let params = ProblemParams::new(2, 0.5, p).unwrap();
            assert_abs_diff_eq!(1.0 / p + 1.0 / params.p_conj, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn d_exceeds_2s_flag_is_consistent() {
        assert!(ProblemParams::new(3, 0.5, 2.0).unwrap().d_exceeds_2s);
        assert!(ProblemParams::new(2, 0.75, 2.0).unwrap().d_exceeds_2s);
        assert!(!ProblemParams::new(1, 0.5, 2.0).unwrap().d_exceeds_2s);
        assert!(!ProblemParams::new(1, 0.75, 2.0).unwrap().d_exceeds_2s);
    }

    #[test]
    fn normalization_constant_closed_form_values() {
        // d=1, s=1/2: the constant is exactly 1/pi.
        let p = ProblemParams::new(1, 0.5, 2.0).unwrap();
        assert_relative_eq!(normalization_constant(&p), 1.0 / PI, max_relative = 1e-12);

        // Positivity and finiteness across the (d, s) block used in tests.
        for d in 1..=4 {
            for s in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
                let p = ProblemParams::new(d, s, 2.0).unwrap();
                let c = normalization_constant(&p);
                assert!(c.is_finite() && c > 0.0, "C_{{{d},{s}}} = {c}");
            }
        }
    }

    #[test]
    fn riesz_constant_closed_form_values() {
        // d=3, s=1/2: kappa = 1/(2 pi^2).
        let p = ProblemParams::new(3, 0.5, 2.0).unwrap();
        assert_relative_eq!(
            riesz_constant(&p).unwrap(),
            1.0 / (2.0 * PI * PI),
            max_relative = 1e-12
        );

        // d=2, s=1/2: kappa = 1/(2 pi).
        let p = ProblemParams::new(2, 0.5, 2.0).unwrap();
        assert_relative_eq!(
            riesz_constant(&p).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-12
        );

        // d = 2s is excluded.
        let p = ProblemParams::new(1, 0.5, 2.0).unwrap();
        assert_eq!(
            riesz_constant(&p),
            Err(ParamError::RieszUndefined { d: 1, s: 0.5 })
        );
        let constants = KernelConstants::for_params(&p);
        assert!(constants.kappa_ds.is_none());
        assert!(constants.c_ds > 0.0);
    }

    #[test]
    fn critical_gamma_reference_points() {
        let p = ProblemParams::new(3, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(p.critical_gamma(), 1.0, epsilon = 1e-15); // = 2s
        let p = ProblemParams::new(1, 0.5, 4.7).unwrap();
        assert_abs_diff_eq!(p.critical_gamma(), 1.0, epsilon = 1e-15); // = d
        let p = ProblemParams::new(3, 0.5, 3.0).unwrap();
        assert_abs_diff_eq!(p.critical_gamma(), 0.0, epsilon = 1e-15);
        let p = ProblemParams::new(1, 0.75, 2.0).unwrap();
        assert_abs_diff_eq!(p.critical_gamma(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn critical_gamma_is_affine_in_p_with_expected_slope() {
        for (d, s) in [(1usize, 0.3), (2, 0.6), (3, 0.5)] {
            let at = |p: f64| ProblemParams::new(d, s, p).unwrap().critical_gamma();
            let slope = -(d as f64 - 2.0 * s) / 2.0;
            let (g2, g3, g5) = (at(2.0), at(3.0), at(5.0));
            assert_abs_diff_eq!(g3 - g2, slope, epsilon = 1e-14);
            assert_abs_diff_eq!(g5 - g3, 2.0 * slope, epsilon = 1e-14);
        }
    }

    #[test]
    fn sphere_area_matches_known_dimensions() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-13);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-13);
    }
}
