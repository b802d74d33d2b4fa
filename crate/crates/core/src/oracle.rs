//! Independent Fourier-symbol reference implementations on periodic grids.
//!
//! The operators here realize `(-Δ)^s` and its inverse through the exact
//! spectral symbols `|xi|^{2s}` and `|xi|^{-2s}` on a periodic box, which
//! makes them a brute-force oracle for the quadrature-based routes: the two
//! implementations share no code and no discretization ideas.
//!
//! Conventions: the box is `[-L, L)^d` sampled with `n` points per axis
//! (power of two), so the grid frequencies are `xi = pi k / L` with integer
//! `k`. The inverse symbol sets the zero mode to zero (mean-free
//! convention); whole-space comparisons must therefore difference two point
//! values to cancel the undetermined constant, and the box must be large
//! enough that the field is negligible at the boundary (checked when
//! sampling).

use crate::fields::ScalarField;
use crate::quadrature::pairwise_sum;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

/// Errors from grid construction, sampling, and symbol application.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid periodic grid: {0}")]
    InvalidGrid(String),
    #[error(
        "field leaks through the box boundary: max boundary magnitude {max_boundary} \
         vs max magnitude {max_abs} (need ratio < 1e-12)"
    )]
    BoundaryLeak { max_boundary: f64, max_abs: f64 },
    #[error(
        "input is not band-limited on this grid: top-octave spectral mass fraction \
         {tail_mass_ratio} exceeds 1e-8"
    )]
    Aliasing { tail_mass_ratio: f64 },
    #[error("inverse symbol requires d > 2s, got d = {d}, s = {s}")]
    SymbolDomain { d: usize, s: f64 },
    #[error("imaginary residue after inverse transform too large: ratio {ratio}")]
    ImaginaryResidue { ratio: f64 },
}

/// A periodic sampling box `[-L, L)^d`, `d` in 1..=3, `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub d: usize,
    pub n: usize,
    pub l: f64,
}

impl PeriodicGrid {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self, OracleError> {
        if !(1..=3).contains(&d) {
            return Err(OracleError::InvalidGrid(format!(
                "dimension must be 1, 2, or 3, got {d}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(OracleError::InvalidGrid(format!(
                "points per axis must be a power of two at least 8, got {n}"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(OracleError::InvalidGrid(format!(
                "box half-width must be positive and finite, got {l}"
            )));
        }
        Ok(Self { d, n, l })
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Coordinate of axis index `i`: `-L + 2L i / n`.
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + 2.0 * self.l * i as f64 / self.n as f64
    }

    /// Signed integer frequency for axis index `k` (standard DFT layout).
    fn signed_mode(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Decodes a flat index into axis indices.
    fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// The physical point of a node.
    pub fn node_point(&self, idx: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.coord(idx[axis]);
        }
        x
    }

    fn flatten(&self, idx: [usize; 3]) -> usize {
        let mut flat = 0usize;
        for axis in 0..self.d {
            flat = flat * self.n + idx[axis];
        }
        flat
    }

    /// Samples a function on the grid, rejecting fields that are not
    /// negligible at the box boundary (ratio 1e-12 against the max).
    pub fn sample_fn(
        &self,
        f: impl Fn([f64; 3]) -> f64,
    ) -> Result<GridField, OracleError> {
        let mut values = Vec::with_capacity(self.len());
        let mut max_abs = 0.0_f64;
        let mut max_boundary = 0.0_f64;
        for flat in 0..self.len() {
            let idx = self.unflatten(flat);
            let v = f(self.node_point(idx));
            max_abs = max_abs.max(v.abs());
            let on_boundary = (0..self.d).any(|a| idx[a] == 0 || idx[a] == self.n - 1);
            if on_boundary {
                max_boundary = max_boundary.max(v.abs());
            }
            values.push(v);
        }
        if max_abs > 0.0 && max_boundary > 1e-12 * max_abs {
            return Err(OracleError::BoundaryLeak {
                max_boundary,
                max_abs,
            });
        }
        Ok(GridField {
            grid: *self,
            values,
        })
    }

    /// Samples a ScalarField.
    pub fn sample(&self, f: &ScalarField) -> Result<GridField, OracleError> {
        self.sample_fn(|x| f.eval(x))
    }
}

/// Real values sampled on a periodic grid (row-major axis order).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl GridField {
    /// Node value by axis indices.
    pub fn node_value(&self, idx: [usize; 3]) -> f64 {
        self.values[self.grid.flatten(idx)]
    }

    /// Grid mean.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Maximum absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation at a physical point (periodic wrap).
    pub fn interpolate(&self, x: [f64; 3]) -> f64 {
        let g = &self.grid;
        let n = g.n;
        let h = g.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..g.d {
            let u = (x[axis] + g.l) / h;
            let i = u.floor();
            base[axis] = (i.rem_euclid(n as f64)) as usize % n;
            frac[axis] = u - i;
        }
        let mut acc = 0.0;
        let corners = 1usize << g.d;
        for corner in 0..corners {
            let mut idx = [0usize; 3];
            let mut w = 1.0;
            for axis in 0..g.d {
                if corner & (1 << axis) != 0 {
                    idx[axis] = (base[axis] + 1) % n;
                    w *= frac[axis];
                } else {
                    idx[axis] = base[axis];
                    w *= 1.0 - frac[axis];
                }
            }
            acc += w * self.node_value(idx);
        }
        acc
    }
}

/// FFT along every axis; `inverse` includes the 1/N normalization.
fn fft_all_axes(grid: &PeriodicGrid, data: &mut [Complex<f64>], inverse: bool) {
    let n = grid.n;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex::new(0.0, 0.0); n];
    match grid.d {
        1 => fft.process(data),
        2 => {
            // Axis 0 (stride n), then axis 1 (contiguous rows).
            for j in 0..n {
                for t in 0..n {
                    line[t] = data[t * n + j];
                }
                fft.process(&mut line);
                for t in 0..n {
                    data[t * n + j] = line[t];
                }
            }
            for i in 0..n {
                fft.process(&mut data[i * n..(i + 1) * n]);
            }
        }
        3 => {
            let n2 = n * n;
            for j in 0..n {
                for k in 0..n {
                    for t in 0..n {
                        line[t] = data[t * n2 + j * n + k];
                    }
                    fft.process(&mut line);
                    for t in 0..n {
                        data[t * n2 + j * n + k] = line[t];
                    }
                }
            }
            for i in 0..n {
                for k in 0..n {
                    for t in 0..n {
                        line[t] = data[i * n2 + t * n + k];
                    }
                    fft.process(&mut line);
                    for t in 0..n {
                        data[i * n2 + t * n + k] = line[t];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    fft.process(&mut data[i * n2 + j * n..i * n2 + j * n + n]);
                }
            }
        }
        _ => unreachable!("grid dimension validated at construction"),
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward transform, band-limit check, symbol multiply (given `|xi|`),
/// inverse transform, imaginary-residue check.
fn apply_symbol(
    field: &GridField,
    symbol: impl Fn(f64) -> f64,
) -> Result<GridField, OracleError> {
    let grid = field.grid;
    let mut data: Vec<Complex<f64>> = field
        .values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft_all_axes(&grid, &mut data, false);

    // Aliasing heuristic: spectral mass whose largest axis frequency lies
    // in the top octave (|k| >= n/4) must be negligible.
    let quarter = (grid.n / 4) as i64;
    let mut tail_mass = 0.0;
    let mut total_mass = 0.0;
    for (flat, v) in data.iter().enumerate() {
        let idx = grid.unflatten(flat);
        let mag2 = v.norm_sqr();
        total_mass += mag2;
        let top = (0..grid.d).any(|a| grid.signed_mode(idx[a]).abs() >= quarter);
        if top {
            tail_mass += mag2;
        }
    }
    if total_mass > 0.0 {
        let ratio = tail_mass / total_mass;
        if ratio > 1e-8 {
            return Err(OracleError::Aliasing {
                tail_mass_ratio: ratio,
            });
        }
    }

    for (flat, v) in data.iter_mut().enumerate() {
        let idx = grid.unflatten(flat);
        let mut xi2 = 0.0;
        for axis in 0..grid.d {
            let k = grid.signed_mode(idx[axis]) as f64;
            let xi = std::f64::consts::PI * k / grid.l;
            xi2 += xi * xi;
        }
        *v *= symbol(xi2.sqrt());
    }

    fft_all_axes(&grid, &mut data, true);

    let max_re = data.iter().fold(0.0_f64, |m, v| m.max(v.re.abs()));
    let max_im = data.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
    if max_re > 0.0 && max_im > 1e-10 * max_re {
        return Err(OracleError::ImaginaryResidue {
            ratio: max_im / max_re,
        });
    }

    Ok(GridField {
        grid,
        values: data.iter().map(|v| v.re).collect(),
    })
}

/// Spectral `(-Δ)^s`: multiply the transform by `|xi|^{2s}`. The zero mode
/// is annihilated (the symbol vanishes at `xi = 0`), so the output of the
/// `s -> 0` limit is `f - mean(f)`.
pub fn oracle_frac_laplacian(field: &GridField, s: f64) -> Result<GridField, OracleError> {
    apply_symbol(field, |xi| xi.powf(2.0 * s))
}

/// Spectral Riesz potential: multiply by `|xi|^{-2s}` with the zero mode
/// set to zero (mean-free convention). Defined only for `d > 2s`; compare
/// against whole-space potentials through differences of point values.
pub fn oracle_riesz(field: &GridField, s: f64) -> Result<GridField, OracleError> {
    let d = field.grid.d;
    if !(d as f64 > 2.0 * s) {
        return Err(OracleError::SymbolDomain { d, s });
    }
    apply_symbol(field, |xi| if xi == 0.0 { 0.0 } else { xi.powf(-2.0 * s) })
}

/// Error statistics from comparing point evaluations against the oracle
/// grid (multilinear interpolation). Relative errors are normalized by the
/// largest oracle magnitude over the sample set, so sign changes of the
/// target do not blow up the statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareStats {
    pub max_rel: f64,
    pub mean_rel: f64,
    /// The normalization: sup of |oracle| over the sample set.
    pub scale: f64,
}

/// Compares `(point, measured value)` samples against the oracle field.
pub fn compare(samples: &[([f64; 3], f64)], oracle: &GridField) -> CompareStats {
    assert!(!samples.is_empty(), "need at least one sample");
    let interpolated: Vec<f64> = samples.iter().map(|(x, _)| oracle.interpolate(*x)).collect();
    let scale = interpolated
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let errs: Vec<f64> = samples
        .iter()
        .zip(&interpolated)
        .map(|((_, measured), interp)| (measured - interp).abs() / scale)
        .collect();
    let max_rel = errs.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mean_rel = pairwise_sum(&errs) / errs.len() as f64;
    CompareStats {
        max_rel,
        mean_rel,
        scale,
    }
}

/// Discrete Parseval pair for the fractional energy: the spectral form
/// `(1/N) sum |xi|^{2s} |F|^2` and the direct form `sum f * ((-Δ)^s f)`.
/// They agree to round-off; returned separately so tests can assert it.
pub fn parseval_energies(field: &GridField, s: f64) -> Result<(f64, f64), OracleError> {
    let grid = field.grid;
    let mut data: Vec<Complex<f64>> = field
        .values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    fft_all_axes(&grid, &mut data, false);
    let mut spectral_terms = Vec::with_capacity(data.len());
    for (flat, v) in data.iter().enumerate() {
        let idx = grid.unflatten(flat);
        let mut xi2 = 0.0;
        for axis in 0..grid.d {
            let k = grid.signed_mode(idx[axis]) as f64;
            let xi = std::f64::consts::PI * k / grid.l;
            xi2 += xi * xi;
        }
        spectral_terms.push(xi2.sqrt().powf(2.0 * s) * v.norm_sqr());
    }
    let spectral = pairwise_sum(&spectral_terms) / grid.len() as f64;

    let lap = oracle_frac_laplacian(field, s)?;
    let direct_terms: Vec<f64> = field
        .values
        .iter()
        .zip(&lap.values)
        .map(|(a, b)| a * b)
        .collect();
    let direct = pairwise_sum(&direct_terms);
    Ok((spectral, direct))
}
