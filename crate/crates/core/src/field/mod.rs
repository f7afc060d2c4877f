//! Sampled functions on a truncated box of R^d and their unitary Fourier
//! transform.
//!
//! A [`GridSpec`] fixes the box `[-L_1, L_1) × … × [-L_d, L_d)` and the
//! number of samples per axis. Sample points are `x_j = -L_j + m h_j` with
//! `h_j = 2L_j / N_j`; the conjugate frequency grid is `λ_j = k Δλ_j` for
//! `k = -N_j/2 .. N_j/2 - 1` with `Δλ_j = π / L_j`.
//!
//! Spectral coefficients are scaled so that they approximate the continuous
//! transform `(2π)^{-d/2} ∫ f(x) e^{-i(λ,x)} dx`, i.e. the discrete transform
//! carries the `h_j / √(2π)` and `Δλ_j / √(2π)` measure factors. With that
//! scaling Parseval reads `Σ|f|² Π h_j = Σ|f̃|² Π Δλ_j`.

mod io;

use std::f64::consts::PI;

use ndarray::{ArrayD, Axis, IxDyn, Zip};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{check_lebesgue_exponent, Error, Result};

pub use io::{format_float, read_field, write_field};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec")]
pub struct GridSpec {
    d: usize,
    half_width: Vec<f64>,
    samples: Vec<usize>,
}

#[derive(Deserialize)]
struct RawGridSpec {
    d: usize,
    half_width: Vec<f64>,
    samples: Vec<usize>,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        if raw.d != raw.half_width.len() || raw.d != raw.samples.len() {
            return Err(Error::InvalidGrid(format!(
                "d = {} but {} half widths and {} sample counts",
                raw.d,
                raw.half_width.len(),
                raw.samples.len()
            )));
        }
        GridSpec::new(raw.half_width, raw.samples)
    }
}

impl GridSpec {
    pub fn new(half_width: Vec<f64>, samples: Vec<usize>) -> Result<Self> {
        let d = half_width.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension {d} not in 1..={MAX_DIM}"
            )));
        }
        if samples.len() != d {
            return Err(Error::InvalidGrid(format!(
                "{d} half widths but {} sample counts",
                samples.len()
            )));
        }
        for (j, &l) in half_width.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "half width L[{j}] = {l} must be positive"
                )));
            }
        }
        for (j, &n) in samples.iter().enumerate() {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "sample count N[{j}] = {n} must be a positive even integer"
                )));
            }
        }
        Ok(Self {
            d,
            half_width,
            samples,
        })
    }

    /// Same half width and sample count on every axis.
    pub fn isotropic(d: usize, half_width: f64, samples: usize) -> Result<Self> {
        Self::new(vec![half_width; d], vec![samples; d])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.samples.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> IxDyn {
        IxDyn(&self.samples)
    }

    /// `h_j = 2 L_j / N_j`.
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.samples[axis] as f64
    }

    /// `Δλ_j = π / L_j`.
    pub fn frequency_spacing(&self, axis: usize) -> f64 {
        PI / self.half_width[axis]
    }

    /// `Λ_j = π / h_j`, the magnitude of the most negative grid frequency.
    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    /// Quadrature weight `Π h_j` of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.d).map(|j| self.spacing(j)).product()
    }

    /// `Π Δλ_j`.
    pub fn frequency_cell(&self) -> f64 {
        (0..self.d).map(|j| self.frequency_spacing(j)).product()
    }

    pub fn coordinate(&self, axis: usize, m: usize) -> f64 {
        -self.half_width[axis] + m as f64 * self.spacing(axis)
    }

    /// Frequency at centred index `i`, i.e. `(i - N/2) Δλ`.
    pub fn frequency(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.samples[axis] / 2) as f64) * self.frequency_spacing(axis)
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.samples[axis])
            .map(|m| self.coordinate(axis, m))
            .collect()
    }

    pub fn axis_frequencies(&self, axis: usize) -> Vec<f64> {
        (0..self.samples[axis])
            .map(|i| self.frequency(axis, i))
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Complex samples `f(x)` on every point of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    spec: GridSpec,
    values: ArrayD<Complex64>,
}

/// Coefficients on the centred frequency grid approximating the unitary
/// continuous Fourier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    coefficients: ArrayD<Complex64>,
}

fn check_shape(spec: &GridSpec, shape: &[usize]) -> Result<()> {
    if shape != spec.samples() {
        return Err(Error::GridMismatch(format!(
            "array shape {shape:?} does not match grid samples {:?}",
            spec.samples()
        )));
    }
    Ok(())
}

impl SampledField {
    pub fn from_values(spec: GridSpec, values: ArrayD<Complex64>) -> Result<Self> {
        check_shape(&spec, values.shape())?;
        Ok(Self { spec, values })
    }

    pub fn from_real(spec: GridSpec, values: ArrayD<f64>) -> Result<Self> {
        check_shape(&spec, values.shape())?;
        Ok(Self {
            spec,
            values: values.mapv(|v| Complex64::new(v, 0.0)),
        })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let values = ArrayD::zeros(spec.shape());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> ArrayD<Complex64> {
        self.values
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.mapv(|v| v * c),
        }
    }

    pub fn add(&self, other: &SampledField) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: &self.values + &other.values,
        })
    }

    pub fn sub(&self, other: &SampledField) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        Ok(Self {
            spec: self.spec.clone(),
            values: &self.values - &other.values,
        })
    }

    /// `max |Im f|`; zero for real fields.
    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn forward(&self) -> SpectralField {
        let mut coefficients = self.values.clone();
        apply_transform(&mut coefficients, &self.spec, Direction::Forward);
        SpectralField {
            spec: self.spec.clone(),
            coefficients,
        }
    }
}

impl SpectralField {
    pub fn from_coefficients(spec: GridSpec, coefficients: ArrayD<Complex64>) -> Result<Self> {
        check_shape(&spec, coefficients.shape())?;
        Ok(Self { spec, coefficients })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn coefficients(&self) -> &ArrayD<Complex64> {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.coefficients
    }

    /// `Σ |f̃|² Π Δλ_j`.
    pub fn energy(&self) -> f64 {
        neumaier_sum(self.coefficients.iter().map(|c| c.norm_sqr())) * self.spec.frequency_cell()
    }

    /// Coefficients multiplied pointwise by a 0/1 mask.
    pub fn masked(&self, mask: &ArrayD<bool>) -> Result<Self> {
        check_shape(&self.spec, mask.shape())?;
        let mut coefficients = self.coefficients.clone();
        Zip::from(&mut coefficients).and(mask).for_each(|c, &keep| {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        });
        Ok(Self {
            spec: self.spec.clone(),
            coefficients,
        })
    }

    pub fn inverse(&self) -> SampledField {
        let mut values = self.coefficients.clone();
        apply_transform(&mut values, &self.spec, Direction::Inverse);
        SampledField {
            spec: self.spec.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Either side of the transform pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Sampled(SampledField),
    Spectral(SpectralField),
}

/// Direction-tagged transform; the field kind must match the direction.
pub fn transform(field: &Field, direction: Direction) -> Result<Field> {
    match (field, direction) {
        (Field::Sampled(f), Direction::Forward) => Ok(Field::Spectral(f.forward())),
        (Field::Spectral(f), Direction::Inverse) => Ok(Field::Sampled(f.inverse())),
        (Field::Sampled(_), Direction::Inverse) => Err(Error::GridMismatch(
            "inverse transform expects a spectral field".into(),
        )),
        (Field::Spectral(_), Direction::Forward) => Err(Error::GridMismatch(
            "forward transform expects a sampled field".into(),
        )),
    }
}

fn apply_transform(data: &mut ArrayD<Complex64>, spec: &GridSpec, direction: Direction) {
    let mut planner = FftPlanner::<f64>::new();
    let norm = (2.0 * PI).sqrt().recip();
    for axis in 0..spec.dim() {
        let n = spec.samples()[axis];
        let half = n / 2;
        let fft = match direction {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        match direction {
            Direction::Forward => {
                let weight = spec.spacing(axis) * norm;
                for mut lane in data.lanes_mut(Axis(axis)) {
                    for (b, v) in buf.iter_mut().zip(lane.iter()) {
                        *b = *v;
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    // centred index i holds frequency k = i - N/2, DFT bin k mod N
                    for (i, out) in lane.iter_mut().enumerate() {
                        let sign = if (i + half).is_multiple_of(2) {
                            weight
                        } else {
                            -weight
                        };
                        *out = buf[(i + half) % n] * sign;
                    }
                }
            }
            Direction::Inverse => {
                let weight = spec.frequency_spacing(axis) * norm;
                for mut lane in data.lanes_mut(Axis(axis)) {
                    for (i, v) in lane.iter().enumerate() {
                        let sign = if (i + half).is_multiple_of(2) {
                            1.0
                        } else {
                            -1.0
                        };
                        buf[(i + half) % n] = *v * sign;
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    for (out, b) in lane.iter_mut().zip(buf.iter()) {
                        *out = *b * weight;
                    }
                }
            }
        }
    }
}

/// Samples a real function at every grid point.
pub fn sample<F>(f: F, spec: &GridSpec) -> Result<SampledField>
where
    F: Fn(&[f64]) -> f64,
{
    sample_complex(|x| Complex64::new(f(x), 0.0), spec)
}

pub fn sample_complex<F>(f: F, spec: &GridSpec) -> Result<SampledField>
where
    F: Fn(&[f64]) -> Complex64,
{
    let coords: Vec<Vec<f64>> = (0..spec.dim()).map(|j| spec.axis_coordinates(j)).collect();
    let mut values = ArrayD::<Complex64>::zeros(spec.shape());
    let mut point = vec![0.0; spec.dim()];
    for (idx, v) in values.indexed_iter_mut() {
        for (j, p) in point.iter_mut().enumerate() {
            *p = coords[j][idx[j]];
        }
        let y = f(&point);
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NonFiniteSample {
                point: point.clone(),
                value: if y.re.is_finite() { y.im } else { y.re },
            });
        }
        *v = y;
    }
    Ok(SampledField {
        spec: spec.clone(),
        values,
    })
}

/// Rectangle-rule `L_p` norm over the box; `p = ∞` gives the maximum modulus.
pub fn lp_norm(field: &SampledField, p: f64) -> Result<f64> {
    check_lebesgue_exponent("p", p)?;
    Ok(lp_norm_of(
        field.values.iter().map(|v| v.norm()),
        field.spec.cell_volume(),
        p,
    ))
}

/// Scaled by the largest modulus before powering so that large `p` cannot
/// overflow; summation is compensated and sequential.
pub(crate) fn lp_norm_of<I>(moduli: I, cell: f64, p: f64) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let peak = moduli.clone().fold(0.0, f64::max);
    if p.is_infinite() || peak == 0.0 {
        return peak;
    }
    let sum = if p == 2.0 {
        neumaier_sum(moduli.map(|m| {
            let y = m / peak;
            y * y
        }))
    } else {
        neumaier_sum(moduli.map(|m| (m / peak).powf(p)))
    };
    peak * (sum * cell).powf(p.recip())
}

/// Estimate of what the box truncation discards from `‖f‖_p`, assuming the
/// field keeps decaying like `1/|x_j|` beyond each face of the box (the
/// slowest decay of the sinc families used here). The face contribution is
/// `∫_L^∞ (|f(L)| L / x)^p dx = |f(L)|^p L / (p - 1)`, with `|f(L)|^p`
/// averaged over an outer strip of `N/32` samples (each rescaled to the face
/// by the same `1/|x|` law) so that oscillating tails are not judged by a
/// single sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Estimated `∫_{R^d \ box} |f|^p`.
    pub mass: f64,
    /// Estimated absolute error of `‖f‖_p`.
    pub norm_error: f64,
}

pub fn tail_estimate(field: &SampledField, p: f64) -> Result<TailEstimate> {
    check_lebesgue_exponent("p", p)?;
    if p.is_infinite() {
        return Ok(TailEstimate {
            mass: 0.0,
            norm_error: 0.0,
        });
    }
    let spec = &field.spec;
    let mut mass = 0.0;
    for axis in 0..spec.dim() {
        let n = spec.samples()[axis];
        let l = spec.half_width()[axis];
        let width = (n / 32).max(1);
        let face_cell: f64 = (0..spec.dim())
            .filter(|&j| j != axis)
            .map(|j| spec.spacing(j))
            .product();
        let strip = (0..width).chain(n - width..n).map(|m| {
            let x = spec.coordinate(axis, m).abs().max(spec.spacing(axis));
            let weight = (x / l).powf(p);
            let face = field.values.index_axis(Axis(axis), m);
            weight * neumaier_sum(face.iter().map(|v| v.norm().powf(p)))
        });
        // two faces, each the mean over `width` layers
        let face_sum = neumaier_sum(strip) / width as f64;
        mass += face_sum * face_cell * l / (p - 1.0);
    }
    let norm = lp_norm(field, p)?;
    let norm_error = if norm > 0.0 {
        (norm.powf(p) + mass).powf(p.recip()) - norm
    } else {
        mass.powf(p.recip())
    };
    Ok(TailEstimate { mass, norm_error })
}

/// Neumaier-compensated sum in iteration order.
pub(crate) fn neumaier_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests;
