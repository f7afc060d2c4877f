//! Nikol'skii–Besov norms of sampled fields.
//!
//! Two routes are provided. [`block_norm`] weights the `L_p` norms of the
//! `a`-layers by `b^s` and takes an `ℓ^θ` norm over `s`. [`definition_norm`]
//! works directly from moduli of smoothness of partial derivatives and is
//! used as an independent cross-check in low dimension.

use ndarray::{ArrayViewD, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::anisotropy::AnisotropyProfile;
use crate::error::{check_lebesgue_exponent, Error, Result};
use crate::field::{lp_norm, lp_norm_of, SampledField};
use crate::spectral::{layer_norms, max_layer};

/// Default bound on `‖residual‖_p / ‖f‖_p` accepted by [`block_norm`].
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Largest high-frequency energy fraction accepted by [`spectral_derivative`].
pub const HIGH_FREQUENCY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BesovParams {
    pub profile: AnisotropyProfile,
    pub p: f64,
    pub theta: f64,
    /// Truncation of the block sum; `None` uses the finest layer the grid
    /// can represent.
    pub s_max: Option<u32>,
    pub residual_tolerance: f64,
}

impl BesovParams {
    pub fn new(profile: AnisotropyProfile, p: f64, theta: f64) -> Result<Self> {
        check_lebesgue_exponent("p", p)?;
        if theta.is_nan() || theta < 1.0 {
            return Err(Error::InvalidExponent {
                name: "theta",
                value: theta,
                allowed: "[1, ∞]",
            });
        }
        Ok(Self {
            profile,
            p,
            theta,
            s_max: None,
            residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE,
        })
    }

    pub fn with_s_max(mut self, s_max: u32) -> Self {
        self.s_max = Some(s_max);
        self
    }

    pub fn with_residual_tolerance(mut self, tol: f64) -> Self {
        self.residual_tolerance = tol;
        self
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        let mut next = Self::new(self.profile.clone(), self.p, theta)?;
        next.s_max = self.s_max;
        next.residual_tolerance = self.residual_tolerance;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockNorm {
    pub value: f64,
    /// `‖f_{a^s}‖_p` for `s = 0..=S_max`.
    pub layer_norms: Vec<f64>,
    pub residual_norm: f64,
    pub s_max: u32,
}

/// `(Σ_s b^{sθ} ‖f_{a^s}‖_p^θ)^{1/θ}`, or `max_s b^s ‖f_{a^s}‖_p` for `θ = ∞`.
pub fn block_norm(f: &SampledField, params: &BesovParams) -> Result<f64> {
    block_norm_detailed(f, params).map(|b| b.value)
}

pub fn block_norm_detailed(f: &SampledField, params: &BesovParams) -> Result<BlockNorm> {
    check_lebesgue_exponent("p", params.p)?;
    let s_max = match params.s_max {
        Some(s) => s,
        None => max_layer(&params.profile, f.spec())?,
    };
    let (layer_norms, residual_norm) = layer_norms(f, &params.profile, s_max, params.p)?;
    let total = lp_norm(f, params.p)?;
    let tolerance = params.residual_tolerance * total;
    if residual_norm > tolerance {
        return Err(Error::UnresolvedSpectrum {
            residual: residual_norm,
            tolerance,
        });
    }
    let b = params.profile.weight_base();
    let weighted: Vec<f64> = layer_norms
        .iter()
        .enumerate()
        .map(|(s, n)| b.powi(s as i32) * n)
        .collect();
    Ok(BlockNorm {
        value: sequence_norm(&weighted, params.theta),
        layer_norms,
        residual_norm,
        s_max,
    })
}

/// `ℓ^θ` norm of a non-negative sequence, scaled by its maximum so the
/// result is never below the `ℓ^∞` norm.
pub(crate) fn sequence_norm(terms: &[f64], theta: f64) -> f64 {
    let peak = terms.iter().cloned().fold(0.0, f64::max);
    if theta.is_infinite() || peak == 0.0 {
        return peak;
    }
    let sum = crate::field::neumaier_sum(terms.iter().map(|t| (t / peak).powf(theta)));
    peak * sum.powf(theta.recip())
}

/// `∂^k f / ∂x_axis^k` by multiplying the spectrum with `(iλ)^k`.
///
/// Rejected when more than [`HIGH_FREQUENCY_LIMIT`] of the energy of
/// `(iλ)^k f̃` sits in the upper half of the frequency range.
pub fn spectral_derivative(f: &SampledField, axis: usize, order: u32) -> Result<SampledField> {
    let spec = f.spec();
    if axis >= spec.dim() {
        return Err(Error::InvalidArgument(format!(
            "axis {axis} out of range for a {}-dimensional grid",
            spec.dim()
        )));
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let mut spectrum = f.forward();
    let freqs = spec.axis_frequencies(axis);
    let cutoff = spec.nyquist(axis) / 2.0;
    let multipliers: Vec<Complex64> = freqs
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            // the -Λ bin has no +Λ partner; drop it so real fields stay real
            if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, lam).powu(order)
            }
        })
        .collect();
    let mut high = 0.0;
    let mut total = 0.0;
    for (idx, c) in spectrum.coefficients_mut().indexed_iter_mut() {
        let i = idx[axis];
        *c *= multipliers[i];
        let e = c.norm_sqr();
        total += e;
        if freqs[i].abs() > cutoff {
            high += e;
        }
    }
    let fraction = if total > 0.0 { high / total } else { 0.0 };
    if fraction > HIGH_FREQUENCY_LIMIT {
        return Err(Error::HighFrequency {
            fraction,
            limit: HIGH_FREQUENCY_LIMIT,
        });
    }
    Ok(spectrum.inverse())
}

/// How samples shifted past the box are treated by finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Boundary {
    /// Samples outside the box are zero and the difference is measured on
    /// the enlarged support.
    #[default]
    ZeroExtend,
    /// Only points whose whole stencil lies inside the box contribute.
    Interior,
}

fn binomial(k: u32, l: u32) -> f64 {
    (0..l).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// `‖Σ_{l=0}^k (-1)^{k-l} C_k^l f(· + l m h e_axis)‖_p` for a shift of `m`
/// grid steps.
pub fn difference_norm(
    f: &SampledField,
    order: u32,
    axis: usize,
    steps: usize,
    p: f64,
    boundary: Boundary,
) -> Result<f64> {
    check_lebesgue_exponent("p", p)?;
    if axis >= f.spec().dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    Ok(difference_norm_unchecked(
        f.values().view(),
        f.spec().cell_volume(),
        order,
        axis,
        steps,
        p,
        boundary,
    ))
}

fn difference_norm_unchecked(
    values: ArrayViewD<'_, Complex64>,
    cell: f64,
    order: u32,
    axis: usize,
    steps: usize,
    p: f64,
    boundary: Boundary,
) -> f64 {
    let n = values.shape()[axis] as isize;
    let shift = steps as isize;
    let k = order as isize;
    let coeffs: Vec<f64> = (0..=order)
        .map(|l| {
            let sign = if (order - l).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sign * binomial(order, l)
        })
        .collect();
    let (start, end) = match boundary {
        Boundary::ZeroExtend => (-k * shift, n),
        Boundary::Interior => (0, n - k * shift),
    };
    if end <= start {
        return 0.0;
    }
    let mut moduli = Vec::with_capacity(((end - start) as usize) * values.len() / n as usize);
    for lane in values.lanes(Axis(axis)) {
        for x in start..end {
            let mut acc = Complex64::new(0.0, 0.0);
            for (l, c) in coeffs.iter().enumerate() {
                let j = x + l as isize * shift;
                if (0..n).contains(&j) {
                    acc += lane[j as usize] * c;
                }
            }
            moduli.push(acc.norm());
        }
    }
    lp_norm_of(moduli.iter().copied(), cell, p)
}

/// `‖Δ^k_{mh} f‖_p` for `m = 1..=N_axis`. Beyond `N_axis` steps the shifted
/// copies no longer overlap and the value stays at the last entry under
/// [`Boundary::ZeroExtend`].
pub fn difference_profile(
    f: &SampledField,
    order: u32,
    axis: usize,
    p: f64,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    check_lebesgue_exponent("p", p)?;
    if axis >= f.spec().dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "difference order must be at least 1".into(),
        ));
    }
    let n = f.spec().samples()[axis];
    let cell = f.spec().cell_volume();
    let values = f.values().view();
    Ok((1..=n)
        .into_par_iter()
        .map(|m| difference_norm_unchecked(values.view(), cell, order, axis, m, p, boundary))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Modulus {
    pub value: f64,
    /// `t` is shorter than one grid step, so no shift was representable.
    pub no_shift: bool,
}

/// `ω_k(f, t e_axis)_p`, the supremum over grid shifts `h ∈ {h_i, 2h_i, …}`
/// with `h ≤ t`.
pub fn modulus_of_smoothness(
    f: &SampledField,
    order: u32,
    axis: usize,
    t: f64,
    p: f64,
    boundary: Boundary,
) -> Result<Modulus> {
    check_lebesgue_exponent("p", p)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shift bound t = {t} must be non-negative"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "difference order must be at least 1".into(),
        ));
    }
    if axis >= f.spec().dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let h = f.spec().spacing(axis);
    let n = f.spec().samples()[axis];
    let steps = ((t / h) * (1.0 + 1e-12)).floor();
    if steps < 1.0 {
        return Ok(Modulus {
            value: 0.0,
            no_shift: true,
        });
    }
    let m_max = if steps >= n as f64 { n } else { steps as usize };
    let cell = f.spec().cell_volume();
    let values = f.values().view();
    let value = (1..=m_max)
        .into_par_iter()
        .map(|m| difference_norm_unchecked(values.view(), cell, order, axis, m, p, boundary))
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Modulus {
        value,
        no_shift: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinitionNorm {
    pub value: f64,
    pub lp_term: f64,
    /// Per-axis `(∫ t^{-θα_i-1} ω^θ dt)^{1/θ}` (or the sup for `θ = ∞`).
    pub axis_terms: Vec<f64>,
    /// Per-axis contribution of `t < h_i` from the model `ω(t) ≈ ω(h_i)(t/h_i)^k`,
    /// included in `axis_terms` (before the `1/θ` root).
    pub lower_tails: Vec<f64>,
    /// Per-axis contribution of `t ≥ N_i h_i`, where the modulus is constant,
    /// included in `axis_terms` (before the `1/θ` root).
    pub upper_tails: Vec<f64>,
}

/// `‖f‖_p + Σ_i (∫_0^∞ t^{-θα_i-1} ω_{1+[α_i]}(D_i^{r̄_i} f, t e_i)_p^θ dt)^{1/θ}`,
/// with `θ = ∞` read as `‖f‖_p + Σ_i sup_t t^{-α_i} ω(…)`.
///
/// On the grid the modulus is piecewise constant in `t` (it only changes at
/// multiples of `h_i`), so the `t`-integral is evaluated exactly on each
/// step `[m h_i, (m+1) h_i)`.
pub fn definition_norm(f: &SampledField, params: &BesovParams) -> Result<DefinitionNorm> {
    check_lebesgue_exponent("p", params.p)?;
    let spec = f.spec();
    if spec.dim() > 2 {
        return Err(Error::InvalidArgument(format!(
            "definition norm supports d ≤ 2, got d = {}",
            spec.dim()
        )));
    }
    if params.profile.dim() != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "profile of dimension {} on a {}-dimensional grid",
            params.profile.dim(),
            spec.dim()
        )));
    }
    let p = params.p;
    let theta = params.theta;
    let lp_term = lp_norm(f, p)?;
    let mut axis_terms = Vec::with_capacity(spec.dim());
    let mut lower_tails = Vec::with_capacity(spec.dim());
    let mut upper_tails = Vec::with_capacity(spec.dim());
    for axis in 0..spec.dim() {
        let alpha = params.profile.fractional_parts()[axis];
        let rbar = params.profile.integer_parts()[axis];
        let order = if alpha >= 1.0 { 2 } else { 1 };
        let derivative = spectral_derivative(f, axis, rbar)?;
        let diffs = difference_profile(&derivative, order, axis, p, Boundary::ZeroExtend)?;
        // ω at t ∈ [m h, (m+1) h) is the running max over the first m shifts
        let mut running = 0.0f64;
        let omega: Vec<f64> = diffs
            .iter()
            .map(|&v| {
                running = running.max(v);
                running
            })
            .collect();
        let h = spec.spacing(axis);
        let n = omega.len();
        if theta.is_infinite() {
            let sup = omega
                .iter()
                .enumerate()
                .map(|(i, w)| ((i + 1) as f64 * h).powf(-alpha) * w)
                .fold(0.0, f64::max);
            axis_terms.push(sup);
            lower_tails.push(0.0);
            upper_tails.push(0.0);
            continue;
        }
        let ta = theta * alpha;
        let step_weight =
            |m: usize| ((m as f64 * h).powf(-ta) - ((m + 1) as f64 * h).powf(-ta)) / ta;
        let body = crate::field::neumaier_sum(
            omega[..n - 1]
                .iter()
                .enumerate()
                .map(|(i, w)| w.powf(theta) * step_weight(i + 1)),
        );
        let upper = omega[n - 1].powf(theta) * (n as f64 * h).powf(-ta) / ta;
        let lower = omega[0].powf(theta) * h.powf(-ta) / (theta * (order as f64 - alpha));
        axis_terms.push((lower + body + upper).powf(theta.recip()));
        lower_tails.push(lower);
        upper_tails.push(upper);
    }
    let value = lp_term + axis_terms.iter().sum::<f64>();
    Ok(DefinitionNorm {
        value,
        lp_term,
        axis_terms,
        lower_tails,
        upper_tails,
    })
}
