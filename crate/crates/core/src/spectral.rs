//! Frequency boxes, dyadic shells, Fourier sections and `a`-layering.
//!
//! The box `D_σ` is `{λ : |λ_j| < σ_j for all j}`; `D_{a^s}` uses
//! `σ_j = a_j^s`. The shell `Γ_{a^s}` is `D_{a^s} \ D_{a^{s-1}}` for `s ≥ 1`
//! and `Γ_{a^0} = D_{a^0}`. Inequalities are strict on the grid, so a grid
//! frequency sitting exactly on a box face belongs to the next shell and the
//! shells partition the frequency grid exactly.

use ndarray::{ArrayD, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyProfile;
use crate::error::{Error, Result};
use crate::field::{GridSpec, SampledField, SpectralField};

/// Box `D_σ = {|λ_j| < σ_j}` in frequency space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBox {
    bounds: Vec<f64>,
}

impl FrequencyBox {
    pub fn new(bounds: Vec<f64>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument(
                "frequency box needs at least one bound".into(),
            ));
        }
        for (j, &s) in bounds.iter().enumerate() {
            if s.is_nan() || s <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "frequency box bound σ[{j}] = {s} must be positive"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// `D_{a^s}`.
    pub fn dyadic(profile: &AnisotropyProfile, s: u32) -> Self {
        Self {
            bounds: profile.box_bounds(s),
        }
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Rejects boxes reaching more than one frequency step past the grid's
    /// frequency range.
    pub fn check_representable(&self, spec: &GridSpec) -> Result<()> {
        if self.bounds.len() != spec.dim() {
            return Err(Error::GridMismatch(format!(
                "{}-dimensional box on a {}-dimensional grid",
                self.bounds.len(),
                spec.dim()
            )));
        }
        for (axis, &bound) in self.bounds.iter().enumerate() {
            let nyquist = spec.nyquist(axis);
            if bound > nyquist + spec.frequency_spacing(axis) {
                return Err(Error::Nyquist {
                    axis,
                    bound,
                    nyquist,
                });
            }
        }
        Ok(())
    }

    /// Indicator of the box on the centred frequency grid.
    pub fn mask(&self, spec: &GridSpec) -> Result<ArrayD<bool>> {
        self.check_representable(spec)?;
        Ok(self.mask_unchecked(spec))
    }

    pub(crate) fn mask_unchecked(&self, spec: &GridSpec) -> ArrayD<bool> {
        let per_axis: Vec<Vec<bool>> = (0..spec.dim())
            .map(|j| {
                spec.axis_frequencies(j)
                    .into_iter()
                    .map(|lam| lam.abs() < self.bounds[j])
                    .collect()
            })
            .collect();
        ArrayD::from_shape_fn(spec.shape(), |idx| {
            per_axis.iter().enumerate().all(|(j, axis)| axis[idx[j]])
        })
    }
}

/// `(indicator of D_{a^s}, indicator of Γ_{a^s})` on the frequency grid.
pub fn shell_masks(
    profile: &AnisotropyProfile,
    s: u32,
    spec: &GridSpec,
) -> Result<(ArrayD<bool>, ArrayD<bool>)> {
    check_profile_dim(profile, spec)?;
    let inner = FrequencyBox::dyadic(profile, s).mask(spec)?;
    let shell = if s == 0 {
        inner.clone()
    } else {
        let below = FrequencyBox::dyadic(profile, s - 1).mask_unchecked(spec);
        let mut shell = inner.clone();
        Zip::from(&mut shell)
            .and(&below)
            .for_each(|sh, &b| *sh = *sh && !b);
        shell
    };
    Ok((inner, shell))
}

/// `S_σ(f)`: inverse transform of the coefficients restricted to the box.
pub fn fourier_section(f: &SampledField, bx: &FrequencyBox) -> Result<SampledField> {
    let mask = bx.mask(f.spec())?;
    Ok(f.forward().masked(&mask)?.inverse())
}

/// Same as [`fourier_section`] starting from coefficients.
pub fn spectral_section(f: &SpectralField, bx: &FrequencyBox) -> Result<SpectralField> {
    let mask = bx.mask(f.spec())?;
    f.masked(&mask)
}

fn check_profile_dim(profile: &AnisotropyProfile, spec: &GridSpec) -> Result<()> {
    if profile.dim() != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "profile of dimension {} on a {}-dimensional grid",
            profile.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Largest `S` with `D_{a^S}` representable on the grid.
pub fn max_layer(profile: &AnisotropyProfile, spec: &GridSpec) -> Result<u32> {
    check_profile_dim(profile, spec)?;
    FrequencyBox::dyadic(profile, 0).check_representable(spec)?;
    let mut s = 0u32;
    while FrequencyBox::dyadic(profile, s + 1)
        .check_representable(spec)
        .is_ok()
    {
        s += 1;
        if s > 4096 {
            break;
        }
    }
    Ok(s)
}

/// Per-point layer index: the smallest `s` with `λ ∈ D_{a^s}`, or `s_max + 1`
/// for frequencies outside `D_{a^{s_max}}`. Shell `s` is exactly
/// `{index == s}`, so the shells tile the grid with no overlap.
pub(crate) fn layer_index(
    profile: &AnisotropyProfile,
    s_max: u32,
    spec: &GridSpec,
) -> Result<ArrayD<u32>> {
    check_profile_dim(profile, spec)?;
    FrequencyBox::dyadic(profile, s_max).check_representable(spec)?;
    let levels: Vec<Vec<u32>> = (0..spec.dim())
        .map(|j| {
            let bounds: Vec<f64> = (0..=s_max)
                .map(|s| profile.bases()[j].powi(s as i32))
                .collect();
            spec.axis_frequencies(j)
                .into_iter()
                .map(|lam| {
                    bounds
                        .iter()
                        .position(|&b| lam.abs() < b)
                        .map_or(s_max + 1, |s| s as u32)
                })
                .collect()
        })
        .collect();
    Ok(ArrayD::from_shape_fn(spec.shape(), |idx| {
        levels
            .iter()
            .enumerate()
            .map(|(j, axis)| axis[idx[j]])
            .max()
            .unwrap_or(0)
    }))
}

/// The `a`-layering `f = Σ_{s ≤ S_max} f_{a^s} + residual`.
#[derive(Debug, Clone)]
pub struct LayerStack {
    profile: AnisotropyProfile,
    layers: Vec<SampledField>,
    residual: SampledField,
}

impl LayerStack {
    pub fn profile(&self) -> &AnisotropyProfile {
        &self.profile
    }

    pub fn s_max(&self) -> u32 {
        self.layers.len() as u32 - 1
    }

    pub fn layers(&self) -> &[SampledField] {
        &self.layers
    }

    pub fn layer(&self, s: u32) -> Option<&SampledField> {
        self.layers.get(s as usize)
    }

    /// Frequencies outside `D_{a^{S_max}}`.
    pub fn residual(&self) -> &SampledField {
        &self.residual
    }

    /// `Σ layers + residual`.
    pub fn reconstruct(&self) -> SampledField {
        let mut values = self.residual.values().clone();
        for layer in &self.layers {
            values += layer.values();
        }
        SampledField::from_values(self.residual.spec().clone(), values)
            .expect("layers share the residual's grid")
    }
}

/// Splits the spectrum with one forward transform and exact 0/1 masks.
pub fn layer_decompose(
    f: &SampledField,
    profile: &AnisotropyProfile,
    s_max: u32,
) -> Result<LayerStack> {
    let index = layer_index(profile, s_max, f.spec())?;
    let spectrum = f.forward();
    let mut parts: Vec<SampledField> = (0..=s_max + 1)
        .into_par_iter()
        .map(|s| select_layer(&spectrum, &index, s))
        .collect();
    let residual = parts.pop().expect("at least one layer plus residual");
    Ok(LayerStack {
        profile: profile.clone(),
        layers: parts,
        residual,
    })
}

fn select_layer(spectrum: &SpectralField, index: &ArrayD<u32>, s: u32) -> SampledField {
    let mut any = false;
    let mut coefficients = spectrum.coefficients().clone();
    Zip::from(&mut coefficients).and(index).for_each(|c, &i| {
        if i != s {
            *c = Complex64::new(0.0, 0.0);
        } else if c.norm_sqr() > 0.0 {
            any = true;
        }
    });
    if !any {
        return SampledField::zeros(spectrum.spec().clone());
    }
    SpectralField::from_coefficients(spectrum.spec().clone(), coefficients)
        .expect("shape preserved")
        .inverse()
}

/// `L_p` norms of each layer and of the residual, without keeping the layers.
pub(crate) fn layer_norms(
    f: &SampledField,
    profile: &AnisotropyProfile,
    s_max: u32,
    p: f64,
) -> Result<(Vec<f64>, f64)> {
    let index = layer_index(profile, s_max, f.spec())?;
    let spectrum = f.forward();
    let mut norms = (0..=s_max + 1)
        .into_par_iter()
        .map(|s| crate::field::lp_norm(&select_layer(&spectrum, &index, s), p))
        .collect::<Result<Vec<f64>>>()?;
    let residual = norms.pop().expect("residual norm");
    Ok((norms, residual))
}
