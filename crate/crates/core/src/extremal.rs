//! Sinc-product entire functions and their `L_p` norms.
//!
//! `F_0(x) = Π_j √(2/π) sin(x_j)/x_j` has spectrum equal to the indicator of
//! the unit box, and for `k ≥ 1`
//!
//! ```text
//! F_k(x) = Π_j √(2/π) sin(a_j^k x_j)/x_j − Π_j √(2/π) sin(a_j^{k−1} x_j)/x_j
//! ```
//!
//! has spectrum equal to the indicator of the shell `Γ_{a^k}`. Both are
//! available pointwise-sampled ([`build_f_k`]) and as the exact shell
//! projection of the samples ([`build_f_k_band_limited`]).

use std::collections::HashMap;
use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::{Mutex, OnceLock};

use ndarray::ArrayD;
use num_complex::Complex64;
use serde::Serialize;

use crate::anisotropy::AnisotropyProfile;
use crate::besov::{block_norm_detailed, BesovParams};
use crate::error::{check_lebesgue_exponent, Error, Result};
use crate::field::{neumaier_sum, GridSpec, SampledField};
use crate::quad::{integrate, Tolerance};
use crate::spectral::{shell_masks, FrequencyBox};

/// `sin(ν x) / x`, switching to its Taylor series when `|ν x| < 1e-4`.
pub fn sinc_kernel(nu: f64, x: f64) -> f64 {
    let t = nu * x;
    if t.abs() < 1e-4 {
        let t2 = t * t;
        nu * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0))
    } else {
        t.sin() / x
    }
}

/// Degrees `ν_j` and amplitude of `amplitude · Π_j sin(ν_j x_j)/x_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SincProductSpec {
    degrees: Vec<f64>,
    amplitude: f64,
}

impl SincProductSpec {
    /// Amplitude defaults to `(2/π)^{d/2}`.
    pub fn new(degrees: Vec<f64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidArgument(
                "sinc product needs at least one axis".into(),
            ));
        }
        if let Some(&nu) = degrees.iter().find(|nu| !(nu.is_finite() && **nu > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "sinc degree {nu} must be positive and finite"
            )));
        }
        let amplitude = FRAC_2_PI.powf(degrees.len() as f64 / 2.0);
        Ok(Self { degrees, amplitude })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.amplitude
            * self
                .degrees
                .iter()
                .zip(x)
                .map(|(&nu, &xj)| sinc_kernel(nu, xj))
                .product::<f64>()
    }
}

/// Breakdown of `c_p = ∫_R |sin t / t|^p dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SincConstant {
    pub value: f64,
    /// `2 ∫_0^T` by adaptive quadrature, period by period.
    pub quadrature: f64,
    /// Asymptotic tail `2 m_p T^{1−p}/(p−1)`, `m_p` the mean of `|sin|^p`.
    pub tail: f64,
    /// Crude bound `2 T^{1−p}/(p−1)` on the tail (from `|sin| ≤ 1`).
    pub tail_bound: f64,
    /// Estimated size of the neglected oscillatory remainder, `O(T^{−p−1})`.
    pub remainder: f64,
    pub cutoff: f64,
    pub quadrature_error: f64,
}

/// Target for the neglected tail remainder relative to `c_p`.
const TAIL_TARGET: f64 = 1e-11;
const MAX_PERIODS: usize = 400_000;

fn constant_cache() -> &'static Mutex<HashMap<u64, SincConstant>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, SincConstant>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `c_p = ∫_R |sin t/t|^p dt` for `p > 1`; `c_2 = π`, `c_4 = 2π/3`.
pub fn sinc_lp_constant(p: f64) -> Result<f64> {
    sinc_lp_constant_detailed(p).map(|c| c.value)
}

/// The integral is split at `T = Kπ`. Writing `|sin t|^p = m_p + φ(t)` with
/// `φ` π-periodic of mean zero and symmetric about `π/2`, the tail is
/// `m_p T^{1−p}/(p−1)` up to `∫_T^∞ φ(t) t^{−p} dt = O(T^{−p−1})`, so `K`
/// only needs to grow like `ε^{−1/(p+1)}`.
pub fn sinc_lp_constant_detailed(p: f64) -> Result<SincConstant> {
    check_lebesgue_exponent("p", p)?;
    if p.is_infinite() {
        return Err(Error::InvalidExponent {
            name: "p",
            value: p,
            allowed: "(1, ∞)",
        });
    }
    if let Some(c) = constant_cache()
        .lock()
        .expect("cache poisoned")
        .get(&p.to_bits())
    {
        return Ok(*c);
    }
    let tol = Tolerance {
        abs: 1e-16,
        rel: 1e-13,
        max_intervals: 200,
    };
    let mean = integrate(|t: f64| t.sin().abs().powf(p), 0.0, PI, tol)?.value / PI;
    // remainder ≈ p T^{-p-1} |∫Φ|, and |∫Φ| over a period is well below 1
    let cutoff_target = (p / TAIL_TARGET).powf((p + 1.0).recip());
    let periods = ((cutoff_target / PI).ceil() as usize).clamp(8, MAX_PERIODS);
    let integrand = |t: f64| sinc_kernel(1.0, t).abs().powf(p);
    let mut pieces = Vec::with_capacity(periods);
    let mut quadrature_error = 0.0;
    for k in 0..periods {
        let r = integrate(integrand, k as f64 * PI, (k + 1) as f64 * PI, tol)?;
        pieces.push(r.value);
        quadrature_error += r.error;
    }
    // smallest terms first
    let half = neumaier_sum(pieces.iter().rev().copied());
    let cutoff = periods as f64 * PI;
    let decay = cutoff.powf(1.0 - p) / (p - 1.0);
    let tail = 2.0 * mean * decay;
    let quadrature = 2.0 * half;
    let value = quadrature + tail;
    let c = SincConstant {
        value,
        quadrature,
        tail,
        tail_bound: 2.0 * decay,
        remainder: 2.0 * p * cutoff.powf(-p - 1.0),
        cutoff,
        quadrature_error: 2.0 * quadrature_error,
    };
    constant_cache()
        .lock()
        .expect("cache poisoned")
        .insert(p.to_bits(), c);
    Ok(c)
}

/// Exact `L_p(R^d)` norm of the product, `amplitude · Π_j (ν_j^{p−1} c_p)^{1/p}`;
/// for `p = ∞` this is the value at the origin, `amplitude · Π_j ν_j`.
pub fn analytic_sinc_norm(spec: &SincProductSpec, p: f64) -> Result<f64> {
    check_lebesgue_exponent("p", p)?;
    if p.is_infinite() {
        return Ok(spec.amplitude.abs() * spec.degrees.iter().product::<f64>());
    }
    let c = sinc_lp_constant(p)?;
    let factor: f64 = spec
        .degrees
        .iter()
        .map(|nu| (nu.powf(p - 1.0) * c).powf(p.recip()))
        .product();
    Ok(spec.amplitude.abs() * factor)
}

/// Samples of a separable product `Π_j v_j[m_j]`.
fn outer_product(spec: &GridSpec, factors: &[Vec<f64>]) -> ArrayD<f64> {
    ArrayD::from_shape_fn(spec.shape(), |idx| {
        factors.iter().enumerate().map(|(j, v)| v[idx[j]]).product()
    })
}

fn sinc_factors(spec: &GridSpec, degrees: &[f64]) -> Vec<Vec<f64>> {
    let scale = FRAC_2_PI.sqrt();
    degrees
        .iter()
        .enumerate()
        .map(|(j, &nu)| {
            spec.axis_coordinates(j)
                .into_iter()
                .map(|x| scale * sinc_kernel(nu, x))
                .collect()
        })
        .collect()
}

fn check_dim(profile: &AnisotropyProfile, spec: &GridSpec) -> Result<()> {
    if profile.dim() != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "profile of dimension {} on a {}-dimensional grid",
            profile.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Pointwise samples of `F_k`. Fails when `D_{a^k}` is not representable.
pub fn build_f_k(profile: &AnisotropyProfile, k: u32, spec: &GridSpec) -> Result<SampledField> {
    check_dim(profile, spec)?;
    FrequencyBox::dyadic(profile, k).check_representable(spec)?;
    let outer = outer_product(spec, &sinc_factors(spec, &profile.box_bounds(k)));
    let values = if k == 0 {
        outer
    } else {
        outer - outer_product(spec, &sinc_factors(spec, &profile.box_bounds(k - 1)))
    };
    SampledField::from_real(spec.clone(), values)
}

/// Shell-`k` projection of the samples of `F_k`: exactly band-limited to
/// `Γ_{a^k}` on the grid.
pub fn build_f_k_band_limited(
    profile: &AnisotropyProfile,
    k: u32,
    spec: &GridSpec,
) -> Result<SampledField> {
    let f = build_f_k(profile, k, spec)?;
    let (_, shell) = shell_masks(profile, k, spec)?;
    let mut projected = f.forward().masked(&shell)?.inverse();
    // F_k is real; drop the roundoff imaginary part
    projected =
        SampledField::from_real(spec.clone(), projected.values().mapv(|v: Complex64| v.re))?;
    Ok(projected)
}

/// Triangle-inequality bounds `(|‖A‖ − ‖B‖|, ‖A‖ + ‖B‖)` on `‖F_k‖_p` with
/// `A`, `B` the sinc products of degrees `a^k` and `a^{k−1}`.
pub fn f_k_norm_bounds(profile: &AnisotropyProfile, k: u32, p: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "norm bounds are defined for k ≥ 1".into(),
        ));
    }
    let outer = analytic_sinc_norm(&SincProductSpec::new(profile.box_bounds(k))?, p)?;
    let inner = analytic_sinc_norm(&SincProductSpec::new(profile.box_bounds(k - 1))?, p)?;
    Ok(((outer - inner).abs(), outer + inner))
}

/// Grid for the sinc family at index `k`: half-widths `L_j = L_0 / ν_j` with
/// `ν_j = a_j^{max(k−1, 0)}` and `samples` points per axis. `F_k` on this
/// grid is an exact rescaling of `F_1` on the `k = 1` grid, so sampled norms
/// follow the continuous scaling law `‖F_k‖_p = 2^{d(k−1)/p′}‖F_1‖_p`.
pub fn sinc_grid(
    profile: &AnisotropyProfile,
    k: u32,
    base_half_width: f64,
    samples: usize,
) -> Result<GridSpec> {
    let scale = profile.box_bounds(k.saturating_sub(1));
    let spec = GridSpec::new(
        scale.iter().map(|nu| base_half_width / nu).collect(),
        vec![samples; profile.dim()],
    )?;
    FrequencyBox::dyadic(profile, k).check_representable(&spec)?;
    Ok(spec)
}

/// Default `L_0` of the sinc grids.
pub const DEFAULT_SINC_HALF_WIDTH: f64 = 200.0;

/// Lower-bound witness `g_1 = c F_n` normalised to the unit ball of
/// `B^r_{p,1}`.
#[derive(Debug, Clone)]
pub struct LowerBoundWitness {
    pub field: SampledField,
    /// `c = C_1 · 2^{−n(g + d/p′)}`.
    pub scale: f64,
    pub c1: f64,
}

/// `g_1 = C_1 2^{−n(g+d/p′)} F_n` built from the band-limited `F_n`, with
/// `C_1` chosen so that the `θ = 1` block norm of `g_1` equals 1.
pub fn build_g1(
    profile: &AnisotropyProfile,
    n: u32,
    p: f64,
    spec: &GridSpec,
) -> Result<LowerBoundWitness> {
    check_lebesgue_exponent("p", p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("g_1 is defined for n ≥ 1".into()));
    }
    let f = build_f_k_band_limited(profile, n, spec)?;
    let params = BesovParams::new(profile.clone(), p, 1.0)?;
    let norm = block_norm_detailed(&f, &params)?.value;
    if norm == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "F_{n} vanishes on this grid; the shell holds no grid frequencies"
        )));
    }
    let scale = norm.recip();
    let conj = if p.is_infinite() {
        1.0
    } else {
        1.0 - p.recip()
    };
    let c1 = scale * (n as f64 * (profile.g() + profile.dim() as f64 * conj)).exp2();
    Ok(LowerBoundWitness {
        field: f.scale(scale),
        scale,
        c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{lp_norm, sample};
    use crate::spectral::fourier_section;
    use approx::assert_relative_eq;

    #[test]
    fn sinc_kernel_is_smooth_at_the_origin() {
        for nu in [0.5, 1.0, 3.0] {
            assert_eq!(sinc_kernel(nu, 0.0), nu);
            for x in [1e-6, 9.9e-5 / nu, 1.01e-4 / nu, 1e-2] {
                let direct = (nu * x).sin() / x;
                assert_relative_eq!(sinc_kernel(nu, x), direct, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn classical_sinc_constants() {
        let c2 = sinc_lp_constant_detailed(2.0).unwrap();
        assert!((c2.value - PI).abs() < 1e-8, "{c2:?}");
        assert!(c2.remainder < 1e-10 * c2.value);
        let c4 = sinc_lp_constant(4.0).unwrap();
        assert!((c4 - 2.0 * PI / 3.0).abs() < 1e-8, "{c4}");
        let c3 = sinc_lp_constant(3.0).unwrap();
        assert!(c4 < c3 && c3 < c2.value);
        // independent per-period quadrature
        assert!((c3 - 2.416_888_418_981).abs() < 1e-9, "{c3}");
    }

    #[test]
    fn sinc_constant_rejects_divergent_exponents() {
        assert!(sinc_lp_constant(1.0).is_err());
        assert!(sinc_lp_constant(0.5).is_err());
        assert!(sinc_lp_constant(f64::INFINITY).is_err());
    }

    #[test]
    fn sinc_constant_at_non_integer_exponent() {
        // ∫_R |sin t/t|^{3/2} dt, independent high-precision value
        let c = sinc_lp_constant_detailed(1.5).unwrap();
        assert!((c.value - 4.425_573_912_49).abs() < 1e-8, "{c:?}");
    }

    #[test]
    fn analytic_norm_examples() {
        let one = SincProductSpec::new(vec![1.0]).unwrap();
        assert_relative_eq!(
            analytic_sinc_norm(&one, 2.0).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-9
        );
        let two = SincProductSpec::new(vec![2.0, 2.0]).unwrap();
        assert_relative_eq!(
            analytic_sinc_norm(&two, 2.0).unwrap(),
            4.0,
            max_relative = 1e-9
        );
        for p in [1.5, 3.0] {
            let a = analytic_sinc_norm(&SincProductSpec::new(vec![1.3, 0.7]).unwrap(), p).unwrap();
            let b = analytic_sinc_norm(&SincProductSpec::new(vec![2.6, 0.7]).unwrap(), p).unwrap();
            assert_relative_eq!(b / a, 2f64.powf(1.0 - 1.0 / p), max_relative = 1e-12);
        }
        assert_relative_eq!(
            analytic_sinc_norm(&one, f64::INFINITY).unwrap(),
            FRAC_2_PI.sqrt()
        );
        assert!(SincProductSpec::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn analytic_norm_matches_quadrature() {
        let spec = SincProductSpec::new(vec![1.7]).unwrap();
        let grid = GridSpec::isotropic(1, 2000.0, 1 << 16).unwrap();
        let f = sample(|x| spec.evaluate(x), &grid).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let exact = analytic_sinc_norm(&spec, p).unwrap();
            let numeric = lp_norm(&f, p).unwrap();
            assert!(
                (numeric - exact).abs() / exact < 0.01,
                "p = {p}: {numeric} vs {exact}"
            );
        }
    }

    #[test]
    fn bound_constants_are_k_independent() {
        for (r, d) in [(vec![1.0], 1.0), (vec![1.0, 2.0], 2.0)] {
            let profile = AnisotropyProfile::new(&r).unwrap();
            for p in [1.5, 2.0, 3.0] {
                let pc = 1.0 - 1.0 / p;
                let base = FRAC_2_PI.powf(d / 2.0) * sinc_lp_constant(p).unwrap().powf(d / p);
                for k in 1..=5 {
                    let (lo, hi) = f_k_norm_bounds(&profile, k, p).unwrap();
                    let unit = (d * k as f64 * pc).exp2();
                    assert_relative_eq!(
                        hi / unit,
                        base * (1.0 + (-d * pc).exp2()),
                        max_relative = 1e-10
                    );
                    assert_relative_eq!(
                        lo / unit,
                        base * (1.0 - (-d * pc).exp2()),
                        max_relative = 1e-10
                    );
                }
            }
        }
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        assert!(f_k_norm_bounds(&profile, 0, 2.0).is_err());
    }

    #[test]
    fn f_zero_spectrum_is_the_unit_box() {
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        let spec = GridSpec::isotropic(1, 200.0, 1 << 14).unwrap();
        let f = build_f_k(&profile, 0, &spec).unwrap();
        for (i, c) in f.forward().coefficients().iter().enumerate() {
            let lam = spec.frequency(0, i).abs();
            if lam < 0.95 {
                assert!(
                    (c - Complex64::new(1.0, 0.0)).norm() < 0.05,
                    "λ = {lam}: {c}"
                );
            } else if lam > 1.05 {
                assert!(c.norm() < 0.05, "λ = {lam}: {c}");
            }
        }
    }

    #[test]
    fn f_k_is_real_and_even() {
        let profile = AnisotropyProfile::new(&[1.0, 2.0]).unwrap();
        let spec = GridSpec::isotropic(2, 20.0, 64).unwrap();
        let f = build_f_k(&profile, 1, &spec).unwrap();
        assert_eq!(f.max_imaginary(), 0.0);
        let v = f.values();
        for i in 1..64 {
            for j in 1..64 {
                assert_eq!(v[[i, j]], v[[64 - i, j]]);
                assert_eq!(v[[i, j]], v[[i, 64 - j]]);
            }
        }
    }

    #[test]
    fn plancherel_for_f_one() {
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        let spec = sinc_grid(&profile, 1, DEFAULT_SINC_HALF_WIDTH, 1 << 14).unwrap();
        let f = build_f_k(&profile, 1, &spec).unwrap();
        let norm = lp_norm(&f, 2.0).unwrap();
        assert!((norm - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.02, "{norm}");
    }

    #[test]
    fn sampled_norms_stay_within_triangle_bounds() {
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        for k in 1..=5 {
            let spec = sinc_grid(&profile, k, DEFAULT_SINC_HALF_WIDTH, 1 << 14).unwrap();
            let f = build_f_k(&profile, k, &spec).unwrap();
            let norm = lp_norm(&f, 2.0).unwrap();
            let (lo, hi) = f_k_norm_bounds(&profile, k, 2.0).unwrap();
            assert!(
                norm >= lo * 0.95 && norm <= hi * 1.05,
                "k = {k}: {lo} ≤ {norm} ≤ {hi}"
            );
        }
    }

    #[test]
    fn band_limited_shell_has_no_lower_section() {
        let profile = AnisotropyProfile::new(&[1.0, 2.0]).unwrap();
        let spec = sinc_grid(&profile, 2, 60.0, 256).unwrap();
        let f = build_f_k_band_limited(&profile, 2, &spec).unwrap();
        let below = fourier_section(&f, &FrequencyBox::dyadic(&profile, 1)).unwrap();
        assert!(below.max_abs() < 1e-10);

        // F_0 + F_2 sectioned at D_{a^1} gives F_0
        let f0 = build_f_k_band_limited(&profile, 0, &spec).unwrap();
        let sum = f0.add(&f).unwrap();
        let section = fourier_section(&sum, &FrequencyBox::dyadic(&profile, 1)).unwrap();
        assert!(section.sub(&f0).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn g1_is_normalised_and_c1_is_stable() {
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        let p = 2.0;
        let mut c1 = Vec::new();
        for n in 2..=5 {
            let spec = sinc_grid(&profile, n, DEFAULT_SINC_HALF_WIDTH, 1 << 13).unwrap();
            let g = build_g1(&profile, n, p, &spec).unwrap();
            let params = BesovParams::new(profile.clone(), p, 1.0).unwrap();
            let norm = crate::besov::block_norm(&g.field, &params).unwrap();
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
            let below = fourier_section(&g.field, &FrequencyBox::dyadic(&profile, n - 1)).unwrap();
            assert!(below.max_abs() < 1e-10);
            c1.push(g.c1);
        }
        let max = c1.iter().cloned().fold(0.0, f64::max);
        let min = c1.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 4.0, "{c1:?}");
    }

    #[test]
    fn nyquist_is_enforced() {
        let profile = AnisotropyProfile::new(&[1.0]).unwrap();
        let spec = GridSpec::isotropic(1, 100.0, 64).unwrap();
        assert!(matches!(
            build_f_k(&profile, 3, &spec),
            Err(Error::Nyquist { .. })
        ));
        assert!(sinc_grid(&profile, 4, 200.0, 128).is_err());
    }
}
