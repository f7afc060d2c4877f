//! Approximation by Fourier sections, rate scans and the inequality of
//! different metrics.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use ndarray::Zip;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::anisotropy::AnisotropyProfile;
use crate::besov::{block_norm, BesovParams};
use crate::error::{check_lebesgue_exponent, Error, Result};
use crate::extremal::{build_f_k_band_limited, build_g1, sinc_grid};
use crate::field::{
    format_float, lp_norm, tail_estimate, GridSpec, SampledField, SpectralField, TailEstimate,
};
use crate::spectral::{fourier_section, FrequencyBox};

/// Class-membership slack for rate-scan families.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-6;
/// Rows whose error is within this factor of the roundoff floor are not fitted.
pub const NOISE_FLOOR_FACTOR: f64 = 1e3;
/// Relative roundoff level of the transforms and norms.
pub const ROUNDOFF: f64 = 1e-15;

fn check_finite_exponent(name: &'static str, q: f64) -> Result<()> {
    check_lebesgue_exponent(name, q)?;
    if q.is_infinite() {
        return Err(Error::InvalidExponent {
            name,
            value: q,
            allowed: "(1, ∞)",
        });
    }
    Ok(())
}

/// `ℰ_{D_{a^n}}(f)_q = ‖f − S_{a^{n−1}}(f)‖_q` for `n ≥ 1`, `1 < q < ∞`.
pub fn truncation_error(
    f: &SampledField,
    profile: &AnisotropyProfile,
    n: u32,
    q: f64,
) -> Result<f64> {
    truncation_remainder(f, profile, n, q).map(|(e, _)| e)
}

/// The error together with the remainder `f − S_{a^{n−1}}(f)`.
pub fn truncation_remainder(
    f: &SampledField,
    profile: &AnisotropyProfile,
    n: u32,
    q: f64,
) -> Result<(f64, SampledField)> {
    check_finite_exponent("q", q)?;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "truncation index n must be at least 1".into(),
        ));
    }
    if profile.dim() != f.spec().dim() {
        return Err(Error::GridMismatch(format!(
            "profile of dimension {} on a {}-dimensional grid",
            profile.dim(),
            f.spec().dim()
        )));
    }
    let section = fourier_section(f, &FrequencyBox::dyadic(profile, n - 1))?;
    let remainder = f.sub(&section)?;
    Ok((lp_norm(&remainder, q)?, remainder))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalRate {
    /// `g(r) − d(1/p − 1/q)`.
    pub exponent: f64,
    /// The estimate needs a positive exponent.
    pub feasible: bool,
}

/// `g(r) − d(1/p − 1/q)` for `1 < p ≤ q < ∞`.
pub fn theoretical_rate(profile: &AnisotropyProfile, p: f64, q: f64) -> Result<TheoreticalRate> {
    check_finite_exponent("p", p)?;
    check_finite_exponent("q", q)?;
    if p > q {
        return Err(Error::InvalidArgument(format!(
            "need p ≤ q, got p = {p}, q = {q}"
        )));
    }
    let exponent = profile.g() - profile.dim() as f64 * (p.recip() - q.recip());
    Ok(TheoreticalRate {
        exponent,
        feasible: exponent > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u32,
    pub error: f64,
    /// `θ = 1` block norm of the family member.
    pub class_norm: f64,
    /// Roundoff floor `1e-15 ‖f‖_q`.
    pub noise_floor: f64,
    /// Estimated error of `ℰ_n` from truncating the remainder to the box.
    pub tail_error: f64,
    /// Whether the row entered the fit.
    pub fitted: bool,
    pub grid: GridSpec,
}

impl RateRow {
    pub fn log2_error(&self) -> f64 {
        self.error.log2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fitted_slope: f64,
    pub theoretical_exponent: f64,
    pub p: f64,
    pub q: f64,
    pub r: Vec<f64>,
}

impl RateReport {
    /// `n,error,log2_error` with one line per row, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,error,log2_error\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.n,
                format_float(row.error),
                format_float(row.log2_error())
            ));
        }
        out
    }

    pub fn sidecar(&self) -> serde_json::Value {
        let grid: BTreeMap<String, &GridSpec> = self
            .rows
            .iter()
            .map(|r| (r.n.to_string(), &r.grid))
            .collect();
        let excluded: Vec<u32> = self
            .rows
            .iter()
            .filter(|r| !r.fitted)
            .map(|r| r.n)
            .collect();
        serde_json::json!({
            "fitted_slope": self.fitted_slope,
            "theoretical_exponent": self.theoretical_exponent,
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "grid": grid,
            "below_noise_floor": excluded,
        })
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} points, need at least 3",
            xs.len().min(ys.len())
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Errors `ℰ_{D_{a^n}}(f_n)_q` over `n_range` with the slope of `log2 ℰ_n`
/// against `n`.
///
/// Every member must lie in the unit ball of `B^r_{p,1}` (block norm
/// `≤ 1 + 1e-6`). Rows are reported but left out of the fit when the error
/// is below `1e3` times the roundoff floor or below the estimated box-tail
/// error of the remainder.
pub fn rate_scan<F>(
    family: F,
    profile: &AnisotropyProfile,
    p: f64,
    q: f64,
    n_range: RangeInclusive<u32>,
) -> Result<RateReport>
where
    F: Fn(u32) -> Result<SampledField> + Sync,
{
    let rate = theoretical_rate(profile, p, q)?;
    let ns: Vec<u32> = n_range.collect();
    if ns.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} values of n, need at least 3",
            ns.len()
        )));
    }
    if ns[0] == 0 {
        return Err(Error::InvalidArgument("n must start at 1 or later".into()));
    }
    let params = BesovParams::new(profile.clone(), p, 1.0)?;
    let rows: Vec<RateRow> = ns
        .par_iter()
        .map(|&n| -> Result<RateRow> {
            let f = family(n)?;
            let class_norm = block_norm(&f, &params)?;
            if class_norm > 1.0 + MEMBERSHIP_TOLERANCE {
                return Err(Error::NotInClass {
                    n,
                    norm: class_norm,
                });
            }
            let (error, remainder) = truncation_remainder(&f, profile, n, q)?;
            let TailEstimate { norm_error, .. } = tail_estimate(&remainder, q)?;
            let noise_floor = ROUNDOFF * lp_norm(&f, q)?;
            Ok(RateRow {
                n,
                error,
                class_norm,
                noise_floor,
                tail_error: norm_error,
                fitted: error > NOISE_FLOOR_FACTOR * noise_floor && error > norm_error,
                grid: f.spec().clone(),
            })
        })
        .collect::<Result<_>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.fitted)
        .map(|r| (r.n as f64, r.log2_error()))
        .unzip();
    let fitted_slope = least_squares_slope(&xs, &ys).map_err(|_| {
        Error::DegenerateFit(format!(
            "only {} of {} rows lie above the noise floor",
            xs.len(),
            rows.len()
        ))
    })?;
    Ok(RateReport {
        rows,
        fitted_slope,
        theoretical_exponent: rate.exponent,
        p,
        q,
        r: profile.smoothness().to_vec(),
    })
}

/// Grid policy shared by the sinc families: `L_0` and the per-axis sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SincGridPolicy {
    pub half_width: f64,
    pub samples: usize,
}

impl SincGridPolicy {
    /// Defaults sized for the desk-scale scans: `2^14` samples in 1D,
    /// `2^10` per axis in 2D, `2^6` in 3D.
    pub fn default_for(d: usize) -> Self {
        match d {
            1 => Self {
                half_width: 1600.0,
                samples: 1 << 14,
            },
            2 => Self {
                half_width: 320.0,
                samples: 1 << 10,
            },
            _ => Self {
                half_width: 16.0,
                samples: 1 << 6,
            },
        }
    }

    pub fn grid(&self, profile: &AnisotropyProfile, k: u32) -> Result<GridSpec> {
        sinc_grid(profile, k, self.half_width, self.samples)
    }
}

/// Family `n ↦ g_1(n)` of lower-bound witnesses.
pub fn lower_bound_family(
    profile: AnisotropyProfile,
    p: f64,
    policy: SincGridPolicy,
) -> impl Fn(u32) -> Result<SampledField> + Sync {
    move |n| {
        let spec = policy.grid(&profile, n)?;
        Ok(build_g1(&profile, n, p, &spec)?.field)
    }
}

/// Family `n ↦ c · 2^{−n(g + d/p′)} F_n` with the band-limited `F_n`.
pub fn scaled_shell_family(
    profile: AnisotropyProfile,
    p: f64,
    c: f64,
    policy: SincGridPolicy,
) -> impl Fn(u32) -> Result<SampledField> + Sync {
    move |n| {
        let spec = policy.grid(&profile, n)?;
        let conj = 1.0 - p.recip();
        let scale = c * (-(n as f64) * (profile.g() + profile.dim() as f64 * conj)).exp2();
        Ok(build_f_k_band_limited(&profile, n, &spec)?.scale(scale))
    }
}

/// Family constant in `n`: `f / block_norm(f; p, θ = 1)`.
pub fn fixed_family(
    f: SampledField,
    profile: &AnisotropyProfile,
    p: f64,
) -> Result<impl Fn(u32) -> Result<SampledField> + Sync> {
    let norm = block_norm(&f, &BesovParams::new(profile.clone(), p, 1.0)?)?;
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot normalise the zero field".into(),
        ));
    }
    let g = f.scale(norm.recip());
    Ok(move |_n| Ok(g.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NikolskiiRecord {
    /// `‖g‖_{p2}`.
    pub lhs: f64,
    /// `2^d (Π ν_j)^{1/p1 − 1/p2} ‖g‖_{p1}`.
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    /// Spectral energy outside the closed box `|λ_j| ≤ ν_j`, relative.
    pub out_of_band: f64,
}

/// Largest out-of-band energy fraction accepted by [`nikolskii_check`].
pub const BAND_LIMIT_TOLERANCE: f64 = 1e-8;

/// `‖g‖_{p2} ≤ 2^d (Π ν_j)^{1/p1 − 1/p2} ‖g‖_{p1}` for `g` band-limited to
/// `|λ_j| ≤ ν_j`, `1 < p1 ≤ p2 ≤ ∞`.
pub fn nikolskii_check(g: &SampledField, nu: &[f64], p1: f64, p2: f64) -> Result<NikolskiiRecord> {
    check_lebesgue_exponent("p1", p1)?;
    check_lebesgue_exponent("p2", p2)?;
    if p1 > p2 {
        return Err(Error::InvalidArgument(format!(
            "need p1 ≤ p2, got {p1} > {p2}"
        )));
    }
    let spec = g.spec();
    if nu.len() != spec.dim() {
        return Err(Error::GridMismatch(format!(
            "{} degrees for a {}-dimensional field",
            nu.len(),
            spec.dim()
        )));
    }
    if let Some(v) = nu.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "degree {v} must be positive and finite"
        )));
    }
    let spectrum = g.forward();
    let inside =
        |idx: &ndarray::IxDyn| (0..spec.dim()).all(|j| spec.frequency(j, idx[j]).abs() <= nu[j]);
    let mut outside = 0.0;
    let mut total = 0.0;
    for (idx, c) in spectrum.coefficients().indexed_iter() {
        let e = c.norm_sqr();
        total += e;
        if !inside(&idx) {
            outside += e;
        }
    }
    let out_of_band = if total > 0.0 { outside / total } else { 0.0 };
    if out_of_band > BAND_LIMIT_TOLERANCE {
        return Err(Error::NotBandLimited {
            fraction: out_of_band,
        });
    }
    let d = spec.dim() as f64;
    let lhs = lp_norm(g, p2)?;
    let volume: f64 = nu.iter().product();
    let rhs = d.exp2() * volume.powf(p1.recip() - p2.recip()) * lp_norm(g, p1)?;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(NikolskiiRecord {
        lhs,
        rhs,
        ratio,
        pass: lhs <= rhs * (1.0 + 1e-6),
        out_of_band,
    })
}

/// Random complex coefficients, uniform in the unit square, on the grid
/// frequencies of the open box `|λ_j| < ν_j`, transformed back.
pub fn random_band_limited<R: Rng>(
    spec: &GridSpec,
    nu: &[f64],
    rng: &mut R,
) -> Result<SampledField> {
    let bx = FrequencyBox::new(nu.to_vec())?;
    let mask = bx.mask(spec)?;
    let mut coefficients = ndarray::ArrayD::from_elem(spec.shape(), Complex64::new(0.0, 0.0));
    Zip::from(&mut coefficients)
        .and(&mask)
        .for_each(|c, &keep| {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if keep {
                *c = z;
            }
        });
    Ok(SpectralField::from_coefficients(spec.clone(), coefficients)?.inverse())
}

/// Exponent pairs cycled through by [`nikolskii_trials`].
pub const NIKOLSKII_PAIRS: [(f64, f64); 4] = [
    (1.5, 2.0),
    (2.0, 4.0),
    (2.0, f64::INFINITY),
    (1.5, f64::INFINITY),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NikolskiiTrial {
    pub trial: usize,
    pub d: usize,
    pub nu: Vec<f64>,
    pub p1: f64,
    pub p2: f64,
    pub record: NikolskiiRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NikolskiiSummary {
    pub trials: Vec<NikolskiiTrial>,
    pub passed: usize,
}

impl NikolskiiSummary {
    pub fn violations(&self) -> usize {
        self.trials.len() - self.passed
    }
}

/// `trials` seeded random band-limited fields in dimension `d`, cycling
/// through [`NIKOLSKII_PAIRS`]. Trial `i` draws from stream `i` of the
/// seeded generator, so results do not depend on scheduling.
pub fn nikolskii_trials(d: usize, trials: usize, seed: u64) -> Result<NikolskiiSummary> {
    let (half_width, samples) = match d {
        1 => (24.0, 512),
        2 => (12.0, 64),
        3 => (6.0, 16),
        _ => return Err(Error::InvalidGrid(format!("dimension {d} outside 1..=3"))),
    };
    let spec = GridSpec::isotropic(d, half_width, samples)?;
    let results: Vec<NikolskiiTrial> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let nu: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..3.0)).collect();
            let g = random_band_limited(&spec, &nu, &mut rng)?;
            let (p1, p2) = NIKOLSKII_PAIRS[trial % NIKOLSKII_PAIRS.len()];
            let record = nikolskii_check(&g, &nu, p1, p2)?;
            Ok(NikolskiiTrial {
                trial,
                d,
                nu,
                p1,
                p2,
                record,
            })
        })
        .collect::<Result<_>>()?;
    let passed = results.iter().filter(|t| t.record.pass).count();
    Ok(NikolskiiSummary {
        trials: results,
        passed,
    })
}
