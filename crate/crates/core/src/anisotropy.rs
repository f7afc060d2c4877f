//! Smoothness vectors and the dyadic parameters derived from them.
//!
//! For a smoothness vector `r = (r_1, ..., r_d)` the harmonic exponent is
//! `g(r) = (d^{-1} Σ 1/r_j)^{-1}`. The anisotropic layering uses per-axis
//! bases `a_j = 2^{g/r_j}` and the block weight base `b = 2^g`, so that
//! `a_j^{r_j} = b` on every axis and `Π a_j = 2^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(d^{-1} Σ_j 1/r_j)^{-1}`.
pub fn harmonic_exponent(r: &[f64]) -> Result<f64> {
    validate_smoothness(r)?;
    let d = r.len() as f64;
    let inv_sum: f64 = r.iter().map(|x| x.recip()).sum();
    Ok(d / inv_sum)
}

fn validate_smoothness(r: &[f64]) -> Result<()> {
    if r.is_empty() {
        return Err(Error::InvalidArgument(
            "smoothness vector must have at least one component".into(),
        ));
    }
    for (index, &value) in r.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveSmoothness { index, value });
        }
    }
    Ok(())
}

/// Immutable bundle of a smoothness vector and everything derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyProfile {
    r: Vec<f64>,
    g: f64,
    a: Vec<f64>,
    b: f64,
    integer_parts: Vec<u32>,
    fractional_parts: Vec<f64>,
}

impl AnisotropyProfile {
    pub fn new(r: &[f64]) -> Result<Self> {
        let g = harmonic_exponent(r)?;
        let a = r.iter().map(|&rj| (g / rj).exp2()).collect();
        let b = g.exp2();
        let (integer_parts, fractional_parts) = r.iter().map(|&ri| split_smoothness(ri)).unzip();
        Ok(Self {
            r: r.to_vec(),
            g,
            a,
            b,
            integer_parts,
            fractional_parts,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn smoothness(&self) -> &[f64] {
        &self.r
    }

    /// Harmonic exponent `g(r)`.
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Layer bases `a_j = 2^{g/r_j}`.
    pub fn bases(&self) -> &[f64] {
        &self.a
    }

    /// Block weight base `b = 2^g`.
    pub fn weight_base(&self) -> f64 {
        self.b
    }

    /// `r̄_i`, the integer part with the convention `α_i ∈ (0, 1]`.
    pub fn integer_parts(&self) -> &[u32] {
        &self.integer_parts
    }

    /// `α_i = r_i - r̄_i ∈ (0, 1]`.
    pub fn fractional_parts(&self) -> &[f64] {
        &self.fractional_parts
    }

    /// Box bounds `a_j^s` of `D_{a^s}`.
    pub fn box_bounds(&self, s: u32) -> Vec<f64> {
        self.a.iter().map(|aj| aj.powi(s as i32)).collect()
    }
}

/// Splits `r > 0` as `r̄ + α` with integer `r̄ ≥ 0` and `α ∈ (0, 1]`.
/// Integer smoothness takes `α = 1`.
fn split_smoothness(r: f64) -> (u32, f64) {
    let fl = r.floor();
    if fl == r {
        let bar = (r - 1.0) as u32;
        (bar, 1.0)
    } else {
        (fl as u32, r - fl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn harmonic_exponent_examples() {
        assert_relative_eq!(
            harmonic_exponent(&[2.5, 2.5, 2.5]).unwrap(),
            2.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            harmonic_exponent(&[1.0, 2.0]).unwrap(),
            4.0 / 3.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            harmonic_exponent(&[2.0, 3.0, 6.0]).unwrap(),
            3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_bad_components() {
        match harmonic_exponent(&[1.0, -0.5, 2.0]) {
            Err(Error::NonPositiveSmoothness { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            harmonic_exponent(&[0.0]),
            Err(Error::NonPositiveSmoothness { index: 0, .. })
        ));
        assert!(harmonic_exponent(&[f64::NAN]).is_err());
        assert!(harmonic_exponent(&[]).is_err());
    }

    #[test]
    fn profile_examples() {
        let iso = AnisotropyProfile::new(&[1.0, 1.0]).unwrap();
        assert_eq!(iso.bases(), &[2.0, 2.0]);
        assert_eq!(iso.weight_base(), 2.0);

        let p = AnisotropyProfile::new(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(p.g(), 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p.bases()[0], (4.0f64 / 3.0).exp2(), epsilon = 1e-14);
        assert_relative_eq!(p.bases()[1], (2.0f64 / 3.0).exp2(), epsilon = 1e-14);
        assert_relative_eq!(p.weight_base(), (4.0f64 / 3.0).exp2(), epsilon = 1e-14);
    }

    #[test]
    fn split_convention() {
        let p = AnisotropyProfile::new(&[2.5]).unwrap();
        assert_eq!(p.integer_parts(), &[2]);
        assert_relative_eq!(p.fractional_parts()[0], 0.5);

        let p = AnisotropyProfile::new(&[3.0]).unwrap();
        assert_eq!(p.integer_parts(), &[2]);
        assert_eq!(p.fractional_parts(), &[1.0]);

        let p = AnisotropyProfile::new(&[0.3]).unwrap();
        assert_eq!(p.integer_parts(), &[0]);
        assert_relative_eq!(p.fractional_parts()[0], 0.3);
    }

    fn smoothness_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.05f64..20.0, 1..=4)
    }

    proptest! {
        #[test]
        fn profile_invariants(r in smoothness_vec()) {
            let p = AnisotropyProfile::new(&r).unwrap();
            let d = r.len() as f64;
            let inv_mean = r.iter().map(|x| 1.0 / x).sum::<f64>() / d;
            prop_assert!((p.g() - 1.0 / inv_mean).abs() <= 1e-13 * p.g());
            for (aj, rj) in p.bases().iter().zip(&r) {
                prop_assert!((aj.powf(*rj) - p.weight_base()).abs() / p.weight_base() < 1e-12);
                prop_assert!(*aj > 1.0);
            }
            let prod: f64 = p.bases().iter().product();
            prop_assert!((prod - d.exp2()).abs() / d.exp2() < 1e-12);
            for ((bar, alpha), ri) in p.integer_parts().iter().zip(p.fractional_parts()).zip(&r) {
                prop_assert!(*alpha > 0.0 && *alpha <= 1.0);
                prop_assert!((*bar as f64 + alpha - ri).abs() < 1e-12);
            }
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.iter().cloned().fold(0.0, f64::max);
            prop_assert!(p.g() >= lo * (1.0 - 1e-14) && p.g() <= hi * (1.0 + 1e-14));
        }

        #[test]
        fn harmonic_exponent_symmetric_and_homogeneous(r in smoothness_vec(), lambda in 0.1f64..10.0) {
            let g = harmonic_exponent(&r).unwrap();
            let mut rev = r.clone();
            rev.reverse();
            prop_assert!((harmonic_exponent(&rev).unwrap() - g).abs() <= 1e-13 * g);
            let scaled: Vec<f64> = r.iter().map(|x| x * lambda).collect();
            prop_assert!((harmonic_exponent(&scaled).unwrap() - lambda * g).abs() <= 1e-12 * lambda * g);
        }
    }
}
