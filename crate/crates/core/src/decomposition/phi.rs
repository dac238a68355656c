//! The first asymptotic coefficient of the Bloch expansion
//! `Ψ(x,γ) = e^{ikx}(1 + φ₁(x)/k + O(k⁻²))`: substituting into the
//! eigen-equation forces `2i φ₁′ = u` up to the mean, so
//! `φ₁ = (2i)⁻¹ ∫ (u - ū)` with the additive constant fixed by a zero mean
//! over the period (it cancels in the differences the kernels use).

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_path, PathSegment};
use crate::potentials::Potential;
use num_complex::Complex64;

/// Periodic primitive `φ₁` with zero mean.
pub struct AsymptoticCoefficient {
    pub period: f64,
    u: Potential,
    mean_u: Complex64,
    mean_phi: Complex64,
}

impl AsymptoticCoefficient {
    fn raw(&self, x: f64) -> Result<Complex64> {
        let u = self.u.clone();
        let mean = self.mean_u;
        let path = [PathSegment::line(
            Complex64::new(0.0, 0.0),
            Complex64::new(x, 0.0),
        )];
        if x == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let v = integrate_path(
            move |z| u.evaluate(z).unwrap_or(Complex64::new(f64::NAN, 0.0)) - mean,
            &path,
            1e-11,
        )?
        .value;
        Ok(v / Complex64::new(0.0, 2.0))
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        // reduce by periodicity: the zero-mean integrand makes the raw
        // primitive exactly T-periodic
        let xr = x.rem_euclid(self.period);
        Ok(self.raw(xr)? - self.mean_phi)
    }
}

/// Builds `φ₁` for a smooth periodic (possibly complex) potential.
pub fn phi1(u: &Potential) -> Result<AsymptoticCoefficient> {
    let period = u
        .period()
        .ok_or_else(|| Error::Validation("phi1 requires a periodic potential".into()))?;
    if !u.singularity_info().points.is_empty() {
        return Err(Error::Validation(
            "phi1 requires a smooth potential (shift the poles off the line)".into(),
        ));
    }
    let path = [PathSegment::line(
        Complex64::new(0.0, 0.0),
        Complex64::new(period, 0.0),
    )];
    let u_owned = u.clone();
    let mean_u = integrate_path(
        move |z| u_owned.evaluate(z).unwrap_or(Complex64::new(f64::NAN, 0.0)),
        &path,
        1e-11,
    )?
    .value
        / period;

    let mut coeff = AsymptoticCoefficient {
        period,
        u: u.clone(),
        mean_u,
        mean_phi: Complex64::new(0.0, 0.0),
    };
    // fix the constant: zero mean of φ₁ itself (32-point midpoint rule on
    // the analytic periodic primitive)
    let m = 32;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let x = period * (i as f64 + 0.5) / m as f64;
        acc += coeff.raw(x)?;
    }
    coeff.mean_phi = acc / m as f64;
    Ok(coeff)
}
