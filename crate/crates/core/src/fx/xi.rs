//! The explicit negative-subspace families: localized inverse powers with a
//! super-Gaussian cutoff `e^{-(y/ε)^{2N}}`, one function per negative square.
//!
//! Decaying mode (point `x_j`, order `n_j`, `l = 0..⌊(n_j-1)/2⌋`):
//!
//! ```text
//! Ξ_{lj}(x) = ε^{-1/2} (ε/(x-x_j))^{n_j-2l} e^{-((x-x_j)/ε)^{2N}} ζ_j(x)
//! ζ_j(x)    = Π_{k≠j} [G_k²/(G_k²+1)]^N,   G_k = (x-x_j)^{2N} - (x_k-x_j)^{2N}
//! ```
//!
//! The `ζ_j` factor is 1 for a single point and plants zeros of order `2N`
//! at all the other singular points. Periodic mode replaces `x-x_j` by
//! `sin(x̃-x̃_j)` in rescaled coordinates `x̃ = πx/T` and appends the Bloch
//! phase `e^{i c_j α(x̃)}` with `e^{i c_j} = (-1)^{n_j} κ₀`, where `α` grows
//! by exactly 1 per period.

use super::{DecayClass, FxElement, SingularitySpec};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

/// Family flavor matching the element class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    Decaying,
    Periodic,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds the `l_X` localized family members for `spec`, width `eps`,
/// cutoff stiffness `nn` (must exceed every order).
pub fn xi_family(spec: &SingularitySpec, eps: f64, nn: u32, mode: XiMode) -> Result<Vec<FxElement>> {
    let max_order = *spec.orders.iter().max().unwrap_or(&0);
    if nn <= max_order {
        return Err(Error::Validation(format!(
            "cutoff stiffness {nn} must exceed the maximal order {max_order}"
        )));
    }
    let gap = spec.min_gap();
    if eps <= 0.0 || (gap.is_finite() && eps >= gap / 2.0) {
        return Err(Error::Validation(format!(
            "eps = {eps} must be positive and below half the minimal gap {gap}"
        )));
    }
    match mode {
        XiMode::Decaying => {
            if spec.periodic.is_some() {
                return Err(Error::Validation(
                    "decaying family on a periodic spec".into(),
                ));
            }
            Ok(decaying_family(spec, eps, nn))
        }
        XiMode::Periodic => {
            let bloch = spec.periodic.ok_or_else(|| {
                Error::Validation("periodic family requires a periodic spec".into())
            })?;
            periodic_family(spec, eps, nn, bloch.period, bloch.phase)
        }
    }
}

fn decaying_family(spec: &SingularitySpec, eps: f64, nn: u32) -> Vec<FxElement> {
    let two_n = 2 * nn as i32;
    let points = spec.points.clone();
    let mut out = Vec::new();
    for (j, (&xj, &nj)) in points.iter().zip(&spec.orders).enumerate() {
        let others: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &xk)| xk - xj)
            .collect();
        for l in 0..=((nj as usize).saturating_sub(1)) / 2 {
            let e = nj as i32 - 2 * l as i32;
            let others = others.clone();
            let eval = move |z: Complex64| -> Complex64 {
                let y = z - xj;
                let y2n = y.powi(two_n);
                let mut zeta = c64(1.0, 0.0);
                for &d in &others {
                    let g = y2n - d.powi(two_n);
                    let g2 = g * g;
                    zeta *= (g2 / (g2 + 1.0)).powi(nn as i32);
                }
                let cutoff = (-(y2n / eps.powi(two_n))).exp();
                eps.powf(e as f64 - 0.5) * y.powi(-e) * cutoff * zeta
            };
            let el = FxElement::from_evaluator(
                spec.clone(),
                Arc::new(eval),
                DecayClass::Rapid {
                    width: points.iter().fold(2.0 * eps, |a, &x| a.max(x.abs() + 2.0 * eps)),
                },
                0.75 * eps,
                format!("xi[j={j},l={l}]"),
            )
            .expect("family construction");
            let mut el = el;
            el.zero_orders = (0..points.len())
                .map(|k| if k == j { 0 } else { 2 * nn })
                .collect();
            out.push(el);
        }
    }
    out
}

/// Exact Fourier modes of `Π_k sin^{2N}(y - x̃_k)` (a trig polynomial of
/// degree `N·P` in `e^{2iy}`), sampled at the Nyquist rate.
fn weight_modes(points_scaled: &[f64], nn: u32) -> Vec<Complex64> {
    let degree = (nn as usize) * points_scaled.len().max(1);
    let m = 2 * degree + 1;
    let mut modes = vec![c64(0.0, 0.0); 2 * degree + 1];
    for i in 0..m {
        let y = std::f64::consts::PI * i as f64 / m as f64;
        let mut v = c64(1.0, 0.0);
        for &xk in points_scaled {
            v *= c64((y - xk).sin(), 0.0).powi(2 * nn as i32);
        }
        for (idx, slot) in modes.iter_mut().enumerate() {
            let mode = idx as i32 - degree as i32;
            *slot += v * Complex64::from_polar(1.0, -2.0 * mode as f64 * y);
        }
    }
    for slot in modes.iter_mut() {
        *slot /= m as f64;
    }
    modes
}

fn periodic_family(
    spec: &SingularitySpec,
    eps: f64,
    nn: u32,
    period: f64,
    phase: f64,
) -> Result<Vec<FxElement>> {
    let scale = std::f64::consts::PI / period;
    let points_scaled: Vec<f64> = spec.points.iter().map(|&x| x * scale).collect();
    // rescaled gap constraint
    let eps_ok = {
        let mut gap = f64::INFINITY;
        let p = &points_scaled;
        for w in p.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        if !p.is_empty() {
            gap = gap.min(p[0] + std::f64::consts::PI - p[p.len() - 1]);
        }
        eps < (gap / 2.0).min(0.5)
    };
    if !eps_ok {
        return Err(Error::Validation(
            "eps too large for the rescaled periodic configuration".into(),
        ));
    }

    let modes = weight_modes(&points_scaled, nn);
    let degree = (modes.len() - 1) / 2;
    let c0 = modes[degree];
    if c0.norm() < 1e-14 {
        return Err(Error::Validation("degenerate periodic weight".into()));
    }

    // α(z̃) = [c₀ z̃ + Σ_{m≠0} c_m (e^{2imz̃} - 1)/(2im)] / (π c₀); α(x̃+π) = α(x̃) + 1
    let alpha = {
        let modes = modes.clone();
        move |z: Complex64| -> Complex64 {
            let mut acc = c0 * z;
            for (idx, &cm) in modes.iter().enumerate() {
                let m = idx as i32 - degree as i32;
                if m == 0 {
                    continue;
                }
                let tw = c64(0.0, 2.0 * m as f64);
                acc += cm * ((tw * z).exp() - 1.0) / tw;
            }
            acc / (std::f64::consts::PI * c0)
        }
    };

    let kappa0 = Complex64::new(0.0, period * phase).exp();
    let two_n = 2 * nn as i32;
    let mut out = Vec::new();
    for (j, (&xj_scaled, &nj)) in points_scaled.iter().zip(&spec.orders).enumerate() {
        let others: Vec<f64> = points_scaled
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &xk)| xk - xj_scaled)
            .collect();
        let sign = if nj % 2 == 0 { 1.0 } else { -1.0 };
        let cj = (sign * kappa0).arg();
        for l in 0..=((nj as usize).saturating_sub(1)) / 2 {
            let e = nj as i32 - 2 * l as i32;
            let others = others.clone();
            let alpha = alpha.clone();
            let eval = move |z: Complex64| -> Complex64 {
                let zt = z * scale;
                let w = (zt - xj_scaled).sin();
                let w2n = w.powi(two_n);
                let mut zeta = c64(1.0, 0.0);
                for &d in &others {
                    let g = w2n - d.sin().powi(two_n);
                    let g2 = g * g;
                    zeta *= (g2 / (g2 + 1.0)).powi(nn as i32);
                }
                let cutoff = (-(w2n / eps.powi(two_n))).exp();
                let blochf = (c64(0.0, cj) * alpha(zt)).exp();
                eps.powf(e as f64 - 0.5) * w.powi(-e) * cutoff * zeta * blochf
            };
            let el = FxElement::from_evaluator(
                spec.clone(),
                Arc::new(eval),
                DecayClass::None,
                0.7 * eps / scale,
                format!("xi-periodic[j={j},l={l}]"),
            )?;
            let mut el = el;
            el.zero_orders = (0..points_scaled.len())
                .map(|k| if k == j { 0 } else { 2 * nn })
                .collect();
            out.push(el);
        }
    }
    Ok(out)
}

/// A random smooth member of the regular subspace: vanishes to order
/// `n_j + 1` (rounded up to even in periodic mode) at every singular point,
/// so every parity constraint holds trivially, and its square is positive.
pub fn random_bump(spec: &SingularitySpec, rng: &mut impl Rng) -> FxElement {
    let center: f64 = rng.gen_range(-1.0..1.0);
    let amp = c64(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    let wobble: f64 = rng.gen_range(0.5..2.0);

    match spec.periodic {
        None => {
            let pts: Vec<(f64, u32)> = spec
                .points
                .iter()
                .zip(&spec.orders)
                .map(|(&x, &n)| (x, n + 1))
                .collect();
            let width = spec
                .points
                .iter()
                .fold(4.0f64, |a, &x| a.max(x.abs() + 4.0));
            let eval = move |z: Complex64| -> Complex64 {
                let mut v = amp * (-(z - center) * (z - center) / 4.0).exp();
                v *= (wobble * z).cos() * 0.3 + 1.5;
                for &(x, m) in &pts {
                    v = v * (z - x).powi(m as i32);
                }
                v
            };
            FxElement::from_evaluator(
                spec.clone(),
                Arc::new(eval),
                DecayClass::Rapid { width },
                0.5,
                "bump",
            )
            .expect("bump construction")
        }
        Some(b) => {
            let scale = std::f64::consts::PI / b.period;
            let phase = b.phase;
            let pts: Vec<(f64, i32)> = spec
                .points
                .iter()
                .zip(&spec.orders)
                .map(|(&x, &n)| {
                    let mut m = n as i32 + 1;
                    if m % 2 == 1 {
                        m += 1;
                    }
                    (x * scale, m)
                })
                .collect();
            let eval = move |z: Complex64| -> Complex64 {
                let zt = z * scale;
                let mut v = amp * (c64(0.0, phase) * z).exp();
                v += amp * 0.1 * (c64(0.0, phase) * z).exp() * (2.0 * zt).cos() * wobble;
                for &(x, m) in &pts {
                    v = v * (zt - x).sin().powi(m);
                }
                v
            };
            FxElement::from_evaluator(
                spec.clone(),
                Arc::new(eval),
                DecayClass::None,
                0.3 / scale,
                "periodic bump",
            )
            .expect("bump construction")
        }
    }
}
