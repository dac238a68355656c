//! The regularized indefinite inner product `<f, g> = ∫ f(x) g*(x) dx` with
//! `g*(x) = conj(g(x̄))`, integrated along detour paths that bypass the
//! singular points through the upper half-plane.
//!
//! Periodic mode integrates over one period starting in the largest gap.
//! Decaying mode integrates over `[-R, R]` with `R` doubled until the total
//! (window plus analytic power-tail correction) stabilizes below 1e-10.

use super::{DecayClass, FxElement};
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_path, PathSegment};
use num_complex::Complex64;

/// Per-point residues of the plain product `f · g` on small circular
/// contours.
pub fn product_residues(f: &FxElement, g: &FxElement) -> Result<Vec<Complex64>> {
    if f.spec.points != g.spec.points {
        return Err(crate::error::Error::Validation(
            "elements live on different singular sets".into(),
        ));
    }
    let spec = &f.spec;
    let gap = spec.min_gap();
    let mut out = Vec::with_capacity(spec.points.len());
    for &x in &spec.points {
        let r = 0.05f64
            .min(if gap.is_finite() { gap / 3.0 } else { f64::INFINITY })
            .min(0.8 * f.max_arc_radius.min(g.max_arc_radius))
            .max(1e-6);
        let nodes = 512usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nodes {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            let z = Complex64::new(x, 0.0) + Complex64::from_polar(r, th);
            acc += f.eval(z) * g.eval(z) * Complex64::from_polar(1.0, th);
        }
        out.push(acc * r / nodes as f64);
    }
    Ok(out)
}

/// Combined tail behavior of a product of two elements.
fn combined_decay(a: DecayClass, b: DecayClass) -> DecayClass {
    match (a, b) {
        (DecayClass::Rapid { width: w1 }, DecayClass::Rapid { width: w2 }) => DecayClass::Rapid {
            width: w1.max(w2),
        },
        (DecayClass::Power { exponent: p }, DecayClass::Power { exponent: q }) => {
            DecayClass::Power { exponent: p + q }
        }
        (DecayClass::Rapid { .. }, DecayClass::Power { exponent })
        | (DecayClass::Power { exponent }, DecayClass::Rapid { .. }) => {
            // rapid factors only help; the power-tail correction self-scales
            // through the evaluated h(±R)
            DecayClass::Power { exponent: exponent + 2.0 }
        }
        (DecayClass::None, other) | (other, DecayClass::None) => other,
    }
}

/// Builds the detour path over `[a, b]`, placing an upper-half-plane arc at
/// each singular point where the product actually has a pole.
fn product_path(
    f: &FxElement,
    g: &FxElement,
    a: f64,
    b: f64,
    radius_hint: f64,
    upper: bool,
) -> Vec<PathSegment> {
    let spec = &f.spec;
    let gap = spec.min_gap();
    let mut segs = Vec::new();
    let mut cursor = a;
    for (j, &x) in spec.points.iter().enumerate() {
        if x <= a || x >= b {
            continue;
        }
        if f.net_order(j) + g.net_order(j) <= 0 {
            // the product is regular here; keep the path on the real line but
            // make the point a panel boundary so quadrature never samples it
            if x > cursor {
                segs.push(PathSegment::line(
                    Complex64::new(cursor, 0.0),
                    Complex64::new(x, 0.0),
                ));
                cursor = x;
            }
            continue;
        }
        let r = radius_hint
            .min(if gap.is_finite() { gap / 3.0 } else { f64::INFINITY })
            .min(0.9 * f.max_arc_radius.min(g.max_arc_radius))
            .min((x - cursor).abs())
            .min((b - x).abs())
            .max(1e-8);
        if x - r > cursor {
            segs.push(PathSegment::line(
                Complex64::new(cursor, 0.0),
                Complex64::new(x - r, 0.0),
            ));
        }
        segs.push(if upper {
            PathSegment::upper_detour(x, r)
        } else {
            PathSegment::lower_detour(x, r)
        });
        cursor = x + r;
    }
    if b > cursor {
        segs.push(PathSegment::line(
            Complex64::new(cursor, 0.0),
            Complex64::new(b, 0.0),
        ));
    }
    segs
}

/// The regularized inner product `∫ f · conj(g(x̄))`. `radius_hint <= 0`
/// selects the default detour radius `min(0.1, gap/3)` capped by the
/// elements' arc-safety radii.
pub fn inner_product(f: &FxElement, g: &FxElement, radius_hint: f64) -> Result<Complex64> {
    bilinear_pair_directed(f, &g.star(), radius_hint, true)
}

/// Same as [`inner_product`] but with a selectable detour half-plane; for
/// residue-free pairs the two choices agree.
pub fn inner_product_directed(
    f: &FxElement,
    g: &FxElement,
    radius_hint: f64,
    upper: bool,
) -> Result<Complex64> {
    bilinear_pair_directed(f, &g.star(), radius_hint, upper)
}

/// The raw detoured pair integral `∫ f(x) h(x) dx` (no conjugation): one
/// period in periodic mode, the full line with tail control in decaying
/// mode. This is the workhorse under both the inner product and the
/// spectral transforms, which pair against sheet-swapped eigenfunctions
/// directly.
pub fn bilinear_pair(f: &FxElement, h: &FxElement, radius_hint: f64) -> Result<Complex64> {
    bilinear_pair_directed(f, h, radius_hint, true)
}

pub fn bilinear_pair_directed(
    f: &FxElement,
    g: &FxElement,
    radius_hint: f64,
    upper: bool,
) -> Result<Complex64> {
    match (&f.spec.periodic, &g.spec.periodic) {
        (Some(a), Some(b)) => {
            if (a.period - b.period).abs() > 1e-12 * a.period.max(1.0) {
                return Err(Error::Validation("periods differ".into()));
            }
            // the product f · g must be exactly T-periodic
            let m = (a.multiplier() * b.multiplier() - Complex64::new(1.0, 0.0)).norm();
            if m > 1e-9 {
                return Err(Error::Validation(format!(
                    "Bloch multipliers do not cancel (|κ_f κ_g - 1| = {m:.2e})"
                )));
            }
        }
        (None, None) => {}
        _ => {
            return Err(Error::Validation(
                "cannot pair periodic and decaying elements".into(),
            ))
        }
    }

    // residue gate on the plain product
    let residues = product_residues(f, g)?;
    for (j, res) in residues.iter().enumerate() {
        let x = f.spec.points[j];
        let probe = 0.5 * f.max_arc_radius.min(g.max_arc_radius).min(0.1).max(2e-6);
        let scale = (f.eval(Complex64::new(x + probe, 0.0)) * g.eval(Complex64::new(x + probe, 0.0)))
            .norm()
            .mul_add(probe, 1.0);
        if res.norm() > 1e-8 * scale {
            return Err(Error::ResidueObstruction {
                point: x,
                residue: res.norm(),
            });
        }
    }

    let fe = f.evaluator();
    let ge = g.evaluator();
    let h = move |z: Complex64| fe(z) * ge(z);
    let hint = if radius_hint > 0.0 { radius_hint } else { 0.1 };

    if let Some(b) = &f.spec.periodic {
        // start the period window in the largest gap
        let t = b.period;
        let start = if f.spec.points.is_empty() {
            0.0
        } else {
            let pts = &f.spec.points;
            let mut best = (0.0, 0.0);
            for i in 0..pts.len() {
                let next = if i + 1 < pts.len() { pts[i + 1] } else { pts[0] + t };
                if next - pts[i] > best.1 {
                    best = (0.5 * (pts[i] + next), next - pts[i]);
                }
            }
            best.0
        };
        // shift singular points into (start, start+T)
        let mut shifted = f.clone();
        let pts: Vec<f64> = f
            .spec
            .points
            .iter()
            .map(|&x| {
                let mut y = x;
                while y <= start {
                    y += t;
                }
                y
            })
            .collect();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&i, &j| pts[i].partial_cmp(&pts[j]).unwrap());
        shifted.spec.points = order.iter().map(|&i| pts[i]).collect();
        shifted.spec.orders = order.iter().map(|&i| f.spec.orders[i]).collect();
        shifted.principal = order.iter().map(|&i| f.principal[i].clone()).collect();
        let mut gshift = g.clone();
        gshift.spec = shifted.spec.clone();
        gshift.principal = order.iter().map(|&i| g.principal[i].clone()).collect();

        let path = product_path(&shifted, &gshift, start, start + t, hint, upper);
        let r = integrate_path(h, &path, 1e-11)?;
        return Ok(r.value);
    }

    // decaying mode: one detoured core window, then smooth annulus
    // increments with doubling radius plus the analytic power-tail
    // correction, until the total stabilizes
    let tail = combined_decay(f.decay, g.decay);
    let span = f
        .spec
        .points
        .iter()
        .fold(1.0f64, |acc, &x| acc.max(x.abs() + 1.0));
    let width = match tail {
        DecayClass::Rapid { width } => width,
        _ => 0.0,
    };
    let r0 = (2.0 * span).max(4.0).max(1.5 * width);
    let core_path = product_path(f, g, -r0, r0, hint, upper);
    let mut acc = integrate_path(&h, &core_path, 1e-11)?.value;

    let correction_at = |r: f64| -> Complex64 {
        match tail {
            DecayClass::Power { exponent } if exponent > 1.0 => {
                let hp = h(Complex64::new(r, 0.0));
                let hm = h(Complex64::new(-r, 0.0));
                (hp + hm) * r / (exponent - 1.0)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    };

    let mut r = r0;
    let mut prev = acc + correction_at(r);
    for _ in 0..40 {
        let r_next = 2.0 * r;
        let annulus = [
            PathSegment::line(Complex64::new(r, 0.0), Complex64::new(r_next, 0.0)),
            PathSegment::line(Complex64::new(-r_next, 0.0), Complex64::new(-r, 0.0)),
        ];
        acc += integrate_path(&h, &annulus, 1e-11)?.value;
        r = r_next;
        let total = acc + correction_at(r);
        if (total - prev).norm() <= 1e-10 * (1.0 + total.norm()) {
            return Ok(total);
        }
        prev = total;
    }
    Err(Error::TailNonConvergence((prev - acc).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::fx::{PrincipalPart, SingularitySpec};
    use std::sync::Arc;

    fn pure_power(n: u32, k: usize) -> FxElement {
        // y^{-(n-2k)} with the documented power-law tail metadata; the
        // evaluator is pole-free away from the origin, so wide arcs are safe
        let spec = SingularitySpec::new(vec![0.0], vec![n]).unwrap();
        let mut pp = PrincipalPart::zero(0.0, n);
        pp.coeffs[k] = c64(1.0, 0.0);
        let e = n as i32 - 2 * k as i32;
        FxElement::new(
            spec,
            vec![pp],
            Arc::new(move |z| z.powi(-e)),
            DecayClass::Power { exponent: e as f64 },
            2.0,
            format!("y^-{e}"),
        )
        .unwrap()
    }

    #[test]
    fn gaussian_norm() {
        let spec = SingularitySpec::new(vec![], vec![]).unwrap();
        let f = FxElement::new(
            spec,
            vec![],
            Arc::new(|z| (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            1.0,
            "gauss",
        )
        .unwrap();
        let v = inner_product(&f, &f, 0.0).unwrap();
        let expect = (std::f64::consts::PI / 2.0).sqrt();
        assert!((v - c64(expect, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn pure_inverse_square_regularizes_to_zero() {
        // <1/x, 1/x> = 0: the detoured window integral cancels the tails
        let f = pure_power(1, 0);
        let v = inner_product(&f, &f, 0.0).unwrap();
        assert!(v.norm() < 1e-10, "got {v}");
    }

    #[test]
    fn lemma_style_zero_lattice_small_orders() {
        // all pure-power pairs with 2k < n, 2l < n integrate to zero
        for n in 1..=5u32 {
            for k in 0..=((n as usize).saturating_sub(1)) / 2 {
                for l in 0..=((n as usize).saturating_sub(1)) / 2 {
                    let f = pure_power(n, k);
                    let g = pure_power(n, l);
                    // a wide detour keeps the arc/line cancellation noise
                    // far below the 1e-9 target for the steep powers
                    let v = inner_product(&f, &g, 0.5).unwrap();
                    assert!(v.norm() < 1e-9, "n={n} k={k} l={l}: {v}");
                }
            }
        }
    }

    #[test]
    fn residue_pair_rejected() {
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let f = pure_power(1, 0);
        let one = FxElement::new(
            spec,
            vec![PrincipalPart {
                anchor: 0.0,
                order: 1,
                coeffs: vec![c64(0.0, 0.0), c64(1.0, 0.0)],
            }],
            Arc::new(|z| z * (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            0.5,
            "x gauss",
        )
        .unwrap();
        // f*(x·gauss) = gauss + regular: product f·star(one) = x e^{-x²}/x — no pole.
        // Build instead a genuinely obstructed pair: 1/x against gauss.
        let g = FxElement::new(
            SingularitySpec::new(vec![0.0], vec![1]).unwrap(),
            vec![PrincipalPart::zero(0.0, 1)],
            Arc::new(|z| (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            0.5,
            "gauss",
        )
        .unwrap();
        match inner_product(&f, &g, 0.0) {
            Err(Error::ResidueObstruction { point, .. }) => assert_eq!(point, 0.0),
            other => panic!("expected residue obstruction, got {other:?}"),
        }
        // while the parity-compliant pair passes
        assert!(inner_product(&f, &one, 0.0).is_ok());
    }

    #[test]
    fn hermitian_symmetry() {
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let f = FxElement::from_evaluator(
            spec.clone(),
            Arc::new(|z| (c64(1.0, 0.5) / z + z * c64(0.3, -0.2)) * (-z * z / 9.0).exp()),
            DecayClass::Rapid { width: 9.0 },
            0.5,
            "f",
        )
        .unwrap();
        let g = FxElement::from_evaluator(
            spec,
            Arc::new(|z| (c64(0.0, 2.0) / z) * (-z * z / 4.0).exp()),
            DecayClass::Rapid { width: 6.0 },
            0.5,
            "g",
        )
        .unwrap();
        let fg = inner_product(&f, &g, 0.0).unwrap();
        let gf = inner_product(&g, &f, 0.0).unwrap();
        assert!((fg - gf.conj()).norm() < 1e-9, "{fg} vs {gf}");
    }

    #[test]
    fn detour_half_plane_immaterial_for_residue_free_pairs() {
        let f = pure_power(3, 1); // 1/x
        let g = pure_power(3, 0); // 1/x^3
        let up = inner_product_directed(&f, &g, 0.0, true).unwrap();
        let lo = inner_product_directed(&f, &g, 0.0, false).unwrap();
        assert!((up - lo).norm() < 1e-9);
    }

    #[test]
    fn radius_invariance() {
        let f = pure_power(1, 0);
        let a = inner_product(&f, &f, 0.05).unwrap();
        let b = inner_product(&f, &f, 0.1).unwrap();
        let c = inner_product(&f, &f, 0.025).unwrap();
        assert!((a - b).norm() < 1e-9 && (a - c).norm() < 1e-9);
    }
}
