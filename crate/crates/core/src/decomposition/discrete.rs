//! Discrete Bloch-mode transforms at a fixed unitary multiplier
//! `κ₀ = e^{iTφ₀}`: coefficients `f̂(κ_j) = (1/T)∫₀ᵀ Ψ(y,σκ_j) f(y) dy`,
//! weighted partial sums with the measure factor `[Π(λ-λ_div)/N(λ)]`, the
//! Dirichlet-kernel split, and the singular-class series through the
//! indefinite inner product.

use super::continuous::{forward_continuous, reconstruct_continuous, ContinuousModel};
use crate::darboux::EigenFn;
use crate::elliptic::EllipticLattice;
use crate::error::{Error, Result};
use crate::finitegap::{bloch_points, lame_bloch_fn, lame_bloch_shifted_fn};
use crate::fx::{bilinear_pair, inner_product, DecayClass, FxElement, PrincipalPart, SingularitySpec};
use num_complex::Complex64;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

/// One Bloch mode of a discrete transform.
#[derive(Clone)]
pub struct DiscreteMode {
    pub p: f64,
    pub lambda: Complex64,
    pub alpha: Option<Complex64>,
    /// `[Π(λ - λ_div)] · [dλ/dp] / (2w)` — the series weight.
    pub weight: Complex64,
    pub eigen: EigenFn,
    pub eigen_star: EigenFn,
}

impl std::fmt::Debug for DiscreteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteMode")
            .field("p", &self.p)
            .field("lambda", &self.lambda)
            .field("weight", &self.weight)
            .finish()
    }
}

/// A prepared discrete transform: the potential class, multiplier phase,
/// and the solved mode set.
pub struct DiscreteTransform {
    pub period: f64,
    pub phase: f64,
    pub modes: Vec<DiscreteMode>,
    /// Singular set of the operator (the modes' own singular structure).
    pub spec: SingularitySpec,
    arc_radius: f64,
}

impl DiscreteTransform {
    /// The vacuum series: `p_j = φ₀ + 2πj/T`, plane-wave modes, flat
    /// weights.
    pub fn vacuum(period: f64, phase: f64, n_modes: usize) -> Result<Self> {
        let mut modes = Vec::new();
        for j in -(n_modes as i64)..=n_modes as i64 {
            let p = phase + 2.0 * std::f64::consts::PI * j as f64 / period;
            modes.push(DiscreteMode {
                p,
                lambda: Complex64::new(p * p, 0.0),
                alpha: None,
                weight: Complex64::new(1.0, 0.0),
                eigen: EigenFn::exp_ik(Complex64::new(p, 0.0)),
                eigen_star: EigenFn::exp_ik(Complex64::new(-p, 0.0)),
            });
        }
        Ok(DiscreteTransform {
            period,
            phase,
            modes,
            spec: SingularitySpec::new(vec![], vec![])?,
            arc_radius: 1.0,
        })
    }

    /// The Lamé series for `2℘(x + δ)`: `δ = 0` is the singular operator
    /// (divisor at infinity, weight `1/N(λ)`), `δ = ω′` the smooth real one
    /// (divisor `λ₁ = -℘(δ)`, weight `(λ-λ₁)/N(λ)`), with
    /// `N(λ) = λ - η/ω` the quasimomentum numerator.
    pub fn lame(
        lattice: Arc<EllipticLattice>,
        delta: Complex64,
        phase: f64,
        n_modes: usize,
    ) -> Result<Self> {
        let period = 2.0 * lattice.omega.re;
        let points = bloch_points(&lattice, phase, n_modes)?;
        let n_root = lattice.eta.re / lattice.omega.re;
        let singular = delta.norm() == 0.0;
        let lambda1 = if singular {
            None
        } else {
            Some(-lattice.wp(delta)?)
        };
        let mut modes = Vec::new();
        for bp in &points {
            let weight = match lambda1 {
                None => 1.0 / (bp.lambda - n_root),
                Some(l1) => (bp.lambda - l1) / (bp.lambda - n_root),
            };
            let (eigen, eigen_star) = if singular {
                (
                    lame_bloch_fn(bp.alpha, lattice.clone())?,
                    lame_bloch_fn(-bp.alpha, lattice.clone())?,
                )
            } else {
                (
                    lame_bloch_shifted_fn(bp.alpha, delta, lattice.clone())?,
                    lame_bloch_shifted_fn(-bp.alpha, delta, lattice.clone())?,
                )
            };
            modes.push(DiscreteMode {
                p: bp.p,
                lambda: bp.lambda,
                alpha: Some(bp.alpha),
                weight,
                eigen,
                eigen_star,
            });
        }
        let spec = if singular {
            SingularitySpec::periodic(vec![0.0], vec![1], period, phase)?
        } else {
            SingularitySpec::new(vec![], vec![])?
        };
        Ok(DiscreteTransform {
            period,
            phase,
            modes,
            spec,
            arc_radius: 0.35 * period.min(2.0 * lattice.omega_prime.im),
        })
    }

    fn mode_element(&self, f: &EigenFn, phase: f64) -> Result<FxElement> {
        let mut spec = self.spec.clone();
        spec.periodic = Some(crate::fx::BlochPeriod {
            period: self.period,
            phase,
        });
        let inner = f.clone();
        FxElement::from_evaluator(
            spec,
            Arc::new(move |z| {
                inner
                    .eval(z)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }),
            DecayClass::None,
            self.arc_radius,
            format!("mode({})", f.label),
        )
    }

    /// `f̂(κ_j) = (1/T) ∫₀ᵀ Ψ(y, σκ_j) f(y) dy` (multiplier-cancelling, so
    /// any base period gives the same value).
    pub fn forward(&self, f: &FxElement, j: usize) -> Result<Complex64> {
        let m = &self.modes[j];
        let star_el = self.mode_element(&m.eigen_star, -m.p)?;
        Ok(bilinear_pair(f, &star_el, 0.0)? / self.period)
    }

    pub fn forward_all(&self, f: &FxElement) -> Result<Vec<Complex64>> {
        (0..self.modes.len()).map(|j| self.forward(f, j)).collect()
    }

    /// Partial sum `Σ_{|(p_j - φ₀)T| ≤ 2πN} f̂_j Ψ_j(x) W_j`.
    pub fn reconstruct(&self, coeffs: &[Complex64], x: f64, n_cut: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        let xs = Complex64::new(x, 0.0);
        for (m, &c) in self.modes.iter().zip(coeffs) {
            if ((m.p - self.phase) * self.period).abs()
                <= 2.0 * std::f64::consts::PI * n_cut as f64 + 1e-9
            {
                acc += c * m.eigen.eval(xs)? * m.weight;
            }
        }
        Ok(acc)
    }

    /// The summation kernel `S(N,x,y) = (1/T) Σ Ψ_j(x) Ψ*_j(y) W_j`.
    pub fn kernel(&self, x: f64, y: f64, n_cut: usize) -> Result<Complex64> {
        let xs = Complex64::new(x, 0.0);
        let ys = Complex64::new(y, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for m in &self.modes {
            if ((m.p - self.phase) * self.period).abs()
                <= 2.0 * std::f64::consts::PI * n_cut as f64 + 1e-9
            {
                acc += m.eigen.eval(xs)? * m.eigen_star.eval(ys)? * m.weight;
            }
        }
        Ok(acc / self.period)
    }
}

/// The Dirichlet-type classical kernel
/// `e^{iφ₀(x-y)} sin(π(2N+1)(x-y)/T) / (T sin(π(x-y)/T))`.
pub fn classical_discrete_kernel(period: f64, phase: f64, n_cut: usize, x: f64, y: f64) -> Complex64 {
    let d = x - y;
    let phase_factor = Complex64::new(0.0, phase * d).exp();
    let s = (std::f64::consts::PI * d / period).sin();
    if s.abs() < 1e-12 {
        return phase_factor * (2.0 * n_cut as f64 + 1.0) / period;
    }
    phase_factor * (std::f64::consts::PI * (2.0 * n_cut as f64 + 1.0) * d / period).sin()
        / (period * s)
}

/// Kernel split for a prepared discrete transform.
pub fn kernel_split_discrete(
    transform: &DiscreteTransform,
    x: f64,
    y: f64,
    n_cut: usize,
) -> Result<(Complex64, Complex64, Complex64)> {
    let total = transform.kernel(x, y, n_cut)?;
    let classical = classical_discrete_kernel(transform.period, transform.phase, n_cut, x, y);
    Ok((total, classical, total - classical))
}

/// The singular-class series `f = Σ c_q Ψ_q`, `c_q = <f,Ψ_q>/<Ψ_q,Ψ_q>`
/// under the regularized indefinite product.
pub struct SingularDecomposition {
    pub transform: DiscreteTransform,
    pub coefficients: Vec<Complex64>,
    pub denominators: Vec<Complex64>,
    pub mode_elements: Vec<FxElement>,
}

impl SingularDecomposition {
    pub fn partial_sum(&self, x: f64, n_cut: usize) -> Result<Complex64> {
        let xs = Complex64::new(x, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, &c) in self.transform.modes.iter().zip(&self.coefficients) {
            if ((m.p - self.transform.phase) * self.transform.period).abs()
                <= 2.0 * std::f64::consts::PI * n_cut as f64 + 1e-9
            {
                acc += c * m.eigen.eval(xs)?;
            }
        }
        Ok(acc)
    }

    /// Principal-part coefficients of the partial series,
    /// `Σ_q c_q a_{(q)jk}`, one block per singular point.
    pub fn principal_series(&self, n_cut: usize) -> Vec<PrincipalPart> {
        let spec = &self.transform.spec;
        let mut out: Vec<PrincipalPart> = spec
            .points
            .iter()
            .zip(&spec.orders)
            .map(|(&x, &n)| PrincipalPart::zero(x, n))
            .collect();
        for (m, (&c, el)) in self
            .transform
            .modes
            .iter()
            .zip(self.coefficients.iter().zip(&self.mode_elements))
        {
            if ((m.p - self.transform.phase) * self.transform.period).abs()
                > 2.0 * std::f64::consts::PI * n_cut as f64 + 1e-9
            {
                continue;
            }
            for (block, pp) in out.iter_mut().zip(&el.principal) {
                for (slot, &a) in block.coeffs.iter_mut().zip(&pp.coeffs) {
                    *slot += c * a;
                }
            }
        }
        out
    }
}

/// Expands `f` (Bloch-periodic in the singular class of `2℘(x)`) over the
/// multiplier-matched Bloch modes through the indefinite inner product.
pub fn singular_reconstruct(
    f: &FxElement,
    lattice: Arc<EllipticLattice>,
    phase: f64,
    n_modes: usize,
) -> Result<SingularDecomposition> {
    let transform = DiscreteTransform::lame(lattice, Complex64::new(0.0, 0.0), phase, n_modes)?;
    let mut coefficients = Vec::with_capacity(transform.modes.len());
    let mut denominators = Vec::with_capacity(transform.modes.len());
    let mut mode_elements = Vec::with_capacity(transform.modes.len());
    let mut max_den = 0.0f64;
    for m in &transform.modes {
        let el = transform.mode_element(&m.eigen, m.p)?;
        let den = inner_product(&el, &el, 0.0)?;
        let num = inner_product(f, &el, 0.0)?;
        max_den = max_den.max(den.norm());
        denominators.push(den);
        coefficients.push(num / den);
        mode_elements.push(el);
    }
    for den in &denominators {
        if den.norm() < 1e-10 * max_den.max(1.0) {
            return Err(Error::NonGenericMultiplier(format!(
                "neutral mode: <Ψ,Ψ> = {den}"
            )));
        }
    }
    Ok(SingularDecomposition {
        transform,
        coefficients,
        denominators,
        mode_elements,
    })
}

/// Bound-state data of the sinh-soliton operator `2κ²/sinh²(κx)`: the
/// discrete eigenfunction `Ψ_b = 1/sinh(κx)` at level `-κ²` with its
/// (negative) self-product, and the projection coefficient of `f` on it.
pub fn sinh_bound_state(f: &FxElement, kappa: f64) -> Result<(Complex64, Complex64)> {
    let spec = SingularitySpec::new(vec![0.0], vec![1])?;
    let bound = FxElement::from_evaluator(
        spec,
        Arc::new(move |z: Complex64| 1.0 / (kappa * z).sinh()),
        DecayClass::Rapid { width: 6.0 / kappa },
        (std::f64::consts::PI / kappa * 0.4).min(0.5),
        "sinh bound state",
    )?;
    let den = inner_product(&bound, &bound, 0.0)?;
    let num = inner_product(f, &bound, 0.0)?;
    Ok((num / den, den))
}

/// Reconstructs a decaying singular-class function through the rational
/// model `n(n+1)/x²`: `f ≈ ∫_{|k| ≤ K} f̂(k) Ψ_k dk`. The transform domain
/// requires the zero-mode moment to vanish (coefficients stay bounded at
/// `k → 0`); otherwise the pair is rejected.
pub fn decaying_reconstruct(
    f: &FxElement,
    n: u32,
    k_cut: f64,
    xs: &[f64],
) -> Result<Vec<(f64, Complex64)>> {
    let model = ContinuousModel::Rational {
        n,
        shift: Complex64::new(0.0, 0.0),
    };
    // moment gate: c_k ~ m/(ik) as k → 0 exactly when the zero-mode moment
    // m is nonzero
    let c1 = forward_continuous(f, &model, 1e-3)?;
    let c2 = forward_continuous(f, &model, 2e-3)?;
    let m1 = Complex64::new(0.0, 1e-3) * c1;
    let m2 = Complex64::new(0.0, 2e-3) * c2;
    if m1.norm() > 1e-5 && (m1 - m2).norm() < 0.5 * m1.norm() {
        return Err(Error::Validation(format!(
            "zero-mode moment {m1} obstructs the continuous expansion"
        )));
    }

    let cache: RefCell<HashMap<u64, Complex64>> = RefCell::new(HashMap::new());
    let fhat = |k: f64| -> Complex64 {
        if let Some(v) = cache.borrow().get(&k.to_bits()) {
            return *v;
        }
        let v = forward_continuous(f, &model, k).unwrap_or(Complex64::new(0.0, 0.0));
        cache.borrow_mut().insert(k.to_bits(), v);
        v
    };
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        out.push((x, reconstruct_continuous(&fhat, &model, x, k_cut)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use std::f64::consts::PI;

    fn square() -> Arc<EllipticLattice> {
        Arc::new(EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap())
    }

    fn bloch_test_function(period: f64, phase: f64) -> FxElement {
        let spec = SingularitySpec::periodic(vec![], vec![], period, phase).unwrap();
        let w = 2.0 * PI / period;
        FxElement::new(
            spec,
            vec![],
            Arc::new(move |z: Complex64| {
                (c64(0.0, phase) * z).exp()
                    * (1.0 + 0.4 * (c64(0.0, w) * z).exp() + c64(0.0, 0.2) * (c64(0.0, -w) * z).exp())
            }),
            DecayClass::None,
            1.0,
            "bloch trig",
        )
        .unwrap()
    }

    #[test]
    fn vacuum_series_recovers_fourier_coefficients() {
        let period = 2.0 * PI;
        let phase = 0.3;
        let t = DiscreteTransform::vacuum(period, phase, 3).unwrap();
        let f = bloch_test_function(period, phase);
        let coeffs = t.forward_all(&f).unwrap();
        // modes are ordered j = -3..=3; the function has c_0 = 1, c_1 = 0.4,
        // c_{-1} = 0.2i
        let expect = [0.0, 0.0, 0.2, 1.0, 0.4, 0.0, 0.0];
        for ((&c, e), m) in coeffs.iter().zip(expect).zip(&t.modes) {
            let e = if (m.p - phase - 1.0).abs() < 1e-9 {
                c64(0.4, 0.0)
            } else if (m.p - phase + 1.0).abs() < 1e-9 {
                c64(0.0, 0.2)
            } else if (m.p - phase).abs() < 1e-9 {
                c64(1.0, 0.0)
            } else {
                let _ = e;
                c64(0.0, 0.0)
            };
            assert!((c - e).norm() < 1e-10, "p={}: {c} vs {e}", m.p);
        }
        // reconstruction at a point
        let x = 0.7;
        let rec = t.reconstruct(&coeffs, x, 3).unwrap();
        let truth = f.eval(c64(x, 0.0));
        assert!((rec - truth).norm() < 1e-9);
    }

    #[test]
    fn vacuum_kernel_is_exactly_classical() {
        let t = DiscreteTransform::vacuum(2.0 * PI, 0.41, 6).unwrap();
        for (x, y) in [(0.3, 1.4), (2.0, 0.1)] {
            let (total, classical, corr) = kernel_split_discrete(&t, x, y, 6).unwrap();
            assert!(corr.norm() < 1e-10 * total.norm().max(1.0), "{corr}");
            let _ = classical;
        }
    }

    #[test]
    fn singular_lame_biorthogonality_and_weights() {
        let lat = square();
        let phase = 0.37;
        let t = DiscreteTransform::lame(lat.clone(), c64(0.0, 0.0), phase, 3).unwrap();
        assert!(t.modes.len() >= 5);
        let n_root = lat.eta.re / lat.omega.re;
        // forward of a mode against the set: δ at itself, with the diagonal
        // equal to N(λ) = 1/weight
        for (j, m) in t.modes.iter().enumerate().take(4) {
            let el = t.mode_element(&m.eigen, m.p).unwrap();
            let coeffs = t.forward_all(&el).unwrap();
            for (i, &c) in coeffs.iter().enumerate() {
                if i == j {
                    let expect = m.lambda.re - n_root;
                    assert!(
                        (c - c64(expect, 0.0)).norm() < 1e-6 * expect.abs().max(1.0),
                        "diag {c} vs N = {expect}"
                    );
                } else {
                    assert!(c.norm() < 1e-6 * (1.0 + m.lambda.norm()), "offdiag {c}");
                }
            }
        }
    }

    #[test]
    fn singular_self_reconstruction_is_delta() {
        let lat = square();
        let phase = 0.37;
        let t0 = DiscreteTransform::lame(lat.clone(), c64(0.0, 0.0), phase, 3).unwrap();
        let target = 2usize.min(t0.modes.len() - 1);
        let f = t0.mode_element(&t0.modes[target].eigen, t0.modes[target].p).unwrap();
        let dec = singular_reconstruct(&f, lat, phase, 3).unwrap();
        for (j, &c) in dec.coefficients.iter().enumerate() {
            let expect = if j == target { 1.0 } else { 0.0 };
            assert!(
                (c - c64(expect, 0.0)).norm() < 1e-8,
                "mode {j}: {c} vs {expect}"
            );
        }
        // denominators match T · N(λ), tying the indefinite norms to the
        // spectral weight (and their signs to the measure signs)
        for (m, den) in dec.transform.modes.iter().zip(&dec.denominators) {
            let n_of_lambda = 1.0 / m.weight;
            assert!(
                (den - dec.transform.period * n_of_lambda).norm()
                    < 1e-6 * den.norm().max(1.0),
                "den {den} vs T·N {}",
                dec.transform.period * n_of_lambda
            );
        }
    }

    #[test]
    fn period_shift_invariance_of_forward_integrand() {
        // the integrand Ψ*(κ_j, y) f(y) is exactly T-periodic: integrating
        // over [0, T] and [0.3, 0.3 + T] agrees
        let lat = square();
        let phase = 0.29;
        let t = DiscreteTransform::lame(lat.clone(), lat.omega_prime, phase, 2).unwrap();
        let f = bloch_test_function(t.period, phase);
        let m = &t.modes[1];
        let integrand = {
            let star = m.eigen_star.clone();
            let f = f.clone();
            move |z: Complex64| star.eval(z).unwrap() * f.eval(z)
        };
        use crate::numerics::quad::{integrate_path, PathSegment};
        let t_per = t.period;
        let a = integrate_path(
            &integrand,
            &[PathSegment::line(c64(0.0, 0.0), c64(t_per, 0.0))],
            1e-11,
        )
        .unwrap()
        .value;
        let b = integrate_path(
            &integrand,
            &[PathSegment::line(c64(0.3, 0.0), c64(0.3 + t_per, 0.0))],
            1e-11,
        )
        .unwrap()
        .value;
        assert!((a - b).norm() < 1e-9 * a.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn smooth_lame_discrete_reconstruction_converges() {
        let lat = square();
        let phase = 0.31;
        let t = DiscreteTransform::lame(lat.clone(), lat.omega_prime, phase, 16).unwrap();
        // a smooth Bloch function built from two low modes
        let f = bloch_test_function(t.period, phase);
        let coeffs = t.forward_all(&f).unwrap();
        for x in [0.4, 1.1, 2.3] {
            let rec = t.reconstruct(&coeffs, x, 16).unwrap();
            let truth = f.eval(c64(x, 0.0));
            assert!(
                (rec - truth).norm() < 0.01,
                "x={x}: {rec} vs {truth} ({})",
                (rec - truth).norm()
            );
        }
    }

    #[test]
    fn sinh_bound_state_norm_and_projection() {
        let kappa = 1.0;
        // f odd decaying member of the class
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let f = FxElement::from_evaluator(
            spec,
            Arc::new(|z: Complex64| z * (-z * z / 2.0).exp()),
            DecayClass::Rapid { width: 5.0 },
            0.5,
            "odd gaussian",
        )
        .unwrap();
        let (d1, den) = sinh_bound_state(&f, kappa).unwrap();
        assert!((den - c64(-2.0 / kappa, 0.0)).norm() < 1e-8, "den {den}");
        assert!(d1.re.is_finite() && d1.im.is_finite() && d1.norm() > 0.0);
    }

    #[test]
    fn decaying_moment_gate() {
        // x·e^{-x²} is a class member (odd, residue-free pairs) but its
        // zero-mode moment ∫ f/y dy = √π does not vanish, so the continuous
        // expansion rejects it
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let bad = FxElement::from_evaluator(
            spec,
            Arc::new(|z: Complex64| z * (-z * z).exp()),
            DecayClass::Rapid { width: 4.0 },
            0.5,
            "x gauss",
        )
        .unwrap();
        assert!(matches!(
            decaying_reconstruct(&bad, 1, 10.0, &[1.0]),
            Err(Error::Validation(_))
        ));
    }
}
