//! The continuous line transform `f̂(γ) = (1/2π) ∫ Ψ*(y,γ) f(y) dy` with
//! `Ψ*(y,γ) := Ψ(y,σγ)` (sheet swap), its inverse over the canonical
//! contour `|Re p| ≤ K` with the spectral weight, and the kernel split
//! `S(K,x,y) = 2sin(K(x-y))/(x-y) + S_correction(K,x,y)`.

use crate::darboux::{dress_from_vacuum, EigenFn};
use crate::elliptic::{EllipticLattice, LatticeMode};
use crate::error::{Error, Result};
use crate::finitegap::lame_bloch_shifted_fn;
use crate::fx::{bilinear_pair, DecayClass, FxElement, SingularitySpec};
use crate::numerics::quad::{integrate_path, PathSegment};
use num_complex::Complex64;
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spectral models with a continuous canonical contour.
#[derive(Clone)]
pub enum ContinuousModel {
    /// `u = 0`: the classical Fourier transform.
    Vacuum,
    /// `u = n(n+1)/(x - shift)²`: vacuum-dressed eigenfunctions, flat
    /// measure `dk`; `shift = 0` is the singular line operator, complex
    /// shifts give the smooth complex potentials produced by smoothing
    /// chains.
    Rational { n: u32, shift: Complex64 },
    /// `u = 2℘(x + δ)` on a rectangular lattice: the genus-1 contour.
    LameShifted(Arc<LameContinuum>),
}

impl ContinuousModel {
    pub fn lame(lattice: Arc<EllipticLattice>, delta: Complex64) -> Result<Self> {
        Ok(ContinuousModel::LameShifted(Arc::new(LameContinuum::new(
            lattice, delta,
        )?)))
    }

    /// Eigenfunction at real quasimomentum `p` (equals `k` for the flat
    /// models).
    pub fn eigenfunction(&self, p: f64) -> Result<EigenFn> {
        match self {
            ContinuousModel::Vacuum => Ok(EigenFn::exp_ik(Complex64::new(p, 0.0))),
            ContinuousModel::Rational { n, shift } => {
                let base = dress_from_vacuum(*n, Complex64::new(p, 0.0))?;
                let s = *shift;
                if s.norm() == 0.0 {
                    return Ok(base);
                }
                let phase = (-I * p * s).exp();
                Ok(EigenFn::new(
                    Arc::new(move |z, order| Ok(base.jet(z + s, order)?.scale(phase))),
                    format!("shifted rational eigenfunction k={p}"),
                ))
            }
            ContinuousModel::LameShifted(lc) => {
                let alpha = lc.alpha_of_p(p)?;
                lame_bloch_shifted_fn(alpha, lc.delta, lc.lattice.clone())
            }
        }
    }

    /// The sheet-swapped partner `Ψ(·, σγ)`.
    pub fn eigenfunction_swapped(&self, p: f64) -> Result<EigenFn> {
        match self {
            ContinuousModel::Vacuum | ContinuousModel::Rational { .. } => self.eigenfunction(-p),
            ContinuousModel::LameShifted(lc) => {
                let alpha = lc.alpha_of_p(p)?;
                lame_bloch_shifted_fn(-alpha, lc.delta, lc.lattice.clone())
            }
        }
    }

    /// `dμ/dp` at real quasimomentum `p` (1 for the flat models).
    pub fn measure_density(&self, p: f64) -> Result<Complex64> {
        match self {
            ContinuousModel::Vacuum | ContinuousModel::Rational { .. } => {
                Ok(Complex64::new(1.0, 0.0))
            }
            ContinuousModel::LameShifted(lc) => {
                let alpha = lc.alpha_of_p(p)?;
                Ok(lc.weight(-lc.lattice.wp(alpha)?))
            }
        }
    }

    /// Singular set on the real line.
    pub fn spec(&self) -> SingularitySpec {
        match self {
            ContinuousModel::Rational { n, shift } if shift.norm() == 0.0 => {
                SingularitySpec::new(vec![0.0], vec![*n]).expect("valid spec")
            }
            _ => SingularitySpec::new(vec![], vec![]).expect("valid spec"),
        }
    }

    fn eigen_element(&self, f: &EigenFn) -> Result<FxElement> {
        let spec = self.spec();
        let inner = f.clone();
        FxElement::from_evaluator(
            spec,
            Arc::new(move |z| {
                inner
                    .eval(z)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }),
            DecayClass::None,
            0.5,
            format!("element({})", f.label),
        )
    }
}

/// `f̂(p) = (1/2π) ∫ Ψ(y, σγ(p)) f(y) dy`, detoured through the upper
/// half-plane around the shared singular set.
pub fn forward_continuous(f: &FxElement, model: &ContinuousModel, p: f64) -> Result<Complex64> {
    let psi_star = model.eigenfunction_swapped(p)?;
    let el = model.eigen_element(&psi_star)?;
    Ok(bilinear_pair(f, &el, 0.0)? / (2.0 * std::f64::consts::PI))
}

/// Reconstruction `∮_{|Re p| ≤ K} f̂(γ) Ψ(x,γ) dμ`: a plain `dk` integral
/// for the flat models, contour integral (infinite component plus the full
/// finite-band circle) for genus 1.
pub fn reconstruct_continuous(
    fhat: &dyn Fn(f64) -> Complex64,
    model: &ContinuousModel,
    x: f64,
    k_cut: f64,
) -> Result<Complex64> {
    let xs = Complex64::new(x, 0.0);
    match model {
        ContinuousModel::Vacuum | ContinuousModel::Rational { .. } => {
            let integrand = |p: Complex64| -> Complex64 {
                let pr = p.re;
                match model.eigenfunction(pr) {
                    Ok(psi) => fhat(pr) * psi.eval(xs).unwrap_or(Complex64::new(0.0, 0.0)),
                    Err(_) => Complex64::new(0.0, 0.0),
                }
            };
            // split at 0: the dressed eigenfunctions have a removable 1/k there
            let path = [
                PathSegment::line(Complex64::new(-k_cut, 0.0), Complex64::new(0.0, 0.0)),
                PathSegment::line(Complex64::new(0.0, 0.0), Complex64::new(k_cut, 0.0)),
            ];
            Ok(integrate_path(integrand, &path, 1e-9)?.value)
        }
        ContinuousModel::LameShifted(lc) => {
            lc.contour_integral(k_cut, &mut |p, alpha| {
                let psi = lame_bloch_shifted_fn(alpha, lc.delta, lc.lattice.clone())?;
                Ok(fhat(p) * psi.eval(xs)?)
            })
        }
    }
}

/// Kernel value and its classical/correction split at cutoff `K`.
#[derive(Debug, Clone, Copy)]
pub struct KernelSplit {
    pub cutoff: f64,
    pub x: f64,
    pub y: f64,
    pub total: Complex64,
    pub classical: Complex64,
    pub correction: Complex64,
}

/// `S(K,x,y) = ∮_{|Re p| ≤ K} Ψ(x,γ)Ψ(y,σγ) dμ` against
/// `S_classical = 2 sin(K(x-y))/(x-y)`.
pub fn kernel_split_continuous(
    model: &ContinuousModel,
    x: f64,
    y: f64,
    k_cut: f64,
) -> Result<KernelSplit> {
    let xs = Complex64::new(x, 0.0);
    let ys = Complex64::new(y, 0.0);
    let total = match model {
        ContinuousModel::Vacuum | ContinuousModel::Rational { .. } => {
            let integrand = |p: Complex64| -> Complex64 {
                let pr = p.re;
                let a = model
                    .eigenfunction(pr)
                    .and_then(|f| f.eval(xs))
                    .unwrap_or(Complex64::new(0.0, 0.0));
                let b = model
                    .eigenfunction_swapped(pr)
                    .and_then(|f| f.eval(ys))
                    .unwrap_or(Complex64::new(0.0, 0.0));
                a * b
            };
            let path = [
                PathSegment::line(Complex64::new(-k_cut, 0.0), Complex64::new(0.0, 0.0)),
                PathSegment::line(Complex64::new(0.0, 0.0), Complex64::new(k_cut, 0.0)),
            ];
            integrate_path(integrand, &path, 1e-9)?.value
        }
        ContinuousModel::LameShifted(lc) => lc.contour_integral(k_cut, &mut |_p, alpha| {
            let a = lame_bloch_shifted_fn(alpha, lc.delta, lc.lattice.clone())?.eval(xs)?;
            let b = lame_bloch_shifted_fn(-alpha, lc.delta, lc.lattice.clone())?.eval(ys)?;
            Ok(a * b)
        })?,
    };
    let d = x - y;
    let classical = if d.abs() > 1e-12 {
        Complex64::new(2.0 * (k_cut * d).sin() / d, 0.0)
    } else {
        Complex64::new(2.0 * k_cut, 0.0)
    };
    Ok(KernelSplit {
        cutoff: k_cut,
        x,
        y,
        total,
        classical,
        correction: total - classical,
    })
}

/// The genus-1 contour machinery for `u = 2℘(x + δ)` on a rectangular
/// lattice: the infinite component is `α = iv`, parameterized by the true
/// asymptotic quasimomentum, and the finite band is the closed circle
/// `α = ω + iv`.
pub struct LameContinuum {
    pub lattice: Arc<EllipticLattice>,
    pub delta: Complex64,
    /// Divisor projection `λ₁ = -℘(δ)`.
    pub lambda1: Complex64,
    /// Root of the quasimomentum numerator, `η/ω`.
    pub dp_root: f64,
    half_cell: f64,
    v_grid: Vec<f64>,
    p_grid: Vec<f64>,
}

impl LameContinuum {
    pub fn new(lattice: Arc<EllipticLattice>, delta: Complex64) -> Result<Self> {
        if lattice.mode != LatticeMode::Rectangular {
            return Err(Error::Validation(
                "the parameterized contour requires a rectangular lattice".into(),
            ));
        }
        if delta.norm() > 0.0 && lattice.pole_distance(delta) < 1e-9 {
            return Err(Error::Validation("delta must avoid the lattice".into()));
        }
        let lambda1 = -lattice.wp(delta)?;
        let dp_root = lattice.eta.re / lattice.omega.re;
        let b = lattice.omega_prime.im;
        let t_period = 2.0 * lattice.omega.re;
        let half_cell = std::f64::consts::PI / t_period;

        // p_true along α = iv: p(iv) for v < b, p(iv) + 2π/T beyond
        let m = 6000usize;
        let v_min = 1e-4;
        let mut v_grid = Vec::with_capacity(m);
        let mut p_grid = Vec::with_capacity(m);
        for i in 0..m {
            // tanh-clustered grid toward both endpoints
            let s = (i as f64 + 0.5) / m as f64;
            let v = v_min + (2.0 * b - 2.0 * v_min) * 0.5 * (1.0 + ((s - 0.5) * 6.0).tanh() / (3.0f64).tanh());
            let p_true = Self::p_true_static(&lattice, v, b, t_period)?;
            v_grid.push(v);
            p_grid.push(p_true);
        }
        Ok(LameContinuum {
            lattice,
            delta,
            lambda1,
            dp_root,
            half_cell,
            v_grid,
            p_grid,
        })
    }

    fn p_true_static(
        lattice: &EllipticLattice,
        v: f64,
        b: f64,
        t_period: f64,
    ) -> Result<f64> {
        let alpha = Complex64::new(0.0, v);
        let p = (-I
            * (lattice.zeta(alpha)? - (lattice.eta / lattice.omega) * alpha))
            .re;
        Ok(if v <= b {
            p
        } else {
            p + 2.0 * std::f64::consts::PI / t_period
        })
    }

    fn p_true(&self, v: f64) -> Result<f64> {
        Self::p_true_static(
            &self.lattice,
            v,
            self.lattice.omega_prime.im,
            2.0 * self.lattice.omega.re,
        )
    }

    /// `dp/dv` on the infinite component (positive).
    fn dp_dv(&self, v: f64) -> Result<f64> {
        Ok(-(self.lattice.wp(Complex64::new(0.0, v))?.re + self.dp_root))
    }

    /// Solves `p_true(iv) = p` on the infinite component.
    pub fn alpha_of_p(&self, p: f64) -> Result<Complex64> {
        if p.abs() < self.half_cell {
            return Err(Error::Validation(format!(
                "|p| = {} lies in the finite-band cell (< {})",
                p.abs(),
                self.half_cell
            )));
        }
        // bracket from the table
        let idx = self
            .p_grid
            .partition_point(|&q| q < p)
            .min(self.p_grid.len() - 1)
            .max(1);
        let mut v = if (self.p_grid[idx] - p).abs() < (self.p_grid[idx - 1] - p).abs() {
            self.v_grid[idx]
        } else {
            self.v_grid[idx - 1]
        };
        // asymptotic seed beyond table coverage: p ≈ -1/v near v = 0 and
        // p ≈ 2π/T + 1/(2b - v) near v = 2b
        if p < self.p_grid[0] {
            v = (-1.0 / p).max(1e-9);
        } else if p > *self.p_grid.last().unwrap() {
            let b = self.lattice.omega_prime.im;
            v = 2.0 * b - (1.0 / (p - 2.0 * std::f64::consts::PI / (2.0 * self.lattice.omega.re))).max(1e-9);
        }
        for _ in 0..60 {
            let g = self.p_true(v)? - p;
            if g.abs() < 1e-11 * (1.0 + p.abs()) {
                break;
            }
            let d = self.dp_dv(v)?;
            v -= g / d;
            let b = self.lattice.omega_prime.im;
            v = v.clamp(1e-10, 2.0 * b - 1e-10);
        }
        Ok(Complex64::new(0.0, v))
    }

    /// The spectral weight `dμ/dp = (λ - λ₁)/(λ - η/ω)`.
    pub fn weight(&self, lambda: Complex64) -> Complex64 {
        (lambda - self.lambda1) / (lambda - self.dp_root)
    }

    /// `∮_{|p| ≤ K} g(p, α) dμ`: the two infinite-component arcs plus the
    /// whole finite-band circle.
    pub fn contour_integral(
        &self,
        k_cut: f64,
        g: &mut dyn FnMut(f64, Complex64) -> Result<Complex64>,
    ) -> Result<Complex64> {
        if k_cut <= self.half_cell {
            return Err(Error::Validation(format!(
                "cutoff {k_cut} below the first cell boundary {}",
                self.half_cell
            )));
        }
        // adaptive trapezoid on dense p-panels (the integrand oscillates
        // like e^{ip(x-y)})
        let mut total = Complex64::new(0.0, 0.0);
        for (a, b) in [(-k_cut, -self.half_cell), (self.half_cell, k_cut)] {
            let span = b - a;
            let nodes = ((span.abs() * 14.0).ceil() as usize).max(160);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=nodes {
                let p = a + span * i as f64 / nodes as f64;
                let alpha = self.alpha_of_p(p)?;
                let lambda = -self.lattice.wp(alpha)?;
                let val = g(p, alpha)? * self.weight(lambda);
                let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
                acc += val * w;
            }
            total += acc * (span / nodes as f64);
        }
        // finite-band circle α = ω + iv, v over a full torus period;
        // dp = -(℘(ω+iv) + η/ω) dv stays real
        let b = self.lattice.omega_prime.im;
        let nodes = 800usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nodes {
            let v = 2.0 * b * (i as f64 + 0.5) / nodes as f64;
            let alpha = self.lattice.omega + Complex64::new(0.0, v);
            let lambda = -self.lattice.wp(alpha)?;
            let p = (-I
                * (self.lattice.zeta(alpha)? - (self.lattice.eta / self.lattice.omega) * alpha))
                .re;
            let dpdv = -(self.lattice.wp(alpha)?.re + self.dp_root);
            acc += g(p, alpha)? * self.weight(lambda) * dpdv;
        }
        total += acc * (2.0 * b / nodes as f64);
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use std::f64::consts::PI;

    fn bump() -> FxElement {
        // C^∞ mollifier supported on [-1, 1]
        let spec = SingularitySpec::new(vec![], vec![]).unwrap();
        FxElement::new(
            spec,
            vec![],
            Arc::new(|z: Complex64| {
                let x = z.re;
                if x.abs() >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-1.0 / (1.0 - x * x)).exp(), 0.0)
                }
            }),
            DecayClass::Rapid { width: 1.2 },
            1e-6,
            "mollifier",
        )
        .unwrap()
    }

    #[test]
    fn vacuum_forward_is_the_fourier_coefficient() {
        let spec = SingularitySpec::new(vec![], vec![]).unwrap();
        let f = FxElement::new(
            spec,
            vec![],
            Arc::new(|z: Complex64| (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            1.0,
            "gauss",
        )
        .unwrap();
        let v = forward_continuous(&f, &ContinuousModel::Vacuum, 0.0).unwrap();
        let expect = PI.sqrt() / (2.0 * PI);
        assert!((v - c64(expect, 0.0)).norm() < 1e-10, "{v} vs {expect}");
        // sheet swap consistency: f̂ on (λ,+) equals the (-k) Fourier coefficient
        let k = 1.3;
        let plus = forward_continuous(&f, &ContinuousModel::Vacuum, k).unwrap();
        let classical: Complex64 = {
            // (1/2π)∫ e^{-iky} e^{-y²} dy = e^{-k²/4}·√π/(2π)
            c64((-k * k / 4.0).exp() * PI.sqrt() / (2.0 * PI), 0.0)
        };
        assert!((plus - classical).norm() < 1e-10);
    }

    #[test]
    fn vacuum_reconstruction_inverts() {
        let f = bump();
        let model = ContinuousModel::Vacuum;
        let fhat = |k: f64| forward_continuous(&f, &model, k).unwrap();
        let x = 0.5;
        let rec = reconstruct_continuous(&fhat, &model, x, 200.0).unwrap();
        let truth = f.eval(c64(x, 0.0));
        assert!((rec - truth).norm() < 0.01, "{rec} vs {truth}");
    }

    #[test]
    fn vacuum_kernel_correction_vanishes() {
        let s = kernel_split_continuous(&ContinuousModel::Vacuum, 0.7, 0.2, 40.0).unwrap();
        assert!(s.correction.norm() < 1e-8, "{}", s.correction);
        // coincidence limit
        let s0 = kernel_split_continuous(&ContinuousModel::Vacuum, 0.3, 0.3, 25.0).unwrap();
        assert!((s0.total - c64(50.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn rational_eigenfunctions_recover_dressed_form() {
        let model = ContinuousModel::Rational {
            n: 1,
            shift: c64(0.5, 0.5),
        };
        let k = 1.7;
        let psi = model.eigenfunction(k).unwrap();
        // e^{ikx} (1 - 1/(ik(x+c))) with the shift normalization
        let x = c64(0.9, 0.0);
        let c = c64(0.5, 0.5);
        let ik = c64(0.0, k);
        let expect = (ik * x).exp() * (1.0 - 1.0 / (ik * (x + c)));
        assert!((psi.eval(x).unwrap() - expect).norm() < 1e-10);
    }

    #[test]
    fn forward_decay_for_supported_function_rational_model() {
        // f supported in [1, 3]: |f̂| decays faster than any power; the
        // least-squares slope over four large λ samples must exceed 4
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let f = FxElement::from_evaluator(
            spec,
            Arc::new(|z: Complex64| {
                let x = z.re;
                if !(1.0..3.0).contains(&x) {
                    Complex64::new(0.0, 0.0)
                } else {
                    let t = (x - 1.0) * (3.0 - x);
                    Complex64::new((-4.0 / t).exp(), 0.0)
                }
            }),
            DecayClass::Rapid { width: 3.5 },
            1e-6,
            "window bump",
        )
        .unwrap();
        let model = ContinuousModel::Rational {
            n: 1,
            shift: c64(0.0, 0.0),
        };
        let ks = [40.0, 60.0, 85.0, 115.0];
        let vals: Vec<f64> = ks
            .iter()
            .map(|&k| forward_continuous(&f, &model, k).unwrap().norm())
            .collect();
        // least-squares slope of log|f̂| against log λ
        let xs: Vec<f64> = ks.iter().map(|k| (k * k).ln()).collect();
        let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        assert!(-slope > 4.0, "fitted decay order {}, values {vals:?}", -slope);
    }
}
