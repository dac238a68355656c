//! Weierstrass elliptic functions ℘, ℘′, ζ, σ for an arbitrary lattice with
//! `Im(ω′/ω) > 0`, evaluated through Jacobi theta series in the nome
//! `q = e^{iπ ω′/ω}`.
//!
//! Arguments are first reduced to the fundamental cell (where the theta
//! series converge at machine precision in a few dozen terms), then mapped
//! back by exact quasi-periodicity. The lattice constants η = ζ(ω) and
//! η′ = ζ(ω′) are computed from two *independent* theta expansions (the
//! second on the swapped basis), so the Legendre relation
//! `ηω′ − η′ω = iπ/2` is a genuine cross-check, not an identity by
//! construction.

mod theta;

use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use theta::ThetaEngine;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which Weierstrass function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeierstrassKind {
    P,
    PPrime,
    Zeta,
    Sigma,
}

/// Shape classification of the period lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeMode {
    /// ω real, ω′ purely imaginary.
    Rectangular,
    /// ω real, Re ω′ = ω/2: lattice invariant under conjugation with complex
    /// branch values e₂ = conj(e₃).
    Rhombic,
    Generic,
}

/// JSON wire format for lattice configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub omega_re: f64,
    pub omega_im: f64,
    pub omega2_re: f64,
    pub omega2_im: f64,
}

/// An elliptic period lattice with half-periods ω, ω′ and all derived
/// constants cached.
#[derive(Debug, Clone)]
pub struct EllipticLattice {
    pub omega: Complex64,
    pub omega_prime: Complex64,
    pub tau: Complex64,
    pub g2: Complex64,
    pub g3: Complex64,
    pub e1: Complex64,
    pub e2: Complex64,
    pub e3: Complex64,
    /// η = ζ(ω)
    pub eta: Complex64,
    /// η′ = ζ(ω′), computed independently of η
    pub eta_prime: Complex64,
    pub mode: LatticeMode,
    engine: ThetaEngine,
}

impl EllipticLattice {
    /// Constructs the lattice and all derived constants from half-periods.
    pub fn new(omega: Complex64, omega_prime: Complex64) -> Result<Self> {
        let tau = omega_prime / omega;
        if tau.im <= 1e-12 {
            return Err(Error::DegenerateLattice(tau.im));
        }

        let engine = ThetaEngine::new(tau);
        let scale = (std::f64::consts::PI / (2.0 * omega)).powi(2);

        let t2 = engine.theta_const(2);
        let t3 = engine.theta_const(3);
        let t4 = engine.theta_const(4);
        let (t24, t34, t44) = (t2.powi(4), t3.powi(4), t4.powi(4));
        let e1 = scale / 3.0 * (t34 + t44);
        let e2 = scale / 3.0 * (t24 - t44);
        let e3 = -scale / 3.0 * (t24 + t34);

        let (e4s, e6s) = engine.eisenstein();
        let pw = std::f64::consts::PI / omega;
        let g2 = pw.powi(4) * e4s / 12.0;
        let g3 = pw.powi(6) * e6s / 216.0;

        let eta = -(std::f64::consts::PI * std::f64::consts::PI / (12.0 * omega))
            * engine.theta1_ppp0()
            / engine.theta1_p0();

        // Independent η′ from the swapped basis (ω′, -ω), which again has a
        // nome in the upper half-plane.
        let swapped = ThetaEngine::new(-omega / omega_prime);
        let eta_prime = -(std::f64::consts::PI * std::f64::consts::PI / (12.0 * omega_prime))
            * swapped.theta1_ppp0()
            / swapped.theta1_p0();

        let tol = 1e-9 * (e1.norm() + e2.norm() + e3.norm()).max(1.0);
        if (e1 + e2 + e3).norm() > tol {
            return Err(Error::Validation(format!(
                "branch values inconsistent: e1+e2+e3 = {}",
                e1 + e2 + e3
            )));
        }
        let legendre = eta * omega_prime - eta_prime * omega
            - I * std::f64::consts::PI / 2.0;
        if legendre.norm() > 1e-9 {
            return Err(Error::Validation(format!(
                "Legendre relation violated by {legendre}"
            )));
        }

        let near = |x: f64| x.abs() < 1e-12 * (omega.norm() + omega_prime.norm());
        let mode = if near(omega.im) && near(omega_prime.re) {
            LatticeMode::Rectangular
        } else if near(omega.im) && near(omega_prime.re - omega.re / 2.0) {
            LatticeMode::Rhombic
        } else {
            LatticeMode::Generic
        };

        Ok(EllipticLattice {
            omega,
            omega_prime,
            tau,
            g2,
            g3,
            e1,
            e2,
            e3,
            eta,
            eta_prime,
            mode,
            engine,
        })
    }

    pub fn from_config(cfg: &LatticeConfig) -> Result<Self> {
        Self::new(
            Complex64::new(cfg.omega_re, cfg.omega_im),
            Complex64::new(cfg.omega2_re, cfg.omega2_im),
        )
    }

    pub fn config(&self) -> LatticeConfig {
        LatticeConfig {
            omega_re: self.omega.re,
            omega_im: self.omega.im,
            omega2_re: self.omega_prime.re,
            omega2_im: self.omega_prime.im,
        }
    }

    /// Splits `z = z0 + 2mω + 2nω′` with `z0` in the centered fundamental
    /// cell; returns `(z0, m, n)`.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let (w1, w2) = (2.0 * self.omega, 2.0 * self.omega_prime);
        let det = w1.re * w2.im - w1.im * w2.re;
        let a = (z.re * w2.im - z.im * w2.re) / det;
        let b = (w1.re * z.im - w1.im * z.re) / det;
        let m = a.round() as i64;
        let n = b.round() as i64;
        (z - (m as f64) * w1 - (n as f64) * w2, m, n)
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        let (z0, _, _) = self.reduce(z);
        let mut d = z0.norm();
        for m in -1..=1i32 {
            for n in -1..=1i32 {
                let shift = 2.0 * self.omega * m as f64 + 2.0 * self.omega_prime * n as f64;
                d = d.min((z0 - shift).norm());
            }
        }
        d
    }

    fn v(&self, z0: Complex64) -> Complex64 {
        std::f64::consts::PI * z0 / (2.0 * self.omega)
    }

    fn wp_reduced(&self, z0: Complex64) -> Complex64 {
        let v = self.v(z0);
        let ratio = self.engine.theta1_p0() * self.engine.theta(2, v)
            / (self.engine.theta_const(2) * self.engine.theta(1, v));
        self.e1 + (std::f64::consts::PI / (2.0 * self.omega)).powi(2) * ratio * ratio
    }

    fn wp_prime_reduced(&self, z0: Complex64) -> Complex64 {
        let v = self.v(z0);
        let t1 = self.engine.theta(1, v);
        let t1p0 = self.engine.theta1_p0();
        let num = 2.0
            * self.engine.theta(2, v)
            * self.engine.theta(3, v)
            * self.engine.theta(4, v)
            * t1p0
            * t1p0;
        -(std::f64::consts::PI / (2.0 * self.omega)).powi(3) * num / (t1 * t1 * t1)
    }

    fn zeta_reduced(&self, z0: Complex64) -> Complex64 {
        let v = self.v(z0);
        self.eta * z0 / self.omega
            + (std::f64::consts::PI / (2.0 * self.omega)) * self.engine.theta1_ratio(v)
    }

    fn sigma_reduced(&self, z0: Complex64) -> Complex64 {
        let v = self.v(z0);
        (2.0 * self.omega / std::f64::consts::PI)
            * (self.eta * z0 * z0 / (2.0 * self.omega)).exp()
            * self.engine.theta(1, v)
            / self.engine.theta1_p0()
    }

    /// Evaluates the requested Weierstrass function at `z`.
    pub fn weierstrass(&self, kind: WeierstrassKind, z: Complex64) -> Result<Complex64> {
        let (z0, m, n) = self.reduce(z);
        let pole = z0.norm() < 1e-12 * self.omega.norm();
        match kind {
            WeierstrassKind::P => {
                if pole {
                    return Err(Error::PoleProximity(z - z0));
                }
                Ok(self.wp_reduced(z0))
            }
            WeierstrassKind::PPrime => {
                if pole {
                    return Err(Error::PoleProximity(z - z0));
                }
                Ok(self.wp_prime_reduced(z0))
            }
            WeierstrassKind::Zeta => {
                if pole {
                    return Err(Error::PoleProximity(z - z0));
                }
                let shift = 2.0 * (m as f64) * self.eta + 2.0 * (n as f64) * self.eta_prime;
                Ok(self.zeta_reduced(z0) + shift)
            }
            WeierstrassKind::Sigma => {
                if pole {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                if m == 0 && n == 0 {
                    return Ok(self.sigma_reduced(z0));
                }
                let w = 2.0 * (m as f64) * self.omega + 2.0 * (n as f64) * self.omega_prime;
                let eta_w = 2.0 * (m as f64) * self.eta + 2.0 * (n as f64) * self.eta_prime;
                let sign = if (m + n + m * n) % 2 == 0 { 1.0 } else { -1.0 };
                Ok(sign * (eta_w * (z0 + w / 2.0)).exp() * self.sigma_reduced(z0))
            }
        }
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        self.weierstrass(WeierstrassKind::P, z)
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64> {
        self.weierstrass(WeierstrassKind::PPrime, z)
    }

    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        self.weierstrass(WeierstrassKind::Zeta, z)
    }

    pub fn sigma(&self, z: Complex64) -> Result<Complex64> {
        self.weierstrass(WeierstrassKind::Sigma, z)
    }

    /// Taylor jet of ℘ at `z`, generated from (℘, ℘′) via the defining ODE
    /// `℘″ = 6℘² − g₂/2`; exact to machine precision.
    pub fn wp_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        let p0 = self.wp(z)?;
        let p1 = self.wp_prime(z)?;
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        c[0] = p0;
        if order >= 1 {
            c[1] = p1;
        }
        for k in 0..order.saturating_sub(1) {
            // (k+2)(k+1) c_{k+2} = 6 (P^2)_k - (g2/2) δ_{k0}
            let mut conv = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                conv += c[j] * c[k - j];
            }
            let mut rhs = 6.0 * conv;
            if k == 0 {
                rhs -= self.g2 / 2.0;
            }
            c[k + 2] = rhs / ((k + 2) as f64 * (k + 1) as f64);
        }
        Ok(Jet { c })
    }

    /// Taylor jet of ζ at `z` (`ζ′ = −℘`).
    pub fn zeta_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        let p = self.wp_jet(z, order.saturating_sub(1))?;
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        c[0] = self.zeta(z)?;
        for k in 0..order {
            c[k + 1] = -p.c[k] / (k + 1) as f64;
        }
        Ok(Jet { c })
    }

    /// Taylor jet of σ at `z` (`σ′ = ζσ`).
    pub fn sigma_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        let zj = self.zeta_jet(z, order.saturating_sub(1))?;
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        c[0] = self.sigma(z)?;
        for k in 0..order {
            let mut conv = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                conv += zj.c[j] * c[k - j];
            }
            c[k + 1] = conv / (k + 1) as f64;
        }
        Ok(Jet { c })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use std::f64::consts::PI;

    fn square() -> EllipticLattice {
        EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap()
    }

    fn rhombic() -> EllipticLattice {
        EllipticLattice::new(c64(1.0, 0.0), Complex64::from_polar(1.0, PI / 3.0)).unwrap()
    }

    // Reference values below were frozen from an independent multiprecision
    // theta-function evaluation.
    #[test]
    fn square_lattice_constants() {
        let l = square();
        assert_eq!(l.mode, LatticeMode::Rectangular);
        assert!((l.e1 - c64(0.6966019648428384, 0.0)).norm() < 1e-12);
        assert!(l.e2.norm() < 1e-12);
        assert!((l.e3 + l.e1).norm() < 1e-12);
        assert!((l.g2 - c64(1.941017189691612, 0.0)).norm() < 1e-12);
        assert!(l.g3.norm() < 1e-12);
        assert!((l.eta - c64(0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn square_lattice_point_values() {
        let l = square();
        let z = c64(0.7, 0.0);
        assert!((l.wp(z).unwrap() - c64(2.088741949919555, 0.0)).norm() < 1e-11);
        assert!((l.wp_prime(z).unwrap() - c64(-5.691847520234568, 0.0)).norm() < 1e-10);
        assert!((l.zeta(z).unwrap() - c64(1.417438258474099, 0.0)).norm() < 1e-11);
        assert!((l.sigma(z).unwrap() - c64(0.6986397792633411, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn rhombic_lattice_constants_and_values() {
        let l = rhombic();
        assert_eq!(l.mode, LatticeMode::Rhombic);
        assert!((l.e1 - c64(1.474585992371192, 0.0)).norm() < 1e-11);
        assert!((l.e2 - c64(-0.7372929961855962, 1.277028929458139)).norm() < 1e-11);
        assert!((l.e3 - l.e2.conj()).norm() < 1e-11);
        assert!(l.g2.norm() < 1e-10);
        assert!((l.g3 - c64(12.82538182936807, 0.0)).norm() < 1e-10);
        assert!((l.eta - c64(0.9068996821171089, 0.0)).norm() < 1e-11);
        let z = c64(0.7, 0.31);
        assert!((l.wp(z).unwrap() - c64(1.130901967718479, -1.107759652197029)).norm() < 1e-11);
        assert!((l.zeta(z).unwrap() - c64(1.206183792783246, -0.549825600970186)).norm() < 1e-11);
        assert!((l.sigma(z).unwrap() - c64(0.7022948318845655, 0.3094789670948412)).norm() < 1e-11);
    }

    #[test]
    fn legendre_relation_tight() {
        for l in [square(), rhombic()] {
            let lhs = l.eta * l.omega_prime - l.eta_prime * l.omega;
            assert!((lhs - c64(0.0, PI / 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn branch_values_and_ode() {
        for l in [square(), rhombic()] {
            assert!((l.wp(l.omega).unwrap() - l.e1).norm() < 1e-10);
            assert!((l.wp(l.omega + l.omega_prime).unwrap() - l.e2).norm() < 1e-10);
            assert!((l.wp(l.omega_prime).unwrap() - l.e3).norm() < 1e-10);
            // defining ODE at scattered points
            let mut rng_state = 0x9e3779b97f4a7c15u64;
            let mut next = || {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (rng_state >> 11) as f64 / (1u64 << 53) as f64
            };
            for _ in 0..100 {
                let z = c64(
                    (next() - 0.5) * 2.0 * l.omega.re.abs().max(1.0),
                    (next() - 0.5) * 2.0,
                );
                if l.pole_distance(z) < 0.15 {
                    continue;
                }
                let p = l.wp(z).unwrap();
                let pp = l.wp_prime(z).unwrap();
                let res = pp * pp - 4.0 * p * p * p + l.g2 * p + l.g3;
                assert!(res.norm() < 1e-10 * (1.0 + p.norm().powi(3)), "res {}", res.norm());
            }
        }
    }

    #[test]
    fn sigma_normalization_and_quasi_periodicity() {
        let l = square();
        let z = c64(1e-3, 0.0);
        assert!((l.sigma(z).unwrap() / z - c64(1.0, 0.0)).norm() < 1e-6);
        for z in [c64(0.4, 0.1), c64(-0.8, 0.6), c64(0.2, -0.9)] {
            let lhs = l.sigma(z + 2.0 * l.omega).unwrap();
            let rhs = -l.sigma(z).unwrap() * (2.0 * l.eta * (z + l.omega)).exp();
            assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
            let lhs2 = l.sigma(z + 2.0 * l.omega_prime).unwrap();
            let rhs2 = -l.sigma(z).unwrap() * (2.0 * l.eta_prime * (z + l.omega_prime)).exp();
            assert!((lhs2 - rhs2).norm() < 1e-10 * rhs2.norm().max(1.0));
        }
    }

    #[test]
    fn parity() {
        let l = rhombic();
        for z in [c64(0.37, 0.21), c64(-0.52, 0.33)] {
            assert!((l.wp(z).unwrap() - l.wp(-z).unwrap()).norm() < 1e-10);
            assert!((l.wp_prime(z).unwrap() + l.wp_prime(-z).unwrap()).norm() < 1e-10);
            assert!((l.zeta(z).unwrap() + l.zeta(-z).unwrap()).norm() < 1e-10);
            assert!((l.sigma(z).unwrap() + l.sigma(-z).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn homogeneity_under_doubling() {
        let a = square();
        let b = EllipticLattice::new(2.0 * a.omega, 2.0 * a.omega_prime).unwrap();
        for z in [c64(0.4, 0.2), c64(0.9, -0.5)] {
            let lhs = b.wp(2.0 * z).unwrap();
            let rhs = a.wp(z).unwrap() / 4.0;
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn trigonometric_degeneration() {
        // increasingly elongated rectangles approach the sin^{-2} profile
        let om = PI / 2.0;
        let profile = |z: f64| (PI / (2.0 * om)).powi(2) * (1.0 / (PI * z / (2.0 * om)).sin().powi(2) - 1.0 / 3.0);
        let mut errs = Vec::new();
        for k in [2.0, 3.0, 4.0] {
            let l = EllipticLattice::new(c64(om, 0.0), c64(0.0, k * om)).unwrap();
            let z = 0.6;
            errs.push((l.wp(c64(z, 0.0)).unwrap().re - profile(z)).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn jets_match_direct_values() {
        let l = square();
        let z = c64(0.6, 0.25);
        let j = l.wp_jet(z, 4).unwrap();
        assert!((j.derivative(1) - l.wp_prime(z).unwrap()).norm() < 1e-10);
        // ℘″ = 6℘² − g₂/2
        let expect = 6.0 * l.wp(z).unwrap().powi(2) - l.g2 / 2.0;
        assert!((j.derivative(2) - expect).norm() < 1e-9);
        let zj = l.zeta_jet(z, 2).unwrap();
        assert!((zj.derivative(1) + l.wp(z).unwrap()).norm() < 1e-10);
        let sj = l.sigma_jet(z, 2).unwrap();
        assert!((sj.derivative(1) - l.zeta(z).unwrap() * l.sigma(z).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn degenerate_lattice_rejected() {
        assert!(EllipticLattice::new(c64(1.0, 0.0), c64(2.0, 0.0)).is_err());
    }

    #[test]
    fn pole_error_reports_lattice_point() {
        let l = square();
        let at = 2.0 * l.omega + 2.0 * l.omega_prime;
        match l.wp(at) {
            Err(Error::PoleProximity(p)) => assert!((p - at).norm() < 1e-9),
            other => panic!("expected pole error, got {other:?}"),
        }
    }
}
