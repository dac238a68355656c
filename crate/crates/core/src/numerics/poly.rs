//! Complex polynomials and simultaneous (Aberth-Ehrlich) root finding with
//! Newton polishing.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

/// A located root with an estimated multiplicity from cluster analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl ComplexPolynomial {
    /// Builds from ascending coefficients, trimming a (numerically) zero
    /// leading coefficient tail.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Err(Error::Validation("zero polynomial".into()));
        }
        let mut c = coeffs;
        while c.len() > 1 && c.last().unwrap().norm() <= 1e-300 * max {
            c.pop();
        }
        Ok(ComplexPolynomial { coeffs: c })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Value and derivative in one sweep.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Value plus first and second derivatives in one sweep.
    fn eval_with_two_derivatives(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        let mut ddp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * z + dp;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, 2.0 * ddp)
    }

    pub fn derivative(&self) -> ComplexPolynomial {
        if self.coeffs.len() == 1 {
            return ComplexPolynomial {
                coeffs: vec![Complex64::new(0.0, 0.0)],
            };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        ComplexPolynomial { coeffs }
    }

    /// Backward-error scale `sum |c_k| |z|^k` used for residual checks.
    pub fn residual_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let mut acc = 0.0;
        let mut pow = 1.0;
        for c in &self.coeffs {
            acc += c.norm() * pow;
            pow *= r;
        }
        acc.max(1e-300)
    }

    /// All roots with multiplicity estimates (Aberth-Ehrlich iteration
    /// followed by Newton polishing).
    pub fn roots(&self) -> Result<Vec<Root>> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::Validation("constant polynomial has no roots".into()));
        }

        // Initial guesses on a circle at the Fujiwara-type root bound
        // 2 max_i |c_i/c_n|^{1/(n-i)}, slightly rotated to break symmetry.
        let lead = self.coeffs[n].norm();
        let radius = 2.0
            * self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(i, c)| (c.norm() / lead).powf(1.0 / (n - i) as f64))
                .fold(0.0, f64::max)
            + 1e-6;
        let mut zs: Vec<Complex64> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
                Complex64::from_polar(radius, th)
            })
            .collect();

        let mut converged = vec![false; n];
        let max_iter = 800;
        for _ in 0..max_iter {
            let mut moved = 0.0_f64;
            for i in 0..n {
                if converged[i] {
                    continue;
                }
                let (p, dp) = self.eval_with_derivative(zs[i]);
                if p.norm() <= 1e-14 * self.residual_scale(zs[i]) {
                    converged[i] = true;
                    continue;
                }
                let newton = if dp.norm() > 0.0 { p / dp } else { p };
                let mut repulse = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let d = zs[i] - zs[j];
                        if d.norm() > 1e-300 {
                            repulse += 1.0 / d;
                        }
                    }
                }
                let denom = 1.0 - newton * repulse;
                let step = if denom.norm() > 1e-300 {
                    newton / denom
                } else {
                    newton
                };
                zs[i] -= step;
                moved = moved.max(step.norm());
            }
            if moved < 1e-14 * radius {
                break;
            }
        }

        // Newton polishing (5 steps), applied to p/p' so that multiple roots
        // also converge quadratically.
        for z in zs.iter_mut() {
            for _ in 0..5 {
                let (p, dp, ddp) = self.eval_with_two_derivatives(*z);
                if p.norm() == 0.0 {
                    break;
                }
                if dp.norm() < 1e-300 {
                    break;
                }
                let u = p / dp;
                let denom = 1.0 - u * (ddp / dp);
                let step = if denom.norm() > 1e-12 { u / denom } else { u };
                *z -= step;
            }
        }

        // Residual gate
        let bad: Vec<_> = zs
            .iter()
            .filter(|&&z| self.eval(z).norm() > 1e-10 * self.residual_scale(z))
            .collect();
        if !bad.is_empty() {
            return Err(Error::RootsNonConvergence {
                stagnant: bad.len(),
                degree: n,
                location: *bad[0],
            });
        }

        // Multiplicity estimates by clustering (distance threshold 1e-6,
        // scaled by the root spread).
        let spread = zs
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let thresh = 1e-6 * spread;
        let mut used = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut members = vec![i];
            used[i] = true;
            for j in i + 1..n {
                if !used[j] && (zs[i] - zs[j]).norm() < thresh {
                    used[j] = true;
                    members.push(j);
                }
            }
            let centroid =
                members.iter().map(|&j| zs[j]).sum::<Complex64>() / members.len() as f64;
            out.push(Root {
                value: centroid,
                multiplicity: members.len(),
            });
        }
        out.sort_by(|a, b| {
            a.value
                .re
                .partial_cmp(&b.value.re)
                .unwrap()
                .then(a.value.im.partial_cmp(&b.value.im).unwrap())
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use proptest::prelude::*;

    #[test]
    fn cubic_with_one_real_root() {
        // x^3 + 12: one real root at -12^{1/3} ≈ -2.2894284851066637
        let p = ComplexPolynomial::from_real(&[12.0, 0.0, 0.0, 1.0]).unwrap();
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 3);
        let real: Vec<_> = roots.iter().filter(|r| r.value.im.abs() < 1e-8).collect();
        assert_eq!(real.len(), 1);
        assert!((real[0].value.re + 12f64.powf(1.0 / 3.0)).abs() < 1e-10);
        // the complex pair is conjugate
        let cplx: Vec<_> = roots.iter().filter(|r| r.value.im.abs() >= 1e-8).collect();
        assert!((cplx[0].value - cplx[1].value.conj()).norm() < 1e-9);
    }

    #[test]
    fn quadratic_pure_imaginary() {
        let p = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]).unwrap();
        let roots = p.roots().unwrap();
        let mut ims: Vec<f64> = roots.iter().map(|r| r.value.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-12 && (ims[1] - 1.0).abs() < 1e-12);
        assert!(roots.iter().all(|r| r.value.re.abs() < 1e-12));
    }

    #[test]
    fn multiple_root_cluster() {
        // (z-1)^3 (z+2)
        let p = ComplexPolynomial::from_real(&[-2.0, 5.0, -3.0, -1.0, 1.0]).unwrap();
        let roots = p.roots().unwrap();
        let near_one = roots.iter().find(|r| (r.value - c64(1.0, 0.0)).norm() < 1e-2);
        assert!(near_one.is_some());
        assert_eq!(near_one.unwrap().multiplicity, 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn vieta_roundtrip(coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..21)) {
            // random polynomial with unit-disk coefficients and a safely
            // nonzero leading coefficient
            let mut cs: Vec<Complex64> = coeffs.iter().map(|&(re, im)| c64(re, im)).collect();
            let lead = cs.last_mut().unwrap();
            if lead.norm() < 0.2 { *lead = c64(1.0, 0.3); }
            let p = ComplexPolynomial::new(cs.clone()).unwrap();
            if let Ok(roots) = p.roots() {
                // rebuild the monic polynomial from the root multiset
                let mut rebuilt = vec![c64(1.0, 0.0)];
                for r in &roots {
                    for _ in 0..r.multiplicity {
                        let mut next = vec![c64(0.0, 0.0); rebuilt.len() + 1];
                        for (i, &c) in rebuilt.iter().enumerate() {
                            next[i + 1] += c;
                            next[i] -= c * r.value;
                        }
                        rebuilt = next;
                    }
                }
                let lead = *cs.last().unwrap();
                let scale = cs.iter().map(|c| c.norm()).fold(0.0, f64::max);
                for (a, b) in cs.iter().zip(rebuilt.iter().map(|&c| c * lead)) {
                    prop_assert!((a - b).norm() < 1e-8 * scale.max(1.0) * 10.0);
                }
            }
        }
    }
}
