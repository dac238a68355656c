//! Truncated Taylor series ("jet") arithmetic over `Complex64`.
//!
//! A `Jet` holds the coefficients `f(z0), f'(z0), f''(z0)/2!, …` of a function
//! expanded at a base point, truncated at a fixed order. Elementary operations
//! propagate these coefficients exactly, so evaluator compositions (Darboux
//! dressing, eigen-equation residuals, kernel weights) obtain machine-precision
//! derivatives with no finite-difference noise.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated Taylor expansion: `c[k]` is the coefficient of `(z - z0)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<Complex64>,
}

impl Jet {
    /// Jet of the constant `v` at order `order` (length `order + 1`).
    pub fn constant(v: Complex64, order: usize) -> Self {
        let mut c = vec![ZERO; order + 1];
        c[0] = v;
        Jet { c }
    }

    /// Jet of the identity function at base point `z0`.
    pub fn variable(z0: Complex64, order: usize) -> Self {
        let mut c = vec![ZERO; order + 1];
        c[0] = z0;
        if order >= 1 {
            c[1] = Complex64::new(1.0, 0.0);
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Value of the underlying function at the base point.
    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// `k`-th derivative at the base point (`k! * c[k]`).
    pub fn derivative(&self, k: usize) -> Complex64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        if k < self.c.len() {
            self.c[k] * fact
        } else {
            ZERO
        }
    }

    /// Jet of `f'` (one order lower).
    pub fn differentiate(&self) -> Jet {
        let n = self.c.len();
        if n == 1 {
            return Jet::constant(ZERO, 0);
        }
        let mut c = Vec::with_capacity(n - 1);
        for k in 1..n {
            c.push(self.c[k] * k as f64);
        }
        Jet { c }
    }

    pub fn add(&self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        let c = (0..n).map(|k| self.c[k] + rhs.c[k]).collect();
        Jet { c }
    }

    pub fn sub(&self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        let c = (0..n).map(|k| self.c[k] - rhs.c[k]).collect();
        Jet { c }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            c: self.c.iter().map(|v| -v).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: Complex64) -> Jet {
        let mut c = self.c.clone();
        c[0] += s;
        Jet { c }
    }

    pub fn mul(&self, rhs: &Jet) -> Jet {
        let n = self.c.len().min(rhs.c.len());
        let mut c = vec![ZERO; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * rhs.c[j];
            }
        }
        Jet { c }
    }

    /// Reciprocal; the leading coefficient must be nonzero.
    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let a0 = self.c[0];
        let inv = 1.0 / a0;
        let mut c = vec![ZERO; n];
        c[0] = inv;
        for k in 1..n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.c[j] * c[k - j];
            }
            c[k] = -s * inv;
        }
        Jet { c }
    }

    pub fn div(&self, rhs: &Jet) -> Jet {
        self.mul(&rhs.recip())
    }

    pub fn powi(&self, mut e: i32) -> Jet {
        if e < 0 {
            return self.recip().powi(-e);
        }
        let mut acc = Jet::constant(Complex64::new(1.0, 0.0), self.order());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Composes an analytic scalar function given by the derivative recursion
    /// `g' = dg(g, self)`. Used internally for exp/sin/cos/log.
    fn lift(&self, f0: Complex64, deriv_coeffs: impl Fn(&[Complex64], usize) -> Complex64) -> Jet {
        // generic composition via the chain rule on series with c[0] shifted out
        let n = self.c.len();
        let mut c = vec![ZERO; n];
        c[0] = f0;
        for k in 1..n {
            c[k] = deriv_coeffs(&c, k);
        }
        Jet { c }
    }

    pub fn exp(&self) -> Jet {
        // (e^u)' = u' e^u  =>  k*c[k] = sum_{j=1..k} j*u[j]*c[k-j]
        let u = &self.c;
        self.lift(self.c[0].exp(), |c, k| {
            let mut s = ZERO;
            for j in 1..=k {
                s += u[j] * (j as f64) * c[k - j];
            }
            s / k as f64
        })
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        // s' = u' c, c' = -u' s
        let n = self.c.len();
        let u = &self.c;
        let mut s = vec![ZERO; n];
        let mut c = vec![ZERO; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut sk = ZERO;
            let mut ck = ZERO;
            for j in 1..=k {
                sk += u[j] * (j as f64) * c[k - j];
                ck -= u[j] * (j as f64) * s[k - j];
            }
            s[k] = sk / k as f64;
            c[k] = ck / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }

    pub fn sinh(&self) -> Jet {
        // sinh u = -i sin(iu)
        let i = Complex64::new(0.0, 1.0);
        self.scale(i).sin().scale(-i)
    }

    pub fn ln(&self) -> Jet {
        // (ln u)' = u'/u
        let du = self.differentiate();
        let ratio = du.div(&Jet {
            c: self.c[..self.c.len() - 1].to_vec(),
        });
        let mut c = vec![ZERO; self.c.len()];
        c[0] = self.c[0].ln();
        for k in 1..self.c.len() {
            c[k] = ratio.c[k - 1] / k as f64;
        }
        Jet { c }
    }
}
