//! Jacobi theta series in the half-period nome `q = e^{iπτ}`.
//!
//! Series conventions (z-argument, not scaled by π):
//!   θ₁(v) = 2 Σ (−1)ⁿ q^{(n+1/2)²} sin((2n+1)v)
//!   θ₂(v) = 2 Σ q^{(n+1/2)²} cos((2n+1)v)
//!   θ₃(v) = 1 + 2 Σ q^{n²} cos(2nv)
//!   θ₄(v) = 1 + 2 Σ (−1)ⁿ q^{n²} cos(2nv)
//!
//! Arguments are expected pre-reduced so that `|Im v| ≤ π Im τ / 2 + O(1)`;
//! in that range the terms decay like `|q|^{n² - n}` and 64 terms are far
//! beyond machine precision for any `Im τ ≥ 0.05`.

use num_complex::Complex64;

const MAX_TERMS: usize = 96;

#[derive(Debug, Clone)]
pub(crate) struct ThetaEngine {
    /// q^{(n+1/2)^2} for n = 0..
    q_half_sq: Vec<Complex64>,
    /// q^{n^2} for n = 1..
    q_sq: Vec<Complex64>,
    /// e^{2πiτ} powers for Eisenstein sums
    big_q: Complex64,
}

impl ThetaEngine {
    pub fn new(tau: Complex64) -> Self {
        let q = (Complex64::new(0.0, std::f64::consts::PI) * tau).exp();
        let lq = q.ln();
        let q_half_sq = (0..MAX_TERMS)
            .map(|n| {
                let e = (n as f64 + 0.5) * (n as f64 + 0.5);
                (lq * e).exp()
            })
            .collect();
        let q_sq = (1..=MAX_TERMS)
            .map(|n| (lq * (n * n) as f64).exp())
            .collect();
        ThetaEngine {
            q_half_sq,
            q_sq,
            big_q: q * q,
        }
    }

    /// θ_k(v) for k in 1..=4.
    pub fn theta(&self, k: u8, v: Complex64) -> Complex64 {
        match k {
            1 => self.sum_half(v, true),
            2 => self.sum_half(v, false),
            3 => self.sum_whole(v, false),
            4 => self.sum_whole(v, true),
            _ => unreachable!(),
        }
    }

    fn sum_half(&self, v: Complex64, odd: bool) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut tiny_run = 0;
        for (n, &qn) in self.q_half_sq.iter().enumerate() {
            let m = (2 * n + 1) as f64;
            let trig = if odd { (m * v).sin() } else { (m * v).cos() };
            let sign = if odd && n % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * 2.0 * qn * trig;
            acc += term;
            if term.norm() < 1e-18 * (1.0 + acc.norm()) {
                tiny_run += 1;
                if tiny_run >= 2 {
                    break;
                }
            } else {
                tiny_run = 0;
            }
        }
        acc
    }

    fn sum_whole(&self, v: Complex64, alternating: bool) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut tiny_run = 0;
        for (i, &qn) in self.q_sq.iter().enumerate() {
            let n = i + 1;
            let sign = if alternating && n % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * 2.0 * qn * (2.0 * n as f64 * v).cos();
            acc += term;
            if term.norm() < 1e-18 * (1.0 + acc.norm()) {
                tiny_run += 1;
                if tiny_run >= 2 {
                    break;
                }
            } else {
                tiny_run = 0;
            }
        }
        acc
    }

    /// θ_k(0) for k in 2..=4.
    pub fn theta_const(&self, k: u8) -> Complex64 {
        self.theta(k, Complex64::new(0.0, 0.0))
    }

    /// θ₁′(0) = 2 Σ (−1)ⁿ (2n+1) q^{(n+1/2)²}.
    pub fn theta1_p0(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, &qn) in self.q_half_sq.iter().enumerate() {
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * 2.0 * (2 * n + 1) as f64 * qn;
            acc += term;
            if term.norm() < 1e-18 * acc.norm().max(1.0) && n > 2 {
                break;
            }
        }
        acc
    }

    /// θ₁‴(0) = −2 Σ (−1)ⁿ (2n+1)³ q^{(n+1/2)²}.
    pub fn theta1_ppp0(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, &qn) in self.q_half_sq.iter().enumerate() {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let m = (2 * n + 1) as f64;
            let term = sign * 2.0 * m * m * m * qn;
            acc += term;
            if term.norm() < 1e-18 * acc.norm().max(1.0) && n > 2 {
                break;
            }
        }
        acc
    }

    /// θ₁′(v)/θ₁(v).
    pub fn theta1_ratio(&self, v: Complex64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut tiny_run = 0;
        for (n, &qn) in self.q_half_sq.iter().enumerate() {
            let m = (2 * n + 1) as f64;
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            let term = sign * 2.0 * m * qn * (m * v).cos();
            num += term;
            if term.norm() < 1e-18 * (1.0 + num.norm()) {
                tiny_run += 1;
                if tiny_run >= 2 {
                    break;
                }
            } else {
                tiny_run = 0;
            }
        }
        num / self.theta(1, v)
    }

    /// (E₄(τ), E₆(τ)) via Lambert series in `Q = e^{2πiτ}`.
    pub fn eisenstein(&self) -> (Complex64, Complex64) {
        let mut e4 = Complex64::new(1.0, 0.0);
        let mut e6 = Complex64::new(1.0, 0.0);
        let mut qn = Complex64::new(1.0, 0.0);
        for n in 1..=MAX_TERMS {
            qn *= self.big_q;
            let frac = qn / (1.0 - qn);
            let n3 = (n * n * n) as f64;
            let t4 = 240.0 * n3 * frac;
            let t6 = 504.0 * n3 * (n * n) as f64 * frac;
            e4 += t4;
            e6 -= t6;
            if t4.norm() < 1e-18 * e4.norm() && t6.norm() < 1e-18 * e6.norm() {
                break;
            }
        }
        (e4, e6)
    }
}
