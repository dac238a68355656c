//! Floquet discriminant of `-y″ + u y = λ y` over one period and band-edge
//! location for finite-gap potentials.
//!
//! The monodromy is integrated with fixed-step RK4 on a cached potential
//! grid, so scanning many λ values costs only the matrix sweeps.

use crate::error::{Error, Result};
use crate::potentials::Potential;
use num_complex::Complex64;

/// Precomputed RK4 sample grid of a periodic potential.
#[derive(Debug, Clone)]
pub struct FloquetGrid {
    pub period: f64,
    h: f64,
    /// `u` at `x_i` and midpoints: values at `i·h/2`, `i = 0..=2N`.
    u_half: Vec<Complex64>,
}

impl FloquetGrid {
    pub fn new(u: &Potential, steps: usize) -> Result<Self> {
        let period = u
            .period()
            .ok_or_else(|| Error::Validation("Floquet grid needs a periodic potential".into()))?;
        let h = period / steps as f64;
        let mut u_half = Vec::with_capacity(2 * steps + 1);
        for i in 0..=2 * steps {
            let x = 0.5 * h * i as f64;
            u_half.push(u.evaluate(Complex64::new(x, 0.0))?);
        }
        Ok(FloquetGrid { period, h, u_half })
    }

    /// Monodromy matrix `[[y₁(T), y₂(T)], [y₁′(T), y₂′(T)]]`.
    pub fn monodromy(&self, lambda: Complex64) -> [[Complex64; 2]; 2] {
        let n = (self.u_half.len() - 1) / 2;
        let h = self.h;
        // two fundamental solutions propagated together
        let mut y = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]; // y1, y1', y2, y2'
        for i in 0..n {
            let u0 = self.u_half[2 * i] - lambda;
            let um = self.u_half[2 * i + 1] - lambda;
            let u1 = self.u_half[2 * i + 2] - lambda;
            // RK4 for (y, v)' = (v, q y) with q piecewise sampled
            let step = |y0: Complex64, v0: Complex64| -> (Complex64, Complex64) {
                let k1y = v0;
                let k1v = u0 * y0;
                let k2y = v0 + 0.5 * h * k1v;
                let k2v = um * (y0 + 0.5 * h * k1y);
                let k3y = v0 + 0.5 * h * k2v;
                let k3v = um * (y0 + 0.5 * h * k2y);
                let k4y = v0 + h * k3v;
                let k4v = u1 * (y0 + h * k3y);
                (
                    y0 + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
                    v0 + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
                )
            };
            let (a, b) = step(y[0], y[1]);
            let (c, d) = step(y[2], y[3]);
            y = [a, b, c, d];
        }
        [[y[0], y[2]], [y[1], y[3]]]
    }

    /// The discriminant `Δ(λ) = y₁(T) + y₂′(T)`.
    pub fn discriminant(&self, lambda: Complex64) -> Complex64 {
        let m = self.monodromy(lambda);
        m[0][0] + m[1][1]
    }

    /// Quasimomentum on a band from `Δ = 2cos(pT)`: `p T = jπ + arccos((-1)^j Δ/2)`
    /// with `j` the band index (0-based).
    pub fn band_momentum(&self, lambda: f64, band_index: usize) -> f64 {
        let d = self.discriminant(Complex64::new(lambda, 0.0)).re;
        let s = if band_index % 2 == 0 { 1.0 } else { -1.0 };
        let c = (s * d / 2.0).clamp(-1.0, 1.0);
        (band_index as f64 * std::f64::consts::PI + c.acos()) / self.period
    }
}

/// Locates the `2n+1` simple band edges (`|Δ| = 2` crossings) of a
/// finite-gap potential by scanning and bisection. Crossing pairs closer
/// than `1e-5` are merged as closed-gap artifacts.
pub fn band_edges(grid: &FloquetGrid, expected: usize, lambda_min: f64) -> Result<Vec<f64>> {
    let disc = |l: f64| grid.discriminant(Complex64::new(l, 0.0)).re.abs() - 2.0;
    let mut edges: Vec<f64> = Vec::new();
    let mut lo = lambda_min;
    let span = 8.0f64;
    let mut guard = 0;
    while edges.len() < expected {
        let hi = lo + span;
        let m = (600.0 * span).ceil() as usize;
        let mut prev = disc(lo);
        for i in 1..=m {
            let x = lo + span * i as f64 / m as f64;
            let cur = disc(x);
            if prev * cur < 0.0 {
                let (mut a, mut b) = (x - span / m as f64, x);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if disc(mid) * disc(a) <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                edges.push(0.5 * (a + b));
            }
            prev = cur;
        }
        lo = hi;
        guard += 1;
        if guard > 12 {
            return Err(Error::Validation(format!(
                "found only {} of {expected} band edges up to λ = {hi}",
                edges.len()
            )));
        }
    }
    // merge closed-gap artifacts (tangential |Δ| = 2 touches)
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut cleaned: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        if i + 1 < edges.len() && (edges[i + 1] - edges[i]).abs() < 1e-5 {
            i += 2;
            continue;
        }
        cleaned.push(edges[i]);
        i += 1;
    }
    cleaned.truncate(expected);
    if cleaned.len() != expected {
        return Err(Error::Validation(format!(
            "band-edge census mismatch: {} found, {expected} expected",
            cleaned.len()
        )));
    }
    Ok(cleaned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::elliptic::EllipticLattice;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn lame_smooth(n: u32) -> Potential {
        let lat = Arc::new(EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap());
        let shift = lat.omega_prime;
        Potential::LameElliptic {
            n,
            lattice: lat,
            shift,
        }
    }

    #[test]
    fn vacuum_discriminant_is_cosine() {
        let u = Potential::TabulatedPeriodic {
            period: PI,
            coeffs: vec![c64(0.0, 0.0)],
        };
        let grid = FloquetGrid::new(&u, 512).unwrap();
        for lambda in [0.5, 2.0, 7.3] {
            let d = grid.discriminant(c64(lambda, 0.0));
            let expect = 2.0 * (lambda.sqrt() * PI).cos();
            assert!((d.re - expect).abs() < 1e-8, "{d} vs {expect}");
        }
    }

    #[test]
    fn lame_one_gap_edges_match_branch_values() {
        // edges of 2℘(x+ω′) are {-e₁, -e₂, -e₃}
        let lat = EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap();
        let u = lame_smooth(1);
        let grid = FloquetGrid::new(&u, 2048).unwrap();
        let edges = band_edges(&grid, 3, -4.0).unwrap();
        let e1 = lat.e1.re;
        let expect = [-e1, 0.0, e1];
        for (a, b) in edges.iter().zip(expect) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn lame_two_gap_edges() {
        // edges of 6℘(x+ω′): {-√(3g₂), -3e₁, 0, 3e₁, √(3g₂)} for the square
        // lattice (frozen from an independent high-precision Floquet run)
        let lat = EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap();
        let u = lame_smooth(2);
        let grid = FloquetGrid::new(&u, 2048).unwrap();
        let edges = band_edges(&grid, 5, -8.0).unwrap();
        let e1 = lat.e1.re;
        let s = (3.0 * lat.g2.re).sqrt();
        let expect = [-s, -3.0 * e1, 0.0, 3.0 * e1, s];
        for (a, b) in edges.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn band_momentum_edges_hit_multiples_of_pi_over_t() {
        let u = lame_smooth(1);
        let grid = FloquetGrid::new(&u, 2048).unwrap();
        let edges = band_edges(&grid, 3, -4.0).unwrap();
        let t = grid.period;
        // bottom of band 0 has pT = 0; its top has pT = π
        assert!(grid.band_momentum(edges[0] + 1e-9, 0) * t < 1e-3);
        assert!((grid.band_momentum(edges[1] - 1e-9, 0) * t - PI).abs() < 1e-3);
    }
}
