//! The spectral weight `Π(λ-λ_j) / (2w)` and the sign census of the
//! spectral measure against the quasimomentum along the canonical contour.
//!
//! For the potentials `n(n+1)℘(x)` the divisor of the renormalized
//! Baker-Akhiezer function sits entirely at infinity, so the measure is
//! `dμ = dλ/(2w)` and `dμ/dp = 1/N(λ)` with `N` the quasimomentum
//! numerator. The census therefore counts the multiplier-matched contour
//! points lying in bands where `N < 0` (normalized positive on the
//! infinite band).

use super::curve::{HyperellipticCurve, QuasimomentumChart, SurfacePoint};
use super::floquet::{band_edges, FloquetGrid};
use crate::elliptic::{EllipticLattice, LatticeMode};
use crate::error::{Error, Result};
use crate::potentials::Potential;
use num_complex::Complex64;
use std::sync::Arc;

/// The measure factor `Π_j (λ(γ) - λ_j) / (2 w(γ))` multiplying `dλ`.
pub fn spectral_weight(
    curve: &HyperellipticCurve,
    divisor: &[Complex64],
    gamma: &SurfacePoint,
) -> Result<Complex64> {
    if curve.branch_distance(gamma.lambda) < 1e-8 {
        return Err(Error::Validation(format!(
            "evaluation too close to a branch point: λ = {}",
            gamma.lambda
        )));
    }
    let num = divisor
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &lj| acc * (gamma.lambda - lj));
    Ok(num / (2.0 * gamma.w))
}

/// One multiplier-matched point with its measure sign.
#[derive(Debug, Clone, Copy)]
pub struct CensusPoint {
    pub lambda: f64,
    pub p: f64,
    pub band: usize,
    /// Sign of `dμ/dp` there.
    pub measure_sign: f64,
}

/// Result of the measure-sign census.
#[derive(Debug, Clone)]
pub struct CensusReport {
    pub n: u32,
    pub phase: f64,
    pub band_edges: Vec<f64>,
    pub numerator_roots: Vec<Complex64>,
    pub points: Vec<CensusPoint>,
    pub negative_count: usize,
    pub examined: usize,
}

/// Counts multiplier-matched contour points with `dμ/dp < 0` for the
/// singular Lamé operator `n(n+1)℘(x)` over a rectangular lattice.
/// `count` bounds how many points are examined per sheet going up the
/// infinite band (the negatives all lie in the finite bands, so the count
/// stabilizes immediately).
pub fn measure_sign_census(
    lattice: &EllipticLattice,
    n: u32,
    phase: f64,
    count: usize,
) -> Result<CensusReport> {
    if lattice.mode != LatticeMode::Rectangular {
        return Err(Error::Validation(
            "the measure-sign census requires a rectangular lattice (real band structure)".into(),
        ));
    }
    let t_period = 2.0 * lattice.omega.re;
    let edge_gap = (phase * t_period).rem_euclid(std::f64::consts::PI);
    if edge_gap.min(std::f64::consts::PI - edge_gap) < 1e-6 {
        return Err(Error::NonGenericMultiplier(format!(
            "multiplier phase {phase} collides with a band edge"
        )));
    }

    // real smooth representative of the operator for the Floquet scan
    let u = Potential::LameElliptic {
        n,
        lattice: Arc::new(lattice.clone()),
        shift: lattice.omega_prime,
    };
    let grid = FloquetGrid::new(&u, 2048)?;
    let nn = (n * (n + 1)) as f64;
    let lambda_min = nn * lattice.e3.re - 2.0;
    let edges = band_edges(&grid, 2 * n as usize + 1, lambda_min)?;

    let curve = HyperellipticCurve::new(
        edges.iter().map(|&e| Complex64::new(e, 0.0)).collect(),
    )?;
    let chart = QuasimomentumChart::new(&curve, 1024)?;
    let roots = chart.numerator_roots()?;

    // dμ/dp = 1/N(λ); N is monic so the infinite band carries + sign
    let sign_at = |lambda: f64| -> f64 {
        chart.numerator(Complex64::new(lambda, 0.0)).re.signum()
    };

    // multiplier targets: pT ≡ ±φ₀T (mod 2π)
    let tau_plus = (phase * t_period).rem_euclid(2.0 * std::f64::consts::PI);
    let tau_minus = (-phase * t_period).rem_euclid(2.0 * std::f64::consts::PI);

    let mut points = Vec::new();
    let g = n as usize;
    let max_band = g + count.max(1);
    for band in 0..max_band {
        let (lo, hi) = if band < g {
            (edges[2 * band], edges[2 * band + 1])
        } else {
            // synthetic sub-bands of the infinite band: pT from bandπ up
            let base = edges[2 * g];
            // find λ with pT = (band+1)π by expanding the window
            let target_top = (band + 1) as f64 * std::f64::consts::PI;
            let mut hi = base + 1.0;
            let mut guard = 0;
            while grid.band_momentum(hi, band) * t_period < target_top - 1e-9 {
                hi = base + (hi - base) * 1.7 + 0.5;
                guard += 1;
                if guard > 200 {
                    break;
                }
            }
            let lo = if band == g {
                base
            } else {
                // lower edge: pT = bandπ
                let mut lo = base;
                let mut hi2 = hi;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi2);
                    if grid.band_momentum(mid, band) * t_period
                        < band as f64 * std::f64::consts::PI
                    {
                        lo = mid;
                    } else {
                        hi2 = mid;
                    }
                }
                lo
            };
            (lo, hi)
        };

        let pt_lo = band as f64 * std::f64::consts::PI;
        for &(tau, sheet) in [(tau_plus, 1.0), (tau_minus, -1.0)].iter() {
            // the unique target pT in (bandπ, (band+1)π) congruent to tau
            let offset = (tau - pt_lo).rem_euclid(2.0 * std::f64::consts::PI);
            if offset >= std::f64::consts::PI {
                continue;
            }
            let target = pt_lo + offset;
            // bisect band_momentum·T = target on [lo, hi]
            let pm = |l: f64| grid.band_momentum(l, band) * t_period;
            if pm(lo + 1e-12) > target || pm(hi - 1e-12) < target {
                continue;
            }
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if pm(mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let lambda = 0.5 * (a + b);
            let _ = sheet;
            points.push(CensusPoint {
                lambda,
                p: target / t_period,
                band,
                measure_sign: sign_at(lambda),
            });
        }
    }

    points.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    let negative_count = points.iter().filter(|p| p.measure_sign < 0.0).count();
    Ok(CensusReport {
        n,
        phase,
        band_edges: edges,
        numerator_roots: roots,
        examined: points.len(),
        points,
        negative_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use std::f64::consts::PI;

    fn square() -> EllipticLattice {
        EllipticLattice::new(c64(PI / 2.0, 0.0), c64(0.0, PI / 2.0)).unwrap()
    }

    #[test]
    fn weight_degenerates_to_fourier_measure() {
        // g = 0: weight = 1/(2√λ)
        let curve = HyperellipticCurve::new(vec![c64(0.0, 0.0)]).unwrap();
        let gamma = curve.point_from_base(c64(9.0, 0.0)).unwrap();
        let w = spectral_weight(&curve, &[], &gamma).unwrap();
        assert!((w - c64(1.0 / 6.0, 0.0)).norm() < 1e-12);
        // g = 1 at large λ: weight ~ 1/(2√λ)
        let c1 = HyperellipticCurve::new(vec![c64(-0.7, 0.0), c64(0.0, 0.0), c64(0.7, 0.0)])
            .unwrap();
        let lam = c64(400.0, 0.0);
        let g1 = c1.point_from_base(lam).unwrap();
        let w1 = spectral_weight(&c1, &[c64(0.31, 0.0)], &g1).unwrap();
        assert!((w1 - 1.0 / (2.0 * lam.sqrt())).norm() < 2e-3 * w1.norm() * 100.0);
        // branch-point proximity rejected
        assert!(spectral_weight(
            &c1,
            &[],
            &SurfacePoint {
                lambda: c64(0.7 + 1e-10, 0.0),
                w: c64(1.0, 0.0)
            }
        )
        .is_err());
    }

    #[test]
    fn census_single_negative_for_first_order() {
        let lat = square();
        let rep = measure_sign_census(&lat, 1, 0.37, 3).unwrap();
        assert_eq!(rep.negative_count, 1);
        // the dp zero sits in the gap, at λ = η/ω for this operator
        assert_eq!(rep.numerator_roots.len(), 1);
        let root = rep.numerator_roots[0];
        assert!((root - c64(lat.eta.re / lat.omega.re, 0.0)).norm() < 1e-6, "{root}");
        assert!(root.re > rep.band_edges[1] && root.re < rep.band_edges[2]);
    }

    #[test]
    fn census_matches_negative_square_count() {
        let lat = square();
        for n in 1..=3u32 {
            let rep = measure_sign_census(&lat, n, 0.41, 2).unwrap();
            assert_eq!(
                rep.negative_count,
                ((n + 1) / 2) as usize,
                "n = {n}: {:?}",
                rep.points
            );
        }
    }

    #[test]
    fn census_stable_in_count() {
        let lat = square();
        let a = measure_sign_census(&lat, 2, 0.29, 2).unwrap();
        let b = measure_sign_census(&lat, 2, 0.29, 4).unwrap();
        assert_eq!(a.negative_count, b.negative_count);
        assert!(b.examined > a.examined);
    }

    #[test]
    fn non_generic_multiplier_rejected() {
        let lat = square();
        assert!(matches!(
            measure_sign_census(&lat, 1, 0.0, 2),
            Err(Error::NonGenericMultiplier(_))
        ));
    }
}
