//! Hyperelliptic curves `w² = R(λ) = (λ-E₀)…(λ-E_{2g})`, branch-tracked
//! square roots, and the quasimomentum differential
//! `dp = (λ^g + c_{g-1}λ^{g-1} + … + c₀) / (2w) dλ`, normalized so that
//! `dp ~ dk` at infinity (`k² = λ`) and every basis-cycle period is real.

use crate::error::{Error, Result};
use crate::numerics::poly::ComplexPolynomial;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// A point `γ = (λ, w)` on the curve with `w² = R(λ)`; the sheet is encoded
/// by the sign of `w` relative to continuation from the base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub lambda: Complex64,
    pub w: Complex64,
}

/// The curve data: pairwise distinct branch points.
#[derive(Debug, Clone)]
pub struct HyperellipticCurve {
    pub branch_points: Vec<Complex64>,
    pub genus: usize,
}

impl HyperellipticCurve {
    pub fn new(branch_points: Vec<Complex64>) -> Result<Self> {
        if branch_points.len() % 2 == 0 {
            return Err(Error::Validation(
                "need an odd number of branch points (one at infinity)".into(),
            ));
        }
        for (i, a) in branch_points.iter().enumerate() {
            for b in branch_points.iter().skip(i + 1) {
                if (a - b).norm() <= 1e-10 {
                    return Err(Error::Validation(format!(
                        "branch points {a} and {b} coincide (curve has a multiple point)"
                    )));
                }
            }
        }
        let genus = (branch_points.len() - 1) / 2;
        Ok(HyperellipticCurve {
            branch_points,
            genus,
        })
    }

    /// `R(λ) = Π (λ - E_i)`.
    pub fn r_at(&self, lambda: Complex64) -> Complex64 {
        self.branch_points
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &e| acc * (lambda - e))
    }

    /// Distance to the nearest branch point.
    pub fn branch_distance(&self, lambda: Complex64) -> f64 {
        self.branch_points
            .iter()
            .map(|&e| (lambda - e).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// A real base point to the right of every branch point, where the `+`
    /// sheet is fixed by `w > 0`.
    pub fn base_point(&self) -> SurfacePoint {
        let m = self
            .branch_points
            .iter()
            .map(|e| e.norm())
            .fold(0.0f64, f64::max);
        let lambda = Complex64::new(2.0 * m + 10.0, 0.0);
        let w = self.r_at(lambda).sqrt();
        // all factors are positive reals here, so the principal root is real
        SurfacePoint { lambda, w }
    }

    /// Continues `w` analytically from `from` to `target` along the straight
    /// segment, stepping adaptively so each hop stays well inside the
    /// local branch-free disk.
    pub fn continue_w(&self, from: SurfacePoint, target: Complex64) -> Result<SurfacePoint> {
        let mut cur = from;
        let mut guard = 0usize;
        loop {
            let remaining = target - cur.lambda;
            if remaining.norm() == 0.0 {
                return Ok(cur);
            }
            let safe = 0.4 * self.branch_distance(cur.lambda);
            if safe <= 1e-13 {
                return Err(Error::Validation(format!(
                    "continuation path touches a branch point near {}",
                    cur.lambda
                )));
            }
            let step = if remaining.norm() <= safe {
                remaining
            } else {
                remaining / remaining.norm() * safe
            };
            let next = cur.lambda + step;
            let principal = self.r_at(next).sqrt();
            let w = if (principal - cur.w).norm() <= (principal + cur.w).norm() {
                principal
            } else {
                -principal
            };
            cur = SurfacePoint { lambda: next, w };
            guard += 1;
            if guard > 200_000 {
                return Err(Error::Validation("continuation did not terminate".into()));
            }
        }
    }

    /// Continues `w` along a polyline (each leg via [`Self::continue_w`]).
    pub fn continue_along(&self, start: SurfacePoint, path: &[Complex64]) -> Result<SurfacePoint> {
        let mut cur = start;
        for &z in path {
            cur = self.continue_w(cur, z)?;
        }
        Ok(cur)
    }

    /// The point above `lambda` reached from the base point along the
    /// canonical high road (up, across above every branch point, down),
    /// which never crosses the real axis between branch points.
    pub fn point_from_base(&self, lambda: Complex64) -> Result<SurfacePoint> {
        let base = self.base_point();
        let h = self
            .branch_points
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0f64, f64::max)
            + 0.5 * self
                .branch_points
                .iter()
                .map(|e| e.norm())
                .fold(1.0f64, f64::max)
            + 1.0;
        let lift = Complex64::new(0.0, h);
        self.continue_along(base, &[base.lambda + lift, lambda + lift, lambda])
    }
}

/// Closed elliptical loop around the pair `(a, b)`, sized to exclude the
/// `others`.
fn cycle_loop(a: Complex64, b: Complex64, others: &[Complex64], nodes: usize) -> Vec<Complex64> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let d = half.norm();
    let clearance = others
        .iter()
        .map(|&e| {
            // distance from the segment's endpoints, the binding constraint
            ((e - a).norm()).min((e - b).norm())
        })
        .fold(f64::INFINITY, f64::min);
    let margin = (0.45 * clearance).min(1.5 * d).max(1e-4);
    let major = d + margin;
    let minor = margin.min(0.9 * major);
    let u = if d > 0.0 {
        half / d
    } else {
        Complex64::new(1.0, 0.0)
    };
    (0..nodes)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            center + u * Complex64::new(major * th.cos(), minor * th.sin())
        })
        .collect()
}

/// The quasimomentum chart: numerator coefficients and the cached cycle
/// periods of the monomial differentials.
#[derive(Debug, Clone)]
pub struct QuasimomentumChart {
    pub curve: HyperellipticCurve,
    /// `c₀..c_{g-1}` of the monic numerator.
    pub coeffs: Vec<Complex64>,
    /// Basis-cycle periods of `dp` (should be real).
    pub periods: Vec<Complex64>,
    /// Condition estimate of the normalization system.
    pub condition: f64,
}

impl QuasimomentumChart {
    /// Solves for `dp`: cycles encircle consecutive branch-point pairs
    /// (sorted by real part), and the `2g` real conditions
    /// `Im ∮ dp = 0` determine the `g` complex numerator coefficients.
    pub fn new(curve: &HyperellipticCurve, cycle_resolution: usize) -> Result<Self> {
        let g = curve.genus;
        if g == 0 {
            return Ok(QuasimomentumChart {
                curve: curve.clone(),
                coeffs: Vec::new(),
                periods: Vec::new(),
                condition: 1.0,
            });
        }
        let nodes = cycle_resolution.max(256);
        let mut es = curve.branch_points.clone();
        es.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));

        // monomial periods over each of the 2g cycles
        let mut monomial_periods = vec![vec![Complex64::new(0.0, 0.0); g + 1]; 2 * g];
        for (ci, pair) in es.windows(2).enumerate().take(2 * g) {
            let others: Vec<Complex64> = es
                .iter()
                .copied()
                .filter(|&e| (e - pair[0]).norm() > 1e-12 && (e - pair[1]).norm() > 1e-12)
                .collect();
            let loop_pts = cycle_loop(pair[0], pair[1], &others, nodes);
            // branch-tracked w along the closed loop
            let start = curve.point_from_base(loop_pts[0])?;
            let mut w_vals = Vec::with_capacity(nodes);
            let mut cur = start;
            for i in 0..nodes {
                w_vals.push(cur.w);
                let next = loop_pts[(i + 1) % nodes];
                cur = curve.continue_w(cur, next)?;
            }
            // closing the loop around two branch points keeps the sheet
            if (cur.w - start.w).norm() > 1e-6 * start.w.norm().max(1e-12) {
                return Err(Error::Validation(format!(
                    "cycle {ci}: branch tracking failed to close (Δw = {})",
                    (cur.w - start.w).norm()
                )));
            }
            // trapezoid: ∮ f dλ = Σ f(z_i) (z_{i+1} - z_{i-1}) / 2
            for j in 0..=g {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..nodes {
                    let zp = loop_pts[(i + 1) % nodes];
                    let zm = loop_pts[(i + nodes - 1) % nodes];
                    let lam = loop_pts[i];
                    acc += lam.powu(j as u32) / (2.0 * w_vals[i]) * (zp - zm) / 2.0;
                }
                monomial_periods[ci][j] = acc;
            }
        }

        // real 2g x 2g system for Im ∮ dp = 0
        let mut a = DMatrix::<f64>::zeros(2 * g, 2 * g);
        let mut rhs = nalgebra::DVector::<f64>::zeros(2 * g);
        for i in 0..2 * g {
            for j in 0..g {
                let m = monomial_periods[i][j];
                a[(i, j)] = m.im; // Re c_j
                a[(i, g + j)] = m.re; // Im c_j
            }
            rhs[i] = -monomial_periods[i][g].im;
        }
        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > 1e12 {
            return Err(Error::IllConditionedPeriods(condition));
        }
        let lu = a.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or(Error::IllConditionedPeriods(condition))?;
        let coeffs: Vec<Complex64> = (0..g)
            .map(|j| Complex64::new(sol[j], sol[g + j]))
            .collect();

        let periods: Vec<Complex64> = (0..2 * g)
            .map(|i| {
                let mut acc = monomial_periods[i][g];
                for j in 0..g {
                    acc += coeffs[j] * monomial_periods[i][j];
                }
                acc
            })
            .collect();

        Ok(QuasimomentumChart {
            curve: curve.clone(),
            coeffs,
            periods,
            condition,
        })
    }

    /// The monic numerator `N(λ)`.
    pub fn numerator(&self, lambda: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    /// Roots of the numerator (the zeros of `dp`, one per gap for real
    /// band structures).
    pub fn numerator_roots(&self) -> Result<Vec<Complex64>> {
        if self.coeffs.is_empty() {
            return Ok(Vec::new());
        }
        let mut cs: Vec<Complex64> = self.coeffs.clone();
        cs.push(Complex64::new(1.0, 0.0));
        let p = ComplexPolynomial::new(cs)?;
        Ok(p.roots()?.into_iter().map(|r| r.value).collect())
    }

    /// `dp/dλ` at a surface point.
    pub fn dp_dlambda(&self, gamma: &SurfacePoint) -> Complex64 {
        self.numerator(gamma.lambda) / (2.0 * gamma.w)
    }

    /// Fits `dp/dk` against 1 at three large `|k|` values and returns the
    /// deviation of the constant term (the `1 + O(k^{-2})` check).
    pub fn asymptotic_deviation(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in [40.0, 60.0, 90.0] {
            let lambda = Complex64::new(k * k, 0.0);
            let gamma = self.curve.point_from_base(lambda)?;
            let ratio = self.dp_dlambda(&gamma) * 2.0 * k;
            worst = worst.max((ratio - 1.0).norm() * (k * k) / 2.0);
        }
        // worst now estimates the k^{-2} coefficient; the constant term
        // deviation is bounded by it divided by the smallest k²
        Ok(worst / 1600.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn vacuum_curve_dp_is_dk() {
        // w² = λ: dp = dλ/(2√λ) = dk with no free coefficients
        let curve = HyperellipticCurve::new(vec![c64(0.0, 0.0)]).unwrap();
        let chart = QuasimomentumChart::new(&curve, 256).unwrap();
        assert!(chart.coeffs.is_empty());
        let gamma = curve.point_from_base(c64(4.0, 0.0)).unwrap();
        // dp/dλ = 1/(2·2) = 0.25
        assert!((chart.dp_dlambda(&gamma) - c64(0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sheet_flips_around_one_branch_point_and_returns_around_two() {
        let curve =
            HyperellipticCurve::new(vec![c64(-1.0, 0.0), c64(0.3, 0.0), c64(1.2, 0.0)]).unwrap();
        let start = curve.point_from_base(c64(0.3 + 0.4, 0.4)).unwrap();
        // square loop around E = 0.3 only
        let loop_one = [
            c64(0.7, 0.4),
            c64(-0.1, 0.4),
            c64(-0.1, -0.4),
            c64(0.7, -0.4),
            c64(0.7, 0.4),
        ];
        let back = curve.continue_along(start, &loop_one).unwrap();
        assert!(
            (back.w + start.w).norm() < 1e-9 * start.w.norm(),
            "single branch point should flip the sheet"
        );
        // rectangle around E = 0.3 and E = 1.2
        let start2 = curve.point_from_base(c64(0.75, 0.5)).unwrap();
        let loop_two = [
            c64(-0.1, 0.5),
            c64(-0.1, -0.5),
            c64(1.6, -0.5),
            c64(1.6, 0.5),
            c64(0.75, 0.5),
        ];
        let back2 = curve.continue_along(start2, &loop_two).unwrap();
        assert!(
            (back2.w - start2.w).norm() < 1e-9 * start2.w.norm(),
            "two branch points should preserve the sheet"
        );
    }

    #[test]
    fn rejects_multiple_points() {
        assert!(HyperellipticCurve::new(vec![
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0)
        ])
        .is_err());
    }

    #[test]
    fn genus_one_periods_are_real() {
        // symmetric real curve
        let curve =
            HyperellipticCurve::new(vec![c64(-0.7, 0.0), c64(0.0, 0.0), c64(0.7, 0.0)]).unwrap();
        let chart = QuasimomentumChart::new(&curve, 1024).unwrap();
        for p in &chart.periods {
            assert!(p.im.abs() < 1e-9, "period {p}");
        }
        assert!(chart.asymptotic_deviation().unwrap() < 1e-4);
    }

    #[test]
    fn conjugate_pair_curve_periods_are_real() {
        // rhombic-type spectrum: one real point, one conjugate pair
        let curve = HyperellipticCurve::new(vec![
            c64(-1.4745859923711914, 0.0),
            c64(0.7372929961855962, -1.277028929458139),
            c64(0.7372929961855962, 1.277028929458139),
        ])
        .unwrap();
        let chart = QuasimomentumChart::new(&curve, 2048).unwrap();
        for p in &chart.periods {
            assert!(p.im.abs() < 1e-8, "period {p}");
        }
    }
}
