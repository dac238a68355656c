//! Adaptive Gauss-Kronrod quadrature along paths of line segments and
//! circular arcs in the complex plane.
//!
//! Panels use the 15-point Kronrod rule with the embedded 7-point Gauss rule
//! for error estimation; panels are bisected until the accumulated estimate
//! meets the requested relative tolerance. Subdivision is deterministic
//! (left-to-right), so results are bit-reproducible.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Nodes of the 15-point Kronrod rule on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule (odd Kronrod nodes).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One piece of an integration path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSegment {
    /// Straight line from `start` to `end`.
    Line { start: Complex64, end: Complex64 },
    /// Circular arc `center + radius * e^{i theta}`, `theta` running from
    /// `theta_start` to `theta_end` (decreasing angles give clockwise arcs).
    Arc {
        center: Complex64,
        radius: f64,
        theta_start: f64,
        theta_end: f64,
    },
}

impl PathSegment {
    pub fn line(start: Complex64, end: Complex64) -> Self {
        PathSegment::Line { start, end }
    }

    /// Semicircular detour over `center` (on the real axis) through the upper
    /// half-plane, traversed left to right.
    pub fn upper_detour(center: f64, radius: f64) -> Self {
        PathSegment::Arc {
            center: Complex64::new(center, 0.0),
            radius,
            theta_start: std::f64::consts::PI,
            theta_end: 0.0,
        }
    }

    /// Lower half-plane twin of [`PathSegment::upper_detour`].
    pub fn lower_detour(center: f64, radius: f64) -> Self {
        PathSegment::Arc {
            center: Complex64::new(center, 0.0),
            radius,
            theta_start: std::f64::consts::PI,
            theta_end: 2.0 * std::f64::consts::PI,
        }
    }

    /// Point and path derivative at parameter `t` in [0, 1].
    #[inline]
    fn at(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            PathSegment::Line { start, end } => (start + (end - start) * t, end - start),
            PathSegment::Arc {
                center,
                radius,
                theta_start,
                theta_end,
            } => {
                let dth = theta_end - theta_start;
                let th = theta_start + dth * t;
                let e = Complex64::new(0.0, th).exp() * radius;
                (center + e, e * Complex64::new(0.0, dth))
            }
        }
    }

    pub fn start(&self) -> Complex64 {
        self.at(0.0).0
    }

    pub fn end(&self) -> Complex64 {
        self.at(1.0).0
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    fn zero() -> Self {
        QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            evaluations: 0,
        }
    }

    fn merge(self, other: Self) -> Self {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// QUADPACK-style error rescaling from |K15 - G7|.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// G7-K15 panel over `[a, b]` in parameter space of `seg`.
fn gk15_panel<F>(f: &F, seg: &PathSegment, a: f64, b: f64) -> (Complex64, f64, f64)
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |t: f64| -> Complex64 {
        let (z, dz) = seg.at(t);
        f(z) * dz
    };

    let f_center = eval(center);
    let mut kronrod = f_center * WGK[7];
    // the G7 rule has an odd node count: the center carries WG[3]
    let mut gauss = f_center * WG[3];
    let mut res_abs = kronrod.norm();

    let mut fv = [Complex64::new(0.0, 0.0); 15];
    fv[7] = f_center;

    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dt = half * x;
        let f1 = eval(center - dt);
        let f2 = eval(center + dt);
        fv[i] = f1;
        fv[14 - i] = f2;
        let sum = f1 + f2;
        kronrod += sum * WGK[i];
        res_abs += WGK[i] * (f1.norm() + f2.norm());
        if i % 2 == 1 {
            gauss += sum * WG[i / 2];
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).norm();
    for (i, &w) in WGK.iter().enumerate().take(7) {
        res_asc += w * ((fv[i] - mean).norm() + (fv[14 - i] - mean).norm());
    }

    let value = kronrod * half;
    let err = rescale_error(((kronrod - gauss) * half).norm(), res_abs * half.abs(), res_asc * half.abs());
    (value, err, res_abs * half.abs())
}

const MAX_DEPTH: usize = 44;
const PANEL_BUDGET: usize = 200_000;

fn integrate_segment<F>(
    f: &F,
    seg: &PathSegment,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    worst: &mut (f64, Complex64),
    budget: &mut usize,
) -> QuadratureResult
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let (value, err, res_abs) = gk15_panel(f, seg, a, b);
    // stop on tolerance, on the roundoff floor of this panel, or on budget
    let floor = 60.0 * f64::EPSILON * res_abs;
    if err <= tol.max(floor) || depth >= MAX_DEPTH || *budget == 0 {
        if err > worst.0 {
            *worst = (err, seg.at(0.5 * (a + b)).0);
        }
        return QuadratureResult {
            value,
            error_estimate: err,
            evaluations: 15,
        };
    }
    *budget -= 1;
    let mid = 0.5 * (a + b);
    let left = integrate_segment(f, seg, a, mid, 0.5 * tol, depth + 1, worst, budget);
    let right = integrate_segment(f, seg, mid, b, 0.5 * tol, depth + 1, worst, budget);
    let mut out = left.merge(right);
    out.evaluations += 15;
    out
}

/// Integrates `f` along the ordered `path`, adaptively subdividing until the
/// estimated relative error is at or below `rel_tol`.
pub fn integrate_path<F>(f: F, path: &[PathSegment], rel_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(1e-14..1e-2).contains(&rel_tol) {
        return Err(Error::Validation(format!(
            "rel_tol {rel_tol:e} outside (1e-14, 1e-2)"
        )));
    }
    if path.is_empty() {
        return Ok(QuadratureResult::zero());
    }

    // First pass for the global scale.
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut coarse_abs = 0.0;
    for seg in path {
        let (v, _, ra) = gk15_panel(&f, seg, 0.0, 1.0);
        coarse += v;
        coarse_abs += ra;
    }
    let scale = coarse.norm().max(1e-3 * coarse_abs).max(1e-300);
    let tol_abs = rel_tol * scale;

    let mut total = QuadratureResult::zero();
    let mut worst = (0.0, path[0].start());
    let per_seg = tol_abs / path.len() as f64;
    let mut budget = PANEL_BUDGET;
    for seg in path {
        total = total.merge(integrate_segment(
            &f,
            seg,
            0.0,
            1.0,
            per_seg,
            0,
            &mut worst,
            &mut budget,
        ));
    }

    // the attainable floor: summed panel roundoff cannot go below this
    let floor = 240.0 * f64::EPSILON * coarse_abs;
    if total.error_estimate > 10.0 * tol_abs.max(rel_tol * total.value.norm()).max(floor) {
        return Err(Error::QuadratureNonConvergence {
            location: worst.1,
            estimate: worst.0,
        });
    }
    Ok(total)
}

/// Builds a real-interval path from `a` to `b` with semicircular detours
/// around each of the `points` (strictly increasing, inside `(a, b)`).
/// `radii[i]` is the detour radius at `points[i]`; `upper` selects the
/// half-plane.
pub fn detour_path(a: f64, b: f64, points: &[f64], radii: &[f64], upper: bool) -> Vec<PathSegment> {
    let mut segs = Vec::with_capacity(2 * points.len() + 1);
    let mut cursor = a;
    for (&x, &r) in points.iter().zip(radii) {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use std::f64::consts::PI;

    #[test]
    fn line_exponential() {
        // ∫_0^1 e^z dz = e - 1
        let path = [PathSegment::line(c64(0.0, 0.0), c64(1.0, 0.0))];
        let r = integrate_path(|z| z.exp(), &path, 1e-12).unwrap();
        assert!((r.value - c64(std::f64::consts::E - 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn detoured_simple_pole() {
        // ∫ 1/z over [-1, 1] with an upper detour at 0 = -iπ
        let path = detour_path(-1.0, 1.0, &[0.0], &[0.1], true);
        let r = integrate_path(|z| 1.0 / z, &path, 1e-12).unwrap();
        assert!((r.value - c64(0.0, -PI)).norm() < 1e-11);
    }

    #[test]
    fn detoured_double_pole_large_window() {
        // ∫ z^{-2} over [-R, R] with a detour at 0 = -2/R (hand oracle via -1/z)
        let big = 1e3;
        let path = detour_path(-big, big, &[0.0], &[0.1], true);
        let r = integrate_path(|z| 1.0 / (z * z), &path, 1e-11).unwrap();
        assert!((r.value - c64(-2.0 / big, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn path_additivity() {
        // concatenated segments equal the sum of parts within the estimates
        let f = |z: Complex64| (z * z).exp() * z.sin();
        let whole = [PathSegment::line(c64(-1.0, 0.2), c64(1.0, 0.4))];
        let mid = c64(0.3, 0.32);
        let parts = [
            PathSegment::line(c64(-1.0, 0.2), mid),
            PathSegment::line(mid, c64(1.0, 0.4)),
        ];
        let rw = integrate_path(f, &whole, 1e-11).unwrap();
        let rp = integrate_path(f, &parts, 1e-11).unwrap();
        let tol = 2.0 * (rw.error_estimate + rp.error_estimate) + 1e-13;
        assert!((rw.value - rp.value).norm() <= tol);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let path = [PathSegment::line(c64(0.0, 0.0), c64(1.0, 0.0))];
        assert!(integrate_path(|z| z, &path, 0.5).is_err());
    }

    #[test]
    fn upper_and_lower_detours_agree_without_residue() {
        // z^{-2} has no residue: the half-plane choice is immaterial
        let up = detour_path(-2.0, 2.0, &[0.0], &[0.1], true);
        let lo = detour_path(-2.0, 2.0, &[0.0], &[0.1], false);
        let f = |z: Complex64| 1.0 / (z * z) + z.cos();
        let ru = integrate_path(f, &up, 1e-12).unwrap();
        let rl = integrate_path(f, &lo, 1e-12).unwrap();
        assert!((ru.value - rl.value).norm() < 1e-9);
    }
}
