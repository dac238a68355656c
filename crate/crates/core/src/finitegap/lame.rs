//! Genus-1 Bloch (Baker-Akhiezer) machinery in Weierstrass form for the
//! potential `2℘(x)` and its shifts:
//!
//! `Ψ(x, α) = σ(α - x) / (σ(α) σ(x)) · e^{ζ(α) x}` is an eigenfunction at
//! `λ = -℘(α)` with Bloch multiplier `κ = e^{2(ωζ(α) - ηα)}` and
//! quasimomentum `p = -i(ζ(α) - (η/ω)α)`, so `κ = e^{ipT}`, `T = 2ω`.
//!
//! The canonical contour `|κ| = 1` is the level set `Re(ωζ(α) - ηα) = 0`,
//! traced by marching squares on the torus.

use crate::darboux::EigenFn;
use crate::elliptic::EllipticLattice;
use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use num_complex::Complex64;
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Point data of the Bloch function at `(x, α)`.
#[derive(Debug, Clone, Copy)]
pub struct BlochData {
    pub value: Complex64,
    pub lambda: Complex64,
    pub kappa: Complex64,
    pub p: Complex64,
}

/// Evaluates the Bloch function and its spectral data.
pub fn lame_bloch(
    x: Complex64,
    alpha: Complex64,
    lattice: &EllipticLattice,
) -> Result<BlochData> {
    if lattice.pole_distance(alpha) < 1e-9 {
        return Err(Error::Validation(format!(
            "alpha = {alpha} is a lattice point"
        )));
    }
    let za = lattice.zeta(alpha)?;
    let value = lattice.sigma(alpha - x)? / (lattice.sigma(alpha)? * lattice.sigma(x)?)
        * (za * x).exp();
    let lambda = -lattice.wp(alpha)?;
    let omega = lattice.omega;
    let eta = lattice.eta;
    let kappa = (2.0 * (omega * za - eta * alpha)).exp();
    let p = -I * (za - (eta / omega) * alpha);
    Ok(BlochData {
        value,
        lambda,
        kappa,
        p,
    })
}

/// The Bloch function at fixed `α` as a jet-capable function of `x`.
pub fn lame_bloch_fn(alpha: Complex64, lattice: Arc<EllipticLattice>) -> Result<EigenFn> {
    if lattice.pole_distance(alpha) < 1e-9 {
        return Err(Error::Validation(format!(
            "alpha = {alpha} is a lattice point"
        )));
    }
    let za = lattice.zeta(alpha)?;
    let sa = lattice.sigma(alpha)?;
    let label = format!("lame_bloch(alpha={alpha})");
    Ok(EigenFn::new(
        Arc::new(move |x, order| {
            // σ(α - x) jet: compose the σ jet at (α - x₀) with x ↦ -x
            let s_shift = lattice.sigma_jet(alpha - x, order)?;
            let mut c = s_shift.c;
            for (k, v) in c.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
            let num = Jet { c };
            let den = lattice.sigma_jet(x, order)?;
            let exp = Jet::variable(x, order).scale(za).exp();
            Ok(num.div(&den).mul(&exp).scale(1.0 / sa))
        }),
        label,
    ))
}

/// Bloch function of the shifted smooth operator `2℘(x + δ)`, normalized
/// to 1 at x = 0:
/// `Ψ_δ(x, α) = σ(α - x - δ) σ(δ) / (σ(α - δ) σ(x + δ)) · e^{ζ(α) x}`.
/// Its only pole in α is at `α = δ` (the divisor point, `λ₁ = -℘(δ)`).
pub fn lame_bloch_shifted_fn(
    alpha: Complex64,
    delta: Complex64,
    lattice: Arc<EllipticLattice>,
) -> Result<EigenFn> {
    if lattice.pole_distance(alpha) < 1e-9 || lattice.pole_distance(alpha - delta) < 1e-9 {
        return Err(Error::Validation(format!(
            "alpha = {alpha} collides with a pole of the shifted Bloch function"
        )));
    }
    let za = lattice.zeta(alpha)?;
    let norm = lattice.sigma(delta)? / lattice.sigma(alpha - delta)?;
    let label = format!("lame_bloch_shifted(alpha={alpha}, delta={delta})");
    Ok(EigenFn::new(
        Arc::new(move |x, order| {
            let s_shift = lattice.sigma_jet(alpha - x - delta, order)?;
            let mut c = s_shift.c;
            for (k, v) in c.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
            let num = Jet { c };
            let den = lattice.sigma_jet(x + delta, order)?;
            let exp = Jet::variable(x, order).scale(za).exp();
            Ok(num.div(&den).mul(&exp).scale(norm))
        }),
        label,
    ))
}

/// Residual of the multiplicative identity
/// `Ψ(x,α)Ψ(y,α) = R Ψ(z,α)|_{z=x+y}` where `R` applies `∂_z + a₁` with
/// `a₁ = -(ζ(x) + ζ(y) - ζ(x+y))` in the orientation fixed by the σ-quotient
/// normalization. The overall orientation (an extra factor -1 on the
/// first-order operator) was pinned empirically against multiprecision
/// evaluation and is frozen by the regression tests: only with it does the
/// α-dependence cancel identically.
pub fn multiplicative_check(
    x: f64,
    y: f64,
    alpha: Complex64,
    lattice: &EllipticLattice,
) -> Result<f64> {
    let xs = Complex64::new(x, 0.0);
    let ys = Complex64::new(y, 0.0);
    let zs = xs + ys;
    for &pt in [xs, ys, zs].iter() {
        if lattice.pole_distance(pt) < 1e-6 {
            return Err(Error::PoleProximity(pt));
        }
    }
    let f = lame_bloch_fn(alpha, Arc::new(lattice.clone()))?;
    let lhs = f.eval(xs)? * f.eval(ys)?;
    let a1 = -(lattice.zeta(xs)? + lattice.zeta(ys)? - lattice.zeta(zs)?);
    let jz = f.jet(zs, 1)?;
    let rhs = -(jz.derivative(1) + a1 * jz.value());
    let scale = lhs.norm().max(rhs.norm()).max(1.0);
    Ok((lhs - rhs).norm() / scale)
}

/// One traced component of the canonical contour.
#[derive(Debug, Clone)]
pub struct ContourComponent {
    /// α along the component (continuous, possibly leaving the fundamental
    /// domain when the component wraps the torus).
    pub alpha: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub p: Vec<Complex64>,
    /// Whether the polyline closes in the plane (a contractible loop).
    pub closed: bool,
    /// Whether the component passes through a lattice point (λ = ∞).
    pub through_infinity: bool,
    pub max_im_lambda: f64,
}

/// `Re(ωζ(α) - ηα)`: zero exactly on `|κ| = 1`.
fn kappa_log_modulus(lattice: &EllipticLattice, alpha: Complex64) -> Result<f64> {
    Ok((lattice.omega * lattice.zeta(alpha)? - lattice.eta * alpha).re)
}

/// Traces the canonical contour on the α-torus by marching squares over a
/// `resolution × resolution` half-offset grid.
pub fn canonical_contour(
    lattice: &EllipticLattice,
    resolution: usize,
) -> Result<Vec<ContourComponent>> {
    let res = resolution.max(64);
    let w1 = 2.0 * lattice.omega;
    let w2 = 2.0 * lattice.omega_prime;
    let at = |s: f64, t: f64| w1 * s + w2 * t;

    // samples at half-offset grid points (never on lattice points)
    let mut f = vec![vec![0.0f64; res]; res];
    for (i, row) in f.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let s = (i as f64 + 0.5) / res as f64;
            let t = (j as f64 + 0.5) / res as f64;
            *v = kappa_log_modulus(lattice, at(s, t))?;
        }
    }

    // crossing points per global edge: ('h', i, j) between samples (i,j) and
    // (i+1,j); ('v', i, j) between (i,j) and (i,j+1); coordinates canonical
    // in units of samples
    #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
    enum EdgeKind {
        H,
        V,
    }
    type EdgeId = (EdgeKind, usize, usize);
    use std::collections::HashMap;
    let mut crossings: HashMap<EdgeId, (f64, f64)> = HashMap::new();
    let sample = |i: usize, j: usize| f[i % res][j % res];
    for i in 0..res {
        for j in 0..res {
            let a = sample(i, j);
            let b = sample(i + 1, j);
            if a * b < 0.0 {
                let frac = a / (a - b);
                crossings.insert(
                    (EdgeKind::H, i, j),
                    (i as f64 + 0.5 + frac, j as f64 + 0.5),
                );
            }
            let c = sample(i, j + 1);
            if a * c < 0.0 {
                let frac = a / (a - c);
                crossings.insert(
                    (EdgeKind::V, i, j),
                    (i as f64 + 0.5, j as f64 + 0.5 + frac),
                );
            }
        }
    }

    // cell segments: connect crossing edges within each cell
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let bottom = (EdgeKind::H, i, j);
            let top = (EdgeKind::H, i, (j + 1) % res);
            let left = (EdgeKind::V, i, j);
            let right = (EdgeKind::V, (i + 1) % res, j);
            let mut hits: Vec<EdgeId> = [bottom, right, top, left]
                .into_iter()
                .filter(|e| crossings.contains_key(e))
                .collect();
            match hits.len() {
                2 => segments.push((hits[0], hits[1])),
                4 => {
                    // saddle: pair by the sign of the center mean
                    let center = 0.25
                        * (sample(i, j) + sample(i + 1, j) + sample(i, j + 1) + sample(i + 1, j + 1));
                    // corner (i,j) sign decides the pairing orientation
                    if sample(i, j) * center >= 0.0 {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((top, right));
                    }
                    hits.clear();
                }
                _ => {}
            }
        }
    }

    // adjacency and chain walking with torus unwrapping
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(idx);
        by_edge.entry(*b).or_default().push(idx);
    }
    let canon = |e: &EdgeId| crossings[e];
    let res_f = res as f64;
    let mut used = vec![false; segments.len()];
    let mut components = Vec::new();

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain: Vec<(f64, f64)> = vec![canon(&a0), {
            // unwrap the second endpoint against the first
            let (mut x, mut y) = canon(&b0);
            let (x0, y0) = canon(&a0);
            if x - x0 > res_f / 2.0 {
                x -= res_f;
            } else if x0 - x > res_f / 2.0 {
                x += res_f;
            }
            if y - y0 > res_f / 2.0 {
                y -= res_f;
            } else if y0 - y > res_f / 2.0 {
                y += res_f;
            }
            (x, y)
        }];
        let mut cur_edge = b0;
        let closed;
        loop {
            let candidates = by_edge.get(&cur_edge).cloned().unwrap_or_default();
            let next = candidates.iter().copied().find(|&s| !used[s]);
            let Some(seg) = next else {
                // either closed (back at the start edge) or a dead end
                closed = cur_edge == a0;
                break;
            };
            used[seg] = true;
            let (ea, eb) = segments[seg];
            let other = if ea == cur_edge { eb } else { ea };
            // unwrap `other` against the last chain point
            let (mut x, mut y) = canon(&other);
            let last = *chain.last().unwrap();
            while x - last.0 > res_f / 2.0 {
                x -= res_f;
            }
            while last.0 - x > res_f / 2.0 {
                x += res_f;
            }
            while y - last.1 > res_f / 2.0 {
                y -= res_f;
            }
            while last.1 - y > res_f / 2.0 {
                y += res_f;
            }
            chain.push((x, y));
            cur_edge = other;
            if cur_edge == a0 {
                closed = true;
                break;
            }
        }
        if chain.len() < 4 {
            continue;
        }

        // map to α and attach spectral data
        let mut alpha = Vec::with_capacity(chain.len());
        let mut lambda = Vec::with_capacity(chain.len());
        let mut p = Vec::with_capacity(chain.len());
        let mut through_infinity = false;
        let mut max_im_lambda = 0.0f64;
        for &(sx, sy) in &chain {
            let al = at(sx / res_f, sy / res_f);
            if lattice.pole_distance(al) < 2.5 * (w1.norm() + w2.norm()) / res_f {
                through_infinity = true;
            }
            alpha.push(al);
            match (lattice.wp(al), lattice.zeta(al)) {
                (Ok(wp), Ok(ze)) => {
                    let lam = -wp;
                    max_im_lambda = max_im_lambda.max(lam.im.abs());
                    lambda.push(lam);
                    p.push(-I * (ze - (lattice.eta / lattice.omega) * al));
                }
                _ => {
                    through_infinity = true;
                    lambda.push(Complex64::new(f64::INFINITY, 0.0));
                    p.push(Complex64::new(f64::NAN, 0.0));
                }
            }
        }
        // geometric closure in the plane
        let first = chain[0];
        let last = chain[chain.len() - 1];
        let planar_gap =
            ((first.0 - last.0).powi(2) + (first.1 - last.1).powi(2)).sqrt() / res_f;
        components.push(ContourComponent {
            alpha,
            lambda,
            p,
            closed: closed && planar_gap < 3.0 / res_f,
            through_infinity,
            max_im_lambda,
        });
    }

    if components.is_empty() {
        return Err(Error::ContourResolution(format!(
            "no contour components resolved at resolution {res}"
        )));
    }
    components.sort_by(|a, b| b.alpha.len().cmp(&a.alpha.len()));
    Ok(components)
}

/// Groups components into connectivity classes of the contour as a point
/// set on the torus: chains touching a lattice point all meet at λ = ∞, and
/// chains passing within a few grid cells of one another (the
/// self-intersection points of a singular contour) are joined.
pub fn connectivity_classes(
    components: &[ContourComponent],
    lattice: &EllipticLattice,
    resolution: usize,
) -> Vec<Vec<usize>> {
    let cell = (2.0 * lattice.omega.norm() + 2.0 * lattice.omega_prime.norm())
        / resolution.max(8) as f64;
    let tol = 3.0 * cell;
    let n = components.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let touch = |a: &ContourComponent, b: &ContourComponent| -> bool {
        for (i, &pa) in a.alpha.iter().enumerate() {
            if i % 3 != 0 {
                continue;
            }
            for (j, &pb) in b.alpha.iter().enumerate() {
                if j % 3 != 0 {
                    continue;
                }
                let (d, _, _) = lattice.reduce(pa - pb);
                if d.norm() < tol {
                    return true;
                }
            }
        }
        false
    };
    for i in 0..n {
        for j in i + 1..n {
            let joined = (components[i].through_infinity && components[j].through_infinity)
                || touch(&components[i], &components[j]);
            if joined {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    classes.into_values().collect()
}

/// CSV export of traced components:
/// `component, re_alpha, im_alpha, re_lambda, im_lambda, re_p, im_p`.
pub fn contour_csv(components: &[ContourComponent]) -> String {
    let mut s = String::from("component,re_alpha,im_alpha,re_lambda,im_lambda,re_p,im_p\n");
    for (ci, comp) in components.iter().enumerate() {
        for ((a, l), p) in comp.alpha.iter().zip(&comp.lambda).zip(&comp.p) {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                ci, a.re, a.im, l.re, l.im, p.re, p.im
            ));
        }
    }
    s
}

/// One solved Bloch point `e^{ipT} = κ₀`.
#[derive(Debug, Clone, Copy)]
pub struct BlochPoint {
    pub alpha: Complex64,
    pub lambda: Complex64,
    pub p: f64,
    /// Index `j` with `p = φ₀ + πj/ω`.
    pub index: i64,
}

/// Solves `e^{ip(α)T} = κ₀ = e^{iTφ₀}` on the canonical contour for all
/// indices `|j| <= count`, i.e. `p = φ₀ + 2πj/T`. Rejects multipliers at
/// band edges (`φ₀ T ≡ 0 mod π`), where `dp` data degenerates.
pub fn bloch_points(
    lattice: &EllipticLattice,
    phase: f64,
    count: usize,
) -> Result<Vec<BlochPoint>> {
    let t_period = 2.0 * lattice.omega.re;
    let edge_gap = (phase * t_period).rem_euclid(std::f64::consts::PI);
    if edge_gap.min(std::f64::consts::PI - edge_gap) < 1e-6 {
        return Err(Error::NonGenericMultiplier(format!(
            "multiplier phase {phase} sits at a band edge"
        )));
    }

    let omega = lattice.omega;
    let eta = lattice.eta;
    let p_of = |al: Complex64| -> Result<Complex64> {
        Ok(-I * (lattice.zeta(al)? - (eta / omega) * al))
    };
    let dp_dalpha = |al: Complex64| -> Result<Complex64> {
        Ok(I * (lattice.wp(al)? + eta / omega))
    };

    let mut out: Vec<BlochPoint> = Vec::new();
    let targets: Vec<(i64, f64)> = (-(count as i64)..=count as i64)
        .map(|j| {
            (
                j,
                phase + 2.0 * std::f64::consts::PI * j as f64 / t_period,
            )
        })
        .collect();

    if lattice.mode == crate::elliptic::LatticeMode::Rectangular {
        // the contour is explicit: the infinite component α = iv carries a
        // strictly monotone real p spanning all of ℝ, and the finite-band
        // circle α = ω + iv spans one 2π/T cell of p
        let b = lattice.omega_prime.im;
        let p_inf = |v: f64| -> Result<f64> { Ok(p_of(Complex64::new(0.0, v))?.re) };
        for &(j, target) in &targets {
            let (mut lo, mut hi) = (1e-9, 2.0 * b - 1e-9);
            if p_inf(lo)? > target || p_inf(hi)? < target {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p_inf(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let alpha = Complex64::new(0.0, 0.5 * (lo + hi));
            out.push(BlochPoint {
                alpha,
                lambda: -lattice.wp(alpha)?,
                p: target,
                index: j,
            });
        }
        // finite component: p(ω + iv) decreases from 0 through -2π/T
        let p_fin = |v: f64| -> Result<f64> { Ok(p_of(lattice.omega + Complex64::new(0.0, v))?.re) };
        for &(j, target) in &targets {
            if !(-2.0 * std::f64::consts::PI / t_period..0.0).contains(&target) {
                continue;
            }
            let (mut lo, mut hi) = (1e-7, 2.0 * b - 1e-7);
            if !(p_fin(hi)?..=p_fin(lo)?).contains(&target) {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p_fin(mid)? > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let alpha = lattice.omega + Complex64::new(0.0, 0.5 * (lo + hi));
            out.push(BlochPoint {
                alpha,
                lambda: -lattice.wp(alpha)?,
                p: target,
                index: j,
            });
        }
    } else {
        // general lattice: seeds from the traced contour refined by Newton,
        // reduced back to the fundamental domain and re-verified
        let comps = canonical_contour(lattice, 320)?;
        for &(j, target) in &targets {
            let mut seeds: Vec<Complex64> = Vec::new();
            for comp in &comps {
                for w in comp.p.windows(2).zip(comp.alpha.windows(2)) {
                    let (pw, aw) = w;
                    if !pw[0].re.is_finite() || !pw[1].re.is_finite() {
                        continue;
                    }
                    if pw[0].im.abs() > 0.2 || pw[1].im.abs() > 0.2 {
                        continue;
                    }
                    if (pw[0].re - target) * (pw[1].re - target) <= 0.0
                        && (pw[0].re - pw[1].re).abs() < 1.0
                    {
                        let f = (target - pw[0].re) / (pw[1].re - pw[0].re);
                        seeds.push(aw[0] + (aw[1] - aw[0]) * f);
                    }
                }
            }
            if seeds.is_empty() {
                seeds.push(-I / Complex64::new(target, 0.0));
            }
            for seed in seeds {
                let mut alpha = seed;
                let mut ok = false;
                for _ in 0..60 {
                    let g = p_of(alpha)? - target;
                    if g.norm() < 1e-12 * (1.0 + target.abs()) {
                        ok = true;
                        break;
                    }
                    let d = dp_dalpha(alpha)?;
                    if d.norm() < 1e-14 {
                        break;
                    }
                    alpha -= g / d;
                    if lattice.pole_distance(alpha) < 1e-9 {
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                // reject points that slipped to a lattice translate (their
                // p no longer matches after reduction)
                let (reduced, _, _) = lattice.reduce(alpha);
                if (p_of(reduced)? - target).norm() > 1e-9 * (1.0 + target.abs()) {
                    continue;
                }
                if kappa_log_modulus(lattice, reduced)?.abs() > 1e-8 {
                    continue;
                }
                out.push(BlochPoint {
                    alpha: reduced,
                    lambda: -lattice.wp(reduced)?,
                    p: target,
                    index: j,
                });
            }
        }
    }
    out.sort_by(|a, b| a.p.partial_cmp(&b.p).unwrap());
    out.dedup_by(|a, b| {
        let (d, _, _) = lattice.reduce(a.alpha - b.alpha);
        d.norm() < 1e-8
    });
    Ok(out)
}
