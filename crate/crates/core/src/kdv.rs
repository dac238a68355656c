//! Rational KdV solutions with initial datum `u(x,0) = n(n+1)/x²`.
//!
//! The tau polynomials are built over exact rationals by the bilinear
//! recursion `θ'_{k+1} θ_{k-1} - θ_{k+1} θ'_{k-1} = (2k+1) θ_k²` with
//! `θ₀ = 1`, `θ₁ = x`. Weighted homogeneity (x-weight 1, t-weight 3) leaves
//! a single free constant at weight 3; its proportionality to `t` is
//! calibrated once against the flow `u_t = 6uu_x - u_xxx` and every
//! constructed polynomial is re-certified against that equation before use.
//! The poles of `u = -2 (log θ_n)″` are the roots of `θ_n`.

use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use crate::numerics::poly::{ComplexPolynomial, Root};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::sync::OnceLock;

/// Sparse bivariate polynomial in (x, τ) with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Poly2 {
    /// (x degree, τ degree) → coefficient
    terms: BTreeMap<(u32, u32), BigRational>,
}

impl Poly2 {
    fn zero() -> Self {
        Poly2 {
            terms: BTreeMap::new(),
        }
    }

    fn monomial(xd: u32, td: u32, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((xd, td), c);
        }
        Poly2 { terms }
    }

    fn one() -> Self {
        Self::monomial(0, 0, BigRational::one())
    }

    fn x() -> Self {
        Self::monomial(1, 0, BigRational::one())
    }

    fn add_term(&mut self, key: (u32, u32), c: &BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn add(&self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(*k, c);
        }
        out
    }

    fn scale(&self, s: &BigRational) -> Poly2 {
        let mut out = Poly2::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, &(c * s));
        }
        out
    }

    fn sub(&self, rhs: &Poly2) -> Poly2 {
        self.add(&rhs.scale(&-BigRational::one()))
    }

    fn mul(&self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for ((xa, ta), ca) in &self.terms {
            for ((xb, tb), cb) in &rhs.terms {
                out.add_term((xa + xb, ta + tb), &(ca * cb));
            }
        }
        out
    }

    fn diff_x(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(xd, td), c) in &self.terms {
            if xd > 0 {
                out.add_term((xd - 1, td), &(c * BigRational::from(BigInt::from(xd))));
            }
        }
        out
    }

    fn diff_tau(&self) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(xd, td), c) in &self.terms {
            if td > 0 {
                out.add_term((xd, td - 1), &(c * BigRational::from(BigInt::from(td))));
            }
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Exact Gaussian elimination for the small linear systems of the tau
/// recursion. Returns a particular solution with free unknowns pinned to
/// zero, or `None` if inconsistent.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        b.swap(row, p);
        let inv = a[row][col].recip();
        for c in col..cols {
            a[row][c] = &a[row][c] * &inv;
        }
        b[row] = &b[row] * &inv;
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..cols {
                    let v = &a[row][c] * &f;
                    a[r][c] = &a[r][c] - v;
                }
                let v = &b[row] * &f;
                b[r] = &b[r] - v;
            }
        }
        pivot_of_col[col] = row;
        row += 1;
        if row == rows {
            break;
        }
    }
    // consistency: remaining rows must have zero rhs
    for r in row..rows {
        if !b[r].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigRational::zero(); cols];
    for col in 0..cols {
        if pivot_of_col[col] != usize::MAX {
            x[col] = b[pivot_of_col[col]].clone();
        }
    }
    Some(x)
}

/// Exact bilinear form of the flow: with `τ = βt` and
/// `u = -2(log θ)″` solving `u_t = 6uu_x - u_xxx`, every tau polynomial
/// satisfies `β(θ_{xτ}θ - θ_x θ_τ) + θ_{xxxx}θ - 4θ_{xxx}θ_x + 3θ_{xx}² = 0`
/// identically (checked by hand on θ₂ = x³ + τ).
fn bilinear_flow(theta: &Poly2, beta: &BigRational) -> Poly2 {
    let tx = theta.diff_x();
    let txx = tx.diff_x();
    let txxx = txx.diff_x();
    let txxxx = txxx.diff_x();
    let tt = theta.diff_tau();
    let txt = tx.diff_tau();
    let time_part = txt.mul(theta).sub(&tx.mul(&tt)).scale(beta);
    let space_part = txxxx
        .mul(theta)
        .sub(&txxx.mul(&tx).scale(&BigRational::from(BigInt::from(4))))
        .add(&txx.mul(&txx).scale(&BigRational::from(BigInt::from(3))));
    time_part.add(&space_part)
}

/// The τ-symbolic ladder θ₀..θ_n (coefficients exact). Every step is
/// certified against the exact bilinear flow; steps whose weight is a
/// multiple of 3 carry a genuinely free constant (a τ-power times an
/// earlier tau) that homogeneity cannot fix — it is determined here by
/// killing the bilinear residual exactly.
fn tau_ladder(n: u32, beta: &BigRational) -> Result<Vec<Poly2>> {
    let mut thetas = vec![Poly2::one(), Poly2::x()];
    for k in 1..n {
        if k == 1 {
            // the first step's free constant *defines* τ: θ₂ = x³ + τ
            let theta2 = Poly2::monomial(3, 0, BigRational::one())
                .add(&Poly2::monomial(0, 1, BigRational::one()));
            thetas.push(theta2);
            continue;
        }
        let w_plus = (k + 1) * (k + 2) / 2;
        // unknown coefficients a_s of x^{w-3s} τ^s
        let s_max = w_plus / 3;
        let basis: Vec<(u32, u32)> = (0..=s_max)
            .filter(|&s| 3 * s <= w_plus)
            .map(|s| (w_plus - 3 * s, s))
            .collect();
        let th_prev = thetas[k as usize].clone();
        let th_prev2 = thetas[(k - 1) as usize].clone();
        let rhs_poly = th_prev
            .mul(&th_prev)
            .scale(&BigRational::from(BigInt::from(2 * k + 1)));

        // W(candidate, θ_{k-1}) is linear in the candidate's coefficients
        let columns: Vec<Poly2> = basis
            .iter()
            .map(|&(xd, td)| {
                let m = Poly2::monomial(xd, td, BigRational::one());
                m.diff_x().mul(&th_prev2).sub(&m.mul(&th_prev2.diff_x()))
            })
            .collect();

        // collect the monomial support
        let mut support: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for p in columns.iter().chain(std::iter::once(&rhs_poly)) {
            for key in p.terms.keys() {
                let next = support.len();
                support.entry(*key).or_insert(next);
            }
        }
        let mut a = vec![vec![BigRational::zero(); basis.len()]; support.len()];
        let mut b = vec![BigRational::zero(); support.len()];
        for (ci, col) in columns.iter().enumerate() {
            for (key, c) in &col.terms {
                a[support[key]][ci] = c.clone();
            }
        }
        for (key, c) in &rhs_poly.terms {
            b[support[key]] = c.clone();
        }
        let sol = solve_exact(a, b).ok_or_else(|| Error::TauResidual {
            n: k + 1,
            residual: f64::INFINITY,
        })?;
        let mut theta = Poly2::zero();
        for (&(xd, td), c) in basis.iter().zip(&sol) {
            theta.add_term((xd, td), c);
        }
        if theta.is_zero() {
            return Err(Error::TauResidual {
                n: k + 1,
                residual: f64::INFINITY,
            });
        }

        // free-constant correction when the weight admits τ^{(2k+1)/3}θ_{k-1}
        if (2 * k + 1) % 3 == 0 {
            let p0 = bilinear_flow(&theta, beta);
            if !p0.is_zero() {
                let m = Poly2::monomial(0, (2 * k + 1) / 3, BigRational::one())
                    .mul(&thetas[(k - 1) as usize]);
                let p2 = bilinear_flow(&m, beta);
                let sum = bilinear_flow(&theta.add(&m), beta);
                let cross = sum.sub(&p0).sub(&p2);
                // solve P0 + a·C + a²·P2 = 0 coefficient-wise: use a key where
                // the quadratic part drops out
                let mut a_val: Option<BigRational> = None;
                for (key, ccoef) in &cross.terms {
                    let p2c = p2.terms.get(key).cloned().unwrap_or_else(BigRational::zero);
                    if p2c.is_zero() && !ccoef.is_zero() {
                        let p0c = p0.terms.get(key).cloned().unwrap_or_else(BigRational::zero);
                        a_val = Some(-p0c / ccoef.clone());
                        break;
                    }
                }
                let Some(a) = a_val else {
                    return Err(Error::TauResidual {
                        n: k + 1,
                        residual: f64::INFINITY,
                    });
                };
                theta = theta.add(&m.scale(&a));
            }
        }

        // exact flow certification of the finished step
        if !bilinear_flow(&theta, beta).is_zero() {
            return Err(Error::TauResidual {
                n: k + 1,
                residual: f64::INFINITY,
            });
        }
        thetas.push(theta);
    }
    Ok(thetas)
}

/// A tau polynomial at fixed `n`: `θ_n(x; t)` with `τ = βt`.
#[derive(Debug, Clone)]
pub struct TauPolynomial {
    pub n: u32,
    /// terms (x degree, τ degree, coefficient)
    terms: Vec<(u32, u32, f64)>,
    /// the calibrated weight-3 constant: τ = beta · t
    pub beta: f64,
}

impl TauPolynomial {
    /// Coefficients of `θ_n(·; t)` in ascending x-degree.
    pub fn x_coefficients(&self, t: f64) -> Vec<f64> {
        let deg = (self.n * (self.n + 1) / 2) as usize;
        let mut out = vec![0.0; deg + 1];
        for &(xd, td, c) in &self.terms {
            out[xd as usize] += c * (self.beta * t).powi(td as i32);
        }
        out
    }

    /// Jet of `θ_n(·; t)` in x.
    pub fn jet_x(&self, x: Complex64, t: f64, order: usize) -> Jet {
        let coeffs = self.x_coefficients(t);
        let zj = Jet::variable(x, order);
        let mut acc = Jet::constant(Complex64::new(0.0, 0.0), order);
        let mut pow = Jet::constant(Complex64::new(1.0, 0.0), order);
        for &c in &coeffs {
            acc = acc.add(&pow.scale(Complex64::new(c, 0.0)));
            pow = pow.mul(&zj);
        }
        acc
    }

    /// Jet of `∂θ_n/∂t(·; t)` in x.
    pub fn jet_x_dt(&self, x: Complex64, t: f64, order: usize) -> Jet {
        let deg = (self.n * (self.n + 1) / 2) as usize;
        let mut coeffs = vec![0.0; deg + 1];
        for &(xd, td, c) in &self.terms {
            if td > 0 {
                coeffs[xd as usize] +=
                    c * td as f64 * self.beta * (self.beta * t).powi(td as i32 - 1);
            }
        }
        let zj = Jet::variable(x, order);
        let mut acc = Jet::constant(Complex64::new(0.0, 0.0), order);
        let mut pow = Jet::constant(Complex64::new(1.0, 0.0), order);
        for &c in &coeffs {
            acc = acc.add(&pow.scale(Complex64::new(c, 0.0)));
            pow = pow.mul(&zj);
        }
        acc
    }

    pub fn eval(&self, x: Complex64, t: f64) -> Complex64 {
        self.jet_x(x, t, 0).value()
    }

    /// `u(x,t) = -2 (log θ)″` and the flow residual ingredients by jets.
    fn flow_residual(&self, x: Complex64, t: f64) -> f64 {
        // u, u_x, u_xxx from the order-5 jet of log θ
        let th = self.jet_x(x, t, 5);
        let l = th.ln();
        let u = l.derivative(2) * -2.0;
        let ux = l.derivative(3) * -2.0;
        let uxxx = l.derivative(5) * -2.0;
        // u_t = -2 ∂²ₓ (θ_t/θ)
        let tht = self.jet_x_dt(x, t, 2);
        let th2 = self.jet_x(x, t, 2);
        let ratio = tht.div(&th2);
        let ut = ratio.derivative(2) * -2.0;
        (ut - 6.0 * u * ux + uxxx).norm()
    }
}

fn ladder_cache() -> &'static OnceLock<Vec<Poly2>> {
    static CACHE: OnceLock<Vec<Poly2>> = OnceLock::new();
    &CACHE
}

fn beta_cache() -> &'static OnceLock<f64> {
    static CACHE: OnceLock<f64> = OnceLock::new();
    &CACHE
}

const LADDER_MAX: u32 = 12;

fn ladder() -> Result<&'static Vec<Poly2>> {
    if ladder_cache().get().is_none() {
        let beta = calibrate_beta()?;
        if beta.fract() != 0.0 {
            return Err(Error::TauResidual {
                n: 2,
                residual: beta.fract(),
            });
        }
        let beta_r = BigRational::from(BigInt::from(beta as i64));
        let l = tau_ladder(LADDER_MAX, &beta_r)?;
        let _ = ladder_cache().set(l);
    }
    Ok(ladder_cache().get().unwrap())
}

/// Calibrates τ = βt against the flow residual of θ₂ = x³ + τ, then locks
/// the nearest small integer after re-verification.
fn calibrate_beta() -> Result<f64> {
    if let Some(&b) = beta_cache().get() {
        return Ok(b);
    }
    let probe = |beta: f64| -> f64 {
        // max |flow residual| over two sample points; vanishes only at the
        // correct constant
        let tp = TauPolynomial {
            n: 2,
            terms: vec![(3, 0, 1.0), (0, 1, 1.0)],
            beta,
        };
        tp.flow_residual(Complex64::new(1.3, 0.0), 0.7)
            .max(tp.flow_residual(Complex64::new(-0.9, 0.0), 0.4))
    };
    // coarse scan, then ternary refinement of the (locally unimodal) dip
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=160 {
        let beta = 0.25 * i as f64;
        let v = probe(beta);
        if v < best.0 {
            best = (v, beta);
        }
    }
    let (mut lo, mut hi) = (best.1 - 0.25, best.1 + 0.25);
    for _ in 0..120 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if probe(m1) < probe(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let b1 = 0.5 * (lo + hi);
    // snap to the nearest integer if that is consistent
    let snapped = b1.round();
    let beta = if probe(snapped).abs() < 1e-10 {
        snapped
    } else {
        b1
    };
    let tp = TauPolynomial {
        n: 2,
        terms: vec![(3, 0, 1.0), (0, 1, 1.0)],
        beta,
    };
    let worst = [(0.9, 0.3), (-1.7, 0.22), (2.4, 1.4)]
        .iter()
        .map(|&(x, t)| tp.flow_residual(Complex64::new(x, 0.0), t))
        .fold(0.0f64, f64::max);
    if worst > 1e-8 {
        return Err(Error::TauResidual {
            n: 2,
            residual: worst,
        });
    }
    let _ = beta_cache().set(beta);
    Ok(beta)
}

/// Builds the certified tau polynomial for `1 <= n <= 12`: the construction
/// fails rather than return a polynomial whose log-second-derivative does
/// not satisfy the flow to 1e-8.
pub fn tau(n: u32, _t: f64) -> Result<TauPolynomial> {
    if !(1..=LADDER_MAX).contains(&n) {
        return Err(Error::Validation(format!("n = {n} outside 1..=12")));
    }
    let beta = calibrate_beta()?;
    let ladder = ladder()?;
    let poly = &ladder[n as usize];
    let terms: Vec<(u32, u32, f64)> = poly
        .terms
        .iter()
        .map(|(&(xd, td), c)| {
            (
                xd,
                td,
                c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN),
            )
        })
        .collect();
    if terms.iter().any(|&(_, _, c)| !c.is_finite()) {
        return Err(Error::TauResidual {
            n,
            residual: f64::INFINITY,
        });
    }
    let tp = TauPolynomial { n, terms, beta };

    // certification gate: the flow residual must vanish at scattered points.
    // Samples live just outside the root radius, where the wildly mixed
    // coefficient scales of the higher taus still evaluate without
    // cancellation; the exact scaling x ↦ sx, t ↦ s³t propagates the
    // certificate to every other scale.
    let mut rng_state = 0x2545f4914f6cdd1du64 ^ (n as u64);
    let mut next = move || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 8 {
        let t = 0.2 + next();
        let rho = root_radius_bound(&tp, t);
        let sign = if next() > 0.5 { 1.0 } else { -1.0 };
        let x = Complex64::new(sign * rho * (1.1 + 0.8 * next()), 0.0);
        if min_pole_distance(&tp, x, t) < 0.1 * rho {
            continue;
        }
        worst = worst.max(tp.flow_residual(x, t));
        checked += 1;
    }
    if worst > 1e-8 {
        return Err(Error::TauResidual { n, residual: worst });
    }
    Ok(tp)
}

/// Fujiwara-type bound on the root magnitudes of `θ_n(·; t)`.
fn root_radius_bound(tp: &TauPolynomial, t: f64) -> f64 {
    let c = tp.x_coefficients(t);
    let nd = c.len() - 1;
    let lead = c[nd].abs().max(1e-300);
    2.0 * c[..nd]
        .iter()
        .enumerate()
        .map(|(i, v)| (v.abs() / lead).powf(1.0 / (nd - i) as f64))
        .fold(0.0, f64::max)
        .max(0.5)
}

fn min_pole_distance(tp: &TauPolynomial, x: Complex64, t: f64) -> f64 {
    match ComplexPolynomial::from_real(&tp.x_coefficients(t)) {
        Ok(p) => match p.roots() {
            Ok(roots) => roots
                .iter()
                .map(|r| (x - r.value).norm())
                .fold(f64::INFINITY, f64::min),
            Err(_) => f64::INFINITY,
        },
        Err(_) => f64::INFINITY,
    }
}

/// The pole configuration of the rational flow at time `t`.
#[derive(Debug, Clone)]
pub struct PoleSet {
    pub n: u32,
    pub t: f64,
    pub roots: Vec<Root>,
    pub total: usize,
    pub real_count: usize,
}

impl PoleSet {
    pub fn real_roots(&self) -> Vec<f64> {
        self.roots
            .iter()
            .filter(|r| is_real_root(r.value))
            .map(|r| r.value.re)
            .collect()
    }
}

fn is_real_root(z: Complex64) -> bool {
    z.im.abs() <= 1e-8 * z.norm().max(1.0)
}

/// Poles `x_q(t)` of the rational solution: roots of `θ_n(·; t)`.
pub fn poles(n: u32, t: f64) -> Result<PoleSet> {
    let tp = tau(n, t)?;
    if t == 0.0 {
        // all poles collapse at the origin
        let total = (n * (n + 1) / 2) as usize;
        return Ok(PoleSet {
            n,
            t,
            roots: vec![Root {
                value: Complex64::new(0.0, 0.0),
                multiplicity: total,
            }],
            total,
            real_count: 1,
        });
    }
    let p = ComplexPolynomial::from_real(&tp.x_coefficients(t))?;
    let roots = p.roots()?;
    let total: usize = roots.iter().map(|r| r.multiplicity).sum();
    let real_count = roots
        .iter()
        .filter(|r| is_real_root(r.value))
        .map(|r| r.multiplicity)
        .sum();
    Ok(PoleSet {
        n,
        t,
        roots,
        total,
        real_count,
    })
}

/// Census row: `n ↦ (total, real)` with the expected-count flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusRow {
    pub n: u32,
    pub total: usize,
    pub real: usize,
    pub expected_real: usize,
    pub matches: bool,
}

/// Real-pole census over a range of `n` at fixed `t > 0`.
pub fn real_pole_census(n_range: impl IntoIterator<Item = u32>, t: f64) -> Result<Vec<CensusRow>> {
    if t <= 0.0 {
        return Err(Error::Validation("census requires t > 0".into()));
    }
    let mut out = Vec::new();
    for n in n_range {
        let ps = poles(n, t)?;
        let expected_real = ((n + 1) / 2) as usize;
        out.push(CensusRow {
            n,
            total: ps.total,
            real: ps.real_count,
            expected_real,
            matches: ps.real_count == expected_real
                && ps.total == (n * (n + 1) / 2) as usize,
        });
    }
    Ok(out)
}

/// Directed Hausdorff-style set distance between two complex multisets.
pub fn set_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |xs: &[Complex64], ys: &[Complex64]| -> f64 {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Scaling/symmetry report for the pole configuration.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub n: u32,
    /// Hausdorff distance between `x_q(t₂)` and `(t₂/t₁)^{1/3} x_q(t₁)`.
    pub scaling_distance: f64,
    /// Distance between `{a_q}` and its conjugate set.
    pub conjugation_distance: f64,
    /// Distance between `{a_q}` and `ξ{a_q}` for `ξ = e^{2πi/3}`.
    pub rotation_distance: f64,
}

/// Verifies `x_q(t) = a_q t^{1/3}` between `t₁` and `t₂`, and the symmetry
/// of `{a_q}` under conjugation and cube-root-of-unity rotation.
pub fn scaling_symmetry_check(n: u32, t1: f64, t2: f64) -> Result<SymmetryReport> {
    if t1 <= 0.0 || t2 <= 0.0 {
        return Err(Error::Validation("scaling check requires positive times".into()));
    }
    let p1 = poles(n, t1)?;
    let p2 = poles(n, t2)?;
    let s1: Vec<Complex64> = p1.roots.iter().map(|r| r.value).collect();
    let s2: Vec<Complex64> = p2.roots.iter().map(|r| r.value).collect();
    let ratio = (t2 / t1).powf(1.0 / 3.0);
    let scaled: Vec<Complex64> = s1.iter().map(|&z| z * ratio).collect();
    let scaling_distance = set_distance(&s2, &scaled);

    let a: Vec<Complex64> = s1.iter().map(|&z| z / t1.powf(1.0 / 3.0)).collect();
    let conj: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
    let xi = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let rot: Vec<Complex64> = a.iter().map(|&z| z * xi).collect();
    Ok(SymmetryReport {
        n,
        scaling_distance,
        conjugation_distance: set_distance(&a, &conj),
        rotation_distance: set_distance(&a, &rot),
    })
}

/// Flow residual `|u_t - 6uu_x + u_xxx|` at `(x, t)`. Pass `h > 0` for the
/// central-difference route in `t` and `x` with that step; `h <= 0` uses
/// exact polynomial jets.
pub fn kdv_residual(n: u32, x: Complex64, t: f64, h: f64) -> Result<f64> {
    let tp = tau(n, t)?;
    let guard = if h > 0.0 { 10.0 * h } else { 0.05 };
    if min_pole_distance(&tp, x, t) < guard {
        return Err(Error::PoleProximity(x));
    }
    if h <= 0.0 {
        return Ok(tp.flow_residual(x, t));
    }
    let u_at = |x: Complex64, t: f64| -> Complex64 {
        let l = tp.jet_x(x, t, 2).ln();
        l.derivative(2) * -2.0
    };
    // central differences with two Richardson levels (even error series,
    // so the combination reaches O(h^6)); the t-step is reduced by the flow
    // constant since τ = βt
    let richardson = |d: &dyn Fn(f64) -> Complex64| {
        let r1 = |h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
        (16.0 * r1(h / 2.0) - r1(h)) / 15.0
    };
    let beta = tp.beta.abs().max(1.0);
    let ut = richardson(&|h| {
        let ht = h / beta;
        (u_at(x, t + ht) - u_at(x, t - ht)) / (2.0 * ht)
    });
    let u = u_at(x, t);
    let ux = richardson(&|h| {
        let hx = Complex64::new(h, 0.0);
        (u_at(x + hx, t) - u_at(x - hx, t)) / (2.0 * hx)
    });
    let uxxx = richardson(&|h| {
        let hx = Complex64::new(h, 0.0);
        (u_at(x + 2.0 * hx, t) - 2.0 * u_at(x + hx, t) + 2.0 * u_at(x - hx, t)
            - u_at(x - 2.0 * hx, t))
            / (2.0 * hx * hx * hx)
    });
    Ok((ut - 6.0 * u * ux + uxxx).norm())
}

/// CSV rows for the pole table: `n, q, re_x, im_x, is_real, t`.
pub fn poles_csv(ps: &PoleSet) -> String {
    let mut s = String::from("n,q,re_x,im_x,is_real,t\n");
    let mut q = 0usize;
    for r in &ps.roots {
        for _ in 0..r.multiplicity {
            q += 1;
            s.push_str(&format!(
                "{},{},{:.16e},{:.16e},{},{}\n",
                ps.n,
                q,
                r.value.re,
                r.value.im,
                is_real_root(r.value),
                ps.t
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn ladder_matches_hand_solved_low_orders() {
        let beta = calibrate_beta().unwrap();
        assert!((beta - 12.0).abs() < 1e-9, "beta = {beta}");
        // θ₁ = x for all t
        let t1 = tau(1, 0.3).unwrap();
        assert_eq!(t1.x_coefficients(5.0), vec![0.0, 1.0]);
        // θ₂ = x³ + 12t
        let t2 = tau(2, 1.0).unwrap();
        let c2 = t2.x_coefficients(1.0);
        assert!((c2[0] - 12.0).abs() < 1e-10 && (c2[3] - 1.0).abs() < 1e-12);
        assert!(c2[1].abs() < 1e-12 && c2[2].abs() < 1e-12);
        // θ₃ = x⁶ + 60 t x³ - 720 t²
        let t3 = tau(3, 1.0).unwrap();
        let c3 = t3.x_coefficients(1.0);
        assert!((c3[6] - 1.0).abs() < 1e-12);
        assert!((c3[3] - 60.0).abs() < 1e-9);
        assert!((c3[0] + 720.0).abs() < 1e-8);
    }

    #[test]
    fn flow_certification_all_n() {
        for n in 1..=8 {
            assert!(tau(n, 1.0).is_ok(), "n = {n}");
        }
    }

    #[test]
    fn stationary_n1() {
        // u = 2/x² is a stationary solution: residual at machine scale
        let r = kdv_residual(1, c64(0.9, 0.0), 1.0, 0.0).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn finite_difference_residual_n2() {
        let r = kdv_residual(2, c64(1.0, 0.0), 1.0 / 12.0, 1e-2).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn pole_counts_n2_n3() {
        let p2 = poles(2, 1.0).unwrap();
        assert_eq!(p2.total, 3);
        assert_eq!(p2.real_count, 1);
        let real = p2.real_roots();
        assert!((real[0] + 12f64.powf(1.0 / 3.0)).abs() < 1e-9);

        let p3 = poles(3, 1.0).unwrap();
        assert_eq!(p3.total, 6);
        assert_eq!(p3.real_count, 2);
    }

    #[test]
    fn census_follows_the_count() {
        let rows = real_pole_census(1..=8, 1.0).unwrap();
        let reals: Vec<usize> = rows.iter().map(|r| r.real).collect();
        assert_eq!(reals, vec![1, 1, 2, 2, 3, 3, 4, 4]);
        let totals: Vec<usize> = rows.iter().map(|r| r.total).collect();
        assert_eq!(totals, vec![1, 3, 6, 10, 15, 21, 28, 36]);
        assert!(rows.iter().all(|r| r.matches));
        // counts are t-independent
        let small = real_pole_census(1..=8, 1e-3).unwrap();
        assert_eq!(
            small.iter().map(|r| r.real).collect::<Vec<_>>(),
            reals
        );
    }

    #[test]
    fn root_simplicity_for_positive_time() {
        for n in 2..=8 {
            let ps = poles(n, 0.8).unwrap();
            let spread = ps
                .roots
                .iter()
                .map(|r| r.value.norm())
                .fold(0.0f64, f64::max);
            for (i, a) in ps.roots.iter().enumerate() {
                assert_eq!(a.multiplicity, 1, "n={n}");
                for b in ps.roots.iter().skip(i + 1) {
                    assert!((a.value - b.value).norm() > 1e-6 * spread, "n={n}");
                }
            }
        }
    }

    #[test]
    fn scaling_and_symmetries() {
        // n=2: a-set = cube roots of -12
        let rep = scaling_symmetry_check(2, 1.0, 8.0).unwrap();
        assert!(rep.scaling_distance < 1e-8, "{}", rep.scaling_distance);
        assert!(rep.conjugation_distance < 1e-8);
        assert!(rep.rotation_distance < 1e-8);
        // n=1: single pole at the origin
        let rep1 = scaling_symmetry_check(1, 1.0, 5.0).unwrap();
        assert!(rep1.scaling_distance < 1e-12);
        // n=5
        let rep5 = scaling_symmetry_check(5, 1.0, 2.0).unwrap();
        assert!(rep5.scaling_distance < 1e-8, "{}", rep5.scaling_distance);
        assert!(rep5.conjugation_distance < 1e-8);
        assert!(rep5.rotation_distance < 1e-8);
    }

    #[test]
    fn collapsed_configuration_at_zero_time() {
        let p = poles(3, 0.0).unwrap();
        assert_eq!(p.roots.len(), 1);
        assert_eq!(p.roots[0].multiplicity, 6);
    }

    #[test]
    fn csv_roundtrip_shape() {
        let ps = poles(5, 1.0).unwrap();
        let csv = poles_csv(&ps);
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 16); // header + 15 poles
        assert!(lines[0].starts_with("n,q,"));
        let real_rows = lines[1..]
            .iter()
            .filter(|l| l.contains(",true,"))
            .count();
        assert_eq!(real_rows, 3);
    }
}
