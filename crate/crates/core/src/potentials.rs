//! Catalog of operator potentials with second-order pole singularities of
//! leading coefficient `n(n+1)`, numerical Laurent verification of that
//! shape, and local Frobenius solution bases at the singular points.

use crate::elliptic::{EllipticLattice, LatticeConfig};
use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Evaluator-backed potential produced by transformations (Darboux chains).
#[derive(Clone)]
pub struct CustomPotential {
    pub jet: Arc<dyn Fn(Complex64, usize) -> Result<Jet> + Send + Sync>,
    /// Real singular points with orders (one period's worth when periodic).
    pub singular: Vec<(f64, u32)>,
    pub period: Option<f64>,
    pub label: String,
}

impl std::fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomPotential")
            .field("singular", &self.singular)
            .field("period", &self.period)
            .field("label", &self.label)
            .finish()
    }
}

/// The potential catalog.
#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    /// `n(n+1)/x²`
    RationalSingular { n: u32 },
    /// `n(n+1)/(x - c)²` with a possibly complex shift (regular on ℝ when
    /// `Im c != 0`); the smoothing-chain output for the rational family.
    RationalShifted { n: u32, c: Complex64 },
    /// `n(n+1) k² / sin²(kx)`
    TrigSingular { n: u32, k: f64 },
    /// `n(n+1) k² / sinh²(kx)`
    SinhSoliton { n: u32, k: f64 },
    /// `n(n+1) ℘(x + δ)`
    LameElliptic {
        n: u32,
        lattice: Arc<EllipticLattice>,
        shift: Complex64,
    },
    /// Smooth periodic trigonometric polynomial `Σ c_j e^{2πi j x / T}`,
    /// modes `-m..=m` in ascending order.
    TabulatedPeriodic { period: f64, coeffs: Vec<Complex64> },
    /// Evaluator-backed (Darboux-dressed) potential.
    Dressed(CustomPotential),
}

/// Real singular structure of a potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityInfo {
    /// Strictly increasing points with orders; one period's worth when
    /// periodic.
    pub points: Vec<(f64, u32)>,
    pub period: Option<f64>,
}

/// Numerically extracted Laurent data at a singular point.
#[derive(Debug, Clone)]
pub struct LaurentData {
    pub point: f64,
    pub order: u32,
    /// Coefficient of `y^{-2}`; must equal `n(n+1)`.
    pub leading: Complex64,
    /// Even regular coefficients `u_{jk}` of `y^{2k}`, `k = 0..n-1`.
    pub even_coeffs: Vec<Complex64>,
    /// Magnitudes of the odd coefficients with exponent `< 2n` (all must
    /// vanish for the meromorphy condition).
    pub odd_magnitudes: Vec<f64>,
    /// Magnitude bound for the `O(y^{2n})` remainder at the contour radius.
    pub residual_bound: f64,
}

/// Frobenius basis data at a singular point: the singular solution
/// `ψ₁ = y^{-n} + a₁ y^{-n+2} + … + a_n y^{n} + O(y^{n+1})` and the regular
/// one `ψ₂ = y^{n+1} + …`.
#[derive(Debug, Clone)]
pub struct FrobeniusBasis {
    pub point: f64,
    pub order: u32,
    pub lambda: Complex64,
    /// `a_i(λ)`, `i = 1..=n` (coefficients of `y^{-n+2i}`).
    pub a: Vec<Complex64>,
    /// Full ψ₁ series coefficients `b_m` of `y^{-n+m}`.
    pub psi1: Vec<Complex64>,
    /// ψ₂ series coefficients `c_m` of `y^{n+1+m}`.
    pub psi2: Vec<Complex64>,
    /// The resonance obstruction at exponent `n+1` (must vanish).
    pub obstruction: Complex64,
}

impl FrobeniusBasis {
    pub fn eval_psi1(&self, y: Complex64) -> Complex64 {
        let mut acc = ZERO;
        let mut pow = y.powi(-(self.order as i32));
        for &b in &self.psi1 {
            acc += b * pow;
            pow *= y;
        }
        acc
    }

    pub fn eval_psi2(&self, y: Complex64) -> Complex64 {
        let mut acc = ZERO;
        let mut pow = y.powi(self.order as i32 + 1);
        for &c in &self.psi2 {
            acc += c * pow;
            pow *= y;
        }
        acc
    }

    fn eval_series_derivative(coeffs: &[Complex64], base: i32, y: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for (m, &b) in coeffs.iter().enumerate() {
            let e = base + m as i32;
            if e != 0 {
                acc += b * (e as f64) * y.powi(e - 1);
            }
        }
        acc
    }

    pub fn eval_psi1_derivative(&self, y: Complex64) -> Complex64 {
        Self::eval_series_derivative(&self.psi1, -(self.order as i32), y)
    }

    pub fn eval_psi2_derivative(&self, y: Complex64) -> Complex64 {
        Self::eval_series_derivative(&self.psi2, self.order as i32 + 1, y)
    }
}

/// JSON wire format for potential configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub variant: String,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub lattice: Option<LatticeConfig>,
    #[serde(default)]
    pub shift: Option<[f64; 2]>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub coefficients: Option<Vec<[f64; 2]>>,
}

impl Potential {
    pub fn from_config(cfg: &PotentialConfig) -> Result<Self> {
        let n = cfg.n.unwrap_or(1);
        match cfg.variant.as_str() {
            "zero" => Ok(Potential::Zero),
            "rational" => Ok(Potential::RationalSingular { n }),
            "rational-shifted" => {
                let s = cfg.shift.unwrap_or([0.0, 0.0]);
                Ok(Potential::RationalShifted {
                    n,
                    c: Complex64::new(s[0], s[1]),
                })
            }
            "trig" => Ok(Potential::TrigSingular {
                n,
                k: cfg.k.unwrap_or(1.0),
            }),
            "sinh" => Ok(Potential::SinhSoliton {
                n,
                k: cfg.k.unwrap_or(1.0),
            }),
            "lame" => {
                let lc = cfg
                    .lattice
                    .as_ref()
                    .ok_or_else(|| Error::Validation("lame potential needs a lattice".into()))?;
                let s = cfg.shift.unwrap_or([0.0, 0.0]);
                Ok(Potential::LameElliptic {
                    n,
                    lattice: Arc::new(EllipticLattice::from_config(lc)?),
                    shift: Complex64::new(s[0], s[1]),
                })
            }
            "tabulated" => {
                let coeffs = cfg
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| {
                        Error::Validation("tabulated potential needs coefficients".into())
                    })?
                    .iter()
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect::<Vec<_>>();
                if coeffs.len() % 2 == 0 {
                    return Err(Error::Validation(
                        "tabulated coefficient list must have odd length (modes -m..=m)".into(),
                    ));
                }
                Ok(Potential::TabulatedPeriodic {
                    period: cfg.period.ok_or_else(|| {
                        Error::Validation("tabulated potential needs a period".into())
                    })?,
                    coeffs,
                })
            }
            other => Err(Error::Validation(format!(
                "unknown potential variant '{other}'"
            ))),
        }
    }

    /// Real singular points (one period's worth when periodic) and the period.
    pub fn singularity_info(&self) -> SingularityInfo {
        match self {
            Potential::Zero | Potential::TabulatedPeriodic { .. } => SingularityInfo {
                points: Vec::new(),
                period: self.period(),
            },
            Potential::RationalSingular { n } | Potential::SinhSoliton { n, .. } => {
                SingularityInfo {
                    points: vec![(0.0, *n)],
                    period: None,
                }
            }
            Potential::RationalShifted { n, c } => SingularityInfo {
                points: if c.im == 0.0 {
                    vec![(c.re, *n)]
                } else {
                    Vec::new()
                },
                period: None,
            },
            Potential::TrigSingular { n, k } => SingularityInfo {
                points: vec![(0.0, *n)],
                period: Some(std::f64::consts::PI / k),
            },
            Potential::LameElliptic { n, lattice, shift } => {
                let period = 2.0 * lattice.omega.re;
                if shift.im.abs() > 1e-12 {
                    SingularityInfo {
                        points: Vec::new(),
                        period: Some(period),
                    }
                } else {
                    let x0 = (-shift.re).rem_euclid(period);
                    SingularityInfo {
                        points: vec![(x0, *n)],
                        period: Some(period),
                    }
                }
            }
            Potential::Dressed(c) => SingularityInfo {
                points: c.singular.clone(),
                period: c.period,
            },
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            Potential::TrigSingular { k, .. } => Some(std::f64::consts::PI / k),
            Potential::LameElliptic { lattice, .. } => Some(2.0 * lattice.omega.re),
            Potential::TabulatedPeriodic { period, .. } => Some(*period),
            Potential::Dressed(c) => c.period,
            _ => None,
        }
    }

    /// Distance from `z` to the nearest pole (`f64::INFINITY` when entire).
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        match self {
            Potential::Zero | Potential::TabulatedPeriodic { .. } => f64::INFINITY,
            Potential::RationalSingular { .. } => z.norm(),
            Potential::RationalShifted { c, .. } => (z - c).norm(),
            Potential::TrigSingular { k, .. } => {
                let t = (k * z.re / std::f64::consts::PI).round() * std::f64::consts::PI / k;
                (z - Complex64::new(t, 0.0)).norm()
            }
            Potential::SinhSoliton { k, .. } => {
                let m = (k * z.im / std::f64::consts::PI).round();
                (z - Complex64::new(0.0, m * std::f64::consts::PI / k)).norm()
            }
            Potential::LameElliptic { lattice, shift, .. } => lattice.pole_distance(z + shift),
            Potential::Dressed(c) => c
                .singular
                .iter()
                .map(|&(x, _)| (z - Complex64::new(x, 0.0)).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Taylor jet of the potential at `z`.
    pub fn eval_jet(&self, z: Complex64, order: usize) -> Result<Jet> {
        if self.pole_distance(z) < 1e-12 {
            return Err(Error::PoleProximity(z));
        }
        let zj = Jet::variable(z, order);
        match self {
            Potential::Zero => Ok(Jet::constant(ZERO, order)),
            Potential::RationalSingular { n } => Ok(zj
                .powi(-2)
                .scale(Complex64::new((n * (n + 1)) as f64, 0.0))),
            Potential::RationalShifted { n, c } => Ok(zj
                .add_scalar(-c)
                .powi(-2)
                .scale(Complex64::new((n * (n + 1)) as f64, 0.0))),
            Potential::TrigSingular { n, k } => {
                let s = zj.scale(Complex64::new(*k, 0.0)).sin();
                Ok(s.powi(-2)
                    .scale(Complex64::new((n * (n + 1)) as f64 * k * k, 0.0)))
            }
            Potential::SinhSoliton { n, k } => {
                let s = zj.scale(Complex64::new(*k, 0.0)).sinh();
                Ok(s.powi(-2)
                    .scale(Complex64::new((n * (n + 1)) as f64 * k * k, 0.0)))
            }
            Potential::LameElliptic { n, lattice, shift } => Ok(lattice
                .wp_jet(z + shift, order)?
                .scale(Complex64::new((n * (n + 1)) as f64, 0.0))),
            Potential::TabulatedPeriodic { period, coeffs } => {
                let m = (coeffs.len() as i32 - 1) / 2;
                let mut acc = Jet::constant(ZERO, order);
                for (i, &cj) in coeffs.iter().enumerate() {
                    let mode = i as i32 - m;
                    let w =
                        Complex64::new(0.0, 2.0 * std::f64::consts::PI * mode as f64 / period);
                    acc = acc.add(&zj.scale(w).exp().scale(cj));
                }
                Ok(acc)
            }
            Potential::Dressed(c) => (c.jet)(z, order),
        }
    }

    /// Value of the potential at `z`.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_jet(z, 0)?.value())
    }
}

/// Extracts Laurent coefficients of `u` around `x_j` by trapezoidal contour
/// integrals on a circle (256 nodes, spectrally accurate) and verifies the
/// meromorphy shape `u = n(n+1)/y² + Σ_{k<n} u_k y^{2k} + O(y^{2n})`.
/// Pass `radius <= 0` for the documented default 0.02.
pub fn laurent_check(u: &Potential, x_j: f64, n_j: u32, radius: f64) -> Result<LaurentData> {
    let n = n_j as i32;
    let r = if radius > 0.0 { radius } else { 0.02 };
    let nodes = 256usize;
    let center = Complex64::new(x_j, 0.0);

    let mut samples = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
        let z = center + Complex64::from_polar(r, th);
        samples.push(u.evaluate(z)?);
    }

    let coeff = |m: i32| -> Complex64 {
        let mut acc = ZERO;
        for (i, &s) in samples.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            acc += s * Complex64::from_polar(1.0, -m as f64 * th);
        }
        acc / nodes as f64 / r.powi(m)
    };

    let expected = (n * (n + 1)) as f64;
    let leading = coeff(-2);
    let scale = leading.norm().max(1.0);
    // forbidden terms are measured by their size on the probe contour
    // relative to the second-order pole term there
    let lead_term = scale * r.powi(-2);
    let mut offenders = Vec::new();

    if (leading - expected).norm() > 1e-8 * scale {
        offenders.push(format!("c[-2] = {leading} (expected {expected})"));
    }
    for m in [-4, -3, -1] {
        let c = coeff(m);
        if c.norm() * r.powi(m) > 1e-8 * lead_term {
            offenders.push(format!("c[{m}] = {c}"));
        }
    }
    let mut odd_magnitudes = Vec::new();
    let mut m = 1;
    while m < 2 * n {
        let c = coeff(m);
        odd_magnitudes.push(c.norm());
        if c.norm() * r.powi(m) > 1e-8 * lead_term {
            offenders.push(format!("odd c[{m}] = {c}"));
        }
        m += 2;
    }
    if !offenders.is_empty() {
        return Err(Error::Meromorphy {
            point: x_j,
            detail: offenders.join(", "),
        });
    }

    // re-extract the regular coefficients with the pole terms subtracted,
    // which removes their roundoff footprint
    let singular: Vec<(i32, Complex64)> = [-4, -3, -2, -1]
        .iter()
        .map(|&m| (m, coeff(m)))
        .collect();
    let cleaned: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            let y = Complex64::from_polar(r, th);
            let mut v = s;
            for &(m, c) in &singular {
                v -= c * y.powi(m);
            }
            v
        })
        .collect();
    let coeff_clean = |m: i32| -> Complex64 {
        let mut acc = ZERO;
        for (i, &s) in cleaned.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            acc += s * Complex64::from_polar(1.0, -m as f64 * th);
        }
        acc / nodes as f64 / r.powi(m)
    };
    let even_coeffs = (0..n_j).map(|k| coeff_clean(2 * k as i32)).collect();
    let residual_bound = (2 * n..2 * n + 4)
        .map(|m| coeff_clean(m).norm() * r.powi(m))
        .sum::<f64>();

    Ok(LaurentData {
        point: x_j,
        order: n_j,
        leading,
        even_coeffs,
        odd_magnitudes,
        residual_bound,
    })
}

/// Distance from the pole at `x_j` to the nearest other pole of `u`,
/// bounding the radius of the local Laurent annulus.
fn analyticity_radius(u: &Potential, x_j: f64) -> f64 {
    match u {
        Potential::Zero | Potential::TabulatedPeriodic { .. } => f64::INFINITY,
        Potential::RationalSingular { .. } | Potential::RationalShifted { .. } => f64::INFINITY,
        Potential::TrigSingular { k, .. } | Potential::SinhSoliton { k, .. } => {
            std::f64::consts::PI / k
        }
        Potential::LameElliptic { lattice, .. } => {
            let w1 = 2.0 * lattice.omega;
            let w2 = 2.0 * lattice.omega_prime;
            w1.norm()
                .min(w2.norm())
                .min((w1 + w2).norm())
                .min((w1 - w2).norm())
        }
        Potential::Dressed(c) => {
            let mut d = 0.5f64;
            for &(x, _) in &c.singular {
                if (x - x_j).abs() > 1e-12 {
                    d = d.min((x - x_j).abs());
                }
            }
            d
        }
    }
}

/// Solves the Frobenius recursion at a singular point that passed
/// [`laurent_check`], producing ψ₁ and ψ₂. The resonance equation at
/// exponent `n+1` is solvable exactly because the odd Laurent terms vanish;
/// its leftover is reported as `obstruction`. Pass `depth = 0` for the
/// default of `n + 3` coefficient pairs.
pub fn frobenius_basis(
    u: &Potential,
    x_j: f64,
    n_j: u32,
    lambda: Complex64,
    depth: usize,
) -> Result<FrobeniusBasis> {
    laurent_check(u, x_j, n_j, 0.02)?;

    let n = n_j as i32;
    let depth = if depth == 0 { n_j as usize + 3 } else { depth };
    let m_max = 2 * n as usize + 2 * depth + 2;

    // Laurent coefficients v_s of the regular part of u, s = 0..=m_max.
    // A wide contour (still inside the Laurent annulus) keeps the pole's
    // roundoff footprint out of the high coefficients.
    let r = (0.4 * analyticity_radius(u, x_j)).min(0.25);
    let nodes = 512usize;
    let center = Complex64::new(x_j, 0.0);
    let mut samples = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
        let y = Complex64::from_polar(r, th);
        samples.push(u.evaluate(center + y)? - (n * (n + 1)) as f64 / (y * y));
    }
    let v: Vec<Complex64> = (0..=m_max as i32)
        .map(|m| {
            let mut acc = ZERO;
            for (i, &s) in samples.iter().enumerate() {
                let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
                acc += s * Complex64::from_polar(1.0, -m as f64 * th);
            }
            acc / nodes as f64 / r.powi(m)
        })
        .collect();

    // ψ₁: b_m of y^{-n+m}; resonance at m = 2n+1
    let mut b = vec![ZERO; m_max + 1];
    b[0] = Complex64::new(1.0, 0.0);
    let mut obstruction = ZERO;
    for m in 1..=m_max {
        let mut rhs = ZERO;
        if m >= 2 {
            rhs += lambda * b[m - 2];
            for s in 0..=m - 2 {
                rhs -= v[s] * b[m - 2 - s];
            }
        }
        if m as i32 == 2 * n + 1 {
            obstruction = rhs;
            let tol = 1e-8 * (1.0 + lambda.norm()).powi(n + 1);
            if rhs.norm() > tol {
                return Err(Error::Meromorphy {
                    point: x_j,
                    detail: format!("log obstruction {rhs} at resonance exponent {}", n + 1),
                });
            }
            b[m] = ZERO;
        } else {
            let d = (m as i32 * (2 * n + 1 - m as i32)) as f64;
            b[m] = rhs / d;
        }
    }

    // ψ₂: c_m of y^{n+1+m}
    let mut c = vec![ZERO; m_max + 1];
    c[0] = Complex64::new(1.0, 0.0);
    for m in 1..=m_max {
        let mut rhs = ZERO;
        if m >= 2 {
            rhs += lambda * c[m - 2];
            for s in 0..=m - 2 {
                rhs -= v[s] * c[m - 2 - s];
            }
        }
        let d = -(m as f64) * (m as f64 + (2 * n + 1) as f64);
        c[m] = rhs / d;
    }

    let a = (1..=n_j as usize).map(|i| b[2 * i]).collect();
    Ok(FrobeniusBasis {
        point: x_j,
        order: n_j,
        lambda,
        a,
        psi1: b,
        psi2: c,
        obstruction,
    })
}
