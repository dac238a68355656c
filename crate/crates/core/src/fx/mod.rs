//! The singular function class: functions smooth away from a fixed real
//! singular set, constrained near each point `x_j` of order `n_j` so that
//! the local expansion carries only the parity-`n_j` powers
//! `y^{-n_j}, y^{-n_j+2}, …, y^{n_j}` through order `n_j` (the "principal
//! part") plus an `O(y^{n_j+1})` remainder. On this class the regularized
//! inner product `∫ f(x) conj(g(x̄)) dx` (poles bypassed through the complex
//! plane) is finite but indefinite, with exactly `Σ ⌊(n_j+1)/2⌋` negative
//! squares.

mod gram;
mod inner;
mod xi;

pub use gram::{gram_signature, GramReport};
pub use inner::{bilinear_pair, inner_product};
pub use xi::{random_bump, xi_family, XiMode};

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Bloch periodicity data: `f(x + T) = κ₀ f(x)` with `κ₀ = e^{i T φ₀}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPeriod {
    pub period: f64,
    /// Phase `φ₀`; the multiplier is `e^{i T φ₀}`.
    pub phase: f64,
}

impl BlochPeriod {
    pub fn multiplier(&self) -> Complex64 {
        Complex64::new(0.0, self.period * self.phase).exp()
    }
}

/// The fixed singular set: strictly increasing real points with positive
/// integer orders, optionally periodic with a unitary Bloch multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularitySpec {
    pub points: Vec<f64>,
    pub orders: Vec<u32>,
    pub periodic: Option<BlochPeriod>,
}

impl SingularitySpec {
    pub fn new(points: Vec<f64>, orders: Vec<u32>) -> Result<Self> {
        Self::build(points, orders, None)
    }

    pub fn periodic(points: Vec<f64>, orders: Vec<u32>, period: f64, phase: f64) -> Result<Self> {
        Self::build(points, orders, Some(BlochPeriod { period, phase }))
    }

    fn build(points: Vec<f64>, orders: Vec<u32>, periodic: Option<BlochPeriod>) -> Result<Self> {
        if points.len() != orders.len() {
            return Err(Error::Validation("points/orders length mismatch".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "singular points must be strictly increasing".into(),
            ));
        }
        if orders.iter().any(|&n| n == 0) {
            return Err(Error::Validation("singularity orders must be >= 1".into()));
        }
        if let Some(b) = &periodic {
            if b.period <= 0.0 {
                return Err(Error::Validation("period must be positive".into()));
            }
            if points.iter().any(|&x| !(0.0..b.period).contains(&x)) {
                return Err(Error::Validation(
                    "periodic mode requires all points in [0, T)".into(),
                ));
            }
        }
        Ok(SingularitySpec {
            points,
            orders,
            periodic,
        })
    }

    /// Minimal gap between adjacent singular points (wrapping around in
    /// periodic mode); infinite for fewer than two points in decaying mode.
    pub fn min_gap(&self) -> f64 {
        let n = self.points.len();
        let mut gap = f64::INFINITY;
        for w in self.points.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        if let (Some(b), true) = (&self.periodic, n >= 1) {
            gap = gap.min(self.points[0] + b.period - self.points[n - 1]);
        }
        gap
    }

    /// `l_X = Σ ⌊(n_j+1)/2⌋`, the exact number of negative squares of the
    /// regularized inner product on this class.
    pub fn negative_count_bound(&self) -> usize {
        self.orders.iter().map(|&n| ((n + 1) / 2) as usize).sum()
    }
}

/// Coefficients of the principal part at a singular point:
/// `coeffs[k]` multiplies `y^{-(n-2k)}`, `k = 0..=n`, so the powers run
/// `y^{-n}, y^{-n+2}, …, y^{n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPart {
    pub anchor: f64,
    pub order: u32,
    pub coeffs: Vec<Complex64>,
}

impl PrincipalPart {
    pub fn zero(anchor: f64, order: u32) -> Self {
        PrincipalPart {
            anchor,
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); order as usize + 1],
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let y = z - self.anchor;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &a) in self.coeffs.iter().enumerate() {
            let e = self.order as i32 - 2 * k as i32;
            acc += a * y.powi(-e);
        }
        acc
    }

    /// Largest pole order present (0 when all singular coefficients vanish).
    pub fn pole_order(&self) -> u32 {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for (k, &a) in self.coeffs.iter().enumerate() {
            let e = self.order as i32 - 2 * k as i32;
            if e >= 1 && a.norm() > 1e-12 * scale {
                return e as u32;
            }
        }
        0
    }

    pub fn conj(&self) -> Self {
        PrincipalPart {
            anchor: self.anchor,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }
}

/// Decay behavior on the real line, used to drive window growth and tail
/// corrections in decaying-mode integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    /// Super-polynomial decay beyond roughly `width`.
    Rapid { width: f64 },
    /// `|f(x)| ~ C |x|^{-exponent}` at infinity.
    Power { exponent: f64 },
    /// No decay information (periodic mode).
    None,
}

pub(crate) type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A member of the singular function class: evaluator, local principal-part
/// data, and decay/periodicity metadata.
#[derive(Clone)]
pub struct FxElement {
    pub spec: SingularitySpec,
    pub principal: Vec<PrincipalPart>,
    eval: Evaluator,
    pub decay: DecayClass,
    /// Largest radius around singular points at which the evaluator may be
    /// sampled on complex arcs (cutoff factors grow off the real axis).
    pub max_arc_radius: f64,
    /// Declared vanishing order at each spec point (0 unless the element has
    /// a high-order zero there, as the localized family members do at
    /// foreign points). Used to decide whether a product needs a detour.
    pub zero_orders: Vec<u32>,
    /// Extraction metadata per point: (contour radius, max |f| on the
    /// contour). Zero radius means no probe was taken (manual coefficients).
    pub principal_probe: Vec<(f64, f64)>,
    pub label: String,
}

impl std::fmt::Debug for FxElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FxElement")
            .field("spec", &self.spec)
            .field("decay", &self.decay)
            .field("label", &self.label)
            .finish()
    }
}

impl FxElement {
    /// Builds an element from a full evaluator plus explicit principal parts.
    pub fn new(
        spec: SingularitySpec,
        principal: Vec<PrincipalPart>,
        eval: Evaluator,
        decay: DecayClass,
        max_arc_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if principal.len() != spec.points.len() {
            return Err(Error::Validation(
                "one principal part per singular point required".into(),
            ));
        }
        let zero_orders = vec![0; spec.points.len()];
        let principal_probe = vec![(0.0, 0.0); spec.points.len()];
        Ok(FxElement {
            spec,
            principal,
            eval,
            decay,
            max_arc_radius,
            zero_orders,
            principal_probe,
            label: label.into(),
        })
    }

    /// Builds an element from an evaluator alone; principal parts are
    /// extracted by contour integrals.
    pub fn from_evaluator(
        spec: SingularitySpec,
        eval: Evaluator,
        decay: DecayClass,
        max_arc_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut el = FxElement {
            principal: spec
                .points
                .iter()
                .zip(&spec.orders)
                .map(|(&x, &n)| PrincipalPart::zero(x, n))
                .collect(),
            zero_orders: vec![0; spec.points.len()],
            principal_probe: vec![(0.0, 0.0); spec.points.len()],
            spec,
            eval,
            decay,
            max_arc_radius,
            label: label.into(),
        };
        let extracted = extract_principal(&el)?;
        el.principal = extracted.iter().map(|(p, _)| p.clone()).collect();
        el.principal_probe = extracted.iter().map(|&(_, probe)| probe).collect();
        Ok(el)
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub(crate) fn evaluator(&self) -> Evaluator {
        self.eval.clone()
    }

    /// Local remainder `f(x_j + y) - Φ_j(y)` at singular point index `j`.
    pub fn remainder_at(&self, j: usize, y: Complex64) -> Complex64 {
        let x = Complex64::new(self.spec.points[j], 0.0) + y;
        self.eval(x) - self.principal[j].eval(x)
    }

    /// The adjoint element `f*(z) = conj(f(conj z))`: principal coefficients
    /// conjugate, and in periodic mode the Bloch phase flips sign. The map
    /// is an involution.
    pub fn star(&self) -> FxElement {
        let inner = self.eval.clone();
        let eval: Evaluator = Arc::new(move |z: Complex64| inner(z.conj()).conj());
        let mut spec = self.spec.clone();
        if let Some(b) = &mut spec.periodic {
            b.phase = -b.phase;
        }
        FxElement {
            spec,
            principal: self.principal.iter().map(|p| p.conj()).collect(),
            eval,
            decay: self.decay,
            max_arc_radius: self.max_arc_radius,
            zero_orders: self.zero_orders.clone(),
            principal_probe: self.principal_probe.clone(),
            label: format!("star({})", self.label),
        }
    }

    /// Pole order of this element at singular-point index `j`.
    ///
    /// With extraction metadata available, a singular coefficient counts
    /// only when its contribution on the probe contour is significant
    /// against the element's magnitude there; otherwise the coefficient
    /// magnitudes alone decide.
    pub fn pole_order(&self, j: usize) -> u32 {
        let (r, m) = self.principal_probe[j];
        if r > 0.0 && m > 0.0 {
            let pp = &self.principal[j];
            for (k, &a) in pp.coeffs.iter().enumerate() {
                let e = pp.order as i32 - 2 * k as i32;
                if e >= 1 && a.norm() * r.powi(-e) > 1e-10 * m {
                    return e as u32;
                }
            }
            return 0;
        }
        self.principal[j].pole_order()
    }

    /// Net local order at point `j`: pole order minus declared zero order.
    /// Positive means an actual pole.
    pub fn net_order(&self, j: usize) -> i64 {
        self.pole_order(j) as i64 - self.zero_orders[j] as i64
    }
}

/// Extracts principal-part coefficients of an element at all its singular
/// points by trapezoidal contour integrals (512 nodes). Returns, per point,
/// the coefficients together with the probe metadata (contour radius,
/// max |f| on the contour).
///
/// Positive-power coefficients are re-extracted after subtracting the
/// singular terms, which otherwise dominate the roundoff budget.
pub fn extract_principal(f: &FxElement) -> Result<Vec<(PrincipalPart, (f64, f64))>> {
    let spec = &f.spec;
    let gap = spec.min_gap();
    let mut out = Vec::with_capacity(spec.points.len());
    for (&x, &n) in spec.points.iter().zip(&spec.orders) {
        let r = 0.05f64
            .min(if gap.is_finite() { gap / 3.0 } else { f64::INFINITY })
            .min(0.8 * f.max_arc_radius)
            .max(1e-6);
        let nodes = 512usize;
        let mut samples = Vec::with_capacity(nodes);
        let mut max_abs = 0.0f64;
        for i in 0..nodes {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            let v = f.eval(Complex64::new(x, 0.0) + Complex64::from_polar(r, th));
            max_abs = max_abs.max(v.norm());
            samples.push(v);
        }
        let coeff = |samples: &[Complex64], m: i32| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &s) in samples.iter().enumerate() {
                let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
                acc += s * Complex64::from_polar(1.0, -m as f64 * th);
            }
            acc / nodes as f64 / r.powi(m)
        };
        let mut coeffs: Vec<Complex64> = (0..=n)
            .map(|k| coeff(&samples, 2 * k as i32 - n as i32))
            .collect();
        // second pass: subtract the singular part, then re-read the
        // regular coefficients without the pole roundoff
        let cleaned: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
                let y = Complex64::from_polar(r, th);
                let mut v = s;
                for (k, &a) in coeffs.iter().enumerate() {
                    let e = n as i32 - 2 * k as i32;
                    if e >= 1 {
                        v -= a * y.powi(-e);
                    }
                }
                v
            })
            .collect();
        for (k, slot) in coeffs.iter_mut().enumerate() {
            let e = n as i32 - 2 * k as i32;
            if e <= 0 {
                *slot = coeff(&cleaned, -e);
            }
        }
        out.push((
            PrincipalPart {
                anchor: x,
                order: n,
                coeffs,
            },
            (r, max_abs),
        ));
    }
    Ok(out)
}

/// Per-point residues of the product `f · star(g)`, computed on small
/// circular contours. The regularized inner product exists only when these
/// all vanish.
pub fn residue_census(f: &FxElement, g: &FxElement) -> Result<Vec<Complex64>> {
    if f.spec.points != g.spec.points {
        return Err(Error::Validation(
            "elements live on different singular sets".into(),
        ));
    }
    let gs = g.star();
    let spec = &f.spec;
    let gap = spec.min_gap();
    let mut out = Vec::with_capacity(spec.points.len());
    for &x in &spec.points {
        let r = 0.05f64
            .min(if gap.is_finite() { gap / 3.0 } else { f64::INFINITY })
            .min(0.8 * f.max_arc_radius.min(g.max_arc_radius))
            .max(1e-6);
        let nodes = 512usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nodes {
            let th = 2.0 * std::f64::consts::PI * i as f64 / nodes as f64;
            let z = Complex64::new(x, 0.0) + Complex64::from_polar(r, th);
            acc += f.eval(z) * gs.eval(z) * Complex64::from_polar(1.0, th);
        }
        out.push(acc * r / nodes as f64);
    }
    Ok(out)
}

/// Report of the parity/membership check at one singular point.
#[derive(Debug, Clone)]
pub struct ParityReport {
    pub point: f64,
    pub fitted_order: f64,
    pub member: bool,
}

/// Checks `Ψ(y) + (-1)^{n_j+1} Ψ(-y) = O(y^{n_j+1})` at each point by
/// evaluating the symmetrized combination at radii `r, r/2, r/4` and
/// fitting the decay order.
pub fn parity_membership(f: &FxElement) -> Vec<ParityReport> {
    let spec = &f.spec;
    let gap = spec.min_gap();
    spec.points
        .iter()
        .zip(&spec.orders)
        .map(|(&x, &n)| {
            let r0 = 0.04f64
                .min(if gap.is_finite() { gap / 4.0 } else { f64::INFINITY })
                .min(0.8 * f.max_arc_radius)
                .max(1e-6);
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            let radii = [r0, r0 / 2.0, r0 / 4.0];
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    let plus = f.eval(Complex64::new(x + r, 0.0));
                    let minus = f.eval(Complex64::new(x - r, 0.0));
                    (plus + sign * minus).norm()
                })
                .collect();
            let scale = f.eval(Complex64::new(x + r0, 0.0)).norm().max(1.0);
            if vals.iter().all(|&v| v < 1e-9 * scale) {
                return ParityReport {
                    point: x,
                    fitted_order: f64::INFINITY,
                    member: true,
                };
            }
            let o1 = (vals[0] / vals[1]).ln() / std::f64::consts::LN_2;
            let o2 = (vals[1] / vals[2]).ln() / std::f64::consts::LN_2;
            let fitted = o1.min(o2);
            ParityReport {
                point: x,
                fitted_order: fitted,
                member: fitted >= n as f64 + 1.0 - 0.35,
            }
        })
        .collect()
}
