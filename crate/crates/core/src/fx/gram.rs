//! Gram matrices of element families under the regularized inner product,
//! with eigenvalues and signature.

use super::{inner_product, FxElement};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Signature triple of a Hermitian form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub pos: usize,
    pub zero: usize,
    pub neg: usize,
}

/// Gram matrix with its spectrum and signature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramReport {
    pub matrix_re: Vec<Vec<f64>>,
    pub matrix_im: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub signature: Signature,
    pub zero_threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub orders: Vec<u32>,
}

impl GramReport {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        self.matrix_re
            .iter()
            .zip(&self.matrix_im)
            .map(|(re, im)| {
                re.iter()
                    .zip(im)
                    .map(|(&r, &i)| Complex64::new(r, i))
                    .collect()
            })
            .collect()
    }
}

/// Eigenvalues of a Hermitian matrix through the real symmetric embedding
/// `[[A, -B], [B, A]]` of `H = A + iB`, whose spectrum is that of `H` with
/// every eigenvalue doubled.
fn hermitian_eigenvalues(h: &[Vec<Complex64>]) -> Vec<f64> {
    let n = h.len();
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let a = h[i][j].re;
            let b = h[i][j].im;
            m[(i, j)] = a;
            m[(n + i, n + j)] = a;
            m[(i, n + j)] = -b;
            m[(n + i, j)] = b;
        }
    }
    let eig = m.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // exact duplicate pairs: take every second
    vals.into_iter().step_by(2).collect()
}

/// Assembles the Gram matrix of `elements` under the regularized inner
/// product, checks Hermiticity, and classifies the spectrum. Eigenvalues
/// with `|λ| <= zero_threshold` count as zero; pass `zero_threshold <= 0`
/// for the default `1e-8 · max|λ|`.
pub fn gram_signature(
    elements: &[FxElement],
    zero_threshold: f64,
    radius_hint: f64,
) -> Result<GramReport> {
    let n = elements.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect();
    let entries: Vec<((usize, usize), Result<Complex64>)> = pairs
        .par_iter()
        .map(|&(i, j)| ((i, j), inner_product(&elements[i], &elements[j], radius_hint)))
        .collect();

    let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for ((i, j), v) in entries {
        let v = v?;
        g[i][j] = v;
        if i != j {
            g[j][i] = v.conj();
        }
    }

    // Hermiticity check against independently computed transposes on the
    // diagonal-free part would re-run the quadrature; instead verify that
    // the diagonal is real to tolerance.
    let scale = g
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for (i, row) in g.iter().enumerate() {
        if row[i].im.abs() > 1e-8 * scale {
            return Err(Error::Validation(format!(
                "Gram diagonal entry {i} not real: {}",
                row[i]
            )));
        }
    }

    let eigenvalues = hermitian_eigenvalues(&g);
    let max_abs = eigenvalues.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let threshold = if zero_threshold > 0.0 {
        zero_threshold
    } else {
        1e-8 * max_abs
    };
    let mut sig = Signature {
        pos: 0,
        zero: 0,
        neg: 0,
    };
    for &ev in &eigenvalues {
        if ev.abs() <= threshold {
            sig.zero += 1;
        } else if ev > 0.0 {
            sig.pos += 1;
        } else {
            sig.neg += 1;
        }
    }

    Ok(GramReport {
        matrix_re: g.iter().map(|row| row.iter().map(|v| v.re).collect()).collect(),
        matrix_im: g.iter().map(|row| row.iter().map(|v| v.im).collect()).collect(),
        eigenvalues,
        signature: sig,
        zero_threshold: threshold,
        epsilon: None,
        orders: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::fx::{xi_family, DecayClass, SingularitySpec, XiMode};
    use std::sync::Arc;

    #[test]
    fn hermitian_embedding_eigenvalues() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let h = vec![
            vec![c64(2.0, 0.0), c64(0.0, 1.0)],
            vec![c64(0.0, -1.0), c64(2.0, 0.0)],
        ];
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn regular_pair_positive() {
        let spec = SingularitySpec::new(vec![], vec![]).unwrap();
        let f = FxElement::new(
            spec.clone(),
            vec![],
            Arc::new(|z: Complex64| (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            1.0,
            "g0",
        )
        .unwrap();
        let g = FxElement::new(
            spec,
            vec![],
            Arc::new(|z: Complex64| z * (-z * z).exp()),
            DecayClass::Rapid { width: 6.0 },
            1.0,
            "g1",
        )
        .unwrap();
        let report = gram_signature(&[f, g], 0.0, 0.0).unwrap();
        assert_eq!(
            report.signature,
            Signature {
                pos: 2,
                zero: 0,
                neg: 0
            }
        );
    }

    #[test]
    fn two_simple_points_negative_pair() {
        let spec = SingularitySpec::new(vec![0.0, 1.0], vec![1, 1]).unwrap();
        let fam = xi_family(&spec, 0.05, 2, XiMode::Decaying).unwrap();
        let report = gram_signature(&fam, 0.0, 0.0).unwrap();
        assert_eq!(report.signature.neg, 2);
        assert_eq!(report.signature.pos, 0);
        assert_eq!(report.signature.zero, 0);
    }

    #[test]
    fn json_shape() {
        let spec = SingularitySpec::new(vec![0.0], vec![1]).unwrap();
        let fam = xi_family(&spec, 0.1, 2, XiMode::Decaying).unwrap();
        let mut report = gram_signature(&fam, 0.0, 0.0).unwrap();
        report.epsilon = Some(0.1);
        report.orders = vec![1];
        let s = serde_json::to_string(&report).unwrap();
        assert!(s.contains("matrix_re") && s.contains("signature"));
        let back: GramReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.signature, report.signature);
    }
}
