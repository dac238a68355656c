//! Hyperelliptic spectral curves, the quasimomentum differential with real
//! cycle periods, Floquet discriminants and band edges, genus-1 Bloch
//! (Baker-Akhiezer) functions in Weierstrass form, canonical contours
//! `|κ| = 1`, spectral weights, and the spectral-measure sign census.

mod census;
mod curve;
mod floquet;
mod lame;

pub use census::{measure_sign_census, spectral_weight, CensusReport};
pub use curve::{HyperellipticCurve, QuasimomentumChart, SurfacePoint};
pub use floquet::{band_edges, FloquetGrid};
pub use lame::{
    bloch_points, canonical_contour, connectivity_classes, contour_csv, lame_bloch,
    lame_bloch_fn, lame_bloch_shifted_fn, multiplicative_check, BlochData, BlochPoint,
    ContourComponent,
};
