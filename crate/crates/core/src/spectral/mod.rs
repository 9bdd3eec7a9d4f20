//! Graph Laplacian, wavelet filter-bank design and Chebyshev filtering.

pub mod chebyshev;
pub mod design;
pub mod laplacian;
pub mod sgw;

pub use chebyshev::{cheby_coefficients, cheby_eval, cheby_product, truncation_error};
pub use design::{band_kernel, design_wavelets, WaveletDesign, DEFAULT_DEGREE, DEFAULT_SCALES};
pub use laplacian::{build_laplacian, estimate_lambda_max, LaplacianOperator};
pub use sgw::{cheby_apply_many, sgw_adjoint, sgw_forward, sgw_inverse, BandCoefficients, Reconstruction};
