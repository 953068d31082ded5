//! Fault-to-surface operator `A_m`, the geometry-to-data map `φ(m) = A_m h`
//! with its exact Jacobian in `(a, b, d)`, and weighted range projectors.

mod cache;
mod operator;
mod projector;
mod quadrature;

pub use cache::{assemble_cached, geometry_hash, read_matrix, write_matrix, CacheSidecar, CacheStatus};
pub use operator::{
    assemble, jacobian_fd_check, jacobian_min_singular_value, jacobian_phi, jacobian_singular_values, min_residual, phi,
    range_projector, FdColumnCheck, ForwardOperator, GeometryJacobian,
};
pub use projector::{RangeProjector, Truncation};
pub use quadrature::{composite_gauss, gauss_legendre, QuadSpec, QuadratureRule};
