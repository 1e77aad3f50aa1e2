/// Error type shared by every module of the crate.
///
/// Variants mirror the failure surfaces of the public operations: argument
/// validation, field evaluation, mesh geometry, tree topology, flow
/// integration, and partition construction.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field evaluation produced a non-finite value at vertex {vertex}")]
    NonFiniteValue { vertex: usize },

    #[error("fields live on different meshes ({left} vs {right} vertices)")]
    MeshMismatch { left: usize, right: usize },

    #[error("degenerate triangle {triangle}: flat area {area:e} below 1e-14")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("mesh is not a closed genus-0 surface: {0}")]
    Topology(String),

    #[error("point location failed: {0}")]
    PointLocation(String),

    #[error("integrator: {0}; reduce step_size")]
    Integrator(String),

    #[error("partition construction failed: {0}")]
    Construction(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
