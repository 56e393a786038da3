use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid too coarse: n = {0}, need at least 8 points per axis")]
    GridTooCoarse(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("box length must be 2*pi for this generator, got {0}")]
    WrongBoxLength(f64),
    #[error("alpha out of L3 range: {0} (need 0 < alpha < 2/3)")]
    AlphaOutOfRange(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("negative density sample {value} at index {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("field has no pressure")]
    MissingPressure,
    #[error("cutoff radius {radius} is not resolved (need more than {min_cells} grid spacings)")]
    Unresolved { radius: f64, min_cells: f64 },
    #[error("cutoff support does not fit inside the periodic box: {0}")]
    EscapesBox(String),
    #[error("time {0} lies outside (0, 2T)")]
    TimeOutOfRange(f64),
    #[error("infeasible cover: n = {n}, multiplicity_max = {multiplicity_max}, coverage_ok = {coverage_ok} ({reason})")]
    InfeasibleCover {
        n: usize,
        multiplicity_max: usize,
        coverage_ok: bool,
        reason: String,
    },
    #[error("pathological cover: ball {0} contains no base lattice point")]
    PathologicalCover(usize),
    #[error("stencil under-resolved: smallest mollifier scale {eps} < 2h = {two_h}")]
    UnderResolved { eps: f64, two_h: f64 },
    #[error("operation not supported: {0}")]
    Unsupported(String),
}
