use thiserror::Error;

/// Errors produced by field evaluation, curve tracing, and the analysis
/// pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}) is outside the window (or violates the evaluation margin)")]
    OutOfWindow(f64, f64),

    #[error("point ({0}, {1}) is singular (D <= eps_D); the frame is undefined there")]
    SingularPoint(f64, f64),

    #[error("trace started at a singular point ({0}, {1})")]
    SingularStart(f64, f64),

    #[error("integrator stalled: step collapsed below {0:e}")]
    IntegratorStall(f64),

    #[error("curve has too few nodes ({0}); need at least {1}")]
    TooFewNodes(usize, usize),

    #[error("curve does not terminate at a singular point")]
    NotSingularApproach,

    #[error("curl F vanishes at the singular endpoint; the limit dichotomy needs curl F != 0")]
    ZeroCurl,

    #[error("terminal value v_end = {0} must be positive")]
    NonpositiveV(f64),

    #[error("area series is degenerate (an entry is zero)")]
    DegenerateSeries,

    #[error("ray {0} escaped the window before hitting the singular set")]
    RayEscaped(usize),

    #[error("hit map is not locally resolvable on the {0} side")]
    DegenerateSide(&'static str),

    #[error("singular-curve point is missing one-sided data ({0})")]
    MissingSideData(&'static str),

    #[error("no matched hit pairs across the singular curve")]
    NoMatchedPairs,

    #[error("swept region is not closed")]
    OpenRegion,

    #[error("loop passes through the singular set (D <= 2*eps_D at a sample)")]
    SingularOnLoop,

    #[error("direction changed by >= pi/2 in a single step; loop sampling too coarse")]
    LiftJump,

    #[error("point ({0}, {1}) is not an isolated tangency of the line field with the boundary")]
    NotATangency(f64, f64),

    #[error("tangency at ({0}, {1}) is not isolated at the working resolution")]
    NonIsolated(f64, f64),

    #[error("singular set touches the domain boundary")]
    SingularTouchesBoundary,

    #[error("tangency on boundary loop {0} could not be resolved")]
    UnresolvedTangency(usize),

    #[error("point ({0}, {1}) is outside the parametrized region")]
    OutsideRegion(f64, f64),

    #[error("Newton iteration diverged while inverting the parametrization at ({0}, {1})")]
    NewtonDiverged(f64, f64),

    #[error("(V, P) loses orientation at grid node ({0}, {1})")]
    OrientationFlip(usize, usize),

    #[error("intrinsic data is not integrable: {0} = {1:e} exceeds the gate {2:e}")]
    NotIntegrable(&'static str, f64, f64),

    #[error("integrating factor {0} became non-positive")]
    NonPositiveFactor(&'static str),

    #[error("the developed chart folds over itself; (xi,eta) -> (x,y) is not injective")]
    FoldedChart,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
