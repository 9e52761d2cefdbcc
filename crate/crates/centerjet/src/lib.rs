pub mod expr;
pub mod jet;
pub mod linearize;
pub mod map1d;
pub mod normal_form;
pub mod saddle;
pub mod skew;
pub mod synthesis;
pub mod takens;

pub use jet::{Jet, JetError, PolyGerm, Q, SignPair};
pub use linearize::{HeteroclinicRecord, KoenigsChart, LinearizeError, Linearizer, StabilityReport};
pub use map1d::{find_fixed_points, Domain, FixedPoint1D, Map1DError, SmoothMap1D};
pub use synthesis::{synthesize, SynthError, SynthesisProblem, SynthesisResult};
pub use normal_form::{normal_form_reduce, MultiJet, NormalFormResult};
pub use saddle::{loop_return_jet, LoopReturn, SaddleError, SaddleModel};
pub use skew::{
    balance_multipliers, blender_covering_check, certify_region, classify_growth, convergents,
    cone_invariance_check, count_fiber_fixed_points, fiber_return, flat_fiber_perturb,
    growth_series, tangle_search, BalanceResult, BlenderSpec, ConeModel, ConeReport, CoveringReport,
    FactoryMap, Fiber, FiberFixedPoints, GrowthBudget, GrowthClass, GrowthRow, GrowthSeries,
    PeriodicWord, RegionCertificate, SkewError, SkewProduct, SymbolicBase,
};
pub use takens::{
    connecting_correctors, pinching_check, rescale_conjugacy, seminorm_compose_bound,
    verify_connecting, verify_connecting_partial, ConnectingProblem, ConnectingResidual, MatPoly,
    PinchingReport, QMat, TakensError, TakensMap,
};
