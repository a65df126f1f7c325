//! Multi-task regression and classification with post-hoc demographic-parity
//! calibration.
//!
//! A shared-representation network is trained once over a range of task
//! weightings ([`mtl`]). Its predictions are then pushed, group by group,
//! onto the Wasserstein-2 barycenter of the group-conditional prediction
//! distributions ([`fairtransform`]), which makes every task's predictions
//! independent of the sensitive group while changing them as little as
//! possible in squared error.

pub mod data;
pub mod distrib;
pub mod fairtransform;
pub mod metrics;
pub mod mtl;
pub mod pipeline;

pub use data::{Dataset, PoolSet, TaskColumn};
pub use distrib::{EmpiricalDistribution, JitterConfig};
pub use fairtransform::{FairCalibrator, GroupLabel, Predictions, TaskKind};
pub use metrics::{MetricsReport, Summary, TaskMetrics, TaskSummary, VariantReport};
pub use mtl::{MtlNetwork, NetworkConfig, TaskWeights, YotoConfig};
