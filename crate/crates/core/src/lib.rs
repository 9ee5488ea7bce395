//! Multi-hypothesis trajectory learning at desk scale: the winner-takes-all
//! objective family with divide-and-conquer initialization, curvilinear
//! lane-anchor coordinates with candidate anchor retrieval, a small
//! analytically differentiated training stack, evaluation metrics (oracle
//! FDE, exact EMD, mADE/mFDE, miss rate, off-road rate), and seeded
//! synthetic scene generators.

pub mod eval;
pub mod geometry;
pub mod lanegraph;
pub mod learn;
pub mod objectives;
pub mod synthgen;
