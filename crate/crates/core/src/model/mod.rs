//! The coupled content / graph auto-encoder architecture.

mod forward;
mod params;
mod spec;

pub use forward::{
    attention_head, cae_forward, cae_layer, evaluate, evaluate_cae, forward, fuse_raw,
    gae_layer, multi_head_fusion, reconstruct_adjacency, ForwardGraph, ForwardOutputs,
};
pub use params::{FusionParams, FusionVars, HeadParams, HeadVars, ModelParams, ParamVars};
pub use spec::{Ablation, Activation, ArchitectureSpec};
