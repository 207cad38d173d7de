//! Sparse non-orthogonal uplink: allocation graph, block-fading channel,
//! message-passing detection and the multi-stage receiver.

mod channel;
mod detect;
mod graph;
mod receiver;

pub use channel::{
    complex_normal, sample_channel, sample_channel_with, transmit, transmit_noiseless, ChannelRealization,
};
pub use detect::{
    fn_update_bicm, fn_update_mlcm, fn_update_mlcm_counted, mpa_detect_stage, mpa_detect_symbols, DetectorConfig,
    LikelihoodExponent, LlrFrame, Marginalization, StageContext,
};
pub use graph::ScmaGraph;
pub use receiver::{msd_receive, MsdOutput, ReceiverMode, ReceiverOptions};
