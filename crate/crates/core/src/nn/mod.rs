//! Building blocks of the attention sequence-to-sequence model.
//!
//! All blocks use the row-vector convention: a batch of `B` inputs is a
//! `B x dim` matrix and a layer computes `x W + b`. Each block comes in two
//! forms, a parameter struct holding tensors and a `*Vars` struct holding the
//! same parameters bound to a [`Graph`](crate::numcore::Graph).

mod attention;
mod decoder;
pub mod init;
mod lstm;
mod predictor;

pub use attention::{attention_weights, context, context_vector, AttentionParams, AttentionVars};
pub use decoder::{decode_step, DecoderParams, DecoderVars};
pub use lstm::{encode, lstm_cell_step, LstmParams, LstmVars, GATES};
pub use predictor::{predict_rul, DenseLayer, PredictorParams, PredictorVars};
