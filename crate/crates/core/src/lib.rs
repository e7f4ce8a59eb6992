//! Spatio-temporal perception and distortion measures for video restoration.
//!
//! The library computes fidelity measures (MSE_Pix, PSNR, SSIM, MSE_OF,
//! tOF), naturalness measures (NIQE, ingested LPIPS, perceptual
//! straightness) and the combined D_ST / P_ST scores, and assembles them
//! into a JSON report.

pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod flow;
pub mod imgproc;
pub mod perceptual;
pub mod plot;
pub mod profile;
pub mod report;
pub mod spatial;
pub mod straightness;
pub mod tradeoff;
pub mod video_io;

pub use error::{Error, ErrorCategory, Result};
