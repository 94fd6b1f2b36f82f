pub mod attacks;
pub mod cli;
pub mod codec;
pub mod io;
pub mod rng;
pub mod stats;
pub mod watermark;
