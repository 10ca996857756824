pub mod cli;
pub mod data;
pub mod fit;
pub mod model;
pub mod synth;
