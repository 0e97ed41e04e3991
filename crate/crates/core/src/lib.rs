pub mod cli;
pub mod embodiment;
pub mod error;
pub mod pgm;
pub mod protocol;
pub mod raster;
pub mod recognizer;
pub mod sax;
pub mod saxdb;
pub mod sign;
pub mod signature;
pub mod synth;
