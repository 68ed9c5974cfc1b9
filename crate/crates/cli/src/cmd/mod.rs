pub mod evaluate;
pub mod generate;
pub mod interpolate;
pub mod split;
pub mod synth;
pub mod train;
