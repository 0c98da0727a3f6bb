pub mod formats;
pub mod layers;
pub mod net;
pub mod percolation;
pub mod rng;
pub mod sim;
pub mod spatial;
pub mod sweep;
pub mod templates;
