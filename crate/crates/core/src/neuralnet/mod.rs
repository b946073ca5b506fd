//! A small 1×1-convolution + fully-connected ReLU network with hand-written
//! backpropagation, Adam, losses, annealing schedules and a binary weight
//! format.
//!
//! The network reads an `m × c_in` grid (one row per question). A shared
//! 1×1 convolution mixes the `c_in` channels at every row, the `m × conv_out`
//! result is flattened row-major and passed through three ReLU dense layers
//! and a linear head.

mod adam;
mod gradcheck;
mod io;
mod loss;
mod network;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::gradient_check;
pub use io::{load_weights, read_weights, save_weights, write_weights, FORMAT_VERSION};
pub use loss::{cross_entropy_loss, softmax, td_loss};
pub use network::{Arch, Cache, Dense, Network, Scalar};

/// `start + (end - start) * min(t / horizon, 1)`.
pub fn linear_anneal(start: f64, end: f64, t: f64, horizon: f64) -> f64 {
    assert!(horizon > 0.0, "anneal horizon must be positive");
    let frac = (t / horizon).max(0.0);
    if frac >= 1.0 {
        end
    } else {
        start + (end - start) * frac
    }
}
