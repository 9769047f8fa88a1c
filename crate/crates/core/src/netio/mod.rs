//! Networks, datasets and their on-disk formats.

mod archive;
mod dataset;
mod idx;
mod network;

pub use archive::{decode as decode_archive, encode as encode_archive, load_archive, save_archive};
pub use dataset::{make_random_dataset, Dataset};
pub use idx::{find_idx_pair, load_idx, parse_images, parse_labels};
pub use network::LayeredNetwork;
