//! From-scratch classifiers: a bagged decision-tree ensemble, second-order
//! gradient-boosted trees, and a small feed-forward network, plus the
//! standardizer applied only to the network.

mod forest;
mod gbdt;
mod mlp;
mod model;
mod standardizer;
mod tree;

pub use forest::{train_random_forest, ForestConfig, ForestModel, MaxFeatures};
pub use gbdt::{train_gbdt, BoostConfig, GbdtModel, RegNode};
pub use mlp::{loss_and_gradients, train_mlp, DenseLayer, MlpConfig, MlpModel};
pub use model::{load_model, save_model, Model, Prediction};
pub use standardizer::{apply_standardizer, fit_standardizer, Standardizer};
pub use tree::{train_tree, TreeNode, TreeParams};

/// Stable seed derivation for sub-generators (per tree, per round, per
/// repetition). splitmix64 over the combined words.
pub fn derive_seed(master: u64, salt: &[u64]) -> u64 {
    let mut state = master;
    for &word in salt {
        state = state.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(word);
        state = splitmix64(state);
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
