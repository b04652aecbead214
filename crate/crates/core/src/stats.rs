use serde::{Deserialize, Serialize};

/// Architecture size of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureStats {
    pub depth: usize,
    /// Widths `N_0, …, N_L`, input first.
    pub neuron_counts: Vec<usize>,
    /// `Σ N_ℓ` over all layers including input and output.
    pub total_neurons: usize,
    /// Architecture entries: mask-allowed weights plus biases.
    pub weight_count: usize,
    pub max_weight_magnitude: f64,
}

impl ArchitectureStats {
    pub fn hidden_neurons(&self) -> usize {
        let n = &self.neuron_counts;
        if n.len() <= 2 {
            0
        } else {
            n[1..n.len() - 1].iter().sum()
        }
    }

    /// Depth, widths and weight count agree.
    pub fn same_architecture(&self, other: &Self) -> bool {
        self.depth == other.depth
            && self.neuron_counts == other.neuron_counts
            && self.total_neurons == other.total_neurons
            && self.weight_count == other.weight_count
    }
}

/// Sizes of the building blocks taken one at a time, without fusing
/// adjacent affine maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    pub blocks: usize,
    pub hidden_neurons: usize,
    pub weight_count: usize,
}
