//! Integer leaky integrate-and-fire networks.

pub mod genome;
pub mod sim;

pub use genome::{
    clamp_parameters, count_parameters, deserialize_genome, serialize_genome, IoCounts, NetworkGenome, Neuron, Role,
    Synapse, DELAY_RANGE, THRESHOLD_RANGE, WEIGHT_RANGE,
};
pub use sim::{decode_output, simulate, BiasSource, LeakMode, SimResult, Simulator};
