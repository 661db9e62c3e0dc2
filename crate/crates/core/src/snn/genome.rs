//! Integer-parameter spiking network description.
//!
//! Neuron ids `0..n_inputs` are inputs, the next `n_outputs` ids are outputs,
//! and hidden neurons take ids from `n_inputs + n_outputs` upward. Neurons are
//! kept sorted by id and synapses by `(pre, post)`, so two equal networks
//! serialize identically.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit unsigned thresholds.
pub const THRESHOLD_RANGE: RangeInclusive<i32> = 0..=255;
/// 9-bit signed weights.
pub const WEIGHT_RANGE: RangeInclusive<i32> = -256..=255;
/// 4-bit unsigned delays, in timesteps.
pub const DELAY_RANGE: RangeInclusive<i32> = 0..=15;

const FORMAT_TAG: &str = "neurofilter-genome";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Hidden,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Neuron {
    pub id: u32,
    pub threshold: i32,
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: u32,
    pub post: u32,
    pub weight: i32,
    pub delay: i32,
}

/// Input/output neuron counts of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IoCounts {
    pub inputs: usize,
    pub outputs: usize,
}

impl IoCounts {
    pub const fn new(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs }
    }

    /// Two outputs; two inputs per spatial group plus an optional bias input.
    pub const fn for_groups(group_count: usize, bias: bool) -> Self {
        Self {
            inputs: 2 * group_count + bias as usize,
            outputs: 2,
        }
    }

    pub const fn total(&self) -> usize {
        self.inputs + self.outputs
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetworkGenome {
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    io: IoCounts,
}

impl NetworkGenome {
    /// Network with only input and output neurons and no synapses.
    pub fn new(io: IoCounts, input_threshold: i32, output_threshold: i32) -> Self {
        let mut neurons = Vec::with_capacity(io.total());
        for id in 0..io.inputs as u32 {
            neurons.push(Neuron {
                id,
                threshold: input_threshold,
                role: Role::Input,
            });
        }
        for k in 0..io.outputs as u32 {
            neurons.push(Neuron {
                id: io.inputs as u32 + k,
                threshold: output_threshold,
                role: Role::Output,
            });
        }
        Self {
            neurons,
            synapses: Vec::new(),
            io,
        }
    }

    pub fn io(&self) -> IoCounts {
        self.io
    }

    pub fn n_inputs(&self) -> usize {
        self.io.inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.io.outputs
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn hidden_count(&self) -> usize {
        self.neurons.len() - self.io.total()
    }

    pub fn hidden_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.neurons[self.io.total()..].iter().map(|n| n.id)
    }

    /// Id of output neuron `k`.
    pub fn output_id(&self, k: usize) -> u32 {
        (self.io.inputs + k) as u32
    }

    /// Smallest id not used by any neuron.
    pub fn next_free_id(&self) -> u32 {
        self.neurons.last().map_or(0, |n| n.id + 1).max(self.io.total() as u32)
    }

    pub fn neuron_index(&self, id: u32) -> Option<usize> {
        self.neurons.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn neuron(&self, id: u32) -> Option<&Neuron> {
        self.neuron_index(id).map(|i| &self.neurons[i])
    }

    pub fn neuron_mut(&mut self, id: u32) -> Option<&mut Neuron> {
        self.neuron_index(id).map(move |i| &mut self.neurons[i])
    }

    fn synapse_index(&self, pre: u32, post: u32) -> std::result::Result<usize, usize> {
        self.synapses.binary_search_by_key(&(pre, post), |s| (s.pre, s.post))
    }

    pub fn synapse(&self, pre: u32, post: u32) -> Option<&Synapse> {
        self.synapse_index(pre, post).ok().map(|i| &self.synapses[i])
    }

    pub fn synapses_mut(&mut self) -> &mut [Synapse] {
        &mut self.synapses
    }

    pub fn neurons_mut(&mut self) -> &mut [Neuron] {
        &mut self.neurons
    }

    /// Adds a hidden neuron with the given id.
    pub fn add_hidden(&mut self, id: u32, threshold: i32) -> Result<()> {
        if (id as usize) < self.io.total() {
            return Err(Error::Genome(format!("hidden id {id} collides with io ids")));
        }
        match self.neurons.binary_search_by_key(&id, |n| n.id) {
            Ok(_) => Err(Error::Genome(format!("duplicate neuron id {id}"))),
            Err(pos) => {
                self.neurons.insert(
                    pos,
                    Neuron {
                        id,
                        threshold,
                        role: Role::Hidden,
                    },
                );
                Ok(())
            }
        }
    }

    /// Removes a hidden neuron and every synapse touching it.
    pub fn remove_hidden(&mut self, id: u32) -> Result<()> {
        let idx = self
            .neuron_index(id)
            .ok_or_else(|| Error::Genome(format!("no neuron {id}")))?;
        if self.neurons[idx].role != Role::Hidden {
            return Err(Error::Genome(format!("neuron {id} is not hidden")));
        }
        self.neurons.remove(idx);
        self.synapses.retain(|s| s.pre != id && s.post != id);
        Ok(())
    }

    pub fn add_synapse(&mut self, syn: Synapse) -> Result<()> {
        if self.neuron_index(syn.pre).is_none() || self.neuron_index(syn.post).is_none() {
            return Err(Error::Genome(format!(
                "synapse {}->{} references a missing neuron",
                syn.pre, syn.post
            )));
        }
        match self.synapse_index(syn.pre, syn.post) {
            Ok(_) => Err(Error::Genome(format!("duplicate synapse {}->{}", syn.pre, syn.post))),
            Err(pos) => {
                self.synapses.insert(pos, syn);
                Ok(())
            }
        }
    }

    pub fn remove_synapse(&mut self, pre: u32, post: u32) -> bool {
        match self.synapse_index(pre, post) {
            Ok(i) => {
                self.synapses.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    /// Checks structure and parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Genome(m));
        if self.neurons.len() < self.io.total() {
            return bad("fewer neurons than io count".into());
        }
        for (i, n) in self.neurons.iter().enumerate() {
            let expect = if i < self.io.inputs {
                Role::Input
            } else if i < self.io.total() {
                Role::Output
            } else {
                Role::Hidden
            };
            if i < self.io.total() && n.id != i as u32 {
                return bad(format!("io neuron at position {i} has id {}", n.id));
            }
            if n.role != expect {
                return bad(format!("neuron {} has role {:?}, expected {expect:?}", n.id, n.role));
            }
            if i > 0 && self.neurons[i - 1].id >= n.id {
                return bad("neuron ids must be unique and ascending".into());
            }
            if !THRESHOLD_RANGE.contains(&n.threshold) {
                return bad(format!("threshold {} of neuron {} out of range", n.threshold, n.id));
            }
        }
        for (i, s) in self.synapses.iter().enumerate() {
            if i > 0 {
                let p = &self.synapses[i - 1];
                if (p.pre, p.post) >= (s.pre, s.post) {
                    return bad(format!("duplicate or unordered synapse {}->{}", s.pre, s.post));
                }
            }
            if self.neuron_index(s.pre).is_none() || self.neuron_index(s.post).is_none() {
                return bad(format!("synapse {}->{} references a missing neuron", s.pre, s.post));
            }
            if !WEIGHT_RANGE.contains(&s.weight) {
                return bad(format!("weight {} on {}->{} out of range", s.weight, s.pre, s.post));
            }
            if !DELAY_RANGE.contains(&s.delay) {
                return bad(format!("delay {} on {}->{} out of range", s.delay, s.pre, s.post));
            }
        }
        Ok(())
    }

    /// Serializes to the versioned TOML genome format.
    pub fn to_text(&self) -> String {
        let doc = GenomeDoc {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            n_inputs: self.io.inputs,
            n_outputs: self.io.outputs,
            neuron: self.neurons.clone(),
            synapse: self.synapses.clone(),
        };
        toml::to_string(&doc).expect("genome document serializes")
    }

    /// Parses the TOML genome format. Values outside the integer ranges are
    /// rejected, not clamped.
    pub fn from_text(text: &str) -> Result<Self> {
        let doc: GenomeDoc = toml::from_str(text).map_err(|e| Error::Genome(e.to_string()))?;
        if doc.format != FORMAT_TAG {
            return Err(Error::Genome(format!("unexpected format tag '{}'", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(Error::Genome(format!("unsupported version {}", doc.version)));
        }
        let mut neurons = doc.neuron;
        let mut synapses = doc.synapse;
        neurons.sort_by_key(|n| n.id);
        synapses.sort_by_key(|s| (s.pre, s.post));
        let g = Self {
            neurons,
            synapses,
            io: IoCounts::new(doc.n_inputs, doc.n_outputs),
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeDoc {
    format: String,
    version: u32,
    n_inputs: usize,
    n_outputs: usize,
    #[serde(default)]
    neuron: Vec<Neuron>,
    #[serde(default)]
    synapse: Vec<Synapse>,
}

pub fn serialize_genome(genome: &NetworkGenome) -> String {
    genome.to_text()
}

pub fn deserialize_genome(text: &str) -> Result<NetworkGenome> {
    NetworkGenome::from_text(text)
}

/// Clips every parameter into its hardware range.
pub fn clamp_parameters(mut genome: NetworkGenome) -> NetworkGenome {
    for n in &mut genome.neurons {
        n.threshold = n.threshold.clamp(*THRESHOLD_RANGE.start(), *THRESHOLD_RANGE.end());
    }
    for s in &mut genome.synapses {
        s.weight = s.weight.clamp(*WEIGHT_RANGE.start(), *WEIGHT_RANGE.end());
        s.delay = s.delay.clamp(*DELAY_RANGE.start(), *DELAY_RANGE.end());
    }
    genome
}

/// One threshold per neuron plus a weight and a delay per synapse.
pub fn count_parameters(genome: &NetworkGenome) -> usize {
    genome.neurons.len() + 2 * genome.synapses.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NetworkGenome {
        let mut g = NetworkGenome::new(IoCounts::new(2, 2), 1, 10);
        g.add_hidden(4, 7).unwrap();
        g.add_synapse(Synapse {
            pre: 0,
            post: 4,
            weight: 12,
            delay: 0,
        })
        .unwrap();
        g.add_synapse(Synapse {
            pre: 4,
            post: 3,
            weight: -5,
            delay: 2,
        })
        .unwrap();
        g.add_synapse(Synapse {
            pre: 4,
            post: 4,
            weight: 1,
            delay: 15,
        })
        .unwrap();
        g
    }

    #[test]
    fn counts_parameters() {
        let g = NetworkGenome::new(IoCounts::new(1, 2), 0, 0);
        assert_eq!(count_parameters(&g), 3);
        assert_eq!(count_parameters(&small()), 5 + 6);
    }

    #[test]
    fn clamp_examples() {
        let mut g = small();
        g.synapses_mut()[0].weight = 300;
        g.synapses_mut()[1].weight = -400;
        g.synapses_mut()[2].delay = 99;
        g.neurons_mut()[4].threshold = -3;
        let c = clamp_parameters(g);
        assert_eq!(c.synapses()[0].weight, 255);
        assert_eq!(c.synapses()[1].weight, -256);
        assert_eq!(c.synapses()[2].delay, 15);
        assert_eq!(c.neurons()[4].threshold, 0);
        assert!(c.validate().is_ok());
        assert_eq!(clamp_parameters(small()), small());
    }

    #[test]
    fn structural_errors() {
        let mut g = small();
        assert!(g
            .add_synapse(Synapse {
                pre: 0,
                post: 4,
                weight: 1,
                delay: 0
            })
            .is_err());
        assert!(g
            .add_synapse(Synapse {
                pre: 0,
                post: 99,
                weight: 1,
                delay: 0
            })
            .is_err());
        assert!(g.add_hidden(4, 1).is_err());
        assert!(g.add_hidden(1, 1).is_err());
        assert!(g.remove_hidden(2).is_err());
        g.remove_hidden(4).unwrap();
        assert!(g.synapses().is_empty());
    }

    #[test]
    fn text_roundtrip() {
        let g = small();
        let text = g.to_text();
        assert!(text.contains("version = 1"));
        assert_eq!(NetworkGenome::from_text(&text).unwrap(), g);
        let empty = NetworkGenome::new(IoCounts::new(3, 2), 0, 1);
        assert_eq!(NetworkGenome::from_text(&empty.to_text()).unwrap(), empty);
    }

    #[test]
    fn text_rejects_out_of_range_and_garbage() {
        let text = small().to_text().replace("weight = 12", "weight = 999");
        assert!(NetworkGenome::from_text(&text).is_err());
        let text = small().to_text().replace("version = 1", "version = 7");
        assert!(NetworkGenome::from_text(&text).is_err());
        assert!(NetworkGenome::from_text("not a genome").is_err());
        let text = small().to_text().replace("format = \"neurofilter-genome\"\n", "");
        assert!(NetworkGenome::from_text(&text).is_err());
    }
}
