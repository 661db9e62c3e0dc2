//! Variation operators and selection.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{
    clamp_parameters, IoCounts, NetworkGenome, Role, Synapse, DELAY_RANGE, THRESHOLD_RANGE, WEIGHT_RANGE,
};

/// Per-child probability of applying each mutation once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationRates {
    pub add_node: f64,
    pub del_node: f64,
    pub add_edge: f64,
    pub del_edge: f64,
    pub perturb_param: f64,
}

impl Default for MutationRates {
    fn default() -> Self {
        Self {
            add_node: 0.1,
            del_node: 0.1,
            add_edge: 0.4,
            del_edge: 0.3,
            perturb_param: 0.9,
        }
    }
}

impl MutationRates {
    pub const fn none() -> Self {
        Self {
            add_node: 0.0,
            del_node: 0.0,
            add_edge: 0.0,
            del_edge: 0.0,
            perturb_param: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("add_node", self.add_node),
            ("del_node", self.del_node),
            ("add_edge", self.add_edge),
            ("del_edge", self.del_edge),
            ("perturb_param", self.perturb_param),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("mutation rate {name}={v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn random_threshold(rng: &mut impl Rng) -> i32 {
    rng.gen_range(THRESHOLD_RANGE)
}

fn random_weight(rng: &mut impl Rng) -> i32 {
    rng.gen_range(WEIGHT_RANGE)
}

fn random_delay(rng: &mut impl Rng) -> i32 {
    rng.gen_range(DELAY_RANGE)
}

/// Uniformly random network with `hidden` hidden neurons and up to `edges`
/// distinct synapses. Synapses never target input neurons.
pub fn random_genome(io: IoCounts, hidden: usize, edges: usize, rng: &mut impl Rng) -> NetworkGenome {
    let mut g = NetworkGenome::new(io, 0, 0);
    for n in g.neurons_mut() {
        n.threshold = random_threshold(rng);
    }
    let first = io.total() as u32;
    for k in 0..hidden as u32 {
        g.add_hidden(first + k, random_threshold(rng))
            .expect("fresh ids are unique");
    }
    let n = g.neurons().len();
    let targets = n - io.inputs;
    let capacity = n * targets;
    let want = edges.min(capacity);
    if want == 0 {
        return g;
    }
    let ids: Vec<u32> = g.neurons().iter().map(|n| n.id).collect();
    for flat in index::sample(rng, capacity, want).into_vec() {
        let pre = ids[flat / targets];
        let post = ids[io.inputs + flat % targets];
        let syn = Synapse {
            pre,
            post,
            weight: random_weight(rng),
            delay: random_delay(rng),
        };
        g.add_synapse(syn).expect("sampled pairs are distinct");
    }
    g
}

/// Index of the fittest of `size` distinct, uniformly drawn candidates.
/// Ties go to the candidate drawn first.
pub fn tournament_select(fitnesses: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    assert!(!fitnesses.is_empty(), "tournament over an empty population");
    let size = size.clamp(1, fitnesses.len());
    let mut best: Option<usize> = None;
    for i in index::sample(rng, fitnesses.len(), size) {
        match best {
            Some(b) if fitnesses[i] <= fitnesses[b] => {}
            _ => best = Some(i),
        }
    }
    best.expect("at least one candidate")
}

/// Endpoint-preserving graph crossover.
///
/// Hidden neurons shared by both parents are kept with the threshold of a
/// randomly chosen parent; neurons unique to one parent are kept with
/// probability 1/2. Every parental synapse whose endpoints survive is
/// inherited, taking parameters from a random parent when both carry it.
pub fn crossover(a: &NetworkGenome, b: &NetworkGenome, rng: &mut impl Rng) -> Result<NetworkGenome> {
    if a.io() != b.io() {
        return Err(Error::invalid(format!(
            "parents have different io counts ({:?} vs {:?})",
            a.io(),
            b.io()
        )));
    }
    let io = a.io();
    let mut child = NetworkGenome::new(io, 0, 0);
    for (i, n) in child.neurons_mut().iter_mut().enumerate() {
        let pa = a.neurons()[i].threshold;
        let pb = b.neurons()[i].threshold;
        n.threshold = if rng.gen_bool(0.5) { pa } else { pb };
    }

    let ha: BTreeSet<u32> = a.hidden_ids().collect();
    let hb: BTreeSet<u32> = b.hidden_ids().collect();
    for &id in ha.union(&hb) {
        let threshold = match (a.neuron(id), b.neuron(id)) {
            (Some(x), Some(y)) => Some(if rng.gen_bool(0.5) { x.threshold } else { y.threshold }),
            (Some(x), None) | (None, Some(x)) => rng.gen_bool(0.5).then_some(x.threshold),
            (None, None) => unreachable!(),
        };
        if let Some(t) = threshold {
            child.add_hidden(id, t)?;
        }
    }

    type Pair<'a> = (Option<&'a Synapse>, Option<&'a Synapse>);
    let mut edges: BTreeMap<(u32, u32), Pair> = BTreeMap::new();
    for s in a.synapses() {
        edges.entry((s.pre, s.post)).or_default().0 = Some(s);
    }
    for s in b.synapses() {
        edges.entry((s.pre, s.post)).or_default().1 = Some(s);
    }
    for ((pre, post), pair) in edges {
        if child.neuron(pre).is_none() || child.neuron(post).is_none() {
            continue;
        }
        let s = match pair {
            (Some(x), Some(y)) => {
                if rng.gen_bool(0.5) {
                    x
                } else {
                    y
                }
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!(),
        };
        child.add_synapse(*s)?;
    }
    Ok(clamp_parameters(child))
}

/// Applies each structural and parameter mutation with its configured
/// probability. Input and output neurons are never removed.
pub fn mutate(mut genome: NetworkGenome, rates: &MutationRates, rng: &mut impl Rng) -> NetworkGenome {
    if rng.gen_bool(rates.add_node) {
        add_node(&mut genome, rng);
    }
    if rng.gen_bool(rates.del_node) {
        let hidden: Vec<u32> = genome.hidden_ids().collect();
        if !hidden.is_empty() {
            let id = hidden[rng.gen_range(0..hidden.len())];
            genome.remove_hidden(id).expect("hidden id exists");
        }
    }
    if rng.gen_bool(rates.add_edge) {
        add_edge(&mut genome, rng);
    }
    if rng.gen_bool(rates.del_edge) && !genome.synapses().is_empty() {
        let s = genome.synapses()[rng.gen_range(0..genome.synapses().len())];
        genome.remove_synapse(s.pre, s.post);
    }
    if rng.gen_bool(rates.perturb_param) {
        perturb(&mut genome, rng);
    }
    clamp_parameters(genome)
}

fn random_target(g: &NetworkGenome, rng: &mut impl Rng) -> u32 {
    let n = g.neurons().len();
    g.neurons()[rng.gen_range(g.n_inputs()..n)].id
}

fn random_source(g: &NetworkGenome, rng: &mut impl Rng) -> u32 {
    g.neurons()[rng.gen_range(0..g.neurons().len())].id
}

/// New hidden neuron wired with one random input edge and one random output edge.
fn add_node(g: &mut NetworkGenome, rng: &mut impl Rng) {
    let id = g.next_free_id();
    g.add_hidden(id, random_threshold(rng)).expect("fresh id");
    let pre = random_source(g, rng);
    let post = random_target(g, rng);
    let _ = g.add_synapse(Synapse {
        pre,
        post: id,
        weight: random_weight(rng),
        delay: random_delay(rng),
    });
    let _ = g.add_synapse(Synapse {
        pre: id,
        post,
        weight: random_weight(rng),
        delay: random_delay(rng),
    });
}

fn add_edge(g: &mut NetworkGenome, rng: &mut impl Rng) {
    if g.neurons().len() <= g.n_inputs() {
        return;
    }
    for _ in 0..8 {
        let pre = random_source(g, rng);
        let post = random_target(g, rng);
        if g.synapse(pre, post).is_none() {
            g.add_synapse(Synapse {
                pre,
                post,
                weight: random_weight(rng),
                delay: random_delay(rng),
            })
            .expect("endpoints exist and pair is new");
            return;
        }
    }
}

fn nudge(value: i32, step: i32, rng: &mut impl Rng) -> i32 {
    let d = rng.gen_range(1..=step);
    if rng.gen_bool(0.5) {
        value + d
    } else {
        value - d
    }
}

/// Changes one parameter, picked uniformly over all thresholds, weights and
/// delays: half the time a fresh random value, otherwise a small step.
fn perturb(g: &mut NetworkGenome, rng: &mut impl Rng) {
    let n = g.neurons().len();
    let total = n + 2 * g.synapses().len();
    let pick = rng.gen_range(0..total);
    let fresh = rng.gen_bool(0.5);
    if pick < n {
        let neuron = &mut g.neurons_mut()[pick];
        if neuron.role == Role::Input {
            // input thresholds are unused by the simulator
            return;
        }
        neuron.threshold = if fresh {
            random_threshold(rng)
        } else {
            nudge(neuron.threshold, 16, rng)
        };
    } else {
        let e = (pick - n) / 2;
        let syn = &mut g.synapses_mut()[e];
        if (pick - n).is_multiple_of(2) {
            syn.weight = if fresh {
                random_weight(rng)
            } else {
                nudge(syn.weight, 32, rng)
            };
        } else {
            syn.delay = if fresh {
                random_delay(rng)
            } else {
                nudge(syn.delay, 2, rng)
            };
        }
    }
}
