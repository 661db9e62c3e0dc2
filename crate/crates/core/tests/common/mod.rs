//! Shared test support: a dense-state reference simulator and generators.
#![allow(dead_code)]

use std::collections::HashMap;

use neurofilter::snn::{Role, Synapse};
use neurofilter::{BiasSource, IoCounts, LeakMode, NetworkGenome, SpikeRaster};
use rand::Rng;

/// Straightforward simulator over a dense `[t][neuron]` spike history.
///
/// Charge from neuron `i` fired at step `s` reaches its targets at
/// `s + delay + 1`. Potentials are reset after firing and, with full
/// leak, whenever a step without arriving charge passes.
pub fn reference_simulate(genome: &NetworkGenome, raster: &SpikeRaster, bias: BiasSource, leak: LeakMode) -> Vec<u32> {
    let neurons = genome.neurons();
    let n = neurons.len();
    let pos: HashMap<u32, usize> = neurons.iter().enumerate().map(|(i, x)| (x.id, i)).collect();
    let inputs: Vec<usize> = (0..n).filter(|&i| neurons[i].role == Role::Input).collect();
    let outputs: Vec<usize> = (0..n).filter(|&i| neurons[i].role == Role::Output).collect();
    let is_input: Vec<bool> = neurons.iter().map(|x| x.role == Role::Input).collect();
    // incoming[j] = (source position, weight, delay)
    let mut incoming: Vec<Vec<(usize, i64, usize)>> = vec![Vec::new(); n];
    for s in genome.synapses() {
        incoming[pos[&s.post]].push((pos[&s.pre], i64::from(s.weight), s.delay as usize));
    }

    let steps = raster.n_timesteps();
    let mut fired = vec![vec![false; n]; steps];
    let mut v = vec![0i64; n];
    let mut charged_prev = vec![false; n];
    let mut counts = vec![0u32; outputs.len()];

    for t in 0..steps {
        for (k, &i) in inputs.iter().enumerate() {
            let is_bias = bias.enabled && k == inputs.len() - 1;
            fired[t][i] = if is_bias {
                t % bias.period == 0
            } else {
                raster.get(k, t)
            };
        }
        let mut charged_now = vec![false; n];
        for j in 0..n {
            if is_input[j] {
                continue;
            }
            let mut arrived = false;
            let mut sum = 0i64;
            for &(src, w, d) in &incoming[j] {
                if t > d && fired[t - d - 1][src] {
                    arrived = true;
                    sum += w;
                }
            }
            if !arrived {
                continue;
            }
            charged_now[j] = true;
            if leak == LeakMode::Full && !charged_prev[j] {
                v[j] = 0;
            }
            v[j] += sum;
            if v[j] >= i64::from(neurons[j].threshold) {
                v[j] = 0;
                fired[t][j] = true;
            }
        }
        charged_prev = charged_now;
    }
    for (k, &o) in outputs.iter().enumerate() {
        counts[k] = (0..steps).filter(|&t| fired[t][o]).count() as u32;
    }
    counts
}

/// Small arbitrary network: any edge between existing neurons is allowed,
/// including self loops and edges into inputs. Hidden ids are sparse.
pub fn small_genome(rng: &mut impl Rng, max_neurons: usize, max_synapses: usize) -> NetworkGenome {
    let inputs = rng.gen_range(1..=4usize);
    let outputs = 2;
    let io = IoCounts::new(inputs, outputs);
    let mut g = NetworkGenome::new(io, 0, 0);
    for x in g.neurons_mut() {
        x.threshold = rng.gen_range(0..=255);
    }
    let hidden = rng.gen_range(0..=max_neurons - io.total());
    let mut next = io.total() as u32;
    for _ in 0..hidden {
        next += rng.gen_range(1..4);
        g.add_hidden(next, rng.gen_range(0..=40)).unwrap();
    }
    let ids: Vec<u32> = g.neurons().iter().map(|x| x.id).collect();
    let want = rng.gen_range(0..=max_synapses);
    for _ in 0..want * 3 {
        if g.synapses().len() == want {
            break;
        }
        let syn = Synapse {
            pre: ids[rng.gen_range(0..ids.len())],
            post: ids[rng.gen_range(0..ids.len())],
            weight: rng.gen_range(-256..=255),
            delay: rng.gen_range(0..=15),
        };
        let _ = g.add_synapse(syn);
    }
    g
}

pub fn random_raster(rng: &mut impl Rng, channels: usize, steps: usize, density: f64) -> SpikeRaster {
    let mut r = SpikeRaster::silent(channels, steps);
    for c in 0..channels {
        for t in 0..steps {
            if rng.gen_bool(density) {
                r.set(c, t, true);
            }
        }
    }
    r
}
