//! Discrete-time, event-driven simulation of a [`NetworkGenome`].
//!
//! Per timestep `t`:
//!
//! 1. input neurons fire iff their raster channel is set at `t`; the bias
//!    input fires when `t % period == 0`;
//! 2. every synapse whose source fired at `t - delay - 1` delivers its weight
//!    to a non-input target;
//! 3. a target whose potential reaches its threshold fires and resets to 0;
//! 4. under [`LeakMode::Full`] a potential only carries over to the next step
//!    if charge arrives again in that step, otherwise it drops to 0.

use serde::{Deserialize, Serialize};

use crate::cluster::ClassLabel;
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::snn::genome::{NetworkGenome, DELAY_RANGE};

/// Slots in the delivery ring: largest delay plus transit plus the current step.
const RING: usize = *DELAY_RANGE.end() as usize + 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakMode {
    /// Potential is lost on any step without arriving charge.
    #[default]
    Full,
    /// Potential persists until the neuron fires.
    None,
}

/// Constant-rate spike source wired to the last input neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BiasSource {
    pub enabled: bool,
    pub period: usize,
}

impl BiasSource {
    pub const fn disabled() -> Self {
        Self {
            enabled: false,
            period: 1,
        }
    }

    pub const fn every(period: usize) -> Self {
        Self { enabled: true, period }
    }

    fn fires_at(&self, t: usize) -> bool {
        self.enabled && t.is_multiple_of(self.period)
    }
}

impl Default for BiasSource {
    fn default() -> Self {
        Self::disabled()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    pub output_spike_counts: Vec<u32>,
    pub total_timesteps: usize,
}

/// Class with the most output spikes; ties (including no spikes) go to low.
pub fn decode_output(result: &SimResult) -> ClassLabel {
    let c = &result.output_spike_counts;
    if c.len() >= 2 && c[1] > c[0] {
        ClassLabel::High
    } else {
        ClassLabel::Low
    }
}

/// Runs one simulation with full leak.
pub fn simulate(genome: &NetworkGenome, raster: &SpikeRaster, timesteps: usize, bias: BiasSource) -> Result<SimResult> {
    Simulator::new(genome, bias, LeakMode::Full)?.run(raster, timesteps)
}

/// A genome compiled to index form, with scratch buffers reused across runs.
#[derive(Clone, Debug)]
pub struct Simulator {
    n_inputs: usize,
    n_outputs: usize,
    thresholds: Vec<i64>,
    edge_start: Vec<usize>,
    edge_target: Vec<u32>,
    edge_weight: Vec<i32>,
    edge_delay: Vec<u8>,
    bias: BiasSource,
    leak: LeakMode,
    // scratch
    potential: Vec<i64>,
    last_charged: Vec<usize>,
    ring: Vec<Vec<(u32, i32)>>,
    touched: Vec<u32>,
    fired: Vec<u32>,
}

impl Simulator {
    pub fn new(genome: &NetworkGenome, bias: BiasSource, leak: LeakMode) -> Result<Self> {
        if bias.enabled && bias.period == 0 {
            return Err(Error::invalid("bias period must be at least 1"));
        }
        if bias.enabled && genome.n_inputs() == 0 {
            return Err(Error::invalid("bias needs an input neuron to drive"));
        }
        let neurons = genome.neurons();
        let n = neurons.len();
        let index_of = |id: u32| {
            genome
                .neuron_index(id)
                .ok_or_else(|| Error::Genome(format!("synapse references missing neuron {id}")))
        };
        // Synapses are sorted by (pre, post) and neurons by id, so a single
        // pass builds the CSR rows in order.
        let mut edge_start = vec![0usize; n + 1];
        let mut edge_target = Vec::with_capacity(genome.synapses().len());
        let mut edge_weight = Vec::with_capacity(genome.synapses().len());
        let mut edge_delay = Vec::with_capacity(genome.synapses().len());
        let mut counts = vec![0usize; n];
        for s in genome.synapses() {
            counts[index_of(s.pre)?] += 1;
        }
        for i in 0..n {
            edge_start[i + 1] = edge_start[i] + counts[i];
        }
        for s in genome.synapses() {
            let post = index_of(s.post)?;
            if !DELAY_RANGE.contains(&s.delay) {
                return Err(Error::Genome(format!("delay {} out of range", s.delay)));
            }
            edge_target.push(post as u32);
            edge_weight.push(s.weight);
            edge_delay.push(s.delay as u8);
        }
        Ok(Self {
            n_inputs: genome.n_inputs(),
            n_outputs: genome.n_outputs(),
            thresholds: neurons.iter().map(|n| i64::from(n.threshold)).collect(),
            edge_start,
            edge_target,
            edge_weight,
            edge_delay,
            bias,
            leak,
            potential: vec![0; n],
            last_charged: vec![usize::MAX; n],
            ring: vec![Vec::new(); RING],
            touched: Vec::new(),
            fired: Vec::new(),
        })
    }

    /// Raster channels expected: one per input, minus the bias input.
    pub fn expected_channels(&self) -> usize {
        self.n_inputs - usize::from(self.bias.enabled)
    }

    pub fn run(&mut self, raster: &SpikeRaster, timesteps: usize) -> Result<SimResult> {
        self.run_with(raster, timesteps, |_, _| {})
    }

    /// Like [`run`](Self::run), also returning the timesteps at which each
    /// output neuron fired.
    pub fn run_traced(&mut self, raster: &SpikeRaster, timesteps: usize) -> Result<(SimResult, Vec<Vec<usize>>)> {
        let mut trace = vec![Vec::new(); self.n_outputs];
        let res = self.run_with(raster, timesteps, |k, t| trace[k].push(t))?;
        Ok((res, trace))
    }

    fn run_with(
        &mut self,
        raster: &SpikeRaster,
        timesteps: usize,
        mut on_output: impl FnMut(usize, usize),
    ) -> Result<SimResult> {
        let channels = self.expected_channels();
        if raster.n_channels() != channels {
            return Err(Error::ShapeMismatch(format!(
                "raster has {} channels, network expects {channels}",
                raster.n_channels()
            )));
        }
        if timesteps > raster.n_timesteps() {
            return Err(Error::ShapeMismatch(format!(
                "asked for {timesteps} steps, raster has {}",
                raster.n_timesteps()
            )));
        }
        self.reset();
        let out_lo = self.n_inputs;
        let out_hi = self.n_inputs + self.n_outputs;
        let mut counts = vec![0u32; self.n_outputs];
        let by_step = raster.by_timestep();
        let bias_idx = self.n_inputs.wrapping_sub(1) as u32;

        for (t, step) in by_step.iter().enumerate().take(timesteps) {
            self.fired.clear();
            self.fired.extend(step.iter().map(|&c| c as u32));
            if self.bias.fires_at(t) {
                self.fired.push(bias_idx);
            }

            let slot = t % RING;
            let arrivals = std::mem::take(&mut self.ring[slot]);
            self.touched.clear();
            for &(target, w) in &arrivals {
                let j = target as usize;
                if j < self.n_inputs {
                    continue;
                }
                if self.last_charged[j] != t {
                    let carried = self.leak == LeakMode::None || (t > 0 && self.last_charged[j] == t - 1);
                    if !carried {
                        self.potential[j] = 0;
                    }
                    self.last_charged[j] = t;
                    self.touched.push(target);
                }
                self.potential[j] += i64::from(w);
            }
            let mut recycled = arrivals;
            recycled.clear();
            self.ring[slot] = recycled;

            for &target in &self.touched {
                let j = target as usize;
                if self.potential[j] >= self.thresholds[j] {
                    self.potential[j] = 0;
                    self.fired.push(target);
                    if (out_lo..out_hi).contains(&j) {
                        counts[j - out_lo] += 1;
                        on_output(j - out_lo, t);
                    }
                }
            }

            for &src in &self.fired {
                let s = src as usize;
                for e in self.edge_start[s]..self.edge_start[s + 1] {
                    let at = (t + self.edge_delay[e] as usize + 1) % RING;
                    self.ring[at].push((self.edge_target[e], self.edge_weight[e]));
                }
            }
        }
        Ok(SimResult {
            output_spike_counts: counts,
            total_timesteps: timesteps,
        })
    }

    fn reset(&mut self) {
        self.potential.iter_mut().for_each(|p| *p = 0);
        self.last_charged.iter_mut().for_each(|p| *p = usize::MAX);
        self.ring.iter_mut().for_each(Vec::clear);
    }
}
