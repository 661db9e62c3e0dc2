use crate::error::{Error, Result};

/// Boolean spike sequences on a fixed number of timesteps.
///
/// Channels come in pairs: channel `2g` carries rising-edge spikes of group
/// (or pixel) `g`, channel `2g + 1` falling-edge spikes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpikeRaster {
    n_channels: usize,
    n_timesteps: usize,
    bits: Vec<bool>,
}

impl SpikeRaster {
    pub fn silent(n_channels: usize, n_timesteps: usize) -> Self {
        Self {
            n_channels,
            n_timesteps,
            bits: vec![false; n_channels * n_timesteps],
        }
    }

    pub fn from_channels(channels: Vec<Vec<bool>>, n_timesteps: usize) -> Result<Self> {
        let mut r = Self::silent(channels.len(), n_timesteps);
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != n_timesteps {
                return Err(Error::ShapeMismatch(format!(
                    "channel {i} has {} steps, expected {n_timesteps}",
                    ch.len()
                )));
            }
            r.bits[i * n_timesteps..(i + 1) * n_timesteps].copy_from_slice(ch);
        }
        Ok(r)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn channel(&self, ch: usize) -> &[bool] {
        &self.bits[ch * self.n_timesteps..(ch + 1) * self.n_timesteps]
    }

    pub(crate) fn channel_mut(&mut self, ch: usize) -> &mut [bool] {
        &mut self.bits[ch * self.n_timesteps..(ch + 1) * self.n_timesteps]
    }

    pub fn get(&self, ch: usize, t: usize) -> bool {
        self.bits[ch * self.n_timesteps + t]
    }

    pub fn set(&mut self, ch: usize, t: usize, v: bool) {
        self.bits[ch * self.n_timesteps + t] = v;
    }

    pub fn channels(&self) -> impl Iterator<Item = &[bool]> {
        self.bits.chunks(self.n_timesteps.max(1)).take(self.n_channels)
    }

    pub fn spike_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// `(channel, timestep)` for every spike, channel-major.
    pub fn events(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ch in 0..self.n_channels {
            for (t, &b) in self.channel(ch).iter().enumerate() {
                if b {
                    out.push((ch, t));
                }
            }
        }
        out
    }

    /// Spikes listed per timestep; the simulator's input view.
    pub fn by_timestep(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_timesteps];
        for (ch, t) in self.events() {
            out[t].push(ch);
        }
        out
    }
}
