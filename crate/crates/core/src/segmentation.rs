//! Trading-inspired a-posteriori segmentation of time series.
//!
//! A hindsight-optimal trader may be short, flat or long in a series. Holding
//! position `s` over `[t, t + 1)` earns `s * (v[t + 1] - v[t])`, and every
//! change of position costs `c = eps * (max - min)`. The instants at which the
//! optimal trader changes position mark the structural changes of the series.
//!
//! For a multichannel series the per-channel instants are united and near
//! duplicates merged. The cost fraction `eps` is raised geometrically until at
//! most `k_max` instants remain.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::MultiSeries;

/// Hyperparameters of [`segment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AptsParams {
    /// First cost fraction tried.
    pub eps_min: f64,
    /// Largest cost fraction the sweep may reach.
    pub eps_max: f64,
    /// Growth factor of the cost fraction between sweep steps.
    pub gamma_mult: f64,
    /// Merge radius is `max(gamma_close_frac * T, gamma_close_min)` indices.
    pub gamma_close_frac: f64,
    pub gamma_close_min: f64,
    /// Upper bound on returned instants.
    pub k_max: usize,
}

impl Default for AptsParams {
    fn default() -> Self {
        Self {
            eps_min: 1e-4,
            eps_max: 1.0,
            gamma_mult: 2.0,
            gamma_close_frac: 0.01,
            gamma_close_min: 1.0,
            k_max: 20,
        }
    }
}

impl AptsParams {
    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    /// Merge radius for a series of length `len`.
    pub fn gamma_close(&self, len: usize) -> f64 {
        (self.gamma_close_frac * len as f64).max(self.gamma_close_min)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidParameter(msg.to_owned()));
        if !(self.eps_min > 0.0 && self.eps_min.is_finite()) {
            return fail("eps_min must be positive");
        }
        if !(self.eps_max >= self.eps_min && self.eps_max.is_finite()) {
            return fail("eps_max must be at least eps_min");
        }
        if !(self.gamma_mult > 1.0 && self.gamma_mult.is_finite()) {
            return fail("gamma_mult must exceed 1");
        }
        if !(self.gamma_close_frac >= 0.0 && self.gamma_close_min > 0.0) {
            return fail("gamma_close terms must be nonnegative with a positive floor");
        }
        if self.k_max == 0 {
            return fail("k_max must be at least 1");
        }
        Ok(())
    }
}

/// Trader position over one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Short,
    Flat,
    Long,
}

impl Position {
    const ALL: [Position; 3] = [Position::Short, Position::Flat, Position::Long];

    fn sign(self) -> f64 {
        match self {
            Position::Short => -1.0,
            Position::Flat => 0.0,
            Position::Long => 1.0,
        }
    }

    fn slot(self) -> usize {
        match self {
            Position::Short => 0,
            Position::Flat => 1,
            Position::Long => 2,
        }
    }

    /// Candidate next positions, most preferred first: keep the current
    /// position, then flat, long, short.
    fn preference(current: Position) -> [Position; 3] {
        let mut order = [current; 3];
        let mut i = 1;
        for p in [Position::Flat, Position::Long, Position::Short] {
            if p != current {
                order[i] = p;
                i += 1;
            }
        }
        order
    }
}

fn near_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Optimal position path for one channel; `path[t]` is held over `[t, t + 1)`.
pub fn optimal_positions(series: &[u64], cost_fraction: f64) -> Result<Vec<Position>> {
    let len = series.len();
    if len < 2 {
        return Err(Error::SeriesTooShort { len });
    }
    if !(cost_fraction > 0.0 && cost_fraction.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cost fraction must be positive, got {cost_fraction}"
        )));
    }
    let max = *series.iter().max().unwrap();
    let min = *series.iter().min().unwrap();
    if max == min {
        return Ok(vec![Position::Flat; len - 1]);
    }
    let switch_cost = cost_fraction * (max - min) as f64;
    let steps = len - 1;

    // value[t][prev]: best profit from step t on, having held `prev` before t.
    let mut value = vec![[0.0f64; 3]; steps + 1];
    for t in (0..steps).rev() {
        let delta = series[t + 1] as f64 - series[t] as f64;
        for prev in Position::ALL {
            value[t][prev.slot()] = Position::ALL
                .iter()
                .map(|&s| step_value(prev, s, delta, switch_cost) + value[t + 1][s.slot()])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    let mut path = Vec::with_capacity(steps);
    let mut prev = Position::Flat;
    for t in 0..steps {
        let delta = series[t + 1] as f64 - series[t] as f64;
        let best = value[t][prev.slot()];
        let chosen = Position::preference(prev)
            .into_iter()
            .find(|&s| near_equal(step_value(prev, s, delta, switch_cost) + value[t + 1][s.slot()], best))
            .expect("the maximizing position is among the candidates");
        path.push(chosen);
        prev = chosen;
    }
    Ok(path)
}

fn step_value(prev: Position, next: Position, delta: f64, switch_cost: f64) -> f64 {
    let fee = if prev == next { 0.0 } else { switch_cost };
    next.sign() * delta - fee
}

/// Time indices at which the optimal single-channel trader changes position.
pub fn trade_instants(series: &[u64], cost_fraction: f64) -> Result<Vec<usize>> {
    let path = optimal_positions(series, cost_fraction)?;
    let mut prev = Position::Flat;
    let mut instants = Vec::new();
    for (t, &position) in path.iter().enumerate() {
        if position != prev {
            instants.push(t);
        }
        prev = position;
    }
    Ok(instants)
}

/// Result of [`segment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Sorted, unique instants in `0..len`.
    pub instants: Vec<usize>,
    /// Cost fraction at which the sweep stopped.
    pub cost_fraction: f64,
    /// Set when `k_max` was unreachable and the largest-change instants were kept.
    pub truncated: bool,
}

impl Segmentation {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "instant")?;
        for t in &self.instants {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }
}

/// Keeps an instant only if it lies at least `radius` after the last kept one.
pub fn coalesce(sorted: &[usize], radius: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::with_capacity(sorted.len());
    for &t in sorted {
        match kept.last() {
            Some(&last) if ((t - last) as f64) < radius => {}
            _ => kept.push(t),
        }
    }
    kept
}

fn instants_at(series: &MultiSeries, cost_fraction: f64, radius: f64) -> Result<Vec<usize>> {
    let mut union = Vec::new();
    for k in 0..series.channels() {
        union.extend(trade_instants(&series.channel(k), cost_fraction)?);
    }
    union.sort_unstable();
    union.dedup();
    Ok(coalesce(&union, radius))
}

/// Absolute forward change at `t`, summed over channels.
fn change_at(series: &MultiSeries, t: usize) -> u64 {
    if t + 1 >= series.len() {
        return 0;
    }
    (0..series.channels())
        .map(|k| series.get(t + 1, k).abs_diff(series.get(t, k)))
        .sum()
}

/// Segments a multichannel series into at most `params.k_max` instants.
pub fn segment(series: &MultiSeries, params: &AptsParams) -> Result<Segmentation> {
    params.validate()?;
    let len = series.len();
    if len < 2 {
        return Err(Error::SeriesTooShort { len });
    }
    let radius = params.gamma_close(len);
    let mut cost_fraction = params.eps_min;
    loop {
        let instants = instants_at(series, cost_fraction, radius)?;
        if instants.len() <= params.k_max {
            return Ok(Segmentation {
                instants,
                cost_fraction,
                truncated: false,
            });
        }
        let next = cost_fraction * params.gamma_mult;
        if next <= params.eps_max {
            cost_fraction = next;
            continue;
        }
        log::debug!(
            "segmentation kept {} instants at eps {cost_fraction}; truncating to {}",
            instants.len(),
            params.k_max
        );
        let mut ranked = instants;
        ranked.sort_by(|&a, &b| change_at(series, b).cmp(&change_at(series, a)).then(a.cmp(&b)));
        ranked.truncate(params.k_max);
        ranked.sort_unstable();
        return Ok(Segmentation {
            instants: ranked,
            cost_fraction,
            truncated: true,
        });
    }
}
