//! Independent reference implementations used as test oracles. They favor
//! obviousness over speed and share no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsearch::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, rows: usize, cols: usize, channels: usize) -> Image {
    let data = (0..rows * cols * channels).map(|_| rng.random::<u8>()).collect();
    Image::from_raw(rows, cols, channels, data).unwrap()
}

/// Triple loop over rows, columns and channels.
pub fn ssd_oracle(img: &Image, reference: &Image, x: usize, y: usize) -> u64 {
    let mut total = 0i64;
    for i in 0..reference.rows() {
        for j in 0..reference.cols() {
            for k in 0..reference.channels() {
                let d = img.get(x + i, y + j, k) as i64 - reference.get(i, j, k) as i64;
                total += d * d;
            }
        }
    }
    total as u64
}

/// Profile cost from direct window sums: `axis_rows` compares per-row sums,
/// otherwise per-column sums.
pub fn profile_oracle(img: &Image, reference: &Image, x: usize, y: usize, axis_rows: bool) -> u64 {
    let (outer, inner) = if axis_rows {
        (reference.rows(), reference.cols())
    } else {
        (reference.cols(), reference.rows())
    };
    let mut total = 0i128;
    for a in 0..outer {
        for k in 0..reference.channels() {
            let mut window = 0i128;
            let mut refsum = 0i128;
            for b in 0..inner {
                let (i, j) = if axis_rows { (a, b) } else { (b, a) };
                window += img.get(x + i, y + j, k) as i128;
                refsum += reference.get(i, j, k) as i128;
            }
            total += (window - refsum) * (window - refsum);
        }
    }
    total as u64
}

/// Luma with round-half-up on the exact rational `(299 r + 587 g + 114 b) / 1000`.
pub fn gray_oracle(r: u8, g: u8, b: u8) -> u8 {
    let num = 299 * r as u64 + 587 * g as u64 + 114 * b as u64;
    // floor(num / 1000 + 1/2)
    ((2 * num + 1000) / 2000) as u8
}

/// Best position path of a short/flat/long trader, found by enumerating all
/// `3^(T-1)` paths. Positions are -1, 0, 1; the trader starts flat.
///
/// Among optimal paths the one chosen minimizes, step by step, the rank of
/// the position relative to the one held before: keep < flat < long < short.
pub fn trader_oracle(series: &[u64], cost_fraction: f64) -> Vec<i8> {
    let steps = series.len() - 1;
    let max = *series.iter().max().unwrap();
    let min = *series.iter().min().unwrap();
    let c = cost_fraction * (max - min) as f64;
    let rank = |prev: i8, next: i8| -> u8 {
        if prev == next {
            return 0;
        }
        match next {
            0 => 1,
            1 => 2,
            _ => 3,
        }
    };
    let mut best: Option<(f64, Vec<u8>, Vec<i8>)> = None;
    let total = 3usize.pow(steps as u32);
    for code in 0..total {
        let mut path = Vec::with_capacity(steps);
        let mut rest = code;
        for _ in 0..steps {
            path.push((rest % 3) as i8 - 1);
            rest /= 3;
        }
        let mut profit = 0.0;
        let mut prev = 0i8;
        let mut ranks = Vec::with_capacity(steps);
        for (t, &s) in path.iter().enumerate() {
            if s != prev {
                profit -= c;
            }
            profit += s as f64 * (series[t + 1] as f64 - series[t] as f64);
            ranks.push(rank(prev, s));
            prev = s;
        }
        let better = match &best {
            None => true,
            Some((p, r, _)) => {
                let tol = 1e-9 * (1.0 + p.abs().max(profit.abs()));
                profit > p + tol || ((profit - p).abs() <= tol && ranks < *r)
            }
        };
        if better {
            best = Some((profit, ranks, path));
        }
    }
    best.unwrap().2
}

/// Indices where the oracle path changes position (starting from flat).
pub fn oracle_instants(path: &[i8]) -> Vec<usize> {
    let mut prev = 0;
    let mut out = Vec::new();
    for (t, &s) in path.iter().enumerate() {
        if s != prev {
            out.push(t);
        }
        prev = s;
    }
    out
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn closed_length(points: &[[f64; 2]], order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| dist(points[order[i]], points[order[(i + 1) % n]])).sum()
}

/// Shortest closed tour by trying every permutation that starts at point 0.
pub fn brute_force_tour(points: &[[f64; 2]]) -> f64 {
    fn recurse(points: &[[f64; 2]], order: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
        if order.len() == points.len() {
            *best = best.min(closed_length(points, order));
            return;
        }
        for i in 1..points.len() {
            if !used[i] {
                used[i] = true;
                order.push(i);
                recurse(points, order, used, best);
                order.pop();
                used[i] = false;
            }
        }
    }
    if points.len() < 2 {
        return 0.0;
    }
    let mut used = vec![false; points.len()];
    used[0] = true;
    let mut best = f64::INFINITY;
    recurse(points, &mut vec![0], &mut used, &mut best);
    best
}

/// Whether the two `h`x`w` boxes share positive area.
pub fn boxes_overlap(a: (usize, usize), b: (usize, usize), h: usize, w: usize) -> bool {
    let rows = a.0 < b.0 + h && b.0 < a.0 + h;
    let cols = a.1 < b.1 + w && b.1 < a.1 + w;
    rows && cols
}
