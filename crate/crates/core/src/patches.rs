//! Variable-size patches: accepted windows are grouped by single-linkage
//! clustering of their centers and each group is outlined by a closed tour.

use serde::{Deserialize, Serialize};

use crate::search::Candidate;

/// Default linkage distance in units of the larger reference side.
pub const DEFAULT_LINK_FACTOR: f64 = 2.0;

/// A group of accepted windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices into the candidate list that was clustered.
    pub members: Vec<usize>,
    /// Window centers `(x + rows / 2, y + cols / 2)` in member order.
    pub centers: Vec<[f64; 2]>,
}

/// Window center in real pixel coordinates.
pub fn center(c: &Candidate, ref_rows: usize, ref_cols: usize) -> [f64; 2] {
    [c.x as f64 + ref_rows as f64 / 2.0, c.y as f64 + ref_cols as f64 / 2.0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn rank_order(candidates: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        ca.cost.total_cmp(&cb.cost).then(ca.x.cmp(&cb.x)).then(ca.y.cmp(&cb.y))
    });
    order
}

/// Single-linkage clustering: two windows share a cluster when a chain of
/// centers, each within `link_factor * max(ref_rows, ref_cols)` of the next,
/// connects them.
///
/// Candidates are absorbed in `(cost, x, y)` order; a new candidate merges
/// every existing cluster it links to. Clusters are listed in order of their
/// best member.
pub fn cluster_candidates(
    candidates: &[Candidate],
    ref_rows: usize,
    ref_cols: usize,
    link_factor: f64,
) -> Vec<Cluster> {
    let threshold = link_factor * ref_rows.max(ref_cols) as f64;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in rank_order(candidates) {
        let here = center(&candidates[i], ref_rows, ref_cols);
        let (linked, rest): (Vec<Vec<usize>>, Vec<Vec<usize>>) = clusters.into_iter().partition(|members| {
            members
                .iter()
                .any(|&j| dist(here, center(&candidates[j], ref_rows, ref_cols)) <= threshold)
        });
        clusters = rest;
        let mut merged: Vec<usize> = linked.into_iter().flatten().collect();
        merged.push(i);
        clusters.push(merged);
    }
    let order = rank_order(candidates);
    let rank_of = |i: usize| order.iter().position(|&j| j == i).unwrap();
    let mut clusters: Vec<Vec<usize>> = clusters
        .into_iter()
        .map(|mut members| {
            members.sort_by_key(|&i| rank_of(i));
            members
        })
        .collect();
    clusters.sort_by_key(|members| rank_of(members[0]));
    clusters
        .into_iter()
        .map(|members| Cluster {
            centers: members
                .iter()
                .map(|&i| center(&candidates[i], ref_rows, ref_cols))
                .collect(),
            members,
        })
        .collect()
}

/// Length of the closed tour visiting `points` in `order`.
pub fn tour_length(points: &[[f64; 2]], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    (0..order.len())
        .map(|i| dist(points[order[i]], points[order[(i + 1) % order.len()]]))
        .sum()
}

/// Greedy tour starting at the lexicographically smallest point; ties go to
/// the lower index.
pub fn nearest_neighbor_tour(points: &[[f64; 2]]) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let start = (0..points.len())
        .min_by(|&a, &b| {
            points[a][0]
                .total_cmp(&points[b][0])
                .then(points[a][1].total_cmp(&points[b][1]))
                .then(a.cmp(&b))
        })
        .unwrap();
    let mut visited = vec![false; points.len()];
    visited[start] = true;
    let mut tour = vec![start];
    while tour.len() < points.len() {
        let current = points[*tour.last().unwrap()];
        let next = (0..points.len())
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| {
                dist(current, points[a])
                    .total_cmp(&dist(current, points[b]))
                    .then(a.cmp(&b))
            })
            .unwrap();
        visited[next] = true;
        tour.push(next);
    }
    tour
}

const IMPROVEMENT_EPS: f64 = 1e-9;

/// Applies improving 2-exchanges (segment reversals) until none remains.
pub fn two_opt(points: &[[f64; 2]], mut tour: Vec<usize>) -> Vec<usize> {
    let n = tour.len();
    if n < 4 {
        return tour;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                // edges (i, i+1) and (j, j+1); skip the pair sharing a node
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (points[tour[i]], points[tour[i + 1]]);
                let (c, d) = (points[tour[j]], points[tour[(j + 1) % n]]);
                let delta = dist(a, c) + dist(b, d) - dist(a, b) - dist(c, d);
                if delta < -IMPROVEMENT_EPS {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    tour
}

/// Closed outline of a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchContour {
    /// Polygon vertices `[x, y]`; the last vertex connects back to the first.
    pub vertices: Vec<[f64; 2]>,
    /// Perimeter in pixels.
    pub length: f64,
}

/// Nearest-neighbor tour through `points` improved by 2-opt.
pub fn tsp_contour(points: &[[f64; 2]]) -> PatchContour {
    let order = two_opt(points, nearest_neighbor_tour(points));
    PatchContour {
        vertices: order.iter().map(|&i| points[i]).collect(),
        length: tour_length(points, &order),
    }
}

/// A cluster of accepted windows with its outline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub members: Vec<usize>,
    pub contour: PatchContour,
}

fn bounding_contour(candidates: &[Candidate], members: &[usize], ref_rows: usize, ref_cols: usize) -> PatchContour {
    let x0 = members.iter().map(|&i| candidates[i].x).min().unwrap() as f64;
    let y0 = members.iter().map(|&i| candidates[i].y).min().unwrap() as f64;
    let x1 = members.iter().map(|&i| candidates[i].x + ref_rows).max().unwrap() as f64;
    let y1 = members.iter().map(|&i| candidates[i].y + ref_cols).max().unwrap() as f64;
    PatchContour {
        vertices: vec![[x0, y0], [x0, y1], [x1, y1], [x1, y0]],
        length: 2.0 * ((x1 - x0) + (y1 - y0)),
    }
}

/// Clusters the candidates and outlines each cluster. Clusters with fewer
/// than three windows are outlined by the bounding box of their windows.
pub fn build_patches(candidates: &[Candidate], ref_rows: usize, ref_cols: usize, link_factor: f64) -> Vec<Patch> {
    cluster_candidates(candidates, ref_rows, ref_cols, link_factor)
        .into_iter()
        .map(|cluster| {
            let contour = if cluster.members.len() < 3 {
                bounding_contour(candidates, &cluster.members, ref_rows, ref_cols)
            } else {
                tsp_contour(&cluster.centers)
            };
            Patch {
                members: cluster.members,
                contour,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::CostSource;

    fn cand(x: usize, y: usize) -> Candidate {
        Candidate {
            x,
            y,
            cost: 0.0,
            source: CostSource::Full,
        }
    }

    #[test]
    fn singleton() {
        let clusters = cluster_candidates(&[cand(3, 4)], 2, 2, 2.0);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].centers, vec![[4.0, 5.0]]);
    }

    #[test]
    fn threshold_is_inclusive() {
        // ref 5x5, factor 2 -> link distance 10
        assert_eq!(cluster_candidates(&[cand(0, 0), cand(0, 10)], 5, 5, 2.0).len(), 1);
        assert_eq!(cluster_candidates(&[cand(0, 0), cand(0, 11)], 5, 5, 2.0).len(), 2);
    }

    #[test]
    fn bridging_candidate_merges_clusters() {
        // the third candidate links the first two, which are far apart
        let cands = [cand(0, 0), cand(0, 18), cand(0, 9)];
        let clusters = cluster_candidates(&cands, 5, 5, 2.0);
        assert_eq!(clusters.len(), 1);
        // equal costs rank by position
        assert_eq!(clusters[0].members, vec![0, 2, 1]);
    }

    #[test]
    fn empty_inputs() {
        assert!(cluster_candidates(&[], 3, 3, 2.0).is_empty());
        assert!(build_patches(&[], 3, 3, 2.0).is_empty());
        assert!(nearest_neighbor_tour(&[]).is_empty());
    }

    #[test]
    fn degenerate_contours() {
        assert_eq!(tsp_contour(&[[1.0, 1.0]]).length, 0.0);
        let seg = tsp_contour(&[[0.0, 0.0], [3.0, 4.0]]);
        assert_eq!(seg.vertices.len(), 2);
        assert!((seg.length - 10.0).abs() < 1e-12);
    }

    #[test]
    fn triangle() {
        let contour = tsp_contour(&[[0.0, 0.0], [0.0, 3.0], [4.0, 0.0]]);
        assert_eq!(contour.vertices.len(), 3);
        assert!((contour.length - 12.0).abs() < 1e-12);
    }

    #[test]
    fn square_uses_perimeter() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        assert!((tsp_contour(&pts).length - 4.0).abs() < 1e-12);
        // 0,1,2,3 is the crossing tour
        let fixed = two_opt(&pts, vec![0, 1, 2, 3]);
        assert!((tour_length(&pts, &fixed) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_patch_is_its_box() {
        let patches = build_patches(&[cand(10, 20)], 4, 6, 2.0);
        assert_eq!(patches.len(), 1);
        assert_eq!(
            patches[0].contour.vertices,
            vec![[10.0, 20.0], [10.0, 26.0], [14.0, 26.0], [14.0, 20.0]]
        );
    }
}
