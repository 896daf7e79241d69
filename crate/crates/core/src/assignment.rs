//! Optimal matching of detections to tracks over the admissible cost matrix.
//!
//! [`solve`] returns a maximum-cardinality matching over the admissible
//! cells with minimum total cost among such matchings, via shortest
//! augmenting paths with dual potentials. Inadmissible cells are never
//! traversed — there is no large-sentinel encoding, so the "never match an
//! inadmissible pair" guarantee is structural rather than numeric.

use crate::affinity::CostMatrix;

/// Result of one association round.
///
/// Each detection and each track index appears at most once across
/// `matches`; the unmatched lists complete the partition of both index
/// ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Matched `(detection index, track index, cost)` triples, sorted by
    /// detection index.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self) -> f64 {
        self.matches.iter().map(|&(_, _, c)| c).sum()
    }
}

/// Minimum-cost maximum-cardinality assignment over admissible cells.
///
/// Successive shortest augmenting paths with dual potentials: each round
/// runs a multi-source Dijkstra from every still-unmatched row, so the
/// k-th round yields the minimum-cost matching of cardinality k. The final
/// round failing to reach a free column certifies maximum cardinality.
/// Rectangular matrices (including zero rows or columns) are supported;
/// rows or columns unreachable through admissible cells stay unmatched.
/// Iteration order is fixed, so identical inputs produce identical
/// outputs.
pub fn solve(m: &CostMatrix) -> Assignment {
    let rows = m.rows();
    let cols = m.cols();
    let mut row_match: Vec<Option<usize>> = vec![None; rows];
    let mut col_match: Vec<Option<usize>> = vec![None; cols];
    // Dual potentials keeping reduced costs of admissible cells non-negative
    // and of matched cells exactly zero.
    let mut u = vec![0.0f64; rows];
    let mut v = vec![0.0f64; cols];

    let mut dist = vec![0.0f64; cols];
    let mut prev_row = vec![usize::MAX; cols];
    let mut visited = vec![false; cols];
    let mut row_dist = vec![0.0f64; rows];
    let mut row_reached = vec![false; rows];

    loop {
        // Multi-source initialization: every free row is a source at
        // distance zero. Lowest index wins ties, keeping runs reproducible.
        for j in 0..cols {
            dist[j] = f64::INFINITY;
            prev_row[j] = usize::MAX;
            visited[j] = false;
        }
        row_reached.iter_mut().for_each(|r| *r = false);
        for i in 0..rows {
            if row_match[i].is_some() {
                continue;
            }
            row_reached[i] = true;
            row_dist[i] = 0.0;
            for j in 0..cols {
                if m.is_admissible(i, j) {
                    let rc = m.cost(i, j) - u[i] - v[j];
                    if rc < dist[j] {
                        dist[j] = rc;
                        prev_row[j] = i;
                    }
                }
            }
        }

        let mut sink = usize::MAX;
        let mut sink_dist = 0.0;
        loop {
            let mut jmin = usize::MAX;
            let mut dmin = f64::INFINITY;
            for j in 0..cols {
                if !visited[j] && dist[j] < dmin {
                    dmin = dist[j];
                    jmin = j;
                }
            }
            if jmin == usize::MAX {
                break; // no reachable unvisited column
            }
            visited[jmin] = true;
            match col_match[jmin] {
                None => {
                    sink = jmin;
                    sink_dist = dmin;
                    break;
                }
                Some(r) => {
                    // Matched edges carry zero reduced cost, so stepping
                    // back to row `r` is free.
                    row_reached[r] = true;
                    row_dist[r] = dmin;
                    for j in 0..cols {
                        if !visited[j] && m.is_admissible(r, j) {
                            let nd = dmin + m.cost(r, j) - u[r] - v[j];
                            if nd < dist[j] {
                                dist[j] = nd;
                                prev_row[j] = r;
                            }
                        }
                    }
                }
            }
        }
        if sink == usize::MAX {
            break; // maximum matching reached
        }

        for i in 0..rows {
            if row_reached[i] {
                u[i] += sink_dist - row_dist[i];
            }
        }
        for j in 0..cols {
            if visited[j] {
                v[j] -= sink_dist - dist[j];
            }
        }

        // Flip matched edges along the augmenting path.
        let mut j = sink;
        loop {
            let i = prev_row[j];
            let previous = row_match[i];
            row_match[i] = Some(j);
            col_match[j] = Some(i);
            match previous {
                None => break,
                Some(jp) => j = jp,
            }
        }
    }

    collect(m, &row_match, &col_match)
}

/// Greedy assignment: repeatedly claims the globally cheapest admissible
/// unclaimed cell. Ties break on (cost, detection index, track index).
///
/// Exists as the fast baseline for benchmarking against [`solve`]; it can
/// be arbitrarily worse than optimal.
pub fn solve_greedy(m: &CostMatrix) -> Assignment {
    let rows = m.rows();
    let cols = m.cols();
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if m.is_admissible(i, j) {
                cells.push((i, j));
            }
        }
    }
    cells.sort_by(|&(i1, j1), &(i2, j2)| {
        m.cost(i1, j1)
            .total_cmp(&m.cost(i2, j2))
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });

    let mut row_match: Vec<Option<usize>> = vec![None; rows];
    let mut col_match: Vec<Option<usize>> = vec![None; cols];
    for (i, j) in cells {
        if row_match[i].is_none() && col_match[j].is_none() {
            row_match[i] = Some(j);
            col_match[j] = Some(i);
        }
    }
    collect(m, &row_match, &col_match)
}

fn collect(m: &CostMatrix, row_match: &[Option<usize>], col_match: &[Option<usize>]) -> Assignment {
    let matches = row_match
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j, m.cost(i, j))))
        .collect();
    let unmatched_detections = row_match
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.is_none().then_some(i))
        .collect();
    let unmatched_tracks = col_match
        .iter()
        .enumerate()
        .filter_map(|(j, i)| i.is_none().then_some(j))
        .collect();
    Assignment {
        matches,
        unmatched_detections,
        unmatched_tracks,
    }
}
