//! Random connected overlays with bounded degree.

use std::collections::VecDeque;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::SimError;

fn infeasible(msg: impl Into<String>) -> SimError {
    SimError::TopologyInfeasible(msg.into())
}

struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    fn linked(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&(b as u32))
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].push(b as u32);
        self.adj[b].push(a as u32);
    }

    fn unlink(&mut self, a: usize, b: usize) {
        self.adj[a].retain(|x| *x as usize != b);
        self.adj[b].retain(|x| *x as usize != a);
    }

    /// Connected components, each sorted, ordered by smallest member.
    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    let v = v as usize;
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn edges_within(&self, nodes: &[usize]) -> Vec<(usize, usize)> {
        nodes
            .iter()
            .flat_map(|&u| self.adj[u].iter().map(move |&v| (u, v as usize)))
            .filter(|(u, v)| u < v)
            .collect()
    }
}

/// Undirected connected graph on `n` nodes whose degrees all lie in
/// `[degree_min, degree_max]`.
///
/// Target degrees are drawn uniformly, stubs are paired at random (rejecting
/// loops and duplicate links), deficits are topped up, and finally separate
/// components are stitched together either through spare degree or by a
/// degree-preserving edge swap.
pub fn random_overlay<R: Rng>(
    n: usize,
    degree_min: usize,
    degree_max: usize,
    rng: &mut R,
) -> Result<Vec<Vec<u32>>, SimError> {
    if degree_min < 1 || degree_min > degree_max {
        return Err(infeasible(format!(
            "degree range {degree_min}..={degree_max} is empty or zero"
        )));
    }
    if degree_max >= n {
        return Err(infeasible(format!("degree {degree_max} needs more than {n} peers")));
    }
    if n > 2 && degree_max < 2 {
        return Err(infeasible("a connected overlay on more than two peers needs degree 2"));
    }
    if degree_min == degree_max && (n * degree_min) % 2 == 1 {
        return Err(infeasible("odd total degree"));
    }

    let mut targets: Vec<usize> = (0..n).map(|_| rng.random_range(degree_min..=degree_max)).collect();
    if targets.iter().sum::<usize>() % 2 == 1 {
        if let Some(t) = targets.iter_mut().find(|t| **t < degree_max) {
            *t += 1;
        } else if let Some(t) = targets.iter_mut().find(|t| **t > degree_min) {
            *t -= 1;
        }
    }

    let mut g = Graph {
        adj: vec![Vec::new(); n],
    };
    let mut stubs: Vec<usize> = targets
        .iter()
        .enumerate()
        .flat_map(|(i, &t)| std::iter::repeat_n(i, t))
        .collect();
    for _ in 0..32 {
        if stubs.len() < 2 {
            break;
        }
        stubs.shuffle(rng);
        let mut leftover = Vec::new();
        for pair in stubs.chunks(2) {
            match *pair {
                [a, b] if a != b && !g.linked(a, b) => g.link(a, b),
                _ => leftover.extend_from_slice(pair),
            }
        }
        if leftover.len() == stubs.len() {
            break;
        }
        stubs = leftover;
    }

    fill_deficits(&mut g, degree_min, degree_max, rng)?;
    connect_components(&mut g, degree_max, rng)?;

    for i in 0..n {
        if !(degree_min..=degree_max).contains(&g.degree(i)) {
            return Err(infeasible(format!("peer {i} ended with degree {}", g.degree(i))));
        }
    }
    if g.components().len() != 1 {
        return Err(infeasible("could not connect the overlay"));
    }
    for list in &mut g.adj {
        list.sort_unstable();
    }
    Ok(g.adj)
}

fn fill_deficits<R: Rng>(g: &mut Graph, degree_min: usize, degree_max: usize, rng: &mut R) -> Result<(), SimError> {
    let n = g.adj.len();
    for i in 0..n {
        while g.degree(i) < degree_min {
            let partners: Vec<usize> = (0..n)
                .filter(|&j| j != i && g.degree(j) < degree_max && !g.linked(i, j))
                .collect();
            if let Some(&j) = partners.choose(rng) {
                g.link(i, j);
                continue;
            }
            // Spare degree left only on peers already linked to `i`: swap an
            // edge (x, y) for (i, x) and (j, y).
            let linked_spare: Vec<usize> = (0..n).filter(|&j| j != i && g.degree(j) < degree_max).collect();
            if let Some(&j) = linked_spare.choose(rng) {
                let all: Vec<usize> = (0..n).collect();
                let edges: Vec<(usize, usize)> = g
                    .edges_within(&all)
                    .into_iter()
                    .flat_map(|(x, y)| [(x, y), (y, x)])
                    .filter(|&(x, y)| {
                        ![i, j].contains(&x) && ![i, j].contains(&y) && !g.linked(i, x) && !g.linked(j, y)
                    })
                    .collect();
                if let Some(&(x, y)) = edges.choose(rng) {
                    g.unlink(x, y);
                    g.link(i, x);
                    g.link(j, y);
                    continue;
                }
            }
            // No spare degree anywhere: split an existing edge through `i`.
            if g.degree(i) + 2 > degree_max {
                return Err(infeasible(format!("peer {i} cannot reach degree {degree_min}")));
            }
            let all: Vec<usize> = (0..n).collect();
            let edges: Vec<(usize, usize)> = g
                .edges_within(&all)
                .into_iter()
                .filter(|&(x, y)| x != i && y != i && !g.linked(i, x) && !g.linked(i, y))
                .collect();
            let Some(&(x, y)) = edges.choose(rng) else {
                return Err(infeasible(format!("peer {i} cannot reach degree {degree_min}")));
            };
            g.unlink(x, y);
            g.link(i, x);
            g.link(i, y);
        }
    }
    Ok(())
}

fn connect_components<R: Rng>(g: &mut Graph, degree_max: usize, rng: &mut R) -> Result<(), SimError> {
    let n = g.adj.len();
    for _ in 0..(4 * n + 64) {
        let comps = g.components();
        if comps.len() <= 1 {
            return Ok(());
        }
        let (a, b) = (&comps[0], &comps[1]);
        let spare_a: Vec<usize> = a.iter().copied().filter(|&u| g.degree(u) < degree_max).collect();
        let spare_b: Vec<usize> = b.iter().copied().filter(|&u| g.degree(u) < degree_max).collect();
        if let (Some(&u), Some(&v)) = (spare_a.choose(rng), spare_b.choose(rng)) {
            g.link(u, v);
            continue;
        }
        let edges_a = g.edges_within(a);
        let edges_b = g.edges_within(b);
        let (Some(&(a1, a2)), Some(&(b1, b2))) = (edges_a.choose(rng), edges_b.choose(rng)) else {
            return Err(infeasible("isolated peer without spare degree"));
        };
        g.unlink(a1, a2);
        g.unlink(b1, b2);
        g.link(a1, b1);
        g.link(a2, b2);
    }
    Err(infeasible("connectivity repair did not converge"))
}
