//! Graph utilities on adjacency lists. The SCC routine is iterative Tarjan;
//! refined systems reach tens of thousands of vertices, where recursive DFS
//! overflows test-thread stacks.

use std::collections::VecDeque;

/// Strongly connected components, each sorted, ordered by smallest vertex.
pub(crate) fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(&(v, child)) = frames.last() {
            if child < succ[v].len() {
                frames.last_mut().unwrap().1 += 1;
                let w = succ[v][child];
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _)) = frames.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// BFS distances from `src`; usize::MAX marks unreachable vertices.
pub(crate) fn bfs_distances(succ: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; succ.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Max over ordered pairs of the BFS distance. Assumes strong connectivity.
pub(crate) fn diameter(succ: &[Vec<usize>]) -> usize {
    let mut d = 0;
    for v in 0..succ.len() {
        let dist = bfs_distances(succ, v);
        for (u, &x) in dist.iter().enumerate() {
            debug_assert!(x != usize::MAX, "diameter of non-strongly-connected graph ({v} to {u})");
            d = d.max(x);
        }
    }
    d
}

/// Period of an irreducible graph: gcd of level defects over edges, where
/// levels come from a BFS tree.
pub(crate) fn period(succ: &[Vec<usize>]) -> usize {
    let level = bfs_distances(succ, 0);
    let mut g = 0usize;
    for (u, row) in succ.iter().enumerate() {
        if level[u] == usize::MAX {
            continue;
        }
        for &v in row {
            if level[v] == usize::MAX {
                continue;
            }
            let defect = (level[u] as isize + 1 - level[v] as isize).unsigned_abs();
            g = gcd(g, defect);
        }
    }
    g.max(1)
}

/// A strongly connected component carries positive entropy iff it is not a
/// bare cycle: internal edges exceed vertices.
pub(crate) fn positive_entropy(succ: &[Vec<usize>], comp: &[usize]) -> bool {
    let inside: std::collections::HashSet<usize> = comp.iter().copied().collect();
    let edges: usize = comp
        .iter()
        .map(|&u| succ[u].iter().filter(|v| inside.contains(v)).count())
        .sum();
    edges > comp.len()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_and_period() {
        let succ = vec![vec![1], vec![0]];
        let comps = strongly_connected_components(&succ);
        assert_eq!(comps, vec![vec![0, 1]]);
        assert_eq!(period(&succ), 2);
        assert_eq!(diameter(&succ), 1);

        let succ = vec![vec![0, 1], vec![0]];
        assert_eq!(period(&succ), 1);

        // two components joined one way
        let succ = vec![vec![1], vec![0, 2], vec![2]];
        let comps = strongly_connected_components(&succ);
        assert_eq!(comps, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn entropy_by_edge_count() {
        let succ = vec![vec![1], vec![0]];
        assert!(!positive_entropy(&succ, &[0, 1]));
        let succ = vec![vec![0, 1], vec![0]];
        assert!(positive_entropy(&succ, &[0, 1]));
        let succ = vec![vec![0]];
        assert!(!positive_entropy(&succ, &[0]));
    }

    #[test]
    fn scc_survives_deep_graphs() {
        // one long cycle plus a chord: a single component, found without
        // recursion depth proportional to n
        let n = 200_000;
        let mut succ: Vec<Vec<usize>> = (0..n).map(|v| vec![(v + 1) % n]).collect();
        succ[0].push(n / 2);
        let comps = strongly_connected_components(&succ);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), n);
        assert!(positive_entropy(&succ, &comps[0]));
    }
}
