use std::collections::VecDeque;

use super::NetworkInstance;

/// Hop distances and shortest-path counts from `start`.
fn bfs_counts(adj: &[Vec<(usize, usize)>], start: usize) -> (Vec<usize>, Vec<f64>) {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut count = vec![0.0; adj.len()];
    dist[start] = 0;
    count[start] = 1.0;
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &adj[x] {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
            if dist[y] == dist[x] + 1 {
                count[y] += count[x];
            }
        }
    }
    (dist, count)
}

/// Demand-restricted edge betweenness, indexed by edge position.
///
/// For each demand the fraction of hop-shortest source–target paths that use
/// the edge is averaged over all demands. Capacities and modules are ignored.
pub fn edge_betweenness(instance: &NetworkInstance) -> Vec<f64> {
    let mut beta = vec![0.0; instance.edges.len()];
    if instance.demands.is_empty() {
        return beta;
    }
    let adj = instance.adjacency(&[]);
    for d in &instance.demands {
        let (ds, cs) = bfs_counts(&adj, d.source);
        let (dt, ct) = bfs_counts(&adj, d.target);
        let len = ds[d.target];
        if len == usize::MAX {
            continue;
        }
        let total = cs[d.target];
        for (k, e) in instance.edges.iter().enumerate() {
            let mut through = 0.0;
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if ds[a] != usize::MAX && dt[b] != usize::MAX && ds[a] + 1 + dt[b] == len {
                    through += cs[a] * ct[b];
                }
            }
            beta[k] += through / total;
        }
    }
    let n = instance.demands.len() as f64;
    for b in &mut beta {
        *b /= n;
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::instance;
    use proptest::prelude::*;

    /// All simple paths from `s` to `t` as edge lists.
    fn simple_paths(inst: &NetworkInstance, s: usize, t: usize) -> Vec<Vec<usize>> {
        fn walk(
            adj: &[Vec<(usize, usize)>],
            x: usize,
            t: usize,
            seen: &mut Vec<bool>,
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if x == t {
                out.push(path.clone());
                return;
            }
            for &(y, e) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    path.push(e);
                    walk(adj, y, t, seen, path, out);
                    path.pop();
                    seen[y] = false;
                }
            }
        }
        let adj = inst.adjacency(&[]);
        let mut seen = vec![false; inst.nodes.len()];
        seen[s] = true;
        let mut out = Vec::new();
        walk(&adj, s, t, &mut seen, &mut Vec::new(), &mut out);
        out
    }

    fn brute_force(inst: &NetworkInstance) -> Vec<f64> {
        let mut beta = vec![0.0; inst.edges.len()];
        for d in &inst.demands {
            let paths = simple_paths(inst, d.source, d.target);
            let shortest = paths.iter().map(Vec::len).min().unwrap();
            let best: Vec<_> = paths.iter().filter(|p| p.len() == shortest).collect();
            for p in &best {
                for &e in p.iter() {
                    beta[e] += 1.0 / best.len() as f64;
                }
            }
        }
        beta.iter().map(|b| b / inst.demands.len() as f64).collect()
    }

    const M: &[(f64, f64)] = &[(1.0, 1.0)];

    #[test]
    fn path_graph() {
        let inst = instance(&["A", "B", "C"], &[("A", "B", 0.0, M), ("B", "C", 0.0, M)], &[("A", "C", 1.0)]);
        assert_eq!(edge_betweenness(&inst), vec![1.0, 1.0]);
    }

    #[test]
    fn triangle_direct_edge() {
        let inst = instance(
            &["A", "B", "C"],
            &[("A", "B", 0.0, M), ("A", "C", 0.0, M), ("C", "B", 0.0, M)],
            &[("A", "B", 1.0)],
        );
        assert_eq!(edge_betweenness(&inst), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn square_splits_evenly() {
        let inst = instance(
            &["A", "B", "C", "D"],
            &[("A", "B", 0.0, M), ("B", "C", 0.0, M), ("C", "D", 0.0, M), ("D", "A", 0.0, M)],
            &[("A", "C", 1.0)],
        );
        assert_eq!(edge_betweenness(&inst), vec![0.5; 4]);
    }

    fn random_instance(n: usize, extra: Vec<(usize, usize)>, demands: Vec<(usize, usize)>) -> NetworkInstance {
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        for (a, b) in extra {
            let (a, b) = (a % n, b % n);
            if a != b && !pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b)) {
                pairs.push((a, b));
            }
        }
        let edges: Vec<_> = pairs.iter().map(|&(a, b)| (refs[a], refs[b], 0.0, M)).collect();
        let dem: Vec<_> = demands
            .iter()
            .map(|&(a, b)| (a % n, b % n))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (refs[a], refs[b], 1.0))
            .collect();
        instance(&refs, &edges, &dem)
    }

    proptest! {
        #[test]
        fn matches_path_enumeration(
            n in 3usize..=8,
            extra in prop::collection::vec((0usize..8, 0usize..8), 0..8),
            demands in prop::collection::vec((0usize..8, 0usize..8), 1..5),
        ) {
            let inst = random_instance(n, extra, demands);
            prop_assume!(!inst.demands.is_empty());
            let fast = edge_betweenness(&inst);
            let slow = brute_force(&inst);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((0.0..=1.0 + 1e-12).contains(a));
            }
        }
    }
}
