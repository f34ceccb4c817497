//! Directed-graph routines used by the stability analysis.

use std::ops::{Add, Sub};

use num_traits::Zero;

/// A weighted directed edge `from → to`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub from: usize,
    pub to: usize,
    pub weight: T,
}

/// Strongly connected components in reverse topological order (sinks first).
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, root: usize) {
            // Explicit call stack of (node, next neighbour position).
            let mut calls = vec![(root, 0usize)];
            self.open(root);
            while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
                if let Some(&w) = self.adj[v].get(*pos) {
                    *pos += 1;
                    match self.index[w] {
                        None => {
                            self.open(w);
                            calls.push((w, 0));
                        }
                        Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                        Some(_) => {}
                    }
                    continue;
                }
                calls.pop();
                if let Some(&(parent, _)) = calls.last() {
                    self.low[parent] = self.low[parent].min(self.low[v]);
                }
                if Some(self.low[v]) == self.index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = self.stack.pop().expect("tarjan stack holds v");
                        self.on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    self.out.push(comp);
                }
            }
        }

        fn open(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
        }
    }

    let n = adj.len();
    let mut t = Tarjan {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

/// Components with no edge leaving them, i.e. the recurrent classes of a
/// finite Markov chain whose support graph is `adj`.
pub fn closed_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comps = strongly_connected_components(adj);
    let mut owner = vec![0; adj.len()];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            owner[v] = c;
        }
    }
    let mut closed: Vec<Vec<usize>> = comps
        .iter()
        .enumerate()
        .filter(|(c, comp)| comp.iter().all(|&v| adj[v].iter().all(|&w| owner[w] == *c)))
        .map(|(_, comp)| comp.clone())
        .collect();
    closed.sort();
    closed
}

pub fn is_strongly_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
    }
    n == 0 || strongly_connected_components(&adj).len() == 1
}

/// Weight of a minimum spanning arborescence in which every vertex other
/// than `root` has exactly one outgoing edge and all paths end at `root`.
///
/// Returns `None` when some vertex cannot reach `root`. Self-loops are
/// ignored. Runs Chu-Liu/Edmonds on the reversed graph.
pub fn min_in_arborescence<T>(n: usize, edges: &[Edge<T>], root: usize) -> Option<T>
where
    T: Clone + PartialOrd + Add<Output = T> + Sub<Output = T> + Zero,
{
    assert!(root < n, "root {root} out of range for {n} vertices");
    // Reverse so the problem becomes a min out-arborescence from `root`.
    let mut edges: Vec<Edge<T>> = edges
        .iter()
        .filter(|e| e.from != e.to)
        .map(|e| Edge { from: e.to, to: e.from, weight: e.weight.clone() })
        .collect();
    let (mut n, mut root) = (n, root);
    let mut total = T::zero();
    loop {
        edges.retain(|e| e.to != root);
        // Cheapest incoming edge of every vertex; ties keep the first edge.
        let mut best: Vec<Option<(T, usize)>> = vec![None; n];
        for e in &edges {
            if best[e.to].as_ref().is_none_or(|(w, _)| e.weight < *w) {
                best[e.to] = Some((e.weight.clone(), e.from));
            }
        }
        let mut parent = vec![usize::MAX; n];
        for v in (0..n).filter(|&v| v != root) {
            let (w, p) = best[v].clone()?;
            total = total + w;
            parent[v] = p;
        }

        let mut comp = vec![usize::MAX; n];
        let mut seen = vec![usize::MAX; n];
        let mut count = 0;
        for v in 0..n {
            let mut u = v;
            while u != root && comp[u] == usize::MAX && seen[u] != v {
                seen[u] = v;
                u = parent[u];
            }
            if u != root && comp[u] == usize::MAX {
                // `u` lies on a cycle first entered during this walk.
                let mut w = parent[u];
                while w != u {
                    comp[w] = count;
                    w = parent[w];
                }
                comp[u] = count;
                count += 1;
            }
        }
        if count == 0 {
            return Some(total);
        }
        for c in comp.iter_mut().filter(|c| **c == usize::MAX) {
            *c = count;
            count += 1;
        }
        edges = edges
            .into_iter()
            .filter(|e| comp[e.from] != comp[e.to])
            .map(|e| {
                let (inw, _) = best[e.to].clone().expect("non-root vertices have an in-edge");
                Edge { from: comp[e.from], to: comp[e.to], weight: e.weight - inw }
            })
            .collect();
        n = count;
        root = comp[root];
    }
}
