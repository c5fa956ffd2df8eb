use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Graph, Partition};
use crate::error::{invalid, Error, Result};

/// Fixed-point scale applied to every capacity before the integral flow
/// computation. Unit edges get capacity `CAPACITY_SCALE`.
pub const CAPACITY_SCALE: i64 = 1 << 16;

/// Maximum flow with unit edge capacities and per-terminal attachment capacity `d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowResult {
    pub value: f64,
    /// Signed flow per edge, positive in the direction from the smaller to
    /// the larger endpoint.
    pub edge_flows: Vec<f64>,
    /// Flow entering the network at each vertex: positive at sources,
    /// negative at sinks, zero elsewhere.
    pub injection: Vec<f64>,
    /// Side 0 holds the vertices reachable from the super-source in the
    /// residual network.
    pub mincut: Partition,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
    pub d: f64,
    pub raw_value: i64,
    pub raw_edge_flows: Vec<i64>,
    pub raw_injection: Vec<i64>,
}

impl FlowResult {
    /// Capacity of `mincut` in real units: crossing edges plus terminal
    /// attachments on the wrong side.
    pub fn mincut_capacity(&self, g: &Graph) -> f64 {
        let p = &self.mincut;
        let edges = g.edges().iter().filter(|&&(u, v)| p.label(u) != p.label(v)).count();
        let sources = self.sources.iter().filter(|&&s| p.label(s) == 1).count();
        let sinks = self.sinks.iter().filter(|&&t| p.label(t) == 0).count();
        edges as f64 + self.raw_terminal_cap() as f64 / CAPACITY_SCALE as f64 * (sources + sinks) as f64
    }

    pub fn raw_terminal_cap(&self) -> i64 {
        scale_capacity(self.d).unwrap_or(0)
    }

    /// Number of graph edges crossing the minimum cut.
    pub fn cut_edges(&self, g: &Graph) -> usize {
        let p = &self.mincut;
        g.edges().iter().filter(|&&(u, v)| p.label(u) != p.label(v)).count()
    }
}

fn scale_capacity(d: f64) -> Result<i64> {
    let scaled = (d * CAPACITY_SCALE as f64).round();
    if !(scaled >= 1.0) || !scaled.is_finite() || scaled > (i64::MAX / 4) as f64 {
        return Err(invalid(format!("terminal capacity {d} is not representable")));
    }
    Ok(scaled as i64)
}

struct Network {
    head: Vec<usize>,
    arcs: Vec<usize>,
    to: Vec<usize>,
    res: Vec<i64>,
}

impl Network {
    /// `pairs` holds (from, to, forward capacity, backward capacity); arc `2k`
    /// and `2k + 1` are mutual reverses.
    fn new(nodes: usize, pairs: &[(usize, usize, i64, i64)]) -> Self {
        let mut to = Vec::with_capacity(2 * pairs.len());
        let mut res = Vec::with_capacity(2 * pairs.len());
        let mut count = vec![0usize; nodes + 1];
        for &(u, v, cf, cb) in pairs {
            to.push(v);
            res.push(cf);
            to.push(u);
            res.push(cb);
            count[u + 1] += 1;
            count[v + 1] += 1;
        }
        for i in 0..nodes {
            count[i + 1] += count[i];
        }
        let head = count.clone();
        let mut fill = count;
        let mut arcs = vec![0; to.len()];
        for a in 0..to.len() {
            let from = to[a ^ 1];
            arcs[fill[from]] = a;
            fill[from] += 1;
        }
        Self { head, arcs, to, res }
    }

    fn bfs(&self, s: usize, t: usize, level: &mut [i32]) -> bool {
        level.fill(-1);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.arcs[self.head[u]..self.head[u + 1]] {
                let v = self.to[a];
                if self.res[a] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level[t] >= 0
    }

    fn dinic(&mut self, s: usize, t: usize) -> i64 {
        let nodes = self.head.len() - 1;
        let mut level = vec![-1i32; nodes];
        let mut it = vec![0usize; nodes];
        let mut total = 0i64;
        let mut path: Vec<usize> = Vec::new();
        while self.bfs(s, t, &mut level) {
            for (u, slot) in it.iter_mut().enumerate() {
                *slot = self.head[u];
            }
            path.clear();
            let mut u = s;
            loop {
                if u == t {
                    let bottleneck = path.iter().map(|&a| self.res[a]).min().unwrap_or(0);
                    total += bottleneck;
                    let mut retreat = path.len();
                    for (pos, &a) in path.iter().enumerate() {
                        self.res[a] -= bottleneck;
                        self.res[a ^ 1] += bottleneck;
                        if self.res[a] == 0 && retreat == path.len() {
                            retreat = pos;
                        }
                    }
                    path.truncate(retreat);
                    u = path.last().map_or(s, |&a| self.to[a]);
                    continue;
                }
                let mut advanced = false;
                while it[u] < self.head[u + 1] {
                    let a = self.arcs[it[u]];
                    let v = self.to[a];
                    if self.res[a] > 0 && level[v] == level[u] + 1 {
                        path.push(a);
                        u = v;
                        advanced = true;
                        break;
                    }
                    it[u] += 1;
                }
                if !advanced {
                    level[u] = -1;
                    match path.pop() {
                        None => break,
                        Some(a) => {
                            u = self.to[a ^ 1];
                            it[u] += 1;
                        }
                    }
                }
            }
        }
        total
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len() - 1];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &a in &self.arcs[self.head[u]..self.head[u + 1]] {
                let v = self.to[a];
                if self.res[a] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Maximum flow from `sources` to `sinks` where every graph edge has
/// capacity 1 in both directions and every terminal is attached to the
/// super-source or super-sink by an edge of capacity `d`.
pub fn max_flow_dregular(g: &Graph, sources: &[usize], sinks: &[usize], d: f64) -> Result<FlowResult> {
    if sources.is_empty() || sinks.is_empty() {
        return Err(invalid("max flow needs nonempty sources and sinks"));
    }
    let n = g.n();
    let mut role = vec![0u8; n];
    for (set, mark) in [(sources, 1u8), (sinks, 2u8)] {
        for &v in set {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if role[v] != 0 {
                return Err(invalid(format!("vertex {v} is listed twice among the terminals")));
            }
            role[v] = mark;
        }
    }
    let cap = scale_capacity(d)?;
    let (s, t) = (n, n + 1);
    let mut pairs: Vec<(usize, usize, i64, i64)> = g
        .edges()
        .iter()
        .map(|&(u, v)| (u, v, CAPACITY_SCALE, CAPACITY_SCALE))
        .collect();
    pairs.extend(sources.iter().map(|&v| (s, v, cap, 0)));
    pairs.extend(sinks.iter().map(|&v| (v, t, cap, 0)));
    let mut net = Network::new(n + 2, &pairs);
    let raw_value = net.dinic(s, t);

    let raw_edge_flows: Vec<i64> = (0..g.m()).map(|e| CAPACITY_SCALE - net.res[2 * e]).collect();
    let mut raw_injection = vec![0i64; n];
    let m = g.m();
    for (k, &v) in sources.iter().enumerate() {
        raw_injection[v] = cap - net.res[2 * (m + k)];
    }
    for (k, &v) in sinks.iter().enumerate() {
        raw_injection[v] = -(cap - net.res[2 * (m + sources.len() + k)]);
    }
    let seen = net.reachable(s);
    let labels = (0..n).map(|v| u8::from(!seen[v])).collect();
    let unit = CAPACITY_SCALE as f64;
    Ok(FlowResult {
        value: raw_value as f64 / unit,
        edge_flows: raw_edge_flows.iter().map(|&f| f as f64 / unit).collect(),
        injection: raw_injection.iter().map(|&f| f as f64 / unit).collect(),
        mincut: Partition::from_labels(labels, 2)?,
        sources: sources.to_vec(),
        sinks: sinks.to_vec(),
        d,
        raw_value,
        raw_edge_flows,
        raw_injection,
    })
}

/// One source-to-sink path carrying `amount` units of flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub vertices: Vec<usize>,
    pub amount: f64,
    pub raw_amount: i64,
}

impl FlowPath {
    pub fn source(&self) -> usize {
        self.vertices[0]
    }

    pub fn sink(&self) -> usize {
        *self.vertices.last().expect("flow paths are nonempty")
    }
}

/// Decomposes a flow into source-to-sink paths. Circulations are cancelled
/// along the way, so the amounts sum to the flow value and there are at most
/// `|E| + n` paths.
pub fn flow_path_decompose(g: &Graph, f: &FlowResult) -> Result<Vec<FlowPath>> {
    let n = g.n();
    if f.raw_edge_flows.len() != g.m() {
        return Err(Error::SizeMismatch {
            expected: g.m(),
            got: f.raw_edge_flows.len(),
        });
    }
    if f.raw_injection.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.raw_injection.len(),
        });
    }
    // Outgoing flow-carrying arcs per vertex as (edge id, head).
    let mut count = vec![0usize; n + 1];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        match f.raw_edge_flows[e].signum() {
            1 => count[u + 1] += 1,
            -1 => count[v + 1] += 1,
            _ => {}
        }
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut ptr = count.clone();
    let mut fill = count.clone();
    let mut out = vec![(0usize, 0usize); count[n]];
    let mut remaining: Vec<i64> = f.raw_edge_flows.iter().map(|x| x.abs()).collect();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let (from, to) = match f.raw_edge_flows[e].signum() {
            1 => (u, v),
            -1 => (v, u),
            _ => continue,
        };
        out[fill[from]] = (e, to);
        fill[from] += 1;
    }

    let mut supply: Vec<i64> = f.raw_injection.iter().map(|&x| x.max(0)).collect();
    let mut demand: Vec<i64> = f.raw_injection.iter().map(|&x| (-x).max(0)).collect();
    let mut position = vec![usize::MAX; n];
    let mut paths = Vec::new();
    let unit = CAPACITY_SCALE as f64;

    for start in 0..n {
        while supply[start] > 0 {
            let mut verts = vec![start];
            let mut arcs: Vec<usize> = Vec::new();
            position[start] = 0;
            let mut u = start;
            while demand[u] == 0 {
                while ptr[u] < count[u + 1] && remaining[out[ptr[u]].0] == 0 {
                    ptr[u] += 1;
                }
                if ptr[u] == count[u + 1] {
                    for &v in &verts {
                        position[v] = usize::MAX;
                    }
                    return Err(Error::Numerical(format!("flow is not conserved at vertex {u}")));
                }
                let (e, w) = out[ptr[u]];
                if position[w] != usize::MAX {
                    // Cancel the circulation verts[p..] -> w.
                    let p = position[w];
                    let mut cycle: Vec<usize> = arcs[p..].to_vec();
                    cycle.push(e);
                    let amount = cycle.iter().map(|&a| remaining[a]).min().unwrap_or(0);
                    for &a in &cycle {
                        remaining[a] -= amount;
                    }
                    for &v in &verts[p + 1..] {
                        position[v] = usize::MAX;
                    }
                    verts.truncate(p + 1);
                    arcs.truncate(p);
                    u = w;
                    continue;
                }
                position[w] = verts.len();
                verts.push(w);
                arcs.push(e);
                u = w;
            }
            let amount = arcs
                .iter()
                .map(|&a| remaining[a])
                .chain([supply[start], demand[u]])
                .min()
                .unwrap_or(0);
            for &a in &arcs {
                remaining[a] -= amount;
            }
            supply[start] -= amount;
            demand[u] -= amount;
            for &v in &verts {
                position[v] = usize::MAX;
            }
            paths.push(FlowPath {
                vertices: verts,
                amount: amount as f64 / unit,
                raw_amount: amount,
            });
        }
    }
    Ok(paths)
}
