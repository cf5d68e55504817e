//! Social-network topologies and agent placement.
//!
//! Edges are stored as observation links: an edge `src -> dst` means `dst`
//! sees the prior mean of `src`. Undirected topologies store both
//! directions.

use crate::belief::AgentCategory;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("lattice degree {degree} too small (density {density} over {nodes} nodes)")]
    DegreeTooSmall {
        degree: usize,
        density: f64,
        nodes: usize,
    },
    #[error("lattice degree {degree} needs more than {nodes} nodes")]
    DegreeTooLarge { degree: usize, nodes: usize },
    #[error("probability {name} = {value} outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("growth weights must be nonnegative and sum to 1, got ({alpha}, {beta}, {gamma})")]
    GrowthWeights { alpha: f64, beta: f64, gamma: f64 },
    #[error("growth never adds nodes when alpha = gamma = 0")]
    NoNodeGrowth,
    #[error("network needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("stochastic block model supports exactly 2 partitions, got {0}")]
    Partitions(usize),
    #[error("{informed} informed + {misinformed} misinformed exceed {nodes} nodes")]
    TooManySpecial {
        informed: usize,
        misinformed: usize,
        nodes: usize,
    },
    #[error("block placement requires a stochastic block network")]
    NotBlockTopology,
    #[error("block {block} has {available} nodes, {needed} needed")]
    BlockTooSmall {
        block: usize,
        available: usize,
        needed: usize,
    },
    #[error("edge list parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyTag {
    SmallWorld,
    StochasticBlock,
    ScaleFree,
    Complete,
    Custom,
}

impl TopologyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyTag::SmallWorld => "small_world",
            TopologyTag::StochasticBlock => "stochastic_block",
            TopologyTag::ScaleFree => "scale_free",
            TopologyTag::Complete => "complete",
            TopologyTag::Custom => "custom",
        }
    }
}

impl FromStr for TopologyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "small_world" => TopologyTag::SmallWorld,
            "stochastic_block" => TopologyTag::StochasticBlock,
            "scale_free" => TopologyTag::ScaleFree,
            "complete" => TopologyTag::Complete,
            "custom" => TopologyTag::Custom,
            other => return Err(format!("unknown topology {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    SmallWorld {
        density: f64,
        p_rewire: f64,
    },
    StochasticBlock {
        partitions: usize,
        p_intra: f64,
        p_inter: f64,
    },
    ScaleFree {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Random,
    HubsInformed,
    HubsMisinformed,
    BlockSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub variant: Topology,
    pub placement: Placement,
}

impl TopologyConfig {
    /// Density 0.1 ring lattice rewired with probability 0.01.
    pub fn small_world() -> Self {
        Self {
            variant: Topology::SmallWorld {
                density: 0.1,
                p_rewire: 0.01,
            },
            placement: Placement::Random,
        }
    }

    /// Two blocks, intra density 0.1, inter density 0.001, informed and
    /// misinformed agents separated.
    pub fn stochastic_block() -> Self {
        Self {
            variant: Topology::StochasticBlock {
                partitions: 2,
                p_intra: 0.1,
                p_inter: 0.001,
            },
            placement: Placement::BlockSplit,
        }
    }

    pub fn scale_free(placement: Placement) -> Self {
        Self {
            variant: Topology::ScaleFree {
                alpha: 0.41,
                beta: 0.54,
                gamma: 0.05,
            },
            placement,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        match self.variant {
            Topology::SmallWorld { density, p_rewire } => {
                check_prob("density", density)?;
                check_prob("p_rewire", p_rewire)?;
            }
            Topology::StochasticBlock {
                partitions,
                p_intra,
                p_inter,
            } => {
                if partitions != 2 {
                    return Err(NetworkError::Partitions(partitions));
                }
                check_prob("p_intra", p_intra)?;
                check_prob("p_inter", p_inter)?;
            }
            Topology::ScaleFree { alpha, beta, gamma } => check_growth(alpha, beta, gamma)?,
        }
        if self.placement == Placement::BlockSplit
            && !matches!(self.variant, Topology::StochasticBlock { .. })
        {
            return Err(NetworkError::NotBlockTopology);
        }
        Ok(())
    }

    /// Builds the graph and places categories.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        nodes: usize,
        lambda: f64,
        xi: f64,
        graph_rng: &mut R,
        placement_rng: &mut R,
    ) -> Result<SocialNetwork, NetworkError> {
        self.validate()?;
        let net = match self.variant {
            Topology::SmallWorld { density, p_rewire } => {
                small_world(nodes, density, p_rewire, graph_rng)?
            }
            Topology::StochasticBlock {
                p_intra, p_inter, ..
            } => stochastic_block(nodes, p_intra, p_inter, graph_rng)?,
            Topology::ScaleFree { alpha, beta, gamma } => {
                scale_free_directed(nodes, alpha, beta, gamma, graph_rng)?
            }
        };
        assign_categories(net, lambda, xi, self.placement, placement_rng)
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<(), NetworkError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NetworkError::Probability { name, value })
    }
}

fn check_growth(alpha: f64, beta: f64, gamma: f64) -> Result<(), NetworkError> {
    let ok = [alpha, beta, gamma]
        .iter()
        .all(|w| *w >= 0.0 && w.is_finite())
        && (alpha + beta + gamma - 1.0).abs() <= 1e-9;
    if !ok {
        return Err(NetworkError::GrowthWeights { alpha, beta, gamma });
    }
    if alpha == 0.0 && gamma == 0.0 {
        return Err(NetworkError::NoNodeGrowth);
    }
    Ok(())
}

/// Directed observation graph with one category per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialNetwork {
    /// `sources[i]`: nodes observed by `i`, ascending.
    sources: Vec<Vec<usize>>,
    categories: Vec<AgentCategory>,
    topology: TopologyTag,
}

impl SocialNetwork {
    /// Builds a network from observation edges `(src, dst)`. Self-edges and
    /// duplicates are dropped. All nodes start uninformed.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        topology: TopologyTag,
    ) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for (src, dst) in edges {
            assert!(src < n && dst < n, "edge ({src}, {dst}) out of range");
            if src != dst {
                sets[dst].insert(src);
            }
        }
        Self {
            sources: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            categories: vec![AgentCategory::Uninformed; n],
            topology,
        }
    }

    /// Every node observes every other node.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        Self::from_edges(n, edges, TopologyTag::Complete)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn topology(&self) -> TopologyTag {
        self.topology
    }

    pub fn sources_of(&self, node: usize) -> &[usize] {
        &self.sources[node]
    }

    pub fn categories(&self) -> &[AgentCategory] {
        &self.categories
    }

    pub fn category(&self, node: usize) -> AgentCategory {
        self.categories[node]
    }

    pub fn with_categories(mut self, categories: Vec<AgentCategory>) -> Self {
        assert_eq!(categories.len(), self.len());
        self.categories = categories;
        self
    }

    /// Observation edges `(src, dst)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .sources
            .iter()
            .enumerate()
            .flat_map(|(dst, srcs)| srcs.iter().map(move |&src| (src, dst)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.sources.iter().map(Vec::len).sum()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.sources[node].len()
    }

    /// Number of observers of each node.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.len()];
        for srcs in &self.sources {
            for &s in srcs {
                deg[s] += 1;
            }
        }
        deg
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.sources[dst].binary_search(&src).is_ok()
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().iter().all(|&(s, d)| self.has_edge(d, s))
    }

    pub fn count(&self, category: AgentCategory) -> usize {
        self.categories.iter().filter(|c| **c == category).count()
    }

    /// Block index of a node in a two-block network: the first `ceil(n/2)`
    /// nodes form block 0.
    pub fn block_of(&self, node: usize) -> Option<usize> {
        (self.topology == TopologyTag::StochasticBlock)
            .then(|| usize::from(node >= self.len().div_ceil(2)))
    }

    /// Local clustering coefficient averaged over nodes, on the undirected
    /// view of the graph.
    pub fn average_clustering(&self) -> f64 {
        let n = self.len();
        let mut nbrs = vec![BTreeSet::new(); n];
        for (s, d) in self.edges() {
            nbrs[s].insert(d);
            nbrs[d].insert(s);
        }
        let mut total = 0.0;
        for v in 0..n {
            let list: Vec<usize> = nbrs[v].iter().copied().collect();
            let k = list.len();
            if k < 2 {
                continue;
            }
            let mut links = 0usize;
            for (a, &x) in list.iter().enumerate() {
                for &y in &list[a + 1..] {
                    if nbrs[x].contains(&y) {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (k * (k - 1)) as f64;
        }
        total / n as f64
    }

    /// Plain-text edge list: `n <I>`, `<src> <dst>` lines, then
    /// `category <node> <I|M|U>` lines. A `# topology <tag>` comment records
    /// provenance.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.len()).unwrap();
        writeln!(out, "# topology {}", self.topology.as_str()).unwrap();
        for (s, d) in self.edges() {
            writeln!(out, "{s} {d}").unwrap();
        }
        for (i, c) in self.categories.iter().enumerate() {
            writeln!(out, "category {i} {c}").unwrap();
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, NetworkError> {
        let perr = |line: usize, message: String| NetworkError::Parse { line, message };
        let mut n: Option<usize> = None;
        let mut topology = TopologyTag::Custom;
        let mut edges = Vec::new();
        let mut categories: Vec<(usize, usize, AgentCategory)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts[0] == "#" || parts[0].starts_with('#') {
                if parts.len() == 3 && parts[1] == "topology" {
                    topology = parts[2].parse().map_err(|e| perr(line_no, e))?;
                }
                continue;
            }
            let parse_idx = |s: &str| -> Result<usize, NetworkError> {
                s.parse::<usize>()
                    .map_err(|e| perr(line_no, format!("{s:?}: {e}")))
            };
            match parts.as_slice() {
                ["n", count] => {
                    if n.is_some() {
                        return Err(perr(line_no, "duplicate header".into()));
                    }
                    n = Some(parse_idx(count)?);
                }
                ["category", node, code] => {
                    let c = code.parse().map_err(|e| perr(line_no, e))?;
                    categories.push((line_no, parse_idx(node)?, c));
                }
                [src, dst] => {
                    if n.is_none() {
                        return Err(perr(line_no, "edge before header".into()));
                    }
                    edges.push((line_no, parse_idx(src)?, parse_idx(dst)?));
                }
                _ => return Err(perr(line_no, format!("unrecognised line {line:?}"))),
            }
        }
        let n = n.ok_or_else(|| perr(0, "missing header".into()))?;
        for &(line, s, d) in &edges {
            if s >= n || d >= n {
                return Err(perr(line, format!("edge ({s}, {d}) out of range")));
            }
        }
        let mut cats = vec![AgentCategory::Uninformed; n];
        for (line, node, c) in categories {
            if node >= n {
                return Err(perr(line, format!("node {node} out of range")));
            }
            cats[node] = c;
        }
        Ok(
            Self::from_edges(n, edges.into_iter().map(|(_, s, d)| (s, d)), topology)
                .with_categories(cats),
        )
    }
}

/// Nearest even integer to `x`.
fn round_even(x: f64) -> usize {
    (2.0 * (x / 2.0).round()).max(0.0) as usize
}

/// Undirected Watts–Strogatz graph.
///
/// Ring lattice of degree `k = round_even(density * (n - 1))`; each lattice
/// edge `(u, u + j)` is rewired to a uniformly chosen new endpoint with
/// probability `p_rewire`, avoiding self-loops and duplicates.
pub fn small_world<R: Rng + ?Sized>(
    n: usize,
    density: f64,
    p_rewire: f64,
    rng: &mut R,
) -> Result<SocialNetwork, NetworkError> {
    check_prob("density", density)?;
    check_prob("p_rewire", p_rewire)?;
    let k = round_even(density * n.saturating_sub(1) as f64);
    if k < 2 {
        return Err(NetworkError::DegreeTooSmall {
            degree: k,
            density,
            nodes: n,
        });
    }
    if k >= n {
        return Err(NetworkError::DegreeTooLarge {
            degree: k,
            nodes: n,
        });
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.random::<f64>() >= p_rewire {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    Ok(undirected(adj, TopologyTag::SmallWorld))
}

fn undirected(adj: Vec<BTreeSet<usize>>, tag: TopologyTag) -> SocialNetwork {
    let n = adj.len();
    let edges = adj
        .into_iter()
        .enumerate()
        .flat_map(|(u, set)| set.into_iter().map(move |v| (u, v)));
    SocialNetwork::from_edges(n, edges, tag)
}

/// Two-block stochastic block model with block sizes `ceil(n/2)` and
/// `floor(n/2)`.
pub fn stochastic_block<R: Rng + ?Sized>(
    n: usize,
    p_intra: f64,
    p_inter: f64,
    rng: &mut R,
) -> Result<SocialNetwork, NetworkError> {
    check_prob("p_intra", p_intra)?;
    check_prob("p_inter", p_inter)?;
    if n < 2 {
        return Err(NetworkError::TooFewNodes { min: 2, got: n });
    }
    let split = n.div_ceil(2);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            let p = if (u < split) == (v < split) {
                p_intra
            } else {
                p_inter
            };
            if rng.random::<f64>() < p {
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
    }
    Ok(undirected(adj, TopologyTag::StochasticBlock))
}

/// Directed scale-free growth from a directed triangle.
///
/// Growth events, in the generator's citation direction `v -> w`:
/// with probability `alpha` a new node `v` links to an existing `w` picked
/// by in-degree; with probability `beta` an existing `v` picked by
/// out-degree links to an existing `w` picked by in-degree; with
/// probability `gamma` an existing `v` picked by out-degree links to a new
/// node `w`. Degree smoothing is +1 on both sides. Growth stops at `n`
/// nodes; parallel edges and self-loops are collapsed.
///
/// A citation `v -> w` becomes the observation edge `w -> v` (`v` follows
/// `w`), so heavily cited nodes are the ones with many observers.
pub fn scale_free_directed<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    rng: &mut R,
) -> Result<SocialNetwork, NetworkError> {
    check_growth(alpha, beta, gamma)?;
    if n < 3 {
        return Err(NetworkError::TooFewNodes { min: 3, got: n });
    }
    const DELTA: f64 = 1.0;
    let mut citations: Vec<(usize, usize)> = vec![(0, 1), (1, 2), (2, 0)];
    let mut in_deg = vec![1usize, 1, 1];
    let mut out_deg = vec![1usize, 1, 1];

    fn pick<R: Rng + ?Sized>(deg: &[usize], total_edges: usize, rng: &mut R) -> usize {
        let total = total_edges as f64 + DELTA * deg.len() as f64;
        let mut target = rng.random::<f64>() * total;
        for (i, &d) in deg.iter().enumerate() {
            target -= d as f64 + DELTA;
            if target < 0.0 {
                return i;
            }
        }
        deg.len() - 1
    }

    while in_deg.len() < n {
        let r: f64 = rng.random();
        let m = citations.len();
        let (v, w) = if r < alpha {
            let w = pick(&in_deg, m, rng);
            let v = in_deg.len();
            in_deg.push(0);
            out_deg.push(0);
            (v, w)
        } else if r < alpha + beta {
            let v = pick(&out_deg, m, rng);
            let w = pick(&in_deg, m, rng);
            (v, w)
        } else {
            let v = pick(&out_deg, m, rng);
            let w = in_deg.len();
            in_deg.push(0);
            out_deg.push(0);
            (v, w)
        };
        citations.push((v, w));
        out_deg[v] += 1;
        in_deg[w] += 1;
    }
    let edges = citations.into_iter().map(|(v, w)| (w, v));
    Ok(SocialNetwork::from_edges(n, edges, TopologyTag::ScaleFree))
}

/// Assigns `round(lambda n)` informed and `round(xi n)` misinformed agents.
pub fn assign_categories<R: Rng + ?Sized>(
    net: SocialNetwork,
    lambda: f64,
    xi: f64,
    placement: Placement,
    rng: &mut R,
) -> Result<SocialNetwork, NetworkError> {
    let n = net.len();
    let n_inf = (lambda * n as f64).round() as usize;
    let n_mis = (xi * n as f64).round() as usize;
    if n_inf + n_mis > n {
        return Err(NetworkError::TooManySpecial {
            informed: n_inf,
            misinformed: n_mis,
            nodes: n,
        });
    }
    let mut cats = vec![AgentCategory::Uninformed; n];
    match placement {
        Placement::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for &i in &order[..n_inf] {
                cats[i] = AgentCategory::Informed;
            }
            for &i in &order[n_inf..n_inf + n_mis] {
                cats[i] = AgentCategory::Misinformed;
            }
        }
        Placement::HubsInformed | Placement::HubsMisinformed => {
            let (hub_cat, hub_count, other_cat, other_count) =
                if placement == Placement::HubsInformed {
                    (
                        AgentCategory::Informed,
                        n_inf,
                        AgentCategory::Misinformed,
                        n_mis,
                    )
                } else {
                    (
                        AgentCategory::Misinformed,
                        n_mis,
                        AgentCategory::Informed,
                        n_inf,
                    )
                };
            let out = net.out_degrees();
            let mut by_degree: Vec<usize> = (0..n).collect();
            by_degree.sort_by(|&a, &b| out[b].cmp(&out[a]).then(a.cmp(&b)));
            for &i in &by_degree[..hub_count] {
                cats[i] = hub_cat;
            }
            let mut rest: Vec<usize> = by_degree[hub_count..].to_vec();
            rest.sort_unstable();
            rest.shuffle(rng);
            for &i in &rest[..other_count] {
                cats[i] = other_cat;
            }
        }
        Placement::BlockSplit => {
            if net.topology() != TopologyTag::StochasticBlock {
                return Err(NetworkError::NotBlockTopology);
            }
            let split = n.div_ceil(2);
            for (block, range, count, cat) in [
                (0, 0..split, n_inf, AgentCategory::Informed),
                (1, split..n, n_mis, AgentCategory::Misinformed),
            ] {
                let mut nodes: Vec<usize> = range.collect();
                if nodes.len() < count {
                    return Err(NetworkError::BlockTooSmall {
                        block,
                        available: nodes.len(),
                        needed: count,
                    });
                }
                nodes.shuffle(rng);
                for &i in &nodes[..count] {
                    cats[i] = cat;
                }
            }
        }
    }
    Ok(net.with_categories(cats))
}
