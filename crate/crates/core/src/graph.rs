use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::{AsId, CoreError, Ip, Timestamp};

/// Granularity of an observed graph. Anonymous nodes appear only at the
/// IP level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphLevel {
    Ip,
    Router,
    As,
}

impl fmt::Display for GraphLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphLevel::Ip => "ip",
            GraphLevel::Router => "router",
            GraphLevel::As => "as",
        })
    }
}

impl FromStr for GraphLevel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "ip" => Ok(GraphLevel::Ip),
            "router" => Ok(GraphLevel::Router),
            "as" => Ok(GraphLevel::As),
            other => Err(CoreError::ParseGraph {
                line: 1,
                reason: format!("unknown graph level `{other}`"),
            }),
        }
    }
}

/// Identity of a topology node. Anonymous keys name a non-responding hop
/// by its nearest responding neighbors plus the hop index from the former
/// one, so identical hop patterns map to identical nodes across traces.
/// Router keys carry the representative (lowest) interface address of the
/// alias set or ground-truth router they stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKey {
    Known(Ip),
    Anonymous { prev: Ip, next: Ip, index: u32 },
    Router(Ip),
    As(AsId),
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Known(ip) => write!(f, "{ip}"),
            NodeKey::Anonymous { prev, next, index } => {
                write!(f, "anon:{prev}:{next}:{index}")
            }
            NodeKey::Router(ip) => write!(f, "router:{ip}"),
            NodeKey::As(id) => write!(f, "AS{id}"),
        }
    }
}

impl FromStr for NodeKey {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        let bad = |reason: &str| CoreError::ParseGraph {
            line: 0,
            reason: format!("bad node `{s}`: {reason}"),
        };
        if let Some(rest) = s.strip_prefix("anon:") {
            let mut it = rest.split(':');
            let prev: Ip = it.next().ok_or_else(|| bad("missing prev"))?.parse()?;
            let next: Ip = it.next().ok_or_else(|| bad("missing next"))?.parse()?;
            let index: u32 = it
                .next()
                .ok_or_else(|| bad("missing index"))?
                .parse()
                .map_err(|_| bad("bad index"))?;
            if it.next().is_some() {
                return Err(bad("trailing fields"));
            }
            Ok(NodeKey::Anonymous { prev, next, index })
        } else if let Some(rest) = s.strip_prefix("router:") {
            Ok(NodeKey::Router(rest.parse()?))
        } else if let Some(rest) = s.strip_prefix("AS") {
            Ok(NodeKey::As(rest.parse()?))
        } else {
            Ok(NodeKey::Known(s.parse()?))
        }
    }
}

/// Unordered node pair; construction normalizes endpoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey(NodeKey, NodeKey);

impl EdgeKey {
    pub fn new(a: NodeKey, b: NodeKey) -> Result<Self, CoreError> {
        if a == b {
            return Err(CoreError::SelfLoop(a.to_string()));
        }
        if a <= b {
            Ok(EdgeKey(a, b))
        } else {
            Ok(EdgeKey(b, a))
        }
    }

    pub fn a(&self) -> NodeKey {
        self.0
    }

    pub fn b(&self) -> NodeKey {
        self.1
    }
}

/// How often and from where an edge was observed. `first_seen` and
/// `first_agent_rank` belong to the observation with the smallest
/// (timestamp, rank) pair, which keeps graph construction independent of
/// ingest order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationStats {
    pub measurement_count: u64,
    pub source_ases: BTreeSet<AsId>,
    pub first_seen: Timestamp,
    pub first_agent_rank: u32,
}

impl ObservationStats {
    pub fn single(source_as: AsId, ts: Timestamp, rank: u32) -> Self {
        ObservationStats {
            measurement_count: 1,
            source_ases: BTreeSet::from([source_as]),
            first_seen: ts,
            first_agent_rank: rank,
        }
    }

    fn observe(&mut self, source_as: AsId, ts: Timestamp, rank: u32) {
        self.measurement_count += 1;
        self.source_ases.insert(source_as);
        if (ts, rank) < (self.first_seen, self.first_agent_rank) {
            self.first_seen = ts;
            self.first_agent_rank = rank;
        }
    }

    /// Fold another edge's stats into this one (used when alias merging
    /// collapses parallel edges).
    pub fn merge(&mut self, other: &ObservationStats) {
        self.measurement_count += other.measurement_count;
        self.source_ases.extend(other.source_ases.iter().copied());
        if (other.first_seen, other.first_agent_rank) < (self.first_seen, self.first_agent_rank) {
            self.first_seen = other.first_seen;
            self.first_agent_rank = other.first_agent_rank;
        }
    }
}

/// Undirected multigraph-free graph whose edges carry observation
/// statistics. Direction of discovery is discarded at insertion and
/// self-loops are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedGraph {
    level: GraphLevel,
    nodes: BTreeSet<NodeKey>,
    edges: BTreeMap<EdgeKey, ObservationStats>,
}

impl ObservedGraph {
    pub fn new(level: GraphLevel) -> Self {
        ObservedGraph {
            level,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn level(&self) -> GraphLevel {
        self.level
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeKey> {
        self.nodes.iter()
    }

    pub fn contains_node(&self, n: &NodeKey) -> bool {
        self.nodes.contains(n)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, &ObservationStats)> {
        self.edges.iter()
    }

    pub fn stats(&self, a: NodeKey, b: NodeKey) -> Option<&ObservationStats> {
        let key = EdgeKey::new(a, b).ok()?;
        self.edges.get(&key)
    }

    pub fn has_edge(&self, a: NodeKey, b: NodeKey) -> bool {
        self.stats(a, b).is_some()
    }

    /// Record one observation of the undirected pair (a, b).
    pub fn add_observation(
        &mut self,
        a: NodeKey,
        b: NodeKey,
        source_as: AsId,
        ts: Timestamp,
        agent_rank: u32,
    ) -> Result<(), CoreError> {
        let key = EdgeKey::new(a, b)?;
        self.nodes.insert(a);
        self.nodes.insert(b);
        self.edges
            .entry(key)
            .and_modify(|s| s.observe(source_as, ts, agent_rank))
            .or_insert_with(|| ObservationStats::single(source_as, ts, agent_rank));
        Ok(())
    }

    /// Insert a whole edge, merging stats if the pair already exists.
    pub fn merge_edge(
        &mut self,
        a: NodeKey,
        b: NodeKey,
        stats: ObservationStats,
    ) -> Result<(), CoreError> {
        let key = EdgeKey::new(a, b)?;
        self.nodes.insert(a);
        self.nodes.insert(b);
        self.edges
            .entry(key)
            .and_modify(|s| s.merge(&stats))
            .or_insert(stats);
        Ok(())
    }

    /// Keep edges observed at least `min_measurements` times; nodes left
    /// without any edge are dropped.
    pub fn filter_edges(&self, min_measurements: u64) -> ObservedGraph {
        assert!(min_measurements >= 1, "min_measurements must be >= 1");
        let mut out = ObservedGraph::new(self.level);
        for (key, stats) in &self.edges {
            if stats.measurement_count >= min_measurements {
                out.nodes.insert(key.a());
                out.nodes.insert(key.b());
                out.edges.insert(*key, stats.clone());
            }
        }
        out
    }

    /// Induced subgraph on the given node set.
    pub fn restrict_to(&self, keep: &BTreeSet<NodeKey>) -> ObservedGraph {
        let mut out = ObservedGraph::new(self.level);
        for (key, stats) in &self.edges {
            if keep.contains(&key.a()) && keep.contains(&key.b()) {
                out.nodes.insert(key.a());
                out.nodes.insert(key.b());
                out.edges.insert(*key, stats.clone());
            }
        }
        out
    }

    pub fn degree(&self, n: &NodeKey) -> usize {
        self.edges
            .keys()
            .filter(|k| k.a() == *n || k.b() == *n)
            .count()
    }

    /// Adjacency sets keyed by node, covering every node (possibly empty
    /// neighbor set never occurs since nodes come from edges).
    pub fn adjacency(&self) -> BTreeMap<NodeKey, BTreeSet<NodeKey>> {
        let mut adj: BTreeMap<NodeKey, BTreeSet<NodeKey>> = BTreeMap::new();
        for n in &self.nodes {
            adj.entry(*n).or_default();
        }
        for key in self.edges.keys() {
            adj.entry(key.a()).or_default().insert(key.b());
            adj.entry(key.b()).or_default().insert(key.a());
        }
        adj
    }

    /// One edge per line, tab separated, after a header line naming the
    /// level. Lines are ordered lexicographically by the rendered
    /// (nodeA, nodeB) pair, with nodeA <= nodeB.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String, &ObservationStats)> = self
            .edges
            .iter()
            .map(|(key, stats)| {
                let mut sa = key.a().to_string();
                let mut sb = key.b().to_string();
                if sa > sb {
                    std::mem::swap(&mut sa, &mut sb);
                }
                (sa, sb, stats)
            })
            .collect();
        lines.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));

        let mut out = format!("level\t{}\n", self.level);
        for (sa, sb, stats) in lines {
            let ases: Vec<String> = stats.source_ases.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                self.level,
                sa,
                sb,
                stats.measurement_count,
                ases.join(","),
                stats.first_seen,
                stats.first_agent_rank,
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CoreError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(CoreError::ParseGraph {
            line: 1,
            reason: "empty graph file".into(),
        })?;
        let level: GraphLevel = header
            .strip_prefix("level\t")
            .ok_or(CoreError::ParseGraph {
                line: 1,
                reason: "missing level header".into(),
            })?
            .parse()?;
        let mut graph = ObservedGraph::new(level);
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let err = |reason: String| CoreError::ParseGraph {
                line: lineno,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 7 {
                return Err(err(format!("expected 7 fields, got {}", fields.len())));
            }
            let a: NodeKey = fields[1].parse()?;
            let b: NodeKey = fields[2].parse()?;
            let count: u64 = fields[3]
                .parse()
                .map_err(|_| err("bad measurement count".into()))?;
            let mut source_ases = BTreeSet::new();
            for part in fields[4].split(',') {
                let id: u32 = part.parse().map_err(|_| err("bad source AS".into()))?;
                source_ases.insert(AsId(id));
            }
            let first_seen: Timestamp = fields[5]
                .parse()
                .map_err(|_| err("bad first_seen".into()))?;
            let first_agent_rank: u32 =
                fields[6].parse().map_err(|_| err("bad agent rank".into()))?;
            graph.merge_edge(
                a,
                b,
                ObservationStats {
                    measurement_count: count,
                    source_ases,
                    first_seen,
                    first_agent_rank,
                },
            )?;
        }
        Ok(graph)
    }
}
