//! The machine memory: a directed graph of nodes whose out-edges are labelled
//! by directions, with a distinguished center from which paths are resolved.
//!
//! Nodes are allocated monotonically and never deleted. Nodes that fall out of
//! reach of the center stay in the arena but are ignored by
//! [`StorageGraph::reachable_count`] and [`StorageGraph::to_dot`].

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

/// Errors raised by raw graph mutation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("direction alphabet is empty")]
    EmptyAlphabet,
    #[error("direction `{0}` declared twice")]
    DuplicateDirection(char),
    #[error("`{0}` cannot be used as a direction")]
    InvalidDirection(char),
    #[error("direction `{0}` is not in the alphabet")]
    UnknownDirection(Direction),
    #[error("no node with id {0}")]
    UnknownNode(NodeId),
}

/// A single-symbol edge label.
///
/// Any printable, non-whitespace character except `.` (the empty-path
/// literal) and `#` (comment marker) is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(char);

impl Direction {
    pub fn new(symbol: char) -> Result<Self, GraphError> {
        if symbol.is_whitespace() || symbol.is_control() || symbol == '.' || symbol == '#' {
            return Err(GraphError::InvalidDirection(symbol));
        }
        Ok(Self(symbol))
    }

    pub fn symbol(self) -> char {
        self.0
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char(self.0)
    }
}

/// Ordered set of directions. The order fixes edge storage layout and
/// output ordering; it has no effect on execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet(Vec<Direction>);

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = Direction>) -> Result<Self, GraphError> {
        let mut dirs: Vec<Direction> = Vec::new();
        for d in symbols {
            if dirs.contains(&d) {
                return Err(GraphError::DuplicateDirection(d.symbol()));
            }
            dirs.push(d);
        }
        if dirs.is_empty() {
            return Err(GraphError::EmptyAlphabet);
        }
        Ok(Self(dirs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, d: Direction) -> Option<usize> {
        self.0.iter().position(|&x| x == d)
    }

    pub fn contains(&self, d: Direction) -> bool {
        self.index_of(d).is_some()
    }

    pub fn is_subset_of(&self, other: &Alphabet) -> bool {
        self.0.iter().all(|&d| other.contains(d))
    }

    pub fn iter(&self) -> impl Iterator<Item = Direction> + '_ {
        self.0.iter().copied()
    }

    /// Looks up a direction by its symbol.
    pub fn direction(&self, symbol: char) -> Option<Direction> {
        self.0.iter().copied().find(|d| d.symbol() == symbol)
    }
}

impl Default for Alphabet {
    /// `n s e w`, in that order.
    fn default() -> Self {
        Self(['n', 's', 'e', 'w'].into_iter().map(Direction).collect())
    }
}

impl FromStr for Alphabet {
    type Err = GraphError;

    /// Parses a string of direction symbols, ignoring whitespace: `"nsew"` or `"n s e w"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dirs = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(Direction::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dirs)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_char(' ')?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A direction string. The empty path denotes the center itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Path(Vec<Direction>);

impl Path {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(dirs: Vec<Direction>) -> Self {
        Self(dirs)
    }

    /// Builds a path from symbols, checking each against `alphabet`.
    pub fn parse_in(symbols: &str, alphabet: &Alphabet) -> Result<Self, GraphError> {
        symbols
            .chars()
            .map(|c| {
                let d = Direction::new(c)?;
                if alphabet.contains(d) {
                    Ok(d)
                } else {
                    Err(GraphError::UnknownDirection(d))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.0
    }

    pub fn concat(&self, other: &Path) -> Path {
        Path(self.0.iter().chain(other.0.iter()).copied().collect())
    }
}

impl fmt::Display for Path {
    /// Directions concatenated; the empty path prints as `.`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_char('.');
        }
        self.0.iter().try_for_each(|d| write!(f, "{d}"))
    }
}

/// Opaque node identity, assigned in creation order. The Origin is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Result of resolving a path: a node, or `Nil` when some step is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Node(NodeId),
    Nil,
}

impl NodeRef {
    pub fn node(self) -> Option<NodeId> {
        match self {
            NodeRef::Node(id) => Some(id),
            NodeRef::Nil => None,
        }
    }

    pub fn is_nil(self) -> bool {
        self == NodeRef::Nil
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Node(id) => write!(f, "{id}"),
            NodeRef::Nil => f.write_str("nil"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    label: Option<String>,
    // Indexed by alphabet position.
    out: Vec<Option<NodeId>>,
}

impl Node {
    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn out_degree(&self) -> usize {
        self.out.iter().flatten().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageGraph {
    alphabet: Alphabet,
    nodes: Vec<Node>,
    center: NodeId,
}

impl StorageGraph {
    /// A graph holding only the Origin node, with no out-edges, as center.
    pub fn new(alphabet: Alphabet) -> Self {
        let origin = Node {
            label: Some("Origin".to_owned()),
            out: vec![None; alphabet.len()],
        };
        Self {
            alphabet,
            nodes: vec![origin],
            center: NodeId(0),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn origin(&self) -> NodeId {
        NodeId(0)
    }

    pub fn center(&self) -> NodeId {
        self.center
    }

    /// Total nodes ever created, reachable or not.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes.get(id.index()).ok_or(GraphError::UnknownNode(id))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.nodes.get(id.index()).and_then(|n| n.label.as_deref())
    }

    /// Finds the first node carrying `label`.
    pub fn find_label(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.label.as_deref() == Some(label))
            .map(|i| NodeId(i as u32))
    }

    fn check(&self, id: NodeId) -> Result<(), GraphError> {
        self.node(id).map(|_| ())
    }

    fn dir_index(&self, d: Direction) -> Result<usize, GraphError> {
        self.alphabet
            .index_of(d)
            .ok_or(GraphError::UnknownDirection(d))
    }

    /// Creates a node whose every out-edge targets `target`. The center is
    /// left where it is.
    pub fn add_node(&mut self, label: Option<String>, target: NodeId) -> Result<NodeId, GraphError> {
        self.check(target)?;
        let id = NodeId(
            u32::try_from(self.nodes.len()).expect("node arena exceeds u32 ids"),
        );
        self.nodes.push(Node {
            label,
            out: vec![Some(target); self.alphabet.len()],
        });
        Ok(id)
    }

    pub fn edge(&self, node: NodeId, d: Direction) -> Result<Option<NodeId>, GraphError> {
        let i = self.dir_index(d)?;
        Ok(self.node(node)?.out[i])
    }

    /// Points the `d` edge of `node` at `target`, creating the edge if needed.
    pub fn set_edge(&mut self, node: NodeId, d: Direction, target: NodeId) -> Result<(), GraphError> {
        let i = self.dir_index(d)?;
        self.check(target)?;
        let n = self
            .nodes
            .get_mut(node.index())
            .ok_or(GraphError::UnknownNode(node))?;
        n.out[i] = Some(target);
        Ok(())
    }

    pub fn set_center(&mut self, node: NodeId) -> Result<(), GraphError> {
        self.check(node)?;
        self.center = node;
        Ok(())
    }

    /// `p(x)`: follows `path` from the center.
    pub fn resolve(&self, path: &Path) -> NodeRef {
        self.resolve_from(self.center, path)
    }

    /// Follows `path` from `start`. Directions outside the alphabet resolve to `Nil`.
    pub fn resolve_from(&self, start: NodeId, path: &Path) -> NodeRef {
        let mut at = start;
        for &d in path.directions() {
            let Some(i) = self.alphabet.index_of(d) else {
                return NodeRef::Nil;
            };
            match self.nodes.get(at.index()).and_then(|n| n.out[i]) {
                Some(next) => at = next,
                None => return NodeRef::Nil,
            }
        }
        if self.nodes.get(at.index()).is_some() {
            NodeRef::Node(at)
        } else {
            NodeRef::Nil
        }
    }

    /// Node ids reachable from the center (center included), in ascending id order.
    pub fn reachable(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([self.center]);
        seen[self.center.index()] = true;
        while let Some(id) = queue.pop_front() {
            for next in self.nodes[id.index()].out.iter().flatten() {
                if !seen[next.index()] {
                    seen[next.index()] = true;
                    queue.push_back(*next);
                }
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }

    /// Number of nodes reachable from the center; the machine's space measure.
    pub fn reachable_count(&self) -> usize {
        self.reachable().len()
    }

    /// Graphviz rendering of the reachable subgraph. Vertices are ordered by
    /// id and arcs by alphabet order, so the output is stable. The center is
    /// drawn with a double border.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph smm {\n");
        let reachable = self.reachable();
        for &id in &reachable {
            let label = match self.label(id) {
                Some(l) => format!("{id}: {}", escape_dot(l)),
                None => id.to_string(),
            };
            let shape = if id == self.center { ", shape=doublecircle" } else { "" };
            let _ = writeln!(out, "  {id} [label=\"{label}\"{shape}];");
        }
        for &id in &reachable {
            for (d, target) in self.alphabet.iter().zip(&self.nodes[id.index()].out) {
                if let Some(t) = target {
                    let _ = writeln!(out, "  {id} -> {t} [label=\"{}\"];", escape_dot(&d.to_string()));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
