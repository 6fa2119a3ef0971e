//! Control-flow graphs of code-generation nodes.
//!
//! A valid graph is a DAG with a unique root and a unique leaf in which every
//! path starting at the root ends at the leaf. Traversal follows the blocking
//! protocol: a node is visited only after all of its incoming edges have been
//! traversed, with ties broken by insertion index.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);
static NEXT_PAIR_ID: AtomicU64 = AtomicU64::new(1);

/// Identifies a begin-end partner pair ("knows" association).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairId(u64);

impl PairId {
    pub fn fresh() -> Self {
        PairId(NEXT_PAIR_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRole {
    Begin,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFamily {
    Loop,
    ConcurrentData,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    CodeGen,
    BeginEnd {
        role: PairRole,
        family: PairFamily,
        pair: PairId,
    },
    /// Fan-in join; does nothing for the tree.
    Null,
}

/// Code-generation payload executed when the node is visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeAction {
    /// Attach sections of a registered template. An empty `connectors` list
    /// means all sections.
    CodeGen {
        template: String,
        connectors: Vec<String>,
    },
    /// Begin payload: a connector section containing the region's interior
    /// link (loop header, link, footer).
    Region {
        template: String,
        connector: String,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    pub action: NodeAction,
}

impl NodeSpec {
    pub fn code_gen(name: &str, template: &str, connectors: &[&str]) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::CodeGen,
            action: NodeAction::CodeGen {
                template: template.to_string(),
                connectors: connectors.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn null(name: &str) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::Null,
            action: NodeAction::None,
        }
    }

    fn root() -> Self {
        NodeSpec {
            name: "root".to_string(),
            kind: NodeKind::Root,
            action: NodeAction::None,
        }
    }
}

/// Opaque node identifier, valid only for the graph that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Handle {
    graph_id: u64,
    pub(crate) index: usize,
}

impl Handle {
    /// Insertion index of the node within its graph (root is 0).
    pub fn index(self) -> usize {
        self.index
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("handle belongs to a different graph")]
    ForeignHandle,
    #[error("node `{0}` was added with no dependencies")]
    EmptyDeps(String),
    #[error("graph has not been validated")]
    NotValidated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Cycle(Vec<Handle>),
    MultipleLeaves(Vec<Handle>),
    Unreachable(Handle),
    DeadEnd(Handle),
    UnmatchedBeginEnd { pair: PairId, detail: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Cycle(nodes) => write!(f, "cycle through {} node(s)", nodes.len()),
            Violation::MultipleLeaves(hs) => write!(f, "{} terminal nodes (expected 1)", hs.len()),
            Violation::Unreachable(h) => write!(f, "node {} unreachable from root", h.index),
            Violation::DeadEnd(h) => write!(f, "node {} cannot reach the leaf", h.index),
            Violation::UnmatchedBeginEnd { detail, .. } => {
                write!(f, "unmatched begin-end pair: {detail}")
            }
        }
    }
}

/// Dependency argument for `add`: one handle or a list of handles.
pub enum Deps {
    One(Handle),
    Many(Vec<Handle>),
}

impl From<Handle> for Deps {
    fn from(h: Handle) -> Self {
        Deps::One(h)
    }
}

impl From<Vec<Handle>> for Deps {
    fn from(hs: Vec<Handle>) -> Self {
        Deps::Many(hs)
    }
}

impl From<&[Handle]> for Deps {
    fn from(hs: &[Handle]) -> Self {
        Deps::Many(hs.to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    graph_id: u64,
    nodes: Vec<NodeSpec>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    validated: bool,
}

impl Default for FlowGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl FlowGraph {
    /// Creates a graph holding only the implicit root node.
    pub fn new() -> Self {
        FlowGraph {
            graph_id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            nodes: vec![NodeSpec::root()],
            succ: vec![Vec::new()],
            pred: vec![Vec::new()],
            validated: false,
        }
    }

    pub fn root(&self) -> Handle {
        Handle {
            graph_id: self.graph_id,
            index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the root always exists
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn node(&self, handle: Handle) -> &NodeSpec {
        assert_eq!(handle.graph_id, self.graph_id, "foreign handle");
        &self.nodes[handle.index]
    }

    pub fn handles(&self) -> impl Iterator<Item = Handle> + '_ {
        (0..self.nodes.len()).map(|index| Handle {
            graph_id: self.graph_id,
            index,
        })
    }

    /// Inserts a node with one directed edge per distinct dependency and
    /// returns its handle.
    pub fn add(&mut self, node: NodeSpec, deps: impl Into<Deps>) -> Result<Handle, GraphError> {
        let deps = match deps.into() {
            Deps::One(h) => vec![h],
            Deps::Many(hs) => hs,
        };
        if deps.is_empty() {
            return Err(GraphError::EmptyDeps(node.name));
        }
        if deps.iter().any(|h| h.graph_id != self.graph_id) {
            return Err(GraphError::ForeignHandle);
        }
        let index = self.nodes.len();
        self.nodes.push(node);
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        for dep in deps {
            // duplicate deps collapse to a single edge
            if !self.succ[dep.index].contains(&index) {
                self.succ[dep.index].push(index);
                self.pred[index].push(dep.index);
            }
        }
        self.validated = false;
        Ok(Handle {
            graph_id: self.graph_id,
            index,
        })
    }

    fn handle(&self, index: usize) -> Handle {
        Handle {
            graph_id: self.graph_id,
            index,
        }
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // iterative DFS with colors; returns the nodes on the first back edge's cycle
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let n = self.nodes.len();
        let mut color = vec![Color::White; n];
        let mut parent = vec![usize::MAX; n];
        for start in 0..n {
            if color[start] != Color::White {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = Color::Gray;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if *next < self.succ[u].len() {
                    let v = self.succ[u][*next];
                    *next += 1;
                    match color[v] {
                        Color::White => {
                            color[v] = Color::Gray;
                            parent[v] = u;
                            stack.push((v, 0));
                        }
                        Color::Gray => {
                            // walk back from u to v to recover the cycle
                            let mut cycle = vec![v];
                            let mut cur = u;
                            while cur != v && cur != usize::MAX {
                                cycle.push(cur);
                                cur = parent[cur];
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        Color::Black => {}
                    }
                } else {
                    color[u] = Color::Black;
                    stack.pop();
                }
            }
        }
        None
    }

    fn reachable_from(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            let next = if forward { &self.succ[u] } else { &self.pred[u] };
            for &v in next {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Enumerates all root-to-leaf paths and checks begin-end pairing and
    /// nesting along each one.
    fn check_begin_end(&self, leaf: usize, violations: &mut Vec<Violation>) {
        use std::collections::BTreeMap;
        let mut begins: BTreeMap<PairId, usize> = BTreeMap::new();
        let mut ends: BTreeMap<PairId, usize> = BTreeMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let NodeKind::BeginEnd { role, pair, .. } = &node.kind {
                let map = match role {
                    PairRole::Begin => &mut begins,
                    PairRole::End => &mut ends,
                };
                if map.insert(*pair, idx).is_some() {
                    violations.push(Violation::UnmatchedBeginEnd {
                        pair: *pair,
                        detail: "pair member used more than once".to_string(),
                    });
                    return;
                }
            }
        }
        for (pair, _) in &begins {
            if !ends.contains_key(pair) {
                violations.push(Violation::UnmatchedBeginEnd {
                    pair: *pair,
                    detail: "begin without matching end".to_string(),
                });
            }
        }
        for (pair, _) in &ends {
            if !begins.contains_key(pair) {
                violations.push(Violation::UnmatchedBeginEnd {
                    pair: *pair,
                    detail: "end without matching begin".to_string(),
                });
            }
        }
        if begins.is_empty() || !violations.is_empty() {
            return;
        }

        // DFS over all root->leaf paths, tracking the open-pair stack.
        // Recipes are small graphs; the path count stays manageable and a
        // budget guards against pathological fan-out.
        fn walk(
            g: &FlowGraph,
            u: usize,
            leaf: usize,
            open: &mut Vec<PairId>,
            budget: &mut usize,
            violations: &mut Vec<Violation>,
        ) -> bool {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let mut pushed = false;
            let mut popped: Option<PairId> = None;
            if let NodeKind::BeginEnd { role, pair, .. } = &g.nodes[u].kind {
                match role {
                    PairRole::Begin => {
                        open.push(*pair);
                        pushed = true;
                    }
                    PairRole::End => {
                        if open.last() == Some(pair) {
                            popped = open.pop();
                        } else {
                            violations.push(Violation::UnmatchedBeginEnd {
                                pair: *pair,
                                detail: if open.contains(pair) {
                                    "interleaved begin-end pairs".to_string()
                                } else {
                                    "end reached before its begin".to_string()
                                },
                            });
                            return false;
                        }
                    }
                }
            }
            let mut ok = true;
            if u == leaf {
                if let Some(pair) = open.last() {
                    violations.push(Violation::UnmatchedBeginEnd {
                        pair: *pair,
                        detail: "path ends with unclosed begin".to_string(),
                    });
                    ok = false;
                }
            } else {
                for &v in &g.succ[u] {
                    if !walk(g, v, leaf, open, budget, violations) {
                        ok = false;
                        break;
                    }
                }
            }
            // undo this node's effect before returning to the caller
            if pushed {
                open.pop();
            } else if let Some(pair) = popped {
                open.push(pair);
            }
            ok
        }
        let mut open = Vec::new();
        let mut budget = 500_000usize;
        walk(self, 0, leaf, &mut open, &mut budget, violations);
    }

    /// Checks the three validity requirements plus begin-end nesting.
    /// On success the graph is marked validated and may be traversed.
    pub fn validate(&mut self) -> Result<(), Vec<Violation>> {
        let violations = self.violations();
        if violations.is_empty() {
            self.validated = true;
            Ok(())
        } else {
            self.validated = false;
            Err(violations)
        }
    }

    /// Like `validate` but without marking the graph; violations are data.
    pub fn violations(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        if let Some(cycle) = self.find_cycle() {
            violations.push(Violation::Cycle(
                cycle.into_iter().map(|i| self.handle(i)).collect(),
            ));
            return violations;
        }

        let leaves: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.succ[i].is_empty())
            .collect();
        if leaves.len() > 1 {
            violations.push(Violation::MultipleLeaves(
                leaves.iter().map(|&i| self.handle(i)).collect(),
            ));
        }

        let from_root = self.reachable_from(0, true);
        for (idx, reached) in from_root.iter().enumerate() {
            if !reached {
                violations.push(Violation::Unreachable(self.handle(idx)));
            }
        }

        if leaves.len() == 1 {
            let to_leaf = self.reachable_from(leaves[0], false);
            for (idx, reaches) in to_leaf.iter().enumerate() {
                if !reaches && from_root[idx] {
                    violations.push(Violation::DeadEnd(self.handle(idx)));
                }
            }
            if violations.is_empty() {
                self.check_begin_end(leaves[0], &mut violations);
            }
        }
        violations
    }

    /// Blocking traversal: every node once, all predecessors first, ties
    /// broken by lowest insertion index. Requires a validated graph.
    pub fn traverse(&self) -> Result<Vec<Handle>, GraphError> {
        self.traverse_with(|_, _| {})
    }

    pub fn traverse_with(
        &self,
        mut visit: impl FnMut(Handle, &NodeSpec),
    ) -> Result<Vec<Handle>, GraphError> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        if !self.validated {
            return Err(GraphError::NotValidated);
        }
        let mut remaining: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        ready.push(Reverse(0));
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(u)) = ready.pop() {
            let handle = self.handle(u);
            visit(handle, &self.nodes[u]);
            order.push(handle);
            for &v in &self.succ[u] {
                remaining[v] -= 1;
                if remaining[v] == 0 {
                    ready.push(Reverse(v));
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len());
        Ok(order)
    }

    /// A maximum-length root-to-leaf path (dynamic programming over the
    /// traversal order).
    pub fn longest_path(&self) -> Result<Vec<Handle>, GraphError> {
        let order = self.traverse()?;
        let n = self.nodes.len();
        let mut dist = vec![0usize; n];
        let mut prev = vec![usize::MAX; n];
        for handle in &order {
            let u = handle.index;
            for &v in &self.succ[u] {
                if dist[u] + 1 > dist[v] {
                    dist[v] = dist[u] + 1;
                    prev[v] = u;
                }
            }
        }
        let end = (0..n).max_by_key(|&i| dist[i]).unwrap_or(0);
        let mut path = vec![end];
        let mut cur = end;
        while prev[cur] != usize::MAX {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Ok(path.into_iter().map(|i| self.handle(i)).collect())
    }

    /// Plain-text description for visual inspection: one `node` line per
    /// node (index, kind, name) followed by `edge from to` lines.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            let kind = match &node.kind {
                NodeKind::Root => "root",
                NodeKind::CodeGen => "codegen",
                NodeKind::BeginEnd {
                    role: PairRole::Begin,
                    ..
                } => "begin",
                NodeKind::BeginEnd {
                    role: PairRole::End, ..
                } => "end",
                NodeKind::Null => "null",
            };
            out.push_str(&format!("node {idx} {kind} {}\n", node.name));
        }
        for (u, next) in self.succ.iter().enumerate() {
            for &v in next {
                out.push_str(&format!("edge {u} {v}\n"));
            }
        }
        out
    }
}
