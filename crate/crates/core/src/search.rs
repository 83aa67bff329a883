//! Nested depth-first search for accepting lassos in finite graphs.

/// A finite graph over dense node ids `0..node_count()`.
pub trait LassoGraph {
    fn node_count(&self) -> usize;
    fn initial(&self) -> Vec<usize>;
    /// Appends the successors of `node` to `out`, in exploration order.
    fn successors(&self, node: usize, out: &mut Vec<usize>);
    fn is_accepting(&self, node: usize) -> bool;
}

/// A path `stem` from an initial node followed by `cycle`, where
/// `cycle[0]` is accepting and the last cycle node has an edge back to
/// `cycle[0]`. The stem excludes `cycle[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<usize>,
    pub cycle: Vec<usize>,
}

// Successor lists of the frames on a DFS stack live in one shared buffer;
// frames are popped in LIFO order, so each pop truncates the buffer.
struct Frame {
    node: usize,
    start: usize,
    next: usize,
}

#[derive(Default)]
struct DfsStack {
    frames: Vec<Frame>,
    succ: Vec<usize>,
}

impl DfsStack {
    fn clear(&mut self) {
        self.frames.clear();
        self.succ.clear();
    }

    fn push<G: LassoGraph>(&mut self, g: &G, node: usize) {
        let start = self.succ.len();
        g.successors(node, &mut self.succ);
        self.frames.push(Frame { node, start, next: start });
    }

    /// Next unexplored successor of the top frame, if any.
    fn advance(&mut self) -> Option<usize> {
        let top = self.frames.last_mut()?;
        let end = self.succ.len();
        if top.next < end {
            top.next += 1;
            Some(self.succ[top.next - 1])
        } else {
            None
        }
    }

    fn pop(&mut self) {
        if let Some(f) = self.frames.pop() {
            self.succ.truncate(f.start);
        }
    }

    fn top(&self) -> Option<usize> {
        self.frames.last().map(|f| f.node)
    }

    fn path(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.node).collect()
    }
}

/// Returns the first accepting lasso found by the classic two-phase nested
/// search. Exploration follows the order of `initial()` and
/// `successors()`, so the result is deterministic.
pub fn find_accepting_lasso<G: LassoGraph>(g: &G) -> Option<Lasso> {
    NestedDfs::default().find(g)
}

/// Reusable buffers for repeated nested searches.
#[derive(Default)]
pub struct NestedDfs {
    outer_seen: Vec<bool>,
    inner_seen: Vec<bool>,
    outer: DfsStack,
    inner: DfsStack,
}

impl NestedDfs {
    pub fn find<G: LassoGraph>(&mut self, g: &G) -> Option<Lasso> {
        let seed = self.search(g)?;
        self.outer.pop();
        let lasso = Lasso { stem: self.outer.path(), cycle: self.inner.path() };
        debug_assert_eq!(lasso.cycle[0], seed);
        Some(lasso)
    }

    pub fn exists<G: LassoGraph>(&mut self, g: &G) -> bool {
        self.search(g).is_some()
    }

    // On success returns the accepting seed, with the outer stack holding the
    // path to it and the inner stack the cycle through it.
    fn search<G: LassoGraph>(&mut self, g: &G) -> Option<usize> {
        let n = g.node_count();
        self.outer_seen.clear();
        self.outer_seen.resize(n, false);
        self.inner_seen.clear();
        self.inner_seen.resize(n, false);
        self.outer.clear();
        self.inner.clear();
        for root in g.initial() {
            if self.outer_seen[root] {
                continue;
            }
            self.outer_seen[root] = true;
            self.outer.push(g, root);
            while let Some(top) = self.outer.top() {
                if let Some(v) = self.outer.advance() {
                    if !self.outer_seen[v] {
                        self.outer_seen[v] = true;
                        self.outer.push(g, v);
                    }
                    continue;
                }
                if g.is_accepting(top) && inner_search(g, top, &mut self.inner_seen, &mut self.inner) {
                    return Some(top);
                }
                self.outer.pop();
            }
        }
        None
    }
}

// Looks for a path from `seed` back to itself, leaving it on `stack`.
// Nodes visited by earlier inner searches are skipped, which keeps the whole
// search linear.
fn inner_search<G: LassoGraph>(g: &G, seed: usize, seen: &mut [bool], stack: &mut DfsStack) -> bool {
    stack.push(g, seed);
    while stack.top().is_some() {
        let Some(v) = stack.advance() else {
            stack.pop();
            continue;
        };
        if v == seed {
            return true;
        }
        if !seen[v] {
            seen[v] = true;
            stack.push(g, v);
        }
    }
    false
}
