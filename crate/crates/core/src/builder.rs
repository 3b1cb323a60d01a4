//! The stack machine that turns a token stream into an ATN.
//!
//! Semantics of each token:
//!
//! * condition / action: push a label item.
//! * `node`: create a graph node and push a reference to it.
//! * `connect`: with `T` the topmost node reference and `S` the next one
//!   below it, add the edge `S -> T` labelled with every label item lying
//!   above `S`. Those labels are consumed; node references stay.
//! * `connect self|start|end`: same with `T -> T`, `Start -> T` or
//!   `T -> End`, consuming the labels above `T`.
//! * `dup node` pushes another reference to the topmost node; `dup label`
//!   duplicates the topmost label in place. `del` removes the topmost item
//!   of its kind (never the graph node itself).
//! * `swap`, `roll` (top to bottom) and `unroll` (bottom to top) act on the
//!   whole stack for scope `all`, or only on the positions held by items of
//!   their kind otherwise.
//!
//! Any token whose operands are missing does nothing, so every token stream
//! builds some graph. Labels still on the stack at the end form one last edge
//! from the topmost remaining node (or Start) to End.

use std::fmt::Write as _;

use crate::token::{Condition, Direction, Scope, StackOp, StackVerb, StructureOp, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Condition(Condition),
    Action(Direction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StackItem {
    Node(NodeId),
    Label(Label),
}

impl StackItem {
    fn in_scope(&self, scope: Scope) -> bool {
        match scope {
            Scope::All => true,
            Scope::Node => matches!(self, StackItem::Node(_)),
            Scope::Label => matches!(self, StackItem::Label(_)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub conditions: Vec<Condition>,
    pub actions: Vec<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildConfig {
    pub no_contradiction: bool,
    pub typed_stack_ops: bool,
}

/// A built automaton. Node 0 is Start, node 1 is End, created nodes follow
/// in creation order. Edges keep their creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atn {
    node_count: usize,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
}

impl Default for Atn {
    fn default() -> Self {
        Atn {
            node_count: 2,
            edges: Vec::new(),
            outgoing: vec![Vec::new(), Vec::new()],
        }
    }
}

impl Atn {
    pub const START: NodeId = NodeId(0);
    pub const END: NodeId = NodeId(1);

    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self) -> NodeId {
        self.outgoing.push(Vec::new());
        self.node_count += 1;
        NodeId(self.node_count - 1)
    }

    /// Appends an edge. Panics if either endpoint does not exist.
    pub fn add_edge(&mut self, edge: Edge) -> usize {
        assert!(edge.src.0 < self.node_count && edge.dst.0 < self.node_count);
        let idx = self.edges.len();
        self.outgoing[edge.src.0].push(idx);
        self.edges.push(edge);
        idx
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`Atn::edges`] of the edges leaving `node`, in creation order.
    pub fn outgoing(&self, node: NodeId) -> &[usize] {
        &self.outgoing[node.0]
    }

    /// Display number: Start is 0, created nodes 1..=k, End is k + 1.
    pub fn display_id(&self, node: NodeId) -> usize {
        match node.0 {
            0 => 0,
            1 => self.node_count - 1,
            n => n - 1,
        }
    }

    /// Graphviz rendering with conditions printed above actions.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph atn {\n  rankdir=LR;\n");
        let end = self.display_id(Self::END);
        let _ = writeln!(out, "  0 [shape=doublecircle, xlabel=\"Start\"];");
        for n in 1..end {
            let _ = writeln!(out, "  {n} [shape=circle];");
        }
        let _ = writeln!(out, "  {end} [shape=doublecircle, xlabel=\"End\"];");
        for e in &self.edges {
            let conds: Vec<String> = e
                .conditions
                .iter()
                .map(|c| format!("{}{}", c.kind.letter(), c.direction))
                .collect();
            let acts: Vec<&str> = e.actions.iter().map(|d| d.as_str()).collect();
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{}\\n{}\"];",
                self.display_id(e.src),
                self.display_id(e.dst),
                conds.join(" "),
                acts.join(" ")
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Keeps the first condition on each direction, dropping later ones.
pub fn filter_contradictions(conditions: &[Condition]) -> Vec<Condition> {
    let mut seen = [false; 8];
    conditions
        .iter()
        .filter(|c| !std::mem::replace(&mut seen[c.direction.index()], true))
        .copied()
        .collect()
}

/// Incremental interpreter state: the stack and the graph under construction.
#[derive(Debug, Clone, Default)]
pub struct Builder {
    config: BuildConfig,
    stack: Vec<StackItem>,
    atn: Atn,
}

impl Builder {
    pub fn new(config: BuildConfig) -> Self {
        Builder {
            config,
            stack: Vec::new(),
            atn: Atn::new(),
        }
    }

    /// Bottom first.
    pub fn stack(&self) -> &[StackItem] {
        &self.stack
    }

    pub fn atn(&self) -> &Atn {
        &self.atn
    }

    pub fn apply(&mut self, token: Token) {
        match token {
            Token::Condition(c) => self.stack.push(StackItem::Label(Label::Condition(c))),
            Token::Action(d) => self.stack.push(StackItem::Label(Label::Action(d))),
            Token::Structure(op) => self.structure(op),
            Token::Stack(op) => self.stack_op(op),
        }
    }

    /// Attaches leftover labels and returns the graph.
    pub fn finish(mut self) -> Atn {
        if self.stack.iter().any(|i| matches!(i, StackItem::Label(_))) {
            let src = self.node_positions().last().map_or(Atn::START, |&p| self.node_at(p));
            let (conditions, actions) = self.take_labels_above(None);
            self.push_edge(src, Atn::END, conditions, actions);
        }
        self.stack.clear();
        self.atn
    }

    fn structure(&mut self, op: StructureOp) {
        let nodes = self.node_positions();
        match op {
            StructureOp::Node => {
                let id = self.atn.add_node();
                self.stack.push(StackItem::Node(id));
            }
            StructureOp::Connect => {
                let [.., s, t] = nodes[..] else { return };
                let (src, dst) = (self.node_at(s), self.node_at(t));
                let (conditions, actions) = self.take_labels_above(Some(s));
                self.push_edge(src, dst, conditions, actions);
            }
            StructureOp::ConnectSelf | StructureOp::ConnectStart | StructureOp::ConnectEnd => {
                let Some(&t) = nodes.last() else { return };
                let node = self.node_at(t);
                let (src, dst) = match op {
                    StructureOp::ConnectSelf => (node, node),
                    StructureOp::ConnectStart => (Atn::START, node),
                    _ => (node, Atn::END),
                };
                let (conditions, actions) = self.take_labels_above(Some(t));
                self.push_edge(src, dst, conditions, actions);
            }
        }
    }

    fn stack_op(&mut self, op: StackOp) {
        let scope = op.scope();
        let positions: Vec<usize> = (0..self.stack.len())
            .filter(|&i| self.stack[i].in_scope(scope))
            .collect();
        match op.verb() {
            StackVerb::Dup => {
                let Some(&top) = positions.last() else { return };
                let item = self.stack[top];
                match scope {
                    Scope::Node => self.stack.push(item),
                    _ => self.stack.insert(top + 1, item),
                }
            }
            StackVerb::Del => {
                if let Some(&top) = positions.last() {
                    self.stack.remove(top);
                }
            }
            StackVerb::Swap => {
                if let [.., a, b] = positions[..] {
                    self.stack.swap(a, b);
                }
            }
            StackVerb::Roll => self.rotate(&positions, true),
            StackVerb::Unroll => self.rotate(&positions, false),
        }
    }

    /// Rotates the items held at `positions` (ascending) by one place.
    fn rotate(&mut self, positions: &[usize], top_to_bottom: bool) {
        if positions.len() < 2 {
            return;
        }
        let mut items: Vec<StackItem> = positions.iter().map(|&p| self.stack[p]).collect();
        if top_to_bottom {
            items.rotate_right(1);
        } else {
            items.rotate_left(1);
        }
        for (&p, item) in positions.iter().zip(items) {
            self.stack[p] = item;
        }
    }

    fn node_positions(&self) -> Vec<usize> {
        (0..self.stack.len())
            .filter(|&i| matches!(self.stack[i], StackItem::Node(_)))
            .collect()
    }

    fn node_at(&self, pos: usize) -> NodeId {
        match self.stack[pos] {
            StackItem::Node(id) => id,
            StackItem::Label(_) => unreachable!("position {pos} holds a label"),
        }
    }

    /// Removes the labels above `floor` (all labels for `None`), in push order.
    fn take_labels_above(&mut self, floor: Option<usize>) -> (Vec<Condition>, Vec<Direction>) {
        let start = floor.map_or(0, |f| f + 1);
        let mut conditions = Vec::new();
        let mut actions = Vec::new();
        let mut kept = Vec::with_capacity(self.stack.len());
        for (i, item) in self.stack.drain(..).enumerate() {
            match item {
                StackItem::Label(Label::Condition(c)) if i >= start => conditions.push(c),
                StackItem::Label(Label::Action(d)) if i >= start => actions.push(d),
                other => kept.push(other),
            }
        }
        self.stack = kept;
        (conditions, actions)
    }

    fn push_edge(
        &mut self,
        src: NodeId,
        dst: NodeId,
        mut conditions: Vec<Condition>,
        actions: Vec<Direction>,
    ) {
        if self.config.no_contradiction {
            conditions = filter_contradictions(&conditions);
        }
        self.atn.add_edge(Edge {
            src,
            dst,
            conditions,
            actions,
        });
    }
}

/// Runs a whole token stream through a fresh [`Builder`].
pub fn interpret(tokens: &[Token], config: BuildConfig) -> Atn {
    let mut builder = Builder::new(config);
    for &t in tokens {
        builder.apply(t);
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::{translate, GeneticCode, Genome};
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<Token> {
        s.split(',').map(|t| t.trim().parse().unwrap()).collect()
    }

    fn cond(s: &str) -> Condition {
        match s.parse().unwrap() {
            Token::Condition(c) => c,
            _ => panic!("{s} is not a condition"),
        }
    }

    fn run(tokens: &[Token], config: BuildConfig) -> Builder {
        let mut b = Builder::new(config);
        for &t in tokens {
            b.apply(t);
        }
        b
    }

    fn label(s: &str) -> StackItem {
        match s.parse().unwrap() {
            Token::Condition(c) => StackItem::Label(Label::Condition(c)),
            Token::Action(d) => StackItem::Label(Label::Action(d)),
            _ => panic!(),
        }
    }

    const X: StackItem = StackItem::Node(NodeId(2));
    const Y: StackItem = StackItem::Node(NodeId(3));

    #[test]
    fn empty_program() {
        let atn = interpret(&[], BuildConfig::default());
        assert_eq!(atn.node_count(), 2);
        assert!(atn.edges().is_empty());
    }

    #[test]
    fn connect_start_with_labels() {
        let atn = interpret(&toks("node, foodN?, goN!, connect start"), BuildConfig::default());
        assert_eq!(atn.node_count(), 3);
        assert_eq!(
            atn.edges(),
            &[Edge {
                src: Atn::START,
                dst: NodeId(2),
                conditions: vec![cond("foodN?")],
                actions: vec![Direction::N],
            }]
        );
    }

    #[test]
    fn no_contradiction_drops_second_condition_on_direction() {
        let cfg = BuildConfig {
            no_contradiction: true,
            ..Default::default()
        };
        let atn = interpret(&toks("node, foodN?, treeN?, connect self"), cfg);
        assert_eq!(atn.edges().len(), 1);
        let e = &atn.edges()[0];
        assert_eq!((e.src, e.dst), (NodeId(2), NodeId(2)));
        assert_eq!(e.conditions, vec![cond("foodN?")]);

        let atn = interpret(&toks("node, foodN?, treeN?, connect self"), BuildConfig::default());
        assert_eq!(atn.edges()[0].conditions, vec![cond("foodN?"), cond("treeN?")]);
    }

    #[test]
    fn connect_needs_two_nodes() {
        let atn = interpret(&toks("connect"), BuildConfig::default());
        assert!(atn.edges().is_empty());
        let b = run(&toks("node, goE!, connect"), BuildConfig::default());
        assert!(b.atn().edges().is_empty());
        assert_eq!(b.stack().len(), 2);
    }

    #[test]
    fn connect_consumes_labels_above_source() {
        let b = run(
            &toks("emptyW?, node, foodN?, node, goE!, connect"),
            BuildConfig::default(),
        );
        assert_eq!(b.stack(), &[label("emptyW?"), X, Y]);
        let e = &b.atn().edges()[0];
        assert_eq!((e.src, e.dst), (NodeId(2), NodeId(3)));
        assert_eq!(e.conditions, vec![cond("foodN?")]);
        assert_eq!(e.actions, vec![Direction::E]);
    }

    #[test]
    fn connect_end_and_self() {
        let atn = interpret(&toks("node, goS!, connect end, goW!, connect self"), BuildConfig::default());
        assert_eq!(atn.edges()[0].src, NodeId(2));
        assert_eq!(atn.edges()[0].dst, Atn::END);
        assert_eq!(atn.edges()[1].dst, NodeId(2));
        assert_eq!(atn.edges()[1].actions, vec![Direction::W]);
        assert!(interpret(&toks("connect self, connect start, connect end"), BuildConfig::default())
            .edges()
            .is_empty());
    }

    #[test]
    fn dup_node_aliases() {
        let b = run(&toks("node, dup node"), BuildConfig::default());
        assert_eq!(b.stack(), &[X, X]);
        assert_eq!(b.atn().node_count(), 3);
        let atn = interpret(&toks("node, dup node, goN!, connect"), BuildConfig::default());
        assert_eq!(atn.edges()[0].src, atn.edges()[0].dst);
    }

    #[test]
    fn dup_label_in_place() {
        let b = run(&toks("foodN?, node, dup label"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("foodN?"), label("foodN?"), X]);
    }

    #[test]
    fn del_removes_topmost_of_kind() {
        let b = run(&toks("foodN?, node, goE!, del node"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("foodN?"), label("goE!")]);
        assert_eq!(b.atn().node_count(), 3);
        let b = run(&toks("foodN?, node, goE!, del label, del label, del label"), BuildConfig::default());
        assert_eq!(b.stack(), &[X]);
    }

    #[test]
    fn swap_variants() {
        let b = run(&toks("foodN?, node, goE!, swap label"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("goE!"), X, label("foodN?")]);
        let b = run(&toks("node, goE!, swap label"), BuildConfig::default());
        assert_eq!(b.stack(), &[X, label("goE!")]);
        let b = run(&toks("node, goE!, swap all"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("goE!"), X]);
        let b = run(&toks("node, goE!, node, swap node"), BuildConfig::default());
        assert_eq!(b.stack(), &[Y, label("goE!"), X]);
    }

    #[test]
    fn roll_and_unroll() {
        let b = run(&toks("node, node, roll all"), BuildConfig::default());
        assert_eq!(b.stack(), &[Y, X]);
        let b = run(&toks("node, node, unroll all"), BuildConfig::default());
        assert_eq!(b.stack(), &[Y, X]);
        let b = run(&toks("goN!, goS!, goE!, roll all"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("goE!"), label("goN!"), label("goS!")]);
        let b = run(&toks("goN!, goS!, goE!, unroll all"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("goS!"), label("goE!"), label("goN!")]);
        let b = run(&toks("goN!, node, goS!, goE!, roll label"), BuildConfig::default());
        assert_eq!(b.stack(), &[label("goE!"), X, label("goN!"), label("goS!")]);
        let b = run(&toks("node, goN!, node, unroll node"), BuildConfig::default());
        assert_eq!(b.stack(), &[Y, label("goN!"), X]);
    }

    #[test]
    fn leftovers_become_edge_to_end() {
        let atn = interpret(&toks("node, foodE?, goE!"), BuildConfig::default());
        let e = atn.edges().last().unwrap();
        assert_eq!((e.src, e.dst), (NodeId(2), Atn::END));
        assert_eq!(e.conditions, vec![cond("foodE?")]);

        let atn = interpret(&toks("goE!, treeN?"), BuildConfig::default());
        let e = &atn.edges()[0];
        assert_eq!((e.src, e.dst), (Atn::START, Atn::END));
        assert_eq!(e.actions, vec![Direction::E]);

        assert!(interpret(&toks("node, node"), BuildConfig::default()).edges().is_empty());
    }

    #[test]
    fn filter_examples() {
        assert_eq!(
            filter_contradictions(&[cond("foodN?"), cond("treeN?"), cond("emptyE?")]),
            vec![cond("foodN?"), cond("emptyE?")]
        );
        assert!(filter_contradictions(&[]).is_empty());
        assert_eq!(filter_contradictions(&[cond("treeW?"), cond("treeW?")]), vec![cond("treeW?")]);
    }

    #[test]
    fn dot_numbering() {
        let atn = interpret(&toks("node, foodN?, emptyE?, goN!, connect start, node, connect"), BuildConfig::default());
        let dot = atn.to_dot();
        assert!(dot.contains("0 -> 1 [label=\"fN eE\\nN\"]"), "{dot}");
        assert!(dot.contains("1 -> 2 [label=\"\\n\"]"), "{dot}");
        assert!(dot.contains("3 [shape=doublecircle, xlabel=\"End\"]"), "{dot}");
        let empty = Atn::new().to_dot();
        assert!(empty.contains("1 [shape=doublecircle, xlabel=\"End\"]"));
        assert!(!empty.contains("->"));
    }

    fn labels_multiset(stack: &[StackItem]) -> Vec<String> {
        let mut v: Vec<String> = stack
            .iter()
            .filter_map(|i| match i {
                StackItem::Label(l) => Some(format!("{l:?}")),
                _ => None,
            })
            .collect();
        v.sort();
        v
    }

    fn nodes_multiset(stack: &[StackItem]) -> Vec<usize> {
        let mut v: Vec<usize> = stack
            .iter()
            .filter_map(|i| match i {
                StackItem::Node(n) => Some(n.0),
                _ => None,
            })
            .collect();
        v.sort();
        v
    }

    proptest! {
        #[test]
        fn interpretation_is_total_and_pure(codons in prop::collection::vec(0u8..64, 0..400), nc: bool, typed: bool) {
            let code = GeneticCode::build(typed);
            let tokens = translate(&Genome::Integer(codons), &code).unwrap();
            let cfg = BuildConfig { no_contradiction: nc, typed_stack_ops: typed };
            let a = interpret(&tokens, cfg);
            prop_assert_eq!(&a, &interpret(&tokens, cfg));
            for e in a.edges() {
                prop_assert!(e.src.0 < a.node_count() && e.dst.0 < a.node_count());
                if nc {
                    let mut dirs: Vec<_> = e.conditions.iter().map(|c| c.direction).collect();
                    dirs.sort();
                    dirs.dedup();
                    prop_assert_eq!(dirs.len(), e.conditions.len());
                }
            }
        }

        #[test]
        fn scoped_ops_conserve_other_kind(codons in prop::collection::vec(0u8..64, 0..120), pick in 0usize..12) {
            let code = GeneticCode::build(true);
            let tokens = translate(&Genome::Integer(codons), &code).unwrap();
            let mut b = run(&tokens, BuildConfig { no_contradiction: false, typed_stack_ops: true });
            let ops = ["swap node", "roll node", "unroll node", "dup node", "del node", "swap label",
                       "roll label", "unroll label", "dup label", "del label", "swap label", "roll node"];
            let op: Token = ops[pick].parse().unwrap();
            let before = b.stack().to_vec();
            b.apply(op);
            let Token::Stack(s) = op else { unreachable!() };
            match s.scope() {
                Scope::Node => prop_assert_eq!(labels_multiset(&before), labels_multiset(b.stack())),
                Scope::Label => prop_assert_eq!(nodes_multiset(&before), nodes_multiset(b.stack())),
                Scope::All => {}
            }
        }
    }
}
