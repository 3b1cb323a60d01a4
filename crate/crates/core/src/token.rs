//! Tokens of the graph-building language, the genetic code and genomes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Bits per codon in the bitstring encoding.
pub const CODON_WIDTH: usize = 6;
/// Number of entries in a genetic code (`2^CODON_WIDTH`).
pub const CODE_SIZE: usize = 1 << CODON_WIDTH;

const DEFAULT_CODE: &str = include_str!("../data/genetic_code.txt");

/// Compass directions, used both for percept attributes and for moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    /// Clockwise from north. This is also the order of percept strings.
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    /// `(row, col)` offset of the neighbour in this direction; rows grow southwards.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::N => (-1, 0),
            Direction::NE => (-1, 1),
            Direction::E => (0, 1),
            Direction::SE => (1, 1),
            Direction::S => (1, 0),
            Direction::SW => (1, -1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or(())
    }
}

/// What an agent can see in a neighbouring cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerceptKind {
    Empty,
    Food,
    Tree,
}

impl PerceptKind {
    pub const ALL: [PerceptKind; 3] = [PerceptKind::Empty, PerceptKind::Food, PerceptKind::Tree];

    pub fn word(self) -> &'static str {
        match self {
            PerceptKind::Empty => "empty",
            PerceptKind::Food => "food",
            PerceptKind::Tree => "tree",
        }
    }

    /// Single-letter prefix used in graph exports and percept strings.
    pub fn letter(self) -> char {
        match self {
            PerceptKind::Empty => 'e',
            PerceptKind::Food => 'f',
            PerceptKind::Tree => 't',
        }
    }
}

/// A condition label such as `foodNE?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Condition {
    pub direction: Direction,
    pub kind: PerceptKind,
}

impl Condition {
    pub fn new(kind: PerceptKind, direction: Direction) -> Self {
        Condition { direction, kind }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}?", self.kind.word(), self.direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StackVerb {
    Swap,
    Dup,
    Del,
    Roll,
    Unroll,
}

/// Which stack items a stack operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    All,
    Node,
    Label,
}

/// A stack manipulation token. `dup` and `del` never take the `All` scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StackOp {
    verb: StackVerb,
    scope: Scope,
}

impl StackOp {
    pub fn new(verb: StackVerb, scope: Scope) -> Option<Self> {
        match (verb, scope) {
            (StackVerb::Dup | StackVerb::Del, Scope::All) => None,
            _ => Some(StackOp { verb, scope }),
        }
    }

    pub fn verb(self) -> StackVerb {
        self.verb
    }

    pub fn scope(self) -> Scope {
        self.scope
    }
}

impl fmt::Display for StackOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = match self.verb {
            StackVerb::Swap => "swap",
            StackVerb::Dup => "dup",
            StackVerb::Del => "del",
            StackVerb::Roll => "roll",
            StackVerb::Unroll => "unroll",
        };
        let scope = match self.scope {
            Scope::All => "all",
            Scope::Node => "node",
            Scope::Label => "label",
        };
        write!(f, "{verb} {scope}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureOp {
    Node,
    Connect,
    ConnectSelf,
    ConnectStart,
    ConnectEnd,
}

impl fmt::Display for StructureOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureOp::Node => "node",
            StructureOp::Connect => "connect",
            StructureOp::ConnectSelf => "connect self",
            StructureOp::ConnectStart => "connect start",
            StructureOp::ConnectEnd => "connect end",
        })
    }
}

/// One instruction of the graph-building language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Stack(StackOp),
    Structure(StructureOp),
    Condition(Condition),
    Action(Direction),
}

impl Token {
    pub fn is_label(self) -> bool {
        matches!(self, Token::Condition(_) | Token::Action(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Stack(op) => op.fmt(f),
            Token::Structure(op) => op.fmt(f),
            Token::Condition(c) => c.fmt(f),
            Token::Action(d) => write!(f, "go{d}!"),
        }
    }
}

impl FromStr for Token {
    type Err = String;

    /// Parses a single mnemonic (`connect self`, `foodNE?`, `goSW!`, `roll label`).
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(dir) = s.strip_prefix("go").and_then(|r| r.strip_suffix('!')) {
            return dir
                .parse()
                .map(Token::Action)
                .map_err(|_| format!("unknown action `{s}`"));
        }
        if let Some(body) = s.strip_suffix('?') {
            for kind in PerceptKind::ALL {
                if let Some(dir) = body.strip_prefix(kind.word()) {
                    return dir
                        .parse()
                        .map(|d| Token::Condition(Condition::new(kind, d)))
                        .map_err(|_| format!("unknown condition `{s}`"));
                }
            }
            return Err(format!("unknown condition `{s}`"));
        }
        let words: Vec<&str> = s.split_whitespace().collect();
        let structure = match words.as_slice() {
            ["node"] => Some(StructureOp::Node),
            ["connect"] => Some(StructureOp::Connect),
            ["connect", "self"] => Some(StructureOp::ConnectSelf),
            ["connect", "start"] => Some(StructureOp::ConnectStart),
            ["connect", "end"] => Some(StructureOp::ConnectEnd),
            _ => None,
        };
        if let Some(op) = structure {
            return Ok(Token::Structure(op));
        }
        if let [verb, scope] = words.as_slice() {
            let verb = match *verb {
                "swap" => StackVerb::Swap,
                "dup" => StackVerb::Dup,
                "del" => StackVerb::Del,
                "roll" => StackVerb::Roll,
                "unroll" => StackVerb::Unroll,
                _ => return Err(format!("unknown token `{s}`")),
            };
            let scope = match *scope {
                "all" => Scope::All,
                "node" => Scope::Node,
                "label" => Scope::Label,
                _ => return Err(format!("unknown scope in `{s}`")),
            };
            return StackOp::new(verb, scope)
                .map(Token::Stack)
                .ok_or_else(|| format!("`{s}` is not a valid stack token"));
        }
        Err(format!("unknown token `{s}`"))
    }
}

/// Mapping from codon values to tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneticCode {
    table: Vec<Token>,
    typed: bool,
}

impl GeneticCode {
    /// The shipped default code. `typed` picks the node/label variant of
    /// the ambiguous swap/roll/unroll entries instead of the `all` one.
    pub fn build(typed: bool) -> Self {
        Self::parse(DEFAULT_CODE, typed).expect("default genetic code is well formed")
    }

    pub fn load(path: impl AsRef<Path>, typed: bool) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, typed)
    }

    /// Parses `<codon-index> <mnemonic>` lines. A mnemonic of the form
    /// `swap all|node` is resolved by `typed`; `#` starts a comment.
    pub fn parse(text: &str, typed: bool) -> Result<Self> {
        let mut slots: Vec<Option<Token>> = vec![None; CODE_SIZE];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |reason: String| Error::GeneticCode { line, reason };
            let (index, mnemonic) = content
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `<codon-index> <token>`".into()))?;
            let index: usize = index
                .parse()
                .map_err(|_| err(format!("bad codon index `{index}`")))?;
            if index >= CODE_SIZE {
                return Err(err(format!("codon index {index} >= {CODE_SIZE}")));
            }
            let token = resolve_alternative(mnemonic.trim(), typed).map_err(err)?;
            if slots[index].replace(token).is_some() {
                return Err(err(format!("codon {index} defined twice")));
            }
        }
        let table = slots
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| Error::GeneticCode {
                    line: 0,
                    reason: format!("codon {i} is missing"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneticCode { table, typed })
    }

    pub fn typed(&self) -> bool {
        self.typed
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, codon: usize) -> Option<Token> {
        self.table.get(codon).copied()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.table
    }

    /// Renders the code in the override-file format.
    pub fn to_text(&self) -> String {
        self.table
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{i} {t}\n"))
            .collect()
    }
}

fn resolve_alternative(mnemonic: &str, typed: bool) -> std::result::Result<Token, String> {
    match mnemonic.split_once('|') {
        None => mnemonic.parse(),
        Some((untyped, scope)) => {
            // "swap all|node": the second alternative only names the scope.
            let verb = untyped
                .split_whitespace()
                .next()
                .ok_or_else(|| format!("bad alternative `{mnemonic}`"))?;
            if typed {
                format!("{verb} {}", scope.trim()).parse()
            } else {
                untyped.parse()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Bitstring,
    Integer,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Bitstring => "bitstring",
            Encoding::Integer => "integer",
        }
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bitstring" | "bits" => Ok(Encoding::Bitstring),
            "integer" | "int" => Ok(Encoding::Integer),
            other => Err(format!("unknown encoding `{other}`")),
        }
    }
}

/// A genotype: either raw bits, cut into 6-bit codons most significant bit
/// first, or a string of codon indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Genome {
    Bitstring(Vec<bool>),
    Integer(Vec<u8>),
}

impl Genome {
    pub fn encoding(&self) -> Encoding {
        match self {
            Genome::Bitstring(_) => Encoding::Bitstring,
            Genome::Integer(_) => Encoding::Integer,
        }
    }

    /// Token count. For a ragged bitstring the trailing partial codon is not counted.
    pub fn len(&self) -> usize {
        match self {
            Genome::Bitstring(bits) => bits.len() / CODON_WIDTH,
            Genome::Integer(codons) => codons.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Codon values, decoding bitstrings MSB first.
    pub fn codons(&self) -> Result<Vec<usize>> {
        match self {
            Genome::Bitstring(bits) => {
                if bits.len() % CODON_WIDTH != 0 {
                    return Err(Error::RaggedBitstring {
                        bits: bits.len(),
                        width: CODON_WIDTH,
                    });
                }
                Ok(bits
                    .chunks(CODON_WIDTH)
                    .map(|c| c.iter().fold(0, |acc, &b| (acc << 1) | b as usize))
                    .collect())
            }
            Genome::Integer(codons) => Ok(codons.iter().map(|&c| c as usize).collect()),
        }
    }

    /// Re-encodes as a bitstring, one MSB-first codon per index.
    pub fn to_bitstring(&self) -> Result<Genome> {
        let bits = self
            .codons()?
            .into_iter()
            .flat_map(|c| (0..CODON_WIDTH).rev().map(move |k| (c >> k) & 1 == 1))
            .collect();
        Ok(Genome::Bitstring(bits))
    }

    pub fn to_integer(&self) -> Result<Genome> {
        Ok(Genome::Integer(
            self.codons()?.into_iter().map(|c| c as u8).collect(),
        ))
    }
}

/// Decodes a genome into its token stream.
pub fn translate(genome: &Genome, code: &GeneticCode) -> Result<Vec<Token>> {
    genome
        .codons()?
        .into_iter()
        .map(|c| {
            code.get(c).ok_or(Error::CodonOutOfRange {
                index: c,
                size: code.len(),
            })
        })
        .collect()
}

/// Uniformly random genome of `len` tokens.
pub fn random_genome<R: Rng + ?Sized>(encoding: Encoding, len: usize, rng: &mut R) -> Genome {
    match encoding {
        Encoding::Bitstring => {
            Genome::Bitstring((0..len * CODON_WIDTH).map(|_| rng.random()).collect())
        }
        Encoding::Integer => Genome::Integer(
            (0..len)
                .map(|_| rng.random_range(0..CODE_SIZE) as u8)
                .collect(),
        ),
    }
}
