//! Iterative JSON parser producing [`JsonTree`]s.
//!
//! Nesting depth is bounded only by memory; no recursion is used.

use std::collections::HashSet;
use std::fmt;

use super::number::{Number, MAX_EXPONENT};
use super::{JsonTree, Label, Literal, NodeType, RawNode, RawTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    UnexpectedChar(char),
    InvalidEscape,
    InvalidUnicodeEscape,
    ControlCharacter,
    InvalidNumber,
    NumberOutOfRange,
    DuplicateKey(String),
    TrailingCharacters,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input where the problem was detected.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input")?,
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}")?,
            ParseErrorKind::InvalidEscape => write!(f, "invalid escape sequence")?,
            ParseErrorKind::InvalidUnicodeEscape => write!(f, "invalid unicode escape")?,
            ParseErrorKind::ControlCharacter => write!(f, "control character in string")?,
            ParseErrorKind::InvalidNumber => write!(f, "invalid number")?,
            ParseErrorKind::NumberOutOfRange => write!(f, "number exponent out of range")?,
            ParseErrorKind::DuplicateKey(k) => write!(f, "duplicate key {k:?}")?,
            ParseErrorKind::TrailingCharacters => write!(f, "trailing characters")?,
        }
        write!(f, " at byte {}", self.offset)
    }
}

impl std::error::Error for ParseError {}

/// Parses one JSON document (RFC 8259) into a tree.
pub fn parse_document(text: &str) -> Result<JsonTree, ParseError> {
    let raw = Parser::new(text).run()?;
    Ok(JsonTree::from_raw(&raw))
}

enum Frame {
    Object { node: usize, keys: HashSet<String> },
    Array { node: usize },
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    nodes: Vec<RawNode>,
    stack: Vec<Frame>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            nodes: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.pos,
            kind,
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(_) => {
                let c = std::str::from_utf8(&self.bytes[self.pos..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('\u{FFFD}');
                self.err(ParseErrorKind::UnexpectedChar(c))
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(b' ' | b'\t' | b'\n' | b'\r') = self.peek() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected()
        }
    }

    fn add(&mut self, node_type: NodeType, label: Label, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(RawNode {
            node_type,
            label,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    fn run(mut self) -> Result<RawTree, ParseError> {
        // parent of the next value to be parsed
        let mut parent: Option<usize> = None;
        loop {
            // parse one value start
            self.skip_ws();
            let completed = match self.peek() {
                Some(b'{') => {
                    self.pos += 1;
                    let node = self.add(NodeType::Object, Label::Null, parent);
                    self.skip_ws();
                    if self.peek() == Some(b'}') {
                        self.pos += 1;
                        true
                    } else {
                        self.stack.push(Frame::Object {
                            node,
                            keys: HashSet::new(),
                        });
                        parent = Some(self.member_key()?);
                        false
                    }
                }
                Some(b'[') => {
                    self.pos += 1;
                    let node = self.add(NodeType::Array, Label::Null, parent);
                    self.skip_ws();
                    if self.peek() == Some(b']') {
                        self.pos += 1;
                        true
                    } else {
                        self.stack.push(Frame::Array { node });
                        parent = Some(node);
                        false
                    }
                }
                _ => {
                    let lit = self.literal()?;
                    self.add(NodeType::Literal, Label::Literal(lit), parent);
                    true
                }
            };
            if !completed {
                continue;
            }
            // a value finished; close containers until one wants more
            loop {
                self.skip_ws();
                match self.stack.last() {
                    None => {
                        if self.pos != self.bytes.len() {
                            return self.err(ParseErrorKind::TrailingCharacters);
                        }
                        return Ok(RawTree {
                            nodes: self.nodes,
                            root: 0,
                        });
                    }
                    Some(Frame::Object { .. }) => match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            parent = Some(self.member_key()?);
                            break;
                        }
                        Some(b'}') => {
                            self.pos += 1;
                            self.stack.pop();
                        }
                        _ => return self.unexpected(),
                    },
                    Some(&Frame::Array { node }) => match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            parent = Some(node);
                            break;
                        }
                        Some(b']') => {
                            self.pos += 1;
                            self.stack.pop();
                        }
                        _ => return self.unexpected(),
                    },
                }
            }
        }
    }

    /// Parses `"key" :` inside the innermost object and returns the key node.
    fn member_key(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() != Some(b'"') {
            return self.unexpected();
        }
        let key = self.string()?;
        let Some(Frame::Object { node, keys }) = self.stack.last_mut() else {
            unreachable!("member key outside object");
        };
        let node = *node;
        if !keys.insert(key.clone()) {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::DuplicateKey(key),
            });
        }
        let id = self.add(NodeType::Key, Label::Key(key), Some(node));
        self.expect(b':')?;
        Ok(id)
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek() {
            Some(b'"') => Ok(Literal::String(self.string()?)),
            Some(b't') => self.word("true", Literal::Bool(true)),
            Some(b'f') => self.word("false", Literal::Bool(false)),
            Some(b'n') => self.word("null", Literal::Null),
            Some(b'-' | b'0'..=b'9') => Ok(Literal::Number(self.number()?)),
            _ => self.unexpected(),
        }
    }

    fn word(&mut self, word: &str, lit: Literal) -> Result<Literal, ParseError> {
        for &b in word.as_bytes() {
            if self.peek() != Some(b) {
                return self.unexpected();
            }
            self.pos += 1;
        }
        Ok(lit)
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while let Some(b'0'..=b'9') = self.peek() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Number, ParseError> {
        let start = self.pos;
        let negative = self.peek() == Some(b'-');
        if negative {
            self.pos += 1;
        }
        let int_start = self.pos;
        match self.peek() {
            Some(b'0') => self.pos += 1,
            Some(b'1'..=b'9') => {
                self.digits();
            }
            _ => return self.err(ParseErrorKind::InvalidNumber),
        }
        let int_end = self.pos;
        let mut frac = (self.pos, self.pos);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let s = self.pos;
            if self.digits() == 0 {
                return self.err(ParseErrorKind::InvalidNumber);
            }
            frac = (s, self.pos);
        }
        let mut exponent: i64 = 0;
        if let Some(b'e' | b'E') = self.peek() {
            self.pos += 1;
            let neg_exp = match self.peek() {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let s = self.pos;
            if self.digits() == 0 {
                return self.err(ParseErrorKind::InvalidNumber);
            }
            let cap = 4 * MAX_EXPONENT;
            for &d in &self.bytes[s..self.pos] {
                exponent = (exponent * 10 + i64::from(d - b'0')).min(cap);
            }
            if neg_exp {
                exponent = -exponent;
            }
        }
        let text = |a: usize, b: usize| std::str::from_utf8(&self.bytes[a..b]).expect("ascii digits");
        Number::from_parts(negative, text(int_start, int_end), text(frac.0, frac.1), exponent).ok_or(
            ParseError {
                offset: start,
                kind: ParseErrorKind::NumberOutOfRange,
            },
        )
    }

    fn hex4(&mut self) -> Result<u32, ParseError> {
        let mut v = 0u32;
        for _ in 0..4 {
            let d = match self.peek() {
                Some(c @ b'0'..=b'9') => c - b'0',
                Some(c @ b'a'..=b'f') => c - b'a' + 10,
                Some(c @ b'A'..=b'F') => c - b'A' + 10,
                _ => return self.err(ParseErrorKind::InvalidUnicodeEscape),
            };
            v = v * 16 + u32::from(d);
            self.pos += 1;
        }
        Ok(v)
    }

    fn string(&mut self) -> Result<String, ParseError> {
        debug_assert_eq!(self.peek(), Some(b'"'));
        self.pos += 1;
        let mut out = String::new();
        loop {
            let run = self.pos;
            while let Some(b) = self.peek() {
                if b == b'"' || b == b'\\' || b < 0x20 {
                    break;
                }
                self.pos += 1;
            }
            // the input is a &str and the run stops at ASCII bytes
            out.push_str(std::str::from_utf8(&self.bytes[run..self.pos]).expect("utf-8 input"));
            match self.peek() {
                None => return self.err(ParseErrorKind::UnexpectedEnd),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    let c = match self.peek() {
                        Some(b'"') => '"',
                        Some(b'\\') => '\\',
                        Some(b'/') => '/',
                        Some(b'b') => '\u{8}',
                        Some(b'f') => '\u{c}',
                        Some(b'n') => '\n',
                        Some(b'r') => '\r',
                        Some(b't') => '\t',
                        Some(b'u') => {
                            self.pos += 1;
                            let esc = self.pos;
                            let hi = self.hex4()?;
                            let code = if (0xD800..0xDC00).contains(&hi) {
                                if self.bytes.get(self.pos..self.pos + 2) != Some(b"\\u") {
                                    self.pos = esc;
                                    return self.err(ParseErrorKind::InvalidUnicodeEscape);
                                }
                                self.pos += 2;
                                let lo = self.hex4()?;
                                if !(0xDC00..0xE000).contains(&lo) {
                                    self.pos = esc;
                                    return self.err(ParseErrorKind::InvalidUnicodeEscape);
                                }
                                0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00)
                            } else {
                                hi
                            };
                            match char::from_u32(code) {
                                Some(c) => {
                                    out.push(c);
                                    continue;
                                }
                                None => {
                                    self.pos = esc;
                                    return self.err(ParseErrorKind::InvalidUnicodeEscape);
                                }
                            }
                        }
                        None => return self.err(ParseErrorKind::UnexpectedEnd),
                        Some(_) => return self.err(ParseErrorKind::InvalidEscape),
                    };
                    self.pos += 1;
                    out.push(c);
                }
                Some(_) => return self.err(ParseErrorKind::ControlCharacter),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse_document(text).unwrap_err().kind
    }

    #[test]
    fn literals() {
        for (text, lit) in [
            ("null", Literal::Null),
            (" true ", Literal::Bool(true)),
            ("false", Literal::Bool(false)),
            ("-0", Literal::Number(Number::zero())),
            ("1.0", Literal::Number(Number::from_i64(1))),
            ("1e0", Literal::Number(Number::from_i64(1))),
            ("100", Literal::Number(Number::from_i64(100))),
            ("1E2", Literal::Number(Number::from_i64(100))),
            (r#""a\né😀""#, Literal::String("a\né😀".into())),
        ] {
            let t = parse_document(text).unwrap();
            assert_eq!(t.len(), 1);
            assert_eq!(t.label(0), &Label::Literal(lit), "{text}");
        }
    }

    #[test]
    fn member_order_preserved() {
        let t = parse_document(r#"{"b": 1, "a": 2, "c": [true, {}]}"#).unwrap();
        let keys: Vec<_> = t
            .children(t.root())
            .iter()
            .map(|&k| t.node(k).key().unwrap())
            .collect();
        assert_eq!(keys, ["b", "a", "c"]);
        for &k in t.children(t.root()) {
            assert_eq!(t.degree(k), 1);
        }
    }

    #[test]
    fn duplicate_key_rejected_with_name() {
        let e = parse_document(r#"{"a": 1, "b": {"x": 1}, "a": 2}"#).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateKey("a".into()));
        assert_eq!(e.offset, 24);
        // the same key in different objects is fine
        assert!(parse_document(r#"{"a": {"a": 1}}"#).is_ok());
    }

    #[test]
    fn malformed_inputs_report_offsets() {
        let e = parse_document(r#"{"a": 1,}"#).unwrap_err();
        assert_eq!(e.offset, 8);
        assert_eq!(kind(""), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind("[1, 2"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind("[1 2]"), ParseErrorKind::UnexpectedChar('2'));
        assert_eq!(kind("01"), ParseErrorKind::TrailingCharacters);
        assert_eq!(kind("1."), ParseErrorKind::InvalidNumber);
        assert_eq!(kind("-"), ParseErrorKind::InvalidNumber);
        assert_eq!(kind("tru"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind(r#""\x""#), ParseErrorKind::InvalidEscape);
        assert_eq!(kind(r#""\ud800""#), ParseErrorKind::InvalidUnicodeEscape);
        assert_eq!(kind("\"a\u{1}\""), ParseErrorKind::ControlCharacter);
        assert_eq!(kind("{\"a\" 1}"), ParseErrorKind::UnexpectedChar('1'));
        assert_eq!(kind("{1: 2}"), ParseErrorKind::UnexpectedChar('1'));
        assert_eq!(kind("1e999999999999999"), ParseErrorKind::NumberOutOfRange);
        assert_eq!(kind("[] []"), ParseErrorKind::TrailingCharacters);
        assert_eq!(kind("// c\n1"), ParseErrorKind::UnexpectedChar('/'));
    }

    #[test]
    fn deep_nesting_does_not_overflow() {
        let depth = 200_000;
        let text = format!("{}{}", "[".repeat(depth), "]".repeat(depth));
        let t = parse_document(&text).unwrap();
        assert_eq!(t.len(), depth);
        assert_eq!(t.anc_count(0), depth - 1);
        let back = t.to_json();
        assert_eq!(back, text);
    }
}
