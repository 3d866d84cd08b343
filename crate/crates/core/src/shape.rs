//! Value-level session shapes, their duals and their textual form.
//!
//! Rendering grammar (whitespace is not allowed anywhere):
//!
//! ```text
//! shape := "end"
//!        | "goto" INDEX
//!        | "!" TAG "." shape                    send a value
//!        | "?" TAG "." shape                    receive a value
//!        | "+{L:" shape ",R:" shape "}"         select (internal choice)
//!        | "&{L:" shape ",R:" shape "}"         offer (external choice)
//!        | "deleg(" shape ")." shape            delegate a session
//!        | "accept(" shape ")." shape           accept a delegated session
//! TAG   := [a-z0-9?-]+
//! INDEX := [0-9]+
//! ```
//!
//! The carried dual of a delegation is not rendered; it is always the dual
//! of the carried shape.

use std::fmt;
use std::sync::Arc;

use crate::payload::{PayloadDescriptor, Repr};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProtocolShape {
    Send(PayloadDescriptor, Arc<ProtocolShape>),
    Recv(PayloadDescriptor, Arc<ProtocolShape>),
    Select(Arc<ProtocolShape>, Arc<ProtocolShape>),
    Offer(Arc<ProtocolShape>, Arc<ProtocolShape>),
    Eps,
    Goto(usize),
    Deleg {
        carried: Arc<ProtocolShape>,
        carried_dual: Arc<ProtocolShape>,
        cont: Arc<ProtocolShape>,
    },
    DelegRecv {
        carried: Arc<ProtocolShape>,
        cont: Arc<ProtocolShape>,
    },
}

use ProtocolShape as P;

impl ProtocolShape {
    pub fn send(payload: PayloadDescriptor, cont: ProtocolShape) -> Self {
        P::Send(payload, Arc::new(cont))
    }

    pub fn recv(payload: PayloadDescriptor, cont: ProtocolShape) -> Self {
        P::Recv(payload, Arc::new(cont))
    }

    pub fn select(left: ProtocolShape, right: ProtocolShape) -> Self {
        P::Select(Arc::new(left), Arc::new(right))
    }

    pub fn offer(left: ProtocolShape, right: ProtocolShape) -> Self {
        P::Offer(Arc::new(left), Arc::new(right))
    }

    /// Delegation of `carried`; the carried dual is filled in.
    pub fn deleg(carried: ProtocolShape, cont: ProtocolShape) -> Self {
        let carried_dual = dual_of(&carried);
        P::Deleg {
            carried: Arc::new(carried),
            carried_dual: Arc::new(carried_dual),
            cont: Arc::new(cont),
        }
    }

    pub fn deleg_recv(carried: ProtocolShape, cont: ProtocolShape) -> Self {
        P::DelegRecv {
            carried: Arc::new(carried),
            cont: Arc::new(cont),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            P::Eps | P::Goto(_) => 1,
            P::Send(_, k) | P::Recv(_, k) => 1 + k.depth(),
            P::Select(l, r) | P::Offer(l, r) => 1 + l.depth().max(r.depth()),
            P::Deleg { carried, cont, .. } | P::DelegRecv { carried, cont } => {
                1 + carried.depth().max(cont.depth())
            }
        }
    }

    /// Goto indices used by this session, not looking inside carried shapes.
    pub fn goto_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_gotos(&mut out);
        out
    }

    fn collect_gotos(&self, out: &mut Vec<usize>) {
        match self {
            P::Eps => {}
            P::Goto(i) => out.push(*i),
            P::Send(_, k) | P::Recv(_, k) => k.collect_gotos(out),
            P::Select(l, r) | P::Offer(l, r) => {
                l.collect_gotos(out);
                r.collect_gotos(out);
            }
            P::Deleg { cont, .. } | P::DelegRecv { cont, .. } => cont.collect_gotos(out),
        }
    }

    /// Every `Deleg` node (including nested carried shapes) carries the
    /// exact dual of its carried shape.
    pub fn is_coherent(&self) -> bool {
        match self {
            P::Eps | P::Goto(_) => true,
            P::Send(_, k) | P::Recv(_, k) => k.is_coherent(),
            P::Select(l, r) | P::Offer(l, r) => l.is_coherent() && r.is_coherent(),
            P::Deleg {
                carried,
                carried_dual,
                cont,
            } => {
                **carried_dual == dual_of(carried) && carried.is_coherent() && cont.is_coherent()
            }
            P::DelegRecv { carried, cont } => carried.is_coherent() && cont.is_coherent(),
        }
    }

    /// All states a session rooted in `env` can be at, following
    /// continuations and goto jumps (carried shapes are not entered).
    pub fn reachable_states(env: &[ProtocolShape]) -> Vec<ProtocolShape> {
        let mut seen: Vec<ProtocolShape> = Vec::new();
        let mut stack: Vec<ProtocolShape> = env.to_vec();
        while let Some(s) = stack.pop() {
            if seen.contains(&s) {
                continue;
            }
            match &s {
                P::Eps | P::Goto(_) => {}
                P::Send(_, k) | P::Recv(_, k) => stack.push((**k).clone()),
                P::Select(l, r) | P::Offer(l, r) => {
                    stack.push((**l).clone());
                    stack.push((**r).clone());
                }
                P::Deleg { cont, .. } | P::DelegRecv { cont, .. } => stack.push((**cont).clone()),
            }
            seen.push(s);
        }
        seen
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<ProtocolShape, ParseError> {
        let mut parser = Parser { src: text, pos: 0 };
        let shape = parser.shape(0)?;
        if parser.pos != text.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(shape)
    }
}

/// The structural dual: outputs and inputs swap, choices swap sides of the
/// select/offer pair, and delegation swaps with its acceptance.
pub fn dual_of(shape: &ProtocolShape) -> ProtocolShape {
    match shape {
        P::Send(v, k) => P::recv(*v, dual_of(k)),
        P::Recv(v, k) => P::send(*v, dual_of(k)),
        P::Select(l, r) => P::offer(dual_of(l), dual_of(r)),
        P::Offer(l, r) => P::select(dual_of(l), dual_of(r)),
        P::Eps => P::Eps,
        P::Goto(i) => P::Goto(*i),
        P::Deleg { carried, cont, .. } => P::DelegRecv {
            carried: carried.clone(),
            cont: Arc::new(dual_of(cont)),
        },
        P::DelegRecv { carried, cont } => P::Deleg {
            carried: carried.clone(),
            carried_dual: Arc::new(dual_of(carried)),
            cont: Arc::new(dual_of(cont)),
        },
    }
}

impl fmt::Display for ProtocolShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            P::Send(v, k) => write!(f, "!{v}.{k}"),
            P::Recv(v, k) => write!(f, "?{v}.{k}"),
            P::Select(l, r) => write!(f, "+{{L:{l},R:{r}}}"),
            P::Offer(l, r) => write!(f, "&{{L:{l},R:{r}}}"),
            P::Eps => f.write_str("end"),
            P::Goto(i) => write!(f, "goto{i}"),
            P::Deleg { carried, cont, .. } => write!(f, "deleg({carried}).{cont}"),
            P::DelegRecv { carried, cont } => write!(f, "accept({carried}).{cont}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("shape syntax error at byte {offset}: {reason}")]
pub struct ParseError {
    pub offset: usize,
    pub reason: String,
}

const MAX_PARSE_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn shape(&mut self, depth: usize) -> Result<ProtocolShape, ParseError> {
        if depth > MAX_PARSE_DEPTH {
            return Err(self.error("nesting too deep"));
        }
        let d = depth + 1;
        if self.eat("end") {
            Ok(P::Eps)
        } else if self.eat("goto") {
            let digits: String = self.rest().chars().take_while(char::is_ascii_digit).collect();
            if digits.is_empty() {
                return Err(self.error("expected goto index"));
            }
            self.pos += digits.len();
            digits
                .parse()
                .map(P::Goto)
                .map_err(|_| self.error("goto index out of range"))
        } else if self.eat("!") {
            let v = self.payload()?;
            self.expect(".")?;
            Ok(P::send(v, self.shape(d)?))
        } else if self.eat("?") {
            let v = self.payload()?;
            self.expect(".")?;
            Ok(P::recv(v, self.shape(d)?))
        } else if self.eat("+{L:") {
            let (l, r) = self.branches(d)?;
            Ok(P::select(l, r))
        } else if self.eat("&{L:") {
            let (l, r) = self.branches(d)?;
            Ok(P::offer(l, r))
        } else if self.eat("deleg(") {
            let carried = self.shape(d)?;
            self.expect(").")?;
            Ok(P::deleg(carried, self.shape(d)?))
        } else if self.eat("accept(") {
            let carried = self.shape(d)?;
            self.expect(").")?;
            Ok(P::deleg_recv(carried, self.shape(d)?))
        } else {
            Err(self.error("expected a shape"))
        }
    }

    fn branches(&mut self, depth: usize) -> Result<(ProtocolShape, ProtocolShape), ParseError> {
        let l = self.shape(depth)?;
        self.expect(",R:")?;
        let r = self.shape(depth)?;
        self.expect("}")?;
        Ok((l, r))
    }

    fn payload(&mut self) -> Result<PayloadDescriptor, ParseError> {
        let len = self
            .rest()
            .find(|c: char| !PayloadDescriptor::valid_tag_char(c))
            .unwrap_or(self.rest().len());
        let tag = &self.rest()[..len];
        let found = PayloadDescriptor::BUILTIN.into_iter().find(|d| d.tag() == tag);
        match found {
            Some(d) => {
                self.pos += len;
                Ok(d)
            }
            None if len > 0 => {
                // Application domains are not registered; their shapes are
                // compared through rendering, so keep the tag with an opaque
                // representation.
                let leaked: &'static str = intern(tag);
                self.pos += len;
                Ok(PayloadDescriptor::custom(leaked, Repr::Bytes))
            }
            None => Err(self.error("expected payload tag")),
        }
    }
}

fn intern(tag: &str) -> &'static str {
    use std::collections::HashSet;
    use std::sync::{Mutex, OnceLock};
    static TAGS: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    let mut set = TAGS.get_or_init(Default::default).lock().unwrap();
    if let Some(t) = set.get(tag) {
        return t;
    }
    let t: &'static str = Box::leak(tag.to_string().into_boxed_str());
    set.insert(t);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payload::PayloadDescriptor as D;

    fn tak_client() -> ProtocolShape {
        P::send(
            D::INT_TRIPLE,
            P::deleg(
                P::recv(D::UNIT, P::Eps),
                P::offer(P::recv(D::INT, P::Eps), P::Eps),
            ),
        )
    }

    /// Clause table for the dual, written as a separate interpreter over the
    /// rendered text so it shares nothing with `dual_of`.
    fn dual_by_text(text: &str) -> String {
        fn go(p: &mut &str) -> String {
            if let Some(rest) = p.strip_prefix("end") {
                *p = rest;
                return "end".into();
            }
            if let Some(rest) = p.strip_prefix("goto") {
                let n: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
                *p = &rest[n.len()..];
                return format!("goto{n}");
            }
            for (from, to) in [("!", "?"), ("?", "!")] {
                if let Some(rest) = p.strip_prefix(from) {
                    let dot = rest.find('.').unwrap();
                    let tag = &rest[..dot];
                    *p = &rest[dot + 1..];
                    return format!("{to}{tag}.{}", go(p));
                }
            }
            for (from, to) in [("+{L:", "&{L:"), ("&{L:", "+{L:")] {
                if let Some(rest) = p.strip_prefix(from) {
                    *p = rest;
                    let l = go(p);
                    *p = p.strip_prefix(",R:").unwrap();
                    let r = go(p);
                    *p = p.strip_prefix("}").unwrap();
                    return format!("{to}{l},R:{r}}}");
                }
            }
            for (from, to) in [("deleg(", "accept("), ("accept(", "deleg(")] {
                if let Some(rest) = p.strip_prefix(from) {
                    // carried shape is copied verbatim
                    let mut depth = 1;
                    let mut end = 0;
                    for (i, c) in rest.char_indices() {
                        match c {
                            '(' => depth += 1,
                            ')' => {
                                depth -= 1;
                                if depth == 0 {
                                    end = i;
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    let carried = &rest[..end];
                    *p = &rest[end + 2..];
                    return format!("{to}{carried}).{}", go(p));
                }
            }
            panic!("unexpected {p}")
        }
        let mut p = text;
        go(&mut p)
    }

    #[test]
    fn dual_of_eps_and_send() {
        assert_eq!(dual_of(&P::Eps), P::Eps);
        assert_eq!(
            dual_of(&P::send(D::INT, P::Eps)),
            P::recv(D::INT, P::Eps)
        );
    }

    #[test]
    fn dual_of_tak_client() {
        let expected = P::recv(
            D::INT_TRIPLE,
            P::deleg_recv(
                P::recv(D::UNIT, P::Eps),
                P::select(P::send(D::INT, P::Eps), P::Eps),
            ),
        );
        let got = dual_of(&tak_client());
        assert_eq!(got, expected);
        assert_eq!(got.render(), dual_by_text(&tak_client().render()));
        assert_eq!(got.render(), "?int3.accept(?unit.end).+{L:!int.end,R:end}");
    }

    #[test]
    fn render_examples() {
        assert_eq!(
            P::send(D::INT, P::recv(D::INT, P::Eps)).render(),
            "!int.?int.end"
        );
        assert_eq!(
            tak_client().render(),
            "!int3.deleg(?unit.end).&{L:?int.end,R:end}"
        );
        assert_eq!(P::Goto(2).render(), "goto2");
    }

    #[test]
    fn parse_errors() {
        assert!(ProtocolShape::parse("").is_err());
        assert!(ProtocolShape::parse("end.").is_err());
        assert!(ProtocolShape::parse("!int").is_err());
        assert!(ProtocolShape::parse("goto").is_err());
        assert!(ProtocolShape::parse("+{L:end}").is_err());
        assert!(ProtocolShape::parse("!Int.end").is_err());
    }

    #[test]
    fn parse_custom_tag_roundtrips_through_text() {
        let s = ProtocolShape::parse("!block.?uint.goto0").unwrap();
        assert_eq!(s.render(), "!block.?uint.goto0");
    }

    #[test]
    fn reachable_states_follow_gotos() {
        let root = P::recv(D::INT, P::send(D::INT, P::Goto(0)));
        let states = ProtocolShape::reachable_states(std::slice::from_ref(&root));
        assert!(states.contains(&P::send(D::INT, P::Goto(0))));
        assert_eq!(states.len(), 3);
    }

    #[test]
    fn coherence_detects_bad_carried_dual() {
        let bad = P::Deleg {
            carried: Arc::new(P::recv(D::UNIT, P::Eps)),
            carried_dual: Arc::new(P::recv(D::UNIT, P::Eps)),
            cont: Arc::new(P::Eps),
        };
        assert!(!bad.is_coherent());
        assert!(tak_client().is_coherent());
    }
}
