//! Per-side communication traces and a conformance checker.
//!
//! A trace is one event per line, `dir,variant,domain`:
//!
//! | event                  | dir  | variant | domain              |
//! |------------------------|------|---------|---------------------|
//! | send / receive a value | `out`/`in` | `value` | payload tag    |
//! | select / offer         | `out`/`in` | `label` | `left`/`right` |
//! | delegate / accept      | `out`/`in` | `deleg` | `session`      |
//! | close                  | `out` | `close` | `-`                |
//!
//! Jumps (`goto`) produce no event. [`check_trace`] runs the automaton
//! induced by a shape and its session environment over such a trace.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use crate::shape::ProtocolShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Value,
    Label,
    Deleg,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub dir: Direction,
    pub variant: Variant,
    pub domain: String,
}

impl TraceEvent {
    pub fn new(dir: Direction, variant: Variant, domain: impl Into<String>) -> Self {
        TraceEvent {
            dir,
            variant,
            domain: domain.into(),
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            Direction::Out => "out",
            Direction::In => "in",
        };
        let variant = match self.variant {
            Variant::Value => "value",
            Variant::Label => "label",
            Variant::Deleg => "deleg",
            Variant::Close => "close",
        };
        write!(f, "{dir},{variant},{}", self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed trace line {0:?}")]
pub struct TraceSyntaxError(pub String);

impl FromStr for TraceEvent {
    type Err = TraceSyntaxError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let err = || TraceSyntaxError(line.to_string());
        let mut parts = line.splitn(3, ',');
        let dir = match parts.next() {
            Some("out") => Direction::Out,
            Some("in") => Direction::In,
            _ => return Err(err()),
        };
        let variant = match parts.next() {
            Some("value") => Variant::Value,
            Some("label") => Variant::Label,
            Some("deleg") => Variant::Deleg,
            Some("close") => Variant::Close,
            _ => return Err(err()),
        };
        let domain = parts.next().filter(|d| !d.is_empty()).ok_or_else(err)?;
        Ok(TraceEvent::new(dir, variant, domain))
    }
}

/// A shared, append-only event log for one side of a session.
#[derive(Debug, Clone, Default)]
pub struct TraceLog {
    events: Arc<Mutex<Vec<TraceEvent>>>,
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, event: TraceEvent) {
        self.events.lock().unwrap().push(event);
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.events.lock().unwrap().clone()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for e in self.events.lock().unwrap().iter() {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Vec<TraceEvent>, TraceSyntaxError> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acceptance {
    /// The trace ends with the session closed.
    Closed,
    /// The trace is a valid prefix; the session would continue at `state`.
    Open(ProtocolShape),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceViolation {
    #[error("event {index} ({event}) not allowed at {state}")]
    Unexpected {
        index: usize,
        event: String,
        state: String,
    },
    #[error("event {index} ({event}) after the session was closed")]
    AfterClose { index: usize, event: String },
    #[error("goto{0} cannot be resolved in the environment")]
    BadGoto(usize),
}

fn resolve(state: &ProtocolShape, env: &[ProtocolShape]) -> Result<ProtocolShape, TraceViolation> {
    let mut s = state.clone();
    for _ in 0..=env.len() {
        match s {
            ProtocolShape::Goto(i) => {
                let slot = if i == 0 && env.len() == 1 {
                    0
                } else if i >= 1 && i <= env.len() {
                    i - 1
                } else {
                    return Err(TraceViolation::BadGoto(i));
                };
                s = env[slot].clone();
            }
            other => return Ok(other),
        }
    }
    Err(TraceViolation::BadGoto(0))
}

/// Runs the protocol automaton of `start` within `env` over `events`.
pub fn check_trace(
    start: &ProtocolShape,
    env: &[ProtocolShape],
    events: &[TraceEvent],
) -> Result<Acceptance, TraceViolation> {
    use ProtocolShape as P;
    let mut state = Some(start.clone());
    for (index, ev) in events.iter().enumerate() {
        let Some(current) = state.take() else {
            return Err(TraceViolation::AfterClose {
                index,
                event: ev.to_string(),
            });
        };
        let current = resolve(&current, env)?;
        let unexpected = || TraceViolation::Unexpected {
            index,
            event: ev.to_string(),
            state: current.to_string(),
        };
        let next = match (&current, ev.dir, ev.variant) {
            (P::Send(d, k), Direction::Out, Variant::Value)
            | (P::Recv(d, k), Direction::In, Variant::Value)
                if d.tag() == ev.domain =>
            {
                Some((**k).clone())
            }
            (P::Select(l, r), Direction::Out, Variant::Label)
            | (P::Offer(l, r), Direction::In, Variant::Label) => match ev.domain.as_str() {
                "left" => Some((**l).clone()),
                "right" => Some((**r).clone()),
                _ => return Err(unexpected()),
            },
            (P::Deleg { cont, .. }, Direction::Out, Variant::Deleg)
            | (P::DelegRecv { cont, .. }, Direction::In, Variant::Deleg) => Some((**cont).clone()),
            (P::Eps, Direction::Out, Variant::Close) => None,
            _ => return Err(unexpected()),
        };
        state = next;
    }
    match state {
        None => Ok(Acceptance::Closed),
        Some(s) => Ok(Acceptance::Open(resolve(&s, env)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payload::PayloadDescriptor as D;
    use crate::shape::ProtocolShape as P;

    fn events(text: &str) -> Vec<TraceEvent> {
        TraceLog::parse_csv(text).unwrap()
    }

    #[test]
    fn csv_roundtrip() {
        let text = "out,value,int\nin,label,left\nout,deleg,session\nout,close,-\n";
        let log = TraceLog::new();
        for e in events(text) {
            log.push(e);
        }
        assert_eq!(log.to_csv(), text);
        assert!("sideways,value,int".parse::<TraceEvent>().is_err());
        assert!("out,value,".parse::<TraceEvent>().is_err());
    }

    #[test]
    fn loop_with_goto() {
        let root = P::select(P::send(D::INT, P::Goto(0)), P::Eps);
        let trace = events("out,label,left\nout,value,int\nout,label,left\nout,value,int\nout,label,right\nout,close,-");
        assert_eq!(
            check_trace(&root, std::slice::from_ref(&root), &trace),
            Ok(Acceptance::Closed)
        );
    }

    #[test]
    fn rejects_wrong_domain_and_direction() {
        let root = P::send(D::INT, P::Eps);
        let env = [root.clone()];
        assert!(check_trace(&root, &env, &events("out,value,string")).is_err());
        assert!(check_trace(&root, &env, &events("in,value,int")).is_err());
        assert!(matches!(
            check_trace(&root, &env, &events("out,value,int\nout,close,-\nout,value,int")),
            Err(TraceViolation::AfterClose { .. })
        ));
    }

    #[test]
    fn prefix_is_open() {
        let root = P::recv(D::INT, P::Goto(0));
        assert_eq!(
            check_trace(&root, std::slice::from_ref(&root), &events("in,value,int")),
            Ok(Acceptance::Open(root.clone()))
        );
    }
}
