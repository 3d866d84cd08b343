//! A travel agency over TCP.
//!
//! The customer asks for quotes and accepts, rejects (and asks again) or
//! quits. On acceptance the agency books with an airline over a second
//! connection. Both sessions are registered with a [`SessionCanceller`], so
//! if the airline drops out the customer sees a cancellation rather than a
//! hang.

use std::thread;
use std::time::Duration;

use log::{info, warn};
use sessio::types::{end, goto0, recv, select, send, val, Dual, Eps, Goto0, Offer, Recv, Select, Send};
use sessio::{Branch, Decimal, Listener, Result, Session, SessionCanceller, SessionError, TraceLog};

pub const QUOTE: &str = "90.00";

/// Customer view: `+{ !string. ?decimal. +{ ?string.end, goto0 }, end }`.
pub type Customer = Select<Send<String, Recv<Decimal, Select<Recv<String, Eps>, Goto0>>>, Eps>;
pub type AgencyDesk = Offer<Recv<String, Send<Decimal, Offer<Send<String, Eps>, Goto0>>>, Eps>;

pub fn customer_protocol() -> Dual<Customer, AgencyDesk> {
    select(
        send(
            val::<String>(),
            recv(val::<Decimal>(), select(recv(val::<String>(), end()), goto0())),
        ),
        end(),
    )
}

/// Agency view of a booking: `!string. ?string. end`.
pub type Booking = Send<String, Recv<String, Eps>>;
pub type AirlineDesk = Recv<String, Send<String, Eps>>;

pub fn airline_protocol() -> Dual<Booking, AirlineDesk> {
    send(val::<String>(), recv(val::<String>(), end()))
}

/// The airline's (deterministic) departure date for `dest`.
pub fn departure_date(dest: &str) -> String {
    let day = 1 + dest.bytes().map(u32::from).sum::<u32>() % 28;
    format!("2026-12-{day:02}")
}

/// Runs one airline booking, sleeping `delay` before answering.
pub fn airline_session(s: Session<AirlineDesk, AirlineDesk>, delay: Duration) -> Result<String> {
    let (dest, s) = s.receive()?;
    if !delay.is_zero() {
        thread::sleep(delay);
    }
    let date = departure_date(&dest);
    s.send(date.clone())?.close()?;
    info!("airline booked {dest} on {date}");
    Ok(date)
}

pub fn serve_airline(addr: &str, delay: Duration) -> Result<Listener> {
    airline_protocol().listen(addr, move |s| {
        if let Err(e) = airline_session(s, delay) {
            warn!("airline session failed: {e}");
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgencyOutcome {
    Booked { dest: String, date: String },
    Quit,
}

fn book(c: &SessionCanceller, airline: &str, dest: &str) -> Result<String> {
    let ch = airline_protocol().connect(airline)?;
    c.register(&ch)?;
    let (date, ch) = ch.send(dest.to_string())?.receive()?;
    ch.close()?;
    Ok(date)
}

/// Serves one customer, booking through the airline at `airline`.
pub fn agency_session(s: Session<AgencyDesk, AgencyDesk>, airline: &str) -> Result<AgencyOutcome> {
    let c = SessionCanceller::new();
    c.register(&s)?;
    let mut s = s;
    loop {
        let k = match s.branch()? {
            Branch::Left(k) => k,
            Branch::Right(k) => {
                k.close()?;
                return Ok(AgencyOutcome::Quit);
            }
        };
        let (dest, k) = k.receive()?;
        let quote: Decimal = QUOTE.parse().expect("valid literal");
        match k.send(quote)?.branch()? {
            Branch::Left(k) => {
                let date = match book(&c, airline, &dest) {
                    Ok(date) => date,
                    Err(e) => {
                        // cancel the customer while `k` is still live
                        c.dispose();
                        return Err(e);
                    }
                };
                k.send(date.clone())?.close()?;
                return Ok(AgencyOutcome::Booked { dest, date });
            }
            Branch::Right(k) => s = k.goto()?,
        }
    }
}

/// Serves customers on `addr`. `observe` sees each session's trace and
/// outcome once it ends.
pub fn serve_agency(
    addr: &str,
    airline: &str,
    observe: impl Fn(TraceLog, Result<AgencyOutcome>) + std::marker::Send + Sync + 'static,
) -> Result<Listener> {
    let airline = airline.to_string();
    customer_protocol().listen(addr, move |s| {
        let log = TraceLog::new();
        s.record_into(&log);
        let outcome = agency_session(s, &airline);
        match &outcome {
            Ok(o) => info!("agency: {o:?}"),
            Err(e) => warn!("agency session failed: {e}"),
        }
        observe(log, outcome);
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
    Quit,
}

impl std::str::FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "accept" => Ok(Decision::Accept),
            "reject" => Ok(Decision::Reject),
            "quit" => Ok(Decision::Quit),
            other => Err(format!("unknown decision {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CustomerOutcome {
    Booked(String),
    Quit,
    Cancelled,
}

#[derive(Debug)]
pub struct CustomerReport {
    pub quotes: Vec<Decimal>,
    pub outcome: CustomerOutcome,
    pub trace: TraceLog,
}

fn customer_session(
    mut s: Session<Customer, Customer>,
    dest: &str,
    plan: &[Decision],
    quotes: &mut Vec<Decimal>,
) -> Result<CustomerOutcome> {
    for d in plan {
        if *d == Decision::Quit {
            break;
        }
        let (price, k) = s.select_left()?.send(dest.to_string())?.receive()?;
        quotes.push(price);
        match d {
            Decision::Accept => {
                let (date, k) = k.select_left()?.receive()?;
                k.close()?;
                return Ok(CustomerOutcome::Booked(date));
            }
            _ => s = k.select_right()?.goto()?,
        }
    }
    s.select_right()?.close()?;
    Ok(CustomerOutcome::Quit)
}

/// Follows `plan` against the agency at `agency`; the plan ends at the
/// first accept or quit, and quits if it runs out.
pub fn run_customer(agency: &str, dest: &str, plan: &[Decision]) -> Result<CustomerReport> {
    let s = customer_protocol().connect(agency)?;
    let trace = TraceLog::new();
    s.record_into(&trace);
    let mut quotes = Vec::new();
    let outcome = match customer_session(s, dest, plan, &mut quotes) {
        Ok(o) => o,
        Err(SessionError::Cancelled) => CustomerOutcome::Cancelled,
        Err(e) => return Err(e),
    };
    Ok(CustomerReport { quotes, outcome, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates_are_deterministic() {
        assert_eq!(departure_date("Paris"), departure_date("Paris"));
        assert!(departure_date("").ends_with("-01"));
    }

    #[test]
    fn decisions_parse() {
        assert_eq!("accept".parse::<Decision>(), Ok(Decision::Accept));
        assert!("maybe".parse::<Decision>().is_err());
    }
}
