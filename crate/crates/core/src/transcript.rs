//! Deterministic protocol transcripts.
//!
//! Every message crossing the simulated network is recorded as one line:
//!
//! ```text
//! MSG <seq> <sender> <receiver> <kind> <key>=<decimal>[ <key>=<decimal>...]
//! ```
//!
//! Values are decimal (comma-separated lists for element sequences), lines
//! end with LF, and sequence numbers start at 1. Runs with a fixed seed
//! render byte-identical transcripts, which is what the golden files under
//! `golden/` pin down.

use std::fmt;

/// A protocol participant, as named in transcript lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Dealer,
    Ttp1,
    Ttp2,
    /// 1-based recipient index, rendered `R<i>`.
    Recipient(usize),
    /// The generic third party of a standalone deposit exchange.
    Ttp,
    /// The generic depositor of a standalone deposit exchange.
    User,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Dealer => write!(f, "DEALER"),
            Party::Ttp1 => write!(f, "TTP1"),
            Party::Ttp2 => write!(f, "TTP2"),
            Party::Recipient(i) => write!(f, "R{i}"),
            Party::Ttp => write!(f, "TTP"),
            Party::User => write!(f, "USER"),
        }
    }
}

/// Message kinds of the two wire protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgKind {
    PbChallenge,
    PbResp1,
    PbResp2,
    SharePkg1,
    SharePkg2,
    Deliver1,
    Deliver2,
}

impl fmt::Display for MsgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MsgKind::PbChallenge => "PB_CHALLENGE",
            MsgKind::PbResp1 => "PB_RESP1",
            MsgKind::PbResp2 => "PB_RESP2",
            MsgKind::SharePkg1 => "SHARE_PKG1",
            MsgKind::SharePkg2 => "SHARE_PKG2",
            MsgKind::Deliver1 => "DELIVER1",
            MsgKind::Deliver2 => "DELIVER2",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub seq: usize,
    pub sender: Party,
    pub receiver: Party,
    pub kind: MsgKind,
    /// Key/value payload in wire order; values are already rendered
    /// (decimal, or comma-joined decimal lists).
    pub fields: Vec<(&'static str, String)>,
}

impl LogEntry {
    pub fn render(&self) -> String {
        let mut line = format!(
            "MSG {} {} {} {}",
            self.seq, self.sender, self.receiver, self.kind
        );
        for (key, value) in &self.fields {
            line.push(' ');
            line.push_str(key);
            line.push('=');
            line.push_str(value);
        }
        line
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageLog {
    entries: Vec<LogEntry>,
}

impl MessageLog {
    pub fn new() -> Self {
        MessageLog::default()
    }

    pub fn record(
        &mut self,
        sender: Party,
        receiver: Party,
        kind: MsgKind,
        fields: Vec<(&'static str, String)>,
    ) -> usize {
        let seq = self.entries.len() + 1;
        self.entries.push(LogEntry {
            seq,
            sender,
            receiver,
            kind,
            fields,
        });
        seq
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Full transcript text: one line per message, LF endings, trailing
    /// newline when nonempty.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.render());
            out.push('\n');
        }
        out
    }
}

/// Joins element values for a list-valued transcript field.
pub fn join_decimal<I, T>(values: I) -> String
where
    I: IntoIterator<Item = T>,
    T: fmt::Display,
{
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
