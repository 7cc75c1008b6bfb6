//! Event log and its tab-separated text form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const HEADER: &str = "tick\tbinding\tevent\tV\tv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindingRef {
    pub offer: usize,
    pub accept: usize,
}

impl fmt::Display for BindingRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.offer, self.accept)
    }
}

impl FromStr for BindingRef {
    type Err = LogParseError;
    fn from_str(s: &str) -> Result<Self, LogParseError> {
        let (o, a) = s.split_once('/').ok_or(LogParseError::field("binding"))?;
        Ok(BindingRef {
            offer: o.parse().map_err(|_| LogParseError::field("binding"))?,
            accept: a.parse().map_err(|_| LogParseError::field("binding"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Emitted,
    Sampled,
    Delivered,
    Missed,
    Kept,
    Broken,
}

impl Event {
    pub fn code(self) -> &'static str {
        match self {
            Event::Emitted => "emitted",
            Event::Sampled => "sampled",
            Event::Delivered => "delivered",
            Event::Missed => "missed",
            Event::Kept => "kept",
            Event::Broken => "broken",
        }
    }
}

impl FromStr for Event {
    type Err = LogParseError;
    fn from_str(s: &str) -> Result<Self, LogParseError> {
        Ok(match s {
            "emitted" => Event::Emitted,
            "sampled" => Event::Sampled,
            "delivered" => Event::Delivered,
            "missed" => Event::Missed,
            "kept" => Event::Kept,
            "broken" => Event::Broken,
            _ => return Err(LogParseError::field("event")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub tick: u64,
    pub binding: BindingRef,
    pub event: Event,
    /// Observer's potential after the event.
    pub potential: f64,
    /// Sampling rate in effect.
    pub rate: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogParseError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("bad {0} field")]
    Field(&'static str),
}

impl LogParseError {
    fn field(name: &'static str) -> Self {
        LogParseError::Field(name)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// # Panics
    /// If `rec.tick` is earlier than the last record's tick.
    pub fn push(&mut self, rec: EventRecord) {
        if let Some(last) = self.records.last() {
            assert!(rec.tick >= last.tick, "event ticks must be nondecreasing");
        }
        self.records.push(rec);
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, binding: BindingRef, event: Event) -> usize {
        self.records
            .iter()
            .filter(|r| r.binding == binding && r.event == event)
            .count()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.tick,
                r.binding,
                r.event.code(),
                r.potential,
                r.rate
            ));
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<EventLog, LogParseError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(LogParseError::MissingHeader),
        }
        let mut log = EventLog::new();
        for (i, line) in lines {
            let at = |e: LogParseError| LogParseError::Line {
                line: i + 1,
                reason: e.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(at(LogParseError::Field("count")));
            }
            let tick: u64 = fields[0].parse().map_err(|_| at(LogParseError::field("tick")))?;
            let binding: BindingRef = fields[1].parse().map_err(at)?;
            let event: Event = fields[2].parse().map_err(at)?;
            let potential = finite(fields[3]).ok_or_else(|| at(LogParseError::field("V")))?;
            let rate = finite(fields[4]).ok_or_else(|| at(LogParseError::field("v")))?;
            if log.records.last().is_some_and(|last| tick < last.tick) {
                return Err(at(LogParseError::field("tick order")));
            }
            log.records.push(EventRecord {
                tick,
                binding,
                event,
                potential,
                rate,
            });
        }
        Ok(log)
    }
}

fn finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}
