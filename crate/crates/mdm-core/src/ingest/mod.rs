//! Event-log ingestion: parsing the two-file corpus format (events + labels),
//! grouping events into per-user relation sequences, and the seeded synthetic
//! generator in [`synth`].
//!
//! Events file: `timestamp,src,dst,relation` per line, header optional.
//! Labels file: `user_id,label` with label 0 (normal) or 1 (spammer).
//! Malformed lines are rejected individually with their line number; only an
//! unreadable source is fatal.

mod synth;

pub use synth::{synth_corpus, synth_events, SynthConfig, BEHAVIOR_VERSION};

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

pub type UserId = u64;
/// Relation ids are 1-based; 0 is reserved for padding and never appears in
/// a sequence.
pub type RelationId = usize;

pub const DEFAULT_RELATION_COUNT: usize = 7;

/// One directed interaction. `src == dst` is legal (self-interactions are
/// kept and counted in the corpus stats).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub timestamp: i64,
    pub src: UserId,
    pub dst: UserId,
    pub relation: RelationId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Normal,
    Spammer,
}

/// Chronological relation sequence of one source user. Never empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserSequence {
    pub user: UserId,
    pub relations: Vec<RelationId>,
    pub label: Option<Label>,
}

/// Sequences sorted by user id plus the relation-universe size.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub relation_count: usize,
    pub sequences: Vec<UserSequence>,
    pub self_interactions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusStats {
    pub users: usize,
    pub labeled: usize,
    pub spammers: usize,
    pub interactions: usize,
    pub mean_length: f64,
    pub spammer_fraction: f64,
    pub self_interactions: usize,
}

impl Corpus {
    pub fn sequence(&self, user: UserId) -> Option<&UserSequence> {
        self.sequences
            .binary_search_by_key(&user, |s| s.user)
            .ok()
            .map(|i| &self.sequences[i])
    }

    pub fn stats(&self) -> CorpusStats {
        let users = self.sequences.len();
        let labeled = self.sequences.iter().filter(|s| s.label.is_some()).count();
        let spammers =
            self.sequences.iter().filter(|s| s.label == Some(Label::Spammer)).count();
        let interactions: usize = self.sequences.iter().map(|s| s.relations.len()).sum();
        let mean_length =
            if users == 0 { 0.0 } else { interactions as f64 / users as f64 };
        let spammer_fraction =
            if labeled == 0 { 0.0 } else { spammers as f64 / labeled as f64 };
        CorpusStats {
            users,
            labeled,
            spammers,
            interactions,
            mean_length,
            spammer_fraction,
            self_interactions: self.self_interactions,
        }
    }
}

/// A line the parser refused, with the 1-based line number it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedEvents {
    pub events: Vec<Event>,
    pub rejected: Vec<RejectedLine>,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedLabels {
    pub labels: BTreeMap<UserId, Label>,
    pub rejected: Vec<RejectedLine>,
}

fn parse_event_line(
    line: &str,
    relation_count: usize,
    delimiter: char,
) -> std::result::Result<Event, String> {
    let fields: Vec<&str> = line.split(delimiter).map(str::trim).collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, got {}", fields.len()));
    }
    let timestamp: i64 =
        fields[0].parse().map_err(|_| format!("bad timestamp {:?}", fields[0]))?;
    let src: UserId = fields[1].parse().map_err(|_| format!("bad src {:?}", fields[1]))?;
    let dst: UserId = fields[2].parse().map_err(|_| format!("bad dst {:?}", fields[2]))?;
    let relation: RelationId =
        fields[3].parse().map_err(|_| format!("bad relation {:?}", fields[3]))?;
    if relation < 1 || relation > relation_count {
        return Err(format!("relation {} outside 1..={}", relation, relation_count));
    }
    Ok(Event { timestamp, src, dst, relation })
}

/// Parse an events stream. Line 1 may be a header; it is detected by failing
/// to parse while every other malformed line lands in `rejected`.
pub fn parse_events<R: BufRead>(
    reader: R,
    relation_count: usize,
    delimiter: char,
) -> Result<ParsedEvents> {
    if relation_count == 0 {
        return Err(Error::invalid("relation_count must be at least 1"));
    }
    let mut out = ParsedEvents::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_event_line(trimmed, relation_count, delimiter) {
            Ok(ev) => out.events.push(ev),
            Err(reason) => {
                // A non-parsing first line is taken as the header.
                if idx == 0 {
                    continue;
                }
                out.rejected.push(RejectedLine { line: idx + 1, reason });
            }
        }
    }
    Ok(out)
}

pub fn parse_events_path(
    path: impl AsRef<Path>,
    relation_count: usize,
    delimiter: char,
) -> Result<ParsedEvents> {
    let file = std::fs::File::open(path)?;
    parse_events(std::io::BufReader::new(file), relation_count, delimiter)
}

pub fn parse_labels<R: BufRead>(reader: R, delimiter: char) -> Result<ParsedLabels> {
    let mut out = ParsedLabels::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: std::result::Result<(UserId, Label), String> = (|| {
            let fields: Vec<&str> = trimmed.split(delimiter).map(str::trim).collect();
            if fields.len() != 2 {
                return Err(format!("expected 2 fields, got {}", fields.len()));
            }
            let user: UserId =
                fields[0].parse().map_err(|_| format!("bad user id {:?}", fields[0]))?;
            let label = match fields[1] {
                "0" => Label::Normal,
                "1" => Label::Spammer,
                other => return Err(format!("label {:?} is not 0 or 1", other)),
            };
            Ok((user, label))
        })();
        match parsed {
            Ok((user, label)) => {
                if out.labels.contains_key(&user) {
                    out.rejected.push(RejectedLine {
                        line: idx + 1,
                        reason: format!("duplicate label for user {}", user),
                    });
                } else {
                    out.labels.insert(user, label);
                }
            }
            Err(reason) => {
                if idx == 0 {
                    continue;
                }
                out.rejected.push(RejectedLine { line: idx + 1, reason });
            }
        }
    }
    Ok(out)
}

pub fn parse_labels_path(path: impl AsRef<Path>, delimiter: char) -> Result<ParsedLabels> {
    let file = std::fs::File::open(path)?;
    parse_labels(std::io::BufReader::new(file), delimiter)
}

pub fn write_events<W: Write>(mut writer: W, events: &[Event]) -> Result<()> {
    writeln!(writer, "timestamp,src,dst,relation")?;
    for ev in events {
        writeln!(writer, "{},{},{},{}", ev.timestamp, ev.src, ev.dst, ev.relation)?;
    }
    Ok(())
}

pub fn write_labels<W: Write>(mut writer: W, labels: &BTreeMap<UserId, Label>) -> Result<()> {
    writeln!(writer, "user_id,label")?;
    for (user, label) in labels {
        let bit = match label {
            Label::Normal => 0,
            Label::Spammer => 1,
        };
        writeln!(writer, "{},{}", user, bit)?;
    }
    Ok(())
}

/// Group events by source user into chronological sequences. Events are
/// ordered by timestamp with input order breaking ties; users that only ever
/// appear as `dst` get no sequence. Labels are attached where present.
pub fn build_sequences(
    events: &[Event],
    labels: &BTreeMap<UserId, Label>,
    relation_count: usize,
) -> Result<Corpus> {
    if relation_count == 0 {
        return Err(Error::invalid("relation_count must be at least 1"));
    }
    let mut per_user: BTreeMap<UserId, Vec<(i64, usize, RelationId)>> = BTreeMap::new();
    let mut self_interactions = 0usize;
    for (idx, ev) in events.iter().enumerate() {
        if ev.relation < 1 || ev.relation > relation_count {
            return Err(Error::invalid(format!(
                "event {} has relation {} outside 1..={}",
                idx, ev.relation, relation_count
            )));
        }
        if ev.src == ev.dst {
            self_interactions += 1;
        }
        per_user.entry(ev.src).or_default().push((ev.timestamp, idx, ev.relation));
    }
    let sequences = per_user
        .into_iter()
        .map(|(user, mut items)| {
            items.sort_by_key(|&(ts, idx, _)| (ts, idx));
            UserSequence {
                user,
                relations: items.into_iter().map(|(_, _, r)| r).collect(),
                label: labels.get(&user).copied(),
            }
        })
        .collect();
    Ok(Corpus { relation_count, sequences, self_interactions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn ev(ts: i64, src: UserId, dst: UserId, rel: RelationId) -> Event {
        Event { timestamp: ts, src, dst, relation: rel }
    }

    #[test]
    fn three_line_file_maps_rows_to_events() {
        let text = "10,1,2,4\n11,1,3,5\n12,2,1,4\n";
        let parsed = parse_events(Cursor::new(text), 7, ',').unwrap();
        assert!(parsed.rejected.is_empty());
        assert_eq!(
            parsed.events,
            vec![ev(10, 1, 2, 4), ev(11, 1, 3, 5), ev(12, 2, 1, 4)]
        );
    }

    #[test]
    fn empty_file_parses_to_nothing() {
        let parsed = parse_events(Cursor::new(""), 7, ',').unwrap();
        assert!(parsed.events.is_empty());
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn header_is_skipped_without_a_rejection() {
        let text = "timestamp,src,dst,relation\n10,1,2,4\n";
        let parsed = parse_events(Cursor::new(text), 7, ',').unwrap();
        assert!(parsed.rejected.is_empty());
        assert_eq!(parsed.events.len(), 1);
    }

    #[test]
    fn out_of_range_relation_is_rejected_with_line_number() {
        let text = "10,1,2,4\n11,1,2,9\n12,1,2,0\n";
        let parsed = parse_events(Cursor::new(text), 7, ',').unwrap();
        assert_eq!(parsed.events.len(), 1);
        assert_eq!(parsed.rejected.len(), 2);
        assert_eq!(parsed.rejected[0].line, 2);
        assert_eq!(parsed.rejected[1].line, 3);
    }

    #[test]
    fn malformed_middle_line_is_rejected_not_fatal() {
        let text = "10,1,2,4\nnot,a,line\n12,1,2,5\n";
        let parsed = parse_events(Cursor::new(text), 7, ',').unwrap();
        assert_eq!(parsed.events.len(), 2);
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].line, 2);
    }

    #[test]
    fn sequences_follow_timestamps_with_input_order_ties() {
        let events = vec![
            ev(5, 1, 2, 3),
            ev(5, 1, 2, 4), // same timestamp, later in input
            ev(1, 1, 3, 5),
            ev(9, 2, 1, 1),
        ];
        let corpus = build_sequences(&events, &BTreeMap::new(), 7).unwrap();
        assert_eq!(corpus.sequences.len(), 2);
        assert_eq!(corpus.sequences[0].user, 1);
        assert_eq!(corpus.sequences[0].relations, vec![5, 3, 4]);
        assert_eq!(corpus.sequences[1].relations, vec![1]);
    }

    #[test]
    fn dst_only_user_gets_no_sequence() {
        let events = vec![ev(1, 1, 99, 2)];
        let corpus = build_sequences(&events, &BTreeMap::new(), 7).unwrap();
        assert_eq!(corpus.sequences.len(), 1);
        assert!(corpus.sequence(99).is_none());
        assert!(corpus.sequence(1).is_some());
    }

    #[test]
    fn labels_attach_and_stats_count() {
        let events = vec![ev(1, 1, 2, 4), ev(2, 1, 2, 4), ev(3, 2, 1, 5), ev(3, 3, 3, 1)];
        let mut labels = BTreeMap::new();
        labels.insert(1, Label::Spammer);
        labels.insert(2, Label::Normal);
        let corpus = build_sequences(&events, &labels, 7).unwrap();
        let stats = corpus.stats();
        assert_eq!(stats.users, 3);
        assert_eq!(stats.labeled, 2);
        assert_eq!(stats.spammers, 1);
        assert_eq!(stats.interactions, 4);
        assert!((stats.spammer_fraction - 0.5).abs() < 1e-12);
        assert_eq!(stats.self_interactions, 1);
        assert!((stats.mean_length - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_event_list_builds_empty_corpus() {
        let corpus = build_sequences(&[], &BTreeMap::new(), 7).unwrap();
        let stats = corpus.stats();
        assert_eq!(stats.users, 0);
        assert_eq!(stats.interactions, 0);
        assert_eq!(stats.mean_length, 0.0);
        assert_eq!(stats.spammer_fraction, 0.0);
    }

    #[test]
    fn build_rejects_out_of_range_relation() {
        let events = vec![ev(1, 1, 2, 9)];
        assert!(build_sequences(&events, &BTreeMap::new(), 7).is_err());
    }

    #[test]
    fn labels_roundtrip_and_duplicates_reject() {
        let text = "user_id,label\n3,1\n5,0\n3,0\n7,2\n";
        let parsed = parse_labels(Cursor::new(text), ',').unwrap();
        assert_eq!(parsed.labels.len(), 2);
        assert_eq!(parsed.labels[&3], Label::Spammer);
        assert_eq!(parsed.labels[&5], Label::Normal);
        assert_eq!(parsed.rejected.len(), 2);
        let mut buf = Vec::new();
        write_labels(&mut buf, &parsed.labels).unwrap();
        let again = parse_labels(Cursor::new(buf), ',').unwrap();
        assert_eq!(again.labels, parsed.labels);
        assert!(again.rejected.is_empty());
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (0i64..1000, 0u64..50, 0u64..50, 1usize..=7)
            .prop_map(|(ts, src, dst, rel)| ev(ts, src, dst, rel))
    }

    proptest! {
        // parse . serialize . parse == parse for well-formed inputs
        #[test]
        fn serialize_parse_is_identity(events in proptest::collection::vec(arb_event(), 0..60)) {
            let mut buf = Vec::new();
            write_events(&mut buf, &events).unwrap();
            let parsed = parse_events(Cursor::new(buf), 7, ',').unwrap();
            prop_assert!(parsed.rejected.is_empty());
            prop_assert_eq!(parsed.events, events);
        }

        #[test]
        fn sequence_items_conserve_event_count(events in proptest::collection::vec(arb_event(), 0..60)) {
            let corpus = build_sequences(&events, &BTreeMap::new(), 7).unwrap();
            let total: usize = corpus.sequences.iter().map(|s| s.relations.len()).sum();
            prop_assert_eq!(total, events.len());
            prop_assert_eq!(corpus.stats().interactions, events.len());
        }

        #[test]
        fn mean_length_matches_ratio(events in proptest::collection::vec(arb_event(), 1..60)) {
            let corpus = build_sequences(&events, &BTreeMap::new(), 7).unwrap();
            let stats = corpus.stats();
            let want = stats.interactions as f64 / stats.users as f64;
            prop_assert!((stats.mean_length - want).abs() < 1e-9);
        }

        #[test]
        fn sequences_are_sorted_and_nonempty(events in proptest::collection::vec(arb_event(), 0..60)) {
            let corpus = build_sequences(&events, &BTreeMap::new(), 7).unwrap();
            for pair in corpus.sequences.windows(2) {
                prop_assert!(pair[0].user < pair[1].user);
            }
            for seq in &corpus.sequences {
                prop_assert!(!seq.relations.is_empty());
                prop_assert!(seq.relations.iter().all(|&r| (1..=7).contains(&r)));
            }
        }
    }
}
