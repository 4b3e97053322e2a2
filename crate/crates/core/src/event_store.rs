//! Data model for fight-participation time series: roster, events, series,
//! file ingestion, and canonicalization.
//!
//! Two file formats are supported:
//!
//! * `lines` (default): UTF-8, one event per line, IDs separated by commas
//!   or whitespace, `#` starts a comment line. The roster is the union of
//!   all IDs seen.
//! * `matrix`: a header row of IDs, then one 0/1 row per event. The roster
//!   is the header.
//!
//! IDs are opaque strings. Canonicalization sorts the roster
//! lexicographically; events become fixed-width bitsets over that order, so
//! "A,B" and "B,A" ingest identically. Event order is the file order and is
//! treated as ground truth.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::bitset::Bitset;
use crate::error::{Error, Result};

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesFormat {
    Lines,
    Matrix,
}

/// Ordered set of unique individual identifiers.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Roster {
    ids: Vec<String>,
}

impl Roster {
    /// Build from any iterable of IDs; sorts and dedups.
    pub fn new<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let set: BTreeSet<String> = ids.into_iter().collect();
        Self {
            ids: set.into_iter().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    /// Roster index of an ID; IDs are sorted so this is a binary search.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|probe| probe.as_str().cmp(id)).ok()
    }

    /// Translate a tuple of IDs into a membership mask.
    pub fn mask_for(&self, ids: &[impl AsRef<str>]) -> Result<Bitset> {
        let mut mask = Bitset::new(self.size());
        for id in ids {
            let idx = self
                .index_of(id.as_ref())
                .ok_or_else(|| Error::UnknownIndividual {
                    id: id.as_ref().to_string(),
                })?;
            mask.insert(idx);
        }
        Ok(mask)
    }

    /// IDs for the set bits of a mask, sorted (roster order is sorted).
    pub fn names_for(&self, mask: &Bitset) -> Vec<String> {
        mask.iter_ones().map(|i| self.ids[i].clone()).collect()
    }
}

/// One observed fight: its ordinal position and who participated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FightEvent {
    pub index: usize,
    pub participants: Bitset,
}

impl FightEvent {
    pub fn size(&self) -> usize {
        self.participants.count_ones()
    }
}

/// An ordered sequence of fights over a fixed roster.
///
/// Immutable after construction; shared freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FightSeries {
    roster: Roster,
    events: Vec<FightEvent>,
}

impl FightSeries {
    /// Assemble from participation masks. Rejects empty events and masks of
    /// the wrong width.
    pub fn new(roster: Roster, participation: Vec<Bitset>) -> Result<Self> {
        let width = roster.size();
        let mut events = Vec::with_capacity(participation.len());
        for (index, mask) in participation.into_iter().enumerate() {
            if mask.width() != width {
                return Err(Error::InvalidConfig(format!(
                    "event {index} has width {} but roster has {width} members",
                    mask.width()
                )));
            }
            if mask.is_empty() {
                return Err(Error::EmptyEvent { line: index + 1 });
            }
            events.push(FightEvent {
                index,
                participants: mask,
            });
        }
        Ok(Self { roster, events })
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn events(&self) -> &[FightEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Per-individual event counts, indexed by roster position.
    pub fn participation_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.roster.size()];
        for ev in &self.events {
            for i in ev.participants.iter_ones() {
                counts[i] += 1;
            }
        }
        counts
    }

    /// `participation_counts` keyed by ID, for reports.
    pub fn named_participation_counts(&self) -> std::collections::BTreeMap<String, u64> {
        self.participation_counts()
            .into_iter()
            .enumerate()
            .map(|(i, c)| (self.roster.id(i).to_string(), c))
            .collect()
    }

    /// New series keeping only events with at least `min_size` participants.
    /// Events are reindexed to stay contiguous.
    pub fn filter_min_size(&self, min_size: usize) -> Result<Self> {
        let kept: Vec<Bitset> = self
            .events
            .iter()
            .filter(|e| e.size() >= min_size)
            .map(|e| e.participants.clone())
            .collect();
        Self::new(self.roster.clone(), kept)
    }

    /// Reorder events by `order` (a permutation of 0..T), reindexing.
    pub fn reordered(&self, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), self.events.len());
        let events = order
            .iter()
            .enumerate()
            .map(|(index, &src)| FightEvent {
                index,
                participants: self.events[src].participants.clone(),
            })
            .collect();
        Self {
            roster: self.roster.clone(),
            events,
        }
    }

    /// Canonical `lines` serialization: one event per line, IDs sorted,
    /// comma-separated.
    pub fn to_lines_string(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            let names: Vec<&str> = ev.participants.iter_ones().map(|i| self.roster.id(i)).collect();
            let _ = writeln!(out, "{}", names.join(","));
        }
        out
    }

    /// `matrix` serialization: header of IDs, then 0/1 rows.
    pub fn to_matrix_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.roster.ids().join(" "));
        for ev in &self.events {
            let row: Vec<&str> = (0..self.roster.size())
                .map(|i| if ev.participants.contains(i) { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn write_lines(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_lines_string())?;
        Ok(())
    }
}

fn split_ids(line: &str, line_no: usize) -> Result<Vec<&str>> {
    // Commas are hard separators: an empty field between commas is malformed.
    // Whitespace is a soft separator.
    let mut out = Vec::new();
    if line.contains(',') {
        for field in line.split(',') {
            let field = field.trim();
            if field.is_empty() {
                return Err(Error::ParseError {
                    line: line_no,
                    message: "empty field between commas".into(),
                });
            }
            for tok in field.split_whitespace() {
                out.push(tok);
            }
        }
    } else {
        out.extend(line.split_whitespace());
    }
    Ok(out)
}

/// Parse `lines`-format text into a series.
pub fn parse_lines(text: &str) -> Result<FightSeries> {
    // First pass: collect IDs per event and the roster union.
    let mut raw_events: Vec<(usize, Vec<String>)> = Vec::new();
    let mut all_ids: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids = split_ids(line, line_no)?;
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(*id) {
                return Err(Error::DuplicateId {
                    id: id.to_string(),
                    line: line_no,
                });
            }
        }
        all_ids.extend(ids.iter().map(|s| s.to_string()));
        raw_events.push((line_no, ids.into_iter().map(String::from).collect()));
    }
    let roster = Roster::new(all_ids);
    let mut masks = Vec::with_capacity(raw_events.len());
    for (_line_no, ids) in &raw_events {
        let mask = roster.mask_for(ids)?;
        masks.push(mask);
    }
    FightSeries::new(roster, masks)
}

/// Parse `matrix`-format text into a series.
pub fn parse_matrix(text: &str) -> Result<FightSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_no, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        message: "matrix file has no header row".into(),
    })?;
    let header_ids = split_ids(header, header_no)?;
    if header_ids.is_empty() {
        return Err(Error::ParseError {
            line: header_no,
            message: "header row has no ids".into(),
        });
    }
    let mut seen = BTreeSet::new();
    for id in &header_ids {
        if !seen.insert(*id) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                line: header_no,
            });
        }
    }
    let roster = Roster::new(header_ids.iter().map(|s| s.to_string()));
    // Column -> roster index (the roster is sorted, the header may not be).
    let col_to_idx: Vec<usize> = header_ids
        .iter()
        .map(|id| roster.index_of(id).expect("header id in roster"))
        .collect();

    let mut masks = Vec::new();
    for (line_no, row) in lines {
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != header_ids.len() {
            return Err(Error::ParseError {
                line: line_no,
                message: format!(
                    "row has {} cells but header has {} ids",
                    cells.len(),
                    header_ids.len()
                ),
            });
        }
        let mut mask = Bitset::new(roster.size());
        for (col, cell) in cells.iter().enumerate() {
            match *cell {
                "0" => {}
                "1" => mask.insert(col_to_idx[col]),
                other => {
                    return Err(Error::ParseError {
                        line: line_no,
                        message: format!("expected 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        if mask.is_empty() {
            return Err(Error::EmptyEvent { line: line_no });
        }
        masks.push(mask);
    }
    FightSeries::new(roster, masks)
}

/// Load a series from a file in the given format.
pub fn load_series(path: &Path, format: SeriesFormat) -> Result<FightSeries> {
    let text = std::fs::read_to_string(path)?;
    match format {
        SeriesFormat::Lines => parse_lines(&text),
        SeriesFormat::Matrix => parse_matrix(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(text: &str) -> FightSeries {
        parse_lines(text).unwrap()
    }

    #[test]
    fn lines_roster_is_union_and_events_keep_file_order() {
        let s = series("A,B\nB,C\nA\n");
        assert_eq!(s.roster().ids(), &["A", "B", "C"]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.events()[0].participants.ones(), vec![0, 1]);
        assert_eq!(s.events()[1].participants.ones(), vec![1, 2]);
        assert_eq!(s.events()[2].participants.ones(), vec![0]);
        for (i, ev) in s.events().iter().enumerate() {
            assert_eq!(ev.index, i);
        }
    }

    #[test]
    fn matrix_parses_header_then_rows() {
        let s = parse_matrix("A B\n1 1\n0 1\n").unwrap();
        assert_eq!(s.roster().ids(), &["A", "B"]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.events()[0].size(), 2);
        assert_eq!(s.events()[1].participants.ones(), vec![1]);
    }

    #[test]
    fn matrix_header_order_need_not_be_sorted() {
        let s = parse_matrix("B A\n1 0\n").unwrap();
        // Row says B participated.
        assert_eq!(s.roster().names_for(&s.events()[0].participants), ["B"]);
    }

    #[test]
    fn empty_field_between_commas_is_a_parse_error() {
        match parse_lines("A,,B\n") {
            Err(Error::ParseError { line: 1, .. }) => {}
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_in_one_line_is_rejected() {
        match parse_lines("A,B,A\n") {
            Err(Error::DuplicateId { ref id, line: 1 }) if id == "A" => {}
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn all_zero_matrix_row_is_an_empty_event() {
        match parse_matrix("A B\n0 0\n") {
            Err(Error::EmptyEvent { line: 2 }) => {}
            other => panic!("expected EmptyEvent, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let s = series("# observed session 1\nA,B\n\n  \nB,C\n");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn canonicalization_is_order_insensitive_within_a_line() {
        let a = series("A,B\n");
        let b = series("B, A\n");
        assert_eq!(a, b);
    }

    #[test]
    fn whitespace_separation_works() {
        let s = series("A B\nB\tC\n");
        assert_eq!(s.len(), 2);
        assert_eq!(s.roster().size(), 3);
    }

    #[test]
    fn participation_counts_match_direct_count() {
        let s = series("A,B\nB,C\nA\n");
        assert_eq!(s.named_participation_counts()[&"A".to_string()], 2);
        assert_eq!(s.named_participation_counts()[&"B".to_string()], 2);
        assert_eq!(s.named_participation_counts()[&"C".to_string()], 1);
    }

    #[test]
    fn roundtrip_lines_lines() {
        let s = series("B,A\nC\nA,C\n");
        let t = parse_lines(&s.to_lines_string()).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn roundtrip_matrix() {
        let s = series("A,B\nB,C\n");
        let t = parse_matrix(&s.to_matrix_string()).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn filter_min_size_reindexes() {
        let s = series("A\nA,B\nB\nA,B,C\n");
        let f = s.filter_min_size(2).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.events()[0].index, 0);
        assert_eq!(f.events()[1].size(), 3);
    }

    #[test]
    fn mask_for_unknown_id_errors() {
        let s = series("A,B\n");
        match s.roster().mask_for(&["Z"]) {
            Err(Error::UnknownIndividual { ref id }) if id == "Z" => {}
            other => panic!("expected UnknownIndividual, got {other:?}"),
        }
    }
}
