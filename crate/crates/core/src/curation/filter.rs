//! Perplexity-ranked removal of the least natural training instances.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use crate::corpus::{Corpus, Direction};
use crate::util::proportion_count;
use crate::{Error, Result};

/// One removed instance in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovedRecord {
    pub record_id: String,
    pub direction: Direction,
    pub ppl: f64,
    /// 1-based position in the direction's descending-PPL order.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub retained: Corpus,
    /// Removed records, by direction then rank.
    pub removed: Vec<RemovedRecord>,
}

/// Removes the `floor(p * n)` highest-perplexity records of each direction.
///
/// Within a direction, records are ranked by descending PPL with ties going
/// to the smaller record id first. `ppl` maps record id to the perplexity of
/// that record's reference.
pub fn filter_by_perplexity(corpus: &Corpus, ppl: &BTreeMap<String, f64>, proportion: f64) -> Result<FilterOutcome> {
    if !(0.0..1.0).contains(&proportion) {
        return Err(Error::param(format!("filter proportion {proportion} outside [0, 1)")));
    }
    let mut by_direction: BTreeMap<Direction, Vec<(&str, f64)>> = BTreeMap::new();
    for r in corpus.records() {
        let value = *ppl.get(&r.id).ok_or_else(|| Error::MissingPerplexity(r.id.clone()))?;
        if !value.is_finite() {
            return Err(Error::param(format!("record `{}` has non-finite perplexity {value}", r.id)));
        }
        by_direction.entry(r.direction).or_default().push((&r.id, value));
    }

    let mut removed = Vec::new();
    for (direction, mut entries) in by_direction {
        entries.sort_by(|a, b| match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(b.0),
            other => other,
        });
        let cut = proportion_count(proportion, entries.len());
        removed.extend(entries[..cut].iter().enumerate().map(|(i, (id, value))| RemovedRecord {
            record_id: id.to_string(),
            direction,
            ppl: *value,
            rank: i + 1,
        }));
    }

    let gone: HashSet<&str> = removed.iter().map(|r| r.record_id.as_str()).collect();
    let retained = corpus
        .records()
        .iter()
        .filter(|r| !gone.contains(r.id.as_str()))
        .cloned()
        .collect();
    Ok(FilterOutcome { retained: Corpus::new(retained)?, removed })
}

pub fn write_manifest<W: Write>(removed: &[RemovedRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["record_id", "direction", "ppl", "rank"])?;
    for r in removed {
        out.write_record([r.record_id.clone(), r.direction.to_string(), r.ppl.to_string(), r.rank.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<manifest writer>", e))?;
    Ok(())
}

pub fn read_manifest<R: Read>(r: R) -> Result<Vec<RemovedRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).ok_or_else(|| Error::param("manifest row has too few columns"));
        out.push(RemovedRecord {
            record_id: field(0)?.to_string(),
            direction: field(1)?.parse()?,
            ppl: field(2)?.parse().map_err(|_| Error::param(format!("bad manifest ppl `{}`", field(2).unwrap_or(""))))?,
            rank: field(3)?.parse().map_err(|_| Error::param("bad manifest rank"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Granularity, ParallelRecord, Translation, Variant};

    fn corpus_with(ppls: &[(&str, &str, f64)]) -> (Corpus, BTreeMap<String, f64>) {
        let records = ppls
            .iter()
            .map(|(id, dir, _)| ParallelRecord {
                id: id.to_string(),
                direction: dir.parse().unwrap(),
                domain: None,
                granularity: Granularity::Sentence,
                source_text: "s".into(),
                translations: vec![Translation::new("gold", Variant::Reference, "t")],
            })
            .collect();
        let map = ppls.iter().map(|(id, _, p)| (id.to_string(), *p)).collect();
        (Corpus::new(records).unwrap(), map)
    }

    #[test]
    fn removes_the_highest_perplexities() {
        let rows: Vec<(String, f64)> = (1..=10).map(|i| (format!("r{i:02}"), i as f64)).collect();
        let spec: Vec<(&str, &str, f64)> = rows.iter().map(|(id, p)| (id.as_str(), "en-zh", *p)).collect();
        let (c, ppl) = corpus_with(&spec);
        let out = filter_by_perplexity(&c, &ppl, 0.2).unwrap();
        let ids: Vec<_> = out.removed.iter().map(|r| (r.record_id.as_str(), r.ppl, r.rank)).collect();
        assert_eq!(ids, [("r10", 10.0, 1), ("r09", 9.0, 2)]);
        assert_eq!(out.retained.len(), 8);
    }

    #[test]
    fn zero_proportion_is_identity() {
        let (c, ppl) = corpus_with(&[("a", "en-zh", 3.0), ("b", "de-en", 1.0)]);
        let out = filter_by_perplexity(&c, &ppl, 0.0).unwrap();
        assert_eq!(out.retained, c);
        assert!(out.removed.is_empty());
    }

    #[test]
    fn ties_remove_the_smaller_id_first() {
        let (c, ppl) = corpus_with(&[("b", "en-zh", 5.0), ("a", "en-zh", 5.0), ("c", "en-zh", 1.0)]);
        let out = filter_by_perplexity(&c, &ppl, 0.34).unwrap();
        assert_eq!(out.removed.len(), 1);
        assert_eq!(out.removed[0].record_id, "a");
    }

    #[test]
    fn directions_are_filtered_independently() {
        let (c, ppl) = corpus_with(&[
            ("z1", "en-zh", 100.0),
            ("z2", "en-zh", 90.0),
            ("d1", "de-en", 2.0),
            ("d2", "de-en", 1.0),
        ]);
        let out = filter_by_perplexity(&c, &ppl, 0.5).unwrap();
        let ids: Vec<_> = out.removed.iter().map(|r| r.record_id.as_str()).collect();
        assert_eq!(ids, ["d1", "z1"]);
    }

    #[test]
    fn errors() {
        let (c, mut ppl) = corpus_with(&[("a", "en-zh", 3.0), ("b", "en-zh", 1.0)]);
        assert!(filter_by_perplexity(&c, &ppl, 1.0).is_err());
        assert!(filter_by_perplexity(&c, &ppl, -0.1).is_err());
        ppl.remove("b");
        assert!(matches!(filter_by_perplexity(&c, &ppl, 0.5), Err(Error::MissingPerplexity(id)) if id == "b"));
    }

    #[test]
    fn manifest_format() {
        let removed = [RemovedRecord { record_id: "r1".into(), direction: "en-zh".parse().unwrap(), ppl: 12.5, rank: 1 }];
        let mut buf = Vec::new();
        write_manifest(&removed, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "record_id,direction,ppl,rank\nr1,en-zh,12.5,1\n");
        assert_eq!(read_manifest(buf.as_slice()).unwrap(), removed);
    }
}
