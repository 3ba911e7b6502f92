//! Naturalness rankings: average rank and Kendall's tau agreement.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;
use std::io::{Read, Write};

use crate::{Error, Result};

/// One annotator's ordering of systems for one record, most natural first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingRecord {
    pub annotator: String,
    pub record_id: String,
    pub ranking: Vec<String>,
}

/// Reads `annotator,record_id,rank1,rank2,...` CSV with a header row.
pub fn parse_rankings<R: Read>(r: R) -> Result<Vec<RankingRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() < 4 {
            return Err(Error::param(format!("ranking line {line}: need annotator, record_id and two or more systems")));
        }
        let ranking: Vec<String> = row.iter().skip(2).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        out.push(RankingRecord {
            annotator: row[0].trim().to_string(),
            record_id: row[1].trim().to_string(),
            ranking,
        });
    }
    Ok(out)
}

fn check_permutation(ranking: &[String]) -> Result<HashSet<&str>> {
    let set: HashSet<&str> = ranking.iter().map(String::as_str).collect();
    if set.len() != ranking.len() {
        return Err(Error::param(format!("ranking {ranking:?} repeats a system")));
    }
    Ok(set)
}

/// Mean 1-based rank per system (lower is more natural).
pub fn average_rank(rankings: &[RankingRecord]) -> Result<BTreeMap<String, f64>> {
    let first = rankings.first().ok_or_else(|| Error::param("no rankings"))?;
    let systems = check_permutation(&first.ranking)?;
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for r in rankings {
        if check_permutation(&r.ranking)? != systems {
            return Err(Error::param(format!(
                "ranking by `{}` for `{}` covers a different system set",
                r.annotator, r.record_id
            )));
        }
        for (pos, system) in r.ranking.iter().enumerate() {
            *sums.entry(system.clone()).or_default() += (pos + 1) as f64;
        }
    }
    let n = rankings.len() as f64;
    Ok(sums.into_iter().map(|(s, total)| (s, total / n)).collect())
}

/// Kendall's tau-a between two strict orderings of the same items.
///
/// Counts discordant pairs as inversions with a merge sort, O(n log n).
pub fn kendall_tau<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!("rankings differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::param("kendall tau needs at least two items"));
    }
    let position: HashMap<&T, usize> = b.iter().enumerate().map(|(i, x)| (x, i)).collect();
    if position.len() != b.len() {
        return Err(Error::param("second ranking is not a permutation"));
    }
    let mut seq = a
        .iter()
        .map(|x| position.get(x).copied())
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| Error::param("rankings cover different items"))?;
    if seq.iter().collect::<HashSet<_>>().len() != seq.len() {
        return Err(Error::param("first ranking is not a permutation"));
    }
    let n = seq.len() as u64;
    let pairs = n * (n - 1) / 2;
    let discordant = count_inversions(&mut seq);
    Ok((pairs as f64 - 2.0 * discordant as f64) / pairs as f64)
}

fn count_inversions(v: &mut [usize]) -> u64 {
    if v.len() < 2 {
        return 0;
    }
    let mid = v.len() / 2;
    let mut inv = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(v.len());
    let (mut i, mut j) = (0, mid);
    while i < mid && j < v.len() {
        if v[i] <= v[j] {
            merged.push(v[i]);
            i += 1;
        } else {
            merged.push(v[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    inv
}

/// Mean tau between two annotators over the records both ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub annotator_a: String,
    pub annotator_b: String,
    pub tau: f64,
    pub shared_records: usize,
}

/// Pairwise agreement for every annotator pair with at least one shared
/// record, in annotator order.
pub fn pairwise_agreement(rankings: &[RankingRecord]) -> Result<Vec<Agreement>> {
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, &[String]>> = BTreeMap::new();
    for r in rankings {
        by_annotator
            .entry(&r.annotator)
            .or_default()
            .insert(&r.record_id, &r.ranking);
    }
    let annotators: Vec<&str> = by_annotator.keys().copied().collect();
    let mut out = Vec::new();
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            let (ra, rb) = (&by_annotator[a], &by_annotator[b]);
            let taus = ra
                .iter()
                .filter_map(|(record, ranking)| rb.get(record).map(|other| kendall_tau(ranking, other)))
                .collect::<Result<Vec<f64>>>()?;
            if taus.is_empty() {
                continue;
            }
            out.push(Agreement {
                annotator_a: a.to_string(),
                annotator_b: b.to_string(),
                tau: taus.iter().sum::<f64>() / taus.len() as f64,
                shared_records: taus.len(),
            });
        }
    }
    Ok(out)
}

/// `system,average_rank` rows.
pub fn write_average_ranks<W: Write>(ranks: &BTreeMap<String, f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["system", "average_rank"])?;
    for (system, rank) in ranks {
        out.write_record([system.clone(), format!("{rank:.4}")])?;
    }
    out.flush().map_err(|e| Error::io("<ranks writer>", e))?;
    Ok(())
}

/// `annotator_a,annotator_b,tau,shared_records` rows.
pub fn write_agreement<W: Write>(rows: &[Agreement], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["annotator_a", "annotator_b", "tau", "shared_records"])?;
    for a in rows {
        out.write_record([a.annotator_a.clone(), a.annotator_b.clone(), format!("{:.4}", a.tau), a.shared_records.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<agreement writer>", e))?;
    Ok(())
}
