//! Outcome rates, per-word success and the concreteness correlation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::select::ConcretenessTable;
use crate::error::{Error, Result};
use crate::game::OutcomeKind;
use crate::scalar::Scalar;
use crate::transcript::Transcript;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordStats {
    pub word: String,
    pub games: usize,
    pub attacker_wins: usize,
    pub defender_wins: usize,
    pub ties: usize,
    pub aborted: usize,
    /// Fraction of games the attacker won, in [0, 1].
    pub attack_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub words: usize,
    pub mean_success: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessAnalysis {
    pub buckets: Vec<Bucket>,
    /// Absent when concreteness or success does not vary.
    pub pearson_r: Option<f64>,
    pub words: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub games: usize,
    pub attacker_rate: f64,
    pub defender_rate: f64,
    pub tie_rate: f64,
    pub aborted_rate: f64,
    pub avg_turns: f64,
    pub forced_wins: usize,
    pub per_word: Vec<WordStats>,
    pub skipped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concreteness: Option<ConcretenessAnalysis>,
}

/// Rates in percent over all transcripts; per-word rows sorted by word.
pub fn aggregate(transcripts: &[Transcript], skipped: &[String]) -> Result<StatsReport> {
    if transcripts.is_empty() {
        return Err(Error::Transcript("no transcripts to aggregate".into()));
    }
    let mut per: BTreeMap<&str, WordStats> = BTreeMap::new();
    let mut counts: BTreeMap<OutcomeKind, usize> = BTreeMap::new();
    let mut turns = 0u64;
    let mut forced_wins = 0;
    for t in transcripts {
        let kind = t.outcome.kind;
        *counts.entry(kind).or_insert(0) += 1;
        turns += t.outcome.turn as u64;
        forced_wins += usize::from(t.outcome.forced);
        let w = per.entry(t.start.target.as_str()).or_insert_with(|| WordStats {
            word: t.start.target.clone(),
            games: 0,
            attacker_wins: 0,
            defender_wins: 0,
            ties: 0,
            aborted: 0,
            attack_success: 0.0,
        });
        w.games += 1;
        match kind {
            OutcomeKind::AttackerWin => w.attacker_wins += 1,
            OutcomeKind::DefenderWin => w.defender_wins += 1,
            OutcomeKind::Tie => w.ties += 1,
            OutcomeKind::Aborted => w.aborted += 1,
        }
    }
    let n = transcripts.len() as f64;
    let rate = |k| 100.0 * counts.get(&k).copied().unwrap_or(0) as f64 / n;
    let mut per_word: Vec<WordStats> = per.into_values().collect();
    for w in &mut per_word {
        w.attack_success = w.attacker_wins as f64 / w.games as f64;
    }
    let mut skipped = skipped.to_vec();
    skipped.sort();
    skipped.dedup();
    Ok(StatsReport {
        games: transcripts.len(),
        attacker_rate: rate(OutcomeKind::AttackerWin),
        defender_rate: rate(OutcomeKind::DefenderWin),
        tie_rate: rate(OutcomeKind::Tie),
        aborted_rate: rate(OutcomeKind::Aborted),
        avg_turns: turns as f64 / n,
        forced_wins,
        per_word,
        skipped,
        concreteness: None,
    })
}

/// Sample Pearson correlation; `None` for fewer than two points or zero
/// variance on either side.
pub fn pearson<S: Scalar>(xs: &[S], ys: &[S]) -> Option<S> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = S::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<S>() / n;
    let my = ys.iter().copied().sum::<S>() / n;
    let (mut sxy, mut sxx, mut syy) = (S::zero(), S::zero(), S::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= S::zero() || syy <= S::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-S::one()).min(S::one()))
}

/// Equal-width buckets over the observed concreteness range with the mean
/// success per bucket, plus the correlation over all `(concreteness,
/// success)` points.
pub fn concreteness_analysis(points: &[(f64, f64)], buckets: usize) -> Result<ConcretenessAnalysis> {
    if buckets == 0 {
        return Err(Error::Config("bucket count must be at least 1".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(buckets);
    if points.is_empty() {
        return Ok(ConcretenessAnalysis {
            buckets: out,
            pearson_r: None,
            words: 0,
        });
    }
    let width = (hi - lo) / buckets as f64;
    let mut sums = vec![(0usize, 0.0f64); buckets];
    for &(x, y) in points {
        let i = if width > 0.0 { (((x - lo) / width) as usize).min(buckets - 1) } else { 0 };
        sums[i].0 += 1;
        sums[i].1 += y;
    }
    for (i, (count, total)) in sums.into_iter().enumerate() {
        out.push(Bucket {
            lo: lo + width * i as f64,
            hi: if i + 1 == buckets { hi } else { lo + width * (i + 1) as f64 },
            words: count,
            mean_success: (count > 0).then(|| total / count as f64),
        });
    }
    Ok(ConcretenessAnalysis {
        buckets: out,
        pearson_r: pearson(&xs, &ys),
        words: points.len(),
    })
}

impl StatsReport {
    /// Attaches the concreteness analysis for words found in `table`.
    pub fn with_concreteness(mut self, table: &ConcretenessTable, buckets: usize) -> Result<Self> {
        let points: Vec<(f64, f64)> = self
            .per_word
            .iter()
            .filter_map(|w| table.get(&w.word).map(|c| (c, w.attack_success)))
            .collect();
        self.concreteness = Some(concreteness_analysis(&points, buckets)?);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// A summary row followed by one row per word.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "scope", "word", "games", "attacker_rate", "defender_rate", "tie_rate", "aborted_rate", "avg_turns", "skipped",
        ];
        w.write_record(header).expect("in-memory csv");
        w.write_record([
            "all".to_string(),
            String::new(),
            self.games.to_string(),
            format!("{:.4}", self.attacker_rate),
            format!("{:.4}", self.defender_rate),
            format!("{:.4}", self.tie_rate),
            format!("{:.4}", self.aborted_rate),
            format!("{:.4}", self.avg_turns),
            self.skipped.len().to_string(),
        ])
        .expect("in-memory csv");
        for ws in &self.per_word {
            let pct = |k: usize| format!("{:.4}", 100.0 * k as f64 / ws.games as f64);
            w.write_record([
                "word".to_string(),
                ws.word.clone(),
                ws.games.to_string(),
                pct(ws.attacker_wins),
                pct(ws.defender_wins),
                pct(ws.ties),
                pct(ws.aborted),
                String::new(),
                String::new(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [("report.json", self.to_json()), ("report.csv", self.to_csv())] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{AbortPolicy, Outcome};
    use crate::judge::JudgeConfig;
    use crate::transcript::StartRecord;

    fn t(word: &str, kind: OutcomeKind, turn: u32) -> Transcript {
        Transcript {
            start: StartRecord {
                target: word.into(),
                max_turns: 10,
                seed: 0,
                abort_policy: AbortPolicy::Separate,
                judge: JudgeConfig::default(),
                attacker: "a".into(),
                defender: "d".into(),
                word_index: 0,
                round: 0,
            },
            actions: Vec::new(),
            outcome: Outcome {
                kind,
                turn,
                forced: false,
                abort: None,
            },
        }
    }

    #[test]
    fn rates_from_five_games() {
        use OutcomeKind::*;
        let ts = [
            t("a", AttackerWin, 1),
            t("a", AttackerWin, 3),
            t("b", DefenderWin, 2),
            t("b", DefenderWin, 4),
            t("c", Tie, 10),
        ];
        let r = aggregate(&ts, &[]).unwrap();
        assert_eq!((r.attacker_rate, r.defender_rate, r.tie_rate, r.aborted_rate), (40.0, 40.0, 20.0, 0.0));
        assert_eq!(r.avg_turns, 4.0);
        assert_eq!(r.per_word[0].attack_success, 1.0);
        let single = aggregate(&[t("a", AttackerWin, 3)], &[]).unwrap();
        assert_eq!(single.avg_turns, 3.0);
        assert!(aggregate(&[], &[]).is_err());
    }

    #[test]
    fn planted_correlations() {
        let xs: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.2).collect();
        let up: Vec<f64> = xs.iter().map(|x| 0.1 * x).collect();
        let down: Vec<f64> = xs.iter().map(|x| 1.0 - 0.1 * x).collect();
        assert!((pearson(&xs, &up).unwrap() - 1.0).abs() < 1e-9);
        assert!((pearson(&xs, &down).unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(pearson(&[2.0, 2.0, 2.0], &[0.1, 0.5, 0.9]), None);
    }

    #[test]
    fn equal_width_buckets() {
        let pts = [(1.0, 0.0), (2.0, 0.5), (3.0, 1.0), (5.0, 1.0)];
        let a = concreteness_analysis(&pts, 2).unwrap();
        assert_eq!(a.buckets[0].words, 2);
        assert_eq!(a.buckets[1].words, 2);
        assert_eq!(a.buckets[1].mean_success, Some(1.0));
        assert_eq!(a.buckets[1].hi, 5.0);
    }
}
