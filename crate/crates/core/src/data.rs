//! Dataset ingestion and generation.
//!
//! Canonical on-disk format is JSONL, one auction per line:
//!
//! ```text
//! {"auction_id":"a1","reserve":0.1,"candidates":[{"id":"c1","bid":2.0,"pclick_server":0.1,"pclick_device":0.2}, ...]}
//! ```
//!
//! CSV is accepted as a convenience, one candidate per row with columns
//! `auction_id,candidate_id,bid,pclick_server,pclick_device[,reserve]`.
//! Rows violating field invariants are rejected with line-numbered
//! diagnostics; records with duplicate candidate ids (or inconsistent
//! reserves) are rejected whole. Rejects are counted, not fatal, unless
//! strict mode is on.
//!
//! [`group_taobao_log`] ingests raw interaction rows
//! (`user,timestamp,ad_id,item_price,pclick_server,pclick_device`), groups
//! rows sharing (user, timestamp) into single-slot auctions, derives bids as
//! `constant × item_price`, and sets every reserve to the dataset-wide
//! minimum bid. pClick model training is out of scope; the pclick columns
//! must be precomputed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auction::Candidate;
use crate::error::Error;
use crate::rng::rng_from_seed;
use crate::Result;

/// Bernoulli-distributed synthetic scores are 0/1 draws; zero pClicks are
/// invalid (the price ratio would be undefined), so draws map onto a floor
/// and a high value that keep the extreme two-point shape.
pub const BERNOULLI_FLOOR: f64 = 0.01;
pub const BERNOULLI_HIGH: f64 = 0.99;

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One single-slot auction: an id, a reserve price, and its candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionRecord {
    pub auction_id: String,
    pub reserve: f64,
    pub candidates: Vec<Candidate>,
}

impl AuctionRecord {
    /// Record invariants: at least one candidate, valid candidate fields,
    /// unique candidate ids, finite non-negative reserve.
    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::invalid_input(format!(
                "auction {}: no candidates",
                self.auction_id
            )));
        }
        if !self.reserve.is_finite() || self.reserve < 0.0 {
            return Err(Error::invalid_input(format!(
                "auction {}: reserve must be finite and non-negative, got {}",
                self.auction_id, self.reserve
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.candidates {
            c.validate()?;
            if !seen.insert(c.id.as_str()) {
                return Err(Error::invalid_input(format!(
                    "auction {}: duplicate candidate id {}",
                    self.auction_id, c.id
                )));
            }
        }
        Ok(())
    }
}

/// Result of an ingestion pass: accepted records plus reject accounting.
/// Accepted candidate rows + rejected rows = input rows.
#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<AuctionRecord>,
    pub accepted_rows: u64,
    pub rejected_rows: u64,
    /// One line-numbered message per reject.
    pub diagnostics: Vec<String>,
}

impl Ingested {
    fn reject(&mut self, rows: u64, message: String) {
        self.rejected_rows += rows;
        self.diagnostics.push(message);
    }
}

// ---------------------------------------------------------------------------
// JSONL / CSV auction logs
// ---------------------------------------------------------------------------

/// Load an auction log from `path`, dispatching on the extension:
/// `.jsonl`/`.json` for one-auction-per-line JSON, `.csv` for
/// one-candidate-per-row CSV. With `strict` set, the first reject aborts.
pub fn load_auction_log(path: &Path, strict: bool) -> Result<Ingested> {
    let file = File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => load_jsonl(BufReader::new(file), strict),
        Some("csv") => load_csv(file, strict),
        other => Err(Error::invalid_config(format!(
            "unsupported auction-log extension {:?} for {}; expected .jsonl, .json or .csv",
            other.unwrap_or(""),
            path.display()
        ))),
    }
}

/// JSONL ingestion: one [`AuctionRecord`] per non-empty line.
pub fn load_jsonl<R: BufRead>(reader: R, strict: bool) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<AuctionRecord, _> = serde_json::from_str(&line);
        match parsed {
            Ok(record) => match record.validate() {
                Ok(()) => {
                    out.accepted_rows += record.candidates.len() as u64;
                    out.records.push(record);
                }
                Err(e) => {
                    let rows = record.candidates.len().max(1) as u64;
                    out.reject(rows, format!("line {line_no}: {e}"));
                    if strict {
                        return Err(Error::data(format!("line {line_no}: {e}")));
                    }
                }
            },
            Err(e) => {
                out.reject(1, format!("line {line_no}: unparseable record: {e}"));
                if strict {
                    return Err(Error::data(format!(
                        "line {line_no}: unparseable record: {e}"
                    )));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    auction_id: String,
    candidate_id: String,
    bid: f64,
    pclick_server: f64,
    pclick_device: f64,
    #[serde(default)]
    reserve: Option<f64>,
}

/// CSV ingestion: one candidate per row, grouped by `auction_id` in
/// first-seen order. Rows of one auction need not be contiguous.
pub fn load_csv<R: Read>(reader: R, strict: bool) -> Result<Ingested> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Ingested::default();
    // auction_id -> (record, per-auction reject count)
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, (AuctionRecord, u64)> = HashMap::new();

    for (idx, row) in csv_reader.deserialize::<CsvRow>().enumerate() {
        let line_no = idx + 2; // header is line 1
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                out.reject(1, format!("line {line_no}: unparseable row: {e}"));
                if strict {
                    return Err(Error::data(format!("line {line_no}: unparseable row: {e}")));
                }
                continue;
            }
        };
        let candidate = Candidate {
            id: row.candidate_id,
            bid: row.bid,
            pclick_server: row.pclick_server,
            pclick_device: row.pclick_device,
        };
        if let Err(e) = candidate.validate() {
            out.reject(1, format!("line {line_no}: {e}"));
            if strict {
                return Err(Error::data(format!("line {line_no}: {e}")));
            }
            continue;
        }
        let reserve = row.reserve.unwrap_or(0.0);
        let entry = grouped.entry(row.auction_id.clone()).or_insert_with(|| {
            order.push(row.auction_id.clone());
            (
                AuctionRecord {
                    auction_id: row.auction_id.clone(),
                    reserve,
                    candidates: Vec::new(),
                },
                0,
            )
        });
        if entry.0.reserve != reserve {
            entry.1 += 1;
            out.diagnostics.push(format!(
                "line {line_no}: auction {}: inconsistent reserve {reserve} (first saw {})",
                entry.0.auction_id, entry.0.reserve
            ));
            if strict {
                return Err(Error::data(format!(
                    "line {line_no}: auction {}: inconsistent reserve",
                    entry.0.auction_id
                )));
            }
            continue;
        }
        entry.0.candidates.push(candidate);
    }

    for id in order {
        let (record, row_rejects) = grouped.remove(&id).expect("grouped by construction");
        out.rejected_rows += row_rejects;
        match record.validate() {
            Ok(()) => {
                out.accepted_rows += record.candidates.len() as u64;
                out.records.push(record);
            }
            Err(e) => {
                // Whole-record reject (duplicate candidate ids and the like).
                let rows = record.candidates.len() as u64;
                out.reject(rows, format!("auction {id}: record rejected: {e}"));
                if strict {
                    return Err(Error::data(format!("auction {id}: record rejected: {e}")));
                }
            }
        }
    }
    Ok(out)
}

/// Write records as canonical JSONL.
pub fn write_jsonl<W: Write>(records: &[AuctionRecord], mut writer: W) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::data(format!("serialize {}: {e}", record.auction_id)))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Interaction-log grouping (Taobao-style)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct TaobaoRow {
    user: String,
    timestamp: String,
    ad_id: String,
    item_price: f64,
    pclick_server: f64,
    pclick_device: f64,
}

/// Group raw interaction rows into single-slot auctions: all rows sharing
/// (user, timestamp) become candidates of one auction whose id is
/// `timestamp-user`. Bids are `bid_constant × item_price`; the reserve is the
/// dataset-wide minimum bid.
pub fn group_taobao_log<R: Read>(reader: R, bid_constant: f64, strict: bool) -> Result<Ingested> {
    if !bid_constant.is_finite() || bid_constant <= 0.0 {
        return Err(Error::invalid_config(format!(
            "bid constant must be finite and strictly positive, got {bid_constant}"
        )));
    }
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::data(format!("cannot read header row: {e}")))?;
        for required in ["pclick_server", "pclick_device"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::invalid_config(format!(
                    "interaction log is missing the {required} column; precompute pClick \
                     estimates for both contexts before ingestion (model training is not \
                     part of this tool)"
                )));
            }
        }
    }

    let mut out = Ingested::default();
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, AuctionRecord> = HashMap::new();

    for (idx, row) in csv_reader.deserialize::<TaobaoRow>().enumerate() {
        let line_no = idx + 2;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                out.reject(1, format!("line {line_no}: unparseable row: {e}"));
                if strict {
                    return Err(Error::data(format!("line {line_no}: unparseable row: {e}")));
                }
                continue;
            }
        };
        let candidate = Candidate {
            id: row.ad_id,
            bid: bid_constant * row.item_price,
            pclick_server: row.pclick_server,
            pclick_device: row.pclick_device,
        };
        if let Err(e) = candidate.validate() {
            out.reject(1, format!("line {line_no}: {e}"));
            if strict {
                return Err(Error::data(format!("line {line_no}: {e}")));
            }
            continue;
        }
        let auction_id = format!("{}-{}", row.timestamp, row.user);
        let entry = grouped.entry(auction_id.clone()).or_insert_with(|| {
            order.push(auction_id.clone());
            AuctionRecord {
                auction_id,
                reserve: 0.0,
                candidates: Vec::new(),
            }
        });
        entry.candidates.push(candidate);
    }

    // Reserve = dataset-wide minimum bid, so by construction the minimum-bid
    // candidate stays eligible everywhere.
    let min_bid = grouped
        .values()
        .flat_map(|r| r.candidates.iter().map(|c| c.bid))
        .fold(f64::INFINITY, f64::min);

    for id in order {
        let mut record = grouped.remove(&id).expect("grouped by construction");
        record.reserve = if min_bid.is_finite() { min_bid } else { 0.0 };
        match record.validate() {
            Ok(()) => {
                out.accepted_rows += record.candidates.len() as u64;
                out.records.push(record);
            }
            Err(e) => {
                let rows = record.candidates.len() as u64;
                out.reject(rows, format!("auction {id}: record rejected: {e}"));
                if strict {
                    return Err(Error::data(format!("auction {id}: record rejected: {e}")));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Device-score law for synthetic candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreDistribution {
    /// pClicks uniform on (0, 1].
    Uniform01,
    /// Single-trial Bernoulli(p) mapped onto {BERNOULLI_FLOOR, BERNOULLI_HIGH}.
    Bernoulli { p: f64 },
}

/// Bid law for synthetic candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BidModel {
    /// Every bid 1.0, so scores equal pClicks.
    UnitBids,
    /// Bids log-uniform on [low, high].
    LogUniform { low: f64, high: f64 },
}

/// How server pClicks relate to device pClicks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerScoreModel {
    /// Fresh independent draw from the score distribution.
    Independent,
    /// `α × pclick_device + (1 - α) × independent draw`; α = 1 reproduces the
    /// device pClick exactly, α = 0 is fully independent.
    MixedFromDevice { alpha: f64 },
}

/// Specification for a reproducible synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_auctions: usize,
    pub candidates_per_auction: usize,
    pub score_distribution: ScoreDistribution,
    pub bid_model: BidModel,
    pub server_score_model: ServerScoreModel,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_auctions == 0 || self.candidates_per_auction == 0 {
            return Err(Error::invalid_config(
                "num_auctions and candidates_per_auction must be at least 1",
            ));
        }
        if let ScoreDistribution::Bernoulli { p } = self.score_distribution {
            if !(0.0..1.0).contains(&p) || p <= 0.0 {
                return Err(Error::invalid_config(format!(
                    "bernoulli p must lie in (0, 1), got {p}"
                )));
            }
        }
        if let BidModel::LogUniform { low, high } = self.bid_model {
            if !(low.is_finite() && high.is_finite()) || low <= 0.0 || high < low {
                return Err(Error::invalid_config(format!(
                    "log-uniform bid range must satisfy 0 < low <= high, got [{low}, {high}]"
                )));
            }
        }
        if let ServerScoreModel::MixedFromDevice { alpha } = self.server_score_model {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::invalid_config(format!(
                    "mixing alpha must lie in [0, 1], got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

fn draw_score<R: Rng>(dist: ScoreDistribution, rng: &mut R) -> f64 {
    match dist {
        // 1 - u maps [0,1) onto (0,1].
        ScoreDistribution::Uniform01 => 1.0 - rng.gen::<f64>(),
        ScoreDistribution::Bernoulli { p } => {
            if rng.gen::<f64>() < p {
                BERNOULLI_HIGH
            } else {
                BERNOULLI_FLOOR
            }
        }
    }
}

/// Generate a reproducible synthetic dataset: same spec, same bytes.
/// Reserves are zero; with unit bids every score is its pClick.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<AuctionRecord>> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut records = Vec::with_capacity(spec.num_auctions);
    for a in 0..spec.num_auctions {
        let mut candidates = Vec::with_capacity(spec.candidates_per_auction);
        for c in 0..spec.candidates_per_auction {
            let pclick_device = draw_score(spec.score_distribution, &mut rng);
            let pclick_server = match spec.server_score_model {
                ServerScoreModel::Independent => draw_score(spec.score_distribution, &mut rng),
                ServerScoreModel::MixedFromDevice { alpha } => {
                    let independent = draw_score(spec.score_distribution, &mut rng);
                    alpha * pclick_device + (1.0 - alpha) * independent
                }
            };
            let bid = match spec.bid_model {
                BidModel::UnitBids => 1.0,
                BidModel::LogUniform { low, high } => {
                    if low == high {
                        low
                    } else {
                        (rng.gen_range(low.ln()..high.ln())).exp()
                    }
                }
            };
            candidates.push(Candidate {
                id: format!("c{c:04}"),
                bid,
                pclick_server,
                pclick_device,
            });
        }
        records.push(AuctionRecord {
            auction_id: format!("syn{a:06}"),
            reserve: 0.0,
            candidates,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

/// Blend server pClicks into device pClicks:
/// `pclick_device := α × pclick_device + (1 - α) × pclick_server`.
/// α = 1 is the identity; α = 0 replaces device with server estimates.
pub fn mix_pclick(records: &[AuctionRecord], alpha: f64) -> Result<Vec<AuctionRecord>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid_parameter(format!(
            "mixing alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(records
        .iter()
        .map(|r| {
            let mut record = r.clone();
            for c in &mut record.candidates {
                c.pclick_device = alpha * c.pclick_device + (1.0 - alpha) * c.pclick_server;
            }
            record
        })
        .collect())
}

/// One candidate-count bucket with its member records.
#[derive(Debug)]
pub struct CountBucket<'a> {
    pub label: String,
    pub records: Vec<&'a AuctionRecord>,
}

/// Partition records by candidate count. For ascending `edges = [e1, .., ek]`
/// the buckets are `count <= e1`, then `e_{i} < count < e_{i+1}` for interior
/// pairs, then `count >= ek`; `[3, 10]` reproduces the three-way split
/// "three or fewer / between three and ten / ten or more". Every record lands
/// in exactly one bucket.
pub fn bucket_by_candidate_count<'a>(
    records: &'a [AuctionRecord],
    edges: &[usize],
) -> Result<Vec<CountBucket<'a>>> {
    if edges.is_empty() {
        return Ok(vec![CountBucket {
            label: "all".to_string(),
            records: records.iter().collect(),
        }]);
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid_parameter(
            "bucket edges must be strictly ascending",
        ));
    }
    let mut buckets: Vec<CountBucket<'a>> = Vec::with_capacity(edges.len() + 1);
    buckets.push(CountBucket {
        label: format!("<={}", edges[0]),
        records: Vec::new(),
    });
    for pair in edges.windows(2) {
        buckets.push(CountBucket {
            label: format!("{}<n<{}", pair[0], pair[1]),
            records: Vec::new(),
        });
    }
    buckets.push(CountBucket {
        label: format!(">={}", edges[edges.len() - 1]),
        records: Vec::new(),
    });

    for record in records {
        let n = record.candidates.len();
        let slot = if n <= edges[0] {
            0
        } else if n >= edges[edges.len() - 1] {
            buckets.len() - 1
        } else {
            // Interior: find the pair e_i < n < e_{i+1}.
            1 + edges
                .windows(2)
                .position(|w| n > w[0] && n < w[1])
                .expect("edges cover all interior counts")
        };
        buckets[slot].records.push(record);
    }
    Ok(buckets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Cursor;

    fn spec_uniform(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_auctions: 100,
            candidates_per_auction: 15,
            score_distribution: ScoreDistribution::Uniform01,
            bid_model: BidModel::UnitBids,
            server_score_model: ServerScoreModel::Independent,
            seed,
        }
    }

    #[test]
    fn csv_rows_group_by_auction_id() {
        let csv = "\
auction_id,candidate_id,bid,pclick_server,pclick_device
a1,c1,2.0,0.1,0.2
a1,c2,1.5,0.12,0.3
a1,c3,1.0,0.05,0.4
";
        let out = load_csv(Cursor::new(csv), false).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].candidates.len(), 3);
        assert_eq!(out.accepted_rows, 3);
        assert_eq!(out.rejected_rows, 0);
    }

    #[test]
    fn zero_pclick_row_is_rejected_with_line_number() {
        let csv = "\
auction_id,candidate_id,bid,pclick_server,pclick_device
a1,c1,2.0,0.0,0.2
a1,c2,1.5,0.12,0.3
";
        let out = load_csv(Cursor::new(csv), false).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.accepted_rows, 1);
        assert_eq!(out.rejected_rows, 1);
        assert!(out.diagnostics[0].contains("line 2"));

        assert!(load_csv(Cursor::new(csv), true).is_err());
    }

    #[test]
    fn duplicate_candidate_id_rejects_the_record() {
        let csv = "\
auction_id,candidate_id,bid,pclick_server,pclick_device
a1,c1,2.0,0.1,0.2
a1,c1,1.5,0.12,0.3
a2,c1,1.0,0.3,0.3
";
        let out = load_csv(Cursor::new(csv), false).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].auction_id, "a2");
        assert_eq!(out.rejected_rows, 2);
        assert_eq!(out.accepted_rows + out.rejected_rows, 3);
    }

    #[test]
    fn jsonl_roundtrip_and_diagnostics() {
        let records = generate_synthetic(&spec_uniform(11)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let out = load_jsonl(Cursor::new(&buf), false).unwrap();
        assert_eq!(out.records, records);

        let bad = b"not json\n".to_vec();
        let out = load_jsonl(Cursor::new(&bad), false).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rejected_rows, 1);
        assert!(out.diagnostics[0].contains("line 1"));

        // Empty file: empty list, no diagnostics.
        let out = load_jsonl(Cursor::new(Vec::new()), false).unwrap();
        assert!(out.records.is_empty());
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn taobao_rows_group_by_user_and_timestamp() {
        let csv = "\
user,timestamp,ad_id,item_price,pclick_server,pclick_device
u1,1000,ad1,10.0,0.1,0.2
u1,1000,ad2,40.0,0.2,0.3
u2,1000,ad3,20.0,0.3,0.4
";
        let out = group_taobao_log(Cursor::new(csv), 0.01, false).unwrap();
        assert_eq!(out.records.len(), 2);
        let first = &out.records[0];
        assert_eq!(first.auction_id, "1000-u1");
        assert_eq!(first.candidates.len(), 2);
        assert_abs_diff_eq!(first.candidates[0].bid, 0.10, epsilon = 1e-12);
        assert_abs_diff_eq!(first.candidates[1].bid, 0.40, epsilon = 1e-12);
        // Reserve is the dataset-wide minimum bid, on every record.
        for r in &out.records {
            assert_abs_diff_eq!(r.reserve, 0.10, epsilon = 1e-12);
        }
    }

    #[test]
    fn taobao_without_pclick_columns_is_a_configuration_error() {
        let csv = "user,timestamp,ad_id,item_price\nu1,1,ad1,10.0\n";
        let err = group_taobao_log(Cursor::new(csv), 1.0, false).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert!(err.to_string().contains("pclick"));
    }

    #[test]
    fn synthetic_generation_is_deterministic() {
        let a = generate_synthetic(&spec_uniform(7)).unwrap();
        let b = generate_synthetic(&spec_uniform(7)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&spec_uniform(8)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 100);
        assert_eq!(a[0].candidates.len(), 15);
        for r in &a {
            r.validate().unwrap();
        }
    }

    #[test]
    fn bernoulli_scores_hit_the_two_point_law() {
        let spec = SyntheticSpec {
            num_auctions: 1000,
            candidates_per_auction: 100,
            score_distribution: ScoreDistribution::Bernoulli { p: 0.9 },
            bid_model: BidModel::UnitBids,
            server_score_model: ServerScoreModel::Independent,
            seed: 3,
        };
        let records = generate_synthetic(&spec).unwrap();
        let mut high = 0usize;
        let mut total = 0usize;
        for r in &records {
            for c in &r.candidates {
                assert!(c.pclick_device == BERNOULLI_FLOOR || c.pclick_device == BERNOULLI_HIGH);
                high += (c.pclick_device == BERNOULLI_HIGH) as usize;
                total += 1;
            }
        }
        assert_abs_diff_eq!(high as f64 / total as f64, 0.9, epsilon = 0.005);
    }

    #[test]
    fn mixed_server_model_at_alpha_one_copies_device() {
        let spec = SyntheticSpec {
            server_score_model: ServerScoreModel::MixedFromDevice { alpha: 1.0 },
            ..spec_uniform(5)
        };
        let records = generate_synthetic(&spec).unwrap();
        for r in &records {
            for c in &r.candidates {
                assert_eq!(c.pclick_server, c.pclick_device);
            }
        }
    }

    #[test]
    fn mix_pclick_blends_and_preserves_range() {
        let records = generate_synthetic(&spec_uniform(9)).unwrap();
        let identity = mix_pclick(&records, 1.0).unwrap();
        assert_eq!(identity, records);

        let copied = mix_pclick(&records, 0.0).unwrap();
        for r in &copied {
            for c in &r.candidates {
                assert_eq!(c.pclick_device, c.pclick_server);
            }
        }

        let record = AuctionRecord {
            auction_id: "a".into(),
            reserve: 0.0,
            candidates: vec![Candidate {
                id: "c".into(),
                bid: 1.0,
                pclick_server: 0.2,
                pclick_device: 0.4,
            }],
        };
        let mixed = mix_pclick(&[record], 0.5).unwrap();
        assert_abs_diff_eq!(mixed[0].candidates[0].pclick_device, 0.3, epsilon = 1e-12);

        let blended = mix_pclick(&copied, 0.37).unwrap();
        for r in &blended {
            r.validate().unwrap();
        }

        assert!(mix_pclick(&copied, 1.5).is_err());
    }

    #[test]
    fn bucketing_matches_the_three_way_split() {
        let mut records = Vec::new();
        for (i, n) in [2usize, 5, 12].iter().enumerate() {
            records.push(AuctionRecord {
                auction_id: format!("a{i}"),
                reserve: 0.0,
                candidates: (0..*n)
                    .map(|c| Candidate {
                        id: format!("c{c}"),
                        bid: 1.0,
                        pclick_server: 0.5,
                        pclick_device: 0.5,
                    })
                    .collect(),
            });
        }
        let buckets = bucket_by_candidate_count(&records, &[3, 10]).unwrap();
        assert_eq!(buckets.len(), 3);
        assert_eq!(buckets[0].label, "<=3");
        assert_eq!(buckets[1].label, "3<n<10");
        assert_eq!(buckets[2].label, ">=10");
        assert_eq!(buckets[0].records.len(), 1);
        assert_eq!(buckets[1].records.len(), 1);
        assert_eq!(buckets[2].records.len(), 1);

        // Boundary counts land inclusively on the outer buckets.
        let three = bucket_by_candidate_count(&records[..1], &[2]).unwrap();
        assert_eq!(three[0].records.len(), 1);

        let single = bucket_by_candidate_count(&records, &[]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].records.len(), 3);

        let empty: Vec<AuctionRecord> = Vec::new();
        let buckets = bucket_by_candidate_count(&empty, &[3, 10]).unwrap();
        assert!(buckets.iter().all(|b| b.records.is_empty()));

        assert!(bucket_by_candidate_count(&records, &[10, 3]).is_err());
    }
}
