//! Corpus file formats: JSONL (one scholar per line), a CSV triple
//! (`scholars.csv`, `publications.csv`, `citations.csv`) and a bincode image.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use impact_rank_core::corpus::{CitationHistory, Corpus, Publication, Scholar, ScholarInfo};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    /// A directory holding the three CSV files.
    Csv,
    Bin,
}

pub const SCHOLARS_CSV: &str = "scholars.csv";
pub const PUBLICATIONS_CSV: &str = "publications.csv";
pub const CITATIONS_CSV: &str = "citations.csv";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScholarRecord {
    scholar_id: String,
    #[serde(default)]
    interests: Vec<String>,
    #[serde(default)]
    tenured: bool,
    publications: Vec<PublicationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PublicationRecord {
    pub_id: String,
    year: i32,
    #[serde(default)]
    citations: BTreeMap<i32, i64>,
}

fn history(counts: &BTreeMap<i32, i64>) -> std::result::Result<CitationHistory, String> {
    counts
        .iter()
        .map(|(&y, &c)| {
            u64::try_from(c)
                .map(|c| (y, c))
                .map_err(|_| format!("negative citation count {c} in {y}"))
        })
        .collect()
}

pub fn ingest(path: &Path, format: Format, end_year: i32) -> Result<Corpus> {
    match format {
        Format::Jsonl => read_jsonl(path, end_year),
        Format::Csv => read_csv_triple(path, end_year),
        Format::Bin => {
            let c = read_bin(path)?;
            if c.end_year() != end_year {
                return Err(Error::Format(format!(
                    "{} has end year {}, expected {}",
                    path.display(),
                    c.end_year(),
                    end_year
                )));
            }
            Ok(c)
        }
    }
}

pub fn read_jsonl(path: &Path, end_year: i32) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), path, end_year)
}

/// Parses JSONL from any reader; `path` only labels error messages.
pub fn parse_jsonl<R: BufRead>(reader: R, path: &Path, end_year: i32) -> Result<Corpus> {
    let mut scholars = Vec::new();
    let mut pubs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScholarRecord = serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e))?;
        for p in rec.publications {
            let h = history(&p.citations).map_err(|m| Error::parse(path, line_no, format!("{}: {m}", p.pub_id)))?;
            pubs.push(Publication::new(p.pub_id, rec.scholar_id.clone(), p.year).with_history(h));
        }
        scholars.push(ScholarInfo {
            scholar_id: rec.scholar_id,
            interests: rec.interests,
            tenured: rec.tenured,
        });
    }
    Ok(Corpus::new(end_year, scholars, pubs)?)
}

/// Writes one scholar per line. Publications with several owners cannot be
/// expressed in this format and are rejected.
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (si, s) in corpus.scholars().iter().enumerate() {
        let mut publications = Vec::new();
        for &pi in corpus.pubs_of(si) {
            let p = &corpus.publications()[pi];
            if p.scholar_ids.len() > 1 {
                return Err(Error::Format(format!(
                    "publication {} has {} owners; JSONL holds single-owner publications only",
                    p.pub_id,
                    p.scholar_ids.len()
                )));
            }
            publications.push(PublicationRecord {
                pub_id: p.pub_id.clone(),
                year: p.pub_year,
                citations: p.history.iter().map(|(y, c)| (y, c as i64)).collect(),
            });
        }
        let rec = ScholarRecord {
            scholar_id: s.scholar_id.clone(),
            interests: s.interests.clone(),
            tenured: s.tenured,
            publications,
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ScholarRow {
    scholar_id: String,
    tenured: bool,
    interests: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PublicationRow {
    pub_id: String,
    scholar_id: String,
    pub_year: i32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CitationRow {
    pub_id: String,
    year: i32,
    count: i64,
}

fn csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| Error::parse(path, 1, e))?.clone();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec.deserialize(Some(&headers)).map_err(|e| Error::parse(path, line, e))?;
        out.push((line, row));
    }
    Ok(out)
}

/// Reads `scholars.csv`, `publications.csv` and `citations.csv` from `dir`.
/// A publication with several owners appears once per owner in
/// `publications.csv`, with the same year.
pub fn read_csv_triple(dir: &Path, end_year: i32) -> Result<Corpus> {
    let scholars: Vec<ScholarInfo> = csv_rows::<ScholarRow>(&dir.join(SCHOLARS_CSV))?
        .into_iter()
        .map(|(_, r)| ScholarInfo {
            scholar_id: r.scholar_id,
            tenured: r.tenured,
            interests: r.interests.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        })
        .collect();
    let pub_path = dir.join(PUBLICATIONS_CSV);
    let mut pubs: Vec<Publication> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, r) in csv_rows::<PublicationRow>(&pub_path)? {
        match index.get(&r.pub_id) {
            Some(&i) => {
                let p = &mut pubs[i];
                if p.pub_year != r.pub_year {
                    return Err(Error::parse(
                        &pub_path,
                        line,
                        format!("publication {} listed with years {} and {}", r.pub_id, p.pub_year, r.pub_year),
                    ));
                }
                if p.scholar_ids.contains(&r.scholar_id) {
                    return Err(Error::parse(&pub_path, line, format!("duplicate pub_id {}", r.pub_id)));
                }
                p.scholar_ids.push(r.scholar_id);
            }
            None => {
                index.insert(r.pub_id.clone(), pubs.len());
                pubs.push(Publication::new(r.pub_id, r.scholar_id, r.pub_year));
            }
        }
    }
    let cit_path = dir.join(CITATIONS_CSV);
    for (line, r) in csv_rows::<CitationRow>(&cit_path)? {
        let &i = index
            .get(&r.pub_id)
            .ok_or_else(|| Error::parse(&cit_path, line, format!("unknown publication {}", r.pub_id)))?;
        let count = u64::try_from(r.count)
            .map_err(|_| Error::parse(&cit_path, line, format!("negative citation count {}", r.count)))?;
        let h = &mut pubs[i].history;
        if h.iter().any(|(y, _)| y == r.year) {
            return Err(Error::parse(
                &cit_path,
                line,
                format!("duplicate count for {} in {}", r.pub_id, r.year),
            ));
        }
        h.set(r.year, count);
    }
    Ok(Corpus::new(end_year, scholars, pubs)?)
}

pub fn write_csv_triple(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sw = crate::output::csv_writer(&dir.join(SCHOLARS_CSV))?;
    for s in corpus.scholars() {
        if let Some(bad) = s.interests.iter().find(|i| i.contains(';')) {
            return Err(Error::Format(format!("interest {bad:?} of {} contains ';'", s.scholar_id)));
        }
        sw.serialize(ScholarRow {
            scholar_id: s.scholar_id.clone(),
            tenured: s.tenured,
            interests: s.interests.join(";"),
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    sw.flush().map_err(|e| Error::io(dir, e))?;
    let mut pw = crate::output::csv_writer(&dir.join(PUBLICATIONS_CSV))?;
    let mut cw = crate::output::csv_writer(&dir.join(CITATIONS_CSV))?;
    for p in corpus.publications() {
        for sid in &p.scholar_ids {
            pw.serialize(PublicationRow {
                pub_id: p.pub_id.clone(),
                scholar_id: sid.clone(),
                pub_year: p.pub_year,
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        for (year, count) in p.history.iter() {
            cw.serialize(CitationRow {
                pub_id: p.pub_id.clone(),
                year,
                count: count as i64,
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    pw.flush().map_err(|e| Error::io(dir, e))?;
    cw.flush().map_err(|e| Error::io(dir, e))
}

const BIN_MAGIC: &str = "impact-rank-corpus/1";

#[derive(Serialize, Deserialize)]
struct CorpusImage {
    magic: String,
    end_year: i32,
    scholars: Vec<Scholar>,
    publications: Vec<Publication>,
}

/// Canonical binary image of a corpus; equal corpora give equal bytes.
pub fn corpus_bytes(corpus: &Corpus) -> Vec<u8> {
    let image = CorpusImage {
        magic: BIN_MAGIC.into(),
        end_year: corpus.end_year(),
        scholars: corpus.scholars().to_vec(),
        publications: corpus.publications().to_vec(),
    };
    bincode::serialize(&image).expect("in-memory serialization")
}

pub fn corpus_from_bytes(bytes: &[u8]) -> Result<Corpus> {
    let image: CorpusImage = bincode::deserialize(bytes).map_err(|e| Error::Format(format!("corpus image: {e}")))?;
    if image.magic != BIN_MAGIC {
        return Err(Error::Format(format!("unsupported corpus image {:?}", image.magic)));
    }
    Ok(Corpus::from_parts(image.end_year, image.scholars, image.publications)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn corpus_hash(corpus: &Corpus) -> String {
    sha256_hex(&corpus_bytes(corpus))
}

pub fn write_bin(corpus: &Corpus, path: &Path) -> Result<()> {
    fs::write(path, corpus_bytes(corpus)).map_err(|e| Error::io(path, e))
}

pub fn read_bin(path: &Path) -> Result<Corpus> {
    corpus_from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write(corpus: &Corpus, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Jsonl => write_jsonl(corpus, path),
        Format::Csv => write_csv_triple(corpus, path),
        Format::Bin => write_bin(corpus, path),
    }
}
