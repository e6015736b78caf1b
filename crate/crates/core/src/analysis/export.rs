//! CSV / JSONL exports and the archive CSV reader.
//!
//! Archive CSV columns, in order: `bin_*` (one per feature axis), `x_*`
//! (genome), `raw_*` (objectives as the problem reports them), `obj_*`
//! (canonical maximization form), `feat_*`, `violation`, `tdomino` (static
//! score against every row of the same file).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::archive::EliteArchive;
use crate::error::{Error, Result};
use crate::grid::{BinIndex, GridSpec};
use crate::tdomino::{tdomino_scores_batch, AnchorSet, Score};
use crate::types::{decanonicalize, Direction, EvaluatedSolution, ObjectiveVector};

use super::flatten::flatten_all_pairs;
use super::metrics::RunMetrics;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRow {
    pub bin: Vec<usize>,
    pub genome: Vec<f64>,
    pub raw: Vec<f64>,
    pub objectives: Vec<f64>,
    pub features: Vec<f64>,
    pub violation: f64,
    pub score: Score,
}

/// Column counts per group plus the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveTable {
    pub bin_axes: usize,
    pub genome_len: usize,
    pub objectives: usize,
    pub features: usize,
    pub rows: Vec<ArchiveRow>,
}

impl ArchiveTable {
    /// Builds rows from `(bin, solution)` pairs and scores each row
    /// statically against all rows.
    pub fn from_entries(
        entries: &[(BinIndex, &EvaluatedSolution)],
        bin_axes: usize,
        directions: &[Direction],
        problem_genome_len: usize,
        problem_features: usize,
    ) -> Result<Self> {
        let objs: Vec<&ObjectiveVector> = entries.iter().map(|(_, e)| &e.objectives).collect();
        let anchors = AnchorSet::new(objs.iter().map(|o| (*o).clone()).collect());
        let scores = tdomino_scores_batch(&objs, &anchors);
        let rows = entries
            .iter()
            .zip(scores)
            .map(|((bin, e), score)| {
                Ok(ArchiveRow {
                    bin: bin.0.clone(),
                    genome: e.genome.0.clone(),
                    raw: decanonicalize(&e.objectives, directions)?,
                    objectives: e.objectives.0.clone(),
                    features: e.features.0.clone(),
                    violation: e.violation,
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bin_axes,
            genome_len: problem_genome_len,
            objectives: directions.len(),
            features: problem_features,
            rows,
        })
    }

    pub fn from_archive<A: EliteArchive + ?Sized>(
        archive: &A,
        directions: &[Direction],
        genome_len: usize,
    ) -> Result<Self> {
        let entries: Vec<(BinIndex, &EvaluatedSolution)> =
            archive.elites().into_iter().map(|(k, e)| (k.clone(), e)).collect();
        Self::from_entries(
            &entries,
            archive.grid().axes(),
            directions,
            genome_len,
            archive.grid().axes(),
        )
    }

    /// Recomputes every row's static score from its canonical objectives.
    pub fn rescore(&mut self) {
        let objs: Vec<ObjectiveVector> = self.rows.iter().map(|r| ObjectiveVector(r.objectives.clone())).collect();
        let refs: Vec<&ObjectiveVector> = objs.iter().collect();
        let scores = tdomino_scores_batch(&refs, &AnchorSet::new(objs.clone()));
        for (row, s) in self.rows.iter_mut().zip(scores) {
            row.score = s;
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::new();
        let group = |h: &mut Vec<String>, prefix: &str, n: usize| {
            h.extend((0..n).map(|i| format!("{prefix}_{i}")));
        };
        group(&mut h, "bin", self.bin_axes);
        group(&mut h, "x", self.genome_len);
        group(&mut h, "raw", self.objectives);
        group(&mut h, "obj", self.objectives);
        group(&mut h, "feat", self.features);
        h.push("violation".into());
        h.push("tdomino".into());
        h
    }
}

fn f(v: f64) -> String {
    v.to_string()
}

pub fn write_archive_csv<W: Write>(table: &ArchiveTable, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.header())?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.bin.iter().map(|b| b.to_string()).collect();
        rec.extend(row.genome.iter().copied().map(f));
        rec.extend(row.raw.iter().copied().map(f));
        rec.extend(row.objectives.iter().copied().map(f));
        rec.extend(row.features.iter().copied().map(f));
        rec.push(f(row.violation));
        rec.push(row.score.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses an archive CSV written by [`write_archive_csv`]. Column groups
/// must appear in the documented order with consecutive suffixes.
pub fn read_archive_csv<R: Read>(reader: R) -> Result<ArchiveTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("unreadable header: {e}")))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();

    let mut pos = 0;
    let mut take_group = |prefix: &str| -> Result<usize> {
        let mut n = 0;
        while pos < cols.len() && cols[pos] == format!("{prefix}_{n}") {
            n += 1;
            pos += 1;
        }
        Ok(n)
    };
    let bin_axes = take_group("bin")?;
    let genome_len = take_group("x")?;
    let raw = take_group("raw")?;
    let objectives = take_group("obj")?;
    let features = take_group("feat")?;
    let expected_tail = ["violation", "tdomino"];
    if cols.len() != pos + 2 || cols[pos..] != expected_tail {
        return Err(Error::Parse(format!(
            "unexpected columns after position {pos}: {:?}",
            &cols[pos.min(cols.len())..]
        )));
    }
    if raw != objectives {
        return Err(Error::Parse(format!(
            "{raw} raw objective columns but {objectives} canonical ones"
        )));
    }
    if objectives == 0 {
        return Err(Error::Parse("archive has no objective columns".into()));
    }

    let width = cols.len();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {width}",
                line + 1,
                rec.len()
            )));
        }
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let float = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}, column {}: `{}` is not a number", line + 1, cols[i], field(i))))
        };
        let floats = |start: usize, n: usize| -> Result<Vec<f64>> { (start..start + n).map(float).collect() };
        let bin = (0..bin_axes)
            .map(|i| {
                field(i)
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("row {}, column {}: bad bin index `{}`", line + 1, cols[i], field(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut at = bin_axes;
        let genome = floats(at, genome_len)?;
        at += genome_len;
        let raw_vals = floats(at, raw)?;
        at += raw;
        let objs = floats(at, objectives)?;
        at += objectives;
        if let Some(bad) = objs.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("row {}: non-finite objective {bad}", line + 1)));
        }
        let feats = floats(at, features)?;
        at += features;
        let violation = float(at)?;
        let score = field(at + 1)
            .parse::<Score>()
            .map_err(|_| Error::Parse(format!("row {}: bad tdomino score `{}`", line + 1, field(at + 1))))?;
        rows.push(ArchiveRow {
            bin,
            genome,
            raw: raw_vals,
            objectives: objs,
            features: feats,
            violation,
            score,
        });
    }
    Ok(ArchiveTable {
        bin_axes,
        genome_len,
        objectives,
        features,
        rows,
    })
}

pub fn write_metrics_jsonl<W: Write>(metrics: &RunMetrics, mut writer: W) -> std::io::Result<()> {
    for r in &metrics.records {
        let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Raw objective values per row, for parallel-coordinate plots.
pub fn write_parallel_csv<W: Write>(table: &ArchiveTable, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..table.bin_axes).map(|i| format!("bin_{i}")).collect();
    header.extend((0..table.objectives).map(|i| format!("raw_{i}")));
    header.push("tdomino".into());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec: Vec<String> = row.bin.iter().map(|b| b.to_string()).collect();
        rec.extend(row.raw.iter().copied().map(f));
        rec.push(row.score.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportPaths {
    pub archive: PathBuf,
    pub metrics: PathBuf,
    pub parallel: PathBuf,
    pub views: Vec<PathBuf>,
}

pub fn pair_view_name(i: usize, j: usize) -> String {
    format!("flat_{i}_{j}.csv")
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_tables(
    table: &ArchiveTable,
    views: &[((usize, usize), ArchiveTable)],
    metrics: &RunMetrics,
    dir: &Path,
) -> Result<ExportPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let archive = dir.join("archive.csv");
    write_file(&archive, |b| write_archive_csv(table, b).map_err(|e| Error::csv(&archive, e)))?;
    let metrics_path = dir.join("metrics.jsonl");
    write_file(&metrics_path, |b| write_metrics_jsonl(metrics, b).map_err(|e| Error::io(&metrics_path, e)))?;
    let parallel = dir.join("parallel.csv");
    write_file(&parallel, |b| write_parallel_csv(table, b).map_err(|e| Error::csv(&parallel, e)))?;
    let mut view_paths = Vec::new();
    for ((i, j), view) in views {
        let p = dir.join(pair_view_name(*i, *j));
        write_file(&p, |b| write_archive_csv(view, b).map_err(|e| Error::csv(&p, e)))?;
        view_paths.push(p);
    }
    Ok(ExportPaths {
        archive,
        metrics: metrics_path,
        parallel,
        views: view_paths,
    })
}

/// Writes `archive.csv`, `metrics.jsonl`, `parallel.csv` and, for archives
/// with three or more features, one `flat_i_j.csv` per axis pair.
pub fn export_run<A: EliteArchive + ?Sized>(
    archive: &A,
    directions: &[Direction],
    genome_len: usize,
    metrics: &RunMetrics,
    dir: &Path,
) -> Result<ExportPaths> {
    let table = ArchiveTable::from_archive(archive, directions, genome_len)?;
    let mut views = Vec::new();
    if archive.grid().axes() >= 3 {
        for (axes, view) in flatten_all_pairs(archive)? {
            let mut t = ArchiveTable::from_archive(&view, directions, genome_len)?;
            // keep the source-archive static score that decided the cell
            for (row, (_, e)) in t.rows.iter_mut().zip(view.entries()) {
                row.score = e.fitness as Score;
            }
            views.push((axes, t));
        }
    }
    write_tables(&table, &views, metrics, dir)
}

/// Export for a population (NSGA-II): members are binned on `grid` but
/// several may share a bin.
pub fn export_population(
    members: &[EvaluatedSolution],
    grid: &GridSpec,
    directions: &[Direction],
    metrics: &RunMetrics,
    dir: &Path,
) -> Result<ExportPaths> {
    let entries = members
        .iter()
        .map(|m| Ok((grid.bin_index(&m.features)?, m)))
        .collect::<Result<Vec<_>>>()?;
    let genome_len = members.first().map_or(0, |m| m.genome.len());
    let table = ArchiveTable::from_entries(&entries, grid.axes(), directions, genome_len, grid.axes())?;
    write_tables(&table, &[], metrics, dir)
}
