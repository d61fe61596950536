//! Sparse rating matrices: ingestion, splitting and persistence.
//!
//! A [`SparseMatrix`] stores only the observed entries (the set Ψ). The
//! unobserved complement is implicit. Rows and columns are indexed so that the
//! observed entries of one row or one column can be walked in O(degree).

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Entry { row, col, value }
    }
}

/// Observed entries of an `n_rows` x `n_cols` matrix.
///
/// Entries keep their insertion order. Row and column indexes refer into that
/// order; within a row the index is sorted by column and within a column by row.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<Entry>,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols && self.entries == other.entries
    }
}

impl SparseMatrix {
    /// Builds a matrix, rejecting out-of-range ids, non-finite values and
    /// repeated `(row, col)` pairs.
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if e.row >= n_rows || e.col >= n_cols {
                return Err(Error::OutOfBounds {
                    row: e.row,
                    col: e.col,
                    n_rows,
                    n_cols,
                });
            }
            if !e.value.is_finite() {
                return Err(Error::NonFinite(e.value));
            }
        }
        let (row_ptr, row_idx) = bucket(n_rows, &entries, |e| (e.row, e.col));
        // Duplicates are adjacent within each row bucket once sorted by column.
        for r in 0..n_rows {
            let bucket = &row_idx[row_ptr[r]..row_ptr[r + 1]];
            if let Some(w) = bucket
                .windows(2)
                .find(|w| entries[w[0]].col == entries[w[1]].col)
            {
                let e = entries[w[1]];
                return Err(Error::DuplicateEntry {
                    row: e.row.to_string(),
                    col: e.col.to_string(),
                    line: w[1] + 1,
                });
            }
        }
        let (col_ptr, col_idx) = bucket(n_cols, &entries, |e| (e.col, e.row));
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
            row_ptr,
            row_idx,
            col_ptr,
            col_idx,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Observed entries of row `row`, ordered by column.
    pub fn row(&self, row: usize) -> impl Iterator<Item = &Entry> + '_ {
        self.row_idx[self.row_ptr[row]..self.row_ptr[row + 1]]
            .iter()
            .map(move |&k| &self.entries[k])
    }

    /// Observed entries of column `col`, ordered by row.
    pub fn col(&self, col: usize) -> impl Iterator<Item = &Entry> + '_ {
        self.col_idx[self.col_ptr[col]..self.col_ptr[col + 1]]
            .iter()
            .map(move |&k| &self.entries[k])
    }

    pub fn row_degree(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    pub fn col_degree(&self, col: usize) -> usize {
        self.col_ptr[col + 1] - self.col_ptr[col]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.n_rows || col >= self.n_cols {
            return None;
        }
        let bucket = &self.row_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        bucket
            .binary_search_by_key(&col, |&k| self.entries[k].col)
            .ok()
            .map(|pos| self.entries[bucket[pos]].value)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_some()
    }

    /// |Ψ| / (n_rows · n_cols).
    pub fn density(&self) -> f64 {
        let cells = self.n_rows as f64 * self.n_cols as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.entries.len() as f64 / cells
        }
    }

    pub fn mean(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|e| e.value).sum::<f64>() / self.entries.len() as f64)
        }
    }

    /// A matrix with the same shape holding the entries at `indices` (in that order).
    pub fn subset(&self, indices: &[usize]) -> SparseMatrix {
        let entries = indices.iter().map(|&k| self.entries[k]).collect();
        SparseMatrix::new(self.n_rows, self.n_cols, entries)
            .expect("subset of a valid matrix is valid")
    }
}

// Counting sort of entry indices into `n` buckets keyed by `key(e).0`, each
// bucket ordered by `key(e).1`.
fn bucket(
    n: usize,
    entries: &[Entry],
    key: impl Fn(&Entry) -> (usize, usize),
) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; n + 1];
    for e in entries {
        ptr[key(e).0 + 1] += 1;
    }
    for k in 0..n {
        ptr[k + 1] += ptr[k];
    }
    let mut fill = ptr.clone();
    let mut idx = vec![0usize; entries.len()];
    for (k, e) in entries.iter().enumerate() {
        let b = key(e).0;
        idx[fill[b]] = k;
        fill[b] += 1;
    }
    for b in 0..n {
        idx[ptr[b]..ptr[b + 1]].sort_unstable_by_key(|&k| key(&entries[k]).1);
    }
    (ptr, idx)
}

/// Legal rating interval used by the clamping activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    r_min: f64,
    r_max: f64,
}

impl ValueRange {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
            return Err(Error::DegenerateRange { r_min, r_max });
        }
        Ok(ValueRange { r_min, r_max })
    }

    pub fn min(&self) -> f64 {
        self.r_min
    }

    pub fn max(&self) -> f64 {
        self.r_max
    }
}

/// Smallest and largest observed value.
pub fn value_range(matrix: &SparseMatrix) -> Result<ValueRange> {
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let (lo, hi) = matrix
        .entries()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.value), hi.max(e.value))
        });
    ValueRange::new(lo, hi)
}

/// Splits the observed entries uniformly at random into a training part of
/// `round(train_fraction · |Ψ|)` entries and a test part holding the rest.
///
/// Both parts keep the source dimensions and the source entry order.
pub fn split(
    matrix: &SparseMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<(SparseMatrix, SparseMatrix)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )));
    }
    let n = matrix.nnz();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cannot split a matrix with {n} entries"
        )));
    }
    let k = (train_fraction * n as f64).round() as usize;
    let mut in_train = vec![false; n];
    for i in index::sample(&mut rng::seeded(seed), n, k) {
        in_train[i] = true;
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_train[i]);
    Ok((matrix.subset(&train), matrix.subset(&test)))
}

/// Field layout of a raw ratings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    /// `user::item::rating[::timestamp]`
    MovieLens,
    Tsv,
    Csv,
}

impl RatingFormat {
    fn fields<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            RatingFormat::MovieLens => line.split("::").collect(),
            RatingFormat::Tsv => line.split('\t').collect(),
            RatingFormat::Csv => line.split(',').collect(),
        }
    }
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens" | "movielens-double-colon" => Ok(RatingFormat::MovieLens),
            "tsv" => Ok(RatingFormat::Tsv),
            "csv" => Ok(RatingFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown rating format {other:?}"
            ))),
        }
    }
}

impl fmt::Display for RatingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingFormat::MovieLens => "movielens",
            RatingFormat::Tsv => "tsv",
            RatingFormat::Csv => "csv",
        })
    }
}

/// External tokens behind the dense row and column ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    rows: Vec<String>,
    cols: Vec<String>,
    row_lookup: HashMap<String, usize>,
    col_lookup: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(tokens: &mut Vec<String>, lookup: &mut HashMap<String, usize>, tok: &str) -> usize {
        if let Some(&id) = lookup.get(tok) {
            return id;
        }
        let id = tokens.len();
        tokens.push(tok.to_owned());
        lookup.insert(tok.to_owned(), id);
        id
    }

    pub fn intern_row(&mut self, tok: &str) -> usize {
        Self::intern(&mut self.rows, &mut self.row_lookup, tok)
    }

    pub fn intern_col(&mut self, tok: &str) -> usize {
        Self::intern(&mut self.cols, &mut self.col_lookup, tok)
    }

    pub fn row_id(&self, tok: &str) -> Option<usize> {
        self.row_lookup.get(tok).copied()
    }

    pub fn col_id(&self, tok: &str) -> Option<usize> {
        self.col_lookup.get(tok).copied()
    }

    pub fn row_token(&self, id: usize) -> Option<&str> {
        self.rows.get(id).map(String::as_str)
    }

    pub fn col_token(&self, id: usize) -> Option<&str> {
        self.cols.get(id).map(String::as_str)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    /// One line per id: `row<TAB>id<TAB>token` then `col<TAB>id<TAB>token`.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, tok) in self.rows.iter().enumerate() {
            writeln!(w, "row\t{id}\t{tok}")?;
        }
        for (id, tok) in self.cols.iter().enumerate() {
            writeln!(w, "col\t{id}\t{tok}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut map = IdMap::new();
        for (k, line) in reader.lines().enumerate() {
            let lineno = k + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (side, id, tok) = match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(i), Some(t)) => (s, i, t),
                _ => return Err(Error::parse(lineno, "expected side, id and token")),
            };
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad id {id:?}")))?;
            let (tokens, lookup) = match side {
                "row" => (&mut map.rows, &mut map.row_lookup),
                "col" => (&mut map.cols, &mut map.col_lookup),
                other => return Err(Error::parse(lineno, format!("unknown side {other:?}"))),
            };
            if id != tokens.len() {
                return Err(Error::parse(
                    lineno,
                    format!("id {id} out of sequence, expected {}", tokens.len()),
                ));
            }
            if lookup.contains_key(tok) {
                return Err(Error::parse(lineno, format!("token {tok:?} listed twice")));
            }
            Self::intern(tokens, lookup, tok);
        }
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }
}

/// A parsed ratings file: the matrix plus the token map behind its ids.
#[derive(Debug, Clone)]
pub struct Ratings {
    pub matrix: SparseMatrix,
    pub ids: IdMap,
}

/// Parses raw ratings. Tokens become dense 0-based ids in first-seen order;
/// fields past the third are ignored; blank and `#` lines are skipped.
pub fn parse_ratings<R: BufRead>(reader: R, format: RatingFormat, has_header: bool) -> Result<Ratings> {
    let mut ids = IdMap::new();
    let mut entries = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut header_pending = has_header;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields = format.fields(line);
        if fields.len() < 3 {
            return Err(Error::parse(
                lineno,
                format!("expected at least 3 fields, found {}", fields.len()),
            ));
        }
        let (user, item, raw) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        if user.is_empty() || item.is_empty() {
            return Err(Error::parse(lineno, "empty user or item token"));
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::parse(lineno, format!("rating {raw:?} is not numeric")))?;
        if !value.is_finite() {
            return Err(Error::parse(lineno, format!("rating {raw:?} is not finite")));
        }
        let row = ids.intern_row(user);
        let col = ids.intern_col(item);
        if seen.insert((row, col), lineno).is_some() {
            return Err(Error::DuplicateEntry {
                row: user.to_owned(),
                col: item.to_owned(),
                line: lineno,
            });
        }
        entries.push(Entry::new(row, col, value));
    }
    let matrix = SparseMatrix::new(ids.n_rows(), ids.n_cols(), entries)?;
    Ok(Ratings { matrix, ids })
}

pub fn load_ratings(path: &Path, format: RatingFormat, has_header: bool) -> Result<Ratings> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(BufReader::new(file), format, has_header)
}

/// Writes the canonical form: a `# rows=<n> cols=<m> nnz=<k>` header followed
/// by one `row<TAB>col<TAB>value` line per entry.
pub fn write_matrix<W: Write>(matrix: &SparseMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "# rows={} cols={} nnz={}",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.nnz()
    )?;
    for e in matrix.entries() {
        writeln!(w, "{}\t{}\t{}", e.row, e.col, e.value)?;
    }
    Ok(())
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(lineno, "missing `# rows= cols= nnz=` header"))?;
    let (mut rows, mut cols, mut nnz) = (None, None, None);
    for kv in body.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(lineno, format!("bad header field {kv:?}")))?;
        let v: usize = v
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad header value {v:?}")))?;
        match k {
            "rows" => rows = Some(v),
            "cols" => cols = Some(v),
            "nnz" => nnz = Some(v),
            _ => return Err(Error::parse(lineno, format!("unknown header key {k:?}"))),
        }
    }
    match (rows, cols, nnz) {
        (Some(r), Some(c), Some(n)) => Ok((r, c, n)),
        _ => Err(Error::parse(lineno, "header needs rows, cols and nnz")),
    }
}

/// Reads the canonical form written by [`write_matrix`].
pub fn read_matrix<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut header = None;
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((n_rows, n_cols, _)) = header else {
            header = Some(parse_header(&line, lineno)?);
            continue;
        };
        if line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (r, c, v) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(r), Some(c), Some(v), None) => (r, c, v),
            _ => return Err(Error::parse(lineno, "expected row, col and value")),
        };
        let row: usize = r
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad row id {r:?}")))?;
        let col: usize = c
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad col id {c:?}")))?;
        let value: f64 = v
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad value {v:?}")))?;
        if row >= n_rows || col >= n_cols {
            return Err(Error::parse(
                lineno,
                format!("({row}, {col}) outside {n_rows}x{n_cols}"),
            ));
        }
        if !value.is_finite() {
            return Err(Error::parse(lineno, format!("value {v:?} is not finite")));
        }
        if !seen.insert((row, col)) {
            return Err(Error::DuplicateEntry {
                row: row.to_string(),
                col: col.to_string(),
                line: lineno,
            });
        }
        entries.push(Entry::new(row, col, value));
    }
    let (n_rows, n_cols, nnz) = header.ok_or_else(|| Error::parse(0, "empty matrix file"))?;
    if nnz != entries.len() {
        return Err(Error::parse(
            0,
            format!("header declares nnz={nnz} but {} entries follow", entries.len()),
        ));
    }
    SparseMatrix::new(n_rows, n_cols, entries)
}

pub fn save_matrix(matrix: &SparseMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix(matrix, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<SparseMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(BufReader::new(file))
}

/// Reads `row<sep>col` query pairs (tab, comma or whitespace separated) as raw tokens.
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line
            .split(|c: char| c == '\t' || c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        match (parts.next(), parts.next()) {
            (Some(r), Some(c)) => pairs.push((r.to_owned(), c.to_owned())),
            _ => return Err(Error::parse(lineno, "expected a row and a column token")),
        }
    }
    Ok(pairs)
}
