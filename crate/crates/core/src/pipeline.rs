//! Dataset encoding: CSV table → schema → tokens → vocabulary → packed
//! class matrices.
//!
//! Stages, in order:
//!
//! 1. conversion: each column is typed numeric (every non-empty training
//!    cell parses as a finite number) or categorical;
//! 2. preservation: categorical cells are kept verbatim;
//! 3. discretization: numeric cells are z-scored with training statistics
//!    (population std) and rounded half away from zero to `decimals` places;
//! 4. re-encoding: every `"<column>:<value>"` token gets a bit, assigned in
//!    lexicographic token order;
//! 5. anti-contradiction filtering: training records whose token set occurs
//!    under both labels are dropped from both classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bitpack::{ClassTag, PackedMatrix, PackedRow};
use crate::error::{Error, Result};
use crate::Class;

pub const DEFAULT_DECIMALS: u32 = 2;
pub const MAX_DECIMALS: u32 = 15;

/// A CSV file loaded in full: header plus string cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Comma-delimited, RFC 4180 quoting, header row required unless the
    /// input is completely empty.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut records = Vec::new();
        for rec in rdr.records() {
            records.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, records })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows `start..end` with the same header.
    pub fn slice(&self, start: usize, end: usize) -> RawTable {
        RawTable {
            headers: self.headers.clone(),
            records: self.records[start..end].to_vec(),
        }
    }

    pub fn select(&self, rows: &[usize]) -> RawTable {
        RawTable {
            headers: self.headers.clone(),
            records: rows.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.records {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
    }
}

/// How raw label strings map to classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub normal_values: BTreeSet<String>,
    /// When `None`, every value that is not normal counts as attack.
    pub attack_values: Option<BTreeSet<String>>,
}

impl Default for LabelMapping {
    fn default() -> Self {
        Self {
            normal_values: BTreeSet::from(["normal".to_string()]),
            attack_values: None,
        }
    }
}

impl LabelMapping {
    pub fn classify(&self, value: &str) -> Option<Class> {
        if self.normal_values.contains(value) {
            Some(Class::Normal)
        } else {
            match &self.attack_values {
                None => Some(Class::Attack),
                Some(set) if set.contains(value) => Some(Class::Attack),
                Some(_) => None,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric { mean: f64, std: f64 },
    Categorical,
    Label,
    Ignored,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Typed columns with the training statistics needed to tokenize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
    pub labels: LabelMapping,
    pub decimals: u32,
    /// Always `"population"`: std divides by `n`.
    pub std_convention: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaOptions {
    pub label_column: String,
    pub labels: LabelMapping,
    pub decimals: u32,
    /// Columns excluded from tokenization, e.g. a difficulty score.
    pub ignore_columns: Vec<String>,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            labels: LabelMapping::default(),
            decimals: DEFAULT_DECIMALS,
            ignore_columns: Vec::new(),
        }
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Types each column and computes z-score statistics from `table`, which
/// must hold training rows only.
pub fn infer_schema(table: &RawTable, options: &SchemaOptions) -> Result<DatasetSchema> {
    if options.decimals > MAX_DECIMALS {
        return Err(Error::Config(format!(
            "decimals must be at most {MAX_DECIMALS}, got {}",
            options.decimals
        )));
    }
    let label_idx = table
        .headers
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| {
            Error::Config(format!(
                "label column `{}` not found (columns: {})",
                options.label_column,
                table.headers.join(", ")
            ))
        })?;
    for ignored in &options.ignore_columns {
        if !table.headers.contains(ignored) {
            return Err(Error::Config(format!("ignored column `{ignored}` not found")));
        }
        if *ignored == options.label_column {
            return Err(Error::Config("the label column cannot be ignored".into()));
        }
    }
    if table.is_empty() {
        return Err(Error::Data("training table has no rows".into()));
    }
    for (i, rec) in table.records.iter().enumerate() {
        let value = &rec[label_idx];
        if options.labels.classify(value).is_none() {
            return Err(Error::Data(format!(
                "row {}: label `{value}` is neither a normal nor an attack value",
                i + 1
            )));
        }
    }

    let columns = table
        .headers
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let kind = if j == label_idx {
                ColumnKind::Label
            } else if options.ignore_columns.contains(name) {
                ColumnKind::Ignored
            } else {
                column_kind(table.records.iter().map(|r| r[j].as_str()))
            };
            ColumnSpec {
                name: name.clone(),
                kind,
            }
        })
        .collect();

    Ok(DatasetSchema {
        columns,
        label_column: options.label_column.clone(),
        labels: options.labels.clone(),
        decimals: options.decimals,
        std_convention: "population".into(),
    })
}

fn column_kind<'a>(cells: impl Iterator<Item = &'a str>) -> ColumnKind {
    let mut values = Vec::new();
    for cell in cells {
        if cell.is_empty() {
            continue;
        }
        match parse_number(cell) {
            Some(v) => values.push(v),
            None => return ColumnKind::Categorical,
        }
    }
    if values.is_empty() {
        return ColumnKind::Categorical;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    ColumnKind::Numeric {
        mean,
        std: var.sqrt(),
    }
}

/// Fixed-point rendering of `value` rounded half away from zero, with
/// negative zero printed as zero.
pub fn format_rounded(value: f64, decimals: u32) -> String {
    let scale = 10f64.powi(decimals as i32);
    let scaled = (value * scale).round();
    if scaled.abs() >= 9.0e15 {
        let s = format!("{:.*}", decimals as usize, value);
        return s;
    }
    let units = scaled as i64;
    let sign = if units < 0 { "-" } else { "" };
    let abs = units.unsigned_abs();
    if decimals == 0 {
        return format!("{sign}{abs}");
    }
    let div = 10u64.pow(decimals);
    format!(
        "{sign}{}.{:0width$}",
        abs / div,
        abs % div,
        width = decimals as usize
    )
}

impl DatasetSchema {
    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("schema always has a label column")
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// For each schema column, the position of the same-named column in
    /// `headers`. The label column may be absent; any other difference is
    /// a mismatch.
    pub fn column_map(&self, headers: &[String]) -> Result<Vec<Option<usize>>> {
        let mut missing = Vec::new();
        let mut map = Vec::with_capacity(self.columns.len());
        for c in &self.columns {
            let pos = headers.iter().position(|h| *h == c.name);
            if pos.is_none() && c.kind != ColumnKind::Label {
                missing.push(c.name.as_str());
            }
            map.push(pos);
        }
        let extra: Vec<&str> = headers
            .iter()
            .filter(|h| !self.columns.iter().any(|c| c.name == **h))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} columns, found {}; missing [{}]; unexpected [{}]",
                self.columns.len(),
                headers.len(),
                missing.join(", "),
                extra.join(", ")
            )));
        }
        Ok(map)
    }

    fn align<'a>(&self, record: &'a [String], map: &[Option<usize>]) -> Vec<&'a str> {
        map.iter()
            .map(|m| m.map_or("", |i| record[i].as_str()))
            .collect()
    }
}

/// One token per feature column; the label and ignored columns contribute
/// nothing. `row_number` (1-based) only labels errors. Cells are in schema
/// column order.
pub fn tokenize_row(row: &[&str], schema: &DatasetSchema, row_number: usize) -> Result<Vec<String>> {
    if row.len() != schema.columns.len() {
        return Err(Error::SchemaMismatch(format!(
            "row {row_number} has {} cells, schema has {} columns",
            row.len(),
            schema.columns.len()
        )));
    }
    let mut tokens = Vec::with_capacity(row.len());
    for (j, (cell, col)) in row.iter().zip(&schema.columns).enumerate() {
        match col.kind {
            ColumnKind::Label | ColumnKind::Ignored => {}
            ColumnKind::Categorical => tokens.push(format!("{j}:{cell}")),
            ColumnKind::Numeric { .. } if cell.is_empty() => tokens.push(format!("{j}:")),
            ColumnKind::Numeric { mean, std } => {
                let v = parse_number(cell).ok_or_else(|| Error::Encoding {
                    row: row_number,
                    column: col.name.clone(),
                    value: cell.to_string(),
                })?;
                let z = if std > 0.0 { (v - mean) / std } else { 0.0 };
                tokens.push(format!("{j}:{}", format_rounded(z, schema.decimals)));
            }
        }
    }
    Ok(tokens)
}

/// Bijection between tokens and bit positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenVocabulary {
    bit_to_token: Vec<String>,
    token_to_bit: HashMap<String, usize>,
}

fn valid_token(token: &str) -> bool {
    match token.split_once(':') {
        Some((col, _)) => !col.is_empty() && col.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    }
}

impl TokenVocabulary {
    /// Takes tokens in bit order; they must be distinct and `"<column>:<value>"`-shaped.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut token_to_bit = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if !valid_token(t) {
                return Err(Error::Data(format!("malformed token `{t}`")));
            }
            if token_to_bit.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate token `{t}`")));
            }
        }
        Ok(Self {
            bit_to_token: tokens,
            token_to_bit,
        })
    }

    /// Number of tokens `L`.
    pub fn len(&self) -> usize {
        self.bit_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bit_to_token.is_empty()
    }

    pub fn bit(&self, token: &str) -> Option<usize> {
        self.token_to_bit.get(token).copied()
    }

    pub fn token(&self, bit: usize) -> Option<&str> {
        self.bit_to_token.get(bit).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.bit_to_token
    }

    /// Packs a token set, silently dropping tokens not in the vocabulary.
    pub fn pack<S: AsRef<str>>(&self, tokens: &[S]) -> PackedRow {
        let bits = tokens.iter().filter_map(|t| self.bit(t.as_ref()));
        PackedRow::pack(bits, self.len()).expect("vocabulary bits are in range")
    }

    pub fn tokens_of(&self, row: &PackedRow) -> Result<Vec<String>> {
        row.unpack()
            .into_iter()
            .map(|b| {
                self.token(b)
                    .map(str::to_string)
                    .ok_or(Error::IndexOutOfRange {
                        index: b,
                        len: self.len(),
                    })
            })
            .collect()
    }
}

/// Assigns bits to every distinct token in lexicographic order.
pub fn build_vocabulary<I, T, S>(token_sets: I) -> TokenVocabulary
where
    I: IntoIterator<Item = T>,
    T: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let distinct: BTreeSet<String> = token_sets
        .into_iter()
        .flat_map(|set| set.into_iter().map(|t| t.as_ref().to_string()))
        .collect();
    TokenVocabulary::from_tokens(distinct.into_iter().collect())
        .expect("distinct tokens in sorted order")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    /// Input positions that were dropped.
    pub removed: Vec<usize>,
    /// Token sets seen under both labels, sorted.
    pub contradicted: Vec<Vec<String>>,
}

/// Drops every instance whose token set appears under both classes.
/// Returns the positions kept, in input order. A class may end up empty;
/// [`encode_dataset`] treats that as fatal.
pub fn anti_contradiction_filter<S: AsRef<str>>(
    instances: &[(Vec<S>, Class)],
) -> (Vec<usize>, FilterReport) {
    let signature = |tokens: &[S]| -> Vec<String> {
        let set: BTreeSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
        set.into_iter().map(str::to_string).collect()
    };
    let mut seen: BTreeMap<Vec<String>, (bool, bool)> = BTreeMap::new();
    let sigs: Vec<Vec<String>> = instances.iter().map(|(t, _)| signature(t)).collect();
    for (sig, (_, class)) in sigs.iter().zip(instances) {
        let e = seen.entry(sig.clone()).or_default();
        match class {
            Class::Attack => e.0 = true,
            Class::Normal => e.1 = true,
        }
    }
    let contradicted: BTreeSet<&Vec<String>> = seen
        .iter()
        .filter(|(_, &(a, n))| a && n)
        .map(|(s, _)| s)
        .collect();
    let (removed, kept): (Vec<usize>, Vec<usize>) =
        (0..sigs.len()).partition(|&i| contradicted.contains(&sigs[i]));
    let report = FilterReport {
        removed,
        contradicted: contradicted.into_iter().cloned().collect(),
    };
    (kept, report)
}

/// Training data packed per class.
#[derive(Clone, Debug)]
pub struct EncodedDataset {
    pub attack: PackedMatrix,
    pub normal: PackedMatrix,
    pub vocabulary: TokenVocabulary,
    /// Source row of each packed attack row.
    pub attack_rows: Vec<usize>,
    pub normal_rows: Vec<usize>,
    /// Present only when the vocabulary was built here (training).
    pub filter: Option<FilterReport>,
}

/// Test-time encoding in file order.
#[derive(Clone, Debug)]
pub struct EncodedBatch {
    pub rows: PackedMatrix,
    /// Truth labels when the table carries the label column.
    pub labels: Option<Vec<Class>>,
}

/// Per-row tokens, plus labels when the label column is present.
type TokenizedTable = (Vec<Vec<String>>, Option<Vec<Class>>);

fn tokenize_table(table: &RawTable, schema: &DatasetSchema) -> Result<TokenizedTable> {
    let map = schema.column_map(&table.headers)?;
    let label_pos = map[schema.label_index()];
    let mut tokens = Vec::with_capacity(table.len());
    let mut labels = label_pos.map(|_| Vec::with_capacity(table.len()));
    for (i, rec) in table.records.iter().enumerate() {
        let cells = schema.align(rec, &map);
        tokens.push(tokenize_row(&cells, schema, i + 1)?);
        if let (Some(pos), Some(labels)) = (label_pos, labels.as_mut()) {
            let raw = &rec[pos];
            let class = schema.labels.classify(raw).ok_or_else(|| {
                Error::Data(format!(
                    "row {}: label `{raw}` is neither a normal nor an attack value",
                    i + 1
                ))
            })?;
            labels.push(class);
        }
    }
    Ok((tokens, labels))
}

/// Encodes a labeled table into class-contiguous matrices.
///
/// Without a vocabulary this is training: the vocabulary is built from the
/// table and contradictory records are filtered out. With one, tokens it
/// does not know are dropped and no filtering happens.
pub fn encode_dataset(
    table: &RawTable,
    schema: &DatasetSchema,
    vocabulary: Option<&TokenVocabulary>,
) -> Result<EncodedDataset> {
    let (tokens, labels) = tokenize_table(table, schema)?;
    let labels = labels.ok_or_else(|| {
        Error::SchemaMismatch(format!("label column `{}` missing", schema.label_column))
    })?;
    let (vocabulary, kept, filter) = match vocabulary {
        Some(v) => (v.clone(), (0..tokens.len()).collect::<Vec<_>>(), None),
        None => {
            let vocabulary = build_vocabulary(&tokens);
            let instances: Vec<(Vec<String>, Class)> =
                tokens.iter().cloned().zip(labels.iter().copied()).collect();
            let (kept, report) = anti_contradiction_filter(&instances);
            for class in [Class::Attack, Class::Normal] {
                let had = labels.contains(&class);
                if had && !kept.iter().any(|&i| labels[i] == class) {
                    return Err(Error::FilterEmptiedClass(class.as_str()));
                }
            }
            (vocabulary, kept, Some(report))
        }
    };
    if vocabulary.is_empty() {
        return Err(Error::Data("no feature tokens: the table has no feature columns".into()));
    }
    let len = vocabulary.len();
    let mut attack = PackedMatrix::empty(len, ClassTag::Attack);
    let mut normal = PackedMatrix::empty(len, ClassTag::Normal);
    let mut attack_rows = Vec::new();
    let mut normal_rows = Vec::new();
    for i in kept {
        let row = vocabulary.pack(&tokens[i]);
        match labels[i] {
            Class::Attack => {
                attack.push(&row)?;
                attack_rows.push(i);
            }
            Class::Normal => {
                normal.push(&row)?;
                normal_rows.push(i);
            }
        }
    }
    Ok(EncodedDataset {
        attack,
        normal,
        vocabulary,
        attack_rows,
        normal_rows,
        filter,
    })
}

/// Encodes rows in file order against a trained vocabulary.
pub fn encode_rows(
    table: &RawTable,
    schema: &DatasetSchema,
    vocabulary: &TokenVocabulary,
) -> Result<EncodedBatch> {
    if table.headers.is_empty() && table.records.is_empty() {
        return Ok(EncodedBatch {
            rows: PackedMatrix::empty(vocabulary.len(), ClassTag::Unlabeled),
            labels: None,
        });
    }
    let (tokens, labels) = tokenize_table(table, schema)?;
    let mut rows = PackedMatrix::with_capacity(vocabulary.len(), ClassTag::Unlabeled, tokens.len());
    for t in &tokens {
        rows.push(&vocabulary.pack(t))?;
    }
    Ok(EncodedBatch { rows, labels })
}
