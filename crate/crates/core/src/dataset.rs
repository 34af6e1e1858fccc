//! Flow-record datasets: CSV loading, gap filling, categorical encoding,
//! stratified splitting and label counts.
//!
//! Loading produces a [`RawTable`] whose columns are typed as numeric or
//! categorical. After [`impute_missing`] and [`encode_categoricals`] the
//! table becomes a purely numeric [`Dataset`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BENIGN: u8 = 0;
pub const DDOS: u8 = 1;

/// Numeric feature matrix with binary labels (0 benign, 1 DDoS).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<u8>,
    /// Free-text origin tag (source path, generator seed, processing steps).
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        x: Matrix,
        y: Vec<u8>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if x.cols() != feature_names.len() {
            return Err(Error::invalid(format!(
                "{} feature columns but {} names",
                x.cols(),
                feature_names.len()
            )));
        }
        if let Some(i) = y.iter().position(|&l| l > 1) {
            return Err(Error::Row {
                row: i + 1,
                message: format!("label {} outside {{0,1}}", y[i]),
            });
        }
        if let Some(p) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Row {
                row: p / x.cols().max(1) + 1,
                message: "non-finite feature value".into(),
            });
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> Dataset {
        Dataset {
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            x: self.x.select_cols(cols),
            y: self.y.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn label_distribution(&self) -> LabelDistribution {
        LabelDistribution::of(&self.y)
    }

    /// Indices of rows carrying `label`, ascending.
    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        self.y
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    pub fn with_provenance_note(mut self, note: &str) -> Self {
        if self.provenance.is_empty() {
            self.provenance = note.to_string();
        } else {
            self.provenance = format!("{}; {note}", self.provenance);
        }
        self
    }

    /// Write as CSV with a header row; `categorical` maps column index to
    /// the tokens that replace integer codes on output.
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        label_column: &str,
        categorical: &BTreeMap<usize, Vec<String>>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (row, &label) in self.x.iter_rows().zip(&self.y) {
            record.clear();
            for (j, &v) in row.iter().enumerate() {
                match categorical.get(&j) {
                    Some(tokens) => {
                        let code = v as usize;
                        let tok = tokens
                            .get(code)
                            .ok_or_else(|| Error::invalid(format!("code {v} has no token")))?;
                        record.push(tok.clone());
                    }
                    None => record.push(v.to_string()),
                }
            }
            record.push(label.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub benign_count: usize,
    pub ddos_count: usize,
    pub total: usize,
}

impl LabelDistribution {
    pub fn of(labels: &[u8]) -> Self {
        let ddos = labels.iter().filter(|&&l| l == DDOS).count();
        LabelDistribution {
            benign_count: labels.len() - ddos,
            ddos_count: ddos,
            total: labels.len(),
        }
    }

    pub fn count(&self, label: u8) -> usize {
        if label == DDOS {
            self.ddos_count
        } else {
            self.benign_count
        }
    }
}

pub fn label_distribution(ds: &Dataset) -> LabelDistribution {
    ds.label_distribution()
}

// ---------------------------------------------------------------------------
// Raw (pre-encoding) tables
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl RawColumn {
    pub fn len(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.len(),
            RawColumn::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            RawColumn::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RawColumn::Numeric(_) => "numeric",
            RawColumn::Categorical(_) => "categorical",
        }
    }
}

/// Loaded CSV before cleaning: typed columns that may contain gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub columns: Vec<RawColumn>,
    pub y: Vec<u8>,
    pub provenance: String,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn label_distribution(&self) -> LabelDistribution {
        LabelDistribution::of(&self.y)
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(RawColumn::missing_count).sum()
    }
}

fn is_missing_token(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null" | "none"
    )
}

fn parse_label(s: &str) -> Option<u8> {
    let v: f64 = s.trim().parse().ok()?;
    if v == 0.0 {
        Some(BENIGN)
    } else if v == 1.0 {
        Some(DDOS)
    } else {
        None
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column, &path.display().to_string())
}

/// Parse CSV from any reader. A column is numeric when every non-missing
/// cell parses to a finite number, categorical otherwise.
pub fn read_csv<R: Read>(reader: R, label_column: &str, provenance: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_positions: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| (h == label_column).then_some(i))
        .collect();
    let label_pos = match label_positions.as_slice() {
        [] => {
            return Err(Error::Schema(format!(
                "label column `{label_column}` not found in header"
            )))
        }
        [p] => *p,
        _ => {
            return Err(Error::Schema(format!(
                "label column `{label_column}` appears {} times",
                label_positions.len()
            )))
        }
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_pos)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); feature_names.len()];
    let mut y = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let raw_label = rec.get(label_pos).unwrap_or("");
        let label = parse_label(raw_label).ok_or_else(|| Error::Row {
            row,
            message: format!("label `{raw_label}` outside {{0,1}}"),
        })?;
        y.push(label);
        let mut j = 0;
        for (i, field) in rec.iter().enumerate() {
            if i == label_pos {
                continue;
            }
            cells[j].push((!is_missing_token(field)).then(|| field.to_string()));
            j += 1;
        }
    }

    let columns = cells.into_iter().map(type_column).collect();
    Ok(RawTable {
        feature_names,
        columns,
        y,
        provenance: provenance.to_string(),
    })
}

fn type_column(cells: Vec<Option<String>>) -> RawColumn {
    let parsed: Option<Vec<Option<f64>>> = cells
        .iter()
        .map(|c| match c {
            None => Some(None),
            Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
        })
        .collect();
    match parsed {
        Some(nums) => RawColumn::Numeric(nums),
        None => RawColumn::Categorical(cells),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Most frequent token; ties go to the lexicographically smallest.
fn mode<'a>(values: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (tok, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((tok, c));
        }
    }
    best.map(|(t, _)| t.to_string())
}

/// Fill numeric gaps with the column median and categorical gaps with the
/// column mode.
pub fn impute_missing(table: &RawTable) -> Result<RawTable> {
    let mut out = table.clone();
    if table.is_empty() {
        return Ok(out);
    }
    for (name, col) in out.feature_names.iter().zip(out.columns.iter_mut()) {
        if col.missing_count() == 0 {
            continue;
        }
        if col.missing_count() == col.len() {
            return Err(Error::Schema(format!(
                "column `{name}` has no values; cannot impute"
            )));
        }
        match col {
            RawColumn::Numeric(v) => {
                let mut present: Vec<f64> = v.iter().flatten().copied().collect();
                let fill = median(&mut present);
                v.iter_mut().filter(|c| c.is_none()).for_each(|c| *c = Some(fill));
            }
            RawColumn::Categorical(v) => {
                let fill = mode(v.iter().flatten().map(String::as_str))
                    .expect("column has at least one value");
                v.iter_mut()
                    .filter(|c| c.is_none())
                    .for_each(|c| *c = Some(fill.clone()));
            }
        }
    }
    Ok(out)
}

/// Ordinal codes per categorical column, in order of first appearance.
/// Serialized as a JSON object keyed by column name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryEncoder {
    pub columns: BTreeMap<String, Vec<String>>,
}

impl CategoryEncoder {
    /// Code of `token` in `column`; unseen tokens map to the number of known
    /// categories.
    pub fn code(&self, column: &str, token: &str) -> Option<usize> {
        let cats = self.columns.get(column)?;
        Some(cats.iter().position(|c| c == token).unwrap_or(cats.len()))
    }

    pub fn decode(&self, column: &str, code: usize) -> Option<&str> {
        self.columns.get(column)?.get(code).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Encode a gap-free table with this mapping.
    pub fn apply(&self, table: &RawTable) -> Result<Dataset> {
        let n = table.len();
        let d = table.n_features();
        let mut x = Matrix::zeros(n, d);
        for (j, (name, col)) in table.feature_names.iter().zip(&table.columns).enumerate() {
            let cats = self.columns.get(name);
            match (col, cats) {
                (RawColumn::Numeric(v), None) => {
                    for (i, c) in v.iter().enumerate() {
                        x.set(i, j, c.ok_or_else(|| missing_err(name, i))?);
                    }
                }
                (RawColumn::Categorical(v), Some(cats)) => {
                    for (i, c) in v.iter().enumerate() {
                        let tok = c.as_deref().ok_or_else(|| missing_err(name, i))?;
                        x.set(i, j, code_of(cats, tok) as f64);
                    }
                }
                (RawColumn::Numeric(v), Some(cats)) => {
                    // numeric-looking tokens in a column that was categorical at fit time
                    for (i, c) in v.iter().enumerate() {
                        let tok = c.ok_or_else(|| missing_err(name, i))?.to_string();
                        x.set(i, j, code_of(cats, &tok) as f64);
                    }
                }
                (RawColumn::Categorical(_), None) => {
                    return Err(Error::Schema(format!(
                        "column `{name}` is categorical but has no stored mapping"
                    )))
                }
            }
        }
        Dataset::new(
            table.feature_names.clone(),
            x,
            table.y.clone(),
            table.provenance.clone(),
        )
    }
}

fn code_of(cats: &[String], tok: &str) -> usize {
    cats.iter().position(|c| c == tok).unwrap_or(cats.len())
}

fn missing_err(column: &str, row: usize) -> Error {
    Error::Row {
        row: row + 1,
        message: format!("missing value in `{column}`; impute first"),
    }
}

/// Replace each categorical column by first-appearance integer codes.
/// Returns the numeric dataset together with the mapping for reuse on
/// held-out data.
pub fn encode_categoricals(table: &RawTable) -> Result<(Dataset, CategoryEncoder)> {
    let mut enc = CategoryEncoder::default();
    for (name, col) in table.feature_names.iter().zip(&table.columns) {
        if let RawColumn::Categorical(v) = col {
            let mut seen: HashMap<&str, ()> = HashMap::new();
            let mut cats = Vec::new();
            for (i, c) in v.iter().enumerate() {
                let tok = c.as_deref().ok_or_else(|| missing_err(name, i))?;
                if seen.insert(tok, ()).is_none() {
                    cats.push(tok.to_string());
                }
            }
            enc.columns.insert(name.clone(), cats);
        }
    }
    let mut ds = enc.apply(table)?;
    if !enc.is_empty() {
        let cols: Vec<&str> = enc.columns.keys().map(String::as_str).collect();
        ds = ds.with_provenance_note(&format!("ordinal-encoded [{}]", cols.join(",")));
    }
    Ok((ds, enc))
}

/// Impute gaps, then ordinal-encode categorical columns.
pub fn clean_and_encode(table: &RawTable) -> Result<(Dataset, CategoryEncoder)> {
    encode_categoricals(&impute_missing(table)?)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub ratio: f64,
    pub seed: u64,
    /// Row indices into the original dataset, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl SplitPair {
    /// SHA-256 over the train and test index lists.
    pub fn split_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"train");
        for &i in &self.train_indices {
            h.update((i as u64).to_le_bytes());
        }
        h.update(b"test");
        for &i in &self.test_indices {
            h.update((i as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Per class, `floor(ratio * count)` randomly chosen rows go to train and
/// the rest to test.
pub fn stratified_split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} not in (0,1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for label in [BENIGN, DDOS] {
        let mut idx = ds.class_indices(label);
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "class {label} has {} records; need at least 2 to stratify",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = (ratio * idx.len() as f64).floor() as usize;
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitPair {
        train: ds
            .subset(&train_idx)
            .with_provenance_note(&format!("train split ratio={ratio} seed={seed}")),
        test: ds
            .subset(&test_idx)
            .with_provenance_note(&format!("test split ratio={ratio} seed={seed}")),
        ratio,
        seed,
        train_indices: train_idx,
        test_indices: test_idx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(csv: &str) -> RawTable {
        read_csv(csv.as_bytes(), "label", "inline").unwrap()
    }

    fn toy(labels: &[u8]) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
        Dataset::new(
            vec!["f".into()],
            Matrix::from_rows(&rows).unwrap(),
            labels.to_vec(),
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn load_three_rows() {
        let t = raw("a,b,label\n1,x,0\n2,y,1\n3,x,0\n");
        assert_eq!(t.len(), 3);
        assert_eq!(t.feature_names, vec!["a", "b"]);
        assert!(matches!(t.columns[0], RawColumn::Numeric(_)));
        assert!(matches!(t.columns[1], RawColumn::Categorical(_)));
        assert_eq!(
            t.label_distribution(),
            LabelDistribution {
                benign_count: 2,
                ddos_count: 1,
                total: 3
            }
        );
    }

    #[test]
    fn header_only_is_empty() {
        let t = raw("a,b,label\n");
        assert_eq!(t.len(), 0);
        assert_eq!(t.n_features(), 2);
        assert_eq!(t.label_distribution(), LabelDistribution::default());
    }

    #[test]
    fn label_errors() {
        let err = read_csv("a,label\n1,0\n2,3\n".as_bytes(), "label", "x").unwrap_err();
        match err {
            Error::Row { row, .. } => assert_eq!(row, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            read_csv("a,b\n1,0\n".as_bytes(), "label", "x"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            read_csv("label,a,label\n1,0,1\n".as_bytes(), "label", "x"),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "label"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn impute_numeric_median() {
        let t = raw("a,label\n1,0\n,1\n3,0\n");
        let t = impute_missing(&t).unwrap();
        assert_eq!(
            t.columns[0],
            RawColumn::Numeric(vec![Some(1.0), Some(2.0), Some(3.0)])
        );
    }

    #[test]
    fn impute_categorical_mode() {
        let t = raw("p,label\ntcp,0\n,1\ntcp,0\nudp,1\n");
        let t = impute_missing(&t).unwrap();
        let RawColumn::Categorical(v) = &t.columns[0] else {
            panic!("expected categorical")
        };
        assert_eq!(v[1].as_deref(), Some("tcp"));
    }

    #[test]
    fn impute_mode_tie_is_lexicographic() {
        let t = raw("p,label\nudp,0\ntcp,1\n,0\n");
        let t = impute_missing(&t).unwrap();
        let RawColumn::Categorical(v) = &t.columns[0] else {
            panic!()
        };
        assert_eq!(v[2].as_deref(), Some("tcp"));
    }

    #[test]
    fn impute_identity_and_all_missing() {
        let t = raw("a,label\n1,0\n2,1\n");
        assert_eq!(impute_missing(&t).unwrap(), t);
        let t = raw("a,b,label\n,1,0\nNA,2,1\n");
        assert!(impute_missing(&t).is_err());
    }

    #[test]
    fn encode_first_appearance() {
        let t = raw("p,label\ntcp,0\nudp,1\ntcp,0\n");
        let (ds, enc) = encode_categoricals(&t).unwrap();
        assert_eq!(ds.x.column(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(enc.decode("p", 1), Some("udp"));

        let test = raw("p,label\nicmp,1\nudp,0\n");
        let tds = enc.apply(&test).unwrap();
        assert_eq!(tds.x.column(0), vec![2.0, 1.0]);
    }

    #[test]
    fn encode_all_numeric_unchanged() {
        let t = raw("a,b,label\n1,2,0\n3,4,1\n");
        let (ds, enc) = encode_categoricals(&t).unwrap();
        assert!(enc.is_empty());
        assert_eq!(ds.x.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn encoder_sidecar_keyed_by_column() {
        let t = raw("p,label\ntcp,0\nudp,1\n");
        let (_, enc) = encode_categoricals(&t).unwrap();
        let json = serde_json::to_string(&enc).unwrap();
        assert_eq!(json, r#"{"p":["tcp","udp"]}"#);
    }

    #[test]
    fn split_ten_rows() {
        let ds = toy(&[0, 0, 0, 0, 0, 0, 1, 1, 1, 1]);
        let s = stratified_split(&ds, 0.8, 7).unwrap();
        assert_eq!(s.train.len(), 7);
        assert_eq!(s.test.len(), 3);
        assert_eq!(s.train.label_distribution().benign_count, 4);
        assert_eq!(s.train.label_distribution().ddos_count, 3);
    }

    #[test]
    fn split_half_and_errors() {
        let ds = toy(&[0, 1, 0, 1]);
        let s = stratified_split(&ds, 0.5, 1).unwrap();
        assert_eq!(s.train.label_distribution().benign_count, 1);
        assert_eq!(s.train.label_distribution().ddos_count, 1);
        assert!(stratified_split(&toy(&[0, 0, 1]), 0.5, 1).is_err());
        assert!(stratified_split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn split_table_i_counts() {
        let mut labels = vec![0u8; 63_561];
        labels.extend(std::iter::repeat_n(1u8, 40_784));
        let ds = toy(&labels);
        let s = stratified_split(&ds, 0.8, 0).unwrap();
        assert_eq!(s.train.len(), 83_475);
        assert_eq!(s.test.len(), 20_870);
        assert_eq!(s.train.label_distribution().benign_count, 50_848);
        assert_eq!(s.train.label_distribution().ddos_count, 32_627);
    }

    #[test]
    fn label_distribution_counts() {
        assert_eq!(
            LabelDistribution::of(&[1, 1, 0]),
            LabelDistribution {
                benign_count: 1,
                ddos_count: 2,
                total: 3
            }
        );
        assert_eq!(LabelDistribution::of(&[]), LabelDistribution::default());
    }
}
