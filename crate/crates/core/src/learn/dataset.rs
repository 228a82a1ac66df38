use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Binary,
    /// Small integer codes; copied rather than interpolated by SMOTE.
    Categorical,
}

impl ColumnKind {
    pub fn name(self) -> &'static str {
        match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Binary => "binary",
            ColumnKind::Categorical => "categorical",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(ColumnKind::Continuous),
            "binary" => Some(ColumnKind::Binary),
            "categorical" => Some(ColumnKind::Categorical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column { name: name.into(), kind }
    }
}

/// Stable identifier of a column layout.
pub fn schema_hash(columns: &[Column]) -> String {
    let mut h = Sha256::new();
    for c in columns {
        h.update(c.name.as_bytes());
        h.update(b":");
        h.update(c.kind.name().as_bytes());
        h.update(b";");
    }
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a row came from. Observed ids index the dataset the rows were first
/// loaded into and survive subsetting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RowOrigin {
    Observed(usize),
    Synthetic { parent: usize, neighbor: usize, u: f64 },
}

impl RowOrigin {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, RowOrigin::Synthetic { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<Column>,
    values: Vec<f64>,
    pub labels: Vec<u8>,
    pub origins: Vec<RowOrigin>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Parse(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        let mut values = Vec::with_capacity(rows.len() * columns.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "row {i} has {} values, schema has {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            values.extend(row);
        }
        let n = labels.len();
        let data = Dataset {
            columns,
            values,
            labels,
            origins: (0..n).map(RowOrigin::Observed).collect(),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn empty(columns: Vec<Column>) -> Self {
        Dataset {
            columns,
            values: Vec::new(),
            labels: Vec::new(),
            origins: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(i) = self.labels.iter().position(|&l| l > 1) {
            return Err(Error::Parse(format!("row {i}: label must be 0 or 1")));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "row {}: non-finite feature value",
                i / self.columns.len().max(1)
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols().max(1)).take(self.n_rows())
    }

    pub fn column_values(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn push(&mut self, row: &[f64], label: u8, origin: RowOrigin) {
        debug_assert_eq!(row.len(), self.n_cols());
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.origins.push(origin);
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut out = Dataset::empty(self.columns.clone());
        out.values.reserve(idx.len() * self.n_cols());
        for &i in idx {
            out.push(self.row(i), self.labels[i], self.origins[i]);
        }
        out
    }

    pub fn schema_hash(&self) -> String {
        schema_hash(&self.columns)
    }

    /// (negatives, positives)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.n_rows() - pos, pos)
    }

    pub fn positive_rate(&self) -> f64 {
        if self.n_rows() == 0 {
            0.0
        } else {
            self.class_counts().1 as f64 / self.n_rows() as f64
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

/// Identifies the observation a row was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowKey {
    pub vehicle_id: String,
    pub t: f64,
}

/// A dataset plus row keys, as exchanged in CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub keys: Vec<RowKey>,
    pub data: Dataset,
}

impl LabeledTable {
    pub fn empty(columns: Vec<Column>) -> Self {
        LabeledTable {
            keys: Vec::new(),
            data: Dataset::empty(columns),
        }
    }

    pub fn push(&mut self, key: RowKey, row: &[f64], label: u8) {
        let id = self.data.n_rows();
        self.keys.push(key);
        self.data.push(row, label, RowOrigin::Observed(id));
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledTable {
        LabeledTable {
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            data: self.data.subset(idx),
        }
    }

    /// Splits rows at the midpoint of the covered time span: earlier rows
    /// train, later rows evaluate.
    pub fn temporal_split(&self) -> (LabeledTable, LabeledTable) {
        let (lo, hi) = self
            .keys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(k.t), hi.max(k.t)));
        let mid = 0.5 * (lo + hi);
        let (a, b): (Vec<usize>, Vec<usize>) = (0..self.keys.len()).partition(|&i| self.keys[i].t < mid);
        (self.subset(&a), self.subset(&b))
    }

    /// CSV with comment lines (`#`), then a header `vehicle_id,t,<features>,label`.
    /// Comments lacking the `#` marker get one.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments.iter().flat_map(|c| c.lines()) {
            let c = c.trim_end();
            if c.starts_with('#') {
                writeln!(w, "{c}")?;
            } else {
                writeln!(w, "# {c}")?;
            }
        }
        let kinds: Vec<&str> = self.data.columns.iter().map(|c| c.kind.name()).collect();
        writeln!(w, "# kinds: {}", kinds.join(","))?;
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["vehicle_id".to_string(), "t".to_string()];
        header.extend(self.data.columns.iter().map(|c| c.name.clone()));
        header.push("label".into());
        wr.write_record(&header)?;
        for (i, key) in self.keys.iter().enumerate() {
            let mut rec = vec![key.vehicle_id.clone(), fmt_num(key.t)];
            rec.extend(self.data.row(i).iter().map(|&v| fmt_num(v)));
            rec.push(self.data.labels[i].to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<LabeledTable> {
        let mut reader = BufReader::new(r);
        let mut kinds: Option<Vec<ColumnKind>> = None;
        let mut body = String::new();
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(list) = comment.trim().strip_prefix("kinds:") {
                    let parsed: Option<Vec<ColumnKind>> = list.trim().split(',').map(ColumnKind::parse).collect();
                    kinds = Some(parsed.ok_or_else(|| Error::Parse("bad kinds comment".into()))?);
                }
                continue;
            }
            body.push_str(&line);
            reader.read_to_string(&mut body)?;
            break;
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd.headers()?.clone();
        let n = header.len();
        if n < 3 || &header[0] != "vehicle_id" || &header[1] != "t" || &header[n - 1] != "label" {
            return Err(Error::Parse("CSV header must be vehicle_id,t,<features...>,label".into()));
        }
        let names: Vec<&str> = header.iter().skip(2).take(n - 3).collect();
        let kinds = kinds.unwrap_or_else(|| vec![ColumnKind::Continuous; names.len()]);
        if kinds.len() != names.len() {
            return Err(Error::Parse("kinds comment does not match header".into()));
        }
        let columns: Vec<Column> = names.iter().zip(kinds).map(|(n, k)| Column::new(*n, k)).collect();
        let mut table = LabeledTable::empty(columns);
        let mut row = Vec::with_capacity(n - 3);
        for (lineno, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("data row {}: bad number {s:?}", lineno + 1)))
            };
            row.clear();
            for j in 2..n - 1 {
                row.push(parse(&rec[j])?);
            }
            let label: u8 = rec[n - 1]
                .parse()
                .map_err(|_| Error::Parse(format!("data row {}: bad label", lineno + 1)))?;
            let key = RowKey {
                vehicle_id: rec[0].to_string(),
                t: parse(&rec[1])?,
            };
            table.push(key, &row, label);
        }
        table.data.validate()?;
        Ok(table)
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledTable {
        let mut t = LabeledTable::empty(vec![
            Column::new("a", ColumnKind::Continuous),
            Column::new("b", ColumnKind::Binary),
        ]);
        t.push(RowKey { vehicle_id: "v1".into(), t: 0.5 }, &[0.1 + 0.2, 1.0], 1);
        t.push(RowKey { vehicle_id: "v2".into(), t: 2.0 }, &[-3.25e-7, 0.0], 0);
        t
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &["# hello".into()]).unwrap();
        let back = LabeledTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# hello\n# kinds: continuous,binary\nvehicle_id,t,a,b,label\n"));
    }

    #[test]
    fn bad_label_rejected() {
        let csv = "vehicle_id,t,a,label\nv,0,1.0,2\n";
        assert!(LabeledTable::read_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn schema_hash_depends_on_names_and_kinds() {
        let a = vec![Column::new("x", ColumnKind::Continuous)];
        let b = vec![Column::new("x", ColumnKind::Binary)];
        let c = vec![Column::new("y", ColumnKind::Continuous)];
        assert_ne!(schema_hash(&a), schema_hash(&b));
        assert_ne!(schema_hash(&a), schema_hash(&c));
        assert_eq!(schema_hash(&a), schema_hash(&a.clone()));
    }

    #[test]
    fn temporal_split_halves_time_span() {
        let (train, test) = sample().temporal_split();
        assert_eq!(train.keys.len(), 1);
        assert_eq!(test.keys[0].vehicle_id, "v2");
    }
}
