use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::schema::{AttributeKind, Domain, Role, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// Leaf position for taxonomy attributes, label index for nominal ones.
    Categorical(Vec<u32>),
    Ignored,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<Schema>,
    columns: Vec<Column>,
    rows: usize,
}

impl Dataset {
    /// Reads a headed CSV whose columns are exactly the schema attributes, in order.
    pub fn load(path: &Path, schema: &Schema) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::NoRows {
                path: path.to_path_buf(),
            });
        }
        let expected = schema.names();
        if header != expected {
            return Err(Error::HeaderMismatch {
                expected,
                found: header,
            });
        }
        let mut raw: Vec<(u64, csv::StringRecord)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            raw.push((line, record));
        }
        if raw.is_empty() {
            return Err(Error::NoRows {
                path: path.to_path_buf(),
            });
        }
        Self::from_records(schema, raw.iter().map(|(l, r)| (*l, r.iter())))
    }

    /// Builds a dataset from string rows; line numbers in errors start at 2 as
    /// if a header row preceded the data.
    pub fn from_string_rows<R, S>(schema: &Schema, rows: &[R]) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        Self::from_records(
            schema,
            rows.iter()
                .enumerate()
                .map(|(i, r)| (i as u64 + 2, r.as_ref().iter().map(|s| s.as_ref()))),
        )
    }

    fn from_records<'a, I, F>(schema: &Schema, records: I) -> Result<Self>
    where
        I: Iterator<Item = (u64, F)> + Clone,
        F: Iterator<Item = &'a str>,
    {
        let mut schema = schema.clone();
        // Collect labels for nominal attributes declared without a value list.
        for idx in 0..schema.len() {
            let attr = schema.attribute(idx);
            if attr.role != Role::Ignored && matches!(attr.domain, Domain::Nominal(None)) {
                let mut labels = BTreeSet::new();
                for (line, fields) in records.clone() {
                    let value = fields.into_iter().nth(idx).unwrap_or("");
                    check_present(value, line, &attr.name)?;
                    labels.insert(value.to_string());
                }
                schema.attribute_mut(idx).domain = Domain::Nominal(Some(labels.into_iter().collect()));
            }
        }

        let lookups: Vec<Option<HashMap<String, u32>>> = schema
            .attributes()
            .iter()
            .map(|a| match (&a.role, &a.domain) {
                (Role::Ignored, _) => None,
                (_, Domain::Nominal(Some(labels))) => Some(
                    labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect(),
                ),
                _ => None,
            })
            .collect();

        let mut columns: Vec<Column> = schema
            .attributes()
            .iter()
            .map(|a| match (a.role, a.kind) {
                (Role::Ignored, _) => Column::Ignored,
                (_, AttributeKind::Numeric) => Column::Numeric(Vec::new()),
                (_, AttributeKind::Categorical) => Column::Categorical(Vec::new()),
            })
            .collect();

        let mut rows = 0;
        for (line, fields) in records {
            let fields: Vec<&str> = fields.collect();
            if fields.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "line {line}: expected {} fields, found {}",
                    schema.len(),
                    fields.len()
                )));
            }
            for (idx, column) in columns.iter_mut().enumerate() {
                let attr = schema.attribute(idx);
                let value = fields[idx];
                match column {
                    Column::Ignored => {}
                    Column::Numeric(values) => {
                        check_present(value, line, &attr.name)?;
                        let v: f64 = value.parse().map_err(|_| Error::BadNumber {
                            line,
                            column: attr.name.clone(),
                            value: value.into(),
                        })?;
                        let Domain::Interval { min, max } = attr.domain else {
                            unreachable!("validated by Schema::new")
                        };
                        if !(v >= min && v <= max) {
                            return Err(Error::OutOfDomain {
                                line,
                                column: attr.name.clone(),
                                value: v,
                                min,
                                max,
                            });
                        }
                        values.push(v);
                    }
                    Column::Categorical(values) => {
                        check_present(value, line, &attr.name)?;
                        let code = match (&attr.domain, &lookups[idx]) {
                            (Domain::Taxonomy(t), _) => t.leaf_position(value),
                            (_, Some(map)) => map.get(value).copied(),
                            _ => None,
                        };
                        let code = code.ok_or_else(|| Error::UnknownCategory {
                            line,
                            column: attr.name.clone(),
                            value: value.into(),
                        })?;
                        values.push(code);
                    }
                }
            }
            rows += 1;
        }
        Ok(Dataset {
            schema: Arc::new(schema),
            columns,
            rows,
        })
    }

    /// Builds a dataset from encoded columns. Nominal attributes must carry labels.
    pub fn from_columns(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::Schema(format!(
                "expected {} columns, found {}",
                schema.len(),
                columns.len()
            )));
        }
        let mut rows = None;
        for (idx, column) in columns.iter().enumerate() {
            let attr = schema.attribute(idx);
            let len = match (column, &attr.domain, attr.role) {
                (Column::Ignored, _, Role::Ignored) => continue,
                (Column::Numeric(v), Domain::Interval { min, max }, _) => {
                    if let Some(pos) = v.iter().position(|x| !(x >= min && x <= max)) {
                        return Err(Error::OutOfDomain {
                            line: pos as u64 + 2,
                            column: attr.name.clone(),
                            value: v[pos],
                            min: *min,
                            max: *max,
                        });
                    }
                    v.len()
                }
                (Column::Categorical(v), _, _) => {
                    let limit = attr
                        .labels()
                        .ok_or_else(|| Error::Schema(format!("attribute `{}` has no labels", attr.name)))?
                        .len() as u32;
                    if let Some(pos) = v.iter().position(|&c| c >= limit) {
                        return Err(Error::UnknownCategory {
                            line: pos as u64 + 2,
                            column: attr.name.clone(),
                            value: v[pos].to_string(),
                        });
                    }
                    v.len()
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column `{}` does not match its attribute",
                        attr.name
                    )))
                }
            };
            if rows.is_some_and(|r| r != len) {
                return Err(Error::Schema("columns differ in length".into()));
            }
            rows = Some(len);
        }
        Ok(Dataset {
            schema: Arc::new(schema),
            columns,
            rows: rows.unwrap_or(0),
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn numeric(&self, idx: usize) -> &[f64] {
        match &self.columns[idx] {
            Column::Numeric(v) => v,
            _ => panic!("attribute {idx} is not numeric"),
        }
    }

    pub fn categorical(&self, idx: usize) -> &[u32] {
        match &self.columns[idx] {
            Column::Categorical(v) => v,
            _ => panic!("attribute {idx} is not categorical"),
        }
    }

    /// Number of distinct labels of a categorical attribute.
    pub fn label_count(&self, idx: usize) -> usize {
        self.schema.attribute(idx).labels().map_or(0, |l| l.len())
    }

    /// Keeps `n` rows chosen by a seeded shuffle, in their original order.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.rows {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.rows).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(n);
        idx.sort_unstable();
        self.select(&idx)
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
                Column::Ignored => Column::Ignored,
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            columns,
            rows: rows.len(),
        }
    }
}

fn check_present(value: &str, line: u64, column: &str) -> Result<()> {
    if value.is_empty() || value == "?" {
        return Err(Error::MissingValue {
            line,
            column: column.into(),
        });
    }
    Ok(())
}
