//! CSV ingestion and output.
//!
//! Dialect: comma separated, first line is the header, UTF-8. There is no
//! quoting; a comma inside a text value is rejected on output and a row with
//! the wrong arity is rejected on input. Empty cells are rejected (the engine
//! has no NULLs).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::storage::{
    date_to_days, format_float, Column, ColumnData, ColumnType, Dictionary, Table,
};

fn ingestion(line: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        line,
        message: message.into(),
    }
}

enum Builder {
    Int(Vec<i64>),
    Float(Vec<f64>),
    Date(Vec<i64>),
    Text { codes: Vec<u32>, dict: Dictionary },
}

impl Builder {
    fn new(ty: ColumnType) -> Builder {
        match ty {
            ColumnType::Int64 => Builder::Int(Vec::new()),
            ColumnType::Float64 => Builder::Float(Vec::new()),
            ColumnType::Date => Builder::Date(Vec::new()),
            ColumnType::Text => Builder::Text {
                codes: Vec::new(),
                dict: Dictionary::new(),
            },
        }
    }

    fn push(&mut self, cell: &str, line: usize) -> Result<()> {
        if cell.is_empty() {
            return Err(ingestion(line, "empty cell"));
        }
        match self {
            Builder::Int(v) => v.push(
                cell.parse::<i64>()
                    .map_err(|_| ingestion(line, format!("bad int '{cell}'")))?,
            ),
            Builder::Float(v) => v.push(
                cell.parse::<f64>()
                    .map_err(|_| ingestion(line, format!("bad float '{cell}'")))?,
            ),
            Builder::Date(v) => v.push(
                date_to_days(cell).map_err(|_| ingestion(line, format!("bad date '{cell}'")))?,
            ),
            Builder::Text { codes, dict } => codes.push(dict.intern(cell)),
        }
        Ok(())
    }

    fn finish(self, name: String) -> Column {
        let data = match self {
            Builder::Int(v) => ColumnData::Int64(Arc::new(v)),
            Builder::Float(v) => ColumnData::Float64(Arc::new(v)),
            Builder::Date(v) => ColumnData::Date(Arc::new(v)),
            Builder::Text { codes, dict } => ColumnData::Text {
                codes: Arc::new(codes),
                dict: Arc::new(dict),
            },
        };
        Column { name, data }
    }
}

/// Loads a CSV file into a table. The header row must match `schema` by name
/// and order; text values are dictionary-encoded in first appearance order.
/// The table is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>, schema: &[(String, ColumnType)]) -> Result<Table> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table")
        .to_string();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(ingestion(1, "missing header row")),
    };
    let names: Vec<&str> = header.split(',').collect();
    if names.len() != schema.len()
        || names
            .iter()
            .zip(schema)
            .any(|(got, (want, _))| *got != want)
    {
        return Err(ingestion(
            1,
            format!(
                "header [{}] does not match schema [{}]",
                header,
                schema
                    .iter()
                    .map(|(n, _)| n.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ));
    }

    let mut builders: Vec<Builder> = schema.iter().map(|(_, ty)| Builder::new(*ty)).collect();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2; // 1-based, after the header
        let line = line?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != schema.len() {
            return Err(ingestion(
                line_no,
                format!("expected {} cells, found {}", schema.len(), cells.len()),
            ));
        }
        for (builder, cell) in builders.iter_mut().zip(&cells) {
            builder.push(cell, line_no)?;
        }
    }

    let columns = builders
        .into_iter()
        .zip(schema)
        .map(|(b, (n, _))| b.finish(n.clone()))
        .collect();
    Table::new(name, columns)
}

/// Writes a table as CSV. Text values containing a comma or newline are
/// rejected since the dialect has no quoting.
pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<&str> = table.columns().iter().map(|c| c.name.as_str()).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut cells: Vec<String> = Vec::with_capacity(table.columns().len());
    for row in 0..table.row_count() {
        cells.clear();
        for col in table.columns() {
            let cell = match &col.data {
                ColumnData::Float64(v) => format_float(v[row]),
                ColumnData::Text { codes, dict } => {
                    let s = dict.value(codes[row]);
                    if s.contains(',') || s.contains('\n') {
                        return Err(Error::Ingestion {
                            line: row + 2,
                            message: format!(
                                "text value '{s}' contains a separator and cannot be written"
                            ),
                        });
                    }
                    s.to_string()
                }
                other => other.render(row),
            };
            cells.push(cell);
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(cols: &[(&str, ColumnType)]) -> Vec<(String, ColumnType)> {
        cols.iter().map(|(n, t)| (n.to_string(), *t)).collect()
    }

    fn write_tmp(contents: &str) -> tempdir::TmpFile {
        tempdir::TmpFile::new(contents)
    }

    // Minimal scoped temp-file helper; tests only.
    mod tempdir {
        use std::path::PathBuf;

        pub struct TmpFile {
            pub path: PathBuf,
        }

        impl TmpFile {
            pub fn new(contents: &str) -> TmpFile {
                let path = std::env::temp_dir().join(format!(
                    "countdown-csv-{}-{:x}.csv",
                    std::process::id(),
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .unwrap()
                        .as_nanos()
                ));
                std::fs::write(&path, contents).unwrap();
                TmpFile { path }
            }
        }

        impl Drop for TmpFile {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.path);
            }
        }
    }

    #[test]
    fn three_row_int_column() {
        let f = write_tmp("a\n1\n2\n3\n");
        let t = load_csv(&f.path, &schema(&[("a", ColumnType::Int64)])).unwrap();
        assert_eq!(t.row_count(), 3);
        match &t.column("a").unwrap().data {
            ColumnData::Int64(v) => assert_eq!(***v, *[1, 2, 3].as_slice()),
            _ => panic!("wrong type"),
        }
    }

    #[test]
    fn header_only_is_empty_table() {
        let f = write_tmp("a\n");
        let t = load_csv(&f.path, &schema(&[("a", ColumnType::Int64)])).unwrap();
        assert_eq!(t.row_count(), 0);
    }

    #[test]
    fn arity_mismatch_names_line() {
        let f = write_tmp("a,b,c\nx,y\n");
        let err = load_csv(
            &f.path,
            &schema(&[
                ("a", ColumnType::Text),
                ("b", ColumnType::Text),
                ("c", ColumnType::Text),
            ]),
        )
        .unwrap_err();
        match err {
            Error::Ingestion { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_cell_rejected() {
        let f = write_tmp("a,b\n1,\n");
        assert!(load_csv(
            &f.path,
            &schema(&[("a", ColumnType::Int64), ("b", ColumnType::Int64)])
        )
        .is_err());
    }

    #[test]
    fn header_schema_mismatch_rejected() {
        let f = write_tmp("a,b\n1,2\n");
        assert!(load_csv(
            &f.path,
            &schema(&[("a", ColumnType::Int64), ("z", ColumnType::Int64)])
        )
        .is_err());
    }

    #[test]
    fn round_trip_all_types() {
        let f = write_tmp(
            "i,f,d,s\n\
             1,1.5,1992-02-29,alpha\n\
             -7,0.1,1970-01-01,beta\n\
             42,218611.01,1998-12-31,alpha\n",
        );
        let sch = schema(&[
            ("i", ColumnType::Int64),
            ("f", ColumnType::Float64),
            ("d", ColumnType::Date),
            ("s", ColumnType::Text),
        ]);
        let t = load_csv(&f.path, &sch).unwrap();
        let out = f.path.with_extension("out.csv");
        write_csv(&t, &out).unwrap();
        let t2 = load_csv(&out, &sch).unwrap();
        std::fs::remove_file(&out).unwrap();
        assert_eq!(t.row_count(), t2.row_count());
        for (c1, c2) in t.columns().iter().zip(t2.columns()) {
            for row in 0..t.row_count() {
                assert_eq!(c1.data.render(row), c2.data.render(row));
            }
        }
    }
}
