use std::fs::File;
use std::path::Path;

use super::{Dataset, Record, Schema, NUM_CLASSES};
use crate::error::DataError;

/// Name of the outcome column in dataset CSV files.
pub const LABEL_COLUMN: &str = "label";

/// Row accounting from [`load_csv`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
}

/// Reads a comma-separated file whose header holds every schema feature
/// name plus `label` (in any order). Rows with a missing, non-integer or
/// out-of-range cell are dropped and counted.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<(Dataset, LoadReport), DataError> {
    schema.validate()?;
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let columns = column_map(&header, schema)?;

    let mut report = LoadReport::default();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        report.rows_read += 1;
        match parse_row(&row, &columns, schema) {
            Some(r) => records.push(r),
            None => report.rows_dropped += 1,
        }
    }
    report.rows_kept = records.len();
    if records.is_empty() {
        return Err(DataError::NoValidRows {
            dropped: report.rows_dropped,
        });
    }
    Ok((Dataset::new(schema.clone(), records)?, report))
}

// Column position of each schema feature, then of the label.
fn column_map(header: &[String], schema: &Schema) -> Result<Vec<usize>, DataError> {
    let mismatch = || DataError::HeaderMismatch {
        expected: schema
            .features()
            .iter()
            .map(|f| f.name.as_str())
            .chain(std::iter::once(LABEL_COLUMN))
            .collect::<Vec<_>>()
            .join(","),
        found: header.join(","),
    };
    if header.len() != schema.len() + 1 {
        return Err(mismatch());
    }
    let names = schema
        .features()
        .iter()
        .map(|f| f.name.as_str())
        .chain(std::iter::once(LABEL_COLUMN));
    names
        .map(|name| header.iter().position(|h| h == name).ok_or_else(mismatch))
        .collect()
}

fn parse_row(row: &csv::StringRecord, columns: &[usize], schema: &Schema) -> Option<Record> {
    let cell = |col: usize| -> Option<usize> { row.get(col)?.trim().parse::<usize>().ok() };
    let mut features = Vec::with_capacity(schema.len());
    for (f, &col) in schema.features().iter().zip(columns) {
        let code = cell(col)?;
        if code >= f.num_categories {
            return None;
        }
        features.push(code);
    }
    let label = cell(*columns.last()?)?;
    if label >= NUM_CLASSES {
        return None;
    }
    Some(Record { features, label })
}

/// Writes records with the schema's feature names plus `label` as header.
pub fn write_csv(path: &Path, schema: &Schema, records: &[Record]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = schema.features().iter().map(|f| f.name.as_str()).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header)?;
    for r in records {
        let mut row: Vec<String> = r.features.iter().map(|c| c.to_string()).collect();
        row.push(r.label.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataprep::{FeatureSchema, Schema};
    use std::io::Write;

    fn schema() -> Schema {
        Schema::new(vec![
            FeatureSchema {
                name: "region".into(),
                num_categories: 8,
                prompt: "Which region?".into(),
                choice_labels: (0..8).map(|i| format!("r{i}")).collect(),
            },
            FeatureSchema {
                name: "electricity".into(),
                num_categories: 2,
                prompt: "Has electricity?".into(),
                choice_labels: vec!["no".into(), "yes".into()],
            },
        ])
        .unwrap()
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_valid_rows() {
        let f = write("region,electricity,label\n3,1,0\n7,0,1\n0,0,0\n");
        let (ds, report) = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(report.rows_dropped, 0);
        assert_eq!(ds.records[1], Record { features: vec![7, 0], label: 1 });
    }

    #[test]
    fn drops_out_of_range_code() {
        let f = write("region,electricity,label\n3,9,0\n1,1,1\n");
        let (ds, report) = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(report.rows_dropped, 1);
    }

    #[test]
    fn drops_bad_label_and_missing_cells() {
        let f = write("region,electricity,label\n3,1,2\n2,,1\n1,1,1\n");
        let (ds, report) = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(report.rows_dropped, 2);
    }

    #[test]
    fn column_order_is_by_name() {
        let f = write("label,electricity,region\n1,0,5\n");
        let (ds, _) = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.records[0], Record { features: vec![5, 0], label: 1 });
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let f = write("region,tv,label\n1,1,1\n");
        assert!(matches!(
            load_csv(f.path(), &schema()),
            Err(DataError::HeaderMismatch { .. })
        ));
    }

    #[test]
    fn zero_valid_rows_is_an_error() {
        let f = write("region,electricity,label\n9,9,9\n");
        assert!(matches!(
            load_csv(f.path(), &schema()),
            Err(DataError::NoValidRows { dropped: 1 })
        ));
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), &schema()).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    #[test]
    fn write_then_load() {
        let s = schema();
        let recs = vec![
            Record { features: vec![1, 1], label: 1 },
            Record { features: vec![6, 0], label: 0 },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(f.path(), &s, &recs).unwrap();
        let (ds, _) = load_csv(f.path(), &s).unwrap();
        assert_eq!(ds.records, recs);
    }
}
