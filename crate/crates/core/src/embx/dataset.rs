use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub text: String,
    pub labels: BTreeMap<String, String>,
    pub split: Split,
}

/// Labeled sentences, one label per declared scheme per record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledTextDataset {
    pub schemes: Vec<String>,
    pub records: Vec<Record>,
}

impl LabeledTextDataset {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Records of one split; errors if the split has no records.
    pub fn split(&self, split: Split) -> Result<Vec<&Record>> {
        let out: Vec<&Record> = self.records.iter().filter(|r| r.split == split).collect();
        if out.is_empty() {
            return Err(Error::validation(
                "split",
                format!("{split:?} split is empty"),
            ));
        }
        Ok(out)
    }

    /// Distinct labels of `scheme` in first-occurrence order.
    pub fn categories(&self, scheme: &str) -> Result<Vec<String>> {
        if !self.schemes.iter().any(|s| s == scheme) {
            return Err(Error::Key(format!("scheme {scheme:?} not declared")));
        }
        let mut seen = Vec::new();
        for r in &self.records {
            let label = &r.labels[scheme];
            if !seen.contains(label) {
                seen.push(label.clone());
            }
        }
        Ok(seen)
    }
}

/// Reads line-delimited JSON records `{text, labels, split}` and checks that
/// every record labels every scheme in `schemes`. Blank lines are skipped;
/// line numbers in errors are 1-based.
pub fn load_labeled_dataset<R: BufRead>(source: R, schemes: &[&str]) -> Result<LabeledTextDataset> {
    let mut records = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(missing) = schemes.iter().find(|s| !record.labels.contains_key(**s)) {
            return Err(Error::Schema {
                line: line_no,
                message: format!("record lacks label for scheme {missing:?}"),
            });
        }
        records.push(record);
    }
    Ok(LabeledTextDataset {
        schemes: schemes.iter().map(|s| s.to_string()).collect(),
        records,
    })
}
