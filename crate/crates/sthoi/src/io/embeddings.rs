use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::EmbeddingTable;

/// Text embedding table: one line per token, the token followed by its
/// vector components, whitespace-separated. All lines must share one
/// dimension; duplicate tokens are rejected.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path).map_err(|_| Error::MissingFile { path: path.into() })?;
    let reader = BufReader::new(file);
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let located = |message: String| Error::Parse {
            path: path.into(),
            line: Some(lineno + 1),
            message,
        };
        let mut parts = line.split_whitespace();
        let token = parts
            .next()
            .ok_or_else(|| located("empty line".into()))?
            .to_string();
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|e| located(format!("bad float {p:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(located(format!("token {token:?} has no vector")));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(located(format!(
                    "dimension {} != {d} of earlier lines",
                    values.len()
                )))
            }
            _ => {}
        }
        if vectors.insert(token.clone(), values).is_some() {
            return Err(located(format!("duplicate token {token:?}")));
        }
    }
    if vectors.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: None,
            message: "empty embedding table".into(),
        });
    }
    EmbeddingTable::new(vectors)
}

pub fn save_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for token in table.tokens() {
        let values = table.get(token)?;
        write!(file, "{token}")?;
        for v in values {
            write!(file, " {v}")?;
        }
        writeln!(file)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        std::fs::write(&path, "human 1.0 0.5 -0.25 0\ndog 0 1 0 2.5\n").unwrap();
        let table = load_embeddings(&path).unwrap();
        assert_eq!(table.dim(), 4);
        assert_eq!(table.get("dog").unwrap(), &[0.0, 1.0, 0.0, 2.5]);

        let path2 = dir.path().join("e2.txt");
        save_embeddings(&path2, &table).unwrap();
        assert_eq!(load_embeddings(&path2).unwrap(), table);
    }

    #[test]
    fn rejects_bad_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        std::fs::write(&path, "a 1 2\nb 1\n").unwrap();
        assert!(load_embeddings(&path).is_err());
        std::fs::write(&path, "a 1 2\na 3 4\n").unwrap();
        assert!(load_embeddings(&path).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(load_embeddings(&path).is_err());
    }
}
