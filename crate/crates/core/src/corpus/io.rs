use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{normalize_text, CorpusError, DialoguePair, NormalizationRules, Sentence};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a raw corpus: one utterance per line, blank lines separate
/// documents. Lines that normalize to nothing are dropped without ending
/// the document.
pub fn read_documents(
    path: &Path,
    rules: &NormalizationRules,
) -> Result<Vec<Vec<Sentence>>, CorpusError> {
    let reader = BufReader::new(std::fs::File::open(path).map_err(io_err(path))?);
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
            continue;
        }
        let sentence = normalize_text(&line, rules);
        if !sentence.is_empty() {
            current.push(sentence);
        }
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

/// Writes `x<TAB>y` lines, with a third `label` column for pairs that
/// carry an affect label.
pub fn write_pairs(path: &Path, pairs: &[DialoguePair]) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for p in pairs {
        match p.b {
            Some(b) => writeln!(out, "{}\t{}\t{}", p.x, p.y, b),
            None => writeln!(out, "{}\t{}", p.x, p.y),
        }
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_pairs(path: &Path) -> Result<Vec<DialoguePair>, CorpusError> {
    let reader = BufReader::new(std::fs::File::open(path).map_err(io_err(path))?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| CorpusError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(parse_err(format!("expected 2 or 3 columns, got {}", cols.len())));
        }
        let x = Sentence::from_normalized(cols[0]);
        let y = Sentence::from_normalized(cols[1]);
        if x.is_empty() || y.is_empty() {
            return Err(parse_err("empty sentence in pair".into()));
        }
        let b = match cols.get(2) {
            Some(label) => Some(label.parse().map_err(parse_err)?),
            None => None,
        };
        pairs.push(DialoguePair { x, y, b });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affect::AffectLabel;

    #[test]
    fn documents_split_on_blank_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "Hello there.\nHi!\n...\n\n\nHow are you?\nFine.\n").unwrap();
        let docs = read_documents(&path, &NormalizationRules::bundled()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].len(), 2);
        assert_eq!(docs[1][0].to_string(), "how are you");
    }

    #[test]
    fn pairs_roundtrip_with_and_without_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        let mut a = DialoguePair::new(
            Sentence::from_normalized("i love it"),
            Sentence::from_normalized("me too"),
        );
        let b = a.clone();
        a.b = Some(AffectLabel::Positive);
        write_pairs(&path, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "i love it\tme too\tpositive\ni love it\tme too\n"
        );
        assert_eq!(read_pairs(&path).unwrap(), vec![a, b]);
    }

    #[test]
    fn malformed_pair_line_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        std::fs::write(&path, "a\tb\nonly one column\n").unwrap();
        let err = read_pairs(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
