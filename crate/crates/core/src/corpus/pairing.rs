use super::{DialoguePair, Sentence};

/// Emits overlapping (line_i, line_{i+1}) pairs inside each document.
///
/// Empty sentences are not usable and are dropped before pairing, so the
/// lines around a dropped one become adjacent. Pairs never cross document
/// boundaries.
pub fn pair_consecutive(documents: &[Vec<Sentence>]) -> Vec<DialoguePair> {
    let mut pairs = Vec::new();
    for doc in documents {
        let usable: Vec<&Sentence> = doc.iter().filter(|s| !s.is_empty()).collect();
        pairs.extend(
            usable
                .windows(2)
                .map(|w| DialoguePair::new(w[0].clone(), w[1].clone())),
        );
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(w: &str) -> Sentence {
        Sentence::from_normalized(w)
    }

    fn xy(pairs: &[DialoguePair]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|p| (p.x.to_string(), p.y.to_string()))
            .collect()
    }

    #[test]
    fn three_lines_give_two_overlapping_pairs() {
        let pairs = pair_consecutive(&[vec![s("a"), s("b"), s("c")]]);
        assert_eq!(
            xy(&pairs),
            [("a".into(), "b".into()), ("b".into(), "c".into())]
        );
        assert!(pairs.iter().all(|p| p.b.is_none()));
    }

    #[test]
    fn single_line_gives_nothing() {
        assert!(pair_consecutive(&[vec![s("a")]]).is_empty());
        assert!(pair_consecutive(&[]).is_empty());
    }

    #[test]
    fn document_boundaries_are_respected() {
        let pairs = pair_consecutive(&[vec![s("a"), s("b")], vec![s("c"), s("d")]]);
        assert_eq!(
            xy(&pairs),
            [("a".into(), "b".into()), ("c".into(), "d".into())]
        );
    }

    #[test]
    fn empty_lines_are_skipped() {
        let pairs = pair_consecutive(&[vec![s("a"), Sentence::default(), s("b")]]);
        assert_eq!(xy(&pairs), [("a".into(), "b".into())]);
    }
}
