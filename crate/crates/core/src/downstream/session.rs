use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DownstreamError;

/// What a session is labeled with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionTarget {
    /// Mean Likert rating (1–9) per behavior.
    Ratings(BTreeMap<String, f64>),
    /// Categorical emotion label.
    Emotion(String),
}

/// One line of a session file:
/// `{"session_id", "group_id", "sentences": [...], "ratings": {...}}` or
/// with `"emotion": "label"` instead of `ratings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSession {
    pub session_id: String,
    pub group_id: String,
    pub sentences: Vec<String>,
    #[serde(flatten)]
    pub target: SessionTarget,
}

impl LabeledSession {
    pub fn rating(&self, behavior: &str) -> Option<f64> {
        match &self.target {
            SessionTarget::Ratings(r) => r.get(behavior).copied(),
            SessionTarget::Emotion(_) => None,
        }
    }

    pub fn emotion(&self) -> Option<&str> {
        match &self.target {
            SessionTarget::Emotion(e) => Some(e),
            SessionTarget::Ratings(_) => None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if let SessionTarget::Ratings(r) = &self.target {
            for (b, &v) in r {
                if !(1.0..=9.0).contains(&v) {
                    return Err(format!("rating {v} for `{b}` outside [1, 9]"));
                }
            }
        }
        Ok(())
    }
}

/// A session kept by [`select_extremes`], with its binarized label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizedSession {
    /// Position in the input slice.
    pub index: usize,
    pub session_id: String,
    pub group_id: String,
    pub rating: f64,
    pub label: usize,
}

pub fn read_sessions(path: &Path) -> Result<Vec<LabeledSession>, DownstreamError> {
    let io = |source| DownstreamError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| DownstreamError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let s: LabeledSession = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        s.validate().map_err(parse_err)?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_sessions(path: &Path, sessions: &[LabeledSession]) -> Result<(), DownstreamError> {
    let io = |source| DownstreamError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for s in sessions {
        let line = serde_json::to_string(s).map_err(|e| DownstreamError::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Keeps the top and bottom `⌊fraction·N⌋` sessions by `behavior` rating
/// (label 1 and 0), discarding the middle. Sessions are ordered by rating,
/// then session id, so boundary ties are deterministic. Sessions without a
/// rating for `behavior` are ignored.
pub fn select_extremes(
    sessions: &[LabeledSession],
    behavior: &str,
    fraction: f64,
) -> Result<Vec<BinarizedSession>, DownstreamError> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(DownstreamError::Invalid(format!(
            "extreme fraction {fraction} outside (0, 0.5]"
        )));
    }
    let mut rated: Vec<(usize, f64)> = sessions
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.rating(behavior).map(|r| (i, r)))
        .collect();
    if rated.is_empty() {
        return Err(DownstreamError::Invalid(format!(
            "no session is rated for `{behavior}`"
        )));
    }
    rated.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| sessions[a.0].session_id.cmp(&sessions[b.0].session_id))
    });
    if rated.first().map(|r| r.1) == rated.last().map(|r| r.1) {
        log::warn!("all `{behavior}` ratings are equal; extremes split by session id");
    }
    let n = (fraction * rated.len() as f64).floor() as usize;
    let make = |&(i, rating): &(usize, f64), label| BinarizedSession {
        index: i,
        session_id: sessions[i].session_id.clone(),
        group_id: sessions[i].group_id.clone(),
        rating,
        label,
    };
    let mut out: Vec<BinarizedSession> = rated[..n].iter().map(|r| make(r, 0)).collect();
    out.extend(rated[rated.len() - n..].iter().map(|r| make(r, 1)));
    Ok(out)
}
