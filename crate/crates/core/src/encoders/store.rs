//! File-backed per-post vectors in the line-oriented interchange format:
//!
//! ```text
//! #width <d_text>
//! user_id<TAB>post_index<TAB>v1,...,vd[<TAB>e1,...,e7]
//! ```
//!
//! The emotion block is either present on every record or on none.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{EmotionEncoder, EncoderError, TextEncoder};
use crate::dataset::EMOTION_DIM;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredPost {
    pub text: Vec<f64>,
    pub emotion: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    width: usize,
    records: BTreeMap<(String, usize), StoredPost>,
}

impl EmbeddingStore {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            records: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_emotion(&self) -> bool {
        self.records.values().next().is_some_and(|r| r.emotion.is_some())
    }

    pub fn get(&self, user_id: &str, post_index: usize) -> Option<&StoredPost> {
        self.records.get(&(user_id.to_owned(), post_index))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, usize), &StoredPost)> {
        self.records.iter()
    }

    pub fn insert(
        &mut self,
        user_id: impl Into<String>,
        post_index: usize,
        post: StoredPost,
    ) -> Result<(), EncoderError> {
        let user_id = user_id.into();
        let key_name = format!("({user_id}, {post_index})");
        if user_id.is_empty() || user_id.contains(['\t', '\n', '\r']) {
            return Err(EncoderError::Format {
                key: key_name,
                message: "user id must be non-empty and free of tabs and newlines".into(),
            });
        }
        if post.text.len() != self.width {
            return Err(EncoderError::Format {
                key: key_name,
                message: format!("text width {} != declared {}", post.text.len(), self.width),
            });
        }
        if let Some(e) = &post.emotion {
            if e.len() != EMOTION_DIM {
                return Err(EncoderError::Format {
                    key: key_name,
                    message: format!("emotion width {} != {EMOTION_DIM}", e.len()),
                });
            }
        }
        let values = post.text.iter().chain(post.emotion.iter().flatten());
        if values.clone().any(|v| !v.is_finite()) {
            return Err(EncoderError::Format {
                key: key_name,
                message: "non-finite value".into(),
            });
        }
        if let Some(first) = self.records.values().next() {
            if first.emotion.is_some() != post.emotion.is_some() {
                return Err(EncoderError::Format {
                    key: key_name,
                    message: "emotion block must be present on all records or none".into(),
                });
            }
        }
        let key = (user_id, post_index);
        if self.records.contains_key(&key) {
            return Err(EncoderError::Duplicate {
                user_id: key.0,
                post_index,
            });
        }
        self.records.insert(key, post);
        Ok(())
    }

    pub fn parse(input: &str) -> Result<Self, EncoderError> {
        let mut lines = input.split('\n').enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or("");
        let width = header
            .strip_prefix("#width ")
            .and_then(|w| w.parse::<usize>().ok())
            .filter(|&w| w > 0)
            .ok_or_else(|| EncoderError::Parse {
                line: 1,
                message: "expected header `#width <d>`".into(),
            })?;
        let mut store = Self::new(width);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| EncoderError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(perr(format!(
                    "expected 3 or 4 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let post_index = fields[1]
                .parse::<usize>()
                .map_err(|e| perr(format!("post index: {e}")))?;
            let text = parse_floats(fields[2]).map_err(perr)?;
            let emotion = fields.get(3).map(|f| parse_floats(f)).transpose().map_err(perr)?;
            store.insert(fields[0], post_index, StoredPost { text, emotion })?;
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self, EncoderError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#width {}", self.width)?;
        for ((user, idx), post) in &self.records {
            write!(out, "{user}\t{idx}\t")?;
            write_floats(&mut out, &post.text)?;
            if let Some(e) = &post.emotion {
                out.write_all(b"\t")?;
                write_floats(&mut out, e)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn lookup(&self, user_id: &str, post_index: usize) -> Result<&StoredPost, EncoderError> {
        self.get(user_id, post_index).ok_or_else(|| EncoderError::Missing {
            user_id: user_id.to_owned(),
            post_index,
        })
    }
}

fn parse_floats(field: &str) -> Result<Vec<f64>, String> {
    field
        .split(',')
        .map(|s| {
            let v: f64 = s.parse().map_err(|_| format!("invalid number `{s}`"))?;
            // `f64::from_str` also accepts inf/nan spellings.
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite number `{s}`"))
            }
        })
        .collect()
}

fn write_floats<W: Write>(out: &mut W, values: &[f64]) -> std::io::Result<()> {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        // Debug formatting is the shortest representation that round-trips.
        write!(out, "{v:?}")?;
    }
    Ok(())
}

impl TextEncoder for EmbeddingStore {
    fn dim(&self) -> usize {
        self.width
    }

    fn encode_post(&self, user_id: &str, index: usize, _text: &str) -> Result<Vec<f64>, EncoderError> {
        Ok(self.lookup(user_id, index)?.text.clone())
    }

    fn encode_joined(&self, _text: &str) -> Result<Vec<f64>, EncoderError> {
        Err(EncoderError::Unsupported(
            "a file-backed store has no vectors for concatenated text",
        ))
    }
}

impl EmotionEncoder for EmbeddingStore {
    fn encode_post(&self, user_id: &str, index: usize, _text: &str) -> Result<Vec<f64>, EncoderError> {
        self.lookup(user_id, index)?
            .emotion
            .clone()
            .ok_or(EncoderError::Unsupported("store has no emotion block"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_store_with_header() {
        let s = EmbeddingStore::parse("#width 3\n").unwrap();
        assert_eq!(s.width(), 3);
        assert!(s.is_empty());
    }

    #[test]
    fn wrong_width_names_key() {
        let err = EmbeddingStore::parse("#width 3\nalice\t2\t1,2\n").unwrap_err();
        match err {
            EncoderError::Format { key, .. } => assert_eq!(key, "(alice, 2)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let src = "#width 2\na\t0\t1,2\na\t0\t3,4\n";
        assert!(matches!(
            EmbeddingStore::parse(src),
            Err(EncoderError::Duplicate { .. })
        ));
    }

    #[test]
    fn mixed_emotion_blocks_rejected() {
        let src = "#width 1\na\t0\t1\t0.1,0.1,0.1,0.1,0.1,0.1,0.4\na\t1\t2\n";
        assert!(matches!(EmbeddingStore::parse(src), Err(EncoderError::Format { .. })));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (src, line) in [
            ("#width 2\na\t0\t1,x\n", 2),
            ("#width 2\na\t0\t1,2\nb\tminus\t1,2\n", 3),
            ("#width 2\na\t0\t1,nan\n", 2),
            ("#width 2\na\t0\n", 2),
            ("width 2\n", 1),
        ] {
            match EmbeddingStore::parse(src) {
                Err(EncoderError::Parse { line: l, .. }) => assert_eq!(l, line, "{src:?}"),
                other => panic!("unexpected {other:?} for {src:?}"),
            }
        }
    }

    #[test]
    fn missing_lookup_is_an_error() {
        let s = EmbeddingStore::parse("#width 2\na\t0\t1,2\n").unwrap();
        match TextEncoder::encode_post(&s, "a", 1, "") {
            Err(EncoderError::Missing { user_id, post_index }) => {
                assert_eq!((user_id.as_str(), post_index), ("a", 1))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exponent_floats_parse() {
        let s = EmbeddingStore::parse("#width 3\nu\t0\t1e-3,-2.5E+2,+0.5\n").unwrap();
        assert_eq!(s.get("u", 0).unwrap().text, vec![1e-3, -250.0, 0.5]);
    }
}
