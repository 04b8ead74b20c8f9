use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub text: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

impl Post {
    pub fn new(text: impl Into<String>, timestamp: i64) -> Self {
        Self {
            text: text.into(),
            timestamp,
        }
    }
}

/// One user's chronologically ordered post history and binary label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserRecord {
    user_id: String,
    label: u8,
    posts: Vec<Post>,
}

#[derive(Deserialize)]
struct RawUser {
    user_id: String,
    label: i64,
    posts: Vec<Post>,
}

impl UserRecord {
    /// Validates and stable-sorts the posts by timestamp.
    pub fn new(user_id: impl Into<String>, mut posts: Vec<Post>, label: u8) -> Result<Self, DatasetError> {
        let user_id = user_id.into();
        if posts.is_empty() {
            return Err(DatasetError::EmptyPosts { user_id });
        }
        if label > 1 {
            return Err(DatasetError::InvalidLabel {
                user_id,
                label: i64::from(label),
            });
        }
        if let Some(p) = posts.iter().find(|p| p.timestamp < 0) {
            return Err(DatasetError::NegativeTimestamp {
                user_id,
                timestamp: p.timestamp,
            });
        }
        posts.sort_by_key(|p| p.timestamp);
        Ok(Self { user_id, label, posts })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.posts.iter().map(|p| p.timestamp).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub total: usize,
    pub negative: usize,
    pub positive: usize,
}

/// A collection of users with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    users: Vec<UserRecord>,
}

impl Corpus {
    pub fn new(users: Vec<UserRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(users.len());
        for u in &users {
            if !seen.insert(u.user_id.as_str()) {
                return Err(DatasetError::DuplicateUser(u.user_id.clone()));
            }
        }
        Ok(Self { users })
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn into_users(self) -> Vec<UserRecord> {
        self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn counts(&self) -> ClassCounts {
        let positive = self.users.iter().filter(|u| u.label == 1).count();
        ClassCounts {
            total: self.users.len(),
            negative: self.users.len() - positive,
            positive,
        }
    }

    pub fn max_posts(&self) -> usize {
        self.users.iter().map(UserRecord::len).max().unwrap_or(0)
    }

    /// Parses the JSONL corpus format, one user object per line. Blank lines
    /// are skipped; line numbers in errors are 1-based.
    pub fn from_jsonl_str(input: &str) -> Result<Self, DatasetError> {
        let mut users = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            if let Some(user) = parse_line(line, idx + 1)? {
                users.push(user);
            }
        }
        Self::new(users)
    }

    pub fn from_jsonl_reader<R: BufRead>(reader: R) -> Result<Self, DatasetError> {
        let mut users = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if let Some(user) = parse_line(&line, idx + 1)? {
                users.push(user);
            }
        }
        Self::new(users)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        for user in &self.users {
            serde_json::to_writer(&mut out, user).map_err(|e| DatasetError::Parse {
                line: 0,
                message: e.to_string(),
            })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<UserRecord>, DatasetError> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let raw: RawUser = serde_json::from_str(line).map_err(|e| DatasetError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let label = match raw.label {
        0 => 0,
        1 => 1,
        other => {
            return Err(DatasetError::InvalidLabel {
                user_id: raw.user_id,
                label: other,
            })
        }
    };
    UserRecord::new(raw.user_id, raw.posts, label).map(Some)
}
