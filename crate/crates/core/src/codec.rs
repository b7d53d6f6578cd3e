//! Line-oriented text encoding for fitted models: `key value value ...`.
//! Reals are written in Rust's shortest round-trip decimal form.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct TextWriter {
    out: String,
}

impl TextWriter {
    pub fn new() -> Self {
        TextWriter::default()
    }

    pub fn line<I, T>(&mut self, key: &str, values: I)
    where
        I: IntoIterator<Item = T>,
        T: Display,
    {
        self.out.push_str(key);
        for v in values {
            self.out.push(' ');
            self.out.push_str(&v.to_string());
        }
        self.out.push('\n');
    }

    pub fn value<T: Display>(&mut self, key: &str, v: T) {
        self.line(key, [v]);
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub(crate) struct TextReader<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> TextReader<'a> {
    pub fn new(text: &'a str) -> Self {
        TextReader {
            lines: text.lines().peekable(),
        }
    }

    pub fn peek_key(&mut self) -> Option<&'a str> {
        self.lines.peek().and_then(|l| l.split_whitespace().next())
    }

    pub fn fields(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self
            .lines
            .next()
            .ok_or_else(|| Error::ModelFormat(format!("expected `{key}`, found end of input")))?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            other => Err(Error::ModelFormat(format!(
                "expected `{key}`, found `{}`",
                other.unwrap_or("")
            ))),
        }
    }

    pub fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        self.fields(key)?
            .into_iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::ModelFormat(format!("`{key}`: cannot parse `{s}`")))
            })
            .collect()
    }

    pub fn one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let mut v = self.parsed::<T>(key)?;
        if v.len() != 1 {
            return Err(Error::ModelFormat(format!("`{key}`: expected one value, got {}", v.len())));
        }
        Ok(v.remove(0))
    }

    pub fn word(&mut self, key: &str) -> Result<&'a str> {
        let v = self.fields(key)?;
        match v.as_slice() {
            [w] => Ok(w),
            _ => Err(Error::ModelFormat(format!("`{key}`: expected one word"))),
        }
    }
}
