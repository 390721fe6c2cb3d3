//! JSON conventions shared by every file the crate writes.
//!
//! Floats are rendered with 17 significant digits (`{:.16e}`), which together with a
//! correctly rounded parser gives bit-exact round trips. Objects are indented; the
//! outermost array of a nested array (a matrix) gets one element per line and inner
//! arrays stay on a single line.

use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

/// `f64` rendered with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
struct Container {
    is_array: bool,
    multiline: bool,
    has_items: bool,
}

#[derive(Default)]
pub struct ExactFormatter {
    stack: Vec<Container>,
}

impl ExactFormatter {
    fn newline<W: ?Sized + Write>(&self, w: &mut W, depth: usize) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn inside_array(&self) -> bool {
        self.stack.last().is_some_and(|c| c.is_array)
    }
}

impl Formatter for ExactFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        let multiline = !self.inside_array();
        self.stack.push(Container {
            is_array: true,
            multiline,
            has_items: false,
        });
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        let c = self.stack.pop().unwrap_or_default();
        if c.multiline && c.has_items {
            self.newline(w, self.stack.len())?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        let depth = self.stack.len();
        if let Some(c) = self.stack.last_mut() {
            c.has_items = true;
            if c.multiline {
                return self.newline(w, depth);
            }
        }
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.stack.push(Container {
            is_array: false,
            multiline: true,
            has_items: false,
        });
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        let c = self.stack.pop().unwrap_or_default();
        if c.has_items {
            self.newline(w, self.stack.len())?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        let depth = self.stack.len();
        if let Some(c) = self.stack.last_mut() {
            c.has_items = true;
        }
        self.newline(w, depth)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFormatter::default());
    value.serialize(&mut ser).map_err(|e| Error::Validation(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_string(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text, &path.display().to_string())
}

pub fn from_str<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })
}
