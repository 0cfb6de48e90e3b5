use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Csv(String),
    Json(String),
}

/// One output file: `#` header lines followed by a deterministic body.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// File stem, `<command>-<op>`.
    pub name: String,
    pub header: Vec<String>,
    pub body: Body,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, body: String) -> Self {
        Artifact { name: name.into(), header: vec![], body: Body::Csv(body) }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        Artifact { name: name.into(), header: vec![], body: Body::Json(s) }
    }

    pub fn with_notes(mut self, notes: impl IntoIterator<Item = String>) -> Self {
        self.header.extend(notes);
        self
    }

    pub fn extension(&self) -> &'static str {
        match self.body {
            Body::Csv(_) => "csv",
            Body::Json(_) => "json",
        }
    }

    pub fn body_text(&self) -> &str {
        match &self.body {
            Body::Csv(s) | Body::Json(s) => s,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            for l in line.lines() {
                out.push_str("# ");
                out.push_str(l);
                out.push('\n');
            }
        }
        out.push_str(self.body_text());
        out
    }
}

/// Shortest round-trip formatting, in exponent form outside `[1e-5, 1e16)`; non-finite values as `nan`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Accumulates CSV rows in memory.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns).expect("in-memory write");
        Table { w }
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) {
        self.w.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}
