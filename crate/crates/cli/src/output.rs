use std::fs;
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// One CSV file: `#` metadata, a header row, data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvFile {
    pub name: String,
    pub property: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl CsvFile {
    pub fn new(name: impl Into<String>, property: impl Into<String>, header: impl Into<String>, rows: Vec<String>) -> Self {
        CsvFile { name: name.into(), property: property.into(), header: header.into(), rows }
    }

    pub fn render(&self, command: &str, config_hash: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!("# version: ramified-dirac {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("# command: {command}\n"));
        s.push_str(&format!("# config_sha256: {config_hash}\n"));
        s.push_str(&format!("# property: {}\n", self.property));
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a hidden temporary in `dir`, then renames over `name`, so a
/// reader never sees a half-written file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, dir.join(name))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_hex_sha256() {
        // sha256("") is a fixed constant
        assert_eq!(config_hash(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn render_layout() {
        let f = CsvFile::new("x.csv", "p", "a,b", vec!["1,2".into()]);
        let s = f.render("spectrum", "abc");
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# version: ramified-dirac "));
        assert_eq!(&lines[1..], ["# command: spectrum", "# config_sha256: abc", "# property: p", "a,b", "1,2"]);
    }
}
