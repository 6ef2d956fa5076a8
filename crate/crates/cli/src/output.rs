//! Artifact files. Every file is written to a temporary sibling and renamed
//! into place, and carries the configuration hash.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tempfile::NamedTempFile;

/// Version of the artifact layouts written by this tool.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub artifact_version: u32,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(config_sha256: &str) -> Self {
        Self {
            tool: "plasmahom",
            tool_version: env!("CARGO_PKG_VERSION"),
            artifact_version: ARTIFACT_VERSION,
            config_sha256: config_sha256.to_string(),
        }
    }

    /// One-line form used in CSV, text and SVG headers.
    pub fn line(&self) -> String {
        format!(
            "{} {} artifact_version={} config_sha256={}",
            self.tool, self.tool_version, self.artifact_version, self.config_sha256
        )
    }
}

pub struct Artifacts {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path, provenance: Provenance) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.dir.join(name)).map_err(|e| e.error)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON with an `artifact` member (tool, versions, config hash)
    /// added to the top-level object.
    pub fn write_json(&mut self, name: &str, mut value: Value) -> std::io::Result<()> {
        if let Value::Object(map) = &mut value {
            map.insert(
                "artifact".into(),
                serde_json::to_value(&self.provenance).expect("provenance serialises"),
            );
        }
        let mut bytes = serde_json::to_vec_pretty(&value).expect("JSON values serialise");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Text whose first line is `prefix` followed by the provenance line.
    pub fn write_commented(&mut self, name: &str, prefix: &str, body: &[u8]) -> std::io::Result<()> {
        let mut bytes = format!("{prefix}{}\n", self.provenance.line()).into_bytes();
        bytes.extend_from_slice(body);
        self.write_bytes(name, &bytes)
    }

    /// SVG with the provenance as a comment right after the root element.
    pub fn write_svg(&mut self, name: &str, svg: &str) -> std::io::Result<()> {
        let comment = format!("<!-- {} -->", self.provenance.line());
        let text = match svg.find('>') {
            Some(k) => format!("{}\n{comment}{}", &svg[..=k], &svg[k + 1..]),
            None => format!("{comment}\n{svg}"),
        };
        self.write_bytes(name, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_carry_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::create(&dir.path().join("o"), Provenance::new("abc123")).unwrap();
        a.write_json("r.json", serde_json::json!({"x": 1})).unwrap();
        a.write_commented("t.csv", "# ", b"a,b\n").unwrap();
        a.write_svg("p.svg", "<svg width=\"1\"><rect/></svg>").unwrap();
        assert_eq!(a.written(), ["r.json", "t.csv", "p.svg"]);
        for name in a.written() {
            let text = std::fs::read_to_string(dir.path().join("o").join(name)).unwrap();
            assert!(text.contains("abc123"), "{name}");
        }
        let csv = std::fs::read_to_string(dir.path().join("o/t.csv")).unwrap();
        assert!(csv.starts_with("# plasmahom ") && csv.ends_with("a,b\n"));
        let svg = std::fs::read_to_string(dir.path().join("o/p.svg")).unwrap();
        assert!(svg.starts_with("<svg width=\"1\">\n<!-- "));
        // no temporary files left behind
        assert_eq!(std::fs::read_dir(dir.path().join("o")).unwrap().count(), 3);
    }
}
