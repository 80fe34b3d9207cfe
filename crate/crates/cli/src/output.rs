//! Number formatting, artifact writing and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Plain value at 12 significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = x.abs();
    if (1e-6..1e15).contains(&a) {
        let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
        format!("{rounded}")
    } else {
        sci(x)
    }
}

/// Scientific notation at 12 significant digits, used for logarithms.
pub fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        num(x)
    }
}

#[derive(Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        }
    }
}

#[derive(Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub parameters: &'a P,
    pub seeds: Vec<u64>,
    pub outputs: Vec<Artifact>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Where the primary output goes and how the manifest is reported.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

impl Sink {
    /// Writes `body` plus the manifest. With a file target the manifest is
    /// a sidecar next to it; otherwise it goes to stderr unless quiet.
    pub fn emit<P: Serialize>(
        &self,
        subcommand: &str,
        parameters: &P,
        seeds: Vec<u64>,
        body: &str,
        mut extra: Vec<Artifact>,
    ) -> std::io::Result<()> {
        let mut outputs = Vec::new();
        match &self.out {
            Some(path) => {
                fs::write(path, body)?;
                outputs.push(Artifact::of(&path.display().to_string(), body.as_bytes()));
            }
            None => {
                print!("{body}");
                outputs.push(Artifact::of("<stdout>", body.as_bytes()));
            }
        }
        outputs.append(&mut extra);
        let manifest = RunManifest {
            tool: "minechain",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            parameters,
            seeds,
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n";
        match &self.out {
            Some(path) => fs::write(manifest_path(path), text)?,
            None if !self.quiet => eprint!("{text}"),
            None => {}
        }
        Ok(())
    }
}
