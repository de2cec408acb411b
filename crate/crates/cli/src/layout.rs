//! File locations inside the work directory.

use std::path::{Path, PathBuf};

use multitag::lexicon::LexiconMode;
use multitag::pipeline::ModelKind;

use crate::CliError;

pub fn corpus_file(work: &Path, lang: &str) -> PathBuf {
    work.join("corpus").join(format!("{lang}.txt"))
}

pub fn tags_file(work: &Path, lang: &str) -> PathBuf {
    work.join("corpus").join(format!("{lang}.tags"))
}

pub fn split_file(work: &Path) -> PathBuf {
    work.join("corpus").join("split.tsv")
}

/// `count>5` becomes `count-gt-5` so that it is usable as a path.
pub fn lexicon_slug(mode: LexiconMode) -> String {
    mode.to_string().replace('>', "-gt-")
}

pub fn lexicon_file(work: &Path, mode: LexiconMode, lang: &str) -> PathBuf {
    work.join("lexicon").join(lexicon_slug(mode)).join(format!("{lang}.lex"))
}

/// Directional input files of a pair (`a < b`): `a-b.fwd` holds links from
/// `a` to `b`, `a-b.rev` the reverse run as `j-i`.
pub fn directional_files(align_dir: &Path, a: &str, b: &str) -> (PathBuf, PathBuf) {
    (align_dir.join(format!("{a}-{b}.fwd")), align_dir.join(format!("{a}-{b}.rev")))
}

pub fn alignment_file(work: &Path, a: &str, b: &str) -> PathBuf {
    work.join("align").join(format!("{a}-{b}.align"))
}

pub fn sets_file(work: &Path, langs: &[String]) -> PathBuf {
    work.join("align").join(format!("sets-{}.txt", langs.join("+")))
}

pub fn run_name(model: &str, langs: &[String], mode: LexiconMode) -> String {
    format!("{model}_{}_{}", langs.join("+"), lexicon_slug(mode))
}

pub fn run_dir(work: &Path, name: &str) -> PathBuf {
    work.join("runs").join(name)
}

pub fn seed_dir(work: &Path, name: &str, seed: u64) -> PathBuf {
    run_dir(work, name).join(format!("seed{seed}"))
}

pub fn model_run_name(model: ModelKind, langs: &[String], mode: LexiconMode) -> String {
    run_name(model.name(), langs, mode)
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
