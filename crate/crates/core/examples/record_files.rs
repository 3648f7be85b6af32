//! Reading a record file, the full key-rate report, and writing the
//! record back.
//!
//! ```text
//! cargo run --release --example record_files -- crates/core/fixtures/952.rec finite
//! ```

use tfqkd::cli::{digest, fixture_text, keyrate_document, RecordFile};
use tfqkd::keyrate::key_rate;
use tfqkd::Mode;

fn main() -> tfqkd::Result<()> {
    let mut args = std::env::args().skip(1);
    let (name, text) = match args.next() {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| tfqkd::Error::Io(e.to_string()))?;
            (path, text)
        }
        None => ("1002".to_string(), fixture_text("1002")?.to_string()),
    };
    let mode = match args.next().as_deref() {
        Some("finite") => Mode::Finite,
        _ => Mode::Asymptotic,
    };

    let file = RecordFile::parse(&text, &name)?;
    assert_eq!(file.render(), text, "record files are canonical");
    let inputs = file.inputs(mode);
    let report = key_rate(&inputs)?;
    let doc = keyrate_document(&report, &inputs, &name, &digest(text.as_bytes()), file.total_atten_db)?;
    print!("{}", doc.render());
    Ok(())
}
