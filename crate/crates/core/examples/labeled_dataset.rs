// Load a labeled text dataset from JSON lines and inspect its splits.

use std::io::Cursor;

use manifold_capacity::embx::{load_labeled_dataset, Split};
use manifold_capacity::Result;

const DATA: &str = r#"{"text": "A warm, funny film.", "labels": {"sentiment": "positive", "topic": "film"}, "split": "train"}
{"text": "The match went to extra time.", "labels": {"sentiment": "neutral", "topic": "sports"}, "split": "train"}
{"text": "Dull and far too long.", "labels": {"sentiment": "negative", "topic": "film"}, "split": "test"}
{"text": "Rates rose again this quarter.", "labels": {"sentiment": "negative", "topic": "business"}, "split": "test"}
"#;

pub fn run() -> Result<()> {
    let ds = load_labeled_dataset(Cursor::new(DATA), &["sentiment", "topic"])?;
    println!("{} records", ds.len());
    for scheme in ["sentiment", "topic"] {
        println!("{scheme}: {:?}", ds.categories(scheme)?);
    }
    for r in ds.split(Split::Test)? {
        println!("test: {:?} -> {}", r.text, r.labels["topic"]);
    }

    // A record missing a required scheme is rejected with its line number.
    let bad =
        "{\"text\": \"x\", \"labels\": {\"sentiment\": \"positive\"}, \"split\": \"train\"}\n";
    let err = load_labeled_dataset(Cursor::new(bad), &["sentiment", "topic"]).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
