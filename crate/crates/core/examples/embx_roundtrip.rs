// Write a small EMBX tensor, read back just the header, then the whole file.
//
// ```text
// cargo run --example embx_roundtrip
// ```

use std::fs::File;
use std::io::BufReader;

use manifold_capacity::embx::{
    read_embx_file, read_header, write_embx_file, Condition, EmbeddingKind, EmbeddingTensor,
    EmbxHeader, Shape,
};
use manifold_capacity::Result;

pub fn run() -> Result<()> {
    // Two layers, four sentences, three-dimensional embeddings.
    let shape = Shape::new(2, 4, 3);
    let mut header = EmbxHeader::new(shape, EmbeddingKind::LastToken, Condition::Instruction);
    header.model_name = "toy-lm".into();
    header
        .condition_params
        .insert("task".into(), "sentiment".into());
    header.label_schemes.insert(
        "sentiment_gold".into(),
        vec!["pos".into(), "neg".into(), "pos".into(), "neg".into()],
    );
    let data: Vec<f32> = (0..shape.num_values()).map(|i| i as f32 * 0.25).collect();
    let tensor = EmbeddingTensor::new(header, data)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("toy.embx");
    let bytes = write_embx_file(&tensor, &path)?;
    println!("wrote {bytes} bytes ({} of them data)", shape.data_bytes());

    // The header can be parsed without touching the data section.
    let header = read_header(&mut BufReader::new(File::open(&path)?))?;
    println!("condition: {}", header.condition_descriptor());
    println!("labels: {:?}", header.labels("sentiment_gold")?);

    let back = read_embx_file(&path)?;
    assert_eq!(back, tensor);
    println!("layer 1, point 2: {:?}", back.point(1, 2)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
