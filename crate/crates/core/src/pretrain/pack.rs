use crate::error::{Error, Result};

/// Concatenates documents with `separator_id` between them and cuts the
/// stream into `sequence_length` blocks; the last block is padded.
/// Empty documents are dropped.
pub fn pack_sequences(
    documents: &[Vec<u32>],
    sequence_length: usize,
    separator_id: u32,
    pad_id: u32,
) -> Result<Vec<Vec<u32>>> {
    if sequence_length == 0 {
        return Err(Error::invalid("sequence_length must be positive"));
    }
    let mut stream: Vec<u32> = Vec::new();
    for doc in documents.iter().filter(|d| !d.is_empty()) {
        if !stream.is_empty() {
            stream.push(separator_id);
        }
        stream.extend_from_slice(doc);
    }
    Ok(stream
        .chunks(sequence_length)
        .map(|chunk| {
            let mut block = chunk.to_vec();
            block.resize(sequence_length, pad_id);
            block
        })
        .collect())
}
