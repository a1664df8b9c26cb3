//! Reader for the EAX test-vector file format:
//! one record per line, comma-separated hex fields KEY,NONCE,HEADER,MSG,CIPHER.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EaxVector {
    pub key: Vec<u8>,
    pub nonce: Vec<u8>,
    pub header: Vec<u8>,
    pub msg: Vec<u8>,
    pub cipher: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("line {0}: expected 5 comma-separated fields")]
    FieldCount(usize),
    #[error("line {0}: invalid hex")]
    BadHex(usize),
}

pub fn parse_vectors(text: &str) -> Result<Vec<EaxVector>, VectorError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(VectorError::FieldCount(i + 1));
        }
        let dec =
            |s: &str| hex::decode(s).map_err(|_| VectorError::BadHex(i + 1));
        out.push(EaxVector {
            key: dec(fields[0])?,
            nonce: dec(fields[1])?,
            header: dec(fields[2])?,
            msg: dec(fields[3])?,
            cipher: dec(fields[4])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_skips_comments() {
        let vecs = parse_vectors("# comment\naa,bb,,cc,dd\n\n").unwrap();
        assert_eq!(vecs.len(), 1);
        assert!(vecs[0].header.is_empty());
    }

    #[test]
    fn rejects_bad_field_count() {
        assert!(matches!(parse_vectors("aa,bb,cc"), Err(VectorError::FieldCount(1))));
    }
}
