//! Textual genome forms.
//!
//! A genome can be given as
//!
//! - `{"digits": [...]}`: the canonical digit vector,
//! - `{"packed": ["6", "0", ...]}`: packed genes as decimal strings,
//! - both at once (they must agree),
//! - a packed CSV line such as `6,0,0,0,0,0,0,0,0`.

use std::str::FromStr;

use cellspace_core::genome::{pack, unpack, CodecError};
use cellspace_core::{BigUint, DigitGenome, GenomeLayout, PackedGenome};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GenomeInputError {
    #[error("genome JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("genome needs \"digits\" or \"packed\"")]
    Missing,
    #[error("packed gene {index} is not a decimal integer: {text:?}")]
    BadGene { index: usize, text: String },
    #[error("\"digits\" and \"packed\" describe different genomes")]
    Disagree,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Both forms of one genome, as written to JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packed: Option<Vec<String>>,
}

impl GenomeDoc {
    pub fn of(genome: &DigitGenome, layout: &GenomeLayout) -> Self {
        GenomeDoc {
            digits: Some(genome.digits().to_vec()),
            packed: Some(packed_strings(genome, layout)),
        }
    }

    pub fn resolve(&self, layout: &GenomeLayout) -> Result<DigitGenome, GenomeInputError> {
        let from_digits = self
            .digits
            .as_ref()
            .map(|d| DigitGenome::new(d.clone(), layout))
            .transpose()?;
        let from_packed = self
            .packed
            .as_ref()
            .map(|genes| unpack_strings(genes.iter().map(String::as_str), layout))
            .transpose()?;
        match (from_digits, from_packed) {
            (Some(a), Some(b)) if a != b => Err(GenomeInputError::Disagree),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(GenomeInputError::Missing),
        }
    }
}

pub fn packed_strings(genome: &DigitGenome, layout: &GenomeLayout) -> Vec<String> {
    pack(genome, layout)
        .expect("genome matches its layout")
        .genes
        .iter()
        .map(BigUint::to_string)
        .collect()
}

/// Packed genes joined by commas.
pub fn packed_csv(genome: &DigitGenome, layout: &GenomeLayout) -> String {
    packed_strings(genome, layout).join(",")
}

fn unpack_strings<'a>(
    genes: impl Iterator<Item = &'a str>,
    layout: &GenomeLayout,
) -> Result<DigitGenome, GenomeInputError> {
    let genes = genes
        .enumerate()
        .map(|(index, text)| {
            let t = text.trim();
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(GenomeInputError::BadGene {
                    index,
                    text: text.to_string(),
                });
            }
            Ok(BigUint::from_str(t).expect("ascii digits parse"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(unpack(&PackedGenome { genes }, layout)?)
}

/// Parses any of the accepted genome forms.
pub fn parse_genome(text: &str, layout: &GenomeLayout) -> Result<DigitGenome, GenomeInputError> {
    let t = text.trim();
    if t.starts_with('{') {
        let doc: GenomeDoc = serde_json::from_str(t)?;
        doc.resolve(layout)
    } else if t.starts_with('[') {
        let digits: Vec<u32> = serde_json::from_str(t)?;
        Ok(DigitGenome::new(digits, layout)?)
    } else {
        unpack_strings(t.split(','), layout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cellspace_core::genome::random_genome;
    use cellspace_core::SearchConfig;

    fn layout() -> GenomeLayout {
        GenomeLayout::new(SearchConfig::reference_default().params())
    }

    #[test]
    fn structure_digits_two_one_pack_to_six() {
        let layout = layout();
        let mut digits = vec![0u32; layout.len()];
        digits[0] = 2;
        digits[1] = 1;
        let g = DigitGenome::new(digits, &layout).unwrap();
        assert_eq!(packed_csv(&g, &layout), "6,0,0,0,0,0,0,0,0");
        assert_eq!(parse_genome("6,0,0,0,0,0,0,0,0", &layout).unwrap(), g);
    }

    #[test]
    fn every_form_parses_to_the_same_genome() {
        let layout = layout();
        let g = random_genome(3, layout.params());
        let doc = GenomeDoc::of(&g, &layout);
        let both = serde_json::to_string(&doc).unwrap();
        let digits_only = serde_json::to_string(&GenomeDoc {
            packed: None,
            ..doc.clone()
        })
        .unwrap();
        let packed_only = serde_json::to_string(&GenomeDoc {
            digits: None,
            ..doc
        })
        .unwrap();
        let bare = serde_json::to_string(g.digits()).unwrap();
        for text in [
            both,
            digits_only,
            packed_only,
            bare,
            packed_csv(&g, &layout),
        ] {
            assert_eq!(parse_genome(&text, &layout).unwrap(), g, "{text}");
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let layout = layout();
        assert!(matches!(
            parse_genome("{}", &layout),
            Err(GenomeInputError::Missing)
        ));
        assert!(matches!(
            parse_genome("6,x,0,0,0,0,0,0,0", &layout),
            Err(GenomeInputError::BadGene { index: 1, .. })
        ));
        assert!(parse_genome("16,0,0,0,0,0,0,0,0", &layout).is_err());
        assert!(parse_genome("[1,2]", &layout).is_err());
        let g = random_genome(1, layout.params());
        let mut doc = GenomeDoc::of(&g, &layout);
        let x: u32 = doc.packed.as_ref().unwrap()[0].parse().unwrap();
        doc.packed.as_mut().unwrap()[0] = ((x + 1) % 16).to_string();
        assert!(matches!(
            doc.resolve(&layout),
            Err(GenomeInputError::Disagree)
        ));
    }
}
