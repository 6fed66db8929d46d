//! Synthetic dataset, the Map/Reduce function contract, and the single-node
//! oracle every distributed run is checked against.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// ChaCha20 stream ids; each consumer of randomness owns one.
pub(crate) mod streams {
    pub const DATASET: u64 = 1;
    pub const PLACEMENT: u64 = 2;
    pub const COEFFICIENTS: u64 = 3;
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Identifier of the default Map/Reduce construction, echoed in run metadata.
pub const HASH_PRIMITIVE_ID: &str = "sha256-ctr/v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub files: Vec<Bits>,
    pub inputs: Vec<Bits>,
}

/// Files then inputs, drawn from the dataset stream of the seeded generator.
pub fn synthesize_dataset(cfg: &SystemConfig) -> Dataset {
    let mut rng = seeded_rng(cfg.seed, streams::DATASET);
    let files = (0..cfg.files)
        .map(|_| Bits::random(&mut rng, cfg.file_bits))
        .collect();
    let inputs = (0..cfg.users)
        .map(|_| Bits::random(&mut rng, cfg.input_bits))
        .collect();
    Dataset { files, inputs }
}

/// A Map/Reduce decomposition of the per-user output function.
pub trait ComputeFunctions: Send + Sync {
    /// Intermediate value of `input` on `file`; always `value_bits` long.
    fn map(&self, input: &Bits, file: &Bits) -> Bits;

    /// Output from `(file index, value)` pairs sorted by file index.
    fn reduce(&self, values: &[(usize, &Bits)]) -> Bits;

    fn identifier(&self) -> &str;
}

/// Keyed SHA-256 in counter mode for both phases.
///
/// ```text
/// map(d, w)    = H("map"    | seed | ctr | |d| | d | |w| | w)[..T]
/// reduce(vals) = H("reduce" | seed | ctr | count | (n | v_n)*)[..B]
/// ```
///
/// Integers are little-endian u64; bit strings are their canonical bytes.
#[derive(Debug, Clone)]
pub struct DefaultFunctions {
    seed: u64,
    value_bits: usize,
    output_bits: usize,
}

impl DefaultFunctions {
    pub fn new(seed: u64, value_bits: usize, output_bits: usize) -> Self {
        Self {
            seed,
            value_bits,
            output_bits,
        }
    }
}

pub fn default_compute_functions(cfg: &SystemConfig) -> DefaultFunctions {
    DefaultFunctions::new(cfg.seed, cfg.value_bits, cfg.output_bits)
}

fn expand(prefix: Sha256, body: impl Fn(&mut Sha256), bits: usize) -> Bits {
    let nbytes = bits.div_ceil(8);
    let mut out = Vec::with_capacity(nbytes + 32);
    let mut counter = 0u64;
    while out.len() < nbytes {
        let mut h = prefix.clone();
        h.update(counter.to_le_bytes());
        body(&mut h);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    Bits::from_bytes(&out, bits)
}

fn put_bits(h: &mut Sha256, b: &Bits) {
    h.update((b.len() as u64).to_le_bytes());
    h.update(b.as_bytes());
}

impl ComputeFunctions for DefaultFunctions {
    fn map(&self, input: &Bits, file: &Bits) -> Bits {
        let mut prefix = Sha256::new();
        prefix.update(b"map");
        prefix.update(self.seed.to_le_bytes());
        expand(
            prefix,
            |h| {
                put_bits(h, input);
                put_bits(h, file);
            },
            self.value_bits,
        )
    }

    fn reduce(&self, values: &[(usize, &Bits)]) -> Bits {
        let mut prefix = Sha256::new();
        prefix.update(b"reduce");
        prefix.update(self.seed.to_le_bytes());
        expand(
            prefix,
            |h| {
                h.update((values.len() as u64).to_le_bytes());
                for (n, v) in values {
                    h.update((*n as u64).to_le_bytes());
                    put_bits(h, v);
                }
            },
            self.output_bits,
        )
    }

    fn identifier(&self) -> &str {
        HASH_PRIMITIVE_ID
    }
}

/// Single-node evaluation of user `input`'s output over `available` files.
pub fn oracle_output(
    dataset: &Dataset,
    fns: &dyn ComputeFunctions,
    input: usize,
    available: &[usize],
) -> Result<Bits> {
    if available.is_empty() {
        return Err(Error::EmptyAvailableSet);
    }
    let mut files = available.to_vec();
    files.sort_unstable();
    files.dedup();
    let values: Vec<(usize, Bits)> = files
        .iter()
        .map(|&n| (n, fns.map(&dataset.inputs[input], &dataset.files[n])))
        .collect();
    let refs: Vec<(usize, &Bits)> = values.iter().map(|(n, v)| (*n, v)).collect();
    Ok(fns.reduce(&refs))
}
