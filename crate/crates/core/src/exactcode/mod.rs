//! Exact collaborative regenerating code built on Reed-Solomon columns
//! (`d = k = kappa`, minimum storage point).
//!
//! The object is a `t x kappa` matrix `O`; node `i` stores `O g_i` where
//! `g_i` is the `i`-th generator column. Node ids are 1-based.

mod repair;

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::galois::{Field, FieldElement, FieldMatrix, GaloisError, RsCode};

pub use repair::{
    collaborative_repair, progressive_repair_with_digests, Behavior, NewcomerCost, RepairOptions,
    RepairReport, SelfishLivePolicy, Transfer, TransferKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactCodeError {
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error("insufficient data: need {needed} blocks, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("repair failure: {0}")]
    RepairFailure(String),
}

/// The `t x kappa` object matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMatrix {
    pieces: FieldMatrix,
}

impl ObjectMatrix {
    pub fn new(pieces: FieldMatrix) -> Self {
        ObjectMatrix { pieces }
    }

    pub fn zeros(field: Field, t: usize, kappa: usize) -> Self {
        ObjectMatrix::new(FieldMatrix::zeros(field, t, kappa))
    }

    pub fn random<R: Rng + ?Sized>(field: Field, t: usize, kappa: usize, rng: &mut R) -> Self {
        let values = (0..t * kappa).map(|_| rng.gen_range(0..field.order()) as u16).collect();
        ObjectMatrix::new(FieldMatrix::from_values(field, t, kappa, values).expect("shape matches"))
    }

    pub fn field(&self) -> Field {
        self.pieces.field()
    }

    pub fn t(&self) -> usize {
        self.pieces.rows()
    }

    pub fn kappa(&self) -> usize {
        self.pieces.cols()
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.pieces
    }

    /// Object size in pieces.
    pub fn size(&self) -> usize {
        self.t() * self.kappa()
    }

    /// Block node `node_id` must store.
    pub fn block_for(&self, code: &RsCode, node_id: usize) -> Result<NodeBlock, ExactCodeError> {
        check_node(code, node_id)?;
        let g = code.column(node_id - 1);
        let f = self.field();
        let payload = (0..self.t())
            .map(|r| f.raw_elem(f.dot_raw(self.pieces.row(r), &g)))
            .collect();
        Ok(NodeBlock { node_id, payload })
    }
}

/// What one node stores: `t` symbols, entry `r` being `o_r . g_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBlock {
    pub node_id: usize,
    pub payload: Vec<FieldElement>,
}

impl NodeBlock {
    /// Field exponent, node id, kappa and t (u32 LE), then each payload
    /// symbol as a little-endian integer of `ceil(m/8)` bytes.
    pub fn canonical_bytes(&self, kappa: usize) -> Vec<u8> {
        let field = self.payload.first().map_or_else(Field::gf8, |e| e.field());
        let width = field.symbol_bytes();
        let mut out = Vec::with_capacity(13 + width * self.payload.len());
        out.push(field.exponent());
        out.extend_from_slice(&(self.node_id as u32).to_le_bytes());
        out.extend_from_slice(&(kappa as u32).to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        for e in &self.payload {
            out.extend_from_slice(&e.value().to_le_bytes()[..width]);
        }
        out
    }

    pub fn digest(&self, kappa: usize) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes(kappa)).into()
    }

    fn values(&self) -> Vec<u16> {
        self.payload.iter().map(|e| e.value()).collect()
    }
}

/// Digest of every legitimate block, keyed by `(object id, node id)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FragmentDigestTable {
    kappa: usize,
    entries: BTreeMap<(u64, usize), [u8; 32]>,
}

impl FragmentDigestTable {
    pub fn new(kappa: usize) -> Self {
        FragmentDigestTable {
            kappa,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_blocks(object_id: u64, kappa: usize, blocks: &[NodeBlock]) -> Self {
        let mut table = FragmentDigestTable::new(kappa);
        for b in blocks {
            table.insert(object_id, b);
        }
        table
    }

    pub fn insert(&mut self, object_id: u64, block: &NodeBlock) {
        self.entries.insert((object_id, block.node_id), block.digest(self.kappa));
    }

    pub fn get(&self, object_id: u64, node_id: usize) -> Option<&[u8; 32]> {
        self.entries.get(&(object_id, node_id))
    }

    pub fn verify(&self, object_id: u64, block: &NodeBlock) -> bool {
        self.get(object_id, block.node_id)
            .is_some_and(|d| *d == block.digest(self.kappa))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_node(code: &RsCode, node_id: usize) -> Result<(), ExactCodeError> {
    if node_id == 0 || node_id > code.n() {
        return Err(ExactCodeError::InvalidInput(format!(
            "node id {node_id} outside 1..={}",
            code.n()
        )));
    }
    Ok(())
}

fn check_object(obj: &ObjectMatrix, code: &RsCode) -> Result<(), ExactCodeError> {
    if obj.kappa() != code.kappa() || obj.field() != code.field() {
        return Err(GaloisError::DimensionMismatch(format!(
            "object is {}x{} over GF(2^{}), code has kappa={} over GF(2^{})",
            obj.t(),
            obj.kappa(),
            obj.field().exponent(),
            code.kappa(),
            code.field().exponent()
        ))
        .into());
    }
    Ok(())
}

/// Blocks for nodes `1..=n`.
pub fn encode_object(obj: &ObjectMatrix, code: &RsCode) -> Result<Vec<NodeBlock>, ExactCodeError> {
    check_object(obj, code)?;
    (1..=code.n()).map(|i| obj.block_for(code, i)).collect()
}

fn check_blocks(code: &RsCode, blocks: &[NodeBlock]) -> Result<usize, ExactCodeError> {
    let t = blocks.first().map_or(0, |b| b.payload.len());
    let mut seen = HashMap::new();
    for b in blocks {
        check_node(code, b.node_id)?;
        if seen.insert(b.node_id, ()).is_some() {
            return Err(GaloisError::DuplicatePosition(b.node_id - 1).into());
        }
        if b.payload.len() != t || t == 0 {
            return Err(ExactCodeError::InvalidInput("blocks must all hold t >= 1 symbols".into()));
        }
        if let Some(e) = b.payload.iter().find(|e| e.field() != code.field()) {
            return Err(GaloisError::FieldMismatch {
                left: code.field().exponent(),
                right: e.field().exponent(),
            }
            .into());
        }
    }
    Ok(t)
}

fn solve_subset(code: &RsCode, blocks: &[&NodeBlock], t: usize) -> Result<ObjectMatrix, ExactCodeError> {
    let kappa = code.kappa();
    let positions: Vec<usize> = blocks.iter().map(|b| b.node_id - 1).collect();
    let mut observed = FieldMatrix::zeros(code.field(), t, kappa);
    for (c, b) in blocks.iter().enumerate() {
        for (r, e) in b.payload.iter().enumerate() {
            observed.set_raw(r, c, e.value());
        }
    }
    Ok(ObjectMatrix::new(code.interpolate(&positions, &observed)?))
}

/// Recovers `O` from the first `kappa` blocks.
pub fn collect(code: &RsCode, blocks: &[NodeBlock]) -> Result<ObjectMatrix, ExactCodeError> {
    if blocks.len() < code.kappa() {
        return Err(ExactCodeError::InsufficientData {
            needed: code.kappa(),
            available: blocks.len(),
        });
    }
    let t = check_blocks(code, blocks)?;
    let chosen: Vec<&NodeBlock> = blocks[..code.kappa()].iter().collect();
    solve_subset(code, &chosen, t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Collected {
    Recovered { object: ObjectMatrix, agreement: usize },
    /// No candidate reached the required strict majority.
    Ambiguous { best_agreement: usize, candidates: usize },
}

impl Collected {
    pub fn object(&self) -> Option<&ObjectMatrix> {
        match self {
            Collected::Recovered { object, .. } => Some(object),
            Collected::Ambiguous { .. } => None,
        }
    }
}

/// Interpolates every `kappa`-subset and keeps the candidate most blocks
/// agree with. It is accepted only if at least `kappa + max_polluters`
/// blocks agree, at most `max_polluters` disagree, and no other candidate
/// ties it.
pub fn collect_robust(
    code: &RsCode,
    blocks: &[NodeBlock],
    max_polluters: usize,
) -> Result<Collected, ExactCodeError> {
    let kappa = code.kappa();
    if blocks.len() < kappa {
        return Err(ExactCodeError::InsufficientData {
            needed: kappa,
            available: blocks.len(),
        });
    }
    let t = check_blocks(code, blocks)?;
    let field = code.field();
    let columns: Vec<Vec<u16>> = blocks.iter().map(|b| code.column(b.node_id - 1)).collect();
    let observed: Vec<Vec<u16>> = blocks.iter().map(NodeBlock::values).collect();
    let mut candidates: Vec<(ObjectMatrix, usize)> = Vec::new();
    let mut seen = HashMap::new();
    for subset in (0..blocks.len()).combinations(kappa) {
        let chosen: Vec<&NodeBlock> = subset.iter().map(|&i| &blocks[i]).collect();
        let obj = solve_subset(code, &chosen, t)?;
        if seen.insert(obj.matrix().values().to_vec(), ()).is_some() {
            continue;
        }
        let agreement = columns
            .iter()
            .zip(&observed)
            .filter(|(g, y)| (0..t).all(|r| field.dot_raw(obj.matrix().row(r), g) == y[r]))
            .count();
        candidates.push((obj, agreement));
    }
    let best = candidates.iter().map(|c| c.1).max().unwrap_or(0);
    let leaders = candidates.iter().filter(|c| c.1 == best).count();
    let accepted = leaders == 1 && best >= kappa + max_polluters && blocks.len() - best <= max_polluters;
    if accepted {
        let (object, agreement) = candidates.into_iter().find(|c| c.1 == best).expect("leader exists");
        Ok(Collected::Recovered { object, agreement })
    } else {
        Ok(Collected::Ambiguous {
            best_agreement: best,
            candidates: candidates.len(),
        })
    }
}
