//! A toy proof-of-work miner.
//!
//! Each worker runs `&{ ?block. accept(?unit.end). +{ !uint.goto0, goto0 }, end }`:
//! it receives a block and a stop channel, then searches its share of the
//! nonce space until it either finds a nonce or sees the stop message.

use std::sync::mpsc;
use std::time::Duration;

use log::{debug, info};
use sessio::types::{
    deleg, end, goto0, offer, recv, select, send, val, Deleg, DelegRecv, Dual, Eps, Goto0, Offer, Recv,
    Select, Send,
};
use sessio::{when_any, Branch, Completion, Payload, PayloadDescriptor, PayloadValue, Repr, Result, Session, SessionError, TraceLog};
use sha2::{Digest, Sha256};

use crate::parallel::parallel;

pub const MAX_DIFFICULTY: u8 = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlockError {
    #[error("difficulty {0} exceeds {MAX_DIFFICULTY}")]
    Difficulty(u8),
    #[error("invalid hex header: {0}")]
    Hex(#[from] hex::FromHexError),
}

/// A block header to mine and the number of leading zero bits required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    header: Vec<u8>,
    difficulty: u8,
}

impl Block {
    pub fn new(header: Vec<u8>, difficulty: u8) -> Result<Self, BlockError> {
        if difficulty > MAX_DIFFICULTY {
            return Err(BlockError::Difficulty(difficulty));
        }
        Ok(Block { header, difficulty })
    }

    pub fn from_hex(line: &str, difficulty: u8) -> Result<Self, BlockError> {
        Block::new(hex::decode(line.trim())?, difficulty)
    }

    pub fn header(&self) -> &[u8] {
        &self.header
    }

    pub fn difficulty(&self) -> u8 {
        self.difficulty
    }

    /// SHA-256 of the header followed by the little-endian nonce.
    pub fn hash(&self, nonce: u32) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(&self.header);
        h.update(nonce.to_le_bytes());
        h.finalize().into()
    }

    pub fn accepts(&self, nonce: u32) -> bool {
        leading_zero_bits(&self.hash(nonce)) >= u32::from(self.difficulty)
    }
}

/// Deterministic 80-byte sample headers; `difficulty` is capped at
/// [`MAX_DIFFICULTY`].
pub fn sample_blocks(count: usize, difficulty: u8) -> Vec<Block> {
    (0..count)
        .map(|i| {
            let header = (0..80u32).map(|b| (b * 31 + i as u32 * 97 + 7) as u8).collect();
            Block::new(header, difficulty.min(MAX_DIFFICULTY)).expect("difficulty clamped")
        })
        .collect()
}

pub fn leading_zero_bits(digest: &[u8]) -> u32 {
    let mut n = 0;
    for &b in digest {
        if b == 0 {
            n += 8;
        } else {
            return n + b.leading_zeros();
        }
    }
    n
}

/// Travels as `bytes` (header then one difficulty byte) under its own tag.
impl Payload for Block {
    fn descriptor() -> PayloadDescriptor {
        PayloadDescriptor::custom("block", Repr::Bytes)
    }

    fn into_value(self) -> PayloadValue {
        let mut bytes = self.header;
        bytes.push(self.difficulty);
        PayloadValue::Bytes(bytes)
    }

    fn from_value(value: PayloadValue) -> Option<Self> {
        match value {
            PayloadValue::Bytes(mut bytes) => {
                let difficulty = bytes.pop()?;
                Block::new(bytes, difficulty).ok()
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("worker exhausted its share of the nonce space")]
pub struct NonceExhausted;

/// One worker's search: nonces `id, id + stride, id + 2 * stride, ...`.
#[derive(Debug)]
pub struct MinerState {
    block: Block,
    next: u64,
    stride: u64,
    tested: Option<Vec<u32>>,
}

impl MinerState {
    pub fn new(block: Block, worker_id: u32, stride: u32) -> Self {
        assert!(stride > 0 && worker_id < stride, "worker id must be below the stride");
        MinerState {
            block,
            next: u64::from(worker_id),
            stride: u64::from(stride),
            tested: None,
        }
    }

    /// Keeps every tested nonce, for disjointness checks.
    pub fn recording(mut self) -> Self {
        self.tested = Some(Vec::new());
        self
    }

    pub fn tested(&self) -> &[u32] {
        self.tested.as_deref().unwrap_or(&[])
    }

    pub fn into_tested(self) -> Vec<u32> {
        self.tested.unwrap_or_default()
    }

    pub fn test_next_nonce(&mut self) -> Result<(bool, u32), NonceExhausted> {
        let nonce = u32::try_from(self.next).map_err(|_| NonceExhausted)?;
        self.next += self.stride;
        if let Some(t) = &mut self.tested {
            t.push(nonce);
        }
        Ok((self.block.accepts(nonce), nonce))
    }
}

pub type MinerClient = Select<Send<Block, Deleg<Recv<(), Eps>, Send<(), Eps>, Offer<Recv<u32, Goto0>, Goto0>>>, Eps>;
pub type MinerServer = Offer<Recv<Block, DelegRecv<Recv<(), Eps>, Select<Send<u32, Goto0>, Goto0>>>, Eps>;

pub fn protocol() -> Dual<MinerClient, MinerServer> {
    select(
        send(
            val::<Block>(),
            deleg(recv(val::<()>(), end()), offer(recv(val::<u32>(), goto0()), goto0())),
        ),
        end(),
    )
}

/// Serves blocks until told to terminate; returns the nonces it tested
/// (empty unless `record`).
pub fn worker(mut s: Session<MinerServer, MinerServer>, id: u32, stride: u32, record: bool) -> Result<Vec<u32>> {
    let mut tested = Vec::new();
    loop {
        let k = match s.branch()? {
            Branch::Left(k) => k,
            Branch::Right(k) => {
                k.close()?;
                debug!("worker {id} done");
                return Ok(tested);
            }
        };
        let (block, k) = k.receive()?;
        let (stop_ch, k) = k.deleg_recv()?;
        let (stop, stop_ch) = stop_ch.receive_async()?;
        stop_ch.close()?;
        let mut miner = MinerState::new(block, id, stride);
        if record {
            miner = miner.recording();
        }
        s = loop {
            match miner.test_next_nonce() {
                Ok((true, nonce)) => {
                    debug!("worker {id} found {nonce}");
                    break k.select_left()?.send(nonce)?.goto()?;
                }
                Ok((false, _)) if !stop.is_completed() => {}
                Ok((false, _)) => break k.select_right()?.goto()?,
                Err(NonceExhausted) => {
                    stop.wait()?;
                    break k.select_right()?.goto()?;
                }
            }
        };
        tested.extend(miner.into_tested());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Found {
    pub block: usize,
    pub nonce: u32,
    pub worker: usize,
}

#[derive(Debug)]
pub struct MinerReport {
    pub found: Vec<Found>,
    /// Nonces tested by each worker, across all blocks (when recording).
    pub tested: Vec<Vec<u32>>,
    pub client_traces: Vec<TraceLog>,
    pub server_traces: Vec<TraceLog>,
}

/// Mines `blocks` one after another with `threads` workers.
pub fn run_miner(threads: usize, blocks: &[Block], record_tested: bool) -> Result<MinerReport> {
    assert!(threads >= 1, "need at least one worker");
    let stride = u32::try_from(threads).map_err(|_| SessionError::Spawn("too many workers".into()))?;
    let server_traces: Vec<TraceLog> = (0..threads).map(|_| TraceLog::new()).collect();
    let (done_tx, done_rx) = mpsc::channel();
    let params: Vec<_> = server_traces.iter().cloned().enumerate().collect();
    let mut chans = parallel(&protocol(), params, move |s, (id, log)| {
        s.record_into(&log);
        let r = worker(s, id as u32, stride, record_tested);
        let _ = done_tx.send((id, r));
    })?;
    let client_traces: Vec<TraceLog> = (0..threads).map(|_| TraceLog::new()).collect();
    for (c, log) in chans.iter().zip(&client_traces) {
        c.record_into(log);
    }

    let mut found = Vec::new();
    for (bi, block) in blocks.iter().enumerate() {
        let mut pending = Vec::with_capacity(threads);
        let mut cancels = Vec::with_capacity(threads);
        for c in chans.drain(..) {
            let (k, cancel) = c.select_left()?.send(block.clone())?.deleg_new()?;
            pending.push(k.offer_async()?);
            cancels.push(cancel);
        }
        let refs: Vec<&dyn Completion> = pending.iter().map(|p| p as &dyn Completion).collect();
        let first = when_any(&refs).expect("at least one worker");
        for cancel in cancels {
            cancel.send(())?.close()?;
        }
        for (w, p) in pending.into_iter().enumerate() {
            let next = match p.wait()? {
                Branch::Left(k) => {
                    let (nonce, k) = k.receive()?;
                    if w == first {
                        info!("block {bi}: nonce {nonce} from worker {w}");
                        found.push(Found { block: bi, nonce, worker: w });
                    }
                    k.goto()?
                }
                Branch::Right(k) => k.goto()?,
            };
            chans.push(next);
        }
    }
    for c in chans {
        c.select_right()?.close()?;
    }

    let mut tested = vec![Vec::new(); threads];
    for _ in 0..threads {
        let (id, r) = done_rx
            .recv_timeout(Duration::from_secs(30))
            .map_err(|_| SessionError::Disconnected)?;
        tested[id] = r?;
    }
    Ok(MinerReport {
        found,
        tested,
        client_traces,
        server_traces,
    })
}
