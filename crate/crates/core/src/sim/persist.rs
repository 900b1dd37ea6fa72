//! Binary save format. All integers little-endian; reals as IEEE-754 bits.
//!
//! ```text
//! magic "JBWSAVE\0" | u32 format version
//! section* : u64 byte length | payload
//!   config  canonical JSON
//!   clock   u64 time | u64 next agent id
//!   map     u32 patch size | u64 n | n x patch | u64 m | m x (i64 px, i64 py)   (fixed order)
//!   agents  u64 n | n x agent | u64 k | k x u64 id                               (arrival order)
//!   scent   u64 n | n x (i64 x, i64 y, u64 start, u64 end, u64 d, d x f64)
//!   rng     u64 state | u64 increment
//! 32-byte SHA-256 of everything before it
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::action::Action;
use crate::config::WorldConfig;
use crate::error::PersistError;
use crate::geom::{Direction, PatchCoord, Position};
use crate::perception::{DiffusionKernel, RetiredSource, ScentLog};
use crate::procgen::{Item, Patch, PatchStatus, WorldMap};
use crate::rng::Pcg32;

use super::{AgentState, Simulator};

pub const MAGIC: &[u8; 8] = b"JBWSAVE\0";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn pos(&mut self, p: Position) {
        self.i64(p.x);
        self.i64(p.y);
    }
    fn section(&mut self, body: Writer) {
        self.u64(body.buf.len() as u64);
        self.buf.extend_from_slice(&body.buf);
    }
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
}

fn malformed(what: &str) -> PersistError {
    PersistError::Malformed(what.to_string())
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, at: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| malformed("unexpected end of data"))?;
        let out = &self.data[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn i64(&mut self) -> Result<i64, PersistError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn pos(&mut self) -> Result<Position, PersistError> {
        Ok(Position::new(self.i64()?, self.i64()?))
    }
    /// Count prefix, sanity-checked against the remaining bytes.
    fn count(&mut self, min_elem: usize) -> Result<usize, PersistError> {
        let n = self.u64()? as usize;
        if n.saturating_mul(min_elem) > self.data.len() - self.at {
            return Err(malformed("count exceeds payload"));
        }
        Ok(n)
    }
    fn section(&mut self) -> Result<Reader<'a>, PersistError> {
        let n = self.u64()? as usize;
        Ok(Reader::new(self.take(n)?))
    }
    fn finish(&self, what: &str) -> Result<(), PersistError> {
        if self.at == self.data.len() {
            Ok(())
        } else {
            Err(malformed(&format!("trailing bytes in {what} section")))
        }
    }
}

impl Simulator {
    /// Canonical encoding of the full simulation state.
    pub fn save(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);

        let mut config = Writer::default();
        config.buf.extend_from_slice(self.config.to_json().as_bytes());
        w.section(config);

        let mut clock = Writer::default();
        clock.u64(self.time);
        clock.u64(self.next_id);
        w.section(clock);

        let mut map = Writer::default();
        map.u32(self.map.patch_size());
        map.u64(self.map.patches().count() as u64);
        for patch in self.map.patches() {
            map.i64(patch.coord().x);
            map.i64(patch.coord().y);
            map.u8(u8::from(patch.is_fixed()));
            map.u64(patch.items().len() as u64);
            for item in patch.items() {
                map.pos(item.position);
                map.u32(item.item_type);
                map.u64(item.created_at);
            }
        }
        map.u64(self.map.fixed_order().len() as u64);
        for c in self.map.fixed_order() {
            map.i64(c.x);
            map.i64(c.y);
        }
        w.section(map);

        let mut agents = Writer::default();
        agents.u64(self.agents.len() as u64);
        for a in self.agents.values() {
            agents.u64(a.id);
            agents.pos(a.position);
            agents.u8(a.direction.index());
            agents.pos(a.start);
            agents.u64(a.inventory.len() as u64);
            for &c in &a.inventory {
                agents.u32(c);
            }
            match a.pending {
                Some(action) => {
                    let (code, arg) = action.code();
                    agents.u8(1);
                    agents.u8(code);
                    agents.u32(arg);
                }
                None => agents.u8(0),
            }
            agents.f64(a.distance_max);
            agents.u64(a.scent_since);
            agents.u8(u8::from(a.last_moved));
        }
        agents.u64(self.arrivals.len() as u64);
        for &id in &self.arrivals {
            agents.u64(id);
        }
        w.section(agents);

        let mut scent = Writer::default();
        scent.u64(self.scent_log.len() as u64);
        for s in self.scent_log.sources() {
            scent.pos(s.position);
            scent.u64(s.start);
            scent.u64(s.end);
            scent.u64(s.scent.len() as u64);
            for &v in &s.scent {
                scent.f64(v);
            }
        }
        w.section(scent);

        let mut rng = Writer::default();
        let (state, inc) = self.rng.parts();
        rng.u64(state);
        rng.u64(inc);
        w.section(rng);

        let sum = Sha256::digest(&w.buf);
        w.buf.extend_from_slice(&sum);
        w.buf
    }

    pub fn load(bytes: &[u8]) -> Result<Simulator, PersistError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(PersistError::BadMagic);
        }
        if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
            return Err(PersistError::Checksum);
        }
        let (body, sum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
        if Sha256::digest(body).as_slice() != sum {
            return Err(PersistError::Checksum);
        }
        let mut r = Reader::new(&body[MAGIC.len()..]);
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(PersistError::Version { found: version, expected: FORMAT_VERSION });
        }

        let mut s = r.section()?;
        let text = std::str::from_utf8(s.take(s.data.len())?).map_err(|_| malformed("config is not UTF-8"))?;
        let config = WorldConfig::from_json(text)?;
        let types = config.item_count();

        let mut s = r.section()?;
        let time = s.u64()?;
        let next_id = s.u64()?;
        s.finish("clock")?;

        let mut s = r.section()?;
        let patch_size = s.u32()?;
        if patch_size != config.patch_size {
            return Err(malformed("patch size differs from config"));
        }
        let n = s.count(25)?;
        let mut patches = Vec::with_capacity(n);
        for _ in 0..n {
            let coord = PatchCoord::new(s.i64()?, s.i64()?);
            let status = match s.u8()? {
                1 => PatchStatus::Fixed,
                0 => PatchStatus::Speculative,
                _ => return Err(malformed("patch status")),
            };
            let m = s.count(28)?;
            let mut items = Vec::with_capacity(m);
            for _ in 0..m {
                let position = s.pos()?;
                let item_type = s.u32()?;
                if item_type as usize >= types {
                    return Err(malformed("item type out of range"));
                }
                items.push(Item::new(position, item_type, s.u64()?));
            }
            patches.push(Patch::with_items(coord, patch_size, status, items).ok_or_else(|| malformed("overlapping or misplaced items"))?);
        }
        let m = s.count(16)?;
        let mut fixed_order = Vec::with_capacity(m);
        for _ in 0..m {
            fixed_order.push(PatchCoord::new(s.i64()?, s.i64()?));
        }
        s.finish("map")?;
        let map = WorldMap::from_parts(patch_size, patches, fixed_order);
        let fixed_total = map.patches().filter(|p| p.is_fixed()).count();
        if fixed_total != map.fixed_order().len() || map.fixed_order().iter().any(|c| !map.is_fixed(*c)) {
            return Err(malformed("fixed patch order inconsistent with patches"));
        }

        let mut s = r.section()?;
        let n = s.count(8)?;
        let mut agents = BTreeMap::new();
        for _ in 0..n {
            let id = s.u64()?;
            let position = s.pos()?;
            let direction = Direction::from_index(s.u8()?).ok_or_else(|| malformed("direction"))?;
            let start = s.pos()?;
            let k = s.count(4)?;
            if k != types {
                return Err(malformed("inventory size"));
            }
            let inventory = (0..k).map(|_| s.u32()).collect::<Result<Vec<_>, _>>()?;
            let pending = match s.u8()? {
                0 => None,
                1 => {
                    let code = s.u8()?;
                    let arg = s.u32()?;
                    Some(Action::from_code(code, arg).ok_or_else(|| malformed("action code"))?)
                }
                _ => return Err(malformed("pending flag")),
            };
            let distance_max = s.f64()?;
            let scent_since = s.u64()?;
            let last_moved = s.u8()? != 0;
            agents.insert(id, AgentState { id, position, direction, start, inventory, pending, distance_max, scent_since, last_moved });
        }
        let k = s.count(8)?;
        let arrivals = (0..k).map(|_| s.u64()).collect::<Result<Vec<_>, _>>()?;
        s.finish("agents")?;
        if arrivals.iter().any(|id| agents.get(id).is_none_or(|a: &AgentState| a.pending.is_none()))
            || agents.values().filter(|a| a.pending.is_some()).count() != arrivals.len()
        {
            return Err(malformed("pending actions inconsistent with arrival order"));
        }

        let mut s = r.section()?;
        let n = s.count(40)?;
        let mut sources = Vec::with_capacity(n);
        for _ in 0..n {
            let position = s.pos()?;
            let start = s.u64()?;
            let end = s.u64()?;
            let d = s.count(8)?;
            let scent = (0..d).map(|_| s.f64()).collect::<Result<Vec<_>, _>>()?;
            sources.push(RetiredSource { position, scent, start, end });
        }
        s.finish("scent")?;

        let mut s = r.section()?;
        let rng = Pcg32::from_parts(s.u64()?, s.u64()?);
        s.finish("rng")?;
        r.finish("file")?;

        Ok(Simulator {
            kernel: DiffusionKernel::cached(config.scent_decay, config.scent_diffusion),
            config,
            map,
            agents,
            next_id,
            time,
            scent_log: ScentLog::from_sources(sources),
            rng,
            arrivals,
        })
    }

    pub fn save_to(&self, path: impl AsRef<Path>) -> Result<(), PersistError> {
        std::fs::write(path, self.save())?;
        Ok(())
    }

    pub fn load_from(path: impl AsRef<Path>) -> Result<Simulator, PersistError> {
        Simulator::load(&std::fs::read(path)?)
    }
}
