//! Little-endian binary encoding helpers shared by the checkpoint and
//! trajectory containers.
//!
//! All multi-byte values are little-endian. Strings and float arrays are
//! length-prefixed with a `u32`/`u64` count so containers stay
//! self-describing.

use byteorder::{ReadBytesExt, WriteBytesExt, LE};
use std::io::Read;

use crate::error::{ArenaError, Result};

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_bool(&mut self, v: bool) {
        self.buf.push(v as u8);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.write_u32::<LE>(v).expect("vec write");
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.write_u64::<LE>(v).expect("vec write");
    }

    pub fn put_u128(&mut self, v: u128) {
        self.buf.write_u128::<LE>(v).expect("vec write");
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.write_f64::<LE>(v).expect("vec write");
    }

    pub fn put_f64s(&mut self, vs: &[f64]) {
        self.put_u64(vs.len() as u64);
        for &v in vs {
            self.put_f64(v);
        }
    }

    pub fn put_bytes(&mut self, bs: &[u8]) {
        self.put_u64(bs.len() as u64);
        self.buf.extend_from_slice(bs);
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_bytes(s.as_bytes());
    }
}

impl Default for Writer {
    fn default() -> Self {
        Self::new()
    }
}

pub struct Reader<'a> {
    cur: std::io::Cursor<&'a [u8]>,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Reader {
            cur: std::io::Cursor::new(bytes),
        }
    }

    pub fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }

    fn truncated<T>() -> Result<T> {
        Err(ArenaError::Format("truncated container".into()))
    }

    pub fn get_u8(&mut self) -> Result<u8> {
        self.cur.read_u8().or_else(|_| Self::truncated())
    }

    pub fn get_bool(&mut self) -> Result<bool> {
        Ok(self.get_u8()? != 0)
    }

    pub fn get_u32(&mut self) -> Result<u32> {
        self.cur.read_u32::<LE>().or_else(|_| Self::truncated())
    }

    pub fn get_u64(&mut self) -> Result<u64> {
        self.cur.read_u64::<LE>().or_else(|_| Self::truncated())
    }

    pub fn get_u128(&mut self) -> Result<u128> {
        self.cur.read_u128::<LE>().or_else(|_| Self::truncated())
    }

    pub fn get_f64(&mut self) -> Result<f64> {
        self.cur.read_f64::<LE>().or_else(|_| Self::truncated())
    }

    pub fn get_f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.get_u64()? as usize;
        if n * 8 > self.remaining() {
            return Self::truncated();
        }
        let mut out = vec![0.0; n];
        for v in out.iter_mut() {
            *v = self.get_f64()?;
        }
        Ok(out)
    }

    pub fn get_bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.get_u64()? as usize;
        if n > self.remaining() {
            return Self::truncated();
        }
        let mut out = vec![0u8; n];
        self.cur
            .read_exact(&mut out)
            .or_else(|_| Self::truncated())?;
        Ok(out)
    }

    pub fn get_str(&mut self) -> Result<String> {
        let bytes = self.get_bytes()?;
        String::from_utf8(bytes).map_err(|_| ArenaError::Format("invalid utf-8 string".into()))
    }
}
