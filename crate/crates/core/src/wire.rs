// SPDX-License-Identifier: Apache-2.0

//! Big-endian, length-prefixed byte containers shared by every file format.

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_header(magic: &[u8; 4], version: u8) -> Self {
        let mut w = Writer::default();
        w.raw(magic);
        w.u8(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// u16 length prefix; strings are short.
    pub fn str16(&mut self, s: &str) {
        let len = u16::try_from(s.len()).expect("string longer than 65535 bytes");
        self.u16(len);
        self.raw(s.as_bytes());
    }

    /// u32 length prefix.
    pub fn bytes32(&mut self, b: &[u8]) {
        let len = u32::try_from(b.len()).expect("element longer than 4 GiB");
        self.u32(len);
        self.raw(b);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    /// Checks the magic and returns a reader positioned after the version byte.
    pub fn with_header(buf: &'a [u8], magic: &[u8; 4], version: u8) -> Result<Self> {
        let mut r = Reader::new(buf);
        let m = r.take(4)?;
        if m != magic {
            return Err(Error::CorruptContainer(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        let v = r.u8()?;
        if v != version {
            return Err(Error::VersionUnsupported(v));
        }
        Ok(r)
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::CorruptContainer("truncated".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn str16(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::CorruptContainer("string is not UTF-8".into()))
    }

    pub fn bytes32(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let out = &self.buf[self.pos..];
        self.pos = self.buf.len();
        out
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::CorruptContainer(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}
