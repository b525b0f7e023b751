use crate::error::{Error, Result};

/// MSB-first bit packer.
#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn put(&mut self, value: u32, width: u32) -> Result<()> {
        if width < 32 && value >> width != 0 {
            return Err(Error::Decode(format!("value {value} does not fit in {width} bits")));
        }
        for b in (0..width).rev() {
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if (value >> b) & 1 == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
        Ok(())
    }

    pub fn bit_len(&self) -> usize {
        self.len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub(crate) struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn get(&mut self, width: u32) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..width {
            let byte = self
                .bytes
                .get(self.pos / 8)
                .ok_or_else(|| Error::Decode("bitstream truncated".into()))?;
            v = (v << 1) | u32::from((byte >> (7 - self.pos % 8)) & 1);
            self.pos += 1;
        }
        Ok(v)
    }

    /// Remaining bits must be zero padding inside the final byte.
    pub fn finish(self) -> Result<()> {
        if self.bytes.len() != self.pos.div_ceil(8) {
            return Err(Error::Decode(format!(
                "expected {} bytes, found {}",
                self.pos.div_ceil(8),
                self.bytes.len()
            )));
        }
        if self.pos % 8 != 0 {
            let last = self.bytes[self.bytes.len() - 1];
            if last & (0xFF >> (self.pos % 8)) != 0 {
                return Err(Error::Decode("nonzero padding bits".into()));
            }
        }
        Ok(())
    }
}
