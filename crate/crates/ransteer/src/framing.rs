use std::io::{self, Read, Write};

use ransteer_core::harness::WireMessage;

use crate::{Error, Result};

/// Frames larger than this are refused before any allocation.
pub const MAX_FRAME_LEN: u32 = 64 << 20;

/// Writes one message as a 4-byte big-endian length followed by its JSON text.
pub fn write_frame<W: Write>(w: &mut W, msg: &WireMessage) -> Result<()> {
    let payload = serde_json::to_vec(msg)?;
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME_LEN)
        .ok_or_else(|| Error::Frame { reason: format!("outgoing frame of {} bytes", payload.len()), bytes: Vec::new() })?;
    w.write_all(&len.to_be_bytes()).map_err(Error::Connection)?;
    w.write_all(&payload).map_err(Error::Connection)?;
    w.flush().map_err(Error::Connection)
}

fn preview(bytes: &[u8]) -> String {
    String::from_utf8_lossy(&bytes[..bytes.len().min(256)]).into_owned()
}

/// Reads one message. `Ok(None)` means the peer closed the stream cleanly
/// between frames; a stream cut inside a frame is a connection error.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<WireMessage>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Connection(io::ErrorKind::UnexpectedEof.into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::Connection(e)),
        }
    }
    let n = u32::from_be_bytes(len);
    if n > MAX_FRAME_LEN {
        return Err(Error::Frame { reason: format!("declared length {n} exceeds {MAX_FRAME_LEN}"), bytes: len.to_vec() });
    }
    let mut payload = vec![0u8; n as usize];
    r.read_exact(&mut payload).map_err(Error::Connection)?;
    let msg: WireMessage = serde_json::from_slice(&payload).map_err(|e| {
        log::error!("rejected frame: {e}; payload {:?}", preview(&payload));
        Error::Frame { reason: e.to_string(), bytes: payload.clone() }
    })?;
    if !msg.is_well_formed() {
        log::error!("rejected frame: {:?} with a mismatched body; payload {:?}", msg.kind, preview(&payload));
        return Err(Error::Frame { reason: format!("{:?} frame with a mismatched body", msg.kind), bytes: payload });
    }
    Ok(Some(msg))
}
