//! Live datagram transport for the gaze wire format.

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::{decode, encode, GazeMessage, SharedGazeCell, MESSAGE_LEN};
use crate::Result;

pub const DEFAULT_ADDR: &str = "127.0.0.1:9090";

pub struct GazeSender {
    socket: UdpSocket,
    target: SocketAddr,
}

impl GazeSender {
    pub fn connect(target: impl ToSocketAddrs) -> Result<Self> {
        let target = target
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no address"))?;
        let bind: SocketAddr = if target.is_ipv4() {
            "0.0.0.0:0".parse().unwrap()
        } else {
            "[::]:0".parse().unwrap()
        };
        Ok(GazeSender {
            socket: UdpSocket::bind(bind)?,
            target,
        })
    }

    pub fn send(&self, msg: &GazeMessage) -> Result<()> {
        let bytes = encode(msg)?;
        self.socket.send_to(&bytes, self.target)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReceiverStats {
    pub received: u64,
    pub accepted: u64,
    pub stale: u64,
    pub malformed: u64,
}

/// Spawns the single writer of `cell`: it decodes datagrams from `socket`
/// until `stop` is set. Update times are microseconds since the thread
/// started.
pub fn spawn_receiver(
    socket: UdpSocket,
    cell: SharedGazeCell,
    stop: Arc<AtomicBool>,
) -> Result<JoinHandle<ReceiverStats>> {
    socket.set_read_timeout(Some(Duration::from_millis(20)))?;
    Ok(thread::spawn(move || {
        let start = Instant::now();
        let mut stats = ReceiverStats::default();
        // one spare byte so oversize datagrams are caught as length errors
        let mut buf = [0u8; MESSAGE_LEN + 1];
        while !stop.load(Ordering::Relaxed) {
            let n = match socket.recv_from(&mut buf) {
                Ok((n, _)) => n,
                Err(e)
                    if e.kind() == io::ErrorKind::WouldBlock
                        || e.kind() == io::ErrorKind::TimedOut =>
                {
                    continue
                }
                Err(e) => {
                    warn!("receive failed: {e}");
                    break;
                }
            };
            stats.received += 1;
            match decode(&buf[..n]) {
                Ok(msg) => {
                    let now_us = start.elapsed().as_micros() as u64;
                    if cell.offer(msg, now_us) {
                        stats.accepted += 1;
                    } else {
                        stats.stale += 1;
                    }
                }
                Err(e) => {
                    debug!("dropping datagram: {e}");
                    stats.malformed += 1;
                }
            }
        }
        stats
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{FLAG_VALID, VERSION};

    #[test]
    fn loopback_delivery() {
        let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
        let addr = socket.local_addr().unwrap();
        let cell = SharedGazeCell::new();
        let stop = Arc::new(AtomicBool::new(false));
        let handle = spawn_receiver(socket, cell.clone(), stop.clone()).unwrap();

        let sender = GazeSender::connect(addr).unwrap();
        for seq in [1u32, 3, 2] {
            sender
                .send(&GazeMessage {
                    version: VERSION,
                    flags: FLAG_VALID,
                    seq,
                    timestamp_us: seq as u64 * 1000,
                    x_norm: 0.25,
                    y_norm: 0.75,
                })
                .unwrap();
        }
        UdpSocket::bind("127.0.0.1:0")
            .unwrap()
            .send_to(b"garbage", addr)
            .unwrap();

        let deadline = Instant::now() + Duration::from_secs(5);
        while Instant::now() < deadline {
            if cell.snapshot().is_some_and(|(m, _)| m.seq == 3) {
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
        thread::sleep(Duration::from_millis(50));
        stop.store(true, Ordering::Relaxed);
        let stats = handle.join().unwrap();
        assert_eq!(cell.snapshot().unwrap().0.seq, 3);
        assert_eq!(stats.received, 4);
        assert_eq!(stats.accepted + stats.stale, 3);
        assert_eq!(stats.malformed, 1);
    }
}
