use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skylink::channel::{handshake_client, handshake_server, ChannelError, RecordType};
use skylink::kem::KemScheme;
use std::io::{Read, Write};
use std::os::unix::net::UnixStream;
use std::thread;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn handshake_and_data_both_schemes() {
    for scheme in KemScheme::ALL {
        let (mut a, mut b) = UnixStream::pair().unwrap();
        let server = thread::spawn(move || {
            let mut session = handshake_server(&mut b, &KemScheme::ALL, &mut rng(1)).unwrap();
            let record = skylink::channel::Record::read_from(&mut b).unwrap();
            let frame = skylink::channel::Frame::from_record(&record).unwrap();
            session.open_frame(&frame).unwrap()
        });

        let mut session = handshake_client(&mut a, &[scheme], &mut rng(2)).unwrap();
        assert_eq!(session.scheme(), scheme);
        let frame = session
            .seal_frame(RecordType::Data, b"file=alpha", b"hello over the air")
            .unwrap();
        a.write_all(&frame.encode()).unwrap();
        assert_eq!(server.join().unwrap(), b"hello over the air");
    }
}

#[test]
fn client_and_server_derive_identical_keys() {
    let (mut a, mut b) = UnixStream::pair().unwrap();
    let server =
        thread::spawn(move || handshake_server(&mut b, &KemScheme::ALL, &mut rng(3)).unwrap());
    let client = handshake_client(&mut a, &[KemScheme::MlKem512], &mut rng(4)).unwrap();
    let server = server.join().unwrap();
    assert_eq!(client.key_bytes(), server.key_bytes());
    assert_eq!(client.transcript_hash(), server.transcript_hash());
    let (c2s, s2c) = client.key_bytes();
    assert_ne!(c2s, s2c);
}

#[test]
fn no_common_scheme_is_rejected() {
    let (mut a, mut b) = UnixStream::pair().unwrap();
    let server =
        thread::spawn(move || handshake_server(&mut b, &[KemScheme::MlKem512], &mut rng(5)));
    let client = handshake_client(&mut a, &[KemScheme::EcdhKem], &mut rng(6));
    assert!(matches!(client, Err(ChannelError::SchemeRejected) | Err(ChannelError::UnexpectedRecord)));
    assert!(matches!(server.join().unwrap(), Err(ChannelError::SchemeRejected)));
}

/// Read side that flips one bit at a chosen absolute byte offset.
struct BitFlip<S> {
    inner: S,
    offset: usize,
    seen: usize,
}

impl<S: Read> Read for BitFlip<S> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        if self.seen <= self.offset && self.offset < self.seen + n {
            buf[self.offset - self.seen] ^= 0x01;
        }
        self.seen += n;
        Ok(n)
    }
}

impl<S: Write> Write for BitFlip<S> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.inner.write(buf)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

#[test]
fn tampered_handshake_bytes_are_detected() {
    // Flip a bit in the server hello body (client side) at a few offsets:
    // inside the server random and inside the public key.
    for offset in [15usize, 40, 120] {
        let (a, mut b) = UnixStream::pair().unwrap();
        let server =
            thread::spawn(move || handshake_server(&mut b, &KemScheme::ALL, &mut rng(7)));
        let mut tampered = BitFlip { inner: a, offset, seen: 0 };
        let client = handshake_client(&mut tampered, &[KemScheme::MlKem512], &mut rng(8));
        let server = server.join().unwrap();
        assert!(client.is_err(), "client accepted tampered byte at offset {offset}");
        assert!(server.is_err(), "server accepted tampered byte at offset {offset}");
        assert!(
            matches!(server, Err(ChannelError::HandshakeTampered))
                || matches!(client, Err(ChannelError::HandshakeTampered)),
            "no side reported tampering for offset {offset}"
        );
    }
}

#[test]
fn nonces_never_repeat_across_many_frames() {
    let (mut a, mut b) = UnixStream::pair().unwrap();
    let server =
        thread::spawn(move || handshake_server(&mut b, &KemScheme::ALL, &mut rng(9)).unwrap());
    let mut client = handshake_client(&mut a, &[KemScheme::EcdhKem], &mut rng(10)).unwrap();
    let mut server = server.join().unwrap();

    let mut counters = std::collections::HashSet::new();
    for i in 0..10_000u64 {
        let frame = client.seal_frame(RecordType::Data, b"", &i.to_be_bytes()).unwrap();
        assert!(counters.insert(frame.counter), "counter reuse at frame {i}");
        assert_eq!(server.open_frame(&frame).unwrap(), i.to_be_bytes());
    }
}
