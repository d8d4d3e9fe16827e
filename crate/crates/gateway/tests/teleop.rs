mod common;

use std::net::SocketAddr;
use std::time::Duration;

use bookbot_core::teleop::{
    decode_frame, encode_frame, Frame, FrameError, HardwareMsg, Pin, AuthToken, CMD_HARDWARE, CMD_LOGIN, CMD_PING,
    CMD_RESPONSE,
};
use bookbot_gateway::engine::{Command, Reply};
use bookbot_gateway::runtime::{self, Hub};
use bookbot_gateway::teleop_server;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::time::timeout;

struct Server {
    addr: SocketAddr,
    hub: Hub,
    _stop: watch::Sender<bool>,
}

async fn server() -> Server {
    let engine = common::engine(9);
    let (stop, rx) = watch::channel(false);
    let (hub, _) = runtime::spawn(engine, Duration::from_millis(50), rx.clone());
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let token = AuthToken::new(common::TOKEN).unwrap();
    tokio::spawn(teleop_server::serve(listener, hub.clone(), token, rx));
    Server { addr, hub, _stop: stop }
}

struct Client {
    stream: TcpStream,
    buf: Vec<u8>,
}

impl Client {
    async fn connect(addr: SocketAddr) -> Client {
        Client {
            stream: TcpStream::connect(addr).await.unwrap(),
            buf: Vec::new(),
        }
    }

    async fn send(&mut self, command: u8, msg_id: u16, body: &[u8]) {
        self.stream.write_all(&encode_frame(command, msg_id, body).unwrap()).await.unwrap();
    }

    /// Next frame, or None on EOF.
    async fn recv(&mut self) -> Option<Frame> {
        loop {
            match decode_frame(&self.buf) {
                Ok((f, used)) => {
                    self.buf.drain(..used);
                    return Some(f);
                }
                Err(FrameError::NeedMoreBytes(_)) => {}
                Err(e) => panic!("{e}"),
            }
            let mut chunk = [0u8; 1024];
            let n = timeout(Duration::from_secs(5), self.stream.read(&mut chunk)).await.unwrap().unwrap();
            if n == 0 {
                return None;
            }
            self.buf.extend_from_slice(&chunk[..n]);
        }
    }

    /// Skips pin pushes until a frame with this msg_id arrives.
    async fn reply_to(&mut self, msg_id: u16) -> Frame {
        loop {
            let f = self.recv().await.expect("connection open");
            if f.msg_id == msg_id {
                return f;
            }
        }
    }

    async fn login(&mut self, role: &str) {
        let body = format!("{}\0{role}", common::TOKEN);
        self.send(CMD_LOGIN, 1, body.as_bytes()).await;
        assert_eq!(self.reply_to(1).await.status(), Some(0));
    }
}

#[tokio::test]
async fn login_and_ping() {
    let s = server().await;
    let mut c = Client::connect(s.addr).await;
    c.send(CMD_LOGIN, 1, b"wrong-token-wrong-token-wrong-to").await;
    assert_eq!(c.reply_to(1).await.status(), Some(1));
    c.login("app").await;
    c.send(CMD_PING, 2, b"").await;
    let f = c.reply_to(2).await;
    assert_eq!((f.command, f.status()), (CMD_RESPONSE, Some(0)));
}

#[tokio::test]
async fn pre_auth_frames_close_the_connection() {
    let s = server().await;
    let mut c = Client::connect(s.addr).await;
    c.send(CMD_HARDWARE, 7, &HardwareMsg::Write { pin: Pin::V0, value: "N".into() }.encode()).await;
    let f = c.recv().await.unwrap();
    assert_eq!((f.msg_id, f.status()), (7, Some(2)));
    assert!(c.recv().await.is_none());
    assert!(s.hub.latest().unwrap().motors.left == 0.0);
    let Reply::Pin { value, .. } = s.hub.execute(Command::ReadPin(Pin::V0)).await.unwrap() else {
        panic!()
    };
    assert_eq!(value, "STOP");
}

#[tokio::test]
async fn app_drives_through_v0() {
    let s = server().await;
    let mut app = Client::connect(s.addr).await;
    app.login("app").await;
    app.send(CMD_HARDWARE, 3, &HardwareMsg::Write { pin: Pin::V0, value: "N".into() }.encode()).await;
    assert_eq!(app.reply_to(3).await.status(), Some(0));
    let Reply::Pin { value, .. } = s.hub.execute(Command::ReadPin(Pin::V0)).await.unwrap() else {
        panic!()
    };
    assert_eq!(value, "N");
    // Apps may not write device pins.
    app.send(CMD_HARDWARE, 4, &HardwareMsg::Write { pin: Pin::V1, value: "12".into() }.encode()).await;
    assert_eq!(app.reply_to(4).await.status(), Some(4));
    app.send(CMD_HARDWARE, 5, &HardwareMsg::Read { pin: Pin::V4 }.encode()).await;
    let f = app.reply_to(5).await;
    assert_eq!(
        HardwareMsg::parse(&f.body).unwrap(),
        HardwareMsg::Write { pin: Pin::V4, value: "0".into() }
    );
}

#[tokio::test]
async fn device_writes_fan_out_to_every_app() {
    let s = server().await;
    let mut apps = Vec::new();
    for _ in 0..3 {
        let mut a = Client::connect(s.addr).await;
        a.login("app").await;
        apps.push(a);
    }
    let mut device = Client::connect(s.addr).await;
    device.login("device").await;
    let body = HardwareMsg::Write { pin: Pin::V1, value: "87".into() }.encode();
    device.send(CMD_HARDWARE, 9, &body).await;
    assert_eq!(device.reply_to(9).await.status(), Some(0));
    for a in &mut apps {
        loop {
            let f = a.recv().await.unwrap();
            if f.command == CMD_HARDWARE && f.body == body {
                break;
            }
        }
    }
}

#[tokio::test]
async fn device_drop_stops_motors() {
    let s = server().await;
    let mut device = Client::connect(s.addr).await;
    device.login("device").await;
    s.hub.execute(Command::Drive(bookbot_core::botsim::Direction::N)).await.unwrap();
    drop(device);
    let deadline = tokio::time::Instant::now() + Duration::from_secs(2);
    loop {
        let Reply::Pin { value, .. } = s.hub.execute(Command::ReadPin(Pin::V0)).await.unwrap() else {
            panic!()
        };
        if value == "STOP" {
            break;
        }
        assert!(tokio::time::Instant::now() < deadline, "bot still driving");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

#[tokio::test]
async fn oversize_frame_is_refused() {
    let s = server().await;
    let mut c = Client::connect(s.addr).await;
    c.login("app").await;
    let big = vec![b'x'; teleop_server::MAX_TELEOP_BODY + 1];
    c.send(CMD_HARDWARE, 11, &big).await;
    let f = c.reply_to(11).await;
    assert_eq!(f.status(), Some(5));
    while c.recv().await.is_some() {}
}
