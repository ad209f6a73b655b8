use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

use ransteer_core::attack::AdversarialReport;
use ransteer_core::harness::{
    answer, decision_from_answer, run_closed_loop, MessageBody, MessageType, RanSide, RicSide, RunMetrics, RunMode,
    RunOutput, RunRecorder, ScenarioConfig, WireMessage,
};
use ransteer_core::ric::KpiStore;

use crate::framing::{read_frame, write_frame};
use crate::{Error, Result};

const IO_TIMEOUT: Duration = Duration::from_secs(120);

fn protocol(msg: String) -> Error {
    ransteer_core::Error::Protocol(msg).into()
}

fn next<S: Read>(stream: &mut S, who: &str) -> Result<WireMessage> {
    read_frame(stream)?.ok_or_else(|| {
        Error::Connection(io::Error::new(io::ErrorKind::UnexpectedEof, format!("{who} closed the connection without END")))
    })
}

/// What the RIC end knows once the session is over.
#[derive(Debug)]
pub struct RicSummary {
    pub batches: u64,
    pub store: KpiStore,
}

/// Answers KPI batches until the RAN sends END, which is echoed before returning.
pub fn serve_ric<S: Read + Write>(stream: &mut S, config: &ScenarioConfig) -> Result<RicSummary> {
    let mut ric = RicSide::new(config);
    let mut batches = 0;
    loop {
        let msg = next(stream, "RAN")?;
        match msg.body {
            MessageBody::Batch(batch) => {
                let t = batch.iteration;
                if msg.iteration != t {
                    return Err(protocol(format!("envelope iteration {} carries batch {t}", msg.iteration)));
                }
                let decision = ric.on_batch(batch)?;
                for reply in answer(t, &decision) {
                    write_frame(stream, &reply)?;
                }
                batches += 1;
            }
            MessageBody::Empty {} if msg.kind == MessageType::End => {
                write_frame(stream, &WireMessage::end(msg.iteration))?;
                log::debug!("RIC session closed after {batches} batches");
                return Ok(RicSummary { batches, store: ric.into_store() });
            }
            _ => return Err(protocol(format!("{:?} sent to the RIC at iteration {}", msg.kind, msg.iteration))),
        }
    }
}

/// Runs the RAN end of a split scenario over `stream` and returns its
/// metrics and crafted reports.
pub fn drive_ran<S: Read + Write>(stream: &mut S, config: &ScenarioConfig) -> Result<(RunMetrics, Vec<AdversarialReport>)> {
    config.validate()?;
    let mut ran = RanSide::new(config)?;
    let mut rec = RunRecorder::new(config);
    let max_answer = config.topology.ue_count + 1;
    let mut last = 0;
    for _ in 0..config.iterations {
        let emission = ran.emit()?;
        let t = emission.reported.iteration;
        write_frame(stream, &WireMessage::batch(emission.reported.clone()))?;
        let mut reply = Vec::new();
        loop {
            let msg = next(stream, "RIC")?;
            let done = msg.kind == MessageType::Ack;
            reply.push(msg);
            if done {
                break;
            }
            if reply.len() >= max_answer {
                return Err(protocol(format!("answer for {t} exceeds {max_answer} messages without an ACK")));
            }
        }
        let decision = decision_from_answer(t, &reply)?;
        ran.apply(t, &decision.handovers)?;
        rec.record(&emission, &decision);
        last = t;
    }
    write_frame(stream, &WireMessage::end(last))?;
    let bye = next(stream, "RIC")?;
    if bye.kind != MessageType::End {
        return Err(protocol(format!("expected END, got {:?}", bye.kind)));
    }
    Ok(rec.into_parts())
}

fn tuned(stream: &TcpStream) -> Result<()> {
    stream.set_nodelay(true).map_err(Error::Connection)?;
    stream.set_read_timeout(Some(IO_TIMEOUT)).map_err(Error::Connection)?;
    stream.set_write_timeout(Some(IO_TIMEOUT)).map_err(Error::Connection)
}

/// Accepts one RAN connection on `listener` and serves it.
pub fn serve_one(listener: &TcpListener, config: &ScenarioConfig) -> Result<RicSummary> {
    let (mut stream, peer) = listener.accept().map_err(Error::Connection)?;
    log::info!("RAN connected from {peer}");
    tuned(&stream)?;
    serve_ric(&mut stream, config)
}

/// Connects to a RIC at `addr` and drives the RAN end.
pub fn connect_ran(addr: SocketAddr, config: &ScenarioConfig) -> Result<(RunMetrics, Vec<AdversarialReport>)> {
    let mut stream = TcpStream::connect(addr).map_err(Error::Connection)?;
    tuned(&stream)?;
    drive_ran(&mut stream, config)
}

/// Split mode on the loopback interface: the RIC serves from its own thread
/// and the two ends only share the socket.
pub fn run_split(config: &ScenarioConfig) -> Result<RunOutput> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).map_err(Error::Connection)?;
    let addr = listener.local_addr().map_err(Error::Connection)?;
    let ric_config = config.clone();
    let ric = thread::spawn(move || serve_one(&listener, &ric_config));
    let ran = connect_ran(addr, config);
    let ric = ric.join().map_err(|_| Error::Peer("RIC thread panicked".into()))?;
    match (ran, ric) {
        (Ok((metrics, crafted)), Ok(summary)) => Ok(RunOutput { metrics, store: summary.store, crafted }),
        (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
        (Err(ran), Err(ric)) => {
            log::error!("RIC side failed: {ric}");
            Err(ran)
        }
    }
}

/// Runs `config` in the mode it asks for.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    match config.mode {
        RunMode::InProcess => Ok(run_closed_loop(config)?),
        RunMode::Split => run_split(config),
    }
}
