//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use bookbot_core::botsim::Direction;
use bookbot_core::circulation::{
    mint_token, Book, CirculationEvent, EventLog, Library, Loan, LoanStatus, Seed, Student,
    RENEWAL_PERIOD_MS,
};
use bookbot_core::circulation::eventlog::replay_file;
use bookbot_core::geolocation::{random_shell_satellites, synthesize_obs, trilaterate, GeoError};
use bookbot_core::scenario::Scenario;
use bookbot_core::symbology::gf256::Gf256;
use bookbot_core::symbology::qr::layout::{codeword_modules, BlockSpec};
use bookbot_core::symbology::qr::byte_capacity;
use bookbot_core::symbology::{
    decode_ean13, decode_qr, ean13_check_digit, encode_ean13, encode_qr, rs_decode, rs_encode, write_pbm, write_pgm,
    EcLevel,
};
use bookbot_core::teleop::{decode_frame, AuthToken, Effect, Frame, Session, CMD_LOGIN};
use bookbot_core::weighscale::{Decision, PayloadPolicy};
use bookbot_gateway::engine::{
    BarcodeInput, Command, Engine, EngineOptions, KioskAction, QrInput, Reply, Store, TICK_MS,
};
use nalgebra::Vector3;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOKEN: &str = "0123456789abcdef0123456789abcdef";

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(started: Instant, limit: Duration, detail: String) -> Outcome {
    let took = started.elapsed();
    ensure!(took < limit, "{detail}; took {took:.2?}, limit {limit:?}");
    Ok(format!("{detail}; {took:.2?}"))
}

fn campus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/campus")
}

/// Flips every bit selected by `pattern` in the placed codeword `index`.
fn corrupt_codeword(m: &mut bookbot_core::symbology::BitMatrix, modules: &[(usize, usize); 8], pattern: u8) {
    for (bit, &(r, c)) in modules.iter().enumerate() {
        if pattern & (0x80 >> bit) != 0 {
            m.toggle(r, c);
        }
    }
}

fn symbology_round_trip() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xea13);
    for i in 0..1000 {
        let body: Vec<u8> = (0..12).map(|_| rng.random_range(0..10)).collect();
        let check = ean13_check_digit(&body).map_err(|e| e.to_string())?;
        let text: String = body.iter().chain([&check]).map(|d| char::from(b'0' + d)).collect();
        let width = rng.random_range(1..=4);
        let scan = encode_ean13(&text, width).map_err(|e| format!("encode {text}: {e}"))?;
        let fwd = decode_ean13(&scan).map_err(|e| format!("ean #{i} {text}: {e}"))?;
        let rev = decode_ean13(&scan.reversed()).map_err(|e| format!("ean #{i} {text} reversed: {e}"))?;
        ensure!(fwd.data == text.as_bytes() && rev.data == text.as_bytes(), "ean #{i} {text} misread");
    }

    let mut symbols = 0;
    for version in 1..=4u8 {
        for ec in EcLevel::ALL {
            let spec = BlockSpec::new(version, ec);
            let blocks = spec.interleaved_indices();
            let modules = codeword_modules(version);
            let budget = spec.ec_per_block / 2;
            for n in 0..200 {
                let len = rng.random_range(0..=byte_capacity(version, ec));
                let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                let mut m = encode_qr(&payload, version, ec).map_err(|e| format!("v{version}-{ec} encode: {e}"))?;
                let clean = decode_qr(&m).map_err(|e| format!("v{version}-{ec} #{n} clean: {e}"))?;
                ensure!(clean.data == payload, "v{version}-{ec} #{n} clean payload differs");
                for block in &blocks {
                    for k in sample(&mut rng, block.len(), budget) {
                        corrupt_codeword(&mut m, &modules[block[k]], rng.random_range(1..=255));
                    }
                }
                let dirty = decode_qr(&m).map_err(|e| format!("v{version}-{ec} #{n} with {budget} errors/block: {e}"))?;
                ensure!(dirty.data == payload, "v{version}-{ec} #{n} corrupted payload differs");
                symbols += 1;
            }
        }
    }
    within(
        started,
        Duration::from_secs(30),
        format!("1000 EAN-13 both directions, {symbols} QR symbols clean and at floor(nsym/2) errors per block"),
    )
}

/// Shift-and-add multiply modulo x^8 + x^4 + x^3 + x^2 + 1.
fn oracle_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1d;
        }
        b >>= 1;
    }
    p
}

fn oracle_eval(codeword: &[u8], x: u8) -> u8 {
    codeword.iter().fold(0u8, |acc, &c| oracle_mul(acc, x) ^ c)
}

fn gf_rs_laws() -> Outcome {
    let g = |v: u8| Gf256(v);
    for a in 0..=255u8 {
        ensure!(g(a) + g(a) == g(0), "{a} + {a} != 0");
        ensure!(g(a) * g(1) == g(a) && g(a) * g(0) == g(0), "identity law fails at {a}");
        if a != 0 {
            let inv = g(a).inverse().ok_or(format!("{a} has no inverse"))?;
            ensure!(g(a) * inv == g(1), "{a} * inverse != 1");
        }
        for b in 0..=255u8 {
            let ab = g(a) * g(b);
            ensure!(ab.0 == oracle_mul(a, b), "{a}*{b}: table {} vs oracle {}", ab.0, oracle_mul(a, b));
            ensure!(ab == g(b) * g(a), "{a}*{b} not commutative");
            if b != 0 {
                ensure!((g(a) / g(b)) * g(b) == g(a), "({a}/{b})*{b} != {a}");
            }
        }
    }
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            let (ga, gb) = (g(a), g(b));
            let ab = ga * gb;
            for c in 0..=255u8 {
                let gc = g(c);
                ensure!(ab * gc == ga * (gb * gc), "associativity fails at {a},{b},{c}");
                ensure!(ga * (gb + gc) == ab + ga * gc, "distributivity fails at {a},{b},{c}");
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut corrected = 0usize;
    for trial in 0..1000 {
        let nsym = rng.random_range(2..=40);
        let k = rng.random_range(1..=255 - nsym);
        let data: Vec<u8> = (0..k).map(|_| rng.random()).collect();
        let cw = rs_encode(&data, nsym).map_err(|e| e.to_string())?;
        // Generator roots are α^0..α^(nsym-1); check with the oracle arithmetic.
        let mut alpha_j = 1u8;
        for j in 0..nsym {
            ensure!(oracle_eval(&cw, alpha_j) == 0, "trial {trial}: codeword not zero at alpha^{j}");
            alpha_j = oracle_mul(alpha_j, 2);
        }
        let errors = rng.random_range(0..=nsym / 2);
        let mut bad = cw.clone();
        for pos in sample(&mut rng, bad.len(), errors) {
            bad[pos] ^= rng.random_range(1..=255u8);
        }
        let fixed = rs_decode(&bad, nsym).map_err(|e| format!("trial {trial} ({errors} errors, nsym {nsym}): {e}"))?;
        ensure!(fixed == data, "trial {trial}: decoded data differs");
        corrected += errors;
    }
    Ok(format!(
        "mul/inverse/division checked on all pairs against a shift-and-add oracle, associativity and distributivity on all triples; 1000 RS trials, {corrected} byte errors corrected, 0 failures"
    ))
}

fn trilateration() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let mut worst_err = 0f64;
    let mut worst_bias = 0f64;
    let mut worst_iters = 0;
    for scene in 0..500 {
        let n = rng.random_range(5..=12);
        let truth = Vector3::new(
            rng.random_range(-1000.0..1000.0),
            rng.random_range(-1000.0..1000.0),
            rng.random_range(-50.0..50.0),
        );
        let bias = rng.random_range(-100.0..100.0);
        let sats = random_shell_satellites(&mut rng, n, 20_000.0, 15.0);
        let obs = synthesize_obs(&truth, bias, &sats, 0.0, 0).map_err(|e| e.to_string())?;
        let fix = trilaterate(&obs, true).map_err(|e| format!("scene {scene}: {e}"))?;
        let err = (fix.position - truth).norm();
        let bias_err = (fix.clock_bias_m - bias).abs();
        ensure!(err < 1e-6 && bias_err < 1e-6, "scene {scene}: position error {err:e} m, bias error {bias_err:e} m");
        ensure!(fix.iterations <= 20, "scene {scene}: {} iterations", fix.iterations);
        worst_err = worst_err.max(err);
        worst_bias = worst_bias.max(bias_err);
        worst_iters = worst_iters.max(fix.iterations);
    }
    let two = synthesize_obs(
        &Vector3::zeros(),
        0.0,
        &[Vector3::new(2e4, 0.0, 0.0), Vector3::new(0.0, 2e4, 0.0)],
        0.0,
        0,
    )
    .map_err(|e| e.to_string())?;
    for solve_bias in [false, true] {
        ensure!(
            matches!(trilaterate(&two, solve_bias), Err(GeoError::InsufficientSatellites { got: 2, .. })),
            "2-satellite input accepted (solve_bias = {solve_bias})"
        );
    }
    within(
        started,
        Duration::from_secs(5),
        format!("500 scenes with 5 to 12 satellites, worst error {worst_err:.1e} m, worst bias error {worst_bias:.1e} m, worst {worst_iters} iterations; 2 satellites rejected in both modes"),
    )
}

fn threshold() -> Outcome {
    let mut decisions = Vec::new();
    for total in [4999.0, 5000.0, 5001.0] {
        let mut p = PayloadPolicy::default();
        decisions.push(p.accept_book(4000.0, total - 4000.0));
    }
    ensure!(
        decisions == [Decision::Accept, Decision::Accept, Decision::RejectThreshold],
        "4999/5000/5001 gave {decisions:?}"
    );

    // One bay filling up: the warning switches on at the first rejection only.
    let mut p = PayloadPolicy::default();
    let mut total = 4000.0;
    let mut transitions = 0;
    let mut warn = p.warn_state;
    for grams in [999.0, 1.0, 1.0, 1.0, 500.0, 1.0] {
        if p.accept_book(total, grams) == Decision::Accept {
            total += grams;
        }
        if p.warn_state != warn {
            transitions += 1;
            warn = p.warn_state;
        }
    }
    ensure!(total == 5000.0 && warn && transitions == 1, "total {total}, warn {warn}, {transitions} transitions");

    // Same boundary through circulation.
    for (extra, expect_ok) in [(999, true), (1000, true), (1001, false)] {
        let seed = Seed {
            books: vec![book("9780262033848", 4000), book("9780134685991", extra)],
            students: vec![student("s1")],
            loans: vec![loan("A", "s1", "9780262033848", 0), loan("B", "s1", "9780134685991", 0)],
        };
        let mut lib = Library::new(&seed);
        let mut sink = Vec::new();
        let s = student("s1");
        let scan = |code: &str| bookbot_core::symbology::ScanResult {
            data: code.as_bytes().to_vec(),
            symbol_type: bookbot_core::symbology::SymbolType::Ean13,
            rect: bookbot_core::symbology::Rect { left: 0, top: 0, width: 1, height: 1 },
            polygon: Vec::new(),
        };
        lib.submit("A", &s, "qr", &scan("9780262033848"), None, 1, "bot", &mut sink)
            .map_err(|e| e.to_string())?;
        let r = lib.submit("B", &s, "qr", &scan("9780134685991"), None, 2, "bot", &mut sink);
        ensure!(r.is_ok() == expect_ok, "library total {}: {r:?}", 4000 + extra);
        ensure!(lib.warn_state() == !expect_ok, "library warn_state wrong at {}", 4000 + extra);
    }
    Ok("4999/5000/5001 g accept/accept/reject in the policy and in circulation; warn_state switched once".into())
}

fn book(code: &str, grams: u32) -> Book {
    Book {
        barcode: code.into(),
        title: code.into(),
        weight_grams: grams,
    }
}

fn student(id: &str) -> Student {
    Student {
        student_id: id.into(),
        display_name: id.into(),
        hostel: "H".into(),
    }
}

fn loan(id: &str, student: &str, code: &str, issued_at: i64) -> Loan {
    Loan {
        loan_id: id.into(),
        student_id: student.into(),
        barcode: code.into(),
        issued_at,
        due_at: issued_at + 14 * 86_400_000,
        status: LoanStatus::Active,
        renewal_count: 0,
    }
}

fn renewal() -> Outcome {
    let issued = 1_704_067_200_000i64; // 2024-01-01
    let seed = Seed {
        books: vec![book("9780262033848", 800)],
        students: vec![student("s1")],
        loans: vec![loan("A", "s1", "9780262033848", issued)],
    };
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let seen = std::cell::Cell::new(0);
    let result = runner.run(&(issued..issued + 400 * 86_400_000i64), |now| {
        let mut lib = Library::new(&seed);
        let mut sink = Vec::new();
        let ev = lib
            .renew("A", &student("s1"), "qr", now, "bot", &mut sink)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let CirculationEvent::ReIssued { due_at, timestamp, .. } = ev else {
            return Err(TestCaseError::fail("not a re-issued event"));
        };
        prop_assert_eq!(timestamp, now);
        prop_assert_eq!(due_at - now, 604_800_000);
        prop_assert_eq!(lib.loan("A").unwrap().due_at - now, RENEWAL_PERIOD_MS);
        seen.set(seen.get() + 1);
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok(format!("{} random action times, due_at - action = 604800 s exactly", seen.get()))
}

fn fig8_scenario() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log_path = dir.path().join("events.jsonl");
    let scenario = Scenario::load(&campus_dir().join("scenario.toml")).map_err(|e| e.to_string())?;
    let seed = scenario.load_seed().map_err(|e| e.to_string())?;
    let clock = scenario.clock_start.ok_or("campus scenario lacks clock_start")?;
    let (log, existing) = EventLog::open(&log_path).map_err(|e| e.to_string())?;
    let mut engine = Engine::new(
        scenario,
        &seed,
        Store::File(log),
        &existing,
        EngineOptions {
            seed: 8,
            clock_start_ms: clock,
            secret: TOKEN.as_bytes().to_vec(),
        },
    )
    .map_err(|e| e.to_string())?;

    let mut expected = Vec::new();
    for (who, loan_id, code) in [("grace2019", "L1", "9780262033848"), ("alan2020", "L2", "9780134685991")] {
        let token = mint_token(who, engine.now() / 1000 + 120, TOKEN.as_bytes()).map_err(|e| e.to_string())?;
        let pbm = write_pbm(&encode_qr(token.as_bytes(), 3, EcLevel::M).map_err(|e| e.to_string())?);
        let session = match engine.execute(Command::KioskQr(QrInput::Pbm(pbm))) {
            Ok(Reply::KioskQr(r)) => r.session,
            other => return Err(format!("{who} qr: {other:?}")),
        };
        engine.tick();
        let pgm = write_pgm(&encode_ean13(code, 3).map_err(|e| e.to_string())?);
        engine
            .execute(Command::KioskBarcode {
                session: session.clone(),
                input: BarcodeInput::Pgm(pgm),
            })
            .map_err(|e| format!("{who} barcode: {e}"))?;
        engine.tick();
        engine
            .execute(Command::KioskAction {
                session,
                loan_id: loan_id.into(),
                action: KioskAction::Submit,
            })
            .map_err(|e| format!("{who} submit: {e}"))?;
        for _ in 0..20 {
            engine.tick();
        }
        expected.push((token, code));
    }
    engine.execute(Command::Drive(Direction::N)).map_err(|e| e.to_string())?;
    for _ in 0..40 {
        engine.tick();
    }

    let text = std::fs::read_to_string(&log_path).map_err(|e| e.to_string())?;
    let docs: Vec<serde_json::Value> = text
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let submitted: Vec<_> = docs.iter().filter(|d| d["event"] == "submitted").collect();
    ensure!(submitted.len() == 2 && docs.len() == 2, "{} documents, {} submitted", docs.len(), submitted.len());
    for (doc, (token, code)) in submitted.iter().zip(&expected) {
        ensure!(doc["student_qr_data"] == token.as_str(), "qr text {} != {token}", doc["student_qr_data"]);
        ensure!(doc["book_barcode"] == *code, "barcode {} != {code}", doc["book_barcode"]);
        ensure!(doc["bot_id"] == "bookbot-01" && doc["timestamp"].is_i64(), "missing bot_id/timestamp in {doc}");
    }

    let replayed = replay_file(&log_path, &seed).map_err(|e| e.to_string())?;
    ensure!(replayed.state() == engine.library().state(), "replayed state differs from live state");
    ensure!(replayed.state().held.len() == 2, "held books: {:?}", replayed.state().held);
    Ok("2 submitted documents with decoded QR text and barcode; replayed state equals live state".into())
}

fn protocol_robustness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf22);
    let valid = Frame::new(0x14, 7, b"vw\0V0\0N".to_vec()).encode().map_err(|e| e.to_string())?;
    let mut decoded = 0u32;
    let mut buf = Vec::with_capacity(512);
    for i in 0..1_000_000u32 {
        buf.clear();
        if i % 2 == 0 {
            let len = rng.random_range(0..64);
            buf.extend((0..len).map(|_| rng.random::<u8>()));
        } else {
            buf.extend_from_slice(&valid);
            for _ in 0..rng.random_range(1..4) {
                let at = rng.random_range(0..buf.len());
                buf[at] = rng.random();
            }
            buf.truncate(rng.random_range(0..=buf.len()));
        }
        let r = catch_unwind(AssertUnwindSafe(|| decode_frame(&buf)));
        match r {
            Err(_) => return Err(format!("decode_frame panicked on {buf:02x?}")),
            Ok(Ok((f, used))) => {
                ensure!(used == 5 + f.body.len() && used <= buf.len(), "bad consumed length {used}");
                decoded += 1;
            }
            Ok(Err(_)) => {}
        }
    }

    // Before login, nothing but replies and close may come out of a session.
    let token = AuthToken::new(TOKEN).map_err(|e| e.to_string())?;
    let mut runner = TestRunner::new(Config {
        cases: 2000,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    });
    let frames = prop::collection::vec(
        (any::<u8>(), any::<u16>(), prop::collection::vec(any::<u8>(), 0..48)),
        1..12,
    );
    runner
        .run(&frames, |frames| {
            let mut s = Session::new(0);
            for (t, (cmd, id, body)) in frames.into_iter().enumerate() {
                let f = Frame::new(cmd, id, body);
                let was_auth = s.is_authenticated();
                for e in s.handle(&f, t as u64, &token) {
                    prop_assert!(
                        was_auth || matches!(e, Effect::Reply(_) | Effect::Close),
                        "side effect {:?} before login",
                        e
                    );
                }
                prop_assert!(was_auth || !s.is_authenticated() || (f.command == CMD_LOGIN && token.matches(&f.body[..32.min(f.body.len())])));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    // Every ordering of up to four frames from a representative alphabet.
    let alphabet = [
        Frame::new(CMD_LOGIN, 1, TOKEN.as_bytes().to_vec()),
        Frame::new(CMD_LOGIN, 1, format!("{TOKEN}\0app").into_bytes()),
        Frame::new(CMD_LOGIN, 1, b"not-the-token".to_vec()),
        Frame::new(CMD_LOGIN, 1, format!("{TOKEN}\0admin").into_bytes()),
        Frame::new(0x06, 2, Vec::new()),
        Frame::new(0x14, 3, b"vw\0V0\0N".to_vec()),
        Frame::new(0x14, 4, b"vw\0V1\087".to_vec()),
        Frame::new(0x14, 5, b"vr\0V2".to_vec()),
        Frame::new(0x7f, 6, vec![0xff]),
    ];
    let n = alphabet.len();
    let mut orderings = 0;
    for len in 1..=4u32 {
        for code in 0..n.pow(len) {
            let mut s = Session::new(0);
            let mut c = code;
            for _ in 0..len {
                let was_auth = s.is_authenticated();
                for e in s.handle(&alphabet[c % n], 0, &token) {
                    ensure!(
                        was_auth || matches!(e, Effect::Reply(_) | Effect::Close),
                        "ordering {code}/{len}: {e:?} before login"
                    );
                }
                c /= n;
            }
            orderings += 1;
        }
    }

    // Device drop and heartbeat loss both stop the motors on the next tick.
    for cause in ["disconnect", "heartbeat"] {
        let mut engine = campus_engine(1)?;
        let mut dev = Session::new(0);
        let login = Frame::new(CMD_LOGIN, 1, format!("{TOKEN}\0device").into_bytes());
        dev.handle(&login, 0, &token);
        engine.execute(Command::Drive(Direction::N)).map_err(|e| e.to_string())?;
        engine.tick();
        let effects = match cause {
            "disconnect" => dev.disconnect(),
            _ => {
                ensure!(dev.poll_timeout(10_000).is_empty(), "timed out at exactly 10 s");
                dev.poll_timeout(10_001)
            }
        };
        ensure!(effects.contains(&Effect::FailSafeStop), "{cause}: no fail-safe effect");
        engine.execute(Command::DeviceDrop).map_err(|e| e.to_string())?;
        let before = engine.bot().pose;
        let t0 = engine.now();
        engine.tick();
        ensure!(engine.motors().is_stopped(), "{cause}: motors still running after one tick");
        ensure!(engine.bot().pose == before, "{cause}: bot moved after drop");
        ensure!(engine.now() - t0 == TICK_MS, "tick is not 50 ms");
    }
    Ok(format!(
        "1000000 frames decoded without panic ({decoded} well-formed); {orderings} exhaustive and 2000 random pre-auth frame sequences with no side effects; fail-safe stop within one 50 ms tick"
    ))
}

fn campus_engine(seed: u64) -> Result<Engine, String> {
    let scenario = Scenario::load(&campus_dir().join("scenario.toml")).map_err(|e| e.to_string())?;
    let lib_seed = scenario.load_seed().map_err(|e| e.to_string())?;
    let clock = scenario.clock_start.ok_or("no clock_start")?;
    Engine::new(
        scenario,
        &lib_seed,
        Store::Memory(Vec::new()),
        &[],
        EngineOptions {
            seed,
            clock_start_ms: clock,
            secret: TOKEN.as_bytes().to_vec(),
        },
    )
    .map_err(|e| e.to_string())
}

fn serve_script(dir: &Path, tag: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let store = dir.join(format!("{tag}.events.jsonl"));
    let telemetry = dir.join(format!("{tag}.telemetry.jsonl"));
    let out = Process::new(env!("CARGO_BIN_EXE_bookbot"))
        .arg("serve")
        .arg("--scenario")
        .arg(campus_dir().join("scenario.toml"))
        .args(["--seed", "7", "--script"])
        .arg(campus_dir().join("two_students.script"))
        .arg("--store")
        .arg(&store)
        .arg("--telemetry-out")
        .arg(&telemetry)
        .arg("--replies-out")
        .arg(dir.join(format!("{tag}.replies.jsonl")))
        .env("BOOKBOT_TOKEN", TOKEN)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "serve failed: {}", String::from_utf8_lossy(&out.stderr));
    let read = |p: &Path| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
    Ok((read(&store)?, read(&telemetry)?))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (log_a, tel_a) = serve_script(dir.path(), "a")?;
    let (log_b, tel_b) = serve_script(dir.path(), "b")?;
    ensure!(!log_a.is_empty() && !tel_a.is_empty(), "runs produced no output");
    ensure!(log_a == log_b, "event logs differ");
    ensure!(tel_a == tel_b, "telemetry logs differ");
    Ok(format!(
        "two seed-7 script runs: {} event log bytes and {} telemetry bytes identical",
        log_a.len(),
        tel_a.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("symbology round-trip", symbology_round_trip),
        ("GF(256)/RS oracle equivalence", gf_rs_laws),
        ("trilateration", trilateration),
        ("payload threshold", threshold),
        ("renewal period", renewal),
        ("two-book submission log and replay", fig8_scenario),
        ("protocol robustness", protocol_robustness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
