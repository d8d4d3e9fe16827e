mod common;

use bookbot_core::botsim::Direction;
use bookbot_core::circulation::replay;
use bookbot_gateway::engine::{BarcodeInput, Command, KioskAction, QrInput, Reply, Store};
use proptest::prelude::*;

const STUDENTS: [&str; 4] = ["grace2019", "alan2020", "ada2021", "nobody"];
const LOANS: [&str; 5] = ["L1", "L2", "L3", "L4", "L9"];
const BARCODES: [&str; 6] = [
    "9780262033848",
    "9780134685991",
    "9780321573513",
    "9781492078005",
    "9781118813003",
    "9780596517984",
];

#[derive(Debug, Clone)]
enum Step {
    Drive(Direction),
    Qr(usize),
    Barcode(usize),
    Act(usize, bool),
    Dock(bool),
    Unload,
    Drop,
    Ticks(u8),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        prop::sample::select(vec![Direction::N, Direction::S, Direction::E, Direction::W, Direction::Stop])
            .prop_map(Step::Drive),
        (0..STUDENTS.len()).prop_map(Step::Qr),
        (0..BARCODES.len()).prop_map(Step::Barcode),
        ((0..LOANS.len()), any::<bool>()).prop_map(|(l, s)| Step::Act(l, s)),
        any::<bool>().prop_map(Step::Dock),
        Just(Step::Unload),
        Just(Step::Drop),
        (1u8..60).prop_map(Step::Ticks),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn engine_invariants(steps in prop::collection::vec(step(), 1..40)) {
        let mut e = common::engine(11);
        let (scenario, seed) = common::campus();
        let mut session = String::new();
        let mut last_tick = 0;
        for s in steps {
            let cmd = match s {
                Step::Drive(d) => Command::Drive(d),
                Step::Qr(i) => Command::KioskQr(QrInput::Token(common::token_for(&e, STUDENTS[i], 300))),
                Step::Barcode(i) => Command::KioskBarcode {
                    session: session.clone(),
                    input: BarcodeInput::Digits(BARCODES[i].into()),
                },
                Step::Act(l, submit) => Command::KioskAction {
                    session: session.clone(),
                    loan_id: LOANS[l].into(),
                    action: if submit { KioskAction::Submit } else { KioskAction::Renew },
                },
                Step::Dock(d) => Command::Dock(d),
                Step::Unload => Command::Unload,
                Step::Drop => Command::DeviceDrop,
                Step::Ticks(n) => {
                    for _ in 0..n {
                        let out = e.tick();
                        if let Some(snap) = out.snapshot {
                            prop_assert!(snap.tick > last_tick);
                            last_tick = snap.tick;
                        }
                        let p = e.bot().pose;
                        prop_assert!(scenario.world.clearance(p.x, p.y, scenario.drive.bot_radius) >= -1e-9);
                    }
                    continue;
                }
            };
            if let Ok(Reply::KioskQr(r)) = e.execute(cmd) {
                session = r.session;
            }
            let snap = e.snapshot();
            let held: u32 = e.library().held_books().iter().map(|b| b.weight_grams).sum();
            prop_assert_eq!(snap.weight_g, held);
            prop_assert!(f64::from(held) <= e.library().threshold_grams());
        }
        let Store::Memory(events) = e.store() else { unreachable!() };
        let replayed = replay(&seed, events).unwrap();
        prop_assert_eq!(replayed.state(), e.library().state());
    }
}
