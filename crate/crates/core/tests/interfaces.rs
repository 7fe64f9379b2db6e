use orbitmeter::frequency::{digit_block_frequency, Freq, FrequencyTrace, TRACE_HEADER};
use orbitmeter::orbit::{build_wild_prefix_with_targets, read_rle, write_rle, GrowthMode, LengthSchedule};
use orbitmeter::symbolic::{PeriodicWord, Tmc, Word};

#[test]
fn trace_csv_round_trips_exact_and_float_values() {
    let mut t = FrequencyTrace::new("[0]_1", "wild");
    t.push(1, 1.0, Some(Freq::new(1, 1).unwrap())).unwrap();
    t.push(3, 2.0 / 3.0, Some(Freq::new(2, 3).unwrap())).unwrap();
    t.push(7, 0.1 + 0.2, None).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,value,target,orbit_id");
    assert_eq!(text.lines().nth(2).unwrap(), "3,2/3,[0]_1,wild");
    let back = FrequencyTrace::read_csv(&buf[..]).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.points()[2].value, 0.1 + 0.2);
}

#[test]
fn trace_reader_enforces_schema() {
    assert!(FrequencyTrace::read_csv("n,value,target\n1,1,x\n".as_bytes()).is_err());
    assert!(FrequencyTrace::read_csv(TRACE_HEADER.join(",").as_bytes()).is_err());
    assert!(FrequencyTrace::read_csv("n,value,target,orbit_id\n5,0.5,x,o\n4,0.5,x,o\n".as_bytes()).is_err());
}

#[test]
fn rle_round_trip() {
    let z = vec![0, 0, 1, 2, 2, 2, 0];
    let mut buf = Vec::new();
    write_rle(&z, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap(), "rle-v1 7\n0 2\n1 1\n2 3\n0 1\n");
    assert_eq!(read_rle(&buf[..]).unwrap(), z);
}

#[test]
fn alternating_fixed_points_give_non_normal_digits() {
    let tmc = Tmc::full_shift(2);
    let targets: Vec<PeriodicWord> =
        ["0", "1"].iter().map(|s| PeriodicWord::new(s.parse().unwrap(), &tmc).unwrap()).collect();
    let s = LengthSchedule::new(1, GrowthMode::Constant(10)).unwrap();
    let z = build_wild_prefix_with_targets(&tmc, &s, &targets, s.horizon_through(5).unwrap()).unwrap();
    let zero: Word = "0".parse().unwrap();
    assert_eq!(digit_block_frequency(z.symbols(), &zero, 10).unwrap(), Freq::new(9, 10).unwrap());
    assert_eq!(digit_block_frequency(z.symbols(), &zero, 110).unwrap(), Freq::new(10, 110).unwrap());
    for n in 1..=5u64 {
        let ell = s.ell(n + 1).unwrap();
        let f = digit_block_frequency(z.symbols(), &zero, ell).unwrap();
        if n % 2 == 1 {
            assert!(f.at_least(9, 10), "n = {n}: {f}");
        } else {
            assert!(f.at_most(1, 10), "n = {n}: {f}");
        }
    }
}
