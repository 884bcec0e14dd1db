use abr_bandit::harness::{run_session, PolicyKind, SessionConfig};
use abr_bandit::trace::{generate_adversarial, AdversarialSpec};

fn main() {
    let policy: PolicyKind = std::env::args().nth(1).unwrap().parse().unwrap();
    let seed: u32 = std::env::args().nth(2).map_or(1, |s| s.parse().unwrap());
    let spec = AdversarialSpec::default();
    let trace = generate_adversarial(&spec).unwrap();
    let r = run_session(&trace, policy, seed, &SessionConfig::default(), None).unwrap();
    for c in &r.records {
        println!(
            "{:>3} {:>7.1} {:?} {:?} {:>5} buf={:>5.1} rebuf={:>5.2} tput={:>5} n={} q={:.2} shock={}",
            c.chunk, c.request_clock_us as f64 / 1e6, spec.phase_at_us(c.request_clock_us),
            c.arm, c.bitrate_kbps, c.buffer_after_us as f64 / 1e6, c.rebuffer_s(),
            c.measured_throughput_kbps, c.reward_samples, c.qoe, c.shock_fired
        );
    }
    println!("cum {}", r.cumulative_qoe);
}
