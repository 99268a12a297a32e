use traffic_cce::game_core::Environment;
use traffic_cce::traffic_env::*;

fn main() {
    let cfg = ScenarioConfig::default_for(MapKind::Merge, 3);
    println!("spawns: {:?}", cfg.spawn);
    println!("goals: {:?}", cfg.goals);
    let mut env = TrafficEnv::new(cfg.clone()).unwrap();
    env.reset(derive_seed(0, 0)).unwrap();
    for t in 0..100 {
        if env.episode_done() { break; }
        let state = env.state().unwrap().clone();
        let mut acts = Vec::new();
        for i in 0..3 {
            acts.push(rule_based_driver(&env, &state, i, &env.driver_params));
        }
        let (out, _) = env.step(&acts).unwrap();
        let s = env.state().unwrap();
        if t % 5 == 0 || out.collided.iter().any(|&c| c) {
            for i in 0..3 {
                let v = &s.vehicles[i];
                print!("t={t} a{i}: x={:.1} y={:.1} v={:.1} prog={:.1} d={:.2} c={} | ",
                    v.x, v.y, v.speed, s.progress[i], out.min_distances[i], out.collided[i] as u8);
            }
            println!();
        }
        if out.collided.iter().any(|&c| c) { println!("CRASH at t={t}"); break; }
    }
}
