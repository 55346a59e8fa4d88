fn main() {
    let i = 1077usize;
    let layers = 2 + i % 4;
    let supernodes = 1 + (i / 4) % 3;
    let levels = 1 + (i / 12) % 3;
    let density = [0.2, 0.5, 0.8][(i / 36) % 3];
    let net = detcap::gen_random(layers, supernodes, levels, density, i as u64);
    // solve two iterations quietly, then trace the failing third
    let quiet = detcap::SolveOptions { shadow_checks: false };
    let mut committed = detcap::PathSet::empty();
    for _ in 0..2 {
        let out = detcap::mdfs_iteration(&net, &committed, &quiet).unwrap();
        assert!(out.found);
        committed = out.paths;
    }
    for (pi, p) in committed.paths.iter().enumerate() {
        let s: Vec<String> = p.iter().map(|e| e.to_string()).collect();
        eprintln!("committed path {pi}: {}", s.join(", "));
    }
    let loud = detcap::SolveOptions { shadow_checks: true };
    let out = detcap::mdfs_iteration(&net, &committed, &loud).unwrap();
    eprintln!("iter3: found={} stats={:?}", out.found, out.stats);
}
