//! Link prediction on a preferential-attachment graph, printing stage timings.
//!
//! cargo run --release -p persona-core --example synthetic_linkpred -- [nodes] [m] [threads]

use persona_core::generators::barabasi_albert;
use persona_core::linkpred::{run_experiment, EvalConfig, Method};
use persona_core::{rngs, Persona2VecConfig};

fn main() -> persona_core::Result<()> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let n = args.first().copied().unwrap_or(3863);
    let m = args.get(1).copied().unwrap_or(10);
    let threads = args.get(2).copied().unwrap_or(4);
    let g = barabasi_albert(n, m, &mut rngs::stream(0, 0, &[]));
    println!("graph: {} nodes, {} edges", g.n_nodes(), g.n_edges());
    let cfg = Persona2VecConfig {
        threads,
        ..Persona2VecConfig::default()
    };
    for method in [Method::Baseline, Method::Persona] {
        let eval = EvalConfig {
            method,
            ..EvalConfig::default()
        };
        let r = run_experiment(&g, &cfg, &eval, 1)?;
        println!(
            "{:?}: auc {:.4}, personas {}, total {:.1}s, timings {:?}",
            method, r.auc, r.n_personas, r.total_secs, r.timings
        );
    }
    Ok(())
}
