import argparse
from pathlib import Path

from skapca.harness import SweepSpec, emit_analytics, run_sweep, write_csv


def parser(description, trials):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--trials", type=int, default=trials, help="coherence blocks per point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=20261017)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    return p


def sweep_pair(base, axis, values, trials, workers, out_dir: Path, stem: str, metrics, plug_in="estimated"):
    """Empirical sweep and matching closed-form curves, one CSV each."""
    out_dir.mkdir(parents=True, exist_ok=True)
    table = run_sweep(SweepSpec(base, axis, tuple(values), trials, metrics, plug_in), workers)
    write_csv(table, out_dir / f"{stem}_empirical.csv")
    write_csv(emit_analytics(base, axis, values), out_dir / f"{stem}_analytic.csv")
    print(f"wrote {out_dir / stem}_{{empirical,analytic}}.csv")
